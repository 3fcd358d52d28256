//! Percent-encoding of URIs embedded in path segments and file names.

use percent_encoding::{percent_decode_str, utf8_percent_encode, AsciiSet, NON_ALPHANUMERIC};

const COMPONENT: &AsciiSet = &NON_ALPHANUMERIC
    .remove(b'-')
    .remove(b'_')
    .remove(b'.')
    .remove(b'~');

/// Encodes `s` so it fits in a single path segment or file name.
pub fn encode_component(s: &str) -> String {
    utf8_percent_encode(s, COMPONENT).to_string()
}

/// Inverse of [`encode_component`]; `None` if the result is not UTF-8.
pub fn decode_component(s: &str) -> Option<String> {
    percent_decode_str(s)
        .decode_utf8()
        .ok()
        .map(|c| c.into_owned())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let uri = "http://lanlsource.lanl.gov/hello?x=1&y=a b#frag";
        let enc = encode_component(uri);
        assert!(!enc.contains('/') && !enc.contains('?') && !enc.contains(' '));
        assert_eq!(decode_component(&enc).unwrap(), uri);
        assert_eq!(
            decode_component("http://plain/path").unwrap(),
            "http://plain/path"
        );
    }
}
