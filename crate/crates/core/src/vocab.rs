//! IRIs for the vocabularies used in annotation graphs and TimeMaps.

pub const RDF_TYPE: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";
pub const RDF_VALUE: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#value";
pub const XSD_DATETIME: &str = "http://www.w3.org/2001/XMLSchema#dateTime";

pub mod oac {
    pub const NS: &str = "http://www.openannotation.org/ns/";

    pub const ANNOTATION: &str = "http://www.openannotation.org/ns/Annotation";
    pub const CONTEXT: &str = "http://www.openannotation.org/ns/Context";
    pub const SEGMENT_DESCRIPTION: &str = "http://www.openannotation.org/ns/SegmentDescription";
    pub const TRANSCRIPTION: &str = "http://www.openannotation.org/ns/Transcription";

    pub const HAS_CONTENT: &str = "http://www.openannotation.org/ns/hasContent";
    pub const HAS_TARGET: &str = "http://www.openannotation.org/ns/hasTarget";
    pub const PREDICATE: &str = "http://www.openannotation.org/ns/predicate";
    pub const ANNOTATES: &str = "http://www.openannotation.org/ns/annotates";
    pub const HAS_TARGET_CONTEXT: &str = "http://www.openannotation.org/ns/hasTargetContext";
    pub const HAS_CONTENT_CONTEXT: &str = "http://www.openannotation.org/ns/hasContentContext";
    pub const CONTEXT_ABOUT: &str = "http://www.openannotation.org/ns/contextAbout";
    pub const HAS_SEGMENT_DESCRIPTION: &str =
        "http://www.openannotation.org/ns/hasSegmentDescription";
    pub const WHEN: &str = "http://www.openannotation.org/ns/when";
    pub const TRANSCRIBES: &str = "http://www.openannotation.org/ns/transcribes";
}

/// Memento TimeMap terms. The namespace is a stand-in; change it here only.
pub mod mem {
    pub const NS: &str = "http://chronomark.invalid/memento/ns#";

    pub const ORIGINAL_RESOURCE: &str = "http://chronomark.invalid/memento/ns#OriginalResource";
    pub const MEMENTO: &str = "http://chronomark.invalid/memento/ns#Memento";
    pub const TIME_SPAN: &str = "http://chronomark.invalid/memento/ns#TimeSpan";
    pub const MEMENTO_FOR: &str = "http://chronomark.invalid/memento/ns#mementoFor";
    pub const DATETIME: &str = "http://chronomark.invalid/memento/ns#datetime";
    pub const VALID_OVER: &str = "http://chronomark.invalid/memento/ns#validOver";
    pub const OBSERVED_OVER: &str = "http://chronomark.invalid/memento/ns#observedOver";
    pub const OBSERVATIONS: &str = "http://chronomark.invalid/memento/ns#observations";
    pub const START: &str = "http://chronomark.invalid/memento/ns#start";
    pub const END: &str = "http://chronomark.invalid/memento/ns#end";
}
