use std::fmt;

use serde::{Deserialize, Serialize};

/// A non-fatal finding located in the text being processed.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Diagnostic {
    pub offset: usize,
    pub message: String,
}

impl Diagnostic {
    pub fn new(offset: usize, message: impl Into<String>) -> Self {
        Diagnostic { offset, message: message.into() }
    }

    pub fn in_document(self, doc_id: &str) -> Warning {
        Warning { doc_id: doc_id.to_owned(), offset: self.offset, message: self.message }
    }
}

/// A [`Diagnostic`] attributed to a document.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Warning {
    pub doc_id: String,
    pub offset: usize,
    pub message: String,
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}: {}", self.doc_id, self.offset, self.message)
    }
}
