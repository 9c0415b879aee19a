//! Command-line front end and local HTTP service for the quiver engine.

pub mod cli;
pub mod service;
pub mod summary;

use std::fmt;

use qmut::document::DocumentError;
use qmut::dynamics::DynamicsError;
use qmut::gadgets::GadgetError;
use qmut::QuiverError;

/// A domain error with a stable machine-readable code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Failure {
    pub code: String,
    pub message: String,
}

impl Failure {
    pub fn new(code: &str, message: impl Into<String>) -> Self {
        Failure { code: code.to_string(), message: message.into() }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.code, self.message)
    }
}

impl std::error::Error for Failure {}

macro_rules! coded {
    ($($t:ty),*) => {$(
        impl From<$t> for Failure {
            fn from(e: $t) -> Self {
                Failure::new(e.code(), e.to_string())
            }
        }
    )*};
}

coded!(QuiverError, DocumentError, GadgetError, DynamicsError);

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::new("Io", e.to_string())
    }
}
