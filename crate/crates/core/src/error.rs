use thiserror::Error;

use crate::corpus::{ConceptId, VideoId};
use crate::navigation::Level;

/// Failures while reading one of the three input artifacts.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("malformed XML at line {line}, column {column}: {message}")]
    Xml {
        line: u32,
        column: u32,
        message: String,
    },
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("{0}")]
    Invalid(String),
}

impl ParseError {
    pub(crate) fn line(line: usize, message: impl Into<String>) -> Self {
        ParseError::Line {
            line,
            message: message.into(),
        }
    }

    pub(crate) fn invalid(message: impl Into<String>) -> Self {
        ParseError::Invalid(message.into())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("unknown concept {0}")]
    UnknownConcept(ConceptId),
    #[error("unknown video {0}")]
    UnknownVideo(VideoId),
    #[error("unknown context {0}")]
    UnknownContext(u32),
    #[error("concept {0} is not an ontology node")]
    UnknownNode(ConceptId),
    #[error("{action} is not allowed at level {level}")]
    InvalidTransition { action: &'static str, level: Level },
    #[error("concept {concept} is neither in context {context} nor in the similar-concept panel")]
    ConceptNotReachable { concept: ConceptId, context: u32 },
    #[error("at root: navigation history is empty")]
    AtRoot,
    #[error("nothing to select: focus {focus} is outside a list of {len} items")]
    FocusOutOfRange { focus: usize, len: usize },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl Error {
    pub(crate) fn invalid(message: impl Into<String>) -> Self {
        Error::InvalidInput(message.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
