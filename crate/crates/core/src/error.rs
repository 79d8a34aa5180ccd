use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("invalid version {text:?}: {segment}: {message}")]
    Version {
        text: String,
        segment: &'static str,
        message: String,
    },
    #[error("dependency entry {index} ({entry:?}): {message}")]
    Depends {
        index: usize,
        entry: String,
        message: String,
    },
    #[error("range constraint {index} ({text:?}): {message}")]
    Range {
        index: usize,
        text: String,
        message: String,
    },
}

impl ParseError {
    pub(crate) fn version(text: &str, segment: &'static str, message: impl Into<String>) -> Self {
        ParseError::Version {
            text: text.to_string(),
            segment,
            message: message.into(),
        }
    }
}

/// Failure to load one of the declarative input files.
#[derive(Debug, Error)]
pub enum LoadError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: malformed JSON: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}: {pointer}: {message}")]
    Schema {
        path: PathBuf,
        pointer: String,
        message: String,
    },
    #[error("{path}: {pointer}: duplicate symbol {key}")]
    DuplicateSymbol {
        path: PathBuf,
        pointer: String,
        key: String,
    },
    #[error("{path}: {source}")]
    Elf {
        path: PathBuf,
        #[source]
        source: ElfError,
    },
}

impl LoadError {
    pub(crate) fn schema(
        path: impl Into<PathBuf>,
        pointer: impl Into<String>,
        message: impl Into<String>,
    ) -> Self {
        LoadError::Schema {
            path: path.into(),
            pointer: pointer.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ElfError {
    #[error("not an ELF file (bad magic)")]
    BadMagic,
    #[error("unsupported ELF class {0} (only ELF64 is supported)")]
    UnsupportedClass(u8),
    #[error("unsupported data encoding {0} (only little-endian is supported)")]
    UnsupportedEncoding(u8),
    #[error("truncated {what}: need {needed} bytes at offset {offset}, file has {len}")]
    Truncated {
        what: &'static str,
        offset: u64,
        needed: u64,
        len: usize,
    },
    #[error("string table offset {0} out of range")]
    BadString(u32),
    #[error("symbol {name:?} refers to unknown version index {index}")]
    UnknownVersionIndex { name: String, index: u16 },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AbiError {
    #[error("cannot diff {left} against {right}: different libraries")]
    LibraryMismatch { left: String, right: String },
    #[error("unknown type {0:?}")]
    UnknownType(String),
}
