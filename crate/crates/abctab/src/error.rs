use thiserror::Error;

use crate::model::{AbcType, Cipher, SchemeKind};

#[derive(Debug, Error)]
pub enum Error {
    #[error("plain residue {value} out of range for modulus {modulus}")]
    ResidueOutOfRange { value: u64, modulus: usize },

    #[error("cipher value {value} outside cipherspace of size {size}")]
    CipherOutOfRange { value: Cipher, size: usize },

    #[error("type {ty} is not a coding class of scheme {scheme}")]
    TypeNotInScheme { ty: AbcType, scheme: SchemeKind },

    #[error("expression is not validly typed")]
    IllTyped,

    #[error("unbound variable `{0}`")]
    UnboundVariable(String),

    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },

    #[error("invalid parameter: {0}")]
    Param(String),

    #[error("guard exceeded: {0}")]
    Guard(String),

    #[error("safe fill could not be repaired (seed {seed}): {msg}")]
    Unrepairable { seed: u64, msg: String },

    #[error("bad table file at line {line}: {msg}")]
    Format { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code contract: 1 property failure, 2 usage, 3 guard.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Guard(_) => 3,
            Error::Param(_) => 2,
            _ => 1,
        }
    }
}
