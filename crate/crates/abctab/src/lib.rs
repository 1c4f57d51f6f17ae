//! A laboratory for homomorphic arithmetic lookup tables under the ABC
//! type discipline: table construction, an encrypted ALU with a typed
//! expression language, algebraic codebook attacks with a reliability
//! judge, and exhaustive searches over embeddings and constant-valued
//! expressions.

pub mod alu;
pub mod attack;
pub mod error;
pub mod expr;
pub mod fileformat;
pub mod forge;
pub mod model;
pub mod search;

pub use error::Error;
pub use model::{AbcType, Cipher, Codebook, Decoded, OpKind, SchemeKind, TableSet};
