//! Queryable binary serialization.
//!
//! Every record is encoded as a flat list of fields, each introduced by a
//! 32-bit key derived from the field name and a 32-bit byte length:
//!
//! ```text
//! ┌──────────┬──────────┬────────────────┐
//! │ key (4B) │ len (4B) │ bytes (len B)  │  ... repeated
//! └──────────┴──────────┴────────────────┘
//! ```
//!
//! Readers build a key index over the payload and look fields up by key, so
//! field order does not matter and unknown fields are skipped. A field that
//! the reader expects but the payload lacks takes the reader's default.
//!
//! Encodings (all little-endian): `bool` is one byte (0/1), integers are
//! fixed width, `f64` is IEEE-754, strings are raw UTF-8 sized by the field
//! header, nested records are a nested payload with their own key space, and
//! lists are a 32-bit count followed by `len`-prefixed elements.

mod container;
mod crc;
mod payload;
mod schema;

pub use container::{Container, SerializedField, FRAME_HEADER_LEN, FRAME_MAGIC};
pub use crc::crc32;
pub use payload::{decode_list, encode_list, Element, PayloadReader, PayloadWriter};
pub use schema::{FieldDef, FieldType, Record, Schema, SchemaBuilder, Value};

use std::fmt;

use thiserror::Error;

/// Name-derived field identifier (CRC-32 of the ASCII field name).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FieldKey(pub u32);

impl FieldKey {
    /// Key of `name`. The empty name hashes to zero; schemas reject it.
    pub fn of(name: &str) -> FieldKey {
        FieldKey(crc32(name.as_bytes()))
    }
}

impl fmt::Display for FieldKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "0x{:08x}", self.0)
    }
}

/// Shorthand for [`FieldKey::of`].
pub fn field_key(name: &str) -> FieldKey {
    FieldKey::of(name)
}

/// Errors raised while declaring a schema.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SchemaError {
    #[error("field name must not be empty")]
    EmptyName,
    #[error("field name `{0}` is not ASCII")]
    NonAscii(String),
    #[error("duplicate field `{0}`")]
    DuplicateField(String),
    #[error("fields `{first}` and `{second}` collide on key {key}")]
    KeyCollision {
        first: String,
        second: String,
        key: FieldKey,
    },
    #[error("default for field `{0}` does not match its type")]
    DefaultMismatch(String),
}

/// Errors raised while encoding a record.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("cannot encode field `{field}`: {reason}")]
pub struct EncodeError {
    pub field: String,
    pub reason: String,
}

/// Errors raised while decoding a frame or payload. Offsets are byte
/// offsets from the start of the buffer handed to the decoder.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecodeError {
    #[error("bad frame magic 0x{found:08x} at byte offset 0")]
    BadMagic { found: u32 },
    #[error("truncated frame at byte offset {offset}: need {need} bytes, have {have}")]
    Truncated {
        offset: usize,
        need: usize,
        have: usize,
    },
    #[error("malformed payload at byte offset {offset}: {reason}")]
    Malformed { offset: usize, reason: String },
    #[error("field `{field}` at byte offset {offset}: {reason}")]
    BadField {
        field: String,
        offset: usize,
        reason: String,
    },
    #[error("expected container type {expected}, got {found}")]
    WrongType { expected: u32, found: u32 },
}
