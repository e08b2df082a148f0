//! Dynamically declared record schemas and values.

use std::collections::BTreeMap;

use super::payload::{decode_list, encode_list, Element};
use super::{Container, DecodeError, EncodeError, FieldKey, PayloadReader, SchemaError};

#[derive(Debug, Clone, PartialEq)]
pub enum FieldType {
    Bool,
    I32,
    I64,
    U32,
    U64,
    F64,
    Str,
    Record(Schema),
    List(Box<FieldType>),
}

impl FieldType {
    pub fn default_value(&self) -> Value {
        match self {
            FieldType::Bool => Value::Bool(false),
            FieldType::I32 => Value::I32(0),
            FieldType::I64 => Value::I64(0),
            FieldType::U32 => Value::U32(0),
            FieldType::U64 => Value::U64(0),
            FieldType::F64 => Value::F64(0.0),
            FieldType::Str => Value::Str(String::new()),
            FieldType::Record(s) => Value::Record(s.default_record()),
            FieldType::List(_) => Value::List(Vec::new()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Bool(bool),
    I32(i32),
    I64(i64),
    U32(u32),
    U64(u64),
    F64(f64),
    Str(String),
    Record(Record),
    List(Vec<Value>),
}

impl Value {
    pub fn conforms_to(&self, ty: &FieldType) -> bool {
        match (self, ty) {
            (Value::Bool(_), FieldType::Bool)
            | (Value::I32(_), FieldType::I32)
            | (Value::I64(_), FieldType::I64)
            | (Value::U32(_), FieldType::U32)
            | (Value::U64(_), FieldType::U64)
            | (Value::F64(_), FieldType::F64)
            | (Value::Str(_), FieldType::Str) => true,
            (Value::Record(r), FieldType::Record(s)) => s.conforms(r),
            (Value::List(items), FieldType::List(elem)) => items.iter().all(|v| v.conforms_to(elem)),
            _ => false,
        }
    }
}

/// Named field values. Equality ignores insertion order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Record {
    fields: BTreeMap<String, Value>,
}

impl Record {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: impl Into<String>, value: Value) -> Self {
        self.set(name, value);
        self
    }

    pub fn set(&mut self, name: impl Into<String>, value: Value) {
        self.fields.insert(name.into(), value);
    }

    pub fn get(&self, name: &str) -> Option<&Value> {
        self.fields.get(name)
    }

    pub fn remove(&mut self, name: &str) -> Option<Value> {
        self.fields.remove(name)
    }

    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Value)> {
        self.fields.iter().map(|(k, v)| (k.as_str(), v))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldDef {
    pub name: String,
    pub key: FieldKey,
    pub ty: FieldType,
    pub default: Value,
}

/// An ordered set of typed fields with collision-free keys.
#[derive(Debug, Clone, PartialEq)]
pub struct Schema {
    name: String,
    fields: Vec<FieldDef>,
}

pub struct SchemaBuilder {
    name: String,
    fields: Vec<(String, FieldType, Option<Value>)>,
}

impl SchemaBuilder {
    pub fn field(mut self, name: impl Into<String>, ty: FieldType) -> Self {
        self.fields.push((name.into(), ty, None));
        self
    }

    pub fn field_with_default(mut self, name: impl Into<String>, ty: FieldType, default: Value) -> Self {
        self.fields.push((name.into(), ty, Some(default)));
        self
    }

    pub fn build(self) -> Result<Schema, SchemaError> {
        let mut defs: Vec<FieldDef> = Vec::with_capacity(self.fields.len());
        for (name, ty, default) in self.fields {
            if name.is_empty() {
                return Err(SchemaError::EmptyName);
            }
            if !name.is_ascii() {
                return Err(SchemaError::NonAscii(name));
            }
            let key = FieldKey::of(&name);
            if let Some(prev) = defs.iter().find(|d| d.key == key) {
                return Err(if prev.name == name {
                    SchemaError::DuplicateField(name)
                } else {
                    SchemaError::KeyCollision {
                        first: prev.name.clone(),
                        second: name,
                        key,
                    }
                });
            }
            let default = match default {
                Some(v) if !v.conforms_to(&ty) => return Err(SchemaError::DefaultMismatch(name)),
                Some(v) => v,
                None => ty.default_value(),
            };
            defs.push(FieldDef {
                name,
                key,
                ty,
                default,
            });
        }
        Ok(Schema {
            name: self.name,
            fields: defs,
        })
    }
}

impl Schema {
    pub fn builder(name: impl Into<String>) -> SchemaBuilder {
        SchemaBuilder {
            name: name.into(),
            fields: Vec::new(),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn fields(&self) -> &[FieldDef] {
        &self.fields
    }

    pub fn field(&self, name: &str) -> Option<&FieldDef> {
        self.fields.iter().find(|f| f.name == name)
    }

    pub fn default_record(&self) -> Record {
        let mut r = Record::new();
        for f in &self.fields {
            r.set(f.name.clone(), f.default.clone());
        }
        r
    }

    /// True if `record` has exactly this schema's fields with matching types.
    pub fn conforms(&self, record: &Record) -> bool {
        record.len() == self.fields.len()
            && self
                .fields
                .iter()
                .all(|f| record.get(&f.name).is_some_and(|v| v.conforms_to(&f.ty)))
    }

    /// The record restricted to this schema's fields.
    pub fn project(&self, record: &Record) -> Record {
        let mut out = Record::new();
        for f in &self.fields {
            let v = record.get(&f.name).cloned().unwrap_or_else(|| f.default.clone());
            out.set(f.name.clone(), v);
        }
        out
    }

    pub fn encode_payload(&self, record: &Record) -> Result<Vec<u8>, EncodeError> {
        self.encode_at(record, "")
    }

    fn encode_at(&self, record: &Record, path: &str) -> Result<Vec<u8>, EncodeError> {
        if let Some((extra, _)) = record.iter().find(|(n, _)| self.field(n).is_none()) {
            return Err(EncodeError {
                field: format!("{path}{extra}"),
                reason: format!("not declared in schema `{}`", self.name),
            });
        }
        let mut out = Vec::new();
        for f in &self.fields {
            let field_path = format!("{path}{}", f.name);
            let value = record.get(&f.name).ok_or_else(|| EncodeError {
                field: field_path.clone(),
                reason: "missing value".into(),
            })?;
            let bytes = encode_value(value, &f.ty, &field_path)?;
            let len = u32::try_from(bytes.len()).map_err(|_| EncodeError {
                field: field_path.clone(),
                reason: "value exceeds 4 GiB".into(),
            })?;
            out.extend_from_slice(&f.key.0.to_le_bytes());
            out.extend_from_slice(&len.to_le_bytes());
            out.extend_from_slice(&bytes);
        }
        Ok(out)
    }

    pub fn decode_payload(&self, payload: &[u8]) -> Result<Record, DecodeError> {
        self.decode_reader(&PayloadReader::new(payload)?)
    }

    fn decode_reader(&self, reader: &PayloadReader<'_>) -> Result<Record, DecodeError> {
        let mut out = Record::new();
        for f in &self.fields {
            let value = match reader.raw(&f.name) {
                None => f.default.clone(),
                Some((bytes, offset)) => decode_value(bytes, offset, &f.ty, &f.name)?,
            };
            out.set(f.name.clone(), value);
        }
        Ok(out)
    }

    pub fn encode_frame(&self, record: &Record, data_type_id: u32, sent_timestamp: i64) -> Result<Vec<u8>, EncodeError> {
        Ok(Container::new(data_type_id, sent_timestamp, self.encode_payload(record)?).encode())
    }

    pub fn decode_frame(&self, frame: &[u8]) -> Result<Record, DecodeError> {
        let container = Container::decode(frame)?;
        self.decode_reader(&container.reader()?)
    }
}

fn scalar<T: Element>(v: &T) -> Vec<u8> {
    let mut b = Vec::new();
    v.encode(&mut b);
    b
}

fn encode_value(value: &Value, ty: &FieldType, path: &str) -> Result<Vec<u8>, EncodeError> {
    let mismatch = || EncodeError {
        field: path.to_string(),
        reason: format!("value {value:?} does not match type {ty:?}"),
    };
    Ok(match (value, ty) {
        (Value::Bool(v), FieldType::Bool) => scalar(v),
        (Value::I32(v), FieldType::I32) => scalar(v),
        (Value::I64(v), FieldType::I64) => scalar(v),
        (Value::U32(v), FieldType::U32) => scalar(v),
        (Value::U64(v), FieldType::U64) => scalar(v),
        (Value::F64(v), FieldType::F64) => scalar(v),
        (Value::Str(v), FieldType::Str) => v.as_bytes().to_vec(),
        (Value::Record(r), FieldType::Record(s)) => s.encode_at(r, &format!("{path}."))?,
        (Value::List(items), FieldType::List(elem)) => {
            let encoded = items
                .iter()
                .enumerate()
                .map(|(i, v)| encode_value(v, elem, &format!("{path}[{i}]")))
                .collect::<Result<Vec<_>, _>>()?;
            encode_list(encoded.iter().map(Vec::as_slice))
        }
        _ => return Err(mismatch()),
    })
}

fn decode_value(bytes: &[u8], offset: usize, ty: &FieldType, path: &str) -> Result<Value, DecodeError> {
    fn elem<T: Element>(bytes: &[u8], offset: usize, path: &str) -> Result<T, DecodeError> {
        T::decode(bytes).map_err(|reason| DecodeError::BadField {
            field: path.to_string(),
            offset,
            reason,
        })
    }
    Ok(match ty {
        FieldType::Bool => Value::Bool(elem(bytes, offset, path)?),
        FieldType::I32 => Value::I32(elem(bytes, offset, path)?),
        FieldType::I64 => Value::I64(elem(bytes, offset, path)?),
        FieldType::U32 => Value::U32(elem(bytes, offset, path)?),
        FieldType::U64 => Value::U64(elem(bytes, offset, path)?),
        FieldType::F64 => Value::F64(elem(bytes, offset, path)?),
        FieldType::Str => Value::Str(elem(bytes, offset, path)?),
        FieldType::Record(s) => Value::Record(s.decode_reader(&PayloadReader::with_base(bytes, offset)?)?),
        FieldType::List(inner) => {
            let items = decode_list(bytes).map_err(|(rel, reason)| DecodeError::BadField {
                field: path.to_string(),
                offset: offset + rel,
                reason,
            })?;
            Value::List(
                items
                    .into_iter()
                    .enumerate()
                    .map(|(i, (b, rel))| decode_value(b, offset + rel, inner, &format!("{path}[{i}]")))
                    .collect::<Result<_, _>>()?,
            )
        }
    })
}
