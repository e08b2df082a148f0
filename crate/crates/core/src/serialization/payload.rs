use std::collections::HashMap;

use super::{DecodeError, FieldKey};

/// A value with a fixed standalone encoding, usable as a field or list element.
pub trait Element: Sized {
    fn encode(&self, out: &mut Vec<u8>);
    fn decode(bytes: &[u8]) -> Result<Self, String>;
}

fn fixed<const N: usize>(bytes: &[u8]) -> Result<[u8; N], String> {
    bytes
        .try_into()
        .map_err(|_| format!("expected {} bytes, found {}", N, bytes.len()))
}

impl Element for bool {
    fn encode(&self, out: &mut Vec<u8>) {
        out.push(*self as u8);
    }
    fn decode(bytes: &[u8]) -> Result<Self, String> {
        match fixed::<1>(bytes)?[0] {
            0 => Ok(false),
            1 => Ok(true),
            b => Err(format!("invalid bool byte {b}")),
        }
    }
}

macro_rules! le_element {
    ($($ty:ty),*) => {$(
        impl Element for $ty {
            fn encode(&self, out: &mut Vec<u8>) {
                out.extend_from_slice(&self.to_le_bytes());
            }
            fn decode(bytes: &[u8]) -> Result<Self, String> {
                Ok(<$ty>::from_le_bytes(fixed(bytes)?))
            }
        }
    )*};
}

le_element!(i32, i64, u32, u64, f64);

impl Element for String {
    fn encode(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(self.as_bytes());
    }
    fn decode(bytes: &[u8]) -> Result<Self, String> {
        std::str::from_utf8(bytes)
            .map(str::to_owned)
            .map_err(|e| format!("invalid UTF-8: {e}"))
    }
}

/// Encodes a list body: 32-bit count followed by length-prefixed elements.
pub fn encode_list<'a, I>(elements: I) -> Vec<u8>
where
    I: IntoIterator<Item = &'a [u8]>,
{
    let mut out = vec![0u8; 4];
    let mut count = 0u32;
    for e in elements {
        out.extend_from_slice(&(e.len() as u32).to_le_bytes());
        out.extend_from_slice(e);
        count += 1;
    }
    out[..4].copy_from_slice(&count.to_le_bytes());
    out
}

/// Splits a list body into its elements, each paired with its offset
/// relative to `bytes`. Errors carry the offending relative offset.
pub fn decode_list(bytes: &[u8]) -> Result<Vec<(&[u8], usize)>, (usize, String)> {
    let count = read_u32(bytes, 0).ok_or((0, "list count truncated".to_string()))?;
    let mut pos = 4;
    let mut out = Vec::with_capacity((count as usize).min(bytes.len() / 4));
    for i in 0..count {
        let len = read_u32(bytes, pos)
            .ok_or((pos, format!("list element {i} length truncated")))? as usize;
        let start = pos + 4;
        let end = start
            .checked_add(len)
            .filter(|&e| e <= bytes.len())
            .ok_or((pos, format!("list element {i} overruns the field")))?;
        out.push((&bytes[start..end], start));
        pos = end;
    }
    if pos != bytes.len() {
        return Err((pos, "trailing bytes after list".to_string()));
    }
    Ok(out)
}

pub(crate) fn read_u32(bytes: &[u8], at: usize) -> Option<u32> {
    bytes
        .get(at..at.checked_add(4)?)
        .map(|b| u32::from_le_bytes(b.try_into().unwrap()))
}

/// Builds a payload field by field.
#[derive(Debug, Clone, Default)]
pub struct PayloadWriter {
    buf: Vec<u8>,
    #[cfg(debug_assertions)]
    keys: Vec<u32>,
}

impl PayloadWriter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn put_bytes(&mut self, name: &str, bytes: &[u8]) -> &mut Self {
        let key = FieldKey::of(name);
        #[cfg(debug_assertions)]
        {
            debug_assert!(!self.keys.contains(&key.0), "duplicate field `{name}`");
            self.keys.push(key.0);
        }
        self.buf.extend_from_slice(&key.0.to_le_bytes());
        self.buf.extend_from_slice(&(bytes.len() as u32).to_le_bytes());
        self.buf.extend_from_slice(bytes);
        self
    }

    pub fn put<T: Element>(&mut self, name: &str, value: &T) -> &mut Self {
        let mut bytes = Vec::new();
        value.encode(&mut bytes);
        self.put_bytes(name, &bytes)
    }

    pub fn put_str(&mut self, name: &str, value: &str) -> &mut Self {
        self.put_bytes(name, value.as_bytes())
    }

    pub fn put_record(&mut self, name: &str, nested: PayloadWriter) -> &mut Self {
        self.put_bytes(name, &nested.finish())
    }

    pub fn put_list<T: Element>(&mut self, name: &str, items: &[T]) -> &mut Self {
        let encoded: Vec<Vec<u8>> = items
            .iter()
            .map(|item| {
                let mut b = Vec::new();
                item.encode(&mut b);
                b
            })
            .collect();
        self.put_bytes(name, &encode_list(encoded.iter().map(Vec::as_slice)))
    }

    pub fn put_record_list<I>(&mut self, name: &str, items: I) -> &mut Self
    where
        I: IntoIterator<Item = PayloadWriter>,
    {
        let encoded: Vec<Vec<u8>> = items.into_iter().map(PayloadWriter::finish).collect();
        self.put_bytes(name, &encode_list(encoded.iter().map(Vec::as_slice)))
    }

    pub fn len(&self) -> usize {
        self.buf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buf.is_empty()
    }

    pub fn finish(self) -> Vec<u8> {
        self.buf
    }
}

/// Keyed random access over one payload level.
#[derive(Debug, Clone)]
pub struct PayloadReader<'a> {
    bytes: &'a [u8],
    base: usize,
    index: HashMap<u32, (usize, usize)>,
}

impl<'a> PayloadReader<'a> {
    pub fn new(bytes: &'a [u8]) -> Result<Self, DecodeError> {
        Self::with_base(bytes, 0)
    }

    /// `base` is the absolute offset of `bytes`, used in error reports.
    pub fn with_base(bytes: &'a [u8], base: usize) -> Result<Self, DecodeError> {
        let mut index = HashMap::new();
        let mut pos = 0;
        while pos < bytes.len() {
            let header = bytes.get(pos..pos + 8).ok_or(DecodeError::Malformed {
                offset: base + pos,
                reason: "field header truncated".into(),
            })?;
            let key = u32::from_le_bytes(header[..4].try_into().unwrap());
            let len = u32::from_le_bytes(header[4..].try_into().unwrap()) as usize;
            let start = pos + 8;
            let end = start
                .checked_add(len)
                .filter(|&e| e <= bytes.len())
                .ok_or(DecodeError::Malformed {
                    offset: base + pos,
                    reason: format!(
                        "field {} of length {len} overruns the payload",
                        FieldKey(key)
                    ),
                })?;
            if index.insert(key, (start, len)).is_some() {
                return Err(DecodeError::Malformed {
                    offset: base + pos,
                    reason: format!("duplicate field key {}", FieldKey(key)),
                });
            }
            pos = end;
        }
        Ok(Self { bytes, base, index })
    }

    pub fn field_count(&self) -> usize {
        self.index.len()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.index.contains_key(&FieldKey::of(name).0)
    }

    /// Raw field bytes and their absolute offset.
    pub fn raw(&self, name: &str) -> Option<(&'a [u8], usize)> {
        self.index
            .get(&FieldKey::of(name).0)
            .map(|&(start, len)| (&self.bytes[start..start + len], self.base + start))
    }

    pub fn get<T: Element>(&self, name: &str) -> Result<Option<T>, DecodeError> {
        match self.raw(name) {
            None => Ok(None),
            Some((bytes, offset)) => T::decode(bytes).map(Some).map_err(|reason| {
                DecodeError::BadField {
                    field: name.to_string(),
                    offset,
                    reason,
                }
            }),
        }
    }

    pub fn get_or<T: Element>(&self, name: &str, default: T) -> Result<T, DecodeError> {
        Ok(self.get(name)?.unwrap_or(default))
    }

    /// Like [`get`](Self::get) but a missing field is an error.
    pub fn require<T: Element>(&self, name: &str) -> Result<T, DecodeError> {
        self.get(name)?.ok_or_else(|| DecodeError::BadField {
            field: name.to_string(),
            offset: self.base,
            reason: "required field missing".into(),
        })
    }

    pub fn record(&self, name: &str) -> Result<Option<PayloadReader<'a>>, DecodeError> {
        match self.raw(name) {
            None => Ok(None),
            Some((bytes, offset)) => PayloadReader::with_base(bytes, offset).map(Some),
        }
    }

    pub fn list_raw(&self, name: &str) -> Result<Option<Vec<(&'a [u8], usize)>>, DecodeError> {
        match self.raw(name) {
            None => Ok(None),
            Some((bytes, offset)) => decode_list(bytes)
                .map(|items| {
                    Some(
                        items
                            .into_iter()
                            .map(|(b, rel)| (b, offset + rel))
                            .collect(),
                    )
                })
                .map_err(|(rel, reason)| DecodeError::BadField {
                    field: name.to_string(),
                    offset: offset + rel,
                    reason,
                }),
        }
    }

    pub fn list<T: Element>(&self, name: &str) -> Result<Option<Vec<T>>, DecodeError> {
        let Some(items) = self.list_raw(name)? else {
            return Ok(None);
        };
        items
            .into_iter()
            .map(|(bytes, offset)| {
                T::decode(bytes).map_err(|reason| DecodeError::BadField {
                    field: name.to_string(),
                    offset,
                    reason,
                })
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Some)
    }

    pub fn record_list(&self, name: &str) -> Result<Option<Vec<PayloadReader<'a>>>, DecodeError> {
        let Some(items) = self.list_raw(name)? else {
            return Ok(None);
        };
        items
            .into_iter()
            .map(|(bytes, offset)| PayloadReader::with_base(bytes, offset))
            .collect::<Result<Vec<_>, _>>()
            .map(Some)
    }
}
