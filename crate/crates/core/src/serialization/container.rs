use super::payload::read_u32;
use super::{DecodeError, FieldKey, PayloadReader};

/// Frame magic, "HESP" read big-endian.
pub const FRAME_MAGIC: u32 = 0x4845_5350;
/// magic + dataTypeId + sentTimestamp + payloadLength.
pub const FRAME_HEADER_LEN: usize = 20;

/// Typed message envelope. The payload holds the serialized fields.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Container {
    pub data_type_id: u32,
    /// Microseconds, simulation or wall clock depending on the transport.
    pub sent_timestamp: i64,
    pub payload: Vec<u8>,
}

/// One `key ‖ length ‖ bytes` entry of a payload.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SerializedField<'a> {
    pub key: FieldKey,
    pub bytes: &'a [u8],
}

impl Container {
    pub fn new(data_type_id: u32, sent_timestamp: i64, payload: Vec<u8>) -> Self {
        Self {
            data_type_id,
            sent_timestamp,
            payload,
        }
    }

    /// Reassembles a payload from fields, in the order given.
    pub fn from_fields(data_type_id: u32, sent_timestamp: i64, fields: &[SerializedField<'_>]) -> Self {
        let mut payload = Vec::new();
        for f in fields {
            payload.extend_from_slice(&f.key.0.to_le_bytes());
            payload.extend_from_slice(&(f.bytes.len() as u32).to_le_bytes());
            payload.extend_from_slice(f.bytes);
        }
        Self::new(data_type_id, sent_timestamp, payload)
    }

    pub fn frame_len(&self) -> usize {
        FRAME_HEADER_LEN + self.payload.len()
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.frame_len());
        self.encode_into(&mut out);
        out
    }

    pub fn encode_into(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&FRAME_MAGIC.to_le_bytes());
        out.extend_from_slice(&self.data_type_id.to_le_bytes());
        out.extend_from_slice(&self.sent_timestamp.to_le_bytes());
        out.extend_from_slice(&(self.payload.len() as u32).to_le_bytes());
        out.extend_from_slice(&self.payload);
    }

    /// Decodes exactly one frame; trailing bytes are an error.
    pub fn decode(bytes: &[u8]) -> Result<Self, DecodeError> {
        let (container, used) = Self::decode_prefix(bytes)?;
        if used != bytes.len() {
            return Err(DecodeError::Malformed {
                offset: used,
                reason: format!("{} trailing bytes after frame", bytes.len() - used),
            });
        }
        Ok(container)
    }

    /// Decodes the frame at the start of `bytes`, returning it with the
    /// number of bytes consumed.
    pub fn decode_prefix(bytes: &[u8]) -> Result<(Self, usize), DecodeError> {
        if bytes.len() < FRAME_HEADER_LEN {
            if let Some(magic) = read_u32(bytes, 0) {
                if magic != FRAME_MAGIC {
                    return Err(DecodeError::BadMagic { found: magic });
                }
            }
            return Err(DecodeError::Truncated {
                offset: 0,
                need: FRAME_HEADER_LEN,
                have: bytes.len(),
            });
        }
        let magic = read_u32(bytes, 0).unwrap();
        if magic != FRAME_MAGIC {
            return Err(DecodeError::BadMagic { found: magic });
        }
        let data_type_id = read_u32(bytes, 4).unwrap();
        let sent_timestamp = i64::from_le_bytes(bytes[8..16].try_into().unwrap());
        let payload_len = read_u32(bytes, 16).unwrap() as usize;
        let end = FRAME_HEADER_LEN + payload_len;
        if bytes.len() < end {
            return Err(DecodeError::Truncated {
                offset: FRAME_HEADER_LEN,
                need: payload_len,
                have: bytes.len() - FRAME_HEADER_LEN,
            });
        }
        let payload = &bytes[FRAME_HEADER_LEN..end];
        // Structural check only: every field header must fit.
        PayloadReader::with_base(payload, FRAME_HEADER_LEN)?;
        Ok((Self::new(data_type_id, sent_timestamp, payload.to_vec()), end))
    }

    pub fn fields(&self) -> Result<Vec<SerializedField<'_>>, DecodeError> {
        let mut out = Vec::new();
        let mut pos = 0;
        let p = &self.payload;
        while pos < p.len() {
            let (key, len) = match (read_u32(p, pos), read_u32(p, pos + 4)) {
                (Some(k), Some(l)) => (k, l as usize),
                _ => {
                    return Err(DecodeError::Malformed {
                        offset: FRAME_HEADER_LEN + pos,
                        reason: "field header truncated".into(),
                    })
                }
            };
            let start = pos + 8;
            let end = start
                .checked_add(len)
                .filter(|&e| e <= p.len())
                .ok_or(DecodeError::Malformed {
                    offset: FRAME_HEADER_LEN + pos,
                    reason: "field overruns the payload".into(),
                })?;
            out.push(SerializedField {
                key: FieldKey(key),
                bytes: &p[start..end],
            });
            pos = end;
        }
        Ok(out)
    }

    pub fn reader(&self) -> Result<PayloadReader<'_>, DecodeError> {
        PayloadReader::with_base(&self.payload, FRAME_HEADER_LEN)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::serialization::PayloadWriter;

    #[test]
    fn empty_record_frame_is_20_bytes() {
        let c = Container::new(100, 0, PayloadWriter::new().finish());
        let frame = c.encode();
        assert_eq!(frame.len(), 20);
        assert_eq!(&frame[16..20], &[0, 0, 0, 0]);
        assert_eq!(&frame[..4], &[0x50, 0x53, 0x45, 0x48]);
    }

    #[test]
    fn frame_round_trip() {
        let mut w = PayloadWriter::new();
        w.put("x", &1.0f64).put_str("s", "hello");
        let c = Container::new(4242, -17, w.finish());
        assert_eq!(Container::decode(&c.encode()).unwrap(), c);
    }

    #[test]
    fn bad_magic() {
        let mut frame = Container::new(1, 0, vec![]).encode();
        frame[0] = 0;
        assert!(matches!(Container::decode(&frame), Err(DecodeError::BadMagic { .. })));
    }

    #[test]
    fn truncated_payload() {
        let mut w = PayloadWriter::new();
        w.put("x", &1.0f64);
        let frame = Container::new(1, 0, w.finish()).encode();
        let err = Container::decode(&frame[..frame.len() - 1]).unwrap_err();
        assert!(matches!(err, DecodeError::Truncated { offset: 20, need: 16, have: 15 }));
        assert!(matches!(
            Container::decode(&frame[..10]),
            Err(DecodeError::Truncated { need: 20, have: 10, .. })
        ));
    }

    #[test]
    fn field_overrun_inside_declared_payload() {
        // payloadLength says 12 bytes, but the field header claims 100.
        let mut frame = Vec::new();
        frame.extend_from_slice(&FRAME_MAGIC.to_le_bytes());
        frame.extend_from_slice(&5u32.to_le_bytes());
        frame.extend_from_slice(&0i64.to_le_bytes());
        frame.extend_from_slice(&12u32.to_le_bytes());
        frame.extend_from_slice(&1u32.to_le_bytes());
        frame.extend_from_slice(&100u32.to_le_bytes());
        frame.extend_from_slice(&[0; 4]);
        assert!(matches!(
            Container::decode(&frame),
            Err(DecodeError::Malformed { offset: 20, .. })
        ));
    }

    #[test]
    fn permuted_fields_decode_equal() {
        let mut w = PayloadWriter::new();
        w.put("a", &1u32).put("b", &2.5f64).put_str("c", "z");
        let c = Container::new(7, 3, w.finish());
        let mut fields = c.fields().unwrap();
        fields.reverse();
        let permuted = Container::from_fields(7, 3, &fields);
        assert_ne!(permuted.payload, c.payload);
        let (r1, r2) = (c.reader().unwrap(), permuted.reader().unwrap());
        for name in ["a"] {
            assert_eq!(r1.get::<u32>(name).unwrap(), r2.get::<u32>(name).unwrap());
        }
        assert_eq!(r1.get::<f64>("b").unwrap(), r2.get::<f64>("b").unwrap());
        assert_eq!(r1.get::<String>("c").unwrap(), r2.get::<String>("c").unwrap());
    }
}
