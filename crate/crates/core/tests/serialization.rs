use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use vtd::serialization::{field_key, Container, DecodeError, FieldType, Record, Schema, SchemaError, Value};

fn random_name(rng: &mut ChaCha8Rng) -> String {
    let len = rng.random_range(1..=10);
    (0..len)
        .map(|_| {
            let alphabet = b"abcdefghijklmnopqrstuvwxyz_0123456789";
            alphabet[rng.random_range(0..alphabet.len())] as char
        })
        .collect()
}

fn random_type(rng: &mut ChaCha8Rng, depth: u32) -> FieldType {
    let top = if depth >= 2 { 7 } else { 9 };
    match rng.random_range(0..top) {
        0 => FieldType::Bool,
        1 => FieldType::I32,
        2 => FieldType::I64,
        3 => FieldType::U32,
        4 => FieldType::U64,
        5 => FieldType::F64,
        6 => FieldType::Str,
        7 => FieldType::Record(random_schema(rng, depth + 1)),
        _ => FieldType::List(Box::new(random_type(rng, depth + 1))),
    }
}

fn random_schema(rng: &mut ChaCha8Rng, depth: u32) -> Schema {
    loop {
        let mut b = Schema::builder(random_name(rng));
        let mut names = Vec::new();
        for _ in 0..rng.random_range(0..6) {
            let name = random_name(rng);
            if names.contains(&name) {
                continue;
            }
            names.push(name.clone());
            b = b.field(name, random_type(rng, depth));
        }
        match b.build() {
            Ok(s) => return s,
            Err(SchemaError::KeyCollision { .. }) => continue,
            Err(e) => panic!("{e}"),
        }
    }
}

fn random_f64(rng: &mut ChaCha8Rng) -> f64 {
    match rng.random_range(0..6) {
        0 => 0.0,
        1 => -0.0,
        2 => f64::MAX,
        3 => f64::MIN_POSITIVE,
        _ => f64::from_bits(rng.random::<u64>() & !(0x7ff << 52)) * rng.random_range(-1e9..1e9),
    }
}

fn random_value(rng: &mut ChaCha8Rng, ty: &FieldType) -> Value {
    match ty {
        FieldType::Bool => Value::Bool(rng.random()),
        FieldType::I32 => Value::I32(rng.random()),
        FieldType::I64 => Value::I64(rng.random()),
        FieldType::U32 => Value::U32(rng.random()),
        FieldType::U64 => Value::U64(rng.random()),
        FieldType::F64 => Value::F64(random_f64(rng)),
        FieldType::Str => {
            let len = rng.random_range(0..12);
            Value::Str((0..len).map(|_| rng.random_range('\u{20}'..'\u{3000}')).collect())
        }
        FieldType::Record(s) => Value::Record(random_record(rng, s)),
        FieldType::List(elem) => Value::List((0..rng.random_range(0..5)).map(|_| random_value(rng, elem)).collect()),
    }
}

fn random_record(rng: &mut ChaCha8Rng, schema: &Schema) -> Record {
    let mut r = Record::new();
    for f in schema.fields() {
        r.set(f.name.clone(), random_value(rng, &f.ty));
    }
    r
}

/// Splits a payload into raw (key, bytes) fields without using the library.
fn split_fields(payload: &[u8]) -> Vec<(u32, Vec<u8>)> {
    let mut out = Vec::new();
    let mut pos = 0;
    while pos < payload.len() {
        let key = u32::from_le_bytes(payload[pos..pos + 4].try_into().unwrap());
        let len = u32::from_le_bytes(payload[pos + 4..pos + 8].try_into().unwrap()) as usize;
        out.push((key, payload[pos + 8..pos + 8 + len].to_vec()));
        pos += 8 + len;
    }
    out
}

fn join_fields(fields: &[(u32, Vec<u8>)]) -> Vec<u8> {
    let mut out = Vec::new();
    for (k, b) in fields {
        out.extend_from_slice(&k.to_le_bytes());
        out.extend_from_slice(&(b.len() as u32).to_le_bytes());
        out.extend_from_slice(b);
    }
    out
}

#[test]
fn random_round_trip_permutation_and_unknown_fields() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5e71a1);
    for _ in 0..1000 {
        let schema = random_schema(&mut rng, 0);
        let record = random_record(&mut rng, &schema);
        let frame = schema.encode_frame(&record, 100, 7).unwrap();
        assert_eq!(schema.decode_frame(&frame).unwrap(), record);

        let payload = schema.encode_payload(&record).unwrap();
        let mut fields = split_fields(&payload);
        fields.shuffle(&mut rng);
        let unknown = loop {
            let k: u32 = rng.random();
            if schema.fields().iter().all(|f| f.key.0 != k) {
                break k;
            }
        };
        let pos = rng.random_range(0..=fields.len());
        fields.insert(pos, (unknown, (0..rng.random_range(0..20)).map(|_| rng.random()).collect()));
        assert_eq!(schema.decode_payload(&join_fields(&fields)).unwrap(), record);
    }
}

#[test]
fn schema_evolution_both_directions() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..200 {
        let v1 = random_schema(&mut rng, 0);
        let added = loop {
            let name = random_name(&mut rng);
            if v1.fields().iter().all(|f| f.key != field_key(&name)) {
                break name;
            }
        };
        let mut b = Schema::builder(v1.name());
        for f in v1.fields() {
            b = b.field(f.name.clone(), f.ty.clone());
        }
        let v2 = b.field(added.clone(), random_type(&mut rng, 0)).build().unwrap();

        let r2 = random_record(&mut rng, &v2);
        let mut projected = r2.clone();
        projected.remove(&added);
        assert_eq!(v1.decode_payload(&v2.encode_payload(&r2).unwrap()).unwrap(), projected);

        let r1 = random_record(&mut rng, &v1);
        let mut widened = r1.clone();
        widened.set(added.clone(), v2.field(&added).unwrap().default.clone());
        assert_eq!(v2.decode_payload(&v1.encode_payload(&r1).unwrap()).unwrap(), widened);
    }
}

#[test]
fn declared_defaults_fill_missing_fields() {
    let s = Schema::builder("s")
        .field_with_default("speed", FieldType::F64, Value::F64(13.9))
        .field("name", FieldType::Str)
        .build()
        .unwrap();
    let r = s.decode_payload(&[]).unwrap();
    assert_eq!(r.get("speed"), Some(&Value::F64(13.9)));
    assert_eq!(r.get("name"), Some(&Value::Str(String::new())));
}

#[test]
fn keys_match_reference_crc() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..100 {
        let len = rng.random_range(1..40);
        let name: String = (0..len).map(|_| rng.random_range(0x21u8..0x7f) as char).collect();
        assert_eq!(field_key(&name).0, crc32fast::hash(name.as_bytes()), "{name}");
    }
    assert_eq!(field_key("").0, 0);
    assert_eq!(field_key("x").0, 0x8CDC_1683);
    assert_eq!(field_key("y").0, 0xFBDB_2615);
}

#[test]
fn single_float_field_layout() {
    let s = Schema::builder("p").field("x", FieldType::F64).build().unwrap();
    let payload = s.encode_payload(&Record::new().with("x", Value::F64(1.0))).unwrap();
    let mut expected = crc32fast::hash(b"x").to_le_bytes().to_vec();
    expected.extend_from_slice(&[8, 0, 0, 0]);
    expected.extend_from_slice(&[0, 0, 0, 0, 0, 0, 0xf0, 0x3f]);
    assert_eq!(payload, expected);
}

#[test]
fn empty_record_frame() {
    let s = Schema::builder("e").build().unwrap();
    let frame = s.encode_frame(&Record::new(), 100, -1).unwrap();
    assert_eq!(frame.len(), 20);
    assert_eq!(&frame[..4], &0x4845_5350u32.to_le_bytes());
    assert_eq!(&frame[16..20], &[0, 0, 0, 0]);
}

#[test]
fn schema_rejects_bad_names() {
    assert_eq!(Schema::builder("s").field("", FieldType::Bool).build(), Err(SchemaError::EmptyName));
    assert!(matches!(
        Schema::builder("s").field("a", FieldType::Bool).field("a", FieldType::I32).build(),
        Err(SchemaError::DuplicateField(_))
    ));
    assert!(matches!(
        Schema::builder("s").field("plumless", FieldType::Bool).field("buckeroo", FieldType::Bool).build(),
        Err(SchemaError::KeyCollision { .. })
    ));
}

#[test]
fn malformed_frames_report_offsets() {
    let s = Schema::builder("p").field("x", FieldType::F64).build().unwrap();
    let frame = s.encode_frame(&Record::new().with("x", Value::F64(2.0)), 100, 0).unwrap();
    let mut bad = frame.clone();
    bad[0] ^= 1;
    assert!(matches!(Container::decode(&bad), Err(DecodeError::BadMagic { .. })));
    assert!(matches!(
        Container::decode(&frame[..frame.len() - 1]),
        Err(DecodeError::Truncated { .. })
    ));
    // Field claims 9 bytes where 8 remain.
    let mut overrun = frame.clone();
    overrun[24] = 9;
    let err = s.decode_frame(&overrun).unwrap_err();
    match err {
        DecodeError::Malformed { offset, .. } => assert_eq!(offset, 20),
        other => panic!("{other:?}"),
    }
}
