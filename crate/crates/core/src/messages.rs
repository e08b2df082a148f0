//! `dataTypeId` registry and the typed-message trait.
//!
//! | id  | message                  |
//! |-----|--------------------------|
//! | 1   | DMCP discover            |
//! | 2   | DMCP configuration reply |
//! | 3   | DMCP pulse               |
//! | 10  | run info (recording marker) |
//! | 100 | laser scan               |
//! | 101 | vehicle state            |
//! | 102 | vehicle command          |
//!
//! Ids 1–99 are reserved for the framework; user types start at 100.

use crate::serialization::{Container, DecodeError, PayloadReader, PayloadWriter};

pub mod type_id {
    pub const DISCOVER: u32 = 1;
    pub const CONFIG_RESPONSE: u32 = 2;
    pub const PULSE: u32 = 3;
    pub const RUN_INFO: u32 = 10;
    pub const SCAN_RESULT: u32 = 100;
    pub const VEHICLE_STATE: u32 = 101;
    pub const VEHICLE_COMMAND: u32 = 102;

    pub const FIRST_USER: u32 = 100;

    pub fn is_reserved(id: u32) -> bool {
        (1..FIRST_USER).contains(&id)
    }
}

/// A record type with a fixed `dataTypeId`.
pub trait Message: Sized {
    const TYPE_ID: u32;

    fn write(&self, w: &mut PayloadWriter);

    fn read(r: &PayloadReader<'_>) -> Result<Self, DecodeError>;

    fn to_container(&self, sent_timestamp: i64) -> Container {
        let mut w = PayloadWriter::new();
        self.write(&mut w);
        Container::new(Self::TYPE_ID, sent_timestamp, w.finish())
    }

    fn from_container(container: &Container) -> Result<Self, DecodeError> {
        if container.data_type_id != Self::TYPE_ID {
            return Err(DecodeError::WrongType {
                expected: Self::TYPE_ID,
                found: container.data_type_id,
            });
        }
        Self::read(&container.reader()?)
    }
}

/// Marker written at the start of a run: which vehicles are driven by
/// systems under test, and the run parameters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunInfo {
    pub sut_vehicles: Vec<u32>,
    pub seed: u64,
    pub step_us: i64,
    pub scenario: String,
}

impl Message for RunInfo {
    const TYPE_ID: u32 = type_id::RUN_INFO;

    fn write(&self, w: &mut PayloadWriter) {
        w.put_list("sutVehicles", &self.sut_vehicles)
            .put("seed", &self.seed)
            .put("stepUs", &self.step_us)
            .put_str("scenario", &self.scenario);
    }

    fn read(r: &PayloadReader<'_>) -> Result<Self, DecodeError> {
        Ok(Self {
            sut_vehicles: r.list("sutVehicles")?.unwrap_or_default(),
            seed: r.get_or("seed", 0)?,
            step_us: r.get_or("stepUs", 0)?,
            scenario: r.get_or("scenario", String::new())?,
        })
    }
}
