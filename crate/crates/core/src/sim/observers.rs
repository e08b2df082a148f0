use std::io::Write;
use std::sync::Arc;

use super::{ObserverPart, PartError};
use crate::bus::{DataStore, Filter, ObserverHandle};
use crate::messages::{type_id, Message};
use crate::recording::RecordingWriter;
use crate::validators::{TraceSample, VehicleChecks, Verdict};
use crate::vehicle::StateReport;

fn listen(bus: &ObserverHandle, filter: Filter, store: &Arc<DataStore>) -> Result<(), PartError> {
    bus.add_listener(filter, Arc::clone(store)).map(|_| ()).map_err(PartError::new)
}

/// Appends every delivered container, stamped with the slice time at
/// which it was delivered.
pub struct Recorder {
    out: RecordingWriter<Box<dyn Write>>,
    store: Arc<DataStore>,
}

impl Recorder {
    pub fn new(out: impl Write + 'static) -> Self {
        Self {
            out: RecordingWriter::new(Box::new(out)),
            store: Arc::new(DataStore::fifo()),
        }
    }
}

impl ObserverPart for Recorder {
    fn name(&self) -> String {
        "recorder".into()
    }

    fn setup(&mut self, bus: &ObserverHandle) -> Result<(), PartError> {
        listen(bus, Filter::All, &self.store)
    }

    fn observe(&mut self, now: i64) -> Result<(), PartError> {
        for c in self.store.drain() {
            self.out.append(now, &c).map_err(PartError::new)?;
        }
        Ok(())
    }

    fn finish(&mut self) -> Result<(), PartError> {
        self.out.flush().map_err(PartError::new)
    }
}

/// Runs validator sets over delivered vehicle states.
pub struct ValidatorHost {
    checks: Vec<VehicleChecks>,
    store: Arc<DataStore>,
}

impl ValidatorHost {
    pub fn new(checks: Vec<VehicleChecks>) -> Self {
        Self {
            checks,
            store: Arc::new(DataStore::fifo()),
        }
    }
}

impl ObserverPart for ValidatorHost {
    fn name(&self) -> String {
        "validators".into()
    }

    fn setup(&mut self, bus: &ObserverHandle) -> Result<(), PartError> {
        listen(bus, Filter::only(type_id::VEHICLE_STATE), &self.store)
    }

    fn observe(&mut self, _now: i64) -> Result<(), PartError> {
        for c in self.store.drain() {
            let sample = TraceSample::from(&StateReport::from_container(&c).map_err(PartError::new)?);
            for checks in &mut self.checks {
                checks.observe(&sample);
            }
        }
        Ok(())
    }

    fn finish(&mut self) -> Result<(), PartError> {
        for checks in &mut self.checks {
            checks.finish();
        }
        Ok(())
    }

    fn validating(&self) -> bool {
        !self.checks.is_empty()
    }

    fn all_final(&self) -> bool {
        self.checks.iter().all(VehicleChecks::all_final)
    }

    fn verdicts(&self) -> Vec<Verdict> {
        self.checks.iter().flat_map(|c| c.verdicts().cloned()).collect()
    }
}

/// Writes delivered vehicle states as `t_us,vehicle,x,y,heading,speed`
/// lines.
pub struct TraceDump {
    out: Box<dyn Write>,
    store: Arc<DataStore>,
}

impl TraceDump {
    pub fn new(out: impl Write + 'static) -> Self {
        Self {
            out: Box::new(out),
            store: Arc::new(DataStore::fifo()),
        }
    }
}

impl ObserverPart for TraceDump {
    fn name(&self) -> String {
        "trace".into()
    }

    fn setup(&mut self, bus: &ObserverHandle) -> Result<(), PartError> {
        listen(bus, Filter::only(type_id::VEHICLE_STATE), &self.store)?;
        writeln!(self.out, "t_us,vehicle,x,y,heading,speed").map_err(PartError::new)
    }

    fn observe(&mut self, _now: i64) -> Result<(), PartError> {
        for c in self.store.drain() {
            let r = StateReport::from_container(&c).map_err(PartError::new)?;
            let s = r.state;
            writeln!(
                self.out,
                "{},{},{:.6},{:.6},{:.6},{:.6}",
                s.timestamp, r.vehicle_id, s.position.x, s.position.y, s.heading, s.speed
            )
            .map_err(PartError::new)?;
        }
        Ok(())
    }

    fn finish(&mut self) -> Result<(), PartError> {
        self.out.flush().map_err(PartError::new)
    }
}

/// A cloneable in-memory sink, for keeping a recording or trace after the
/// simulation that wrote it has been consumed.
#[derive(Debug, Clone, Default)]
pub struct SharedBuffer(Arc<std::sync::Mutex<Vec<u8>>>);

impl SharedBuffer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn contents(&self) -> Vec<u8> {
        self.0.lock().unwrap_or_else(|e| e.into_inner()).clone()
    }
}

impl Write for SharedBuffer {
    fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
        self.0.lock().unwrap_or_else(|e| e.into_inner()).extend_from_slice(buf);
        Ok(buf.len())
    }

    fn flush(&mut self) -> std::io::Result<()> {
        Ok(())
    }
}
