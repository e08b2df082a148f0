//! Middleware for deterministic virtual test drives.
//!
//! Modules under test talk to each other through typed [`Container`]s on a
//! conference bus. During simulation the bus, the clock and the world
//! (scripted traffic, vehicle models, synthetic laser scanners) are owned by
//! the run loop in [`sim`], and read-only [`validators`] decide whether the
//! drive passed.
//!
//! [`Container`]: serialization::Container

pub mod bus;
pub mod dmcp;
pub mod geometry;
pub mod messages;
pub mod recording;
pub mod scenario;
pub mod sensor;
pub mod serialization;
pub mod sim;
pub mod validators;
pub mod vehicle;
