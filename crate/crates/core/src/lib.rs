//! Tracked rescue-robot simulator.

pub mod arm;
pub mod chassis;
pub mod detection;
pub mod geometry;
pub mod protocol;
pub mod scenario;
pub mod sensors;
pub mod service;
pub mod sim;
pub mod terrain;
