//! Simulation and multi-agent training for energy communities of dwellings
//! with PV, storage and EV chargers.

pub mod envsim;
pub mod kpi;
pub mod maddpg;
pub mod neural;
pub mod rbc;
pub mod reward;
pub mod scenario;
