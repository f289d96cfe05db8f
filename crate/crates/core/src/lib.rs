//! Leaderless formation control for swarms of car-like robots.
//!
//! Each robot measures its own look-ahead point, estimates the swarm's
//! abstract shape (centroid, orientation and spread) with a distributed
//! consensus estimator over an undirected communication graph, and steers its
//! point so that the shape follows a prescribed trajectory.
//!
//! The crate is `no_std` and only needs `alloc`.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod consensus;
pub mod control;
pub mod error;
pub mod graph;
pub mod kinematics;
pub mod math;
pub mod shape;
pub mod sim;
pub mod trajectory;

pub use error::{Error, Result};
pub use graph::{CommGraph, EventKind, GraphEvent, RobotId};
pub use kinematics::{ControlInput, OutputPoint, RobotParams, RobotState};
pub use math::Vec2;
pub use shape::{ShapeConfig, ShapeParams};
pub use sim::{run_scenario, RecordSink, RunSummary, ScenarioConfig, Simulation, TickRecord};
