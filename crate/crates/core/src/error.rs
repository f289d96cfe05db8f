use alloc::string::String;
use core::fmt;

use crate::graph::RobotId;

/// Errors raised by the formation-control kernels.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    UnknownRobot(RobotId),
    DuplicateRobot(RobotId),
    SelfLoop(RobotId),
    UnknownEdge(RobotId, RobotId),
    DuplicateEdge(RobotId, RobotId),
    EmptyGraph,
    /// A scheduled event could not be applied; `index` is its position in the schedule.
    InvalidEvent { index: usize, time: f64, reason: String },
    /// Steering angle at or beyond ±π/2, where `tan φ` is unbounded.
    SteeringSingularity { steering: f64 },
    SingularDecoupling { det: f64 },
    TooFewRobots { required: usize, found: usize },
    ZeroAxisLength,
    /// Gram matrix diagonal entry (0-based row of the shape vector) below tolerance.
    DegenerateGram { index: usize, value: f64 },
    MissingNeighborEstimate { robot: RobotId, neighbor: RobotId },
    InvalidParameter { name: &'static str, reason: String },
    Sink(String),
    /// Error raised while processing the tick at `time`.
    AtTick { time: f64, robot: Option<RobotId>, source: alloc::boxed::Box<Error> },
}

pub type Result<T, E = Error> = core::result::Result<T, E>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::UnknownRobot(id) => write!(f, "robot {id} is not in the communication graph"),
            Error::DuplicateRobot(id) => write!(f, "robot {id} is already in the communication graph"),
            Error::SelfLoop(id) => write!(f, "self-loop on robot {id}"),
            Error::UnknownEdge(a, b) => write!(f, "link {a}-{b} does not exist"),
            Error::DuplicateEdge(a, b) => write!(f, "link {a}-{b} already exists"),
            Error::EmptyGraph => write!(f, "communication graph has no robots"),
            Error::InvalidEvent { index, time, reason } => {
                write!(f, "event #{index} at t={time}: {reason}")
            }
            Error::SteeringSingularity { steering } => {
                write!(f, "steering angle {steering} rad outside (-pi/2, pi/2)")
            }
            Error::SingularDecoupling { det } => write!(f, "decoupling matrix is singular (det = {det:e})"),
            Error::TooFewRobots { required, found } => {
                write!(f, "need at least {required} robots, found {found}")
            }
            Error::ZeroAxisLength => write!(f, "abstract shape has a zero-length axis"),
            Error::DegenerateGram { index, value } => {
                write!(f, "gram matrix entry {index} is degenerate ({value:e})")
            }
            Error::MissingNeighborEstimate { robot, neighbor } => {
                write!(f, "robot {robot} has no estimate from neighbor {neighbor}")
            }
            Error::InvalidParameter { name, reason } => write!(f, "invalid {name}: {reason}"),
            Error::Sink(msg) => write!(f, "record sink failed: {msg}"),
            Error::AtTick { time, robot: Some(id), source } => {
                write!(f, "t={time:.4} s, robot {id}: {source}")
            }
            Error::AtTick { time, robot: None, source } => write!(f, "t={time:.4} s: {source}"),
        }
    }
}

impl core::error::Error for Error {}
