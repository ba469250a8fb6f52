//! Reference-trajectory data format and the independent requirement
//! checkers (consistency, admissibility, drivability, collision freedom).

mod checks;
mod crc;
mod format;
mod tracking;

pub use checks::{
    check_admissibility, check_collision_free, check_consistency, check_drivability,
    CheckReport, CheckVerdict, DrivabilityContext, Violation,
};
pub use crc::crc32;
pub use format::{
    deserialize, serialize, ReferenceTrajectory, TrajectoryHeader, TrajectorySegment, WireError,
};
pub use tracking::{track_path, PathRef, TrackOutcome, TrackedPoint};
