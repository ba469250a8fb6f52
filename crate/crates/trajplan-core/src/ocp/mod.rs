//! Finite-horizon optimal control problem construction.
//!
//! [`build_ocp`] turns a perception snapshot into one problem per candidate
//! lane sequence. Lane integers are handled by candidate enumeration (one
//! nonlinear program per lane plan); the solver never sees integer
//! variables.

mod build;
mod problem;
mod snapshot;

pub use build::{
    build_ocp, lateral_tier, relax_front_gap, select_lane_solution, BuildError, BuildOpts,
    OcpBuilder, PlannerVariant, SelectError,
};
pub use problem::{
    CandidateInfo, ConstraintClass, ConstraintGrad, ConstraintKind, ConstraintSpec, InputBounds,
    ObstacleTrack, OcpProblem, RelaxFlags,
};
pub use snapshot::{
    ActuatorStatus, DrivingMode, FrenetBox, ObjectClass, PerceptionSnapshot, PredictedObject,
    TacticalCommand,
};
