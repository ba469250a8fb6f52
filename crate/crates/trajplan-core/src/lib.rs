//! Receding-horizon trajectory planning for divided-highway driving.
//!
//! The crate is organized around a primary/backup planner pair:
//!
//! * [`models`] — continuous-time vehicle models (linear-tire and Pacejka
//!   bicycle models, a double-track oracle model), RK4 discretization and
//!   road/Frenet geometry.
//! * [`ocp`] — builds the finite-horizon optimal control problem from a
//!   perception snapshot: costs, constraint sets, lane candidates.
//! * [`solver`] — in-repo SQP solver (Gauss-Newton, dual active-set QP,
//!   elastic infeasibility phase) with a four-class exit flag and an
//!   independent solution checker.
//! * [`trajectory`] — the reference-trajectory wire format (binary layout +
//!   CRC-32) and the consistency / admissibility / drivability /
//!   collision-freedom checkers.
//! * [`planner`] — the receding-horizon planners with reaction horizon,
//!   computation-time extension and driving modes.
//! * [`switching`] — infeasibility analysis: pre-filters and the
//!   primary/backup/stored/emergency switching state machine.
//! * [`sim`] — closed-loop scenario simulator, scenario catalogue, safety
//!   monitors and ODD validation.

pub mod config;
pub mod models;
pub mod ocp;
pub mod planner;
pub mod sim;
pub mod solver;
pub mod switching;
pub mod trajectory;

pub use config::PlannerConfig;
pub use models::{ControlInput, Environment, RoadModel, VehicleParams, VehicleState};
