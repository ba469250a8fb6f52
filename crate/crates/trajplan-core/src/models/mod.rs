//! Continuous-time vehicle models and road geometry.
//!
//! Three model fidelities are provided: a dynamic bicycle with a linear tire
//! (the primary planner's prediction model), the same bicycle with a Pacejka
//! tire (backup planner / pre-emptive swap), and a nonlinear double-track
//! model with per-wheel Pacejka tires and quasi-static load transfer that
//! serves as the drivability oracle. All planning models live in road-aligned
//! Frenet coordinates; the double-track oracle lives in the global frame.

mod bicycle;
mod double_track;
mod integrate;
mod road;
mod state;
mod tire;

/// Gravitational acceleration [m/s²].
pub const G: f64 = 9.81;

/// Slip angle of the front axle's force peak at the given friction level.
pub fn pacejka_peak_slip_front(p: &VehicleParams, mu: f64) -> f64 {
    tire::pacejka_peak_slip(p.stiff_front, mu, p.front_axle_load())
}

/// Slip angle of the rear axle's force peak at the given friction level.
pub fn pacejka_peak_slip_rear(p: &VehicleParams, mu: f64) -> f64 {
    tire::pacejka_peak_slip(p.stiff_rear, mu, p.rear_axle_load())
}

pub use bicycle::{ldbm_derivative, ndbm_derivative, BicycleModel, TireModel, ModelError};
pub use double_track::{nddm_step, DoubleTrackState, NddmConditions, NddmError, WheelReport};
pub use integrate::{discretize_rk4, rk4_with_sensitivities};
pub use road::{GeometryError, RoadModel, RoadSegment, Shoulder};
pub use state::{ControlInput, Environment, ParamTolerances, VehicleParams, VehicleState};
