//! Core domain value types shared across the crate.

use nalgebra::SVector;
use serde::{Deserialize, Serialize};

/// Vehicle state in road-aligned (Frenet) coordinates.
///
/// `yaw` is measured relative to the road tangent at `s`; `vx`/`vy` are the
/// body-frame longitudinal and lateral velocities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleState {
    /// Longitudinal position along the road reference line [m].
    pub s: f64,
    /// Lateral offset from the reference line, positive to the left [m].
    pub e: f64,
    /// Yaw angle relative to the road tangent [rad].
    pub yaw: f64,
    /// Yaw rate [rad/s].
    pub yaw_rate: f64,
    /// Longitudinal (body) velocity [m/s].
    pub vx: f64,
    /// Lateral (body) velocity [m/s].
    pub vy: f64,
    /// Lane index, counted from 1 at the rightmost lane (0 = hard shoulder).
    pub lane: i32,
}

impl VehicleState {
    pub fn at_rest() -> Self {
        Self { s: 0.0, e: 0.0, yaw: 0.0, yaw_rate: 0.0, vx: 0.0, vy: 0.0, lane: 1 }
    }

    pub fn is_finite(&self) -> bool {
        self.s.is_finite()
            && self.e.is_finite()
            && self.yaw.is_finite()
            && self.yaw_rate.is_finite()
            && self.vx.is_finite()
            && self.vy.is_finite()
    }

    /// Packs the six dynamic states into a vector (lane index is carried
    /// alongside, not part of the continuous dynamics).
    pub fn to_vector(&self) -> SVector<f64, 6> {
        SVector::<f64, 6>::new(self.s, self.e, self.yaw, self.yaw_rate, self.vx, self.vy)
    }

    pub fn from_vector(v: &SVector<f64, 6>, lane: i32) -> Self {
        Self { s: v[0], e: v[1], yaw: v[2], yaw_rate: v[3], vx: v[4], vy: v[5], lane }
    }
}

/// Control input pair: front steering angle and drivetrain torque at the
/// wheels (positive accelerates, negative brakes).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlInput {
    /// Front wheel steering angle [rad].
    pub steer: f64,
    /// Wheel torque [N·m].
    pub torque: f64,
}

impl ControlInput {
    pub const ZERO: Self = Self { steer: 0.0, torque: 0.0 };

    pub fn is_finite(&self) -> bool {
        self.steer.is_finite() && self.torque.is_finite()
    }
}

/// Maximum estimation errors of the ego parameters, as delivered by the
/// upstream fusion modules.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ParamTolerances {
    pub mass: f64,
    pub yaw_inertia: f64,
    pub stiffness: f64,
    pub cog: f64,
}

impl Default for ParamTolerances {
    fn default() -> Self {
        Self { mass: 50.0, yaw_inertia: 100.0, stiffness: 5_000.0, cog: 0.02 }
    }
}

/// Physical parameters of the ego vehicle.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VehicleParams {
    /// Mass [kg].
    pub mass: f64,
    /// Yaw moment of inertia [kg·m²].
    pub yaw_inertia: f64,
    /// Distance from the center of gravity to the front axle [m].
    pub lf: f64,
    /// Distance from the center of gravity to the rear axle [m].
    pub lr: f64,
    /// CoG offset from the rear-axle midpoint, longitudinal [m] (equals `lr`).
    pub x_cog: f64,
    /// CoG offset from the rear-axle midpoint, lateral [m].
    pub y_cog: f64,
    /// CoG height above ground [m].
    pub z_cog: f64,
    /// Front axle cornering stiffness [N/rad].
    pub stiff_front: f64,
    /// Rear axle cornering stiffness [N/rad].
    pub stiff_rear: f64,
    /// Effective wheel radius [m].
    pub wheel_radius: f64,
    /// Track width [m] (double-track model only).
    pub track_width: f64,
    /// Body length [m] (footprint).
    pub length: f64,
    /// Body width [m] (footprint).
    pub width: f64,
    pub tol: ParamTolerances,
}

impl Default for VehicleParams {
    fn default() -> Self {
        Self {
            mass: 1800.0,
            yaw_inertia: 3200.0,
            lf: 1.3,
            lr: 1.5,
            x_cog: 1.5,
            y_cog: 0.0,
            z_cog: 0.55,
            stiff_front: 110_000.0,
            stiff_rear: 130_000.0,
            wheel_radius: 0.32,
            track_width: 1.6,
            length: 4.6,
            width: 1.85,
            tol: ParamTolerances::default(),
        }
    }
}

/// Cornering stiffness range of the supported vehicle class [N/rad].
pub const STIFFNESS_RANGE: (f64, f64) = (60_000.0, 200_000.0);

impl VehicleParams {
    pub fn wheelbase(&self) -> f64 {
        self.lf + self.lr
    }

    /// Static front axle load [N].
    pub fn front_axle_load(&self) -> f64 {
        self.mass * crate::models::G * self.lr / self.wheelbase()
    }

    /// Static rear axle load [N].
    pub fn rear_axle_load(&self) -> f64 {
        self.mass * crate::models::G * self.lf / self.wheelbase()
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.mass > 0.0) {
            return Err("mass must be positive".into());
        }
        if !(self.yaw_inertia > 0.0) {
            return Err("yaw inertia must be positive".into());
        }
        if !(self.wheelbase() > 0.0) {
            return Err("wheelbase must be positive".into());
        }
        for (name, c) in [("front", self.stiff_front), ("rear", self.stiff_rear)] {
            if !(STIFFNESS_RANGE.0..=STIFFNESS_RANGE.1).contains(&c) {
                return Err(format!(
                    "{name} cornering stiffness {c} N/rad outside vehicle-class range"
                ));
            }
        }
        Ok(())
    }
}

/// Environmental conditions valid over the prediction window.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Environment {
    /// Road friction coefficient.
    pub mu: f64,
    /// Maximum friction estimation error.
    pub mu_tol: f64,
    /// Side wind speed [m/s], positive from the right.
    pub wind: f64,
    pub wind_tol: f64,
    /// Ambient temperature [°C].
    pub temperature: f64,
}

impl Default for Environment {
    fn default() -> Self {
        Self { mu: 1.0, mu_tol: 0.05, wind: 0.0, wind_tol: 1.0, temperature: 15.0 }
    }
}

/// Friction range of the operational domain.
pub const MU_RANGE: (f64, f64) = (0.15, 1.2);
/// Wind bound of the operational domain [m/s] (8 bft, ~74 km/h).
pub const WIND_MAX: f64 = 74.0 / 3.6;

impl Environment {
    /// Worst-case friction used by safety-relevant computations.
    pub fn mu_worst(&self) -> f64 {
        (self.mu - self.mu_tol).max(0.05)
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(MU_RANGE.0..=MU_RANGE.1).contains(&self.mu) {
            return Err(format!("friction {} outside [{}, {}]", self.mu, MU_RANGE.0, MU_RANGE.1));
        }
        if self.wind.abs() >= WIND_MAX {
            return Err(format!("wind speed {} m/s at or above the 8 bft bound", self.wind));
        }
        Ok(())
    }
}
