//! The perception-interface snapshot consumed by the planners every 50 ms.

use serde::{Deserialize, Serialize};

use crate::config::N_P;
use crate::models::{ControlInput, Environment, RoadModel, VehicleParams, VehicleState};

/// Object classification from the fusion layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ObjectClass {
    Vehicle,
    Truck,
    Motorcycle,
    Animal,
    Obstacle,
}

/// Axis-aligned bounding box in Frenet coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrenetBox {
    pub s_min: f64,
    pub s_max: f64,
    pub e_min: f64,
    pub e_max: f64,
}

impl FrenetBox {
    pub fn center(&self) -> (f64, f64) {
        ((self.s_min + self.s_max) / 2.0, (self.e_min + self.e_max) / 2.0)
    }

    pub fn is_valid(&self) -> bool {
        self.s_max >= self.s_min && self.e_max >= self.e_min
    }

    pub fn overlaps_band(&self, lo: f64, hi: f64) -> bool {
        self.e_max >= lo && self.e_min <= hi
    }

    pub fn overlaps(&self, other: &FrenetBox) -> bool {
        self.s_max >= other.s_min
            && self.s_min <= other.s_max
            && self.overlaps_band(other.e_min, other.e_max)
    }

    /// Squared distance from a point to the box (zero inside).
    pub fn distance_sq(&self, s: f64, e: f64) -> f64 {
        let ds = (self.s_min - s).max(0.0).max(s - self.s_max);
        let de = (self.e_min - e).max(0.0).max(e - self.e_max);
        ds * ds + de * de
    }

    /// Gradient of [`Self::distance_sq`] with respect to (s, e).
    pub fn distance_sq_grad(&self, s: f64, e: f64) -> (f64, f64) {
        let gs = if s < self.s_min {
            2.0 * (s - self.s_min)
        } else if s > self.s_max {
            2.0 * (s - self.s_max)
        } else {
            0.0
        };
        let ge = if e < self.e_min {
            2.0 * (e - self.e_min)
        } else if e > self.e_max {
            2.0 * (e - self.e_max)
        } else {
            0.0
        };
        (gs, ge)
    }
}

/// Dynamic object with its prediction over the 6 s horizon.
///
/// `boxes[k]` bounds the object at `k` sampling periods from the snapshot
/// time; prediction uncertainty is already folded into the box extents.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PredictedObject {
    pub id: u32,
    pub class: ObjectClass,
    pub boxes: Vec<FrenetBox>,
    /// Velocity interval along the road [m/s]; negative means reversing.
    pub speed_range: (f64, f64),
    pub heading: f64,
    /// Lane index per prediction step.
    pub lanes: Vec<i32>,
}

impl PredictedObject {
    pub fn validate(&self) -> Result<(), String> {
        if self.boxes.len() != N_P + 1 {
            return Err(format!(
                "object {}: prediction must cover {} steps, found {}",
                self.id,
                N_P + 1,
                self.boxes.len()
            ));
        }
        if self.lanes.len() != self.boxes.len() {
            return Err(format!("object {}: lane labels must match boxes", self.id));
        }
        if !self.boxes.iter().all(|b| b.is_valid()) {
            return Err(format!("object {}: box with negative extent", self.id));
        }
        if self.speed_range.1 < self.speed_range.0 {
            return Err(format!("object {}: empty velocity interval", self.id));
        }
        Ok(())
    }

    pub fn box_at(&self, step: usize) -> &FrenetBox {
        &self.boxes[step.min(self.boxes.len() - 1)]
    }

    pub fn is_reversing(&self) -> bool {
        self.speed_range.1 < 0.0
    }
}

/// Specialized driving modes requested by the encompassing system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum DrivingMode {
    #[default]
    NormalDriving,
    ObstacleAvoidance,
    RescueAlley,
    OversizedVehicle,
    WrongWayDriver,
    TrafficableHardShoulder,
    ObstacleOnHardShoulder,
    DefensiveDriving,
}

impl DrivingMode {
    pub const ALL: [DrivingMode; 8] = [
        DrivingMode::NormalDriving,
        DrivingMode::ObstacleAvoidance,
        DrivingMode::RescueAlley,
        DrivingMode::OversizedVehicle,
        DrivingMode::WrongWayDriver,
        DrivingMode::TrafficableHardShoulder,
        DrivingMode::ObstacleOnHardShoulder,
        DrivingMode::DefensiveDriving,
    ];

    /// Modes in which lane changes are forbidden.
    pub fn forbids_lane_change(&self) -> bool {
        matches!(
            self,
            DrivingMode::WrongWayDriver
                | DrivingMode::DefensiveDriving
                | DrivingMode::OversizedVehicle
        )
    }
}

/// Tactical choices; all requests are facultative.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TacticalCommand {
    pub target_lane: i32,
    /// Desired cruise speed [m/s].
    pub reference_speed: f64,
    /// Desired deviation from the lane center line [m].
    pub lateral_offset: Option<f64>,
    /// Desired gap to the leading vehicle [m] (performance only).
    pub front_gap_request: Option<f64>,
    /// Desired gap to the trailing vehicle [m] (performance only).
    pub rear_gap_request: Option<f64>,
    pub mode: DrivingMode,
}

impl TacticalCommand {
    pub fn keep_lane(lane: i32, speed: f64) -> Self {
        Self {
            target_lane: lane,
            reference_speed: speed,
            lateral_offset: None,
            front_gap_request: None,
            rear_gap_request: None,
            mode: DrivingMode::NormalDriving,
        }
    }
}

/// Actuator feedback from the tracking-controller layer.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ActuatorStatus {
    /// Measured front wheel steering angles [rad].
    pub steer_left: f64,
    pub steer_right: f64,
    /// Current engine torque [N·m].
    pub engine_torque: f64,
    /// Total gear ratio.
    pub gear_ratio: f64,
    /// Effective brake torque [N·m] (non-negative).
    pub brake_torque: f64,
}

impl Default for ActuatorStatus {
    fn default() -> Self {
        Self {
            steer_left: 0.0,
            steer_right: 0.0,
            engine_torque: 0.0,
            gear_ratio: 8.0,
            brake_torque: 0.0,
        }
    }
}

impl ActuatorStatus {
    /// Currently applied input pair implied by the actuator states.
    pub fn applied_input(&self) -> ControlInput {
        ControlInput {
            steer: (self.steer_left + self.steer_right) / 2.0,
            torque: self.engine_torque * self.gear_ratio - self.brake_torque,
        }
    }
}

/// Complete layered input of one planning cycle.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PerceptionSnapshot {
    pub timestamp_ms: u64,
    pub road: RoadModel,
    pub objects: Vec<PredictedObject>,
    pub ego: VehicleState,
    pub ego_params: VehicleParams,
    pub actuators: ActuatorStatus,
    pub env: Environment,
    pub tactical: TacticalCommand,
}

impl PerceptionSnapshot {
    pub fn validate(&self) -> Result<(), String> {
        self.road.validate()?;
        self.ego_params.validate()?;
        self.env.validate()?;
        if !self.ego.is_finite() {
            return Err("non-finite ego state".into());
        }
        if self.ego.vx < 0.0 {
            return Err("planner does not accept reversing ego states".into());
        }
        for obj in &self.objects {
            obj.validate()?;
        }
        let lanes = self.road.lane_count(self.ego.s) as i32;
        let target = self.tactical.target_lane;
        let shoulder_ok = target == 0 && self.road.shoulder.is_some();
        if !shoulder_ok && !(1..=lanes).contains(&target) {
            return Err(format!("tactical target lane {target} does not exist here"));
        }
        Ok(())
    }
}
