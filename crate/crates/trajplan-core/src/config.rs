//! Tuning configuration for the planners, solver, checkers and the tracking
//! controller stub.
//!
//! All values can be overridden from a TOML file (see `config/default.toml`
//! in the repository root for the documented defaults). Every table below is
//! optional in the file; missing keys fall back to the defaults in this
//! module.

use serde::Deserialize;
use std::path::Path;

/// Fundamental sampling time of the planner [s].
pub const T_S: f64 = 0.05;
/// Planning horizon in steps (6 s at 50 ms).
pub const N_P: usize = 120;
/// Reaction horizon: leading trajectory steps frozen between planning cycles.
pub const N_R: usize = 4;

/// Cost weights of the optimal control problem.
#[derive(Debug, Clone, Deserialize)]
#[serde(default)]
pub struct CostWeights {
    /// Terminal progress reward (applied to -s at the end of the horizon).
    pub progress: f64,
    /// Quadratic penalty on lateral deviation from the reference lane center.
    pub lateral: f64,
    /// Obstacle potential field gain.
    pub obstacle: f64,
    /// Potential field decay length [m].
    pub obstacle_sigma: f64,
    /// Quadratic penalty on steering angle.
    pub steer: f64,
    /// Quadratic penalty on wheel torque.
    pub torque: f64,
    /// Quadratic penalty on steering rate (per step difference).
    pub steer_rate: f64,
    /// Quadratic penalty on torque rate (per step difference).
    pub torque_rate: f64,
    /// Extra quadratic penalty on torque below the braking threshold.
    pub heavy_braking: f64,
    /// Deceleration magnitude at which the heavy-braking penalty starts [m/s^2].
    pub braking_threshold_decel: f64,
    /// Potential gain on the gap to a trailing same-lane vehicle.
    pub trailing_gap: f64,
    /// Trailing-gap potential decay length [m].
    pub trailing_sigma: f64,
}

impl Default for CostWeights {
    fn default() -> Self {
        Self {
            progress: 1.0,
            lateral: 0.6,
            obstacle: 4.0,
            obstacle_sigma: 2.5,
            steer: 20.0,
            torque: 2.0e-7,
            steer_rate: 400.0,
            torque_rate: 2.0e-6,
            heavy_braking: 4.0e-6,
            braking_threshold_decel: 2.5,
            trailing_gap: 0.8,
            trailing_sigma: 12.0,
        }
    }
}

impl CostWeights {
    /// Weight profile of the backup planner: safety only, comfort-neutral.
    pub fn backup() -> Self {
        Self {
            progress: 0.4,
            lateral: 0.25,
            obstacle: 8.0,
            obstacle_sigma: 3.0,
            steer: 5.0,
            torque: 1.0e-7,
            steer_rate: 120.0,
            torque_rate: 6.0e-7,
            heavy_braking: 0.0,
            braking_threshold_decel: 10.0,
            trailing_gap: 0.0,
            trailing_sigma: 12.0,
        }
    }
}

/// Deterministic iteration budgets and solver tolerances.
///
/// Wall-clock budgets are mapped to iteration counts so that runs replay
/// bit-identically: `k_base` iterations stand for the 30 ms base slot and
/// `k_ext` for each additional 50 ms extension step. Wall time is recorded
/// for reporting only and never influences control flow.
#[derive(Debug, Clone, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub k_base: usize,
    pub k_ext: usize,
    pub tol_kkt: f64,
    pub tol_feas: f64,
    pub tol_dyn: f64,
    pub tol_slack: f64,
    /// Levenberg ridge added to the Gauss-Newton Hessian.
    pub ridge: f64,
    /// Step-norm threshold below which the iteration is considered stalled.
    pub tol_step: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            k_base: 30,
            k_ext: 18,
            tol_kkt: 1e-6,
            tol_feas: 1e-6,
            tol_dyn: 1e-8,
            tol_slack: 1e-6,
            ridge: 1e-7,
            tol_step: 1e-10,
        }
    }
}

/// Limits of the steering, drive and brake actuators.
#[derive(Debug, Clone, Deserialize)]
#[serde(default)]
pub struct ActuatorLimits {
    /// Maximum front steering angle magnitude [rad] (34 deg).
    pub steer_max: f64,
    /// Maximum steering rate magnitude [rad/s] (68 deg/s).
    pub steer_rate_max: f64,
    /// Maximum longitudinal acceleration from drive torque [m/s^2].
    pub accel_max: f64,
    /// Maximum deceleration magnitude from brake torque [m/s^2].
    pub decel_max: f64,
    /// Brake effectiveness factor applied to the friction-limited deceleration.
    pub brake_efficiency: f64,
    /// Actuator torque slew limit expressed as jerk [m/s^3].
    pub jerk_max: f64,
}

impl Default for ActuatorLimits {
    fn default() -> Self {
        Self {
            steer_max: 34.0_f64.to_radians(),
            steer_rate_max: 68.0_f64.to_radians(),
            accel_max: 3.0,
            decel_max: 10.0,
            brake_efficiency: 0.95,
            jerk_max: 40.0,
        }
    }
}

/// Constraint-set parameters of the OCP build.
#[derive(Debug, Clone, Deserialize)]
#[serde(default)]
pub struct ConstraintConfig {
    /// Linear tire validity bound at mu = 1 [rad] (4 deg), scaled by (mu - dmu).
    pub alpha_lin: f64,
    /// Lower clamp of the scaled slip bound [rad].
    pub alpha_lin_min: f64,
    /// Peak-slip bound used with the Pacejka selector [rad].
    pub alpha_peak: f64,
    /// Standstill part of the front safety distance [m].
    pub standstill_gap: f64,
    /// Time-gap part of the front safety distance [s].
    pub time_gap: f64,
    /// Comfort bound on lateral acceleration [m/s^2].
    pub lat_accel_max: f64,
    /// Comfort jerk bound [m/s^3].
    pub comfort_jerk: f64,
    /// Extra lateral margin added on top of the speed-tier inflation [m].
    pub lateral_margin: f64,
    /// Longitudinal margin for crossing obstacle boxes [m].
    pub longitudinal_margin: f64,
    /// Fraction of the current gap kept as floor when relaxing a cut-in gap.
    pub relax_keep_fraction: f64,
    /// Steps over which a relaxed front gap recovers to nominal.
    pub relax_recovery_steps: usize,
    /// Lane-change transition length in steps.
    pub lane_change_steps: usize,
    /// Candidate lane-change start steps.
    pub lane_change_grid: Vec<usize>,
}

impl Default for ConstraintConfig {
    fn default() -> Self {
        Self {
            alpha_lin: 4.0_f64.to_radians(),
            alpha_lin_min: 0.35_f64.to_radians(),
            alpha_peak: 10.0_f64.to_radians(),
            standstill_gap: 2.0,
            time_gap: 1.8,
            lat_accel_max: 5.0,
            comfort_jerk: 5.0,
            lateral_margin: 0.05,
            longitudinal_margin: 0.5,
            relax_keep_fraction: 0.9,
            relax_recovery_steps: 80,
            lane_change_steps: 50,
            lane_change_grid: vec![0, 20, 40],
        }
    }
}

/// Trajectory-contract checker tolerances (SR2..SR5).
#[derive(Debug, Clone, Deserialize)]
#[serde(default)]
pub struct ContractConfig {
    /// Position-chain tolerance of the consistency check [m].
    pub tol_geo: f64,
    /// Heading-continuity tolerance of the consistency check [rad].
    pub tol_psi: f64,
    /// Longitudinal acceleration bounds [m/s^2].
    pub a_lon_min: f64,
    pub a_lon_max: f64,
    /// Speed bounds [m/s].
    pub v_min: f64,
    pub v_max: f64,
    /// Steering bounds.
    pub steer_max: f64,
    pub steer_rate_max: f64,
    pub a_lat_max: f64,
    /// Wheelbase used for the heading/steering consistency check [m].
    pub wheelbase: f64,
    /// Safety distance parameters of the stay-in-lane check.
    pub standstill_gap: f64,
    pub time_gap: f64,
    /// Drivability verdict bound on the tracked lateral offset [m].
    pub max_tracking_offset: f64,
}

impl Default for ContractConfig {
    fn default() -> Self {
        Self {
            tol_geo: 1e-3,
            tol_psi: 0.5_f64.to_radians(),
            a_lon_min: -10.0,
            a_lon_max: 3.0,
            v_min: 0.0,
            v_max: 130.0 / 3.6,
            steer_max: 34.0_f64.to_radians(),
            steer_rate_max: 68.0_f64.to_radians(),
            a_lat_max: 5.0,
            wheelbase: 2.8,
            standstill_gap: 2.0,
            time_gap: 1.8,
            max_tracking_offset: 0.05,
        }
    }
}

/// Gains of the fixed tracking controller used by the drivability oracle and
/// the closed-loop simulator (pure-pursuit lateral, PI longitudinal).
#[derive(Debug, Clone, Deserialize)]
#[serde(default)]
pub struct TrackingConfig {
    pub lookahead_gain: f64,
    pub lookahead_min: f64,
    pub lookahead_max: f64,
    pub speed_kp: f64,
    pub speed_ki: f64,
    /// Controller step size [s].
    pub dt: f64,
}

impl Default for TrackingConfig {
    fn default() -> Self {
        Self {
            lookahead_gain: 0.22,
            lookahead_min: 3.0,
            lookahead_max: 12.0,
            speed_kp: 2200.0,
            speed_ki: 420.0,
            dt: 1e-3,
        }
    }
}

/// Behavior parameters of the specialized driving modes.
#[derive(Debug, Clone, Deserialize)]
#[serde(default)]
pub struct ModeConfig {
    /// Speed cap in wrong-way-driver mode [m/s].
    pub wrong_way_speed: f64,
    /// Speed cap in defensive-driving mode [m/s].
    pub defensive_speed: f64,
    /// Front-gap scale factor in defensive / wrong-way modes.
    pub defensive_gap_factor: f64,
    /// Speed cap in rescue-alley mode [m/s].
    pub rescue_speed: f64,
    /// Lateral bias magnitude towards the lane edge in rescue-alley mode [m].
    pub rescue_offset: f64,
    /// Speed cap in oversized-vehicle mode [m/s].
    pub oversized_speed: f64,
    /// Speed cap in obstacle-on-shoulder mode [m/s].
    pub shoulder_obstacle_speed: f64,
    /// Lateral bias away from a blocked shoulder [m].
    pub shoulder_obstacle_offset: f64,
}

impl Default for ModeConfig {
    fn default() -> Self {
        Self {
            wrong_way_speed: 80.0 / 3.6,
            defensive_speed: 100.0 / 3.6,
            defensive_gap_factor: 1.5,
            rescue_speed: 10.0,
            rescue_offset: 0.8,
            oversized_speed: 60.0 / 3.6,
            shoulder_obstacle_speed: 100.0 / 3.6,
            shoulder_obstacle_offset: 0.5,
        }
    }
}

/// Pre-filter thresholds of the infeasibility analysis.
#[derive(Debug, Clone, Deserialize)]
#[serde(default)]
pub struct SwitchConfig {
    /// Ego speed threshold of the reversing-lead stop filter [m/s] (5 km/h).
    pub v_low: f64,
    /// Friction drop that triggers the pre-emptive tire-model swap.
    pub mu_drop: f64,
    /// Window of the friction-drop detector [s].
    pub mu_drop_window: f64,
    /// Absolute friction level treated as slippery surface.
    pub mu_slippery: f64,
    /// Consecutive optimal primary steps required before switching back.
    pub hysteresis: usize,
}

impl Default for SwitchConfig {
    fn default() -> Self {
        Self {
            v_low: 5.0 / 3.6,
            mu_drop: 0.3,
            mu_drop_window: 1.0,
            mu_slippery: 0.35,
            hysteresis: 10,
        }
    }
}

/// Top-level configuration bundle.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default)]
pub struct PlannerConfig {
    pub weights: CostWeights,
    pub backup_weights: Option<CostWeights>,
    pub solver: SolverConfig,
    pub actuators: ActuatorLimits,
    pub constraints: ConstraintConfig,
    pub contract: ContractConfig,
    pub tracking: TrackingConfig,
    pub modes: ModeConfig,
    pub switching: SwitchConfig,
}

/// Configuration errors.
#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config file: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot parse config file: {0}")]
    Parse(#[from] toml::de::Error),
}

impl PlannerConfig {
    /// Loads a TOML override file on top of the built-in defaults.
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)?;
        Ok(toml::from_str(&text)?)
    }

    /// Resolves the config from the `TRAJPLAN_CONFIG` environment variable,
    /// falling back to the defaults when unset.
    pub fn from_env() -> Result<Self, ConfigError> {
        match std::env::var_os("TRAJPLAN_CONFIG") {
            Some(path) => Self::from_file(Path::new(&path)),
            None => Ok(Self::default()),
        }
    }

    pub fn backup_weights(&self) -> CostWeights {
        self.backup_weights.clone().unwrap_or_else(CostWeights::backup)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_consistent() {
        let cfg = PlannerConfig::default();
        assert!((cfg.contract.steer_max - cfg.actuators.steer_max).abs() < 1e-12);
        assert!(cfg.solver.k_base > 0 && cfg.solver.k_ext > 0);
        assert_eq!(N_P, 120);
        assert!((T_S - 0.05).abs() < 1e-15);
    }

    #[test]
    fn partial_toml_overrides() {
        let cfg: PlannerConfig =
            toml::from_str("[weights]\nprogress = 2.0\n[switching]\nhysteresis = 7\n").unwrap();
        assert_eq!(cfg.weights.progress, 2.0);
        assert_eq!(cfg.switching.hysteresis, 7);
        // untouched keys keep defaults
        assert_eq!(cfg.weights.lateral, CostWeights::default().lateral);
    }
}
