//! Nonlinear double-track model used as the drivability oracle.
//!
//! Per-wheel Pacejka lateral forces, quasi-static load transfer from the
//! current accelerations and the CoG height, even four-wheel torque split.
//! The model lives in the global frame so it can track emitted trajectories
//! directly. Integration is RK4 at millisecond substeps; the caller controls
//! the step size (≤ 1 ms).

use serde::{Deserialize, Serialize};

use super::state::{ControlInput, VehicleParams};
use super::tire;
use super::G;

/// Double-track state in the global frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DoubleTrackState {
    pub x: f64,
    pub y: f64,
    pub yaw: f64,
    pub yaw_rate: f64,
    pub vx: f64,
    pub vy: f64,
}

impl DoubleTrackState {
    pub fn is_finite(&self) -> bool {
        [self.x, self.y, self.yaw, self.yaw_rate, self.vx, self.vy]
            .iter()
            .all(|v| v.is_finite())
    }
}

/// Environmental conditions of an oracle run.
#[derive(Debug, Clone, Copy)]
pub struct NddmConditions {
    pub mu: f64,
    /// Bank angle [rad]; gravity component acts laterally on the body.
    pub bank: f64,
    /// Side wind speed [m/s], positive pushing towards +y (body frame).
    pub wind: f64,
}

impl Default for NddmConditions {
    fn default() -> Self {
        Self { mu: 1.0, bank: 0.0, wind: 0.0 }
    }
}

/// Per-wheel saturation report of one step: front-left, front-right,
/// rear-left, rear-right.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct WheelReport {
    pub saturated: [bool; 4],
}

impl WheelReport {
    pub fn any(&self) -> bool {
        self.saturated.iter().any(|s| *s)
    }
}

const V_FLOOR: f64 = 0.5;
const BLEND_LO: f64 = 1.0;
const BLEND_HI: f64 = 3.0;
const KIN_TAU: f64 = 0.2;
const WIND_COEFF: f64 = 0.5 * 1.225 * 0.9 * 7.0;
/// Friction-circle utilization above which a wheel counts as saturated.
const SAT_UTILIZATION: f64 = 1.0;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum NddmError {
    #[error("non-finite state or input")]
    NonFinite,
    #[error("oracle step size {0} s exceeds 1 ms")]
    StepTooLarge(f64),
}

struct WheelForces {
    fy: [f64; 4],
    fx: [f64; 4],
    report: WheelReport,
}

fn wheel_forces(
    s: &DoubleTrackState,
    u: &ControlInput,
    p: &VehicleParams,
    c: &NddmConditions,
) -> WheelForces {
    let half_track = p.track_width / 2.0;
    let v_eff = s.vx.max(V_FLOOR);
    // wheel-center velocities (body frame)
    let vy_f = s.vy + p.lf * s.yaw_rate;
    let vy_r = s.vy - p.lr * s.yaw_rate;
    let vx_l = (s.vx - s.yaw_rate * half_track).max(V_FLOOR);
    let vx_r = (s.vx + s.yaw_rate * half_track).max(V_FLOOR);
    let _ = v_eff;

    let alpha = [
        u.steer - (vy_f / vx_l).atan(), // FL
        u.steer - (vy_f / vx_r).atan(), // FR
        -(vy_r / vx_l).atan(),          // RL
        -(vy_r / vx_r).atan(),          // RR
    ];

    // quasi-static loads from the current force balance estimate
    let wheelbase = p.wheelbase();
    let ax = u.torque / p.wheel_radius / p.mass;
    let ay = s.yaw_rate * s.vx;
    let fz_f0 = p.mass * G * p.lr / (2.0 * wheelbase);
    let fz_r0 = p.mass * G * p.lf / (2.0 * wheelbase);
    let dlon = p.mass * ax * p.z_cog / (2.0 * wheelbase);
    let dlat_f = p.mass * ay * p.z_cog / p.track_width * (p.lr / wheelbase);
    let dlat_r = p.mass * ay * p.z_cog / p.track_width * (p.lf / wheelbase);
    let fz = [
        (fz_f0 - dlon - dlat_f).max(0.05 * fz_f0), // FL (ay > 0 unloads left)
        (fz_f0 - dlon + dlat_f).max(0.05 * fz_f0),
        (fz_r0 + dlon - dlat_r).max(0.05 * fz_r0),
        (fz_r0 + dlon + dlat_r).max(0.05 * fz_r0),
    ];

    let fx_wheel = u.torque / p.wheel_radius / 4.0;
    let mut fy = [0.0; 4];
    let mut report = WheelReport::default();
    for i in 0..4 {
        let stiff = if i < 2 { p.stiff_front / 2.0 } else { p.stiff_rear / 2.0 };
        let (f, _) = tire::pacejka(alpha[i], stiff, c.mu, fz[i]);
        fy[i] = f;
        let peak = tire::pacejka_peak_slip(stiff, c.mu, fz[i]);
        let utilization = (f * f + fx_wheel * fx_wheel).sqrt() / (c.mu * fz[i]).max(1e-6);
        if alpha[i].abs() > peak || utilization > SAT_UTILIZATION {
            report.saturated[i] = true;
        }
    }
    WheelForces { fy, fx: [fx_wheel; 4], report }
}

fn derivative(
    s: &DoubleTrackState,
    u: &ControlInput,
    p: &VehicleParams,
    c: &NddmConditions,
    forces: &WheelForces,
) -> [f64; 6] {
    let (sin_psi, cos_psi) = s.yaw.sin_cos();
    let (sin_d, cos_d) = u.steer.sin_cos();
    let half_track = p.track_width / 2.0;

    let fyf = forces.fy[0] + forces.fy[1];
    let fyr = forces.fy[2] + forces.fy[3];
    let fxf = forces.fx[0] + forces.fx[1];
    let fxr = forces.fx[2] + forces.fx[3];

    let a_ext = -G * c.bank.sin() + WIND_COEFF * c.wind * c.wind.abs() / p.mass;

    // yaw moment: front forces rotated by the steering angle, torque split
    // is symmetric so longitudinal differentials cancel across the track
    let mz = p.lf * (fyf * cos_d + fxf * sin_d) - p.lr * fyr
        + half_track * (forces.fx[1] - forces.fx[0]) * cos_d
        + half_track * (forces.fx[3] - forces.fx[2]);
    let wd_dyn = mz / p.yaw_inertia;
    let vxd_dyn = (fxr + fxf * cos_d - fyf * sin_d) / p.mass + s.yaw_rate * s.vy;
    let vyd_dyn = (fyf * cos_d + fxf * sin_d + fyr) / p.mass - s.yaw_rate * s.vx + a_ext;

    let tan_d = u.steer.tan();
    let wheelbase = p.wheelbase();
    let wd_kin = (s.vx * tan_d / wheelbase - s.yaw_rate) / KIN_TAU;
    let vyd_kin = (s.vx * tan_d * p.lr / wheelbase - s.vy) / KIN_TAU;
    let vxd_kin = (fxf + fxr) / p.mass;

    let lam = ((s.vx - BLEND_LO) / (BLEND_HI - BLEND_LO)).clamp(0.0, 1.0);

    [
        s.vx * cos_psi - s.vy * sin_psi,
        s.vx * sin_psi + s.vy * cos_psi,
        s.yaw_rate,
        lam * wd_dyn + (1.0 - lam) * wd_kin,
        lam * vxd_dyn + (1.0 - lam) * vxd_kin,
        lam * vyd_dyn + (1.0 - lam) * vyd_kin,
    ]
}

/// Advances the double-track model by one RK4 step of at most 1 ms and
/// reports per-wheel saturation at the step start.
pub fn nddm_step(
    state: &DoubleTrackState,
    u: &ControlInput,
    params: &VehicleParams,
    conditions: &NddmConditions,
    dt: f64,
) -> Result<(DoubleTrackState, WheelReport), NddmError> {
    if !state.is_finite() || !u.is_finite() {
        return Err(NddmError::NonFinite);
    }
    if dt > 1e-3 + 1e-12 {
        return Err(NddmError::StepTooLarge(dt));
    }

    let eval = |s: &DoubleTrackState| {
        let f = wheel_forces(s, u, params, conditions);
        derivative(s, u, params, conditions, &f)
    };
    let report = wheel_forces(state, u, params, conditions).report;

    let add = |s: &DoubleTrackState, k: &[f64; 6], h: f64| DoubleTrackState {
        x: s.x + h * k[0],
        y: s.y + h * k[1],
        yaw: s.yaw + h * k[2],
        yaw_rate: s.yaw_rate + h * k[3],
        vx: (s.vx + h * k[4]).max(0.0),
        vy: s.vy + h * k[5],
    };

    let k1 = eval(state);
    let k2 = eval(&add(state, &k1, dt / 2.0));
    let k3 = eval(&add(state, &k2, dt / 2.0));
    let k4 = eval(&add(state, &k3, dt));
    let mut ks = [0.0; 6];
    for i in 0..6 {
        ks[i] = (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) / 6.0;
    }
    Ok((add(state, &ks, dt), report))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn straight_driving_is_symmetric() {
        let p = VehicleParams::default();
        let c = NddmConditions::default();
        let s = DoubleTrackState { x: 0.0, y: 0.0, yaw: 0.0, yaw_rate: 0.0, vx: 25.0, vy: 0.0 };
        let f = wheel_forces(&s, &ControlInput::ZERO, &p, &c);
        assert_eq!(f.fy[0], f.fy[1]);
        assert_eq!(f.fy[2], f.fy[3]);
        assert!(!f.report.any());
        let (next, _) = nddm_step(&s, &ControlInput::ZERO, &p, &c, 1e-3).unwrap();
        assert!((next.y).abs() < 1e-12 && next.yaw.abs() < 1e-12);
        assert!((next.x - 0.025).abs() < 1e-9);
    }

    /// Drives the model towards a steady circle with the given lateral
    /// acceleration using a slow steering regulator, then reports whether
    /// any wheel saturated during the last second.
    fn steady_circle_saturates(mu: f64, a_lat: f64) -> bool {
        let p = VehicleParams::default();
        let c = NddmConditions { mu, ..Default::default() };
        let vx = 15.0;
        let target_rate = a_lat / vx;
        let mut s =
            DoubleTrackState { x: 0.0, y: 0.0, yaw: 0.0, yaw_rate: 0.0, vx, vy: 0.0 };
        let mut steer = 0.0;
        let mut saturated = false;
        let steps = 4000;
        for i in 0..steps {
            steer += 0.4 * (target_rate - s.yaw_rate) * 1e-3;
            steer = steer.clamp(-0.6, 0.6);
            let u = ControlInput { steer, torque: 40.0 * (vx - s.vx) * p.mass * p.wheel_radius * 1e-3 };
            let (next, report) = nddm_step(&s, &u, &p, &c, 1e-3).unwrap();
            s = next;
            if i > steps - 1000 && report.any() {
                saturated = true;
            }
        }
        saturated
    }

    #[test]
    fn gentle_circle_on_dry_road_stays_linear() {
        assert!(!steady_circle_saturates(1.0, 2.0));
    }

    #[test]
    fn same_circle_on_ice_saturates() {
        assert!(steady_circle_saturates(0.15, 2.0));
    }

    #[test]
    fn oversized_step_rejected() {
        let p = VehicleParams::default();
        let s = DoubleTrackState { x: 0.0, y: 0.0, yaw: 0.0, yaw_rate: 0.0, vx: 10.0, vy: 0.0 };
        assert!(matches!(
            nddm_step(&s, &ControlInput::ZERO, &p, &NddmConditions::default(), 5e-3),
            Err(NddmError::StepTooLarge(_))
        ));
    }
}
