//! Dynamic bicycle models in Frenet coordinates.
//!
//! Both tire variants share the same single-track structure; below the blend
//! band the lateral dynamics relax towards kinematic-bicycle behavior, which
//! removes the slip-angle singularity at standstill. No aerodynamic drag or
//! rolling resistance is modeled; drivetrain torque maps to longitudinal
//! force through the wheel radius.

use nalgebra::{SMatrix, SVector};

use super::state::{ControlInput, Environment, VehicleParams, VehicleState};
use super::tire;
use super::{RoadModel, G};

/// Lower edge of the kinematic/dynamic blend band [m/s].
pub const BLEND_LO: f64 = 1.0;
/// Upper edge of the kinematic/dynamic blend band [m/s].
pub const BLEND_HI: f64 = 3.0;
/// Relaxation time of the kinematic lateral states [s].
const KIN_TAU: f64 = 0.2;
/// Velocity floor used in slip-angle denominators [m/s].
const V_FLOOR: f64 = 0.5;
/// Side-wind force coefficient: 0.5 * rho * c_y * A_side [kg/m].
const WIND_COEFF: f64 = 0.5 * 1.225 * 0.9 * 7.0;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ModelError {
    #[error("non-finite state or input")]
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TireModel {
    Linear,
    Pacejka,
}

/// Bicycle model bound to a road, parameter set and (for the Pacejka
/// variant) environmental conditions.
#[derive(Clone, Copy)]
pub struct BicycleModel<'a> {
    pub params: &'a VehicleParams,
    pub road: &'a RoadModel,
    pub tire: TireModel,
    pub env: Option<&'a Environment>,
}

impl<'a> BicycleModel<'a> {
    pub fn linear(params: &'a VehicleParams, road: &'a RoadModel) -> Self {
        Self { params, road, tire: TireModel::Linear, env: None }
    }

    pub fn pacejka(params: &'a VehicleParams, road: &'a RoadModel, env: &'a Environment) -> Self {
        Self { params, road, tire: TireModel::Pacejka, env: Some(env) }
    }

    fn lateral_force(&self, alpha: f64, front: bool) -> (f64, f64) {
        let p = self.params;
        let stiff = if front { p.stiff_front } else { p.stiff_rear };
        match self.tire {
            TireModel::Linear => tire::linear(alpha, stiff),
            TireModel::Pacejka => {
                let mu = self.env.map(|e| e.mu).unwrap_or(1.0);
                let fz = if front { p.front_axle_load() } else { p.rear_axle_load() };
                tire::pacejka(alpha, stiff, mu, fz)
            }
        }
    }

    /// External lateral acceleration from bank angle and side wind. Only the
    /// environment-aware (Pacejka) variant feels these terms; the primary
    /// prediction model stays minimal.
    fn external_lat_accel(&self) -> f64 {
        match self.env {
            None => 0.0,
            Some(env) => {
                let wind = WIND_COEFF * env.wind * env.wind.abs() / self.params.mass;
                -G * self.road.bank.sin() + wind
            }
        }
    }

    /// Time derivative of the six-state vector.
    pub fn derivative(&self, x: &VehicleState, u: &ControlInput) -> SVector<f64, 6> {
        let p = self.params;
        let kappa = self.road.curvature(x.s);
        let denom = 1.0 - x.e * kappa;
        let (sin_psi, cos_psi) = x.yaw.sin_cos();

        let sp = (x.vx * cos_psi - x.vy * sin_psi) / denom;
        let ep = x.vx * sin_psi + x.vy * cos_psi;
        let psip = x.yaw_rate - kappa * sp;

        let fx = u.torque / p.wheel_radius;
        let v_eff = x.vx.max(V_FLOOR);
        let zf = (x.vy + p.lf * x.yaw_rate) / v_eff;
        let zr = (x.vy - p.lr * x.yaw_rate) / v_eff;
        let alpha_f = u.steer - zf.atan();
        let alpha_r = -zr.atan();
        let (fyf, _) = self.lateral_force(alpha_f, true);
        let (fyr, _) = self.lateral_force(alpha_r, false);
        let (sin_d, cos_d) = u.steer.sin_cos();

        let wd_dyn = (p.lf * fyf * cos_d - p.lr * fyr) / p.yaw_inertia;
        let vxd_dyn = (fx - fyf * sin_d) / p.mass + x.yaw_rate * x.vy;
        let vyd_dyn =
            (fyf * cos_d + fyr) / p.mass - x.yaw_rate * x.vx + self.external_lat_accel();

        let tan_d = u.steer.tan();
        let wheelbase = p.wheelbase();
        let wd_kin = (x.vx * tan_d / wheelbase - x.yaw_rate) / KIN_TAU;
        let vyd_kin = (x.vx * tan_d * p.lr / wheelbase - x.vy) / KIN_TAU;
        let vxd_kin = fx / p.mass;

        let lam = blend(x.vx);
        SVector::<f64, 6>::new(
            sp,
            ep,
            psip,
            lam * wd_dyn + (1.0 - lam) * wd_kin,
            lam * vxd_dyn + (1.0 - lam) * vxd_kin,
            lam * vyd_dyn + (1.0 - lam) * vyd_kin,
        )
    }

    /// Analytic Jacobians of [`Self::derivative`] with respect to the state
    /// and input. Curvature is treated as locally constant in `s`.
    pub fn jacobians(
        &self,
        x: &VehicleState,
        u: &ControlInput,
    ) -> (SMatrix<f64, 6, 6>, SMatrix<f64, 6, 2>) {
        let p = self.params;
        let kappa = self.road.curvature(x.s);
        let denom = 1.0 - x.e * kappa;
        let (sin_psi, cos_psi) = x.yaw.sin_cos();

        let n = x.vx * cos_psi - x.vy * sin_psi;
        let sp = n / denom;
        let ep = x.vx * sin_psi + x.vy * cos_psi;

        let mut a = SMatrix::<f64, 6, 6>::zeros();
        let mut b = SMatrix::<f64, 6, 2>::zeros();

        // row 0: sp = n / denom
        let dsp = [0.0, sp * kappa / denom, -ep / denom, 0.0, cos_psi / denom, -sin_psi / denom];
        for (j, v) in dsp.iter().enumerate() {
            a[(0, j)] = *v;
        }
        // row 1: ep
        a[(1, 2)] = n;
        a[(1, 4)] = sin_psi;
        a[(1, 5)] = cos_psi;
        // row 2: psip = w - kappa * sp
        a[(2, 3)] = 1.0;
        for j in 0..6 {
            a[(2, j)] -= kappa * dsp[j];
        }

        // dynamic lateral terms
        let fx = u.torque / p.wheel_radius;
        let v_eff = x.vx.max(V_FLOOR);
        let dveff = if x.vx > V_FLOOR { 1.0 } else { 0.0 };
        let zf = (x.vy + p.lf * x.yaw_rate) / v_eff;
        let zr = (x.vy - p.lr * x.yaw_rate) / v_eff;
        let alpha_f = u.steer - zf.atan();
        let alpha_r = -zr.atan();
        let (fyf, kf) = self.lateral_force(alpha_f, true);
        let (fyr, kr) = self.lateral_force(alpha_r, false);
        let (sin_d, cos_d) = u.steer.sin_cos();

        // slip-angle partials: alpha = +-(delta) - atan(z)
        let gf = -1.0 / (1.0 + zf * zf); // d(alpha_f)/dz_f
        let gr = -1.0 / (1.0 + zr * zr);
        // z partials over (w, vx, vy)
        let dzf_w = p.lf / v_eff;
        let dzf_vx = -zf / v_eff * dveff;
        let dzf_vy = 1.0 / v_eff;
        let dzr_w = -p.lr / v_eff;
        let dzr_vx = -zr / v_eff * dveff;
        let dzr_vy = 1.0 / v_eff;

        let daf = [gf * dzf_w, gf * dzf_vx, gf * dzf_vy]; // over (w, vx, vy)
        let dar = [gr * dzr_w, gr * dzr_vx, gr * dzr_vy];

        // force partials over (w, vx, vy)
        let dfyf = [kf * daf[0], kf * daf[1], kf * daf[2]];
        let dfyr = [kr * dar[0], kr * dar[1], kr * dar[2]];

        let iz = p.yaw_inertia;
        let m = p.mass;

        // dynamic-regime rows over (w, vx, vy)
        let dwd_dyn = [
            (p.lf * cos_d * dfyf[0] - p.lr * dfyr[0]) / iz,
            (p.lf * cos_d * dfyf[1] - p.lr * dfyr[1]) / iz,
            (p.lf * cos_d * dfyf[2] - p.lr * dfyr[2]) / iz,
        ];
        let dvxd_dyn = [
            -sin_d * dfyf[0] / m + x.vy,
            -sin_d * dfyf[1] / m,
            -sin_d * dfyf[2] / m + x.yaw_rate,
        ];
        let dvyd_dyn = [
            (cos_d * dfyf[0] + dfyr[0]) / m - x.vx,
            (cos_d * dfyf[1] + dfyr[1]) / m - x.yaw_rate,
            (cos_d * dfyf[2] + dfyr[2]) / m,
        ];

        // input partials of the dynamic regime
        let dwd_dyn_u = [(p.lf * (cos_d * kf - sin_d * fyf)) / iz, 0.0];
        let dvxd_dyn_u = [-(kf * sin_d + fyf * cos_d) / m, 1.0 / (m * p.wheel_radius)];
        let dvyd_dyn_u = [(kf * cos_d - fyf * sin_d) / m, 0.0];

        // kinematic regime
        let tan_d = u.steer.tan();
        let sec2 = 1.0 + tan_d * tan_d;
        let wheelbase = p.wheelbase();
        let wd_kin = (x.vx * tan_d / wheelbase - x.yaw_rate) / KIN_TAU;
        let vyd_kin = (x.vx * tan_d * p.lr / wheelbase - x.vy) / KIN_TAU;
        let vxd_kin = fx / m;
        let dwd_kin = [-1.0 / KIN_TAU, tan_d / (wheelbase * KIN_TAU), 0.0]; // (w, vx, vy)
        let dvyd_kin = [0.0, tan_d * p.lr / (wheelbase * KIN_TAU), -1.0 / KIN_TAU];
        let dwd_kin_u = [x.vx * sec2 / (wheelbase * KIN_TAU), 0.0];
        let dvyd_kin_u = [x.vx * sec2 * p.lr / (wheelbase * KIN_TAU), 0.0];
        let dvxd_kin_u = [0.0, 1.0 / (m * p.wheel_radius)];

        let wd_dyn = (p.lf * fyf * cos_d - p.lr * fyr) / iz;
        let vxd_dyn = (fx - fyf * sin_d) / m + x.yaw_rate * x.vy;
        let vyd_dyn = (fyf * cos_d + fyr) / m - x.yaw_rate * x.vx + self.external_lat_accel();

        let lam = blend(x.vx);
        let dlam = blend_slope(x.vx);

        // rows 3..5 over (w, vx, vy) = columns 3..5
        let cols = [3usize, 4, 5];
        let dyn_rows = [dwd_dyn, dvxd_dyn, dvyd_dyn];
        let kin_rows = [dwd_kin, [0.0, 0.0, 0.0], dvyd_kin];
        let dyn_vals = [wd_dyn, vxd_dyn, vyd_dyn];
        let kin_vals = [wd_kin, vxd_kin, vyd_kin];
        for (ri, row) in (3..6).enumerate() {
            for (ci, col) in cols.iter().enumerate() {
                a[(row, *col)] = lam * dyn_rows[ri][ci] + (1.0 - lam) * kin_rows[ri][ci];
            }
            // blend weight varies with vx
            a[(row, 4)] += dlam * (dyn_vals[ri] - kin_vals[ri]);
        }

        let dyn_u = [dwd_dyn_u, dvxd_dyn_u, dvyd_dyn_u];
        let kin_u = [dwd_kin_u, dvxd_kin_u, dvyd_kin_u];
        for (ri, row) in (3..6).enumerate() {
            for col in 0..2 {
                b[(row, col)] = lam * dyn_u[ri][col] + (1.0 - lam) * kin_u[ri][col];
            }
        }

        (a, b)
    }
}

fn blend(vx: f64) -> f64 {
    ((vx - BLEND_LO) / (BLEND_HI - BLEND_LO)).clamp(0.0, 1.0)
}

fn blend_slope(vx: f64) -> f64 {
    if vx > BLEND_LO && vx < BLEND_HI {
        1.0 / (BLEND_HI - BLEND_LO)
    } else {
        0.0
    }
}

/// Dynamic bicycle with the linear tire model.
pub fn ldbm_derivative(
    x: &VehicleState,
    u: &ControlInput,
    params: &VehicleParams,
    road: &RoadModel,
) -> Result<SVector<f64, 6>, ModelError> {
    if !x.is_finite() || !u.is_finite() {
        return Err(ModelError::NonFinite);
    }
    Ok(BicycleModel::linear(params, road).derivative(x, u))
}

/// Dynamic bicycle with the Pacejka tire model, friction and bank/wind aware.
pub fn ndbm_derivative(
    x: &VehicleState,
    u: &ControlInput,
    params: &VehicleParams,
    road: &RoadModel,
    env: &Environment,
) -> Result<SVector<f64, 6>, ModelError> {
    if !x.is_finite() || !u.is_finite() {
        return Err(ModelError::NonFinite);
    }
    Ok(BicycleModel::pacejka(params, road, env).derivative(x, u))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn straight() -> RoadModel {
        RoadModel::straight(5000.0, 2, 3.5)
    }

    #[test]
    fn rest_zero_input_zero_derivative() {
        let p = VehicleParams::default();
        let road = straight();
        let d = ldbm_derivative(&VehicleState::at_rest(), &ControlInput::ZERO, &p, &road).unwrap();
        assert_eq!(d, SVector::<f64, 6>::zeros());
        let env = Environment::default();
        let d =
            ndbm_derivative(&VehicleState::at_rest(), &ControlInput::ZERO, &p, &road, &env)
                .unwrap();
        assert_eq!(d, SVector::<f64, 6>::zeros());
    }

    #[test]
    fn straight_coasting() {
        let p = VehicleParams::default();
        let road = straight();
        let mut x = VehicleState::at_rest();
        x.vx = 20.0;
        let d = ldbm_derivative(&x, &ControlInput::ZERO, &p, &road).unwrap();
        assert_eq!(d[0], 20.0);
        for i in 1..6 {
            assert_eq!(d[i], 0.0, "component {i} must vanish");
        }
    }

    #[test]
    fn yaw_rate_derivative_matches_closed_form() {
        // independent evaluation of the single-track yaw equation at
        // x = (0,0,0,0,20,0), u = (0.05, 0): alpha_f = delta, alpha_r = 0
        let p = VehicleParams::default();
        let road = straight();
        let mut x = VehicleState::at_rest();
        x.vx = 20.0;
        let u = ControlInput { steer: 0.05, torque: 0.0 };
        let d = ldbm_derivative(&x, &u, &p, &road).unwrap();
        let fyf = p.stiff_front * 0.05;
        let expected = p.lf * fyf * 0.05_f64.cos() / p.yaw_inertia;
        assert!((d[3] - expected).abs() < 1e-12);
        // frozen value for the default parameter set
        assert!((d[3] - 2.231_582_613_070_002_7).abs() < 1e-9, "got {}", d[3]);
    }

    #[test]
    fn non_finite_rejected() {
        let p = VehicleParams::default();
        let road = straight();
        let mut x = VehicleState::at_rest();
        x.vx = f64::NAN;
        assert_eq!(
            ldbm_derivative(&x, &ControlInput::ZERO, &p, &road),
            Err(ModelError::NonFinite)
        );
    }

    fn fd_jacobians(
        model: &BicycleModel,
        x: &VehicleState,
        u: &ControlInput,
    ) -> (SMatrix<f64, 6, 6>, SMatrix<f64, 6, 2>) {
        let mut a = SMatrix::<f64, 6, 6>::zeros();
        let mut b = SMatrix::<f64, 6, 2>::zeros();
        let h = 1e-6;
        for j in 0..6 {
            let mut xp = x.to_vector();
            let mut xm = x.to_vector();
            xp[j] += h;
            xm[j] -= h;
            let dp = model.derivative(&VehicleState::from_vector(&xp, x.lane), u);
            let dm = model.derivative(&VehicleState::from_vector(&xm, x.lane), u);
            for i in 0..6 {
                a[(i, j)] = (dp[i] - dm[i]) / (2.0 * h);
            }
        }
        for j in 0..2 {
            let mut up = *u;
            let mut um = *u;
            match j {
                0 => {
                    up.steer += h;
                    um.steer -= h;
                }
                _ => {
                    up.torque += h;
                    um.torque -= h;
                }
            }
            let dp = model.derivative(x, &up);
            let dm = model.derivative(x, &um);
            for i in 0..6 {
                b[(i, j)] = (dp[i] - dm[i]) / (2.0 * h);
            }
        }
        (a, b)
    }

    #[test]
    fn jacobians_match_finite_differences() {
        let p = VehicleParams::default();
        let road = RoadModel::new(
            vec![super::super::road::RoadSegment { length: 4000.0, curvature: 1.2e-3, lane_count: 2 }],
            3.5,
        );
        let env = Environment { mu: 0.8, ..Environment::default() };
        // deterministic pseudo-random sweep over states and inputs,
        // avoiding the non-smooth blend edges and the velocity floor
        let mut seed = 0x2545F4914F6CDD1Du64;
        let mut rng = move || {
            seed ^= seed << 13;
            seed ^= seed >> 7;
            seed ^= seed << 17;
            (seed >> 11) as f64 / (1u64 << 53) as f64
        };
        for model_kind in [TireModel::Linear, TireModel::Pacejka] {
            let model = BicycleModel {
                params: &p,
                road: &road,
                tire: model_kind,
                env: Some(&env),
            };
            for _ in 0..1000 {
                let vx = 3.5 + 33.0 * rng();
                let x = VehicleState {
                    s: 10.0 + 3500.0 * rng(),
                    e: -3.0 + 6.0 * rng(),
                    yaw: -0.25 + 0.5 * rng(),
                    yaw_rate: -0.4 + 0.8 * rng(),
                    vx,
                    vy: -1.5 + 3.0 * rng(),
                    lane: 1,
                };
                let u = ControlInput {
                    steer: -0.3 + 0.6 * rng(),
                    torque: -4000.0 + 8000.0 * rng(),
                };
                let (a, b) = model.jacobians(&x, &u);
                let (a_fd, b_fd) = fd_jacobians(&model, &x, &u);
                let scale_a = a.amax().max(1.0);
                let scale_b = b.amax().max(1.0);
                assert!(
                    (a - a_fd).amax() / scale_a < 1e-5,
                    "state jacobian mismatch: {:.3e}",
                    (a - a_fd).amax() / scale_a
                );
                assert!(
                    (b - b_fd).amax() / scale_b < 1e-5,
                    "input jacobian mismatch: {:.3e}",
                    (b - b_fd).amax() / scale_b
                );
            }
        }
    }

    #[test]
    fn ldbm_ndbm_agree_at_small_slip() {
        // force-level comparison happens in the tire module; here the full
        // derivative fields must agree within 5% for sub-degree slip angles
        let p = VehicleParams::default();
        let road = straight();
        let env = Environment::default();
        let lin = BicycleModel::linear(&p, &road);
        let pac = BicycleModel::pacejka(&p, &road, &env);
        for i in -5..=5 {
            let x = VehicleState {
                s: 0.0,
                e: 0.0,
                yaw: 0.0,
                yaw_rate: 0.0,
                vx: 25.0,
                vy: 25.0 * (i as f64 * 0.1_f64.to_radians()).tan(),
                lane: 1,
            };
            let u = ControlInput::ZERO;
            let dl = lin.derivative(&x, &u);
            let dp = pac.derivative(&x, &u);
            if dl[3].abs() > 1e-9 {
                assert!(((dp[3] - dl[3]) / dl[3]).abs() < 0.05);
            }
        }
    }
}
