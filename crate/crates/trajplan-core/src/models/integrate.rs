//! Discretization of the bicycle models.

use nalgebra::{SMatrix, SVector};

use super::bicycle::BicycleModel;
use super::state::{ControlInput, VehicleState};

/// Classic fourth-order Runge-Kutta step over one sampling period.
pub fn discretize_rk4(
    model: &BicycleModel,
    x: &VehicleState,
    u: &ControlInput,
    t_s: f64,
) -> VehicleState {
    let x0 = x.to_vector();
    let eval = |v: &SVector<f64, 6>| model.derivative(&VehicleState::from_vector(v, x.lane), u);
    let k1 = eval(&x0);
    let k2 = eval(&(x0 + k1 * (t_s / 2.0)));
    let k3 = eval(&(x0 + k2 * (t_s / 2.0)));
    let k4 = eval(&(x0 + k3 * t_s));
    let next = x0 + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (t_s / 6.0);
    VehicleState::from_vector(&next, x.lane)
}

/// RK4 step together with the discrete-time sensitivities
/// `(x_next, d x_next / d x, d x_next / d u)` assembled by the chain rule
/// through the four stages.
pub fn rk4_with_sensitivities(
    model: &BicycleModel,
    x: &VehicleState,
    u: &ControlInput,
    t_s: f64,
) -> (VehicleState, SMatrix<f64, 6, 6>, SMatrix<f64, 6, 2>) {
    let x0 = x.to_vector();
    let id = SMatrix::<f64, 6, 6>::identity();

    let stage = |v: &SVector<f64, 6>| {
        let st = VehicleState::from_vector(v, x.lane);
        let d = model.derivative(&st, u);
        let (a, b) = model.jacobians(&st, u);
        (d, a, b)
    };

    let (k1, a1, b1) = stage(&x0);
    let dk1_dx = a1;
    let dk1_du = b1;

    let x2 = x0 + k1 * (t_s / 2.0);
    let (k2, a2, b2) = stage(&x2);
    let dk2_dx = a2 * (id + dk1_dx * (t_s / 2.0));
    let dk2_du = a2 * dk1_du * (t_s / 2.0) + b2;

    let x3 = x0 + k2 * (t_s / 2.0);
    let (k3, a3, b3) = stage(&x3);
    let dk3_dx = a3 * (id + dk2_dx * (t_s / 2.0));
    let dk3_du = a3 * dk2_du * (t_s / 2.0) + b3;

    let x4 = x0 + k3 * t_s;
    let (k4, a4, b4) = stage(&x4);
    let dk4_dx = a4 * (id + dk3_dx * t_s);
    let dk4_du = a4 * dk3_du * t_s + b4;

    let next = x0 + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (t_s / 6.0);
    let a = id + (dk1_dx + dk2_dx * 2.0 + dk3_dx * 2.0 + dk4_dx) * (t_s / 6.0);
    let b = (dk1_du + dk2_du * 2.0 + dk3_du * 2.0 + dk4_du) * (t_s / 6.0);
    (VehicleState::from_vector(&next, x.lane), a, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{RoadModel, RoadSegment, VehicleParams};

    #[test]
    fn rest_is_a_fixed_point() {
        let p = VehicleParams::default();
        let road = RoadModel::straight(100.0, 1, 3.5);
        let model = BicycleModel::linear(&p, &road);
        let x = VehicleState::at_rest();
        let next = discretize_rk4(&model, &x, &ControlInput::ZERO, 0.05);
        assert_eq!(next, x);
    }

    #[test]
    fn straight_coasting_advances_exactly() {
        let p = VehicleParams::default();
        let road = RoadModel::straight(100.0, 1, 3.5);
        let model = BicycleModel::linear(&p, &road);
        let mut x = VehicleState::at_rest();
        x.vx = 20.0;
        let next = discretize_rk4(&model, &x, &ControlInput::ZERO, 0.05);
        assert_eq!(next.s, 1.0);
        assert_eq!(next.vx, 20.0);
        assert_eq!(next.e, 0.0);
    }

    #[test]
    fn cornering_matches_fine_step_reference() {
        let p = VehicleParams::default();
        let road = RoadModel::new(
            vec![RoadSegment { length: 2000.0, curvature: 2e-3, lane_count: 2 }],
            3.5,
        );
        let model = BicycleModel::linear(&p, &road);
        let x = VehicleState {
            s: 100.0,
            e: 0.4,
            yaw: 0.02,
            yaw_rate: 0.05,
            vx: 28.0,
            vy: 0.15,
            lane: 1,
        };
        let u = ControlInput { steer: 0.02, torque: 250.0 };
        let coarse = discretize_rk4(&model, &x, &u, 0.05);
        // reference: same integrator at 1 ms substeps
        let mut fine = x;
        for _ in 0..50 {
            fine = discretize_rk4(&model, &fine, &u, 1e-3);
        }
        let c = coarse.to_vector();
        let f = fine.to_vector();
        let rel = (c - f).amax() / f.amax().max(1.0);
        assert!(rel < 1e-6, "relative deviation {rel}");
    }

    #[test]
    fn sensitivities_match_finite_differences() {
        let p = VehicleParams::default();
        let road = RoadModel::new(
            vec![RoadSegment { length: 2000.0, curvature: 1e-3, lane_count: 2 }],
            3.5,
        );
        let model = BicycleModel::linear(&p, &road);
        let x = VehicleState {
            s: 50.0,
            e: -0.5,
            yaw: -0.01,
            yaw_rate: 0.03,
            vx: 22.0,
            vy: -0.1,
            lane: 1,
        };
        let u = ControlInput { steer: -0.01, torque: -500.0 };
        let (_, a, b) = rk4_with_sensitivities(&model, &x, &u, 0.05);
        let h = 1e-6;
        for j in 0..6 {
            let mut xp = x.to_vector();
            let mut xm = x.to_vector();
            xp[j] += h;
            xm[j] -= h;
            let np = discretize_rk4(&model, &VehicleState::from_vector(&xp, 1), &u, 0.05);
            let nm = discretize_rk4(&model, &VehicleState::from_vector(&xm, 1), &u, 0.05);
            let fd = (np.to_vector() - nm.to_vector()) / (2.0 * h);
            for i in 0..6 {
                assert!((a[(i, j)] - fd[i]).abs() < 1e-6 * a[(i, j)].abs().max(1.0));
            }
        }
        for j in 0..2 {
            let mut up = u;
            let mut um = u;
            if j == 0 {
                up.steer += h;
                um.steer -= h;
            } else {
                up.torque += h;
                um.torque -= h;
            }
            let np = discretize_rk4(&model, &x, &up, 0.05);
            let nm = discretize_rk4(&model, &x, &um, 0.05);
            let fd = (np.to_vector() - nm.to_vector()) / (2.0 * h);
            for i in 0..6 {
                assert!((b[(i, j)] - fd[i]).abs() < 1e-6 * b[(i, j)].abs().max(1.0));
            }
        }
    }
}
