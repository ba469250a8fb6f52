//! The transcribed optimal control problem and its constraint descriptors.
//!
//! Constraints are stored as structured descriptors so that structural
//! properties (safety vs. comfort class, obstacle references) remain
//! testable, and so the solution checker can re-evaluate every constraint
//! without going through the solver's linearization path. Every descriptor
//! is one scalar inequality `g(x, u) >= 0`.

use nalgebra::SVector;

use super::snapshot::{FrenetBox, ObjectClass};
use crate::config::{CostWeights, N_P};
use crate::models::{ControlInput, Environment, RoadModel, TireModel, VehicleParams, VehicleState};

/// Constraint family of Eq.-style state constraints: safety constraints are
/// essential and can never be relaxed; traffic-rule and comfort constraints
/// may be removed in emergency operation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintClass {
    Safety,
    Traffic,
}

/// Obstacle prediction carried inside the problem.
#[derive(Debug, Clone)]
pub struct ObstacleTrack {
    pub id: u32,
    pub class: ObjectClass,
    pub boxes: Vec<FrenetBox>,
    pub speed_range: (f64, f64),
}

impl ObstacleTrack {
    pub fn box_at(&self, step: usize) -> &FrenetBox {
        &self.boxes[step.min(self.boxes.len() - 1)]
    }
}

/// One scalar inequality.
#[derive(Debug, Clone, PartialEq)]
pub enum ConstraintKind {
    /// Gap to a leading obstacle: `s_obj_min - ego_front - required(v) >= 0`.
    /// `envelope` carries the relaxed-recovery cap `(floor0, recovery_steps)`
    /// installed by the cut-in relaxation.
    FrontGap {
        object: usize,
        standstill: f64,
        time_gap: f64,
        envelope: Option<(f64, usize)>,
    },
    /// Stay ahead of a trailing object in the target lane during a change:
    /// `ego_rear - bound >= 0`.
    KeepAhead { object: usize, bound: f64 },
    /// Lateral bounds `e` within `[lo, hi]` (one row per side).
    LateralMax { bound: f64 },
    LateralMin { bound: f64 },
    /// Speed bounds.
    SpeedMax { bound: f64 },
    SpeedMin,
    /// Per-step longitudinal acceleration `(v_{t+1} - v_t)/t_s` within bounds.
    AccelMax { bound: f64 },
    AccelMin { bound: f64 },
    /// Lateral acceleration `v * yaw_rate` within `±bound`.
    LatAccelMax { bound: f64 },
    LatAccelMin { bound: f64 },
    /// Tire slip-angle bounds (front/rear, upper/lower).
    SlipFrontMax { bound: f64 },
    SlipFrontMin { bound: f64 },
    SlipRearMax { bound: f64 },
    SlipRearMin { bound: f64 },
    /// Terminal exit strategy: full braking reaches standstill within the
    /// remaining free space: `2 a (free_s - s_N) - v_N^2 >= 0`.
    TerminalStop { decel: f64, free_s: f64 },
    /// Comfort bounds on the torque rate (jerk proxy): one row per side.
    TorqueRateUp { bound: f64 },
    TorqueRateDown { bound: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintSpec {
    pub kind: ConstraintKind,
    pub class: ConstraintClass,
    /// Step index the constraint is anchored at (state constraints: the
    /// state step; input constraints: the input step).
    pub step: usize,
}

/// Sparse gradient of one constraint: entries over up to two state knots and
/// the anchored input.
#[derive(Debug, Clone)]
pub struct ConstraintGrad {
    /// (state index, d g / d x) pairs.
    pub states: [(usize, SVector<f64, 6>); 2],
    pub n_states: usize,
    /// d g / d u at the anchored input step (order: steer, torque).
    pub input: [f64; 2],
    pub has_input: bool,
    /// d g / d u at the preceding input step (rate-type rows).
    pub input_prev: [f64; 2],
    pub has_input_prev: bool,
}

impl Default for ConstraintGrad {
    fn default() -> Self {
        Self {
            states: [(0, SVector::zeros()), (0, SVector::zeros())],
            n_states: 0,
            input: [0.0; 2],
            has_input: false,
            input_prev: [0.0; 2],
            has_input_prev: false,
        }
    }
}

/// Input bound set (actuator limits, never relaxed).
#[derive(Debug, Clone, Copy)]
pub struct InputBounds {
    pub steer_abs: f64,
    pub torque_min: f64,
    pub torque_max: f64,
    /// Per-step rate limits (already multiplied by t_s).
    pub steer_step: f64,
    pub torque_step: f64,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RelaxFlags {
    pub comfort_removed: bool,
    pub front_gap_relaxed: bool,
    /// Pre-emptive Pacejka swap requested by the infeasibility analysis.
    pub tire_swapped: bool,
}

/// Lane-candidate metadata.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CandidateInfo {
    pub lane_from: i32,
    pub lane_to: i32,
    /// Step at which the transition starts (meaningless when keeping lane).
    pub switch_step: usize,
}

/// Fully instantiated finite-horizon problem for one lane candidate.
#[derive(Debug, Clone)]
pub struct OcpProblem {
    pub horizon: usize,
    pub t_s: f64,
    pub initial_state: VehicleState,
    /// Input applied during the step preceding the horizon (rate anchoring).
    pub prev_input: ControlInput,
    pub params: VehicleParams,
    pub road: RoadModel,
    pub env: Environment,
    pub tire: TireModel,
    pub weights: CostWeights,
    /// Lane plan per step 0..=horizon.
    pub lane_plan: Vec<i32>,
    /// Lateral reference per step 0..=horizon.
    pub e_ref: Vec<f64>,
    pub bounds: InputBounds,
    pub constraints: Vec<ConstraintSpec>,
    pub tracks: Vec<ObstacleTrack>,
    /// Index of the trailing same-lane object wired into the cost (10b*).
    pub trailing_object: Option<usize>,
    /// Torque below which the heavy-braking penalty activates [N·m].
    pub braking_threshold: f64,
    pub relax: RelaxFlags,
    pub candidate: CandidateInfo,
    pub backup_variant: bool,
}

impl OcpProblem {
    /// Number of state and input entries across the horizon (problem size in
    /// the transcription sense; the solver may parameterize differently).
    pub fn decision_entries(&self) -> usize {
        self.horizon * (6 + 2)
    }

    /// Evaluates one constraint at a state/input trajectory.
    /// `xs` has `horizon + 1` entries, `us` has `horizon`.
    pub fn constraint_value(
        &self,
        spec: &ConstraintSpec,
        xs: &[SVector<f64, 6>],
        us: &[ControlInput],
    ) -> f64 {
        let t = spec.step;
        let x = &xs[t.min(xs.len() - 1)];
        match &spec.kind {
            ConstraintKind::FrontGap { object, standstill, time_gap, envelope } => {
                let b = self.tracks[*object].box_at(t);
                let gap = b.s_min - (x[0] + self.params.length / 2.0);
                let v = x[4];
                let mut required = standstill + time_gap * v;
                if let Some((floor0, recovery)) = envelope {
                    let ramp = (t as f64 / (*recovery).max(1) as f64).min(1.0);
                    required = required.min(floor0 * (1.0 - ramp) + required * ramp);
                }
                gap - required
            }
            ConstraintKind::KeepAhead { bound, .. } => {
                x[0] - self.params.length / 2.0 - bound
            }
            ConstraintKind::LateralMax { bound } => bound - x[1],
            ConstraintKind::LateralMin { bound } => x[1] - bound,
            ConstraintKind::SpeedMax { bound } => bound - x[4],
            ConstraintKind::SpeedMin => x[4],
            ConstraintKind::AccelMax { bound } => {
                let xn = &xs[(t + 1).min(xs.len() - 1)];
                bound - (xn[4] - x[4]) / self.t_s
            }
            ConstraintKind::AccelMin { bound } => {
                let xn = &xs[(t + 1).min(xs.len() - 1)];
                (xn[4] - x[4]) / self.t_s - bound
            }
            ConstraintKind::LatAccelMax { bound } => bound - x[4] * x[3],
            ConstraintKind::LatAccelMin { bound } => x[4] * x[3] + bound,
            ConstraintKind::SlipFrontMax { bound } => bound - self.slip_front(x, us, t),
            ConstraintKind::SlipFrontMin { bound } => self.slip_front(x, us, t) + bound,
            ConstraintKind::SlipRearMax { bound } => bound - self.slip_rear(x),
            ConstraintKind::SlipRearMin { bound } => self.slip_rear(x) + bound,
            ConstraintKind::TerminalStop { decel, free_s } => {
                let xn = xs.last().unwrap();
                2.0 * decel * (free_s - xn[0]) - xn[4] * xn[4]
            }
            ConstraintKind::TorqueRateUp { bound } => {
                let prev = if t == 0 { self.prev_input.torque } else { us[t - 1].torque };
                bound - (us[t].torque - prev)
            }
            ConstraintKind::TorqueRateDown { bound } => {
                let prev = if t == 0 { self.prev_input.torque } else { us[t - 1].torque };
                (us[t].torque - prev) + bound
            }
        }
    }

    /// Gradient of one constraint (sparse over state knots and the input).
    pub fn constraint_grad(
        &self,
        spec: &ConstraintSpec,
        xs: &[SVector<f64, 6>],
        us: &[ControlInput],
    ) -> ConstraintGrad {
        let t = spec.step;
        let mut g = ConstraintGrad::default();
        let x = &xs[t.min(xs.len() - 1)];
        match &spec.kind {
            ConstraintKind::FrontGap { time_gap, envelope, .. } => {
                let mut d = SVector::<f64, 6>::zeros();
                d[0] = -1.0;
                // required = min(nominal, enveloped); the envelope keeps the
                // same v-slope scaled by the ramp
                let vslope = match envelope {
                    None => *time_gap,
                    Some((floor0, recovery)) => {
                        let ramp = (t as f64 / (*recovery).max(1) as f64).min(1.0);
                        let v = x[4];
                        let nominal_req = self
                            .front_gap_nominal(spec)
                            .map(|(d0, tg)| d0 + tg * v)
                            .unwrap_or(0.0);
                        let capped = floor0 * (1.0 - ramp) + nominal_req * ramp;
                        if capped < nominal_req {
                            time_gap * ramp
                        } else {
                            *time_gap
                        }
                    }
                };
                d[4] = -vslope;
                g.states[0] = (t, d);
                g.n_states = 1;
            }
            ConstraintKind::KeepAhead { .. } => {
                let mut d = SVector::<f64, 6>::zeros();
                d[0] = 1.0;
                g.states[0] = (t, d);
                g.n_states = 1;
            }
            ConstraintKind::LateralMax { .. } => {
                let mut d = SVector::<f64, 6>::zeros();
                d[1] = -1.0;
                g.states[0] = (t, d);
                g.n_states = 1;
            }
            ConstraintKind::LateralMin { .. } => {
                let mut d = SVector::<f64, 6>::zeros();
                d[1] = 1.0;
                g.states[0] = (t, d);
                g.n_states = 1;
            }
            ConstraintKind::SpeedMax { .. } => {
                let mut d = SVector::<f64, 6>::zeros();
                d[4] = -1.0;
                g.states[0] = (t, d);
                g.n_states = 1;
            }
            ConstraintKind::SpeedMin => {
                let mut d = SVector::<f64, 6>::zeros();
                d[4] = 1.0;
                g.states[0] = (t, d);
                g.n_states = 1;
            }
            ConstraintKind::AccelMax { .. } => {
                let mut d0 = SVector::<f64, 6>::zeros();
                let mut d1 = SVector::<f64, 6>::zeros();
                d0[4] = 1.0 / self.t_s;
                d1[4] = -1.0 / self.t_s;
                g.states[0] = (t, d0);
                g.states[1] = (t + 1, d1);
                g.n_states = 2;
            }
            ConstraintKind::AccelMin { .. } => {
                let mut d0 = SVector::<f64, 6>::zeros();
                let mut d1 = SVector::<f64, 6>::zeros();
                d0[4] = -1.0 / self.t_s;
                d1[4] = 1.0 / self.t_s;
                g.states[0] = (t, d0);
                g.states[1] = (t + 1, d1);
                g.n_states = 2;
            }
            ConstraintKind::LatAccelMax { .. } => {
                let mut d = SVector::<f64, 6>::zeros();
                d[3] = -x[4];
                d[4] = -x[3];
                g.states[0] = (t, d);
                g.n_states = 1;
            }
            ConstraintKind::LatAccelMin { .. } => {
                let mut d = SVector::<f64, 6>::zeros();
                d[3] = x[4];
                d[4] = x[3];
                g.states[0] = (t, d);
                g.n_states = 1;
            }
            ConstraintKind::SlipFrontMax { .. } | ConstraintKind::SlipFrontMin { .. } => {
                let (da, du) = self.slip_front_grad(x);
                let sign =
                    if matches!(spec.kind, ConstraintKind::SlipFrontMax { .. }) { -1.0 } else { 1.0 };
                g.states[0] = (t, da * sign);
                g.n_states = 1;
                g.input = [du * sign, 0.0];
                g.has_input = true;
            }
            ConstraintKind::SlipRearMax { .. } | ConstraintKind::SlipRearMin { .. } => {
                let da = self.slip_rear_grad(x);
                let sign =
                    if matches!(spec.kind, ConstraintKind::SlipRearMax { .. }) { -1.0 } else { 1.0 };
                g.states[0] = (t, da * sign);
                g.n_states = 1;
            }
            ConstraintKind::TerminalStop { decel, .. } => {
                let n = xs.len() - 1;
                let xn = &xs[n];
                let mut d = SVector::<f64, 6>::zeros();
                d[0] = -2.0 * decel;
                d[4] = -2.0 * xn[4];
                g.states[0] = (n, d);
                g.n_states = 1;
            }
            ConstraintKind::TorqueRateUp { .. } => {
                g.input = [0.0, -1.0];
                g.has_input = true;
                if t > 0 {
                    g.input_prev = [0.0, 1.0];
                    g.has_input_prev = true;
                }
            }
            ConstraintKind::TorqueRateDown { .. } => {
                g.input = [0.0, 1.0];
                g.has_input = true;
                if t > 0 {
                    g.input_prev = [0.0, -1.0];
                    g.has_input_prev = true;
                }
            }
        }
        g
    }

    fn front_gap_nominal(&self, spec: &ConstraintSpec) -> Option<(f64, f64)> {
        match &spec.kind {
            ConstraintKind::FrontGap { standstill, time_gap, .. } => {
                Some((*standstill, *time_gap))
            }
            _ => None,
        }
    }

    fn v_eff(&self, x: &SVector<f64, 6>) -> f64 {
        x[4].max(0.5)
    }

    fn slip_front(&self, x: &SVector<f64, 6>, us: &[ControlInput], t: usize) -> f64 {
        let u = &us[t.min(us.len() - 1)];
        let z = (x[5] + self.params.lf * x[3]) / self.v_eff(x);
        u.steer - z.atan()
    }

    fn slip_rear(&self, x: &SVector<f64, 6>) -> f64 {
        let z = (x[5] - self.params.lr * x[3]) / self.v_eff(x);
        -z.atan()
    }

    fn slip_front_grad(&self, x: &SVector<f64, 6>) -> (SVector<f64, 6>, f64) {
        let v = self.v_eff(x);
        let z = (x[5] + self.params.lf * x[3]) / v;
        let c = -1.0 / (1.0 + z * z);
        let mut d = SVector::<f64, 6>::zeros();
        d[3] = c * self.params.lf / v;
        d[5] = c / v;
        if x[4] > 0.5 {
            d[4] = c * (-z / v);
        }
        (d, 1.0)
    }

    fn slip_rear_grad(&self, x: &SVector<f64, 6>) -> SVector<f64, 6> {
        let v = self.v_eff(x);
        let z = (x[5] - self.params.lr * x[3]) / v;
        let c = -1.0 / (1.0 + z * z);
        let mut d = SVector::<f64, 6>::zeros();
        d[3] = -c * self.params.lr / v;
        d[5] = c / v;
        if x[4] > 0.5 {
            d[4] = c * (-z / v);
        }
        d
    }

    /// Structural sanity: every constraint references housed symbols.
    pub fn validate_structure(&self) -> Result<(), String> {
        if self.horizon != N_P {
            return Err(format!("horizon {} != {}", self.horizon, N_P));
        }
        if self.lane_plan.len() != self.horizon + 1 || self.e_ref.len() != self.horizon + 1 {
            return Err("lane plan / lateral reference length mismatch".into());
        }
        for c in &self.constraints {
            let obj = match &c.kind {
                ConstraintKind::FrontGap { object, .. } => Some(*object),
                ConstraintKind::KeepAhead { object, .. } => Some(*object),
                _ => None,
            };
            if let Some(o) = obj {
                if o >= self.tracks.len() {
                    return Err(format!("constraint references missing obstacle {o}"));
                }
            }
            if c.step > self.horizon {
                return Err(format!("constraint anchored beyond horizon at {}", c.step));
            }
        }
        if let Some(tr) = self.trailing_object {
            if tr >= self.tracks.len() {
                return Err("trailing object index out of range".into());
            }
        }
        Ok(())
    }

    /// True when the problem contains no traffic/comfort-class constraints.
    pub fn comfort_constraint_count(&self) -> usize {
        self.constraints.iter().filter(|c| c.class == ConstraintClass::Traffic).count()
    }

    pub fn safety_constraint_count(&self) -> usize {
        self.constraints.iter().filter(|c| c.class == ConstraintClass::Safety).count()
    }
}
