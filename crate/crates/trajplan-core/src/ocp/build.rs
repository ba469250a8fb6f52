//! Snapshot-to-problem translation: candidate lane plans, cost wiring,
//! constraint instantiation, mode adjustments and the cut-in relaxation.

use super::problem::{
    CandidateInfo, ConstraintClass, ConstraintKind, ConstraintSpec, InputBounds, ObstacleTrack,
    OcpProblem, RelaxFlags,
};
use super::snapshot::{DrivingMode, PerceptionSnapshot, PredictedObject};
use crate::config::{PlannerConfig, N_P, T_S};
use crate::models::{ControlInput, TireModel, G};
use crate::solver::{ExitClass, OcpSolution};

#[derive(Debug, thiserror::Error)]
pub enum BuildError {
    #[error("snapshot inconsistent with road model: {0}")]
    InvalidSnapshot(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlannerVariant {
    Primary,
    Backup,
}

/// Build-time directives from the planner and the infeasibility analysis.
#[derive(Debug, Clone, Default)]
pub struct BuildOpts {
    /// Input applied over the step preceding the horizon start.
    pub prev_input: Option<ControlInput>,
    /// Pre-emptive Pacejka swap for the primary variant.
    pub tire_swap: bool,
    /// Apply the front-gap relaxation to this object id.
    pub relax_cutin: Option<u32>,
    /// Per-step speed prediction used for speed-limit lookups and tier
    /// selection (defaults to constant current speed).
    pub predicted_speeds: Option<Vec<f64>>,
}

pub struct OcpBuilder<'a> {
    pub cfg: &'a PlannerConfig,
    pub variant: PlannerVariant,
}

/// Convenience entry matching the module contract.
pub fn build_ocp(
    snapshot: &PerceptionSnapshot,
    mode: DrivingMode,
    variant: PlannerVariant,
    cfg: &PlannerConfig,
) -> Result<Vec<OcpProblem>, BuildError> {
    OcpBuilder { cfg, variant }.build(snapshot, mode, &BuildOpts::default())
}

impl<'a> OcpBuilder<'a> {
    pub fn build(
        &self,
        snapshot: &PerceptionSnapshot,
        mode: DrivingMode,
        opts: &BuildOpts,
    ) -> Result<Vec<OcpProblem>, BuildError> {
        snapshot.validate().map_err(BuildError::InvalidSnapshot)?;

        let plans = self.candidate_plans(snapshot, mode);
        let mut problems = Vec::with_capacity(plans.len());
        for plan in plans {
            let mut p = self.instantiate(snapshot, mode, opts, plan)?;
            if let Some(id) = opts.relax_cutin {
                if let Some(idx) = p.tracks.iter().position(|t| t.id == id) {
                    let (relaxed, applied) = relax_front_gap_track(&p, idx, self.cfg);
                    if applied {
                        p = relaxed;
                    }
                }
            }
            p.validate_structure().map_err(BuildError::InvalidSnapshot)?;
            problems.push(p);
        }
        Ok(problems)
    }

    /// Lane plans to evaluate: always keep-lane; plus the commanded change
    /// over a coarse grid of switch steps; plus, for the backup variant,
    /// immediate evasion corridors when the current lane is blocked.
    fn candidate_plans(
        &self,
        snapshot: &PerceptionSnapshot,
        mode: DrivingMode,
    ) -> Vec<CandidateInfo> {
        let ego = &snapshot.ego;
        let lane0 = if mode == DrivingMode::WrongWayDriver { ego.lane.min(1).max(1) } else { ego.lane };
        let mut plans =
            vec![CandidateInfo { lane_from: ego.lane, lane_to: lane0, switch_step: 0 }];

        let lanes_here = snapshot.road.lane_count(ego.s) as i32;
        let change_allowed = !mode.forbids_lane_change()
            && !snapshot.road.in_no_passing_zone(ego.s)
            && self.variant == PlannerVariant::Primary;
        let target = snapshot.tactical.target_lane;
        if change_allowed && target != ego.lane {
            let step = if target > ego.lane { 1 } else { -1 };
            let next = ego.lane + step;
            let exists = next >= 1 && next <= lanes_here
                || (next == 0 && snapshot.road.shoulder.is_some());
            if exists {
                for &sw in &self.cfg.constraints.lane_change_grid {
                    plans.push(CandidateInfo {
                        lane_from: ego.lane,
                        lane_to: next,
                        switch_step: sw,
                    });
                }
            }
        }

        if self.variant == PlannerVariant::Backup && self.current_lane_blocked(snapshot) {
            let mut corridors = Vec::new();
            if ego.lane + 1 <= lanes_here {
                corridors.push(ego.lane + 1);
            }
            if ego.lane - 1 >= 1 {
                corridors.push(ego.lane - 1);
            }
            if snapshot.road.shoulder.is_some() && ego.lane == 1 {
                corridors.push(0);
            }
            for c in corridors {
                plans.push(CandidateInfo { lane_from: ego.lane, lane_to: c, switch_step: 0 });
            }
        }
        plans
    }

    fn current_lane_blocked(&self, snapshot: &PerceptionSnapshot) -> bool {
        let band = snapshot.road.lane_band(snapshot.ego.lane);
        let reach = snapshot.ego.vx * (N_P as f64) * T_S + 20.0;
        snapshot.objects.iter().any(|o| {
            let b = o.box_at(0);
            b.overlaps_band(band.0, band.1)
                && b.s_min > snapshot.ego.s
                && b.s_min - snapshot.ego.s < reach
                && o.speed_range.1 < snapshot.ego.vx * 0.8
        })
    }

    fn instantiate(
        &self,
        snapshot: &PerceptionSnapshot,
        mode: DrivingMode,
        opts: &BuildOpts,
        candidate: CandidateInfo,
    ) -> Result<OcpProblem, BuildError> {
        let cfg = self.cfg;
        let backup = self.variant == PlannerVariant::Backup;
        let params = snapshot.ego_params.clone();
        let road = snapshot.road.clone();
        let env = snapshot.env;
        let ego = snapshot.ego;
        let mu_wc = env.mu_worst();

        let tire = if backup || opts.tire_swap { TireModel::Pacejka } else { TireModel::Linear };
        let mut weights =
            if backup { cfg.backup_weights() } else { cfg.weights.clone() };

        // predicted speed profile for bound lookups
        let speeds: Vec<f64> = match &opts.predicted_speeds {
            Some(v) if v.len() >= N_P + 1 => v.clone(),
            _ => vec![ego.vx; N_P + 1],
        };

        // lateral reference and comfort band per step
        let trans = cfg.constraints.lane_change_steps.max(1);
        let mut lane_plan = Vec::with_capacity(N_P + 1);
        let mut e_ref = Vec::with_capacity(N_P + 1);
        let offset_bias = self.mode_offset(snapshot, mode);
        for t in 0..=N_P {
            let (lane_t, frac) = if candidate.lane_to == candidate.lane_from {
                (candidate.lane_from, 0.0)
            } else if t < candidate.switch_step {
                (candidate.lane_from, 0.0)
            } else {
                let f = ((t - candidate.switch_step) as f64 / trans as f64).min(1.0);
                (if f >= 0.5 { candidate.lane_to } else { candidate.lane_from }, f)
            };
            lane_plan.push(lane_t);
            let c_from = road.lane_center(candidate.lane_from);
            let c_to = road.lane_center(candidate.lane_to);
            // cosine blend between the lane centers
            let blend = 0.5 - 0.5 * (std::f64::consts::PI * frac).cos();
            e_ref.push(c_from + (c_to - c_from) * blend + offset_bias);
        }

        // input bounds: braking is friction-limited, acceleration
        // actuator-limited
        let decel_avail =
            cfg.actuators.decel_max.min(mu_wc * G * cfg.actuators.brake_efficiency);
        let bounds = InputBounds {
            steer_abs: cfg.actuators.steer_max,
            torque_min: -params.mass * decel_avail * params.wheel_radius,
            torque_max: params.mass * cfg.actuators.accel_max * params.wheel_radius,
            steer_step: cfg.actuators.steer_rate_max * T_S,
            torque_step: cfg.actuators.jerk_max * params.mass * params.wheel_radius * T_S,
        };
        weights.braking_threshold_decel = weights.braking_threshold_decel.min(decel_avail);
        let braking_threshold =
            -params.mass * weights.braking_threshold_decel * params.wheel_radius;

        let tracks: Vec<ObstacleTrack> = snapshot
            .objects
            .iter()
            .map(|o| ObstacleTrack {
                id: o.id,
                class: o.class,
                boxes: o.boxes.clone(),
                speed_range: o.speed_range,
            })
            .collect();

        let mut constraints = Vec::new();
        let half_len = params.length / 2.0;
        let half_wid = params.width / 2.0;

        // speed caps: traffic rules, tactical reference, mode caps
        let mode_cap = self.mode_speed_cap(mode);
        let gap_factor = match mode {
            DrivingMode::WrongWayDriver | DrivingMode::DefensiveDriving => {
                cfg.modes.defensive_gap_factor
            }
            DrivingMode::OversizedVehicle => 1.25,
            _ => 1.0,
        };

        // per-step state constraints (Eq. 2f range: interior steps), terminal
        // handled separately
        let mut s_pred = ego.s;
        for t in 1..N_P {
            s_pred += speeds[t] * T_S;
            let lane_t = lane_plan[t];

            // safety: stay on the paved surface with tracking-tier margin
            let tier = lateral_tier(speeds[t]);
            let (rlo, rhi) = road.road_band(s_pred, road.shoulder.is_some());
            constraints.push(ConstraintSpec {
                kind: ConstraintKind::LateralMax {
                    bound: rhi - half_wid - tier - cfg.constraints.lateral_margin,
                },
                class: ConstraintClass::Safety,
                step: t,
            });
            constraints.push(ConstraintSpec {
                kind: ConstraintKind::LateralMin {
                    bound: rlo + half_wid + tier + cfg.constraints.lateral_margin,
                },
                class: ConstraintClass::Safety,
                step: t,
            });

            // traffic: lane band (hull of both lanes during the transition)
            if !backup && mode != DrivingMode::ObstacleAvoidance {
                let (mut blo, mut bhi) = road.lane_band(lane_t);
                if candidate.lane_to != candidate.lane_from && t >= candidate.switch_step {
                    let (alo, ahi) = road.lane_band(candidate.lane_from);
                    let (tlo, thi) = road.lane_band(candidate.lane_to);
                    if t <= candidate.switch_step + trans {
                        blo = alo.min(tlo);
                        bhi = ahi.max(thi);
                    } else {
                        blo = tlo;
                        bhi = thi;
                    }
                }
                constraints.push(ConstraintSpec {
                    kind: ConstraintKind::LateralMax { bound: bhi - half_wid },
                    class: ConstraintClass::Traffic,
                    step: t,
                });
                constraints.push(ConstraintSpec {
                    kind: ConstraintKind::LateralMin { bound: blo + half_wid },
                    class: ConstraintClass::Traffic,
                    step: t,
                });
            }

            // safety speed window (SR3b)
            constraints.push(ConstraintSpec {
                kind: ConstraintKind::SpeedMax { bound: cfg.contract.v_max },
                class: ConstraintClass::Safety,
                step: t,
            });
            constraints.push(ConstraintSpec {
                kind: ConstraintKind::SpeedMin,
                class: ConstraintClass::Safety,
                step: t,
            });
            // traffic speed: posted limit, tactical reference, mode cap
            if !backup {
                let mut cap = road
                    .speed_limit(s_pred)
                    .min(snapshot.tactical.reference_speed)
                    .min(mode_cap);
                cap = cap.min(cfg.contract.v_max);
                if cap.is_finite() {
                    constraints.push(ConstraintSpec {
                        kind: ConstraintKind::SpeedMax { bound: cap },
                        class: ConstraintClass::Traffic,
                        step: t,
                    });
                }
            }

            // safety: SR3a acceleration window with checker headroom
            constraints.push(ConstraintSpec {
                kind: ConstraintKind::AccelMax { bound: cfg.actuators.accel_max * 0.985 },
                class: ConstraintClass::Safety,
                step: t,
            });
            constraints.push(ConstraintSpec {
                kind: ConstraintKind::AccelMin { bound: -decel_avail * 0.985 },
                class: ConstraintClass::Safety,
                step: t,
            });

            // safety: SR3e lateral acceleration
            let lat_bound = cfg.constraints.lat_accel_max * 0.98;
            constraints.push(ConstraintSpec {
                kind: ConstraintKind::LatAccelMax { bound: lat_bound },
                class: ConstraintClass::Safety,
                step: t,
            });
            constraints.push(ConstraintSpec {
                kind: ConstraintKind::LatAccelMin { bound: lat_bound },
                class: ConstraintClass::Safety,
                step: t,
            });

            // safety: tire-model validity
            let (alpha_f, alpha_r) = self.slip_bounds(&params, mu_wc, tire);
            for (kind, class) in [
                (ConstraintKind::SlipFrontMax { bound: alpha_f }, ConstraintClass::Safety),
                (ConstraintKind::SlipFrontMin { bound: alpha_f }, ConstraintClass::Safety),
                (ConstraintKind::SlipRearMax { bound: alpha_r }, ConstraintClass::Safety),
                (ConstraintKind::SlipRearMin { bound: alpha_r }, ConstraintClass::Safety),
            ] {
                constraints.push(ConstraintSpec { kind, class, step: t });
            }

            // comfort jerk (torque slew tighter than the actuator limit)
            if !backup {
                let jerk = match mode {
                    DrivingMode::DefensiveDriving => cfg.constraints.comfort_jerk * 0.6,
                    _ => cfg.constraints.comfort_jerk,
                };
                let bound = jerk * params.mass * params.wheel_radius * T_S;
                constraints.push(ConstraintSpec {
                    kind: ConstraintKind::TorqueRateUp { bound },
                    class: ConstraintClass::Traffic,
                    step: t - 1,
                });
                constraints.push(ConstraintSpec {
                    kind: ConstraintKind::TorqueRateDown { bound },
                    class: ConstraintClass::Traffic,
                    step: t - 1,
                });
            }
        }

        // obstacle separation rows
        let mut trailing_object = None;
        let mut trailing_gap = f64::INFINITY;
        for (oi, obj) in snapshot.objects.iter().enumerate() {
            let b0 = obj.box_at(0);
            let behind_now = b0.s_max < ego.s;
            let ego_band_now = road.lane_band(ego.lane);
            let in_ego_lane_now = b0.overlaps_band(ego_band_now.0, ego_band_now.1);

            // trailing same-lane vehicles are exempt from separation
            // constraints but feed the trailing-gap cost term (10b*)
            if behind_now && in_ego_lane_now {
                let gap = ego.s - half_len - b0.s_max;
                if gap < trailing_gap {
                    trailing_gap = gap;
                    trailing_object = Some(oi);
                }
                continue;
            }

            let mut s_pred_t = ego.s;
            for t in 1..N_P {
                s_pred_t += speeds[t] * T_S;
                let lane_t = lane_plan[t];
                let (mut blo, mut bhi) = road.lane_band(lane_t);
                // during a transition the occupied corridor spans both lanes
                if candidate.lane_to != candidate.lane_from
                    && t >= candidate.switch_step
                    && t <= candidate.switch_step + trans
                {
                    let (alo, ahi) = road.lane_band(candidate.lane_from);
                    blo = blo.min(alo);
                    bhi = bhi.max(ahi);
                }
                let bx = obj.box_at(t);
                // corridor shrunk slightly so barely-touching boxes in the
                // neighbor lane do not generate gap rows
                let occupies = bx.overlaps_band(blo + 0.15, bhi - 0.15);
                if !occupies {
                    continue;
                }
                if bx.s_min >= s_pred_t - half_len {
                    // leading object in the corridor
                    constraints.push(ConstraintSpec {
                        kind: ConstraintKind::FrontGap {
                            object: oi,
                            standstill: cfg.constraints.standstill_gap * gap_factor,
                            time_gap: cfg.constraints.time_gap * gap_factor,
                            envelope: None,
                        },
                        class: ConstraintClass::Safety,
                        step: t,
                    });
                } else if bx.s_max <= s_pred_t + half_len
                    && candidate.lane_to != candidate.lane_from
                    && obj.lanes[t.min(obj.lanes.len() - 1)] == candidate.lane_to
                    && t >= candidate.switch_step
                {
                    // target-lane trailing object: do not cut in front of it
                    constraints.push(ConstraintSpec {
                        kind: ConstraintKind::KeepAhead {
                            object: oi,
                            bound: bx.s_max
                                + cfg.constraints.longitudinal_margin
                                + lateral_tier(speeds[t]),
                        },
                        class: ConstraintClass::Safety,
                        step: t,
                    });
                }
            }
        }

        // terminal exit strategy against the nearest leading corridor object
        let lane_n = lane_plan[N_P];
        let band_n = road.lane_band(lane_n);
        let s_end = ego.s + speeds.iter().skip(1).map(|v| v * T_S).sum::<f64>();
        let mut free = f64::INFINITY;
        for obj in &snapshot.objects {
            let bx = obj.box_at(N_P);
            if bx.overlaps_band(band_n.0 + 0.15, band_n.1 - 0.15)
                && bx.s_max > ego.s
                && bx.s_min - half_len < free
                && bx.s_min > ego.s - half_len
            {
                free = bx.s_min - half_len - cfg.constraints.standstill_gap;
            }
        }
        let _ = s_end;
        if free.is_finite() {
            constraints.push(ConstraintSpec {
                kind: ConstraintKind::TerminalStop { decel: decel_avail, free_s: free },
                class: ConstraintClass::Safety,
                step: N_P,
            });
        }

        let relax = RelaxFlags {
            comfort_removed: backup || mode == DrivingMode::ObstacleAvoidance,
            front_gap_relaxed: false,
            tire_swapped: opts.tire_swap,
        };

        Ok(OcpProblem {
            horizon: N_P,
            t_s: T_S,
            initial_state: ego,
            prev_input: opts.prev_input.unwrap_or_else(|| snapshot.actuators.applied_input()),
            params,
            road,
            env,
            tire,
            weights,
            lane_plan,
            e_ref,
            bounds,
            constraints,
            tracks,
            trailing_object,
            braking_threshold,
            relax,
            candidate,
            backup_variant: backup,
        })
    }

    fn slip_bounds(&self, params: &crate::models::VehicleParams, mu_wc: f64, tire: TireModel) -> (f64, f64) {
        let cfg = &self.cfg.constraints;
        match tire {
            TireModel::Linear => {
                let b = (cfg.alpha_lin * mu_wc).max(cfg.alpha_lin_min);
                (b, b)
            }
            TireModel::Pacejka => {
                let peak_f = crate::models::pacejka_peak_slip_front(params, mu_wc);
                let peak_r = crate::models::pacejka_peak_slip_rear(params, mu_wc);
                ((0.9 * peak_f).min(cfg.alpha_peak), (0.9 * peak_r).min(cfg.alpha_peak))
            }
        }
    }

    fn mode_speed_cap(&self, mode: DrivingMode) -> f64 {
        let m = &self.cfg.modes;
        match mode {
            DrivingMode::WrongWayDriver => m.wrong_way_speed,
            DrivingMode::DefensiveDriving => m.defensive_speed,
            DrivingMode::RescueAlley => m.rescue_speed,
            DrivingMode::OversizedVehicle => m.oversized_speed,
            DrivingMode::ObstacleOnHardShoulder => m.shoulder_obstacle_speed,
            _ => f64::INFINITY,
        }
    }

    fn mode_offset(&self, snapshot: &PerceptionSnapshot, mode: DrivingMode) -> f64 {
        let m = &self.cfg.modes;
        let tactical = snapshot.tactical.lateral_offset.unwrap_or(0.0);
        match mode {
            DrivingMode::RescueAlley => {
                // leftmost lane clears to the left, all others to the right
                let lanes = snapshot.road.lane_count(snapshot.ego.s) as i32;
                if snapshot.ego.lane >= lanes {
                    tactical + m.rescue_offset
                } else {
                    tactical - m.rescue_offset
                }
            }
            DrivingMode::ObstacleOnHardShoulder => tactical + m.shoulder_obstacle_offset,
            DrivingMode::OversizedVehicle => tactical - 0.3,
            _ => tactical,
        }
    }
}

/// Applies the shrinking-recovery front-gap relaxation to one object.
/// No-op (with `applied = false`) when the object is not strictly faster
/// than the ego vehicle.
pub fn relax_front_gap(
    problem: &OcpProblem,
    cutin: &PredictedObject,
    cfg: &PlannerConfig,
) -> (OcpProblem, bool) {
    match problem.tracks.iter().position(|t| t.id == cutin.id) {
        Some(idx) => relax_front_gap_track(problem, idx, cfg),
        None => (problem.clone(), false),
    }
}

fn relax_front_gap_track(
    problem: &OcpProblem,
    track_idx: usize,
    cfg: &PlannerConfig,
) -> (OcpProblem, bool) {
    let track = &problem.tracks[track_idx];
    let ego = &problem.initial_state;
    if track.speed_range.0 <= ego.vx {
        // guard clause: only a strictly faster leading object qualifies
        return (problem.clone(), false);
    }
    let gap0 = track.box_at(0).s_min - (ego.s + problem.params.length / 2.0);
    let floor0 = (gap0 * cfg.constraints.relax_keep_fraction).max(0.5);
    let recovery = cfg.constraints.relax_recovery_steps;

    let mut out = problem.clone();
    let mut touched = false;
    for spec in &mut out.constraints {
        if let ConstraintKind::FrontGap { object, envelope, .. } = &mut spec.kind {
            if *object == track_idx {
                *envelope = Some((floor0, recovery));
                touched = true;
            }
        }
    }
    out.relax.front_gap_relaxed = touched;
    (out, touched)
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SelectError {
    #[error("no candidate produced a feasible solution")]
    AllInfeasible,
}

/// Picks the solution to execute among solved lane candidates: the lowest
/// cost among feasible ones, falling back to keep-lane when the commanded
/// change is infeasible. Returns the index into `solved`.
pub fn select_lane_solution(solved: &[(OcpProblem, OcpSolution)]) -> Result<usize, SelectError> {
    let feasible =
        |s: &OcpSolution| matches!(s.exit.class, ExitClass::Optimal | ExitClass::Feasible);
    let mut best: Option<usize> = None;
    for (i, (_, sol)) in solved.iter().enumerate() {
        if !feasible(sol) {
            continue;
        }
        match best {
            None => best = Some(i),
            Some(b) => {
                if sol.cost < solved[b].1.cost {
                    best = Some(i);
                }
            }
        }
    }
    best.ok_or(SelectError::AllInfeasible)
}

/// SR5a lateral tier produced by the tracking controller, closed on the
/// left: 10 cm up to 30 km/h, 15 cm up to 80 km/h, 20 cm up to 130 km/h.
pub fn lateral_tier(v: f64) -> f64 {
    let kmh = v * 3.6;
    if kmh <= 30.0 {
        0.10
    } else if kmh <= 80.0 {
        0.15
    } else {
        0.20
    }
}
