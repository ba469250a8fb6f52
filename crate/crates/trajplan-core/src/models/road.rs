//! Road model and Frenet/Cartesian conversions.
//!
//! The centerline is a piecewise-constant curvature profile (straights and
//! circular arcs), which keeps both directions of the mapping closed-form.
//! The reference line (`e = 0`) runs along the center of lane 1, the
//! rightmost lane; lanes are numbered from right to left.

use serde::{Deserialize, Serialize};

/// Maximum bank angle of the operational domain [rad] (8°).
pub const BANK_MAX: f64 = 8.0 * std::f64::consts::PI / 180.0;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RoadSegment {
    /// Segment length along the reference line [m].
    pub length: f64,
    /// Signed curvature [1/m], positive curving left.
    pub curvature: f64,
    /// Number of regular lanes available on this segment.
    pub lane_count: u32,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Shoulder {
    pub width: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RoadModel {
    pub segments: Vec<RoadSegment>,
    pub lane_width: f64,
    /// Posted speed limit profile: (from_s, limit m/s), sorted by s.
    /// `f64::INFINITY` marks an unposted (unlimited) section.
    pub speed_limits: Vec<(f64, f64)>,
    /// No-passing zones as (from_s, to_s) intervals.
    pub no_passing: Vec<(f64, f64)>,
    /// Bank angle [rad], constant over the modeled section.
    pub bank: f64,
    /// Maximum bank estimation error [rad].
    pub bank_tol: f64,
    pub shoulder: Option<Shoulder>,
    /// Cached segment start poses (s, x, y, heading).
    #[serde(skip)]
    starts: Vec<(f64, f64, f64, f64)>,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum GeometryError {
    #[error("lateral offset {e} reaches the curvature center (1/kappa = {radius})")]
    Degenerate { e: f64, radius: f64 },
    #[error("station {0} outside the road domain [0, {1}]")]
    OutOfDomain(f64, f64),
}

impl RoadModel {
    pub fn new(segments: Vec<RoadSegment>, lane_width: f64) -> Self {
        let mut road = Self {
            segments,
            lane_width,
            speed_limits: vec![(0.0, 130.0 / 3.6)],
            no_passing: Vec::new(),
            bank: 0.0,
            bank_tol: 0.2_f64.to_radians(),
            shoulder: None,
            starts: Vec::new(),
        };
        road.rebuild_cache();
        road
    }

    /// Straight road helper used widely in tests and scenarios.
    pub fn straight(length: f64, lane_count: u32, lane_width: f64) -> Self {
        Self::new(vec![RoadSegment { length, curvature: 0.0, lane_count }], lane_width)
    }

    /// Recomputes the cached segment start poses. Must be called after
    /// deserialization or direct mutation of `segments`.
    pub fn rebuild_cache(&mut self) {
        self.starts.clear();
        let (mut s, mut x, mut y, mut th) = (0.0, 0.0, 0.0, 0.0_f64);
        for seg in &self.segments {
            self.starts.push((s, x, y, th));
            let k = seg.curvature;
            if k.abs() < 1e-12 {
                x += seg.length * th.cos();
                y += seg.length * th.sin();
            } else {
                let th1 = th + k * seg.length;
                x += (th1.sin() - th.sin()) / k;
                y -= (th1.cos() - th.cos()) / k;
                th = th1;
            }
            s += seg.length;
        }
    }

    pub fn total_length(&self) -> f64 {
        self.segments.iter().map(|s| s.length).sum()
    }

    fn segment_index(&self, s: f64) -> usize {
        // clamp to the domain; callers validate the range where it matters
        let mut idx = 0;
        for (i, (s0, ..)) in self.starts.iter().enumerate() {
            if s >= *s0 {
                idx = i;
            } else {
                break;
            }
        }
        idx
    }

    pub fn curvature(&self, s: f64) -> f64 {
        self.segments[self.segment_index(s)].curvature
    }

    pub fn lane_count(&self, s: f64) -> u32 {
        self.segments[self.segment_index(s)].lane_count
    }

    /// Posted speed limit at station `s` [m/s].
    pub fn speed_limit(&self, s: f64) -> f64 {
        let mut v = f64::INFINITY;
        for (from, limit) in &self.speed_limits {
            if s >= *from {
                v = *limit;
            }
        }
        v
    }

    pub fn in_no_passing_zone(&self, s: f64) -> bool {
        self.no_passing.iter().any(|(a, b)| s >= *a && s <= *b)
    }

    /// Center offset of lane `n` (lane 0 addresses the hard shoulder).
    pub fn lane_center(&self, lane: i32) -> f64 {
        if lane == 0 {
            let sw = self.shoulder.map(|sh| sh.width).unwrap_or(self.lane_width);
            return -self.lane_width / 2.0 - sw / 2.0;
        }
        (lane - 1) as f64 * self.lane_width
    }

    /// Lateral band `[lo, hi]` of lane `n`.
    pub fn lane_band(&self, lane: i32) -> (f64, f64) {
        let c = self.lane_center(lane);
        if lane == 0 {
            let sw = self.shoulder.map(|sh| sh.width).unwrap_or(self.lane_width);
            return (c - sw / 2.0, c + sw / 2.0);
        }
        (c - self.lane_width / 2.0, c + self.lane_width / 2.0)
    }

    /// Drivable band of the whole carriageway at `s`, optionally including
    /// the hard shoulder.
    pub fn road_band(&self, s: f64, include_shoulder: bool) -> (f64, f64) {
        let lanes = self.lane_count(s) as f64;
        let hi = (lanes - 1.0) * self.lane_width + self.lane_width / 2.0;
        let mut lo = -self.lane_width / 2.0;
        if include_shoulder {
            if let Some(sh) = self.shoulder {
                lo -= sh.width;
            }
        }
        (lo, hi)
    }

    /// Lane index whose band contains `e` (closest center on ties/outside).
    pub fn lane_at(&self, s: f64, e: f64) -> i32 {
        let n = self.lane_count(s) as i32;
        let mut best = 1;
        let mut dist = f64::INFINITY;
        let lanes: Vec<i32> =
            if self.shoulder.is_some() { (0..=n).collect() } else { (1..=n).collect() };
        for lane in lanes {
            let d = (e - self.lane_center(lane)).abs();
            if d < dist {
                dist = d;
                best = lane;
            }
        }
        best
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.segments.is_empty() {
            return Err("road must have at least one segment".into());
        }
        if self.bank.abs() > BANK_MAX {
            return Err(format!("bank angle {} rad beyond the 8 deg bound", self.bank));
        }
        for seg in &self.segments {
            if seg.lane_count < 1 {
                return Err("lane count must be at least 1 everywhere".into());
            }
            if !(seg.length > 0.0) {
                return Err("segment lengths must be positive".into());
            }
        }
        Ok(())
    }

    /// Pose of the reference line at station `s`: (x, y, heading).
    pub fn centerline_pose(&self, s: f64) -> (f64, f64, f64) {
        let idx = self.segment_index(s);
        let (s0, x0, y0, th0) = self.starts[idx];
        let k = self.segments[idx].curvature;
        let ds = s - s0;
        if k.abs() < 1e-12 {
            (x0 + ds * th0.cos(), y0 + ds * th0.sin(), th0)
        } else {
            let th = th0 + k * ds;
            (x0 + (th.sin() - th0.sin()) / k, y0 - (th.cos() - th0.cos()) / k, th)
        }
    }

    /// Curvilinear to planar mapping.
    pub fn frenet_to_cartesian(
        &self,
        s: f64,
        e: f64,
        yaw_frenet: f64,
    ) -> Result<(f64, f64, f64), GeometryError> {
        let total = self.total_length();
        if s < -1e-9 || s > total + 1e-9 {
            return Err(GeometryError::OutOfDomain(s, total));
        }
        let k = self.curvature(s);
        if k.abs() > 1e-12 && e.abs() * k.abs() >= 1.0 {
            return Err(GeometryError::Degenerate { e, radius: 1.0 / k });
        }
        let (x, y, th) = self.centerline_pose(s.clamp(0.0, total));
        Ok((x - e * th.sin(), y + e * th.cos(), wrap_angle(yaw_frenet + th)))
    }

    /// Planar to curvilinear mapping (inverse of [`Self::frenet_to_cartesian`]).
    pub fn cartesian_to_frenet(
        &self,
        x: f64,
        y: f64,
        yaw_global: f64,
    ) -> Result<(f64, f64, f64), GeometryError> {
        let mut best: Option<(f64, f64)> = None; // (s, e)
        for (idx, seg) in self.segments.iter().enumerate() {
            let (s0, x0, y0, th0) = self.starts[idx];
            let k = seg.curvature;
            let cand = if k.abs() < 1e-12 {
                let dx = x - x0;
                let dy = y - y0;
                let sl = dx * th0.cos() + dy * th0.sin();
                let e = -dx * th0.sin() + dy * th0.cos();
                (sl, e)
            } else {
                // circle center sits at distance 1/k along the left normal
                let cx = x0 - th0.sin() / k;
                let cy = y0 + th0.cos() / k;
                let (dx, dy) = (x - cx, y - cy);
                let r = (dx * dx + dy * dy).sqrt();
                if r < 1e-9 {
                    return Err(GeometryError::Degenerate { e: r, radius: 1.0 / k });
                }
                // angle from the segment start, unwrapped into the arc range
                let a0 = (y0 - cy).atan2(x0 - cx);
                let a = dy.atan2(dx);
                let mut dphi = wrap_angle(a - a0);
                if k < 0.0 && dphi > 0.0 {
                    dphi -= 2.0 * std::f64::consts::PI;
                }
                if k > 0.0 && dphi < 0.0 {
                    dphi += 2.0 * std::f64::consts::PI;
                }
                let sl = dphi / k;
                let e = if k > 0.0 { 1.0 / k - r } else { r + 1.0 / k };
                (sl, e)
            };
            let (sl, e) = cand;
            if sl >= -1e-6 && sl <= seg.length + 1e-6 {
                let s = (s0 + sl).clamp(0.0, self.total_length());
                if best.map_or(true, |(_, be)| e.abs() < be.abs()) {
                    best = Some((s, e));
                }
            }
        }
        let (s, e) = best.ok_or(GeometryError::OutOfDomain(0.0, self.total_length()))?;
        let k = self.curvature(s);
        if k.abs() > 1e-12 && e.abs() * k.abs() >= 1.0 {
            return Err(GeometryError::Degenerate { e, radius: 1.0 / k });
        }
        let (_, _, th) = self.centerline_pose(s);
        Ok((s, e, wrap_angle(yaw_global - th)))
    }
}

/// Wraps an angle into (-pi, pi].
pub fn wrap_angle(a: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut r = a % two_pi;
    if r > std::f64::consts::PI {
        r -= two_pi;
    } else if r <= -std::f64::consts::PI {
        r += two_pi;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curved_road() -> RoadModel {
        RoadModel::new(
            vec![
                RoadSegment { length: 200.0, curvature: 0.0, lane_count: 2 },
                RoadSegment { length: 400.0, curvature: 8e-3, lane_count: 2 },
                RoadSegment { length: 300.0, curvature: -4e-3, lane_count: 2 },
                RoadSegment { length: 200.0, curvature: 0.0, lane_count: 2 },
            ],
            3.5,
        )
    }

    #[test]
    fn straight_road_is_identity() {
        let road = RoadModel::straight(1000.0, 2, 3.5);
        let (x, y, psi) = road.frenet_to_cartesian(123.0, -1.25, 0.1).unwrap();
        assert_eq!(x, 123.0);
        assert_eq!(y, -1.25);
        assert_eq!(psi, 0.1);
    }

    #[test]
    fn circle_geometry_matches_parametrization() {
        // constant curvature: s along the arc must land on the circle of
        // radius R = 1/kappa centered at (0, R)
        let k = 0.01;
        let road = RoadModel::new(
            vec![RoadSegment { length: 700.0, curvature: k, lane_count: 1 }],
            3.5,
        );
        let r = 1.0 / k;
        for s in [std::f64::consts::PI / 0.02, std::f64::consts::PI / k * 0.999] {
            let (x, y, _) = road.frenet_to_cartesian(s.min(700.0), 0.0, 0.0).unwrap();
            let phi = s.min(700.0) * k;
            assert!((x - r * phi.sin()).abs() < 1e-9);
            assert!((y - r * (1.0 - phi.cos())).abs() < 1e-9);
        }
        // quarter-arc station from the circle parametrization
        let s = std::f64::consts::PI / 0.02;
        let (x, y, _) = road.frenet_to_cartesian(s, 0.0, 0.0).unwrap();
        assert!((x - 100.0).abs() < 1e-9 && (y - 100.0).abs() < 1e-9);
    }

    #[test]
    fn round_trip_on_curved_road() {
        let road = curved_road();
        for i in 0..200 {
            let s = 5.0 + (i as f64) * 5.4;
            let e = -5.0 + (i as f64 % 11.0);
            let yaw = -0.3 + (i as f64) * 0.003;
            if e.abs() * road.curvature(s).abs() >= 0.9 {
                continue;
            }
            let (x, y, psi_g) = road.frenet_to_cartesian(s, e, yaw).unwrap();
            let (s2, e2, yaw2) = road.cartesian_to_frenet(x, y, psi_g).unwrap();
            assert!((s - s2).abs() < 1e-9, "s roundtrip {s} -> {s2}");
            assert!((e - e2).abs() < 1e-9, "e roundtrip {e} -> {e2}");
            assert!(wrap_angle(yaw - yaw2).abs() < 1e-9);
        }
    }

    #[test]
    fn degenerate_offset_rejected() {
        let road = RoadModel::new(
            vec![RoadSegment { length: 500.0, curvature: 0.02, lane_count: 1 }],
            3.5,
        );
        let err = road.frenet_to_cartesian(100.0, 51.0, 0.0).unwrap_err();
        assert!(matches!(err, GeometryError::Degenerate { .. }));
    }

    #[test]
    fn lane_layout() {
        let mut road = RoadModel::straight(100.0, 3, 3.5);
        road.shoulder = Some(Shoulder { width: 3.0 });
        assert_eq!(road.lane_center(1), 0.0);
        assert_eq!(road.lane_center(2), 3.5);
        assert_eq!(road.lane_center(0), -1.75 - 1.5);
        assert_eq!(road.lane_at(0.0, 3.4), 2);
        assert_eq!(road.lane_at(0.0, -3.0), 0);
        let (lo, hi) = road.road_band(0.0, true);
        assert!((lo - (-4.75)).abs() < 1e-12);
        assert!((hi - 8.75).abs() < 1e-12);
    }

    #[test]
    fn speed_limit_profile() {
        let mut road = RoadModel::straight(2000.0, 2, 3.5);
        road.speed_limits = vec![(0.0, f64::INFINITY), (800.0, 80.0 / 3.6)];
        assert!(road.speed_limit(100.0).is_infinite());
        assert!((road.speed_limit(900.0) - 80.0 / 3.6).abs() < 1e-12);
    }
}
