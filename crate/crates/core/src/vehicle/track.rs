use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default admissible lateral deviation, m (the largest `d` the library covers).
pub const DEFAULT_D_MAX: f64 = 10.0;
/// Curvature range covered by the library, 1/m.
pub const DEFAULT_KAPPA_LIMIT: f64 = 0.1;

/// Polyline centerline with cumulative arclength. Orientation is the driving direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Track {
    points: Vec<[f64; 2]>,
    /// Arclength at every segment start, plus the total length at the end.
    cum: Vec<f64>,
    closed: bool,
    pub d_max: f64,
    pub kappa_limit: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    pub foot: [f64; 2],
    pub s: f64,
    /// Signed distance, positive to the left of the driving direction.
    pub d: f64,
    pub segment: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackParams {
    pub tangent_angle: f64,
    pub kappa: f64,
}

pub(crate) fn wrap_angle(a: f64) -> f64 {
    let mut w = a.rem_euclid(2.0 * PI);
    if w > PI {
        w -= 2.0 * PI;
    }
    w
}

impl Track {
    pub fn new(points: Vec<[f64; 2]>, closed: bool, d_max: f64) -> Result<Self> {
        let mut points = points;
        if closed && points.len() > 2 && points.first() == points.last() {
            points.pop();
        }
        if points.len() < 2 {
            return Err(Error::Track("centerline needs at least two points".into()));
        }
        if !(d_max > 0.0 && d_max.is_finite()) {
            return Err(Error::Track(format!("d_max must be positive, got {d_max}")));
        }
        if points.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Track("non-finite centerline coordinate".into()));
        }
        let n_seg = if closed { points.len() } else { points.len() - 1 };
        let mut cum = Vec::with_capacity(n_seg + 1);
        cum.push(0.0);
        for i in 0..n_seg {
            let a = points[i];
            let b = points[(i + 1) % points.len()];
            let len = (b[0] - a[0]).hypot(b[1] - a[1]);
            if len == 0.0 {
                return Err(Error::Track(format!("consecutive points {i} and {} coincide", i + 1)));
            }
            cum.push(cum[i] + len);
        }
        Ok(Self { points, cum, closed, d_max, kappa_limit: DEFAULT_KAPPA_LIMIT })
    }

    pub fn points(&self) -> &[[f64; 2]] {
        &self.points
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn length(&self) -> f64 {
        *self.cum.last().unwrap()
    }

    pub fn segment_count(&self) -> usize {
        self.cum.len() - 1
    }

    fn segment(&self, i: usize) -> ([f64; 2], [f64; 2]) {
        (self.points[i], self.points[(i + 1) % self.points.len()])
    }

    fn segment_angle(&self, i: usize) -> f64 {
        let (a, b) = self.segment(i);
        (b[1] - a[1]).atan2(b[0] - a[0])
    }

    fn segment_mid(&self, i: usize) -> f64 {
        0.5 * (self.cum[i] + self.cum[i + 1])
    }

    /// Closest point on the centerline, minimizing over each segment continuously.
    /// Ties go to the smallest arclength.
    pub fn project(&self, p: [f64; 2]) -> Projection {
        let mut best = Projection { foot: self.points[0], s: 0.0, d: f64::INFINITY, segment: 0 };
        let mut best_d2 = f64::INFINITY;
        let mut best_cross = 0.0;
        for i in 0..self.segment_count() {
            let (a, b) = self.segment(i);
            let (ex, ey) = (b[0] - a[0], b[1] - a[1]);
            let (wx, wy) = (p[0] - a[0], p[1] - a[1]);
            let len2 = ex * ex + ey * ey;
            let t = ((wx * ex + wy * ey) / len2).clamp(0.0, 1.0);
            let foot = [a[0] + t * ex, a[1] + t * ey];
            let d2 = (p[0] - foot[0]).powi(2) + (p[1] - foot[1]).powi(2);
            if d2 < best_d2 {
                best_d2 = d2;
                best_cross = ex * wy - ey * wx;
                best = Projection { foot, s: self.cum[i] + t * len2.sqrt(), d: 0.0, segment: i };
            }
        }
        let dist = best_d2.sqrt();
        best.d = if best_cross > 0.0 {
            dist
        } else if best_cross < 0.0 {
            -dist
        } else {
            0.0
        };
        if self.closed && best.s >= self.length() {
            best.s -= self.length();
        }
        best
    }

    fn segment_at(&self, s: f64) -> usize {
        let s = self.normalize_s(s);
        let idx = self.cum.partition_point(|&c| c <= s);
        idx.saturating_sub(1).min(self.segment_count() - 1)
    }

    fn normalize_s(&self, s: f64) -> f64 {
        if self.closed {
            s.rem_euclid(self.length())
        } else {
            s.clamp(0.0, self.length())
        }
    }

    /// Tangent angle of the local segment and curvature from a central
    /// difference of neighbouring segment angles over their midpoint spacing,
    /// clamped to `[-kappa_limit, kappa_limit]`.
    pub fn local_params(&self, s: f64) -> TrackParams {
        let n = self.segment_count();
        let i = self.segment_at(s);
        let tangent_angle = self.segment_angle(i);
        let neighbour = |j: isize| -> Option<(f64, f64)> {
            if self.closed {
                let k = j.rem_euclid(n as isize) as usize;
                let shift = if j < 0 {
                    -self.length()
                } else if j >= n as isize {
                    self.length()
                } else {
                    0.0
                };
                Some((self.segment_angle(k), self.segment_mid(k) + shift))
            } else if (0..n as isize).contains(&j) {
                Some((self.segment_angle(j as usize), self.segment_mid(j as usize)))
            } else {
                None
            }
        };
        let here = Some((tangent_angle, self.segment_mid(i)));
        let (prev, next) = (neighbour(i as isize - 1), neighbour(i as isize + 1));
        let kappa = match (prev.or(here), next.or(here)) {
            (Some((a0, s0)), Some((a1, s1))) if s1 > s0 => wrap_angle(a1 - a0) / (s1 - s0),
            _ => 0.0,
        };
        TrackParams { tangent_angle, kappa: kappa.clamp(-self.kappa_limit, self.kappa_limit) }
    }

    /// Forward arclength from `s_from` to `s_to`, unwrapping across the seam of closed tracks.
    pub fn progress(&self, s_from: f64, s_to: f64) -> f64 {
        let ds = s_to - s_from;
        if self.closed {
            let l = self.length();
            (ds + 0.5 * l).rem_euclid(l) - 0.5 * l
        } else {
            ds
        }
    }

    pub fn straight(length: f64, spacing: f64, d_max: f64) -> Result<Self> {
        let n = (length / spacing).round().max(1.0) as usize;
        let pts = (0..=n).map(|i| [length * i as f64 / n as f64, 0.0]).collect();
        Self::new(pts, false, d_max)
    }

    /// Closed counter-clockwise circle of radius `radius` starting at `(radius, 0)`.
    pub fn circle(radius: f64, segments: usize, d_max: f64) -> Result<Self> {
        let pts = (0..segments)
            .map(|i| {
                let a = 2.0 * PI * i as f64 / segments as f64;
                [radius * a.cos(), radius * a.sin()]
            })
            .collect();
        Self::new(pts, true, d_max)
    }

    /// Chains pieces of `(length, curvature)` starting at the origin heading along +x,
    /// sampled every `spacing` meters.
    pub fn from_pieces(pieces: &[(f64, f64)], spacing: f64, closed: bool, d_max: f64) -> Result<Self> {
        let mut pts = vec![[0.0, 0.0]];
        let (mut x, mut y, mut th) = (0.0f64, 0.0f64, 0.0f64);
        for &(len, kappa) in pieces {
            let n = (len / spacing).ceil().max(1.0) as usize;
            let ds = len / n as f64;
            for _ in 0..n {
                if kappa == 0.0 {
                    x += ds * th.cos();
                    y += ds * th.sin();
                } else {
                    let th1 = th + kappa * ds;
                    x += (th1.sin() - th.sin()) / kappa;
                    y -= (th1.cos() - th.cos()) / kappa;
                    th = th1;
                }
                pts.push([x, y]);
            }
        }
        Self::new(pts, closed, d_max)
    }

    /// Gentle S-shaped course used by the method comparison and examples.
    pub fn synthetic_test() -> Self {
        Self::from_pieces(
            &[(60.0, 0.0), (70.0, 1.0 / 80.0), (40.0, 0.0), (70.0, -1.0 / 60.0), (60.0, 0.0)],
            1.0,
            false,
            DEFAULT_D_MAX,
        )
        .expect("static track definition")
    }

    /// Plant state on the first centerline point, heading along the track.
    pub fn start_state(&self) -> super::VehicleState {
        let [p1, p2] = self.points[0];
        super::VehicleState { p1, p2, theta: self.local_params(0.0).tangent_angle, v_y: 0.0, r: 0.0 }
    }

    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut closed = false;
        let mut d_max = DEFAULT_D_MAX;
        let mut header_seen = false;
        let mut pts = Vec::new();
        for (lineno, raw) in text.split('\n').enumerate() {
            let line = raw.strip_suffix('\r').unwrap_or(raw).trim();
            if line.is_empty() {
                continue;
            }
            if let Some(meta) = line.strip_prefix('#') {
                if let Some((key, value)) = meta.split_once(':') {
                    let value = value.trim();
                    match key.trim() {
                        "closed" => {
                            closed = match value {
                                "true" => true,
                                "false" => false,
                                _ => return Err(Error::Track(format!("line {}: bad closed flag {value:?}", lineno + 1))),
                            }
                        }
                        "d_max" => {
                            d_max = value
                                .parse()
                                .map_err(|_| Error::Track(format!("line {}: bad d_max {value:?}", lineno + 1)))?
                        }
                        _ => {}
                    }
                }
                continue;
            }
            if !header_seen {
                if line.replace(' ', "") != "x,y" {
                    return Err(Error::Track(format!("expected header `x,y`, found {line:?}")));
                }
                header_seen = true;
                continue;
            }
            let (xs, ys) = line
                .split_once(',')
                .ok_or_else(|| Error::Track(format!("line {}: expected two columns", lineno + 1)))?;
            let parse = |v: &str| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Track(format!("line {}: bad number {v:?}", lineno + 1)))
            };
            pts.push([parse(xs)?, parse(ys)?]);
        }
        if !header_seen {
            return Err(Error::Track("missing header `x,y`".into()));
        }
        Self::new(pts, closed, d_max)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse_csv(&std::fs::read_to_string(path)?)
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("# closed: {}\n# d_max: {}\nx,y\n", self.closed, self.d_max);
        for p in &self.points {
            let _ = writeln!(out, "{:?},{:?}", p[0], p[1]);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn projection_on_straight_track() {
        let t = Track::straight(10.0, 1.0, 10.0).unwrap();
        let p = t.project([5.0, 2.0]);
        assert_eq!(p.foot, [5.0, 0.0]);
        assert_eq!(p.d, 2.0);
        assert_eq!(p.s, 5.0);
        assert_eq!(t.project([5.0, -2.0]).d, -2.0);
        let on = t.project([3.25, 0.0]);
        assert_eq!((on.d, on.foot), (0.0, [3.25, 0.0]));
    }

    #[test]
    fn projection_uses_segment_interior() {
        // vertices at 0 and 10 only; the foot must be interior
        let t = Track::new(vec![[0.0, 0.0], [10.0, 0.0]], false, 10.0).unwrap();
        let p = t.project([4.0, 1.0]);
        assert_eq!(p.foot, [4.0, 0.0]);
    }

    #[test]
    fn tie_goes_to_smallest_arclength() {
        // U-turn corridor: the point is equidistant from both legs
        let t = Track::new(vec![[0.0, 1.0], [10.0, 1.0], [10.0, -1.0], [0.0, -1.0]], false, 10.0).unwrap();
        let p = t.project([5.0, 0.0]);
        assert_eq!(p.segment, 0);
        assert!((p.s - 5.0).abs() < 1e-12);
    }

    #[test]
    fn straight_curvature_is_zero() {
        let t = Track::straight(100.0, 1.0, 10.0).unwrap();
        assert_eq!(t.local_params(50.3).kappa, 0.0);
        assert_eq!(t.local_params(0.0).tangent_angle, 0.0);
    }

    #[test]
    fn circle_curvature() {
        let t = Track::circle(100.0, 2000, 10.0).unwrap();
        for s in [0.0, 17.0, 300.0, t.length() - 0.1] {
            let k = t.local_params(s).kappa;
            assert!((k - 0.01).abs() < 0.0005, "kappa {k} at s {s}");
        }
    }

    #[test]
    fn curvature_is_clamped() {
        let t = Track::circle(5.0, 400, 10.0).unwrap();
        assert_eq!(t.local_params(1.0).kappa, 0.1);
        let cw = Track::new(t.points().iter().rev().copied().collect(), true, 10.0).unwrap();
        assert_eq!(cw.local_params(1.0).kappa, -0.1);
    }

    #[test]
    fn closed_track_progress_wraps() {
        let t = Track::circle(10.0, 100, 5.0).unwrap();
        let l = t.length();
        assert!((t.progress(l - 1.0, 0.5) - 1.5).abs() < 1e-12);
        assert!(t.project([10.0, -0.01]).s > l - 0.1);
    }

    #[test]
    fn csv_parsing() {
        let text = "# closed: false\r\n# d_max: 4.5\r\nx,y\r\n0.0,0.0\r\n1.5,0\r\n3e0,0.25\r\n";
        let t = Track::parse_csv(text).unwrap();
        assert_eq!(t.points(), &[[0.0, 0.0], [1.5, 0.0], [3.0, 0.25]]);
        assert_eq!(t.d_max, 4.5);
        assert!(!t.is_closed());
        let round = Track::parse_csv(&t.to_csv()).unwrap();
        assert_eq!(round, t);
        assert!(Track::parse_csv("a,b\n0,0\n1,1\n").is_err());
        assert!(Track::parse_csv("x,y\n0,0\n0,0\n").is_err());
        assert!(Track::parse_csv("x,y\n0,0\n1,1,5\n").is_err());
        assert!(Track::parse_csv("# closed: maybe\nx,y\n0,0\n1,1\n").is_err());
    }

    #[test]
    fn pieces_follow_arcs() {
        let t = Track::from_pieces(&[(10.0, 0.0), (PI * 20.0 / 2.0, 1.0 / 20.0)], 0.5, false, 10.0).unwrap();
        let end = *t.points().last().unwrap();
        assert!((end[0] - 30.0).abs() < 1e-9 && (end[1] - 20.0).abs() < 1e-9, "{end:?}");
        let k = t.local_params(25.0).kappa;
        assert!((k - 0.05).abs() < 0.0025);
    }
}
