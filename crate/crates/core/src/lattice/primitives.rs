use serde::{Deserialize, Serialize};

use super::Pose;
use crate::error::{Error, Result};
use crate::geometry::Vec2;

/// Lattice directions for 16 headings, counter-clockwise from +x. Every
/// entry is a short integer vector so straight motion stays on the lattice.
const DIRS_16: [(i32, i32); 16] = [
    (1, 0),
    (2, 1),
    (1, 1),
    (1, 2),
    (0, 1),
    (-1, 2),
    (-1, 1),
    (-2, 1),
    (-1, 0),
    (-2, -1),
    (-1, -1),
    (-1, -2),
    (0, -1),
    (1, -2),
    (1, -1),
    (2, -1),
];

const DIRS_8: [(i32, i32); 8] = [(1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1)];

fn heading_dirs(n: usize) -> Option<&'static [(i32, i32)]> {
    match n {
        8 => Some(&DIRS_8),
        16 => Some(&DIRS_16),
        _ => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrimitiveKind {
    Straight,
    Left,
    Right,
}

/// A ship pose along a primitive, relative to the primitive's start position.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplePose {
    pub x: f64,
    pub y: f64,
    /// Direction of travel, radians from +x.
    pub yaw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotionPrimitive {
    pub id: usize,
    pub kind: PrimitiveKind,
    pub start_heading: u16,
    pub end_heading: u16,
    /// Displacement in lattice cells.
    pub dix: i32,
    pub diy: i32,
    /// Path length in metres.
    pub arc_length: f64,
    /// Evenly spaced along the path, first at the origin, last exactly on the
    /// end lattice state.
    pub samples: Vec<SamplePose>,
}

impl MotionPrimitive {
    pub fn sub_step_length(&self) -> f64 {
        if self.samples.len() < 2 {
            0.0
        } else {
            self.arc_length / (self.samples.len() - 1) as f64
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlSetParams {
    /// Lattice spacing in metres.
    pub spacing: f64,
    pub headings: usize,
    /// Minimum turning radius in metres.
    pub turn_radius: f64,
    /// Maximum distance between consecutive sampled poses.
    pub sample_step: f64,
}

impl ControlSetParams {
    pub fn new(spacing: f64, headings: usize, turn_radius: f64) -> Self {
        Self { spacing, headings, turn_radius, sample_step: spacing / 8.0 }
    }
}

impl Default for ControlSetParams {
    fn default() -> Self {
        Self::new(0.5, 16, 2.0)
    }
}

/// Forward-moving primitives grouped by start heading.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlSet {
    params: ControlSetParams,
    primitives: Vec<MotionPrimitive>,
    by_heading: Vec<Vec<usize>>,
    l_min: f64,
}

/// Builds the default control set: per usable heading a straight primitive
/// and left/right constant-curvature turns onto the neighbouring headings.
pub fn generate_control_set(spacing: f64, headings: usize, turn_radius: f64) -> Result<ControlSet> {
    ControlSet::generate(ControlSetParams::new(spacing, headings, turn_radius))
}

impl ControlSet {
    pub fn generate(params: ControlSetParams) -> Result<Self> {
        let fail = |detail: String| Error::ControlSetInfeasible {
            spacing: params.spacing,
            headings: params.headings,
            turn_radius: params.turn_radius,
            detail,
        };
        let ControlSetParams { spacing, headings, turn_radius, sample_step } = params;
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(fail("spacing must be positive".into()));
        }
        if !(turn_radius >= spacing) {
            return Err(fail("turn radius must be at least the lattice spacing".into()));
        }
        if !(sample_step > 0.0) {
            return Err(fail("sample step must be positive".into()));
        }
        let dirs = heading_dirs(headings).ok_or_else(|| fail("supported heading counts are 8 and 16".into()))?;

        let mut primitives = Vec::new();
        let mut by_heading = vec![Vec::new(); headings];
        for (k, &(dx, dy)) in dirs.iter().enumerate() {
            if dy <= 0 {
                continue;
            }
            let mut push = |mut p: MotionPrimitive| {
                p.id = primitives.len();
                by_heading[k].push(p.id);
                primitives.push(p);
            };
            push(straight(k as u16, dx, dy, spacing, sample_step));
            for (kind, target) in [(PrimitiveKind::Left, (k + 1) % headings), (PrimitiveKind::Right, (k + headings - 1) % headings)] {
                if dirs[target].1 <= 0 {
                    continue;
                }
                let p = turn(k as u16, target as u16, dirs[k], dirs[target], kind, spacing, turn_radius, sample_step)
                    .ok_or_else(|| fail(format!("no lattice endpoint for turn from heading {k} to {target}")))?;
                push(p);
            }
        }
        if primitives.is_empty() {
            return Err(fail("no forward headings".into()));
        }
        let l_min = primitives.iter().map(|p| p.arc_length).fold(f64::INFINITY, f64::min);
        Ok(Self { params, primitives, by_heading, l_min })
    }

    pub fn params(&self) -> &ControlSetParams {
        &self.params
    }

    pub fn spacing(&self) -> f64 {
        self.params.spacing
    }

    pub fn headings(&self) -> usize {
        self.params.headings
    }

    pub fn primitives(&self) -> &[MotionPrimitive] {
        &self.primitives
    }

    pub fn primitive(&self, id: usize) -> &MotionPrimitive {
        &self.primitives[id]
    }

    /// Primitives starting at `heading`; empty for headings without forward motion.
    pub fn from_heading(&self, heading: u16) -> impl Iterator<Item = &MotionPrimitive> {
        self.by_heading.get(heading as usize).into_iter().flatten().map(|&i| &self.primitives[i])
    }

    /// Headings that have at least one primitive.
    pub fn usable_headings(&self) -> Vec<u16> {
        (0..self.params.headings as u16).filter(|&h| !self.by_heading[h as usize].is_empty()).collect()
    }

    /// Length of the shortest primitive.
    pub fn l_min(&self) -> f64 {
        self.l_min
    }

    pub fn max_length(&self) -> f64 {
        self.primitives.iter().map(|p| p.arc_length).fold(0.0, f64::max)
    }

    /// Heading index pointing along +y.
    pub fn forward_heading(&self) -> u16 {
        (self.params.headings / 4) as u16
    }

    pub fn straight_from(&self, heading: u16) -> Option<&MotionPrimitive> {
        self.from_heading(heading).find(|p| p.kind == PrimitiveKind::Straight)
    }

    pub fn yaw(&self, heading: u16) -> f64 {
        let (dx, dy) = heading_dirs(self.params.headings).expect("validated at construction")[heading as usize];
        (dy as f64).atan2(dx as f64)
    }

    pub fn position(&self, pose: &Pose) -> Vec2 {
        Vec2::new(pose.ix as f64 * self.params.spacing, pose.iy as f64 * self.params.spacing)
    }

    pub fn apply(&self, pose: &Pose, prim: &MotionPrimitive) -> Pose {
        debug_assert_eq!(pose.heading, prim.start_heading);
        Pose { ix: pose.ix + prim.dix, iy: pose.iy + prim.diy, heading: prim.end_heading }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn unit(d: (i32, i32)) -> Vec2 {
    Vec2::new(d.0 as f64, d.1 as f64).normalized()
}

fn straight(k: u16, dx: i32, dy: i32, spacing: f64, step: f64) -> MotionPrimitive {
    let end = Vec2::new(dx as f64, dy as f64) * spacing;
    let length = end.norm();
    let yaw = (dy as f64).atan2(dx as f64);
    let n = (length / step).ceil().max(1.0) as usize;
    let mut samples: Vec<SamplePose> = (0..n)
        .map(|i| {
            let p = end * (i as f64 / n as f64);
            SamplePose { x: p.x, y: p.y, yaw }
        })
        .collect();
    samples.push(SamplePose { x: end.x, y: end.y, yaw });
    MotionPrimitive {
        id: 0,
        kind: PrimitiveKind::Straight,
        start_heading: k,
        end_heading: k,
        dix: dx,
        diy: dy,
        arc_length: length,
        samples,
    }
}

fn left_normal(yaw: f64) -> Vec2 {
    Vec2::new(-yaw.sin(), yaw.cos())
}

/// Solves `p = a * u1 + b * u2`.
fn solve2(p: Vec2, u1: Vec2, u2: Vec2) -> Option<(f64, f64)> {
    let det = u1.cross(u2);
    if det.abs() < 1e-12 {
        return None;
    }
    Some((p.cross(u2) / det, u1.cross(p) / det))
}

#[derive(Debug, Clone, Copy)]
struct TurnShape {
    radius: f64,
    /// Straight run before the arc (`true`) or after it.
    lead_in: bool,
    straight: f64,
    length: f64,
    target: (i32, i32),
}

#[allow(clippy::too_many_arguments)]
fn turn(
    k: u16,
    target_heading: u16,
    from: (i32, i32),
    to: (i32, i32),
    kind: PrimitiveKind,
    spacing: f64,
    min_radius: f64,
    step: f64,
) -> Option<MotionPrimitive> {
    let ya = (from.1 as f64).atan2(from.0 as f64);
    let yb = (to.1 as f64).atan2(to.0 as f64);
    let sigma = if kind == PrimitiveKind::Left { 1.0 } else { -1.0 };
    let sweep = {
        let mut d = yb - ya;
        while d > std::f64::consts::PI {
            d -= std::f64::consts::TAU;
        }
        while d < -std::f64::consts::PI {
            d += std::f64::consts::TAU;
        }
        d.abs()
    };
    let chord = (left_normal(ya) - left_normal(yb)) * sigma;
    let (a, b) = (unit(from), unit(to));
    let reach = ((3.0 * min_radius + 4.0 * spacing) / spacing).ceil() as i32;
    let mut best: Option<TurnShape> = None;
    for j in 1..=reach {
        for i in -reach..=reach {
            let p = Vec2::new(i as f64, j as f64) * spacing;
            for lead_in in [false, true] {
                let sol = if lead_in {
                    solve2(p, a, chord).map(|(l, r)| (r, l))
                } else {
                    solve2(p, chord, b)
                };
                let Some((r, l)) = sol else { continue };
                if r < min_radius * (1.0 - 1e-12) || l < -1e-9 {
                    continue;
                }
                let l = l.max(0.0);
                let length = r * sweep + l;
                let better = best.is_none_or(|bst| length < bst.length - 1e-12);
                if better {
                    best = Some(TurnShape { radius: r, lead_in, straight: l, length, target: (i, j) });
                }
            }
        }
    }
    let shape = best?;
    let end = Vec2::new(shape.target.0 as f64, shape.target.1 as f64) * spacing;
    let eval = |s: f64| -> (Vec2, f64) {
        let arc_len = shape.radius * sweep;
        let (pre, arc_s, post) = if shape.lead_in {
            let pre = s.min(shape.straight);
            (pre, (s - shape.straight).clamp(0.0, arc_len), 0.0)
        } else {
            (0.0, s.min(arc_len), (s - arc_len).max(0.0))
        };
        let base = a * pre;
        let yaw = ya + sigma * arc_s / shape.radius;
        let arc = (left_normal(ya) - left_normal(yaw)) * (sigma * shape.radius);
        (base + arc + b * post, yaw)
    };
    let (analytic_end, _) = eval(shape.length);
    if (analytic_end - end).norm() > 1e-9 {
        return None;
    }
    let n = (shape.length / step).ceil().max(1.0) as usize;
    let mut samples: Vec<SamplePose> = (0..n)
        .map(|i| {
            let (p, yaw) = eval(shape.length * i as f64 / n as f64);
            SamplePose { x: p.x, y: p.y, yaw }
        })
        .collect();
    samples.push(SamplePose { x: end.x, y: end.y, yaw: yb });
    Some(MotionPrimitive {
        id: 0,
        kind,
        start_heading: k,
        end_heading: target_heading,
        dix: shape.target.0,
        diy: shape.target.1,
        arc_length: shape.length,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn straight_ahead_primitive() {
        let cs = generate_control_set(0.5, 16, 2.0).unwrap();
        let h = cs.forward_heading();
        let s = cs.straight_from(h).unwrap();
        assert_eq!((s.dix, s.diy, s.start_heading, s.end_heading), (0, 1, h, h));
        assert_eq!(s.arc_length, 0.5);
    }

    #[test]
    fn every_endpoint_lands_on_the_lattice() {
        for (spacing, n, r) in [(0.5, 16, 2.0), (0.5, 8, 1.0), (1.0, 16, 1.0), (0.25, 16, 3.0)] {
            let cs = generate_control_set(spacing, n, r).unwrap();
            for p in cs.primitives() {
                let last = p.samples.last().unwrap();
                assert!((last.x - p.dix as f64 * spacing).abs() < 1e-9);
                assert!((last.y - p.diy as f64 * spacing).abs() < 1e-9);
                assert!((last.yaw - cs.yaw(p.end_heading)).abs() < 1e-12);
                assert!(p.diy > 0, "primitive {} moves backwards", p.id);
                assert!(p.arc_length >= cs.l_min() && cs.l_min() > 0.0);
                let first = p.samples[0];
                assert_eq!((first.x, first.y), (0.0, 0.0));
                assert!((first.yaw - cs.yaw(p.start_heading)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn samples_are_dense_enough() {
        let params = ControlSetParams { sample_step: 0.0625, ..Default::default() };
        let cs = ControlSet::generate(params).unwrap();
        for p in cs.primitives() {
            for w in p.samples.windows(2) {
                let d = ((w[1].x - w[0].x).powi(2) + (w[1].y - w[0].y).powi(2)).sqrt();
                assert!(d <= 0.0625 + 1e-12, "gap {d} in primitive {}", p.id);
            }
        }
    }

    #[test]
    fn left_turn_goes_left() {
        let cs = generate_control_set(0.5, 16, 2.0).unwrap();
        let h = cs.forward_heading();
        let left = cs.from_heading(h).find(|p| p.kind == PrimitiveKind::Left).unwrap();
        assert!(left.dix < 0);
        assert_eq!(left.end_heading, h + 1);
        let right = cs.from_heading(h).find(|p| p.kind == PrimitiveKind::Right).unwrap();
        assert!(right.dix > 0);
        // the arc must honour the minimum radius: displacement shorter than path
        assert!(left.arc_length > (left.dix as f64).hypot(left.diy as f64) * 0.5);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(matches!(generate_control_set(0.5, 12, 2.0), Err(Error::ControlSetInfeasible { .. })));
        assert!(matches!(generate_control_set(0.5, 16, 0.25), Err(Error::ControlSetInfeasible { .. })));
    }

    #[test]
    fn backward_headings_have_no_primitives() {
        let cs = generate_control_set(0.5, 16, 2.0).unwrap();
        assert_eq!(cs.usable_headings(), vec![1, 2, 3, 4, 5, 6, 7]);
        assert_eq!(cs.from_heading(12).count(), 0);
    }
}
