//! Quasi-static ship-ice pushing.
//!
//! The ship follows a primitive's sampled poses exactly. At each sample, floes
//! overlapping the hull are translated out along their minimum translation
//! vector, floe-floe overlaps are then relaxed pairwise, and floes are kept
//! inside the channel. Floes never rotate and carry no momentum between
//! samples, so the whole step is a deterministic function of its inputs.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::context::NavContext;
use crate::error::Result;
use crate::field::{Channel, Floe, IceField};
use crate::geometry::{self, Aabb, Vec2};
use crate::lattice::{MotionPrimitive, Path, Pose};

/// Relaxation passes per sample before the remaining overlap is reported.
pub const MAX_ITERATIONS: usize = 32;
/// Penetration depths below this are treated as contact without overlap.
pub const DEPTH_TOLERANCE: f64 = 1e-9;
/// Overlap area below which relaxation counts as converged; a larger
/// residual marks the sample as jammed.
pub const JAM_AREA: f64 = 1e-6;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StepMetrics {
    /// Joules.
    pub ke_loss: f64,
    /// N·s.
    pub impulse: f64,
    /// kg·m.
    pub w_approx: f64,
    /// Sorted ids of floes whose position changed.
    pub pushed_floe_ids: Vec<u32>,
    /// Largest overlap area left unresolved after any sample, m².
    pub residual_overlap: f64,
    /// Number of times a floe was held back by a channel wall.
    pub wall_contacts: usize,
}

impl StepMetrics {
    pub fn jammed(&self) -> bool {
        self.residual_overlap > JAM_AREA
    }

    pub fn collided(&self) -> bool {
        !self.pushed_floe_ids.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub field_after: IceField,
    pub metrics: StepMetrics,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrialMetrics {
    /// Metres travelled.
    pub distance: f64,
    pub ke_loss: f64,
    pub impulse: f64,
    pub w_approx: f64,
    pub steps: usize,
    pub collisions: usize,
    pub max_residual_overlap: f64,
}

impl TrialMetrics {
    pub fn add_step(&mut self, arc_length: f64, m: &StepMetrics) {
        self.distance += arc_length;
        self.ke_loss += m.ke_loss;
        self.impulse += m.impulse;
        self.w_approx += m.w_approx;
        self.steps += 1;
        self.collisions += m.collided() as usize;
        self.max_residual_overlap = self.max_residual_overlap.max(m.residual_overlap);
    }
}

/// Executes one primitive from `pose` on a copy of `field`.
pub fn step_primitive(field: &IceField, pose: &Pose, primitive: &MotionPrimitive, ctx: &NavContext) -> StepResult {
    let mut after = field.clone();
    let metrics = step_in_place(&mut after, pose, primitive, ctx);
    StepResult { field_after: after, metrics }
}

/// Executes one primitive, mutating `field`.
pub fn step_in_place(field: &mut IceField, pose: &Pose, primitive: &MotionPrimitive, ctx: &NavContext) -> StepMetrics {
    let channel = *field.channel();
    let floes = field.floes_mut();
    let start: Vec<Vec2> = floes.iter().map(|f| f.offset()).collect();
    let mut sim = Pusher::new(floes, &channel);
    let mut metrics = StepMetrics::default();

    let sub_len = primitive.sub_step_length();
    let dt = if sub_len > 0.0 { sub_len / ctx.speed } else { 1.0 };
    let t_step = if primitive.arc_length > 0.0 { primitive.arc_length / ctx.speed } else { dt };
    let base = ctx.position(pose);
    let mut hull = Vec::new();

    for s in &primitive.samples {
        ctx.ship.posed_into(base + Vec2::new(s.x, s.y), s.yaw, &mut hull);
        sim.resolve(floes, &hull, &channel, &mut metrics);
        for &i in &sim.active {
            let d = (floes[i].offset() - sim.before[i]).norm();
            if d == 0.0 {
                continue;
            }
            let m = sim.mass[i];
            metrics.w_approx += m * d;
            if sim.ship_contact[i] {
                let v = d / dt;
                metrics.impulse += m * v;
                metrics.ke_loss += 0.5 * m * v * v * dt / t_step;
            }
        }
    }
    metrics.pushed_floe_ids = floes
        .iter()
        .zip(&start)
        .filter(|(f, s)| f.offset() != **s)
        .map(|(f, _)| f.id())
        .collect();
    metrics.pushed_floe_ids.sort_unstable();
    metrics
}

/// Uniform bins over the channel holding the floes whose box touches them.
struct Bins {
    size: f64,
    nx: usize,
    ny: usize,
    items: Vec<Vec<u32>>,
    stamp: Vec<u32>,
    epoch: u32,
}

impl Bins {
    const SIZE: f64 = 1.0;

    fn new(channel: &Channel, floes: &[Floe]) -> Self {
        let nx = (channel.width / Self::SIZE).ceil().max(1.0) as usize;
        let ny = (channel.length / Self::SIZE).ceil().max(1.0) as usize;
        let mut bins = Self { size: Self::SIZE, nx, ny, items: vec![Vec::new(); nx * ny], stamp: vec![0; floes.len()], epoch: 0 };
        for (i, f) in floes.iter().enumerate() {
            bins.insert(i, &f.aabb());
        }
        bins
    }

    fn range(&self, b: &Aabb) -> (usize, usize, usize, usize) {
        let ix = |x: f64, n: usize| ((x / self.size).floor().max(0.0) as usize).min(n - 1);
        (ix(b.min.x, self.nx), ix(b.max.x, self.nx), ix(b.min.y, self.ny), ix(b.max.y, self.ny))
    }

    fn insert(&mut self, i: usize, b: &Aabb) {
        let (x0, x1, y0, y1) = self.range(b);
        for y in y0..=y1 {
            for x in x0..=x1 {
                self.items[y * self.nx + x].push(i as u32);
            }
        }
    }

    fn relocate(&mut self, i: usize, old: &Aabb, new: &Aabb) {
        let (r0, r1) = (self.range(old), self.range(new));
        if r0 == r1 {
            return;
        }
        let (x0, x1, y0, y1) = r0;
        for y in y0..=y1 {
            for x in x0..=x1 {
                self.items[y * self.nx + x].retain(|&k| k as usize != i);
            }
        }
        self.insert(i, new);
    }

    /// Floes sharing a bin with `b`, ascending and without repeats.
    fn query(&mut self, b: &Aabb, out: &mut Vec<usize>) {
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.stamp.iter_mut().for_each(|s| *s = 0);
            self.epoch = 1;
        }
        out.clear();
        let (x0, x1, y0, y1) = self.range(b);
        for y in y0..=y1 {
            for x in x0..=x1 {
                for &k in &self.items[y * self.nx + x] {
                    if self.stamp[k as usize] != self.epoch {
                        self.stamp[k as usize] = self.epoch;
                        out.push(k as usize);
                    }
                }
            }
        }
        out.sort_unstable();
    }
}

/// Scratch state reused across samples.
struct Pusher {
    mass: Vec<f64>,
    bins: Bins,
    moved: Vec<bool>,
    ship_contact: Vec<bool>,
    /// Position of each floe at the start of the current sample, valid for
    /// floes in `active`.
    before: Vec<Vec2>,
    active: Vec<usize>,
    near: Vec<usize>,
    a: Vec<Vec2>,
    b: Vec<Vec2>,
}

impl Pusher {
    fn new(floes: &[Floe], channel: &Channel) -> Self {
        let n = floes.len();
        Self {
            mass: floes.iter().map(|f| f.mass()).collect(),
            bins: Bins::new(channel, floes),
            moved: vec![false; n],
            ship_contact: vec![false; n],
            before: vec![Vec2::ZERO; n],
            active: Vec::new(),
            near: Vec::new(),
            a: Vec::new(),
            b: Vec::new(),
        }
    }

    fn shift(&mut self, floes: &mut [Floe], i: usize, d: Vec2, channel: &Channel, metrics: &mut StepMetrics) {
        let old = floes[i].aabb();
        floes[i].translate(d);
        metrics.wall_contacts += clamp_to_channel(&mut floes[i], channel) as usize;
        self.bins.relocate(i, &old, &floes[i].aabb());
    }

    fn mark(&mut self, floes: &[Floe], i: usize) {
        if !self.moved[i] {
            self.moved[i] = true;
            self.before[i] = floes[i].offset();
            self.active.push(i);
        }
    }

    fn resolve(&mut self, floes: &mut [Floe], hull: &[Vec2], channel: &Channel, metrics: &mut StepMetrics) {
        for &i in &self.active {
            self.moved[i] = false;
            self.ship_contact[i] = false;
        }
        self.active.clear();
        let hull_box = Aabb::from_points(hull.iter().copied());

        for iteration in 0..MAX_ITERATIONS {
            let mut changed = false;
            // ship against floes
            let mut near = std::mem::take(&mut self.near);
            self.bins.query(&hull_box, &mut near);
            for &i in &near {
                if !floes[i].aabb().overlaps(&hull_box) {
                    continue;
                }
                floes[i].vertices_into(&mut self.a);
                if let Some(c) = geometry::sat_contact(hull, &self.a) {
                    if c.depth > DEPTH_TOLERANCE {
                        self.mark(floes, i);
                        self.shift(floes, i, c.mtv(), channel, metrics);
                        self.ship_contact[i] = true;
                        changed = true;
                    }
                }
            }
            // floe against floe, starting from floes that moved
            let mut k = 0;
            while k < self.active.len() {
                let i = self.active[k];
                k += 1;
                self.bins.query(&floes[i].aabb(), &mut near);
                for &j in &near {
                    if j == i || !floes[i].aabb().overlaps(&floes[j].aabb()) {
                        continue;
                    }
                    floes[i].vertices_into(&mut self.a);
                    floes[j].vertices_into(&mut self.b);
                    let Some(c) = geometry::sat_contact(&self.a, &self.b) else { continue };
                    if c.depth <= DEPTH_TOLERANCE {
                        continue;
                    }
                    let mtv = c.mtv();
                    if self.moved[j] {
                        let (mi, mj) = (self.mass[i], self.mass[j]);
                        let total = mi + mj;
                        self.shift(floes, i, -(mtv * (mj / total)), channel, metrics);
                        self.shift(floes, j, mtv * (mi / total), channel, metrics);
                    } else {
                        self.mark(floes, j);
                        self.shift(floes, j, mtv, channel, metrics);
                    }
                    changed = true;
                }
            }
            self.near = near;
            if !changed {
                return;
            }
            // deep passes are rare; past the first few, stop once the
            // remaining overlap is negligible
            if iteration >= 3 && self.overlap_area(floes, hull, &hull_box) < JAM_AREA {
                return;
            }
        }
        let residual = self.overlap_area(floes, hull, &hull_box);
        metrics.residual_overlap = metrics.residual_overlap.max(residual);
    }

    fn overlap_area(&mut self, floes: &[Floe], hull: &[Vec2], hull_box: &Aabb) -> f64 {
        let mut total = 0.0;
        let mut near = std::mem::take(&mut self.near);
        self.bins.query(hull_box, &mut near);
        for &i in &near {
            if floes[i].aabb().overlaps(hull_box) {
                floes[i].vertices_into(&mut self.a);
                total += geometry::convex_intersection_area(hull, &self.a);
            }
        }
        for k in 0..self.active.len() {
            let i = self.active[k];
            self.bins.query(&floes[i].aabb(), &mut near);
            for &j in &near {
                if j == i || (self.moved[j] && j < i) || !floes[i].aabb().overlaps(&floes[j].aabb()) {
                    continue;
                }
                floes[i].vertices_into(&mut self.a);
                floes[j].vertices_into(&mut self.b);
                total += geometry::convex_intersection_area(&self.a, &self.b);
            }
        }
        self.near = near;
        total
    }
}

/// Shifts a floe back inside the channel; returns whether it had to.
fn clamp_to_channel(floe: &mut Floe, channel: &Channel) -> bool {
    let b = floe.aabb();
    let mut d = Vec2::ZERO;
    if b.min.x < 0.0 {
        d.x = -b.min.x;
    } else if b.max.x > channel.width {
        d.x = channel.width - b.max.x;
    }
    if b.min.y < 0.0 {
        d.y = -b.min.y;
    } else if b.max.y > channel.length {
        d.y = channel.length - b.max.y;
    }
    if d == Vec2::ZERO {
        return false;
    }
    floe.translate(d);
    true
}

/// Executes every primitive of `path` in order.
pub fn rollout_path(field: &IceField, path: &Path, ctx: &NavContext) -> (IceField, TrialMetrics, Vec<StepMetrics>) {
    let mut cur = field.clone();
    let mut total = TrialMetrics::default();
    let mut steps = Vec::with_capacity(path.len());
    for (k, &id) in path.primitives.iter().enumerate() {
        let prim = ctx.control_set.primitive(id);
        let m = step_in_place(&mut cur, &path.poses[k], prim, ctx);
        total.add_step(prim.arc_length, &m);
        steps.push(m);
    }
    (cur, total, steps)
}

/// One line of a trial trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub step: usize,
    pub pose: Pose,
    pub primitive: usize,
    pub metrics: StepMetrics,
    /// Location of a field snapshot written alongside the trace, if any.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub snapshot: Option<String>,
}

/// Writes records as line-delimited JSON.
pub fn write_trace<W: Write>(records: &[TraceRecord], mut out: W) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}
