//! Ice floes, the channel they float in, and random scenario generation.

use std::io::{Read, Write};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{self, Aabb, Vec2};

pub const DEFAULT_DENSITY: f64 = 900.0;
pub const DEFAULT_THICKNESS: f64 = 0.012;

/// A rigid convex ice floe.
///
/// The outline is stored once, in the frame it was created in, and shared
/// between copies; motion only changes `offset`. Area and mass are therefore
/// exactly invariant under any sequence of pushes.
#[derive(Debug, Clone, PartialEq)]
pub struct Floe {
    id: u32,
    outline: Arc<[Vec2]>,
    outline_box: Aabb,
    offset: Vec2,
    density: f64,
    thickness: f64,
}

impl Floe {
    /// Validates and normalises `vertices` to counter-clockwise order.
    pub fn new(id: u32, vertices: Vec<Vec2>, density: f64, thickness: f64) -> Result<Self> {
        if !(density > 0.0 && thickness > 0.0 && density.is_finite() && thickness.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "floe {id}: density {density} and thickness {thickness} must be positive"
            )));
        }
        let outline = normalize_convex(vertices).map_err(|e| match e {
            Error::InvalidPolygon(msg) => Error::InvalidPolygon(format!("floe {id}: {msg}")),
            other => other,
        })?;
        let outline_box = Aabb::from_points(outline.iter().copied());
        Ok(Self { id, outline: outline.into(), outline_box, offset: Vec2::ZERO, density, thickness })
    }

    pub fn id(&self) -> u32 {
        self.id
    }

    pub fn density(&self) -> f64 {
        self.density
    }

    pub fn thickness(&self) -> f64 {
        self.thickness
    }

    /// Accumulated translation since construction.
    pub fn offset(&self) -> Vec2 {
        self.offset
    }

    pub fn translate(&mut self, d: Vec2) {
        self.offset += d;
    }

    pub fn vertex_count(&self) -> usize {
        self.outline.len()
    }

    /// Current vertices in the channel frame.
    pub fn vertices(&self) -> Vec<Vec2> {
        let mut out = Vec::with_capacity(self.outline.len());
        self.vertices_into(&mut out);
        out
    }

    pub fn vertices_into(&self, out: &mut Vec<Vec2>) {
        out.clear();
        out.extend(self.outline.iter().map(|&p| p + self.offset));
    }

    pub fn aabb(&self) -> Aabb {
        self.outline_box.translated(self.offset)
    }

    pub fn area(&self) -> f64 {
        floe_area(self)
    }

    pub fn mass(&self) -> f64 {
        self.area() * self.density * self.thickness
    }

    pub fn centroid(&self) -> Vec2 {
        geometry::centroid(&self.outline) + self.offset
    }
}

/// Shoelace area of a floe, in m².
pub fn floe_area(f: &Floe) -> f64 {
    geometry::polygon_area(&f.outline)
}

fn normalize_convex(mut vertices: Vec<Vec2>) -> Result<Vec<Vec2>> {
    if vertices.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
        return Err(Error::InvalidPolygon("non-finite vertex".into()));
    }
    vertices.dedup();
    while vertices.len() > 1 && vertices.first() == vertices.last() {
        vertices.pop();
    }
    if vertices.len() < 3 {
        return Err(Error::InvalidPolygon(format!("{} distinct vertices", vertices.len())));
    }
    if !geometry::is_simple(&vertices) {
        return Err(Error::InvalidPolygon("self-intersecting outline".into()));
    }
    let area = geometry::signed_area(&vertices);
    if area == 0.0 {
        return Err(Error::InvalidPolygon("zero area".into()));
    }
    if area < 0.0 {
        vertices.reverse();
    }
    // drop collinear vertices, reject reflex ones
    let n = vertices.len();
    let mut kept = Vec::with_capacity(n);
    for i in 0..n {
        let a = vertices[(i + n - 1) % n];
        let b = vertices[i];
        let c = vertices[(i + 1) % n];
        let turn = (b - a).cross(c - b);
        let scale = (b - a).norm() * (c - b).norm();
        if turn < -1e-12 * scale {
            return Err(Error::InvalidPolygon("non-convex outline".into()));
        }
        if turn > 1e-12 * scale {
            kept.push(b);
        }
    }
    if kept.len() < 3 {
        return Err(Error::InvalidPolygon("degenerate outline".into()));
    }
    Ok(kept)
}

/// Rectangular channel `[0, width] x [0, length]`; ships travel towards +y.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Channel {
    pub width: f64,
    pub length: f64,
    pub goal_y: f64,
}

impl Default for Channel {
    fn default() -> Self {
        Self { width: 12.0, length: 76.0, goal_y: 68.0 }
    }
}

impl Channel {
    pub fn new(width: f64, length: f64, goal_y: f64) -> Result<Self> {
        let c = Self { width, length, goal_y };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.width > 0.0 && self.length > 0.0 && self.width.is_finite() && self.length.is_finite()) {
            return Err(Error::InvalidChannel(format!("dimensions {} x {}", self.width, self.length)));
        }
        if !(self.goal_y > 0.0 && self.goal_y <= self.length) {
            return Err(Error::InvalidChannel(format!("goal line {} outside (0, {}]", self.goal_y, self.length)));
        }
        Ok(())
    }

    pub fn area(&self) -> f64 {
        self.width * self.length
    }

    pub fn bounds(&self) -> Aabb {
        Aabb { min: Vec2::ZERO, max: Vec2::new(self.width, self.length) }
    }
}

/// Ground-truth world state: the channel and every floe in it.
#[derive(Debug, Clone, PartialEq)]
pub struct IceField {
    channel: Channel,
    floes: Vec<Floe>,
}

const OVERLAP_TOLERANCE: f64 = 1e-9;

impl IceField {
    /// Builds a field, checking that floes are inside the channel and pairwise disjoint.
    pub fn new(channel: Channel, floes: Vec<Floe>) -> Result<Self> {
        channel.validate()?;
        let bounds = channel.bounds();
        let eps = 1e-9;
        for f in &floes {
            let b = f.aabb();
            if b.min.x < -eps || b.min.y < -eps || b.max.x > bounds.max.x + eps || b.max.y > bounds.max.y + eps {
                return Err(Error::FloeOutsideChannel { id: f.id });
            }
        }
        let verts: Vec<Vec<Vec2>> = floes.iter().map(Floe::vertices).collect();
        let boxes: Vec<Aabb> = floes.iter().map(Floe::aabb).collect();
        for i in 0..floes.len() {
            for j in (i + 1)..floes.len() {
                if boxes[i].overlaps(&boxes[j]) {
                    let area = geometry::convex_intersection_area(&verts[i], &verts[j]);
                    if area >= OVERLAP_TOLERANCE {
                        return Err(Error::FloeOverlap { a: floes[i].id, b: floes[j].id, area });
                    }
                }
            }
        }
        Ok(Self { channel, floes })
    }

    /// Skips validation; used for states produced by the simulator, which may
    /// carry residual jam overlap.
    pub(crate) fn from_parts(channel: Channel, floes: Vec<Floe>) -> Self {
        Self { channel, floes }
    }

    pub fn empty(channel: Channel) -> Self {
        Self { channel, floes: Vec::new() }
    }

    pub fn channel(&self) -> &Channel {
        &self.channel
    }

    pub fn floes(&self) -> &[Floe] {
        &self.floes
    }

    pub(crate) fn floes_mut(&mut self) -> &mut [Floe] {
        &mut self.floes
    }

    pub fn total_area(&self) -> f64 {
        self.floes.iter().map(floe_area).sum()
    }

    /// Fraction of the channel surface covered by ice.
    pub fn concentration(&self) -> f64 {
        self.total_area() / self.channel.area()
    }
}

/// Total ice mass in kg.
pub fn total_mass(field: &IceField) -> f64 {
    field.floes.iter().map(Floe::mass).sum()
}

/// Knobs for [`generate_scenario_with`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioParams {
    pub concentration: f64,
    /// Median floe area in m²; `None` means 1% of the channel width squared.
    pub median_area: Option<f64>,
    /// Shape parameter of the log-normal area distribution.
    pub area_sigma: f64,
    pub density: f64,
    pub thickness: f64,
    /// Region kept free of ice, typically the ship's starting position.
    pub keep_out: Option<Aabb>,
    /// Placement attempts per floe before giving up.
    pub max_rejections: usize,
}

impl ScenarioParams {
    pub fn new(concentration: f64) -> Self {
        Self {
            concentration,
            median_area: None,
            area_sigma: 0.5,
            density: DEFAULT_DENSITY,
            thickness: DEFAULT_THICKNESS,
            keep_out: None,
            max_rejections: 100_000,
        }
    }
}

pub const MAX_CONCENTRATION: f64 = 0.6;

/// Random field at the requested concentration, deterministic in `seed`.
pub fn generate_scenario(concentration: f64, channel: Channel, seed: u64) -> Result<IceField> {
    generate_scenario_with(&ScenarioParams::new(concentration), channel, seed)
}

pub fn generate_scenario_with(params: &ScenarioParams, channel: Channel, seed: u64) -> Result<IceField> {
    channel.validate()?;
    let c = params.concentration;
    if !(0.0..=MAX_CONCENTRATION).contains(&c) {
        return Err(Error::InvalidParameter(format!("concentration {c} outside [0, {MAX_CONCENTRATION}]")));
    }
    if c == 0.0 {
        return Ok(IceField::empty(channel));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let median = params.median_area.unwrap_or(0.01 * channel.width * channel.width);
    let short_side = channel.width.min(channel.length);
    // keep every floe well inside the narrow dimension
    let max_area = (median * 8.0).min((short_side / 3.0).powi(2));
    let min_area = (median / 8.0).min(max_area);
    let dist = LogNormal::new(median.ln(), params.area_sigma)
        .map_err(|e| Error::InvalidParameter(format!("area distribution: {e}")))?;

    let target = c * channel.area();
    let mut areas = Vec::new();
    let mut total = 0.0;
    while target - total > 0.25 * min_area {
        let mut a: f64 = dist.sample(&mut rng);
        a = a.clamp(min_area, max_area);
        let remaining = target - total;
        if a > remaining {
            a = remaining;
        }
        areas.push(a);
        total += a;
    }
    areas.sort_by(|a, b| b.total_cmp(a));

    let mut placer = Placer::new(channel, max_area.sqrt() * 2.0);
    let mut floes: Vec<Floe> = Vec::with_capacity(areas.len());
    for (idx, &area) in areas.iter().enumerate() {
        let shape = random_convex_shape(&mut rng, area);
        let bbox = Aabb::from_points(shape.iter().copied());
        let span_x = (channel.width - bbox.max.x, -bbox.min.x);
        let span_y = (channel.length - bbox.max.y, -bbox.min.y);
        let mut placed = false;
        for _ in 0..params.max_rejections {
            let d = Vec2::new(rng.random_range(span_x.1..=span_x.0), rng.random_range(span_y.1..=span_y.0));
            let candidate: Vec<Vec2> = shape.iter().map(|&p| p + d).collect();
            let cbox = bbox.translated(d);
            if params.keep_out.is_some_and(|k| k.overlaps(&cbox)) {
                continue;
            }
            if placer.collides(&candidate, &cbox) {
                continue;
            }
            let floe = Floe::new(idx as u32, candidate, params.density, params.thickness)?;
            placer.insert(floe.vertices(), cbox);
            floes.push(floe);
            placed = true;
            break;
        }
        if !placed {
            return Err(Error::ConcentrationInfeasible {
                concentration: c,
                placed: idx,
                rejections: params.max_rejections,
            });
        }
    }
    Ok(IceField::from_parts(channel, floes))
}

/// Convex hull of a jittered ring, rescaled to `area` and centred at the origin.
fn random_convex_shape(rng: &mut ChaCha8Rng, area: f64) -> Vec<Vec2> {
    loop {
        let n = rng.random_range(5..=9usize);
        let stretch = rng.random_range(0.7..1.3);
        let spin = rng.random_range(0.0..std::f64::consts::TAU);
        let step = std::f64::consts::TAU / n as f64;
        let pts: Vec<Vec2> = (0..n)
            .map(|k| {
                let theta = k as f64 * step + rng.random_range(-0.3..0.3) * step;
                let r = rng.random_range(0.75..1.0);
                Vec2::new(stretch * r * theta.cos(), r * theta.sin() / stretch).rotate(spin)
            })
            .collect();
        let hull = geometry::convex_hull(&pts);
        if hull.len() < 5 || !geometry::is_convex_ccw(&hull) {
            continue;
        }
        let a = geometry::polygon_area(&hull);
        let k = (area / a).sqrt();
        let c = geometry::centroid(&hull);
        return hull.into_iter().map(|p| (p - c) * k).collect();
    }
}

/// Uniform bins over placed floes for quick rejection tests.
struct Placer {
    bin: f64,
    nx: usize,
    ny: usize,
    bins: Vec<Vec<usize>>,
    shapes: Vec<(Vec<Vec2>, Aabb)>,
}

impl Placer {
    fn new(channel: Channel, bin: f64) -> Self {
        let nx = ((channel.width / bin).ceil() as usize).max(1);
        let ny = ((channel.length / bin).ceil() as usize).max(1);
        Self { bin, nx, ny, bins: vec![Vec::new(); nx * ny], shapes: Vec::new() }
    }

    fn bin_range(&self, b: &Aabb) -> (usize, usize, usize, usize) {
        let clamp = |v: f64, n: usize| ((v / self.bin).floor().max(0.0) as usize).min(n - 1);
        (clamp(b.min.x, self.nx), clamp(b.max.x, self.nx), clamp(b.min.y, self.ny), clamp(b.max.y, self.ny))
    }

    fn collides(&self, poly: &[Vec2], bbox: &Aabb) -> bool {
        let (x0, x1, y0, y1) = self.bin_range(bbox);
        for by in y0..=y1 {
            for bx in x0..=x1 {
                for &i in &self.bins[by * self.nx + bx] {
                    let (other, obox) = &self.shapes[i];
                    if obox.overlaps(bbox) && geometry::sat_contact(other, poly).is_some() {
                        return true;
                    }
                }
            }
        }
        false
    }

    fn insert(&mut self, poly: Vec<Vec2>, bbox: Aabb) {
        let idx = self.shapes.len();
        let (x0, x1, y0, y1) = self.bin_range(&bbox);
        for by in y0..=y1 {
            for bx in x0..=x1 {
                self.bins[by * self.nx + bx].push(idx);
            }
        }
        self.shapes.push((poly, bbox));
    }
}

/// Round to nine significant decimal digits.
pub(crate) fn round_sig9(v: f64) -> f64 {
    if v == 0.0 || !v.is_finite() {
        return v;
    }
    format!("{v:.8e}").parse().unwrap_or(v)
}

#[derive(Debug, Serialize, Deserialize)]
struct FieldDocument {
    version: u32,
    channel: Channel,
    floes: Vec<FloeDocument>,
}

#[derive(Debug, Serialize, Deserialize)]
struct FloeDocument {
    id: u32,
    density: f64,
    thickness: f64,
    vertices: Vec<[f64; 2]>,
}

impl IceField {
    /// JSON with every coordinate rounded to nine significant digits.
    pub fn to_json(&self) -> Result<String> {
        let doc = FieldDocument {
            version: 1,
            channel: Channel {
                width: round_sig9(self.channel.width),
                length: round_sig9(self.channel.length),
                goal_y: round_sig9(self.channel.goal_y),
            },
            floes: self
                .floes
                .iter()
                .map(|f| FloeDocument {
                    id: f.id,
                    density: round_sig9(f.density),
                    thickness: round_sig9(f.thickness),
                    vertices: f.vertices().iter().map(|p| [round_sig9(p.x), round_sig9(p.y)]).collect(),
                })
                .collect(),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    /// Parses a field document. Floes are re-validated but overlap from a
    /// saved simulator state is tolerated.
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: FieldDocument = serde_json::from_str(text)?;
        if doc.version != 1 {
            return Err(Error::Format(format!("unsupported field document version {}", doc.version)));
        }
        doc.channel.validate()?;
        let floes = doc
            .floes
            .into_iter()
            .map(|f| Floe::new(f.id, f.vertices.iter().map(|v| Vec2::new(v[0], v[1])).collect(), f.density, f.thickness))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_parts(doc.channel, floes))
    }

    pub fn write_json<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(self.to_json()?.as_bytes())?;
        Ok(())
    }

    pub fn read_json<R: Read>(mut r: R) -> Result<Self> {
        let mut s = String::new();
        r.read_to_string(&mut s)?;
        Self::from_json(&s)
    }
}
