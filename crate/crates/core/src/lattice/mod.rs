//! State lattice: poses, the forward control set, ship footprint and swath.

mod primitives;

pub use primitives::{generate_control_set, ControlSet, ControlSetParams, MotionPrimitive, PrimitiveKind, SamplePose};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{self, Aabb, Vec2};
use crate::occupancy::{GridSpec, Rasterizer};

/// Lattice state. Position is in units of the control set's spacing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Pose {
    pub ix: i32,
    pub iy: i32,
    pub heading: u16,
}

impl Pose {
    pub fn new(ix: i32, iy: i32, heading: u16) -> Self {
        Self { ix, iy, heading }
    }
}

/// Ship outline in the body frame, bow towards +y.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShipShape {
    vertices: Vec<Vec2>,
}

impl Default for ShipShape {
    fn default() -> Self {
        Self::hull(2.0, 0.5).expect("default hull is valid")
    }
}

impl ShipShape {
    /// Convex outline containing the origin.
    pub fn new(vertices: Vec<Vec2>) -> Result<Self> {
        let mut v = vertices;
        if v.len() < 3 || !geometry::is_simple(&v) {
            return Err(Error::InvalidPolygon("ship outline must be a simple polygon".into()));
        }
        if geometry::signed_area(&v) < 0.0 {
            v.reverse();
        }
        if !geometry::is_convex_ccw(&v) {
            return Err(Error::InvalidPolygon("ship outline must be convex".into()));
        }
        if !geometry::point_in_polygon(Vec2::ZERO, &v) {
            return Err(Error::InvalidPolygon("ship outline must contain the origin".into()));
        }
        Ok(Self { vertices: v })
    }

    /// Pointed hull: rectangular stern section and a bow taper of one beam.
    pub fn hull(length: f64, beam: f64) -> Result<Self> {
        if !(length > beam && beam > 0.0) {
            return Err(Error::InvalidParameter(format!("hull {length} x {beam}")));
        }
        let (hl, hb) = (length / 2.0, beam / 2.0);
        let shoulder = hl - beam;
        Self::new(vec![
            Vec2::new(-hb, -hl),
            Vec2::new(hb, -hl),
            Vec2::new(hb, shoulder),
            Vec2::new(0.0, hl),
            Vec2::new(-hb, shoulder),
        ])
    }

    pub fn vertices(&self) -> &[Vec2] {
        &self.vertices
    }

    pub fn length(&self) -> f64 {
        let b = Aabb::from_points(self.vertices.iter().copied());
        b.max.y - b.min.y
    }

    pub fn beam(&self) -> f64 {
        let b = Aabb::from_points(self.vertices.iter().copied());
        b.max.x - b.min.x
    }

    /// Largest distance from the origin to the outline.
    pub fn radius(&self) -> f64 {
        self.vertices.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn area(&self) -> f64 {
        geometry::polygon_area(&self.vertices)
    }

    /// World outline for a ship at `position` travelling along `yaw`.
    pub fn posed_into(&self, position: Vec2, yaw: f64, out: &mut Vec<Vec2>) {
        let rot = yaw - std::f64::consts::FRAC_PI_2;
        out.clear();
        if rot == 0.0 {
            out.extend(self.vertices.iter().map(|&v| v + position));
        } else {
            out.extend(self.vertices.iter().map(|&v| v.rotate(rot) + position));
        }
    }

    pub fn posed(&self, position: Vec2, yaw: f64) -> Vec<Vec2> {
        let mut out = Vec::with_capacity(self.vertices.len());
        self.posed_into(position, yaw, &mut out);
        out
    }
}

/// Sorted set of grid cells as `(row, col)`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CellSet(Vec<(u32, u32)>);

impl CellSet {
    pub fn from_cells(mut cells: Vec<(u32, u32)>) -> Self {
        cells.sort_unstable();
        cells.dedup();
        Self(cells)
    }

    pub fn cells(&self) -> &[(u32, u32)] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, row: usize, col: usize) -> bool {
        self.0.binary_search(&(row as u32, col as u32)).is_ok()
    }

    pub fn is_subset(&self, other: &CellSet) -> bool {
        self.0.iter().all(|c| other.0.binary_search(c).is_ok())
    }

    pub fn union(&self, other: &CellSet) -> CellSet {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Self::from_cells(v)
    }

    /// Cells shifted by whole rows and columns; cells leaving the first
    /// quadrant are dropped.
    pub fn shifted(&self, drow: i64, dcol: i64) -> CellSet {
        let cells = self
            .0
            .iter()
            .filter_map(|&(r, c)| {
                let (r, c) = (r as i64 + drow, c as i64 + dcol);
                (r >= 0 && c >= 0).then_some((r as u32, c as u32))
            })
            .collect();
        Self::from_cells(cells)
    }
}

/// Overlap below this fraction of a cell is treated as touching only.
const OVERLAP_EPS: f64 = 1e-12;

fn cells_of_polygons<'a, I: IntoIterator<Item = &'a [Vec2]>>(polys: I, spec: &GridSpec) -> CellSet {
    let mut raster = Rasterizer::default();
    let window = spec.full_window();
    let floor = OVERLAP_EPS * spec.cell_area();
    let mut cells = Vec::new();
    for poly in polys {
        raster.accumulate(poly, spec, &window, |r, c, a| {
            if a > floor {
                cells.push((r as u32, c as u32));
            }
        });
    }
    CellSet::from_cells(cells)
}

/// Cells overlapped by the ship at a world position and yaw.
pub fn footprint_at(position: Vec2, yaw: f64, shape: &ShipShape, spec: &GridSpec) -> CellSet {
    let poly = shape.posed(position, yaw);
    cells_of_polygons([poly.as_slice()], spec)
}

/// Cells overlapped by the ship body at `pose`.
pub fn footprint_cells(pose: &Pose, shape: &ShipShape, control_set: &ControlSet, spec: &GridSpec) -> CellSet {
    footprint_at(control_set.position(pose), control_set.yaw(pose.heading), shape, spec)
}

/// World-frame ship outlines at every sampled pose of `primitive` from `pose`.
pub fn swept_outlines(pose: &Pose, primitive: &MotionPrimitive, shape: &ShipShape, control_set: &ControlSet) -> Vec<Vec<Vec2>> {
    let base = control_set.position(pose);
    primitive.samples.iter().map(|s| shape.posed(base + Vec2::new(s.x, s.y), s.yaw)).collect()
}

/// Union of the footprints over the primitive's sampled poses.
pub fn swath_cells(pose: &Pose, primitive: &MotionPrimitive, shape: &ShipShape, control_set: &ControlSet, spec: &GridSpec) -> CellSet {
    let outlines = swept_outlines(pose, primitive, shape, control_set);
    cells_of_polygons(outlines.iter().map(|p| p.as_slice()), spec)
}

/// A chained sequence of primitives from a start pose.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Path {
    pub start: Pose,
    pub primitives: Vec<usize>,
    /// Lattice poses, `primitives.len() + 1` of them.
    pub poses: Vec<Pose>,
    /// Total arc length in metres.
    pub distance: f64,
}

impl Path {
    pub fn end(&self) -> Pose {
        *self.poses.last().expect("path has at least its start pose")
    }

    pub fn len(&self) -> usize {
        self.primitives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.primitives.is_empty()
    }
}

/// Chains primitives by id from `start`, checking each joint's heading.
pub fn concat_path(control_set: &ControlSet, primitives: &[usize], start: Pose) -> Result<Path> {
    let mut poses = Vec::with_capacity(primitives.len() + 1);
    poses.push(start);
    let mut distance = 0.0;
    let mut cur = start;
    for (index, &id) in primitives.iter().enumerate() {
        let prim = control_set
            .primitives()
            .get(id)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown primitive id {id}")))?;
        if prim.start_heading != cur.heading {
            return Err(Error::BrokenChain { index, expected: cur.heading, found: prim.start_heading });
        }
        cur = control_set.apply(&cur, prim);
        distance += prim.arc_length;
        poses.push(cur);
    }
    Ok(Path { start, primitives: primitives.to_vec(), poses, distance })
}
