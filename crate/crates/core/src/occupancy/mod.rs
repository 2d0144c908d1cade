//! Ratio occupancy grids.
//!
//! Each cell stores the fraction of its area covered by ice. Cells are
//! row-major with row 0 at the channel's `y = 0` edge, so rows run along the
//! direction of travel and columns across the channel.

mod diff;
mod io;

pub use diff::{diff_emd, diff_mse, diff_neg_ssim, SSIM_WINDOW};
pub use io::{read_pgm, write_csv, write_pgm, GridMetadata};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Channel, IceField};
use crate::geometry::{self, Aabb, Vec2};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub cell_size: f64,
    pub rows: usize,
    pub cols: usize,
    /// World position of the outer corner of cell (0, 0).
    pub origin: Vec2,
}

impl GridSpec {
    pub fn new(cell_size: f64, rows: usize, cols: usize, origin: Vec2) -> Result<Self> {
        if !(cell_size > 0.0 && cell_size.is_finite()) || rows == 0 || cols == 0 {
            return Err(Error::InvalidParameter(format!("grid {rows}x{cols} with cell size {cell_size}")));
        }
        Ok(Self { cell_size, rows, cols, origin })
    }

    /// Smallest grid anchored at the channel origin that covers the channel.
    pub fn covering(channel: &Channel, cell_size: f64) -> Result<Self> {
        let cols = (channel.width / cell_size - 1e-9).ceil().max(1.0) as usize;
        let rows = (channel.length / cell_size - 1e-9).ceil().max(1.0) as usize;
        Self::new(cell_size, rows, cols, Vec2::ZERO)
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_area(&self) -> f64 {
        self.cell_size * self.cell_size
    }

    #[inline]
    pub fn x_edge(&self, col: usize) -> f64 {
        self.origin.x + col as f64 * self.cell_size
    }

    #[inline]
    pub fn y_edge(&self, row: usize) -> f64 {
        self.origin.y + row as f64 * self.cell_size
    }

    /// Cell indices containing `p`, possibly outside the grid.
    pub fn cell_of(&self, p: Vec2) -> (i64, i64) {
        let r = ((p.y - self.origin.y) / self.cell_size).floor() as i64;
        let c = ((p.x - self.origin.x) / self.cell_size).floor() as i64;
        (r, c)
    }

    pub fn full_window(&self) -> Window {
        Window { row: 0, col: 0, rows: self.rows, cols: self.cols }
    }

    /// Spec of the sub-grid covered by `window`.
    pub fn sub_spec(&self, window: &Window) -> GridSpec {
        GridSpec {
            cell_size: self.cell_size,
            rows: window.rows,
            cols: window.cols,
            origin: Vec2::new(self.x_edge(window.col), self.y_edge(window.row)),
        }
    }

    pub fn bounds(&self) -> Aabb {
        Aabb { min: self.origin, max: Vec2::new(self.x_edge(self.cols), self.y_edge(self.rows)) }
    }
}

/// Rectangular block of cells inside a larger grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Window {
    pub row: usize,
    pub col: usize,
    pub rows: usize,
    pub cols: usize,
}

impl Window {
    pub fn contains(&self, row: usize, col: usize) -> bool {
        row >= self.row && row < self.row + self.rows && col >= self.col && col < self.col + self.cols
    }

    pub fn extent(&self) -> Extent {
        Extent { rows: self.rows, cols: self.cols }
    }
}

/// Window size H x W in cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Extent {
    pub rows: usize,
    pub cols: usize,
}

/// Fraction of each window row placed behind the ship's cell.
pub const WINDOW_BEHIND_FRACTION: f64 = 0.25;

/// Window of `extent` around a ship at `position`: centred across the channel,
/// three quarters of it ahead of the ship, clamped to the grid.
pub fn window_at(spec: &GridSpec, position: Vec2, extent: Extent) -> Result<Window> {
    if extent.rows == 0 || extent.cols == 0 || extent.rows > spec.rows || extent.cols > spec.cols {
        return Err(Error::InvalidParameter(format!(
            "window {}x{} does not fit grid {}x{}",
            extent.rows, extent.cols, spec.rows, spec.cols
        )));
    }
    let (r, c) = spec.cell_of(position);
    let behind = (extent.rows as f64 * WINDOW_BEHIND_FRACTION).floor() as i64;
    let row = (r - behind).clamp(0, (spec.rows - extent.rows) as i64) as usize;
    let col = (c - (extent.cols / 2) as i64).clamp(0, (spec.cols - extent.cols) as i64) as usize;
    Ok(Window { row, col, rows: extent.rows, cols: extent.cols })
}

#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyGrid {
    spec: GridSpec,
    values: Vec<f64>,
}

impl OccupancyGrid {
    pub fn zeros(spec: GridSpec) -> Self {
        Self { values: vec![0.0; spec.len()], spec }
    }

    pub fn filled(spec: GridSpec, value: f64) -> Self {
        Self { values: vec![value; spec.len()], spec }
    }

    /// Wraps row-major values; each must lie in `[0, 1]`.
    pub fn from_values(spec: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != spec.len() {
            return Err(Error::Format(format!("{} values for a {}x{} grid", values.len(), spec.rows, spec.cols)));
        }
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Format(format!("occupancy value {v} outside [0, 1]")));
        }
        Ok(Self { spec, values })
    }

    /// Clamps every value into `[0, 1]`; NaN becomes 0.
    pub fn from_values_clamped(spec: GridSpec, mut values: Vec<f64>) -> Result<Self> {
        if values.len() != spec.len() {
            return Err(Error::Format(format!("{} values for a {}x{} grid", values.len(), spec.rows, spec.cols)));
        }
        for v in &mut values {
            *v = if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) };
        }
        Ok(Self { spec, values })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.spec.rows, self.spec.cols)
    }

    pub fn rows(&self) -> usize {
        self.spec.rows
    }

    pub fn cols(&self) -> usize {
        self.spec.cols
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.spec.cols + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, v: f64) {
        debug_assert!((0.0..=1.0).contains(&v));
        self.values[row * self.spec.cols + col] = v;
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.values[row * self.spec.cols..(row + 1) * self.spec.cols]
    }

    pub(crate) fn ensure_same_dims(&self, other: &OccupancyGrid) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::DimensionMismatch { expected: self.dims(), found: other.dims() });
        }
        Ok(())
    }
}

/// Sum of all cell values.
pub fn grid_sum(o: &OccupancyGrid) -> f64 {
    o.values.iter().sum()
}

/// Exact area-ratio rasterisation of the whole field.
pub fn rasterize(field: &IceField, spec: &GridSpec) -> OccupancyGrid {
    rasterize_window(field, spec, &spec.full_window())
}

/// Rasterises only the cells of `window`. Cell values are bit-identical to the
/// same cells of [`rasterize`].
pub fn rasterize_window(field: &IceField, spec: &GridSpec, window: &Window) -> OccupancyGrid {
    let mut acc = vec![0.0; window.rows * window.cols];
    let mut raster = Rasterizer::default();
    let mut verts = Vec::new();
    let region = Aabb {
        min: Vec2::new(spec.x_edge(window.col), spec.y_edge(window.row)),
        max: Vec2::new(spec.x_edge(window.col + window.cols), spec.y_edge(window.row + window.rows)),
    };
    for floe in field.floes() {
        if !floe.aabb().overlaps(&region) {
            continue;
        }
        floe.vertices_into(&mut verts);
        raster.accumulate(&verts, spec, window, |r, c, a| acc[r * window.cols + c] += a);
    }
    let inv = spec.cell_area();
    let values = acc.into_iter().map(|a| (a / inv).clamp(0.0, 1.0)).collect();
    OccupancyGrid { spec: spec.sub_spec(window), values }
}

/// Column-strip then row-strip clipping of convex polygons against grid cells.
#[derive(Default)]
pub(crate) struct Rasterizer {
    strip: Vec<Vec2>,
    cell: Vec<Vec2>,
    scratch: Vec<Vec2>,
}

impl Rasterizer {
    /// Calls `emit(row, col, area)` with window-relative indices for every
    /// window cell the convex polygon overlaps with positive area.
    pub(crate) fn accumulate<F: FnMut(usize, usize, f64)>(
        &mut self,
        poly: &[Vec2],
        spec: &GridSpec,
        window: &Window,
        mut emit: F,
    ) {
        let b = Aabb::from_points(poly.iter().copied());
        let s = spec.cell_size;
        let span = |lo: f64, hi: f64, origin: f64, first: usize, count: usize| -> Option<(usize, usize)> {
            let a = ((lo - origin) / s).floor() as i64;
            let z = ((hi - origin) / s).floor() as i64;
            let a = a.max(first as i64);
            let z = z.min((first + count) as i64 - 1);
            (a <= z).then_some((a as usize, z as usize))
        };
        let Some((c0, c1)) = span(b.min.x, b.max.x, spec.origin.x, window.col, window.cols) else { return };
        for col in c0..=c1 {
            geometry::clip_x_range(poly, spec.x_edge(col), spec.x_edge(col + 1), &mut self.scratch, &mut self.strip);
            if self.strip.len() < 3 {
                continue;
            }
            let sb = Aabb::from_points(self.strip.iter().copied());
            let Some((r0, r1)) = span(sb.min.y, sb.max.y, spec.origin.y, window.row, window.rows) else { continue };
            for row in r0..=r1 {
                geometry::clip_y_range(&self.strip, spec.y_edge(row), spec.y_edge(row + 1), &mut self.scratch, &mut self.cell);
                if self.cell.len() < 3 {
                    continue;
                }
                let a = geometry::polygon_area(&self.cell);
                if a > 0.0 {
                    emit(row - window.row, col - window.col, a);
                }
            }
        }
    }
}

/// Copies the window region out of `global`.
pub fn crop(global: &OccupancyGrid, window: &Window) -> OccupancyGrid {
    let spec = global.spec.sub_spec(window);
    let mut values = Vec::with_capacity(window.rows * window.cols);
    for r in window.row..window.row + window.rows {
        let start = r * global.spec.cols + window.col;
        values.extend_from_slice(&global.values[start..start + window.cols]);
    }
    OccupancyGrid { spec, values }
}

/// Crops the window a ship at `position` sees.
pub fn crop_at(global: &OccupancyGrid, position: Vec2, extent: Extent) -> Result<(OccupancyGrid, Window)> {
    let window = window_at(&global.spec, position, extent)?;
    Ok((crop(global, &window), window))
}

/// New grid equal to `global` with the window replaced by `local`.
pub fn stitch(global: &OccupancyGrid, local: &OccupancyGrid, window: &Window) -> Result<OccupancyGrid> {
    let mut out = global.clone();
    stitch_into(&mut out, local, window)?;
    Ok(out)
}

pub fn stitch_into(global: &mut OccupancyGrid, local: &OccupancyGrid, window: &Window) -> Result<()> {
    if local.dims() != (window.rows, window.cols) {
        return Err(Error::DimensionMismatch { expected: (window.rows, window.cols), found: local.dims() });
    }
    if window.row + window.rows > global.spec.rows || window.col + window.cols > global.spec.cols {
        return Err(Error::InvalidParameter(format!("window {window:?} outside {}x{} grid", global.rows(), global.cols())));
    }
    for r in 0..window.rows {
        let dst = (window.row + r) * global.spec.cols + window.col;
        global.values[dst..dst + window.cols].copy_from_slice(local.row(r));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Floe;

    fn spec(rows: usize, cols: usize) -> GridSpec {
        GridSpec::new(1.0, rows, cols, Vec2::ZERO).unwrap()
    }

    fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> Vec<Vec2> {
        vec![Vec2::new(x0, y0), Vec2::new(x1, y0), Vec2::new(x1, y1), Vec2::new(x0, y1)]
    }

    fn field_of(polys: Vec<Vec<Vec2>>, w: f64, l: f64) -> IceField {
        let floes = polys.into_iter().enumerate().map(|(i, p)| Floe::new(i as u32, p, 900.0, 0.01).unwrap()).collect();
        IceField::new(Channel::new(w, l, l).unwrap(), floes).unwrap()
    }

    #[test]
    fn empty_field_rasterizes_to_zeros() {
        let f = IceField::empty(Channel::new(4.0, 4.0, 4.0).unwrap());
        let g = rasterize(&f, &spec(4, 4));
        assert!(g.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn floe_on_one_cell() {
        let f = field_of(vec![rect(1.0, 2.0, 2.0, 3.0)], 4.0, 4.0);
        let g = rasterize(&f, &spec(4, 4));
        for r in 0..4 {
            for c in 0..4 {
                let want = if (r, c) == (2, 1) { 1.0 } else { 0.0 };
                assert_eq!(g.get(r, c), want, "cell {r},{c}");
            }
        }
    }

    #[test]
    fn half_cell_floe() {
        let f = field_of(vec![rect(1.0, 1.0, 1.5, 2.0)], 4.0, 4.0);
        let g = rasterize(&f, &spec(4, 4));
        assert!((g.get(1, 1) - 0.5).abs() < 1e-6);
        assert!((grid_sum(&g) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn window_raster_matches_global_bitwise() {
        let ch = Channel::new(6.0, 10.0, 9.0).unwrap();
        let f = crate::field::generate_scenario(0.4, ch, 1).unwrap();
        let gs = GridSpec::covering(&ch, 0.25).unwrap();
        let full = rasterize(&f, &gs);
        let w = Window { row: 7, col: 3, rows: 13, cols: 11 };
        assert_eq!(rasterize_window(&f, &gs, &w).values(), crop(&full, &w).values());
    }

    #[test]
    fn crop_of_full_extent_is_identity() {
        let mut g = OccupancyGrid::zeros(spec(5, 6));
        g.set(2, 3, 0.7);
        let (local, w) = crop_at(&g, Vec2::new(2.5, 2.5), Extent { rows: 5, cols: 6 }).unwrap();
        assert_eq!((w.row, w.col), (0, 0));
        assert_eq!(local.values(), g.values());
    }

    #[test]
    fn window_clamps_at_edges() {
        let s = spec(20, 10);
        let w = window_at(&s, Vec2::new(0.2, 19.5), Extent { rows: 8, cols: 4 }).unwrap();
        assert_eq!(w, Window { row: 12, col: 0, rows: 8, cols: 4 });
        let w = window_at(&s, Vec2::new(5.5, 10.5), Extent { rows: 8, cols: 4 }).unwrap();
        assert_eq!(w, Window { row: 8, col: 3, rows: 8, cols: 4 });
        assert!(window_at(&s, Vec2::ZERO, Extent { rows: 21, cols: 4 }).is_err());
    }

    #[test]
    fn stitch_examples() {
        let s = spec(6, 7);
        let zeros = OccupancyGrid::zeros(s);
        let w = Window { row: 1, col: 2, rows: 3, cols: 4 };
        let local0 = OccupancyGrid::zeros(s.sub_spec(&w));
        assert_eq!(stitch(&zeros, &local0, &w).unwrap(), zeros);
        let ones = OccupancyGrid::filled(s.sub_spec(&w), 1.0);
        let out = stitch(&zeros, &ones, &w).unwrap();
        assert_eq!(grid_sum(&out), 12.0);
        assert_eq!(out.values().iter().filter(|&&v| v == 1.0).count(), 12);
        let wrong = OccupancyGrid::zeros(spec(2, 2));
        assert!(matches!(stitch(&zeros, &wrong, &w), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn grid_sum_examples() {
        let mut g = OccupancyGrid::zeros(spec(3, 3));
        assert_eq!(grid_sum(&g), 0.0);
        g.set(1, 1, 1.0);
        assert_eq!(grid_sum(&g), 1.0);
    }

    #[test]
    fn from_values_validates_range() {
        assert!(OccupancyGrid::from_values(spec(1, 2), vec![0.5, 1.5]).is_err());
        let g = OccupancyGrid::from_values_clamped(spec(1, 2), vec![-0.5, 1.5]).unwrap();
        assert_eq!(g.values(), &[0.0, 1.0]);
    }
}
