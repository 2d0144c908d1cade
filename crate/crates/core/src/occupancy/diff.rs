//! Scalar differences between two occupancy grids.

use super::OccupancyGrid;
use crate::error::{Error, Result};

/// Side length of the Gaussian SSIM window.
pub const SSIM_WINDOW: usize = 11;
const SSIM_SIGMA: f64 = 1.5;
const SSIM_C1: f64 = 0.01 * 0.01;
const SSIM_C2: f64 = 0.03 * 0.03;

/// Mean squared per-cell difference. In `[0, 1]` for valid grids.
pub fn diff_mse(a: &OccupancyGrid, b: &OccupancyGrid) -> Result<f64> {
    a.ensure_same_dims(b)?;
    let n = a.values.len() as f64;
    let sse: f64 = a.values.iter().zip(&b.values).map(|(x, y)| (x - y) * (x - y)).sum();
    Ok(sse / n)
}

fn gaussian_kernel() -> [f64; SSIM_WINDOW] {
    let mut k = [0.0; SSIM_WINDOW];
    let half = (SSIM_WINDOW / 2) as f64;
    for (i, w) in k.iter_mut().enumerate() {
        let d = i as f64 - half;
        *w = (-(d * d) / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
    }
    let total: f64 = k.iter().sum();
    k.iter_mut().for_each(|w| *w /= total);
    k
}

/// Valid-mode separable filtering: output is `(rows - 10) x (cols - 10)`.
fn filter(values: &[f64], rows: usize, cols: usize, k: &[f64; SSIM_WINDOW]) -> Vec<f64> {
    let oc = cols - SSIM_WINDOW + 1;
    let or = rows - SSIM_WINDOW + 1;
    let mut horiz = vec![0.0; rows * oc];
    for r in 0..rows {
        let row = &values[r * cols..(r + 1) * cols];
        for c in 0..oc {
            horiz[r * oc + c] = k.iter().zip(&row[c..c + SSIM_WINDOW]).map(|(w, v)| w * v).sum();
        }
    }
    let mut out = vec![0.0; or * oc];
    for r in 0..or {
        for c in 0..oc {
            out[r * oc + c] = (0..SSIM_WINDOW).map(|i| k[i] * horiz[(r + i) * oc + c]).sum();
        }
    }
    out
}

/// Negated mean SSIM with an 11x11 Gaussian window (sigma 1.5) and dynamic
/// range 1. Equals -1 for identical grids.
pub fn diff_neg_ssim(a: &OccupancyGrid, b: &OccupancyGrid) -> Result<f64> {
    a.ensure_same_dims(b)?;
    let (rows, cols) = a.dims();
    if rows < SSIM_WINDOW || cols < SSIM_WINDOW {
        return Err(Error::GridTooSmall { rows, cols, window: SSIM_WINDOW });
    }
    let k = gaussian_kernel();
    let x = &a.values;
    let y = &b.values;
    let xx: Vec<f64> = x.iter().map(|v| v * v).collect();
    let yy: Vec<f64> = y.iter().map(|v| v * v).collect();
    let xy: Vec<f64> = x.iter().zip(y).map(|(p, q)| p * q).collect();
    let mx = filter(x, rows, cols, &k);
    let my = filter(y, rows, cols, &k);
    let sxx = filter(&xx, rows, cols, &k);
    let syy = filter(&yy, rows, cols, &k);
    let sxy = filter(&xy, rows, cols, &k);
    let mut total = 0.0;
    for i in 0..mx.len() {
        let (ux, uy) = (mx[i], my[i]);
        let vx = sxx[i] - ux * ux;
        let vy = syy[i] - uy * uy;
        let cov = sxy[i] - ux * uy;
        let num = (2.0 * ux * uy + SSIM_C1) * (2.0 * cov + SSIM_C2);
        let den = (ux * ux + uy * uy + SSIM_C1) * (vx + vy + SSIM_C2);
        total += num / den;
    }
    Ok(-(total / mx.len() as f64))
}

fn marginals(o: &OccupancyGrid) -> (Vec<f64>, Vec<f64>) {
    let (rows, cols) = o.dims();
    let mut by_row = vec![0.0; rows];
    let mut by_col = vec![0.0; cols];
    for r in 0..rows {
        for (c, v) in o.row(r).iter().enumerate() {
            by_row[r] += v;
            by_col[c] += v;
        }
    }
    (by_row, by_col)
}

/// 1D Wasserstein-1 between two unit-mass histograms with unit bin spacing.
fn w1(p: &[f64], q: &[f64]) -> f64 {
    let (mut cp, mut cq, mut acc) = (0.0, 0.0, 0.0);
    for (a, b) in p.iter().zip(q) {
        cp += a;
        cq += b;
        acc += (cp - cq).abs();
    }
    acc
}

/// Marginal earth-mover distance in metres.
///
/// Both grids are normalised to unit mass; the result is the transport cost of
/// the row marginals plus that of the column marginals. When either grid is
/// empty the difference in total occupancy times the grid diagonal is returned
/// instead.
pub fn diff_emd(a: &OccupancyGrid, b: &OccupancyGrid) -> Result<f64> {
    a.ensure_same_dims(b)?;
    let s = a.spec.cell_size;
    let sa = super::grid_sum(a);
    let sb = super::grid_sum(b);
    if sa == 0.0 || sb == 0.0 {
        let diag = s * ((a.rows() * a.rows() + a.cols() * a.cols()) as f64).sqrt();
        return Ok((sa - sb).abs() * diag);
    }
    let (ra, ca) = marginals(a);
    let (rb, cb) = marginals(b);
    let norm = |v: Vec<f64>, t: f64| v.into_iter().map(|x| x / t).collect::<Vec<_>>();
    let (ra, ca, rb, cb) = (norm(ra, sa), norm(ca, sa), norm(rb, sb), norm(cb, sb));
    Ok(s * (w1(&ra, &rb) + w1(&ca, &cb)))
}
