use std::sync::Arc;

use crate::error::{Error, Result};
use crate::occupancy::{GridSpec, OccupancyGrid, Window};

const TILE: usize = 16;

/// Global occupancy split into shared square tiles. Cloning shares every
/// tile; writing copies only tiles whose values actually change.
#[derive(Debug, Clone)]
pub struct TiledGrid {
    spec: GridSpec,
    tiles_c: usize,
    tiles: Vec<Arc<Vec<f64>>>,
}

impl TiledGrid {
    pub fn from_grid(grid: &OccupancyGrid) -> Self {
        let spec = *grid.spec();
        let tiles_r = spec.rows.div_ceil(TILE);
        let tiles_c = spec.cols.div_ceil(TILE);
        let mut tiles = Vec::with_capacity(tiles_r * tiles_c);
        for tr in 0..tiles_r {
            for tc in 0..tiles_c {
                let mut t = vec![0.0; TILE * TILE];
                for r in tr * TILE..((tr + 1) * TILE).min(spec.rows) {
                    for c in tc * TILE..((tc + 1) * TILE).min(spec.cols) {
                        t[(r % TILE) * TILE + c % TILE] = grid.get(r, c);
                    }
                }
                tiles.push(Arc::new(t));
            }
        }
        Self { spec, tiles_c, tiles }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    fn tile_index(&self, r: usize, c: usize) -> (usize, usize) {
        ((r / TILE) * self.tiles_c + c / TILE, (r % TILE) * TILE + c % TILE)
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let (t, i) = self.tile_index(r, c);
        self.tiles[t][i]
    }

    pub fn crop(&self, window: &Window) -> OccupancyGrid {
        let mut values = Vec::with_capacity(window.rows * window.cols);
        for r in window.row..window.row + window.rows {
            for c in window.col..window.col + window.cols {
                values.push(self.get(r, c));
            }
        }
        OccupancyGrid::from_values(self.spec.sub_spec(window), values).expect("tiles hold valid ratios")
    }

    pub fn stitch(&mut self, local: &OccupancyGrid, window: &Window) -> Result<()> {
        if local.dims() != (window.rows, window.cols) {
            return Err(Error::DimensionMismatch { expected: (window.rows, window.cols), found: local.dims() });
        }
        if window.row + window.rows > self.spec.rows || window.col + window.cols > self.spec.cols {
            return Err(Error::InvalidParameter(format!("window {window:?} outside grid")));
        }
        for lr in 0..window.rows {
            let row = local.row(lr);
            for (lc, &v) in row.iter().enumerate() {
                let (t, i) = self.tile_index(window.row + lr, window.col + lc);
                if self.tiles[t][i] != v {
                    Arc::make_mut(&mut self.tiles[t])[i] = v;
                }
            }
        }
        Ok(())
    }

    pub fn to_grid(&self) -> OccupancyGrid {
        self.crop(&self.spec.full_window())
    }
}
