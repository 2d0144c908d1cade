//! Training data from a random navigation policy.
//!
//! File layout, all little-endian:
//!
//! ```text
//! header:  magic "ICEDS001" | rows: u32 | cols: u32 | cell_size: f64
//! entry:   occupancy: rows*cols u16 | footprint bits | swath bits | target: rows*cols u16
//! ```
//!
//! Grids are row-major from row 0, each value `round(ratio * 65535)`. Bit
//! layers are packed least-significant bit first, `ceil(rows*cols / 8)` bytes.

use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{masks_for, Mask, PredictionInput};
use crate::context::NavContext;
use crate::dynamics::{step_in_place, StepMetrics};
use crate::error::{Error, Result};
use crate::field::{generate_scenario_with, IceField, ScenarioParams};
use crate::geometry::{Aabb, Vec2};
use crate::lattice::{MotionPrimitive, Pose};
use crate::occupancy::{rasterize_window, window_at, GridSpec, OccupancyGrid, Window};

pub const DATASET_MAGIC: &[u8; 8] = b"ICEDS001";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DatasetHeader {
    pub rows: usize,
    pub cols: usize,
    pub cell_size: f64,
}

/// One training tuple. Entries read back from a file carry a window anchored
/// at the origin since positions are not stored.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetEntry {
    pub input: PredictionInput,
    pub target: OccupancyGrid,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WalkParams {
    pub concentration: f64,
    pub seed: u64,
    pub steps: usize,
}

/// One executed primitive of a random walk.
#[derive(Debug)]
pub struct WalkStep<'a> {
    pub index: usize,
    pub episode: u64,
    pub pose: Pose,
    pub primitive: &'a MotionPrimitive,
    pub input: PredictionInput,
    pub target: OccupancyGrid,
    pub metrics: StepMetrics,
}

fn episode_seed(seed: u64, episode: u64) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(episode.wrapping_mul(0xD1B5_4A32_D192_ED03)) ^ seed
}

/// Ice field for one episode, kept clear around the start pose.
pub fn episode_field(ctx: &NavContext, concentration: f64, seed: u64, episode: u64) -> Result<IceField> {
    let mut params = ScenarioParams::new(concentration);
    params.keep_out = Some(start_clearance(ctx));
    generate_scenario_with(&params, ctx.channel, episode_seed(seed, episode))
}

/// Region around the start pose kept free of ice.
pub fn start_clearance(ctx: &NavContext) -> Aabb {
    let p = ctx.position(&ctx.start_pose());
    let r = ctx.ship.radius() + ctx.control_set.spacing();
    Aabb { min: p - Vec2::new(r, r), max: p + Vec2::new(r, r) }
}

/// Drives the ship with uniformly random primitives for `params.steps` steps,
/// starting a fresh episode (new field, ship back at the start) whenever the
/// goal line is crossed or no primitive is applicable.
pub fn random_walk<F>(ctx: &NavContext, params: &WalkParams, mut visit: F) -> Result<usize>
where
    F: FnMut(WalkStep<'_>) -> Result<()>,
{
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut episode = 0u64;
    let mut field = episode_field(ctx, params.concentration, params.seed, episode)?;
    let mut pose = ctx.start_pose();
    let mut index = 0;
    while index < params.steps {
        let options = ctx.successors(&pose);
        if options.is_empty() {
            episode += 1;
            field = episode_field(ctx, params.concentration, params.seed, episode)?;
            pose = ctx.start_pose();
            continue;
        }
        let (primitive, next) = options[rng.random_range(0..options.len())];
        let window = window_at(&ctx.spec, ctx.position(&pose), ctx.extent)?;
        let (footprint, swath) = masks_for(ctx, &window, &pose, primitive)?;
        let occupancy = rasterize_window(&field, &ctx.spec, &window);
        let metrics = step_in_place(&mut field, &pose, primitive, ctx);
        let target = rasterize_window(&field, &ctx.spec, &window);
        visit(WalkStep {
            index,
            episode,
            pose,
            primitive,
            input: PredictionInput { occupancy, footprint, swath, window },
            target,
            metrics,
        })?;
        index += 1;
        pose = next;
        if ctx.goal_reached(&pose, ctx.channel.goal_y) {
            episode += 1;
            field = episode_field(ctx, params.concentration, params.seed, episode)?;
            pose = ctx.start_pose();
        }
    }
    Ok(index)
}

fn put_grid(out: &mut Vec<u8>, g: &OccupancyGrid) {
    for &v in g.values() {
        out.extend_from_slice(&((v * 65535.0).round() as u16).to_le_bytes());
    }
}

fn put_mask(out: &mut Vec<u8>, m: &Mask) {
    for chunk in m.bits().chunks(8) {
        let byte = chunk.iter().enumerate().fold(0u8, |acc, (i, &b)| acc | ((b as u8) << i));
        out.push(byte);
    }
}

/// Streams `n_entries` random-walk tuples to `sink`; returns the count written.
pub fn collect_dataset<W: Write>(ctx: &NavContext, concentration: f64, n_entries: usize, seed: u64, mut sink: W) -> Result<usize> {
    if n_entries == 0 {
        return Err(Error::InvalidParameter("n_entries must be at least 1".into()));
    }
    let mut header = Vec::with_capacity(24);
    header.extend_from_slice(DATASET_MAGIC);
    header.extend_from_slice(&(ctx.extent.rows as u32).to_le_bytes());
    header.extend_from_slice(&(ctx.extent.cols as u32).to_le_bytes());
    header.extend_from_slice(&ctx.spec.cell_size.to_le_bytes());
    sink.write_all(&header)?;
    let mut buf = Vec::new();
    let params = WalkParams { concentration, seed, steps: n_entries };
    let n = random_walk(ctx, &params, |step| {
        buf.clear();
        put_grid(&mut buf, &step.input.occupancy);
        put_mask(&mut buf, &step.input.footprint);
        put_mask(&mut buf, &step.input.swath);
        put_grid(&mut buf, &step.target);
        sink.write_all(&buf)?;
        Ok(())
    })?;
    sink.flush()?;
    Ok(n)
}

fn take<R: Read>(r: &mut R, n: usize) -> Result<Option<Vec<u8>>> {
    let mut buf = vec![0u8; n];
    let mut filled = 0;
    while filled < n {
        let k = r.read(&mut buf[filled..])?;
        if k == 0 {
            return if filled == 0 { Ok(None) } else { Err(Error::Format("truncated dataset entry".into())) };
        }
        filled += k;
    }
    Ok(Some(buf))
}

/// Reads a whole dataset file.
pub fn read_dataset<R: Read>(mut input: R) -> Result<(DatasetHeader, Vec<DatasetEntry>)> {
    let head = take(&mut input, 24)?.ok_or_else(|| Error::Format("empty dataset".into()))?;
    if &head[..8] != DATASET_MAGIC {
        return Err(Error::Format("bad dataset magic".into()));
    }
    let rows = u32::from_le_bytes(head[8..12].try_into().expect("4 bytes")) as usize;
    let cols = u32::from_le_bytes(head[12..16].try_into().expect("4 bytes")) as usize;
    let cell_size = f64::from_le_bytes(head[16..24].try_into().expect("8 bytes"));
    let header = DatasetHeader { rows, cols, cell_size };
    let spec = GridSpec::new(cell_size, rows, cols, Vec2::ZERO)?;
    let window = Window { row: 0, col: 0, rows, cols };
    let n = rows * cols;
    let mask_bytes = n.div_ceil(8);
    let grid = |bytes: &[u8]| {
        let values = bytes.chunks_exact(2).map(|p| u16::from_le_bytes([p[0], p[1]]) as f64 / 65535.0).collect();
        OccupancyGrid::from_values(spec, values)
    };
    let mask = |bytes: &[u8]| {
        let mut m = Mask::empty(rows, cols);
        for i in 0..n {
            m.set(i / cols, i % cols, bytes[i / 8] >> (i % 8) & 1 == 1);
        }
        m
    };
    let mut entries = Vec::new();
    while let Some(rec) = take(&mut input, 4 * n + 2 * mask_bytes)? {
        let (occ, rest) = rec.split_at(2 * n);
        let (fp, rest) = rest.split_at(mask_bytes);
        let (sw, tgt) = rest.split_at(mask_bytes);
        entries.push(DatasetEntry {
            input: PredictionInput { occupancy: grid(occ)?, footprint: mask(fp), swath: mask(sw), window },
            target: grid(tgt)?,
        });
    }
    Ok((header, entries))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Channel;

    fn ctx() -> NavContext {
        NavContext::with_defaults(Channel::new(8.0, 24.0, 20.0).unwrap()).unwrap()
    }

    #[test]
    fn same_seed_same_bytes() {
        let ctx = ctx();
        let mut a = Vec::new();
        let mut b = Vec::new();
        assert_eq!(collect_dataset(&ctx, 0.3, 12, 5, &mut a).unwrap(), 12);
        collect_dataset(&ctx, 0.3, 12, 5, &mut b).unwrap();
        assert_eq!(a, b);
        let (h, entries) = read_dataset(&a[..]).unwrap();
        assert_eq!((h.rows, h.cols), (ctx.extent.rows, ctx.extent.cols));
        assert_eq!(entries.len(), 12);
        for e in &entries {
            assert!(e.input.footprint.is_subset(&e.input.swath));
            assert!(e.input.footprint.count() > 0);
        }
    }

    #[test]
    fn zero_entries_rejected() {
        assert!(collect_dataset(&ctx(), 0.3, 0, 1, Vec::new()).is_err());
    }

    #[test]
    fn walk_resets_at_goal() {
        let ctx = ctx();
        let mut episodes = 0;
        random_walk(&ctx, &WalkParams { concentration: 0.0, seed: 2, steps: 200 }, |s| {
            episodes = episodes.max(s.episode);
            assert!(ctx.y(&s.pose) < ctx.channel.goal_y);
            Ok(())
        })
        .unwrap();
        assert!(episodes >= 1);
    }

    #[test]
    fn truncated_file_is_an_error() {
        let ctx = ctx();
        let mut a = Vec::new();
        collect_dataset(&ctx, 0.2, 2, 9, &mut a).unwrap();
        a.pop();
        assert!(matches!(read_dataset(&a[..]), Err(Error::Format(_))));
    }
}
