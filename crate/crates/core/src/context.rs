use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::Channel;
use crate::geometry::Vec2;
use crate::lattice::{ControlSet, ControlSetParams, MotionPrimitive, Pose, ShipShape};
use crate::occupancy::{Extent, GridSpec, SSIM_WINDOW, WINDOW_BEHIND_FRACTION};

/// Nominal ship speed in m/s used to turn displacements into rates.
pub const DEFAULT_SPEED: f64 = 0.5;

/// Everything fixed for a navigation problem: channel, ship, lattice, grid
/// and prediction window. Shared read-only by planners, predictors and the
/// simulator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NavContext {
    pub channel: Channel,
    pub ship: ShipShape,
    pub control_set: ControlSet,
    pub spec: GridSpec,
    pub extent: Extent,
    pub speed: f64,
}

/// Settings from which a [`NavContext`] is built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ContextParams {
    pub ship_length: f64,
    pub ship_beam: f64,
    pub spacing: f64,
    pub headings: usize,
    pub turn_radius: f64,
    /// Defaults to a quarter of the beam.
    pub cell_size: Option<f64>,
    /// Defaults to the sizing rule in [`default_extent`].
    pub window: Option<Extent>,
    pub speed: f64,
}

impl Default for ContextParams {
    fn default() -> Self {
        Self {
            ship_length: 2.0,
            ship_beam: 0.5,
            spacing: 0.5,
            headings: 16,
            turn_radius: 2.0,
            cell_size: None,
            window: None,
            speed: DEFAULT_SPEED,
        }
    }
}

/// Window covering twice the longest primitive ahead of the ship plus the
/// stern behind it, and a ship length of margin either side of the widest
/// lateral reach.
pub fn default_extent(control_set: &ControlSet, ship: &ShipShape, cell_size: f64) -> Extent {
    let reach = ship.radius();
    let ahead_m = 2.0 * control_set.max_length() + reach;
    let ahead = (ahead_m / cell_size).ceil() + 1.0;
    let behind = (reach / cell_size).ceil() + 1.0;
    let rows = (ahead / (1.0 - WINDOW_BEHIND_FRACTION)).max(behind / WINDOW_BEHIND_FRACTION).ceil() as usize;
    let lateral = control_set
        .primitives()
        .iter()
        .flat_map(|p| p.samples.iter().map(|s| s.x.abs()))
        .fold(0.0, f64::max);
    let half = ((lateral + reach + ship.length()) / cell_size).ceil() as usize;
    Extent { rows: rows.max(SSIM_WINDOW), cols: (2 * half + 1).max(SSIM_WINDOW) }
}

impl NavContext {
    pub fn new(channel: Channel, params: &ContextParams) -> Result<Self> {
        channel.validate()?;
        if !(params.speed > 0.0) {
            return Err(Error::InvalidParameter(format!("speed {}", params.speed)));
        }
        let ship = ShipShape::hull(params.ship_length, params.ship_beam)?;
        let cell = params.cell_size.unwrap_or(params.ship_beam / 4.0);
        let mut cs_params = ControlSetParams::new(params.spacing, params.headings, params.turn_radius);
        cs_params.sample_step = cell / 2.0;
        let control_set = ControlSet::generate(cs_params)?;
        let spec = GridSpec::covering(&channel, cell)?;
        let wanted = params.window.unwrap_or_else(|| default_extent(&control_set, &ship, cell));
        let extent = Extent { rows: wanted.rows.min(spec.rows), cols: wanted.cols.min(spec.cols) };
        Ok(Self { channel, ship, control_set, spec, extent, speed: params.speed })
    }

    pub fn with_defaults(channel: Channel) -> Result<Self> {
        Self::new(channel, &ContextParams::default())
    }

    /// Laterally centred start with the stern clear of the channel end.
    pub fn start_pose(&self) -> Pose {
        let s = self.control_set.spacing();
        let ix = (self.channel.width / 2.0 / s).round() as i32;
        let iy = ((self.ship.radius() + 0.5 * s) / s).ceil() as i32;
        Pose::new(ix, iy, self.control_set.forward_heading())
    }

    pub fn position(&self, pose: &Pose) -> Vec2 {
        self.control_set.position(pose)
    }

    pub fn y(&self, pose: &Pose) -> f64 {
        pose.iy as f64 * self.control_set.spacing()
    }

    pub fn goal_reached(&self, pose: &Pose, y_goal: f64) -> bool {
        self.y(pose) >= y_goal
    }

    /// Whether the ship stays between the channel walls and short of the far
    /// end at every sampled pose of `primitive` from `pose`.
    pub fn primitive_in_channel(&self, pose: &Pose, primitive: &MotionPrimitive) -> bool {
        let base = self.position(pose);
        let mut outline = Vec::with_capacity(self.ship.vertices().len());
        primitive.samples.iter().all(|s| {
            self.ship.posed_into(base + Vec2::new(s.x, s.y), s.yaw, &mut outline);
            outline.iter().all(|p| p.x >= 0.0 && p.x <= self.channel.width && p.y <= self.channel.length)
        })
    }

    /// Primitives applicable at `pose`, paired with the resulting pose, in id order.
    pub fn successors(&self, pose: &Pose) -> Vec<(&MotionPrimitive, Pose)> {
        self.control_set
            .from_heading(pose.heading)
            .filter(|p| self.primitive_in_channel(pose, p))
            .map(|p| (p, self.control_set.apply(pose, p)))
            .collect()
    }

    /// Lower bound on remaining path length from `pose` to the goal line.
    pub fn heuristic(&self, pose: &Pose, y_goal: f64) -> f64 {
        (y_goal - self.y(pose)).max(0.0) * (1.0 - 1e-12)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_context_dimensions() {
        let ctx = NavContext::with_defaults(Channel::default()).unwrap();
        assert_eq!(ctx.spec.cell_size, 0.125);
        assert_eq!(ctx.spec.dims(), (608, 96));
        assert!(ctx.extent.rows >= SSIM_WINDOW && ctx.extent.rows <= 608);
        assert!(ctx.extent.cols <= 96);
        let start = ctx.start_pose();
        assert_eq!(start.heading, 4);
        assert_eq!(ctx.successors(&start).len(), 3);
    }

    #[test]
    fn walls_prune_successors() {
        let ctx = NavContext::with_defaults(Channel::new(3.0, 20.0, 15.0).unwrap()).unwrap();
        let near_wall = Pose::new(1, 4, 4);
        assert!(ctx.successors(&near_wall).iter().all(|(p, _)| p.kind != crate::lattice::PrimitiveKind::Left));
        assert_eq!(ctx.successors(&near_wall).len(), 2);
        assert!(ctx.successors(&Pose::new(0, 4, 4)).is_empty());
    }
}
