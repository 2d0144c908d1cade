use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid polygon: {0}")]
    InvalidPolygon(String),

    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    #[error("floe {id} lies outside the channel")]
    FloeOutsideChannel { id: u32 },

    #[error("floes {a} and {b} overlap by {area:e} m^2")]
    FloeOverlap { a: u32, b: u32, area: f64 },

    #[error("cannot reach concentration {concentration}: floe {placed} still unplaced after {rejections} rejections")]
    ConcentrationInfeasible { concentration: f64, placed: usize, rejections: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("grid dimensions differ: expected {expected:?}, found {found:?}")]
    DimensionMismatch { expected: (usize, usize), found: (usize, usize) },

    #[error("grid {rows}x{cols} is smaller than the {window}x{window} comparison window")]
    GridTooSmall { rows: usize, cols: usize, window: usize },

    #[error("no control set for spacing {spacing} m, {headings} headings, turn radius {turn_radius} m: {detail}")]
    ControlSetInfeasible { spacing: f64, headings: usize, turn_radius: f64, detail: String },

    #[error("primitive at position {index} starts at heading {found} but the path is at heading {expected}")]
    BrokenChain { index: usize, expected: u16, found: u16 },

    #[error("swath of primitive {primitive} leaves the {rows}x{cols} prediction window")]
    WindowTooSmall { primitive: usize, rows: usize, cols: usize },

    #[error("predictor input does not match the field (max cell error {max_error:e})")]
    InconsistentInput { max_error: f64 },

    #[error("open list exhausted after {expanded} expansions without reaching the goal line")]
    NoPath { expanded: usize },

    #[error("instance needs more than {limit} search nodes")]
    InstanceTooLarge { limit: usize },

    #[error("malformed data: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
