//! Crate-wide error type. Every fallible operation in the library returns
//! [`Result`]; IO and JSON failures are wrapped so callers see one enum.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate panel: {0}")]
    DegeneratePanel(String),

    #[error("zero-length vector cannot be normalised")]
    ZeroVector,

    #[error("{context}: {value} is outside the coefficient table domain [{min}, {max}] degrees")]
    AngleOutOfTable {
        context: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },

    #[error("malformed coefficient table: {0}")]
    BadCoefficientTable(String),

    #[error(
        "specular geometry: reflection and incidence angles coincide, no phase gradient needed"
    )]
    SpecularDesign,

    #[error("evanescent diffraction order: |sin(theta)| = {sin_theta} exceeds 1")]
    Evanescent { sin_theta: f64 },

    #[error("carrier frequency must be positive, got {0} Hz")]
    InvalidFrequency(f64),

    #[error("distance must be positive, got {0} m")]
    InvalidDistance(f64),

    #[error("transmitter and receiver coincide")]
    CoincidentEndpoints,

    #[error("tile {tile}: expected mode {expected}, found {found}")]
    WrongTileMode {
        tile: String,
        expected: &'static str,
        found: &'static str,
    },

    #[error("path must contain at least one bounce")]
    EmptyPath,

    #[error("baseline received power is 0.0 dBmW; relative gain is undefined")]
    ZeroBaselinePower,

    #[error("scene validation: {0}")]
    SceneValidation(String),

    #[error("wall {wall}: {detail}")]
    Tessellation { wall: String, detail: String },

    #[error("tiles {a} and {b} overlap")]
    TileOverlap { a: String, b: String },

    #[error("unknown tile id {0}")]
    UnknownTileId(String),

    #[error("duplicate id {0}")]
    DuplicateId(String),

    #[error("scene file is missing the mandatory `units` block")]
    MissingUnits,

    #[error("unsupported units: {0} (expected lengths in m, frequency in GHz, power in dBmW)")]
    UnsupportedUnits(String),

    #[error("tile count mismatch: expected {expected}, generated {actual}")]
    TileCount { expected: usize, actual: usize },

    #[error("no unoccluded relay chain exists for receiver {rx_index}")]
    NoFeasibleChain { rx_index: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("scene JSON: {0}")]
    Json(#[from] serde_json::Error),
}
