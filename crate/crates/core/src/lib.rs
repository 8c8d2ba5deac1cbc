//! Deterministic channel model for indoor millimeter-wave links in rooms whose
//! walls carry software-controlled metasurface (HSF) tiles.
//!
//! The crate is organised around one pipeline:
//!
//! * [`geom`] — vectors, rectangular panels, mirror images, specular path
//!   construction and occlusion tests.
//! * [`materials`] — frequency-dependent complex permittivity and Fresnel
//!   reflection for plain building surfaces.
//! * [`hsf`] — measured tile coefficient tables (absorption and anomalous
//!   reflection), tile configuration, and the phase-gradient supercell
//!   designer.
//! * [`scenario`] — scene model (walls, tiles, terminals), the built-in
//!   reference scene, JSON round-trip, and relay tile selection.
//! * [`channel`] — multipath component assembly and received-power
//!   aggregation for HSF-coated rooms.
//! * [`raytracer`] — image-method baseline for the same room with every
//!   surface treated as plain concrete.
//!
//! All internal angles are radians and all lengths are metres; degrees appear
//! only at IO boundaries (tables, JSON, CLI).

pub mod channel;
pub mod error;
pub mod geom;
pub mod hsf;
pub mod materials;
pub mod raytracer;
pub mod scenario;

pub use error::{Error, Result};

/// Speed of light in vacuum (m/s), the only physical constant the model needs.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
