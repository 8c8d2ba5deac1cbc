//! Channel assembly: multipath components with complex gains, received
//! power, and delay profiles.
//!
//! A channel response is a sum of discrete arrivals. In metasurface mode
//! the arrivals are the line-of-sight ray, steered-tile relay paths (tile
//! centres act as the bounce points of the plane-wave tile abstraction),
//! and residual specular leakage off absorb-mode tiles. In baseline mode
//! the arrivals are the image-method specular reflections off plain walls.
//!
//! Amplitude model: free-space spreading `c / (4 pi f_c d)` over the
//! applicable distance, times per-bounce coefficients; phase is the carrier
//! propagation term `exp(-j 2 pi f_c tau)`. Collimating tiles stop the
//! spreading distance at the first collimating bounce of a chain; delays
//! always use the true geometric length.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geom::{is_occluded, GeometricPath, RectPanel, Vec3};
use crate::hsf::{AngleLookup, CoeffTable, TileMode};
use crate::materials::Polarization;
use crate::raytracer::{self, TraceBudget};
use crate::scenario::{Scene, Tile};
use crate::SPEED_OF_LIGHT;

/// Multipath arrival classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ComponentKind {
    Los,
    HsfReflected,
    HsfLeakage,
    PlainReflected,
}

impl ComponentKind {
    pub fn label(self) -> &'static str {
        match self {
            ComponentKind::Los => "los",
            ComponentKind::HsfReflected => "hsf_reflected",
            ComponentKind::HsfLeakage => "hsf_leakage",
            ComponentKind::PlainReflected => "plain_reflected",
        }
    }

    fn rank(self) -> u8 {
        match self {
            ComponentKind::Los => 0,
            ComponentKind::HsfReflected => 1,
            ComponentKind::HsfLeakage => 2,
            ComponentKind::PlainReflected => 3,
        }
    }
}

/// One multipath arrival.
#[derive(Debug, Clone, PartialEq)]
pub struct PathComponent {
    pub kind: ComponentKind,
    /// Complex amplitude including the carrier phase term; `|gain| <= 1`.
    pub gain: Complex64,
    /// Propagation delay, seconds.
    pub delay: f64,
    /// Arrival elevation at the receiver, radians above the xy-plane.
    pub aoa_elevation: f64,
    /// Arrival azimuth at the receiver, radians from +x toward +y.
    pub aoa_azimuth: f64,
    pub bounce_count: usize,
    /// Tile or wall ids along the path, transmitter first.
    pub via_ids: Vec<String>,
}

impl PathComponent {
    pub fn gain_db(&self) -> f64 {
        20.0 * self.gain.norm().log10()
    }
}

/// A full channel response for one link.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelResponse {
    pub f_c: f64,
    pub tx_id: String,
    pub rx_id: String,
    /// Sorted by delay, then kind, then via ids; no duplicate
    /// (kind, via ids) entries.
    pub components: Vec<PathComponent>,
}

impl ChannelResponse {
    /// Render as CSV, one row per component, deterministic.
    pub fn to_csv(&self) -> String {
        use std::fmt::Write;
        let mut s = String::from(
            "path_id,kind,delay_ns,gain_db,phase_rad,aoa_el_deg,aoa_az_deg,bounce_count,via_ids\n",
        );
        for (i, c) in self.components.iter().enumerate() {
            let _ = writeln!(
                s,
                "{},{},{:.6},{:.6},{:.9},{:.6},{:.6},{},{}",
                i,
                c.kind.label(),
                c.delay * 1e9,
                c.gain_db(),
                c.gain.arg(),
                c.aoa_elevation.to_degrees(),
                c.aoa_azimuth.to_degrees(),
                c.bounce_count,
                c.via_ids.join(";")
            );
        }
        s
    }
}

/// How component powers combine into a received power.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Aggregation {
    /// Phasor sum: `p_tx + 20 log10 |sum of gains|`.
    Coherent,
    /// Power sum: `p_tx + 10 log10 (sum of |gain|^2)`. The default for
    /// scalar table reproduction.
    Noncoherent,
}

/// What the simulator models.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimMode {
    /// Metasurface walls active: steered relays plus absorption leakage.
    Hsf,
    /// Uncoated room: image-method specular paths with Fresnel losses.
    PlainBaseline,
}

/// Assembly configuration.
#[derive(Debug, Clone)]
pub struct SimOptions {
    pub mode: SimMode,
    /// Out-of-table angle policy for coefficient lookups.
    pub lookup: AngleLookup,
    /// A steered beam reaches a target when the target direction is within
    /// this angle of the configured departure direction, radians.
    pub beam_tolerance: f64,
    /// When true, spreading loss keeps accruing beyond the first
    /// collimating tile (the physically conservative variant).
    pub spreading_after_collimation: bool,
    /// Force reflect-tile coefficients to 0 dB (lossless steering).
    pub ideal_reflection: bool,
    /// Treat absorb tiles as perfect sinks: leakage components omitted.
    pub ideal_absorption: bool,
    /// Polarization for plain-wall Fresnel reflection.
    pub polarization: Polarization,
    /// Baseline ray-tracing budget.
    pub budget: TraceBudget,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            mode: SimMode::Hsf,
            lookup: AngleLookup::Clamp,
            beam_tolerance: 2f64.to_radians(),
            spreading_after_collimation: false,
            ideal_reflection: false,
            ideal_absorption: false,
            polarization: Polarization::Unpolarized,
            budget: TraceBudget::default(),
        }
    }
}

/// Free-space spreading amplitude `c / (4 pi f_c d)`.
pub fn spreading_gain(f_c: f64, d_total: f64) -> Result<f64> {
    if f_c <= 0.0 || f_c.is_nan() {
        return Err(Error::InvalidFrequency(f_c));
    }
    if d_total <= 0.0 || d_total.is_nan() {
        return Err(Error::InvalidDistance(d_total));
    }
    Ok(SPEED_OF_LIGHT / (4.0 * std::f64::consts::PI * f_c * d_total))
}

/// Propagation delay of a path of length `d_total` metres.
pub fn path_delay(d_total: f64) -> Result<f64> {
    if d_total < 0.0 || !d_total.is_finite() {
        return Err(Error::InvalidDistance(d_total));
    }
    Ok(d_total / SPEED_OF_LIGHT)
}

fn carrier(amplitude: f64, f_c: f64, delay: f64) -> Complex64 {
    Complex64::from_polar(amplitude, -std::f64::consts::TAU * f_c * delay)
}

/// Arrival angles at the receiver: unit vector from the receiver toward the
/// last path vertex before it.
fn arrival_angles(vertices: &[Vec3]) -> Result<(f64, f64)> {
    let n = vertices.len();
    let u = (vertices[n - 2] - vertices[n - 1]).normalized()?;
    Ok((u.z.clamp(-1.0, 1.0).asin(), u.y.atan2(u.x)))
}

/// Direct-path component, or `None` when a blocker occludes the segment.
pub fn los_component(
    tx: Vec3,
    rx: Vec3,
    f_c: f64,
    blockers: &[&RectPanel],
) -> Result<Option<PathComponent>> {
    let d = tx.dist(rx);
    if d < 1e-12 {
        return Err(Error::CoincidentEndpoints);
    }
    if is_occluded(tx, rx, blockers) {
        return Ok(None);
    }
    let delay = path_delay(d)?;
    let (el, az) = arrival_angles(&[tx, rx])?;
    Ok(Some(PathComponent {
        kind: ComponentKind::Los,
        gain: carrier(spreading_gain(f_c, d)?, f_c, delay),
        delay,
        aoa_elevation: el,
        aoa_azimuth: az,
        bounce_count: 0,
        via_ids: Vec::new(),
    }))
}

fn mode_name(mode: TileMode) -> &'static str {
    match mode {
        TileMode::Reflect { .. } => "reflect",
        TileMode::Absorb => "absorb",
        TileMode::Inert => "inert",
    }
}

/// Component for a steered relay chain bouncing off `tiles` in order.
/// `path` holds the chain vertices `[tx, tile centres.., rx]`.
///
/// Per-bounce coefficients come from the reflection table at the geometric
/// incidence/departure angles. Spreading accrues up to the first
/// collimating tile (or the whole path when none collimates or the
/// `spreading_after_collimation` option is set); the delay always covers
/// the whole path.
pub fn hsf_reflect_component(
    path: &GeometricPath,
    tiles: &[&Tile],
    table: &CoeffTable,
    f_c: f64,
    opts: &SimOptions,
) -> Result<PathComponent> {
    if tiles.is_empty() {
        return Err(Error::EmptyPath);
    }
    assert_eq!(
        path.vertices.len(),
        tiles.len() + 2,
        "one tile per path bounce"
    );
    let mut coeff_db = 0.0;
    for (k, tile) in tiles.iter().enumerate() {
        if !matches!(tile.config.mode, TileMode::Reflect { .. }) {
            return Err(Error::WrongTileMode {
                tile: tile.id.clone(),
                expected: "reflect",
                found: mode_name(tile.config.mode),
            });
        }
        if !opts.ideal_reflection {
            let n = tile.normal();
            let d_in = (path.vertices[k + 1] - path.vertices[k]).normalized()?;
            let d_out = (path.vertices[k + 2] - path.vertices[k + 1]).normalized()?;
            let theta_i = d_in.dot(n).abs().min(1.0).acos();
            let theta_r = d_out.dot(n).abs().min(1.0).acos();
            coeff_db += table.reflection_db(theta_i, theta_r, opts.lookup)?;
        }
    }
    let d_spread = if opts.spreading_after_collimation {
        path.total_length
    } else {
        match tiles.iter().position(|t| t.config.collimate) {
            Some(k) => path.segment_lengths[..=k].iter().sum(),
            None => path.total_length,
        }
    };
    let amplitude = spreading_gain(f_c, d_spread)? * 10f64.powf(coeff_db / 20.0);
    let delay = path_delay(path.total_length)?;
    let (el, az) = arrival_angles(&path.vertices)?;
    Ok(PathComponent {
        kind: ComponentKind::HsfReflected,
        gain: carrier(amplitude, f_c, delay),
        delay,
        aoa_elevation: el,
        aoa_azimuth: az,
        bounce_count: tiles.len(),
        via_ids: tiles.iter().map(|t| t.id.clone()).collect(),
    })
}

/// Residual specular leakage off one absorb-mode tile. `path` is the
/// single-bounce specular path over the tile.
pub fn hsf_leakage_component(
    path: &GeometricPath,
    tile: &Tile,
    table: &CoeffTable,
    f_c: f64,
    lookup: AngleLookup,
) -> Result<PathComponent> {
    if tile.config.mode != TileMode::Absorb {
        return Err(Error::WrongTileMode {
            tile: tile.id.clone(),
            expected: "absorb",
            found: mode_name(tile.config.mode),
        });
    }
    assert_eq!(path.vertices.len(), 3, "leakage paths bounce exactly once");
    let coeff_db = table.absorption_db(path.incidence_angles[0], lookup)?;
    let amplitude = spreading_gain(f_c, path.total_length)? * 10f64.powf(coeff_db / 20.0);
    let delay = path_delay(path.total_length)?;
    let (el, az) = arrival_angles(&path.vertices)?;
    Ok(PathComponent {
        kind: ComponentKind::HsfLeakage,
        gain: carrier(amplitude, f_c, delay),
        delay,
        aoa_elevation: el,
        aoa_azimuth: az,
        bounce_count: 1,
        via_ids: vec![tile.id.clone()],
    })
}

/// Angle between two directions, radians.
fn angle_between(a: Vec3, b: Vec3) -> f64 {
    a.dot(b).clamp(-1.0, 1.0).acos()
}

/// Front-side tests for a bounce at `point` on a panel with normal `n`:
/// the previous vertex must lie in front, the next vertex must be departed
/// toward the front.
fn bounce_is_front_side(prev: Vec3, point: Vec3, next: Vec3, n: Vec3) -> bool {
    let incoming = point - prev;
    let outgoing = next - point;
    incoming.dot(n) < -1e-12 * incoming.norm() && outgoing.dot(n) > 1e-12 * outgoing.norm()
}

/// Steered single-tile relay geometry, if the configured beam serves it.
fn steered_single(
    tx: Vec3,
    rx: Vec3,
    tile: &Tile,
    blockers: &[&RectPanel],
    opts: &SimOptions,
) -> Option<GeometricPath> {
    let c = tile.center();
    let n = tile.normal();
    if !bounce_is_front_side(tx, c, rx, n) {
        return None;
    }
    let steer = tile.steer_direction()?;
    let toward_rx = (rx - c).normalized().ok()?;
    if angle_between(steer, toward_rx) > opts.beam_tolerance {
        return None;
    }
    if is_occluded(tx, c, blockers) || is_occluded(c, rx, blockers) {
        return None;
    }
    GeometricPath::from_vertices(vec![tx, c, rx], &[n]).ok()
}

/// Steered two-tile relay geometry, if both configured beams serve it.
fn steered_pair(
    tx: Vec3,
    rx: Vec3,
    t1: &Tile,
    t2: &Tile,
    blockers: &[&RectPanel],
    opts: &SimOptions,
) -> Option<GeometricPath> {
    let (c1, c2) = (t1.center(), t2.center());
    let (n1, n2) = (t1.normal(), t2.normal());
    if !bounce_is_front_side(tx, c1, c2, n1) || !bounce_is_front_side(c1, c2, rx, n2) {
        return None;
    }
    let hop = (c2 - c1).normalized().ok()?;
    if angle_between(t1.steer_direction()?, hop) > opts.beam_tolerance {
        return None;
    }
    let toward_rx = (rx - c2).normalized().ok()?;
    if angle_between(t2.steer_direction()?, toward_rx) > opts.beam_tolerance {
        return None;
    }
    if is_occluded(tx, c1, blockers)
        || is_occluded(c1, c2, blockers)
        || is_occluded(c2, rx, blockers)
    {
        return None;
    }
    GeometricPath::from_vertices(vec![tx, c1, c2, rx], &[n1, n2]).ok()
}

/// Assemble the full channel response for one link.
///
/// Metasurface mode gathers the unobstructed line of sight, every steered
/// relay (single tiles and ordered tile pairs) whose configured beams reach
/// the receiver within the beam tolerance, and specular leakage off every
/// absorb tile. Baseline mode gathers the line of sight plus image-method
/// wall reflections. Components are sorted by delay (ties: kind, via ids).
pub fn assemble_cir(
    scene: &Scene,
    tx: Vec3,
    rx: Vec3,
    table: &CoeffTable,
    opts: &SimOptions,
) -> Result<ChannelResponse> {
    let blockers = scene.blockers();
    let mut comps = Vec::new();
    if let Some(c) = los_component(tx, rx, scene.f_c, &blockers)? {
        comps.push(c);
    }
    match opts.mode {
        SimMode::Hsf => {
            let reflect: Vec<&Tile> = scene
                .tiles
                .iter()
                .filter(|t| matches!(t.config.mode, TileMode::Reflect { .. }))
                .collect();
            for t in &reflect {
                if let Some(path) = steered_single(tx, rx, t, &blockers, opts) {
                    comps.push(hsf_reflect_component(&path, &[t], table, scene.f_c, opts)?);
                }
            }
            for t1 in &reflect {
                for t2 in &reflect {
                    if t1.id == t2.id {
                        continue;
                    }
                    if let Some(path) = steered_pair(tx, rx, t1, t2, &blockers, opts) {
                        comps.push(hsf_reflect_component(
                            &path,
                            &[t1, t2],
                            table,
                            scene.f_c,
                            opts,
                        )?);
                    }
                }
            }
            if !opts.ideal_absorption {
                for t in scene
                    .tiles
                    .iter()
                    .filter(|t| t.config.mode == TileMode::Absorb)
                {
                    let Some(path) = crate::geom::trace_image_path(tx, rx, &[&t.panel]) else {
                        continue;
                    };
                    let b = path.vertices[1];
                    if is_occluded(tx, b, &blockers) || is_occluded(b, rx, &blockers) {
                        continue;
                    }
                    comps.push(hsf_leakage_component(
                        &path,
                        t,
                        table,
                        scene.f_c,
                        opts.lookup,
                    )?);
                }
            }
        }
        SimMode::PlainBaseline => {
            for tp in raytracer::enumerate_paths(scene, tx, rx, &opts.budget) {
                comps.push(raytracer::plain_path_component(
                    &tp,
                    scene,
                    opts.polarization,
                )?);
            }
        }
    }
    comps.sort_by(|a, b| {
        a.delay
            .total_cmp(&b.delay)
            .then_with(|| a.kind.rank().cmp(&b.kind.rank()))
            .then_with(|| a.via_ids.cmp(&b.via_ids))
    });
    comps.dedup_by(|a, b| a.kind == b.kind && a.via_ids == b.via_ids);
    let rx_id = scene
        .rx
        .iter()
        .position(|p| *p == rx)
        .map(|i| format!("rx{i}"))
        .unwrap_or_else(|| "custom_rx".to_owned());
    let tx_id = if scene.tx == tx {
        "tx".to_owned()
    } else {
        "custom_tx".to_owned()
    };
    Ok(ChannelResponse {
        f_c: scene.f_c,
        tx_id,
        rx_id,
        components: comps,
    })
}

/// Received power in dBmW; `-inf` for an empty response.
pub fn received_power(cr: &ChannelResponse, p_tx_dbmw: f64, agg: Aggregation) -> f64 {
    let p_lin = match agg {
        Aggregation::Coherent => cr
            .components
            .iter()
            .map(|c| c.gain)
            .sum::<Complex64>()
            .norm_sqr(),
        Aggregation::Noncoherent => cr.components.iter().map(|c| c.gain.norm_sqr()).sum(),
    };
    if p_lin <= 0.0 {
        f64::NEG_INFINITY
    } else {
        p_tx_dbmw + 10.0 * p_lin.log10()
    }
}

/// Relative power gain in percent, computed directly on the dBmW values
/// (the convention of the reference comparison tables). The baseline must
/// be nonzero and finite; a negative baseline flips the sign and is left
/// to the caller to interpret.
pub fn gain_percent(p_hsf_dbmw: f64, p_plain_dbmw: f64) -> Result<f64> {
    if p_plain_dbmw == 0.0 || !p_plain_dbmw.is_finite() || !p_hsf_dbmw.is_finite() {
        return Err(Error::ZeroBaselinePower);
    }
    Ok(100.0 * (p_hsf_dbmw - p_plain_dbmw) / p_plain_dbmw)
}

/// Relative power gain in percent on linear milliwatt values.
pub fn gain_percent_linear(p_hsf_dbmw: f64, p_plain_dbmw: f64) -> Result<f64> {
    if !p_plain_dbmw.is_finite() || !p_hsf_dbmw.is_finite() {
        return Err(Error::ZeroBaselinePower);
    }
    let (mh, mp) = (
        10f64.powf(p_hsf_dbmw / 10.0),
        10f64.powf(p_plain_dbmw / 10.0),
    );
    if mp <= 0.0 {
        return Err(Error::ZeroBaselinePower);
    }
    Ok(100.0 * (mh - mp) / mp)
}

/// Noncoherent power binned by delay: `(bin start s, power dB)` for every
/// nonempty bin, ascending. Total power is conserved exactly up to
/// floating-point addition order.
pub fn power_delay_profile(cr: &ChannelResponse, bin: f64) -> Vec<(f64, f64)> {
    assert!(bin > 0.0, "delay bin width must be positive");
    let mut bins: std::collections::BTreeMap<i64, f64> = std::collections::BTreeMap::new();
    for c in &cr.components {
        let idx = (c.delay / bin).floor() as i64;
        *bins.entry(idx).or_insert(0.0) += c.gain.norm_sqr();
    }
    bins.into_iter()
        .map(|(i, p)| (i as f64 * bin, 10.0 * p.log10()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hsf::TileConfig;
    use crate::materials::concrete;
    use crate::scenario::{Wall, WallRole};
    use approx::assert_relative_eq;

    fn table() -> &'static CoeffTable {
        CoeffTable::builtin()
    }

    fn empty_scene(tx: Vec3, rx: Vec3) -> Scene {
        Scene {
            name: "void".into(),
            f_c: 60e9,
            p_tx_dbmw: 100.0,
            tx,
            rx: vec![rx],
            walls: Vec::new(),
            tiles: Vec::new(),
        }
    }

    fn test_tile(config: TileConfig) -> Tile {
        Tile {
            id: "t0".into(),
            wall_id: "w0".into(),
            panel: RectPanel::new(
                Vec3::new(0.0, 0.0, 0.0),
                Vec3::new(1.0, 0.0, 0.0),
                Vec3::new(0.0, 1.0, 0.0),
            )
            .unwrap(),
            config,
        }
    }

    #[test]
    fn spreading_reference_values() {
        let g1 = spreading_gain(60e9, 1.0).unwrap();
        assert_relative_eq!(g1, 3.9761211e-4, epsilon = 1e-10);
        let g10 = spreading_gain(60e9, 10.0).unwrap();
        assert_relative_eq!(20.0 * g10.log10(), -88.0108, epsilon = 1e-3);
        // Doubling the distance halves the amplitude: -6.02 dB of power.
        let drop = 20.0
            * (spreading_gain(60e9, 7.0).unwrap() / spreading_gain(60e9, 14.0).unwrap()).log10();
        assert_relative_eq!(drop, 6.0206, epsilon = 1e-3);
        // Unity boundary at d = c/(4 pi f).
        let d_unit = SPEED_OF_LIGHT / (4.0 * std::f64::consts::PI * 60e9);
        assert_relative_eq!(spreading_gain(60e9, d_unit).unwrap(), 1.0, epsilon = 1e-12);
        assert!(spreading_gain(60e9, 0.0).is_err());
        assert!(spreading_gain(0.0, 1.0).is_err());
    }

    #[test]
    fn delay_reference_values() {
        assert_eq!(path_delay(0.0).unwrap(), 0.0);
        assert_relative_eq!(path_delay(2.99792458).unwrap(), 1e-8, epsilon = 1e-20);
        assert_relative_eq!(path_delay(8.392).unwrap() * 1e9, 27.9927, epsilon = 1e-3);
        assert!(path_delay(-1.0).is_err());
    }

    #[test]
    fn los_free_space_link() {
        let tx = Vec3::new(0.0, 0.0, 1.0);
        let rx = Vec3::new(1.0, 0.0, 1.0);
        let c = los_component(tx, rx, 60e9, &[]).unwrap().unwrap();
        assert_relative_eq!(c.gain.norm(), 3.9761211e-4, epsilon = 1e-10);
        assert_relative_eq!(c.delay * 1e9, 3.3356, epsilon = 1e-3);
        assert_eq!(c.bounce_count, 0);
        assert!(c.via_ids.is_empty());
        // Arrival points back toward the transmitter.
        assert_relative_eq!(c.aoa_azimuth, std::f64::consts::PI, epsilon = 1e-12);
        assert!(los_component(tx, tx, 60e9, &[]).is_err());
        let blocker = RectPanel::new(
            Vec3::new(0.5, -1.0, 0.0),
            Vec3::new(0.0, 2.0, 0.0),
            Vec3::new(0.0, 0.0, 2.0),
        )
        .unwrap();
        assert!(los_component(tx, rx, 60e9, &[&blocker]).unwrap().is_none());
    }

    #[test]
    fn reflect_component_collimation_and_ideal_limits() {
        let mut tile = test_tile(TileConfig::default());
        let tx = Vec3::new(-1.5, 0.5, 2.0);
        let rx = Vec3::new(2.5, 0.5, 2.0);
        let c = tile.panel.center();
        tile.config = TileConfig {
            mode: tile.steer_toward(rx).unwrap(),
            collimate: true,
        };
        let path = GeometricPath::from_vertices(vec![tx, c, rx], &[tile.panel.normal()]).unwrap();
        let opts = SimOptions::default();

        let comp = hsf_reflect_component(&path, &[&tile], table(), 60e9, &opts).unwrap();
        // 45 degrees in and out clamps to the table corner served by the
        // 20-degree incidence row: -0.6635 dB.
        let d_first = 8f64.sqrt();
        let want = spreading_gain(60e9, d_first).unwrap() * 10f64.powf(-0.6635 / 20.0);
        assert_relative_eq!(comp.gain.norm(), want, epsilon = 1e-12);
        assert_relative_eq!(comp.delay, 2.0 * d_first / SPEED_OF_LIGHT, epsilon = 1e-20);

        // Spreading over the whole path exactly halves the amplitude here.
        let full = SimOptions {
            spreading_after_collimation: true,
            ..SimOptions::default()
        };
        let comp_full = hsf_reflect_component(&path, &[&tile], table(), 60e9, &full).unwrap();
        assert_relative_eq!(
            comp.gain.norm() / comp_full.gain.norm(),
            2.0,
            epsilon = 1e-12
        );
        assert_eq!(comp.delay, comp_full.delay);

        // Ideal reflection leaves pure spreading.
        let ideal = SimOptions {
            ideal_reflection: true,
            ..SimOptions::default()
        };
        let comp_ideal = hsf_reflect_component(&path, &[&tile], table(), 60e9, &ideal).unwrap();
        assert_relative_eq!(
            comp_ideal.gain.norm(),
            spreading_gain(60e9, d_first).unwrap(),
            epsilon = 1e-15
        );

        // A non-collimating tile spreads over the full length.
        let mut flat = tile.clone();
        flat.config.collimate = false;
        let comp_flat = hsf_reflect_component(&path, &[&flat], table(), 60e9, &opts).unwrap();
        assert_relative_eq!(
            comp_flat.gain.norm(),
            comp_full.gain.norm(),
            epsilon = 1e-15
        );

        // Wrong mode is rejected.
        let absorb = test_tile(TileConfig::default());
        assert!(matches!(
            hsf_reflect_component(&path, &[&absorb], table(), 60e9, &opts),
            Err(Error::WrongTileMode { .. })
        ));
    }

    #[test]
    fn leakage_component_uses_absorption_table() {
        let tile = test_tile(TileConfig::default());
        let o = 2.0 * 5f64.to_radians().tan();
        let tx = Vec3::new(0.5 - o, 0.5, 2.0);
        let rx = Vec3::new(0.5 + o, 0.5, 2.0);
        let path = crate::geom::trace_image_path(tx, rx, &[&tile.panel]).unwrap();
        assert_relative_eq!(path.incidence_angles[0].to_degrees(), 5.0, epsilon = 1e-9);
        let comp = hsf_leakage_component(&path, &tile, table(), 60e9, AngleLookup::Strict).unwrap();
        let total = 4.0 / 5f64.to_radians().cos();
        let want = spreading_gain(60e9, total).unwrap() * 10f64.powf(-37.5 / 20.0);
        assert_relative_eq!(comp.gain.norm(), want, epsilon = 1e-12);
        assert_eq!(comp.kind, ComponentKind::HsfLeakage);
        assert_eq!(comp.via_ids, vec!["t0".to_owned()]);

        let mut steered = test_tile(TileConfig::default());
        steered.config.mode = TileMode::Reflect {
            theta_r: 0.3,
            azimuth: 0.0,
        };
        assert!(matches!(
            hsf_leakage_component(&path, &steered, table(), 60e9, AngleLookup::Strict),
            Err(Error::WrongTileMode { .. })
        ));
    }

    #[test]
    fn empty_room_has_exactly_the_los_component() {
        let tx = Vec3::new(0.0, 0.0, 1.0);
        let rx = Vec3::new(4.0, 2.0, 1.0);
        let scene = empty_scene(tx, rx);
        let cr = assemble_cir(&scene, tx, rx, table(), &SimOptions::default()).unwrap();
        assert_eq!(cr.components.len(), 1);
        assert_eq!(cr.components[0].kind, ComponentKind::Los);
        assert_eq!(cr.rx_id, "rx0");
        assert_eq!(cr.tx_id, "tx");
    }

    #[test]
    fn reference_room_relay_chain_produces_two_bounce_component() {
        let mut scene = crate::scenario::Scene::build_reference_room().unwrap();
        scene
            .configure_chain(0, &["10.0_3.5_0.5", "4.5_0.0_0.5"])
            .unwrap();
        let rx = scene.rx[0];
        let cr = assemble_cir(&scene, scene.tx, rx, table(), &SimOptions::default()).unwrap();
        let relay: Vec<_> = cr
            .components
            .iter()
            .filter(|c| c.kind == ComponentKind::HsfReflected)
            .collect();
        // The full configured chain arrives, and the second tile (steered
        // at the receiver) also relays the direct illumination it catches
        // through the doorway: a tile redirects any incident ray into its
        // configured beam.
        assert!(relay
            .iter()
            .any(|c| c.via_ids == ["10.0_3.5_0.5", "4.5_0.0_0.5"] && c.bounce_count == 2));
        assert!(relay
            .iter()
            .all(|c| c.bounce_count >= 1 && c.bounce_count <= 2));
        // The partition blocks the direct ray.
        assert!(cr.components.iter().all(|c| c.kind != ComponentKind::Los));
    }

    #[test]
    fn leakage_reaches_a_receiver_on_the_transmitter_side() {
        let scene = crate::scenario::Scene::build_reference_room().unwrap();
        let rx = Vec3::new(7.6, 5.0, 1.5);
        let cr = assemble_cir(&scene, scene.tx, rx, table(), &SimOptions::default()).unwrap();
        assert!(cr.components.iter().any(|c| c.kind == ComponentKind::Los));
        assert!(cr
            .components
            .iter()
            .any(|c| c.kind == ComponentKind::HsfLeakage));
        // Sorted by delay.
        for w in cr.components.windows(2) {
            assert!(w[0].delay <= w[1].delay);
        }
        // Ideal absorption removes every leakage arrival.
        let ideal = SimOptions {
            ideal_absorption: true,
            ..SimOptions::default()
        };
        let cr2 = assemble_cir(&scene, scene.tx, rx, table(), &ideal).unwrap();
        assert!(cr2
            .components
            .iter()
            .all(|c| c.kind != ComponentKind::HsfLeakage));
    }

    #[test]
    fn received_power_aggregation_rules() {
        let mk = |gain: Complex64| PathComponent {
            kind: ComponentKind::Los,
            gain,
            delay: 1e-9,
            aoa_elevation: 0.0,
            aoa_azimuth: 0.0,
            bounce_count: 0,
            via_ids: Vec::new(),
        };
        let one = ChannelResponse {
            f_c: 60e9,
            tx_id: "tx".into(),
            rx_id: "rx".into(),
            components: vec![mk(Complex64::new(1.0, 0.0))],
        };
        assert_relative_eq!(received_power(&one, 100.0, Aggregation::Coherent), 100.0);
        assert_relative_eq!(
            received_power(&one, 100.0, Aggregation::Coherent),
            received_power(&one, 100.0, Aggregation::Noncoherent),
            epsilon = 1e-9
        );
        let two = ChannelResponse {
            components: vec![mk(Complex64::new(0.5, 0.0)), mk(Complex64::new(0.5, 0.0))],
            ..one.clone()
        };
        let base = received_power(
            &ChannelResponse {
                components: vec![mk(Complex64::new(0.5, 0.0))],
                ..one.clone()
            },
            100.0,
            Aggregation::Coherent,
        );
        assert_relative_eq!(
            received_power(&two, 100.0, Aggregation::Coherent) - base,
            6.0206,
            epsilon = 1e-3
        );
        assert_relative_eq!(
            received_power(&two, 100.0, Aggregation::Noncoherent) - base,
            3.0103,
            epsilon = 1e-3
        );
        let empty = ChannelResponse {
            components: Vec::new(),
            ..one
        };
        assert_eq!(
            received_power(&empty, 100.0, Aggregation::Noncoherent),
            f64::NEG_INFINITY
        );
    }

    #[test]
    fn gain_percent_reference_rows() {
        assert_relative_eq!(
            gain_percent(20.391, 8.24).unwrap(),
            147.4636,
            epsilon = 1e-3
        );
        assert_relative_eq!(gain_percent(15.159, 14.91).unwrap(), 1.6700, epsilon = 1e-3);
        assert_relative_eq!(
            gain_percent(16.411, 7.23).unwrap(),
            126.9848,
            epsilon = 1e-3
        );
        assert_eq!(gain_percent(5.0, 5.0).unwrap(), 0.0);
        assert!(gain_percent(10.0, 0.0).is_err());
        assert!(gain_percent(10.0, f64::NEG_INFINITY).is_err());
        // Linear variant: 10 dB over a 0 dBmW baseline is +900%.
        assert_relative_eq!(
            gain_percent_linear(10.0, 0.0).unwrap(),
            900.0,
            epsilon = 1e-9
        );
        assert!(gain_percent_linear(10.0, f64::NEG_INFINITY).is_err());
    }

    #[test]
    fn pdp_bins_and_conserves_power() {
        let mk = |delay: f64, amp: f64| PathComponent {
            kind: ComponentKind::HsfLeakage,
            gain: Complex64::new(amp, 0.0),
            delay,
            aoa_elevation: 0.0,
            aoa_azimuth: 0.0,
            bounce_count: 1,
            via_ids: vec!["x".into()],
        };
        let cr = ChannelResponse {
            f_c: 60e9,
            tx_id: "tx".into(),
            rx_id: "rx".into(),
            components: vec![mk(10.2e-9, 1e-4), mk(10.7e-9, 2e-4), mk(30.1e-9, 5e-5)],
        };
        let pdp = power_delay_profile(&cr, 1e-9);
        assert_eq!(pdp.len(), 2);
        assert_relative_eq!(pdp[0].0, 10e-9, epsilon = 1e-18);
        assert_relative_eq!(pdp[1].0, 30e-9, epsilon = 1e-18);
        let total: f64 = pdp.iter().map(|&(_, db)| 10f64.powf(db / 10.0)).sum();
        let direct: f64 = cr.components.iter().map(|c| c.gain.norm_sqr()).sum();
        assert_relative_eq!(total, direct, max_relative = 1e-12);
    }

    #[test]
    fn csv_is_deterministic_with_exact_header() {
        let scene = crate::scenario::Scene::build_reference_room().unwrap();
        let rx = Vec3::new(7.6, 5.0, 1.5);
        let cr = assemble_cir(&scene, scene.tx, rx, table(), &SimOptions::default()).unwrap();
        let a = cr.to_csv();
        let b = cr.to_csv();
        assert_eq!(a, b);
        assert!(a.starts_with(
            "path_id,kind,delay_ns,gain_db,phase_rad,aoa_el_deg,aoa_az_deg,bounce_count,via_ids\n"
        ));
        assert!(a.lines().count() >= 2);
    }

    #[test]
    fn baseline_mode_collects_wall_reflections() {
        // Two-panel corridor: floor and one side wall.
        let floor = Wall {
            id: "floor".into(),
            panel: RectPanel::new(
                Vec3::new(0.0, 0.0, 0.0),
                Vec3::new(6.0, 0.0, 0.0),
                Vec3::new(0.0, 4.0, 0.0),
            )
            .unwrap(),
            material: concrete(),
            role: WallRole::Floor,
            tile_size: None,
        };
        let side = Wall {
            id: "side".into(),
            panel: RectPanel::new(
                Vec3::new(0.0, 0.0, 0.0),
                Vec3::new(0.0, 0.0, 3.0),
                Vec3::new(6.0, 0.0, 0.0),
            )
            .unwrap(),
            material: concrete(),
            role: WallRole::PlainWall,
            tile_size: None,
        };
        let tx = Vec3::new(1.0, 1.0, 1.0);
        let rx = Vec3::new(5.0, 2.0, 1.0);
        let scene = Scene {
            name: "corridor".into(),
            f_c: 60e9,
            p_tx_dbmw: 100.0,
            tx,
            rx: vec![rx],
            walls: vec![floor, side],
            tiles: Vec::new(),
        };
        let opts = SimOptions {
            mode: SimMode::PlainBaseline,
            ..SimOptions::default()
        };
        let cr = assemble_cir(&scene, tx, rx, table(), &opts).unwrap();
        assert!(cr.components.iter().any(|c| c.kind == ComponentKind::Los));
        let plains: Vec<_> = cr
            .components
            .iter()
            .filter(|c| c.kind == ComponentKind::PlainReflected)
            .collect();
        // Floor bounce, wall bounce, and wall-floor / floor-wall doubles
        // all exist in an open corner.
        assert!(plains.len() >= 3, "found {}", plains.len());
        for p in &plains {
            assert!(p.gain.norm() > 0.0 && p.gain.norm() <= 1.0);
        }
    }
}
