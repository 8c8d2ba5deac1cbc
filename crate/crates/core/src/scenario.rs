//! Scene model: walls, metasurface tiles, transceiver placement, and the
//! JSON scene-file format.
//!
//! A scene owns a list of rectangular wall panels. Walls marked as
//! metasurface hosts are tessellated into square tiles at load time, so a
//! scene file only stores wall geometry plus per-tile mode overrides; the
//! tile grid itself is always regenerated deterministically. Tile ids are
//! derived from tile centre coordinates (one decimal, underscore-joined,
//! e.g. `10.0_3.5_0.5`) so configurations remain stable across reloads.
//!
//! All lengths are metres, angles radians, frequencies Hz; the JSON layer
//! declares its units explicitly and rejects anything else.

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{RectPanel, Vec3};
use crate::hsf::{TileConfig, TileMode};
use crate::materials::{concrete, MaterialSpec};

/// Tolerance for tessellation fit and coverage checks, metres.
const TESS_EPS: f64 = 1e-6;

/// Structural role of a wall panel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WallRole {
    PlainWall,
    HsfWall,
    Floor,
    Ceiling,
}

impl WallRole {
    fn as_str(self) -> &'static str {
        match self {
            WallRole::PlainWall => "plain_wall",
            WallRole::HsfWall => "hsf_wall",
            WallRole::Floor => "floor",
            WallRole::Ceiling => "ceiling",
        }
    }

    fn parse(s: &str) -> Result<Self> {
        match s {
            "plain_wall" => Ok(WallRole::PlainWall),
            "hsf_wall" => Ok(WallRole::HsfWall),
            "floor" => Ok(WallRole::Floor),
            "ceiling" => Ok(WallRole::Ceiling),
            other => Err(Error::SceneValidation(format!(
                "unknown wall role `{other}`"
            ))),
        }
    }
}

/// One rectangular wall panel.
#[derive(Debug, Clone, PartialEq)]
pub struct Wall {
    pub id: String,
    pub panel: RectPanel,
    pub material: MaterialSpec,
    pub role: WallRole,
    /// Tile edge length for metasurface hosts; `None` for plain surfaces.
    pub tile_size: Option<f64>,
}

/// One metasurface tile, a square sub-panel of its host wall.
#[derive(Debug, Clone, PartialEq)]
pub struct Tile {
    pub id: String,
    pub wall_id: String,
    pub panel: RectPanel,
    pub config: TileConfig,
}

impl Tile {
    pub fn center(&self) -> Vec3 {
        self.panel.center()
    }

    pub fn normal(&self) -> Vec3 {
        self.panel.normal()
    }

    /// Local tangent frame: `u_hat` along the host grid, `v_hat = n x u_hat`.
    pub fn frame(&self) -> (Vec3, Vec3, Vec3) {
        let n = self.panel.normal();
        let u = self
            .panel
            .edge_u
            .normalized()
            .expect("tile panels have nonzero edges");
        let v = n.cross(u);
        (u, v, n)
    }

    /// Reflect-mode parameters that steer the tile's beam from its centre
    /// toward `target`. Errors when the target is not in front of the tile.
    pub fn steer_toward(&self, target: Vec3) -> Result<TileMode> {
        let d = (target - self.center()).normalized()?;
        let (u, v, n) = self.frame();
        let cos_t = d.dot(n);
        if cos_t <= 1e-9 {
            return Err(Error::SceneValidation(format!(
                "steering target is behind tile {}",
                self.id
            )));
        }
        Ok(TileMode::Reflect {
            theta_r: cos_t.clamp(-1.0, 1.0).acos(),
            azimuth: d.dot(v).atan2(d.dot(u)),
        })
    }

    /// Unit departure direction of a reflect-mode tile, `None` otherwise.
    pub fn steer_direction(&self) -> Option<Vec3> {
        match self.config.mode {
            TileMode::Reflect { theta_r, azimuth } => {
                let (u, v, n) = self.frame();
                let (st, ct) = (theta_r.sin(), theta_r.cos());
                Some(u * (st * azimuth.cos()) + v * (st * azimuth.sin()) + n * ct)
            }
            _ => None,
        }
    }
}

/// A full simulation scene.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub name: String,
    /// Carrier frequency, Hz.
    pub f_c: f64,
    /// Transmit power, dBmW.
    pub p_tx_dbmw: f64,
    pub tx: Vec3,
    pub rx: Vec<Vec3>,
    pub walls: Vec<Wall>,
    pub tiles: Vec<Tile>,
}

impl Scene {
    /// Reference room: a 10 x 15 x 4 m concrete room with a 0.5 m thick
    /// partition wall leaving a 3 m doorway, the lower 3 m of every wall
    /// face tessellated into 222 one-metre metasurface tiles, one
    /// transmitter, and four receiver positions behind the partition.
    pub fn build_reference_room() -> Result<Scene> {
        let c = concrete();
        let mk = |id: &str,
                  corner: [f64; 3],
                  eu: [f64; 3],
                  ev: [f64; 3],
                  role: WallRole,
                  tile: Option<f64>|
         -> Result<Wall> {
            Ok(Wall {
                id: id.to_owned(),
                panel: RectPanel::new(
                    Vec3::new(corner[0], corner[1], corner[2]),
                    Vec3::new(eu[0], eu[1], eu[2]),
                    Vec3::new(ev[0], ev[1], ev[2]),
                )?,
                material: c.clone(),
                role,
                tile_size: tile,
            })
        };
        // Edge order fixes each normal to point into the occupied space.
        #[rustfmt::skip]
        let walls = vec![
            mk("wall_x0", [0., 0., 0.], [0., 15., 0.], [0., 0., 3.], WallRole::HsfWall, Some(1.0))?,
            mk("wall_x0_top", [0., 0., 3.], [0., 15., 0.], [0., 0., 1.], WallRole::PlainWall, None)?,
            mk("wall_x10", [10., 0., 0.], [0., 0., 3.], [0., 15., 0.], WallRole::HsfWall, Some(1.0))?,
            mk("wall_x10_top", [10., 0., 3.], [0., 0., 1.], [0., 15., 0.], WallRole::PlainWall, None)?,
            mk("wall_y0", [0., 0., 0.], [0., 0., 3.], [10., 0., 0.], WallRole::HsfWall, Some(1.0))?,
            mk("wall_y0_top", [0., 0., 3.], [0., 0., 1.], [10., 0., 0.], WallRole::PlainWall, None)?,
            mk("wall_y15", [0., 15., 0.], [10., 0., 0.], [0., 0., 3.], WallRole::HsfWall, Some(1.0))?,
            mk("wall_y15_top", [0., 15., 3.], [10., 0., 0.], [0., 0., 1.], WallRole::PlainWall, None)?,
            mk("wall_mid_w", [4.5, 3., 0.], [0., 0., 3.], [0., 12., 0.], WallRole::HsfWall, Some(1.0))?,
            mk("wall_mid_w_top", [4.5, 3., 3.], [0., 0., 1.], [0., 12., 0.], WallRole::PlainWall, None)?,
            mk("wall_mid_e", [5., 3., 0.], [0., 12., 0.], [0., 0., 3.], WallRole::HsfWall, Some(1.0))?,
            mk("wall_mid_e_top", [5., 3., 3.], [0., 12., 0.], [0., 0., 1.], WallRole::PlainWall, None)?,
            mk("wall_mid_cap", [4.5, 3., 0.], [0.5, 0., 0.], [0., 0., 4.], WallRole::PlainWall, None)?,
            mk("floor", [0., 0., 0.], [10., 0., 0.], [0., 15., 0.], WallRole::Floor, None)?,
            mk("ceiling", [0., 0., 4.], [0., 15., 0.], [10., 0., 0.], WallRole::Ceiling, None)?,
        ];
        let tiles = generate_tiles(&walls)?;
        let scene = Scene {
            name: "paper_fig6".to_owned(),
            f_c: 60e9,
            p_tx_dbmw: 100.0,
            tx: Vec3::new(7.6, 11.4, 2.0),
            rx: vec![
                Vec3::new(1.15, 0.6, 1.5),
                Vec3::new(1.15, 3.1, 1.5),
                Vec3::new(1.15, 5.6, 1.5),
                Vec3::new(1.15, 8.1, 1.5),
            ],
            walls,
            tiles,
        };
        let expected = 222;
        if scene.tiles.len() != expected {
            return Err(Error::TileCount {
                expected,
                actual: scene.tiles.len(),
            });
        }
        scene.validate()?;
        Ok(scene)
    }

    /// Panels that block propagation (every wall).
    pub fn blockers(&self) -> Vec<&RectPanel> {
        self.walls.iter().map(|w| &w.panel).collect()
    }

    /// Reflecting surfaces for the plain-room baseline: every wall with its
    /// material, metasurface hosts included (unpowered tiles behave as the
    /// wall they sit on).
    pub fn reflectors(&self) -> Vec<(&str, &RectPanel, &MaterialSpec)> {
        self.walls
            .iter()
            .map(|w| (w.id.as_str(), &w.panel, &w.material))
            .collect()
    }

    pub fn tile(&self, id: &str) -> Result<&Tile> {
        self.tiles
            .iter()
            .find(|t| t.id == id)
            .ok_or_else(|| Error::UnknownTileId(id.to_owned()))
    }

    pub fn tile_mut(&mut self, id: &str) -> Result<&mut Tile> {
        self.tiles
            .iter_mut()
            .find(|t| t.id == id)
            .ok_or_else(|| Error::UnknownTileId(id.to_owned()))
    }

    pub fn set_tile_config(&mut self, id: &str, config: TileConfig) -> Result<()> {
        self.tile_mut(id)?.config = config;
        Ok(())
    }

    /// Reset every tile to the default absorb configuration.
    pub fn reset_tiles(&mut self) {
        for t in &mut self.tiles {
            t.config = TileConfig::default();
        }
    }

    pub fn rx_point(&self, idx: usize) -> Result<Vec3> {
        self.rx.get(idx).copied().ok_or_else(|| {
            Error::SceneValidation(format!(
                "receiver index {idx} out of range (scene has {})",
                self.rx.len()
            ))
        })
    }

    /// Configure the listed tiles as a relay chain
    /// `tx -> tiles[0] -> ... -> tiles[last] -> rx`: each tile steers
    /// toward the next hop and collimates.
    pub fn configure_chain(&mut self, rx_index: usize, tile_ids: &[&str]) -> Result<()> {
        let rx = self.rx_point(rx_index)?;
        let mut targets = Vec::with_capacity(tile_ids.len());
        for (k, id) in tile_ids.iter().enumerate() {
            let next = if k + 1 < tile_ids.len() {
                self.tile(tile_ids[k + 1])?.center()
            } else {
                rx
            };
            targets.push(self.tile(id)?.steer_toward(next)?);
        }
        for (id, mode) in tile_ids.iter().zip(targets) {
            self.tile_mut(id)?.config = TileConfig {
                mode,
                collimate: true,
            };
        }
        Ok(())
    }

    /// Structural consistency checks; runs after building or loading.
    pub fn validate(&self) -> Result<()> {
        if self.f_c <= 0.0 || !self.f_c.is_finite() {
            return Err(Error::InvalidFrequency(self.f_c));
        }
        for p in std::iter::once(&self.tx).chain(self.rx.iter()) {
            if ![p.x, p.y, p.z].iter().all(|c| c.is_finite()) {
                return Err(Error::SceneValidation(
                    "non-finite transceiver position".into(),
                ));
            }
        }
        let mut wall_ids = HashSet::new();
        for w in &self.walls {
            if !wall_ids.insert(w.id.as_str()) {
                return Err(Error::DuplicateId(w.id.clone()));
            }
            match (w.role, w.tile_size) {
                (WallRole::HsfWall, Some(s)) if s > 0.0 => {}
                (WallRole::HsfWall, _) => {
                    return Err(Error::SceneValidation(format!(
                        "wall {} is a metasurface host without a positive tile size",
                        w.id
                    )))
                }
                (_, Some(_)) => {
                    return Err(Error::SceneValidation(format!(
                        "wall {} carries a tile size but is not a metasurface host",
                        w.id
                    )))
                }
                (_, None) => {}
            }
        }
        let mut tile_ids = HashSet::new();
        for t in &self.tiles {
            if !tile_ids.insert(t.id.as_str()) {
                return Err(Error::DuplicateId(t.id.clone()));
            }
            if !wall_ids.contains(t.wall_id.as_str()) {
                return Err(Error::SceneValidation(format!(
                    "tile {} references unknown wall {}",
                    t.id, t.wall_id
                )));
            }
            if let TileMode::Reflect { theta_r, .. } = t.config.mode {
                if !(0.0..std::f64::consts::FRAC_PI_2).contains(&theta_r) {
                    return Err(Error::SceneValidation(format!(
                        "tile {} reflect angle must lie in [0, 90) degrees from the normal",
                        t.id
                    )));
                }
            }
        }
        // Tiles from different hosts must not share area (hosts on the same
        // plane could be authored to overlap). Checked before the wall-level
        // test so the error names the offending tiles.
        for i in 0..self.tiles.len() {
            for j in (i + 1)..self.tiles.len() {
                let (a, b) = (&self.tiles[i], &self.tiles[j]);
                if a.wall_id != b.wall_id && a.panel.overlaps_coplanar(&b.panel, 1e-9) {
                    return Err(Error::TileOverlap {
                        a: a.id.clone(),
                        b: b.id.clone(),
                    });
                }
            }
        }
        for i in 0..self.walls.len() {
            for j in (i + 1)..self.walls.len() {
                let (a, b) = (&self.walls[i], &self.walls[j]);
                if a.panel.intersects_rect_interior(&b.panel, 1e-9)
                    || a.panel.overlaps_coplanar(&b.panel, 1e-9)
                {
                    return Err(Error::SceneValidation(format!(
                        "walls {} and {} intersect",
                        a.id, b.id
                    )));
                }
            }
        }
        // Tile grids must cover their hosts exactly.
        for w in &self.walls {
            if let Some(s) = w.tile_size {
                let host_area = w.panel.area();
                let count = self.tiles.iter().filter(|t| t.wall_id == w.id).count();
                let covered = count as f64 * s * s;
                if (covered - host_area).abs() > TESS_EPS * host_area.max(1.0) {
                    return Err(Error::Tessellation {
                        wall: w.id.clone(),
                        detail: format!(
                            "{count} tiles cover {covered} m^2 of a {host_area} m^2 host"
                        ),
                    });
                }
            }
        }
        Ok(())
    }

    /// Parse a scene from JSON text.
    pub fn from_json(text: &str) -> Result<Scene> {
        let file: SceneFile = serde_json::from_str(text)?;
        let units = file.units.ok_or(Error::MissingUnits)?;
        if units.length != "m" || units.frequency != "GHz" || units.power != "dBmW" {
            return Err(Error::UnsupportedUnits(format!(
                "length={}, frequency={}, power={}",
                units.length, units.frequency, units.power
            )));
        }
        let mut walls = Vec::with_capacity(file.walls.len());
        for w in &file.walls {
            let role = WallRole::parse(&w.role)?;
            let tile_size = match (&role, &w.hsf) {
                (WallRole::HsfWall, Some(h)) => Some(h.tile_size_m),
                (WallRole::HsfWall, None) => {
                    return Err(Error::SceneValidation(format!(
                        "wall {} has role hsf_wall but no hsf block",
                        w.id
                    )))
                }
                (_, Some(_)) => {
                    return Err(Error::SceneValidation(format!(
                        "wall {} has an hsf block but role {}",
                        w.id, w.role
                    )))
                }
                (_, None) => None,
            };
            walls.push(Wall {
                id: w.id.clone(),
                panel: RectPanel::new(w.corner, w.edge_u, w.edge_v)?,
                material: w.material.clone(),
                role,
                tile_size,
            });
        }
        let mut tiles = generate_tiles(&walls)?;
        for over in &file.tile_overrides {
            let tile = tiles
                .iter_mut()
                .find(|t| t.id == over.id)
                .ok_or_else(|| Error::UnknownTileId(over.id.clone()))?;
            tile.config = over.to_config()?;
        }
        let scene = Scene {
            name: file.name,
            f_c: file.frequency_ghz * 1e9,
            p_tx_dbmw: file.power_dbmw,
            tx: file.tx,
            rx: file.rx,
            walls,
            tiles,
        };
        scene.validate()?;
        Ok(scene)
    }

    /// Serialise to the JSON scene format. Tile overrides are emitted only
    /// for tiles that differ from the default absorb configuration.
    pub fn to_json(&self) -> String {
        let file = SceneFile {
            units: Some(UnitsFile {
                length: "m".into(),
                frequency: "GHz".into(),
                power: "dBmW".into(),
            }),
            name: self.name.clone(),
            frequency_ghz: self.f_c / 1e9,
            power_dbmw: self.p_tx_dbmw,
            tx: self.tx,
            rx: self.rx.clone(),
            walls: self
                .walls
                .iter()
                .map(|w| WallFile {
                    id: w.id.clone(),
                    corner: w.panel.origin,
                    edge_u: w.panel.edge_u,
                    edge_v: w.panel.edge_v,
                    role: w.role.as_str().to_owned(),
                    material: w.material.clone(),
                    hsf: w.tile_size.map(|s| HsfFile { tile_size_m: s }),
                })
                .collect(),
            tile_overrides: self
                .tiles
                .iter()
                .filter(|t| t.config != TileConfig::default())
                .map(TileOverrideFile::from_tile)
                .collect(),
        };
        let mut s = serde_json::to_string_pretty(&file).expect("scene serialises");
        s.push('\n');
        s
    }

    pub fn load(path: &Path) -> Result<Scene> {
        Scene::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        Ok(std::fs::write(path, self.to_json())?)
    }
}

/// Result of automatic relay selection for one receiver.
#[derive(Debug, Clone)]
pub struct TileAssignment {
    pub rx_id: String,
    /// Tile ids in bounce order, transmitter first; one or two tiles.
    pub chain: Vec<String>,
    /// The steering configuration each chain tile receives.
    pub configs: Vec<(String, TileConfig)>,
    /// Noncoherent received power of the fully assembled channel with the
    /// chain applied, dBmW.
    pub predicted_power_dbmw: f64,
}

/// Pick the relay chain (one tile, or an ordered pair) that maximises the
/// noncoherent received power at receiver `rx_index`, with every other
/// tile left in its default absorb state.
///
/// Candidates are geometrically prefiltered (front-side visibility and
/// occlusion for every hop), then scored by the power of the assembled
/// channel. The score decomposes exactly under noncoherent aggregation:
/// a baseline all-absorb assembly is computed once, and each candidate
/// adds its relay power and removes the leakage of the tiles it claims.
/// Ties in power break toward the lexicographically smallest chain. The
/// winning configuration is re-assembled in full for the reported power.
pub fn select_tiles(
    scene: &Scene,
    rx_index: usize,
    table: &crate::hsf::CoeffTable,
    opts: &crate::channel::SimOptions,
) -> Result<TileAssignment> {
    use crate::channel::{self, Aggregation, SimMode, SimOptions};
    use crate::geom::{is_occluded, GeometricPath};

    let rx = scene.rx_point(rx_index)?;
    let tx = scene.tx;
    let blockers = scene.blockers();
    let base_opts = SimOptions {
        mode: SimMode::Hsf,
        ..opts.clone()
    };

    let mut base = scene.clone();
    base.reset_tiles();
    let base_cir = channel::assemble_cir(&base, tx, rx, table, &base_opts)?;
    let base_lin: f64 = base_cir.components.iter().map(|c| c.gain.norm_sqr()).sum();
    let mut leak_lin: std::collections::HashMap<&str, f64> = std::collections::HashMap::new();
    for c in &base_cir.components {
        if c.kind == channel::ComponentKind::HsfLeakage {
            leak_lin.insert(c.via_ids[0].as_str(), c.gain.norm_sqr());
        }
    }

    let front_of = |p: Vec3, t: &Tile| (t.center() - p).dot(t.normal()) < -1e-12;
    let tx_visible: Vec<&Tile> = scene
        .tiles
        .iter()
        .filter(|t| front_of(tx, t) && !is_occluded(tx, t.center(), &blockers))
        .collect();
    let rx_visible: HashSet<&str> = scene
        .tiles
        .iter()
        .filter(|t| front_of(rx, t) && !is_occluded(t.center(), rx, &blockers))
        .map(|t| t.id.as_str())
        .collect();

    let mut best: Option<(f64, Vec<String>)> = None;
    let consider = |score: f64, chain: Vec<String>, best: &mut Option<(f64, Vec<String>)>| {
        let better = match best {
            None => true,
            Some((s, c)) => score > *s || (score == *s && chain < *c),
        };
        if better {
            *best = Some((score, chain));
        }
    };

    // Relay power of a candidate, computed on reflect-configured clones.
    let relay_lin = |tiles: &[&Tile], vertices: Vec<Vec3>| -> Option<f64> {
        let normals: Vec<Vec3> = tiles.iter().map(|t| t.normal()).collect();
        let path = GeometricPath::from_vertices(vertices, &normals).ok()?;
        let mut steered: Vec<Tile> = Vec::with_capacity(tiles.len());
        for (k, t) in tiles.iter().enumerate() {
            let next = if k + 1 < tiles.len() {
                tiles[k + 1].center()
            } else {
                rx
            };
            let mut c = (*t).clone();
            c.config = TileConfig {
                mode: c.steer_toward(next).ok()?,
                collimate: true,
            };
            steered.push(c);
        }
        let refs: Vec<&Tile> = steered.iter().collect();
        let comp =
            channel::hsf_reflect_component(&path, &refs, table, scene.f_c, &base_opts).ok()?;
        Some(comp.gain.norm_sqr())
    };

    for t in &tx_visible {
        if !rx_visible.contains(t.id.as_str()) {
            continue;
        }
        let Some(p_relay) = relay_lin(&[t], vec![tx, t.center(), rx]) else {
            continue;
        };
        let score = base_lin - leak_lin.get(t.id.as_str()).copied().unwrap_or(0.0) + p_relay;
        consider(score, vec![t.id.clone()], &mut best);
    }

    for t1 in &tx_visible {
        for t2 in scene
            .tiles
            .iter()
            .filter(|t| rx_visible.contains(t.id.as_str()))
        {
            if t1.id == t2.id {
                continue;
            }
            let (c1, c2) = (t1.center(), t2.center());
            let hop = c2 - c1;
            // The hop must leave the front of the first tile and arrive at
            // the front of the second.
            if hop.dot(t1.normal()) <= 1e-12 || hop.dot(t2.normal()) >= -1e-12 {
                continue;
            }
            if is_occluded(c1, c2, &blockers) {
                continue;
            }
            let Some(p_relay) = relay_lin(&[t1, t2], vec![tx, c1, c2, rx]) else {
                continue;
            };
            let score = base_lin
                - leak_lin.get(t1.id.as_str()).copied().unwrap_or(0.0)
                - leak_lin.get(t2.id.as_str()).copied().unwrap_or(0.0)
                + p_relay;
            consider(score, vec![t1.id.clone(), t2.id.clone()], &mut best);
        }
    }

    let Some((_, chain)) = best else {
        return Err(Error::NoFeasibleChain { rx_index });
    };
    let mut winner = scene.clone();
    winner.reset_tiles();
    let ids: Vec<&str> = chain.iter().map(String::as_str).collect();
    winner.configure_chain(rx_index, &ids)?;
    let cir = channel::assemble_cir(&winner, tx, rx, table, &base_opts)?;
    let predicted = channel::received_power(&cir, scene.p_tx_dbmw, Aggregation::Noncoherent);
    let configs = chain
        .iter()
        .map(|id| {
            let t = winner.tile(id).expect("chain tile exists");
            (id.clone(), t.config)
        })
        .collect();
    Ok(TileAssignment {
        rx_id: format!("rx{rx_index}"),
        chain,
        configs,
        predicted_power_dbmw: predicted,
    })
}

/// Tessellate every metasurface host into its square tile grid. Host edges
/// must be whole multiples of the tile size.
fn generate_tiles(walls: &[Wall]) -> Result<Vec<Tile>> {
    let mut tiles = Vec::new();
    for w in walls {
        let Some(s) = w.tile_size else { continue };
        if s <= 0.0 || s.is_nan() {
            return Err(Error::Tessellation {
                wall: w.id.clone(),
                detail: format!("tile size {s} must be positive"),
            });
        }
        let len_u = w.panel.edge_u.norm();
        let len_v = w.panel.edge_v.norm();
        let nu = (len_u / s).round();
        let nv = (len_v / s).round();
        if nu < 1.0 || (nu * s - len_u).abs() > TESS_EPS {
            return Err(Error::Tessellation {
                wall: w.id.clone(),
                detail: format!("edge {len_u} m is not a whole multiple of {s} m tiles"),
            });
        }
        if nv < 1.0 || (nv * s - len_v).abs() > TESS_EPS {
            return Err(Error::Tessellation {
                wall: w.id.clone(),
                detail: format!("edge {len_v} m is not a whole multiple of {s} m tiles"),
            });
        }
        let (nu, nv) = (nu as usize, nv as usize);
        let step_u = w.panel.edge_u * (1.0 / nu as f64);
        let step_v = w.panel.edge_v * (1.0 / nv as f64);
        for i in 0..nu {
            for j in 0..nv {
                let origin = w.panel.origin + step_u * (i as f64) + step_v * (j as f64);
                let panel = RectPanel::new(origin, step_u, step_v)?;
                let c = panel.center();
                tiles.push(Tile {
                    id: format!("{:.1}_{:.1}_{:.1}", c.x, c.y, c.z),
                    wall_id: w.id.clone(),
                    panel,
                    config: TileConfig::default(),
                });
            }
        }
    }
    Ok(tiles)
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SceneFile {
    #[serde(skip_serializing_if = "Option::is_none")]
    units: Option<UnitsFile>,
    name: String,
    frequency_ghz: f64,
    power_dbmw: f64,
    tx: Vec3,
    rx: Vec<Vec3>,
    walls: Vec<WallFile>,
    #[serde(default)]
    tile_overrides: Vec<TileOverrideFile>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct UnitsFile {
    length: String,
    frequency: String,
    power: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WallFile {
    id: String,
    corner: Vec3,
    edge_u: Vec3,
    edge_v: Vec3,
    role: String,
    material: MaterialSpec,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    hsf: Option<HsfFile>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct HsfFile {
    tile_size_m: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TileOverrideFile {
    id: String,
    mode: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    theta_r_deg: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    azimuth_deg: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    collimate: Option<bool>,
}

impl TileOverrideFile {
    fn to_config(&self) -> Result<TileConfig> {
        let collimate = self.collimate.unwrap_or(true);
        let mode = match self.mode.as_str() {
            "reflect" => {
                let (Some(tr), Some(az)) = (self.theta_r_deg, self.azimuth_deg) else {
                    return Err(Error::SceneValidation(format!(
                        "reflect override for tile {} needs theta_r_deg and azimuth_deg",
                        self.id
                    )));
                };
                TileMode::Reflect {
                    theta_r: tr.to_radians(),
                    azimuth: az.to_radians(),
                }
            }
            "absorb" | "inert" => {
                if self.theta_r_deg.is_some() || self.azimuth_deg.is_some() {
                    return Err(Error::SceneValidation(format!(
                        "{} override for tile {} takes no steering angles",
                        self.mode, self.id
                    )));
                }
                if self.mode == "absorb" {
                    TileMode::Absorb
                } else {
                    TileMode::Inert
                }
            }
            other => {
                return Err(Error::SceneValidation(format!(
                    "unknown tile mode `{other}` for tile {}",
                    self.id
                )))
            }
        };
        Ok(TileConfig { mode, collimate })
    }

    fn from_tile(t: &Tile) -> TileOverrideFile {
        match t.config.mode {
            TileMode::Reflect { theta_r, azimuth } => TileOverrideFile {
                id: t.id.clone(),
                mode: "reflect".into(),
                theta_r_deg: Some(theta_r.to_degrees()),
                azimuth_deg: Some(azimuth.to_degrees()),
                collimate: Some(t.config.collimate),
            },
            TileMode::Absorb => TileOverrideFile {
                id: t.id.clone(),
                mode: "absorb".into(),
                theta_r_deg: None,
                azimuth_deg: None,
                collimate: Some(t.config.collimate),
            },
            TileMode::Inert => TileOverrideFile {
                id: t.id.clone(),
                mode: "inert".into(),
                theta_r_deg: None,
                azimuth_deg: None,
                collimate: Some(t.config.collimate),
            },
        }
    }
}
