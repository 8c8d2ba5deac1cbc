//! Image-method specular ray tracer for plain rectangular walls.
//!
//! Enumerates every ordered wall sequence up to a bounce budget, builds the
//! mirror-image chain for each, walks the physical path back from the
//! receiver, and keeps geometrically valid, unoccluded paths. Components
//! carry the product of complex Fresnel reflection coefficients of the
//! walls hit, so a coherent sum retains per-bounce phase.

use crate::channel::{path_delay, spreading_gain, ComponentKind, PathComponent};
use crate::error::{Error, Result};
use crate::geom::{is_occluded, trace_image_path, GeometricPath, Vec3};
use crate::materials::{complex_permittivity, fresnel_reflection, Polarization};
use crate::scenario::Scene;
use num_complex::Complex64;

/// Limits on the specular path search.
#[derive(Debug, Clone)]
pub struct TraceBudget {
    /// Maximum number of bounces per path.
    pub max_order: usize,
    /// Paths whose spreading-only gain falls below this floor are pruned.
    /// Reflection can only attenuate further, so the prune is conservative.
    pub min_path_gain_db: f64,
}

impl Default for TraceBudget {
    fn default() -> Self {
        TraceBudget {
            max_order: 4,
            min_path_gain_db: f64::NEG_INFINITY,
        }
    }
}

/// A valid specular path with the ordered wall ids it bounces off.
#[derive(Debug, Clone)]
pub struct TracedPath {
    pub wall_ids: Vec<String>,
    pub path: GeometricPath,
}

fn same_geometry(a: &GeometricPath, b: &GeometricPath) -> bool {
    a.vertices.len() == b.vertices.len()
        && a.vertices
            .iter()
            .zip(&b.vertices)
            .all(|(p, q)| p.dist(*q) < 1e-9)
}

/// Enumerate every valid specular path from `tx` to `rx` within the budget.
///
/// Paths are ordered by bounce count, then lexicographically by wall ids.
/// Wall sequences never repeat a wall twice in a row (a double bounce on
/// one plane is geometrically impossible), and paths that are geometric
/// duplicates (bounces on the shared edge of coplanar walls) are emitted
/// once.
pub fn enumerate_paths(scene: &Scene, tx: Vec3, rx: Vec3, budget: &TraceBudget) -> Vec<TracedPath> {
    let mut reflectors: Vec<(&str, &crate::geom::RectPanel)> = scene
        .reflectors()
        .into_iter()
        .map(|(id, panel, _)| (id, panel))
        .collect();
    reflectors.sort_by(|a, b| a.0.cmp(b.0));
    let blockers = scene.blockers();
    let mut out: Vec<TracedPath> = Vec::new();
    let mut seq: Vec<usize> = Vec::new();

    struct Trace<'a> {
        reflectors: &'a [(&'a str, &'a crate::geom::RectPanel)],
        blockers: &'a [&'a crate::geom::RectPanel],
        tx: Vec3,
        rx: Vec3,
        f_c: f64,
        budget: &'a TraceBudget,
    }

    fn recurse(ctx: &Trace, depth: usize, seq: &mut Vec<usize>, out: &mut Vec<TracedPath>) {
        if depth == 0 {
            let panels: Vec<&crate::geom::RectPanel> =
                seq.iter().map(|&i| ctx.reflectors[i].1).collect();
            let Some(path) = trace_image_path(ctx.tx, ctx.rx, &panels) else {
                return;
            };
            if ctx.budget.min_path_gain_db.is_finite() {
                let g = spreading_gain(ctx.f_c, path.total_length)
                    .map(|a| 20.0 * a.log10())
                    .unwrap_or(f64::NEG_INFINITY);
                if g < ctx.budget.min_path_gain_db {
                    return;
                }
            }
            for w in path.vertices.windows(2) {
                if is_occluded(w[0], w[1], ctx.blockers) {
                    return;
                }
            }
            if out.iter().any(|t| same_geometry(&t.path, &path)) {
                return;
            }
            out.push(TracedPath {
                wall_ids: seq
                    .iter()
                    .map(|&i| ctx.reflectors[i].0.to_owned())
                    .collect(),
                path,
            });
            return;
        }
        for i in 0..ctx.reflectors.len() {
            if seq.last() == Some(&i) {
                continue;
            }
            seq.push(i);
            recurse(ctx, depth - 1, seq, out);
            seq.pop();
        }
    }

    let ctx = Trace {
        reflectors: &reflectors,
        blockers: &blockers,
        tx,
        rx,
        f_c: scene.f_c,
        budget,
    };
    for order in 1..=budget.max_order {
        recurse(&ctx, order, &mut seq, &mut out);
    }
    out
}

/// Turn a traced specular path into a channel component with the product
/// of per-bounce Fresnel coefficients for the walls' materials.
pub fn plain_path_component(
    traced: &TracedPath,
    scene: &Scene,
    polarization: Polarization,
) -> Result<PathComponent> {
    let mut refl = Complex64::new(1.0, 0.0);
    for (k, wall_id) in traced.wall_ids.iter().enumerate() {
        let wall = scene
            .walls
            .iter()
            .find(|w| &w.id == wall_id)
            .ok_or_else(|| Error::SceneValidation(format!("unknown wall id {wall_id}")))?;
        let eps = complex_permittivity(&wall.material, scene.f_c)?;
        refl *= fresnel_reflection(eps, traced.path.incidence_angles[k], polarization)?;
    }
    let spread = spreading_gain(scene.f_c, traced.path.total_length)?;
    let delay = path_delay(traced.path.total_length)?;
    let n = traced.path.vertices.len();
    let u = (traced.path.vertices[n - 2] - traced.path.vertices[n - 1]).normalized()?;
    let carrier = Complex64::from_polar(spread, -std::f64::consts::TAU * scene.f_c * delay);
    Ok(PathComponent {
        kind: ComponentKind::PlainReflected,
        gain: refl * carrier,
        delay,
        aoa_elevation: u.z.clamp(-1.0, 1.0).asin(),
        aoa_azimuth: u.y.atan2(u.x),
        bounce_count: traced.wall_ids.len(),
        via_ids: traced.wall_ids.clone(),
    })
}

/// Received power over the plain-wall baseline: line of sight plus every
/// specular reflection within the budget.
pub fn plain_received_power(
    scene: &Scene,
    tx: Vec3,
    rx: Vec3,
    budget: &TraceBudget,
    polarization: Polarization,
    aggregation: crate::channel::Aggregation,
) -> Result<f64> {
    let opts = crate::channel::SimOptions {
        mode: crate::channel::SimMode::PlainBaseline,
        polarization,
        budget: budget.clone(),
        ..Default::default()
    };
    let cr = crate::channel::assemble_cir(scene, tx, rx, crate::hsf::CoeffTable::builtin(), &opts)?;
    Ok(crate::channel::received_power(
        &cr,
        scene.p_tx_dbmw,
        aggregation,
    ))
}
