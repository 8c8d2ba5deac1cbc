//! Vectors, rectangular panels, and specular-reflection geometry.
//!
//! Everything downstream builds on three primitives defined here: the mirror
//! image of a point in a panel's plane, the image-method walk-back that turns
//! an ordered panel sequence into a concrete reflection path, and the
//! open-segment occlusion test used to reject blocked paths.
//!
//! Conventions: lengths in metres, angles in radians, incidence angles
//! measured from the panel normal (0 = head-on). A panel reflects only rays
//! arriving from the side its normal points into, but it blocks segments from
//! both sides.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Segment parameter tolerance: crossings closer than this to an endpoint do
/// not count as occlusion, so a path may start or end on a panel it bounced
/// off without shadowing itself.
const T_EPS: f64 = 1e-9;

/// In-plane containment slack in metres.
const RECT_EPS: f64 = 1e-9;

// ── vectors ──────────────────────────────────────────────────────────────

/// Cartesian point or direction. Serialises as a `[x, y, z]` triple.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl From<[f64; 3]> for Vec3 {
    fn from(a: [f64; 3]) -> Self {
        Vec3 {
            x: a[0],
            y: a[1],
            z: a[2],
        }
    }
}

impl From<Vec3> for [f64; 3] {
    fn from(v: Vec3) -> Self {
        [v.x, v.y, v.z]
    }
}

impl Vec3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3 {
            x: self.y * o.z - self.z * o.y,
            y: self.z * o.x - self.x * o.z,
            z: self.x * o.y - self.y * o.x,
        }
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn dist(self, o: Vec3) -> f64 {
        (self - o).norm()
    }

    pub fn normalized(self) -> Result<Vec3> {
        let n = self.norm();
        if n < 1e-12 {
            return Err(Error::ZeroVector);
        }
        Ok(self * (1.0 / n))
    }
}

impl std::ops::Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl std::ops::Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl std::ops::Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl std::ops::Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

// ── panels ───────────────────────────────────────────────────────────────

/// Planar rectangle spanned by two orthogonal edges from a corner.
///
/// The outward normal is `edge_u × edge_v`, normalised. Construction rejects
/// zero-area rectangles and non-orthogonal edge pairs instead of letting bad
/// geometry surface as NaN angles later.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RectPanel {
    pub origin: Vec3,
    pub edge_u: Vec3,
    pub edge_v: Vec3,
}

impl RectPanel {
    pub fn new(origin: Vec3, edge_u: Vec3, edge_v: Vec3) -> Result<Self> {
        let (lu, lv) = (edge_u.norm(), edge_v.norm());
        if lu < 1e-9 || lv < 1e-9 {
            return Err(Error::DegeneratePanel(format!(
                "edge lengths {lu:.3e} m x {lv:.3e} m"
            )));
        }
        if edge_u.dot(edge_v).abs() > 1e-9 * lu * lv {
            return Err(Error::DegeneratePanel(format!(
                "edges are not orthogonal (u.v = {:.3e})",
                edge_u.dot(edge_v)
            )));
        }
        Ok(RectPanel {
            origin,
            edge_u,
            edge_v,
        })
    }

    /// Unit outward normal (`edge_u × edge_v` direction).
    pub fn normal(&self) -> Vec3 {
        self.edge_u
            .cross(self.edge_v)
            .normalized()
            .expect("validated panel has nonzero area")
    }

    pub fn area(&self) -> f64 {
        self.edge_u.cross(self.edge_v).norm()
    }

    pub fn center(&self) -> Vec3 {
        self.origin + self.edge_u * 0.5 + self.edge_v * 0.5
    }

    /// Signed distance from the panel plane, positive on the normal side.
    pub fn plane_distance(&self, p: Vec3) -> f64 {
        (p - self.origin).dot(self.normal())
    }

    /// Mirror image of `p` in the panel's (infinite) plane.
    pub fn mirror_point(&self, p: Vec3) -> Vec3 {
        let n = self.normal();
        p - n * (2.0 * (p - self.origin).dot(n))
    }

    /// Rectangle coordinates of an (assumed in-plane) point, in units of the
    /// edge lengths, so containment is `0 <= u,v <= 1`.
    pub fn local_uv(&self, p: Vec3) -> (f64, f64) {
        let r = p - self.origin;
        (
            r.dot(self.edge_u) / self.edge_u.dot(self.edge_u),
            r.dot(self.edge_v) / self.edge_v.dot(self.edge_v),
        )
    }

    /// True when `p` lies on the rectangle (plane and bounds, inclusive).
    pub fn contains(&self, p: Vec3) -> bool {
        if self.plane_distance(p).abs() > RECT_EPS {
            return false;
        }
        let (u, v) = self.local_uv(p);
        let (eu, ev) = (RECT_EPS / self.edge_u.norm(), RECT_EPS / self.edge_v.norm());
        (-eu..=1.0 + eu).contains(&u) && (-ev..=1.0 + ev).contains(&v)
    }

    /// Crossing of the open segment `(a, b)` with the rectangle, if any.
    /// Endpoints touching the plane are excluded, so a ray leaving a bounce
    /// point on this panel is not considered blocked by it.
    pub fn intersect_segment(&self, a: Vec3, b: Vec3) -> Option<Vec3> {
        let n = self.normal();
        let d = b - a;
        let denom = d.dot(n);
        if denom.abs() < 1e-12 * d.norm().max(1e-300) {
            return None; // parallel, in-plane or off-plane
        }
        let t = (self.origin - a).dot(n) / denom;
        if t <= T_EPS || t >= 1.0 - T_EPS {
            return None;
        }
        let p = a + d * t;
        let (u, v) = self.local_uv(p);
        let (eu, ev) = (RECT_EPS / self.edge_u.norm(), RECT_EPS / self.edge_v.norm());
        if (-eu..=1.0 + eu).contains(&u) && (-ev..=1.0 + ev).contains(&v) {
            Some(p)
        } else {
            None
        }
    }

    /// True when this rectangle's interior meets `other`'s rectangle.
    ///
    /// Used by scene validation to catch walls that cut through each other.
    /// Parallel (including coplanar) rectangles never intersect here; both
    /// rectangles are shrunk by `eps` so edge-on-edge contact does not count.
    pub fn intersects_rect_interior(&self, other: &RectPanel, eps: f64) -> bool {
        let (n1, n2) = (self.normal(), other.normal());
        let dir = n1.cross(n2);
        if dir.norm() < 1e-9 {
            return false;
        }
        // A point on the intersection line of the two planes.
        let (d1, d2) = (n1.dot(self.origin), n2.dot(other.origin));
        let n12 = n1.dot(n2);
        let det = 1.0 - n12 * n12;
        let (c1, c2) = ((d1 - d2 * n12) / det, (d2 - d1 * n12) / det);
        let p0 = n1 * c1 + n2 * c2;
        let dir = dir.normalized().expect("non-parallel planes");

        // Clip the line p0 + t*dir against each rectangle's (u, v) slab.
        let clip = |panel: &RectPanel, margin: f64| -> Option<(f64, f64)> {
            let mut lo = f64::NEG_INFINITY;
            let mut hi = f64::INFINITY;
            for (edge, m) in [(panel.edge_u, margin), (panel.edge_v, margin)] {
                let len2 = edge.dot(edge);
                let s0 = (p0 - panel.origin).dot(edge) / len2;
                let ds = dir.dot(edge) / len2;
                let m = m / len2.sqrt();
                if ds.abs() < 1e-15 {
                    if s0 < m || s0 > 1.0 - m {
                        return None;
                    }
                } else {
                    let (t0, t1) = ((m - s0) / ds, (1.0 - m - s0) / ds);
                    lo = lo.max(t0.min(t1));
                    hi = hi.min(t0.max(t1));
                }
            }
            (lo < hi).then_some((lo, hi))
        };
        match (clip(self, eps), clip(other, eps)) {
            (Some((a0, a1)), Some((b0, b1))) => a0.max(b0) < a1.min(b1) - 1e-12,
            _ => false,
        }
    }

    /// True when this rectangle and a coplanar `other` share positive area.
    ///
    /// Complements `intersects_rect_interior`, which only handles crossing
    /// planes. Rectangles in different planes never overlap here, and
    /// edge-to-edge contact within `eps` does not count.
    pub fn overlaps_coplanar(&self, other: &RectPanel, eps: f64) -> bool {
        let (n1, n2) = (self.normal(), other.normal());
        if n1.cross(n2).norm() > 1e-9 {
            return false;
        }
        if (other.origin - self.origin).dot(n1).abs() > eps.max(RECT_EPS) {
            return false;
        }
        // Separating-axis test over both rectangles' edge directions.
        let corners = |p: &RectPanel| {
            [
                p.origin,
                p.origin + p.edge_u,
                p.origin + p.edge_v,
                p.origin + p.edge_u + p.edge_v,
            ]
        };
        let (ca, cb) = (corners(self), corners(other));
        for axis in [self.edge_u, self.edge_v, other.edge_u, other.edge_v] {
            let a = axis.normalized().expect("panel edges are nonzero");
            let span = |cs: &[Vec3; 4]| {
                cs.iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), c| {
                        let v = c.dot(a);
                        (lo.min(v), hi.max(v))
                    })
            };
            let (a0, a1) = span(&ca);
            let (b0, b1) = span(&cb);
            if a0.max(b0) >= a1.min(b1) - eps {
                return false;
            }
        }
        true
    }
}

/// Angle in `[0, pi/2]` between an incoming direction and the panel normal.
pub fn incidence_angle(direction: Vec3, panel: &RectPanel) -> Result<f64> {
    let d = direction.normalized()?;
    let c = d.dot(panel.normal()).abs().min(1.0);
    Ok(c.acos())
}

/// True when the open segment `(a, b)` crosses any blocker rectangle.
pub fn is_occluded(a: Vec3, b: Vec3, blockers: &[&RectPanel]) -> bool {
    blockers.iter().any(|p| p.intersect_segment(a, b).is_some())
}

// ── specular paths ───────────────────────────────────────────────────────

/// A concrete reflection path: ordered vertices from transmitter to receiver
/// with per-segment lengths and per-bounce incidence angles.
#[derive(Debug, Clone, PartialEq)]
pub struct GeometricPath {
    /// `[tx, bounce_1, .., bounce_n, rx]`.
    pub vertices: Vec<Vec3>,
    pub segment_lengths: Vec<f64>,
    pub total_length: f64,
    /// One entry per bounce, measured from the bounced panel's normal.
    pub incidence_angles: Vec<f64>,
}

impl GeometricPath {
    /// Build a path from known vertices, computing lengths. Incidence angles
    /// are taken against the supplied per-bounce normals.
    pub fn from_vertices(vertices: Vec<Vec3>, bounce_normals: &[Vec3]) -> Result<Self> {
        assert_eq!(
            vertices.len(),
            bounce_normals.len() + 2,
            "one normal per interior vertex"
        );
        let segment_lengths: Vec<f64> = vertices.windows(2).map(|w| w[0].dist(w[1])).collect();
        let total_length = segment_lengths.iter().sum();
        let mut incidence_angles = Vec::with_capacity(bounce_normals.len());
        for (k, n) in bounce_normals.iter().enumerate() {
            let d = (vertices[k + 1] - vertices[k]).normalized()?;
            incidence_angles.push(d.dot(*n).abs().min(1.0).acos());
        }
        Ok(GeometricPath {
            vertices,
            segment_lengths,
            total_length,
            incidence_angles,
        })
    }
}

/// Unique specular path bouncing off `panels` in order, or `None` when the
/// mirror construction places a bounce outside its rectangle, hits a panel
/// from behind, or degenerates.
///
/// Occlusion by other scene geometry is deliberately out of scope here; the
/// caller knows the blocker set.
pub fn trace_image_path(tx: Vec3, rx: Vec3, panels: &[&RectPanel]) -> Option<GeometricPath> {
    // Forward pass: iterated mirror images of the transmitter.
    let mut images = Vec::with_capacity(panels.len() + 1);
    images.push(tx);
    for p in panels {
        let last = *images.last().expect("seeded with tx");
        images.push(p.mirror_point(last));
    }

    // Backward pass: peel bounce points off from the receiver side.
    let mut point = rx;
    let mut bounces = vec![Vec3::new(0.0, 0.0, 0.0); panels.len()];
    for k in (0..panels.len()).rev() {
        let img = images[k + 1];
        let d = point - img;
        let n = panels[k].normal();
        let denom = d.dot(n);
        if denom.abs() < 1e-12 {
            return None;
        }
        let t = (panels[k].origin - img).dot(n) / denom;
        if t <= T_EPS || t >= 1.0 - T_EPS {
            return None;
        }
        let b = img + d * t;
        if !panels[k].contains(b) {
            return None;
        }
        bounces[k] = b;
        point = b;
    }

    // Physical side check: every bounce must be approached from the front.
    let mut vertices = Vec::with_capacity(panels.len() + 2);
    vertices.push(tx);
    vertices.extend(bounces.iter().copied());
    vertices.push(rx);
    for (k, p) in panels.iter().enumerate() {
        let incoming = vertices[k + 1] - vertices[k];
        if incoming.dot(p.normal()) >= -1e-12 * incoming.norm() {
            return None;
        }
    }

    let normals: Vec<Vec3> = panels.iter().map(|p| p.normal()).collect();
    GeometricPath::from_vertices(vertices, &normals).ok()
}
