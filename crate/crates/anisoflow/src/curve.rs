//! Discrete closed curves and their pointwise/integral geometry.
//!
//! Two representations: `PolylineCurve` for general Jordan curves (closed
//! implicitly, counterclockwise, validated simple at construction) and
//! `ConvexSupportCurve` for strictly convex curves stored as a support
//! function on the uniform normal-angle grid.
//!
//! Orientation convention: the outward normal is the tangent rotated by
//! -pi/2, so the Euclidean curvature is positive on convex arcs and equals
//! 1/R on a counterclockwise circle of radius R.

use std::collections::HashMap;

use crate::anisotropy::Anisotropy;
use crate::error::{Error, Result};
use crate::spectral::{PeriodicField, TWO_PI};
use crate::vec2::Vec2;

pub const DEFAULT_CONVEXITY_TOL: f64 = 1e-3;

/// A closed polyline: `vertices[i]` connects to `vertices[i+1]` and the last
/// vertex closes back to the first.
#[derive(Clone, Debug, PartialEq)]
pub struct PolylineCurve {
    vertices: Vec<Vec2>,
}

impl PolylineCurve {
    /// Validate and wrap a vertex list: at least 8 vertices, finite
    /// coordinates, no degenerate edges, counterclockwise, simple.
    pub fn new(vertices: Vec<Vec2>) -> Result<Self> {
        if vertices.len() < 8 {
            return Err(Error::InvalidCurve(format!(
                "at least 8 vertices required, got {}",
                vertices.len()
            )));
        }
        for (i, v) in vertices.iter().enumerate() {
            if !v.x.is_finite() || !v.y.is_finite() {
                return Err(Error::InvalidCurveAt {
                    index: i,
                    reason: "non-finite coordinate".to_string(),
                });
            }
        }

        let diameter = bounding_diameter(&vertices);
        let min_edge = 1e-12 * diameter;
        let n = vertices.len();
        for i in 0..n {
            let edge = vertices[(i + 1) % n] - vertices[i];
            if edge.norm() <= min_edge {
                return Err(Error::InvalidCurveAt {
                    index: i,
                    reason: format!(
                        "degenerate edge (length {:.3e} vs diameter {:.3e})",
                        edge.norm(),
                        diameter
                    ),
                });
            }
        }

        let area2: f64 = (0..n)
            .map(|i| vertices[i].cross(vertices[(i + 1) % n]))
            .sum();
        if area2 <= 0.0 {
            return Err(Error::InvalidCurve(format!(
                "orientation must be counterclockwise (signed area {:.3e})",
                0.5 * area2
            )));
        }

        if let Some((i, j)) = first_self_intersection(&vertices) {
            return Err(Error::InvalidCurveAt {
                index: i,
                reason: format!("edge {i} intersects edge {j}"),
            });
        }

        Ok(PolylineCurve { vertices })
    }

    pub fn vertices(&self) -> &[Vec2] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Enclosed (shoelace) area; positive by the orientation invariant.
    pub fn area(&self) -> f64 {
        let n = self.vertices.len();
        0.5 * (0..n)
            .map(|i| self.vertices[i].cross(self.vertices[(i + 1) % n]))
            .sum::<f64>()
    }

    /// Euclidean perimeter.
    pub fn length(&self) -> f64 {
        let n = self.vertices.len();
        (0..n)
            .map(|i| (self.vertices[(i + 1) % n] - self.vertices[i]).norm())
            .sum()
    }

    /// Area centroid of the enclosed polygon.
    pub fn centroid(&self) -> Vec2 {
        let n = self.vertices.len();
        let mut twice_area = 0.0;
        let mut acc = Vec2::ZERO;
        for i in 0..n {
            let p = self.vertices[i];
            let q = self.vertices[(i + 1) % n];
            let w = p.cross(q);
            twice_area += w;
            acc += w * (p + q);
        }
        acc / (3.0 * twice_area)
    }

    pub fn translated(&self, offset: Vec2) -> PolylineCurve {
        PolylineCurve {
            vertices: self.vertices.iter().map(|&v| v + offset).collect(),
        }
    }

    /// Scale about the origin; positive factors preserve all invariants.
    pub fn scaled(&self, factor: f64) -> Result<PolylineCurve> {
        if !(factor.is_finite() && factor > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "scale factor must be positive, got {factor}"
            )));
        }
        Ok(PolylineCurve {
            vertices: self.vertices.iter().map(|&v| v * factor).collect(),
        })
    }

    /// Full pointwise geometry with respect to an anisotropy.
    pub fn geometry(&self, a: &Anisotropy) -> CurveGeometry {
        compute_geometry(self, a)
    }

    /// `max_i |kF_i|`: the L-infinity norm of the anisotropic curvature.
    pub fn max_anisotropic_curvature(&self, a: &Anisotropy) -> f64 {
        self.geometry(a).kf_max()
    }

    /// `P_F = sum F(edge normal) * edge length`; exact for polygons because
    /// `F(nu)` is constant along each straight edge.
    pub fn anisotropic_perimeter(&self, a: &Anisotropy) -> f64 {
        let n = self.vertices.len();
        (0..n)
            .map(|i| {
                let edge = self.vertices[(i + 1) % n] - self.vertices[i];
                // Outward edge normal = edge direction rotated by -pi/2; F is
                // 1-homogeneous so F(edge rotated)/|edge| * |edge| = F(rotated edge).
                a.norm(Vec2::new(edge.y, -edge.x))
            })
            .sum()
    }

    /// Convexity test: `min k >= -tol * max |k|`, tolerating discretization
    /// noise around inflection-free arcs.
    pub fn is_convex(&self, a: &Anisotropy, tol: f64) -> bool {
        let geo = self.geometry(a);
        let max_abs = geo
            .curvature
            .iter()
            .fold(0.0f64, |m, &k| m.max(k.abs()));
        let min = geo.curvature.iter().cloned().fold(f64::INFINITY, f64::min);
        min >= -tol * max_abs
    }

    /// Redistribute to `m` vertices at uniform arc-length spacing by linear
    /// interpolation along the polyline. Vertex 0 is preserved.
    pub fn resample(&self, m: usize) -> Result<PolylineCurve> {
        if m < 8 {
            return Err(Error::InvalidConfig(format!(
                "resample target must be at least 8, got {m}"
            )));
        }
        let n = self.vertices.len();
        let mut cum = Vec::with_capacity(n + 1);
        cum.push(0.0);
        for i in 0..n {
            let step = (self.vertices[(i + 1) % n] - self.vertices[i]).norm();
            cum.push(cum[i] + step);
        }
        let total = cum[n];
        let mut out = Vec::with_capacity(m);
        let mut seg = 0usize;
        for j in 0..m {
            let target = total * j as f64 / m as f64;
            while seg + 1 < n && cum[seg + 1] <= target {
                seg += 1;
            }
            let span = cum[seg + 1] - cum[seg];
            let t = if span > 0.0 { (target - cum[seg]) / span } else { 0.0 };
            let a = self.vertices[seg];
            let b = self.vertices[(seg + 1) % n];
            out.push(a + t * (b - a));
        }
        PolylineCurve::new(out)
    }

    /// Support samples `h(theta_i) = max_j <p_j, e(theta_i)>` on a uniform
    /// grid of `n` angles: the support function of the vertex hull.
    pub fn support_samples(&self, n: usize) -> Result<PeriodicField> {
        PeriodicField::new(
            (0..n)
                .map(|i| {
                    let e = Vec2::from_angle(TWO_PI * i as f64 / n as f64);
                    self.vertices
                        .iter()
                        .map(|p| p.dot(e))
                        .fold(f64::NEG_INFINITY, f64::max)
                })
                .collect(),
        )
    }

    /// Signed curvature from the circumcircle through each vertex triple; an
    /// independent estimator kept for cross-checking the normal-angle route.
    pub fn circumcircle_curvature(&self) -> Vec<f64> {
        let n = self.vertices.len();
        (0..n)
            .map(|i| {
                let a = self.vertices[(i + n - 1) % n];
                let b = self.vertices[i];
                let c = self.vertices[(i + 1) % n];
                let ab = b - a;
                let ac = c - a;
                let bc = c - b;
                let denom = ab.norm() * ac.norm() * bc.norm();
                if denom == 0.0 {
                    0.0
                } else {
                    2.0 * ab.cross(ac) / denom
                }
            })
            .collect()
    }
}

/// True iff no two non-adjacent edges of the closed polyline intersect.
pub fn is_simple(vertices: &[Vec2]) -> bool {
    first_self_intersection(vertices).is_none()
}

/// Locate a pair of intersecting non-adjacent edges, if any. Broad phase: a
/// uniform hash grid with cells the size of the longest edge, so any
/// intersecting pair shares a cell; narrow phase: exact segment test.
fn first_self_intersection(vertices: &[Vec2]) -> Option<(usize, usize)> {
    let n = vertices.len();
    let edge = |i: usize| (vertices[i], vertices[(i + 1) % n]);
    let cell = (0..n)
        .map(|i| {
            let (a, b) = edge(i);
            (b - a).norm()
        })
        .fold(0.0f64, f64::max)
        .max(f64::MIN_POSITIVE);

    let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    let key = |v: f64| (v / cell).floor() as i64;
    for i in 0..n {
        let (a, b) = edge(i);
        let (x0, x1) = (key(a.x.min(b.x)), key(a.x.max(b.x)));
        let (y0, y1) = (key(a.y.min(b.y)), key(a.y.max(b.y)));
        for gx in x0..=x1 {
            for gy in y0..=y1 {
                grid.entry((gx, gy)).or_default().push(i);
            }
        }
    }

    for bucket in grid.values() {
        for (s, &i) in bucket.iter().enumerate() {
            for &j in &bucket[s + 1..] {
                let adjacent = (i + 1) % n == j || (j + 1) % n == i;
                if i == j || adjacent {
                    continue;
                }
                let (a, b) = edge(i);
                let (c, d) = edge(j);
                if segments_intersect(a, b, c, d) {
                    return Some((i.min(j), i.max(j)));
                }
            }
        }
    }
    None
}

/// Inclusive segment intersection: proper crossings, endpoint touches, and
/// collinear overlaps all count. Non-adjacent edges of a simple closed curve
/// must stay fully disjoint.
fn segments_intersect(p1: Vec2, p2: Vec2, p3: Vec2, p4: Vec2) -> bool {
    let orient = |a: Vec2, b: Vec2, c: Vec2| (b - a).cross(c - a);
    let on_segment = |a: Vec2, b: Vec2, p: Vec2| {
        p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
    };
    let d1 = orient(p3, p4, p1);
    let d2 = orient(p3, p4, p2);
    let d3 = orient(p1, p2, p3);
    let d4 = orient(p1, p2, p4);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(p3, p4, p1))
        || (d2 == 0.0 && on_segment(p3, p4, p2))
        || (d3 == 0.0 && on_segment(p1, p2, p3))
        || (d4 == 0.0 && on_segment(p1, p2, p4))
}

fn bounding_diameter(vertices: &[Vec2]) -> f64 {
    let mut lo = Vec2::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for v in vertices {
        lo.x = lo.x.min(v.x);
        lo.y = lo.y.min(v.y);
        hi.x = hi.x.max(v.x);
        hi.y = hi.y.max(v.y);
    }
    (hi - lo).norm()
}

/// Strictly convex curve stored as support-function samples `h(theta_i)` on
/// the uniform normal-angle grid.
#[derive(Clone, Debug)]
pub struct ConvexSupportCurve {
    h: PeriodicField,
    /// Discrete radius of curvature `h + h''` (spectral), kept alongside so
    /// construction and stepping share one evaluation.
    radius: PeriodicField,
}

impl ConvexSupportCurve {
    pub fn new(h: PeriodicField) -> Result<Self> {
        let radius = h.zip(&h.second_derivative(), |a, b| a + b);
        if radius.min() <= 0.0 {
            return Err(Error::NotConvex(format!(
                "support function has min(h + h'') = {:.6e}",
                radius.min()
            )));
        }
        Ok(ConvexSupportCurve { h, radius })
    }

    pub fn support(&self) -> &PeriodicField {
        &self.h
    }

    /// Radius of curvature `h + h''` on the grid.
    pub fn curvature_radius(&self) -> &PeriodicField {
        &self.radius
    }

    pub fn grid_size(&self) -> usize {
        self.h.len()
    }

    /// Enclosed area `(1/2) integral (h^2 - h'^2)`.
    pub fn area(&self) -> f64 {
        let dh = self.h.derivative();
        std::f64::consts::PI * self.h.zip(&dh, |a, b| a * a - b * b).mean()
    }

    /// Reconstruct the boundary: vertex `i` at
    /// `(h cos - h' sin, h sin + h' cos)(theta_i)`, the point with outward
    /// normal angle `theta_i`.
    pub fn to_polyline(&self) -> Result<PolylineCurve> {
        let dh = self.h.derivative();
        let pts = (0..self.h.len())
            .map(|i| {
                let t = self.h.theta(i);
                let e = Vec2::from_angle(t);
                self.h.values()[i] * e + dh.values()[i] * e.perp()
            })
            .collect();
        PolylineCurve::new(pts)
    }
}

/// Per-vertex differential geometry of a polyline curve, plus its integral
/// quantities. Arrays are indexed like the vertex list.
#[derive(Clone, Debug)]
pub struct CurveGeometry {
    /// Cumulative arc length, `s[0] = 0`.
    pub s: Vec<f64>,
    /// Vertex-centered arc-length weights (half the two incident edges).
    pub ds: Vec<f64>,
    /// Unit tangent.
    pub tangent: Vec<Vec2>,
    /// Outward unit normal, exactly the tangent rotated by -pi/2.
    pub normal: Vec<Vec2>,
    /// Normal angle, unwrapped continuously along the curve.
    pub normal_angle: Vec<f64>,
    /// Euclidean curvature `k = d theta / ds` by central differences.
    pub curvature: Vec<f64>,
    /// Anisotropic curvature `kF = (phi + phi'')(theta) * k`.
    pub aniso_curvature: Vec<f64>,
    /// `F(nu)` at the vertex normal.
    pub f_normal: Vec<f64>,
    pub length: f64,
    pub area: f64,
    pub aniso_perimeter: f64,
    /// Total turning of the normal over one loop; `2 pi` for simple
    /// counterclockwise curves.
    pub rotation_index: f64,
}

impl CurveGeometry {
    pub fn len(&self) -> usize {
        self.curvature.len()
    }

    pub fn is_empty(&self) -> bool {
        self.curvature.is_empty()
    }

    /// `max |kF|`.
    pub fn kf_max(&self) -> f64 {
        self.aniso_curvature
            .iter()
            .fold(0.0f64, |m, &k| m.max(k.abs()))
    }

    /// Signed minimum of `kF` (negative on concave arcs).
    pub fn kf_min(&self) -> f64 {
        self.aniso_curvature
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min)
    }

    /// Quadrature `sum f(i) * ds_i` of a per-vertex integrand over the curve.
    pub fn integrate(&self, f: impl Fn(usize) -> f64) -> f64 {
        (0..self.len()).map(|i| f(i) * self.ds[i]).sum()
    }
}

fn compute_geometry(c: &PolylineCurve, a: &Anisotropy) -> CurveGeometry {
    let v = c.vertices();
    let n = v.len();

    let mut edge_len = vec![0.0; n];
    let mut edges = vec![Vec2::ZERO; n];
    for i in 0..n {
        edges[i] = v[(i + 1) % n] - v[i];
        edge_len[i] = edges[i].norm();
    }

    // Vertex normal from the length-weighted average of adjacent unit edge
    // normals, i.e. the -pi/2 rotation of the position central difference
    // v[i+1] - v[i-1]. This keeps nu and tau an exact orthonormal pair.
    let mut normal = vec![Vec2::ZERO; n];
    let mut tangent = vec![Vec2::ZERO; n];
    for i in 0..n {
        let chord = edges[i] + edges[(i + n - 1) % n];
        let dir = chord.normalized().unwrap_or_else(|| {
            // Adjacent edges cancel (a hairpin); fall back to the outgoing
            // edge so downstream quantities stay finite.
            edges[i].normalized().unwrap_or(Vec2::new(1.0, 0.0))
        });
        tangent[i] = dir;
        normal[i] = Vec2::new(dir.y, -dir.x);
    }

    let mut normal_angle = vec![0.0; n];
    let mut turn = vec![0.0; n]; // wrapped angle increment from vertex i to i+1
    normal_angle[0] = normal[0].angle();
    for i in 0..n {
        let raw = normal[(i + 1) % n].angle() - normal[i].angle();
        turn[i] = wrap_to_pi(raw);
        if i + 1 < n {
            normal_angle[i + 1] = normal_angle[i] + turn[i];
        }
    }
    let rotation_index: f64 = turn.iter().sum();

    let mut s = vec![0.0; n];
    let mut ds = vec![0.0; n];
    for i in 0..n {
        if i + 1 < n {
            s[i + 1] = s[i] + edge_len[i];
        }
        ds[i] = 0.5 * (edge_len[i] + edge_len[(i + n - 1) % n]);
    }

    let mut curvature = vec![0.0; n];
    let mut aniso_curvature = vec![0.0; n];
    let mut f_normal = vec![0.0; n];
    for i in 0..n {
        let prev = (i + n - 1) % n;
        let span = edge_len[prev] + edge_len[i];
        curvature[i] = (turn[prev] + turn[i]) / span;
        aniso_curvature[i] = a.tangential_hessian(normal_angle[i]) * curvature[i];
        f_normal[i] = a.support(normal_angle[i]);
    }

    CurveGeometry {
        s,
        ds,
        tangent,
        normal,
        normal_angle,
        curvature,
        aniso_curvature,
        f_normal,
        length: edge_len.iter().sum(),
        area: c.area(),
        aniso_perimeter: c.anisotropic_perimeter(a),
        rotation_index,
    }
}

fn wrap_to_pi(angle: f64) -> f64 {
    let mut a = (angle + std::f64::consts::PI).rem_euclid(TWO_PI);
    if a < 0.0 {
        a += TWO_PI;
    }
    a - std::f64::consts::PI
}
