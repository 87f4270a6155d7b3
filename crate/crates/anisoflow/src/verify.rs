//! The inequality suite: the main lower bound on the maximal anisotropic
//! curvature, the Wulff-Gage inequality and its chain form, the anisotropic
//! isoperimetric inequality, the equality-case gap metric, and seeded batch
//! sweeps over generated curves.

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;

use crate::anisotropy::Anisotropy;
use crate::curve::{CurveGeometry, PolylineCurve, DEFAULT_CONVEXITY_TOL};
use crate::error::{Error, Result};
use crate::gen::{self, GenSpec};
use crate::spectral::TWO_PI;
use crate::vec2::Vec2;

/// Floor for the denominator of relative margins.
const REL_EPS: f64 = 1e-12;

/// Outcome of a single inequality or identity check.
///
/// Two encodings share the struct. An inequality `lhs >= rhs` stores both
/// sides directly. An identity checked through a residual stores `lhs = 0`
/// and `rhs = residual`, so the shared pass rule `margin >= -tolerance`
/// reads "the residual does not exceed the tolerance".
#[derive(Clone, Debug, PartialEq)]
pub struct InequalityReport {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs - rhs`.
    pub margin: f64,
    /// `margin / max(|rhs|, eps)`.
    pub relative_margin: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub context: String,
}

impl InequalityReport {
    pub fn inequality(name: &str, lhs: f64, rhs: f64, tolerance: f64, context: &str) -> Self {
        let margin = lhs - rhs;
        InequalityReport {
            name: name.to_string(),
            lhs,
            rhs,
            margin,
            relative_margin: margin / rhs.abs().max(REL_EPS),
            tolerance,
            pass: margin >= -tolerance,
            context: context.to_string(),
        }
    }

    pub fn residual(name: &str, residual: f64, tolerance: f64, context: &str) -> Self {
        InequalityReport::inequality(name, 0.0, residual, tolerance, context)
    }
}

impl fmt::Display for InequalityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: {} (lhs {:.6e}, rhs {:.6e}, margin {:.3e}, rel {:.3e}, tol {:.3e}) [{}]",
            self.name,
            if self.pass { "pass" } else { "FAIL" },
            self.lhs,
            self.rhs,
            self.margin,
            self.relative_margin,
            self.tolerance,
            self.context
        )
    }
}

/// Tolerance scaling shared by the discretized inequalities: a fixed relative
/// floor plus an `O(M^-2)` slack, so refining the curve tightens the test.
fn discretization_tolerance(rhs: f64, m: usize, slack: f64) -> f64 {
    rhs.abs() * (1e-6 + slack * (TWO_PI / m as f64).powi(2))
}

fn context_of(c: &PolylineCurve, a: &Anisotropy) -> String {
    format!("{}; M={}", a.label(), c.len())
}

/// The central bound: `max |kF| >= sqrt(kappa / A)`, with equality exactly
/// on Wulff shapes.
pub fn main_inequality(c: &PolylineCurve, a: &Anisotropy) -> InequalityReport {
    let geo = c.geometry(a);
    let lhs = geo.kf_max();
    let rhs = (a.wulff_area() / geo.area).sqrt();
    let tol = discretization_tolerance(rhs, c.len(), 2.0);
    InequalityReport::inequality("main-inequality", lhs, rhs, tol, &context_of(c, a))
}

/// Wulff-Gage inequality for convex curves:
/// `integral (kF)^2 F(nu) ds >= kappa P_F / A`.
pub fn wulff_gage(c: &PolylineCurve, a: &Anisotropy) -> Result<InequalityReport> {
    if !c.is_convex(a, DEFAULT_CONVEXITY_TOL) {
        return Err(Error::NotConvex(
            "wulff_gage precondition: convex curve required".to_string(),
        ));
    }
    let geo = c.geometry(a);
    let lhs = curvature_energy(&geo);
    let rhs = a.wulff_area() * geo.aniso_perimeter / geo.area;
    let tol = discretization_tolerance(rhs, c.len(), 8.0);
    Ok(InequalityReport::inequality(
        "wulff-gage",
        lhs,
        rhs,
        tol,
        &context_of(c, a),
    ))
}

/// `integral (kF)^2 F(nu) ds` by vertex-weighted quadrature.
fn curvature_energy(geo: &CurveGeometry) -> f64 {
    geo.integrate(|i| geo.aniso_curvature[i].powi(2) * geo.f_normal[i])
}

/// Anisotropic isoperimetric inequality `P_F >= 2 sqrt(kappa A)`.
pub fn isoperimetric(c: &PolylineCurve, a: &Anisotropy) -> InequalityReport {
    let pf = c.anisotropic_perimeter(a);
    let rhs = 2.0 * (a.wulff_area() * c.area()).sqrt();
    let tol = discretization_tolerance(rhs, c.len(), 4.0);
    InequalityReport::inequality("isoperimetric", pf, rhs, tol, &context_of(c, a))
}

/// The convex chain `kappa P_F / A <= integral (kF)^2 F(nu) <= (max kF)^2 P_F`.
/// Dividing the outer bound by `P_F` recovers the main inequality.
#[derive(Clone, Debug)]
pub struct ConvexChainReport {
    /// `kappa P_F / A`.
    pub lower: f64,
    /// `integral (kF)^2 F(nu) ds`.
    pub energy: f64,
    /// `(max kF)^2 P_F`.
    pub upper: f64,
    pub links: [InequalityReport; 2],
}

impl ConvexChainReport {
    pub fn pass(&self) -> bool {
        self.links.iter().all(|l| l.pass)
    }
}

pub fn convex_chain(c: &PolylineCurve, a: &Anisotropy) -> Result<ConvexChainReport> {
    if !c.is_convex(a, DEFAULT_CONVEXITY_TOL) {
        return Err(Error::NotConvex(
            "convex_chain precondition: convex curve required".to_string(),
        ));
    }
    let geo = c.geometry(a);
    let lower = a.wulff_area() * geo.aniso_perimeter / geo.area;
    let energy = curvature_energy(&geo);
    let upper = geo.kf_max().powi(2) * geo.aniso_perimeter;
    let ctx = context_of(c, a);
    let links = [
        InequalityReport::inequality(
            "chain-lower",
            energy,
            lower,
            discretization_tolerance(lower, c.len(), 8.0),
            &ctx,
        ),
        InequalityReport::inequality(
            "chain-upper",
            upper,
            energy,
            discretization_tolerance(energy, c.len(), 8.0),
            &ctx,
        ),
    ];
    Ok(ConvexChainReport {
        lower,
        energy,
        upper,
        links,
    })
}

/// Shape distance to the Wulff equality case: rescale the curve to area
/// `kappa`, recenter at its centroid, and return the symmetric Hausdorff
/// distance to the Wulff boundary, normalized by the Wulff diameter.
pub fn equality_gap(c: &PolylineCurve, a: &Anisotropy) -> Result<f64> {
    let scale = (a.wulff_area() / c.area()).sqrt();
    let scaled = c.scaled(scale)?;
    let centered = scaled.translated(-scaled.centroid());
    let wulff = a.wulff_boundary(c.len())?;
    let (_, b) = a.bounds();
    Ok(hausdorff_distance(&centered, &wulff) / (2.0 * b))
}

/// Symmetric Hausdorff distance, vertices of each curve against the other
/// curve's segments.
pub fn hausdorff_distance(c1: &PolylineCurve, c2: &PolylineCurve) -> f64 {
    one_sided_hausdorff(c1, c2).max(one_sided_hausdorff(c2, c1))
}

fn one_sided_hausdorff(from: &PolylineCurve, to: &PolylineCurve) -> f64 {
    from.vertices()
        .iter()
        .map(|&p| point_to_polyline(p, to))
        .fold(0.0f64, f64::max)
}

fn point_to_polyline(p: Vec2, c: &PolylineCurve) -> f64 {
    let v = c.vertices();
    let n = v.len();
    (0..n)
        .map(|i| point_segment_distance(p, v[i], v[(i + 1) % n]))
        .fold(f64::INFINITY, f64::min)
}

fn point_segment_distance(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let ab = b - a;
    let t = ((p - a).dot(ab) / ab.norm_sq()).clamp(0.0, 1.0);
    (a + t * ab).dist(p)
}

/// One curve's verdict within a batch.
#[derive(Clone, Debug)]
pub struct CurveVerdict {
    pub id: usize,
    pub seed: u64,
    pub convex: bool,
    pub reports: Vec<InequalityReport>,
    pub gap: f64,
}

#[derive(Clone, Debug)]
pub struct BatchFailure {
    pub id: usize,
    pub seed: u64,
    pub name: String,
}

#[derive(Clone, Debug)]
pub struct BatchSummary {
    pub n: usize,
    pub verdicts: Vec<CurveVerdict>,
    pub failures: Vec<BatchFailure>,
    /// Worst relative margin seen per report name.
    pub min_relative_margin: BTreeMap<String, f64>,
    /// `[min, q25, median, q75, max]` of relative margins per report name.
    pub quantiles: BTreeMap<String, [f64; 5]>,
}

/// Run the inequality suite over `n` curves drawn from the generator family,
/// with per-curve seeds mixed deterministically from `seed` and the curve
/// index. Parallel and serial runs produce identical summaries.
pub fn batch_verify(
    spec: &GenSpec,
    a: &Anisotropy,
    n: usize,
    seed: u64,
) -> Result<BatchSummary> {
    if n == 0 {
        return Err(Error::InvalidConfig(
            "batch size must be at least 1".to_string(),
        ));
    }
    let verdicts: Result<Vec<CurveVerdict>> = (0..n)
        .into_par_iter()
        .map(|id| {
            let curve_seed = gen::mix_seed(seed, id as u64);
            let curve = gen::generate(
                &GenSpec {
                    family: spec.family.clone(),
                    vertex_count: spec.vertex_count,
                    seed: curve_seed,
                },
                a,
            )?;
            Ok(verify_one(id, curve_seed, &curve, a)?)
        })
        .collect();
    let verdicts = verdicts?;

    let mut failures = Vec::new();
    let mut per_name: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for v in &verdicts {
        for r in &v.reports {
            per_name
                .entry(r.name.clone())
                .or_default()
                .push(r.relative_margin);
            if !r.pass {
                failures.push(BatchFailure {
                    id: v.id,
                    seed: v.seed,
                    name: r.name.clone(),
                });
            }
        }
    }

    let mut min_relative_margin = BTreeMap::new();
    let mut quantiles = BTreeMap::new();
    for (name, mut margins) in per_name {
        margins.sort_by(|a, b| a.total_cmp(b));
        let pick = |q: f64| margins[((margins.len() - 1) as f64 * q).round() as usize];
        min_relative_margin.insert(name.clone(), margins[0]);
        quantiles.insert(
            name,
            [margins[0], pick(0.25), pick(0.5), pick(0.75), margins[margins.len() - 1]],
        );
    }

    Ok(BatchSummary {
        n,
        verdicts,
        failures,
        min_relative_margin,
        quantiles,
    })
}

/// The per-curve portion of a batch: main + isoperimetric always, Wulff-Gage
/// and the chain on convex curves, the equality gap, and the cross-check
/// that near-equality margins only occur near the Wulff shape.
pub fn verify_one(
    id: usize,
    seed: u64,
    curve: &PolylineCurve,
    a: &Anisotropy,
) -> Result<CurveVerdict> {
    let convex = curve.is_convex(a, DEFAULT_CONVEXITY_TOL);
    let mut reports = vec![main_inequality(curve, a), isoperimetric(curve, a)];
    if convex {
        reports.push(wulff_gage(curve, a)?);
        reports.extend(convex_chain(curve, a)?.links);
    }
    let gap = equality_gap(curve, a)?;
    // Equality detection: a margin this small must mean the shape is, at
    // discrete resolution, a Wulff shape.
    if reports[0].relative_margin <= 1e-3 {
        reports.push(InequalityReport::inequality(
            "equality-detection",
            5e-2,
            gap,
            0.0,
            &format!("near-equality margin {:.3e}", reports[0].relative_margin),
        ));
    }
    Ok(CurveVerdict {
        id,
        seed,
        convex,
        reports,
        gap,
    })
}
