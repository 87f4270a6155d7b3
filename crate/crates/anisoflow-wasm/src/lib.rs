//! Browser bindings: Wulff outlines, single-curve verification, and
//! replayable flow sessions for the canvas demo page.

use anisoflow::flow::{run_flow, FlowConfig, FlowTrace};
use anisoflow::gen::{generate, GenSpec};
use anisoflow::io::anisotropy_from_json;
use anisoflow::verify::verify_one;
use anisoflow::{Anisotropy, PolylineCurve, Result};
use wasm_bindgen::prelude::*;

fn flatten(c: &PolylineCurve) -> Vec<f64> {
    c.vertices().iter().flat_map(|v| [v.x, v.y]).collect()
}

fn parse_curve_source(
    aniso_json: &str,
    family: &str,
    vertices: usize,
    seed: u32,
) -> Result<(Anisotropy, PolylineCurve)> {
    let a = anisotropy_from_json(aniso_json)?;
    let c = generate(
        &GenSpec {
            family: family.parse()?,
            vertex_count: vertices,
            seed: seed as u64,
        },
        &a,
    )?;
    Ok((a, c))
}

fn wulff_outline_impl(aniso_json: &str, vertices: usize) -> Result<Vec<f64>> {
    let a = anisotropy_from_json(aniso_json)?;
    Ok(flatten(&a.wulff_boundary(vertices)?))
}

fn verify_curve_impl(aniso_json: &str, family: &str, vertices: usize, seed: u32) -> Result<String> {
    let (a, c) = parse_curve_source(aniso_json, family, vertices, seed)?;
    let verdict = verify_one(0, seed as u64, &c, &a)?;
    let reports: Vec<serde_json::Value> = verdict
        .reports
        .iter()
        .map(|r| {
            serde_json::json!({
                "name": r.name,
                "lhs": r.lhs,
                "rhs": r.rhs,
                "margin": r.margin,
                "relative_margin": r.relative_margin,
                "tolerance": r.tolerance,
                "pass": r.pass,
            })
        })
        .collect();
    Ok(serde_json::json!({
        "curve": flatten(&c),
        "convex": verdict.convex,
        "equality_gap": verdict.gap,
        "kappa": a.wulff_area(),
        "reports": reports,
    })
    .to_string())
}

fn flow_session_impl(
    aniso_json: &str,
    family: &str,
    vertices: usize,
    seed: u32,
) -> Result<FlowTrace> {
    let (a, c) = parse_curve_source(aniso_json, family, vertices, seed)?;
    let cfg = FlowConfig {
        area_stop_fraction: 0.05,
        snapshot_stride: 20,
        max_steps: 400_000,
        ..FlowConfig::default()
    };
    run_flow(c.into(), &a, &cfg)
}

/// Boundary of the unit Wulff shape as flattened `[x0, y0, x1, y1, ...]`.
#[wasm_bindgen]
pub fn wulff_outline(aniso_json: &str, vertices: usize) -> std::result::Result<Vec<f64>, JsError> {
    Ok(wulff_outline_impl(aniso_json, vertices)?)
}

/// Area of the unit Wulff shape.
#[wasm_bindgen]
pub fn wulff_kappa(aniso_json: &str) -> std::result::Result<f64, JsError> {
    Ok(anisotropy_from_json(aniso_json)?.wulff_area())
}

/// Generate a curve from a seeded family, run the full inequality suite, and
/// return the curve plus one record per report as a JSON string.
#[wasm_bindgen]
pub fn verify_curve(
    aniso_json: &str,
    family: &str,
    vertices: usize,
    seed: u32,
) -> std::result::Result<String, JsError> {
    Ok(verify_curve_impl(aniso_json, family, vertices, seed)?)
}

/// A finished flow run held in memory; the page replays its frames.
#[wasm_bindgen]
pub struct FlowSession {
    trace: FlowTrace,
}

#[wasm_bindgen]
impl FlowSession {
    /// Run the anisotropic curvature flow for a generated curve down to 5%
    /// of the initial area and keep one frame every 20 steps.
    #[wasm_bindgen(constructor)]
    pub fn new(
        aniso_json: &str,
        family: &str,
        vertices: usize,
        seed: u32,
    ) -> std::result::Result<FlowSession, JsError> {
        Ok(FlowSession {
            trace: flow_session_impl(aniso_json, family, vertices, seed)?,
        })
    }

    pub fn frames(&self) -> usize {
        self.trace.samples.len()
    }

    /// Snapshot polyline of one frame, flattened `[x0, y0, ...]`.
    pub fn outline(&self, frame: usize) -> Vec<f64> {
        let i = frame.min(self.trace.snapshots.len() - 1);
        flatten(&self.trace.snapshots[i].1)
    }

    /// Per-frame scalars as a JSON string.
    pub fn stats(&self, frame: usize) -> String {
        let i = frame.min(self.trace.samples.len() - 1);
        let s = &self.trace.samples[i];
        serde_json::json!({
            "t": s.t,
            "area": s.area,
            "aniso_perimeter": s.aniso_perimeter,
            "kf_max": s.kf_max,
            "kf_u_max": s.kf_u_max,
            "convex": s.convex,
        })
        .to_string()
    }

    /// Run-level facts: stop reason, kappa, initial area, the self-similar
    /// target sqrt(kappa / A0), and the convexification time if any.
    pub fn summary(&self) -> String {
        serde_json::json!({
            "stop_reason": self.trace.stop_reason.to_string(),
            "kappa": self.trace.kappa,
            "initial_area": self.trace.initial_area,
            "target": (self.trace.kappa / self.trace.initial_area).sqrt(),
            "first_convex_time": self.trace.first_convex_time(),
            "frames": self.trace.samples.len(),
        })
        .to_string()
    }
}
