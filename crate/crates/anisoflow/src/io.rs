//! Structured-text file formats (anisotropy, curve, generator specs),
//! delimited tables (geometry, flow trace, batch summary), and an SVG
//! snapshot emitter with a fixed viewport.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::anisotropy::{Anisotropy, AnisotropyKind, FourierMode, DEFAULT_GRID};
use crate::curve::{CurveGeometry, PolylineCurve};
use crate::error::{Error, Result};
use crate::flow::{FlowTrace, TraceSample};
use crate::gen::GenSpec;
use crate::vec2::Vec2;
use crate::verify::BatchSummary;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AnisotropyFile {
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    c0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    modes: Option<Vec<(u32, f64, f64)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    phi: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    grid_size: Option<usize>,
}

pub fn anisotropy_from_json(text: &str) -> Result<Anisotropy> {
    let file: AnisotropyFile =
        serde_json::from_str(text).map_err(|e| Error::Format(format!("anisotropy file: {e}")))?;
    let kind_name = file.kind.clone();
    let reject_stray = |allowed: &[&str]| -> Result<()> {
        let present = [
            ("alpha", file.alpha.is_some()),
            ("beta", file.beta.is_some()),
            ("c0", file.c0.is_some()),
            ("modes", file.modes.is_some()),
            ("phi", file.phi.is_some()),
        ];
        for (name, set) in present {
            if set && !allowed.contains(&name) {
                return Err(Error::Format(format!(
                    "field '{name}' does not apply to kind '{kind_name}'"
                )));
            }
        }
        Ok(())
    };
    let require = |name: &str, v: Option<f64>| {
        v.ok_or_else(|| {
            Error::Format(format!(
                "field '{name}' is required for kind '{kind_name}'"
            ))
        })
    };
    let kind = match file.kind.as_str() {
        "euclidean" => {
            reject_stray(&[])?;
            AnisotropyKind::Euclidean
        }
        "quadratic" => {
            reject_stray(&["alpha", "beta"])?;
            AnisotropyKind::Quadratic {
                alpha: require("alpha", file.alpha)?,
                beta: require("beta", file.beta)?,
            }
        }
        "fourier" => {
            reject_stray(&["c0", "modes"])?;
            let modes = file
                .modes
                .as_ref()
                .ok_or_else(|| {
                    Error::Format("field 'modes' is required for kind 'fourier'".to_string())
                })?
                .iter()
                .map(|&(m, a, b)| FourierMode { m, a, b })
                .collect();
            AnisotropyKind::Fourier {
                c0: require("c0", file.c0)?,
                modes,
            }
        }
        "sampled" => {
            reject_stray(&["phi"])?;
            AnisotropyKind::Sampled {
                phi: file.phi.clone().ok_or_else(|| {
                    Error::Format("field 'phi' is required for kind 'sampled'".to_string())
                })?,
            }
        }
        other => {
            return Err(Error::Format(format!("unknown anisotropy kind '{other}'")));
        }
    };
    let grid = file.grid_size.unwrap_or(match &kind {
        AnisotropyKind::Sampled { phi } => phi.len(),
        _ => DEFAULT_GRID,
    });
    Anisotropy::new(kind, grid)
}

pub fn anisotropy_to_json(a: &Anisotropy) -> String {
    let mut file = AnisotropyFile {
        kind: String::new(),
        alpha: None,
        beta: None,
        c0: None,
        modes: None,
        phi: None,
        grid_size: Some(a.grid_size()),
    };
    match a.kind() {
        AnisotropyKind::Euclidean => file.kind = "euclidean".to_string(),
        AnisotropyKind::Quadratic { alpha, beta } => {
            file.kind = "quadratic".to_string();
            file.alpha = Some(*alpha);
            file.beta = Some(*beta);
        }
        AnisotropyKind::Fourier { c0, modes } => {
            file.kind = "fourier".to_string();
            file.c0 = Some(*c0);
            file.modes = Some(modes.iter().map(|m| (m.m, m.a, m.b)).collect());
        }
        AnisotropyKind::Sampled { phi } => {
            file.kind = "sampled".to_string();
            file.phi = Some(phi.clone());
        }
    }
    let mut out = serde_json::to_string_pretty(&file).expect("plain data serializes");
    out.push('\n');
    out
}

pub fn read_anisotropy(path: &Path) -> Result<Anisotropy> {
    anisotropy_from_json(&fs::read_to_string(path)?)
}

pub fn write_anisotropy(path: &Path, a: &Anisotropy) -> Result<()> {
    Ok(fs::write(path, anisotropy_to_json(a))?)
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CurveFile {
    version: u32,
    vertices: Vec<[f64; 2]>,
}

pub fn curve_from_json(text: &str) -> Result<PolylineCurve> {
    let file: CurveFile =
        serde_json::from_str(text).map_err(|e| Error::Format(format!("curve file: {e}")))?;
    if file.version != 1 {
        return Err(Error::Format(format!(
            "unsupported curve file version {}",
            file.version
        )));
    }
    PolylineCurve::new(
        file.vertices
            .into_iter()
            .map(|[x, y]| Vec2::new(x, y))
            .collect(),
    )
}

pub fn curve_to_json(c: &PolylineCurve) -> String {
    let file = CurveFile {
        version: 1,
        vertices: c.vertices().iter().map(|v| [v.x, v.y]).collect(),
    };
    let mut out = serde_json::to_string(&file).expect("plain data serializes");
    out.push('\n');
    out
}

pub fn read_curve(path: &Path) -> Result<PolylineCurve> {
    curve_from_json(&fs::read_to_string(path)?)
}

pub fn write_curve(path: &Path, c: &PolylineCurve) -> Result<()> {
    Ok(fs::write(path, curve_to_json(c))?)
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GenSpecFile {
    family: String,
    #[serde(rename = "M", default = "default_vertex_count")]
    vertex_count: usize,
    #[serde(default)]
    seed: u64,
}

fn default_vertex_count() -> usize {
    256
}

pub fn genspec_from_json(text: &str) -> Result<GenSpec> {
    let file: GenSpecFile =
        serde_json::from_str(text).map_err(|e| Error::Format(format!("gen spec file: {e}")))?;
    Ok(GenSpec {
        family: file.family.parse()?,
        vertex_count: file.vertex_count,
        seed: file.seed,
    })
}

pub fn genspec_to_json(spec: &GenSpec) -> String {
    let file = GenSpecFile {
        family: spec.family.to_string(),
        vertex_count: spec.vertex_count,
        seed: spec.seed,
    };
    let mut out = serde_json::to_string_pretty(&file).expect("plain data serializes");
    out.push('\n');
    out
}

pub fn read_genspec(path: &Path) -> Result<GenSpec> {
    genspec_from_json(&fs::read_to_string(path)?)
}

/// 17 significant decimal digits: enough for bit-exact f64 round trips.
fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// Per-vertex geometry table with columns `s,x,y,theta,k,kF,F_nu`.
pub fn write_geometry_table(
    w: &mut dyn Write,
    c: &PolylineCurve,
    geo: &CurveGeometry,
) -> Result<()> {
    writeln!(w, "s,x,y,theta,k,kF,F_nu")?;
    for (i, v) in c.vertices().iter().enumerate() {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            num(geo.s[i]),
            num(v.x),
            num(v.y),
            num(geo.normal_angle[i]),
            num(geo.curvature[i]),
            num(geo.aniso_curvature[i]),
            num(geo.f_normal[i]),
        )?;
    }
    Ok(())
}

pub const TRACE_HEADER: &str = "t,A,P_F,kF_max,kF_min,convex,f,kF_U_max";

/// Flow trace table, one row per sample.
pub fn write_trace_table(w: &mut dyn Write, tr: &FlowTrace) -> Result<()> {
    writeln!(w, "{TRACE_HEADER}")?;
    for s in &tr.samples {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            num(s.t),
            num(s.area),
            num(s.aniso_perimeter),
            num(s.kf_max),
            num(s.kf_min),
            u8::from(s.convex),
            num(s.f),
            num(s.kf_u_max),
        )?;
    }
    Ok(())
}

pub fn read_trace_table(text: &str) -> Result<Vec<TraceSample>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == TRACE_HEADER => {}
        other => {
            return Err(Error::Format(format!(
                "trace table must start with '{TRACE_HEADER}', got {other:?}"
            )));
        }
    }
    let mut out = Vec::new();
    for (row, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 8 {
            return Err(Error::Format(format!(
                "trace row {row}: expected 8 fields, got {}",
                fields.len()
            )));
        }
        let f = |i: usize| -> Result<f64> {
            fields[i]
                .parse()
                .map_err(|_| Error::Format(format!("trace row {row}: bad number '{}'", fields[i])))
        };
        let convex = match fields[5] {
            "0" => false,
            "1" => true,
            other => {
                return Err(Error::Format(format!(
                    "trace row {row}: convex flag must be 0 or 1, got '{other}'"
                )));
            }
        };
        out.push(TraceSample {
            t: f(0)?,
            area: f(1)?,
            aniso_perimeter: f(2)?,
            kf_max: f(3)?,
            kf_min: f(4)?,
            convex,
            f: f(6)?,
            kf_u_max: f(7)?,
        });
    }
    Ok(out)
}

/// Batch summary table: one row per curve with the relative margins of the
/// three per-curve inequalities (nan where an inequality does not apply) and
/// the Wulff equality gap.
pub fn write_batch_table(w: &mut dyn Write, summary: &BatchSummary) -> Result<()> {
    writeln!(w, "id,seed,convex,main-inequality,isoperimetric,wulff-gage,gap")?;
    for v in &summary.verdicts {
        let margin = |name: &str| {
            v.reports
                .iter()
                .find(|r| r.name == name)
                .map_or(f64::NAN, |r| r.relative_margin)
        };
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            v.id,
            v.seed,
            u8::from(v.convex),
            num(margin("main-inequality")),
            num(margin("isoperimetric")),
            num(margin("wulff-gage")),
            num(v.gap),
        )?;
    }
    Ok(())
}

/// World-coordinate window for SVG output, fixed once per run so consecutive
/// snapshots compose frame-by-frame.
#[derive(Clone, Copy, Debug)]
pub struct Viewport {
    pub min: Vec2,
    pub max: Vec2,
}

impl Viewport {
    /// Bounding box of the curve, padded on every side by `pad` times the
    /// larger extent.
    pub fn from_curve(c: &PolylineCurve, pad: f64) -> Viewport {
        let mut lo = Vec2::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for v in c.vertices() {
            lo.x = lo.x.min(v.x);
            lo.y = lo.y.min(v.y);
            hi.x = hi.x.max(v.x);
            hi.y = hi.y.max(v.y);
        }
        let extent = (hi.x - lo.x).max(hi.y - lo.y);
        let margin = pad * extent;
        Viewport {
            min: Vec2::new(lo.x - margin, lo.y - margin),
            max: Vec2::new(hi.x + margin, hi.y + margin),
        }
    }

    fn size(&self) -> Vec2 {
        self.max - self.min
    }

    /// Map to SVG user units: translate to the origin and flip y, which grows
    /// downward on screen.
    fn project(&self, p: Vec2) -> Vec2 {
        Vec2::new(p.x - self.min.x, self.max.y - p.y)
    }
}

/// Closed-path SVG drawing of one or more curves inside a fixed viewport.
pub fn svg_document(curves: &[(&PolylineCurve, &str)], vp: &Viewport) -> String {
    let size = vp.size();
    let stroke = 0.004 * size.x.max(size.y);
    let mut out = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"{:.0}\" \
         viewBox=\"0 0 {:.6} {:.6}\">\n",
        640.0 * size.y / size.x,
        size.x,
        size.y
    );
    for (curve, color) in curves {
        out.push_str("  <path d=\"");
        for (i, &v) in curve.vertices().iter().enumerate() {
            let p = vp.project(v);
            let cmd = if i == 0 { 'M' } else { 'L' };
            out.push_str(&format!("{cmd}{:.6} {:.6} ", p.x, p.y));
        }
        out.push_str(&format!(
            "Z\" fill=\"none\" stroke=\"{color}\" stroke-width=\"{stroke:.6}\"/>\n"
        ));
    }
    out.push_str("</svg>\n");
    out
}

pub fn write_svg(path: &Path, curves: &[(&PolylineCurve, &str)], vp: &Viewport) -> Result<()> {
    Ok(fs::write(path, svg_document(curves, vp))?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::{run_flow, FlowConfig};
    use crate::gen::{generate, Family};
    use crate::spectral::TWO_PI;

    fn circle(m: usize) -> PolylineCurve {
        PolylineCurve::new(
            (0..m)
                .map(|i| Vec2::from_angle(TWO_PI * i as f64 / m as f64))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn anisotropy_files_round_trip() {
        let cases = [
            Anisotropy::euclidean(),
            Anisotropy::quadratic(4.0, 1.0).unwrap(),
            Anisotropy::fourier(1.0, vec![FourierMode { m: 4, a: 0.05, b: 0.0 }]).unwrap(),
            Anisotropy::sampled(
                (0..64)
                    .map(|i| 1.0 + 0.05 * (4.0 * TWO_PI * i as f64 / 64.0).cos())
                    .collect(),
            )
            .unwrap(),
        ];
        for a in cases {
            let text = anisotropy_to_json(&a);
            let back = anisotropy_from_json(&text).unwrap();
            assert_eq!(a.kind(), back.kind());
            assert_eq!(a.grid_size(), back.grid_size());
        }
    }

    #[test]
    fn anisotropy_errors_name_the_offending_field() {
        let missing = anisotropy_from_json(r#"{"kind": "quadratic", "alpha": 4.0}"#);
        assert!(missing.unwrap_err().to_string().contains("beta"));
        let unknown = anisotropy_from_json(r#"{"kind": "euclidean", "radius": 2.0}"#);
        assert!(unknown.unwrap_err().to_string().contains("radius"));
        let stray = anisotropy_from_json(r#"{"kind": "euclidean", "alpha": 1.0}"#);
        assert!(stray.unwrap_err().to_string().contains("alpha"));
        let kind = anisotropy_from_json(r#"{"kind": "hexagonal"}"#);
        assert!(kind.unwrap_err().to_string().contains("hexagonal"));
    }

    #[test]
    fn curve_files_round_trip_bit_exactly() {
        let c = generate(
            &GenSpec {
                family: Family::RandomJordan {
                    max_mode: 5,
                    amp: 0.3,
                },
                vertex_count: 64,
                seed: 3,
            },
            &Anisotropy::euclidean(),
        )
        .unwrap();
        let text = curve_to_json(&c);
        let back = curve_from_json(&text).unwrap();
        assert_eq!(c.vertices(), back.vertices());
        assert_eq!(text, curve_to_json(&back));

        assert!(curve_from_json(r#"{"version": 2, "vertices": []}"#).is_err());
    }

    #[test]
    fn genspec_files_round_trip() {
        let spec = GenSpec {
            family: Family::RandomConvex {
                max_mode: 6,
                amp: 0.5,
            },
            vertex_count: 128,
            seed: 42,
        };
        let back = genspec_from_json(&genspec_to_json(&spec)).unwrap();
        assert_eq!(spec, back);
        let defaults = genspec_from_json(r#"{"family": "bean"}"#).unwrap();
        assert_eq!(defaults.vertex_count, 256);
        assert_eq!(defaults.seed, 0);
    }

    #[test]
    fn trace_tables_round_trip_bit_exactly() {
        let e = Anisotropy::euclidean();
        let cfg = FlowConfig {
            t_end: Some(1e-3),
            ..FlowConfig::default()
        };
        let tr = run_flow(circle(64).into(), &e, &cfg).unwrap();
        let mut buf = Vec::new();
        write_trace_table(&mut buf, &tr).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let back = read_trace_table(&text).unwrap();
        assert_eq!(tr.samples, back);
    }

    #[test]
    fn geometry_table_has_one_row_per_vertex() {
        let e = Anisotropy::euclidean();
        let c = circle(64);
        let geo = c.geometry(&e);
        let mut buf = Vec::new();
        write_geometry_table(&mut buf, &c, &geo).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 65);
        assert!(text.starts_with("s,x,y,theta,k,kF,F_nu\n"));
    }

    #[test]
    fn svg_contains_one_closed_path_per_curve() {
        let c = circle(32);
        let vp = Viewport::from_curve(&c, 0.05);
        let doc = svg_document(&[(&c, "black"), (&c, "red")], &vp);
        assert!(doc.starts_with("<svg"));
        assert_eq!(doc.matches("<path").count(), 2);
        assert_eq!(doc.matches("Z\"").count(), 2);
        assert!(doc.contains("viewBox"));
    }
}
