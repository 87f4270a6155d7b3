//! Deterministic, seeded construction of test curves: Wulff shapes,
//! ellipses, random convex curves through support functions, random
//! nonconvex Jordan curves, perturbed Wulff shapes, and the bean fixture.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::anisotropy::Anisotropy;
use crate::curve::{is_simple, ConvexSupportCurve, PolylineCurve};
use crate::error::{Error, Result};
use crate::spectral::{PeriodicField, TWO_PI};
use crate::vec2::Vec2;

/// Attempts before a rejection-sampling family gives up.
pub const REJECTION_BUDGET: usize = 1000;

#[derive(Clone, Debug, PartialEq)]
pub enum Family {
    /// `scale * wulff_boundary + center`.
    Wulff { scale: f64, center: Vec2 },
    /// Semi-axes `(a, b)`, resampled to uniform arc length.
    Ellipse { a: f64, b: f64 },
    /// Support function `1 + sum (a_m cos + b_m sin)(m theta)` with
    /// coefficients in `[-amp/m^3, amp/m^3]`, rejected unless comfortably
    /// convex.
    RandomConvex { max_mode: u32, amp: f64 },
    /// Coordinates perturbed by random trigonometric polynomials with
    /// `1/m^2` decay, rejected unless simple with resolvable curvature.
    RandomJordan { max_mode: u32, amp: f64 },
    /// Support function `phi * (1 + eps cos(mode * theta))`.
    PerturbedWulff { eps: f64, mode: u32 },
    /// Fixed nonconvex fixture `rho(u) = 1 + 0.45 cos u + 0.25 cos 2u`.
    Bean,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GenSpec {
    pub family: Family,
    pub vertex_count: usize,
    pub seed: u64,
}

/// SplitMix64 finalizer over `seed ^ golden-ratio * index`: the per-curve
/// seed derivation used by batch sweeps, chosen so parallel and serial
/// enumeration agree.
pub fn mix_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn generate(spec: &GenSpec, a: &Anisotropy) -> Result<PolylineCurve> {
    let m = spec.vertex_count;
    if m < 8 {
        return Err(Error::InvalidConfig(format!(
            "vertex count must be at least 8, got {m}"
        )));
    }
    match &spec.family {
        Family::Wulff { scale, center } => {
            if !(scale.is_finite() && *scale > 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "wulff scale must be positive, got {scale}"
                )));
            }
            Ok(a.wulff_boundary(m)?.scaled(*scale)?.translated(*center))
        }
        Family::Ellipse { a: ea, b: eb } => {
            for (name, v) in [("a", *ea), ("b", *eb)] {
                if !(v.is_finite() && v > 0.0) {
                    return Err(Error::InvalidConfig(format!(
                        "ellipse semi-axis {name} must be positive, got {v}"
                    )));
                }
            }
            let dense = PolylineCurve::new(
                (0..4 * m)
                    .map(|i| {
                        let u = TWO_PI * i as f64 / (4 * m) as f64;
                        Vec2::new(ea * u.cos(), eb * u.sin())
                    })
                    .collect(),
            )?;
            dense.resample(m)
        }
        Family::Bean => {
            let dense = PolylineCurve::new(
                (0..4 * m)
                    .map(|i| {
                        let u = TWO_PI * i as f64 / (4 * m) as f64;
                        let rho = 1.0 + 0.45 * u.cos() + 0.25 * (2.0 * u).cos();
                        rho * Vec2::from_angle(u)
                    })
                    .collect(),
            )?;
            dense.resample(m)
        }
        Family::PerturbedWulff { eps, mode } => {
            if !eps.is_finite() || *mode == 0 {
                return Err(Error::InvalidConfig(format!(
                    "perturbed wulff needs finite eps and mode >= 1, got eps={eps} mode={mode}"
                )));
            }
            let support = support_grid(m)?;
            let h = PeriodicField::new(
                (0..support)
                    .map(|i| {
                        let t = TWO_PI * i as f64 / support as f64;
                        a.support(t) * (1.0 + eps * (*mode as f64 * t).cos())
                    })
                    .collect(),
            )?;
            ConvexSupportCurve::new(h)?.to_polyline()
        }
        Family::RandomConvex { max_mode, amp } => {
            validate_random_params(*max_mode, *amp)?;
            let support = support_grid(m)?;
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            try_budget("random convex", |_| {
                let mut coeffs = Vec::new();
                for mode in 2..=*max_mode {
                    let bound = amp / (mode as f64).powi(3);
                    coeffs.push((mode, rng.gen_range(-bound..=bound), rng.gen_range(-bound..=bound)));
                }
                let h = PeriodicField::new(
                    (0..support)
                        .map(|i| {
                            let t = TWO_PI * i as f64 / support as f64;
                            1.0 + coeffs
                                .iter()
                                .map(|&(mode, ca, cb)| {
                                    ca * (mode as f64 * t).cos() + cb * (mode as f64 * t).sin()
                                })
                                .sum::<f64>()
                        })
                        .collect(),
                )?;
                let radius = h.zip(&h.second_derivative(), |x, y| x + y);
                if radius.min() < 0.05 * h.mean() {
                    return Ok(None);
                }
                Ok(Some(ConvexSupportCurve::new(h)?.to_polyline()?))
            })
        }
        Family::RandomJordan { max_mode, amp } => {
            validate_random_params(*max_mode, *amp)?;
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            try_budget("random jordan", |_| {
                let mut modes = Vec::new();
                for mode in 1..=*max_mode {
                    let bound = amp / (mode as f64).powi(2);
                    let mut draw = || rng.gen_range(-bound..=bound);
                    modes.push((mode, [draw(), draw(), draw(), draw()]));
                }
                let dense = 4 * m;
                let mut pts: Vec<Vec2> = (0..dense)
                    .map(|i| {
                        let u = TWO_PI * i as f64 / dense as f64;
                        let mut p = Vec2::from_angle(u);
                        for &(mode, [pa, pb, qa, qb]) in &modes {
                            let (s, c) = (mode as f64 * u).sin_cos();
                            p.x += pa * c + pb * s;
                            p.y += qa * c + qb * s;
                        }
                        p
                    })
                    .collect();
                // The perturbation can flip the global orientation.
                let area2: f64 = (0..dense)
                    .map(|i| pts[i].cross(pts[(i + 1) % dense]))
                    .sum();
                if area2 < 0.0 {
                    pts.reverse();
                }
                if !is_simple(&pts) {
                    return Ok(None);
                }
                let curve = match PolylineCurve::new(pts) {
                    Ok(c) => c.resample(m)?,
                    Err(_) => return Ok(None),
                };
                // Keep curvature resolvable: min radius of curvature at
                // least 1e-3 of the diameter.
                let geo = curve.geometry(a);
                let k_max = geo.curvature.iter().fold(0.0f64, |acc, &k| acc.max(k.abs()));
                let diam = diameter(curve.vertices());
                if k_max * diam > 1e3 {
                    return Ok(None);
                }
                Ok(Some(curve))
            })
        }
    }
}

fn validate_random_params(max_mode: u32, amp: f64) -> Result<()> {
    if max_mode < 2 {
        return Err(Error::InvalidConfig(format!(
            "max_mode must be at least 2, got {max_mode}"
        )));
    }
    if !(amp.is_finite() && amp > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "amp must be positive, got {amp}"
        )));
    }
    Ok(())
}

/// Support-function families build on a periodic grid, which must be even.
fn support_grid(m: usize) -> Result<usize> {
    if m % 2 != 0 {
        return Err(Error::InvalidConfig(format!(
            "support-function families need an even vertex count, got {m}"
        )));
    }
    Ok(m)
}

fn try_budget(
    what: &str,
    mut attempt: impl FnMut(usize) -> Result<Option<PolylineCurve>>,
) -> Result<PolylineCurve> {
    for i in 0..REJECTION_BUDGET {
        if let Some(curve) = attempt(i)? {
            return Ok(curve);
        }
    }
    Err(Error::GeneratorExhausted {
        attempts: REJECTION_BUDGET,
        reason: format!("{what}: no candidate satisfied the acceptance tests"),
    })
}

fn diameter(vertices: &[Vec2]) -> f64 {
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

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Wulff { scale, center } => {
                write!(f, "wulff:scale={},cx={},cy={}", scale, center.x, center.y)
            }
            Family::Ellipse { a, b } => write!(f, "ellipse:a={a},b={b}"),
            Family::RandomConvex { max_mode, amp } => {
                write!(f, "convex:max_mode={max_mode},amp={amp}")
            }
            Family::RandomJordan { max_mode, amp } => {
                write!(f, "jordan:max_mode={max_mode},amp={amp}")
            }
            Family::PerturbedWulff { eps, mode } => {
                write!(f, "perturbed:eps={eps},mode={mode}")
            }
            Family::Bean => write!(f, "bean"),
        }
    }
}

impl FromStr for Family {
    type Err = Error;

    /// Compact form `name[:key=value,...]`, e.g. `ellipse:a=2,b=1`,
    /// `convex:max_mode=6,amp=0.5`, `bean`. `circle[:r=..]` is shorthand for
    /// a round ellipse.
    fn from_str(s: &str) -> Result<Family> {
        let (name, rest) = match s.split_once(':') {
            Some((n, r)) => (n, r),
            None => (s, ""),
        };
        let mut kv = std::collections::BTreeMap::new();
        for part in rest.split(',').filter(|p| !p.is_empty()) {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| Error::Format(format!("expected key=value, got '{part}'")))?;
            let num: f64 = v
                .parse()
                .map_err(|_| Error::Format(format!("field '{k}': bad number '{v}'")))?;
            kv.insert(k.to_string(), num);
        }
        let get = |k: &str, default: f64| kv.get(k).copied().unwrap_or(default);
        let known = |allowed: &[&str]| -> Result<()> {
            for k in kv.keys() {
                if !allowed.contains(&k.as_str()) {
                    return Err(Error::Format(format!(
                        "unknown field '{k}' for family '{name}'"
                    )));
                }
            }
            Ok(())
        };
        match name {
            "wulff" => {
                known(&["scale", "cx", "cy"])?;
                Ok(Family::Wulff {
                    scale: get("scale", 1.0),
                    center: Vec2::new(get("cx", 0.0), get("cy", 0.0)),
                })
            }
            "ellipse" => {
                known(&["a", "b"])?;
                Ok(Family::Ellipse {
                    a: get("a", 2.0),
                    b: get("b", 1.0),
                })
            }
            "circle" => {
                known(&["r"])?;
                let r = get("r", 1.0);
                Ok(Family::Ellipse { a: r, b: r })
            }
            "convex" | "random-convex" => {
                known(&["max_mode", "amp"])?;
                Ok(Family::RandomConvex {
                    max_mode: get("max_mode", 6.0) as u32,
                    amp: get("amp", 0.5),
                })
            }
            "jordan" | "random-jordan" => {
                known(&["max_mode", "amp"])?;
                Ok(Family::RandomJordan {
                    max_mode: get("max_mode", 6.0) as u32,
                    amp: get("amp", 0.3),
                })
            }
            "perturbed" | "perturbed-wulff" => {
                known(&["eps", "mode"])?;
                Ok(Family::PerturbedWulff {
                    eps: get("eps", 0.01),
                    mode: get("mode", 4.0) as u32,
                })
            }
            "bean" => {
                known(&[])?;
                Ok(Family::Bean)
            }
            other => Err(Error::Format(format!("unknown curve family '{other}'"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::DEFAULT_CONVEXITY_TOL;

    fn spec(family: Family, seed: u64) -> GenSpec {
        GenSpec {
            family,
            vertex_count: 256,
            seed,
        }
    }

    #[test]
    fn wulff_euclidean_is_the_unit_circle() {
        let e = Anisotropy::euclidean();
        let c = generate(
            &GenSpec {
                family: Family::Wulff {
                    scale: 1.0,
                    center: Vec2::ZERO,
                },
                vertex_count: 512,
                seed: 0,
            },
            &e,
        )
        .unwrap();
        for v in c.vertices() {
            assert!((v.norm() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn bean_is_nonconvex_and_simple() {
        let e = Anisotropy::euclidean();
        let c = generate(&spec(Family::Bean, 0), &e).unwrap();
        assert!(!c.is_convex(&e, DEFAULT_CONVEXITY_TOL));
        assert!(is_simple(c.vertices()));
        // Fixture is seed-independent.
        let c2 = generate(&spec(Family::Bean, 99), &e).unwrap();
        assert_eq!(c.vertices(), c2.vertices());
    }

    #[test]
    fn random_convex_outputs_are_convex_and_deterministic() {
        let e = Anisotropy::euclidean();
        let family = Family::RandomConvex {
            max_mode: 6,
            amp: 0.5,
        };
        for seed in 0..20 {
            let c = generate(&spec(family.clone(), seed), &e).unwrap();
            assert!(c.is_convex(&e, DEFAULT_CONVEXITY_TOL), "seed {seed}");
        }
        let c1 = generate(&spec(family.clone(), 7), &e).unwrap();
        let c2 = generate(&spec(family, 7), &e).unwrap();
        assert_eq!(c1.vertices(), c2.vertices());
    }

    #[test]
    fn random_jordan_outputs_are_simple_and_some_are_nonconvex() {
        let e = Anisotropy::euclidean();
        let family = Family::RandomJordan {
            max_mode: 6,
            amp: 0.3,
        };
        let mut nonconvex = 0;
        for seed in 0..20 {
            let c = generate(&spec(family.clone(), seed), &e).unwrap();
            assert!(is_simple(c.vertices()), "seed {seed}");
            if !c.is_convex(&e, DEFAULT_CONVEXITY_TOL) {
                nonconvex += 1;
            }
        }
        assert!(nonconvex > 0, "expected nonconvex samples in the family");
    }

    #[test]
    fn perturbed_wulff_respects_convexity() {
        let a = Anisotropy::quadratic(4.0, 1.0).unwrap();
        let c = generate(
            &spec(
                Family::PerturbedWulff {
                    eps: 0.01,
                    mode: 4,
                },
                0,
            ),
            &a,
        )
        .unwrap();
        assert!(c.is_convex(&a, DEFAULT_CONVEXITY_TOL));
        // A violent perturbation loses convexity and is rejected.
        assert!(generate(
            &spec(
                Family::PerturbedWulff {
                    eps: 0.5,
                    mode: 4,
                },
                0,
            ),
            &a,
        )
        .is_err());
    }

    #[test]
    fn ellipse_is_uniformly_sampled() {
        let e = Anisotropy::euclidean();
        let c = generate(&spec(Family::Ellipse { a: 2.0, b: 1.0 }, 0), &e).unwrap();
        assert!((c.area() - 2.0 * std::f64::consts::PI).abs() <= 1e-3);
        let n = c.len();
        let lens: Vec<f64> = (0..n)
            .map(|i| (c.vertices()[(i + 1) % n] - c.vertices()[i]).norm())
            .collect();
        let min = lens.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = lens.iter().cloned().fold(0.0f64, f64::max);
        // Chords of equal-arc-length pieces differ at second order in the
        // spacing, (k L/M)^2 / 24 with k up to a/b^2 = 2 here.
        assert!(max / min <= 1.0 + 1e-3, "ratio {}", max / min);
    }

    #[test]
    fn family_strings_round_trip() {
        for s in [
            "bean",
            "circle:r=2",
            "ellipse:a=2,b=1",
            "wulff:scale=0.5,cx=1,cy=-1",
            "convex:max_mode=6,amp=0.5",
            "jordan:max_mode=4,amp=0.2",
            "perturbed:eps=0.01,mode=4",
        ] {
            let f: Family = s.parse().unwrap();
            let again: Family = f.to_string().parse().unwrap();
            assert_eq!(f, again, "{s}");
        }
        assert!("hexagon".parse::<Family>().is_err());
        assert!("ellipse:radius=2".parse::<Family>().is_err());
        assert!("ellipse:a=abc".parse::<Family>().is_err());
    }
}
