//! Convex planar anisotropies and their Wulff-shape machinery.
//!
//! An anisotropy is an even, positively 1-homogeneous convex norm `F` on the
//! plane, described here through its boundary profile
//! `phi(theta) = F(cos theta, sin theta)`. The profile is simultaneously the
//! support function of the Wulff shape `W = {F_polar < 1}`, whose area is
//! written `kappa` throughout. Ellipticity (`phi + phi'' > 0`) is required at
//! construction; it keeps the anisotropic curvature of convex curves positive
//! and the flow parabolic.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::curve::PolylineCurve;
use crate::error::{Error, Result};
use crate::spectral::{PeriodicField, TrigSeries, TWO_PI};
use crate::vec2::Vec2;
use crate::verify::InequalityReport;

pub const DEFAULT_GRID: usize = 512;

/// Relative floor for `min(phi + phi'')`; profiles closer to degeneracy than
/// this are rejected as numerically non-elliptic.
pub const ELLIPTICITY_FLOOR: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FourierMode {
    /// Angular frequency; must be even (odd modes would break `F(-xi) = F(xi)`)
    /// and at least 2 (mode 0 is the constant term, handled by `c0`).
    pub m: u32,
    pub a: f64,
    pub b: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum AnisotropyKind {
    /// The round norm `|xi|`; every anisotropic quantity specializes to its
    /// classical counterpart.
    Euclidean,
    /// `F(xi) = sqrt(alpha x^2 + beta y^2)`.
    Quadratic { alpha: f64, beta: f64 },
    /// Profile given as a finite cosine/sine series
    /// `phi(theta) = c0 + sum (a_m cos m theta + b_m sin m theta)`.
    Fourier { c0: f64, modes: Vec<FourierMode> },
    /// Profile given by samples on the uniform grid; stored after
    /// symmetrization (values averaged with their antipodes).
    Sampled { phi: Vec<f64> },
}

impl AnisotropyKind {
    /// Short human-readable tag used in report contexts and CLI output.
    pub fn label(&self) -> String {
        match self {
            AnisotropyKind::Euclidean => "euclidean".to_string(),
            AnisotropyKind::Quadratic { alpha, beta } => format!("quadratic({alpha},{beta})"),
            AnisotropyKind::Fourier { c0, modes } => {
                format!("fourier(c0={c0},{} modes)", modes.len())
            }
            AnisotropyKind::Sampled { phi } => format!("sampled({})", phi.len()),
        }
    }
}

/// Evaluation backend for the profile: closed forms where available, a
/// trigonometric interpolant otherwise.
#[derive(Clone, Debug)]
enum Profile {
    Euclidean,
    Quadratic { alpha: f64, beta: f64 },
    Series(TrigSeries),
}

#[derive(Clone, Debug)]
pub struct Anisotropy {
    kind: AnisotropyKind,
    grid_size: usize,
    profile: Profile,
    /// Trig interpolant of the polar profile; `None` for kinds whose polar
    /// norm has a closed form.
    polar_profile: Option<TrigSeries>,
    phi: PeriodicField,
    dphi: PeriodicField,
    /// `phi + phi''` on the grid.
    hessian: PeriodicField,
    /// Grid unit vectors, cached for the polar coarse search.
    directions: Vec<Vec2>,
}

impl Anisotropy {
    pub fn new(kind: AnisotropyKind, grid_size: usize) -> Result<Self> {
        if !grid_size.is_power_of_two() || grid_size < 8 {
            return Err(Error::InvalidAnisotropy(format!(
                "grid_size must be a power of two >= 8, got {grid_size}"
            )));
        }

        let (kind, profile) = match kind {
            AnisotropyKind::Euclidean => (AnisotropyKind::Euclidean, Profile::Euclidean),
            AnisotropyKind::Quadratic { alpha, beta } => {
                for (name, v) in [("alpha", alpha), ("beta", beta)] {
                    if !v.is_finite() || v <= 0.0 {
                        return Err(Error::InvalidAnisotropy(format!(
                            "{name} must be positive and finite, got {v}"
                        )));
                    }
                }
                (
                    AnisotropyKind::Quadratic { alpha, beta },
                    Profile::Quadratic { alpha, beta },
                )
            }
            AnisotropyKind::Fourier { c0, modes } => {
                if !c0.is_finite() {
                    return Err(Error::InvalidAnisotropy(format!("c0 must be finite, got {c0}")));
                }
                let mut max_m = 0usize;
                for mode in &modes {
                    if mode.m < 2 || mode.m % 2 != 0 {
                        return Err(Error::InvalidAnisotropy(format!(
                            "mode m={} rejected: frequencies must be even and >= 2",
                            mode.m
                        )));
                    }
                    if mode.m as usize >= grid_size / 2 {
                        return Err(Error::InvalidAnisotropy(format!(
                            "mode m={} is not resolved by grid_size {grid_size}",
                            mode.m
                        )));
                    }
                    if !mode.a.is_finite() || !mode.b.is_finite() {
                        return Err(Error::InvalidAnisotropy(format!(
                            "mode m={} has non-finite coefficients",
                            mode.m
                        )));
                    }
                    max_m = max_m.max(mode.m as usize);
                }
                let mut cos = vec![0.0; max_m];
                let mut sin = vec![0.0; max_m];
                for mode in &modes {
                    cos[mode.m as usize - 1] += mode.a;
                    sin[mode.m as usize - 1] += mode.b;
                }
                (
                    AnisotropyKind::Fourier { c0, modes },
                    Profile::Series(TrigSeries { constant: c0, cos, sin }),
                )
            }
            AnisotropyKind::Sampled { phi } => {
                if phi.len() != grid_size {
                    return Err(Error::InvalidAnisotropy(format!(
                        "sampled profile length {} does not match grid_size {grid_size}",
                        phi.len()
                    )));
                }
                if let Some(i) = phi.iter().position(|v| !v.is_finite()) {
                    return Err(Error::InvalidAnisotropy(format!(
                        "non-finite phi sample at index {i}"
                    )));
                }
                // Evenness: average each sample with its antipode, which is
                // the exact projection killing the odd Fourier modes.
                let n = phi.len();
                let sym: Vec<f64> = (0..n).map(|i| 0.5 * (phi[i] + phi[(i + n / 2) % n])).collect();
                let series = PeriodicField::new(sym.clone())?.to_trig_series();
                (AnisotropyKind::Sampled { phi: sym }, Profile::Series(series))
            }
        };

        let n = grid_size;
        let eval3 = |theta: f64| profile_derivatives(&profile, theta);
        let phi = PeriodicField::from_fn(n, |t| eval3(t)[0])?;
        let dphi = PeriodicField::from_fn(n, |t| eval3(t)[1])?;
        let hessian = PeriodicField::from_fn(n, |t| {
            let [p, _, pdd] = eval3(t);
            p + pdd
        })?;

        if phi.min() <= 0.0 {
            return Err(Error::InvalidAnisotropy(format!(
                "profile must be positive; min(phi) = {}",
                phi.min()
            )));
        }
        if hessian.min() <= ELLIPTICITY_FLOOR * phi.mean() {
            return Err(Error::InvalidAnisotropy(format!(
                "profile is not elliptic; min(phi + phi'') = {} with mean(phi) = {}",
                hessian.min(),
                phi.mean()
            )));
        }

        let directions = (0..n)
            .map(|i| Vec2::from_angle(TWO_PI * i as f64 / n as f64))
            .collect();

        let mut aniso = Anisotropy {
            kind,
            grid_size,
            profile,
            polar_profile: None,
            phi,
            dphi,
            hessian,
            directions,
        };
        if matches!(aniso.profile, Profile::Series(_)) {
            let polar = PeriodicField::from_fn(n, |t| aniso.polar(Vec2::from_angle(t)))?;
            aniso.polar_profile = Some(polar.to_trig_series());
        }
        Ok(aniso)
    }

    pub fn euclidean() -> Self {
        Anisotropy::new(AnisotropyKind::Euclidean, DEFAULT_GRID)
            .expect("euclidean anisotropy is always valid")
    }

    pub fn quadratic(alpha: f64, beta: f64) -> Result<Self> {
        Anisotropy::new(AnisotropyKind::Quadratic { alpha, beta }, DEFAULT_GRID)
    }

    pub fn fourier(c0: f64, modes: Vec<FourierMode>) -> Result<Self> {
        Anisotropy::new(AnisotropyKind::Fourier { c0, modes }, DEFAULT_GRID)
    }

    pub fn sampled(phi: Vec<f64>) -> Result<Self> {
        let n = phi.len();
        Anisotropy::new(AnisotropyKind::Sampled { phi }, n)
    }

    pub fn kind(&self) -> &AnisotropyKind {
        &self.kind
    }

    pub fn grid_size(&self) -> usize {
        self.grid_size
    }

    pub fn label(&self) -> String {
        self.kind.label()
    }

    /// The profile `phi(theta) = F(cos theta, sin theta)`, which is also the
    /// support function of the Wulff shape.
    pub fn support(&self, theta: f64) -> f64 {
        profile_derivatives(&self.profile, theta)[0]
    }

    /// `[phi, phi', phi'']` at the given angle.
    pub fn support_derivatives(&self, theta: f64) -> [f64; 3] {
        profile_derivatives(&self.profile, theta)
    }

    /// `F(xi) = |xi| * phi(angle(xi))`; zero exactly at the origin.
    pub fn norm(&self, xi: Vec2) -> f64 {
        let r = xi.norm();
        if r == 0.0 {
            0.0
        } else {
            r * self.support(xi.angle())
        }
    }

    /// Cahn-Hoffman gradient `grad F(xi) = phi e + phi' e_perp` with
    /// `e = xi/|xi|`. Defined away from the origin only.
    pub fn gradient(&self, xi: Vec2) -> Result<Vec2> {
        let e = xi.normalized().ok_or(Error::ZeroVector)?;
        let [p, dp, _] = self.support_derivatives(xi.angle());
        Ok(p * e + dp * e.perp())
    }

    /// `phi + phi''`: the tangential part of the Hessian of `F` on the unit
    /// circle. Positive by the ellipticity requirement; multiplies the
    /// Euclidean curvature in the anisotropic curvature.
    pub fn tangential_hessian(&self, theta: f64) -> f64 {
        let [p, _, pdd] = self.support_derivatives(theta);
        p + pdd
    }

    /// Flow mobility `psi(theta) = phi * (phi + phi'')`.
    pub fn mobility(&self, theta: f64) -> f64 {
        let [p, _, pdd] = self.support_derivatives(theta);
        p * (p + pdd)
    }

    /// Largest mobility over the angular grid; the stiffness scale in the
    /// polyline CFL bound.
    pub fn mobility_max(&self) -> f64 {
        self.phi
            .values()
            .iter()
            .zip(self.hessian.values())
            .map(|(&p, &h)| p * h)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// `(min phi, max phi)`: the constants squeezing `F` between Euclidean
    /// norms, `a|xi| <= F(xi) <= b|xi|`.
    pub fn bounds(&self) -> (f64, f64) {
        (self.phi.min(), self.phi.max())
    }

    /// `min(phi + phi'')` over the grid; a diagnostic for how close the
    /// profile sits to the ellipticity floor.
    pub fn ellipticity_margin(&self) -> f64 {
        self.hessian.min()
    }

    /// Polar (dual) norm `F_polar(v) = sup <xi, v>/F(xi)`.
    pub fn polar(&self, v: Vec2) -> f64 {
        match self.profile {
            Profile::Euclidean => v.norm(),
            Profile::Quadratic { alpha, beta } => {
                (v.x * v.x / alpha + v.y * v.y / beta).sqrt()
            }
            Profile::Series(_) => self.polar_by_search(v),
        }
    }

    /// `grad F_polar`, evaluated through the closed form where available and
    /// through the interpolated polar profile otherwise.
    pub fn polar_gradient(&self, v: Vec2) -> Result<Vec2> {
        let e = v.normalized().ok_or(Error::ZeroVector)?;
        match &self.profile {
            Profile::Euclidean => Ok(e),
            Profile::Quadratic { alpha, beta } => {
                let fp = self.polar(v);
                Ok(Vec2::new(v.x / alpha, v.y / beta) / fp)
            }
            Profile::Series(_) => {
                let series = self
                    .polar_profile
                    .as_ref()
                    .expect("polar profile cached for series-backed kinds");
                let t = v.angle();
                Ok(series.eval(t) * e + series.eval_d(t) * e.perp())
            }
        }
    }

    /// Independent Sampled anisotropy built from the polar profile. The polar
    /// of the polar reproduces the original norm, which makes this a handy
    /// cross-check of the duality layer.
    pub fn polar_anisotropy(&self) -> Result<Anisotropy> {
        let phi = (0..self.grid_size)
            .map(|i| self.polar(self.directions[i]))
            .collect();
        Anisotropy::sampled(phi)
    }

    /// Maximize `<v, e(theta)>/phi(theta)` by coarse grid search plus
    /// golden-section refinement. The objective is smooth and unimodal near
    /// its maximum for elliptic profiles.
    fn polar_by_search(&self, v: Vec2) -> f64 {
        let r = v.norm();
        if r == 0.0 {
            return 0.0;
        }
        let n = self.grid_size;
        let phi = self.phi.values();
        let mut best_i = 0;
        let mut best = f64::NEG_INFINITY;
        for i in 0..n {
            let g = v.dot(self.directions[i]) / phi[i];
            if g > best {
                best = g;
                best_i = i;
            }
        }
        let dt = TWO_PI / n as f64;
        let center = best_i as f64 * dt;
        let objective = |t: f64| v.dot(Vec2::from_angle(t)) / self.support(t);

        let mut lo = center - dt;
        let mut hi = center + dt;
        const INV_GOLD: f64 = 0.618_033_988_749_894_9;
        let mut t1 = hi - INV_GOLD * (hi - lo);
        let mut t2 = lo + INV_GOLD * (hi - lo);
        let mut f1 = objective(t1);
        let mut f2 = objective(t2);
        for _ in 0..80 {
            if hi - lo < 1e-12 {
                break;
            }
            if f1 < f2 {
                lo = t1;
                t1 = t2;
                f1 = f2;
                t2 = lo + INV_GOLD * (hi - lo);
                f2 = objective(t2);
            } else {
                hi = t2;
                t2 = t1;
                f2 = f1;
                t1 = hi - INV_GOLD * (hi - lo);
                f1 = objective(t1);
            }
        }
        best.max(f1).max(f2)
    }

    /// Wulff shape area `kappa = (1/2) integral (phi^2 - phi'^2)`, by the
    /// rectangle rule on the grid (spectrally accurate for smooth profiles).
    pub fn wulff_area(&self) -> f64 {
        let n = self.grid_size as f64;
        let sum: f64 = self
            .phi
            .values()
            .iter()
            .zip(self.dphi.values())
            .map(|(&p, &dp)| p * p - dp * dp)
            .sum();
        std::f64::consts::PI * sum / n
    }

    /// Boundary of the Wulff shape as a counterclockwise polyline with `m`
    /// vertices indexed by normal angle: `w(theta) = phi e + phi' e_perp`.
    pub fn wulff_boundary(&self, m: usize) -> Result<PolylineCurve> {
        let pts = (0..m)
            .map(|j| {
                let t = TWO_PI * j as f64 / m as f64;
                let [p, dp, _] = self.support_derivatives(t);
                let e = Vec2::from_angle(t);
                p * e + dp * e.perp()
            })
            .collect();
        PolylineCurve::new(pts)
    }

    /// Check the norm/polar duality identities on seeded random vectors:
    /// the Euler relation `<grad F(xi), xi> = F(xi)`, the unit-polar values
    /// `F_polar(grad F) = F(grad F_polar) = 1`, the gradient inversion
    /// `F_polar(xi) grad F(grad F_polar(xi)) = xi`, and the Cauchy-Schwarz
    /// bound `|<xi, eta>| <= F(xi) F_polar(eta)`.
    pub fn check_duality(&self, n_samples: usize, seed: u64) -> Vec<InequalityReport> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sample = |rng: &mut ChaCha8Rng| {
            let angle = rng.gen_range(0.0..TWO_PI);
            let log_r = rng.gen_range((0.25f64).ln()..(4.0f64).ln());
            log_r.exp() * Vec2::from_angle(angle)
        };

        let mut euler = 0.0f64;
        let mut polar_of_grad = 0.0f64;
        let mut primal_of_polar_grad = 0.0f64;
        let mut inversion = 0.0f64;
        let mut cs_worst: Option<(f64, f64)> = None;

        for _ in 0..n_samples {
            let xi = sample(&mut rng);
            let eta = sample(&mut rng);
            let f = self.norm(xi);
            let grad = self.gradient(xi).expect("sample vectors are nonzero");
            euler = euler.max((grad.dot(xi) - f).abs() / f);
            polar_of_grad = polar_of_grad.max((self.polar(grad) - 1.0).abs());

            let pgrad = self.polar_gradient(xi).expect("sample vectors are nonzero");
            primal_of_polar_grad = primal_of_polar_grad.max((self.norm(pgrad) - 1.0).abs());

            let recovered = self.polar(xi) * self.gradient(pgrad).expect("gradient is nonzero");
            inversion = inversion.max((recovered - xi).norm() / xi.norm());

            let bound = f * self.polar(eta);
            let inner = xi.dot(eta).abs();
            let keep = match cs_worst {
                None => true,
                Some((b, i)) => bound - inner < b - i,
            };
            if keep {
                cs_worst = Some((bound, inner));
            }
        }

        let ctx = format!("{}; {} samples, seed {}", self.label(), n_samples, seed);
        let tol = 1e-6;
        let (cs_bound, cs_inner) = cs_worst.unwrap_or((1.0, 0.0));
        vec![
            InequalityReport::residual("duality-euler", euler, tol, &ctx),
            InequalityReport::residual("duality-polar-of-gradient", polar_of_grad, tol, &ctx),
            InequalityReport::residual(
                "duality-primal-of-polar-gradient",
                primal_of_polar_grad,
                tol,
                &ctx,
            ),
            InequalityReport::residual("duality-gradient-inversion", inversion, tol, &ctx),
            InequalityReport::inequality(
                "duality-cauchy-schwarz",
                cs_bound,
                cs_inner,
                tol * cs_bound.abs(),
                &ctx,
            ),
        ]
    }
}

fn profile_derivatives(profile: &Profile, theta: f64) -> [f64; 3] {
    match profile {
        Profile::Euclidean => [1.0, 0.0, 0.0],
        Profile::Quadratic { alpha, beta } => {
            let (s, c) = theta.sin_cos();
            let p = (alpha * c * c + beta * s * s).sqrt();
            let dp = (beta - alpha) * c * s / p;
            // phi + phi'' = alpha*beta / phi^3 for quadratic profiles.
            let pdd = alpha * beta / (p * p * p) - p;
            [p, dp, pdd]
        }
        Profile::Series(series) => [series.eval(theta), series.eval_d(theta), series.eval_dd(theta)],
    }
}
