//! Uniform periodic grids on `[0, 2pi)` and spectral differentiation.
//!
//! Everything angular in the crate (anisotropy profiles, convex support
//! functions) lives on these grids. Derivatives go through the FFT, so they
//! are exact for trigonometric polynomials resolved by the grid.

use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

pub const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

thread_local! {
    static PLANS: RefCell<HashMap<usize, (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>)>> =
        RefCell::new(HashMap::new());
}

fn with_plans<R>(n: usize, f: impl FnOnce(&dyn Fft<f64>, &dyn Fft<f64>) -> R) -> R {
    PLANS.with(|cell| {
        let mut map = cell.borrow_mut();
        let (fw, inv) = map.entry(n).or_insert_with(|| {
            let mut planner = FftPlanner::new();
            (planner.plan_fft_forward(n), planner.plan_fft_inverse(n))
        });
        f(fw.as_ref(), inv.as_ref())
    })
}

/// Samples of a `2pi`-periodic function on the uniform grid
/// `theta_i = 2pi i / n`. The length is even and at least 8 so that the
/// spectral derivative has a clean Nyquist convention.
#[derive(Clone, Debug, PartialEq)]
pub struct PeriodicField {
    values: Vec<f64>,
}

impl PeriodicField {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 8 {
            return Err(Error::InvalidConfig(format!(
                "periodic grid needs at least 8 samples, got {}",
                values.len()
            )));
        }
        if values.len() % 2 != 0 {
            return Err(Error::InvalidConfig(format!(
                "periodic grid length must be even, got {}",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "non-finite sample at grid index {i}"
            )));
        }
        Ok(PeriodicField { values })
    }

    pub fn from_fn(n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        PeriodicField::new((0..n).map(|i| f(TWO_PI * i as f64 / n as f64)).collect())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn theta(&self, i: usize) -> f64 {
        TWO_PI * i as f64 / self.len() as f64
    }

    pub fn spacing(&self) -> f64 {
        TWO_PI / self.len() as f64
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.len() as f64
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> PeriodicField {
        PeriodicField {
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip(&self, other: &PeriodicField, f: impl Fn(f64, f64) -> f64) -> PeriodicField {
        assert_eq!(self.len(), other.len(), "grid size mismatch");
        PeriodicField {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    fn spectral_multiply(&self, factor: impl Fn(i64) -> Complex64) -> PeriodicField {
        let n = self.values.len();
        let mut buf: Vec<Complex64> = self
            .values
            .iter()
            .map(|&v| Complex64::new(v, 0.0))
            .collect();
        with_plans(n, |fw, inv| {
            fw.process(&mut buf);
            for (bin, c) in buf.iter_mut().enumerate() {
                let freq = if bin <= n / 2 {
                    bin as i64
                } else {
                    bin as i64 - n as i64
                };
                // rustfft leaves transforms unnormalized; fold 1/n in here.
                *c *= factor(freq) / n as f64;
            }
            inv.process(&mut buf);
        });
        PeriodicField {
            values: buf.iter().map(|c| c.re).collect(),
        }
    }

    /// First spectral derivative. The Nyquist mode is annihilated: an odd
    /// derivative of `cos(n/2 theta)` is not representable on the grid.
    pub fn derivative(&self) -> PeriodicField {
        let half = (self.len() / 2) as i64;
        self.spectral_multiply(|k| {
            if k.abs() == half {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(0.0, k as f64)
            }
        })
    }

    /// Second spectral derivative (multiplier `-k^2`, Nyquist included).
    pub fn second_derivative(&self) -> PeriodicField {
        self.spectral_multiply(|k| Complex64::new(-((k * k) as f64), 0.0))
    }

    /// Orthogonally project onto trigonometric polynomials of degree at most
    /// `max_mode`. Used to strip high-frequency noise before taking second
    /// derivatives of sampled (rather than analytic) data.
    pub fn low_pass(&self, max_mode: usize) -> PeriodicField {
        self.spectral_multiply(|k| {
            if k.unsigned_abs() as usize <= max_mode {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    /// Exact trigonometric interpolant of the samples.
    pub fn to_trig_series(&self) -> TrigSeries {
        let n = self.values.len();
        let mut buf: Vec<Complex64> = self
            .values
            .iter()
            .map(|&v| Complex64::new(v, 0.0))
            .collect();
        with_plans(n, |fw, _| fw.process(&mut buf));
        let half = n / 2;
        let mut cos = vec![0.0; half];
        let mut sin = vec![0.0; half];
        for k in 1..half {
            cos[k - 1] = 2.0 * buf[k].re / n as f64;
            sin[k - 1] = -2.0 * buf[k].im / n as f64;
        }
        cos[half - 1] = buf[half].re / n as f64;
        TrigSeries {
            constant: buf[0].re / n as f64,
            cos,
            sin,
        }
    }
}

/// A finite cosine/sine series `constant + sum_k (cos[k-1] cos(k theta) +
/// sin[k-1] sin(k theta))`, evaluable (with derivatives) at arbitrary angles.
#[derive(Clone, Debug, PartialEq)]
pub struct TrigSeries {
    pub constant: f64,
    pub cos: Vec<f64>,
    pub sin: Vec<f64>,
}

impl TrigSeries {
    pub fn eval(&self, theta: f64) -> f64 {
        let mut acc = self.constant;
        for (i, (&a, &b)) in self.cos.iter().zip(&self.sin).enumerate() {
            let k = (i + 1) as f64;
            acc += a * (k * theta).cos() + b * (k * theta).sin();
        }
        acc
    }

    pub fn eval_d(&self, theta: f64) -> f64 {
        let mut acc = 0.0;
        for (i, (&a, &b)) in self.cos.iter().zip(&self.sin).enumerate() {
            let k = (i + 1) as f64;
            acc += k * (b * (k * theta).cos() - a * (k * theta).sin());
        }
        acc
    }

    pub fn eval_dd(&self, theta: f64) -> f64 {
        let mut acc = 0.0;
        for (i, (&a, &b)) in self.cos.iter().zip(&self.sin).enumerate() {
            let k = (i + 1) as f64;
            acc -= k * k * (a * (k * theta).cos() + b * (k * theta).sin());
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn rejects_bad_grids() {
        assert!(PeriodicField::new(vec![1.0; 4]).is_err());
        assert!(PeriodicField::new(vec![1.0; 9]).is_err());
        assert!(PeriodicField::new(vec![1.0, f64::NAN, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0]).is_err());
        assert!(PeriodicField::new(vec![1.0; 8]).is_ok());
    }

    #[test]
    fn derivative_matches_closed_form() {
        // d/dtheta [cos(3 theta) + 0.5 sin(5 theta)]
        //   = -3 sin(3 theta) + 2.5 cos(5 theta)
        let f = PeriodicField::from_fn(64, |t| (3.0 * t).cos() + 0.5 * (5.0 * t).sin()).unwrap();
        let df = f.derivative();
        for i in 0..64 {
            let t = f.theta(i);
            let expect = -3.0 * (3.0 * t).sin() + 2.5 * (5.0 * t).cos();
            assert_relative_eq!(df.values()[i], expect, epsilon = 1e-11);
        }
    }

    #[test]
    fn second_derivative_matches_closed_form() {
        let f = PeriodicField::from_fn(32, |t| (5.0 * t).sin()).unwrap();
        let ddf = f.second_derivative();
        for i in 0..32 {
            let t = f.theta(i);
            assert_relative_eq!(ddf.values()[i], -25.0 * (5.0 * t).sin(), epsilon = 1e-10);
        }
    }

    #[test]
    fn nyquist_mode_handling() {
        // cos(n/2 theta) alternates +1/-1 on the grid. Its spectral first
        // derivative is defined as zero; the second derivative is exact.
        let n = 16;
        let f = PeriodicField::from_fn(n, |t| (8.0 * t).cos()).unwrap();
        let df = f.derivative();
        let ddf = f.second_derivative();
        for i in 0..n {
            assert_relative_eq!(df.values()[i], 0.0, epsilon = 1e-12);
            assert_relative_eq!(ddf.values()[i], -64.0 * f.values()[i], epsilon = 1e-10);
        }
    }

    #[test]
    fn trig_series_interpolates_off_grid() {
        let f = PeriodicField::from_fn(32, |t| {
            1.4 + 0.3 * (2.0 * t).cos() - 0.2 * (7.0 * t).sin()
        })
        .unwrap();
        let series = f.to_trig_series();
        assert_relative_eq!(series.constant, 1.4, epsilon = 1e-12);
        assert_relative_eq!(series.cos[1], 0.3, epsilon = 1e-12);
        assert_relative_eq!(series.sin[6], -0.2, epsilon = 1e-12);
        for k in 0..40 {
            let t = 0.137 + 0.143 * k as f64;
            let expect = 1.4 + 0.3 * (2.0 * t).cos() - 0.2 * (7.0 * t).sin();
            assert_relative_eq!(series.eval(t), expect, epsilon = 1e-11);
            let expect_d = -0.6 * (2.0 * t).sin() - 1.4 * (7.0 * t).cos();
            assert_relative_eq!(series.eval_d(t), expect_d, epsilon = 1e-11);
            let expect_dd = -1.2 * (2.0 * t).cos() + 9.8 * (7.0 * t).sin();
            assert_relative_eq!(series.eval_dd(t), expect_dd, epsilon = 1e-10);
        }
    }

    #[test]
    fn low_pass_removes_high_modes_only() {
        let f = PeriodicField::from_fn(64, |t| (2.0 * t).cos() + 0.1 * (20.0 * t).sin()).unwrap();
        let g = f.low_pass(8);
        for i in 0..64 {
            let t = f.theta(i);
            assert_relative_eq!(g.values()[i], (2.0 * t).cos(), epsilon = 1e-11);
        }
    }

    #[test]
    fn mean_of_squared_cosine() {
        let f = PeriodicField::from_fn(64, |t| (3.0 * t).cos().powi(2)).unwrap();
        assert_relative_eq!(f.mean(), 0.5, epsilon = 1e-13);
    }
}
