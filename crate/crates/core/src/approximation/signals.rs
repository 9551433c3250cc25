use num_complex::Complex64;
use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::generators::Generator;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Smoothness {
    Smooth,
    JumpDiscontinuous,
}

/// Signals with derivatives, used to drive the sampling and prediction operators.
#[derive(Debug, Clone)]
pub enum TestSignal {
    /// `e^{-t^2/4} sin(2 pi t)`.
    GaussianSine,
    /// `-t^3/2 + 2` on `(-1.5, 3)`, zero elsewhere.
    TruncatedCubic,
    Zero,
    Constant(f64),
    /// `t^j`.
    Monomial(usize),
    /// `sum_k c_k phi(t - start - k)`, an element of the shift-invariant space.
    Spline {
        gen: Generator,
        start: i64,
        coeffs: Arc<Vec<f64>>,
    },
    /// Uniform table `values[k] = f(start + k step)`, linear interpolation,
    /// zero outside; derivatives up to order 2 by centered differences.
    Tabulated {
        start: f64,
        step: f64,
        values: Arc<Vec<f64>>,
    },
}

impl TestSignal {
    pub fn tabulated(start: f64, step: f64, values: Vec<f64>) -> Result<Self> {
        if !(step > 0.0 && step.is_finite() && start.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "tabulated signal needs a finite start and positive step, got {start}, {step}"
            )));
        }
        if values.len() < 2 || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(
                "tabulated signal needs at least two finite values".into(),
            ));
        }
        Ok(TestSignal::Tabulated {
            start,
            step,
            values: Arc::new(values),
        })
    }

    pub fn spline(gen: Generator, start: i64, coeffs: Vec<f64>) -> Self {
        TestSignal::Spline {
            gen,
            start,
            coeffs: Arc::new(coeffs),
        }
    }

    pub fn name(&self) -> String {
        match self {
            TestSignal::GaussianSine => "f".into(),
            TestSignal::TruncatedCubic => "g".into(),
            TestSignal::Zero => "zero".into(),
            TestSignal::Constant(c) => format!("constant({c})"),
            TestSignal::Monomial(j) => format!("t^{j}"),
            TestSignal::Spline { gen, .. } => format!("spline({gen})"),
            TestSignal::Tabulated { .. } => "tabulated".into(),
        }
    }

    pub fn smoothness(&self) -> Smoothness {
        match self {
            TestSignal::TruncatedCubic | TestSignal::Tabulated { .. } => Smoothness::JumpDiscontinuous,
            _ => Smoothness::Smooth,
        }
    }

    /// Highest derivative order the signal can supply.
    pub fn max_derivative(&self) -> usize {
        match self {
            TestSignal::Spline { gen, .. } => gen.regularity(),
            TestSignal::Tabulated { .. } => 2,
            _ => usize::MAX,
        }
    }

    /// Interval carrying the mass of the signal for error integrals.
    pub fn default_interval(&self) -> (f64, f64) {
        match self {
            TestSignal::TruncatedCubic => (-4.0, 6.0),
            TestSignal::Spline { gen, start, coeffs } => {
                (*start as f64, *start as f64 + coeffs.len() as f64 - 1.0 + gen.mu())
            }
            TestSignal::Tabulated { start, step, values } => {
                (*start, start + step * (values.len() - 1) as f64)
            }
            _ => (-8.0, 10.0),
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        self.derivative(0, t)
    }

    /// `f^{(order)}(t)`; NaN when the order exceeds [`Self::max_derivative`].
    pub fn derivative(&self, order: usize, t: f64) -> f64 {
        match self {
            TestSignal::GaussianSine => gaussian_sine(order, t),
            TestSignal::TruncatedCubic => {
                if !(t > -1.5 && t < 3.0) {
                    return 0.0;
                }
                match order {
                    0 => -0.5 * t * t * t + 2.0,
                    1 => -1.5 * t * t,
                    2 => -3.0 * t,
                    3 => -3.0,
                    _ => 0.0,
                }
            }
            TestSignal::Zero => 0.0,
            TestSignal::Constant(c) => {
                if order == 0 {
                    *c
                } else {
                    0.0
                }
            }
            TestSignal::Monomial(j) => {
                if order > *j {
                    0.0
                } else {
                    let falling: f64 = (0..order).map(|m| (j - m) as f64).product();
                    falling * t.powi((j - order) as i32)
                }
            }
            TestSignal::Spline { gen, start, coeffs } => {
                if order > gen.regularity() {
                    return f64::NAN;
                }
                let u = t - *start as f64;
                let k_hi = (u.floor() as i64).min(coeffs.len() as i64 - 1);
                let k_lo = ((u - gen.mu()).floor() as i64).max(0);
                (k_lo..=k_hi)
                    .map(|k| coeffs[k as usize] * gen.eval(order, u - k as f64))
                    .sum()
            }
            TestSignal::Tabulated { start, step, values } => {
                let f = |x: f64| {
                    let pos = (x - start) / step;
                    if pos < 0.0 || pos > (values.len() - 1) as f64 {
                        return 0.0;
                    }
                    let k = (pos.floor() as usize).min(values.len() - 2);
                    let frac = pos - k as f64;
                    values[k] * (1.0 - frac) + values[k + 1] * frac
                };
                match order {
                    0 => f(t),
                    1 => (f(t + step) - f(t - step)) / (2.0 * step),
                    2 => (f(t + step) - 2.0 * f(t) + f(t - step)) / (step * step),
                    _ => f64::NAN,
                }
            }
        }
    }
}

/// Derivatives of `Im e^{q(t)}` with `q(t) = -t^2/4 + 2 pi i t`, through
/// `g^{(k+1)} = q' g^{(k)} + k q'' g^{(k-1)}`.
fn gaussian_sine(order: usize, t: f64) -> f64 {
    let g0 = Complex64::from_polar((-t * t / 4.0).exp(), 2.0 * PI * t);
    let dq = Complex64::new(-t / 2.0, 2.0 * PI);
    let (mut prev, mut cur) = (Complex64::new(0.0, 0.0), g0);
    for k in 0..order {
        let next = dq * cur - 0.5 * k as f64 * prev;
        prev = cur;
        cur = next;
    }
    cur.im
}
