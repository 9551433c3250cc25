//! Causal prediction: Lagrange shift weights, the shifted kernels
//! `Theta~_{ni}(t) = sum_p a_p Theta_{ni}(t - eps_p)` and the predictor.

use std::ops::RangeInclusive;

use crate::error::{Error, Result};
use crate::kernels::{sampling_series, KernelFamily, KernelSet, SampleSource, SeriesTrace};
use crate::polyphase::SamplingScheme;

/// Tolerance on the relative Vandermonde residual of the weights.
pub const WEIGHT_TOLERANCE: f64 = 1e-9;

/// Above this many nodes the weight products are accumulated as logarithms.
const DIRECT_PRODUCT_MAX: usize = 8;

fn check_nodes(eps: &[f64]) -> Result<()> {
    if eps.is_empty() {
        return Err(Error::InvalidShifts("no shifts given".into()));
    }
    if eps.iter().any(|e| !e.is_finite() || *e == 0.0) {
        return Err(Error::InvalidShifts("shifts must be finite and nonzero".into()));
    }
    if eps.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidShifts(
            "shifts must be strictly increasing (repeated nodes)".into(),
        ));
    }
    Ok(())
}

/// Neumaier-compensated sum.
fn compensated_sum(terms: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for x in terms {
        let t = sum + x;
        comp += if sum.abs() >= x.abs() {
            (sum - t) + x
        } else {
            (x - t) + sum
        };
        sum = t;
    }
    sum + comp
}

/// Weights `a_p = prod_{q != p} eps_q / (eps_q - eps_p)`, the solution of
/// `sum_p a_p (-eps_p)^j = delta_{j0}` for `j < len`.
pub fn lagrange_weights(eps: &[f64]) -> Result<Vec<f64>> {
    check_nodes(eps)?;
    let others = |p: usize| eps.iter().enumerate().filter(move |(q, _)| *q != p).map(|(_, e)| *e);
    let weights = (0..eps.len())
        .map(|p| {
            let ep = eps[p];
            if eps.len() <= DIRECT_PRODUCT_MAX {
                others(p).map(|eq| eq / (eq - ep)).product()
            } else {
                let negative = others(p).filter(|eq| (eq / (eq - ep)) < 0.0).count();
                let log = compensated_sum(others(p).map(|eq| eq.abs().ln() - (eq - ep).abs().ln()));
                let sign = if negative % 2 == 0 { 1.0 } else { -1.0 };
                sign * log.exp()
            }
        })
        .collect();
    Ok(weights)
}

/// Weights for `eps_p = eps0 + p d`, from
/// `a_p = (-1)^p / (p! (rho - 1 - p)! (d0 + p)) * Gamma(d0 + rho) / Gamma(d0)`
/// with `d0 = eps0 / d`; the Gamma ratio is the rising factorial `d0 (d0 + 1) ... (d0 + rho - 1)`.
pub fn equally_spaced_weights(eps0: f64, d: f64, rho: usize) -> Result<Vec<f64>> {
    if !(d > 0.0 && d.is_finite()) {
        return Err(Error::InvalidShifts(format!("spacing must be positive, got {d}")));
    }
    if !(eps0 > 0.0 && eps0.is_finite()) {
        return Err(Error::InvalidShifts(format!("first shift must be positive, got {eps0}")));
    }
    if rho == 0 {
        return Err(Error::InvalidShifts("need at least one shift".into()));
    }
    let d0 = eps0 / d;
    let rising: f64 = (0..rho).map(|k| d0 + k as f64).product();
    let factorial = |n: usize| (1..=n).map(|k| k as f64).product::<f64>();
    Ok((0..rho)
        .map(|p| {
            let sign = if p % 2 == 0 { 1.0 } else { -1.0 };
            sign * rising / (factorial(p) * factorial(rho - 1 - p) * (d0 + p as f64))
        })
        .collect())
}

/// `max_j |sum_p a_p (-eps_p)^j - delta_{j0}| / max_p |a_p eps_p^j|` over `j < len`.
pub fn vandermonde_residual(eps: &[f64], weights: &[f64]) -> f64 {
    (0..eps.len())
        .map(|j| {
            let terms: Vec<f64> = eps
                .iter()
                .zip(weights)
                .map(|(e, a)| a * (-e).powi(j as i32))
                .collect();
            let scale = terms.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let target = if j == 0 { 1.0 } else { 0.0 };
            (compensated_sum(terms.into_iter()) - target).abs() / scale.max(f64::MIN_POSITIVE)
        })
        .fold(0.0, f64::max)
}

/// Shifted kernels supported in `(0, inf)` together with the shifts and weights.
#[derive(Debug, Clone)]
pub struct PredictionScheme {
    base: KernelSet,
    epsilons: Vec<f64>,
    weights: Vec<f64>,
}

impl PredictionScheme {
    /// Shifts `eps_0 < ... < eps_{rho-1}` with weights from [`lagrange_weights`].
    pub fn new(base: KernelSet, epsilons: Vec<f64>) -> Result<Self> {
        let weights = lagrange_weights(&epsilons)?;
        Self::with_weights(base, epsilons, weights)
    }

    /// Checks `eps_0 >= rho`, the shift count and the Vandermonde residual.
    pub fn with_weights(base: KernelSet, epsilons: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        check_nodes(&epsilons)?;
        let rho = base.scheme().rho();
        if epsilons.len() != rho || weights.len() != rho {
            return Err(Error::InvalidShifts(format!(
                "need {rho} shifts and weights, got {} and {}",
                epsilons.len(),
                weights.len()
            )));
        }
        if epsilons[0] < rho as f64 {
            return Err(Error::InvalidShifts(format!(
                "first shift {} is below rho = {rho}; kernels would reach t <= 0",
                epsilons[0]
            )));
        }
        let residual = vandermonde_residual(&epsilons, &weights);
        if !(residual <= WEIGHT_TOLERANCE) {
            return Err(Error::InvalidShifts(format!(
                "weights do not solve the Vandermonde system (relative residual {residual:e})"
            )));
        }
        Ok(Self {
            base,
            epsilons,
            weights,
        })
    }

    pub fn base(&self) -> &KernelSet {
        &self.base
    }

    pub fn epsilons(&self) -> &[f64] {
        &self.epsilons
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Upper bound `2 + floor((mu - 1 + eps_{rho-1} - eps_0) / rho)` on the window size.
    pub fn window_bound(&self) -> usize {
        let rho = self.base.scheme().rho() as f64;
        let spread = self.epsilons[self.epsilons.len() - 1] - self.epsilons[0];
        2 + ((self.base.generator().mu() - 1.0 + spread) / rho).floor() as usize
    }

    /// Most samples a single prediction can read, `rho * window_bound`.
    pub fn max_past_samples(&self) -> usize {
        self.base.scheme().rho() * self.window_bound()
    }

    /// `Theta~_{ni}(t)` with index checks.
    pub fn evaluate(&self, n: usize, i: usize, t: f64) -> Result<f64> {
        self.base.evaluate(n, i, 0.0)?;
        Ok(self.kernel_value(n, i, t))
    }
}

impl KernelFamily for PredictionScheme {
    fn scheme(&self) -> &SamplingScheme {
        self.base.scheme()
    }

    fn support(&self) -> (f64, f64) {
        let (a, b) = self.base.support();
        (a + self.epsilons[0], b + self.epsilons[self.epsilons.len() - 1])
    }

    fn kernel_value(&self, n: usize, i: usize, t: f64) -> f64 {
        let (lo, hi) = self.support();
        if t <= lo || t >= hi {
            return 0.0;
        }
        self.epsilons
            .iter()
            .zip(&self.weights)
            .map(|(e, a)| a * self.base.kernel_value(n, i, t - e))
            .sum()
    }

    /// Indices with `u - rho l` in the closed support; boundary ties are kept.
    fn window(&self, u: f64) -> (i64, i64) {
        let (a, b) = self.support();
        let rho = self.base.scheme().rho() as f64;
        (((u - b) / rho).ceil() as i64, ((u - a) / rho).floor() as i64)
    }
}

/// Builds the prediction kernels from given shifts and weights.
pub fn modify_kernels(ks: &KernelSet, epsilons: &[f64], weights: &[f64]) -> Result<PredictionScheme> {
    PredictionScheme::with_weights(ks.clone(), epsilons.to_vec(), weights.to_vec())
}

/// The index set `Omega_t` of past sampling blocks used at time `t`.
pub fn past_window(ps: &PredictionScheme, w: f64, t: f64) -> RangeInclusive<i64> {
    let (lo, hi) = ps.window(w * t);
    lo..=hi
}

/// Predictor `S~_W f(t)` from recorded samples `f^{(i)}((x_n + rho l) / W)`.
pub fn predict(
    ps: &PredictionScheme,
    samples: &(impl SampleSource + ?Sized),
    w: f64,
    t: f64,
) -> Result<f64> {
    Ok(predict_traced(ps, samples, w, t)?.value)
}

/// [`predict`] with the sample bookkeeping used for causality checks.
pub fn predict_traced(
    ps: &PredictionScheme,
    samples: &(impl SampleSource + ?Sized),
    w: f64,
    t: f64,
) -> Result<SeriesTrace> {
    if !(w > 0.0) {
        return Err(Error::InvalidParameter(format!("rate W must be positive, got {w}")));
    }
    sampling_series(ps, samples, w, t)
}

/// Predictor driven by a function `f(i, t) = f^{(i)}(t)`, sampled on demand.
pub fn predict_with(ps: &PredictionScheme, f: impl Fn(usize, f64) -> f64, w: f64, t: f64) -> Result<f64> {
    let scheme = ps.scheme();
    let samples = |n: usize, i: usize, l: i64| Some(f(i, scheme.sample_point(n, l) / w));
    predict(ps, &samples, w, t)
}
