//! The sampling operator `S_W`, `L^p` error measurement, convergence-rate
//! fits and the averaged modulus of smoothness.

mod signals;

use rayon::prelude::*;

pub use signals::{Smoothness, TestSignal};

use crate::error::{Error, Result};
use crate::kernels::{sampling_series, KernelFamily};

/// Relative change below which quadrature refinement stops.
pub const QUADRATURE_STABILITY: f64 = 1e-3;
/// Quadrature step is at most `1 / (STEPS_PER_UNIT * W)`.
pub const STEPS_PER_UNIT: f64 = 50.0;
/// Errors below this fraction of `max(1, ||f||_p)` are treated as roundoff.
pub const NOISE_FLOOR: f64 = 1e-9;
const MAX_PANELS: usize = 1 << 24;

/// `S_W f(t) = sum_l sum_n sum_i W^{-i} f^{(i)}((x_n + rho l) / W) K_{ni}(W t - rho l)`.
///
/// With reconstruction kernels this is the approximation operator, with
/// prediction kernels the causal predictor.
pub fn approx_operator<K: KernelFamily + ?Sized>(family: &K, signal: &TestSignal, w: f64, t: f64) -> f64 {
    let scheme = family.scheme();
    let samples = |n: usize, i: usize, l: i64| Some(signal.derivative(i, scheme.sample_point(n, l) / w));
    // A function-backed source never misses a sample.
    sampling_series(family, &samples, w, t)
        .map(|trace| trace.value)
        .unwrap_or(f64::NAN)
}

/// One abscissa of a `(t, f(t), S_W f(t))` trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint {
    pub t: f64,
    pub exact: f64,
    pub approx: f64,
}

/// Operator values at the given abscissae, evaluated in parallel.
pub fn trace<K: KernelFamily + ?Sized>(family: &K, signal: &TestSignal, w: f64, ts: &[f64]) -> Vec<TracePoint> {
    ts.par_iter()
        .map(|&t| TracePoint {
            t,
            exact: signal.value(t),
            approx: approx_operator(family, signal, w, t),
        })
        .collect()
}

/// Integration window for error norms: the signal's own interval, widened by
/// one kernel support width (in time units `1 / W`) for the smooth test signal.
pub fn default_error_interval<K: KernelFamily + ?Sized>(family: &K, signal: &TestSignal, w: f64) -> (f64, f64) {
    let (lo, hi) = signal.default_interval();
    match signal {
        TestSignal::GaussianSine => {
            let (a, b) = family.support();
            let pad = (b - a) / w;
            (lo - pad, hi + pad)
        }
        _ => (lo, hi),
    }
}

fn check_norm_params(w: f64, p: f64, interval: (f64, f64)) -> Result<()> {
    if !(w > 0.0 && w.is_finite()) {
        return Err(Error::InvalidParameter(format!("rate W must be positive, got {w}")));
    }
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::InvalidParameter(format!("exponent p must be in [1, inf), got {p}")));
    }
    if !(interval.0 < interval.1) || !interval.0.is_finite() || !interval.1.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "invalid integration interval [{}, {}]",
            interval.0, interval.1
        )));
    }
    Ok(())
}

/// `(int_a^b |S_W f - f|^p)^{1/p}` by composite Simpson with `quad_n` panels (rounded up to even).
pub fn lp_error<K: KernelFamily + ?Sized>(
    family: &K,
    signal: &TestSignal,
    w: f64,
    p: f64,
    interval: (f64, f64),
    quad_n: usize,
) -> Result<f64> {
    check_norm_params(w, p, interval)?;
    let panels = (quad_n.max(2) + 1) & !1;
    let (a, b) = interval;
    let h = (b - a) / panels as f64;
    let sum: f64 = (0..=panels)
        .into_par_iter()
        .map(|k| {
            let t = a + k as f64 * h;
            let weight = if k == 0 || k == panels {
                1.0
            } else if k % 2 == 1 {
                4.0
            } else {
                2.0
            };
            weight * (approx_operator(family, signal, w, t) - signal.value(t)).abs().powf(p)
        })
        .sum();
    Ok((sum * h / 3.0).powf(1.0 / p))
}

/// Roundoff level for errors of `signal`: [`NOISE_FLOOR`] times
/// `max(1, ||f||_p)` over the interval (Simpson, `panels` panels).
pub fn noise_floor(signal: &TestSignal, p: f64, interval: (f64, f64), panels: usize) -> f64 {
    let panels = (panels.max(2) + 1) & !1;
    let (a, b) = interval;
    let h = (b - a) / panels as f64;
    let sum: f64 = (0..=panels)
        .map(|k| {
            let weight = match k {
                0 => 1.0,
                k if k == panels => 1.0,
                k if k % 2 == 1 => 4.0,
                _ => 2.0,
            };
            weight * signal.value(a + k as f64 * h).abs().powf(p)
        })
        .sum();
    NOISE_FLOOR * (sum * h / 3.0).powf(1.0 / p).max(1.0)
}

fn initial_panels(w: f64, interval: (f64, f64)) -> usize {
    (((interval.1 - interval.0) * STEPS_PER_UNIT * w).ceil() as usize).max(16)
}

/// [`lp_error`] starting from step `1 / (50 W)` and doubling the panel count
/// until successive values agree to [`QUADRATURE_STABILITY`] relative, or
/// the error has sunk below the [`noise_floor`].
pub fn lp_error_auto<K: KernelFamily + ?Sized>(
    family: &K,
    signal: &TestSignal,
    w: f64,
    p: f64,
    interval: (f64, f64),
) -> Result<f64> {
    check_norm_params(w, p, interval)?;
    let mut panels = initial_panels(w, interval);
    let floor = noise_floor(signal, p, interval, panels);
    let mut prev = lp_error(family, signal, w, p, interval, panels)?;
    loop {
        panels *= 2;
        let next = lp_error(family, signal, w, p, interval, panels)?;
        let settled = (next - prev).abs() <= QUADRATURE_STABILITY * next.abs() || next.abs() < floor;
        if settled || panels >= MAX_PANELS {
            if !settled {
                log::warn!("quadrature did not settle at W = {w}: {prev} vs {next}");
            }
            return Ok(next);
        }
        prev = next;
    }
}

/// Errors per rate and the fitted log-log slope.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    /// `(W, error)` in input order.
    pub rows: Vec<(f64, f64)>,
    /// Least-squares slope of `ln error` against `ln W`; `None` when fewer
    /// than two errors lie above the noise floor.
    pub slope: Option<f64>,
    pub p: f64,
}

/// Ordinary least-squares slope of `y` against `x`.
pub fn ols_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::DegenerateFit(format!(
            "need at least two paired points, got {} and {}",
            xs.len(),
            ys.len()
        )));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx <= 0.0 {
        return Err(Error::DegenerateFit("all abscissae coincide".into()));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    Ok(sxy / sxx)
}

/// `L^p` errors for each rate in `ws` over [`default_error_interval`] and the
/// fitted slope; errors below the [`noise_floor`] (and so below `1e3` machine
/// epsilons) are left out of the fit.
pub fn convergence_study<K: KernelFamily + ?Sized>(
    family: &K,
    signal: &TestSignal,
    ws: &[f64],
    p: f64,
) -> Result<ConvergenceReport> {
    if ws.len() < 3 {
        return Err(Error::DegenerateFit(format!(
            "need at least three rates, got {}",
            ws.len()
        )));
    }
    let measured = ws
        .par_iter()
        .map(|&w| {
            let interval = default_error_interval(family, signal, w);
            let floor = noise_floor(signal, p, interval, initial_panels(w, interval));
            let err = lp_error_auto(family, signal, w, p, interval)?;
            Ok((w, err, floor.max(1e3 * f64::EPSILON)))
        })
        .collect::<Result<Vec<_>>>()?;
    let (xs, ys): (Vec<f64>, Vec<f64>) = measured
        .iter()
        .filter(|(_, e, floor)| e >= floor)
        .map(|(w, e, _)| (w.ln(), e.ln()))
        .unzip();
    let rows = measured.into_iter().map(|(w, e, _)| (w, e)).collect();
    let slope = if xs.len() >= 2 { Some(ols_slope(&xs, &ys)?) } else { None };
    Ok(ConvergenceReport { rows, slope, p })
}

/// Grid for [`tau_modulus_estimate`]: `points` abscissae on `[lo, hi]`, and
/// `lattice` subdivisions of each local window for the `(t, h)` search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TauGrid {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
    pub lattice: usize,
}

impl TauGrid {
    pub fn new(lo: f64, hi: f64, points: usize) -> Self {
        Self {
            lo,
            hi,
            points,
            lattice: 32,
        }
    }
}

/// Lattice lower bound of the averaged modulus `tau_r(f; delta)_p`.
///
/// At each grid point `x` the local modulus
/// `sup { |Delta_h^r f(t)| : t, t + r h in [x - r delta / 2, x + r delta / 2] }`
/// is maximized over lattice pairs `(t, t + r h)`, and the results enter a
/// Riemann sum for the `L^p` norm.
pub fn tau_modulus_estimate(signal: &TestSignal, r: usize, delta: f64, p: f64, grid: TauGrid) -> Result<f64> {
    if !(delta > 0.0) || r == 0 {
        return Err(Error::InvalidParameter(format!(
            "need delta > 0 and r >= 1, got delta = {delta}, r = {r}"
        )));
    }
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::InvalidParameter(format!("exponent p must be in [1, inf), got {p}")));
    }
    if grid.points < 2 || grid.lattice < 1 || !(grid.lo < grid.hi) {
        return Err(Error::InvalidParameter("degenerate grid".into()));
    }
    let dx = (grid.hi - grid.lo) / (grid.points - 1) as f64;
    if dx > delta / 8.0 {
        return Err(Error::InvalidParameter(format!(
            "grid step {dx} is coarser than delta / 8 = {}",
            delta / 8.0
        )));
    }
    let width = r as f64 * delta;
    let binom: Vec<f64> = (0..=r)
        .scan(1.0, |c, j| {
            let out = *c;
            *c = *c * (r - j) as f64 / (j + 1) as f64;
            Some(out)
        })
        .collect();
    let sum: f64 = (0..grid.points)
        .into_par_iter()
        .map(|k| {
            let x = grid.lo + k as f64 * dx;
            let start = x - width / 2.0;
            let step = width / grid.lattice as f64;
            let mut best = 0.0f64;
            for a in 0..=grid.lattice {
                for b in a + 1..=grid.lattice {
                    let t = start + a as f64 * step;
                    let h = (b - a) as f64 * step / r as f64;
                    let diff: f64 = (0..=r)
                        .map(|j| {
                            let sign = if (r - j) % 2 == 0 { 1.0 } else { -1.0 };
                            sign * binom[j] * signal.value(t + j as f64 * h)
                        })
                        .sum();
                    best = best.max(diff.abs());
                }
            }
            best.powf(p)
        })
        .sum();
    Ok((sum * dx).powf(1.0 / p))
}
