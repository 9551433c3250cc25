use std::f64::consts::PI;

use super::{bspline::bspline_raw, Generator};
use crate::error::{Error, Result};

/// Extremes of `Phi(w) = sum_n |phi^(w + n)|^2` over `w in [0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityBounds {
    pub phi_min: f64,
    pub phi_max: f64,
    pub argmin: f64,
}

/// Grid extremes of the stability function on `w_j = j / grid_n`, `0 <= j <= grid_n`.
///
/// `Phi` is evaluated through its Fourier series
/// `Phi(w) = sum_k a_k e^{-2 pi i k w}` with `a_k = int phi(t) phi(t + k) dt`,
/// which is a finite sum for compact support. For `Q_m` the autocorrelation
/// is exact, `a_k = Q_{2m}(m + k)`; other generators use composite Simpson
/// quadrature on their native grid. A `phi_min` near zero means the integer
/// shifts are not a Riesz basis.
pub fn stability_bounds(gen: &Generator, grid_n: usize) -> Result<StabilityBounds> {
    if grid_n < 64 {
        return Err(Error::InvalidParameter(format!(
            "stability grid needs at least 64 points, got {grid_n}"
        )));
    }
    let autocorr = autocorrelation(gen);
    let mut out = StabilityBounds {
        phi_min: f64::INFINITY,
        phi_max: f64::NEG_INFINITY,
        argmin: 0.0,
    };
    for j in 0..=grid_n {
        let w = j as f64 / grid_n as f64;
        let value = autocorr[0]
            + 2.0
                * autocorr
                    .iter()
                    .enumerate()
                    .skip(1)
                    .map(|(k, a)| a * (2.0 * PI * k as f64 * w).cos())
                    .sum::<f64>();
        if value < out.phi_min {
            out.phi_min = value;
            out.argmin = w;
        }
        out.phi_max = out.phi_max.max(value);
    }
    Ok(out)
}

/// `a_k` for `k = 0, 1, ..., ceil(mu)`; the sequence is even in `k`.
fn autocorrelation(gen: &Generator) -> Vec<f64> {
    let lags = gen.mu().ceil() as usize;
    if let Some(m) = gen.bspline_order() {
        return (0..lags)
            .map(|k| bspline_raw(2 * m, 0, (m + k) as f64))
            .collect();
    }
    let mut panels = (gen.mu() / gen.quadrature_step()).round() as usize;
    panels += panels % 2;
    let h = gen.mu() / panels as f64;
    (0..lags)
        .map(|k| {
            let f = |j: usize| {
                let t = j as f64 * h;
                gen.value(t) * gen.value(t + k as f64)
            };
            let mut acc = f(0) + f(panels);
            for j in 1..panels {
                acc += if j % 2 == 1 { 4.0 } else { 2.0 } * f(j);
            }
            acc * h / 3.0
        })
        .collect()
}
