//! Cardinal B-splines `Q_m` with integer knots `0, 1, ..., m`.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Evaluates the `s`-th derivative of the cardinal B-spline `Q_m` at `t`.
///
/// Values come from the Cox-de Boor triangle, derivatives from
/// `Q_m^{(s)}(t) = sum_j (-1)^j C(s, j) Q_{m-s}(t - j)`. At knots the
/// piecewise-polynomial derivatives take their right-hand limit, so
/// `s = m - 1` is accepted and returns the one-sided value.
pub fn bspline_eval(m: usize, s: usize, t: f64) -> Result<f64> {
    if m == 0 {
        return Err(Error::InvalidOrder(m));
    }
    if s >= m {
        return Err(Error::DerivativeOrder {
            requested: s,
            available: m - 1,
        });
    }
    Ok(bspline_raw(m, s, t))
}

/// Unchecked evaluation; callers guarantee `m >= 1` and `s < m`.
pub(crate) fn bspline_raw(m: usize, s: usize, t: f64) -> f64 {
    let mf = m as f64;
    if !(0.0..mf).contains(&t) || (t == 0.0 && m == 1) {
        return 0.0;
    }
    let lower = m - s;
    // n[j] holds Q_ord(t - j) while ord climbs from 1 to m - s.
    let mut n = [0.0f64; 32];
    let mut heap;
    let n: &mut [f64] = if m <= 32 {
        &mut n[..m]
    } else {
        heap = vec![0.0; m];
        &mut heap[..]
    };
    let cell = t.floor() as usize;
    n[cell] = 1.0;
    for ord in 2..=lower {
        let denom = (ord - 1) as f64;
        for j in 0..=(m - ord) {
            let u = t - j as f64;
            n[j] = (u * n[j] + (ord as f64 - u) * n[j + 1]) / denom;
        }
    }
    let mut acc = 0.0;
    let mut binom = 1.0;
    for (j, value) in n.iter().enumerate().take(s + 1) {
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        acc += sign * binom * value;
        binom = binom * (s - j) as f64 / (j + 1) as f64;
    }
    acc
}

/// Fourier transform `Q_m^(w) = (sin(pi w) / (pi w))^m e^{-i pi m w}`
/// under the convention `f^(w) = int f(x) e^{-2 pi i w x} dx`.
pub fn bspline_fourier(m: usize, w: f64) -> Complex64 {
    let sinc = if w == 0.0 {
        1.0
    } else {
        (PI * w).sin() / (PI * w)
    };
    Complex64::from_polar(sinc.powi(m as i32), -PI * m as f64 * w)
}
