//! Daubechies scaling functions tabulated on a dyadic grid.
//!
//! The filter taps come from the usual spectral factorization: the roots of
//! `P(y) = sum_{k<d} C(d-1+k, k) y^k` are mapped through
//! `y = (2 - z - 1/z) / 4` and the roots inside the unit circle are kept,
//! which yields the minimum-phase filter. Values at the integers are the
//! fixed point of the cascade iteration restricted to the integers; every
//! finer dyadic level then follows exactly from the refinement equation
//! `phi(t) = sqrt(2) sum_k h_k phi(2t - k)`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use std::collections::HashMap;
use std::f64::consts::SQRT_2;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};

/// Dyadic refinement depth of the table (grid step `2^-14`).
pub const CASCADE_LEVELS: u32 = 14;

/// Largest successive-iteration difference accepted for the integer values.
pub const CASCADE_TOLERANCE: f64 = 1e-7;

const MAX_CASCADE_ITERATIONS: usize = 2000;

/// Scaling function values on the grid `k / 2^CASCADE_LEVELS`, `0 <= k <= (2d-1) 2^CASCADE_LEVELS`.
#[derive(Debug, Clone)]
pub struct CascadeTable {
    pub order: usize,
    pub taps: Vec<f64>,
    pub step: f64,
    pub values: Vec<f64>,
}

impl CascadeTable {
    pub fn support(&self) -> f64 {
        (2 * self.order - 1) as f64
    }

    /// Linear interpolation between grid points; zero outside `(0, 2d-1)`.
    pub fn eval(&self, t: f64) -> f64 {
        interpolate(&self.values, self.step, t)
    }
}

pub(crate) fn interpolate(values: &[f64], step: f64, t: f64) -> f64 {
    let last = values.len() - 1;
    let pos = t / step;
    if !(pos > 0.0 && pos < last as f64) {
        return 0.0;
    }
    let k = pos.floor() as usize;
    let frac = pos - k as f64;
    if k >= last {
        return values[last];
    }
    values[k] + frac * (values[k + 1] - values[k])
}

/// Orthonormal Daubechies lowpass taps of order `d` (length `2d`), normalized to `sum h = sqrt(2)`.
pub fn daubechies_filter(d: usize) -> Result<Vec<f64>> {
    if d == 0 {
        return Err(Error::InvalidOrder(d));
    }
    let mut roots_z = Vec::with_capacity(d - 1);
    if d > 1 {
        // P(y) coefficients, lowest degree first.
        let mut coeffs = Vec::with_capacity(d);
        let mut binom = 1.0;
        for k in 0..d {
            if k > 0 {
                binom = binom * (d - 1 + k) as f64 / k as f64;
            }
            coeffs.push(binom);
        }
        for y in polynomial_roots(&coeffs)? {
            // z^2 - (2 - 4y) z + 1 = 0
            let b = Complex64::new(2.0, 0.0) - y * 4.0;
            let disc = (b * b - 4.0).sqrt();
            let z1 = (b + disc) / 2.0;
            let z2 = (b - disc) / 2.0;
            roots_z.push(if z1.norm() < z2.norm() { z1 } else { z2 });
        }
    }
    // p(z) = (1 + z)^d prod (z - z_k), lowest degree first.
    let mut poly = vec![Complex64::new(1.0, 0.0)];
    let mut mul = |root: Complex64, lead: Complex64| {
        let mut next = vec![Complex64::new(0.0, 0.0); poly.len() + 1];
        for (k, c) in poly.iter().enumerate() {
            next[k] += c * root;
            next[k + 1] += c * lead;
        }
        poly = next;
    };
    for _ in 0..d {
        mul(Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0));
    }
    for z in &roots_z {
        mul(-z, Complex64::new(1.0, 0.0));
    }
    let sum: f64 = poly.iter().map(|c| c.re).sum();
    // Imaginary parts cancel between conjugate root pairs; the
    // orthogonality check certifies what is left.
    let taps: Vec<f64> = poly.iter().rev().map(|c| c.re * SQRT_2 / sum).collect();
    validate_filter(&taps)?;
    Ok(taps)
}

/// Checks `sum h = sqrt(2)` and `sum_k h_k h_{k+2m} = delta_{m0}`.
pub fn validate_filter(taps: &[f64]) -> Result<()> {
    let sum: f64 = taps.iter().sum();
    if (sum - SQRT_2).abs() > 1e-10 {
        return Err(Error::InvalidFilter(format!("tap sum {sum} != sqrt(2)")));
    }
    for shift in (0..taps.len()).step_by(2) {
        let dot: f64 = taps
            .iter()
            .zip(taps.iter().skip(shift))
            .map(|(a, b)| a * b)
            .sum();
        let expected = if shift == 0 { 1.0 } else { 0.0 };
        if (dot - expected).abs() > 1e-10 {
            return Err(Error::InvalidFilter(format!(
                "shift-{shift} autocorrelation {dot} != {expected}"
            )));
        }
    }
    Ok(())
}

/// Roots of a real polynomial given lowest degree first, via companion-matrix eigenvalues.
fn polynomial_roots(coeffs: &[f64]) -> Result<Vec<Complex64>> {
    let degree = coeffs.len() - 1;
    let lead = coeffs[degree];
    if degree == 0 || lead == 0.0 {
        return Err(Error::InvalidFilter("degenerate polynomial".into()));
    }
    let mut companion = DMatrix::<f64>::zeros(degree, degree);
    for i in 1..degree {
        companion[(i, i - 1)] = 1.0;
    }
    for i in 0..degree {
        companion[(i, degree - 1)] = -coeffs[i] / lead;
    }
    Ok(companion.complex_eigenvalues().iter().copied().collect())
}

/// Builds the dyadic table for order `d`.
pub fn cascade_table(d: usize) -> Result<CascadeTable> {
    // The Haar box is discontinuous at the integers and has no interior integer values.
    if d < 2 {
        return Err(Error::InvalidOrder(d));
    }
    let taps = daubechies_filter(d)?;
    let support = 2 * d - 1;
    let scale = 1usize << CASCADE_LEVELS;
    let mut values = vec![0.0; support * scale + 1];

    // Interior integers 1..=support-1; phi vanishes at 0 and at the support end.
    let interior = support.saturating_sub(1);
    if interior > 0 {
        let tap = |k: isize| -> f64 {
            if k >= 0 && (k as usize) < taps.len() {
                taps[k as usize]
            } else {
                0.0
            }
        };
        let mut v = vec![1.0 / interior as f64; interior];
        let mut residual = f64::INFINITY;
        for _ in 0..MAX_CASCADE_ITERATIONS {
            let mut next: Vec<f64> = (1..=interior)
                .map(|i| {
                    (1..=interior)
                        .map(|j| SQRT_2 * tap(2 * i as isize - j as isize) * v[j - 1])
                        .sum()
                })
                .collect();
            let total: f64 = next.iter().sum();
            next.iter_mut().for_each(|x| *x /= total);
            residual = next
                .iter()
                .zip(&v)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            v = next;
            if residual < 1e-15 {
                break;
            }
        }
        if !(residual < CASCADE_TOLERANCE) {
            return Err(Error::CascadeDiverged {
                residual,
                tolerance: CASCADE_TOLERANCE,
            });
        }
        for (i, value) in v.iter().enumerate() {
            values[(i + 1) * scale] = *value;
        }
    }

    for level in 1..=CASCADE_LEVELS {
        let stride = scale >> level;
        let mut idx = stride;
        while idx < values.len() {
            // phi(idx/scale) = sqrt(2) sum_k h_k phi(2 idx/scale - k)
            let mut acc = 0.0;
            for (k, h) in taps.iter().enumerate() {
                let arg = 2 * idx as isize - (k * scale) as isize;
                if arg > 0 && (arg as usize) < values.len() {
                    acc += h * values[arg as usize];
                }
            }
            values[idx] = SQRT_2 * acc;
            idx += 2 * stride;
        }
    }

    Ok(CascadeTable {
        order: d,
        taps,
        step: 1.0 / scale as f64,
        values,
    })
}

/// Shared, lazily built table for order `d`.
pub fn cached_table(d: usize) -> Result<Arc<CascadeTable>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<CascadeTable>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(table) = cache.lock().expect("cascade cache poisoned").get(&d) {
        return Ok(table.clone());
    }
    let table = Arc::new(cascade_table(d)?);
    cache
        .lock()
        .expect("cascade cache poisoned")
        .insert(d, table.clone());
    Ok(table)
}

/// Daubechies scaling function of order `d` at `t`, supported on `[0, 2d-1]`.
pub fn daubechies_eval(d: usize, t: f64) -> Result<f64> {
    Ok(cached_table(d)?.eval(t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn db2_taps_match_closed_form() {
        let taps = daubechies_filter(2).unwrap();
        let s3 = 3f64.sqrt();
        let denom = 4.0 * SQRT_2;
        let expected = [(1.0 + s3) / denom, (3.0 + s3) / denom, (3.0 - s3) / denom, (1.0 - s3) / denom];
        for (a, b) in taps.iter().zip(expected) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn db3_taps_are_orthonormal_and_minimum_phase() {
        let taps = daubechies_filter(3).unwrap();
        assert_eq!(taps.len(), 6);
        validate_filter(&taps).unwrap();
        // Energy front-loaded: the leading taps dominate.
        assert!(taps[1] > taps[0] && taps[0] > 0.3);
        assert!(taps[5].abs() < 0.05);
    }

    #[test]
    fn haar_is_rejected() {
        assert_eq!(cascade_table(1).unwrap_err(), Error::InvalidOrder(1));
        assert_eq!(daubechies_filter(1).unwrap(), vec![SQRT_2 / 2.0, SQRT_2 / 2.0]);
    }

    #[test]
    fn db3_integer_values_solve_the_refinement_eigenproblem() {
        let table = cascade_table(3).unwrap();
        let taps = &table.taps;
        let phi: Vec<f64> = (0..=5).map(|k| table.eval(k as f64)).collect();
        assert_eq!(phi[0], 0.0);
        assert_eq!(phi[5], 0.0);
        assert_abs_diff_eq!(phi.iter().sum::<f64>(), 1.0, epsilon = 1e-13);
        for i in 1..5 {
            let mut acc = 0.0;
            for (j, value) in phi.iter().enumerate() {
                let k = 2 * i as isize - j as isize;
                if (0..6).contains(&k) {
                    acc += SQRT_2 * taps[k as usize] * value;
                }
            }
            assert_abs_diff_eq!(acc, phi[i], epsilon = 1e-13);
        }
        assert_eq!(daubechies_eval(3, 1.0).unwrap(), phi[1]);
    }

    #[test]
    fn db3_refinement_holds_on_the_grid() {
        let table = cascade_table(3).unwrap();
        let scale = 1usize << CASCADE_LEVELS;
        let mut worst: f64 = 0.0;
        for idx in (0..table.values.len()).step_by(7) {
            let mut acc = 0.0;
            for (k, h) in table.taps.iter().enumerate() {
                let arg = 2 * idx as isize - (k * scale) as isize;
                if arg >= 0 && (arg as usize) < table.values.len() {
                    acc += h * table.values[arg as usize];
                }
            }
            worst = worst.max((SQRT_2 * acc - table.values[idx]).abs());
        }
        assert!(worst <= 1e-8, "refinement residual {worst}");
    }

    #[test]
    fn db3_partition_of_unity() {
        let table = cascade_table(3).unwrap();
        for j in 0..997 {
            let t = j as f64 * 0.001003;
            let sum: f64 = (-6..=6).map(|k| table.eval(t - k as f64)).sum();
            assert_abs_diff_eq!(sum, 1.0, epsilon = 1e-10);
        }
    }
}
