//! Sampling schemes, the polyphase matrix `Psi(x)` and the complete
//! interpolation (CIS) test.

mod laurent;
mod scheme;

use nalgebra::DMatrix;
use num_complex::Complex64;
use std::f64::consts::PI;

pub use laurent::LaurentMatrix;
pub use scheme::SamplingScheme;

use crate::error::{Error, Result};
use crate::generators::Generator;

/// `|det C|` above this declares a complete interpolation set.
pub const CIS_THRESHOLD: f64 = 1e-9;
/// Determinants between this floor and [`CIS_THRESHOLD`] are reported as near-singular.
pub const NEAR_SINGULAR_FLOOR: f64 = 1e-12;
/// Default resolution of grids over `x in [0, 1)`.
pub const DEFAULT_CIRCLE_GRID: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CisVerdict {
    Cis,
    NearSingular,
    NotCis,
}

impl CisVerdict {
    pub fn from_determinant(det: f64) -> Self {
        let mag = det.abs();
        if mag > CIS_THRESHOLD {
            CisVerdict::Cis
        } else if mag >= NEAR_SINGULAR_FLOOR {
            log::warn!("near-singular sampling determinant {det:e}");
            CisVerdict::NearSingular
        } else {
            CisVerdict::NotCis
        }
    }

    pub fn is_cis(self) -> bool {
        self == CisVerdict::Cis
    }
}

impl std::fmt::Display for CisVerdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CisVerdict::Cis => "CIS",
            CisVerdict::NearSingular => "near-singular",
            CisVerdict::NotCis => "not CIS",
        })
    }
}

fn check_regularity(gen: &Generator, scheme: &SamplingScheme) -> Result<()> {
    if scheme.r() - 1 > gen.regularity() {
        return Err(Error::DerivativeOrder {
            requested: scheme.r() - 1,
            available: gen.regularity(),
        });
    }
    Ok(())
}

/// Polyphase matrix with entries
/// `Psi_{i,q}(x) = sum_k phi^{(d_i)}(t_i + rho k - q) z^k`, row `i = n r + p`.
///
/// The range of `k` follows from the support of `phi`; when `rho >= mu - 1`
/// and the offsets share a cell only `k = 0, 1` survive.
pub fn build_polyphase(gen: &Generator, scheme: &SamplingScheme) -> Result<LaurentMatrix> {
    check_regularity(gen, scheme)?;
    let rho = scheme.rho();
    let rho_f = rho as f64;
    let mut coeffs: std::collections::BTreeMap<i64, DMatrix<f64>> = Default::default();
    for i in 0..rho {
        let (t, d) = (scheme.row_offset(i), scheme.row_derivative(i));
        for q in 0..rho {
            let qf = q as f64;
            let k_lo = ((qf - t) / rho_f).floor() as i64;
            let k_hi = ((qf + gen.mu() - t) / rho_f).ceil() as i64;
            for k in k_lo..=k_hi {
                let v = gen.eval(d, t + rho_f * k as f64 - qf);
                if v != 0.0 {
                    coeffs
                        .entry(k)
                        .or_insert_with(|| DMatrix::zeros(rho, rho))[(i, q)] = v;
                }
            }
        }
    }
    LaurentMatrix::from_coeffs(rho, coeffs)
}

/// Matrix `C_{ij} = phi^{(i mod r)}(x_{i / r} - s - 1 + rho - j)` for a chosen cell `s`.
///
/// Its entries are the derivatives of the shifted generators
/// `phi(t - (s + 1 - rho + j))` at the row offsets.
pub fn cis_matrix(gen: &Generator, scheme: &SamplingScheme, s: usize) -> Result<DMatrix<f64>> {
    check_regularity(gen, scheme)?;
    let rho = scheme.rho();
    Ok(DMatrix::from_fn(rho, rho, |i, j| {
        let arg = scheme.row_offset(i) - s as f64 - 1.0 + rho as f64 - j as f64;
        gen.eval(scheme.row_derivative(i), arg)
    }))
}

/// `det C` for a scheme whose offsets share the cell `[s, s + 1)` and `rho >= mu`.
///
/// A nonzero value is equivalent to the scheme being a complete interpolation
/// set of order `r - 1`; see [`CisVerdict::from_determinant`].
pub fn cis_determinant(gen: &Generator, scheme: &SamplingScheme) -> Result<f64> {
    let s = scheme.cell().ok_or_else(|| {
        Error::InvalidScheme("offsets do not lie in a common unit cell [s, s + 1)".into())
    })?;
    if (scheme.rho() as f64) < gen.mu() {
        return Err(Error::InvalidScheme(format!(
            "period rho = {} is shorter than the generator support {}",
            scheme.rho(),
            gen.mu()
        )));
    }
    Ok(cis_matrix(gen, scheme, s)?.determinant())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircleMinimum {
    pub min_abs: f64,
    pub argmin: f64,
}

fn check_grid(n_grid: usize, at_least: usize) -> Result<()> {
    if n_grid < at_least {
        return Err(Error::InvalidParameter(format!(
            "grid needs at least {at_least} points, got {n_grid}"
        )));
    }
    Ok(())
}

/// Minimum of `|det Psi(x)|` over `x_j = j / n_grid`.
pub fn det_on_circle(psi: &LaurentMatrix, n_grid: usize) -> Result<CircleMinimum> {
    check_grid(n_grid, 32)?;
    let mut best = CircleMinimum {
        min_abs: f64::INFINITY,
        argmin: 0.0,
    };
    for j in 0..n_grid {
        let x = j as f64 / n_grid as f64;
        let mag = psi.det(x).norm();
        if mag < best.min_abs {
            best = CircleMinimum { min_abs: mag, argmin: x };
        }
    }
    Ok(best)
}

/// Sampling frame bounds `A <= B` with
/// `A ||f||^2 <= sum |f^{(d)}(x)|^2 <= B ||f||^2` over the sampling set.
///
/// `A = inf_x lambda_min(Psi* Psi) / phi_max` and
/// `B = sup_x lambda_max(Psi* Psi) / phi_min`, taken over the grid, where
/// `phi_min, phi_max` bound the stability function of the generator.
/// `A` vanishes exactly when `Psi` is singular somewhere on the grid.
pub fn frame_bounds(
    psi: &LaurentMatrix,
    phi_min: f64,
    phi_max: f64,
    n_grid: usize,
) -> Result<(f64, f64)> {
    if !(phi_min > 0.0) || phi_max < phi_min {
        return Err(Error::InvalidParameter(format!(
            "stability bounds must satisfy 0 < phi_min <= phi_max, got {phi_min}, {phi_max}"
        )));
    }
    check_grid(n_grid, 1)?;
    let (mut lam_min, mut lam_max) = (f64::INFINITY, 0.0f64);
    for j in 0..n_grid {
        let m = psi.eval(j as f64 / n_grid as f64);
        // Singular values are better conditioned than eigenvalues of Psi* Psi.
        let sv = m.singular_values();
        let (lo, hi) = sv
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), v| (lo.min(*v), hi.max(*v)));
        lam_min = lam_min.min(lo * lo);
        lam_max = lam_max.max(hi * hi);
    }
    Ok((lam_min / phi_max, lam_max / phi_min))
}

/// Truncated Zak transform `sum_{|k| <= trunc_k} f(x - alpha k) e^{2 pi i alpha k y}`.
pub fn zak_transform(
    f: impl Fn(f64) -> f64,
    alpha: f64,
    x: f64,
    y: f64,
    trunc_k: usize,
) -> Complex64 {
    let k = trunc_k as i64;
    (-k..=k)
        .map(|k| {
            let kf = k as f64;
            Complex64::from_polar(f(x - alpha * kf), 2.0 * PI * alpha * kf * y)
        })
        .sum()
}

/// Factors of `Psi(x) = G(x) B(x) / rho`.
#[derive(Debug, Clone)]
pub struct ZakFactors {
    /// `G_{ij} = Z phi^{(d_i)}(t_i, (j - x) / rho)`, exact finite Zak sums.
    pub g: DMatrix<Complex64>,
    /// `B_{jq} = e^{2 pi i q (x - j) / rho}`.
    pub b: DMatrix<Complex64>,
}

/// Zak-transform factorization of the polyphase matrix at `x`.
pub fn zak_factors(gen: &Generator, scheme: &SamplingScheme, x: f64) -> Result<ZakFactors> {
    check_regularity(gen, scheme)?;
    let rho = scheme.rho();
    let rho_f = rho as f64;
    let g = DMatrix::from_fn(rho, rho, |i, j| {
        let (t, d) = (scheme.row_offset(i), scheme.row_derivative(i));
        let y = (j as f64 - x) / rho_f;
        let k_lo = (t - gen.mu()).floor() as i64;
        let k_hi = t.ceil() as i64;
        (k_lo..=k_hi)
            .map(|k| Complex64::from_polar(gen.eval(d, t - k as f64), 2.0 * PI * k as f64 * y))
            .sum()
    });
    let b = DMatrix::from_fn(rho, rho, |j, q| {
        Complex64::from_polar(1.0, 2.0 * PI * q as f64 * (x - j as f64) / rho_f)
    });
    Ok(ZakFactors { g, b })
}
