//! Generalized vanishing moments and the polynomial reproduction order `kappa`.

use rayon::prelude::*;
use std::fmt;

use crate::kernels::{sampling_series, KernelFamily};

/// Default tolerance for kernels built on closed-form generators.
pub const DEFAULT_TOLERANCE: f64 = 1e-8;
/// Default tolerance for generators tabulated by the cascade algorithm.
pub const CASCADE_TOLERANCE: f64 = 1e-6;
/// Number of points in [`default_grid`].
pub const GRID_POINTS: usize = 257;

/// 257 uniform points over one period `[0, rho]` widened by the support
/// width on both sides.
pub fn default_grid<K: KernelFamily + ?Sized>(family: &K) -> Vec<f64> {
    let (a, b) = family.support();
    let margin = b - a;
    let (lo, hi) = (-margin, family.scheme().rho() as f64 + margin);
    (0..GRID_POINTS)
        .map(|k| lo + (hi - lo) * k as f64 / (GRID_POINTS - 1) as f64)
        .collect()
}

fn falling_factorial(n: usize, k: usize) -> f64 {
    (0..k).map(|m| (n - m) as f64).product()
}

/// Left side of the moment condition of degree `j` at `t`:
/// `sum_i C(j, i) i! sum_l sum_n (x_n + rho l - t)^{j - i} K_{ni}(t - rho l)`.
pub fn moment_sum<K: KernelFamily + ?Sized>(family: &K, j: usize, t: f64) -> f64 {
    let scheme = family.scheme();
    let rho = scheme.rho() as f64;
    let (lo, hi) = family.window(t);
    let top = j.min(scheme.r() - 1);
    let mut acc = 0.0;
    for l in lo..=hi {
        let arg = t - rho * l as f64;
        for n in 0..scheme.len() {
            let gap = scheme.sample_point(n, l) - t;
            for i in 0..=top {
                // C(j, i) i! = j! / (j - i)!
                acc += falling_factorial(j, i)
                    * gap.powi((j - i) as i32)
                    * family.kernel_value(n, i, arg);
            }
        }
    }
    acc
}

/// `max_t |moment_sum(j, t) - delta_{j0}|` over `t_grid`.
pub fn moment_defect<K: KernelFamily + ?Sized>(family: &K, j: usize, t_grid: &[f64]) -> f64 {
    let target = if j == 0 { 1.0 } else { 0.0 };
    t_grid
        .par_iter()
        .map(|&t| (moment_sum(family, j, t) - target).abs())
        .reduce(|| 0.0, f64::max)
}

/// `max_t |S_1 t^j - t^j| / max(1, |t|^j)`: the sampling operator at unit
/// rate applied to the monomial, with derivative samples `j!/(j-i)! t^{j-i}`.
pub fn monomial_error<K: KernelFamily + ?Sized>(family: &K, j: usize, t_grid: &[f64]) -> f64 {
    let scheme = family.scheme();
    let samples = |n: usize, i: usize, l: i64| {
        let x = scheme.sample_point(n, l);
        Some(if i > j {
            0.0
        } else {
            falling_factorial(j, i) * x.powi((j - i) as i32)
        })
    };
    t_grid
        .par_iter()
        .map(|&t| {
            let value = sampling_series(family, &samples, 1.0, t)
                .map(|tr| tr.value)
                .unwrap_or(f64::NAN);
            let exact = t.powi(j as i32);
            (value - exact).abs() / exact.abs().max(1.0)
        })
        .reduce(|| 0.0, |a, b| if a.is_nan() || b.is_nan() { f64::NAN } else { a.max(b) })
}

/// Result of probing moment conditions of degree `0..probe_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentReport {
    /// Polynomials of degree `< kappa` are reproduced.
    pub kappa: usize,
    pub tolerance: f64,
    /// `defects[j]` from [`moment_defect`].
    pub defects: Vec<f64>,
    /// `monomial_errors[j]` from [`monomial_error`].
    pub monomial_errors: Vec<f64>,
}

impl MomentReport {
    /// Whether the monomial test agrees with the moment test below `kappa`.
    pub fn cross_validated(&self) -> bool {
        self.monomial_errors[..self.kappa]
            .iter()
            .all(|e| *e <= self.tolerance)
    }
}

impl fmt::Display for MomentReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "degree  moment_defect  monomial_error")?;
        for (j, (d, m)) in self.defects.iter().zip(&self.monomial_errors).enumerate() {
            writeln!(f, "{j:>6}  {d:>13.3e}  {m:>14.3e}")?;
        }
        write!(f, "kappa = {} (tolerance {:e})", self.kappa, self.tolerance)
    }
}

/// Largest `kappa <= probe_max` with `moment_defect(j) <= tol` for all `j < kappa`,
/// probed on [`default_grid`].
pub fn reproduction_order<K: KernelFamily + ?Sized>(
    family: &K,
    tol: f64,
    probe_max: usize,
) -> MomentReport {
    let grid = default_grid(family);
    let defects: Vec<f64> = (0..probe_max.max(1))
        .map(|j| moment_defect(family, j, &grid))
        .collect();
    let monomial_errors = (0..defects.len())
        .map(|j| monomial_error(family, j, &grid))
        .collect();
    let kappa = defects.iter().take_while(|d| **d <= tol).count();
    MomentReport {
        kappa,
        tolerance: tol,
        defects,
        monomial_errors,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::Generator;
    use crate::kernels::KernelSet;
    use crate::polyphase::SamplingScheme;

    fn example_one() -> KernelSet {
        let gen = Generator::bspline(4).unwrap();
        KernelSet::construct(&gen, &SamplingScheme::equispaced(4, 1, 0).unwrap()).unwrap()
    }

    #[test]
    fn falling_factorial_values() {
        assert_eq!(falling_factorial(5, 2), 20.0);
        assert_eq!(falling_factorial(3, 0), 1.0);
    }

    #[test]
    fn partition_of_unity_is_the_zeroth_moment() {
        let ks = example_one();
        let grid = default_grid(&ks);
        assert_eq!(grid.len(), GRID_POINTS);
        for &t in &grid {
            let (lo, hi) = ks.window(t);
            let direct: f64 = (lo..=hi)
                .flat_map(|l| (0..4).map(move |n| (n, l)))
                .map(|(n, l)| ks.kernel_value(n, 0, t - 4.0 * l as f64))
                .sum();
            assert!((moment_sum(&ks, 0, t) - direct).abs() < 1e-15);
        }
        assert!(moment_defect(&ks, 0, &grid) <= 1e-9);
    }

    #[test]
    fn cubic_order_of_first_example() {
        let ks = example_one();
        let report = reproduction_order(&ks, DEFAULT_TOLERANCE, 8);
        assert_eq!(report.kappa, 4, "{report}");
        assert!(report.defects[3] <= 1e-8);
        assert!(report.defects[4] > 1e-4);
        assert!(report.cross_validated(), "{report}");
    }

    #[test]
    fn db3_reproduces_quadratics_only() {
        let gen = Generator::daubechies(3).unwrap();
        let ks = KernelSet::construct(&gen, &SamplingScheme::chebyshev(5, 1, 0).unwrap()).unwrap();
        let report = reproduction_order(&ks, CASCADE_TOLERANCE, 8);
        // three vanishing wavelet moments: degree 3 is not reproduced at any resolution
        assert_eq!(report.kappa, 3, "{report}");
        assert!(report.defects[3] > 1.0);
    }
}
