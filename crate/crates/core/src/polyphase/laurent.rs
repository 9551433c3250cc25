use nalgebra::DMatrix;
use num_complex::Complex64;
use std::collections::BTreeMap;
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Square matrix-valued trigonometric polynomial `sum_k C_k z^k`, `z = e^{2 pi i x}`.
#[derive(Debug, Clone, PartialEq)]
pub struct LaurentMatrix {
    dim: usize,
    coeffs: BTreeMap<i64, DMatrix<f64>>,
}

impl LaurentMatrix {
    /// The zero matrix polynomial of size `dim`.
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            coeffs: BTreeMap::new(),
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut out = Self::zeros(dim);
        out.coeffs.insert(0, DMatrix::identity(dim, dim));
        out
    }

    /// Builds from `(power, coefficient)` pairs; repeated powers are summed.
    pub fn from_coeffs(dim: usize, coeffs: impl IntoIterator<Item = (i64, DMatrix<f64>)>) -> Result<Self> {
        let mut out = Self::zeros(dim);
        for (k, c) in coeffs {
            out.add_coeff(k, c)?;
        }
        Ok(out)
    }

    /// Adds `c` to the coefficient of `z^k`.
    pub fn add_coeff(&mut self, k: i64, c: DMatrix<f64>) -> Result<()> {
        if c.nrows() != self.dim || c.ncols() != self.dim {
            return Err(Error::InvalidParameter(format!(
                "coefficient is {}x{}, expected {}x{}",
                c.nrows(),
                c.ncols(),
                self.dim,
                self.dim
            )));
        }
        match self.coeffs.get_mut(&k) {
            Some(existing) => *existing += c,
            None => {
                self.coeffs.insert(k, c);
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Coefficient of `z^k`, `None` when it is absent (zero).
    pub fn coeff(&self, k: i64) -> Option<&DMatrix<f64>> {
        self.coeffs.get(&k)
    }

    /// Coefficient of `z^k`, materializing zeros for absent powers.
    pub fn coeff_or_zero(&self, k: i64) -> DMatrix<f64> {
        self.coeffs
            .get(&k)
            .cloned()
            .unwrap_or_else(|| DMatrix::zeros(self.dim, self.dim))
    }

    /// Powers with a stored coefficient, ascending.
    pub fn support(&self) -> Vec<i64> {
        self.coeffs.keys().copied().collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, &DMatrix<f64>)> {
        self.coeffs.iter().map(|(k, c)| (*k, c))
    }

    /// Value at `x`, i.e. with `z = e^{2 pi i x}`.
    pub fn eval(&self, x: f64) -> DMatrix<Complex64> {
        let mut out = DMatrix::from_element(self.dim, self.dim, Complex64::new(0.0, 0.0));
        for (k, c) in &self.coeffs {
            let z = Complex64::from_polar(1.0, 2.0 * PI * *k as f64 * x);
            out.zip_apply(c, |acc, v| *acc += z * v);
        }
        out
    }

    pub fn det(&self, x: f64) -> Complex64 {
        self.eval(x).determinant()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn eval_at_zero_sums_coefficients() {
        let c0 = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let c1 = DMatrix::from_row_slice(2, 2, &[0.5, 0.0, -1.0, 2.0]);
        let m = LaurentMatrix::from_coeffs(2, [(0, c0.clone()), (1, c1.clone())]).unwrap();
        let v = m.eval(0.0);
        for (a, b) in v.iter().zip((c0 + c1).iter()) {
            assert_abs_diff_eq!(a.re, *b, epsilon = 1e-15);
            assert_abs_diff_eq!(a.im, 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn eval_uses_unit_circle() {
        let m = LaurentMatrix::from_coeffs(1, [(-1, DMatrix::from_element(1, 1, 2.0))]).unwrap();
        let v = m.eval(0.25)[(0, 0)];
        assert_abs_diff_eq!(v.re, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(v.im, -2.0, epsilon = 1e-15);
    }

    #[test]
    fn repeated_powers_accumulate_and_shapes_are_checked() {
        let one = DMatrix::from_element(1, 1, 1.0);
        let m = LaurentMatrix::from_coeffs(1, [(2, one.clone()), (2, one.clone())]).unwrap();
        assert_eq!(m.coeff(2).unwrap()[(0, 0)], 2.0);
        assert_eq!(m.support(), vec![2]);
        assert!(m.coeff(0).is_none());
        assert!(LaurentMatrix::zeros(2).add_coeff(0, one).is_err());
    }
}
