//! Inverse polyphase coefficients, compactly supported interpolating kernels
//! `Theta_{ni}` and the sampling series that uses them.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rustfft::FftPlanner;
use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::generators::Generator;
use crate::polyphase::{build_polyphase, LaurentMatrix, SamplingScheme, CIS_THRESHOLD};

/// Default number of sample points on the circle used by [`invert_polyphase`].
pub const DEFAULT_FFT_POINTS: usize = 64;
/// Inverse coefficients below this magnitude are set to zero.
pub const COEFFICIENT_FLOOR: f64 = 1e-10;
/// Largest tolerated entry outside the `{-1, 0}` band or in a structural zero row.
pub const STRUCTURE_TOLERANCE: f64 = 1e-9;

/// Fourier coefficients of `Psi(x)^{-1}`, computed by inverting `Psi` at
/// `n_fft` points of `[0, 1)` and applying a discrete Fourier transform.
///
/// Powers `k` are taken in `[-n_fft / 2, n_fft / 2)`. Entries below
/// [`COEFFICIENT_FLOOR`] are dropped, and so are coefficient matrices that
/// end up empty.
pub fn invert_polyphase(psi: &LaurentMatrix, n_fft: usize) -> Result<LaurentMatrix> {
    if n_fft < 4 {
        return Err(Error::InvalidParameter(format!(
            "inversion needs at least 4 sample points, got {n_fft}"
        )));
    }
    let dim = psi.dim();
    // series[a * dim + b][m] = (Psi(x_m)^{-1})_{ab}
    let mut series = vec![vec![Complex64::new(0.0, 0.0); n_fft]; dim * dim];
    for m in 0..n_fft {
        let x = m as f64 / n_fft as f64;
        let value = psi.eval(x);
        let det = value.determinant().norm();
        let inv = match value.try_inverse() {
            Some(inv) if det > CIS_THRESHOLD => inv,
            _ => return Err(Error::SingularPolyphase { x, det }),
        };
        for a in 0..dim {
            for b in 0..dim {
                series[a * dim + b][m] = inv[(a, b)];
            }
        }
    }
    let fft = FftPlanner::new().plan_fft_forward(n_fft);
    for s in series.iter_mut() {
        fft.process(s);
    }
    let scale = 1.0 / n_fft as f64;
    let mut out = LaurentMatrix::zeros(dim);
    for idx in 0..n_fft {
        let k = if idx < n_fft / 2 { idx as i64 } else { idx as i64 - n_fft as i64 };
        // Psi has real coefficients, so the inverse does too.
        let c = DMatrix::from_fn(dim, dim, |a, b| {
            let v = series[a * dim + b][idx].re * scale;
            if v.abs() < COEFFICIENT_FLOOR {
                0.0
            } else {
                v
            }
        });
        if c.iter().any(|v| *v != 0.0) {
            out.add_coeff(k, c)?;
        }
    }
    Ok(out)
}

/// `max_x max_{ab} |(Psi(x) Psi^{-1}(x) - I)_{ab}|` over `x = k / n_grid`.
pub fn inversion_residual(psi: &LaurentMatrix, inv: &LaurentMatrix, n_grid: usize) -> f64 {
    let id = DMatrix::<Complex64>::identity(psi.dim(), psi.dim());
    (0..n_grid)
        .map(|k| {
            let x = k as f64 / n_grid as f64;
            (psi.eval(x) * inv.eval(x) - &id)
                .iter()
                .fold(0.0f64, |m, v| m.max(v.norm()))
        })
        .fold(0.0, f64::max)
}

/// Common interface of the reconstruction kernels `Theta_{ni}` and the
/// shifted prediction kernels.
pub trait KernelFamily: Sync {
    fn scheme(&self) -> &SamplingScheme;

    /// Closed interval outside of which every kernel vanishes.
    fn support(&self) -> (f64, f64);

    /// Kernel value attached to derivative `i` at offset `n`. Indices are
    /// not checked.
    fn kernel_value(&self, n: usize, i: usize, t: f64) -> f64;

    /// Inclusive range of `l` whose term `Theta(u - rho l)` can be nonzero.
    fn window(&self, u: f64) -> (i64, i64);
}

/// Source of derivative samples `f^{(i)}(x_n + rho l)` (before any time scaling).
pub trait SampleSource {
    fn sample(&self, n: usize, i: usize, l: i64) -> Option<f64>;
}

impl<F: Fn(usize, usize, i64) -> Option<f64>> SampleSource for F {
    fn sample(&self, n: usize, i: usize, l: i64) -> Option<f64> {
        self(n, i, l)
    }
}

/// Explicit table of samples keyed by `(n, i, l)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SampleMap {
    values: HashMap<(usize, usize, i64), f64>,
}

impl SampleMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, n: usize, i: usize, l: i64, value: f64) {
        self.values.insert((n, i, l), value);
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Tabulates `f(i, t) = f^{(i)}(t)` at `t = (x_n + rho l) / w` for `l` in `ls`.
    pub fn tabulate(
        scheme: &SamplingScheme,
        w: f64,
        ls: std::ops::RangeInclusive<i64>,
        f: impl Fn(usize, f64) -> f64,
    ) -> Self {
        let mut out = Self::new();
        for l in ls {
            for n in 0..scheme.len() {
                let t = scheme.sample_point(n, l) / w;
                for i in 0..scheme.r() {
                    out.insert(n, i, l, f(i, t));
                }
            }
        }
        out
    }
}

impl SampleSource for SampleMap {
    fn sample(&self, n: usize, i: usize, l: i64) -> Option<f64> {
        self.values.get(&(n, i, l)).copied()
    }
}

/// Value of a sampling series together with bookkeeping on the samples it read.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesTrace {
    pub value: f64,
    /// Number of `(n, i, l)` samples read.
    pub samples_used: usize,
    /// Largest sample time `(x_n + rho l) / w` read, `-inf` if none.
    pub latest_sample_time: f64,
    /// Number of shift indices `l` in the window.
    pub window_len: usize,
}

/// `sum_l sum_n sum_i w^{-i} f^{(i)}((x_n + rho l) / w) K_{ni}(w t - rho l)`
/// over the window of the kernel family.
///
/// `samples` is indexed by `(n, i, l)` and must hold the unscaled derivative
/// values; a missing sample inside the window is an error.
pub fn sampling_series<K: KernelFamily + ?Sized>(
    family: &K,
    samples: &(impl SampleSource + ?Sized),
    w: f64,
    t: f64,
) -> Result<SeriesTrace> {
    let scheme = family.scheme();
    let rho = scheme.rho() as f64;
    let u = w * t;
    let (lo, hi) = family.window(u);
    let mut trace = SeriesTrace {
        value: 0.0,
        samples_used: 0,
        latest_sample_time: f64::NEG_INFINITY,
        window_len: (hi - lo + 1).max(0) as usize,
    };
    for l in lo..=hi {
        let arg = u - rho * l as f64;
        for n in 0..scheme.len() {
            let mut scale = 1.0;
            for i in 0..scheme.r() {
                let v = samples
                    .sample(n, i, l)
                    .ok_or(Error::MissingSample { n, i, l })?;
                trace.value += scale * v * family.kernel_value(n, i, arg);
                trace.samples_used += 1;
                scale /= w;
            }
            trace.latest_sample_time = trace.latest_sample_time.max(scheme.sample_point(n, l) / w);
        }
    }
    Ok(trace)
}

/// One term `coeff * phi(t + shift)` of a kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelTerm {
    pub shift: i64,
    pub coeff: f64,
}

/// Interpolating kernels
/// `Theta_{ni}(t) = sum_{q <= s} A_{q, nr+i} phi(t - q) + sum_{q > s} B_{q, nr+i} phi(t + rho - q)`
/// where `Psi^{-1}(x) = A + B z^{-1}`. Supported on `[-rho + s + 1, mu + s]`.
#[derive(Debug, Clone)]
pub struct KernelSet {
    gen: Generator,
    scheme: SamplingScheme,
    cell: usize,
    a: DMatrix<f64>,
    b: DMatrix<f64>,
}

impl KernelSet {
    /// Full pipeline: polyphase matrix, numeric inversion, kernel synthesis.
    pub fn construct(gen: &Generator, scheme: &SamplingScheme) -> Result<Self> {
        let psi = build_polyphase(gen, scheme)?;
        let inv = invert_polyphase(&psi, DEFAULT_FFT_POINTS)?;
        Self::build(gen, scheme, &inv)
    }

    /// Kernels from the coefficients of an inverse polyphase matrix whose
    /// support must lie in `{-1, 0}`.
    pub fn build(gen: &Generator, scheme: &SamplingScheme, inv: &LaurentMatrix) -> Result<Self> {
        for (k, c) in inv.iter() {
            let norm = c.amax();
            if k != 0 && k != -1 && norm > STRUCTURE_TOLERANCE {
                return Err(Error::CoefficientSupport { index: k, norm });
            }
        }
        Self::from_parts(gen.clone(), scheme.clone(), inv.coeff_or_zero(0), inv.coeff_or_zero(-1))
    }

    /// Kernels from stored `A` and `B`, checking the zero-row structure.
    pub fn from_parts(
        gen: Generator,
        scheme: SamplingScheme,
        a: DMatrix<f64>,
        b: DMatrix<f64>,
    ) -> Result<Self> {
        let cell = scheme.cell().ok_or_else(|| {
            Error::InvalidScheme("compact kernels need offsets in a common cell [s, s + 1)".into())
        })?;
        if (scheme.rho() as f64) < gen.mu() {
            return Err(Error::InvalidScheme(format!(
                "compact kernels need rho = {} >= mu = {}",
                scheme.rho(),
                gen.mu()
            )));
        }
        if scheme.r() - 1 > gen.regularity() {
            return Err(Error::DerivativeOrder {
                requested: scheme.r() - 1,
                available: gen.regularity(),
            });
        }
        let rho = scheme.rho();
        for (name, m) in [("A", &a), ("B", &b)] {
            if m.nrows() != rho || m.ncols() != rho {
                return Err(Error::KernelStructure(format!(
                    "{name} is {}x{}, expected {rho}x{rho}",
                    m.nrows(),
                    m.ncols()
                )));
            }
        }
        let offending = |m: &DMatrix<f64>, rows: std::ops::Range<usize>| {
            rows.flat_map(|q| m.row(q).iter().copied().collect::<Vec<_>>())
                .fold(0.0f64, |acc, v| acc.max(v.abs()))
        };
        let a_tail = offending(&a, cell + 1..rho);
        let b_head = offending(&b, 0..cell + 1);
        if a_tail > STRUCTURE_TOLERANCE || b_head > STRUCTURE_TOLERANCE {
            return Err(Error::KernelStructure(format!(
                "rows {}..{rho} of A reach {a_tail:e}, rows 0..={cell} of B reach {b_head:e}",
                cell + 1
            )));
        }
        Ok(Self {
            gen,
            scheme,
            cell,
            a,
            b,
        })
    }

    pub fn generator(&self) -> &Generator {
        &self.gen
    }

    /// Cell index `s` of the offsets.
    pub fn cell(&self) -> usize {
        self.cell
    }

    /// Zeroth Fourier coefficient of `Psi^{-1}`.
    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    /// Coefficient of `z^{-1}` in `Psi^{-1}`.
    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    /// `Psi^{-1}(x) = A + B z^{-1}`.
    pub fn inverse(&self) -> LaurentMatrix {
        let mut out = LaurentMatrix::zeros(self.scheme.rho());
        // Shapes were validated at construction.
        out.add_coeff(0, self.a.clone()).expect("square A");
        out.add_coeff(-1, self.b.clone()).expect("square B");
        out
    }

    fn check_index(&self, n: usize, i: usize) -> Result<()> {
        if n >= self.scheme.len() || i >= self.scheme.r() {
            return Err(Error::KernelIndex {
                n,
                i,
                len: self.scheme.len(),
                r: self.scheme.r(),
            });
        }
        Ok(())
    }

    /// `Theta_{ni}` as a combination `sum coeff * phi(t + shift)`.
    pub fn terms(&self, n: usize, i: usize) -> Result<Vec<KernelTerm>> {
        self.check_index(n, i)?;
        let col = n * self.scheme.r() + i;
        let rho = self.scheme.rho();
        Ok((0..rho)
            .map(|q| {
                if q <= self.cell {
                    KernelTerm {
                        shift: -(q as i64),
                        coeff: self.a[(q, col)],
                    }
                } else {
                    KernelTerm {
                        shift: (rho - q) as i64,
                        coeff: self.b[(q, col)],
                    }
                }
            })
            .collect())
    }

    /// `Theta_{ni}(t)`, zero outside the support.
    pub fn evaluate(&self, n: usize, i: usize, t: f64) -> Result<f64> {
        self.check_index(n, i)?;
        Ok(self.eval_derivative(n, i, 0, t))
    }

    /// `Theta_{ni}^{(j)}(t)` for `j` up to the generator regularity.
    pub fn derivative(&self, n: usize, i: usize, j: usize, t: f64) -> Result<f64> {
        self.check_index(n, i)?;
        if j > self.gen.regularity() {
            return Err(Error::DerivativeOrder {
                requested: j,
                available: self.gen.regularity(),
            });
        }
        Ok(self.eval_derivative(n, i, j, t))
    }

    fn eval_derivative(&self, n: usize, i: usize, j: usize, t: f64) -> f64 {
        let (lo, hi) = self.support();
        if t <= lo || t >= hi {
            return 0.0;
        }
        let col = n * self.scheme.r() + i;
        let rho = self.scheme.rho();
        let mut acc = 0.0;
        for q in 0..rho {
            let (coeff, arg) = if q <= self.cell {
                (self.a[(q, col)], t - q as f64)
            } else {
                (self.b[(q, col)], t + (rho - q) as f64)
            };
            if coeff != 0.0 {
                acc += coeff * self.gen.eval(j, arg);
            }
        }
        acc
    }
}

impl KernelFamily for KernelSet {
    fn scheme(&self) -> &SamplingScheme {
        &self.scheme
    }

    fn support(&self) -> (f64, f64) {
        let s = self.cell as f64;
        (-(self.scheme.rho() as f64) + s + 1.0, self.gen.mu() + s)
    }

    fn kernel_value(&self, n: usize, i: usize, t: f64) -> f64 {
        self.eval_derivative(n, i, 0, t)
    }

    /// Indices with `u - rho l` strictly inside the support.
    fn window(&self, u: f64) -> (i64, i64) {
        let (a, b) = self.support();
        let rho = self.scheme.rho() as f64;
        (((u - b) / rho).floor() as i64 + 1, ((u - a) / rho).ceil() as i64 - 1)
    }
}

/// Perfect-reconstruction formula `f(t) = sum f^{(i)}(x_n + rho l) Theta_{ni}(t - rho l)`.
pub fn reconstruct(ks: &KernelSet, samples: &(impl SampleSource + ?Sized), t: f64) -> Result<f64> {
    Ok(sampling_series(ks, samples, 1.0, t)?.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn example_one() -> KernelSet {
        let gen = Generator::bspline(4).unwrap();
        KernelSet::construct(&gen, &SamplingScheme::equispaced(4, 1, 0).unwrap()).unwrap()
    }

    fn example_two() -> KernelSet {
        let gen = Generator::bspline(4).unwrap();
        let scheme = SamplingScheme::in_cell(4, 2, 0, vec![0.5, 0.75]).unwrap();
        KernelSet::construct(&gen, &scheme).unwrap()
    }

    fn assert_row(m: &DMatrix<f64>, row: usize, expected: &[f64]) {
        for (q, e) in expected.iter().enumerate() {
            assert_abs_diff_eq!(m[(row, q)], *e, epsilon = 1e-9);
        }
    }

    #[test]
    fn first_example_inverse() {
        let ks = example_one();
        assert_row(ks.a(), 0, &[-19.0, 208.0 / 3.0, -260.0 / 3.0, 112.0 / 3.0]);
        assert_row(ks.b(), 1, &[19.0, -116.0 / 3.0, 82.0 / 3.0, -20.0 / 3.0]);
        assert_row(ks.b(), 3, &[13.0 / 3.0, -44.0 / 3.0, 46.0 / 3.0, -4.0]);
        for row in 1..4 {
            assert_row(ks.a(), row, &[0.0; 4]);
        }
        assert_row(ks.b(), 0, &[0.0; 4]);
    }

    #[test]
    fn second_example_inverse() {
        let ks = example_two();
        assert_row(ks.a(), 0, &[149.0, 97.0 / 6.0, -148.0, 67.0 / 3.0]);
        assert_row(ks.b(), 3, &[-43.0, -29.0 / 6.0, 44.0, -17.0 / 3.0]);
    }

    #[test]
    fn identity_inverse_is_identity() {
        let inv = invert_polyphase(&LaurentMatrix::identity(3), 64).unwrap();
        assert_eq!(inv.support(), vec![0]);
        assert_eq!(inv.coeff(0).unwrap(), &DMatrix::identity(3, 3));
    }

    #[test]
    fn singular_matrix_is_reported() {
        let scheme = SamplingScheme::new(4, 2, vec![0.5, 2.5]).unwrap();
        let psi = build_polyphase(&Generator::bspline(3).unwrap(), &scheme).unwrap();
        assert!(matches!(
            invert_polyphase(&psi, 64),
            Err(Error::SingularPolyphase { x, .. }) if x == 0.0
        ));
    }

    #[test]
    fn non_compact_inverse_is_rejected() {
        // The cubic spline on the split-cell scheme has a non-monomial determinant.
        let gen = Generator::bspline(4).unwrap();
        let scheme = SamplingScheme::new(4, 2, vec![0.5, 2.5]).unwrap();
        let inv = invert_polyphase(&build_polyphase(&gen, &scheme).unwrap(), 64).unwrap();
        let cell_scheme = SamplingScheme::equispaced(4, 2, 0).unwrap();
        assert!(matches!(
            KernelSet::build(&gen, &cell_scheme, &inv),
            Err(Error::CoefficientSupport { .. })
        ));
    }

    #[test]
    fn kernel_terms_of_first_example() {
        let ks = example_one();
        let terms = ks.terms(0, 0).unwrap();
        let expected = [(0, -19.0), (3, 19.0), (2, -13.0 / 3.0), (1, 13.0 / 3.0)];
        for (term, (shift, coeff)) in terms.iter().zip(expected) {
            assert_eq!(term.shift, shift);
            assert_abs_diff_eq!(term.coeff, coeff, epsilon = 1e-9);
        }
        assert!(ks.terms(4, 0).is_err());
        assert!(ks.evaluate(0, 1, 0.0).is_err());
    }

    #[test]
    fn interpolation_conditions() {
        let ks = example_one();
        assert_eq!(ks.support(), (-3.0, 4.0));
        assert_eq!(ks.evaluate(0, 0, -3.0).unwrap(), 0.0);
        assert_eq!(ks.evaluate(0, 0, 4.0).unwrap(), 0.0);
        for n in 0..4 {
            for m in 0..4 {
                for l in -2i64..=2 {
                    let t = ks.scheme().sample_point(m, l);
                    let expected = if n == m && l == 0 { 1.0 } else { 0.0 };
                    assert_abs_diff_eq!(ks.evaluate(n, 0, t).unwrap(), expected, epsilon = 1e-10);
                }
            }
        }
    }

    #[test]
    fn hermite_conditions_by_finite_differences() {
        let ks = example_two();
        let h = 1e-5;
        let fd = |n, i, t: f64| (ks.evaluate(n, i, t + h).unwrap() - ks.evaluate(n, i, t - h).unwrap()) / (2.0 * h);
        assert_abs_diff_eq!(ks.evaluate(0, 1, 0.75).unwrap(), 0.0, epsilon = 1e-10);
        assert_abs_diff_eq!(fd(0, 1, 0.5), 1.0, epsilon = 1e-6);
        assert_abs_diff_eq!(fd(0, 0, 0.5), 0.0, epsilon = 1e-6);
        assert_abs_diff_eq!(ks.derivative(0, 1, 1, 0.5).unwrap(), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn reconstruction_of_a_shifted_spline() {
        let ks = example_one();
        let gen = Generator::bspline(4).unwrap();
        let samples = SampleMap::tabulate(ks.scheme(), 1.0, -4..=4, |_, t| gen.value(t - 2.0));
        for k in 0..=200 {
            let t = -2.0 + k as f64 * 0.05;
            let v = reconstruct(&ks, &samples, t).unwrap();
            assert_abs_diff_eq!(v, gen.value(t - 2.0), epsilon = 1e-10);
        }
    }

    #[test]
    fn missing_samples_are_errors() {
        let ks = example_one();
        let samples = SampleMap::tabulate(ks.scheme(), 1.0, 0..=0, |_, _| 1.0);
        assert!(matches!(
            reconstruct(&ks, &samples, 3.5),
            Err(Error::MissingSample { .. })
        ));
        let zero = |_: usize, _: usize, _: i64| Some(0.0);
        assert_eq!(reconstruct(&ks, &zero, 3.3).unwrap(), 0.0);
    }

    #[test]
    fn structure_violations_are_rejected() {
        let ks = example_one();
        let mut a = ks.a().clone();
        a[(2, 1)] = 1e-6;
        assert!(matches!(
            KernelSet::from_parts(ks.generator().clone(), ks.scheme().clone(), a, ks.b().clone()),
            Err(Error::KernelStructure(_))
        ));
    }
}
