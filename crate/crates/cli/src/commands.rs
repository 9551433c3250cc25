//! The subcommands. Each writes its files into the output directory and
//! appends a human-readable summary to the report.

use std::fs;
use std::path::{Path, PathBuf};

use pns_core::approximation::{self, lp_error_auto, TestSignal};
use pns_core::generators::{stability_bounds, Generator};
use pns_core::kernels::{inversion_residual, KernelFamily, KernelSet};
use pns_core::moments::{self, reproduction_order, MomentReport};
use pns_core::polyphase::{
    build_polyphase, cis_determinant, det_on_circle, frame_bounds, CisVerdict, SamplingScheme,
    DEFAULT_CIRCLE_GRID,
};
use pns_core::prediction::PredictionScheme;
use pns_core::serialization::KernelDocument;
use rayon::prelude::*;

use crate::config::{GeneratorKind, OffsetMode, RunConfig};
use crate::error::{CliError, Result};

/// Largest `|Psi Psi^{-1} - I|` accepted for a kernel set.
pub const RESIDUAL_TOLERANCE: f64 = 1e-10;
/// Highest moment degree probed.
pub const PROBE_DEGREES: usize = 8;
const DEFAULT_CURVE_POINTS: usize = 1001;
const DEFAULT_TRACE_POINTS: usize = 2001;

#[derive(Debug, Clone)]
pub struct Options {
    pub out: PathBuf,
    /// Circle grid for `check-cis`, abscissa count for curves and traces.
    pub grid: Option<usize>,
}

/// Human-readable summary collected while a command runs.
#[derive(Debug, Default)]
pub struct Report(String);

impl Report {
    pub fn line(&mut self, text: impl AsRef<str>) {
        self.0.push_str(text.as_ref());
        self.0.push('\n');
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

fn prepare(config: &RunConfig, opts: &Options) -> Result<()> {
    fs::create_dir_all(&opts.out).map_err(|e| CliError::io(&opts.out, e))?;
    write_file(&opts.out.join("config.resolved"), &config.to_text())
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn finish(report: &Report, opts: &Options, name: &str) -> Result<()> {
    write_file(&opts.out.join(format!("{name}.txt")), report.as_str())
}

/// Comma-separated, LF-terminated, header first, shortest round-trip decimals.
fn write_csv(path: &Path, header: &[String], rows: impl IntoIterator<Item = Vec<f64>>) -> Result<()> {
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)?;
    writer.write_record(header)?;
    for row in rows {
        writer.write_record(row.iter().map(|v| v.to_string()))?;
    }
    writer.flush().map_err(|e| CliError::io(path, e))
}

fn header(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

fn grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    let points = points.max(2);
    (0..points)
        .map(|k| lo + (hi - lo) * k as f64 / (points - 1) as f64)
        .collect()
}

fn interval(lo: f64, hi: f64) -> String {
    format!("[{lo}, {hi}]")
}

fn kernel_names(scheme: &SamplingScheme, prefix: &str) -> Vec<String> {
    (0..scheme.len())
        .flat_map(|n| (0..scheme.r()).map(move |i| format!("{prefix}_{n}_{i}")))
        .collect()
}

fn moment_tolerance(config: &RunConfig) -> f64 {
    match config.generator_kind {
        GeneratorKind::BSpline => moments::DEFAULT_TOLERANCE,
        GeneratorKind::Daubechies => moments::CASCADE_TOLERANCE,
    }
}

/// Kernel set and, when shifts are known, the prediction scheme; loaded from
/// `kernels.file` when set, otherwise constructed and residual-checked.
fn load_kernels(config: &RunConfig) -> Result<(KernelSet, Option<PredictionScheme>)> {
    if let Some(path) = &config.kernels_file {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let doc = KernelDocument::from_json(&text)?;
        let ks = doc.kernels()?;
        check_residual(&ks)?;
        let ps = match doc.prediction()? {
            Some(ps) => Some(ps),
            None => config
                .epsilons()?
                .map(|eps| PredictionScheme::new(ks.clone(), eps))
                .transpose()?,
        };
        return Ok((ks, ps));
    }
    build_kernels(config, &config.generator()?, &config.scheme()?)
}

fn build_kernels(
    config: &RunConfig,
    gen: &Generator,
    scheme: &SamplingScheme,
) -> Result<(KernelSet, Option<PredictionScheme>)> {
    let ks = KernelSet::construct(gen, scheme)?;
    check_residual(&ks)?;
    let ps = config
        .epsilons()?
        .map(|eps| PredictionScheme::new(ks.clone(), eps))
        .transpose()?;
    Ok((ks, ps))
}

fn check_residual(ks: &KernelSet) -> Result<()> {
    let psi = build_polyphase(ks.generator(), ks.scheme())?;
    let residual = inversion_residual(&psi, &ks.inverse(), 64);
    if !(residual <= RESIDUAL_TOLERANCE) {
        return Err(CliError::Residual(format!(
            "|Psi Psi^-1 - I| = {residual:e} exceeds {RESIDUAL_TOLERANCE:e}"
        )));
    }
    Ok(())
}

fn require_prediction(ps: Option<PredictionScheme>) -> Result<PredictionScheme> {
    ps.ok_or_else(|| {
        CliError::config(None, "this command needs shifts: set epsilon.values or epsilon.eps0 and epsilon.d")
    })
}

/// Determinant checks, frame bounds and the CIS verdict; `NotCis` when the
/// set fails.
pub fn check_cis(config: &RunConfig, opts: &Options, report: &mut Report) -> Result<()> {
    prepare(config, opts)?;
    let gen = config.generator()?;
    let scheme = config.scheme()?;
    let n_grid = opts.grid.unwrap_or(DEFAULT_CIRCLE_GRID);
    let psi = build_polyphase(&gen, &scheme)?;
    report.line(format!("generator       {gen}"));
    report.line(format!(
        "scheme          rho = {}, L = {}, r = {}, offsets = {:?}",
        scheme.rho(),
        scheme.len(),
        scheme.r(),
        scheme.offsets()
    ));
    let det_c = match scheme.cell() {
        Some(_) if scheme.rho() as f64 >= gen.mu() => Some(cis_determinant(&gen, &scheme)?),
        _ => None,
    };
    match det_c {
        Some(det) => report.line(format!("det C           {det:e}")),
        None => report.line("det C           n/a (offsets not in one cell or rho < mu)"),
    }
    let circle = det_on_circle(&psi, n_grid)?;
    report.line(format!(
        "min |det Psi|   {:e} at x = {} ({n_grid}-point grid)",
        circle.min_abs, circle.argmin
    ));
    let stab = stability_bounds(&gen, 1024)?;
    let (a, b) = frame_bounds(&psi, stab.phi_min, stab.phi_max, n_grid)?;
    report.line(format!("frame bounds    A = {a:e}, B = {b:e}"));
    let verdict = CisVerdict::from_determinant(det_c.unwrap_or(circle.min_abs));
    report.line(format!("verdict         {verdict}"));
    finish(report, opts, "check-cis")?;
    if verdict.is_cis() {
        Ok(())
    } else {
        Err(CliError::NotCis(format!(
            "min |det Psi| = {:e} at x = {}",
            circle.min_abs, circle.argmin
        )))
    }
}

/// Kernel document, coefficient table and sampled kernel curves.
pub fn kernels(config: &RunConfig, opts: &Options, report: &mut Report) -> Result<()> {
    prepare(config, opts)?;
    let (ks, ps) = load_kernels(config)?;
    let scheme = ks.scheme().clone();
    let doc = match &ps {
        Some(ps) => KernelDocument::from_prediction(ps),
        None => KernelDocument::from_kernels(&ks),
    };
    write_file(&opts.out.join("kernels.json"), &doc.to_json())?;

    let mut rows = Vec::new();
    for n in 0..scheme.len() {
        for i in 0..scheme.r() {
            let terms = ks.terms(n, i)?;
            let text: Vec<String> = terms
                .iter()
                .map(|t| format!("{:+} phi(t{:+})", t.coeff, t.shift))
                .collect();
            report.line(format!("Theta_{n}{i}(t) = {}", text.join(" ")));
            rows.extend(terms.iter().map(|t| vec![n as f64, i as f64, t.shift as f64, t.coeff]));
        }
    }
    write_csv(&opts.out.join("kernel_terms.csv"), &header(&["n", "i", "shift", "coeff"]), rows)?;

    let points = opts.grid.unwrap_or(DEFAULT_CURVE_POINTS);
    let (lo, hi) = ks.support();
    report.line(format!("kernel support  {}", interval(lo, hi)));
    write_curves(&opts.out.join("kernel_curves.csv"), &ks, "theta", lo, hi, points)?;
    if let Some(ps) = &ps {
        let (lo, hi) = ps.support();
        report.line(format!("prediction kernel support  {}", interval(lo, hi)));
        write_curves(&opts.out.join("prediction_curves.csv"), ps, "theta_tilde", lo, hi, points)?;
    }
    finish(report, opts, "kernels")
}

fn write_curves<K: KernelFamily>(path: &Path, family: &K, prefix: &str, lo: f64, hi: f64, points: usize) -> Result<()> {
    let scheme = family.scheme();
    let mut names = vec!["t".to_string()];
    names.extend(kernel_names(scheme, prefix));
    let rows: Vec<Vec<f64>> = grid(lo, hi, points)
        .into_par_iter()
        .map(|t| {
            let mut row = vec![t];
            for n in 0..scheme.len() {
                for i in 0..scheme.r() {
                    row.push(family.kernel_value(n, i, t));
                }
            }
            row
        })
        .collect();
    write_csv(path, &names, rows)
}

/// Reproduction order of the kernels and, when shifts are set, of the prediction kernels.
pub fn moments(config: &RunConfig, opts: &Options, report: &mut Report) -> Result<()> {
    prepare(config, opts)?;
    let (ks, ps) = load_kernels(config)?;
    let tol = moment_tolerance(config);
    let mut sets: Vec<(&str, MomentReport)> = vec![("theta", reproduction_order(&ks, tol, PROBE_DEGREES))];
    if let Some(ps) = &ps {
        sets.push(("theta_tilde", reproduction_order(ps, tol, PROBE_DEGREES)));
    }
    let mut rows = Vec::new();
    for (k, (name, m)) in sets.iter().enumerate() {
        report.line(format!("{name}:"));
        report.line(m.to_string());
        if !m.cross_validated() {
            report.line("warning: monomial reproduction disagrees with the moment test");
        }
        for (j, (d, e)) in m.defects.iter().zip(&m.monomial_errors).enumerate() {
            rows.push(vec![k as f64, j as f64, *d, *e]);
        }
    }
    if let [(_, base), (_, shifted)] = sets.as_slice() {
        let same = if base.kappa == shifted.kappa { "equal" } else { "DIFFERENT" };
        report.line(format!("kappa transfer  {} -> {} ({same})", base.kappa, shifted.kappa));
    }
    write_csv(
        &opts.out.join("moments.csv"),
        &header(&["set", "degree", "moment_defect", "monomial_error"]),
        rows,
    )?;
    finish(report, opts, "moments")
}

/// Prediction traces per rate, the error table and the window bookkeeping.
pub fn predict(config: &RunConfig, opts: &Options, report: &mut Report) -> Result<()> {
    prepare(config, opts)?;
    let (_, ps) = load_kernels(config)?;
    let ps = require_prediction(ps)?;
    let signal = config.signal()?;
    let (lo, hi) = ps.support();
    report.line(format!("prediction kernel support  {}", interval(lo, hi)));
    report.line(format!(
        "window bound    {} blocks, at most {} past samples per prediction",
        ps.window_bound(),
        ps.max_past_samples()
    ));
    let kappa = reproduction_order(&ps, moment_tolerance(config), PROBE_DEGREES).kappa;
    report.line(format!("kappa           {kappa}"));

    let points = opts.grid.unwrap_or(DEFAULT_TRACE_POINTS);
    let (a, b) = signal.default_interval();
    let ts = grid(a, b, points);
    let mut errors = Vec::new();
    for &w in &config.rates {
        let rows = approximation::trace(&ps, &signal, w, &ts)
            .into_iter()
            .map(|p| vec![p.t, p.exact, p.approx]);
        write_csv(&opts.out.join(format!("trace_W{w}.csv")), &header(&["t", "f", "prediction"]), rows)?;
        let err = error_at(&ps, &signal, w, config.p)?;
        report.line(format!("W = {w:<6}  L{} error {err:.6e}", config.p));
        errors.push(vec![w, err]);
    }
    write_csv(&opts.out.join("errors.csv"), &header(&["W", "error"]), errors)?;
    finish(report, opts, "predict")
}

fn error_at(ps: &PredictionScheme, signal: &TestSignal, w: f64, p: f64) -> Result<f64> {
    let window = approximation::default_error_interval(ps, signal, w);
    Ok(lp_error_auto(ps, signal, w, p, window)?)
}

/// Errors over the configured rates with the fitted log-log slope.
pub fn convergence(config: &RunConfig, opts: &Options, report: &mut Report) -> Result<()> {
    prepare(config, opts)?;
    let (_, ps) = load_kernels(config)?;
    let ps = require_prediction(ps)?;
    let signal = config.signal()?;
    let study = approximation::convergence_study(&ps, &signal, &config.rates, config.p)?;
    for (w, e) in &study.rows {
        report.line(format!("W = {w:<6}  L{} error {e:.6e}", config.p));
    }
    match study.slope {
        Some(slope) => report.line(format!("slope           {slope:.4}")),
        None => report.line("slope           n/a (errors at the noise floor)"),
    }
    write_csv(
        &opts.out.join("convergence.csv"),
        &header(&["W", "error"]),
        study.rows.iter().map(|(w, e)| vec![*w, *e]),
    )?;
    finish(report, opts, "convergence")
}

/// Errors for equally spaced and Chebyshev offsets over the configured rates.
pub fn table1(config: &RunConfig, opts: &Options, report: &mut Report) -> Result<()> {
    prepare(config, opts)?;
    let gen = config.generator()?;
    let signal = config.signal()?;
    let families = [OffsetMode::Equispaced, OffsetMode::Chebyshev];
    let schemes = families
        .iter()
        .map(|mode| {
            let scheme = config.scheme_with(mode)?;
            let (_, ps) = build_kernels(config, &gen, &scheme)?;
            require_prediction(ps)
        })
        .collect::<Result<Vec<_>>>()?;
    let rows = config
        .rates
        .par_iter()
        .map(|&w| {
            let mut row = vec![w];
            for ps in &schemes {
                row.push(error_at(ps, &signal, w, config.p)?);
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    report.line(format!("{:>6}  {:>14}  {:>14}", "W", "equally spaced", "chebyshev"));
    for row in &rows {
        report.line(format!("{:>6}  {:>14.6}  {:>14.6}", row[0], row[1], row[2]));
    }
    write_csv(
        &opts.out.join("table1.csv"),
        &header(&["W", "equally_spaced", "chebyshev"]),
        rows,
    )?;
    finish(report, opts, "table1")
}
