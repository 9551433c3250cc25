//! Flat `key = value` run configuration.
//!
//! One dotted key per line, `#` starts a comment. Relative paths are taken
//! relative to the directory holding the config file.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use pns_core::approximation::TestSignal;
use pns_core::generators::Generator;
use pns_core::polyphase::SamplingScheme;
use pns_core::prediction::equally_spaced_weights;

use crate::error::{CliError, Result};

/// Rates of the `table1` rows, used when `W` is not set.
pub const TABLE1_RATES: [f64; 7] = [5.0, 7.0, 10.0, 15.0, 20.0, 25.0, 30.0];

const KEYS: [&str; 17] = [
    "generator.kind",
    "generator.order",
    "scheme.rho",
    "scheme.L",
    "scheme.r",
    "scheme.s",
    "offsets.mode",
    "offsets.values",
    "epsilon.mode",
    "epsilon.eps0",
    "epsilon.d",
    "epsilon.values",
    "signal",
    "W",
    "p",
    "output.dir",
    "kernels.file",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeneratorKind {
    BSpline,
    Daubechies,
}

#[derive(Debug, Clone, PartialEq)]
pub enum OffsetMode {
    Explicit(Vec<f64>),
    Equispaced,
    Chebyshev,
}

#[derive(Debug, Clone, PartialEq)]
pub enum EpsilonMode {
    Explicit(Vec<f64>),
    Equispaced { eps0: f64, d: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum SignalChoice {
    /// `e^{-t^2/4} sin(2 pi t)`
    F,
    /// The truncated cubic with jumps at -1.5 and 3.
    G,
    Zero,
    /// Two-column CSV `t,value` on a uniform grid.
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub generator_kind: GeneratorKind,
    pub generator_order: usize,
    pub rho: usize,
    pub len: usize,
    pub r: usize,
    pub s: usize,
    pub offsets: OffsetMode,
    pub epsilon: Option<EpsilonMode>,
    pub signal: SignalChoice,
    pub rates: Vec<f64>,
    pub p: f64,
    pub output_dir: Option<PathBuf>,
    pub kernels_file: Option<PathBuf>,
    lines: BTreeMap<&'static str, usize>,
}

struct Raw {
    entries: BTreeMap<&'static str, (usize, String)>,
}

impl Raw {
    fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (idx, line) in text.lines().enumerate() {
            let lineno = idx + 1;
            let content = line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| CliError::config(Some(lineno), format!("expected `key = value`, got {content:?}")))?;
            let key = key.trim();
            let value = value.trim();
            let known = KEYS
                .iter()
                .find(|k| **k == key)
                .ok_or_else(|| CliError::config(Some(lineno), format!("unknown key {key:?}")))?;
            if value.is_empty() {
                return Err(CliError::config(Some(lineno), format!("empty value for {key}")));
            }
            if let Some((first, _)) = entries.insert(*known, (lineno, value.to_string())) {
                return Err(CliError::config(
                    Some(lineno),
                    format!("duplicate key {key} (first set on line {first})"),
                ));
            }
        }
        Ok(Raw { entries })
    }

    fn line(&self, key: &str) -> Option<usize> {
        self.entries.get(key).map(|(l, _)| *l)
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.entries.get(key) {
            None => Ok(None),
            Some((line, v)) => v
                .parse()
                .map(Some)
                .map_err(|_| CliError::config(Some(*line), format!("cannot parse {key} = {v:?}"))),
        }
    }

    fn require<T: FromStr>(&self, key: &str) -> Result<T> {
        self.get(key)?
            .ok_or_else(|| CliError::config(None, format!("missing required key {key}")))
    }

    fn list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        match self.entries.get(key) {
            None => Ok(None),
            Some((line, v)) => v
                .split(',')
                .map(|item| {
                    let item = item.trim();
                    item.parse::<f64>()
                        .ok()
                        .filter(|x| x.is_finite())
                        .ok_or_else(|| CliError::config(Some(*line), format!("{key}: {item:?} is not a finite number")))
                })
                .collect::<Result<Vec<_>>>()
                .map(Some),
        }
    }

    fn word(&self, key: &str) -> Option<(usize, &str)> {
        self.entries.get(key).map(|(l, v)| (*l, v.as_str()))
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }

    /// Parses config text; relative paths are joined onto `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let raw = Raw::parse(text)?;

        let generator_kind = match raw.word("generator.kind") {
            Some((_, "bspline")) => GeneratorKind::BSpline,
            Some((_, "daubechies")) => GeneratorKind::Daubechies,
            Some((line, other)) => {
                return Err(CliError::config(
                    Some(line),
                    format!("generator.kind must be bspline or daubechies, got {other:?}"),
                ))
            }
            None => return Err(CliError::config(None, "missing required key generator.kind")),
        };
        let generator_order: usize = raw.require("generator.order")?;

        let rho: usize = raw.require("scheme.rho")?;
        let r: usize = raw.require("scheme.r")?;
        if r == 0 || rho == 0 || rho % r != 0 {
            return Err(CliError::config(
                raw.line("scheme.r"),
                format!("rho = {rho} must be a positive multiple of r = {r}"),
            ));
        }
        let len = match raw.get::<usize>("scheme.L")? {
            Some(len) if len * r != rho => {
                return Err(CliError::config(
                    raw.line("scheme.L"),
                    format!("rho = {rho} must equal L * r = {len} * {r}"),
                ))
            }
            Some(len) => len,
            None => rho / r,
        };
        let s: usize = raw.get("scheme.s")?.unwrap_or(0);
        if s >= rho {
            return Err(CliError::config(raw.line("scheme.s"), format!("s = {s} must be below rho = {rho}")));
        }

        let values = raw.list("offsets.values")?;
        let offsets = match (raw.word("offsets.mode"), values) {
            (None | Some((_, "explicit")), Some(values)) => {
                if values.len() != len {
                    return Err(CliError::config(
                        raw.line("offsets.values"),
                        format!("expected L = {len} offsets, got {}", values.len()),
                    ));
                }
                OffsetMode::Explicit(values)
            }
            (Some((line, "explicit")), None) => {
                return Err(CliError::config(Some(line), "offsets.mode = explicit needs offsets.values"))
            }
            (None | Some((_, "equispaced")), None) => OffsetMode::Equispaced,
            (Some((_, "chebyshev")), None) => OffsetMode::Chebyshev,
            (Some((_, "equispaced" | "chebyshev")), Some(_)) => {
                return Err(CliError::config(
                    raw.line("offsets.values"),
                    "offsets.values only applies to offsets.mode = explicit",
                ))
            }
            (Some((line, other)), _) => {
                return Err(CliError::config(
                    Some(line),
                    format!("offsets.mode must be explicit, equispaced or chebyshev, got {other:?}"),
                ))
            }
        };

        let eps_values = raw.list("epsilon.values")?;
        let eps0: Option<f64> = raw.get("epsilon.eps0")?;
        let d: Option<f64> = raw.get("epsilon.d")?;
        let epsilon = match raw.word("epsilon.mode") {
            Some((_, "explicit")) => Some(EpsilonMode::Explicit(eps_values.ok_or_else(|| {
                CliError::config(raw.line("epsilon.mode"), "epsilon.mode = explicit needs epsilon.values")
            })?)),
            Some((_, "equispaced")) => match (eps0, d) {
                (Some(eps0), Some(d)) => Some(EpsilonMode::Equispaced { eps0, d }),
                _ => {
                    return Err(CliError::config(
                        raw.line("epsilon.mode"),
                        "epsilon.mode = equispaced needs epsilon.eps0 and epsilon.d",
                    ))
                }
            },
            Some((line, other)) => {
                return Err(CliError::config(
                    Some(line),
                    format!("epsilon.mode must be explicit or equispaced, got {other:?}"),
                ))
            }
            None => match (eps_values, eps0, d) {
                (Some(values), None, None) => Some(EpsilonMode::Explicit(values)),
                (None, Some(eps0), Some(d)) => Some(EpsilonMode::Equispaced { eps0, d }),
                (None, None, None) => None,
                _ => {
                    let line = raw.line("epsilon.values").or(raw.line("epsilon.eps0")).or(raw.line("epsilon.d"));
                    return Err(CliError::config(
                        line,
                        "give either epsilon.values or both epsilon.eps0 and epsilon.d",
                    ));
                }
            },
        };

        let signal = match raw.word("signal") {
            None | Some((_, "f")) => SignalChoice::F,
            Some((_, "g")) => SignalChoice::G,
            Some((_, "zero")) => SignalChoice::Zero,
            Some((_, v)) if v.starts_with("file:") => SignalChoice::File(base.join(v["file:".len()..].trim())),
            Some((line, other)) => {
                return Err(CliError::config(
                    Some(line),
                    format!("signal must be f, g, zero or file:PATH, got {other:?}"),
                ))
            }
        };

        let rates = raw.list("W")?.unwrap_or_else(|| TABLE1_RATES.to_vec());
        if let Some(bad) = rates.iter().find(|w| !(**w > 0.0)) {
            return Err(CliError::config(raw.line("W"), format!("rates must be positive, got {bad}")));
        }
        let p: f64 = raw.get("p")?.unwrap_or(2.0);
        if !(p >= 1.0 && p.is_finite()) {
            return Err(CliError::config(raw.line("p"), format!("p must be a finite number >= 1, got {p}")));
        }

        let path = |key: &str| raw.word(key).map(|(_, v)| base.join(v));
        let lines = raw.entries.iter().map(|(k, (l, _))| (*k, *l)).collect();
        let config = RunConfig {
            generator_kind,
            generator_order,
            rho,
            len,
            r,
            s,
            offsets,
            epsilon,
            signal,
            rates,
            p,
            output_dir: path("output.dir"),
            kernels_file: path("kernels.file"),
            lines,
        };
        // Surface core-level violations with a line number now rather than mid-run.
        config.generator()?;
        config.scheme()?;
        config.epsilons()?;
        Ok(config)
    }

    fn line(&self, key: &str) -> Option<usize> {
        self.lines.get(key).copied()
    }

    pub fn generator(&self) -> Result<Generator> {
        let gen = match self.generator_kind {
            GeneratorKind::BSpline => Generator::bspline(self.generator_order),
            GeneratorKind::Daubechies => Generator::daubechies(self.generator_order),
        };
        gen.map_err(|e| CliError::config(self.line("generator.order"), e.to_string()))
    }

    pub fn scheme(&self) -> Result<SamplingScheme> {
        self.scheme_with(&self.offsets)
    }

    /// The configured scheme with its offsets replaced.
    pub fn scheme_with(&self, offsets: &OffsetMode) -> Result<SamplingScheme> {
        let scheme = match offsets {
            OffsetMode::Explicit(values) => SamplingScheme::new(self.rho, self.r, values.clone()),
            OffsetMode::Equispaced => SamplingScheme::equispaced(self.rho, self.r, self.s),
            OffsetMode::Chebyshev => SamplingScheme::chebyshev(self.rho, self.r, self.s),
        };
        let line = self.line("offsets.values").or(self.line("offsets.mode")).or(self.line("scheme.rho"));
        scheme.map_err(|e| CliError::config(line, e.to_string()))
    }

    /// Shifts `eps_p`, if configured.
    pub fn epsilons(&self) -> Result<Option<Vec<f64>>> {
        let eps = match &self.epsilon {
            None => return Ok(None),
            Some(EpsilonMode::Explicit(values)) => values.clone(),
            Some(EpsilonMode::Equispaced { eps0, d }) => {
                // Validates eps0 and d the same way the weight formula does.
                equally_spaced_weights(*eps0, *d, self.rho)
                    .map_err(|e| CliError::config(self.line("epsilon.d"), e.to_string()))?;
                (0..self.rho).map(|p| eps0 + p as f64 * d).collect()
            }
        };
        let line = self.line("epsilon.values").or(self.line("epsilon.eps0"));
        if eps.len() != self.rho {
            return Err(CliError::config(line, format!("need rho = {} shifts, got {}", self.rho, eps.len())));
        }
        if eps[0] < self.rho as f64 {
            return Err(CliError::config(
                line,
                format!("first shift {} is below rho = {}; the predictor would not be causal", eps[0], self.rho),
            ));
        }
        if eps.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(CliError::config(line, "shifts must be strictly increasing"));
        }
        Ok(Some(eps))
    }

    /// Shifts, or a config error naming the missing keys.
    pub fn require_epsilons(&self) -> Result<Vec<f64>> {
        self.epsilons()?.ok_or_else(|| {
            CliError::config(None, "this command needs shifts: set epsilon.values or epsilon.eps0 and epsilon.d")
        })
    }

    pub fn signal(&self) -> Result<TestSignal> {
        match &self.signal {
            SignalChoice::F => Ok(TestSignal::GaussianSine),
            SignalChoice::G => Ok(TestSignal::TruncatedCubic),
            SignalChoice::Zero => Ok(TestSignal::Zero),
            SignalChoice::File(path) => load_tabulated(path, self.line("signal")),
        }
    }

    /// The fully resolved configuration in the same key-value format.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let list = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ");
        let kind = match self.generator_kind {
            GeneratorKind::BSpline => "bspline",
            GeneratorKind::Daubechies => "daubechies",
        };
        // Writing into a String cannot fail.
        let _ = writeln!(out, "generator.kind = {kind}");
        let _ = writeln!(out, "generator.order = {}", self.generator_order);
        let _ = writeln!(out, "scheme.rho = {}", self.rho);
        let _ = writeln!(out, "scheme.L = {}", self.len);
        let _ = writeln!(out, "scheme.r = {}", self.r);
        let _ = writeln!(out, "scheme.s = {}", self.s);
        match &self.offsets {
            OffsetMode::Explicit(v) => {
                let _ = writeln!(out, "offsets.mode = explicit");
                let _ = writeln!(out, "offsets.values = {}", list(v));
            }
            OffsetMode::Equispaced => {
                let _ = writeln!(out, "offsets.mode = equispaced");
            }
            OffsetMode::Chebyshev => {
                let _ = writeln!(out, "offsets.mode = chebyshev");
            }
        }
        match &self.epsilon {
            Some(EpsilonMode::Explicit(v)) => {
                let _ = writeln!(out, "epsilon.mode = explicit");
                let _ = writeln!(out, "epsilon.values = {}", list(v));
            }
            Some(EpsilonMode::Equispaced { eps0, d }) => {
                let _ = writeln!(out, "epsilon.mode = equispaced");
                let _ = writeln!(out, "epsilon.eps0 = {eps0}");
                let _ = writeln!(out, "epsilon.d = {d}");
            }
            None => {}
        }
        let signal = match &self.signal {
            SignalChoice::F => "f".to_string(),
            SignalChoice::G => "g".to_string(),
            SignalChoice::Zero => "zero".to_string(),
            SignalChoice::File(p) => format!("file:{}", p.display()),
        };
        let _ = writeln!(out, "signal = {signal}");
        let _ = writeln!(out, "W = {}", list(&self.rates));
        let _ = writeln!(out, "p = {}", self.p);
        if let Some(dir) = &self.output_dir {
            let _ = writeln!(out, "output.dir = {}", dir.display());
        }
        if let Some(file) = &self.kernels_file {
            let _ = writeln!(out, "kernels.file = {}", file.display());
        }
        out
    }
}

fn load_tabulated(path: &Path, line: Option<usize>) -> Result<TestSignal> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| CliError::config(line, format!("{}: {e}", path.display())))?;
    let mut ts = Vec::new();
    let mut values = Vec::new();
    for (k, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::config(line, format!("{}: {e}", path.display())))?;
        let field = |j: usize| -> Result<f64> {
            record
                .get(j)
                .and_then(|v| v.trim().parse::<f64>().ok())
                .ok_or_else(|| CliError::config(line, format!("{}: bad number on data row {}", path.display(), k + 1)))
        };
        ts.push(field(0)?);
        values.push(field(1)?);
    }
    if ts.len() < 2 {
        return Err(CliError::config(line, format!("{}: need at least two rows", path.display())));
    }
    let step = (ts[ts.len() - 1] - ts[0]) / (ts.len() - 1) as f64;
    if ts.windows(2).any(|w| ((w[1] - w[0]) - step).abs() > 1e-9 * step.abs().max(1.0)) {
        return Err(CliError::config(line, format!("{}: abscissae must be uniformly spaced", path.display())));
    }
    TestSignal::tabulated(ts[0], step, values).map_err(|e| CliError::config(line, e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXAMPLE_ONE: &str = "\
generator.kind = bspline
generator.order = 4
scheme.rho = 4
scheme.r = 1
epsilon.eps0 = 4   # first shift
epsilon.d = 0.25
W = 10, 20
";

    #[test]
    fn defaults_are_filled_in() {
        let c = RunConfig::parse(EXAMPLE_ONE, Path::new(".")).unwrap();
        assert_eq!(c.len, 4);
        assert_eq!(c.offsets, OffsetMode::Equispaced);
        assert_eq!(c.epsilons().unwrap().unwrap(), vec![4.0, 4.25, 4.5, 4.75]);
        assert_eq!(c.rates, vec![10.0, 20.0]);
        assert_eq!(c.signal, SignalChoice::F);
        assert_eq!(c.p, 2.0);
    }

    #[test]
    fn resolved_text_parses_back_identically() {
        let c = RunConfig::parse(EXAMPLE_ONE, Path::new(".")).unwrap();
        let again = RunConfig::parse(&c.to_text(), Path::new(".")).unwrap();
        assert_eq!(again.to_text(), c.to_text());
        assert_eq!(again.epsilons().unwrap(), c.epsilons().unwrap());
    }

    fn error_line(text: &str) -> Option<usize> {
        match RunConfig::parse(text, Path::new(".")) {
            Err(CliError::Config { line, .. }) => line,
            other => panic!("expected a config error, got {other:?}"),
        }
    }

    #[test]
    fn errors_carry_line_numbers() {
        assert_eq!(error_line("generator.kind = bspline\nbogus = 1\n"), Some(2));
        assert_eq!(error_line("generator.kind = bspline\ngenerator.kind = bspline\n"), Some(2));
        assert_eq!(error_line("generator.kind = bspline\nno equals sign\n"), Some(2));
        let bad_l = "generator.kind = bspline\ngenerator.order = 4\nscheme.rho = 4\nscheme.r = 1\nscheme.L = 3\n";
        assert_eq!(error_line(bad_l), Some(5));
        let bad_order = "generator.kind = bspline\ngenerator.order = 0\nscheme.rho = 4\nscheme.r = 1\n";
        assert_eq!(error_line(bad_order), Some(2));
        let bad_offsets = format!("{EXAMPLE_ONE}offsets.values = 0.1, 0.2\n");
        assert_eq!(error_line(&bad_offsets), Some(8));
        let acausal = EXAMPLE_ONE.replace("epsilon.eps0 = 4", "epsilon.eps0 = 3.5");
        assert_eq!(error_line(&acausal), Some(5));
        assert_eq!(error_line("generator.kind = bspline\n"), None);
    }
}
