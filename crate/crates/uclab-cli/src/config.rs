//! Line-oriented `key = value` run configuration with sections.
//!
//! The format is deliberately small: `[section]` headers, one `key = value`
//! per line, `#` comments. Fixed sections (`domain`, `potential`, `drift`,
//! `solver`, `constants`, `run`) reject unknown keys immediately; repeated
//! `[experiment]` sections carry free parameters that each experiment kind
//! validates when it is built. `parse(serialize(c)) == c` holds exactly.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use uclab::fields::Exponent;

/// Configuration/usage error; maps to exit code 2.
#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("{0}")]
    Invalid(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

impl ConfigError {
    pub fn invalid(msg: impl Into<String>) -> Self {
        ConfigError::Invalid(msg.into())
    }
}

/// Box-domain description.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainSpec {
    pub n: usize,
    pub lo: [f64; 3],
    pub size: [f64; 3],
    /// Cell count along axis 0; the spacing `h = size[0] / cells` must divide
    /// the other extents.
    pub cells: usize,
}

impl Default for DomainSpec {
    fn default() -> Self {
        DomainSpec {
            n: 3,
            lo: [0.0; 3],
            size: [1.0, 1.0, 1.0],
            cells: 32,
        }
    }
}

impl DomainSpec {
    pub fn h(&self) -> f64 {
        self.size[0] / self.cells as f64
    }
}

/// Potential description.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialSpec {
    /// `zero`, `constant` or `two-level`.
    pub kind: String,
    pub value: f64,
    /// Integrability tag; `inf` allowed.
    pub s: Exponent,
    /// Sub-box of the two-level potential.
    pub sub_lo: [f64; 3],
    pub sub_hi: [f64; 3],
    /// Level outside the sub-box (two-level only).
    pub low: f64,
}

impl Default for PotentialSpec {
    fn default() -> Self {
        PotentialSpec {
            kind: "zero".into(),
            value: 0.0,
            s: Exponent::Infinity,
            sub_lo: [0.0; 3],
            sub_hi: [0.5, 0.5, 0.5],
            low: 0.0,
        }
    }
}

/// Constant drift description.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftSpec {
    pub value: [f64; 3],
    pub m: Exponent,
}

/// Solver tolerances.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverSpec {
    pub tol: f64,
}

impl Default for SolverSpec {
    fn default() -> Self {
        SolverSpec { tol: 1e-10 }
    }
}

/// Generic-constant overrides plus the two geometric parameters `𝔱` and `θ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantSpec {
    pub k: f64,
    pub c: f64,
    pub c1: f64,
    pub c_bar: f64,
    pub c_hat: f64,
    pub c_frak: f64,
    pub alpha: f64,
    pub vartheta: f64,
    pub t_frak: f64,
    pub theta: f64,
    pub sigma: f64,
}

impl Default for ConstantSpec {
    fn default() -> Self {
        ConstantSpec {
            k: 1.0,
            c: 1.0,
            c1: 1.0,
            c_bar: 1.0,
            c_hat: 1.0,
            c_frak: 1.0,
            alpha: uclab::constants::ALPHA_DEFAULT,
            vartheta: 1.0,
            t_frak: 0.25,
            theta: 0.3,
            sigma: 0.1,
        }
    }
}

impl ConstantSpec {
    pub fn generics(&self) -> uclab::constants::GenericConstants {
        uclab::constants::GenericConstants {
            k: self.k,
            c: self.c,
            c1: self.c1,
            c_bar: self.c_bar,
            c_hat: self.c_hat,
            c_frak: self.c_frak,
            alpha: self.alpha,
            vartheta: self.vartheta,
        }
    }
}

/// Run-level knobs.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub out: String,
    pub seed: u64,
    pub workers: usize,
    /// `explicit` or `fit`.
    pub mode: String,
}

impl Default for RunSpec {
    fn default() -> Self {
        RunSpec {
            out: "out".into(),
            seed: 1,
            workers: 1,
            mode: "fit".into(),
        }
    }
}

/// One `[experiment]` section: a kind plus raw parameters, validated by the
/// kind's runner.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub kind: String,
    pub params: Vec<(String, String)>,
}

impl ExperimentSpec {
    pub fn new(kind: impl Into<String>) -> Self {
        ExperimentSpec {
            kind: kind.into(),
            params: Vec::new(),
        }
    }

    #[cfg(test)]
    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.params.push((key.to_string(), value.to_string()));
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.params
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64, ConfigError> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => parse_f64(v)
                .ok_or_else(|| ConfigError::invalid(format!("experiment key {key}: bad float {v}"))),
        }
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize, ConfigError> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| ConfigError::invalid(format!("experiment key {key}: bad integer {v}"))),
        }
    }

    pub fn str_or<'a>(&'a self, key: &str, default: &'a str) -> &'a str {
        self.get(key).unwrap_or(default)
    }

    /// Reject parameters outside the allowed set for this kind.
    pub fn check_keys(&self, allowed: &[&str]) -> Result<(), ConfigError> {
        let set: BTreeSet<&str> = allowed.iter().copied().collect();
        for (k, _) in &self.params {
            if k != "kind" && !set.contains(k.as_str()) {
                return Err(ConfigError::invalid(format!(
                    "unknown key `{k}` for experiment kind `{}`",
                    self.kind
                )));
            }
        }
        Ok(())
    }
}

/// Fully resolved run configuration.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunConfig {
    pub domain: DomainSpec,
    pub potential: PotentialSpec,
    pub drift: Option<DriftSpec>,
    pub solver: SolverSpec,
    pub constants: ConstantSpec,
    pub run: RunSpec,
    pub experiments: Vec<ExperimentSpec>,
}

fn parse_f64(s: &str) -> Option<f64> {
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

fn parse_exponent(s: &str) -> Option<Exponent> {
    if s == "inf" {
        Some(Exponent::Infinity)
    } else {
        parse_f64(s).map(Exponent::Finite)
    }
}

fn fmt_exponent(e: &Exponent) -> String {
    match e {
        Exponent::Infinity => "inf".into(),
        Exponent::Finite(v) => format!("{v}"),
    }
}

fn parse_triple(s: &str) -> Option<[f64; 3]> {
    let parts: Vec<f64> = s.split_whitespace().filter_map(parse_f64).collect();
    if parts.len() == 3 && s.split_whitespace().count() == 3 {
        Some([parts[0], parts[1], parts[2]])
    } else {
        None
    }
}

fn fmt_triple(t: &[f64; 3]) -> String {
    format!("{} {} {}", t[0], t[1], t[2])
}

impl RunConfig {
    pub fn load(path: &str) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = RunConfig::default();
        let mut section = String::new();
        let mut drift_seen = false;
        let err = |line: usize, msg: String| ConfigError::Parse { line, msg };

        for (ln, raw) in text.lines().enumerate() {
            let line = ln + 1;
            let stripped = match raw.find('#') {
                Some(i) => &raw[..i],
                None => raw,
            }
            .trim();
            if stripped.is_empty() {
                continue;
            }
            if let Some(name) = stripped.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| err(line, "unterminated section header".into()))?
                    .trim();
                match name {
                    "domain" | "potential" | "solver" | "constants" | "run" => {
                        section = name.to_string()
                    }
                    "drift" => {
                        drift_seen = true;
                        cfg.drift = Some(DriftSpec {
                            value: [0.0; 3],
                            m: Exponent::Infinity,
                        });
                        section = "drift".into();
                    }
                    "experiment" => {
                        cfg.experiments.push(ExperimentSpec::new(""));
                        section = "experiment".into();
                    }
                    other => return Err(err(line, format!("unknown section [{other}]"))),
                }
                continue;
            }
            let (key, value) = stripped
                .split_once('=')
                .ok_or_else(|| err(line, format!("expected `key = value`, got `{stripped}`")))?;
            let (key, value) = (key.trim(), value.trim());
            let bad_key =
                |line: usize| err(line, format!("unknown key `{key}` in section [{section}]"));
            let bad_val =
                |line: usize| err(line, format!("bad value `{value}` for key `{key}`"));

            match section.as_str() {
                "domain" => match key {
                    "n" => cfg.domain.n = value.parse().map_err(|_| bad_val(line))?,
                    "lo" => cfg.domain.lo = parse_triple(value).ok_or_else(|| bad_val(line))?,
                    "size" => cfg.domain.size = parse_triple(value).ok_or_else(|| bad_val(line))?,
                    "cells" => cfg.domain.cells = value.parse().map_err(|_| bad_val(line))?,
                    _ => return Err(bad_key(line)),
                },
                "potential" => match key {
                    "kind" => cfg.potential.kind = value.to_string(),
                    "value" => cfg.potential.value = parse_f64(value).ok_or_else(|| bad_val(line))?,
                    "s" => cfg.potential.s = parse_exponent(value).ok_or_else(|| bad_val(line))?,
                    "sub_lo" => {
                        cfg.potential.sub_lo = parse_triple(value).ok_or_else(|| bad_val(line))?
                    }
                    "sub_hi" => {
                        cfg.potential.sub_hi = parse_triple(value).ok_or_else(|| bad_val(line))?
                    }
                    "low" => cfg.potential.low = parse_f64(value).ok_or_else(|| bad_val(line))?,
                    _ => return Err(bad_key(line)),
                },
                "drift" => {
                    let d = cfg.drift.as_mut().expect("drift section seen");
                    match key {
                        "value" => d.value = parse_triple(value).ok_or_else(|| bad_val(line))?,
                        "m" => d.m = parse_exponent(value).ok_or_else(|| bad_val(line))?,
                        _ => return Err(bad_key(line)),
                    }
                }
                "solver" => match key {
                    "tol" => cfg.solver.tol = parse_f64(value).ok_or_else(|| bad_val(line))?,
                    _ => return Err(bad_key(line)),
                },
                "constants" => {
                    let c = &mut cfg.constants;
                    let slot = match key {
                        "k" => &mut c.k,
                        "c" => &mut c.c,
                        "c1" => &mut c.c1,
                        "c_bar" => &mut c.c_bar,
                        "c_hat" => &mut c.c_hat,
                        "c_frak" => &mut c.c_frak,
                        "alpha" => &mut c.alpha,
                        "vartheta" => &mut c.vartheta,
                        "t_frak" => &mut c.t_frak,
                        "theta" => &mut c.theta,
                        "sigma" => &mut c.sigma,
                        _ => return Err(bad_key(line)),
                    };
                    *slot = parse_f64(value).ok_or_else(|| bad_val(line))?;
                }
                "run" => match key {
                    "out" => cfg.run.out = value.to_string(),
                    "seed" => cfg.run.seed = value.parse().map_err(|_| bad_val(line))?,
                    "workers" => cfg.run.workers = value.parse().map_err(|_| bad_val(line))?,
                    "mode" => cfg.run.mode = value.to_string(),
                    _ => return Err(bad_key(line)),
                },
                "experiment" => {
                    let e = cfg
                        .experiments
                        .last_mut()
                        .expect("experiment section seen");
                    if key == "kind" {
                        e.kind = value.to_string();
                    } else {
                        if e.params.iter().any(|(k, _)| k == key) {
                            return Err(err(line, format!("duplicate experiment key `{key}`")));
                        }
                        e.params.push((key.to_string(), value.to_string()));
                    }
                }
                "" => return Err(err(line, "key before any [section] header".into())),
                _ => unreachable!(),
            }
        }
        let _ = drift_seen;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.domain.n != 2 && self.domain.n != 3 {
            return Err(ConfigError::invalid(format!(
                "domain n must be 2 or 3, got {}",
                self.domain.n
            )));
        }
        if self.domain.cells < 8 {
            return Err(ConfigError::invalid("domain needs at least 8 cells"));
        }
        match self.potential.kind.as_str() {
            "zero" | "constant" | "two-level" => {}
            other => {
                return Err(ConfigError::invalid(format!(
                    "potential kind `{other}` (want zero | constant | two-level)"
                )))
            }
        }
        match self.run.mode.as_str() {
            "explicit" | "fit" => {}
            other => {
                return Err(ConfigError::invalid(format!(
                    "mode `{other}` (want explicit | fit)"
                )))
            }
        }
        if self.run.workers == 0 || self.run.workers > 64 {
            return Err(ConfigError::invalid("workers must lie in 1..=64"));
        }
        for e in &self.experiments {
            if e.kind.is_empty() {
                return Err(ConfigError::invalid("experiment section without kind"));
            }
        }
        Ok(())
    }

    pub fn mode(&self) -> uclab::report::Mode {
        if self.run.mode == "explicit" {
            uclab::report::Mode::Explicit
        } else {
            uclab::report::Mode::Fit
        }
    }

    /// Serialization embedded in reports: like [`serialize`](Self::serialize)
    /// but without the execution-only keys (`out`, `workers`), so reruns of
    /// the same science with a different worker count or output directory
    /// produce byte-identical report bodies.
    pub fn serialize_report(&self) -> String {
        self.serialize()
            .lines()
            .filter(|l| !(l.starts_with("out = ") || l.starts_with("workers = ")))
            .collect::<Vec<_>>()
            .join("\n")
            + "\n"
    }

    /// Canonical serialization; `parse(serialize(c)) == c`.
    pub fn serialize(&self) -> String {
        let mut s = String::new();
        let d = &self.domain;
        let _ = writeln!(s, "[domain]");
        let _ = writeln!(s, "n = {}", d.n);
        let _ = writeln!(s, "lo = {}", fmt_triple(&d.lo));
        let _ = writeln!(s, "size = {}", fmt_triple(&d.size));
        let _ = writeln!(s, "cells = {}", d.cells);
        let p = &self.potential;
        let _ = writeln!(s, "\n[potential]");
        let _ = writeln!(s, "kind = {}", p.kind);
        let _ = writeln!(s, "value = {}", p.value);
        let _ = writeln!(s, "s = {}", fmt_exponent(&p.s));
        let _ = writeln!(s, "sub_lo = {}", fmt_triple(&p.sub_lo));
        let _ = writeln!(s, "sub_hi = {}", fmt_triple(&p.sub_hi));
        let _ = writeln!(s, "low = {}", p.low);
        if let Some(w) = &self.drift {
            let _ = writeln!(s, "\n[drift]");
            let _ = writeln!(s, "value = {}", fmt_triple(&w.value));
            let _ = writeln!(s, "m = {}", fmt_exponent(&w.m));
        }
        let _ = writeln!(s, "\n[solver]");
        let _ = writeln!(s, "tol = {}", self.solver.tol);
        let c = &self.constants;
        let _ = writeln!(s, "\n[constants]");
        let _ = writeln!(s, "k = {}", c.k);
        let _ = writeln!(s, "c = {}", c.c);
        let _ = writeln!(s, "c1 = {}", c.c1);
        let _ = writeln!(s, "c_bar = {}", c.c_bar);
        let _ = writeln!(s, "c_hat = {}", c.c_hat);
        let _ = writeln!(s, "c_frak = {}", c.c_frak);
        let _ = writeln!(s, "alpha = {}", c.alpha);
        let _ = writeln!(s, "vartheta = {}", c.vartheta);
        let _ = writeln!(s, "t_frak = {}", c.t_frak);
        let _ = writeln!(s, "theta = {}", c.theta);
        let _ = writeln!(s, "sigma = {}", c.sigma);
        let r = &self.run;
        let _ = writeln!(s, "\n[run]");
        let _ = writeln!(s, "out = {}", r.out);
        let _ = writeln!(s, "seed = {}", r.seed);
        let _ = writeln!(s, "workers = {}", r.workers);
        let _ = writeln!(s, "mode = {}", r.mode);
        for e in &self.experiments {
            let _ = writeln!(s, "\n[experiment]");
            let _ = writeln!(s, "kind = {}", e.kind);
            for (k, v) in &e.params {
                let _ = writeln!(s, "{k} = {v}");
            }
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_default_config() {
        let cfg = RunConfig::default();
        let text = cfg.serialize();
        assert_eq!(RunConfig::parse(&text).unwrap(), cfg);
    }

    #[test]
    fn round_trips_full_config() {
        let mut cfg = RunConfig::default();
        cfg.potential.kind = "two-level".into();
        cfg.potential.value = 10.0;
        cfg.potential.s = Exponent::Finite(3.0);
        cfg.drift = Some(DriftSpec {
            value: [0.5, -0.25, 0.0],
            m: Exponent::Infinity,
        });
        cfg.run.workers = 4;
        cfg.experiments.push(
            ExperimentSpec::new("frequency")
                .with("field", "x1")
                .with("r_min", 0.1),
        );
        cfg.experiments
            .push(ExperimentSpec::new("doubling").with("r", 0.1));
        let text = cfg.serialize();
        assert_eq!(RunConfig::parse(&text).unwrap(), cfg);
    }

    #[test]
    fn rejects_unknown_section_and_key() {
        assert!(RunConfig::parse("[junk]\na = 1\n").is_err());
        assert!(RunConfig::parse("[domain]\nwhat = 1\n").is_err());
        assert!(RunConfig::parse("[run]\nmode = sideways\n").is_err());
    }

    #[test]
    fn rejects_duplicate_experiment_key() {
        let text = "[experiment]\nkind = doubling\nr = 0.1\nr = 0.2\n";
        assert!(RunConfig::parse(text).is_err());
    }

    #[test]
    fn comments_and_blank_lines_ignored() {
        let text = "# top\n[domain]\ncells = 16 # trailing\n\n[run]\nseed = 7\n";
        let cfg = RunConfig::parse(text).unwrap();
        assert_eq!(cfg.domain.cells, 16);
        assert_eq!(cfg.run.seed, 7);
    }
}
