//! Flat `key = value` experiment configuration.
//!
//! One setting per line, `#` starts a comment, keys are kebab-case and
//! unknown keys are rejected. Lists are comma separated.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use twistlab_core::residue::{is_prime, next_prime};
use twistlab_core::trace::{
    additive_char, dirichlet_char, hyper_kloosterman, TraceError, TraceFunction,
};
use twistlab_core::Complex64;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    SweepThm1,
    SweepThm2,
    SweepAp,
    SqrtcancelHistogram,
    IdentitySuite,
}

impl FromStr for ExperimentKind {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "sweep-thm1" => Self::SweepThm1,
            "sweep-thm2" => Self::SweepThm2,
            "sweep-ap" => Self::SweepAp,
            "sqrtcancel-histogram" => Self::SqrtcancelHistogram,
            "identity-suite" => Self::IdentitySuite,
            _ => return Err(CliError::Config(format!("unknown experiment '{s}'"))),
        })
    }
}

/// A named family of trace functions, instantiated at a prime modulus.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    /// hyper-Kloosterman `Kl_d`
    Kl(u32),
    /// Dirichlet character with index `j` relative to the smallest generator
    Chi(u64),
    /// `e(a x / p)`
    Add(u64),
    Zero,
    One,
}

impl FromStr for Family {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || CliError::Config(format!("unknown trace family '{s}'"));
        let num = |t: &str| t.parse::<u64>().map_err(|_| bad());
        Ok(match s {
            "zero" => Family::Zero,
            "one" => Family::One,
            _ if s.starts_with("kl") => {
                let d = num(&s[2..])? as u32;
                if d == 0 {
                    return Err(bad());
                }
                Family::Kl(d)
            }
            _ if s.starts_with("chi:") => Family::Chi(num(&s[4..])?),
            _ if s.starts_with("add:") => Family::Add(num(&s[4..])?),
            _ => return Err(bad()),
        })
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Kl(d) => write!(f, "kl{d}"),
            Family::Chi(j) => write!(f, "chi:{j}"),
            Family::Add(a) => write!(f, "add:{a}"),
            Family::Zero => write!(f, "zero"),
            Family::One => write!(f, "one"),
        }
    }
}

impl Family {
    pub fn build(&self, p: u64) -> std::result::Result<TraceFunction, TraceError> {
        match *self {
            Family::Kl(d) => hyper_kloosterman(d, p),
            Family::Chi(j) => dirichlet_char(p, j),
            Family::Add(a) => additive_char(a % p, p),
            Family::Zero => Ok(TraceFunction::zero(p)),
            Family::One => Ok(TraceFunction::constant(p, Complex64::new(1.0, 0.0))),
        }
    }
}

/// How `q = q0 q1` is cut when only a target modulus is given.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Split {
    /// `q0 ~ q^{2/3}`
    TwoThirds,
    /// `q0 ~ q^{4/5}`
    FourFifths,
}

impl FromStr for Split {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "2/3" | "thm1" => Ok(Split::TwoThirds),
            "4/5" | "thm2" => Ok(Split::FourFifths),
            _ => Err(CliError::Config(format!("unknown split rule '{s}'"))),
        }
    }
}

impl Split {
    pub fn exponent(self) -> f64 {
        match self {
            Split::TwoThirds => 2.0 / 3.0,
            Split::FourFifths => 0.8,
        }
    }
}

/// Cuts `q` into primes `q0 ~ q^e` and `q1 ~ q / q0`, with `q1 != q0`.
pub fn split_modulus(q: u64, split: Split) -> (u64, u64) {
    let q0 = next_prime(((q as f64).powf(split.exponent()).round() as u64).max(2));
    let mut q1 = next_prime(((q as f64 / q0 as f64).round() as u64).max(2));
    if q1 == q0 {
        q1 = next_prime(q1 + 1);
    }
    (q0, q1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub q0: Option<u64>,
    pub q1: Option<u64>,
    pub target_q: Option<u64>,
    pub split: Option<Split>,
    pub k0_family: Family,
    pub k1_family: Family,
    pub z: f64,
    pub x_grid: Vec<f64>,
    pub seed: u64,
    pub threads: usize,
    pub output: Option<PathBuf>,
    pub cache_dir: Option<PathBuf>,
    /// weight of the level-1 eigenform
    pub weight: u32,
    /// histogram draws per modulus
    pub draws: usize,
    pub q0_list: Vec<u64>,
    /// histogram statistic: corr, zz or zz-resonant
    pub kind: String,
    /// residue class for sweep-ap
    pub a: u64,
    /// fill the wall_ms column
    pub timing: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: ExperimentKind::SweepThm1,
            q0: None,
            q1: None,
            target_q: None,
            split: None,
            k0_family: Family::Kl(3),
            k1_family: Family::Chi(1),
            z: 1.0,
            x_grid: Vec::new(),
            seed: 1,
            threads: 0,
            output: None,
            cache_dir: None,
            weight: 12,
            draws: 500,
            q0_list: vec![101, 151, 199],
            kind: "corr".into(),
            a: 1,
            timing: false,
        }
    }
}

fn parse_num<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| CliError::Config(format!("bad value '{v}' for '{key}'")))
}

fn parse_list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_num(key, s))
        .collect()
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "on" | "yes" | "1" => Ok(true),
        "false" | "off" | "no" | "0" => Ok(false),
        _ => Err(CliError::Config(format!("bad value '{v}' for '{key}'"))),
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut c = Self::default();
        let (mut start, mut ratio, mut count) = (None::<f64>, None::<f64>, None::<usize>);
        let mut explicit_grid = false;
        let mut seen = std::collections::HashSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::Config(format!("line {}: expected key = value", i + 1)));
            };
            let (key, v) = (key.trim(), value.trim());
            if !seen.insert(key.to_string()) {
                return Err(CliError::Config(format!("line {}: duplicate key '{key}'", i + 1)));
            }
            match key {
                "experiment" => c.experiment = v.parse()?,
                "q0" => c.q0 = Some(parse_num(key, v)?),
                "q1" => c.q1 = Some(parse_num(key, v)?),
                "target-q" => c.target_q = Some(parse_num(key, v)?),
                "split" => c.split = Some(v.parse()?),
                "k0-family" => c.k0_family = v.parse()?,
                "k1-family" => c.k1_family = v.parse()?,
                "z" => c.z = parse_num(key, v)?,
                "x-grid" => {
                    c.x_grid = parse_list(key, v)?;
                    explicit_grid = true;
                }
                "x-start" => start = Some(parse_num(key, v)?),
                "x-ratio" => ratio = Some(parse_num(key, v)?),
                "x-count" => count = Some(parse_num(key, v)?),
                "seed" => c.seed = parse_num(key, v)?,
                "threads" => c.threads = parse_num(key, v)?,
                "output" => c.output = Some(PathBuf::from(v)),
                "cache-dir" => c.cache_dir = Some(PathBuf::from(v)),
                "weight" => c.weight = parse_num(key, v)?,
                "draws" => c.draws = parse_num(key, v)?,
                "q0-list" => c.q0_list = parse_list(key, v)?,
                "kind" => c.kind = v.to_string(),
                "a" => c.a = parse_num(key, v)?,
                "timing" => c.timing = parse_bool(key, v)?,
                _ => return Err(CliError::Config(format!("line {}: unknown key '{key}'", i + 1))),
            }
        }
        match (start, ratio, count) {
            (None, None, None) => {}
            (Some(s), Some(r), Some(n)) if !explicit_grid => {
                c.x_grid = (0..n).map(|i| s * r.powi(i as i32)).collect();
            }
            _ => {
                return Err(CliError::Config(
                    "give either x-grid or all of x-start, x-ratio, x-count".into(),
                ))
            }
        }
        c.validate()?;
        Ok(c)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let err = |m: String| Err(CliError::Config(m));
        if self.x_grid.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
            return err("X values must be positive".into());
        }
        if self.x_grid.windows(2).any(|w| w[0] >= w[1]) {
            return err("X grid must be increasing".into());
        }
        if !(self.z.is_finite() && self.z >= 1.0) {
            return err("z must be at least 1".into());
        }
        for (name, q) in [("q0", self.q0), ("q1", self.q1)] {
            if let Some(q) = q {
                if !is_prime(q) {
                    return err(format!("{name} = {q} is not prime"));
                }
            }
        }
        if self.q0.is_some() && self.q0 == self.q1 {
            return err("q0 and q1 must be distinct".into());
        }
        if self.q0.is_some() != self.q1.is_some() {
            return err("q0 and q1 must be given together".into());
        }
        if let Some(p) = self.q0_list.iter().find(|p| !is_prime(**p)) {
            return err(format!("q0-list entry {p} is not prime"));
        }
        if !["corr", "zz", "zz-resonant"].contains(&self.kind.as_str()) {
            return err(format!("unknown histogram kind '{}'", self.kind));
        }
        Ok(())
    }

    /// `(q0, q1)` from explicit values or the split rule.
    pub fn moduli(&self) -> Result<(u64, u64)> {
        if let (Some(q0), Some(q1)) = (self.q0, self.q1) {
            return Ok((q0, q1));
        }
        let Some(q) = self.target_q else {
            return Err(CliError::Config("give q0 and q1, or target-q".into()));
        };
        let split = self.split.unwrap_or(match self.experiment {
            ExperimentKind::SweepThm2 => Split::FourFifths,
            _ => Split::TwoThirds,
        });
        Ok(split_modulus(q, split))
    }
}
