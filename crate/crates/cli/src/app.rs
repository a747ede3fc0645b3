//! Argument parsing and subcommand dispatch.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use twistlab_core::correlation::{
    correlation_sum, ft_q0_sum, z_transform, zz_correlation, CorrelationParams, FtQ0Params, PmSign,
};
use twistlab_core::hecke::sym_square_coefficients;
use twistlab_core::residue::FactoredModulus;
use twistlab_core::sums::{
    ap_sum, rs_twisted_sum, thm2_min_x, twisted_sum, SmoothWindow, SumError,
};
use twistlab_core::trace::{crt_product, fourier_transform, hyper_kloosterman, TraceFunction};
use twistlab_core::Complex64;

use crate::cache::{self, Payload};
use crate::config::{ExperimentConfig, ExperimentKind, Family};
use crate::error::{CliError, Result};
use crate::{histogram, suite, sweep};

#[derive(Debug, Parser)]
#[command(name = "twistlab", version, about = "Twisted sums of automorphic coefficients against trace functions")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Default, Args)]
pub struct GlobalOpts {
    /// experiment configuration file (key = value)
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// worker threads; 0 picks the number of cores
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// CSV destination; standard output when absent
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, global = true)]
    pub cache_dir: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tabulate a trace function or a coefficient sequence
    Tabulate {
        #[command(subcommand)]
        table: TableKind,
    },
    /// Normalized Fourier transform of a trace function mod a prime
    Ft {
        #[arg(long)]
        family: Family,
        #[arg(long)]
        p: u64,
    },
    /// sum lambda_f(n) K(n) V(n/X) with K = K0 K1 mod q0 q1
    Sum(SumArgs),
    /// the GL3 x GL2 double sum against K = K0 K1
    RsSum(SumArgs),
    /// sum over n = a mod q of lambda_f(n) V(n/X)
    ApSum {
        #[arg(long)]
        a: u64,
        #[arg(long)]
        q: u64,
        #[arg(long)]
        x: f64,
        #[arg(long, default_value_t = 1.0)]
        z: f64,
        #[arg(long, default_value_t = 12)]
        weight: u32,
    },
    /// Trivial delta detection on the grid |n - r| <= 3 p q0
    DeltaCheck {
        #[arg(long)]
        p: u64,
        #[arg(long)]
        q0: u64,
    },
    /// Both sides of Poisson summation for Kl2 mod p
    PoissonCheck {
        #[arg(long)]
        p: u64,
        #[arg(long)]
        x: f64,
    },
    /// Both sides of Voronoi summation for Delta twisted by e(an/c)
    VoronoiCheck {
        #[arg(long)]
        a: u64,
        #[arg(long)]
        c: u64,
        #[arg(long)]
        x: f64,
    },
    /// The correlation sum of Kl3^ mod q0
    Corr {
        #[arg(long)]
        q0: u64,
        #[arg(long)]
        r1: i64,
        #[arg(long)]
        r2: i64,
        #[arg(long)]
        p1: u64,
        #[arg(long)]
        p2: u64,
        #[arg(long)]
        n: i64,
        #[arg(long)]
        q1: u64,
        #[arg(long, value_enum, default_value_t = SignArg::Plus)]
        sign: SignArg,
    },
    /// sum_v Z(v) conj Z'(v - delta) for K0 = Kl3 mod q0
    Zz {
        #[arg(long)]
        q0: u64,
        /// alpha,beta,gamma
        #[arg(long, value_delimiter = ',', num_args = 3)]
        z: Vec<u64>,
        /// alpha',beta',gamma'
        #[arg(long, value_delimiter = ',', num_args = 3)]
        zp: Vec<u64>,
        #[arg(long)]
        delta: u64,
    },
    /// Both evaluations of the q0-sum with K0 = Kl3 mod q0
    Ftq0Check {
        #[arg(long)]
        q0: u64,
        #[arg(long)]
        q1: u64,
        #[arg(long, default_value = "chi:1")]
        k1: Family,
        #[arg(long)]
        m: i64,
        #[arg(long)]
        m_prime: i64,
        #[arg(long)]
        c: u64,
        #[arg(long)]
        c_prime: u64,
        #[arg(long)]
        r: u64,
        #[arg(long)]
        n1: u64,
        #[arg(long, default_value_t = 0)]
        delta: u64,
        #[arg(long, value_enum, default_value_t = SignArg::Plus)]
        sign: SignArg,
    },
    /// Run the sweep or identity-suite experiment named in --config
    Sweep {
        /// fail instead of building coefficient tables missing from the cache
        #[arg(long)]
        no_build: bool,
    },
    /// Run the sqrtcancel-histogram experiment named in --config
    Histogram,
    /// Inspect cache files
    Cache {
        #[command(subcommand)]
        action: CacheAction,
    },
}

#[derive(Debug, Subcommand)]
pub enum TableKind {
    /// Kl_d(n; p) for every n mod p
    Kloosterman {
        #[arg(long)]
        d: u32,
        #[arg(long)]
        p: u64,
        /// write a binary cache file instead of CSV
        #[arg(long)]
        store: Option<PathBuf>,
    },
    /// Ramanujan tau(n), n <= N
    Tau {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        store: Option<PathBuf>,
    },
    /// a(n), n <= N, of the level-1 eigenform of the given weight
    Eigenform {
        #[arg(long)]
        weight: u32,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        store: Option<PathBuf>,
    },
    /// A(m, r) for m r^2 <= N of the symmetric square
    Sym2 {
        #[arg(long, default_value_t = 12)]
        weight: u32,
        #[arg(long)]
        n: usize,
    },
}

#[derive(Debug, Subcommand)]
pub enum CacheAction {
    /// Print payload kind and record count
    Info { path: PathBuf },
    /// Check the checksum and, for coefficient tables, the Hecke relations
    Verify {
        path: PathBuf,
        /// weight of an integer coefficient table
        #[arg(long)]
        weight: Option<u32>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SignArg {
    Plus,
    Minus,
}

impl From<SignArg> for PmSign {
    fn from(s: SignArg) -> Self {
        match s {
            SignArg::Plus => PmSign::Plus,
            SignArg::Minus => PmSign::Minus,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SumArgs {
    #[arg(long)]
    pub q0: u64,
    #[arg(long)]
    pub q1: u64,
    #[arg(long, default_value = "kl3")]
    pub k0: Family,
    #[arg(long, default_value = "chi:1")]
    pub k1: Family,
    #[arg(long)]
    pub x: f64,
    #[arg(long, default_value_t = 1.0)]
    pub z: f64,
    #[arg(long, default_value_t = 12)]
    pub weight: u32,
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn config_error(e: impl std::fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

fn sum_error(e: SumError) -> CliError {
    match e {
        SumError::NonPrimitiveClass { .. } => CliError::Constraint(e.to_string()),
        other => CliError::compute(other),
    }
}

fn write_rows<W: Write>(sink: W, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

fn complex_row(z: Complex64) -> [String; 3] {
    [z.re.to_string(), z.im.to_string(), z.norm().to_string()]
}

/// Merges the configuration file with flags; flags win.
pub fn resolve_config(global: &GlobalOpts) -> Result<ExperimentConfig> {
    let mut c = match &global.config {
        Some(p) => ExperimentConfig::from_file(p)?,
        None => return Err(CliError::Config("--config is required".into())),
    };
    if let Some(s) = global.seed {
        c.seed = s;
    }
    if let Some(t) = global.threads {
        c.threads = t;
    }
    if let Some(o) = &global.output {
        c.output = Some(o.clone());
    }
    if let Some(d) = &global.cache_dir {
        c.cache_dir = Some(d.clone());
    }
    Ok(c)
}

fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(CliError::compute)?;
    pool.install(f)
}

pub fn run(cli: Cli) -> Result<()> {
    let g = cli.global.clone();
    match cli.command {
        Command::Sweep { no_build } => {
            let c = resolve_config(&g)?;
            with_threads(c.threads, || run_experiment(&c, no_build))
        }
        Command::Histogram => {
            let c = resolve_config(&g)?;
            if c.experiment != ExperimentKind::SqrtcancelHistogram {
                return Err(CliError::Config(format!(
                    "histogram needs experiment = sqrtcancel-histogram, found {:?}",
                    c.experiment
                )));
            }
            with_threads(c.threads, || run_experiment(&c, false))
        }
        other => with_threads(g.threads.unwrap_or(0), || run_command(other, &g)),
    }
}

/// Runs the experiment a configuration names and writes its CSV.
pub fn run_experiment(c: &ExperimentConfig, no_build: bool) -> Result<()> {
    let sink = open_output(c.output.as_deref())?;
    match c.experiment {
        ExperimentKind::SqrtcancelHistogram => {
            histogram::write_csv(&histogram::run_histogram(c)?, sink)
        }
        ExperimentKind::IdentitySuite => {
            let checks = suite::run_identity_suite(c.seed)?;
            suite::write_csv(&checks, sink)?;
            match checks.iter().find(|ch| !ch.passed) {
                Some(ch) => Err(CliError::Constraint(ch.line())),
                None => Ok(()),
            }
        }
        _ => {
            let out = sweep::run_sweep(c, no_build)?;
            sweep::write_csv(c, &out, sink)?;
            let violated = out.rows.iter().all(|r| r.status == sweep::RowStatus::ConstraintViolated);
            if !out.rows.is_empty() && violated {
                return Err(CliError::Constraint(
                    "no X in the grid satisfies X >= Z^4 q^2 q0^(1/2)".into(),
                ));
            }
            Ok(())
        }
    }
}

fn trace_pair(a: &SumArgs) -> Result<(FactoredModulus, TraceFunction)> {
    let m = FactoredModulus::new(a.q0, a.q1).map_err(config_error)?;
    let k0 = a.k0.build(a.q0).map_err(config_error)?;
    let k1 = a.k1.build(a.q1).map_err(config_error)?;
    Ok((m, crt_product(&k0, &k1).map_err(config_error)?))
}

fn run_command(command: Command, g: &GlobalOpts) -> Result<()> {
    let sink = || open_output(g.output.as_deref());
    let dir = g.cache_dir.as_deref();
    match command {
        Command::Tabulate { table } => tabulate(table, g),
        Command::Ft { family, p } => {
            let k = family.build(p).map_err(config_error)?;
            let h = fourier_transform(&k);
            let rows: Vec<Vec<String>> = h
                .values()
                .iter()
                .enumerate()
                .map(|(n, z)| vec![n.to_string(), z.re.to_string(), z.im.to_string()])
                .collect();
            write_rows(sink()?, &["n", "re", "im"], &rows)
        }
        Command::Sum(a) => {
            let (_, k) = trace_pair(&a)?;
            let f = cache::gl2_table(dir, a.weight, (2.0 * a.x) as usize + 1, false)?;
            let s = twisted_sum(f.lambdas(), &k, &SmoothWindow::new(a.z), a.x).map_err(sum_error)?;
            write_rows(sink()?, &["x", "sum_re", "sum_im", "abs_sum"], &[
                [vec![a.x.to_string()], complex_row(s).to_vec()].concat(),
            ])
        }
        Command::RsSum(a) => {
            let (m, k) = trace_pair(&a)?;
            let min = thm2_min_x(a.z, m.q0() as f64, m.q1() as f64);
            if a.x < min {
                return Err(CliError::Constraint(format!("X = {} is below Z^4 q^2 q0^(1/2) = {min}", a.x)));
            }
            let n = (2.0 * a.x) as usize + 1;
            let f = cache::gl2_table(dir, a.weight, n, false)?;
            let g3 = sym_square_coefficients(&f, n).map_err(CliError::compute)?;
            let s = rs_twisted_sum(&g3, &f, &k, &SmoothWindow::new(a.z), a.x, None).map_err(sum_error)?;
            write_rows(sink()?, &["x", "sum_re", "sum_im", "abs_sum", "sign_factor"], &[[
                vec![a.x.to_string()],
                complex_row(s.value).to_vec(),
                vec![s.sign_factor.to_string()],
            ]
            .concat()])
        }
        Command::ApSum { a, q, x, z, weight } => {
            let f = cache::gl2_table(dir, weight, (2.0 * x) as usize + 1, false)?;
            let s = ap_sum(f.lambdas(), a, q, &SmoothWindow::new(z), x).map_err(sum_error)?;
            write_rows(sink()?, &["x", "sum_re", "sum_im", "abs_sum"], &[
                [vec![x.to_string()], complex_row(s).to_vec()].concat(),
            ])
        }
        Command::DeltaCheck { p, q0 } => {
            let check = suite::trivial_delta_grid(&[(p, q0)]).map_err(|e| match e {
                CliError::Compute(m) => CliError::Constraint(m),
                e => e,
            })?;
            check_rows(&[check], sink()?)
        }
        Command::PoissonCheck { p, x } => check_rows(&[suite::poisson(p, x)?], sink()?),
        Command::VoronoiCheck { a, c, x } => check_rows(&[suite::voronoi(a, c, x)?], sink()?),
        Command::Corr { q0, r1, r2, p1, p2, n, q1, sign } => {
            let khat = fourier_transform(&hyper_kloosterman(3, q0).map_err(config_error)?);
            let params = CorrelationParams { r1, r2, p1, p2, n_tilde: n, q1, sign: sign.into() };
            let c = correlation_sum(&khat, &params).map_err(config_error)?;
            write_rows(sink()?, &["re", "im", "abs", "skipped"], &[
                [complex_row(c.value).to_vec(), vec![c.skipped.to_string()]].concat(),
            ])
        }
        Command::Zz { q0, z, zp, delta } => {
            let k0 = hyper_kloosterman(3, q0).map_err(config_error)?;
            let a = z_transform(&k0, z[0], z[1], z[2]).map_err(config_error)?;
            let b = z_transform(&k0, zp[0], zp[1], zp[2]).map_err(config_error)?;
            let s = zz_correlation(&a, &b, delta).map_err(config_error)?;
            write_rows(sink()?, &["re", "im", "abs", "abs_over_sqrt_q0"], &[[
                complex_row(s).to_vec(),
                vec![(s.norm() / (q0 as f64).sqrt()).to_string()],
            ]
            .concat()])
        }
        Command::Ftq0Check { q0, q1, k1, m, m_prime, c, c_prime, r, n1, delta, sign } => {
            let k0 = hyper_kloosterman(3, q0).map_err(config_error)?;
            let k1 = k1.build(q1).map_err(config_error)?;
            let p = FtQ0Params { m, m_prime, c, c_prime, r, n1, delta, sign: sign.into() };
            let routes = ft_q0_sum(&k0, &k1, &p).map_err(config_error)?;
            write_rows(sink()?, &["a_re", "a_im", "b_re", "b_im", "relative_difference"], &[vec![
                routes.route_a.re.to_string(),
                routes.route_a.im.to_string(),
                routes.route_b.re.to_string(),
                routes.route_b.im.to_string(),
                routes.relative_difference().to_string(),
            ]])
        }
        Command::Cache { action } => cache_command(action, sink()?),
        Command::Sweep { .. } | Command::Histogram => unreachable!("dispatched in run"),
    }
}

fn check_rows<W: Write>(checks: &[suite::Check], sink: W) -> Result<()> {
    suite::write_csv(checks, sink)?;
    match checks.iter().find(|c| !c.passed) {
        Some(c) => Err(CliError::Constraint(c.line())),
        None => Ok(()),
    }
}

fn tabulate(table: TableKind, g: &GlobalOpts) -> Result<()> {
    let sink = || open_output(g.output.as_deref());
    let int_table = |weight: u32, n: usize, store: Option<PathBuf>| -> Result<()> {
        let f = cache::gl2_table(g.cache_dir.as_deref(), weight, n, false)?;
        if let Some(path) = store {
            return Ok(cache::store(&path, &cache::gl2_payload(&f))?);
        }
        let rows: Vec<Vec<String>> = (1..=n)
            .map(|i| vec![i.to_string(), f.a(i).to_string(), f.lambda(i).to_string()])
            .collect();
        write_rows(sink()?, &["n", "a", "lambda"], &rows)
    };
    match table {
        TableKind::Kloosterman { d, p, store } => {
            let k = hyper_kloosterman(d, p).map_err(config_error)?;
            if let Some(path) = store {
                return Ok(cache::store(&path, &Payload::Complex(k.values().to_vec()))?);
            }
            let rows: Vec<Vec<String>> = k
                .values()
                .iter()
                .enumerate()
                .map(|(n, z)| vec![n.to_string(), z.re.to_string(), z.im.to_string()])
                .collect();
            write_rows(sink()?, &["n", "re", "im"], &rows)
        }
        TableKind::Tau { n, store } => int_table(12, n, store),
        TableKind::Eigenform { weight, n, store } => int_table(weight, n, store),
        TableKind::Sym2 { weight, n } => {
            let f = cache::gl2_table(g.cache_dir.as_deref(), weight, n, false)?;
            let g3 = sym_square_coefficients(&f, n).map_err(CliError::compute)?;
            let mut rows = Vec::new();
            for r in 1..=g3.r_max() {
                for m in 1..=n / (r * r) {
                    let v = g3.get(m, r).unwrap_or(f64::NAN);
                    rows.push(vec![m.to_string(), r.to_string(), v.to_string()]);
                }
            }
            write_rows(sink()?, &["m", "r", "value"], &rows)
        }
    }
}

fn cache_command<W: Write>(action: CacheAction, sink: W) -> Result<()> {
    match action {
        CacheAction::Info { path } => {
            let p = cache::load(&path)?;
            write_rows(sink, &["path", "kind", "records"], &[vec![
                path.display().to_string(),
                p.kind_name().into(),
                p.len().to_string(),
            ]])
        }
        CacheAction::Verify { path, weight } => {
            let p = cache::load(&path)?;
            let n = p.len();
            let kind = p.kind_name();
            if let (Some(w), Payload::Integer(_)) = (weight, &p) {
                cache::gl2_from_payload(w, p)?;
            }
            write_rows(sink, &["path", "kind", "records", "status"], &[vec![
                path.display().to_string(),
                kind.into(),
                n.to_string(),
                "ok".into(),
            ]])
        }
    }
}
