//! Exponent sweeps over a geometric grid of `X`.

use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use twistlab_core::hecke::{sym_square_coefficients, GL2CoefficientTable, GL3CoefficientTable};
use twistlab_core::residue::FactoredModulus;
use twistlab_core::sums::{
    ap_corollary_bound, ap_sum, bound_thm1, bound_thm2, rs_twisted_sum, thm2_min_x, twisted_sum,
    SmoothWindow,
};
use twistlab_core::trace::{crt_product, TraceFunction};
use twistlab_core::Complex64;

use crate::cache;
use crate::config::{ExperimentConfig, ExperimentKind};
use crate::error::{CliError, Result};

pub const HEADER: [&str; 20] = [
    "row", "x", "q0", "q1", "z", "k0", "k1", "khat1", "seed", "status", "sum_re", "sum_im",
    "abs_sum", "bound", "ratio", "abs_over_x", "poles", "skips", "slope", "wall_ms",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowStatus {
    Ok,
    ConstraintViolated,
}

impl RowStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            RowStatus::Ok => "ok",
            RowStatus::ConstraintViolated => "constraint-violated",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub x: f64,
    pub status: RowStatus,
    pub sum: Complex64,
    pub bound: f64,
    pub wall_ms: f64,
}

impl SweepRow {
    pub fn abs(&self) -> f64 {
        self.sum.norm()
    }

    pub fn ratio(&self) -> f64 {
        self.abs() / self.bound
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutput {
    pub q0: u64,
    pub q1: u64,
    pub khat1: f64,
    pub rows: Vec<SweepRow>,
    /// least-squares slope of `log|S|` against `log X` over computed rows
    pub slope: Option<f64>,
}

/// Least-squares slope through `(ln x, ln y)`; `None` with fewer than two points.
pub fn fit_slope(points: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

enum Tables {
    Gl2(GL2CoefficientTable),
    Gl3(GL2CoefficientTable, GL3CoefficientTable),
}

fn coefficient_len(grid: &[f64]) -> usize {
    grid.last().map_or(1, |x| (2.0 * x).floor() as usize + 1)
}

pub fn run_sweep(config: &ExperimentConfig, no_build: bool) -> Result<SweepOutput> {
    let (q0, q1) = config.moduli()?;
    let m = FactoredModulus::new(q0, q1).map_err(|e| CliError::Config(e.to_string()))?;
    let k0 = config.k0_family.build(q0).map_err(|e| CliError::Config(e.to_string()))?;
    let k1 = config.k1_family.build(q1).map_err(|e| CliError::Config(e.to_string()))?;
    let khat1 = k1.fourier_supnorm();
    let k = crt_product(&k0, &k1).map_err(CliError::compute)?;
    let v = SmoothWindow::new(config.z);
    let grid = &config.x_grid;

    let mut out = SweepOutput { q0, q1, khat1, rows: Vec::new(), slope: None };
    if grid.is_empty() {
        return Ok(out);
    }
    let n = coefficient_len(grid);
    let dir = config.cache_dir.as_deref();
    let tables = match config.experiment {
        ExperimentKind::SweepThm2 => {
            let g2 = cache::gl2_table(dir, config.weight, n, no_build)?;
            let g3 = sym_square_coefficients(&g2, n).map_err(CliError::compute)?;
            Tables::Gl3(g2, g3)
        }
        ExperimentKind::SweepThm1 | ExperimentKind::SweepAp => {
            Tables::Gl2(cache::gl2_table(dir, config.weight, n, no_build)?)
        }
        other => {
            return Err(CliError::Config(format!("{other:?} is not a sweep experiment")));
        }
    };

    let eval = |x: f64| -> Result<SweepRow> {
        let started = Instant::now();
        let (status, sum, bound) = evaluate(config, &tables, &k, &m, khat1, &v, x)?;
        Ok(SweepRow {
            x,
            status,
            sum,
            bound,
            wall_ms: started.elapsed().as_secs_f64() * 1e3,
        })
    };
    out.rows = grid.par_iter().map(|&x| eval(x)).collect::<Result<Vec<_>>>()?;
    let pts: Vec<(f64, f64)> = out
        .rows
        .iter()
        .filter(|r| r.status == RowStatus::Ok)
        .map(|r| (r.x, r.abs()))
        .collect();
    out.slope = fit_slope(&pts);
    Ok(out)
}

fn evaluate(
    config: &ExperimentConfig,
    tables: &Tables,
    k: &TraceFunction,
    m: &FactoredModulus,
    khat1: f64,
    v: &SmoothWindow,
    x: f64,
) -> Result<(RowStatus, Complex64, f64)> {
    let (q0, q1, z) = (m.q0() as f64, m.q1() as f64, config.z);
    let zero = Complex64::new(0.0, 0.0);
    match (config.experiment, tables) {
        (ExperimentKind::SweepThm2, Tables::Gl3(g2, g3)) => {
            if x < thm2_min_x(z, q0, q1) * (1.0 - 1e-12) {
                return Ok((RowStatus::ConstraintViolated, zero, f64::NAN));
            }
            let s = rs_twisted_sum(g3, g2, k, v, x, None).map_err(CliError::compute)?;
            let bound = bound_thm2(x, z, q0, q1).map_err(CliError::compute)?;
            Ok((RowStatus::Ok, s.value * s.sign_factor, bound))
        }
        (ExperimentKind::SweepAp, Tables::Gl2(g2)) => {
            let s = ap_sum(g2.lambdas(), config.a, m.q(), v, x).map_err(CliError::compute)?;
            let (bound, _) = ap_corollary_bound(x, m.q() as f64).map_err(CliError::compute)?;
            Ok((RowStatus::Ok, s, bound))
        }
        (_, Tables::Gl2(g2)) => {
            let s = twisted_sum(g2.lambdas(), k, v, x).map_err(CliError::compute)?;
            let bound = bound_thm1(x, z, q0, q1, khat1).map_err(CliError::compute)?;
            Ok((RowStatus::Ok, s, bound))
        }
        _ => unreachable!("tables are built to match the experiment"),
    }
}

fn num(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else {
        format!("{x}")
    }
}

pub fn write_csv<W: Write>(config: &ExperimentConfig, out: &SweepOutput, sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(HEADER)?;
    let (k0, k1) = (config.k0_family.to_string(), config.k1_family.to_string());
    for (i, r) in out.rows.iter().enumerate() {
        let ok = r.status == RowStatus::Ok;
        let val = |x: f64| if ok { num(x) } else { String::new() };
        w.write_record([
            i.to_string(),
            num(r.x),
            out.q0.to_string(),
            out.q1.to_string(),
            num(config.z),
            k0.clone(),
            k1.clone(),
            num(out.khat1),
            config.seed.to_string(),
            r.status.as_str().to_string(),
            val(r.sum.re),
            val(r.sum.im),
            val(r.abs()),
            val(r.bound),
            val(r.ratio()),
            val(r.abs() / r.x),
            "0".into(),
            "0".into(),
            String::new(),
            if config.timing { format!("{:.3}", r.wall_ms) } else { String::new() },
        ])?;
    }
    if !out.rows.is_empty() {
        let mut fit = vec![String::new(); HEADER.len()];
        fit[0] = "fit".into();
        fit[2] = out.q0.to_string();
        fit[3] = out.q1.to_string();
        fit[8] = config.seed.to_string();
        fit[9] = if out.slope.is_some() { "ok" } else { "insufficient" }.into();
        fit[18] = out.slope.map(num).unwrap_or_default();
        w.write_record(&fit)?;
    }
    w.flush()?;
    Ok(())
}
