//! Random draws of complete sums and their size distribution per modulus.
//!
//! Kinds:
//! - `corr`: `|c_gamma(n)|` for random non-scalar parameter pairs
//! - `zz`: `|sum_v Z(v) conj Z'(v - delta)| / sqrt(q0)` with `delta != 0`
//! - `zz-resonant`: the same at `delta = 0`, `alpha' = alpha`,
//!   `beta' gamma' = beta gamma`, divided by `q0`

use std::io::Write;

use rayon::prelude::*;
use twistlab_core::correlation::{
    correlation_sum, is_scalar_pair, z_transform, zz_correlation, CorrelationParams, PmSign,
};
use twistlab_core::residue::mod_inverse;
use twistlab_core::rng::XorShift64;
use twistlab_core::trace::{fourier_transform, TraceFunction};

use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};

pub const HEADER: [&str; 12] = [
    "row", "q0", "kind", "params", "abs_value", "normalized", "resonant", "skipped", "p50", "p99",
    "mean", "max",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Draw {
    pub q0: u64,
    pub params: String,
    pub abs_value: f64,
    pub normalized: f64,
    pub resonant: bool,
    pub skipped: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub q0: u64,
    pub p50: f64,
    pub p99: f64,
    pub mean: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HistogramOutput {
    pub kind: String,
    pub draws: Vec<Draw>,
    pub summaries: Vec<Summary>,
}

/// Nearest-rank percentile of a non-empty sample.
pub fn percentile(values: &[f64], pct: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let rank = ((v.len() as f64) * pct / 100.0).ceil() as usize;
    v[rank.clamp(1, v.len()) - 1]
}

enum Spec {
    Corr(CorrelationParams),
    Zz { a: [u64; 3], b: [u64; 3], delta: u64 },
}

fn unit(rng: &mut XorShift64, q: u64) -> u64 {
    rng.range_inclusive(1, q - 1)
}

fn draw_specs(kind: &str, q0: u64, count: usize, rng: &mut XorShift64) -> Vec<Spec> {
    let mut specs = Vec::with_capacity(count);
    while specs.len() < count {
        match kind {
            "corr" => {
                let p = CorrelationParams {
                    r1: unit(rng, q0) as i64,
                    r2: unit(rng, q0) as i64,
                    p1: unit(rng, q0),
                    p2: unit(rng, q0),
                    n_tilde: rng.below(q0) as i64,
                    q1: unit(rng, q0),
                    sign: if rng.below(2) == 0 { PmSign::Plus } else { PmSign::Minus },
                };
                let (g1, g2) = (p.gamma1(q0), p.gamma2(q0));
                if let (Ok(g1), Ok(g2)) = (g1, g2) {
                    if !is_scalar_pair(&g1, &g2) {
                        specs.push(Spec::Corr(p));
                    }
                }
            }
            "zz" => {
                let a = [unit(rng, q0), unit(rng, q0), unit(rng, q0)];
                let b = [unit(rng, q0), unit(rng, q0), unit(rng, q0)];
                specs.push(Spec::Zz { a, b, delta: unit(rng, q0) });
            }
            _ => {
                let a = [unit(rng, q0), unit(rng, q0), unit(rng, q0)];
                let beta = unit(rng, q0);
                let gamma = a[1] * a[2] % q0 * mod_inverse(beta, q0).unwrap() % q0;
                specs.push(Spec::Zz { a, b: [a[0], beta, gamma], delta: 0 });
            }
        }
    }
    specs
}

fn evaluate(kind: &str, q0: u64, k0: &TraceFunction, khat0: &TraceFunction, s: &Spec) -> Result<Draw> {
    let sq = (q0 as f64).sqrt();
    match s {
        Spec::Corr(p) => {
            let c = correlation_sum(khat0, p).map_err(CliError::compute)?;
            Ok(Draw {
                q0,
                params: format!(
                    "r1={};r2={};p1={};p2={};n={};q1={};sign={}",
                    p.r1,
                    p.r2,
                    p.p1,
                    p.p2,
                    p.n_tilde,
                    p.q1,
                    if p.sign == PmSign::Plus { '+' } else { '-' }
                ),
                abs_value: c.value.norm(),
                normalized: c.value.norm(),
                resonant: false,
                skipped: c.skipped,
            })
        }
        Spec::Zz { a, b, delta } => {
            let z = z_transform(k0, a[0], a[1], a[2]).map_err(CliError::compute)?;
            let zp = z_transform(k0, b[0], b[1], b[2]).map_err(CliError::compute)?;
            let v = zz_correlation(&z, &zp, *delta).map_err(CliError::compute)?.norm();
            let resonant = kind == "zz-resonant";
            Ok(Draw {
                q0,
                params: format!(
                    "alpha={};beta={};gamma={};alpha'={};beta'={};gamma'={};delta={delta}",
                    a[0], a[1], a[2], b[0], b[1], b[2]
                ),
                abs_value: v,
                normalized: if resonant { v / q0 as f64 } else { v / sq },
                resonant,
                skipped: z.zero_convention_terms + zp.zero_convention_terms,
            })
        }
    }
}

pub fn run_histogram(config: &ExperimentConfig) -> Result<HistogramOutput> {
    let kind = config.kind.as_str();
    let mut out = HistogramOutput { kind: kind.to_string(), draws: Vec::new(), summaries: Vec::new() };
    // one stream per modulus, so adding a modulus leaves the others unchanged
    for (i, &q0) in config.q0_list.iter().enumerate() {
        let k0 = config.k0_family.build(q0).map_err(|e| CliError::Config(e.to_string()))?;
        let khat0 = fourier_transform(&k0);
        let mut rng = XorShift64::new(config.seed.wrapping_add(i as u64));
        let specs = draw_specs(kind, q0, config.draws, &mut rng);
        let draws = specs
            .par_iter()
            .map(|s| evaluate(kind, q0, &k0, &khat0, s))
            .collect::<Result<Vec<_>>>()?;
        if !draws.is_empty() {
            let vals: Vec<f64> = draws.iter().map(|d| d.normalized).collect();
            out.summaries.push(Summary {
                q0,
                p50: percentile(&vals, 50.0),
                p99: percentile(&vals, 99.0),
                mean: vals.iter().sum::<f64>() / vals.len() as f64,
                max: vals.iter().cloned().fold(0.0, f64::max),
            });
        }
        out.draws.extend(draws);
    }
    Ok(out)
}

pub fn write_csv<W: Write>(out: &HistogramOutput, sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(HEADER)?;
    for (i, d) in out.draws.iter().enumerate() {
        w.write_record([
            i.to_string(),
            d.q0.to_string(),
            out.kind.clone(),
            d.params.clone(),
            d.abs_value.to_string(),
            d.normalized.to_string(),
            d.resonant.to_string(),
            d.skipped.to_string(),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
        ])?;
    }
    for s in &out.summaries {
        w.write_record([
            "summary".to_string(),
            s.q0.to_string(),
            out.kind.clone(),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
            s.p50.to_string(),
            s.p99.to_string(),
            s.mean.to_string(),
            s.max.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
