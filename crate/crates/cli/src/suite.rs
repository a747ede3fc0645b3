//! Exact identities and measured bands, each reduced to a pass/fail line.

use std::io::Write;

use num_bigint::BigInt;
use twistlab_core::correlation::{ft_q0_sum, FtQ0Params, PmSign};
use twistlab_core::hecke::{delta_coefficients, eigenform_coefficients, sym_square_coefficients};
use twistlab_core::residue::{gcd, is_prime, unit_root, FactoredModulus};
use twistlab_core::rng::XorShift64;
use twistlab_core::sums::{
    compute_r, poisson_check, thm2_min_x, trivial_delta, voronoi_check, BoundConstants,
    SmoothWindow,
};
use twistlab_core::trace::{hyper_kloosterman, verify_twisted_multiplicativity};
use twistlab_core::Complex64;

use crate::config::{ExperimentConfig, ExperimentKind, Family};
use crate::error::{CliError, Result};
use crate::histogram::{run_histogram, HistogramOutput};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn below(name: &str, measured: f64, tolerance: f64, detail: String) -> Self {
        Self {
            name: name.into(),
            measured,
            tolerance,
            passed: measured < tolerance,
            detail,
        }
    }

    pub fn line(&self) -> String {
        format!(
            "{} {}: measured {:e}, tolerance {:e} ({})",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.measured,
            self.tolerance,
            self.detail
        )
    }
}

fn compute<E: std::fmt::Display>(e: E) -> CliError {
    CliError::compute(e)
}

fn primes_up_to(n: u64) -> Vec<u64> {
    (2..=n).filter(|&p| is_prime(p)).collect()
}

fn random_family(rng: &mut XorShift64, p: u64) -> Family {
    match rng.below(4) {
        0 => Family::Kl(2),
        1 => Family::Kl(3),
        2 => Family::Chi(rng.range_inclusive(1, p - 2)),
        _ => Family::Add(rng.range_inclusive(1, p - 1)),
    }
}

/// Worst deviation of `K^(b) = K0^(b/q1) K1^(b/q0)` over random pairs of
/// families at distinct primes up to `q_max`.
pub fn twisted_multiplicativity(pairs: usize, q_max: u64, seed: u64) -> Result<Check> {
    let primes: Vec<u64> = primes_up_to(q_max).into_iter().filter(|&p| p > 3).collect();
    let mut rng = XorShift64::new(seed);
    let mut worst = 0.0f64;
    for _ in 0..pairs {
        let q0 = primes[rng.below(primes.len() as u64) as usize];
        let q1 = loop {
            let p = primes[rng.below(primes.len() as u64) as usize];
            if p != q0 {
                break p;
            }
        };
        let k0 = random_family(&mut rng, q0).build(q0).map_err(compute)?;
        let k1 = random_family(&mut rng, q1).build(q1).map_err(compute)?;
        let m = FactoredModulus::new(q0, q1).map_err(compute)?;
        worst = worst.max(verify_twisted_multiplicativity(&k0, &k1, &m).map_err(compute)?);
    }
    Ok(Check::below(
        "twisted multiplicativity",
        worst,
        1e-9,
        format!("{pairs} random pairs, q0, q1 <= {q_max}"),
    ))
}

/// `Kl_d(n; p)` as the defining sum over unit tuples with product `n`.
pub fn kloosterman_nested(d: u32, n: u64, p: u64) -> Complex64 {
    fn go(d: u32, n: u64, p: u64, partial: u64, acc: &mut Complex64) {
        if d == 1 {
            *acc += unit_root((partial + n) as i128, p);
            return;
        }
        for x in 1..p {
            // the remaining coordinates multiply to n / x
            let inv = twistlab_core::residue::mod_inverse(x, p).unwrap();
            go(d - 1, n * inv % p, p, (partial + x) % p, acc);
        }
    }
    let mut acc = Complex64::new(0.0, 0.0);
    go(d, n % p, p, 0, &mut acc);
    acc / (p as f64).powf((d as f64 - 1.0) / 2.0)
}

/// Deligne's bound for `d` in `{2,3,4,6}` at all primes up to `p_max`, and the
/// recursion against the defining sum for `d <= 3`, `p <= oracle_max`.
pub fn deligne(p_max: u64, oracle_max: u64) -> Result<(Check, Check)> {
    let mut excess = f64::NEG_INFINITY;
    for p in primes_up_to(p_max) {
        for d in [2u32, 3, 4, 6] {
            let k = hyper_kloosterman(d, p).map_err(compute)?;
            for n in 1..p {
                excess = excess.max(k.at(n).norm() - d as f64);
            }
        }
    }
    let bound = Check {
        name: "Deligne bound".into(),
        measured: excess,
        tolerance: 1e-9,
        passed: excess <= 1e-9,
        detail: format!("max |Kl_d| - d, d in {{2,3,4,6}}, p <= {p_max}"),
    };
    let mut worst = 0.0f64;
    for p in primes_up_to(oracle_max) {
        for d in 1..=3u32 {
            let k = hyper_kloosterman(d, p).map_err(compute)?;
            for n in 1..p {
                worst = worst.max((k.at(n) - kloosterman_nested(d, n, p)).norm());
            }
        }
    }
    let oracle = Check::below(
        "Kloosterman recursion vs defining sum",
        worst,
        1e-9,
        format!("d <= 3, p <= {oracle_max}, n != 0"),
    );
    Ok((bound, oracle))
}

/// `tau(1..=n)` from the truncated product `x prod (1 - x^j)^24`, term by term.
pub fn tau_oracle(n: usize) -> Vec<BigInt> {
    let mut poly = vec![BigInt::from(0); n + 1];
    poly[0] = BigInt::from(1);
    for j in 1..=n {
        for _ in 0..24 {
            for i in (j..=n).rev() {
                let t = poly[i - j].clone();
                poly[i] -= t;
            }
        }
    }
    let mut tau = vec![BigInt::from(0); n + 1];
    tau[1..=n].clone_from_slice(&poly[..n]);
    tau
}

/// Exact Hecke relations (checked on construction) for `tau` up to `n_tau` and
/// the weight-16 form up to `n_16`, plus spot values against the series oracle.
pub fn hecke_exact(n_tau: usize, n_16: usize) -> Result<Check> {
    let tau = delta_coefficients(n_tau).map_err(compute)?;
    tau.verify_hecke().map_err(compute)?;
    let f16 = eigenform_coefficients(16, n_16).map_err(compute)?;
    f16.verify_hecke().map_err(compute)?;
    let oracle = tau_oracle(8);
    let mut mismatches = 0;
    for n in 1..=8 {
        if tau.a(n) != oracle[n] {
            mismatches += 1;
        }
    }
    for (got, want) in [
        (tau.a(2), -24i64),
        (tau.a(6), -6048),
        (f16.a(2), 216),
    ] {
        if got != BigInt::from(want) {
            mismatches += 1;
        }
    }
    if f16.a(6) != f16.a(2) * f16.a(3) {
        mismatches += 1;
    }
    Ok(Check {
        name: "Hecke relations".into(),
        measured: mismatches as f64,
        tolerance: 0.0,
        passed: mismatches == 0,
        detail: format!("exact, tau up to {n_tau}, weight 16 up to {n_16}; tau(2), tau(6) vs series"),
    })
}

/// `sum_{l m = n} A(m, 1) = lambda_f(n)^2` on squarefree `n <= n_max`.
pub fn sym_square_identity(n_max: usize) -> Result<Check> {
    let f = delta_coefficients(n_max).map_err(compute)?;
    let g3 = sym_square_coefficients(&f, n_max).map_err(compute)?;
    let mut worst = 0.0f64;
    for n in 1..=n_max {
        let squarefree = twistlab_core::residue::factorize(n as u64).iter().all(|&(_, e)| e == 1);
        if !squarefree {
            continue;
        }
        let lhs: f64 = (1..=n).filter(|m| n % m == 0).map(|m| g3.get(m, 1).unwrap()).sum();
        worst = worst.max((lhs - f.lambda(n).powi(2)).abs());
    }
    Ok(Check::below(
        "1 * lambda_sym2 = lambda^2",
        worst,
        1e-8,
        format!("squarefree n <= {n_max}"),
    ))
}

/// Trivial delta at `r = 17` on the grid `|n - r| <= 3 p q0`.
pub fn trivial_delta_grid(pairs: &[(u64, u64)]) -> Result<Check> {
    let mut worst = 0.0f64;
    for &(p, q0) in pairs {
        let pq = (p * q0) as i64;
        for d in -3 * pq..=3 * pq {
            let v = trivial_delta(17 + d, 17, p, q0).map_err(compute)?;
            let want = if d % pq == 0 { 1.0 } else { 0.0 };
            worst = worst.max((v - want).norm());
        }
    }
    Ok(Check::below("trivial delta", worst, 1e-10, format!("(p, q0) in {pairs:?}")))
}

pub fn poisson(p: u64, x: f64) -> Result<Check> {
    let k = hyper_kloosterman(2, p).map_err(compute)?;
    let c = poisson_check(&k, &SmoothWindow::new(1.0), x, p).map_err(compute)?;
    Ok(Check::below(
        "Poisson summation",
        c.diff,
        1e-6,
        format!("Kl2 mod {p}, X = {x}, {} dual terms", c.terms),
    ))
}

pub fn voronoi(a: u64, c: u64, x: f64) -> Result<Check> {
    let f = delta_coefficients(20_000).map_err(compute)?;
    let r = voronoi_check(&f, a, c, &SmoothWindow::new(1.0), x).map_err(compute)?;
    Ok(Check::below(
        "Voronoi summation",
        r.diff,
        1e-4,
        format!("Delta, a = {a}, c = {c}, X = {x}, {} dual terms", r.terms),
    ))
}

/// Route A against route B of the `q0`-sum over random tuples.
pub fn ft_q0_routes(tuples: usize, q0_list: &[u64], seed: u64) -> Result<Check> {
    let mut rng = XorShift64::new(seed);
    let mut worst = 0.0f64;
    let mut worst_case = String::new();
    let q1_choices = [5u64, 7, 11];
    for i in 0..tuples {
        let q0 = q0_list[i % q0_list.len()];
        let q1 = q1_choices[rng.below(3) as usize];
        let k0 = hyper_kloosterman(3, q0).map_err(compute)?;
        let k1 = match rng.below(3) {
            0 => Family::Chi(1),
            1 => Family::Kl(2),
            _ => Family::Add(1),
        }
        .build(q1)
        .map_err(compute)?;
        let q = q0 * q1;
        let mut unit = || loop {
            let x = rng.range_inclusive(1, q - 1);
            if gcd(x, q) == 1 {
                break x;
            }
        };
        let (c, c_prime, r, n1) = (unit(), unit(), unit(), unit());
        let mut dual = || loop {
            let m = rng.range_inclusive(1, 50);
            if m % q0 != 0 {
                break m as i64;
            }
        };
        let (m, m_prime) = (dual(), dual());
        let p = FtQ0Params {
            m,
            m_prime,
            c,
            c_prime,
            r,
            n1,
            delta: rng.below(q0),
            sign: if rng.below(2) == 0 { PmSign::Plus } else { PmSign::Minus },
        };
        let routes = ft_q0_sum(&k0, &k1, &p).map_err(compute)?;
        let diff = routes.relative_difference();
        if diff > worst {
            worst = diff;
            worst_case = format!("q0 = {q0}, K1 = {}, {p:?}", k1.label());
        }
    }
    Ok(Check::below(
        "q0-sum factorization",
        worst,
        1e-8,
        format!("{tuples} tuples, q0 in {q0_list:?}; worst at {worst_case}"),
    ))
}

fn histogram(kind: &str, q0_list: &[u64], draws: usize, seed: u64) -> Result<HistogramOutput> {
    let config = ExperimentConfig {
        experiment: ExperimentKind::SqrtcancelHistogram,
        k0_family: Family::Kl(3),
        q0_list: q0_list.to_vec(),
        draws,
        kind: kind.into(),
        seed,
        ..ExperimentConfig::default()
    };
    run_histogram(&config)
}

/// Square-root cancellation bands for `Kl_3`.
pub fn cancellation_bands(q0_list: &[u64], draws: usize, seed: u64) -> Result<Vec<Check>> {
    let corr = histogram("corr", q0_list, draws, seed)?;
    let p99: Vec<f64> = corr.summaries.iter().map(|s| s.p99).collect();
    let hi = p99.iter().cloned().fold(0.0, f64::max);
    let lo = p99.iter().cloned().fold(f64::INFINITY, f64::min);
    let zz = histogram("zz", q0_list, draws, seed)?;
    let zz_max = zz.summaries.iter().map(|s| s.max).fold(0.0, f64::max);
    let res = histogram("zz-resonant", q0_list, draws.min(20), seed)?;
    let means: Vec<f64> = res.summaries.iter().map(|s| s.mean).collect();
    let mean_lo = means.iter().cloned().fold(f64::INFINITY, f64::min);
    let mean_hi = means.iter().cloned().fold(0.0, f64::max);
    Ok(vec![
        Check::below("correlation p99", hi, 6.0, format!("p99 per q0 {p99:?}")),
        Check::below("correlation p99 growth", hi / lo - 1.0, 0.25, format!("q0 in {q0_list:?}")),
        Check::below("shifted ZZ / sqrt(q0)", zz_max, 10.0, format!("{draws} draws per q0")),
        Check {
            name: "resonant ZZ / q0".into(),
            measured: mean_lo,
            tolerance: 0.2,
            passed: mean_lo >= 0.2 && mean_hi <= 3.0,
            detail: format!("means per q0 {means:?}, band [0.2, 3]"),
        },
    ])
}

/// Exact rational exponents and the `R = 1` boundary.
pub fn bound_arithmetic() -> Check {
    use twistlab_core::sums::bounds::Q;
    let exact = [
        (BoundConstants::ap_level(), Q::new(15, 52)),
        (BoundConstants::theta(6) + Q::new(1, 364), Q::new(15, 52)),
        (BoundConstants::theta(2), Q::new(2, 3)),
        (BoundConstants::theta(3), Q::new(1, 2)),
        (BoundConstants::theta(6), Q::new(2, 7)),
        (BoundConstants::tau(6), Q::new(5, 7)),
    ];
    let wrong = exact.iter().filter(|(a, b)| a != b).count();
    let (z, q0, q1) = (1.0, 13.0, 7.0);
    let r = compute_r(thm2_min_x(z, q0, q1), z, q0 * q1, q0).map(|r| (r - 1.0).abs());
    let gap = r.unwrap_or(f64::INFINITY);
    Check {
        name: "bound arithmetic".into(),
        measured: gap,
        tolerance: 1e-12,
        passed: wrong == 0 && gap < 1e-12,
        detail: format!("{wrong} inexact rationals, |R - 1| at the boundary"),
    }
}

/// Everything except the sweep, at the acceptance parameters.
pub fn run_identity_suite(seed: u64) -> Result<Vec<Check>> {
    let (bound, oracle) = deligne(500, 31)?;
    let mut checks = vec![
        twisted_multiplicativity(50, 200, seed)?,
        bound,
        oracle,
        hecke_exact(10_000, 1_000)?,
        sym_square_identity(1_000)?,
        trivial_delta_grid(&[(11, 13), (101, 103)])?,
        poisson(13, 200.0)?,
        voronoi(1, 3, 50.0)?,
        ft_q0_routes(50, &[13, 17, 101], seed)?,
    ];
    checks.extend(cancellation_bands(&[101, 151, 199], 500, seed)?);
    checks.push(bound_arithmetic());
    Ok(checks)
}

pub fn write_csv<W: Write>(checks: &[Check], sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["row", "check", "measured", "tolerance", "status", "detail"])?;
    for (i, c) in checks.iter().enumerate() {
        w.write_record([
            i.to_string(),
            c.name.clone(),
            c.measured.to_string(),
            c.tolerance.to_string(),
            if c.passed { "pass" } else { "fail" }.to_string(),
            c.detail.clone(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
