use num_complex::Complex64;
use proptest::prelude::*;
use twistlab_core::residue::{gcd, is_prime, mod_inverse, unit_root, FactoredModulus};
use twistlab_core::rng::XorShift64;
use twistlab_core::trace::*;

fn primes_up_to(n: u64) -> Vec<u64> {
    (2..=n).filter(|&p| is_prime(p)).collect()
}

fn random_table(rng: &mut XorShift64, q: u64) -> TraceFunction {
    let v = (0..q)
        .map(|_| Complex64::new(rng.next_f64() - 0.5, rng.next_f64() - 0.5))
        .collect();
    TraceFunction::new(q, v, "random", None).unwrap()
}

/// `Kl_d(n; p)` straight from the definition.
fn kl_oracle(d: u32, n: u64, p: u64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    match d {
        1 => acc = unit_root(n as i128, p),
        2 => {
            for x in 1..p {
                let y = n * mod_inverse(x, p).unwrap() % p;
                acc += unit_root((x + y) as i128, p);
            }
        }
        3 => {
            for x in 1..p {
                for y in 1..p {
                    let z = n * mod_inverse(x * y % p, p).unwrap() % p;
                    acc += unit_root((x + y + z) as i128, p);
                }
            }
        }
        _ => unreachable!(),
    }
    acc / (p as f64).powf((d as f64 - 1.0) / 2.0)
}

#[test]
fn additive_char_cases() {
    let k = additive_char(2, 4).unwrap();
    let want = [1.0, -1.0, 1.0, -1.0];
    for (z, w) in k.values().iter().zip(want) {
        assert!((z - w).norm() < 1e-15);
    }
    assert_eq!(k.supnorm_hint(), Some(1.0));
}

#[test]
fn dirichlet_char_properties() {
    let chi0 = dirichlet_char(5, 0).unwrap();
    assert_eq!(chi0.at(0), Complex64::new(0.0, 0.0));
    assert!((1..5).all(|x| (chi0.at(x) - 1.0).norm() < 1e-14));
    for p in [7u64, 13, 101] {
        for j in 1..p - 1 {
            let chi = dirichlet_char(p, j).unwrap();
            let s: Complex64 = chi.values().iter().sum();
            assert!(s.norm() < 1e-9, "p={p} j={j}");
            for x in 1..p {
                for y in [2u64, 3] {
                    let lhs = chi.at(x * y % p);
                    assert!((lhs - chi.at(x) * chi.at(y)).norm() < 1e-12);
                }
            }
        }
    }
}

#[test]
fn kloosterman_examples() {
    let k1 = hyper_kloosterman(1, 11).unwrap();
    for n in 0..11 {
        assert!((k1.at(n) - unit_root(n as i128, 11)).norm() < 1e-14);
    }
    let k2 = hyper_kloosterman(2, 5).unwrap();
    let want = (2.0 + 2.0 * (4.0 * std::f64::consts::PI / 5.0).cos()) / 5f64.sqrt();
    assert!((k2.at(1) - want).norm() < 1e-12);
    assert!((want - 0.170_820_4).abs() < 1e-7);
    assert!(matches!(hyper_kloosterman(0, 5), Err(TraceError::DegreeZero)));
}

#[test]
fn kloosterman_against_definition() {
    for p in primes_up_to(31) {
        for d in 1..=3 {
            let k = hyper_kloosterman(d, p).unwrap();
            for n in 1..p {
                assert!((k.at(n) - kl_oracle(d, n, p)).norm() < 1e-9, "d={d} p={p} n={n}");
            }
        }
    }
}

#[test]
fn deligne_bound() {
    for p in primes_up_to(500) {
        for d in [2u32, 3, 4, 6] {
            let k = hyper_kloosterman(d, p).unwrap();
            for n in 1..p {
                assert!(k.at(n).norm() <= d as f64 + 1e-9, "d={d} p={p} n={n}");
            }
        }
    }
}

#[test]
fn kl2_is_real() {
    for p in primes_up_to(500) {
        let k = hyper_kloosterman(2, p).unwrap();
        assert!(k.values().iter().all(|z| z.im.abs() < 1e-9), "p={p}");
    }
}

#[test]
fn kloosterman_recursion_pointwise() {
    for p in [7u64, 31, 131, 257] {
        for d in 1..4u32 {
            let k = hyper_kloosterman(d, p).unwrap();
            let next = hyper_kloosterman(d + 1, p).unwrap();
            for n in 0..p {
                let s: Complex64 = (1..p)
                    .map(|y| k.at(n * mod_inverse(y, p).unwrap() % p) * unit_root(y as i128, p))
                    .sum();
                let rhs = s / (p as f64).sqrt();
                assert!((next.at(n) - rhs).norm() < 1e-9, "d={d} p={p} n={n}");
            }
        }
    }
}

#[test]
fn convolution_paths_cross_check() {
    for p in [97u64, 101, 131, 211] {
        for d in [2u32, 3, 6] {
            let a = hyper_kloosterman_with(d, p, ConvolutionPath::Direct).unwrap();
            let b = hyper_kloosterman_with(d, p, ConvolutionPath::Fast).unwrap();
            for n in 0..p {
                assert!((a.at(n) - b.at(n)).norm() < 1e-10);
            }
        }
    }
}

#[test]
fn composite_kloosterman_matches_units_recursion() {
    let m = FactoredModulus::new(7, 11).unwrap();
    for d in [2u32, 3] {
        let crt = hyper_kloosterman_composite(d, &m).unwrap();
        let direct = hyper_kloosterman_units(d, 77).unwrap();
        for n in (0..77).filter(|&n| gcd(n, 77) == 1) {
            assert!((crt.at(n) - direct.at(n)).norm() < 1e-9, "d={d} n={n}");
        }
    }
}

#[test]
fn classical_kloosterman_cases() {
    for c in [1u64, 6, 12, 30] {
        let phi = (1..=c).filter(|&x| gcd(x, c) == 1).count() as f64;
        assert!((classical_kloosterman(0, 0, c) - phi).norm() < 1e-10);
    }
    assert!((classical_kloosterman(1, 1, 2) - 1.0).norm() < 1e-12);
    for p in primes_up_to(200).into_iter().filter(|&p| p > 2) {
        for (a, b) in [(1i128, 1i128), (2, 5), (-3, 7)] {
            if (a * b).rem_euclid(p as i128) == 0 {
                continue;
            }
            let s = classical_kloosterman(a, b, p);
            assert!(s.norm() <= 2.0 * (p as f64).sqrt() + 1e-9, "p={p}");
            assert!(s.im.abs() < 1e-9);
        }
    }
    // normalized Kl_2 is S(1, n; p) / sqrt(p)
    let k = hyper_kloosterman(2, 29).unwrap();
    for n in 1..29 {
        let s = classical_kloosterman(1, n as i128, 29) / 29f64.sqrt();
        assert!((k.at(n) - s).norm() < 1e-10);
    }
}

#[test]
fn fourier_transform_cases() {
    for q in [7u64, 15, 101] {
        let h = fourier_transform(&TraceFunction::delta(q, 0));
        assert!(h.values().iter().all(|z| (z - 1.0 / (q as f64).sqrt()).norm() < 1e-12));
        for a in [0u64, 1, q - 2] {
            let h = fourier_transform(&additive_char(a, q).unwrap());
            for n in 0..q {
                let want = if (n + a) % q == 0 { (q as f64).sqrt() } else { 0.0 };
                assert!((h.at(n) - want).norm() < 1e-9, "q={q} a={a} n={n}");
            }
        }
    }
}

#[test]
fn fourier_parseval_and_inversion() {
    let mut rng = XorShift64::new(3);
    for q in [13u64, 97, 2049, 4096] {
        let k = random_table(&mut rng, q);
        let h = fourier_transform(&k);
        let e1: f64 = k.values().iter().map(|z| z.norm_sqr()).sum();
        let e2: f64 = h.values().iter().map(|z| z.norm_sqr()).sum();
        assert!((e1 - e2).abs() < 1e-8 * e1);
        let hh = fourier_transform(&h);
        for x in 0..q {
            assert!((hh.at(x) - k.at((q - x) % q)).norm() < 1e-8, "q={q} x={x}");
        }
    }
}

#[test]
fn fast_and_direct_transforms_agree() {
    let mut rng = XorShift64::new(17);
    for q in [97u64, 101, 15, 77, 997] {
        for _ in 0..20 {
            let k = random_table(&mut rng, q);
            let a = fourier_transform_direct(&k);
            let b = fourier_transform_fast(&k);
            let scale = a.values().iter().map(|z| z.norm()).fold(0.0, f64::max);
            for n in 0..q {
                assert!((a.at(n) - b.at(n)).norm() <= 1e-8 * scale, "q={q}");
            }
        }
    }
}

#[test]
fn crt_product_cases() {
    let k0 = hyper_kloosterman(2, 3).unwrap();
    let k1 = additive_char(1, 5).unwrap();
    let k = crt_product(&k0, &k1).unwrap();
    assert_eq!(k.modulus(), 15);
    assert!((k.at(4) - k0.at(1) * unit_root(4, 5)).norm() < 1e-14);
    let one = TraceFunction::constant(5, Complex64::new(1.0, 0.0));
    let ext = crt_product(&k0, &one).unwrap();
    assert!((0..15).all(|n| (ext.at(n) - k0.at(n % 3)).norm() < 1e-15));
    let both = crt_product(&TraceFunction::constant(3, 1.0.into()), &one).unwrap();
    assert!(both.values().iter().all(|z| (z - 1.0).norm() < 1e-15));
    assert!(matches!(
        crt_product(&k0, &TraceFunction::zero(6)),
        Err(TraceError::NonCoprimeModuli(3, 6))
    ));
}

#[test]
fn twisted_multiplicativity_cases() {
    let m = FactoredModulus::new(3, 5).unwrap();
    let err = verify_twisted_multiplicativity(
        &TraceFunction::delta(3, 0),
        &TraceFunction::delta(5, 0),
        &m,
    )
    .unwrap();
    assert!(err < 1e-12);
    let m = FactoredModulus::new(7, 11).unwrap();
    let err = verify_twisted_multiplicativity(
        &hyper_kloosterman(3, 7).unwrap(),
        &dirichlet_char(11, 3).unwrap(),
        &m,
    )
    .unwrap();
    assert!(err < 1e-9);
    let m = FactoredModulus::new(97, 101).unwrap();
    let err = verify_twisted_multiplicativity(
        &hyper_kloosterman(2, 97).unwrap(),
        &hyper_kloosterman(3, 101).unwrap(),
        &m,
    )
    .unwrap();
    assert!(err < 1e-9);
    assert!(verify_twisted_multiplicativity(&TraceFunction::zero(5), &TraceFunction::zero(3), &m).is_err());
}

#[test]
fn supnorm_hint_is_enforced() {
    let v = vec![Complex64::new(2.0, 0.0); 3];
    assert!(matches!(
        TraceFunction::new(3, v.clone(), "big", Some(1.0)),
        Err(TraceError::SupnormExceeded { .. })
    ));
    assert!(matches!(
        TraceFunction::new(4, v, "short", None),
        Err(TraceError::LengthMismatch { expected: 4, got: 3 })
    ));
    let k = hyper_kloosterman(3, 101).unwrap();
    assert_eq!(k.supnorm_hint(), Some(3.0));
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn twisted_multiplicativity_random(i in 0usize..40, j in 0usize..40, seed in any::<u64>()) {
        let primes: Vec<u64> = primes_up_to(200);
        let (q0, q1) = (primes[i], primes[j + 6]);
        prop_assume!(q0 != q1);
        let mut rng = XorShift64::new(seed);
        let k0 = random_table(&mut rng, q0);
        let k1 = random_table(&mut rng, q1);
        let m = FactoredModulus::new(q0, q1).unwrap();
        prop_assert!(verify_twisted_multiplicativity(&k0, &k1, &m).unwrap() < 1e-9);
    }

    #[test]
    fn transform_is_linear(seed in any::<u64>(), q in 2u64..300) {
        let mut rng = XorShift64::new(seed);
        let a = random_table(&mut rng, q);
        let b = random_table(&mut rng, q);
        let c = Complex64::new(rng.next_f64(), rng.next_f64());
        let sum: Vec<Complex64> = a.values().iter().zip(b.values()).map(|(x, y)| x + c * y).collect();
        let lhs = fourier_transform(&TraceFunction::new(q, sum, "sum", None).unwrap());
        let (ha, hb) = (fourier_transform(&a), fourier_transform(&b));
        for n in 0..q {
            prop_assert!((lhs.at(n) - ha.at(n) - c * hb.at(n)).norm() < 1e-9);
        }
    }
}
