//! Acceptance gates: one test per criterion, each printing a single
//! PASS/FAIL line with the measured values (run with --nocapture to see
//! them). Three clauses are expected to fail on mathematical grounds and
//! are implemented verbatim anyway; the analysis lives in the project
//! notes: the q = 5 congruence walk for the {1,2} alphabet is genuinely
//! slow at desk scale, which breaks the identity-class bracket (criterion
//! 4), the cross-q rate comparability (criterion 7) and the fixed-depth
//! flattening monotonicity (criterion 8).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::Instant;
use thinsemi::ball::{enumerate_ball, BallOptions};
use thinsemi::congruence::{sl2_order, sl2_order_brute, GroupTable, NewSubspace};
use thinsemi::congtransfer::complement_decay;
use thinsemi::counting::{congruence_count, equidistribution_trend, exponent_fit};
use thinsemi::dynamics::{build_cf_scheme, contraction_probe, periodic_orbits, MarkovScheme};
use thinsemi::expander::{build_mu, convolution_norm_on_eq, GroupMeasure};
use thinsemi::matrix::hyperbolic_norm_residual;
use thinsemi::renewal::{resolvent_cross_check, Renewal, TestFn};
use thinsemi::system::{GeneratorSystem, Word};
use thinsemi::thermo::{hausdorff_dimension_with, normalize, Flavor};
use thinsemi::zaremba::{census_exhaustive_oracle, cf_to_matrix, denominator_census, matrix_to_fraction};

fn cf12() -> MarkovScheme {
    build_cf_scheme(&GeneratorSystem::continued_fraction(&[1, 2]).unwrap()).unwrap()
}

fn delta_cf12(scheme: &MarkovScheme) -> f64 {
    hausdorff_dimension_with(scheme, 1e-9, Flavor::Collocation, &[16, 24, 32])
        .unwrap()
        .0
}

fn gate(id: u32, name: &str, ok: bool, detail: String) {
    let verdict = if ok { "PASS" } else { "FAIL" };
    println!("ACCEPTANCE {:02} {}: {} ({})", id, name, verdict, detail);
    assert!(ok, "criterion {} {}: {}", id, name, detail);
}

#[test]
fn criterion_01_group_order_oracle() {
    let t0 = Instant::now();
    let mut ok = true;
    for q in 1..=25u32 {
        if sl2_order(q as u64) != sl2_order_brute(q) {
            ok = false;
        }
    }
    let dt = t0.elapsed().as_secs_f64();
    gate(
        1,
        "group-order-oracle",
        ok && dt < 30.0,
        format!("formula equals brute force for q <= 25, {:.1}s", dt),
    );
}

#[test]
fn criterion_02_dimension() {
    let t0 = Instant::now();
    let scheme = cf12();
    let (dc, diag) =
        hausdorff_dimension_with(&scheme, 1e-7, Flavor::Collocation, &[12, 16, 24, 32, 48, 64])
            .unwrap();
    let (du, _) = hausdorff_dimension_with(&scheme, 1e-6, Flavor::Ulam, &[2048, 4096]).unwrap();
    let dt = t0.elapsed().as_secs_f64();
    let ok = diag.drift < 1e-6 && (dc - du).abs() < 1e-4 && dt < 60.0;
    gate(
        2,
        "dimension",
        ok,
        format!(
            "delta = {:.9}, rung drift {:.1e}, |colloc - ulam| = {:.1e}, {:.1}s",
            dc,
            diag.drift,
            (dc - du).abs(),
            dt
        ),
    );
}

#[test]
fn criterion_03_counting_exponent() {
    let t0 = Instant::now();
    let sys = GeneratorSystem::continued_fraction(&[1, 2]).unwrap();
    let scheme = cf12();
    let delta = delta_cf12(&scheme);
    let ladder: Vec<f64> = (0..5).map(|i| 10f64.powf(2.0 + 0.5 * i as f64)).collect();
    let rep = congruence_count(&sys, 1, &ladder, None, None).unwrap();
    let fit = exponent_fit(&rep).unwrap();
    let dt = t0.elapsed().as_secs_f64();
    let err = (fit.slope - 2.0 * delta).abs();
    gate(
        3,
        "counting-exponent",
        err < 0.05 && dt < 120.0,
        format!(
            "slope {:.4} vs 2 delta = {:.4}, |diff| = {:.4}, {:.1}s",
            fit.slope,
            2.0 * delta,
            err,
            dt
        ),
    );
}

#[test]
fn criterion_04_equidistribution_trend() {
    let sys = GeneratorSystem::continued_fraction(&[1, 2]).unwrap();
    let ladder: Vec<f64> = (0..5).map(|i| 10f64.powf(2.0 + 0.5 * i as f64)).collect();
    let trend = equidistribution_trend(&sys, 5, &ladder).unwrap();
    let rep = congruence_count(&sys, 5, &ladder, None, None).unwrap();
    let total = *rep.totals.last().unwrap() as f64;
    let expectation = total / rep.group_order as f64;
    let identity = *rep.target_class.last().unwrap() as f64;
    let ratio = identity / expectation;
    let bracket_ok = (0.5..=2.0).contains(&ratio);
    let n = trend.deviation_max.len();
    let top3 = &trend.deviation_max[n - 3..];
    gate(
        4,
        "equidistribution-trend",
        trend.decreasing_top3 && bracket_ok,
        format!(
            "top-3 deviations {:.3} > {:.3} > {:.3} (decreasing: {}); identity class {} vs total/120 = {:.1}, ratio {:.3} in [0.5, 2.0]: {}",
            top3[0], top3[1], top3[2], trend.decreasing_top3, identity, expectation, ratio, bracket_ok
        ),
    );
}

#[test]
fn criterion_05_renewal_identity() {
    let t0 = Instant::now();
    let scheme = cf12();
    let renewal = Renewal::new(&scheme).unwrap();
    let g = TestFn::one();
    let mut worst: f64 = 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    for q in [1u32, 3] {
        let table = (q >= 2).then(|| GroupTable::build(q).unwrap());
        let phi = table.as_ref().map(|t| {
            let mut phi = vec![-1.0 / t.len() as f64; t.len()];
            phi[t.identity_index() as usize] += 1.0;
            phi
        });
        for _ in 0..50 {
            let a = rng.gen_range(-0.5..5.0);
            let iv = rng.gen_range(0..scheme.k());
            let t = rng.gen_range(0.05..0.95);
            let x = scheme.intervals[iv].lo_f + t * scheme.intervals[iv].width_f64();
            worst = worst.max(renewal.renewal_residual(a, x, &g).unwrap());
            if let (Some(tb), Some(ph)) = (&table, &phi) {
                worst = worst.max(
                    renewal
                        .renewal_residual_congruence(tb, a, x, &g, ph)
                        .unwrap(),
                );
            }
        }
    }
    let dt = t0.elapsed().as_secs_f64();
    gate(
        5,
        "renewal-identity",
        worst < 1e-10 && dt < 30.0,
        format!("max residual {:.2e} over 50 samples x q in {{1,3}}, {:.1}s", worst, dt),
    );
}

#[test]
fn criterion_06_resolvent_identity() {
    let t0 = Instant::now();
    let scheme = cf12();
    let delta = delta_cf12(&scheme);
    let x = scheme.intervals[0].midpoint_f64();
    let r1 = resolvent_cross_check(&scheme, delta + 0.2, x, 32).unwrap();
    let r2 = resolvent_cross_check(&scheme, delta + 0.5, x, 32).unwrap();
    let dt = t0.elapsed().as_secs_f64();
    gate(
        6,
        "resolvent-identity",
        r1 < 1e-6 && r2 < 1e-6 && dt < 30.0,
        format!("residuals {:.2e} at delta+0.2, {:.2e} at delta+0.5, {:.1}s", r1, r2, dt),
    );
}

#[test]
fn criterion_07_congruence_transfer_gap() {
    let scheme = cf12();
    let delta = delta_cf12(&scheme);
    let mut rates = Vec::new();
    for q in [2u32, 3, 5, 7] {
        let rep = complement_decay(&scheme, q, delta, 0.0, 40, 8, 16, 707).unwrap();
        rates.push((q, rep.rho_hat));
    }
    let all_below_one = rates.iter().all(|&(_, r)| r < 1.0);
    let max = rates.iter().map(|&(_, r)| r).fold(0.0f64, f64::max);
    let min = rates.iter().map(|&(_, r)| r).fold(f64::INFINITY, f64::min);
    let spread_ok = max / min < 1.5;
    gate(
        7,
        "congruence-transfer-gap",
        all_below_one && spread_ok,
        format!(
            "rho_hat {:?} (all < 1: {}); max/min = {:.2} (< 1.5: {}; the per-q rates are genuinely spread, see notes)",
            rates
                .iter()
                .map(|&(q, r)| format!("q={}: {:.3}", q, r))
                .collect::<Vec<_>>()
                .join(", "),
            all_below_one,
            max / min,
            spread_ok
        ),
    );
}

#[test]
fn criterion_08_flattening_trend() {
    let scheme = cf12();
    let delta = delta_cf12(&scheme);
    let fam = normalize(&scheme, delta, 24).unwrap();
    let x = scheme.intervals[0].midpoint_f64();
    // exactness clauses
    let sub5 = NewSubspace::build(5).unwrap();
    let (norm_e, _) = convolution_norm_on_eq(&GroupMeasure::delta_identity(5), &sub5, 150, 1).unwrap();
    let table5 = GroupTable::build(5).unwrap();
    let (norm_u, _) = convolution_norm_on_eq(&GroupMeasure::uniform(&table5), &sub5, 150, 1).unwrap();
    let exact_ok = (norm_e - 1.0).abs() < 1e-12 && norm_u < 1e-12;
    // monotonicity clause at fixed R = 6
    let mut ratios = Vec::new();
    for q in [3u32, 5, 7, 11, 13] {
        let rep = build_mu(&scheme, &fam, q, 0.0, x, &[2], 6).unwrap();
        let sub = NewSubspace::build(q).unwrap();
        let (_, ratio) = convolution_norm_on_eq(&rep.mu, &sub, 200, 8).unwrap();
        ratios.push((q, ratio));
    }
    let monotone = ratios.windows(2).all(|w| w[1].1 < w[0].1);
    gate(
        8,
        "flattening-trend",
        exact_ok && monotone,
        format!(
            "delta_e norm {:.2e}-close to 1, uniform norm {:.1e} (exact clauses: {}); ratios {} strictly decreasing: {} (q = 5 walk is slow at fixed R, see notes)",
            (norm_e - 1.0).abs(),
            norm_u,
            exact_ok,
            ratios
                .iter()
                .map(|&(q, r)| format!("q={}: {:.4}", q, r))
                .collect::<Vec<_>>()
                .join(", "),
            monotone
        ),
    );
}

#[test]
fn criterion_09_zaremba_bridge() {
    let mut rng = ChaCha8Rng::seed_from_u64(909);
    let mut roundtrip_ok = true;
    for _ in 0..1000 {
        let len = rng.gen_range(1..=12);
        let digits: Vec<i64> = (0..len).map(|_| rng.gen_range(1..=5)).collect();
        let m = cf_to_matrix(&digits).unwrap();
        let (b, d) = matrix_to_fraction(&m);
        let v = thinsemi::zaremba::cf_eval_exact(&digits).unwrap();
        if v != num_rational::BigRational::new(b, d) {
            roundtrip_ok = false;
        }
    }
    let fib = denominator_census(&[1], 100).unwrap();
    let expect: std::collections::BTreeSet<u64> = [1, 2, 3, 5, 8, 13, 21, 34, 55, 89].into();
    let got: std::collections::BTreeSet<u64> = (1..=100).filter(|&d| fib.contains(d)).collect();
    let fib_ok = got == expect;
    let census = denominator_census(&[1, 2], 1000).unwrap();
    let oracle = census_exhaustive_oracle(&[1, 2], 1000).unwrap();
    let prune_ok = census.same_set(&oracle);
    gate(
        9,
        "zaremba-bridge",
        roundtrip_ok && fib_ok && prune_ok,
        format!(
            "1000 round-trips exact: {}; Fibonacci census exact: {}; pruned = exhaustive at N=1000 ({} denominators): {}",
            roundtrip_ok, fib_ok, census.count, prune_ok
        ),
    );
}

#[test]
fn criterion_10_geometry_identities() {
    let sys = GeneratorSystem::continued_fraction(&[1, 2]).unwrap();
    let scheme = cf12();
    // norm identity on 100 random words
    let mut rng = ChaCha8Rng::seed_from_u64(1010);
    let mut worst_norm: f64 = 0.0;
    for _ in 0..100 {
        let len = rng.gen_range(1..=10);
        let w = Word((0..len).map(|_| rng.gen_range(0..4) as u16).collect());
        worst_norm = worst_norm.max(hyperbolic_norm_residual(&sys.word_matrix(&w)));
    }
    // cohomology on all periodic orbits of period <= 6
    let mut worst_coh: f64 = 0.0;
    for orb in periodic_orbits(&scheme, 6) {
        let mut st = 0.0;
        let mut sth = 0.0;
        for (j, &i) in orb.word.iter().enumerate() {
            st += scheme.tau_on_branch(i, orb.points[j]);
            sth += scheme.tau_hat_on_branch(i, orb.points[j]);
        }
        worst_coh = worst_coh.max((st - sth).abs());
    }
    // contraction probe fit
    let letters: Vec<u16> = (0..30).map(|i| ((i * 5 + 1) % 4) as u16).collect();
    let probe = contraction_probe(&sys, &Word(letters), 0.52, 30).unwrap();
    let ok = worst_norm < 1e-9 && worst_coh < 1e-9 && probe.kappa < 1.0 && probe.r_squared > 0.98;
    gate(
        10,
        "geometry-identities",
        ok,
        format!(
            "norm-identity residual {:.1e}; cohomology residual {:.1e}; kappa = {:.4} with R^2 = {:.4}",
            worst_norm, worst_coh, probe.kappa, probe.r_squared
        ),
    );
}

// Enumeration sanity that the counting criteria rely on: the exact CF ball
// for alphabet {1} at R = 7 (two matrix powers of the Fibonacci block)
#[test]
fn enumeration_anchor() {
    let sys = GeneratorSystem::continued_fraction(&[1]).unwrap();
    let els = enumerate_ball(&sys, 7.0, &BallOptions::default()).unwrap();
    assert_eq!(els.len(), 2);
}
