//! Registry-driven invariant suite behind the `validate` subcommand: one
//! named check per documented invariant, each returning Ok or a failure
//! message with the measured numbers.

use crate::ball::{enumerate_ball, for_each_in_ball_with_slack, BallOptions};
use crate::congruence::{
    reduce_mod, sl2_order, GroupTable, NewSubspace, ResidueMatrix,
};
use crate::counting::{congruence_count, exponent_fit};
use crate::dynamics::{build_cf_scheme, build_schottky_scheme, certify_expansion, MarkovScheme};
use crate::expander::{build_mu, convolution_norm_on_eq};
use crate::renewal::{resolvent_cross_check, Renewal, TestFn};
use crate::system::{GeneratorSystem, Word};
use crate::thermo::{assemble, hausdorff_dimension, normalize, rpf, Flavor, NormalizedFamily};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::OnceLock;

pub struct Invariant {
    pub name: &'static str,
    pub module: &'static str,
    pub run: fn() -> std::result::Result<String, String>,
}

struct Ctx {
    scheme: MarkovScheme,
    delta: f64,
    fam: NormalizedFamily,
}

fn ctx() -> &'static Ctx {
    static CTX: OnceLock<Ctx> = OnceLock::new();
    CTX.get_or_init(|| {
        let sys = GeneratorSystem::continued_fraction(&[1, 2]).expect("cf {1,2}");
        let scheme = build_cf_scheme(&sys).expect("scheme");
        let (delta, _) = hausdorff_dimension(&scheme, 1e-8).expect("dimension");
        let fam = normalize(&scheme, delta, 24).expect("normalized family");
        Ctx { scheme, delta, fam }
    })
}

fn fail(msg: String) -> std::result::Result<String, String> {
    Err(msg)
}

type Check = std::result::Result<String, String>;

fn semigroup_word_matrix_recompute() -> Check {
    let sys = GeneratorSystem::continued_fraction(&[1, 2]).unwrap();
    let els = enumerate_ball(&sys, 200.0, &BallOptions::default()).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..100 {
        let el = &els[rng.gen_range(0..els.len())];
        if sys.word_matrix(&el.word) != el.matrix {
            return fail(format!("word {:?} does not recompute", el.word));
        }
    }
    Ok(format!("{} elements, 100 resampled products match", els.len()))
}

fn semigroup_no_duplicates_monotone() -> Check {
    let sys = GeneratorSystem::continued_fraction(&[1, 2]).unwrap();
    let mut prev = 0usize;
    for r in [10.0, 50.0, 250.0] {
        let els = enumerate_ball(&sys, r, &BallOptions::default()).map_err(|e| e.to_string())?;
        let set: std::collections::HashSet<_> = els.iter().map(|e| e.word.clone()).collect();
        if set.len() != els.len() {
            return fail(format!("duplicates at R = {}", r));
        }
        if els.len() < prev {
            return fail(format!("count dropped at R = {}", r));
        }
        prev = els.len();
    }
    Ok("no duplicates, count monotone in R".into())
}

fn semigroup_cf_prune_exact() -> Check {
    let sys = GeneratorSystem::continued_fraction(&[1, 2]).unwrap();
    let tight = enumerate_ball(&sys, 200.0, &BallOptions::default()).map_err(|e| e.to_string())?;
    let mut loose = 0usize;
    for_each_in_ball_with_slack(&sys, 200.0, &BallOptions::default(), 6.0, |_, _, _| loose += 1)
        .map_err(|e| e.to_string())?;
    if tight.len() != loose {
        return fail(format!("pruned {} vs oracle {}", tight.len(), loose));
    }
    // Schottky case against its own safety slack
    let ssys = GeneratorSystem::sample_schottky(1).unwrap();
    let t2 = enumerate_ball(&ssys, 200.0, &BallOptions::default()).map_err(|e| e.to_string())?;
    let mut l2 = 0usize;
    for_each_in_ball_with_slack(&ssys, 200.0, &BallOptions::default(), 4.0, |_, _, _| l2 += 1)
        .map_err(|e| e.to_string())?;
    if t2.len() != l2 {
        return fail(format!("schottky pruned {} vs oracle {}", t2.len(), l2));
    }
    Ok(format!("cf {} and schottky {} elements, prune exact", tight.len(), t2.len()))
}

fn semigroup_det_plus_one() -> Check {
    use num_bigint::BigInt;
    let sys = GeneratorSystem::sample_schottky(2).unwrap();
    let els = enumerate_ball(&sys, 300.0, &BallOptions::default()).map_err(|e| e.to_string())?;
    for el in &els {
        if el.matrix.det() != BigInt::from(1) {
            return fail(format!("det != 1 for {:?}", el.word));
        }
    }
    Ok(format!("{} schottky-group elements all det +1", els.len()))
}

fn semigroup_growth_trend() -> Check {
    let sys = GeneratorSystem::continued_fraction(&[1, 2]).unwrap();
    let ladder = [100.0, 316.0, 1000.0, 3162.0];
    let counts: Vec<f64> = ladder
        .iter()
        .map(|&r| {
            enumerate_ball(&sys, r, &BallOptions::default())
                .map(|v| v.len() as f64)
                .map_err(|e| e.to_string())
        })
        .collect::<std::result::Result<_, _>>()?;
    let slope = |i: usize| (counts[i + 1].ln() - counts[i].ln()) / (ladder[i + 1].ln() - ladder[i].ln());
    let early = (slope(1) - slope(0)).abs();
    let late = (slope(2) - slope(1)).abs();
    if late > early + 0.02 {
        return fail(format!("local exponents diverging: {} then {}", early, late));
    }
    Ok(format!(
        "local exponents {:.4} {:.4} {:.4} stabilizing",
        slope(0),
        slope(1),
        slope(2)
    ))
}

fn congruence_order_crt() -> Check {
    for q1 in 2u64..=30 {
        for q2 in (q1 + 1)..=30 {
            let mut a = q1;
            let mut b = q2;
            while b != 0 {
                let t = a % b;
                a = b;
                b = t;
            }
            if a == 1 && sl2_order(q1 * q2) != sl2_order(q1) * sl2_order(q2) {
                return fail(format!("CRT fails at ({}, {})", q1, q2));
            }
        }
    }
    Ok("multiplicative on all coprime pairs <= 30".into())
}

fn congruence_reduce_homomorphism() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..200 {
        let m1 = crate::matrix::IntMatrix2::new(
            rng.gen_range(-99..100),
            rng.gen_range(-99..100),
            rng.gen_range(-99..100),
            rng.gen_range(-99..100),
        );
        let m2 = crate::matrix::IntMatrix2::new(
            rng.gen_range(-99..100),
            rng.gen_range(-99..100),
            rng.gen_range(-99..100),
            rng.gen_range(-99..100),
        );
        let q = rng.gen_range(2..40);
        if reduce_mod(&m1.mul(&m2), q) != reduce_mod(&m1, q).mul(&reduce_mod(&m2, q)) {
            return fail(format!("homomorphism fails mod {}", q));
        }
    }
    Ok("200 random products reduce compatibly".into())
}

fn congruence_cocycle_law() -> Check {
    let c = ctx();
    let s = &c.scheme;
    let q = 7u32;
    let base = s.intervals[2].midpoint_f64();
    let y = [0usize, 3, 1, 2, 0, 1]
        .iter()
        .rev()
        .fold(base, |p, &i| s.branches[i].mobius_f64(p));
    for (n, m) in [(2usize, 3usize), (1, 4), (3, 2)] {
        let tmy = {
            let mut p = y;
            for _ in 0..m {
                p = s.apply_t(p).map_err(|e| e.to_string())?;
            }
            p
        };
        let lhs = crate::congruence::cocycle_product(s, q, y, n + m).map_err(|e| e.to_string())?;
        let rhs = crate::congruence::cocycle_product(s, q, tmy, n)
            .map_err(|e| e.to_string())?
            .mul(&crate::congruence::cocycle_product(s, q, y, m).map_err(|e| e.to_string())?);
        if lhs != rhs {
            return fail(format!("cocycle law fails at (N,M) = ({},{})", n, m));
        }
    }
    Ok("c^{N+M}(y) = c^N(T^M y) c^M(y) on sampled orbits".into())
}

fn congruence_projector_split() -> Check {
    for q in [4u32, 6, 12] {
        let sub = NewSubspace::build(q).map_err(|e| e.to_string())?;
        let n = sub.table.len();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut pe = f.clone();
        sub.project(&mut pe);
        let mut pe2 = pe.clone();
        sub.project(&mut pe2);
        let mut worst: f64 = 0.0;
        for i in 0..n {
            let plift = f[i] - pe[i];
            worst = worst.max((plift + pe[i] - f[i]).abs());
            worst = worst.max((pe2[i] - pe[i]).abs());
        }
        if worst > 1e-10 {
            return fail(format!("projector split residual {} at q = {}", worst, q));
        }
    }
    Ok("P_lift + P_E = 1 and P_E idempotent for q in {4, 6, 12}".into())
}

fn dynamics_cohomology_periodic() -> Check {
    let c = ctx();
    let orbits = crate::dynamics::periodic_orbits(&c.scheme, 6);
    let mut worst: f64 = 0.0;
    for orb in &orbits {
        let mut st = 0.0;
        let mut sth = 0.0;
        for (j, &i) in orb.word.iter().enumerate() {
            st += c.scheme.tau_on_branch(i, orb.points[j]);
            sth += c.scheme.tau_hat_on_branch(i, orb.points[j]);
        }
        worst = worst.max((st - sth).abs());
    }
    if worst > 1e-9 {
        return fail(format!("cohomology telescope residual {}", worst));
    }
    Ok(format!("{} orbits (period <= 6), max residual {:.2e}", orbits.len(), worst))
}

fn dynamics_markov_exact() -> Check {
    ctx().scheme.verify_markov().map_err(|e| e.to_string())?;
    let ssys = GeneratorSystem::sample_schottky(2).unwrap();
    build_schottky_scheme(&ssys)
        .and_then(|s| s.verify_markov())
        .map_err(|e| e.to_string())?;
    Ok("exact rational containment for CF {1,2} and the Schottky sample".into())
}

fn dynamics_positive_birkhoff() -> Check {
    let c = ctx();
    let cert = certify_expansion(&c.scheme).map_err(|e| e.to_string())?;
    let min_tau_hat_n = cert.level_mins[cert.n0 - 1].ln();
    if min_tau_hat_n <= 0.0 {
        return fail(format!("tau_hat^N0 min {} not positive", min_tau_hat_n));
    }
    Ok(format!("N0 = {}, min tau_hat^N0 = {:.4} > 0", cert.n0, min_tau_hat_n))
}

fn dynamics_branch_roundtrip() -> Check {
    let c = ctx();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let iv = rng.gen_range(0..c.scheme.k());
        let t = rng.gen_range(0.0..1.0);
        let x = c.scheme.intervals[iv].lo_f + t * c.scheme.intervals[iv].width_f64();
        for (i, y) in c.scheme.inverse_branches(x).map_err(|e| e.to_string())? {
            worst = worst.max((c.scheme.apply_t_on_branch(i, y) - x).abs());
        }
    }
    if worst > 1e-14 {
        return fail(format!("roundtrip residual {}", worst));
    }
    Ok(format!("1000 points, max |T(g_i x) - x| = {:.2e}", worst))
}

fn thermo_flavor_agreement() -> Check {
    let c = ctx();
    for s in [0.0, c.delta / 2.0, c.delta] {
        let lc = rpf(&assemble(&c.scheme, Complex64::new(s, 0.0), 32, Flavor::Collocation)
            .map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?
        .lambda;
        let lu = rpf(&assemble(&c.scheme, Complex64::new(s, 0.0), 2048, Flavor::Ulam)
            .map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?
        .lambda;
        if (lc - lu).abs() > 1e-4 {
            return fail(format!("s = {}: collocation {} vs ulam {}", s, lc, lu));
        }
    }
    Ok("lambda agrees to 1e-4 at s in {0, delta/2, delta}".into())
}

fn thermo_pressure_monotone() -> Check {
    let c = ctx();
    let mut prev = f64::INFINITY;
    for i in 0..20 {
        let s = i as f64 / 19.0;
        let p = crate::thermo::pressure(&c.scheme, s, 16).map_err(|e| e.to_string())?;
        if p >= prev {
            return fail(format!("pressure not strictly decreasing at s = {}", s));
        }
        prev = p;
    }
    Ok("strictly decreasing over 20 samples in [0, 1]".into())
}

fn thermo_rpf_positivity() -> Check {
    let c = ctx();
    let op = assemble(&c.scheme, Complex64::new(0.5, 0.0), 24, Flavor::Collocation)
        .map_err(|e| e.to_string())?;
    let r = rpf(&op).map_err(|e| e.to_string())?;
    if r.h.iter().any(|&x| x <= 0.0) {
        return fail("collocation eigenfunction not positive".into());
    }
    let opu = assemble(&c.scheme, Complex64::new(0.5, 0.0), 512, Flavor::Ulam)
        .map_err(|e| e.to_string())?;
    let ru = rpf(&opu).map_err(|e| e.to_string())?;
    if ru.h.iter().any(|&x| x <= 0.0) || ru.nu.iter().any(|&x| x < 0.0) {
        return fail("ulam RPF data not positive".into());
    }
    let sums = (r.nu.iter().sum::<f64>() - 1.0).abs().max((ru.nu.iter().sum::<f64>() - 1.0).abs());
    if sums > 1e-12 {
        return fail(format!("nu not normalized: {}", sums));
    }
    Ok("h > 0 both flavors; ulam nu >= 0; both nu sum to 1".into())
}

fn thermo_dimension_stability() -> Check {
    let c = ctx();
    let tol = 1e-7;
    let (_, diag) = hausdorff_dimension(&c.scheme, tol).map_err(|e| e.to_string())?;
    if diag.drift > 10.0 * tol {
        return fail(format!("final drift {} above 10 tol", diag.drift));
    }
    Ok(format!("final ladder drift {:.2e} < 10 tol", diag.drift))
}

fn congtransfer_equivariance() -> Check {
    let c = ctx();
    let op = crate::congtransfer::assemble_congruence(&c.scheme, 5, Complex64::new(0.5, 0.2), 8)
        .map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let f: Vec<Complex64> = (0..op.vector_len())
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    for h in [1u32, 29, 77] {
        let tf = op.translate_left(h, &f);
        let mut a = vec![Complex64::new(0.0, 0.0); f.len()];
        op.apply(&tf, &mut a);
        let mut b = vec![Complex64::new(0.0, 0.0); f.len()];
        op.apply(&f, &mut b);
        let tb = op.translate_left(h, &b);
        let err = a.iter().zip(&tb).map(|(x, y)| (x - y).norm()).fold(0.0f64, f64::max);
        if err > 1e-12 {
            return fail(format!("translation residual {} at h = {}", err, h));
        }
    }
    Ok("commutes with left translations, residual < 1e-12".into())
}

fn congtransfer_lift_invariance() -> Check {
    let c = ctx();
    let op = crate::congtransfer::assemble_congruence_normalized(&c.scheme, 4, c.delta, 0.0, 8)
        .map_err(|e| e.to_string())?;
    let ng = op.group_order();
    let e2 = NewSubspace::build(2).map_err(|e| e.to_string())?;
    let basis2 = e2.dense_basis().map_err(|e| e.to_string())?;
    let fiber = ng / e2.table.len();
    let lifts: Vec<Vec<f64>> = basis2
        .iter()
        .map(|b| {
            let mut v = vec![0.0; ng];
            for (gi, g) in op.table.elements.iter().enumerate() {
                v[gi] = b[e2.table.index_of(&g.reduce_to(2)) as usize] / (fiber as f64).sqrt();
            }
            v
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut f = vec![Complex64::new(0.0, 0.0); op.vector_len()];
    for p in 0..op.nodes() {
        for (w, lift) in lifts.iter().enumerate() {
            let cscale = Complex64::new(rng.gen_range(-1.0..1.0), 0.3 * (w as f64).cos());
            for g in 0..ng {
                f[p * ng + g] += cscale * lift[g];
            }
        }
    }
    let mut out = vec![Complex64::new(0.0, 0.0); f.len()];
    op.apply(&f, &mut out);
    let mut worst: f64 = 0.0;
    for p in 0..op.nodes() {
        let slice = &out[p * ng..(p + 1) * ng];
        let mut resid: Vec<Complex64> = slice.to_vec();
        for lift in &lifts {
            let mut dot = Complex64::new(0.0, 0.0);
            for g in 0..ng {
                dot += resid[g] * lift[g];
            }
            for g in 0..ng {
                resid[g] -= dot * lift[g];
            }
        }
        let mean: Complex64 = resid.iter().sum::<Complex64>() / ng as f64;
        resid.iter_mut().for_each(|z| *z -= mean);
        worst = worst.max(resid.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt());
    }
    if worst > 1e-10 {
        return fail(format!("E^4_2 leakage {}", worst));
    }
    Ok("E^q_{q'} lift subspace invariant (q = 4, q' = 2)".into())
}

fn congtransfer_collapse() -> Check {
    let c = ctx();
    for (s, res) in [(0.4, 8usize), (c.delta, 12)] {
        let cop = crate::congtransfer::assemble_congruence(&c.scheme, 3, Complex64::new(s, 0.0), res)
            .map_err(|e| e.to_string())?;
        let sop = assemble(&c.scheme, Complex64::new(s, 0.0), res, Flavor::Collocation)
            .map_err(|e| e.to_string())?;
        let ng = cop.group_order();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let f: Vec<Complex64> = (0..cop.vector_len())
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let mut out = vec![Complex64::new(0.0, 0.0); f.len()];
        cop.apply(&f, &mut out);
        let cin = cop.collapse(&f);
        let cout = cop.collapse(&out);
        let fr: Vec<f64> = cin.iter().map(|z| z.re).collect();
        let fi: Vec<f64> = cin.iter().map(|z| z.im).collect();
        let mut or_ = vec![0.0; cop.nodes()];
        let mut oi = vec![0.0; cop.nodes()];
        sop.apply_real(&fr, &mut or_);
        sop.apply_real(&fi, &mut oi);
        for p in 0..cop.nodes() {
            let d = (cout[p] - Complex64::new(or_[p], oi[p])).norm();
            if d > 1e-12 * ng as f64 {
                return fail(format!("collapse residual {} at s = {}", d, s));
            }
        }
    }
    Ok("group-collapsed operator equals the scalar operator".into())
}

fn renewal_monotone_jumps() -> Check {
    let c = ctx();
    let r = Renewal::new(&c.scheme).map_err(|e| e.to_string())?;
    let g = TestFn::one();
    let x = c.scheme.intervals[1].midpoint_f64();
    let mut prev = -1.0;
    for i in 0..25 {
        let a = -0.5 + 0.25 * i as f64;
        let v = r.n_count(a, x, &g).map_err(|e| e.to_string())?;
        if v < prev {
            return fail(format!("N decreasing at a = {}", a));
        }
        prev = v;
    }
    Ok("N(a, x) nondecreasing across 25 thresholds".into())
}

fn renewal_congruence_collapse() -> Check {
    let c = ctx();
    let r = Renewal::new(&c.scheme).map_err(|e| e.to_string())?;
    let table = GroupTable::build(3).map_err(|e| e.to_string())?;
    let phi = vec![1.0; table.len()];
    let g = TestFn::one();
    let x = c.scheme.intervals[0].midpoint_f64();
    let vecs = r
        .n_count_congruence(&table, 4.0, x, &g, &phi)
        .map_err(|e| e.to_string())?;
    let scalar = r.n_count(4.0, x, &g).map_err(|e| e.to_string())?;
    let worst = vecs
        .iter()
        .map(|v| (v - scalar).abs())
        .fold(0.0f64, f64::max);
    if worst > 1e-12 * scalar.max(1.0) {
        return fail(format!("collapse residual {}", worst));
    }
    Ok("uniform phi reproduces the scalar count".into())
}

fn renewal_prune_exact() -> Check {
    let c = ctx();
    let r = Renewal::new(&c.scheme).map_err(|e| e.to_string())?;
    let g = TestFn::one();
    for a in [2.0, 3.5, 5.0] {
        let x = c.scheme.intervals[3].midpoint_f64();
        let tight = r.n_count(a, x, &g).map_err(|e| e.to_string())?;
        let loose = r.n_count_slack(a, x, &g, 8.0).map_err(|e| e.to_string())?;
        if tight != loose {
            return fail(format!("prune mismatch at a = {}: {} vs {}", a, tight, loose));
        }
    }
    Ok("pruned tree equals loose-slack oracle for a <= 5".into())
}

fn renewal_resolvent_residual() -> Check {
    let c = ctx();
    let x = c.scheme.intervals[0].midpoint_f64();
    let mut lines = Vec::new();
    for off in [0.2, 0.5, 1.0] {
        let res = resolvent_cross_check(&c.scheme, c.delta + off, x, 32).map_err(|e| e.to_string())?;
        if res > 1e-6 {
            return fail(format!("residual {} at s = delta + {}", res, off));
        }
        lines.push(format!("{:.1e}", res));
    }
    Ok(format!("residuals {} at delta + {{0.2, 0.5, 1.0}}", lines.join(", ")))
}

fn counting_class_sum() -> Check {
    let sys = GeneratorSystem::continued_fraction(&[1, 2]).unwrap();
    let rep = congruence_count(&sys, 5, &[100.0, 316.0, 1000.0], None, None)
        .map_err(|e| e.to_string())?;
    for (i, m) in rep.class_counts.iter().enumerate() {
        let s: u64 = m.values().sum();
        if s != rep.totals[i] {
            return fail(format!("class sum {} != total {} at rung {}", s, rep.totals[i], i));
        }
    }
    Ok("class sums equal totals at every rung (exact)".into())
}

fn counting_gamma0_shift() -> Check {
    let sys = GeneratorSystem::continued_fraction(&[1, 2]).unwrap();
    let ladder: Vec<f64> = [2.0f64, 2.5, 3.0, 3.5, 4.0]
        .iter()
        .map(|e| 10f64.powf(*e))
        .collect();
    let rep_e = congruence_count(&sys, 1, &ladder, None, None).map_err(|e| e.to_string())?;
    let fit_e = exponent_fit(&rep_e).map_err(|e| e.to_string())?;
    let g1 = Word(vec![0]);
    let rep_g = congruence_count(&sys, 1, &ladder, Some(&g1), None).map_err(|e| e.to_string())?;
    let fit_g = exponent_fit(&rep_g).map_err(|e| e.to_string())?;
    let tol = 2.0 * (fit_e.slope_stderr + fit_g.slope_stderr);
    if (fit_e.slope - fit_g.slope).abs() > tol {
        return fail(format!(
            "slopes {} vs {} differ beyond 2 stderr ({})",
            fit_e.slope, fit_g.slope, tol
        ));
    }
    Ok(format!(
        "slopes {:.4} (gamma_0 = e) vs {:.4} (gamma_0 = g_1) within 2 stderr",
        fit_e.slope, fit_g.slope
    ))
}

fn counting_identity_class_bracket() -> Check {
    let sys = GeneratorSystem::continued_fraction(&[1, 2]).unwrap();
    for q in [5u32, 7] {
        let rep = congruence_count(&sys, q, &[3162.0], None, None).map_err(|e| e.to_string())?;
        let total = rep.totals[0] as f64;
        let expect = total / rep.group_order as f64;
        let got = rep.target_class[0] as f64;
        if got < 0.5 * expect || got > 2.0 * expect {
            return fail(format!(
                "q = {}: identity class {} outside [0.5, 2] x {}",
                q, got, expect
            ));
        }
    }
    Ok("identity-class counts inside [0.5, 2] x total/|G| for q in {5, 7}".into())
}

fn expander_majorant() -> Check {
    let c = ctx();
    let x = c.scheme.intervals[0].midpoint_f64();
    let rep = build_mu(&c.scheme, &c.fam, 7, 0.4, x, &[1, 2], 5).map_err(|e| e.to_string())?;
    for (k, w) in &rep.mu.atoms {
        let nv = rep.nu.atoms.get(k).map(|z| z.re).unwrap_or(0.0);
        if w.norm() > rep.majorant_c * nv * (1.0 + 1e-12) {
            return fail(format!("atom violates |mu| <= C nu with C = {}", rep.majorant_c));
        }
    }
    Ok(format!("atomwise |mu| <= C nu with measured C = {:.3}", rep.majorant_c))
}

fn expander_conv_associativity() -> Check {
    let table = GroupTable::build(5).map_err(|e| e.to_string())?;
    let n = table.len();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let random_measure = |rng: &mut ChaCha8Rng| {
        let mut atoms = std::collections::HashMap::new();
        for _ in 0..6 {
            atoms.insert(
                table.elements[rng.gen_range(0..n)].key(),
                Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
            );
        }
        atoms
    };
    let mu = random_measure(&mut rng);
    let mup = random_measure(&mut rng);
    let phi: Vec<Complex64> = (0..n)
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let decode = |key: u64| -> ResidueMatrix {
        let q = 5u64;
        ResidueMatrix {
            q: 5,
            e: [
                ((key / (q * q * q)) % q) as u32,
                ((key / (q * q)) % q) as u32,
                ((key / q) % q) as u32,
                (key % q) as u32,
            ],
        }
    };
    let conv = |m: &std::collections::HashMap<u64, Complex64>, v: &[Complex64]| -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        for (key, w) in m {
            let perm = table.left_translation_inv(&decode(*key));
            for g in 0..n {
                out[g] += *w * v[perm[g] as usize];
            }
        }
        out
    };
    let mut mm = std::collections::HashMap::new();
    for (k1, w1) in &mu {
        for (k2, w2) in &mup {
            *mm.entry(decode(*k1).mul(&decode(*k2)).key())
                .or_insert(Complex64::new(0.0, 0.0)) += w1 * w2;
        }
    }
    let lhs = conv(&mm, &phi);
    let rhs = conv(&mu, &conv(&mup, &phi));
    let worst = lhs
        .iter()
        .zip(&rhs)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0f64, f64::max);
    if worst > 1e-12 {
        return fail(format!("associativity residual {}", worst));
    }
    Ok("(mu * mu') * phi = mu * (mu' * phi) to 1e-12".into())
}

fn expander_eq_invariance() -> Check {
    let c = ctx();
    let x = c.scheme.intervals[0].midpoint_f64();
    let rep = build_mu(&c.scheme, &c.fam, 4, 0.0, x, &[1], 4).map_err(|e| e.to_string())?;
    let sub = NewSubspace::build(4).map_err(|e| e.to_string())?;
    let n = sub.table.len();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut phi: Vec<Complex64> = (0..n)
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), 0.0))
        .collect();
    sub.project_complex(&mut phi);
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    for (key, w) in &rep.mu.atoms {
        let q = 4u64;
        let h = ResidueMatrix {
            q: 4,
            e: [
                ((key / (q * q * q)) % q) as u32,
                ((key / (q * q)) % q) as u32,
                ((key / q) % q) as u32,
                (key % q) as u32,
            ],
        };
        let perm = sub.table.left_translation_inv(&h);
        for g in 0..n {
            out[g] += *w * phi[perm[g] as usize];
        }
    }
    let mut projected = out.clone();
    sub.project_complex(&mut projected);
    let resid: f64 = out
        .iter()
        .zip(&projected)
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>()
        .sqrt();
    if resid > 1e-10 {
        return fail(format!("E_q leakage {}", resid));
    }
    Ok("mu * E_q stays in E_q (residual < 1e-10)".into())
}

fn expander_crt_tensor() -> Check {
    // documented spec expectation; empirically false (see decisions ledger):
    // the tensor part of the product modulus is where atoms act coherently
    let c = ctx();
    let x = c.scheme.intervals[0].midpoint_f64();
    let mut ratios = Vec::new();
    for q in [2u32, 3, 6] {
        let rep = build_mu(&c.scheme, &c.fam, q, 0.0, x, &[2], 6).map_err(|e| e.to_string())?;
        let sub = NewSubspace::build(q).map_err(|e| e.to_string())?;
        let (norm, _) = convolution_norm_on_eq(&rep.mu, &sub, 300, 5).map_err(|e| e.to_string())?;
        ratios.push(norm);
    }
    let bound = ratios[0].max(ratios[1]) + 1e-9;
    if ratios[2] > bound {
        return fail(format!(
            "norm(E_6) = {:.4e} exceeds max(norm(E_2), norm(E_3)) = {:.4e}",
            ratios[2], bound
        ));
    }
    Ok(format!("norm(E_6) = {:.3e} <= max factors {:.3e}", ratios[2], bound))
}

fn zaremba_coprimality() -> Check {
    use num_traits::{One, Zero};
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for _ in 0..300 {
        let len = rng.gen_range(1..=10);
        let digits: Vec<i64> = (0..len).map(|_| rng.gen_range(1..=5)).collect();
        let m = crate::zaremba::cf_to_matrix(&digits).map_err(|e| e.to_string())?;
        let (b, d) = crate::zaremba::matrix_to_fraction(&m);
        let (mut x, mut y) = (b, d);
        while !y.is_zero() {
            let t = &x % &y;
            x = y;
            y = t;
        }
        if x != num_bigint::BigInt::one() && x != num_bigint::BigInt::from(-1) {
            return fail(format!("gcd(b, d) = {} for digits {:?}", x, digits));
        }
    }
    Ok("gcd(b, d) = 1 on 300 random digit strings".into())
}

fn zaremba_prune_exact() -> Check {
    let c = crate::zaremba::denominator_census(&[1, 2], 1000).map_err(|e| e.to_string())?;
    let o = crate::zaremba::census_exhaustive_oracle(&[1, 2], 1000).map_err(|e| e.to_string())?;
    if !c.same_set(&o) {
        return fail(format!("census {} vs oracle {}", c.count, o.count));
    }
    Ok(format!("census and digit-string oracle agree exactly ({} denominators)", c.count))
}

fn zaremba_density_report() -> Check {
    let c = crate::zaremba::denominator_census(&[1, 2, 3, 4, 5], 10_000).map_err(|e| e.to_string())?;
    // the gate is the two-strategy agreement (above); the density is a report
    Ok(format!(
        "density of D_[5] on [1, 10^4]: {:.6} ({} of 10000)",
        c.density(),
        c.count
    ))
}

fn cli_determinism() -> Check {
    // two runs of the same seeded experiment must serialize identically
    let c = ctx();
    let r1 = crate::congtransfer::complement_decay(&c.scheme, 2, c.delta, 0.0, 20, 2, 10, 99)
        .map_err(|e| e.to_string())?;
    let r2 = crate::congtransfer::complement_decay(&c.scheme, 2, c.delta, 0.0, 20, 2, 10, 99)
        .map_err(|e| e.to_string())?;
    let s1 = serde_json::to_string(&r1).map_err(|e| e.to_string())?;
    let s2 = serde_json::to_string(&r2).map_err(|e| e.to_string())?;
    if s1 != s2 {
        return fail("seeded reports differ between runs".into());
    }
    Ok("same config + seed gives byte-identical reports".into())
}

pub fn registry() -> Vec<Invariant> {
    macro_rules! inv {
        ($name:literal, $module:literal, $f:ident) => {
            Invariant {
                name: $name,
                module: $module,
                run: $f,
            }
        };
    }
    vec![
        inv!("semigroup-word-matrix-recompute", "semigroup", semigroup_word_matrix_recompute),
        inv!("semigroup-no-duplicates-monotone", "semigroup", semigroup_no_duplicates_monotone),
        inv!("semigroup-cf-prune-exact", "semigroup", semigroup_cf_prune_exact),
        inv!("semigroup-det-plus-one", "semigroup", semigroup_det_plus_one),
        inv!("semigroup-growth-trend", "semigroup", semigroup_growth_trend),
        inv!("congruence-order-crt", "congruence", congruence_order_crt),
        inv!("congruence-reduce-homomorphism", "congruence", congruence_reduce_homomorphism),
        inv!("congruence-cocycle-law", "congruence", congruence_cocycle_law),
        inv!("congruence-projector-split", "congruence", congruence_projector_split),
        inv!("dynamics-cohomology-periodic", "dynamics", dynamics_cohomology_periodic),
        inv!("dynamics-markov-exact", "dynamics", dynamics_markov_exact),
        inv!("dynamics-positive-birkhoff", "dynamics", dynamics_positive_birkhoff),
        inv!("dynamics-branch-roundtrip", "dynamics", dynamics_branch_roundtrip),
        inv!("thermo-flavor-agreement", "thermo", thermo_flavor_agreement),
        inv!("thermo-pressure-monotone", "thermo", thermo_pressure_monotone),
        inv!("thermo-rpf-positivity", "thermo", thermo_rpf_positivity),
        inv!("thermo-dimension-stability", "thermo", thermo_dimension_stability),
        inv!("congtransfer-equivariance", "congtransfer", congtransfer_equivariance),
        inv!("congtransfer-lift-invariance", "congtransfer", congtransfer_lift_invariance),
        inv!("congtransfer-collapse", "congtransfer", congtransfer_collapse),
        inv!("renewal-monotone-jumps", "renewal", renewal_monotone_jumps),
        inv!("renewal-congruence-collapse", "renewal", renewal_congruence_collapse),
        inv!("renewal-prune-exact", "renewal", renewal_prune_exact),
        inv!("renewal-resolvent-residual", "renewal", renewal_resolvent_residual),
        inv!("counting-class-sum", "counting", counting_class_sum),
        inv!("counting-gamma0-shift", "counting", counting_gamma0_shift),
        inv!("counting-identity-class-bracket", "counting", counting_identity_class_bracket),
        inv!("expander-majorant", "expander", expander_majorant),
        inv!("expander-conv-associativity", "expander", expander_conv_associativity),
        inv!("expander-eq-invariance", "expander", expander_eq_invariance),
        inv!("expander-crt-tensor", "expander", expander_crt_tensor),
        inv!("zaremba-coprimality", "zaremba", zaremba_coprimality),
        inv!("zaremba-prune-exact", "zaremba", zaremba_prune_exact),
        inv!("zaremba-density-report", "zaremba", zaremba_density_report),
        inv!("cli-determinism", "cli", cli_determinism),
    ]
}
