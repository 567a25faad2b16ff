//! Congruence counting reports: per-residue-class counts on a radius
//! ladder, growth-exponent fits against 2 delta, equidistribution trends,
//! and the lattice distortion tau_* with its bridge to the boundary tau.

use crate::ball::{for_each_in_ball, BallOptions};
use crate::congruence::{reduce_mod, sl2_order};
use crate::dynamics::MarkovScheme;
use crate::error::{Error, Result};
use crate::matrix::hyperbolic_dist_from_i;
use crate::stats::{fit_line, LineFit};
use crate::system::{GeneratorSystem, Word};
use std::collections::HashMap;

#[derive(Clone, Debug, serde::Serialize)]
pub struct CountReport {
    pub q: u32,
    pub r_ladder: Vec<f64>,
    pub totals: Vec<u64>,
    /// Per rung: residue key -> count (cumulative in R).
    pub class_counts: Vec<HashMap<u64, u64>>,
    /// Count of the target class (identity unless xi was given) per rung.
    pub target_class: Vec<u64>,
    pub target_key: u64,
    /// max_xi |count - total/|G|| / (total/|G|), over all classes.
    pub deviation_max: Vec<f64>,
    /// l2 relative deviation across classes.
    pub deviation_l2: Vec<f64>,
    /// Whether the generator residues generate all of SL2(Z/q).
    pub surjective: bool,
    pub group_order: u64,
}

/// Count admissible gamma (gamma gamma_0 admissible when gamma_0 is given)
/// in the relative norm ball per rung, bucketed by the residue of gamma.
pub fn congruence_count(
    sys: &GeneratorSystem,
    q: u32,
    r_ladder: &[f64],
    gamma0: Option<&Word>,
    xi: Option<&crate::congruence::ResidueMatrix>,
) -> Result<CountReport> {
    if r_ladder.is_empty() {
        return Err(Error::Config("empty radius ladder".into()));
    }
    let mut ladder = r_ladder.to_vec();
    ladder.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let r_max = *ladder.last().unwrap();
    let opts = BallOptions {
        include_identity: false,
        gamma0: gamma0.cloned(),
    };
    let norm0_sq = match gamma0 {
        Some(w) => sys.word_matrix(w).frob_norm_sq_f64(),
        None => 1.0,
    };
    let bounds: Vec<f64> = ladder.iter().map(|r| r * r * norm0_sq).collect();
    // one enumeration at the top rung; each element lands in its smallest rung
    let mut new_totals = vec![0u64; ladder.len()];
    let mut new_classes: Vec<HashMap<u64, u64>> = vec![HashMap::new(); ladder.len()];
    for_each_in_ball(sys, r_max, &opts, |_w, m, norm_sq| {
        let rung = bounds.partition_point(|&b| norm_sq >= b);
        if rung < ladder.len() {
            let key = reduce_mod(m, q).key();
            new_totals[rung] += 1;
            *new_classes[rung].entry(key).or_insert(0) += 1;
        }
    })?;
    // accumulate over rungs
    let mut totals = Vec::with_capacity(ladder.len());
    let mut class_counts: Vec<HashMap<u64, u64>> = Vec::with_capacity(ladder.len());
    let mut acc_total = 0u64;
    let mut acc_map: HashMap<u64, u64> = HashMap::new();
    for (t, m) in new_totals.iter().zip(new_classes.iter()) {
        acc_total += t;
        for (k, v) in m {
            *acc_map.entry(*k).or_insert(0) += v;
        }
        totals.push(acc_total);
        class_counts.push(acc_map.clone());
    }
    let group_order = sl2_order(q as u64);
    let target_key = match xi {
        Some(r) => r.key(),
        None => crate::congruence::ResidueMatrix::identity(q).key(),
    };
    let target_class: Vec<u64> = class_counts
        .iter()
        .map(|m| *m.get(&target_key).unwrap_or(&0))
        .collect();
    let mut deviation_max = Vec::with_capacity(ladder.len());
    let mut deviation_l2 = Vec::with_capacity(ladder.len());
    for (t, m) in totals.iter().zip(class_counts.iter()) {
        let mean = *t as f64 / group_order as f64;
        if mean == 0.0 {
            deviation_max.push(f64::NAN);
            deviation_l2.push(f64::NAN);
            continue;
        }
        let mut worst: f64 = 0.0;
        let mut sq = 0.0;
        let mut seen = 0u64;
        for &c in m.values() {
            let d = (c as f64 - mean).abs() / mean;
            worst = worst.max(d);
            sq += d * d;
            seen += 1;
        }
        // classes with zero count
        let zeros = group_order - seen;
        if zeros > 0 {
            worst = worst.max(1.0);
            sq += zeros as f64;
        }
        deviation_max.push(worst);
        deviation_l2.push((sq / group_order as f64).sqrt());
    }
    let surjective = crate::congruence::residues_surjective(sys, q)?;
    Ok(CountReport {
        q,
        r_ladder: ladder,
        totals,
        class_counts,
        target_class,
        target_key,
        deviation_max,
        deviation_l2,
        surjective,
        group_order,
    })
}

/// Least-squares slope of log(count) against log(R) over rungs with at
/// least 100 elements.
pub fn exponent_fit(report: &CountReport) -> Result<LineFit> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (r, t) in report.r_ladder.iter().zip(&report.totals) {
        if *t >= 100 {
            xs.push(r.ln());
            ys.push((*t as f64).ln());
        }
    }
    if xs.len() < 4 {
        return Err(Error::InsufficientData(format!(
            "only {} rungs have >= 100 elements",
            xs.len()
        )));
    }
    let fit = fit_line(&xs, &ys)?;
    // ball growth exponents live in (0, 2]; anything else means the data
    // was not a power law worth reporting
    if fit.slope <= 0.0 || fit.slope > 2.0 {
        return Err(Error::InsufficientData(format!(
            "fitted exponent {} outside (0, 2]",
            fit.slope
        )));
    }
    Ok(fit)
}

/// Geometric-mean leading constant c with count ~ c R^slope.
pub fn leading_constant(report: &CountReport, slope: f64) -> Option<f64> {
    let mut acc = 0.0;
    let mut n = 0usize;
    for (r, t) in report.r_ladder.iter().zip(&report.totals) {
        if *t >= 100 {
            acc += (*t as f64).ln() - slope * r.ln();
            n += 1;
        }
    }
    if n == 0 {
        None
    } else {
        Some((acc / n as f64).exp())
    }
}

/// tau_*^N(gamma) = d(o, gamma o) - d(o, sigma^N gamma o), sigma dropping
/// the leading generator letter.
pub fn tau_star(sys: &GeneratorSystem, word: &Word, n: usize) -> Result<f64> {
    if word.len() < n {
        return Err(Error::Admissibility(format!(
            "word of length {} cannot be shifted {} times",
            word.len(),
            n
        )));
    }
    if !sys.word_admissible(word) {
        return Err(Error::Admissibility("word not admissible".into()));
    }
    let full = sys.word_matrix(word);
    let tail = Word(word.0[n..].to_vec());
    let shifted = sys.word_matrix(&tail);
    Ok(hyperbolic_dist_from_i(&full) - hyperbolic_dist_from_i(&shifted))
}

/// |tau_*^n(gamma) - tau^n(gamma k0)| for the bridge between the lattice
/// and boundary distortions; decays like kappa^N in the reserve length N.
pub fn bridge_check(
    scheme: &MarkovScheme,
    word: &Word,
    k0: f64,
    n: usize,
    reserve: usize,
) -> Result<f64> {
    let sys = &scheme.system;
    if word.len() < n + reserve {
        return Err(Error::Admissibility(format!(
            "word needs at least {} letters",
            n + reserve
        )));
    }
    if let Some(&last) = word.0.last() {
        if !sys.k0_admissible(last as usize, k0) {
            return Err(Error::Admissibility("k0 blocked for this word".into()));
        }
    }
    let ts = tau_star(sys, word, n)?;
    // boundary side: Birkhoff sum of tau at x = gamma(k0), iterated through
    // the exact suffix points sigma^j gamma (k0)
    let mut tau_sum = 0.0;
    for j in 0..n {
        let suffix = Word(word.0[j..].to_vec());
        let x = sys.word_matrix(&suffix).mobius_f64(k0);
        let i = scheme
            .locate(x)
            .ok_or_else(|| Error::Domain(format!("suffix point {} outside I", x)))?;
        tau_sum += scheme.tau_on_branch(i, x);
    }
    Ok((ts - tau_sum).abs())
}

/// Predicted leading constant C_*(e, 1) = h(k0) / (delta * int tau d nu_0)
/// from the RPF data, with the Gibbs measure nu_0 normalized to mass one.
/// The fitted constant differs by the norm-vs-distance correction, so the
/// two are reported side by side and never gated against each other.
pub fn predicted_leading_constant(
    scheme: &MarkovScheme,
    fam: &crate::thermo::NormalizedFamily,
    delta: f64,
    k0: f64,
) -> Result<f64> {
    let grid = fam.grid();
    let gibbs: Vec<f64> = fam
        .rpf
        .nu
        .iter()
        .zip(&fam.rpf.h)
        .map(|(a, b)| a * b)
        .collect();
    let mass: f64 = gibbs.iter().sum();
    let mut tau_mean = 0.0;
    for ((g, &i), &x) in gibbs.iter().zip(&grid.interval_of).zip(&grid.points) {
        tau_mean += g * scheme.tau_on_branch(i, x);
    }
    tau_mean /= mass;
    let j = scheme
        .locate(k0)
        .ok_or_else(|| Error::Domain(format!("k0 = {} outside I", k0)))?;
    let h_at = grid.interp_at(&fam.rpf.h, j, k0);
    Ok(h_at / (delta * tau_mean))
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct TrendReport {
    pub q: u32,
    pub r_ladder: Vec<f64>,
    pub deviation_max: Vec<f64>,
    pub deviation_l2: Vec<f64>,
    /// Strictly decreasing max deviation across the top three rungs.
    pub decreasing_top3: bool,
}

pub fn equidistribution_trend(
    sys: &GeneratorSystem,
    q: u32,
    r_ladder: &[f64],
) -> Result<TrendReport> {
    let report = congruence_count(sys, q, r_ladder, None, None)?;
    let n = report.r_ladder.len();
    let decreasing_top3 = if n >= 3 {
        let d = &report.deviation_max[n - 3..];
        d[0] > d[1] && d[1] > d[2]
    } else {
        false
    };
    Ok(TrendReport {
        q,
        r_ladder: report.r_ladder.clone(),
        deviation_max: report.deviation_max.clone(),
        deviation_l2: report.deviation_l2.clone(),
        decreasing_top3,
    })
}
