//! The boundary dynamical system T on a union of intervals: branches,
//! distortion functions, expansion certificates, and the contraction /
//! temporal-distance probes.
//!
//! Interval endpoints are exact rationals; points are f64. Both distortion
//! functions are carried: tau_hat(x) = log |T'(x)| on the real line, and the
//! disc-model tau obtained through the Cayley map J(z) = (z-i)/(z+i), with
//! |J'(x)| = 2/(x^2+1) on R. They are cohomologous; thermodynamics uses tau,
//! expansion certificates use tau_hat.

use crate::error::{Error, Result};
use crate::matrix::IntMatrix2;
use crate::system::{GeneratorSystem, RationalInterval, SystemKind, Word};
use num_rational::BigRational;

#[derive(Clone, Debug)]
pub struct MarkovScheme {
    pub system: GeneratorSystem,
    /// Branch domains I_1..I_k.
    pub intervals: Vec<RationalInterval>,
    /// Branch matrices g_i with T|_{I_i} = g_i^{-1}.
    pub branches: Vec<IntMatrix2>,
    /// Adjugates of the branches: the Möbius maps realizing T on each I_i.
    branch_adj: Vec<IntMatrix2>,
    /// Transition matrix: A[i][j] = 1 iff T(I_i) contains I_j.
    pub transition: Vec<Vec<bool>>,
    /// Human-readable branch labels (letter pairs).
    pub labels: Vec<String>,
}

/// log |J'(x)| for the Cayley map, on the real line.
pub fn log_jprime(x: f64) -> f64 {
    std::f64::consts::LN_2 - (1.0 + x * x).ln()
}

fn log_jprime_deriv(x: f64) -> f64 {
    -2.0 * x / (1.0 + x * x)
}

impl MarkovScheme {
    pub fn k(&self) -> usize {
        self.intervals.len()
    }

    /// Index of the interval containing x. Intervals are pairwise disjoint
    /// compact sets, so closed membership is unambiguous.
    pub fn locate(&self, x: f64) -> Option<usize> {
        self.locate_tol(x, 0.0)
    }

    pub fn locate_tol(&self, x: f64, tol: f64) -> Option<usize> {
        self.intervals
            .iter()
            .position(|iv| iv.contains_closed_f64(x, tol))
    }

    fn locate_or_err(&self, x: f64) -> Result<usize> {
        self.locate(x)
            .ok_or_else(|| Error::Domain(format!("point {} outside I", x)))
    }

    pub fn apply_t(&self, x: f64) -> Result<f64> {
        let i = self.locate_or_err(x)?;
        Ok(self.branch_adj[i].mobius_f64(x))
    }

    pub fn apply_t_on_branch(&self, i: usize, x: f64) -> f64 {
        self.branch_adj[i].mobius_f64(x)
    }

    /// All (i, g_i(x)) with x in T(I_i).
    pub fn inverse_branches(&self, x: f64) -> Result<Vec<(usize, f64)>> {
        let j = self.locate_or_err(x)?;
        Ok(self
            .branches_into(j)
            .map(|i| (i, self.branches[i].mobius_f64(x)))
            .collect())
    }

    /// Branch indices i with A[i][j] = 1.
    pub fn branches_into(&self, j: usize) -> impl Iterator<Item = usize> + '_ {
        let k = self.k();
        (0..k).filter(move |&i| self.transition[i][j])
    }

    /// tau_hat(y) = log |T'(y)| for y on branch i, evaluated without locate.
    pub fn tau_hat_on_branch(&self, i: usize, y: f64) -> f64 {
        self.branch_adj[i].mobius_deriv(y).abs().ln()
    }

    pub fn tau_hat(&self, x: f64) -> Result<f64> {
        let i = self.locate_or_err(x)?;
        Ok(self.tau_hat_on_branch(i, x))
    }

    /// Disc-model distortion: tau = tau_hat + log|J'(Ty)| - log|J'(y)|.
    pub fn tau_on_branch(&self, i: usize, y: f64) -> f64 {
        let ty = self.apply_t_on_branch(i, y);
        self.tau_hat_on_branch(i, y) + log_jprime(ty) - log_jprime(y)
    }

    pub fn tau(&self, x: f64) -> Result<f64> {
        let i = self.locate_or_err(x)?;
        Ok(self.tau_on_branch(i, x))
    }

    /// Analytic derivative of tau along branch i.
    pub fn tau_deriv_on_branch(&self, i: usize, y: f64) -> f64 {
        let adj = &self.branch_adj[i];
        let [_, _, c, d] = adj.entries_f64();
        // tau_hat = -log (cy+d)^2 for |det| = 1
        let tau_hat_deriv = -2.0 * c / (c * y + d);
        let ty = adj.mobius_f64(y);
        let tprime = adj.mobius_deriv(y);
        tau_hat_deriv + log_jprime_deriv(ty) * tprime - log_jprime_deriv(y)
    }

    /// Numeric bound for sup_I |tau'| (sampled, with margin).
    pub fn lipschitz_tau(&self) -> f64 {
        let mut sup: f64 = 0.0;
        for (i, iv) in self.intervals.iter().enumerate() {
            let n = 256;
            for p in 0..=n {
                let x = iv.lo_f + (iv.hi_f - iv.lo_f) * p as f64 / n as f64;
                sup = sup.max(self.tau_deriv_on_branch(i, x).abs());
            }
        }
        1.5 * sup
    }

    /// Birkhoff sum of tau along the forward orbit of x (length n).
    pub fn birkhoff_tau(&self, x: f64, n: usize) -> Result<f64> {
        let mut sum = 0.0;
        let mut y = x;
        for _ in 0..n {
            let i = self.locate_or_err(y)?;
            sum += self.tau_on_branch(i, y);
            y = self.apply_t_on_branch(i, y);
        }
        Ok(sum)
    }

    /// Exact image interval of I_i under T.
    fn image_interval(&self, i: usize) -> (BigRational, BigRational) {
        let adj = &self.branch_adj[i];
        let a = adj.mobius_rational(&self.intervals[i].lo).expect("no pole in branch domain");
        let b = adj.mobius_rational(&self.intervals[i].hi).expect("no pole in branch domain");
        if a < b {
            (a, b)
        } else {
            (b, a)
        }
    }

    /// Exact Markov check: A[i][j] = 1 implies T(I_i) contains I_j, and
    /// A[i][j] = 0 implies T(I_i) does not meet the interior of I_j.
    pub fn verify_markov(&self) -> Result<()> {
        for i in 0..self.k() {
            let (lo, hi) = self.image_interval(i);
            for j in 0..self.k() {
                let cover = lo <= self.intervals[j].lo && self.intervals[j].hi <= hi;
                if self.transition[i][j] && !cover {
                    return Err(Error::Config(format!(
                        "Markov violation: T(I_{}) does not cover I_{}",
                        i, j
                    )));
                }
                if !self.transition[i][j] {
                    let meets_interior = lo < self.intervals[j].hi && self.intervals[j].lo < hi;
                    if meets_interior {
                        return Err(Error::Config(format!(
                            "transition says 0 but T(I_{}) meets I_{}",
                            i, j
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Structured text dump (intervals, branch matrices, transition table).
    pub fn describe(&self) -> String {
        let mut s = String::new();
        for (i, iv) in self.intervals.iter().enumerate() {
            s.push_str(&format!(
                "interval {} [{}] = [{}, {}]\nbranch {} = {}\n",
                i, self.labels[i], iv.lo, iv.hi, i, self.branches[i]
            ));
        }
        s.push_str("transition =\n");
        for row in &self.transition {
            let line: String = row.iter().map(|&b| if b { '1' } else { '0' }).collect();
            s.push_str(&line);
            s.push('\n');
        }
        s
    }
}

/// Continued-fraction scheme: the |A|^2 intervals I_{a,a'} = g_a g_a' I_A
/// with full transition matrix.
pub fn build_cf_scheme(sys: &GeneratorSystem) -> Result<MarkovScheme> {
    if sys.kind != SystemKind::ContinuedFraction {
        return Err(Error::Config("expected a continued-fraction system".into()));
    }
    let alpha = &sys.alphabet;
    let a_max = *alpha.last().unwrap();
    let i_a = RationalInterval::from_i64((1, a_max + 1), (1, 1));
    let mut intervals = Vec::new();
    let mut branches = Vec::new();
    let mut labels = Vec::new();
    for &a in alpha {
        for &b in alpha {
            let block = IntMatrix2::cf_generator(a).mul(&IntMatrix2::cf_generator(b));
            let lo = block.mobius_rational(&i_a.lo).expect("no pole");
            let hi = block.mobius_rational(&i_a.hi).expect("no pole");
            let (lo, hi) = if lo < hi { (lo, hi) } else { (hi, lo) };
            intervals.push(RationalInterval::new(lo, hi)?);
            branches.push(block);
            labels.push(format!("{},{}", a, b));
        }
    }
    for i in 0..intervals.len() {
        for j in (i + 1)..intervals.len() {
            if !intervals[i].disjoint(&intervals[j]) {
                return Err(Error::Config(format!(
                    "cylinders {} and {} overlap",
                    labels[i], labels[j]
                )));
            }
        }
    }
    let k = intervals.len();
    let branch_adj = branches.iter().map(|g| g.adjugate()).collect();
    let scheme = MarkovScheme {
        system: sys.clone(),
        intervals,
        branches,
        branch_adj,
        transition: vec![vec![true; k]; k],
        labels,
    };
    scheme.verify_markov()?;
    Ok(scheme)
}

/// Schottky scheme: branch domains are the length-2 cylinders
/// I_(i,j) = g_i(I~_j) over admissible (i,j); T restricted acts by g_i^{-1},
/// and (i,j) -> (j', l) is allowed iff j' = j.
pub fn build_schottky_scheme(sys: &GeneratorSystem) -> Result<MarkovScheme> {
    let data = sys
        .schottky
        .as_ref()
        .ok_or_else(|| Error::Config("expected a Schottky system".into()))?;
    let p = data.generators.len();
    let mut intervals = Vec::new();
    let mut branches = Vec::new();
    let mut labels = Vec::new();
    let mut pair: Vec<(usize, usize)> = Vec::new();
    for i in 0..p {
        for j in 0..p {
            if !sys.admissible_pair(i, j) {
                continue;
            }
            let g = &data.generators[i];
            let lo = g
                .mobius_rational(&data.i_intervals[j].lo)
                .ok_or_else(|| Error::Config("cylinder endpoint hits pole".into()))?;
            let hi = g
                .mobius_rational(&data.i_intervals[j].hi)
                .ok_or_else(|| Error::Config("cylinder endpoint hits pole".into()))?;
            let (lo, hi) = if lo < hi { (lo, hi) } else { (hi, lo) };
            let cyl = RationalInterval::new(lo, hi)?;
            if !data.i_intervals[i].contains_interval(&cyl) {
                return Err(Error::Config(format!(
                    "cylinder ({},{}) escapes I~_{}",
                    i, j, i
                )));
            }
            intervals.push(cyl);
            branches.push(g.clone());
            labels.push(format!("{},{}", i, j));
            pair.push((i, j));
        }
    }
    let k = intervals.len();
    let mut transition = vec![vec![false; k]; k];
    for m in 0..k {
        for mp in 0..k {
            transition[m][mp] = pair[m].1 == pair[mp].0;
        }
    }
    let branch_adj = branches.iter().map(|g| g.adjugate()).collect();
    let scheme = MarkovScheme {
        system: sys.clone(),
        intervals,
        branches,
        branch_adj,
        transition,
        labels,
    };
    scheme.verify_markov()?;
    Ok(scheme)
}

pub fn build_scheme(sys: &GeneratorSystem) -> Result<MarkovScheme> {
    match sys.kind {
        SystemKind::ContinuedFraction => build_cf_scheme(sys),
        SystemKind::Schottky => build_schottky_scheme(sys),
    }
}

/// Certified expansion data: |( T^N )'| >= D^{-1} gamma^N, with N0 the first
/// level whose worst-case derivative exceeds 1.
#[derive(Clone, Debug)]
pub struct ExpansionCertificate {
    pub n0: usize,
    pub gamma_exp: f64,
    pub d_const: f64,
    /// min over length-N cylinders of |(T^N)'|, for N = 1..=sampled.
    pub level_mins: Vec<f64>,
}

/// Worst-case |(T^N)'| over the length-N cylinder of an admissible word:
/// for the composed branch M, |(T^N)'(Mx)| = (c x + d)^2 on the domain, so
/// the minimum over the domain endpoints is exact by monotonicity.
fn min_deriv_of_word(scheme: &MarkovScheme, word: &[usize]) -> f64 {
    let m = word
        .iter()
        .fold(IntMatrix2::identity(), |acc, &i| acc.mul(&scheme.branches[i]));
    let [_, _, c, d] = m.entries_f64();
    let last = *word.last().unwrap();
    let mut min = f64::INFINITY;
    for j in 0..scheme.k() {
        if !scheme.transition[last][j] {
            continue;
        }
        for x in [scheme.intervals[j].lo_f, scheme.intervals[j].hi_f] {
            let v = (c * x + d) * (c * x + d);
            if v < min {
                min = v;
            }
        }
    }
    min
}

fn min_deriv_at_level(scheme: &MarkovScheme, n: usize, budget: &mut usize) -> Result<f64> {
    let k = scheme.k();
    let mut min = f64::INFINITY;
    let mut word = Vec::with_capacity(n);
    fn rec(
        scheme: &MarkovScheme,
        word: &mut Vec<usize>,
        n: usize,
        min: &mut f64,
        budget: &mut usize,
    ) -> Result<()> {
        if word.len() == n {
            if *budget == 0 {
                return Err(Error::Certification("cylinder budget exhausted".into()));
            }
            *budget -= 1;
            let v = min_deriv_of_word(scheme, word);
            if v < *min {
                *min = v;
            }
            return Ok(());
        }
        for i in 0..scheme.k() {
            if let Some(&prev) = word.last() {
                if !scheme.transition[prev][i] {
                    continue;
                }
            }
            word.push(i);
            rec(scheme, word, n, min, budget)?;
            word.pop();
        }
        Ok(())
    }
    let _ = k;
    rec(scheme, &mut word, n, &mut min, budget)?;
    Ok(min)
}

pub fn certify_expansion(scheme: &MarkovScheme) -> Result<ExpansionCertificate> {
    let mut budget = 2_000_000usize;
    let mut level_mins = Vec::new();
    let mut n0 = None;
    for n in 1..=64 {
        let m = min_deriv_at_level(scheme, n, &mut budget)?;
        level_mins.push(m);
        if m > 1.0 {
            n0 = Some(n);
            break;
        }
    }
    let n0 =
        n0.ok_or_else(|| Error::Certification("no expanding level N0 <= 64 found".into()))?;
    // a couple of extra levels to pin down (D, gamma)
    for n in (n0 + 1)..=(n0 + 2).min(6) {
        if let Ok(m) = min_deriv_at_level(scheme, n, &mut budget) {
            level_mins.push(m);
        } else {
            break;
        }
    }
    let gamma_exp = level_mins[n0 - 1].powf(1.0 / n0 as f64);
    let mut d_const = 1.0f64;
    for (idx, &m) in level_mins.iter().enumerate() {
        let n = idx + 1;
        d_const = d_const.max(gamma_exp.powi(n as i32) / m);
    }
    Ok(ExpansionCertificate {
        n0,
        gamma_exp,
        d_const,
        level_mins,
    })
}

/// Certified eventual positivity of tau: a period N and eps0 > 0 with
/// tau^N >= eps0 on all length-N cylinders, plus a pointwise lower bound
/// for tau used to floor partial periods.
#[derive(Clone, Debug)]
pub struct PositivityCertificate {
    pub n: usize,
    pub eps0: f64,
    pub tau_min_lb: f64,
    /// Lower bound for any partial Birkhoff sum within one period (<= 0).
    pub floor: f64,
}

fn osc_log_jprime(scheme: &MarkovScheme) -> f64 {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for iv in &scheme.intervals {
        for x in [iv.lo_f, iv.hi_f] {
            let v = log_jprime(x);
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if iv.lo_f < 0.0 && iv.hi_f > 0.0 {
            hi = hi.max(log_jprime(0.0));
        }
    }
    hi - lo
}

pub fn certify_eventual_positivity(scheme: &MarkovScheme) -> Result<PositivityCertificate> {
    let osc = osc_log_jprime(scheme);
    let mut budget = 2_000_000usize;
    let m1 = min_deriv_at_level(scheme, 1, &mut budget)?;
    let tau_min_lb = m1.ln() - osc;
    for n in 1..=24 {
        let m = min_deriv_at_level(scheme, n, &mut budget)?;
        let eps0 = m.ln() - osc;
        if eps0 > 0.0 {
            let floor = (n as f64 - 1.0) * tau_min_lb.min(0.0);
            return Ok(PositivityCertificate {
                n,
                eps0,
                tau_min_lb,
                floor,
            });
        }
    }
    Err(Error::Certification(
        "no positive Birkhoff level <= 24 found".into(),
    ))
}

/// Contraction probe data: Euclidean distances d_E(gamma_l o, gamma_l k0)
/// for prefixes gamma_l of the word, l = 0..=L, plus the fitted geometric
/// decay (C, kappa) of the log-distances.
#[derive(Clone, Debug)]
pub struct ContractionProbe {
    pub distances: Vec<f64>,
    pub kappa: f64,
    pub c_const: f64,
    pub r_squared: f64,
}

pub fn contraction_probe(
    sys: &GeneratorSystem,
    word: &Word,
    k0: f64,
    len: usize,
) -> Result<ContractionProbe> {
    if word.len() < len {
        return Err(Error::Admissibility(format!(
            "word has {} letters, need {}",
            word.len(),
            len
        )));
    }
    if !sys.word_admissible(word) {
        return Err(Error::Admissibility("word not admissible".into()));
    }
    for l in 0..len {
        if !sys.k0_admissible(word.0[l] as usize, k0) {
            return Err(Error::Admissibility(format!(
                "k0 = {} lies in the blocked interval after letter {}",
                k0, l
            )));
        }
    }
    // |M z - M w| = |z - w| / (|cz + d| |cw + d|) for det M = +-1; with
    // z = i this avoids catastrophic cancellation at tiny distances.
    let base = (1.0 + k0 * k0).sqrt();
    let mut distances = vec![base];
    let mut m = IntMatrix2::identity();
    for l in 0..len {
        m = m.mul(&sys.letter_matrices()[word.0[l] as usize]);
        let [_, _, c, d] = m.entries_f64();
        let den_i = (c * c + d * d).sqrt();
        let den_k = (c * k0 + d).abs();
        distances.push(base / (den_i * den_k));
    }
    let xs: Vec<f64> = (0..=len).map(|l| l as f64).collect();
    let ys: Vec<f64> = distances.iter().map(|d| d.ln()).collect();
    let fit = crate::stats::fit_line(&xs, &ys)?;
    Ok(ContractionProbe {
        distances,
        kappa: fit.slope.exp(),
        c_const: fit.intercept.exp(),
        r_squared: fit.r_squared,
    })
}

/// Negatively-indexed admissible sequence, extended periodically into the
/// past: xi_{-i} = letters[i mod len].
#[derive(Clone, Debug)]
pub struct PastSequence(pub Vec<usize>);

impl PastSequence {
    fn letter(&self, i: usize) -> usize {
        self.0[i % self.0.len()]
    }

    fn validate(&self, scheme: &MarkovScheme) -> Result<()> {
        if self.0.is_empty() {
            return Err(Error::Admissibility("empty past sequence".into()));
        }
        let n = self.0.len();
        for i in 0..n {
            let next = self.letter(i + 1);
            let cur = self.letter(i);
            // T^{-1}_{xi_{-(i+1)}} must be defined on I_{xi_{-i}}
            if !scheme.transition[next][cur] {
                return Err(Error::Admissibility(format!(
                    "past sequence not admissible at step {}",
                    i
                )));
            }
        }
        Ok(())
    }
}

fn delta_series(
    scheme: &MarkovScheme,
    seq: &PastSequence,
    u: f64,
    v: f64,
    tol: f64,
    cert: &ExpansionCertificate,
    lip: f64,
) -> Result<f64> {
    let mut sum = 0.0;
    let mut pu = u;
    let mut pv = v;
    let geo = 1.0 / (1.0 - 1.0 / cert.gamma_exp);
    for i in 0..10_000usize {
        let b = seq.letter(i);
        pu = scheme.branches[b].mobius_f64(pu);
        pv = scheme.branches[b].mobius_f64(pv);
        sum += scheme.tau_on_branch(b, pu) - scheme.tau_on_branch(b, pv);
        let tail =
            lip * cert.d_const * (u - v).abs() * cert.gamma_exp.powi(-(i as i32 + 2)) * geo;
        if tail < tol {
            return Ok(sum);
        }
    }
    Err(Error::Tolerance(
        "temporal distance needs truncation depth > 10^4".into(),
    ))
}

/// Temporal distance phi_{xi,eta}(u,v) = Delta_xi(u,v) - Delta_eta(u,v),
/// truncated once the certified geometric tail bound drops below tol.
pub fn temporal_distance(
    scheme: &MarkovScheme,
    xi: &PastSequence,
    eta: &PastSequence,
    u: f64,
    v: f64,
    tol: f64,
) -> Result<f64> {
    xi.validate(scheme)?;
    eta.validate(scheme)?;
    let ju = scheme
        .locate(u)
        .ok_or_else(|| Error::Domain(format!("u = {} outside I", u)))?;
    let jv = scheme
        .locate(v)
        .ok_or_else(|| Error::Domain(format!("v = {} outside I", v)))?;
    if ju != jv {
        return Err(Error::Domain("u and v must lie in the same interval".into()));
    }
    for s in [xi, eta] {
        if !scheme.transition[s.0[0]][ju] {
            return Err(Error::Admissibility(
                "T(I_{xi_0}) does not contain the interval of u, v".into(),
            ));
        }
    }
    let cert = certify_expansion(scheme)?;
    let lip = scheme.lipschitz_tau();
    let a = delta_series(scheme, xi, u, v, tol / 2.0, &cert, lip)?;
    let b = delta_series(scheme, eta, u, v, tol / 2.0, &cert, lip)?;
    Ok(a - b)
}

/// Finite-difference probe for the non-local-integrability derivative
/// d(phi_{xi,eta})/du at (u0, v0); returns the Richardson-extrapolated value
/// and the step-halving discrepancy.
pub fn nli_derivative(
    scheme: &MarkovScheme,
    xi: &PastSequence,
    eta: &PastSequence,
    u0: f64,
    v0: f64,
    h: f64,
) -> Result<(f64, f64)> {
    let tol = 1e-12;
    let d = |hh: f64| -> Result<f64> {
        let a = temporal_distance(scheme, xi, eta, u0 + hh, v0, tol)?;
        let b = temporal_distance(scheme, xi, eta, u0 - hh, v0, tol)?;
        Ok((a - b) / (2.0 * hh))
    };
    let d1 = d(h)?;
    let d2 = d(h / 2.0)?;
    let rich = (4.0 * d2 - d1) / 3.0;
    Ok((rich, (d2 - d1).abs()))
}

/// A periodic orbit of T: cyclically admissible branch word and the exact
/// orbit points (each computed as a Möbius fixed point of a rotated word).
#[derive(Clone, Debug)]
pub struct PeriodicOrbit {
    pub word: Vec<usize>,
    pub points: Vec<f64>,
}

fn mobius_fixed_point_in(m: &IntMatrix2, iv: &RationalInterval) -> Option<f64> {
    let [a, b, c, d] = m.entries_f64();
    let roots: Vec<f64> = if c.abs() < 1e-300 {
        if (a - d).abs() < 1e-300 {
            return None;
        }
        vec![b / (d - a)]
    } else {
        let disc = (a - d) * (a - d) + 4.0 * b * c;
        if disc < 0.0 {
            return None;
        }
        let sq = disc.sqrt();
        vec![((a - d) + sq) / (2.0 * c), ((a - d) - sq) / (2.0 * c)]
    };
    roots
        .into_iter()
        .find(|&x| iv.contains_closed_f64(x, 1e-9))
}

/// All periodic orbits of period <= max_period, one per cyclic word
/// (rotations of a word give the same orbit and are emitted once, anchored
/// at the lexicographically smallest rotation).
pub fn periodic_orbits(scheme: &MarkovScheme, max_period: usize) -> Vec<PeriodicOrbit> {
    let k = scheme.k();
    let mut out = Vec::new();
    let mut word: Vec<usize> = Vec::new();
    fn rec(scheme: &MarkovScheme, word: &mut Vec<usize>, n: usize, out: &mut Vec<PeriodicOrbit>) {
        if word.len() == n {
            // cyclic admissibility and canonical rotation
            if !scheme.transition[word[n - 1]][word[0]] {
                return;
            }
            let mut min_rot = word.clone();
            for r in 1..n {
                let rot: Vec<usize> = (0..n).map(|t| word[(t + r) % n]).collect();
                if rot < min_rot {
                    min_rot = rot;
                }
            }
            if &min_rot != word {
                return;
            }
            // orbit point j: fixed point of the branch word rotated to start
            // at position j; it lies in I_{word[j]}.
            let mut points = Vec::with_capacity(n);
            for j in 0..n {
                let m = (0..n)
                    .map(|t| word[(j + t) % n])
                    .fold(IntMatrix2::identity(), |acc, i| {
                        acc.mul(&scheme.branches[i])
                    });
                match mobius_fixed_point_in(&m, &scheme.intervals[word[j]]) {
                    Some(x) => points.push(x),
                    None => return,
                }
            }
            out.push(PeriodicOrbit {
                word: word.clone(),
                points,
            });
            return;
        }
        for i in 0..scheme.k() {
            if let Some(&prev) = word.last() {
                if !scheme.transition[prev][i] {
                    continue;
                }
            }
            word.push(i);
            rec(scheme, word, n, out);
            word.pop();
        }
    }
    for n in 1..=max_period {
        rec(scheme, &mut word, n, &mut out);
    }
    let _ = k;
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    fn cf12() -> MarkovScheme {
        build_cf_scheme(&GeneratorSystem::continued_fraction(&[1, 2]).unwrap()).unwrap()
    }

    #[test]
    fn cf_scheme_intervals_are_block_images() {
        let s = cf12();
        assert_eq!(s.k(), 4);
        // I_A = [1/3, 1]; I_{1,1} = g1 g1 I_A
        let block = IntMatrix2::new(1, 1, 1, 2);
        let lo = block
            .mobius_rational(&BigRational::new(BigInt::from(1), BigInt::from(3)))
            .unwrap();
        let hi = block
            .mobius_rational(&BigRational::from(BigInt::from(1)))
            .unwrap();
        let (lo, hi) = if lo < hi { (lo, hi) } else { (hi, lo) };
        assert_eq!(s.intervals[0].lo, lo);
        assert_eq!(s.intervals[0].hi, hi);
        // every interval sits inside I_a = [1/(a+1), 1/(a + 1/(A+1))]
        // spot check I_{1,1} inside I_1 = [1/2, 3/4]
        assert!(s.intervals[0].lo_f >= 0.5 && s.intervals[0].hi_f <= 0.75);
    }

    #[test]
    fn cf_five_letter_cylinders_disjoint() {
        let sys = GeneratorSystem::continued_fraction(&[1, 2, 3, 4, 5]).unwrap();
        let s = build_cf_scheme(&sys).unwrap();
        assert_eq!(s.k(), 25);
        for i in 0..25 {
            for j in (i + 1)..25 {
                assert!(s.intervals[i].disjoint(&s.intervals[j]));
            }
        }
    }

    #[test]
    fn branch_inversion_round_trip() {
        let s = cf12();
        let mut x: f64 = 0.402;
        for _ in 0..200 {
            x = 3.9 * x * (1.0 - x); // just a scrambler for test points
            let t = x.fract().abs().clamp(0.01, 0.99);
            if let Some(j) = s.locate(0.34 + 0.6 * t * 0.9) {
                let p = 0.34 + 0.6 * t * 0.9;
                for (i, y) in s.inverse_branches(p).unwrap() {
                    assert!((s.apply_t_on_branch(i, y) - p).abs() < 1e-13);
                    assert_eq!(s.locate(y), Some(i));
                }
                let _ = j;
            }
        }
    }

    #[test]
    fn cf_inverse_branch_count_is_full() {
        let s = cf12();
        let x = s.intervals[2].midpoint_f64();
        assert_eq!(s.inverse_branches(x).unwrap().len(), 4);
    }

    #[test]
    fn triangular_fixed_point() {
        // c = 0 branch: (2x + 1)/1 = x at x = -1
        let m = IntMatrix2::new(2, 1, 0, 1);
        let iv = RationalInterval::from_i64((-3, 2), (-1, 2));
        assert_eq!(mobius_fixed_point_in(&m, &iv), Some(-1.0));
    }

    #[test]
    fn golden_ratio_fixed_point() {
        let s = cf12();
        // fixed point of T on I_{1,1}: x = 1/(1 + 1/(1 + x)), x = (sqrt5-1)/2
        let m = &s.branches[0];
        let x = mobius_fixed_point_in(m, &s.intervals[0]).unwrap();
        assert!((x - 0.6180339887498949).abs() < 1e-12);
    }

    #[test]
    fn tau_positive_and_chain_rule() {
        let s = cf12();
        for i in 0..s.k() {
            let iv = &s.intervals[i];
            for t in [0.0, 0.3, 0.7, 1.0] {
                let y = iv.lo_f + t * (iv.hi_f - iv.lo_f);
                let th = s.tau_hat_on_branch(i, y);
                assert!(th > 0.0, "tau_hat must be positive for CF schemes");
                // tau_hat(y) = -log |branch'(Ty)|
                let ty = s.apply_t_on_branch(i, y);
                let back = -s.branches[i].mobius_deriv(ty).abs().ln();
                assert!((th - back).abs() < 1e-10);
            }
        }
        // derivative bound |T'| >= (1 + (1+A)^{-1})^4 for blocks
        let bound = (1.0_f64 + 1.0 / 3.0).powi(4);
        let cert = certify_expansion(&s).unwrap();
        assert_eq!(cert.n0, 1);
        assert!(cert.level_mins[0] >= bound - 1e-9);
        assert!(cert.gamma_exp > 1.0);
    }

    #[test]
    fn tau_deriv_matches_finite_difference() {
        let s = cf12();
        let i = 1;
        let y = s.intervals[i].midpoint_f64();
        let h = 1e-6;
        let fd = (s.tau_on_branch(i, y + h) - s.tau_on_branch(i, y - h)) / (2.0 * h);
        assert!((fd - s.tau_deriv_on_branch(i, y)).abs() < 1e-6);
    }

    #[test]
    fn schottky_scheme_builds_and_expands() {
        let sys = GeneratorSystem::sample_schottky(0).unwrap();
        let s = build_schottky_scheme(&sys).unwrap();
        assert_eq!(s.k(), 4); // no inverses: all 4 pairs admissible
        let ones: usize = s
            .transition
            .iter()
            .flat_map(|r| r.iter())
            .filter(|&&b| b)
            .count();
        assert_eq!(ones, 8); // (i,j) -> (j,l): 2 choices of l each
        let cert = certify_expansion(&s).unwrap();
        assert_eq!(cert.n0, 1);
        // group case: A[i][j] = 0 exactly when j's first letter undoes i's second
        let grp = GeneratorSystem::sample_schottky(2).unwrap();
        let sg = build_schottky_scheme(&grp).unwrap();
        assert_eq!(sg.k(), 12);
        for m in 0..sg.k() {
            for mp in 0..sg.k() {
                let (i, j) = {
                    let parts: Vec<usize> = sg.labels[m]
                        .split(',')
                        .map(|t| t.parse().unwrap())
                        .collect();
                    (parts[0], parts[1])
                };
                let (jp, _lp) = {
                    let parts: Vec<usize> = sg.labels[mp]
                        .split(',')
                        .map(|t| t.parse().unwrap())
                        .collect();
                    (parts[0], parts[1])
                };
                let _ = i;
                assert_eq!(sg.transition[m][mp], j == jp);
            }
        }
    }

    #[test]
    fn cylinder_endpoints_are_mobius_images() {
        let sys = GeneratorSystem::sample_schottky(0).unwrap();
        let data = sys.schottky.as_ref().unwrap();
        let s = build_schottky_scheme(&sys).unwrap();
        // first cylinder is (0,0): g_0(I~_0)
        let g = &data.generators[0];
        let e1 = g.mobius_rational(&data.i_intervals[0].lo).unwrap();
        let e2 = g.mobius_rational(&data.i_intervals[0].hi).unwrap();
        let (lo, hi) = if e1 < e2 { (e1, e2) } else { (e2, e1) };
        assert_eq!(s.intervals[0].lo, lo);
        assert_eq!(s.intervals[0].hi, hi);
    }

    #[test]
    fn cohomology_on_periodic_orbits() {
        let s = cf12();
        let orbits = periodic_orbits(&s, 6);
        assert!(orbits.len() > 100);
        for orb in &orbits {
            let n = orb.word.len();
            let mut sum_tau = 0.0;
            let mut sum_tau_hat = 0.0;
            for j in 0..n {
                let i = orb.word[j];
                let x = orb.points[j];
                sum_tau += s.tau_on_branch(i, x);
                sum_tau_hat += s.tau_hat_on_branch(i, x);
                // the orbit is consistent: T maps point j to point j+1
                let tx = s.apply_t_on_branch(i, x);
                assert!((tx - orb.points[(j + 1) % n]).abs() < 1e-8);
            }
            assert!(
                (sum_tau - sum_tau_hat).abs() < 1e-9,
                "cohomology telescope failed on {:?}",
                orb.word
            );
        }
    }

    #[test]
    fn eventual_positivity_certificates() {
        let s = cf12();
        let c = certify_eventual_positivity(&s).unwrap();
        assert_eq!(c.n, 1);
        assert!(c.eps0 > 0.0);
        let sys = GeneratorSystem::sample_schottky(2).unwrap();
        let s = build_schottky_scheme(&sys).unwrap();
        let c = certify_eventual_positivity(&s).unwrap();
        assert!(c.eps0 > 0.0);
        assert!(c.floor <= 0.0);
    }

    #[test]
    fn contraction_probe_fits_geometric_decay() {
        let sys = GeneratorSystem::continued_fraction(&[1, 2]).unwrap();
        let letters: Vec<u16> = (0..30).map(|i| ((i * 7 + 3) % 4) as u16).collect();
        let word = Word(letters);
        let k0 = 0.52; // inside I_{1,1}
        let probe = contraction_probe(&sys, &word, k0, 30).unwrap();
        assert!(probe.kappa < 1.0);
        assert!(probe.r_squared > 0.99);
        // doubling the length roughly squares the distance ratio
        let r10 = probe.distances[10] / probe.distances[0];
        let r20 = probe.distances[20] / probe.distances[0];
        assert!((r20.ln() / r10.ln() - 2.0).abs() < 0.35);
    }

    #[test]
    fn temporal_distance_degenerate_cases() {
        let s = cf12();
        let xi = PastSequence(vec![0]);
        let eta = PastSequence(vec![3]);
        let u = s.intervals[1].midpoint_f64();
        let v = u + 0.01;
        assert_eq!(temporal_distance(&s, &xi, &xi, u, v, 1e-10).unwrap(), 0.0);
        assert_eq!(temporal_distance(&s, &xi, &eta, u, u, 1e-10).unwrap(), 0.0);
        let phi = temporal_distance(&s, &xi, &eta, u, v, 1e-10).unwrap();
        assert!(phi.is_finite());
    }

    #[test]
    fn nli_probe_nonvanishing() {
        let s = cf12();
        let xi = PastSequence(vec![0]); // ...,(1,1),(1,1)
        let eta = PastSequence(vec![3]); // ...,(2,2),(2,2)
        // u0: golden-type point in I_{1,1}; v0: another limit point of I_{1,1}
        let u0 = mobius_fixed_point_in(&s.branches[0], &s.intervals[0]).unwrap();
        let m = s.branches[0].mul(&s.branches[3]);
        let v0 = mobius_fixed_point_in(&m, &s.intervals[0]).unwrap();
        assert!(u0 != v0);
        let (d, err) = nli_derivative(&s, &xi, &eta, u0, v0, 1e-4).unwrap();
        assert!(d.abs() > 1e-3, "NLI derivative too small: {}", d);
        assert!(err < d.abs() * 0.1);
    }

    #[test]
    fn scheme_describe_matches_golden_text() {
        // endpoints verified by hand as exact block images of [1/3, 1]
        let golden = "\
interval 0 [1,1] = [4/7, 2/3]
branch 0 = (1 1; 1 2)
interval 1 [1,2] = [7/10, 3/4]
branch 1 = (1 2; 1 3)
interval 2 [2,1] = [4/11, 2/5]
branch 2 = (1 1; 2 3)
interval 3 [2,2] = [7/17, 3/7]
branch 3 = (1 2; 2 5)
transition =
1111
1111
1111
1111
";
        assert_eq!(cf12().describe(), golden);
    }
}
