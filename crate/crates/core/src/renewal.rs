//! Orbit-counting functions N(a,x) and their congruence versions, the
//! renewal identities they satisfy exactly, and the Laplace-side
//! cross-check s n(s,.) = (1 - L_s)^{-1} g.
//!
//! All sums are finite thanks to eventual positivity of tau; the tree walk
//! prunes with a certified Birkhoff lower bound, so pruning never drops a
//! contributing node.

use crate::congruence::{reduce_mod, GroupTable};
use crate::dynamics::{certify_eventual_positivity, MarkovScheme, PositivityCertificate};
use crate::error::{Error, Result};
use crate::linalg;
use crate::thermo::{assemble, assembly_data, Flavor};
use num_complex::Complex64;
use std::collections::HashMap;

/// Test functions on I: constant, or locally constant on depth-M cylinders
/// (keyed by the branch itinerary; points whose orbit leaves I before depth
/// M fall back to `default`).
#[derive(Clone, Debug)]
pub enum TestFn {
    Constant(f64),
    CylinderConstant {
        depth: usize,
        values: HashMap<Vec<u16>, f64>,
        default: f64,
    },
}

impl TestFn {
    pub fn one() -> Self {
        TestFn::Constant(1.0)
    }

    pub fn eval(&self, scheme: &MarkovScheme, x: f64) -> f64 {
        match self {
            TestFn::Constant(c) => *c,
            TestFn::CylinderConstant {
                depth,
                values,
                default,
            } => {
                let mut word = Vec::with_capacity(*depth);
                let mut p = x;
                for _ in 0..*depth {
                    match scheme.locate(p) {
                        Some(i) => {
                            word.push(i as u16);
                            p = scheme.apply_t_on_branch(i, p);
                        }
                        None => return *default,
                    }
                }
                *values.get(&word).unwrap_or(default)
            }
        }
    }
}

/// Counting context: scheme plus the cached positivity certificate.
pub struct Renewal<'a> {
    pub scheme: &'a MarkovScheme,
    pub cert: PositivityCertificate,
}

const NODE_BUDGET: usize = 200_000_000;

impl<'a> Renewal<'a> {
    pub fn new(scheme: &'a MarkovScheme) -> Result<Self> {
        let cert = certify_eventual_positivity(scheme)?;
        Ok(Renewal { scheme, cert })
    }

    /// N(a,x) = sum_n sum_{T^n y = x} g(y) 1{tau^n(y) <= a}.
    pub fn n_count(&self, a: f64, x: f64, g: &TestFn) -> Result<f64> {
        self.n_count_slack(a, x, g, 0.0)
    }

    /// Same walk with the prune threshold loosened by `slack` >= 0; the
    /// result is unchanged, tests use it as the near-unpruned oracle.
    pub fn n_count_slack(&self, a: f64, x: f64, g: &TestFn, slack: f64) -> Result<f64> {
        let j = self
            .scheme
            .locate(x)
            .ok_or_else(|| Error::Domain(format!("x = {} outside I", x)))?;
        let mut total = if a >= 0.0 { g.eval(self.scheme, x) } else { 0.0 };
        let mut budget = NODE_BUDGET;
        self.walk_scalar(a, x, j, 0.0, g, slack, &mut total, &mut budget)?;
        Ok(total)
    }

    #[allow(clippy::too_many_arguments)]
    fn walk_scalar(
        &self,
        a: f64,
        x: f64,
        j: usize,
        partial: f64,
        g: &TestFn,
        slack: f64,
        total: &mut f64,
        budget: &mut usize,
    ) -> Result<()> {
        for i in self.scheme.branches_into(j) {
            if *budget == 0 {
                return Err(Error::Resource("n_count node budget exhausted".into()));
            }
            *budget -= 1;
            let y = self.scheme.branches[i].mobius_f64(x);
            let s = partial + self.scheme.tau_on_branch(i, y);
            // every descendant Birkhoff sum is >= s + floor
            if s + self.cert.floor > a + slack {
                continue;
            }
            if s <= a {
                *total += g.eval(self.scheme, y);
            }
            self.walk_scalar(a, y, i, s, g, slack, total, budget)?;
        }
        Ok(())
    }

    /// Congruence version: a vector over SL2(Z/q), with each contribution
    /// rho(c_q^n(y)) phi.
    pub fn n_count_congruence(
        &self,
        table: &GroupTable,
        a: f64,
        x: f64,
        g: &TestFn,
        phi: &[f64],
    ) -> Result<Vec<f64>> {
        let q = table.q;
        let ng = table.len();
        if phi.len() != ng {
            return Err(Error::Config("phi length must equal |SL2(Z/q)|".into()));
        }
        let j = self
            .scheme
            .locate(x)
            .ok_or_else(|| Error::Domain(format!("x = {} outside I", x)))?;
        let mut out = vec![0.0; ng];
        if a >= 0.0 {
            let gx = g.eval(self.scheme, x);
            for (o, p) in out.iter_mut().zip(phi.iter()) {
                *o += gx * p;
            }
        }
        let mut budget = NODE_BUDGET;
        let e = crate::congruence::ResidueMatrix::identity(q);
        self.walk_congruence(table, a, x, j, 0.0, e, g, phi, &mut out, &mut budget)?;
        Ok(out)
    }

    #[allow(clippy::too_many_arguments)]
    fn walk_congruence(
        &self,
        table: &GroupTable,
        a: f64,
        x: f64,
        j: usize,
        partial: f64,
        cocycle: crate::congruence::ResidueMatrix,
        g: &TestFn,
        phi: &[f64],
        out: &mut [f64],
        budget: &mut usize,
    ) -> Result<()> {
        let q = table.q;
        for i in self.scheme.branches_into(j) {
            if *budget == 0 {
                return Err(Error::Resource("n_count node budget exhausted".into()));
            }
            *budget -= 1;
            let y = self.scheme.branches[i].mobius_f64(x);
            let s = partial + self.scheme.tau_on_branch(i, y);
            if s + self.cert.floor > a {
                continue;
            }
            // c_q^{n+1}(y) = c_q^n(Ty) . c_q(y): the deeper cocycle extends
            // on the right by the branch residue
            let c = cocycle.mul(&reduce_mod(&self.scheme.branches[i], q));
            if s <= a {
                let gy = g.eval(self.scheme, y);
                if gy != 0.0 {
                    // (rho(c) phi)(h) = phi(h c)
                    for (h, slot) in out.iter_mut().enumerate() {
                        let hc = table.elements[h].mul(&c);
                        *slot += gy * phi[table.index_of(&hc) as usize];
                    }
                }
            }
            self.walk_congruence(table, a, y, i, s, c, g, phi, out, budget)?;
        }
        Ok(())
    }

    /// |N(a,x) - sum_{Ty=x} N(a - tau(y), y) - g(x) 1{a>=0}|, both sides
    /// evaluated independently.
    pub fn renewal_residual(&self, a: f64, x: f64, g: &TestFn) -> Result<f64> {
        let lhs = self.n_count(a, x, g)?;
        let mut rhs = if a >= 0.0 { g.eval(self.scheme, x) } else { 0.0 };
        for (i, y) in self.scheme.inverse_branches(x)? {
            let tau = self.scheme.tau_on_branch(i, y);
            rhs += self.n_count(a - tau, y, g)?;
        }
        Ok((lhs - rhs).abs())
    }

    /// Vector residual of the congruence renewal identity, sup norm.
    pub fn renewal_residual_congruence(
        &self,
        table: &GroupTable,
        a: f64,
        x: f64,
        g: &TestFn,
        phi: &[f64],
    ) -> Result<f64> {
        let q = table.q;
        let lhs = self.n_count_congruence(table, a, x, g, phi)?;
        let ng = table.len();
        let mut rhs = vec![0.0; ng];
        if a >= 0.0 {
            let gx = g.eval(self.scheme, x);
            for (o, p) in rhs.iter_mut().zip(phi.iter()) {
                *o += gx * p;
            }
        }
        for (i, y) in self.scheme.inverse_branches(x)? {
            let tau = self.scheme.tau_on_branch(i, y);
            let sub = self.n_count_congruence(table, a - tau, y, g, phi)?;
            let c = reduce_mod(&self.scheme.branches[i], q);
            for (h, slot) in rhs.iter_mut().enumerate() {
                let hc = table.elements[h].mul(&c);
                *slot += sub[table.index_of(&hc) as usize];
            }
        }
        Ok(lhs
            .iter()
            .zip(&rhs)
            .map(|(l, r)| (l - r).abs())
            .fold(0.0, f64::max))
    }

    /// Level sums l_n = sum_{T^n y = x} g(y) e^{-s tau^n(y)} for n <= depth.
    fn level_sums(&self, s: f64, x: f64, g: &TestFn, depth: usize) -> Result<Vec<f64>> {
        let j = self
            .scheme
            .locate(x)
            .ok_or_else(|| Error::Domain(format!("x = {} outside I", x)))?;
        let mut levels = vec![0.0; depth + 1];
        levels[0] = g.eval(self.scheme, x);
        let mut budget = NODE_BUDGET;
        self.walk_levels(s, x, j, 0.0, 0, g, depth, &mut levels, &mut budget)?;
        Ok(levels)
    }

    #[allow(clippy::too_many_arguments)]
    fn walk_levels(
        &self,
        s: f64,
        x: f64,
        j: usize,
        partial: f64,
        depth: usize,
        g: &TestFn,
        max_depth: usize,
        levels: &mut [f64],
        budget: &mut usize,
    ) -> Result<()> {
        if depth == max_depth {
            return Ok(());
        }
        for i in self.scheme.branches_into(j) {
            if *budget == 0 {
                return Err(Error::Resource("poincare node budget exhausted".into()));
            }
            *budget -= 1;
            let y = self.scheme.branches[i].mobius_f64(x);
            let sum = partial + self.scheme.tau_on_branch(i, y);
            levels[depth + 1] += g.eval(self.scheme, y) * (-s * sum).exp();
            self.walk_levels(s, y, i, sum, depth + 1, g, max_depth, levels, budget)?;
        }
        Ok(())
    }

    /// Poincare series sum_n sum_{T^n y = x} g(y) e^{-s tau^n(y)} = s n(s,x).
    /// Levels are summed to `depth` and the geometric tail is completed from
    /// the measured level ratio; the completion error is quadratically
    /// smaller than the last level.
    pub fn poincare_series(&self, s: f64, x: f64, g: &TestFn, depth: usize) -> Result<f64> {
        if depth < 6 {
            return Err(Error::Config("poincare depth must be >= 6".into()));
        }
        let levels = self.level_sums(s, x, g, depth)?;
        let head: f64 = levels.iter().sum();
        let last = levels[depth];
        if last == 0.0 {
            return Ok(head);
        }
        // ratio from the last few levels
        let window = 4.min(depth - 1);
        let r = (levels[depth] / levels[depth - window]).powf(1.0 / window as f64);
        if !(0.0..1.0).contains(&r) {
            return Err(Error::Convergence(format!(
                "level ratio {} >= 1: lambda(s) not below 1 at s = {}",
                r, s
            )));
        }
        Ok(head + last * r / (1.0 - r))
    }
}

/// Solve (1 - L_s) v = g on the collocation grid and compare with the
/// independently summed Poincare series at x; returns the residual.
pub fn resolvent_cross_check(
    scheme: &MarkovScheme,
    s: f64,
    x: f64,
    resolution: usize,
) -> Result<f64> {
    let renewal = Renewal::new(scheme)?;
    let g = TestFn::one();
    // pick the depth from the branching factor so the walk stays within
    // budget while the completed tail sits well under the target accuracy
    let branches = scheme.k().max(2);
    let depth = ((NODE_BUDGET / 8) as f64).ln() / (branches as f64).ln();
    let depth = (depth.floor() as usize).clamp(6, 14);
    let series = renewal.poincare_series(s, x, &g, depth)?;

    let op = assemble(scheme, Complex64::new(s, 0.0), resolution, Flavor::Collocation)?;
    let n = op.dim();
    let lambda = crate::thermo::rpf(&op)?.lambda;
    if lambda >= 1.0 {
        return Err(Error::Convergence(format!(
            "lambda(s) = {} >= 1 at s = {}",
            lambda, s
        )));
    }
    let m = op.dense_real().expect("collocation matrix is dense");
    let mut sys = vec![0.0; n * n];
    for r in 0..n {
        for c in 0..n {
            sys[r * n + c] = (if r == c { 1.0 } else { 0.0 }) - m[r * n + c];
        }
    }
    let mut rhs = vec![1.0; n];
    linalg::lu_solve(&mut sys, &mut rhs, n)?;
    let data = assembly_data(scheme, resolution, Flavor::Collocation)?;
    let j = scheme
        .locate(x)
        .ok_or_else(|| Error::Domain(format!("x = {} outside I", x)))?;
    let v_at_x = data.grid.interp_at(&rhs, j, x);
    Ok((series - v_at_x).abs())
}
