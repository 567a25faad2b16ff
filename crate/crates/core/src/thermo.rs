//! Discretized transfer operators L_s = L_{-s tau}, their
//! Ruelle-Perron-Frobenius data, pressure, the Hausdorff dimension of the
//! limit set via Bowen's equation P(-s tau) = 0, and the normalized family
//! L_a with L_a 1 = 1.
//!
//! Two discretizations are kept deliberately separate: Chebyshev collocation
//! with barycentric interpolation (spectral accuracy, the workhorse) and a
//! midpoint Ulam scheme on a uniform partition (first-principles oracle).

use crate::cheb;
use crate::dynamics::MarkovScheme;
use crate::error::{Error, Result};
use crate::linalg;
use num_complex::Complex64;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Flavor {
    Collocation,
    Ulam,
}

/// Grid geometry shared by both flavors: `resolution` nodes (or cells) per
/// branch interval, flattened interval-major.
#[derive(Clone, Debug)]
pub struct Grid {
    pub resolution: usize,
    pub flavor: Flavor,
    /// Node (or cell midpoint) coordinates, flattened.
    pub points: Vec<f64>,
    /// Interval index per flattened point.
    pub interval_of: Vec<usize>,
    /// Per-interval node list (collocation) for interpolation.
    nodes_per_interval: Vec<Vec<f64>>,
    bary: Vec<f64>,
}

impl Grid {
    fn build(scheme: &MarkovScheme, resolution: usize, flavor: Flavor) -> Grid {
        let k = scheme.k();
        let mut points = Vec::with_capacity(k * resolution);
        let mut interval_of = Vec::with_capacity(k * resolution);
        let mut nodes_per_interval = Vec::with_capacity(k);
        for (i, iv) in scheme.intervals.iter().enumerate() {
            let nodes = match flavor {
                Flavor::Collocation => cheb::lobatto_nodes(iv.lo_f, iv.hi_f, resolution),
                Flavor::Ulam => {
                    let w = iv.width_f64() / resolution as f64;
                    (0..resolution)
                        .map(|c| iv.lo_f + (c as f64 + 0.5) * w)
                        .collect()
                }
            };
            points.extend_from_slice(&nodes);
            interval_of.extend(std::iter::repeat_n(i, resolution));
            nodes_per_interval.push(nodes);
        }
        Grid {
            resolution,
            flavor,
            points,
            interval_of,
            nodes_per_interval,
            bary: cheb::bary_weights(resolution),
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Interpolation row for a point y in interval i (collocation flavor).
    pub fn interp_row(&self, i: usize, y: f64) -> Vec<f64> {
        cheb::interp_row(&self.nodes_per_interval[i], &self.bary, y)
    }

    /// Interpolate a flattened grid function at y in interval i.
    pub fn interp_at(&self, values: &[f64], i: usize, y: f64) -> f64 {
        match self.flavor {
            Flavor::Collocation => {
                let row = self.interp_row(i, y);
                let base = i * self.resolution;
                row.iter()
                    .enumerate()
                    .map(|(m, r)| r * values[base + m])
                    .sum()
            }
            Flavor::Ulam => values[self.cell_index(i, y)],
        }
    }

    fn cell_index(&self, i: usize, y: f64) -> usize {
        let lo = self.nodes_per_interval[i][0] - 0.5 * self.cell_width(i);
        let w = self.cell_width(i);
        let c = ((y - lo) / w).floor() as isize;
        let c = c.clamp(0, self.resolution as isize - 1) as usize;
        i * self.resolution + c
    }

    fn cell_width(&self, i: usize) -> f64 {
        self.nodes_per_interval[i][1] - self.nodes_per_interval[i][0]
    }
}

/// One inverse-branch contribution to an output node: the branch index,
/// the distortion at the preimage, and the interpolation stencil.
#[derive(Clone, Debug)]
pub struct BranchStencil {
    pub branch: usize,
    pub tau: f64,
    pub preimage: f64,
    pub cols: Vec<(u32, f64)>,
}

/// s-independent assembly data: for each output point the contributing
/// branches with their distortion value and interpolation stencil.
#[derive(Clone, Debug)]
pub struct AssemblyData {
    pub grid: Grid,
    pub rows: Vec<Vec<BranchStencil>>,
}

pub fn assembly_data(scheme: &MarkovScheme, resolution: usize, flavor: Flavor) -> Result<AssemblyData> {
    if resolution < 4 {
        return Err(Error::Config("resolution must be >= 4".into()));
    }
    if flavor == Flavor::Ulam && resolution < 64 {
        return Err(Error::Config("Ulam flavor needs resolution >= 64".into()));
    }
    let grid = Grid::build(scheme, resolution, flavor);
    // rows are independent; build them in parallel, collected in order
    use rayon::prelude::*;
    let rows: Result<Vec<Vec<BranchStencil>>> = (0..grid.len())
        .into_par_iter()
        .map(|p| {
            let j = grid.interval_of[p];
            let x = grid.points[p];
            let mut row = Vec::new();
            for i in scheme.branches_into(j) {
                let y = scheme.branches[i].mobius_f64(x);
                if !scheme.intervals[i].contains_closed_f64(y, 1e-12) {
                    return Err(Error::Domain(format!(
                        "branch image {} falls outside I_{}",
                        y, i
                    )));
                }
                let tau = scheme.tau_on_branch(i, y);
                let cols: Vec<(u32, f64)> = match flavor {
                    Flavor::Collocation => {
                        let r = grid.interp_row(i, y);
                        let base = (i * resolution) as u32;
                        r.into_iter()
                            .enumerate()
                            .filter(|(_, c)| *c != 0.0)
                            .map(|(m, c)| (base + m as u32, c))
                            .collect()
                    }
                    Flavor::Ulam => vec![(grid.cell_index(i, y) as u32, 1.0)],
                };
                row.push(BranchStencil {
                    branch: i,
                    tau,
                    preimage: y,
                    cols,
                });
            }
            Ok(row)
        })
        .collect();
    Ok(AssemblyData { grid, rows: rows? })
}

enum MatrixRepr {
    DenseReal(Vec<f64>),
    DenseComplex(Vec<Complex64>),
    SparseReal(Vec<Vec<(u32, f64)>>),
}

/// Finite matrix approximating the transfer operator L_{-s tau} on the grid.
pub struct DiscretizedOperator {
    pub scheme: MarkovScheme,
    pub s: Complex64,
    pub resolution: usize,
    pub flavor: Flavor,
    pub grid: Grid,
    matrix: MatrixRepr,
}

impl DiscretizedOperator {
    pub fn dim(&self) -> usize {
        self.grid.len()
    }

    pub fn apply_real(&self, v: &[f64], out: &mut [f64]) {
        let n = self.dim();
        match &self.matrix {
            MatrixRepr::DenseReal(m) => {
                for (r, o) in out.iter_mut().enumerate() {
                    *o = linalg::dot(&m[r * n..(r + 1) * n], v);
                }
            }
            MatrixRepr::SparseReal(rows) => {
                for (r, o) in out.iter_mut().enumerate() {
                    *o = rows[r].iter().map(|&(c, w)| w * v[c as usize]).sum();
                }
            }
            MatrixRepr::DenseComplex(_) => panic!("complex operator applied to real vector"),
        }
    }

    pub fn apply_transpose_real(&self, v: &[f64], out: &mut [f64]) {
        let n = self.dim();
        out.iter_mut().for_each(|o| *o = 0.0);
        match &self.matrix {
            MatrixRepr::DenseReal(m) => {
                for r in 0..n {
                    let vr = v[r];
                    if vr == 0.0 {
                        continue;
                    }
                    for c in 0..n {
                        out[c] += m[r * n + c] * vr;
                    }
                }
            }
            MatrixRepr::SparseReal(rows) => {
                for (r, row) in rows.iter().enumerate() {
                    for &(c, w) in row {
                        out[c as usize] += w * v[r];
                    }
                }
            }
            MatrixRepr::DenseComplex(_) => panic!("complex operator applied to real vector"),
        }
    }

    pub fn dense_real(&self) -> Option<&[f64]> {
        match &self.matrix {
            MatrixRepr::DenseReal(m) => Some(m),
            _ => None,
        }
    }

    pub fn apply_complex(&self, v: &[Complex64], out: &mut [Complex64]) {
        let n = self.dim();
        match &self.matrix {
            MatrixRepr::DenseComplex(m) => {
                for (r, o) in out.iter_mut().enumerate() {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for c in 0..n {
                        acc += m[r * n + c] * v[c];
                    }
                    *o = acc;
                }
            }
            MatrixRepr::DenseReal(m) => {
                for (r, o) in out.iter_mut().enumerate() {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for c in 0..n {
                        acc += v[c] * m[r * n + c];
                    }
                    *o = acc;
                }
            }
            MatrixRepr::SparseReal(rows) => {
                for (r, o) in out.iter_mut().enumerate() {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for &(c, w) in &rows[r] {
                        acc += v[c as usize] * w;
                    }
                    *o = acc;
                }
            }
        }
    }
}

fn build_operator(data: &AssemblyData, scheme: &MarkovScheme, s: Complex64) -> DiscretizedOperator {
    let n = data.grid.len();
    let matrix = if s.im == 0.0 {
        match data.grid.flavor {
            Flavor::Collocation => {
                let mut m = vec![0.0f64; n * n];
                for (p, row) in data.rows.iter().enumerate() {
                    for st in row {
                        let w = (-s.re * st.tau).exp();
                        for &(c, coeff) in &st.cols {
                            m[p * n + c as usize] += w * coeff;
                        }
                    }
                }
                MatrixRepr::DenseReal(m)
            }
            Flavor::Ulam => {
                let rows = data
                    .rows
                    .iter()
                    .map(|row| {
                        row.iter()
                            .map(|st| ((-s.re * st.tau).exp(), st.cols[0].0))
                            .map(|(w, c)| (c, w))
                            .collect()
                    })
                    .collect();
                MatrixRepr::SparseReal(rows)
            }
        }
    } else {
        let mut m = vec![Complex64::new(0.0, 0.0); n * n];
        for (p, row) in data.rows.iter().enumerate() {
            for st in row {
                let w = (-s * st.tau).exp();
                for &(c, coeff) in &st.cols {
                    m[p * n + c as usize] += w * coeff;
                }
            }
        }
        MatrixRepr::DenseComplex(m)
    };
    DiscretizedOperator {
        scheme: scheme.clone(),
        s,
        resolution: data.grid.resolution,
        flavor: data.grid.flavor,
        grid: data.grid.clone(),
        matrix,
    }
}

pub fn assemble(
    scheme: &MarkovScheme,
    s: Complex64,
    resolution: usize,
    flavor: Flavor,
) -> Result<DiscretizedOperator> {
    let data = assembly_data(scheme, resolution, flavor)?;
    Ok(build_operator(&data, scheme, s))
}

/// Leading eigendata of a real-parameter discretized operator.
#[derive(Clone, Debug)]
pub struct RpfData {
    pub lambda: f64,
    /// Right eigenfunction values on the grid, positive, nu(h) = 1.
    pub h: Vec<f64>,
    /// Left eigenvector as measure weights, sum 1.
    pub nu: Vec<f64>,
    pub residual_right: f64,
    pub residual_left: f64,
    pub lambda_left: f64,
    /// |second eigenvalue| / lambda.
    pub gap_ratio: f64,
}

pub fn rpf(op: &DiscretizedOperator) -> Result<RpfData> {
    if op.s.im != 0.0 {
        return Err(Error::Domain("RPF data requires real s".into()));
    }
    let n = op.dim();
    let right = linalg::power_iteration(
        n,
        |v, w| op.apply_real(v, w),
        Some(vec![1.0; n]),
        1e-13,
        100_000,
    )?;
    let left = linalg::power_iteration(
        n,
        |v, w| op.apply_transpose_real(v, w),
        Some(vec![1.0; n]),
        1e-13,
        100_000,
    )?;
    let mut h = right.vector;
    let mut nu = left.vector;
    // orient positive
    if h.iter().sum::<f64>() < 0.0 {
        h.iter_mut().for_each(|x| *x = -*x);
    }
    if nu.iter().sum::<f64>() < 0.0 {
        nu.iter_mut().for_each(|x| *x = -*x);
    }
    let nu_sum: f64 = nu.iter().sum();
    nu.iter_mut().for_each(|x| *x /= nu_sum);
    let pairing = linalg::dot(&nu, &h);
    if pairing.abs() < 1e-300 {
        return Err(Error::Convergence("nu(h) vanished".into()));
    }
    h.iter_mut().for_each(|x| *x /= pairing);
    let lambda = right.lambda;
    let rho2 = linalg::second_modulus(
        n,
        |v, w| op.apply_real(v, w),
        lambda,
        &h,
        &nu,
        400,
    );
    Ok(RpfData {
        lambda,
        h,
        nu,
        residual_right: right.residual,
        residual_left: left.residual,
        lambda_left: left.lambda,
        gap_ratio: rho2 / lambda.abs().max(1e-300),
    })
}

/// Sampled pressure curve (s, P(-s tau)); errors if the samples fail to be
/// strictly decreasing, which is the structural property the dimension
/// root-finding relies on.
pub fn pressure_curve(
    scheme: &MarkovScheme,
    s_values: &[f64],
    resolution: usize,
) -> Result<Vec<(f64, f64)>> {
    let data = assembly_data(scheme, resolution, Flavor::Collocation)?;
    let mut out = Vec::with_capacity(s_values.len());
    for &s in s_values {
        let op = build_operator(&data, scheme, Complex64::new(s, 0.0));
        out.push((s, rpf(&op)?.lambda.ln()));
    }
    let mut sorted = out.clone();
    sorted.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    for w in sorted.windows(2) {
        if w[0].0 < w[1].0 && w[0].1 <= w[1].1 {
            return Err(Error::Convergence(format!(
                "pressure not strictly decreasing between s = {} and {}",
                w[0].0, w[1].0
            )));
        }
    }
    Ok(out)
}

/// P(-s tau) = log of the leading eigenvalue.
pub fn pressure(scheme: &MarkovScheme, s: f64, resolution: usize) -> Result<f64> {
    let op = assemble(scheme, Complex64::new(s, 0.0), resolution, Flavor::Collocation)?;
    Ok(rpf(&op)?.lambda.ln())
}

/// d/ds P(-s tau) = -integral of tau against the Gibbs measure h dnu.
fn pressure_and_derivative(data: &AssemblyData, scheme: &MarkovScheme, s: f64) -> Result<(f64, f64, RpfData)> {
    let op = build_operator(data, scheme, Complex64::new(s, 0.0));
    let r = rpf(&op)?;
    // Gibbs weights on the grid
    let gibbs: Vec<f64> = r.nu.iter().zip(&r.h).map(|(a, b)| a * b).collect();
    let total: f64 = gibbs.iter().sum();
    let mut tau_mean = 0.0;
    for ((g, &i), &x) in gibbs.iter().zip(&data.grid.interval_of).zip(&data.grid.points) {
        tau_mean += g * scheme.tau_on_branch(i, x);
    }
    tau_mean /= total;
    Ok((r.lambda.ln(), -tau_mean, r))
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct DimensionRung {
    pub resolution: usize,
    pub delta: f64,
    pub pressure_residual: f64,
    pub gap_ratio: f64,
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct DimensionDiagnostics {
    pub flavor: String,
    pub ladder: Vec<DimensionRung>,
    pub drift: f64,
}

/// Root of s -> P(-s tau) on a resolution ladder. Stops when the last two
/// rungs agree to `tol` and the in-rung residual satisfies |P| < tol |P'|.
pub fn hausdorff_dimension(scheme: &MarkovScheme, tol: f64) -> Result<(f64, DimensionDiagnostics)> {
    hausdorff_dimension_with(scheme, tol, Flavor::Collocation, &[12, 16, 24, 32, 48, 64])
}

pub fn hausdorff_dimension_with(
    scheme: &MarkovScheme,
    tol: f64,
    flavor: Flavor,
    resolutions: &[usize],
) -> Result<(f64, DimensionDiagnostics)> {
    if tol < 1e-12 {
        return Err(Error::Config("tolerance below 1e-12 not supported".into()));
    }
    let mut ladder: Vec<DimensionRung> = Vec::new();
    let mut prev: Option<f64> = None;
    let mut drift = f64::INFINITY;
    for &res in resolutions {
        let data = assembly_data(scheme, res, flavor)?;
        let delta = dimension_at_resolution(&data, scheme, tol, &mut ladder, res)?;
        if let Some(p) = prev {
            drift = (delta - p).abs();
            if drift < tol {
                return Ok((
                    delta,
                    DimensionDiagnostics {
                        flavor: format!("{:?}", flavor),
                        ladder,
                        drift,
                    },
                ));
            }
        }
        prev = Some(delta);
    }
    // the one-branch degenerate scheme resolves exactly at any resolution
    if let Some(p) = prev {
        if drift < tol || ladder.iter().all(|r| r.delta == 0.0) {
            return Ok((
                p,
                DimensionDiagnostics {
                    flavor: format!("{:?}", flavor),
                    ladder,
                    drift,
                },
            ));
        }
    }
    Err(Error::Convergence(format!(
        "dimension drift {} above tol {} at final resolution",
        drift, tol
    )))
}

fn dimension_at_resolution(
    data: &AssemblyData,
    scheme: &MarkovScheme,
    tol: f64,
    ladder: &mut Vec<DimensionRung>,
    res: usize,
) -> Result<f64> {
    let (p0, _, _) = pressure_and_derivative(data, scheme, 0.0)?;
    if p0 < -1e-12 {
        return Err(Error::Bracket(format!("P(0) = {} <= 0", p0)));
    }
    if p0 <= 1e-12 {
        ladder.push(DimensionRung {
            resolution: res,
            delta: 0.0,
            pressure_residual: p0.abs(),
            gap_ratio: 0.0,
        });
        return Ok(0.0);
    }
    // bracket: pressure is strictly decreasing in s
    let mut lo = 0.0f64;
    let mut hi = 1.0f64;
    let mut p_hi = pressure_and_derivative(data, scheme, hi)?.0;
    while p_hi > 0.0 {
        lo = hi;
        hi *= 1.5;
        if hi > 8.0 {
            return Err(Error::Bracket("pressure does not change sign".into()));
        }
        p_hi = pressure_and_derivative(data, scheme, hi)?.0;
    }
    for _ in 0..12 {
        let mid = 0.5 * (lo + hi);
        let pm = pressure_and_derivative(data, scheme, mid)?.0;
        if pm > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // Newton polish with the analytic derivative
    let mut s = 0.5 * (lo + hi);
    let mut last = pressure_and_derivative(data, scheme, s)?;
    for _ in 0..60 {
        let (p, dp, _) = last;
        // polish well below the requested tolerance; the quadratic Newton
        // tail costs two or three extra pressure solves
        if p.abs() < (tol * dp.abs()).min(1e-12) {
            break;
        }
        let step = p / dp;
        s -= step;
        if !(0.0..=8.0).contains(&s) {
            return Err(Error::Convergence("dimension Newton escaped bracket".into()));
        }
        last = pressure_and_derivative(data, scheme, s)?;
    }
    ladder.push(DimensionRung {
        resolution: res,
        delta: s,
        pressure_residual: last.0.abs(),
        gap_ratio: last.2.gap_ratio,
    });
    Ok(s)
}

/// The normalized operator family L_a = e^{-P} M_h^{-1} L_{-a tau} M_h with
/// L_a 1 = 1, plus pointwise access to tau_a and the normalized weights.
pub struct NormalizedFamily {
    pub a: f64,
    pub pressure: f64,
    pub rpf: RpfData,
    pub data: AssemblyData,
}

pub fn normalize(scheme: &MarkovScheme, a: f64, resolution: usize) -> Result<NormalizedFamily> {
    let data = assembly_data(scheme, resolution, Flavor::Collocation)?;
    let op = build_operator(&data, scheme, Complex64::new(a, 0.0));
    let r = rpf(&op)?;
    if r.h.iter().any(|&x| x <= 0.0) {
        return Err(Error::Convergence("eigenfunction not positive on grid".into()));
    }
    Ok(NormalizedFamily {
        a,
        pressure: r.lambda.ln(),
        rpf: r,
        data,
    })
}

impl NormalizedFamily {
    pub fn grid(&self) -> &Grid {
        &self.data.grid
    }

    /// log h_a interpolated at a point of interval i.
    pub fn log_h_at(&self, i: usize, y: f64) -> f64 {
        // interpolate h (positive) then take the log; spectral interpolation
        // of the positive eigenfunction stays positive on the interval
        let v = self.data.grid.interp_at(&self.rpf.h, i, y);
        v.max(1e-300).ln()
    }

    /// tau_a(y) = -a tau(y) - P - log h(Ty) + log h(y) for y on branch i
    /// mapping into interval j at the point x = Ty.
    pub fn tau_a_on_branch(&self, scheme: &MarkovScheme, i: usize, y: f64, j: usize, x: f64) -> f64 {
        -self.a * scheme.tau_on_branch(i, y) - self.pressure + self.log_h_at(i, y)
            - self.log_h_at(j, x)
    }

    /// Normalized matrix e^{-P} D_h^{-1} M D_h.
    pub fn matrix(&self, scheme: &MarkovScheme) -> Vec<f64> {
        let op = build_operator(&self.data, scheme, Complex64::new(self.a, 0.0));
        let n = op.dim();
        let m = op.dense_real().expect("collocation matrix is dense real");
        let ep = (-self.pressure).exp();
        let mut out = vec![0.0; n * n];
        for r in 0..n {
            for c in 0..n {
                out[r * n + c] = ep * m[r * n + c] * self.rpf.h[c] / self.rpf.h[r];
            }
        }
        out
    }
}
