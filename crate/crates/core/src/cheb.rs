//! Chebyshev-Gauss-Lobatto collocation per interval: nodes, barycentric
//! interpolation, and spectral differentiation. The analytic distortion
//! weights make this converge spectrally, which is what the dimension
//! ladder leans on.

/// Lobatto nodes mapped to [lo, hi], in ascending order.
pub fn lobatto_nodes(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2);
    let mid = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    (0..n)
        .map(|j| {
            let t = (std::f64::consts::PI * j as f64 / (n - 1) as f64).cos();
            mid - half * t
        })
        .collect()
}

/// Standard barycentric weights for Lobatto nodes (ascending order):
/// w_j = (-1)^j delta_j with delta = 1/2 at the ends.
pub fn bary_weights(n: usize) -> Vec<f64> {
    (0..n)
        .map(|j| {
            let mut w = if j % 2 == 0 { 1.0 } else { -1.0 };
            if j == 0 || j == n - 1 {
                w *= 0.5;
            }
            w
        })
        .collect()
}

/// Row of interpolation coefficients: f(y) = sum_j row[j] f(x_j). Exact
/// indicator row when y coincides with a node.
pub fn interp_row(nodes: &[f64], weights: &[f64], y: f64) -> Vec<f64> {
    let n = nodes.len();
    let mut row = vec![0.0; n];
    for j in 0..n {
        let d = y - nodes[j];
        if d.abs() < 1e-14 * (nodes[n - 1] - nodes[0]).abs().max(1.0) {
            row[j] = 1.0;
            return row;
        }
    }
    let mut denom = 0.0;
    for j in 0..n {
        let t = weights[j] / (y - nodes[j]);
        row[j] = t;
        denom += t;
    }
    for r in row.iter_mut() {
        *r /= denom;
    }
    row
}

/// Differentiation matrix for the barycentric nodes (row-major n x n).
pub fn diff_matrix(nodes: &[f64], weights: &[f64]) -> Vec<f64> {
    let n = nodes.len();
    let mut d = vec![0.0; n * n];
    for i in 0..n {
        let mut diag = 0.0;
        for j in 0..n {
            if i == j {
                continue;
            }
            let v = weights[j] / weights[i] / (nodes[i] - nodes[j]);
            d[i * n + j] = v;
            diag -= v;
        }
        d[i * n + i] = diag;
    }
    d
}

/// Values at the nodes of a random smooth function with geometrically
/// decaying Chebyshev coefficients coeffs[m] ~ decay^m.
pub fn synth_smooth(coeffs: &[f64], n: usize) -> Vec<f64> {
    (0..n)
        .map(|j| {
            let theta = std::f64::consts::PI * j as f64 / (n - 1) as f64;
            // nodes ascending means theta reversed; cos(m theta) is symmetric
            coeffs
                .iter()
                .enumerate()
                .map(|(m, c)| c * (m as f64 * theta).cos())
                .sum()
        })
        .collect()
}
