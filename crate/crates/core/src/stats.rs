//! Small fitting helpers shared by the probes and counting reports.

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    pub r_squared: f64,
}

/// Ordinary least squares y = a + b x.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> Result<LineFit> {
    let n = xs.len();
    if n != ys.len() || n < 2 {
        return Err(Error::InsufficientData(format!(
            "need at least 2 points, got {}",
            n
        )));
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData("degenerate abscissa".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let e = y - (intercept + slope * x);
            e * e
        })
        .sum();
    let r_squared = if syy == 0.0 { 1.0 } else { 1.0 - ss_res / syy };
    let slope_stderr = if n > 2 {
        (ss_res / (nf - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok(LineFit {
        slope,
        intercept,
        slope_stderr,
        r_squared,
    })
}

/// Decay rate from a sequence of per-step norm ratios: the geometric mean
/// over the tail half, so transient constants do not contaminate the fit.
pub fn tail_half_rate(ratios: &[f64]) -> Result<f64> {
    if ratios.len() < 4 {
        return Err(Error::InsufficientData("need >= 4 ratio samples".into()));
    }
    let start = ratios.len() / 2;
    let mut acc = 0.0;
    let mut cnt = 0usize;
    for &r in &ratios[start..] {
        if r <= 0.0 {
            return Err(Error::InsufficientData("nonpositive ratio in sequence".into()));
        }
        acc += r.ln();
        cnt += 1;
    }
    Ok((acc / cnt as f64).exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line_recovered() {
        let xs: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.5 - 0.25 * x).collect();
        let f = fit_line(&xs, &ys).unwrap();
        assert!((f.slope + 0.25).abs() < 1e-12);
        assert!((f.intercept - 3.5).abs() < 1e-12);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
        assert!(f.slope_stderr < 1e-12);
    }

    #[test]
    fn tail_rate_ignores_transient() {
        // transient ratios then a clean 0.8 tail
        let mut v = vec![5.0, 3.0, 2.0, 1.4, 1.0];
        v.extend(std::iter::repeat_n(0.8, 15));
        assert!((tail_half_rate(&v).unwrap() - 0.8).abs() < 1e-12);
    }
}
