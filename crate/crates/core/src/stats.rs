//! Small statistics toolkit: running moments, least-squares fits, empirical
//! survival curves, and numerical rank.

use nalgebra::DMatrix;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

/// Count, mean and centered second moment, mergeable in a fixed order.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Moments {
    pub n: u64,
    pub mean: f64,
    pub m2: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn merge(&mut self, other: &Moments) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        self.mean += d * other.n as f64 / n as f64;
        self.m2 += other.m2 + d * d * (self.n as f64) * (other.n as f64) / n as f64;
        self.n = n;
    }

    pub fn from_slice(xs: &[f64]) -> Self {
        let mut m = Moments::default();
        xs.iter().for_each(|&x| m.push(x));
        m
    }

    /// Unbiased sample variance (0 for fewer than two points).
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    pub fn std_error(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            (self.variance() / self.n as f64).sqrt()
        }
    }
}

/// Two-sided normal quantile for a confidence level, e.g. 1.96 for 0.95.
pub fn z_for_confidence(confidence: f64) -> f64 {
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    normal.inverse_cdf(0.5 + confidence / 2.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub n: usize,
}

/// Ordinary least squares `y = slope * x + intercept`. Needs two distinct x.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Option<LinearFit> {
    let n = xs.len().min(ys.len());
    if n < 2 {
        return None;
    }
    let mx = xs[..n].iter().sum::<f64>() / n as f64;
    let my = ys[..n].iter().sum::<f64>() / n as f64;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let dx = xs[i] - mx;
        let dy = ys[i] - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 {
        1.0
    } else {
        sxy * sxy / (sxx * syy)
    };
    Some(LinearFit {
        slope,
        intercept: my - slope * mx,
        r2,
        n,
    })
}

/// Least-squares slope of `ln y` against `ln x`; non-positive values are
/// skipped.
pub fn loglog_fit(xs: &[f64], ys: &[f64]) -> Option<LinearFit> {
    let (lx, ly): (Vec<f64>, Vec<f64>) = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .unzip();
    linear_fit(&lx, &ly)
}

/// Points `(t, P[V > t])` of the empirical survival function on an even grid
/// from the smallest value to the value exceeded by `min_tail` samples.
/// Points with zero survival are left out.
pub fn survival_curve(values: &[f64], points: usize, min_tail: usize) -> Vec<(f64, f64)> {
    if values.is_empty() || points == 0 {
        return Vec::new();
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    let t_lo = v[0];
    let t_hi = v[n.saturating_sub(min_tail + 1)];
    let mut out = Vec::with_capacity(points + 1);
    for k in 0..=points {
        let t = t_lo + (t_hi - t_lo) * k as f64 / points as f64;
        let above = n - v.partition_point(|&x| x <= t);
        if above > 0 {
            out.push((t, above as f64 / n as f64));
        }
        if t_hi == t_lo {
            break;
        }
    }
    out
}

/// Linear fit to the log-survival curve after discarding its head.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailFit {
    pub fit: Option<LinearFit>,
    /// Fewer than three distinct values: the law has (empirically) finite
    /// support, the strongest form of a decaying tail.
    pub finite_support: bool,
    pub n_samples: usize,
    pub curve: Vec<(f64, f64)>,
}

impl TailFit {
    pub fn slope(&self) -> Option<f64> {
        self.fit.map(|f| f.slope)
    }

    /// Negative fitted slope, or finite support.
    pub fn decays(&self) -> bool {
        self.finite_support || self.fit.is_some_and(|f| f.slope < 0.0)
    }
}

pub const TAIL_DISCARD: f64 = 0.2;
pub const TAIL_POINTS: usize = 40;
pub const TAIL_MIN_COUNT: usize = 20;

pub fn tail_fit(values: &[f64]) -> TailFit {
    let mut distinct = values.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    let curve = survival_curve(values, TAIL_POINTS, TAIL_MIN_COUNT);
    let skip = (curve.len() as f64 * TAIL_DISCARD).floor() as usize;
    let (xs, ys): (Vec<f64>, Vec<f64>) = curve[skip.min(curve.len())..]
        .iter()
        .map(|&(t, s)| (t, s.ln()))
        .unzip();
    TailFit {
        fit: linear_fit(&xs, &ys),
        finite_support: distinct.len() < 3,
        n_samples: values.len(),
        curve,
    }
}

/// Number of singular values above `rel_tol * sigma_max`, and all singular
/// values in decreasing order.
pub fn numerical_rank(rows: &[Vec<f64>], rel_tol: f64) -> (usize, Vec<f64>) {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if nrows == 0 || ncols == 0 {
        return (0, Vec::new());
    }
    let m = DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]);
    let mut sv: Vec<f64> = m.singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    let tol = rel_tol * sv[0];
    let rank = sv.iter().filter(|&&s| s > tol).count();
    (rank, sv)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moments_merge_matches_single_pass() {
        let xs: Vec<f64> = (0..100).map(|i| ((i * 37) % 11) as f64 * 0.5).collect();
        let whole = Moments::from_slice(&xs);
        let mut parts = Moments::from_slice(&xs[..40]);
        parts.merge(&Moments::from_slice(&xs[40..]));
        assert_eq!(whole.n, parts.n);
        assert!((whole.mean - parts.mean).abs() < 1e-12);
        assert!((whole.variance() - parts.variance()).abs() < 1e-10);
    }

    #[test]
    fn exact_line() {
        let f = linear_fit(&[0.0, 1.0, 2.0], &[1.0, 3.0, 5.0]).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-12);
        assert!((f.intercept - 1.0).abs() < 1e-12);
        assert!((f.r2 - 1.0).abs() < 1e-12);
        assert!(linear_fit(&[1.0, 1.0], &[0.0, 1.0]).is_none());
    }

    #[test]
    fn loglog_of_inverse() {
        let f = loglog_fit(&[16.0, 32.0, 64.0], &[1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0]).unwrap();
        assert!((f.slope + 1.0).abs() < 1e-12);
    }

    #[test]
    fn quantiles() {
        assert!((z_for_confidence(0.95) - 1.959964).abs() < 1e-5);
    }

    #[test]
    fn geometric_tail_slope() {
        // Deterministic geometric sample: value k with frequency 2^-(k+1).
        let mut v = Vec::new();
        for k in 0..14 {
            v.extend(std::iter::repeat_n(k as f64, 1 << (14 - k)));
        }
        let fit = tail_fit(&v);
        assert!(fit.decays());
        assert!(
            (fit.slope().unwrap() + std::f64::consts::LN_2).abs() < 0.1,
            "{:?}",
            fit.fit
        );
        let constant = tail_fit(&[2.0; 50]);
        assert!(constant.finite_support && constant.decays());
    }

    #[test]
    fn rank_of_dependent_rows() {
        let rows = vec![
            vec![1.0, 2.0, 3.0],
            vec![2.0, 4.0, 6.0],
            vec![0.0, 1.0, 0.0],
        ];
        assert_eq!(numerical_rank(&rows, 1e-6).0, 2);
        let id = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        assert_eq!(numerical_rank(&id, 1e-6).0, 2);
    }
}
