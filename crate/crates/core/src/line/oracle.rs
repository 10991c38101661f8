//! Exact first-step analysis for walks on the integer lattice: absorbing
//! chains solved in rational arithmetic.

use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use super::{LineError, StepDistribution};

/// Most states for which unbounded steps (a dense system) are solved.
pub const MAX_DENSE_STATES: usize = 96;
/// Most states for bounded steps (a banded system).
pub const MAX_BANDED_STATES: usize = 4096;

/// The walk on the integers `lo..=hi`, killed when it leaves them.
#[derive(Debug, Clone)]
pub struct LatticeChain {
    dist: StepDistribution,
    lo: i64,
    hi: i64,
}

impl LatticeChain {
    pub fn new(dist: StepDistribution, lo: i64, hi: i64) -> Result<Self, LineError> {
        if hi < lo {
            return Err(LineError::InvalidConfig(format!(
                "empty state range {lo}..={hi}"
            )));
        }
        let n = (hi - lo + 1) as usize;
        let limit = if dist.max_jump().is_some() {
            MAX_BANDED_STATES
        } else {
            MAX_DENSE_STATES
        };
        if n > limit {
            return Err(LineError::InvalidConfig(format!(
                "{n} states exceed the exact solver limit {limit} for {dist}"
            )));
        }
        Ok(LatticeChain { dist, lo, hi })
    }

    pub fn size(&self) -> usize {
        (self.hi - self.lo + 1) as usize
    }

    fn bandwidth(&self) -> usize {
        match self.dist.max_jump() {
            Some(k) => (k as usize).min(self.size() - 1),
            None => self.size() - 1,
        }
    }

    fn index(&self, y: i64) -> Result<usize, LineError> {
        if y < self.lo || y > self.hi {
            return Err(LineError::InvalidConfig(format!(
                "start {y} outside {}..={}",
                self.lo, self.hi
            )));
        }
        Ok((y - self.lo) as usize)
    }

    /// Solves `(I - P) h = b` for each right-hand side `b`, by Gaussian
    /// elimination within the band. `I - P` is a nonsingular M-matrix, so no
    /// pivoting is needed.
    #[allow(clippy::needless_range_loop)]
    pub fn solve(&self, rhs: Vec<Vec<BigRational>>) -> Vec<Vec<BigRational>> {
        let n = self.size();
        let w = self.bandwidth();
        let mut a: Vec<Vec<BigRational>> = (0..n)
            .map(|i| {
                let lo = i.saturating_sub(w);
                let hi = (i + w).min(n - 1);
                let mut row = vec![BigRational::zero(); n];
                for (j, slot) in row.iter_mut().enumerate().take(hi + 1).skip(lo) {
                    let p = self.dist.probability(j as i64 - i as i64);
                    *slot = if i == j { BigRational::one() - p } else { -p };
                }
                row
            })
            .collect();
        let mut b = rhs;
        for c in 0..n {
            let last = (c + w).min(n - 1);
            for r in c + 1..=last {
                if a[r][c].is_zero() {
                    continue;
                }
                let f = &a[r][c] / &a[c][c];
                for j in c..=last {
                    if !a[c][j].is_zero() {
                        let d = &f * &a[c][j];
                        a[r][j] -= d;
                    }
                }
                for col in b.iter_mut() {
                    let d = &f * &col[c];
                    col[r] -= d;
                }
            }
        }
        for col in b.iter_mut() {
            for c in (0..n).rev() {
                let last = (c + w).min(n - 1);
                let mut v = col[c].clone();
                for j in c + 1..=last {
                    v -= &a[c][j] * &col[j];
                }
                col[c] = v / &a[c][c];
            }
        }
        b
    }

    fn states(&self) -> impl Iterator<Item = i64> {
        self.lo..=self.hi
    }

    /// `E_y[time to leave]`.
    pub fn expected_exit_time(&self, y: i64) -> Result<BigRational, LineError> {
        let i = self.index(y)?;
        let rhs = vec![vec![BigRational::one(); self.size()]];
        Ok(self.solve(rhs)[0][i].clone())
    }

    /// `Pr_y[the walk leaves above hi]`.
    pub fn exit_above(&self, y: i64) -> Result<BigRational, LineError> {
        let i = self.index(y)?;
        let rhs = vec![self
            .states()
            .map(|x| self.dist.upper_tail(self.hi - x))
            .collect()];
        Ok(self.solve(rhs)[0][i].clone())
    }

    /// `E_y[number of times t before leaving with Y_t in set]`.
    pub fn expected_visits(
        &self,
        y: i64,
        set: impl Fn(i64) -> bool,
    ) -> Result<BigRational, LineError> {
        let i = self.index(y)?;
        let rhs = vec![self
            .states()
            .map(|x| {
                if set(x) {
                    BigRational::one()
                } else {
                    BigRational::zero()
                }
            })
            .collect()];
        Ok(self.solve(rhs)[0][i].clone())
    }
}

/// `E_y[sigma_r]` for the exit time of `[-r, r]`.
pub fn exit_time(dist: StepDistribution, r: i64, y: i64) -> Result<BigRational, LineError> {
    LatticeChain::new(dist, -r, r)?.expected_exit_time(y)
}

/// `Pr_y[tau_(r, inf) < tau_(-inf, -r)]`.
pub fn exit_right(dist: StepDistribution, r: i64, y: i64) -> Result<BigRational, LineError> {
    LatticeChain::new(dist, -r, r)?.exit_above(y)
}

/// Decay rate `ln(lambda)` of `Pr[V_m > v] ~ C lambda^v`, where `V_m` is the
/// time spent in `[0, m]` before leaving `[0, r]`. `lambda` is the Perron
/// root of the walk watched only while in `[0, m]`, whose transitions are
/// obtained exactly from the absorbing chain on `(m, r]`.
pub fn occupation_decay(dist: StepDistribution, r: i64, m: i64) -> Result<f64, LineError> {
    if !(0 < m && m < r) {
        return Err(LineError::InvalidConfig(format!(
            "need 0 < m < r, got m = {m}, r = {r}"
        )));
    }
    let inner: Vec<i64> = (0..=m).collect();
    let outer = LatticeChain::new(dist, m + 1, r)?;
    // entry[z][y]: from z in (m, r], first return to [0, m] is at y
    let rhs: Vec<Vec<BigRational>> = inner
        .iter()
        .map(|&y| (m + 1..=r).map(|z| dist.probability(y - z)).collect())
        .collect();
    let entry = outer.solve(rhs);
    let k: Vec<Vec<f64>> = inner
        .iter()
        .map(|&x| {
            inner
                .iter()
                .enumerate()
                .map(|(yi, &y)| {
                    let mut v = dist.probability(y - x);
                    for (zi, z) in (m + 1..=r).enumerate() {
                        v += dist.probability(z - x) * &entry[yi][zi];
                    }
                    v.to_f64().expect("probability")
                })
                .collect()
        })
        .collect();
    Ok(perron_root(&k).ln())
}

/// Largest eigenvalue of a nonnegative matrix with a positive power, by
/// power iteration.
fn perron_root(k: &[Vec<f64>]) -> f64 {
    let n = k.len();
    let mut v = vec![1.0; n];
    let mut lambda = 0.0;
    for _ in 0..100_000 {
        let w: Vec<f64> = (0..n)
            .map(|i| (0..n).map(|j| k[i][j] * v[j]).sum())
            .collect();
        let norm = w.iter().cloned().fold(0.0, f64::max);
        if norm == 0.0 {
            return 0.0;
        }
        let next: Vec<f64> = w.iter().map(|x| x / norm).collect();
        let done = (norm - lambda).abs() < 1e-15
            && next.iter().zip(&v).all(|(a, b)| (a - b).abs() < 1e-13);
        v = next;
        lambda = norm;
        if done {
            break;
        }
    }
    lambda
}

/// `Pr_y[MS_r((-inf, -q)) <= n]` for unit steps, from `y` above the largest
/// integer below `-q`. Visited values are then a run of consecutive
/// integers, so the event is that the walk leaves `[-r, r]` before reaching
/// the `(n+1)`-th integer below `-q`.
pub fn msep_unit(r: i64, q: f64, n: u64, y: i64) -> Result<BigRational, LineError> {
    let below = (-q).ceil() as i64 - 1;
    if y <= below {
        return Err(LineError::InvalidConfig(format!(
            "start {y} already lies below -q = {}",
            -q
        )));
    }
    let floor = below - n as i64;
    if floor < -r {
        return Ok(BigRational::one());
    }
    LatticeChain::new(StepDistribution::Unit, floor + 1, r)?.exit_above(y)
}
