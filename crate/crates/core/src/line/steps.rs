use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::walk::{BitSource, WeightedSampler};

use super::LineError;

const MAX_UNIFORM_K: u32 = 1 << 14;

/// Law of the i.i.d. increments `Z_t` of a walk on the line. All kinds are
/// symmetric, integer valued and have an exponential tail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum StepDistribution {
    /// `+-1` with probability 1/2 each.
    Unit,
    /// Uniform on `{-k, ..., -1, 1, ..., k}`.
    UniformK { k: u32 },
    /// `+-G` with a fair sign and `P(G = j) = (1 - q) q^(j - 1)`, `j >= 1`.
    SymGeometric { q: f64 },
}

impl StepDistribution {
    pub fn uniform(k: u32) -> Result<Self, LineError> {
        if k == 0 || k > MAX_UNIFORM_K {
            return Err(LineError::InvalidConfig(format!(
                "uniform-k needs 1 <= k <= {MAX_UNIFORM_K}, got {k}"
            )));
        }
        Ok(StepDistribution::UniformK { k })
    }

    pub fn sym_geometric(q: f64) -> Result<Self, LineError> {
        if !(q > 0.0 && q < 1.0) {
            return Err(LineError::InvalidConfig(format!(
                "sym-geometric needs 0 < q < 1, got {q}"
            )));
        }
        Ok(StepDistribution::SymGeometric { q })
    }

    /// Largest step size, if bounded.
    pub fn max_jump(&self) -> Option<u64> {
        match *self {
            StepDistribution::Unit => Some(1),
            StepDistribution::UniformK { k } => Some(k as u64),
            StepDistribution::SymGeometric { .. } => None,
        }
    }

    /// `E[Z^2]`.
    pub fn variance(&self) -> f64 {
        match *self {
            StepDistribution::Unit => 1.0,
            StepDistribution::UniformK { k } => {
                let k = k as f64;
                (k + 1.0) * (2.0 * k + 1.0) / 6.0
            }
            StepDistribution::SymGeometric { q } => (1.0 + q) / ((1.0 - q) * (1.0 - q)),
        }
    }

    /// `P(|Z| > z)`.
    pub fn tail(&self, z: f64) -> f64 {
        if z < 0.0 {
            return 1.0;
        }
        let j = z.floor();
        match *self {
            StepDistribution::Unit => (z < 1.0) as u8 as f64,
            StepDistribution::UniformK { k } => ((k as f64 - j) / k as f64).max(0.0),
            StepDistribution::SymGeometric { q } => q.powf(j),
        }
    }

    /// `P(Z = j)` exactly, when the parameters are exact binary fractions
    /// (always true for `q` given as an `f64`).
    pub fn probability(&self, j: i64) -> BigRational {
        let half = BigRational::new(BigInt::one(), BigInt::from(2));
        match *self {
            StepDistribution::Unit => {
                if j.abs() == 1 {
                    half
                } else {
                    BigRational::zero()
                }
            }
            StepDistribution::UniformK { k } => {
                if j != 0 && j.unsigned_abs() <= k as u64 {
                    BigRational::new(BigInt::one(), BigInt::from(2 * k))
                } else {
                    BigRational::zero()
                }
            }
            StepDistribution::SymGeometric { q } => {
                if j == 0 {
                    return BigRational::zero();
                }
                let q = exact_q(q);
                let one = BigRational::one();
                half * (&one - &q) * num_traits::pow(q, (j.unsigned_abs() - 1) as usize)
            }
        }
    }

    /// `P(Z > j)` for `j >= 0`, exactly.
    pub fn upper_tail(&self, j: i64) -> BigRational {
        let half = BigRational::new(BigInt::one(), BigInt::from(2));
        match *self {
            StepDistribution::SymGeometric { q } => {
                half * num_traits::pow(exact_q(q), j.max(0) as usize)
            }
            _ => {
                let max = self.max_jump().expect("bounded") as i64;
                ((j.max(0) + 1)..=max)
                    .map(|i| self.probability(i))
                    .fold(BigRational::zero(), |a, b| a + b)
            }
        }
    }

    pub(crate) fn sampler(&self) -> StepSampler {
        let table = match *self {
            StepDistribution::UniformK { k } => Some(WeightedSampler::uniform(2 * k as usize)),
            _ => None,
        };
        StepSampler { dist: *self, table }
    }
}

fn exact_q(q: f64) -> BigRational {
    BigRational::from_float(q).expect("q is finite")
}

impl fmt::Display for StepDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StepDistribution::Unit => write!(f, "unit"),
            StepDistribution::UniformK { k } => write!(f, "uniform-{k}"),
            StepDistribution::SymGeometric { q } => write!(f, "sym-geometric:{q}"),
        }
    }
}

impl FromStr for StepDistribution {
    type Err = LineError;

    /// `unit`, `uniform-K` (or `uniform:K`), `sym-geometric:Q`.
    fn from_str(s: &str) -> Result<Self, LineError> {
        let bad = || LineError::InvalidConfig(format!("unknown step distribution {s:?}"));
        let s = s.trim();
        if s == "unit" {
            return Ok(StepDistribution::Unit);
        }
        if let Some(k) = s
            .strip_prefix("uniform-")
            .or_else(|| s.strip_prefix("uniform:"))
        {
            return Self::uniform(k.parse().map_err(|_| bad())?);
        }
        if let Some(q) = s
            .strip_prefix("sym-geometric:")
            .or_else(|| s.strip_prefix("sym-geometric-"))
        {
            return Self::sym_geometric(q.parse().map_err(|_| bad())?);
        }
        Err(bad())
    }
}

pub(crate) struct StepSampler {
    dist: StepDistribution,
    table: Option<WeightedSampler>,
}

impl StepSampler {
    #[inline]
    pub(crate) fn sample(&self, src: &mut BitSource<ChaCha8Rng>) -> i64 {
        match self.dist {
            StepDistribution::Unit => 2 * src.bits(1) as i64 - 1,
            StepDistribution::UniformK { k } => {
                let i = self.table.as_ref().expect("uniform table").sample(src) as i64;
                let k = k as i64;
                if i < k {
                    -(i + 1)
                } else {
                    i - k + 1
                }
            }
            StepDistribution::SymGeometric { q } => {
                // inverse transform on U in (0, 1]
                let u = 1.0 - src.unit_f64();
                let g = 1 + (u.ln() / q.ln()).floor() as i64;
                if src.bits(1) == 1 {
                    g
                } else {
                    -g
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::walk::trajectory_rng;

    #[test]
    fn parse_and_display() {
        for s in ["unit", "uniform-3", "sym-geometric:0.5"] {
            assert_eq!(s.parse::<StepDistribution>().unwrap().to_string(), s);
        }
        assert!("uniform-0".parse::<StepDistribution>().is_err());
        assert!("sym-geometric:1.5".parse::<StepDistribution>().is_err());
    }

    #[test]
    fn exact_probabilities_sum_to_one() {
        for d in [
            StepDistribution::Unit,
            StepDistribution::uniform(4).unwrap(),
        ] {
            let total = (-10..=10)
                .map(|j| d.probability(j))
                .fold(BigRational::zero(), |a, b| a + b);
            assert!(total.is_one());
        }
        let g = StepDistribution::sym_geometric(0.5).unwrap();
        let body = (-20..=20)
            .map(|j| g.probability(j))
            .fold(BigRational::zero(), |a, b| a + b);
        assert_eq!(
            body + g.upper_tail(20) * BigInt::from(2),
            BigRational::one()
        );
    }

    #[test]
    fn empirical_moments() {
        for d in [
            StepDistribution::Unit,
            StepDistribution::uniform(3).unwrap(),
            StepDistribution::sym_geometric(0.5).unwrap(),
        ] {
            let s = d.sampler();
            let mut src = BitSource::new(trajectory_rng(3, 4, 5));
            let n = 100_000;
            let (mut sum, mut sq, mut big) = (0.0, 0.0, 0.0);
            for _ in 0..n {
                let z = s.sample(&mut src) as f64;
                sum += z;
                sq += z * z;
                big += (z.abs() > 2.0) as u8 as f64;
            }
            let var = d.variance();
            assert!(
                (sum / n as f64).abs() < 5.0 * (var / n as f64).sqrt(),
                "{d} mean"
            );
            assert!((sq / n as f64 - var).abs() < 0.05 * var, "{d} variance");
            let p = d.tail(2.0);
            assert!(
                (big / n as f64 - p).abs() < 5.0 * (p * (1.0 - p) / n as f64).sqrt() + 1e-12,
                "{d} tail"
            );
        }
    }
}
