use std::collections::HashMap;
use std::sync::Arc;

use serde::Serialize;

use crate::groups::{AffineElement, CosetLabeling, MeasuredGroup};
use crate::hitting::HittingError;
use crate::stats::Moments;
use crate::walk::{domain_hash, fold_ensemble, PreparedWalk, StopRule, WalkConfig, CENSOR_LIMIT};

use super::oracle::{FunctionOracle, OracleValue};
use super::HarmonicError;

const EXTENSION_MAX_STEPS: u64 = 1_000_000;

/// `E_x[f(X_tau_H)]` for a function `f` given on `H`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtensionEstimate {
    pub point: AffineElement,
    pub oracle: String,
    pub labeling: String,
    /// `x` lies in `H`, where the extension is `f(x)` itself.
    pub in_subgroup: bool,
    pub value: f64,
    pub std_error: f64,
    pub n_samples: u64,
    pub n_censored: u64,
    /// Distinct return points the oracle was evaluated at.
    pub distinct_returns: usize,
    pub seed: u64,
}

/// Extends `f` from `H` by `x -> E_x[f(X_tau)]`, with `tau` the first time
/// `t >= 0` in `H`. The standard error combines the sampling spread with
/// the oracle's own errors at the distinct return points.
pub fn extend_harmonic(
    g: &Arc<MeasuredGroup>,
    labeling: &CosetLabeling,
    oracle: &dyn FunctionOracle,
    x: &AffineElement,
    n: u64,
    seed: u64,
    workers: usize,
) -> Result<ExtensionEstimate, HarmonicError> {
    if !labeling.is_irreducible() {
        return Err(HittingError::Reducible(labeling.kind().to_string()).into());
    }
    let mut out = ExtensionEstimate {
        point: x.clone(),
        oracle: oracle.label(),
        labeling: labeling.kind().to_string(),
        in_subgroup: labeling.label(x)? == 0,
        value: 0.0,
        std_error: 0.0,
        n_samples: 0,
        n_censored: 0,
        distinct_returns: 0,
        seed,
    };
    if out.in_subgroup {
        let v = oracle.eval(x)?;
        out.value = v.value();
        out.std_error = v.std_error();
        return Ok(out);
    }
    if n == 0 {
        return Err(HarmonicError::InvalidConfig(
            "need at least one sample".into(),
        ));
    }
    let stop = StopRule::Subgroup(Arc::new(labeling.clone()));
    let mut cfg =
        WalkConfig::new(g.clone(), x.clone(), stop, seed).with_max_steps(EXTENSION_MAX_STEPS);
    cfg.domain = domain_hash(format!("extend|{}|{}|{}", g.name(), labeling.kind(), x).as_bytes());
    let walk = PreparedWalk::new(&cfg)?;
    let (returns, censored) = fold_ensemble(
        &walk,
        n,
        workers,
        || (Vec::new(), 0u64),
        |acc, _, w| {
            if w.is_censored() {
                acc.1 += 1;
            } else {
                acc.0.push(w.final_element);
            }
        },
        |acc, mut part| {
            acc.0.append(&mut part.0);
            acc.1 += part.1;
        },
    )?;
    let fraction = censored as f64 / n as f64;
    if fraction > CENSOR_LIMIT {
        return Err(HarmonicError::TooManyCensored {
            point: x.to_string(),
            r: f64::NAN,
            fraction,
            limit: CENSOR_LIMIT,
        });
    }
    // evaluate once per distinct return point, in first-seen order
    let mut index: HashMap<&AffineElement, usize> = HashMap::new();
    let mut distinct: Vec<(OracleValue, u64)> = Vec::new();
    let mut m = Moments::default();
    for h in &returns {
        let i = match index.get(h) {
            Some(&i) => i,
            None => {
                index.insert(h, distinct.len());
                distinct.push((oracle.eval(h)?, 0));
                distinct.len() - 1
            }
        };
        distinct[i].1 += 1;
        m.push(distinct[i].0.value());
    }
    let used = returns.len() as f64;
    let oracle_var: f64 = distinct
        .iter()
        .map(|(v, c)| (*c as f64 / used * v.std_error()).powi(2))
        .sum();
    out.value = m.mean;
    out.std_error = (m.std_error().powi(2) + oracle_var).sqrt();
    out.n_samples = n;
    out.n_censored = censored;
    out.distinct_returns = distinct.len();
    Ok(out)
}

/// The extension as a function on the whole group.
pub struct ExtensionOracle {
    pub group: Arc<MeasuredGroup>,
    pub labeling: CosetLabeling,
    pub inner: Box<dyn FunctionOracle>,
    pub n_samples: u64,
    pub seed: u64,
    pub workers: usize,
}

impl FunctionOracle for ExtensionOracle {
    fn label(&self) -> String {
        format!(
            "extension of {} from {}",
            self.inner.label(),
            self.labeling.kind()
        )
    }

    fn eval(&self, x: &AffineElement) -> Result<OracleValue, HarmonicError> {
        if self.labeling.label(x)? == 0 {
            return self.inner.eval(x);
        }
        let e = extend_harmonic(
            &self.group,
            &self.labeling,
            self.inner.as_ref(),
            x,
            self.n_samples,
            self.seed,
            self.workers,
        )?;
        Ok(OracleValue::Estimate {
            value: e.value,
            std_error: e.std_error,
        })
    }
}

#[cfg(test)]
mod tests {
    use num_rational::BigRational;

    use super::*;
    use crate::fields::ValuedScalar;
    use crate::groups::{bs12, zline, LabelingKind};
    use crate::harmonic::{ConstantOracle, RhoOracle};

    /// `x -> c(x)` on a group of rational translations.
    struct Translation;

    impl FunctionOracle for Translation {
        fn label(&self) -> String {
            "c".into()
        }

        fn eval(&self, x: &AffineElement) -> Result<OracleValue, HarmonicError> {
            let c: BigRational = x.c().as_rational().expect("rational").clone();
            Ok(OracleValue::Exact {
                coef: c,
                log_base: None,
            })
        }
    }

    fn setup(g: MeasuredGroup, kind: LabelingKind) -> (Arc<MeasuredGroup>, CosetLabeling) {
        let lab = CosetLabeling::new(&g, kind).unwrap();
        (Arc::new(g), lab)
    }

    #[test]
    fn odd_points_average_their_even_neighbors() {
        let (g, lab) = setup(zline(), LabelingKind::Parity);
        let x = AffineElement::translation(ValuedScalar::from_int(5, g.place()));
        let e = extend_harmonic(&g, &lab, &Translation, &x, 20_000, 3, 1).unwrap();
        assert!(!e.in_subgroup);
        assert_eq!(e.distinct_returns, 2);
        assert!((e.value - 5.0).abs() < 4.0 * e.std_error, "{e:?}");
        let h = AffineElement::translation(ValuedScalar::from_int(4, g.place()));
        let e = extend_harmonic(&g, &lab, &Translation, &h, 0, 3, 1).unwrap();
        assert!(e.in_subgroup && e.value == 4.0 && e.std_error == 0.0);
    }

    #[test]
    fn constants_extend_to_constants() {
        let (g, lab) = setup(bs12(), LabelingKind::LambdaExponentMod(3));
        let x = g.x_element().unwrap().clone();
        let e = extend_harmonic(&g, &lab, &ConstantOracle::int(2), &x, 2_000, 1, 1).unwrap();
        assert_eq!((e.value, e.std_error), (2.0, 0.0));
    }

    #[test]
    fn rho_extends_to_rho() {
        let (g, lab) = setup(bs12(), LabelingKind::LambdaExponentMod(2));
        for k in [1, 3, -5] {
            let x = g.x_element().unwrap().pow(k);
            let e = extend_harmonic(&g, &lab, &RhoOracle, &x, 20_000, 7, 1).unwrap();
            let want = x.rho().to_f64();
            assert!(
                (e.value - want).abs() < 4.0 * e.std_error + 1e-12,
                "{k}: {e:?}"
            );
        }
    }

    #[test]
    fn extension_is_harmonic_off_the_subgroup() {
        let (g, lab) = setup(zline(), LabelingKind::Parity);
        let ext = ExtensionOracle {
            group: g.clone(),
            labeling: lab,
            inner: Box::new(Translation),
            n_samples: 20_000,
            seed: 9,
            workers: 1,
        };
        let x = AffineElement::translation(ValuedScalar::from_int(3, g.place()));
        let rep = crate::harmonic::harmonicity_residual(&g, &ext, &x).unwrap();
        assert!(rep.exact_residual.is_none());
        assert!(rep.pass, "{rep:?}");
    }

    #[test]
    fn workers_do_not_change_the_estimate() {
        let (g, lab) = setup(bs12(), LabelingKind::LambdaExponentMod(2));
        let x = g.x_element().unwrap().clone();
        let a = extend_harmonic(&g, &lab, &RhoOracle, &x, 5_000, 2, 1).unwrap();
        let b = extend_harmonic(&g, &lab, &RhoOracle, &x, 5_000, 2, 3).unwrap();
        assert_eq!(a, b);
    }
}
