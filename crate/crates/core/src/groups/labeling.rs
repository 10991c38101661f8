//! Finite-index subgroups given as kernels of homomorphisms to Z/m.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::ToPrimitive;
use serde::Serialize;

use super::{AffineElement, GroupError, LevelStructure, MeasuredGroup};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum LabelingKind {
    /// H = G.
    Trivial,
    /// H = { x : the lambda-exponent of x is divisible by m }.
    LambdaExponentMod(u32),
    /// H = { x : c(x) is an even integer }, for groups of integer translations.
    Parity,
}

impl FromStr for LabelingKind {
    type Err = GroupError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let bad = || GroupError::UnsupportedLabeling(s.to_string());
        match s {
            "trivial" => Ok(LabelingKind::Trivial),
            "parity" => Ok(LabelingKind::Parity),
            _ => {
                let m = s.strip_prefix("lambda-mod:").ok_or_else(bad)?;
                let m: u32 = m.parse().map_err(|_| bad())?;
                if m == 0 {
                    return Err(bad());
                }
                Ok(LabelingKind::LambdaExponentMod(m))
            }
        }
    }
}

impl fmt::Display for LabelingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LabelingKind::Trivial => write!(f, "trivial"),
            LabelingKind::LambdaExponentMod(m) => write!(f, "lambda-mod:{m}"),
            LabelingKind::Parity => write!(f, "parity"),
        }
    }
}

/// Labels of the right cosets `H\G`, with label 0 for `H` itself and the
/// permutation action of each generator.
#[derive(Debug, Clone)]
pub struct CosetLabeling {
    kind: LabelingKind,
    index: usize,
    levels: Option<LevelStructure>,
    generator_labels: Vec<usize>,
}

impl CosetLabeling {
    pub fn new(g: &MeasuredGroup, kind: LabelingKind) -> Result<Self, GroupError> {
        let (index, levels) = match kind {
            LabelingKind::Trivial => (1, None),
            LabelingKind::LambdaExponentMod(m) => {
                let levels = g.level_structure().ok_or_else(|| {
                    GroupError::UnsupportedLabeling(format!(
                        "{kind}: lambda values of {} are not powers of one base",
                        g.name()
                    ))
                })?;
                (m as usize, Some(levels))
            }
            LabelingKind::Parity => (2, None),
        };
        let mut out = CosetLabeling {
            kind,
            index,
            levels,
            generator_labels: Vec::new(),
        };
        out.generator_labels = g
            .generators()
            .iter()
            .map(|s| out.label(&s.element))
            .collect::<Result<_, _>>()?;
        Ok(out)
    }

    pub fn kind(&self) -> LabelingKind {
        self.kind
    }

    /// The index `[G:H]`.
    pub fn index(&self) -> usize {
        self.index
    }

    pub fn label(&self, x: &AffineElement) -> Result<usize, GroupError> {
        let m = self.index as i64;
        match self.kind {
            LabelingKind::Trivial => Ok(0),
            LabelingKind::LambdaExponentMod(_) => {
                let levels = self.levels.as_ref().expect("set in new");
                let e = levels.exponent_of(x.lambda()).ok_or_else(|| {
                    GroupError::UnsupportedLabeling(format!("{x} has no lambda-exponent"))
                })?;
                Ok(e.rem_euclid(m) as usize)
            }
            LabelingKind::Parity => {
                let q = x
                    .c()
                    .as_rational()
                    .filter(|q| q.is_integer() && x.lambda().is_one());
                let q = q.ok_or_else(|| {
                    GroupError::UnsupportedLabeling(format!(
                        "parity needs an integer translation, got {x}"
                    ))
                })?;
                let r = q.numer().mod_floor(&BigInt::from(2));
                Ok(r.to_usize().unwrap())
            }
        }
    }

    /// Label of the exponent `e` of `lambda` relative to the level base, for
    /// the lambda-exponent labeling.
    pub fn label_of_exponent(&self, e: i64) -> Option<usize> {
        match self.kind {
            LabelingKind::Trivial => Some(0),
            LabelingKind::LambdaExponentMod(m) => Some(e.rem_euclid(m as i64) as usize),
            LabelingKind::Parity => None,
        }
    }

    /// Right action of generator `s` on labels: `label(x s)`.
    pub fn act(&self, label: usize, s: usize) -> usize {
        (label + self.generator_labels[s]) % self.index
    }

    pub fn generator_labels(&self) -> &[usize] {
        &self.generator_labels
    }

    /// Whether the induced chain on `H\G` reaches every label.
    pub fn is_irreducible(&self) -> bool {
        let mut seen = vec![false; self.index];
        seen[0] = true;
        let mut queue = VecDeque::from([0usize]);
        while let Some(l) = queue.pop_front() {
            for s in 0..self.generator_labels.len() {
                let next = self.act(l, s);
                if !seen[next] {
                    seen[next] = true;
                    queue.push_back(next);
                }
            }
        }
        seen.into_iter().all(|v| v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::{bs12, zline, Word};

    #[test]
    fn parse_kinds() {
        assert_eq!(
            "parity".parse::<LabelingKind>().unwrap(),
            LabelingKind::Parity
        );
        assert_eq!(
            "lambda-mod:2".parse::<LabelingKind>().unwrap(),
            LabelingKind::LambdaExponentMod(2)
        );
        assert!("lambda-mod:0".parse::<LabelingKind>().is_err());
        assert!("cosets".parse::<LabelingKind>().is_err());
    }

    #[test]
    fn labels_are_homomorphic() {
        let g = bs12();
        let lab = CosetLabeling::new(&g, LabelingKind::LambdaExponentMod(3)).unwrap();
        assert!(lab.is_irreducible());
        let w: Word = "a^2 b a^-4 b^-1 a".parse().unwrap();
        let x = w.evaluate(&g).unwrap();
        assert_eq!(
            lab.label(&x).unwrap(),
            (2 - 4 + 1i64).rem_euclid(3) as usize
        );
        for (i, s) in g.generators().iter().enumerate() {
            let xs = x.mul(&s.element).unwrap();
            assert_eq!(lab.label(&xs).unwrap(), lab.act(lab.label(&x).unwrap(), i));
        }
    }

    #[test]
    fn parity_on_zline_only() {
        let lab = CosetLabeling::new(&zline(), LabelingKind::Parity).unwrap();
        assert_eq!(lab.index(), 2);
        assert_eq!(lab.generator_labels(), &[1, 1]);
        assert!(lab.is_irreducible());
        assert!(CosetLabeling::new(&bs12(), LabelingKind::Parity).is_err());
        assert!(CosetLabeling::new(&zline(), LabelingKind::LambdaExponentMod(2)).is_err());
    }
}
