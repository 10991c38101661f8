//! Finitely generated subgroups of the affine group A(F), equipped with a
//! finitely supported symmetric step measure.

mod element;
mod labeling;
mod levels;
mod metric;
mod word;

use std::fmt;
use std::str::FromStr;

use num_rational::BigRational;
use thiserror::Error;

use crate::fields::{FieldError, LaurentRational, LogAbs, Place, ValuedScalar};

pub use element::AffineElement;
pub use labeling::{CosetLabeling, LabelingKind};
pub use levels::LevelStructure;
pub use metric::{growth_constants, word_length, Ball, GrowthConstants, DEFAULT_NODE_BUDGET};
pub use word::Word;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GroupError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("lambda must be nonzero")]
    ZeroLambda,
    #[error("unknown group `{0}`")]
    UnknownGroup(String),
    #[error("unknown generator label `{0}`")]
    UnknownLabel(String),
    #[error("malformed word `{word}` at byte {position}")]
    MalformedWord { word: String, position: usize },
    #[error("malformed element literal `{0}`")]
    MalformedElement(String),
    #[error("step measure is not symmetric: {0}")]
    NotSymmetric(String),
    #[error("invalid step measure: {0}")]
    InvalidMeasure(String),
    #[error("unsupported labeling: {0}")]
    UnsupportedLabeling(String),
    #[error("ball exceeded the node budget of {budget}")]
    BudgetExceeded { budget: usize },
    #[error("group is virtually abelian (every lambda is a root of unity)")]
    VirtuallyAbelian,
    #[error("no element with |lambda| > 1 within radius {0}")]
    NoExpandingElement(u32),
}

/// One atom of the step measure.
#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    pub label: String,
    pub element: AffineElement,
    /// Integer weight; the probability is `weight / total_weight`.
    pub weight: u64,
    /// Index of the generator equal to this one's inverse.
    pub inverse: usize,
}

/// A finitely generated subgroup of A(F) with a symmetric, finitely
/// supported step measure on its generators.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasuredGroup {
    name: String,
    place: Place,
    generators: Vec<Generator>,
    total_weight: u64,
    /// Distinguished `(0, lambda)` element with `|lambda| > 1`.
    x_element: Option<AffineElement>,
    /// Distinguished `(c, 1)` element with `c != 0` in the support.
    z_element: Option<AffineElement>,
    virtually_abelian: bool,
}

fn is_root_of_unity(lambda: &ValuedScalar) -> bool {
    if let Some(q) = lambda.as_rational() {
        let one = BigRational::from_integer(1.into());
        return *q == one || *q == -one;
    }
    // Nonzero constants of F_p(x) lie in F_p^x.
    lambda
        .as_laurent()
        .map(|v| v.degree() == Some(0) && v.denominator().degree() == Some(0))
        .unwrap_or(false)
}

impl MeasuredGroup {
    /// Builds a measured group from `(label, element, weight)` atoms. The
    /// support must be closed under inversion with matching weights.
    pub fn new(
        name: impl Into<String>,
        place: Place,
        atoms: Vec<(String, AffineElement, u64)>,
    ) -> Result<Self, GroupError> {
        if atoms.is_empty() {
            return Err(GroupError::InvalidMeasure("empty support".into()));
        }
        let mut generators = Vec::with_capacity(atoms.len());
        for (label, element, weight) in &atoms {
            if *weight == 0 {
                return Err(GroupError::InvalidMeasure(format!(
                    "zero weight on {label}"
                )));
            }
            if element.place() != place {
                return Err(GroupError::Field(FieldError::PlaceMismatch));
            }
            let inv = element.inverse();
            let inverse = atoms
                .iter()
                .position(|(_, e, _)| *e == inv)
                .ok_or_else(|| GroupError::NotSymmetric(format!("{label} has no inverse")))?;
            if atoms[inverse].2 != *weight {
                return Err(GroupError::NotSymmetric(format!(
                    "mu({label}) != mu({})",
                    atoms[inverse].0
                )));
            }
            generators.push(Generator {
                label: label.clone(),
                element: element.clone(),
                weight: *weight,
                inverse,
            });
        }
        let total_weight = generators.iter().map(|g| g.weight).sum();
        let virtually_abelian = generators
            .iter()
            .all(|g| is_root_of_unity(g.element.lambda()));
        Ok(MeasuredGroup {
            name: name.into(),
            place,
            generators,
            total_weight,
            x_element: None,
            z_element: None,
            virtually_abelian,
        })
    }

    /// Uniform measure on the given symmetric set.
    pub fn uniform(
        name: impl Into<String>,
        place: Place,
        gens: Vec<(String, AffineElement)>,
    ) -> Result<Self, GroupError> {
        Self::new(
            name,
            place,
            gens.into_iter().map(|(l, e)| (l, e, 1)).collect(),
        )
    }

    pub fn with_x_element(mut self, x: AffineElement) -> Self {
        self.x_element = Some(x);
        self
    }

    pub fn with_z_element(mut self, z: AffineElement) -> Self {
        self.z_element = Some(z);
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn place(&self) -> Place {
        self.place
    }

    pub fn generators(&self) -> &[Generator] {
        &self.generators
    }

    pub fn total_weight(&self) -> u64 {
        self.total_weight
    }

    pub fn probability(&self, index: usize) -> f64 {
        self.generators[index].weight as f64 / self.total_weight as f64
    }

    pub fn probability_exact(&self, index: usize) -> BigRational {
        BigRational::new(
            self.generators[index].weight.into(),
            self.total_weight.into(),
        )
    }

    pub fn x_element(&self) -> Option<&AffineElement> {
        self.x_element.as_ref()
    }

    pub fn z_element(&self) -> Option<&AffineElement> {
        self.z_element.as_ref()
    }

    pub fn is_virtually_abelian(&self) -> bool {
        self.virtually_abelian
    }

    pub fn identity(&self) -> AffineElement {
        AffineElement::identity(self.place)
    }

    pub fn level_structure(&self) -> Option<LevelStructure> {
        LevelStructure::of(self)
    }

    pub fn generator(&self, label: &str) -> Option<&Generator> {
        self.generators.iter().find(|g| g.label == label)
    }

    /// True when `mu(s) = mu(s^{-1})` for every atom.
    pub fn is_symmetric(&self) -> bool {
        self.generators
            .iter()
            .all(|g| self.generators[g.inverse].weight == g.weight)
    }

    /// Conjugates the whole presentation, `s -> h^{-1} s h`.
    pub fn conjugated(&self, h: &AffineElement) -> Result<Self, GroupError> {
        let mut out = self.clone();
        for g in out.generators.iter_mut() {
            g.element = g.element.conjugate_by(h)?;
        }
        out.x_element = self
            .x_element
            .as_ref()
            .map(|x| x.conjugate_by(h))
            .transpose()?;
        out.z_element = self
            .z_element
            .as_ref()
            .map(|z| z.conjugate_by(h))
            .transpose()?;
        out.name = format!("{}^{}", self.name, h);
        Ok(out)
    }

    /// Returns a conjugate presentation in which some element of the form
    /// `(0, lambda)` with `|lambda| > 1` is available as the x-element.
    pub fn normalize_presentation(&self, search_radius: u32) -> Result<Self, GroupError> {
        if self.virtually_abelian {
            return Err(GroupError::VirtuallyAbelian);
        }
        if let Some(x) = &self.x_element {
            if x.c().is_zero() && x.rho().to_f64() < 0.0 {
                return Ok(self.clone());
            }
        }
        let expanding = |e: &AffineElement| e.lambda().abs_value().to_f64() > 0.0;
        let mut candidates: Vec<AffineElement> = self
            .generators
            .iter()
            .map(|g| g.element.clone())
            .filter(|e| expanding(e))
            .collect();
        if candidates.is_empty() && search_radius > 1 {
            let ball = Ball::build(self, search_radius, DEFAULT_NODE_BUDGET)?;
            candidates = ball.elements().filter(|e| expanding(e)).cloned().collect();
        }
        if let Some(ready) = candidates.iter().find(|e| e.c().is_zero()) {
            return Ok(self.clone().with_x_element(ready.clone()));
        }
        let target = candidates
            .first()
            .ok_or(GroupError::NoExpandingElement(search_radius))?;
        let one = ValuedScalar::one(self.place);
        let shift = one.sub(target.lambda())?.inv()?.mul(target.c())?;
        let h = AffineElement::translation(shift);
        let conj = self.conjugated(&h)?;
        let x = target.conjugate_by(&h)?;
        debug_assert!(x.c().is_zero());
        Ok(conj.with_x_element(x))
    }

    /// Looks up one of the built-in test groups: `bs12`, `zline`, or
    /// `lamplighter:p`.
    pub fn builtin(spec: &str) -> Result<Self, GroupError> {
        let spec = spec.trim();
        match spec {
            "bs12" => Ok(bs12()),
            "zline" => Ok(zline()),
            _ => match spec.strip_prefix("lamplighter:") {
                Some(p) => {
                    let p: u64 = p
                        .parse()
                        .map_err(|_| GroupError::UnknownGroup(spec.into()))?;
                    lamplighter(p)
                }
                None => Err(GroupError::UnknownGroup(spec.into())),
            },
        }
    }
}

impl FromStr for MeasuredGroup {
    type Err = GroupError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::builtin(s)
    }
}

impl fmt::Display for MeasuredGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} over {} with", self.name, self.place)?;
        for g in &self.generators {
            write!(
                f,
                " {}={} [{}/{}]",
                g.label, g.element, g.weight, self.total_weight
            )?;
        }
        Ok(())
    }
}

fn rat(n: i64, d: i64) -> ValuedScalar {
    ValuedScalar::from_ratio(n, d, Place::Archimedean)
}

fn arch_el(c: (i64, i64), l: (i64, i64)) -> AffineElement {
    AffineElement::new(rat(c.0, c.1), rat(l.0, l.1)).expect("valid literal")
}

/// `<a = (0, 2), b = (1, 1)>` over Q with the usual absolute value and the
/// uniform measure on `{a, a^-1, b, b^-1}`.
pub fn bs12() -> MeasuredGroup {
    let a = arch_el((0, 1), (2, 1));
    let b = arch_el((1, 1), (1, 1));
    MeasuredGroup::uniform(
        "bs12",
        Place::Archimedean,
        vec![
            ("a".into(), a.clone()),
            ("a^-1".into(), a.inverse()),
            ("b".into(), b.clone()),
            ("b^-1".into(), b.inverse()),
        ],
    )
    .expect("bs12 is symmetric")
    .with_x_element(a)
    .with_z_element(b)
}

/// The integers as translations `(+-1, 1)` over Q.
pub fn zline() -> MeasuredGroup {
    let one = arch_el((1, 1), (1, 1));
    MeasuredGroup::uniform(
        "zline",
        Place::Archimedean,
        vec![("a".into(), one.clone()), ("a^-1".into(), one.inverse())],
    )
    .expect("zline is symmetric")
    .with_z_element(one)
}

/// `(Z/pZ) wr Z` inside A(F_p(x)): shift `t = (0, x)` and lamp `a = (1, 1)`.
pub fn lamplighter(p: u64) -> Result<MeasuredGroup, GroupError> {
    let place = Place::laurent(p)?;
    let p = p as u32;
    let x = ValuedScalar::laurent(LaurentRational::monomial(1, 1, p));
    let t = AffineElement::dilation(x)?;
    let lamp = AffineElement::translation(ValuedScalar::one(place));
    let mut gens = vec![("a".to_string(), lamp.clone())];
    if p != 2 {
        gens.push(("a^-1".into(), lamp.inverse()));
    }
    gens.push(("t".into(), t.clone()));
    gens.push(("t^-1".into(), t.inverse()));
    Ok(
        MeasuredGroup::uniform(format!("lamplighter:{p}"), place, gens)?
            .with_x_element(t)
            .with_z_element(lamp),
    )
}

/// Logarithm of the smallest `|lambda| > 1` among generators, if any.
pub fn min_expanding_log(g: &MeasuredGroup) -> Option<LogAbs> {
    g.generators()
        .iter()
        .map(|s| s.element.lambda().abs_value())
        .filter(|l| l.to_f64() > 0.0)
        .min_by(|a, b| a.to_f64().total_cmp(&b.to_f64()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bs12_designated_elements() {
        let g = bs12();
        let z = g.z_element().unwrap();
        assert!(!z.c().is_zero());
        assert!(z.lambda().is_one());
        let x = g.x_element().unwrap();
        assert_eq!(x.lambda().abs_value(), LogAbs::exact(1, 2));
        assert!(g.is_symmetric());
        assert!(!g.is_virtually_abelian());
    }

    #[test]
    fn lamplighter_two_has_self_inverse_lamp() {
        let g = lamplighter(2).unwrap();
        assert_eq!(g.generators().len(), 3);
        let lamp = g.generator("a").unwrap();
        assert_eq!(lamp.element, lamp.element.inverse());
        assert_eq!(g.generators()[lamp.inverse].label, "a");
        assert!(g.is_symmetric());
        assert_eq!(lamplighter(3).unwrap().generators().len(), 4);
    }

    #[test]
    fn builtin_lookup_errors() {
        assert!(matches!(
            MeasuredGroup::builtin("lamplighter:4"),
            Err(GroupError::Field(FieldError::NotPrime(4)))
        ));
        assert!(matches!(
            MeasuredGroup::builtin("heisenberg"),
            Err(GroupError::UnknownGroup(_))
        ));
        assert!(MeasuredGroup::builtin("zline")
            .unwrap()
            .is_virtually_abelian());
    }

    #[test]
    fn asymmetric_measure_rejected() {
        let a = arch_el((0, 1), (2, 1));
        let r = MeasuredGroup::new(
            "bad",
            Place::Archimedean,
            vec![("a".into(), a.clone(), 1), ("a^-1".into(), a.inverse(), 2)],
        );
        assert!(matches!(r, Err(GroupError::NotSymmetric(_))));
        let r = MeasuredGroup::uniform("bad", Place::Archimedean, vec![("a".into(), a)]);
        assert!(matches!(r, Err(GroupError::NotSymmetric(_))));
    }

    #[test]
    fn normalization_fixed_point() {
        let g = bs12();
        let n = g.normalize_presentation(4).unwrap();
        assert_eq!(n, g);
    }

    #[test]
    fn normalization_conjugates_affine_generator() {
        let s = arch_el((1, 1), (2, 1));
        let b = arch_el((1, 1), (1, 1));
        let g = MeasuredGroup::uniform(
            "skew",
            Place::Archimedean,
            vec![
                ("s".into(), s.clone()),
                ("s^-1".into(), s.inverse()),
                ("b".into(), b.clone()),
                ("b^-1".into(), b.inverse()),
            ],
        )
        .unwrap();
        let n = g.normalize_presentation(4).unwrap();
        let x = n.x_element().unwrap();
        assert_eq!(*x, arch_el((0, 1), (2, 1)));
        // The conjugator is ((1 - 2)^{-1} * 1, 1) = (-1, 1).
        let h = arch_el((-1, 1), (1, 1));
        assert_eq!(s.conjugate_by(&h).unwrap(), *x);
        for (old, new) in g.generators().iter().zip(n.generators()) {
            assert_eq!(old.weight, new.weight);
            assert_eq!(old.element.conjugate_by(&h).unwrap(), new.element);
        }
        let ball_old = Ball::build(&g, 4, DEFAULT_NODE_BUDGET).unwrap();
        let ball_new = Ball::build(&n, 4, DEFAULT_NODE_BUDGET).unwrap();
        assert_eq!(ball_old.sphere_sizes(), ball_new.sphere_sizes());
    }

    #[test]
    fn normalization_rejects_virtually_abelian() {
        assert_eq!(
            zline().normalize_presentation(4),
            Err(GroupError::VirtuallyAbelian)
        );
    }
}
