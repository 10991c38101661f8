//! Word metric on the Cayley graph, by breadth-first search over exact
//! normal forms.

use std::collections::HashMap;

use serde::Serialize;

use super::{AffineElement, GroupError, MeasuredGroup};

pub const DEFAULT_NODE_BUDGET: usize = 5_000_000;

/// The ball of radius `radius` around the identity, as a map from normal
/// form to word length.
#[derive(Debug, Clone)]
pub struct Ball {
    radius: u32,
    dist: HashMap<AffineElement, u32>,
    spheres: Vec<Vec<AffineElement>>,
}

impl Ball {
    pub fn build(g: &MeasuredGroup, radius: u32, budget: usize) -> Result<Self, GroupError> {
        let mut ball = Ball {
            radius: 0,
            dist: HashMap::new(),
            spheres: Vec::new(),
        };
        let id = g.identity();
        ball.dist.insert(id.clone(), 0);
        ball.spheres.push(vec![id]);
        while ball.radius < radius {
            ball.grow(g, budget)?;
        }
        Ok(ball)
    }

    /// Adds the next sphere.
    pub fn grow(&mut self, g: &MeasuredGroup, budget: usize) -> Result<(), GroupError> {
        let next_radius = self.radius + 1;
        let mut next = Vec::new();
        for x in &self.spheres[self.radius as usize] {
            for s in g.generators() {
                let y = x.mul(&s.element)?;
                if !self.dist.contains_key(&y) {
                    if self.dist.len() >= budget {
                        return Err(GroupError::BudgetExceeded { budget });
                    }
                    self.dist.insert(y.clone(), next_radius);
                    next.push(y);
                }
            }
        }
        self.spheres.push(next);
        self.radius = next_radius;
        Ok(())
    }

    pub fn radius(&self) -> u32 {
        self.radius
    }

    pub fn len(&self) -> usize {
        self.dist.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dist.is_empty()
    }

    pub fn distance(&self, x: &AffineElement) -> Option<u32> {
        self.dist.get(x).copied()
    }

    /// Elements in BFS order (by distance, then discovery order).
    pub fn elements(&self) -> impl Iterator<Item = &AffineElement> {
        self.spheres.iter().flatten()
    }

    pub fn sphere(&self, k: u32) -> &[AffineElement] {
        &self.spheres[k as usize]
    }

    pub fn sphere_sizes(&self) -> Vec<usize> {
        self.spheres.iter().map(Vec::len).collect()
    }
}

/// `|x|_S`, or `None` when it exceeds `radius_cap`.
pub fn word_length(
    g: &MeasuredGroup,
    x: &AffineElement,
    radius_cap: u32,
    budget: usize,
) -> Result<Option<u32>, GroupError> {
    let mut ball = Ball::build(g, 0, budget)?;
    loop {
        if let Some(d) = ball.distance(x) {
            return Ok(Some(d));
        }
        if ball.radius >= radius_cap {
            return Ok(None);
        }
        ball.grow(g, budget)?;
    }
}

/// Empirical constants for `|rho(x)| <= K |x|` and `log(1 + |c(x)|) <= K' |x|`
/// over a ball.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GrowthConstants {
    pub radius: u32,
    pub ball_size: usize,
    pub rho_per_length: f64,
    pub log_c_per_length: f64,
}

pub fn growth_constants(ball: &Ball) -> GrowthConstants {
    let mut rho_k = 0.0f64;
    let mut c_k = 0.0f64;
    for (x, &d) in &ball.dist {
        if d == 0 {
            continue;
        }
        rho_k = rho_k.max(x.rho().to_f64().abs() / d as f64);
        let c = x.c_abs().to_f64();
        let log1p = if c == f64::NEG_INFINITY {
            0.0
        } else {
            c.exp().ln_1p()
        };
        c_k = c_k.max(log1p / d as f64);
    }
    GrowthConstants {
        radius: ball.radius,
        ball_size: ball.len(),
        rho_per_length: rho_k,
        log_c_per_length: c_k,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{LaurentRational, ValuedScalar};
    use crate::groups::{bs12, lamplighter, Word};

    #[test]
    fn identity_and_generators() {
        let g = bs12();
        let b = DEFAULT_NODE_BUDGET;
        assert_eq!(word_length(&g, &g.identity(), 0, b).unwrap(), Some(0));
        for s in g.generators() {
            assert_eq!(word_length(&g, &s.element, 3, b).unwrap(), Some(1));
        }
    }

    #[test]
    fn lamplighter_two_lamps() {
        let g = lamplighter(2).unwrap();
        let c = ValuedScalar::laurent(LaurentRational::from_sparse(&[(0, 1), (1, 1)], 2));
        let target = AffineElement::translation(c);
        let witness: Word = "a t a t^-1".parse().unwrap();
        assert_eq!(witness.evaluate(&g).unwrap(), target);
        assert_eq!(
            word_length(&g, &target, 6, DEFAULT_NODE_BUDGET).unwrap(),
            Some(4)
        );
        // Nothing shorter: exhaustive check of the radius-3 ball.
        let ball = Ball::build(&g, 3, DEFAULT_NODE_BUDGET).unwrap();
        assert_eq!(ball.distance(&target), None);
    }

    #[test]
    fn budget_is_enforced() {
        let g = bs12();
        assert!(matches!(
            Ball::build(&g, 10, 50),
            Err(GroupError::BudgetExceeded { budget: 50 })
        ));
    }

    #[test]
    fn not_found_beyond_cap() {
        let g = bs12();
        let far = g.generator("a").unwrap().element.pow(5);
        assert_eq!(word_length(&g, &far, 3, DEFAULT_NODE_BUDGET).unwrap(), None);
        assert_eq!(
            word_length(&g, &far, 6, DEFAULT_NODE_BUDGET).unwrap(),
            Some(5)
        );
    }
}
