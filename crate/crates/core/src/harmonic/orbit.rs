use std::cmp::Ordering;
use std::sync::Arc;

use serde::Serialize;

use crate::groups::{AffineElement, MeasuredGroup};
use crate::stats::{linear_fit, numerical_rank, LinearFit};

use super::{require_normalized, EstimateCache, FSettings, HarmonicError};

/// Singular values below this fraction of the largest one count as zero.
pub const RANK_TOLERANCE: f64 = 1e-6;
/// Largest conjugation exponent searched for.
const MAX_CONJUGATION: u32 = 64;

/// Evidence that `f_r` and its translates by `y_n = x^{Nn} z x^{-Nn}` are
/// linearly independent.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrbitReport {
    pub group: String,
    pub settings: FSettings,
    /// Smallest `N` with `|lambda^N| (|lambda^N| - 1) |c(z)| > 5`.
    pub conjugation: u32,
    /// `|lambda^N| (|lambda^N| - 1) |c(z)|`.
    pub separation_bound: f64,
    pub y: Vec<AffineElement>,
    pub n_max: usize,
    pub j_max: usize,
    /// `points[n][m][j]` is `y_n^-1 y_m x^-(j+1)`.
    pub points: Vec<Vec<Vec<AffineElement>>>,
    /// `values[n][m][j]` is `f_r` at `points[n][m][j]`.
    pub values: Vec<Vec<Vec<f64>>>,
    pub std_errors: Vec<Vec<Vec<f64>>>,
    /// `f_r(x^-j)`, the common diagonal `n = m`.
    pub diagonal: Vec<f64>,
    /// Largest off-diagonal value for each `j`.
    pub off_diagonal_max: Vec<f64>,
    pub diagonal_fit: Option<LinearFit>,
    /// Every off-diagonal point has `|c| > 5`, decided exactly.
    pub off_diagonal_c_above_5: bool,
    /// Every off-diagonal point has `|c| >= floor(separation_bound)`, decided
    /// exactly.
    pub off_diagonal_c_at_bound: bool,
    pub gram: Vec<Vec<f64>>,
    pub singular_values: Vec<f64>,
    pub rank: usize,
    pub pass: bool,
}

/// Evaluates `f_r` at `y_n^-1 y_m x^-j` for `n, m <= n_max`, `1 <= j <= j_max`,
/// and computes the numerical rank of the Gram matrix of the rows
/// `(f_r(y_n^-1 y_m x^-j))_{m, j}`.
pub fn orbit_independence(
    g: &Arc<MeasuredGroup>,
    n_max: usize,
    j_max: usize,
    s: &FSettings,
    cache: &EstimateCache,
) -> Result<OrbitReport, HarmonicError> {
    require_normalized(g)?;
    if n_max == 0 || j_max == 0 {
        return Err(HarmonicError::InvalidConfig(
            "need n_max, j_max >= 1".into(),
        ));
    }
    let x = g.x_element().expect("normalized").clone();
    let z = g
        .z_element()
        .ok_or_else(|| HarmonicError::InvalidConfig(format!("{} has no z-element", g.name())))?
        .clone();
    let lam = x.lambda().abs_value().to_f64().exp();
    let c = z.c().abs_value().to_f64().exp();
    let bound = |n: u32| lam.powi(n as i32) * (lam.powi(n as i32) - 1.0) * c;
    let conjugation = (1..=MAX_CONJUGATION)
        .find(|&n| bound(n) > 5.0)
        .ok_or_else(|| HarmonicError::InvalidConfig("no conjugation exponent found".into()))?;
    let big_n = conjugation as i64;
    let y: Vec<AffineElement> = (1..=n_max as i64)
        .map(|n| {
            let xn = x.pow(big_n * n);
            xn.mul(&z)?.mul(&xn.inverse())
        })
        .collect::<Result<_, _>>()?;
    let x_inv_pow: Vec<AffineElement> = (1..=j_max as i64).map(|j| x.pow(-j)).collect();
    let mut points = Vec::with_capacity(n_max);
    for yn in &y {
        let yn_inv = yn.inverse();
        let mut row = Vec::with_capacity(n_max);
        for ym in &y {
            let base = yn_inv.mul(ym)?;
            row.push(
                x_inv_pow
                    .iter()
                    .map(|xj| base.mul(xj))
                    .collect::<Result<Vec<_>, _>>()?,
            );
        }
        points.push(row);
    }
    let floor_bound = bound(conjugation).floor() as u64;
    let (mut above_5, mut at_bound) = (true, true);
    for (n, row) in points.iter().enumerate() {
        for (m, cell) in row.iter().enumerate() {
            if n == m {
                continue;
            }
            for p in cell {
                above_5 &= p.c().abs_cmp_int(5) == Ordering::Greater;
                at_bound &= p.c().abs_cmp_int(floor_bound) != Ordering::Less;
            }
        }
    }
    let mut values = Vec::with_capacity(n_max);
    let mut std_errors = Vec::with_capacity(n_max);
    for row in &points {
        let mut vrow = Vec::with_capacity(n_max);
        let mut srow = Vec::with_capacity(n_max);
        for cell in row {
            let ests = cell
                .iter()
                .map(|p| cache.get_or_estimate(g, p, s))
                .collect::<Result<Vec<_>, _>>()?;
            vrow.push(ests.iter().map(|e| e.value).collect::<Vec<_>>());
            srow.push(ests.iter().map(|e| e.std_error).collect::<Vec<_>>());
        }
        values.push(vrow);
        std_errors.push(srow);
    }
    let diagonal = values[0][0].clone();
    let off_diagonal_max: Vec<f64> = (0..j_max)
        .map(|j| {
            let mut best = f64::NEG_INFINITY;
            for (n, row) in values.iter().enumerate() {
                for (m, cell) in row.iter().enumerate() {
                    if n != m {
                        best = best.max(cell[j]);
                    }
                }
            }
            best
        })
        .collect();
    let js: Vec<f64> = (1..=j_max).map(|j| j as f64).collect();
    let diagonal_fit = linear_fit(&js, &diagonal);
    let rows: Vec<Vec<f64>> = values
        .iter()
        .map(|row| row.iter().flatten().copied().collect())
        .collect();
    let gram: Vec<Vec<f64>> = rows
        .iter()
        .map(|a| {
            rows.iter()
                .map(|b| a.iter().zip(b).map(|(u, v)| u * v).sum())
                .collect()
        })
        .collect();
    let (rank, singular_values) = numerical_rank(&gram, RANK_TOLERANCE);
    Ok(OrbitReport {
        group: g.name().to_string(),
        settings: s.clone(),
        conjugation,
        separation_bound: bound(conjugation),
        y,
        n_max,
        j_max,
        points,
        pass: rank == n_max && above_5,
        values,
        std_errors,
        diagonal,
        off_diagonal_max,
        diagonal_fit,
        off_diagonal_c_above_5: above_5,
        off_diagonal_c_at_bound: at_bound,
        gram,
        singular_values,
        rank,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{Place, ValuedScalar};
    use crate::groups::bs12;

    #[test]
    fn bs12_orbit_geometry() {
        let g = Arc::new(bs12());
        let s = FSettings::new(16.0, 300, 1);
        let rep = orbit_independence(&g, 3, 2, &s, &EstimateCache::default()).unwrap();
        assert_eq!(rep.conjugation, 2);
        assert_eq!(rep.separation_bound, 12.0);
        let four = ValuedScalar::from_int(4, Place::Archimedean);
        assert_eq!(rep.y[0], AffineElement::translation(four));
        assert!(rep.off_diagonal_c_above_5 && rep.off_diagonal_c_at_bound);
        // y_1^-1 y_2 = (16 - 4, 1)
        assert_eq!(rep.points[0][1][0].c().to_string(), "12");
        assert_eq!(rep.points[0][0][1], g.x_element().unwrap().pow(-2));
        assert_eq!(rep.gram.len(), 3);
    }
}
