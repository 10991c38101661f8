/// Size of the largest subset of `points` with pairwise gaps at least 1.
///
/// Sorted greedy sweep: keep a point whenever it is at least 1 above the
/// last kept one. On the line this is optimal (an exchange argument against
/// any optimal set, point by point from the left).
pub fn max_separated(points: &[f64]) -> usize {
    let mut v: Vec<f64> = points.iter().copied().filter(|x| x.is_finite()).collect();
    v.sort_by(f64::total_cmp);
    let mut count = 0;
    let mut last = f64::NEG_INFINITY;
    for x in v {
        if x - last >= 1.0 {
            count += 1;
            last = x;
        }
    }
    count
}

/// Exhaustive version of [`max_separated`], for at most 20 points.
pub fn max_separated_brute_force(points: &[f64]) -> usize {
    assert!(points.len() <= 20, "brute force is exponential");
    let n = points.len();
    (0u32..1 << n)
        .filter(|mask| {
            (0..n).all(|i| {
                mask >> i & 1 == 0
                    || (i + 1..n)
                        .all(|j| mask >> j & 1 == 0 || (points[i] - points[j]).abs() >= 1.0)
            })
        })
        .map(|mask| mask.count_ones() as usize)
        .max()
        .unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    #[test]
    fn small_cases() {
        assert_eq!(max_separated(&[]), 0);
        assert_eq!(max_separated(&[0.0, 0.5, 1.5, 3.0]), 3);
        assert_eq!(max_separated_brute_force(&[0.0, 0.5, 1.5, 3.0]), 3);
        assert_eq!(max_separated(&[0.0, 1.0, 2.0, 3.0]), 4);
        assert_eq!(max_separated(&[2.0, 2.0, 2.0]), 1);
    }

    proptest! {
        #[test]
        fn greedy_is_optimal(points in prop::collection::vec(-5.0f64..5.0, 0..=15)) {
            prop_assert_eq!(max_separated(&points), max_separated_brute_force(&points));
        }

        #[test]
        fn greedy_is_optimal_with_exact_ties(halves in prop::collection::vec(-10i32..10, 0..=15)) {
            let points: Vec<f64> = halves.iter().map(|&h| h as f64 / 2.0).collect();
            prop_assert_eq!(max_separated(&points), max_separated_brute_force(&points));
        }

        #[test]
        fn adding_points_never_decreases(points in prop::collection::vec(-5.0f64..5.0, 0..=15), extra in -5.0f64..5.0) {
            let mut more = points.clone();
            more.push(extra);
            prop_assert!(max_separated(&more) >= max_separated(&points));
        }
    }
}
