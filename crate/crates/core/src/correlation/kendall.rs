//! Kendall τ-b with Knight's O(n log n) pair counting.

use super::Association;
use crate::error::{ensure_finite, Error, Result};

/// Number of unordered pairs inside runs of equal keys of a sorted sequence.
fn tied_pairs<T: PartialEq>(sorted: &[T]) -> u64 {
    let mut total = 0u64;
    let mut run = 1u64;
    for w in sorted.windows(2) {
        if w[0] == w[1] {
            run += 1;
        } else {
            total += run * (run - 1) / 2;
            run = 1;
        }
    }
    total + run * (run - 1) / 2
}

/// Stable merge sort of `values`, returning the number of strict inversions.
fn sort_counting_inversions(values: &mut [f64], scratch: &mut [f64]) -> u64 {
    let n = values.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps = {
        let (left, right) = values.split_at_mut(mid);
        let (s_left, s_right) = scratch.split_at_mut(mid);
        sort_counting_inversions(left, s_left) + sort_counting_inversions(right, s_right)
    };
    let (mut i, mut j, mut k) = (0, mid, 0);
    while i < mid && j < n {
        if values[j] < values[i] {
            scratch[k] = values[j];
            swaps += (mid - i) as u64;
            j += 1;
        } else {
            scratch[k] = values[i];
            i += 1;
        }
        k += 1;
    }
    scratch[k..k + mid - i].copy_from_slice(&values[i..mid]);
    k += mid - i;
    scratch[k..k + n - j].copy_from_slice(&values[j..n]);
    values.copy_from_slice(&scratch[..n]);
    swaps
}

/// Kendall's τ-b.
///
/// Agrees exactly with counting concordant and discordant pairs one by one:
/// `τ_b = (n_c − n_d) / √((n₀ − n₁)(n₀ − n₂))` where `n₁`, `n₂` are the pairs
/// tied in `x` and in `y`. If either argument is constant the coefficient is
/// undefined and reported as 0 with [`Association::degenerate`] set.
pub fn kendall_tau(x: &[f64], y: &[f64]) -> Result<Association> {
    if x.len() != y.len() {
        return Err(Error::Input(format!(
            "length mismatch: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::Input("kendall tau needs at least 2 samples".into()));
    }
    ensure_finite(x, "x")?;
    ensure_finite(y, "y")?;

    let n = x.len() as u64;
    let total_pairs = n * (n - 1) / 2;

    // `+ 0.0` folds -0.0 into 0.0 so total ordering agrees with `==`.
    let mut pairs: Vec<(f64, f64)> = x.iter().zip(y).map(|(&a, &b)| (a + 0.0, b + 0.0)).collect();
    pairs.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));

    let xs: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let tied_x = tied_pairs(&xs);
    let tied_xy = tied_pairs(&pairs);

    let mut ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let mut scratch = vec![0.0; ys.len()];
    let discordant = sort_counting_inversions(&mut ys, &mut scratch);
    let tied_y = tied_pairs(&ys);

    let untied_x = total_pairs - tied_x;
    let untied_y = total_pairs - tied_y;
    if untied_x == 0 || untied_y == 0 {
        return Ok(Association::degenerate());
    }
    let concordant_minus_discordant =
        (total_pairs + tied_xy) as i64 - (tied_x + tied_y) as i64 - 2 * discordant as i64;
    let tau = concordant_minus_discordant as f64 / ((untied_x as f64) * (untied_y as f64)).sqrt();
    Ok(Association::new(tau.clamp(-1.0, 1.0)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_and_reversal() {
        let x = [3.0, 1.0, 4.0, 1.5, 9.0, 2.6];
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert_eq!(kendall_tau(&x, &x).unwrap().value, 1.0);
        assert_eq!(kendall_tau(&x, &neg).unwrap().value, -1.0);
    }

    #[test]
    fn three_point_example() {
        let tau = kendall_tau(&[1.0, 2.0, 3.0], &[1.0, 3.0, 2.0]).unwrap();
        assert!((tau.value - 1.0 / 3.0).abs() < 1e-15);
        assert!(!tau.degenerate);
    }

    #[test]
    fn constant_column_is_flagged() {
        let tau = kendall_tau(&[2.0, 2.0, 2.0], &[1.0, 3.0, 2.0]).unwrap();
        assert_eq!(tau.value, 0.0);
        assert!(tau.degenerate);
    }

    #[test]
    fn errors() {
        assert!(kendall_tau(&[1.0], &[1.0]).is_err());
        assert!(kendall_tau(&[1.0, 2.0], &[1.0]).is_err());
        assert!(kendall_tau(&[1.0, f64::NAN], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn inversion_count() {
        let mut v = [3.0, 1.0, 2.0, 2.0, 0.0];
        let mut s = [0.0; 5];
        // (3,1) (3,2) (3,2) (3,0) (1,0) (2,0) (2,0)
        assert_eq!(sort_counting_inversions(&mut v, &mut s), 7);
        assert_eq!(v, [0.0, 1.0, 2.0, 2.0, 3.0]);
    }
}
