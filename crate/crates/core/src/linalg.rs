//! Small shared numerical kernels: the least-squares refit and the
//! deterministic argmax used by every selection step.

use faer::Mat;
use num_complex::Complex64;

use crate::index::MultiIndex;

/// Scores within this relative distance of the maximum count as ties; the
/// smallest index among them wins.
pub const TIE_RTOL: f64 = 1e-12;

/// Denominators below this fraction of the largest candidate denominator are
/// treated as zero-norm atoms and excluded.
pub const ZERO_DENOM_RTOL: f64 = 1e-20;

/// A best normalized correlation at or below this fraction of `||r||^2`
/// means the residual is numerically orthogonal to every atom. Any pick
/// would be decided by rounding, so the solvers stop instead.
pub const EXHAUSTED_RTOL: f64 = 1e-20;

/// Whether `objective`, a normalized correlation `sum_m |<a, r_m>|^2 / ||a||^2`,
/// is numerically zero for a residual of norm `residual_norm`.
pub fn is_exhausted(objective: f64, residual_norm: f64) -> bool {
    !(objective > EXHAUSTED_RTOL * residual_norm * residual_norm)
}

/// Minimum-norm least squares `min ||A X - B||_F` through the SVD.
///
/// `a` is `rows x n` and `b` is `rows x m`, both column-major. Singular values
/// at or below `rcond * sigma_max` are dropped; the flag reports whether any
/// were.
pub fn lstsq(a: &[Complex64], b: &[Complex64], rows: usize, rcond: f64) -> (Vec<Complex64>, bool) {
    let n = a.len() / rows;
    let m = b.len() / rows;
    let zero = Complex64::new(0.0, 0.0);
    if n == 0 {
        return (Vec::new(), false);
    }
    let am = Mat::from_fn(rows, n, |i, j| a[j * rows + i]);
    let svd = am.thin_svd().expect("svd of a finite matrix converges");
    let (u, s, v) = (svd.U(), svd.S().column_vector(), svd.V());
    let k = s.nrows();
    let sigma: Vec<f64> = (0..k).map(|i| s[i].re).collect();
    let sigma_max = sigma.iter().cloned().fold(0.0_f64, f64::max);
    if sigma_max == 0.0 {
        return (vec![zero; n * m], true);
    }
    let cutoff = rcond * sigma_max;
    let deficient = k < n || sigma.iter().any(|&x| x <= cutoff);

    let mut x = vec![zero; n * m];
    for c in 0..m {
        let bc = &b[c * rows..(c + 1) * rows];
        for (i, &si) in sigma.iter().enumerate() {
            if si <= cutoff {
                continue;
            }
            let w = (0..rows)
                .map(|r| u[(r, i)].conj() * bc[r])
                .sum::<Complex64>()
                / si;
            for (j, dst) in x[c * n..(c + 1) * n].iter_mut().enumerate() {
                *dst += v[(j, i)] * w;
            }
        }
    }
    (x, deficient)
}

/// Runs one small product through the matrix-multiply kernel so that its
/// per-thread packing buffer exists before anything is measured. The buffer
/// is sized by the CPU cache, not by the problem, and lives for the thread.
pub fn warm_up() {
    let a = Mat::<Complex64>::from_fn(64, 8, |i, j| Complex64::new((i + j) as f64, 1.0));
    let svd = a.thin_svd().expect("svd of a finite matrix converges");
    std::hint::black_box(svd.S().column_vector()[0]);
}

/// `B - A X` for column-major operands.
pub fn residual(a: &[Complex64], x: &[Complex64], b: &[Complex64], rows: usize) -> Vec<Complex64> {
    let n = a.len().checked_div(rows).unwrap_or(0);
    let m = b.len().checked_div(rows).unwrap_or(0);
    let mut r = b.to_vec();
    for c in 0..m {
        for j in 0..n {
            let coef = x[c * n + j];
            let col = &a[j * rows..(j + 1) * rows];
            for (dst, &v) in r[c * rows..(c + 1) * rows].iter_mut().zip(col) {
                *dst -= v * coef;
            }
        }
    }
    r
}

/// Ratio scores `num / den` with zero-norm candidates mapped to `-inf`.
pub fn ratio_scores(num: &[f64], den: &[f64]) -> Vec<f64> {
    let den_max = den.iter().cloned().fold(0.0_f64, f64::max);
    num.iter()
        .zip(den)
        .map(|(&n, &d)| {
            if den_max > 0.0 && d > ZERO_DENOM_RTOL * den_max {
                n / d
            } else {
                f64::NEG_INFINITY
            }
        })
        .collect()
}

/// Deterministic argmax: the smallest index whose score lies within
/// [`TIE_RTOL`] of the maximum. Masked and non-finite candidates are skipped.
///
/// When nothing is selectable, falls back to the first unmasked index.
pub fn argmax(scores: &[f64], mask: Option<&[bool]>) -> Option<usize> {
    let allowed = |j: usize| mask.is_none_or(|m| !m[j]);
    let best = scores
        .iter()
        .enumerate()
        .filter(|&(j, s)| allowed(j) && s.is_finite())
        .map(|(_, &s)| s)
        .fold(f64::NEG_INFINITY, f64::max);
    if best.is_finite() {
        let floor = best - TIE_RTOL * best.abs();
        scores
            .iter()
            .enumerate()
            .position(|(j, &s)| allowed(j) && s.is_finite() && s >= floor)
    } else {
        (0..scores.len()).find(|&j| allowed(j))
    }
}

/// Candidates of dimension `target` that would complete an already-selected
/// joint index. Only meaningful once every other dimension is fixed; returns
/// `None` otherwise.
pub fn support_mask(
    support: &[MultiIndex],
    current: &[Option<usize>],
    target: usize,
    n_candidates: usize,
) -> Option<Vec<bool>> {
    let others_fixed = current
        .iter()
        .enumerate()
        .all(|(g, c)| g == target || c.is_some());
    if !others_fixed {
        return None;
    }
    let mut mask = vec![false; n_candidates];
    for s in support {
        let matches_others = s
            .coords()
            .iter()
            .enumerate()
            .all(|(g, &c)| g == target || current[g] == Some(c));
        if matches_others {
            mask[s.coords()[target]] = true;
        }
    }
    Some(mask)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn argmax_prefers_smallest_index_on_ties() {
        assert_eq!(argmax(&[1.0, 3.0, 3.0, 2.0], None), Some(1));
        assert_eq!(argmax(&[1.0, 3.0, 3.0 * (1.0 + 1e-14)], None), Some(1));
        assert_eq!(argmax(&[1.0, 3.0, 3.1], None), Some(2));
        assert_eq!(
            argmax(&[1.0, 3.0, 3.0], Some(&[false, true, false])),
            Some(2)
        );
        assert_eq!(argmax(&[f64::NEG_INFINITY, 0.5], None), Some(1));
        assert_eq!(
            argmax(&[f64::NEG_INFINITY; 3], Some(&[true, false, false])),
            Some(1)
        );
        assert_eq!(argmax(&[], None), None);
    }

    #[test]
    fn zero_denominators_are_excluded() {
        let s = ratio_scores(&[1.0, 1.0, 0.5], &[0.0, 2.0, 1e-30]);
        assert_eq!(s[0], f64::NEG_INFINITY);
        assert_eq!(s[1], 0.5);
        assert_eq!(s[2], f64::NEG_INFINITY);
    }

    #[test]
    fn lstsq_exact_and_orthogonal() {
        // A = [e1, e2] in C^3, b = 2 e1 + i e2 + e3
        let a = vec![
            c(1.0, 0.0),
            c(0.0, 0.0),
            c(0.0, 0.0),
            c(0.0, 0.0),
            c(1.0, 0.0),
            c(0.0, 0.0),
        ];
        let b = vec![c(2.0, 0.0), c(0.0, 1.0), c(1.0, 0.0)];
        let (x, deficient) = lstsq(&a, &b, 3, 1e-12);
        assert!(!deficient);
        assert!((x[0] - c(2.0, 0.0)).norm() < 1e-14);
        assert!((x[1] - c(0.0, 1.0)).norm() < 1e-14);
        let r = residual(&a, &x, &b, 3);
        assert!((r[0]).norm() < 1e-14 && (r[1]).norm() < 1e-14);
        assert!((r[2] - c(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn lstsq_rank_deficient_gives_min_norm() {
        // two identical columns: min-norm splits the coefficient evenly
        let a = vec![c(1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0)];
        let b = vec![c(2.0, 0.0), c(2.0, 0.0)];
        let (x, deficient) = lstsq(&a, &b, 2, 1e-12);
        assert!(deficient);
        assert!((x[0] - c(1.0, 0.0)).norm() < 1e-12);
        assert!((x[1] - c(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn lstsq_collinear_complex_columns_project_onto_span() {
        let a0 = [
            c(-7.37, 9.46),
            c(4.07, 10.24),
            c(8.37, 1.39),
            c(-12.85, 11.76),
        ];
        let g = c(-0.0397, 0.5245);
        let mut a = a0.to_vec();
        a.extend(a0.iter().map(|&z| z * g));
        let b = vec![
            c(0.47, -0.42),
            c(-0.85, 1.97),
            c(0.25, -0.14),
            c(0.68, 0.19),
        ];
        let (x, deficient) = lstsq(&a, &b, 4, 1e-12);
        assert!(deficient);
        let r = residual(&a, &x, &b, 4);
        let nrm: f64 = a0.iter().map(|z| z.norm_sqr()).sum();
        let p: Complex64 = a0
            .iter()
            .zip(&b)
            .map(|(u, v)| u.conj() * v)
            .sum::<Complex64>()
            / nrm;
        for i in 0..4 {
            assert!((r[i] - (b[i] - a0[i] * p)).norm() < 1e-12);
        }
    }

    #[test]
    fn mask_only_when_others_fixed() {
        let support = vec![MultiIndex(vec![1, 2]), MultiIndex(vec![0, 3])];
        assert!(support_mask(&support, &[None, None], 1, 4).is_none());
        let m = support_mask(&support, &[Some(1), None], 1, 4).unwrap();
        assert_eq!(m, vec![false, false, true, false]);
        let m = support_mask(&support, &[None, Some(3)], 0, 2).unwrap();
        assert_eq!(m, vec![true, false]);
    }
}
