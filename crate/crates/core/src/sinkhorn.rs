//! Square-root Sinkhorn scaling and its classic-Sinkhorn oracle.
//!
//! `sr_sinkhorn` alternates row and column l2 normalization of a
//! gradient, with the `sqrt(n)` / `sqrt(m)` scales that pin the final
//! Frobenius norm to `sqrt(n m)`. Writing the current iterate as
//! `Diag(a) X Diag(b)` shows the squared scalings follow the classic
//! Sinkhorn update on `A = X^{.2}`, so after `L` full iterations
//!
//! `X_L = Diag(u_L^{1/2}) X Diag(v_L^{1/2})`
//!
//! with `(u_L, v_L)` produced by [`classic_sinkhorn`] on `A`. The
//! equivalence check measures exactly this identity. Convergence is
//! linear in the Hilbert projective metric; [`convergence_rate_estimate`]
//! reports the empirical error sequence against a long-run reference.

use crate::error::{Error, Result};
use crate::matrix::{DenseMatrix, Vector};
use crate::norms::{scale_cols, scale_rows, Mode};

/// Diagonal scaling pair produced by the classic Sinkhorn iteration.
/// Entries are strictly positive; defined only for positive matrices.
#[derive(Debug, Clone)]
pub struct SinkhornScaling {
    pub u: Vector,
    pub v: Vector,
    pub iterations: usize,
}

/// One iteration is a row step followed by a column step:
/// `X <- sqrt(n) Q(X)^{-1} X`, then `X <- sqrt(m) X R(X)^{-1}`.
///
/// After the final column step every column has l2 norm `sqrt(m)`
/// exactly and `||X||_F = sqrt(n m)`; row norms approach `sqrt(n)` at
/// the convergence rate. Strict mode rejects zero rows or columns;
/// optimizer mode maps them to zero.
pub fn sr_sinkhorn(grad: &DenseMatrix, iterations: usize, mode: Mode) -> Result<DenseMatrix> {
    if iterations == 0 {
        return Err(Error::Range {
            what: "sr_sinkhorn requires L >= 1".into(),
        });
    }
    let row_scale = (grad.cols() as f64).sqrt();
    let col_scale = (grad.rows() as f64).sqrt();
    let mut x = grad.clone();
    for _ in 0..iterations {
        x = scale_rows(&x, row_scale, mode)?;
        x = scale_cols(&x, col_scale, mode)?;
    }
    Ok(x)
}

/// Classic Sinkhorn on a strictly positive matrix, in the normalization
/// where `P = Diag(u) A Diag(v)` targets row sums `n` and column sums
/// `m`. Starts from `u = 1_m`, `v = 1_n` and alternates
/// `u <- n 1 / (A v)`, `v <- m 1 / (A^T u)`.
pub fn classic_sinkhorn(a: &DenseMatrix, iterations: usize) -> Result<SinkhornScaling> {
    if iterations == 0 {
        return Err(Error::Range {
            what: "classic_sinkhorn requires L >= 1".into(),
        });
    }
    require_positive(a)?;
    let (u, v) = classic_iterates(a, iterations, &mut |_, _| {});
    Ok(SinkhornScaling {
        u: Vector::from_raw(u),
        v: Vector::from_raw(v),
        iterations,
    })
}

fn require_positive(a: &DenseMatrix) -> Result<()> {
    if let Some(e) = a.as_slice().iter().find(|&&e| e <= 0.0) {
        return Err(Error::Domain {
            what: format!("classic Sinkhorn requires strictly positive entries, found {e}"),
        });
    }
    Ok(())
}

/// Runs the classic updates, invoking `observe(k, &u)` after each full
/// iteration `k` (1-based).
fn classic_iterates(
    a: &DenseMatrix,
    iterations: usize,
    observe: &mut dyn FnMut(usize, &[f64]),
) -> (Vec<f64>, Vec<f64>) {
    let (m, n) = a.shape();
    let mut u = vec![1.0; m];
    let mut v = vec![1.0; n];
    for k in 1..=iterations {
        for (i, ui) in u.iter_mut().enumerate() {
            let av: f64 = a.row(i).iter().zip(&v).map(|(&aij, &vj)| aij * vj).sum();
            *ui = n as f64 / av;
        }
        for (j, vj) in v.iter_mut().enumerate() {
            let mut atu = 0.0;
            for (i, &ui) in u.iter().enumerate() {
                atu += a.get(i, j) * ui;
            }
            *vj = m as f64 / atu;
        }
        observe(k, &u);
    }
    (u, v)
}

/// Relative Frobenius distance between the square-root path and the
/// classic path: `sr_sinkhorn(grad, L)` against
/// `Diag(u_L^{1/2}) grad Diag(v_L^{1/2})` with the scalings taken from
/// classic Sinkhorn on the entrywise square of `grad`.
pub fn sr_equivalence_check(grad: &DenseMatrix, iterations: usize) -> Result<f64> {
    let sr = sr_sinkhorn(grad, iterations, Mode::Strict)?;
    let scaling = classic_sinkhorn(&grad.hadamard_square(), iterations)?;
    let u = scaling.u.as_slice();
    let v = scaling.v.as_slice();
    let classic = DenseMatrix::from_fn(grad.rows(), grad.cols(), |i, j| {
        u[i].sqrt() * grad.get(i, j) * v[j].sqrt()
    });
    Ok(sr.sub(&classic)?.frobenius_norm() / classic.frobenius_norm())
}

/// Hilbert projective metric between strictly positive vectors:
/// `log max_i(a_i/b_i) - log min_i(a_i/b_i)`. Zero exactly when `a` is a
/// positive multiple of `b`.
pub fn hilbert_metric(a: &Vector, b: &Vector) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Dim {
            op: "hilbert_metric",
            lhs: (a.len(), 1),
            rhs: (b.len(), 1),
        });
    }
    let mut max_ratio = f64::NEG_INFINITY;
    let mut min_ratio = f64::INFINITY;
    for (&ai, &bi) in a.as_slice().iter().zip(b.as_slice()) {
        if ai <= 0.0 || bi <= 0.0 {
            return Err(Error::Domain {
                what: format!("hilbert_metric requires positive entries, found {ai} / {bi}"),
            });
        }
        let r = ai / bi;
        max_ratio = max_ratio.max(r);
        min_ratio = min_ratio.min(r);
    }
    Ok(max_ratio.ln() - min_ratio.ln())
}

/// Empirical linear-convergence diagnostics: for `k = 1..=L` reports
/// `e_k = d_H(u_k, u*)` with the reference `u*` taken at `4 L`
/// iterations (the true limit is unavailable in closed form). On a
/// strictly positive matrix the errors contract monotonically and the
/// successive ratios stabilize near the contraction factor.
pub fn convergence_rate_estimate(grad: &DenseMatrix, iterations: usize) -> Result<Vec<f64>> {
    if iterations == 0 {
        return Err(Error::Range {
            what: "convergence_rate_estimate requires L >= 1".into(),
        });
    }
    let a = grad.hadamard_square();
    require_positive(&a)?;
    let mut snapshots: Vec<Vec<f64>> = Vec::with_capacity(iterations);
    let (u_star, _) = classic_iterates(&a, 4 * iterations, &mut |k, u| {
        if k <= iterations {
            snapshots.push(u.to_vec());
        }
    });
    let u_star = Vector::from_raw(u_star);
    snapshots
        .into_iter()
        .map(|u| hilbert_metric(&Vector::from_raw(u), &u_star))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multinorm::fixed_point_residual;
    use crate::norms::sinkhorn_pair;
    use crate::prng::Xorshift64Star;

    fn random_signed(rng: &mut Xorshift64Star, m: usize, n: usize) -> DenseMatrix {
        DenseMatrix::from_fn(m, n, |_, _| {
            let mag = rng.next_range(0.1, 1.0);
            if rng.next_f64() < 0.5 {
                -mag
            } else {
                mag
            }
        })
    }

    #[test]
    fn ones_matrix_is_already_scaled() {
        let ones = DenseMatrix::from_fn(2, 3, |_, _| 1.0);
        for iterations in [1, 7] {
            let out = sr_sinkhorn(&ones, iterations, Mode::Strict).unwrap();
            assert!(out.sub(&ones).unwrap().frobenius_norm() < 1e-12);
        }
    }

    #[test]
    fn positive_diagonal_maps_to_scaled_identity() {
        let d = DenseMatrix::from_vec(3, 3, vec![2.0, 0.0, 0.0, 0.0, 0.5, 0.0, 0.0, 0.0, 7.0])
            .unwrap();
        let out = sr_sinkhorn(&d, 1, Mode::Optimizer).unwrap();
        let expected = DenseMatrix::identity(3).scale(3.0_f64.sqrt());
        assert!(out.sub(&expected).unwrap().frobenius_norm() < 1e-12);
    }

    #[test]
    fn converged_run_is_a_fixed_point_of_both_projections() {
        let mut rng = Xorshift64Star::new(50);
        let x = DenseMatrix::from_fn(8, 16, |_, _| rng.next_range(0.05, 1.0));
        let out = sr_sinkhorn(&x, 50, Mode::Strict).unwrap();
        let resid = fixed_point_residual(&out, &sinkhorn_pair(8, 16), Mode::Strict).unwrap();
        assert!(resid <= 1e-10, "residual {resid:e}");
    }

    #[test]
    fn column_norms_exact_rows_approximate() {
        let mut rng = Xorshift64Star::new(51);
        let x = random_signed(&mut rng, 6, 10);
        let out = sr_sinkhorn(&x, 200, Mode::Strict).unwrap();
        let sm = 6.0_f64.sqrt();
        let sn = 10.0_f64.sqrt();
        for &c in out.col_l2_norms().as_slice() {
            assert!((c - sm).abs() / sm < 1e-12, "column norm {c}");
        }
        for &r in out.row_l2_norms().as_slice() {
            assert!((r - sn).abs() / sn < 1e-8, "row norm {r}");
        }
        let fro = out.frobenius_norm();
        let target = 60.0_f64.sqrt();
        assert!((fro - target).abs() / target < 1e-12);
    }

    #[test]
    fn sign_pattern_preserved() {
        let mut rng = Xorshift64Star::new(52);
        let x = random_signed(&mut rng, 5, 9);
        let out = sr_sinkhorn(&x, 10, Mode::Strict).unwrap();
        for (a, b) in x.as_slice().iter().zip(out.as_slice()) {
            assert_eq!(a.signum(), b.signum());
        }
    }

    #[test]
    fn optimizer_mode_keeps_zero_rows_at_zero() {
        let grad =
            DenseMatrix::from_vec(3, 2, vec![0.0, 0.0, 1.0, -2.0, 0.5, 0.25]).unwrap();
        assert!(matches!(
            sr_sinkhorn(&grad, 2, Mode::Strict),
            Err(Error::Degenerate { .. })
        ));
        let out = sr_sinkhorn(&grad, 2, Mode::Optimizer).unwrap();
        assert_eq!(out.row(0), &[0.0, 0.0]);
        // the surviving rows still satisfy the exact column contract
        let sm = 3.0_f64.sqrt();
        for &c in out.col_l2_norms().as_slice() {
            assert!((c - sm).abs() < 1e-12, "column norm {c}");
        }
    }

    #[test]
    fn classic_sinkhorn_on_ones_stays_at_ones() {
        let a = DenseMatrix::from_fn(2, 3, |_, _| 1.0);
        let s = classic_sinkhorn(&a, 3).unwrap();
        assert!(s.u.as_slice().iter().all(|&x| (x - 1.0).abs() < 1e-15));
        assert!(s.v.as_slice().iter().all(|&x| (x - 1.0).abs() < 1e-15));
    }

    #[test]
    fn classic_sinkhorn_balances_row_and_column_sums() {
        let a = DenseMatrix::from_vec(2, 2, vec![3.0, 0.5, 0.4, 2.0]).unwrap();
        let s = classic_sinkhorn(&a, 100).unwrap();
        let p = DenseMatrix::from_fn(2, 2, |i, j| {
            s.u.get(i) * a.get(i, j) * s.v.get(j)
        });
        for i in 0..2 {
            let row_sum: f64 = p.row(i).iter().sum();
            assert!((row_sum - 2.0).abs() < 1e-10, "row sum {row_sum}");
        }
        for j in 0..2 {
            let col_sum: f64 = (0..2).map(|i| p.get(i, j)).sum();
            assert!((col_sum - 2.0).abs() < 1e-10, "col sum {col_sum}");
        }
    }

    #[test]
    fn classic_sinkhorn_rejects_nonpositive_entries() {
        let a = DenseMatrix::from_vec(2, 2, vec![1.0, 0.0, 2.0, 3.0]).unwrap();
        assert!(matches!(
            classic_sinkhorn(&a, 5),
            Err(Error::Domain { .. })
        ));
    }

    #[test]
    fn equivalence_holds_for_small_and_large_l() {
        let mut rng = Xorshift64Star::new(53);
        let x = random_signed(&mut rng, 4, 7);
        assert!(sr_equivalence_check(&x, 1).unwrap() <= 1e-12);
        assert!(sr_equivalence_check(&x, 10).unwrap() <= 1e-10);
        let ones = DenseMatrix::from_fn(3, 3, |_, _| 1.0);
        assert!(sr_equivalence_check(&ones, 5).unwrap() == 0.0);
    }

    #[test]
    fn hilbert_metric_basics() {
        let a = Vector::from_slice(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(hilbert_metric(&a, &a).unwrap(), 0.0);
        assert!(hilbert_metric(&a.scale(5.0), &a).unwrap().abs() < 1e-15);
        let p = Vector::from_slice(&[1.0, 2.0]).unwrap();
        let q = Vector::from_slice(&[2.0, 1.0]).unwrap();
        let d = hilbert_metric(&p, &q).unwrap();
        assert!((d - 2.0 * 2.0_f64.ln()).abs() < 1e-14);
        let neg = Vector::from_slice(&[1.0, -1.0]).unwrap();
        assert!(matches!(
            hilbert_metric(&neg, &p),
            Err(Error::Domain { .. })
        ));
    }

    #[test]
    fn rate_estimate_is_zero_on_constant_matrices() {
        let c = DenseMatrix::from_fn(3, 3, |_, _| 0.7);
        let errs = convergence_rate_estimate(&c, 5).unwrap();
        assert!(errs.iter().all(|&e| e == 0.0), "{errs:?}");
    }

    #[test]
    fn rate_estimate_decreases_on_random_positive_input() {
        let mut rng = Xorshift64Star::new(54);
        let x = DenseMatrix::from_fn(8, 8, |_, _| rng.next_range(0.05, 1.05));
        let errs = convergence_rate_estimate(&x, 10).unwrap();
        for w in errs.windows(2) {
            assert!(w[1] <= w[0], "errors not contracting: {errs:?}");
        }
        assert!(errs[errs.len() - 1] < errs[0]);
    }

    #[test]
    fn near_diagonal_mixes_slower_than_near_constant() {
        let n = 6;
        let mut rng = Xorshift64Star::new(55);
        // unequal diagonal and asymmetric tiny off-diagonal, so the
        // scaling problem is genuinely unbalanced
        let near_diag = DenseMatrix::from_fn(n, n, |i, j| {
            if i == j {
                0.5 + i as f64 * 0.3
            } else {
                rng.next_range(0.005, 0.02)
            }
        });
        let near_const = DenseMatrix::from_fn(n, n, |_, _| 1.0 + 0.05 * rng.next_symmetric());
        let slow = convergence_rate_estimate(&near_diag, 8).unwrap();
        let fast = convergence_rate_estimate(&near_const, 8).unwrap();
        let ratio = |e: &[f64]| {
            let mut rs = Vec::new();
            for w in e.windows(2) {
                // skip pairs at the numerical floor
                if w[0] > 1e-13 && w[1] > 1e-13 {
                    rs.push(w[1] / w[0]);
                }
            }
            rs.iter().sum::<f64>() / rs.len() as f64
        };
        assert!(
            ratio(&slow) > ratio(&fast),
            "slow {:?} vs fast {:?}",
            ratio(&slow),
            ratio(&fast)
        );
    }
}
