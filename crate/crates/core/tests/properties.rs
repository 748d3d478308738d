//! Property tests for the algebraic invariants: projection laws, scaling
//! contracts, metric laws, and format round trips on generated inputs.

use multinorm_core::dualproj::{lp_subdifferential, project_ball, BallSpec};
use multinorm_core::matrix::{DenseMatrix, Vector};
use multinorm_core::multinorm::multi_normalize;
use multinorm_core::norms::{sinkhorn_pair, Mode, NormSpec};
use multinorm_core::optim::Schedule;
use multinorm_core::sinkhorn::{hilbert_metric, sr_equivalence_check, sr_sinkhorn};
use proptest::prelude::*;

/// Matrices with entries bounded away from zero, so rows/columns are
/// never degenerate and the classic Sinkhorn domain is satisfied.
fn signed_matrix(max_m: usize, max_n: usize) -> impl Strategy<Value = DenseMatrix> {
    (2..=max_m, 2..=max_n)
        .prop_flat_map(|(m, n)| {
            (
                Just(m),
                Just(n),
                prop::collection::vec((0.05f64..1.0, any::<bool>()), m * n),
            )
        })
        .prop_map(|(m, n, cells)| {
            DenseMatrix::from_vec(
                m,
                n,
                cells
                    .into_iter()
                    .map(|(mag, neg)| if neg { -mag } else { mag })
                    .collect(),
            )
            .expect("entries are finite")
        })
}

fn nonzero_vector(max_d: usize) -> impl Strategy<Value = Vector> {
    prop::collection::vec((0.05f64..2.0, any::<bool>()), 1..=max_d).prop_map(|cells| {
        Vector::from_vec(
            cells
                .into_iter()
                .map(|(mag, neg)| if neg { -mag } else { mag })
                .collect(),
        )
        .expect("entries are finite")
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn projection_idempotent_and_paired(x in signed_matrix(6, 10)) {
        let (m, n) = x.shape();
        for spec in [NormSpec::row_l2_max(n), NormSpec::col_l2_max(m)] {
            let p = spec.project(&x, Mode::Strict).unwrap();
            // unit norm and constant Euclidean length
            let g = spec.eval(&p).unwrap();
            prop_assert!((g - 1.0).abs() < 1e-10);
            let c = spec.projection_l2_constant(m, n).unwrap().0;
            prop_assert!((p.frobenius_norm() - c).abs() / c < 1e-10);
            // idempotence
            let pp = spec.project(&p, Mode::Strict).unwrap();
            let idem = pp.sub(&p).unwrap().frobenius_norm() / c;
            prop_assert!(idem < 1e-12);
            // duality pairing
            let pairing = x.dot(&p).unwrap();
            let dual = spec.dual_eval(&x).unwrap();
            prop_assert!((pairing - dual).abs() / dual < 1e-10);
            // direction only
            let p2 = spec.project(&x.scale(7.25), Mode::Strict).unwrap();
            prop_assert!(p2.sub(&p).unwrap().frobenius_norm() / c < 1e-12);
        }
    }

    #[test]
    fn sr_sinkhorn_contracts(x in signed_matrix(6, 10), l in 1usize..6) {
        let (m, n) = x.shape();
        let out = sr_sinkhorn(&x, l, Mode::Strict).unwrap();
        // sign pattern preserved
        for (a, b) in x.as_slice().iter().zip(out.as_slice()) {
            prop_assert_eq!(a.signum(), b.signum());
        }
        // exact column contract, exact frobenius norm
        let sm = (m as f64).sqrt();
        for &c in out.col_l2_norms().as_slice() {
            prop_assert!((c - sm).abs() / sm < 1e-12);
        }
        let target = ((m * n) as f64).sqrt();
        prop_assert!((out.frobenius_norm() - target).abs() / target < 1e-12);
        // square-root path equals the classic path
        prop_assert!(sr_equivalence_check(&x, l).unwrap() <= 1e-10);
    }

    #[test]
    fn multinorm_inner_products_monotone(x in signed_matrix(6, 10)) {
        let (m, n) = x.shape();
        let (_, report) =
            multi_normalize(&x, &sinkhorn_pair(m, n), 30, Mode::Strict, false).unwrap();
        for w in report.inner_products.windows(2) {
            prop_assert!(w[1] >= w[0] - 1e-9);
        }
        let c = ((m * n) as f64).sqrt();
        for &norm in &report.l2_norms[1..] {
            prop_assert!((norm - c).abs() / c < 1e-10);
        }
    }

    #[test]
    fn hilbert_metric_is_projective(v in nonzero_vector(8), scale in 0.01f64..100.0) {
        let a = Vector::from_vec(v.as_slice().iter().map(|x| x.abs() + 0.01).collect()).unwrap();
        let b = Vector::from_vec(a.as_slice().iter().rev().cloned().collect()).unwrap();
        let d_ab = hilbert_metric(&a, &b).unwrap();
        let d_ba = hilbert_metric(&b, &a).unwrap();
        prop_assert!((d_ab - d_ba).abs() < 1e-12);
        let d_scaled = hilbert_metric(&a.scale(scale), &b).unwrap();
        prop_assert!((d_scaled - d_ab).abs() < 1e-9);
        prop_assert!(hilbert_metric(&a, &a).unwrap() == 0.0);
    }

    #[test]
    fn subgradients_are_valid(v in nonzero_vector(8), p_index in 0usize..4) {
        let p = [1.0, 1.5, 2.0, f64::INFINITY][p_index];
        let q = if p == 1.0 {
            f64::INFINITY
        } else if p.is_infinite() {
            1.0
        } else {
            p / (p - 1.0)
        };
        let lp = |values: &[f64], e: f64| -> f64 {
            if e.is_infinite() {
                values.iter().fold(0.0f64, |a, x| a.max(x.abs()))
            } else {
                values.iter().map(|x| x.abs().powf(e)).sum::<f64>().powf(1.0 / e)
            }
        };
        let sub = lp_subdifferential(&v, p).unwrap();
        prop_assert!(!sub.whole_ball);
        let pairing = sub.g.dot(&v).unwrap();
        let norm = lp(v.as_slice(), p);
        prop_assert!((pairing - norm).abs() < 1e-10 * norm.max(1.0));
        prop_assert!(lp(sub.g.as_slice(), q) <= 1.0 + 1e-10);
    }

    #[test]
    fn ball_projection_is_idempotent_and_feasible(
        v in nonzero_vector(6),
        p_index in 0usize..3,
        radius in 0.1f64..3.0,
    ) {
        let p = [1.0, 2.0, f64::INFINITY][p_index];
        let ball = BallSpec::new(NormSpec::vector_lp(p).unwrap(), radius).unwrap();
        let proj = project_ball(&v, &ball).unwrap();
        let g = ball.norm.eval_vec(&proj).unwrap();
        prop_assert!(g <= radius * (1.0 + 1e-12));
        let again = project_ball(&proj, &ball).unwrap();
        prop_assert!(again.sub(&proj).unwrap().l2_norm() < 1e-12);
        // interior points are fixed
        if ball.norm.eval_vec(&v).unwrap() <= radius {
            prop_assert!(proj.sub(&v).unwrap().l2_norm() == 0.0);
        }
    }

    #[test]
    fn schedule_stays_in_range(
        base in 1e-4f64..1.0,
        total in 10usize..5000,
        warmup in 0.0f64..0.9,
    ) {
        let sched = Schedule::new(base, total, warmup).unwrap();
        let boundary = sched.warmup_steps();
        for t in [0, 1, boundary, (boundary + total) / 2, total] {
            let lr = sched.lr_at(t).unwrap();
            prop_assert!(lr >= 0.0 && lr <= base + 1e-15);
        }
        if boundary > 0 {
            prop_assert!((sched.lr_at(boundary).unwrap() - base).abs() < 1e-15);
        }
        prop_assert!(sched.lr_at(total).unwrap().abs() < 1e-15);
    }

    #[test]
    fn matrix_text_round_trips(x in signed_matrix(5, 7), scale in -30i32..30) {
        let scaled = x.scale(10f64.powi(scale));
        let back = DenseMatrix::parse_text(&scaled.to_text()).unwrap();
        prop_assert_eq!(scaled, back);
    }
}
