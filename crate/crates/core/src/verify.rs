//! Named end-to-end invariant checks, runnable as one suite.
//!
//! Each check exercises one contract of the library on deterministic
//! seeded inputs and reports pass/fail with a diagnostic detail string.
//! The CLI `verify` subcommand runs the whole list and exits nonzero if
//! any check fails.

use crate::dualproj::{convex_multiproj, coordinate_dual_descent, BallSpec};
use crate::error::Result;
use crate::harness::{
    compare_runs, finite_difference_grad, gen_problem, run_training, Batching, ProblemSpec,
};
use crate::matrix::{eig_whiten_oracle, newton_schulz_whiten, DenseMatrix, Vector};
use crate::multinorm::{fixed_point_residual, multi_normalize, sphere_membership_check};
use crate::norms::{sinkhorn_pair, swan_pair, Mode, NormSpec};
use crate::optim::{
    effective_lr, swan_preprocess, AdamHyper, OptimizerInstance, OptimizerKind, Schedule,
};
use crate::prng::Xorshift64Star;
use crate::sinkhorn::{
    classic_sinkhorn, convergence_rate_estimate, hilbert_metric, sr_equivalence_check,
    sr_sinkhorn,
};

/// Outcome of one named invariant check.
#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    fn pass(name: &'static str, detail: impl Into<String>) -> Self {
        Self {
            name,
            passed: true,
            detail: detail.into(),
        }
    }

    fn fail(name: &'static str, detail: impl Into<String>) -> Self {
        Self {
            name,
            passed: false,
            detail: detail.into(),
        }
    }
}

fn guard(name: &'static str, body: impl FnOnce() -> Result<CheckResult>) -> CheckResult {
    match body() {
        Ok(result) => result,
        Err(e) => CheckResult::fail(name, format!("errored: {e}")),
    }
}

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

/// Random `m x n` matrix with condition number at most `max_cond`,
/// produced by resampling against the Jacobi eigenvalues of `W W^T`.
pub fn random_conditioned(
    rng: &mut Xorshift64Star,
    m: usize,
    n: usize,
    max_cond: f64,
) -> DenseMatrix {
    loop {
        let w = DenseMatrix::from_fn(m, n, |_, _| rng.next_symmetric());
        let s = w.matmul(&w.transpose()).expect("shapes agree");
        let (eigs, _) = crate::matrix::jacobi_eigh(&s).expect("square input");
        let lmax = eigs.iter().fold(f64::MIN, |a, &b| a.max(b));
        let lmin = eigs.iter().fold(f64::MAX, |a, &b| a.min(b));
        if lmin > 0.0 && (lmax / lmin).sqrt() <= max_cond {
            return w;
        }
    }
}

fn check_sinkhorn_equivalence() -> CheckResult {
    const NAME: &str = "sinkhorn-equivalence";
    guard(NAME, || {
        let mut rng = Xorshift64Star::new(101);
        let mut worst = 0.0_f64;
        for _ in 0..20 {
            let m = 2 + (rng.next_u64() % 15) as usize;
            let n = m + (rng.next_u64() % 33) as usize;
            let grad = random_signed(&mut rng, m, n);
            for iterations in [1, 5, 50] {
                worst = worst.max(sr_equivalence_check(&grad, iterations)?);
            }
        }
        Ok(if worst <= 1e-10 {
            CheckResult::pass(NAME, format!("max relative distance {worst:.2e}"))
        } else {
            CheckResult::fail(NAME, format!("max relative distance {worst:.2e} > 1e-10"))
        })
    })
}

fn check_fixed_point_norms() -> CheckResult {
    const NAME: &str = "fixed-point-norms";
    guard(NAME, || {
        let mut rng = Xorshift64Star::new(102);
        let (m, n) = (16, 48);
        let grad = random_signed(&mut rng, m, n);
        let x = sr_sinkhorn(&grad, 200, Mode::Strict)?;
        let sn = (n as f64).sqrt();
        let sm = (m as f64).sqrt();
        let mut worst = 0.0_f64;
        for &r in x.row_l2_norms().as_slice() {
            worst = worst.max((r - sn).abs() / sn);
        }
        for &c in x.col_l2_norms().as_slice() {
            worst = worst.max((c - sm).abs() / sm);
        }
        let fro_dev =
            (x.frobenius_norm() - ((m * n) as f64).sqrt()).abs() / ((m * n) as f64).sqrt();
        Ok(if worst <= 1e-8 && fro_dev <= 1e-10 {
            CheckResult::pass(
                NAME,
                format!("worst norm deviation {worst:.2e}, frobenius {fro_dev:.2e}"),
            )
        } else {
            CheckResult::fail(
                NAME,
                format!("norm deviation {worst:.2e} (tol 1e-8), frobenius {fro_dev:.2e} (tol 1e-10)"),
            )
        })
    })
}

fn check_swan_recovery() -> CheckResult {
    const NAME: &str = "swan-recovery";
    guard(NAME, || {
        let mut rng = Xorshift64Star::new(103);
        let mut worst = 0.0_f64;
        for _ in 0..10 {
            let grad = random_signed(&mut rng, 8, 32);
            let engine = multi_normalize(&grad, &swan_pair(32), 1, Mode::Strict, false)?.0;
            // the update composed directly from its two closed forms
            let rowed = NormSpec::row_l2_max(32).project(&grad, Mode::Strict)?;
            let composed = NormSpec::spectral_max(32).project(&rowed, Mode::Strict)?;
            let rel =
                engine.sub(&composed)?.frobenius_norm() / composed.frobenius_norm();
            worst = worst.max(rel);
        }
        let mut worst_square = 0.0_f64;
        for _ in 0..5 {
            let grad = random_signed(&mut rng, 16, 16);
            let pre = swan_preprocess(&grad, 1, Mode::Strict)?;
            worst_square =
                worst_square.max(fixed_point_residual(&pre, &swan_pair(16), Mode::Strict)?);
        }
        Ok(if worst <= 1e-10 && worst_square <= 1e-6 {
            CheckResult::pass(
                NAME,
                format!("composition distance {worst:.2e}, square residual {worst_square:.2e}"),
            )
        } else {
            CheckResult::fail(
                NAME,
                format!(
                    "composition distance {worst:.2e} (tol 1e-10), square residual {worst_square:.2e} (tol 1e-6)"
                ),
            )
        })
    })
}

fn check_whitening_oracle() -> CheckResult {
    const NAME: &str = "whitening-oracle";
    guard(NAME, || {
        let mut rng = Xorshift64Star::new(104);
        let mut worst = 0.0_f64;
        for _ in 0..10 {
            let w = random_conditioned(&mut rng, 8, 24, 100.0);
            let ns = newton_schulz_whiten(&w, 40)?;
            let eig = eig_whiten_oracle(&w)?;
            worst = worst.max(ns.sub(&eig)?.frobenius_norm() / eig.frobenius_norm());
        }
        Ok(if worst <= 1e-6 {
            CheckResult::pass(NAME, format!("max relative error {worst:.2e}"))
        } else {
            CheckResult::fail(NAME, format!("max relative error {worst:.2e} > 1e-6"))
        })
    })
}

fn check_monotone_inner_products() -> CheckResult {
    const NAME: &str = "inner-product-monotonicity";
    guard(NAME, || {
        let mut rng = Xorshift64Star::new(105);
        let (m, n) = (8, 32);
        let target = (m * n) as f64;
        for _ in 0..10 {
            let grad = random_signed(&mut rng, m, n).scale(rng.next_range(0.5, 20.0));
            let (_, report) =
                multi_normalize(&grad, &sinkhorn_pair(m, n), 80, Mode::Strict, false)?;
            for w in report.inner_products.windows(2) {
                if w[1] < w[0] - 1e-9 {
                    return Ok(CheckResult::fail(
                        NAME,
                        format!("inner products decreased: {} -> {}", w[0], w[1]),
                    ));
                }
            }
            let limit = *report.inner_products.last().expect("nonempty");
            if (limit - target).abs() / target > 1e-6 {
                return Ok(CheckResult::fail(
                    NAME,
                    format!("limit {limit} differs from nm = {target}"),
                ));
            }
            // constant Euclidean norm after the first projection
            for &norm in &report.l2_norms[1..] {
                if (norm - target.sqrt()).abs() / target.sqrt() > 1e-10 {
                    return Ok(CheckResult::fail(
                        NAME,
                        format!("iterate norm {norm} differs from sqrt(nm)"),
                    ));
                }
            }
            let sphere = sphere_membership_check(
                &sr_sinkhorn(&grad, 200, Mode::Strict)?,
                &sinkhorn_pair(m, n),
            )?;
            if sphere.norm_deviations.iter().any(|&d| d > 1e-7)
                || sphere.l2_deviation > 1e-7
            {
                return Ok(CheckResult::fail(
                    NAME,
                    format!("sphere membership deviations {:?}", sphere.norm_deviations),
                ));
            }
        }
        Ok(CheckResult::pass(
            NAME,
            "inner products nondecreasing, limit nm, norms constant".to_string(),
        ))
    })
}

fn check_hilbert_linear_convergence() -> CheckResult {
    const NAME: &str = "hilbert-linear-convergence";
    guard(NAME, || {
        let mut rng = Xorshift64Star::new(106);
        let mut worst_cv = 0.0_f64;
        for _ in 0..5 {
            let grad = DenseMatrix::from_fn(16, 16, |_, _| {
                let mag = rng.next_range(0.05, 1.05);
                if rng.next_f64() < 0.5 {
                    -mag
                } else {
                    mag
                }
            });
            let errs = convergence_rate_estimate(&grad, 12)?;
            for w in errs.windows(2) {
                if w[1] > w[0] {
                    return Ok(CheckResult::fail(
                        NAME,
                        format!("errors increased: {} -> {}", w[0], w[1]),
                    ));
                }
            }
            let ratios: Vec<f64> = errs
                .windows(2)
                .skip(errs.len() / 2 - 1)
                .filter(|w| w[0] > 0.0 && w[1] > 0.0)
                .map(|w| w[1] / w[0])
                .collect();
            let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
            let var = ratios.iter().map(|r| (r - mean).powi(2)).sum::<f64>()
                / ratios.len() as f64;
            worst_cv = worst_cv.max(var.sqrt() / mean);
        }
        Ok(if worst_cv <= 0.2 {
            CheckResult::pass(NAME, format!("worst ratio CV {worst_cv:.3}"))
        } else {
            CheckResult::fail(NAME, format!("ratio CV {worst_cv:.3} > 0.2"))
        })
    })
}

fn check_convex_solver() -> CheckResult {
    const NAME: &str = "convex-solver-grid";
    guard(NAME, || {
        let mut rng = Xorshift64Star::new(107);
        let balls = |which: u64, radius: f64| -> Result<BallSpec> {
            let p = match which % 3 {
                0 => 1.0,
                1 => 2.0,
                _ => f64::INFINITY,
            };
            BallSpec::new(NormSpec::vector_lp(p)?, radius)
        };
        let mut worst_rel = 0.0_f64;
        let mut worst_gap = 0.0_f64;
        for _ in 0..5 {
            let b1 = balls(rng.next_u64(), rng.next_range(0.5, 1.5))?;
            let b2 = balls(rng.next_u64(), rng.next_range(0.5, 1.5))?;
            let grad = Vector::from_raw(vec![
                rng.next_symmetric() + 0.1,
                rng.next_symmetric() - 0.1,
            ]);
            let sol = coordinate_dual_descent(&grad, &[b1, b2], 20, 1500)?;
            let primal_value = grad.dot(&sol.primal)?;
            let oracle = grid_oracle_2d(&grad, &[b1, b2], 1e-3)?;
            let rel = (primal_value - oracle).abs() / oracle.abs().max(1e-12);
            let gap = (sol.objective - primal_value).abs() / sol.objective.abs().max(1e-12);
            worst_rel = worst_rel.max(rel);
            worst_gap = worst_gap.max(gap);
        }
        Ok(if worst_rel <= 1e-2 && worst_gap <= 1e-2 {
            CheckResult::pass(
                NAME,
                format!("worst oracle gap {worst_rel:.2e}, duality gap {worst_gap:.2e}"),
            )
        } else {
            CheckResult::fail(
                NAME,
                format!(
                    "oracle gap {worst_rel:.2e} or duality gap {worst_gap:.2e} exceeds 1e-2"
                ),
            )
        })
    })
}

/// Brute-force maximizer of `<grad, z>` over the ball intersection on a
/// 2-d grid of the given resolution.
pub fn grid_oracle_2d(grad: &Vector, balls: &[BallSpec], resolution: f64) -> Result<f64> {
    let bound = balls
        .iter()
        .map(|b| b.radius * b.norm.scale() * 1.0)
        .fold(f64::INFINITY, f64::min)
        * 1.5;
    let steps = (2.0 * bound / resolution).ceil() as usize;
    let mut best = f64::NEG_INFINITY;
    let g0 = grad.get(0);
    let g1 = grad.get(1);
    for i in 0..=steps {
        let a = -bound + 2.0 * bound * i as f64 / steps as f64;
        for j in 0..=steps {
            let b = -bound + 2.0 * bound * j as f64 / steps as f64;
            let z = Vector::from_raw(vec![a, b]);
            let feasible = balls
                .iter()
                .all(|ball| ball.norm.eval_vec(&z).map(|g| g <= ball.radius).unwrap_or(false));
            if feasible {
                let val = g0 * a + g1 * b;
                if val > best {
                    best = val;
                }
            }
        }
    }
    Ok(best)
}

fn check_gradient_oracles() -> CheckResult {
    const NAME: &str = "gradient-finite-difference";
    guard(NAME, || {
        let specs = [
            ProblemSpec::MatrixFactorization { m: 5, n: 4, rank: 2 },
            ProblemSpec::LogisticRegression { dim: 4, samples: 12 },
            ProblemSpec::Mlp2 {
                input: 3,
                hidden: 4,
                output: 2,
                samples: 10,
            },
        ];
        let mut worst = 0.0_f64;
        for (k, spec) in specs.iter().enumerate() {
            let problem = gen_problem(*spec, 200 + k as u64)?;
            for point in 0..3 {
                let mut params = problem.initial_params();
                let mut rng = Xorshift64Star::new(300 + point);
                for p in &mut params {
                    let jitter =
                        DenseMatrix::from_fn(p.rows(), p.cols(), |_, _| {
                            0.1 * rng.next_symmetric()
                        });
                    *p = p.add(&jitter)?;
                }
                let (_, grads) = problem.loss_and_grad(&params)?;
                for (g, analytic) in grads.iter().enumerate() {
                    let fd = finite_difference_grad(&problem, &params, g, 1e-5)?;
                    let rel = fd.sub(analytic)?.frobenius_norm()
                        / analytic.frobenius_norm().max(1e-12);
                    worst = worst.max(rel);
                }
            }
        }
        Ok(if worst <= 1e-5 {
            CheckResult::pass(NAME, format!("max relative error {worst:.2e}"))
        } else {
            CheckResult::fail(NAME, format!("max relative error {worst:.2e} > 1e-5"))
        })
    })
}

fn check_memory_accounting() -> CheckResult {
    const NAME: &str = "memory-accounting";
    guard(NAME, || {
        let problem = gen_problem(ProblemSpec::factorization_preset(), 5)?;
        let groups = problem.make_groups(1.0)?;
        let elements: u64 = groups.iter().map(|g| g.elements() as u64).sum();
        let adam = OptimizerInstance::new(OptimizerKind::Adam(AdamHyper::default()));
        if adam.state_memory_bytes(&groups) != 2 * elements * 8 {
            return Ok(CheckResult::fail(
                NAME,
                format!(
                    "adam bytes {} != {}",
                    adam.state_memory_bytes(&groups),
                    2 * elements * 8
                ),
            ));
        }
        for kind in [
            OptimizerKind::Sgd,
            OptimizerKind::SignGd,
            OptimizerKind::Swan { iterations: 5 },
            OptimizerKind::SinkGd { iterations: 5 },
        ] {
            let inst = OptimizerInstance::new(kind.clone());
            if inst.state_memory_bytes(&groups) != 0 {
                return Ok(CheckResult::fail(
                    NAME,
                    format!("{} reports nonzero state", kind.encode()),
                ));
            }
        }
        Ok(CheckResult::pass(
            NAME,
            format!("adam 2x{elements}x8 bytes, stateless kinds 0"),
        ))
    })
}

fn check_update_magnitude() -> CheckResult {
    const NAME: &str = "sinkgd-update-magnitude";
    guard(NAME, || {
        let problem = gen_problem(ProblemSpec::factorization_preset(), 77)?;
        let groups = problem.make_groups(0.05)?;
        let sched = Schedule::new(0.02, 200, 0.10)?;
        let mut opt = OptimizerInstance::new(OptimizerKind::SinkGd { iterations: 5 });
        let record = run_training(&problem, &mut opt, &sched, 100, &groups, Batching::Full)?;
        let mut worst = 0.0_f64;
        for row in &record.steps {
            for (group, fro) in groups.iter().zip(&row.update_fro) {
                let eta = effective_lr(group, row.lr);
                let target = eta * ((group.rows * group.cols) as f64).sqrt();
                if target == 0.0 {
                    if *fro != 0.0 {
                        return Ok(CheckResult::fail(
                            NAME,
                            format!("zero-lr step produced update {fro}"),
                        ));
                    }
                } else {
                    worst = worst.max((fro - target).abs() / target);
                }
            }
        }
        Ok(if worst <= 1e-10 {
            CheckResult::pass(NAME, format!("max relative deviation {worst:.2e}"))
        } else {
            CheckResult::fail(NAME, format!("max relative deviation {worst:.2e} > 1e-10"))
        })
    })
}

fn check_training_sanity() -> CheckResult {
    const NAME: &str = "training-sanity";
    guard(NAME, || {
        let problem = gen_problem(ProblemSpec::logistic_preset(), 9)?;
        let sched = Schedule::new(crate::optim::DEFAULT_BASE_LR, 2000, 0.10)?;
        // MNGD-family kinds run at the matrix group scale 0.05; the
        // unnormalized baselines take the raw schedule.
        let kinds: Vec<(OptimizerKind, f64)> = vec![
            (OptimizerKind::Adam(AdamHyper::default()), 1.0),
            (OptimizerKind::Sgd, 1.0),
            (OptimizerKind::SignGd, 1.0),
            (
                OptimizerKind::SteepestDescent(NormSpec::parse_config("vector_lp:p=2")?),
                1.0,
            ),
            (OptimizerKind::Swan { iterations: 5 }, 0.05),
            (
                OptimizerKind::Mngd {
                    norms: crate::optim::sinkhorn_norm_configs().to_vec(),
                    iterations: 5,
                },
                0.05,
            ),
            (OptimizerKind::SinkGd { iterations: 5 }, 0.05),
        ];
        let mut details = Vec::new();
        for (kind, alpha) in kinds {
            let groups = problem.make_groups(alpha)?;
            let mut opt = OptimizerInstance::new(kind.clone());
            let record =
                run_training(&problem, &mut opt, &sched, 2000, &groups, Batching::Full)?;
            let ratio = record.final_loss / record.initial_loss;
            if ratio > 0.10 {
                return Ok(CheckResult::fail(
                    NAME,
                    format!("{} reached only {ratio:.3} of initial loss", kind.encode()),
                ));
            }
            details.push(format!("{}={ratio:.2e}", kind.encode()));
        }
        Ok(CheckResult::pass(NAME, details.join(", ")))
    })
}

fn check_compare_and_reproducibility() -> CheckResult {
    const NAME: &str = "run-reproducibility";
    guard(NAME, || {
        let problem = gen_problem(ProblemSpec::factorization_preset(), 31)?;
        let sched = Schedule::new(0.02, 300, 0.10)?;
        let groups = problem.make_groups(0.05)?;
        let run = || -> Result<String> {
            let mut opt = OptimizerInstance::new(OptimizerKind::SinkGd { iterations: 5 });
            Ok(
                run_training(&problem, &mut opt, &sched, 120, &groups, Batching::Full)?
                    .to_csv(),
            )
        };
        let a = run()?;
        let b = run()?;
        if a != b {
            return Ok(CheckResult::fail(NAME, "CSV bytes differ between runs"));
        }
        let mut sink = OptimizerInstance::new(OptimizerKind::SinkGd { iterations: 5 });
        let adam_groups = problem.make_groups(1.0)?;
        let mut adam = OptimizerInstance::new(OptimizerKind::Adam(AdamHyper::default()));
        let ra = run_training(&problem, &mut sink, &sched, 60, &groups, Batching::Full)?;
        let rb = run_training(&problem, &mut adam, &sched, 60, &adam_groups, Batching::Full)?;
        let table = compare_runs(&[&ra, &rb])?;
        if table.rows[0].state_bytes != 0 || table.rows[1].state_bytes == 0 {
            return Ok(CheckResult::fail(NAME, "memory column inconsistent"));
        }
        Ok(CheckResult::pass(NAME, "byte-identical CSV, memory column consistent"))
    })
}

fn check_projection_laws() -> CheckResult {
    const NAME: &str = "projection-laws";
    guard(NAME, || {
        let mut rng = Xorshift64Star::new(108);
        let (m, n) = (4, 8);
        for spec in [
            NormSpec::row_l2_max(n),
            NormSpec::col_l2_max(m),
            NormSpec::spectral_max(n),
        ] {
            let c = spec.projection_l2_constant(m, n)?.0;
            for _ in 0..10 {
                let x = random_signed(&mut rng, m, n);
                let p = spec.project(&x, Mode::Strict)?;
                let pp = spec.project(&p, Mode::Strict)?;
                let idem = pp.sub(&p)?.frobenius_norm() / p.frobenius_norm();
                if idem > 1e-10 {
                    return Ok(CheckResult::fail(
                        NAME,
                        format!("{spec}: idempotence residual {idem:.2e}"),
                    ));
                }
                let dual = spec.dual_eval(&p)?;
                if (dual - c * c).abs() / (c * c) > 1e-9 {
                    return Ok(CheckResult::fail(
                        NAME,
                        format!("{spec}: g*(P) = {dual} vs c^2 = {}", c * c),
                    ));
                }
                let pairing = x.dot(&p)?;
                let dual_x = spec.dual_eval(&x)?;
                if (pairing - dual_x).abs() / dual_x > 1e-10 {
                    return Ok(CheckResult::fail(
                        NAME,
                        format!("{spec}: pairing {pairing} vs dual {dual_x}"),
                    ));
                }
            }
        }
        Ok(CheckResult::pass(NAME, "idempotence, pairing, and c^2 laws hold"))
    })
}

fn check_classic_sinkhorn_contraction() -> CheckResult {
    const NAME: &str = "projective-contraction";
    guard(NAME, || {
        let mut rng = Xorshift64Star::new(109);
        let a = DenseMatrix::from_fn(6, 9, |_, _| rng.next_range(0.05, 1.0));
        let reference = classic_sinkhorn(&a, 160)?;
        let mut last = f64::INFINITY;
        for k in 1..=40 {
            let s = classic_sinkhorn(&a, k)?;
            let d = hilbert_metric(&s.u, &reference.u)?;
            if d > last + 1e-12 {
                return Ok(CheckResult::fail(
                    NAME,
                    format!("distance increased at k={k}: {last:.3e} -> {d:.3e}"),
                ));
            }
            last = d;
        }
        Ok(CheckResult::pass(NAME, "Hilbert distance to the limit is nonincreasing"))
    })
}

fn check_convex_single_norm_consistency() -> CheckResult {
    const NAME: &str = "convex-single-norm";
    guard(NAME, || {
        let grad = Vector::from_raw(vec![2.0, -3.0]);
        let ball = BallSpec::new(NormSpec::vector_lp(f64::INFINITY)?, 1.0)?;
        let z = convex_multiproj(&grad, &[ball], 1, 1)?;
        if (z.get(0) - 1.0).abs() > 1e-12 || (z.get(1) + 1.0).abs() > 1e-12 {
            return Ok(CheckResult::fail(NAME, format!("single-ball projection {z:?}")));
        }
        Ok(CheckResult::pass(NAME, "K=1 reduces to the normalized projection"))
    })
}

/// Runs every named invariant check and returns the results in order.
pub fn run_all() -> Vec<CheckResult> {
    vec![
        check_projection_laws(),
        check_sinkhorn_equivalence(),
        check_fixed_point_norms(),
        check_swan_recovery(),
        check_whitening_oracle(),
        check_monotone_inner_products(),
        check_hilbert_linear_convergence(),
        check_classic_sinkhorn_contraction(),
        check_convex_solver(),
        check_convex_single_norm_consistency(),
        check_gradient_oracles(),
        check_memory_accounting(),
        check_update_magnitude(),
        check_training_sanity(),
        check_compare_and_reproducibility(),
    ]
}
