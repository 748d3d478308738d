//! Convex relaxation of the multi-norm problem, solved through its
//! Fenchel dual.
//!
//! The relaxed problem maximizes `<grad, z>` subject to `g_i(z) <= eps_i`
//! for a family of vector norms. Its dual minimizes
//! `sum_i eps_i g_i'(lambda_i)` over decompositions
//! `sum_i lambda_i = grad`, where `g_i'` is the dual norm. Coordinate
//! descent sweeps the lambdas, each inner problem solved by a
//! Chambolle-Pock primal-dual loop built from two primitives: Euclidean
//! projection onto a norm ball and the proximal map of a scaled dual
//! norm (one is the Moreau reflection of the other). A primal solution
//! is recovered from any nonzero lambda by a normalized projection.
//!
//! Everything here is vector-only; matrix norms route through
//! [`crate::multinorm`] instead.

use crate::error::{Error, Result};
use crate::matrix::Vector;
use crate::norms::{Mode, NormKind, NormSpec};

/// Default Chambolle-Pock step sizes; the algorithm requires
/// `eta1 * eta2 < 1`.
pub const DEFAULT_PD_STEP: f64 = 0.9;
/// Default outer sweeps of the coordinate scheme.
pub const DEFAULT_SWEEPS: usize = 50;
/// Default inner Chambolle-Pock iterations.
pub const DEFAULT_INNER_ITERS: usize = 500;
/// Sweep-to-sweep objective change below which the dual has converged.
pub const SWEEP_TOL: f64 = 1e-9;

/// A norm ball `{ z : g(z) <= radius }`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BallSpec {
    pub norm: NormSpec,
    pub radius: f64,
}

impl BallSpec {
    pub fn new(norm: NormSpec, radius: f64) -> Result<Self> {
        if radius <= 0.0 || !radius.is_finite() {
            return Err(Error::Config {
                what: format!("ball radius must be positive, got {radius}"),
            });
        }
        if !matches!(norm.kind(), NormKind::VectorLp(_)) {
            return Err(Error::Config {
                what: format!("dual solver supports vector lp balls only, got {norm}"),
            });
        }
        Ok(Self { norm, radius })
    }

    fn exponent(&self) -> f64 {
        match self.norm.kind() {
            NormKind::VectorLp(p) => p,
            _ => unreachable!("validated at construction"),
        }
    }

    /// Radius in the unscaled base norm: `g(z) <= r` iff
    /// `||z||_p <= r * scale`.
    fn base_radius(&self) -> f64 {
        self.radius * self.norm.scale()
    }

    /// `eps * g'(x)`, the ball's contribution to the dual objective.
    pub fn dual_gauge(&self, x: &Vector) -> Result<f64> {
        Ok(self.radius * self.norm.dual_eval_vec(x)?)
    }
}

/// Canonical subgradient of the lp norm, with the zero-input flag: at
/// `x = 0` the subdifferential is the whole dual-norm unit ball and the
/// zero vector is returned.
#[derive(Debug, Clone)]
pub struct Subgradient {
    pub g: Vector,
    pub whole_ball: bool,
}

/// Canonical element of the subdifferential of `||x||_p`.
///
/// For `1 < p < inf` the subdifferential is the singleton
/// `sign(x_i) |x_i|^{p-1} / ||x||_p^{p-1}`; for `p = 1` the sign vector
/// with zeros kept at zero coordinates; for `p = inf` the sign basis
/// vector at the lowest coordinate attaining the max. The output `g`
/// always satisfies `<g, x> = ||x||_p` and `||g||_q <= 1`.
pub fn lp_subdifferential(x: &Vector, p: f64) -> Result<Subgradient> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::Config {
            what: format!("lp exponent must satisfy p >= 1, got {p}"),
        });
    }
    if x.is_zero() {
        return Ok(Subgradient {
            g: Vector::zeros(x.len()),
            whole_ball: true,
        });
    }
    let values = x.as_slice();
    let g = if p == 1.0 {
        values
            .iter()
            .map(|&v| if v == 0.0 { 0.0 } else { v.signum() })
            .collect()
    } else if p.is_infinite() {
        let max = values.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        let idx = values
            .iter()
            .position(|v| v.abs() == max)
            .expect("nonzero vector has a max coordinate");
        let mut out = vec![0.0; values.len()];
        out[idx] = values[idx].signum();
        out
    } else {
        let norm = lp_norm(values, p);
        let denom = norm.powf(p - 1.0);
        values
            .iter()
            .map(|&v| v.signum() * v.abs().powf(p - 1.0) / denom)
            .collect()
    };
    Ok(Subgradient {
        g: Vector::from_raw(g),
        whole_ball: false,
    })
}

fn lp_norm(values: &[f64], p: f64) -> f64 {
    if p.is_infinite() {
        values.iter().fold(0.0, |a, v| a.max(v.abs()))
    } else if p == 1.0 {
        values.iter().map(|v| v.abs()).sum()
    } else {
        values
            .iter()
            .map(|v| v.abs().powf(p))
            .sum::<f64>()
            .powf(1.0 / p)
    }
}

/// Euclidean projection onto a norm ball, closed-form for
/// `p in {1, 2, inf}`: radial shrink, coordinate clamp, and the
/// sorted-threshold simplex projection respectively.
pub fn project_ball(x: &Vector, ball: &BallSpec) -> Result<Vector> {
    project_ball_radius(x, ball, ball.base_radius())
}

fn project_ball_radius(x: &Vector, ball: &BallSpec, radius: f64) -> Result<Vector> {
    if radius == 0.0 {
        return Ok(Vector::zeros(x.len()));
    }
    let p = ball.exponent();
    let values = x.as_slice();
    if p == 2.0 {
        let norm = x.l2_norm();
        return Ok(if norm <= radius {
            x.clone()
        } else {
            x.scale(radius / norm)
        });
    }
    if p.is_infinite() {
        return Ok(Vector::from_raw(
            values.iter().map(|&v| v.clamp(-radius, radius)).collect(),
        ));
    }
    if p == 1.0 {
        if lp_norm(values, 1.0) <= radius {
            return Ok(x.clone());
        }
        // sorted-threshold projection: theta from the largest prefix of
        // sorted |x| with |x|_(k) > (prefix_sum - radius) / k
        let mut mags: Vec<f64> = values.iter().map(|v| v.abs()).collect();
        mags.sort_by(|a, b| b.partial_cmp(a).expect("finite entries"));
        let mut prefix = 0.0;
        let mut theta = 0.0;
        for (k, &mag) in mags.iter().enumerate() {
            prefix += mag;
            let candidate = (prefix - radius) / (k + 1) as f64;
            if mag > candidate {
                theta = candidate;
            } else {
                break;
            }
        }
        return Ok(Vector::from_raw(
            values
                .iter()
                .map(|&v| v.signum() * (v.abs() - theta).max(0.0))
                .collect(),
        ));
    }
    Err(Error::Config {
        what: format!("no closed-form ball projection for l_{p}"),
    })
}

/// Proximal map of `step * eps * g'` at `x` via the Moreau
/// decomposition: `x` minus the Euclidean projection of `x` onto the
/// `g`-ball of radius `step * eps`. For an `l_inf` ball (dual norm
/// `l_1`) this is soft-thresholding.
pub fn prox_scaled_dual_norm(x: &Vector, step: f64, ball: &BallSpec) -> Result<Vector> {
    if step < 0.0 {
        return Err(Error::Range {
            what: format!("prox step must be nonnegative, got {step}"),
        });
    }
    if step == 0.0 {
        return Ok(x.clone());
    }
    let radius = step * ball.radius * ball.norm.scale();
    let proj = project_ball_radius(x, ball, radius)?;
    x.sub(&proj)
}

/// Final Chambolle-Pock iterates. At the saddle point the dual iterate
/// `z` exposes the face of the first ball that the primal optimum lies
/// on: `-z` maximizes the pairing against both `lambda_1 = beta - lambda`
/// and `lambda`, so for a two-ball problem `-z` is the primal solution
/// itself.
#[derive(Debug, Clone)]
pub struct CpSolution {
    pub lambda: Vector,
    pub dual_iterate: Vector,
}

/// Chambolle-Pock loop for the two-ball inner problem: minimizes
/// `eps_1 g_1'(beta - lambda) + eps_k g_k'(lambda)` over `lambda`.
///
/// Primal-dual updates with unit coupling: the dual variable projects
/// onto the first ball shifted by `beta`, the primal variable takes the
/// prox of the second dual gauge, and the extrapolation doubles the last
/// primal move. Requires `eta1 * eta2 < 1`.
pub fn chambolle_pock(
    beta: &Vector,
    ball1: &BallSpec,
    ballk: &BallSpec,
    eta1: f64,
    eta2: f64,
    iterations: usize,
) -> Result<Vector> {
    Ok(chambolle_pock_full(beta, ball1, ballk, eta1, eta2, iterations)?.lambda)
}

/// As [`chambolle_pock`], also returning the final dual iterate used for
/// primal recovery.
pub fn chambolle_pock_full(
    beta: &Vector,
    ball1: &BallSpec,
    ballk: &BallSpec,
    eta1: f64,
    eta2: f64,
    iterations: usize,
) -> Result<CpSolution> {
    if !(eta1 > 0.0 && eta2 > 0.0 && eta1 * eta2 < 1.0) {
        return Err(Error::Config {
            what: format!("step sizes must satisfy eta1, eta2 > 0 and eta1*eta2 < 1, got {eta1} * {eta2}"),
        });
    }
    let d = beta.len();
    let mut lambda = Vector::zeros(d);
    let mut z = Vector::zeros(d);
    let mut u = Vector::zeros(d);
    for _ in 0..iterations {
        let lambda_old = lambda.clone();
        // z <- proj_{B_1(eps_1)}(z + eta1 (u - beta))
        let shifted = z.add(&u.sub(beta)?.scale(eta1))?;
        z = project_ball(&shifted, ball1)?;
        // lambda <- prox_{eta2 eps_k g_k'}(lambda - eta2 z)
        lambda = prox_scaled_dual_norm(&lambda.sub(&z.scale(eta2))?, eta2, ballk)?;
        // u <- 2 lambda - lambda_old
        u = lambda.scale(2.0).sub(&lambda_old)?;
    }
    Ok(CpSolution {
        lambda,
        dual_iterate: z,
    })
}

/// A dual decomposition `sum_i lambda_i = grad` with its objective and
/// the recovered primal point.
#[derive(Debug, Clone)]
pub struct DualSolution {
    pub lambdas: Vec<Vector>,
    pub objective: f64,
    pub primal: Vector,
    /// Dual objective after each completed sweep.
    pub sweep_objectives: Vec<f64>,
    /// `<grad, z>` for the primal recovered after each sweep.
    pub sweep_primal_values: Vec<f64>,
}

fn dual_objective(grad: &Vector, balls: &[BallSpec], tail: &[Vector]) -> Result<(f64, Vector)> {
    let mut lambda1 = grad.clone();
    for l in tail {
        lambda1 = lambda1.sub(l)?;
    }
    let mut obj = balls[0].dual_gauge(&lambda1)?;
    for (ball, l) in balls[1..].iter().zip(tail) {
        obj += ball.dual_gauge(l)?;
    }
    Ok((obj, lambda1))
}

fn recover_from_any(lambdas: &[Vector], balls: &[BallSpec], d: usize) -> Result<Vector> {
    for (l, ball) in lambdas.iter().zip(balls) {
        if l.l2_norm() > 1e-9 {
            return recover_primal(l, ball);
        }
    }
    Ok(Vector::zeros(d))
}

/// Picks the best feasible primal candidate: the negated dual iterates
/// of the final inner solves (exact at the two-ball saddle point) and
/// the canonical projections of each nonzero lambda. Canonical recovery
/// alone can land on the wrong face element when a polyhedral ball has
/// tied dual coordinates.
fn best_feasible_primal(
    grad: &Vector,
    balls: &[BallSpec],
    lambdas: &[Vector],
    dual_iterates: &[Vector],
) -> Result<Vector> {
    let feasible = |y: &Vector| -> Result<bool> {
        for ball in balls {
            if ball.norm.eval_vec(y)? > ball.radius * (1.0 + 1e-6) {
                return Ok(false);
            }
        }
        Ok(true)
    };
    let mut best: Option<(f64, Vector)> = None;
    let mut consider = |y: Vector| -> Result<()> {
        if feasible(&y)? {
            let val = grad.dot(&y)?;
            if best.as_ref().is_none_or(|(v, _)| val > *v) {
                best = Some((val, y));
            }
        }
        Ok(())
    };
    for z in dual_iterates {
        consider(z.scale(-1.0))?;
    }
    for (l, ball) in lambdas.iter().zip(balls) {
        if l.l2_norm() > 1e-9 {
            consider(recover_primal(l, ball)?)?;
        }
    }
    match best {
        Some((_, y)) => Ok(y),
        None => recover_from_any(lambdas, balls, grad.len()),
    }
}

/// Coordinate descent on the dual: sweeps `k = 2..K`, re-solving each
/// `lambda_k` against `beta_k = grad - sum_{i != k} lambda_i` with
/// [`chambolle_pock`]. Stops early when the dual objective changes less
/// than [`SWEEP_TOL`] between sweeps.
pub fn coordinate_dual_descent(
    grad: &Vector,
    balls: &[BallSpec],
    sweeps: usize,
    inner_iters: usize,
) -> Result<DualSolution> {
    if balls.len() < 2 {
        return Err(Error::Config {
            what: format!("coordinate dual descent needs K >= 2 balls, got {}", balls.len()),
        });
    }
    if sweeps == 0 || inner_iters == 0 {
        return Err(Error::Range {
            what: "sweeps and inner iterations must be positive".into(),
        });
    }
    let d = grad.len();
    let k = balls.len();
    // tail[j] holds lambda_{j+2}; lambda_1 stays implicit
    let mut tail: Vec<Vector> = vec![Vector::zeros(d); k - 1];
    let mut dual_iterates: Vec<Vector> = vec![Vector::zeros(d); k - 1];
    let mut sweep_objectives = Vec::new();
    let mut sweep_primal_values = Vec::new();
    let mut last_obj = f64::INFINITY;
    for _ in 0..sweeps {
        for j in 0..k - 1 {
            let mut beta = grad.clone();
            for (i, l) in tail.iter().enumerate() {
                if i != j {
                    beta = beta.sub(l)?;
                }
            }
            let solution = chambolle_pock_full(
                &beta,
                &balls[0],
                &balls[j + 1],
                DEFAULT_PD_STEP,
                DEFAULT_PD_STEP,
                inner_iters,
            )?;
            tail[j] = solution.lambda;
            dual_iterates[j] = solution.dual_iterate;
        }
        let (obj, lambda1) = dual_objective(grad, balls, &tail)?;
        let mut lambdas = Vec::with_capacity(k);
        lambdas.push(lambda1);
        lambdas.extend(tail.iter().cloned());
        let primal = best_feasible_primal(grad, balls, &lambdas, &dual_iterates)?;
        sweep_objectives.push(obj);
        sweep_primal_values.push(grad.dot(&primal)?);
        if (last_obj - obj).abs() < SWEEP_TOL {
            break;
        }
        last_obj = obj;
    }
    let (objective, lambda1) = dual_objective(grad, balls, &tail)?;
    let mut lambdas = Vec::with_capacity(k);
    lambdas.push(lambda1);
    lambdas.extend(tail);
    let primal = best_feasible_primal(grad, balls, &lambdas, &dual_iterates)?;
    Ok(DualSolution {
        lambdas,
        objective,
        primal,
        sweep_objectives,
        sweep_primal_values,
    })
}

/// Primal recovery from one nonzero dual variable:
/// `y = eps * P_g(lambda)`, which satisfies `g(y) = eps` and pairs as
/// `<lambda, y> = eps * g'(lambda)`.
pub fn recover_primal(lambda: &Vector, ball: &BallSpec) -> Result<Vector> {
    if lambda.is_zero() {
        return Err(Error::Degenerate {
            what: "primal recovery from a zero dual variable".into(),
        });
    }
    Ok(ball.norm.project_vec(lambda, Mode::Strict)?.scale(ball.radius))
}

/// Maximizes `<grad, z>` over the intersection of the balls. `K = 1`
/// uses the normalized projection directly; `K >= 2` runs the dual
/// coordinate scheme and recovers the primal point.
pub fn convex_multiproj(
    grad: &Vector,
    balls: &[BallSpec],
    sweeps: usize,
    inner_iters: usize,
) -> Result<Vector> {
    match balls {
        [] => Err(Error::Config {
            what: "convex_multiproj needs at least one ball".into(),
        }),
        [single] => {
            if grad.is_zero() {
                return Ok(Vector::zeros(grad.len()));
            }
            recover_primal(grad, single)
        }
        _ => Ok(coordinate_dual_descent(grad, balls, sweeps, inner_iters)?.primal),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prng::Xorshift64Star;

    fn l2_ball(radius: f64) -> BallSpec {
        BallSpec::new(NormSpec::vector_lp(2.0).unwrap(), radius).unwrap()
    }

    fn l1_ball(radius: f64) -> BallSpec {
        BallSpec::new(NormSpec::vector_lp(1.0).unwrap(), radius).unwrap()
    }

    fn linf_ball(radius: f64) -> BallSpec {
        BallSpec::new(NormSpec::vector_lp(f64::INFINITY).unwrap(), radius).unwrap()
    }

    #[test]
    fn subdifferential_cases() {
        let x = Vector::from_slice(&[2.0, -3.0]).unwrap();
        let g1 = lp_subdifferential(&x, 1.0).unwrap();
        assert_eq!(g1.g.as_slice(), &[1.0, -1.0]);
        assert!(!g1.whole_ball);

        let x2 = Vector::from_slice(&[3.0, 4.0]).unwrap();
        let g2 = lp_subdifferential(&x2, 2.0).unwrap();
        assert!((g2.g.get(0) - 0.6).abs() < 1e-15);
        assert!((g2.g.get(1) - 0.8).abs() < 1e-15);

        let x3 = Vector::from_slice(&[3.0, 1.0]).unwrap();
        let g3 = lp_subdifferential(&x3, f64::INFINITY).unwrap();
        assert_eq!(g3.g.as_slice(), &[1.0, 0.0]);

        let zero = Vector::zeros(3);
        let gz = lp_subdifferential(&zero, 1.5).unwrap();
        assert!(gz.whole_ball);
        assert!(gz.g.is_zero());
    }

    #[test]
    fn subdifferential_pairing_and_dual_feasibility() {
        let mut rng = Xorshift64Star::new(70);
        for p in [1.0, 1.5, 2.0, 3.0, f64::INFINITY] {
            let q = if p == 1.0 {
                f64::INFINITY
            } else if p.is_infinite() {
                1.0
            } else {
                p / (p - 1.0)
            };
            for _ in 0..20 {
                let x = Vector::from_raw((0..5).map(|_| rng.next_symmetric()).collect());
                let sub = lp_subdifferential(&x, p).unwrap();
                let pairing = sub.g.dot(&x).unwrap();
                let norm = lp_norm(x.as_slice(), p);
                assert!((pairing - norm).abs() < 1e-12 * norm.max(1.0));
                assert!(lp_norm(sub.g.as_slice(), q) <= 1.0 + 1e-12);
            }
        }
    }

    #[test]
    fn subdifferential_satisfies_the_defining_inequality() {
        let mut rng = Xorshift64Star::new(71);
        for p in [1.0, 2.0, 4.0, f64::INFINITY] {
            let x = Vector::from_raw((0..4).map(|_| rng.next_symmetric()).collect());
            let sub = lp_subdifferential(&x, p).unwrap();
            let fx = lp_norm(x.as_slice(), p);
            for _ in 0..100 {
                let y = Vector::from_raw((0..4).map(|_| 2.0 * rng.next_symmetric()).collect());
                let fy = lp_norm(y.as_slice(), p);
                let linear = fx + sub.g.dot(&y.sub(&x).unwrap()).unwrap();
                assert!(fy >= linear - 1e-12, "p={p}: {fy} < {linear}");
            }
        }
    }

    #[test]
    fn ball_projections_closed_forms() {
        let x = Vector::from_slice(&[3.0, 4.0]).unwrap();
        let p2 = project_ball(&x, &l2_ball(1.0)).unwrap();
        assert!((p2.get(0) - 0.6).abs() < 1e-15);
        assert!((p2.get(1) - 0.8).abs() < 1e-15);

        let y = Vector::from_slice(&[0.5, -2.0]).unwrap();
        let pinf = project_ball(&y, &linf_ball(1.0)).unwrap();
        assert_eq!(pinf.as_slice(), &[0.5, -1.0]);

        let z = Vector::from_slice(&[2.0, 1.0]).unwrap();
        let p1 = project_ball(&z, &l1_ball(1.0)).unwrap();
        assert!((p1.get(0) - 1.0).abs() < 1e-12);
        assert!(p1.get(1).abs() < 1e-12);

        // interior points are fixed
        let inside = Vector::from_slice(&[0.1, 0.2]).unwrap();
        assert_eq!(project_ball(&inside, &l1_ball(1.0)).unwrap(), inside);
    }

    #[test]
    fn l1_projection_matches_grid_oracle() {
        let mut rng = Xorshift64Star::new(72);
        let ball = l1_ball(1.0);
        for _ in 0..5 {
            let x = Vector::from_raw(vec![
                2.0 * rng.next_symmetric(),
                2.0 * rng.next_symmetric(),
            ]);
            let proj = project_ball(&x, &ball).unwrap();
            let mut best = f64::INFINITY;
            let steps = 2000;
            for i in 0..=steps {
                let a = -1.0 + 2.0 * i as f64 / steps as f64;
                let rem = 1.0 - a.abs();
                let bs = (rem / 1e-3).ceil() as usize;
                for jb in 0..=bs {
                    let b = if bs == 0 {
                        0.0
                    } else {
                        -rem + 2.0 * rem * jb as f64 / bs as f64
                    };
                    let d = (a - x.get(0)).powi(2) + (b - x.get(1)).powi(2);
                    best = best.min(d);
                }
            }
            let ours = (proj.get(0) - x.get(0)).powi(2) + (proj.get(1) - x.get(1)).powi(2);
            assert!(
                ours <= best + 1e-5,
                "projection distance {ours} vs grid {best}"
            );
        }
    }

    #[test]
    fn prox_of_l1_is_soft_thresholding() {
        // l1 is the dual gauge of the l_inf ball
        let ball = linf_ball(1.0);
        let x = Vector::from_slice(&[2.0, -0.5]).unwrap();
        let prox = prox_scaled_dual_norm(&x, 1.0, &ball).unwrap();
        assert!((prox.get(0) - 1.0).abs() < 1e-15);
        assert_eq!(prox.get(1), 0.0);

        // direct 1-d minimization oracle of 0.5 (z-x)^2 + |z|
        for &xi in &[2.0_f64, -0.5, 0.3, -4.0] {
            let mut best_z = 0.0;
            let mut best = f64::INFINITY;
            let mut z = -5.0;
            while z <= 5.0 {
                let val = 0.5 * (z - xi).powi(2) + z.abs();
                if val < best {
                    best = val;
                    best_z = z;
                }
                z += 1e-4;
            }
            let got = prox_scaled_dual_norm(
                &Vector::from_slice(&[xi]).unwrap(),
                1.0,
                &linf_ball(1.0),
            )
            .unwrap()
            .get(0);
            assert!((got - best_z).abs() < 1e-3, "x={xi}: {got} vs {best_z}");
        }

        // zero step leaves the input unchanged
        let same = prox_scaled_dual_norm(&x, 0.0, &ball).unwrap();
        assert_eq!(same, x);

        // inside the dual ball the prox collapses to zero
        let small = Vector::from_slice(&[0.4, -0.7]).unwrap();
        let collapsed = prox_scaled_dual_norm(&small, 1.0, &ball).unwrap();
        assert!(collapsed.is_zero());
    }

    #[test]
    fn chambolle_pock_zero_beta_returns_zero() {
        let lambda = chambolle_pock(
            &Vector::zeros(2),
            &l2_ball(1.0),
            &l2_ball(1.0),
            0.9,
            0.9,
            200,
        )
        .unwrap();
        assert!(lambda.l2_norm() < 1e-9, "{lambda:?}");
    }

    #[test]
    fn chambolle_pock_two_l2_balls_attains_the_segment_value() {
        let beta = Vector::from_slice(&[2.0, 0.0]).unwrap();
        let b = l2_ball(1.0);
        let lambda = chambolle_pock(&beta, &b, &b, 0.9, 0.9, 2000).unwrap();
        let obj = b.dual_gauge(&beta.sub(&lambda).unwrap()).unwrap()
            + b.dual_gauge(&lambda).unwrap();
        assert!((obj - 2.0).abs() < 1e-3, "objective {obj}");
        // the solver never exceeds the endpoint objectives
        assert!(obj <= 2.0 + 1e-9 && obj <= 2.0 + 1e-9);
    }

    #[test]
    fn chambolle_pock_mixed_balls_match_grid_search() {
        let beta = Vector::from_slice(&[1.3, -0.4]).unwrap();
        let b1 = linf_ball(1.0);
        let bk = l2_ball(1.0);
        let lambda = chambolle_pock(&beta, &b1, &bk, 0.9, 0.9, 4000).unwrap();
        let obj = b1.dual_gauge(&beta.sub(&lambda).unwrap()).unwrap()
            + bk.dual_gauge(&lambda).unwrap();
        // 2-d grid oracle at resolution 1e-3
        let mut best = f64::INFINITY;
        for i in 0..=3000 {
            let a = -1.5 + i as f64 * 1e-3;
            for j in 0..=3000 {
                let c = -1.5 + j as f64 * 1e-3;
                let l = Vector::from_raw(vec![a, c]);
                let val = b1.dual_gauge(&beta.sub(&l).unwrap()).unwrap()
                    + bk.dual_gauge(&l).unwrap();
                if val < best {
                    best = val;
                }
            }
        }
        assert!((obj - best).abs() < 1e-3, "objective {obj} vs grid {best}");
    }

    #[test]
    fn chambolle_pock_rejects_bad_steps() {
        let beta = Vector::zeros(2);
        assert!(matches!(
            chambolle_pock(&beta, &l2_ball(1.0), &l2_ball(1.0), 1.0, 1.0, 10),
            Err(Error::Config { .. })
        ));
    }

    #[test]
    fn coordinate_descent_zero_gradient() {
        let balls = [l2_ball(1.0), l2_ball(1.0)];
        let sol = coordinate_dual_descent(&Vector::zeros(3), &balls, 5, 100).unwrap();
        assert_eq!(sol.objective, 0.0);
        assert!(sol.lambdas.iter().all(|l| l.is_zero()));
        assert!(sol.primal.is_zero());
    }

    #[test]
    fn coordinate_descent_identical_l2_balls() {
        let grad = Vector::from_slice(&[2.0, 0.0]).unwrap();
        let balls = [l2_ball(1.0), l2_ball(1.0)];
        let sol = coordinate_dual_descent(&grad, &balls, 10, 2000).unwrap();
        assert!((sol.objective - 2.0).abs() < 1e-2, "{}", sol.objective);
        // lambdas decompose the gradient
        let sum = sol.lambdas[0].add(&sol.lambdas[1]).unwrap();
        assert!(sum.sub(&grad).unwrap().l2_norm() < 1e-9);
        // dual objective does not increase across sweeps
        for w in sol.sweep_objectives.windows(2) {
            assert!(w[1] <= w[0] + 1e-9, "{:?}", sol.sweep_objectives);
        }
    }

    #[test]
    fn recover_primal_closed_forms() {
        let l = Vector::from_slice(&[3.0, 4.0]).unwrap();
        let y = recover_primal(&l, &l2_ball(2.0)).unwrap();
        assert!((y.get(0) - 1.2).abs() < 1e-14);
        assert!((y.get(1) - 1.6).abs() < 1e-14);

        let l2 = Vector::from_slice(&[2.0, -3.0]).unwrap();
        let y2 = recover_primal(&l2, &linf_ball(1.0)).unwrap();
        assert_eq!(y2.as_slice(), &[1.0, -1.0]);

        assert!(matches!(
            recover_primal(&Vector::zeros(2), &l2_ball(1.0)),
            Err(Error::Degenerate { .. })
        ));
    }

    #[test]
    fn recover_primal_pairing_identity() {
        let mut rng = Xorshift64Star::new(73);
        for ball in [l2_ball(1.7), linf_ball(0.8), l1_ball(2.5)] {
            for _ in 0..10 {
                let l = Vector::from_raw((0..4).map(|_| rng.next_symmetric()).collect());
                let y = recover_primal(&l, &ball).unwrap();
                let lhs = l.dot(&y).unwrap();
                let rhs = ball.dual_gauge(&l).unwrap();
                assert!((lhs - rhs).abs() / rhs.abs() < 1e-10, "{lhs} vs {rhs}");
                let g = ball.norm.eval_vec(&y).unwrap();
                assert!((g - ball.radius).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn single_ball_multiproj_is_the_normalized_projection() {
        let grad = Vector::from_slice(&[2.0, -3.0]).unwrap();
        let z = convex_multiproj(&grad, &[linf_ball(1.0)], 1, 1).unwrap();
        assert_eq!(z.as_slice(), &[1.0, -1.0]);
    }

    #[test]
    fn fenchel_transform_of_a_norm_is_the_dual_ball_indicator() {
        // sup_z <z,x> - |z| over a grid: exactly 0 (at z = 0) when
        // |x|_* <= 1, growing with the grid radius otherwise
        let norms: [(f64, f64); 3] = [(1.0, f64::INFINITY), (2.0, 2.0), (f64::INFINITY, 1.0)];
        let lp = |a: f64, b: f64, p: f64| -> f64 {
            if p.is_infinite() {
                a.abs().max(b.abs())
            } else if p == 1.0 {
                a.abs() + b.abs()
            } else {
                (a.abs().powf(p) + b.abs().powf(p)).powf(1.0 / p)
            }
        };
        let sup_on_grid = |x: (f64, f64), p: f64, radius: f64| -> f64 {
            let steps = 200;
            let mut best = f64::NEG_INFINITY;
            for i in 0..=steps {
                let a = -radius + 2.0 * radius * i as f64 / steps as f64;
                for j in 0..=steps {
                    let b = -radius + 2.0 * radius * j as f64 / steps as f64;
                    best = best.max(a * x.0 + b * x.1 - lp(a, b, p));
                }
            }
            best
        };
        for (p, q) in norms {
            // x strictly inside the dual ball
            let inside = if q.is_infinite() {
                (0.7, -0.5)
            } else if q == 1.0 {
                (0.4, -0.4)
            } else {
                (0.5, 0.5)
            };
            assert!(lp(inside.0, inside.1, q) <= 1.0);
            assert_eq!(sup_on_grid(inside, p, 20.0), 0.0, "p={p}");
            // x outside: the sup grows with the grid radius
            let outside = (1.4, -1.1);
            assert!(lp(outside.0, outside.1, q) > 1.0);
            let small = sup_on_grid(outside, p, 10.0);
            let large = sup_on_grid(outside, p, 40.0);
            assert!(small > 1.0, "p={p}: sup {small}");
            assert!(large > 3.0 * small, "p={p}: {small} -> {large}");
        }
    }

    #[test]
    fn unit_radius_multiproj_equals_max_norm_projection() {
        // with all radii 1 the feasible set is the unit ball of
        // max_i g_i, so the solver output must match the grid argmax
        // over that ball
        let mut rng = Xorshift64Star::new(74);
        let pairs = [
            (l1_ball(1.0), l2_ball(1.0)),
            (l2_ball(1.0), linf_ball(1.0)),
            (l1_ball(1.0), linf_ball(1.0)),
        ];
        for (b1, b2) in pairs {
            let grad = Vector::from_raw(vec![
                rng.next_symmetric() + 0.2,
                rng.next_symmetric() - 0.2,
            ]);
            let z = convex_multiproj(&grad, &[b1, b2], 20, 2000).unwrap();
            let solver_value = grad.dot(&z).unwrap();
            // grid argmax over the intersection at resolution 1e-3
            let mut best = f64::NEG_INFINITY;
            for i in 0..=2000 {
                let a = -1.0 + i as f64 * 1e-3;
                for j in 0..=2000 {
                    let b = -1.0 + j as f64 * 1e-3;
                    let v = Vector::from_raw(vec![a, b]);
                    if b1.norm.eval_vec(&v).unwrap() <= b1.radius
                        && b2.norm.eval_vec(&v).unwrap() <= b2.radius
                    {
                        best = best.max(grad.dot(&v).unwrap());
                    }
                }
            }
            let rel = (solver_value - best).abs() / best.abs();
            assert!(rel <= 1e-2, "{:?}+{:?}: solver {solver_value} vs grid {best}",
                b1.norm.kind(), b2.norm.kind());
        }
    }

    #[test]
    fn two_ball_binding_constraints() {
        let grad = Vector::from_slice(&[1.0, 1.0]).unwrap();
        // l2 unit ball binds inside the l_inf unit ball
        let z = convex_multiproj(&grad, &[linf_ball(1.0), l2_ball(1.0)], 20, 2000).unwrap();
        let r = 1.0 / 2.0_f64.sqrt();
        assert!((z.get(0) - r).abs() < 2e-2, "{z:?}");
        assert!((z.get(1) - r).abs() < 2e-2, "{z:?}");

        // with a loose l2 ball the box binds instead
        let z2 = convex_multiproj(&grad, &[linf_ball(1.0), l2_ball(2.0)], 20, 2000).unwrap();
        assert!((z2.get(0) - 1.0).abs() < 2e-2, "{z2:?}");
        assert!((z2.get(1) - 1.0).abs() < 2e-2, "{z2:?}");
    }
}
