//! Alternating multi-normalization: cyclically applies the normalized
//! projections of an ordered norm family to a gradient matrix.
//!
//! For two norms whose projections share one Euclidean length, the
//! iterate sequence approaches the fixed-point set
//! `F = { x : P_{g_1}(x) = P_{g_2}(x) = x }`; the report captures the
//! diagnostics that witness this: consecutive inner products (which are
//! nondecreasing from the first projected pair onward), the constant
//! Euclidean norms, and per-cycle fixed-point residuals.
//!
//! Convergence is reported, never asserted; callers pick tolerances.

use crate::error::{Error, Result};
use crate::matrix::{DenseMatrix, Vector};
use crate::norms::{Mode, NormSpec};

/// Applies a spec to a matrix operand. Vector norms act on the
/// flattened entries, which is how the engine reduces to single-norm
/// steepest descent at `K = 1`.
fn project_operand(spec: &NormSpec, x: &DenseMatrix, mode: Mode) -> Result<DenseMatrix> {
    if spec.is_matrix_kind() {
        spec.project(x, mode)
    } else {
        let flat = Vector::from_raw(x.as_slice().to_vec());
        let proj = spec.project_vec(&flat, mode)?;
        Ok(DenseMatrix::from_raw(
            x.rows(),
            x.cols(),
            proj.as_slice().to_vec(),
        ))
    }
}

fn eval_operand(spec: &NormSpec, x: &DenseMatrix) -> Result<f64> {
    if spec.is_matrix_kind() {
        spec.eval(x)
    } else {
        spec.eval_vec(&Vector::from_raw(x.as_slice().to_vec()))
    }
}

/// Per-run diagnostics of the alternating scheme.
///
/// With `K` norms and `L` cycles the engine visits iterates
/// `x_0, ..., x_{LK}` where `x_0` is the raw gradient:
///
/// - `inner_products[i] = <x_{i+1}, x_{i+2}>` — the pair against the
///   unnormalized `x_0` is excluded, matching where monotonicity starts;
/// - `l2_norms[k] = ||x_k||_F` for every iterate including `x_0`;
/// - `residuals[l]` is the fixed-point residual after cycle `l + 1`.
#[derive(Debug, Clone)]
pub struct MultiNormReport {
    pub iterations: usize,
    pub inner_products: Vec<f64>,
    pub l2_norms: Vec<f64>,
    pub residuals: Vec<f64>,
    pub final_residual: f64,
    pub iterates: Option<Vec<DenseMatrix>>,
}

fn check_inputs(grad: &DenseMatrix, norms: &[NormSpec], iterations: usize) -> Result<()> {
    if norms.is_empty() {
        return Err(Error::Config {
            what: "multi_normalize requires at least one norm".into(),
        });
    }
    if iterations == 0 {
        return Err(Error::Range {
            what: "multi_normalize requires L >= 1".into(),
        });
    }
    let _ = grad;
    Ok(())
}

/// The projection loop without diagnostics. Optimizer steps use this
/// path; it performs exactly the same projections in the same order as
/// [`multi_normalize`], so both produce bitwise-identical iterates.
pub(crate) fn multi_normalize_lean(
    grad: &DenseMatrix,
    norms: &[NormSpec],
    iterations: usize,
    mode: Mode,
) -> Result<DenseMatrix> {
    check_inputs(grad, norms, iterations)?;
    let mut x = grad.clone();
    for _ in 0..iterations {
        for spec in norms {
            x = project_operand(spec, &x, mode)?;
        }
    }
    Ok(x)
}

/// Applies `P_{g_1}, ..., P_{g_K}` cyclically `iterations` times starting
/// from `grad`; returns the final iterate and the diagnostics report.
///
/// Projections apply in the listed order and the result is
/// post-final-projection, so the last norm's constraint holds exactly
/// while earlier ones hold up to the convergence residual. Set
/// `keep_iterates` to retain every intermediate matrix (scalars are
/// always kept).
pub fn multi_normalize(
    grad: &DenseMatrix,
    norms: &[NormSpec],
    iterations: usize,
    mode: Mode,
    keep_iterates: bool,
) -> Result<(DenseMatrix, MultiNormReport)> {
    check_inputs(grad, norms, iterations)?;
    let mut x = grad.clone();
    let mut inner_products = Vec::with_capacity(iterations * norms.len());
    let mut l2_norms = Vec::with_capacity(iterations * norms.len() + 1);
    let mut residuals = Vec::with_capacity(iterations);
    let mut iterates = keep_iterates.then(|| vec![x.clone()]);
    l2_norms.push(x.frobenius_norm());
    let mut projections_done = 0usize;
    for _ in 0..iterations {
        for spec in norms {
            let next = project_operand(spec, &x, mode)?;
            if projections_done >= 1 {
                inner_products.push(x.dot(&next)?);
            }
            l2_norms.push(next.frobenius_norm());
            if let Some(kept) = iterates.as_mut() {
                kept.push(next.clone());
            }
            x = next;
            projections_done += 1;
        }
        residuals.push(fixed_point_residual(&x, norms, mode)?);
    }
    let final_residual = *residuals.last().expect("iterations >= 1");
    Ok((
        x,
        MultiNormReport {
            iterations,
            inner_products,
            l2_norms,
            residuals,
            final_residual,
            iterates,
        },
    ))
}

/// `max_i ||P_{g_i}(x) - x||_F`; zero exactly on the fixed-point set.
pub fn fixed_point_residual(x: &DenseMatrix, norms: &[NormSpec], mode: Mode) -> Result<f64> {
    let mut worst = 0.0_f64;
    for spec in norms {
        let p = project_operand(spec, x, mode)?;
        worst = worst.max(p.sub(x)?.frobenius_norm());
    }
    Ok(worst)
}

/// Deviations of `x` from the sphere intersection that characterizes the
/// fixed-point set: every unit sphere `S_{g_i}` together with the
/// Euclidean sphere of radius `c`.
#[derive(Debug, Clone)]
pub struct SphereReport {
    /// `g_i(x)` per norm.
    pub norm_values: Vec<f64>,
    /// `|g_i(x) - 1|` per norm.
    pub norm_deviations: Vec<f64>,
    /// `||x||_F / c`.
    pub l2_ratio: f64,
    /// `| ||x||_F - c | / c`.
    pub l2_deviation: f64,
    /// The shared projection constant `c`.
    pub constant: f64,
}

/// Checks membership of `x` in the sphere intersection. Requires every
/// spec to have the same projection constant; unequal constants are a
/// configuration error.
pub fn sphere_membership_check(x: &DenseMatrix, norms: &[NormSpec]) -> Result<SphereReport> {
    if norms.is_empty() {
        return Err(Error::Config {
            what: "sphere_membership_check requires at least one norm".into(),
        });
    }
    let (m, n) = x.shape();
    let mut constant = None;
    for spec in norms {
        let c = spec
            .projection_l2_constant(m, n)
            .map_err(|e| match e {
                Error::AssumptionViolated { what } => Error::Config { what },
                other => other,
            })?
            .0;
        match constant {
            None => constant = Some(c),
            Some(c0) if (c - c0).abs() / c0 > 1e-12 => {
                return Err(Error::Config {
                    what: format!(
                        "projection constants differ across norms: {c0} vs {c}"
                    ),
                });
            }
            Some(_) => {}
        }
    }
    let c = constant.expect("nonempty norm list");
    let norm_values: Vec<f64> = norms
        .iter()
        .map(|spec| eval_operand(spec, x))
        .collect::<Result<_>>()?;
    let norm_deviations = norm_values.iter().map(|g| (g - 1.0).abs()).collect();
    let fro = x.frobenius_norm();
    Ok(SphereReport {
        norm_values,
        norm_deviations,
        l2_ratio: fro / c,
        l2_deviation: (fro - c).abs() / c,
        constant: c,
    })
}
