//! The optimizer suite: Adam, SGD, SignGD, steepest descent under a
//! norm, SWAN, MNGD, and SinkGD, plus the cosine-with-warmup schedule,
//! group-wise learning-rate scaling, and optimizer-state memory
//! accounting.
//!
//! Every kind except Adam is stateless: its update is a pure function of
//! the current gradient, it holds no per-parameter slots, and its state
//! memory is exactly zero. SWAN and SinkGD are thin configurations of
//! MNGD — their steps route through the same projection kernels in the
//! same order, so the three agree bitwise on identical inputs.

use crate::error::{Error, Result};
use crate::matrix::{DenseMatrix, Vector};
use crate::multinorm::multi_normalize_lean;
use crate::norms::{Mode, NormKind, NormSpec, NormSpecConfig};
use crate::sinkhorn::sr_sinkhorn;

/// Multi-normalization iteration count used when a config does not set
/// one.
pub const DEFAULT_MULTINORM_ITERS: usize = 5;
/// Group-wise learning-rate multiplier for matrix groups under the
/// normalized-update kinds.
pub const DEFAULT_GROUP_SCALE: f64 = 0.05;
/// Global base learning rate paired with [`DEFAULT_GROUP_SCALE`].
pub const DEFAULT_BASE_LR: f64 = 0.02;
/// Warmup fraction of the schedule.
pub const DEFAULT_WARMUP_FRAC: f64 = 0.10;

/// How a parameter group is treated by the matrix-preprocessing kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupRole {
    /// A genuine weight matrix (both dimensions at least 2); receives
    /// the group scale and the matrix preprocessing.
    Linear2d,
    /// Everything else; stepped by the plain-SGD fallback under the
    /// matrix-only kinds and exempt from the group scale.
    Other,
}

/// A named parameter group with its shape, role, and learning-rate
/// multiplier.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamGroup {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub role: GroupRole,
    pub group_scale: f64,
}

impl ParamGroup {
    pub fn new(
        name: impl Into<String>,
        rows: usize,
        cols: usize,
        role: GroupRole,
        group_scale: f64,
    ) -> Result<Self> {
        if group_scale <= 0.0 || !group_scale.is_finite() {
            return Err(Error::Config {
                what: format!("group scale must be positive, got {group_scale}"),
            });
        }
        if role == GroupRole::Linear2d && (rows < 2 || cols < 2) {
            return Err(Error::Config {
                what: format!("linear_2d group must be at least 2x2, got {rows}x{cols}"),
            });
        }
        Ok(Self {
            name: name.into(),
            rows,
            cols,
            role,
            group_scale,
        })
    }

    pub fn elements(&self) -> usize {
        self.rows * self.cols
    }
}

/// `alpha * eta_t` for matrix groups, bare `eta_t` for the rest.
pub fn effective_lr(group: &ParamGroup, eta_t: f64) -> f64 {
    match group.role {
        GroupRole::Linear2d => group.group_scale * eta_t,
        GroupRole::Other => eta_t,
    }
}

/// Adam's EMA weights and stability epsilon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamHyper {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamHyper {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Optimizer kind plus hyperparameters. Norm lists are carried as
/// configs so their conventional scales resolve per parameter shape.
#[derive(Debug, Clone, PartialEq)]
pub enum OptimizerKind {
    Adam(AdamHyper),
    Sgd,
    SignGd,
    /// Steepest descent under the given norm with step length
    /// `||grad||_* / lambda_t`; the training loop sets
    /// `lambda_t = 1 / eta_t`.
    SteepestDescent(NormSpecConfig),
    Swan { iterations: usize },
    Mngd {
        norms: Vec<NormSpecConfig>,
        iterations: usize,
    },
    SinkGd { iterations: usize },
}

impl OptimizerKind {
    pub fn is_stateless(&self) -> bool {
        !matches!(self, Self::Adam(_))
    }

    /// Stable textual form used in config echoes and run records.
    pub fn encode(&self) -> String {
        match self {
            Self::Adam(h) => format!(
                "adam:beta1={},beta2={},epsilon={}",
                h.beta1, h.beta2, h.epsilon
            ),
            Self::Sgd => "sgd".into(),
            Self::SignGd => "signgd".into(),
            Self::SteepestDescent(cfg) => format!("steepest_descent:{}", cfg.encode()),
            Self::Swan { iterations } => format!("swan:l={iterations}"),
            Self::Mngd { norms, iterations } => {
                let list: Vec<String> = norms.iter().map(|c| c.encode()).collect();
                format!("mngd:l={iterations}:norms={}", list.join("|"))
            }
            Self::SinkGd { iterations } => format!("sinkgd:l={iterations}"),
        }
    }
}

/// First/second-moment slots for one Adam parameter group.
#[derive(Debug, Clone)]
pub struct AdamState {
    rows: usize,
    cols: usize,
    m: Vec<f64>,
    s: Vec<f64>,
    t: u64,
}

impl AdamState {
    pub fn new(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            m: vec![0.0; rows * cols],
            s: vec![0.0; rows * cols],
            t: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }
}

/// One Adam update in place; returns the Frobenius norm of the applied
/// change.
pub fn adam_step(
    state: &mut AdamState,
    hyper: &AdamHyper,
    params: &mut DenseMatrix,
    grad: &DenseMatrix,
    eta: f64,
) -> Result<f64> {
    if params.shape() != grad.shape() {
        return Err(Error::Dim {
            op: "adam_step",
            lhs: params.shape(),
            rhs: grad.shape(),
        });
    }
    if (state.rows, state.cols) != params.shape() {
        return Err(Error::Dim {
            op: "adam_step state",
            lhs: (state.rows, state.cols),
            rhs: params.shape(),
        });
    }
    state.t += 1;
    let bc1 = 1.0 - hyper.beta1.powi(state.t as i32);
    let bc2 = 1.0 - hyper.beta2.powi(state.t as i32);
    let mut norm_sq = 0.0;
    let p = params.as_mut_slice();
    for (i, &g) in grad.as_slice().iter().enumerate() {
        state.m[i] = hyper.beta1 * state.m[i] + (1.0 - hyper.beta1) * g;
        state.s[i] = hyper.beta2 * state.s[i] + (1.0 - hyper.beta2) * g * g;
        let m_hat = state.m[i] / bc1;
        let s_hat = state.s[i] / bc2;
        let denom = s_hat.sqrt() + hyper.epsilon;
        let delta = if denom == 0.0 { 0.0 } else { eta * m_hat / denom };
        p[i] -= delta;
        norm_sq += delta * delta;
    }
    Ok(norm_sq.sqrt())
}

/// Steepest-descent update for matrix parameters:
/// `params -= (||grad||_* / lambda) P(grad)`. A vector-norm spec treats
/// the matrix as one flat vector. Zero gradient is a documented no-op.
pub fn steepest_descent_step(
    params: &mut DenseMatrix,
    grad: &DenseMatrix,
    spec: &NormSpec,
    lambda: f64,
) -> Result<f64> {
    if params.shape() != grad.shape() {
        return Err(Error::Dim {
            op: "steepest_descent_step",
            lhs: params.shape(),
            rhs: grad.shape(),
        });
    }
    if lambda.is_nan() || lambda <= 0.0 {
        return Err(Error::Range {
            what: format!("sharpness must be positive, got {lambda}"),
        });
    }
    if grad.is_zero() {
        return Ok(0.0);
    }
    let (m, n) = grad.shape();
    let (dual, direction) = if spec.is_matrix_kind() {
        (spec.dual_eval(grad)?, spec.project(grad, Mode::Strict)?)
    } else {
        let flat = Vector::from_raw(grad.as_slice().to_vec());
        let dual = spec.dual_eval_vec(&flat)?;
        let proj = spec.project_vec(&flat, Mode::Strict)?;
        (dual, DenseMatrix::from_raw(m, n, proj.as_slice().to_vec()))
    };
    let step = dual / lambda;
    let mut norm_sq = 0.0;
    let p = params.as_mut_slice();
    for (i, &d) in direction.as_slice().iter().enumerate() {
        let delta = step * d;
        p[i] -= delta;
        norm_sq += delta * delta;
    }
    Ok(norm_sq.sqrt())
}

/// Vector form of [`steepest_descent_step`].
pub fn steepest_descent_step_vec(
    params: &mut Vector,
    grad: &Vector,
    spec: &NormSpec,
    lambda: f64,
) -> Result<f64> {
    if params.len() != grad.len() {
        return Err(Error::Dim {
            op: "steepest_descent_step",
            lhs: (params.len(), 1),
            rhs: (grad.len(), 1),
        });
    }
    if grad.is_zero() {
        return Ok(0.0);
    }
    let dual = spec.dual_eval_vec(grad)?;
    let direction = spec.project_vec(grad, Mode::Strict)?;
    let step = dual / lambda;
    let mut norm_sq = 0.0;
    let p = params.as_mut_slice();
    for (i, &d) in direction.as_slice().iter().enumerate() {
        let delta = step * d;
        p[i] -= delta;
        norm_sq += delta * delta;
    }
    Ok(norm_sq.sqrt())
}

/// The SWAN norm pair, scales deferred to the gradient shape.
pub fn swan_norm_configs() -> [NormSpecConfig; 2] {
    [
        NormSpecConfig {
            kind: NormKind::RowL2Max,
            scale: None,
        },
        NormSpecConfig {
            kind: NormKind::SpectralMax,
            scale: None,
        },
    ]
}

/// The SinkGD norm pair, scales deferred to the gradient shape.
pub fn sinkhorn_norm_configs() -> [NormSpecConfig; 2] {
    [
        NormSpecConfig {
            kind: NormKind::RowL2Max,
            scale: None,
        },
        NormSpecConfig {
            kind: NormKind::ColL2Max,
            scale: None,
        },
    ]
}

/// Multi-normalizes a gradient under a norm-config list.
///
/// Lists containing the spectral norm require `m <= n`; taller-than-wide
/// gradients are transposed in, normalized, and transposed back, so the
/// convention is preserved without changing the row/column pairs of the
/// Sinkhorn list.
pub fn mngd_preprocess(
    grad: &DenseMatrix,
    norms: &[NormSpecConfig],
    iterations: usize,
    mode: Mode,
) -> Result<DenseMatrix> {
    let needs_transpose = grad.rows() > grad.cols()
        && norms
            .iter()
            .any(|c| matches!(c.kind, NormKind::SpectralMax));
    let work = if needs_transpose {
        grad.transpose()
    } else {
        grad.clone()
    };
    let specs: Vec<NormSpec> = norms
        .iter()
        .map(|c| c.resolve(work.rows(), work.cols()))
        .collect::<Result<_>>()?;
    let out = multi_normalize_lean(&work, &specs, iterations, mode)?;
    Ok(if needs_transpose { out.transpose() } else { out })
}

/// SWAN preprocessing: row normalization then whitening, `iterations`
/// full cycles (one cycle is the published update).
pub fn swan_preprocess(grad: &DenseMatrix, iterations: usize, mode: Mode) -> Result<DenseMatrix> {
    mngd_preprocess(grad, &swan_norm_configs(), iterations, mode)
}

/// `params -= eta * MultiNorm(grad)`; returns the update Frobenius norm.
pub fn mngd_step(
    params: &mut DenseMatrix,
    grad: &DenseMatrix,
    norms: &[NormSpecConfig],
    iterations: usize,
    eta: f64,
) -> Result<f64> {
    let pre = mngd_preprocess(grad, norms, iterations, Mode::Optimizer)?;
    apply_update(params, &pre, eta)
}

/// `params -= eta * SwanPreprocess(grad)`.
pub fn swan_step(
    params: &mut DenseMatrix,
    grad: &DenseMatrix,
    eta: f64,
    iterations: usize,
) -> Result<f64> {
    let pre = swan_preprocess(grad, iterations, Mode::Optimizer)?;
    apply_update(params, &pre, eta)
}

/// `params -= eta * SrSinkhorn(grad)`. The update Frobenius norm equals
/// `eta * sqrt(n m)` up to the convergence residual because the final
/// column step pins every column norm.
pub fn sinkgd_step(
    params: &mut DenseMatrix,
    grad: &DenseMatrix,
    eta: f64,
    iterations: usize,
) -> Result<f64> {
    let pre = sr_sinkhorn(grad, iterations, Mode::Optimizer)?;
    apply_update(params, &pre, eta)
}

fn apply_update(params: &mut DenseMatrix, direction: &DenseMatrix, eta: f64) -> Result<f64> {
    if params.shape() != direction.shape() {
        return Err(Error::Dim {
            op: "optimizer update",
            lhs: params.shape(),
            rhs: direction.shape(),
        });
    }
    let mut norm_sq = 0.0;
    let p = params.as_mut_slice();
    for (i, &d) in direction.as_slice().iter().enumerate() {
        let delta = eta * d;
        p[i] -= delta;
        norm_sq += delta * delta;
    }
    Ok(norm_sq.sqrt())
}

fn sgd_step(params: &mut DenseMatrix, grad: &DenseMatrix, eta: f64) -> Result<f64> {
    apply_update(params, grad, eta)
}

fn signgd_step(params: &mut DenseMatrix, grad: &DenseMatrix, eta: f64) -> Result<f64> {
    let sign = grad.map(|g| if g == 0.0 { 0.0 } else { g.signum() });
    apply_update(params, &sign, eta)
}

/// Cosine learning-rate schedule with linear warmup.
///
/// `lr_at(t)` ramps linearly from 0 to `base_lr` over the first
/// `ceil(warmup_frac * total_steps)` steps, reaches `base_lr` exactly at
/// the boundary, then follows a half cosine down to 0 at
/// `total_steps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Schedule {
    pub base_lr: f64,
    pub total_steps: usize,
    pub warmup_frac: f64,
}

impl Schedule {
    pub fn new(base_lr: f64, total_steps: usize, warmup_frac: f64) -> Result<Self> {
        if base_lr <= 0.0 || !base_lr.is_finite() {
            return Err(Error::Config {
                what: format!("base_lr must be positive, got {base_lr}"),
            });
        }
        if total_steps == 0 {
            return Err(Error::Config {
                what: "total_steps must be positive".into(),
            });
        }
        if !(0.0..1.0).contains(&warmup_frac) {
            return Err(Error::Config {
                what: format!("warmup_frac must lie in [0, 1), got {warmup_frac}"),
            });
        }
        Ok(Self {
            base_lr,
            total_steps,
            warmup_frac,
        })
    }

    pub fn warmup_steps(&self) -> usize {
        (self.warmup_frac * self.total_steps as f64).ceil() as usize
    }

    pub fn lr_at(&self, t: usize) -> Result<f64> {
        if t > self.total_steps {
            return Err(Error::Range {
                what: format!("step {t} exceeds total_steps {}", self.total_steps),
            });
        }
        let warmup = self.warmup_steps();
        if warmup > 0 && t <= warmup {
            return Ok(self.base_lr * t as f64 / warmup as f64);
        }
        if warmup == self.total_steps {
            return Ok(self.base_lr);
        }
        let progress = (t - warmup) as f64 / (self.total_steps - warmup) as f64;
        Ok(self.base_lr * 0.5 * (1.0 + (core::f64::consts::PI * progress).cos()))
    }
}

/// Optimizer kind, hyperparameters, and per-group mutable state. The
/// state vector stays empty for stateless kinds.
#[derive(Debug, Clone)]
pub struct OptimizerInstance {
    kind: OptimizerKind,
    element_width: usize,
    state: Vec<Option<AdamState>>,
}

impl OptimizerInstance {
    pub fn new(kind: OptimizerKind) -> Self {
        Self {
            kind,
            element_width: 8,
            state: Vec::new(),
        }
    }

    /// Sets the element width (bytes) used by state-memory accounting.
    pub fn with_element_width(mut self, bytes: usize) -> Self {
        self.element_width = bytes;
        self
    }

    pub fn kind(&self) -> &OptimizerKind {
        &self.kind
    }

    pub fn is_stateless(&self) -> bool {
        self.kind.is_stateless()
    }

    /// Number of allocated state slots; always zero for stateless kinds.
    pub fn state_entries(&self) -> usize {
        self.state.iter().filter(|s| s.is_some()).count()
    }

    /// Exact byte count of optimizer state over the given groups at the
    /// configured element width: `2 * elements * width` for Adam, zero
    /// for every stateless kind.
    pub fn state_memory_bytes(&self, groups: &[ParamGroup]) -> u64 {
        match self.kind {
            OptimizerKind::Adam(_) => {
                2 * groups.iter().map(|g| g.elements() as u64).sum::<u64>()
                    * self.element_width as u64
            }
            _ => 0,
        }
    }

    /// Steps one parameter group in place; returns the Frobenius norm of
    /// the applied update. `group_index` keys the per-group state slot.
    pub fn step_group(
        &mut self,
        group_index: usize,
        group: &ParamGroup,
        params: &mut DenseMatrix,
        grad: &DenseMatrix,
        eta_t: f64,
    ) -> Result<f64> {
        if params.shape() != (group.rows, group.cols) {
            return Err(Error::Dim {
                op: "step_group params",
                lhs: params.shape(),
                rhs: (group.rows, group.cols),
            });
        }
        if grad.shape() != params.shape() {
            return Err(Error::Dim {
                op: "step_group grad",
                lhs: grad.shape(),
                rhs: params.shape(),
            });
        }
        let eta = effective_lr(group, eta_t);
        let matrix_kind_on_other = group.role == GroupRole::Other;
        match &self.kind {
            OptimizerKind::Adam(hyper) => {
                let hyper = *hyper;
                if self.state.len() <= group_index {
                    self.state.resize_with(group_index + 1, || None);
                }
                let slot = &mut self.state[group_index];
                if slot.is_none() {
                    *slot = Some(AdamState::new(group.rows, group.cols));
                }
                adam_step(slot.as_mut().unwrap(), &hyper, params, grad, eta)
            }
            OptimizerKind::Sgd => sgd_step(params, grad, eta),
            OptimizerKind::SignGd => signgd_step(params, grad, eta),
            OptimizerKind::SteepestDescent(cfg) => {
                if grad.is_zero() || eta == 0.0 {
                    return Ok(0.0);
                }
                let spec = cfg.resolve(group.rows, group.cols)?;
                steepest_descent_step(params, grad, &spec, 1.0 / eta)
            }
            OptimizerKind::Swan { iterations } => {
                if matrix_kind_on_other {
                    return sgd_step(params, grad, eta);
                }
                swan_step(params, grad, eta, *iterations)
            }
            OptimizerKind::Mngd { norms, iterations } => {
                if matrix_kind_on_other {
                    return sgd_step(params, grad, eta);
                }
                let norms = norms.clone();
                mngd_step(params, grad, &norms, *iterations, eta)
            }
            OptimizerKind::SinkGd { iterations } => {
                if matrix_kind_on_other {
                    return sgd_step(params, grad, eta);
                }
                sinkgd_step(params, grad, eta, *iterations)
            }
        }
    }
}
