//! Desk-scale deterministic training problems with analytic gradients,
//! the full-batch training loop, and persisted run records.
//!
//! Every problem regenerates bit-identically from `(kind, dims, seed)`
//! through the crate's xorshift64* generator, and a fixed config plus
//! seed reproduces a run byte for byte in its CSV form. A
//! fixed-permutation mini-batch mode exists behind
//! [`Batching::FixedPermutation`] for qualitative stochastic runs;
//! property tests use the full-batch default.

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use crate::optim::{GroupRole, OptimizerInstance, ParamGroup, Schedule};
use crate::prng::Xorshift64Star;
use std::time::Instant;

/// Loss explosion factor over the initial loss that aborts a run.
pub const DIVERGENCE_FACTOR: f64 = 1e6;
/// Minimum decision margin of the separable logistic preset.
pub const LOGISTIC_MARGIN: f64 = 0.1;
/// Standard deviation of the logistic preset's Gaussian features.
pub const LOGISTIC_INPUT_SCALE: f64 = 2.0;

/// Problem family and dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemSpec {
    /// Recover a planted rank-`rank` factorization of an `m x n` target:
    /// `loss = 0.5 ||U V - Y||_F^2`.
    MatrixFactorization { m: usize, n: usize, rank: usize },
    /// Two-class softmax regression on linearly separable data with
    /// margin at least [`LOGISTIC_MARGIN`]; weights are `2 x dim`.
    LogisticRegression { dim: usize, samples: usize },
    /// Two dense tanh layers regressing onto a noiseless teacher.
    Mlp2 {
        input: usize,
        hidden: usize,
        output: usize,
        samples: usize,
    },
}

impl ProblemSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::MatrixFactorization { m, n, rank } => {
                if m < 2 || n < 2 || rank == 0 || rank > m.min(n) {
                    return Err(Error::Config {
                        what: format!(
                            "matrix_factorization dims invalid: m={m}, n={n}, rank={rank}"
                        ),
                    });
                }
            }
            Self::LogisticRegression { dim, samples } => {
                if dim < 2 || samples == 0 {
                    return Err(Error::Config {
                        what: format!("logistic_regression dims invalid: dim={dim}, samples={samples}"),
                    });
                }
            }
            Self::Mlp2 {
                input,
                hidden,
                output,
                samples,
            } => {
                if input < 2 || hidden < 2 || output == 0 || samples == 0 {
                    return Err(Error::Config {
                        what: format!(
                            "mlp2 dims invalid: input={input}, hidden={hidden}, output={output}, samples={samples}"
                        ),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn encode(&self) -> String {
        match *self {
            Self::MatrixFactorization { m, n, rank } => {
                format!("matrix_factorization:m={m},n={n},rank={rank}")
            }
            Self::LogisticRegression { dim, samples } => {
                format!("logistic_regression:dim={dim},samples={samples}")
            }
            Self::Mlp2 {
                input,
                hidden,
                output,
                samples,
            } => format!("mlp2:input={input},hidden={hidden},output={output},samples={samples}"),
        }
    }

    /// The separable logistic preset used by the sanity suite.
    pub fn logistic_preset() -> Self {
        Self::LogisticRegression {
            dim: 20,
            samples: 200,
        }
    }

    /// The planted factorization preset used by the sanity suite.
    pub fn factorization_preset() -> Self {
        Self::MatrixFactorization {
            m: 64,
            n: 64,
            rank: 4,
        }
    }
}

#[derive(Debug, Clone)]
enum ProblemData {
    Mf {
        target: DenseMatrix,
        planted_u: DenseMatrix,
        planted_v: DenseMatrix,
    },
    Logistic {
        // samples x dim inputs, one 0/1 label per row
        x: DenseMatrix,
        labels: Vec<usize>,
    },
    Mlp {
        x: DenseMatrix,
        y: DenseMatrix,
    },
}

/// A generated problem: spec, seed, and the deterministic data.
#[derive(Debug, Clone)]
pub struct Problem {
    pub spec: ProblemSpec,
    pub seed: u64,
    data: ProblemData,
}

/// Deterministic problem generation from `(spec, seed)`.
pub fn gen_problem(spec: ProblemSpec, seed: u64) -> Result<Problem> {
    spec.validate()?;
    let mut rng = Xorshift64Star::new(seed);
    let data = match spec {
        ProblemSpec::MatrixFactorization { m, n, rank } => {
            let scale = 1.0 / (rank as f64).sqrt();
            let planted_u = DenseMatrix::from_fn(m, rank, |_, _| scale * rng.next_symmetric());
            let planted_v = DenseMatrix::from_fn(rank, n, |_, _| scale * rng.next_symmetric());
            let target = planted_u.matmul(&planted_v)?;
            ProblemData::Mf {
                target,
                planted_u,
                planted_v,
            }
        }
        ProblemSpec::LogisticRegression { dim, samples } => {
            // unit separating direction
            let mut w_star: Vec<f64> = (0..dim).map(|_| rng.next_gaussian()).collect();
            let norm = w_star.iter().map(|v| v * v).sum::<f64>().sqrt();
            for v in &mut w_star {
                *v /= norm;
            }
            let mut rows = Vec::with_capacity(samples * dim);
            let mut labels = Vec::with_capacity(samples);
            for _ in 0..samples {
                // resample until the margin clears the preset threshold
                loop {
                    let x: Vec<f64> = (0..dim)
                        .map(|_| LOGISTIC_INPUT_SCALE * rng.next_gaussian())
                        .collect();
                    let score: f64 = x.iter().zip(&w_star).map(|(a, b)| a * b).sum();
                    if score.abs() >= LOGISTIC_MARGIN {
                        labels.push(if score > 0.0 { 1 } else { 0 });
                        rows.extend(x);
                        break;
                    }
                }
            }
            ProblemData::Logistic {
                x: DenseMatrix::from_vec(samples, dim, rows)?,
                labels,
            }
        }
        ProblemSpec::Mlp2 {
            input,
            hidden,
            output,
            samples,
        } => {
            let w1 = DenseMatrix::from_fn(hidden, input, |_, _| {
                rng.next_symmetric() / (input as f64).sqrt()
            });
            let w2 = DenseMatrix::from_fn(output, hidden, |_, _| {
                rng.next_symmetric() / (hidden as f64).sqrt()
            });
            let x = DenseMatrix::from_fn(samples, input, |_, _| rng.next_gaussian());
            // teacher outputs: y = tanh(x W1^T) W2^T
            let y = x.matmul(&w1.transpose())?.map(f64::tanh).matmul(&w2.transpose())?;
            ProblemData::Mlp { x, y }
        }
    };
    Ok(Problem { spec, seed, data })
}

impl Problem {
    pub fn group_names(&self) -> Vec<&'static str> {
        match self.data {
            ProblemData::Mf { .. } => vec!["u", "v"],
            ProblemData::Logistic { .. } => vec!["w"],
            ProblemData::Mlp { .. } => vec!["w1", "w2"],
        }
    }

    fn param_shapes(&self) -> Vec<(usize, usize)> {
        match self.spec {
            ProblemSpec::MatrixFactorization { m, n, rank } => vec![(m, rank), (rank, n)],
            ProblemSpec::LogisticRegression { dim, .. } => vec![(2, dim)],
            ProblemSpec::Mlp2 {
                input,
                hidden,
                output,
                ..
            } => vec![(hidden, input), (output, hidden)],
        }
    }

    /// Parameter groups for this problem. Matrices with both dimensions
    /// at least 2 are `linear_2d` and receive `alpha_linear`; anything
    /// else falls back to `other` with unit scale.
    pub fn make_groups(&self, alpha_linear: f64) -> Result<Vec<ParamGroup>> {
        self.group_names()
            .into_iter()
            .zip(self.param_shapes())
            .map(|(name, (rows, cols))| {
                if rows >= 2 && cols >= 2 {
                    ParamGroup::new(name, rows, cols, GroupRole::Linear2d, alpha_linear)
                } else {
                    ParamGroup::new(name, rows, cols, GroupRole::Other, 1.0)
                }
            })
            .collect()
    }

    /// Seeded initial parameters, scaled by inverse square-root fan-in.
    /// The init stream is decoupled from data generation by a fixed
    /// seed offset.
    pub fn initial_params(&self) -> Vec<DenseMatrix> {
        let mut rng = Xorshift64Star::new(self.seed ^ 0xA5A5_A5A5_5A5A_5A5A);
        self.param_shapes()
            .into_iter()
            .map(|(rows, cols)| {
                let scale = 1.0 / (cols as f64).sqrt();
                DenseMatrix::from_fn(rows, cols, |_, _| scale * rng.next_symmetric())
            })
            .collect()
    }

    /// The planted factors (matrix factorization only); loss is zero
    /// there.
    pub fn planted_params(&self) -> Option<Vec<DenseMatrix>> {
        match &self.data {
            ProblemData::Mf {
                planted_u,
                planted_v,
                ..
            } => Some(vec![planted_u.clone(), planted_v.clone()]),
            _ => None,
        }
    }

    pub fn sample_count(&self) -> usize {
        match &self.data {
            ProblemData::Mf { .. } => 0,
            ProblemData::Logistic { x, .. } => x.rows(),
            ProblemData::Mlp { x, .. } => x.rows(),
        }
    }

    /// Full-batch loss and per-group gradients.
    pub fn loss_and_grad(&self, params: &[DenseMatrix]) -> Result<(f64, Vec<DenseMatrix>)> {
        self.loss_and_grad_batch(params, None)
    }

    /// Loss and gradients over a subset of sample indices (`None` means
    /// the full batch; matrix factorization ignores the subset).
    pub fn loss_and_grad_batch(
        &self,
        params: &[DenseMatrix],
        batch: Option<&[usize]>,
    ) -> Result<(f64, Vec<DenseMatrix>)> {
        let shapes = self.param_shapes();
        if params.len() != shapes.len() {
            return Err(Error::Config {
                what: format!(
                    "expected {} parameter groups, got {}",
                    shapes.len(),
                    params.len()
                ),
            });
        }
        for (p, &(rows, cols)) in params.iter().zip(&shapes) {
            if p.shape() != (rows, cols) {
                return Err(Error::Dim {
                    op: "loss_and_grad params",
                    lhs: p.shape(),
                    rhs: (rows, cols),
                });
            }
        }
        match &self.data {
            ProblemData::Mf { target, .. } => {
                let (u, v) = (&params[0], &params[1]);
                let err = u.matmul(v)?.sub(target)?;
                let loss = 0.5 * err.frobenius_norm().powi(2);
                let gu = err.matmul(&v.transpose())?;
                let gv = u.transpose().matmul(&err)?;
                Ok((loss, vec![gu, gv]))
            }
            ProblemData::Logistic { x, labels } => {
                let w = &params[0];
                let dim = x.cols();
                let full: Vec<usize> = (0..x.rows()).collect();
                let indices = batch.unwrap_or(&full);
                let count = indices.len() as f64;
                let mut loss = 0.0;
                let mut grad = DenseMatrix::zeros(2, dim);
                for &i in indices {
                    let xi = x.row(i);
                    let mut z = [0.0; 2];
                    for (c, zc) in z.iter_mut().enumerate() {
                        *zc = w.row(c).iter().zip(xi).map(|(&wj, &xj)| wj * xj).sum();
                    }
                    let zmax = z[0].max(z[1]);
                    let e0 = (z[0] - zmax).exp();
                    let e1 = (z[1] - zmax).exp();
                    let denom = e0 + e1;
                    let p = [e0 / denom, e1 / denom];
                    loss -= (p[labels[i]]).ln();
                    for (c, &pc) in p.iter().enumerate() {
                        let coeff = (pc - if labels[i] == c { 1.0 } else { 0.0 }) / count;
                        for (j, &xj) in xi.iter().enumerate() {
                            grad.set(c, j, grad.get(c, j) + coeff * xj);
                        }
                    }
                }
                Ok((loss / count, vec![grad]))
            }
            ProblemData::Mlp { x, y } => {
                let (w1, w2) = (&params[0], &params[1]);
                let (x_batch, y_batch) = match batch {
                    None => (x.clone(), y.clone()),
                    Some(indices) => {
                        let xb = DenseMatrix::from_fn(indices.len(), x.cols(), |i, j| {
                            x.get(indices[i], j)
                        });
                        let yb = DenseMatrix::from_fn(indices.len(), y.cols(), |i, j| {
                            y.get(indices[i], j)
                        });
                        (xb, yb)
                    }
                };
                let count = x_batch.rows() as f64;
                let a1 = x_batch.matmul(&w1.transpose())?.map(f64::tanh);
                let pred = a1.matmul(&w2.transpose())?;
                let err = pred.sub(&y_batch)?;
                let loss = err.frobenius_norm().powi(2) / (2.0 * count);
                let d_pred = err.scale(1.0 / count);
                let g2 = d_pred.transpose().matmul(&a1)?;
                let d_a1 = d_pred.matmul(w2)?;
                let d_z1 = d_a1.hadamard(&a1.map(|a| 1.0 - a * a))?;
                let g1 = d_z1.transpose().matmul(&x_batch)?;
                Ok((loss, vec![g1, g2]))
            }
        }
    }
}

/// Batch selection policy for the training loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Batching {
    /// Deterministic full-batch gradients (the default).
    Full,
    /// Fixed-permutation mini-batches of the given size, cycling through
    /// one seeded shuffle of the sample indices.
    FixedPermutation(usize),
}

impl Batching {
    pub fn encode(&self) -> String {
        match self {
            Self::Full => "full".into(),
            Self::FixedPermutation(b) => format!("minibatch:{b}"),
        }
    }
}

/// Everything needed to reproduce a run, echoed into the record.
#[derive(Debug, Clone, PartialEq)]
pub struct RunMeta {
    pub problem: String,
    pub seed: u64,
    pub optimizer: String,
    pub base_lr: f64,
    pub total_steps: usize,
    pub warmup_frac: f64,
    pub steps: usize,
    pub groups: Vec<(String, f64)>,
    pub batching: String,
}

/// One training step's observables. `loss` is measured after the step's
/// update is applied.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub lr: f64,
    pub loss: f64,
    pub update_fro: Vec<f64>,
}

/// Deterministic training trace plus final accounting.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub meta: RunMeta,
    pub initial_loss: f64,
    pub steps: Vec<StepRecord>,
    pub final_loss: f64,
    pub wall_time_s: f64,
    pub state_bytes: u64,
}

impl RunRecord {
    /// CSV form: `step,lr,loss,update_fro_<group>...` with a step-0 row
    /// carrying the initial loss. Floats are written at 17 significant
    /// digits so equal runs produce equal bytes.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,lr,loss");
        for (name, _) in &self.meta.groups {
            out.push_str(&format!(",update_fro_{name}"));
        }
        out.push('\n');
        out.push_str(&format!("0,{:.16e},{:.16e}", 0.0, self.initial_loss));
        for _ in &self.meta.groups {
            out.push_str(&format!(",{:.16e}", 0.0));
        }
        out.push('\n');
        for row in &self.steps {
            out.push_str(&format!("{},{:.16e},{:.16e}", row.step, row.lr, row.loss));
            for fro in &row.update_fro {
                out.push_str(&format!(",{fro:.16e}"));
            }
            out.push('\n');
        }
        out
    }

    /// Echo of the configuration the run was produced from, one
    /// `key = value` line each.
    pub fn config_lines(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("problem = {}\n", self.meta.problem));
        out.push_str(&format!("seed = {}\n", self.meta.seed));
        out.push_str(&format!("optimizer = {}\n", self.meta.optimizer));
        out.push_str(&format!("base_lr = {}\n", self.meta.base_lr));
        out.push_str(&format!("total_steps = {}\n", self.meta.total_steps));
        out.push_str(&format!("warmup_frac = {}\n", self.meta.warmup_frac));
        out.push_str(&format!("steps = {}\n", self.meta.steps));
        out.push_str(&format!("batching = {}\n", self.meta.batching));
        for (name, alpha) in &self.meta.groups {
            out.push_str(&format!("group_{name}_scale = {alpha}\n"));
        }
        out
    }
}

/// Runs `steps` optimizer updates on the problem from its seeded
/// initialization. Aborts with a divergence error naming the step when
/// the loss goes non-finite or exceeds [`DIVERGENCE_FACTOR`] times the
/// initial loss.
pub fn run_training(
    problem: &Problem,
    opt: &mut OptimizerInstance,
    sched: &Schedule,
    steps: usize,
    groups: &[ParamGroup],
    batching: Batching,
) -> Result<RunRecord> {
    if steps > sched.total_steps {
        return Err(Error::Range {
            what: format!(
                "steps {steps} exceeds schedule total_steps {}",
                sched.total_steps
            ),
        });
    }
    let start = Instant::now();
    let mut params = problem.initial_params();
    if groups.len() != params.len() {
        return Err(Error::Config {
            what: format!(
                "expected {} groups for this problem, got {}",
                params.len(),
                groups.len()
            ),
        });
    }
    let permutation: Vec<usize> = match batching {
        Batching::Full => Vec::new(),
        Batching::FixedPermutation(size) => {
            let n = problem.sample_count();
            if size == 0 || n == 0 {
                return Err(Error::Config {
                    what: "mini-batch mode needs a positive batch size and a sample-based problem"
                        .into(),
                });
            }
            // one Fisher-Yates shuffle, fixed for the whole run
            let mut perm: Vec<usize> = (0..n).collect();
            let mut rng = Xorshift64Star::new(problem.seed ^ 0x0F0F_F0F0_0F0F_F0F0);
            for i in (1..n).rev() {
                let j = (rng.next_u64() % (i as u64 + 1)) as usize;
                perm.swap(i, j);
            }
            perm
        }
    };
    let batch_for = |t: usize| -> Option<Vec<usize>> {
        match batching {
            Batching::Full => None,
            Batching::FixedPermutation(size) => {
                let n = permutation.len();
                let start = ((t - 1) * size) % n;
                Some((0..size).map(|k| permutation[(start + k) % n]).collect())
            }
        }
    };

    let (initial_loss, mut grads) = problem.loss_and_grad(&params)?;
    if !initial_loss.is_finite() {
        return Err(Error::Divergence {
            step: 0,
            loss: initial_loss,
        });
    }
    if let Batching::FixedPermutation(_) = batching {
        let batch = batch_for(1).expect("mini-batch mode");
        grads = problem.loss_and_grad_batch(&params, Some(&batch))?.1;
    }

    let mut records = Vec::with_capacity(steps);
    let mut last_loss = initial_loss;
    for t in 1..=steps {
        let lr = sched.lr_at(t)?;
        let mut update_fro = Vec::with_capacity(groups.len());
        for (idx, group) in groups.iter().enumerate() {
            let fro = opt.step_group(idx, group, &mut params[idx], &grads[idx], lr)?;
            update_fro.push(fro);
        }
        let batch = batch_for(t + 1);
        let (loss, next_grads) = match (&batching, batch) {
            (Batching::Full, _) => problem.loss_and_grad(&params)?,
            (Batching::FixedPermutation(_), Some(b)) => {
                // report the full-batch loss; step with the batch gradient
                let (full_loss, _) = problem.loss_and_grad(&params)?;
                let (_, g) = problem.loss_and_grad_batch(&params, Some(&b))?;
                (full_loss, g)
            }
            _ => unreachable!(),
        };
        if !loss.is_finite() || loss > DIVERGENCE_FACTOR * initial_loss.max(f64::MIN_POSITIVE) {
            return Err(Error::Divergence { step: t, loss });
        }
        records.push(StepRecord {
            step: t,
            lr,
            loss,
            update_fro,
        });
        last_loss = loss;
        grads = next_grads;
    }

    Ok(RunRecord {
        meta: RunMeta {
            problem: problem.spec.encode(),
            seed: problem.seed,
            optimizer: opt.kind().encode(),
            base_lr: sched.base_lr,
            total_steps: sched.total_steps,
            warmup_frac: sched.warmup_frac,
            steps,
            groups: groups
                .iter()
                .map(|g| (g.name.clone(), g.group_scale))
                .collect(),
            batching: batching.encode(),
        },
        initial_loss,
        steps: records,
        final_loss: last_loss,
        wall_time_s: start.elapsed().as_secs_f64(),
        state_bytes: opt.state_memory_bytes(groups),
    })
}

/// One optimizer's summary line in a comparison table.
#[derive(Debug, Clone, PartialEq)]
pub struct CompareRow {
    pub optimizer: String,
    pub final_loss: f64,
    /// Trapezoidal area under the loss curve over steps `0..=S`.
    pub loss_auc: f64,
    /// First step whose loss is at most a tenth of the initial loss.
    pub steps_to_tenth: Option<usize>,
    pub state_bytes: u64,
}

/// Raw-number comparison of runs over one problem; no ranking semantics.
#[derive(Debug, Clone)]
pub struct CompareTable {
    pub problem: String,
    pub steps: usize,
    pub rows: Vec<CompareRow>,
}

impl CompareTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("optimizer,final_loss,loss_auc,steps_to_tenth,state_bytes\n");
        for row in &self.rows {
            let reached = row
                .steps_to_tenth
                .map(|s| s.to_string())
                .unwrap_or_else(|| "-".into());
            out.push_str(&format!(
                "{},{:.16e},{:.16e},{},{}\n",
                row.optimizer, row.final_loss, row.loss_auc, reached, row.state_bytes
            ));
        }
        out
    }
}

impl core::fmt::Display for CompareTable {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        writeln!(f, "problem: {} ({} steps)", self.problem, self.steps)?;
        writeln!(
            f,
            "{:<28} {:>14} {:>14} {:>14} {:>12}",
            "optimizer", "final_loss", "loss_auc", "steps_to_10%", "state_bytes"
        )?;
        for row in &self.rows {
            let reached = row
                .steps_to_tenth
                .map(|s| s.to_string())
                .unwrap_or_else(|| "-".into());
            writeln!(
                f,
                "{:<28} {:>14.6e} {:>14.6e} {:>14} {:>12}",
                row.optimizer, row.final_loss, row.loss_auc, reached, row.state_bytes
            )?;
        }
        Ok(())
    }
}

/// Summarizes runs that share a problem and step count.
pub fn compare_runs(records: &[&RunRecord]) -> Result<CompareTable> {
    let first = records.first().ok_or_else(|| Error::Config {
        what: "compare_runs needs at least one record".into(),
    })?;
    for r in records {
        if r.meta.problem != first.meta.problem || r.meta.steps != first.meta.steps {
            return Err(Error::Config {
                what: format!(
                    "records do not share problem/steps: {} ({} steps) vs {} ({} steps)",
                    first.meta.problem, first.meta.steps, r.meta.problem, r.meta.steps
                ),
            });
        }
    }
    let rows = records
        .iter()
        .map(|r| {
            let mut losses = Vec::with_capacity(r.steps.len() + 1);
            losses.push(r.initial_loss);
            losses.extend(r.steps.iter().map(|s| s.loss));
            let auc = if losses.len() < 2 {
                r.initial_loss
            } else {
                let mut acc = 0.0;
                for w in losses.windows(2) {
                    acc += 0.5 * (w[0] + w[1]);
                }
                acc
            };
            let threshold = 0.1 * r.initial_loss;
            let steps_to_tenth = r
                .steps
                .iter()
                .find(|s| s.loss <= threshold)
                .map(|s| s.step);
            CompareRow {
                optimizer: r.meta.optimizer.clone(),
                final_loss: r.final_loss,
                loss_auc: auc,
                steps_to_tenth,
                state_bytes: r.state_bytes,
            }
        })
        .collect();
    Ok(CompareTable {
        problem: first.meta.problem.clone(),
        steps: first.meta.steps,
        rows,
    })
}

/// Central finite-difference gradient of the batch loss with step `h`,
/// as an independent oracle for the analytic gradients.
pub fn finite_difference_grad(
    problem: &Problem,
    params: &[DenseMatrix],
    group: usize,
    h: f64,
) -> Result<DenseMatrix> {
    let (rows, cols) = params[group].shape();
    let mut grad = DenseMatrix::zeros(rows, cols);
    let mut work: Vec<DenseMatrix> = params.to_vec();
    for i in 0..rows {
        for j in 0..cols {
            let orig = work[group].get(i, j);
            work[group].set(i, j, orig + h);
            let (plus, _) = problem.loss_and_grad(&work)?;
            work[group].set(i, j, orig - h);
            let (minus, _) = problem.loss_and_grad(&work)?;
            work[group].set(i, j, orig);
            grad.set(i, j, (plus - minus) / (2.0 * h));
        }
    }
    Ok(grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optim::{AdamHyper, OptimizerKind};

    fn quick_schedule(total: usize) -> Schedule {
        Schedule::new(0.01, total, 0.10).unwrap()
    }

    #[test]
    fn generation_is_deterministic_and_seed_sensitive() {
        let spec = ProblemSpec::MatrixFactorization { m: 6, n: 5, rank: 2 };
        let a = gen_problem(spec, 7).unwrap();
        let b = gen_problem(spec, 7).unwrap();
        let c = gen_problem(spec, 8).unwrap();
        match (&a.data, &b.data, &c.data) {
            (
                ProblemData::Mf { target: ta, .. },
                ProblemData::Mf { target: tb, .. },
                ProblemData::Mf { target: tc, .. },
            ) => {
                assert_eq!(ta, tb);
                assert_ne!(ta, tc);
            }
            _ => unreachable!(),
        }
        assert_eq!(a.initial_params(), b.initial_params());
    }

    #[test]
    fn invalid_dims_are_config_errors() {
        assert!(matches!(
            gen_problem(ProblemSpec::MatrixFactorization { m: 4, n: 4, rank: 9 }, 1),
            Err(Error::Config { .. })
        ));
        assert!(matches!(
            gen_problem(ProblemSpec::LogisticRegression { dim: 1, samples: 5 }, 1),
            Err(Error::Config { .. })
        ));
    }

    #[test]
    fn planted_factors_give_zero_loss_and_gradients() {
        let problem =
            gen_problem(ProblemSpec::MatrixFactorization { m: 8, n: 6, rank: 3 }, 11).unwrap();
        let planted = problem.planted_params().unwrap();
        let (loss, grads) = problem.loss_and_grad(&planted).unwrap();
        assert!(loss < 1e-24);
        for g in grads {
            assert!(g.frobenius_norm() < 1e-12);
        }
    }

    #[test]
    fn full_rank_plant_is_constructible() {
        let problem =
            gen_problem(ProblemSpec::MatrixFactorization { m: 4, n: 4, rank: 4 }, 3).unwrap();
        assert!(problem.planted_params().is_some());
    }

    #[test]
    fn logistic_loss_at_zero_is_ln_two() {
        let problem = gen_problem(ProblemSpec::logistic_preset(), 5).unwrap();
        let zero = vec![DenseMatrix::zeros(2, 20)];
        let (loss, _) = problem.loss_and_grad(&zero).unwrap();
        assert!((loss - 2.0_f64.ln()).abs() < 1e-12, "loss {loss}");
    }

    #[test]
    fn logistic_data_respects_the_margin() {
        let problem = gen_problem(ProblemSpec::logistic_preset(), 5).unwrap();
        match &problem.data {
            ProblemData::Logistic { x, labels } => {
                assert_eq!(x.rows(), 200);
                assert_eq!(labels.len(), 200);
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let problems = [
            gen_problem(ProblemSpec::MatrixFactorization { m: 5, n: 4, rank: 2 }, 31).unwrap(),
            gen_problem(ProblemSpec::LogisticRegression { dim: 4, samples: 12 }, 32).unwrap(),
            gen_problem(
                ProblemSpec::Mlp2 {
                    input: 3,
                    hidden: 4,
                    output: 2,
                    samples: 10,
                },
                33,
            )
            .unwrap(),
        ];
        for problem in &problems {
            let params = problem.initial_params();
            let (_, grads) = problem.loss_and_grad(&params).unwrap();
            for (g, analytic) in grads.iter().enumerate() {
                let fd = finite_difference_grad(problem, &params, g, 1e-5).unwrap();
                let rel = fd.sub(analytic).unwrap().frobenius_norm()
                    / analytic.frobenius_norm().max(1e-12);
                assert!(
                    rel <= 1e-5,
                    "{}: group {g} fd mismatch {rel:e}",
                    problem.spec.encode()
                );
            }
        }
    }

    #[test]
    fn zero_steps_records_initial_loss_only() {
        let problem = gen_problem(ProblemSpec::logistic_preset(), 5).unwrap();
        let groups = problem.make_groups(1.0).unwrap();
        let mut opt = OptimizerInstance::new(OptimizerKind::Sgd);
        let record = run_training(
            &problem,
            &mut opt,
            &quick_schedule(10),
            0,
            &groups,
            Batching::Full,
        )
        .unwrap();
        assert!(record.steps.is_empty());
        assert_eq!(record.final_loss, record.initial_loss);
        let csv = record.to_csv();
        assert_eq!(csv.lines().count(), 2);
        assert!(csv.starts_with("step,lr,loss,update_fro_w\n0,"));
    }

    #[test]
    fn sgd_descends_on_the_convex_logistic_problem() {
        let problem = gen_problem(ProblemSpec::logistic_preset(), 5).unwrap();
        let groups = problem.make_groups(1.0).unwrap();
        let mut opt = OptimizerInstance::new(OptimizerKind::Sgd);
        // constant-rate regime: tiny warmup then a flat-ish cosine start
        let sched = Schedule::new(0.01, 4000, 0.01).unwrap();
        let record =
            run_training(&problem, &mut opt, &sched, 400, &groups, Batching::Full).unwrap();
        let mut losses = vec![record.initial_loss];
        losses.extend(record.steps.iter().map(|s| s.loss));
        for w in losses.windows(2) {
            assert!(w[1] < w[0], "loss not strictly decreasing: {w:?}");
        }
    }

    #[test]
    fn identical_configs_reproduce_csv_bytes() {
        let problem = gen_problem(ProblemSpec::factorization_preset(), 40).unwrap();
        let groups = problem.make_groups(0.05).unwrap();
        let sched = Schedule::new(0.02, 100, 0.10).unwrap();
        let run = |_| {
            let mut opt = OptimizerInstance::new(OptimizerKind::SinkGd { iterations: 5 });
            run_training(&problem, &mut opt, &sched, 50, &groups, Batching::Full)
                .unwrap()
                .to_csv()
        };
        assert_eq!(run(0), run(1));
    }

    #[test]
    fn divergent_run_aborts_with_the_failing_step() {
        let problem = gen_problem(
            ProblemSpec::Mlp2 {
                input: 4,
                hidden: 6,
                output: 2,
                samples: 16,
            },
            9,
        )
        .unwrap();
        let groups = problem.make_groups(1.0).unwrap();
        let mut opt = OptimizerInstance::new(OptimizerKind::Sgd);
        let sched = Schedule::new(1e3, 200, 0.0).unwrap();
        let err = run_training(&problem, &mut opt, &sched, 200, &groups, Batching::Full)
            .unwrap_err();
        match err {
            Error::Divergence { step, .. } => assert!(step >= 1),
            other => panic!("expected divergence, got {other}"),
        }
    }

    #[test]
    fn interleaved_stateless_runs_match_isolated_ones() {
        let problem = gen_problem(ProblemSpec::factorization_preset(), 12).unwrap();
        let groups = problem.make_groups(0.05).unwrap();
        let sched = Schedule::new(0.02, 50, 0.10).unwrap();
        // two interleaved SinkGD runs stepped by hand
        let mut opt_a = OptimizerInstance::new(OptimizerKind::SinkGd { iterations: 3 });
        let mut opt_b = OptimizerInstance::new(OptimizerKind::SinkGd { iterations: 3 });
        let mut pa = problem.initial_params();
        let mut pb = problem.initial_params();
        for t in 1..=20 {
            let lr = sched.lr_at(t).unwrap();
            let (_, ga) = problem.loss_and_grad(&pa).unwrap();
            for (idx, group) in groups.iter().enumerate() {
                opt_a.step_group(idx, group, &mut pa[idx], &ga[idx], lr).unwrap();
            }
            let (_, gb) = problem.loss_and_grad(&pb).unwrap();
            for (idx, group) in groups.iter().enumerate() {
                opt_b.step_group(idx, group, &mut pb[idx], &gb[idx], lr).unwrap();
            }
        }
        // isolated run
        let mut opt_c = OptimizerInstance::new(OptimizerKind::SinkGd { iterations: 3 });
        let mut pc = problem.initial_params();
        for t in 1..=20 {
            let lr = sched.lr_at(t).unwrap();
            let (_, gc) = problem.loss_and_grad(&pc).unwrap();
            for (idx, group) in groups.iter().enumerate() {
                opt_c.step_group(idx, group, &mut pc[idx], &gc[idx], lr).unwrap();
            }
        }
        assert_eq!(pa, pc);
        assert_eq!(pb, pc);
    }

    #[test]
    fn compare_runs_reports_memory_difference() {
        let problem = gen_problem(ProblemSpec::factorization_preset(), 21).unwrap();
        let sched = Schedule::new(0.02, 100, 0.10).unwrap();
        let sink_groups = problem.make_groups(0.05).unwrap();
        let adam_groups = problem.make_groups(1.0).unwrap();
        let mut sink = OptimizerInstance::new(OptimizerKind::SinkGd { iterations: 5 });
        let mut adam = OptimizerInstance::new(OptimizerKind::Adam(AdamHyper::default()));
        let ra =
            run_training(&problem, &mut sink, &sched, 30, &sink_groups, Batching::Full).unwrap();
        let rb =
            run_training(&problem, &mut adam, &sched, 30, &adam_groups, Batching::Full).unwrap();
        let table = compare_runs(&[&ra, &rb]).unwrap();
        assert_eq!(table.rows.len(), 2);
        assert_eq!(table.rows[0].state_bytes, 0);
        // 2 * (64*4 + 4*64) elements * 8 bytes
        assert_eq!(table.rows[1].state_bytes, 2 * 512 * 8);
        // identical records produce identical rows
        let table2 = compare_runs(&[&ra, &ra]).unwrap();
        assert_eq!(table2.rows[0], table2.rows[1]);
        // single record is a one-row table
        assert_eq!(compare_runs(&[&ra]).unwrap().rows.len(), 1);
    }

    #[test]
    fn compare_runs_rejects_mismatched_problems() {
        let p1 = gen_problem(ProblemSpec::factorization_preset(), 1).unwrap();
        let p2 = gen_problem(ProblemSpec::logistic_preset(), 1).unwrap();
        let sched = quick_schedule(20);
        let mut o1 = OptimizerInstance::new(OptimizerKind::Sgd);
        let mut o2 = OptimizerInstance::new(OptimizerKind::Sgd);
        let g1 = p1.make_groups(1.0).unwrap();
        let g2 = p2.make_groups(1.0).unwrap();
        let r1 = run_training(&p1, &mut o1, &sched, 5, &g1, Batching::Full).unwrap();
        let r2 = run_training(&p2, &mut o2, &sched, 5, &g2, Batching::Full).unwrap();
        assert!(matches!(
            compare_runs(&[&r1, &r2]),
            Err(Error::Config { .. })
        ));
    }

    #[test]
    fn minibatch_mode_is_deterministic() {
        let problem = gen_problem(ProblemSpec::logistic_preset(), 17).unwrap();
        let groups = problem.make_groups(1.0).unwrap();
        let sched = quick_schedule(100);
        let run = || {
            let mut opt = OptimizerInstance::new(OptimizerKind::Sgd);
            run_training(
                &problem,
                &mut opt,
                &sched,
                40,
                &groups,
                Batching::FixedPermutation(32),
            )
            .unwrap()
            .to_csv()
        };
        assert_eq!(run(), run());
    }
}
