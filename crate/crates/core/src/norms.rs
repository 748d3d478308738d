//! Norm catalog: evaluation, dual norms, and closed-form normalized
//! projections.
//!
//! The normalized projection of `x` under a norm `g` is the maximizer of
//! `<x, z>` over the unit sphere `{z : g(z) = 1}`. Each norm here is a
//! base norm divided by a positive scale `s`, so the projection is the
//! base-norm projection multiplied by `s`. The three matrix kinds with
//! their conventional scales share one Euclidean length `sqrt(n m)`
//! across all projections, which is what makes the alternating scheme in
//! [`crate::multinorm`] converge.

use crate::error::{Error, Result};
use crate::matrix::{
    jacobi_eigh, newton_schulz_whiten_auto, DenseMatrix, Vector, RANK_TOLERANCE,
};

/// Denominator floor for optimizer-mode projections: a zero gradient row
/// or column maps to a zero update row instead of raising an error.
pub const GUARD_EPS: f64 = 1e-30;

/// Projection behavior on degenerate input (zero rows/columns, rank
/// deficiency).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Degenerate input is an error.
    Strict,
    /// Denominators are floored at [`GUARD_EPS`]; no error is raised.
    Optimizer,
}

/// Which base norm a [`NormSpec`] scales.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormKind {
    /// `max_i ||W_{i,:}||_2`, conventional scale `sqrt(n)`.
    RowL2Max,
    /// `max_j ||W_{:,j}||_2`, conventional scale `sqrt(m)`.
    ColL2Max,
    /// Largest singular value (Schatten-inf), conventional scale
    /// `sqrt(n)`; defined for `m <= n`.
    SpectralMax,
    /// Vector `l_p` norm with exponent `p` in `[1, inf]`.
    VectorLp(f64),
}

/// A norm `g(x) = base(x) / scale` together with its positive scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormSpec {
    kind: NormKind,
    scale: f64,
}

/// The common Euclidean length of all normalized projections under a
/// spec, when the spec has one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionConstant(pub f64);

impl NormSpec {
    pub fn new(kind: NormKind, scale: f64) -> Result<Self> {
        if scale <= 0.0 || !scale.is_finite() {
            return Err(Error::Config {
                what: format!("norm scale must be positive and finite, got {scale}"),
            });
        }
        if let NormKind::VectorLp(p) = kind {
            if p.is_nan() || p < 1.0 {
                return Err(Error::Config {
                    what: format!("lp exponent must satisfy p >= 1, got {p}"),
                });
            }
        }
        Ok(Self { kind, scale })
    }

    /// Row-wise l2-max norm with the conventional `sqrt(n)` scale.
    pub fn row_l2_max(n: usize) -> Self {
        Self {
            kind: NormKind::RowL2Max,
            scale: (n as f64).sqrt(),
        }
    }

    /// Column-wise l2-max norm with the conventional `sqrt(m)` scale.
    pub fn col_l2_max(m: usize) -> Self {
        Self {
            kind: NormKind::ColL2Max,
            scale: (m as f64).sqrt(),
        }
    }

    /// Scaled spectral norm with the conventional `sqrt(n)` scale.
    pub fn spectral_max(n: usize) -> Self {
        Self {
            kind: NormKind::SpectralMax,
            scale: (n as f64).sqrt(),
        }
    }

    /// Unscaled vector `l_p` norm. Use `f64::INFINITY` for the max norm.
    pub fn vector_lp(p: f64) -> Result<Self> {
        Self::new(NormKind::VectorLp(p), 1.0)
    }

    pub fn with_scale(self, scale: f64) -> Result<Self> {
        Self::new(self.kind, scale)
    }

    pub fn kind(&self) -> NormKind {
        self.kind
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn is_matrix_kind(&self) -> bool {
        !matches!(self.kind, NormKind::VectorLp(_))
    }

    fn arity_error(&self, expected: &'static str) -> Error {
        Error::Arity {
            spec: format!("{self}"),
            expected,
        }
    }

    /// `g(X)` for a matrix operand. Zero iff `X = 0`.
    pub fn eval(&self, x: &DenseMatrix) -> Result<f64> {
        match self.kind {
            NormKind::RowL2Max => {
                Ok(x.row_l2_norms().as_slice().iter().fold(0.0_f64, |a, &b| a.max(b)) / self.scale)
            }
            NormKind::ColL2Max => {
                Ok(x.col_l2_norms().as_slice().iter().fold(0.0_f64, |a, &b| a.max(b)) / self.scale)
            }
            NormKind::SpectralMax => {
                require_wide(x, "spectral norm")?;
                let s = x.matmul(&x.transpose())?;
                let (eigs, _) = jacobi_eigh(&s)?;
                let lmax = eigs.iter().fold(0.0_f64, |a, &b| a.max(b));
                Ok(lmax.max(0.0).sqrt() / self.scale)
            }
            NormKind::VectorLp(_) => Err(self.arity_error("vector")),
        }
    }

    /// `g(v)` for a vector operand.
    pub fn eval_vec(&self, v: &Vector) -> Result<f64> {
        match self.kind {
            NormKind::VectorLp(p) => Ok(lp_norm(v.as_slice(), p) / self.scale),
            _ => Err(self.arity_error("matrix")),
        }
    }

    /// Normalized projection for matrix operands: the maximizer of
    /// `<X, Z>` over `{Z : g(Z) = 1}`.
    pub fn project(&self, x: &DenseMatrix, mode: Mode) -> Result<DenseMatrix> {
        match self.kind {
            NormKind::RowL2Max => scale_rows(x, self.scale, mode),
            NormKind::ColL2Max => scale_cols(x, self.scale, mode),
            NormKind::SpectralMax => {
                require_wide(x, "spectral projection")?;
                if x.is_zero() {
                    return match mode {
                        Mode::Strict => Err(Error::Degenerate {
                            what: "spectral projection of the zero matrix".into(),
                        }),
                        Mode::Optimizer => Ok(DenseMatrix::zeros(x.rows(), x.cols())),
                    };
                }
                if mode == Mode::Strict {
                    let s = x.matmul(&x.transpose())?;
                    let (eigs, _) = jacobi_eigh(&s)?;
                    let tol = RANK_TOLERANCE * s.frobenius_norm();
                    if eigs.iter().any(|&l| l < tol) {
                        return Err(Error::Degenerate {
                            what: "rank-deficient input to spectral projection".into(),
                        });
                    }
                }
                Ok(newton_schulz_whiten_auto(x)?.scale(self.scale))
            }
            NormKind::VectorLp(_) => Err(self.arity_error("vector")),
        }
    }

    /// Normalized projection for vector operands. Closed forms exist for
    /// `p` in `{1, 2, inf}`.
    pub fn project_vec(&self, v: &Vector, mode: Mode) -> Result<Vector> {
        let NormKind::VectorLp(p) = self.kind else {
            return Err(self.arity_error("matrix"));
        };
        if v.is_zero() {
            return match mode {
                Mode::Strict => Err(Error::Degenerate {
                    what: "projection of the zero vector".into(),
                }),
                Mode::Optimizer => Ok(Vector::zeros(v.len())),
            };
        }
        let s = self.scale;
        if p == 2.0 {
            let norm = v.l2_norm().max(guard(mode));
            return Ok(v.scale(s / norm));
        }
        if p == 1.0 {
            // all mass on the first coordinate attaining max |v_i|
            let (idx, _) = max_abs_index(v.as_slice());
            let mut out = vec![0.0; v.len()];
            out[idx] = s * v.get(idx).signum();
            return Ok(Vector::from_raw(out));
        }
        if p.is_infinite() {
            // sign vector; zero coordinates stay zero
            return Ok(Vector::from_raw(
                v.as_slice()
                    .iter()
                    .map(|&x| if x == 0.0 { 0.0 } else { s * x.signum() })
                    .collect(),
            ));
        }
        Err(Error::Config {
            what: format!("no closed-form projection for l_{p} norms"),
        })
    }

    /// Dual norm `g*(X) = sup { <X, Z> : g(Z) = 1 }` for matrices.
    pub fn dual_eval(&self, x: &DenseMatrix) -> Result<f64> {
        match self.kind {
            NormKind::RowL2Max => Ok(self.scale * x.row_l2_norms().as_slice().iter().sum::<f64>()),
            NormKind::ColL2Max => Ok(self.scale * x.col_l2_norms().as_slice().iter().sum::<f64>()),
            NormKind::SpectralMax => {
                require_wide(x, "spectral dual norm")?;
                let s = x.matmul(&x.transpose())?;
                let (eigs, _) = jacobi_eigh(&s)?;
                // Schatten-1 norm from the eigenvalues of X X^T
                Ok(self.scale * eigs.iter().map(|&l| l.max(0.0).sqrt()).sum::<f64>())
            }
            NormKind::VectorLp(_) => Err(self.arity_error("vector")),
        }
    }

    /// Dual norm for vectors: `s * ||v||_q` with `1/p + 1/q = 1`.
    pub fn dual_eval_vec(&self, v: &Vector) -> Result<f64> {
        let NormKind::VectorLp(p) = self.kind else {
            return Err(self.arity_error("matrix"));
        };
        Ok(self.scale * lp_norm(v.as_slice(), dual_exponent(p)))
    }

    /// The shared Euclidean length of this spec's projections, when one
    /// exists. For vector kinds, `d = m * n` is the vector length.
    pub fn projection_l2_constant(&self, m: usize, n: usize) -> Result<ProjectionConstant> {
        match self.kind {
            NormKind::RowL2Max => Ok(ProjectionConstant(self.scale * (m as f64).sqrt())),
            NormKind::ColL2Max => Ok(ProjectionConstant(self.scale * (n as f64).sqrt())),
            NormKind::SpectralMax => {
                if m > n {
                    return Err(Error::Dim {
                        op: "spectral projection constant",
                        lhs: (m, n),
                        rhs: (n, m),
                    });
                }
                Ok(ProjectionConstant(self.scale * (m as f64).sqrt()))
            }
            NormKind::VectorLp(p) => {
                let d = (m * n) as f64;
                if p == 2.0 {
                    Ok(ProjectionConstant(self.scale))
                } else if p.is_infinite() {
                    // sign vectors have length sqrt(d) on zero-free input
                    Ok(ProjectionConstant(self.scale * d.sqrt()))
                } else {
                    Err(Error::AssumptionViolated {
                        what: format!(
                            "l_{p} projections do not share one Euclidean length"
                        ),
                    })
                }
            }
        }
    }

    /// Rescales so the projection constant becomes `target`; idempotent
    /// when it already does.
    pub fn rescale(&self, target: f64, m: usize, n: usize) -> Result<NormSpec> {
        if target <= 0.0 || !target.is_finite() {
            return Err(Error::Range {
                what: format!("rescale target must be positive, got {target}"),
            });
        }
        let ProjectionConstant(c) = self.projection_l2_constant(m, n)?;
        Self::new(self.kind, self.scale * (target / c))
    }

    /// Parses the textual encoding, e.g. `row_l2_max`, `vector_lp:p=inf`,
    /// `col_l2_max:scale=1.5`. A missing scale defers to the
    /// conventional scale at [`resolve`](NormSpecConfig::resolve) time.
    pub fn parse_config(text: &str) -> Result<NormSpecConfig> {
        NormSpecConfig::parse(text)
    }
}

impl core::fmt::Display for NormSpec {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self.kind {
            NormKind::RowL2Max => write!(f, "row_l2_max:scale={}", self.scale),
            NormKind::ColL2Max => write!(f, "col_l2_max:scale={}", self.scale),
            NormKind::SpectralMax => write!(f, "spectral_max:scale={}", self.scale),
            NormKind::VectorLp(p) if p.is_infinite() => {
                write!(f, "vector_lp:p=inf,scale={}", self.scale)
            }
            NormKind::VectorLp(p) => write!(f, "vector_lp:p={p},scale={}", self.scale),
        }
    }
}

/// A parsed norm description whose scale may still default to the
/// conventional one for the operand dimensions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormSpecConfig {
    pub kind: NormKind,
    pub scale: Option<f64>,
}

impl NormSpecConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut kind_token = text.trim();
        let mut p: Option<f64> = None;
        let mut scale: Option<f64> = None;
        if let Some((head, tail)) = text.trim().split_once(':') {
            kind_token = head;
            for attr in tail.split(',') {
                let Some((key, value)) = attr.split_once('=') else {
                    return Err(Error::Config {
                        what: format!("bad norm attribute {attr:?} in {text:?}"),
                    });
                };
                match key.trim() {
                    "p" => {
                        let value = value.trim();
                        p = Some(if value == "inf" {
                            f64::INFINITY
                        } else {
                            value.parse().map_err(|_| Error::Config {
                                what: format!("bad exponent {value:?} in {text:?}"),
                            })?
                        });
                    }
                    "scale" => {
                        scale = Some(value.trim().parse().map_err(|_| Error::Config {
                            what: format!("bad scale {value:?} in {text:?}"),
                        })?);
                    }
                    other => {
                        return Err(Error::Config {
                            what: format!("unknown norm attribute {other:?} in {text:?}"),
                        });
                    }
                }
            }
        }
        let kind = match kind_token {
            "row_l2_max" => NormKind::RowL2Max,
            "col_l2_max" => NormKind::ColL2Max,
            "spectral_max" => NormKind::SpectralMax,
            "vector_lp" => NormKind::VectorLp(p.ok_or_else(|| Error::Config {
                what: format!("vector_lp requires p=..., got {text:?}"),
            })?),
            other => {
                return Err(Error::Config {
                    what: format!("unknown norm kind {other:?}"),
                });
            }
        };
        if p.is_some() && !matches!(kind, NormKind::VectorLp(_)) {
            return Err(Error::Config {
                what: format!("p= only applies to vector_lp, got {text:?}"),
            });
        }
        Ok(Self { kind, scale })
    }

    /// Materializes the spec for an `m x n` operand, filling in the
    /// conventional scale when none was given.
    pub fn resolve(&self, m: usize, n: usize) -> Result<NormSpec> {
        let spec = match self.kind {
            NormKind::RowL2Max => NormSpec::row_l2_max(n),
            NormKind::ColL2Max => NormSpec::col_l2_max(m),
            NormKind::SpectralMax => NormSpec::spectral_max(n),
            NormKind::VectorLp(p) => NormSpec::vector_lp(p)?,
        };
        match self.scale {
            Some(s) => spec.with_scale(s),
            None => Ok(spec),
        }
    }

    pub fn encode(&self) -> String {
        let kind = match self.kind {
            NormKind::RowL2Max => "row_l2_max".to_string(),
            NormKind::ColL2Max => "col_l2_max".to_string(),
            NormKind::SpectralMax => "spectral_max".to_string(),
            NormKind::VectorLp(p) if p.is_infinite() => "vector_lp:p=inf".to_string(),
            NormKind::VectorLp(p) => format!("vector_lp:p={p}"),
        };
        match self.scale {
            Some(s) => {
                let sep = if kind.contains(':') { ',' } else { ':' };
                format!("{kind}{sep}scale={s}")
            }
            None => kind,
        }
    }
}

/// The SWAN norm pair for `m x n` gradients with `m <= n`: row-wise
/// l2-max and the scaled spectral norm, both over `sqrt(n)`.
pub fn swan_pair(n: usize) -> [NormSpec; 2] {
    [NormSpec::row_l2_max(n), NormSpec::spectral_max(n)]
}

/// The SinkGD norm pair: row-wise l2-max over `sqrt(n)` and column-wise
/// l2-max over `sqrt(m)`.
pub fn sinkhorn_pair(m: usize, n: usize) -> [NormSpec; 2] {
    [NormSpec::row_l2_max(n), NormSpec::col_l2_max(m)]
}

fn guard(mode: Mode) -> f64 {
    match mode {
        Mode::Strict => 0.0,
        Mode::Optimizer => GUARD_EPS,
    }
}

/// `sqrt(scale) Q(X)^{-1} X`: every row rescaled to l2 norm `scale`.
pub(crate) fn scale_rows(x: &DenseMatrix, scale: f64, mode: Mode) -> Result<DenseMatrix> {
    let norms = x.row_l2_norms();
    if mode == Mode::Strict {
        if let Some(i) = norms.as_slice().iter().position(|&r| r == 0.0) {
            return Err(Error::Degenerate {
                what: format!("row {i} is zero"),
            });
        }
    }
    let mut out = x.clone();
    for i in 0..x.rows() {
        let factor = scale / norms.get(i).max(GUARD_EPS);
        for v in &mut out.as_mut_slice()[i * x.cols()..(i + 1) * x.cols()] {
            *v *= factor;
        }
    }
    Ok(out)
}

/// `sqrt(scale) X R(X)^{-1}`: every column rescaled to l2 norm `scale`.
pub(crate) fn scale_cols(x: &DenseMatrix, scale: f64, mode: Mode) -> Result<DenseMatrix> {
    let norms = x.col_l2_norms();
    if mode == Mode::Strict {
        if let Some(j) = norms.as_slice().iter().position(|&r| r == 0.0) {
            return Err(Error::Degenerate {
                what: format!("column {j} is zero"),
            });
        }
    }
    let factors: Vec<f64> = norms
        .as_slice()
        .iter()
        .map(|&r| scale / r.max(GUARD_EPS))
        .collect();
    let mut out = x.clone();
    let n = x.cols();
    for i in 0..x.rows() {
        for (j, v) in out.as_mut_slice()[i * n..(i + 1) * n].iter_mut().enumerate() {
            *v *= factors[j];
        }
    }
    Ok(out)
}

fn require_wide(x: &DenseMatrix, what: &'static str) -> Result<()> {
    if x.rows() > x.cols() {
        return Err(Error::Dim {
            op: match what {
                "spectral norm" => "spectral norm (requires m <= n)",
                "spectral dual norm" => "spectral dual norm (requires m <= n)",
                _ => "spectral projection (requires m <= n)",
            },
            lhs: x.shape(),
            rhs: (x.cols(), x.rows()),
        });
    }
    Ok(())
}

fn lp_norm(values: &[f64], p: f64) -> f64 {
    if p.is_infinite() {
        values.iter().fold(0.0, |a, v| a.max(v.abs()))
    } else if p == 1.0 {
        values.iter().map(|v| v.abs()).sum()
    } else if p == 2.0 {
        values.iter().map(|v| v * v).sum::<f64>().sqrt()
    } else {
        values
            .iter()
            .map(|v| v.abs().powf(p))
            .sum::<f64>()
            .powf(1.0 / p)
    }
}

fn dual_exponent(p: f64) -> f64 {
    if p == 1.0 {
        f64::INFINITY
    } else if p.is_infinite() {
        1.0
    } else {
        p / (p - 1.0)
    }
}

fn max_abs_index(values: &[f64]) -> (usize, f64) {
    let mut idx = 0;
    let mut best = -1.0;
    for (i, v) in values.iter().enumerate() {
        if v.abs() > best {
            best = v.abs();
            idx = i;
        }
    }
    (idx, best)
}
