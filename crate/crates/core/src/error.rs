use core::fmt;

/// Errors raised by the numeric kernels, projections, solvers, and the
/// training harness. Variants map onto the CLI exit-code classes: config
/// and usage problems, numeric/degenerate inputs, and training divergence.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Shape mismatch between two operands; names both shapes.
    Dim {
        op: &'static str,
        lhs: (usize, usize),
        rhs: (usize, usize),
    },
    /// A value that must be finite was NaN or infinite.
    NonFinite { what: String },
    /// Rank-deficient input where an inverse square root is required.
    Singular { what: String },
    /// Zero row/column/vector rejected by a projection in strict mode.
    Degenerate { what: String },
    /// Input outside the mathematical domain (e.g. nonpositive entries
    /// where strict positivity is required).
    Domain { what: String },
    /// Norm kind applied to an operand of the wrong arity.
    Arity {
        spec: String,
        expected: &'static str,
    },
    /// A norm without a constant-`l2` projection was used where one is
    /// required.
    AssumptionViolated { what: String },
    /// Inconsistent or unsupported configuration.
    Config { what: String },
    /// Argument outside its documented range.
    Range { what: String },
    /// Training loss became non-finite or exploded at the named step.
    Divergence { step: usize, loss: f64 },
    /// Text-format parse failure with a 1-based line number.
    Parse { line: usize, what: String },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Dim { op, lhs, rhs } => write!(
                f,
                "{op}: incompatible shapes {}x{} and {}x{}",
                lhs.0, lhs.1, rhs.0, rhs.1
            ),
            Self::NonFinite { what } => write!(f, "non-finite value in {what}"),
            Self::Singular { what } => write!(f, "singular input: {what}"),
            Self::Degenerate { what } => write!(f, "degenerate input: {what}"),
            Self::Domain { what } => write!(f, "domain error: {what}"),
            Self::Arity { spec, expected } => {
                write!(f, "norm {spec} expects {expected} operand")
            }
            Self::AssumptionViolated { what } => {
                write!(f, "constant-projection assumption violated: {what}")
            }
            Self::Config { what } => write!(f, "configuration error: {what}"),
            Self::Range { what } => write!(f, "out of range: {what}"),
            Self::Divergence { step, loss } => {
                write!(f, "training diverged at step {step} (loss {loss:e})")
            }
            Self::Parse { line, what } => write!(f, "parse error at line {line}: {what}"),
        }
    }
}

impl std::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
