//! Plain-text run configuration: line-oriented `key = value` entries
//! under `[section]` headers, with `#` comments.
//!
//! Parsing is strict: unknown sections or keys are errors naming the
//! line, as are duplicated scalar keys and malformed values. Every
//! default is materialized into the parsed struct, so the echoed text
//! contains the complete effective configuration and `parse(echo(c))`
//! reproduces `c` exactly.

use multinorm_core::dualproj::{BallSpec, DEFAULT_INNER_ITERS, DEFAULT_PD_STEP, DEFAULT_SWEEPS};
use multinorm_core::error::{Error, Result};
use multinorm_core::harness::{Batching, ProblemSpec};
use multinorm_core::norms::{NormKind, NormSpecConfig};
use multinorm_core::optim::{
    sinkhorn_norm_configs, AdamHyper, OptimizerKind, Schedule, DEFAULT_BASE_LR,
    DEFAULT_GROUP_SCALE, DEFAULT_MULTINORM_ITERS, DEFAULT_WARMUP_FRAC,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subcommand {
    Normalize,
    Sinkhorn,
    Convexproj,
    Train,
    Bench,
    Verify,
}

impl Subcommand {
    pub fn parse(token: &str) -> Result<Self> {
        Ok(match token {
            "normalize" => Self::Normalize,
            "sinkhorn" => Self::Sinkhorn,
            "convexproj" => Self::Convexproj,
            "train" => Self::Train,
            "bench" => Self::Bench,
            "verify" => Self::Verify,
            other => {
                return Err(Error::Config {
                    what: format!("unknown subcommand {other:?}"),
                })
            }
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Normalize => "normalize",
            Self::Sinkhorn => "sinkhorn",
            Self::Convexproj => "convexproj",
            Self::Train => "train",
            Self::Bench => "bench",
            Self::Verify => "verify",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemBlock {
    pub spec: ProblemSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerBlock {
    pub kind: String,
    pub l: usize,
    pub alpha: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub norm: NormSpecConfig,
    pub sweeps: usize,
    pub inner: usize,
    pub eta1: f64,
    pub eta2: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleBlock {
    pub base_lr: f64,
    pub total_steps: usize,
    pub warmup_frac: f64,
    pub steps: usize,
    /// `full` or a mini-batch size.
    pub batch: String,
}

impl ScheduleBlock {
    pub fn to_schedule(&self) -> Result<Schedule> {
        Schedule::new(self.base_lr, self.total_steps, self.warmup_frac)
    }

    pub fn batching(&self) -> Result<Batching> {
        if self.batch == "full" {
            return Ok(Batching::Full);
        }
        let size: usize = self.batch.parse().map_err(|_| Error::Config {
            what: format!("batch must be 'full' or a positive size, got {:?}", self.batch),
        })?;
        if size == 0 {
            return Err(Error::Config {
                what: "batch size must be positive".into(),
            });
        }
        Ok(Batching::FixedPermutation(size))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BallConfig {
    pub norm: NormSpecConfig,
    pub radius: f64,
}

impl BallConfig {
    pub fn to_ball(&self) -> Result<BallSpec> {
        // vector balls have no dimension-dependent default scale
        BallSpec::new(self.norm.resolve(1, 1)?, self.radius)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IoBlock {
    pub input: Option<String>,
    pub output_dir: String,
}

/// Fully materialized run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub subcommand: Subcommand,
    pub seed: u64,
    pub verbosity: u32,
    pub problem: ProblemBlock,
    pub optimizer: OptimizerBlock,
    pub schedule: ScheduleBlock,
    pub norms: Vec<NormSpecConfig>,
    pub balls: Vec<BallConfig>,
    pub io: IoBlock,
    pub bench_optimizers: Vec<String>,
}

const MNGD_FAMILY: [&str; 3] = ["swan", "mngd", "sinkgd"];
const ALL_KINDS: [&str; 7] = [
    "adam",
    "sgd",
    "signgd",
    "steepest_descent",
    "swan",
    "mngd",
    "sinkgd",
];

impl RunConfig {
    /// The optimizer instance kind described by the config.
    pub fn optimizer_kind(&self) -> Result<OptimizerKind> {
        kind_from_token(&self.optimizer.kind, &self.optimizer, &self.norms)
    }

    /// One optimizer kind per bench cell.
    pub fn bench_kinds(&self) -> Result<Vec<OptimizerKind>> {
        self.bench_optimizers
            .iter()
            .map(|token| kind_from_token(token, &self.optimizer, &self.norms))
            .collect()
    }

    /// Canonical echo; parsing it reproduces this config.
    pub fn echo(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("subcommand = {}\n", self.subcommand.name()));
        out.push_str(&format!("seed = {}\n", self.seed));
        out.push_str(&format!("verbosity = {}\n", self.verbosity));
        out.push_str("\n[problem]\n");
        match self.problem.spec {
            ProblemSpec::MatrixFactorization { m, n, rank } => {
                out.push_str("kind = matrix_factorization\n");
                out.push_str(&format!("m = {m}\nn = {n}\nrank = {rank}\n"));
            }
            ProblemSpec::LogisticRegression { dim, samples } => {
                out.push_str("kind = logistic_regression\n");
                out.push_str(&format!("dim = {dim}\nsamples = {samples}\n"));
            }
            ProblemSpec::Mlp2 {
                input,
                hidden,
                output,
                samples,
            } => {
                out.push_str("kind = mlp2\n");
                out.push_str(&format!(
                    "input = {input}\nhidden = {hidden}\noutput = {output}\nsamples = {samples}\n"
                ));
            }
        }
        out.push_str("\n[optimizer]\n");
        let o = &self.optimizer;
        out.push_str(&format!("kind = {}\n", o.kind));
        out.push_str(&format!("l = {}\n", o.l));
        out.push_str(&format!("alpha = {}\n", o.alpha));
        out.push_str(&format!("beta1 = {}\n", o.beta1));
        out.push_str(&format!("beta2 = {}\n", o.beta2));
        out.push_str(&format!("epsilon = {}\n", o.epsilon));
        out.push_str(&format!("norm = {}\n", o.norm.encode()));
        out.push_str(&format!("sweeps = {}\n", o.sweeps));
        out.push_str(&format!("inner = {}\n", o.inner));
        out.push_str(&format!("eta1 = {}\n", o.eta1));
        out.push_str(&format!("eta2 = {}\n", o.eta2));
        out.push_str("\n[schedule]\n");
        let s = &self.schedule;
        out.push_str(&format!("base_lr = {}\n", s.base_lr));
        out.push_str(&format!("total_steps = {}\n", s.total_steps));
        out.push_str(&format!("warmup_frac = {}\n", s.warmup_frac));
        out.push_str(&format!("steps = {}\n", s.steps));
        out.push_str(&format!("batch = {}\n", s.batch));
        out.push_str("\n[norms]\n");
        for n in &self.norms {
            out.push_str(&format!("norm = {}\n", n.encode()));
        }
        for b in &self.balls {
            out.push_str(&format!("ball = {} radius={}\n", b.norm.encode(), b.radius));
        }
        out.push_str("\n[io]\n");
        if let Some(input) = &self.io.input {
            out.push_str(&format!("input = {input}\n"));
        }
        out.push_str(&format!("output_dir = {}\n", self.io.output_dir));
        out.push_str("\n[bench]\n");
        out.push_str(&format!(
            "optimizers = {}\n",
            self.bench_optimizers.join(",")
        ));
        out
    }
}

fn kind_from_token(
    token: &str,
    block: &OptimizerBlock,
    norms: &[NormSpecConfig],
) -> Result<OptimizerKind> {
    Ok(match token {
        "adam" => OptimizerKind::Adam(AdamHyper {
            beta1: block.beta1,
            beta2: block.beta2,
            epsilon: block.epsilon,
        }),
        "sgd" => OptimizerKind::Sgd,
        "signgd" => OptimizerKind::SignGd,
        "steepest_descent" => OptimizerKind::SteepestDescent(block.norm),
        "swan" => OptimizerKind::Swan { iterations: block.l },
        "mngd" => OptimizerKind::Mngd {
            norms: norms.to_vec(),
            iterations: block.l,
        },
        "sinkgd" => OptimizerKind::SinkGd { iterations: block.l },
        other => {
            return Err(Error::Config {
                what: format!("unknown optimizer kind {other:?}"),
            })
        }
    })
}

/// One parsed `key = value` occurrence.
struct Entry {
    value: String,
    line: usize,
}

#[derive(Default)]
struct Section {
    // insertion-ordered scalar entries and repeatable entries
    scalars: Vec<(String, Entry)>,
    repeats: Vec<(String, Entry)>,
}

impl Section {
    fn take(&mut self, key: &str) -> Option<Entry> {
        let idx = self.scalars.iter().position(|(k, _)| k == key)?;
        Some(self.scalars.remove(idx).1)
    }

    fn take_repeats(&mut self, key: &str) -> Vec<Entry> {
        let mut out = Vec::new();
        let mut i = 0;
        while i < self.repeats.len() {
            if self.repeats[i].0 == key {
                out.push(self.repeats.remove(i).1);
            } else {
                i += 1;
            }
        }
        out
    }

    fn reject_leftovers(&self, section: &str) -> Result<()> {
        if let Some((key, entry)) = self.scalars.first().or(self.repeats.first()) {
            return Err(Error::Parse {
                line: entry.line,
                what: format!("unknown key {key:?} in section [{section}]"),
            });
        }
        Ok(())
    }
}

fn parse_scalar<T: core::str::FromStr>(entry: &Entry, key: &str) -> Result<T> {
    entry.value.parse().map_err(|_| Error::Parse {
        line: entry.line,
        what: format!("bad value {:?} for key {key:?}", entry.value),
    })
}

fn scalar_or<T: core::str::FromStr>(
    section: &mut Section,
    key: &str,
    default: T,
) -> Result<(T, bool)> {
    match section.take(key) {
        Some(entry) => Ok((parse_scalar(&entry, key)?, true)),
        None => Ok((default, false)),
    }
}

/// Parses config text against the documented grammar, materializing all
/// defaults. `subcommand_hint` is the command named on the command line;
/// a conflicting `subcommand` key in the text is an error.
pub fn parse_config(text: &str, subcommand_hint: Option<Subcommand>) -> Result<RunConfig> {
    const SECTIONS: [&str; 6] = ["", "problem", "optimizer", "schedule", "norms", "io"];
    let repeatable = |section: &str, key: &str| {
        section == "norms" && (key == "norm" || key == "ball")
    };

    let mut sections: std::collections::BTreeMap<String, Section> = Default::default();
    let mut current = String::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let Some(name) = name.strip_suffix(']') else {
                return Err(Error::Parse {
                    line: line_no,
                    what: format!("malformed section header {line:?}"),
                });
            };
            let name = name.trim();
            if !SECTIONS.contains(&name) && name != "bench" {
                return Err(Error::Parse {
                    line: line_no,
                    what: format!("unknown section [{name}]"),
                });
            }
            current = name.to_string();
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Parse {
                line: line_no,
                what: format!("expected 'key = value', got {line:?}"),
            });
        };
        let key = key.trim().to_string();
        let entry = Entry {
            value: value.trim().to_string(),
            line: line_no,
        };
        let section = sections.entry(current.clone()).or_default();
        if repeatable(&current, &key) {
            section.repeats.push((key, entry));
        } else {
            if section.scalars.iter().any(|(k, _)| *k == key) {
                return Err(Error::Parse {
                    line: line_no,
                    what: format!("duplicate key {key:?}"),
                });
            }
            section.scalars.push((key, entry));
        }
    }

    // top level
    let mut top = sections.remove("").unwrap_or_default();
    let subcommand = match (top.take("subcommand"), subcommand_hint) {
        (Some(entry), Some(hint)) => {
            let named = Subcommand::parse(&entry.value).map_err(|e| Error::Parse {
                line: entry.line,
                what: e.to_string(),
            })?;
            if named != hint {
                return Err(Error::Parse {
                    line: entry.line,
                    what: format!(
                        "config names subcommand {:?} but {:?} was invoked",
                        named.name(),
                        hint.name()
                    ),
                });
            }
            named
        }
        (Some(entry), None) => Subcommand::parse(&entry.value).map_err(|e| Error::Parse {
            line: entry.line,
            what: e.to_string(),
        })?,
        (None, Some(hint)) => hint,
        (None, None) => {
            return Err(Error::Config {
                what: "no subcommand given on the command line or in the config".into(),
            })
        }
    };
    let (seed, _) = scalar_or(&mut top, "seed", 42u64)?;
    let (verbosity, _) = scalar_or(&mut top, "verbosity", 0u32)?;
    top.reject_leftovers("")?;

    // [problem]
    let mut problem = sections.remove("problem").unwrap_or_default();
    let (kind, _) = scalar_or(&mut problem, "kind", "matrix_factorization".to_string())?;
    let spec = match kind.as_str() {
        "matrix_factorization" => {
            let (m, _) = scalar_or(&mut problem, "m", 64usize)?;
            let (n, _) = scalar_or(&mut problem, "n", 64usize)?;
            let (rank, _) = scalar_or(&mut problem, "rank", 4usize)?;
            ProblemSpec::MatrixFactorization { m, n, rank }
        }
        "logistic_regression" => {
            let (dim, _) = scalar_or(&mut problem, "dim", 20usize)?;
            let (samples, _) = scalar_or(&mut problem, "samples", 200usize)?;
            ProblemSpec::LogisticRegression { dim, samples }
        }
        "mlp2" => {
            let (input, _) = scalar_or(&mut problem, "input", 16usize)?;
            let (hidden, _) = scalar_or(&mut problem, "hidden", 16usize)?;
            let (output, _) = scalar_or(&mut problem, "output", 4usize)?;
            let (samples, _) = scalar_or(&mut problem, "samples", 64usize)?;
            ProblemSpec::Mlp2 {
                input,
                hidden,
                output,
                samples,
            }
        }
        other => {
            return Err(Error::Config {
                what: format!("unknown problem kind {other:?}"),
            })
        }
    };
    problem.reject_leftovers("problem")?;

    // [optimizer]
    let mut opt = sections.remove("optimizer").unwrap_or_default();
    let (opt_kind, _) = scalar_or(&mut opt, "kind", "sinkgd".to_string())?;
    if !ALL_KINDS.contains(&opt_kind.as_str()) {
        return Err(Error::Config {
            what: format!("unknown optimizer kind {opt_kind:?}"),
        });
    }
    let (l, _) = scalar_or(&mut opt, "l", DEFAULT_MULTINORM_ITERS)?;
    let default_alpha = if MNGD_FAMILY.contains(&opt_kind.as_str()) {
        DEFAULT_GROUP_SCALE
    } else {
        1.0
    };
    let (alpha, _) = scalar_or(&mut opt, "alpha", default_alpha)?;
    let (beta1, _) = scalar_or(&mut opt, "beta1", 0.9f64)?;
    let (beta2, _) = scalar_or(&mut opt, "beta2", 0.999f64)?;
    let (epsilon, _) = scalar_or(&mut opt, "epsilon", 1e-8f64)?;
    let norm = match opt.take("norm") {
        Some(entry) => NormSpecConfig::parse(&entry.value).map_err(|e| Error::Parse {
            line: entry.line,
            what: e.to_string(),
        })?,
        None => NormSpecConfig {
            kind: NormKind::VectorLp(2.0),
            scale: None,
        },
    };
    let (sweeps, _) = scalar_or(&mut opt, "sweeps", DEFAULT_SWEEPS)?;
    let (inner, _) = scalar_or(&mut opt, "inner", DEFAULT_INNER_ITERS)?;
    let (eta1, _) = scalar_or(&mut opt, "eta1", DEFAULT_PD_STEP)?;
    let (eta2, _) = scalar_or(&mut opt, "eta2", DEFAULT_PD_STEP)?;
    opt.reject_leftovers("optimizer")?;
    let optimizer = OptimizerBlock {
        kind: opt_kind,
        l,
        alpha,
        beta1,
        beta2,
        epsilon,
        norm,
        sweeps,
        inner,
        eta1,
        eta2,
    };

    // [schedule]
    let mut sched = sections.remove("schedule").unwrap_or_default();
    let (base_lr, _) = scalar_or(&mut sched, "base_lr", DEFAULT_BASE_LR)?;
    let (total_steps, _) = scalar_or(&mut sched, "total_steps", 2000usize)?;
    let (steps, _) = scalar_or(&mut sched, "steps", total_steps)?;
    let (warmup_frac, _) = scalar_or(&mut sched, "warmup_frac", DEFAULT_WARMUP_FRAC)?;
    let (batch, _) = scalar_or(&mut sched, "batch", "full".to_string())?;
    sched.reject_leftovers("schedule")?;
    let schedule = ScheduleBlock {
        base_lr,
        total_steps,
        warmup_frac,
        steps,
        batch,
    };
    schedule.batching().map_err(|e| Error::Config {
        what: e.to_string(),
    })?;

    // [norms]
    let mut norms_section = sections.remove("norms").unwrap_or_default();
    let mut norms = Vec::new();
    for entry in norms_section.take_repeats("norm") {
        norms.push(NormSpecConfig::parse(&entry.value).map_err(|e| Error::Parse {
            line: entry.line,
            what: e.to_string(),
        })?);
    }
    if norms.is_empty() {
        norms = sinkhorn_norm_configs().to_vec();
    }
    let mut balls = Vec::new();
    for entry in norms_section.take_repeats("ball") {
        let mut parts = entry.value.split_whitespace();
        let norm_token = parts.next().ok_or(Error::Parse {
            line: entry.line,
            what: "empty ball entry".into(),
        })?;
        let norm = NormSpecConfig::parse(norm_token).map_err(|e| Error::Parse {
            line: entry.line,
            what: e.to_string(),
        })?;
        let mut radius = 1.0f64;
        for attr in parts {
            let Some(value) = attr.strip_prefix("radius=") else {
                return Err(Error::Parse {
                    line: entry.line,
                    what: format!("bad ball attribute {attr:?}"),
                });
            };
            radius = value.parse().map_err(|_| Error::Parse {
                line: entry.line,
                what: format!("bad radius {value:?}"),
            })?;
        }
        balls.push(BallConfig { norm, radius });
    }
    if balls.is_empty() {
        balls = vec![
            BallConfig {
                norm: NormSpecConfig {
                    kind: NormKind::VectorLp(f64::INFINITY),
                    scale: None,
                },
                radius: 1.0,
            },
            BallConfig {
                norm: NormSpecConfig {
                    kind: NormKind::VectorLp(2.0),
                    scale: None,
                },
                radius: 1.0,
            },
        ];
    }
    norms_section.reject_leftovers("norms")?;

    // [io]
    let mut io = sections.remove("io").unwrap_or_default();
    let input = io.take("input").map(|e| e.value);
    let (output_dir, _) = scalar_or(&mut io, "output_dir", "out".to_string())?;
    io.reject_leftovers("io")?;

    // [bench]
    let mut bench = sections.remove("bench").unwrap_or_default();
    let (optimizers, _) = scalar_or(
        &mut bench,
        "optimizers",
        "adam,sgd,signgd,steepest_descent,swan,mngd,sinkgd".to_string(),
    )?;
    bench.reject_leftovers("bench")?;
    let bench_optimizers: Vec<String> = optimizers
        .split(',')
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect();
    for token in &bench_optimizers {
        if !ALL_KINDS.contains(&token.as_str()) {
            return Err(Error::Config {
                what: format!("unknown optimizer kind {token:?} in bench list"),
            });
        }
    }

    if let Some((name, section)) = sections.iter().next() {
        if let Some((key, entry)) = section.scalars.first().or(section.repeats.first()) {
            return Err(Error::Parse {
                line: entry.line,
                what: format!("unknown key {key:?} in section [{name}]"),
            });
        }
    }

    Ok(RunConfig {
        subcommand,
        seed,
        verbosity,
        problem: ProblemBlock { spec },
        optimizer,
        schedule,
        norms,
        balls,
        io: IoBlock { input, output_dir },
        bench_optimizers,
    })
}
