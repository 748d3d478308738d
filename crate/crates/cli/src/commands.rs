//! Subcommand implementations over the library. Every run writes its
//! echoed config next to its outputs.

use crate::config::{parse_config, RunConfig, Subcommand};
use multinorm_core::dualproj::{coordinate_dual_descent, recover_primal};
use multinorm_core::error::{Error, Result};
use multinorm_core::harness::{compare_runs, gen_problem, run_training, RunRecord};
use multinorm_core::matrix::{DenseMatrix, Vector};
use multinorm_core::multinorm::{fixed_point_residual, multi_normalize};
use multinorm_core::norms::{Mode, NormSpec};
use multinorm_core::optim::OptimizerInstance;
use multinorm_core::sinkhorn::convergence_rate_estimate;
use multinorm_core::verify;
use std::fs;
use std::path::{Path, PathBuf};

const MNGD_FAMILY: [&str; 3] = ["swan", "mngd", "sinkgd"];

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::Config {
            what: format!("cannot create {}: {e}", parent.display()),
        })?;
    }
    fs::write(path, contents).map_err(|e| Error::Config {
        what: format!("cannot write {}: {e}", path.display()),
    })
}

fn read_matrix(config: &RunConfig) -> Result<DenseMatrix> {
    let Some(input) = &config.io.input else {
        return Err(Error::Config {
            what: "this subcommand requires io.input".into(),
        });
    };
    let text = fs::read_to_string(input).map_err(|e| Error::Config {
        what: format!("cannot read {input}: {e}"),
    })?;
    DenseMatrix::parse_text(&text)
}

fn out_dir(config: &RunConfig) -> PathBuf {
    PathBuf::from(&config.io.output_dir)
}

fn write_echo(config: &RunConfig, dir: &Path) -> Result<()> {
    write_file(&dir.join("config.echo.txt"), &config.echo())
}

pub fn run(config: &RunConfig) -> Result<i32> {
    match config.subcommand {
        Subcommand::Normalize => cmd_normalize(config),
        Subcommand::Sinkhorn => cmd_sinkhorn(config),
        Subcommand::Convexproj => cmd_convexproj(config),
        Subcommand::Train => cmd_train(config),
        Subcommand::Bench => cmd_bench(config),
        Subcommand::Verify => cmd_verify(config),
    }
}

fn cmd_normalize(config: &RunConfig) -> Result<i32> {
    let x = read_matrix(config)?;
    let specs: Vec<NormSpec> = config
        .norms
        .iter()
        .map(|c| c.resolve(x.rows(), x.cols()))
        .collect::<Result<_>>()?;
    let iterations = config.optimizer.l;
    let keep = config.verbosity >= 1;
    let (result, report) = multi_normalize(&x, &specs, iterations, Mode::Strict, keep)?;
    let dir = out_dir(config);
    write_echo(config, &dir)?;
    write_file(&dir.join("result.mat"), &result.to_text())?;

    let k = specs.len();
    let mut csv = String::from("iter,inner_product,l2_norm,residual\n");
    for cycle in 1..=iterations {
        let inner = if cycle * k >= 2 {
            format!("{:.16e}", report.inner_products[cycle * k - 2])
        } else {
            "-".into()
        };
        csv.push_str(&format!(
            "{cycle},{inner},{:.16e},{:.16e}\n",
            report.l2_norms[cycle * k],
            report.residuals[cycle - 1]
        ));
    }
    write_file(&dir.join("diagnostics.csv"), &csv)?;
    if let Some(iterates) = &report.iterates {
        for (i, m) in iterates.iter().enumerate() {
            write_file(&dir.join(format!("iterates/iter_{i:04}.mat")), &m.to_text())?;
        }
    }
    println!(
        "normalize: {} cycles over {} norms, final residual {:.3e}",
        iterations, k, report.final_residual
    );
    println!("wrote {}", dir.join("result.mat").display());
    Ok(0)
}

fn cmd_sinkhorn(config: &RunConfig) -> Result<i32> {
    let grad = read_matrix(config)?;
    let (m, n) = grad.shape();
    let iterations = config.optimizer.l;
    let row_spec = NormSpec::row_l2_max(n);
    let col_spec = NormSpec::col_l2_max(m);
    let sn = (n as f64).sqrt();
    let sm = (m as f64).sqrt();
    // Hilbert-metric errors exist only for strictly nonzero inputs
    let hilbert: Option<Vec<f64>> = if grad.as_slice().iter().all(|&v| v != 0.0) {
        Some(convergence_rate_estimate(&grad, iterations)?)
    } else {
        None
    };
    let mut x = grad.clone();
    let mut csv = String::from("k,row_residual,col_residual,hilbert_error\n");
    for k in 1..=iterations {
        x = row_spec.project(&x, Mode::Strict)?;
        x = col_spec.project(&x, Mode::Strict)?;
        let row_res = x
            .row_l2_norms()
            .as_slice()
            .iter()
            .fold(0.0_f64, |a, &r| a.max((r - sn).abs()));
        let col_res = x
            .col_l2_norms()
            .as_slice()
            .iter()
            .fold(0.0_f64, |a, &c| a.max((c - sm).abs()));
        let h = match &hilbert {
            Some(errs) => format!("{:.16e}", errs[k - 1]),
            None => "-".into(),
        };
        csv.push_str(&format!("{k},{row_res:.16e},{col_res:.16e},{h}\n"));
    }
    let dir = out_dir(config);
    write_echo(config, &dir)?;
    write_file(&dir.join("result.mat"), &x.to_text())?;
    write_file(&dir.join("diagnostics.csv"), &csv)?;
    let resid = fixed_point_residual(
        &x,
        &[NormSpec::row_l2_max(n), NormSpec::col_l2_max(m)],
        Mode::Strict,
    )?;
    println!("sinkhorn: {iterations} iterations, fixed-point residual {resid:.3e}");
    println!("wrote {}", dir.join("result.mat").display());
    Ok(0)
}

fn cmd_convexproj(config: &RunConfig) -> Result<i32> {
    let raw = read_matrix(config)?;
    if raw.rows() != 1 && raw.cols() != 1 {
        return Err(Error::Config {
            what: format!(
                "convexproj expects a vector (1xd or dx1 matrix), got {}x{}",
                raw.rows(),
                raw.cols()
            ),
        });
    }
    let grad = Vector::from_slice(raw.as_slice())?;
    let balls = config
        .balls
        .iter()
        .map(|b| b.to_ball())
        .collect::<Result<Vec<_>>>()?;
    let dir = out_dir(config);
    write_echo(config, &dir)?;

    let fmt_vec = |v: &Vector| {
        let entries: Vec<String> = v.as_slice().iter().map(|x| format!("{x:.16e}")).collect();
        format!("[{}]", entries.join(", "))
    };

    let mut out = String::from("{\n");
    let (z, report_lines) = if balls.len() == 1 {
        let z = if grad.is_zero() {
            Vector::zeros(grad.len())
        } else {
            recover_primal(&grad, &balls[0])?
        };
        let objective = balls[0].dual_gauge(&grad)?;
        (
            z,
            vec![
                format!("  lambda_1 = {}", fmt_vec(&grad)),
                format!("  dual_objective = {objective:.16e}"),
            ],
        )
    } else {
        let sol = coordinate_dual_descent(
            &grad,
            &balls,
            config.optimizer.sweeps,
            config.optimizer.inner,
        )?;
        let mut lines = Vec::new();
        for (i, l) in sol.lambdas.iter().enumerate() {
            lines.push(format!("  lambda_{} = {}", i + 1, fmt_vec(l)));
        }
        lines.push(format!("  dual_objective = {:.16e}", sol.objective));
        (sol.primal, lines)
    };
    let primal_value = grad.dot(&z)?;
    out.push_str(&format!("  z = {}\n", fmt_vec(&z)));
    for line in &report_lines {
        out.push_str(line);
        out.push('\n');
    }
    out.push_str(&format!("  primal_value = {primal_value:.16e}\n"));
    let sol_obj: f64 = report_lines
        .iter()
        .find_map(|l| l.trim().strip_prefix("dual_objective = "))
        .and_then(|s| s.parse().ok())
        .unwrap_or(f64::NAN);
    let gap = (sol_obj - primal_value).abs() / sol_obj.abs().max(1e-300);
    out.push_str(&format!("  duality_gap_rel = {gap:.16e}\n"));
    out.push_str("}\n");
    write_file(&dir.join("convexproj.txt"), &out)?;
    print!("{out}");
    Ok(0)
}

fn bench_alpha(token: &str) -> f64 {
    if MNGD_FAMILY.contains(&token) {
        multinorm_core::optim::DEFAULT_GROUP_SCALE
    } else {
        1.0
    }
}

fn run_one(
    config: &RunConfig,
    kind: multinorm_core::optim::OptimizerKind,
    alpha: f64,
) -> Result<RunRecord> {
    let problem = gen_problem(config.problem.spec, config.seed)?;
    let groups = problem.make_groups(alpha)?;
    let sched = config.schedule.to_schedule()?;
    let mut opt = OptimizerInstance::new(kind);
    run_training(
        &problem,
        &mut opt,
        &sched,
        config.schedule.steps,
        &groups,
        config.schedule.batching()?,
    )
}

fn cmd_train(config: &RunConfig) -> Result<i32> {
    let record = run_one(config, config.optimizer_kind()?, config.optimizer.alpha)?;
    let dir = out_dir(config);
    write_echo(config, &dir)?;
    write_file(&dir.join("run.csv"), &record.to_csv())?;
    write_file(&dir.join("run.config.txt"), &record.config_lines())?;
    println!(
        "train: {} on {} | initial loss {:.6e} -> final {:.6e} in {} steps ({:.2}s, state {} bytes)",
        record.meta.optimizer,
        record.meta.problem,
        record.initial_loss,
        record.final_loss,
        record.meta.steps,
        record.wall_time_s,
        record.state_bytes
    );
    println!("wrote {}", dir.join("run.csv").display());
    Ok(0)
}

fn cmd_bench(config: &RunConfig) -> Result<i32> {
    let kinds = config.bench_kinds()?;
    let dir = out_dir(config);
    write_echo(config, &dir)?;
    let mut records = Vec::new();
    for (token, kind) in config.bench_optimizers.iter().zip(kinds) {
        let record = run_one(config, kind, bench_alpha(token))?;
        let cell = dir.join("bench").join(token);
        write_file(&cell.join("run.csv"), &record.to_csv())?;
        write_file(&cell.join("run.config.txt"), &record.config_lines())?;
        records.push(record);
    }
    let refs: Vec<&RunRecord> = records.iter().collect();
    let table = compare_runs(&refs)?;
    write_file(&dir.join("bench").join("compare.csv"), &table.to_csv())?;
    print!("{table}");
    Ok(0)
}

fn cmd_verify(_config: &RunConfig) -> Result<i32> {
    let mut results = verify::run_all();
    results.push(config_echo_check());
    let mut failed = 0usize;
    for r in &results {
        let status = if r.passed { "PASS" } else { "FAIL" };
        println!("{status} {} - {}", r.name, r.detail);
        if !r.passed {
            failed += 1;
        }
    }
    println!(
        "verify: {} checks, {} passed, {failed} failed",
        results.len(),
        results.len() - failed
    );
    Ok(if failed > 0 { 4 } else { 0 })
}

/// The CLI's own invariant: parsing an echoed config is a fixed point.
fn config_echo_check() -> verify::CheckResult {
    let sample = "\
subcommand = train
seed = 7

[problem]
kind = logistic_regression
dim = 12

[optimizer]
kind = swan
l = 3

[schedule]
base_lr = 0.01
total_steps = 500
";
    let outcome = (|| -> Result<bool> {
        let cfg = parse_config(sample, None)?;
        let echoed = cfg.echo();
        let reparsed = parse_config(&echoed, None)?;
        Ok(cfg == reparsed && echoed == reparsed.echo())
    })();
    match outcome {
        Ok(true) => verify::CheckResult {
            name: "config-echo-fixed-point",
            passed: true,
            detail: "parse(echo(c)) == c and echo is stable".into(),
        },
        Ok(false) => verify::CheckResult {
            name: "config-echo-fixed-point",
            passed: false,
            detail: "echo round trip changed the config".into(),
        },
        Err(e) => verify::CheckResult {
            name: "config-echo-fixed-point",
            passed: false,
            detail: format!("errored: {e}"),
        },
    }
}
