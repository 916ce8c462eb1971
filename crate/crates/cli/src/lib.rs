//! Batch front-end: one experiment per config file, results written as CSV plus a
//! `summary.json` next to them.

pub mod config;

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use serde_json::{json, Value};

use varexp::galerkin::{convergence_study, solve_level, ReferenceKind};
use varexp::modular::{luxemburg_norm, modular, sobolev_norm};
use varexp::operator::{check_a1, check_a2, check_a3, KernelSampler};
use varexp::splus::{run_probe, uniform_integrability_profile, SequenceSpec};
use varexp::{BoundaryTag, GalerkinProblem, Mesh, MeshedFunction, ProbeVerdict, QuadratureRule};

pub use config::{Command, ExperimentConfig};

/// Result of a completed run. `passed` is false when the experiment ran but its verdict failed.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub passed: bool,
    pub summary: Value,
    pub artifacts: Vec<PathBuf>,
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    ExperimentConfig::parse(&text).with_context(|| format!("in {}", path.display()))
}

pub fn run(config: &ExperimentConfig, options: &RunOptions) -> Result<Outcome> {
    let out = options.out.clone().unwrap_or_else(|| PathBuf::from(&config.output.dir));
    fs::create_dir_all(&out).with_context(|| format!("cannot create {}", out.display()))?;
    let seed = options.seed.unwrap_or(config.seed);
    let mut ctx = RunContext { out, artifacts: Vec::new() };
    let (passed, details) = match config.command {
        Command::Norm => norm(config, &mut ctx)?,
        Command::CheckKernel => check_kernel(config, seed, &mut ctx)?,
        Command::Solve => solve(config, &mut ctx)?,
        Command::Converge => converge(config, &mut ctx)?,
        Command::SplusProbe => splus_probe(config, &mut ctx)?,
    };
    let summary = json!({
        "command": config.command.name(),
        "seed": seed,
        "passed": passed,
        "results": details,
    });
    let path = ctx.out.join("summary.json");
    fs::write(&path, serde_json::to_string_pretty(&summary)? + "\n")?;
    ctx.artifacts.push(path);
    Ok(Outcome {
        passed,
        summary,
        artifacts: ctx.artifacts,
    })
}

struct RunContext {
    out: PathBuf,
    artifacts: Vec<PathBuf>,
}

impl RunContext {
    fn create(&mut self, name: &str) -> Result<BufWriter<File>> {
        let path = self.out.join(name);
        let file = File::create(&path).with_context(|| format!("cannot write {}", path.display()))?;
        self.artifacts.push(path);
        Ok(BufWriter::new(file))
    }
}

fn rule(config: &ExperimentConfig) -> Result<QuadratureRule<f64>> {
    Ok(QuadratureRule::gauss_legendre(config.mesh.quadrature)?)
}

fn norm(config: &ExperimentConfig, ctx: &mut RunContext) -> Result<(bool, Value)> {
    let p = config.exponent()?;
    let form = config.function.as_ref().context("`norm` needs a [function] section")?;
    let mesh = Arc::new(Mesh::dyadic(config.domain()?, config.mesh.levels));
    let u = MeshedFunction::interpolate(mesh, BoundaryTag::Free, form.function(*p.domain()));
    let rule = rule(config)?;
    let rho = modular(&u, &p, &rule).value();
    let norm = luxemburg_norm(&u, &p, &rule);
    let sobolev = sobolev_norm(&u, &p, &rule);
    let mut w = csv::Writer::from_writer(ctx.create("norm.csv")?);
    w.write_record(["modular", "luxemburg_norm", "sobolev_norm", "bisection_iterations"])?;
    w.write_record([
        format!("{rho:e}"),
        format!("{:e}", norm.value),
        format!("{:e}", sobolev.value),
        norm.iterations.to_string(),
    ])?;
    w.flush()?;
    Ok((
        true,
        json!({ "modular": rho, "norm": norm.value, "sobolev_norm": sobolev.value }),
    ))
}

fn check_kernel(config: &ExperimentConfig, seed: u64, ctx: &mut RunContext) -> Result<(bool, Value)> {
    let p = config.exponent()?;
    let kernel = config.kernel(&p)?;
    let n = config.check.samples;
    let mut sampler = KernelSampler::new(*p.domain(), seed);
    let reports = [
        check_a1(&kernel, &p, &mut sampler, n),
        check_a2(&kernel, &mut sampler, n),
        check_a3(&kernel, &p, &mut sampler, n),
    ];
    let mut w = csv::Writer::from_writer(ctx.create("violations.csv")?);
    w.write_record(["condition", "z", "s", "xi", "xi_prime", "slack"])?;
    let mut counts = serde_json::Map::new();
    for report in &reports {
        for v in &report.violations {
            w.write_record([
                report.condition.to_string(),
                format!("{:e}", v.z),
                format!("{:e}", v.s),
                format!("{:e}", v.xi),
                v.xi_prime.map(|x| format!("{x:e}")).unwrap_or_default(),
                format!("{:e}", v.slack),
            ])?;
        }
        counts.insert(report.condition.to_string(), json!(report.violations.len()));
    }
    w.flush()?;
    let passed = reports.iter().all(|r| r.passed());
    Ok((
        passed,
        json!({ "kernel": kernel.label(), "samples": n, "violations": counts }),
    ))
}

fn problem(config: &ExperimentConfig) -> Result<GalerkinProblem<f64>> {
    let p = config.exponent()?;
    let kernel = config.kernel(&p)?;
    let mut problem = GalerkinProblem::new(p, kernel, config.rhs()?, config.mesh.levels)?
        .with_settings(config.solver.settings())
        .with_rule(rule(config)?);
    if let Some(exact) = config.exact()? {
        problem = problem.with_exact(exact);
    }
    Ok(problem)
}

fn solve(config: &ExperimentConfig, ctx: &mut RunContext) -> Result<(bool, Value)> {
    let problem = problem(config)?;
    let mesh = problem.mesh(problem.levels);
    let (u, stats) = solve_level(&problem, &mesh, None)?;
    u.write_csv(ctx.create("solution.csv")?)?;
    Ok((
        true,
        json!({
            "level": problem.levels,
            "elements": mesh.element_count(),
            "iterations": stats.iterations,
            "residual_norm": stats.residual_norm,
            "halvings": stats.halvings,
            "linear_restart": stats.linear_restart,
        }),
    ))
}

fn converge(config: &ExperimentConfig, ctx: &mut RunContext) -> Result<(bool, Value)> {
    let problem = problem(config)?;
    let report = convergence_study(&problem)?;
    report.write_csv(ctx.create("convergence.csv")?)?;
    // Against the finest solve the last row is zero by construction and is left out.
    let last = match report.reference {
        ReferenceKind::Exact => problem.levels,
        ReferenceKind::FinestLevel => problem.levels - 1,
    };
    let decreasing = report.sobolev_error_strictly_decreasing(0..=last);
    let finest = report.row(last).expect("every level has a row");
    Ok((
        decreasing,
        json!({
            "reference": format!("{:?}", report.reference),
            "levels": report.rows.len(),
            "errors_strictly_decreasing": decreasing,
            "final_sobolev_error": finest.errors.sobolev_error,
            "final_pairing": finest.errors.pairing,
        }),
    ))
}

fn splus_probe(config: &ExperimentConfig, ctx: &mut RunContext) -> Result<(bool, Value)> {
    let probe = config.probe.as_ref().context("`splus-probe` needs a [probe] section")?;
    let p = config.exponent()?;
    let kernel = config.kernel(&p)?;
    let rule = rule(config)?;
    let spec = match probe.sequence {
        config::SequenceChoice::Oscillation => {
            if probe.frequencies.is_empty() {
                bail!("oscillation probe needs `frequencies`");
            }
            let mesh = Arc::new(Mesh::dyadic(config.domain()?, config.mesh.levels));
            SequenceSpec::oscillation(mesh, &probe.frequencies)?
        }
        config::SequenceChoice::Galerkin => SequenceSpec::galerkin(&problem(config)?)?,
    };
    let report = run_probe(&spec, &kernel, &p, &rule, config.solver.tolerance)?;
    report.write_csv(ctx.create("probe.csv")?)?;
    let mut w = csv::Writer::from_writer(ctx.create("xi_envelope.csv")?);
    w.write_record(["element", "xi_max"])?;
    for (e, x) in report.xi_envelope.iter().enumerate() {
        w.write_record([e.to_string(), format!("{x:e}")])?;
    }
    w.flush()?;
    let mut profile_json = Vec::new();
    if !probe.windows.is_empty() {
        let profile = uniform_integrability_profile(&spec.members, &p, &probe.windows, &rule)?;
        let mut w = csv::Writer::from_writer(ctx.create("profile.csv")?);
        w.write_record(["delta", "sup"])?;
        for entry in &profile {
            w.write_record([format!("{:e}", entry.delta), format!("{:e}", entry.sup)])?;
            profile_json.push(json!({ "delta": entry.delta, "sup": entry.sup }));
        }
        w.flush()?;
    }
    // A violated hypothesis is a permitted outcome; only an unmet conclusion fails.
    let passed = report.verdict != ProbeVerdict::Inconsistent;
    Ok((
        passed,
        json!({
            "sequence": format!("{:?}", spec.kind),
            "verdict": format!("{:?}", report.verdict),
            "limsup_surrogate": report.limsup_surrogate,
            "limsup_met": report.limsup_met,
            "strong_convergence_observed": report.strong_convergence_observed,
            "profile": profile_json,
        }),
    ))
}
