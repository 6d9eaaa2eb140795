//! Command implementations. Each returns a [`RunReport`] that has already
//! been written to its output directory.

use std::path::{Path, PathBuf};

use nsreg::flows::{
    default_battery, shell_points, strong_residual, very_weak_residual, weak_residual, FlowKind, ResidualQuadrature,
    TestFieldKind,
};
use nsreg::grid::{write_space_time_snapshot, Mask, Rank, SpaceTimeField};
use nsreg::io::{atomic_write, atomic_write_json};
use nsreg::kernels::{decay_scan, SampleSpec};
use nsreg::ledger::{
    step1_conditions, bootstrap_chain, bootstrap_schedule, pressure_m_condition, serrin_classify,
    ExtRational, SerrinClass,
};
use nsreg::localization::{forcing_support_audit, grad_eta_tail_fit, localize, write_localized_state, CutoffFamily};
use nsreg::lorentz::{mixed_norm, SpatialNorm};
use nsreg::picard::{contraction_threshold_scan, epsilon_of, max_divergence, PicardProblem, PicardVerdict};
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::report::{json, output_dir, RunReport, TaskVerdict};
use crate::CliError;

/// A report together with the directory it was written to.
pub struct Outcome {
    pub report: RunReport,
    pub dir: PathBuf,
    /// Text for standard output.
    pub stdout: String,
}

fn finish(report: RunReport, dir: PathBuf, stdout: String) -> Result<Outcome, CliError> {
    report.write(&dir)?;
    Ok(Outcome { report, dir, stdout })
}

fn start(command: &str, cfg: &ExperimentConfig) -> Result<(RunReport, PathBuf), CliError> {
    let report = RunReport::new(command, cfg, cfg.seed)?;
    let dir = output_dir(cfg.output_dir.as_deref(), command, &report.config_hash)?;
    Ok((report, dir))
}

fn summary(report: &RunReport) -> String {
    let mut s = String::new();
    for t in &report.tasks {
        let v = match t.verdict {
            TaskVerdict::Pass => "pass",
            TaskVerdict::Fail => "FAIL",
            TaskVerdict::Info => "info",
        };
        s.push_str(&format!("[{v}] {} ({:.2}s)\n", t.name, t.wall_seconds));
    }
    s
}

/// Hypothesis quantities: `ε = ‖u‖_{L^∞_t L^{3,∞}(B₂)}`, `‖p‖_{L^m_t L¹(B₂)}`
/// and their sum `C_*`.
pub fn norms(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let (mut report, dir) = start("norms", cfg)?;
    let flow = cfg.build_flow()?;
    let (u, p) = flow.sample(cfg.grid_spec()?, cfg.time_grid()?)?;
    let m = cfg.norms.pressure_exponent;
    report.task("hypothesis_norms", |out| {
        let eps = epsilon_of(&u)?;
        out.insert("flow".into(), json(&flow.name));
        out.insert("epsilon".into(), json(eps));
        out.insert("pressure_exponent".into(), json(m));
        if let Some(p) = &p {
            let mask = Mask::ball(*p.grid(), [0.0; 3], 2.0);
            let pn = mixed_norm(p, &mask, m, SpatialNorm::Lebesgue { p: 1.0 })?;
            out.insert("pressure_norm".into(), json(pn.value));
            out.insert("c_star".into(), json(eps + pn.value));
        } else {
            out.insert("pressure_norm".into(), serde_json::Value::Null);
            out.insert("c_star".into(), serde_json::Value::Null);
        }
        Ok(TaskVerdict::Info)
    })?;
    let mut text = summary(&report);
    for (k, v) in &report.tasks[0].metrics {
        text.push_str(&format!("  {k} = {v}\n"));
    }
    finish(report, dir, text)
}

/// Cut-off construction, support audit and `∇η` tail fit; writes the
/// localized fields as snapshots.
pub fn localize_cmd(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let (mut report, dir) = start("localize", cfg)?;
    let flow = cfg.build_flow()?;
    let (u, p) = flow.sample(cfg.grid_spec()?, cfg.time_grid()?)?;
    // ũ and η never see the pressure; only p̃ and f⁰ do
    let substituted = p.is_none();
    let p = p.unwrap_or_else(|| SpaceTimeField::zeros(*u.grid(), *u.time(), Rank::Scalar));
    let cut = CutoffFamily::default();
    let state = localize(&u, &p, &cut)?;
    report.task("support_audit", |out| {
        let audit = forcing_support_audit(&state, cfg.norms.pressure_exponent)?;
        out.insert("audit".into(), json(&audit));
        out.insert("source_mean_ratio".into(), json(state.source_mean_ratio));
        out.insert("zero_pressure_substituted".into(), json(substituted));
        Ok(TaskVerdict::from_bool(audit.pass))
    })?;
    let half = 0.5 * cfg.grid.side;
    if half > 2.0 {
        report.task("grad_eta_tail", |out| {
            let last = state.eta.frames().last().expect("non-empty time grid");
            let fit = grad_eta_tail_fit(last, 2.0, half, 8)?;
            out.insert("fit".into(), json(&fit));
            Ok(TaskVerdict::Info)
        })?;
    }
    write_localized_state(&dir.join("state"), &state)?;
    let text = summary(&report);
    finish(report, dir, text)
}

pub fn picard_run(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let (mut report, dir) = start("picard run", cfg)?;
    let flow = cfg.build_flow()?;
    let problem = PicardProblem::from_flow(&flow, cfg.grid_spec()?, cfg.time_grid()?, &CutoffFamily::default())?;
    report.task("picard", |out| {
        let (v, trace) = problem.solve(&cfg.picard)?;
        atomic_write(&dir.join("trace.csv"), trace.to_csv().as_bytes())?;
        atomic_write_json(&dir.join("trace.json"), &trace)?;
        out.insert("verdict".into(), json(trace.verdict));
        out.insert("iterations".into(), json(trace.iterations()));
        out.insert("max_ratio".into(), json(trace.max_ratio()));
        out.insert("residual".into(), json(trace.residual));
        out.insert("final_norm".into(), json(trace.norms.last()));
        out.insert("max_divergence".into(), json(max_divergence(&v)?));
        Ok(TaskVerdict::from_bool(trace.verdict == PicardVerdict::Converged))
    })?;
    let text = summary(&report);
    finish(report, dir, text)
}

pub fn picard_scan(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let (mut report, dir) = start("picard scan", cfg)?;
    let flow = cfg.build_flow()?;
    report.task("contraction_scan", |out| {
        let scan = contraction_threshold_scan(
            &flow,
            &cfg.scan.amplitudes,
            cfg.grid_spec()?,
            cfg.time_grid()?,
            &CutoffFamily::default(),
            &cfg.picard,
            &cfg.scan.config(),
        )?;
        let mut csv = String::from("amplitude,epsilon,ratio,verdict\n");
        for p in &scan.points {
            csv.push_str(&format!("{:e},{:e},{:e},{}\n", p.amplitude, p.epsilon, p.ratio, json(p.verdict).as_str().unwrap_or("")));
        }
        atomic_write(&dir.join("scan.csv"), csv.as_bytes())?;
        atomic_write_json(&dir.join("scan.json"), &scan)?;
        out.insert("monotone".into(), json(scan.monotone));
        out.insert("threshold_amplitude".into(), json(scan.threshold_amplitude));
        out.insert("epsilon_star".into(), json(scan.epsilon_star));
        Ok(TaskVerdict::from_bool(scan.monotone))
    })?;
    let text = summary(&report);
    finish(report, dir, text)
}

/// Empirical decay constants of the Oseen tensor for `(ℓ, k) ∈ {0, 1}²`.
pub fn kernel_check(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let (mut report, dir) = start("kernel check", cfg)?;
    let spec = SampleSpec::default();
    let mut csv = String::from("l,k,C_emp,n_samples,stability_pct,stable\n");
    for (l, k) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
        report.task(&format!("decay_l{l}_k{k}"), |out| {
            let r = decay_scan(l, k, &spec)?;
            csv.push_str(&format!("{l},{k},{:e},{},{:.4},{}\n", r.c_emp, r.n_samples, r.stability_pct, r.stable));
            out.insert("scan".into(), json(r));
            Ok(TaskVerdict::from_bool(r.stable))
        })?;
    }
    atomic_write(&dir.join("decay.csv"), csv.as_bytes())?;
    let text = summary(&report);
    finish(report, dir, text)
}

pub fn flows_sample(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let (mut report, dir) = start("flows sample", cfg)?;
    let flow = cfg.build_flow()?;
    report.task("sample", |out| {
        let (u, p) = flow.sample(cfg.grid_spec()?, cfg.time_grid()?)?;
        write_space_time_snapshot(&dir, "u", &u)?;
        if let Some(p) = &p {
            write_space_time_snapshot(&dir, "p", p)?;
        }
        out.insert("flow".into(), json(&flow.name));
        out.insert("properties".into(), json(flow.properties));
        out.insert("max_abs_u".into(), json(u.max_abs()));
        out.insert("max_divergence".into(), json(max_divergence(&u)?));
        Ok(TaskVerdict::Info)
    })?;
    let text = summary(&report);
    finish(report, dir, text)
}

/// Weak residual for flows with a pressure, very weak residual otherwise;
/// stationary singular flows are checked pointwise on a shell instead.
pub fn residual_check(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let (mut report, dir) = start("residual check", cfg)?;
    let flow = cfg.build_flow()?;
    let tol = cfg.residual.tolerance;
    if matches!(flow.kind, FlowKind::Landau { .. }) {
        report.task("strong_residual", |out| {
            let pts = shell_points(0.5, 2.0, 200, cfg.seed);
            let r = strong_residual(&flow, &pts, 0.0, 1e-3)?;
            out.insert("residual".into(), json(&r));
            Ok(TaskVerdict::from_bool(r.momentum <= tol * r.scale && r.divergence <= tol * r.scale))
        })?;
    } else {
        let quad = ResidualQuadrature::new(cfg.residual.resolution, cfg.time_grid()?);
        report.task("weak_residual", |out| {
            let r = if flow.properties.has_pressure {
                weak_residual(&flow, &default_battery(TestFieldKind::Plain), &quad, tol)?
            } else {
                very_weak_residual(&flow, &default_battery(TestFieldKind::Curl), &quad, tol)?
            };
            out.insert("battery".into(), json(&r.battery_id));
            out.insert("max_abs".into(), json(r.max_abs()));
            out.insert("report".into(), json(&r));
            Ok(TaskVerdict::from_bool(r.passed()))
        })?;
    }
    let text = summary(&report);
    finish(report, dir, text)
}

/// Arguments of a ledger command, hashed in place of a configuration.
#[derive(Debug, Clone, Serialize)]
pub struct LedgerArgs {
    pub kind: &'static str,
    pub values: Vec<(&'static str, String)>,
}

fn parse(name: &str, s: &str) -> Result<ExtRational, CliError> {
    s.parse().map_err(|e: nsreg::Error| CliError::Validation(format!("--{name}: {e}")))
}

fn ledger_start(args: &LedgerArgs) -> Result<(RunReport, PathBuf), CliError> {
    let command = format!("ledger {}", args.kind);
    let report = RunReport::new(&command, args, 0)?;
    let dir = output_dir(None, &command, &report.config_hash)?;
    Ok((report, dir))
}

pub fn ledger_bootstrap(q: &str, s: &str) -> Result<Outcome, CliError> {
    let args = LedgerArgs { kind: "bootstrap", values: vec![("q", q.into()), ("s", s.into())] };
    let (q, s) = (parse("q", q)?, parse("s", s)?);
    let (mut report, dir) = ledger_start(&args)?;
    let led = bootstrap_schedule(&q, &s)?;
    let (k, sigma, chain) = bootstrap_chain(&led);
    report.task("bootstrap_schedule", |out| {
        out.insert("K".into(), json(&k));
        out.insert("sigma".into(), json(&sigma));
        out.insert("p_chain".into(), json(&chain));
        Ok(TaskVerdict::from_bool(led.all_pass()))
    })?;
    atomic_write_json(&dir.join("ledger.json"), &led)?;
    let chain: Vec<String> = chain.iter().map(|p| p.to_string()).collect();
    let text = format!("{}K = {k}\nsigma = {sigma}\np: {}\n", led.to_table(), chain.join(", "));
    finish(report, dir, text)
}

pub fn ledger_mcond(q: &str, m: &str) -> Result<Outcome, CliError> {
    let args = LedgerArgs { kind: "mcond", values: vec![("q", q.into()), ("m", m.into())] };
    let (q, m) = (parse("q", q)?, parse("m", m)?);
    let (mut report, dir) = ledger_start(&args)?;
    let v = pressure_m_condition(&q, &m)?;
    report.task("m_condition", |out| {
        out.insert("verdict".into(), json(&v));
        Ok(TaskVerdict::from_bool(v.pass))
    })?;
    atomic_write_json(&dir.join("ledger.json"), &v)?;
    let text = format!(
        "q = {}\nm = {}\nthreshold = {}\npass = {}\nimplied_by_m_ge_1 = {}\n",
        v.q, v.m, v.threshold, v.pass, v.implied_by_m_ge_1
    );
    finish(report, dir, text)
}

pub fn ledger_step1(q: &str, s: &str, m: &str, delta: &str) -> Result<Outcome, CliError> {
    let args = LedgerArgs {
        kind: "step1",
        values: vec![("q", q.into()), ("s", s.into()), ("m", m.into()), ("delta", delta.into())],
    };
    let (q, s, m, d) = (parse("q", q)?, parse("s", s)?, parse("m", m)?, parse("delta", delta)?);
    let (mut report, dir) = ledger_start(&args)?;
    let led = step1_conditions(&q, &s, &m, &d)?;
    report.task("step1_conditions", |out| {
        out.insert("ledger".into(), json(&led));
        // the equivalence must hold; the inequalities themselves may fail
        let consistent = led.conditions.iter().find(|c| c.name == "equivalence_consistent").is_some_and(|c| c.verdict);
        Ok(TaskVerdict::from_bool(consistent))
    })?;
    atomic_write_json(&dir.join("ledger.json"), &led)?;
    let text = led.to_table();
    finish(report, dir, text)
}

pub fn ledger_classify(q: &str, s: &str) -> Result<Outcome, CliError> {
    let args = LedgerArgs { kind: "classify", values: vec![("q", q.into()), ("s", s.into())] };
    let (q, s) = (parse("q", q)?, parse("s", s)?);
    let (mut report, dir) = ledger_start(&args)?;
    let (class, value) = serrin_classify(&q, &s)?;
    report.task("serrin_class", |out| {
        out.insert("class".into(), json(class));
        out.insert("value".into(), json(&value));
        Ok(TaskVerdict::Info)
    })?;
    let name = match class {
        SerrinClass::Subcritical => "subcritical",
        SerrinClass::Critical => "critical",
        SerrinClass::Supercritical => "supercritical",
    };
    let text = format!("3/q + 2/s = {value}\nclass = {name}\n");
    finish(report, dir, text)
}

/// Loads a configuration, or the defaults when no path is given.
pub fn load_config(path: Option<&Path>) -> Result<ExperimentConfig, CliError> {
    match path {
        Some(p) => ExperimentConfig::load(p),
        None => Ok(ExperimentConfig::default()),
    }
}

