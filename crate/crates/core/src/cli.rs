//! Command-line front end: `run`, `verify` and `report`.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rayon::prelude::*;

use crate::config::{apply_tolerance_overrides, load_config, parse_config, RunPlan};
use crate::diagnostics::{dissipation_audit, parse_csv, DiagnosticsRecord};
use crate::error::{ConfigError, ScenarioError};
use crate::flow::project_initial_velocity;
use crate::init::{build_initial_state, Shape};
use crate::model::Model;
use crate::runner::{time_loop, LoopOptions, RunError};
use crate::scenarios::{run_scenario, ScenarioOptions, ScenarioReport, SCENARIOS};
use crate::snapshot::write_snapshot;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_FAILED: i32 = 2;
pub const EXIT_ABORT: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "tripleflow", about = "Three-phase phase-field flow simulator")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// Configuration file (alternative to the positional argument).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    snapshot_every: Option<usize>,
    #[arg(long, global = true)]
    binary_output: bool,
    #[arg(long, global = true)]
    max_steps: Option<usize>,
    /// File of `key = value` tolerance overrides.
    #[arg(long, global = true)]
    tol_overrides: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Free run, or the scenario named by the `scenario` key.
    Run {
        #[arg(value_name = "CONFIG")]
        config_file: Option<PathBuf>,
    },
    /// Run one scenario (or `all`) and check it against its targets.
    Verify {
        scenario: String,
        #[arg(value_name = "CONFIG")]
        config_file: Option<PathBuf>,
    },
    /// Summarize the artifacts of a finished run.
    Report { run_dir: PathBuf },
}

/// Failure with the exit code it maps to.
struct Exit(i32, String);

impl From<ConfigError> for Exit {
    fn from(e: ConfigError) -> Self {
        Exit(EXIT_INVALID, format!("config: {e}"))
    }
}

fn io(e: impl std::fmt::Display) -> Exit {
    Exit(EXIT_INVALID, format!("io: {e}"))
}

fn scenario_code(e: &ScenarioError) -> i32 {
    match e {
        ScenarioError::Abort(_) => EXIT_ABORT,
        ScenarioError::NonStationary { .. } | ScenarioError::FrontLost | ScenarioError::TriplePointNotFound => EXIT_FAILED,
        ScenarioError::Unknown(_) | ScenarioError::Params(_) | ScenarioError::Field(_) | ScenarioError::BadInitialSpec(_) => {
            EXIT_INVALID
        }
    }
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn cli_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
        }
    };
    match dispatch(&cli) {
        Ok(()) => EXIT_OK,
        Err(Exit(code, msg)) => {
            eprintln!("tripleflow: {msg}");
            code
        }
    }
}

fn dispatch(cli: &Cli) -> Result<(), Exit> {
    match &cli.cmd {
        Cmd::Run { config_file } => {
            let plan = plan(cli, config_file.as_ref())?;
            match plan.scenario.clone() {
                Some(name) => verify(&plan, &name),
                None => free_run(&plan),
            }
        }
        Cmd::Verify { scenario, config_file } => {
            let plan = plan(cli, config_file.as_ref())?;
            verify(&plan, scenario)
        }
        Cmd::Report { run_dir } => report(run_dir),
    }
}

fn plan(cli: &Cli, positional: Option<&PathBuf>) -> Result<RunPlan, Exit> {
    let mut plan = match positional.or(cli.config.as_ref()) {
        Some(path) => load_config(path)?,
        None => parse_config("", None)?,
    };
    if let Some(path) = &cli.tol_overrides {
        let text = fs::read_to_string(path).map_err(|e| io(format!("{}: {e}", path.display())))?;
        apply_tolerance_overrides(&mut plan.scenario_opts.tol, &text)?;
    }
    if let Some(o) = &cli.out {
        plan.out_dir = Some(o.clone());
    }
    if plan.out_dir.is_none() {
        plan.out_dir = Some(PathBuf::from("tripleflow-out"));
    }
    if let Some(n) = cli.snapshot_every {
        plan.snapshot_every = n;
    }
    if cli.binary_output {
        plan.binary = true;
    }
    if let Some(n) = cli.max_steps {
        plan.max_steps = Some(n);
        plan.scenario_opts.max_steps = n;
    }
    plan.scenario_opts.out_dir = plan.out_dir.clone();
    plan.scenario_opts.snapshot_every = plan.snapshot_every;
    plan.scenario_opts.binary = plan.binary;
    Ok(plan)
}

fn free_run(plan: &RunPlan) -> Result<(), Exit> {
    let out = plan.out_dir.clone().expect("out dir set");
    if let Some(w) = plan.grid.resolution_warning(plan.params.eps) {
        eprintln!("tripleflow: warning: {w}");
    }
    let mut model = Model::new(plan.grid.clone(), plan.params.clone());
    model.solve_flow = plan.solve_flow;
    let mut state = build_initial_state(&plan.ic, &plan.grid, &plan.params).map_err(|e| Exit(EXIT_INVALID, e.to_string()))?;
    if model.solve_flow && !plan.grid.bc.closed() && !matches!(plan.ic.shape, Shape::Restore(_)) {
        project_initial_velocity(&mut state, &model).map_err(|e| Exit(EXIT_ABORT, e.to_string()))?;
    }
    let opts = LoopOptions {
        max_steps: plan.max_steps,
        snapshot_every: plan.snapshot_every,
        out_dir: Some(out.clone()),
        binary: plan.binary,
        ..LoopOptions::until(plan.params.t_end)
    };
    let outcome = match time_loop(&model, state, &opts, |_, _| std::ops::ControlFlow::Continue(())) {
        Ok(o) => o,
        Err(e) => {
            let code = match &e {
                RunError::Abort { partial, .. } => {
                    let _ = fs::write(out.join("report.txt"), run_summary(&partial.records, partial.halvings, plan));
                    EXIT_ABORT
                }
                _ => EXIT_INVALID,
            };
            return Err(Exit(code, e.to_string()));
        }
    };
    let ext = if plan.binary { "bin" } else { "txt" };
    write_snapshot(&out.join(format!("final.{ext}")), &outcome.state, &plan.grid).map_err(io)?;
    let text = run_summary(&outcome.records, outcome.halvings, plan);
    fs::write(out.join("report.txt"), &text).map_err(io)?;
    print!("{text}");
    Ok(())
}

fn run_summary(records: &[DiagnosticsRecord], halvings: usize, plan: &RunPlan) -> String {
    let mut s = String::new();
    writeln!(s, "scenario = free").unwrap();
    s.push_str(&records_summary(records, plan.scenario_opts.tol.dissipation));
    writeln!(s, "halvings = {halvings}").unwrap();
    s
}

fn records_summary(records: &[DiagnosticsRecord], tol: f64) -> String {
    let mut s = String::new();
    let (Some(first), Some(last)) = (records.first(), records.last()) else {
        return "steps = 0\n".into();
    };
    let drift = |a: f64, b: f64| if a == 0.0 { (b - a).abs() } else { ((b - a) / a).abs() };
    let audit = dissipation_audit(records, tol);
    writeln!(s, "steps = {}", records.len() - 1).unwrap();
    writeln!(s, "time = {}", last.time).unwrap();
    writeln!(s, "F_initial = {}", first.energy.total).unwrap();
    writeln!(s, "F_final = {}", last.energy.total).unwrap();
    writeln!(s, "mass_drift = {:e}", drift(first.total_mass, last.total_mass)).unwrap();
    writeln!(s, "ions_drift = {:e}", drift(first.total_ions, last.total_ions)).unwrap();
    let max_res = |f: fn(&DiagnosticsRecord) -> f64| records.iter().map(f).fold(0.0f64, f64::max);
    writeln!(s, "max_res_sum_phi = {:e}", max_res(|r| r.res_sum_phi)).unwrap();
    writeln!(s, "max_res_sum_mu = {:e}", max_res(|r| r.res_sum_mu)).unwrap();
    writeln!(s, "max_res_div = {:e}", max_res(|r| r.res_div)).unwrap();
    writeln!(s, "dissipation_audit.pass = {}", audit.pass).unwrap();
    writeln!(s, "dissipation_audit.violations = {}", audit.violations).unwrap();
    s
}

fn threads() -> usize {
    std::env::var("TRIPLEFLOW_THREADS")
        .ok()
        .and_then(|v| v.parse().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

fn verify(plan: &RunPlan, which: &str) -> Result<(), Exit> {
    let names: Vec<&str> = if which == "all" {
        SCENARIOS.to_vec()
    } else if SCENARIOS.contains(&which) {
        vec![which]
    } else {
        return Err(Exit(EXIT_INVALID, ScenarioError::Unknown(which.into()).to_string()));
    };
    let root = plan.out_dir.clone().expect("out dir set");
    let run_one = |name: &str| -> Result<ScenarioReport, ScenarioError> {
        let dir = root.join(name);
        fs::create_dir_all(&dir).map_err(|e| ScenarioError::Abort(e.to_string()))?;
        let o = ScenarioOptions { out_dir: Some(dir.clone()), ..plan.scenario_opts.clone() };
        let rep = run_scenario(name, &plan.params, &o)?;
        let write = |f: &str, t: String| fs::write(dir.join(f), t).map_err(|e| ScenarioError::Abort(e.to_string()));
        write("report.txt", rep.to_text())?;
        write("series.csv", rep.series_csv())?;
        Ok(rep)
    };
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads()).build().map_err(|e| Exit(EXIT_ABORT, e.to_string()))?;
    let results: Vec<(&str, Result<ScenarioReport, ScenarioError>)> =
        pool.install(|| names.par_iter().map(|&n| (n, run_one(n))).collect());

    let mut code = EXIT_OK;
    let mut msgs = Vec::new();
    for (name, r) in &results {
        match r {
            Ok(rep) => {
                let failed: Vec<&str> = rep.failures().iter().map(|c| c.name.as_str()).collect();
                if failed.is_empty() {
                    println!("{name}: PASS");
                } else {
                    println!("{name}: FAIL ({})", failed.join(", "));
                    msgs.push(format!("{name} failed: {}", failed.join(", ")));
                    code = code.max(EXIT_FAILED);
                }
                for c in &rep.checks {
                    println!("  {} measured {} target {} ({}) {}", c.name, c.measured, c.target, c.rule, if c.pass { "ok" } else { "FAIL" });
                }
            }
            Err(e) => {
                println!("{name}: ERROR ({e})");
                msgs.push(format!("{name}: {e}"));
                let _ = fs::write(root.join(name).join("report.txt"), format!("scenario = {name}\npassed = false\nerror = {e}\n"));
                code = code.max(scenario_code(e));
            }
        }
    }
    if code == EXIT_OK {
        Ok(())
    } else {
        Err(Exit(code, msgs.join("; ")))
    }
}

fn report_dir(dir: &Path, out: &mut String) -> Result<Option<bool>, Exit> {
    let rep = dir.join("report.txt");
    let diag = dir.join("diagnostics.csv");
    if !rep.exists() && !diag.exists() {
        return Ok(None);
    }
    writeln!(out, "[{}]", dir.display()).unwrap();
    let mut ok = true;
    if rep.exists() {
        let text = fs::read_to_string(&rep).map_err(io)?;
        ok &= !text.lines().any(|l| l.trim() == "passed = false");
        out.push_str(&text);
    }
    if diag.exists() {
        let text = fs::read_to_string(&diag).map_err(io)?;
        let recs = parse_csv(&text).map_err(|e| Exit(EXIT_INVALID, format!("{}: {e}", diag.display())))?;
        writeln!(out, "diagnostics:").unwrap();
        out.push_str(&records_summary(&recs, 1e-6));
    }
    Ok(Some(ok))
}

fn report(dir: &Path) -> Result<(), Exit> {
    let mut out = String::new();
    let mut found = Vec::new();
    if let Some(ok) = report_dir(dir, &mut out)? {
        found.push(ok);
    }
    if found.is_empty() {
        let mut subs: Vec<PathBuf> = fs::read_dir(dir)
            .map_err(|e| io(format!("{}: {e}", dir.display())))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_dir())
            .collect();
        subs.sort();
        for s in subs {
            if let Some(ok) = report_dir(&s, &mut out)? {
                found.push(ok);
            }
        }
    }
    if found.is_empty() {
        return Err(Exit(EXIT_INVALID, format!("{}: no report.txt or diagnostics.csv", dir.display())));
    }
    print!("{out}");
    if found.iter().all(|&ok| ok) {
        Ok(())
    } else {
        Err(Exit(EXIT_FAILED, "run contains failed scenarios".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(args: &[&str]) -> i32 {
        cli_main(std::iter::once("tripleflow").chain(args.iter().copied()))
    }

    fn write(dir: &Path, name: &str, text: &str) -> String {
        let p = dir.join(name);
        fs::write(&p, text).unwrap();
        p.to_str().unwrap().to_string()
    }

    const SMALL: &str = "nx = 16\nny = 16\nlx = 0.25\nly = 0.25\neps = 0.05\ninit = disk 0.125 0.125 0.07 1 2\n\
                         dt = 1e-4\nt_end = 1e-3\n";

    #[test]
    fn invalid_config_exits_1() {
        let d = tempfile::tempdir().unwrap();
        let cfg = write(d.path(), "a.cfg", "eps = 0\n");
        let out = d.path().join("o");
        assert_eq!(run(&["run", &cfg, "--out", out.to_str().unwrap()]), EXIT_INVALID);
        let cfg = write(d.path(), "b.cfg", "epsilon = 0.1\n");
        assert_eq!(run(&["run", &cfg]), EXIT_INVALID);
        assert_eq!(run(&["verify", "nope", "--out", out.to_str().unwrap()]), EXIT_INVALID);
        assert_eq!(run(&["frobnicate"]), EXIT_INVALID);
    }

    #[test]
    fn verify_planar_profile_writes_report() {
        let d = tempfile::tempdir().unwrap();
        let out = d.path().join("o");
        assert_eq!(run(&["verify", "planar_profile", "--out", out.to_str().unwrap()]), EXIT_OK);
        let text = fs::read_to_string(out.join("planar_profile/report.txt")).unwrap();
        assert!(text.contains("passed = true"));
        assert!(out.join("planar_profile/series.csv").exists());
        assert!(out.join("planar_profile/diagnostics.csv").exists());
        assert_eq!(run(&["report", out.to_str().unwrap()]), EXIT_OK);
    }

    #[test]
    fn oversized_dt_fails_acceptance() {
        let d = tempfile::tempdir().unwrap();
        let cfg = write(d.path(), "h.cfg", "dt = 0.01\n");
        let out = d.path().join("o");
        assert_eq!(run(&["verify", "laplace_droplet", &cfg, "--out", out.to_str().unwrap()]), EXIT_FAILED);
        let text = fs::read_to_string(out.join("laplace_droplet/report.txt")).unwrap();
        assert!(text.contains("passed = false"));
        assert!(text.contains("check.dissipation_audit.pass"));
        assert_eq!(run(&["report", out.to_str().unwrap()]), EXIT_FAILED);
    }

    #[test]
    fn tolerance_overrides_apply() {
        let d = tempfile::tempdir().unwrap();
        let tol = write(d.path(), "t.txt", "profile_l2 = 1e-12\n");
        let out = d.path().join("o");
        let code = run(&["verify", "planar_profile", "--tol-overrides", &tol, "--out", out.to_str().unwrap()]);
        assert_eq!(code, EXIT_FAILED);
        let text = fs::read_to_string(out.join("planar_profile/report.txt")).unwrap();
        assert!(text.contains("check.profile_l2.pass = false"));
    }

    #[test]
    fn free_run_is_deterministic() {
        let d = tempfile::tempdir().unwrap();
        let cfg = write(d.path(), "s.cfg", SMALL);
        let (a, b) = (d.path().join("a"), d.path().join("b"));
        for o in [&a, &b] {
            assert_eq!(run(&["run", "--config", &cfg, "--out", o.to_str().unwrap(), "--snapshot-every", "5"]), EXIT_OK);
        }
        let csv = fs::read(a.join("diagnostics.csv")).unwrap();
        assert_eq!(csv, fs::read(b.join("diagnostics.csv")).unwrap());
        assert!(String::from_utf8_lossy(&csv).starts_with("# tripleflow-diag-v1"));
        assert!(a.join("snapshot_000005.txt").exists());
        assert!(a.join("final.txt").exists());
        assert_eq!(run(&["report", a.to_str().unwrap()]), EXIT_OK);
    }

    #[test]
    fn binary_output_and_max_steps() {
        let d = tempfile::tempdir().unwrap();
        let cfg = write(d.path(), "s.cfg", SMALL);
        let o = d.path().join("o");
        let args = ["run", &cfg, "--out", o.to_str().unwrap(), "--binary-output", "--max-steps", "3", "--snapshot-every", "1"];
        assert_eq!(run(&args), EXIT_OK);
        assert!(o.join("snapshot_000003.bin").exists());
        assert!(!o.join("snapshot_000004.bin").exists());
        let recs = parse_csv(&fs::read_to_string(o.join("diagnostics.csv")).unwrap()).unwrap();
        assert_eq!(recs.len(), 4);
    }

    #[test]
    fn unstable_run_aborts_with_3() {
        let d = tempfile::tempdir().unwrap();
        let cfg = write(d.path(), "u.cfg", &format!("{SMALL}stab_s = 0\n").replace("dt = 1e-4\nt_end = 1e-3", "dt = 1\nt_end = 10"));
        let o = d.path().join("o");
        assert_eq!(run(&["run", &cfg, "--out", o.to_str().unwrap()]), EXIT_ABORT);
        assert!(o.join("report.txt").exists());
    }

    #[test]
    fn report_of_missing_dir_fails() {
        let d = tempfile::tempdir().unwrap();
        assert_eq!(run(&["report", d.path().to_str().unwrap()]), EXIT_INVALID);
    }
}
