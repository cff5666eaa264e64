//! Time loop with dt retry, diagnostics and snapshot output.

use std::fs;
use std::io::Write;
use std::ops::ControlFlow;
use std::path::PathBuf;

use crate::diagnostics::{csv_header, csv_row, record_with_prev_energy, DiagnosticsRecord};
use crate::energetics::{q_localizer, rate_unchecked};
use crate::error::StepError;
use crate::model::Model;
use crate::snapshot::write_snapshot;
use crate::state::State;

/// Largest admissible step: min(dt, 0.2h/|v|max, C_r ε / max q|r + α̃(μ₁ − μ₃)|) with C_r = 0.5.
pub fn suggest_dt(model: &Model, state: &State) -> f64 {
    let p = &model.params;
    let g = &model.grid;
    let mut dt = p.dt;
    if model.solve_flow {
        let vmax = state.v.max_abs();
        if vmax > 0.0 {
            dt = dt.min(0.2 * g.h_min() / vmax);
        }
    }
    if p.reactions {
        let mut rmax = 0.0f64;
        for j in 0..g.ny as isize {
            for i in 0..g.nx as isize {
                let phi = state.phi_at(i, j);
                let q = q_localizer(phi);
                if q != 0.0 {
                    let r = rate_unchecked(&p.g_spec, state.c.get(i, j), p.c_star)
                        + p.alpha_tilde * (state.mu[0].get(i, j) - state.mu[2].get(i, j));
                    rmax = rmax.max((q * r).abs());
                }
            }
        }
        if rmax > 0.0 {
            dt = dt.min(0.5 * p.eps / rmax);
        }
    }
    dt
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoopOptions {
    pub t_end: f64,
    pub max_steps: Option<usize>,
    /// Snapshot cadence in steps; 0 disables snapshots.
    pub snapshot_every: usize,
    pub out_dir: Option<PathBuf>,
    pub binary: bool,
    pub max_halvings: usize,
    /// Step number of the first step (continuing runs).
    pub first_step: usize,
}

impl LoopOptions {
    pub fn until(t_end: f64) -> Self {
        LoopOptions { t_end, max_steps: None, snapshot_every: 0, out_dir: None, binary: false, max_halvings: 8, first_step: 0 }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub state: State,
    pub records: Vec<DiagnosticsRecord>,
    pub steps: usize,
    pub halvings: usize,
    /// True when an observer ended the run early.
    pub stopped: bool,
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum RunError {
    #[error("solver abort at step {step} (t = {time}): {source}")]
    Abort { step: usize, time: f64, source: StepError, partial: Box<RunOutcome> },
    #[error("output: {0}")]
    Io(String),
    #[error("diagnostics: {0}")]
    Energy(String),
}

fn io_err(e: impl std::fmt::Display) -> RunError {
    RunError::Io(e.to_string())
}

/// Runs until `t_end` (or `max_steps`), splitting each step φ → c → v. A rejected step is
/// retried with half the time step up to `max_halvings` times. The observer sees every
/// accepted state and may stop the run.
pub fn time_loop(
    model: &Model,
    state: State,
    opts: &LoopOptions,
    mut observer: impl FnMut(&State, &DiagnosticsRecord) -> ControlFlow<()>,
) -> Result<RunOutcome, RunError> {
    let grid = &model.grid;
    let p = &model.params;
    let mut csv = match &opts.out_dir {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(io_err)?;
            let mut f = fs::File::create(dir.join("diagnostics.csv")).map_err(io_err)?;
            f.write_all(csv_header().as_bytes()).map_err(io_err)?;
            Some(std::io::BufWriter::new(f))
        }
        None => None,
    };
    let snapshot = |st: &State, step: usize| -> Result<(), RunError> {
        if let Some(dir) = &opts.out_dir {
            let ext = if opts.binary { "bin" } else { "txt" };
            write_snapshot(&dir.join(format!("snapshot_{step:06}.{ext}")), st, grid).map_err(io_err)?;
        }
        Ok(())
    };

    let mut state = state;
    let first = record_with_prev_energy(&state, None, opts.first_step, 0.0, 0.0, grid, p)
        .map_err(|e| RunError::Energy(e.to_string()))?;
    let mut records = vec![first];
    if let Some(w) = csv.as_mut() {
        w.write_all(csv_row(&first).as_bytes()).map_err(io_err)?;
    }
    if opts.snapshot_every > 0 {
        snapshot(&state, opts.first_step)?;
    }
    let mut stopped = observer(&state, &first).is_break();
    let mut steps = 0;
    let mut halvings = 0;
    while !stopped {
        let remaining = opts.t_end - state.time;
        if (opts.t_end.is_finite() && remaining <= 1e-12 * opts.t_end.abs().max(1e-300)) || opts.max_steps.is_some_and(|m| steps >= m) {
            break;
        }
        let mut dt = suggest_dt(model, &state);
        if remaining <= dt * (1.0 + 1e-9) {
            dt = remaining;
        }
        let mut tries = 0;
        let (next, info) = loop {
            match model.step(&state, dt) {
                Ok(r) => break r,
                Err(StepError::StepRejected(_) | StepError::PoissonNonconvergence(_)) if tries < opts.max_halvings => {
                    tries += 1;
                    halvings += 1;
                    dt *= 0.5;
                }
                Err(source) => {
                    let step = opts.first_step + steps + 1;
                    let time = state.time;
                    let partial = Box::new(RunOutcome { state, records, steps, halvings, stopped: false });
                    return Err(RunError::Abort { step, time, source, partial });
                }
            }
        };
        steps += 1;
        let step = opts.first_step + steps;
        let prev_f = records.last().map(|r| r.energy.total);
        let rec = record_with_prev_energy(&next, prev_f, step, dt, info.div_residual, grid, p)
            .map_err(|e| RunError::Energy(e.to_string()))?;
        if let Some(w) = csv.as_mut() {
            w.write_all(csv_row(&rec).as_bytes()).map_err(io_err)?;
        }
        state = next;
        if opts.snapshot_every > 0 && step % opts.snapshot_every == 0 {
            snapshot(&state, step)?;
        }
        records.push(rec);
        stopped = observer(&state, &rec).is_break();
    }
    if let Some(mut w) = csv {
        w.flush().map_err(io_err)?;
    }
    Ok(RunOutcome { state, records, steps, halvings, stopped })
}
