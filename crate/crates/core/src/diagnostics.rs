//! Per-step conservation and energy monitoring.

use std::fmt::Write as _;

use crate::energetics::{free_energy, FreeEnergy};
use crate::error::EnergyError;
use crate::grid::Grid2D;
use crate::params::ValidatedParams;
use crate::state::State;

pub const CSV_TAG: &str = "# tripleflow-diag-v1";
pub const CSV_COLUMNS: &str =
    "step,time,dt,total_mass,total_ions,F_total,F_kinetic,F_GL,F_mixture,dF_step,res_sum_phi,res_sum_mu,res_div";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticsRecord {
    pub step: usize,
    pub time: f64,
    pub dt: f64,
    pub total_mass: f64,
    pub total_ions: f64,
    pub energy: FreeEnergy,
    /// F(t+dt) − F(t); zero for the initial record.
    pub df_step: f64,
    pub res_sum_phi: f64,
    pub res_sum_mu: f64,
    pub res_div: f64,
}

/// Builds the record of `state`, given the total free energy of the previous state.
pub fn record_with_prev_energy(
    state: &State,
    prev_f: Option<f64>,
    step: usize,
    dt: f64,
    res_div: f64,
    grid: &Grid2D,
    p: &ValidatedParams,
) -> Result<DiagnosticsRecord, EnergyError> {
    let energy = free_energy(state, grid, p)?;
    Ok(DiagnosticsRecord {
        step,
        time: state.time,
        dt,
        total_mass: state.total_mass(grid, p),
        total_ions: state.total_ions(grid, p),
        energy,
        df_step: prev_f.map_or(0.0, |f| energy.total - f),
        res_sum_phi: state.sum_phi_residual(grid),
        res_sum_mu: state.sum_mu_residual(grid, p),
        res_div,
    })
}

/// Record of `state` relative to `prev` (midpoint quadrature over cells).
pub fn record_diagnostics(
    state: &State,
    prev: Option<&State>,
    grid: &Grid2D,
    p: &ValidatedParams,
) -> Result<DiagnosticsRecord, EnergyError> {
    let prev_f = match prev {
        Some(s) => Some(free_energy(s, grid, p)?.total),
        None => None,
    };
    let dt = prev.map_or(0.0, |s| state.time - s.time);
    let pf = crate::phasefield::face_phases(&state.phi, grid);
    let pf = crate::phasefield::face_phi_f_tilde(&pf, p.delta);
    let res_div = crate::flow::constrained_divergence(&state.v, &pf, grid).interior_max_abs();
    record_with_prev_energy(state, prev_f, 0, dt, res_div, grid, p)
}

pub fn csv_header() -> String {
    format!("{CSV_TAG}\n{CSV_COLUMNS}\n")
}

pub fn csv_row(r: &DiagnosticsRecord) -> String {
    let mut s = String::new();
    write!(
        s,
        "{},{},{},{},{},{},{},{},{},{},{},{},{}",
        r.step,
        r.time,
        r.dt,
        r.total_mass,
        r.total_ions,
        r.energy.total,
        r.energy.kinetic,
        r.energy.gl,
        r.energy.mixture,
        r.df_step,
        r.res_sum_phi,
        r.res_sum_mu,
        r.res_div
    )
    .unwrap();
    s.push('\n');
    s
}

/// Parses a diagnostics CSV produced by [`csv_header`]/[`csv_row`].
pub fn parse_csv(text: &str) -> Result<Vec<DiagnosticsRecord>, String> {
    let mut lines = text.lines();
    if lines.next() != Some(CSV_TAG) {
        return Err("missing diagnostics version tag".into());
    }
    if lines.next() != Some(CSV_COLUMNS) {
        return Err("unexpected diagnostics columns".into());
    }
    let mut out = Vec::new();
    for (n, line) in lines.enumerate() {
        let v: Vec<&str> = line.split(',').collect();
        if v.len() != 13 {
            return Err(format!("row {}: expected 13 columns", n + 1));
        }
        let f = |k: usize| v[k].parse::<f64>().map_err(|_| format!("row {}: column {k}", n + 1));
        out.push(DiagnosticsRecord {
            step: v[0].parse().map_err(|_| format!("row {}: step", n + 1))?,
            time: f(1)?,
            dt: f(2)?,
            total_mass: f(3)?,
            total_ions: f(4)?,
            energy: FreeEnergy { total: f(5)?, kinetic: f(6)?, gl: f(7)?, mixture: f(8)? },
            df_step: f(9)?,
            res_sum_phi: f(10)?,
            res_sum_mu: f(11)?,
            res_div: f(12)?,
        });
    }
    Ok(out)
}

/// Result of checking a run for free-energy increases.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuditReport {
    pub pass: bool,
    pub steps: usize,
    pub violations: usize,
    pub fraction: f64,
    pub threshold: f64,
    /// Step with the largest dF_step and that value.
    pub worst_step: usize,
    pub worst_increase: f64,
}

/// Counts steps with dF_step > tol·max(F(0), 1).
pub fn dissipation_audit(records: &[DiagnosticsRecord], tol: f64) -> AuditReport {
    let f0 = records.first().map_or(0.0, |r| r.energy.total);
    let threshold = tol * f0.max(1.0);
    let steps = records.len().saturating_sub(1);
    let mut violations = 0;
    let mut worst = (0, f64::NEG_INFINITY);
    for r in records.iter().skip(1) {
        if r.df_step > threshold || r.df_step.is_nan() {
            violations += 1;
        }
        if r.df_step > worst.1 {
            worst = (r.step, r.df_step);
        }
    }
    let fraction = if steps == 0 { 0.0 } else { violations as f64 / steps as f64 };
    AuditReport { pass: violations == 0, steps, violations, fraction, threshold, worst_step: worst.0, worst_increase: worst.1 }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(step: usize, f: f64, df: f64) -> DiagnosticsRecord {
        DiagnosticsRecord {
            step,
            time: step as f64 * 0.1,
            dt: 0.1,
            total_mass: 1.0,
            total_ions: 2.0,
            energy: FreeEnergy { total: f, kinetic: 0.0, gl: f, mixture: 0.0 },
            df_step: df,
            res_sum_phi: 0.0,
            res_sum_mu: 1e-17,
            res_div: 0.0,
        }
    }

    #[test]
    fn audit_counts_increases() {
        let rs = vec![rec(0, 10.0, 0.0), rec(1, 9.0, -1.0), rec(2, 9.0 + 2e-5, 2e-5), rec(3, 8.0, -1.0)];
        let a = dissipation_audit(&rs, 1e-6);
        assert!(!a.pass);
        assert_eq!(a.violations, 1);
        assert_eq!(a.worst_step, 2);
        assert!((a.threshold - 1e-5).abs() < 1e-18);
        let eq = vec![rec(0, 0.5, 0.0), rec(1, 0.5, 0.0), rec(2, 0.5, 0.0)];
        assert!(dissipation_audit(&eq, 1e-6).pass);
    }

    #[test]
    fn csv_round_trip() {
        let rs = [rec(0, 1.0, 0.0), rec(1, 0.9, -0.1)];
        let mut text = csv_header();
        for r in &rs {
            text.push_str(&csv_row(r));
        }
        let back = parse_csv(&text).unwrap();
        assert_eq!(back, rs.to_vec());
        assert!(parse_csv("garbage").is_err());
    }
}
