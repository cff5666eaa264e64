//! A configured model: grid, parameters, cached solver data and the full time step.

use crate::energetics::TripleWell;
use crate::error::StepError;
use crate::flow::{self, MomentumPreconditioner, VelocityLayout};
use crate::grid::{Grid2D, ScalarKind};
use crate::linalg::FastDiag;
use crate::params::ValidatedParams;
use crate::phasefield;
use crate::state::State;

/// Relative tolerances of the implicit solves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverTolerances {
    pub momentum: f64,
    pub pressure: f64,
    pub concentration: f64,
}

impl Default for SolverTolerances {
    fn default() -> Self {
        SolverTolerances { momentum: 1e-12, pressure: 1e-12, concentration: 1e-12 }
    }
}

pub struct Model {
    pub grid: Grid2D,
    pub params: ValidatedParams,
    pub well: TripleWell,
    pub ch: FastDiag,
    pub pressure_fd: FastDiag,
    pub layout: VelocityLayout,
    pub momentum_pre: MomentumPreconditioner,
    pub tol: SolverTolerances,
    /// When false the velocity stays at its initial value and no pressure is computed.
    pub solve_flow: bool,
}

/// Per-step solver information.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepInfo {
    pub div_residual: f64,
    pub momentum_iters: usize,
    pub pressure_iters: usize,
}

impl Model {
    pub fn new(grid: Grid2D, params: ValidatedParams) -> Self {
        let ch = FastDiag::from_bcs(grid.bc.scalar(ScalarKind::Phase), grid.nx, grid.hx, grid.ny, grid.hy);
        let pressure_fd = FastDiag::from_bcs(grid.bc.scalar(ScalarKind::Pressure), grid.nx, grid.hx, grid.ny, grid.hy);
        let layout = VelocityLayout::new(&grid);
        let momentum_pre = MomentumPreconditioner::new(&grid);
        let well = TripleWell::from_params(&params);
        Model { grid, params, well, ch, pressure_fd, layout, momentum_pre, tol: SolverTolerances::default(), solve_flow: true }
    }

    /// One split step φ → c → v.
    pub fn step(&self, state: &State, dt: f64) -> Result<(State, StepInfo), StepError> {
        let ps = phasefield::step_phase_fields(state, dt, self)?;
        let c = phasefield::step_concentration(state, &ps, dt, self)?;
        let mut info = StepInfo::default();
        let (v, p) = if self.solve_flow {
            let fs = flow::step_flow(state, &ps, dt, self)?;
            info.div_residual = fs.residual;
            info.momentum_iters = fs.momentum_iters;
            info.pressure_iters = fs.pressure_iters;
            (fs.v, fs.p)
        } else {
            (state.v.clone(), state.p.clone())
        };
        let mut next = State { phi: ps.phi, mu: ps.mu, c, p, v, time: state.time + dt };
        next.fill_ghosts(&self.grid);
        Ok((next, info))
    }
}
