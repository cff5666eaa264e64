//! The full unknown set at one time level.

use crate::energetics;
use crate::field::{Field, VectorField};
use crate::grid::{Grid2D, ScalarKind};
use crate::ops;
use crate::params::ValidatedParams;

#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub phi: [Field; 3],
    pub mu: [Field; 3],
    pub c: Field,
    pub p: Field,
    pub v: VectorField,
    pub time: f64,
}

impl State {
    /// Pure phase 1 at rest with zero concentration.
    pub fn new(grid: &Grid2D) -> Self {
        let z = grid.cell_field();
        State {
            phi: [Field::constant(grid.nx, grid.ny, 1.0), z.clone(), z.clone()],
            mu: [z.clone(), z.clone(), z.clone()],
            c: z.clone(),
            p: z,
            v: grid.vector_field(),
            time: 0.0,
        }
    }

    #[inline]
    pub fn phi_at(&self, i: isize, j: isize) -> [f64; 3] {
        [self.phi[0].get(i, j), self.phi[1].get(i, j), self.phi[2].get(i, j)]
    }

    /// Refreshes every ghost layer from the grid's boundary tags.
    pub fn fill_ghosts(&mut self, grid: &Grid2D) {
        for k in 0..3 {
            ops::apply_bc(&mut self.phi[k], grid, ScalarKind::Phase);
            ops::apply_bc(&mut self.mu[k], grid, ScalarKind::Phase);
        }
        ops::apply_bc(&mut self.c, grid, ScalarKind::Concentration);
        ops::apply_bc(&mut self.p, grid, ScalarKind::Pressure);
        ops::apply_velocity_bc(&mut self.v, grid, false, false);
    }

    fn cellwise(&self, f: impl Fn([f64; 3]) -> f64) -> Field {
        let (ni, nj) = (self.phi[0].ni() as isize, self.phi[0].nj() as isize);
        let mut out = Field::zeros(ni as usize, nj as usize);
        for j in -1..=nj {
            for i in -1..=ni {
                out.set(i, j, f(self.phi_at(i, j)));
            }
        }
        out
    }

    /// φ̃_f including ghosts (phase ghosts must be filled).
    pub fn phi_f_tilde(&self, p: &ValidatedParams) -> Field {
        let d = p.delta;
        self.cellwise(|phi| energetics::phi_f_tilde(phi, d))
    }

    pub fn rho_f_tilde(&self, p: &ValidatedParams) -> Field {
        let (r1, r2, d) = (p.rho1, p.rho2, p.delta);
        self.cellwise(|phi| energetics::rho_f_tilde(phi, r1, r2, d))
    }

    pub fn gamma_tilde(&self, p: &ValidatedParams) -> Field {
        let (g, d) = (p.gamma(), p.delta);
        self.cellwise(|phi| energetics::gamma_tilde(phi, g, d))
    }

    pub fn phi_c_tilde(&self, p: &ValidatedParams) -> Field {
        let d = p.delta;
        self.cellwise(|phi| energetics::phi_c_tilde(phi, d))
    }

    /// Total mass ∫ρ(Φ).
    pub fn total_mass(&self, grid: &Grid2D, p: &ValidatedParams) -> f64 {
        let r = p.rho();
        let mut s = 0.0;
        for j in 0..grid.ny as isize {
            for i in 0..grid.nx as isize {
                let phi = self.phi_at(i, j);
                s += r[0] * phi[0] + r[1] * phi[1] + r[2] * phi[2];
            }
        }
        s * grid.cell_area()
    }

    /// Total ions ∫(φ̃_c c + φ₃c*).
    pub fn total_ions(&self, grid: &Grid2D, p: &ValidatedParams) -> f64 {
        let mut s = 0.0;
        for j in 0..grid.ny as isize {
            for i in 0..grid.nx as isize {
                let phi = self.phi_at(i, j);
                s += energetics::phi_c_tilde(phi, p.delta) * self.c.get(i, j) + phi[2] * p.c_star;
            }
        }
        s * grid.cell_area()
    }

    /// max |Σφᵢ − 1|.
    pub fn sum_phi_residual(&self, grid: &Grid2D) -> f64 {
        let mut m = 0.0f64;
        for j in 0..grid.ny as isize {
            for i in 0..grid.nx as isize {
                let phi = self.phi_at(i, j);
                m = m.max((phi[0] + phi[1] + phi[2] - 1.0).abs());
            }
        }
        m
    }

    /// max |Σμᵢ/Σᵢ|.
    pub fn sum_mu_residual(&self, grid: &Grid2D, p: &ValidatedParams) -> f64 {
        let mut m = 0.0f64;
        for j in 0..grid.ny as isize {
            for i in 0..grid.nx as isize {
                let s: f64 = (0..3).map(|k| self.mu[k].get(i, j) / p.sigmas[k]).sum();
                m = m.max(s.abs());
            }
        }
        m
    }

    /// Checks ∑φ = 1, the barrier band and finiteness.
    pub fn check_invariants(&self, grid: &Grid2D, p: &ValidatedParams, sum_tol: f64) -> Result<(), String> {
        let d = p.delta;
        for j in 0..grid.ny as isize {
            for i in 0..grid.nx as isize {
                let phi = self.phi_at(i, j);
                for (k, &v) in phi.iter().enumerate() {
                    if !(v > -d && v < 1.0 + d) {
                        return Err(format!("phi{} = {v} outside (-delta, 1+delta) at ({i},{j})", k + 1));
                    }
                }
                if (phi[0] + phi[1] + phi[2] - 1.0).abs() > sum_tol {
                    return Err(format!("phase sum off the plane at ({i},{j})"));
                }
                if !self.c.get(i, j).is_finite() {
                    return Err(format!("non-finite concentration at ({i},{j})"));
                }
            }
        }
        if !self.v.is_finite() {
            return Err("non-finite velocity".into());
        }
        Ok(())
    }

    /// Largest nodal difference to another state over all fields.
    pub fn max_abs_diff(&self, o: &State) -> f64 {
        let mut m = self.c.max_abs_diff(&o.c).max(self.p.max_abs_diff(&o.p)).max(self.v.max_abs_diff(&o.v));
        for k in 0..3 {
            m = m.max(self.phi[k].max_abs_diff(&o.phi[k])).max(self.mu[k].max_abs_diff(&o.mu[k]));
        }
        m
    }
}
