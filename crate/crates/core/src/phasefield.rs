//! Chemical potentials, Cahn–Hilliard fluxes, the phase-field step and the ion step.

use crate::energetics::{self, phi_c_tilde, TripleWell};
use crate::error::{EnergyError, StepError};
use crate::field::{Field, VectorField};
use crate::grid::{BoundaryCondition, Grid2D, ScalarKind};
use crate::linalg::{pcg, KrylovOptions};
use crate::model::Model;
use crate::ops;
use crate::params::ValidatedParams;
use crate::state::State;

/// Composition carried in by an inflow boundary.
pub const INFLOW_PHASES: [f64; 3] = [1.0, 0.0, 0.0];

/// μᵢ = ∂ᵢW(Φ)/ε − εΣᵢΔφᵢ. Phase ghosts must be filled; the result has Neumann ghosts.
pub fn chemical_potentials(phi: &[Field; 3], grid: &Grid2D, p: &ValidatedParams) -> Result<[Field; 3], EnergyError> {
    let well = TripleWell::from_params(p);
    let mut mu = [grid.cell_field(), grid.cell_field(), grid.cell_field()];
    let laps = [ops::laplacian(&phi[0], grid), ops::laplacian(&phi[1], grid), ops::laplacian(&phi[2], grid)];
    for j in 0..grid.ny as isize {
        for i in 0..grid.nx as isize {
            let dw = well.dw([phi[0].get(i, j), phi[1].get(i, j), phi[2].get(i, j)])?;
            for k in 0..3 {
                mu[k].set(i, j, dw[k] / p.eps - p.eps * p.sigmas[k] * laps[k].get(i, j));
            }
        }
    }
    for m in mu.iter_mut() {
        ops::apply_bc(m, grid, ScalarKind::Phase);
    }
    Ok(mu)
}

/// Cahn–Hilliard fluxes Jᵢ = −(ε/Σᵢ)∇μᵢ, J_f = ρ₁J₁ + ρ₂J₂, J_c = J₁.
#[derive(Debug, Clone, PartialEq)]
pub struct ChFluxes {
    pub j: [VectorField; 3],
    pub jf: VectorField,
    pub jc: VectorField,
}

pub fn ch_fluxes(mu: &[Field; 3], grid: &Grid2D, p: &ValidatedParams) -> ChFluxes {
    let j: [VectorField; 3] = std::array::from_fn(|k| {
        let mut g = ops::grad(&mu[k], grid);
        let a = -p.eps / p.sigmas[k];
        g.x = g.x.scaled(a);
        g.y = g.y.scaled(a);
        g
    });
    let mut jf = grid.vector_field();
    jf.axpy(p.rho1, &j[0]);
    jf.axpy(p.rho2, &j[1]);
    let jc = j[0].clone();
    ChFluxes { j, jf, jc }
}

/// Face values (x-faces, y-faces) of the three phases; inflow faces carry the inflow composition.
pub fn face_phases(phi: &[Field; 3], grid: &Grid2D) -> [(Field, Field); 3] {
    let mut out: [(Field, Field); 3] = std::array::from_fn(|k| ops::center_to_face(&phi[k], grid));
    let (nx, ny) = (grid.nx as isize, grid.ny as isize);
    let bc = grid.bc;
    for k in 0..3 {
        let e = INFLOW_PHASES[k];
        for j in 0..ny {
            if matches!(bc.left, BoundaryCondition::Inflow { .. }) {
                out[k].0.set(0, j, e);
            }
            if matches!(bc.right, BoundaryCondition::Inflow { .. }) {
                out[k].0.set(nx, j, e);
            }
        }
        for i in 0..nx {
            if matches!(bc.bottom, BoundaryCondition::Inflow { .. }) {
                out[k].1.set(i, 0, e);
            }
            if matches!(bc.top, BoundaryCondition::Inflow { .. }) {
                out[k].1.set(i, ny, e);
            }
        }
    }
    out
}

/// φ̃_f on faces built from [`face_phases`].
pub fn face_phi_f_tilde(fp: &[(Field, Field); 3], delta: f64) -> (Field, Field) {
    let mut x = fp[0].0.clone();
    x.axpy(1.0, &fp[1].0);
    x.axpy(2.0 * delta, &fp[2].0);
    let mut y = fp[0].1.clone();
    y.axpy(1.0, &fp[1].1);
    y.axpy(2.0 * delta, &fp[2].1);
    (x, y)
}

/// Advective face fluxes φ₁v, φ₂v and 2δφ₃v.
pub fn advective_fluxes(phi: &[Field; 3], v: &VectorField, grid: &Grid2D, delta: f64) -> [VectorField; 3] {
    let fp = face_phases(phi, grid);
    let scale = [1.0, 1.0, 2.0 * delta];
    std::array::from_fn(|k| {
        let mut a = grid.vector_field();
        for j in 0..grid.ny as isize {
            for i in 0..=grid.nx as isize {
                a.x.set(i, j, scale[k] * fp[k].0.get(i, j) * v.x.get(i, j));
            }
        }
        for j in 0..=grid.ny as isize {
            for i in 0..grid.nx as isize {
                a.y.set(i, j, scale[k] * fp[k].1.get(i, j) * v.y.get(i, j));
            }
        }
        a
    })
}

/// Result of the phase-field sub-step.
#[derive(Debug, Clone)]
pub struct PhaseStep {
    pub phi: [Field; 3],
    pub mu: [Field; 3],
    /// Total face flux of each phase (advective plus Cahn–Hilliard).
    pub flux: [VectorField; 3],
    /// Explicit reaction rate R₁ per cell.
    pub r1: Field,
}

/// Reaction rate R₁ per cell from the start-of-step state.
pub fn reaction_field(state: &State, grid: &Grid2D, p: &ValidatedParams) -> Field {
    let mut r1 = grid.cell_field();
    if !p.reactions {
        return r1;
    }
    for j in 0..grid.ny as isize {
        for i in 0..grid.nx as isize {
            let r = energetics::reactions(state.phi_at(i, j), state.c.get(i, j), state.mu[0].get(i, j), state.mu[2].get(i, j), p);
            r1.set(i, j, r.r1);
        }
    }
    ops::apply_bc(&mut r1, grid, ScalarKind::Phase);
    r1
}

/// Advances φ and μ by one step.
///
/// With wᵢ = μᵢ/Σᵢ and fᵢ = Rᵢ − ∇·Aᵢ the scheme reads
/// φᵢ' = φᵢ + dt(fᵢ + εΔwᵢ), wᵢ = ∂ᵢW(Φ)/(εΣᵢ) + S(φᵢ' − φᵢ)/ε − εΔφᵢ',
/// which after elimination of φᵢ' is one constant-coefficient fourth-order solve per phase.
pub fn step_phase_fields(state: &State, dt: f64, model: &Model) -> Result<PhaseStep, StepError> {
    let grid = &model.grid;
    let p = &model.params;
    let (eps, s) = (p.eps, p.stab);
    let r1 = reaction_field(state, grid, p);
    let adv = advective_fluxes(&state.phi, &state.v, grid, p.delta);
    let rk = [1.0, 0.0, -1.0];

    let mut gw = [grid.cell_field(), grid.cell_field(), grid.cell_field()];
    for j in 0..grid.ny as isize {
        for i in 0..grid.nx as isize {
            let dw = model.well.dw(state.phi_at(i, j)).map_err(|e| StepError::StepRejected(e.to_string()))?;
            for k in 0..3 {
                gw[k].set(i, j, dw[k] / (eps * p.sigmas[k]));
            }
        }
    }

    let mut phi_new: [Field; 3] = std::array::from_fn(|_| grid.cell_field());
    let mut mu_new: [Field; 3] = std::array::from_fn(|_| grid.cell_field());
    let mut flux: [VectorField; 3] = std::array::from_fn(|_| grid.vector_field());
    for k in 0..3 {
        let mut f = ops::div(&adv[k], grid).scaled(-1.0);
        f.axpy(rk[k], &r1);
        ops::apply_bc(&mut f, grid, ScalarKind::Phase);
        let lap_f = ops::laplacian(&f, grid);
        let lap_phi = ops::laplacian(&state.phi[k], grid);
        let mut rhs = gw[k].clone();
        rhs.axpy(s * dt / eps, &f);
        rhs.axpy(-eps, &lap_phi);
        rhs.axpy(-eps * dt, &lap_f);
        let w = model.ch.solve(&rhs.interior(), |l| 1.0 - s * dt * l + eps * eps * dt * l * l);
        let mut wf = grid.cell_field();
        wf.set_interior(&w);
        ops::apply_bc(&mut wf, grid, ScalarKind::Phase);
        let lap_w = ops::laplacian(&wf, grid);
        let mut phi = state.phi[k].clone();
        phi.axpy(dt, &f);
        phi.axpy(dt * eps, &lap_w);
        ops::apply_bc(&mut phi, grid, ScalarKind::Phase);
        let mut mu = wf.scaled(p.sigmas[k]);
        ops::apply_bc(&mut mu, grid, ScalarKind::Phase);
        let mut fl = ops::grad(&wf, grid);
        fl.x = fl.x.scaled(-eps);
        fl.y = fl.y.scaled(-eps);
        fl.axpy(1.0, &adv[k]);
        phi_new[k] = phi;
        mu_new[k] = mu;
        flux[k] = fl;
    }

    let d = p.delta;
    for k in 0..3 {
        let f = &phi_new[k];
        for j in 0..grid.ny as isize {
            for i in 0..grid.nx as isize {
                let v = f.get(i, j);
                if !(v > -d && v < 1.0 + d) {
                    return Err(StepError::StepRejected(format!(
                        "phi{} = {v:.6} left (-delta, 1+delta) at ({i},{j})",
                        k + 1
                    )));
                }
            }
        }
    }
    Ok(PhaseStep { phi: phi_new, mu: mu_new, flux, r1 })
}

/// Advances c given the phase step:
/// (φ̃_c'c' − φ̃_c c)/dt + ∇·(F₁ c) = D∇·(φ̃_c'∇c') + c*R₁, with F₁ the total φ₁ flux.
pub fn step_concentration(state: &State, ps: &PhaseStep, dt: f64, model: &Model) -> Result<Field, StepError> {
    let grid = &model.grid;
    let p = &model.params;
    let (nx, ny) = (grid.nx as isize, grid.ny as isize);
    let bcs = grid.bc.scalar(ScalarKind::Concentration);

    let mut c_old = state.c.clone();
    ops::apply_scalar_bc(&mut c_old, bcs, false);
    let (cx, cy) = ops::center_to_face(&c_old, grid);
    let mut adv = grid.vector_field();
    for j in 0..ny {
        for i in 0..=nx {
            adv.x.set(i, j, ps.flux[0].x.get(i, j) * cx.get(i, j));
        }
    }
    for j in 0..=ny {
        for i in 0..nx {
            adv.y.set(i, j, ps.flux[0].y.get(i, j) * cy.get(i, j));
        }
    }
    let div_adv = ops::div(&adv, grid);

    // new-level coefficient φ̃_c' at cells and faces
    let pc_new: Field = {
        let mut f = grid.cell_field();
        for j in -1..=ny {
            for i in -1..=nx {
                f.set(i, j, phi_c_tilde([ps.phi[0].get(i, j), 0.0, 0.0], p.delta));
            }
        }
        f
    };
    let fp = face_phases(&ps.phi, grid);
    let mut bx = fp[0].0.clone();
    let mut by = fp[0].1.clone();
    bx.map_inplace(|v| v + p.delta);
    by.map_inplace(|v| v + p.delta);

    let dd = dt * p.diffusion;
    let (ax, ay) = (dd / (grid.hx * grid.hx), dd / (grid.hy * grid.hy));
    let op = |c: &Field, out: &mut Field| {
        for j in 0..ny {
            for i in 0..nx {
                let cc = c.get(i, j);
                let flux = ax * (bx.get(i + 1, j) * (c.get(i + 1, j) - cc) - bx.get(i, j) * (cc - c.get(i - 1, j)))
                    + ay * (by.get(i, j + 1) * (c.get(i, j + 1) - cc) - by.get(i, j) * (cc - c.get(i, j - 1)));
                out.set(i, j, pc_new.get(i, j) * cc - flux);
            }
        }
    };

    let mut rhs = grid.cell_field();
    for j in 0..ny {
        for i in 0..nx {
            let pc_old = phi_c_tilde(state.phi_at(i, j), p.delta);
            rhs.set(i, j, pc_old * c_old.get(i, j) - dt * div_adv.get(i, j) + dt * p.c_star * ps.r1.get(i, j));
        }
    }
    // lift the Dirichlet data
    let mut lift_in = grid.cell_field();
    ops::apply_scalar_bc(&mut lift_in, bcs, false);
    let mut lift = grid.cell_field();
    op(&lift_in, &mut lift);
    rhs.axpy(-1.0, &lift);

    let diag: Vec<f64> = {
        let mut d = Vec::with_capacity(grid.n_cells());
        for j in 0..ny {
            for i in 0..nx {
                d.push(pc_new.get(i, j) + ax * (bx.get(i + 1, j) + bx.get(i, j)) + ay * (by.get(i, j + 1) + by.get(i, j)));
            }
        }
        d
    };
    let mut work = grid.cell_field();
    let mut outf = grid.cell_field();
    let apply = |x: &[f64], y: &mut [f64]| {
        work.set_interior(x);
        ops::apply_scalar_bc(&mut work, bcs, true);
        op(&work, &mut outf);
        y.copy_from_slice(&outf.interior());
    };
    let pre = |r: &[f64], z: &mut [f64]| {
        for k in 0..r.len() {
            z[k] = r[k] / diag[k];
        }
    };
    let b = rhs.interior();
    let mut x = c_old.interior();
    let opts = KrylovOptions { rel_tol: model.tol.concentration, ..Default::default() };
    pcg(apply, pre, &b, &mut x, opts, "concentration")?;
    let mut c_new = grid.cell_field();
    c_new.set_interior(&x);

    if grid.bc.closed() {
        // the diffusion operator conserves exactly; remove the solver residual from the ion balance
        let mut target = 0.0;
        let mut have = 0.0;
        let mut weight = 0.0;
        for j in 0..ny {
            for i in 0..nx {
                target += phi_c_tilde(state.phi_at(i, j), p.delta) * c_old.get(i, j) - dt * div_adv.get(i, j)
                    + dt * p.c_star * ps.r1.get(i, j);
                have += pc_new.get(i, j) * c_new.get(i, j);
                weight += pc_new.get(i, j);
            }
        }
        let shift = (target - have) / weight;
        c_new.map_inplace(|v| v + shift);
    }
    ops::apply_scalar_bc(&mut c_new, bcs, false);
    if !c_new.interior_is_finite() {
        return Err(StepError::StepRejected("non-finite concentration".into()));
    }
    Ok(c_new)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Boundaries;
    use crate::params::{validate, ModelParams};

    fn setup(n: usize, eps: f64) -> (Grid2D, ValidatedParams) {
        let g = Grid2D::new(n, n, 1.0, 1.0, [0.0; 2], Boundaries::walls()).unwrap();
        let p = validate(&ModelParams { eps, sigma12: 1.0, sigma13: 1.5, sigma23: 2.0, ..Default::default() }).unwrap();
        (g, p)
    }

    #[test]
    fn pure_phase_has_zero_potential() {
        let (g, p) = setup(8, 0.1);
        let mut phi = [Field::constant(8, 8, 1.0), g.cell_field(), g.cell_field()];
        phi.iter_mut().for_each(|f| ops::apply_bc(f, &g, ScalarKind::Phase));
        let mu = chemical_potentials(&phi, &g, &p).unwrap();
        assert!(mu.iter().all(|m| m.interior_max_abs() < 1e-14));
    }

    #[test]
    fn random_on_plane_potentials_sum_to_zero() {
        let (g, p) = setup(12, 0.1);
        let a = Field::from_fn(12, 12, |i, j| 0.4 + 0.2 * ((i * 7 + j * 3) as f64).sin());
        let b = Field::from_fn(12, 12, |i, j| 0.3 + 0.15 * ((i * 5 + j * 11) as f64).cos());
        let mut c = Field::constant(12, 12, 1.0);
        c.axpy(-1.0, &a);
        c.axpy(-1.0, &b);
        let mut phi = [a, b, c];
        phi.iter_mut().for_each(|f| ops::apply_bc(f, &g, ScalarKind::Phase));
        let mu = chemical_potentials(&phi, &g, &p).unwrap();
        let scale = mu.iter().map(|m| m.interior_max_abs()).fold(0.0, f64::max);
        for j in 0..12 {
            for i in 0..12 {
                let s: f64 = (0..3).map(|k| mu[k].get(i, j) / p.sigmas[k]).sum();
                assert!(s.abs() <= 1e-11 * scale.max(1.0), "{s}");
            }
        }
    }

    #[test]
    fn tanh_profile_is_near_equilibrium() {
        // 1D profile between phases 1 and 2 resolved with eps/h = 16; the five-point
        // truncation error is about 5% of the potential scale at eps/h = 8
        let n = 256;
        let eps = 16.0 / n as f64;
        let (g, p) = setup(n, eps);
        let prof = |x: f64| 0.5 * (1.0 + (3.0 * (x - 0.5) / eps).tanh());
        let mut phi = [
            Field::from_fn(n, n, |i, j| 1.0 - prof(g.center(i, j)[0])),
            Field::from_fn(n, n, |i, j| prof(g.center(i, j)[0])),
            g.cell_field(),
        ];
        phi.iter_mut().for_each(|f| ops::apply_bc(f, &g, ScalarKind::Phase));
        let mu = chemical_potentials(&phi, &g, &p).unwrap();
        // ε⁻¹-scale of μ is Σᵢ·W′max/ε
        let scale = p.sigmas[0] * 36.0 * 0.0962 / eps;
        assert!(mu[0].interior_max_abs() <= 0.02 * scale, "{} {}", mu[0].interior_max_abs(), scale);
    }

    #[test]
    fn flux_examples() {
        let (g, p) = setup(8, 0.1);
        let z = g.cell_field();
        let mut mu = [Field::constant(8, 8, 2.0), z.clone(), z];
        mu.iter_mut().for_each(|f| ops::apply_bc(f, &g, ScalarKind::Phase));
        let fl = ch_fluxes(&mu, &g, &p);
        assert_eq!(fl.j[0].max_abs(), 0.0);
        // affine ramp in x: uniform flux on interior faces
        let slope = 3.0;
        mu[0] = Field::from_fn(8, 8, |i, j| slope * g.center(i, j)[0]);
        mu[1] = Field::from_fn(8, 8, |i, j| -0.5 * g.center(i, j)[1]);
        let fl = ch_fluxes(&mu, &g, &p);
        for j in 0..8 {
            for i in 1..8 {
                assert!((fl.j[0].x.get(i, j) + p.eps / p.sigmas[0] * slope).abs() < 1e-12);
                let want = p.rho1 * fl.j[0].x.get(i, j) + p.rho2 * fl.j[1].x.get(i, j);
                assert!((fl.jf.x.get(i, j) - want).abs() < 1e-15);
            }
        }
        assert_eq!(fl.jc, fl.j[0]);
    }
}
