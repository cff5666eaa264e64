//! Momentum predictor, surface tension and the fluid-fraction projection.

use crate::energetics::{self, drag};
use crate::error::StepError;
use crate::field::{Field, VectorField};
use crate::grid::{BoundaryCondition, Grid2D, ScalarBc, ScalarKind};
use crate::linalg::{bicgstab, pcg, Eigen1d, FastDiag, IterStats, KrylovOptions, Lap1d, Node1d};
use crate::model::Model;
use crate::ops;
use crate::phasefield::{face_phases, face_phi_f_tilde, PhaseStep};
use crate::state::State;

/// S̃ = −μ₂φ̃_f∇(φ₁/φ̃_f) − μ₁φ̃_f∇(φ₂/φ̃_f) − 2δφ₃∇(μ₃−μ₁−μ₂) on faces.
/// Ghosts of φ and μ must be filled.
pub fn surface_tension(phi: &[Field; 3], mu: &[Field; 3], grid: &Grid2D, delta: f64) -> VectorField {
    let (nx, ny) = (grid.nx as isize, grid.ny as isize);
    let mut pf = grid.cell_field();
    let mut a1 = grid.cell_field();
    let mut a2 = grid.cell_field();
    let mut m = grid.cell_field();
    for j in -1..=ny {
        for i in -1..=nx {
            let ph = [phi[0].get(i, j), phi[1].get(i, j), phi[2].get(i, j)];
            let f = energetics::phi_f_tilde(ph, delta);
            pf.set(i, j, f);
            a1.set(i, j, ph[0] / f);
            a2.set(i, j, ph[1] / f);
            m.set(i, j, mu[2].get(i, j) - mu[0].get(i, j) - mu[1].get(i, j));
        }
    }
    let mut s = grid.vector_field();
    let face = |f: &Field, i: isize, j: isize, di: isize, dj: isize| 0.5 * (f.get(i, j) + f.get(i - di, j - dj));
    let diff = |f: &Field, i: isize, j: isize, di: isize, dj: isize| f.get(i, j) - f.get(i - di, j - dj);
    for (di, dj, h, range_i, range_j) in [(1isize, 0isize, grid.hx, nx + 1, ny), (0, 1, grid.hy, nx, ny + 1)] {
        for j in 0..range_j {
            for i in 0..range_i {
                let pff = face(&pf, i, j, di, dj);
                let val = -face(&mu[1], i, j, di, dj) * pff * diff(&a1, i, j, di, dj) / h
                    - face(&mu[0], i, j, di, dj) * pff * diff(&a2, i, j, di, dj) / h
                    - 2.0 * delta * face(&phi[2], i, j, di, dj) * diff(&m, i, j, di, dj) / h;
                if di == 1 {
                    s.x.set(i, j, val);
                } else {
                    s.y.set(i, j, val);
                }
            }
        }
    }
    s
}

/// Velocity faces carried as unknowns of the momentum solve.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityLayout {
    pub xs: Vec<(isize, isize)>,
    pub ys: Vec<(isize, isize)>,
}

impl VelocityLayout {
    pub fn new(grid: &Grid2D) -> Self {
        let (nx, ny) = (grid.nx as isize, grid.ny as isize);
        let mut xs = Vec::new();
        for j in 0..ny {
            for i in 0..=nx {
                let interior = i > 0 && i < nx;
                if interior || (i == 0 && grid.periodic_x()) {
                    xs.push((i, j));
                }
            }
        }
        let mut ys = Vec::new();
        for j in 0..=ny {
            for i in 0..nx {
                let interior = j > 0 && j < ny;
                if interior || (j == 0 && grid.periodic_y()) {
                    ys.push((i, j));
                }
            }
        }
        VelocityLayout { xs, ys }
    }

    pub fn len(&self) -> usize {
        self.xs.len() + self.ys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn gather(&self, v: &VectorField) -> Vec<f64> {
        self.xs.iter().map(|&(i, j)| v.x.get(i, j)).chain(self.ys.iter().map(|&(i, j)| v.y.get(i, j))).collect()
    }

    pub fn scatter(&self, x: &[f64], v: &mut VectorField) {
        let n = self.xs.len();
        for (k, &(i, j)) in self.xs.iter().enumerate() {
            v.x.set(i, j, x[k]);
        }
        for (k, &(i, j)) in self.ys.iter().enumerate() {
            v.y.set(i, j, x[n + k]);
        }
    }
}

fn fill_face_ghosts_periodic(v: &mut VectorField, grid: &Grid2D) {
    let (nx, ny) = (grid.nx as isize, grid.ny as isize);
    if grid.periodic_x() {
        for j in -1..=ny {
            v.x.set(-1, j, v.x.get(nx - 1, j));
            v.x.set(nx + 1, j, v.x.get(1, j));
        }
        for j in -1..=ny + 1 {
            v.y.set(-1, j, v.y.get(nx - 1, j));
            v.y.set(nx, j, v.y.get(0, j));
        }
    }
    if grid.periodic_y() {
        for i in -1..=nx + 1 {
            v.x.set(i, -1, v.x.get(i, ny - 1));
            v.x.set(i, ny, v.x.get(i, 0));
        }
        for i in -1..=nx {
            v.y.set(i, -1, v.y.get(i, ny - 1));
            v.y.set(i, ny + 1, v.y.get(i, 1));
        }
    }
}

/// Explicit momentum convection ∇·(M ⊗ v) on the velocity control volumes, with the
/// mass flux averaged to control-volume faces and centered velocity values.
pub fn convection(m: &VectorField, v: &VectorField, grid: &Grid2D) -> VectorField {
    let (nx, ny) = (grid.nx as isize, grid.ny as isize);
    let (hx, hy) = (grid.hx, grid.hy);
    let mut m = m.clone();
    fill_face_ghosts_periodic(&mut m, grid);
    let (mx, my) = (&m.x, &m.y);
    let (u, w) = (&v.x, &v.y);
    let mut c = grid.vector_field();
    for j in 0..ny {
        for i in 0..=nx {
            if !(i > 0 && i < nx || i == 0 && grid.periodic_x()) {
                continue;
            }
            let me = 0.5 * (mx.get(i, j) + mx.get(i + 1, j));
            let mw = 0.5 * (mx.get(i - 1, j) + mx.get(i, j));
            let mn = 0.5 * (my.get(i - 1, j + 1) + my.get(i, j + 1));
            let ms = 0.5 * (my.get(i - 1, j) + my.get(i, j));
            let ue = 0.5 * (u.get(i, j) + u.get(i + 1, j));
            let uw = 0.5 * (u.get(i - 1, j) + u.get(i, j));
            let un = 0.5 * (u.get(i, j) + u.get(i, j + 1));
            let us = 0.5 * (u.get(i, j - 1) + u.get(i, j));
            c.x.set(i, j, (me * ue - mw * uw) / hx + (mn * un - ms * us) / hy);
        }
    }
    for j in 0..=ny {
        for i in 0..nx {
            if !(j > 0 && j < ny || j == 0 && grid.periodic_y()) {
                continue;
            }
            let mn = 0.5 * (my.get(i, j) + my.get(i, j + 1));
            let ms = 0.5 * (my.get(i, j - 1) + my.get(i, j));
            let me = 0.5 * (mx.get(i + 1, j - 1) + mx.get(i + 1, j));
            let mw = 0.5 * (mx.get(i, j - 1) + mx.get(i, j));
            let vn = 0.5 * (w.get(i, j) + w.get(i, j + 1));
            let vs = 0.5 * (w.get(i, j - 1) + w.get(i, j));
            let ve = 0.5 * (w.get(i, j) + w.get(i + 1, j));
            let vw = 0.5 * (w.get(i - 1, j) + w.get(i, j));
            c.y.set(i, j, (mn * vn - ms * vs) / hy + (me * ve - mw * vw) / hx);
        }
    }
    c
}

/// Viscosity at cell centers (with ghosts) and at cell corners.
pub struct Viscosity {
    pub cell: Field,
    pub corner: Field,
}

impl Viscosity {
    pub fn new(gamma_cell: Field, grid: &Grid2D) -> Self {
        let mut corner = Field::zeros(grid.nx + 1, grid.ny + 1);
        for j in 0..=grid.ny as isize {
            for i in 0..=grid.nx as isize {
                let g = 0.25
                    * (gamma_cell.get(i, j)
                        + gamma_cell.get(i - 1, j)
                        + gamma_cell.get(i, j - 1)
                        + gamma_cell.get(i - 1, j - 1));
                corner.set(i, j, g);
            }
        }
        Viscosity { cell: gamma_cell, corner }
    }
}

/// ∇·(2γ∇ˢv) on faces; velocity ghosts must be filled.
pub fn viscous_term(v: &VectorField, visc: &Viscosity, grid: &Grid2D) -> VectorField {
    let (nx, ny) = (grid.nx as isize, grid.ny as isize);
    let (hx, hy) = (grid.hx, grid.hy);
    let (u, w) = (&v.x, &v.y);
    let mut txx = grid.cell_field();
    let mut tyy = grid.cell_field();
    for j in -1..=ny {
        for i in -1..=nx {
            let g = visc.cell.get(i, j);
            if j >= 0 && j < ny {
                txx.set(i, j, 2.0 * g * (u.get(i + 1, j) - u.get(i, j)) / hx);
            }
            if i >= 0 && i < nx {
                tyy.set(i, j, 2.0 * g * (w.get(i, j + 1) - w.get(i, j)) / hy);
            }
        }
    }
    let mut txy = Field::zeros(grid.nx + 1, grid.ny + 1);
    for j in 0..=ny {
        for i in 0..=nx {
            let s = (u.get(i, j) - u.get(i, j - 1)) / hy + (w.get(i, j) - w.get(i - 1, j)) / hx;
            txy.set(i, j, visc.corner.get(i, j) * s);
        }
    }
    let mut out = grid.vector_field();
    for j in 0..ny {
        for i in 0..=nx {
            out.x.set(i, j, (txx.get(i, j) - txx.get(i - 1, j)) / hx + (txy.get(i, j + 1) - txy.get(i, j)) / hy);
        }
    }
    for j in 0..=ny {
        for i in 0..nx {
            out.y.set(i, j, (tyy.get(i, j) - tyy.get(i, j - 1)) / hy + (txy.get(i + 1, j) - txy.get(i, j)) / hx);
        }
    }
    out
}

/// The implicit momentum operator (ρ̃' + dt ρ₃d)v − dt∇·(2γ̃∇ˢv) on the layout unknowns.
pub struct MomentumOperator<'a> {
    pub grid: &'a Grid2D,
    pub layout: &'a VelocityLayout,
    pub diag: VectorField,
    pub visc: Viscosity,
    pub dt: f64,
}

impl MomentumOperator<'_> {
    /// Applies the operator to a full field whose ghosts and boundary faces are already set.
    pub fn eval_field(&self, v: &VectorField) -> Vec<f64> {
        let vt = viscous_term(v, &self.visc, self.grid);
        let n = self.layout.xs.len();
        let mut out = vec![0.0; self.layout.len()];
        for (k, &(i, j)) in self.layout.xs.iter().enumerate() {
            out[k] = self.diag.x.get(i, j) * v.x.get(i, j) - self.dt * vt.x.get(i, j);
        }
        for (k, &(i, j)) in self.layout.ys.iter().enumerate() {
            out[n + k] = self.diag.y.get(i, j) * v.y.get(i, j) - self.dt * vt.y.get(i, j);
        }
        out
    }

    pub fn apply(&self, x: &[f64], work: &mut VectorField) -> Vec<f64> {
        self.layout.scatter(x, work);
        ops::apply_velocity_bc(work, self.grid, true, true);
        fill_face_ghosts_periodic(work, self.grid);
        self.eval_field(work)
    }

    pub fn jacobi(&self) -> Vec<f64> {
        let (hx, hy) = (self.grid.hx, self.grid.hy);
        let g = &self.visc;
        let n = self.layout.xs.len();
        let mut d = vec![0.0; self.layout.len()];
        for (k, &(i, j)) in self.layout.xs.iter().enumerate() {
            d[k] = self.diag.x.get(i, j)
                + self.dt
                    * (2.0 * (g.cell.get(i, j) + g.cell.get(i - 1, j)) / (hx * hx)
                        + (g.corner.get(i, j) + g.corner.get(i, j + 1)) / (hy * hy));
        }
        for (k, &(i, j)) in self.layout.ys.iter().enumerate() {
            d[n + k] = self.diag.y.get(i, j)
                + self.dt
                    * (2.0 * (g.cell.get(i, j) + g.cell.get(i, j - 1)) / (hy * hy)
                        + (g.corner.get(i, j) + g.corner.get(i + 1, j)) / (hx * hx));
        }
        d
    }
}

/// Fast-diagonalization preconditioner for the momentum solve: each component is
/// approximated by (d̄ − dt γ̄ (2∂ₙ² + ∂ₜ²)) with mean coefficients and the
/// boundary closures of the velocity ghosts.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentumPreconditioner {
    pub fx: FastDiag,
    pub fy: FastDiag,
}

fn node_kind(lo: BoundaryCondition, hi: BoundaryCondition) -> Node1d {
    use BoundaryCondition::*;
    match (lo, hi) {
        (Periodic, _) | (_, Periodic) => Node1d::Periodic,
        (Outflow, Outflow) => Node1d::ExtrapolateExtrapolate,
        (Outflow, _) => Node1d::ExtrapolateDirichlet,
        (_, Outflow) => Node1d::DirichletExtrapolate,
        _ => Node1d::DirichletDirichlet,
    }
}

fn tangential_kind(lo: BoundaryCondition, hi: BoundaryCondition) -> Lap1d {
    use BoundaryCondition::*;
    let dirichlet = |b: BoundaryCondition| matches!(b, Wall { .. } | Inflow { .. });
    match (lo, hi) {
        (Periodic, _) | (_, Periodic) => Lap1d::Periodic,
        (a, b) => match (dirichlet(a), dirichlet(b)) {
            (true, true) => Lap1d::DirichletDirichlet,
            (true, false) => Lap1d::DirichletNeumann,
            (false, true) => Lap1d::NeumannDirichlet,
            (false, false) => Lap1d::NeumannNeumann,
        },
    }
}

impl MomentumPreconditioner {
    pub fn new(grid: &Grid2D) -> Self {
        let b = &grid.bc;
        let fx = FastDiag::from_eigen(
            Eigen1d::node_laplacian(node_kind(b.left, b.right), grid.nx, grid.hx),
            Eigen1d::cell_laplacian(tangential_kind(b.bottom, b.top), grid.ny, grid.hy),
        );
        let fy = FastDiag::from_eigen(
            Eigen1d::cell_laplacian(tangential_kind(b.left, b.right), grid.nx, grid.hx),
            Eigen1d::node_laplacian(node_kind(b.bottom, b.top), grid.ny, grid.hy),
        );
        MomentumPreconditioner { fx, fy }
    }

    /// z = P⁻¹r for mean diagonal `d`, mean viscosity `g` and step `dt`.
    pub fn apply(&self, r: &[f64], d: f64, g: f64, dt: f64) -> Vec<f64> {
        let n = self.fx.ex.n * self.fx.ey.n;
        let mut z = self.fx.solve_separable(&r[..n], |lx, ly| d - dt * g * (2.0 * lx + ly));
        z.extend(self.fy.solve_separable(&r[n..], |lx, ly| d - dt * g * (lx + 2.0 * ly)));
        z
    }
}

fn has_outflow(grid: &Grid2D) -> bool {
    crate::grid::Side::ALL.iter().any(|&s| grid.bc.get(s) == BoundaryCondition::Outflow)
}

/// Predicted velocity v* from all momentum terms except the pressure:
/// (ρ̃'v* − ρ̃v)/dt + ∇·(M⊗v) = ∇·(2γ̃'∇ˢv*) − ρ₃d(φ̃_f')v* + S̃' + ½ρ₁vR_f,
/// with M = ρ₁F₁ + ρ₂F₂ the mass flux of the phase step.
pub fn momentum_predictor(state: &State, ps: &PhaseStep, dt: f64, model: &Model) -> Result<(VectorField, IterStats), StepError> {
    let grid = &model.grid;
    let p = &model.params;
    let layout = &model.layout;
    let new_state_view = State {
        phi: ps.phi.clone(),
        mu: ps.mu.clone(),
        c: state.c.clone(),
        p: state.p.clone(),
        v: state.v.clone(),
        time: state.time,
    };
    let (rho_old_x, rho_old_y) = ops::center_to_face(&state.rho_f_tilde(p), grid);
    let (rho_new_x, rho_new_y) = ops::center_to_face(&new_state_view.rho_f_tilde(p), grid);
    let (pf_x, pf_y) = ops::center_to_face(&new_state_view.phi_f_tilde(p), grid);
    let visc = Viscosity::new(new_state_view.gamma_tilde(p), grid);
    let (rf_x, rf_y) = ops::center_to_face(&ps.r1, grid);

    let mut mass = grid.vector_field();
    mass.axpy(p.rho1, &ps.flux[0]);
    mass.axpy(p.rho2, &ps.flux[1]);
    let mut v_old = state.v.clone();
    ops::apply_velocity_bc(&mut v_old, grid, false, false);
    fill_face_ghosts_periodic(&mut v_old, grid);
    let conv = convection(&mass, &v_old, grid);
    let st = surface_tension(&ps.phi, &ps.mu, grid, p.delta);

    let mut diag = grid.vector_field();
    let mut rhs_f = grid.vector_field();
    let rho3 = p.rho3;
    for &(i, j) in &layout.xs {
        diag.x.set(i, j, rho_new_x.get(i, j) + dt * rho3 * drag(pf_x.get(i, j), p.d0));
        let u = v_old.x.get(i, j);
        let b = rho_old_x.get(i, j) * u
            + dt * (-conv.x.get(i, j) + st.x.get(i, j) + 0.5 * p.rho1 * u * rf_x.get(i, j));
        rhs_f.x.set(i, j, b);
    }
    for &(i, j) in &layout.ys {
        diag.y.set(i, j, rho_new_y.get(i, j) + dt * rho3 * drag(pf_y.get(i, j), p.d0));
        let w = v_old.y.get(i, j);
        let b = rho_old_y.get(i, j) * w
            + dt * (-conv.y.get(i, j) + st.y.get(i, j) + 0.5 * p.rho1 * w * rf_y.get(i, j));
        rhs_f.y.set(i, j, b);
    }
    let op = MomentumOperator { grid, layout, diag, visc, dt };

    // boundary data enters through the lift A(0 + boundary values)
    let mut lift_field = grid.vector_field();
    ops::apply_velocity_bc(&mut lift_field, grid, false, true);
    fill_face_ghosts_periodic(&mut lift_field, grid);
    let lift = op.eval_field(&lift_field);
    let mut b = layout.gather(&rhs_f);
    for k in 0..b.len() {
        b[k] -= lift[k];
    }

    let nu = layout.len() as f64;
    let d_mean = layout.xs.iter().map(|&(i, j)| op.diag.x.get(i, j)).chain(layout.ys.iter().map(|&(i, j)| op.diag.y.get(i, j))).sum::<f64>() / nu;
    let g_mean = op.visc.cell.interior_sum() / grid.n_cells() as f64;
    let mut x = layout.gather(&v_old);
    let mut work = grid.vector_field();
    let opts = KrylovOptions { rel_tol: model.tol.momentum, abs_tol: 1e-300, ..Default::default() };
    let apply = |x: &[f64], y: &mut [f64]| y.copy_from_slice(&op.apply(x, &mut work));
    let pre = |r: &[f64], z: &mut [f64]| z.copy_from_slice(&model.momentum_pre.apply(r, d_mean, g_mean, dt));
    let stats = if has_outflow(grid) {
        bicgstab(apply, pre, &b, &mut x, opts, "momentum")?
    } else {
        pcg(apply, pre, &b, &mut x, opts, "momentum")?
    };
    let mut v_star = grid.vector_field();
    layout.scatter(&x, &mut v_star);
    ops::apply_velocity_bc(&mut v_star, grid, false, true);
    fill_face_ghosts_periodic(&mut v_star, grid);
    Ok((v_star, stats))
}

/// Coefficient fields of the projection: φ̃_f, ρ̃_f and β = φ̃_f²/ρ̃_f on faces,
/// β set to zero on faces with prescribed normal velocity.
pub struct ProjectionCoefficients {
    pub pf: (Field, Field),
    pub rho: (Field, Field),
    pub beta: (Field, Field),
}

impl ProjectionCoefficients {
    pub fn new(phi: &[Field; 3], grid: &Grid2D, model: &Model) -> Self {
        let p = &model.params;
        let fp = face_phases(phi, grid);
        let pf = face_phi_f_tilde(&fp, p.delta);
        let mut rx = fp[0].0.scaled(p.rho1);
        rx.axpy(p.rho2, &fp[1].0);
        rx.map_inplace(|v| v + (p.rho1 + p.rho2) * p.delta);
        let mut ry = fp[0].1.scaled(p.rho1);
        ry.axpy(p.rho2, &fp[1].1);
        ry.map_inplace(|v| v + (p.rho1 + p.rho2) * p.delta);
        let (nx, ny) = (grid.nx as isize, grid.ny as isize);
        let mut bx = grid.xface_field();
        let mut by = grid.yface_field();
        for j in 0..ny {
            for i in 0..=nx {
                if grid.xface_free(i) {
                    bx.set(i, j, pf.0.get(i, j).powi(2) / rx.get(i, j));
                }
            }
            if grid.periodic_x() {
                bx.set(nx, j, bx.get(0, j));
            }
        }
        for i in 0..nx {
            for j in 0..=ny {
                if grid.yface_free(j) {
                    by.set(i, j, pf.1.get(i, j).powi(2) / ry.get(i, j));
                }
            }
            if grid.periodic_y() {
                by.set(i, ny, by.get(i, 0));
            }
        }
        ProjectionCoefficients { pf, rho: (rx, ry), beta: (bx, by) }
    }

    fn mean_beta(&self, grid: &Grid2D) -> f64 {
        let (mut s, mut n) = (0.0, 0usize);
        for j in 0..grid.ny as isize {
            for i in 0..=grid.nx as isize {
                if grid.xface_free(i) {
                    s += self.beta.0.get(i, j);
                    n += 1;
                }
            }
        }
        for j in 0..=grid.ny as isize {
            for i in 0..grid.nx as isize {
                if grid.yface_free(j) {
                    s += self.beta.1.get(i, j);
                    n += 1;
                }
            }
        }
        if n == 0 {
            1.0
        } else {
            s / n as f64
        }
    }
}

/// div(φ̃_f v) per cell.
pub fn constrained_divergence(v: &VectorField, pf: &(Field, Field), grid: &Grid2D) -> Field {
    let mut flux = grid.vector_field();
    for j in 0..grid.ny as isize {
        for i in 0..=grid.nx as isize {
            flux.x.set(i, j, pf.0.get(i, j) * v.x.get(i, j));
        }
    }
    for j in 0..=grid.ny as isize {
        for i in 0..grid.nx as isize {
            flux.y.set(i, j, pf.1.get(i, j) * v.y.get(i, j));
        }
    }
    ops::div(&flux, grid)
}

/// Outcome of the projection.
#[derive(Debug, Clone)]
pub struct Projection {
    pub v: VectorField,
    pub p: Field,
    /// max |div(φ̃_f v)| after correction.
    pub residual: f64,
    pub stats: IterStats,
}

/// Solves ∇·(β∇p) = ∇·(φ̃_f v*)/dt and corrects v = v* − dt(φ̃_f/ρ̃_f)∇p.
pub fn pressure_project(
    v_star: &VectorField,
    phi: &[Field; 3],
    p_guess: &Field,
    dt: f64,
    model: &Model,
) -> Result<Projection, StepError> {
    let grid = &model.grid;
    let (nx, ny) = (grid.nx as isize, grid.ny as isize);
    let coef = ProjectionCoefficients::new(phi, grid, model);
    let bcs = grid.bc.scalar(ScalarKind::Pressure);
    let singular = !bcs.iter().any(|b| matches!(b, ScalarBc::Dirichlet(_)));
    let (bx, by) = (&coef.beta.0, &coef.beta.1);
    let (ax, ay) = (1.0 / (grid.hx * grid.hx), 1.0 / (grid.hy * grid.hy));

    let div_star = constrained_divergence(v_star, &coef.pf, grid);
    let b: Vec<f64> = div_star.interior().iter().map(|d| -d / dt).collect();

    let mut work = grid.cell_field();
    let apply = |x: &[f64], y: &mut [f64]| {
        work.set_interior(x);
        ops::apply_scalar_bc(&mut work, bcs, true);
        let mut k = 0;
        for j in 0..ny {
            for i in 0..nx {
                let c = work.get(i, j);
                let l = ax * (bx.get(i + 1, j) * (work.get(i + 1, j) - c) - bx.get(i, j) * (c - work.get(i - 1, j)))
                    + ay * (by.get(i, j + 1) * (work.get(i, j + 1) - c) - by.get(i, j) * (c - work.get(i, j - 1)));
                y[k] = -l;
                k += 1;
            }
        }
    };
    let beta_bar = coef.mean_beta(grid);
    let pre = |r: &[f64], z: &mut [f64]| {
        let s = model.pressure_fd.solve(r, |l| -beta_bar * l);
        z.copy_from_slice(&s);
    };
    let mut x = p_guess.interior();
    let opts = KrylovOptions { rel_tol: model.tol.pressure, abs_tol: 1e-300, max_iter: 10_000, deflate_mean: singular };
    let stats = pcg(apply, pre, &b, &mut x, opts, "pressure").map_err(StepError::PoissonNonconvergence)?;
    let mut pr = grid.cell_field();
    pr.set_interior(&x);
    ops::apply_scalar_bc(&mut pr, bcs, false);

    let mut v = v_star.clone();
    for j in 0..ny {
        for i in 0..=nx {
            if grid.xface_free(i) {
                let g = (pr.get(i, j) - pr.get(i - 1, j)) / grid.hx;
                let corr = dt * coef.pf.0.get(i, j) / coef.rho.0.get(i, j) * g;
                v.x.set(i, j, v_star.x.get(i, j) - corr);
            }
        }
    }
    for j in 0..=ny {
        for i in 0..nx {
            if grid.yface_free(j) {
                let g = (pr.get(i, j) - pr.get(i, j - 1)) / grid.hy;
                let corr = dt * coef.pf.1.get(i, j) / coef.rho.1.get(i, j) * g;
                v.y.set(i, j, v_star.y.get(i, j) - corr);
            }
        }
    }
    ops::apply_velocity_bc(&mut v, grid, false, false);
    fill_face_ghosts_periodic(&mut v, grid);
    let residual = constrained_divergence(&v, &coef.pf, grid).interior_max_abs();
    if !v.is_finite() {
        return Err(StepError::StepRejected("non-finite velocity".into()));
    }
    Ok(Projection { v, p: pr, residual, stats })
}

/// Projects the velocity of `st` onto ∇·(φ̃_f v) = 0 with its boundary data, for initial
/// states whose boundaries carry inflow. Returns the divergence residual.
pub fn project_initial_velocity(st: &mut State, model: &Model) -> Result<f64, StepError> {
    let zero = model.grid.cell_field();
    let pr = pressure_project(&st.v, &st.phi, &zero, model.params.dt, model)?;
    st.v = pr.v;
    Ok(pr.residual)
}

/// Result of the flow sub-step.
#[derive(Debug, Clone)]
pub struct FlowStep {
    pub v: VectorField,
    pub p: Field,
    pub residual: f64,
    pub momentum_iters: usize,
    pub pressure_iters: usize,
}

/// Momentum predictor followed by the projection.
pub fn step_flow(state: &State, ps: &PhaseStep, dt: f64, model: &Model) -> Result<FlowStep, StepError> {
    let (v_star, ms) = momentum_predictor(state, ps, dt, model)?;
    let pr = pressure_project(&v_star, &ps.phi, &state.p, dt, model)?;
    Ok(FlowStep { v: pr.v, p: pr.p, residual: pr.residual, momentum_iters: ms.iterations, pressure_iters: pr.stats.iterations })
}
