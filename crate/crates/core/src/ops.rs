//! Ghost filling and second-order difference operators on the MAC grid.

use crate::field::{Field, VectorField};
use crate::grid::{BoundaryCondition, Grid2D, ScalarBc, ScalarKind, Side};

/// Fills the ghost layer of a cell-centered field. Order of `bcs`: left, right, bottom, top.
/// With `homogeneous` set, Dirichlet values are replaced by zero (for operator application).
pub fn apply_scalar_bc(f: &mut Field, bcs: [ScalarBc; 4], homogeneous: bool) {
    let nx = f.ni() as isize;
    let ny = f.nj() as isize;
    let dv = |v: f64| if homogeneous { 0.0 } else { v };
    for j in 0..ny {
        match bcs[0] {
            ScalarBc::Neumann => f.set(-1, j, f.get(0, j)),
            ScalarBc::Dirichlet(v) => f.set(-1, j, 2.0 * dv(v) - f.get(0, j)),
            ScalarBc::Periodic => f.set(-1, j, f.get(nx - 1, j)),
        }
        match bcs[1] {
            ScalarBc::Neumann => f.set(nx, j, f.get(nx - 1, j)),
            ScalarBc::Dirichlet(v) => f.set(nx, j, 2.0 * dv(v) - f.get(nx - 1, j)),
            ScalarBc::Periodic => f.set(nx, j, f.get(0, j)),
        }
    }
    for i in -1..=nx {
        match bcs[2] {
            ScalarBc::Neumann => f.set(i, -1, f.get(i, 0)),
            ScalarBc::Dirichlet(v) => f.set(i, -1, 2.0 * dv(v) - f.get(i, 0)),
            ScalarBc::Periodic => f.set(i, -1, f.get(i, ny - 1)),
        }
        match bcs[3] {
            ScalarBc::Neumann => f.set(i, ny, f.get(i, ny - 1)),
            ScalarBc::Dirichlet(v) => f.set(i, ny, 2.0 * dv(v) - f.get(i, ny - 1)),
            ScalarBc::Periodic => f.set(i, ny, f.get(i, 0)),
        }
    }
}

/// Fills ghosts of a cell-centered field according to the grid's tags for `kind`.
pub fn apply_bc(f: &mut Field, grid: &Grid2D, kind: ScalarKind) {
    apply_scalar_bc(f, grid.bc.scalar(kind), false);
}

fn inflow_normal(side: BoundaryCondition, s: f64, sign: f64, homogeneous: bool) -> Option<f64> {
    match side {
        BoundaryCondition::Inflow { profile, .. } => Some(if homogeneous { 0.0 } else { sign * profile.at(s) }),
        _ => None,
    }
}

/// Fills boundary faces and ghosts of a staggered velocity field.
///
/// Normal faces on walls and symmetry planes are set to zero, inflow faces to the profile,
/// outflow faces copy the adjacent interior face unless `extrapolate_outflow` is false
/// (after a projection has set them). Tangential ghosts realize the wall velocity (or zero)
/// on the boundary line, a mirror on symmetry/outflow sides.
pub fn apply_velocity_bc(v: &mut VectorField, grid: &Grid2D, homogeneous: bool, extrapolate_outflow: bool) {
    let nx = grid.nx as isize;
    let ny = grid.ny as isize;
    let bc = grid.bc;
    let hom = |x: f64| if homogeneous { 0.0 } else { x };

    // normal component on left/right, u on x-faces
    let u = &mut v.x;
    for j in 0..ny {
        let s = (j as f64 + 0.5) / ny as f64;
        for (side, b, inner, ghost, sign) in [(bc.left, 0, 1, -1, 1.0), (bc.right, nx, nx - 1, nx + 1, -1.0)] {
            if side == BoundaryCondition::Periodic {
                continue;
            }
            let val = if let Some(x) = inflow_normal(side, s, sign, homogeneous) {
                x
            } else if side == BoundaryCondition::Outflow {
                if extrapolate_outflow { u.get(inner, j) } else { u.get(b, j) }
            } else {
                0.0
            };
            u.set(b, j, val);
            u.set(ghost, j, 2.0 * val - u.get(inner, j));
        }
        if bc.left == BoundaryCondition::Periodic {
            u.set(nx, j, u.get(0, j));
            u.set(-1, j, u.get(nx - 1, j));
            u.set(nx + 1, j, u.get(1, j));
        }
    }
    // tangential ghosts of u on bottom/top
    for i in -1..=nx + 1 {
        for (side, ghost, inner, other) in [(bc.bottom, -1, 0, ny - 1), (bc.top, ny, ny - 1, 0)] {
            let val = match side {
                BoundaryCondition::Wall { tangential_velocity } => 2.0 * hom(tangential_velocity) - u.get(i, inner),
                BoundaryCondition::Symmetry | BoundaryCondition::Outflow => u.get(i, inner),
                BoundaryCondition::Inflow { .. } => -u.get(i, inner),
                BoundaryCondition::Periodic => u.get(i, other),
            };
            u.set(i, ghost, val);
        }
    }

    // normal component on bottom/top, v on y-faces
    let w = &mut v.y;
    for i in 0..nx {
        let s = (i as f64 + 0.5) / nx as f64;
        for (side, b, inner, ghost, sign) in [(bc.bottom, 0, 1, -1, 1.0), (bc.top, ny, ny - 1, ny + 1, -1.0)] {
            if side == BoundaryCondition::Periodic {
                continue;
            }
            let val = if let Some(x) = inflow_normal(side, s, sign, homogeneous) {
                x
            } else if side == BoundaryCondition::Outflow {
                if extrapolate_outflow { w.get(i, inner) } else { w.get(i, b) }
            } else {
                0.0
            };
            w.set(i, b, val);
            w.set(i, ghost, 2.0 * val - w.get(i, inner));
        }
        if bc.bottom == BoundaryCondition::Periodic {
            w.set(i, ny, w.get(i, 0));
            w.set(i, -1, w.get(i, ny - 1));
            w.set(i, ny + 1, w.get(i, 1));
        }
    }
    for j in -1..=ny + 1 {
        for (side, ghost, inner, other) in [(bc.left, -1, 0, nx - 1), (bc.right, nx, nx - 1, 0)] {
            let val = match side {
                // the tangential wall velocity of a vertical wall moves along y
                BoundaryCondition::Wall { tangential_velocity } => 2.0 * hom(tangential_velocity) - w.get(inner, j),
                BoundaryCondition::Symmetry | BoundaryCondition::Outflow => w.get(inner, j),
                BoundaryCondition::Inflow { .. } => -w.get(inner, j),
                BoundaryCondition::Periodic => w.get(other, j),
            };
            w.set(ghost, j, val);
        }
    }
}

/// Face gradient of a cell field; ghosts must be filled.
pub fn grad(f: &Field, grid: &Grid2D) -> VectorField {
    let mut g = grid.vector_field();
    let (nx, ny) = (grid.nx as isize, grid.ny as isize);
    for j in 0..ny {
        for i in 0..=nx {
            g.x.set(i, j, (f.get(i, j) - f.get(i - 1, j)) / grid.hx);
        }
    }
    for j in 0..=ny {
        for i in 0..nx {
            g.y.set(i, j, (f.get(i, j) - f.get(i, j - 1)) / grid.hy);
        }
    }
    g
}

/// Cell divergence of a face field.
pub fn div(v: &VectorField, grid: &Grid2D) -> Field {
    let mut d = grid.cell_field();
    for j in 0..grid.ny as isize {
        for i in 0..grid.nx as isize {
            d.set(
                i,
                j,
                (v.x.get(i + 1, j) - v.x.get(i, j)) / grid.hx + (v.y.get(i, j + 1) - v.y.get(i, j)) / grid.hy,
            );
        }
    }
    d
}

/// Five-point Laplacian; ghosts must be filled.
pub fn laplacian(f: &Field, grid: &Grid2D) -> Field {
    let mut out = grid.cell_field();
    let (ax, ay) = (1.0 / (grid.hx * grid.hx), 1.0 / (grid.hy * grid.hy));
    for j in 0..grid.ny as isize {
        for i in 0..grid.nx as isize {
            let c = f.get(i, j);
            out.set(
                i,
                j,
                ax * (f.get(i + 1, j) - 2.0 * c + f.get(i - 1, j)) + ay * (f.get(i, j + 1) - 2.0 * c + f.get(i, j - 1)),
            );
        }
    }
    out
}

/// Arithmetic face averages (x-faces, y-faces) of a cell field; ghosts must be filled.
pub fn center_to_face(f: &Field, grid: &Grid2D) -> (Field, Field) {
    let mut fx = grid.xface_field();
    let mut fy = grid.yface_field();
    let (nx, ny) = (grid.nx as isize, grid.ny as isize);
    for j in 0..ny {
        for i in 0..=nx {
            fx.set(i, j, 0.5 * (f.get(i, j) + f.get(i - 1, j)));
        }
    }
    for j in 0..=ny {
        for i in 0..nx {
            fy.set(i, j, 0.5 * (f.get(i, j) + f.get(i, j - 1)));
        }
    }
    (fx, fy)
}

/// Cell averages of the two face components.
pub fn face_to_center(v: &VectorField, grid: &Grid2D) -> (Field, Field) {
    let mut cx = grid.cell_field();
    let mut cy = grid.cell_field();
    for j in 0..grid.ny as isize {
        for i in 0..grid.nx as isize {
            cx.set(i, j, 0.5 * (v.x.get(i, j) + v.x.get(i + 1, j)));
            cy.set(i, j, 0.5 * (v.y.get(i, j) + v.y.get(i, j + 1)));
        }
    }
    (cx, cy)
}

/// Σ over faces of squared face differences divided by h², for a field with
/// Neumann or periodic ghosts (boundary faces carry no gradient).
pub fn gradient_energy_sum(f: &Field, grid: &Grid2D) -> f64 {
    let (nx, ny) = (grid.nx as isize, grid.ny as isize);
    let (ax, ay) = (1.0 / (grid.hx * grid.hx), 1.0 / (grid.hy * grid.hy));
    let mut s = 0.0;
    for j in 0..ny {
        for i in 1..nx {
            let d = f.get(i, j) - f.get(i - 1, j);
            s += ax * d * d;
        }
        if grid.periodic_x() {
            let d = f.get(0, j) - f.get(nx - 1, j);
            s += ax * d * d;
        }
    }
    for i in 0..nx {
        for j in 1..ny {
            let d = f.get(i, j) - f.get(i, j - 1);
            s += ay * d * d;
        }
        if grid.periodic_y() {
            let d = f.get(i, 0) - f.get(i, ny - 1);
            s += ay * d * d;
        }
    }
    s
}

/// Quadrature weights of vertical faces 0..=nx (trapezoid, or unit weights with the
/// duplicate periodic face dropped).
pub fn face_weights_x(grid: &Grid2D) -> Vec<f64> {
    face_weights(grid.nx, grid.periodic_x())
}

pub fn face_weights_y(grid: &Grid2D) -> Vec<f64> {
    face_weights(grid.ny, grid.periodic_y())
}

fn face_weights(n: usize, periodic: bool) -> Vec<f64> {
    let mut w = vec![1.0; n + 1];
    if periodic {
        w[n] = 0.0;
    } else {
        w[0] = 0.5;
        w[n] = 0.5;
    }
    w
}

/// Midpoint-rule integral of a cell field.
pub fn integrate(f: &Field, grid: &Grid2D) -> f64 {
    f.interior_sum() * grid.cell_area()
}

/// Net outward boundary flux of a face field, Σ v·n h.
pub fn boundary_flux(v: &VectorField, grid: &Grid2D) -> f64 {
    let (nx, ny) = (grid.nx as isize, grid.ny as isize);
    let mut s = 0.0;
    for j in 0..ny {
        s += (v.x.get(nx, j) - v.x.get(0, j)) * grid.hy;
    }
    for i in 0..nx {
        s += (v.y.get(i, ny) - v.y.get(i, 0)) * grid.hx;
    }
    s
}

/// Side containing the given boundary index, for diagnostics.
pub fn side_of_xface(grid: &Grid2D, i: isize) -> Option<Side> {
    if i == 0 {
        Some(Side::Left)
    } else if i == grid.nx as isize {
        Some(Side::Right)
    } else {
        None
    }
}
