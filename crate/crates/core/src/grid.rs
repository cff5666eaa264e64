//! Uniform 2D MAC grid geometry and boundary tags.

use crate::error::FieldError;
use crate::field::{Field, VectorField};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
    Bottom,
    Top,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::Left, Side::Right, Side::Bottom, Side::Top];
}

/// Velocity profile imposed on an inflow side, as a function of the
/// normalized coordinate s ∈ [0, 1] along the side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InflowProfile {
    Uniform(f64),
    /// Poiseuille profile with the given peak speed.
    Parabolic(f64),
}

impl InflowProfile {
    pub fn at(&self, s: f64) -> f64 {
        match *self {
            InflowProfile::Uniform(u) => u,
            InflowProfile::Parabolic(u) => 4.0 * u * s * (1.0 - s),
        }
    }
}

/// Physical boundary kind of one side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundaryCondition {
    /// No penetration; tangential velocity prescribed (a moving lid when non-zero).
    Wall { tangential_velocity: f64 },
    /// Free slip mirror plane.
    Symmetry,
    /// Prescribed inward velocity, pure phase 1 and Dirichlet concentration.
    Inflow { profile: InflowProfile, concentration: f64 },
    /// Zero-gradient velocity, zero pressure, zero diffusive flux.
    Outflow,
    Periodic,
}

impl BoundaryCondition {
    pub const WALL: BoundaryCondition = BoundaryCondition::Wall { tangential_velocity: 0.0 };
}

/// Ghost rule for a cell-centered scalar on one side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScalarBc {
    Neumann,
    /// Value on the boundary face.
    Dirichlet(f64),
    Periodic,
}

/// Which physical scalar a boundary rule is requested for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScalarKind {
    /// Phase fields and chemical potentials.
    Phase,
    Concentration,
    Pressure,
}

impl BoundaryCondition {
    pub fn scalar(&self, kind: ScalarKind) -> ScalarBc {
        match (self, kind) {
            (BoundaryCondition::Periodic, _) => ScalarBc::Periodic,
            (BoundaryCondition::Inflow { concentration, .. }, ScalarKind::Concentration) => {
                ScalarBc::Dirichlet(*concentration)
            }
            (BoundaryCondition::Outflow, ScalarKind::Pressure) => ScalarBc::Dirichlet(0.0),
            _ => ScalarBc::Neumann,
        }
    }
}

/// Boundary tags of the four sides.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Boundaries {
    pub left: BoundaryCondition,
    pub right: BoundaryCondition,
    pub bottom: BoundaryCondition,
    pub top: BoundaryCondition,
}

impl Boundaries {
    pub fn walls() -> Self {
        let w = BoundaryCondition::WALL;
        Boundaries { left: w, right: w, bottom: w, top: w }
    }

    pub fn get(&self, s: Side) -> BoundaryCondition {
        match s {
            Side::Left => self.left,
            Side::Right => self.right,
            Side::Bottom => self.bottom,
            Side::Top => self.top,
        }
    }

    pub fn scalar(&self, kind: ScalarKind) -> [ScalarBc; 4] {
        [
            self.left.scalar(kind),
            self.right.scalar(kind),
            self.bottom.scalar(kind),
            self.top.scalar(kind),
        ]
    }

    /// True when every side is a wall or symmetry plane, i.e. nothing crosses the boundary.
    pub fn closed(&self) -> bool {
        Side::ALL
            .iter()
            .all(|&s| matches!(self.get(s), BoundaryCondition::Wall { .. } | BoundaryCondition::Symmetry | BoundaryCondition::Periodic))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid2D {
    pub nx: usize,
    pub ny: usize,
    pub hx: f64,
    pub hy: f64,
    pub origin: [f64; 2],
    pub bc: Boundaries,
}

impl Grid2D {
    pub fn new(nx: usize, ny: usize, lx: f64, ly: f64, origin: [f64; 2], bc: Boundaries) -> Result<Self, FieldError> {
        if nx < 4 || ny < 4 {
            return Err(FieldError::BadGrid(format!("need nx, ny >= 4 (got {nx} x {ny})")));
        }
        if !(lx > 0.0 && ly > 0.0) {
            return Err(FieldError::BadGrid("domain lengths must be positive".into()));
        }
        let px = (bc.left == BoundaryCondition::Periodic) as u8 + (bc.right == BoundaryCondition::Periodic) as u8;
        let py = (bc.bottom == BoundaryCondition::Periodic) as u8 + (bc.top == BoundaryCondition::Periodic) as u8;
        if px == 1 || py == 1 {
            return Err(FieldError::UnsupportedBc("periodic sides must come in opposite pairs".into()));
        }
        Ok(Grid2D { nx, ny, hx: lx / nx as f64, hy: ly / ny as f64, origin, bc })
    }

    pub fn lx(&self) -> f64 {
        self.hx * self.nx as f64
    }
    pub fn ly(&self) -> f64 {
        self.hy * self.ny as f64
    }
    pub fn cell_area(&self) -> f64 {
        self.hx * self.hy
    }
    pub fn h_min(&self) -> f64 {
        self.hx.min(self.hy)
    }
    pub fn periodic_x(&self) -> bool {
        self.bc.left == BoundaryCondition::Periodic
    }
    pub fn periodic_y(&self) -> bool {
        self.bc.bottom == BoundaryCondition::Periodic
    }
    pub fn n_cells(&self) -> usize {
        self.nx * self.ny
    }

    /// Center of cell (i, j).
    pub fn center(&self, i: isize, j: isize) -> [f64; 2] {
        [self.origin[0] + (i as f64 + 0.5) * self.hx, self.origin[1] + (j as f64 + 0.5) * self.hy]
    }
    /// Midpoint of vertical face (i, j), between cells i−1 and i.
    pub fn xface(&self, i: isize, j: isize) -> [f64; 2] {
        [self.origin[0] + i as f64 * self.hx, self.origin[1] + (j as f64 + 0.5) * self.hy]
    }
    /// Midpoint of horizontal face (i, j), between cells j−1 and j.
    pub fn yface(&self, i: isize, j: isize) -> [f64; 2] {
        [self.origin[0] + (i as f64 + 0.5) * self.hx, self.origin[1] + j as f64 * self.hy]
    }

    pub fn cell_field(&self) -> Field {
        Field::zeros(self.nx, self.ny)
    }
    pub fn xface_field(&self) -> Field {
        Field::zeros(self.nx + 1, self.ny)
    }
    pub fn yface_field(&self) -> Field {
        Field::zeros(self.nx, self.ny + 1)
    }
    pub fn vector_field(&self) -> VectorField {
        VectorField::zeros(self.nx, self.ny)
    }

    /// Warning text when the interface is under-resolved (ε/h < 6).
    pub fn resolution_warning(&self, eps: f64) -> Option<String> {
        let r = eps / self.hx.max(self.hy);
        (r < 6.0).then(|| format!("interface under-resolved: eps/h = {r:.2} < 6"))
    }

    /// Whether the normal velocity on vertical face i is an unknown (not prescribed).
    pub fn xface_free(&self, i: isize) -> bool {
        let n = self.nx as isize;
        if i > 0 && i < n {
            return true;
        }
        let side = if i == 0 { self.bc.left } else { self.bc.right };
        match side {
            BoundaryCondition::Periodic => i == 0,
            BoundaryCondition::Outflow => true,
            _ => false,
        }
    }

    pub fn yface_free(&self, j: isize) -> bool {
        let n = self.ny as isize;
        if j > 0 && j < n {
            return true;
        }
        let side = if j == 0 { self.bc.bottom } else { self.bc.top };
        match side {
            BoundaryCondition::Periodic => j == 0,
            BoundaryCondition::Outflow => true,
            _ => false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometry() {
        let g = Grid2D::new(8, 4, 2.0, 1.0, [1.0, 0.0], Boundaries::walls()).unwrap();
        assert_eq!(g.hx, 0.25);
        assert_eq!(g.center(0, 0), [1.125, 0.125]);
        assert_eq!(g.xface(8, 0)[0], 3.0);
        assert_eq!(g.yface(0, 4)[1], 1.0);
        assert!(g.resolution_warning(0.5).is_some());
        assert!(g.resolution_warning(2.0).is_none());
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(Grid2D::new(3, 8, 1.0, 1.0, [0.0; 2], Boundaries::walls()).is_err());
        let mut b = Boundaries::walls();
        b.left = BoundaryCondition::Periodic;
        assert!(matches!(Grid2D::new(8, 8, 1.0, 1.0, [0.0; 2], b), Err(FieldError::UnsupportedBc(_))));
    }

    #[test]
    fn scalar_rules() {
        let inflow = BoundaryCondition::Inflow { profile: InflowProfile::Parabolic(1.0), concentration: 0.8 };
        assert_eq!(inflow.scalar(ScalarKind::Concentration), ScalarBc::Dirichlet(0.8));
        assert_eq!(inflow.scalar(ScalarKind::Phase), ScalarBc::Neumann);
        assert_eq!(BoundaryCondition::Outflow.scalar(ScalarKind::Pressure), ScalarBc::Dirichlet(0.0));
        assert_eq!(BoundaryCondition::WALL.scalar(ScalarKind::Pressure), ScalarBc::Neumann);
        assert_eq!(InflowProfile::Parabolic(2.0).at(0.5), 2.0);
    }
}
