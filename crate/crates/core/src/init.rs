//! Initial conditions built from tanh-smoothed indicator profiles.

use std::path::PathBuf;

use crate::error::ScenarioError;
use crate::field::Field;
use crate::grid::{Grid2D, ScalarKind};
use crate::ops;
use crate::params::ValidatedParams;
use crate::phasefield::chemical_potentials;
use crate::state::State;

/// ½(1 + tanh(3d/ε)) for a signed distance d (positive inside).
#[inline]
pub fn smoothed_indicator(d: f64, eps: f64) -> f64 {
    0.5 * (1.0 + (3.0 * d / eps).tanh())
}

/// Phase layout at t = 0. Phase numbers are 1-based as in the configuration.
#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    Uniform { phase: usize },
    /// Phase `above` where x·n > offset, phase `below` elsewhere.
    Planar { offset: f64, normal: [f64; 2], below: usize, above: usize },
    /// Stacked slabs along x (axis 0) or y (axis 1): `phases.len() == cuts.len() + 1`, cuts increasing.
    Layers { axis: usize, cuts: Vec<f64>, phases: Vec<usize> },
    Disk { center: [f64; 2], radius: f64, inside: usize, outside: usize },
    /// A disk of `lens` centered on a horizontal interface, `bottom` below y0 and `top` above.
    LensOnPlane { y0: f64, center_x: f64, radius: f64, bottom: usize, top: usize, lens: usize },
    /// Lens bounded by two circular arcs through (center_x ± half_width, y0) that leave the
    /// horizontal at `top_angle` above and `bottom_angle` below (radians).
    ArcLens { y0: f64, center_x: f64, half_width: f64, top_angle: f64, bottom_angle: f64, bottom: usize, top: usize, lens: usize },
    /// Solid half-disk nucleus on the bottom wall with an attached phase-2 blob; phase 1 elsewhere.
    ChannelNucleus { nucleus_x: f64, nucleus_radius: f64, blob_center: [f64; 2], blob_radius: f64 },
    /// Fields read from a snapshot file.
    Restore(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConcentrationInit {
    Uniform(f64),
    /// base + amp·exp(−|x − center|²/(2w²)).
    Gaussian { base: f64, amp: f64, center: [f64; 2], width: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum VelocityInit {
    Rest,
    /// u = shear·(y − y_origin), v = 0 (a Couette start for lid-driven runs).
    Shear(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitialCondition {
    pub shape: Shape,
    pub c: ConcentrationInit,
    pub velocity: VelocityInit,
}

impl Default for InitialCondition {
    fn default() -> Self {
        InitialCondition { shape: Shape::Uniform { phase: 1 }, c: ConcentrationInit::Uniform(0.5), velocity: VelocityInit::Rest }
    }
}

fn phase_index(p: usize) -> Result<usize, ScenarioError> {
    if (1..=3).contains(&p) {
        Ok(p - 1)
    } else {
        Err(ScenarioError::BadInitialSpec(format!("phase {p} not in 1..=3")))
    }
}

/// Composition at a point.
pub fn composition(shape: &Shape, x: [f64; 2], eps: f64) -> Result<[f64; 3], ScenarioError> {
    let mut phi = [0.0; 3];
    match shape {
        Shape::Uniform { phase } => phi[phase_index(*phase)?] = 1.0,
        Shape::Planar { offset, normal, below, above } => {
            let n = (normal[0] * normal[0] + normal[1] * normal[1]).sqrt();
            if n == 0.0 {
                return Err(ScenarioError::BadInitialSpec("zero normal".into()));
            }
            let d = (x[0] * normal[0] + x[1] * normal[1]) / n - offset;
            let h = smoothed_indicator(d, eps);
            phi[phase_index(*above)?] += h;
            phi[phase_index(*below)?] += 1.0 - h;
        }
        Shape::Layers { axis, cuts, phases } => {
            if phases.len() != cuts.len() + 1 || *axis > 1 || cuts.windows(2).any(|w| w[0] >= w[1]) {
                return Err(ScenarioError::BadInitialSpec("layers need increasing cuts and one more phase than cuts".into()));
            }
            let s: Vec<f64> = cuts.iter().map(|c| smoothed_indicator(x[*axis] - c, eps)).collect();
            for (k, &ph) in phases.iter().enumerate() {
                let lo = if k == 0 { 1.0 } else { s[k - 1] };
                let hi = if k == cuts.len() { 0.0 } else { s[k] };
                phi[phase_index(ph)?] += lo - hi;
            }
        }
        Shape::Disk { center, radius, inside, outside } => {
            let r = ((x[0] - center[0]).powi(2) + (x[1] - center[1]).powi(2)).sqrt();
            let h = smoothed_indicator(radius - r, eps);
            phi[phase_index(*inside)?] += h;
            phi[phase_index(*outside)?] += 1.0 - h;
        }
        Shape::LensOnPlane { y0, center_x, radius, bottom, top, lens } => {
            let r = ((x[0] - center_x).powi(2) + (x[1] - y0).powi(2)).sqrt();
            let l = smoothed_indicator(radius - r, eps);
            let b = (1.0 - l) * smoothed_indicator(y0 - x[1], eps);
            phi[phase_index(*lens)?] += l;
            phi[phase_index(*bottom)?] += b;
            phi[phase_index(*top)?] += 1.0 - l - b;
        }
        Shape::ArcLens { y0, center_x, half_width, top_angle, bottom_angle, bottom, top, lens } => {
            let ok = |a: f64| a > 0.0 && a < std::f64::consts::PI;
            if !(*half_width > 0.0 && ok(*top_angle) && ok(*bottom_angle)) {
                return Err(ScenarioError::BadInitialSpec("arc lens needs half_width > 0 and angles in (0, pi)".into()));
            }
            // the lens is the intersection of two disks
            let disk = |cy: f64, r: f64| r - ((x[0] - center_x).powi(2) + (x[1] - cy).powi(2)).sqrt();
            let upper = disk(y0 - half_width / top_angle.tan(), half_width / top_angle.sin());
            let lower = disk(y0 + half_width / bottom_angle.tan(), half_width / bottom_angle.sin());
            let l = smoothed_indicator(upper.min(lower), eps);
            let b = (1.0 - l) * smoothed_indicator(y0 - x[1], eps);
            phi[phase_index(*lens)?] += l;
            phi[phase_index(*bottom)?] += b;
            phi[phase_index(*top)?] += 1.0 - l - b;
        }
        Shape::ChannelNucleus { nucleus_x, nucleus_radius, blob_center, blob_radius } => {
            let rn = ((x[0] - nucleus_x).powi(2) + x[1].powi(2)).sqrt();
            let s = smoothed_indicator(nucleus_radius - rn, eps);
            let rb = ((x[0] - blob_center[0]).powi(2) + (x[1] - blob_center[1]).powi(2)).sqrt();
            let b = (1.0 - s) * smoothed_indicator(blob_radius - rb, eps);
            phi = [1.0 - s - b, b, s];
        }
        Shape::Restore(_) => return Err(ScenarioError::BadInitialSpec("restore has no pointwise composition".into())),
    }
    Ok(phi)
}

/// Builds a state satisfying the model invariants, with μ from the chemical potentials.
pub fn build_initial_state(ic: &InitialCondition, grid: &Grid2D, p: &ValidatedParams) -> Result<State, ScenarioError> {
    if let Shape::Restore(path) = &ic.shape {
        let mut st = crate::snapshot::read_snapshot(path, grid)?;
        st.fill_ghosts(grid);
        return Ok(st);
    }
    let mut st = State::new(grid);
    for j in 0..grid.ny as isize {
        for i in 0..grid.nx as isize {
            let phi = composition(&ic.shape, grid.center(i, j), p.eps)?;
            for k in 0..3 {
                st.phi[k].set(i, j, phi[k]);
            }
            let x = grid.center(i, j);
            let c = match ic.c {
                ConcentrationInit::Uniform(c) => c,
                ConcentrationInit::Gaussian { base, amp, center, width } => {
                    let r2 = (x[0] - center[0]).powi(2) + (x[1] - center[1]).powi(2);
                    base + amp * (-r2 / (2.0 * width * width)).exp()
                }
            };
            st.c.set(i, j, c);
        }
    }
    if let VelocityInit::Shear(s) = ic.velocity {
        for j in 0..grid.ny as isize {
            for i in 0..=grid.nx as isize {
                st.v.x.set(i, j, s * (grid.xface(i, j)[1] - grid.origin[1]));
            }
        }
    }
    for k in 0..3 {
        ops::apply_bc(&mut st.phi[k], grid, ScalarKind::Phase);
    }
    ops::apply_velocity_bc(&mut st.v, grid, false, true);
    st.mu = chemical_potentials(&st.phi, grid, p).map_err(|e| ScenarioError::BadInitialSpec(e.to_string()))?;
    st.fill_ghosts(grid);
    st.check_invariants(grid, p, 1e-12).map_err(ScenarioError::BadInitialSpec)?;
    let cmax = p.c_star * 1.5 + 1.0;
    let bad_c = (0..grid.ny as isize).any(|j| (0..grid.nx as isize).any(|i| !(st.c.get(i, j) >= 0.0 && st.c.get(i, j) <= cmax)));
    if bad_c {
        return Err(ScenarioError::BadInitialSpec("initial concentration outside [0, c* + margin]".into()));
    }
    Ok(st)
}

/// Cell values of an analytic function, for tests and scenario set-up.
pub fn sample(grid: &Grid2D, f: impl Fn([f64; 2]) -> f64) -> Field {
    Field::from_fn(grid.nx, grid.ny, |i, j| f(grid.center(i, j)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Boundaries;
    use crate::params::{validate, ModelParams};

    fn setup() -> (Grid2D, ValidatedParams) {
        let g = Grid2D::new(32, 32, 1.0, 1.0, [0.0; 2], Boundaries::walls()).unwrap();
        let p = validate(&ModelParams { eps: 0.05, ..Default::default() }).unwrap();
        (g, p)
    }

    #[test]
    fn disk_profile_definition() {
        let (g, p) = setup();
        let ic = InitialCondition {
            shape: Shape::Disk { center: [0.5, 0.5], radius: 0.25, inside: 1, outside: 2 },
            ..Default::default()
        };
        let st = build_initial_state(&ic, &g, &p).unwrap();
        for j in 0..32 {
            for i in 0..32 {
                let x = g.center(i, j);
                let r = ((x[0] - 0.5).powi(2) + (x[1] - 0.5).powi(2)).sqrt();
                let want = 0.5 * (1.0 + (3.0 * (0.25 - r) / 0.05).tanh());
                assert!((st.phi[0].get(i, j) - want).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn stacked_planes_on_plane() {
        let (g, p) = setup();
        let ic = InitialCondition {
            shape: Shape::Layers { axis: 1, cuts: vec![0.3, 0.7], phases: vec![3, 1, 2] },
            ..Default::default()
        };
        let st = build_initial_state(&ic, &g, &p).unwrap();
        assert!(st.sum_phi_residual(&g) < 1e-15);
        for k in 0..3 {
            for j in 0..32 {
                for i in 0..32 {
                    let v = st.phi[k].get(i, j);
                    assert!(v > -p.delta && v < 1.0 + p.delta);
                }
            }
        }
    }

    #[test]
    fn bad_specs_rejected() {
        let (g, p) = setup();
        let ic = InitialCondition { shape: Shape::Uniform { phase: 4 }, ..Default::default() };
        assert!(matches!(build_initial_state(&ic, &g, &p), Err(ScenarioError::BadInitialSpec(_))));
        let ic = InitialCondition { c: ConcentrationInit::Uniform(-1.0), ..Default::default() };
        assert!(build_initial_state(&ic, &g, &p).is_err());
    }
}
