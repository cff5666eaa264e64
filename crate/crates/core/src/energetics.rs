//! Pointwise constitutive functions and the discrete free energy.

use std::fmt;
use std::sync::Arc;

use crate::error::EnergyError;
use crate::field::Field;
use crate::grid::Grid2D;
use crate::ops;
use crate::params::ValidatedParams;
use crate::state::State;

/// A convex mixture energy g with its first two derivatives.
pub trait MixtureEnergy: Send + Sync {
    fn g(&self, c: f64) -> f64;
    fn g_prime(&self, c: f64) -> f64;
    fn g_second(&self, c: f64) -> f64;
}

/// Mixture energy g(c). The default is g(c) = a(c − c0)².
#[derive(Clone)]
pub enum GSpec {
    Quadratic { a: f64, c0: f64 },
    Custom(Arc<dyn MixtureEnergy>),
}

impl Default for GSpec {
    fn default() -> Self {
        GSpec::Quadratic { a: 1.0, c0: 0.5 }
    }
}

impl fmt::Debug for GSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GSpec::Quadratic { a, c0 } => write!(f, "Quadratic {{ a: {a}, c0: {c0} }}"),
            GSpec::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

impl PartialEq for GSpec {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (GSpec::Quadratic { a, c0 }, GSpec::Quadratic { a: b, c0: d }) => a == b && c0 == d,
            (GSpec::Custom(x), GSpec::Custom(y)) => Arc::ptr_eq(x, y),
            _ => false,
        }
    }
}

impl GSpec {
    pub fn check(&self) -> Result<(), String> {
        match self {
            GSpec::Quadratic { a, c0 } => {
                if !(*a > 0.0) {
                    return Err("g_a must be positive".into());
                }
                if !c0.is_finite() {
                    return Err("g_c0 must be finite".into());
                }
                Ok(())
            }
            GSpec::Custom(_) => Ok(()),
        }
    }
}

impl MixtureEnergy for GSpec {
    fn g(&self, c: f64) -> f64 {
        match self {
            GSpec::Quadratic { a, c0 } => a * (c - c0) * (c - c0),
            GSpec::Custom(m) => m.g(c),
        }
    }
    fn g_prime(&self, c: f64) -> f64 {
        match self {
            GSpec::Quadratic { a, c0 } => 2.0 * a * (c - c0),
            GSpec::Custom(m) => m.g_prime(c),
        }
    }
    fn g_second(&self, c: f64) -> f64 {
        match self {
            GSpec::Quadratic { a, .. } => 2.0 * a,
            GSpec::Custom(m) => m.g_second(c),
        }
    }
}

pub fn g_eval(g: &GSpec, c: f64) -> Result<f64, EnergyError> {
    nonneg(c)?;
    Ok(g.g(c))
}

pub fn g_prime(g: &GSpec, c: f64) -> Result<f64, EnergyError> {
    nonneg(c)?;
    Ok(g.g_prime(c))
}

/// r(c) = g(c) + g′(c)(c* − c).
pub fn reaction_rate_r(g: &GSpec, c: f64, c_star: f64) -> Result<f64, EnergyError> {
    nonneg(c)?;
    Ok(rate_unchecked(g, c, c_star))
}

/// Same as [`reaction_rate_r`] without the sign check, for use inside time steps
/// where round-off may push c marginally below zero.
#[inline]
pub fn rate_unchecked(g: &GSpec, c: f64, c_star: f64) -> f64 {
    g.g(c) + g.g_prime(c) * (c_star - c)
}

fn nonneg(c: f64) -> Result<(), EnergyError> {
    if c < 0.0 || c.is_nan() {
        Err(EnergyError::NegativeConcentration(c))
    } else {
        Ok(())
    }
}

/// Barrier ℓ(x) = x²/(1+x) on (−1,0), 0 for x ≥ 0.
pub fn ell(x: f64) -> Result<f64, EnergyError> {
    if x >= 0.0 {
        Ok(0.0)
    } else if x > -1.0 {
        Ok(x * x / (1.0 + x))
    } else {
        Err(EnergyError::BarrierBlowup(x))
    }
}

pub fn ell_prime(x: f64) -> Result<f64, EnergyError> {
    if x >= 0.0 {
        Ok(0.0)
    } else if x > -1.0 {
        let d = 1.0 + x;
        Ok(x * (x + 2.0) / (d * d))
    } else {
        Err(EnergyError::BarrierBlowup(x))
    }
}

/// Left-continuous second derivative (2 at x = 0).
pub fn ell_second(x: f64) -> Result<f64, EnergyError> {
    if x > 0.0 {
        Ok(0.0)
    } else if x > -1.0 {
        let d = 1.0 + x;
        Ok(2.0 / (d * d * d))
    } else {
        Err(EnergyError::BarrierBlowup(x))
    }
}

/// W_dw(φ) = 18φ²(1−φ)² + δℓ(φ/δ) + δℓ((1−φ)/δ).
pub fn w_dw(phi: f64, delta: f64) -> Result<f64, EnergyError> {
    let p = 18.0 * phi * phi * (1.0 - phi) * (1.0 - phi);
    Ok(p + delta * ell(phi / delta)? + delta * ell((1.0 - phi) / delta)?)
}

pub fn w_dw_prime(phi: f64, delta: f64) -> Result<f64, EnergyError> {
    let p = 36.0 * phi * (1.0 - phi) * (1.0 - 2.0 * phi);
    Ok(p + ell_prime(phi / delta)? - ell_prime((1.0 - phi) / delta)?)
}

pub fn w_dw_second(phi: f64, delta: f64) -> Result<f64, EnergyError> {
    let p = 36.0 * (1.0 - 6.0 * phi + 6.0 * phi * phi);
    Ok(p + (ell_second(phi / delta)? + ell_second((1.0 - phi) / delta)?) / delta)
}

/// max of W_dw″ over [−θδ, 1+θδ]; attained at the end points by convexity of the barrier.
pub fn max_w_dw_second(delta: f64, theta: f64) -> f64 {
    let a = w_dw_second(-theta * delta, delta).unwrap_or(f64::INFINITY);
    a.max(36.0 + 2.0 / delta)
}

/// PΦ = Φ + ΣT(1 − Σφ)(1/Σ₁, 1/Σ₂, 1/Σ₃).
pub fn project_p(phi: [f64; 3], sigmas: [f64; 3], sigma_t: f64) -> [f64; 3] {
    let defect = 1.0 - (phi[0] + phi[1] + phi[2]);
    let s = sigma_t * defect;
    [phi[0] + s / sigmas[0], phi[1] + s / sigmas[1], phi[2] + s / sigmas[2]]
}

/// The triple-well W(Φ) = Σ ΣᵢW_dw((PΦ)ᵢ) with its gradient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TripleWell {
    pub sigmas: [f64; 3],
    pub sigma_t: f64,
    pub delta: f64,
}

impl TripleWell {
    pub fn from_params(p: &ValidatedParams) -> Self {
        TripleWell { sigmas: p.sigmas, sigma_t: p.sigma_t, delta: p.delta }
    }

    pub fn w(&self, phi: [f64; 3]) -> Result<f64, EnergyError> {
        let psi = project_p(phi, self.sigmas, self.sigma_t);
        let mut s = 0.0;
        for i in 0..3 {
            s += self.sigmas[i] * w_dw(psi[i], self.delta)?;
        }
        Ok(s)
    }

    /// ∂ᵢW = ΣᵢW′(ψᵢ) − ΣT Σₖ W′(ψₖ) with ψ = PΦ.
    pub fn dw(&self, phi: [f64; 3]) -> Result<[f64; 3], EnergyError> {
        let psi = project_p(phi, self.sigmas, self.sigma_t);
        let d = [
            w_dw_prime(psi[0], self.delta)?,
            w_dw_prime(psi[1], self.delta)?,
            w_dw_prime(psi[2], self.delta)?,
        ];
        let t = self.sigma_t * (d[0] + d[1] + d[2]);
        Ok([self.sigmas[0] * d[0] - t, self.sigmas[1] * d[1] - t, self.sigmas[2] * d[2] - t])
    }
}

pub fn w_triple(phi: [f64; 3], p: &ValidatedParams) -> Result<f64, EnergyError> {
    TripleWell::from_params(p).w(phi)
}

pub fn dw_dphi(phi: [f64; 3], p: &ValidatedParams) -> Result<[f64; 3], EnergyError> {
    TripleWell::from_params(p).dw(phi)
}

/// q(Φ) = 6φ₁φ₃.
#[inline]
pub fn q_localizer(phi: [f64; 3]) -> f64 {
    6.0 * phi[0] * phi[2]
}

/// d(φ̃_f) = d₀(1 − clamp(φ̃_f, 0, 1)).
#[inline]
pub fn drag(phi_f_tilde: f64, d0: f64) -> f64 {
    d0 * (1.0 - phi_f_tilde.clamp(0.0, 1.0))
}

/// The reaction tuple (R₁, R₂, R₃, R_c, R_f).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reactions {
    pub r1: f64,
    pub r2: f64,
    pub r3: f64,
    pub rc: f64,
    pub rf: f64,
}

impl Reactions {
    pub const ZERO: Reactions = Reactions { r1: 0.0, r2: 0.0, r3: 0.0, rc: 0.0, rf: 0.0 };

    pub fn from_r1(r1: f64, c_star: f64) -> Self {
        Reactions { r1, r2: 0.0, r3: -r1, rc: c_star * r1, rf: r1 }
    }

    pub fn phases(&self) -> [f64; 3] {
        [self.r1, self.r2, self.r3]
    }
}

/// R₁ = −(q/ε)(r(c) + α̃(μ₁ − μ₃)), closed by R₃ = −R₁, R₂ = 0, R_c = c*R₁, R_f = R₁.
pub fn reaction_r1(
    phi: [f64; 3],
    c: f64,
    mu1: f64,
    mu3: f64,
    eps: f64,
    alpha_tilde: f64,
    g: &GSpec,
    c_star: f64,
) -> Reactions {
    let q = q_localizer(phi);
    if q == 0.0 {
        return Reactions::ZERO;
    }
    let r1 = -(q / eps) * (rate_unchecked(g, c, c_star) + alpha_tilde * (mu1 - mu3));
    Reactions::from_r1(r1, c_star)
}

/// Reactions with all model constants taken from `p`; zero when reactions are disabled.
pub fn reactions(phi: [f64; 3], c: f64, mu1: f64, mu3: f64, p: &ValidatedParams) -> Reactions {
    if !p.reactions {
        return Reactions::ZERO;
    }
    reaction_r1(phi, c, mu1, mu3, p.eps, p.alpha_tilde, &p.g_spec, p.c_star)
}

/// Ginzburg–Landau density W(Φ)/ε + Σ εΣᵢ|∇φᵢ|²/2.
pub fn gl_density(phi: [f64; 3], grad_phi: [[f64; 2]; 3], eps: f64, well: &TripleWell) -> Result<f64, EnergyError> {
    let mut s = well.w(phi)? / eps;
    for i in 0..3 {
        let g = grad_phi[i];
        s += 0.5 * eps * well.sigmas[i] * (g[0] * g[0] + g[1] * g[1]);
    }
    Ok(s)
}

/// δ-modified coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaModified {
    pub phi_f_tilde: f64,
    pub rho_f_tilde: f64,
    pub gamma_tilde: f64,
    pub phi_c_tilde: f64,
}

/// Unmodified fluid fraction, fluid density, ion-carrying fraction and total density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Unmodified {
    pub phi_f: f64,
    pub rho_f: f64,
    pub phi_c: f64,
    pub rho: f64,
}

#[inline]
pub fn phi_f_tilde(phi: [f64; 3], delta: f64) -> f64 {
    phi[0] + phi[1] + 2.0 * delta * phi[2]
}

#[inline]
pub fn rho_f_tilde(phi: [f64; 3], rho1: f64, rho2: f64, delta: f64) -> f64 {
    rho1 * phi[0] + rho2 * phi[1] + (rho1 + rho2) * delta
}

#[inline]
pub fn gamma_tilde(phi: [f64; 3], gamma: [f64; 3], delta: f64) -> f64 {
    let inv = [1.0 / gamma[0], 1.0 / gamma[1], 1.0 / gamma[2]];
    1.0 / (phi[0] * inv[0] + phi[1] * inv[1] + phi[2] * inv[2] + (inv[0] + inv[1] + inv[2]) * delta)
}

#[inline]
pub fn phi_c_tilde(phi: [f64; 3], delta: f64) -> f64 {
    phi[0] + delta
}

pub fn delta_modified(phi: [f64; 3], p: &ValidatedParams) -> Result<DeltaModified, EnergyError> {
    let d = p.delta;
    let out = DeltaModified {
        phi_f_tilde: phi_f_tilde(phi, d),
        rho_f_tilde: rho_f_tilde(phi, p.rho1, p.rho2, d),
        gamma_tilde: gamma_tilde(phi, p.gamma(), d),
        phi_c_tilde: phi_c_tilde(phi, d),
    };
    for (name, v) in [
        ("phi_f_tilde", out.phi_f_tilde),
        ("rho_f_tilde", out.rho_f_tilde),
        ("gamma_tilde", out.gamma_tilde),
        ("phi_c_tilde", out.phi_c_tilde),
    ] {
        if !(v > 0.0) {
            return Err(EnergyError::NonpositiveCoefficient { name, value: v });
        }
    }
    Ok(out)
}

pub fn unmodified(phi: [f64; 3], p: &ValidatedParams) -> Unmodified {
    Unmodified {
        phi_f: phi[0] + phi[1],
        rho_f: p.rho1 * phi[0] + p.rho2 * phi[1],
        phi_c: phi[0],
        rho: p.rho1 * phi[0] + p.rho2 * phi[1] + p.rho3 * phi[2],
    }
}

/// Components of the discrete free energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreeEnergy {
    pub total: f64,
    pub kinetic: f64,
    pub gl: f64,
    pub mixture: f64,
}

/// Discrete free energy. Gradient energy is summed over faces, consistent with the
/// five-point Laplacian; kinetic energy is summed over velocity faces.
pub fn free_energy(state: &State, grid: &Grid2D, p: &ValidatedParams) -> Result<FreeEnergy, EnergyError> {
    let well = TripleWell::from_params(p);
    let area = grid.cell_area();
    let mut bulk = 0.0;
    let mut mixture = 0.0;
    for j in 0..grid.ny as isize {
        for i in 0..grid.nx as isize {
            let phi = state.phi_at(i, j);
            bulk += well.w(phi)?;
            mixture += p.g_spec.g(state.c.get(i, j)) * phi_c_tilde(phi, p.delta);
        }
    }
    let mut grad = 0.0;
    for k in 0..3 {
        grad += 0.5 * p.eps * p.sigmas[k] * ops::gradient_energy_sum(&state.phi[k], grid);
    }
    let gl = (bulk / p.eps + grad) * area;
    let mixture = mixture * area / p.alpha_tilde;
    let kinetic = kinetic_energy(state, grid, p);
    Ok(FreeEnergy { total: kinetic + gl + mixture, kinetic, gl, mixture })
}

/// ½ ρ̃_f |v|² summed over faces; ρ̃_f interpolated to faces.
pub fn kinetic_energy(state: &State, grid: &Grid2D, p: &ValidatedParams) -> f64 {
    let rho = state.rho_f_tilde(p);
    let (rx, ry) = ops::center_to_face(&rho, grid);
    let wx = ops::face_weights_x(grid);
    let wy = ops::face_weights_y(grid);
    let mut e = 0.0;
    for j in 0..grid.ny as isize {
        for i in 0..=grid.nx as isize {
            let u = state.v.x.get(i, j);
            e += wx[i as usize] * rx.get(i, j) * u * u;
        }
    }
    for j in 0..=grid.ny as isize {
        for i in 0..grid.nx as isize {
            let v = state.v.y.get(i, j);
            e += wy[j as usize] * ry.get(i, j) * v * v;
        }
    }
    0.5 * e * grid.cell_area()
}

/// Pointwise evaluation helper over a whole field set.
pub fn cell_reactions(state: &State, grid: &Grid2D, p: &ValidatedParams) -> Field {
    let mut r1 = grid.cell_field();
    for j in 0..grid.ny as isize {
        for i in 0..grid.nx as isize {
            let r = reactions(state.phi_at(i, j), state.c.get(i, j), state.mu[0].get(i, j), state.mu[2].get(i, j), p);
            r1.set(i, j, r.r1);
        }
    }
    r1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{validate, ModelParams};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn params(s: (f64, f64, f64), delta: f64) -> ValidatedParams {
        validate(&ModelParams { sigma12: s.0, sigma13: s.1, sigma23: s.2, eps: 0.05, delta: Some(delta), ..Default::default() })
            .unwrap()
    }

    #[test]
    fn ell_values() {
        assert_eq!(ell(0.5).unwrap(), 0.0);
        assert_relative_eq!(ell(-0.5).unwrap(), 0.5);
        assert!(matches!(ell(-1.0), Err(EnergyError::BarrierBlowup(_))));
        assert!(ell_prime(-0.3).unwrap() < 0.0);
        assert_eq!(ell_prime(0.3).unwrap(), 0.0);
        assert!(ell(-1.0 + 1e-9).unwrap() > 1e8);
    }

    #[test]
    fn w_dw_values() {
        assert_eq!(w_dw(0.0, 0.3).unwrap(), 0.0);
        assert_eq!(w_dw(1.0, 0.3).unwrap(), 0.0);
        assert_relative_eq!(w_dw(0.5, 0.1).unwrap(), 1.125);
        assert!(w_dw(-0.1, 0.1).is_err());
        assert!(w_dw(1.1, 0.1).is_err());
        assert!(w_dw(-0.1 + 1e-12, 0.1).unwrap() > 1e8 * 0.1 * 0.01);
    }

    #[test]
    fn w_dw_derivatives_match_fd() {
        let d = 0.05;
        for k in 1..200 {
            let x = -d + (1.0 + 2.0 * d) * k as f64 / 200.0;
            if x.abs() < 1e-3 || (x - 1.0).abs() < 1e-3 {
                continue;
            }
            let h = 1e-6;
            let fd = (w_dw(x + h, d).unwrap() - w_dw(x - h, d).unwrap()) / (2.0 * h);
            assert_relative_eq!(w_dw_prime(x, d).unwrap(), fd, epsilon = 1e-6, max_relative = 1e-6);
            let fd2 = (w_dw_prime(x + h, d).unwrap() - w_dw_prime(x - h, d).unwrap()) / (2.0 * h);
            assert_relative_eq!(w_dw_second(x, d).unwrap(), fd2, epsilon = 1e-5, max_relative = 1e-5);
        }
    }

    #[test]
    fn projection_examples() {
        let s = [0.5, 0.5, 0.5];
        let t = 1.0 / 6.0;
        assert_eq!(project_p([0.2, 0.3, 0.5], s, t), [0.2, 0.3, 0.5]);
        let r = project_p([0.2, 0.3, 0.4], s, t);
        assert_relative_eq!(r[0], 0.7 / 3.0, max_relative = 1e-14);
        assert_relative_eq!(r[1], 1.0 / 3.0, max_relative = 1e-14);
        assert_relative_eq!(r[2], 1.3 / 3.0, max_relative = 1e-14);
        let r = project_p([0.0; 3], s, t);
        for v in r {
            assert_relative_eq!(v, 1.0 / 3.0, max_relative = 1e-14);
        }
    }

    #[test]
    fn pure_phase_minimum() {
        let p = params((1.0, 1.5, 2.0), 0.05);
        let e1 = [1.0, 0.0, 0.0];
        assert_eq!(w_triple(e1, &p).unwrap(), 0.0);
        let g = dw_dphi(e1, &p).unwrap();
        assert!(g.iter().all(|v| v.is_finite()));
        assert!(g.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn absent_phase_derivative_vanishes() {
        let p = params((1.0, 1.5, 2.0), 0.05);
        for k in 0..=20 {
            let f = k as f64 / 20.0;
            let g = dw_dphi([f, 1.0 - f, 0.0], &p).unwrap();
            assert!(g[2].abs() < 1e-12, "{f} {g:?}");
        }
    }

    #[test]
    fn q_examples() {
        assert_eq!(q_localizer([1.0, 0.0, 0.0]), 0.0);
        assert_relative_eq!(q_localizer([0.5, 0.0, 0.5]), 1.5);
        assert_relative_eq!(q_localizer([0.5, 0.0, 0.5]), (2.0 * w_dw(0.5, 0.01).unwrap()).sqrt());
        assert_eq!(q_localizer([0.3, 0.7, 0.0]), 0.0);
    }

    #[test]
    fn q_equipartition_link() {
        for k in -40..=40 {
            let z = k as f64 * 0.05;
            let p1 = 0.5 * (1.0 - (3.0 * z).tanh());
            let p3 = 1.0 - p1;
            let poly = (2.0 * 18.0 * p1 * p1 * p3 * p3).sqrt();
            assert!((q_localizer([p1, 0.0, p3]) - poly).abs() < 1e-14);
        }
    }

    #[test]
    fn drag_examples() {
        assert_eq!(drag(1.0, 3.0), 0.0);
        assert_eq!(drag(0.0, 3.0), 3.0);
        assert_eq!(drag(0.5, 3.0), 1.5);
        assert_eq!(drag(1.2, 3.0), 0.0);
        assert_eq!(drag(-0.1, 3.0), 3.0);
    }

    #[test]
    fn rate_examples() {
        let g = GSpec::Quadratic { a: 1.0, c0: 0.0 };
        assert_relative_eq!(reaction_rate_r(&g, 0.5, 1.0).unwrap(), 0.75);
        assert_relative_eq!(reaction_rate_r(&g, 1.0, 1.0).unwrap(), g_eval(&g, 1.0).unwrap());
        assert_eq!(reaction_rate_r(&g, 0.0, 1.0).unwrap(), 0.0);
        assert!(matches!(reaction_rate_r(&g, -0.1, 1.0), Err(EnergyError::NegativeConcentration(_))));
    }

    #[test]
    fn rate_monotone_default() {
        let g = GSpec::default();
        let cs = 1.0;
        let mut prev = f64::NEG_INFINITY;
        for k in 0..1000 {
            let c = cs * k as f64 / 999.0;
            let r = reaction_rate_r(&g, c, cs).unwrap();
            assert!(r >= prev);
            prev = r;
            assert!(g.g_second(c) * (cs - c) >= 0.0);
        }
    }

    #[test]
    fn reaction_examples() {
        let g = GSpec::Quadratic { a: 1.0, c0: 0.0 };
        assert_eq!(reaction_r1([1.0, 0.0, 0.0], 0.5, 1.0, 2.0, 0.01, 0.01, &g, 1.0), Reactions::ZERO);
        let gq = GSpec::Quadratic { a: 1.0, c0: 0.5 };
        let r = reaction_r1([0.5, 0.0, 0.5], 0.5, 0.3, 0.3, 0.01, 0.01, &gq, 1.0);
        assert_eq!(r.r1, 0.0);
        let r = reaction_r1([0.5, 0.0, 0.5], 0.5, 0.3, 0.3, 0.01, 0.01, &g, 1.0);
        assert_relative_eq!(r.r1, -112.5, max_relative = 1e-14);
        assert_eq!(r.r3, -r.r1);
        assert_eq!(r.r2, 0.0);
        assert_eq!(r.rc, 1.0 * r.r1);
        assert_eq!(r.rf, r.r1);
    }

    #[test]
    fn delta_modified_examples() {
        let mut p = params((1.0, 1.0, 1.0), 0.01);
        let m = delta_modified([0.0, 0.0, 1.0], &p).unwrap();
        assert_relative_eq!(m.phi_f_tilde, 0.02);
        assert_relative_eq!(m.phi_c_tilde, 0.01);
        p = p.with(|q| q.rho2 = 3.0).unwrap();
        let m = delta_modified([1.0, 0.0, 0.0], &p).unwrap();
        assert_eq!(m.phi_f_tilde, 1.0);
        assert_relative_eq!(m.rho_f_tilde, 1.0 + 4.0 * 0.01);
        let p = p.with(|q| {
            q.gamma1 = 2.5;
            q.gamma2 = 2.5;
            q.gamma3 = 2.5;
        })
        .unwrap();
        let t = 1.0 / 3.0;
        let m = delta_modified([t, t, t], &p).unwrap();
        assert_relative_eq!(m.gamma_tilde, 2.5 / (1.0 + 0.03), max_relative = 1e-14);
        assert!(matches!(
            delta_modified([-0.5, -0.6, 2.1], &p),
            Err(EnergyError::NonpositiveCoefficient { .. })
        ));
    }

    fn on_plane(a: f64, b: f64, d: f64) -> [f64; 3] {
        // a, b in [0,1]: map to the admissible band with margin 1e-3
        let lo = -d + 1e-3;
        let hi = 1.0 + d - 1e-3;
        let p1 = lo + (hi - lo) * a;
        let p2 = lo + (hi - lo) * b;
        [p1, p2, 1.0 - p1 - p2]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn gradient_matches_fd(a in 0.0f64..1.0, b in 0.0f64..1.0) {
            let p = params((1.0, 1.5, 2.0), 0.05);
            let phi = on_plane(a, b, p.delta);
            prop_assume!(phi[2] > -p.delta + 1e-3 && phi[2] < 1.0 + p.delta - 1e-3);
            let well = TripleWell::from_params(&p);
            let g = well.dw(phi).unwrap();
            let h = 1e-7;
            let scale = g.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            for k in 0..3 {
                let mut pp = phi; pp[k] += h;
                let mut pm = phi; pm[k] -= h;
                // the projection keeps PΦ inside the band for these small offsets
                let (Ok(wp), Ok(wm)) = (well.w(pp), well.w(pm)) else { continue };
                let fd = (wp - wm) / (2.0 * h);
                prop_assert!((fd - g[k]).abs() <= 1e-6 * scale, "k={} fd={} an={}", k, fd, g[k]);
            }
        }

        #[test]
        fn directional_null(a in 0.0f64..1.0, b in 0.0f64..1.0) {
            let p = params((1.0, 1.2, 0.9), 0.05);
            let phi = on_plane(a, b, p.delta);
            prop_assume!(phi[2] > -p.delta + 1e-3 && phi[2] < 1.0 + p.delta - 1e-3);
            let well = TripleWell::from_params(&p);
            let g = well.dw(phi).unwrap();
            let s: f64 = (0..3).map(|k| g[k] / p.sigmas[k]).sum();
            let scale = g.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            prop_assert!(s.abs() <= 1e-12 * scale);
            let h = 1e-5;
            let om = [1.0 / p.sigmas[0], 1.0 / p.sigmas[1], 1.0 / p.sigmas[2]];
            let pp = [phi[0] + h * om[0], phi[1] + h * om[1], phi[2] + h * om[2]];
            let pm = [phi[0] - h * om[0], phi[1] - h * om[1], phi[2] - h * om[2]];
            let fd = (well.w(pp).unwrap() - well.w(pm).unwrap()) / (2.0 * h);
            prop_assert!(fd.abs() <= 1e-6 * scale);
        }

        #[test]
        fn w_dw_symmetric(x in -0.0999f64..1.0999) {
            let d = 0.1;
            let a = w_dw(x, d).unwrap();
            let b = w_dw(1.0 - x, d).unwrap();
            // conditioning of the barrier argument near the blow-up
            let dist = ((x + d).min(1.0 + d - x)) / d;
            prop_assert!((a - b).abs() <= 1e-14 * a.abs().max(1.0) * (1.0 + 1.0 / dist));
        }

        #[test]
        fn w_nonnegative(a in 0.0f64..1.0, b in 0.0f64..1.0) {
            let p = params((1.0, 1.0, 1.0), 0.05);
            let phi = on_plane(a, b, p.delta);
            prop_assume!(phi[2] > -p.delta + 1e-3 && phi[2] < 1.0 + p.delta - 1e-3);
            prop_assert!(w_triple(phi, &p).unwrap() >= 0.0);
        }
    }
}
