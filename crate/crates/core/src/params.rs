//! Model constants, derived potential scalings and validation.

use crate::energetics::GSpec;
use crate::error::ParamError;

/// Raw model constants as given by the user.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub rho1: f64,
    pub rho2: f64,
    pub rho3: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub gamma3: f64,
    pub sigma12: f64,
    pub sigma13: f64,
    pub sigma23: f64,
    pub eps: f64,
    /// Barrier parameter. `None` couples it to `eps`.
    pub delta: Option<f64>,
    /// Ion diffusion rate.
    pub diffusion: f64,
    pub alpha: f64,
    pub d0: f64,
    pub c_star: f64,
    pub g_spec: GSpec,
    pub dt: f64,
    pub t_end: f64,
    /// Switches the precipitation/dissolution source off when false.
    pub reactions: bool,
    /// Explicit stabilization constant; derived from the double well when `None`.
    pub stab_s: Option<f64>,
    /// Fraction of δ below 0 (and above 1) over which the stabilization bound is taken.
    pub stab_margin: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            rho1: 1.0,
            rho2: 1.0,
            rho3: 1.0,
            gamma1: 1.0,
            gamma2: 1.0,
            gamma3: 1.0,
            sigma12: 1.0,
            sigma13: 1.0,
            sigma23: 1.0,
            eps: 0.05,
            delta: None,
            diffusion: 1.0,
            alpha: 0.0,
            d0: 1.0,
            c_star: 1.0,
            g_spec: GSpec::default(),
            dt: 1e-4,
            t_end: 0.01,
            reactions: true,
            stab_s: None,
            stab_margin: 0.1,
        }
    }
}

/// Σᵢ = ½(σᵢⱼ + σᵢₖ − σⱼₖ) and 1/ΣT = Σ 1/Σᵢ.
pub fn derive_sigmas(sigma12: f64, sigma13: f64, sigma23: f64) -> Result<([f64; 3], f64), ParamError> {
    for (name, s) in [("sigma12", sigma12), ("sigma13", sigma13), ("sigma23", sigma23)] {
        if !(s > 0.0) || !s.is_finite() {
            return Err(ParamError::Invalid(format!("{name} must be positive")));
        }
    }
    let s = [
        0.5 * (sigma12 + sigma13 - sigma23),
        0.5 * (sigma12 + sigma23 - sigma13),
        0.5 * (sigma13 + sigma23 - sigma12),
    ];
    for (i, &v) in s.iter().enumerate() {
        if v <= 0.0 {
            return Err(ParamError::TriangleViolation { index: i + 1, value: v });
        }
    }
    let inv = 1.0 / s[0] + 1.0 / s[1] + 1.0 / s[2];
    Ok((s, 1.0 / inv))
}

/// α̃ = α for α > 0, ε for α = 0.
pub fn alpha_tilde(alpha: f64, eps: f64) -> Result<f64, ParamError> {
    if alpha < 0.0 || alpha.is_nan() {
        return Err(ParamError::NegativeAlpha(alpha));
    }
    Ok(if alpha > 0.0 { alpha } else { eps })
}

/// Parameters that passed validation, together with derived quantities.
/// Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedParams {
    raw: ModelParams,
    pub sigmas: [f64; 3],
    pub sigma_t: f64,
    pub delta: f64,
    pub alpha_tilde: f64,
    /// Stabilization constant of the Cahn–Hilliard step.
    pub stab: f64,
}

impl std::ops::Deref for ValidatedParams {
    type Target = ModelParams;
    fn deref(&self) -> &ModelParams {
        &self.raw
    }
}

impl ValidatedParams {
    pub fn raw(&self) -> &ModelParams {
        &self.raw
    }
    pub fn rho(&self) -> [f64; 3] {
        [self.rho1, self.rho2, self.rho3]
    }
    pub fn gamma(&self) -> [f64; 3] {
        [self.gamma1, self.gamma2, self.gamma3]
    }
    /// Returns a copy with one raw parameter changed and all derived values recomputed.
    pub fn with(&self, f: impl FnOnce(&mut ModelParams)) -> Result<ValidatedParams, ParamError> {
        let mut p = self.raw.clone();
        f(&mut p);
        validate(&p)
    }
}

/// Checks every invariant, collecting all violations.
pub fn validate(p: &ModelParams) -> Result<ValidatedParams, ParamError> {
    let mut errs = Vec::new();
    let mut positive = |name: &str, v: f64| {
        if !(v > 0.0) || !v.is_finite() {
            errs.push(format!("{name} must be positive"));
        }
    };
    positive("eps", p.eps);
    if let Some(d) = p.delta {
        positive("delta", d);
    }
    positive("D", p.diffusion);
    positive("d0", p.d0);
    positive("c_star", p.c_star);
    positive("rho1", p.rho1);
    positive("rho2", p.rho2);
    positive("rho3", p.rho3);
    positive("gamma1", p.gamma1);
    positive("gamma2", p.gamma2);
    positive("gamma3", p.gamma3);
    positive("dt", p.dt);
    if !(p.t_end >= 0.0) {
        errs.push("t_end must be non-negative".into());
    }
    if !(p.stab_margin >= 0.0 && p.stab_margin < 1.0) {
        errs.push("stab_margin must lie in [0, 1)".into());
    }
    if let Some(s) = p.stab_s {
        if !(s >= 0.0) {
            errs.push("stab_s must be non-negative".into());
        }
    }
    if p.rho3 != p.rho1 {
        errs.push(format!("density mismatch: rho3 ({}) must equal rho1 ({})", p.rho3, p.rho1));
    }
    let sig = match derive_sigmas(p.sigma12, p.sigma13, p.sigma23) {
        Ok(s) => Some(s),
        Err(e) => {
            errs.push(e.to_string());
            None
        }
    };
    let at = match alpha_tilde(p.alpha, p.eps) {
        Ok(a) => Some(a),
        Err(e) => {
            errs.push(e.to_string());
            None
        }
    };
    if let Err(e) = p.g_spec.check() {
        errs.push(e);
    }
    if !errs.is_empty() {
        return Err(if errs.len() == 1 {
            ParamError::Invalid(errs.remove(0))
        } else {
            ParamError::Many(errs)
        });
    }
    let (sigmas, sigma_t) = sig.unwrap();
    let delta = p.delta.unwrap_or(p.eps);
    let stab = p
        .stab_s
        .unwrap_or_else(|| 0.5 * crate::energetics::max_w_dw_second(delta, p.stab_margin));
    Ok(ValidatedParams { raw: p.clone(), sigmas, sigma_t, delta, alpha_tilde: at.unwrap(), stab })
}
