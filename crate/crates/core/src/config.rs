//! Flat `key = value` run configuration and the run plan built from it.
//!
//! One entry per line, `#` starts a comment. Unknown and repeated keys are errors.
//! Model keys mirror [`ModelParams`] (`D` is the ion diffusion rate, `g_form`/`g_a`/`g_c0`
//! select the mixture energy). Grid keys are `nx ny lx ly origin_x origin_y` and
//! `bc_left bc_right bc_bottom bc_top`, each one of
//!
//! ```text
//! wall [tangential_velocity] | symmetry | periodic | outflow
//! inflow <uniform|parabolic> <speed> <concentration>
//! ```
//!
//! The initial state is given by `init` (phase layout), `c_init` and `v_init`:
//!
//! ```text
//! init = uniform <phase>
//! init = planar <offset> <nx> <ny> <below> <above>
//! init = layers <axis> <cut>... / <phase>...
//! init = disk <cx> <cy> <radius> <inside> <outside>
//! init = lens <y0> <cx> <radius> <bottom> <top> <lens>
//! init = arc_lens <y0> <cx> <half_width> <top_deg> <bottom_deg> <bottom> <top> <lens>
//! init = channel_nucleus <x> <radius> <blob_x> <blob_y> <blob_radius>
//! init = restore <snapshot path>
//! c_init = <value> | gaussian <base> <amp> <cx> <cy> <width>
//! v_init = rest | shear <rate>
//! ```
//!
//! Run keys: `scenario` (`free` or a scenario name), `out_dir`, `snapshot_every`,
//! `output_binary`, `max_steps`, `solve_flow`, `eps_over_h`, `steady_tol`, `scenario_max_steps`.
//! Tolerance keys carry a `tol_` prefix and may also come from a separate override file.

use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::energetics::GSpec;
use crate::error::ConfigError;
use crate::grid::{BoundaryCondition, Boundaries, Grid2D, InflowProfile};
use crate::init::{ConcentrationInit, InitialCondition, Shape, VelocityInit};
use crate::params::{validate, ModelParams, ValidatedParams};
use crate::scenarios::{ScenarioOptions, Tolerances};

/// Everything needed to start a run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunPlan {
    pub params: ValidatedParams,
    pub grid: Grid2D,
    pub ic: InitialCondition,
    /// `None` for a free run.
    pub scenario: Option<String>,
    pub out_dir: Option<PathBuf>,
    pub snapshot_every: usize,
    pub binary: bool,
    pub max_steps: Option<usize>,
    pub solve_flow: bool,
    pub scenario_opts: ScenarioOptions,
}

/// Splits text into (line number, key, value) triples, rejecting repeated keys.
pub fn parse_pairs(text: &str) -> Result<Vec<(usize, String, String)>, ConfigError> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(ConfigError::Syntax { line: n + 1, msg: format!("expected `key = value`, got `{line}`") });
        };
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() || v.is_empty() {
            return Err(ConfigError::Syntax { line: n + 1, msg: "empty key or value".into() });
        }
        if !seen.insert(k.to_string()) {
            return Err(ConfigError::Duplicate(k.into()));
        }
        out.push((n + 1, k.to_string(), v.to_string()));
    }
    Ok(out)
}

fn num<T: FromStr>(key: &str, v: &str) -> Result<T, ConfigError> {
    v.parse().map_err(|_| ConfigError::BadValue { key: key.into(), value: v.into() })
}

fn boolean(key: &str, v: &str) -> Result<bool, ConfigError> {
    match v {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(ConfigError::BadValue { key: key.into(), value: v.into() }),
    }
}

fn nums(key: &str, words: &[&str], want: usize) -> Result<Vec<f64>, ConfigError> {
    if words.len() != want {
        return Err(ConfigError::BadValue { key: key.into(), value: words.join(" ") });
    }
    words.iter().map(|w| num(key, w)).collect()
}

fn phase(key: &str, x: f64) -> Result<usize, ConfigError> {
    if x.fract() == 0.0 && (1.0..=3.0).contains(&x) {
        Ok(x as usize)
    } else {
        Err(ConfigError::BadValue { key: key.into(), value: x.to_string() })
    }
}

pub fn parse_bc(key: &str, v: &str) -> Result<BoundaryCondition, ConfigError> {
    let w: Vec<&str> = v.split_whitespace().collect();
    let bad = || ConfigError::BadValue { key: key.into(), value: v.into() };
    Ok(match w.as_slice() {
        ["wall"] => BoundaryCondition::WALL,
        ["wall", u] => BoundaryCondition::Wall { tangential_velocity: num(key, u)? },
        ["symmetry"] => BoundaryCondition::Symmetry,
        ["periodic"] => BoundaryCondition::Periodic,
        ["outflow"] => BoundaryCondition::Outflow,
        ["inflow", kind, speed, c] => {
            let speed: f64 = num(key, speed)?;
            let profile = match *kind {
                "uniform" => InflowProfile::Uniform(speed),
                "parabolic" => InflowProfile::Parabolic(speed),
                _ => return Err(bad()),
            };
            BoundaryCondition::Inflow { profile, concentration: num(key, c)? }
        }
        _ => return Err(bad()),
    })
}

pub fn parse_shape(key: &str, v: &str) -> Result<Shape, ConfigError> {
    let w: Vec<&str> = v.split_whitespace().collect();
    let bad = || ConfigError::BadValue { key: key.into(), value: v.into() };
    let (kind, rest) = w.split_first().ok_or_else(bad)?;
    Ok(match *kind {
        "uniform" => Shape::Uniform { phase: phase(key, nums(key, rest, 1)?[0])? },
        "planar" => {
            let a = nums(key, rest, 5)?;
            Shape::Planar { offset: a[0], normal: [a[1], a[2]], below: phase(key, a[3])?, above: phase(key, a[4])? }
        }
        "layers" => {
            let split = rest.iter().position(|s| *s == "/").ok_or_else(bad)?;
            let axis: f64 = nums(key, &rest[..1], 1)?[0];
            if axis != 0.0 && axis != 1.0 {
                return Err(bad());
            }
            let cuts = nums(key, &rest[1..split], split - 1)?;
            let ph = nums(key, &rest[split + 1..], rest.len() - split - 1)?;
            if ph.len() != cuts.len() + 1 {
                return Err(bad());
            }
            let phases = ph.iter().map(|&x| phase(key, x)).collect::<Result<_, _>>()?;
            Shape::Layers { axis: axis as usize, cuts, phases }
        }
        "disk" => {
            let a = nums(key, rest, 5)?;
            Shape::Disk { center: [a[0], a[1]], radius: a[2], inside: phase(key, a[3])?, outside: phase(key, a[4])? }
        }
        "lens" => {
            let a = nums(key, rest, 6)?;
            Shape::LensOnPlane {
                y0: a[0],
                center_x: a[1],
                radius: a[2],
                bottom: phase(key, a[3])?,
                top: phase(key, a[4])?,
                lens: phase(key, a[5])?,
            }
        }
        "arc_lens" => {
            let a = nums(key, rest, 8)?;
            Shape::ArcLens {
                y0: a[0],
                center_x: a[1],
                half_width: a[2],
                top_angle: a[3].to_radians(),
                bottom_angle: a[4].to_radians(),
                bottom: phase(key, a[5])?,
                top: phase(key, a[6])?,
                lens: phase(key, a[7])?,
            }
        }
        "channel_nucleus" => {
            let a = nums(key, rest, 5)?;
            Shape::ChannelNucleus { nucleus_x: a[0], nucleus_radius: a[1], blob_center: [a[2], a[3]], blob_radius: a[4] }
        }
        "restore" => {
            let path = v[kind.len()..].trim();
            if path.is_empty() {
                return Err(bad());
            }
            Shape::Restore(PathBuf::from(path))
        }
        _ => return Err(bad()),
    })
}

fn parse_c_init(key: &str, v: &str) -> Result<ConcentrationInit, ConfigError> {
    let w: Vec<&str> = v.split_whitespace().collect();
    match w.as_slice() {
        [x] => Ok(ConcentrationInit::Uniform(num(key, x)?)),
        ["gaussian", rest @ ..] => {
            let a = nums(key, rest, 5)?;
            Ok(ConcentrationInit::Gaussian { base: a[0], amp: a[1], center: [a[2], a[3]], width: a[4] })
        }
        _ => Err(ConfigError::BadValue { key: key.into(), value: v.into() }),
    }
}

fn parse_v_init(key: &str, v: &str) -> Result<VelocityInit, ConfigError> {
    let w: Vec<&str> = v.split_whitespace().collect();
    match w.as_slice() {
        ["rest"] => Ok(VelocityInit::Rest),
        ["shear", s] => Ok(VelocityInit::Shear(num(key, s)?)),
        _ => Err(ConfigError::BadValue { key: key.into(), value: v.into() }),
    }
}

/// Applies `key = value` tolerance overrides (keys as in [`Tolerances::set`]).
pub fn apply_tolerance_overrides(tol: &mut Tolerances, text: &str) -> Result<(), ConfigError> {
    for (_, k, v) in parse_pairs(text)? {
        let x: f64 = num(&k, &v)?;
        tol.set(&k, x).map_err(|_| ConfigError::UnknownKey(k))?;
    }
    Ok(())
}

/// Parses a configuration text. Relative `restore` paths resolve against `base_dir`.
pub fn parse_config(text: &str, base_dir: Option<&Path>) -> Result<RunPlan, ConfigError> {
    let mut p = ModelParams::default();
    let (mut g_a, mut g_c0) = match GSpec::default() {
        GSpec::Quadratic { a, c0 } => (a, c0),
        GSpec::Custom(_) => unreachable!(),
    };
    let (mut nx, mut ny, mut lx, mut ly) = (64usize, 64usize, 1.0, 1.0);
    let mut origin = [0.0; 2];
    let mut bc = Boundaries::walls();
    let mut ic = InitialCondition::default();
    let mut scenario = None;
    let mut out_dir = None;
    let mut snapshot_every = 0;
    let mut binary = false;
    let mut max_steps = None;
    let mut solve_flow = true;
    let mut so = ScenarioOptions::default();

    for (_, k, v) in parse_pairs(text)? {
        let key = k.as_str();
        let v = v.as_str();
        match key {
            "rho1" => p.rho1 = num(key, v)?,
            "rho2" => p.rho2 = num(key, v)?,
            "rho3" => p.rho3 = num(key, v)?,
            "gamma1" => p.gamma1 = num(key, v)?,
            "gamma2" => p.gamma2 = num(key, v)?,
            "gamma3" => p.gamma3 = num(key, v)?,
            "sigma12" => p.sigma12 = num(key, v)?,
            "sigma13" => p.sigma13 = num(key, v)?,
            "sigma23" => p.sigma23 = num(key, v)?,
            "eps" => p.eps = num(key, v)?,
            "delta" => p.delta = Some(num(key, v)?),
            "D" | "diffusion" => p.diffusion = num(key, v)?,
            "alpha" => p.alpha = num(key, v)?,
            "d0" => p.d0 = num(key, v)?,
            "c_star" => p.c_star = num(key, v)?,
            "g_form" => {
                if v != "quadratic" {
                    return Err(ConfigError::BadValue { key: k, value: v.into() });
                }
            }
            "g_a" => g_a = num(key, v)?,
            "g_c0" => g_c0 = num(key, v)?,
            "dt" => p.dt = num(key, v)?,
            "t_end" => p.t_end = num(key, v)?,
            "reactions" => p.reactions = boolean(key, v)?,
            "stab_s" => p.stab_s = Some(num(key, v)?),
            "stab_margin" => p.stab_margin = num(key, v)?,
            "nx" => nx = num(key, v)?,
            "ny" => ny = num(key, v)?,
            "lx" => lx = num(key, v)?,
            "ly" => ly = num(key, v)?,
            "origin_x" => origin[0] = num(key, v)?,
            "origin_y" => origin[1] = num(key, v)?,
            "bc_left" => bc.left = parse_bc(key, v)?,
            "bc_right" => bc.right = parse_bc(key, v)?,
            "bc_bottom" => bc.bottom = parse_bc(key, v)?,
            "bc_top" => bc.top = parse_bc(key, v)?,
            "init" => ic.shape = parse_shape(key, v)?,
            "c_init" => ic.c = parse_c_init(key, v)?,
            "v_init" => ic.velocity = parse_v_init(key, v)?,
            "scenario" => scenario = if v == "free" { None } else { Some(v.to_string()) },
            "out_dir" => out_dir = Some(PathBuf::from(v)),
            "snapshot_every" => snapshot_every = num(key, v)?,
            "output_binary" => binary = boolean(key, v)?,
            "max_steps" => max_steps = Some(num(key, v)?),
            "solve_flow" => solve_flow = boolean(key, v)?,
            "eps_over_h" => so.eps_over_h = num(key, v)?,
            "steady_tol" => so.steady_tol = num(key, v)?,
            "scenario_max_steps" => so.max_steps = num(key, v)?,
            _ => match key.strip_prefix("tol_") {
                Some(t) => so.tol.set(t, num(key, v)?).map_err(|_| ConfigError::UnknownKey(k.clone()))?,
                None => return Err(ConfigError::UnknownKey(k)),
            },
        }
    }
    p.g_spec = GSpec::Quadratic { a: g_a, c0: g_c0 };
    let params = validate(&p)?;
    let grid = Grid2D::new(nx, ny, lx, ly, origin, bc).map_err(|e| ConfigError::BadValue { key: "grid".into(), value: e.to_string() })?;
    if let (Shape::Restore(path), Some(dir)) = (&mut ic.shape, base_dir) {
        if path.is_relative() {
            *path = dir.join(&*path);
        }
    }
    so.out_dir = out_dir.clone();
    so.snapshot_every = snapshot_every;
    so.binary = binary;
    Ok(RunPlan { params, grid, ic, scenario, out_dir, snapshot_every, binary, max_steps, solve_flow, scenario_opts: so })
}

pub fn load_config(path: &Path) -> Result<RunPlan, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io(format!("{}: {e}", path.display())))?;
    parse_config(&text, path.parent())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::ParamError;

    #[test]
    fn defaults_from_empty_text() {
        let plan = parse_config("# nothing\n\n", None).unwrap();
        assert_eq!(plan.params.raw(), &ModelParams::default());
        assert_eq!((plan.grid.nx, plan.grid.ny), (64, 64));
        assert_eq!(plan.scenario, None);
        assert!(plan.solve_flow);
    }

    #[test]
    fn model_keys_mirror_fields() {
        let text = "eps = 0.02\ndelta = 0.03  # barrier\nD = 2\nalpha = 0.5\nd0 = 3\nc_star = 1.5\n\
                    g_form = quadratic\ng_a = 2\ng_c0 = 0.1\nreactions = false\nstab_s = 10\nt_end = 1\n\
                    sigma12 = 1\nsigma13 = 1.5\nsigma23 = 2\nrho1 = 2\nrho3 = 2\ngamma2 = 4\n";
        let plan = parse_config(text, None).unwrap();
        let p = &plan.params;
        assert_eq!((p.eps, p.delta, p.diffusion, p.alpha, p.d0, p.c_star), (0.02, 0.03, 2.0, 0.5, 3.0, 1.5));
        assert_eq!(p.g_spec, GSpec::Quadratic { a: 2.0, c0: 0.1 });
        assert!(!p.reactions);
        assert_eq!(p.stab, 10.0);
        assert_eq!((p.rho1, p.rho3, p.gamma2), (2.0, 2.0, 4.0));
        assert_eq!(p.sigmas, [0.25, 0.75, 1.25]);
    }

    #[test]
    fn unknown_and_duplicate_keys_rejected() {
        assert_eq!(parse_config("epsilon = 0.1", None).unwrap_err(), ConfigError::UnknownKey("epsilon".into()));
        assert_eq!(parse_config("eps = 0.1\neps = 0.2", None).unwrap_err(), ConfigError::Duplicate("eps".into()));
        assert!(matches!(parse_config("eps 0.1", None).unwrap_err(), ConfigError::Syntax { line: 1, .. }));
        assert!(matches!(parse_config("eps = abc", None).unwrap_err(), ConfigError::BadValue { .. }));
        assert!(matches!(parse_config("tol_nope = 1", None).unwrap_err(), ConfigError::UnknownKey(_)));
    }

    #[test]
    fn validation_errors_surface() {
        match parse_config("eps = 0", None).unwrap_err() {
            ConfigError::Params(ParamError::Invalid(m)) => assert_eq!(m, "eps must be positive"),
            e => panic!("{e:?}"),
        }
    }

    #[test]
    fn grid_and_boundaries() {
        let text = "nx = 32\nny = 16\nlx = 2\nly = 0.5\nbc_left = inflow parabolic 1 0.8\nbc_right = outflow\n\
                    bc_top = wall 0.5\nbc_bottom = symmetry\n";
        let plan = parse_config(text, None).unwrap();
        let g = &plan.grid;
        assert_eq!((g.nx, g.ny, g.hx, g.hy), (32, 16, 2.0 / 32.0, 0.5 / 16.0));
        assert_eq!(g.bc.left, BoundaryCondition::Inflow { profile: InflowProfile::Parabolic(1.0), concentration: 0.8 });
        assert_eq!(g.bc.right, BoundaryCondition::Outflow);
        assert_eq!(g.bc.top, BoundaryCondition::Wall { tangential_velocity: 0.5 });
        assert_eq!(g.bc.bottom, BoundaryCondition::Symmetry);
        assert!(parse_bc("bc_top", "wall fast").is_err());
    }

    #[test]
    fn shapes() {
        assert_eq!(
            parse_shape("init", "disk 0.5 0.5 0.25 1 2").unwrap(),
            Shape::Disk { center: [0.5, 0.5], radius: 0.25, inside: 1, outside: 2 }
        );
        assert_eq!(
            parse_shape("init", "layers 1 0.3 0.7 / 3 1 2").unwrap(),
            Shape::Layers { axis: 1, cuts: vec![0.3, 0.7], phases: vec![3, 1, 2] }
        );
        assert_eq!(
            parse_shape("init", "planar 0.5 1 0 1 2").unwrap(),
            Shape::Planar { offset: 0.5, normal: [1.0, 0.0], below: 1, above: 2 }
        );
        assert_eq!(parse_shape("init", "restore snaps/a b.txt").unwrap(), Shape::Restore(PathBuf::from("snaps/a b.txt")));
        assert!(parse_shape("init", "disk 0.5 0.5 0.25 1 4").is_err());
        assert!(parse_shape("init", "layers 1 0.3 / 1").is_err());
        assert!(parse_shape("init", "blob 1").is_err());
        let plan = parse_config("init = restore s.txt", Some(Path::new("/tmp/run"))).unwrap();
        assert_eq!(plan.ic.shape, Shape::Restore(PathBuf::from("/tmp/run/s.txt")));
    }

    #[test]
    fn run_keys() {
        let text = "scenario = planar_profile\nout_dir = out\nsnapshot_every = 5\noutput_binary = true\n\
                    max_steps = 7\nsolve_flow = false\neps_over_h = 4\ntol_angle_deg = 2\nc_init = gaussian 0.5 0.1 0.5 0.5 0.1\n\
                    v_init = shear 2\n";
        let plan = parse_config(text, None).unwrap();
        assert_eq!(plan.scenario.as_deref(), Some("planar_profile"));
        assert_eq!(plan.out_dir, Some(PathBuf::from("out")));
        assert_eq!((plan.snapshot_every, plan.binary, plan.max_steps, plan.solve_flow), (5, true, Some(7), false));
        assert_eq!(plan.scenario_opts.eps_over_h, 4.0);
        assert_eq!(plan.scenario_opts.tol.angle_deg, 2.0);
        assert_eq!(plan.scenario_opts.snapshot_every, 5);
        assert_eq!(plan.ic.c, ConcentrationInit::Gaussian { base: 0.5, amp: 0.1, center: [0.5, 0.5], width: 0.1 });
        assert_eq!(plan.ic.velocity, VelocityInit::Shear(2.0));
    }

    #[test]
    fn tolerance_override_file() {
        let mut t = Tolerances::default();
        apply_tolerance_overrides(&mut t, "laplace = 0.2\n# c\nangle_deg = 1").unwrap();
        assert_eq!((t.laplace, t.angle_deg), (0.2, 1.0));
        assert!(apply_tolerance_overrides(&mut t, "nope = 1").is_err());
    }
}
