//! Scenario keys → suite parameters.

use quadric_cr::io::{parse_body, parse_list, parse_profile, read_text, Scenario};
use quadric_cr::suites::*;
use quadric_cr::transform::{BumpSpec, SpectralProfile};
use quadric_cr::{Error, Result, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Suite {
    Spectral,
    Plancherel,
    Rockland,
    Extend,
    Crcheck,
    Windows,
    Split,
    Convex,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::Spectral => "spectral",
            Suite::Plancherel => "plancherel",
            Suite::Rockland => "rockland",
            Suite::Extend => "extend",
            Suite::Crcheck => "crcheck",
            Suite::Windows => "windows",
            Suite::Split => "split",
            Suite::Convex => "convex",
        }
    }
}

/// `key = a b; c d` → [[a, b], [c, d]].
fn rows(s: &Scenario, key: &str) -> Result<Option<Vec<Vec<f64>>>> {
    match s.keys.get(key) {
        None => Ok(None),
        Some(v) => v.split(';').filter(|r| !r.trim().is_empty()).map(|r| parse_list(key, r)).collect::<Result<Vec<_>>>().map(Some),
    }
}

fn list(s: &Scenario, key: &str, default: &[f64]) -> Result<Vec<f64>> {
    Ok(s.keys.f64s(key)?.unwrap_or_else(|| default.to_vec()))
}

fn pair(s: &Scenario, key: &str, default: (f64, f64)) -> Result<(f64, f64)> {
    match s.keys.f64s(key)? {
        None => Ok(default),
        Some(v) if v.len() == 2 => Ok((v[0], v[1])),
        Some(_) => Err(Error::Parse(format!("{key} must be two numbers"))),
    }
}

fn int(s: &Scenario, key: &str, default: i64) -> Result<i64> {
    let v = s.f64_or(key, default as f64)?;
    if v.fract() != 0.0 {
        return Err(Error::Parse(format!("{key} must be an integer")));
    }
    Ok(v as i64)
}

/// A second body/profile pair named by `<prefix>_body` and `<prefix>_profile`.
fn named_profile(s: &Scenario, prefix: &str) -> Result<Option<SpectralProfile>> {
    let pkey = format!("{prefix}_profile");
    if s.keys.get(&pkey).is_none() {
        return Ok(None);
    }
    let bkey = format!("{prefix}_body");
    let body = if s.keys.get(&bkey).is_some() { parse_body(&read_text(&s.path(&bkey)?)?)? } else { s.body()? };
    Ok(Some(parse_profile(&read_text(&s.path(&pkey)?)?, body, s.grid()?)?))
}

fn stencil(s: &Scenario) -> Result<Vec<Vec<C64>>> {
    let default = vec![vec![0.0, 0.0], vec![0.5, 0.0], vec![0.3, -0.6], vec![-0.8, 0.4]];
    let r = rows(s, "stencil")?.unwrap_or(default);
    r.into_iter()
        .map(|row| {
            if row.len() % 2 != 0 {
                return Err(Error::Parse("stencil rows are re/im pairs".into()));
            }
            Ok(row.chunks(2).map(|c| C64::new(c[0], c[1])).collect())
        })
        .collect()
}

pub fn run(suite: Suite, s: &Scenario, seed: u64) -> Result<Vec<SuiteReport>> {
    match suite {
        Suite::Spectral => {
            let p = SpectralParams {
                model: s.model()?,
                lambdas: rows(s, "lambdas")?.unwrap_or_else(|| vec![vec![1.0]]),
                tau: list(s, "tau", &[])?,
                points: s.usize_or("points", 100)?,
                zeta_radius: s.f64_or("zeta_radius", 1.0)?,
                x_radius: s.f64_or("x_radius", 5.0)?,
                seed,
                tol_coefficient: s.tolerance("coefficient", 1e-6)?,
            };
            Ok(vec![run_spectral(&p)?])
        }
        Suite::Plancherel => {
            let model = s.model()?;
            let p = PlancherelParams {
                model: model.clone(),
                grid: s.grid()?,
                lambda_half: s.f64_or("lambda_half", 8.0)?,
                lambda_count: s.usize_or("lambda_count", 161)?,
                tau_half: s.f64_or("tau_half", 8.0)?,
                tau_count: s.usize_or("tau_count", 17)?,
                degree: s.usize_or("degree", 12)?,
                tol: s.tolerance("residual", 1e-4)?,
            };
            let mut out = Vec::new();
            if s.keys.get("residual") != Some("off") {
                out.push(run_plancherel(&p)?);
            }
            if s.keys.get("profile").is_some() {
                let profile = s.profile(s.body()?)?;
                let second = named_profile(s, "second")?.unwrap_or_else(|| profile.clone());
                let q = IsomorphismParams {
                    model,
                    profile,
                    second,
                    lambda_count: s.usize_or("iso_lambda_count", 25)?,
                    degree: s.usize_or("iso_degree", 4)?,
                    resample_nodes: s.usize_or("resample_nodes", 64)?,
                    probe_points: s.usize_or("points", 50)?,
                    seed,
                    tol: s.tolerance("isomorphism", 1e-4)?,
                };
                out.push(run_isomorphism(&q)?);
            }
            Ok(out)
        }
        Suite::Rockland => {
            let p = RocklandParams {
                model: s.model()?,
                lambdas: rows(s, "lambdas")?.unwrap_or_else(|| vec![vec![1.0]]),
                tau: list(s, "tau", &[])?,
                degree: s.usize_or("degree", 12)?,
                tol_eigen: s.tolerance("eigen", 1e-8)?,
                tol_overlap: s.tolerance("overlap", 1e-8)?,
            };
            Ok(vec![run_rockland(&p)?])
        }
        Suite::Extend => {
            let body = s.body()?;
            let sweep = list(s, "sweep", &[3.0, 5.0, -4.0, 4.0])?;
            if sweep.len() != 4 {
                return Err(Error::Parse("sweep must be `zeta_radius x_radius y_lo y_hi`".into()));
            }
            let (y_lo, y_hi) = pair(s, "y_range", (-1.0, 2.0))?;
            let p = ExtensionParams {
                model: s.model()?,
                profile: s.profile(body)?,
                points: s.usize_or("points", 200)?,
                seed,
                zeta_radius: s.f64_or("zeta_radius", 1.0)?,
                x_radius: s.f64_or("x_radius", 5.0)?,
                y_lo,
                y_hi,
                order: int(s, "order", 3)? as i32,
                sweep: [sweep[0], sweep[1], sweep[2], sweep[3]],
                sweep_steps: s.usize_or("sweep_steps", 9)?,
                fd_step: s.f64_or("fd_step", 1e-4)?,
                tol_routes: s.tolerance("routes", 1e-5)?,
                tol_boundary: s.tolerance("boundary", 1e-6)?,
                tol_cr: s.tolerance("cr", 1e-5)?,
                decay_height: list(s, "decay_height", &[])?,
                decay_powers: list(s, "decay_powers", &[])?.into_iter().map(|v| v as i32).collect(),
            };
            Ok(vec![run_extension(&p)?])
        }
        Suite::Crcheck => {
            let body = s.body()?;
            let control = named_profile(s, "control")?.ok_or_else(|| Error::Parse("missing key \"control_profile\"".into()))?;
            let p = SupportParams {
                model: s.model()?,
                profile: s.profile(body)?,
                control,
                window: pair(s, "window", (0.9, 2.1))?,
                lambda_half: s.f64_or("lambda_half", 6.0)?,
                lambda_count: s.usize_or("lambda_count", 241)?,
                stencil: stencil(s)?,
                modulation: s.f64_or("modulation", 0.5)?,
                fd_step: s.f64_or("fd_step", 1e-4)?,
                points: s.usize_or("points", 50)?,
                seed,
                tol_mass: s.tolerance("mass", 1e-4)?,
                min_control_residual: s.tolerance("control_residual", 1e-1)?,
                min_control_mass: s.tolerance("control_mass", 0.5)?,
                tol_cr: s.tolerance("cr", 1e-5)?,
            };
            Ok(vec![run_support(&p)?])
        }
        Suite::Windows => {
            let body = s.body()?;
            let p = WindowParams {
                model: s.model()?,
                body: body.clone(),
                profile: s.profile(body)?,
                inner: named_profile(s, "inner")?,
                eps: list(s, "eps", &[0.4, 0.2, 0.1, 0.05, 0.025])?,
                samples: s.usize_or("samples", 2000)?,
                tol_sandwich: s.tolerance("sandwich", 1e-10)?,
                tol_l2: s.tolerance("l2", 1e-3)?,
                derivative_factor: s.tolerance("derivative", 1.01)?,
                tol_windowed: s.tolerance("windowed", 1e-4)?,
            };
            if p.eps.is_empty() {
                return Err(Error::Parse("eps must be nonempty".into()));
            }
            Ok(vec![run_windows(&p)?])
        }
        Suite::Split => {
            let bump = match s.keys.f64s("bump_center")? {
                None => None,
                Some(center) => Some(BumpSpec { center, radius: s.f64_or("bump_radius", 0.5)?, poly: vec![] }),
            };
            let p = SplitParams {
                model: s.model()?,
                body: s.body()?,
                bump,
                grid: s.grid()?,
                samples: s.usize_or("samples", 500)?,
                seed,
                radius: s.f64_or("radius", 8.0)?,
                order: s.usize_or("order", 3)?,
                tol: s.tolerance("invariants", 1e-12)?,
            };
            Ok(vec![run_split(&p)?])
        }
        Suite::Convex => {
            let p = ConvexParams {
                seed,
                samples: s.usize_or("samples", 1000)?,
                cone_samples: s.usize_or("cone_samples", 10_000)?,
                quadrant_expected: s.f64_or("quadrant_expected", std::f64::consts::FRAC_1_SQRT_2)?,
                tol_identity: s.tolerance("identity", 1e-12)?,
                tol_quadrant: s.tolerance("quadrant", 5e-2)?,
            };
            Ok(vec![run_convex(&p)?])
        }
    }
}
