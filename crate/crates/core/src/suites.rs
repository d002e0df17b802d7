//! Verification suites. Each suite takes typed parameters, runs its checks and
//! returns named pass/fail values together with a result table.

use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::convex::{
    cone_inequality_constant, lambda_plus_contains, p_contains, polar, project_body, support_function, ConvexBody,
};
use crate::error::{Error, Result};
use crate::fock::{fock_basis, plancherel_residual, rep_apply, ground_coefficient, Nodes};
use crate::model::{cr_residual, random_points, AmbientPoint, GridSpec, GroupPoint, QuadraticModel, SampledFunction, C64};
use crate::quadrature::{gauss_legendre, tensor, trapezoid};
use crate::rockland::{closed_form_block, rockland_spectrum};
use crate::spectral::spectral_data;
use crate::split::{check_invariants, embed_extension, split, verify_split_growth};
use crate::transform::{
    ambient_sweep, bandlimit_project, extension_of, forward_fn, grid_l2_distance, inverse_fn, inversion_constant,
    non_cr_control, pw_margin, spectral_window, spectrum_support, unit_bump, BandLimited, BumpSpec, Route,
    SpectralProfile,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cmp {
    /// value ≤ tolerance
    Le,
    /// value ≥ tolerance
    Ge,
    /// value finite
    Finite,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub cmp: Cmp,
    pub pass: bool,
    pub witness: Option<String>,
}

impl Check {
    pub fn le(name: &str, value: f64, tolerance: f64) -> Self {
        Self { name: name.into(), value, tolerance, cmp: Cmp::Le, pass: value <= tolerance, witness: None }
    }

    pub fn ge(name: &str, value: f64, tolerance: f64) -> Self {
        Self { name: name.into(), value, tolerance, cmp: Cmp::Ge, pass: value >= tolerance, witness: None }
    }

    pub fn finite(name: &str, value: f64) -> Self {
        Self { name: name.into(), value, tolerance: f64::INFINITY, cmp: Cmp::Finite, pass: value.is_finite(), witness: None }
    }

    pub fn with_witness(mut self, w: impl Into<String>) -> Self {
        self.witness = Some(w.into());
        self
    }

    pub fn relation(&self) -> &'static str {
        match self.cmp {
            Cmp::Le => "<=",
            Cmp::Ge => ">=",
            Cmp::Finite => "finite",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub suite: String,
    pub checks: Vec<Check>,
    pub table: Table,
    pub warnings: Vec<String>,
    /// Wall-clock seconds; reported separately so tables stay reproducible.
    pub seconds: f64,
}

impl SuiteReport {
    fn new(suite: &str, table: Table) -> Self {
        Self { suite: suite.into(), checks: Vec::new(), table, warnings: Vec::new(), seconds: 0.0 }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    fn warn(&mut self, w: &[String]) {
        for x in w {
            if !self.warnings.contains(x) {
                self.warnings.push(x.clone());
            }
        }
    }
}

fn num(x: f64) -> Cell {
    Cell::Num(x)
}

fn text(s: impl Into<String>) -> Cell {
    Cell::Text(s.into())
}

fn fmt_point(zeta: &[C64], tail: &[f64]) -> String {
    let z: Vec<String> = zeta.iter().map(|c| format!("{:.6}{:+.6}i", c.re, c.im)).collect();
    format!("zeta=[{}] x=[{}]", z.join(","), tail.iter().map(|v| format!("{v:.6}")).collect::<Vec<_>>().join(","))
}

fn fmt_ambient(a: &AmbientPoint) -> String {
    let z: Vec<String> = a.zeta.iter().map(|c| format!("{:.6}{:+.6}i", c.re, c.im)).collect();
    let w: Vec<String> = a.z.iter().map(|c| format!("{:.6}{:+.6}i", c.re, c.im)).collect();
    format!("zeta=[{}] z=[{}]", z.join(","), w.join(","))
}

// ---------------------------------------------------------------- spectral

#[derive(Debug, Clone)]
pub struct SpectralParams {
    pub model: QuadraticModel,
    /// λ values tabulated and used for the matrix-coefficient check.
    pub lambdas: Vec<Vec<f64>>,
    /// τ used at each λ (length 2d_λ is taken from the front, padded with 0).
    pub tau: Vec<f64>,
    pub points: usize,
    pub zeta_radius: f64,
    pub x_radius: f64,
    pub seed: u64,
    pub tol_coefficient: f64,
}

fn tau_for(tau: &[f64], len: usize) -> Vec<f64> {
    (0..len).map(|i| tau.get(i).copied().unwrap_or(0.0)).collect()
}

/// SpectralData table over the λ list and the matrix coefficient
/// ⟨π_{λ,τ}(p)e₀,e₀⟩ (Hermite-quadrature displacement) against its closed form.
pub fn run_spectral(p: &SpectralParams) -> Result<SuiteReport> {
    let t0 = Instant::now();
    let mut rep = SuiteReport::new(
        "spectral",
        Table::new(&["lambda", "d_lambda", "rank", "pfaffian", "trace_abs", "in_lambda_plus", "in_p", "invariants", "max_coefficient_error"]),
    );
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let (n, m) = (p.model.n(), p.model.m());
    let mut worst: f64 = 0.0;
    let mut witness = String::new();
    let mut invariant_failures = 0usize;
    for l in &p.lambdas {
        let sd = spectral_data(&p.model, l)?;
        let probes: Vec<Vec<C64>> = (0..4).map(|_| (0..n).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect()).collect();
        let inv = sd.check_invariants(&probes);
        if inv.is_err() {
            invariant_failures += 1;
        }
        let tau = tau_for(&p.tau, 2 * sd.d_lambda);
        let trunc = fock_basis(&sd, 0)?;
        let pts = random_points(n, m, p.points, p.zeta_radius, p.x_radius, &mut rng);
        let errs: Vec<Result<(f64, usize)>> = pts
            .par_iter()
            .enumerate()
            .map(|(i, q)| {
                let quad = rep_apply(&trunc, &tau, q)?.mat[(0, 0)];
                Ok(((quad - ground_coefficient(&sd, &tau, q)).norm(), i))
            })
            .collect();
        let mut local: f64 = 0.0;
        for e in errs {
            let (e, i) = e?;
            if e > local {
                local = e;
            }
            if e > worst {
                worst = e;
                witness = format!("lambda={l:?} tau={tau:?} {}", fmt_point(&pts[i].zeta, &pts[i].x));
            }
        }
        rep.table.push(vec![
            text(format!("{l:?}")),
            Cell::Int(sd.d_lambda as i64),
            Cell::Int(sd.rank() as i64),
            num(sd.pfaffian),
            num(sd.trace_abs()),
            Cell::Int(lambda_plus_contains(&p.model, l)? as i64),
            Cell::Int(p_contains(&p.model, l)? as i64),
            text(if inv.is_ok() { "ok" } else { "fail" }),
            num(local),
        ]);
    }
    rep.checks.push(Check::le("matrix_coefficient", worst, p.tol_coefficient).with_witness(witness));
    rep.checks.push(Check::le("spectral_invariant_failures", invariant_failures as f64, 0.0));
    rep.seconds = t0.elapsed().as_secs_f64();
    Ok(rep)
}

// ---------------------------------------------------------------- plancherel

#[derive(Debug, Clone)]
pub struct PlancherelParams {
    pub model: QuadraticModel,
    pub grid: GridSpec,
    /// Trapezoid λ-grid per dimension: half-width and node count.
    pub lambda_half: f64,
    pub lambda_count: usize,
    pub tau_half: f64,
    pub tau_count: usize,
    pub degree: usize,
    pub tol: f64,
}

/// ‖f‖² against the Plancherel side for f(ζ,x) = e^{−|ζ|²−|x|²}.
pub fn run_plancherel(p: &PlancherelParams) -> Result<SuiteReport> {
    let t0 = Instant::now();
    let (n, m) = (p.model.n(), p.model.m());
    let f = SampledFunction::from_fn(n, m, p.grid, |z, x| {
        let r: f64 = z.iter().map(|c| c.norm_sqr()).sum::<f64>() + x.iter().map(|v| v * v).sum::<f64>();
        C64::new((-r).exp(), 0.0)
    });
    let lr = trapezoid(p.lambda_half, p.lambda_count);
    let lrules: Vec<_> = (0..m).map(|_| &lr).collect();
    let lgrid: Nodes = tensor(&lrules);
    let tr = trapezoid(p.tau_half, p.tau_count);
    let d_guess = crate::spectral::generic_dimension(&p.model, 32, &mut ChaCha8Rng::seed_from_u64(0))?.d;
    let trules: Vec<_> = (0..2 * d_guess).map(|_| &tr).collect();
    let tgrid: Nodes = if d_guess == 0 { (vec![], vec![]) } else { tensor(&trules) };
    let r = plancherel_residual(&p.model, &f, &lgrid, &tgrid, p.degree)?;
    let mut rep = SuiteReport::new("plancherel", Table::new(&["lhs", "rhs", "residual", "generic_dim", "excluded_nodes", "degree"]));
    rep.table.push(vec![num(r.lhs), num(r.rhs), num(r.residual), Cell::Int(r.generic_dim as i64), Cell::Int(r.excluded_nodes as i64), Cell::Int(p.degree as i64)]);
    rep.warn(&r.warnings);
    rep.checks.push(
        Check::le("plancherel_residual", r.residual, p.tol)
            .with_witness(format!("lhs={:.17e} rhs={:.17e} excluded={}", r.lhs, r.rhs, r.excluded_nodes)),
    );
    rep.seconds = t0.elapsed().as_secs_f64();
    Ok(rep)
}

// ---------------------------------------------------------------- F_N isomorphism

#[derive(Debug, Clone)]
pub struct IsomorphismParams {
    pub model: QuadraticModel,
    pub profile: SpectralProfile,
    /// Second profile for the product and convolution rules.
    pub second: SpectralProfile,
    pub lambda_count: usize,
    pub degree: usize,
    /// Gauss–Legendre nodes for the inverse∘forward round trip.
    pub resample_nodes: usize,
    pub probe_points: usize,
    pub seed: u64,
    pub tol: f64,
}

fn grid_1d(lo: f64, hi: f64, k: usize) -> Vec<Vec<f64>> {
    (0..k).map(|i| vec![lo + (hi - lo) * i as f64 / (k - 1).max(1) as f64]).collect()
}

/// forward∘inverse and inverse∘forward round trips, product rule and
/// convolution rule (m = 1).
pub fn run_isomorphism(p: &IsomorphismParams) -> Result<SuiteReport> {
    let t0 = Instant::now();
    if p.model.m() != 1 {
        return Err(Error::Unsupported("the isomorphism suite is implemented for m = 1".into()));
    }
    let n = p.model.n();
    let mut rep = SuiteReport::new("isomorphism", Table::new(&["check", "lambda", "lhs_re", "lhs_im", "rhs"]));
    let b1 = inverse_fn(&p.model, &p.profile)?;
    let b2 = inverse_fn(&p.model, &p.second)?;
    rep.warn(&b1.warnings);
    let s1 = b1.sampled();
    let s2 = b2.sampled_on(s1.grid);
    let (lo1, hi1) = p.profile.support[0];
    let (lo2, hi2) = p.second.support[0];
    let pad = 0.1 * (hi1 - lo1);

    // forward ∘ inverse
    let lams = grid_1d(lo1 - pad, hi1 + pad, p.lambda_count);
    let fw = forward_fn(&p.model, &s1, &lams, p.degree)?;
    rep.warn(&fw.warnings);
    let mut worst: f64 = 0.0;
    let mut wit = String::new();
    for (l, v) in lams.iter().zip(&fw.values) {
        let v = v.ok_or_else(|| Error::Evaluation(format!("forward transform undefined at {l:?}")))?;
        let e = (v - p.profile.eval(l)).norm();
        rep.table.push(vec![text("forward_inverse"), num(l[0]), num(v.re), num(v.im), num(p.profile.eval(l))]);
        if e > worst {
            worst = e;
            wit = format!("lambda={}", l[0]);
        }
    }
    rep.checks.push(Check::le("roundtrip_forward_inverse", worst, p.tol).with_witness(wit));

    // inverse ∘ forward: resynthesise from forward values on Gauss–Legendre nodes
    let rule = gauss_legendre(p.resample_nodes).mapped(lo1, hi1);
    let gl: Vec<Vec<f64>> = rule.nodes.iter().map(|x| vec![*x]).collect();
    let fw2 = forward_fn(&p.model, &s1, &gl, p.degree)?;
    let c = inversion_constant(n, 1);
    let mut weights = Vec::with_capacity(gl.len());
    let mut psi_w = Vec::with_capacity(gl.len());
    for ((l, w), v) in gl.iter().zip(&rule.weights).zip(&fw2.values) {
        let v = v.ok_or_else(|| Error::Evaluation(format!("forward transform undefined at {l:?}")))?;
        psi_w.push(w * v.re);
        weights.push(w * v.re * spectral_data(&p.model, l)?.pfaffian * c);
    }
    let resynth = BandLimited { lambdas: gl.clone(), psi_weights: psi_w, weights, per_dim: gl.len(), warnings: vec![], ..b1.clone() };
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let pts = random_points(n, 1, p.probe_points, 1.5, 10.0, &mut rng);
    let scale = b1.eval(&vec![C64::new(0.0, 0.0); n], &[0.0]).norm();
    let mut worst: f64 = 0.0;
    let mut wit = String::new();
    for q in &pts {
        let e = (resynth.eval(&q.zeta, &q.x) - b1.eval(&q.zeta, &q.x)).norm() / scale;
        if e > worst {
            worst = e;
            wit = fmt_point(&q.zeta, &q.x);
        }
    }
    rep.checks.push(Check::le("roundtrip_inverse_forward", worst, p.tol).with_witness(wit));

    // product rule: F(φ₁φ₂)|Pf| = c (F(φ₁)|Pf|) * (F(φ₂)|Pf|)
    let v1 = s1.grid_values()?;
    let v2 = s2.grid_values()?;
    let prod = SampledFunction::zero(n, 1, s1.grid).with_cache(v1.iter().zip(v2.iter()).map(|(a, b)| a * b).collect());
    let plams = grid_1d(lo1 + lo2, hi1 + hi2, p.lambda_count);
    let fp = forward_fn(&p.model, &prod, &plams, p.degree)?;
    let conv_rule = gauss_legendre(512).mapped(lo1, hi1);
    let mut worst: f64 = 0.0;
    let mut wit = String::new();
    for (l, v) in plams.iter().zip(&fp.values) {
        let v = v.ok_or_else(|| Error::Evaluation(format!("forward transform undefined at {l:?}")))?;
        let pf = spectral_data(&p.model, l)?.pfaffian;
        let mut acc = 0.0;
        for (mu, w) in conv_rule.nodes.iter().zip(&conv_rule.weights) {
            let rest = l[0] - mu;
            let b = p.second.eval(&[rest]);
            if b != 0.0 {
                acc += w * p.profile.eval(&[*mu]) * spectral_data(&p.model, &[*mu])?.pfaffian * b * spectral_data(&p.model, &[rest])?.pfaffian;
            }
        }
        let rhs = c * acc;
        let lhs = v * pf;
        rep.table.push(vec![text("product"), num(l[0]), num(lhs.re), num(lhs.im), num(rhs)]);
        let e = (lhs - rhs).norm();
        if e > worst {
            worst = e;
            wit = format!("lambda={}", l[0]);
        }
    }
    rep.checks.push(Check::le("product_rule", worst, p.tol).with_witness(wit));

    // convolution rule: F(φ₁ * φ₂) = F(φ₁)F(φ₂)
    let conv = bandlimit_project(&p.model, &s1, &p.second)?;
    let fc = forward_fn(&p.model, &conv, &lams, p.degree)?;
    let mut worst: f64 = 0.0;
    let mut wit = String::new();
    for (l, v) in lams.iter().zip(&fc.values) {
        let v = v.ok_or_else(|| Error::Evaluation(format!("forward transform undefined at {l:?}")))?;
        let rhs = p.profile.eval(l) * p.second.eval(l);
        rep.table.push(vec![text("convolution"), num(l[0]), num(v.re), num(v.im), num(rhs)]);
        let e = (v - rhs).norm();
        if e > worst {
            worst = e;
            wit = format!("lambda={}", l[0]);
        }
    }
    rep.checks.push(Check::le("convolution_rule", worst, p.tol).with_witness(wit));
    rep.seconds = t0.elapsed().as_secs_f64();
    Ok(rep)
}

// ---------------------------------------------------------------- rockland

#[derive(Debug, Clone)]
pub struct RocklandParams {
    pub model: QuadraticModel,
    pub lambdas: Vec<Vec<f64>>,
    pub tau: Vec<f64>,
    pub degree: usize,
    pub tol_eigen: f64,
    pub tol_overlap: f64,
}

/// Assembled dπ(L) block spectra against the closed form, and the ground
/// eigenvector's overlap with e₀.
pub fn run_rockland(p: &RocklandParams) -> Result<SuiteReport> {
    let t0 = Instant::now();
    let mut rep = SuiteReport::new("rockland", Table::new(&["lambda", "index", "assembled", "closed_form", "relative_error"]));
    let mut worst: f64 = 0.0;
    let mut worst_overlap: f64 = 0.0;
    let mut wit = String::new();
    for l in &p.lambdas {
        let sd = spectral_data(&p.model, l)?;
        let tau = tau_for(&p.tau, 2 * sd.d_lambda);
        let trunc = fock_basis(&sd, p.degree)?;
        let spec = rockland_spectrum(&trunc, &tau)?;
        let cf = closed_form_block(&trunc, &tau);
        for (i, (a, b)) in spec.eigenvalues.iter().zip(&cf).enumerate() {
            let e = (a - b).abs() / b.abs().max(1.0);
            rep.table.push(vec![text(format!("{l:?}")), Cell::Int(i as i64), num(*a), num(*b), num(e)]);
            if e > worst {
                worst = e;
                wit = format!("lambda={l:?} index={i}");
            }
        }
        let overlap = spec.ground_vector[0].norm_sqr();
        worst_overlap = worst_overlap.max(1.0 - overlap);
    }
    rep.checks.push(Check::le("eigenvalues", worst, p.tol_eigen).with_witness(wit));
    rep.checks.push(Check::le("ground_overlap_defect", worst_overlap, p.tol_overlap));
    rep.seconds = t0.elapsed().as_secs_f64();
    Ok(rep)
}

// ---------------------------------------------------------------- extension

#[derive(Debug, Clone)]
pub struct ExtensionParams {
    pub model: QuadraticModel,
    pub profile: SpectralProfile,
    pub points: usize,
    pub seed: u64,
    /// Random ambient points: |ζ| ≤ zeta_radius, |Re z| ≤ x_radius, Im z in [y_lo, y_hi].
    pub zeta_radius: f64,
    pub x_radius: f64,
    pub y_lo: f64,
    pub y_hi: f64,
    pub order: i32,
    /// Margin sweep: |ζ| ≤ sweep[0], |Re z| ≤ sweep[1], Im z ∈ [sweep[2], sweep[3]].
    pub sweep: [f64; 4],
    pub sweep_steps: usize,
    pub fd_step: f64,
    pub tol_routes: f64,
    pub tol_boundary: f64,
    pub tol_cr: f64,
    /// Height in Γ_K and boundary-weight powers for the weighted decay check;
    /// empty disables it.
    pub decay_height: Vec<f64>,
    pub decay_powers: Vec<i32>,
}

fn random_ambient(n: usize, m: usize, count: usize, zr: f64, xr: f64, ylo: f64, yhi: f64, rng: &mut ChaCha8Rng) -> Vec<AmbientPoint> {
    random_points(n, m, count, zr, xr, rng)
        .into_iter()
        .map(|g| AmbientPoint::new(g.zeta, g.x.iter().map(|x| C64::new(*x, rng.gen_range(ylo..=yhi))).collect()))
        .collect()
}

/// Routes A and B, boundary restriction, CR residual of f₀, growth margin and
/// the weighted decay check.
pub fn run_extension(p: &ExtensionParams) -> Result<SuiteReport> {
    let t0 = Instant::now();
    let (n, m) = (p.model.n(), p.model.m());
    let mut rep = SuiteReport::new("extend", Table::new(&ext_header(n, m)));
    let bl = inverse_fn(&p.model, &p.profile)?;
    rep.warn(&bl.warnings);
    let ea = extension_of(&bl, Route::A)?;
    let eb = extension_of(&bl, Route::B)?;
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let pts = random_ambient(n, m, p.points, p.zeta_radius, p.x_radius, p.y_lo, p.y_hi, &mut rng);
    let vals: Vec<Result<(C64, C64)>> = pts.par_iter().map(|a| Ok((ea.eval(a)?, eb.eval(a)?))).collect();
    let mut worst: f64 = 0.0;
    let mut wit = String::new();
    for (a, v) in pts.iter().zip(vals) {
        let (va, vb) = v?;
        let e = (va - vb).norm() / vb.norm();
        if !(e <= worst) {
            worst = if e.is_nan() { f64::INFINITY } else { e };
            wit = fmt_ambient(a);
        }
    }
    rep.checks.push(Check::le("routes_agree", worst, p.tol_routes).with_witness(wit));

    // boundary restriction z = x + iΦ(ζ)
    let mut worst: f64 = 0.0;
    let mut wit = String::new();
    let scale = bl.eval(&vec![C64::new(0.0, 0.0); n], &vec![0.0; m]).norm().max(f64::MIN_POSITIVE);
    for a in &pts {
        let ph = p.model.phi_diag(&a.zeta);
        let x: Vec<f64> = a.z.iter().map(|c| c.re).collect();
        let b = AmbientPoint::new(a.zeta.clone(), x.iter().zip(&ph).map(|(x, v)| C64::new(*x, *v)).collect());
        let f0 = bl.eval(&a.zeta, &x);
        let e = (ea.eval(&b)? - f0).norm().max((eb.eval(&b)? - f0).norm()) / scale;
        if e > worst {
            worst = e;
            wit = fmt_ambient(&b);
        }
    }
    rep.checks.push(Check::le("boundary_restriction", worst, p.tol_boundary).with_witness(wit));

    // CR residual of f₀
    let f0 = SampledFunction::from_fn(n, m, p.profile.n_grid, {
        let bl = bl.clone();
        move |z, x| bl.eval(z, x)
    });
    let gp: Vec<GroupPoint> = random_points(n, m, 50, p.zeta_radius, p.x_radius, &mut rng);
    let cr = cr_residual(&p.model, &f0, &gp, p.fd_step)?;
    rep.checks.push(Check::le("cr_residual", cr, p.tol_cr));

    // growth margin on the sweep box
    let sweep = ambient_sweep(n, m, p.sweep[0], p.sweep[1], p.sweep[2], p.sweep[3], p.sweep_steps);
    let mr = pw_margin(&p.model, &eb, &p.profile.body, p.order, &sweep)?;
    let mut c = Check::finite("pw_margin", mr.margin);
    if !mr.finite {
        c.pass = false;
    }
    if let Some(w) = &mr.witness {
        c = c.with_witness(fmt_ambient(w));
    }
    rep.checks.push(c);
    if !mr.clamped.is_empty() {
        rep.warnings.push(format!("{} sweep points clamped at H_K(rho) = 40", mr.clamped.len()));
    }
    rep.warnings.push(format!("margin (1+|zeta|^2+|z|)^N: {:.6e}; (1+|zeta|+|z|)^N: {:.6e}", mr.margin, mr.margin_linear));

    // sweep rows (route B values) for the CSV
    let rows: Vec<Result<Vec<Cell>>> = sweep
        .par_iter()
        .step_by((sweep.len() / 200).max(1))
        .map(|a| {
            let v = eb.eval(a)?;
            let rho = crate::model::rho(&p.model, a)?;
            let h = support_function(&p.profile.body, &rho).min(40.0);
            let zn: f64 = a.zeta.iter().map(|z| z.norm_sqr()).sum();
            let wn: f64 = a.z.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            let margin = v.norm() * (1.0 + zn + wn).powi(p.order) * (-h).exp();
            let mut row = Vec::new();
            row.extend(a.zeta.iter().map(|z| num(z.re)));
            row.extend(a.zeta.iter().map(|z| num(z.im)));
            row.extend(a.z.iter().map(|z| num(z.re)));
            row.extend(a.z.iter().map(|z| num(z.im)));
            row.extend([num(v.re), num(v.im), num(margin)]);
            Ok(row)
        })
        .collect();
    for r in rows {
        rep.table.push(r?);
    }

    // weighted decay at a height in Γ_K as the boundary weight sharpens
    if !p.decay_height.is_empty() && !p.decay_powers.is_empty() {
        let xs: Vec<f64> = (0..41).map(|i| -20.0 + i as f64).collect();
        let zs: Vec<Vec<C64>> = (0..5).map(|i| (0..n).map(|_| C64::new(0.3 * i as f64, -0.2 * i as f64)).collect()).collect();
        let hk = support_function(&p.profile.body, &p.decay_height);
        let mut sups = Vec::new();
        for &pw in &p.decay_powers {
            let prof = p.profile.with_boundary_weight(pw)?;
            let e = extension_of(&inverse_fn(&p.model, &prof)?, Route::B)?;
            let mut sup: f64 = 0.0;
            for z in &zs {
                let ph = p.model.phi_diag(z);
                for x in &xs {
                    let w: Vec<C64> = (0..m).map(|k| C64::new(*x, p.decay_height[k] + ph[k])).collect();
                    let v = e.eval(&AmbientPoint::new(z.clone(), w.clone()))?.norm();
                    let wn: f64 = w.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
                    sup = sup.max(v * (1.0 + wn).powi(2) * (-hk).exp());
                }
            }
            sups.push(sup);
        }
        let increase = sups.windows(2).map(|w| (w[1] - w[0]).max(0.0)).fold(0.0, f64::max);
        let all_finite = sups.iter().all(|s| s.is_finite());
        rep.checks.push(Check::le("weighted_decay_increase", if all_finite { increase } else { f64::INFINITY }, 0.0).with_witness(format!("sups={sups:?}")));
    }
    rep.seconds = t0.elapsed().as_secs_f64();
    Ok(rep)
}

fn ext_header(n: usize, m: usize) -> Vec<&'static str> {
    let leak = |s: String| -> &'static str { Box::leak(s.into_boxed_str()) };
    let mut h = Vec::new();
    h.extend((0..n).map(|j| leak(format!("zeta_re{}", j + 1))));
    h.extend((0..n).map(|j| leak(format!("zeta_im{}", j + 1))));
    h.extend((0..m).map(|k| leak(format!("z_re{}", k + 1))));
    h.extend((0..m).map(|k| leak(format!("z_im{}", k + 1))));
    h.extend(["f_re", "f_im", "margin"]);
    h
}

// ---------------------------------------------------------------- CR / spectral support

#[derive(Debug, Clone)]
pub struct SupportParams {
    pub model: QuadraticModel,
    /// CR example, spectrum inside P̄.
    pub profile: SpectralProfile,
    /// Non-CR control, spectrum outside P̄.
    pub control: SpectralProfile,
    /// Spectral window around the CR profile: mass outside it must be small.
    pub window: (f64, f64),
    pub lambda_half: f64,
    pub lambda_count: usize,
    pub stencil: Vec<Vec<C64>>,
    pub modulation: f64,
    pub fd_step: f64,
    pub points: usize,
    pub seed: u64,
    pub tol_mass: f64,
    pub min_control_residual: f64,
    pub min_control_mass: f64,
    pub tol_cr: f64,
}

/// Euclidean spectral support of CR examples versus a non-CR control.
pub fn run_support(p: &SupportParams) -> Result<SuiteReport> {
    let t0 = Instant::now();
    if p.model.m() != 1 {
        return Err(Error::Unsupported("the support suite is implemented for m = 1".into()));
    }
    let n = p.model.n();
    let mut rep = SuiteReport::new("crcheck", Table::new(&["function", "lambda", "mass"]));
    let bl = inverse_fn(&p.model, &p.profile)?;
    let f0 = SampledFunction::from_fn(n, 1, p.profile.n_grid, {
        let bl = bl.clone();
        move |z, x| bl.eval(z, x)
    });
    let ctrl = non_cr_control(&p.model, &p.control)?;
    let lams = grid_1d(-p.lambda_half, p.lambda_half, p.lambda_count);
    let in_p = |l: &[f64]| p_contains(&p.model, l).unwrap_or(false);
    let (wlo, whi) = p.window;
    let in_window = |l: &[f64]| l[0] >= wlo && l[0] <= whi;
    let s_cr = spectrum_support(&f0, &p.stencil, &lams, &in_p)?;
    let s_win = spectrum_support(&f0, &p.stencil, &lams, &in_window)?;
    let s_ctrl = spectrum_support(&ctrl, &p.stencil, &lams, &in_p)?;
    for (name, s) in [("cr", &s_cr), ("control", &s_ctrl)] {
        for (j, l) in s.lambdas.iter().enumerate() {
            let mass: f64 = s.profile.iter().map(|row| row[j] * row[j]).sum();
            rep.table.push(vec![text(name), num(l[0]), num(mass)]);
        }
    }
    rep.checks.push(Check::le("cr_outside_p_mass", s_cr.outside_fraction, p.tol_mass));
    rep.checks.push(Check::le("cr_outside_window_mass", s_win.outside_fraction, p.tol_mass));
    rep.checks.push(Check::ge("control_outside_p_mass", s_ctrl.outside_fraction, p.min_control_mass));

    // modulation shifts the x-spectrum by λ₀
    let l0 = p.modulation;
    let modf = SampledFunction::from_fn(n, 1, p.profile.n_grid, {
        let bl = bl.clone();
        move |z, x| bl.eval(z, x) * C64::from_polar(1.0, l0 * x[0])
    });
    let shifted: Vec<Vec<f64>> = lams.iter().map(|l| vec![l[0] + l0]).collect();
    let s_mod = spectrum_support(&modf, &p.stencil, &shifted, &in_p)?;
    let peak = s_cr.profile.iter().flatten().cloned().fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let shift_err = s_mod.profile.iter().flatten().zip(s_cr.profile.iter().flatten()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / peak;
    rep.checks.push(Check::le("modulation_shift", shift_err, 1e-10));

    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let gp = random_points(n, 1, p.points, 1.0, 5.0, &mut rng);
    let r_cr = cr_residual(&p.model, &f0, &gp, p.fd_step)?;
    let r_ctrl = cr_residual(&p.model, &ctrl, &gp, p.fd_step)?;
    rep.checks.push(Check::le("cr_residual", r_cr, p.tol_cr));
    rep.checks.push(Check::ge("control_cr_residual", r_ctrl, p.min_control_residual));
    rep.seconds = t0.elapsed().as_secs_f64();
    Ok(rep)
}

// ---------------------------------------------------------------- windows

#[derive(Debug, Clone)]
pub struct WindowParams {
    pub model: QuadraticModel,
    pub body: ConvexBody,
    /// Function to project (its spectrum lies in K).
    pub profile: SpectralProfile,
    /// Function whose spectrum lies where the coarsest window equals 1.
    pub inner: Option<SpectralProfile>,
    /// Dyadic ε sweep, coarsest first.
    pub eps: Vec<f64>,
    pub samples: usize,
    pub tol_sandwich: f64,
    pub tol_l2: f64,
    pub derivative_factor: f64,
    pub tol_windowed: f64,
}

/// Window sandwich, derivative bound, band-limit projection convergence.
pub fn run_windows(p: &WindowParams) -> Result<SuiteReport> {
    let t0 = Instant::now();
    if p.body.dim() != 1 {
        return Err(Error::Unsupported("the window suite is implemented for m = 1".into()));
    }
    let mut rep = SuiteReport::new("windows", Table::new(&["eps", "sandwich_violation", "max_derivative", "derivative_bound", "l2_distance"]));
    let (klo, khi) = p.body.bounding_box().ok_or_else(|| Error::Contract("empty body".into()))?[0];
    let f = inverse_fn(&p.model, &p.profile)?.sampled();
    let grid = f.grid;
    let rule = gauss_legendre(400).mapped(-1.0, 1.0);
    let bump_mass: f64 = rule.nodes.iter().zip(&rule.weights).map(|(u, w)| w * unit_bump(u * u)).sum();
    let psi_prime_l1 = 2.0 * unit_bump(0.0) / bump_mass;
    let mut worst_sandwich: f64 = 0.0;
    let mut worst_deriv_ratio: f64 = 0.0;
    let mut dists = Vec::new();
    for &eps in &p.eps {
        let w = spectral_window(&p.body, eps, grid)?;
        let (in_lo, in_hi) = (klo + eps, khi - eps);
        let (out_lo, out_hi) = (klo + eps / 4.0, khi - eps / 4.0);
        let mut viol: f64 = 0.0;
        let mut dmax: f64 = 0.0;
        let pad = 0.1 * (khi - klo);
        let hd = 1e-6;
        for i in 0..=p.samples {
            let l = klo - pad + (khi - klo + 2.0 * pad) * i as f64 / p.samples as f64;
            let v = w.eval(&[l]);
            let lower = if l >= in_lo && l <= in_hi { 1.0 } else { 0.0 };
            let upper = if l >= out_lo && l <= out_hi { 1.0 } else { 0.0 };
            viol = viol.max((lower - v).max(0.0)).max((v - upper).max(0.0));
            dmax = dmax.max(((w.eval(&[l + hd]) - w.eval(&[l - hd])) / (2.0 * hd)).abs());
        }
        let bound = 4.0 / eps * psi_prime_l1;
        worst_sandwich = worst_sandwich.max(viol);
        worst_deriv_ratio = worst_deriv_ratio.max(dmax / bound);
        let fe = bandlimit_project(&p.model, &f, &w)?;
        let d = grid_l2_distance(&fe, &f)?;
        dists.push(d);
        rep.table.push(vec![num(eps), num(viol), num(dmax), num(bound), num(d)]);
    }
    rep.checks.push(Check::le("window_sandwich", worst_sandwich, p.tol_sandwich));
    rep.checks.push(Check::le("window_derivative_ratio", worst_deriv_ratio, p.derivative_factor));
    let increase = dists.windows(2).map(|w| (w[1] - w[0]).max(0.0)).fold(0.0, f64::max);
    rep.checks.push(Check::le("l2_nonincreasing", increase, 0.0).with_witness(format!("{dists:?}")));
    rep.checks.push(Check::le("l2_finest", *dists.last().unwrap_or(&f64::INFINITY), p.tol_l2));
    if let Some(inner) = &p.inner {
        let g = inverse_fn(&p.model, inner)?.sampled_on(grid);
        let w = spectral_window(&p.body, p.eps[0], grid)?;
        let ge = bandlimit_project(&p.model, &g, &w)?;
        let a = g.grid_values()?;
        let b = ge.grid_values()?;
        let sup = a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        rep.checks.push(Check::le("already_windowed", sup, p.tol_windowed));
    }
    let zero = spectral_window(&p.body, khi - klo, grid)?;
    let z = bandlimit_project(&p.model, &f, &zero)?;
    let zmax = z.grid_values()?.iter().map(|v| v.norm()).fold(0.0, f64::max);
    rep.checks.push(Check::le("zero_window", zmax, 0.0));
    rep.seconds = t0.elapsed().as_secs_f64();
    Ok(rep)
}

// ---------------------------------------------------------------- convex

#[derive(Debug, Clone)]
pub struct ConvexParams {
    pub seed: u64,
    pub samples: usize,
    pub cone_samples: usize,
    pub quadrant_expected: f64,
    pub tol_identity: f64,
    pub tol_quadrant: f64,
}

fn random_polytope(dim: usize, count: usize, rng: &mut ChaCha8Rng) -> ConvexBody {
    let verts = (0..count).map(|_| (0..dim).map(|_| rng.gen_range(-2.0..2.0)).collect()).collect();
    ConvexBody::new(dim, verts, false).expect("finite vertices")
}

/// Orthonormal basis of a random k-dimensional subspace of R^dim.
fn random_subspace(dim: usize, k: usize, rng: &mut ChaCha8Rng) -> nalgebra::DMatrix<f64> {
    let a = nalgebra::DMatrix::from_fn(dim, k, |_, _| rng.gen_range(-1.0..1.0));
    let q = a.qr().q();
    q.columns(0, k).into_owned()
}

/// Projection identity, cone constants, bipolar agreement, subadditivity.
pub fn run_convex(p: &ConvexParams) -> Result<SuiteReport> {
    let t0 = Instant::now();
    let mut rep = SuiteReport::new("convex", Table::new(&["check", "value", "samples"]));
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);

    // H_K(v) = H_{proj K}(coords of v) for v in the subspace
    let mut worst: f64 = 0.0;
    for trial in 0..p.samples {
        let dim = 2 + trial % 3;
        let k = 1 + trial % dim;
        let body = random_polytope(dim, 3 + trial % 5, &mut rng);
        let basis = random_subspace(dim, k, &mut rng);
        let proj = project_body(&body, &basis)?;
        let coords: Vec<f64> = (0..k).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let v: Vec<f64> = (0..dim).map(|r| (0..k).map(|j| basis[(r, j)] * coords[j]).sum()).collect();
        let e = (support_function(&body, &v) - support_function(&proj, &coords)).abs();
        worst = worst.max(e);
    }
    rep.table.push(vec![text("projection_identity"), num(worst), Cell::Int(p.samples as i64)]);
    rep.checks.push(Check::le("projection_identity", worst, p.tol_identity));

    // subadditivity and positive homogeneity
    let mut worst_sub: f64 = 0.0;
    let mut worst_hom: f64 = 0.0;
    for _ in 0..p.samples {
        let body = random_polytope(3, 6, &mut rng);
        let u: Vec<f64> = (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let v: Vec<f64> = (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let t: f64 = rng.gen_range(0.0..5.0);
        let uv: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a + b).collect();
        let tu: Vec<f64> = u.iter().map(|a| t * a).collect();
        worst_sub = worst_sub.max(support_function(&body, &uv) - support_function(&body, &u) - support_function(&body, &v));
        worst_hom = worst_hom.max((support_function(&body, &tu) - t * support_function(&body, &u)).abs());
    }
    rep.table.push(vec![text("subadditivity_excess"), num(worst_sub.max(0.0)), Cell::Int(p.samples as i64)]);
    rep.table.push(vec![text("homogeneity"), num(worst_hom), Cell::Int(p.samples as i64)]);
    rep.checks.push(Check::le("subadditivity", worst_sub.max(0.0), p.tol_identity));
    rep.checks.push(Check::le("homogeneity", worst_hom, p.tol_identity));

    // cone constants
    let quadrant = ConvexBody::cone(2, vec![vec![1.0, 0.0], vec![0.0, 1.0]])?;
    let cq = cone_inequality_constant(&quadrant, p.cone_samples, &mut rng)?;
    rep.table.push(vec![text("quadrant_constant"), num(cq), Cell::Int(p.cone_samples as i64)]);
    rep.checks.push(
        Check::le("quadrant_constant", (cq - p.quadrant_expected).abs(), p.tol_quadrant)
            .with_witness(format!("sampled infimum {cq:.17e}, expected {:.17e}", p.quadrant_expected)),
    );
    let half_line = ConvexBody::cone(1, vec![vec![1.0]])?;
    let ch = cone_inequality_constant(&half_line, p.cone_samples, &mut rng)?;
    rep.table.push(vec![text("half_line_constant"), num(ch), Cell::Int(p.cone_samples as i64)]);
    rep.checks.push(Check::le("half_line_constant", (ch - 1.0).abs(), 1e-12));

    // bipolar: A°° = conv(A ∪ {0})
    let mut disagreements = 0usize;
    let a = random_polytope(3, 7, &mut rng);
    let mut with_zero = a.vertices().to_vec();
    with_zero.push(vec![0.0; 3]);
    let hull = ConvexBody::new(3, with_zero, false)?;
    let pol = polar(a.vertices(), 3, false)?;
    let bip = polar(&pol.vertices()?, 3, false)?;
    for _ in 0..p.samples {
        let v: Vec<f64> = (0..3).map(|_| rng.gen_range(-2.5..2.5)).collect();
        if bip.contains(&v) != hull.contains(&v)? {
            disagreements += 1;
        }
    }
    rep.table.push(vec![text("bipolar_disagreements"), Cell::Int(disagreements as i64), Cell::Int(p.samples as i64)]);
    rep.checks.push(Check::le("bipolar_disagreements", disagreements as f64, 0.0));
    rep.seconds = t0.elapsed().as_secs_f64();
    Ok(rep)
}

// ---------------------------------------------------------------- split

#[derive(Debug, Clone)]
pub struct SplitParams {
    pub model: QuadraticModel,
    pub body: ConvexBody,
    /// Bump in the coordinates of F_{K,2} for the embedded extension.
    pub bump: Option<BumpSpec>,
    pub grid: GridSpec,
    pub samples: usize,
    pub seed: u64,
    pub radius: f64,
    pub order: usize,
    pub tol: f64,
}

/// SplitData invariants, H_K(ρ) invariance and growth along the F_{K,1} and
/// E_{K,1} directions.
pub fn run_split(p: &SplitParams) -> Result<SuiteReport> {
    let t0 = Instant::now();
    let s = split(&p.model, &p.body)?;
    let mut rep = SuiteReport::new("split", Table::new(&["quantity", "value"]));
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let inv = check_invariants(&s, p.samples, &mut rng)?;
    for (k, v) in [
        ("dim_F1", s.f1.ncols() as f64),
        ("dim_F2", s.f2.ncols() as f64),
        ("dim_E1", s.e1.ncols() as f64),
        ("dim_E2", s.e2.ncols() as f64),
        ("phi_difference", inv.phi_difference),
        ("normality", inv.normality),
        ("pairing", inv.pairing),
        ("support_invariance", inv.support_invariance),
        ("lambda_plus_mismatch", inv.lambda_plus_mismatch),
    ] {
        rep.table.push(vec![text(k), num(v)]);
    }
    rep.checks.push(Check::le("split_invariants", inv.phi_difference.max(inv.normality).max(inv.pairing), p.tol));
    rep.checks.push(Check::le("support_invariance", inv.support_invariance, p.tol));
    rep.checks.push(Check::le("lambda_plus_mismatch", inv.lambda_plus_mismatch, 0.0));
    if let Some(b) = &p.bump {
        if s.phi2.m() == 1 && s.e2.ncols() > 0 {
            let prof = SpectralProfile::bump(s.body2.clone(), b.clone(), 64, p.grid)?;
            let f2 = extension_of(&inverse_fn(&s.phi2, &prof)?, Route::B)?;
            let f = embed_extension(&s, &f2);
            let base = AmbientPoint::new(vec![C64::new(0.2, 0.1); p.model.n()], vec![C64::new(0.3, 0.5); p.model.m()]);
            let g = verify_split_growth(&s, &f, &base, p.radius, p.order)?;
            rep.table.push(vec![text("growth_degree"), num(g.degree)]);
            rep.table.push(vec![text("growth_rays"), num(g.rays as f64)]);
            rep.table.push(vec![text("log_growth_ratio"), num(g.log_growth_ratio)]);
            rep.checks.push(Check::le("embedded_growth_degree", g.degree, 0.0));
            let mut c = Check::le("exponential_growth", g.exponential as u8 as f64, 0.0);
            if let Some(w) = &g.witness {
                c = c.with_witness(fmt_ambient(w));
            }
            rep.checks.push(c);
            if s.e1.ncols() > 0 {
                let poly = f.times(Arc::new({
                    let e1 = s.e1.clone();
                    move |z: &[C64], _: &[C64]| (0..z.len()).map(|r| e1[(r, 0)].conj() * z[r]).sum()
                }));
                let g1 = verify_split_growth(&s, &poly, &base, p.radius, p.order)?;
                rep.table.push(vec![text("degenerate_direction_degree"), num(g1.degree)]);
                rep.checks.push(Check::le("degenerate_direction_degree", (g1.degree - 1.0).abs(), 0.0));
            }
        }
    }
    rep.seconds = t0.elapsed().as_secs_f64();
    Ok(rep)
}

/// The HEIS1 bump profile on K = [1,2] used across suites.
pub fn heis_bump(center: f64, radius: f64, grid: GridSpec) -> Result<SpectralProfile> {
    SpectralProfile::bump(ConvexBody::cuboid(&[(1.0, 2.0)]), BumpSpec { center: vec![center], radius, poly: vec![] }, 64, grid)
}
