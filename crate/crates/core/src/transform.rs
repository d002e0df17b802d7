//! Band-limited functions on N: F_N and its inverse, holomorphic extension
//! by two independent routes, growth margins, spectral windows, band-limit
//! projection and Euclidean spectral support.

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::convex::{erode, lambda_plus_contains, p_contains, support_function, ConvexBody, HRep};
use crate::error::{check_dim, Error, Result};
use crate::fock::{fock_basis, group_convolve, pi_of_f, rep_apply, x_transform};
use crate::model::{AmbientPoint, GridSpec, GroupPoint, QuadraticModel, SampledFunction, C64};
use crate::quadrature::{gauss_legendre, pairwise_sum, pairwise_sum_c, tensor};
use crate::spectral::spectral_data;

pub type ProfileEval = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Polynomial-times-bump shape: Σ c_β (λ − center)^β · b((λ − center)/radius),
/// with b(u) = exp(1 − 1/(1 − |u|²)) on the unit ball.
#[derive(Debug, Clone, PartialEq)]
pub struct BumpSpec {
    pub center: Vec<f64>,
    pub radius: f64,
    pub poly: Vec<(Vec<usize>, f64)>,
}

/// Unit bump b(u) = exp(1 − 1/(1 − |u|²)), zero for |u| ≥ 1.
pub fn unit_bump(u2: f64) -> f64 {
    if u2 >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - u2)).exp()
    }
}

impl BumpSpec {
    pub fn eval(&self, lambda: &[f64]) -> f64 {
        let d: Vec<f64> = lambda.iter().zip(&self.center).map(|(l, c)| l - c).collect();
        let u2 = d.iter().map(|x| x * x).sum::<f64>() / (self.radius * self.radius);
        let b = unit_bump(u2);
        if b == 0.0 {
            return 0.0;
        }
        let p: f64 = if self.poly.is_empty() {
            1.0
        } else {
            self.poly
                .iter()
                .map(|(beta, c)| c * beta.iter().zip(&d).map(|(&k, x)| x.powi(k as i32)).product::<f64>())
                .sum()
        };
        p * b
    }
}

/// ψ on F′ supported in K, with the λ box used for quadrature and the N grid
/// on which its inverse transform is sampled.
#[derive(Clone)]
pub struct SpectralProfile {
    pub body: ConvexBody,
    psi: ProfileEval,
    /// Integration box in F′ (ψ vanishes outside it).
    pub support: Vec<(f64, f64)>,
    /// Initial Gauss–Legendre node count per dimension.
    pub nodes: usize,
    pub n_grid: GridSpec,
    pub bump: Option<BumpSpec>,
    pub is_zero: bool,
}

impl std::fmt::Debug for SpectralProfile {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "SpectralProfile(support={:?}, nodes={}, bump={:?}, zero={})", self.support, self.nodes, self.bump, self.is_zero)
    }
}

impl SpectralProfile {
    /// Bump profile; the bump ball must lie inside K.
    pub fn bump(body: ConvexBody, spec: BumpSpec, nodes: usize, n_grid: GridSpec) -> Result<Self> {
        check_dim(body.dim(), spec.center.len())?;
        if !(spec.radius > 0.0) {
            return Err(Error::Contract("bump radius must be positive".into()));
        }
        let dist = crate::convex::boundary_distance(&body, &spec.center)?;
        if dist < spec.radius * (1.0 - 1e-12) {
            return Err(Error::Contract(format!("bump ball of radius {} does not fit in K (distance {dist})", spec.radius)));
        }
        let support = spec.center.iter().map(|c| (c - spec.radius, c + spec.radius)).collect();
        let s2 = spec.clone();
        Ok(Self { body, psi: Arc::new(move |l| s2.eval(l)), support, nodes, n_grid, bump: Some(spec), is_zero: false })
    }

    pub fn from_fn(body: ConvexBody, support: Vec<(f64, f64)>, nodes: usize, n_grid: GridSpec, psi: ProfileEval) -> Result<Self> {
        check_dim(body.dim(), support.len())?;
        Ok(Self { body, psi, support, nodes, n_grid, bump: None, is_zero: false })
    }

    pub fn zero(body: ConvexBody, n_grid: GridSpec) -> Self {
        let m = body.dim();
        Self { body, psi: Arc::new(|_| 0.0), support: vec![(0.0, 0.0); m], nodes: 1, n_grid, bump: None, is_zero: true }
    }

    pub fn eval(&self, lambda: &[f64]) -> f64 {
        (self.psi)(lambda)
    }

    pub fn evaluator(&self) -> ProfileEval {
        self.psi.clone()
    }

    /// ψ·min(1, d(λ, ∂K))^power.
    pub fn with_boundary_weight(&self, power: i32) -> Result<Self> {
        let body = self.body.clone();
        let psi = self.psi.clone();
        let mut out = self.clone();
        out.bump = None;
        out.psi = Arc::new(move |l| {
            let d = crate::convex::boundary_distance(&body, l).unwrap_or(0.0);
            psi(l) * d.min(1.0).powi(power)
        });
        Ok(out)
    }

    /// Largest |ψ| over `samples` points of ∂K and its exterior band; zero for
    /// a valid profile.
    pub fn max_outside(&self, samples: &[Vec<f64>]) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for s in samples {
            if !self.body.contains(s)? || crate::convex::boundary_distance(&self.body, s)? == 0.0 {
                worst = worst.max(self.eval(s).abs());
            }
        }
        Ok(worst)
    }
}

/// Gauss–Legendre tensor nodes over the profile box with ψ-weights; masked to K.
fn profile_nodes(profile: &SpectralProfile, per_dim: usize, hrep: Option<&HRep>) -> (Vec<Vec<f64>>, Vec<f64>) {
    let rules: Vec<_> = profile.support.iter().map(|&(a, b)| gauss_legendre(per_dim).mapped(a, b)).collect();
    let refs: Vec<_> = rules.iter().collect();
    let (pts, wts) = tensor(&refs);
    let mut out_p = Vec::new();
    let mut out_w = Vec::new();
    for (p, w) in pts.into_iter().zip(wts) {
        if let Some(h) = hrep {
            if !h.contains(&p, 1e-12) {
                continue;
            }
        }
        let v = profile.eval(&p);
        if v != 0.0 {
            out_w.push(w * v);
            out_p.push(p);
        }
    }
    (out_p, out_w)
}

/// f(ζ,x) = c ∫ ψ(λ)|Pfaff(λ)| e^{i⟨λ,x⟩ − ⟨λ,Φ(ζ)⟩} dλ with c = 2^{n−m}/π^{n+m},
/// held as a weighted node sum.
#[derive(Clone)]
pub struct BandLimited {
    pub model: QuadraticModel,
    pub profile: SpectralProfile,
    pub lambdas: Vec<Vec<f64>>,
    /// GL weight × ψ(λ) (without Pfaffian or constant).
    pub psi_weights: Vec<f64>,
    /// GL weight × ψ(λ) × |Pfaff(λ)| × c.
    pub weights: Vec<f64>,
    pub per_dim: usize,
    pub warnings: Vec<String>,
    /// Whether K ⊆ Λ̄₊ (otherwise the result need not be CR).
    pub cr_guaranteed: bool,
}

impl std::fmt::Debug for BandLimited {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "BandLimited(nodes={}, per_dim={}, warnings={:?})", self.lambdas.len(), self.per_dim, self.warnings)
    }
}

/// c = 2^{n−m}/π^{n+m}.
pub fn inversion_constant(n: usize, m: usize) -> f64 {
    2f64.powi(n as i32 - m as i32) / PI.powi((n + m) as i32)
}

impl BandLimited {
    pub fn eval(&self, zeta: &[C64], x: &[f64]) -> C64 {
        let ph = self.model.phi_diag(zeta);
        let terms: Vec<C64> = self
            .lambdas
            .iter()
            .zip(&self.weights)
            .map(|(l, w)| {
                let lx: f64 = l.iter().zip(x).map(|(a, b)| a * b).sum();
                let lp: f64 = l.iter().zip(&ph).map(|(a, b)| a * b).sum();
                C64::from_polar(w * (-lp).exp(), lx)
            })
            .collect();
        pairwise_sum_c(&terms)
    }

    /// The function on the profile's N grid.
    pub fn sampled(&self) -> SampledFunction {
        self.sampled_on(self.profile.n_grid)
    }

    /// Sampled on `grid` with grid values precomputed; the x sweep uses a
    /// phase recurrence resynchronized every 64 steps.
    pub fn sampled_on(&self, grid: GridSpec) -> SampledFunction {
        let me = self.clone();
        let f = SampledFunction::from_fn(self.model.n(), self.model.m(), grid, move |z, x| me.eval(z, x));
        if self.model.m() != 1 {
            return f;
        }
        let (zs, _) = grid.zeta_nodes(self.model.n());
        let (xs, _) = grid.x_nodes(1);
        let h = grid.f_step();
        let rows: Vec<Vec<C64>> = zs
            .par_iter()
            .map(|z| {
                let ph = self.model.phi_diag(z)[0];
                let amp: Vec<f64> = self.lambdas.iter().zip(&self.weights).map(|(l, w)| w * (-l[0] * ph).exp()).collect();
                let step: Vec<C64> = self.lambdas.iter().map(|l| C64::from_polar(1.0, l[0] * h)).collect();
                let mut phase: Vec<C64> = Vec::new();
                let mut row = Vec::with_capacity(xs.len());
                for (i, x) in xs.iter().enumerate() {
                    if i % 64 == 0 {
                        phase = self.lambdas.iter().map(|l| C64::from_polar(1.0, l[0] * x[0])).collect();
                    } else {
                        phase.iter_mut().zip(&step).for_each(|(p, s)| *p *= s);
                    }
                    let terms: Vec<C64> = phase.iter().zip(&amp).map(|(p, a)| p * a).collect();
                    row.push(pairwise_sum_c(&terms));
                }
                row
            })
            .collect();
        f.with_cache(rows.into_iter().flatten().collect())
    }

    /// Euclidean transform in x in closed form: (2π)^m c ψ(ω)|Pfaff(ω)| e^{−⟨ω,Φ(ζ)⟩}.
    pub fn x_hat(&self, zeta: &[C64], omega: &[f64]) -> Result<C64> {
        let v = self.profile.eval(omega);
        if v == 0.0 {
            return Ok(C64::new(0.0, 0.0));
        }
        let sd = spectral_data(&self.model, omega)?;
        let ph = self.model.phi_diag(zeta);
        let lp: f64 = omega.iter().zip(&ph).map(|(a, b)| a * b).sum();
        let c = inversion_constant(self.model.n(), self.model.m()) * (2.0 * PI).powi(self.model.m() as i32);
        Ok(C64::new(c * v * sd.pfaffian * (-lp).exp(), 0.0))
    }
}

fn probe_value(model: &QuadraticModel, lambdas: &[Vec<f64>], weights: &[f64], probes: &[(Vec<C64>, Vec<f64>)]) -> Vec<C64> {
    probes
        .iter()
        .map(|(z, x)| {
            let ph = model.phi_diag(z);
            let terms: Vec<C64> = lambdas
                .iter()
                .zip(weights)
                .map(|(l, w)| {
                    let lx: f64 = l.iter().zip(x).map(|(a, b)| a * b).sum();
                    let lp: f64 = l.iter().zip(&ph).map(|(a, b)| a * b).sum();
                    C64::from_polar(w * (-lp).exp(), lx)
                })
                .collect();
            pairwise_sum_c(&terms)
        })
        .collect()
}

/// F_N⁻¹ψ by masked tensor Gauss–Legendre over the profile box, doubling the
/// node count until probe values move by less than 1e-8 or the node product
/// reaches 2¹⁴.
pub fn inverse_fn(model: &QuadraticModel, profile: &SpectralProfile) -> Result<BandLimited> {
    check_dim(model.m(), profile.body.dim())?;
    let (n, m) = (model.n(), model.m());
    let c = inversion_constant(n, m);
    let mut warnings = Vec::new();
    let in_closure = profile.body.vertices().iter().all(|v| p_contains(model, v).unwrap_or(false));
    let has_plus = profile.body.vertices().iter().any(|v| lambda_plus_contains(model, v).unwrap_or(false))
        || profile.bump.as_ref().map(|b| lambda_plus_contains(model, &b.center).unwrap_or(false)).unwrap_or(false);
    if !(in_closure && has_plus) {
        warnings.push("K is not inside the closure of Λ₊; the result is not guaranteed CR".to_string());
    }
    if profile.is_zero {
        return Ok(BandLimited {
            model: model.clone(),
            profile: profile.clone(),
            lambdas: vec![],
            psi_weights: vec![],
            weights: vec![],
            per_dim: 0,
            warnings,
            cr_guaranteed: in_closure && has_plus,
        });
    }
    let hrep = if profile.body.is_empty() { None } else { Some(profile.body.hrep()?) };
    let probes: Vec<(Vec<C64>, Vec<f64>)> = vec![
        (vec![C64::new(0.0, 0.0); n], vec![0.0; m]),
        ((0..n).map(|j| C64::new(0.4 / (j + 1) as f64, -0.3)).collect(), (0..m).map(|k| 1.3 - 0.7 * k as f64).collect()),
        ((0..n).map(|_| C64::new(-0.2, 0.5)).collect(), (0..m).map(|k| -2.9 + 0.4 * k as f64).collect()),
    ];
    let build = |per_dim: usize| -> Result<(Vec<Vec<f64>>, Vec<f64>, Vec<f64>)> {
        let (pts, psi_w) = profile_nodes(profile, per_dim, hrep.as_ref());
        let mut w = Vec::with_capacity(pts.len());
        for (p, pw) in pts.iter().zip(&psi_w) {
            w.push(pw * spectral_data(model, p)?.pfaffian * c);
        }
        Ok((pts, psi_w, w))
    };
    let mut per_dim = profile.nodes.max(2);
    let (mut pts, mut psi_w, mut w) = build(per_dim)?;
    let mut vals = probe_value(model, &pts, &w, &probes);
    loop {
        let next = per_dim * 2;
        if next.pow(m as u32) > 1 << 14 {
            warnings.push(format!("λ-quadrature stopped at the node cap with {per_dim} nodes per dimension"));
            break;
        }
        let (p2, pw2, w2) = build(next)?;
        let v2 = probe_value(model, &p2, &w2, &probes);
        let scale = vals.iter().map(|v| v.norm()).fold(1.0, f64::max);
        let delta = vals.iter().zip(&v2).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        pts = p2;
        psi_w = pw2;
        w = w2;
        vals = v2;
        per_dim = next;
        if delta < 1e-8 * scale {
            break;
        }
    }
    Ok(BandLimited {
        model: model.clone(),
        profile: profile.clone(),
        lambdas: pts,
        psi_weights: psi_w,
        weights: w,
        per_dim,
        warnings,
        cr_guaranteed: in_closure && has_plus,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForwardResult {
    pub lambdas: Vec<Vec<f64>>,
    /// tr π_λ(φ), or None at exceptional or non-generic λ.
    pub values: Vec<Option<C64>>,
    pub warnings: Vec<String>,
}

/// λ ↦ tr π_λ(φ) on the grid (τ = 0, degree cap D).
pub fn forward_fn(model: &QuadraticModel, phi: &SampledFunction, lambdas: &[Vec<f64>], degree_cap: usize) -> Result<ForwardResult> {
    check_dim(model.n(), phi.n())?;
    let phi = if phi.cache.is_some() { phi.clone() } else { phi.clone().with_cache(phi.grid_values()?.to_vec()) };
    let mut values = Vec::with_capacity(lambdas.len());
    let mut warnings = Vec::new();
    for l in lambdas {
        let sd = spectral_data(model, l)?;
        if sd.d_lambda > 0 && !lambda_plus_contains(model, l)? && sd.rank() == 0 {
            values.push(None);
            continue;
        }
        let trunc = fock_basis(&sd, degree_cap)?;
        let tau = vec![0.0; 2 * sd.d_lambda];
        let m = pi_of_f(&trunc, &tau, &phi)?;
        if let Some(w) = m.warning.clone() {
            if !warnings.contains(&w) {
                warnings.push(w);
            }
        }
        values.push(Some(m.trace()));
    }
    Ok(ForwardResult { lambdas: lambdas.to_vec(), values, warnings })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Route {
    /// Euclidean transform of the boundary values in x, then exponential synthesis.
    A,
    /// Rank-one trace tr(π_λ(φ)π_λ(ζ,0)*) against e^{⟨λ_C, iz + Φ(ζ)⟩}.
    B,
}

impl std::fmt::Display for Route {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", match self { Route::A => "A", Route::B => "B" })
    }
}

/// Holomorphic extension of F_N⁻¹ψ to E × F_C.
#[derive(Clone)]
pub struct ExtensionResult {
    pub route: Route,
    pub body: ConvexBody,
    pub quadrature: String,
    eval: Arc<dyn Fn(&[C64], &[C64]) -> Result<C64> + Send + Sync>,
}

impl std::fmt::Debug for ExtensionResult {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "ExtensionResult(route={}, {})", self.route, self.quadrature)
    }
}

impl ExtensionResult {
    pub fn eval(&self, a: &AmbientPoint) -> Result<C64> {
        let v = (self.eval)(&a.zeta, &a.z)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Evaluation(format!("non-finite extension value at {a:?}")))
        }
    }

    pub fn zero(body: ConvexBody) -> Self {
        Self { route: Route::B, body, quadrature: "none".into(), eval: Arc::new(|_, _| Ok(C64::new(0.0, 0.0))) }
    }

    /// Multiplies by a holomorphic polynomial factor g(ζ, z).
    pub fn times(&self, g: Arc<dyn Fn(&[C64], &[C64]) -> C64 + Send + Sync>) -> Self {
        let inner = self.eval.clone();
        Self { route: self.route, body: self.body.clone(), quadrature: self.quadrature.clone(), eval: Arc::new(move |z, w| Ok(inner(z, w)? * g(z, w))) }
    }

    pub fn from_fn(route: Route, body: ConvexBody, f: Arc<dyn Fn(&[C64], &[C64]) -> Result<C64> + Send + Sync>) -> Self {
        Self { route, body, quadrature: "closed form".into(), eval: f }
    }
}

/// Builds the extension of F_N⁻¹ψ by the chosen route.
pub fn extension(model: &QuadraticModel, profile: &SpectralProfile, route: Route) -> Result<ExtensionResult> {
    let bl = inverse_fn(model, profile)?;
    extension_of(&bl, route)
}

pub fn extension_of(bl: &BandLimited, route: Route) -> Result<ExtensionResult> {
    let model = bl.model.clone();
    let (n, m) = (model.n(), model.m());
    let body = bl.profile.body.clone();
    match route {
        Route::A => {
            let grid = bl.profile.n_grid;
            let (xs, wx) = grid.x_nodes(m);
            let bl2 = bl.clone();
            let quadrature = format!("x trapezoid {}^{} on ±{}, λ GL {} nodes", grid.nf, m, grid.lf, bl.lambdas.len());
            let eval = move |zeta: &[C64], z: &[C64]| -> Result<C64> {
                check_dim(n, zeta.len())?;
                check_dim(m, z.len())?;
                let f0: Vec<C64> = xs.iter().map(|x| bl2.eval(zeta, x)).collect();
                let ph = bl2.model.phi_diag(zeta);
                let terms: Vec<C64> = bl2
                    .lambdas
                    .iter()
                    .zip(&bl2.psi_weights)
                    .map(|(l, gw)| {
                        let ft: Vec<C64> = f0
                            .iter()
                            .zip(&xs)
                            .zip(&wx)
                            .map(|((v, x), w)| v * C64::from_polar(*w, -l.iter().zip(x).map(|(a, b)| a * b).sum::<f64>()))
                            .collect();
                        let fhat = pairwise_sum_c(&ft);
                        // e^{i⟨λ, z − iΦ(ζ)⟩}
                        let arg: C64 = l.iter().zip(z).zip(&ph).map(|((a, zk), p)| a * (zk - C64::new(0.0, *p))).sum();
                        // gw carries GL weight × ψ; the λ integral uses GL weight only.
                        let glw = gw / bl2.profile.eval(l);
                        fhat * glw * (C64::new(0.0, 1.0) * arg).exp()
                    })
                    .collect();
                Ok(pairwise_sum_c(&terms) / (2.0 * PI).powi(m as i32))
            };
            Ok(ExtensionResult { route, body, quadrature, eval: Arc::new(eval) })
        }
        Route::B => {
            if !body.is_empty() && !body.vertices().iter().all(|v| p_contains(&model, v).unwrap_or(false)) {
                return Err(Error::Contract("route B needs K inside the closure of Λ₊".into()));
            }
            let c = inversion_constant(n, m);
            let bl2 = bl.clone();
            let quadrature = format!("λ GL {} nodes, rank-one trace", bl.lambdas.len());
            let truncs = bl
                .lambdas
                .iter()
                .map(|l| fock_basis(&spectral_data(&model, l)?, 0))
                .collect::<Result<Vec<_>>>()?;
            let eval = move |zeta: &[C64], z: &[C64]| -> Result<C64> {
                check_dim(n, zeta.len())?;
                check_dim(m, z.len())?;
                let ph = bl2.model.phi_diag(zeta);
                let mut terms = Vec::with_capacity(bl2.lambdas.len());
                for ((l, gw), t) in bl2.lambdas.iter().zip(&bl2.psi_weights).zip(&truncs) {
                    // tr(ψ(λ) P₀ π_λ(ζ,0)*) = ψ(λ) conj⟨π_λ(ζ,0)e₀, e₀⟩
                    let tau = vec![0.0; 2 * t.spectral.d_lambda];
                    let p = GroupPoint::new(zeta.to_vec(), vec![0.0; m]);
                    let coeff = rep_apply(t, &tau, &p)?.mat[(0, 0)].conj();
                    // e^{⟨λ_C, iz + Φ(ζ)⟩}
                    let arg: C64 = l.iter().zip(z).zip(&ph).map(|((a, zk), p)| a * (C64::new(0.0, 1.0) * zk + p)).sum();
                    terms.push(coeff * gw * c * t.spectral.pfaffian * arg.exp());
                }
                Ok(pairwise_sum_c(&terms))
            };
            Ok(ExtensionResult { route, body, quadrature, eval: Arc::new(eval) })
        }
    }
}

/// Single-point convenience wrapper around [`extension`].
pub fn extend(model: &QuadraticModel, profile: &SpectralProfile, a: &AmbientPoint, route: Route) -> Result<C64> {
    extension(model, profile, route)?.eval(a)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarginReport {
    /// max |f|(1+|ζ|²+|z|)^N e^{−H_K(ρ)}.
    pub margin: f64,
    /// Same with (1+|ζ|+|z|)^N.
    pub margin_linear: f64,
    pub witness: Option<AmbientPoint>,
    /// Points whose H_K(ρ) was clamped to 40.
    pub clamped: Vec<AmbientPoint>,
    pub finite: bool,
}

/// Growth margin of an extension over the given ambient points.
pub fn pw_margin(model: &QuadraticModel, f: &ExtensionResult, body: &ConvexBody, order: i32, points: &[AmbientPoint]) -> Result<MarginReport> {
    let mut margin: f64 = 0.0;
    let mut margin_lin: f64 = 0.0;
    let mut witness = None;
    let mut clamped = Vec::new();
    let mut finite = true;
    for a in points {
        let rho = crate::model::rho(model, a)?;
        let mut h = support_function(body, &rho);
        if h > 40.0 {
            h = 40.0;
            clamped.push(a.clone());
        }
        let v = f.eval(a)?.norm();
        let zn: f64 = a.zeta.iter().map(|z| z.norm_sqr()).sum::<f64>();
        let wn: f64 = a.z.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let damp = if h == f64::NEG_INFINITY { 0.0 } else { (-h).exp() };
        let val = v * (1.0 + zn + wn).powi(order) * damp;
        let val_lin = v * (1.0 + zn.sqrt() + wn).powi(order) * damp;
        if !val.is_finite() {
            finite = false;
            witness = Some(a.clone());
            break;
        }
        if val > margin {
            margin = val;
            witness = Some(a.clone());
        }
        margin_lin = margin_lin.max(val_lin);
    }
    Ok(MarginReport { margin, margin_linear: margin_lin, witness, clamped, finite })
}

/// Ambient sweep points: ζ on a square grid of radius `zr` (clipped to the
/// ball), Re z on [−xr, xr], Im z on [ylo, yhi].
pub fn ambient_sweep(n: usize, m: usize, zr: f64, xr: f64, ylo: f64, yhi: f64, k: usize) -> Vec<AmbientPoint> {
    let lin = |a: f64, b: f64| -> Vec<f64> { (0..k).map(|i| a + (b - a) * i as f64 / (k - 1).max(1) as f64).collect() };
    let zs = lin(-zr, zr);
    let xs = lin(-xr, xr);
    let ys = lin(ylo, yhi);
    let mut out = Vec::new();
    for (i, &zre) in zs.iter().enumerate() {
        for &zim in &zs {
            if zre * zre + zim * zim > zr * zr + 1e-12 {
                continue;
            }
            for &x in &xs {
                for &y in &ys {
                    let zeta = (0..n).map(|j| if j == 0 { C64::new(zre, zim) } else { C64::new(0.5 * zim, -0.5 * zre) / (j as f64 + 1.0) }).collect();
                    let z = (0..m).map(|kk| C64::new(x - 0.3 * kk as f64, y + 0.2 * kk as f64 * (i % 2) as f64)).collect();
                    out.push(AmbientPoint::new(zeta, z));
                }
            }
        }
    }
    out
}

/// g(ζ,x) = c ∫ ψ(λ)|Pfaff(λ)| e^{i⟨λ,x⟩ − Φ_λ(ζ)} dλ with the positive form
/// Φ_λ: for λ ∉ P this is not CR, while its Euclidean spectrum in x is still
/// that of ψ.
pub fn non_cr_control(model: &QuadraticModel, profile: &SpectralProfile) -> Result<SampledFunction> {
    let (n, m) = (model.n(), model.m());
    let (pts, psi_w) = profile_nodes(profile, profile.nodes.max(2), None);
    let c = inversion_constant(n, m);
    let mut sds = Vec::new();
    let mut w = Vec::new();
    for (p, pw) in pts.iter().zip(&psi_w) {
        let sd = spectral_data(model, p)?;
        w.push(pw * c * sd.pfaffian);
        sds.push(sd);
    }
    Ok(SampledFunction::from_fn(n, m, profile.n_grid, move |zeta, x| {
        let terms: Vec<C64> = sds
            .iter()
            .zip(&w)
            .map(|(sd, wk)| {
                let lx: f64 = sd.lambda.iter().zip(x).map(|(a, b)| a * b).sum();
                C64::from_polar(wk * (-sd.phi_diag(zeta)).exp(), lx)
            })
            .collect();
        pairwise_sum_c(&terms)
    }))
}

/// τ_ε = χ_{K_{ε/2}} * ψ_{ε/4} for a polytope K, with ψ_r the normalized bump of radius r.
pub fn spectral_window(body: &ConvexBody, eps: f64, n_grid: GridSpec) -> Result<SpectralProfile> {
    if !(eps > 0.0) {
        return Err(Error::Contract("window width must be positive".into()));
    }
    if body.is_cone() || body.is_empty() {
        return Err(Error::Contract("window needs a nonempty polytope".into()));
    }
    let m = body.dim();
    let inner = erode(body, eps / 2.0)?;
    let outer = erode(body, eps / 4.0)?;
    if inner.is_empty() || outer.is_empty() || inner.affine_dim() < m {
        return Ok(SpectralProfile::zero(body.clone(), n_grid));
    }
    let r = eps / 4.0;
    let support = outer.bounding_box().expect("nonempty polytope");
    let psi: ProfileEval = if m == 1 {
        let (a, b) = inner.bounding_box().unwrap()[0];
        let rule = gauss_legendre(256);
        let integral = move |lo: f64, hi: f64| -> f64 {
            if hi <= lo {
                return 0.0;
            }
            let mapped = rule.mapped(lo, hi);
            let v: Vec<f64> = mapped.nodes.iter().zip(&mapped.weights).map(|(u, w)| w * unit_bump(u * u / (r * r))).collect();
            pairwise_sum(&v)
        };
        let total = integral(-r, r);
        Arc::new(move |l: &[f64]| {
            // ∫_{a}^{b} ψ_r(λ − μ) dμ over u = λ − μ ∈ [λ − b, λ − a] ∩ [−r, r].
            let lo = (l[0] - b).max(-r);
            let hi = (l[0] - a).min(r);
            if lo <= -r && hi >= r {
                1.0
            } else {
                integral(lo, hi) / total
            }
        })
    } else {
        let h = inner.hrep()?;
        let rule = gauss_legendre(48).mapped(-r, r);
        let rules: Vec<_> = (0..m).map(|_| &rule).collect();
        let (pts, wts) = tensor(&rules);
        let mut nodes = Vec::new();
        for (p, w) in pts.into_iter().zip(wts) {
            let u2 = p.iter().map(|x| x * x).sum::<f64>() / (r * r);
            let b = unit_bump(u2);
            if b > 0.0 {
                nodes.push((p, w * b));
            }
        }
        let total = pairwise_sum(&nodes.iter().map(|(_, w)| *w).collect::<Vec<_>>());
        Arc::new(move |l: &[f64]| {
            let inside: Vec<f64> = nodes
                .iter()
                .filter(|(u, _)| {
                    let q: Vec<f64> = l.iter().zip(u).map(|(a, b)| a - b).collect();
                    h.contains(&q, 1e-12)
                })
                .map(|(_, w)| *w)
                .collect();
            if inside.len() == nodes.len() {
                1.0
            } else {
                pairwise_sum(&inside) / total
            }
        })
    };
    let mut prof = SpectralProfile::from_fn(body.clone(), support, 64, n_grid, psi)?;
    prof.body = body.clone();
    Ok(prof)
}

/// f * F_N⁻¹(window). For m = 1 and a gridded f the x-direction is handled by
/// FFT: F_x(f*g)(ζ,ω) = Σ_{ζ′} f̂(ζ′,ω) ĝ(ζ−ζ′,ω) e^{−i⟨ω, 2 Im Φ(ζ,ζ′)⟩} dζ′,
/// with ĝ in closed form; otherwise the literal group convolution is used.
pub fn bandlimit_project(model: &QuadraticModel, f: &SampledFunction, window: &SpectralProfile) -> Result<SampledFunction> {
    check_dim(model.n(), f.n())?;
    check_dim(model.m(), f.m())?;
    let g = inverse_fn(model, window)?;
    if window.is_zero {
        return Ok(SampledFunction::zero(f.n(), f.m(), f.grid).with_cache(vec![C64::new(0.0, 0.0); f.grid_values()?.len()]));
    }
    let literal = group_convolve(model, f, &g.sampled_on(f.grid))?;
    if model.m() != 1 {
        return Ok(literal);
    }
    let vals = f.grid_values()?;
    let (zs, wz) = f.grid.zeta_nodes(f.n());
    let nf = f.grid.nf;
    let nper = nf - 1;
    let h = f.grid.f_step();
    let l = f.grid.lf;
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(nper);
    let inv = planner.plan_fft_inverse(nper);
    let omegas: Vec<f64> = (0..nper)
        .map(|j| {
            let k = if j <= nper / 2 { j as f64 } else { j as f64 - nper as f64 };
            2.0 * PI * k / (nper as f64 * h)
        })
        .collect();
    let active: Vec<usize> = (0..nper).filter(|&j| window.eval(&[omegas[j]]) != 0.0).collect();
    let step = 2.0 * PI / (nper as f64 * h);
    let cx = inversion_constant(model.n(), 1) * 2.0 * PI;
    let ghat_scale = active
        .iter()
        .map(|&j| Ok(cx * window.eval(&[omegas[j]]) * spectral_data(model, &[omegas[j]])?.pfaffian))
        .collect::<Result<Vec<f64>>>()?;
    // f̂(ζ′, ω_j) for active bins
    let mut fhat = vec![vec![C64::new(0.0, 0.0); active.len()]; zs.len()];
    let mut buf = vec![C64::new(0.0, 0.0); nper];
    for (iz, row) in fhat.iter_mut().enumerate() {
        buf.copy_from_slice(&vals[iz * nf..iz * nf + nper]);
        fwd.process(&mut buf);
        for (a, &j) in active.iter().enumerate() {
            row[a] = buf[j] * h * C64::from_polar(1.0, omegas[j] * l);
        }
    }
    // Bins are visited in order with a per-pair phase recurrence across
    // consecutive bins, resynchronized every 32 bins.
    let rows: Vec<Vec<C64>> = zs
        .par_iter()
        .map(|z| {
            let mut acc = vec![C64::new(0.0, 0.0); active.len()];
            for (jz, zp) in zs.iter().enumerate() {
                let diff: Vec<C64> = z.iter().zip(zp).map(|(p, q)| p - q).collect();
                // ĝ(ζ−ζ′,ω)e^{−iω·2ImΦ(ζ,ζ′)} = scale·e^{−ω e}, e = Φ(ζ−ζ′) + 2i ImΦ(ζ,ζ′)
                let e = C64::new(model.phi_diag(&diff)[0], 2.0 * model.phi(z, zp)[0].im);
                let st = (-step * e).exp();
                let mut cur = C64::new(0.0, 0.0);
                for (a, &j) in active.iter().enumerate() {
                    let contiguous = a > 0 && active[a - 1] + 1 == j && a % 32 != 0;
                    cur = if contiguous { cur * st } else { (-omegas[j] * e).exp() };
                    acc[a] += fhat[jz][a] * cur * wz[jz];
                }
            }
            let mut spec = vec![C64::new(0.0, 0.0); nper];
            for (a, &j) in active.iter().enumerate() {
                spec[j] = acc[a] * ghat_scale[a] * C64::from_polar(1.0, -omegas[j] * l);
            }
            inv.process(&mut spec);
            let mut row: Vec<C64> = spec.iter().map(|s| s / (nper as f64 * h)).collect();
            row.push(row[0]);
            row
        })
        .collect();
    let out: Vec<C64> = rows.into_iter().flatten().collect();
    Ok(literal.with_cache(out))
}

/// L²(N) norm of the grid values by the trapezoid rule.
pub fn grid_l2(f: &SampledFunction) -> Result<f64> {
    let vals = f.grid_values()?;
    let (_, wz) = f.grid.zeta_nodes(f.n());
    let (_, wx) = f.grid.x_nodes(f.m());
    let nx = wx.len();
    let sq: Vec<f64> = vals.iter().enumerate().map(|(i, v)| v.norm_sqr() * wz[i / nx] * wx[i % nx]).collect();
    Ok(pairwise_sum(&sq).sqrt())
}

/// ‖f − g‖₂ on a shared grid.
pub fn grid_l2_distance(f: &SampledFunction, g: &SampledFunction) -> Result<f64> {
    if f.grid != g.grid {
        return Err(Error::Contract("grid mismatch".into()));
    }
    let a = f.grid_values()?;
    let b = g.grid_values()?;
    let diff: Vec<C64> = a.iter().zip(b.iter()).map(|(x, y)| x - y).collect();
    grid_l2(&SampledFunction::zero(f.n(), f.m(), f.grid).with_cache(diff))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SupportReport {
    pub lambdas: Vec<Vec<f64>>,
    /// |F_F(f₀(ζ,·))(λ)| per stencil point (rows) and grid λ (columns).
    pub profile: Vec<Vec<f64>>,
    /// Fraction of Σ|F_F|² (over stencil and grid) lying outside the region.
    pub outside_fraction: f64,
}

/// Euclidean x-spectrum of f₀ at the ζ stencil, and its mass fraction outside `inside`.
pub fn spectrum_support(
    f0: &SampledFunction,
    stencil: &[Vec<C64>],
    lambdas: &[Vec<f64>],
    inside: &dyn Fn(&[f64]) -> bool,
) -> Result<SupportReport> {
    let (xs, wx) = f0.grid.x_nodes(f0.m());
    let mut rows = Vec::new();
    let (mut out_mass, mut all_mass) = (Vec::new(), Vec::new());
    for z in stencil {
        check_dim(f0.n(), z.len())?;
        let vals: Vec<C64> = xs.iter().map(|x| f0.eval(z, x)).collect();
        let mut row = Vec::with_capacity(lambdas.len());
        for l in lambdas {
            let t: Vec<C64> = vals
                .iter()
                .zip(&xs)
                .zip(&wx)
                .map(|((v, x), w)| v * C64::from_polar(*w, -l.iter().zip(x).map(|(a, b)| a * b).sum::<f64>()))
                .collect();
            let a = pairwise_sum_c(&t).norm();
            all_mass.push(a * a);
            if !inside(l) {
                out_mass.push(a * a);
            }
            row.push(a);
        }
        rows.push(row);
    }
    let total = pairwise_sum(&all_mass);
    Ok(SupportReport {
        lambdas: lambdas.to_vec(),
        profile: rows,
        outside_fraction: if total > 0.0 { pairwise_sum(&out_mass) / total } else { 0.0 },
    })
}

/// F_x(f)(ζ, λ) on f's ζ nodes; re-exported for diagnostics.
pub fn fiber_transform(f: &SampledFunction, lambda: &[f64]) -> Result<Vec<C64>> {
    x_transform(f, lambda)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn heis_profile(nodes: usize) -> SpectralProfile {
        let k = ConvexBody::cuboid(&[(1.0, 2.0)]);
        let spec = BumpSpec { center: vec![1.5], radius: 0.5, poly: vec![] };
        SpectralProfile::bump(k, spec, nodes, GridSpec::new(4.5, 400.0, 37, 1601).unwrap()).unwrap()
    }

    #[test]
    fn inverse_at_origin_matches_refined_quadrature() {
        let model = QuadraticModel::heisenberg();
        let p = heis_profile(64);
        let bl = inverse_fn(&model, &p).unwrap();
        let v = bl.eval(&[C64::new(0.0, 0.0)], &[0.0]);
        let rule = gauss_legendre(4000).mapped(1.0, 2.0);
        let oracle: f64 = rule.nodes.iter().zip(&rule.weights).map(|(l, w)| w * p.eval(&[*l]) * l).sum::<f64>() / (PI * PI);
        assert_abs_diff_eq!(v.re, oracle, epsilon = 1e-8);
        assert_abs_diff_eq!(v.im, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn inverse_of_zero_profile() {
        let k = ConvexBody::cuboid(&[(1.0, 2.0)]);
        let p = SpectralProfile::zero(k, GridSpec::new(1.0, 1.0, 3, 3).unwrap());
        let bl = inverse_fn(&QuadraticModel::heisenberg(), &p).unwrap();
        assert_eq!(bl.eval(&[C64::new(0.3, 0.1)], &[2.0]), C64::new(0.0, 0.0));
    }

    #[test]
    fn inverse_along_x_is_euclidean_inverse_transform() {
        let model = QuadraticModel::heisenberg();
        let p = heis_profile(64);
        let bl = inverse_fn(&model, &p).unwrap();
        let rule = gauss_legendre(3000).mapped(1.0, 2.0);
        for x in [-3.0, 0.7, 5.5] {
            // (1/2π) ∫ (2/π) ψ(λ)|λ| e^{iλx} dλ
            let oracle: C64 = rule
                .nodes
                .iter()
                .zip(&rule.weights)
                .map(|(l, w)| C64::from_polar(w * 2.0 / PI * p.eval(&[*l]) * l / (2.0 * PI), l * x))
                .sum();
            assert!((bl.eval(&[C64::new(0.0, 0.0)], &[x]) - oracle).norm() < 1e-6);
        }
    }

    #[test]
    fn window_sandwich_and_values() {
        let k = ConvexBody::cuboid(&[(1.0, 2.0)]);
        let g = GridSpec::new(1.0, 1.0, 3, 3).unwrap();
        let w = spectral_window(&k, 0.4, g).unwrap();
        for i in 0..=400 {
            let l = 0.9 + 1.2 * i as f64 / 400.0;
            let v = w.eval(&[l]);
            if (1.4..=1.6).contains(&l) {
                assert!((v - 1.0).abs() <= 1e-10);
            }
            if !(1.1..=1.9).contains(&l) {
                assert!(v.abs() <= 1e-10);
            }
            assert!((-1e-12..=1.0 + 1e-12).contains(&v));
        }
        let empty = spectral_window(&k, 1.0, g).unwrap();
        assert!(empty.is_zero);
        assert_eq!(empty.eval(&[1.5]), 0.0);
    }

    #[test]
    fn window_derivative_bound() {
        let k = ConvexBody::cuboid(&[(1.0, 2.0)]);
        let eps = 0.4;
        let w = spectral_window(&k, eps, GridSpec::new(1.0, 1.0, 3, 3).unwrap()).unwrap();
        let rule = gauss_legendre(400).mapped(-1.0, 1.0);
        let total: f64 = rule.nodes.iter().zip(&rule.weights).map(|(u, wt)| wt * unit_bump(u * u)).sum();
        // ‖ψ′‖₁ of the unit-radius normalized bump: 2ψ(0).
        let l1 = 2.0 * unit_bump(0.0) / total;
        let bound = 4.0 / eps * l1;
        let h = 1e-6;
        let mut worst: f64 = 0.0;
        for i in 0..=2000 {
            let l = 1.0 + i as f64 / 2000.0;
            worst = worst.max(((w.eval(&[l + h]) - w.eval(&[l - h])) / (2.0 * h)).abs());
        }
        assert!(worst <= 1.01 * bound, "{worst} vs {bound}");
    }

    #[test]
    fn route_b_rejects_body_outside_closure() {
        let k = ConvexBody::cuboid(&[(-2.0, -1.0)]);
        let spec = BumpSpec { center: vec![-1.5], radius: 0.5, poly: vec![] };
        let p = SpectralProfile::bump(k, spec, 32, GridSpec::new(3.0, 20.0, 5, 5).unwrap()).unwrap();
        assert!(matches!(extension(&QuadraticModel::heisenberg(), &p, Route::B), Err(Error::Contract(_))));
        let bl = inverse_fn(&QuadraticModel::heisenberg(), &p).unwrap();
        assert!(!bl.cr_guaranteed && !bl.warnings.is_empty());
    }

    #[test]
    fn bump_must_fit_in_body() {
        let k = ConvexBody::cuboid(&[(1.0, 2.0)]);
        let spec = BumpSpec { center: vec![1.2], radius: 0.5, poly: vec![] };
        assert!(SpectralProfile::bump(k, spec, 16, GridSpec::new(1.0, 1.0, 3, 3).unwrap()).is_err());
    }
}
