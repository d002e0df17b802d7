//! Truncated Bargmann–Fock realization of π_{λ,τ}, the group Fourier
//! transform π_λ(f), Plancherel residuals and group convolution.
//!
//! Every mode j of R_λ^⊥ carries the coordinate w_j (see
//! [`SpectralData::w_coords`]) and the weight e^{−2|μ_j||w_j|²}. The
//! normalized monomials φ_α satisfy w_j φ_α = √((α_j+1)/(2|μ_j|)) φ_{α+e_j}
//! and ∂_j φ_α = √(2|μ_j|α_j) φ_{α−e_j}, so with γ_j = √(2|μ_j|)·c_j the
//! translation part of π(ζ,x) on mode j is the displacement
//! W(γ) = exp(γ̄a† − γa).

use std::collections::HashMap;
use std::f64::consts::{PI, SQRT_2};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{check_dim, Error, Result};
use crate::model::{inverse, max_abs, multiply, CMat, GroupPoint, QuadraticModel, SampledFunction, C64, I};
use crate::quadrature::{gauss_hermite, pairwise_sum, tree_reduce};
use crate::spectral::{generic_dimension, radical_axes, spectral_data, SpectralData};

/// Largest |γ| accepted by the displacement quadrature.
pub const MAX_SHIFT: f64 = 1e3;
const GH_LADDER: [usize; 8] = [48, 64, 96, 128, 192, 256, 384, 512];

#[derive(Debug, Clone)]
pub struct FockTruncation {
    pub spectral: SpectralData,
    pub degree_cap: usize,
    /// Multi-indices |α| ≤ D in graded lexicographic order.
    pub indices: Vec<Vec<usize>>,
    /// ‖e_{λ,α}‖ in L²(ν_λ) for e_{λ,α} = ∏ Φ_λ(·, v_j)^{α_j}.
    pub norms: Vec<f64>,
    /// √(2^{n−d}|Pfaff(λ)|/π^{n−d}), the factor making e_{λ,0} a unit vector.
    pub normalizer: f64,
    position: HashMap<Vec<usize>, usize>,
}

/// Truncated operator in the orthonormal basis φ_α, |α| ≤ D.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    pub mat: CMat,
    pub warning: Option<String>,
}

impl OperatorMatrix {
    pub fn new(mat: CMat) -> Self {
        Self { mat, warning: None }
    }

    /// Hilbert–Schmidt norm.
    pub fn hs_norm(&self) -> f64 {
        self.mat.norm()
    }

    pub fn trace(&self) -> C64 {
        self.mat.trace()
    }
}

/// Multi-indices of length r and total degree ≤ D, by degree and then
/// lexicographically decreasing.
pub fn multi_indices(r: usize, d: usize) -> Vec<Vec<usize>> {
    fn fill(rest: usize, slots: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if slots == 1 {
            cur.push(rest);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for k in (0..=rest).rev() {
            cur.push(k);
            fill(rest - k, slots - 1, cur, out);
            cur.pop();
        }
    }
    if r == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for deg in 0..=d {
        fill(deg, r, &mut Vec::with_capacity(r), &mut out);
    }
    out
}

fn ln_factorial(k: usize) -> f64 {
    (1..=k).map(|i| (i as f64).ln()).sum()
}

impl FockTruncation {
    pub fn dim(&self) -> usize {
        self.indices.len()
    }

    pub fn rank(&self) -> usize {
        self.spectral.rank()
    }

    pub fn position(&self, alpha: &[usize]) -> Option<usize> {
        self.position.get(alpha).copied()
    }

    /// Positions of the multi-indices with |α| ≤ k.
    pub fn block(&self, k: usize) -> Vec<usize> {
        (0..self.dim()).filter(|&i| self.indices[i].iter().sum::<usize>() <= k).collect()
    }

    /// e_{λ,α}(ω) = ∏ (|μ_j| w_j)^{α_j}.
    pub fn monomial(&self, alpha: &[usize], zeta: &[C64]) -> C64 {
        let w = self.spectral.w_coords(zeta);
        self.monomial_w(alpha, &w)
    }

    fn monomial_w(&self, alpha: &[usize], w: &[C64]) -> C64 {
        self.spectral
            .modes
            .iter()
            .zip(alpha)
            .zip(w)
            .map(|((m, &a), wj)| (wj * m.weight()).powu(a as u32))
            .product()
    }

    /// Orthonormal basis function φ_α at ω ∈ E.
    pub fn basis_value(&self, alpha: &[usize], zeta: &[C64]) -> C64 {
        let idx = self.position(alpha).expect("multi-index outside the truncation");
        self.monomial(alpha, zeta) / self.norms[idx]
    }

    /// Gram matrix of the normalized monomials with |α| ≤ 2 against ν_λ, by
    /// Gauss–Hermite quadrature in the real coordinates of at most four modes.
    pub fn quadrature_gram(&self) -> CMat {
        let r = self.rank().min(4);
        let alphas: Vec<Vec<usize>> =
            self.indices.iter().filter(|a| a.iter().sum::<usize>() <= 2 && a[r..].iter().all(|&k| k == 0)).cloned().collect();
        let rule = gauss_hermite(3);
        let q = rule.len();
        let total = q.pow(2 * r as u32);
        let mut gram = CMat::zeros(alphas.len(), alphas.len());
        let mut w = vec![C64::new(0.0, 0.0); self.rank()];
        for node in 0..total {
            let mut rem = node;
            let mut weight = 1.0;
            for (j, wj) in w.iter_mut().enumerate().take(r) {
                let (is, it) = (rem % q, (rem / q) % q);
                rem /= q * q;
                let mu = self.spectral.modes[j].weight();
                let s = (2.0 * mu).sqrt();
                *wj = C64::new(rule.nodes[is], rule.nodes[it]) / s;
                weight *= rule.weights[is] * rule.weights[it] / (2.0 * mu);
            }
            let vals: Vec<C64> = alphas
                .iter()
                .map(|a| self.monomial_w(a, &w) / self.norms[self.position(a).unwrap()])
                .collect();
            for (i, vi) in vals.iter().enumerate() {
                for (k, vk) in vals.iter().enumerate() {
                    gram[(i, k)] += weight * vi * vk.conj();
                }
            }
        }
        gram
    }
}

pub fn fock_basis(spectral: &SpectralData, degree_cap: usize) -> Result<FockTruncation> {
    let r = spectral.rank();
    let indices = multi_indices(r, degree_cap);
    let norms: Vec<f64> = indices
        .iter()
        .map(|alpha| {
            let ln: f64 = spectral
                .modes
                .iter()
                .zip(alpha)
                .map(|(m, &a)| {
                    let mu = m.weight();
                    let a_f = a as f64;
                    2.0 * a_f * mu.ln() + PI.ln() + ln_factorial(a) - (a_f + 1.0) * (2.0 * mu).ln()
                })
                .sum();
            (0.5 * ln).exp()
        })
        .collect();
    let position = indices.iter().enumerate().map(|(i, a)| (a.clone(), i)).collect();
    let normalizer = ((2.0f64).powi(r as i32) * spectral.pfaffian / PI.powi(r as i32)).sqrt();
    let trunc = FockTruncation { spectral: spectral.clone(), degree_cap, indices, norms, normalizer, position };
    if r > 0 {
        let g = trunc.quadrature_gram();
        let dev = max_abs(&(&g - CMat::identity(g.nrows(), g.ncols())));
        if dev > 1e-6 {
            return Err(Error::Consistency(format!("Fock basis Gram deviates from identity by {dev:e}")));
        }
    }
    Ok(trunc)
}

/// Normalized Hermite polynomials p_0..p_d at x (h_k(x) = p_k(x) e^{−x²/2}
/// are orthonormal in L²(R)).
fn hermite_row(x: f64, d: usize, out: &mut [f64]) {
    out[0] = PI.powf(-0.25);
    if d >= 1 {
        out[1] = SQRT_2 * x * out[0];
    }
    for k in 1..d {
        let kf = k as f64;
        out[k + 1] = (2.0 / (kf + 1.0)).sqrt() * x * out[k] - (kf / (kf + 1.0)).sqrt() * out[k - 1];
    }
}

/// Matrix ⟨W(γ)φ_b, φ_a⟩, 0 ≤ a, b ≤ D, of the one-mode displacement
/// W(γ) = exp(γ̄a† − γa). Computed in the Hermite-function model, where
/// W(γ) acts as ψ ↦ e^{ip(y − q/2)} ψ(y − q) with q = √2 Re γ, p = −√2 Im γ,
/// by Gauss–Hermite quadrature of
/// e^{−q²/4} ∫ e^{−t²} e^{ipt} p_b(t − q/2) p_a(t + q/2) dt.
pub fn displacement_block(gamma: C64, d: usize) -> Result<CMat> {
    let g = gamma.norm();
    if !g.is_finite() || g > MAX_SHIFT {
        return Err(Error::Range(format!("displacement |γ| = {g} beyond the quadrature box")));
    }
    let dim = d + 1;
    let g2 = g * g;
    let df = d as f64;
    if g2 > 2.0 * (40.0 + df * (1.0 + g2).ln()) {
        return Ok(CMat::zeros(dim, dim));
    }
    let q = SQRT_2 * gamma.re;
    let p = -SQRT_2 * gamma.im;
    let band = (2.0 * df + 1.0).sqrt();
    let need = (0.5 * p.abs() + band + 6.0).max(0.5 * q.abs() + band + 6.0);
    let nodes = GH_LADDER
        .iter()
        .copied()
        .find(|&k| (2.0 * k as f64).sqrt() >= need)
        .ok_or_else(|| Error::Range(format!("displacement γ = {gamma} needs more than {} nodes", GH_LADDER[7])))?;
    let rule = gauss_hermite(nodes);
    let damp = (-q * q / 4.0).exp();
    let mut a_rows = vec![0.0; dim];
    let mut b_rows = vec![0.0; dim];
    let mut out = CMat::zeros(dim, dim);
    for (t, w) in rule.nodes.iter().zip(&rule.weights) {
        if *w == 0.0 {
            continue;
        }
        hermite_row(t + 0.5 * q, d, &mut a_rows);
        hermite_row(t - 0.5 * q, d, &mut b_rows);
        let u = C64::from_polar(w * damp, p * t);
        for (ai, av) in a_rows.iter().enumerate() {
            let ua = u * av;
            for (bi, bv) in b_rows.iter().enumerate() {
                out[(ai, bi)] += ua * bv;
            }
        }
    }
    Ok(out)
}

/// γ_j = √(2|μ_j|)·w_j(ζ) for every mode.
pub fn mode_shifts(spectral: &SpectralData, zeta: &[C64]) -> Vec<C64> {
    spectral
        .w_coords(zeta)
        .iter()
        .zip(&spectral.modes)
        .map(|(c, m)| c * (2.0 * m.weight()).sqrt())
        .collect()
}

fn assemble(trunc: &FockTruncation, blocks: &[CMat], scalar: C64) -> CMat {
    let dim = trunc.dim();
    let mut out = CMat::zeros(dim, dim);
    for (i, a) in trunc.indices.iter().enumerate() {
        for (k, b) in trunc.indices.iter().enumerate() {
            let mut v = scalar;
            for (j, blk) in blocks.iter().enumerate() {
                v *= blk[(a[j], b[j])];
            }
            out[(i, k)] = v;
        }
    }
    out
}

fn check_tau(trunc: &FockTruncation, tau: &[f64]) -> Result<()> {
    check_dim(2 * trunc.spectral.d_lambda, tau.len())
}

/// Translation part of π_{λ,τ}(ζ, 0) restricted to R_λ^⊥, times the radical phase.
fn translation(trunc: &FockTruncation, tau: &[f64], zeta: &[C64]) -> Result<CMat> {
    let sd = &trunc.spectral;
    let blocks = mode_shifts(sd, zeta)
        .into_iter()
        .map(|g| displacement_block(g, trunc.degree_cap))
        .collect::<Result<Vec<_>>>()?;
    let phase = C64::from_polar(1.0, -sd.tau_pairing(tau, zeta));
    Ok(assemble(trunc, &blocks, phase))
}

/// Matrix ⟨π_{λ,τ}(p)φ_β, φ_α⟩ with
/// π_{λ,τ}(ζ+ζ′, x)ψ(ω) = e^{−i⟨λ,x⟩ − i⟨τ,ζ′⟩ + 2Φ_λ(ω,ζ) − Φ_λ(ζ)} ψ(ω−ζ).
pub fn rep_apply(trunc: &FockTruncation, tau: &[f64], p: &GroupPoint) -> Result<OperatorMatrix> {
    check_tau(trunc, tau)?;
    check_dim(trunc.spectral.n(), p.zeta.len())?;
    check_dim(trunc.spectral.lambda.len(), p.x.len())?;
    let lx: f64 = trunc.spectral.lambda.iter().zip(&p.x).map(|(l, x)| l * x).sum();
    let t = translation(trunc, tau, &p.zeta)?;
    Ok(OperatorMatrix::new(t * C64::from_polar(1.0, -lx)))
}

/// e^{−i⟨λ,x⟩ − i⟨τ,ζ′⟩ − Φ_λ(ζ)}, the closed form of ⟨π(p)e₀, e₀⟩.
pub fn ground_coefficient(spectral: &SpectralData, tau: &[f64], p: &GroupPoint) -> C64 {
    let lx: f64 = spectral.lambda.iter().zip(&p.x).map(|(l, x)| l * x).sum();
    C64::from_polar((-spectral.phi_diag(&p.zeta)).exp(), -lx - spectral.tau_pairing(tau, &p.zeta))
}

/// dπ(Z_v), or dπ(Z̄_v) when `conjugate` is set, on the truncated basis
/// (creation operators drop the top degree). On a positive mode
/// dπ(Z_v) = −c∂ and dπ(Z̄_v) = 2|μ|c̄w with c = w(v); negative modes swap
/// the two; the radical part of v acts by a scalar.
pub fn derived_closed_form(trunc: &FockTruncation, tau: &[f64], v: &[C64], conjugate: bool) -> Result<CMat> {
    check_tau(trunc, tau)?;
    let sd = &trunc.spectral;
    check_dim(sd.n(), v.len())?;
    let dim = trunc.dim();
    let gammas = mode_shifts(sd, v);
    let iv: Vec<C64> = v.iter().map(|z| z * I).collect();
    let xv = C64::new(0.0, -sd.tau_pairing(tau, v));
    let xiv = C64::new(0.0, -sd.tau_pairing(tau, &iv));
    let scalar = if conjugate { 0.5 * (xv + I * xiv) } else { 0.5 * (xv - I * xiv) };
    let mut out = CMat::identity(dim, dim) * scalar;
    for (i, a) in trunc.indices.iter().enumerate() {
        for (j, (mode, g)) in sd.modes.iter().zip(&gammas).enumerate() {
            let lowering = conjugate != mode.positive();
            let mut b = a.clone();
            if lowering {
                // −γ a_j: φ_α ↦ −γ √α_j φ_{α−e_j}
                if a[j] == 0 {
                    continue;
                }
                b[j] -= 1;
                if let Some(k) = trunc.position(&b) {
                    out[(k, i)] += -g * (a[j] as f64).sqrt();
                }
            } else {
                // γ̄ a†_j: φ_α ↦ γ̄ √(α_j+1) φ_{α+e_j}
                b[j] += 1;
                if let Some(k) = trunc.position(&b) {
                    out[(k, i)] += g.conj() * ((a[j] + 1) as f64).sqrt();
                }
            }
        }
    }
    Ok(out)
}

/// dπ(Z_v) or dπ(Z̄_v) from central differences of rep_apply along the
/// one-parameter subgroups t ↦ (tv, 0) and t ↦ (itv, 0).
pub fn derived_from_group(trunc: &FockTruncation, tau: &[f64], v: &[C64], conjugate: bool, h: f64) -> Result<CMat> {
    let m = trunc.spectral.lambda.len();
    let x = vec![0.0; m];
    let diff = |w: &[C64]| -> Result<CMat> {
        let plus = GroupPoint::new(w.iter().map(|z| z * h).collect(), x.clone());
        let minus = GroupPoint::new(w.iter().map(|z| -z * h).collect(), x.clone());
        Ok((rep_apply(trunc, tau, &plus)?.mat - rep_apply(trunc, tau, &minus)?.mat) / C64::new(2.0 * h, 0.0))
    };
    let iv: Vec<C64> = v.iter().map(|z| z * I).collect();
    let xv = diff(v)?;
    let xiv = diff(&iv)?;
    let s = if conjugate { I } else { -I };
    Ok((xv + xiv * s) * C64::new(0.5, 0.0))
}

/// F(ζ) = ∫ f(ζ,x) e^{−i⟨λ,x⟩} dx on the ζ nodes of f's grid.
pub fn x_transform(f: &SampledFunction, lambda: &[f64]) -> Result<Vec<C64>> {
    check_dim(f.m(), lambda.len())?;
    let vals = f.grid_values()?;
    let (xs, wx) = f.grid.x_nodes(f.m());
    let phases: Vec<C64> = xs
        .iter()
        .zip(&wx)
        .map(|(x, w)| C64::from_polar(*w, -lambda.iter().zip(x).map(|(l, v)| l * v).sum::<f64>()))
        .collect();
    let nx = xs.len();
    Ok((0..vals.len() / nx)
        .map(|iz| {
            let row = &vals[iz * nx..(iz + 1) * nx];
            let terms: Vec<C64> = row.iter().zip(&phases).map(|(v, p)| v * p).collect();
            crate::quadrature::pairwise_sum_c(&terms)
        })
        .collect())
}

/// Fraction of ∫|f|² carried by the outermost layer of grid nodes.
pub fn tail_fraction(f: &SampledFunction) -> Result<f64> {
    let vals = f.grid_values()?;
    let n = f.n();
    let (ne, nf) = (f.grid.ne, f.grid.nf);
    let nx = nf.pow(f.m() as u32);
    let (mut edge, mut total) = (Vec::new(), Vec::new());
    for (idx, v) in vals.iter().enumerate() {
        let (iz, ix) = (idx / nx, idx % nx);
        let on_edge = on_layer(iz, ne, 2 * n) || on_layer(ix, nf, f.m());
        let a = v.norm_sqr();
        total.push(a);
        if on_edge {
            edge.push(a);
        }
    }
    let t = pairwise_sum(&total);
    Ok(if t > 0.0 { pairwise_sum(&edge) / t } else { 0.0 })
}

fn on_layer(mut idx: usize, base: usize, len: usize) -> bool {
    for _ in 0..len {
        let d = idx % base;
        if d == 0 || d == base - 1 {
            return true;
        }
        idx /= base;
    }
    false
}

/// Base-`base` digits of a tensor index, most significant first.
fn digits(mut idx: usize, base: usize, len: usize) -> Vec<usize> {
    let mut out = vec![0; len];
    for k in (0..len).rev() {
        out[k] = idx % base;
        idx /= base;
    }
    out
}

/// Σ_members F(ζ)w(ζ) Π_c e^{−iτ_c y_c(ζ)} for every τ, summing one radical
/// coordinate at a time; partial sums are shared between τ with equal trailing
/// coordinates.
fn radical_transform(
    members: &[usize],
    radical_digits: &[Vec<usize>],
    ne: usize,
    big_f: &[C64],
    wz: &[f64],
    taus: &[Vec<f64>],
    tables: &[Vec<Vec<C64>>],
) -> Vec<C64> {
    let k = radical_digits[members[0]].len();
    // Dense array over radical digits, first digit slowest.
    let mut dense = vec![C64::new(0.0, 0.0); ne.pow(k as u32)];
    for &iz in members {
        let idx = radical_digits[iz].iter().fold(0, |a, &d| a * ne + d);
        dense[idx] = big_f[iz] * wz[iz];
    }
    let mut memo: HashMap<(usize, Vec<u64>), Vec<C64>> = HashMap::new();
    // partial(c, t): array over digits 0..c of Σ_{d_c..} dense · Π_{c' ≥ c} table.
    fn partial(
        c: usize,
        t: usize,
        k: usize,
        ne: usize,
        dense: &[C64],
        taus: &[Vec<f64>],
        tables: &[Vec<Vec<C64>>],
        memo: &mut HashMap<(usize, Vec<u64>), Vec<C64>>,
    ) -> Vec<C64> {
        if c == k {
            return dense.to_vec();
        }
        let key = (c, taus[t][c..].iter().map(|v| v.to_bits()).collect::<Vec<u64>>());
        if let Some(v) = memo.get(&key) {
            return v.clone();
        }
        let inner = partial(c + 1, t, k, ne, dense, taus, tables, memo);
        let tb = &tables[t][c];
        let out: Vec<C64> = inner.chunks(ne).map(|row| row.iter().zip(tb).map(|(a, b)| a * b).sum()).collect();
        memo.insert(key, out.clone());
        out
    }
    (0..taus.len()).map(|t| partial(0, t, k, ne, &dense, taus, tables, &mut memo)[0]).collect()
}

/// π_{λ,τ}(f) = ∫ f(p) π_{λ,τ}(p) dp for several τ at once.
pub fn pi_of_f_batch(trunc: &FockTruncation, taus: &[Vec<f64>], f: &SampledFunction) -> Result<Vec<OperatorMatrix>> {
    pi_of_f_batch_with_tail(trunc, taus, f, tail_fraction(f)?)
}

fn pi_of_f_batch_with_tail(trunc: &FockTruncation, taus: &[Vec<f64>], f: &SampledFunction, tail: f64) -> Result<Vec<OperatorMatrix>> {
    let sd = &trunc.spectral;
    check_dim(sd.n(), f.n())?;
    for t in taus {
        check_tau(trunc, t)?;
    }
    let n = f.n();
    let big_f = x_transform(f, &sd.lambda)?;
    let (zs, wz) = f.grid.zeta_nodes(n);
    let ne = f.grid.ne;
    let axes = radical_axes(&sd.radical_basis);
    let dim = trunc.dim();

    // Group ζ nodes sharing their R_λ^⊥ component when R_λ is a coordinate subspace.
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut radical_digits: Vec<Vec<usize>> = Vec::new();
    match &axes {
        Some(ax) if !ax.is_empty() => {
            let rcoords: Vec<usize> = ax.iter().flat_map(|&a| [2 * a, 2 * a + 1]).collect();
            let mut by_key: HashMap<Vec<usize>, usize> = HashMap::new();
            for iz in 0..zs.len() {
                let dg = digits(iz, ne, 2 * n);
                let key: Vec<usize> = (0..2 * n).filter(|c| !rcoords.contains(c)).map(|c| dg[c]).collect();
                let g = *by_key.entry(key).or_insert_with(|| {
                    groups.push(Vec::new());
                    groups.len() - 1
                });
                groups[g].push(iz);
                radical_digits.push(rcoords.iter().map(|&c| dg[c]).collect());
            }
        }
        _ => groups = (0..zs.len()).map(|i| vec![i]).collect(),
    }
    let step_nodes: Vec<f64> = (0..ne).map(|i| -f.grid.le + i as f64 * f.grid.e_step()).collect();
    // Phase tables e^{−iτ_c y} per τ, radical real coordinate c and grid digit.
    let tables: Option<Vec<Vec<Vec<C64>>>> = if radical_digits.is_empty() {
        None
    } else {
        Some(
            taus.iter()
                .map(|t| t.iter().map(|tc| step_nodes.iter().map(|y| C64::from_polar(1.0, -tc * y)).collect()).collect())
                .collect(),
        )
    };
    let zero_tau: Vec<Vec<f64>> = taus.iter().map(|t| vec![0.0; t.len()]).collect();
    let leaf = |range: std::ops::Range<usize>| -> Result<Vec<CMat>> {
        let mut acc = vec![CMat::zeros(dim, dim); taus.len()];
        for g in range {
            let members = &groups[g];
            let rep = members[0];
            let coeffs: Vec<C64> = match &tables {
                Some(tb) => radical_transform(members, &radical_digits, ne, &big_f, &wz, taus, tb),
                None => {
                    let base = big_f[rep] * wz[rep];
                    (0..taus.len()).map(|t| base * C64::from_polar(1.0, -sd.tau_pairing(&taus[t], &zs[rep]))).collect()
                }
            };
            if coeffs.iter().all(|c| *c == C64::new(0.0, 0.0)) {
                continue;
            }
            let tau0 = zero_tau.first().map(|v| v.as_slice()).unwrap_or(&[]);
            let mat = if tables.is_some() {
                translation(trunc, tau0, &zs[rep])?
            } else {
                translation(trunc, &vec![0.0; 2 * sd.d_lambda], &zs[rep])?
            };
            for (a, c) in acc.iter_mut().zip(&coeffs) {
                *a += &mat * *c;
            }
        }
        Ok(acc)
    };
    let combine = |a: Result<Vec<CMat>>, b: Result<Vec<CMat>>| -> Result<Vec<CMat>> {
        let mut a = a?;
        for (x, y) in a.iter_mut().zip(b?) {
            *x += y;
        }
        Ok(a)
    };
    let mats = tree_reduce(groups.len(), 8, &leaf, &combine).unwrap_or_else(|| Ok(vec![CMat::zeros(dim, dim); taus.len()]))?;
    let warning = (tail > 1e-8).then(|| format!("tail mass fraction {tail:e} exceeds 1e-8"));
    Ok(mats.into_iter().map(|mat| OperatorMatrix { mat, warning: warning.clone() }).collect())
}

pub fn pi_of_f(trunc: &FockTruncation, tau: &[f64], f: &SampledFunction) -> Result<OperatorMatrix> {
    Ok(pi_of_f_batch(trunc, &[tau.to_vec()], f)?.remove(0))
}

/// Tensor node set: points and weights.
pub type Nodes = (Vec<Vec<f64>>, Vec<f64>);

#[derive(Debug, Clone, PartialEq)]
pub struct PlancherelReport {
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    pub generic_dim: usize,
    pub excluded_nodes: usize,
    pub warnings: Vec<String>,
}

/// 2^{n−m−3d}/π^{n+m+d}.
pub fn plancherel_constant(n: usize, m: usize, d: usize) -> f64 {
    2f64.powi(n as i32 - m as i32 - 3 * d as i32) / PI.powi((n + m + d) as i32)
}

/// ‖f‖² against (2^{n−m−3d}/π^{n+m+d}) ∫∫ ‖π_{λ,τ}(f)‖²_HS dτ |Pfaff(λ)| dλ;
/// exceptional λ-nodes are dropped.
pub fn plancherel_residual(
    model: &QuadraticModel,
    f: &SampledFunction,
    lambda_grid: &Nodes,
    tau_grid: &Nodes,
    degree_cap: usize,
) -> Result<PlancherelReport> {
    check_dim(model.n(), f.n())?;
    check_dim(model.m(), f.m())?;
    let f = if f.cache.is_some() { f.clone() } else { f.clone().with_cache(f.grid_values()?.to_vec()) };
    let vals = f.grid_values()?;
    let (_, wz) = f.grid.zeta_nodes(f.n());
    let (_, wx) = f.grid.x_nodes(f.m());
    let nx = wx.len();
    let sq: Vec<f64> = vals.iter().enumerate().map(|(i, v)| v.norm_sqr() * wz[i / nx] * wx[i % nx]).collect();
    let lhs = pairwise_sum(&sq);
    let gd = generic_dimension(model, 32, &mut ChaCha8Rng::seed_from_u64(0))?;
    let d = gd.d;
    if lhs == 0.0 {
        return Ok(PlancherelReport { lhs, rhs: 0.0, residual: 0.0, generic_dim: d, excluded_nodes: 0, warnings: vec![] });
    }
    let (taus, wt): (Vec<Vec<f64>>, Vec<f64>) =
        if d == 0 { (vec![Vec::new()], vec![1.0]) } else { tau_grid.clone() };
    for t in &taus {
        check_dim(2 * d, t.len())?;
    }
    let tail = tail_fraction(&f)?;
    let mut excluded = 0;
    let mut warnings = Vec::new();
    let mut contributions = Vec::with_capacity(lambda_grid.0.len());
    for (lambda, wl) in lambda_grid.0.iter().zip(&lambda_grid.1) {
        let sd = spectral_data(model, lambda)?;
        if sd.d_lambda > d {
            excluded += 1;
            continue;
        }
        let trunc = fock_basis(&sd, degree_cap)?;
        let mats = pi_of_f_batch_with_tail(&trunc, &taus, &f, tail)?;
        if let Some(w) = mats.first().and_then(|m| m.warning.clone()) {
            if !warnings.contains(&w) {
                warnings.push(w);
            }
        }
        let inner: Vec<f64> = mats.iter().zip(&wt).map(|(m, w)| w * m.hs_norm().powi(2)).collect();
        contributions.push(wl * sd.pfaffian * pairwise_sum(&inner));
    }
    let rhs = plancherel_constant(model.n(), model.m(), d) * pairwise_sum(&contributions);
    Ok(PlancherelReport { lhs, rhs, residual: (lhs - rhs).abs() / lhs, generic_dim: d, excluded_nodes: excluded, warnings })
}

/// (f * g)(p) = ∫ f(q) g(q⁻¹p) dq by quadrature over f's grid; the result
/// lives on f's grid.
pub fn group_convolve(model: &QuadraticModel, f: &SampledFunction, g: &SampledFunction) -> Result<SampledFunction> {
    check_dim(model.n(), f.n())?;
    check_dim(model.n(), g.n())?;
    check_dim(model.m(), f.m())?;
    let vals = f.grid_values()?;
    let (zs, wz) = f.grid.zeta_nodes(f.n());
    let (xs, wx) = f.grid.x_nodes(f.m());
    let mut nodes = Vec::new();
    for (iz, z) in zs.iter().enumerate() {
        for (ix, x) in xs.iter().enumerate() {
            let v = vals[iz * xs.len() + ix];
            if v != C64::new(0.0, 0.0) {
                nodes.push((GroupPoint::new(z.clone(), x.clone()), v * wz[iz] * wx[ix]));
            }
        }
    }
    let model = model.clone();
    let g = g.clone();
    Ok(SampledFunction::from_fn(f.n(), f.m(), f.grid, move |zeta, x| {
        let p = GroupPoint::new(zeta.to_vec(), x.to_vec());
        let terms: Vec<C64> = nodes
            .iter()
            .map(|(q, w)| {
                let qi = inverse(&model, q).expect("dimension checked");
                let r = multiply(&model, &qi, &p).expect("dimension checked");
                w * g.eval(&r.zeta, &r.x)
            })
            .collect();
        crate::quadrature::pairwise_sum_c(&terms)
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::GridSpec;
    use approx::assert_abs_diff_eq;
    use rand::Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn heis(lambda: f64, d: usize) -> FockTruncation {
        fock_basis(&spectral_data(&QuadraticModel::heisenberg(), &[lambda]).unwrap(), d).unwrap()
    }

    fn laguerre(n: usize, a: f64, x: f64) -> f64 {
        let (mut l0, mut l1) = (1.0, 1.0 + a - x);
        if n == 0 {
            return l0;
        }
        for k in 1..n {
            let kf = k as f64;
            let l2 = ((2.0 * kf + 1.0 + a - x) * l1 - (kf + a) * l0) / (kf + 1.0);
            l0 = l1;
            l1 = l2;
        }
        l1
    }

    /// ⟨m|D(β)|n⟩ for the coherent displacement D(β) = exp(βa† − β̄a).
    fn displacement_closed_form(beta: C64, m: usize, n: usize) -> C64 {
        let x = beta.norm_sqr();
        let lf = |k: usize| ln_factorial(k);
        let pre = (-x / 2.0).exp();
        if m >= n {
            let k = m - n;
            beta.powu(k as u32) * pre * (0.5 * (lf(n) - lf(m))).exp() * laguerre(n, k as f64, x)
        } else {
            let k = n - m;
            (-beta.conj()).powu(k as u32) * pre * (0.5 * (lf(m) - lf(n))).exp() * laguerre(m, k as f64, x)
        }
    }

    #[test]
    fn multi_index_order() {
        assert_eq!(multi_indices(2, 2), vec![vec![0, 0], vec![1, 0], vec![0, 1], vec![2, 0], vec![1, 1], vec![0, 2]]);
        assert_eq!(multi_indices(0, 5), vec![Vec::<usize>::new()]);
        assert_eq!(multi_indices(3, 4).len(), 35);
    }

    #[test]
    fn ground_state_normalizer() {
        let t = heis(1.0, 0);
        assert_abs_diff_eq!(t.normalizer, (2.0 / PI).sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(1.0 / t.norms[0], (2.0 / PI).sqrt(), epsilon = 1e-14);
        let t2 = heis(2.0, 0);
        assert_abs_diff_eq!(t2.normalizer, (4.0 / PI).sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(1.0 / t2.norms[0], t2.normalizer, epsilon = 1e-14);
    }

    #[test]
    fn basis_is_orthonormal() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let model = QuadraticModel::random(3, 2, &mut rng);
        let t = fock_basis(&spectral_data(&model, &[0.7, -0.2]).unwrap(), 3).unwrap();
        let g = t.quadrature_gram();
        assert!(max_abs(&(&g - CMat::identity(g.nrows(), g.ncols()))) < 1e-8);
    }

    #[test]
    fn displacement_matches_laguerre_form() {
        for gamma in [c(0.3, -0.2), c(1.0, 0.0), c(-2.5, 1.5), c(4.0, 3.0), c(0.0, -6.0)] {
            let blk = displacement_block(gamma, 12).unwrap();
            for a in 0..=12 {
                for b in 0..=12 {
                    let exact = displacement_closed_form(gamma.conj(), a, b);
                    assert!((blk[(a, b)] - exact).norm() < 1e-11, "γ={gamma} a={a} b={b}: {} vs {exact}", blk[(a, b)]);
                }
            }
        }
        assert!(displacement_block(c(2e3, 0.0), 4).is_err());
        let far = displacement_block(c(30.0, 0.0), 4).unwrap();
        assert_eq!(far.norm(), 0.0);
    }

    #[test]
    fn displacement_matches_fock_integral() {
        // ⟨Wφ_b, φ_a⟩ with (Wψ)(w) = e^{2|μ|c̄w − |μ||c|²} ψ(w − c), integrated
        // directly against e^{−2|μ||w|²} d²w.
        let mu: f64 = 1.3;
        let cshift = c(0.4, -0.3);
        let gamma = cshift * (2.0 * mu).sqrt();
        let rule = gauss_hermite(60);
        let phi = |k: usize, w: C64| -> C64 {
            w.powu(k as u32) * ((2.0 * mu).powi(k as i32 + 1) / (PI * (1..=k).map(|i| i as f64).product::<f64>())).sqrt()
        };
        let blk = displacement_block(gamma, 4).unwrap();
        for a in 0..=4 {
            for b in 0..=4 {
                let mut acc = c(0.0, 0.0);
                for (s, ws) in rule.nodes.iter().zip(&rule.weights) {
                    for (t, wt) in rule.nodes.iter().zip(&rule.weights) {
                        let w = c(*s, *t) / (2.0 * mu).sqrt();
                        let wpsi = (2.0 * mu * cshift.conj() * w - mu * cshift.norm_sqr()).exp() * phi(b, w - cshift);
                        acc += ws * wt / (2.0 * mu) * wpsi * phi(a, w).conj();
                    }
                }
                assert!((acc - blk[(a, b)]).norm() < 1e-10, "a={a} b={b}");
            }
        }
    }

    #[test]
    fn matrix_coefficient_examples() {
        let t = heis(1.0, 6);
        let p = GroupPoint::new(vec![c(1.0, 0.0)], vec![0.0]);
        let m = rep_apply(&t, &[], &p).unwrap();
        assert_abs_diff_eq!(m.mat[(0, 0)].norm(), (-1.0f64).exp(), epsilon = 1e-6);
        let central = GroupPoint::new(vec![c(0.0, 0.0)], vec![0.8]);
        let m = rep_apply(&t, &[], &central).unwrap();
        let expect = CMat::identity(t.dim(), t.dim()) * C64::from_polar(1.0, -0.8);
        assert!((m.mat - expect).norm() < 1e-12);
        let p = GroupPoint::new(vec![c(0.3, -0.6)], vec![1.7]);
        let m = rep_apply(&t, &[], &p).unwrap();
        assert!((m.mat[(0, 0)] - ground_coefficient(&t.spectral, &[], &p)).norm() < 1e-12);
    }

    #[test]
    fn homomorphism_on_low_block() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let model = QuadraticModel::diagonal(&[vec![1.0, 0.0], vec![0.5, -1.0]]).unwrap();
        let t = fock_basis(&spectral_data(&model, &[0.8, 0.3]).unwrap(), 30).unwrap();
        let tau = vec![0.0; 2 * t.spectral.d_lambda];
        let low = t.block(15);
        for _ in 0..5 {
            let pts = crate::model::random_points(2, 2, 2, 1.0, 2.0, &mut rng);
            let pq = multiply(&model, &pts[0], &pts[1]).unwrap();
            let a = rep_apply(&t, &tau, &pts[0]).unwrap().mat;
            let b = rep_apply(&t, &tau, &pts[1]).unwrap().mat;
            let ab = rep_apply(&t, &tau, &pq).unwrap().mat;
            let prod = &a * &b;
            for &i in &low {
                for &k in &low {
                    assert!((prod[(i, k)] - ab[(i, k)]).norm() < 1e-5);
                }
            }
        }
    }

    #[test]
    fn derived_representation_matches_closed_form() {
        let model = QuadraticModel::diagonal(&[vec![1.0, -2.0]]).unwrap();
        let t = fock_basis(&spectral_data(&model, &[0.6]).unwrap(), 6).unwrap();
        let low = t.block(4);
        for v in [vec![c(1.0, 0.0), c(0.0, 0.0)], vec![c(0.3, 0.2), c(-0.5, 0.7)]] {
            for conj in [false, true] {
                let a = derived_closed_form(&t, &[], &v, conj).unwrap();
                let b = derived_from_group(&t, &[], &v, conj, 1e-4).unwrap();
                for &i in &low {
                    for &k in &low {
                        assert!((a[(i, k)] - b[(i, k)]).norm() < 1e-4);
                    }
                }
            }
        }
    }

    #[test]
    fn pi_of_narrow_gaussian_is_near_identity() {
        let t = heis(1.0, 4);
        let s: f64 = 0.02;
        let norm = 1.0 / (PI * s * s * (PI * s * s).sqrt());
        let grid = GridSpec::new(0.12, 0.12, 41, 41).unwrap();
        let f = SampledFunction::from_fn(1, 1, grid, move |z, x| {
            C64::new(norm * (-(z[0].norm_sqr() + x[0] * x[0]) / (s * s)).exp(), 0.0)
        });
        let m = pi_of_f(&t, &[], &f).unwrap();
        let low = t.block(2);
        for &i in &low {
            for &k in &low {
                let target = if i == k { 1.0 } else { 0.0 };
                assert!((m.mat[(i, k)] - target).norm() < 5e-3, "{i},{k}: {}", m.mat[(i, k)]);
            }
        }
    }

    #[test]
    fn pi_of_symmetric_real_function_is_hermitian() {
        let t = heis(-1.5, 5);
        let grid = GridSpec::new(4.0, 6.0, 33, 49).unwrap();
        let f = SampledFunction::from_fn(1, 1, grid, |z, x| C64::new((-z[0].norm_sqr() - x[0] * x[0]).exp(), 0.0));
        let m = pi_of_f(&t, &[], &f).unwrap();
        assert!(max_abs(&(&m.mat - m.mat.adjoint())) < 1e-8);
    }

    #[test]
    fn plancherel_constant_examples() {
        assert_abs_diff_eq!(plancherel_constant(1, 1, 0), 1.0 / (PI * PI), epsilon = 1e-16);
        assert_abs_diff_eq!(plancherel_constant(2, 1, 1), 1.0 / (4.0 * PI.powi(4)), epsilon = 1e-16);
    }

    #[test]
    fn plancherel_zero_function() {
        let grid = GridSpec::new(2.0, 2.0, 5, 5).unwrap();
        let f = SampledFunction::zero(1, 1, grid);
        let r = plancherel_residual(&QuadraticModel::heisenberg(), &f, &(vec![vec![1.0]], vec![1.0]), &(vec![], vec![]), 4).unwrap();
        assert_eq!(r.residual, 0.0);
    }

    #[test]
    fn convolution_abelian_reduction() {
        let zero = QuadraticModel::new(1, 1, vec![CMat::zeros(1, 1)]).unwrap();
        let grid = GridSpec::new(5.0, 5.0, 41, 41).unwrap();
        let f = SampledFunction::from_fn(1, 1, grid, |z, x| C64::new((-z[0].norm_sqr() - x[0] * x[0]).exp(), 0.0));
        let g = SampledFunction::from_fn(1, 1, grid, |z, x| C64::new((-2.0 * z[0].norm_sqr() - 0.5 * x[0] * x[0]).exp(), 0.0));
        let h = group_convolve(&zero, &f, &g).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..5 {
            let z = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let x: f64 = rng.gen_range(-1.0..1.0);
            // Gaussian convolution in closed form: e^{−a|u|²} * e^{−b|u|²} on R^k.
            let g1 = |a: f64, b: f64, r2: f64, k: i32| (PI / (a + b)).powf(k as f64 / 2.0) * (-a * b / (a + b) * r2).exp();
            let exact = g1(1.0, 2.0, z.norm_sqr(), 2) * g1(1.0, 0.5, x * x, 1);
            assert!((h.eval(&[z], &[x]).re - exact).abs() < 1e-6);
        }
    }
}
