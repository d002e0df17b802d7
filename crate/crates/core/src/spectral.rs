//! Per-covector spectral objects: the λ-radical, J_λ, |J_λ|, J′_λ, the
//! splitting E_{λ,±}, the positive form Φ_λ and the Pfaffian density.

use nalgebra::SymmetricEigen;
use once_cell::sync::Lazy;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{check_dim, Error, Result};
use crate::model::{sesq, CMat, QuadraticModel, C64, I};

/// Relative threshold below which an eigenvalue of A(λ) counts as zero.
pub const ZERO_REL: f64 = 1e-10;
/// Clustering tolerance for the ±i eigenvalues of J′_λ.
pub const CLUSTER_TOL: f64 = 1e-8;

/// Eigen-mode of A(λ) outside the radical.
#[derive(Debug, Clone, PartialEq)]
pub struct Mode {
    /// Eigenvalue μ_j of A(λ); |μ_j| = Φ_λ(v_j) for the unit eigenvector v_j.
    pub mu: f64,
    /// Unit eigenvector v_j.
    pub vector: Vec<C64>,
}

impl Mode {
    pub fn weight(&self) -> f64 {
        self.mu.abs()
    }

    pub fn positive(&self) -> bool {
        self.mu > 0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralData {
    pub lambda: Vec<f64>,
    pub a_lambda: CMat,
    /// Orthonormal columns spanning R_λ = ker A(λ).
    pub radical_basis: CMat,
    pub d_lambda: usize,
    /// J_λ on R_λ^⊥, extended by zero on R_λ.
    pub j: CMat,
    pub abs_j: CMat,
    pub jprime: CMat,
    pub e_plus: CMat,
    pub e_minus: CMat,
    /// Modes of R_λ^⊥: positive μ first, then negative μ, each in decreasing order.
    pub modes: Vec<Mode>,
    /// Gram matrix of Φ_λ in the mode basis (diagonal, entries |μ_j|).
    pub phi_lambda: CMat,
    pub pfaffian: f64,
    pub orientation: f64,
}

fn hermitian_eigen(a: &CMat) -> (Vec<f64>, CMat) {
    let n = a.nrows();
    if n == 0 {
        return (Vec::new(), CMat::zeros(0, 0));
    }
    let sym = (a + a.adjoint()) * C64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(sym);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| eig.eigenvalues[j].partial_cmp(&eig.eigenvalues[i]).unwrap());
    let vals = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = CMat::from_fn(n, n, |r, c| eig.eigenvectors[(r, idx[c])]);
    (vals, vecs)
}

fn columns(u: &CMat, idx: &[usize]) -> CMat {
    CMat::from_fn(u.nrows(), idx.len(), |r, c| u[(r, idx[c])])
}

fn operator(u: &CMat, diag: &[C64]) -> CMat {
    let n = u.nrows();
    let mut d = CMat::zeros(n, n);
    for (i, v) in diag.iter().enumerate() {
        d[(i, i)] = *v;
    }
    u * d * u.adjoint()
}

fn build(model: &QuadraticModel, lambda: &[f64], s: f64) -> Result<SpectralData> {
    check_dim(model.m(), lambda.len())?;
    let n = model.n();
    let a = model.a_lambda(lambda);
    let (mu, u) = hermitian_eigen(&a);
    let scale = mu.iter().map(|x| x.abs()).fold(0.0, f64::max);
    let zero = |x: f64| scale == 0.0 || x.abs() <= ZERO_REL * scale;
    let pos: Vec<usize> = (0..n).filter(|&i| !zero(mu[i]) && mu[i] > 0.0).collect();
    let neg: Vec<usize> = (0..n).filter(|&i| !zero(mu[i]) && mu[i] < 0.0).collect();
    let rad: Vec<usize> = (0..n).filter(|&i| zero(mu[i])).collect();

    let zero_c = C64::new(0.0, 0.0);
    let abs_diag: Vec<C64> = (0..n).map(|i| if zero(mu[i]) { zero_c } else { C64::new(mu[i].abs(), 0.0) }).collect();
    let j_diag: Vec<C64> = (0..n).map(|i| if zero(mu[i]) { zero_c } else { s * I * mu[i] }).collect();
    let jp_diag: Vec<C64> = (0..n).map(|i| if zero(mu[i]) { zero_c } else { s * I * mu[i].signum() }).collect();
    let j = operator(&u, &j_diag);
    let abs_j = operator(&u, &abs_diag);
    let jprime = operator(&u, &jp_diag);

    // E_{λ,±}: eigenspaces of the Hermitian matrix −iJ′ at ±1.
    let (h_vals, h_vecs) = hermitian_eigen(&(jprime.clone() * (-I)));
    let plus: Vec<usize> = (0..n).filter(|&i| (h_vals[i] - 1.0).abs() <= CLUSTER_TOL).collect();
    let minus: Vec<usize> = (0..n).filter(|&i| (h_vals[i] + 1.0).abs() <= CLUSTER_TOL).collect();

    let order: Vec<usize> = pos.iter().chain(neg.iter()).cloned().collect();
    let modes: Vec<Mode> = order
        .iter()
        .map(|&i| Mode { mu: mu[i], vector: u.column(i).iter().cloned().collect() })
        .collect();
    let r = modes.len();
    let mut gram = CMat::zeros(r, r);
    for (a_i, ma) in modes.iter().enumerate() {
        for (b_i, mb) in modes.iter().enumerate() {
            gram[(a_i, b_i)] = phi_lambda_raw(&a, &abs_j, s, &ma.vector, &mb.vector);
        }
    }
    let pfaffian = modes.iter().map(|m| m.weight()).product();
    Ok(SpectralData {
        lambda: lambda.to_vec(),
        a_lambda: a,
        radical_basis: canonical_radical(columns(&u, &rad)),
        d_lambda: rad.len(),
        j,
        abs_j,
        jprime,
        e_plus: columns(&h_vecs, &plus),
        e_minus: columns(&h_vecs, &minus),
        modes,
        phi_lambda: gram,
        pfaffian,
        orientation: s,
    })
}

/// Replaces the radical basis by coordinate vectors when the radical is a
/// coordinate subspace, so that τ-pairings factor over tensor grids.
fn canonical_radical(basis: CMat) -> CMat {
    let n = basis.nrows();
    let proj = &basis * basis.adjoint();
    let mut axes = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let target = if i == j && proj[(i, i)].re > 0.5 { 1.0 } else { 0.0 };
            if (proj[(i, j)] - C64::new(target, 0.0)).norm() > 1e-12 {
                return basis;
            }
        }
        if proj[(i, i)].re > 0.5 {
            axes.push(i);
        }
    }
    CMat::from_fn(n, axes.len(), |r, c| if r == axes[c] { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) })
}

/// Indices of the coordinate axes spanning R_λ, when the radical basis consists of them.
pub fn radical_axes(basis: &CMat) -> Option<Vec<usize>> {
    let mut axes = Vec::new();
    for c in 0..basis.ncols() {
        let hits: Vec<usize> = (0..basis.nrows()).filter(|&r| basis[(r, c)].norm() > 0.0).collect();
        if hits.len() != 1 || basis[(hits[0], c)] != C64::new(1.0, 0.0) {
            return None;
        }
        axes.push(hits[0]);
    }
    Some(axes)
}

/// Φ_λ(ζ,ζ′) = ⟨λ, Im Φ°(J′ζ,ζ′)⟩ + i⟨λ, Im Φ°(ζ,ζ′)⟩ where Φ° is the form
/// linear in its first slot, Φ°(a,b) = Φ(b,a). Expanded, with A = A(λ):
/// ½ s (ζ′ᴴ|A|ζ + ζᴴ|A|ζ′) + ½ (ζ′ᴴAζ − ζᴴAζ′).
fn phi_lambda_raw(a: &CMat, abs_a: &CMat, s: f64, z: &[C64], zp: &[C64]) -> C64 {
    0.5 * s * (sesq(abs_a, zp, z) + sesq(abs_a, z, zp)) + 0.5 * (sesq(a, zp, z) - sesq(a, z, zp))
}

/// Tries both orientations on the Heisenberg instance at λ = 1 and returns
/// the unique sign for which Φ_λ is positive definite and P membership
/// matches dim E_{λ,+} = n − d_λ.
pub fn orientation_self_check() -> Result<f64> {
    let h = QuadraticModel::heisenberg();
    let mut ok = Vec::new();
    for s in [1.0, -1.0] {
        let sd = build(&h, &[1.0], s)?;
        let positive = sd.modes.iter().all(|m| sd.phi(&m.vector, &m.vector).re > 0.0);
        let in_p = crate::convex::p_contains(&h, &[1.0])?;
        let pchar = in_p == (sd.e_plus.ncols() == h.n() - sd.d_lambda);
        if positive && pchar {
            ok.push(s);
        }
    }
    match ok.as_slice() {
        [s] => Ok(*s),
        _ => Err(Error::Consistency(format!("orientation not pinned uniquely: {ok:?}"))),
    }
}

static ORIENTATION: Lazy<f64> = Lazy::new(|| orientation_self_check().expect("orientation self-check"));

/// The pinned sign s in J_λ = s·i·A(λ).
pub fn orientation() -> f64 {
    *ORIENTATION
}

pub fn spectral_data(model: &QuadraticModel, lambda: &[f64]) -> Result<SpectralData> {
    build(model, lambda, orientation())
}

impl SpectralData {
    pub fn n(&self) -> usize {
        self.a_lambda.nrows()
    }

    /// Rank n − d_λ of the Fock factor.
    pub fn rank(&self) -> usize {
        self.modes.len()
    }

    /// Φ_λ(ζ, ζ′).
    pub fn phi(&self, z: &[C64], zp: &[C64]) -> C64 {
        phi_lambda_raw(&self.a_lambda, &self.abs_j, self.orientation, z, zp)
    }

    /// Φ_λ(ζ) = ⟨ζ, |J_λ|ζ⟩.
    pub fn phi_diag(&self, z: &[C64]) -> f64 {
        sesq(&self.abs_j, z, z).re
    }

    /// tr |J_λ|.
    pub fn trace_abs(&self) -> f64 {
        self.modes.iter().map(|m| m.weight()).sum()
    }

    /// Holomorphic coordinates on E_λ: w_j = ⟨v_j, ζ⟩ on positive modes and its
    /// conjugate on negative modes.
    pub fn w_coords(&self, zeta: &[C64]) -> Vec<C64> {
        self.modes
            .iter()
            .map(|m| {
                let u: C64 = m.vector.iter().zip(zeta).map(|(v, z)| v.conj() * z).sum();
                if m.positive() { u } else { u.conj() }
            })
            .collect()
    }

    /// Coordinates of the R_λ component of ζ in the radical basis.
    pub fn radical_coords(&self, zeta: &[C64]) -> Vec<C64> {
        (0..self.d_lambda)
            .map(|k| self.radical_basis.column(k).iter().zip(zeta).map(|(v, z)| v.conj() * z).sum())
            .collect()
    }

    /// ⟨τ, ζ_R⟩ with τ ∈ R^{2d_λ} paired against (Re b_k, Im b_k).
    pub fn tau_pairing(&self, tau: &[f64], zeta: &[C64]) -> f64 {
        self.radical_coords(zeta).iter().enumerate().map(|(k, b)| tau[2 * k] * b.re + tau[2 * k + 1] * b.im).sum()
    }

    /// Checks J′² = −I on R_λ^⊥, positivity of |J_λ| and Φ_λ there, Φ_λ(v,v) =
    /// ⟨v,|J_λ|v⟩ on the given vectors, and Pfaffian = det A(λ) on Λ₊.
    pub fn check_invariants(&self, probes: &[Vec<C64>]) -> Result<()> {
        let n = self.n();
        let proj_perp = CMat::identity(n, n) - &self.radical_basis * self.radical_basis.adjoint();
        let scale = 1.0 + self.a_lambda.norm();
        let jj = &self.jprime * &self.jprime + &proj_perp;
        if jj.norm() > 1e-10 * (n.max(1) as f64) {
            return Err(Error::Consistency(format!("J′² + I = {:e} on the complement", jj.norm())));
        }
        let (abs_vals, _) = hermitian_eigen(&self.abs_j);
        if abs_vals.iter().any(|v| *v < -1e-10 * scale) {
            return Err(Error::Consistency("|J_λ| not positive semidefinite".into()));
        }
        for m in &self.modes {
            if self.phi(&m.vector, &m.vector).re <= 0.0 {
                return Err(Error::Consistency("Φ_λ not positive on R_λ^⊥".into()));
            }
        }
        for v in probes {
            let lhs = self.phi(v, v);
            let rhs = sesq(&self.abs_j, v, v);
            let vn: f64 = v.iter().map(|z| z.norm_sqr()).sum();
            if (lhs - rhs).norm() > 1e-10 * scale * (1.0 + vn) {
                return Err(Error::Consistency(format!("Φ_λ(v,v) = {lhs} but ⟨v,|J|v⟩ = {rhs}")));
            }
        }
        if self.d_lambda == 0 && self.modes.iter().all(|m| m.positive()) && n > 0 {
            let det = self.a_lambda.determinant().re;
            if (det - self.pfaffian).abs() > 1e-10 * self.pfaffian.abs().max(1.0) * scale.powi(n as i32) {
                return Err(Error::Consistency(format!("Pfaffian {} but det A(λ) = {det}", self.pfaffian)));
            }
        }
        Ok(())
    }
}

/// Generic radical dimension d = min d_λ and the exceptional-set oracle.
#[derive(Debug, Clone)]
pub struct GenericDimension {
    pub d: usize,
    model: QuadraticModel,
}

impl GenericDimension {
    /// λ ∈ W ⇔ d_λ > d.
    pub fn is_exceptional(&self, lambda: &[f64]) -> Result<bool> {
        Ok(build(&self.model, lambda, 1.0)?.d_lambda > self.d)
    }
}

pub fn generic_dimension<R: Rng + ?Sized>(model: &QuadraticModel, samples: usize, rng: &mut R) -> Result<GenericDimension> {
    let m = model.m();
    let mut d = model.n();
    let mut probe = |l: &[f64]| -> Result<()> {
        d = d.min(build(model, l, 1.0)?.d_lambda);
        Ok(())
    };
    for k in 0..m {
        let mut e = vec![0.0; m];
        e[k] = 1.0;
        probe(&e)?;
    }
    for _ in 0..samples {
        let l: Vec<f64> = (0..m).map(|_| StandardNormal.sample(rng)).collect();
        probe(&l)?;
    }
    Ok(GenericDimension { d, model: model.clone() })
}
