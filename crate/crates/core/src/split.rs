//! The splitting N = N_{K,1}·N_{K,2} attached to a compact convex K ⊆ P.

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::convex::{p_contains, project_body, support_function, ConvexBody};
use crate::error::{check_dim, Error, Result};
use crate::model::{commutator, null_space, rho, AmbientPoint, CMat, GridSpec, GroupPoint, QuadraticModel, SampledFunction, C64};
use crate::transform::ExtensionResult;

const SUBSPACE_REL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct SplitData {
    /// Orthonormal columns spanning F_{K,1} = (span K)° in F.
    pub f1: DMatrix<f64>,
    /// Orthonormal columns spanning F_{K,2} = span K.
    pub f2: DMatrix<f64>,
    /// Orthonormal columns spanning E_{K,1} = ∩_{λ ∈ span K} ker A(λ).
    pub e1: CMat,
    pub e2: CMat,
    /// Φ_{K,2} on E_{K,2} in the coordinates of `e2` and `f2`.
    pub phi2: QuadraticModel,
    /// K in the coordinates of `f2`.
    pub body2: ConvexBody,
    pub model: QuadraticModel,
}

/// Orthonormal basis of the null space of a real matrix (columns span ker a).
fn real_null_space(a: &DMatrix<f64>, dim: usize) -> DMatrix<f64> {
    if a.nrows() == 0 {
        return DMatrix::identity(dim, dim);
    }
    let mut padded = a.clone();
    if padded.nrows() < dim {
        padded = padded.resize_vertically(dim, 0.0);
    }
    let svd = padded.svd(false, true);
    let vt = svd.v_t.expect("svd without V");
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let cols: Vec<usize> = (0..dim).filter(|&i| smax == 0.0 || svd.singular_values[i] <= SUBSPACE_REL * smax).collect();
    let mut out = DMatrix::zeros(dim, cols.len());
    for (j, &i) in cols.iter().enumerate() {
        for r in 0..dim {
            out[(r, j)] = vt[(i, r)];
        }
    }
    canonical_real(out)
}

/// Replaces a basis of a coordinate subspace by the coordinate vectors.
fn canonical_real(q: DMatrix<f64>) -> DMatrix<f64> {
    let p = &q * q.transpose();
    let dim = p.nrows();
    let mut axes = Vec::new();
    for i in 0..dim {
        for j in 0..dim {
            let target = if i == j && p[(i, i)] > 0.5 { 1.0 } else { 0.0 };
            if (p[(i, j)] - target).abs() > 1e-12 {
                return q;
            }
        }
        if p[(i, i)] > 0.5 {
            axes.push(i);
        }
    }
    let mut out = DMatrix::zeros(dim, axes.len());
    for (c, &a) in axes.iter().enumerate() {
        out[(a, c)] = 1.0;
    }
    out
}

fn canonical_complex(q: CMat) -> CMat {
    let p = &q * q.adjoint();
    let n = p.nrows();
    let mut axes = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let target = if i == j && p[(i, i)].re > 0.5 { 1.0 } else { 0.0 };
            if (p[(i, j)] - target).norm() > 1e-12 {
                return q;
            }
        }
        if p[(i, i)].re > 0.5 {
            axes.push(i);
        }
    }
    let mut out = CMat::zeros(n, axes.len());
    for (c, &a) in axes.iter().enumerate() {
        out[(a, c)] = C64::new(1.0, 0.0);
    }
    out
}

/// Orthonormal complement in Cⁿ of the span of the columns of q.
fn complex_complement(q: &CMat, n: usize) -> CMat {
    if q.ncols() == 0 {
        return CMat::identity(n, n);
    }
    canonical_complex(null_space(&q.adjoint(), SUBSPACE_REL))
}

fn real_columns(q: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..q.ncols()).map(|j| q.column(j).iter().cloned().collect()).collect()
}

/// Computes F_{K,1}, F_{K,2}, E_{K,1}, E_{K,2} and Φ_{K,2}.
pub fn split(model: &QuadraticModel, k: &ConvexBody) -> Result<SplitData> {
    check_dim(model.m(), k.dim())?;
    let (n, m) = (model.n(), model.m());
    for v in k.vertices() {
        if !p_contains(model, v)? {
            return Err(Error::Contract(format!("K is not inside P: vertex {v:?}")));
        }
    }
    // span K: rows are the vertices; F_{K,1} is its orthogonal complement.
    let verts = DMatrix::from_fn(k.vertices().len(), m, |i, j| k.vertices()[i][j]);
    let f1 = real_null_space(&verts, m);
    let f2 = if f1.ncols() == 0 { DMatrix::identity(m, m) } else { real_null_space(&f1.transpose(), m) };
    let f2_cols = real_columns(&f2);
    let mut stacked = CMat::zeros((f2_cols.len() * n).max(n), n);
    for (j, c) in f2_cols.iter().enumerate() {
        stacked.view_mut((j * n, 0), (n, n)).copy_from(&model.a_lambda(c));
    }
    let e1 = if f2_cols.is_empty() { CMat::identity(n, n) } else { canonical_complex(null_space(&stacked, SUBSPACE_REL)) };
    let e2 = complex_complement(&e1, n);
    let coeffs: Vec<CMat> = f2_cols.iter().map(|c| e2.adjoint() * model.a_lambda(c) * &e2).collect();
    let phi2 = QuadraticModel::new(e2.ncols(), f2_cols.len(), coeffs)?;
    let body2 = if k.is_empty() { ConvexBody::empty(f2.ncols()) } else { project_body(k, &f2)? };
    Ok(SplitData { f1, f2, e1, e2, phi2, body2, model: model.clone() })
}

impl SplitData {
    /// ζ ↦ coordinates of its E_{K,2} component.
    pub fn e2_coords(&self, zeta: &[C64]) -> Vec<C64> {
        (0..self.e2.ncols()).map(|j| (0..zeta.len()).map(|r| self.e2[(r, j)].conj() * zeta[r]).sum()).collect()
    }

    pub fn e1_coords(&self, zeta: &[C64]) -> Vec<C64> {
        (0..self.e1.ncols()).map(|j| (0..zeta.len()).map(|r| self.e1[(r, j)].conj() * zeta[r]).sum()).collect()
    }

    pub fn f2_coords<T: Copy + Into<Complex64>>(&self, x: &[T]) -> Vec<C64> {
        (0..self.f2.ncols()).map(|j| x.iter().enumerate().map(|(r, v)| (*v).into() * self.f2[(r, j)]).sum()).collect()
    }

    pub fn f2_coords_real(&self, x: &[f64]) -> Vec<f64> {
        (0..self.f2.ncols()).map(|j| x.iter().enumerate().map(|(r, v)| v * self.f2[(r, j)]).sum()).collect()
    }

    pub fn from_e2(&self, c: &[C64]) -> Vec<C64> {
        (0..self.e2.nrows()).map(|r| c.iter().enumerate().map(|(j, v)| self.e2[(r, j)] * v).sum()).collect()
    }

    pub fn from_e1(&self, c: &[C64]) -> Vec<C64> {
        (0..self.e1.nrows()).map(|r| c.iter().enumerate().map(|(j, v)| self.e1[(r, j)] * v).sum()).collect()
    }

    pub fn from_f2(&self, c: &[C64]) -> Vec<C64> {
        (0..self.f2.nrows()).map(|r| c.iter().enumerate().map(|(j, v)| v * self.f2[(r, j)]).sum()).collect()
    }

    pub fn from_f1(&self, c: &[C64]) -> Vec<C64> {
        (0..self.f1.nrows()).map(|r| c.iter().enumerate().map(|(j, v)| v * self.f1[(r, j)]).sum()).collect()
    }

    /// Φ_{K,2} pushed into F_C.
    pub fn phi2_ambient(&self, z: &[C64], zp: &[C64]) -> Vec<C64> {
        self.from_f2(&self.phi2.phi(&self.e2_coords(z), &self.e2_coords(zp)))
    }

    pub fn is_trivial(&self) -> bool {
        self.f1.ncols() == 0 && self.e1.ncols() == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitInvariants {
    /// max |P_{F2}(Φ(ζ,ζ′) − Φ_{K,2}(ζ,ζ′))| over ζ,ζ′ ∈ E_{K,2}.
    pub phi_difference: f64,
    /// max |commutator of N_{K,1} with N, projected off N_{K,1}|.
    pub normality: f64,
    /// max |⟨λ,Φ(ζ)⟩ − ⟨λ,Φ_{K,2}(ζ′)⟩| for λ ∈ span K, ζ − ζ′ ∈ E_{K,1}.
    pub pairing: f64,
    /// max |H_K(ρ(ζ₁+ζ₂, z₁+z₂)) − H_K(ρ₂(ζ₂, z₂))|.
    pub support_invariance: f64,
    /// Fraction of sampled covectors in span K where Λ₊(N_{K,2}) membership
    /// disagrees with membership in the relative interior of P ∩ span K.
    pub lambda_plus_mismatch: f64,
}

impl SplitInvariants {
    pub fn max_error(&self) -> f64 {
        self.phi_difference.max(self.normality).max(self.pairing).max(self.support_invariance)
    }
}

fn sample_c<R: rand::Rng + ?Sized>(k: usize, rng: &mut R) -> Vec<C64> {
    (0..k).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect()
}

/// Checks the defining properties on `samples` random points.
pub fn check_invariants<R: rand::Rng + ?Sized>(s: &SplitData, samples: usize, rng: &mut R) -> Result<SplitInvariants> {
    let (n, m) = (s.model.n(), s.model.m());
    let mut inv = SplitInvariants { phi_difference: 0.0, normality: 0.0, pairing: 0.0, support_invariance: 0.0, lambda_plus_mismatch: 0.0 };
    let proj_f2 = |v: &[C64]| -> Vec<C64> { s.from_f2(&s.f2_coords(v)) };
    let mut mismatches = 0usize;
    for _ in 0..samples {
        let a = s.from_e2(&sample_c(s.e2.ncols(), rng));
        let b = s.from_e2(&sample_c(s.e2.ncols(), rng));
        let full = s.model.phi(&a, &b);
        let part = s.phi2_ambient(&a, &b);
        let diff: Vec<C64> = full.iter().zip(&part).map(|(x, y)| x - y).collect();
        let off: f64 = proj_f2(&diff).iter().map(|v| v.norm()).fold(0.0, f64::max);
        inv.phi_difference = inv.phi_difference.max(off);

        let z1 = s.from_e1(&sample_c(s.e1.ncols(), rng));
        let x1: Vec<f64> = s.from_f1(&sample_c(s.f1.ncols(), rng)).iter().map(|v| v.re).collect();
        let q = GroupPoint::new(sample_c(n, rng), (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect());
        let c = commutator(&s.model, &GroupPoint::new(z1.clone(), x1.clone()), &q)?;
        // component of the commutator outside E_{K,1} × F_{K,1}
        let ze2 = s.e2_coords(&c.zeta).iter().map(|v| v.norm()).fold(0.0, f64::max);
        let xf2 = s.f2_coords_real(&c.x).iter().map(|v| v.abs()).fold(0.0, f64::max);
        inv.normality = inv.normality.max(ze2.max(xf2));

        let zeta2 = s.from_e2(&sample_c(s.e2.ncols(), rng));
        let zeta: Vec<C64> = zeta2.iter().zip(&z1).map(|(a, b)| a + b).collect();
        let lam2: Vec<f64> = (0..s.f2.ncols()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let lam: Vec<f64> = s.from_f2(&lam2.iter().map(|v| C64::new(*v, 0.0)).collect::<Vec<_>>()).iter().map(|v| v.re).collect();
        let lhs: f64 = lam.iter().zip(s.model.phi_diag(&zeta)).map(|(a, b)| a * b).sum();
        let rhs: f64 = lam2.iter().zip(s.phi2.phi_diag(&s.e2_coords(&zeta2))).map(|(a, b)| a * b).sum();
        inv.pairing = inv.pairing.max((lhs - rhs).abs());

        let zz1 = s.from_f1(&sample_c(s.f1.ncols(), rng));
        let zz2c = sample_c(s.f2.ncols(), rng);
        let zz: Vec<C64> = zz1.iter().zip(s.from_f2(&zz2c)).map(|(a, b)| a + b).collect();
        let h_full = support_function(&s.body2_in_f(), &rho(&s.model, &AmbientPoint::new(zeta.clone(), zz))?);
        let h_split = support_function(&s.body2, &rho(&s.phi2, &AmbientPoint::new(s.e2_coords(&zeta2), zz2c))?);
        let d = if h_full.is_finite() || h_split.is_finite() { (h_full - h_split).abs() } else { 0.0 };
        inv.support_invariance = inv.support_invariance.max(d);

        if s.f2.ncols() > 0 && s.e2.ncols() > 0 {
            let in_plus2 = s.phi2.a_lambda(&lam2).symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min) > 1e-9;
            let a = s.model.a_lambda(&lam);
            let ev = a.symmetric_eigenvalues();
            let psd = ev.iter().all(|&e| e > -1e-9);
            let rank = ev.iter().filter(|&&e| e > 1e-9).count();
            if in_plus2 != (psd && rank == s.e2.ncols()) {
                mismatches += 1;
            }
        }
    }
    inv.lambda_plus_mismatch = mismatches as f64 / samples.max(1) as f64;
    Ok(inv)
}

impl SplitData {
    /// K as given (in F′ coordinates).
    fn body2_in_f(&self) -> ConvexBody {
        let verts = self.body2.vertices().iter().map(|v| self.from_f2(&v.iter().map(|x| C64::new(*x, 0.0)).collect::<Vec<_>>()).iter().map(|c| c.re).collect()).collect();
        ConvexBody::new(self.model.m(), verts, self.body2.is_cone()).expect("dimensions agree")
    }
}

/// ι(φ)(ζ₁+ζ₂, x₁+x₂) = φ(ζ₂, x₂), sampled on `grid`.
pub fn embed_flat(s: &SplitData, phi: &SampledFunction, grid: GridSpec) -> Result<SampledFunction> {
    check_dim(s.e2.ncols(), phi.n())?;
    check_dim(s.f2.ncols(), phi.m())?;
    let s2 = s.clone();
    let phi = phi.clone();
    Ok(SampledFunction::from_fn(s.model.n(), s.model.m(), grid, move |zeta, x| phi.eval(&s2.e2_coords(zeta), &s2.f2_coords_real(x))))
}

/// Pull-back of an extension on E_{K,2} × (F_{K,2})_C to E × F_C.
pub fn embed_extension(s: &SplitData, f: &ExtensionResult) -> ExtensionResult {
    let s2 = s.clone();
    let f = f.clone();
    let body = s.body2_in_f();
    ExtensionResult::from_fn(
        f.route,
        body,
        Arc::new(move |zeta: &[C64], z: &[C64]| f.eval(&AmbientPoint::new(s2.e2_coords(zeta), s2.f2_coords(z)))),
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct GrowthReport {
    /// Largest fitted polynomial degree over the rays.
    pub degree: f64,
    /// Largest |f| on the sweep.
    pub coefficient: f64,
    /// max over rays of log(M(R)/M(r₀)) / log(R/r₀).
    pub log_growth_ratio: f64,
    pub exponential: bool,
    pub witness: Option<AmbientPoint>,
    pub rays: usize,
}

/// Sweeps f along rays in the E_{K,1} and (F_{K,1})_C directions from `base`
/// at radii r₀·2^k up to `radius`, fits log max|f| against log r and flags
/// growth beyond (order + 1)·log radius.
pub fn verify_split_growth(s: &SplitData, f: &ExtensionResult, base: &AmbientPoint, radius: f64, order: usize) -> Result<GrowthReport> {
    let (n, m) = (s.model.n(), s.model.m());
    check_dim(n, base.zeta.len())?;
    check_dim(m, base.z.len())?;
    let mut dirs: Vec<(Vec<C64>, Vec<C64>)> = Vec::new();
    for j in 0..s.e1.ncols() {
        for ph in [C64::new(1.0, 0.0), C64::new(0.0, 1.0)] {
            dirs.push(((0..n).map(|r| s.e1[(r, j)] * ph).collect(), vec![C64::new(0.0, 0.0); m]));
        }
    }
    for j in 0..s.f1.ncols() {
        for ph in [C64::new(1.0, 0.0), C64::new(0.0, 1.0)] {
            dirs.push((vec![C64::new(0.0, 0.0); n], (0..m).map(|r| ph * s.f1[(r, j)]).collect()));
        }
    }
    let r0 = 1.0;
    let mut radii = vec![r0];
    while *radii.last().unwrap() * 2.0 <= radius * (1.0 + 1e-12) {
        radii.push(radii.last().unwrap() * 2.0);
    }
    let mut rep = GrowthReport { degree: 0.0, coefficient: 0.0, log_growth_ratio: 0.0, exponential: false, witness: None, rays: dirs.len() };
    let lr = (radius / r0).ln();
    for (dz, dw) in &dirs {
        let mut maxes = Vec::with_capacity(radii.len());
        for &r in &radii {
            let a = AmbientPoint::new(
                base.zeta.iter().zip(dz).map(|(b, d)| b + d * r).collect(),
                base.z.iter().zip(dw).map(|(b, d)| b + d * r).collect(),
            );
            let v = f.eval(&a)?.norm();
            if v > rep.coefficient {
                rep.coefficient = v;
            }
            maxes.push((v, a));
        }
        let (m0, _) = &maxes[0];
        let (mr, ar) = maxes.last().unwrap();
        if *m0 > 0.0 && *mr > 0.0 && radii.len() > 1 {
            let ratio = (mr / m0).ln() / lr;
            if ratio > rep.log_growth_ratio {
                rep.log_growth_ratio = ratio;
            }
            if (mr / m0).ln() > (order as f64 + 1.0) * lr {
                rep.exponential = true;
                rep.witness = Some(ar.clone());
            }
            let k = maxes.len();
            let (ma, _) = &maxes[k - 2];
            let slope = (mr / ma).ln() / (radii[k - 1] / radii[k - 2]).ln();
            rep.degree = rep.degree.max(slope.round().max(0.0));
        }
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transform::Route;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn two_d_example() -> (QuadraticModel, ConvexBody) {
        let model = QuadraticModel::diagonal(&[vec![1.0], vec![0.0]]).unwrap();
        let k = ConvexBody::new(2, vec![vec![1.0, 0.0], vec![2.0, 0.0]], false).unwrap();
        (model, k)
    }

    #[test]
    fn heisenberg_factor() {
        let (model, k) = two_d_example();
        let s = split(&model, &k).unwrap();
        assert_eq!(s.f1, DMatrix::from_column_slice(2, 1, &[0.0, 1.0]));
        assert_eq!(s.e1.ncols(), 0);
        assert_eq!(s.e2.ncols(), 1);
        assert_eq!(s.phi2.n(), 1);
        assert_eq!(s.phi2.m(), 1);
        assert_abs_diff_eq!(s.phi2.phi_diag(&[C64::new(0.6, 0.8)])[0], 1.0, epsilon = 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let inv = check_invariants(&s, 200, &mut rng).unwrap();
        assert!(inv.max_error() <= 1e-12, "{inv:?}");
        assert_eq!(inv.lambda_plus_mismatch, 0.0);
    }

    #[test]
    fn spanning_body_is_trivial() {
        let model = QuadraticModel::heisenberg();
        let s = split(&model, &ConvexBody::cuboid(&[(1.0, 2.0)])).unwrap();
        assert!(s.is_trivial());
        assert_eq!(s.phi2.n(), 1);
    }

    #[test]
    fn zero_model_zero_body() {
        let model = QuadraticModel::diagonal(&[vec![0.0, 0.0]]).unwrap();
        let k = ConvexBody::new(1, vec![vec![0.0]], false).unwrap();
        let s = split(&model, &k).unwrap();
        assert_eq!(s.f1.ncols(), 1);
        assert_eq!(s.f2.ncols(), 0);
        assert_eq!(s.e2.ncols(), 0);
    }

    #[test]
    fn body_outside_p_rejected() {
        let (model, _) = two_d_example();
        let k = ConvexBody::new(2, vec![vec![-1.0, 0.0], vec![-2.0, 0.0]], false).unwrap();
        assert!(matches!(split(&model, &k), Err(Error::Contract(_))));
    }

    #[test]
    fn degenerate_direction_invariants() {
        let model = QuadraticModel::diagonal(&[vec![1.0, 0.0], vec![0.5, 0.0]]).unwrap();
        let k = ConvexBody::new(2, vec![vec![1.0, 1.0], vec![2.0, 2.0]], false).unwrap();
        let s = split(&model, &k).unwrap();
        assert_eq!(s.e1.ncols(), 1);
        assert_eq!(s.f1.ncols(), 1);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let inv = check_invariants(&s, 200, &mut rng).unwrap();
        assert!(inv.max_error() <= 1e-12, "{inv:?}");
    }

    #[test]
    fn embed_flat_of_exponential() {
        let (model, k) = two_d_example();
        let s = split(&model, &k).unwrap();
        let g = GridSpec::new(1.0, 1.0, 3, 3).unwrap();
        let phi = SampledFunction::from_fn(1, 1, g, |z, x| C64::new(0.0, x[0]).exp() * (-z[0].norm_sqr()).exp());
        let e = embed_flat(&s, &phi, g).unwrap();
        let z = [C64::new(0.3, -0.4)];
        for x in [[0.5, 2.0], [-1.0, 7.0]] {
            let want = C64::new(-0.25, x[0]).exp();
            assert!((e.eval(&z, &x) - want).norm() < 1e-15);
        }
    }

    #[test]
    fn growth_degrees() {
        let model = QuadraticModel::diagonal(&[vec![1.0, 0.0]]).unwrap();
        let k = ConvexBody::cuboid(&[(1.0, 2.0)]);
        let s = split(&model, &k).unwrap();
        let body = k.clone();
        let f = ExtensionResult::from_fn(Route::A, body.clone(), Arc::new(|z: &[C64], w: &[C64]| Ok((C64::new(0.0, 1.0) * w[0] - z[0] * z[0]).exp())));
        let base = AmbientPoint::new(vec![C64::new(0.2, 0.1), C64::new(0.0, 0.0)], vec![C64::new(0.0, 1.0)]);
        let r = verify_split_growth(&s, &f, &base, 64.0, 3).unwrap();
        assert_eq!(r.degree, 0.0);
        assert!(!r.exponential);
        let g = f.times(Arc::new(|z: &[C64], _: &[C64]| z[1]));
        let r = verify_split_growth(&s, &g, &base, 64.0, 3).unwrap();
        assert_eq!(r.degree, 1.0);
        let zero = ExtensionResult::zero(body);
        let r = verify_split_growth(&s, &zero, &base, 64.0, 3).unwrap();
        assert_eq!((r.degree, r.coefficient), (0.0, 0.0));
        let bad = f.times(Arc::new(|z: &[C64], _: &[C64]| (z[1] * z[1]).exp()));
        assert!(verify_split_growth(&s, &bad, &base, 16.0, 3).is_err() || verify_split_growth(&s, &bad, &base, 16.0, 3).unwrap().exponential);
    }
}
