//! The quadratic model, its group law, ρ, slices and CR vector fields.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{check_dim, Error, Result};
use crate::quadrature::trapezoid;

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;

pub const I: C64 = C64::new(0.0, 1.0);

/// Hermitian map Φ: Cⁿ×Cⁿ → Cᵐ given by m Hermitian matrices,
/// component k being `ζᴴ A_k ζ'` (conjugate-linear in the first slot).
#[derive(Clone, PartialEq)]
pub struct QuadraticModel {
    n: usize,
    m: usize,
    coeffs: Vec<CMat>,
}

impl fmt::Debug for QuadraticModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "QuadraticModel(n={}, m={}, coeffs={:?})", self.n, self.m, self.coeffs)
    }
}

impl QuadraticModel {
    pub fn new(n: usize, m: usize, coeffs: Vec<CMat>) -> Result<Self> {
        check_dim(m, coeffs.len())?;
        for (k, a) in coeffs.iter().enumerate() {
            if a.nrows() != n || a.ncols() != n {
                return Err(Error::Contract(format!("A_{} is {}x{}, expected {n}x{n}", k + 1, a.nrows(), a.ncols())));
            }
            let dev = (a - a.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
            if dev > 1e-14 * a.iter().map(|z| z.norm()).fold(1.0, f64::max) {
                return Err(Error::Contract(format!("A_{} is not Hermitian (deviation {dev:e})", k + 1)));
            }
        }
        Ok(Self { n, m, coeffs })
    }

    /// Real diagonal coefficient matrices.
    pub fn diagonal(diags: &[Vec<f64>]) -> Result<Self> {
        let n = diags.first().map_or(0, |d| d.len());
        let coeffs = diags
            .iter()
            .map(|d| CMat::from_diagonal(&nalgebra::DVector::from_iterator(d.len(), d.iter().map(|&v| C64::new(v, 0.0)))))
            .collect();
        Self::new(n, diags.len(), coeffs)
    }

    /// The Heisenberg model: n = m = 1, A₁ = [1].
    pub fn heisenberg() -> Self {
        Self::diagonal(&[vec![1.0]]).unwrap()
    }

    /// Random model with Hermitian coefficients having entries of size about one.
    pub fn random<R: Rng + ?Sized>(n: usize, m: usize, rng: &mut R) -> Self {
        let coeffs = (0..m)
            .map(|_| {
                let b = CMat::from_fn(n, n, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
                (&b + b.adjoint()) * C64::new(0.5, 0.0)
            })
            .collect();
        Self::new(n, m, coeffs).unwrap()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn coeffs(&self) -> &[CMat] {
        &self.coeffs
    }

    pub fn coeff_scale(&self) -> f64 {
        self.coeffs
            .iter()
            .map(|a| a.iter().map(|z| z.norm()).fold(0.0, f64::max))
            .fold(0.0, f64::max)
    }

    /// Φ(ζ, ζ') with components `ζᴴ A_k ζ'`.
    pub fn phi(&self, a: &[C64], b: &[C64]) -> Vec<C64> {
        self.coeffs.iter().map(|ak| sesq(ak, a, b)).collect()
    }

    /// Φ(ζ) = Φ(ζ, ζ), real-valued.
    pub fn phi_diag(&self, a: &[C64]) -> Vec<f64> {
        self.coeffs.iter().map(|ak| sesq(ak, a, a).re).collect()
    }

    /// A(λ) = Σ λ_k A_k.
    pub fn a_lambda(&self, lambda: &[f64]) -> CMat {
        let mut out = CMat::zeros(self.n, self.n);
        for (l, a) in lambda.iter().zip(&self.coeffs) {
            out += a * C64::new(*l, 0.0);
        }
        out
    }

    fn check_point(&self, zeta: &[C64], x: usize) -> Result<()> {
        check_dim(self.n, zeta.len())?;
        check_dim(self.m, x)
    }
}

/// Largest entry modulus.
pub fn max_abs(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub(crate) fn sesq(a_mat: &CMat, a: &[C64], b: &[C64]) -> C64 {
    let n = a.len();
    let mut s = C64::new(0.0, 0.0);
    for i in 0..n {
        let mut row = C64::new(0.0, 0.0);
        for j in 0..n {
            row += a_mat[(i, j)] * b[j];
        }
        s += a[i].conj() * row;
    }
    s
}

/// Element (ζ, x) of N = Cⁿ × Rᵐ.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupPoint {
    pub zeta: Vec<C64>,
    pub x: Vec<f64>,
}

impl GroupPoint {
    pub fn new(zeta: Vec<C64>, x: Vec<f64>) -> Self {
        Self { zeta, x }
    }

    pub fn identity(n: usize, m: usize) -> Self {
        Self { zeta: vec![C64::new(0.0, 0.0); n], x: vec![0.0; m] }
    }

    pub fn is_finite(&self) -> bool {
        self.zeta.iter().all(|z| z.is_finite()) && self.x.iter().all(|v| v.is_finite())
    }
}

/// Element (ζ, z) of Cⁿ × Cᵐ.
#[derive(Debug, Clone, PartialEq)]
pub struct AmbientPoint {
    pub zeta: Vec<C64>,
    pub z: Vec<C64>,
}

impl AmbientPoint {
    pub fn new(zeta: Vec<C64>, z: Vec<C64>) -> Self {
        Self { zeta, z }
    }
}

/// Group product. The central part is `x + x' + 2 Im Φ(ζ', ζ)`; with the
/// sesquilinear slot order used here this is the law under which left
/// translations of the ambient space act holomorphically.
pub fn multiply(model: &QuadraticModel, p: &GroupPoint, q: &GroupPoint) -> Result<GroupPoint> {
    model.check_point(&p.zeta, p.x.len())?;
    model.check_point(&q.zeta, q.x.len())?;
    let cross = model.phi(&q.zeta, &p.zeta);
    Ok(GroupPoint {
        zeta: p.zeta.iter().zip(&q.zeta).map(|(a, b)| a + b).collect(),
        x: (0..model.m).map(|k| p.x[k] + q.x[k] + 2.0 * cross[k].im).collect(),
    })
}

pub fn inverse(model: &QuadraticModel, p: &GroupPoint) -> Result<GroupPoint> {
    model.check_point(&p.zeta, p.x.len())?;
    Ok(GroupPoint { zeta: p.zeta.iter().map(|z| -z).collect(), x: p.x.iter().map(|v| -v).collect() })
}

/// Group commutator p q p⁻¹ q⁻¹.
pub fn commutator(model: &QuadraticModel, p: &GroupPoint, q: &GroupPoint) -> Result<GroupPoint> {
    let pq = multiply(model, p, q)?;
    let pqp = multiply(model, &pq, &inverse(model, p)?)?;
    multiply(model, &pqp, &inverse(model, q)?)
}

/// ρ(ζ, z) = Im z − Φ(ζ).
pub fn rho(model: &QuadraticModel, a: &AmbientPoint) -> Result<Vec<f64>> {
    model.check_point(&a.zeta, a.z.len())?;
    let p = model.phi_diag(&a.zeta);
    Ok(a.z.iter().zip(p).map(|(z, v)| z.im - v).collect())
}

/// The manifold point (ζ, x + iΦ(ζ)) over (ζ, x).
pub fn embed(model: &QuadraticModel, p: &GroupPoint) -> AmbientPoint {
    let ph = model.phi_diag(&p.zeta);
    AmbientPoint { zeta: p.zeta.clone(), z: p.x.iter().zip(ph).map(|(x, v)| C64::new(*x, v)).collect() }
}

/// Orthonormal basis (columns) of the common kernel of the A_k, by singular
/// value thresholding at 1e-10 relative to the largest singular value.
pub fn radical(model: &QuadraticModel) -> CMat {
    let n = model.n;
    let rows = (model.m * n).max(n);
    let mut stacked = CMat::zeros(rows, n);
    for (k, a) in model.coeffs.iter().enumerate() {
        stacked.view_mut((k * n, 0), (n, n)).copy_from(a);
    }
    null_space(&stacked, 1e-10)
}

/// Orthonormal basis of the null space of a matrix with at least as many rows as columns.
pub(crate) fn null_space(a: &CMat, rel: f64) -> CMat {
    let n = a.ncols();
    if n == 0 {
        return CMat::zeros(0, 0);
    }
    let mut padded = a.clone();
    if padded.nrows() < n {
        padded = padded.resize_vertically(n, C64::new(0.0, 0.0));
    }
    let svd = padded.svd(false, true);
    let vt = svd.v_t.expect("svd without V");
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let cols: Vec<usize> = (0..n).filter(|&i| svd.singular_values[i] <= rel * smax || smax == 0.0).collect();
    let mut out = CMat::zeros(n, cols.len());
    for (j, &i) in cols.iter().enumerate() {
        for r in 0..n {
            out[(r, j)] = vt[(i, r)].conj();
        }
    }
    out
}

pub type BoundaryEval = Arc<dyn Fn(&[C64], &[f64]) -> C64 + Send + Sync>;
pub type AmbientEval = Arc<dyn Fn(&[C64], &[C64]) -> C64 + Send + Sync>;

/// Uniform box grid: every real coordinate of E gets `ne` equispaced nodes on
/// [-le, le], every coordinate of F gets `nf` nodes on [-lf, lf].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub le: f64,
    pub lf: f64,
    pub ne: usize,
    pub nf: usize,
}

impl GridSpec {
    pub fn new(le: f64, lf: f64, ne: usize, nf: usize) -> Result<Self> {
        if !(le > 0.0 && lf > 0.0 && ne > 1 && nf > 1) {
            return Err(Error::Contract("grid spec must be strictly positive".into()));
        }
        Ok(Self { le, lf, ne, nf })
    }

    pub fn e_step(&self) -> f64 {
        2.0 * self.le / (self.ne - 1) as f64
    }

    pub fn f_step(&self) -> f64 {
        2.0 * self.lf / (self.nf - 1) as f64
    }

    /// All ζ nodes with trapezoid weights (Lebesgue measure on Cⁿ = R²ⁿ).
    pub fn zeta_nodes(&self, n: usize) -> (Vec<Vec<C64>>, Vec<f64>) {
        let r = trapezoid(self.le, self.ne);
        let rules: Vec<_> = (0..2 * n).map(|_| &r).collect();
        let (pts, w) = crate::quadrature::tensor(&rules);
        let z = pts.into_iter().map(|p| (0..n).map(|j| C64::new(p[2 * j], p[2 * j + 1])).collect()).collect();
        (z, w)
    }

    /// All x nodes with trapezoid weights.
    pub fn x_nodes(&self, m: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
        let r = trapezoid(self.lf, self.nf);
        let rules: Vec<_> = (0..m).map(|_| &r).collect();
        crate::quadrature::tensor(&rules)
    }
}

/// A function on N given by a closed-form evaluator, with the box grid on
/// which it is integrated and optional cached values on that grid
/// (ζ-major, x-minor order).
#[derive(Clone)]
pub struct SampledFunction {
    n: usize,
    m: usize,
    eval: BoundaryEval,
    pub grid: GridSpec,
    pub cache: Option<Arc<Vec<C64>>>,
}

impl fmt::Debug for SampledFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SampledFunction(n={}, m={}, grid={:?}, cached={})", self.n, self.m, self.grid, self.cache.is_some())
    }
}

impl SampledFunction {
    pub fn new(n: usize, m: usize, grid: GridSpec, eval: BoundaryEval) -> Self {
        Self { n, m, eval, grid, cache: None }
    }

    pub fn from_fn<F>(n: usize, m: usize, grid: GridSpec, f: F) -> Self
    where
        F: Fn(&[C64], &[f64]) -> C64 + Send + Sync + 'static,
    {
        Self::new(n, m, grid, Arc::new(f))
    }

    pub fn zero(n: usize, m: usize, grid: GridSpec) -> Self {
        Self::from_fn(n, m, grid, |_, _| C64::new(0.0, 0.0))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn evaluator(&self) -> BoundaryEval {
        self.eval.clone()
    }

    pub fn eval(&self, zeta: &[C64], x: &[f64]) -> C64 {
        (self.eval)(zeta, x)
    }

    pub fn at(&self, p: &GroupPoint) -> Result<C64> {
        check_dim(self.n, p.zeta.len())?;
        check_dim(self.m, p.x.len())?;
        let v = (self.eval)(&p.zeta, &p.x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Evaluation(format!("non-finite value at {p:?}")))
        }
    }

    /// Values on the grid, from the cache when present.
    pub fn grid_values(&self) -> Result<Arc<Vec<C64>>> {
        if let Some(c) = &self.cache {
            return Ok(c.clone());
        }
        let (zs, _) = self.grid.zeta_nodes(self.n);
        let (xs, _) = self.grid.x_nodes(self.m);
        let rows: Vec<Result<Vec<C64>>> = zs
            .par_iter()
            .map(|z| {
                xs.iter()
                    .map(|x| {
                        let v = (self.eval)(z, x);
                        if v.is_finite() {
                            Ok(v)
                        } else {
                            Err(Error::Evaluation(format!("non-finite value at zeta={z:?}, x={x:?}")))
                        }
                    })
                    .collect()
            })
            .collect();
        let mut out = Vec::with_capacity(zs.len() * xs.len());
        for r in rows {
            out.extend(r?);
        }
        Ok(Arc::new(out))
    }

    pub fn with_cache(mut self, values: Vec<C64>) -> Self {
        self.cache = Some(Arc::new(values));
        self
    }
}

/// Slice f_h(ζ, x) = f(ζ, x + iΦ(ζ) + ih) of an ambient function.
pub fn slice(model: &QuadraticModel, f: AmbientEval, h: &[f64], grid: GridSpec) -> Result<SampledFunction> {
    check_dim(model.m(), h.len())?;
    let model2 = model.clone();
    let h = h.to_vec();
    Ok(SampledFunction::from_fn(model.n(), model.m(), grid, move |zeta, x| {
        let ph = model2.phi_diag(zeta);
        let z: Vec<C64> = (0..x.len()).map(|k| C64::new(x[k], ph[k] + h[k])).collect();
        f(zeta, &z)
    }))
}

/// Central difference of t ↦ f(p·(t w, 0)) at t = 0.
fn left_derivative(model: &QuadraticModel, f: &SampledFunction, p: &GroupPoint, w: &[C64], h: f64) -> Result<C64> {
    let shift = model.phi(w, &p.zeta);
    let at = |t: f64| -> Result<C64> {
        let zeta: Vec<C64> = p.zeta.iter().zip(w).map(|(z, d)| z + d * t).collect();
        let x: Vec<f64> = p.x.iter().zip(&shift).map(|(x, s)| x + 2.0 * t * s.im).collect();
        f.at(&GroupPoint { zeta, x })
    };
    Ok((at(h)? - at(-h)?) / (2.0 * h))
}

/// Z_v f(p), or Z̄_v f(p) when `conjugate` is set, by central differences of
/// step h along the left-invariant directions v and iv:
/// Z_v = ½(X_v − i X_{iv}), Z̄_v = ½(X_v + i X_{iv}).
pub fn apply_cr_field(
    model: &QuadraticModel,
    v: &[C64],
    f: &SampledFunction,
    p: &GroupPoint,
    conjugate: bool,
    h: f64,
) -> Result<C64> {
    check_dim(model.n(), v.len())?;
    model.check_point(&p.zeta, p.x.len())?;
    if !(h > 0.0 && h <= 1e-2) {
        return Err(Error::Contract(format!("finite-difference step {h} outside (0, 1e-2]")));
    }
    let iv: Vec<C64> = v.iter().map(|z| z * I).collect();
    let xv = left_derivative(model, f, p, v, h)?;
    let xiv = left_derivative(model, f, p, &iv, h)?;
    Ok(if conjugate { 0.5 * (xv + I * xiv) } else { 0.5 * (xv - I * xiv) })
}

/// Largest |Z̄_{e_j} f| over the given points and the standard basis,
/// divided by the largest |f| over the same points (scale-free residual).
pub fn cr_residual(model: &QuadraticModel, f: &SampledFunction, points: &[GroupPoint], h: f64) -> Result<f64> {
    let n = model.n();
    let mut num: f64 = 0.0;
    let mut den: f64 = 0.0;
    for p in points {
        den = den.max(f.at(p)?.norm());
        for j in 0..n {
            let mut v = vec![C64::new(0.0, 0.0); n];
            v[j] = C64::new(1.0, 0.0);
            num = num.max(apply_cr_field(model, &v, f, p, true, h)?.norm());
        }
    }
    Ok(if den > 0.0 { num / den } else { num })
}

/// Seeded random group points with |ζ| ≤ zr and |x_k| ≤ xr.
pub fn random_points<R: Rng + ?Sized>(n: usize, m: usize, count: usize, zr: f64, xr: f64, rng: &mut R) -> Vec<GroupPoint> {
    (0..count)
        .map(|_| {
            let mut zeta: Vec<C64> = (0..n).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
            let norm = zeta.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            let scale = if norm > 0.0 { zr * rng.gen::<f64>().sqrt() / norm } else { 0.0 };
            zeta.iter_mut().for_each(|z| *z *= scale);
            GroupPoint { zeta, x: (0..m).map(|_| rng.gen_range(-xr..xr)).collect() }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn heisenberg_product_example() {
        let m = QuadraticModel::heisenberg();
        let p = GroupPoint::new(vec![c(1.0, 0.0)], vec![0.0]);
        let q = GroupPoint::new(vec![c(0.0, 1.0)], vec![0.0]);
        let r = multiply(&m, &p, &q).unwrap();
        assert_eq!(r.zeta, vec![c(1.0, 1.0)]);
        assert_eq!(r.x, vec![-2.0]);
    }

    #[test]
    fn identity_and_abelian() {
        let m = QuadraticModel::heisenberg();
        let p = GroupPoint::new(vec![c(0.3, -1.2)], vec![0.7]);
        assert_eq!(multiply(&m, &GroupPoint::identity(1, 1), &p).unwrap(), p);
        let flat = QuadraticModel::diagonal(&[vec![0.0]]).unwrap();
        let r = multiply(&flat, &GroupPoint::new(vec![c(1.0, 0.0)], vec![3.0]), &GroupPoint::new(vec![c(0.0, 1.0)], vec![4.0])).unwrap();
        assert_eq!(r, GroupPoint::new(vec![c(1.0, 1.0)], vec![7.0]));
    }

    #[test]
    fn inverse_examples() {
        let m = QuadraticModel::heisenberg();
        let p = GroupPoint::new(vec![c(1.0, 1.0)], vec![2.0]);
        assert_eq!(inverse(&m, &p).unwrap(), GroupPoint::new(vec![c(-1.0, -1.0)], vec![-2.0]));
        let e = GroupPoint::identity(1, 1);
        assert_eq!(inverse(&m, &e).unwrap().x, vec![0.0]);
        let q = GroupPoint::new(vec![c(1.0, 0.0)], vec![0.0]);
        let r = multiply(&m, &q, &inverse(&m, &q).unwrap()).unwrap();
        assert_eq!(r, GroupPoint::new(vec![c(0.0, 0.0)], vec![0.0]));
    }

    #[test]
    fn commutator_examples() {
        let m = QuadraticModel::heisenberg();
        let p = GroupPoint::new(vec![c(1.0, 0.0)], vec![0.0]);
        let q = GroupPoint::new(vec![c(0.0, 1.0)], vec![0.0]);
        let r = commutator(&m, &p, &q).unwrap();
        assert_abs_diff_eq!(r.x[0], -4.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r.zeta[0].norm(), 0.0, epsilon = 1e-15);
        let q2 = GroupPoint::new(vec![c(1.0, 0.0)], vec![5.0]);
        assert_abs_diff_eq!(commutator(&m, &p, &q2).unwrap().x[0], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let m = QuadraticModel::heisenberg();
        let p = GroupPoint::new(vec![c(1.0, 0.0), c(0.0, 0.0)], vec![0.0]);
        assert!(matches!(multiply(&m, &p, &p), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn rho_examples() {
        let m = QuadraticModel::heisenberg();
        let a = AmbientPoint::new(vec![c(1.0, 0.0)], vec![c(0.0, 2.0)]);
        assert_abs_diff_eq!(rho(&m, &a).unwrap()[0], 1.0, epsilon = 1e-15);
        let p = GroupPoint::new(vec![c(0.4, -0.8)], vec![1.5]);
        assert_eq!(rho(&m, &embed(&m, &p)).unwrap()[0], 0.0);
        let flat = QuadraticModel::diagonal(&[vec![0.0]]).unwrap();
        assert_eq!(rho(&flat, &AmbientPoint::new(vec![c(3.0, 1.0)], vec![c(2.0, -0.5)])).unwrap()[0], -0.5);
    }

    #[test]
    fn radical_examples() {
        assert_eq!(radical(&QuadraticModel::heisenberg()).ncols(), 0);
        assert_eq!(radical(&QuadraticModel::diagonal(&[vec![0.0]]).unwrap()).ncols(), 1);
        let r = radical(&QuadraticModel::diagonal(&[vec![1.0, 0.0]]).unwrap());
        assert_eq!(r.ncols(), 1);
        assert_abs_diff_eq!(r[(0, 0)].norm(), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(r[(1, 0)].norm(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn non_hermitian_rejected() {
        let a = CMat::from_row_slice(1, 1, &[c(0.0, 1.0)]);
        assert!(QuadraticModel::new(1, 1, vec![a]).is_err());
    }

    fn grid() -> GridSpec {
        GridSpec::new(2.0, 2.0, 5, 5).unwrap()
    }

    #[test]
    fn cr_field_on_boundary_exponential() {
        let m = QuadraticModel::heisenberg();
        let f = SampledFunction::from_fn(1, 1, grid(), |z, x| (I * x[0] - z[0].norm_sqr()).exp());
        for p in [GroupPoint::new(vec![c(0.3, -0.7)], vec![1.1]), GroupPoint::new(vec![c(-1.0, 0.2)], vec![-0.4])] {
            let r = apply_cr_field(&m, &[c(1.0, 0.0)], &f, &p, true, 1e-4).unwrap();
            assert!(r.norm() < 1e-6, "{r}");
        }
    }

    #[test]
    fn cr_field_trivial_cases() {
        let m = QuadraticModel::heisenberg();
        let one = SampledFunction::from_fn(1, 1, grid(), |_, _| c(1.0, 0.0));
        let p = GroupPoint::new(vec![c(0.2, 0.1)], vec![0.3]);
        assert!(apply_cr_field(&m, &[c(1.0, 0.0)], &one, &p, false, 1e-4).unwrap().norm() < 1e-12);
        let flat = QuadraticModel::diagonal(&[vec![0.0]]).unwrap();
        let id = SampledFunction::from_fn(1, 1, grid(), |z, _| z[0]);
        let r = apply_cr_field(&flat, &[c(1.0, 0.0)], &id, &p, false, 1e-4).unwrap();
        assert!((r - c(1.0, 0.0)).norm() < 1e-8);
        assert!(apply_cr_field(&m, &[c(1.0, 0.0)], &one, &p, false, 0.5).is_err());
    }

    #[test]
    fn slice_examples() {
        let m = QuadraticModel::heisenberg();
        let f: AmbientEval = Arc::new(|_, z: &[C64]| (I * z[0]).exp());
        let s = slice(&m, f, &[0.5], grid()).unwrap();
        let (zt, x) = (c(0.4, 0.3), 0.9);
        let expect = (I * x - zt.norm_sqr() - 0.5).exp();
        assert!((s.eval(&[zt], &[x]) - expect).norm() < 1e-14);
        let flat = QuadraticModel::diagonal(&[vec![0.0]]).unwrap();
        let g: AmbientEval = Arc::new(|_, z: &[C64]| z[0]);
        let s = slice(&flat, g, &[0.25], grid()).unwrap();
        assert_eq!(s.eval(&[zt], &[x]), c(0.9, 0.25));
    }
}
