//! Polytopes and polyhedral cones in F′: supporting functions, polars,
//! boundary distance, erosion, projections and the cone inequality.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{check_dim, Error, Result};
use crate::model::QuadraticModel;

const TOL: f64 = 1e-12;

/// K = conv(vertices), or the closed conical hull of the vertices when
/// `is_cone` is set. An empty vertex list without the cone flag is the
/// empty body.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexBody {
    dim: usize,
    vertices: Vec<Vec<f64>>,
    is_cone: bool,
}

/// Half-space description `a_i·λ ≤ b_i` (with |a_i| = 1) plus the affine
/// hull equalities `c_j·λ = d_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct HRep {
    pub normals: Vec<Vec<f64>>,
    pub offsets: Vec<f64>,
    pub eq_normals: Vec<Vec<f64>>,
    pub eq_offsets: Vec<f64>,
}

impl HRep {
    pub fn contains(&self, p: &[f64], tol: f64) -> bool {
        self.normals.iter().zip(&self.offsets).all(|(a, b)| dot(a, p) <= b + tol)
            && self.eq_normals.iter().zip(&self.eq_offsets).all(|(c, d)| (dot(c, p) - d).abs() <= tol)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Orthonormal bases (columns) of the row space and the null space of `a`.
fn row_and_null(a: &DMatrix<f64>, dim: usize) -> (DMatrix<f64>, DMatrix<f64>) {
    if a.nrows() == 0 {
        return (DMatrix::zeros(dim, 0), DMatrix::identity(dim, dim));
    }
    let mut padded = a.clone();
    if padded.nrows() < dim {
        padded = padded.resize_vertically(dim, 0.0);
    }
    let svd = padded.svd(false, true);
    let vt = svd.v_t.expect("svd without V");
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let thr = 1e-10 * smax.max(f64::MIN_POSITIVE);
    let (mut row, mut null) = (Vec::new(), Vec::new());
    for i in 0..dim {
        let v: Vec<f64> = (0..dim).map(|c| vt[(i, c)]).collect();
        if smax > 0.0 && svd.singular_values[i] > thr {
            row.push(v);
        } else {
            null.push(v);
        }
    }
    let to_mat = |vs: &[Vec<f64>]| DMatrix::from_fn(dim, vs.len(), |r, c| vs[c][r]);
    (to_mat(&row), to_mat(&null))
}

fn rows_matrix(rows: &[Vec<f64>], dim: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), dim, |r, c| rows[r][c])
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

fn push_unique(list: &mut Vec<Vec<f64>>, v: Vec<f64>, tol: f64) -> bool {
    if list.iter().any(|w| sub(w, &v).iter().all(|d| d.abs() <= tol)) {
        false
    } else {
        list.push(v);
        true
    }
}

/// Extreme rays of the polyhedral cone {u : g·u ≥ 0 for every row g}.
fn cone_rays(rows: &[Vec<f64>], dim: usize) -> Vec<Vec<f64>> {
    let g = rows_matrix(rows, dim);
    let (range, lineality) = row_and_null(&g, dim);
    let rho = range.ncols();
    let mut rays = Vec::new();
    for j in 0..lineality.ncols() {
        let l: Vec<f64> = lineality.column(j).iter().cloned().collect();
        rays.push(l.iter().map(|x| -x).collect());
        rays.push(l);
    }
    if rho == 0 {
        return rays;
    }
    let feasible = |u: &[f64]| rows.iter().all(|r| dot(r, u) >= -1e-10 * norm(r));
    for s in subsets(rows.len(), rho - 1) {
        let sub_rows: Vec<Vec<f64>> = s.iter().map(|&i| rows[i].clone()).collect();
        let sr = rows_matrix(&sub_rows, dim) * &range;
        let (_, null) = row_and_null(&sr, rho);
        if null.ncols() != 1 {
            continue;
        }
        let u = &range * null.column(0);
        let u: Vec<f64> = u.iter().cloned().collect();
        for sign in [1.0, -1.0] {
            let v: Vec<f64> = u.iter().map(|x| sign * x).collect();
            if feasible(&v) {
                push_unique(&mut rays, v, 1e-9);
            }
        }
    }
    rays
}

impl ConvexBody {
    pub fn new(dim: usize, vertices: Vec<Vec<f64>>, is_cone: bool) -> Result<Self> {
        for v in &vertices {
            check_dim(dim, v.len())?;
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::Contract("non-finite vertex".into()));
            }
        }
        Ok(Self { dim, vertices, is_cone })
    }

    pub fn empty(dim: usize) -> Self {
        Self { dim, vertices: Vec::new(), is_cone: false }
    }

    /// Axis-aligned box with the given corner ranges.
    pub fn cuboid(ranges: &[(f64, f64)]) -> Self {
        let dim = ranges.len();
        let mut verts = vec![Vec::new()];
        for &(a, b) in ranges {
            let mut next = Vec::new();
            for v in &verts {
                for x in if a == b { vec![a] } else { vec![a, b] } {
                    let mut w: Vec<f64> = v.clone();
                    w.push(x);
                    next.push(w);
                }
            }
            verts = next;
        }
        Self { dim, vertices: verts, is_cone: false }
    }

    pub fn cone(dim: usize, generators: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(dim, generators, true)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.vertices
    }

    pub fn is_cone(&self) -> bool {
        self.is_cone
    }

    pub fn is_empty(&self) -> bool {
        !self.is_cone && self.vertices.is_empty()
    }

    /// Coordinate-wise bounding box of a polytope.
    pub fn bounding_box(&self) -> Option<Vec<(f64, f64)>> {
        if self.is_cone || self.vertices.is_empty() {
            return None;
        }
        Some(
            (0..self.dim)
                .map(|k| {
                    let it = self.vertices.iter().map(|v| v[k]);
                    (it.clone().fold(f64::INFINITY, f64::min), it.fold(f64::NEG_INFINITY, f64::max))
                })
                .collect(),
        )
    }

    /// Dimension of the affine hull (of the linear hull for cones).
    pub fn affine_dim(&self) -> usize {
        if self.vertices.is_empty() {
            return 0;
        }
        let rows: Vec<Vec<f64>> = if self.is_cone {
            self.vertices.clone()
        } else {
            self.vertices.iter().map(|v| sub(v, &self.vertices[0])).collect()
        };
        row_and_null(&rows_matrix(&rows, self.dim), self.dim).0.ncols()
    }

    /// Unit inward normals n_i with K = {λ : n_i·λ ≥ 0} for a cone.
    pub fn cone_normals(&self) -> Result<Vec<Vec<f64>>> {
        if !self.is_cone {
            return Err(Error::Contract("cone_normals on a polytope".into()));
        }
        if self.dim > 3 {
            return Err(Error::Unsupported("explicit cone facets need m ≤ 3".into()));
        }
        Ok(cone_rays(&self.vertices, self.dim)
            .into_iter()
            .map(|r| {
                let s = norm(&r);
                r.iter().map(|x| x / s).collect()
            })
            .collect())
    }

    /// Half-space description of a polytope by facet enumeration.
    pub fn hrep(&self) -> Result<HRep> {
        if self.is_cone {
            let normals = self.cone_normals()?;
            return Ok(HRep {
                normals: normals.iter().map(|n| n.iter().map(|x| -x).collect()).collect(),
                offsets: vec![0.0; normals.len()],
                eq_normals: Vec::new(),
                eq_offsets: Vec::new(),
            });
        }
        if self.vertices.is_empty() {
            return Err(Error::Contract("H-representation of the empty body".into()));
        }
        let v0 = &self.vertices[0];
        let diffs: Vec<Vec<f64>> = self.vertices.iter().map(|v| sub(v, v0)).collect();
        let (span, comp) = row_and_null(&rows_matrix(&diffs, self.dim), self.dim);
        let r = span.ncols();
        let mut h = HRep { normals: vec![], offsets: vec![], eq_normals: vec![], eq_offsets: vec![] };
        for j in 0..comp.ncols() {
            let c: Vec<f64> = comp.column(j).iter().cloned().collect();
            h.eq_offsets.push(dot(&c, v0));
            h.eq_normals.push(c);
        }
        if r == 0 {
            return Ok(h);
        }
        let ys: Vec<Vec<f64>> = diffs
            .iter()
            .map(|d| (0..r).map(|k| dot(span.column(k).as_slice(), d)).collect())
            .collect();
        let scale = ys.iter().map(|y| norm(y)).fold(1.0, f64::max);
        let mut facets: Vec<Vec<f64>> = Vec::new();
        for s in subsets(ys.len(), r) {
            let base = &ys[s[0]];
            let rows: Vec<Vec<f64>> = s[1..].iter().map(|&i| sub(&ys[i], base)).collect();
            let (_, null) = row_and_null(&rows_matrix(&rows, r), r);
            if null.ncols() != 1 {
                continue;
            }
            let a: Vec<f64> = null.column(0).iter().cloned().collect();
            let b = dot(&a, base);
            let vals: Vec<f64> = ys.iter().map(|y| dot(&a, y) - b).collect();
            let tol = 1e-10 * scale;
            let sign = if vals.iter().all(|v| *v <= tol) {
                1.0
            } else if vals.iter().all(|v| *v >= -tol) {
                -1.0
            } else {
                continue;
            };
            let a: Vec<f64> = a.iter().map(|x| sign * x).collect();
            if push_unique(&mut facets, a.clone(), 1e-9) {
                let full: Vec<f64> = (0..self.dim).map(|i| (0..r).map(|k| span[(i, k)] * a[k]).sum()).collect();
                h.offsets.push(sign * b + dot(&full, v0));
                h.normals.push(full);
            }
        }
        Ok(h)
    }

    pub fn contains(&self, p: &[f64]) -> Result<bool> {
        check_dim(self.dim, p.len())?;
        if self.is_empty() {
            return Ok(false);
        }
        let scale = 1.0 + norm(p) + self.vertices.iter().map(|v| norm(v)).fold(0.0, f64::max);
        Ok(self.hrep()?.contains(p, 1e-12 * scale))
    }
}

/// H_K(v) = sup_{λ∈K} (−⟨λ, v⟩); −∞ for the empty body.
pub fn support_function(k: &ConvexBody, v: &[f64]) -> f64 {
    if k.is_empty() {
        return f64::NEG_INFINITY;
    }
    if k.is_cone {
        if k.vertices.iter().all(|g| -dot(g, v) <= 0.0) {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        k.vertices.iter().map(|l| -dot(l, v)).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// The polar A° = {λ : ⟨λ, v⟩ ≥ −1 ∀v ∈ A}, or {λ : ⟨λ, v⟩ ≥ 0} for cones.
#[derive(Debug, Clone, PartialEq)]
pub struct Polar {
    dim: usize,
    generators: Vec<Vec<f64>>,
    is_cone: bool,
}

impl Polar {
    pub fn contains(&self, lambda: &[f64]) -> bool {
        let bound = if self.is_cone { 0.0 } else { -1.0 };
        self.generators.iter().all(|v| dot(lambda, v) >= bound - TOL * (1.0 + norm(v) * norm(lambda)))
    }

    /// Extreme rays of a polar cone (m ≤ 3).
    pub fn cone_generators(&self) -> Result<Vec<Vec<f64>>> {
        if !self.is_cone {
            return Err(Error::Contract("generator list requested for the polar of a polytope".into()));
        }
        if self.dim > 3 {
            return Err(Error::Unsupported("explicit polar generators need m ≤ 3".into()));
        }
        Ok(cone_rays(&self.generators, self.dim))
    }

    /// Vertices of a bounded polar of a polytope (m ≤ 3), by vertex enumeration
    /// of {λ : ⟨λ, v⟩ ≥ −1}.
    pub fn vertices(&self) -> Result<Vec<Vec<f64>>> {
        if self.is_cone {
            return Err(Error::Contract("vertices requested for a polar cone".into()));
        }
        if self.dim > 3 {
            return Err(Error::Unsupported("polar vertex enumeration needs m ≤ 3".into()));
        }
        let normals: Vec<Vec<f64>> = self.generators.iter().map(|v| v.iter().map(|x| -x).collect()).collect();
        let offsets = vec![1.0; normals.len()];
        Ok(enumerate_vertices(&normals, &offsets, self.dim))
    }
}

pub fn polar(generators: &[Vec<f64>], dim: usize, is_cone: bool) -> Result<Polar> {
    for g in generators {
        check_dim(dim, g.len())?;
    }
    Ok(Polar { dim, generators: generators.to_vec(), is_cone })
}

/// Vertices of {λ : a_i·λ ≤ b_i} by solving every dim-subset of constraints.
fn enumerate_vertices(normals: &[Vec<f64>], offsets: &[f64], dim: usize) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::new();
    let scale = offsets.iter().map(|b| b.abs()).fold(1.0, f64::max);
    for s in subsets(normals.len(), dim) {
        let a = DMatrix::from_fn(dim, dim, |r, c| normals[s[r]][c]);
        let b = DVector::from_iterator(dim, s.iter().map(|&i| offsets[i]));
        let Some(inv) = a.clone().try_inverse() else { continue };
        if a.clone().svd(false, false).singular_values.min() < 1e-12 {
            continue;
        }
        let x: Vec<f64> = (inv * b).iter().cloned().collect();
        if normals.iter().zip(offsets).all(|(n, o)| dot(n, &x) <= o + 1e-10 * scale) {
            push_unique(&mut out, x, 1e-9 * scale);
        }
    }
    out
}

/// Euclidean distance from λ to ∂K for λ ∈ K, and 0 for λ ∉ K or when K has
/// empty interior.
pub fn boundary_distance(k: &ConvexBody, lambda: &[f64]) -> Result<f64> {
    check_dim(k.dim, lambda.len())?;
    if k.is_empty() || k.affine_dim() < k.dim {
        return Ok(0.0);
    }
    let h = k.hrep()?;
    if !h.contains(lambda, 1e-12 * (1.0 + norm(lambda))) {
        return Ok(0.0);
    }
    Ok(h.normals
        .iter()
        .zip(&h.offsets)
        .map(|(a, b)| (b - dot(a, lambda)) / norm(a))
        .fold(f64::INFINITY, f64::min)
        .max(0.0))
}

/// Inner parallel body {λ ∈ K : B(λ, ε) ⊆ K} of a polytope, by inward facet offset.
pub fn erode(k: &ConvexBody, eps: f64) -> Result<ConvexBody> {
    if k.is_cone {
        return Err(Error::Contract("erosion is defined here for polytopes only".into()));
    }
    if !(eps > 0.0) {
        return Err(Error::Contract("erosion radius must be positive".into()));
    }
    if k.is_empty() || k.affine_dim() < k.dim {
        return Ok(ConvexBody::empty(k.dim));
    }
    let h = k.hrep()?;
    let offsets: Vec<f64> = h.normals.iter().zip(&h.offsets).map(|(a, b)| b - eps * norm(a)).collect();
    let verts = enumerate_vertices(&h.normals, &offsets, k.dim);
    ConvexBody::new(k.dim, verts, false)
}

/// Vertex-wise orthogonal projection onto span of the orthonormal columns of `basis`,
/// expressed in the coordinates of that basis.
pub fn project_body(k: &ConvexBody, basis: &DMatrix<f64>) -> Result<ConvexBody> {
    check_dim(k.dim, basis.nrows())?;
    let gram = basis.transpose() * basis;
    let dev = (&gram - DMatrix::identity(gram.nrows(), gram.ncols())).abs().max();
    if dev > 1e-12 {
        return Err(Error::Contract(format!("projection basis is not orthonormal (deviation {dev:e})")));
    }
    let verts = k
        .vertices
        .iter()
        .map(|v| (0..basis.ncols()).map(|j| dot(basis.column(j).as_slice(), v)).collect())
        .collect();
    ConvexBody::new(basis.ncols(), verts, k.is_cone)
}

fn sample_on_sphere_in<R: Rng + ?Sized>(normals: &[Vec<f64>], gens: &[Vec<f64>], dim: usize, rng: &mut R) -> Vec<f64> {
    for _ in 0..10_000 {
        let g: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        let s = norm(&g);
        if s == 0.0 {
            continue;
        }
        let u: Vec<f64> = g.iter().map(|x| x / s).collect();
        if normals.iter().all(|n| dot(n, &u) >= 0.0) {
            return u;
        }
    }
    let mut u = vec![0.0; dim];
    for g in gens {
        let t: f64 = rng.gen();
        for (a, b) in u.iter_mut().zip(g) {
            *a += t * b;
        }
    }
    let s = norm(&u);
    u.iter().map(|x| x / s).collect()
}

/// Empirical infimum of ⟨λ,h⟩ / (|h| d(λ, ∂K)) over `samples` random pairs
/// λ ∈ K ∩ S, h ∈ K° ∩ S.
pub fn cone_inequality_constant<R: Rng + ?Sized>(k: &ConvexBody, samples: usize, rng: &mut R) -> Result<f64> {
    if !k.is_cone {
        return Err(Error::Contract("cone constant needs a cone".into()));
    }
    if k.affine_dim() < k.dim {
        return Err(Error::Unsupported("cone with empty interior".into()));
    }
    let k_normals = k.cone_normals()?;
    if k_normals.is_empty() {
        return Err(Error::Contract("the cone is the whole space".into()));
    }
    let pol = polar(&k.vertices, k.dim, true)?;
    let pol_gens = pol.cone_generators()?;
    let pol_normals: Vec<Vec<f64>> = k.vertices.iter().map(|g| {
        let s = norm(g);
        g.iter().map(|x| x / s).collect()
    }).collect();
    let mut best = f64::INFINITY;
    for _ in 0..samples {
        let l = sample_on_sphere_in(&k_normals, &k.vertices, k.dim, rng);
        let h = sample_on_sphere_in(&pol_normals, &pol_gens, k.dim, rng);
        let d = boundary_distance(k, &l)?;
        if d > 1e-14 {
            best = best.min(dot(&l, &h) / (norm(&h) * d));
        }
    }
    Ok(best)
}

fn min_eig_and_scale(model: &QuadraticModel, lambda: &[f64]) -> Result<(f64, f64)> {
    check_dim(model.m(), lambda.len())?;
    let a = model.a_lambda(lambda);
    if a.nrows() == 0 {
        return Ok((f64::INFINITY, 0.0));
    }
    let ev = a.symmetric_eigenvalues();
    let min = ev.iter().cloned().fold(f64::INFINITY, f64::min);
    let scale = ev.iter().map(|e| e.abs()).fold(0.0, f64::max);
    Ok((min, scale))
}

/// λ ∈ Λ₊: A(λ) positive definite beyond 1e-10·‖A(λ)‖.
pub fn lambda_plus_contains(model: &QuadraticModel, lambda: &[f64]) -> Result<bool> {
    let (min, scale) = min_eig_and_scale(model, lambda)?;
    Ok(min > 1e-10 * scale && scale > 0.0)
}

/// λ ∈ P: A(λ) positive semidefinite up to 1e-10·‖A(λ)‖.
pub fn p_contains(model: &QuadraticModel, lambda: &[f64]) -> Result<bool> {
    let (min, scale) = min_eig_and_scale(model, lambda)?;
    Ok(min >= -1e-10 * scale)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn support_function_examples() {
        let k = ConvexBody::new(1, vec![vec![0.0], vec![1.0]], false).unwrap();
        assert_eq!(support_function(&k, &[-2.0]), 2.0);
        assert_eq!(support_function(&k, &[0.0]), 0.0);
        let c = ConvexBody::cone(1, vec![vec![1.0]]).unwrap();
        assert_eq!(support_function(&c, &[1.0]), 0.0);
        assert_eq!(support_function(&c, &[-1.0]), f64::INFINITY);
        assert_eq!(support_function(&ConvexBody::empty(2), &[1.0, 0.0]), f64::NEG_INFINITY);
    }

    #[test]
    fn polar_examples() {
        let p = polar(&[vec![0.0]], 1, false).unwrap();
        assert!(p.contains(&[-1e6]) && p.contains(&[1e6]));
        let ray = polar(&[vec![1.0]], 1, true).unwrap();
        assert!(ray.contains(&[0.5]) && !ray.contains(&[-0.5]));
        let g = ray.cone_generators().unwrap();
        assert_eq!(g.len(), 1);
        assert!(g[0][0] > 0.0);
        let big = polar(&[vec![1.0, 0.0, 0.0, 0.0]], 4, true).unwrap();
        assert!(matches!(big.cone_generators(), Err(Error::Unsupported(_))));
    }

    #[test]
    fn boundary_distance_examples() {
        let k = ConvexBody::cuboid(&[(1.0, 2.0)]);
        assert_abs_diff_eq!(boundary_distance(&k, &[1.25]).unwrap(), 0.25, epsilon = 1e-12);
        assert_eq!(boundary_distance(&k, &[2.0]).unwrap(), 0.0);
        assert_eq!(boundary_distance(&k, &[3.0]).unwrap(), 0.0);
        let sq = ConvexBody::cuboid(&[(0.0, 1.0), (0.0, 1.0)]);
        assert_abs_diff_eq!(boundary_distance(&sq, &[0.3, 0.6]).unwrap(), 0.3, epsilon = 1e-12);
    }

    #[test]
    fn erosion_examples() {
        let k = ConvexBody::cuboid(&[(1.0, 2.0)]);
        let e = erode(&k, 0.5).unwrap();
        assert_eq!(e.vertices().len(), 1);
        assert_abs_diff_eq!(e.vertices()[0][0], 1.5, epsilon = 1e-12);
        assert!(erode(&k, 0.6).unwrap().is_empty());
        let sq = ConvexBody::cuboid(&[(0.0, 1.0), (0.0, 1.0)]);
        let e = erode(&sq, 0.25).unwrap();
        let bb = e.bounding_box().unwrap();
        for (lo, hi) in bb {
            assert_abs_diff_eq!(lo, 0.25, epsilon = 1e-12);
            assert_abs_diff_eq!(hi, 0.75, epsilon = 1e-12);
        }
        assert_eq!(e.vertices().len(), 4);
    }

    #[test]
    fn erosion_increases_to_interior() {
        let k = ConvexBody::cuboid(&[(1.0, 2.0)]);
        for eps in [0.1, 0.01, 0.001] {
            let e = erode(&k, eps).unwrap();
            assert!(e.contains(&[1.0 + 2.0 * eps]).unwrap());
            assert!(!e.contains(&[1.0 + 0.5 * eps]).unwrap());
        }
    }

    #[test]
    fn cone_constant_half_line() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let c = ConvexBody::cone(1, vec![vec![1.0]]).unwrap();
        assert_abs_diff_eq!(cone_inequality_constant(&c, 100, &mut rng).unwrap(), 1.0, epsilon = 1e-12);
        let whole = ConvexBody::cone(1, vec![vec![1.0], vec![-1.0]]).unwrap();
        assert!(cone_inequality_constant(&whole, 10, &mut rng).is_err());
    }

    #[test]
    fn projection_examples() {
        let k = ConvexBody::cuboid(&[(1.0, 2.0), (5.0, 6.0)]);
        let e1 = DMatrix::from_column_slice(2, 1, &[1.0, 0.0]);
        let p = project_body(&k, &e1).unwrap();
        assert_eq!(p.bounding_box().unwrap(), vec![(1.0, 2.0)]);
        let id = DMatrix::identity(2, 2);
        assert_eq!(project_body(&k, &id).unwrap().vertices(), k.vertices());
        let pt = ConvexBody::new(2, vec![vec![0.5, -1.0]], false).unwrap();
        assert_eq!(project_body(&pt, &e1).unwrap().vertices(), &[vec![0.5]]);
        let bad = DMatrix::from_column_slice(2, 1, &[1.0, 1.0]);
        assert!(project_body(&k, &bad).is_err());
    }

    #[test]
    fn cone_membership_examples() {
        let h = QuadraticModel::heisenberg();
        assert!(lambda_plus_contains(&h, &[1.0]).unwrap() && p_contains(&h, &[1.0]).unwrap());
        assert!(!lambda_plus_contains(&h, &[0.0]).unwrap() && p_contains(&h, &[0.0]).unwrap());
        let d = QuadraticModel::diagonal(&[vec![1.0, 0.0]]).unwrap();
        for l in [-2.0, -0.5, 0.0, 0.5, 3.0] {
            assert!(!lambda_plus_contains(&d, &[l]).unwrap());
            assert_eq!(p_contains(&d, &[l]).unwrap(), l >= 0.0);
        }
    }
}
