//! Quadrature rules and deterministic summation.

use std::collections::HashMap;
use std::num::NonZeroUsize;
use std::sync::{Arc, Mutex};

use gauss_quad::legendre::GaussLegendre;
use num_complex::Complex64;
use once_cell::sync::Lazy;

/// Nodes and weights of a one-dimensional rule.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Affine map of a rule on [-1, 1] to [a, b].
    pub fn mapped(&self, a: f64, b: f64) -> Rule {
        let c = 0.5 * (a + b);
        let r = 0.5 * (b - a);
        Rule {
            nodes: self.nodes.iter().map(|x| c + r * x).collect(),
            weights: self.weights.iter().map(|w| r * w).collect(),
        }
    }
}

static LEGENDRE: Lazy<Mutex<HashMap<usize, Arc<Rule>>>> = Lazy::new(|| Mutex::new(HashMap::new()));
static HERMITE: Lazy<Mutex<HashMap<usize, Arc<Rule>>>> = Lazy::new(|| Mutex::new(HashMap::new()));

fn from_pairs(pairs: &[(f64, f64)]) -> Rule {
    let mut v: Vec<(f64, f64)> = pairs.to_vec();
    v.sort_by(|a, b| a.0.total_cmp(&b.0));
    Rule {
        nodes: v.iter().map(|p| p.0).collect(),
        weights: v.iter().map(|p| p.1).collect(),
    }
}

/// Gauss–Legendre rule with `n` nodes on [-1, 1], cached.
pub fn gauss_legendre(n: usize) -> Arc<Rule> {
    let n = n.max(1);
    let mut cache = LEGENDRE.lock().expect("quadrature cache poisoned");
    cache
        .entry(n)
        .or_insert_with(|| {
            let q = GaussLegendre::new(NonZeroUsize::new(n).unwrap());
            Arc::new(from_pairs(q.as_node_weight_pairs()))
        })
        .clone()
}

/// Gauss–Hermite rule with `n` nodes for the weight e^{-x²}, cached.
pub fn gauss_hermite(n: usize) -> Arc<Rule> {
    let n = n.max(1);
    let mut cache = HERMITE.lock().expect("quadrature cache poisoned");
    cache
        .entry(n)
        .or_insert_with(|| {
            Arc::new(hermite_rule(n))
        })
        .clone()
}

/// Gauss–Hermite nodes from the Jacobi matrix eigenvalues, each polished
/// by Newton iteration on the orthonormal Hermite recurrence, with weights
/// 2/p′ₙ(x)² taken from the polished recurrence.
fn hermite_rule(n: usize) -> Rule {
    let jacobi = nalgebra::DMatrix::from_fn(n, n, |i, j| if i.abs_diff(j) == 1 { (i.max(j) as f64 / 2.0).sqrt() } else { 0.0 });
    let mut seeds: Vec<f64> = jacobi.symmetric_eigenvalues().iter().cloned().collect();
    seeds.sort_by(f64::total_cmp);
    let nf = n as f64;
    let pim4 = std::f64::consts::PI.powf(-0.25);
    let eval = |z: f64| {
        let (mut p1, mut p2) = (pim4, 0.0);
        for j in 1..=n {
            let p3 = p2;
            p2 = p1;
            let jf = j as f64;
            p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
        }
        (p1, (2.0 * nf).sqrt() * p2)
    };
    let mut pairs = Vec::with_capacity(n);
    for (i, &seed) in seeds.iter().enumerate() {
        if n % 2 == 1 && i == n / 2 {
            let (_, pp) = eval(0.0);
            pairs.push((0.0, 2.0 / (pp * pp)));
            continue;
        }
        let mut z = seed;
        for _ in 0..8 {
            let (p, pp) = eval(z);
            let dz = p / pp;
            z -= dz;
            if dz.abs() <= 1e-15 * z.abs().max(1.0) {
                break;
            }
        }
        let (_, pp) = eval(z);
        pairs.push((z, 2.0 / (pp * pp)));
    }
    // Symmetrize: the rule is exactly even.
    for i in 0..n / 2 {
        let (a, b) = (pairs[i], pairs[n - 1 - i]);
        let x = 0.5 * (b.0 - a.0);
        let w = 0.5 * (a.1 + b.1);
        pairs[i] = (-x, w);
        pairs[n - 1 - i] = (x, w);
    }
    from_pairs(&pairs)
}

/// Composite trapezoid rule with `n` equispaced nodes on [-l, l] (endpoints half weight).
pub fn trapezoid(l: f64, n: usize) -> Rule {
    if n <= 1 {
        return Rule { nodes: vec![0.0], weights: vec![2.0 * l] };
    }
    let h = 2.0 * l / (n - 1) as f64;
    let nodes = (0..n).map(|k| -l + h * k as f64).collect();
    let weights = (0..n)
        .map(|k| if k == 0 || k == n - 1 { 0.5 * h } else { h })
        .collect();
    Rule { nodes, weights }
}

const LEAF: usize = 8;

/// Pairwise (cascade) summation with a fixed split order.
pub fn pairwise_sum(x: &[f64]) -> f64 {
    if x.len() <= LEAF {
        x.iter().sum()
    } else {
        let mid = x.len() / 2;
        pairwise_sum(&x[..mid]) + pairwise_sum(&x[mid..])
    }
}

pub fn pairwise_sum_c(x: &[Complex64]) -> Complex64 {
    if x.len() <= LEAF {
        x.iter().sum()
    } else {
        let mid = x.len() / 2;
        pairwise_sum_c(&x[..mid]) + pairwise_sum_c(&x[mid..])
    }
}

/// Deterministic tree reduction over the index range `0..n`.
///
/// `leaf` maps a contiguous index range to a partial value; partials are
/// combined along a fixed binary tree, so the result does not depend on
/// the number of threads.
pub fn tree_reduce<T, L, C>(n: usize, leaf_size: usize, leaf: &L, combine: &C) -> Option<T>
where
    T: Send,
    L: Fn(std::ops::Range<usize>) -> T + Sync,
    C: Fn(T, T) -> T + Sync,
{
    fn go<T: Send, L, C>(lo: usize, hi: usize, leaf_size: usize, leaf: &L, combine: &C) -> T
    where
        L: Fn(std::ops::Range<usize>) -> T + Sync,
        C: Fn(T, T) -> T + Sync,
    {
        if hi - lo <= leaf_size {
            leaf(lo..hi)
        } else {
            let mid = lo + (hi - lo) / 2;
            let (a, b) = rayon::join(
                || go(lo, mid, leaf_size, leaf, combine),
                || go(mid, hi, leaf_size, leaf, combine),
            );
            combine(a, b)
        }
    }
    if n == 0 {
        None
    } else {
        Some(go(0, n, leaf_size.max(1), leaf, combine))
    }
}

/// Tensor product of one-dimensional rules: returns (points, weights).
pub fn tensor(rules: &[&Rule]) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut pts = vec![Vec::new()];
    let mut wts = vec![1.0];
    for r in rules {
        let mut np = Vec::with_capacity(pts.len() * r.len());
        let mut nw = Vec::with_capacity(pts.len() * r.len());
        for (p, w) in pts.iter().zip(&wts) {
            for (x, v) in r.nodes.iter().zip(&r.weights) {
                let mut q = p.clone();
                q.push(*x);
                np.push(q);
                nw.push(w * v);
            }
        }
        pts = np;
        wts = nw;
    }
    (pts, wts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn legendre_integrates_polynomials() {
        let r = gauss_legendre(5).mapped(0.0, 2.0);
        let s: f64 = r.nodes.iter().zip(&r.weights).map(|(x, w)| w * x.powi(9)).sum();
        assert_abs_diff_eq!(s, 2f64.powi(10) / 10.0, epsilon = 1e-10);
    }

    #[test]
    fn hermite_moments() {
        let r = gauss_hermite(30);
        let m0: f64 = r.weights.iter().sum();
        let m2: f64 = r.nodes.iter().zip(&r.weights).map(|(x, w)| w * x * x).sum();
        assert_abs_diff_eq!(m0, std::f64::consts::PI.sqrt(), epsilon = 1e-13);
        assert_abs_diff_eq!(m2, 0.5 * std::f64::consts::PI.sqrt(), epsilon = 1e-13);
        for n in [48, 128, 256, 512] {
            let r = gauss_hermite(n);
            for k in 0..15 {
                let s: f64 = r.nodes.iter().zip(&r.weights).map(|(t, w)| w * t.powi(2 * k)).sum();
                let exact = (1..=k).fold(std::f64::consts::PI.sqrt(), |a, j| a * (j as f64 - 0.5));
                assert!((s / exact - 1.0).abs() < 1e-12, "n={n} k={k}");
            }
        }
    }

    #[test]
    fn pairwise_matches_naive_on_integers() {
        let x: Vec<f64> = (0..1000).map(|k| k as f64).collect();
        assert_eq!(pairwise_sum(&x), 499500.0);
    }

    #[test]
    fn tree_reduce_is_order_fixed() {
        let v: Vec<f64> = (0..777).map(|k| (k as f64).sin()).collect();
        let a = tree_reduce(v.len(), 16, &|r: std::ops::Range<usize>| v[r].iter().sum::<f64>(), &|a, b| a + b);
        let b = tree_reduce(v.len(), 16, &|r: std::ops::Range<usize>| v[r].iter().sum::<f64>(), &|a, b| a + b);
        assert_eq!(a.unwrap().to_bits(), b.unwrap().to_bits());
        assert!(tree_reduce(0, 4, &|_r: std::ops::Range<usize>| 0.0, &|a: f64, b| a + b).is_none());
    }
}
