//! dπ_{λ,τ}(L) for L = (Σ_j (Z_{v_j}Z̄_{v_j} + Z̄_{v_j}Z_{v_j}))² − Σ_k U_k²
//! on the truncated Fock basis, and its closed-form spectrum.

use nalgebra::SymmetricEigen;

use crate::error::{Error, Result};
use crate::fock::{derived_closed_form, FockTruncation, OperatorMatrix};
use crate::model::{CMat, C64};
use crate::spectral::SpectralData;

#[derive(Debug, Clone, PartialEq)]
pub struct RocklandSpectrum {
    pub lambda: Vec<f64>,
    pub tau: Vec<f64>,
    /// Eigenvalues of the degree ≤ D/2 principal block, ascending.
    pub eigenvalues: Vec<f64>,
    pub ground_value: f64,
    /// Ground eigenvector in the basis of that block (first entry: e₀).
    pub ground_vector: Vec<C64>,
}

/// dπ(L) on the degree ≤ D space, with v_j the standard basis of E and
/// dπ(U_k) = −iλ_k.
pub fn assemble_dpi_l(trunc: &FockTruncation, tau: &[f64]) -> Result<OperatorMatrix> {
    if trunc.degree_cap < 4 {
        return Err(Error::Contract(format!("degree cap {} below 4", trunc.degree_cap)));
    }
    let n = trunc.spectral.n();
    let dim = trunc.dim();
    let mut s = CMat::zeros(dim, dim);
    for j in 0..n {
        let mut v = vec![C64::new(0.0, 0.0); n];
        v[j] = C64::new(1.0, 0.0);
        let z = derived_closed_form(trunc, tau, &v, false)?;
        let zb = derived_closed_form(trunc, tau, &v, true)?;
        s += &z * &zb + &zb * &z;
    }
    let l2: f64 = trunc.spectral.lambda.iter().map(|l| l * l).sum();
    Ok(OperatorMatrix::new(&s * &s + CMat::identity(dim, dim) * C64::new(l2, 0.0)))
}

/// [(2 Σ_j Φ_λ(v_j)(1 + 2α_j) + ½|τ|²)² + |λ|²].
pub fn closed_form_eigenvalue(spectral: &SpectralData, tau: &[f64], alpha: &[usize]) -> f64 {
    let inner: f64 = spectral.modes.iter().zip(alpha).map(|(m, &a)| 2.0 * m.weight() * (1.0 + 2.0 * a as f64)).sum();
    let t2: f64 = tau.iter().map(|t| t * t).sum();
    let l2: f64 = spectral.lambda.iter().map(|l| l * l).sum();
    (inner + 0.5 * t2).powi(2) + l2
}

/// Spectrum of the degree ≤ D/2 principal block of dπ(L).
pub fn rockland_spectrum(trunc: &FockTruncation, tau: &[f64]) -> Result<RocklandSpectrum> {
    let full = assemble_dpi_l(trunc, tau)?.mat;
    let keep = trunc.block(trunc.degree_cap / 2);
    let block = CMat::from_fn(keep.len(), keep.len(), |i, k| full[(keep[i], keep[k])]);
    let herm = (&block + block.adjoint()) * C64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(herm);
    let mut order: Vec<usize> = (0..keep.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let g = order[0];
    Ok(RocklandSpectrum {
        lambda: trunc.spectral.lambda.clone(),
        tau: tau.to_vec(),
        ground_value: eigenvalues[0],
        ground_vector: eig.eigenvectors.column(g).iter().cloned().collect(),
        eigenvalues,
    })
}

/// Closed-form values for every multi-index of the degree ≤ D/2 block, ascending.
pub fn closed_form_block(trunc: &FockTruncation, tau: &[f64]) -> Vec<f64> {
    let mut v: Vec<f64> = trunc
        .block(trunc.degree_cap / 2)
        .iter()
        .map(|&i| closed_form_eigenvalue(&trunc.spectral, tau, &trunc.indices[i]))
        .collect();
    v.sort_by(f64::total_cmp);
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::fock_basis;
    use crate::model::QuadraticModel;
    use crate::spectral::spectral_data;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn heis(l: f64, d: usize) -> FockTruncation {
        fock_basis(&spectral_data(&QuadraticModel::heisenberg(), &[l]).unwrap(), d).unwrap()
    }

    #[test]
    fn heisenberg_values() {
        let sp = rockland_spectrum(&heis(1.0, 8), &[]).unwrap();
        for (k, want) in [5.0, 37.0, 101.0].iter().enumerate() {
            assert_abs_diff_eq!(sp.eigenvalues[k], *want, epsilon = 1e-8);
        }
        assert!(sp.ground_vector[0].norm() >= 1.0 - 1e-8);
    }

    #[test]
    fn closed_form_examples() {
        let sd = spectral_data(&QuadraticModel::heisenberg(), &[1.0]).unwrap();
        assert_eq!(closed_form_eigenvalue(&sd, &[], &[0]), 5.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = QuadraticModel::random(3, 2, &mut rng);
        let sd = spectral_data(&m, &[0.3, -0.9]).unwrap();
        let expect = (2.0 * sd.trace_abs()).powi(2) + 0.9;
        assert_abs_diff_eq!(closed_form_eigenvalue(&sd, &[], &[0, 0, 0]), expect, epsilon = 1e-12);
        let zero = QuadraticModel::new(2, 1, vec![CMat::zeros(2, 2)]).unwrap();
        let sd = spectral_data(&zero, &[0.0]).unwrap();
        let tau = [0.5, -1.0, 2.0, 0.0];
        assert_abs_diff_eq!(closed_form_eigenvalue(&sd, &tau, &[]), (0.5 * 5.25f64).powi(2), epsilon = 1e-12);
    }

    #[test]
    fn homogeneous_of_degree_two() {
        let a = rockland_spectrum(&heis(1.0, 8), &[]).unwrap();
        let b = rockland_spectrum(&heis(4.0, 8), &[]).unwrap();
        for (x, y) in a.eigenvalues.iter().zip(&b.eigenvalues) {
            assert_abs_diff_eq!(y / x, 16.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn radical_contribution() {
        let m = QuadraticModel::diagonal(&[vec![1.0, 0.0]]).unwrap();
        let t = fock_basis(&spectral_data(&m, &[0.7]).unwrap(), 6).unwrap();
        let tau = [0.4, -1.2];
        let sp = rockland_spectrum(&t, &tau).unwrap();
        let cf = closed_form_block(&t, &tau);
        for (x, y) in sp.eigenvalues.iter().zip(&cf) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-8 * y.max(1.0));
        }
        assert!(sp.ground_value > 0.0);
    }

    #[test]
    fn rejects_low_degree() {
        assert!(assemble_dpi_l(&heis(1.0, 3), &[]).is_err());
    }
}
