//! Schmidt analysis of bipartite vectors: decomposition via the SVD of the
//! coefficient matrix, rank, maximal entanglement, and the projection
//! overlap bound Tr((1 tensor P_z) P_x) <= max_i lambda_i^2.

use crate::linalg::{svd, Complex64, ComplexMatrix, ComplexVector};
use crate::Error;

/// Default threshold separating double-precision noise from genuine rank.
pub const RANK_TOL: f64 = 1e-9;

/// x = sum_i lambda_i e_i tensor f_i with non-negative descending
/// coefficients (phases absorbed into the vectors) and orthonormal left and
/// right families of length min(n, m).
#[derive(Debug, Clone)]
pub struct SchmidtDecomposition {
    pub coefficients: Vec<f64>,
    pub left_vectors: Vec<ComplexVector>,
    pub right_vectors: Vec<ComplexVector>,
    pub rank: usize,
}

impl SchmidtDecomposition {
    pub fn max_coefficient(&self) -> f64 {
        self.coefficients.first().copied().unwrap_or(0.0)
    }

    /// Rebuild sum_i lambda_i e_i tensor f_i.
    pub fn reconstruct(&self) -> ComplexVector {
        let n = self.left_vectors[0].len();
        let m = self.right_vectors[0].len();
        let mut out = ComplexVector::zeros(n * m);
        for (k, &lam) in self.coefficients.iter().enumerate() {
            let term = self.left_vectors[k].tensor(&self.right_vectors[k]);
            for i in 0..n * m {
                out[i] += term[i] * Complex64::new(lam, 0.0);
            }
        }
        out
    }
}

/// Schmidt decomposition of a unit vector in an n tensor m space, read as
/// the SVD of the n-by-m coefficient matrix X[i,j] = (e_i tensor e_j, x).
pub fn schmidt(
    x: &ComplexVector,
    n: usize,
    m: usize,
    rank_tol: f64,
) -> Result<SchmidtDecomposition, Error> {
    assert_eq!(x.len(), n * m, "vector length must match the factor dimensions");
    if (x.norm() - 1.0).abs() > 1e-10 {
        return Err(Error::NotNormalized);
    }
    let coeff = ComplexMatrix::from_fn(n, m, |i, j| x[i * m + j]);
    let (u, s, v) = svd(&coeff);
    let r = s.len();
    let left_vectors: Vec<ComplexVector> = (0..r).map(|k| u.column(k)).collect();
    // X = U S V* means x = sum_k s_k u_k tensor conj(v_k).
    let right_vectors: Vec<ComplexVector> = (0..r).map(|k| v.column(k).conj()).collect();
    let rank = s.iter().filter(|&&lam| lam > rank_tol).count();
    Ok(SchmidtDecomposition {
        coefficients: s,
        left_vectors,
        right_vectors,
        rank,
    })
}

/// True iff the unit vector on a square tensor product has all n Schmidt
/// coefficients equal to 1/sqrt(n) within tol.
pub fn is_max_entangled(x: &ComplexVector, tol: f64) -> Result<bool, Error> {
    let n = (x.len() as f64).sqrt().round() as usize;
    assert_eq!(n * n, x.len(), "maximal entanglement needs square factors");
    let dec = schmidt(x, n, n, RANK_TOL)?;
    let target = 1.0 / (n as f64).sqrt();
    Ok(dec
        .coefficients
        .iter()
        .all(|&lam| (lam - target).abs() <= tol))
}

/// Tr((1 tensor P_z) P_x) = sum_i lambda_i^2 |(f_i, z)|^2 for unit vectors
/// x (bipartite) and z (second factor). Bounded by the largest squared
/// Schmidt coefficient, with equality exactly on the span of the
/// top-coefficient right vectors.
pub fn overlap(x: &ComplexVector, z: &ComplexVector) -> Result<f64, Error> {
    if (z.norm() - 1.0).abs() > 1e-10 {
        return Err(Error::NotNormalized);
    }
    let m = z.len();
    assert_eq!(x.len() % m, 0, "factor dimensions must divide the vector length");
    let n = x.len() / m;
    let dec = schmidt(x, n, m, RANK_TOL)?;
    Ok(dec
        .coefficients
        .iter()
        .zip(&dec.right_vectors)
        .map(|(&lam, f)| lam * lam * f.inner(z).norm_sqr())
        .sum())
}
