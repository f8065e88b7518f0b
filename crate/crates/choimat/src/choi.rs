//! The correspondence between linear maps on matrix algebras and bipartite
//! operators: a map is stored through its images of the matrix units, its
//! Choi matrix has those images as blocks indexed by the first factor, and
//! membership in the body of unital block-positive operators is decided by
//! exact linear checks plus a block-positivity search.

use crate::certify::{block_positivity, BlockPositivityCertificate};
use crate::linalg::{BipartiteOperator, Complex64, ComplexMatrix, STRUCTURAL_TOL};
use crate::Error;

/// A linear map from square matrices of size `dim_in` to square matrices of
/// size `dim_out`, recorded through its images of the matrix units E_ij.
#[derive(Debug, Clone)]
pub struct MapImages {
    pub dim_in: usize,
    pub dim_out: usize,
    images: Vec<ComplexMatrix>,
}

impl MapImages {
    /// Build from a closure giving the image of each matrix unit E_ij.
    pub fn from_fn(
        dim_in: usize,
        dim_out: usize,
        mut f: impl FnMut(usize, usize) -> ComplexMatrix,
    ) -> Self {
        assert!(dim_in > 0 && dim_out > 0);
        let mut images = Vec::with_capacity(dim_in * dim_in);
        for i in 0..dim_in {
            for j in 0..dim_in {
                let img = f(i, j);
                assert_eq!(
                    (img.rows, img.cols),
                    (dim_out, dim_out),
                    "image of E_{i}{j} has the wrong shape"
                );
                images.push(img);
            }
        }
        MapImages {
            dim_in,
            dim_out,
            images,
        }
    }

    /// Build by applying a matrix-level map to each matrix unit.
    pub fn from_map(
        dim_in: usize,
        dim_out: usize,
        mut map: impl FnMut(&ComplexMatrix) -> ComplexMatrix,
    ) -> Self {
        Self::from_fn(dim_in, dim_out, |i, j| {
            map(&ComplexMatrix::unit(dim_in, i, j))
        })
    }

    pub fn image(&self, i: usize, j: usize) -> &ComplexMatrix {
        &self.images[i * self.dim_in + j]
    }

    /// Apply the map to an arbitrary matrix by linearity.
    pub fn apply(&self, a: &ComplexMatrix) -> Result<ComplexMatrix, Error> {
        if (a.rows, a.cols) != (self.dim_in, self.dim_in) {
            return Err(Error::DimensionMismatch(format!(
                "map input must be {0}x{0}, got {1}x{2}",
                self.dim_in, a.rows, a.cols
            )));
        }
        let mut out = ComplexMatrix::zeros(self.dim_out, self.dim_out);
        for i in 0..self.dim_in {
            for j in 0..self.dim_in {
                out = &out + &self.image(i, j).scaled(a[(i, j)]);
            }
        }
        Ok(out)
    }
}

/// Choi matrix of a map: the bipartite operator whose (i,j) block in the
/// first factor is the image of E_ij.
pub fn choi_of(map: &MapImages) -> BipartiteOperator {
    BipartiteOperator::from_blocks(map.dim_in, map.dim_out, |i, j| map.image(i, j).clone())
}

/// Recover the action of the map from its Choi matrix:
/// a |-> sum_ij a[i,j] block(i,j), equal to Tr_1((a^T tensor 1) rho).
pub fn apply_choi(rho: &BipartiteOperator, a: &ComplexMatrix) -> Result<ComplexMatrix, Error> {
    if (a.rows, a.cols) != (rho.dim1, rho.dim1) {
        return Err(Error::DimensionMismatch(format!(
            "map input must be {0}x{0}, got {1}x{2}",
            rho.dim1, a.rows, a.cols
        )));
    }
    let m = rho.dim2;
    let mut out = ComplexMatrix::zeros(m, m);
    for i in 0..rho.dim1 {
        for j in 0..rho.dim1 {
            let coeff = a[(i, j)];
            for k in 0..m {
                for l in 0..m {
                    out[(k, l)] += coeff * rho.matrix[(i * m + k, j * m + l)];
                }
            }
        }
    }
    Ok(out)
}

/// Choi matrix of the transposition map on n-square matrices: the swap
/// operator, with block(i,j) = E_ji.
pub fn transposition_choi(n: usize) -> BipartiteOperator {
    assert!(n >= 2);
    BipartiteOperator::from_blocks(n, n, |i, j| ComplexMatrix::unit(n, j, i))
}

/// Choi matrix of the identity map: n times the projector onto the
/// maximally entangled vector, with block(i,j) = E_ij.
pub fn max_entangled_choi(n: usize) -> BipartiteOperator {
    assert!(n >= 2);
    BipartiteOperator::from_blocks(n, n, |i, j| ComplexMatrix::unit(n, i, j))
}

/// p tensor identity for a rank-one projector p of size n. This is the Choi
/// matrix of a |-> Tr(p^T a) 1, the simplest member of the unital
/// block-positive body.
pub fn product_with_identity(p: &ComplexMatrix, n: usize) -> Result<BipartiteOperator, Error> {
    if (p.rows, p.cols) != (n, n) {
        return Err(Error::DimensionMismatch(format!(
            "projector must be {n}x{n}, got {}x{}",
            p.rows, p.cols
        )));
    }
    let idempotent = (&(p * p) - p).max_abs() <= 1e-10;
    let trace_one = (p.trace() - Complex64::new(1.0, 0.0)).norm() <= 1e-10;
    if !idempotent || !trace_one || !p.is_hermitian(1e-10) {
        return Err(Error::NotRankOneProjector);
    }
    let eye = ComplexMatrix::identity(n);
    Ok(BipartiteOperator::from_blocks(n, n, |i, j| {
        eye.scaled(p[(i, j)])
    }))
}

/// Verdict of the membership test for the body of unital block-positive
/// operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MembershipVerdict {
    Member,
    NonMember,
    Inconclusive,
}

/// Report of the membership test: the three exact linear checks
/// (Hermiticity, trace n, unitality of the induced map) plus the
/// block-positivity search outcome.
#[derive(Debug, Clone)]
pub struct DMembershipReport {
    pub hermitian: bool,
    pub trace_value: f64,
    pub unital: bool,
    pub block_positive: BlockPositivityCertificate,
    pub verdict: MembershipVerdict,
}

/// Decide membership of a bipartite operator with equal factor dimensions in
/// the body of unital block-positive operators.
///
/// The linear conditions are checked exactly (within structural tolerance);
/// block positivity is searched with `search_budget` restarts. A failed
/// linear check or a negative product-vector witness is a definite
/// non-member; a clean pass with a positive budget is reported as a member
/// (no normalization step is needed: for unital block-positive operators the
/// scale is already correct); a zero budget leaves the verdict inconclusive.
pub fn membership_d(
    rho: &BipartiteOperator,
    search_budget: usize,
    seed: u64,
) -> DMembershipReport {
    assert_eq!(
        rho.dim1, rho.dim2,
        "membership is defined for equal factor dimensions"
    );
    let n = rho.dim1;
    let hermitian = rho.is_hermitian(STRUCTURAL_TOL);
    let trace = rho.trace();
    let trace_value = trace.re;
    let trace_ok = (trace_value - n as f64).abs() <= STRUCTURAL_TOL && trace.im.abs() <= STRUCTURAL_TOL;

    let mut diag_sum = ComplexMatrix::zeros(n, n);
    for i in 0..n {
        diag_sum = &diag_sum + &rho.block(i, i);
    }
    let unital = diag_sum.max_abs_diff(&ComplexMatrix::identity(n)) <= STRUCTURAL_TOL;

    let block_positive = if hermitian {
        block_positivity(rho, search_budget, 200, 1e-9, seed)
    } else {
        // The search needs a Hermitian operator; the verdict below is
        // already decided without it.
        BlockPositivityCertificate {
            min_value_found: f64::INFINITY,
            witness_x: None,
            witness_y: None,
            restarts_used: 0,
            converged_restarts: 0,
        }
    };

    let verdict = if !hermitian || !trace_ok || !unital || block_positive.has_witness() {
        MembershipVerdict::NonMember
    } else if search_budget == 0 {
        MembershipVerdict::Inconclusive
    } else {
        MembershipVerdict::Member
    };

    DMembershipReport {
        hermitian,
        trace_value,
        unital,
        block_positive,
        verdict,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certify::{is_cp, random_unit_vector};
    use crate::choi_family::w_minus;
    use crate::linalg::{kron, partial_transpose};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;
    use rand::Rng;

    fn random_matrix(rng: &mut ChaCha8Rng, n: usize, m: usize) -> ComplexMatrix {
        ComplexMatrix::from_fn(n, m, |_, _| {
            Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        })
    }

    #[test]
    fn transposition_choi_is_the_swap() {
        let w = transposition_choi(2);
        for r in 0..4 {
            for c in 0..4 {
                let expect = match (r, c) {
                    (0, 0) | (1, 2) | (2, 1) | (3, 3) => 1.0,
                    _ => 0.0,
                };
                assert_eq!(w.matrix[(r, c)], Complex64::new(expect, 0.0));
            }
        }
        let w = transposition_choi(3);
        let sq = &w.matrix * &w.matrix;
        assert!(sq.max_abs_diff(&ComplexMatrix::identity(9)) < 1e-15);
        // (x tensor y, w x tensor y) = |(x, conj y)|^2... directly: w x tensor y = y tensor x.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = random_unit_vector(3, &mut rng);
        let y = random_unit_vector(3, &mut rng);
        let form = w.product_form(&x, &y);
        let overlap = x.inner(&y);
        assert!((form - overlap.norm_sqr()).norm() < 1e-13);
    }

    #[test]
    fn choi_and_apply_are_mutually_inverse() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let map = MapImages::from_fn(3, 3, |_, _| random_matrix(&mut rng, 3, 3));
        let rho = choi_of(&map);
        for i in 0..3 {
            for j in 0..3 {
                let unit = ComplexMatrix::unit(3, i, j);
                let img = apply_choi(&rho, &unit).unwrap();
                assert!(img.max_abs_diff(map.image(i, j)) < 1e-15);
            }
        }
        // And rebuilding the Choi matrix from the recovered images closes
        // the loop.
        let rebuilt = choi_of(&MapImages::from_fn(3, 3, |i, j| {
            apply_choi(&rho, &ComplexMatrix::unit(3, i, j)).unwrap()
        }));
        assert!(rebuilt.matrix.max_abs_diff(&rho.matrix) < 1e-15);
    }

    #[test]
    fn apply_choi_matches_partial_trace_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let raw = random_matrix(&mut rng, 9, 9);
            let rho = BipartiteOperator::new(3, 3, raw);
            let a = random_matrix(&mut rng, 3, 3);
            let direct = apply_choi(&rho, &a).unwrap();
            let lifted = BipartiteOperator::new(
                3,
                3,
                &kron(&a.transpose(), &ComplexMatrix::identity(3)) * &rho.matrix,
            );
            let traced = crate::linalg::partial_trace(&lifted, crate::linalg::Factor::First);
            assert!(direct.max_abs_diff(&traced) < 1e-12);
        }
    }

    #[test]
    fn apply_choi_of_swap_is_transposition() {
        let w = transposition_choi(3);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let a = random_matrix(&mut rng, 3, 3);
        let out = apply_choi(&w, &a).unwrap();
        assert!(out.max_abs_diff(&a.transpose()) < 1e-14);
        assert!(matches!(
            apply_choi(&w, &ComplexMatrix::identity(2)),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn max_entangled_choi_is_partial_transpose_of_swap() {
        for n in [2, 3] {
            let me = max_entangled_choi(n);
            let w = transposition_choi(n);
            assert!(me.matrix.max_abs_diff(&partial_transpose(&w).matrix) < 1e-15);
            assert!((me.trace().re - n as f64).abs() < 1e-15);
            let eig = crate::linalg::eig_hermitian(&me.matrix).unwrap();
            assert!((eig.eigenvalues[n * n - 1] - n as f64).abs() < 1e-12);
            assert!(eig.eigenvalues[n * n - 2].abs() < 1e-12);
        }
    }

    #[test]
    fn product_with_identity_examples() {
        let p = ComplexMatrix::unit(2, 0, 0);
        let rho = product_with_identity(&p, 2).unwrap();
        let expect = ComplexMatrix::from_real_rows(&[
            &[1.0, 0.0, 0.0, 0.0],
            &[0.0, 1.0, 0.0, 0.0],
            &[0.0, 0.0, 0.0, 0.0],
            &[0.0, 0.0, 0.0, 0.0],
        ]);
        assert!(rho.matrix.max_abs_diff(&expect) < 1e-15);

        let halved = p.scaled_re(0.5);
        assert!(matches!(
            product_with_identity(&halved, 2),
            Err(Error::NotRankOneProjector)
        ));
        let rank_two = ComplexMatrix::identity(2);
        assert!(matches!(
            product_with_identity(&rank_two, 2),
            Err(Error::NotRankOneProjector)
        ));
        assert!(matches!(
            product_with_identity(&p, 3),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn product_with_identity_from_random_vector_is_member() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let v = random_unit_vector(3, &mut rng);
        let p = v.outer(&v);
        let rho = product_with_identity(&p, 3).unwrap();
        let report = membership_d(&rho, 40, 0);
        assert_eq!(report.verdict, MembershipVerdict::Member);
        assert!(report.hermitian && report.unital);
        assert!((report.trace_value - 3.0).abs() < 1e-12);
    }

    #[test]
    fn swap_is_a_member_and_sign_flip_is_not() {
        let w = transposition_choi(3);
        let report = membership_d(&w, 40, 0);
        assert_eq!(report.verdict, MembershipVerdict::Member);

        let wm = w_minus();
        let report = membership_d(&wm, 40, 0);
        assert_eq!(report.verdict, MembershipVerdict::NonMember);
        assert!(report.hermitian && report.unital);
        assert!(report.block_positive.has_witness());

        // Linear-check failures are definite regardless of the search.
        let mut scaled = w.matrix.scaled_re(1.1);
        let report = membership_d(&BipartiteOperator::new(3, 3, scaled.clone()), 0, 0);
        assert_eq!(report.verdict, MembershipVerdict::NonMember);
        assert!(!report.unital);

        scaled[(0, 1)] = Complex64::new(0.0, 5.0);
        let report = membership_d(&BipartiteOperator::new(3, 3, scaled), 10, 0);
        assert!(!report.hermitian);
        assert_eq!(report.verdict, MembershipVerdict::NonMember);

        let report = membership_d(&w, 0, 0);
        assert_eq!(report.verdict, MembershipVerdict::Inconclusive);
    }

    #[test]
    fn members_have_unit_projector_marginals() {
        // Unitality pairs with rank-one projectors on the second factor:
        // Tr((1 tensor p) rho) = 1 for every unit vector.
        let w = transposition_choi(3);
        assert_eq!(membership_d(&w, 20, 0).verdict, MembershipVerdict::Member);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..100 {
            let y = random_unit_vector(3, &mut rng);
            let p = y.outer(&y);
            let lifted = &kron(&ComplexMatrix::identity(3), &p) * &w.matrix;
            let val = lifted.trace();
            assert!((val - Complex64::new(1.0, 0.0)).norm() < 1e-10);
        }
    }

    #[test]
    fn choi_of_a_cp_map_is_psd() {
        // a |-> sum_k V_k^* a V_k has a PSD Choi matrix.
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let kraus: Vec<ComplexMatrix> = (0..2).map(|_| random_matrix(&mut rng, 3, 3)).collect();
        let map = MapImages::from_map(3, 3, |e| {
            let mut out = ComplexMatrix::zeros(3, 3);
            for v in &kraus {
                out = &out + &(&(&v.adjoint() * e) * v);
            }
            out
        });
        let rho = choi_of(&map);
        assert!(rho.is_hermitian(1e-12));
        assert!(is_cp(&rho, 1e-9).unwrap());

        // Sanity: the map really acts as stated on a random input.
        let a = random_matrix(&mut rng, 3, 3);
        let via_choi = apply_choi(&rho, &a).unwrap();
        let mut direct = ComplexMatrix::zeros(3, 3);
        for v in &kraus {
            direct = &direct + &(&(&v.adjoint() * &a) * v);
        }
        assert!(via_choi.max_abs_diff(&direct) < 1e-12);
    }

    #[test]
    fn map_images_applies_by_linearity() {
        let map = MapImages::from_map(2, 2, |e| e.transpose());
        let m = ComplexMatrix::from_fn(2, 2, |i, j| Complex64::new((2 * i + j) as f64, 1.0));
        let out = map.apply(&m).unwrap();
        assert!(out.max_abs_diff(&m.transpose()) < 1e-15);
        assert!(matches!(
            map.apply(&ComplexMatrix::identity(3)),
            Err(Error::DimensionMismatch(_))
        ));
    }
}
