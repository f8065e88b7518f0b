//! Restriction of maps to the diagonal subalgebra and extremality tests for
//! the resulting finite families of positive operators.
//!
//! A unital map restricted to diagonal matrices is determined by the family
//! `K_i = φ(E_ii)`. Arveson's characterization says the restricted map is
//! extreme among unital completely positive maps iff the `K_i` sum to the
//! identity and their ranges are weakly independent; Farenick–Morenz upgrade
//! extremality to C*-extremality exactly when the `K_i` are orthogonal
//! projectors.

use crate::certify::is_psd;
use crate::linalg::{eig_hermitian, svd, BipartiteOperator, ComplexMatrix, ComplexVector};
use crate::linalg::STRUCTURAL_TOL;
use crate::Error;

/// Eigenvalue threshold used when reading off operator ranges and ranks.
pub const RANGE_TOL: f64 = 1e-9;

/// An ordered family of Hermitian operators on one matrix algebra, together
/// with its sum and per-operator ranks (eigenvalues above [`RANGE_TOL`] in
/// modulus).
///
/// The family members are usually positive semidefinite — diagonal blocks of
/// a block-positive Choi matrix always are — but the constructor only
/// enforces Hermiticity, so that [`arveson_extreme_check`] can honestly flag
/// malformed input instead of never seeing it.
#[derive(Debug, Clone)]
pub struct ArvesonDecomposition {
    pub operators: Vec<ComplexMatrix>,
    pub sum: ComplexMatrix,
    pub ranks: Vec<usize>,
}

impl ArvesonDecomposition {
    /// Builds the decomposition from its members. Panics if the family is
    /// empty, shapes disagree, or some member is not Hermitian.
    pub fn new(operators: Vec<ComplexMatrix>) -> Self {
        assert!(!operators.is_empty(), "a decomposition needs at least one operator");
        let m = operators[0].rows;
        let mut sum = ComplexMatrix::zeros(m, m);
        let mut ranks = Vec::with_capacity(operators.len());
        for k in &operators {
            assert_eq!((k.rows, k.cols), (m, m), "operators must share one square shape");
            assert!(k.is_hermitian(STRUCTURAL_TOL), "operators must be Hermitian");
            sum = &sum + k;
            let eig = eig_hermitian(k).expect("Hermitian by the assertion above");
            ranks.push(eig.eigenvalues.iter().filter(|l| l.abs() > RANGE_TOL).count());
        }
        ArvesonDecomposition { operators, sum, ranks }
    }

    pub fn len(&self) -> usize {
        self.operators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.operators.is_empty()
    }

    /// Dimension of the algebra the operators act on.
    pub fn dim(&self) -> usize {
        self.sum.rows
    }
}

/// Reads off `K_i = φ(E_ii)` from the diagonal blocks of a Choi matrix.
pub fn restrict_to_diagonal(rho: &BipartiteOperator) -> ArvesonDecomposition {
    ArvesonDecomposition::new((0..rho.dim1).map(|i| rho.block(i, i)).collect())
}

/// Orthonormal basis of the range of a Hermitian operator: eigenvectors whose
/// eigenvalues exceed `tol` in modulus.
fn range_basis(k: &ComplexMatrix, tol: f64) -> Vec<ComplexVector> {
    let eig = eig_hermitian(k).expect("range extraction needs a Hermitian operator");
    (0..k.rows)
        .filter(|&i| eig.eigenvalues[i].abs() > tol)
        .map(|i| eig.eigenvector(i))
        .collect()
}

/// Congruates every member by `S^{-1/2}`, `S` the family sum, producing a
/// family that sums to the identity. Fails with [`Error::SingularSum`] when
/// the smallest eigenvalue of `S` is at or below `1e-10`.
///
/// The congruence is by an invertible Hermitian matrix, so it preserves both
/// positivity and ranks; rank preservation is asserted on every call.
pub fn renormalize(kk: &ArvesonDecomposition) -> Result<ArvesonDecomposition, Error> {
    let eig = eig_hermitian(&kk.sum).expect("sum of Hermitian operators is Hermitian");
    let lowest = eig.eigenvalues[0];
    if lowest <= 1e-10 {
        return Err(Error::SingularSum(lowest));
    }
    let m = kk.dim();
    let mut root_inv = ComplexMatrix::zeros(m, m);
    for k in 0..m {
        let v = eig.eigenvector(k);
        root_inv = &root_inv + &v.outer(&v).scaled_re(1.0 / eig.eigenvalues[k].sqrt());
    }
    let tilde = kk
        .operators
        .iter()
        .map(|k| &(&root_inv * k) * &root_inv)
        .collect();
    let out = ArvesonDecomposition::new(tilde);
    assert_eq!(
        out.ranks, kk.ranks,
        "congruence by an invertible matrix cannot change ranks"
    );
    Ok(out)
}

/// Weak independence of the family of ranges `M_i = range(K_i)`.
///
/// The family is weakly independent iff no nonzero operators `T_i` with range
/// and co-range inside `M_i` can sum to zero; equivalently, the subspaces
/// `N_i = span{ξ⊗η : ξ, η ∈ M_i}` are linearly independent. That in turn
/// holds iff stacking the product vectors `ξ_a⊗η_b` of all families into one
/// matrix gives full column rank, i.e. `dim(Σ N_i) = Σ (dim M_i)²`.
pub fn weak_independence(kk: &ArvesonDecomposition, tol: f64) -> bool {
    let m = kk.dim();
    let mut columns: Vec<ComplexVector> = Vec::new();
    for k in &kk.operators {
        let basis = range_basis(k, tol);
        for xi in &basis {
            for eta in &basis {
                columns.push(xi.tensor(eta));
            }
        }
    }
    if columns.is_empty() {
        return true;
    }
    if columns.len() > m * m {
        // More product vectors than the ambient dimension can hold.
        return false;
    }
    let mut stack = ComplexMatrix::zeros(m * m, columns.len());
    for (j, col) in columns.iter().enumerate() {
        stack.set_column(j, col);
    }
    let (_, s, _) = svd(&stack);
    s.iter().filter(|&&sigma| sigma > tol).count() == columns.len()
}

/// Farenick–Morenz orthogonality test: every member is a projector and
/// distinct members multiply to zero, all within `tol` entrywise.
pub fn is_cstar_extreme(kk: &ArvesonDecomposition, tol: f64) -> bool {
    for (i, k) in kk.operators.iter().enumerate() {
        if (&(k * k) - k).max_abs() > tol {
            return false;
        }
        for l in kk.operators.iter().skip(i + 1) {
            if (k * l).max_abs() > tol {
                return false;
            }
        }
    }
    true
}

/// Outcome of [`arveson_extreme_check`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtremalityVerdict {
    Extreme,
    NotExtreme,
    /// The family is not a unital family of positive operators, so the
    /// extremality question does not apply to it.
    Malformed,
}

/// Decides extremality of the unital completely positive map
/// `f ↦ Σ f(i) K_i`: the map is extreme iff every `K_i` is positive
/// semidefinite, the family sums to the identity, and the ranges are weakly
/// independent.
pub fn arveson_extreme_check(kk: &ArvesonDecomposition, tol: f64) -> ExtremalityVerdict {
    let eye = ComplexMatrix::identity(kk.dim());
    if kk.sum.max_abs_diff(&eye) > tol {
        return ExtremalityVerdict::Malformed;
    }
    for k in &kk.operators {
        if !is_psd(k, tol).expect("members are Hermitian by construction") {
            return ExtremalityVerdict::Malformed;
        }
    }
    if weak_independence(kk, tol) {
        ExtremalityVerdict::Extreme
    } else {
        ExtremalityVerdict::NotExtreme
    }
}

/// The standard example of a non-orthogonal renormalized family: `K₁ = E₁₁`,
/// `K₂ = E₂₂`, and `K₃ = ¼(e₁+e₃)(e₁+e₃)* + E₃₃`, so that the sum
/// `S = 𝟙 + ½P` (with `P` the projector onto `e₁+e₃`) is invertible but not
/// the identity.
///
/// After [`renormalize`], the family sums to the identity, keeps ranks
/// `(1, 1, 2)`, and satisfies
/// `K̃₁K̃₃ = [[(5+2√6)/72, 0, −1/72], [0, 0, 0], [−1/72, 0, (5−2√6)/72]]`,
/// which is nonzero — so the associated map is not C*-extreme. Note that the
/// renormalized ranges are nested (`range K̃₁ ⊂ range K̃₃`), so the family is
/// not weakly independent either; see the unit tests for the explicit
/// dependence witness.
pub fn overlapping_sum_family() -> ArvesonDecomposition {
    let e1 = ComplexVector::basis(3, 0);
    let e3 = ComplexVector::basis(3, 2);
    let cross = e1.add(&e3);
    let k3 = &cross.outer(&cross).scaled_re(0.25) + &ComplexMatrix::unit(3, 2, 2);
    ArvesonDecomposition::new(vec![
        ComplexMatrix::unit(3, 0, 0),
        ComplexMatrix::unit(3, 1, 1),
        k3,
    ])
}
