//! Classification of 2⊗2 Choi matrices of regular extreme normalized unital
//! positive maps into their canonical block forms, and the convex
//! decomposition over the canonical generators of the membership set.
//!
//! In the nontrivial form the diagonal blocks are rank-one projectors onto an
//! orthonormal pair `y₁, y₂` and the off-diagonal block lives in
//! `span{|y₁⟩⟨y₂|, |y₂⟩⟨y₁|}`; one phase rotation of `y₁` makes the first
//! coefficient real non-negative. Such a matrix is always the mixture
//! `c₀·ρ₀ + |c|·w + (1 − c₀ − |c|)·ρ_diag` of a maximally entangled Choi
//! matrix, a symmetry with one adjustable phase, and the Choi matrix of a
//! diagonal-projection map.

use crate::linalg::{eig_hermitian, BipartiteOperator, ComplexVector, STRUCTURAL_TOL};
use crate::Error;
use num_complex::Complex64;

/// Eigenvalue tolerance for recognizing the diagonal-block patterns
/// `{0, 1}` (rank-one projectors) and `{1, 1}` / `{0, 0}` (degenerate form).
const PATTERN_TOL: f64 = 1e-9;

/// Which of the two canonical block forms the input matched.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CanonicalForm2 {
    /// Rank-one diagonal blocks `|y_i⟩⟨y_i|`; the off-diagonal block carries
    /// the two coefficients.
    Entangled,
    /// `block(0,0) = 𝟙`, `block(1,1) = 0`: the Choi matrix of the map
    /// `a ↦ a₁₁·𝟙`.
    Degenerate,
}

/// Result of [`classify_regular_extreme_2`]: the canonical basis pair and the
/// two off-diagonal coefficients, with `c0 ≥ 0` after phase alignment.
#[derive(Debug, Clone)]
pub struct Classification2 {
    pub form: CanonicalForm2,
    pub y1: ComplexVector,
    pub y2: ComplexVector,
    pub c0: f64,
    pub c: Complex64,
}

impl Classification2 {
    /// Rebuilds the canonical-form Choi matrix this classification describes.
    pub fn canonical_matrix(&self) -> BipartiteOperator {
        let mut out = BipartiteOperator::zeros(2, 2);
        match self.form {
            CanonicalForm2::Degenerate => {
                out.set_block(0, 0, &crate::linalg::ComplexMatrix::identity(2));
            }
            CanonicalForm2::Entangled => {
                let c0 = Complex64::new(self.c0, 0.0);
                let off = &self.y1.outer(&self.y2).scaled(c0)
                    + &self.y2.outer(&self.y1).scaled(self.c);
                out.set_block(0, 0, &self.y1.outer(&self.y1));
                out.set_block(1, 1, &self.y2.outer(&self.y2));
                out.set_block(0, 1, &off);
                out.set_block(1, 0, &off.adjoint());
            }
        }
        out
    }
}

/// Reads a 2⊗2 Choi matrix in the canonical form of a regular extreme
/// normalized unital positive map.
///
/// Preconditions (asserted): Hermitian, trace 2, unital diagonal blocks.
/// The classifier recognizes the two block patterns and errors with
/// [`Error::NotCanonical`] on anything else; [`Error::ResidualTooLarge`]
/// signals an off-diagonal block with components outside
/// `span{|y₁⟩⟨y₂|, |y₂⟩⟨y₁|}`, i.e. an input violating the form's
/// hypotheses. Deciding extremality of arbitrary maps is out of scope here.
pub fn classify_regular_extreme_2(
    rho: &BipartiteOperator,
    tol: f64,
) -> Result<Classification2, Error> {
    assert_eq!((rho.dim1, rho.dim2), (2, 2), "classification is a 2⊗2 statement");
    assert!(rho.is_hermitian(STRUCTURAL_TOL), "Choi matrices of maps under test are Hermitian");
    assert!(
        (rho.trace() - Complex64::new(2.0, 0.0)).norm() <= STRUCTURAL_TOL,
        "normalized inputs have trace 2"
    );
    let b00 = rho.block(0, 0);
    let b01 = rho.block(0, 1);
    let b11 = rho.block(1, 1);
    let unital = &b00 + &b11;
    assert!(
        unital.max_abs_diff(&crate::linalg::ComplexMatrix::identity(2)) <= STRUCTURAL_TOL,
        "unital inputs have diagonal blocks summing to the identity"
    );

    let eig = eig_hermitian(&b00).expect("Hermitian by the assertion above");
    let (low, high) = (eig.eigenvalues[0], eig.eigenvalues[1]);

    if (low - 1.0).abs() <= PATTERN_TOL && (high - 1.0).abs() <= PATTERN_TOL {
        let cls = Classification2 {
            form: CanonicalForm2::Degenerate,
            y1: ComplexVector::basis(2, 0),
            y2: ComplexVector::basis(2, 1),
            c0: 0.0,
            c: Complex64::new(0.0, 0.0),
        };
        let residual = rho.matrix.max_abs_diff(&cls.canonical_matrix().matrix);
        if residual > tol {
            return Err(Error::ResidualTooLarge(residual));
        }
        return Ok(cls);
    }

    if low.abs() > PATTERN_TOL || (high - 1.0).abs() > PATTERN_TOL {
        return Err(Error::NotCanonical);
    }

    // Rank-one diagonal blocks; unitality makes the eigenvector pair of
    // block(0,0) serve both blocks.
    let mut y1 = eig.eigenvector(1);
    let y2 = eig.eigenvector(0);

    let first = y1.inner(&b01.apply(&y2));
    // Rotate y₁ so the |y₁⟩⟨y₂| coefficient becomes real non-negative.
    y1 = y1.scaled(Complex64::from_polar(1.0, first.arg()));
    let c0 = first.norm();
    let c = y2.inner(&b01.apply(&y1));

    let cls = Classification2 {
        form: CanonicalForm2::Entangled,
        y1,
        y2,
        c0,
        c,
    };
    let residual = rho.matrix.max_abs_diff(&cls.canonical_matrix().matrix);
    if residual > tol {
        return Err(Error::ResidualTooLarge(residual));
    }
    Ok(cls)
}

/// The three generators and weights expressing a classified matrix as a
/// convex mixture.
#[derive(Debug, Clone)]
pub struct TildeDecomposition {
    /// `2P_x` for the maximally entangled `x = (e₁⊗y₁ + e₂⊗y₂)/√2`.
    pub rho0: BipartiteOperator,
    /// The symmetry whose off-diagonal blocks carry the phase `e^{i arg c}`.
    pub w_phase: BipartiteOperator,
    /// Choi matrix of the projection onto the diagonal in the `(e, y)` bases.
    pub rho_diag: BipartiteOperator,
    /// `(c₀, |c|, 1 − c₀ − |c|)`.
    pub weights: [f64; 3],
}

impl TildeDecomposition {
    /// The convex mixture the report describes.
    pub fn mixture(&self) -> BipartiteOperator {
        let m = &(&self.rho0.matrix.scaled_re(self.weights[0])
            + &self.w_phase.matrix.scaled_re(self.weights[1]))
            + &self.rho_diag.matrix.scaled_re(self.weights[2]);
        BipartiteOperator::new(2, 2, m)
    }
}

/// Expresses an entangled-form classification as the convex mixture
/// `c₀·ρ₀ + |c|·w_phase + (1 − c₀ − |c|)·ρ_diag` and verifies the identity.
///
/// Fails with [`Error::WeightViolation`] when `c₀ + |c| > 1 + 1e-10`; by the
/// trace-functional bound that only happens when the input was not the Choi
/// matrix of a normalized positive map.
pub fn decompose_tilde_d(cls: &Classification2) -> Result<TildeDecomposition, Error> {
    assert_eq!(
        cls.form,
        CanonicalForm2::Entangled,
        "the mixture exists for the entangled canonical form only"
    );
    let spare = 1.0 - cls.c0 - cls.c.norm();
    if spare < -1e-10 {
        return Err(Error::WeightViolation(format!(
            "c0 + |c| = {} exceeds 1",
            cls.c0 + cls.c.norm()
        )));
    }

    let e1 = ComplexVector::basis(2, 0);
    let e2 = ComplexVector::basis(2, 1);
    let x = e1
        .tensor(&cls.y1)
        .add(&e2.tensor(&cls.y2))
        .scaled(Complex64::new(1.0 / 2f64.sqrt(), 0.0));
    let rho0 = BipartiteOperator::new(2, 2, x.outer(&x).scaled_re(2.0));

    let phase = Complex64::from_polar(1.0, cls.c.arg());
    let mut w_phase = BipartiteOperator::zeros(2, 2);
    w_phase.set_block(0, 0, &cls.y1.outer(&cls.y1));
    w_phase.set_block(1, 1, &cls.y2.outer(&cls.y2));
    w_phase.set_block(0, 1, &cls.y2.outer(&cls.y1).scaled(phase));
    w_phase.set_block(1, 0, &cls.y1.outer(&cls.y2).scaled(phase.conj()));

    let mut rho_diag = BipartiteOperator::zeros(2, 2);
    rho_diag.set_block(0, 0, &cls.y1.outer(&cls.y1));
    rho_diag.set_block(1, 1, &cls.y2.outer(&cls.y2));

    let out = TildeDecomposition {
        rho0,
        w_phase,
        rho_diag,
        weights: [cls.c0, cls.c.norm(), spare.max(0.0)],
    };
    let residual = out.mixture().matrix.max_abs_diff(&cls.canonical_matrix().matrix);
    assert!(
        residual <= 1e-12,
        "the generator mixture must reproduce the canonical form, off by {residual}"
    );
    Ok(out)
}
