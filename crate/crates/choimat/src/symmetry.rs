//! Involutions on bipartite spaces: classification into symmetries and
//! partial symmetries, Schmidt structure of the negative eigenspace,
//! constructive local-unitary reduction to the transposition Choi matrix,
//! the exposedness functional, and a randomized search over partial
//! symmetries for membership candidates.

use crate::certify::{is_cocp, is_cp, random_unit_vector};
use crate::choi::{membership_d, transposition_choi, MembershipVerdict};
use crate::linalg::{
    eig_hermitian, local_conjugate, orthogonalize_against, partial_transpose, random_unitary,
    BipartiteOperator, Complex64, ComplexMatrix, ComplexVector, STRUCTURAL_TOL,
};
use crate::schmidt::{schmidt, RANK_TOL};
use crate::{Error, ReduceFailure};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InvolutionKind {
    /// Self-adjoint unitary: s* = s and s^2 = 1.
    Symmetry,
    /// Self-adjoint with s^2 = e a proper projector (s vanishes off its
    /// support).
    PartialSymmetry,
    /// Anything else.
    Neither,
}

/// Decomposition of a (partial) symmetry into its positive and negative
/// eigenprojectors: s = p - q with p + q = e the support projector.
#[derive(Debug, Clone)]
pub struct InvolutionClass {
    pub kind: InvolutionKind,
    pub p: ComplexMatrix,
    pub q: ComplexMatrix,
    pub e: ComplexMatrix,
    pub support_rank: usize,
}

impl InvolutionClass {
    /// Rank of a projector field, read off its trace.
    pub fn p_rank(&self) -> usize {
        self.p.trace().re.round() as usize
    }

    pub fn q_rank(&self) -> usize {
        self.q.trace().re.round() as usize
    }
}

/// Classify a square matrix as a symmetry, a partial symmetry, or neither,
/// and split it into eigenprojectors p = (e + s)/2 and q = (e - s)/2.
pub fn classify_involution(s: &ComplexMatrix, tol: f64) -> InvolutionClass {
    let n = s.rows;
    let neither = || InvolutionClass {
        kind: InvolutionKind::Neither,
        p: ComplexMatrix::zeros(n, n),
        q: ComplexMatrix::zeros(n, n),
        e: ComplexMatrix::zeros(n, n),
        support_rank: 0,
    };
    if !s.is_square() || !s.is_hermitian(tol) {
        return neither();
    }
    let sq = s * s;
    let eig = match eig_hermitian(&sq) {
        Ok(eig) => eig,
        Err(_) => return neither(),
    };
    // The square of a (partial) symmetry has spectrum {0, 1}.
    let mut e = ComplexMatrix::zeros(n, n);
    let mut support_rank = 0;
    for k in 0..n {
        let lam = eig.eigenvalues[k];
        if (lam - 1.0).abs() <= tol {
            let v = eig.eigenvector(k);
            for i in 0..n {
                for j in 0..n {
                    e[(i, j)] += v[i] * v[j].conj();
                }
            }
            support_rank += 1;
        } else if lam.abs() > tol {
            return neither();
        }
    }
    let kind = if support_rank == n {
        InvolutionKind::Symmetry
    } else {
        InvolutionKind::PartialSymmetry
    };
    let p = (&e + s).scaled_re(0.5);
    let q = (&e - s).scaled_re(0.5);
    InvolutionClass {
        kind,
        p,
        q,
        e,
        support_rank,
    }
}

/// Sampled check that every vector in range(q) of a symmetry has sorted
/// Schmidt coefficients (1/sqrt2, 1/sqrt2, 0, ...).
#[derive(Debug, Clone)]
pub struct QRangeSchmidtReport {
    pub samples: usize,
    pub worst_deviation: f64,
    pub max_coefficient: f64,
    pub pass: bool,
}

/// Sample random unit vectors in the range of the negative eigenprojector
/// of a symmetry and report the worst deviation of their sorted Schmidt
/// coefficients from (1/sqrt2, 1/sqrt2, 0, ...). Passes iff the worst
/// deviation is at most 1e-9.
pub fn q_range_schmidt_check(
    s: &BipartiteOperator,
    samples: usize,
    seed: u64,
) -> Result<QRangeSchmidtReport, Error> {
    let class = classify_involution(&s.matrix, STRUCTURAL_TOL);
    if class.kind != InvolutionKind::Symmetry {
        return Err(Error::NotSymmetry);
    }
    let (n, m) = (s.dim1, s.dim2);
    if class.q_rank() == 0 {
        // Empty negative eigenspace: the claim is vacuous.
        return Ok(QRangeSchmidtReport {
            samples: 0,
            worst_deviation: 0.0,
            max_coefficient: 0.0,
            pass: true,
        });
    }
    let inv = 1.0 / 2.0_f64.sqrt();
    let mut target = vec![0.0; n.min(m)];
    target[0] = inv;
    target[1] = inv;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst_deviation = 0.0_f64;
    let mut max_coefficient = 0.0_f64;
    let mut produced = 0;
    while produced < samples {
        let g = random_unit_vector(n * m, &mut rng);
        let projected = class.q.apply(&g);
        if projected.norm() < 1e-8 {
            continue;
        }
        let v = projected.normalized();
        let dec = schmidt(&v, n, m, RANK_TOL)?;
        let deviation = dec
            .coefficients
            .iter()
            .zip(&target)
            .map(|(&lam, &t)| (lam - t).abs())
            .fold(0.0_f64, f64::max);
        worst_deviation = worst_deviation.max(deviation);
        max_coefficient = max_coefficient.max(dec.max_coefficient());
        produced += 1;
    }
    Ok(QRangeSchmidtReport {
        samples: produced,
        worst_deviation,
        max_coefficient,
        pass: worst_deviation <= 1e-9,
    })
}

/// Local unitary pair carrying the transposition Choi matrix onto a given
/// symmetry: s = (u tensor transpose(v*)) w (u tensor transpose(v*))*.
#[derive(Debug, Clone)]
pub struct ReductionResult {
    pub u: ComplexMatrix,
    pub v: ComplexMatrix,
    pub reconstruction_error: f64,
}

/// Constructively reduce a symmetry-type operator to the transposition Choi
/// matrix by local unitaries.
///
/// The route goes through the partial transpose: s is such a conjugation of
/// w exactly when tau_P(s) = n P_x for a maximally entangled x. The two
/// checks are therefore performed in order (rank-one with eigenvalue n,
/// then maximal entanglement of x) and U, V are read off the Schmidt
/// decomposition of x. Any Schmidt basis works: the residual rotation in a
/// degenerate coefficient space cancels in the conjugation.
pub fn reduce_to_transposition(
    s: &BipartiteOperator,
    tol: f64,
) -> Result<ReductionResult, Error> {
    assert_eq!(s.dim1, s.dim2, "reduction needs equal factor dimensions");
    assert!(
        s.is_hermitian(STRUCTURAL_TOL),
        "reduction needs a Hermitian operator"
    );
    let n = s.dim1;
    let nn = n * n;
    let flipped = partial_transpose(s);
    let eig = eig_hermitian(&flipped.matrix).expect("partial transpose stays Hermitian");
    let top = eig.eigenvalues[nn - 1];
    let rest_ok = eig.eigenvalues[..nn - 1].iter().all(|l| l.abs() <= tol);
    if (top - n as f64).abs() > tol || !rest_ok {
        return Err(Error::NotReducible(ReduceFailure::PartialTransposeNotRankOne));
    }
    let x = eig.eigenvector(nn - 1);
    let dec = schmidt(&x, n, n, RANK_TOL)?;
    let coeff_target = 1.0 / (n as f64).sqrt();
    if dec
        .coefficients
        .iter()
        .any(|&lam| (lam - coeff_target).abs() > tol)
    {
        return Err(Error::NotReducible(ReduceFailure::NotMaximallyEntangled));
    }
    let mut u = ComplexMatrix::zeros(n, n);
    let mut v = ComplexMatrix::zeros(n, n);
    for k in 0..n {
        u.set_column(k, &dec.left_vectors[k]);
        v.set_column(k, &dec.right_vectors[k]);
    }
    let w = transposition_choi(n);
    let rebuilt = local_conjugate(&w, &u, &v.conj()).expect("Schmidt bases are unitary");
    let reconstruction_error = (&s.matrix - &rebuilt.matrix).frobenius_norm();
    Ok(ReductionResult {
        u,
        v,
        reconstruction_error,
    })
}

/// A Haar-random local conjugation of the transposition Choi matrix: a
/// symmetry, a member of the unital block-positive body, and reducible by
/// construction.
pub fn random_symmetry_in_d(n: usize, seed: u64) -> BipartiteOperator {
    assert!(n == 2 || n == 3, "generator covers factor dimensions 2 and 3");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = random_unitary(n, &mut rng);
    let v = random_unitary(n, &mut rng);
    local_conjugate(&transposition_choi(n), &u, &v).expect("Haar factors are unitary")
}

/// Gap of the exposedness functional: n^2 - Re Tr(w sigma). Non-negative on
/// the unital block-positive body and zero exactly at the transposition
/// Choi matrix.
pub fn exposedness_gap(sigma: &BipartiteOperator, n: usize) -> f64 {
    assert_eq!((sigma.dim1, sigma.dim2), (n, n));
    let w = transposition_choi(n);
    (n * n) as f64 - (&w.matrix * &sigma.matrix).trace().re
}

/// The reflection `1 - 2(P_x1 + P_x2 + P_x3)` across three concrete
/// two-term vectors:
/// `x1 = (e1⊗e1 + e2⊗e2)/√2`, `x2 = (e1⊗e3 + e3⊗e2)/√2`,
/// `x3 = (e2⊗e3 − e3⊗e1)/√2`.
///
/// A block-positive symmetry of the membership body whose partial transpose
/// is exactly `3P_x` for the maximally entangled
/// `x = (e3⊗e3 − e1⊗e2 + e2⊗e1)/√3`, so it reduces to the transposition with
/// a rank-one partial transpose despite none of the `x_i` being maximally
/// entangled themselves.
pub fn triple_reflection_symmetry() -> BipartiteOperator {
    let mut m = ComplexMatrix::identity(9);
    for signed in [
        vec![(0usize, 1.0), (4, 1.0)],
        vec![(2, 1.0), (7, 1.0)],
        vec![(5, 1.0), (6, -1.0)],
    ] {
        let mut x = ComplexVector::zeros(9);
        for &(k, w) in &signed {
            x.data[k] = Complex64::new(w, 0.0);
        }
        let x = x.normalized();
        m = &m - &x.outer(&x).scaled_re(2.0);
    }
    BipartiteOperator::new(3, 3, m)
}

/// The two concrete partial symmetries built from the swap embedded on the
/// span of the first two basis vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PartialSymmetryFixture {
    /// Embedded swap plus the projector onto (e1 + e2) tensor e3 / sqrt2.
    SwapPlusCross,
    /// Embedded swap plus the projector onto e3 tensor e3.
    SwapPlusCorner,
}

/// Build one of the two rank-5 partial-symmetry members: the swap on the
/// first two coordinates, extended by one extra rank-one projector that
/// restores unitality.
pub fn partial_symmetry_fixture(which: PartialSymmetryFixture) -> BipartiteOperator {
    let mut m = ComplexMatrix::zeros(9, 9);
    for i in 0..2 {
        for j in 0..2 {
            m[(i * 3 + j, j * 3 + i)] = Complex64::new(1.0, 0.0);
        }
    }
    let inv = 1.0 / 2.0_f64.sqrt();
    let x = match which {
        PartialSymmetryFixture::SwapPlusCross => {
            let mut x = ComplexVector::zeros(9);
            x[2] = Complex64::new(inv, 0.0);
            x[5] = Complex64::new(inv, 0.0);
            x
        }
        PartialSymmetryFixture::SwapPlusCorner => ComplexVector::basis(9, 8),
    };
    let px = x.outer(&x);
    BipartiteOperator::new(3, 3, &m + &px)
}

/// One flagged outcome of the partial-symmetry search.
#[derive(Debug, Clone)]
pub struct PartialSymmetryCandidate {
    pub trial: usize,
    pub support_rank: usize,
    pub cp: bool,
    pub cocp: bool,
    pub flags: Vec<String>,
    pub operator: BipartiteOperator,
}

/// Aggregate of a randomized search over partial symmetries. The search
/// only reports; it never decides the open question of whether a rank-7
/// partial symmetry can be a member.
#[derive(Debug, Clone)]
pub struct PartialSymmetrySearchReport {
    pub trials: usize,
    pub members_found: usize,
    pub rank5_members: usize,
    pub candidates: Vec<PartialSymmetryCandidate>,
}

fn random_partial_symmetry(rng: &mut ChaCha8Rng, support_rank: usize) -> BipartiteOperator {
    // Orthonormal support mixing product directions and generic ones, each
    // signed into the positive or negative eigenspace.
    let mut basis = ComplexMatrix::zeros(9, support_rank);
    let mut s = ComplexMatrix::zeros(9, 9);
    let mut accepted = 0;
    while accepted < support_rank {
        let mut v = if rng.gen_bool(0.5) {
            random_unit_vector(3, rng).tensor(&random_unit_vector(3, rng))
        } else {
            random_unit_vector(9, rng)
        };
        let norm = orthogonalize_against(&basis, accepted, &mut v);
        if norm < 1e-6 {
            continue;
        }
        let v = v.scaled(Complex64::new(1.0 / norm, 0.0));
        basis.set_column(accepted, &v);
        let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let outer = v.outer(&v).scaled_re(sign);
        s = &s + &outer;
        accepted += 1;
    }
    BipartiteOperator::new(3, 3, s)
}

/// Randomized search over partial symmetries for membership candidates.
///
/// Each trial builds a deterministic candidate from its own seed: two in
/// four trials draw a generic signed orthonormal family of support rank 5
/// or 7, the other two locally conjugate one of the two fixtures (which
/// stay members). Every candidate goes through the membership test; members
/// with support rank 7, or members that are neither CP nor coCP, are
/// flagged verbatim as "conjecture-counterexample-candidate".
pub fn partial_symmetry_search(trials: usize, seed: u64) -> PartialSymmetrySearchReport {
    struct TrialOutcome {
        trial: usize,
        member: bool,
        support_rank: usize,
        cp: bool,
        cocp: bool,
        operator: BipartiteOperator,
    }
    let outcomes: Vec<TrialOutcome> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(trial as u64));
            let s = match trial % 4 {
                1 => {
                    let u = random_unitary(3, &mut rng);
                    let v = random_unitary(3, &mut rng);
                    local_conjugate(
                        &partial_symmetry_fixture(PartialSymmetryFixture::SwapPlusCross),
                        &u,
                        &v,
                    )
                    .expect("Haar factors are unitary")
                }
                3 => {
                    let u = random_unitary(3, &mut rng);
                    let v = random_unitary(3, &mut rng);
                    local_conjugate(
                        &partial_symmetry_fixture(PartialSymmetryFixture::SwapPlusCorner),
                        &u,
                        &v,
                    )
                    .expect("Haar factors are unitary")
                }
                even => random_partial_symmetry(&mut rng, if even == 0 { 5 } else { 7 }),
            };
            let class = classify_involution(&s.matrix, STRUCTURAL_TOL);
            debug_assert_ne!(class.kind, InvolutionKind::Neither);
            let report = membership_d(&s, 20, seed.wrapping_add(trial as u64) ^ 0x5eed);
            let member = report.verdict == MembershipVerdict::Member;
            let (cp, cocp) = if member {
                (
                    is_cp(&s, 1e-9).unwrap_or(false),
                    is_cocp(&s, 1e-9).unwrap_or(false),
                )
            } else {
                (false, false)
            };
            TrialOutcome {
                trial,
                member,
                support_rank: class.support_rank,
                cp,
                cocp,
                operator: s,
            }
        })
        .collect();

    let mut report = PartialSymmetrySearchReport {
        trials,
        members_found: 0,
        rank5_members: 0,
        candidates: Vec::new(),
    };
    for o in outcomes {
        if !o.member {
            continue;
        }
        report.members_found += 1;
        if o.support_rank == 5 {
            report.rank5_members += 1;
        }
        if o.support_rank == 7 || (!o.cp && !o.cocp) {
            report.candidates.push(PartialSymmetryCandidate {
                trial: o.trial,
                support_rank: o.support_rank,
                cp: o.cp,
                cocp: o.cocp,
                flags: vec!["conjecture-counterexample-candidate".to_string()],
                operator: o.operator,
            });
        }
    }
    report
}
