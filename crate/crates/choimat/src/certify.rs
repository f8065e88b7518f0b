//! Optimization-backed certificates: block positivity via a see-saw over
//! product vectors, the alpha norm via exact reduction of its inner
//! maximization to a trace norm, and PSD / CP / coCP checks.
//!
//! A found witness is a proof of non-block-positivity; absence of a witness
//! after the restart budget is evidence only, and the certificate says which
//! of the two it carries. All searches are deterministic for a fixed seed:
//! restart r uses seed+r, restarts may run in parallel, and the reduction to
//! a single result is by value with ties broken by lowest restart index.

use crate::linalg::{
    eig_hermitian, partial_transpose, BipartiteOperator, Complex64, ComplexMatrix, ComplexVector,
    EigenSystem, Factor, STRUCTURAL_TOL,
};
use crate::Error;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

/// Outcome of the block-positivity search. `min_value_found` is the best
/// (lowest) product-vector value seen over all restarts; the witness vectors
/// are present exactly when that value is below the caller's tolerance.
#[derive(Debug, Clone)]
pub struct BlockPositivityCertificate {
    pub min_value_found: f64,
    pub witness_x: Option<ComplexVector>,
    pub witness_y: Option<ComplexVector>,
    pub restarts_used: usize,
    pub converged_restarts: usize,
}

impl BlockPositivityCertificate {
    pub fn has_witness(&self) -> bool {
        self.witness_x.is_some()
    }
}

/// Outcome of the alpha-norm ascent, with the maximizing projector vector
/// and the exact optimal symmetry for it.
#[derive(Debug, Clone)]
pub struct AlphaNormEstimate {
    pub value: f64,
    pub maximizer_y: ComplexVector,
    pub maximizer_symmetry: ComplexMatrix,
    pub restarts_used: usize,
}

/// True iff the smallest eigenvalue is at least -tol.
pub fn is_psd(m: &ComplexMatrix, tol: f64) -> Result<bool, Error> {
    let eig = eig_hermitian(m)?;
    Ok(eig.eigenvalues.first().map_or(true, |&l| l >= -tol))
}

/// Sum of eigenvalue moduli of a Hermitian matrix.
pub fn trace_norm_hermitian(m: &ComplexMatrix) -> Result<f64, Error> {
    let eig = eig_hermitian(m)?;
    Ok(eig.eigenvalues.iter().map(|l| l.abs()).sum())
}

/// Complex standard Gaussian vector, normalized.
pub fn random_unit_vector(n: usize, rng: &mut impl Rng) -> ComplexVector {
    loop {
        let v = ComplexVector::new(
            (0..n)
                .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
                .collect(),
        );
        if v.norm() > 1e-6 {
            return v.normalized();
        }
    }
}

/// Contract one factor of rho against the projector onto `v`.
///
/// `Factor::Second` returns B(y) = Tr_2(rho (1 tensor P_y)), the dim1-square
/// matrix with (x, B(y) x) = (x tensor y, rho x tensor y); `Factor::First`
/// returns A(x) = Tr_1(rho (P_x tensor 1)) on the second factor.
pub fn contraction(
    rho: &BipartiteOperator,
    v: &ComplexVector,
    side: Factor,
) -> Result<ComplexMatrix, Error> {
    let (n, m) = (rho.dim1, rho.dim2);
    match side {
        Factor::Second => {
            if v.len() != m {
                return Err(Error::DimensionMismatch(format!(
                    "contraction vector has length {}, second factor has dimension {m}",
                    v.len()
                )));
            }
            Ok(ComplexMatrix::from_fn(n, n, |i, j| {
                let mut acc = Complex64::new(0.0, 0.0);
                for k in 0..m {
                    for l in 0..m {
                        acc += v[k].conj() * rho.matrix[(i * m + k, j * m + l)] * v[l];
                    }
                }
                acc
            }))
        }
        Factor::First => {
            if v.len() != n {
                return Err(Error::DimensionMismatch(format!(
                    "contraction vector has length {}, first factor has dimension {n}",
                    v.len()
                )));
            }
            Ok(ComplexMatrix::from_fn(m, m, |k, l| {
                let mut acc = Complex64::new(0.0, 0.0);
                for i in 0..n {
                    for j in 0..n {
                        acc += v[i].conj() * rho.matrix[(i * m + k, j * m + l)] * v[j];
                    }
                }
                acc
            }))
        }
    }
}

struct BpRestart {
    value: f64,
    x: ComplexVector,
    y: ComplexVector,
    converged: bool,
}

fn bp_descend(
    rho: &BipartiteOperator,
    mut x: ComplexVector,
    mut y: ComplexVector,
    max_iters: usize,
    tol: f64,
) -> BpRestart {
    let mut value = rho.product_form(&x, &y).re;
    let mut converged = false;
    for _ in 0..max_iters {
        let b = contraction(rho, &y, Factor::Second).expect("dimensions fixed by caller");
        let eb = eig_hermitian(&b).expect("contraction of a Hermitian operator is Hermitian");
        x = eb.eigenvector(0);
        let a = contraction(rho, &x, Factor::First).expect("dimensions fixed by caller");
        let ea = eig_hermitian(&a).expect("contraction of a Hermitian operator is Hermitian");
        y = ea.eigenvector(0);
        let new_value = ea.eigenvalues[0];
        debug_assert!(
            new_value <= value + 1e-10,
            "see-saw objective increased: {value} -> {new_value}"
        );
        let drop = value - new_value;
        value = new_value;
        if drop < tol / 10.0 {
            converged = true;
            break;
        }
    }
    BpRestart {
        value,
        x,
        y,
        converged,
    }
}

/// See-saw search for a product vector making (x tensor y, rho x tensor y)
/// negative. Alternates exact minimization in x (lowest eigenvector of B(y))
/// and in y (lowest eigenvector of A(x)); the objective is non-increasing at
/// every half-step. A witness is emitted when the best value over all
/// restarts drops below -tol.
pub fn block_positivity(
    rho: &BipartiteOperator,
    restarts: usize,
    max_iters: usize,
    tol: f64,
    seed: u64,
) -> BlockPositivityCertificate {
    assert!(
        rho.is_hermitian(STRUCTURAL_TOL),
        "block positivity needs a Hermitian operator"
    );
    let outcomes: Vec<BpRestart> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(r as u64));
            let x0 = random_unit_vector(rho.dim1, &mut rng);
            let y0 = random_unit_vector(rho.dim2, &mut rng);
            bp_descend(rho, x0, y0, max_iters, tol)
        })
        .collect();

    let converged_restarts = outcomes.iter().filter(|o| o.converged).count();
    let mut best: Option<&BpRestart> = None;
    for o in &outcomes {
        if best.map_or(true, |b| o.value < b.value) {
            best = Some(o);
        }
    }
    match best {
        None => BlockPositivityCertificate {
            min_value_found: f64::INFINITY,
            witness_x: None,
            witness_y: None,
            restarts_used: 0,
            converged_restarts: 0,
        },
        Some(b) => {
            let witness = b.value < -tol;
            if witness {
                let recomputed = rho.product_form(&b.x, &b.y).re;
                debug_assert!((recomputed - b.value).abs() <= 1e-10);
            }
            BlockPositivityCertificate {
                min_value_found: b.value,
                witness_x: witness.then(|| b.x.clone()),
                witness_y: witness.then(|| b.y.clone()),
                restarts_used: restarts,
                converged_restarts,
            }
        }
    }
}

/// s = sign(B) from an eigendecomposition of B, kernel completed by +1.
fn sign_symmetry(eig: &EigenSystem) -> ComplexMatrix {
    let n = eig.eigenvalues.len();
    let mut s = ComplexMatrix::zeros(n, n);
    for k in 0..n {
        let sign = if eig.eigenvalues[k] < 0.0 { -1.0 } else { 1.0 };
        let v = eig.eigenvector(k);
        for i in 0..n {
            for j in 0..n {
                s[(i, j)] += v[i] * v[j].conj() * Complex64::new(sign, 0.0);
            }
        }
    }
    s
}

/// D(s) with (y, D(s) y) = Tr(rho (s tensor P_y)): D[k,l] = sum_ij s[j,i] rho[(i,k),(j,l)].
fn symmetry_contraction(rho: &BipartiteOperator, s: &ComplexMatrix) -> ComplexMatrix {
    let (n, m) = (rho.dim1, rho.dim2);
    ComplexMatrix::from_fn(m, m, |k, l| {
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                acc += s[(j, i)] * rho.matrix[(i * m + k, j * m + l)];
            }
        }
        acc
    })
}

struct AlphaRestart {
    value: f64,
    y: ComplexVector,
    s: ComplexMatrix,
}

fn alpha_ascend(
    rho: &BipartiteOperator,
    mut y: ComplexVector,
    max_iters: usize,
) -> AlphaRestart {
    let mut value = -1.0;
    let mut s = ComplexMatrix::identity(rho.dim1);
    for _ in 0..max_iters {
        let b = contraction(rho, &y, Factor::Second).expect("dimensions fixed by caller");
        let eb = eig_hermitian(&b).expect("contraction of a Hermitian operator is Hermitian");
        let new_value: f64 = eb.eigenvalues.iter().map(|l| l.abs()).sum();
        s = sign_symmetry(&eb);
        debug_assert!(
            new_value >= value - 1e-10,
            "alpha ascent decreased: {value} -> {new_value}"
        );
        let gain = new_value - value;
        value = new_value;
        if gain < 1e-13 {
            break;
        }
        // With s fixed, Tr(rho s tensor P_y) = (y, D(s) y); the best y is the
        // eigenvector of the extreme eigenvalue of D(s).
        let d = symmetry_contraction(rho, &s);
        let ed = eig_hermitian(&d).expect("D(s) of a Hermitian operator is Hermitian");
        let lo = ed.eigenvalues[0];
        let hi = ed.eigenvalues[ed.eigenvalues.len() - 1];
        y = if hi.abs() >= lo.abs() {
            ed.eigenvector(ed.eigenvalues.len() - 1)
        } else {
            ed.eigenvector(0)
        };
    }
    AlphaRestart { value, y, s }
}

/// Alpha norm of a Hermitian bipartite operator with equal factor
/// dimensions: max over symmetries s and rank-one projectors P_y of
/// |Tr(rho s tensor P_y)|.
///
/// The inner maximization over s is exact for fixed y: writing s = 1 - 2q
/// and optimizing over projectors q gives exactly the trace norm of B(y), so
/// the search is a monotone ascent of f(y) = ||B(y)||_1 on the unit sphere.
pub fn alpha_norm(
    rho: &BipartiteOperator,
    restarts: usize,
    max_iters: usize,
    seed: u64,
) -> AlphaNormEstimate {
    assert_eq!(rho.dim1, rho.dim2, "alpha norm needs equal factor dimensions");
    assert!(
        rho.is_hermitian(STRUCTURAL_TOL),
        "alpha norm needs a Hermitian operator"
    );
    assert!(restarts >= 1, "alpha norm needs at least one restart");
    let outcomes: Vec<AlphaRestart> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(r as u64));
            let y0 = random_unit_vector(rho.dim2, &mut rng);
            alpha_ascend(rho, y0, max_iters)
        })
        .collect();

    let mut best = &outcomes[0];
    for o in &outcomes[1..] {
        if o.value > best.value {
            best = o;
        }
    }
    AlphaNormEstimate {
        value: best.value,
        maximizer_y: best.y.clone(),
        maximizer_symmetry: best.s.clone(),
        restarts_used: restarts,
    }
}

/// True iff the operator is the Choi matrix of a completely positive map,
/// i.e. PSD as a matrix.
pub fn is_cp(rho: &BipartiteOperator, tol: f64) -> Result<bool, Error> {
    is_psd(&rho.matrix, tol)
}

/// True iff the partial transpose is PSD (Choi matrix of a completely
/// copositive map).
pub fn is_cocp(rho: &BipartiteOperator, tol: f64) -> Result<bool, Error> {
    is_psd(&partial_transpose(rho).matrix, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::choi::{max_entangled_choi, transposition_choi};
    use crate::choi_family::w_minus;
    use crate::linalg::kron;

    fn seeded_rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> ComplexMatrix {
        let a = ComplexMatrix::from_fn(n, n, |_, _| {
            Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        });
        (&a + &a.adjoint()).scaled_re(0.5)
    }

    #[test]
    fn is_psd_basics() {
        let m = ComplexMatrix::from_real_rows(&[&[1.0, 0.0], &[0.0, 0.0]]);
        assert!(is_psd(&m, 1e-9).unwrap());
        let m = ComplexMatrix::from_real_rows(&[&[1.0, 0.0], &[0.0, -1e-6]]);
        assert!(!is_psd(&m, 1e-9).unwrap());
        let w = transposition_choi(3);
        assert!(!is_psd(&w.matrix, 1e-9).unwrap());
        let bad = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]);
        assert!(matches!(is_psd(&bad, 1e-9), Err(Error::NotHermitian)));
    }

    #[test]
    fn contraction_of_product_operator() {
        let mut rng = seeded_rng(11);
        let a = random_hermitian(&mut rng, 3);
        let b = random_hermitian(&mut rng, 3);
        let rho = BipartiteOperator::new(3, 3, kron(&a, &b));
        let y = random_unit_vector(3, &mut rng);
        let by = contraction(&rho, &y, Factor::Second).unwrap();
        let scal = y.inner(&b.apply(&y));
        assert!(by.max_abs_diff(&a.scaled(scal)) < 1e-12);
        let x = random_unit_vector(3, &mut rng);
        let ax = contraction(&rho, &x, Factor::First).unwrap();
        let scal = x.inner(&a.apply(&x));
        assert!(ax.max_abs_diff(&b.scaled(scal)) < 1e-12);
    }

    #[test]
    fn contraction_entries_for_sign_flipped_swap() {
        // block(i,j) of w-minus is eps_ij E_ji, so B(y)[k,l] = eps_kl y_k conj(y_l).
        let rho = w_minus();
        let mut rng = seeded_rng(12);
        let y = random_unit_vector(3, &mut rng);
        let by = contraction(&rho, &y, Factor::Second).unwrap();
        for k in 0..3 {
            for l in 0..3 {
                let eps = if k == l { 1.0 } else { -1.0 };
                let expect = y[k] * y[l].conj() * Complex64::new(eps, 0.0);
                assert!((by[(k, l)] - expect).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn contraction_matches_quadratic_form() {
        let mut rng = seeded_rng(13);
        for _ in 0..20 {
            let h = random_hermitian(&mut rng, 9);
            let rho = BipartiteOperator::new(3, 3, h);
            let x = random_unit_vector(3, &mut rng);
            let y = random_unit_vector(3, &mut rng);
            let by = contraction(&rho, &y, Factor::Second).unwrap();
            let lhs = x.inner(&by.apply(&x));
            let rhs = rho.product_form(&x, &y);
            assert!((lhs - rhs).norm() < 1e-12);
            let ax = contraction(&rho, &x, Factor::First).unwrap();
            let lhs = y.inner(&ax.apply(&y));
            assert!((lhs - rhs).norm() < 1e-12);
        }
    }

    #[test]
    fn swap_is_block_positive_and_sign_flip_is_not() {
        let w = transposition_choi(3);
        let cert = block_positivity(&w, 40, 200, 1e-9, 0);
        assert!(cert.min_value_found >= -1e-10);
        assert!(!cert.has_witness());
        assert_eq!(cert.restarts_used, 40);

        let wm = w_minus();
        let cert = block_positivity(&wm, 40, 200, 1e-9, 0);
        assert!(cert.has_witness());
        assert!(cert.min_value_found <= -0.25 + 1e-9);
        let x = cert.witness_x.as_ref().unwrap();
        let y = cert.witness_y.as_ref().unwrap();
        assert!((x.norm() - 1.0).abs() < 1e-12);
        assert!((y.norm() - 1.0).abs() < 1e-12);
        let recomputed = wm.product_form(x, y).re;
        assert!((recomputed - cert.min_value_found).abs() <= 1e-10);
    }

    #[test]
    fn seeded_product_vector_hits_minus_quarter() {
        let wm = w_minus();
        let inv = 1.0 / 2.0_f64.sqrt();
        let v = ComplexVector::from_real(&[0.5, inv, 0.5]);
        let value = wm.product_form(&v, &v).re;
        assert!((value + 0.25).abs() < 1e-12);
    }

    #[test]
    fn block_positivity_is_deterministic() {
        let wm = w_minus();
        let a = block_positivity(&wm, 16, 200, 1e-9, 7);
        let b = block_positivity(&wm, 16, 200, 1e-9, 7);
        assert_eq!(a.min_value_found, b.min_value_found);
        assert_eq!(a.witness_x.as_ref().map(|v| &v.data), b.witness_x.as_ref().map(|v| &v.data));
        assert_eq!(a.converged_restarts, b.converged_restarts);
    }

    #[test]
    fn alpha_norm_of_canonical_operators() {
        let wm = w_minus();
        let est = alpha_norm(&wm, 60, 200, 0);
        assert!((est.value - 5.0 / 3.0).abs() < 1e-6, "got {}", est.value);

        let w = transposition_choi(3);
        let est = alpha_norm(&w, 20, 200, 0);
        assert!((est.value - 1.0).abs() < 1e-9);
    }

    #[test]
    fn alpha_maximizers_reproduce_value() {
        let wm = w_minus();
        let est = alpha_norm(&wm, 40, 200, 1);
        // s tensor P_y recomputation.
        let py = est.maximizer_y.outer(&est.maximizer_y);
        let traced = (&kron(&est.maximizer_symmetry, &py) * &wm.matrix).trace();
        assert!((traced.norm() - est.value).abs() < 1e-9);
        // Symmetry is an involution.
        let s2 = &est.maximizer_symmetry * &est.maximizer_symmetry;
        assert!(s2.max_abs_diff(&ComplexMatrix::identity(3)) < 1e-12);
        // Optimality of s given y: value at least |Tr(rho (1 tensor P_y))|.
        let plain = (&kron(&ComplexMatrix::identity(3), &py) * &wm.matrix).trace();
        assert!(est.value >= plain.norm() - 1e-12);
    }

    #[test]
    fn inner_maximization_equals_trace_norm() {
        // max_k |Tr B - 2 (sum of k extreme eigenvalues)| over both ends
        // must equal the trace norm exactly.
        let mut rng = seeded_rng(14);
        for _ in 0..100 {
            let h = random_hermitian(&mut rng, 9);
            let rho = BipartiteOperator::new(3, 3, h);
            let y = random_unit_vector(3, &mut rng);
            let b = contraction(&rho, &y, Factor::Second).unwrap();
            let eig = eig_hermitian(&b).unwrap();
            let tr: f64 = eig.eigenvalues.iter().sum();
            let tn: f64 = eig.eigenvalues.iter().map(|l| l.abs()).sum();
            let n = eig.eigenvalues.len();
            let mut bestval = 0.0_f64;
            for k in 0..=n {
                let low: f64 = eig.eigenvalues[..k].iter().sum();
                let high: f64 = eig.eigenvalues[n - k..].iter().sum();
                bestval = bestval.max((tr - 2.0 * low).abs()).max((tr - 2.0 * high).abs());
            }
            assert!((bestval - tn).abs() < 1e-12);
        }
    }

    #[test]
    fn cp_and_cocp_of_swap_and_max_entangled() {
        let w = transposition_choi(3);
        assert!(!is_cp(&w, 1e-9).unwrap());
        assert!(is_cocp(&w, 1e-9).unwrap());
        let me = max_entangled_choi(3);
        assert!(is_cp(&me, 1e-9).unwrap());
        assert!(!is_cocp(&me, 1e-9).unwrap());
    }

    #[test]
    fn zero_restart_budget_reports_inconclusive_search() {
        let w = transposition_choi(3);
        let cert = block_positivity(&w, 0, 200, 1e-9, 0);
        assert_eq!(cert.restarts_used, 0);
        assert!(!cert.has_witness());
        assert!(cert.min_value_found.is_infinite());
    }
}
