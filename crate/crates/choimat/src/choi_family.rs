//! A three-parameter family of unital maps on 3x3 matrices built from a
//! cyclic weighting of the diagonal, together with the operators it hangs
//! off: the sign-flipped swap, a permutation-type PSD operator, and the
//! segment between them whose membership switches exactly at the midpoint.

use crate::certify::block_positivity;
use crate::choi::{choi_of, MapImages};
use crate::linalg::{partial_transpose, BipartiteOperator, Complex64, ComplexMatrix};
use crate::Error;
use rayon::prelude::*;

/// Parameters (a, b, c) of the diagonal-cyclic map family. All three must
/// be finite and non-negative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChoiFamilyParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl ChoiFamilyParams {
    pub fn new(a: f64, b: f64, c: f64) -> Self {
        assert!(
            a.is_finite() && b.is_finite() && c.is_finite(),
            "parameters must be finite"
        );
        assert!(a >= 0.0 && b >= 0.0 && c >= 0.0, "parameters must be non-negative");
        ChoiFamilyParams { a, b, c }
    }
}

/// Images of the matrix units under the map
/// x |-> diag(a x11 + b x22 + c x33, a x22 + b x33 + c x11, a x33 + b x11 + c x22) - x.
///
/// Each diagonal unit E_kk maps to a diagonal matrix (the cyclic weighting
/// minus E_kk itself); each off-diagonal unit is negated.
pub fn phi_abc_images(params: ChoiFamilyParams) -> MapImages {
    let ChoiFamilyParams { a, b, c } = params;
    MapImages::from_fn(3, 3, move |k, l| {
        if k == l {
            let mut img = ComplexMatrix::zeros(3, 3);
            for i in 0..3 {
                let mut w = if i == k { a } else { 0.0 };
                if k == (i + 1) % 3 {
                    w += b;
                }
                if k == (i + 2) % 3 {
                    w += c;
                }
                if i == k {
                    w -= 1.0;
                }
                img[(i, i)] = Complex64::new(w, 0.0);
            }
            img
        } else {
            ComplexMatrix::unit(3, k, l).scaled_re(-1.0)
        }
    })
}

/// Exact positivity criterion for the family: a >= 1, a + b + c >= 3, and
/// bc >= (2-a)^2 whenever 1 <= a <= 2.
pub fn is_positive_abc(params: ChoiFamilyParams) -> bool {
    let ChoiFamilyParams { a, b, c } = params;
    if a < 1.0 || a + b + c < 3.0 {
        return false;
    }
    if (1.0..=2.0).contains(&a) {
        return b * c >= (2.0 - a) * (2.0 - a);
    }
    true
}

/// The sign-flipped swap: sum_ij eps_ij E_ij tensor E_ji with eps_ii = 1 and
/// eps_ij = -1 off the diagonal. A symmetry of trace 3 that is not block
/// positive.
pub fn w_minus() -> BipartiteOperator {
    BipartiteOperator::from_blocks(3, 3, |i, j| {
        let sign = if i == j { 1.0 } else { -1.0 };
        ComplexMatrix::unit(3, j, i).scaled_re(sign)
    })
}

/// r = E11 tensor E22 + E22 tensor E33 + E33 tensor E11: a PSD member of the
/// unital block-positive body supported on three product units.
pub fn r_matrix() -> BipartiteOperator {
    BipartiteOperator::from_blocks(3, 3, |i, j| {
        if i == j {
            ComplexMatrix::unit(3, (i + 1) % 3, (i + 1) % 3)
        } else {
            ComplexMatrix::zeros(3, 3)
        }
    })
}

/// The segment rho_lambda = lambda r + (1 - lambda) w_minus for
/// 0 <= lambda <= 1.
pub fn rho_lambda(lambda: f64) -> Result<BipartiteOperator, Error> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::OutOfRange(format!(
            "segment parameter must lie in [0, 1], got {lambda}"
        )));
    }
    let r = r_matrix();
    let wm = w_minus();
    let matrix = &r.matrix.scaled_re(lambda) + &wm.matrix.scaled_re(1.0 - lambda);
    Ok(BipartiteOperator::new(3, 3, matrix))
}

/// The classical member of the family: half the Choi matrix of the (2,0,1)
/// map. Hermitian, trace 3, unital.
pub fn choi_map_classic() -> BipartiteOperator {
    let rho = choi_of(&phi_abc_images(ChoiFamilyParams::new(2.0, 0.0, 1.0)));
    BipartiteOperator::new(3, 3, rho.matrix.scaled_re(0.5))
}

/// Witness level separating "certified violating" from "no violation found"
/// in the grid sweep: a product-vector value below this is counted as a
/// definite negative.
pub const SWEEP_WITNESS_LEVEL: f64 = -1e-6;

/// One grid point of the positivity sweep: the closed-form condition next
/// to the numerically certified value.
#[derive(Debug, Clone, Copy)]
pub struct SweepPoint {
    pub params: ChoiFamilyParams,
    pub condition: bool,
    pub certified_positive: bool,
    pub min_value: f64,
}

/// Outcome of the grid sweep over the (a, b, c) cube.
#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub points: Vec<SweepPoint>,
    pub disagreements: usize,
    pub skipped_boundary: usize,
}

/// True when the point sits within `margin` of the boundary of the
/// closed-form positivity region, where certification by search is
/// ill-conditioned (the true minimum approaches zero).
pub fn near_region_boundary(params: ChoiFamilyParams, margin: f64) -> bool {
    let ChoiFamilyParams { a, b, c } = params;
    if (a - 1.0).abs() <= margin || (a + b + c - 3.0).abs() <= margin {
        return true;
    }
    if a >= 1.0 - margin && a <= 2.0 + margin {
        let gap = b * c - (2.0 - a) * (2.0 - a);
        if gap.abs() <= margin {
            return true;
        }
    }
    false
}

/// Cross-check the closed-form positivity conditions against the
/// block-positivity certifier on the step-spaced grid over [0, 3]^3,
/// skipping points within `margin` of the region boundary.
///
/// Positivity of the map is certified through block positivity of the
/// partial transpose of its Choi matrix. Points run in parallel with
/// derived seeds; for each point the restart budget is spent in batches so
/// that a definitely-negative point can stop early, which reproduces
/// exactly the same restart streams as one full-budget call.
pub fn sweep_positivity_grid(
    step: f64,
    restarts: usize,
    margin: f64,
    seed: u64,
) -> SweepOutcome {
    assert!(step > 0.0 && step.is_finite());
    // Multiples of the step inside [0, 3]; the epsilon keeps exact divisors
    // like 0.25 from losing their endpoint to representation error.
    let count = (3.0 / step + 1e-9).floor() as usize + 1;
    let value = |i: usize| (i as f64) * step;

    let mut grid = Vec::new();
    let mut skipped_boundary = 0;
    for i in 0..count {
        for j in 0..count {
            for k in 0..count {
                let params = ChoiFamilyParams::new(value(i), value(j), value(k));
                if near_region_boundary(params, margin) {
                    skipped_boundary += 1;
                } else {
                    grid.push(params);
                }
            }
        }
    }

    let points: Vec<SweepPoint> = grid
        .into_par_iter()
        .enumerate()
        .map(|(idx, params)| {
            let point_seed = seed ^ (idx as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15);
            let rho = partial_transpose(&choi_of(&phi_abc_images(params)));
            let mut min_value = f64::INFINITY;
            let batch = 25;
            let mut spent = 0;
            while spent < restarts {
                let take = batch.min(restarts - spent);
                let cert = block_positivity(&rho, take, 200, 1e-9, point_seed + spent as u64);
                min_value = min_value.min(cert.min_value_found);
                spent += take;
                if min_value < SWEEP_WITNESS_LEVEL {
                    break;
                }
            }
            SweepPoint {
                params,
                condition: is_positive_abc(params),
                certified_positive: min_value >= SWEEP_WITNESS_LEVEL,
                min_value,
            }
        })
        .collect();

    let disagreements = points
        .iter()
        .filter(|pt| pt.condition != pt.certified_positive)
        .count();
    SweepOutcome {
        points,
        disagreements,
        skipped_boundary,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certify::is_psd;
    use crate::choi::{apply_choi, membership_d, MembershipVerdict};
    use crate::linalg::partial_transpose;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn random_matrix(rng: &mut ChaCha8Rng, n: usize) -> ComplexMatrix {
        ComplexMatrix::from_fn(n, n, |_, _| {
            Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        })
    }

    #[test]
    fn half_of_2_0_1_matches_printed_form() {
        let map = phi_abc_images(ChoiFamilyParams::new(2.0, 0.0, 1.0));
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let x = random_matrix(&mut rng, 3);
        let out = map.apply(&x).unwrap().scaled_re(0.5);
        let mut expect = x.scaled_re(-0.5);
        expect[(0, 0)] = (x[(0, 0)] + x[(2, 2)]) * 0.5;
        expect[(1, 1)] = (x[(1, 1)] + x[(0, 0)]) * 0.5;
        expect[(2, 2)] = (x[(2, 2)] + x[(1, 1)]) * 0.5;
        assert!(out.max_abs_diff(&expect) < 1e-14);
    }

    #[test]
    fn family_at_1_0_0_negates_off_diagonal() {
        let map = phi_abc_images(ChoiFamilyParams::new(1.0, 0.0, 0.0));
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let x = random_matrix(&mut rng, 3);
        let out = map.apply(&x).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j {
                    Complex64::new(0.0, 0.0)
                } else {
                    -x[(i, j)]
                };
                assert!((out[(i, j)] - expect).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn partial_transpose_of_2_0_0_choi_is_w_minus() {
        let rho = choi_of(&phi_abc_images(ChoiFamilyParams::new(2.0, 0.0, 0.0)));
        let flipped = partial_transpose(&rho);
        assert!(flipped.matrix.max_abs_diff(&w_minus().matrix) < 1e-15);
    }

    #[test]
    fn positivity_conditions_evaluate_as_printed() {
        assert!(is_positive_abc(ChoiFamilyParams::new(2.0, 0.0, 1.0)));
        assert!(is_positive_abc(ChoiFamilyParams::new(1.0, 1.0, 1.0)));
        assert!(!is_positive_abc(ChoiFamilyParams::new(2.0, 0.0, 0.5)));
        // Interior of the quadratic condition: a=1.5 needs bc >= 0.25.
        assert!(!is_positive_abc(ChoiFamilyParams::new(1.5, 1.6, 0.01)));
        assert!(is_positive_abc(ChoiFamilyParams::new(1.5, 1.0, 0.5)));
        // Above a=2 the quadratic condition is waived.
        assert!(is_positive_abc(ChoiFamilyParams::new(3.0, 0.0, 0.0)));
    }

    #[test]
    fn w_minus_is_a_traceless_off_diagonal_symmetry() {
        let wm = w_minus();
        assert!(wm.is_hermitian(1e-15));
        assert!((wm.trace().re - 3.0).abs() < 1e-15);
        let sq = &wm.matrix * &wm.matrix;
        assert!(sq.max_abs_diff(&ComplexMatrix::identity(9)) < 1e-15);
        for i in 0..3 {
            for j in 0..3 {
                let sign = if i == j { 1.0 } else { -1.0 };
                let expect = ComplexMatrix::unit(3, j, i).scaled_re(sign);
                assert!(wm.block(i, j).max_abs_diff(&expect) < 1e-15);
            }
        }
    }

    #[test]
    fn r_is_a_psd_member_with_identity_marginal() {
        let r = r_matrix();
        assert!(is_psd(&r.matrix, 1e-12).unwrap());
        assert!((r.trace().re - 3.0).abs() < 1e-15);
        let marginal = apply_choi(&r, &ComplexMatrix::identity(3)).unwrap();
        assert!(marginal.max_abs_diff(&ComplexMatrix::identity(3)) < 1e-15);
        let report = membership_d(&r, 30, 0);
        assert_eq!(report.verdict, MembershipVerdict::Member);
    }

    #[test]
    fn segment_endpoints_and_midpoint() {
        assert!(rho_lambda(0.0).unwrap().matrix.max_abs_diff(&w_minus().matrix) < 1e-15);
        assert!(rho_lambda(1.0).unwrap().matrix.max_abs_diff(&r_matrix().matrix) < 1e-15);
        let mid = rho_lambda(0.5).unwrap();
        let classic_flipped = partial_transpose(&choi_map_classic());
        assert!(mid.matrix.max_abs_diff(&classic_flipped.matrix) < 1e-15);
        assert!(matches!(rho_lambda(-0.1), Err(Error::OutOfRange(_))));
        assert!(matches!(rho_lambda(1.2), Err(Error::OutOfRange(_))));
        assert!(matches!(rho_lambda(f64::NAN), Err(Error::OutOfRange(_))));
    }

    #[test]
    fn segment_corresponds_to_rescaled_family_maps() {
        // tau_P(rho_lambda) is the Choi matrix of (1-lambda) phi_{2,0,lambda/(1-lambda)}.
        for lambda in [0.0, 0.25, 0.5, 0.7] {
            let seg = rho_lambda(lambda).unwrap();
            let c = lambda / (1.0 - lambda);
            let map = phi_abc_images(ChoiFamilyParams::new(2.0, 0.0, c));
            let scaled = choi_of(&map).matrix.scaled_re(1.0 - lambda);
            assert!(
                partial_transpose(&seg).matrix.max_abs_diff(&scaled) < 1e-14,
                "mismatch at lambda={lambda}"
            );
        }
        // The lambda=1 endpoint corresponds to the cyclic shift of the
        // diagonal rather than a finite parameter value.
        let r = r_matrix();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let x = random_matrix(&mut rng, 3);
        let out = apply_choi(&partial_transpose(&r), &x).unwrap();
        let mut expect = ComplexMatrix::zeros(3, 3);
        expect[(0, 0)] = x[(2, 2)];
        expect[(1, 1)] = x[(0, 0)];
        expect[(2, 2)] = x[(1, 1)];
        assert!(out.max_abs_diff(&expect) < 1e-15);
    }

    #[test]
    fn classic_member_structure() {
        let rho = choi_map_classic();
        assert!(rho.is_hermitian(1e-15));
        assert!((rho.trace().re - 3.0).abs() < 1e-15);
        let expect = ComplexMatrix::from_real_rows(&[
            &[0.5, 0.0, 0.0],
            &[0.0, 0.5, 0.0],
            &[0.0, 0.0, 0.0],
        ]);
        assert!(rho.block(0, 0).max_abs_diff(&expect) < 1e-15);
        let marginal = apply_choi(&rho, &ComplexMatrix::identity(3)).unwrap();
        assert!(marginal.max_abs_diff(&ComplexMatrix::identity(3)) < 1e-15);
        let report = membership_d(&rho, 40, 0);
        assert_eq!(report.verdict, MembershipVerdict::Member);
    }

    #[test]
    fn membership_flips_at_the_segment_midpoint() {
        for (lambda, expect) in [
            (0.3, MembershipVerdict::NonMember),
            (0.5, MembershipVerdict::Member),
            (0.8, MembershipVerdict::Member),
        ] {
            let rho = rho_lambda(lambda).unwrap();
            let report = membership_d(&rho, 30, 0);
            assert_eq!(report.verdict, expect, "verdict at lambda={lambda}");
        }
        // Below the midpoint the worst product value is -(1 - 2 lambda)/3.
        let report = membership_d(&rho_lambda(0.3).unwrap(), 30, 0);
        let expect = -(1.0 - 0.6) / 3.0;
        assert!((report.block_positive.min_value_found - expect).abs() < 1e-7);
    }

    #[test]
    fn coarse_sweep_agrees_with_closed_form() {
        let outcome = sweep_positivity_grid(1.0, 40, 1e-6, 0);
        assert_eq!(outcome.disagreements, 0);
        assert!(outcome.skipped_boundary > 0);
        for pt in &outcome.points {
            if pt.condition {
                assert!(pt.min_value >= -1e-9, "false witness at {:?}", pt.params);
            } else {
                assert!(
                    pt.min_value < SWEEP_WITNESS_LEVEL,
                    "missed witness at {:?}",
                    pt.params
                );
            }
        }
    }
}
