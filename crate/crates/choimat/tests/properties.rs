//! Cross-module property checks: invariants that tie the optimizer, the
//! Choi bridge, and the symmetry pipeline together on randomized inputs.

use choimat::arveson::{arveson_extreme_check, weak_independence, ArvesonDecomposition, ExtremalityVerdict};
use choimat::certify::{alpha_norm, random_unit_vector};
use choimat::choi::{
    apply_choi, max_entangled_choi, membership_d, product_with_identity, transposition_choi,
    MembershipVerdict,
};
use choimat::choi_family::{choi_map_classic, r_matrix, rho_lambda};
use choimat::classify2::{classify_regular_extreme_2, CanonicalForm2, Classification2};
use choimat::linalg::{
    partial_trace, partial_transpose, random_unitary, BipartiteOperator, Complex64,
    ComplexMatrix, ComplexVector, Factor,
};
use choimat::schmidt::{overlap, schmidt};
use choimat::symmetry::{
    classify_involution, random_symmetry_in_d, triple_reflection_symmetry, InvolutionKind,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

fn member_fixtures() -> Vec<(&'static str, BipartiteOperator)> {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let p = random_unit_vector(3, &mut rng);
    vec![
        ("transposition", transposition_choi(3)),
        ("cyclic shift", r_matrix()),
        ("classic partial transpose", partial_transpose(&choi_map_classic())),
        ("segment midpoint", rho_lambda(0.5).unwrap()),
        ("segment interior", rho_lambda(0.8).unwrap()),
        ("maximally entangled", max_entangled_choi(3)),
        ("marginal projector", product_with_identity(&p.outer(&p), 3).unwrap()),
        ("random symmetry", random_symmetry_in_d(3, 2024)),
        ("triple reflection", triple_reflection_symmetry()),
    ]
}

#[test]
fn alpha_norm_is_one_across_membership_fixtures() {
    for (idx, (name, rho)) in member_fixtures().into_iter().enumerate() {
        let estimate = alpha_norm(&rho, 40, 200, 600 + idx as u64);
        assert!(
            (estimate.value - 1.0).abs() <= 1e-6,
            "{name}: alpha norm came out as {}",
            estimate.value
        );
    }
}

#[test]
fn segment_maps_are_unital() {
    let eye = ComplexMatrix::identity(3);
    for k in 0..=10 {
        let lambda = k as f64 / 10.0;
        let choi = partial_transpose(&rho_lambda(lambda).unwrap());
        let image = apply_choi(&choi, &eye).unwrap();
        assert!(
            image.max_abs_diff(&eye) <= 1e-12,
            "map at lambda = {lambda} is not unital"
        );
    }
}

#[test]
fn partial_traces_preserve_trace_and_hermiticity() {
    let mut rng = ChaCha8Rng::seed_from_u64(88);
    for _ in 0..100 {
        let raw = random_matrix(&mut rng, 9, 9);
        let op = BipartiteOperator::new(3, 3, raw);
        for factor in [Factor::First, Factor::Second] {
            let marginal = partial_trace(&op, factor);
            let gap = (marginal.trace() - op.trace()).norm();
            assert!(gap <= 1e-12, "trace drifted by {gap}");
        }

        let herm_raw = {
            let g = random_matrix(&mut rng, 9, 9);
            (&g + &g.adjoint()).scaled_re(0.5)
        };
        let herm = BipartiteOperator::new(3, 3, herm_raw);
        for factor in [Factor::First, Factor::Second] {
            let marginal = partial_trace(&herm, factor);
            assert!(marginal.max_abs_diff(&marginal.adjoint()) <= 1e-12);
        }
    }
}

#[test]
fn overlap_bound_is_strict_off_the_top_span() {
    let mut rng = ChaCha8Rng::seed_from_u64(4096);
    let mut checked = 0;
    while checked < 300 {
        let x = random_unit_vector(9, &mut rng);
        let dec = schmidt(&x, 3, 3, 1e-9).unwrap();
        if dec.coefficients.len() < 2 || dec.coefficients[0] - dec.coefficients[1] < 0.05 {
            continue;
        }
        let z = dec.right_vectors[0]
            .add(&dec.right_vectors[1])
            .normalized();
        let bound = dec.max_coefficient().powi(2);
        let value = overlap(&x, &z).unwrap();
        assert!(
            value < bound - 1e-12,
            "mixing in a smaller coefficient's vector must lose strictly: {value} vs {bound}"
        );
        checked += 1;
    }
}

#[test]
fn symmetry_involutions_round_trip_and_avoid_product_directions() {
    let mut rng = ChaCha8Rng::seed_from_u64(5150);
    let bound = 1.0 / 2f64.sqrt();
    for seed in 0..50 {
        let s = random_symmetry_in_d(3, 3000 + seed);
        assert!((s.trace().re - 3.0).abs() <= 1e-10);
        let class = classify_involution(&s.matrix, 1e-9);
        assert_eq!(class.kind, InvolutionKind::Symmetry);
        assert_eq!(class.support_rank, 9);

        let diff = &class.p - &class.q;
        assert!(diff.max_abs_diff(&s.matrix) <= 1e-12, "p - q must rebuild s");
        assert!(class.p.max_abs_diff(&(&class.p * &class.p)) <= 1e-10);
        assert!(class.q.max_abs_diff(&(&class.q * &class.q)) <= 1e-10);
        assert!((&class.p * &class.q).max_abs() <= 1e-10);
        assert!((class.q.trace().re - 3.0).abs() <= 1e-9, "q must project on three dimensions");

        // Every vector in range(q) keeps Schmidt rank two: its best overlap
        // with any product direction stays at one half.
        for _ in 0..20 {
            let g = ComplexVector::new(
                (0..9)
                    .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
                    .collect(),
            );
            let v = class.q.apply(&g).normalized();
            let dec = schmidt(&v, 3, 3, 1e-9).unwrap();
            assert!(dec.max_coefficient() <= bound + 1e-9);
            for _ in 0..10 {
                let a = random_unit_vector(3, &mut rng);
                let b = random_unit_vector(3, &mut rng);
                let product_overlap = a.tensor(&b).inner(&v).norm_sqr();
                assert!(product_overlap <= 0.5 + 1e-9);
            }
        }
    }
}

#[test]
fn coefficient_budget_decides_membership() {
    let mut rng = ChaCha8Rng::seed_from_u64(271828);
    for trial in 0..25 {
        let u = random_unitary(2, &mut rng);
        let c0: f64 = rng.gen::<f64>();

        // Admissible pair: c0 + |c| <= 1 gives a convex mixture of members.
        let small = (1.0 - c0) * rng.gen::<f64>();
        let admissible = Classification2 {
            form: CanonicalForm2::Entangled,
            y1: u.column(0),
            y2: u.column(1),
            c0,
            c: Complex64::from_polar(small, rng.gen::<f64>() * std::f64::consts::TAU),
        }
        .canonical_matrix();
        let report = membership_d(&admissible, 60, 9000 + trial);
        assert_eq!(report.verdict, MembershipVerdict::Member);

        // Oversized pair: c0 + |c| > 1 forces a block-positivity witness.
        let big = (1.0 - c0) + 0.05 + 0.5 * rng.gen::<f64>();
        let oversized = Classification2 {
            form: CanonicalForm2::Entangled,
            y1: u.column(0),
            y2: u.column(1),
            c0,
            c: Complex64::from_polar(big, rng.gen::<f64>() * std::f64::consts::TAU),
        }
        .canonical_matrix();
        let cls = classify_regular_extreme_2(&oversized, 1e-8).unwrap();
        assert!(cls.c0 + cls.c.norm() > 1.0);
        let report = membership_d(&oversized, 60, 9500 + trial);
        assert_eq!(report.verdict, MembershipVerdict::NonMember);
        assert!(report.block_positive.has_witness());
    }
}

#[test]
fn orthogonal_projector_partitions_stay_extreme() {
    let mut rng = ChaCha8Rng::seed_from_u64(1729);
    let partitions: [&[&[usize]]; 3] = [
        &[&[0], &[1], &[2]],
        &[&[0, 1], &[2]],
        &[&[0, 1, 2]],
    ];
    for trial in 0..20 {
        let u = random_unitary(3, &mut rng);
        let partition = partitions[trial % partitions.len()];
        let operators: Vec<ComplexMatrix> = partition
            .iter()
            .map(|cols| {
                let mut k = ComplexMatrix::zeros(3, 3);
                for &c in cols.iter() {
                    let v = u.column(c);
                    k = &k + &v.outer(&v);
                }
                k
            })
            .collect();
        let family = ArvesonDecomposition::new(operators);
        assert!(weak_independence(&family, 1e-9));
        assert_eq!(arveson_extreme_check(&family, 1e-9), ExtremalityVerdict::Extreme);
    }
}
