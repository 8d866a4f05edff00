//! Property tests for the cross-cutting invariants: file round-trips,
//! verdict invariances, structural scale invariance, and ladder
//! monotonicity.

use ndarray::{Array1, Array2};
use proptest::prelude::*;

use fattorini::criteria::{check_admissible, minimal_k, ActuatorFamily};
use fattorini::io::{
    read_csv_matrix, read_matrix_market, write_csv_matrix, write_matrix_market,
    MatrixMarketLayout,
};
use fattorini::models::{ActuatorKind, InputModel};
use fattorini::numeric::{frob, DEFAULT_CLUSTER_TOL};
use fattorini::spectral::compute_spectrum;

fn finite_entry() -> impl Strategy<Value = f64> {
    prop_oneof![
        -1e6..1e6f64,
        Just(0.0),
        Just(1.0),
        Just(-1.0),
        -1e-6..1e-6f64,
    ]
}

fn small_matrix(max_dim: usize) -> impl Strategy<Value = Array2<f64>> {
    (1..=max_dim, 1..=max_dim).prop_flat_map(|(r, c)| {
        proptest::collection::vec(finite_entry(), r * c)
            .prop_map(move |data| Array2::from_shape_vec((r, c), data).unwrap())
    })
}

fn square_matrix(max_dim: usize) -> impl Strategy<Value = Array2<f64>> {
    (2..=max_dim).prop_flat_map(|n| {
        proptest::collection::vec(-10.0..10.0f64, n * n)
            .prop_map(move |data| Array2::from_shape_vec((n, n), data).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn matrix_market_array_roundtrip(m in small_matrix(6)) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.mtx");
        write_matrix_market(&path, &m, MatrixMarketLayout::Array).unwrap();
        let back = read_matrix_market(&path).unwrap();
        prop_assert_eq!(m, back);
    }

    #[test]
    fn matrix_market_coordinate_roundtrip(m in small_matrix(6)) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.mtx");
        write_matrix_market(&path, &m, MatrixMarketLayout::Coordinate).unwrap();
        let back = read_matrix_market(&path).unwrap();
        prop_assert_eq!(m, back);
    }

    #[test]
    fn csv_roundtrip(m in small_matrix(6)) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        write_csv_matrix(&path, &m).unwrap();
        let back = read_csv_matrix(&path).unwrap();
        prop_assert_eq!(m, back);
    }

    #[test]
    fn spectral_structure_is_scale_invariant(a in square_matrix(6)) {
        let norm = frob(&a);
        prop_assume!(norm > 1e-6);
        let sp1 = compute_spectrum(&a, DEFAULT_CLUSTER_TOL);
        let scaled = a.mapv(|v| v / norm);
        let sp2 = compute_spectrum(&scaled, DEFAULT_CLUSTER_TOL);
        let (sp1, sp2) = match (sp1, sp2) {
            (Ok(x), Ok(y)) => (x, y),
            // clustering can legitimately reject pathological inputs
            _ => return Ok(()),
        };
        prop_assume!(sp1.clusters.len() == sp2.clusters.len());
        for (c1, c2) in sp1.clusters.iter().zip(&sp2.clusters) {
            prop_assert_eq!(c1.algebraic_mult, c2.algebraic_mult);
            prop_assert_eq!(c1.geometric_mult, c2.geometric_mult);
            prop_assert_eq!(c1.jordan_depth, c2.jordan_depth);
        }
    }

    #[test]
    fn admissibility_invariant_under_recombination(
        seed in 0u64..1000,
        scale in prop_oneof![Just(7.0), Just(-3.0), Just(0.25)],
        mix in -2.0..2.0f64,
    ) {
        use rand::SeedableRng;
        use rand_distr::{Distribution, StandardNormal};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let normal = StandardNormal;
        let n = 8;
        let a = Array2::from_shape_fn((n, n), |_| {
            let g: f64 = normal.sample(&mut rng);
            g
        });
        let b = InputModel {
            matrix: Array2::from_shape_fn((n, 3), |_| {
                let g: f64 = normal.sample(&mut rng);
                g
            }),
            support: (0..n).collect(),
            kind: ActuatorKind::Custom,
        };
        let sp = compute_spectrum(&a, DEFAULT_CLUSTER_TOL).unwrap();
        let v = ActuatorFamily::new(vec![
            Array1::from_shape_fn(3, |_| { let g: f64 = normal.sample(&mut rng); g }),
            Array1::from_shape_fn(3, |_| { let g: f64 = normal.sample(&mut rng); g }),
        ]).unwrap();
        let base = check_admissible(&b, &v, &sp, None).unwrap();
        // nonzero scaling of one direction
        let scaled = ActuatorFamily::new(vec![
            v.vectors[0].mapv(|x| x * scale),
            v.vectors[1].clone(),
        ]).unwrap();
        let rs = check_admissible(&b, &scaled, &sp, None).unwrap();
        prop_assert_eq!(base.overall_admissible, rs.overall_admissible);
        // invertible recombination [[1, mix], [0, 1]]
        let mixed = ActuatorFamily::new(vec![
            &v.vectors[0] + &v.vectors[1].mapv(|x| x * mix),
            v.vectors[1].clone(),
        ]).unwrap();
        let rm = check_admissible(&b, &mixed, &sp, None).unwrap();
        prop_assert_eq!(base.overall_admissible, rm.overall_admissible);
    }

    #[test]
    fn minimal_k_monotone_in_sigma(seed in 0u64..500, s1 in 0.0..5.0f64, s2 in 0.0..5.0f64) {
        use rand::SeedableRng;
        use rand_distr::{Distribution, StandardNormal};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let normal = StandardNormal;
        let n = 6;
        let a = Array2::from_shape_fn((n, n), |_| {
            let g: f64 = normal.sample(&mut rng);
            g
        });
        let sp = compute_spectrum(&a, DEFAULT_CLUSTER_TOL).unwrap();
        let (lo, hi) = if s1 <= s2 { (s1, s2) } else { (s2, s1) };
        // smaller sigma selects fewer clusters, so the minimal family
        // size cannot grow
        prop_assert!(minimal_k(&sp, Some(lo)) <= minimal_k(&sp, Some(hi)));
    }
}

#[test]
fn nullity_ladder_is_monotone_and_stabilizes() {
    // triangular matrices with a repeated eigenvalue and random coupling:
    // the ladder of nullities of (A - lambda)^m is nondecreasing and
    // stabilizes exactly at the algebraic multiplicity
    use fattorini::numeric::{rank_from_singular_values, singular_values};
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};
    for seed in 0..20u64 {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let normal = StandardNormal;
        let n = 6;
        let mult = 2 + (seed as usize % 3);
        let mut a = Array2::zeros((n, n));
        for i in 0..n {
            a[[i, i]] = if i < mult { 2.0 } else { -3.0 - i as f64 };
            for j in (i + 1)..n {
                let g: f64 = normal.sample(&mut rng);
                a[[i, j]] = g;
            }
        }
        let sp = compute_spectrum(&a, DEFAULT_CLUSTER_TOL).unwrap();
        let cluster = sp
            .clusters
            .iter()
            .find(|c| (c.lambda.re - 2.0).abs() < 1e-6)
            .unwrap();
        assert_eq!(cluster.algebraic_mult, mult);
        // explicit ladder
        let mut shifted = a.clone();
        for i in 0..n {
            shifted[[i, i]] -= 2.0;
        }
        let mut power = Array2::<f64>::eye(n);
        let mut prev = 0;
        for m in 1..=mult + 1 {
            power = power.dot(&shifted);
            let sv = singular_values(&power).unwrap();
            let nullity = n - rank_from_singular_values(&sv, n, n);
            assert!(nullity >= prev, "seed {seed}, power {m}");
            assert!(nullity <= mult, "seed {seed}, power {m}");
            prev = nullity;
        }
        assert_eq!(prev, mult, "ladder must stabilize at the multiplicity");
        assert!(cluster.jordan_depth <= mult);
    }
}
