use proptest::prelude::*;
use sparsewire::diagnostics::{mutual_coherence, spark_bruteforce, welch_lower_bound, Spark};
use sparsewire::dictionary::{learn_dictionary_traced, TrainingSet};
use sparsewire::experiment::{read_csv, write_csv, CurvePoint, Metric};
use sparsewire::linalg::{select_columns, unitary_dft, CMatrix, CVector};
use sparsewire::matrix_io::{format_matrix, parse_matrix};
use sparsewire::mmv::{somp, MmvProblem};
use sparsewire::model::{
    make_complex_gaussian_matrix, make_gaussian_matrix, slice, synthesize_sparse_vector, Constellation, NoiseSpec,
    ValueLaw,
};
use sparsewire::solvers::{bpdn_prox, iht, kkt_violation, omp, sbl_em, SolverConfig};
use sparsewire::sparsity::{estimate_k_residual, inflate_k};
use sparsewire::wireless::{projection_matrix, selection_matrix, ImpulseConfig};
use sparsewire::RngStream;

fn config() -> ProptestConfig {
    ProptestConfig {
        cases: 24,
        ..ProptestConfig::default()
    }
}

/// A random complex system `(H, y)` with a `k`-sparse plant and light noise.
fn instance(seed: u64, m: usize, n: usize, k: usize) -> (CMatrix, CVector) {
    let mut rng = RngStream::new(seed, 0).rng();
    let h = make_complex_gaussian_matrix(m, n, 1.0 / m as f64, &mut rng).unwrap();
    let s = synthesize_sparse_vector(n, k, &ValueLaw::ComplexGaussian, &mut rng).unwrap();
    let y = &h * s.to_dense() + NoiseSpec::complex(1e-3).sample(m, &mut rng);
    (h, y)
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn omp_residual_monotone_and_orthogonal(seed in any::<u64>(), m in 8usize..24, k in 1usize..5) {
        let (h, y) = instance(seed, m, 2 * m, k);
        let r = omp(&h, &y, &SolverConfig::with_k(k)).unwrap();
        prop_assert!(r.residual_trace.windows(2).all(|w| w[1] <= w[0] + 1e-8 * w[0]));
        let resid = &y - &h * &r.estimate;
        let corr = select_columns(&h, &r.support).ad_mul(&resid);
        prop_assert!(corr.camax() <= 1e-8 * y.norm().max(1.0));
    }

    #[test]
    fn bpdn_satisfies_kkt(seed in any::<u64>(), m in 8usize..20, lambda in 0.01f64..0.3) {
        let (h, y) = instance(seed, m, 2 * m, 2);
        let cfg = SolverConfig { max_iterations: 100_000, tolerance: 1e-10, ..SolverConfig::with_lambda(lambda) };
        let r = bpdn_prox(&h, &y, &cfg).unwrap();
        prop_assert!(kkt_violation(&h, &y, &r.estimate, lambda) <= 1e-6);
        prop_assert!(r.objective_trace.windows(2).all(|w| w[1] <= w[0] + 1e-12 * w[0].abs().max(1.0)));
    }

    #[test]
    fn sbl_evidence_nondecreasing(seed in any::<u64>(), m in 8usize..20, k in 1usize..4) {
        let (h, y) = instance(seed, m, 2 * m, k);
        let cfg = SolverConfig { max_iterations: 200, ..SolverConfig::default() };
        let r = sbl_em(&h, &y, &cfg).unwrap();
        prop_assert!(r.objective_trace.windows(2).all(|w| w[1] >= w[0] - 1e-8 * w[0].abs().max(1.0)),
            "{:?}", r.objective_trace);
    }

    #[test]
    fn iht_one_step_exact_on_unitary(seed in any::<u64>(), n in 4usize..32, k in 1usize..4) {
        let mut rng = RngStream::new(seed, 0).rng();
        let h = unitary_dft(n);
        let s = synthesize_sparse_vector(n, k.min(n), &ValueLaw::ComplexGaussian, &mut rng).unwrap();
        let y = &h * s.to_dense();
        let cfg = SolverConfig { max_iterations: 1, ..SolverConfig::with_k(k.min(n)) };
        let r = iht(&h, &y, &cfg).unwrap();
        prop_assert!((&r.estimate - s.to_dense()).norm() <= 1e-10 * y.norm());
    }

    #[test]
    fn dictionary_fit_error_nonincreasing(seed in any::<u64>(), atoms in 4usize..10) {
        let mut rng = RngStream::new(seed, 0).rng();
        let x = make_complex_gaussian_matrix(6, 40, 1.0, &mut rng).unwrap();
        let x = TrainingSet::new(x).unwrap();
        let r = learn_dictionary_traced(&x, atoms, 2, 4, &mut rng).unwrap();
        prop_assert!(r.fit_trace.windows(2).all(|w| w[1] <= w[0] + 1e-8 * w[0].max(1.0)), "{:?}", r.fit_trace);
    }

    #[test]
    fn coherence_above_welch_bound(seed in any::<u64>(), m in 2usize..10, extra in 1usize..10) {
        let n = m + extra;
        let mut rng = RngStream::new(seed, 0).rng();
        let h = make_gaussian_matrix(m, n, 1.0, &mut rng).unwrap();
        prop_assert!(mutual_coherence(&h).unwrap() >= welch_lower_bound(m, n).unwrap() - 1e-12);
    }

    #[test]
    fn spark_exceeds_coherence_bound(seed in any::<u64>(), m in 2usize..5, extra in 1usize..5) {
        let n = m + extra;
        let mut rng = RngStream::new(seed, 0).rng();
        let h = make_gaussian_matrix(m, n, 1.0, &mut rng).unwrap();
        let mu = mutual_coherence(&h).unwrap();
        if let Spark::Value(spark) = spark_bruteforce(&h, n).unwrap() {
            prop_assert!(spark as f64 >= 1.0 + 1.0 / mu - 1e-9);
        }
    }

    #[test]
    fn coherence_ignores_column_scaling(seed in any::<u64>(), scale in 0.1f64..10.0) {
        let mut rng = RngStream::new(seed, 0).rng();
        let h = make_complex_gaussian_matrix(5, 9, 1.0, &mut rng).unwrap();
        let mut g = h.clone();
        g.column_mut(3).scale_mut(scale);
        prop_assert!((mutual_coherence(&h).unwrap() - mutual_coherence(&g).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn somp_support_shared_by_all_snapshots(seed in any::<u64>(), snapshots in 1usize..5) {
        let mut rng = RngStream::new(seed, 0).rng();
        let h = make_complex_gaussian_matrix(12, 24, 1.0 / 12.0, &mut rng).unwrap();
        let ys = (0..snapshots).map(|_| NoiseSpec::complex(1.0).sample(12, &mut rng)).collect();
        let r = somp(&MmvProblem::shared(h, ys).unwrap(), &SolverConfig::with_k(3)).unwrap();
        for e in &r.estimates {
            for i in 0..24 {
                prop_assert!(r.support.contains(&i) || e[i].norm() == 0.0);
            }
        }
    }

    #[test]
    fn impulse_projection_annihilates_data(n in 8usize..64, q in 1usize..8) {
        let q = q.min(n - 1);
        let pos = ImpulseConfig::evenly_spread(n, q);
        let p = projection_matrix(n, &pos);
        prop_assert_eq!((p * selection_matrix(n, &pos)).camax(), 0.0);
    }

    #[test]
    fn residual_rule_bounded_by_m(seed in any::<u64>(), eps in 1e-6f64..1.0) {
        let (h, y) = instance(seed, 10, 20, 3);
        prop_assert!(estimate_k_residual(&h, &y, eps).unwrap() <= 10);
    }

    #[test]
    fn inflation_is_ceiling(k in 0usize..10_000) {
        prop_assert_eq!(inflate_k(k), (6 * k).div_ceil(5));
        prop_assert!(inflate_k(k) >= k);
    }

    #[test]
    fn slicing_is_idempotent(seed in any::<u64>()) {
        let mut rng = RngStream::new(seed, 0).rng();
        let c = Constellation::qam16();
        let v = NoiseSpec::complex(4.0).sample(16, &mut rng);
        let once = slice(&v, &c);
        prop_assert_eq!(slice(&once, &c), once.clone());
        prop_assert!(once.iter().all(|&z| c.contains(z)));
    }

    #[test]
    fn matrix_text_round_trip(seed in any::<u64>(), m in 1usize..6, n in 1usize..6) {
        let mut rng = RngStream::new(seed, 0).rng();
        let h = make_complex_gaussian_matrix(m, n, 1e3, &mut rng).unwrap();
        let back = parse_matrix(&format_matrix(&h), std::path::Path::new("m")).unwrap();
        prop_assert_eq!(back, h);
    }

    #[test]
    fn csv_round_trip(values in proptest::collection::vec((-1e6f64..1e6, 0.0f64..1e3, 1usize..10_000), 0..20)) {
        let points: Vec<CurvePoint> = values
            .iter()
            .enumerate()
            .map(|(i, &(v, ci, t))| CurvePoint { x: i as f64 * 0.1, metric: Metric::NmseDb, value: v, ci95: ci, trials: t })
            .collect();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.csv");
        write_csv(&points, &path).unwrap();
        prop_assert_eq!(read_csv(&path).unwrap(), points);
    }
}
