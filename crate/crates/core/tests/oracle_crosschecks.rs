//! Cross-validation of the incremental engine against the scratch oracle:
//! profile identity, switch-point identity, and the suboptimality direction.

use bipartial::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_store(n: usize, seed: u64, transform: ProximityTransform) -> DissimilarityStore {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| vec![rng.gen_range(0.0..100.0), rng.gen_range(0.0..100.0)])
        .collect();
    let data = DataTable::from_rows(&rows).unwrap();
    compute_distances(&data, Metric::Euclidean)
        .unwrap()
        .apply_transform(transform)
        .unwrap()
}

fn run_family(spec: OracleSpec, store: &DissimilarityStore) -> MergeHistory {
    match spec {
        OracleSpec::Additive => run_bipartial(&mut AdditiveObjective::new(store).unwrap()).unwrap(),
        OracleSpec::MinMax => run_bipartial(&mut MinMaxObjective::new(store).unwrap()).unwrap(),
        OracleSpec::AvgAdditive => {
            run_bipartial(&mut AvgAdditiveObjective::new(store).unwrap()).unwrap()
        }
    }
}

const SPECS: [OracleSpec; 3] = [OracleSpec::Additive, OracleSpec::MinMax, OracleSpec::AvgAdditive];

#[test]
fn engine_profile_matches_scratch_recomputation() {
    for spec in SPECS {
        for seed in 0..20u64 {
            let n = 6 + (seed % 5) as usize; // 6..=10
            let store = random_store(n, seed, ProximityTransform::AveragePreserving);
            let history = run_family(spec, &store);
            let profile = history.profile.as_ref().unwrap();
            for t in 0..n {
                let p = history.partition_at_step(t).unwrap();
                let (qs, qd) = oracle::oracle_components(spec, &store, &p).unwrap();
                assert!(
                    (qs - profile.qs[t]).abs() < 1e-9,
                    "{spec:?} seed {seed} level {t}: qs {qs} vs {}",
                    profile.qs[t]
                );
                assert!(
                    (qd - profile.qd[t]).abs() < 1e-9,
                    "{spec:?} seed {seed} level {t}: qd {qd} vs {}",
                    profile.qd[t]
                );
            }
        }
    }
}

#[test]
fn engine_thresholds_match_oracle_switch_points() {
    for spec in SPECS {
        for seed in 0..20u64 {
            let n = 5 + (seed % 4) as usize; // 5..=8
            let store = random_store(n, 1000 + seed, ProximityTransform::MaxComplement);
            let history = run_family(spec, &store);
            let rs = history.r_sequence().unwrap();
            for t in 1..n {
                let before = history.partition_at_step(t - 1).unwrap();
                let after = history.partition_at_step(t).unwrap();
                let r = oracle_switch_point(spec, &store, &after, &before).unwrap();
                assert!(
                    (r - rs[t - 1]).abs() < 1e-9,
                    "{spec:?} seed {seed} step {t}: oracle {r} vs engine {}",
                    rs[t - 1]
                );
            }
        }
    }
}

#[test]
fn engine_never_beats_oracle_at_half() {
    for spec in SPECS {
        for seed in 0..15u64 {
            let n = 7;
            let store = random_store(n, 2000 + seed, ProximityTransform::AveragePreserving);
            let history = run_family(spec, &store);
            let profile = history.profile.as_ref().unwrap();
            let engine_best = profile.q_half.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let (_, oracle_value) = oracle_best(spec, &store, 0.5).unwrap();
            assert!(
                engine_best <= oracle_value + 1e-9,
                "{spec:?} seed {seed}: engine {engine_best} above oracle {oracle_value}"
            );
        }
    }
}

#[test]
fn oracle_gap_zero_on_separated_blobs() {
    // Two well-separated blobs: the greedy merger is exactly optimal at 1/2.
    let rows = vec![
        vec![0.0, 0.0],
        vec![1.0, 0.5],
        vec![0.5, 1.0],
        vec![100.0, 100.0],
        vec![101.0, 100.5],
        vec![100.5, 101.0],
    ];
    let data = DataTable::from_rows(&rows).unwrap();
    let store = compute_distances(&data, Metric::Euclidean)
        .unwrap()
        .apply_transform(ProximityTransform::AveragePreserving)
        .unwrap();
    let history = run_bipartial(&mut AdditiveObjective::new(&store).unwrap()).unwrap();
    let profile = history.profile.as_ref().unwrap();
    let engine_best = profile.q_half.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let (best_p, oracle_value) = oracle_best(OracleSpec::Additive, &store, 0.5).unwrap();
    assert!((engine_best - oracle_value).abs() < 1e-9);
    assert!(best_p.same_grouping(&Partition::from_labels(&[0, 0, 0, 1, 1, 1]).unwrap()));
}

#[test]
fn selected_partition_agrees_with_oracle_on_tight_pairs() {
    let rows: Vec<Vec<f64>> = [0.0, 1.0, 10.0, 11.0].iter().map(|&x| vec![x]).collect();
    let data = DataTable::from_rows(&rows).unwrap();
    let store = compute_distances(&data, Metric::Euclidean)
        .unwrap()
        .apply_transform(ProximityTransform::Affine(12.0))
        .unwrap();
    let history = run_bipartial(&mut AdditiveObjective::new(&store).unwrap()).unwrap();
    let (selected, _) = select_partition(&history).unwrap();
    let (oracle_p, _) = oracle_best(OracleSpec::Additive, &store, 0.5).unwrap();
    assert!(selected.same_grouping(&oracle_p));
}
