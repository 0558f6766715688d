//! End-to-end acceptance suite. Each test covers one release criterion and
//! prints a `criterion N: PASS` line when it holds (run with
//! `--nocapture` to see all lines).

use std::process::Command;

use bipartial::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_rows(n: usize, dim: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..dim).map(|_| rng.gen_range(0.0..100.0)).collect())
        .collect()
}

/// Random dataset whose pairwise distances are all distinct (tie-free), so
/// merge orders are uniquely determined.
fn tie_free_store(n: usize, rng: &mut ChaCha8Rng) -> Option<DissimilarityStore> {
    let data = DataTable::from_rows(&random_rows(n, 3, rng)).unwrap();
    let store = compute_distances(&data, Metric::Euclidean).unwrap();
    let mut d: Vec<f64> = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            d.push(store.d(i, j));
        }
    }
    d.sort_by(f64::total_cmp);
    if d.windows(2).any(|w| w[0] == w[1]) {
        return None;
    }
    Some(store)
}

/// 1. The additive objective under an affine transform reproduces the UPGMA
///    merge sequence exactly.
#[test]
fn criterion_1_upgma_equivalence() {
    let start = std::time::Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut checked = 0;
    while checked < 200 {
        let Some(raw) = tie_free_store(20, &mut rng) else { continue };
        let c = 2.0 * raw.max_distance();
        let store = raw.apply_transform(ProximityTransform::Affine(c)).unwrap();
        let engine = run_bipartial(&mut AdditiveObjective::new(&store).unwrap()).unwrap();
        let upgma = run_linkage(&store, LinkageScheme::Upgma).unwrap();
        assert_eq!(engine.records.len(), upgma.records.len());
        for (e, u) in engine.records.iter().zip(&upgma.records) {
            assert_eq!(
                (e.left.min(e.right), e.left.max(e.right)),
                (u.left.min(u.right), u.left.max(u.right)),
                "instance {checked} step {}: engine merged ({}, {}), UPGMA ({}, {})",
                e.step,
                e.left,
                e.right,
                u.left,
                u.right
            );
        }
        checked += 1;
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs() < 10, "took {elapsed:?}, budget 10 s");
    println!("criterion 1 (UPGMA equivalence, 200 instances, {elapsed:?}): PASS");
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

/// 2. Every recorded merge threshold equals the oracle's exact switch point
///    of the two adjacent partitions.
#[test]
fn criterion_2_switch_point_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let mut records_checked = 0usize;
    for instance in 0..100 {
        let n = rng.gen_range(4..=8);
        let data = DataTable::from_rows(&random_rows(n, 2, &mut rng)).unwrap();
        let store = compute_distances(&data, Metric::Euclidean)
            .unwrap()
            .apply_transform(ProximityTransform::AveragePreserving)
            .unwrap();
        let spec = SPECS[instance % SPECS.len()];
        let history = run_family(spec, &store);
        for (t, rec) in history.records.iter().enumerate() {
            let before = history.partition_at_step(t).unwrap();
            let after = history.partition_at_step(t + 1).unwrap();
            let oracle_r = oracle_switch_point(spec, &store, &after, &before).unwrap();
            let r = rec.r.unwrap();
            assert!(
                (oracle_r - r).abs() < 1e-9,
                "{spec:?} instance {instance} step {}: engine r {r}, oracle {oracle_r}",
                rec.step
            );
            records_checked += 1;
        }
    }
    println!("criterion 2 (oracle switch-point identity, {records_checked} records): PASS");
}

/// 3. Monotonicity: Q_S non-decreasing, Q^D non-increasing, every threshold
///    in [0, 1] with non-negative deltas, for all families plus the
///    bi-partial k-means merger.
#[test]
fn criterion_3_monotonicity() {
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let mut runs = 0;
    for _ in 0..30 {
        let n = rng.gen_range(5..=12);
        let data = DataTable::from_rows(&random_rows(n, 2, &mut rng)).unwrap();
        let store = compute_distances(&data, Metric::Euclidean)
            .unwrap()
            .apply_transform(ProximityTransform::AveragePreserving)
            .unwrap();

        let mut histories = vec![
            run_bipartial(&mut AdditiveObjective::new(&store).unwrap()).unwrap(),
            run_bipartial(&mut MinMaxObjective::new(&store).unwrap()).unwrap(),
            run_bipartial(&mut AvgAdditiveObjective::new(&store).unwrap()).unwrap(),
        ];
        let facility = FacilityObjective::from_store(&store, 1.0).unwrap();
        histories.push(run_facility(&facility).unwrap().1);
        let sq = compute_distances(&data, Metric::SquaredEuclidean).unwrap();
        let transform = ProximityTransform::AveragePreserving.resolve(&sq).unwrap();
        histories
            .push(run_bipartial_kmeans(&data, transform, BipartialKmeansConfig::default()).unwrap());

        for history in histories {
            let profile = history.profile.as_ref().unwrap();
            for rec in &history.records {
                let r = rec.r.unwrap();
                assert!((0.0..=1.0).contains(&r), "r = {r} outside [0, 1]");
                assert!(rec.delta_qs.unwrap() >= 0.0);
                assert!(rec.delta_qd.unwrap() >= 0.0);
            }
            // Orientation decides which component rises along the hierarchy.
            let (rising, falling) = match profile.orientation {
                Orientation::Maximize => (&profile.qs, &profile.qd),
                Orientation::Minimize => (&profile.qd, &profile.qs),
            };
            for w in rising.windows(2) {
                assert!(w[1] >= w[0] - 1e-9, "rising component fell: {} -> {}", w[0], w[1]);
            }
            for w in falling.windows(2) {
                assert!(w[1] <= w[0] + 1e-9, "falling component rose: {} -> {}", w[0], w[1]);
            }
            runs += 1;
        }
    }
    println!("criterion 3 (monotonicity, {runs} runs across five algorithms): PASS");
}

/// 4. The greedy hierarchy never beats the exhaustive optimum at r = 1/2;
///    the gap is reported and zero on well-separated instances.
#[test]
fn criterion_4_suboptimality_gap() {
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    let mut gaps = Vec::new();
    let mut separated_exact = 0usize;
    let mut separated_total = 0usize;
    for instance in 0..100 {
        // Alternate free-form instances with two planted blobs.
        let planted = instance % 2 == 0;
        let rows: Vec<Vec<f64>> = if planted {
            (0..8)
                .map(|i| {
                    let offset = if i < 4 { 0.0 } else { 500.0 };
                    vec![offset + rng.gen_range(0.0..5.0), rng.gen_range(0.0..5.0)]
                })
                .collect()
        } else {
            random_rows(8, 2, &mut rng)
        };
        let data = DataTable::from_rows(&rows).unwrap();
        let store = compute_distances(&data, Metric::Euclidean)
            .unwrap()
            .apply_transform(ProximityTransform::AveragePreserving)
            .unwrap();
        let history = run_bipartial(&mut AdditiveObjective::new(&store).unwrap()).unwrap();
        let profile = history.profile.as_ref().unwrap();
        let engine_best = profile.q_half.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let (_, optimum) = oracle_best(OracleSpec::Additive, &store, 0.5).unwrap();
        assert!(
            engine_best <= optimum + 1e-9,
            "instance {instance}: greedy {engine_best} beats oracle {optimum}"
        );
        let gap = (optimum - engine_best).max(0.0) / optimum.abs().max(1e-12);
        gaps.push(gap);
        if planted {
            separated_total += 1;
            if gap < 1e-12 {
                separated_exact += 1;
            }
        }
    }
    gaps.sort_by(f64::total_cmp);
    let median = gaps[gaps.len() / 2];
    let max = *gaps.last().unwrap();
    assert!(
        separated_exact * 2 > separated_total,
        "gap nonzero on most separated instances ({separated_exact}/{separated_total})"
    );
    println!(
        "criterion 4 (suboptimality gap, 100 instances, median {median:.3e}, max {max:.3e}, \
         separated exact {separated_exact}/{separated_total}): PASS"
    );
}

/// 5. Facility descent: every executed merger strictly decreases Q; no
///    improving pair remains; the all-costs->=1 fixture stays at singletons
///    with Q = n exactly.
#[test]
fn criterion_5_facility_descent() {
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    for _ in 0..20 {
        let n = rng.gen_range(6..=14);
        let rows: Vec<Vec<f64>> =
            (0..n).map(|_| vec![rng.gen_range(0.0..2.0), rng.gen_range(0.0..2.0)]).collect();
        let data = DataTable::from_rows(&rows).unwrap();
        let objective = FacilityObjective::from_data(&data, FacilityCost::SumToCentroid, 1.0)
            .unwrap();
        let (partition, history) = run_facility(&objective).unwrap();
        let profile = history.profile.as_ref().unwrap();
        let q: Vec<f64> = profile.qs.iter().zip(&profile.qd).map(|(s, d)| s + d).collect();
        for w in q.windows(2) {
            assert!(w[1] < w[0], "non-strict descent: {} -> {}", w[0], w[1]);
        }
        // Terminal state: no pair of output clusters still improves Q.
        let clusters = partition.clusters();
        for a in 0..clusters.len() {
            for b in (a + 1)..clusters.len() {
                let gain = facility_merge_gain(&objective, &clusters[a], &clusters[b]);
                assert!(gain >= 0.0, "improving pair left behind (gain {gain})");
            }
        }
    }

    // Fixture: pairwise distances all >= 2, so every merger costs at least
    // one more than the saved establishment unit.
    let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![2.0 * i as f64]).collect();
    let data = DataTable::from_rows(&rows).unwrap();
    let objective = FacilityObjective::from_data(&data, FacilityCost::SumToCentroid, 1.0).unwrap();
    let (partition, history) = run_facility(&objective).unwrap();
    assert_eq!(partition.p(), 10, "fixture must stay at singletons");
    assert!(history.records.is_empty());
    let profile = history.profile.as_ref().unwrap();
    assert_eq!(profile.qs[0] + profile.qd[0], 10.0, "Q(I) = n exactly");
    println!("criterion 5 (facility strict descent + singleton fixture): PASS");
}

/// 6. Classical k-means contract: Q_D non-increasing per iteration, p = n
///    reaches zero cost, and single linkage reproduces the MST edge set.
#[test]
fn criterion_6_kmeans_and_mst() {
    let mut rng = ChaCha8Rng::seed_from_u64(66);
    for _ in 0..20 {
        let n = rng.gen_range(8..=30);
        let p = rng.gen_range(2..=4);
        let data = DataTable::from_rows(&random_rows(n, 2, &mut rng)).unwrap();
        let model = kmeans_classic(&data, &KmeansConfig { restarts: 3, ..KmeansConfig::new(p) })
            .unwrap();
        assert!(!model.iteration_costs.is_empty());
        for w in model.iteration_costs.windows(2) {
            assert!(w[1] <= w[0] + 1e-9, "Lloyd cost rose: {} -> {}", w[0], w[1]);
        }
        assert!((model.iteration_costs.last().unwrap() - model.q_d).abs() < 1e-9);
    }

    let data = DataTable::from_rows(&random_rows(12, 2, &mut rng)).unwrap();
    let exact = kmeans_classic(&data, &KmeansConfig::new(12)).unwrap();
    assert_eq!(exact.q_d, 0.0, "p = n must give Q_D = 0");

    // Single linkage merge distances = MST edge weights (Prim).
    for _ in 0..50 {
        let n = rng.gen_range(5..=50);
        let data = DataTable::from_rows(&random_rows(n, 2, &mut rng)).unwrap();
        let store = compute_distances(&data, Metric::Euclidean).unwrap();
        let history = run_linkage(&store, LinkageScheme::Single).unwrap();
        let mut heights: Vec<f64> = history.records.iter().map(|r| r.link_value).collect();
        heights.sort_by(f64::total_cmp);

        let mut in_tree = vec![false; n];
        let mut best = vec![f64::INFINITY; n];
        in_tree[0] = true;
        for j in 1..n {
            best[j] = store.d(0, j);
        }
        let mut mst = Vec::with_capacity(n - 1);
        for _ in 1..n {
            let next = (0..n)
                .filter(|&j| !in_tree[j])
                .min_by(|&a, &b| best[a].total_cmp(&best[b]))
                .unwrap();
            mst.push(best[next]);
            in_tree[next] = true;
            for j in 0..n {
                if !in_tree[j] {
                    best[j] = best[j].min(store.d(next, j));
                }
            }
        }
        mst.sort_by(f64::total_cmp);
        for (h, m) in heights.iter().zip(&mst) {
            assert!((h - m).abs() < 1e-9, "single linkage {h} vs MST {m}");
        }
    }
    println!("criterion 6 (k-means descent, p = n zero cost, MST equivalence): PASS");
}

/// 7. Structural reproduction: on the default synthetic nested 4-blob data
///    the p sweep has strictly decreasing Q_D, zero outer similarity at
///    p = 1, and its combined-objective minimum exactly at p = 4.
#[test]
fn criterion_7_sweep_minimum_at_four() {
    let start = std::time::Instant::now();
    let (data, _) = nested_blobs(&NestedBlobConfig::default()).unwrap();
    assert_eq!(data.n_objects(), 60);
    let store = compute_distances(&data, Metric::SquaredEuclidean).unwrap();
    let transform = ProximityTransform::AveragePreserving.resolve(&store).unwrap();

    let mut curve = Vec::new();
    for p in 1..=10 {
        let cfg = KmeansConfig { restarts: 20, ..KmeansConfig::new(p) };
        let model = kmeans_classic(&data, &cfg).unwrap();
        let (q_d, q_s, q_ds) = bipartial_kmeans_objective(&data, &model, &transform, 0.5);
        curve.push((p, q_d, q_s, q_ds));
    }
    for w in curve.windows(2) {
        assert!(w[1].1 < w[0].1, "Q_D not strictly decreasing: {:?} -> {:?}", w[0], w[1]);
    }
    assert_eq!(curve[0].2, 0.0, "Q^S must vanish at p = 1");
    let argmin = curve
        .iter()
        .min_by(|a, b| a.3.total_cmp(&b.3))
        .map(|row| row.0)
        .unwrap();
    assert_eq!(argmin, 4, "combined objective minimum at p = {argmin}, expected 4");
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs() < 30, "took {elapsed:?}, budget 30 s");
    println!("criterion 7 (sweep argmin = 4 on nested blobs, {elapsed:?}): PASS");
}

/// 8. Non-monotone r diagnostic: the four-tight-pairs fixture produces
///    r-order inversions; a single Gaussian cloud does not.
#[test]
fn criterion_8_r_inversion_diagnostic() {
    let rows: Vec<Vec<f64>> = [0.0, 1.0, 100.0, 101.0, 200.0, 201.0, 300.0, 301.0]
        .iter()
        .map(|&x| vec![x])
        .collect();
    let data = DataTable::from_rows(&rows).unwrap();
    let store = compute_distances(&data, Metric::SquaredEuclidean).unwrap();
    let transform = ProximityTransform::AveragePreserving.resolve(&store).unwrap();
    let history =
        run_bipartial_kmeans(&data, transform, BipartialKmeansConfig::default()).unwrap();
    let report = envelope_report(&history).unwrap();
    assert!(
        !report.r_inversions.is_empty(),
        "tight-pairs fixture must produce at least one r inversion"
    );

    let gaussian = NestedBlobConfig {
        blobs: 1,
        points_per_blob: 8,
        nesting_levels: 0,
        noise_sigma: 1.0,
        dim: 2,
        seed: 38,
        ..NestedBlobConfig::default()
    };
    let (data, _) = nested_blobs(&gaussian).unwrap();
    let store = compute_distances(&data, Metric::SquaredEuclidean).unwrap();
    let transform = ProximityTransform::AveragePreserving.resolve(&store).unwrap();
    let history =
        run_bipartial_kmeans(&data, transform, BipartialKmeansConfig::default()).unwrap();
    let report = envelope_report(&history).unwrap();
    assert!(
        report.r_inversions.is_empty(),
        "single Gaussian flagged inversions {:?}",
        report.r_inversions
    );
    println!(
        "criterion 8 (r inversions flagged on tight pairs, none on a Gaussian cloud): PASS"
    );
}

/// 9. Reproducibility: running the binary twice on the same config and input
///    yields byte-identical artifacts, including with parallel restarts.
#[test]
fn criterion_9_byte_identical_reruns() {
    let dir = tempfile::tempdir().unwrap();
    let bin = env!("CARGO_BIN_EXE_bipartial");
    let data = dir.path().join("data.csv");
    let status = Command::new(bin)
        .args(["gen", "--out"])
        .arg(&data)
        .status()
        .unwrap();
    assert!(status.success());

    let run = |out: &str, algorithm: &str, extra: &[&str]| {
        let out_dir = dir.path().join(out);
        let status = Command::new(bin)
            .args(["cluster", "--input"])
            .arg(&data)
            .args(["--algorithm", algorithm, "--out"])
            .arg(&out_dir)
            .args(extra)
            .status()
            .unwrap();
        assert!(status.success(), "{algorithm} run failed");
        out_dir
    };
    let read_all = |out_dir: &std::path::Path| -> Vec<(String, Vec<u8>)> {
        let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(out_dir)
            .unwrap()
            .map(|e| {
                let e = e.unwrap();
                (e.file_name().into_string().unwrap(), std::fs::read(e.path()).unwrap())
            })
            .collect();
        files.sort();
        files
    };

    // Parallel restarts exercised through classical k-means; the engine
    // track through the additive objective.
    for (algorithm, extra) in [
        ("kmeans", &["--p", "4", "--restarts", "32", "--metric", "squared_euclidean"][..]),
        ("additive", &[][..]),
        ("hybrid", &["--first-stage-p", "8", "--metric", "squared_euclidean", "--restarts", "16"][..]),
    ] {
        let first = run(&format!("{algorithm}_1"), algorithm, extra);
        let second = run(&format!("{algorithm}_2"), algorithm, extra);
        let a = read_all(&first);
        let b = read_all(&second);
        assert!(!a.is_empty());
        assert_eq!(
            a.iter().map(|(n, _)| n.clone()).collect::<Vec<_>>(),
            b.iter().map(|(n, _)| n.clone()).collect::<Vec<_>>()
        );
        for ((name, bytes_a), (_, bytes_b)) in a.iter().zip(&b) {
            assert_eq!(bytes_a, bytes_b, "{algorithm}/{name} differs between reruns");
        }
    }
    println!("criterion 9 (byte-identical artifacts across reruns): PASS");
}
