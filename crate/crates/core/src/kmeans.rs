//! The k-means track: classical centre-and-reallocate, the bi-partial
//! k-means objective with outer similarity, its mirrored merger procedure
//! (r sweeping down from 1), and the two-stage hybrid.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{self, StopDecision};
use crate::error::{Error, Result};
use crate::model::{
    compute_distances, DataTable, DissimilarityStore, MergeHistory, MergeRecord, Metric,
    ObjectiveProfile, Orientation, Partition, ResolvedTransform,
};
use crate::objective::{
    AdditiveObjective, AvgAdditiveObjective, MinMaxObjective, ObjectiveFamily,
};

const MAX_LLOYD_ITERS: usize = 500;

/// Initial centroid selection strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Seeding {
    Random,
    FarthestPoint,
}

impl std::str::FromStr for Seeding {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(Self::Random),
            "farthest_point" | "farthest" => Ok(Self::FarthestPoint),
            other => Err(Error::Config(format!("unknown seeding '{other}'"))),
        }
    }
}

/// Configuration of a classical k-means run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KmeansConfig {
    pub p: usize,
    pub seeding: Seeding,
    pub restarts: usize,
    pub seed: u64,
    pub metric: Metric,
}

impl KmeansConfig {
    pub fn new(p: usize) -> Self {
        Self {
            p,
            seeding: Seeding::Random,
            restarts: 10,
            seed: 0,
            metric: Metric::SquaredEuclidean,
        }
    }
}

/// A fitted centre-and-reallocate model.
#[derive(Debug, Clone, PartialEq)]
pub struct CentroidModel {
    pub p: usize,
    pub n_features: usize,
    /// Row-major p x m centroid matrix.
    pub centroids: Vec<f64>,
    pub assignment: Partition,
    pub metric: Metric,
    /// Q_D of the assignment: total distance of objects to their centroids.
    pub q_d: f64,
    /// Q_D after every centre-and-reallocate iteration; non-increasing.
    pub iteration_costs: Vec<f64>,
}

impl CentroidModel {
    pub fn centroid(&self, q: usize) -> &[f64] {
        &self.centroids[q * self.n_features..(q + 1) * self.n_features]
    }
}

/// Per-metric cluster representative: mean for squared Euclidean,
/// coordinate-wise median (the exact 1-norm minimizer) for Manhattan.
fn center_of(data: &DataTable, members: &[usize], metric: Metric) -> Vec<f64> {
    let m = data.n_features();
    match metric {
        Metric::Manhattan => {
            let mut center = Vec::with_capacity(m);
            let mut column: Vec<f64> = Vec::with_capacity(members.len());
            for f in 0..m {
                column.clear();
                column.extend(members.iter().map(|&i| data.row(i)[f]));
                column.sort_by(f64::total_cmp);
                let k = column.len();
                let median = if k % 2 == 1 {
                    column[k / 2]
                } else {
                    0.5 * (column[k / 2 - 1] + column[k / 2])
                };
                center.push(median);
            }
            center
        }
        _ => {
            let mut center = vec![0.0; m];
            for &i in members {
                for (c, v) in center.iter_mut().zip(data.row(i)) {
                    *c += v;
                }
            }
            for c in center.iter_mut() {
                *c /= members.len() as f64;
            }
            center
        }
    }
}

fn seed_centroids(data: &DataTable, p: usize, seeding: Seeding, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let n = data.n_objects();
    match seeding {
        Seeding::Random => {
            let mut indices: Vec<usize> = (0..n).collect();
            indices.shuffle(rng);
            indices.truncate(p);
            indices
        }
        Seeding::FarthestPoint => {
            let mut chosen = vec![rng.gen_range(0..n)];
            while chosen.len() < p {
                let next = (0..n)
                    .filter(|i| !chosen.contains(i))
                    .max_by(|&a, &b| {
                        let da = chosen
                            .iter()
                            .map(|&c| Metric::SquaredEuclidean.distance(data.row(a), data.row(c)))
                            .fold(f64::INFINITY, f64::min);
                        let db = chosen
                            .iter()
                            .map(|&c| Metric::SquaredEuclidean.distance(data.row(b), data.row(c)))
                            .fold(f64::INFINITY, f64::min);
                        da.total_cmp(&db)
                    })
                    .expect("p <= n");
                chosen.push(next);
            }
            chosen
        }
    }
}

fn lloyd_once(data: &DataTable, cfg: &KmeansConfig, seed: u64) -> CentroidModel {
    let n = data.n_objects();
    let m = data.n_features();
    let p = cfg.p;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids: Vec<f64> = seed_centroids(data, p, cfg.seeding, &mut rng)
        .into_iter()
        .flat_map(|i| data.row(i).to_vec())
        .collect();
    let mut labels = vec![usize::MAX; n];
    let mut iteration_costs = Vec::new();

    for _ in 0..MAX_LLOYD_ITERS {
        // Assignment step; ties go to the lowest centroid index.
        let mut new_labels = vec![0usize; n];
        for i in 0..n {
            let mut best = 0usize;
            let mut best_d = f64::INFINITY;
            for q in 0..p {
                let d = cfg.metric.distance(data.row(i), &centroids[q * m..(q + 1) * m]);
                if d < best_d {
                    best_d = d;
                    best = q;
                }
            }
            new_labels[i] = best;
        }
        // Empty-cluster repair: re-seed at the object with the largest
        // current assignment cost.
        loop {
            let mut counts = vec![0usize; p];
            for &l in &new_labels {
                counts[l] += 1;
            }
            let Some(empty) = counts.iter().position(|&c| c == 0) else { break };
            let worst = (0..n)
                .filter(|&i| counts[new_labels[i]] > 1)
                .max_by(|&a, &b| {
                    let da = cfg.metric.distance(
                        data.row(a),
                        &centroids[new_labels[a] * m..(new_labels[a] + 1) * m],
                    );
                    let db = cfg.metric.distance(
                        data.row(b),
                        &centroids[new_labels[b] * m..(new_labels[b] + 1) * m],
                    );
                    da.total_cmp(&db)
                })
                .expect("n >= p objects");
            new_labels[worst] = empty;
            centroids[empty * m..(empty + 1) * m].copy_from_slice(data.row(worst));
        }

        let converged = new_labels == labels;
        labels = new_labels;

        // Centre step.
        let mut by_cluster: Vec<Vec<usize>> = vec![Vec::new(); p];
        for (i, &l) in labels.iter().enumerate() {
            by_cluster[l].push(i);
        }
        for (q, members) in by_cluster.iter().enumerate() {
            let center = center_of(data, members, cfg.metric);
            centroids[q * m..(q + 1) * m].copy_from_slice(&center);
        }
        iteration_costs.push(
            (0..n)
                .map(|i| {
                    cfg.metric
                        .distance(data.row(i), &centroids[labels[i] * m..(labels[i] + 1) * m])
                })
                .sum(),
        );
        if converged {
            break;
        }
    }

    let q_d: f64 = (0..n)
        .map(|i| cfg.metric.distance(data.row(i), &centroids[labels[i] * m..(labels[i] + 1) * m]))
        .sum();
    // Relabel clusters in first-occurrence order and permute centroids the
    // same way, so centroid index q always matches assignment label q.
    let mut map = vec![usize::MAX; p];
    let mut next = 0usize;
    for &l in &labels {
        if map[l] == usize::MAX {
            map[l] = next;
            next += 1;
        }
    }
    let mut canonical_centroids = vec![0.0; p * m];
    for old in 0..p {
        canonical_centroids[map[old] * m..(map[old] + 1) * m]
            .copy_from_slice(&centroids[old * m..(old + 1) * m]);
    }
    let labels: Vec<usize> = labels.iter().map(|&l| map[l]).collect();
    CentroidModel {
        p,
        n_features: m,
        centroids: canonical_centroids,
        assignment: Partition::from_labels(&labels).expect("non-empty labels"),
        metric: cfg.metric,
        q_d,
        iteration_costs,
    }
}

/// Classical centre-and-reallocate, best of `restarts` independent seeded
/// runs (executed in parallel; reduction is deterministic, preferring lower
/// Q_D and then the earlier restart index).
pub fn kmeans_classic(data: &DataTable, cfg: &KmeansConfig) -> Result<CentroidModel> {
    let n = data.n_objects();
    if cfg.p == 0 || cfg.p > n {
        return Err(Error::Config(format!("p = {} out of range 1..={n}", cfg.p)));
    }
    let restarts = cfg.restarts.max(1);
    let best = (0..restarts as u64)
        .into_par_iter()
        .map(|k| (k, lloyd_once(data, cfg, cfg.seed.wrapping_add(k))))
        .min_by(|(ka, ma), (kb, mb)| ma.q_d.total_cmp(&mb.q_d).then(ka.cmp(kb)))
        .expect("restarts >= 1");
    Ok(best.1)
}

/// The bi-partial k-means objective of a fitted model:
/// `(Q_D, Q^S, Q_D^S = Q_D + Q^S)` with the outer-similarity term built from
/// `s(d(x_i, foreign centroid))`.
pub fn bipartial_kmeans_objective(
    data: &DataTable,
    model: &CentroidModel,
    transform: &ResolvedTransform,
    outer_weight: f64,
) -> (f64, f64, f64) {
    let q_s = outer_similarity_total(data, model, transform, outer_weight);
    (model.q_d, q_s, model.q_d + q_s)
}

fn outer_similarity_total(
    data: &DataTable,
    model: &CentroidModel,
    transform: &ResolvedTransform,
    outer_weight: f64,
) -> f64 {
    if model.p < 2 {
        return 0.0; // no foreign centroid exists
    }
    let mut total = 0.0;
    for i in 0..data.n_objects() {
        let own = model.assignment.label(i);
        let mut best = 0.0f64;
        for q in 0..model.p {
            if q == own {
                continue;
            }
            best = best.max(transform.apply(model.metric.distance(data.row(i), model.centroid(q))));
        }
        total += best;
    }
    outer_weight * total
}

/// Settings of the bi-partial k-means merger.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BipartialKmeansConfig {
    pub metric: Metric,
    /// Weight of the outer-similarity term (classically fixed at 1/2).
    pub outer_weight: f64,
}

impl Default for BipartialKmeansConfig {
    fn default() -> Self {
        Self { metric: Metric::SquaredEuclidean, outer_weight: 0.5 }
    }
}

/// Working state of the mirrored merger: clusters of data points with
/// centroid summaries.
pub struct KmeansMergeState<'a> {
    data: &'a DataTable,
    transform: ResolvedTransform,
    cfg: BipartialKmeansConfig,
    members: HashMap<usize, Vec<usize>>,
    active: Vec<usize>,
}

struct PairEval {
    delta_s: f64,
    delta_d: f64,
    r: f64,
}

impl<'a> KmeansMergeState<'a> {
    pub fn new(
        data: &'a DataTable,
        transform: ResolvedTransform,
        cfg: BipartialKmeansConfig,
    ) -> Self {
        Self::with_partition(data, transform, cfg, &Partition::singletons(data.n_objects()))
    }

    pub fn with_partition(
        data: &'a DataTable,
        transform: ResolvedTransform,
        cfg: BipartialKmeansConfig,
        initial: &Partition,
    ) -> Self {
        let clusters = initial.clusters();
        let members: HashMap<usize, Vec<usize>> =
            clusters.into_iter().enumerate().collect();
        let active: Vec<usize> = {
            let mut a: Vec<usize> = members.keys().copied().collect();
            a.sort_unstable();
            a
        };
        Self { data, transform, cfg, members, active }
    }

    fn centroid(&self, members: &[usize]) -> Vec<f64> {
        center_of(self.data, members, self.cfg.metric)
    }

    /// `D(A)`: total distance of members to the cluster centre.
    fn cluster_cost(&self, members: &[usize]) -> f64 {
        let c = self.centroid(members);
        members
            .iter()
            .map(|&i| self.cfg.metric.distance(self.data.row(i), &c))
            .sum()
    }

    /// `S*(A)` against an explicit foreign centroid set.
    fn outer_similarity(&self, members: &[usize], foreign: &[(usize, Vec<f64>)]) -> f64 {
        if foreign.is_empty() {
            return 0.0;
        }
        members
            .iter()
            .map(|&i| {
                foreign
                    .iter()
                    .map(|(_, c)| {
                        self.transform.apply(self.cfg.metric.distance(self.data.row(i), c))
                    })
                    .fold(0.0f64, f64::max)
            })
            .sum()
    }

    fn centroids_of_active(&self) -> HashMap<usize, Vec<f64>> {
        self.active
            .iter()
            .map(|&c| (c, self.centroid(&self.members[&c])))
            .collect()
    }

    fn evaluate_pair(
        &self,
        a: usize,
        b: usize,
        centroids: &HashMap<usize, Vec<f64>>,
        costs: &HashMap<usize, f64>,
        outer: &HashMap<usize, f64>,
    ) -> Result<PairEval> {
        let mut merged = self.members[&a].clone();
        merged.extend_from_slice(&self.members[&b]);
        merged.sort_unstable();
        let delta_d = self.cluster_cost(&merged) - costs[&a] - costs[&b];

        let foreign: Vec<(usize, Vec<f64>)> = self
            .active
            .iter()
            .filter(|&&c| c != a && c != b)
            .map(|&c| (c, centroids[&c].clone()))
            .collect();
        let s_merged = self.outer_similarity(&merged, &foreign);
        let delta_s = outer[&a] + outer[&b] - s_merged;

        // Tiny negatives are accumulated float error; real ones break the
        // non-negativity the merger rule relies on.
        let delta_s = if delta_s < 0.0 && delta_s > -1e-9 * (outer[&a] + outer[&b]).max(1.0) {
            0.0
        } else {
            delta_s
        };
        if delta_s < 0.0 || delta_d < -1e-9 * costs[&a].max(costs[&b]).max(1.0) {
            return Err(Error::Contract(format!(
                "negative k-means merge delta for clusters ({a},{b}): \
                 delta_s = {delta_s}, delta_d = {delta_d}"
            )));
        }
        let delta_d = delta_d.max(0.0);
        let ws = self.cfg.outer_weight * delta_s;
        let denom = ws + delta_d;
        let r = if denom == 0.0 { 1.0 } else { ws / denom };
        Ok(PairEval { delta_s: ws, delta_d, r })
    }

    /// Merge threshold of one candidate pair in the current state. For two
    /// singletons under the Manhattan metric this reduces exactly to
    /// `w·s / (w·s + d)` of the points' own proximity and distance.
    pub fn pair_threshold(&self, a: usize, b: usize) -> Result<f64> {
        let centroids = self.centroids_of_active();
        let costs: HashMap<usize, f64> = self
            .active
            .iter()
            .map(|&c| (c, self.cluster_cost(&self.members[&c])))
            .collect();
        let outer = self.outer_map(&centroids);
        Ok(self.evaluate_pair(a, b, &centroids, &costs, &outer)?.r)
    }

    fn outer_map(&self, centroids: &HashMap<usize, Vec<f64>>) -> HashMap<usize, f64> {
        self.active
            .iter()
            .map(|&c| {
                let foreign: Vec<(usize, Vec<f64>)> = self
                    .active
                    .iter()
                    .filter(|&&e| e != c)
                    .map(|&e| (e, centroids[&e].clone()))
                    .collect();
                (c, self.outer_similarity(&self.members[&c], &foreign))
            })
            .collect()
    }

    /// Runs the mirrored merger to the full hierarchy: r starts at 1 and the
    /// pair with the largest threshold merges first.
    pub fn run(mut self) -> Result<MergeHistory> {
        let n = self.active.len();
        if n < 2 {
            return Err(Error::Input(format!("merger needs at least 2 clusters, got {n}")));
        }
        let mut qd = {
            let costs: f64 = self
                .active
                .iter()
                .map(|&c| self.cluster_cost(&self.members[&c]))
                .sum();
            costs
        };
        let centroids = self.centroids_of_active();
        let outer = self.outer_map(&centroids);
        // Sum in active-id order: map iteration order would vary the float
        // accumulation between runs.
        let mut qs =
            self.cfg.outer_weight * self.active.iter().map(|&c| outer[&c]).sum::<f64>();
        let mut profile = ObjectiveProfile {
            orientation: Orientation::Minimize,
            qs: vec![qs],
            qd: vec![qd],
            q_half: vec![0.5 * (qs + qd)],
        };
        let mut records = Vec::with_capacity(n - 1);

        for step in 1..n {
            let centroids = self.centroids_of_active();
            let costs: HashMap<usize, f64> = self
                .active
                .iter()
                .map(|&c| (c, self.cluster_cost(&self.members[&c])))
                .collect();
            let outer = self.outer_map(&centroids);

            let mut best: Option<(f64, usize, usize, PairEval)> = None;
            for ai in 0..self.active.len() {
                for bi in (ai + 1)..self.active.len() {
                    let (a, b) = (self.active[ai], self.active[bi]);
                    let eval = self.evaluate_pair(a, b, &centroids, &costs, &outer)?;
                    let better = match &best {
                        None => true,
                        Some((br, bl, bh, _)) => {
                            eval.r > *br || (eval.r == *br && (a, b) < (*bl, *bh))
                        }
                    };
                    if better {
                        best = Some((eval.r, a, b, eval));
                    }
                }
            }
            let (r, left, right, eval) = best.expect("active pair exists");

            let new_id = n + step - 1;
            let mut merged = self.members.remove(&left).expect("left active");
            merged.extend(self.members.remove(&right).expect("right active"));
            merged.sort_unstable();
            let size = merged.len();
            self.members.insert(new_id, merged);
            self.active.retain(|&c| c != left && c != right);
            self.active.push(new_id);
            self.active.sort_unstable();

            qd += eval.delta_d;
            qs -= eval.delta_s;
            profile.qd.push(qd);
            profile.qs.push(qs);
            profile.q_half.push(0.5 * (qs + qd));

            records.push(MergeRecord {
                step,
                left,
                right,
                new_cluster: new_id,
                size,
                r: Some(r),
                delta_qs: Some(eval.delta_s),
                delta_qd: Some(eval.delta_d),
                link_value: r,
            });
        }

        Ok(MergeHistory { leaves: n, records, profile: Some(profile) })
    }
}

/// Full bi-partial k-means merger from singletons.
pub fn run_bipartial_kmeans(
    data: &DataTable,
    transform: ResolvedTransform,
    cfg: BipartialKmeansConfig,
) -> Result<MergeHistory> {
    KmeansMergeState::new(data, transform, cfg).run()
}

/// Which merger rule the hybrid's second stage uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HybridObjective {
    /// The bi-partial k-means merger over cluster atoms.
    Kmeans,
    /// An engine objective family over the object-level store.
    Engine(ObjectiveFamily),
}

/// Outcome of the two-stage hybrid.
pub struct HybridOutcome {
    /// Final object-level partition after the stop/selection rule.
    pub partition: Partition,
    /// Stage-2 merge history; its atoms are the stage-1 clusters.
    pub history: MergeHistory,
    pub decision: Option<StopDecision>,
    /// Stage-1 assignment of objects to atoms.
    pub stage1: Partition,
}

/// Classical k-means down to `first_stage_p` clusters, then bi-partial
/// mergers over those clusters as atoms, selected by the stop rule.
pub fn hybrid_two_stage(
    data: &DataTable,
    store: &DissimilarityStore,
    kmeans_cfg: &KmeansConfig,
    merge_cfg: BipartialKmeansConfig,
    objective: HybridObjective,
) -> Result<HybridOutcome> {
    let n = data.n_objects();
    if kmeans_cfg.p < 1 || kmeans_cfg.p > n {
        return Err(Error::Config(format!(
            "first stage p = {} out of range 1..={n}",
            kmeans_cfg.p
        )));
    }
    let model = kmeans_classic(data, kmeans_cfg)?;
    let stage1 = model.assignment.clone();

    if stage1.p() < 2 {
        // Nothing to merge.
        return Ok(HybridOutcome {
            partition: stage1.clone(),
            history: MergeHistory { leaves: stage1.p(), records: Vec::new(), profile: None },
            decision: None,
            stage1,
        });
    }

    let history = match objective {
        HybridObjective::Kmeans => {
            let transform = store
                .transform()
                .copied()
                .ok_or_else(|| Error::Config("store has no resolved transform".into()))?;
            KmeansMergeState::with_partition(data, transform, merge_cfg, &stage1).run()?
        }
        HybridObjective::Engine(family) => match family {
            ObjectiveFamily::Additive => {
                let mut obj = AdditiveObjective::with_partition(store, &stage1)?;
                engine::run_bipartial(&mut obj)?
            }
            ObjectiveFamily::MinMax => {
                let mut obj = MinMaxObjective::with_partition(store, &stage1)?;
                engine::run_bipartial(&mut obj)?
            }
            ObjectiveFamily::AvgAdditive => {
                let mut obj = AvgAdditiveObjective::with_partition(store, &stage1)?;
                engine::run_bipartial(&mut obj)?
            }
            ObjectiveFamily::Facility => {
                return Err(Error::Config(
                    "facility location runs standalone, not as a hybrid stage".into(),
                ))
            }
        },
    };

    let (atom_partition, decision) = engine::select_partition(&history)?;
    let labels: Vec<usize> = (0..n).map(|i| atom_partition.label(stage1.label(i))).collect();
    let partition = Partition::from_labels(&labels)?;
    Ok(HybridOutcome { partition, history, decision: Some(decision), stage1 })
}

/// Convenience: the transform resolved against the object-level distance
/// matrix under the same metric the k-means run uses.
pub fn resolve_transform_for(
    data: &DataTable,
    metric: Metric,
    transform: crate::model::ProximityTransform,
) -> Result<ResolvedTransform> {
    let store = compute_distances(data, metric)?;
    transform.resolve(&store)
}
