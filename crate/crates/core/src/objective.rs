//! Concrete bi-partial objectives: the additive family, facility location
//! with constant cluster cost, min-distance/max-proximity, and
//! average-distance/additive-proximity.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::engine::{BipartialObjective, Deltas};
use crate::error::{Error, Result};
use crate::model::{
    DataTable, DissimilarityStore, MergeHistory, MergeRecord, Metric, ObjectiveProfile,
    Orientation, Partition,
};

/// Which objective family a run uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectiveFamily {
    Additive,
    Facility,
    MinMax,
    AvgAdditive,
}

impl std::str::FromStr for ObjectiveFamily {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "additive" => Ok(Self::Additive),
            "facility" => Ok(Self::Facility),
            "minmax" | "min_max" => Ok(Self::MinMax),
            "avg_additive" | "avg-additive" => Ok(Self::AvgAdditive),
            other => Err(Error::Config(format!("unknown objective family '{other}'"))),
        }
    }
}

/// Folds accumulated float error in a quantity that is non-negative by
/// construction; genuinely negative deltas still surface as contract
/// violations in the engine.
fn chop(v: f64, scale: f64) -> f64 {
    if v < 0.0 && v >= -1e-9 * scale.max(1.0) {
        0.0
    } else {
        v
    }
}

fn pair_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

fn require_proximities(store: &DissimilarityStore) -> Result<()> {
    if !store.has_proximities() {
        return Err(Error::Config(
            "objective requires a proximity transform applied to the store".into(),
        ));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Additive family: Q_S = sum of intra-cluster s, Q^D = sum of inter-cluster d.
// ---------------------------------------------------------------------------

/// The additive objective: merge deltas are the plain cross-pair sums
/// `S_qq'` and `D_qq'`, so the switch point is `D_qq' / (D_qq' + S_qq')`.
pub struct AdditiveObjective {
    n_atoms: usize,
    qs0: f64,
    qd0: f64,
    /// Cross sums (d, s) per active unordered cluster pair.
    cross: HashMap<(usize, usize), (f64, f64)>,
}

impl AdditiveObjective {
    pub fn new(store: &DissimilarityStore) -> Result<Self> {
        Self::with_partition(store, &Partition::singletons(store.n()))
    }

    /// Starts from an arbitrary initial partition (the hybrid's stage-2
    /// atoms). Atom ids are the partition's cluster labels.
    pub fn with_partition(store: &DissimilarityStore, initial: &Partition) -> Result<Self> {
        require_proximities(store)?;
        if initial.n() != store.n() {
            return Err(Error::Input("partition size does not match store".into()));
        }
        let clusters = initial.clusters();
        let mut qs0 = 0.0;
        for members in &clusters {
            for (ai, &i) in members.iter().enumerate() {
                for &j in &members[ai + 1..] {
                    qs0 += store.s(i, j);
                }
            }
        }
        let mut cross = HashMap::new();
        let mut qd0 = 0.0;
        for a in 0..clusters.len() {
            for b in (a + 1)..clusters.len() {
                let mut ds = 0.0;
                let mut ss = 0.0;
                for &i in &clusters[a] {
                    for &j in &clusters[b] {
                        ds += store.d(i, j);
                        ss += store.s(i, j);
                    }
                }
                qd0 += ds;
                cross.insert((a, b), (ds, ss));
            }
        }
        Ok(Self { n_atoms: clusters.len(), qs0, qd0, cross })
    }
}

impl BipartialObjective for AdditiveObjective {
    fn orientation(&self) -> Orientation {
        Orientation::Maximize
    }
    fn n_atoms(&self) -> usize {
        self.n_atoms
    }
    fn qs_initial(&self) -> f64 {
        self.qs0
    }
    fn qd_initial(&self) -> f64 {
        self.qd0
    }
    fn deltas(&self, a: usize, b: usize) -> Deltas {
        let (d, s) = self.cross[&pair_key(a, b)];
        Deltas { qs: s, qd: d }
    }
    fn merge(&mut self, a: usize, b: usize, new_id: usize) {
        let mut folded: HashMap<usize, (f64, f64)> = HashMap::new();
        self.cross.retain(|&(x, y), &mut v| {
            let partner = if x == a || x == b {
                Some(y)
            } else if y == a || y == b {
                Some(x)
            } else {
                None
            };
            match partner {
                Some(p) if p != a && p != b => {
                    let e = folded.entry(p).or_insert((0.0, 0.0));
                    e.0 += v.0;
                    e.1 += v.1;
                    false
                }
                Some(_) => false, // the (a, b) entry itself
                None => true,
            }
        });
        for (p, v) in folded {
            self.cross.insert(pair_key(new_id, p), v);
        }
    }
}

// ---------------------------------------------------------------------------
// Min-distance / max-proximity family (single-link separation, scaled
// max-proximity cohesion).
// ---------------------------------------------------------------------------

/// `D(A,B) = min cross d`, `S(A) = max intra s`,
/// `Q^D = sum of pairwise D`, `Q_S = sum of card(A) * S(A)`.
pub struct MinMaxObjective {
    n_atoms: usize,
    qs0: f64,
    qd0: f64,
    active: Vec<usize>,
    size: HashMap<usize, usize>,
    s_max: HashMap<usize, f64>,
    /// (min cross d, max cross s) per active unordered cluster pair.
    links: HashMap<(usize, usize), (f64, f64)>,
}

impl MinMaxObjective {
    pub fn new(store: &DissimilarityStore) -> Result<Self> {
        Self::with_partition(store, &Partition::singletons(store.n()))
    }

    pub fn with_partition(store: &DissimilarityStore, initial: &Partition) -> Result<Self> {
        require_proximities(store)?;
        if initial.n() != store.n() {
            return Err(Error::Input("partition size does not match store".into()));
        }
        let clusters = initial.clusters();
        let mut size = HashMap::new();
        let mut s_max = HashMap::new();
        let mut qs0 = 0.0;
        for (c, members) in clusters.iter().enumerate() {
            let mut smax = 0.0f64;
            for (ai, &i) in members.iter().enumerate() {
                for &j in &members[ai + 1..] {
                    smax = smax.max(store.s(i, j));
                }
            }
            size.insert(c, members.len());
            s_max.insert(c, smax);
            qs0 += members.len() as f64 * smax;
        }
        let mut links = HashMap::new();
        let mut qd0 = 0.0;
        for a in 0..clusters.len() {
            for b in (a + 1)..clusters.len() {
                let mut dmin = f64::INFINITY;
                let mut smax = 0.0f64;
                for &i in &clusters[a] {
                    for &j in &clusters[b] {
                        dmin = dmin.min(store.d(i, j));
                        smax = smax.max(store.s(i, j));
                    }
                }
                qd0 += dmin;
                links.insert((a, b), (dmin, smax));
            }
        }
        Ok(Self {
            n_atoms: clusters.len(),
            qs0,
            qd0,
            active: (0..clusters.len()).collect(),
            size,
            s_max,
            links,
        })
    }

    fn link(&self, a: usize, b: usize) -> (f64, f64) {
        self.links[&pair_key(a, b)]
    }
}

impl BipartialObjective for MinMaxObjective {
    fn orientation(&self) -> Orientation {
        Orientation::Maximize
    }
    fn n_atoms(&self) -> usize {
        self.n_atoms
    }
    fn qs_initial(&self) -> f64 {
        self.qs0
    }
    fn qd_initial(&self) -> f64 {
        self.qd0
    }
    fn deltas(&self, a: usize, b: usize) -> Deltas {
        let (na, nb) = (self.size[&a] as f64, self.size[&b] as f64);
        let (sa, sb) = (self.s_max[&a], self.s_max[&b]);
        let (d_ab, s_cross) = self.link(a, b);
        let s_merged = sa.max(sb).max(s_cross);
        let delta_qs = chop((na + nb) * s_merged - na * sa - nb * sb, s_merged);
        // Q^D loses the a-b term, and each remaining cluster's two links to
        // a and b collapse to their minimum.
        let mut delta_qd = d_ab;
        for &e in &self.active {
            if e == a || e == b {
                continue;
            }
            let (da, _) = self.link(a, e);
            let (db, _) = self.link(b, e);
            delta_qd += da.max(db);
        }
        Deltas { qs: delta_qs, qd: chop(delta_qd, d_ab) }
    }
    fn merge(&mut self, a: usize, b: usize, new_id: usize) {
        let (_, s_cross) = self.link(a, b);
        let s_merged = self.s_max[&a].max(self.s_max[&b]).max(s_cross);
        let merged_size = self.size[&a] + self.size[&b];
        for &e in &self.active.clone() {
            if e == a || e == b {
                continue;
            }
            let (da, sa) = self.link(a, e);
            let (db, sb) = self.link(b, e);
            self.links.insert(pair_key(new_id, e), (da.min(db), sa.max(sb)));
            self.links.remove(&pair_key(a, e));
            self.links.remove(&pair_key(b, e));
        }
        self.links.remove(&pair_key(a, b));
        self.active.retain(|&c| c != a && c != b);
        self.active.push(new_id);
        self.size.insert(new_id, merged_size);
        self.s_max.insert(new_id, s_merged);
    }
}

// ---------------------------------------------------------------------------
// Average-distance / additive-proximity family.
// ---------------------------------------------------------------------------

/// `D(A,B) = mean cross d`, `S(A) = sum of intra pair s`,
/// both components summed over the partition.
pub struct AvgAdditiveObjective {
    n_atoms: usize,
    qs0: f64,
    qd0: f64,
    active: Vec<usize>,
    size: HashMap<usize, usize>,
    /// (cross d sum, cross s sum) per active unordered cluster pair;
    /// averages are derived on demand.
    cross: HashMap<(usize, usize), (f64, f64)>,
}

impl AvgAdditiveObjective {
    pub fn new(store: &DissimilarityStore) -> Result<Self> {
        Self::with_partition(store, &Partition::singletons(store.n()))
    }

    pub fn with_partition(store: &DissimilarityStore, initial: &Partition) -> Result<Self> {
        require_proximities(store)?;
        if initial.n() != store.n() {
            return Err(Error::Input("partition size does not match store".into()));
        }
        let clusters = initial.clusters();
        let mut size = HashMap::new();
        let mut qs0 = 0.0;
        for (c, members) in clusters.iter().enumerate() {
            size.insert(c, members.len());
            for (ai, &i) in members.iter().enumerate() {
                for &j in &members[ai + 1..] {
                    qs0 += store.s(i, j);
                }
            }
        }
        let mut cross = HashMap::new();
        let mut qd0 = 0.0;
        for a in 0..clusters.len() {
            for b in (a + 1)..clusters.len() {
                let mut ds = 0.0;
                let mut ss = 0.0;
                for &i in &clusters[a] {
                    for &j in &clusters[b] {
                        ds += store.d(i, j);
                        ss += store.s(i, j);
                    }
                }
                qd0 += ds / (clusters[a].len() * clusters[b].len()) as f64;
                cross.insert((a, b), (ds, ss));
            }
        }
        Ok(Self {
            n_atoms: clusters.len(),
            qs0,
            qd0,
            active: (0..clusters.len()).collect(),
            size,
            cross,
        })
    }

    fn avg_d(&self, a: usize, b: usize) -> f64 {
        let (ds, _) = self.cross[&pair_key(a, b)];
        ds / (self.size[&a] * self.size[&b]) as f64
    }
}

impl BipartialObjective for AvgAdditiveObjective {
    fn orientation(&self) -> Orientation {
        Orientation::Maximize
    }
    fn n_atoms(&self) -> usize {
        self.n_atoms
    }
    fn qs_initial(&self) -> f64 {
        self.qs0
    }
    fn qd_initial(&self) -> f64 {
        self.qd0
    }
    fn deltas(&self, a: usize, b: usize) -> Deltas {
        let (_, s_cross) = self.cross[&pair_key(a, b)];
        let (na, nb) = (self.size[&a] as f64, self.size[&b] as f64);
        let mut delta_qd = self.avg_d(a, b);
        for &e in &self.active {
            if e == a || e == b {
                continue;
            }
            let ne = self.size[&e] as f64;
            let (dae, _) = self.cross[&pair_key(a, e)];
            let (dbe, _) = self.cross[&pair_key(b, e)];
            let before = dae / (na * ne) + dbe / (nb * ne);
            let after = (dae + dbe) / ((na + nb) * ne);
            delta_qd += before - after;
        }
        Deltas { qs: s_cross, qd: chop(delta_qd, delta_qd.abs()) }
    }
    fn merge(&mut self, a: usize, b: usize, new_id: usize) {
        let merged_size = self.size[&a] + self.size[&b];
        for &e in &self.active.clone() {
            if e == a || e == b {
                continue;
            }
            let (dae, sae) = self.cross[&pair_key(a, e)];
            let (dbe, sbe) = self.cross[&pair_key(b, e)];
            self.cross.insert(pair_key(new_id, e), (dae + dbe, sae + sbe));
            self.cross.remove(&pair_key(a, e));
            self.cross.remove(&pair_key(b, e));
        }
        self.cross.remove(&pair_key(a, b));
        self.active.retain(|&c| c != a && c != b);
        self.active.push(new_id);
        self.size.insert(new_id, merged_size);
    }
}

// ---------------------------------------------------------------------------
// Facility location: Q(P) = sum of cluster costs + p, minimized.
// ---------------------------------------------------------------------------

/// Concrete per-cluster cost form for the facility objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FacilityCost {
    /// Sum of Euclidean distances to the cluster mean.
    SumToCentroid,
    /// Sum of intra-cluster pairwise distances divided by cluster size.
    PairwiseSumNormalized,
}

impl std::str::FromStr for FacilityCost {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "centroid" | "sum_to_centroid" => Ok(Self::SumToCentroid),
            "pairsum" | "pairwise_sum_normalized" => Ok(Self::PairwiseSumNormalized),
            other => Err(Error::Config(format!("unknown facility cost '{other}'"))),
        }
    }
}

/// The facility-location objective: each cluster pays a unit establishment
/// cost plus a scaled dispersion cost `D(A_q)`; singletons cost nothing
/// beyond the unit, so `Q(I) = n`.
pub struct FacilityObjective<'a> {
    source: FacilitySource<'a>,
    cost: FacilityCost,
    scale: f64,
}

enum FacilitySource<'a> {
    Data(&'a DataTable),
    Store(&'a DissimilarityStore),
}

impl<'a> FacilityObjective<'a> {
    pub fn from_data(data: &'a DataTable, cost: FacilityCost, scale: f64) -> Result<Self> {
        if cost == FacilityCost::PairwiseSumNormalized {
            return Err(Error::Config(
                "pairwise_sum_normalized cost needs a dissimilarity store".into(),
            ));
        }
        Self::check_scale(scale)?;
        Ok(Self { source: FacilitySource::Data(data), cost, scale })
    }

    pub fn from_store(store: &'a DissimilarityStore, scale: f64) -> Result<Self> {
        Self::check_scale(scale)?;
        Ok(Self {
            source: FacilitySource::Store(store),
            cost: FacilityCost::PairwiseSumNormalized,
            scale,
        })
    }

    fn check_scale(scale: f64) -> Result<()> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::Config(format!("facility scale must be positive, got {scale}")));
        }
        Ok(())
    }

    pub fn n_objects(&self) -> usize {
        match &self.source {
            FacilitySource::Data(d) => d.n_objects(),
            FacilitySource::Store(s) => s.n(),
        }
    }

    /// Scaled dispersion cost `D(A)` of one cluster; zero for singletons.
    pub fn cluster_cost(&self, members: &[usize]) -> f64 {
        if members.len() < 2 {
            return 0.0;
        }
        let raw = match (&self.source, self.cost) {
            (FacilitySource::Data(data), FacilityCost::SumToCentroid) => {
                let m = data.n_features();
                let mut centroid = vec![0.0; m];
                for &i in members {
                    for (c, v) in centroid.iter_mut().zip(data.row(i)) {
                        *c += v;
                    }
                }
                for c in centroid.iter_mut() {
                    *c /= members.len() as f64;
                }
                members
                    .iter()
                    .map(|&i| Metric::Euclidean.distance(data.row(i), &centroid))
                    .sum()
            }
            (FacilitySource::Store(store), _) => {
                let mut sum = 0.0;
                for (ai, &i) in members.iter().enumerate() {
                    for &j in &members[ai + 1..] {
                        sum += store.d(i, j);
                    }
                }
                sum / members.len() as f64
            }
            (FacilitySource::Data(_), FacilityCost::PairwiseSumNormalized) => {
                unreachable!("rejected at construction")
            }
        };
        self.scale * raw
    }
}

/// Change of the facility objective when merging two clusters:
/// `D(A u B) - D(A) - D(B) - 1`. Negative means the merger strictly
/// decreases `Q(P)`.
pub fn facility_merge_gain(
    objective: &FacilityObjective<'_>,
    members_a: &[usize],
    members_b: &[usize],
) -> f64 {
    let mut merged = members_a.to_vec();
    merged.extend_from_slice(members_b);
    merged.sort_unstable();
    objective.cluster_cost(&merged)
        - objective.cluster_cost(members_a)
        - objective.cluster_cost(members_b)
        - 1.0
}

/// Greedy facility-location descent: repeatedly executes the most improving
/// merger (most negative gain, ties by lowest cluster-id pair) until no pair
/// strictly decreases `Q(P) = sum D(A_q) + p`.
pub fn run_facility(objective: &FacilityObjective<'_>) -> Result<(Partition, MergeHistory)> {
    let n = objective.n_objects();
    if n == 0 {
        return Err(Error::Input("empty instance".into()));
    }
    let mut members: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    let mut cost: Vec<f64> = vec![0.0; n];
    let mut id: Vec<usize> = (0..n).collect();
    let mut alive: Vec<bool> = vec![true; n];

    let mut total_cost = 0.0;
    let mut p = n;
    let mut profile = ObjectiveProfile {
        orientation: Orientation::Minimize,
        qs: vec![p as f64],
        qd: vec![0.0],
        q_half: vec![0.5 * p as f64],
    };
    let mut records = Vec::new();
    let mut step = 0usize;

    loop {
        let mut best: Option<(f64, usize, usize, usize, usize, f64)> = None;
        for i in 0..n {
            if !alive[i] {
                continue;
            }
            for j in (i + 1)..n {
                if !alive[j] {
                    continue;
                }
                let mut merged = members[i].clone();
                merged.extend_from_slice(&members[j]);
                let merged_cost = objective.cluster_cost(&merged);
                let gain = merged_cost - cost[i] - cost[j] - 1.0;
                let (lo, hi) = pair_key(id[i], id[j]);
                let better = match best {
                    None => true,
                    Some((bg, bl, bh, ..)) => {
                        gain < bg || (gain == bg && (lo, hi) < (bl, bh))
                    }
                };
                if better {
                    best = Some((gain, lo, hi, i, j, merged_cost));
                }
            }
        }
        let Some((gain, left, right, si, sj, merged_cost)) = best else { break };
        if gain >= 0.0 {
            break;
        }

        step += 1;
        let new_id = n + step - 1;
        let delta_qd = merged_cost - cost[si] - cost[sj];
        let mut merged = std::mem::take(&mut members[si]);
        merged.append(&mut members[sj]);
        merged.sort_unstable();
        members[si] = merged;
        cost[si] = merged_cost;
        alive[sj] = false;
        id[si] = new_id;

        total_cost += delta_qd;
        p -= 1;
        profile.qs.push(p as f64);
        profile.qd.push(total_cost);
        profile.q_half.push(0.5 * (p as f64 + total_cost));

        // Dual-form switch point: the unit establishment saving plays the
        // similarity-side delta.
        let r = delta_qd / (delta_qd + 1.0);
        records.push(MergeRecord {
            step,
            left,
            right,
            new_cluster: new_id,
            size: members[si].len(),
            r: Some(r),
            delta_qs: Some(1.0),
            delta_qd: Some(delta_qd),
            link_value: r,
        });
    }

    let mut labels = vec![0usize; n];
    for (slot, m) in members.iter().enumerate() {
        if alive[slot] {
            for &i in m {
                labels[i] = slot;
            }
        }
    }
    let partition = Partition::from_labels(&labels)?;
    let history = MergeHistory { leaves: n, records, profile: Some(profile) };
    Ok((partition, history))
}
