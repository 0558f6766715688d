//! Exhaustive ground truth: enumerate all set partitions of a small
//! instance, evaluate any bi-partial objective from scratch at any r, and
//! compute exact switch points between partitions.
//!
//! The evaluators here deliberately share no incremental code with the
//! objective library — their independence is what makes them an oracle.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DissimilarityStore, Partition};

/// Default enumeration guard; Bell(12) is about 4.2 million partitions.
pub const ENUMERATION_GUARD: usize = 12;
/// Absolute cap even with the guard overridden.
pub const ENUMERATION_HARD_CAP: usize = 14;

/// Which objective family the oracle evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleSpec {
    Additive,
    MinMax,
    AvgAdditive,
}

impl std::str::FromStr for OracleSpec {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "additive" => Ok(Self::Additive),
            "minmax" | "min_max" => Ok(Self::MinMax),
            "avg_additive" | "avg-additive" => Ok(Self::AvgAdditive),
            other => Err(Error::Config(format!("unsupported oracle objective '{other}'"))),
        }
    }
}

/// Calls `visit` once for every set partition of `0..n`, in restricted
/// growth string order. `limit` is the refusal bound (at most the hard cap).
pub fn for_each_partition<F: FnMut(&Partition)>(
    n: usize,
    limit: usize,
    mut visit: F,
) -> Result<()> {
    let limit = limit.min(ENUMERATION_HARD_CAP);
    if n == 0 {
        return Err(Error::Input("cannot enumerate partitions of an empty set".into()));
    }
    if n > limit {
        return Err(Error::EnumerationBound { n, max: limit });
    }
    // Restricted growth strings: labels[0] = 0 and
    // labels[i] <= 1 + max(labels[..i]); each string is a canonical
    // partition, so every partition appears exactly once.
    let mut labels = vec![0usize; n];
    fn recurse<F: FnMut(&Partition)>(
        labels: &mut Vec<usize>,
        i: usize,
        max_used: usize,
        visit: &mut F,
    ) {
        if i == labels.len() {
            let p = Partition::from_labels(labels).expect("non-empty RGS labels");
            visit(&p);
            return;
        }
        for l in 0..=max_used + 1 {
            labels[i] = l;
            recurse(labels, i + 1, max_used.max(l), visit);
        }
    }
    if n == 1 {
        visit(&Partition::from_labels(&labels)?);
        return Ok(());
    }
    for l in 0..=1usize {
        labels[1] = l;
        recurse(&mut labels, 2, l, &mut visit);
    }
    Ok(())
}

/// All set partitions of `0..n` under the default guard (n <= 12).
pub fn enumerate_partitions(n: usize) -> Result<Vec<Partition>> {
    let mut out = Vec::new();
    for_each_partition(n, ENUMERATION_GUARD, |p| out.push(p.clone()))?;
    Ok(out)
}

/// `(Q_S, Q^D)` of a partition, evaluated from scratch.
pub fn oracle_components(
    spec: OracleSpec,
    store: &DissimilarityStore,
    partition: &Partition,
) -> Result<(f64, f64)> {
    if partition.n() != store.n() {
        return Err(Error::Input("partition size does not match store".into()));
    }
    if !store.has_proximities() {
        return Err(Error::Config(
            "oracle evaluation requires a proximity transform applied to the store".into(),
        ));
    }
    let clusters = partition.clusters();
    let qs = match spec {
        OracleSpec::Additive | OracleSpec::AvgAdditive => {
            let mut total = 0.0;
            for members in &clusters {
                for (ai, &i) in members.iter().enumerate() {
                    for &j in &members[ai + 1..] {
                        total += store.s(i, j);
                    }
                }
            }
            total
        }
        OracleSpec::MinMax => {
            let mut total = 0.0;
            for members in &clusters {
                let mut smax = 0.0f64;
                for (ai, &i) in members.iter().enumerate() {
                    for &j in &members[ai + 1..] {
                        smax = smax.max(store.s(i, j));
                    }
                }
                total += members.len() as f64 * smax;
            }
            total
        }
    };
    let mut qd = 0.0;
    for a in 0..clusters.len() {
        for b in (a + 1)..clusters.len() {
            qd += match spec {
                OracleSpec::Additive => {
                    let mut sum = 0.0;
                    for &i in &clusters[a] {
                        for &j in &clusters[b] {
                            sum += store.d(i, j);
                        }
                    }
                    sum
                }
                OracleSpec::MinMax => {
                    let mut dmin = f64::INFINITY;
                    for &i in &clusters[a] {
                        for &j in &clusters[b] {
                            dmin = dmin.min(store.d(i, j));
                        }
                    }
                    dmin
                }
                OracleSpec::AvgAdditive => {
                    let mut sum = 0.0;
                    for &i in &clusters[a] {
                        for &j in &clusters[b] {
                            sum += store.d(i, j);
                        }
                    }
                    sum / (clusters[a].len() * clusters[b].len()) as f64
                }
            };
        }
    }
    Ok((qs, qd))
}

/// `Q(P, r) = r * Q_S(P) + (1 - r) * Q^D(P)`, maximize orientation.
pub fn oracle_value(
    spec: OracleSpec,
    store: &DissimilarityStore,
    partition: &Partition,
    r: f64,
) -> Result<f64> {
    let (qs, qd) = oracle_components(spec, store, partition)?;
    Ok(r * qs + (1.0 - r) * qd)
}

/// Global optimum of `Q(P, r)` over all set partitions. Ties resolve to the
/// partition earliest in restricted-growth-string order.
pub fn oracle_best(
    spec: OracleSpec,
    store: &DissimilarityStore,
    r: f64,
) -> Result<(Partition, f64)> {
    oracle_best_bounded(spec, store, r, ENUMERATION_GUARD)
}

/// Like [`oracle_best`] with an explicit enumeration guard (capped at
/// [`ENUMERATION_HARD_CAP`]).
pub fn oracle_best_bounded(
    spec: OracleSpec,
    store: &DissimilarityStore,
    r: f64,
    limit: usize,
) -> Result<(Partition, f64)> {
    if !(0.0..=1.0).contains(&r) {
        return Err(Error::Config(format!("r = {r} outside [0, 1]")));
    }
    let mut best: Option<(Partition, f64)> = None;
    let mut failure: Option<Error> = None;
    for_each_partition(store.n(), limit, |p| {
        if failure.is_some() {
            return;
        }
        match oracle_value(spec, store, p, r) {
            Ok(v) => {
                let better = best.as_ref().map_or(true, |(_, bv)| v > *bv);
                if better {
                    best = Some((p.clone(), v));
                }
            }
            Err(e) => failure = Some(e),
        }
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    best.ok_or_else(|| Error::Input("no partitions enumerated".into()))
}

/// The exact crossing value of r where `Q(P, r) = Q(P_ref, r)`: the
/// balance point at which the coarser partition `P` overtakes `P_ref`.
/// Requires the hierarchy direction `Q_S(P) > Q_S(P_ref)` and
/// `Q^D(P) < Q^D(P_ref)`.
pub fn oracle_switch_point(
    spec: OracleSpec,
    store: &DissimilarityStore,
    p: &Partition,
    p_ref: &Partition,
) -> Result<f64> {
    let (qs, qd) = oracle_components(spec, store, p)?;
    let (qs_ref, qd_ref) = oracle_components(spec, store, p_ref)?;
    let gain_s = qs - qs_ref;
    let drop_d = qd_ref - qd;
    if gain_s <= 0.0 && drop_d <= 0.0 {
        return Err(Error::IncomparablePartitions(format!(
            "no switch point: Q_S gain = {gain_s}, Q^D drop = {drop_d}"
        )));
    }
    if gain_s < 0.0 || drop_d < 0.0 {
        return Err(Error::IncomparablePartitions(format!(
            "partitions not ordered in the hierarchy sense: \
             Q_S gain = {gain_s}, Q^D drop = {drop_d}"
        )));
    }
    Ok(drop_d / (drop_d + gain_s))
}
