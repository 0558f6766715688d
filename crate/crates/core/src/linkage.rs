//! Classical hierarchical aggregation via the Lance-Williams distance
//! update, used standalone and as the equivalence oracle for the additive
//! bi-partial family.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DissimilarityStore, MergeHistory, MergeRecord};

/// The six classical schemes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkageScheme {
    Single,
    Complete,
    /// Unweighted average (group average).
    Upgma,
    /// Weighted average.
    Wpgma,
    /// Centroid (UPGMC); may produce dendrogram inversions.
    Centroid,
    /// Median (WPGMC); may produce dendrogram inversions.
    Median,
}

impl std::str::FromStr for LinkageScheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "single" => Ok(Self::Single),
            "complete" => Ok(Self::Complete),
            "upgma" | "average" => Ok(Self::Upgma),
            "wpgma" | "weighted" => Ok(Self::Wpgma),
            "centroid" | "upgmc" => Ok(Self::Centroid),
            "median" | "wpgmc" => Ok(Self::Median),
            other => Err(Error::Config(format!("unknown linkage scheme '{other}'"))),
        }
    }
}

/// Lance-Williams coefficients for one update, already evaluated for the
/// cluster sizes at hand.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LWCoefficients {
    pub a1: f64,
    pub a2: f64,
    pub b: f64,
    pub c: f64,
}

impl LinkageScheme {
    /// Coefficients for updating the distance from the merger of clusters
    /// sized `n_left` and `n_right` to a third cluster sized `n_other`.
    /// None of the six schemes here depends on `n_other`; it stays in the
    /// signature because extended (Ward-style) coefficient families do.
    pub fn coefficients(self, _n_other: usize, n_left: usize, n_right: usize) -> LWCoefficients {
        let (nl, nr) = (n_left as f64, n_right as f64);
        match self {
            LinkageScheme::Single => LWCoefficients { a1: 0.5, a2: 0.5, b: 0.0, c: -0.5 },
            LinkageScheme::Complete => LWCoefficients { a1: 0.5, a2: 0.5, b: 0.0, c: 0.5 },
            LinkageScheme::Upgma => LWCoefficients {
                a1: nl / (nl + nr),
                a2: nr / (nl + nr),
                b: 0.0,
                c: 0.0,
            },
            LinkageScheme::Wpgma => LWCoefficients { a1: 0.5, a2: 0.5, b: 0.0, c: 0.0 },
            LinkageScheme::Centroid => LWCoefficients {
                a1: nl / (nl + nr),
                a2: nr / (nl + nr),
                b: -(nl * nr) / ((nl + nr) * (nl + nr)),
                c: 0.0,
            },
            LinkageScheme::Median => LWCoefficients { a1: 0.5, a2: 0.5, b: -0.25, c: 0.0 },
        }
    }
}

/// One Lance-Williams update:
/// `a1*D(left,q) + a2*D(right,q) + b*D(left,right) + c*|D(left,q) - D(right,q)|`.
pub fn lw_update(d_left_q: f64, d_right_q: f64, d_left_right: f64, coeffs: LWCoefficients) -> f64 {
    coeffs.a1 * d_left_q
        + coeffs.a2 * d_right_q
        + coeffs.b * d_left_right
        + coeffs.c * (d_left_q - d_right_q).abs()
}

/// Runs the generic merger procedure: repeatedly merge the pair of clusters
/// at minimum inter-cluster distance, updating distances via the scheme's
/// Lance-Williams coefficients. Ties break on the lowest (left id, right id)
/// pair. `r` and the objective deltas stay unset in classical mode.
pub fn run_linkage(store: &DissimilarityStore, scheme: LinkageScheme) -> Result<MergeHistory> {
    let n = store.n();
    if n < 2 {
        return Err(Error::Input(format!("linkage needs at least 2 objects, got {n}")));
    }

    // Working matrix over slots 0..n-1; a merger reuses the left slot and
    // tombstones the right one.
    let mut dist: Vec<f64> = (0..n * n).map(|k| store.d(k / n, k % n)).collect();
    let mut cluster_id: Vec<usize> = (0..n).collect();
    let mut size: Vec<usize> = vec![1; n];
    let mut alive: Vec<bool> = vec![true; n];

    let mut records = Vec::with_capacity(n - 1);
    for step in 1..n {
        // Find the minimum-distance active pair, ties by cluster ids.
        let mut best: Option<(f64, usize, usize, usize, usize)> = None;
        for i in 0..n {
            if !alive[i] {
                continue;
            }
            for j in (i + 1)..n {
                if !alive[j] {
                    continue;
                }
                let d = dist[i * n + j];
                let (lo, hi) = if cluster_id[i] < cluster_id[j] {
                    (cluster_id[i], cluster_id[j])
                } else {
                    (cluster_id[j], cluster_id[i])
                };
                let better = match best {
                    None => true,
                    Some((bd, bl, bh, _, _)) => d < bd || (d == bd && (lo, hi) < (bl, bh)),
                };
                if better {
                    best = Some((d, lo, hi, i, j));
                }
            }
        }
        let (link_value, left_id, right_id, si, sj) =
            best.expect("at least one active pair remains");

        let new_id = n + step - 1;
        let n_left = size[si];
        let n_right = size[sj];

        for q in 0..n {
            if !alive[q] || q == si || q == sj {
                continue;
            }
            let coeffs = scheme.coefficients(size[q], n_left, n_right);
            let updated = lw_update(dist[si * n + q], dist[sj * n + q], link_value, coeffs);
            dist[si * n + q] = updated;
            dist[q * n + si] = updated;
        }
        alive[sj] = false;
        cluster_id[si] = new_id;
        size[si] = n_left + n_right;

        records.push(MergeRecord {
            step,
            left: left_id,
            right: right_id,
            new_cluster: new_id,
            size: n_left + n_right,
            r: None,
            delta_qs: None,
            delta_qd: None,
            link_value,
        });
    }

    Ok(MergeHistory { leaves: n, records, profile: None })
}
