//! The generic bi-partial merger engine: at every step, merge the pair of
//! clusters whose switch-point r* = dQ_D / (dQ_D + dQ_S) is smallest, track
//! both objective components, and select the output partition around the
//! r = 1/2 point.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{MergeHistory, MergeRecord, ObjectiveProfile, Orientation, Partition};

/// The pair of non-negative merge deltas an objective reports.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Deltas {
    /// Cohesion-side change magnitude: the gain of Q_S for a maximized
    /// objective, or the drop of the inter-cluster similarity term for a
    /// minimized (dual-form) one.
    pub qs: f64,
    /// Separation-side change magnitude: the loss of Q^D, or the growth of
    /// the intra-cluster distance term in the dual form.
    pub qd: f64,
}

/// Any objective the merger engine can drive.
///
/// Implementations own all per-cluster state. Cluster ids follow the shared
/// convention: atoms are `0..n_atoms-1`, the step-`t` merger creates id
/// `n_atoms + t - 1`, which the engine passes to `merge`.
pub trait BipartialObjective {
    fn orientation(&self) -> Orientation;

    /// Number of initial clusters (atoms) the objective was built over.
    fn n_atoms(&self) -> usize;

    /// Q_S of the initial partition.
    fn qs_initial(&self) -> f64;

    /// Q^D of the initial partition.
    fn qd_initial(&self) -> f64;

    /// Merge deltas for two disjoint current clusters; both must be >= 0
    /// under the opposite-monotonicity assumption.
    fn deltas(&self, a: usize, b: usize) -> Deltas;

    /// Commits the merger of `a` and `b` into the cluster `new_id`.
    fn merge(&mut self, a: usize, b: usize, new_id: usize);
}

/// The switch point r* for merging clusters `a` and `b`: the parameter value
/// at which the merged partition overtakes the current one. Degenerate pairs
/// (both deltas zero) report r* = 0 and are thereby merged first.
pub fn merge_threshold<O: BipartialObjective + ?Sized>(
    objective: &O,
    a: usize,
    b: usize,
) -> Result<f64> {
    let d = objective.deltas(a, b);
    if d.qs < 0.0 || d.qd < 0.0 {
        return Err(Error::Contract(format!(
            "negative merge delta for clusters ({a},{b}): delta_qs = {}, delta_qd = {}",
            d.qs, d.qd
        )));
    }
    let denom = d.qs + d.qd;
    if denom == 0.0 {
        Ok(0.0)
    } else {
        Ok(d.qd / denom)
    }
}

/// Runs the merger engine to the full hierarchy: `n_atoms - 1` records, each
/// merging the pair with minimum r*, ties broken by the lowest (left, right)
/// cluster-id pair. The attached profile carries Q_S, Q^D and Q(P, 1/2) for
/// every level.
pub fn run_bipartial<O: BipartialObjective + ?Sized>(objective: &mut O) -> Result<MergeHistory> {
    let n = objective.n_atoms();
    if n < 2 {
        return Err(Error::Input(format!("merger engine needs at least 2 atoms, got {n}")));
    }
    let orientation = objective.orientation();
    let mut qs = objective.qs_initial();
    let mut qd = objective.qd_initial();
    let mut profile = ObjectiveProfile {
        orientation,
        qs: vec![qs],
        qd: vec![qd],
        q_half: vec![0.5 * (qs + qd)],
    };

    let mut active: Vec<usize> = (0..n).collect();
    let mut records = Vec::with_capacity(n - 1);

    for step in 1..n {
        let mut best: Option<(f64, usize, usize, Deltas)> = None;
        for ai in 0..active.len() {
            for bi in (ai + 1)..active.len() {
                let (a, b) = (active[ai], active[bi]);
                let d = objective.deltas(a, b);
                if d.qs < 0.0 || d.qd < 0.0 {
                    return Err(Error::Contract(format!(
                        "negative merge delta at step {step} for clusters ({a},{b}): \
                         delta_qs = {}, delta_qd = {}",
                        d.qs, d.qd
                    )));
                }
                let denom = d.qs + d.qd;
                let r = if denom == 0.0 { 0.0 } else { d.qd / denom };
                let better = match best {
                    None => true,
                    Some((br, bl, bh, _)) => r < br || (r == br && (a, b) < (bl, bh)),
                };
                if better {
                    best = Some((r, a, b, d));
                }
            }
        }
        let (r, left, right, d) = best.expect("active pair exists");

        let new_id = n + step - 1;
        objective.merge(left, right, new_id);
        active.retain(|&c| c != left && c != right);
        active.push(new_id);
        active.sort_unstable();

        match orientation {
            Orientation::Maximize => {
                qs += d.qs;
                qd -= d.qd;
            }
            Orientation::Minimize => {
                qs -= d.qs;
                qd += d.qd;
            }
        }
        profile.qs.push(qs);
        profile.qd.push(qd);
        profile.q_half.push(0.5 * (qs + qd));

        records.push(MergeRecord {
            step,
            left,
            right,
            new_cluster: new_id,
            size: 0, // filled below from the reconstructed tree
            r: Some(r),
            delta_qs: Some(d.qs),
            delta_qd: Some(d.qd),
            link_value: r,
        });
    }

    let mut history = MergeHistory { leaves: n, records, profile: Some(profile) };
    fill_sizes(&mut history);
    Ok(history)
}

fn fill_sizes(history: &mut MergeHistory) {
    let n = history.leaves;
    let mut size = vec![1usize; n + history.records.len()];
    for i in 0..history.records.len() {
        let rec = &history.records[i];
        let s = size[rec.left] + size[rec.right];
        size[rec.new_cluster] = s;
        history.records[i].size = s;
    }
}

/// Which rule picked the output partition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopRule {
    /// Monotone r sequence: stop where r^t crosses 1/2.
    RCrossing,
    /// Non-monotone r sequence: take the level with the best Q(P, 1/2).
    GlobalArgbestAtHalf,
}

/// Outcome of the partition-selection rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StopDecision {
    pub selected_step: usize,
    pub rule: StopRule,
    pub r_sequence_monotone: bool,
}

/// Selects the output partition of a completed bi-partial run. With a
/// monotone r sequence this is the classical crossing rule; otherwise the
/// profile's best value at r = 1/2 decides, which coincides with the
/// crossing rule whenever both apply.
pub fn select_partition(history: &MergeHistory) -> Result<(Partition, StopDecision)> {
    let rs = history
        .r_sequence()
        .ok_or_else(|| Error::Input("history has no r sequence; classical linkage run?".into()))?;
    let profile = history
        .profile
        .as_ref()
        .ok_or_else(|| Error::Input("history has no objective profile".into()))?;

    let orientation = profile.orientation;
    // The engine's r grows towards 1; the mirrored k-means merger starts at 1
    // and shrinks. Monotonicity and the crossing rule follow the orientation.
    let (monotone, crossing_step) = match orientation {
        Orientation::Maximize => {
            let mono = rs.windows(2).all(|w| w[1] >= w[0]);
            let step = rs.iter().rposition(|&r| r <= 0.5).map(|i| i + 1).unwrap_or(0);
            (mono, step)
        }
        Orientation::Minimize => {
            let mono = rs.windows(2).all(|w| w[1] <= w[0]);
            let step = rs.iter().rposition(|&r| r >= 0.5).map(|i| i + 1).unwrap_or(0);
            (mono, step)
        }
    };

    let decision = if monotone {
        StopDecision {
            selected_step: crossing_step,
            rule: StopRule::RCrossing,
            r_sequence_monotone: true,
        }
    } else {
        let best = match orientation {
            Orientation::Maximize => profile
                .q_half
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .map(|(t, _)| t)
                .unwrap_or(0),
            Orientation::Minimize => profile
                .q_half
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.total_cmp(b.1))
                .map(|(t, _)| t)
                .unwrap_or(0),
        };
        StopDecision {
            selected_step: best,
            rule: StopRule::GlobalArgbestAtHalf,
            r_sequence_monotone: false,
        }
    };

    let partition = history.partition_at_step(decision.selected_step)?;
    Ok((partition, decision))
}

/// Per-step diagnostics of the piecewise-linear objective envelope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeReport {
    /// Gradient g_t = Q_S(P^t) - Q^D(P^t) at every level.
    pub gradients: Vec<f64>,
    /// For t >= 1: whether g_t >= g_{t-1} (the convexity conjecture).
    pub gradient_nondecreasing: Vec<bool>,
    /// Steps where r^t broke the monotone direction expected for the run's
    /// orientation; a signal of inhomogeneous object distribution.
    pub r_inversions: Vec<usize>,
}

impl EnvelopeReport {
    pub fn gradient_monotone(&self) -> bool {
        self.gradient_nondecreasing.iter().all(|&b| b)
    }
}

/// Emits the envelope diagnostic of a completed run.
pub fn envelope_report(history: &MergeHistory) -> Result<EnvelopeReport> {
    let profile = history
        .profile
        .as_ref()
        .ok_or_else(|| Error::Input("history has no objective profile".into()))?;
    let gradients: Vec<f64> = profile
        .qs
        .iter()
        .zip(&profile.qd)
        .map(|(s, d)| s - d)
        .collect();
    let gradient_nondecreasing = gradients.windows(2).map(|w| w[1] >= w[0]).collect();
    let r_inversions = match history.r_sequence() {
        Some(rs) => rs
            .windows(2)
            .enumerate()
            .filter(|(_, w)| match profile.orientation {
                Orientation::Maximize => w[1] < w[0],
                Orientation::Minimize => w[1] > w[0],
            })
            .map(|(i, _)| i + 2) // the later step of the offending pair
            .collect(),
        None => Vec::new(),
    };
    Ok(EnvelopeReport { gradients, gradient_nondecreasing, r_inversions })
}
