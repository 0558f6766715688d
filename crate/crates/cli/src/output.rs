//! Artifact writers: merge table, dendrogram (JSON + Newick), partition
//! and objective-curve CSVs. All numeric CSV output uses 17 significant
//! digits so values survive a parse round trip bit-exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use bipartial::{MergeHistory, Partition, Result};

/// A float at 17 significant digits (round-trippable for f64).
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt17).unwrap_or_default()
}

/// merge_table.csv: one row per merger with thresholds, deltas and the
/// per-level objective values (empty cells for classical linkage runs).
pub fn write_merge_table(path: &Path, history: &MergeHistory) -> Result<()> {
    let mut out = String::from(
        "t,left,right,size,link_value,r_t,delta_qs,delta_qd,qs_t,qd_t,q_half_t\n",
    );
    let profile = history.profile.as_ref();
    for rec in &history.records {
        // Profile entry t corresponds to the partition after merger t.
        let level = profile.map(|p| (p.qs[rec.step], p.qd[rec.step], p.q_half[rec.step]));
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            rec.step,
            rec.left,
            rec.right,
            rec.size,
            fmt17(rec.link_value),
            fmt_opt(rec.r),
            fmt_opt(rec.delta_qs),
            fmt_opt(rec.delta_qd),
            fmt_opt(level.map(|l| l.0)),
            fmt_opt(level.map(|l| l.1)),
            fmt_opt(level.map(|l| l.2)),
        )
        .expect("string write");
    }
    fs::write(path, out)?;
    Ok(())
}

/// dendrogram.json: the full history, parseable back bit-exactly.
pub fn write_history_json(path: &Path, history: &MergeHistory) -> Result<()> {
    let json = serde_json::to_string_pretty(history)
        .map_err(|e| bipartial::Error::Input(format!("history serialization: {e}")))?;
    fs::write(path, json + "\n")?;
    Ok(())
}

/// Height source of the Newick export.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeightSource {
    /// The merge threshold r^t (bi-partial runs).
    R,
    /// The algorithm's link value (classical linkage distance).
    Distance,
}

/// dendrogram.newick: rooted tree with branch lengths derived from
/// cumulative node heights (leaves at height 0). Inverted hierarchies
/// (non-monotone heights) produce negative branch lengths; callers should
/// surface [`MergeHistory::height_inversions`] alongside.
pub fn write_newick(
    path: &Path,
    history: &MergeHistory,
    ids: &[String],
    source: HeightSource,
) -> Result<()> {
    let leaves = history.leaves;
    let total = leaves + history.records.len();
    let mut height = vec![0.0f64; total];
    let mut children: Vec<Option<(usize, usize)>> = vec![None; total];
    for rec in &history.records {
        let h = match source {
            HeightSource::R => rec.r.unwrap_or(rec.link_value),
            HeightSource::Distance => rec.link_value,
        };
        height[rec.new_cluster] = h;
        children[rec.new_cluster] = Some((rec.left, rec.right));
    }

    fn emit(
        node: usize,
        parent_height: f64,
        height: &[f64],
        children: &[Option<(usize, usize)>],
        ids: &[String],
        out: &mut String,
    ) {
        match children[node] {
            None => out.push_str(&ids[node]),
            Some((l, r)) => {
                out.push('(');
                emit(l, height[node], height, children, ids, out);
                out.push(',');
                emit(r, height[node], height, children, ids, out);
                out.push(')');
            }
        }
        let _ = write!(out, ":{}", fmt17(parent_height - height[node]));
    }

    let mut out = String::new();
    if history.records.is_empty() {
        // Degenerate single-leaf tree.
        out.push_str(ids.first().map(String::as_str).unwrap_or("0"));
    } else {
        let root = total - 1;
        match children[root] {
            Some((l, r)) => {
                out.push('(');
                emit(l, height[root], &height, &children, ids, &mut out);
                out.push(',');
                emit(r, height[root], &height, &children, ids, &mut out);
                out.push(')');
            }
            None => out.push_str(&ids[root]),
        }
    }
    out.push_str(";\n");
    fs::write(path, out)?;
    Ok(())
}

/// partition.csv: object_id,cluster_label.
pub fn write_partition(path: &Path, ids: &[String], partition: &Partition) -> Result<()> {
    let mut out = String::from("object_id,cluster_label\n");
    for (id, &label) in ids.iter().zip(partition.labels()) {
        writeln!(out, "{id},{label}").expect("string write");
    }
    fs::write(path, out)?;
    Ok(())
}

/// objective_curve.csv: per-level p with Q_S, Q^D and Q at r = 1/2.
pub fn write_objective_curve(path: &Path, history: &MergeHistory) -> Result<()> {
    let profile = history
        .profile
        .as_ref()
        .ok_or_else(|| bipartial::Error::Input("history has no objective profile".into()))?;
    let mut out = String::from("p,qs,qd,q_half\n");
    for (t, ((qs, qd), qh)) in profile
        .qs
        .iter()
        .zip(&profile.qd)
        .zip(&profile.q_half)
        .enumerate()
    {
        let p = history.leaves - t;
        writeln!(out, "{p},{},{},{}", fmt17(*qs), fmt17(*qd), fmt17(*qh))
            .expect("string write");
    }
    fs::write(path, out)?;
    Ok(())
}
