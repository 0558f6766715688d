//! Shared domain types: data tables, dissimilarity stores, proximity
//! transforms, partitions and merge histories.

use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance used when validating an imported distance matrix for symmetry.
pub const SYMMETRY_TOLERANCE: f64 = 1e-9;

/// A table of `n` objects described by `m` numeric features.
#[derive(Debug, Clone, PartialEq)]
pub struct DataTable {
    ids: Vec<String>,
    values: Vec<f64>,
    n_features: usize,
}

impl DataTable {
    /// Builds a table from row-major values. Every value must be finite and
    /// object ids must be unique.
    pub fn new(ids: Vec<String>, values: Vec<f64>, n_features: usize) -> Result<Self> {
        if n_features == 0 {
            return Err(Error::Input("data table needs at least one feature".into()));
        }
        if ids.is_empty() || values.len() != ids.len() * n_features {
            return Err(Error::Input(format!(
                "value count {} does not match {} objects x {} features",
                values.len(),
                ids.len(),
                n_features
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Input(format!("non-finite feature value {v}")));
        }
        let mut seen = ids.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != ids.len() {
            return Err(Error::Input("object ids are not unique".into()));
        }
        Ok(Self { ids, values, n_features })
    }

    /// Convenience constructor with auto-assigned ids `0..n-1`.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n_features = rows.first().map(|r| r.len()).unwrap_or(0);
        let ids = (0..rows.len()).map(|i| i.to_string()).collect();
        let values = rows.iter().flatten().copied().collect();
        Self::new(ids, values, n_features)
    }

    /// Reads a table from CSV. An optional header row is skipped when its
    /// cells are not all numeric; a non-numeric first column supplies object
    /// ids, otherwise ids are auto-assigned `0..n-1`.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut rows: Vec<Vec<String>> = Vec::new();
        for record in rdr.records() {
            let record = record?;
            let cells: Vec<String> = record.iter().map(|c| c.to_string()).collect();
            if cells.iter().all(|c| c.is_empty()) {
                continue;
            }
            rows.push(cells);
        }
        if rows.is_empty() {
            return Err(Error::Input("empty CSV input".into()));
        }
        let numeric = |c: &str| c.parse::<f64>().is_ok();
        // Header detection: first row all non-numeric past a possible id column.
        let first_data_row = if rows.len() > 1 && rows[0].iter().skip(1).any(|c| !numeric(c)) {
            1
        } else {
            0
        };
        let data_rows = &rows[first_data_row..];
        if data_rows.is_empty() {
            return Err(Error::Input("CSV has a header but no data rows".into()));
        }
        let ids_in_first_column = data_rows.iter().any(|r| !numeric(&r[0]));
        let mut ids = Vec::with_capacity(data_rows.len());
        let mut values = Vec::new();
        let mut n_features = None;
        for (i, row) in data_rows.iter().enumerate() {
            let (id, cells) = if ids_in_first_column {
                (row[0].clone(), &row[1..])
            } else {
                (i.to_string(), &row[..])
            };
            let width = cells.len();
            match n_features {
                None => n_features = Some(width),
                Some(m) if m != width => {
                    return Err(Error::Input(format!(
                        "row {i} has {width} features, expected {m}"
                    )))
                }
                _ => {}
            }
            for cell in cells {
                let v: f64 = cell.parse().map_err(|_| {
                    Error::Input(format!("non-numeric feature value '{cell}' in row {i}"))
                })?;
                values.push(v);
            }
            ids.push(id);
        }
        Self::new(ids, values, n_features.unwrap())
    }

    pub fn n_objects(&self) -> usize {
        self.ids.len()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n_features..(i + 1) * self.n_features]
    }

    /// Row-major feature matrix.
    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Inter-object distance metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Euclidean,
    SquaredEuclidean,
    Manhattan,
}

impl Metric {
    pub fn distance(self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Metric::Euclidean => Metric::SquaredEuclidean.distance(a, b).sqrt(),
            Metric::SquaredEuclidean => a
                .iter()
                .zip(b)
                .map(|(x, y)| (x - y) * (x - y))
                .sum(),
            Metric::Manhattan => a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum(),
        }
    }
}

impl std::str::FromStr for Metric {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euclidean" => Ok(Metric::Euclidean),
            "squared_euclidean" | "sqeuclidean" => Ok(Metric::SquaredEuclidean),
            "manhattan" | "cityblock" => Ok(Metric::Manhattan),
            other => Err(Error::Config(format!("unknown metric '{other}'"))),
        }
    }
}

/// Descriptor of the distance-to-proximity transform `s(d)`.
///
/// All three kinds resolve to `s = max(0, offset - d)` with a different
/// choice of offset; values clamped at zero are counted and surfaced in
/// reports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProximityTransform {
    /// `s = max(0, 2 * mean(d) - d)`: preserves the mean over object pairs.
    AveragePreserving,
    /// `s = d_max - d`.
    MaxComplement,
    /// `s = c - d`, requiring `c >= d_max` so no clamping occurs.
    Affine(f64),
}

impl ProximityTransform {
    /// Resolves the transform against a concrete distance matrix, fixing the
    /// affine offset.
    pub fn resolve(self, store: &DissimilarityStore) -> Result<ResolvedTransform> {
        let offset = match self {
            ProximityTransform::AveragePreserving => 2.0 * store.mean_distance(),
            ProximityTransform::MaxComplement => store.max_distance(),
            ProximityTransform::Affine(c) => {
                let d_max = store.max_distance();
                if c < d_max {
                    return Err(Error::Config(format!(
                        "affine transform offset {c} is below the maximum distance {d_max}"
                    )));
                }
                c
            }
        };
        Ok(ResolvedTransform { kind: self, offset })
    }
}

/// A transform with its offset pinned to a dataset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResolvedTransform {
    pub kind: ProximityTransform,
    pub offset: f64,
}

impl ResolvedTransform {
    /// `s(d)`, clamped at zero.
    pub fn apply(&self, d: f64) -> f64 {
        (self.offset - d).max(0.0)
    }

    fn is_clamped(&self, d: f64) -> bool {
        self.offset - d < 0.0
    }
}

/// Symmetric pairwise distances with optional derived proximities.
#[derive(Debug, Clone, PartialEq)]
pub struct DissimilarityStore {
    n: usize,
    d: Vec<f64>,
    s: Option<Vec<f64>>,
    transform: Option<ResolvedTransform>,
    clamped: usize,
}

impl DissimilarityStore {
    /// Builds a store from a full symmetric matrix given row-major.
    pub fn from_matrix(n: usize, d: Vec<f64>) -> Result<Self> {
        if n == 0 || d.len() != n * n {
            return Err(Error::Input(format!(
                "distance matrix length {} does not match n = {n}",
                d.len()
            )));
        }
        for i in 0..n {
            for j in 0..n {
                let v = d[i * n + j];
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::Input(format!(
                        "distance ({i},{j}) = {v} is negative or non-finite"
                    )));
                }
                if i == j && v != 0.0 {
                    return Err(Error::Input(format!("non-zero diagonal at {i}")));
                }
                if (v - d[j * n + i]).abs() > SYMMETRY_TOLERANCE {
                    return Err(Error::Input(format!(
                        "asymmetric entries at ({i},{j}): {v} vs {}",
                        d[j * n + i]
                    )));
                }
            }
        }
        // Symmetrize by averaging so downstream code can rely on exact symmetry.
        let mut d = d;
        for i in 0..n {
            for j in (i + 1)..n {
                let avg = 0.5 * (d[i * n + j] + d[j * n + i]);
                d[i * n + j] = avg;
                d[j * n + i] = avg;
            }
        }
        Ok(Self { n, d, s: None, transform: None, clamped: 0 })
    }

    /// Imports a square distance matrix from CSV (no header).
    pub fn from_csv_matrix<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut values = Vec::new();
        let mut n = 0usize;
        for record in rdr.records() {
            let record = record?;
            let row: Vec<f64> = record
                .iter()
                .filter(|c| !c.is_empty())
                .map(|c| {
                    c.parse::<f64>()
                        .map_err(|_| Error::Input(format!("non-numeric matrix cell '{c}'")))
                })
                .collect::<Result<_>>()?;
            if row.is_empty() {
                continue;
            }
            n += 1;
            values.extend(row);
        }
        if values.len() != n * n {
            return Err(Error::Input(format!(
                "matrix is not square: {n} rows, {} cells",
                values.len()
            )));
        }
        Self::from_matrix(n, values)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Distance between objects `i` and `j`.
    pub fn d(&self, i: usize, j: usize) -> f64 {
        self.d[i * self.n + j]
    }

    /// Proximity between objects `i` and `j`. Panics if no transform has
    /// been applied yet.
    pub fn s(&self, i: usize, j: usize) -> f64 {
        self.s.as_ref().expect("proximity transform not applied")[i * self.n + j]
    }

    pub fn has_proximities(&self) -> bool {
        self.s.is_some()
    }

    pub fn transform(&self) -> Option<&ResolvedTransform> {
        self.transform.as_ref()
    }

    /// Number of pairs clamped to zero proximity by the transform.
    pub fn clamp_count(&self) -> usize {
        self.clamped
    }

    /// Mean off-diagonal distance.
    pub fn mean_distance(&self) -> f64 {
        let mut sum = 0.0;
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                sum += self.d(i, j);
            }
        }
        let pairs = (self.n * (self.n - 1)) / 2;
        if pairs == 0 {
            0.0
        } else {
            sum / pairs as f64
        }
    }

    pub fn max_distance(&self) -> f64 {
        let mut max = 0.0f64;
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                max = max.max(self.d(i, j));
            }
        }
        max
    }

    /// Populates the proximity matrix `s = transform(d)` entrywise.
    pub fn apply_transform(mut self, transform: ProximityTransform) -> Result<Self> {
        let resolved = transform.resolve(&self)?;
        let mut s = vec![0.0; self.n * self.n];
        let mut clamped = 0;
        for i in 0..self.n {
            for j in 0..self.n {
                if i == j {
                    continue;
                }
                let d = self.d(i, j);
                if resolved.is_clamped(d) {
                    clamped += 1;
                }
                s[i * self.n + j] = resolved.apply(d);
            }
        }
        // Each clamped unordered pair was seen twice.
        self.clamped = clamped / 2;
        self.s = Some(s);
        self.transform = Some(resolved);
        Ok(self)
    }
}

/// Computes the full pairwise distance matrix of a data table.
pub fn compute_distances(data: &DataTable, metric: Metric) -> Result<DissimilarityStore> {
    let n = data.n_objects();
    let mut d = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let v = metric.distance(data.row(i), data.row(j));
            d[i * n + j] = v;
            d[j * n + i] = v;
        }
    }
    DissimilarityStore::from_matrix(n, d)
}

/// An assignment of `n` objects to `p` disjoint non-empty clusters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    labels: Vec<usize>,
    p: usize,
}

impl Partition {
    /// Builds a partition from arbitrary labels, renumbering clusters to
    /// `0..p-1` in order of first occurrence.
    pub fn from_labels(labels: &[usize]) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::Input("partition of zero objects".into()));
        }
        let mut map: Vec<Option<usize>> = Vec::new();
        let mut canonical = Vec::with_capacity(labels.len());
        let mut next = 0usize;
        for &l in labels {
            if l >= map.len() {
                map.resize(l + 1, None);
            }
            let c = *map[l].get_or_insert_with(|| {
                let c = next;
                next += 1;
                c
            });
            canonical.push(c);
        }
        Ok(Self { labels: canonical, p: next })
    }

    pub fn singletons(n: usize) -> Self {
        Self { labels: (0..n).collect(), p: n }
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    /// Member lists per cluster.
    pub fn clusters(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.p];
        for (i, &l) in self.labels.iter().enumerate() {
            out[l].push(i);
        }
        out
    }

    /// True when both partitions group the objects identically, ignoring
    /// label numbering.
    pub fn same_grouping(&self, other: &Partition) -> bool {
        self.labels == other.labels || {
            let a = Self::from_labels(&self.labels).unwrap();
            let b = Self::from_labels(&other.labels).unwrap();
            a.labels == b.labels
        }
    }
}

/// Which direction the tracked objective moves in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    Maximize,
    Minimize,
}

/// One merger in a history. Cluster ids follow the usual convention:
/// atoms are `0..leaves-1` and the merger at step `t` creates cluster
/// `leaves + t - 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MergeRecord {
    pub step: usize,
    pub left: usize,
    pub right: usize,
    pub new_cluster: usize,
    pub size: usize,
    /// Merge threshold r^t; absent for classical linkage runs.
    pub r: Option<f64>,
    pub delta_qs: Option<f64>,
    pub delta_qd: Option<f64>,
    /// Algorithm-specific merge height (linkage distance, or r again for
    /// bi-partial runs).
    pub link_value: f64,
}

/// Per-level objective values `Q_S(P^t)`, `Q^D(P^t)` and `Q(P^t, 1/2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveProfile {
    pub orientation: Orientation,
    pub qs: Vec<f64>,
    pub qd: Vec<f64>,
    pub q_half: Vec<f64>,
}

/// A dendrogram: the ordered merge records of a run over `leaves` atoms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MergeHistory {
    pub leaves: usize,
    pub records: Vec<MergeRecord>,
    pub profile: Option<ObjectiveProfile>,
}

impl MergeHistory {
    /// The partition obtained after the first `t` mergers; `p = leaves - t`
    /// for complete histories.
    pub fn partition_at_step(&self, t: usize) -> Result<Partition> {
        if t > self.records.len() {
            return Err(Error::StepOutOfRange { step: t, max: self.records.len() });
        }
        let total = self.leaves + self.records.len();
        let mut parent: Vec<usize> = (0..total).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for rec in &self.records[..t] {
            let l = find(&mut parent, rec.left);
            let r = find(&mut parent, rec.right);
            parent[l] = rec.new_cluster;
            parent[r] = rec.new_cluster;
        }
        let labels: Vec<usize> = (0..self.leaves)
            .map(|i| find(&mut parent, i))
            .collect();
        Partition::from_labels(&labels)
    }

    /// The r^t sequence, when every record carries one.
    pub fn r_sequence(&self) -> Option<Vec<f64>> {
        self.records.iter().map(|rec| rec.r).collect()
    }

    /// Steps whose link value dropped below the previous one (dendrogram
    /// inversions, possible under centroid/median linkage).
    pub fn height_inversions(&self) -> Vec<usize> {
        self.records
            .windows(2)
            .filter(|w| w[1].link_value < w[0].link_value)
            .map(|w| w[1].step)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn euclidean_two_points() {
        let data = DataTable::from_rows(&[vec![0.0], vec![3.0]]).unwrap();
        let store = compute_distances(&data, Metric::Euclidean).unwrap();
        assert_eq!(store.d(0, 1), 3.0);
    }

    #[test]
    fn identical_points_distance_zero() {
        let data = DataTable::from_rows(&[vec![1.0, 2.0], vec![1.0, 2.0]]).unwrap();
        let store = compute_distances(&data, Metric::Euclidean).unwrap();
        assert_eq!(store.d(0, 1), 0.0);
    }

    #[test]
    fn manhattan_distance() {
        let data = DataTable::from_rows(&[vec![0.0, 0.0], vec![1.0, 2.0]]).unwrap();
        let store = compute_distances(&data, Metric::Manhattan).unwrap();
        assert_eq!(store.d(0, 1), 3.0);
    }

    #[test]
    fn non_finite_feature_rejected() {
        let err = DataTable::from_rows(&[vec![0.0], vec![f64::NAN]]).unwrap_err();
        assert!(matches!(err, Error::Input(_)));
    }

    #[test]
    fn average_preserving_transform() {
        // Off-diagonal distances {3, 5, 4}: mean 4, s = 2*4 - d.
        let d = vec![
            0.0, 3.0, 5.0, //
            3.0, 0.0, 4.0, //
            5.0, 4.0, 0.0,
        ];
        let store = DissimilarityStore::from_matrix(3, d)
            .unwrap()
            .apply_transform(ProximityTransform::AveragePreserving)
            .unwrap();
        assert_eq!(store.s(0, 1), 5.0);
        assert_eq!(store.s(0, 2), 3.0);
        assert_eq!(store.s(1, 2), 4.0);
        assert_eq!(store.clamp_count(), 0);
    }

    #[test]
    fn max_complement_boundary() {
        let d = vec![
            0.0, 10.0, 2.0, //
            10.0, 0.0, 3.0, //
            2.0, 3.0, 0.0,
        ];
        let store = DissimilarityStore::from_matrix(3, d)
            .unwrap()
            .apply_transform(ProximityTransform::MaxComplement)
            .unwrap();
        assert_eq!(store.s(0, 1), 0.0);
        assert_eq!(store.s(0, 2), 8.0);
    }

    #[test]
    fn average_preserving_clamps_far_pairs() {
        // One pair much farther than twice the mean gets clamped to zero.
        let d = vec![
            0.0, 1.0, 20.0, //
            1.0, 0.0, 1.0, //
            20.0, 1.0, 0.0,
        ];
        let store = DissimilarityStore::from_matrix(3, d)
            .unwrap()
            .apply_transform(ProximityTransform::AveragePreserving)
            .unwrap();
        assert_eq!(store.s(0, 2), 0.0);
        assert!(store.clamp_count() >= 1);
    }

    #[test]
    fn affine_below_max_rejected() {
        let d = vec![
            0.0, 10.0, //
            10.0, 0.0,
        ];
        let err = DissimilarityStore::from_matrix(2, d)
            .unwrap()
            .apply_transform(ProximityTransform::Affine(5.0))
            .unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn affine_sum_is_exact() {
        let d = vec![
            0.0, 3.0, 5.0, //
            3.0, 0.0, 4.0, //
            5.0, 4.0, 0.0,
        ];
        let store = DissimilarityStore::from_matrix(3, d)
            .unwrap()
            .apply_transform(ProximityTransform::Affine(12.0))
            .unwrap();
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    assert_eq!(store.s(i, j) + store.d(i, j), 12.0);
                }
            }
        }
    }

    #[test]
    fn csv_matrix_symmetrized() {
        let csv = "0,1.0,2.0\n1.0,0,3.0\n2.001,3.0,0\n";
        // Asymmetry above tolerance is rejected.
        assert!(DissimilarityStore::from_csv_matrix(csv.as_bytes()).is_err());
        // Asymmetry within tolerance is averaged away.
        let csv = "0,1.0,2.0\n1.0,0,3.0\n2.0000000002,3.0,0\n";
        let store = DissimilarityStore::from_csv_matrix(csv.as_bytes()).unwrap();
        assert_eq!(store.n(), 3);
        assert_eq!(store.d(2, 0), store.d(0, 2));
        assert!((store.d(2, 0) - 2.0000000001).abs() < 1e-12);
    }

    #[test]
    fn csv_table_with_header_and_ids() {
        let csv = "id,x,y\na,0,0\nb,1,2\n";
        let table = DataTable::from_csv(csv.as_bytes()).unwrap();
        assert_eq!(table.n_objects(), 2);
        assert_eq!(table.ids(), &["a".to_string(), "b".to_string()]);
        assert_eq!(table.row(1), &[1.0, 2.0]);
    }

    #[test]
    fn csv_table_plain_numeric() {
        let csv = "0,0\n1,2\n";
        let table = DataTable::from_csv(csv.as_bytes()).unwrap();
        assert_eq!(table.n_objects(), 2);
        assert_eq!(table.ids(), &["0".to_string(), "1".to_string()]);
    }

    fn toy_history() -> MergeHistory {
        // n = 4, merges (0,1) then (2,3) then the two pairs.
        let rec = |step, left, right, new_cluster, size| MergeRecord {
            step,
            left,
            right,
            new_cluster,
            size,
            r: None,
            delta_qs: None,
            delta_qd: None,
            link_value: step as f64,
        };
        MergeHistory {
            leaves: 4,
            records: vec![rec(1, 0, 1, 4, 2), rec(2, 2, 3, 5, 2), rec(3, 4, 5, 6, 4)],
            profile: None,
        }
    }

    #[test]
    fn partition_at_step_boundaries() {
        let h = toy_history();
        let p0 = h.partition_at_step(0).unwrap();
        assert_eq!(p0.p(), 4);
        let p3 = h.partition_at_step(3).unwrap();
        assert_eq!(p3.p(), 1);
        assert!(h.partition_at_step(4).is_err());
    }

    #[test]
    fn partition_at_step_one() {
        let h = toy_history();
        let p1 = h.partition_at_step(1).unwrap();
        assert_eq!(p1.p(), 3);
        let expect = Partition::from_labels(&[0, 0, 1, 2]).unwrap();
        assert!(p1.same_grouping(&expect));
    }

    #[test]
    fn cluster_count_tracks_steps() {
        let h = toy_history();
        for t in 0..=3 {
            assert_eq!(h.partition_at_step(t).unwrap().p(), 4 - t);
        }
    }
}
