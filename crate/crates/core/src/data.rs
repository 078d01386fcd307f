//! Dataset ingestion, validation and partitioning across users.

use std::collections::HashMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeding::derive_rng;

/// The joint dataset before it is distributed across users.
#[derive(Debug, Clone)]
pub struct GlobalDataset {
    samples: Vec<Vec<f64>>,
    labels: Option<Vec<usize>>,
    label_names: Option<Vec<String>>,
    weights: Option<Vec<f64>>,
    d: usize,
}

impl GlobalDataset {
    /// Builds a dataset from raw samples; all rows must share one dimension ≥ 1.
    pub fn new(samples: Vec<Vec<f64>>, labels: Option<Vec<usize>>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Schema("dataset has no samples".into()));
        }
        let d = samples[0].len();
        if d == 0 {
            return Err(Error::Schema("samples must have dimension >= 1".into()));
        }
        if samples.iter().any(|s| s.len() != d) {
            return Err(Error::Schema("samples have inconsistent dimensions".into()));
        }
        if samples.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Data("non-finite sample value".into()));
        }
        if let Some(l) = &labels {
            if l.len() != samples.len() {
                return Err(Error::Schema(format!(
                    "label count {} does not match sample count {}",
                    l.len(),
                    samples.len()
                )));
            }
        }
        Ok(Self { samples, labels, label_names: None, weights: None, d })
    }

    pub fn n_total(&self) -> usize {
        self.samples.len()
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn samples(&self) -> &[Vec<f64>] {
        &self.samples
    }

    pub fn sample(&self, i: usize) -> &[f64] {
        &self.samples[i]
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn label_names(&self) -> Option<&[String]> {
        self.label_names.as_deref()
    }

    pub fn weights(&self) -> Option<&[f64]> {
        self.weights.as_deref()
    }

    /// Number of distinct classes; 0 when unlabeled.
    pub fn num_classes(&self) -> usize {
        self.labels
            .as_ref()
            .map(|l| l.iter().max().map_or(0, |&m| m + 1))
            .unwrap_or(0)
    }

    /// Per-class sample counts, indexed by class id.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.num_classes()];
        if let Some(labels) = &self.labels {
            for &l in labels {
                counts[l] += 1;
            }
        }
        counts
    }

    /// Sets per-sample weights; every weight must be strictly positive and finite.
    pub fn with_weights(mut self, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != self.samples.len() {
            return Err(Error::Schema("weight count does not match sample count".into()));
        }
        if weights.iter().any(|&w| !w.is_finite() || w <= 0.0) {
            return Err(Error::Data("weights must be strictly positive and finite".into()));
        }
        self.weights = Some(weights);
        Ok(self)
    }

    /// Z-scores every dimension in place; constant dimensions are left centered.
    pub fn standardize(&mut self) {
        let n = self.samples.len() as f64;
        for j in 0..self.d {
            let mean = self.samples.iter().map(|s| s[j]).sum::<f64>() / n;
            let var = self.samples.iter().map(|s| (s[j] - mean).powi(2)).sum::<f64>() / n;
            let std = var.sqrt();
            let scale = if std > 0.0 { 1.0 / std } else { 1.0 };
            for s in &mut self.samples {
                s[j] = (s[j] - mean) * scale;
            }
        }
    }

    /// Number of distinct sample vectors under exact equality (`-0.0 == 0.0`).
    pub fn distinct_count(&self) -> usize {
        distinct_count(&self.samples)
    }
}

pub(crate) fn distinct_count(samples: &[Vec<f64>]) -> usize {
    let mut seen = std::collections::HashSet::new();
    for s in samples {
        let key: Vec<u64> = s.iter().map(|&v| (if v == 0.0 { 0.0f64 } else { v }).to_bits()).collect();
        seen.insert(key);
    }
    seen.len()
}

/// True iff the data holds at least `k` distinct sample vectors.
pub fn validate_k_distinct(data: &GlobalDataset, k: usize) -> bool {
    data.distinct_count() >= k
}

/// Input CSV layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CsvFormat {
    /// Features in all columns except the last, which holds the class label.
    CsvFeaturesLabel,
    /// Every column is a feature.
    CsvFeaturesOnly,
}

/// Extra ingestion knobs beyond the bare format.
#[derive(Debug, Clone, Copy)]
pub struct LoadOptions {
    pub format: CsvFormat,
    /// Absolute column index holding per-sample weights, if any.
    pub weight_col: Option<usize>,
}

/// Loads a CSV dataset. A non-numeric first row (in feature columns) is
/// treated as a header. Labels map to 0-based ids in first-appearance order.
pub fn load_dataset(path: impl AsRef<Path>, format: CsvFormat) -> Result<GlobalDataset> {
    load_dataset_with(path, LoadOptions { format, weight_col: None })
}

pub fn load_dataset_with(path: impl AsRef<Path>, opts: LoadOptions) -> Result<GlobalDataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_path(path.as_ref())?;

    let mut rows: Vec<Vec<String>> = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Parse { row: idx + 1, message: e.to_string() })?;
        let fields: Vec<String> = record.iter().map(|f| f.trim().to_string()).collect();
        if fields.iter().all(|f| f.is_empty()) {
            continue;
        }
        rows.push(fields);
    }
    if rows.is_empty() {
        return Err(Error::Schema("empty file".into()));
    }

    let arity = rows[0].len();
    for (idx, row) in rows.iter().enumerate() {
        if row.len() != arity {
            return Err(Error::Schema(format!(
                "row {} has {} fields, expected {}",
                idx + 1,
                row.len(),
                arity
            )));
        }
    }

    let label_col = match opts.format {
        CsvFormat::CsvFeaturesLabel => {
            if arity < 2 {
                return Err(Error::Schema("need at least one feature column plus a label".into()));
            }
            Some(arity - 1)
        }
        CsvFormat::CsvFeaturesOnly => None,
    };
    if let Some(w) = opts.weight_col {
        if w >= arity {
            return Err(Error::Config(format!("weight column {w} out of range for {arity} columns")));
        }
        if label_col == Some(w) {
            return Err(Error::Config("weight column collides with the label column".into()));
        }
    }
    let feature_cols: Vec<usize> =
        (0..arity).filter(|c| Some(*c) != label_col && Some(*c) != opts.weight_col).collect();
    if feature_cols.is_empty() {
        return Err(Error::Schema("no feature columns left".into()));
    }

    // Header heuristic: any non-numeric feature cell in the first row.
    let has_header = feature_cols.iter().any(|&c| rows[0][c].parse::<f64>().is_err());
    let data_rows = if has_header { &rows[1..] } else { &rows[..] };
    if data_rows.is_empty() {
        return Err(Error::Schema("no data rows".into()));
    }

    let mut samples = Vec::with_capacity(data_rows.len());
    let mut labels: Vec<usize> = Vec::new();
    let mut weights: Vec<f64> = Vec::new();
    let mut label_ids: HashMap<String, usize> = HashMap::new();
    let mut label_names: Vec<String> = Vec::new();

    for (i, row) in data_rows.iter().enumerate() {
        let row_no = i + 1 + usize::from(has_header);
        let mut sample = Vec::with_capacity(feature_cols.len());
        for &c in &feature_cols {
            let v: f64 = row[c].parse().map_err(|_| Error::Parse {
                row: row_no,
                message: format!("cannot parse {:?} as a number", row[c]),
            })?;
            if !v.is_finite() {
                return Err(Error::Data(format!("non-finite value {:?} at row {row_no}", row[c])));
            }
            sample.push(v);
        }
        samples.push(sample);

        if let Some(lc) = label_col {
            let raw = &row[lc];
            let next_id = label_ids.len();
            let id = *label_ids.entry(raw.clone()).or_insert_with(|| {
                label_names.push(raw.clone());
                next_id
            });
            labels.push(id);
        }
        if let Some(wc) = opts.weight_col {
            let w: f64 = row[wc].parse().map_err(|_| Error::Parse {
                row: row_no,
                message: format!("cannot parse weight {:?}", row[wc]),
            })?;
            weights.push(w);
        }
    }

    let mut data = GlobalDataset::new(samples, label_col.map(|_| labels))?;
    if label_col.is_some() {
        data.label_names = Some(label_names);
    }
    if opts.weight_col.is_some() {
        data = data.with_weights(weights)?;
    }
    Ok(data)
}

/// One user's share of the global data.
#[derive(Debug, Clone)]
pub struct LocalDataset {
    pub owner: usize,
    pub samples: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    /// Position of each local sample in the global dataset.
    pub global_indices: Vec<usize>,
}

impl LocalDataset {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Total sample weight held by this user.
    pub fn weight_sum(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Wraps the full dataset as the single user 0 (the centralized view).
    pub fn pooled(data: &GlobalDataset) -> Self {
        Self {
            owner: 0,
            samples: data.samples().to_vec(),
            weights: data
                .weights()
                .map(|w| w.to_vec())
                .unwrap_or_else(|| vec![1.0; data.n_total()]),
            global_indices: (0..data.n_total()).collect(),
        }
    }
}

/// How the global data is spread across users.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum PartitionMode {
    /// Every user receives every class in (nearly) global proportions.
    Homogeneous,
    /// Each user holds `classes_per_user` consecutive classes (mod K_true) with
    /// seeded-random unequal counts, at least `min_samples_per_user` per class.
    Heterogeneous { classes_per_user: usize, min_samples_per_user: usize },
    /// Explicit per-sample owner assignment.
    Custom { owners: Vec<usize> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionSpec {
    #[serde(flatten)]
    pub mode: PartitionMode,
    /// Number of users.
    pub m: usize,
    pub seed: u64,
}

impl PartitionSpec {
    pub fn homogeneous(m: usize, seed: u64) -> Self {
        Self { mode: PartitionMode::Homogeneous, m, seed }
    }

    pub fn heterogeneous(m: usize, seed: u64, classes_per_user: usize, min_samples: usize) -> Self {
        Self {
            mode: PartitionMode::Heterogeneous {
                classes_per_user,
                min_samples_per_user: min_samples,
            },
            m,
            seed,
        }
    }
}

/// Splits the global data into disjoint local datasets covering every sample.
///
/// Weights come from the dataset when present, otherwise every sample gets 1.
pub fn partition(data: &GlobalDataset, spec: &PartitionSpec) -> Result<Vec<LocalDataset>> {
    if spec.m == 0 {
        return Err(Error::Config("partition requires m >= 1".into()));
    }
    if spec.m > data.n_total() {
        return Err(Error::Config(format!(
            "cannot split {} samples across {} users",
            data.n_total(),
            spec.m
        )));
    }

    // owner[global index] = user id
    let owners: Vec<usize> = match &spec.mode {
        PartitionMode::Custom { owners } => {
            if owners.len() != data.n_total() {
                return Err(Error::Config("custom owners length mismatch".into()));
            }
            if owners.iter().any(|&o| o >= spec.m) {
                return Err(Error::Config("custom owner id out of range".into()));
            }
            owners.clone()
        }
        PartitionMode::Homogeneous => homogeneous_owners(data, spec),
        PartitionMode::Heterogeneous { classes_per_user, min_samples_per_user } => {
            heterogeneous_owners(data, spec, *classes_per_user, *min_samples_per_user)?
        }
    };

    let mut locals: Vec<LocalDataset> = (0..spec.m)
        .map(|owner| LocalDataset {
            owner,
            samples: Vec::new(),
            weights: Vec::new(),
            global_indices: Vec::new(),
        })
        .collect();
    for (idx, &owner) in owners.iter().enumerate() {
        let w = data.weights().map_or(1.0, |ws| ws[idx]);
        locals[owner].samples.push(data.sample(idx).to_vec());
        locals[owner].weights.push(w);
        locals[owner].global_indices.push(idx);
    }
    Ok(locals)
}

fn homogeneous_owners(data: &GlobalDataset, spec: &PartitionSpec) -> Vec<usize> {
    let m = spec.m;
    let n = data.n_total();
    let mut owners = vec![0usize; n];
    if m == 1 {
        return owners;
    }

    // Group indices by class; unlabeled data is one pseudo-class.
    let groups: Vec<Vec<usize>> = match data.labels() {
        Some(labels) => {
            let mut g = vec![Vec::new(); data.num_classes()];
            for (i, &l) in labels.iter().enumerate() {
                g[l].push(i);
            }
            g
        }
        None => vec![(0..n).collect()],
    };

    for (c, group) in groups.iter().enumerate() {
        let mut shuffled = group.clone();
        shuffled.shuffle(&mut derive_rng(spec.seed, c as u64));
        let base = shuffled.len() / m;
        let remainder = shuffled.len() % m;
        let mut cursor = 0;
        for j in 0..m {
            // Rotate which users absorb the remainder so totals stay balanced.
            let user = (c + j) % m;
            let take = base + usize::from(j < remainder);
            for &idx in &shuffled[cursor..cursor + take] {
                owners[idx] = user;
            }
            cursor += take;
        }
    }
    owners
}

fn heterogeneous_owners(
    data: &GlobalDataset,
    spec: &PartitionSpec,
    classes_per_user: usize,
    min_samples: usize,
) -> Result<Vec<usize>> {
    let labels = data
        .labels()
        .ok_or_else(|| Error::Config("heterogeneous partition requires labels".into()))?;
    let k_true = data.num_classes();
    if classes_per_user == 0 || classes_per_user >= k_true {
        return Err(Error::Config(format!(
            "classes_per_user must be in [1, {}) for {} classes",
            k_true, k_true
        )));
    }

    let m = spec.m;
    // User i holds classes {i mod K, ..., (i + q - 1) mod K}.
    let holds = |user: usize, class: usize| -> bool {
        (0..classes_per_user).any(|j| (user + j) % k_true == class)
    };

    let mut class_indices = vec![Vec::new(); k_true];
    for (i, &l) in labels.iter().enumerate() {
        class_indices[l].push(i);
    }

    let mut owners = vec![0usize; data.n_total()];
    for (c, indices) in class_indices.iter().enumerate() {
        let eligible: Vec<usize> = (0..m).filter(|&u| holds(u, c)).collect();
        if eligible.is_empty() {
            return Err(Error::Config(format!("class {c} has no eligible user")));
        }
        if indices.len() < min_samples * eligible.len() {
            return Err(Error::Config(format!(
                "class {c} has {} samples, cannot give {min_samples} to each of {} users",
                indices.len(),
                eligible.len()
            )));
        }
        let mut rng = derive_rng(spec.seed, 0x4845_5400u64 + c as u64);

        // Dirichlet(1,..,1)-style proportions over the extras beyond the floor.
        let extras = indices.len() - min_samples * eligible.len();
        let gammas: Vec<f64> = eligible
            .iter()
            .map(|_| {
                let u: f64 = rng.random();
                -(1.0 - u).ln()
            })
            .collect();
        let total: f64 = gammas.iter().sum();
        let raw: Vec<f64> = gammas.iter().map(|g| extras as f64 * g / total).collect();
        let mut counts: Vec<usize> = raw.iter().map(|&r| r.floor() as usize).collect();
        let assigned: usize = counts.iter().sum();
        // Largest-remainder rounding, ties to the lower slot.
        let mut order: Vec<usize> = (0..eligible.len()).collect();
        order.sort_by(|&a, &b| {
            let fa = raw[a] - raw[a].floor();
            let fb = raw[b] - raw[b].floor();
            fb.partial_cmp(&fa).unwrap().then(a.cmp(&b))
        });
        for &slot in order.iter().take(extras - assigned) {
            counts[slot] += 1;
        }

        let mut shuffled = indices.clone();
        shuffled.shuffle(&mut rng);
        let mut cursor = 0;
        for (slot, &user) in eligible.iter().enumerate() {
            let take = min_samples + counts[slot];
            for &idx in &shuffled[cursor..cursor + take] {
                owners[idx] = user;
            }
            cursor += take;
        }
        debug_assert_eq!(cursor, shuffled.len());
    }
    Ok(owners)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_temp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    fn iris_path() -> std::path::PathBuf {
        std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/iris.csv")
    }

    pub(crate) fn load_iris() -> GlobalDataset {
        load_dataset(iris_path(), CsvFormat::CsvFeaturesLabel).unwrap()
    }

    #[test]
    fn iris_loads_with_expected_shape() {
        let data = load_iris();
        assert_eq!(data.n_total(), 150);
        assert_eq!(data.d(), 4);
        assert_eq!(data.num_classes(), 3);
        assert_eq!(data.class_counts(), vec![50, 50, 50]);
    }

    #[test]
    fn empty_file_is_a_schema_error() {
        let f = write_temp("");
        let err = load_dataset(f.path(), CsvFormat::CsvFeaturesLabel).unwrap_err();
        assert!(matches!(err, Error::Schema(_)), "{err}");
    }

    #[test]
    fn minimal_two_row_file_parses() {
        let f = write_temp("0,0,a\n1,1,b\n");
        let data = load_dataset(f.path(), CsvFormat::CsvFeaturesLabel).unwrap();
        assert_eq!(data.n_total(), 2);
        assert_eq!(data.d(), 2);
        assert_eq!(data.labels().unwrap(), &[0, 1]);
    }

    #[test]
    fn malformed_row_reports_row_number() {
        let f = write_temp("1,2,a\nx,4,b\n");
        let err = load_dataset(f.path(), CsvFormat::CsvFeaturesLabel).unwrap_err();
        match err {
            Error::Parse { row, .. } => assert_eq!(row, 2),
            other => panic!("expected parse error, got {other}"),
        }
    }

    #[test]
    fn inconsistent_arity_is_a_schema_error() {
        let f = write_temp("1,2,a\n3,4\n");
        let err = load_dataset(f.path(), CsvFormat::CsvFeaturesLabel).unwrap_err();
        assert!(matches!(err, Error::Schema(_)), "{err}");
    }

    #[test]
    fn non_finite_value_is_a_data_error() {
        let f = write_temp("1,inf,a\n");
        let err = load_dataset(f.path(), CsvFormat::CsvFeaturesLabel).unwrap_err();
        assert!(matches!(err, Error::Data(_)), "{err}");
    }

    #[test]
    fn weight_column_is_picked_up() {
        let f = write_temp("1,2,0.5,a\n3,4,2,b\n");
        let data = load_dataset_with(
            f.path(),
            LoadOptions { format: CsvFormat::CsvFeaturesLabel, weight_col: Some(2) },
        )
        .unwrap();
        assert_eq!(data.d(), 2);
        assert_eq!(data.weights().unwrap(), &[0.5, 2.0]);
    }

    #[test]
    fn k_distinct_cases() {
        let data = load_iris();
        assert!(validate_k_distinct(&data, 3));

        let same = GlobalDataset::new(vec![vec![1.0], vec![1.0], vec![1.0]], None).unwrap();
        assert!(!validate_k_distinct(&same, 2));

        let two = GlobalDataset::new(vec![vec![0.0], vec![0.0], vec![1.0]], None).unwrap();
        assert!(validate_k_distinct(&two, 2));
    }

    #[test]
    fn standardize_centers_and_scales() {
        let mut data =
            GlobalDataset::new(vec![vec![0.0, 5.0], vec![2.0, 5.0], vec![4.0, 5.0]], None).unwrap();
        data.standardize();
        for j in 0..2 {
            let mean: f64 = data.samples().iter().map(|s| s[j]).sum::<f64>() / 3.0;
            assert!(mean.abs() < 1e-12);
        }
        // Constant column stays centered at zero without blowing up.
        assert!(data.samples().iter().all(|s| s[1] == 0.0));
    }

    #[test]
    fn homogeneous_iris_gives_each_user_five_per_class() {
        let data = load_iris();
        let locals = partition(&data, &PartitionSpec::homogeneous(10, 42)).unwrap();
        assert_eq!(locals.len(), 10);
        let labels = data.labels().unwrap();
        for local in &locals {
            assert_eq!(local.len(), 15);
            let mut per_class = [0usize; 3];
            for &g in &local.global_indices {
                per_class[labels[g]] += 1;
            }
            assert_eq!(per_class, [5, 5, 5]);
            assert!(local.weights.iter().all(|&w| w == 1.0));
        }
    }

    #[test]
    fn single_user_partition_is_identity() {
        let data = load_iris();
        let locals = partition(&data, &PartitionSpec::homogeneous(1, 0)).unwrap();
        assert_eq!(locals.len(), 1);
        assert_eq!(locals[0].global_indices, (0..150).collect::<Vec<_>>());
        assert_eq!(locals[0].samples, data.samples());
    }

    #[test]
    fn heterogeneous_iris_is_a_disjoint_cover_with_two_classes_each() {
        let data = load_iris();
        let locals = partition(&data, &PartitionSpec::heterogeneous(10, 7, 2, 2)).unwrap();

        // Brute-force recount of the union of global indices.
        let mut all: Vec<usize> = locals.iter().flat_map(|l| l.global_indices.clone()).collect();
        all.sort_unstable();
        assert_eq!(all, (0..150).collect::<Vec<_>>());

        let labels = data.labels().unwrap();
        for local in &locals {
            let mut classes: Vec<usize> = local.global_indices.iter().map(|&g| labels[g]).collect();
            classes.sort_unstable();
            classes.dedup();
            assert_eq!(classes.len(), 2, "user {} classes {:?}", local.owner, classes);
            // At least min_samples of each held class.
            for &c in &classes {
                let count = local.global_indices.iter().filter(|&&g| labels[g] == c).count();
                assert!(count >= 2);
            }
        }
    }

    #[test]
    fn heterogeneous_without_labels_is_a_config_error() {
        let data = GlobalDataset::new(vec![vec![0.0], vec![1.0], vec![2.0]], None).unwrap();
        let err = partition(&data, &PartitionSpec::heterogeneous(2, 0, 1, 1)).unwrap_err();
        assert!(matches!(err, Error::Config(_)), "{err}");
    }

    #[test]
    fn more_users_than_samples_is_a_config_error() {
        let data = GlobalDataset::new(vec![vec![0.0], vec![1.0]], None).unwrap();
        let err = partition(&data, &PartitionSpec::homogeneous(3, 0)).unwrap_err();
        assert!(matches!(err, Error::Config(_)), "{err}");
    }

    #[test]
    fn partition_is_deterministic() {
        let data = load_iris();
        for spec in [
            PartitionSpec::homogeneous(7, 11),
            PartitionSpec::heterogeneous(10, 11, 2, 2),
        ] {
            let a = partition(&data, &spec).unwrap();
            let b = partition(&data, &spec).unwrap();
            for (x, y) in a.iter().zip(&b) {
                assert_eq!(x.global_indices, y.global_indices);
            }
        }
    }

    #[test]
    fn homogeneous_proportions_deviate_by_at_most_one() {
        let data = load_iris();
        for m in [3, 4, 7, 9] {
            let locals = partition(&data, &PartitionSpec::homogeneous(m, 5)).unwrap();
            let labels = data.labels().unwrap();
            for local in &locals {
                for c in 0..3 {
                    let count = local.global_indices.iter().filter(|&&g| labels[g] == c).count();
                    let ideal = 50.0 / m as f64;
                    assert!(
                        (count as f64 - ideal).abs() <= 1.0,
                        "m={m} user={} class={c} count={count}",
                        local.owner
                    );
                }
            }
        }
    }
}
