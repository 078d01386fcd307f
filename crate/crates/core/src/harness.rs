//! Declarative experiment configuration and multi-seed orchestration.
//!
//! A study runs one or more initialization schemes across `runs` consecutive
//! seeds. Partition and topology are derived from the seed alone, so schemes
//! compared within a study see identical data splits (paired comparison).
//! Outputs: `<outdir>/<study>/<scheme>/seed_<s>.csv` per run plus one
//! `summary.json` per study.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::{
    load_dataset_with, partition, CsvFormat, GlobalDataset, LoadOptions, PartitionSpec,
};
use crate::engine::{dgc_run, FixedPointCertificate, RunRecord, SolverConfig, StepSize};
use crate::error::{Error, Result};
use crate::init::{initialize, InitScheme};
use crate::losses::{Loss, LossKind};
use crate::network::{build_topology, Topology, TopologyKind};
use crate::seeding::derive_seed;

const INIT_STREAM: u64 = 0x494e_4954;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DatasetSection {
    pub path: String,
    pub format: CsvFormat,
    pub standardize: bool,
    pub weight_col: Option<usize>,
}

impl Default for DatasetSection {
    fn default() -> Self {
        Self {
            path: "data/iris.csv".into(),
            format: CsvFormat::CsvFeaturesLabel,
            standardize: false,
            weight_col: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum PartitionSection {
    Homogeneous,
    Heterogeneous {
        #[serde(default = "default_classes_per_user")]
        classes_per_user: usize,
        #[serde(default = "default_min_samples")]
        min_samples_per_user: usize,
    },
}

fn default_classes_per_user() -> usize {
    2
}

fn default_min_samples() -> usize {
    2
}

impl Default for PartitionSection {
    fn default() -> Self {
        PartitionSection::Homogeneous
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum TopologySection {
    Ring,
    Complete,
    Path,
    Star,
    ErdosRenyi { p: f64 },
    /// Edge-list text file, one `i j` pair per line.
    File { path: String },
}

impl Default for TopologySection {
    fn default() -> Self {
        TopologySection::Ring
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverSection {
    pub rho: f64,
    pub iters: usize,
    /// Explicit step size; omit for the automatic bound.
    pub alpha: Option<f64>,
    pub alpha_safety: f64,
    pub early_stop: bool,
    pub fixed_point_tol: f64,
}

impl Default for SolverSection {
    fn default() -> Self {
        Self {
            rho: 10.0,
            iters: 1000,
            alpha: None,
            alpha_safety: 0.99,
            early_stop: false,
            fixed_point_tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentSection {
    pub k: usize,
    pub users: usize,
    pub runs: usize,
    pub base_seed: u64,
    pub outdir: PathBuf,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        Self { k: 3, users: 10, runs: 5, base_seed: 42, outdir: PathBuf::from("out") }
    }
}

/// Everything one experiment needs, loadable from a TOML file; every field
/// has a default, so a config file only states what it changes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct ExperimentConfig {
    pub dataset: DatasetSection,
    pub partition: PartitionSection,
    pub topology: TopologySection,
    pub loss: LossKind,
    pub solver: SolverSection,
    pub init: InitScheme,
    pub experiment: ExperimentSection,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn load_data(&self) -> Result<GlobalDataset> {
        let mut data = load_dataset_with(
            &self.dataset.path,
            LoadOptions { format: self.dataset.format, weight_col: self.dataset.weight_col },
        )?;
        if self.dataset.standardize {
            data.standardize();
        }
        Ok(data)
    }

    pub fn partition_spec(&self, seed: u64) -> PartitionSpec {
        match self.partition {
            PartitionSection::Homogeneous => PartitionSpec::homogeneous(self.experiment.users, seed),
            PartitionSection::Heterogeneous { classes_per_user, min_samples_per_user } => {
                PartitionSpec::heterogeneous(
                    self.experiment.users,
                    seed,
                    classes_per_user,
                    min_samples_per_user,
                )
            }
        }
    }

    pub fn build_topology(&self, seed: u64) -> Result<Topology> {
        let m = self.experiment.users;
        match &self.topology {
            TopologySection::Ring => build_topology(TopologyKind::Ring, m, seed),
            TopologySection::Complete => build_topology(TopologyKind::Complete, m, seed),
            TopologySection::Path => build_topology(TopologyKind::Path, m, seed),
            TopologySection::Star => build_topology(TopologyKind::Star, m, seed),
            TopologySection::ErdosRenyi { p } => {
                build_topology(TopologyKind::ErdosRenyi { p: *p }, m, seed)
            }
            TopologySection::File { path } => {
                let topo = Topology::from_edge_list_file(path)?;
                if topo.m() != m {
                    return Err(Error::Config(format!(
                        "edge list file has {} users, config says {}",
                        topo.m(),
                        m
                    )));
                }
                Ok(topo)
            }
        }
    }

    pub fn solver_config(&self) -> SolverConfig {
        let step = match self.solver.alpha {
            Some(a) => StepSize::Fixed(a),
            None => StepSize::Auto { safety: self.solver.alpha_safety },
        };
        SolverConfig {
            rho: self.solver.rho,
            step,
            iters: self.solver.iters,
            early_stop: self.solver.early_stop,
            fixed_point_tol: self.solver.fixed_point_tol,
        }
    }

    pub fn loss(&self) -> Result<Box<dyn Loss>> {
        self.loss.build()
    }
}

/// Per-seed scalars that go into the summary file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedOutcome {
    pub seed: u64,
    pub iterations: usize,
    pub alpha: f64,
    pub final_phi: f64,
    pub final_global_accuracy: Option<f64>,
    pub final_mean_user_accuracy: Option<f64>,
    pub final_consensus_error: f64,
    pub stabilization_iteration: Option<usize>,
    pub certificate: FixedPointCertificate,
}

/// One scheme's runs plus aggregates. Aggregated accuracy is the mean
/// per-user accuracy (the paper's headline metric); traces aggregate only
/// when all runs executed the same number of iterations.
#[derive(Debug, Clone)]
pub struct SchemeSummary {
    pub scheme: InitScheme,
    pub label: String,
    pub records: Vec<RunRecord>,
    pub seeds: Vec<SeedOutcome>,
    pub mean_final_accuracy: Option<f64>,
    pub std_final_accuracy: Option<f64>,
    pub mean_accuracy_trace: Option<Vec<f64>>,
    pub std_accuracy_trace: Option<Vec<f64>>,
}

/// A finished study: per-scheme runs, aggregates, and where they were written.
#[derive(Debug, Clone)]
pub struct StudySummary {
    pub study: String,
    pub config: ExperimentConfig,
    pub schemes: Vec<SchemeSummary>,
    pub output_dir: PathBuf,
}

impl StudySummary {
    pub fn scheme(&self, label: &str) -> Option<&SchemeSummary> {
        self.schemes.iter().find(|s| s.label == label)
    }
}

/// Serialized form of a study (the `summary.json` schema).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SummaryFile {
    pub study: String,
    pub config: ExperimentConfig,
    pub schemes: Vec<SchemeSummaryFile>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SchemeSummaryFile {
    pub scheme: String,
    pub seeds: Vec<SeedOutcome>,
    pub mean_final_accuracy: Option<f64>,
    pub std_final_accuracy: Option<f64>,
    pub mean_accuracy_trace: Option<Vec<f64>>,
    pub std_accuracy_trace: Option<Vec<f64>>,
}

impl StudySummary {
    pub fn to_file(&self) -> SummaryFile {
        SummaryFile {
            study: self.study.clone(),
            config: self.config.clone(),
            schemes: self
                .schemes
                .iter()
                .map(|s| SchemeSummaryFile {
                    scheme: s.label.clone(),
                    seeds: s.seeds.clone(),
                    mean_final_accuracy: s.mean_final_accuracy,
                    std_final_accuracy: s.std_final_accuracy,
                    mean_accuracy_trace: s.mean_accuracy_trace.clone(),
                    std_accuracy_trace: s.std_accuracy_trace.clone(),
                })
                .collect(),
        }
    }
}

/// Runs the configured scheme across `runs` seeds and writes its artifacts.
pub fn run_experiment(config: &ExperimentConfig) -> Result<StudySummary> {
    run_study(config, "run", &[config.init])
}

/// Paired comparison of several initialization schemes on shared partitions
/// and topologies.
pub fn run_init_study(config: &ExperimentConfig, schemes: &[InitScheme]) -> Result<StudySummary> {
    if schemes.len() < 2 {
        return Err(Error::Config("an init study needs at least two schemes".into()));
    }
    run_study(config, "init_study", schemes)
}

/// The random baseline plus DKM+C at each requested round count.
pub fn run_round_sweep(config: &ExperimentConfig, l_values: &[usize]) -> Result<StudySummary> {
    if l_values.is_empty() {
        return Err(Error::Config("round sweep needs at least one L value".into()));
    }
    let mut schemes = vec![InitScheme::Random];
    schemes.extend(l_values.iter().map(|&rounds| InitScheme::Dkmc { rounds }));
    run_study(config, "round_sweep", &schemes)
}

fn run_study(
    config: &ExperimentConfig,
    study: &str,
    schemes: &[InitScheme],
) -> Result<StudySummary> {
    if config.experiment.runs == 0 {
        return Err(Error::Config("need at least one run".into()));
    }
    let data = config.load_data()?;
    let loss = config.loss()?;
    let solver = config.solver_config();
    let k = config.experiment.k;
    let study_dir = config.experiment.outdir.join(study);

    let mut summaries = Vec::with_capacity(schemes.len());
    for scheme in schemes {
        let label = scheme.label();
        let scheme_dir = study_dir.join(&label);
        std::fs::create_dir_all(&scheme_dir)?;

        let mut records = Vec::with_capacity(config.experiment.runs);
        let mut seeds = Vec::with_capacity(config.experiment.runs);
        for s in 0..config.experiment.runs {
            let seed = config.experiment.base_seed + s as u64;
            let record = run_single(config, &data, loss.as_ref(), &solver, k, *scheme, seed)
                .map_err(|e| Error::Seed { seed, source: Box::new(e) })?;
            write_trace_csv(&scheme_dir.join(format!("seed_{seed}.csv")), &record)?;
            seeds.push(seed_outcome(seed, &record));
            records.push(record);
        }

        let (mean_trace, std_trace) = aggregate_traces(&records);
        let finals: Option<Vec<f64>> = records
            .iter()
            .map(|r| r.mean_user_accuracy.as_ref().and_then(|t| t.last().copied()))
            .collect();
        let (mean_final, std_final) = match finals {
            Some(f) => {
                let (m, s) = mean_std(&f);
                (Some(m), Some(s))
            }
            None => (None, None),
        };
        summaries.push(SchemeSummary {
            scheme: *scheme,
            label,
            records,
            seeds,
            mean_final_accuracy: mean_final,
            std_final_accuracy: std_final,
            mean_accuracy_trace: mean_trace,
            std_accuracy_trace: std_trace,
        });
    }

    let summary = StudySummary {
        study: study.to_string(),
        config: config.clone(),
        schemes: summaries,
        output_dir: study_dir.clone(),
    };
    let json = serde_json::to_string_pretty(&summary.to_file())?;
    std::fs::write(study_dir.join("summary.json"), json + "\n")?;
    Ok(summary)
}

fn run_single(
    config: &ExperimentConfig,
    data: &GlobalDataset,
    loss: &dyn Loss,
    solver: &SolverConfig,
    k: usize,
    scheme: InitScheme,
    seed: u64,
) -> Result<RunRecord> {
    let locals = partition(data, &config.partition_spec(seed))?;
    let topo = config.build_topology(seed)?;
    let ground_truth: Option<Vec<Vec<usize>>> = data.labels().map(|labels| {
        locals
            .iter()
            .map(|l| l.global_indices.iter().map(|&g| labels[g]).collect())
            .collect()
    });
    let init = initialize(&locals, &topo, k, scheme, derive_seed(seed, INIT_STREAM))?;
    dgc_run(&locals, &topo, loss, init, solver, ground_truth.as_deref())
}

fn seed_outcome(seed: u64, record: &RunRecord) -> SeedOutcome {
    SeedOutcome {
        seed,
        iterations: record.iterations_run,
        alpha: record.alpha,
        final_phi: record.phi_trace.last().copied().unwrap_or(f64::NAN),
        final_global_accuracy: record
            .global_accuracy
            .as_ref()
            .and_then(|t| t.last().copied()),
        final_mean_user_accuracy: record
            .mean_user_accuracy
            .as_ref()
            .and_then(|t| t.last().copied()),
        final_consensus_error: record.consensus_trace.last().copied().unwrap_or(f64::NAN),
        stabilization_iteration: record.stabilization_iteration,
        certificate: record.certificate,
    }
}

/// Mean and per-iteration sample standard deviation of the per-user accuracy
/// traces; `None` when labels are absent or trace lengths differ.
fn aggregate_traces(records: &[RunRecord]) -> (Option<Vec<f64>>, Option<Vec<f64>>) {
    let traces: Option<Vec<&Vec<f64>>> =
        records.iter().map(|r| r.mean_user_accuracy.as_ref()).collect();
    let Some(traces) = traces else {
        return (None, None);
    };
    let len = traces[0].len();
    if traces.iter().any(|t| t.len() != len) {
        return (None, None);
    }
    let mut mean = vec![0.0; len];
    let mut std = vec![0.0; len];
    for t in 0..len {
        let column: Vec<f64> = traces.iter().map(|tr| tr[t]).collect();
        let (m, s) = mean_std(&column);
        mean[t] = m;
        std[t] = s;
    }
    (Some(mean), Some(std))
}

/// Mean and sample standard deviation (0 for a single value).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// One row per iteration: iter, phi_rho, j_rho, global_accuracy,
/// mean_user_accuracy, consensus_error, clusters_changed (1/0). Accuracy
/// columns are empty when the dataset has no labels.
pub fn write_trace_csv(path: &Path, record: &RunRecord) -> Result<()> {
    let mut out = String::with_capacity(64 * record.iterations_run + 80);
    out.push_str(
        "iter,phi_rho,j_rho,global_accuracy,mean_user_accuracy,consensus_error,clusters_changed\n",
    );
    for t in 0..record.iterations_run {
        let acc = |trace: &Option<Vec<f64>>| {
            trace.as_ref().map(|v| v[t].to_string()).unwrap_or_default()
        };
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            t,
            record.phi_trace[t],
            record.j_trace[t],
            acc(&record.global_accuracy),
            acc(&record.mean_user_accuracy),
            record.consensus_trace[t],
            u8::from(record.clusters_changed[t]),
        ));
    }
    std::fs::write(path, out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iris_config(outdir: &Path) -> ExperimentConfig {
        let mut config = ExperimentConfig::default();
        config.dataset.path = Path::new(env!("CARGO_MANIFEST_DIR"))
            .join("../../data/iris.csv")
            .to_string_lossy()
            .into_owned();
        config.solver.iters = 40;
        config.experiment.runs = 2;
        config.experiment.outdir = outdir.to_path_buf();
        config
    }

    #[test]
    fn config_defaults_parse_from_empty_toml() {
        let config = ExperimentConfig::from_toml_str("").unwrap();
        assert_eq!(config.experiment.base_seed, 42);
        assert_eq!(config.solver.rho, 10.0);
        assert_eq!(config.init, InitScheme::Kmeanspp);
        assert_eq!(config.loss, LossKind::Kmeans);
    }

    #[test]
    fn config_round_trips_through_toml() {
        let text = r#"
            [dataset]
            path = "data/iris.csv"

            [partition]
            mode = "heterogeneous"
            classes_per_user = 2

            [topology]
            kind = "erdos_renyi"
            p = 0.4

            [loss]
            kind = "huber"
            delta = 1.5

            [solver]
            rho = 100.0
            iters = 250
            alpha = 0.01

            [init]
            scheme = "dkmc"
            rounds = 3

            [experiment]
            k = 3
            users = 8
            runs = 2
            base_seed = 7
        "#;
        let config = ExperimentConfig::from_toml_str(text).unwrap();
        assert_eq!(
            config.partition,
            PartitionSection::Heterogeneous { classes_per_user: 2, min_samples_per_user: 2 }
        );
        assert_eq!(config.topology, TopologySection::ErdosRenyi { p: 0.4 });
        assert_eq!(config.loss, LossKind::Huber { delta: 1.5 });
        assert_eq!(config.solver.alpha, Some(0.01));
        assert_eq!(config.init, InitScheme::Dkmc { rounds: 3 });
        assert_eq!(config.experiment.users, 8);
    }

    #[test]
    fn run_experiment_writes_the_expected_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        let config = iris_config(dir.path());
        let summary = run_experiment(&config).unwrap();
        assert_eq!(summary.schemes.len(), 1);
        assert_eq!(summary.schemes[0].records.len(), 2);
        assert!(dir.path().join("run/kmeanspp/seed_42.csv").exists());
        assert!(dir.path().join("run/kmeanspp/seed_43.csv").exists());
        assert!(dir.path().join("run/summary.json").exists());

        let parsed: SummaryFile = serde_json::from_str(
            &std::fs::read_to_string(dir.path().join("run/summary.json")).unwrap(),
        )
        .unwrap();
        assert_eq!(parsed.schemes[0].seeds.len(), 2);
        assert!(parsed.schemes[0].mean_final_accuracy.unwrap() > 0.0);
    }

    #[test]
    fn repeated_runs_are_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let config = iris_config(dir.path());
        run_experiment(&config).unwrap();
        let csv1 = std::fs::read(dir.path().join("run/kmeanspp/seed_42.csv")).unwrap();
        let json1 = std::fs::read(dir.path().join("run/summary.json")).unwrap();
        run_experiment(&config).unwrap();
        let csv2 = std::fs::read(dir.path().join("run/kmeanspp/seed_42.csv")).unwrap();
        let json2 = std::fs::read(dir.path().join("run/summary.json")).unwrap();
        assert_eq!(csv1, csv2);
        assert_eq!(json1, json2);
    }

    #[test]
    fn init_study_pairs_partitions_across_schemes() {
        let dir = tempfile::tempdir().unwrap();
        let mut config = iris_config(dir.path());
        config.experiment.runs = 1;
        config.solver.iters = 10;
        let summary =
            run_init_study(&config, &[InitScheme::Random, InitScheme::Kmeanspp]).unwrap();
        assert_eq!(summary.schemes.len(), 2);
        // Same seed, same partition: identical ground truth layout means the
        // global accuracy denominator and sample order agree; spot-check by
        // re-deriving the partition.
        let data = config.load_data().unwrap();
        let a = partition(&data, &config.partition_spec(42)).unwrap();
        let b = partition(&data, &config.partition_spec(42)).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.global_indices, y.global_indices);
        }
    }

    #[test]
    fn duplicated_scheme_in_a_study_gives_identical_results() {
        let dir = tempfile::tempdir().unwrap();
        let mut config = iris_config(dir.path());
        config.experiment.runs = 1;
        config.solver.iters = 15;
        let summary =
            run_init_study(&config, &[InitScheme::Kmeanspp, InitScheme::Kmeanspp]).unwrap();
        let a = &summary.schemes[0];
        let b = &summary.schemes[1];
        assert_eq!(a.mean_final_accuracy, b.mean_final_accuracy);
        assert_eq!(a.records[0].phi_trace, b.records[0].phi_trace);
    }

    #[test]
    fn round_sweep_covers_random_plus_each_l() {
        let dir = tempfile::tempdir().unwrap();
        let mut config = iris_config(dir.path());
        config.experiment.runs = 1;
        config.solver.iters = 10;
        let summary = run_round_sweep(&config, &[0, 1]).unwrap();
        let labels: Vec<&str> = summary.schemes.iter().map(|s| s.label.as_str()).collect();
        assert_eq!(labels, vec!["random", "dkmc_L0", "dkmc_L1"]);
    }

    #[test]
    fn round_sweep_l0_matches_local_kmeanspp() {
        let dir = tempfile::tempdir().unwrap();
        let mut config = iris_config(dir.path());
        config.experiment.runs = 1;
        config.solver.iters = 10;
        let sweep = run_round_sweep(&config, &[0]).unwrap();
        let study =
            run_init_study(&config, &[InitScheme::Random, InitScheme::Kmeanspp]).unwrap();
        assert_eq!(
            sweep.scheme("dkmc_L0").unwrap().records[0].phi_trace,
            study.scheme("kmeanspp").unwrap().records[0].phi_trace,
        );
    }

    #[test]
    fn summary_statistics_recompute_from_csv() {
        let dir = tempfile::tempdir().unwrap();
        let mut config = iris_config(dir.path());
        config.experiment.runs = 3;
        config.solver.iters = 25;
        let summary = run_experiment(&config).unwrap();
        let scheme = &summary.schemes[0];

        let mut finals = Vec::new();
        let mut traces: Vec<Vec<f64>> = Vec::new();
        for s in 0..3u64 {
            let path = dir.path().join(format!("run/kmeanspp/seed_{}.csv", 42 + s));
            let mut reader = csv::Reader::from_path(path).unwrap();
            let idx = reader
                .headers()
                .unwrap()
                .iter()
                .position(|h| h == "mean_user_accuracy")
                .unwrap();
            let col: Vec<f64> = reader
                .records()
                .map(|r| r.unwrap()[idx].parse::<f64>().unwrap())
                .collect();
            finals.push(*col.last().unwrap());
            traces.push(col);
        }
        let (mean_final, _) = mean_std(&finals);
        let got = scheme.mean_final_accuracy.unwrap();
        assert!((got - mean_final).abs() <= 1e-12 * got.abs().max(1.0));

        let mean_trace = scheme.mean_accuracy_trace.as_ref().unwrap();
        for t in 0..25 {
            let col: Vec<f64> = traces.iter().map(|tr| tr[t]).collect();
            let (m, _) = mean_std(&col);
            assert!((mean_trace[t] - m).abs() <= 1e-12 * m.abs().max(1.0));
        }
    }
}
