//! `dgc` — run distributed gradient clustering experiments from the shell.
//!
//! Subcommands: `run` (one experiment), `init-study` (paired initialization
//! comparison), `round-sweep` (random baseline vs collaborative init at each
//! round count), `validate-loss` (loss-contract report) and `spectral`
//! (Laplacian spectral radius and step-size ceiling for a topology).

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use dgc_core::engine::step_size_bound;
use dgc_core::harness::{
    run_experiment, run_init_study, run_round_sweep, ExperimentConfig, PartitionSection,
    StudySummary, TopologySection,
};
use dgc_core::init::InitScheme;
use dgc_core::losses::{validate_assumption3, LossKind};
use dgc_core::network::{build_topology, laplacian_lambda_max, Topology, TopologyKind};

#[derive(Parser)]
#[command(name = "dgc", version, about = "Distributed gradient clustering simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment (the configured init scheme across all seeds).
    Run {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Compare initialization schemes on shared partitions and topologies.
    InitStudy {
        #[command(flatten)]
        common: CommonArgs,
        /// Comma-separated schemes: random, kmeanspp, dkmc:<rounds>
        #[arg(long, default_value = "random,kmeanspp")]
        schemes: String,
    },
    /// Random baseline vs collaborative init at each round count.
    RoundSweep {
        #[command(flatten)]
        common: CommonArgs,
        /// Comma-separated round counts
        #[arg(long, default_value = "0,1,2,3,4")]
        rounds: String,
    },
    /// Numerically validate a loss against the contract conditions.
    ValidateLoss {
        #[arg(long, default_value = "kmeans")]
        loss: String,
        #[arg(long, default_value_t = 1.0)]
        huber_delta: f64,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        /// Comma-separated dimensions to probe
        #[arg(long, default_value = "1,2,4,8")]
        dims: String,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
    /// Print the Laplacian spectral radius and the step-size ceiling.
    Spectral {
        #[arg(long, default_value = "ring")]
        topology: String,
        #[arg(long, default_value_t = 10)]
        users: usize,
        #[arg(long)]
        topology_file: Option<String>,
        #[arg(long, default_value_t = 0.3)]
        er_prob: f64,
        #[arg(long, default_value = "kmeans")]
        loss: String,
        #[arg(long, default_value_t = 1.0)]
        huber_delta: f64,
        #[arg(long, default_value_t = 10.0)]
        rho: f64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
}

/// Flags shared by the experiment subcommands; every flag overrides its
/// config-file key.
#[derive(Args)]
struct CommonArgs {
    /// TOML experiment config; defaults apply when omitted
    #[arg(long)]
    config: Option<String>,
    /// Dataset CSV path
    #[arg(long)]
    data: Option<String>,
    /// Treat every CSV column as a feature (no label column)
    #[arg(long)]
    features_only: bool,
    /// Column index holding per-sample weights
    #[arg(long)]
    weight_col: Option<usize>,
    /// Z-score features before clustering
    #[arg(long)]
    standardize: bool,
    /// kmeans | huber
    #[arg(long)]
    loss: Option<String>,
    #[arg(long)]
    huber_delta: Option<f64>,
    /// random | kmeanspp | dkmc
    #[arg(long)]
    init: Option<String>,
    #[arg(long)]
    dkmc_rounds: Option<usize>,
    #[arg(long)]
    rho: Option<f64>,
    /// Explicit step size (omit for the automatic bound)
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    iters: Option<usize>,
    /// ring | complete | path | star | erdos_renyi
    #[arg(long)]
    topology: Option<String>,
    /// Edge probability for erdos_renyi
    #[arg(long)]
    er_prob: Option<f64>,
    /// Edge-list file (one "i j" pair per line) instead of a built-in shape
    #[arg(long)]
    topology_file: Option<String>,
    #[arg(long)]
    users: Option<usize>,
    /// homogeneous | heterogeneous
    #[arg(long)]
    partition: Option<String>,
    #[arg(long)]
    classes_per_user: Option<usize>,
    #[arg(long)]
    min_samples_per_user: Option<usize>,
    /// Number of clusters
    #[arg(long)]
    k: Option<usize>,
    /// Seeds per experiment
    #[arg(long)]
    runs: Option<usize>,
    /// Base seed; run s uses seed base_seed + s
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    outdir: Option<String>,
}

impl CommonArgs {
    fn build_config(&self) -> anyhow::Result<ExperimentConfig> {
        let mut config = match &self.config {
            Some(path) => {
                ExperimentConfig::load(path).with_context(|| format!("loading {path}"))?
            }
            None => ExperimentConfig::default(),
        };
        if let Some(data) = &self.data {
            config.dataset.path = data.clone();
        }
        if self.features_only {
            config.dataset.format = dgc_core::data::CsvFormat::CsvFeaturesOnly;
        }
        if let Some(w) = self.weight_col {
            config.dataset.weight_col = Some(w);
        }
        if self.standardize {
            config.dataset.standardize = true;
        }
        if let Some(loss) = &self.loss {
            config.loss = parse_loss(loss, self.huber_delta.unwrap_or(1.0))?;
        } else if let (Some(delta), LossKind::Huber { .. }) = (self.huber_delta, config.loss) {
            config.loss = LossKind::Huber { delta };
        }
        if let Some(init) = &self.init {
            config.init = parse_scheme(init, self.dkmc_rounds)?;
        } else if let (Some(rounds), InitScheme::Dkmc { .. }) = (self.dkmc_rounds, config.init) {
            config.init = InitScheme::Dkmc { rounds };
        }
        if let Some(rho) = self.rho {
            config.solver.rho = rho;
        }
        if let Some(alpha) = self.alpha {
            config.solver.alpha = Some(alpha);
        }
        if let Some(iters) = self.iters {
            config.solver.iters = iters;
        }
        if let Some(file) = &self.topology_file {
            config.topology = TopologySection::File { path: file.clone() };
        } else if let Some(kind) = &self.topology {
            config.topology = parse_topology(kind, self.er_prob.unwrap_or(0.3))?;
        }
        if let Some(users) = self.users {
            config.experiment.users = users;
        }
        if let Some(mode) = &self.partition {
            config.partition = match mode.as_str() {
                "homogeneous" => PartitionSection::Homogeneous,
                "heterogeneous" => PartitionSection::Heterogeneous {
                    classes_per_user: self.classes_per_user.unwrap_or(2),
                    min_samples_per_user: self.min_samples_per_user.unwrap_or(2),
                },
                other => bail!("unknown partition mode {other:?}"),
            };
        }
        if let Some(k) = self.k {
            config.experiment.k = k;
        }
        if let Some(runs) = self.runs {
            config.experiment.runs = runs;
        }
        if let Some(seed) = self.seed {
            config.experiment.base_seed = seed;
        }
        if let Some(outdir) = &self.outdir {
            config.experiment.outdir = outdir.into();
        }
        Ok(config)
    }
}

fn parse_loss(name: &str, delta: f64) -> anyhow::Result<LossKind> {
    match name {
        "kmeans" => Ok(LossKind::Kmeans),
        "huber" => Ok(LossKind::Huber { delta }),
        other => bail!("unknown loss {other:?} (expected kmeans or huber)"),
    }
}

fn parse_scheme(name: &str, rounds: Option<usize>) -> anyhow::Result<InitScheme> {
    match name {
        "random" => Ok(InitScheme::Random),
        "kmeanspp" => Ok(InitScheme::Kmeanspp),
        "dkmc" => Ok(InitScheme::Dkmc { rounds: rounds.unwrap_or(2) }),
        other => {
            if let Some(r) = other.strip_prefix("dkmc:") {
                Ok(InitScheme::Dkmc { rounds: r.parse().context("dkmc rounds")? })
            } else {
                bail!("unknown init scheme {other:?}")
            }
        }
    }
}

fn parse_topology(kind: &str, p: f64) -> anyhow::Result<TopologySection> {
    Ok(match kind {
        "ring" => TopologySection::Ring,
        "complete" => TopologySection::Complete,
        "path" => TopologySection::Path,
        "star" => TopologySection::Star,
        "erdos_renyi" => TopologySection::ErdosRenyi { p },
        other => bail!("unknown topology {other:?}"),
    })
}

fn parse_topology_kind(kind: &str, p: f64) -> anyhow::Result<TopologyKind> {
    Ok(match kind {
        "ring" => TopologyKind::Ring,
        "complete" => TopologyKind::Complete,
        "path" => TopologyKind::Path,
        "star" => TopologyKind::Star,
        "erdos_renyi" => TopologyKind::ErdosRenyi { p },
        other => bail!("unknown topology {other:?}"),
    })
}

fn print_summary(summary: &StudySummary) {
    println!("study: {} -> {}", summary.study, summary.output_dir.display());
    for scheme in &summary.schemes {
        match (scheme.mean_final_accuracy, scheme.std_final_accuracy) {
            (Some(mean), Some(std)) => println!(
                "  {:<12} mean final accuracy {:.4} (std {:.4}) over {} seeds",
                scheme.label,
                mean,
                std,
                scheme.seeds.len()
            ),
            _ => println!(
                "  {:<12} {} seeds (no labels; accuracy unavailable)",
                scheme.label,
                scheme.seeds.len()
            ),
        }
        for seed in &scheme.seeds {
            println!(
                "    seed {:>4}: iters={} t0={} residual={:.3e}{}",
                seed.seed,
                seed.iterations,
                seed.stabilization_iteration.map_or("-".into(), |t| t.to_string()),
                seed.certificate.residual_norm,
                seed.final_mean_user_accuracy
                    .map_or(String::new(), |a| format!(" accuracy={a:.4}")),
            );
        }
    }
}

fn main() -> anyhow::Result<()> {
    match Cli::parse().command {
        Command::Run { common } => {
            let config = common.build_config()?;
            let summary = run_experiment(&config)?;
            print_summary(&summary);
        }
        Command::InitStudy { common, schemes } => {
            let config = common.build_config()?;
            let parsed: Vec<InitScheme> = schemes
                .split(',')
                .map(|s| parse_scheme(s.trim(), common.dkmc_rounds))
                .collect::<anyhow::Result<_>>()?;
            let summary = run_init_study(&config, &parsed)?;
            print_summary(&summary);
        }
        Command::RoundSweep { common, rounds } => {
            let config = common.build_config()?;
            let l_values: Vec<usize> = rounds
                .split(',')
                .map(|s| s.trim().parse().context("round counts"))
                .collect::<anyhow::Result<_>>()?;
            let summary = run_round_sweep(&config, &l_values)?;
            print_summary(&summary);
            println!("final accuracy by scheme:");
            for scheme in &summary.schemes {
                if let Some(mean) = scheme.mean_final_accuracy {
                    println!("  {:<10} {:.4}", scheme.label, mean);
                }
            }
        }
        Command::ValidateLoss { loss, huber_delta, trials, dims, seed } => {
            let kind = parse_loss(&loss, huber_delta)?;
            let loss = kind.build()?;
            let mut all_ok = true;
            for dim in dims.split(',') {
                let d: usize = dim.trim().parse().context("dims")?;
                let report = validate_assumption3(loss.as_ref(), d, trials, seed);
                let fmt = |name: &str, c: &dgc_core::losses::ConditionReport| {
                    format!(
                        "{name}={} ({}/{} failures)",
                        if c.passed { "pass" } else { "FAIL" },
                        c.failures,
                        c.trials
                    )
                };
                println!(
                    "loss {} d={d}: {} {} {}",
                    report.loss,
                    fmt("coercivity", &report.coercivity),
                    fmt("smoothness", &report.smoothness),
                    fmt("order", &report.order_preservation),
                );
                all_ok &= report.all_passed();
            }
            if !all_ok {
                bail!("loss failed the contract validator");
            }
        }
        Command::Spectral {
            topology,
            users,
            topology_file,
            er_prob,
            loss,
            huber_delta,
            rho,
            seed,
        } => {
            let topo = match topology_file {
                Some(path) => Topology::from_edge_list_file(path)?,
                None => build_topology(parse_topology_kind(&topology, er_prob)?, users, seed)?,
            };
            let info = laplacian_lambda_max(&topo, 1e-10);
            let kind = parse_loss(&loss, huber_delta)?;
            let beta = kind.build()?.beta();
            println!(
                "m={} edges={} max_degree={}",
                topo.m(),
                topo.edges().len(),
                topo.max_degree()
            );
            println!("lambda_max(L) = {:.12} ({:?})", info.lambda_max, info.method);
            let bound = step_size_bound(beta, rho, info.lambda_max, 1.0);
            println!(
                "step ceiling (beta={beta}, rho={rho}, unit sample weight): alpha < {bound:.6}"
            );
            println!("note: the engine scales the data term by the largest per-user weight sum");
        }
    }
    Ok(())
}
