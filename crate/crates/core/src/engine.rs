//! The distributed gradient clustering iteration and its diagnostics.
//!
//! One synchronous round, per user i: (1) reassign every local sample to the
//! nearest of user i's own centers, (2) exchange centers with neighbours,
//! (3) move each center k by
//!
//! ```text
//! x_i(k) <- x_i(k) - alpha * sum_{j in N_i} [x_i(k) - x_j(k)]
//!                  - (alpha/rho) * sum_{r in C_i(k)} w_{i,r} grad f(x_i(k), y_{i,r})
//! ```
//!
//! The update is exactly a gradient step on the potential
//! `Phi_rho(x, C) = 1/2 sum_k sum_{{i,j} in E} ||x_i(k) - x_j(k)||^2
//!                + (1/rho) sum_{i,k} sum_{r in C_i(k)} w_{i,r} f(x_i(k), y_{i,r})`
//! at fixed assignments, so any step size below the inverse of the potential's
//! curvature bound `beta * W / rho + lambda_max(L)` (W = largest per-user
//! weight sum) makes every round non-increasing in `Phi_rho`.

use serde::{Deserialize, Serialize};

use crate::centers::{dist2, nearest_center, Centers};
use crate::data::{distinct_count, GlobalDataset, LocalDataset};
use crate::error::{Error, Result};
use crate::losses::Loss;
use crate::metrics::{clustering_accuracy, consensus_error};
use crate::network::{exchange_centers, laplacian_lambda_max, Topology};

/// All users' centers and cluster assignments at one iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkState {
    /// Per-user K-by-d center blocks.
    pub centers: Vec<Centers>,
    /// Per-user map from local sample index to cluster id.
    pub assignments: Vec<Vec<usize>>,
    pub iteration: usize,
}

/// Step-size selection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepSize {
    /// `safety * (beta * W / rho + lambda_max(L))^{-1}` with `W` the largest
    /// per-user total sample weight; `safety` must lie in (0, 1).
    Auto { safety: f64 },
    Fixed(f64),
}

impl Default for StepSize {
    fn default() -> Self {
        StepSize::Auto { safety: 0.99 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Penalty parameter, >= 1. Larger values enforce consensus more strongly.
    pub rho: f64,
    pub step: StepSize,
    /// Number of synchronous rounds to run.
    pub iters: usize,
    /// Stop at the first round whose fixed-point certificate passes.
    pub early_stop: bool,
    /// Residual tolerance for fixed-point certification.
    pub fixed_point_tol: f64,
}

impl SolverConfig {
    pub fn new(rho: f64, iters: usize) -> Self {
        Self { rho, step: StepSize::default(), iters, early_stop: false, fixed_point_tol: 1e-8 }
    }

    pub fn with_step(mut self, step: StepSize) -> Self {
        self.step = step;
        self
    }

    pub fn with_early_stop(mut self, tol: f64) -> Self {
        self.early_stop = true;
        self.fixed_point_tol = tol;
        self
    }

    fn validate(&self) -> Result<()> {
        if !self.rho.is_finite() || self.rho < 1.0 {
            return Err(Error::Config(format!("rho must be >= 1, got {}", self.rho)));
        }
        if self.iters == 0 {
            return Err(Error::Config("need at least one iteration".into()));
        }
        if let StepSize::Auto { safety } = self.step {
            if !(0.0 < safety && safety < 1.0) {
                return Err(Error::Config(format!(
                    "auto step safety factor must lie in (0,1), got {safety}"
                )));
            }
        }
        if let StepSize::Fixed(a) = self.step {
            if !a.is_finite() || a <= 0.0 {
                return Err(Error::Config(format!("step size must be positive, got {a}")));
            }
        }
        Ok(())
    }
}

/// Terminal stationarity certificate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedPointCertificate {
    pub is_fixed: bool,
    /// Every sample sits in a cluster whose center attains the minimal distance.
    pub assignment_optimal: bool,
    /// Euclidean norm of the full update direction (consensus + gradient/rho)
    /// stacked over all users and centers.
    pub residual_norm: f64,
    pub tolerance: f64,
}

/// Full per-iteration traces plus the final state of one run.
#[derive(Debug, Clone)]
pub struct RunRecord {
    /// Descent potential `Phi_rho(x^t, C^{t+1})` per iteration.
    pub phi_trace: Vec<f64>,
    /// Relaxed objective `J_rho(x^t, C^{t+1})` per iteration (consensus part
    /// counts each edge from both endpoints).
    pub j_trace: Vec<f64>,
    /// Label-permutation accuracy over the pooled samples, when labels given.
    pub global_accuracy: Option<Vec<f64>>,
    /// Mean over users of per-user label-permutation accuracy.
    pub mean_user_accuracy: Option<Vec<f64>>,
    /// Max over centers and user pairs of center disagreement.
    pub consensus_trace: Vec<f64>,
    /// Whether assignments changed at each iteration.
    pub clusters_changed: Vec<bool>,
    /// First iteration after which assignments never changed again; `None` if
    /// they were still moving when the run ended.
    pub stabilization_iteration: Option<usize>,
    pub final_state: NetworkState,
    pub certificate: FixedPointCertificate,
    /// Step size actually used.
    pub alpha: f64,
    pub iterations_run: usize,
}

/// Nearest-center reassignment: each local sample joins the cluster of its
/// user's closest center, ties to the smallest index. Purely local.
pub fn assign_clusters(
    all_centers: &[Centers],
    data: &[LocalDataset],
) -> Result<Vec<Vec<usize>>> {
    if let Some(i) = all_centers.iter().position(|c| !c.all_finite()) {
        return Err(Error::State(format!("non-finite centers at user {i}")));
    }
    Ok(data
        .iter()
        .zip(all_centers)
        .map(|(local, centers)| {
            local.samples.iter().map(|y| nearest_center(centers, y)).collect()
        })
        .collect())
}

/// The stacked update direction `g_{i,k} = sum_{j in N_i} [x_i(k) - x_j(k)]
/// + (1/rho) sum_{r in C_i(k)} w_{i,r} grad f(x_i(k), y_{i,r})`, i.e. the
/// gradient of `Phi_rho(., C)`.
fn update_direction(
    all_centers: &[Centers],
    inboxes: &[Vec<(usize, &Centers)>],
    assignments: &[Vec<usize>],
    data: &[LocalDataset],
    loss: &dyn Loss,
    rho: f64,
) -> Vec<Centers> {
    let d = all_centers[0].d();
    let mut grad_buf = vec![0.0; d];
    all_centers
        .iter()
        .enumerate()
        .map(|(i, centers)| {
            let mut direction = Centers::zeros(centers.k(), d);
            for k in 0..centers.k() {
                let own = centers.row(k);
                let dir = direction.row_mut(k);
                for &(_, neighbor) in &inboxes[i] {
                    let theirs = neighbor.row(k);
                    for (dst, (&a, &b)) in dir.iter_mut().zip(own.iter().zip(theirs)) {
                        *dst += a - b;
                    }
                }
                for (r, y) in data[i].samples.iter().enumerate() {
                    if assignments[i][r] == k {
                        loss.gradient(own, y, &mut grad_buf);
                        let w = data[i].weights[r] / rho;
                        for (dst, &g) in dir.iter_mut().zip(&grad_buf) {
                            *dst += w * g;
                        }
                    }
                }
            }
            direction
        })
        .collect()
}

/// One consensus+gradient center step. Assignments must already be refreshed
/// for this round. Empty clusters contribute no gradient and move by
/// consensus only.
pub fn center_update(
    all_centers: &[Centers],
    inboxes: &[Vec<(usize, &Centers)>],
    assignments: &[Vec<usize>],
    data: &[LocalDataset],
    loss: &dyn Loss,
    alpha: f64,
    rho: f64,
) -> Result<Vec<Centers>> {
    let directions = update_direction(all_centers, inboxes, assignments, data, loss, rho);
    let mut next = all_centers.to_vec();
    for (centers, direction) in next.iter_mut().zip(&directions) {
        for (x, g) in centers.as_mut_slice().iter_mut().zip(direction.as_slice()) {
            *x -= alpha * g;
        }
    }
    if let Some(i) = next.iter().position(|c| !c.all_finite()) {
        return Err(Error::State(format!("non-finite update at user {i}")));
    }
    Ok(next)
}

/// Which objective to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    /// Relaxed objective: per-user half-sum over neighbours (each edge counted
    /// twice) plus the weighted data term scaled by 1/rho.
    JRho,
    /// Descent potential: half-sum over edges plus the same data term; its
    /// gradient is exactly the implemented update direction.
    PhiRho,
    /// Constrained global objective evaluated at the across-users mean center,
    /// with each user's own assignments (unweighted).
    GlobalEq1,
}

pub fn evaluate_objective(
    all_centers: &[Centers],
    assignments: &[Vec<usize>],
    data: &[LocalDataset],
    topo: &Topology,
    loss: &dyn Loss,
    rho: f64,
    which: Objective,
) -> f64 {
    match which {
        Objective::JRho => edge_disagreement(all_centers, topo) + data_term(all_centers, assignments, data, loss) / rho,
        Objective::PhiRho => {
            0.5 * edge_disagreement(all_centers, topo)
                + data_term(all_centers, assignments, data, loss) / rho
        }
        Objective::GlobalEq1 => {
            let k = all_centers[0].k();
            let d = all_centers[0].d();
            let m = all_centers.len() as f64;
            let mut mean = Centers::zeros(k, d);
            for centers in all_centers {
                for (dst, &src) in mean.as_mut_slice().iter_mut().zip(centers.as_slice()) {
                    *dst += src / m;
                }
            }
            data.iter()
                .zip(assignments)
                .flat_map(|(local, assign)| {
                    local.samples.iter().zip(assign).map(|(y, &c)| loss.value(mean.row(c), y))
                })
                .sum()
        }
    }
}

/// `sum_k sum_{{i,j} in E} ||x_i(k) - x_j(k)||^2`.
fn edge_disagreement(all_centers: &[Centers], topo: &Topology) -> f64 {
    topo.edges()
        .iter()
        .map(|&(a, b)| {
            all_centers[a]
                .rows()
                .zip(all_centers[b].rows())
                .map(|(ra, rb)| dist2(ra, rb))
                .sum::<f64>()
        })
        .sum()
}

/// `sum_i sum_k sum_{r in C_i(k)} w_{i,r} f(x_i(k), y_{i,r})`.
fn data_term(
    all_centers: &[Centers],
    assignments: &[Vec<usize>],
    data: &[LocalDataset],
    loss: &dyn Loss,
) -> f64 {
    data.iter()
        .zip(all_centers)
        .zip(assignments)
        .map(|((local, centers), assign)| {
            local
                .samples
                .iter()
                .zip(&local.weights)
                .zip(assign)
                .map(|((y, &w), &c)| w * loss.value(centers.row(c), y))
                .sum::<f64>()
        })
        .sum()
}

/// Admissible step-size ceiling `(beta * max_weight_sum / rho + lambda_max)^{-1}`.
///
/// `max_weight_sum` is the largest per-user total sample weight: in the worst
/// assignment all of a user's samples share one cluster, so the data term's
/// curvature per center block reaches `beta * W / rho`.
pub fn step_size_bound(beta: f64, rho: f64, lambda_max: f64, max_weight_sum: f64) -> f64 {
    1.0 / (beta * max_weight_sum / rho + lambda_max)
}

/// Resolves the configured step size for the given instance.
pub fn resolve_step_size(
    config: &SolverConfig,
    data: &[LocalDataset],
    topo: &Topology,
    loss: &dyn Loss,
) -> Result<f64> {
    match config.step {
        StepSize::Fixed(a) => Ok(a),
        StepSize::Auto { safety } => {
            let lambda = laplacian_lambda_max(topo, 1e-10).lambda_max;
            let max_weight = data.iter().map(LocalDataset::weight_sum).fold(0.0, f64::max);
            let bound = step_size_bound(loss.beta(), config.rho, lambda, max_weight);
            if !bound.is_finite() || bound <= 0.0 {
                return Err(Error::Config(
                    "step-size bound is degenerate (no data and no edges)".into(),
                ));
            }
            Ok(safety * bound)
        }
    }
}

/// Stationarity check at a (centers, assignments) pair: assignments must be
/// nearest-center optimal (ties permitted) and the update direction must
/// vanish to within `tol`.
pub fn fixed_point_check(
    all_centers: &[Centers],
    assignments: &[Vec<usize>],
    data: &[LocalDataset],
    topo: &Topology,
    loss: &dyn Loss,
    rho: f64,
    tol: f64,
) -> FixedPointCertificate {
    let mut assignment_optimal = true;
    'outer: for (i, local) in data.iter().enumerate() {
        for (r, y) in local.samples.iter().enumerate() {
            let assigned = dist2(all_centers[i].row(assignments[i][r]), y);
            let best = all_centers[i].rows().map(|row| dist2(row, y)).fold(f64::INFINITY, f64::min);
            if assigned > best {
                assignment_optimal = false;
                break 'outer;
            }
        }
    }

    let inboxes = exchange_centers(topo, all_centers).expect("validated state");
    let directions = update_direction(all_centers, &inboxes, assignments, data, loss, rho);
    let residual_norm = directions
        .iter()
        .flat_map(|c| c.as_slice().iter().map(|g| g * g))
        .sum::<f64>()
        .sqrt();

    FixedPointCertificate {
        is_fixed: assignment_optimal && residual_norm <= tol,
        assignment_optimal,
        residual_norm,
        tolerance: tol,
    }
}

/// Per-user ground-truth class labels, aligned with each user's samples.
pub type GroundTruth<'a> = Option<&'a [Vec<usize>]>;

/// Runs the distributed iteration for `config.iters` synchronous rounds
/// (or stops early once the fixed-point certificate holds, if enabled).
///
/// The recorded iteration t traces the pair `(x^t, C^{t+1})`: centers entering
/// the round and the fresh assignments they induce. Deterministic in all
/// inputs.
pub fn dgc_run(
    data: &[LocalDataset],
    topo: &Topology,
    loss: &dyn Loss,
    init_centers: Vec<Centers>,
    config: &SolverConfig,
    ground_truth: GroundTruth,
) -> Result<RunRecord> {
    config.validate()?;
    let m = topo.m();
    if data.len() != m || init_centers.len() != m {
        return Err(Error::Config(format!(
            "expected {} local datasets and center blocks, got {} and {}",
            m,
            data.len(),
            init_centers.len()
        )));
    }
    let k = init_centers[0].k();
    let d = init_centers[0].d();
    if init_centers.iter().any(|c| c.k() != k || c.d() != d) {
        return Err(Error::State("initial center dimensions differ across users".into()));
    }
    if let Some(local) = data.iter().find(|l| l.samples.iter().any(|s| s.len() != d)) {
        return Err(Error::State(format!(
            "user {} holds samples of a different dimension than the centers",
            local.owner
        )));
    }
    let union: Vec<Vec<f64>> = data.iter().flat_map(|l| l.samples.clone()).collect();
    if distinct_count(&union) < k {
        return Err(Error::Config(format!("need at least {k} distinct samples across users")));
    }
    if let Some(gt) = ground_truth {
        if gt.len() != m || gt.iter().zip(data).any(|(g, l)| g.len() != l.len()) {
            return Err(Error::Input("ground truth shape does not match local data".into()));
        }
    }

    let alpha = resolve_step_size(config, data, topo, loss)?;
    let rho = config.rho;

    let truth_pooled: Option<Vec<usize>> =
        ground_truth.map(|gt| gt.iter().flatten().copied().collect());

    let mut centers = init_centers;
    let mut prev_assignments: Option<Vec<Vec<usize>>> = None;
    let mut record = RunRecord {
        phi_trace: Vec::with_capacity(config.iters),
        j_trace: Vec::with_capacity(config.iters),
        global_accuracy: ground_truth.map(|_| Vec::with_capacity(config.iters)),
        mean_user_accuracy: ground_truth.map(|_| Vec::with_capacity(config.iters)),
        consensus_trace: Vec::with_capacity(config.iters),
        clusters_changed: Vec::with_capacity(config.iters),
        stabilization_iteration: None,
        final_state: NetworkState { centers: Vec::new(), assignments: Vec::new(), iteration: 0 },
        certificate: FixedPointCertificate {
            is_fixed: false,
            assignment_optimal: false,
            residual_norm: f64::NAN,
            tolerance: config.fixed_point_tol,
        },
        alpha,
        iterations_run: 0,
    };

    let mut early_exit = false;
    for t in 0..config.iters {
        if centers.iter().any(|c| !c.all_finite()) {
            return Err(Error::Divergence { iteration: t });
        }
        let assignments = assign_clusters(&centers, data)?;

        record.phi_trace.push(evaluate_objective(
            &centers, &assignments, data, topo, loss, rho, Objective::PhiRho,
        ));
        record.j_trace.push(evaluate_objective(
            &centers, &assignments, data, topo, loss, rho, Objective::JRho,
        ));
        record.consensus_trace.push(consensus_error(&centers));
        if let (Some(gt), Some(pooled)) = (ground_truth, &truth_pooled) {
            let predicted: Vec<usize> = assignments.iter().flatten().copied().collect();
            record
                .global_accuracy
                .as_mut()
                .unwrap()
                .push(clustering_accuracy(&predicted, pooled, k)?);
            let mut mean = 0.0;
            let mut counted = 0usize;
            for (assign, truth) in assignments.iter().zip(gt) {
                if !assign.is_empty() {
                    mean += clustering_accuracy(assign, truth, k)?;
                    counted += 1;
                }
            }
            record.mean_user_accuracy.as_mut().unwrap().push(mean / counted.max(1) as f64);
        }
        record
            .clusters_changed
            .push(prev_assignments.as_ref().map_or(true, |prev| *prev != assignments));
        record.iterations_run = t + 1;

        if config.early_stop {
            let cert = fixed_point_check(
                &centers,
                &assignments,
                data,
                topo,
                loss,
                rho,
                config.fixed_point_tol,
            );
            if cert.is_fixed {
                record.certificate = cert;
                prev_assignments = Some(assignments);
                early_exit = true;
                break;
            }
        }

        let inboxes = exchange_centers(topo, &centers)?;
        let next = center_update(&centers, &inboxes, &assignments, data, loss, alpha, rho)
            .map_err(|_| Error::Divergence { iteration: t })?;
        centers = next;
        prev_assignments = Some(assignments);
    }

    let assignments = prev_assignments.expect("at least one iteration ran");
    if !early_exit {
        record.certificate = fixed_point_check(
            &centers,
            &assignments,
            data,
            topo,
            loss,
            rho,
            config.fixed_point_tol,
        );
    }
    record.final_state =
        NetworkState { centers, assignments, iteration: record.iterations_run };

    let last_change = record.clusters_changed.iter().rposition(|&c| c);
    record.stabilization_iteration = match last_change {
        Some(t) if t + 1 == record.clusters_changed.len() => None,
        Some(t) => Some(t + 1),
        None => Some(0),
    };
    Ok(record)
}

/// Centralized gradient clustering: the m = 1 degenerate run on pooled data
/// (the consensus term vanishes and rho = 1).
pub fn cgc_run(
    data: &GlobalDataset,
    loss: &dyn Loss,
    init_centers: Centers,
    step: StepSize,
    iters: usize,
    ground_truth: Option<&[usize]>,
) -> Result<RunRecord> {
    let local = vec![LocalDataset::pooled(data)];
    let topo = Topology::from_edges(1, &[])?;
    let config = SolverConfig::new(1.0, iters).with_step(step);
    let gt_vec = ground_truth.map(|t| vec![t.to_vec()]);
    dgc_run(&local, &topo, loss, vec![init_centers], &config, gt_vec.as_deref())
}
