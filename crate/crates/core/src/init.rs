//! Center initialization schemes.
//!
//! `random` and `kmeanspp` act on one user's local data; `dkmc` adds L rounds
//! of neighbour center exchange, each followed by a local Lloyd solve over the
//! pooled `(deg + 1) * K` center points. Per-user RNG streams derive from the
//! master seed and the user id, so results never depend on iteration order.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::centers::{dist2, nearest_center, Centers};
use crate::data::LocalDataset;
use crate::error::{Error, Result};
use crate::network::{exchange_centers, Topology};
use crate::seeding::derive_rng;

/// Initialization scheme selection for configs and the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "scheme")]
pub enum InitScheme {
    Random,
    #[default]
    Kmeanspp,
    Dkmc { rounds: usize },
}

impl InitScheme {
    /// Directory-friendly name; DKM+C carries its round count.
    pub fn label(&self) -> String {
        match self {
            InitScheme::Random => "random".into(),
            InitScheme::Kmeanspp => "kmeanspp".into(),
            InitScheme::Dkmc { rounds } => format!("dkmc_L{rounds}"),
        }
    }
}

const LLOYD_MAX_ITERS: usize = 100;
const LLOYD_TOL_SCALE: f64 = 1e-9;

/// K centers drawn uniformly without replacement from the local samples.
///
/// If the user holds fewer than `k` distinct points, sampling falls back to
/// drawing with replacement among the distinct points and jittering duplicates
/// by `1e-9 * data scale`.
pub fn random_init(data: &LocalDataset, k: usize, seed: u64) -> Result<Centers> {
    validate_init(data, k)?;
    let mut rng = derive_rng(seed, 0);
    let distinct = distinct_points(&data.samples);
    if distinct.len() >= k {
        let chosen = rand::seq::index::sample(&mut rng, data.samples.len(), k);
        let rows: Vec<Vec<f64>> = chosen.iter().map(|i| data.samples[i].clone()).collect();
        return Ok(Centers::from_rows(&rows));
    }

    let jitter = 1e-9 * data_scale(&data.samples);
    let mut rows: Vec<Vec<f64>> = (0..k)
        .map(|_| distinct[rng.random_range(0..distinct.len())].clone())
        .collect();
    let mut seen: Vec<Vec<f64>> = Vec::new();
    for row in rows.iter_mut() {
        if seen.contains(row) {
            for x in row.iter_mut() {
                *x += jitter * (rng.random::<f64>() - 0.5);
            }
        }
        seen.push(row.clone());
    }
    Ok(Centers::from_rows(&rows))
}

/// K-means++ D^2 sampling on the local data: the first center uniform, each
/// further one with probability proportional to the squared distance to the
/// nearest chosen center. Once every distinct point is taken, remaining slots
/// duplicate uniformly drawn samples.
pub fn kmeanspp_init(data: &LocalDataset, k: usize, seed: u64) -> Result<Centers> {
    validate_init(data, k)?;
    let mut rng = derive_rng(seed, 0);
    let n = data.samples.len();
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(k);
    rows.push(data.samples[rng.random_range(0..n)].clone());

    let mut min_d2: Vec<f64> = data.samples.iter().map(|s| dist2(s, &rows[0])).collect();
    for _ in 1..k {
        let total: f64 = min_d2.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = n - 1;
            for (i, &w) in min_d2.iter().enumerate() {
                if target < w {
                    pick = i;
                    break;
                }
                target -= w;
            }
            pick
        } else {
            // All distinct points exhausted; duplicates permitted.
            rng.random_range(0..n)
        };
        let chosen = data.samples[next].clone();
        for (d2, s) in min_d2.iter_mut().zip(&data.samples) {
            *d2 = d2.min(dist2(s, &chosen));
        }
        rows.push(chosen);
    }
    Ok(Centers::from_rows(&rows))
}

fn validate_init(data: &LocalDataset, k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::Init("need at least one center".into()));
    }
    if data.is_empty() {
        return Err(Error::Init(format!("user {} has no local samples", data.owner)));
    }
    Ok(())
}

fn distinct_points(samples: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut distinct: Vec<Vec<f64>> = Vec::new();
    for s in samples {
        if !distinct.contains(s) {
            distinct.push(s.clone());
        }
    }
    distinct
}

/// Largest per-dimension range, or 1 for degenerate data.
fn data_scale(samples: &[Vec<f64>]) -> f64 {
    let d = samples[0].len();
    let mut scale = 0.0f64;
    for j in 0..d {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for s in samples {
            lo = lo.min(s[j]);
            hi = hi.max(s[j]);
        }
        scale = scale.max(hi - lo);
    }
    if scale > 0.0 {
        scale
    } else {
        1.0
    }
}

/// Lloyd's iteration: alternate nearest-center assignment (smallest-index
/// ties) and mean recomputation until the assignment reaches a fixpoint, the
/// centers move less than `tol`, or `max_iters` passes. Empty clusters keep
/// their previous center.
pub fn lloyd_kmeans(
    points: &[Vec<f64>],
    k: usize,
    init: &Centers,
    max_iters: usize,
    tol: f64,
) -> Centers {
    assert!(!points.is_empty(), "Lloyd needs at least one point");
    assert_eq!(init.k(), k, "init must carry k centers");
    let d = init.d();
    let mut centers = init.clone();
    let mut prev_assign: Option<Vec<usize>> = None;

    for _ in 0..max_iters {
        let assign: Vec<usize> = points.iter().map(|p| nearest_center(&centers, p)).collect();
        if prev_assign.as_ref() == Some(&assign) {
            break;
        }

        let mut sums = vec![0.0; k * d];
        let mut counts = vec![0usize; k];
        for (p, &c) in points.iter().zip(&assign) {
            counts[c] += 1;
            for (j, &v) in p.iter().enumerate() {
                sums[c * d + j] += v;
            }
        }
        let mut movement = 0.0f64;
        for c in 0..k {
            if counts[c] == 0 {
                continue;
            }
            let row = centers.row_mut(c);
            let mut moved = 0.0;
            for (j, x) in row.iter_mut().enumerate() {
                let mean = sums[c * d + j] / counts[c] as f64;
                moved += (*x - mean) * (*x - mean);
                *x = mean;
            }
            movement = movement.max(moved.sqrt());
        }
        prev_assign = Some(assign);
        if movement < tol {
            break;
        }
    }
    centers
}

/// Collaborative initialization: local K-means++, then `rounds` rounds of
/// neighbour exchange each followed by a local Lloyd solve on the pooled
/// centers, seeded with the user's own previous centers to keep cluster
/// labels aligned across rounds.
pub fn dkmc_init(
    data: &[LocalDataset],
    topo: &Topology,
    k: usize,
    rounds: usize,
    seed: u64,
) -> Result<Vec<Centers>> {
    if data.len() != topo.m() {
        return Err(Error::Config(format!(
            "{} local datasets for {} users",
            data.len(),
            topo.m()
        )));
    }
    let mut centers: Vec<Centers> = data
        .iter()
        .enumerate()
        .map(|(i, local)| kmeanspp_init(local, k, crate::seeding::derive_seed(seed, i as u64)))
        .collect::<Result<_>>()?;

    for _ in 0..rounds {
        let inboxes = exchange_centers(topo, &centers)?;
        let next: Vec<Centers> = centers
            .iter()
            .enumerate()
            .map(|(i, own)| {
                let pool = pool_neighbor_centers(own, &inboxes[i]);
                let tol = LLOYD_TOL_SCALE * data_scale(&pool);
                lloyd_kmeans(&pool, k, own, LLOYD_MAX_ITERS, tol)
            })
            .collect();
        centers = next;
    }
    Ok(centers)
}

/// The Lloyd input for one DKM+C round: the user's own K centers followed by
/// each neighbour's, in neighbour-id order — exactly `(deg + 1) * K` points.
pub(crate) fn pool_neighbor_centers(own: &Centers, inbox: &[(usize, &Centers)]) -> Vec<Vec<f64>> {
    let mut pool: Vec<Vec<f64>> = own.rows().map(<[f64]>::to_vec).collect();
    for &(_, theirs) in inbox {
        pool.extend(theirs.rows().map(<[f64]>::to_vec));
    }
    pool
}

/// Per-user centers for the configured scheme. `dkmc` with 0 rounds matches
/// `kmeanspp` bit for bit.
pub fn initialize(
    data: &[LocalDataset],
    topo: &Topology,
    k: usize,
    scheme: InitScheme,
    seed: u64,
) -> Result<Vec<Centers>> {
    match scheme {
        InitScheme::Random => data
            .iter()
            .enumerate()
            .map(|(i, local)| random_init(local, k, crate::seeding::derive_seed(seed, i as u64)))
            .collect(),
        InitScheme::Kmeanspp => data
            .iter()
            .enumerate()
            .map(|(i, local)| kmeanspp_init(local, k, crate::seeding::derive_seed(seed, i as u64)))
            .collect(),
        InitScheme::Dkmc { rounds } => dkmc_init(data, topo, k, rounds, seed),
    }
}
