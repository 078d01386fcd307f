//! Communication graph, Laplacian spectral bound, and synchronous center exchange.

use std::collections::VecDeque;
use std::path::Path;

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::centers::Centers;
use crate::error::{Error, Result};
use crate::seeding::{derive_rng, derive_seed};

/// Undirected connected graph over users `0..m`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topology {
    m: usize,
    edges: Vec<(usize, usize)>,
    neighbors: Vec<Vec<usize>>,
}

impl Topology {
    /// Builds and validates a topology from an edge list. Self-loops are
    /// rejected, duplicates collapse, and the graph must be connected.
    pub fn from_edges(m: usize, raw_edges: &[(usize, usize)]) -> Result<Self> {
        if m == 0 {
            return Err(Error::Topology("need at least one user".into()));
        }
        let mut edges: Vec<(usize, usize)> = Vec::new();
        for &(a, b) in raw_edges {
            if a == b {
                return Err(Error::Topology(format!("self-loop at node {a}")));
            }
            if a >= m || b >= m {
                return Err(Error::Topology(format!("edge ({a},{b}) out of range for m={m}")));
            }
            edges.push((a.min(b), a.max(b)));
        }
        edges.sort_unstable();
        edges.dedup();

        let mut neighbors = vec![Vec::new(); m];
        for &(a, b) in &edges {
            neighbors[a].push(b);
            neighbors[b].push(a);
        }
        for list in &mut neighbors {
            list.sort_unstable();
        }

        let topo = Self { m, edges, neighbors };
        if !topo.is_connected() {
            return Err(Error::Topology("graph is not connected".into()));
        }
        Ok(topo)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors[i].len()
    }

    pub fn max_degree(&self) -> usize {
        self.neighbors.iter().map(Vec::len).max().unwrap_or(0)
    }

    fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.m];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = queue.pop_front() {
            for &v in &self.neighbors[u] {
                if !seen[v] {
                    seen[v] = true;
                    count += 1;
                    queue.push_back(v);
                }
            }
        }
        count == self.m
    }

    /// Dense graph Laplacian L = D - A.
    pub fn laplacian(&self) -> DMatrix<f64> {
        let mut l = DMatrix::zeros(self.m, self.m);
        for &(a, b) in &self.edges {
            l[(a, a)] += 1.0;
            l[(b, b)] += 1.0;
            l[(a, b)] -= 1.0;
            l[(b, a)] -= 1.0;
        }
        l
    }

    /// Reads a topology from a text file with one `i j` pair (0-based) per line.
    /// Blank lines and lines starting with `#` are skipped; m = max index + 1.
    pub fn from_edge_list_file(path: impl AsRef<Path>) -> Result<Self> {
        let content = std::fs::read_to_string(path)?;
        let mut edges = Vec::new();
        let mut max_node = 0usize;
        for (lineno, line) in content.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split_whitespace();
            let parse = |s: Option<&str>| -> Result<usize> {
                s.and_then(|t| t.parse().ok()).ok_or_else(|| {
                    Error::Topology(format!("bad edge list line {}: {line:?}", lineno + 1))
                })
            };
            let a = parse(parts.next())?;
            let b = parse(parts.next())?;
            if parts.next().is_some() {
                return Err(Error::Topology(format!(
                    "bad edge list line {}: expected two node ids",
                    lineno + 1
                )));
            }
            max_node = max_node.max(a).max(b);
            edges.push((a, b));
        }
        if edges.is_empty() {
            return Err(Error::Topology("edge list file has no edges".into()));
        }
        Self::from_edges(max_node + 1, &edges)
    }
}

/// Built-in topology shapes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum TopologyKind {
    Ring,
    Complete,
    Path,
    Star,
    ErdosRenyi { p: f64 },
}

const ER_RETRY_BUDGET: usize = 200;

/// Builds a connected topology of the requested shape. `m = 1` yields the
/// single node with no edges for every kind.
pub fn build_topology(kind: TopologyKind, m: usize, seed: u64) -> Result<Topology> {
    if m == 0 {
        return Err(Error::Topology("need at least one user".into()));
    }
    if m == 1 {
        return Topology::from_edges(1, &[]);
    }
    match kind {
        TopologyKind::Ring => {
            let edges: Vec<_> = (0..m).map(|i| (i, (i + 1) % m)).collect();
            Topology::from_edges(m, &edges)
        }
        TopologyKind::Path => {
            let edges: Vec<_> = (0..m - 1).map(|i| (i, i + 1)).collect();
            Topology::from_edges(m, &edges)
        }
        TopologyKind::Complete => {
            let mut edges = Vec::with_capacity(m * (m - 1) / 2);
            for i in 0..m {
                for j in i + 1..m {
                    edges.push((i, j));
                }
            }
            Topology::from_edges(m, &edges)
        }
        TopologyKind::Star => {
            let edges: Vec<_> = (1..m).map(|i| (0, i)).collect();
            Topology::from_edges(m, &edges)
        }
        TopologyKind::ErdosRenyi { p } => {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Topology(format!("edge probability {p} outside [0,1]")));
            }
            for attempt in 0..ER_RETRY_BUDGET {
                let mut rng = derive_rng(seed, derive_seed(0x4552, attempt as u64));
                let mut edges = Vec::new();
                for i in 0..m {
                    for j in i + 1..m {
                        if rng.random::<f64>() < p {
                            edges.push((i, j));
                        }
                    }
                }
                if let Ok(topo) = Topology::from_edges(m, &edges) {
                    return Ok(topo);
                }
            }
            Err(Error::Topology(format!(
                "no connected Erdos-Renyi graph with p={p} after {ER_RETRY_BUDGET} attempts"
            )))
        }
    }
}

/// How the spectral radius was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectralMethod {
    ExactDense,
    PowerIteration,
    DegreeBound,
}

/// Largest Laplacian eigenvalue and how it was computed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralInfo {
    pub lambda_max: f64,
    pub method: SpectralMethod,
    /// Relative tolerance actually reached; `None` for the degree bound.
    pub tol_achieved: Option<f64>,
}

const DENSE_EIG_LIMIT: usize = 64;
const POWER_MAX_ITERS: usize = 50_000;

/// Largest eigenvalue of the graph Laplacian.
///
/// Small graphs use an exact dense symmetric eigensolve; larger ones a shifted
/// power iteration to relative tolerance `tol`. If the iteration fails to
/// converge the guaranteed-safe bound `2 * max_degree` is returned instead
/// (an overestimate only, so a step size derived from it stays admissible).
pub fn laplacian_lambda_max(topo: &Topology, tol: f64) -> SpectralInfo {
    if topo.m() == 1 {
        return SpectralInfo { lambda_max: 0.0, method: SpectralMethod::ExactDense, tol_achieved: Some(0.0) };
    }
    if topo.m() <= DENSE_EIG_LIMIT {
        let eig = nalgebra::SymmetricEigen::new(topo.laplacian());
        let lambda_max = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
        return SpectralInfo { lambda_max, method: SpectralMethod::ExactDense, tol_achieved: Some(0.0) };
    }
    match power_iteration_lambda_max(topo, tol) {
        Some((lambda_max, achieved)) => SpectralInfo {
            lambda_max,
            method: SpectralMethod::PowerIteration,
            tol_achieved: Some(achieved),
        },
        None => SpectralInfo {
            lambda_max: 2.0 * topo.max_degree() as f64,
            method: SpectralMethod::DegreeBound,
            tol_achieved: None,
        },
    }
}

/// Power iteration on L + I (the +1 shift keeps relative convergence tests
/// meaningful near zero); returns (lambda_max, achieved relative delta).
pub(crate) fn power_iteration_lambda_max(topo: &Topology, tol: f64) -> Option<(f64, f64)> {
    let m = topo.m();
    let mut rng = derive_rng(0x504f_5745, m as u64);
    let mut v: Vec<f64> = (0..m).map(|_| rng.random::<f64>() - 0.5).collect();
    normalize(&mut v);

    // w = (L + I) v without forming the matrix.
    let apply = |v: &[f64], w: &mut Vec<f64>| {
        w.clear();
        w.extend(v.iter().enumerate().map(|(i, &x)| (topo.degree(i) as f64 + 1.0) * x));
        for &(a, b) in topo.edges() {
            w[a] -= v[b];
            w[b] -= v[a];
        }
    };

    let mut w = Vec::with_capacity(m);
    let mut prev = f64::NAN;
    let mut prev_delta = f64::NAN;
    for _ in 0..POWER_MAX_ITERS {
        apply(&v, &mut w);
        let rayleigh: f64 = v.iter().zip(&w).map(|(x, y)| x * y).sum();
        let delta = (rayleigh - prev).abs();
        // Geometric-tail estimate of the remaining error: the Rayleigh quotient
        // converges as C*r^t, so error ~ delta * r / (1 - r) with r = delta ratio.
        if delta == 0.0 {
            return Some(((rayleigh - 1.0).max(0.0), 0.0));
        }
        if prev_delta.is_finite() && delta < prev_delta {
            let r = delta / prev_delta;
            let err_est = delta * r / (1.0 - r) / rayleigh.max(1.0);
            if err_est <= tol {
                return Some(((rayleigh - 1.0).max(0.0), err_est));
            }
        }
        prev_delta = delta;
        prev = rayleigh;
        std::mem::swap(&mut v, &mut w);
        normalize(&mut v);
    }
    None
}

fn normalize(v: &mut [f64]) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
}

/// One synchronous broadcast round: user `i` receives `(j, x_j)` for every
/// neighbour `j`, all taken from the same snapshot of centers.
pub fn exchange_centers<'a>(
    topo: &Topology,
    all_centers: &'a [Centers],
) -> Result<Vec<Vec<(usize, &'a Centers)>>> {
    if all_centers.len() != topo.m() {
        return Err(Error::State(format!(
            "{} center blocks for {} users",
            all_centers.len(),
            topo.m()
        )));
    }
    let (k, d) = (all_centers[0].k(), all_centers[0].d());
    if all_centers.iter().any(|c| c.k() != k || c.d() != d) {
        return Err(Error::State("center dimensions differ across users".into()));
    }
    Ok((0..topo.m())
        .map(|i| topo.neighbors(i).iter().map(|&j| (j, &all_centers[j])).collect())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn ring_of_ten_has_ten_edges_all_degree_two() {
        let topo = build_topology(TopologyKind::Ring, 10, 0).unwrap();
        assert_eq!(topo.edges().len(), 10);
        assert!((0..10).all(|i| topo.degree(i) == 2));
    }

    #[test]
    fn complete_three_is_a_triangle() {
        let topo = build_topology(TopologyKind::Complete, 3, 0).unwrap();
        assert_eq!(topo.edges().len(), 3);
        assert!((0..3).all(|i| topo.degree(i) == 2));
    }

    #[test]
    fn ring_of_two_collapses_to_one_edge() {
        let topo = build_topology(TopologyKind::Ring, 2, 0).unwrap();
        assert_eq!(topo.edges(), &[(0, 1)]);
    }

    #[test]
    fn single_node_has_no_edges_for_any_kind() {
        for kind in [TopologyKind::Ring, TopologyKind::Path, TopologyKind::Complete] {
            let topo = build_topology(kind, 1, 0).unwrap();
            assert!(topo.edges().is_empty());
        }
    }

    #[test]
    fn self_loops_and_disconnected_graphs_are_rejected() {
        assert!(matches!(Topology::from_edges(2, &[(0, 0)]), Err(Error::Topology(_))));
        assert!(matches!(Topology::from_edges(4, &[(0, 1), (2, 3)]), Err(Error::Topology(_))));
    }

    #[test]
    fn neighbor_symmetry_holds_on_all_kinds() {
        for (kind, m) in [
            (TopologyKind::Ring, 7),
            (TopologyKind::Path, 5),
            (TopologyKind::Star, 6),
            (TopologyKind::Complete, 4),
            (TopologyKind::ErdosRenyi { p: 0.4 }, 9),
        ] {
            let topo = build_topology(kind, m, 3).unwrap();
            for i in 0..m {
                for &j in topo.neighbors(i) {
                    assert!(topo.neighbors(j).contains(&i));
                    assert_ne!(i, j);
                }
            }
        }
    }

    #[test]
    fn path_of_two_lambda_is_two() {
        let topo = build_topology(TopologyKind::Path, 2, 0).unwrap();
        let info = laplacian_lambda_max(&topo, 1e-10);
        assert_relative_eq!(info.lambda_max, 2.0, max_relative = 1e-12);
    }

    #[test]
    fn ring_of_ten_lambda_is_four() {
        let topo = build_topology(TopologyKind::Ring, 10, 0).unwrap();
        let info = laplacian_lambda_max(&topo, 1e-10);
        assert_relative_eq!(info.lambda_max, 4.0, max_relative = 1e-10);
        assert_eq!(info.method, SpectralMethod::ExactDense);
    }

    #[test]
    fn complete_five_lambda_is_five() {
        let topo = build_topology(TopologyKind::Complete, 5, 0).unwrap();
        let info = laplacian_lambda_max(&topo, 1e-10);
        assert_relative_eq!(info.lambda_max, 5.0, max_relative = 1e-10);
    }

    #[test]
    fn power_iteration_matches_dense_solve() {
        for (kind, m) in [
            (TopologyKind::Ring, 12),
            (TopologyKind::Star, 9),
            (TopologyKind::ErdosRenyi { p: 0.5 }, 15),
        ] {
            let topo = build_topology(kind, m, 1).unwrap();
            let dense = laplacian_lambda_max(&topo, 1e-12).lambda_max;
            let (power, _) = power_iteration_lambda_max(&topo, 1e-12).unwrap();
            assert_relative_eq!(power, dense, max_relative = 1e-8);
        }
    }

    #[test]
    fn power_iteration_is_used_above_the_dense_limit() {
        let topo = build_topology(TopologyKind::Ring, 80, 0).unwrap();
        let info = laplacian_lambda_max(&topo, 1e-10);
        assert_eq!(info.method, SpectralMethod::PowerIteration);
        // Even cycle: lambda_max = 4 exactly.
        assert_relative_eq!(info.lambda_max, 4.0, max_relative = 1e-8);
    }

    #[test]
    fn spectral_sandwich_on_random_connected_graphs() {
        for seed in 0..20u64 {
            let m = 2 + (seed as usize % 19);
            let topo = build_topology(TopologyKind::ErdosRenyi { p: 0.5 }, m, seed).unwrap();
            let lambda = laplacian_lambda_max(&topo, 1e-12).lambda_max;
            let dmax = topo.max_degree() as f64;
            assert!(lambda >= dmax + 1.0 - 1e-9, "m={m} lambda={lambda} dmax={dmax}");
            assert!(lambda <= 2.0 * dmax + 1e-9, "m={m} lambda={lambda} dmax={dmax}");
        }
    }

    #[test]
    fn exchange_matches_neighbor_lists() {
        let topo = build_topology(TopologyKind::Ring, 4, 0).unwrap();
        let centers: Vec<Centers> =
            (0..4).map(|i| Centers::from_rows(&[vec![i as f64]])).collect();
        let inboxes = exchange_centers(&topo, &centers).unwrap();
        let senders: Vec<usize> = inboxes[0].iter().map(|&(j, _)| j).collect();
        assert_eq!(senders, vec![1, 3]);
        assert_eq!(inboxes[0][0].1.row(0), &[1.0]);
        assert_eq!(inboxes[0][1].1.row(0), &[3.0]);
        // Locality: only neighbours ever appear.
        for (i, inbox) in inboxes.iter().enumerate() {
            for &(j, _) in inbox {
                assert!(topo.neighbors(i).contains(&j));
            }
        }
    }

    #[test]
    fn exchange_on_single_node_is_empty() {
        let topo = build_topology(TopologyKind::Ring, 1, 0).unwrap();
        let centers = vec![Centers::from_rows(&[vec![1.0, 2.0]])];
        let inboxes = exchange_centers(&topo, &centers).unwrap();
        assert!(inboxes[0].is_empty());
    }

    #[test]
    fn exchange_ring_three_is_complete() {
        let topo = build_topology(TopologyKind::Ring, 3, 0).unwrap();
        let centers: Vec<Centers> =
            (0..3).map(|i| Centers::from_rows(&[vec![10.0 + i as f64]])).collect();
        let inboxes = exchange_centers(&topo, &centers).unwrap();
        let got: Vec<(usize, f64)> = inboxes[0].iter().map(|&(j, c)| (j, c.row(0)[0])).collect();
        assert_eq!(got, vec![(1, 11.0), (2, 12.0)]);
    }

    #[test]
    fn exchange_rejects_mismatched_dimensions() {
        let topo = build_topology(TopologyKind::Ring, 2, 0).unwrap();
        let centers =
            vec![Centers::from_rows(&[vec![0.0, 0.0]]), Centers::from_rows(&[vec![0.0]])];
        assert!(matches!(exchange_centers(&topo, &centers), Err(Error::State(_))));
    }

    #[test]
    fn edge_list_file_round_trip() {
        use std::io::Write;
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "# a triangle\n0 1\n1 2\n2 0").unwrap();
        let topo = Topology::from_edge_list_file(f.path()).unwrap();
        assert_eq!(topo.m(), 3);
        assert_eq!(topo.edges().len(), 3);
    }
}
