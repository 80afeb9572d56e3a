//! Exact 1-Wasserstein distances between probability measures on a
//! finite metric space.
//!
//! `W1(mu, nu) = min sum_{x,y} c(x,y) f(x,y)` over couplings `f` of `mu`
//! and `nu`. The solver is successive shortest paths with Dijkstra and
//! node potentials on the bipartite support graph. Curvature uses hop
//! metrics, so all arc costs are small integers; reduced costs then stay
//! exactly integral in `f64` and the LP optimum is exact up to mass
//! round-off.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::measure::Measure;

const MASS_TOL: f64 = 1e-12;
const MASS_EPS: f64 = 1e-15;

/// A validated optimal-transport instance: two measures of equal total
/// mass and a metric cost matrix.
#[derive(Debug, Clone)]
pub struct TransportProblem {
    mu: Measure,
    nu: Measure,
    cost: DMatrix<f64>,
}

impl TransportProblem {
    /// Validates dimensions, mass balance, and that `cost` is a metric:
    /// nonnegative, zero diagonal, symmetric, triangle inequality.
    pub fn new(mu: Measure, nu: Measure, cost: DMatrix<f64>) -> Result<Self> {
        let m = mu.len();
        if nu.len() != m {
            return Err(Error::Dimension {
                expected: m,
                got: nu.len(),
            });
        }
        if cost.nrows() != m || cost.ncols() != m {
            return Err(Error::Dimension {
                expected: m,
                got: cost.nrows(),
            });
        }
        let mass_gap = (mu.weights().iter().sum::<f64>() - nu.weights().iter().sum::<f64>()).abs();
        if mass_gap > MASS_TOL {
            return Err(Error::Infeasible(mass_gap));
        }
        for x in 0..m {
            if cost[(x, x)] != 0.0 {
                return Err(Error::Domain(format!(
                    "cost diagonal must be zero, got {} at {}",
                    cost[(x, x)],
                    x + 1
                )));
            }
            for y in 0..m {
                if !(cost[(x, y)] >= 0.0) {
                    return Err(Error::Domain(format!(
                        "cost({},{}) is negative",
                        x + 1,
                        y + 1
                    )));
                }
                if (cost[(x, y)] - cost[(y, x)]).abs() > 1e-12 {
                    return Err(Error::Domain(format!(
                        "cost must be symmetric, differs at ({},{})",
                        x + 1,
                        y + 1
                    )));
                }
            }
        }
        for x in 0..m {
            for y in 0..m {
                for z in 0..m {
                    if cost[(x, y)] > cost[(x, z)] + cost[(z, y)] + 1e-12 {
                        return Err(Error::Domain(format!(
                            "triangle inequality fails at ({},{},{})",
                            x + 1,
                            y + 1,
                            z + 1
                        )));
                    }
                }
            }
        }
        Ok(TransportProblem { mu, nu, cost })
    }

    pub fn mu(&self) -> &Measure {
        &self.mu
    }

    pub fn nu(&self) -> &Measure {
        &self.nu
    }
}

#[derive(Copy, Clone, PartialEq)]
struct HeapEntry {
    dist: f64,
    node: usize,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // Min-heap on dist; ties broken by node for determinism.
        other
            .dist
            .partial_cmp(&self.dist)
            .unwrap_or(Ordering::Equal)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Exact optimal transport cost via successive shortest paths.
pub fn w1_distance(problem: &TransportProblem) -> Result<f64> {
    let sources: Vec<(usize, f64)> = problem
        .mu
        .weights()
        .iter()
        .enumerate()
        .filter(|(_, &w)| w > MASS_EPS)
        .map(|(i, &w)| (i, w))
        .collect();
    let sinks: Vec<(usize, f64)> = problem
        .nu
        .weights()
        .iter()
        .enumerate()
        .filter(|(_, &w)| w > MASS_EPS)
        .map(|(i, &w)| (i, w))
        .collect();
    min_cost_transport(&sources, &sinks, |i, j| {
        problem.cost[(sources[i].0, sinks[j].0)]
    })
}

/// Min-cost flow on the complete bipartite graph between `sources` and
/// `sinks`. `cost(i, j)` indexes into the support lists, not the
/// original state space.
fn min_cost_transport(
    sources: &[(usize, f64)],
    sinks: &[(usize, f64)],
    cost: impl Fn(usize, usize) -> f64,
) -> Result<f64> {
    let ns = sources.len();
    let nt = sinks.len();
    if ns == 0 || nt == 0 {
        return Ok(0.0);
    }
    let n_nodes = ns + nt;
    let mut remaining_supply: Vec<f64> = sources.iter().map(|&(_, w)| w).collect();
    let mut remaining_demand: Vec<f64> = sinks.iter().map(|&(_, w)| w).collect();
    let mut flow = vec![0.0f64; ns * nt];
    let mut potential = vec![0.0f64; n_nodes];

    // Node ids: sources are 0..ns, sinks are ns..ns+nt.
    let max_rounds = 64 * (ns + nt) * (ns + nt) + 256;
    for _round in 0..max_rounds {
        if remaining_demand.iter().sum::<f64>() <= MASS_TOL {
            break;
        }
        // Dijkstra over reduced costs from all sources with leftover supply.
        let mut dist = vec![f64::INFINITY; n_nodes];
        let mut parent = vec![usize::MAX; n_nodes];
        let mut heap = BinaryHeap::new();
        for i in 0..ns {
            if remaining_supply[i] > MASS_EPS {
                dist[i] = 0.0;
                heap.push(HeapEntry { dist: 0.0, node: i });
            }
        }
        let mut settled = vec![false; n_nodes];
        while let Some(HeapEntry { dist: d, node }) = heap.pop() {
            if settled[node] {
                continue;
            }
            settled[node] = true;
            if node < ns {
                let i = node;
                for j in 0..nt {
                    let t = ns + j;
                    let rc = cost(i, j) + potential[i] - potential[t];
                    debug_assert!(rc >= -1e-9, "negative reduced cost {rc}");
                    let nd = d + rc.max(0.0);
                    if nd < dist[t] {
                        dist[t] = nd;
                        parent[t] = i;
                        heap.push(HeapEntry { dist: nd, node: t });
                    }
                }
            } else {
                let j = node - ns;
                for i in 0..ns {
                    if flow[i * nt + j] > MASS_EPS {
                        let rc = -cost(i, j) + potential[node] - potential[i];
                        debug_assert!(rc >= -1e-9, "negative reduced cost {rc}");
                        let nd = d + rc.max(0.0);
                        if nd < dist[i] {
                            dist[i] = nd;
                            parent[i] = node;
                            heap.push(HeapEntry { dist: nd, node: i });
                        }
                    }
                }
            }
        }
        // Cheapest sink that still needs mass.
        let mut best: Option<usize> = None;
        for j in 0..nt {
            if remaining_demand[j] > MASS_EPS
                && dist[ns + j].is_finite()
                && best.is_none_or(|b| dist[ns + j] < dist[ns + b])
            {
                best = Some(j);
            }
        }
        let Some(jstar) = best else {
            return Err(Error::Infeasible(remaining_demand.iter().sum()));
        };
        let target = ns + jstar;
        // Bottleneck along the augmenting path: leftover demand at the
        // end, leftover supply at the root, and existing flow on every
        // backward (sink -> source) arc in between.
        let mut bottleneck = remaining_demand[jstar];
        let mut node = target;
        while parent[node] != usize::MAX {
            let prev = parent[node];
            if node < ns {
                bottleneck = bottleneck.min(flow[node * nt + (prev - ns)]);
            }
            node = prev;
        }
        bottleneck = bottleneck.min(remaining_supply[node]);
        // Apply the augmentation.
        let mut node = target;
        while parent[node] != usize::MAX {
            let prev = parent[node];
            if node >= ns {
                flow[prev * nt + (node - ns)] += bottleneck;
            } else {
                flow[node * nt + (prev - ns)] -= bottleneck;
            }
            node = prev;
        }
        remaining_supply[node] -= bottleneck;
        remaining_demand[jstar] -= bottleneck;
        // Standard potential update keeps reduced costs nonnegative.
        let dmax = dist[target];
        for v in 0..n_nodes {
            potential[v] += dist[v].min(dmax);
        }
    }
    if remaining_demand.iter().sum::<f64>() > MASS_TOL {
        return Err(Error::Convergence(
            "transport augmentation did not exhaust demand".into(),
        ));
    }
    let mut total = 0.0;
    for i in 0..ns {
        for j in 0..nt {
            total += flow[i * nt + j] * cost(i, j);
        }
    }
    Ok(total)
}

/// `W1` between two measures on the path `1 - 2 - ... - m`: the L1
/// distance between their cumulative distribution functions.
pub fn w1_path(mu: &Measure, nu: &Measure) -> Result<f64> {
    if mu.len() != nu.len() {
        return Err(Error::Dimension {
            expected: mu.len(),
            got: nu.len(),
        });
    }
    let mut acc = 0.0f64;
    let mut total = 0.0f64;
    for k in 0..mu.len() - 1 {
        acc += mu.weights()[k] - nu.weights()[k];
        total += acc.abs();
    }
    Ok(total)
}
