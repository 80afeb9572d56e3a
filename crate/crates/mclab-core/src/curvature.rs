//! Discrete curvature notions for reversible chains.
//!
//! Coarse (Ollivier) curvature of a kernel edge under the hop metric:
//! `kappa(x,y) = 1 - W1(p(x,.), p(y,.))`. For birth-death chains whose
//! states all hold with probability at least 1/2, the one-step kernels
//! are stochastically ordered along the path and the transport distance
//! collapses to a mean shift, giving the closed form
//! `kappa(k, k+1) = up(k) - down(k) - up(k+1) + down(k+1)`.
//!
//! Bakry-Emery curvature at a vertex `x` is the largest `K` with
//! `Gamma_2(f)(x) >= K Gamma(f)(x)` for every `f`, where
//! `Gamma_2(f) = 1/2 Delta Gamma(f,f) - Gamma(f, Delta f)`. Both forms
//! only see `f` on the 2-ball around `x`, so `K` is the smallest
//! generalized eigenvalue of the reduced quadratic form after
//! eliminating the distance-2 block (a Schur complement; that block is
//! positive definite diagonal).
//!
//! Two obstructions to curvature-based lower bounds are detected here:
//! failure of log-concavity of the stationary measure of a birth-death
//! chain, and failure of the monotone-rate condition (`up` non-increasing,
//! `down` non-decreasing) that would make all `W_infinity` sectional
//! distances collapse to 1.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chain::{BirthDeathChain, HeatSemigroup, MarkovChain};
use crate::error::{Error, Result};
use crate::functional::gamma_form;
use crate::measure::Measure;
use crate::transport::{w1_distance, TransportProblem};

/// How edge curvatures are computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CurvatureMethod {
    /// Exact optimal-transport LP on each support edge.
    Lp,
    /// Closed form for birth-death kernels; requires a tridiagonal
    /// kernel and is exact when every state holds with probability at
    /// least 1/2.
    ClosedFormBd,
}

/// Curvature of one support edge, states 1-based with `x < y`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EdgeCurvature {
    pub x: usize,
    pub y: usize,
    pub kappa: f64,
}

/// Edge curvatures of a chain, sorted by `(x, y)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CurvatureReport {
    pub method: CurvatureMethod,
    pub kappa_min: f64,
    pub edges: Vec<EdgeCurvature>,
}

/// Ollivier curvature of the support edge `(x, y)` via the transport LP.
pub fn ollivier_curvature(chain: &MarkovChain, x: usize, y: usize) -> Result<f64> {
    let m = chain.m();
    if x < 1 || x > m || y < 1 || y > m {
        return Err(Error::Index(format!("edge ({x},{y}) outside 1..={m}")));
    }
    if x == y || (chain.p(x, y) == 0.0 && chain.p(y, x) == 0.0) {
        return Err(Error::NotNeighbors(x, y));
    }
    let cost = DMatrix::from_fn(m, m, |a, b| chain.dist(a + 1, b + 1) as f64);
    edge_curvature_lp(chain, &cost, x, y)
}

fn edge_curvature_lp(chain: &MarkovChain, cost: &DMatrix<f64>, x: usize, y: usize) -> Result<f64> {
    let mu = Measure::from_weights(chain.kernel().row(x - 1).iter().cloned().collect())?;
    let nu = Measure::from_weights(chain.kernel().row(y - 1).iter().cloned().collect())?;
    let problem = TransportProblem::new(mu, nu, cost.clone())?;
    Ok(1.0 - w1_distance(&problem)?)
}

/// Closed-form Ollivier curvature of the edge `(k, k+1)` of a
/// birth-death chain, with the conventions `down(1) = up(m) = 0`.
/// Exact when states `k` and `k+1` hold with probability at least 1/2.
pub fn ollivier_curvature_bd(bd: &BirthDeathChain, k: usize) -> Result<f64> {
    if k < 1 || k >= bd.m() {
        return Err(Error::Index(format!(
            "edge ({}, {}) outside 1..={}",
            k,
            k + 1,
            bd.m() - 1
        )));
    }
    Ok(bd.up_rate(k) - bd.down_rate(k) - bd.up_rate(k + 1) + bd.down_rate(k + 1))
}

/// Closed-form curvature report over all edges of a birth-death chain.
pub fn min_ollivier_curvature_bd(bd: &BirthDeathChain) -> Result<CurvatureReport> {
    let edges: Vec<EdgeCurvature> = (1..bd.m())
        .map(|k| {
            Ok(EdgeCurvature {
                x: k,
                y: k + 1,
                kappa: ollivier_curvature_bd(bd, k)?,
            })
        })
        .collect::<Result<_>>()?;
    let kappa_min = edges
        .iter()
        .map(|e| e.kappa)
        .fold(f64::INFINITY, f64::min);
    Ok(CurvatureReport {
        method: CurvatureMethod::ClosedFormBd,
        kappa_min,
        edges,
    })
}

/// Curvature of every support edge. `Lp` runs the exact transport LP
/// per edge (parallelized); `ClosedFormBd` requires a tridiagonal
/// kernel. Edges are reported sorted by `(x, y)`.
pub fn min_ollivier_curvature(
    chain: &MarkovChain,
    method: CurvatureMethod,
) -> Result<CurvatureReport> {
    let support = chain.support_edges();
    let edges: Vec<EdgeCurvature> = match method {
        CurvatureMethod::Lp => {
            let m = chain.m();
            let cost = DMatrix::from_fn(m, m, |a, b| chain.dist(a + 1, b + 1) as f64);
            support
                .par_iter()
                .map(|&(x, y)| {
                    Ok(EdgeCurvature {
                        x,
                        y,
                        kappa: edge_curvature_lp(chain, &cost, x, y)?,
                    })
                })
                .collect::<Result<_>>()?
        }
        CurvatureMethod::ClosedFormBd => {
            let rates = tridiagonal_rates(chain).ok_or(Error::MethodMismatch)?;
            let bd = BirthDeathChain::new(rates.0, rates.1)?;
            return min_ollivier_curvature_bd(&bd);
        }
    };
    let kappa_min = edges
        .iter()
        .map(|e| e.kappa)
        .fold(f64::INFINITY, f64::min);
    Ok(CurvatureReport {
        method,
        kappa_min,
        edges,
    })
}

/// Extracts `(up, down)` rates when the kernel is tridiagonal.
fn tridiagonal_rates(chain: &MarkovChain) -> Option<(Vec<f64>, Vec<f64>)> {
    let m = chain.m();
    for x in 1..=m {
        for y in 1..=m {
            if chain.p(x, y) > 0.0 && x.abs_diff(y) > 1 {
                return None;
            }
        }
    }
    let up = (1..m).map(|k| chain.p(k, k + 1)).collect();
    let down = (2..=m).map(|k| chain.p(k, k - 1)).collect();
    Some((up, down))
}

/// Best Lipschitz constant of `f` for the hop metric.
pub fn lipschitz_constant(chain: &MarkovChain, f: &[f64]) -> Result<f64> {
    let m = chain.m();
    if f.len() != m {
        return Err(Error::Dimension {
            expected: m,
            got: f.len(),
        });
    }
    let mut lip = 0.0f64;
    for x in 1..=m {
        for y in (x + 1)..=m {
            let d = chain.dist(x, y) as f64;
            if d > 0.0 {
                lip = lip.max((f[x - 1] - f[y - 1]).abs() / d);
            }
        }
    }
    Ok(lip)
}

/// One contraction-test failure: at time `t`, trial function `trial`
/// had `Lip(P_t f) / (e^{-kt} Lip(f))` equal to `ratio > 1`.
#[derive(Debug, Clone, Serialize)]
pub struct ContractionViolation {
    pub t: f64,
    pub trial: usize,
    pub ratio: f64,
}

/// Outcome of [`check_semigroup_contraction`].
#[derive(Debug, Clone, Serialize)]
pub struct ContractionReport {
    pub k: f64,
    pub t_values: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    /// Largest observed `Lip(P_t f) / (e^{-kt} Lip(f))`.
    pub worst_ratio: f64,
    pub violations: Vec<ContractionViolation>,
    /// Set when some state holds with probability below 1/2; the
    /// curvature-based contraction rate is only guaranteed for lazy
    /// chains.
    pub laziness_warning: bool,
}

const CONTRACTION_SLACK: f64 = 1e-8;

/// Tests the gradient-contraction estimate `Lip(P_t f) <= e^{-kt} Lip(f)`
/// on random functions with i.i.d. uniform coordinates in `[-1, 1]`.
/// A trial at time `t` is a violation when the ratio exceeds
/// `1 + 1e-8`.
pub fn check_semigroup_contraction(
    chain: &MarkovChain,
    k: f64,
    t_values: &[f64],
    trials: usize,
    seed: u64,
) -> Result<ContractionReport> {
    use rand::prelude::*;
    let semigroup = HeatSemigroup::new(chain)?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    let mut violations = Vec::new();
    for trial in 0..trials {
        let f: Vec<f64> = (0..chain.m())
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        let lip_f = lipschitz_constant(chain, &f)?;
        if lip_f < 1e-12 {
            continue;
        }
        for &t in t_values {
            let ft = semigroup.apply(t, &f)?;
            let lip_ft = lipschitz_constant(chain, &ft)?;
            let ratio = lip_ft / ((-k * t).exp() * lip_f);
            worst = worst.max(ratio);
            if ratio > 1.0 + CONTRACTION_SLACK {
                violations.push(ContractionViolation { t, trial, ratio });
            }
        }
    }
    Ok(ContractionReport {
        k,
        t_values: t_values.to_vec(),
        trials,
        seed,
        worst_ratio: worst,
        violations,
        laziness_warning: !chain.is_lazy(),
    })
}

/// `Gamma_2(f)` as a vector over states:
/// `Gamma_2(f) = 1/2 Delta Gamma(f,f) - Gamma(f, Delta f)`.
pub fn gamma2_form(chain: &MarkovChain, f: &[f64]) -> Result<Vec<f64>> {
    let gamma = gamma_form(chain, f, f)?;
    let d_gamma = chain.laplacian_apply(&gamma)?;
    let df = chain.laplacian_apply(f)?;
    let cross = gamma_form(chain, f, &df)?;
    Ok((0..chain.m())
        .map(|x| 0.5 * d_gamma[x] - cross[x])
        .collect())
}

/// Bakry-Emery curvature at state `x` (1-based): the largest `K` with
/// `Gamma_2(f)(x) >= K Gamma(f)(x)` for all `f`.
pub fn bakry_emery_curvature(chain: &MarkovChain, x: usize) -> Result<f64> {
    let m = chain.m();
    if x < 1 || x > m {
        return Err(Error::Index(format!("state {x} outside 1..={m}")));
    }
    let x0 = x - 1;
    let p = chain.kernel();
    // S1: neighbors of x; S2: exact distance-2 states.
    let s1: Vec<usize> = (0..m).filter(|&y| y != x0 && p[(x0, y)] > 0.0).collect();
    if s1.is_empty() {
        return Err(Error::Disconnected(x));
    }
    let mut in_ball1 = vec![false; m];
    in_ball1[x0] = true;
    for &y in &s1 {
        in_ball1[y] = true;
    }
    let mut s2: Vec<usize> = Vec::new();
    let mut seen = vec![false; m];
    for &y in &s1 {
        for z in 0..m {
            if p[(y, z)] > 0.0 && !in_ball1[z] && !seen[z] {
                seen[z] = true;
                s2.push(z);
            }
        }
    }
    s2.sort_unstable();
    let vars: Vec<usize> = s1.iter().chain(s2.iter()).copied().collect();
    let n1 = s1.len();
    let nv = vars.len();

    // Quadratic form Q(f) = Gamma_2(f)(x) over f with f(x) = 0, built by
    // polarization on the basis of the 2-ball coordinates.
    let q_at = |f: &[f64]| -> f64 { gamma2_local(chain, f, x0) };
    let mut basis_vals = vec![0.0f64; nv];
    let mut h = DMatrix::zeros(nv, nv);
    let mut e = vec![0.0f64; m];
    for a in 0..nv {
        e[vars[a]] = 1.0;
        basis_vals[a] = q_at(&e);
        e[vars[a]] = 0.0;
    }
    let mut pair = vec![0.0f64; m];
    for a in 0..nv {
        h[(a, a)] = basis_vals[a];
        for b in (a + 1)..nv {
            pair[vars[a]] = 1.0;
            pair[vars[b]] = 1.0;
            let qab = q_at(&pair);
            pair[vars[a]] = 0.0;
            pair[vars[b]] = 0.0;
            let v = 0.5 * (qab - basis_vals[a] - basis_vals[b]);
            h[(a, b)] = v;
            h[(b, a)] = v;
        }
    }
    // Gamma(f)(x) = 1/2 sum_{y in S1} p(x,y) f(y)^2: diagonal on S1.
    let g_diag: Vec<f64> = s1.iter().map(|&y| 0.5 * p[(x0, y)]).collect();

    // Schur complement eliminating the distance-2 block, which is
    // positive definite (diagonal entries (P^2)(x,z)/4 > 0).
    let h11 = h.view((0, 0), (n1, n1)).into_owned();
    let reduced = if nv > n1 {
        let h12 = h.view((0, n1), (n1, nv - n1)).into_owned();
        let h22 = h.view((n1, n1), (nv - n1, nv - n1)).into_owned();
        let h21 = h12.transpose();
        let solved = h22
            .lu()
            .solve(&h21)
            .ok_or_else(|| Error::SingularSystem("distance-2 block of Gamma_2".into()))?;
        h11 - h12 * solved
    } else {
        h11
    };
    // Smallest eigenvalue of G^{-1/2} reduced G^{-1/2}.
    let mut w = reduced;
    for a in 0..n1 {
        for b in 0..n1 {
            w[(a, b)] /= (g_diag[a] * g_diag[b]).sqrt();
        }
    }
    let w = (w.transpose() + &w) * 0.5;
    let eigen = nalgebra::SymmetricEigen::try_new(w, 1e-13, 10_000)
        .ok_or_else(|| Error::Eigen("reduced curvature form did not converge".into()))?;
    Ok(eigen
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min))
}

/// `Gamma_2(f)(x0)` (0-based) touching only the 2-ball around `x0`.
fn gamma2_local(chain: &MarkovChain, f: &[f64], x0: usize) -> f64 {
    let m = chain.m();
    let p = chain.kernel();
    let gamma_at = |y: usize| -> f64 {
        let mut acc = 0.0;
        for z in 0..m {
            let w = p[(y, z)];
            if w > 0.0 {
                let d = f[z] - f[y];
                acc += w * d * d;
            }
        }
        0.5 * acc
    };
    let lap_at = |y: usize| -> f64 {
        let mut acc = 0.0;
        for z in 0..m {
            let w = p[(y, z)];
            if w > 0.0 {
                acc += w * (f[z] - f[y]);
            }
        }
        acc
    };
    let gamma_x = gamma_at(x0);
    let lap_x = lap_at(x0);
    let mut d_gamma = 0.0;
    let mut cross = 0.0;
    for y in 0..m {
        let w = p[(x0, y)];
        if w > 0.0 {
            d_gamma += w * (gamma_at(y) - gamma_x);
            cross += w * (f[y] - f[x0]) * (lap_at(y) - lap_x);
        }
    }
    0.5 * d_gamma - 0.5 * cross
}

/// Log-concavity of a positive measure on the path: checks
/// `pi(k)^2 >= pi(k-1) pi(k+1)` at every interior state.
#[derive(Debug, Clone, Serialize)]
pub struct LogConcavityReport {
    pub log_concave: bool,
    /// Smallest interior state `k` (1-based) with
    /// `pi(k)^2 < pi(k-1) pi(k+1)`, if any.
    pub first_violation: Option<usize>,
}

/// Checks log-concavity of the stationary measure of a birth-death
/// chain. Uses exact rational arithmetic when the chain carries exact
/// rates, otherwise log-space weights; the comparison has no slack.
pub fn check_log_concavity(bd: &BirthDeathChain) -> LogConcavityReport {
    if let Some(ex) = bd.exact() {
        let pi = ex.stationary();
        for k in 1..(bd.m() - 1) {
            // pi[k]^2 < pi[k-1] pi[k+1] at 0-based k means a violation
            // at 1-based state k+1.
            if pi[k].clone() * pi[k].clone() < pi[k - 1].clone() * pi[k + 1].clone() {
                return LogConcavityReport {
                    log_concave: false,
                    first_violation: Some(k + 1),
                };
            }
        }
        return LogConcavityReport {
            log_concave: true,
            first_violation: None,
        };
    }
    let lw = bd.stationary_log();
    log_concavity_of_log_weights(&lw)
}

/// Log-concavity check on raw log-weights.
pub fn log_concavity_of_log_weights(lw: &[f64]) -> LogConcavityReport {
    for k in 1..lw.len().saturating_sub(1) {
        if 2.0 * lw[k] < lw[k - 1] + lw[k + 1] {
            return LogConcavityReport {
                log_concave: false,
                first_violation: Some(k + 1),
            };
        }
    }
    LogConcavityReport {
        log_concave: true,
        first_violation: None,
    }
}

/// Whether `up` is non-increasing and `down` is non-decreasing; the
/// pair of monotonicity conditions that forces every one-step sectional
/// distance `W_infinity(p(k,.), p(k+1,.))` of a lazy birth-death chain
/// to collapse to 1. Exact comparisons when exact rates are present.
pub fn bd_monotone_rates(bd: &BirthDeathChain) -> (bool, bool) {
    if let Some(ex) = bd.exact() {
        let m = bd.m();
        let up_ok = (1..m - 1).all(|k| ex.up(k) >= ex.up(k + 1));
        let down_ok = (2..m).all(|k| ex.down(k) <= ex.down(k + 1));
        (up_ok, down_ok)
    } else {
        let up = bd.up_rates();
        let down = bd.down_rates();
        let up_ok = up.windows(2).all(|w| w[0] >= w[1]);
        let down_ok = down.windows(2).all(|w| w[0] <= w[1]);
        (up_ok, down_ok)
    }
}

/// Per-edge `W_infinity` value from [`check_nonnegative_sectional`].
#[derive(Debug, Clone, Serialize)]
pub struct EdgeWinf {
    pub x: usize,
    pub y: usize,
    pub w_inf: f64,
}

/// Outcome of the sectional-curvature check.
#[derive(Debug, Clone, Serialize)]
pub struct SectionalReport {
    /// True when `W_infinity(p(x,.), p(y,.)) <= 1` on every support
    /// edge; by the triangle inequality for `W_infinity` this extends
    /// to `W_infinity <= d(x,y)` for all pairs.
    pub nonnegative: bool,
    /// First edge (sorted by `(x, y)`) whose sectional distance
    /// exceeds 1, with the offending value.
    pub witness: Option<EdgeWinf>,
    pub edges: Vec<EdgeWinf>,
}

/// `W_infinity` between the one-step distributions of two states: the
/// smallest `theta` such that mass can be matched moving no single
/// grain farther than `theta`. Computed by binary search over realized
/// distances with a max-flow feasibility test.
pub fn w_infinity_distance(chain: &MarkovChain, x: usize, y: usize) -> Result<f64> {
    let m = chain.m();
    if x < 1 || x > m || y < 1 || y > m {
        return Err(Error::Index(format!("pair ({x},{y}) outside 1..={m}")));
    }
    let mu: Vec<(usize, f64)> = (0..m)
        .filter(|&a| chain.p(x, a + 1) > 0.0)
        .map(|a| (a, chain.p(x, a + 1)))
        .collect();
    let nu: Vec<(usize, f64)> = (0..m)
        .filter(|&b| chain.p(y, b + 1) > 0.0)
        .map(|b| (b, chain.p(y, b + 1)))
        .collect();
    let mut thresholds: Vec<u32> = mu
        .iter()
        .flat_map(|&(a, _)| nu.iter().map(move |&(b, _)| chain.dist(a + 1, b + 1)))
        .collect();
    thresholds.sort_unstable();
    thresholds.dedup();
    let feasible = |theta: u32| -> bool {
        max_flow_matchable(&mu, &nu, |a, b| chain.dist(a + 1, b + 1) <= theta)
    };
    // Binary search the smallest feasible threshold; the largest is
    // always feasible (complete bipartite graph).
    let mut lo = 0usize;
    let mut hi = thresholds.len() - 1;
    if feasible(thresholds[0]) {
        return Ok(thresholds[0] as f64);
    }
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if feasible(thresholds[mid]) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(thresholds[hi] as f64)
}

/// Checks `W_infinity <= 1` on every support edge, in parallel.
pub fn check_nonnegative_sectional(chain: &MarkovChain) -> Result<SectionalReport> {
    let edges: Vec<EdgeWinf> = chain
        .support_edges()
        .par_iter()
        .map(|&(x, y)| {
            Ok(EdgeWinf {
                x,
                y,
                w_inf: w_infinity_distance(chain, x, y)?,
            })
        })
        .collect::<Result<_>>()?;
    let witness = edges.iter().find(|e| e.w_inf > 1.0).cloned();
    Ok(SectionalReport {
        nonnegative: witness.is_none(),
        witness,
        edges,
    })
}

const FLOW_EPS: f64 = 1e-12;

/// Whether all of `mu` can be routed to `nu` using only allowed arcs:
/// max-flow (Dinic) on the bipartite graph must carry the full mass.
fn max_flow_matchable(
    mu: &[(usize, f64)],
    nu: &[(usize, f64)],
    allowed: impl Fn(usize, usize) -> bool,
) -> bool {
    let ns = mu.len();
    let nt = nu.len();
    // Nodes: 0 = source, 1..=ns supplies, ns+1..=ns+nt demands, last = sink.
    let n_nodes = ns + nt + 2;
    let sink = n_nodes - 1;
    let mut graph: Vec<Vec<(usize, usize, f64)>> = vec![Vec::new(); n_nodes];
    let add_edge = |graph: &mut Vec<Vec<(usize, usize, f64)>>, u: usize, v: usize, cap: f64| {
        let ru = graph[v].len();
        let rv = graph[u].len();
        graph[u].push((v, ru, cap));
        graph[v].push((u, rv, 0.0));
    };
    let mut total = 0.0;
    for (i, &(_, w)) in mu.iter().enumerate() {
        add_edge(&mut graph, 0, 1 + i, w);
        total += w;
    }
    for (j, &(_, w)) in nu.iter().enumerate() {
        add_edge(&mut graph, 1 + ns + j, sink, w);
    }
    for (i, &(a, _)) in mu.iter().enumerate() {
        for (j, &(b, _)) in nu.iter().enumerate() {
            if allowed(a, b) {
                add_edge(&mut graph, 1 + i, 1 + ns + j, 2.0);
            }
        }
    }
    let mut flow = 0.0;
    loop {
        // BFS levels on the residual graph.
        let mut level = vec![usize::MAX; n_nodes];
        level[0] = 0;
        let mut queue = std::collections::VecDeque::from([0usize]);
        while let Some(u) = queue.pop_front() {
            for &(v, _, cap) in &graph[u] {
                if cap > FLOW_EPS && level[v] == usize::MAX {
                    level[v] = level[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        if level[sink] == usize::MAX {
            break;
        }
        let mut iters = vec![0usize; n_nodes];
        loop {
            let pushed = dinic_dfs(&mut graph, &level, &mut iters, 0, sink, f64::INFINITY);
            if pushed <= FLOW_EPS {
                break;
            }
            flow += pushed;
        }
    }
    flow >= total - 1e-9
}

fn dinic_dfs(
    graph: &mut Vec<Vec<(usize, usize, f64)>>,
    level: &[usize],
    iters: &mut [usize],
    u: usize,
    sink: usize,
    limit: f64,
) -> f64 {
    if u == sink {
        return limit;
    }
    while iters[u] < graph[u].len() {
        let (v, rev, cap) = graph[u][iters[u]];
        if cap > FLOW_EPS && level[v] == level[u] + 1 {
            let pushed = dinic_dfs(graph, level, iters, v, sink, limit.min(cap));
            if pushed > FLOW_EPS {
                graph[u][iters[u]].2 -= pushed;
                graph[v][rev].2 += pushed;
                return pushed;
            }
        }
        iters[u] += 1;
    }
    0.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{counterexample_chain, NumericMode};
    use crate::rational::rat;
    use approx::assert_relative_eq;

    fn lazy_two_point() -> MarkovChain {
        BirthDeathChain::new(vec![0.25], vec![0.25]).unwrap().to_chain().unwrap()
    }

    #[test]
    fn two_point_edge_curvature() {
        // mu = (3/4, 1/4), nu = (1/4, 3/4): W1 = 1/2, kappa = 1/2.
        let c = lazy_two_point();
        assert_relative_eq!(
            ollivier_curvature(&c, 1, 2).unwrap(),
            0.5,
            epsilon = 1e-12
        );
        // Same through the closed form: up(1) - 0 - 0 + down(2).
        let bd = BirthDeathChain::new(vec![0.25], vec![0.25]).unwrap();
        assert_relative_eq!(ollivier_curvature_bd(&bd, 1).unwrap(), 0.5);
    }

    #[test]
    fn non_neighbors_are_rejected() {
        let bd = BirthDeathChain::new(vec![0.25, 0.25], vec![0.25, 0.25]).unwrap();
        let c = bd.to_chain().unwrap();
        assert!(matches!(
            ollivier_curvature(&c, 1, 3),
            Err(Error::NotNeighbors(1, 3))
        ));
        assert!(matches!(
            ollivier_curvature(&c, 2, 2),
            Err(Error::NotNeighbors(2, 2))
        ));
    }

    #[test]
    fn family_edge_5_6_has_curvature_one_64th() {
        // At n = 4 the interior closed form gives 1/(4 n^2) = 1/64, and
        // the LP on the expanded kernel must agree exactly.
        let bd = counterexample_chain(4, NumericMode::ExactRational).unwrap();
        let ex = bd.exact().unwrap();
        assert_eq!(ex.kappa(5).unwrap(), rat(1, 64));
        let c = bd.to_chain().unwrap();
        let lp = ollivier_curvature(&c, 5, 6).unwrap();
        assert_relative_eq!(lp, 1.0 / 64.0, epsilon = 1e-13);
    }

    #[test]
    fn family_curvature_profile_n4() {
        let bd = counterexample_chain(4, NumericMode::ExactRational).unwrap();
        let ex = bd.exact().unwrap();
        // Interior edges: 1/(4n^2).
        for k in 2..=10 {
            assert_eq!(ex.kappa(k).unwrap(), rat(1, 64), "edge ({k},{})", k + 1);
        }
        // Boundary edges: 1/n + 3/n^2 over 4, and 1 - 4/n + 1/n^2 over 4.
        assert_eq!(ex.kappa(1).unwrap(), rat(7, 64));
        assert_eq!(ex.kappa(11).unwrap(), rat(1, 64));
        assert_eq!(ex.kappa_min(), rat(1, 64));
    }

    #[test]
    fn family_minimum_curvature_matches_lp_at_n8() {
        let bd = counterexample_chain(8, NumericMode::ExactRational).unwrap();
        assert_eq!(bd.exact().unwrap().kappa_min(), rat(1, 256));
        let c = bd.to_chain().unwrap();
        let report = min_ollivier_curvature(&c, CurvatureMethod::Lp).unwrap();
        assert_relative_eq!(report.kappa_min, 1.0 / 256.0, epsilon = 1e-12);
        assert_eq!(report.edges.len(), 23);
        // Edges arrive sorted.
        for w in report.edges.windows(2) {
            assert!((w[0].x, w[0].y) < (w[1].x, w[1].y));
        }
        // And the closed-form method agrees edge by edge.
        let cf = min_ollivier_curvature(&c, CurvatureMethod::ClosedFormBd).unwrap();
        for (a, b) in report.edges.iter().zip(cf.edges.iter()) {
            assert_eq!((a.x, a.y), (b.x, b.y));
            assert_relative_eq!(a.kappa, b.kappa, epsilon = 1e-12);
        }
    }

    #[test]
    fn closed_form_method_rejects_non_tridiagonal() {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let c = crate::generators::random_reversible_chain(&mut rng, 5, true).unwrap();
        // A random weighted-graph chain almost surely has chords.
        if tridiagonal_rates(&c).is_none() {
            assert!(matches!(
                min_ollivier_curvature(&c, CurvatureMethod::ClosedFormBd),
                Err(Error::MethodMismatch)
            ));
        }
    }

    #[test]
    fn lp_matches_closed_form_on_random_lazy_bd() {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(19);
        for _ in 0..10 {
            let m = rng.random_range(2..=12);
            let bd = crate::generators::random_birth_death(&mut rng, m, true).unwrap();
            let c = bd.to_chain().unwrap();
            for k in 1..m {
                let lp = ollivier_curvature(&c, k, k + 1).unwrap();
                let cf = ollivier_curvature_bd(&bd, k).unwrap();
                assert_relative_eq!(lp, cf, epsilon = 1e-11, max_relative = 1e-11);
            }
        }
    }

    #[test]
    fn lipschitz_of_position_function() {
        let bd = BirthDeathChain::new(vec![0.25; 4], vec![0.25; 4]).unwrap();
        let c = bd.to_chain().unwrap();
        let f: Vec<f64> = (0..5).map(|k| k as f64).collect();
        assert_relative_eq!(lipschitz_constant(&c, &f).unwrap(), 1.0);
        assert_eq!(lipschitz_constant(&c, &[2.0; 5]).unwrap(), 0.0);
        let g = vec![0.0, 3.0, 3.0, 3.0, 3.0];
        assert_relative_eq!(lipschitz_constant(&c, &g).unwrap(), 3.0);
    }

    #[test]
    fn contraction_holds_at_the_curvature_rate() {
        let bd = counterexample_chain(4, NumericMode::Float64LogSpace).unwrap();
        let c = bd.to_chain().unwrap();
        let report =
            check_semigroup_contraction(&c, 1.0 / 64.0, &[1.0, 10.0], 20, 12345).unwrap();
        assert!(
            report.violations.is_empty(),
            "worst ratio {}",
            report.worst_ratio
        );
        assert!(!report.laziness_warning);
        assert!(report.worst_ratio <= 1.0 + 1e-8);
    }

    #[test]
    fn contraction_report_flags_non_lazy_chains() {
        let bd = BirthDeathChain::new(vec![0.9], vec![0.9]).unwrap();
        let c = bd.to_chain().unwrap();
        let report = check_semigroup_contraction(&c, 0.1, &[1.0], 5, 1).unwrap();
        assert!(report.laziness_warning);
    }

    #[test]
    fn bakry_emery_on_symmetric_two_point() {
        let c = BirthDeathChain::new(vec![0.5], vec![0.5]).unwrap().to_chain().unwrap();
        // Hand computation: Gamma_2(f)(1) = t^2/4 = Gamma(f)(1) for
        // f = (0, t), so K = 1.
        assert_relative_eq!(bakry_emery_curvature(&c, 1).unwrap(), 1.0, epsilon = 1e-10);
        assert_relative_eq!(bakry_emery_curvature(&c, 2).unwrap(), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn bakry_emery_lower_bounds_random_ratios() {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(101);
        for _ in 0..5 {
            let c = crate::generators::random_reversible_chain(&mut rng, 6, true).unwrap();
            for x in 1..=6 {
                let k = bakry_emery_curvature(&c, x).unwrap();
                for _ in 0..2000 {
                    let f: Vec<f64> = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
                    let gamma = gamma_form(&c, &f, &f).unwrap()[x - 1];
                    if gamma < 1e-12 {
                        continue;
                    }
                    let g2 = gamma2_form(&c, &f).unwrap()[x - 1];
                    assert!(
                        g2 >= k * gamma - 1e-9,
                        "Gamma_2 = {g2} < K Gamma = {} at state {x}",
                        k * gamma
                    );
                }
            }
        }
    }

    #[test]
    fn gamma2_local_matches_dense_form() {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(57);
        let c = crate::generators::random_reversible_chain(&mut rng, 7, false).unwrap();
        let f: Vec<f64> = (0..7).map(|_| rng.random_range(-2.0..2.0)).collect();
        let dense = gamma2_form(&c, &f).unwrap();
        for (x, &expected) in dense.iter().enumerate() {
            assert_relative_eq!(
                gamma2_local(&c, &f, x),
                expected,
                epsilon = 1e-12,
                max_relative = 1e-10
            );
        }
    }

    #[test]
    fn log_concavity_of_simple_measures() {
        // Geometric stationary measure: up = a, down = b constant gives
        // pi(k) proportional to (a/b)^k, exactly log-linear.
        let bd = BirthDeathChain::new(vec![0.2; 5], vec![0.3; 5]).unwrap();
        let report = check_log_concavity(&bd);
        assert!(report.log_concave);
        assert_eq!(report.first_violation, None);
    }

    #[test]
    fn family_log_concavity_breaks_right_after_the_well() {
        let bd = counterexample_chain(8, NumericMode::ExactRational).unwrap();
        let report = check_log_concavity(&bd);
        assert!(!report.log_concave);
        assert_eq!(
            report.first_violation,
            Some(9),
            "the mass ratio collapses from n^2 to about 1 between the well and the shelf"
        );
        // The log-space float path agrees.
        let bd_f = counterexample_chain(8, NumericMode::Float64LogSpace).unwrap();
        let report_f = check_log_concavity(&bd_f);
        assert!(!report_f.log_concave);
        assert_eq!(report_f.first_violation, Some(9));
    }

    #[test]
    fn family_up_rates_are_not_monotone() {
        let bd = counterexample_chain(8, NumericMode::ExactRational).unwrap();
        let (up_ok, down_ok) = bd_monotone_rates(&bd);
        assert!(!up_ok, "up jumps from 1/(4n^2) to roughly 1/4 at the well edge");
        assert!(down_ok);
    }

    #[test]
    fn monotone_rates_hold_for_constant_chains() {
        let bd = BirthDeathChain::new(vec![0.25; 6], vec![0.25; 6]).unwrap();
        assert_eq!(bd_monotone_rates(&bd), (true, true));
    }

    #[test]
    fn w_infinity_on_two_point_chains() {
        // Lazy: both rows overlap heavily, every grain moves at most 1.
        let c = lazy_two_point();
        assert_relative_eq!(w_infinity_distance(&c, 1, 2).unwrap(), 1.0);
        let report = check_nonnegative_sectional(&c).unwrap();
        assert!(report.nonnegative);
        assert!(report.witness.is_none());
        assert_eq!(report.edges.len(), 1);
    }

    #[test]
    fn w_infinity_zero_for_equal_rows() {
        // Random walk where two states have identical rows is impossible
        // on a path, but x compared with itself gives 0.
        let c = lazy_two_point();
        assert_relative_eq!(w_infinity_distance(&c, 1, 1).unwrap(), 0.0);
    }

    #[test]
    fn sectional_check_on_monotone_bd_collapses_to_one() {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(77);
        // Monotone rates: up non-increasing, down non-decreasing, lazy.
        let m = 7;
        let mut up: Vec<f64> = (0..m - 1).map(|_| rng.random_range(0.05..0.25)).collect();
        up.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let mut down: Vec<f64> = (0..m - 1).map(|_| rng.random_range(0.05..0.25)).collect();
        down.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let bd = BirthDeathChain::new(up, down).unwrap();
        assert_eq!(bd_monotone_rates(&bd), (true, true));
        let c = bd.to_chain().unwrap();
        let report = check_nonnegative_sectional(&c).unwrap();
        assert!(report.nonnegative);
        for e in &report.edges {
            assert_relative_eq!(e.w_inf, 1.0);
        }
    }

    #[test]
    fn report_serializes_to_the_expected_shape() {
        let bd = counterexample_chain(4, NumericMode::Float64LogSpace).unwrap();
        let report = min_ollivier_curvature_bd(&bd).unwrap();
        let json = serde_json::to_value(&report).unwrap();
        assert_eq!(json["method"], "closed-form-bd");
        assert!(json["kappa_min"].is_f64());
        assert_eq!(json["edges"][0]["x"], 1);
        assert_eq!(json["edges"][0]["y"], 2);
        assert!(json["edges"][0]["kappa"].is_f64());
        let back: CurvatureReport = serde_json::from_value(json).unwrap();
        assert_eq!(back.edges.len(), report.edges.len());
    }
}
