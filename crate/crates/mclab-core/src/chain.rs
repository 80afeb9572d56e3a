//! Finite reversible Markov chains: general dense kernels, birth-death
//! kernels, and the lazy birth-death family used as the main
//! counterexample.
//!
//! A general chain stores its kernel `P`, the stationary distribution
//! `pi` (solved by least squares and verified against detailed balance),
//! and all-pairs hop distances on the support graph. A birth-death chain
//! stores its `up`/`down` rates, optionally in exact big-rational form,
//! and computes `pi` by telescoping the detailed-balance ratios in
//! log-space so chains with astronomically skewed masses stay finite.

use nalgebra::{DMatrix, DVector};
use num::rational::BigRational;
use num::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::measure::Measure;
use crate::rational::{ln_rat, rat, rat_to_f64};

/// Arithmetic used when a chain is constructed from rational data.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NumericMode {
    /// `f64` everywhere, with log-space accumulation for products and
    /// masses that would otherwise underflow.
    Float64LogSpace,
    /// Rates, stationary masses, curvatures, and serial capacities kept
    /// as exact `BigRational` values.
    ExactRational,
}

const ROW_SUM_TOL: f64 = 1e-9;
const REVERSIBILITY_TOL: f64 = 1e-9;

/// A finite Markov chain with a dense kernel, validated to be
/// irreducible and reversible.
#[derive(Debug, Clone)]
pub struct MarkovChain {
    m: usize,
    p: DMatrix<f64>,
    pi: Measure,
    dist: Vec<u32>,
}

impl MarkovChain {
    /// Validates a kernel and solves for its stationary distribution.
    ///
    /// Rejects kernels with negative entries, rows that do not sum to 1
    /// within 1e-9, a disconnected support graph, or a stationary
    /// distribution failing detailed balance within 1e-9 (relative to
    /// the largest flow `pi(x) p(x,y)`).
    pub fn new(kernel: DMatrix<f64>) -> Result<Self> {
        validate_kernel(&kernel)?;
        let pi = solve_stationary(&kernel)?;
        Self::with_stationary(kernel, pi)
    }

    /// Builds a chain from a kernel and an externally computed stationary
    /// distribution (used by the birth-death path, where `pi` comes from
    /// an exact telescoping product). Still validates everything.
    pub(crate) fn with_stationary(kernel: DMatrix<f64>, pi: Measure) -> Result<Self> {
        validate_kernel(&kernel)?;
        let m = kernel.nrows();
        if pi.len() != m {
            return Err(Error::Dimension {
                expected: m,
                got: pi.len(),
            });
        }
        check_detailed_balance(&kernel, &pi)?;
        let dist = bfs_all_pairs(&kernel)?;
        Ok(MarkovChain {
            m,
            p: kernel,
            pi,
            dist,
        })
    }

    /// Number of states.
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn kernel(&self) -> &DMatrix<f64> {
        &self.p
    }

    /// Transition probability `p(x,y)`, states 1-based.
    pub fn p(&self, x: usize, y: usize) -> f64 {
        self.p[(x - 1, y - 1)]
    }

    pub fn pi(&self) -> &Measure {
        &self.pi
    }

    /// Hop distance in the support graph, states 1-based.
    pub fn dist(&self, x: usize, y: usize) -> u32 {
        self.dist[(x - 1) * self.m + (y - 1)]
    }

    /// Largest hop distance between any two states.
    pub fn diameter(&self) -> u32 {
        self.dist.iter().copied().max().unwrap_or(0)
    }

    /// Support edges `(x, y)` with `x < y` and `p(x,y) > 0`, 1-based.
    pub fn support_edges(&self) -> Vec<(usize, usize)> {
        let mut edges = Vec::new();
        for x in 0..self.m {
            for y in (x + 1)..self.m {
                if self.p[(x, y)] > 0.0 {
                    edges.push((x + 1, y + 1));
                }
            }
        }
        edges
    }

    /// Sparsity `d = max { 1/p(x,y) : p(x,y) > 0 }`, self-loops included.
    pub fn sparsity(&self) -> f64 {
        let mut d = 0.0f64;
        for x in 0..self.m {
            for y in 0..self.m {
                let p = self.p[(x, y)];
                if p > 0.0 {
                    d = d.max(1.0 / p);
                }
            }
        }
        d
    }

    /// Smallest holding probability `min_x p(x,x)`.
    pub fn min_laziness(&self) -> f64 {
        (0..self.m)
            .map(|x| self.p[(x, x)])
            .fold(f64::INFINITY, f64::min)
    }

    /// Whether every state holds with probability at least 1/2.
    pub fn is_lazy(&self) -> bool {
        self.min_laziness() >= 0.5
    }

    /// Generator applied to a function: `(Delta f)(x) = sum_y p(x,y) (f(y) - f(x))`.
    pub fn laplacian_apply(&self, f: &[f64]) -> Result<Vec<f64>> {
        if f.len() != self.m {
            return Err(Error::Dimension {
                expected: self.m,
                got: f.len(),
            });
        }
        let v = DVector::from_column_slice(f);
        let pf = &self.p * &v;
        Ok((0..self.m).map(|x| pf[x] - f[x]).collect())
    }

    /// Largest detailed-balance residual relative to the largest flow.
    pub fn detailed_balance_residual(&self) -> f64 {
        detailed_balance_residual(&self.p, &self.pi).0
    }

    /// Symmetrized kernel `S(x,y) = sqrt(p(x,y) p(y,x))`, similar to `P`
    /// under detailed balance without forming stationary-mass ratios.
    pub(crate) fn symmetrized(&self) -> DMatrix<f64> {
        let m = self.m;
        let mut s = DMatrix::zeros(m, m);
        for x in 0..m {
            s[(x, x)] = self.p[(x, x)];
            for y in (x + 1)..m {
                let v = (self.p[(x, y)] * self.p[(y, x)]).sqrt();
                s[(x, y)] = v;
                s[(y, x)] = v;
            }
        }
        s
    }
}

fn validate_kernel(kernel: &DMatrix<f64>) -> Result<()> {
    let m = kernel.nrows();
    if m < 2 || kernel.ncols() != m {
        return Err(Error::Domain(format!(
            "kernel must be square with at least 2 states, got {}x{}",
            kernel.nrows(),
            kernel.ncols()
        )));
    }
    for x in 0..m {
        let mut sum = 0.0;
        for y in 0..m {
            let p = kernel[(x, y)];
            if !(p >= 0.0) {
                return Err(Error::NegativeEntry {
                    x: x + 1,
                    y: y + 1,
                    value: p,
                });
            }
            sum += p;
        }
        if (sum - 1.0).abs() > ROW_SUM_TOL {
            return Err(Error::RowSum { row: x + 1, sum });
        }
    }
    Ok(())
}

/// Least-squares solve of `pi P = pi`, `sum pi = 1`.
fn solve_stationary(kernel: &DMatrix<f64>) -> Result<Measure> {
    let m = kernel.nrows();
    let mut a = DMatrix::zeros(m + 1, m);
    for i in 0..m {
        for j in 0..m {
            // Row i of (P^T - I): sum_j (p(j,i) - delta_ij) pi(j) = 0.
            a[(i, j)] = kernel[(j, i)] - if i == j { 1.0 } else { 0.0 };
        }
    }
    for j in 0..m {
        a[(m, j)] = 1.0;
    }
    let mut b = DVector::zeros(m + 1);
    b[m] = 1.0;
    let svd = a.svd(true, true);
    let sol = svd
        .solve(&b, 1e-13)
        .map_err(|e| Error::SingularSystem(format!("stationary solve: {e}")))?;
    let weights: Vec<f64> = sol.iter().map(|&w| w.max(0.0)).collect();
    Measure::from_weights(weights)
}

fn detailed_balance_residual(kernel: &DMatrix<f64>, pi: &Measure) -> (f64, (usize, usize)) {
    let m = kernel.nrows();
    let mut max_flow = 0.0f64;
    for x in 0..m {
        for y in 0..m {
            max_flow = max_flow.max(pi.weights()[x] * kernel[(x, y)]);
        }
    }
    let mut worst = 0.0f64;
    let mut arg = (1, 1);
    for x in 0..m {
        for y in (x + 1)..m {
            let r = (pi.weights()[x] * kernel[(x, y)] - pi.weights()[y] * kernel[(y, x)]).abs();
            if r > worst {
                worst = r;
                arg = (x + 1, y + 1);
            }
        }
    }
    if max_flow > 0.0 {
        (worst / max_flow, arg)
    } else {
        (0.0, arg)
    }
}

fn check_detailed_balance(kernel: &DMatrix<f64>, pi: &Measure) -> Result<()> {
    let (residual, (x, y)) = detailed_balance_residual(kernel, pi);
    if residual > REVERSIBILITY_TOL {
        return Err(Error::NotReversible { x, y, residual });
    }
    Ok(())
}

/// All-pairs hop distances on the support graph; errors if some state is
/// unreachable from state 1.
fn bfs_all_pairs(kernel: &DMatrix<f64>) -> Result<Vec<u32>> {
    let m = kernel.nrows();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); m];
    for x in 0..m {
        for y in 0..m {
            if x != y && kernel[(x, y)] > 0.0 {
                adj[x].push(y);
            }
        }
    }
    let mut dist = vec![u32::MAX; m * m];
    for start in 0..m {
        let mut queue = std::collections::VecDeque::new();
        dist[start * m + start] = 0;
        queue.push_back(start);
        while let Some(x) = queue.pop_front() {
            let dx = dist[start * m + x];
            for &y in &adj[x] {
                if dist[start * m + y] == u32::MAX {
                    dist[start * m + y] = dx + 1;
                    queue.push_back(y);
                }
            }
        }
    }
    if let Some(y) = dist[..m].iter().position(|&d| d == u32::MAX) {
        return Err(Error::Disconnected(y + 1));
    }
    Ok(dist)
}

/// Spectral representation of the heat semigroup `P_t = exp(t (P - I))`.
///
/// Built from the symmetrized kernel, so a single eigendecomposition
/// serves every `t`. Requires all stationary masses to be representable
/// in linear `f64`.
#[derive(Debug, Clone)]
pub struct HeatSemigroup {
    m: usize,
    sqrt_pi: Vec<f64>,
    eigvecs: DMatrix<f64>,
    eigvals: Vec<f64>,
}

impl HeatSemigroup {
    pub fn new(chain: &MarkovChain) -> Result<Self> {
        let m = chain.m();
        let sqrt_pi: Vec<f64> = chain.pi().weights().iter().map(|w| w.sqrt()).collect();
        if sqrt_pi.iter().any(|&s| s <= 0.0) {
            return Err(Error::Domain(
                "heat semigroup needs all stationary masses representable in f64".into(),
            ));
        }
        let s = chain.symmetrized();
        let eigen = nalgebra::SymmetricEigen::try_new(s, 1e-13, 10_000)
            .ok_or_else(|| Error::Eigen("symmetrized kernel did not converge".into()))?;
        Ok(HeatSemigroup {
            m,
            sqrt_pi,
            eigvecs: eigen.eigenvectors,
            eigvals: eigen.eigenvalues.iter().copied().collect(),
        })
    }

    /// Applies `P_t` to `f`.
    pub fn apply(&self, t: f64, f: &[f64]) -> Result<Vec<f64>> {
        if f.len() != self.m {
            return Err(Error::Dimension {
                expected: self.m,
                got: f.len(),
            });
        }
        if !(t >= 0.0) {
            return Err(Error::Domain(format!("time must be nonnegative, got {t}")));
        }
        let v = DVector::from_iterator(self.m, f.iter().zip(&self.sqrt_pi).map(|(x, s)| x * s));
        let mut w = self.eigvecs.transpose() * v;
        for (i, lam) in self.eigvals.iter().enumerate() {
            w[i] *= (t * (lam - 1.0)).exp();
        }
        let u = &self.eigvecs * w;
        Ok((0..self.m).map(|x| u[x] / self.sqrt_pi[x]).collect())
    }
}

/// One-shot `P_t f`; build a [`HeatSemigroup`] directly to evaluate many
/// times.
pub fn heat_semigroup_apply(chain: &MarkovChain, t: f64, f: &[f64]) -> Result<Vec<f64>> {
    HeatSemigroup::new(chain)?.apply(t, f)
}

/// Exact rational rates of a birth-death chain.
///
/// Conventions throughout: `up(k) = p(k, k+1)` for `k = 1..m-1`,
/// `down(k) = p(k, k-1)` for `k = 2..m`, and `down(1) = up(m) = 0`.
#[derive(Debug, Clone)]
pub struct ExactRates {
    up: Vec<BigRational>,
    down: Vec<BigRational>,
}

impl ExactRates {
    pub fn m(&self) -> usize {
        self.up.len() + 1
    }

    /// `up(k)`, 1-based, zero at `k = 0` and `k = m`.
    pub fn up(&self, k: usize) -> BigRational {
        if k >= 1 && k <= self.up.len() {
            self.up[k - 1].clone()
        } else {
            BigRational::zero()
        }
    }

    /// `down(k)`, 1-based, zero at `k = 1` and `k = m + 1`.
    pub fn down(&self, k: usize) -> BigRational {
        if k >= 2 && k <= self.m() {
            self.down[k - 2].clone()
        } else {
            BigRational::zero()
        }
    }

    /// Holding probability `p(k,k) = 1 - up(k) - down(k)`.
    pub fn laziness(&self, k: usize) -> BigRational {
        BigRational::one() - self.up(k) - self.down(k)
    }

    /// Ollivier curvature of the edge `(k, k+1)` under the hop metric:
    /// `kappa = up(k) - down(k) - up(k+1) + down(k+1)`, valid whenever
    /// both endpoints hold with probability at least 1/2.
    pub fn kappa(&self, k: usize) -> Result<BigRational> {
        if k < 1 || k >= self.m() {
            return Err(Error::Index(format!(
                "edge ({}, {}) outside 1..={}",
                k,
                k + 1,
                self.m() - 1
            )));
        }
        Ok(self.up(k) - self.down(k) - self.up(k + 1) + self.down(k + 1))
    }

    /// Minimum edge curvature over `k = 1..m-1`.
    pub fn kappa_min(&self) -> BigRational {
        (1..self.m())
            .map(|k| self.kappa(k).expect("k in range"))
            .min()
            .expect("at least one edge")
    }

    /// Sparsity `d = max { 1/p(x,y) : p(x,y) > 0 }`, self-loops included.
    pub fn sparsity(&self) -> BigRational {
        let mut entries: Vec<BigRational> = Vec::new();
        entries.extend(self.up.iter().cloned());
        entries.extend(self.down.iter().cloned());
        for k in 1..=self.m() {
            let lz = self.laziness(k);
            if lz.is_positive() {
                entries.push(lz);
            }
        }
        entries
            .into_iter()
            .filter(|e| e.is_positive())
            .map(|e| e.recip())
            .max()
            .expect("positive rates exist")
    }

    /// Exact stationary distribution, normalized.
    pub fn stationary(&self) -> Vec<BigRational> {
        let m = self.m();
        let mut pi = Vec::with_capacity(m);
        pi.push(BigRational::one());
        for k in 1..m {
            let next = pi[k - 1].clone() * self.up(k) / self.down(k + 1);
            pi.push(next);
        }
        let total: BigRational = pi.iter().cloned().sum();
        pi.into_iter().map(|w| w / total.clone()).collect()
    }
}

/// A birth-death chain on the path `1 - 2 - ... - m`, with optional exact
/// rational rates alongside the `f64` ones.
#[derive(Debug, Clone)]
pub struct BirthDeathChain {
    m: usize,
    up: Vec<f64>,
    down: Vec<f64>,
    exact: Option<ExactRates>,
}

impl BirthDeathChain {
    /// Builds a chain from float rates: `up[i] = p(i+1, i+2)` and
    /// `down[i] = p(i+2, i+1)`, both of length `m - 1`.
    ///
    /// All rates must be strictly positive (irreducibility) and every
    /// row total `up(k) + down(k)` must stay at most 1.
    pub fn new(up: Vec<f64>, down: Vec<f64>) -> Result<Self> {
        if up.is_empty() {
            return Err(Error::Domain("birth-death chain needs at least 2 states".into()));
        }
        if down.len() != up.len() {
            return Err(Error::Dimension {
                expected: up.len(),
                got: down.len(),
            });
        }
        let m = up.len() + 1;
        for (i, &r) in up.iter().enumerate() {
            if !(r >= 0.0) {
                return Err(Error::NegativeRate(i));
            }
            if r == 0.0 {
                return Err(Error::Disconnected(i + 2));
            }
        }
        for (i, &r) in down.iter().enumerate() {
            if !(r >= 0.0) {
                return Err(Error::NegativeRate(i));
            }
            if r == 0.0 {
                return Err(Error::Disconnected(i + 2));
            }
        }
        for k in 1..=m {
            let sum = up_at(&up, k) + down_at(&down, k);
            if sum > 1.0 + 1e-12 {
                return Err(Error::RowOverflow { k, sum });
            }
        }
        Ok(BirthDeathChain {
            m,
            up,
            down,
            exact: None,
        })
    }

    /// Builds a chain from exact rational rates; the float rates are the
    /// nearest-`f64` roundings.
    pub fn new_exact(up: Vec<BigRational>, down: Vec<BigRational>) -> Result<Self> {
        if up.is_empty() {
            return Err(Error::Domain("birth-death chain needs at least 2 states".into()));
        }
        if down.len() != up.len() {
            return Err(Error::Dimension {
                expected: up.len(),
                got: down.len(),
            });
        }
        for (i, r) in up.iter().chain(down.iter()).enumerate() {
            if r.is_negative() {
                return Err(Error::NegativeRate(i % up.len()));
            }
        }
        for (i, r) in up.iter().enumerate() {
            if r.is_zero() {
                return Err(Error::Disconnected(i + 2));
            }
        }
        for (i, r) in down.iter().enumerate() {
            if r.is_zero() {
                return Err(Error::Disconnected(i + 2));
            }
        }
        let exact = ExactRates {
            up: up.clone(),
            down: down.clone(),
        };
        let m = exact.m();
        for k in 1..=m {
            let sum = exact.up(k) + exact.down(k);
            if sum > BigRational::one() {
                return Err(Error::RowOverflow {
                    k,
                    sum: rat_to_f64(&sum),
                });
            }
        }
        Ok(BirthDeathChain {
            m,
            up: up.iter().map(rat_to_f64).collect(),
            down: down.iter().map(rat_to_f64).collect(),
            exact: Some(exact),
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// `up(k) = p(k, k+1)`, 1-based, zero outside `1..=m-1`.
    pub fn up_rate(&self, k: usize) -> f64 {
        up_at(&self.up, k)
    }

    /// `down(k) = p(k, k-1)`, 1-based, zero outside `2..=m`.
    pub fn down_rate(&self, k: usize) -> f64 {
        down_at(&self.down, k)
    }

    pub fn up_rates(&self) -> &[f64] {
        &self.up
    }

    pub fn down_rates(&self) -> &[f64] {
        &self.down
    }

    /// Holding probability `p(k,k)`.
    pub fn laziness(&self, k: usize) -> f64 {
        1.0 - self.up_rate(k) - self.down_rate(k)
    }

    pub fn min_laziness(&self) -> f64 {
        (1..=self.m)
            .map(|k| self.laziness(k))
            .fold(f64::INFINITY, f64::min)
    }

    /// Exact rates, present when the chain was built rationally.
    pub fn exact(&self) -> Option<&ExactRates> {
        self.exact.as_ref()
    }

    /// Unnormalized in log-space: `ln pi(k) - ln pi(1)` telescopes the
    /// detailed-balance ratios `up(j)/down(j+1)`; the result is then
    /// normalized by log-sum-exp. Exact rates are used for the logs when
    /// available.
    pub fn stationary_log(&self) -> Vec<f64> {
        let m = self.m;
        let mut log_pi = vec![0.0f64; m];
        for k in 1..m {
            let step = match &self.exact {
                Some(ex) => {
                    let ratio = ex.up(k) / ex.down(k + 1);
                    ln_rat(&ratio).expect("rates are positive")
                }
                None => self.up[k - 1].ln() - self.down[k - 1].ln(),
            };
            log_pi[k] = log_pi[k - 1] + step;
        }
        log_pi
    }

    /// Stationary distribution with log-space weights kept alongside the
    /// (possibly underflowing) linear ones.
    pub fn stationary(&self) -> Measure {
        Measure::from_log_weights(self.stationary_log()).expect("finite log-weights")
    }

    /// Exact stationary distribution, when exact rates are present.
    pub fn stationary_exact(&self) -> Option<Vec<BigRational>> {
        self.exact.as_ref().map(|ex| ex.stationary())
    }

    /// Sparsity `d = max { 1/p(x,y) : p(x,y) > 0 }`, self-loops included.
    pub fn sparsity(&self) -> f64 {
        let mut d = 0.0f64;
        for k in 1..=self.m {
            for p in [self.up_rate(k), self.down_rate(k), self.laziness(k)] {
                if p > 0.0 {
                    d = d.max(1.0 / p);
                }
            }
        }
        d
    }

    /// Expands to a dense [`MarkovChain`], reusing the telescoped
    /// stationary distribution instead of re-solving for it.
    pub fn to_chain(&self) -> Result<MarkovChain> {
        let m = self.m;
        let mut p = DMatrix::zeros(m, m);
        for k in 1..=m {
            let up = self.up_rate(k);
            let down = self.down_rate(k);
            if k < m {
                p[(k - 1, k)] = up;
            }
            if k > 1 {
                p[(k - 1, k - 2)] = down;
            }
            p[(k - 1, k - 1)] = (1.0 - up - down).max(0.0);
        }
        MarkovChain::with_stationary(p, self.stationary())
    }
}

fn up_at(up: &[f64], k: usize) -> f64 {
    if k >= 1 && k <= up.len() {
        up[k - 1]
    } else {
        0.0
    }
}

fn down_at(down: &[f64], k: usize) -> f64 {
    if k >= 2 && k <= down.len() + 1 {
        down[k - 2]
    } else {
        0.0
    }
}

/// The lazy birth-death family on `m = 3n` states separating minimum
/// Ollivier curvature from the log-Sobolev constant.
///
/// With all rates written over the common denominator `4n^2`:
///
/// - `up(k) = 1/(4n^2)` for `k <= n`, and `(n^2 - n - k)/(4n^2)` for
///   `n < k <= 3n - 1`;
/// - `down(k) = (n + k + 1)/(4n^2)` for `2 <= k <= n`, and `1/4` for
///   `n < k <= 3n`.
///
/// Every state holds with probability at least 1/2, the minimum edge
/// curvature is exactly `1/(4n^2)`, and the sparsity is exactly `4n^2`,
/// while the stationary mass beyond state `n` is of order `n^{-n/2}`,
/// which forces the log-Sobolev constant far below the curvature even
/// after a `1/log d` correction.
pub fn counterexample_chain(n: usize, mode: NumericMode) -> Result<BirthDeathChain> {
    if n < 4 {
        return Err(Error::Domain(format!(
            "the family needs n >= 4 so all rates stay positive, got n = {n}"
        )));
    }
    let n_i = n as i64;
    let m = 3 * n;
    let denom = 4 * n_i * n_i;
    let mut up: Vec<BigRational> = Vec::with_capacity(m - 1);
    let mut down: Vec<BigRational> = Vec::with_capacity(m - 1);
    for k in 1..=(m - 1) as i64 {
        if k <= n_i {
            up.push(rat(1, denom));
        } else {
            up.push(rat(n_i * n_i - n_i - k, denom));
        }
    }
    // down[i] holds down(i + 2).
    for k in 2..=m as i64 {
        if k <= n_i {
            down.push(rat(n_i + k + 1, denom));
        } else {
            down.push(rat(1, 4));
        }
    }
    let chain = BirthDeathChain::new_exact(up, down)?;
    Ok(match mode {
        NumericMode::ExactRational => chain,
        NumericMode::Float64LogSpace => BirthDeathChain {
            exact: None,
            ..chain
        },
    })
}
