//! Dirichlet forms, entropy, the spectral gap, and log-Sobolev constants.
//!
//! For a reversible chain with kernel `P` and stationary measure `pi`:
//!
//! - carre du champ: `Gamma(f,g)(x) = 1/2 sum_y p(x,y) (f(y)-f(x)) (g(y)-g(x))`
//! - Dirichlet form: `E(f,g) = sum_x pi(x) Gamma(f,g)(x)`
//! - entropy: `Ent(f) = E_pi[f ln f] - E_pi[f] ln E_pi[f]` for `f >= 0`
//! - spectral gap: smallest nonzero eigenvalue of `-Delta = I - P`
//! - log-Sobolev constant: `alpha = inf_f E(sqrt f, sqrt f) / Ent(f)`
//! - modified log-Sobolev constant: `alpha_mod = inf_f E(f, ln f) / Ent(f)`
//!
//! Both infima run over nonconstant `f > 0` and are approximated from
//! above by multi-start projected gradient descent in the `f = exp(g)`
//! parametrization. The reported constant additionally never exceeds the
//! constant-direction limit of the objective (`lambda/2`, resp.
//! `2 lambda`), which is a limit point of feasible ratios and therefore
//! also an upper bound on the infimum. Results are upper bounds either
//! way and are flagged as such.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chain::MarkovChain;
use crate::curvature::{bakry_emery_curvature, min_ollivier_curvature, CurvatureMethod};
use crate::error::{Error, Result};

/// Constants from the functional-inequality literature used by
/// [`relation_audit`]; fixed, never tuned.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LiteratureConstants {
    /// `alpha_mod >= lsi_to_mod * alpha_lsi`.
    pub lsi_to_mod: f64,
    /// `alpha_mod <= mod_to_gap * lambda`.
    pub mod_to_gap: f64,
    /// `alpha_mod <= mod_upgrade * alpha_lsi * ln d` for `d > e`.
    pub mod_upgrade: f64,
    /// `alpha_lsi >= k_be / (be_to_lsi * ln d)` for positive
    /// Bakry-Emery curvature and `d > e`.
    pub be_to_lsi: f64,
}

impl Default for LiteratureConstants {
    fn default() -> Self {
        LiteratureConstants {
            lsi_to_mod: 4.0,
            mod_to_gap: 2.0,
            mod_upgrade: 15.0,
            be_to_lsi: 33.0,
        }
    }
}

/// Multi-start optimizer configuration for the log-Sobolev estimators.
#[derive(Debug, Clone)]
pub struct OptimizerOptions {
    /// Number of descent restarts; the first few use structured starting
    /// points (spectral-gap direction, inverse-stationary tilt), the rest
    /// are random. More restarts can only lower the reported constant.
    pub restarts: usize,
    /// Iteration cap per restart.
    pub max_iters: usize,
    /// Descent stops once the `L^2(pi)` norm of the mass-preconditioned
    /// gradient falls below `gradient_tol * (1 + |objective|)`.
    pub gradient_tol: f64,
    /// Seed for the random restarts; restart `r` draws from a stream
    /// keyed by `(seed, r)`, so enlarging `restarts` keeps earlier
    /// starting points unchanged.
    pub seed: u64,
    /// Entropy floor guarding the denominator: line search never accepts
    /// a point with `Ent(f)` below this.
    pub min_entropy: f64,
    /// Verify analytic gradients against central finite differences at
    /// the first iterations of each restart; errors on mismatch.
    pub check_gradient: bool,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        OptimizerOptions {
            restarts: 32,
            max_iters: 2000,
            gradient_tol: 1e-6,
            seed: 0,
            min_entropy: 1e-10,
            check_gradient: false,
        }
    }
}

/// Upper-bound estimate of a log-Sobolev-type constant.
#[derive(Debug, Clone, Serialize)]
pub struct LsiResult {
    /// Best ratio found; an upper bound on the true infimum.
    pub alpha: f64,
    /// The best evaluated `f`, normalized to `E_pi[f] = 1`.
    pub minimizer: Vec<f64>,
    pub restarts_used: usize,
    /// Whether at least one restart met the gradient tolerance or was
    /// stopped only by the entropy floor.
    pub converged: bool,
    /// Always true: multi-start descent approximates the infimum from
    /// above.
    pub upper_bound: bool,
    /// Constant-direction limit of the objective (`lambda/2` for the
    /// standard constant, `2 lambda` for the modified one); `alpha`
    /// never exceeds it.
    pub spectral_limit: f64,
}

/// One audited inequality between computed invariants.
#[derive(Debug, Clone, Serialize)]
pub struct RelationCheck {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub tol: f64,
    pub pass: bool,
    pub applicable: bool,
}

/// The computed invariants of a chain and the inequality web among them.
#[derive(Debug, Clone, Serialize)]
pub struct RelationAudit {
    pub alpha_lsi: f64,
    pub alpha_mod: f64,
    pub lambda: f64,
    pub kappa_min: f64,
    pub k_be_min: f64,
    pub sparsity: f64,
    pub diameter: u32,
    pub relations: Vec<RelationCheck>,
}

/// Default multiplicative slack for [`relation_audit`].
pub const DEFAULT_AUDIT_TOL: f64 = 0.05;

/// `Gamma(f,g)` as a vector over states.
pub fn gamma_form(chain: &MarkovChain, f: &[f64], g: &[f64]) -> Result<Vec<f64>> {
    let m = chain.m();
    if f.len() != m {
        return Err(Error::Dimension {
            expected: m,
            got: f.len(),
        });
    }
    if g.len() != m {
        return Err(Error::Dimension {
            expected: m,
            got: g.len(),
        });
    }
    let p = chain.kernel();
    let mut out = vec![0.0f64; m];
    for x in 0..m {
        let mut acc = 0.0;
        for y in 0..m {
            acc += p[(x, y)] * (f[y] - f[x]) * (g[y] - g[x]);
        }
        out[x] = 0.5 * acc;
    }
    Ok(out)
}

/// Dirichlet form `E(f,g)`; pass `g = None` for `E(f,f)`.
pub fn dirichlet_energy(chain: &MarkovChain, f: &[f64], g: Option<&[f64]>) -> Result<f64> {
    let gamma = gamma_form(chain, f, g.unwrap_or(f))?;
    Ok(chain.pi().expectation(&gamma))
}

/// Relative entropy `Ent(f) = E[f ln f] - E[f] ln E[f]` with `0 ln 0 = 0`.
pub fn entropy(chain: &MarkovChain, f: &[f64]) -> Result<f64> {
    let m = chain.m();
    if f.len() != m {
        return Err(Error::Dimension {
            expected: m,
            got: f.len(),
        });
    }
    for (i, &v) in f.iter().enumerate() {
        if !(v >= 0.0) {
            return Err(Error::NegativeInput(i));
        }
    }
    let pi = chain.pi().weights();
    let mut e_flnf = 0.0;
    let mut e_f = 0.0;
    for x in 0..m {
        e_f += pi[x] * f[x];
        if f[x] > 0.0 {
            e_flnf += pi[x] * f[x] * f[x].ln();
        }
    }
    if e_f <= 0.0 {
        return Ok(0.0);
    }
    Ok(e_flnf - e_f * e_f.ln())
}

/// Eigen-decomposition of the symmetrized kernel, sorted by descending
/// eigenvalue. Returns `(eigenvalues, eigenvectors as columns)`.
fn symmetric_spectrum(chain: &MarkovChain) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let s = chain.symmetrized();
    let eigen = nalgebra::SymmetricEigen::try_new(s, 1e-13, 10_000)
        .ok_or_else(|| Error::Eigen("symmetrized kernel did not converge".into()))?;
    let m = chain.m();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| {
        eigen.eigenvalues[b]
            .partial_cmp(&eigen.eigenvalues[a])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let vals: Vec<f64> = order.iter().map(|&i| eigen.eigenvalues[i]).collect();
    let mut vecs = DMatrix::zeros(m, m);
    for (j, &i) in order.iter().enumerate() {
        vecs.set_column(j, &eigen.eigenvectors.column(i));
    }
    Ok((vals, vecs))
}

/// Spectral gap: the smallest nonzero eigenvalue of `-Delta`, computed
/// from the symmetrized kernel `sqrt(p(x,y) p(y,x))` so no stationary
/// mass ratios are formed.
pub fn spectral_gap(chain: &MarkovChain) -> Result<f64> {
    let (vals, _) = symmetric_spectrum(chain)?;
    Ok(1.0 - vals[1])
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum LsiKind {
    Standard,
    Modified,
}

/// Objective value and gradient in the `f = exp(g)` parametrization.
///
/// Standard: with `u = exp(g/2)`, `N = E(u,u) = -<u, Delta u>_pi` and
/// `dN/dg = -pi u Delta u`. Modified: `M = E(f, g)` and
/// `dM/dg = -pi (f Delta g + Delta f)`. Denominator for both:
/// `D = Ent(f)` with `dD/dg = pi f (g - ln E[f])`.
///
/// Every gradient component carries a factor `pi(x)`, which makes plain
/// descent crawl when masses span many orders of magnitude. `eval`
/// therefore returns the mass-preconditioned (natural) gradient with
/// that factor divided out: `pgrad = grad / pi`, the gradient in the
/// `L^2(pi)` geometry. Descent along `-pgrad` has directional
/// derivative `-sum pi pgrad^2 <= 0`.
struct Objective<'a> {
    chain: &'a MarkovChain,
    kind: LsiKind,
}

struct Eval {
    q: f64,
    ent: f64,
    pgrad: Option<Vec<f64>>,
}

impl<'a> Objective<'a> {
    fn eval(&self, g: &[f64], want_grad: bool) -> Eval {
        let m = self.chain.m();
        let pi = self.chain.pi().weights();
        let f: Vec<f64> = g.iter().map(|&x| x.exp()).collect();
        let e_f: f64 = pi.iter().zip(&f).map(|(p, v)| p * v).sum();
        let ln_e = e_f.ln();
        let mut ent = 0.0;
        for x in 0..m {
            ent += pi[x] * f[x] * g[x];
        }
        ent -= e_f * ln_e;
        // Numerator and its per-mass gradient n = (dN/dg) / pi.
        let (num, num_grad) = match self.kind {
            LsiKind::Standard => {
                let u: Vec<f64> = g.iter().map(|&x| (0.5 * x).exp()).collect();
                let du = self.chain.laplacian_apply(&u).expect("length checked");
                let num: f64 = (0..m).map(|x| -pi[x] * u[x] * du[x]).sum();
                let grad =
                    want_grad.then(|| (0..m).map(|x| -u[x] * du[x]).collect::<Vec<f64>>());
                (num, grad)
            }
            LsiKind::Modified => {
                let df = self.chain.laplacian_apply(&f).expect("length checked");
                let dg = self.chain.laplacian_apply(g).expect("length checked");
                let num: f64 = (0..m).map(|x| -pi[x] * f[x] * dg[x]).sum();
                let grad = want_grad.then(|| {
                    (0..m)
                        .map(|x| -(f[x] * dg[x] + df[x]))
                        .collect::<Vec<f64>>()
                });
                (num, grad)
            }
        };
        if ent <= 0.0 || !ent.is_finite() {
            return Eval {
                q: f64::INFINITY,
                ent: ent.max(0.0),
                pgrad: None,
            };
        }
        let q = num / ent;
        let pgrad = if want_grad {
            let ng = num_grad.expect("requested");
            Some(
                (0..m)
                    .map(|x| {
                        let dd = f[x] * (g[x] - ln_e);
                        (ng[x] * ent - num * dd) / (ent * ent)
                    })
                    .collect(),
            )
        } else {
            None
        };
        Eval { q, ent, pgrad }
    }

    /// Central-difference gradient, for `check_gradient` mode.
    fn fd_grad(&self, g: &[f64]) -> Vec<f64> {
        let h = 1e-6;
        let mut out = vec![0.0; g.len()];
        let mut work = g.to_vec();
        for i in 0..g.len() {
            work[i] = g[i] + h;
            let qp = self.eval(&work, false).q;
            work[i] = g[i] - h;
            let qm = self.eval(&work, false).q;
            work[i] = g[i];
            out[i] = (qp - qm) / (2.0 * h);
        }
        out
    }
}

/// Recenter `g` so that `E_pi[exp(g)] = 1`; the objective is invariant.
fn recenter(chain: &MarkovChain, g: &mut [f64]) {
    let pi = chain.pi().weights();
    let e: f64 = pi.iter().zip(g.iter()).map(|(p, &x)| p * x.exp()).sum();
    if e > 0.0 && e.is_finite() {
        let shift = e.ln();
        for x in g.iter_mut() {
            *x -= shift;
        }
    }
    for x in g.iter_mut() {
        *x = x.clamp(-300.0, 300.0);
    }
}

struct RestartOutcome {
    q: f64,
    g: Vec<f64>,
    converged: bool,
}

fn run_restart(
    obj: &Objective,
    mut g: Vec<f64>,
    opts: &OptimizerOptions,
    check_gradient: bool,
) -> Result<RestartOutcome> {
    let chain = obj.chain;
    let pi = chain.pi().weights().to_vec();
    let mut best_q = f64::INFINITY;
    let mut best_g = g.clone();
    let mut converged = false;
    let mut step = 1.0f64;
    let mut prev: Option<(Vec<f64>, Vec<f64>)> = None;
    let mut stagnant = 0usize;
    for iter in 0..opts.max_iters {
        recenter(chain, &mut g);
        let eval = obj.eval(&g, true);
        if eval.ent < opts.min_entropy {
            // Too close to the constants; the last accepted point stands.
            converged = true;
            break;
        }
        let Some(pgrad) = eval.pgrad else {
            break;
        };
        if check_gradient && iter < 2 {
            let fd = obj.fd_grad(&g);
            for i in 0..g.len() {
                let analytic = pi[i] * pgrad[i];
                let scale = analytic.abs().max(fd[i].abs()).max(1e-8);
                if (analytic - fd[i]).abs() > 1e-5 * scale {
                    return Err(Error::Convergence(format!(
                        "gradient check failed at coordinate {}: analytic {:.12e}, finite-difference {:.12e}",
                        i, analytic, fd[i]
                    )));
                }
            }
        }
        if eval.q < best_q - 1e-14 * (1.0 + eval.q.abs()) {
            stagnant = 0;
        } else {
            // Progress is below float resolution of the objective; after
            // enough such iterations the minimum is resolved.
            stagnant += 1;
            if stagnant >= 50 {
                converged = true;
                break;
            }
        }
        if eval.q < best_q {
            best_q = eval.q;
            best_g = g.clone();
        }
        // Stationarity measure: the L^2(pi) norm of the natural gradient.
        let pnorm_sq: f64 = (0..g.len()).map(|i| pi[i] * pgrad[i] * pgrad[i]).sum();
        if pnorm_sq.sqrt() <= opts.gradient_tol * (1.0 + eval.q.abs()) {
            converged = true;
            break;
        }
        // Descent direction: gradient preconditioned by diag(pi * f),
        // which tracks the diagonal Hessian scale of both numerators and
        // of the entropy in the exp(g) parametrization.
        let f: Vec<f64> = g.iter().map(|&x| x.exp().max(1e-12)).collect();
        let dir: Vec<f64> = (0..g.len()).map(|i| pgrad[i] / f[i]).collect();
        // Directional derivative of Q along -dir.
        let ddd: f64 = (0..g.len()).map(|i| pi[i] * f[i] * dir[i] * dir[i]).sum();
        // Barzilai-Borwein step length in the current diag(pi f) metric,
        // falling back to doubling the previous accepted step. The shift
        // from recentering is harmless: pgrad is pi-orthogonal to
        // constants, so it cancels from the difference quotients.
        step = match &prev {
            Some((g_prev, dir_prev)) => {
                let mut sy = 0.0;
                let mut yy = 0.0;
                for i in 0..g.len() {
                    let s = g[i] - g_prev[i];
                    let y = dir[i] - dir_prev[i];
                    sy += pi[i] * f[i] * s * y;
                    yy += pi[i] * f[i] * y * y;
                }
                if sy.abs() > 0.0 && yy > 0.0 && (sy / yy).is_finite() {
                    (sy / yy).abs()
                } else {
                    step * 2.0
                }
            }
            None => step * 2.0,
        }
        .clamp(1e-12, 1e4);
        prev = Some((g.clone(), dir.clone()));
        // Armijo backtracking along the negative preconditioned gradient,
        // with the entropy floor as an extra feasibility constraint.
        let mut accepted = false;
        for _ in 0..60 {
            let trial: Vec<f64> = g
                .iter()
                .zip(&dir)
                .map(|(&x, &d)| (x - step * d).clamp(-300.0, 300.0))
                .collect();
            let t_eval = obj.eval(&trial, false);
            if t_eval.ent >= opts.min_entropy && t_eval.q <= eval.q - 1e-4 * step * ddd {
                g = trial;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            // No feasible descent step: either at the entropy floor or at
            // float resolution of a minimum.
            converged = true;
            break;
        }
    }
    recenter(chain, &mut g);
    let final_eval = obj.eval(&g, false);
    if final_eval.q < best_q && final_eval.ent >= opts.min_entropy {
        best_q = final_eval.q;
        best_g = g;
    }
    Ok(RestartOutcome {
        q: best_q,
        g: best_g,
        converged,
    })
}

/// Starting points: a few structured directions first (scaled
/// spectral-gap eigenvector, inverse-stationary tilts), then random
/// coordinates `scale * U(-1, 1)` with the scale cycling through
/// `{0.5, 1.5, 3, 6}`.
fn starting_point(
    chain: &MarkovChain,
    gap_dir: &[f64],
    restart: usize,
    seed: u64,
) -> Vec<f64> {
    use rand::prelude::*;
    let m = chain.m();
    match restart {
        0..=3 => {
            let c = [2.0, -2.0, 8.0, -8.0][restart];
            gap_dir.iter().map(|&v| c * v).collect()
        }
        4 | 5 => {
            let s = if restart == 4 { 0.5 } else { 1.0 };
            let lp = chain.pi().log_weights();
            let max_lp = lp.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            lp.iter().map(|&v| (s * (max_lp - v)).min(300.0)).collect()
        }
        _ => {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(
                seed.wrapping_mul(0x9e3779b97f4a7c15)
                    .wrapping_add(restart as u64),
            );
            let scale = [0.5, 1.5, 3.0, 6.0][restart % 4];
            (0..m).map(|_| scale * rng.random_range(-1.0..1.0)).collect()
        }
    }
}

fn lsi_like(chain: &MarkovChain, opts: &OptimizerOptions, kind: LsiKind) -> Result<LsiResult> {
    let m = chain.m();
    if m < 2 {
        return Err(Error::Domain("need at least 2 states".into()));
    }
    if opts.restarts == 0 {
        return Err(Error::Domain("restarts must be positive".into()));
    }
    let (vals, vecs) = symmetric_spectrum(chain)?;
    let lambda = 1.0 - vals[1];
    let spectral_limit = match kind {
        LsiKind::Standard => 0.5 * lambda,
        LsiKind::Modified => 2.0 * lambda,
    };
    // Gap eigenvector mapped to function space: phi = v / sqrt(pi),
    // rescaled to unit sup-norm so exp(c * phi) stays tame.
    let gap_dir: Vec<f64> = {
        let mut phi: Vec<f64> = (0..m)
            .map(|x| {
                let s = chain.pi().weights()[x].sqrt();
                if s > 0.0 {
                    vecs[(x, 1)] / s
                } else {
                    0.0
                }
            })
            .collect();
        let sup = phi.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
        if sup > 0.0 {
            for v in phi.iter_mut() {
                *v /= sup;
            }
        }
        phi
    };
    let obj = Objective { chain, kind };
    let outcomes: Vec<Result<RestartOutcome>> = (0..opts.restarts)
        .into_par_iter()
        .map(|r| {
            let g0 = starting_point(chain, &gap_dir, r, opts.seed);
            run_restart(&obj, g0, opts, opts.check_gradient && r == 0)
        })
        .collect();
    let mut best: Option<(f64, usize, Vec<f64>)> = None;
    let mut any_converged = false;
    for (r, outcome) in outcomes.into_iter().enumerate() {
        let outcome = outcome?;
        any_converged |= outcome.converged;
        let better = match &best {
            None => outcome.q.is_finite(),
            Some((bq, br, _)) => outcome.q < *bq || (outcome.q == *bq && r < *br),
        };
        if better {
            best = Some((outcome.q, r, outcome.g));
        }
    }
    let Some((best_q, _, best_g)) = best else {
        return Err(Error::Convergence(
            "no restart produced a finite objective".into(),
        ));
    };
    if !any_converged {
        return Err(Error::Convergence(format!(
            "no restart met the gradient tolerance in {} iterations",
            opts.max_iters
        )));
    }
    let mut g = best_g;
    recenter(chain, &mut g);
    let minimizer: Vec<f64> = g.iter().map(|&x| x.exp()).collect();
    Ok(LsiResult {
        alpha: best_q.min(spectral_limit),
        minimizer,
        restarts_used: opts.restarts,
        converged: any_converged,
        upper_bound: true,
        spectral_limit,
    })
}

/// Upper bound on the log-Sobolev constant
/// `alpha = inf E(sqrt f, sqrt f) / Ent(f)` by multi-start descent.
pub fn lsi_constant(chain: &MarkovChain, opts: &OptimizerOptions) -> Result<LsiResult> {
    lsi_like(chain, opts, LsiKind::Standard)
}

/// Upper bound on the modified log-Sobolev constant
/// `alpha_mod = inf E(f, ln f) / Ent(f)` by multi-start descent.
pub fn modified_lsi_constant(chain: &MarkovChain, opts: &OptimizerOptions) -> Result<LsiResult> {
    lsi_like(chain, opts, LsiKind::Modified)
}

/// Computes the invariants of a chain and audits the inequality web
/// among them with multiplicative slack [`DEFAULT_AUDIT_TOL`].
pub fn relation_audit(chain: &MarkovChain, opts: &OptimizerOptions) -> Result<RelationAudit> {
    relation_audit_with(chain, opts, &LiteratureConstants::default(), DEFAULT_AUDIT_TOL)
}

/// [`relation_audit`] with explicit constants and slack.
pub fn relation_audit_with(
    chain: &MarkovChain,
    opts: &OptimizerOptions,
    consts: &LiteratureConstants,
    tol: f64,
) -> Result<RelationAudit> {
    let alpha_lsi = lsi_constant(chain, opts)?.alpha;
    let alpha_mod = modified_lsi_constant(chain, opts)?.alpha;
    let lambda = spectral_gap(chain)?;
    let kappa_min = min_ollivier_curvature(chain, CurvatureMethod::Lp)?.kappa_min;
    let k_be_min = (1..=chain.m())
        .map(|x| bakry_emery_curvature(chain, x))
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    let d = chain.sparsity();
    let log_d = d.ln();
    let lazy = chain.is_lazy();

    let mut relations = Vec::new();
    let mut push = |name: &str, lhs: f64, rhs: f64, pass: bool, applicable: bool| {
        relations.push(RelationCheck {
            name: name.to_string(),
            lhs,
            rhs,
            tol,
            pass: pass || !applicable,
            applicable,
        });
    };
    push(
        "lsi_to_mod: 4 alpha_lsi <= alpha_mod",
        consts.lsi_to_mod * alpha_lsi,
        alpha_mod,
        consts.lsi_to_mod * alpha_lsi <= alpha_mod * (1.0 + tol),
        true,
    );
    push(
        "mod_to_gap: alpha_mod <= 2 lambda",
        alpha_mod,
        consts.mod_to_gap * lambda,
        alpha_mod <= consts.mod_to_gap * lambda * (1.0 + tol),
        true,
    );
    push(
        "mod_upgrade: alpha_mod <= 15 alpha_lsi ln d",
        alpha_mod,
        consts.mod_upgrade * alpha_lsi * log_d,
        alpha_mod <= consts.mod_upgrade * alpha_lsi * log_d * (1.0 + tol),
        d > std::f64::consts::E,
    );
    let curvature_scale = kappa_min.abs().max(lambda.abs()).max(1e-12);
    push(
        "gap_vs_curvature: lambda >= kappa_min (lazy)",
        lambda,
        kappa_min,
        lambda >= kappa_min - tol * curvature_scale,
        lazy,
    );
    push(
        "be_to_lsi: alpha_lsi >= k_be / (33 ln d)",
        alpha_lsi,
        k_be_min / (consts.be_to_lsi * log_d),
        alpha_lsi >= k_be_min / (consts.be_to_lsi * log_d) * (1.0 - tol),
        k_be_min > 0.0 && d > std::f64::consts::E,
    );

    Ok(RelationAudit {
        alpha_lsi,
        alpha_mod,
        lambda,
        kappa_min,
        k_be_min,
        sparsity: d,
        diameter: chain.diameter(),
        relations,
    })
}
