//! Electrical capacity between state sets and the isocapacitary upper
//! bound on the log-Sobolev constant.
//!
//! `cap(A, B)` is the Dirichlet energy of the harmonic potential that
//! is 0 on `A` and 1 on `B`. On a birth-death chain with `A` a prefix
//! and `B` a suffix the edge conductances `c(k) = pi(k) up(k)` are in
//! series, so `1/cap = sum_k 1/c(k)` over the separating edges. The
//! isocapacitary quantity `cap(A, B) / (pi(B) |ln pi(B)|)` upper-bounds
//! the log-Sobolev constant up to a universal factor whenever the
//! complement side carries at least half the stationary mass.

use nalgebra::{DMatrix, DVector};
use num::BigRational;
use serde::Serialize;

use crate::chain::{BirthDeathChain, MarkovChain};
use crate::error::{Error, Result};
use crate::functional::dirichlet_energy;
use crate::measure::StreamingLogSum;

/// A pair of disjoint nonempty state sets (1-based).
#[derive(Debug, Clone)]
pub struct CapacityProblem {
    a: Vec<usize>,
    b: Vec<usize>,
}

impl CapacityProblem {
    pub fn new(m: usize, mut a: Vec<usize>, mut b: Vec<usize>) -> Result<Self> {
        if a.is_empty() || b.is_empty() {
            return Err(Error::BadSets);
        }
        a.sort_unstable();
        a.dedup();
        b.sort_unstable();
        b.dedup();
        if a.iter().chain(b.iter()).any(|&s| s < 1 || s > m) {
            return Err(Error::BadSets);
        }
        let mut in_a = vec![false; m];
        for &s in &a {
            in_a[s - 1] = true;
        }
        if b.iter().any(|&s| in_a[s - 1]) {
            return Err(Error::BadSets);
        }
        Ok(CapacityProblem { a, b })
    }

    pub fn a(&self) -> &[usize] {
        &self.a
    }

    pub fn b(&self) -> &[usize] {
        &self.b
    }
}

/// Capacity between two sets via the harmonic potential: solves the
/// discrete Dirichlet problem on the free states and returns the energy
/// of the solution.
pub fn capacity_general(chain: &MarkovChain, problem: &CapacityProblem) -> Result<f64> {
    let h = harmonic_potential(chain, problem)?;
    dirichlet_energy(chain, &h, None)
}

/// Potential fixed to 0 on `A`, 1 on `B`, harmonic elsewhere.
fn harmonic_potential(chain: &MarkovChain, problem: &CapacityProblem) -> Result<Vec<f64>> {
    let m = chain.m();
    if problem.a.iter().chain(problem.b.iter()).any(|&s| s > m) {
        return Err(Error::BadSets);
    }
    // 0 = free, 1 = in A, 2 = in B.
    let mut role = vec![0u8; m];
    for &s in &problem.a {
        role[s - 1] = 1;
    }
    for &s in &problem.b {
        role[s - 1] = 2;
    }
    let free: Vec<usize> = (0..m).filter(|&x| role[x] == 0).collect();
    let mut h = vec![0.0f64; m];
    for &s in &problem.b {
        h[s - 1] = 1.0;
    }
    if free.is_empty() {
        return Ok(h);
    }
    let nf = free.len();
    let p = chain.kernel();
    // (I - P_FF) h_F = P_FB 1.
    let mut a_mat = DMatrix::<f64>::zeros(nf, nf);
    let mut rhs = DVector::<f64>::zeros(nf);
    for (i, &x) in free.iter().enumerate() {
        for (j, &y) in free.iter().enumerate() {
            a_mat[(i, j)] = if i == j { 1.0 - p[(x, y)] } else { -p[(x, y)] };
        }
        rhs[i] = (0..m).filter(|&y| role[y] == 2).map(|y| p[(x, y)]).sum();
    }
    let sol = a_mat
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::SingularSystem("harmonic potential".into()))?;
    for (i, &x) in free.iter().enumerate() {
        h[x] = sol[i];
    }
    Ok(h)
}

fn check_bd_split(bd: &BirthDeathChain, a_end: usize, b_start: usize) -> Result<()> {
    if a_end < 1 || b_start <= a_end || b_start > bd.m() {
        return Err(Error::BadSets);
    }
    Ok(())
}

/// `ln cap({1..a}, {b..m})` of a birth-death chain, computed in log
/// space: `1/cap` is the sum of `1/(pi(k) up(k))` for `k = a..b-1`.
pub fn capacity_bd_log(bd: &BirthDeathChain, a_end: usize, b_start: usize) -> Result<f64> {
    check_bd_split(bd, a_end, b_start)?;
    let lw = bd.stationary();
    let mut recip = StreamingLogSum::new();
    for k in a_end..b_start {
        recip.add(-(lw.log_get(k) + bd.up_rate(k).ln()));
    }
    Ok(-recip.value())
}

/// Linear-scale version of [`capacity_bd_log`]; may underflow to zero
/// for strongly concentrated stationary measures.
pub fn capacity_bd(bd: &BirthDeathChain, a_end: usize, b_start: usize) -> Result<f64> {
    Ok(capacity_bd_log(bd, a_end, b_start)?.exp())
}

/// Exact-rational capacity of a prefix-suffix split. Requires the
/// chain to carry exact rates.
pub fn capacity_bd_exact(bd: &BirthDeathChain, a_end: usize, b_start: usize) -> Result<BigRational> {
    check_bd_split(bd, a_end, b_start)?;
    let ex = bd.exact().ok_or(Error::MethodMismatch)?;
    let pi = ex.stationary();
    let mut recip_sum = BigRational::from_integer(0.into());
    for k in a_end..b_start {
        let c = pi[k - 1].clone() * ex.up(k);
        recip_sum += c.recip();
    }
    Ok(recip_sum.recip())
}

/// The isocapacitary quantity `cap / (pi(B) |ln pi(B)|)` from its log
/// ingredients. `pi_b_log` must be negative.
pub fn isocap_bound(cap_log: f64, pi_b_log: f64) -> f64 {
    (cap_log - pi_b_log).exp() / (-pi_b_log)
}

/// An isocapacitary certificate: sets are contiguous 1-based ranges
/// `[lo, hi]`. `valid` records whether `pi(A) >= 1/2`, the condition
/// under which `bound` controls the log-Sobolev constant up to a
/// universal factor.
#[derive(Debug, Clone, Serialize)]
pub struct IsoCapBound {
    #[serde(rename = "A")]
    pub a: [usize; 2],
    #[serde(rename = "B")]
    pub b: [usize; 2],
    pub cap_log: f64,
    #[serde(rename = "piB_log")]
    pub pi_b_log: f64,
    pub bound: f64,
    pub valid: bool,
}

/// Isocapacitary bound for the split `A = {1..a}`, `B = {b..m}`.
pub fn isocap_bound_bd(bd: &BirthDeathChain, a_end: usize, b_start: usize) -> Result<IsoCapBound> {
    check_bd_split(bd, a_end, b_start)?;
    let m = bd.m();
    let pi = bd.stationary();
    let cap_log = capacity_bd_log(bd, a_end, b_start)?;
    let a_states: Vec<usize> = (1..=a_end).collect();
    let b_states: Vec<usize> = (b_start..=m).collect();
    let pi_a_log = pi.log_mass(&a_states);
    let pi_b_log = pi.log_mass(&b_states);
    Ok(IsoCapBound {
        a: [1, a_end],
        b: [b_start, m],
        cap_log,
        pi_b_log,
        bound: isocap_bound(cap_log, pi_b_log),
        valid: pi_a_log >= 0.5f64.ln(),
    })
}

/// Searches all contiguous prefix-suffix splits, in both orientations,
/// for the smallest isocapacitary bound whose heavy-side condition
/// `pi(A) >= 1/2` holds. Comparisons run in log scale so strongly
/// concentrated measures do not underflow.
pub fn isocap_profile_bd(bd: &BirthDeathChain) -> Result<IsoCapBound> {
    let m = bd.m();
    if m < 2 {
        return Err(Error::BadSets);
    }
    let pi = bd.stationary();
    let lw = pi.log_weights();
    // ce[k-1] = ln c(k, k+1) = ln pi(k) + ln up(k).
    let ce: Vec<f64> = (1..m).map(|k| lw[k - 1] + bd.up_rate(k).ln()).collect();
    // Cumulative masses: pref[a] = ln pi({1..a}), suff[b] = ln pi({b..m}).
    let mut pref = vec![0.0f64; m + 1];
    let mut acc = StreamingLogSum::new();
    for a in 1..=m {
        acc.add(lw[a - 1]);
        pref[a] = acc.value();
    }
    let mut suff = vec![0.0f64; m + 2];
    let mut acc = StreamingLogSum::new();
    suff[m + 1] = f64::NEG_INFINITY;
    for b in (1..=m).rev() {
        acc.add(lw[b - 1]);
        suff[b] = acc.value();
    }
    let half = 0.5f64.ln();

    let mut best: Option<(f64, IsoCapBound)> = None;
    let mut consider = |cand_log: f64, cand: IsoCapBound| {
        if best.as_ref().is_none_or(|(b_log, _)| cand_log < *b_log) {
            best = Some((cand_log, cand));
        }
    };
    // Left-heavy orientation: A = {1..a}, B = {b..m}.
    #[allow(clippy::needless_range_loop)]
    for a in 1..m {
        if pref[a] < half {
            continue;
        }
        let mut recip = StreamingLogSum::new();
        for b in (a + 1)..=m {
            recip.add(-ce[b - 2]);
            let cap_log = -recip.value();
            let pi_b_log = suff[b];
            let cand_log = cap_log - pi_b_log - (-pi_b_log).ln();
            consider(
                cand_log,
                IsoCapBound {
                    a: [1, a],
                    b: [b, m],
                    cap_log,
                    pi_b_log,
                    bound: isocap_bound(cap_log, pi_b_log),
                    valid: true,
                },
            );
        }
    }
    // Right-heavy orientation: A = {a..m}, B = {1..b}.
    for a in (2..=m).rev() {
        if suff[a] < half {
            continue;
        }
        let mut recip = StreamingLogSum::new();
        for b in (1..a).rev() {
            recip.add(-ce[b - 1]);
            let cap_log = -recip.value();
            let pi_b_log = pref[b];
            let cand_log = cap_log - pi_b_log - (-pi_b_log).ln();
            consider(
                cand_log,
                IsoCapBound {
                    a: [a, m],
                    b: [1, b],
                    cap_log,
                    pi_b_log,
                    bound: isocap_bound(cap_log, pi_b_log),
                    valid: true,
                },
            );
        }
    }
    best.map(|(_, b)| b).ok_or(Error::BadSets)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{counterexample_chain, NumericMode};
    use crate::generators::random_birth_death;
    use crate::rational::{ln_rat, rat};
    use approx::assert_relative_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn three_state_capacity_by_hand() {
        // up = (3/10, 1/5), down = (1/10, 2/5): pi = (1, 3, 3/2)/5.5,
        // conductances 3/55 and 6/55, so cap({1},{3}) = 2/55.
        let bd = BirthDeathChain::new(vec![0.3, 0.2], vec![0.1, 0.4]).unwrap();
        let want = 2.0 / 55.0;
        assert_relative_eq!(capacity_bd(&bd, 1, 3).unwrap(), want, epsilon = 1e-14);
        let chain = bd.to_chain().unwrap();
        let problem = CapacityProblem::new(3, vec![1], vec![3]).unwrap();
        assert_relative_eq!(
            capacity_general(&chain, &problem).unwrap(),
            want,
            epsilon = 1e-13
        );
        let bd_exact = BirthDeathChain::new_exact(
            vec![rat(3, 10), rat(1, 5)],
            vec![rat(1, 10), rat(2, 5)],
        )
        .unwrap();
        assert_eq!(capacity_bd_exact(&bd_exact, 1, 3).unwrap(), rat(2, 55));
    }

    #[test]
    fn adjacent_split_is_a_single_conductance() {
        let bd = BirthDeathChain::new(vec![0.25, 0.25], vec![0.25, 0.25]).unwrap();
        let pi = bd.stationary();
        let want = pi.get(1) * 0.25;
        assert_relative_eq!(capacity_bd(&bd, 1, 2).unwrap(), want, epsilon = 1e-14);
    }

    #[test]
    fn serial_formula_matches_harmonic_solver_on_random_chains() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for trial in 0..20 {
            let m = rng.random_range(3..=12);
            let bd = random_birth_death(&mut rng, m, trial % 2 == 0).unwrap();
            let a_end = rng.random_range(1..m - 1);
            let b_start = rng.random_range(a_end + 1..=m);
            let serial = capacity_bd(&bd, a_end, b_start).unwrap();
            let chain = bd.to_chain().unwrap();
            let problem = CapacityProblem::new(
                m,
                (1..=a_end).collect(),
                (b_start..=m).collect(),
            )
            .unwrap();
            let harmonic = capacity_general(&chain, &problem).unwrap();
            assert_relative_eq!(serial, harmonic, max_relative = 1e-10);
        }
    }

    #[test]
    fn family_capacity_matches_frozen_values() {
        // Splits A = {1..a}, B = {2n..3n}; values frozen from an exact
        // big-fraction evaluation of the serial formula.
        let cases = [
            (4usize, 4usize, -13.895728f64, -11.851999f64),
            (8, 8, -27.715808, -24.364315),
            (4, 1, -13.900114, -11.851999),
            (8, 1, -27.717397, -24.364315),
        ];
        for &(n, a_end, want_cap, want_pib) in &cases {
            let bd = counterexample_chain(n, NumericMode::Float64LogSpace).unwrap();
            let cert = isocap_bound_bd(&bd, a_end, 2 * n).unwrap();
            assert!((cert.cap_log - want_cap).abs() < 1e-4, "n = {n}: {}", cert.cap_log);
            assert!((cert.pi_b_log - want_pib).abs() < 1e-4, "n = {n}: {}", cert.pi_b_log);
            assert!(cert.valid);
            assert_relative_eq!(
                cert.bound,
                isocap_bound(cert.cap_log, cert.pi_b_log),
                epsilon = 0.0
            );
        }
    }

    #[test]
    fn exact_and_log_space_capacities_agree_on_the_family() {
        for &n in &[4usize, 8] {
            let bd = counterexample_chain(n, NumericMode::ExactRational).unwrap();
            let exact = capacity_bd_exact(&bd, n, 2 * n).unwrap();
            let exact_log = ln_rat(&exact).unwrap();
            let float_log = capacity_bd_log(&bd, n, 2 * n).unwrap();
            assert_relative_eq!(exact_log, float_log, max_relative = 1e-12);
        }
    }

    #[test]
    fn harmonic_solver_cross_checks_the_family_at_n4() {
        let bd = counterexample_chain(4, NumericMode::Float64LogSpace).unwrap();
        let chain = bd.to_chain().unwrap();
        let problem = CapacityProblem::new(12, (1..=4).collect(), (8..=12).collect()).unwrap();
        let harmonic = capacity_general(&chain, &problem).unwrap();
        let serial = capacity_bd(&bd, 4, 8).unwrap();
        assert_relative_eq!(harmonic, serial, max_relative = 1e-9);
    }

    #[test]
    fn profile_search_is_no_worse_than_the_pinned_split() {
        let bd = counterexample_chain(4, NumericMode::Float64LogSpace).unwrap();
        let pinned = isocap_bound_bd(&bd, 4, 8).unwrap();
        let best = isocap_profile_bd(&bd).unwrap();
        assert!(best.valid);
        let pinned_log = pinned.cap_log - pinned.pi_b_log - (-pinned.pi_b_log).ln();
        let best_log = best.cap_log - best.pi_b_log - (-best.pi_b_log).ln();
        assert!(best_log <= pinned_log + 1e-12);
        // The returned ranges are disjoint.
        assert!(best.a[1] < best.b[0] || best.b[1] < best.a[0]);
    }

    #[test]
    fn profile_explores_both_orientations() {
        // Mass concentrated on the right: the heavy side must be the
        // suffix, so A comes out as a suffix range.
        let bd = BirthDeathChain::new(vec![0.4, 0.4], vec![0.05, 0.05]).unwrap();
        let best = isocap_profile_bd(&bd).unwrap();
        assert!(best.a[0] > best.b[1], "A = {:?}, B = {:?}", best.a, best.b);
    }

    #[test]
    fn degenerate_splits_are_rejected() {
        let bd = BirthDeathChain::new(vec![0.25, 0.25], vec![0.25, 0.25]).unwrap();
        assert!(matches!(capacity_bd(&bd, 2, 2), Err(Error::BadSets)));
        assert!(matches!(capacity_bd(&bd, 0, 2), Err(Error::BadSets)));
        assert!(matches!(capacity_bd(&bd, 1, 4), Err(Error::BadSets)));
        assert!(matches!(
            CapacityProblem::new(3, vec![1, 2], vec![2, 3]),
            Err(Error::BadSets)
        ));
        assert!(matches!(
            CapacityProblem::new(3, vec![], vec![2]),
            Err(Error::BadSets)
        ));
    }

    #[test]
    fn certificate_serializes_with_the_expected_keys() {
        let bd = counterexample_chain(4, NumericMode::Float64LogSpace).unwrap();
        let cert = isocap_bound_bd(&bd, 4, 8).unwrap();
        let json = serde_json::to_value(&cert).unwrap();
        assert_eq!(json["A"], serde_json::json!([1, 4]));
        assert_eq!(json["B"], serde_json::json!([8, 12]));
        for key in ["cap_log", "piB_log", "bound"] {
            assert!(json[key].is_f64(), "missing {key}");
        }
        assert_eq!(json["valid"], true);
    }
}
