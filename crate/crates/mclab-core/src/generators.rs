//! Random chain generators for tests and randomized cross-checks.
//!
//! All generators draw from a caller-supplied `Rng`, so seeding the rng
//! makes the chain reproducible.

use rand::Rng;

use crate::chain::{BirthDeathChain, MarkovChain};
use crate::error::{Error, Result};
use crate::measure::Measure;
use nalgebra::DMatrix;

/// Random reversible chain on `m` states from a random connected
/// weighted graph: a uniform random spanning tree skeleton plus extra
/// edges, with `p(x, y)` proportional to the edge weight within each
/// row. Reversible with respect to `pi(x)` proportional to the total
/// weight at `x`. With `lazy` every state holds with probability 1/2.
pub fn random_reversible_chain<R: Rng + ?Sized>(
    rng: &mut R,
    m: usize,
    lazy: bool,
) -> Result<MarkovChain> {
    if m < 2 {
        return Err(Error::Domain("need at least 2 states".into()));
    }
    let mut w = DMatrix::<f64>::zeros(m, m);
    // Random tree: attach each new vertex to an earlier one.
    for v in 1..m {
        let u = rng.random_range(0..v);
        let weight = rng.random_range(0.5..2.0);
        w[(u, v)] = weight;
        w[(v, u)] = weight;
    }
    for u in 0..m {
        for v in (u + 1)..m {
            if w[(u, v)] == 0.0 && rng.random_range(0.0..1.0) < 0.35 {
                let weight = rng.random_range(0.5..2.0);
                w[(u, v)] = weight;
                w[(v, u)] = weight;
            }
        }
    }
    let totals: Vec<f64> = (0..m).map(|x| w.row(x).sum()).collect();
    let grand: f64 = totals.iter().sum();
    let scale = if lazy { 2.0 } else { 1.0 };
    let mut p = DMatrix::<f64>::zeros(m, m);
    for x in 0..m {
        for y in 0..m {
            if x != y {
                p[(x, y)] = w[(x, y)] / (scale * totals[x]);
            }
        }
        if lazy {
            p[(x, x)] = 0.5;
        }
    }
    let pi = Measure::from_weights(totals.iter().map(|t| t / grand).collect())?;
    MarkovChain::with_stationary(p, pi)
}

/// Random birth-death chain with strictly positive rates. With `lazy`
/// every row keeps holding probability at least 1/2 (so the closed-form
/// curvature matches the transport LP); otherwise rates are only
/// constrained to keep rows substochastic.
pub fn random_birth_death<R: Rng + ?Sized>(
    rng: &mut R,
    m: usize,
    lazy: bool,
) -> Result<BirthDeathChain> {
    if m < 2 {
        return Err(Error::Domain("need at least 2 states".into()));
    }
    let (lo, hi_single, hi_pair): (f64, f64, f64) = if lazy {
        (0.02, 0.45, 0.45)
    } else {
        (0.05, 0.9, 0.85)
    };
    let mut up = vec![0.0; m - 1];
    let mut down = vec![0.0; m - 1];
    up[0] = rng.random_range(lo..hi_single);
    down[m - 2] = rng.random_range(lo..hi_single);
    // Interior row k (2..=m-1) carries down(k) + up(k); cap the pair at
    // 1/2 (lazy) or just below 1.
    let budget = if lazy { 0.5 } else { 0.95 };
    for k in 2..m {
        let u = rng.random_range(lo..(hi_pair - lo).min(budget - 2.0 * lo) + lo);
        let d = rng.random_range(lo..budget - u);
        up[k - 1] = u;
        down[k - 2] = d;
    }
    BirthDeathChain::new(up, down)
}

/// Random lazy birth-death chain whose stationary measure is
/// log-concave: the mass ratios `pi(k)/pi(k+1) = down(k+1)/up(k)` are
/// drawn non-decreasing in `k` and the rates realize them.
pub fn random_log_concave_bd<R: Rng + ?Sized>(rng: &mut R, m: usize) -> Result<BirthDeathChain> {
    if m < 2 {
        return Err(Error::Domain("need at least 2 states".into()));
    }
    let mut ratios: Vec<f64> = (0..m - 1).map(|_| rng.random_range(0.3..3.0)).collect();
    ratios.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut up = vec![0.0; m - 1];
    let mut down = vec![0.0; m - 1];
    for k in 0..m - 1 {
        let cap = (0.4 / ratios[k]).min(0.1);
        up[k] = rng.random_range(0.02..cap.max(0.021));
        down[k] = ratios[k] * up[k];
    }
    BirthDeathChain::new(up, down)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curvature::check_log_concavity;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn reversible_chains_validate_and_connect() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for m in 2..=9 {
            for &lazy in &[true, false] {
                let c = random_reversible_chain(&mut rng, m, lazy).unwrap();
                assert_eq!(c.m(), m);
                assert!(c.detailed_balance_residual() < 1e-12);
                assert!(c.diameter() >= 1);
                if lazy {
                    assert!(c.is_lazy());
                }
            }
        }
    }

    #[test]
    fn lazy_birth_death_rows_keep_half_holding_mass() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..50 {
            let m = rng.random_range(2..=15);
            let bd = random_birth_death(&mut rng, m, true).unwrap();
            assert!(bd.min_laziness() >= 0.5 - 1e-12, "m = {m}");
        }
    }

    #[test]
    fn non_lazy_birth_death_rows_stay_stochastic() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for _ in 0..50 {
            let m = rng.random_range(2..=15);
            let bd = random_birth_death(&mut rng, m, false).unwrap();
            let c = bd.to_chain().unwrap();
            for x in 1..=m {
                let row_sum: f64 = (1..=m).map(|y| c.p(x, y)).sum();
                assert!((row_sum - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn log_concave_generator_is_log_concave_and_lazy() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..30 {
            let m = rng.random_range(3..=20);
            let bd = random_log_concave_bd(&mut rng, m).unwrap();
            assert!(bd.min_laziness() >= 0.5 - 1e-12);
            let report = check_log_concavity(&bd);
            assert!(report.log_concave, "violation at {:?}", report.first_violation);
        }
    }

    #[test]
    fn generators_are_reproducible_under_a_fixed_seed() {
        let a = random_birth_death(&mut ChaCha8Rng::seed_from_u64(5), 8, true).unwrap();
        let b = random_birth_death(&mut ChaCha8Rng::seed_from_u64(5), 8, true).unwrap();
        assert_eq!(a.up_rates(), b.up_rates());
        assert_eq!(a.down_rates(), b.down_rates());
    }
}
