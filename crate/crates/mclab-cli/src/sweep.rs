//! The disproof sweep: one table row per family size `n`, with the
//! curvature, sparsity, capacity, and isocapacitary quantities whose
//! joint decay separates minimum curvature from the log-Sobolev
//! constant.

use mclab_core::curvature::min_ollivier_curvature_bd;
use mclab_core::rational::{ln_rat, rat_to_f64};
use mclab_core::{
    capacity_bd_exact, capacity_bd_log, capacity_general, counterexample_chain, isocap_bound,
    lsi_constant, min_ollivier_curvature, CapacityProblem, CurvatureMethod, Error, MarkovChain,
    NumericMode, OptimizerOptions, Result,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub const DEFAULT_SWEEP: [usize; 6] = [4, 8, 16, 32, 64, 128];

/// Largest `n` whose row may use exact rationals; beyond this every
/// quantity is handled in log space regardless of the requested mode.
pub const EXACT_ROW_MAX_N: usize = 64;

/// Closed-form curvature is cross-checked against the transport LP up
/// to this `n` (the LP needs the dense chain).
const CURVATURE_CROSS_CHECK_MAX_N: usize = 8;

/// The serial capacity is cross-checked against the harmonic solver up
/// to this `n`. The Dirichlet energy of the solved potential carries an
/// absolute noise floor near `eps^2 * kappa_min`, so once the capacity
/// drops below roughly 1e-30 the harmonic value is pure noise; at
/// `n = 16` the two routes still agree to 1e-8 relative.
const HARMONIC_CROSS_CHECK_MAX_N: usize = 16;

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub n_list: Vec<usize>,
    pub mode: NumericMode,
    /// Rows with `n` up to this bound also get a numerical log-Sobolev
    /// constant.
    pub exact_lsi_max_n: usize,
    pub seed: u64,
}

/// One row of the sweep. `ratio` is the headline quantity
/// `isocap_bound * log d / kappa_min`: an upper bound on how large
/// `alpha_LSI * log d / kappa_min` can be up to a universal factor, so
/// its decay to zero is the refutation.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ExperimentRow {
    pub n: usize,
    pub kappa_min: f64,
    pub d: f64,
    pub pi_1: f64,
    #[serde(rename = "pi_B_log")]
    pub pi_b_log: f64,
    pub cap_log: f64,
    pub isocap_bound: f64,
    pub k_over_logd: f64,
    pub ratio: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub lsi_exact: Option<f64>,
}

/// Computes all rows in parallel, ordered by `n`. Failed rows are
/// reported alongside the successful ones instead of discarding the
/// whole sweep.
pub fn reproduce_rows(cfg: &SweepConfig) -> (Vec<ExperimentRow>, Vec<(usize, Error)>) {
    let results: Vec<(usize, Result<ExperimentRow>)> = cfg
        .n_list
        .par_iter()
        .map(|&n| (n, build_row(n, cfg)))
        .collect();
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (n, result) in results {
        match result {
            Ok(row) => rows.push(row),
            Err(err) => failures.push((n, err)),
        }
    }
    (rows, failures)
}

pub fn build_row(n: usize, cfg: &SweepConfig) -> Result<ExperimentRow> {
    let mode = if n > EXACT_ROW_MAX_N {
        NumericMode::Float64LogSpace
    } else {
        cfg.mode
    };
    let bd = counterexample_chain(n, mode)?;
    let m = bd.m();

    let (kappa_min, d) = match bd.exact() {
        Some(ex) => (rat_to_f64(&ex.kappa_min()), rat_to_f64(&ex.sparsity())),
        None => (min_ollivier_curvature_bd(&bd)?.kappa_min, bd.sparsity()),
    };

    let dense_needed = n <= CURVATURE_CROSS_CHECK_MAX_N
        || n <= HARMONIC_CROSS_CHECK_MAX_N
        || n <= cfg.exact_lsi_max_n;
    let chain: Option<MarkovChain> = if dense_needed {
        Some(bd.to_chain()?)
    } else {
        None
    };

    if n <= CURVATURE_CROSS_CHECK_MAX_N {
        let lp = min_ollivier_curvature(chain.as_ref().unwrap(), CurvatureMethod::Lp)?;
        if (lp.kappa_min - kappa_min).abs() > 1e-10 {
            return Err(Error::Convergence(format!(
                "LP and closed-form curvature disagree at n = {n}: {} vs {kappa_min}",
                lp.kappa_min
            )));
        }
    }

    let pi = bd.stationary();
    let pi_1 = pi.get(1);
    let b_set: Vec<usize> = (2 * n..=m).collect();
    let pi_b_log = pi.log_mass(&b_set);

    let cap_log = match bd.exact() {
        Some(_) => ln_rat(&capacity_bd_exact(&bd, 1, 2 * n)?)?,
        None => capacity_bd_log(&bd, 1, 2 * n)?,
    };
    if n <= HARMONIC_CROSS_CHECK_MAX_N {
        let problem = CapacityProblem::new(m, vec![1], b_set.clone())?;
        let harmonic = capacity_general(chain.as_ref().unwrap(), &problem)?;
        let serial = cap_log.exp();
        if (harmonic - serial).abs() > 1e-6 * serial {
            return Err(Error::Convergence(format!(
                "harmonic and serial capacities disagree at n = {n}: {harmonic} vs {serial}"
            )));
        }
    }

    let bound = isocap_bound(cap_log, pi_b_log);
    let log_d = d.ln();
    let lsi_exact = if n <= cfg.exact_lsi_max_n {
        let opts = OptimizerOptions {
            seed: cfg.seed,
            ..OptimizerOptions::default()
        };
        Some(lsi_constant(chain.as_ref().unwrap(), &opts)?.alpha)
    } else {
        None
    };

    Ok(ExperimentRow {
        n,
        kappa_min,
        d,
        pi_1,
        pi_b_log,
        cap_log,
        isocap_bound: bound,
        k_over_logd: kappa_min / log_d,
        ratio: bound * log_d / kappa_min,
        lsi_exact,
    })
}

pub const CSV_HEADER: &str = "n,kappa_min,d,pi_1,pi_B_log,cap_log,isocap_bound,ratio,lsi_exact";

pub fn render_csv(rows: &[ExperimentRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let lsi = r.lsi_exact.map(|v| v.to_string()).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.n, r.kappa_min, r.d, r.pi_1, r.pi_b_log, r.cap_log, r.isocap_bound, r.ratio, lsi
        ));
    }
    out
}

pub fn render_json(rows: &[ExperimentRow]) -> String {
    let mut out = serde_json::to_string_pretty(rows).expect("rows serialize");
    out.push('\n');
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(n_list: Vec<usize>, mode: NumericMode) -> SweepConfig {
        SweepConfig {
            n_list,
            mode,
            exact_lsi_max_n: 0,
            seed: 0,
        }
    }

    #[test]
    fn family_row_matches_frozen_oracle_values() {
        // Frozen from an exact big-fraction evaluation of the serial
        // formula with A = {1}, B = {2n..3n}.
        let row = build_row(4, &config(vec![4], NumericMode::ExactRational)).unwrap();
        assert_eq!(row.kappa_min, 0.015625);
        assert_eq!(row.d, 64.0);
        assert!((row.pi_1 - 0.859915).abs() < 1e-5);
        assert!((row.pi_b_log - -11.851999).abs() < 1e-4);
        assert!((row.cap_log - -13.900114).abs() < 1e-4);
        assert!((row.isocap_bound - 1.088236e-2).abs() < 1e-7);
        assert!((row.ratio - 2.896541).abs() < 1e-4);
        assert!(row.lsi_exact.is_none());
    }

    #[test]
    fn float_and_rational_rows_agree() {
        for n in [4, 8, 16, 32] {
            let exact = build_row(n, &config(vec![n], NumericMode::ExactRational)).unwrap();
            let float = build_row(n, &config(vec![n], NumericMode::Float64LogSpace)).unwrap();
            assert!((exact.kappa_min - float.kappa_min).abs() <= 1e-8 * exact.kappa_min);
            assert!((exact.d - float.d).abs() <= 1e-8 * exact.d);
            assert!((exact.ratio - float.ratio).abs() <= 1e-8 * exact.ratio);
        }
    }

    #[test]
    fn csv_has_the_pinned_columns_and_one_line_per_row() {
        let (rows, failures) = reproduce_rows(&config(vec![4, 8], NumericMode::ExactRational));
        assert!(failures.is_empty());
        let csv = render_csv(&rows);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("4,0.015625,64,"));
        // No trailing comma confusion: 9 columns means 8 separators.
        assert_eq!(lines[1].matches(',').count(), 8);
        assert!(lines[1].ends_with(','), "lsi_exact cell is empty");
    }

    #[test]
    fn json_round_trips() {
        let (rows, _) = reproduce_rows(&SweepConfig {
            n_list: vec![4],
            mode: NumericMode::ExactRational,
            exact_lsi_max_n: 4,
            seed: 0,
        });
        let parsed: Vec<ExperimentRow> = serde_json::from_str(&render_json(&rows)).unwrap();
        assert_eq!(parsed, rows);
        assert!(parsed[0].lsi_exact.is_some());
    }

    #[test]
    fn rows_come_back_ordered_by_n() {
        let (rows, failures) = reproduce_rows(&config(vec![4, 5, 6], NumericMode::Float64LogSpace));
        assert!(failures.is_empty());
        let ns: Vec<usize> = rows.iter().map(|r| r.n).collect();
        assert_eq!(ns, vec![4, 5, 6]);
    }

    #[test]
    fn small_n_is_rejected_not_panicked() {
        let (rows, failures) = reproduce_rows(&config(vec![3], NumericMode::ExactRational));
        assert!(rows.is_empty());
        assert_eq!(failures.len(), 1);
        assert_eq!(failures[0].0, 3);
    }
}
