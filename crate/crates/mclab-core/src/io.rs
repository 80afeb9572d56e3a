//! Reading and writing chain descriptions.
//!
//! A chain file is a JSON object with exactly one of two keys:
//!
//! ```json
//! {"kernel": [[0.5, 0.5], [0.25, 0.75]]}
//! {"birth_death": {"up": ["1/4", "1/8"], "down": [0.25, "1/2"]}}
//! ```
//!
//! Every numeric value may be a JSON number or a rational string
//! `"p/q"`. A birth-death description containing at least one rational
//! string is loaded in exact mode (numbers are promoted to exact
//! dyadic rationals); all-numeric descriptions stay in `f64`. General
//! kernels always load as `f64`; rational strings in them are parsed
//! exactly and then rounded once.

use std::path::Path;

use num::BigRational;
use serde::{Deserialize, Serialize};

use crate::chain::{BirthDeathChain, MarkovChain};
use crate::error::{Error, Result};
use crate::rational::{format_rational, parse_rational, rat_to_f64};

/// A chain parsed from a file, keeping the birth-death structure (and
/// exact rates when the file used rational strings) if the file
/// provided one.
#[derive(Debug, Clone)]
pub enum LoadedChain {
    General(MarkovChain),
    BirthDeath(BirthDeathChain),
}

impl LoadedChain {
    /// The expanded kernel, whichever way the chain was described.
    pub fn to_chain(&self) -> Result<MarkovChain> {
        match self {
            LoadedChain::General(c) => Ok(c.clone()),
            LoadedChain::BirthDeath(bd) => bd.to_chain(),
        }
    }

    pub fn as_birth_death(&self) -> Option<&BirthDeathChain> {
        match self {
            LoadedChain::BirthDeath(bd) => Some(bd),
            LoadedChain::General(_) => None,
        }
    }

    /// Whether exact rational rates are available.
    pub fn is_exact(&self) -> bool {
        matches!(self, LoadedChain::BirthDeath(bd) if bd.exact().is_some())
    }

    pub fn m(&self) -> usize {
        match self {
            LoadedChain::General(c) => c.m(),
            LoadedChain::BirthDeath(bd) => bd.m(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum NumberOrRational {
    Num(f64),
    Rational(String),
}

impl NumberOrRational {
    fn is_rational_string(&self) -> bool {
        matches!(self, NumberOrRational::Rational(_))
    }

    fn to_f64(&self) -> Result<f64> {
        match self {
            NumberOrRational::Num(x) => Ok(*x),
            NumberOrRational::Rational(s) => Ok(rat_to_f64(&parse_rational(s)?)),
        }
    }

    fn to_exact(&self) -> Result<BigRational> {
        match self {
            NumberOrRational::Num(x) => BigRational::from_float(*x)
                .ok_or_else(|| Error::Parse(format!("{x} is not a finite rate"))),
            NumberOrRational::Rational(s) => parse_rational(s),
        }
    }
}

#[derive(Debug, Deserialize)]
struct BirthDeathFile {
    up: Vec<NumberOrRational>,
    down: Vec<NumberOrRational>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChainFile {
    kernel: Option<Vec<Vec<NumberOrRational>>>,
    birth_death: Option<BirthDeathFile>,
}

/// Parses a chain from JSON text.
pub fn read_chain_json(text: &str) -> Result<LoadedChain> {
    let file: ChainFile =
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("bad chain file: {e}")))?;
    match (file.kernel, file.birth_death) {
        (Some(_), Some(_)) => Err(Error::Parse(
            "chain file must have exactly one of \"kernel\" and \"birth_death\"".into(),
        )),
        (None, None) => Err(Error::Parse(
            "chain file needs a \"kernel\" or a \"birth_death\" entry".into(),
        )),
        (Some(rows), None) => {
            let m = rows.len();
            if rows.iter().any(|r| r.len() != m) {
                return Err(Error::Parse(format!(
                    "kernel must be square, got {m} rows of lengths {:?}",
                    rows.iter().map(|r| r.len()).collect::<Vec<_>>()
                )));
            }
            let mut p = nalgebra::DMatrix::<f64>::zeros(m, m);
            for (i, row) in rows.iter().enumerate() {
                for (j, v) in row.iter().enumerate() {
                    p[(i, j)] = v.to_f64()?;
                }
            }
            Ok(LoadedChain::General(MarkovChain::new(p)?))
        }
        (None, Some(bd)) => {
            let exact = bd.up.iter().chain(bd.down.iter()).any(|v| v.is_rational_string());
            if exact {
                let up = bd.up.iter().map(|v| v.to_exact()).collect::<Result<_>>()?;
                let down = bd.down.iter().map(|v| v.to_exact()).collect::<Result<_>>()?;
                Ok(LoadedChain::BirthDeath(BirthDeathChain::new_exact(up, down)?))
            } else {
                let up = bd.up.iter().map(|v| v.to_f64()).collect::<Result<_>>()?;
                let down = bd.down.iter().map(|v| v.to_f64()).collect::<Result<_>>()?;
                Ok(LoadedChain::BirthDeath(BirthDeathChain::new(up, down)?))
            }
        }
    }
}

/// Reads and parses a chain file.
pub fn read_chain_file(path: impl AsRef<Path>) -> Result<LoadedChain> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Parse(format!("cannot read {}: {e}", path.display())))?;
    read_chain_json(&text)
}

/// Canonical JSON form: exact rates as reduced `"p/q"` strings, float
/// rates as numbers, kernels as number matrices.
pub fn write_chain_json(chain: &LoadedChain) -> String {
    let value = match chain {
        LoadedChain::General(c) => {
            let m = c.m();
            let rows: Vec<Vec<f64>> = (1..=m)
                .map(|x| (1..=m).map(|y| c.p(x, y)).collect())
                .collect();
            serde_json::json!({ "kernel": rows })
        }
        LoadedChain::BirthDeath(bd) => match bd.exact() {
            Some(ex) => {
                let up: Vec<String> =
                    (1..bd.m()).map(|k| format_rational(&ex.up(k))).collect();
                let down: Vec<String> =
                    (2..=bd.m()).map(|k| format_rational(&ex.down(k))).collect();
                serde_json::json!({ "birth_death": { "up": up, "down": down } })
            }
            None => serde_json::json!({
                "birth_death": { "up": bd.up_rates(), "down": bd.down_rates() }
            }),
        },
    };
    serde_json::to_string_pretty(&value).expect("chain value serializes")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{counterexample_chain, NumericMode};
    use crate::rational::rat;
    use approx::assert_relative_eq;

    #[test]
    fn float_birth_death_round_trips() {
        let text = r#"{"birth_death": {"up": [0.25, 0.125], "down": [0.25, 0.5]}}"#;
        let loaded = read_chain_json(text).unwrap();
        assert!(!loaded.is_exact());
        let bd = loaded.as_birth_death().unwrap();
        assert_eq!(bd.up_rates(), &[0.25, 0.125]);
        let again = read_chain_json(&write_chain_json(&loaded)).unwrap();
        assert_eq!(again.as_birth_death().unwrap().up_rates(), bd.up_rates());
        assert_eq!(again.as_birth_death().unwrap().down_rates(), bd.down_rates());
    }

    #[test]
    fn rational_strings_trigger_exact_mode() {
        let text = r#"{"birth_death": {"up": ["1/4", 0.125], "down": [0.25, "1/2"]}}"#;
        let loaded = read_chain_json(text).unwrap();
        assert!(loaded.is_exact());
        let ex = loaded.as_birth_death().unwrap().exact().unwrap();
        assert_eq!(ex.up(1), rat(1, 4));
        // The float 0.125 is dyadic, so promotion is exact.
        assert_eq!(ex.up(2), rat(1, 8));
        assert_eq!(ex.down(3), rat(1, 2));
    }

    #[test]
    fn exact_chains_write_reduced_rational_strings() {
        let bd = counterexample_chain(4, NumericMode::ExactRational).unwrap();
        let text = write_chain_json(&LoadedChain::BirthDeath(bd));
        let value: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(value["birth_death"]["up"][0], "1/64");
        assert_eq!(value["birth_death"]["down"][0], "7/64");
        let reloaded = read_chain_json(&text).unwrap();
        assert!(reloaded.is_exact());
        let ex = reloaded.as_birth_death().unwrap().exact().unwrap();
        assert_eq!(ex.kappa_min(), rat(1, 64));
    }

    #[test]
    fn kernel_files_load_as_general_chains() {
        let text = r#"{"kernel": [[0.5, 0.5], ["1/4", "3/4"]]}"#;
        let loaded = read_chain_json(text).unwrap();
        assert!(!loaded.is_exact());
        let chain = loaded.to_chain().unwrap();
        assert_eq!(chain.m(), 2);
        assert_relative_eq!(chain.p(2, 1), 0.25);
        let again = read_chain_json(&write_chain_json(&loaded)).unwrap();
        assert_relative_eq!(again.to_chain().unwrap().p(2, 1), 0.25);
    }

    #[test]
    fn malformed_files_are_rejected() {
        for text in [
            "{}",
            r#"{"kernel": [[1.0]], "birth_death": {"up": [0.5], "down": [0.5]}}"#,
            r#"{"kernel": [[0.5, 0.5], [1.0]]}"#,
            r#"{"birth_death": {"up": ["1/0"], "down": [0.5]}}"#,
            r#"{"birth_death": {"up": ["garbage"], "down": [0.5]}}"#,
            r#"{"unexpected": 3}"#,
            "not json",
        ] {
            assert!(
                matches!(read_chain_json(text), Err(Error::Parse(_))),
                "accepted: {text}"
            );
        }
    }

    #[test]
    fn kernel_validation_errors_pass_through() {
        // Rows that do not sum to 1 are a validation error, not a parse
        // error.
        let text = r#"{"kernel": [[0.5, 0.4], [0.25, 0.75]]}"#;
        assert!(matches!(
            read_chain_json(text),
            Err(Error::RowSum { row: 1, .. })
        ));
    }

    #[test]
    fn reading_files_from_disk() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("chain.json");
        let bd = counterexample_chain(4, NumericMode::ExactRational).unwrap();
        std::fs::write(&path, write_chain_json(&LoadedChain::BirthDeath(bd))).unwrap();
        let loaded = read_chain_file(&path).unwrap();
        assert_eq!(loaded.m(), 12);
        assert!(loaded.is_exact());
        assert!(read_chain_file(dir.path().join("missing.json")).is_err());
    }
}
