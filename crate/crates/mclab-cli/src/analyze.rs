//! Per-chain quantity reports: parses the requested quantity names,
//! computes each one on a loaded chain, and assembles a single JSON
//! object keyed by quantity.

use mclab_core::curvature::min_ollivier_curvature_bd;
use mclab_core::io::LoadedChain;
use mclab_core::{
    bakry_emery_curvature, capacity_general, isocap_bound, lsi_constant, min_ollivier_curvature,
    modified_lsi_constant, relation_audit, spectral_gap, CapacityProblem, CurvatureMethod, Error,
    MarkovChain, Measure, OptimizerOptions, Result,
};
use serde_json::{json, Map, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    Pi,
    Lambda,
    Kappa,
    Kbe,
    Lsi,
    Mlsi,
    Audit,
    Capacity,
    Diameter,
    Sparsity,
}

const VALID_HINT: &str = "pi, lambda, kappa, kbe, lsi, mlsi, audit, capacity, diameter, sparsity";

impl Quantity {
    pub fn parse_list(text: &str) -> Result<Vec<Quantity>> {
        text.split(',')
            .map(|part| match part.trim() {
                "pi" => Ok(Quantity::Pi),
                "lambda" => Ok(Quantity::Lambda),
                "kappa" => Ok(Quantity::Kappa),
                "kbe" => Ok(Quantity::Kbe),
                "lsi" => Ok(Quantity::Lsi),
                "mlsi" => Ok(Quantity::Mlsi),
                "audit" => Ok(Quantity::Audit),
                "capacity" => Ok(Quantity::Capacity),
                "diameter" => Ok(Quantity::Diameter),
                "sparsity" => Ok(Quantity::Sparsity),
                other => Err(Error::Parse(format!(
                    "unknown quantity {other:?}; valid quantities: {VALID_HINT}"
                ))),
            })
            .collect()
    }

    fn key(self) -> &'static str {
        match self {
            Quantity::Pi => "pi",
            Quantity::Lambda => "lambda",
            Quantity::Kappa => "kappa",
            Quantity::Kbe => "kbe",
            Quantity::Lsi => "lsi",
            Quantity::Mlsi => "mlsi",
            Quantity::Audit => "audit",
            Quantity::Capacity => "capacity",
            Quantity::Diameter => "diameter",
            Quantity::Sparsity => "sparsity",
        }
    }
}

#[derive(Debug, Clone)]
pub struct AnalyzeRequest {
    pub quantities: Vec<Quantity>,
    pub a: Option<Vec<usize>>,
    pub b: Option<Vec<usize>>,
    pub seed: u64,
}

pub fn analyze(loaded: &LoadedChain, req: &AnalyzeRequest) -> Result<Value> {
    let mut dense: Option<MarkovChain> = None;
    let mut out = Map::new();
    for &q in &req.quantities {
        let value = match q {
            Quantity::Pi => {
                let pi = stationary_of(loaded);
                json!({"weights": pi.weights(), "log_weights": pi.log_weights()})
            }
            Quantity::Lambda => json!(spectral_gap(ensure(loaded, &mut dense)?)?),
            Quantity::Kappa => {
                let report = match loaded {
                    LoadedChain::BirthDeath(bd) => min_ollivier_curvature_bd(bd)?,
                    LoadedChain::General(_) => {
                        min_ollivier_curvature(ensure(loaded, &mut dense)?, CurvatureMethod::Lp)?
                    }
                };
                serde_json::to_value(&report).expect("report serializes")
            }
            Quantity::Kbe => {
                let chain = ensure(loaded, &mut dense)?;
                let vertices = (1..=chain.m())
                    .map(|x| bakry_emery_curvature(chain, x))
                    .collect::<Result<Vec<f64>>>()?;
                let min = vertices.iter().cloned().fold(f64::INFINITY, f64::min);
                json!({"min": min, "vertices": vertices})
            }
            Quantity::Lsi => {
                let result = lsi_constant(ensure(loaded, &mut dense)?, &opts(req.seed))?;
                serde_json::to_value(&result).expect("result serializes")
            }
            Quantity::Mlsi => {
                let result = modified_lsi_constant(ensure(loaded, &mut dense)?, &opts(req.seed))?;
                serde_json::to_value(&result).expect("result serializes")
            }
            Quantity::Audit => {
                let audit = relation_audit(ensure(loaded, &mut dense)?, &opts(req.seed))?;
                serde_json::to_value(&audit).expect("audit serializes")
            }
            Quantity::Capacity => capacity_value(loaded, &mut dense, req)?,
            Quantity::Diameter => json!(ensure(loaded, &mut dense)?.diameter()),
            Quantity::Sparsity => match loaded {
                LoadedChain::BirthDeath(bd) => json!(bd.sparsity()),
                LoadedChain::General(chain) => json!(chain.sparsity()),
            },
        };
        out.insert(q.key().to_string(), value);
    }
    Ok(Value::Object(out))
}

fn opts(seed: u64) -> OptimizerOptions {
    OptimizerOptions {
        seed,
        ..OptimizerOptions::default()
    }
}

fn ensure<'a>(loaded: &LoadedChain, slot: &'a mut Option<MarkovChain>) -> Result<&'a MarkovChain> {
    if slot.is_none() {
        *slot = Some(loaded.to_chain()?);
    }
    Ok(slot.as_ref().expect("just filled"))
}

fn stationary_of(loaded: &LoadedChain) -> Measure {
    match loaded {
        LoadedChain::BirthDeath(bd) => bd.stationary(),
        LoadedChain::General(chain) => chain.pi().clone(),
    }
}

fn capacity_value(
    loaded: &LoadedChain,
    slot: &mut Option<MarkovChain>,
    req: &AnalyzeRequest,
) -> Result<Value> {
    let (a, b) = match (&req.a, &req.b) {
        (Some(a), Some(b)) => (a.clone(), b.clone()),
        _ => {
            return Err(Error::Domain(
                "the capacity quantity needs both sets, e.g. --A 1 --B 8..12".into(),
            ))
        }
    };
    let chain = ensure(loaded, slot)?;
    let problem = CapacityProblem::new(chain.m(), a, b)?;
    let cap = capacity_general(chain, &problem)?;
    let pi = stationary_of(loaded);
    let cap_log = cap.ln();
    let pi_b_log = pi.log_mass(problem.b());
    Ok(json!({
        "A": problem.a(),
        "B": problem.b(),
        "cap": cap,
        "cap_log": cap_log,
        "piB_log": pi_b_log,
        "bound": isocap_bound(cap_log, pi_b_log),
        "valid": pi.log_mass(problem.a()) >= 0.5f64.ln(),
    }))
}
