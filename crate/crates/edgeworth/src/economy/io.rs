//! JSON serialization of economies.
//!
//! The on-disk shape is a flat document listing the goods, their supply, and
//! one entry per consumer pairing a utility description with either an
//! `endowment` bundle or an `income` share:
//!
//! ```json
//! {
//!   "goods": ["x", "y"],
//!   "supply": [1.0, 1.0],
//!   "consumers": [
//!     { "utility": { "family": "fenchel" }, "income": 0.5 },
//!     { "utility": { "family": "cobb-douglas",
//!                    "params": { "exponents": [1.0, 0.5] } },
//!       "endowment": [0.5, 0.5] }
//!   ]
//! }
//! ```
//!
//! Families and their `params`:
//!
//! | family                   | params                                  |
//! |--------------------------|-----------------------------------------|
//! | `cobb-douglas`           | `exponents`: positive array, one per good |
//! | `leontief`               | `requirements`: positive array           |
//! | `max-linear`             | `coefficients`: nonnegative array        |
//! | `linear`                 | `coefficients`: nonnegative array        |
//! | `fenchel`                | none (two goods only)                    |
//! | `custom-expression`      | `expression`: string over `x1`, `x2`, …  |
//! | `quasiconcavified-wrapper` | `inner`: a nested utility description  |

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::{Economy, EconomyError, Ownership, Quasiconcavified, Utility, expr};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EconomyDoc {
    goods: Vec<String>,
    supply: Vec<f64>,
    consumers: Vec<ConsumerDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConsumerDoc {
    utility: UtilityDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    endowment: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    income: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct UtilityDoc {
    family: String,
    #[serde(default, skip_serializing_if = "Map::is_empty")]
    params: Map<String, Value>,
}

/// Parse and validate an economy from JSON text. Syntax errors keep
/// serde_json's line/column diagnostics; semantic errors name the offending
/// JSON path.
pub fn economy_from_json(text: &str) -> Result<Economy, EconomyError> {
    let doc: EconomyDoc = serde_json::from_str(text)?;
    let economy = economy_from_doc(doc)?;
    economy.validate()?;
    Ok(economy)
}

/// Serialize an economy to pretty-printed JSON that `economy_from_json`
/// accepts back unchanged.
pub fn economy_to_json(economy: &Economy) -> String {
    let consumers: Vec<ConsumerDoc> = economy
        .utilities
        .iter()
        .enumerate()
        .map(|(i, u)| ConsumerDoc {
            utility: utility_to_doc(u),
            endowment: match &economy.ownership {
                Ownership::Endowments(omega) => Some(omega[i].clone()),
                Ownership::Incomes(_) => None,
            },
            income: match &economy.ownership {
                Ownership::Incomes(m) => Some(m[i]),
                Ownership::Endowments(_) => None,
            },
        })
        .collect();
    let doc = EconomyDoc {
        goods: economy.goods.clone(),
        supply: economy.supply.clone(),
        consumers,
    };
    serde_json::to_string_pretty(&doc).expect("economy documents are plain data")
}

fn economy_from_doc(doc: EconomyDoc) -> Result<Economy, EconomyError> {
    let mut utilities = Vec::with_capacity(doc.consumers.len());
    let mut endowments: Vec<Option<Vec<f64>>> = Vec::new();
    let mut incomes: Vec<Option<f64>> = Vec::new();
    for (i, c) in doc.consumers.into_iter().enumerate() {
        let path = format!("consumers[{i}].utility");
        let u = utility_from_doc(c.utility, &doc.supply)
            .map_err(|e| e.in_context(path))?;
        utilities.push(u);
        if c.endowment.is_some() && c.income.is_some() {
            return Err(EconomyError::InvalidParameter {
                consumer: i,
                reason: "specify either an endowment or an income, not both".into(),
            });
        }
        endowments.push(c.endowment);
        incomes.push(c.income);
    }
    let ownership = if endowments.iter().all(Option::is_some) {
        Ownership::Endowments(endowments.into_iter().map(Option::unwrap).collect())
    } else if incomes.iter().all(Option::is_some) {
        Ownership::Incomes(incomes.into_iter().map(Option::unwrap).collect())
    } else {
        return Err(EconomyError::MixedOwnership);
    };
    Ok(Economy { goods: doc.goods, supply: doc.supply, utilities, ownership })
}

fn numeric_array(params: &Map<String, Value>, key: &str) -> Result<Vec<f64>, EconomyError> {
    let value = params.get(key).ok_or_else(|| EconomyError::InvalidParameter {
        consumer: usize::MAX,
        reason: format!("missing required param '{key}'"),
    })?;
    let arr = value.as_array().ok_or_else(|| EconomyError::InvalidParameter {
        consumer: usize::MAX,
        reason: format!("param '{key}' must be an array of numbers"),
    })?;
    arr.iter()
        .map(|v| {
            v.as_f64().ok_or_else(|| EconomyError::InvalidParameter {
                consumer: usize::MAX,
                reason: format!("param '{key}' must contain only numbers"),
            })
        })
        .collect()
}

fn utility_from_doc(doc: UtilityDoc, supply: &[f64]) -> Result<Utility, EconomyError> {
    match doc.family.as_str() {
        "cobb-douglas" => Ok(Utility::CobbDouglas { exponents: numeric_array(&doc.params, "exponents")? }),
        "leontief" => Ok(Utility::Leontief { requirements: numeric_array(&doc.params, "requirements")? }),
        "max-linear" => Ok(Utility::MaxLinear { coefficients: numeric_array(&doc.params, "coefficients")? }),
        "linear" => Ok(Utility::Linear { coefficients: numeric_array(&doc.params, "coefficients")? }),
        "fenchel" => Ok(Utility::Fenchel),
        "custom-expression" => {
            let text = doc
                .params
                .get("expression")
                .and_then(Value::as_str)
                .ok_or_else(|| EconomyError::InvalidParameter {
                    consumer: usize::MAX,
                    reason: "custom-expression needs a string param 'expression'".into(),
                })?;
            let ast = expr::parse(text)?;
            Ok(Utility::Custom { text: text.to_string(), ast })
        }
        "quasiconcavified-wrapper" => {
            let inner_value = doc.params.get("inner").ok_or_else(|| {
                EconomyError::InvalidParameter {
                    consumer: usize::MAX,
                    reason: "quasiconcavified-wrapper needs a nested 'inner' utility".into(),
                }
            })?;
            let inner_doc: UtilityDoc = serde_json::from_value(inner_value.clone())?;
            let inner = utility_from_doc(inner_doc, supply)?;
            Ok(Utility::Quasiconcavified(Quasiconcavified::new(inner, supply.to_vec())))
        }
        other => Err(EconomyError::UnknownFamily { family: other.to_string() }),
    }
}

fn utility_to_doc(u: &Utility) -> UtilityDoc {
    let mut params = Map::new();
    let family = u.family().to_string();
    match u {
        Utility::CobbDouglas { exponents } => {
            params.insert("exponents".into(), json_numbers(exponents));
        }
        Utility::Leontief { requirements } => {
            params.insert("requirements".into(), json_numbers(requirements));
        }
        Utility::MaxLinear { coefficients } | Utility::Linear { coefficients } => {
            params.insert("coefficients".into(), json_numbers(coefficients));
        }
        Utility::Fenchel => {}
        Utility::Custom { text, .. } => {
            params.insert("expression".into(), Value::String(text.clone()));
        }
        Utility::Quasiconcavified(q) => {
            let inner = utility_to_doc(&q.inner);
            params.insert(
                "inner".into(),
                serde_json::to_value(inner).expect("utility docs are plain data"),
            );
        }
    }
    UtilityDoc { family, params }
}

fn json_numbers(values: &[f64]) -> Value {
    Value::Array(values.iter().map(|v| Value::from(*v)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    const FENCHEL_DOC: &str = r#"{
        "goods": ["x", "y"],
        "supply": [1.0, 1.0],
        "consumers": [
            { "utility": { "family": "fenchel" }, "income": 0.5 },
            { "utility": { "family": "fenchel" }, "income": 0.5 }
        ]
    }"#;

    #[test]
    fn parses_and_round_trips() {
        let economy = economy_from_json(FENCHEL_DOC).unwrap();
        assert_eq!(economy.n(), 2);
        assert!(matches!(economy.ownership, Ownership::Incomes(_)));
        let text = economy_to_json(&economy);
        let again = economy_from_json(&text).unwrap();
        assert_eq!(economy, again);
    }

    #[test]
    fn round_trips_every_family() {
        let doc = r#"{
            "goods": ["x", "y"],
            "supply": [2.0, 2.0],
            "consumers": [
                { "utility": { "family": "cobb-douglas", "params": { "exponents": [1.0, 0.5] } },
                  "endowment": [1.0, 0.0] },
                { "utility": { "family": "leontief", "params": { "requirements": [1.0, 2.0] } },
                  "endowment": [0.5, 1.0] },
                { "utility": { "family": "quasiconcavified-wrapper",
                               "params": { "inner": { "family": "max-linear",
                                                      "params": { "coefficients": [2.0, 1.0] } } } },
                  "endowment": [0.25, 0.5] },
                { "utility": { "family": "custom-expression",
                               "params": { "expression": "min(x, 2*y)" } },
                  "endowment": [0.25, 0.5] }
            ]
        }"#;
        let economy = economy_from_json(doc).unwrap();
        let again = economy_from_json(&economy_to_json(&economy)).unwrap();
        assert_eq!(economy, again);
    }

    #[test]
    fn rejects_unknown_family() {
        let doc = FENCHEL_DOC.replace("fenchel", "translog");
        match economy_from_json(&doc) {
            Err(EconomyError::Context { source, .. }) => {
                assert!(matches!(*source, EconomyError::UnknownFamily { .. }));
            }
            other => panic!("expected unknown family, got {other:?}"),
        }
    }

    #[test]
    fn rejects_mixed_ownership() {
        let doc = r#"{
            "goods": ["x", "y"],
            "supply": [1.0, 1.0],
            "consumers": [
                { "utility": { "family": "fenchel" }, "income": 0.5 },
                { "utility": { "family": "fenchel" }, "endowment": [0.0, 1.0] }
            ]
        }"#;
        assert!(matches!(economy_from_json(doc), Err(EconomyError::MixedOwnership)));
    }

    #[test]
    fn syntax_errors_carry_line_numbers() {
        let doc = "{\n  \"goods\": [\"x\", \"y\"],\n  \"supply\": [1.0 1.0]\n}";
        let err = economy_from_json(doc).unwrap_err();
        assert!(err.to_string().contains("line 3"), "got: {err}");
    }
}
