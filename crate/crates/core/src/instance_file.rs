//! JSON instance files.
//!
//! ```json
//! {
//!   "label": "demand-reduction",
//!   "cost": {"kind": "marginals", "values": ["9"], "extension": "repeat-last"},
//!   "firms": [
//!     {"scenarios": [{"prob": "1", "marginals": ["10", "10"]}]},
//!     {"scenarios": [{"prob": "1", "marginals": ["6", "1"]}]}
//!   ]
//! }
//! ```
//!
//! Rationals are strings, `"p/q"` or integer. A `joint_scenarios` array of
//! `{"prob", "valuations": [[...], ...]}` replaces the product of `firms`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market::{
    self, CostCurve, Extension, FirmDistribution, JointScenario, MarginalVector, MarketInstance, Scenario,
};
use crate::rational::{self, Rational};

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceDoc {
    label: String,
    cost: CostDoc,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    firms: Vec<FirmDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    joint_scenarios: Option<Vec<JointDoc>>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
enum CostDoc {
    Quadratic {
        a: String,
    },
    Marginals {
        values: Vec<String>,
        #[serde(default)]
        extension: ExtensionDoc,
    },
}

#[derive(Serialize, Deserialize, Default, Clone, Copy)]
#[serde(rename_all = "kebab-case")]
enum ExtensionDoc {
    #[default]
    RepeatLast,
    Error,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FirmDoc {
    scenarios: Vec<ScenarioDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioDoc {
    prob: String,
    marginals: Vec<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JointDoc {
    prob: String,
    valuations: Vec<Vec<String>>,
}

fn num(text: &str, at: &str) -> Result<Rational> {
    rational::parse(text).ok_or_else(|| Error::Parse(format!("{at}: `{text}` is not an integer or p/q rational")))
}

fn nums(texts: &[String], at: &str) -> Result<Vec<Rational>> {
    texts
        .iter()
        .enumerate()
        .map(|(j, t)| num(t, &format!("{at}[{j}]")))
        .collect()
}

/// Parses and validates an instance document.
pub fn parse(text: &str) -> Result<MarketInstance> {
    let doc: InstanceDoc = serde_json::from_str(text).map_err(|e| {
        let line = text.lines().nth(e.line().saturating_sub(1)).unwrap_or("").trim();
        Error::Parse(format!("line {}, column {}: {e}\n  | {line}", e.line(), e.column()))
    })?;
    let market = from_doc(doc)?;
    market::validate(&market).into_result()?;
    Ok(market)
}

fn from_doc(doc: InstanceDoc) -> Result<MarketInstance> {
    let cost = match doc.cost {
        CostDoc::Quadratic { a } => CostCurve::quadratic(num(&a, "cost.a")?),
        CostDoc::Marginals { values, extension } => CostCurve::explicit(
            nums(&values, "cost.values")?,
            match extension {
                ExtensionDoc::RepeatLast => Extension::RepeatLast,
                ExtensionDoc::Error => Extension::Error,
            },
        ),
    };
    let firms = doc
        .firms
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let scenarios = f
                .scenarios
                .iter()
                .enumerate()
                .map(|(s, sc)| {
                    let at = format!("firms[{i}].scenarios[{s}]");
                    Ok(Scenario {
                        prob: num(&sc.prob, &format!("{at}.prob"))?,
                        valuation: MarginalVector::from_raw(nums(&sc.marginals, &format!("{at}.marginals"))?),
                    })
                })
                .collect::<Result<_>>()?;
            Ok(FirmDistribution { scenarios })
        })
        .collect::<Result<_>>()?;
    let joint = doc
        .joint_scenarios
        .map(|rows| {
            rows.iter()
                .enumerate()
                .map(|(r, row)| {
                    let at = format!("joint_scenarios[{r}]");
                    Ok(JointScenario {
                        prob: num(&row.prob, &format!("{at}.prob"))?,
                        valuations: row
                            .valuations
                            .iter()
                            .enumerate()
                            .map(|(i, v)| nums(v, &format!("{at}.valuations[{i}]")).map(MarginalVector::from_raw))
                            .collect::<Result<_>>()?,
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .transpose()?;
    Ok(MarketInstance {
        label: doc.label,
        firms,
        cost,
        joint,
    })
}

fn strings(values: &[Rational]) -> Vec<String> {
    values.iter().map(rational::to_exact).collect()
}

fn to_doc(market: &MarketInstance) -> InstanceDoc {
    let cost = match &market.cost {
        CostCurve::Quadratic { a } => CostDoc::Quadratic {
            a: rational::to_exact(a),
        },
        CostCurve::Explicit { marginals, extension } => CostDoc::Marginals {
            values: strings(marginals),
            extension: match extension {
                Extension::RepeatLast => ExtensionDoc::RepeatLast,
                Extension::Error => ExtensionDoc::Error,
            },
        },
    };
    InstanceDoc {
        label: market.label.clone(),
        cost,
        firms: market
            .firms
            .iter()
            .map(|f| FirmDoc {
                scenarios: f
                    .scenarios
                    .iter()
                    .map(|s| ScenarioDoc {
                        prob: rational::to_exact(&s.prob),
                        marginals: strings(s.valuation.marginals()),
                    })
                    .collect(),
            })
            .collect(),
        joint_scenarios: market.joint.as_ref().map(|rows| {
            rows.iter()
                .map(|r| JointDoc {
                    prob: rational::to_exact(&r.prob),
                    valuations: r.valuations.iter().map(|v| strings(v.marginals())).collect(),
                })
                .collect()
        }),
    }
}

/// Pretty-printed JSON with a trailing newline.
pub fn to_string(market: &MarketInstance) -> String {
    let mut text = serde_json::to_string_pretty(&to_doc(market)).expect("instance documents always serialize");
    text.push('\n');
    text
}

pub fn read(path: &Path) -> Result<MarketInstance> {
    let text = fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    parse(&text).map_err(|e| match e {
        Error::Parse(msg) => Error::Parse(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn write(path: &Path, market: &MarketInstance) -> Result<()> {
    fs::write(path, to_string(market)).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate;
    use crate::rational::ratio;

    #[test]
    fn round_trip_builtin_instances() {
        for m in [
            generate::demand_reduction(),
            generate::logscale(3).unwrap(),
            generate::random(&generate::RandomSpec::new(7, 3, 2, 4)).unwrap(),
        ] {
            let text = to_string(&m);
            assert_eq!(parse(&text).unwrap(), m);
            assert_eq!(to_string(&parse(&text).unwrap()), text);
        }
    }

    #[test]
    fn parses_the_documented_example() {
        let text = r#"{
  "label": "demand-reduction",
  "cost": {"kind": "marginals", "values": ["9"], "extension": "repeat-last"},
  "firms": [
    {"scenarios": [{"prob": "1", "marginals": ["10", "10"]}]},
    {"scenarios": [{"prob": "1", "marginals": ["6", "1"]}]}
  ]
}"#;
        assert_eq!(parse(text).unwrap(), generate::demand_reduction());
    }

    #[test]
    fn joint_table_round_trips() {
        let text = r#"{"label": "c", "cost": {"kind": "quadratic", "a": "1/2"},
            "joint_scenarios": [
              {"prob": "1/3", "valuations": [["4"], ["3", "1"]]},
              {"prob": "2/3", "valuations": [["1"], []]}
            ]}"#;
        let m = parse(text).unwrap();
        assert!(!m.is_product_form());
        assert_eq!(m.cost, CostCurve::quadratic(ratio(1, 2)));
        assert_eq!(parse(&to_string(&m)).unwrap(), m);
    }

    #[test]
    fn syntax_errors_carry_line_context() {
        let text = "{\n  \"label\": \"x\",\n  \"cost\": {\"kind\": \"quadratic\" \"a\": \"1\"}\n}";
        let msg = parse(text).unwrap_err().to_string();
        assert!(msg.contains("line 3"), "{msg}");
        assert!(msg.contains("\"cost\""), "{msg}");
    }

    #[test]
    fn bad_rationals_and_invalid_instances_are_rejected() {
        let bad = r#"{"label": "x", "cost": {"kind": "quadratic", "a": "0.5"}, "firms": []}"#;
        assert!(parse(bad).unwrap_err().to_string().contains("cost.a"));

        let increasing = r#"{"label": "x", "cost": {"kind": "quadratic", "a": "1"},
            "firms": [{"scenarios": [{"prob": "1", "marginals": ["1", "3"]}]}]}"#;
        match parse(increasing) {
            Err(Error::Validation(report)) => {
                assert!(report.to_string().contains("firms[0].scenarios[0].marginals[1]"))
            }
            other => panic!("{other:?}"),
        }
    }
}
