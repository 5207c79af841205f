//! File formats: rules, torus configurations, catalogs and verdicts.
//!
//! All formats are JSON with exact integers. Rule files carry a `kind` of
//! `"dense"` (full table in configuration-index order) or `"parametric"`
//! (monomer and selected-dimer values keyed by direction strings). Unknown
//! keys are rejected.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::conservation::Verdict;
use crate::enumeration::CatalogEntry;
use crate::error::{Error, Result};
use crate::lattice::{direction_set, Direction, LambdaSelection, OmegaPair};
use crate::rules::{DenseRule, ParametricRule, StateSet};
use crate::simulate::{OracleVerdict, TorusConfiguration};

/// A rule in either representation.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Rule {
    Dense(DenseRule),
    Parametric(ParametricRule),
}

impl Rule {
    pub fn dimension(&self) -> usize {
        match self {
            Rule::Dense(f) => f.dimension(),
            Rule::Parametric(p) => p.dimension(),
        }
    }

    pub fn states(&self) -> &StateSet {
        match self {
            Rule::Dense(f) => f.states(),
            Rule::Parametric(p) => p.states(),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RuleFile {
    dimension: usize,
    states: Vec<i64>,
    kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    table: Option<Vec<i64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    eta: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    lambda: Option<Vec<(String, String)>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    monomers: Option<BTreeMap<String, i64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    dimers: Option<BTreeMap<String, i64>>,
}

fn monomer_key(v: Direction, q: i64) -> String {
    format!("{v}:{q}")
}

fn dimer_key(pair: OmegaPair, a: i64, b: i64) -> String {
    format!("{}:{},{}:{}", pair.first(), a, pair.second(), b)
}

/// Serializes a rule to its JSON file form (compact, deterministic).
pub fn rule_to_json(rule: &Rule) -> String {
    let file = match rule {
        Rule::Dense(f) => RuleFile {
            dimension: f.dimension(),
            states: f.states().states().to_vec(),
            kind: "dense".into(),
            table: Some(f.table().to_vec()),
            eta: None,
            lambda: None,
            monomers: None,
            dimers: None,
        },
        Rule::Parametric(p) => {
            let mut monomers = BTreeMap::new();
            for v in direction_set(p.dimension()).expect("valid dimension") {
                for &q in p.states().nonzero() {
                    monomers.insert(monomer_key(v, q), p.monomer_value(v, q));
                }
            }
            let mut dimers = BTreeMap::new();
            for &pair in p.lambda().pairs() {
                for &a in p.states().nonzero() {
                    for &b in p.states().nonzero() {
                        dimers.insert(
                            dimer_key(pair, a, b),
                            p.dimer_value(pair.first(), a, pair.second(), b),
                        );
                    }
                }
            }
            RuleFile {
                dimension: p.dimension(),
                states: p.states().states().to_vec(),
                kind: "parametric".into(),
                table: None,
                eta: Some(p.eta().to_string()),
                lambda: Some(
                    p.lambda()
                        .pairs()
                        .iter()
                        .map(|pr| (pr.first().to_string(), pr.second().to_string()))
                        .collect(),
                ),
                monomers: Some(monomers),
                dimers: Some(dimers),
            }
        }
    };
    serde_json::to_string(&file).expect("serializable")
}

/// Parses a rule file, validating structure, value membership and (for
/// parametric rules) completeness of the parameter maps.
pub fn rule_from_json(s: &str) -> Result<Rule> {
    let file: RuleFile =
        serde_json::from_str(s).map_err(|e| Error::Format(format!("rule file: {e}")))?;
    let states = StateSet::new(file.states)?;
    let dim = file.dimension;
    match file.kind.as_str() {
        "dense" => {
            if file.eta.is_some()
                || file.lambda.is_some()
                || file.monomers.is_some()
                || file.dimers.is_some()
            {
                return Err(Error::Format(
                    "dense rule must carry only \"table\"".into(),
                ));
            }
            let table = file
                .table
                .ok_or_else(|| Error::Format("dense rule needs \"table\"".into()))?;
            Ok(Rule::Dense(DenseRule::new(dim, states, table)?))
        }
        "parametric" => {
            if file.table.is_some() {
                return Err(Error::Format(
                    "parametric rule must not carry \"table\"".into(),
                ));
            }
            let eta: Direction = file
                .eta
                .ok_or_else(|| Error::Format("parametric rule needs \"eta\"".into()))?
                .parse()?;
            if eta.index() > 2 * dim {
                return Err(Error::InvalidDirection {
                    index: eta.index(),
                    dim,
                });
            }
            let lambda_pairs = file
                .lambda
                .ok_or_else(|| Error::Format("parametric rule needs \"lambda\"".into()))?;
            let mut pairs = Vec::with_capacity(lambda_pairs.len());
            for (a, b) in &lambda_pairs {
                pairs.push(OmegaPair::new(a.parse()?, b.parse()?, dim)?);
            }
            let lambda = LambdaSelection::new(dim, pairs)?;
            let mut monomers_in = file
                .monomers
                .ok_or_else(|| Error::Format("parametric rule needs \"monomers\"".into()))?;
            let mut dimers_in = file
                .dimers
                .ok_or_else(|| Error::Format("parametric rule needs \"dimers\"".into()))?;

            let mut monomers = Vec::new();
            for v in direction_set(dim)? {
                for &q in states.nonzero() {
                    let key = monomer_key(v, q);
                    let value = monomers_in
                        .remove(&key)
                        .ok_or_else(|| Error::Format(format!("missing monomer {key:?}")))?;
                    monomers.push(value);
                }
            }
            if let Some(extra) = monomers_in.keys().next() {
                return Err(Error::Format(format!("unexpected monomer {extra:?}")));
            }
            let mut dimers = Vec::new();
            for &pair in lambda.pairs() {
                for &a in states.nonzero() {
                    for &b in states.nonzero() {
                        let key = dimer_key(pair, a, b);
                        let value = dimers_in
                            .remove(&key)
                            .ok_or_else(|| Error::Format(format!("missing dimer {key:?}")))?;
                        dimers.push(value);
                    }
                }
            }
            if let Some(extra) = dimers_in.keys().next() {
                return Err(Error::Format(format!("unexpected dimer {extra:?}")));
            }
            Ok(Rule::Parametric(ParametricRule::new(
                dim, states, eta, lambda, monomers, dimers,
            )?))
        }
        other => Err(Error::Format(format!("unknown rule kind {other:?}"))),
    }
}

/// Serializes a torus configuration: `{"shape": [...], "cells": [...]}`.
pub fn config_to_json(x: &TorusConfiguration) -> String {
    serde_json::to_string(x).expect("serializable")
}

pub fn config_from_json(s: &str) -> Result<TorusConfiguration> {
    let x: TorusConfiguration =
        serde_json::from_str(s).map_err(|e| Error::Format(format!("configuration file: {e}")))?;
    TorusConfiguration::new(x.shape.clone(), x.cells)
}

/// One catalog line: the dense rule plus its labels.
pub fn catalog_entry_to_json(entry: &CatalogEntry) -> String {
    let labels: Vec<String> = entry.labels.tags.iter().map(|t| t.to_string()).collect();
    let mut value = serde_json::to_value(&RuleFile {
        dimension: entry.rule.dimension(),
        states: entry.rule.states().states().to_vec(),
        kind: "dense".into(),
        table: Some(entry.rule.table().to_vec()),
        eta: None,
        lambda: None,
        monomers: None,
        dimers: None,
    })
    .expect("serializable");
    value["labels"] = json!(labels);
    value.to_string()
}

/// Parses a catalog line back into a rule, ignoring the labels.
pub fn catalog_entry_from_json(s: &str) -> Result<Rule> {
    let mut value: serde_json::Value =
        serde_json::from_str(s).map_err(|e| Error::Format(format!("catalog line: {e}")))?;
    value
        .as_object_mut()
        .ok_or_else(|| Error::Format("catalog line must be an object".into()))?
        .remove("labels");
    rule_from_json(&value.to_string())
}

/// Per-label rule counts of a catalog.
pub fn label_counts(entries: &[CatalogEntry]) -> BTreeMap<String, usize> {
    let mut counts = BTreeMap::new();
    for entry in entries {
        for tag in &entry.labels.tags {
            *counts.entry(tag.to_string()).or_insert(0) += 1;
        }
    }
    counts
}

/// The catalog summary line.
pub fn catalog_summary_json(entries: &[CatalogEntry]) -> String {
    json!({
        "summary": {
            "count": entries.len(),
            "label_counts": label_counts(entries),
        }
    })
    .to_string()
}

/// A conservation verdict: status, witness configuration and the violated
/// identity.
pub fn verdict_to_json(verdict: &Verdict) -> serde_json::Value {
    match verdict {
        Verdict::Conserving => json!({
            "status": "conserving",
            "witness": serde_json::Value::Null,
            "equation": serde_json::Value::Null,
        }),
        Verdict::Violated(v) => json!({
            "status": "violated",
            "witness": v.config.states(),
            "equation": v.equation.as_str(),
        }),
    }
}

/// An oracle verdict: status plus the violating torus configuration.
pub fn oracle_verdict_to_json(verdict: &OracleVerdict) -> serde_json::Value {
    match verdict {
        OracleVerdict::Conserving => json!({
            "status": "conserving",
            "witness": serde_json::Value::Null,
        }),
        OracleVerdict::Violated { witness } => json!({
            "status": "violated",
            "witness": {
                "shape": witness.shape.dims(),
                "cells": witness.cells,
            },
        }),
    }
}

/// Parses a pair-selection argument of the form `"0,+1;0,+2;+1,+2;+1,-2"`.
pub fn lambda_from_arg(dim: usize, arg: &str) -> Result<LambdaSelection> {
    let mut pairs = Vec::new();
    for part in arg.split(';') {
        let bad = || Error::Format(format!("invalid pair {part:?} (want \"dir,dir\")"));
        let (a, b) = part.split_once(',').ok_or_else(bad)?;
        pairs.push(OmegaPair::new(a.trim().parse()?, b.trim().parse()?, dim)?);
    }
    LambdaSelection::new(dim, pairs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conservation::{extract_params, materialize};
    use crate::enumeration::{enumerate_ncca, EnumerationFilters};
    use crate::lattice::LatticeShape;

    fn d(s: &str) -> Direction {
        s.parse().unwrap()
    }

    #[test]
    fn dense_rule_round_trips() {
        let f = DenseRule::traffic(2, d("+1")).unwrap();
        let json = rule_to_json(&Rule::Dense(f.clone()));
        match rule_from_json(&json).unwrap() {
            Rule::Dense(back) => assert_eq!(back, f),
            _ => panic!("kind changed"),
        }
    }

    #[test]
    fn parametric_rule_round_trips() {
        let f = DenseRule::shift(2, StateSet::new(vec![0, 1, 2]).unwrap(), d("-1")).unwrap();
        let lambda = LambdaSelection::canonical(2).unwrap();
        let p = extract_params(&f, Direction::CENTER, &lambda).unwrap();
        let json = rule_to_json(&Rule::Parametric(p.clone()));
        match rule_from_json(&json).unwrap() {
            Rule::Parametric(back) => {
                assert_eq!(back, p);
                let dense = materialize(&back, back.eta(), &lambda).unwrap();
                assert_eq!(dense, f);
            }
            _ => panic!("kind changed"),
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let f = DenseRule::identity(1, StateSet::new(vec![0, 1]).unwrap()).unwrap();
        let json = rule_to_json(&Rule::Dense(f));
        let mut value: serde_json::Value = serde_json::from_str(&json).unwrap();
        value["surprise"] = json!(1);
        assert!(matches!(
            rule_from_json(&value.to_string()),
            Err(Error::Format(_))
        ));
    }

    #[test]
    fn wrong_field_combinations_are_rejected() {
        let err = rule_from_json(r#"{"dimension":1,"states":[0,1],"kind":"dense"}"#);
        assert!(matches!(err, Err(Error::Format(_))));
        let err = rule_from_json(
            r#"{"dimension":1,"states":[0,1],"kind":"parametric","table":[0,1]}"#,
        );
        assert!(matches!(err, Err(Error::Format(_))));
        let err = rule_from_json(r#"{"dimension":1,"states":[0,1],"kind":"weird"}"#);
        assert!(matches!(err, Err(Error::Format(_))));
    }

    #[test]
    fn incomplete_parameter_maps_are_rejected() {
        let f = DenseRule::identity(1, StateSet::new(vec![0, 1]).unwrap()).unwrap();
        let lambda = LambdaSelection::canonical(1).unwrap();
        let p = extract_params(&f, Direction::CENTER, &lambda).unwrap();
        let json = rule_to_json(&Rule::Parametric(p));
        let mut value: serde_json::Value = serde_json::from_str(&json).unwrap();
        value["monomers"].as_object_mut().unwrap().remove("0:1");
        match rule_from_json(&value.to_string()) {
            Err(Error::Format(msg)) => assert!(msg.contains("missing monomer")),
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn config_round_trips_and_validates_length() {
        let shape = LatticeShape::new(vec![5, 5]).unwrap();
        let x = TorusConfiguration::constant(shape, 1);
        let json = config_to_json(&x);
        assert_eq!(config_from_json(&json).unwrap(), x);
        assert!(config_from_json(r#"{"shape":[5,5],"cells":[0,1]}"#).is_err());
        assert!(config_from_json(r#"{"shape":[5,5],"cells":[],"x":1}"#).is_err());
    }

    #[test]
    fn catalog_lines_parse_back_to_their_rules() {
        let catalog =
            enumerate_ncca(1, &StateSet::new(vec![0, 1]).unwrap(), &EnumerationFilters::default())
                .unwrap();
        for entry in &catalog {
            let line = catalog_entry_to_json(entry);
            match catalog_entry_from_json(&line).unwrap() {
                Rule::Dense(back) => assert_eq!(back, entry.rule),
                _ => panic!("catalog lines are dense"),
            }
        }
        let summary = catalog_summary_json(&catalog);
        let v: serde_json::Value = serde_json::from_str(&summary).unwrap();
        assert_eq!(v["summary"]["count"], 5);
    }

    #[test]
    fn lambda_arg_parses() {
        let l = lambda_from_arg(2, "0,+1;0,-2;-1,-2;+1,-2").unwrap();
        assert_eq!(l.pairs().len(), 4);
        assert!(lambda_from_arg(2, "0,+1").is_err());
        assert!(lambda_from_arg(2, "0,+1;0,+1;+1,+2;+1,-2").is_err());
    }
}
