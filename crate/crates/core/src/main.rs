//! Command-line interface: check, enumerate, classify, simulate, oracle and
//! convert, with JSON reports on standard output.
//!
//! Exit codes: 0 for success (and "conserving" verdicts), 1 for a decided
//! violation, 2 for usage or input errors (including exceeded budgets), so
//! scripts can tell "violated" from "could not decide".

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use sha2::{Digest, Sha256};

use ncca::conservation::{extract_params, is_number_conserving_with, materialize, Verdict};
use ncca::enumeration::{classify, enumerate_ncca, EnumerationFilters};
use ncca::error::Error;
use ncca::io::{
    catalog_entry_to_json, catalog_summary_json, config_from_json, config_to_json, label_counts,
    lambda_from_arg, oracle_verdict_to_json, rule_from_json, rule_to_json, verdict_to_json, Rule,
};
use ncca::lattice::{Direction, LambdaSelection, LatticeShape};
use ncca::rules::{DenseRule, StateSet};
use ncca::simulate::{
    exhaustive_oracle, finite_support_oracle, global_step, sampled_oracle, sigma,
    DEFAULT_ORACLE_BUDGET,
};

#[derive(Parser)]
#[command(
    name = "ncca",
    version,
    about = "Number-conserving cellular automata toolkit"
)]
struct Cli {
    /// Worker threads for enumeration and oracles (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decide whether a rule is number-conserving.
    Check {
        /// Rule file (dense or parametric JSON).
        #[arg(long)]
        rule: PathBuf,
        #[command(flatten)]
        formulation: Formulation,
    },
    /// Enumerate all number-conserving rules for a dimension and state set.
    Enumerate {
        #[arg(long)]
        dim: usize,
        /// Comma-separated states, e.g. "0,1,2".
        #[arg(long)]
        states: String,
        /// Restrict to rotation-symmetric rules (dimension 2 only).
        #[arg(long)]
        rotation_symmetric: bool,
        /// Restrict to passive rules (a lone cell keeps its state).
        #[arg(long)]
        passive: bool,
        /// Keep only extensions of one-dimensional rules.
        #[arg(long)]
        axis_extension_only: bool,
        /// Report the counts without writing the catalog.
        #[arg(long)]
        count_only: bool,
        /// Write the catalog (JSON lines) here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Classify a conserving rule (identity, shifts, traffic, ...).
    Classify {
        #[arg(long)]
        rule: PathBuf,
    },
    /// Run a rule on a configuration for a number of steps.
    Simulate {
        #[arg(long)]
        rule: PathBuf,
        /// Configuration file: {"shape": [...], "cells": [...]}.
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        steps: u64,
        /// Write the final configuration here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check conservation by direct simulation.
    Oracle {
        #[arg(long)]
        rule: PathBuf,
        #[arg(long, value_enum)]
        mode: OracleMode,
        /// Torus sides, e.g. "5,5" (exhaustive and sampled modes).
        #[arg(long)]
        shape: Option<String>,
        /// Sample count (sampled mode).
        #[arg(long, default_value_t = 1000)]
        samples: u64,
        /// Generator seed (sampled mode); echoed in the report for replay.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Configuration budget for the exhaustive mode.
        #[arg(long, default_value_t = DEFAULT_ORACLE_BUDGET)]
        budget: u64,
    },
    /// Convert a rule between dense and parametric forms.
    Convert {
        #[arg(long)]
        rule: PathBuf,
        #[arg(long, value_enum)]
        to: TargetKind,
        #[command(flatten)]
        formulation: Formulation,
        /// Write the converted rule here instead of inlining it.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Formulation {
    /// Leading direction, e.g. "0", "+1", "-2" (default "0").
    #[arg(long)]
    eta: Option<String>,
    /// Pair selection as "dir,dir;dir,dir;..." (default canonical).
    #[arg(long)]
    lambda: Option<String>,
}

impl Formulation {
    fn resolve(&self, dim: usize) -> Result<(Direction, LambdaSelection), Error> {
        let eta = match &self.eta {
            Some(s) => s.parse()?,
            None => Direction::CENTER,
        };
        if eta.index() > 2 * dim {
            return Err(Error::InvalidDirection {
                index: eta.index(),
                dim,
            });
        }
        let lambda = match &self.lambda {
            Some(s) => lambda_from_arg(dim, s)?,
            None => LambdaSelection::canonical(dim)?,
        };
        Ok((eta, lambda))
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum OracleMode {
    Exhaustive,
    FiniteSupport,
    Sampled,
}

#[derive(Clone, Copy, ValueEnum, PartialEq, Eq)]
enum TargetKind {
    Dense,
    Parametric,
}

enum RunResult {
    /// Wrap the payload in a report on standard output.
    Report {
        payload: serde_json::Value,
        inputs: serde_json::Value,
        exit: u8,
    },
    /// Output was already streamed (catalog mode).
    Streamed,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        // A failed second initialization only means a pool already exists.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    let started = Instant::now();
    match run(&cli.command) {
        Ok(RunResult::Report {
            payload,
            inputs,
            exit,
        }) => {
            let report = json!({
                "command": command_name(&cli.command),
                "version": env!("CARGO_PKG_VERSION"),
                "inputs": inputs,
                "payload": payload,
                "timing_ms": started.elapsed().as_millis() as u64,
            });
            println!("{report}");
            ExitCode::from(exit)
        }
        Ok(RunResult::Streamed) => ExitCode::SUCCESS,
        Err(err) => {
            let report = json!({
                "error": { "code": error_code(&err), "message": err.to_string() }
            });
            println!("{report}");
            eprintln!("error: {err}");
            ExitCode::from(2)
        }
    }
}

fn command_name(cmd: &Command) -> &'static str {
    match cmd {
        Command::Check { .. } => "check",
        Command::Enumerate { .. } => "enumerate",
        Command::Classify { .. } => "classify",
        Command::Simulate { .. } => "simulate",
        Command::Oracle { .. } => "oracle",
        Command::Convert { .. } => "convert",
    }
}

fn error_code(err: &anyhow::Error) -> &'static str {
    match err.downcast_ref::<Error>() {
        Some(Error::BudgetExceeded { .. }) => "budget-exceeded",
        Some(Error::SearchTooLarge(_) | Error::TableTooLarge(_) | Error::LatticeTooLarge) => {
            "too-large"
        }
        Some(Error::Format(_)) => "parse",
        Some(Error::NotConservingAt { .. } | Error::ClassifyNonConserving) => "not-conserving",
        Some(Error::NotClosedAt { .. }) => "not-closed",
        Some(_) => "invalid-input",
        None => "io",
    }
}

fn digest_input(path: &Path) -> anyhow::Result<(String, serde_json::Value)> {
    let bytes =
        fs::read(path).map_err(|e| anyhow::anyhow!("cannot read {}: {e}", path.display()))?;
    let digest: String = Sha256::digest(&bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect();
    let text = String::from_utf8(bytes).map_err(|_| {
        anyhow::Error::new(Error::Format(format!("{} is not UTF-8", path.display())))
    })?;
    let meta = json!({ "path": path.display().to_string(), "sha256": digest });
    Ok((text, meta))
}

fn load_rule(path: &Path) -> anyhow::Result<(Rule, serde_json::Value)> {
    let (text, meta) = digest_input(path)?;
    Ok((rule_from_json(&text)?, json!({ "rule": meta })))
}

/// A dense table for operations that need one; parametric rules are
/// tabulated through their stored formulation.
fn dense(rule: &Rule) -> anyhow::Result<DenseRule> {
    match rule {
        Rule::Dense(f) => Ok(f.clone()),
        Rule::Parametric(p) => Ok(materialize(p, p.eta(), p.lambda())?),
    }
}

fn parse_states(arg: &str) -> anyhow::Result<StateSet> {
    let mut states = Vec::new();
    for part in arg.split(',') {
        let q: i64 = part
            .trim()
            .parse()
            .map_err(|_| anyhow::Error::new(Error::Format(format!("invalid state {part:?}"))))?;
        states.push(q);
    }
    Ok(StateSet::new(states)?)
}

fn parse_shape(arg: Option<&str>) -> anyhow::Result<LatticeShape> {
    let arg = arg.ok_or_else(|| {
        anyhow::Error::new(Error::Format("--shape is required for this mode".into()))
    })?;
    let mut dims = Vec::new();
    for part in arg.split(',') {
        let n: u32 = part
            .trim()
            .parse()
            .map_err(|_| anyhow::Error::new(Error::Format(format!("invalid side {part:?}"))))?;
        dims.push(n);
    }
    Ok(LatticeShape::new(dims)?)
}

fn run(cmd: &Command) -> anyhow::Result<RunResult> {
    match cmd {
        Command::Check { rule, formulation } => {
            let (rule, inputs) = load_rule(rule)?;
            let f = dense(&rule)?;
            let (eta, lambda) = formulation.resolve(f.dimension())?;
            let verdict = is_number_conserving_with(&f, eta, &lambda)?;
            Ok(RunResult::Report {
                payload: verdict_to_json(&verdict),
                inputs,
                exit: u8::from(!verdict.is_conserving()),
            })
        }
        Command::Enumerate {
            dim,
            states,
            rotation_symmetric,
            passive,
            axis_extension_only,
            count_only,
            out,
        } => {
            let states = parse_states(states)?;
            let filters = EnumerationFilters {
                rotation_symmetric: *rotation_symmetric,
                passive: *passive,
                axis_extension_only: *axis_extension_only,
            };
            let catalog = enumerate_ncca(*dim, &states, &filters)?;
            let inputs = json!({
                "dim": dim,
                "states": states.states(),
                "filters": {
                    "rotation_symmetric": rotation_symmetric,
                    "passive": passive,
                    "axis_extension_only": axis_extension_only,
                },
            });
            if *count_only {
                let payload = json!({
                    "count": catalog.len(),
                    "label_counts": label_counts(&catalog),
                });
                return Ok(RunResult::Report {
                    payload,
                    inputs,
                    exit: 0,
                });
            }
            let mut lines: Vec<String> = catalog.iter().map(catalog_entry_to_json).collect();
            lines.push(catalog_summary_json(&catalog));
            let body = lines.join("\n") + "\n";
            match out {
                Some(path) => {
                    fs::write(path, body)?;
                    let payload = json!({
                        "count": catalog.len(),
                        "label_counts": label_counts(&catalog),
                        "out": path.display().to_string(),
                    });
                    Ok(RunResult::Report {
                        payload,
                        inputs,
                        exit: 0,
                    })
                }
                None => {
                    print!("{body}");
                    Ok(RunResult::Streamed)
                }
            }
        }
        Command::Classify { rule } => {
            let (rule, inputs) = load_rule(rule)?;
            let f = dense(&rule)?;
            let labels = classify(&f)?;
            let tags: Vec<String> = labels.tags.iter().map(|t| t.to_string()).collect();
            Ok(RunResult::Report {
                payload: json!({ "labels": tags }),
                inputs,
                exit: 0,
            })
        }
        Command::Simulate {
            rule,
            config,
            steps,
            out,
        } => {
            let (rule, rule_meta) = load_rule(rule)?;
            let f = dense(&rule)?;
            let (config_text, config_meta) = digest_input(config)?;
            let mut x = config_from_json(&config_text)?;
            x.check_states(f.states())?;
            let inputs = json!({ "rule": rule_meta["rule"], "config": config_meta });
            let mut sigmas = vec![sigma(&x)];
            for _ in 0..*steps {
                x = global_step(&f, &x)?;
                sigmas.push(sigma(&x));
            }
            if let Some(path) = out {
                fs::write(path, config_to_json(&x) + "\n")?;
            }
            let payload = json!({
                "steps": steps,
                "sigma": sigmas,
                "final": { "shape": x.shape.dims(), "cells": x.cells },
                "out": out.as_ref().map(|p| p.display().to_string()),
            });
            Ok(RunResult::Report {
                payload,
                inputs,
                exit: 0,
            })
        }
        Command::Oracle {
            rule,
            mode,
            shape,
            samples,
            seed,
            budget,
        } => {
            let (rule, inputs) = load_rule(rule)?;
            let f = dense(&rule)?;
            let (verdict, mode_name, shape_dims) = match mode {
                OracleMode::Exhaustive => {
                    let shape = parse_shape(shape.as_deref())?;
                    let v = exhaustive_oracle(&f, &shape, *budget)?;
                    (v, "exhaustive", shape.dims().to_vec())
                }
                OracleMode::FiniteSupport => {
                    let v = finite_support_oracle(&f)?;
                    (v, "finite-support", vec![7; f.dimension()])
                }
                OracleMode::Sampled => {
                    let shape = parse_shape(shape.as_deref())?;
                    let v = sampled_oracle(&f, &shape, *samples, *seed)?;
                    (v, "sampled", shape.dims().to_vec())
                }
            };
            let mut payload = oracle_verdict_to_json(&verdict);
            payload["mode"] = json!(mode_name);
            payload["shape"] = json!(shape_dims);
            if matches!(mode, OracleMode::Sampled) {
                payload["samples"] = json!(samples);
                payload["seed"] = json!(seed);
            }
            if matches!(mode, OracleMode::Exhaustive) {
                payload["budget"] = json!(budget);
            }
            Ok(RunResult::Report {
                payload,
                inputs,
                exit: u8::from(!verdict.is_conserving()),
            })
        }
        Command::Convert {
            rule,
            to,
            formulation,
            out,
        } => {
            let (rule, inputs) = load_rule(rule)?;
            let dim = rule.dimension();
            let (eta, lambda) = formulation.resolve(dim)?;
            let converted = match (rule, to) {
                (Rule::Dense(f), TargetKind::Parametric) => {
                    // Only conserving rules have a faithful parametric form.
                    match is_number_conserving_with(&f, eta, &lambda)? {
                        Verdict::Conserving => {}
                        Verdict::Violated(v) => {
                            return Err(Error::NotConservingAt {
                                config: v.config.states().to_vec(),
                                equation: v.equation.as_str().into(),
                            }
                            .into());
                        }
                    }
                    Rule::Parametric(extract_params(&f, eta, &lambda)?)
                }
                (Rule::Parametric(p), TargetKind::Dense) => {
                    Rule::Dense(materialize(&p, p.eta(), p.lambda())?)
                }
                (same, _) => same,
            };
            let text = rule_to_json(&converted);
            if let Some(path) = out {
                fs::write(path, text.clone() + "\n")?;
            }
            let payload = json!({
                "kind": match to {
                    TargetKind::Dense => "dense",
                    TargetKind::Parametric => "parametric",
                },
                "rule": serde_json::from_str::<serde_json::Value>(&text)?,
                "out": out.as_ref().map(|p| p.display().to_string()),
            });
            Ok(RunResult::Report {
                payload,
                inputs,
                exit: 0,
            })
        }
    }
}
