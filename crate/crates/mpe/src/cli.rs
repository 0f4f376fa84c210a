//! Argument parsing and command dispatch.

use std::collections::BTreeSet;
use std::path::PathBuf;

use clap::builder::FalseyValueParser;
use clap::{ArgAction, Args, Parser, Subcommand};
use mpe_core::oracle::{oracle_map_ranked, oracle_top_l};
use mpe_core::{find_l_map, find_l_mpe, Engine, Error, Evidence, KBest, Network, Space, Strategy, VarId};
use serde::Serialize;

use crate::error::CliError;
use crate::format::{parse_evidence, parse_targets, read_network};
use crate::output::{EngineInfo, QueryOutput, ResultRow, Stats};

#[derive(Debug, Parser)]
#[command(name = "mpe", version, about = "Most probable explanations for discrete Bayesian networks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Summarize a network file.
    Info { file: PathBuf },
    /// The most probable explanation.
    Mpe(QueryArgs),
    /// The l most probable explanations.
    Kbest {
        #[command(flatten)]
        query: QueryArgs,
        #[arg(short = 'l', default_value_t = 1)]
        l: usize,
    },
    /// Most probable joint state of some variables, summing out the rest.
    Map {
        #[command(flatten)]
        query: QueryArgs,
        /// Comma-separated query variables.
        #[arg(long, value_delimiter = ',', required = true)]
        targets: Vec<String>,
        #[arg(short = 'l', default_value_t = 1)]
        l: usize,
    },
    /// Brute-force answers by full enumeration.
    Oracle {
        #[command(subcommand)]
        mode: OracleMode,
    },
}

#[derive(Debug, Subcommand)]
pub enum OracleMode {
    Mpe(QueryArgs),
    Kbest {
        #[command(flatten)]
        query: QueryArgs,
        #[arg(short = 'l', default_value_t = 1)]
        l: usize,
    },
    Map {
        #[command(flatten)]
        query: QueryArgs,
        #[arg(long, value_delimiter = ',', required = true)]
        targets: Vec<String>,
        #[arg(short = 'l', default_value_t = 1)]
        l: usize,
    },
}

#[derive(Debug, Args)]
pub struct QueryArgs {
    pub file: PathBuf,
    /// Observations, e.g. `d=1,f=0`.
    #[arg(long, default_value = "")]
    pub evidence: String,
    /// One of min-degree, min-fill, exhaustive, file-order.
    #[arg(long, default_value = "min-degree")]
    pub strategy: Strategy,
    /// Work with log probabilities.
    #[arg(long, env = "MPE_LOG_SPACE", action = ArgAction::SetTrue, value_parser = FalseyValueParser::new())]
    pub log_space: bool,
    /// Include counters in the output.
    #[arg(long)]
    pub stats: bool,
    /// Answer by enumerating the joint distribution instead.
    #[arg(long)]
    pub oracle: bool,
}

/// Runs one command and returns the document to print.
pub fn run(cli: Cli) -> Result<String, CliError> {
    match cli.command {
        Command::Info { file } => info(&file),
        Command::Mpe(q) => query(q, None, 1, false),
        Command::Kbest { query: q, l } => query(q, None, l, false),
        Command::Map { query: q, targets, l } => query(q, Some(targets), l, false),
        Command::Oracle { mode } => match mode {
            OracleMode::Mpe(q) => query(q, None, 1, true),
            OracleMode::Kbest { query: q, l } => query(q, None, l, true),
            OracleMode::Map { query: q, targets, l } => query(q, Some(targets), l, true),
        },
    }
}

#[derive(Serialize)]
struct Info {
    variables: Vec<VariableInfo>,
    max_family_size: usize,
    joint_states: u128,
}

#[derive(Serialize)]
struct VariableInfo {
    name: String,
    states: Vec<String>,
    parents: Vec<String>,
}

fn info(file: &std::path::Path) -> Result<String, CliError> {
    let net = read_network(file)?;
    let info = Info {
        variables: (0..net.len())
            .map(|v| VariableInfo {
                name: net.variable(v).name.clone(),
                states: net.variable(v).states.clone(),
                parents: net.parents(v).iter().map(|&p| net.variable(p).name.clone()).collect(),
            })
            .collect(),
        max_family_size: net.max_family_size(),
        joint_states: (0..net.len()).fold(1u128, |s, v| s.saturating_mul(net.cardinality(v) as u128)),
    };
    Ok(serde_json::to_string_pretty(&info).expect("plain data serializes"))
}

fn query(q: QueryArgs, targets: Option<Vec<String>>, l: usize, force_oracle: bool) -> Result<String, CliError> {
    let net = read_network(&q.file)?;
    let ev = parse_evidence(&net, &q.evidence)?;
    let targets = targets.map(|t| parse_targets(&net, &t)).transpose()?;
    let oracle = force_oracle || q.oracle;
    let out = if oracle {
        oracle_output(&net, &ev, targets.as_ref(), l, q.log_space)?
    } else {
        let engine = Engine::with_space(if q.log_space { Space::Log } else { Space::Linear });
        let k = match &targets {
            Some(t) => find_l_map(&net, &ev, t, l, &q.strategy, engine),
            None => find_l_mpe(&net, &ev, l, &q.strategy, engine),
        }
        .map_err(|e| describe(&net, e))?;
        engine_output(&net, k, &q)
    };
    Ok(out.to_json())
}

fn engine_output(net: &Network, k: KBest, q: &QueryArgs) -> QueryOutput {
    let stats = q.stats.then(|| Stats {
        max_dimensionality: k.stats.max_dimensionality,
        multiplications: k.stats.multiplications,
        comparisons: k.stats.comparisons,
        nodes_visited: k.explanations.iter().map(|e| e.visits).collect(),
    });
    QueryOutput {
        results: k.explanations.iter().map(|e| ResultRow::new(net, e.rank, &e.assignment, e.probability)).collect(),
        stats,
        engine: EngineInfo { strategy: q.strategy.name().into(), log_space: q.log_space, exhausted: k.exhausted },
    }
}

fn oracle_output(
    net: &Network,
    ev: &Evidence,
    targets: Option<&BTreeSet<VarId>>,
    l: usize,
    log_space: bool,
) -> Result<QueryOutput, CliError> {
    let (rows, total) = match targets {
        Some(t) => {
            let all = oracle_map_ranked(net, ev, t).map_err(|e| describe(net, e))?;
            let n = all.len();
            (all.into_iter().take(l).collect::<Vec<_>>(), n)
        }
        None => {
            let rows = oracle_top_l(net, ev, l).map_err(|e| describe(net, e))?;
            let total = (0..net.len()).filter(|&v| !ev.contains(v)).map(|v| net.cardinality(v)).product();
            (rows, total)
        }
    };
    Ok(QueryOutput {
        results: rows.iter().enumerate().map(|(i, (a, p))| ResultRow::new(net, i + 1, a, *p)).collect(),
        stats: None,
        engine: EngineInfo { strategy: "oracle".into(), log_space, exhausted: l >= total },
    })
}

/// Query errors with variable names instead of ids.
fn describe(net: &Network, e: Error) -> CliError {
    let name = |v: VarId| net.variables().get(v).map_or_else(|| format!("#{v}"), |x| format!("`{}`", x.name));
    CliError::Query(match e {
        Error::QueryOverlapsEvidence(v) => format!("target {} is also observed as evidence", name(v)),
        Error::UnknownVariableId(v) => format!("unknown variable {}", name(v)),
        other => other.to_string(),
    })
}
