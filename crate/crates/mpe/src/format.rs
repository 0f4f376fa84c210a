use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use mpe_core::{Cpt, Evidence, Network, VarId, Variable};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NetworkFile {
    variables: Vec<VariableEntry>,
    cpts: Vec<CptEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VariableEntry {
    name: String,
    states: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CptEntry {
    child: String,
    parents: Vec<String>,
    table: Vec<f64>,
}

/// Parses and validates a network document. Variable ids follow file order.
pub fn parse_network(text: &str) -> Result<Network, CliError> {
    let file: NetworkFile = serde_json::from_str(text)?;
    let ids: HashMap<&str, VarId> = file.variables.iter().enumerate().map(|(i, v)| (v.name.as_str(), i)).collect();
    let id = |name: &str| {
        ids.get(name).copied().ok_or_else(|| CliError::Invalid(mpe_core::Error::UnknownVariable(name.into())))
    };
    let mut cpts = Vec::with_capacity(file.cpts.len());
    for c in &file.cpts {
        cpts.push(Cpt {
            child: id(&c.child)?,
            parents: c.parents.iter().map(|p| id(p)).collect::<Result<_, _>>()?,
            table: c.table.clone(),
        });
    }
    let variables = file.variables.into_iter().map(|v| Variable { name: v.name, states: v.states }).collect();
    Network::new(variables, cpts).map_err(CliError::Invalid)
}

pub fn read_network(path: &Path) -> Result<Network, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.into(), source })?;
    parse_network(&text)
}

/// Canonical document for `net`; parsing it back gives the same network.
pub fn to_json(net: &Network) -> String {
    let name = |v: VarId| net.variable(v).name.clone();
    let file = NetworkFile {
        variables: net
            .variables()
            .iter()
            .map(|v| VariableEntry { name: v.name.clone(), states: v.states.clone() })
            .collect(),
        cpts: net
            .cpts()
            .iter()
            .map(|c| CptEntry {
                child: name(c.child),
                parents: c.parents.iter().map(|&p| name(p)).collect(),
                table: c.table.clone(),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&file).expect("plain data serializes")
}

fn lookup(net: &Network, name: &str) -> Result<VarId, CliError> {
    net.id_of(name).ok_or_else(|| CliError::Query(format!("unknown variable `{name}`")))
}

/// Parses `d=1,f=0`. States are matched by label first, then by index.
pub fn parse_evidence(net: &Network, spec: &str) -> Result<Evidence, CliError> {
    let mut ev = Evidence::new();
    for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (name, state) = item
            .split_once('=')
            .ok_or_else(|| CliError::Query(format!("evidence `{item}` is not of the form name=state")))?;
        let v = lookup(net, name.trim())?;
        let state = state.trim();
        let s = net
            .variable(v)
            .state_index(state)
            .or_else(|| state.parse::<usize>().ok().filter(|&s| s < net.cardinality(v)))
            .ok_or_else(|| CliError::Query(format!("variable `{name}` has no state `{state}`")))?;
        if ev.insert(v, s).is_some_and(|old| old != s) {
            return Err(CliError::Query(format!("conflicting evidence for `{name}`")));
        }
    }
    Ok(ev)
}

pub fn parse_targets(net: &Network, names: &[String]) -> Result<BTreeSet<VarId>, CliError> {
    names.iter().map(|n| lookup(net, n.trim())).collect()
}
