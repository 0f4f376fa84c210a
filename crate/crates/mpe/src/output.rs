//! The JSON document printed by every query command.

use mpe_core::{Assignment, Network};
use serde::ser::{SerializeMap, Serializer};
use serde::Serialize;
use serde_json::value::RawValue;

#[derive(Debug, Serialize)]
pub struct QueryOutput {
    pub results: Vec<ResultRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stats: Option<Stats>,
    pub engine: EngineInfo,
}

#[derive(Debug, Serialize)]
pub struct ResultRow {
    pub rank: usize,
    pub assignment: NamedAssignment,
    /// 17 significant digits.
    pub probability: Box<RawValue>,
    pub probability_4dp: Box<RawValue>,
}

impl ResultRow {
    pub fn new(net: &Network, rank: usize, assignment: &Assignment, probability: f64) -> Self {
        ResultRow {
            rank,
            assignment: NamedAssignment::new(net, assignment),
            probability: number(format!("{probability:.16e}")),
            probability_4dp: number(format!("{probability:.4}")),
        }
    }
}

fn number(text: String) -> Box<RawValue> {
    RawValue::from_string(text).expect("finite numbers are valid JSON")
}

/// Variable name to state label, in variable order.
#[derive(Debug)]
pub struct NamedAssignment(Vec<(String, String)>);

impl NamedAssignment {
    pub fn new(net: &Network, a: &Assignment) -> Self {
        NamedAssignment(
            a.iter()
                .map(|(v, s)| {
                    let var = net.variable(v);
                    (var.name.clone(), var.states[s].clone())
                })
                .collect(),
        )
    }
}

impl Serialize for NamedAssignment {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.0.len()))?;
        for (k, v) in &self.0 {
            map.serialize_entry(k, v)?;
        }
        map.end()
    }
}

#[derive(Debug, Default, Serialize)]
pub struct Stats {
    pub max_dimensionality: usize,
    pub multiplications: u64,
    pub comparisons: u64,
    /// Per returned result; the first comes straight from the tables.
    pub nodes_visited: Vec<usize>,
}

#[derive(Debug, Serialize)]
pub struct EngineInfo {
    pub strategy: String,
    pub log_space: bool,
    pub exhausted: bool,
}

impl QueryOutput {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("output serializes")
    }
}
