//! Discrete Bayesian networks: variables, conditional probability tables and
//! evidence.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::factor::{Assignment, Factor};
use crate::space::Space;

/// Dense index of a variable, assigned in declaration order.
pub type VarId = usize;

/// Rows of a conditional table must sum to one within this absolute slack.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;
const RANGE_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub states: Vec<String>,
}

impl Variable {
    pub fn new(name: impl Into<String>, states: &[&str]) -> Self {
        Variable { name: name.into(), states: states.iter().map(|s| s.to_string()).collect() }
    }

    /// A variable with states labelled `"0"`, `"1"`, ...
    pub fn with_cardinality(name: impl Into<String>, card: usize) -> Self {
        Variable { name: name.into(), states: (0..card).map(|s| s.to_string()).collect() }
    }

    pub fn cardinality(&self) -> usize {
        self.states.len()
    }

    pub fn state_index(&self, label: &str) -> Option<usize> {
        self.states.iter().position(|s| s == label)
    }
}

/// A conditional probability table `p(child | parents)`.
///
/// `table` iterates parent configurations with the first parent as the most
/// significant digit, and the child state fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct Cpt {
    pub child: VarId,
    pub parents: Vec<VarId>,
    pub table: Vec<f64>,
}

/// A validated network. Tables keep the order in which they were supplied.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    variables: Vec<Variable>,
    cpts: Vec<Cpt>,
    cpt_of: Vec<usize>,
    children: Vec<Vec<VarId>>,
}

impl Network {
    pub fn new(variables: Vec<Variable>, cpts: Vec<Cpt>) -> Result<Self> {
        let mut names = BTreeSet::new();
        for v in &variables {
            if v.states.is_empty() {
                return Err(Error::EmptyStates(v.name.clone()));
            }
            if !names.insert(v.name.as_str()) {
                return Err(Error::DuplicateVariable(v.name.clone()));
            }
            let mut labels = BTreeSet::new();
            for s in &v.states {
                if !labels.insert(s.as_str()) {
                    return Err(Error::DuplicateState { variable: v.name.clone(), state: s.clone() });
                }
            }
        }

        let n = variables.len();
        let name = |id: VarId| variables[id].name.clone();
        let mut cpt_of = vec![usize::MAX; n];
        let mut children = vec![Vec::new(); n];
        for (i, cpt) in cpts.iter().enumerate() {
            if cpt.child >= n {
                return Err(Error::UnknownVariableId(cpt.child));
            }
            if cpt_of[cpt.child] != usize::MAX {
                return Err(Error::DuplicateCpt(name(cpt.child)));
            }
            cpt_of[cpt.child] = i;
            let mut seen = BTreeSet::new();
            for &p in &cpt.parents {
                if p >= n {
                    return Err(Error::UnknownVariableId(p));
                }
                if p == cpt.child || !seen.insert(p) {
                    return Err(Error::DuplicateParent { child: name(cpt.child), parent: name(p) });
                }
                children[p].push(cpt.child);
            }

            let card = variables[cpt.child].cardinality();
            let rows: usize = cpt.parents.iter().map(|&p| variables[p].cardinality()).product();
            if cpt.table.len() != rows * card {
                return Err(Error::TableLength {
                    child: name(cpt.child),
                    expected: rows * card,
                    found: cpt.table.len(),
                });
            }
            for (index, &value) in cpt.table.iter().enumerate() {
                if !(-RANGE_SLACK..=1.0 + RANGE_SLACK).contains(&value) {
                    return Err(Error::ProbabilityOutOfRange { child: name(cpt.child), index, value });
                }
            }
            for (row, chunk) in cpt.table.chunks(card).enumerate() {
                let sum: f64 = chunk.iter().sum();
                if (sum - 1.0).abs() > NORMALIZATION_TOLERANCE {
                    return Err(Error::RowNotNormalized { child: name(cpt.child), row, sum });
                }
            }
        }
        if let Some(missing) = cpt_of.iter().position(|&c| c == usize::MAX) {
            return Err(Error::MissingCpt(name(missing)));
        }

        let net = Network { variables, cpts, cpt_of, children };
        if let Some(v) = net.find_cycle() {
            return Err(Error::Cycle(net.variables[v].name.clone()));
        }
        Ok(net)
    }

    fn find_cycle(&self) -> Option<VarId> {
        // Kahn's algorithm; anything left over sits on a cycle.
        let n = self.len();
        let mut indegree: Vec<usize> = (0..n).map(|v| self.parents(v).len()).collect();
        let mut ready: Vec<VarId> = (0..n).filter(|&v| indegree[v] == 0).collect();
        let mut done = 0;
        while let Some(v) = ready.pop() {
            done += 1;
            for &c in &self.children[v] {
                indegree[c] -= 1;
                if indegree[c] == 0 {
                    ready.push(c);
                }
            }
        }
        if done == n {
            None
        } else {
            (0..n).find(|&v| indegree[v] > 0)
        }
    }

    pub fn len(&self) -> usize {
        self.variables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variables.is_empty()
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn variable(&self, id: VarId) -> &Variable {
        &self.variables[id]
    }

    pub fn cardinality(&self, id: VarId) -> usize {
        self.variables[id].cardinality()
    }

    pub fn cardinalities(&self) -> Vec<usize> {
        self.variables.iter().map(Variable::cardinality).collect()
    }

    pub fn id_of(&self, name: &str) -> Option<VarId> {
        self.variables.iter().position(|v| v.name == name)
    }

    /// Tables in the order they were supplied.
    pub fn cpts(&self) -> &[Cpt] {
        &self.cpts
    }

    pub fn cpt(&self, child: VarId) -> &Cpt {
        &self.cpts[self.cpt_of[child]]
    }

    pub fn parents(&self, v: VarId) -> &[VarId] {
        &self.cpt(v).parents
    }

    pub fn children(&self, v: VarId) -> &[VarId] {
        &self.children[v]
    }

    /// Size of the largest family (a node together with its parents).
    pub fn max_family_size(&self) -> usize {
        self.cpts.iter().map(|c| c.parents.len() + 1).max().unwrap_or(0)
    }

    /// `p(child = state | parents = config)` where `config` lists parent states
    /// in the table's parent order.
    pub fn probability(&self, child: VarId, state: usize, config: &[usize]) -> f64 {
        let cpt = self.cpt(child);
        let mut row = 0;
        for (&p, &s) in cpt.parents.iter().zip(config) {
            row = row * self.cardinality(p) + s;
        }
        cpt.table[row * self.cardinality(child) + state]
    }

    /// All ancestors of `seeds`, including the seeds themselves.
    pub fn ancestral_closure(&self, seeds: impl IntoIterator<Item = VarId>) -> BTreeSet<VarId> {
        let mut out = BTreeSet::new();
        let mut stack: Vec<VarId> = seeds.into_iter().collect();
        while let Some(v) = stack.pop() {
            if out.insert(v) {
                stack.extend_from_slice(self.parents(v));
            }
        }
        out
    }

    /// The table of `cpt` as a factor with scope `parents ++ [child]`.
    pub fn cpt_factor(&self, cpt: &Cpt, space: Space) -> Factor {
        let mut scope = cpt.parents.clone();
        scope.push(cpt.child);
        let cards = scope.iter().map(|&v| self.cardinality(v)).collect();
        let values = cpt.table.iter().map(|&p| space.from_prob(p)).collect();
        Factor::from_table(space, scope, cards, values).expect("validated table matches its scope")
    }
}

/// Observed states, keyed by variable.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Evidence(BTreeMap<VarId, usize>);

impl Evidence {
    pub fn new() -> Self {
        Evidence(BTreeMap::new())
    }

    pub fn observe(mut self, var: VarId, state: usize) -> Self {
        self.0.insert(var, state);
        self
    }

    pub fn insert(&mut self, var: VarId, state: usize) -> Option<usize> {
        self.0.insert(var, state)
    }

    pub fn get(&self, var: VarId) -> Option<usize> {
        self.0.get(&var).copied()
    }

    pub fn contains(&self, var: VarId) -> bool {
        self.0.contains_key(&var)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (VarId, usize)> + '_ {
        self.0.iter().map(|(&v, &s)| (v, s))
    }

    pub fn vars(&self) -> impl Iterator<Item = VarId> + '_ {
        self.0.keys().copied()
    }

    pub fn validate(&self, net: &Network) -> Result<()> {
        for (v, s) in self.iter() {
            if v >= net.len() {
                return Err(Error::UnknownVariableId(v));
            }
            let card = net.cardinality(v);
            if s >= card {
                return Err(Error::StateOutOfRange { variable: v, state: s, cardinality: card });
            }
        }
        Ok(())
    }

    pub fn as_assignment(&self) -> Assignment {
        Assignment::from_pairs(self.iter())
    }
}

impl FromIterator<(VarId, usize)> for Evidence {
    fn from_iter<I: IntoIterator<Item = (VarId, usize)>>(iter: I) -> Self {
        Evidence(iter.into_iter().collect())
    }
}

/// One factor per table, in table order, with every observed variable sliced
/// to its observed state and recorded in the factor's fixed context.
pub fn apply_evidence(net: &Network, evidence: &Evidence, space: Space) -> Result<Vec<Factor>> {
    evidence.validate(net)?;
    let observed = evidence.as_assignment();
    Ok(net.cpts().iter().map(|cpt| net.cpt_factor(cpt, space).restrict(&observed)).collect())
}

/// Non-evidence variables in id order.
pub fn free_variables(net: &Network, evidence: &Evidence) -> Vec<VarId> {
    (0..net.len()).filter(|&v| !evidence.contains(v)).collect()
}
