//! Subset queries: maximize a set of query variables, sum out the rest.
//!
//! Summation and maximization do not commute, so a variable may only be
//! maximized once nothing it shares a table with still needs summing. The
//! factoring annotator therefore sums first (a summed variable that occurs in
//! a single live table can go right away) and maximizes a query variable only
//! when it occurs in a single live table that holds no pending summed variable.
//!
//! Before building anything, the network is pruned to the part that can
//! influence the answer: variables outside the ancestors of the query and
//! evidence contribute a factor of one, and ancestral pieces disconnected
//! from the query only contribute a constant.

use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::factor::{Assignment, Factor};
use crate::factoring::{build_with, Elimination, FactoringStats, Strategy};
use crate::kbest::{build_eval_tree, enumerate, KBest};
use crate::mpe::{execute, set_scale, Engine, ExecutionTrace, ScheduleStep};
use crate::network::{apply_evidence, Evidence, Network, VarId};
use crate::space::Space;

/// Tables tagged with their index in the network's table list.
type Indexed = Vec<(usize, Factor)>;

/// A summed variable can be eliminated when exactly one live table holds it.
pub fn can_sum_first(var: VarId, live: &[&[VarId]]) -> bool {
    live.iter().filter(|s| s.contains(&var)).count() == 1
}

/// A maximized variable can be eliminated when exactly one live table holds
/// it and no other variable of that table is still to be summed.
pub fn can_maximize(var: VarId, live: &[&[VarId]], maximized: &BTreeSet<VarId>) -> bool {
    can_maximize_with(var, live, |v| maximized.contains(&v))
}

/// Like [`can_maximize`], with `not_summed` telling which variables are
/// safe to share the table.
pub fn can_maximize_with(var: VarId, live: &[&[VarId]], not_summed: impl Fn(VarId) -> bool) -> bool {
    let mut holders = live.iter().filter(|s| s.contains(&var));
    match (holders.next(), holders.next()) {
        (Some(s), None) => s.iter().all(|&v| v == var || not_summed(v)),
        _ => false,
    }
}

/// How a query splits the network's variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryPartition {
    /// Query variables.
    pub maximized: BTreeSet<VarId>,
    /// Relevant non-query, non-evidence variables.
    pub summed: BTreeSet<VarId>,
    /// Evidence variables adjacent to the query's tables.
    pub evidence: BTreeSet<VarId>,
    /// Everything else: barren or disconnected from the query.
    pub pruned: BTreeSet<VarId>,
}

impl QueryPartition {
    pub fn new(net: &Network, evidence: &Evidence, query: &BTreeSet<VarId>) -> Result<Self> {
        validate_query(net, evidence, query)?;
        let (component, _) = query_component(net, evidence, query, Space::Linear)?;
        let relevant = relevant_from(net, evidence, &component);
        let summed: BTreeSet<VarId> = component.difference(query).copied().collect();
        let ev: BTreeSet<VarId> = relevant.iter().copied().filter(|v| evidence.contains(*v)).collect();
        let pruned = (0..net.len()).filter(|v| !relevant.contains(v)).collect();
        Ok(QueryPartition { maximized: query.clone(), summed, evidence: ev, pruned })
    }

    /// Query, summed and evidence variables together.
    pub fn relevant(&self) -> BTreeSet<VarId> {
        self.maximized.iter().chain(&self.summed).chain(&self.evidence).copied().collect()
    }
}

/// Variables that can affect the answer to a query over `query` given
/// `evidence`: the query's connected piece of the evidence-sliced ancestral
/// network, plus the evidence variables whose tables touch it.
pub fn relevant_set(net: &Network, evidence: &Evidence, query: &BTreeSet<VarId>) -> Result<BTreeSet<VarId>> {
    Ok(QueryPartition::new(net, evidence, query)?.relevant())
}

fn validate_query(net: &Network, evidence: &Evidence, query: &BTreeSet<VarId>) -> Result<()> {
    evidence.validate(net)?;
    if query.is_empty() {
        return Err(Error::EmptyQuery);
    }
    for &v in query {
        if v >= net.len() {
            return Err(Error::UnknownVariableId(v));
        }
        if evidence.contains(v) {
            return Err(Error::QueryOverlapsEvidence(v));
        }
    }
    Ok(())
}

/// Non-evidence variables connected to the query through sliced ancestral
/// tables, and the indices (into the network's table list) of the tables
/// restricted to the ancestral closure.
fn query_component(
    net: &Network,
    evidence: &Evidence,
    query: &BTreeSet<VarId>,
    space: Space,
) -> Result<(BTreeSet<VarId>, Indexed)> {
    let ancestral = net.ancestral_closure(query.iter().copied().chain(evidence.vars()));
    let sliced: Indexed = apply_evidence(net, evidence, space)?
        .into_iter()
        .enumerate()
        .filter(|(i, _)| ancestral.contains(&net.cpts()[*i].child))
        .collect();
    let mut component: BTreeSet<VarId> = query.clone();
    loop {
        let before = component.len();
        for (_, f) in &sliced {
            if f.scope().iter().any(|v| component.contains(v)) {
                component.extend(f.scope().iter().copied());
            }
        }
        if component.len() == before {
            break;
        }
    }
    Ok((component, sliced))
}

fn relevant_from(net: &Network, evidence: &Evidence, component: &BTreeSet<VarId>) -> BTreeSet<VarId> {
    let mut relevant = component.clone();
    for cpt in net.cpts() {
        let family = cpt.parents.iter().copied().chain([cpt.child]);
        if family.clone().any(|v| component.contains(&v)) {
            relevant.extend(family.filter(|v| evidence.contains(*v)));
        }
    }
    relevant
}

/// Result of a subset query.
#[derive(Debug, Clone, PartialEq)]
pub struct MapResult {
    /// States of the query variables.
    pub assignment: Assignment,
    /// Probability of the assignment together with the evidence.
    pub probability: f64,
    pub stats: FactoringStats,
    pub partition: QueryPartition,
    /// Network table index behind each leaf of the factoring.
    pub tables: Vec<usize>,
}

/// The most probable joint state of `query` given `evidence`.
pub fn find_map(
    net: &Network,
    evidence: &Evidence,
    query: &BTreeSet<VarId>,
    strategy: &Strategy,
    engine: Engine,
) -> Result<(MapResult, ExecutionTrace)> {
    run_map(net, evidence, query, strategy, engine, true)
}

/// Same as [`find_map`] but over every table of the network, with no
/// relevance pruning.
pub fn find_map_unpruned(
    net: &Network,
    evidence: &Evidence,
    query: &BTreeSet<VarId>,
    strategy: &Strategy,
    engine: Engine,
) -> Result<(MapResult, ExecutionTrace)> {
    run_map(net, evidence, query, strategy, engine, false)
}

fn run_map(
    net: &Network,
    evidence: &Evidence,
    query: &BTreeSet<VarId>,
    strategy: &Strategy,
    engine: Engine,
    prune: bool,
) -> Result<(MapResult, ExecutionTrace)> {
    validate_query(net, evidence, query)?;
    let space = engine.space;
    let partition = QueryPartition::new(net, evidence, query)?;
    let (inside, outside): (Indexed, Indexed) = if prune {
        let (component, sliced) = query_component(net, evidence, query, space)?;
        sliced.into_iter().partition(|(_, f)| f.scope().iter().any(|v| component.contains(v)))
    } else {
        (apply_evidence(net, evidence, space)?.into_iter().enumerate().collect(), Vec::new())
    };
    let tables: Vec<usize> = inside.iter().map(|(i, _)| *i).collect();
    let inside: Vec<Factor> = inside.into_iter().map(|(_, f)| f).collect();
    let outside: Vec<Factor> = outside.into_iter().map(|(_, f)| f).collect();
    let summed: BTreeSet<VarId> =
        inside.iter().flat_map(|f| f.scope().iter().copied()).filter(|v| !query.contains(v)).collect();
    let elim = Elimination { maximize: query.clone(), sum: summed, early: engine.early_reduction };
    let tree = build_with(&inside, &elim, strategy)?;
    let maximized: Vec<VarId> = query.iter().copied().collect();
    let mut trace = execute(&inside, tree, space, evidence.clone(), maximized, net.cardinalities())?;
    let constant = total_mass(&outside, space, net.cardinalities())?;
    set_scale(&mut trace, constant);
    let result = MapResult {
        assignment: trace.best_assignment(),
        probability: space.to_prob(trace.best_value()),
        stats: trace.stats(),
        partition,
        tables,
    };
    Ok((result, trace))
}

/// Sum over all states of the product of `factors`.
fn total_mass(factors: &[Factor], space: Space, cards: Vec<usize>) -> Result<f64> {
    if factors.is_empty() {
        return Ok(space.one());
    }
    let vars: BTreeSet<VarId> = factors.iter().flat_map(|f| f.scope().iter().copied()).collect();
    let elim = Elimination { maximize: BTreeSet::new(), sum: vars, early: true };
    let tree = build_with(factors, &elim, &Strategy::MinDegree)?;
    let trace = execute(factors, tree, space, Evidence::new(), vec![], cards)?;
    Ok(trace.root().result.value(0))
}

/// The `l` most probable joint states of `query` given `evidence`.
pub fn find_l_map(
    net: &Network,
    evidence: &Evidence,
    query: &BTreeSet<VarId>,
    l: usize,
    strategy: &Strategy,
    engine: Engine,
) -> Result<KBest> {
    let (_, trace) = find_map(net, evidence, query, strategy, engine)?;
    let stats = trace.stats();
    let mut tree = build_eval_tree(trace);
    let explanations = enumerate(&mut tree, l);
    Ok(KBest { explanations, exhausted: tree.is_exhausted(), stats })
}

/// Checks that the trace never maximized a variable out of a table that
/// still held a summed variable, and that at every node sums came first.
pub fn sums_precede_maxes(trace: &ExecutionTrace) -> bool {
    let tree = trace.tree();
    let mut last_max_node = None;
    for ev in trace.schedule() {
        match ev.step {
            ScheduleStep::Sum(_) => {
                if last_max_node == Some(ev.node) {
                    return false;
                }
            }
            ScheduleStep::Max(_) => last_max_node = Some(ev.node),
        }
    }
    tree.nodes().iter().enumerate().all(|(id, node)| {
        node.reduce_set.is_empty()
            || trace
                .node(id)
                .before_reduction()
                .scope()
                .iter()
                .all(|v| trace.maximized().contains(v) || !tree.nodes().iter().any(|n| n.sum_set.contains(v)))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{Cpt, Variable};

    fn chain() -> Network {
        let vars = vec![
            Variable::with_cardinality("a", 2),
            Variable::with_cardinality("b", 2),
            Variable::with_cardinality("c", 2),
        ];
        let cpts = vec![
            Cpt { child: 0, parents: vec![], table: vec![0.3, 0.7] },
            Cpt { child: 1, parents: vec![0], table: vec![0.9, 0.1, 0.2, 0.8] },
            Cpt { child: 2, parents: vec![1], table: vec![0.6, 0.4, 0.5, 0.5] },
        ];
        Network::new(vars, cpts).unwrap()
    }

    #[test]
    fn elimination_order_checks() {
        let live: [&[VarId]; 2] = [&[0, 1], &[1, 2]];
        assert!(can_sum_first(0, &live));
        assert!(!can_sum_first(1, &live));
        let maxed = BTreeSet::from([0, 2]);
        // b is summed and shares both tables
        assert!(!can_maximize(0, &live, &maxed));
        let maxed = BTreeSet::from([0, 1, 2]);
        assert!(can_maximize(0, &live, &maxed));
        assert!(!can_maximize(1, &live, &maxed));
    }

    #[test]
    fn evidence_cuts_the_chain() {
        let net = chain();
        let ev = Evidence::new().observe(1, 0);
        let p = QueryPartition::new(&net, &ev, &BTreeSet::from([2])).unwrap();
        assert_eq!(p.relevant(), BTreeSet::from([1, 2]));
        assert!(p.summed.is_empty());
        assert_eq!(p.pruned, BTreeSet::from([0]));
    }

    #[test]
    fn disconnected_ancestors_scale_the_answer() {
        let net = chain();
        let ev = Evidence::new().observe(1, 0);
        let (r, _) = find_map(&net, &ev, &BTreeSet::from([2]), &Strategy::MinDegree, Engine::default()).unwrap();
        // P(c=0, b=0) = 0.6 * (0.3*0.9 + 0.7*0.2)
        assert!((r.probability - 0.6 * 0.41).abs() < 1e-15);
        assert_eq!(r.assignment, Assignment::from_pairs([(2, 0)]));
    }

    #[test]
    fn bad_queries() {
        let net = chain();
        let s = Strategy::MinDegree;
        assert_eq!(
            find_map(&net, &Evidence::new(), &BTreeSet::new(), &s, Engine::default()).unwrap_err(),
            Error::EmptyQuery
        );
        let ev = Evidence::new().observe(0, 1);
        assert_eq!(
            find_map(&net, &ev, &BTreeSet::from([0]), &s, Engine::default()).unwrap_err(),
            Error::QueryOverlapsEvidence(0)
        );
    }
}
