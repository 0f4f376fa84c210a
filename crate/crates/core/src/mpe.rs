//! Single most probable explanation: slice evidence, build a factoring, then
//! combine bottom-up with eliminations applied at every node where they are
//! allowed. The saved per-node tables form the execution trace that the
//! k-best enumeration reuses.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::factor::{Assignment, Factor};
use crate::factoring::{build_with, Elimination, FactoringStats, FactoringTree, NodeId, NodeKind, Strategy};
use crate::network::{apply_evidence, free_variables, Evidence, Network, VarId};
use crate::space::Space;

/// Engine-wide switches.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Engine {
    pub space: Space,
    /// When false, every elimination waits for the root.
    pub early_reduction: bool,
}

impl Default for Engine {
    fn default() -> Self {
        Engine { space: Space::Linear, early_reduction: true }
    }
}

impl Engine {
    pub fn log_space() -> Self {
        Engine { space: Space::Log, ..Engine::default() }
    }

    pub fn with_space(space: Space) -> Self {
        Engine { space, ..Engine::default() }
    }
}

/// One elimination performed during execution, in execution order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScheduleStep {
    Sum(VarId),
    Max(VarId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScheduleEvent {
    pub node: NodeId,
    pub step: ScheduleStep,
}

/// Tables computed at one tree node.
#[derive(Debug, Clone)]
pub struct TraceNode {
    /// The leaf table, or the product of the children's results.
    pub combined: Factor,
    /// `combined` after summing out the node's sum set, when non-empty.
    pub summed: Option<Factor>,
    /// After all eliminations.
    pub result: Factor,
}

impl TraceNode {
    pub fn before_reduction(&self) -> &Factor {
        self.summed.as_ref().unwrap_or(&self.combined)
    }
}

/// The evaluated tree with every intermediate table kept.
#[derive(Debug, Clone)]
pub struct ExecutionTrace {
    tree: FactoringTree,
    nodes: Vec<TraceNode>,
    space: Space,
    evidence: Evidence,
    maximized: Vec<VarId>,
    cards: Vec<usize>,
    stats: FactoringStats,
    schedule: Vec<ScheduleEvent>,
    /// Constant multiplier applied to root values (in `space`).
    scale: f64,
}

impl ExecutionTrace {
    pub fn tree(&self) -> &FactoringTree {
        &self.tree
    }

    pub fn nodes(&self) -> &[TraceNode] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &TraceNode {
        &self.nodes[id]
    }

    pub fn root(&self) -> &TraceNode {
        &self.nodes[self.tree.root()]
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn evidence(&self) -> &Evidence {
        &self.evidence
    }

    /// Variables whose states make up an explanation, in id order.
    pub fn maximized(&self) -> &[VarId] {
        &self.maximized
    }

    pub fn cardinality(&self, v: VarId) -> usize {
        self.cards[v]
    }

    pub fn stats(&self) -> FactoringStats {
        self.stats
    }

    pub fn schedule(&self) -> &[ScheduleEvent] {
        &self.schedule
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Best root value, scaled, in the trace's space.
    pub fn best_value(&self) -> f64 {
        self.space.mul(self.root().result.value(0), self.scale)
    }

    pub fn best_assignment(&self) -> Assignment {
        self.root().result.traceback(0)
    }
}

/// Executes `tree` over `factors`, keeping every intermediate table.
pub fn execute(
    factors: &[Factor],
    tree: FactoringTree,
    space: Space,
    evidence: Evidence,
    maximized: Vec<VarId>,
    cards: Vec<usize>,
) -> Result<ExecutionTrace> {
    let mut stats = FactoringStats::default();
    let mut schedule = Vec::new();
    let mut nodes: Vec<TraceNode> = Vec::with_capacity(tree.nodes().len());
    for (id, plan) in tree.nodes().iter().enumerate() {
        let combined = match plan.kind {
            NodeKind::Leaf(i) => factors[i].clone(),
            NodeKind::Product(l, r) => {
                let p = nodes[l].result.conformal_product(&nodes[r].result)?;
                stats.multiplications += p.len() as u64;
                p
            }
        };
        debug_assert_eq!(combined.scope(), plan.scope.as_slice());
        stats.max_dimensionality = stats.max_dimensionality.max(combined.scope().len());

        let summed = if plan.sum_set.is_empty() {
            None
        } else {
            let s = combined.sum_out(&plan.sum_set)?;
            stats.additions += (combined.len() - s.len()) as u64;
            schedule.extend(plan.sum_set.iter().map(|&v| ScheduleEvent { node: id, step: ScheduleStep::Sum(v) }));
            Some(s)
        };
        let before = summed.as_ref().unwrap_or(&combined);
        let result = before.reduce_max(&plan.reduce_set)?;
        stats.comparisons += (before.len() - result.len()) as u64;
        schedule.extend(plan.reduce_set.iter().map(|&v| ScheduleEvent { node: id, step: ScheduleStep::Max(v) }));
        nodes.push(TraceNode { combined, summed, result });
    }
    Ok(ExecutionTrace { tree, nodes, space, evidence, maximized, cards, stats, schedule, scale: space.one() })
}

pub(crate) fn set_scale(trace: &mut ExecutionTrace, scale: f64) {
    trace.scale = scale;
}

/// The most probable explanation of the non-evidence variables.
#[derive(Debug, Clone, PartialEq)]
pub struct MpeResult {
    /// States of every non-evidence variable.
    pub assignment: Assignment,
    /// Joint probability of `assignment` together with the evidence.
    pub probability: f64,
    pub stats: FactoringStats,
}

pub fn find_mpe(
    net: &Network,
    evidence: &Evidence,
    strategy: &Strategy,
    engine: Engine,
) -> Result<(MpeResult, ExecutionTrace)> {
    if net.is_empty() {
        return Err(Error::EmptyNetwork);
    }
    let factors = apply_evidence(net, evidence, engine.space)?;
    let free = free_variables(net, evidence);
    let elim = Elimination {
        maximize: free.iter().copied().collect::<BTreeSet<_>>(),
        sum: BTreeSet::new(),
        early: engine.early_reduction,
    };
    let tree = build_with(&factors, &elim, strategy)?;
    let trace = execute(&factors, tree, engine.space, evidence.clone(), free, net.cardinalities())?;
    let result = MpeResult {
        assignment: trace.best_assignment(),
        probability: engine.space.to_prob(trace.best_value()),
        stats: trace.stats(),
    };
    Ok((result, trace))
}

/// Joint probability of a full assignment of the non-evidence variables,
/// recomputed directly from the tables.
pub fn verify_assignment(net: &Network, evidence: &Evidence, a: &Assignment) -> Result<f64> {
    evidence.validate(net)?;
    let mut states = Vec::with_capacity(net.len());
    for v in 0..net.len() {
        let s = match (evidence.get(v), a.get(v)) {
            (Some(e), Some(s)) if e != s => return Err(Error::QueryOverlapsEvidence(v)),
            (Some(e), _) => e,
            (None, Some(s)) => s,
            (None, None) => return Err(Error::PartialAssignment(v)),
        };
        if s >= net.cardinality(v) {
            return Err(Error::StateOutOfRange { variable: v, state: s, cardinality: net.cardinality(v) });
        }
        states.push(s);
    }
    let mut p = 1.0;
    for cpt in net.cpts() {
        let config: Vec<usize> = cpt.parents.iter().map(|&q| states[q]).collect();
        p *= net.probability(cpt.child, states[cpt.child], &config);
    }
    Ok(p)
}
