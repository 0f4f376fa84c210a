//! Combination plans: binary trees over factors, annotated with the variables
//! summed out or max-reduced at each node.
//!
//! A tree is built in two passes. A strategy first decides the shape (which
//! factors are multiplied together and in what order). The shape is then
//! annotated by simulating the live distribution list bottom-up: whenever a
//! node's table holds a variable that no other live table mentions, it is
//! eliminated there, summed variables first.

use alloc::boxed::Box;
use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};
use crate::factor::Factor;
use crate::map::{can_maximize_with, can_sum_first};
use crate::network::VarId;

pub type NodeId = usize;

/// Largest factor count the exhaustive strategy accepts.
pub const EXHAUSTIVE_MAX_FACTORS: usize = 12;

/// How the combination tree is shaped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Strategy {
    /// Greedy elimination order, fewest neighbours first.
    MinDegree,
    /// Greedy elimination order, fewest fill-in edges first.
    MinFill,
    /// Subset dynamic program minimizing the maximum dimensionality.
    Exhaustive,
    /// Left-deep product in input order.
    FileOrder,
    /// A caller-supplied tree.
    Explicit(Plan),
}

impl Strategy {
    /// The command-line names of the built-in strategies.
    pub const NAMES: [&'static str; 4] = ["min-degree", "min-fill", "exhaustive", "file-order"];

    pub fn builtin() -> [Strategy; 4] {
        [Strategy::MinDegree, Strategy::MinFill, Strategy::Exhaustive, Strategy::FileOrder]
    }

    pub fn name(&self) -> &'static str {
        match self {
            Strategy::MinDegree => "min-degree",
            Strategy::MinFill => "min-fill",
            Strategy::Exhaustive => "exhaustive",
            Strategy::FileOrder => "file-order",
            Strategy::Explicit(_) => "explicit",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> core::result::Result<Self, Self::Err> {
        match s {
            "min-degree" => Ok(Strategy::MinDegree),
            "min-fill" => Ok(Strategy::MinFill),
            "exhaustive" => Ok(Strategy::Exhaustive),
            "file-order" => Ok(Strategy::FileOrder),
            other => Err(format!("unknown strategy `{other}` (expected one of {})", Strategy::NAMES.join(", "))),
        }
    }
}

/// An explicit combination tree over factor indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Plan {
    Leaf(usize),
    Product(Box<Plan>, Box<Plan>),
}

impl Plan {
    pub fn leaf(i: usize) -> Plan {
        Plan::Leaf(i)
    }

    pub fn product(left: Plan, right: Plan) -> Plan {
        Plan::Product(Box::new(left), Box::new(right))
    }

    fn leaves(&self, out: &mut Vec<usize>) {
        match self {
            Plan::Leaf(i) => out.push(*i),
            Plan::Product(l, r) => {
                l.leaves(out);
                r.leaves(out);
            }
        }
    }
}

impl fmt::Display for Plan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Plan::Leaf(i) => write!(f, "{i}"),
            Plan::Product(l, r) => write!(f, "({l} * {r})"),
        }
    }
}

/// Which variables to eliminate and how.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Elimination {
    pub maximize: BTreeSet<VarId>,
    pub sum: BTreeSet<VarId>,
    /// Eliminate as soon as possible; otherwise everything waits for the root.
    pub early: bool,
}

impl Elimination {
    pub fn maximize_all(vars: impl IntoIterator<Item = VarId>) -> Self {
        Elimination { maximize: vars.into_iter().collect(), sum: BTreeSet::new(), early: true }
    }

    pub fn mixed(maximize: BTreeSet<VarId>, sum: BTreeSet<VarId>) -> Self {
        Elimination { maximize, sum, early: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Leaf(usize),
    Product(NodeId, NodeId),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlanNode {
    pub kind: NodeKind,
    /// Scope of the node's table before any elimination.
    pub scope: Vec<VarId>,
    /// Summed out first.
    pub sum_set: Vec<VarId>,
    /// Then max-reduced.
    pub reduce_set: Vec<VarId>,
    /// Scope after both.
    pub out_scope: Vec<VarId>,
}

/// Counters reported by a run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FactoringStats {
    pub max_dimensionality: usize,
    pub multiplications: u64,
    pub comparisons: u64,
    pub additions: u64,
}

/// An annotated combination tree. Nodes are stored children-first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FactoringTree {
    nodes: Vec<PlanNode>,
    root: NodeId,
    leaf_count: usize,
}

impl FactoringTree {
    pub fn nodes(&self) -> &[PlanNode] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &PlanNode {
        &self.nodes[id]
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn leaf_count(&self) -> usize {
        self.leaf_count
    }

    pub fn leaf_node(&self, factor: usize) -> Option<NodeId> {
        self.nodes.iter().position(|n| n.kind == NodeKind::Leaf(factor))
    }

    pub fn parent(&self, id: NodeId) -> Option<NodeId> {
        self.nodes.iter().position(|n| match n.kind {
            NodeKind::Product(l, r) => l == id || r == id,
            NodeKind::Leaf(_) => false,
        })
    }

    /// Largest table scope anywhere in the tree, computed symbolically.
    pub fn predict_max_dimensionality(&self) -> usize {
        self.nodes.iter().map(|n| n.scope.len()).max().unwrap_or(0)
    }

    /// Leaf factor indices under `id`.
    pub fn leaves_under(&self, id: NodeId) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![id];
        while let Some(n) = stack.pop() {
            match self.nodes[n].kind {
                NodeKind::Leaf(i) => out.push(i),
                NodeKind::Product(l, r) => {
                    stack.push(r);
                    stack.push(l);
                }
            }
        }
        out
    }

    /// Every eliminated variable, with the node that eliminates it.
    pub fn eliminations(&self) -> Vec<(VarId, NodeId)> {
        let mut out = Vec::new();
        for (id, n) in self.nodes.iter().enumerate() {
            out.extend(n.sum_set.iter().chain(&n.reduce_set).map(|&v| (v, id)));
        }
        out
    }

    /// Renders the computation, e.g. `max{c}(sum{a}(p(a) * p(c|a)))`.
    pub fn render(&self, leaf: &dyn Fn(usize) -> String, var: &dyn Fn(VarId) -> String) -> String {
        self.render_node(self.root, leaf, var)
    }

    fn render_node(&self, id: NodeId, leaf: &dyn Fn(usize) -> String, var: &dyn Fn(VarId) -> String) -> String {
        let n = &self.nodes[id];
        let core = match n.kind {
            NodeKind::Leaf(i) => leaf(i),
            NodeKind::Product(l, r) => {
                format!("{} * {}", self.render_node(l, leaf, var), self.render_node(r, leaf, var))
            }
        };
        let names = |vs: &[VarId]| vs.iter().map(|&v| var(v)).collect::<Vec<_>>().join(",");
        let mut text = core;
        let mut wrapped = false;
        if !n.sum_set.is_empty() {
            text = format!("sum{{{}}}({text})", names(&n.sum_set));
            wrapped = true;
        }
        if !n.reduce_set.is_empty() {
            text = format!("max{{{}}}({text})", names(&n.reduce_set));
            wrapped = true;
        }
        if !wrapped && matches!(n.kind, NodeKind::Product(..)) {
            text = format!("({text})");
        }
        text
    }
}

/// Shape-only tree produced by a strategy.
#[derive(Debug, Default)]
struct Shape {
    kinds: Vec<NodeKind>,
}

impl Shape {
    fn leaf(&mut self, i: usize) -> NodeId {
        self.kinds.push(NodeKind::Leaf(i));
        self.kinds.len() - 1
    }

    fn product(&mut self, l: NodeId, r: NodeId) -> NodeId {
        self.kinds.push(NodeKind::Product(l, r));
        self.kinds.len() - 1
    }
}

/// Builds an MPE factoring that max-reduces every variable in `reducible`.
pub fn build_factoring(factors: &[Factor], reducible: &BTreeSet<VarId>, strategy: &Strategy) -> Result<FactoringTree> {
    build_with(factors, &Elimination::maximize_all(reducible.iter().copied()), strategy)
}

/// Builds a factoring for an arbitrary mix of summed and maximized variables.
pub fn build_with(factors: &[Factor], elim: &Elimination, strategy: &Strategy) -> Result<FactoringTree> {
    let scopes: Vec<Vec<VarId>> = factors.iter().map(|f| f.scope().to_vec()).collect();
    build_from_scopes(&scopes, elim, strategy)
}

pub fn build_from_scopes(scopes: &[Vec<VarId>], elim: &Elimination, strategy: &Strategy) -> Result<FactoringTree> {
    if scopes.is_empty() {
        return Err(Error::EmptyFactorList);
    }
    let present: BTreeSet<VarId> = scopes.iter().flatten().copied().collect();
    if let Some(&v) = elim.maximize.iter().chain(&elim.sum).find(|v| !present.contains(v)) {
        return Err(Error::NotInScope(v));
    }
    if let Some(&v) = elim.maximize.intersection(&elim.sum).next() {
        return Err(Error::InvalidPlan(format!("variable {v} is both summed and maximized")));
    }

    let shape = match strategy {
        Strategy::Explicit(plan) => explicit_shape(plan, scopes.len())?,
        Strategy::FileOrder => {
            let (mut shape, units) = base_units(scopes);
            let mut acc = units[0].0;
            for &(n, _) in &units[1..] {
                acc = shape.product(acc, n);
            }
            shape
        }
        Strategy::MinDegree | Strategy::MinFill => {
            let order = elimination_order(scopes, elim, strategy == &Strategy::MinFill);
            shape_from_order(scopes, &order)
        }
        Strategy::Exhaustive => exhaustive_shape(scopes, elim)?,
    };
    annotate(shape, scopes, elim)
}

/// Leaf nodes for every factor, with empty-scope factors folded into the
/// first non-empty one. Returns the units that strategies arrange.
fn base_units(scopes: &[Vec<VarId>]) -> (Shape, Vec<(NodeId, BTreeSet<VarId>)>) {
    let mut shape = Shape::default();
    let leaves: Vec<NodeId> = (0..scopes.len()).map(|i| shape.leaf(i)).collect();
    let mut units = Vec::new();
    let first = scopes.iter().position(|s| !s.is_empty());
    match first {
        None => units.extend(leaves.iter().map(|&n| (n, BTreeSet::new()))),
        Some(f) => {
            let mut anchor = leaves[f];
            for (i, s) in scopes.iter().enumerate() {
                if s.is_empty() {
                    anchor = shape.product(anchor, leaves[i]);
                }
            }
            for (i, s) in scopes.iter().enumerate() {
                if i == f {
                    units.push((anchor, s.iter().copied().collect()));
                } else if !s.is_empty() {
                    units.push((leaves[i], s.iter().copied().collect()));
                }
            }
        }
    }
    (shape, units)
}

fn explicit_shape(plan: &Plan, n: usize) -> Result<Shape> {
    let mut leaves = Vec::new();
    plan.leaves(&mut leaves);
    let mut sorted = leaves.clone();
    sorted.sort_unstable();
    if sorted != (0..n).collect::<Vec<_>>() {
        return Err(Error::InvalidPlan(format!("plan {plan} must use each of the {n} factors exactly once")));
    }
    fn go(plan: &Plan, shape: &mut Shape) -> NodeId {
        match plan {
            Plan::Leaf(i) => shape.leaf(*i),
            Plan::Product(l, r) => {
                let l = go(l, shape);
                let r = go(r, shape);
                shape.product(l, r)
            }
        }
    }
    let mut shape = Shape::default();
    go(plan, &mut shape);
    Ok(shape)
}

/// Greedy elimination order over the interaction graph. Summed variables
/// come first; ties go to the lowest variable id.
pub fn elimination_order(scopes: &[Vec<VarId>], elim: &Elimination, min_fill: bool) -> Vec<VarId> {
    let vars: BTreeSet<VarId> = scopes.iter().flatten().copied().collect();
    let max_id = vars.iter().next_back().map_or(0, |&v| v + 1);
    let mut adj: Vec<BTreeSet<VarId>> = vec![BTreeSet::new(); max_id];
    for s in scopes {
        for &a in s {
            for &b in s {
                if a != b {
                    adj[a].insert(b);
                }
            }
        }
    }
    let summed: BTreeSet<VarId> = vars.iter().copied().filter(|v| elim.sum.contains(v)).collect();
    let rest: BTreeSet<VarId> = vars.difference(&summed).copied().collect();

    let mut order = Vec::with_capacity(vars.len());
    for mut group in [summed, rest] {
        while !group.is_empty() {
            let score = |v: VarId| -> usize {
                if min_fill {
                    let nb: Vec<VarId> = adj[v].iter().copied().collect();
                    let mut fill = 0;
                    for i in 0..nb.len() {
                        for j in i + 1..nb.len() {
                            if !adj[nb[i]].contains(&nb[j]) {
                                fill += 1;
                            }
                        }
                    }
                    fill
                } else {
                    adj[v].len()
                }
            };
            // min_by_key keeps the first minimum, i.e. the lowest id.
            let v = group.iter().copied().min_by_key(|&v| score(v)).unwrap();
            group.remove(&v);
            let nb: Vec<VarId> = adj[v].iter().copied().collect();
            for &a in &nb {
                adj[a].remove(&v);
                for &b in &nb {
                    if a != b {
                        adj[a].insert(b);
                    }
                }
            }
            adj[v].clear();
            order.push(v);
        }
    }
    order
}

/// Turns an elimination order into a tree: at each variable, every live unit
/// mentioning it is multiplied together, left-deep in creation order.
fn shape_from_order(scopes: &[Vec<VarId>], order: &[VarId]) -> Shape {
    let (mut shape, mut live) = base_units(scopes);
    for &v in order {
        let (hit, miss): (Vec<_>, Vec<_>) = live.into_iter().partition(|(_, s)| s.contains(&v));
        live = miss;
        let mut it = hit.into_iter();
        if let Some((mut node, mut scope)) = it.next() {
            for (n, s) in it {
                node = shape.product(node, n);
                scope.extend(s);
            }
            scope.remove(&v);
            live.push((node, scope));
        }
    }
    let mut it = live.into_iter();
    if let Some((mut node, _)) = it.next() {
        for (n, _) in it {
            node = shape.product(node, n);
        }
    }
    shape
}

/// Subset dynamic program over the base units: for every subset, the best
/// split into two halves minimizing the largest table scope.
fn exhaustive_shape(scopes: &[Vec<VarId>], elim: &Elimination) -> Result<Shape> {
    let (mut shape, units) = base_units(scopes);
    let k = units.len();
    if k > EXHAUSTIVE_MAX_FACTORS {
        return Err(Error::TooManyFactorsForExhaustive { count: k, max: EXHAUSTIVE_MAX_FACTORS });
    }
    if k == 1 {
        return Ok(shape);
    }
    let vars: Vec<VarId> =
        units.iter().flat_map(|(_, s)| s.iter().copied()).collect::<BTreeSet<_>>().into_iter().collect();
    if vars.len() > 128 {
        return Err(Error::TooManyFactorsForExhaustive { count: vars.len(), max: 128 });
    }
    let bit = |v: VarId| 1u128 << vars.binary_search(&v).unwrap();
    let unit_mask: Vec<u128> = units.iter().map(|(_, s)| s.iter().fold(0, |m, &v| m | bit(v))).collect();
    let eliminable: u128 =
        vars.iter().filter(|v| elim.maximize.contains(v) || elim.sum.contains(v)).fold(0, |m, &v| m | bit(v));

    let full = (1usize << k) - 1;
    let mut inside = vec![0u128; full + 1];
    for s in 1..=full {
        let low = s.trailing_zeros() as usize;
        inside[s] = inside[s & (s - 1)] | unit_mask[low];
    }
    // Variables of a subset still visible to the rest of the tree.
    let out = |s: usize| -> u128 {
        let here = inside[s];
        let elsewhere = inside[full & !s];
        here & (elsewhere | !eliminable)
    };

    let mut cost = vec![usize::MAX; full + 1];
    let mut split = vec![0usize; full + 1];
    for (i, m) in unit_mask.iter().enumerate() {
        cost[1 << i] = m.count_ones() as usize;
    }
    for s in 1..=full {
        if s.count_ones() < 2 {
            continue;
        }
        let low = s & s.wrapping_neg();
        let rest = s & !low;
        // Submasks of `rest`, each joined with the lowest bit, form the left side.
        let mut sub = rest;
        loop {
            let a = sub | low;
            if a != s {
                let b = s & !a;
                let dim = (out(a) | out(b)).count_ones() as usize;
                let c = cost[a].max(cost[b]).max(dim);
                if c < cost[s] || (c == cost[s] && a < split[s]) {
                    cost[s] = c;
                    split[s] = a;
                }
            }
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & rest;
        }
    }

    fn emit(s: usize, split: &[usize], units: &[(NodeId, BTreeSet<VarId>)], shape: &mut Shape) -> NodeId {
        if s.count_ones() == 1 {
            return units[s.trailing_zeros() as usize].0;
        }
        let a = split[s];
        let l = emit(a, split, units, shape);
        let r = emit(s & !a, split, units, shape);
        shape.product(l, r)
    }
    emit(full, &split, &units, &mut shape);
    Ok(shape)
}

fn annotate(shape: Shape, scopes: &[Vec<VarId>], elim: &Elimination) -> Result<FactoringTree> {
    let kinds = shape.kinds;
    // The root is the only node nobody references.
    let mut referenced = vec![false; kinds.len()];
    for k in &kinds {
        if let NodeKind::Product(l, r) = *k {
            referenced[l] = true;
            referenced[r] = true;
        }
    }
    let roots: Vec<NodeId> = (0..kinds.len()).filter(|&i| !referenced[i]).collect();
    if roots.len() != 1 {
        return Err(Error::InvalidPlan(format!("shape has {} roots", roots.len())));
    }
    let root = roots[0];

    // Live distributions: every leaf from the start, then each combined table.
    let mut live: Vec<(NodeId, Vec<VarId>)> = kinds
        .iter()
        .enumerate()
        .filter_map(|(id, k)| match k {
            NodeKind::Leaf(i) => Some((id, scopes[*i].clone())),
            _ => None,
        })
        .collect();
    let not_summed = |v: VarId| !elim.sum.contains(&v);

    let mut nodes: Vec<PlanNode> = Vec::with_capacity(kinds.len());
    for (id, kind) in kinds.iter().enumerate() {
        let scope = match *kind {
            NodeKind::Leaf(i) => scopes[i].clone(),
            NodeKind::Product(l, r) => {
                let mut s = nodes[l].out_scope.clone();
                for &v in &nodes[r].out_scope {
                    if !s.contains(&v) {
                        s.push(v);
                    }
                }
                live.retain(|(n, _)| *n != l && *n != r);
                live.push((id, s.clone()));
                s
            }
        };
        let me = live.iter().position(|(n, _)| *n == id).expect("node is live");

        let mut sum_set = Vec::new();
        let mut reduce_set = Vec::new();
        if elim.early || id == root {
            let views: Vec<&[VarId]> = live.iter().map(|(_, s)| s.as_slice()).collect();
            sum_set = scope.iter().copied().filter(|v| elim.sum.contains(v) && can_sum_first(*v, &views)).collect();
            live[me].1.retain(|v| !sum_set.contains(v));
            let views: Vec<&[VarId]> = live.iter().map(|(_, s)| s.as_slice()).collect();
            reduce_set = live[me]
                .1
                .iter()
                .copied()
                .filter(|v| elim.maximize.contains(v) && can_maximize_with(*v, &views, not_summed))
                .collect();
            live[me].1.retain(|v| !reduce_set.contains(v));
        }
        let out_scope = live[me].1.clone();
        nodes.push(PlanNode { kind: *kind, scope, sum_set, reduce_set, out_scope });
    }

    if let Some(&v) = nodes[root].out_scope.iter().find(|v| elim.maximize.contains(v) || elim.sum.contains(v)) {
        return Err(Error::InvalidPlan(format!("variable {v} is never eliminated")));
    }
    let leaf_count = scopes.len();
    Ok(FactoringTree { nodes, root, leaf_count })
}
