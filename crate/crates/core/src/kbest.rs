//! Ranked enumeration of explanations over a saved execution trace.
//!
//! Every node of the factoring tree is viewed as a family of ranked candidate
//! streams, one per instantiation ("context") of the node's table. A stream
//! lists the completions of the variables eliminated below the node in
//! non-increasing value order:
//!
//! * a max-reducing node merges the streams of its child contexts, one per
//!   state of the reduced variables, keeping one integer rank per context;
//! * a product node combines two child streams through a frontier of rank
//!   pairs `(i, j)`, generated by the pair `gen` rule;
//! * subtrees without reductions are constants and are folded into their
//!   parents; summing nodes rescale the stream of one representative context.
//!
//! Rank one of every stream comes straight from the saved tables. Deeper
//! ranks are materialized lazily, per context, and memoized, so each call to
//! [`EvalTree::next_mpe`] touches every tree node at most once.
//!
//! Candidates are ordered by value (within [`crate::space::TIE_TOLERANCE`])
//! and then by completion: the lexicographically larger one, in variable-id
//! order, ranks first.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::error::Result;
use crate::factor::{Assignment, Factor};
use crate::factoring::{FactoringStats, NodeId, NodeKind, Strategy};
use crate::mpe::{find_mpe, Engine, ExecutionTrace};
use crate::network::{Evidence, Network};
use crate::space::Space;

/// One entry of a ranked stream.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    /// In the trace's value space.
    pub value: f64,
    /// States of the variables eliminated below the stream's node.
    pub completion: Assignment,
}

impl Candidate {
    fn ranks_before(&self, other: &Candidate, space: Space) -> bool {
        match space.rank_values(self.value, other.value) {
            Ordering::Less => true,
            Ordering::Greater => false,
            Ordering::Equal => self.completion > other.completion,
        }
    }
}

/// A returned explanation.
#[derive(Debug, Clone, PartialEq)]
pub struct Explanation {
    pub assignment: Assignment,
    pub probability: f64,
    pub rank: usize,
    /// Tree nodes that had to compute something for this explanation.
    pub visits: usize,
}

/// Successor of an integer rank: `rank + 1`, or 0 once `domain` is used up.
pub fn gen_next(rank: usize, domain: usize) -> usize {
    if rank < domain {
        rank + 1
    } else {
        0
    }
}

/// Pairs opened up by consuming `(i, j)`.
///
/// `(i, j + 1)` follows once `(i - 1, j + 1)` has been consumed and
/// `(i + 1, j)` once `(i + 1, j - 1)` has; pairs with a zero coordinate count
/// as consumed. Results stay within `bounds`.
pub fn gen_next_pair(
    current: (usize, usize),
    marked: &BTreeSet<(usize, usize)>,
    bounds: (u128, u128),
) -> Vec<(usize, usize)> {
    let (i, j) = current;
    let exists = |p: (usize, usize)| p.0 == 0 || p.1 == 0 || marked.contains(&p);
    let mut out = Vec::with_capacity(2);
    if ((j + 1) as u128) <= bounds.1 && exists((i - 1, j + 1)) {
        out.push((i, j + 1));
    }
    if ((i + 1) as u128) <= bounds.0 && exists((i + 1, j - 1)) {
        out.push((i + 1, j));
    }
    out
}

/// Frontier over rank pairs of two child streams, for one product context.
#[derive(Debug)]
struct PairStream {
    items: Vec<Candidate>,
    marked: BTreeSet<(usize, usize)>,
    frontier: Vec<((usize, usize), Candidate)>,
    pending: Option<(usize, usize)>,
}

/// Merge over the reduced variables' states, for one reduction context.
#[derive(Debug)]
struct MergeStream {
    items: Vec<Candidate>,
    /// (index into the table below the reduction, states of the reduced
    /// variables, current rank, candidate at that rank or None if drained)
    heads: Vec<(usize, Assignment, usize, Option<Candidate>)>,
    pending: Option<usize>,
}

/// The rearranged evaluation tree plus all marks.
#[derive(Debug)]
pub struct EvalTree {
    trace: ExecutionTrace,
    retained: Vec<bool>,
    /// Stream length of each node's result.
    domain: Vec<u128>,
    /// Stream length below each node's reduction.
    below: Vec<u128>,
    pairs: Vec<BTreeMap<usize, PairStream>>,
    merges: Vec<BTreeMap<usize, MergeStream>>,
    consumed: usize,
    visits: usize,
    visit_limit: usize,
}

/// Rearranges a finished trace for ranked queries. Rank one is considered
/// already consumed.
pub fn build_eval_tree(trace: ExecutionTrace) -> EvalTree {
    let tree = trace.tree();
    let n = tree.nodes().len();
    let mut retained = vec![false; n];
    let mut domain = vec![1u128; n];
    let mut below = vec![1u128; n];
    for (id, node) in tree.nodes().iter().enumerate() {
        let (child_retained, child_domain) = match node.kind {
            NodeKind::Leaf(_) => (false, 1),
            NodeKind::Product(l, r) => (retained[l] || retained[r], domain[l].saturating_mul(domain[r])),
        };
        retained[id] = child_retained || !node.reduce_set.is_empty();
        below[id] = child_domain;
        domain[id] = node.reduce_set.iter().fold(child_domain, |d, &v| d.saturating_mul(trace.cardinality(v) as u128));
    }
    let free = trace.maximized().len();
    debug_assert!(trace.root().result.scope().is_empty(), "root must eliminate everything");
    EvalTree {
        retained,
        domain,
        below,
        pairs: (0..n).map(|_| BTreeMap::new()).collect(),
        merges: (0..n).map(|_| BTreeMap::new()).collect(),
        consumed: 1,
        visits: 0,
        visit_limit: (2 * free).saturating_sub(1),
        trace,
    }
}

impl EvalTree {
    pub fn trace(&self) -> &ExecutionTrace {
        &self.trace
    }

    /// Number of distinct explanations the tree can produce.
    pub fn total(&self) -> u128 {
        self.domain[self.trace.tree().root()]
    }

    pub fn consumed(&self) -> usize {
        self.consumed
    }

    pub fn is_exhausted(&self) -> bool {
        self.consumed as u128 >= self.total()
    }

    /// Upper bound on visits per call: reduction nodes plus product nodes
    /// joining two reducing subtrees.
    pub fn visit_limit(&self) -> usize {
        self.visit_limit
    }

    /// Whether `node` has any reduction in its subtree.
    pub fn is_retained(&self, node: NodeId) -> bool {
        self.retained[node]
    }

    /// The rank-one explanation, straight from the root table.
    pub fn first(&self) -> Explanation {
        let space = self.trace.space();
        Explanation {
            assignment: self.trace.best_assignment(),
            probability: space.to_prob(self.trace.best_value()),
            rank: 1,
            visits: 0,
        }
    }

    /// The next explanation in rank order, or `None` once every assignment
    /// has been returned.
    pub fn next_mpe(&mut self) -> Option<Explanation> {
        if self.is_exhausted() {
            return None;
        }
        self.visits = 0;
        let rank = self.consumed + 1;
        let root = self.trace.tree().root();
        let c = self.out(root, 0, rank)?;
        let visits = self.visits;
        debug_assert!(visits <= self.visit_limit, "next-MPE visited {visits} nodes, limit {}", self.visit_limit);
        self.consumed = rank;
        let space = self.trace.space();
        Some(Explanation {
            assignment: c.completion,
            probability: space.to_prob(space.mul(c.value, self.trace.scale())),
            rank,
            visits,
        })
    }

    /// Candidate `rank` (1-based) of `node`'s result stream at table index
    /// `context`.
    pub fn node_candidate(&mut self, node: NodeId, context: usize, rank: usize) -> Option<Candidate> {
        self.out(node, context, rank)
    }

    /// Stream length of `node`'s result streams.
    pub fn node_domain(&self, node: NodeId) -> u128 {
        self.domain[node]
    }

    fn from_table(f: &Factor, index: usize) -> Candidate {
        Candidate { value: f.value(index), completion: f.traceback(index) }
    }

    fn out(&mut self, node: NodeId, s: usize, rank: usize) -> Option<Candidate> {
        if rank == 0 || rank as u128 > self.domain[node] {
            return None;
        }
        let tn = self.trace.node(node);
        if rank == 1 {
            return Some(Self::from_table(&tn.result, s));
        }
        let plan = self.trace.tree().node(node);
        if !plan.reduce_set.is_empty() {
            self.merged(node, s, rank)
        } else {
            self.below_reduction(node, s, rank)
        }
    }

    /// Stream of the table the node's reduction reads from.
    fn below_reduction(&mut self, node: NodeId, v: usize, rank: usize) -> Option<Candidate> {
        if rank as u128 > self.below[node] {
            return None;
        }
        let tn = self.trace.node(node);
        let Some(summed) = tn.summed.as_ref() else {
            return self.combined(node, v, rank);
        };
        if rank == 1 {
            return Some(Self::from_table(summed, v));
        }
        // Every context of the summed variables ranks completions the same
        // way, up to a constant factor. Walk one with a non-zero best value.
        let space = self.trace.space();
        let sum_set = &self.trace.tree().node(node).sum_set;
        let combined = &tn.combined;
        let base = summed.entry_assignment(v);
        let sum_cards: Vec<usize> = sum_set.iter().map(|&x| self.trace.cardinality(x)).collect();
        let total: usize = sum_cards.iter().product();
        let mut pick = None;
        for k in 0..total {
            let mut a = base.clone();
            let mut rest = k;
            for (x, c) in sum_set.iter().zip(&sum_cards).rev() {
                a.insert(*x, rest % c);
                rest /= c;
            }
            let u = combined.index_of_assignment(&a).expect("summed context covers the scope");
            if pick.is_none() {
                pick = Some(u);
            }
            if !space.is_zero(combined.value(u)) {
                pick = Some(u);
                break;
            }
        }
        let u = pick.expect("at least one context");
        let scale = space.div(summed.value(v), combined.value(u));
        let zero = space.is_zero(summed.value(v));
        let c = self.combined(node, u, rank)?;
        Some(Candidate { value: if zero { space.zero() } else { space.mul(c.value, scale) }, completion: c.completion })
    }

    fn combined(&mut self, node: NodeId, u: usize, rank: usize) -> Option<Candidate> {
        if rank as u128 > self.below[node] {
            return None;
        }
        let tn = self.trace.node(node);
        if rank == 1 {
            return Some(Self::from_table(&tn.combined, u));
        }
        let NodeKind::Product(l, r) = self.trace.tree().node(node).kind else {
            return None;
        };
        let a = tn.combined.entry_assignment(u);
        let lctx = self.trace.node(l).result.index_of_assignment(&a).expect("left scope within product");
        let rctx = self.trace.node(r).result.index_of_assignment(&a).expect("right scope within product");
        let space = self.trace.space();
        match (self.retained[l], self.retained[r]) {
            (true, true) => self.paired(node, u, (l, lctx), (r, rctx), rank),
            (true, false) => {
                let k = Self::from_table(&self.trace.node(r).result, rctx);
                let c = self.out(l, lctx, rank)?;
                Some(Candidate {
                    value: space.mul(c.value, k.value),
                    completion: c.completion.merge_disjoint(&k.completion).ok()?,
                })
            }
            (false, true) => {
                let k = Self::from_table(&self.trace.node(l).result, lctx);
                let c = self.out(r, rctx, rank)?;
                Some(Candidate {
                    value: space.mul(k.value, c.value),
                    completion: k.completion.merge_disjoint(&c.completion).ok()?,
                })
            }
            (false, false) => None,
        }
    }

    fn paired(
        &mut self,
        node: NodeId,
        u: usize,
        left: (NodeId, usize),
        right: (NodeId, usize),
        rank: usize,
    ) -> Option<Candidate> {
        let space = self.trace.space();
        let mut st = match self.pairs[node].remove(&u) {
            Some(st) => st,
            None => PairStream {
                items: vec![Self::from_table(&self.trace.node(node).combined, u)],
                marked: BTreeSet::from([(1, 1)]),
                frontier: Vec::new(),
                pending: Some((1, 1)),
            },
        };
        let bounds = (self.domain[left.0], self.domain[right.0]);
        while st.items.len() < rank {
            self.visits += 1;
            if let Some(cur) = st.pending.take() {
                for (i, j) in gen_next_pair(cur, &st.marked, bounds) {
                    let (Some(a), Some(b)) = (self.out(left.0, left.1, i), self.out(right.0, right.1, j)) else {
                        continue;
                    };
                    let completion = a.completion.merge_disjoint(&b.completion).expect("disjoint subtrees");
                    st.frontier.push(((i, j), Candidate { value: space.mul(a.value, b.value), completion }));
                }
            }
            let best = (0..st.frontier.len()).reduce(|b, k| {
                if st.frontier[k].1.ranks_before(&st.frontier[b].1, space) {
                    k
                } else {
                    b
                }
            });
            let Some(best) = best else { break };
            let (pair, c) = st.frontier.swap_remove(best);
            st.marked.insert(pair);
            st.pending = Some(pair);
            st.items.push(c);
        }
        let out = st.items.get(rank - 1).cloned();
        self.pairs[node].insert(u, st);
        out
    }

    fn merged(&mut self, node: NodeId, s: usize, rank: usize) -> Option<Candidate> {
        let space = self.trace.space();
        let mut st = match self.merges[node].remove(&s) {
            Some(st) => st,
            None => self.open_merge(node, s),
        };
        while st.items.len() < rank {
            self.visits += 1;
            if let Some(h) = st.pending.take() {
                let (u, ref r, k, _) = st.heads[h];
                let r = r.clone();
                let next = gen_next(k, self.below[node].min(usize::MAX as u128) as usize);
                st.heads[h].2 = next;
                st.heads[h].3 = if next == 0 {
                    None
                } else {
                    self.below_reduction(node, u, next).map(|c| Candidate {
                        value: c.value,
                        completion: c.completion.merge_disjoint(&r).expect("reduced variables are new"),
                    })
                };
            }
            let best = (0..st.heads.len()).filter(|&k| st.heads[k].3.is_some()).reduce(|b, k| {
                let (cb, ck) = (st.heads[b].3.as_ref().unwrap(), st.heads[k].3.as_ref().unwrap());
                if ck.ranks_before(cb, space) {
                    k
                } else {
                    b
                }
            });
            let Some(best) = best else { break };
            st.items.push(st.heads[best].3.clone().unwrap());
            st.pending = Some(best);
        }
        let out = st.items.get(rank - 1).cloned();
        self.merges[node].insert(s, st);
        out
    }

    /// Heads of a reduction context come from the saved table below the
    /// reduction; the best of them is rank one and is consumed immediately.
    fn open_merge(&self, node: NodeId, s: usize) -> MergeStream {
        let space = self.trace.space();
        let tn = self.trace.node(node);
        let below = tn.before_reduction();
        let reduce_set = &self.trace.tree().node(node).reduce_set;
        let ctx = tn.result.entry_assignment(s);
        let cards: Vec<usize> = reduce_set.iter().map(|&x| self.trace.cardinality(x)).collect();
        let total: usize = cards.iter().product();
        let mut heads = Vec::with_capacity(total);
        for k in 0..total {
            let mut r = Assignment::new();
            let mut rest = k;
            for (x, c) in reduce_set.iter().zip(&cards).rev() {
                r.insert(*x, rest % c);
                rest /= c;
            }
            let u = below.index_of_assignment(&ctx.overlay(&r)).expect("reduction context");
            let c = Self::from_table(below, u);
            let c = Candidate {
                value: c.value,
                completion: c.completion.merge_disjoint(&r).expect("reduced variables are new"),
            };
            heads.push((u, r, 1, Some(c)));
        }
        let best =
            (0..heads.len())
                .reduce(|b, k| {
                    if heads[k].3.as_ref().unwrap().ranks_before(heads[b].3.as_ref().unwrap(), space) {
                        k
                    } else {
                        b
                    }
                })
                .expect("non-empty reduction");
        let first = heads[best].3.clone().unwrap();
        debug_assert_eq!(first.completion, tn.result.traceback(s));
        MergeStream { items: vec![first], heads, pending: Some(best) }
    }
}

/// Result of a k-best query.
#[derive(Debug, Clone, PartialEq)]
pub struct KBest {
    pub explanations: Vec<Explanation>,
    /// True when every possible explanation has been returned.
    pub exhausted: bool,
    pub stats: FactoringStats,
}

/// Ranked explanations from an already built tree, starting at rank one.
pub fn enumerate(tree: &mut EvalTree, l: usize) -> Vec<Explanation> {
    let mut out = Vec::with_capacity(l.min(1024));
    if l == 0 {
        return out;
    }
    out.push(tree.first());
    while out.len() < l {
        match tree.next_mpe() {
            Some(e) => out.push(e),
            None => break,
        }
    }
    out
}

/// The `l` most probable explanations, best first.
pub fn find_l_mpe(net: &Network, evidence: &Evidence, l: usize, strategy: &Strategy, engine: Engine) -> Result<KBest> {
    let (_, trace) = find_mpe(net, evidence, strategy, engine)?;
    let stats = trace.stats();
    let mut tree = build_eval_tree(trace);
    let explanations = enumerate(&mut tree, l);
    Ok(KBest { explanations, exhausted: tree.is_exhausted(), stats })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integer_gen() {
        assert_eq!(gen_next(1, 4), 2);
        assert_eq!(gen_next(4, 4), 0);
        assert_eq!(gen_next(1, 1), 0);
    }

    #[test]
    fn pair_gen_rules() {
        let mut marked = BTreeSet::from([(1, 1)]);
        assert_eq!(gen_next_pair((1, 1), &marked, (4, 4)), vec![(1, 2), (2, 1)]);
        marked.insert((1, 2));
        // (2,1) not consumed yet: only the first row grows.
        assert_eq!(gen_next_pair((1, 2), &marked, (4, 4)), vec![(1, 3)]);
        marked.insert((2, 1));
        assert_eq!(gen_next_pair((2, 1), &marked, (4, 4)), vec![(2, 2), (3, 1)]);
        // with (2,1) already consumed, gen(1,2) would open (2,2) itself
        let both = BTreeSet::from([(1, 1), (2, 1), (1, 2)]);
        assert_eq!(gen_next_pair((1, 2), &both, (4, 4)), vec![(1, 3), (2, 2)]);
        assert!(gen_next_pair((2, 2), &BTreeSet::from([(1, 1), (1, 2), (2, 1), (2, 2)]), (2, 2)).is_empty());
    }
}
