//! Brute-force reference answers by enumerating the joint distribution.
//!
//! Deliberately independent of the factor machinery: every probability is a
//! plain product of table lookups in linear space. Only meant for small
//! networks.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::error::{Error, Result};
use crate::factor::Assignment;
use crate::network::{Evidence, Network, VarId};
use crate::space::TIE_TOLERANCE;

/// Largest number of joint states the oracle will walk.
pub const ORACLE_MAX_STATES: u128 = 1 << 24;

/// Every full instantiation consistent with the evidence, with its joint
/// probability, in odometer order (last variable fastest).
pub struct JointIter<'a> {
    net: &'a Network,
    free: Vec<VarId>,
    states: Vec<usize>,
    done: bool,
}

impl Iterator for JointIter<'_> {
    type Item = (Vec<usize>, f64);

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let states = self.states.clone();
        let mut p = 1.0;
        for cpt in self.net.cpts() {
            let mut row = 0;
            for &q in &cpt.parents {
                row = row * self.net.cardinality(q) + states[q];
            }
            p *= cpt.table[row * self.net.cardinality(cpt.child) + states[cpt.child]];
        }
        // advance
        self.done = true;
        for &v in self.free.iter().rev() {
            self.states[v] += 1;
            if self.states[v] < self.net.cardinality(v) {
                self.done = false;
                break;
            }
            self.states[v] = 0;
        }
        Some((states, p))
    }
}

/// Walks the joint distribution restricted to `evidence`.
pub fn enumerate_joint<'a>(net: &'a Network, evidence: &Evidence) -> Result<JointIter<'a>> {
    evidence.validate(net)?;
    let free: Vec<VarId> = (0..net.len()).filter(|&v| !evidence.contains(v)).collect();
    let size = free.iter().fold(1u128, |s, &v| s.saturating_mul(net.cardinality(v) as u128));
    if size > ORACLE_MAX_STATES {
        return Err(Error::TooLargeForOracle { size, max: ORACLE_MAX_STATES });
    }
    let mut states = vec![0; net.len()];
    for (v, s) in evidence.iter() {
        states[v] = s;
    }
    Ok(JointIter { net, free, states, done: net.is_empty() })
}

/// Sorts by value descending; values within the tie tolerance of a group's
/// first member form one group, larger assignments first.
fn rank(mut rows: Vec<(Assignment, f64)>) -> Vec<(Assignment, f64)> {
    rows.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(Ordering::Equal).then_with(|| b.0.cmp(&a.0)));
    let mut out = Vec::with_capacity(rows.len());
    let mut start = 0;
    while start < rows.len() {
        let head = rows[start].1;
        let mut end = start + 1;
        while end < rows.len() && head - rows[end].1 <= TIE_TOLERANCE * head.abs() {
            end += 1;
        }
        let mut group = rows[start..end].to_vec();
        group.sort_by(|a, b| b.0.cmp(&a.0));
        out.extend(group);
        start = end;
    }
    out
}

/// The `l` most probable assignments of the non-evidence variables.
pub fn oracle_top_l(net: &Network, evidence: &Evidence, l: usize) -> Result<Vec<(Assignment, f64)>> {
    let free: Vec<VarId> = (0..net.len()).filter(|&v| !evidence.contains(v)).collect();
    let rows: Vec<(Assignment, f64)> = enumerate_joint(net, evidence)?
        .map(|(s, p)| (Assignment::from_pairs(free.iter().map(|&v| (v, s[v]))), p))
        .collect();
    let mut ranked = rank(rows);
    ranked.truncate(l);
    Ok(ranked)
}

/// Every joint state of `query` with its probability together with the
/// evidence, best first.
pub fn oracle_map_ranked(
    net: &Network,
    evidence: &Evidence,
    query: &BTreeSet<VarId>,
) -> Result<Vec<(Assignment, f64)>> {
    if query.is_empty() {
        return Err(Error::EmptyQuery);
    }
    if let Some(&v) = query.iter().find(|&&v| v >= net.len()) {
        return Err(Error::UnknownVariableId(v));
    }
    if let Some(&v) = query.iter().find(|&&v| evidence.contains(v)) {
        return Err(Error::QueryOverlapsEvidence(v));
    }
    let mut marginal: BTreeMap<Assignment, f64> = BTreeMap::new();
    for (s, p) in enumerate_joint(net, evidence)? {
        *marginal.entry(Assignment::from_pairs(query.iter().map(|&v| (v, s[v])))).or_insert(0.0) += p;
    }
    Ok(rank(marginal.into_iter().collect()))
}

/// The best joint state of `query`.
pub fn oracle_map(net: &Network, evidence: &Evidence, query: &BTreeSet<VarId>) -> Result<(Assignment, f64)> {
    Ok(oracle_map_ranked(net, evidence, query)?.swap_remove(0))
}

/// Probability of the evidence.
pub fn oracle_evidence_probability(net: &Network, evidence: &Evidence) -> Result<f64> {
    Ok(enumerate_joint(net, evidence)?.map(|(_, p)| p).sum())
}
