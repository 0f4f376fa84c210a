//! Random networks and queries for testing and benchmarking.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::network::{Cpt, Evidence, Network, VarId, Variable};

/// Shape parameters for [`random_network`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NetworkShape {
    pub variables: usize,
    pub max_cardinality: usize,
    pub max_parents: usize,
}

fn variable<R: Rng + ?Sized>(rng: &mut R, i: usize, max_card: usize) -> Variable {
    let card = rng.random_range(2..=max_card.max(2));
    let states: Vec<alloc::string::String> = (0..card).map(|s| format!("s{s}")).collect();
    Variable { name: format!("x{i}"), states }
}

/// Strictly positive, normalized rows.
fn table<R: Rng + ?Sized>(rng: &mut R, rows: usize, card: usize) -> Vec<f64> {
    let mut t = Vec::with_capacity(rows * card);
    for _ in 0..rows {
        let row: Vec<f64> = (0..card).map(|_| 0.05 + rng.random::<f64>()).collect();
        let sum: f64 = row.iter().sum();
        t.extend(row.iter().map(|x| x / sum));
    }
    t
}

fn build<R: Rng + ?Sized>(rng: &mut R, vars: Vec<Variable>, parents: Vec<Vec<VarId>>) -> Network {
    let cpts = parents
        .into_iter()
        .enumerate()
        .map(|(child, parents)| {
            let rows = parents.iter().map(|&p| vars[p].states.len()).product();
            let table = table(rng, rows, vars[child].states.len());
            Cpt { child, parents, table }
        })
        .collect();
    Network::new(vars, cpts).expect("generated network is valid")
}

/// A random DAG whose parents are drawn from earlier variables.
pub fn random_network<R: Rng + ?Sized>(rng: &mut R, shape: NetworkShape) -> Network {
    let vars: Vec<Variable> = (0..shape.variables).map(|i| variable(rng, i, shape.max_cardinality)).collect();
    let parents = (0..shape.variables)
        .map(|i| {
            let k = rng.random_range(0..=shape.max_parents.min(i));
            let mut pool: Vec<VarId> = (0..i).collect();
            pool.shuffle(rng);
            let mut ps = pool[..k].to_vec();
            ps.sort_unstable();
            ps
        })
        .collect();
    build(rng, vars, parents)
}

/// A random singly connected network: an undirected random tree whose edges
/// are oriented at random, keeping at most `max_parents` parents per node.
pub fn random_polytree<R: Rng + ?Sized>(
    rng: &mut R,
    variables: usize,
    max_cardinality: usize,
    max_parents: usize,
) -> Network {
    let vars: Vec<Variable> = (0..variables).map(|i| variable(rng, i, max_cardinality)).collect();
    let mut parents: Vec<Vec<VarId>> = (0..variables).map(|_| Vec::new()).collect();
    // Node i attaches to an earlier node. Pointing i -> j needs room at j.
    for i in 1..variables {
        let j = rng.random_range(0..i);
        if parents[j].len() < max_parents && rng.random_bool(0.5) {
            parents[j].push(i);
        } else {
            parents[i].push(j);
        }
    }
    for ps in &mut parents {
        ps.sort_unstable();
    }
    build(rng, vars, parents)
}

/// Observes each variable with probability `rate`, at a random state.
pub fn random_evidence<R: Rng + ?Sized>(rng: &mut R, net: &Network, rate: f64) -> Evidence {
    let mut ev = Evidence::new();
    for v in 0..net.len() {
        if rng.random_bool(rate) {
            ev.insert(v, rng.random_range(0..net.cardinality(v)));
        }
    }
    ev
}

/// A non-empty random subset of the non-evidence variables, or `None` when
/// everything is observed.
pub fn random_query<R: Rng + ?Sized>(rng: &mut R, net: &Network, evidence: &Evidence) -> Option<BTreeSet<VarId>> {
    let mut free: Vec<VarId> = (0..net.len()).filter(|&v| !evidence.contains(v)).collect();
    if free.is_empty() {
        return None;
    }
    free.shuffle(rng);
    let k = rng.random_range(1..=free.len());
    Some(free[..k].iter().copied().collect())
}
