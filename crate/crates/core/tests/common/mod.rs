#![allow(dead_code)]

use mpe_core::random::{random_network, NetworkShape};
use mpe_core::{Cpt, Network, Variable};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Six binary variables: a, b roots; c|a; d|a,b; e|c,d; f|d.
pub fn fig1() -> Network {
    let v = |n: &str| Variable::new(n, &["0", "1"]);
    let row = |p1: f64| [1.0 - p1, p1];
    let table = |ps: &[f64]| ps.iter().flat_map(|&p| row(p)).collect::<Vec<_>>();
    Network::new(
        vec![v("a"), v("b"), v("c"), v("d"), v("e"), v("f")],
        vec![
            Cpt { child: 0, parents: vec![], table: table(&[0.2]) },
            Cpt { child: 1, parents: vec![], table: table(&[0.3]) },
            Cpt { child: 2, parents: vec![0], table: table(&[0.3, 0.8]) },
            Cpt { child: 3, parents: vec![0, 1], table: table(&[0.2, 0.5, 0.5, 0.7]) },
            Cpt { child: 4, parents: vec![2, 3], table: table(&[0.3, 0.6, 0.8, 0.5]) },
            Cpt { child: 5, parents: vec![3], table: table(&[0.7, 0.2]) },
        ],
    )
    .unwrap()
}

pub fn small_network(seed: u64, variables: usize) -> Network {
    random_network(&mut rng(seed), NetworkShape { variables, max_cardinality: 3, max_parents: 3 })
}

pub fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()) || (a - b).abs() < 1e-300
}
