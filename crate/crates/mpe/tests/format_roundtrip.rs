use mpe::{parse_network, to_json};
use mpe_core::network::apply_evidence;
use mpe_core::oracle::enumerate_joint;
use mpe_core::random::{random_evidence, random_network, NetworkShape};
use mpe_core::{Assignment, Space};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const FIG1: &str = include_str!("../fixtures/fig1.json");

#[test]
fn fig1_fixture() {
    let net = parse_network(FIG1).unwrap();
    assert_eq!(net.len(), 6);
    assert!((0..6).all(|v| net.cardinality(v) == 2));
    let a = net.id_of("a").unwrap();
    assert_eq!(net.probability(a, 1, &[]), 0.2);
    let d = net.id_of("d").unwrap();
    assert_eq!(net.parents(d), &[0, 1]);
    assert_eq!(net.probability(d, 1, &[1, 1]), 0.7);
}

#[test]
fn evidence_slices_fig1_tables() {
    let net = parse_network(FIG1).unwrap();
    let ev = mpe::parse_evidence(&net, "d=1").unwrap();
    let factors = apply_evidence(&net, &ev, Space::Linear).unwrap();
    let f = &factors[5];
    assert_eq!(f.scope(), &[5]);
    assert_eq!(f.values(), &[0.8, 0.2]);
    assert_eq!(f.fixed_context(), &Assignment::from_pairs([(3, 1)]));
    let e = &factors[4];
    assert_eq!(e.scope(), &[2, 4]);
    assert_eq!(e.values(), &[0.4, 0.6, 0.5, 0.5]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn parse_serialize_parse(seed in any::<u64>(), n in 1usize..12) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let net = random_network(&mut rng, NetworkShape { variables: n, max_cardinality: 4, max_parents: 3 });
        let text = to_json(&net);
        let back = parse_network(&text).unwrap();
        prop_assert_eq!(&back, &net);
        for (a, b) in back.cpts().iter().zip(net.cpts()) {
            prop_assert!(a.table.iter().zip(&b.table).all(|(x, y)| x.to_bits() == y.to_bits()));
        }
        prop_assert_eq!(to_json(&back), text);
    }

    #[test]
    fn sliced_product_is_the_joint(seed in any::<u64>(), n in 1usize..9) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let net = random_network(&mut rng, NetworkShape { variables: n, max_cardinality: 2, max_parents: 3 });
        let ev = random_evidence(&mut rng, &net, 0.3);
        let factors = apply_evidence(&net, &ev, Space::Linear).unwrap();
        for (states, p) in enumerate_joint(&net, &ev).unwrap() {
            let a = Assignment::from_pairs(states.iter().copied().enumerate());
            let q: f64 = factors.iter().map(|f| f.value(f.index_of_assignment(&a).unwrap())).product();
            prop_assert!((p - q).abs() <= 1e-12 * p.max(q));
        }
    }
}
