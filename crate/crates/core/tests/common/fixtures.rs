//! The small hand-worked reasoning examples.

use prase::kg::{KgBuilder, KnowledgeGraph};
use prase::reasoner::{EntityMappingStore, Reasoner, ReasonerConfig};

use super::embedding_2d;

/// One entity labelled `label` carrying the given `(attribute, value)` pairs.
pub fn single_entity(label: &str, attrs: &[(&str, &str)]) -> KnowledgeGraph {
    let mut b = KgBuilder::new();
    for (a, v) in attrs {
        b.add_attribute_triple(label, a, &format!("\"{v}\""))
            .unwrap();
    }
    b.freeze().unwrap()
}

/// P(a ≡ b) after one sweep from the literal bootstrap.
pub fn one_sweep(kg1: &KnowledgeGraph, kg2: &KnowledgeGraph, cfg: ReasonerConfig) -> f64 {
    let reasoner = Reasoner::new(kg1, kg2, cfg).unwrap();
    let next = reasoner.update_entity_probs(
        &reasoner.literal_bootstrap(),
        &reasoner.initial_subrelations(),
        None,
    );
    next.get(kg1.entity_id("a").unwrap(), kg2.entity_id("b").unwrap())
}

/// Four triples of `r`; two have counterparts under `r2` and two connect
/// aligned entities through `s2` only. All entity pairs are certain.
pub fn half_covered() -> (KnowledgeGraph, KnowledgeGraph, EntityMappingStore) {
    let mut b1 = KgBuilder::new();
    for (h, t) in [("a", "b"), ("c", "d"), ("e", "f"), ("g", "h")] {
        b1.add_relation_triple(h, "r", t).unwrap();
    }
    let mut b2 = KgBuilder::new();
    for (h, t) in [("a2", "b2"), ("c2", "d2")] {
        b2.add_relation_triple(h, "r2", t).unwrap();
    }
    for (h, t) in [("e2", "f2"), ("g2", "h2")] {
        b2.add_relation_triple(h, "s2", t).unwrap();
    }
    let (kg1, kg2) = (b1.freeze().unwrap(), b2.freeze().unwrap());
    let pairs: Vec<_> = ["a", "b", "c", "d", "e", "f", "g", "h"]
        .iter()
        .map(|x| {
            (
                kg1.entity_id(x).unwrap(),
                kg2.entity_id(&format!("{x}2")).unwrap(),
                1.0,
            )
        })
        .collect();
    let store = EntityMappingStore::from_pairs(kg1.num_nodes(), kg2.num_nodes(), pairs);
    (kg1, kg2, store)
}

/// `(name, computed, expected)` for each worked example.
pub fn worked_examples() -> Vec<(&'static str, f64, f64)> {
    let kg1 = single_entity("a", &[("name", "Paris")]);
    let kg2 = single_entity("b", &[("label", "Paris")]);
    let single = one_sweep(&kg1, &kg2, ReasonerConfig::default());

    let kg1b = single_entity("a", &[("name", "Paris"), ("founded", "250 BC")]);
    let kg2b = single_entity("b", &[("label", "Paris"), ("since", "250 BC")]);
    let double = one_sweep(&kg1b, &kg2b, ReasonerConfig::default());

    let (a, b) = (kg1.entity_id("a").unwrap(), kg2.entity_id("b").unwrap());
    let emb = embedding_2d(
        kg1.num_nodes(),
        kg2.num_nodes(),
        &[(a, [1.0, 0.0])],
        &[(b, [0.5, 3f64.sqrt() / 2.0])],
    );
    let cfg = ReasonerConfig {
        enable_embedding_blend: true,
        ..Default::default()
    };
    let reasoner = Reasoner::new(&kg1, &kg2, cfg).unwrap();
    let blended = reasoner
        .update_entity_probs(
            &reasoner.literal_bootstrap(),
            &reasoner.initial_subrelations(),
            Some(&emb),
        )
        .get(a, b);

    let (h1, h2, store) = half_covered();
    let reasoner = Reasoner::new(&h1, &h2, ReasonerConfig::default()).unwrap();
    let sub = reasoner.update_subrelation_probs(&store);
    let half = sub.forward(h1.relation_id("r").unwrap(), h2.relation_id("r2").unwrap());

    vec![
        ("single evidence pair", single, 0.19),
        ("two evidence pairs", double, 0.3439),
        ("embedding blend", blended, 0.252),
        ("half-covered sub-relation", half, 0.5),
    ]
}
