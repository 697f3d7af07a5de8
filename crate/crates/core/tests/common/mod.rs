//! Fixtures and independent oracles shared by the integration tests.
#![allow(dead_code)]

pub mod fixtures;
pub mod gradient;

use std::collections::HashSet;

use num_rational::Ratio;
use prase::embedding::{EmbeddingSet, EntityVectors, TrainConfig};
use prase::ingest::{random_kg, synthesize_pair, DatasetPair, PerturbationSpec, RandomKgSpec};
use prase::kg::{KgBuilder, KnowledgeGraph, RelId};

/// `(F(r), F⁻¹(r))` straight from the definition over the base triples.
/// Relations at or past `num_edges` are inverses, whose values swap.
pub fn brute_functionality(kg: &KnowledgeGraph, rel: RelId) -> Option<(Ratio<u64>, Ratio<u64>)> {
    let n = kg.num_edges() as RelId;
    let base = if rel >= n { rel - n } else { rel };
    let pairs: HashSet<(u32, u32)> = kg
        .triples()
        .iter()
        .filter(|t| t.rel == base)
        .map(|t| (t.head, t.tail))
        .collect();
    if pairs.is_empty() {
        return None;
    }
    let heads: HashSet<u32> = pairs.iter().map(|p| p.0).collect();
    let tails: HashSet<u32> = pairs.iter().map(|p| p.1).collect();
    let total = pairs.len() as u64;
    let f = Ratio::new(heads.len() as u64, total);
    let inv = Ratio::new(tails.len() as u64, total);
    Some(if rel >= n { (inv, f) } else { (f, inv) })
}

/// Builds a graph from `(head, relation, tail)` index triples plus
/// `(head, attribute, value)` attribute triples.
pub fn small_kg(relations: &[(u8, u8, u8)], attributes: &[(u8, u8, u8)]) -> Option<KnowledgeGraph> {
    let mut b = KgBuilder::new();
    for &(h, r, t) in relations {
        b.add_relation_triple(&format!("e{h}"), &format!("r{r}"), &format!("e{t}"))
            .unwrap();
    }
    for &(h, a, v) in attributes {
        b.add_attribute_triple(&format!("e{h}"), &format!("a{a}"), &format!("\"v{v}\""))
            .unwrap();
    }
    b.freeze().ok()
}

/// A ten-entity graph and a renamed identical copy. Every entity has a
/// unique name literal and two outgoing relations.
pub fn twin_pair() -> DatasetPair {
    let build = |prefix: &str| {
        let mut b = KgBuilder::new();
        for i in 0..10 {
            let e = format!("{prefix}entity/{i}");
            b.add_attribute_triple(
                &e,
                &format!("{prefix}name"),
                &format!("\"entity number {i}\""),
            )
            .unwrap();
            b.add_relation_triple(
                &e,
                &format!("{prefix}knows"),
                &format!("{prefix}entity/{}", (i + 1) % 10),
            )
            .unwrap();
            b.add_relation_triple(
                &e,
                &format!("{prefix}likes"),
                &format!("{prefix}entity/{}", (i * 3 + 1) % 10),
            )
            .unwrap();
        }
        b.freeze().unwrap()
    };
    let gold = (0..10)
        .map(|i| {
            (
                format!("http://a/entity/{i}"),
                format!("http://b/entity/{i}"),
            )
        })
        .collect();
    DatasetPair::new(build("http://a/"), build("http://b/"), gold).unwrap()
}

/// A random base graph and a perturbed copy of it.
pub fn synthetic_pair(entities: usize, seed: u64, spec: PerturbationSpec) -> DatasetPair {
    let base = random_kg(&RandomKgSpec {
        entities,
        seed,
        ..Default::default()
    })
    .unwrap();
    synthesize_pair(
        &base,
        &PerturbationSpec {
            rename_seed: seed,
            ..spec
        },
    )
    .unwrap()
}

/// A smaller trainer than the default, enough for small synthetic graphs.
pub fn quick_trainer() -> TrainConfig {
    TrainConfig {
        dim: 32,
        epochs: 60,
        ..TrainConfig::default()
    }
}

/// One-vector-per-node embedding set with the given 2-d vectors.
pub fn embedding_2d(
    left_nodes: usize,
    right_nodes: usize,
    left: &[(u32, [f64; 2])],
    right: &[(u32, [f64; 2])],
) -> EmbeddingSet {
    let table = |nodes: usize, vecs: &[(u32, [f64; 2])]| {
        let mut rows = vec![None; nodes];
        let mut data = Vec::new();
        for (i, (node, v)) in vecs.iter().enumerate() {
            rows[*node as usize] = Some(i);
            data.extend_from_slice(v);
        }
        EntityVectors::new(2, data, rows)
    };
    EmbeddingSet {
        dim: 2,
        left: table(left_nodes, left),
        right: table(right_nodes, right),
        left_relations: Vec::new(),
        right_relations: Vec::new(),
        transform: vec![1.0, 0.0, 0.0, 1.0],
    }
}
