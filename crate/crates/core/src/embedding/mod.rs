//! Semantic embedding of both graphs into one vector space.
//!
//! The [`EmbeddingModel`] trait is what the alignment loop needs from an
//! embedding module: train on seed pairs, then return vectors it can use for
//! similarity and nearest-neighbour prediction. [`MTransE`] is the reference
//! implementation: TransE on each graph plus a linear map from the first
//! graph's entity space into the second's.

mod mtranse;

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kg::{KnowledgeGraph, NodeId};
use crate::reasoner::UnalignedSet;

pub use mtranse::{
    accumulate_seed, accumulate_triple, init_params, train, Gradient, MTransE, Params, Side,
    TrainConfig, TrainingSample,
};

const NO_ROW: u32 = u32::MAX;

/// Row-major vectors for a subset of a graph's nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct EntityVectors {
    dim: usize,
    data: Vec<f64>,
    rows: Vec<u32>,
}

impl EntityVectors {
    /// `rows[node]` is the row holding `node`'s vector, if any.
    pub fn new(dim: usize, data: Vec<f64>, rows: Vec<Option<usize>>) -> Self {
        let rows = rows
            .into_iter()
            .map(|r| r.map_or(NO_ROW, |r| r as u32))
            .collect();
        Self { dim, data, rows }
    }

    pub fn get(&self, node: NodeId) -> Option<&[f64]> {
        match self.rows.get(node as usize) {
            Some(&r) if r != NO_ROW => {
                let start = r as usize * self.dim;
                Some(&self.data[start..start + self.dim])
            }
            _ => None,
        }
    }

    pub fn len(&self) -> usize {
        self.rows.iter().filter(|&&r| r != NO_ROW).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Trained vectors for both graphs. Vectors of the first graph are stored
/// after applying the transformation, so they compare directly with the
/// second graph's vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet {
    pub dim: usize,
    pub left: EntityVectors,
    pub right: EntityVectors,
    pub left_relations: Vec<f64>,
    pub right_relations: Vec<f64>,
    /// Row-major `dim × dim` transformation matrix.
    pub transform: Vec<f64>,
}

impl EmbeddingSet {
    /// Similarity of a cross-graph pair, or `None` when either side has no vector.
    pub fn pair_similarity(&self, left: NodeId, right: NodeId, sim: SimilarityFn) -> Option<f64> {
        Some(sim(self.left.get(left)?, self.right.get(right)?))
    }

    pub fn is_finite(&self) -> bool {
        self.left
            .data
            .iter()
            .chain(&self.right.data)
            .all(|x| x.is_finite())
    }

    /// Writes `label<TAB>v1,v2,…` for every entity that has a vector, first
    /// graph first.
    pub fn dump_vectors(
        &self,
        kg1: &KnowledgeGraph,
        kg2: &KnowledgeGraph,
        out: impl AsRef<Path>,
    ) -> Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(out)?);
        for (kg, vecs) in [(kg1, &self.left), (kg2, &self.right)] {
            for e in kg.entities() {
                if let Some(v) = vecs.get(e) {
                    let joined: Vec<String> = v.iter().map(|x| format!("{x}")).collect();
                    writeln!(w, "{}\t{}", kg.node_label(e), joined.join(","))?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }
}

pub type SimilarityFn = fn(&[f64], &[f64]) -> f64;

/// Seed pairs `(e, e′)` used as supervision for the transformation.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SeedSet {
    pub pairs: Vec<(NodeId, NodeId)>,
}

impl SeedSet {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Predicted mappings with scores in `[0, 1]`, at most one per first-graph entity.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SePredictionSet {
    pub mappings: Vec<(NodeId, NodeId, f64)>,
}

impl SePredictionSet {
    pub fn len(&self) -> usize {
        self.mappings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mappings.is_empty()
    }
}

/// Cosine similarity clamped below at 0. A zero vector scores 0.
pub fn clamped_cosine(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        log::warn!("cosine similarity of a zero vector");
        return 0.0;
    }
    (dot / (na.sqrt() * nb.sqrt())).clamp(0.0, 1.0)
}

/// Checked form of [`clamped_cosine`].
pub fn similarity(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Usage(format!(
            "similarity of vectors with dimensions {} and {}",
            a.len(),
            b.len()
        )));
    }
    Ok(clamped_cosine(a, b))
}

fn unit(v: &[f64]) -> Option<Vec<f64>> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    (n > 0.0).then(|| v.iter().map(|x| x / n).collect())
}

/// Nearest unaligned second-graph entity, by cosine, for every unaligned
/// first-graph entity that has a vector. With `mutual` only pairs that are
/// nearest neighbours of each other are kept.
pub fn predict(emb: &EmbeddingSet, unaligned: &UnalignedSet, mutual: bool) -> SePredictionSet {
    let right: Vec<(NodeId, Vec<f64>)> = unaligned
        .right
        .iter()
        .filter_map(|&e| Some((e, unit(emb.right.get(e)?)?)))
        .collect();
    if right.is_empty() {
        return SePredictionSet::default();
    }
    let left: Vec<(NodeId, Vec<f64>)> = unaligned
        .left
        .iter()
        .filter_map(|&e| Some((e, unit(emb.left.get(e)?)?)))
        .collect();
    let nearest = |v: &[f64], pool: &[(NodeId, Vec<f64>)]| -> (NodeId, f64) {
        let mut best = (pool[0].0, f64::NEG_INFINITY);
        for (e, w) in pool {
            let dot: f64 = v.iter().zip(w).map(|(x, y)| x * y).sum();
            if dot > best.1 {
                best = (*e, dot);
            }
        }
        best
    };
    let mut mappings: Vec<(NodeId, NodeId, f64)> = left
        .par_iter()
        .map(|(e, v)| {
            let (e2, cos) = nearest(v, &right);
            (*e, e2, cos.clamp(0.0, 1.0))
        })
        .collect();
    if mutual {
        mappings.retain(|&(e, e2, _)| {
            let v = &right
                .iter()
                .find(|(x, _)| *x == e2)
                .expect("nearest is in pool")
                .1;
            nearest(v, &left).0 == e
        });
    }
    SePredictionSet { mappings }
}

/// An embedding module usable inside the alignment loop.
pub trait EmbeddingModel {
    fn name(&self) -> &str;

    fn train(
        &self,
        kg1: &KnowledgeGraph,
        kg2: &KnowledgeGraph,
        seeds: &SeedSet,
    ) -> Result<EmbeddingSet>;

    fn predict(&self, emb: &EmbeddingSet, unaligned: &UnalignedSet) -> SePredictionSet {
        predict(emb, unaligned, false)
    }
}
