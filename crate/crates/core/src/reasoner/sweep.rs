//! Jacobi sweeps for entity equivalences and sub-relation probabilities.
//!
//! Both updates run once from each graph's side. The entity update keeps the
//! top-k counterparts found from either side; the sub-relation update yields
//! P(r ⊆ r′) from the first side and P(r′ ⊆ r) from the second.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;

use super::{EntityMappingStore, Reasoner, SubRelationStore};
use crate::embedding::EmbeddingSet;
use crate::kg::{InverseAugmentedView, NodeId, RelId};

const DENSE_LIMIT: usize = 1 << 25;

/// Sub-relation probabilities arranged for fast lookup during a sweep.
enum SubrelLookup<'s> {
    Constant(f64),
    Dense {
        cols: usize,
        forward: Vec<f64>,
        backward: Vec<f64>,
    },
    Sparse(&'s SubRelationStore),
}

impl<'s> SubrelLookup<'s> {
    fn new(store: &'s SubRelationStore, n1: usize, n2: usize) -> Self {
        if let Some(theta) = store.initial_value() {
            return Self::Constant(theta);
        }
        if n1 * n2 > DENSE_LIMIT {
            return Self::Sparse(store);
        }
        let mut forward = vec![0.0; n1 * n2];
        let mut backward = vec![0.0; n1 * n2];
        for ((r, r2), p) in store.forward_entries() {
            forward[r as usize * n2 + r2 as usize] = p;
        }
        for ((r2, r), p) in store.backward_entries() {
            backward[r as usize * n2 + r2 as usize] = p;
        }
        Self::Dense {
            cols: n2,
            forward,
            backward,
        }
    }

    /// `(P(r ⊆ r′), P(r′ ⊆ r))` for `r` in the first graph.
    #[inline]
    fn get(&self, r: RelId, r2: RelId) -> (f64, f64) {
        match self {
            Self::Constant(theta) => (*theta, *theta),
            Self::Dense {
                cols,
                forward,
                backward,
            } => {
                let i = r as usize * cols + r2 as usize;
                (forward[i], backward[i])
            }
            Self::Sparse(s) => (s.forward(r, r2), s.backward(r2, r)),
        }
    }
}

struct EntityPass<'r, 'a> {
    reasoner: &'r Reasoner<'a>,
    subrel: SubrelLookup<'r>,
    inv_func1: Vec<f64>,
    inv_func2: Vec<f64>,
}

impl EntityPass<'_, '_> {
    /// The evidence factor contributed by the triple pair
    /// `(h, r, t)`, `(h′, r′, t′)` with `P(t ≡ t′) = p`.
    #[inline]
    fn factor(&self, r: RelId, r2: RelId, p: f64) -> f64 {
        let (fwd, bwd) = self.subrel.get(r, r2);
        (1.0 - bwd * self.inv_func1[r as usize] * p) * (1.0 - fwd * self.inv_func2[r2 as usize] * p)
    }

    /// Evidence products for every candidate counterpart of `head`.
    ///
    /// `near` is the graph holding `head`; `far` the other graph; `counterparts`
    /// reads the snapshot from `near`'s side. `near_is_left` orders the
    /// relation pair for [`Self::factor`].
    fn accumulate(
        &self,
        head: NodeId,
        near: &InverseAugmentedView<'_>,
        far: &InverseAugmentedView<'_>,
        counterparts: &(dyn Fn(NodeId) -> Vec<(NodeId, f64)> + Sync),
        near_is_left: bool,
        acc: &mut HashMap<NodeId, f64>,
    ) {
        let far_kg = far.base();
        for (r_near, tail) in near.out_edges(head) {
            for (tail2, p) in counterparts(tail) {
                // (tail2, x, head2) is the inverse of (head2, x⁻, tail2)
                for (x, head2) in far.out_edges(tail2) {
                    if far_kg.is_literal(head2) {
                        continue;
                    }
                    let r_far = far.inverse(x);
                    let f = if near_is_left {
                        self.factor(r_near, r_far, p)
                    } else {
                        self.factor(r_far, r_near, p)
                    };
                    *acc.entry(head2).or_insert(1.0) *= f;
                }
            }
        }
    }

    /// Scores accumulated candidates, blends with embeddings when available
    /// and keeps the best `top_k`.
    fn finish(
        &self,
        head: NodeId,
        near_is_left: bool,
        acc: &mut HashMap<NodeId, f64>,
        emb: Option<&EmbeddingSet>,
    ) -> Vec<(NodeId, NodeId, f64)> {
        let cfg = &self.reasoner.config;
        let mut scored: Vec<(NodeId, f64)> = acc
            .drain()
            .map(|(other, prod)| {
                let reasoned = 1.0 - prod;
                let (l, r) = if near_is_left {
                    (head, other)
                } else {
                    (other, head)
                };
                let p = match emb.and_then(|e| e.pair_similarity(l, r, cfg.similarity)) {
                    Some(sim) => (1.0 - cfg.beta) * sim + cfg.beta * reasoned,
                    None => reasoned,
                };
                (other, p.clamp(0.0, 1.0))
            })
            .filter(|&(_, p)| p > 0.0)
            .collect();
        scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        scored.truncate(cfg.top_k);
        scored
            .into_iter()
            .map(|(other, p)| {
                if near_is_left {
                    (head, other, p)
                } else {
                    (other, head, p)
                }
            })
            .collect()
    }
}

fn inverse_functionalities(ft: &super::FunctionalityTable, n: usize) -> Vec<f64> {
    (0..n as RelId).map(|r| ft.inv_func(r)).collect()
}

pub(super) fn update_entities(
    reasoner: &Reasoner<'_>,
    snapshot: &EntityMappingStore,
    subrel: &SubRelationStore,
    emb: Option<&EmbeddingSet>,
) -> EntityMappingStore {
    let (view1, view2) = (&reasoner.view1, &reasoner.view2);
    let (n1, n2) = (view1.num_relations(), view2.num_relations());
    let pass = EntityPass {
        reasoner,
        subrel: SubrelLookup::new(subrel, n1, n2),
        inv_func1: inverse_functionalities(&reasoner.func1, n1),
        inv_func2: inverse_functionalities(&reasoner.func2, n2),
    };
    let from_left = |t: NodeId| snapshot.left_row(t).collect::<Vec<_>>();
    let from_right = |t: NodeId| snapshot.right_row(t).to_vec();

    let (kg1, kg2) = (reasoner.kg1, reasoner.kg2);
    let left: Vec<Vec<(NodeId, NodeId, f64)>> = (0..kg1.num_nodes() as NodeId)
        .into_par_iter()
        .map_init(HashMap::new, |acc, h| {
            if kg1.is_literal(h) {
                return Vec::new();
            }
            pass.accumulate(h, view1, view2, &from_left, true, acc);
            pass.finish(h, true, acc, emb)
        })
        .collect();
    let right: Vec<Vec<(NodeId, NodeId, f64)>> = (0..kg2.num_nodes() as NodeId)
        .into_par_iter()
        .map_init(HashMap::new, |acc, h2| {
            if kg2.is_literal(h2) {
                return Vec::new();
            }
            pass.accumulate(h2, view2, view1, &from_right, false, acc);
            pass.finish(h2, false, acc, emb)
        })
        .collect();

    let literal_pairs = snapshot
        .pairs()
        .iter()
        .copied()
        .filter(|&(l, _, _)| kg1.is_literal(l));
    // the left pass is listed first so its value wins for pairs found twice
    let pairs = left
        .into_iter()
        .flatten()
        .chain(right.into_iter().flatten())
        .chain(literal_pairs);
    EntityMappingStore::from_pairs(kg1.num_nodes(), kg2.num_nodes(), pairs)
}

/// Numerator and denominator sums of one relation of the near graph.
fn subrelation_row(
    rel: RelId,
    near: &InverseAugmentedView<'_>,
    far: &InverseAugmentedView<'_>,
    counterparts: &(dyn Fn(NodeId) -> Vec<(NodeId, f64)> + Sync),
) -> Vec<(RelId, f64)> {
    let mut numer: HashMap<RelId, f64> = HashMap::new();
    let mut local: HashMap<RelId, f64> = HashMap::new();
    let mut denom = 0.0;
    for (h, t) in near.pairs(rel) {
        let hc = counterparts(h);
        if hc.is_empty() {
            continue;
        }
        let tc = counterparts(t);
        if tc.is_empty() {
            continue;
        }
        let mut all = 1.0;
        for &(_, ph) in &hc {
            for &(_, pt) in &tc {
                all *= 1.0 - ph * pt;
            }
        }
        denom += 1.0 - all;

        local.clear();
        for &(h2, ph) in &hc {
            let far_kg = far.base();
            if far_kg.degree(h2) <= tc.iter().map(|&(t2, _)| far_kg.degree(t2)).sum() {
                for (x, y) in far.out_edges(h2) {
                    if let Some(&(_, pt)) = tc.iter().find(|&&(t2, _)| t2 == y) {
                        *local.entry(x).or_insert(1.0) *= 1.0 - ph * pt;
                    }
                }
            } else {
                for &(t2, pt) in &tc {
                    // (t2, x, h2) is the inverse of (h2, x⁻, t2)
                    for (x, y) in far.out_edges(t2) {
                        if y == h2 {
                            *local.entry(far.inverse(x)).or_insert(1.0) *= 1.0 - ph * pt;
                        }
                    }
                }
            }
        }
        for (&x, &prod) in &local {
            *numer.entry(x).or_insert(0.0) += 1.0 - prod;
        }
    }
    if denom <= 0.0 {
        return Vec::new();
    }
    let mut row: Vec<(RelId, f64)> = numer
        .into_iter()
        .map(|(x, n)| (x, (n / denom).clamp(0.0, 1.0)))
        .filter(|&(_, p)| p > 0.0)
        .collect();
    row.sort_by_key(|&(x, _)| x);
    row
}

pub(super) fn update_subrelations(
    reasoner: &Reasoner<'_>,
    snapshot: &EntityMappingStore,
) -> SubRelationStore {
    let (view1, view2) = (&reasoner.view1, &reasoner.view2);
    let from_left = |n: NodeId| snapshot.left_row(n).collect::<Vec<_>>();
    let from_right = |n: NodeId| snapshot.right_row(n).to_vec();
    let (forward_rows, backward_rows) = rayon::join(
        || {
            (0..view1.num_relations() as RelId)
                .into_par_iter()
                .map(|r| subrelation_row(r, view1, view2, &from_left))
                .collect::<Vec<_>>()
        },
        || {
            (0..view2.num_relations() as RelId)
                .into_par_iter()
                .map(|r2| subrelation_row(r2, view2, view1, &from_right))
                .collect::<Vec<_>>()
        },
    );
    let mut forward = BTreeMap::new();
    for (r, row) in forward_rows.into_iter().enumerate() {
        for (r2, p) in row {
            forward.insert((r as RelId, r2), p);
        }
    }
    let mut backward = BTreeMap::new();
    for (r2, row) in backward_rows.into_iter().enumerate() {
        for (r, p) in row {
            backward.insert((r2 as RelId, r), p);
        }
    }
    SubRelationStore::from_maps(forward, backward)
}
