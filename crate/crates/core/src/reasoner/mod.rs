//! Probabilistic reasoning over two graphs, in the manner of PARIS.
//!
//! Entity equivalences and sub-relation probabilities are computed in
//! alternation. An entity pair `(h, h′)` collects one factor per pair of
//! augmented triples `(h, r, t)`, `(h′, r′, t′)`:
//!
//! ```text
//! P(h ≡ h′) = 1 − Π (1 − P(r′⊆r)·F⁻¹(r)·P(t≡t′)) · (1 − P(r⊆r′)·F⁻¹(r′)·P(t≡t′))
//! ```
//!
//! optionally blended with an embedding similarity as
//! `(1 − β)·sim(e, e′) + β·P(h ≡ h′)`. Sub-relation probabilities are the
//! share of `r`'s matched `(h, t)` pairs that are also connected by `r′`.
//!
//! Every sweep reads only the previous snapshot (a Jacobi update), so results
//! do not depend on how work is split across threads.

mod functionality;
mod store;
mod sweep;

use std::collections::HashSet;

use crate::embedding::{clamped_cosine, EmbeddingSet, SePredictionSet, SimilarityFn};
use crate::error::{Error, Result};
use crate::kg::{InverseAugmentedView, KnowledgeGraph, NodeId};

pub use functionality::{compute_functionalities, FunctionalityTable};
pub use store::{init_literal_mappings, EntityMappingStore, SubRelationStore};

#[derive(Debug, Clone, Copy)]
pub struct ReasonerConfig {
    /// Value every sub-relation probability takes before the first update.
    pub theta_init_subrel: f64,
    pub max_self_iterations: usize,
    /// The fixpoint stops once no entity probability moves by more than this.
    pub convergence_epsilon: f64,
    /// Weight of the reasoned probability in the embedding blend.
    pub beta: f64,
    pub enable_embedding_blend: bool,
    pub similarity: SimilarityFn,
    /// Counterparts kept per entity and side after each sweep.
    pub top_k: usize,
    /// Match literals case-insensitively during the bootstrap.
    pub case_fold: bool,
}

impl Default for ReasonerConfig {
    fn default() -> Self {
        Self {
            theta_init_subrel: 0.1,
            max_self_iterations: 10,
            convergence_epsilon: 1e-3,
            beta: 0.8,
            enable_embedding_blend: false,
            similarity: clamped_cosine,
            top_k: 1,
            case_fold: false,
        }
    }
}

impl ReasonerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.theta_init_subrel > 0.0 && self.theta_init_subrel < 1.0) {
            return Err(Error::Config(format!(
                "reasoner.theta_init_subrel = {} must lie in (0, 1)",
                self.theta_init_subrel
            )));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(Error::Config(format!(
                "beta = {} must lie in (0, 1)",
                self.beta
            )));
        }
        if self.convergence_epsilon.is_nan() || self.convergence_epsilon < 0.0 {
            return Err(Error::Config(
                "reasoner.convergence_epsilon must be non-negative".into(),
            ));
        }
        if self.top_k == 0 {
            return Err(Error::Config("reasoner.top_k must be positive".into()));
        }
        Ok(())
    }
}

/// Entities of either graph that appear in no aligned pair.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct UnalignedSet {
    pub left: Vec<NodeId>,
    pub right: Vec<NodeId>,
}

impl UnalignedSet {
    pub fn len(&self) -> usize {
        self.left.len() + self.right.len()
    }

    pub fn is_empty(&self) -> bool {
        self.left.is_empty() && self.right.is_empty()
    }
}

/// Outcome of [`Reasoner::run_fixpoint`].
#[derive(Debug, Clone)]
pub struct FixpointResult {
    pub entities: EntityMappingStore,
    pub subrelations: SubRelationStore,
    pub sweeps: usize,
    pub last_change: f64,
}

/// Everything that stays fixed while reasoning over one pair of graphs.
#[derive(Debug, Clone)]
pub struct Reasoner<'a> {
    pub kg1: &'a KnowledgeGraph,
    pub kg2: &'a KnowledgeGraph,
    pub view1: InverseAugmentedView<'a>,
    pub view2: InverseAugmentedView<'a>,
    pub func1: FunctionalityTable,
    pub func2: FunctionalityTable,
    pub config: ReasonerConfig,
}

impl<'a> Reasoner<'a> {
    pub fn new(
        kg1: &'a KnowledgeGraph,
        kg2: &'a KnowledgeGraph,
        config: ReasonerConfig,
    ) -> Result<Self> {
        config.validate()?;
        let (view1, view2) = (kg1.augmented(), kg2.augmented());
        let (func1, func2) = rayon::join(
            || compute_functionalities(&view1),
            || compute_functionalities(&view2),
        );
        Ok(Self {
            kg1,
            kg2,
            view1,
            view2,
            func1,
            func2,
            config,
        })
    }

    pub fn literal_bootstrap(&self) -> EntityMappingStore {
        init_literal_mappings(self.kg1, self.kg2, self.config.case_fold)
    }

    pub fn initial_subrelations(&self) -> SubRelationStore {
        SubRelationStore::constant(self.config.theta_init_subrel)
            .expect("theta validated in Reasoner::new")
    }

    /// One Jacobi sweep of entity equivalences. Literal pairs of the snapshot
    /// are carried over unchanged.
    pub fn update_entity_probs(
        &self,
        snapshot: &EntityMappingStore,
        subrel: &SubRelationStore,
        emb: Option<&EmbeddingSet>,
    ) -> EntityMappingStore {
        sweep::update_entities(self, snapshot, subrel, emb)
    }

    pub fn update_subrelation_probs(&self, snapshot: &EntityMappingStore) -> SubRelationStore {
        sweep::update_subrelations(self, snapshot)
    }

    /// Alternates entity and sub-relation updates until the largest change of
    /// an entity probability is at most `convergence_epsilon` or
    /// `max_self_iterations` sweeps have run. The embedding blend is applied
    /// only when both `emb` is given and blending is enabled.
    pub fn run_fixpoint(
        &self,
        entities: EntityMappingStore,
        subrelations: SubRelationStore,
        emb: Option<&EmbeddingSet>,
    ) -> FixpointResult {
        let emb = emb.filter(|_| self.config.enable_embedding_blend);
        let mut state = FixpointResult {
            entities,
            subrelations,
            sweeps: 0,
            last_change: f64::INFINITY,
        };
        for sweep in 1..=self.config.max_self_iterations {
            let next = self.update_entity_probs(&state.entities, &state.subrelations, emb);
            let subrel = self.update_subrelation_probs(&next);
            let change = state.entities.max_abs_diff(&next);
            log::debug!(
                "sweep {sweep}: {} stored pairs, max change {change:.6}",
                next.len()
            );
            state = FixpointResult {
                entities: next,
                subrelations: subrel,
                sweeps: sweep,
                last_change: change,
            };
            if change <= self.config.convergence_epsilon {
                break;
            }
        }
        state
    }

    pub fn unaligned(&self, aligned: &[(NodeId, NodeId, f64)]) -> UnalignedSet {
        unaligned_entities(aligned, self.kg1, self.kg2)
    }
}

/// Mutual-best entity pairs with probability strictly above `threshold`,
/// sorted by descending probability. Literal pairs are never returned.
pub fn extract_alignment(
    store: &EntityMappingStore,
    kg1: &KnowledgeGraph,
    threshold: f64,
) -> Vec<(NodeId, NodeId, f64)> {
    let mut out: Vec<_> = store
        .mutual_best()
        .into_iter()
        .filter(|&(l, _, p)| kg1.is_entity(l) && p > threshold)
        .collect();
    out.sort_by(|a, b| b.2.total_cmp(&a.2).then((a.0, a.1).cmp(&(b.0, b.1))));
    out
}

pub fn unaligned_entities(
    aligned: &[(NodeId, NodeId, f64)],
    kg1: &KnowledgeGraph,
    kg2: &KnowledgeGraph,
) -> UnalignedSet {
    let left: HashSet<NodeId> = aligned.iter().map(|p| p.0).collect();
    let right: HashSet<NodeId> = aligned.iter().map(|p| p.1).collect();
    UnalignedSet {
        left: kg1.entities().filter(|e| !left.contains(e)).collect(),
        right: kg2.entities().filter(|e| !right.contains(e)).collect(),
    }
}

/// Parameters of the re-initialization between alignment rounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitParams {
    pub alpha1: f64,
    pub alpha2: f64,
    pub delta1: f64,
    /// Threshold defining the previous round's aligned pairs.
    pub delta_f: f64,
    /// Whether embedding predictions may enter the initial store.
    pub use_predictions: bool,
}

/// Initial stores for the next round. Pairs aligned by the previous round get
/// `α₁·P`; otherwise predicted pairs with score above `δ₁` get `α₂·S`; all
/// other entity pairs start absent. Literal bootstrap pairs are re-inserted
/// and the sub-relation store is carried over.
pub fn prase_init(
    prev_entities: &EntityMappingStore,
    prev_subrel: &SubRelationStore,
    predictions: &SePredictionSet,
    bootstrap: &EntityMappingStore,
    kg1: &KnowledgeGraph,
    params: &InitParams,
) -> (EntityMappingStore, SubRelationStore) {
    let aligned = extract_alignment(prev_entities, kg1, params.delta_f);
    let aligned_keys: HashSet<(NodeId, NodeId)> = aligned.iter().map(|&(l, r, _)| (l, r)).collect();
    let mut pairs: Vec<(NodeId, NodeId, f64)> = aligned
        .iter()
        .map(|&(l, r, p)| (l, r, params.alpha1 * p))
        .collect();
    if params.use_predictions {
        pairs.extend(
            predictions
                .mappings
                .iter()
                .filter(|&&(l, r, s)| s > params.delta1 && !aligned_keys.contains(&(l, r)))
                .map(|&(l, r, s)| (l, r, params.alpha2 * s)),
        );
    }
    pairs.extend(bootstrap.pairs().iter().copied());
    let store = EntityMappingStore::from_pairs(
        prev_entities.left_nodes(),
        prev_entities.right_nodes(),
        pairs,
    );
    (store, prev_subrel.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kg::KgBuilder;

    fn kg(n: usize) -> KnowledgeGraph {
        let mut b = KgBuilder::new();
        for i in 0..n {
            b.add_relation_triple(&format!("e{i}"), "r", &format!("e{}", (i + 1) % n))
                .unwrap();
        }
        b.freeze().unwrap()
    }

    #[test]
    fn extraction_is_strict_and_mutual() {
        let g = kg(3);
        let s = EntityMappingStore::from_pairs(3, 3, vec![(0, 0, 0.15), (1, 1, 0.1), (2, 1, 0.05)]);
        let out = extract_alignment(&s, &g, 0.1);
        assert_eq!(out, vec![(0, 0, 0.15)]);

        // 0 prefers 1, but 1 prefers 2
        let s = EntityMappingStore::from_pairs(3, 3, vec![(0, 1, 0.6), (2, 1, 0.9)]);
        assert_eq!(extract_alignment(&s, &g, 0.1), vec![(2, 1, 0.9)]);
    }

    #[test]
    fn extraction_sorts_descending() {
        let g = kg(3);
        let s = EntityMappingStore::from_pairs(3, 3, vec![(0, 0, 0.3), (1, 1, 0.9), (2, 2, 0.5)]);
        let ps: Vec<f64> = extract_alignment(&s, &g, 0.1).iter().map(|x| x.2).collect();
        assert_eq!(ps, vec![0.9, 0.5, 0.3]);
    }

    #[test]
    fn unaligned_counts() {
        let g = kg(10);
        let all = unaligned_entities(&[], &g, &g);
        assert_eq!((all.left.len(), all.right.len()), (10, 10));
        let seven: Vec<_> = (0..7).map(|i| (i, i, 0.9)).collect();
        let u = unaligned_entities(&seven, &g, &g);
        assert_eq!((u.left.len(), u.right.len()), (3, 3));
        let every: Vec<_> = (0..10).map(|i| (i, i, 0.9)).collect();
        assert!(unaligned_entities(&every, &g, &g).is_empty());
    }

    #[test]
    fn prase_init_cases() {
        let g = kg(4);
        let prev = EntityMappingStore::from_pairs(4, 4, vec![(0, 0, 0.6)]);
        let sub = SubRelationStore::constant(0.1).unwrap();
        let se = SePredictionSet {
            mappings: vec![(1, 1, 0.8), (2, 2, 0.05), (0, 0, 0.99)],
        };
        let boot = EntityMappingStore::empty(4, 4);
        let params = InitParams {
            alpha1: 1.0,
            alpha2: 1.0,
            delta1: 0.1,
            delta_f: 0.1,
            use_predictions: true,
        };
        let (s, sub2) = prase_init(&prev, &sub, &se, &boot, &g, &params);
        assert_eq!(s.get(0, 0), 0.6);
        assert_eq!(s.get(1, 1), 0.8);
        assert_eq!(s.get(2, 2), 0.0);
        assert_eq!(sub2, sub);

        let off = InitParams {
            use_predictions: false,
            ..params
        };
        let (s, _) = prase_init(&prev, &sub, &se, &boot, &g, &off);
        assert_eq!(s.len(), 1);
    }

    #[test]
    fn invalid_reasoner_config() {
        let cfg = ReasonerConfig {
            theta_init_subrel: 0.0,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = ReasonerConfig {
            beta: 1.0,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
    }
}
