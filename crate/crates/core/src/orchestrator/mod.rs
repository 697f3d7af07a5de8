//! The alignment loop.
//!
//! 1. Bootstrap the reasoner from identical literals and run it to a fixpoint.
//! 2. For each of `K` rounds: take confident aligned pairs as seeds, train the
//!    embedding module, predict counterparts for still-unaligned entities,
//!    re-initialize the reasoner from its previous output and the
//!    predictions, and run it again with similarity blending.
//! 3. Return the final mutual-best pairs above `δ_f`.

mod config;
mod report;

use std::time::Instant;

use crate::embedding::{EmbeddingModel, MTransE, SeedSet};
use crate::error::Error;
use crate::eval::hits_at_1;
use crate::ingest::DatasetPair;
use crate::kg::{KnowledgeGraph, NodeId};
use crate::reasoner::{extract_alignment, prase_init, EntityMappingStore, Reasoner};

pub use config::{FeedbackMode, PraseConfig};
pub use report::{IterationReport, RunReport};

/// Mutual-best entity pairs with probability strictly above `delta2`.
pub fn select_seeds(store: &EntityMappingStore, kg1: &KnowledgeGraph, delta2: f64) -> SeedSet {
    let pairs: Vec<(NodeId, NodeId)> = extract_alignment(store, kg1, delta2)
        .into_iter()
        .map(|(l, r, _)| (l, r))
        .collect();
    if pairs.is_empty() {
        log::warn!("no seed pair above {delta2}; embedding training cannot start");
    }
    SeedSet { pairs }
}

/// Final alignment of a run.
#[derive(Debug, Clone)]
pub struct RunOutput {
    /// `(kg1 entity, kg2 entity, probability)`, descending by probability.
    pub mappings: Vec<(NodeId, NodeId, f64)>,
    pub report: RunReport,
}

impl RunOutput {
    pub fn labelled(&self, pair: &DatasetPair) -> Vec<(String, String, f64)> {
        self.mappings
            .iter()
            .map(|&(l, r, p)| {
                (
                    pair.kg1.node_label(l).to_owned(),
                    pair.kg2.node_label(r).to_owned(),
                    p,
                )
            })
            .collect()
    }
}

/// A failed run: the phase it failed in, the cause, and the report so far.
#[derive(Debug, thiserror::Error)]
#[error("{phase} failed: {source}")]
pub struct RunError {
    pub phase: String,
    #[source]
    pub source: Error,
    pub report: Box<RunReport>,
}

/// Runs the alignment loop with the reference embedding module.
pub fn run(pair: &DatasetPair, cfg: &PraseConfig) -> Result<RunOutput, RunError> {
    let model = MTransE {
        config: cfg.trainer,
        mutual_nn: cfg.mutual_nn,
    };
    run_with_model(pair, cfg, &model)
}

pub fn run_with_model(
    pair: &DatasetPair,
    cfg: &PraseConfig,
    model: &dyn EmbeddingModel,
) -> Result<RunOutput, RunError> {
    let mut report = RunReport::new(cfg);
    let fail = |phase: String, source: Error, report: RunReport| RunError {
        phase,
        source,
        report: Box::new(report),
    };
    if let Err(e) = cfg.validate() {
        return Err(fail("config".into(), e, report));
    }
    let (kg1, kg2) = (&pair.kg1, &pair.kg2);
    let gold = pair.gold_ids();

    let clock = Instant::now();
    let mut reasoner = match Reasoner::new(
        kg1,
        kg2,
        crate::reasoner::ReasonerConfig {
            enable_embedding_blend: false,
            ..cfg.reasoner
        },
    ) {
        Ok(r) => r,
        Err(e) => return Err(fail("reasoner setup".into(), e, report)),
    };
    let bootstrap = reasoner.literal_bootstrap();
    log::info!("literal bootstrap: {} value pairs", bootstrap.len());
    let mut state = reasoner.run_fixpoint(bootstrap.clone(), reasoner.initial_subrelations(), None);
    let mut aligned = extract_alignment(&state.entities, kg1, cfg.delta_f);
    let mut unaligned = reasoner.unaligned(&aligned);
    report.phase("reasoning k=0", clock.elapsed());
    report.iterations.push(IterationReport {
        k: 0,
        pr_mappings: aligned.len(),
        unaligned_left: unaligned.left.len(),
        unaligned_right: unaligned.right.len(),
        sweeps: state.sweeps,
        ..Default::default()
    });
    log::info!(
        "k=0: {} aligned pairs after {} sweeps",
        aligned.len(),
        state.sweeps
    );

    reasoner.config.enable_embedding_blend = cfg.feedback_mode.uses_embeddings();
    for k in 1..=cfg.k {
        let mut it = IterationReport {
            k,
            ..Default::default()
        };
        let seeds = select_seeds(&state.entities, kg1, cfg.delta2);
        it.seeds = seeds.len();

        let clock = Instant::now();
        let emb = match model.train(kg1, kg2, &seeds) {
            Ok(emb) => emb,
            Err(e) => {
                report.iterations.push(it);
                return Err(fail(format!("embedding training (k={k})"), e, report));
            }
        };
        let predictions = model.predict(&emb, &unaligned);
        report.phase(&format!("embedding k={k}"), clock.elapsed());
        it.se_mappings = predictions.len();
        it.se_hits_at_1 = hits_at_1(&predictions, &gold, &unaligned);

        let clock = Instant::now();
        let (entities, subrel) = prase_init(
            &state.entities,
            &state.subrelations,
            &predictions,
            &bootstrap,
            kg1,
            &cfg.init_params(),
        );
        state = reasoner.run_fixpoint(entities, subrel, Some(&emb));
        aligned = extract_alignment(&state.entities, kg1, cfg.delta_f);
        unaligned = reasoner.unaligned(&aligned);
        report.phase(&format!("reasoning k={k}"), clock.elapsed());

        it.pr_mappings = aligned.len();
        it.unaligned_left = unaligned.left.len();
        it.unaligned_right = unaligned.right.len();
        it.sweeps = state.sweeps;
        log::info!(
            "k={k}: {} seeds, {} predictions, {} aligned pairs",
            it.seeds,
            it.se_mappings,
            it.pr_mappings
        );
        report.iterations.push(it);
    }
    report.final_mappings = aligned.len();
    Ok(RunOutput {
        mappings: aligned,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kg::KgBuilder;

    #[test]
    fn seeds_are_strict_and_exclude_values() {
        let mut b = KgBuilder::new();
        b.add_relation_triple("a", "r", "b").unwrap();
        b.add_attribute_triple("a", "year", "\"1889\"").unwrap();
        let kg = b.freeze().unwrap();
        let (a, bb) = (kg.entity_id("a").unwrap(), kg.entity_id("b").unwrap());
        let v = kg.literal_lookup("1889").unwrap();
        let n = kg.num_nodes();
        let store =
            EntityMappingStore::from_pairs(n, n, vec![(a, a, 0.15), (bb, bb, 0.1), (v, v, 1.0)]);
        let seeds = select_seeds(&store, &kg, 0.1);
        assert_eq!(seeds.pairs, vec![(a, a)]);
    }
}
