//! MTransE-style training: a margin-ranked TransE loss on each graph's
//! relation triples plus a transformation loss `Σ ‖M·e − e′‖` over seed pairs.
//!
//! Each epoch is one SGD pass over the triples of both graphs followed by one
//! pass over the seeds; entity vectors are renormalized to unit length at the
//! end of every epoch.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{EmbeddingModel, EmbeddingSet, EntityVectors, SeedSet};
use crate::error::{Error, Result};
use crate::kg::{KnowledgeGraph, NodeId};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub dim: usize,
    pub margin: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    /// Negative samples drawn per positive triple.
    pub negatives: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            dim: 100,
            margin: 1.0,
            learning_rate: 0.01,
            epochs: 200,
            negatives: 5,
            batch_size: 512,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 || self.epochs == 0 || self.negatives == 0 || self.batch_size == 0 {
            return Err(Error::Config(
                "trainer dim, epochs, negatives and batch_size must be positive".into(),
            ));
        }
        let positive = |x: f64| x.is_finite() && x > 0.0;
        if !positive(self.margin) || !positive(self.learning_rate) {
            return Err(Error::Config(
                "trainer margin and learning_rate must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Left = 0,
    Right = 1,
}

/// Trainable parameters. Entity and relation tables are row-major with
/// `dim` columns and are indexed by [`Side`].
#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    pub dim: usize,
    pub entities: [Vec<f64>; 2],
    pub relations: [Vec<f64>; 2],
    /// Row-major `dim × dim`.
    pub transform: Vec<f64>,
}

impl Params {
    pub fn zeros_like(other: &Params) -> Self {
        Self {
            dim: other.dim,
            entities: [
                vec![0.0; other.entities[0].len()],
                vec![0.0; other.entities[1].len()],
            ],
            relations: [
                vec![0.0; other.relations[0].len()],
                vec![0.0; other.relations[1].len()],
            ],
            transform: vec![0.0; other.transform.len()],
        }
    }

    pub fn entity(&self, side: Side, row: u32) -> &[f64] {
        let d = self.dim;
        &self.entities[side as usize][row as usize * d..(row as usize + 1) * d]
    }

    pub fn relation(&self, side: Side, row: u32) -> &[f64] {
        let d = self.dim;
        &self.relations[side as usize][row as usize * d..(row as usize + 1) * d]
    }

    fn normalize_entities(&mut self) {
        let d = self.dim;
        for table in &mut self.entities {
            for row in table.chunks_mut(d) {
                let n = row.iter().map(|x| x * x).sum::<f64>().sqrt();
                if n > 0.0 {
                    row.iter_mut().for_each(|x| *x /= n);
                }
            }
        }
    }
}

/// Random uniform initialization in `±6/√dim` with unit-length entity and
/// relation rows, and an identity transformation.
pub fn init_params(
    rng: &mut ChaCha8Rng,
    entity_rows: [usize; 2],
    relation_rows: [usize; 2],
    dim: usize,
) -> Params {
    let bound = 6.0 / (dim as f64).sqrt();
    let mut table = |rows: usize| -> Vec<f64> {
        let mut v: Vec<f64> = (0..rows * dim)
            .map(|_| rng.gen_range(-bound..bound))
            .collect();
        for row in v.chunks_mut(dim) {
            let n = row.iter().map(|x| x * x).sum::<f64>().sqrt();
            row.iter_mut().for_each(|x| *x /= n);
        }
        v
    };
    let entities = [table(entity_rows[0]), table(entity_rows[1])];
    let relations = [table(relation_rows[0]), table(relation_rows[1])];
    let mut transform = vec![0.0; dim * dim];
    for i in 0..dim {
        transform[i * dim + i] = 1.0;
    }
    Params {
        dim,
        entities,
        relations,
        transform,
    }
}

/// A positive triple and one corruption of it, as `(head, rel, tail)` rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrainingSample {
    pub side: Side,
    pub pos: [u32; 3],
    pub neg: [u32; 3],
}

/// Gradient buffer shaped like [`Params`] that remembers which rows it touched.
#[derive(Debug, Clone)]
pub struct Gradient {
    pub values: Params,
    touched_entities: [Vec<u32>; 2],
    touched_relations: [Vec<u32>; 2],
    entity_marks: [Vec<bool>; 2],
    relation_marks: [Vec<bool>; 2],
    transform_touched: bool,
}

impl Gradient {
    pub fn zeros_like(params: &Params) -> Self {
        let d = params.dim;
        let rows = |t: &Vec<f64>| vec![false; t.len() / d];
        Self {
            values: Params::zeros_like(params),
            touched_entities: [Vec::new(), Vec::new()],
            touched_relations: [Vec::new(), Vec::new()],
            entity_marks: [rows(&params.entities[0]), rows(&params.entities[1])],
            relation_marks: [rows(&params.relations[0]), rows(&params.relations[1])],
            transform_touched: false,
        }
    }

    fn entity_mut(&mut self, side: Side, row: u32) -> &mut [f64] {
        let s = side as usize;
        if !self.entity_marks[s][row as usize] {
            self.entity_marks[s][row as usize] = true;
            self.touched_entities[s].push(row);
        }
        let d = self.values.dim;
        &mut self.values.entities[s][row as usize * d..(row as usize + 1) * d]
    }

    fn relation_mut(&mut self, side: Side, row: u32) -> &mut [f64] {
        let s = side as usize;
        if !self.relation_marks[s][row as usize] {
            self.relation_marks[s][row as usize] = true;
            self.touched_relations[s].push(row);
        }
        let d = self.values.dim;
        &mut self.values.relations[s][row as usize * d..(row as usize + 1) * d]
    }

    /// `params -= lr · gradient` on touched rows, then clears the buffer.
    pub fn apply(&mut self, params: &mut Params, lr: f64) {
        let d = params.dim;
        for s in 0..2 {
            for row in self.touched_entities[s].drain(..) {
                let range = row as usize * d..(row as usize + 1) * d;
                for (p, g) in params.entities[s][range.clone()]
                    .iter_mut()
                    .zip(&mut self.values.entities[s][range])
                {
                    *p -= lr * *g;
                    *g = 0.0;
                }
                self.entity_marks[s][row as usize] = false;
            }
            for row in self.touched_relations[s].drain(..) {
                let range = row as usize * d..(row as usize + 1) * d;
                for (p, g) in params.relations[s][range.clone()]
                    .iter_mut()
                    .zip(&mut self.values.relations[s][range])
                {
                    *p -= lr * *g;
                    *g = 0.0;
                }
                self.relation_marks[s][row as usize] = false;
            }
        }
        if self.transform_touched {
            for (p, g) in params.transform.iter_mut().zip(&mut self.values.transform) {
                *p -= lr * *g;
                *g = 0.0;
            }
            self.transform_touched = false;
        }
    }
}

fn translation(params: &Params, side: Side, [h, r, t]: [u32; 3], out: &mut [f64]) -> f64 {
    let (h, r, t) = (
        params.entity(side, h),
        params.relation(side, r),
        params.entity(side, t),
    );
    let mut sq = 0.0;
    for i in 0..out.len() {
        out[i] = h[i] + r[i] - t[i];
        sq += out[i] * out[i];
    }
    sq.sqrt()
}

fn scale_to_unit(v: &mut [f64], norm: f64) {
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    } else {
        v.iter_mut().for_each(|x| *x = 0.0);
    }
}

/// Hinge loss `max(0, γ + ‖h+r−t‖ − ‖h̃+r−t̃‖)` of one sample, adding its
/// gradient into `grad`.
pub fn accumulate_triple(
    params: &Params,
    sample: &TrainingSample,
    margin: f64,
    grad: &mut Gradient,
) -> f64 {
    let d = params.dim;
    let mut u = vec![0.0; d];
    let mut w = vec![0.0; d];
    let un = translation(params, sample.side, sample.pos, &mut u);
    let wn = translation(params, sample.side, sample.neg, &mut w);
    let loss = margin + un - wn;
    if loss <= 0.0 {
        return 0.0;
    }
    scale_to_unit(&mut u, un);
    scale_to_unit(&mut w, wn);
    let side = sample.side;
    let [h, r, t] = sample.pos;
    let [nh, _, nt] = sample.neg;
    grad.entity_mut(side, h)
        .iter_mut()
        .zip(&u)
        .for_each(|(g, x)| *g += x);
    grad.entity_mut(side, t)
        .iter_mut()
        .zip(&u)
        .for_each(|(g, x)| *g -= x);
    grad.entity_mut(side, nh)
        .iter_mut()
        .zip(&w)
        .for_each(|(g, x)| *g -= x);
    grad.entity_mut(side, nt)
        .iter_mut()
        .zip(&w)
        .for_each(|(g, x)| *g += x);
    grad.relation_mut(side, r)
        .iter_mut()
        .zip(u.iter().zip(&w))
        .for_each(|(g, (a, b))| *g += a - b);
    loss
}

/// Transformation loss `‖M·e − e′‖` of one seed pair of entity rows, adding
/// its gradient into `grad`.
pub fn accumulate_seed(params: &Params, (left, right): (u32, u32), grad: &mut Gradient) -> f64 {
    let d = params.dim;
    let e = params.entity(Side::Left, left);
    let e2 = params.entity(Side::Right, right);
    let m = &params.transform;
    let mut u = vec![0.0; d];
    for i in 0..d {
        let row = &m[i * d..(i + 1) * d];
        u[i] = row.iter().zip(e).map(|(a, b)| a * b).sum::<f64>() - e2[i];
    }
    let norm = u.iter().map(|x| x * x).sum::<f64>().sqrt();
    scale_to_unit(&mut u, norm);
    let e = e.to_vec();
    {
        let gm = &mut grad.values.transform;
        for i in 0..d {
            for j in 0..d {
                gm[i * d + j] += u[i] * e[j];
            }
        }
        grad.transform_touched = true;
    }
    let ge = grad.entity_mut(Side::Left, left);
    for j in 0..d {
        ge[j] += (0..d).map(|i| m[i * d + j] * u[i]).sum::<f64>();
    }
    grad.entity_mut(Side::Right, right)
        .iter_mut()
        .zip(&u)
        .for_each(|(g, x)| *g -= x);
    norm
}

struct Layout {
    entity_rows: Vec<Option<usize>>,
    relation_rows: Vec<Option<usize>>,
    entities: usize,
    relations: usize,
}

impl Layout {
    fn new(kg: &KnowledgeGraph, seeds: impl Iterator<Item = NodeId>) -> Self {
        let mut used = vec![false; kg.num_nodes()];
        for t in kg.triples().iter().filter(|t| !kg.is_attribute(t.rel)) {
            used[t.head as usize] = true;
            used[t.tail as usize] = true;
        }
        for s in seeds {
            used[s as usize] = true;
        }
        let mut entities = 0;
        let entity_rows = used
            .iter()
            .map(|&u| {
                u.then(|| {
                    entities += 1;
                    entities - 1
                })
            })
            .collect();
        let mut relations = 0;
        let relation_rows = (0..kg.num_edges() as u32)
            .map(|r| {
                (!kg.is_attribute(r)).then(|| {
                    relations += 1;
                    relations - 1
                })
            })
            .collect();
        Self {
            entity_rows,
            relation_rows,
            entities,
            relations,
        }
    }

    fn triples(&self, kg: &KnowledgeGraph) -> Vec<[u32; 3]> {
        kg.triples()
            .iter()
            .filter(|t| !kg.is_attribute(t.rel))
            .map(|t| {
                [
                    self.entity_rows[t.head as usize].unwrap() as u32,
                    self.relation_rows[t.rel as usize].unwrap() as u32,
                    self.entity_rows[t.tail as usize].unwrap() as u32,
                ]
            })
            .collect()
    }
}

fn corrupt(
    rng: &mut ChaCha8Rng,
    pos: [u32; 3],
    entities: usize,
    truth: &HashSet<[u32; 3]>,
) -> [u32; 3] {
    let mut neg = pos;
    for _ in 0..10 {
        neg = pos;
        let e = rng.gen_range(0..entities) as u32;
        if rng.gen_bool(0.5) {
            neg[0] = e;
        } else {
            neg[2] = e;
        }
        if neg != pos && !truth.contains(&neg) {
            break;
        }
    }
    neg
}

/// Trains embeddings for both graphs. Vectors of the first graph are returned
/// after the learned transformation has been applied.
pub fn train(
    kg1: &KnowledgeGraph,
    kg2: &KnowledgeGraph,
    seeds: &SeedSet,
    cfg: &TrainConfig,
) -> Result<EmbeddingSet> {
    cfg.validate()?;
    if seeds.is_empty() {
        return Err(Error::Training("no alignment seeds to train on".into()));
    }
    if kg1.num_relation_triples() == 0 || kg2.num_relation_triples() == 0 {
        return Err(Error::Training("both graphs need relation triples".into()));
    }
    let layouts = [
        Layout::new(kg1, seeds.pairs.iter().map(|p| p.0)),
        Layout::new(kg2, seeds.pairs.iter().map(|p| p.1)),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut params = init_params(
        &mut rng,
        [layouts[0].entities, layouts[1].entities],
        [layouts[0].relations, layouts[1].relations],
        cfg.dim,
    );
    let side_triples = [layouts[0].triples(kg1), layouts[1].triples(kg2)];
    let truth: [HashSet<[u32; 3]>; 2] = [
        side_triples[0].iter().copied().collect(),
        side_triples[1].iter().copied().collect(),
    ];
    let mut positives: Vec<(Side, [u32; 3])> = side_triples[0]
        .iter()
        .map(|&t| (Side::Left, t))
        .chain(side_triples[1].iter().map(|&t| (Side::Right, t)))
        .collect();
    let mut seed_rows: Vec<(u32, u32)> = seeds
        .pairs
        .iter()
        .map(|&(a, b)| {
            (
                layouts[0].entity_rows[a as usize].unwrap() as u32,
                layouts[1].entity_rows[b as usize].unwrap() as u32,
            )
        })
        .collect();

    let mut grad = Gradient::zeros_like(&params);
    for epoch in 0..cfg.epochs {
        positives.shuffle(&mut rng);
        let mut triple_loss = 0.0;
        for batch in positives.chunks(cfg.batch_size) {
            for &(side, pos) in batch {
                let entities = layouts[side as usize].entities;
                for _ in 0..cfg.negatives {
                    let neg = corrupt(&mut rng, pos, entities, &truth[side as usize]);
                    let sample = TrainingSample { side, pos, neg };
                    triple_loss += accumulate_triple(&params, &sample, cfg.margin, &mut grad);
                }
            }
            grad.apply(&mut params, cfg.learning_rate);
        }
        seed_rows.shuffle(&mut rng);
        let mut transform_loss = 0.0;
        for batch in seed_rows.chunks(cfg.batch_size) {
            for &pair in batch {
                transform_loss += accumulate_seed(&params, pair, &mut grad);
            }
            grad.apply(&mut params, cfg.learning_rate);
        }
        params.normalize_entities();
        if !(triple_loss.is_finite() && transform_loss.is_finite()) {
            return Err(Error::Training(format!(
                "loss diverged at epoch {epoch} (triple {triple_loss}, transform {transform_loss})"
            )));
        }
        if epoch % 50 == 0 || epoch + 1 == cfg.epochs {
            log::debug!(
                "epoch {epoch}: triple loss {triple_loss:.4}, transform loss {transform_loss:.4}"
            );
        }
    }
    Ok(export(params, &layouts))
}

fn export(params: Params, layouts: &[Layout; 2]) -> EmbeddingSet {
    let d = params.dim;
    let m = &params.transform;
    let mut left = vec![0.0; params.entities[0].len()];
    for (src, dst) in params.entities[0].chunks(d).zip(left.chunks_mut(d)) {
        for i in 0..d {
            dst[i] = m[i * d..(i + 1) * d]
                .iter()
                .zip(src)
                .map(|(a, b)| a * b)
                .sum();
        }
    }
    let Params {
        entities: [_, right],
        relations: [rel_left, rel_right],
        transform,
        ..
    } = params;
    EmbeddingSet {
        dim: d,
        left: EntityVectors::new(d, left, layouts[0].entity_rows.clone()),
        right: EntityVectors::new(d, right, layouts[1].entity_rows.clone()),
        left_relations: rel_left,
        right_relations: rel_right,
        transform,
    }
}

/// The reference embedding module.
#[derive(Debug, Clone, Default)]
pub struct MTransE {
    pub config: TrainConfig,
    /// Keep only mutual nearest neighbours when predicting.
    pub mutual_nn: bool,
}

impl EmbeddingModel for MTransE {
    fn name(&self) -> &str {
        "mtranse"
    }

    fn train(
        &self,
        kg1: &KnowledgeGraph,
        kg2: &KnowledgeGraph,
        seeds: &SeedSet,
    ) -> Result<EmbeddingSet> {
        train(kg1, kg2, seeds, &self.config)
    }

    fn predict(
        &self,
        emb: &EmbeddingSet,
        unaligned: &crate::reasoner::UnalignedSet,
    ) -> super::SePredictionSet {
        super::predict(emb, unaligned, self.mutual_nn)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_params() -> Params {
        Params {
            dim: 2,
            entities: [vec![0.0, 0.0, 1.0, 0.0, 5.0, 5.0], vec![0.0, 0.0]],
            relations: [vec![1.0, 0.0], vec![0.0, 0.0]],
            transform: vec![1.0, 0.0, 0.0, 1.0],
        }
    }

    #[test]
    fn satisfied_margin_gives_zero_loss() {
        // h + r = t exactly; the corrupted tail is far away
        let p = tiny_params();
        let mut g = Gradient::zeros_like(&p);
        let s = TrainingSample {
            side: Side::Left,
            pos: [0, 0, 1],
            neg: [0, 0, 2],
        };
        assert_eq!(accumulate_triple(&p, &s, 1.0, &mut g), 0.0);
        assert!(g.values.entities[0].iter().all(|&x| x == 0.0));
    }

    #[test]
    fn identical_seed_under_identity_has_zero_loss() {
        let mut p = tiny_params();
        p.entities[1] = vec![1.0, 0.0];
        let mut g = Gradient::zeros_like(&p);
        assert_eq!(accumulate_seed(&p, (1, 0), &mut g), 0.0);
    }

    #[test]
    fn empty_seeds_are_rejected() {
        let mut b = crate::kg::KgBuilder::new();
        b.add_relation_triple("a", "r", "b").unwrap();
        let kg = b.freeze().unwrap();
        let err = train(&kg, &kg, &SeedSet::default(), &TrainConfig::default()).unwrap_err();
        assert!(matches!(err, Error::Training(_)));
    }

    #[test]
    fn invalid_config_is_rejected() {
        let cfg = TrainConfig {
            dim: 0,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
    }
}
