use std::collections::HashSet;

use crate::kg::{InverseAugmentedView, NodeId, RelId};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct Counts {
    heads: u64,
    tails: u64,
    pairs: u64,
}

/// Functionality F(r) and inverse functionality F⁻¹(r) of every augmented
/// relation:
///
/// ```text
/// F(r)   = |{h | (h,r,t)}| / |{(h,t) | (h,r,t)}|
/// F⁻¹(r) = |{t | (h,r,t)}| / |{(h,t) | (h,r,t)}|
/// ```
///
/// Relations without triples are absent and read as 0.
#[derive(Debug, Clone)]
pub struct FunctionalityTable {
    counts: Vec<Option<Counts>>,
}

impl FunctionalityTable {
    pub fn func(&self, rel: RelId) -> f64 {
        self.func_ratio(rel)
            .map_or(0.0, |(n, d)| n as f64 / d as f64)
    }

    pub fn inv_func(&self, rel: RelId) -> f64 {
        self.inv_func_ratio(rel)
            .map_or(0.0, |(n, d)| n as f64 / d as f64)
    }

    /// F(r) as an exact `(numerator, denominator)` pair.
    pub fn func_ratio(&self, rel: RelId) -> Option<(u64, u64)> {
        let c = self.counts.get(rel as usize).copied().flatten()?;
        Some((c.heads, c.pairs))
    }

    pub fn inv_func_ratio(&self, rel: RelId) -> Option<(u64, u64)> {
        let c = self.counts.get(rel as usize).copied().flatten()?;
        Some((c.tails, c.pairs))
    }

    pub fn contains(&self, rel: RelId) -> bool {
        matches!(self.counts.get(rel as usize), Some(Some(_)))
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }
}

pub fn compute_functionalities(view: &InverseAugmentedView<'_>) -> FunctionalityTable {
    let base = view.base();
    let n = base.num_edges();
    let mut base_counts = vec![None; n];
    for (rel, slot) in base_counts.iter_mut().enumerate() {
        let mut heads: HashSet<NodeId> = HashSet::new();
        let mut tails: HashSet<NodeId> = HashSet::new();
        let mut pairs = 0u64;
        for t in base.triples_by_relation(rel as RelId) {
            heads.insert(t.head);
            tails.insert(t.tail);
            // triples are a set, so each (head, tail) is distinct per relation
            pairs += 1;
        }
        if pairs > 0 {
            *slot = Some(Counts {
                heads: heads.len() as u64,
                tails: tails.len() as u64,
                pairs,
            });
        }
    }
    let inverse = base_counts.iter().map(|c| {
        c.map(|c| Counts {
            heads: c.tails,
            tails: c.heads,
            pairs: c.pairs,
        })
    });
    let counts = base_counts.iter().copied().chain(inverse).collect();
    FunctionalityTable { counts }
}
