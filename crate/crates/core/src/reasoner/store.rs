use std::collections::{BTreeMap, HashMap};
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::kg::{InverseAugmentedView, KnowledgeGraph, NodeId, RelId};

/// Sparse equivalence probabilities P(e ≡ e′) between nodes of two graphs.
///
/// Only strictly positive probabilities are stored. Pairs are kept sorted by
/// `(left, right)` and indexed from both sides.
#[derive(Debug, Clone, PartialEq)]
pub struct EntityMappingStore {
    pairs: Vec<(NodeId, NodeId, f64)>,
    left_offsets: Vec<usize>,
    right_offsets: Vec<usize>,
    right_items: Vec<(NodeId, f64)>,
}

impl EntityMappingStore {
    pub fn empty(left_nodes: usize, right_nodes: usize) -> Self {
        Self::from_pairs(left_nodes, right_nodes, Vec::new())
    }

    /// Builds a store from `(left, right, p)` triples. Probabilities are
    /// clamped to `[0, 1]`, zeros dropped, and for a repeated pair the first
    /// occurrence wins.
    pub fn from_pairs(
        left_nodes: usize,
        right_nodes: usize,
        pairs: impl IntoIterator<Item = (NodeId, NodeId, f64)>,
    ) -> Self {
        let mut pairs: Vec<_> = pairs
            .into_iter()
            .map(|(l, r, p)| (l, r, p.clamp(0.0, 1.0)))
            .filter(|&(l, r, p)| p > 0.0 && (l as usize) < left_nodes && (r as usize) < right_nodes)
            .collect();
        pairs.sort_by_key(|&(l, r, _)| (l, r));
        pairs.dedup_by_key(|&mut (l, r, _)| (l, r));

        let mut left_offsets = vec![0usize; left_nodes + 1];
        let mut right_offsets = vec![0usize; right_nodes + 1];
        for &(l, r, _) in &pairs {
            left_offsets[l as usize + 1] += 1;
            right_offsets[r as usize + 1] += 1;
        }
        for i in 0..left_nodes {
            left_offsets[i + 1] += left_offsets[i];
        }
        for i in 0..right_nodes {
            right_offsets[i + 1] += right_offsets[i];
        }
        let mut cursor = right_offsets.clone();
        let mut right_items = vec![(0, 0.0); pairs.len()];
        for &(l, r, p) in &pairs {
            let slot = &mut cursor[r as usize];
            right_items[*slot] = (l, p);
            *slot += 1;
        }
        Self {
            pairs,
            left_offsets,
            right_offsets,
            right_items,
        }
    }

    pub fn left_nodes(&self) -> usize {
        self.left_offsets.len() - 1
    }

    pub fn right_nodes(&self) -> usize {
        self.right_offsets.len() - 1
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// All stored pairs, sorted by `(left, right)`.
    pub fn pairs(&self) -> &[(NodeId, NodeId, f64)] {
        &self.pairs
    }

    fn left_slice(&self, l: NodeId) -> &[(NodeId, NodeId, f64)] {
        let l = l as usize;
        if l + 1 >= self.left_offsets.len() {
            return &[];
        }
        &self.pairs[self.left_offsets[l]..self.left_offsets[l + 1]]
    }

    /// Counterparts `(right, p)` of a left node, ascending by `right`.
    pub fn left_row(&self, l: NodeId) -> impl Iterator<Item = (NodeId, f64)> + '_ {
        self.left_slice(l).iter().map(|&(_, r, p)| (r, p))
    }

    /// Counterparts `(left, p)` of a right node, ascending by `left`.
    pub fn right_row(&self, r: NodeId) -> &[(NodeId, f64)] {
        let r = r as usize;
        if r + 1 >= self.right_offsets.len() {
            return &[];
        }
        &self.right_items[self.right_offsets[r]..self.right_offsets[r + 1]]
    }

    pub fn get(&self, l: NodeId, r: NodeId) -> f64 {
        let row = self.left_slice(l);
        row.binary_search_by_key(&r, |&(_, r, _)| r)
            .map_or(0.0, |i| row[i].2)
    }

    /// Highest-probability counterpart of a left node; ties go to the lower id.
    pub fn best_left(&self, l: NodeId) -> Option<(NodeId, f64)> {
        best(self.left_row(l))
    }

    pub fn best_right(&self, r: NodeId) -> Option<(NodeId, f64)> {
        best(self.right_row(r).iter().copied())
    }

    /// Pairs in which each side is the other's best counterpart.
    pub fn mutual_best(&self) -> Vec<(NodeId, NodeId, f64)> {
        (0..self.left_nodes() as NodeId)
            .filter_map(|l| {
                let (r, p) = self.best_left(l)?;
                (self.best_right(r)?.0 == l).then_some((l, r, p))
            })
            .collect()
    }

    /// Largest absolute difference between two stores, with absent pairs as 0.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let (mut i, mut j) = (0, 0);
        let (a, b) = (&self.pairs, &other.pairs);
        let mut diff: f64 = 0.0;
        while i < a.len() || j < b.len() {
            let ka = a.get(i).map(|&(l, r, _)| (l, r));
            let kb = b.get(j).map(|&(l, r, _)| (l, r));
            match (ka, kb) {
                (Some(x), Some(y)) if x == y => {
                    diff = diff.max((a[i].2 - b[j].2).abs());
                    i += 1;
                    j += 1;
                }
                (Some(x), Some(y)) if x < y => {
                    diff = diff.max(a[i].2);
                    i += 1;
                }
                (Some(_), None) => {
                    diff = diff.max(a[i].2);
                    i += 1;
                }
                _ => {
                    diff = diff.max(b[j].2);
                    j += 1;
                }
            }
        }
        diff
    }

    /// Same pairs with sides swapped.
    pub fn transposed(&self) -> Self {
        Self::from_pairs(
            self.right_nodes(),
            self.left_nodes(),
            self.pairs.iter().map(|&(l, r, p)| (r, l, p)),
        )
    }
}

fn best(row: impl Iterator<Item = (NodeId, f64)>) -> Option<(NodeId, f64)> {
    row.fold(None, |acc: Option<(NodeId, f64)>, (n, p)| match acc {
        Some((_, bp)) if bp >= p => acc,
        _ => Some((n, p)),
    })
}

/// Sub-relation probabilities between augmented relations of two graphs:
/// `forward` holds P(r ⊆ r′) keyed `(r, r′)`, `backward` holds P(r′ ⊆ r)
/// keyed `(r′, r)`.
///
/// Until the first update every pair reads as the initial constant, without
/// materializing it; afterwards absent pairs read as 0.
#[derive(Debug, Clone, PartialEq)]
pub struct SubRelationStore {
    initial: Option<f64>,
    forward: BTreeMap<(RelId, RelId), f64>,
    backward: BTreeMap<(RelId, RelId), f64>,
}

impl SubRelationStore {
    /// The initial state: every pair reads as `theta`.
    pub fn constant(theta: f64) -> Result<Self> {
        if !(theta > 0.0 && theta < 1.0) {
            return Err(Error::Config(format!(
                "initial sub-relation probability {theta} must lie in (0, 1)"
            )));
        }
        Ok(Self {
            initial: Some(theta),
            forward: BTreeMap::new(),
            backward: BTreeMap::new(),
        })
    }

    pub fn from_maps(
        forward: BTreeMap<(RelId, RelId), f64>,
        backward: BTreeMap<(RelId, RelId), f64>,
    ) -> Self {
        let clean = |m: BTreeMap<(RelId, RelId), f64>| {
            m.into_iter()
                .map(|(k, v)| (k, v.clamp(0.0, 1.0)))
                .filter(|&(_, v)| v > 0.0)
                .collect()
        };
        Self {
            initial: None,
            forward: clean(forward),
            backward: clean(backward),
        }
    }

    pub fn is_initial(&self) -> bool {
        self.initial.is_some()
    }

    pub fn initial_value(&self) -> Option<f64> {
        self.initial
    }

    /// P(r ⊆ r′) for `r` in the first graph and `r′` in the second.
    pub fn forward(&self, r: RelId, r2: RelId) -> f64 {
        match self.initial {
            Some(theta) => theta,
            None => self.forward.get(&(r, r2)).copied().unwrap_or(0.0),
        }
    }

    /// P(r′ ⊆ r) for `r′` in the second graph and `r` in the first.
    pub fn backward(&self, r2: RelId, r: RelId) -> f64 {
        match self.initial {
            Some(theta) => theta,
            None => self.backward.get(&(r2, r)).copied().unwrap_or(0.0),
        }
    }

    pub fn forward_entries(&self) -> impl Iterator<Item = ((RelId, RelId), f64)> + '_ {
        self.forward.iter().map(|(&k, &v)| (k, v))
    }

    pub fn backward_entries(&self) -> impl Iterator<Item = ((RelId, RelId), f64)> + '_ {
        self.backward.iter().map(|(&k, &v)| (k, v))
    }

    /// Writes `r<TAB>r′<TAB>p` lines: forward entries first, then backward
    /// entries with the sub-relation in the first column.
    pub fn dump(
        &self,
        view1: &InverseAugmentedView<'_>,
        view2: &InverseAugmentedView<'_>,
        out: impl AsRef<Path>,
    ) -> Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(out)?);
        for ((r, r2), p) in self.forward_entries() {
            writeln!(
                w,
                "{}\t{}\t{p:.6}",
                view1.relation_label(r),
                view2.relation_label(r2)
            )?;
        }
        for ((r2, r), p) in self.backward_entries() {
            writeln!(
                w,
                "{}\t{}\t{p:.6}",
                view2.relation_label(r2),
                view1.relation_label(r)
            )?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Equivalence 1 for every pair of values with identical normalized text.
/// With `case_fold` the comparison ignores case.
pub fn init_literal_mappings(
    kg1: &KnowledgeGraph,
    kg2: &KnowledgeGraph,
    case_fold: bool,
) -> EntityMappingStore {
    let mut pairs = Vec::new();
    if case_fold {
        let mut folded: HashMap<String, Vec<NodeId>> = HashMap::new();
        for (text, id) in kg2.literals() {
            folded.entry(text.to_lowercase()).or_default().push(id);
        }
        for (text, id) in kg1.literals() {
            if let Some(ids) = folded.get(&text.to_lowercase()) {
                pairs.extend(ids.iter().map(|&v2| (id, v2, 1.0)));
            }
        }
    } else {
        for (text, id) in kg1.literals() {
            if let Some(v2) = kg2.literal_lookup(text) {
                pairs.push((id, v2, 1.0));
            }
        }
    }
    EntityMappingStore::from_pairs(kg1.num_nodes(), kg2.num_nodes(), pairs)
}
