//! In-memory knowledge graphs with interned identifiers.
//!
//! A graph has two id namespaces. *Nodes* are entities and literal values
//! (the union of E and V); *edges* are relations and attributes (R and A).
//! Ids are dense within each namespace and assigned in first-seen order.
//!
//! Graphs are assembled with a [`KgBuilder`] and become immutable once
//! [`KgBuilder::freeze`] has built the head, tail, relation and literal
//! indexes.

use std::collections::{HashMap, HashSet};

use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};

/// Id of an entity or literal value.
pub type NodeId = u32;
/// Id of a relation or attribute. In an [`InverseAugmentedView`] ids at or
/// above `num_edges` denote inverses.
pub type RelId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Namespace {
    /// Entities and literal values.
    Node,
    /// Relations and attributes.
    Edge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Triple {
    pub head: NodeId,
    pub rel: RelId,
    pub tail: NodeId,
}

/// Normalizes a literal: trims whitespace, strips an enclosing pair of quotes
/// together with any `^^datatype` or `@lang` suffix, and applies Unicode NFC.
/// Case is preserved.
pub fn normalize_literal(raw: &str) -> String {
    let s = raw.trim();
    let inner = strip_literal_syntax(s).unwrap_or(s);
    inner.trim().nfc().collect()
}

fn strip_literal_syntax(s: &str) -> Option<&str> {
    let rest = s.strip_prefix('"')?;
    let close = rest.rfind('"')?;
    let suffix = &rest[close + 1..];
    if suffix.is_empty() || suffix.starts_with("^^") || suffix.starts_with('@') {
        Some(&rest[..close])
    } else {
        None
    }
}

/// Normalizes an IRI or other non-literal label: trim plus NFC.
pub fn normalize_label(raw: &str) -> String {
    raw.trim().nfc().collect()
}

/// Mutable building phase of a [`KnowledgeGraph`].
#[derive(Debug, Default)]
pub struct KgBuilder {
    node_labels: Vec<String>,
    node_literal: Vec<bool>,
    entity_ids: HashMap<String, NodeId>,
    literal_ids: HashMap<String, NodeId>,
    edge_labels: Vec<String>,
    edge_attribute: Vec<bool>,
    relation_ids: HashMap<String, RelId>,
    attribute_ids: HashMap<String, RelId>,
    triples: Vec<Triple>,
    seen: HashSet<Triple>,
}

impl KgBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Interns `label` in `namespace`, returning the existing id when the
    /// normalized label was seen before with the same literal flag.
    ///
    /// For [`Namespace::Node`] the flag marks a literal value; for
    /// [`Namespace::Edge`] it marks an attribute.
    pub fn intern(&mut self, label: &str, namespace: Namespace, is_literal: bool) -> u32 {
        match namespace {
            Namespace::Node => {
                let key = if is_literal {
                    normalize_literal(label)
                } else {
                    normalize_label(label)
                };
                let map = if is_literal {
                    &mut self.literal_ids
                } else {
                    &mut self.entity_ids
                };
                if let Some(&id) = map.get(&key) {
                    return id;
                }
                let id = self.node_labels.len() as NodeId;
                map.insert(key.clone(), id);
                self.node_labels.push(key);
                self.node_literal.push(is_literal);
                id
            }
            Namespace::Edge => {
                let key = normalize_label(label);
                let map = if is_literal {
                    &mut self.attribute_ids
                } else {
                    &mut self.relation_ids
                };
                if let Some(&id) = map.get(&key) {
                    return id;
                }
                let id = self.edge_labels.len() as RelId;
                map.insert(key.clone(), id);
                self.edge_labels.push(key);
                self.edge_attribute.push(is_literal);
                id
            }
        }
    }

    pub fn is_literal(&self, node: NodeId) -> bool {
        self.node_literal[node as usize]
    }

    /// Adds a triple between already-interned ids. Duplicate triples are
    /// ignored (the triple collection is a set).
    pub fn add_triple(&mut self, head: NodeId, rel: RelId, tail: NodeId) -> Result<()> {
        let nodes = self.node_labels.len() as u32;
        if head >= nodes || tail >= nodes || rel as usize >= self.edge_labels.len() {
            return Err(Error::Usage(format!(
                "triple ({head}, {rel}, {tail}) references an id that was never interned"
            )));
        }
        if self.node_literal[head as usize] {
            return Err(Error::Usage(format!(
                "literal {:?} cannot be the head of a triple",
                self.node_labels[head as usize]
            )));
        }
        let attribute = self.edge_attribute[rel as usize];
        if attribute != self.node_literal[tail as usize] {
            let kind = if attribute { "attribute" } else { "relation" };
            return Err(Error::Usage(format!(
                "{kind} {:?} has a tail of the wrong kind: {:?}",
                self.edge_labels[rel as usize], self.node_labels[tail as usize]
            )));
        }
        let triple = Triple { head, rel, tail };
        if self.seen.insert(triple) {
            self.triples.push(triple);
        }
        Ok(())
    }

    pub fn add_relation_triple(&mut self, head: &str, rel: &str, tail: &str) -> Result<()> {
        let h = self.intern(head, Namespace::Node, false);
        let r = self.intern(rel, Namespace::Edge, false);
        let t = self.intern(tail, Namespace::Node, false);
        self.add_triple(h, r, t)
    }

    pub fn add_attribute_triple(&mut self, entity: &str, attr: &str, value: &str) -> Result<()> {
        let e = self.intern(entity, Namespace::Node, false);
        let a = self.intern(attr, Namespace::Edge, true);
        let v = self.intern(value, Namespace::Node, true);
        self.add_triple(e, a, v)
    }

    pub fn num_triples(&self) -> usize {
        self.triples.len()
    }

    /// Builds every index and returns the immutable graph.
    pub fn freeze(self) -> Result<KnowledgeGraph> {
        if self.triples.is_empty() {
            return Err(Error::Usage(
                "cannot freeze a knowledge graph without triples".into(),
            ));
        }
        let num_nodes = self.node_labels.len();
        let num_edges = self.edge_labels.len();
        let by_head = Csr::build(num_nodes, &self.triples, |t| t.head);
        let by_tail = Csr::build(num_nodes, &self.triples, |t| t.tail);
        let by_rel = Csr::build(num_edges, &self.triples, |t| t.rel);
        Ok(KnowledgeGraph {
            node_labels: self.node_labels,
            node_literal: self.node_literal,
            entity_ids: self.entity_ids,
            literal_ids: self.literal_ids,
            edge_labels: self.edge_labels,
            edge_attribute: self.edge_attribute,
            relation_ids: self.relation_ids,
            attribute_ids: self.attribute_ids,
            triples: self.triples,
            by_head,
            by_tail,
            by_rel,
        })
    }
}

/// Compressed adjacency: for each key, the indices of the triples carrying it.
#[derive(Debug, Clone)]
struct Csr {
    offsets: Vec<usize>,
    items: Vec<u32>,
}

impl Csr {
    fn build(keys: usize, triples: &[Triple], key: impl Fn(&Triple) -> u32) -> Self {
        let mut offsets = vec![0usize; keys + 1];
        for t in triples {
            offsets[key(t) as usize + 1] += 1;
        }
        for i in 0..keys {
            offsets[i + 1] += offsets[i];
        }
        let mut cursor = offsets.clone();
        let mut items = vec![0u32; triples.len()];
        for (i, t) in triples.iter().enumerate() {
            let slot = &mut cursor[key(t) as usize];
            items[*slot] = i as u32;
            *slot += 1;
        }
        Self { offsets, items }
    }

    fn get(&self, key: u32) -> &[u32] {
        let k = key as usize;
        if k + 1 >= self.offsets.len() {
            return &[];
        }
        &self.items[self.offsets[k]..self.offsets[k + 1]]
    }
}

/// An immutable knowledge graph G = (E, R, A, V, Tᴿ, Tᴬ).
#[derive(Debug, Clone)]
pub struct KnowledgeGraph {
    node_labels: Vec<String>,
    node_literal: Vec<bool>,
    entity_ids: HashMap<String, NodeId>,
    literal_ids: HashMap<String, NodeId>,
    edge_labels: Vec<String>,
    edge_attribute: Vec<bool>,
    relation_ids: HashMap<String, RelId>,
    attribute_ids: HashMap<String, RelId>,
    triples: Vec<Triple>,
    by_head: Csr,
    by_tail: Csr,
    by_rel: Csr,
}

impl KnowledgeGraph {
    pub fn num_nodes(&self) -> usize {
        self.node_labels.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edge_labels.len()
    }

    pub fn num_entities(&self) -> usize {
        self.node_literal.iter().filter(|&&l| !l).count()
    }

    pub fn num_values(&self) -> usize {
        self.node_literal.iter().filter(|&&l| l).count()
    }

    pub fn num_relations(&self) -> usize {
        self.edge_attribute.iter().filter(|&&a| !a).count()
    }

    pub fn num_attributes(&self) -> usize {
        self.edge_attribute.iter().filter(|&&a| a).count()
    }

    pub fn num_relation_triples(&self) -> usize {
        self.triples
            .iter()
            .filter(|t| !self.is_attribute(t.rel))
            .count()
    }

    pub fn num_attribute_triples(&self) -> usize {
        self.triples.len() - self.num_relation_triples()
    }

    pub fn is_literal(&self, node: NodeId) -> bool {
        self.node_literal[node as usize]
    }

    pub fn is_entity(&self, node: NodeId) -> bool {
        !self.is_literal(node)
    }

    pub fn is_attribute(&self, rel: RelId) -> bool {
        self.edge_attribute[rel as usize]
    }

    pub fn node_label(&self, node: NodeId) -> &str {
        &self.node_labels[node as usize]
    }

    pub fn edge_label(&self, rel: RelId) -> &str {
        &self.edge_labels[rel as usize]
    }

    /// Entity ids in ascending order.
    pub fn entities(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.num_nodes() as NodeId).filter(move |&n| self.is_entity(n))
    }

    pub fn entity_id(&self, label: &str) -> Option<NodeId> {
        self.entity_ids.get(&normalize_label(label)).copied()
    }

    pub fn relation_id(&self, label: &str) -> Option<RelId> {
        self.relation_ids.get(&normalize_label(label)).copied()
    }

    pub fn attribute_id(&self, label: &str) -> Option<RelId> {
        self.attribute_ids.get(&normalize_label(label)).copied()
    }

    /// The value whose normalized text equals `text` exactly.
    pub fn literal_lookup(&self, text: &str) -> Option<NodeId> {
        self.literal_ids.get(text).copied()
    }

    /// Iterates `(normalized text, value id)` over every literal.
    pub fn literals(&self) -> impl Iterator<Item = (&str, NodeId)> + '_ {
        self.literal_ids.iter().map(|(k, &v)| (k.as_str(), v))
    }

    pub fn triples(&self) -> &[Triple] {
        &self.triples
    }

    pub fn triples_by_head(&self, node: NodeId) -> impl Iterator<Item = &Triple> + '_ {
        self.by_head
            .get(node)
            .iter()
            .map(move |&i| &self.triples[i as usize])
    }

    pub fn triples_by_tail(&self, node: NodeId) -> impl Iterator<Item = &Triple> + '_ {
        self.by_tail
            .get(node)
            .iter()
            .map(move |&i| &self.triples[i as usize])
    }

    pub fn triples_by_relation(&self, rel: RelId) -> impl Iterator<Item = &Triple> + '_ {
        self.by_rel
            .get(rel)
            .iter()
            .map(move |&i| &self.triples[i as usize])
    }

    pub fn degree(&self, node: NodeId) -> usize {
        self.by_head.get(node).len() + self.by_tail.get(node).len()
    }

    pub fn augmented(&self) -> InverseAugmentedView<'_> {
        InverseAugmentedView { kg: self }
    }
}

pub fn augment_inverses(kg: &KnowledgeGraph) -> InverseAugmentedView<'_> {
    kg.augmented()
}

/// A graph seen together with its inverse triples: for every `(h, r, t)`
/// the view also holds `(t, r⁻, h)` where `r⁻ = r + num_edges`.
///
/// Inverse triples are not copied; they are read off the tail index.
#[derive(Debug, Clone, Copy)]
pub struct InverseAugmentedView<'a> {
    kg: &'a KnowledgeGraph,
}

impl<'a> InverseAugmentedView<'a> {
    pub fn base(&self) -> &'a KnowledgeGraph {
        self.kg
    }

    /// Number of augmented relations, twice the base edge count.
    pub fn num_relations(&self) -> usize {
        2 * self.kg.num_edges()
    }

    pub fn num_triples(&self) -> usize {
        2 * self.kg.triples.len()
    }

    pub fn inverse(&self, rel: RelId) -> RelId {
        let n = self.kg.num_edges() as RelId;
        if rel < n {
            rel + n
        } else {
            rel - n
        }
    }

    pub fn is_inverse(&self, rel: RelId) -> bool {
        rel as usize >= self.kg.num_edges()
    }

    /// Label of an augmented relation; inverses carry a trailing `⁻`.
    pub fn relation_label(&self, rel: RelId) -> String {
        if self.is_inverse(rel) {
            format!("{}⁻", self.kg.edge_label(self.inverse(rel)))
        } else {
            self.kg.edge_label(rel).to_owned()
        }
    }

    /// Every `(rel, neighbor)` such that `(node, rel, neighbor)` is in the view.
    pub fn out_edges(&self, node: NodeId) -> impl Iterator<Item = (RelId, NodeId)> + 'a {
        let n = self.kg.num_edges() as RelId;
        let kg = self.kg;
        kg.triples_by_head(node)
            .map(|t| (t.rel, t.tail))
            .chain(kg.triples_by_tail(node).map(move |t| (t.rel + n, t.head)))
    }

    /// `(head, tail)` pairs of one augmented relation.
    pub fn pairs(&self, rel: RelId) -> impl Iterator<Item = (NodeId, NodeId)> + 'a {
        let inverse = self.is_inverse(rel);
        let base = if inverse { self.inverse(rel) } else { rel };
        self.kg.triples_by_relation(base).map(move |t| {
            if inverse {
                (t.tail, t.head)
            } else {
                (t.head, t.tail)
            }
        })
    }

    pub fn triples(&self) -> impl Iterator<Item = Triple> + 'a {
        let n = self.kg.num_edges() as RelId;
        let base = self.kg.triples.iter().copied();
        let inv = self.kg.triples.iter().map(move |t| Triple {
            head: t.tail,
            rel: t.rel + n,
            tail: t.head,
        });
        base.chain(inv)
    }
}
