//! Scoring an alignment against gold links, plus a string-matching baseline.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs;
use std::hash::Hash;
use std::path::Path;

use rayon::prelude::*;

use crate::embedding::SePredictionSet;
use crate::error::{Error, Result};
use crate::kg::{KnowledgeGraph, NodeId};
use crate::reasoner::UnalignedSet;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlignmentMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub true_positives: usize,
    pub predicted: usize,
    pub gold: usize,
}

/// Precision, recall and F1 of `predicted` against `gold`. Duplicates on
/// either side count once. An empty prediction scores precision 0.
pub fn score<T: Eq + Hash>(predicted: &[(T, T)], gold: &[(T, T)]) -> Result<AlignmentMetrics> {
    let gold: HashSet<&(T, T)> = gold.iter().collect();
    if gold.is_empty() {
        return Err(Error::Usage(
            "cannot score against an empty gold set".into(),
        ));
    }
    let predicted: HashSet<&(T, T)> = predicted.iter().collect();
    let tp = predicted.iter().filter(|p| gold.contains(*p)).count();
    let precision = if predicted.is_empty() {
        0.0
    } else {
        tp as f64 / predicted.len() as f64
    };
    let recall = tp as f64 / gold.len() as f64;
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    Ok(AlignmentMetrics {
        precision,
        recall,
        f1,
        true_positives: tp,
        predicted: predicted.len(),
        gold: gold.len(),
    })
}

impl AlignmentMetrics {
    pub fn to_key_values(&self) -> String {
        format!(
            "precision={:.6}\nrecall={:.6}\nf1={:.6}\ntrue_positives={}\npredicted={}\ngold={}\n",
            self.precision, self.recall, self.f1, self.true_positives, self.predicted, self.gold
        )
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_key_values())?;
        Ok(())
    }
}

impl fmt::Display for AlignmentMetrics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<10} {:>8}", "metric", "value")?;
        writeln!(f, "{:<10} {:>8.4}", "precision", self.precision)?;
        writeln!(f, "{:<10} {:>8.4}", "recall", self.recall)?;
        writeln!(f, "{:<10} {:>8.4}", "f1", self.f1)?;
        write!(
            f,
            "({} correct of {} predicted, {} gold)",
            self.true_positives, self.predicted, self.gold
        )
    }
}

/// Fraction of gold pairs, restricted to first-graph entities still
/// unaligned, whose predicted counterpart is the gold one. `None` when no
/// gold pair falls in that set.
pub fn hits_at_1(
    predictions: &SePredictionSet,
    gold: &[(NodeId, NodeId)],
    unaligned: &UnalignedSet,
) -> Option<f64> {
    let open: HashSet<NodeId> = unaligned.left.iter().copied().collect();
    let predicted: HashMap<NodeId, NodeId> = predictions
        .mappings
        .iter()
        .map(|&(l, r, _)| (l, r))
        .collect();
    let relevant: Vec<&(NodeId, NodeId)> = gold.iter().filter(|(l, _)| open.contains(l)).collect();
    if relevant.is_empty() {
        return None;
    }
    let hits = relevant
        .iter()
        .filter(|(l, r)| predicted.get(l) == Some(r))
        .count();
    Some(hits as f64 / relevant.len() as f64)
}

/// Where the baseline reads an entity's name from.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum NameSource {
    /// The IRI local name, with underscores read as spaces.
    #[default]
    LocalName,
    /// The first value of the given attribute in each graph.
    Attribute { kg1: String, kg2: String },
}

/// The part of an IRI after its last `/` or `#`, underscores replaced by spaces.
pub fn local_name(iri: &str) -> String {
    let tail = iri.rsplit(['/', '#']).next().unwrap_or(iri);
    tail.replace('_', " ")
}

/// Edit distance over Unicode scalar values.
pub fn levenshtein(a: &[char], b: &[char]) -> usize {
    if a.is_empty() {
        return b.len();
    }
    let mut row: Vec<usize> = (0..=b.len()).collect();
    for (i, &ca) in a.iter().enumerate() {
        let mut diag = row[0];
        row[0] = i + 1;
        for (j, &cb) in b.iter().enumerate() {
            let up = row[j + 1];
            row[j + 1] = if ca == cb {
                diag
            } else {
                1 + diag.min(up).min(row[j])
            };
            diag = up;
        }
    }
    row[b.len()]
}

/// `1 − distance / longer length`; two empty strings are identical.
pub fn name_similarity(a: &[char], b: &[char]) -> f64 {
    let longest = a.len().max(b.len());
    if longest == 0 {
        return 1.0;
    }
    1.0 - levenshtein(a, b) as f64 / longest as f64
}

fn entity_names(kg: &KnowledgeGraph, source: &NameSource, first: bool) -> Vec<(NodeId, Vec<char>)> {
    let attr = match source {
        NameSource::LocalName => None,
        NameSource::Attribute { kg1, kg2 } => {
            let label = if first { kg1 } else { kg2 };
            // an unknown attribute simply yields no names
            Some(kg.attribute_id(label))
        }
    };
    kg.entities()
        .filter_map(|e| {
            let name = match attr {
                None => local_name(kg.node_label(e)),
                Some(None) => return None,
                Some(Some(a)) => {
                    let t = kg.triples_by_head(e).find(|t| t.rel == a)?;
                    kg.node_label(t.tail).to_owned()
                }
            };
            let chars: Vec<char> = name.chars().collect();
            (!chars.is_empty()).then_some((e, chars))
        })
        .collect()
}

/// Greedy one-to-one matching on name similarity. Pairs are taken in order
/// of decreasing similarity (ties by lower ids) as long as both entities are
/// still free and the similarity is strictly above `threshold`.
pub fn str_match_baseline(
    kg1: &KnowledgeGraph,
    kg2: &KnowledgeGraph,
    threshold: f64,
    source: &NameSource,
) -> Vec<(NodeId, NodeId, f64)> {
    let left = entity_names(kg1, source, true);
    let right = entity_names(kg2, source, false);
    let mut candidates: Vec<(NodeId, NodeId, f64)> = left
        .par_iter()
        .flat_map_iter(|(l, a)| {
            right.iter().filter_map(move |(r, b)| {
                // the length gap alone bounds the similarity from above
                let longest = a.len().max(b.len()) as f64;
                let bound = 1.0 - a.len().abs_diff(b.len()) as f64 / longest;
                if bound <= threshold {
                    return None;
                }
                let s = name_similarity(a, b);
                (s > threshold).then_some((*l, *r, s))
            })
        })
        .collect();
    candidates.sort_by(|x, y| y.2.total_cmp(&x.2).then(x.0.cmp(&y.0)).then(x.1.cmp(&y.1)));
    let mut used_left = HashSet::new();
    let mut used_right = HashSet::new();
    candidates
        .into_iter()
        .filter(|&(l, r, _)| {
            if used_left.contains(&l) || used_right.contains(&r) {
                return false;
            }
            used_left.insert(l);
            used_right.insert(r);
            true
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kg::KgBuilder;

    fn pairs(v: &[(&str, &str)]) -> Vec<(String, String)> {
        v.iter()
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .collect()
    }

    #[test]
    fn perfect_and_empty_predictions() {
        let gold = pairs(&[("a", "x"), ("b", "y")]);
        let m = score(&gold, &gold).unwrap();
        assert_eq!((m.precision, m.recall, m.f1), (1.0, 1.0, 1.0));
        let m = score(&[], &gold).unwrap();
        assert_eq!((m.precision, m.recall, m.f1), (0.0, 0.0, 0.0));
        assert!(score(&gold, &[]).is_err());
    }

    #[test]
    fn partial_prediction_with_duplicates() {
        let gold = pairs(&[("a", "x"), ("b", "y"), ("c", "z"), ("d", "w")]);
        let pred = pairs(&[("a", "x"), ("a", "x"), ("b", "z")]);
        let m = score(&pred, &gold).unwrap();
        assert_eq!(m.predicted, 2);
        assert_eq!(m.true_positives, 1);
        assert!((m.precision - 0.5).abs() < 1e-12);
        assert!((m.recall - 0.25).abs() < 1e-12);
        assert!((m.f1 - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn hits_restricted_to_unaligned() {
        let preds = SePredictionSet {
            mappings: vec![(1, 11, 0.9), (2, 13, 0.5)],
        };
        let gold = [(0, 10), (1, 11), (2, 12)];
        let open = UnalignedSet {
            left: vec![1, 2],
            right: vec![11, 12, 13],
        };
        assert_eq!(hits_at_1(&preds, &gold, &open), Some(0.5));
        let none = UnalignedSet::default();
        assert_eq!(hits_at_1(&preds, &gold, &none), None);
    }

    #[test]
    fn edit_distance() {
        let c = |s: &str| s.chars().collect::<Vec<_>>();
        assert_eq!(levenshtein(&c("kitten"), &c("sitting")), 3);
        assert_eq!(levenshtein(&c(""), &c("abc")), 3);
        assert_eq!(levenshtein(&c("Zürich"), &c("Zurich")), 1);
        assert_eq!(name_similarity(&c("abcd"), &c("abcd")), 1.0);
        assert_eq!(
            local_name("http://dbpedia.org/resource/New_York"),
            "New York"
        );
        assert_eq!(local_name("http://x.org/onto#Thing"), "Thing");
    }

    #[test]
    fn baseline_is_greedy_one_to_one() {
        let mut b1 = KgBuilder::new();
        b1.add_relation_triple("http://a/Paris", "http://a/r", "http://a/Berlin")
            .unwrap();
        b1.add_relation_triple("http://a/Pariss", "http://a/r", "http://a/Berlin")
            .unwrap();
        let mut b2 = KgBuilder::new();
        b2.add_relation_triple("http://b/Paris", "http://b/r", "http://b/Berlin")
            .unwrap();
        let (kg1, kg2) = (b1.freeze().unwrap(), b2.freeze().unwrap());
        let out = str_match_baseline(&kg1, &kg2, 0.5, &NameSource::LocalName);
        let labels: Vec<(&str, &str)> = out
            .iter()
            .map(|&(l, r, _)| (kg1.node_label(l), kg2.node_label(r)))
            .collect();
        assert_eq!(
            labels,
            vec![
                ("http://a/Paris", "http://b/Paris"),
                ("http://a/Berlin", "http://b/Berlin")
            ]
        );
        // strict threshold: similarity exactly 1 is not above 1
        assert!(str_match_baseline(&kg1, &kg2, 1.0, &NameSource::LocalName).is_empty());
    }

    #[test]
    fn baseline_by_attribute() {
        let mut b1 = KgBuilder::new();
        b1.add_attribute_triple("e1", "name", "\"Alpha\"").unwrap();
        let mut b2 = KgBuilder::new();
        b2.add_attribute_triple("f1", "label", "\"Alpha\"").unwrap();
        let (kg1, kg2) = (b1.freeze().unwrap(), b2.freeze().unwrap());
        let src = NameSource::Attribute {
            kg1: "name".into(),
            kg2: "label".into(),
        };
        let out = str_match_baseline(&kg1, &kg2, 0.9, &src);
        assert_eq!(out.len(), 1);
    }
}
