//! Dataset loading and mapping serialization.
//!
//! Datasets follow the OpenEA directory layout: tab-separated
//! `rel_triples_1`, `rel_triples_2`, `attr_triples_1`, `attr_triples_2` and
//! a two-column `ent_links` file of gold entity pairs. Split directories
//! (`721_5fold/`) are ignored; the gold links are used for testing only.

mod synth;

use std::collections::HashSet;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::kg::{KgBuilder, KnowledgeGraph, NodeId};

pub use synth::{random_kg, synthesize_pair, PerturbationSpec, RandomKgSpec};

pub const REL_TRIPLES_1: &str = "rel_triples_1";
pub const REL_TRIPLES_2: &str = "rel_triples_2";
pub const ATTR_TRIPLES_1: &str = "attr_triples_1";
pub const ATTR_TRIPLES_2: &str = "attr_triples_2";
pub const ENT_LINKS: &str = "ent_links";

/// Two graphs to align plus the gold entity correspondence, by label.
#[derive(Debug, Clone)]
pub struct DatasetPair {
    pub kg1: KnowledgeGraph,
    pub kg2: KnowledgeGraph,
    pub gold: Vec<(String, String)>,
}

impl DatasetPair {
    /// Checks that every gold label names an entity and drops duplicate pairs.
    pub fn new(
        kg1: KnowledgeGraph,
        kg2: KnowledgeGraph,
        gold: Vec<(String, String)>,
    ) -> Result<Self> {
        let mut seen = HashSet::new();
        let mut unique = Vec::with_capacity(gold.len());
        for (a, b) in gold {
            let ok1 = kg1.entity_id(&a).is_some();
            let ok2 = kg2.entity_id(&b).is_some();
            if !ok1 || !ok2 {
                let missing = if ok1 { &b } else { &a };
                return Err(Error::Integrity(format!(
                    "gold label {missing:?} names no entity"
                )));
            }
            if seen.insert((a.clone(), b.clone())) {
                unique.push((a, b));
            } else {
                log::warn!("duplicate gold pair ({a}, {b}) ignored");
            }
        }
        Ok(Self {
            kg1,
            kg2,
            gold: unique,
        })
    }

    /// Gold pairs resolved to entity ids.
    pub fn gold_ids(&self) -> Vec<(NodeId, NodeId)> {
        self.gold
            .iter()
            .filter_map(|(a, b)| Some((self.kg1.entity_id(a)?, self.kg2.entity_id(b)?)))
            .collect()
    }
}

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Load {
        path: path.to_owned(),
        source,
    })
}

/// Splits a tab-separated file into rows of exactly `fields` columns,
/// returning each row with its 1-based line number. Blank lines are skipped.
pub fn read_tsv(path: &Path, fields: usize) -> Result<Vec<(usize, Vec<String>)>> {
    let text = read_file(path)?;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.strip_suffix('\r').unwrap_or(line);
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<String> = line.split('\t').map(str::to_owned).collect();
        if cols.len() != fields {
            return Err(Error::Parse {
                path: path.to_owned(),
                line: i + 1,
                message: format!(
                    "expected {fields} tab-separated fields, found {}",
                    cols.len()
                ),
            });
        }
        rows.push((i + 1, cols));
    }
    Ok(rows)
}

fn load_kg(rel_path: &Path, attr_path: &Path) -> Result<KnowledgeGraph> {
    let mut b = KgBuilder::new();
    for (path, attribute) in [(rel_path, false), (attr_path, true)] {
        for (line, cols) in read_tsv(path, 3)? {
            let added = if attribute {
                b.add_attribute_triple(&cols[0], &cols[1], &cols[2])
            } else {
                b.add_relation_triple(&cols[0], &cols[1], &cols[2])
            };
            added.map_err(|e| Error::Parse {
                path: path.to_owned(),
                line,
                message: e.to_string(),
            })?;
        }
    }
    b.freeze()
        .map_err(|_| Error::Integrity(format!("{} holds no triples", rel_path.display())))
}

/// Loads an OpenEA-layout dataset directory.
pub fn load_openea(dir: impl AsRef<Path>) -> Result<DatasetPair> {
    let dir = dir.as_ref();
    let file = |name: &str| -> Result<PathBuf> {
        let p = dir.join(name);
        if p.is_file() {
            Ok(p)
        } else {
            Err(Error::Load {
                path: p,
                source: std::io::Error::new(std::io::ErrorKind::NotFound, "missing dataset file"),
            })
        }
    };
    let (r1, r2, a1, a2, links) = (
        file(REL_TRIPLES_1)?,
        file(REL_TRIPLES_2)?,
        file(ATTR_TRIPLES_1)?,
        file(ATTR_TRIPLES_2)?,
        file(ENT_LINKS)?,
    );
    let (kg1, kg2) = rayon::join(|| load_kg(&r1, &a1), || load_kg(&r2, &a2));
    let (kg1, kg2) = (kg1?, kg2?);
    let gold = read_links(&links)?;
    for (side, kg) in [(1, &kg1), (2, &kg2)] {
        log::info!(
            "kg{side}: {} entities, {} relations ({} triples), {} attributes ({} triples)",
            kg.num_entities(),
            kg.num_relations(),
            kg.num_relation_triples(),
            kg.num_attributes(),
            kg.num_attribute_triples()
        );
    }
    DatasetPair::new(kg1, kg2, gold)
}

/// Reads a two-column link file.
pub fn read_links(path: &Path) -> Result<Vec<(String, String)>> {
    Ok(read_tsv(path, 2)?
        .into_iter()
        .map(|(_, mut c)| {
            let b = c.pop().unwrap_or_default();
            let a = c.pop().unwrap_or_default();
            (a, b)
        })
        .collect())
}

/// Writes `label1<TAB>label2<TAB>prob` lines sorted by descending
/// probability, then by `label1`.
pub fn write_mappings(mappings: &[(String, String, f64)], out: impl AsRef<Path>) -> Result<()> {
    if let Some((a, b, p)) = mappings.iter().find(|(_, _, p)| !(0.0..=1.0).contains(p)) {
        return Err(Error::Usage(format!(
            "probability {p} of ({a}, {b}) is outside [0, 1]"
        )));
    }
    let mut sorted: Vec<&(String, String, f64)> = mappings.iter().collect();
    sorted.sort_by(|x, y| {
        y.2.total_cmp(&x.2)
            .then_with(|| x.0.cmp(&y.0))
            .then_with(|| x.1.cmp(&y.1))
    });
    let mut w = BufWriter::new(fs::File::create(out)?);
    for (a, b, p) in sorted {
        writeln!(w, "{a}\t{b}\t{p:.6}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_mappings(path: impl AsRef<Path>) -> Result<Vec<(String, String, f64)>> {
    let path = path.as_ref();
    read_tsv(path, 3)?
        .into_iter()
        .map(|(line, c)| {
            let p: f64 = c[2].trim().parse().map_err(|_| Error::Parse {
                path: path.to_owned(),
                line,
                message: format!("bad probability {:?}", c[2]),
            })?;
            Ok((c[0].clone(), c[1].clone(), p))
        })
        .collect()
}

fn write_kg(kg: &KnowledgeGraph, rel_path: &Path, attr_path: &Path) -> Result<()> {
    let mut rel = BufWriter::new(fs::File::create(rel_path)?);
    let mut attr = BufWriter::new(fs::File::create(attr_path)?);
    for t in kg.triples() {
        let (h, r) = (kg.node_label(t.head), kg.edge_label(t.rel));
        if kg.is_attribute(t.rel) {
            writeln!(attr, "{h}\t{r}\t\"{}\"", kg.node_label(t.tail))?;
        } else {
            writeln!(rel, "{h}\t{r}\t{}", kg.node_label(t.tail))?;
        }
    }
    rel.flush()?;
    attr.flush()?;
    Ok(())
}

/// Writes a dataset pair in OpenEA layout so that [`load_openea`] reads it back.
/// Literals are written quoted.
pub fn write_openea(pair: &DatasetPair, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    write_kg(
        &pair.kg1,
        &dir.join(REL_TRIPLES_1),
        &dir.join(ATTR_TRIPLES_1),
    )?;
    write_kg(
        &pair.kg2,
        &dir.join(REL_TRIPLES_2),
        &dir.join(ATTR_TRIPLES_2),
    )?;
    let mut w = BufWriter::new(fs::File::create(dir.join(ENT_LINKS))?);
    for (a, b) in &pair.gold {
        writeln!(w, "{a}\t{b}")?;
    }
    w.flush()?;
    Ok(())
}
