//! Synthetic dataset pairs: a graph and a perturbed, relabelled copy of it.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::DatasetPair;
use crate::error::{Error, Result};
use crate::kg::{KgBuilder, KnowledgeGraph, Namespace, Triple};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbationSpec {
    /// Fraction of relation triples removed from the copy.
    pub triple_drop_rate: f64,
    /// Fraction of attribute triples removed from the copy.
    pub attribute_drop_rate: f64,
    /// Fraction of surviving attribute triples whose literal is replaced by a
    /// fresh random token.
    pub literal_corruption_rate: f64,
    pub rename_seed: u64,
}

impl Default for PerturbationSpec {
    fn default() -> Self {
        Self {
            triple_drop_rate: 0.0,
            attribute_drop_rate: 0.0,
            literal_corruption_rate: 0.0,
            rename_seed: 0,
        }
    }
}

impl PerturbationSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("triple_drop_rate", self.triple_drop_rate),
            ("attribute_drop_rate", self.attribute_drop_rate),
            ("literal_corruption_rate", self.literal_corruption_rate),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("{name} = {v} is outside [0, 1]")));
            }
        }
        Ok(())
    }
}

const KG2_ENTITY: &str = "http://synthetic.kg2/entity/";
const KG2_RELATION: &str = "http://synthetic.kg2/relation/";
const KG2_ATTRIBUTE: &str = "http://synthetic.kg2/attribute/";

fn permutation(n: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(rng);
    p
}

/// Builds a pair whose second graph is a perturbed copy of `kg` with every
/// entity, relation and attribute renamed. Triples of the copy are inserted in
/// shuffled order so its ids carry no trace of the original numbering. The
/// gold links are the identity on entities that survive in the copy.
pub fn synthesize_pair(kg: &KnowledgeGraph, spec: &PerturbationSpec) -> Result<DatasetPair> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.rename_seed);
    let node_names = permutation(kg.num_nodes(), &mut rng);
    let edge_names = permutation(kg.num_edges(), &mut rng);

    let mut kept: Vec<(Triple, Option<String>)> = Vec::new();
    for t in kg.triples() {
        let attribute = kg.is_attribute(t.rel);
        let rate = if attribute {
            spec.attribute_drop_rate
        } else {
            spec.triple_drop_rate
        };
        if rng.gen::<f64>() < rate {
            continue;
        }
        let corrupted = (attribute && rng.gen::<f64>() < spec.literal_corruption_rate)
            .then(|| format!("~{:016x}", rng.gen::<u64>()));
        kept.push((*t, corrupted));
    }
    kept.shuffle(&mut rng);

    let entity_label = |n: u32| format!("{KG2_ENTITY}{:06}", node_names[n as usize]);
    let mut b = KgBuilder::new();
    for (t, corrupted) in &kept {
        let head = b.intern(&entity_label(t.head), Namespace::Node, false);
        let attribute = kg.is_attribute(t.rel);
        let prefix = if attribute {
            KG2_ATTRIBUTE
        } else {
            KG2_RELATION
        };
        let rel = b.intern(
            &format!("{prefix}{:04}", edge_names[t.rel as usize]),
            Namespace::Edge,
            attribute,
        );
        let tail = if attribute {
            let text = corrupted
                .as_deref()
                .unwrap_or_else(|| kg.node_label(t.tail));
            // labels are already normalized; quote so normalization is a no-op
            b.intern(&format!("\"{text}\""), Namespace::Node, true)
        } else {
            b.intern(&entity_label(t.tail), Namespace::Node, false)
        };
        b.add_triple(head, rel, tail)?;
    }
    if b.num_triples() == 0 {
        return Err(Error::Config(
            "perturbation removed every triple of the copy".into(),
        ));
    }
    let kg2 = b.freeze()?;
    let gold = kg
        .entities()
        .filter_map(|e| {
            let label2 = entity_label(e);
            kg2.entity_id(&label2)
                .map(|_| (kg.node_label(e).to_owned(), label2))
        })
        .collect();
    DatasetPair::new(kg.clone(), kg2, gold)
}

/// Shape of a random base graph for [`random_kg`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomKgSpec {
    pub entities: usize,
    pub relations: usize,
    /// Outgoing relation triples per entity.
    pub triples_per_entity: usize,
    /// Attributes besides the per-entity unique name.
    pub shared_attributes: usize,
    /// Distinct values each shared attribute draws from.
    pub shared_values: usize,
    pub seed: u64,
}

impl Default for RandomKgSpec {
    fn default() -> Self {
        Self {
            entities: 1000,
            relations: 8,
            triples_per_entity: 4,
            shared_attributes: 3,
            shared_values: 40,
            seed: 0,
        }
    }
}

/// Generates a random graph in which every entity has a unique name literal,
/// a few low-selectivity attribute values and random outgoing relation
/// triples. Tails are drawn with a bias towards low ids so some entities act
/// as hubs, and each relation has its own fan-out so functionalities differ.
pub fn random_kg(spec: &RandomKgSpec) -> Result<KnowledgeGraph> {
    if spec.entities < 2 || spec.relations == 0 {
        return Err(Error::Config(
            "random graph needs at least 2 entities and 1 relation".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = spec.entities;
    let entity = |i: usize| format!("http://synthetic.kg1/entity/{i:06}");
    let mut b = KgBuilder::new();
    for i in 0..n {
        let e = entity(i);
        for _ in 0..spec.triples_per_entity {
            let r = rng.gen_range(0..spec.relations);
            // skewed tail choice: squaring a uniform draw favours small ids
            let u: f64 = rng.gen();
            let skew = 1.0 + (r % 3) as f64;
            let mut t = ((u.powf(skew)) * n as f64) as usize % n;
            if t == i {
                t = (t + 1) % n;
            }
            b.add_relation_triple(
                &e,
                &format!("http://synthetic.kg1/relation/{r:02}"),
                &entity(t),
            )?;
        }
        b.add_attribute_triple(
            &e,
            "http://synthetic.kg1/attribute/name",
            &format!("\"name {i:06}\""),
        )?;
        for a in 0..spec.shared_attributes {
            if rng.gen_bool(0.5) {
                let v = rng.gen_range(0..spec.shared_values.max(1));
                b.add_attribute_triple(
                    &e,
                    &format!("http://synthetic.kg1/attribute/a{a}"),
                    &format!("\"a{a} value {v}\""),
                )?;
            }
        }
    }
    b.freeze()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::write_openea;

    fn base() -> KnowledgeGraph {
        random_kg(&RandomKgSpec {
            entities: 60,
            ..Default::default()
        })
        .unwrap()
    }

    #[test]
    fn identity_perturbation_is_isomorphic() {
        let kg = base();
        let pair = synthesize_pair(&kg, &PerturbationSpec::default()).unwrap();
        assert_eq!(pair.kg2.num_entities(), kg.num_entities());
        assert_eq!(pair.kg2.triples().len(), kg.triples().len());
        assert_eq!(pair.kg2.num_values(), kg.num_values());
        assert_eq!(pair.gold.len(), kg.num_entities());
        // every gold pair has the same neighbourhood shape
        for (a, b) in pair.gold.iter().take(10) {
            let (x, y) = (kg.entity_id(a).unwrap(), pair.kg2.entity_id(b).unwrap());
            assert_eq!(kg.degree(x), pair.kg2.degree(y));
        }
    }

    #[test]
    fn full_triple_drop_leaves_no_relation_triples() {
        let kg = base();
        let spec = PerturbationSpec {
            triple_drop_rate: 1.0,
            ..Default::default()
        };
        let pair = synthesize_pair(&kg, &spec).unwrap();
        assert_eq!(pair.kg2.num_relation_triples(), 0);
        assert!(pair.kg2.num_attribute_triples() > 0);
    }

    #[test]
    fn same_seed_gives_identical_copies() {
        let kg = base();
        let spec = PerturbationSpec {
            triple_drop_rate: 0.3,
            attribute_drop_rate: 0.2,
            literal_corruption_rate: 0.4,
            rename_seed: 7,
        };
        let tmp = tempfile::tempdir().unwrap();
        for name in ["x", "y"] {
            let pair = synthesize_pair(&kg, &spec).unwrap();
            write_openea(&pair, tmp.path().join(name)).unwrap();
        }
        for f in ["rel_triples_2", "attr_triples_2", "ent_links"] {
            let x = std::fs::read(tmp.path().join("x").join(f)).unwrap();
            let y = std::fs::read(tmp.path().join("y").join(f)).unwrap();
            assert_eq!(x, y, "{f} differs");
        }
    }

    #[test]
    fn rates_outside_unit_interval_are_rejected() {
        let spec = PerturbationSpec {
            literal_corruption_rate: 1.5,
            ..Default::default()
        };
        assert!(matches!(
            synthesize_pair(&base(), &spec),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn gold_denotes_the_same_source_entity() {
        let kg = base();
        let spec = PerturbationSpec {
            triple_drop_rate: 0.5,
            rename_seed: 3,
            ..Default::default()
        };
        let pair = synthesize_pair(&kg, &spec).unwrap();
        // the name attribute is untouched, so each gold pair shares its name
        for (a, b) in &pair.gold {
            let x = kg.entity_id(a).unwrap();
            let y = pair.kg2.entity_id(b).unwrap();
            let name = |g: &KnowledgeGraph, n| {
                g.triples_by_head(n)
                    .filter(|t| g.is_attribute(t.rel) && g.node_label(t.tail).starts_with("name"))
                    .map(|t| g.node_label(t.tail).to_owned())
                    .next()
            };
            assert_eq!(name(&kg, x), name(&pair.kg2, y));
        }
    }
}
