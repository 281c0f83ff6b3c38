//! Pairwise inter-annotator agreement as F-measure.
//!
//! Entities agree when label and spans are identical. Relations agree when
//! kinds are equal and both endpoint entities agree. Per label (or kind),
//! F = 2·matched / (|a| + |b|), which is symmetric in the two annotators.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::{check_keys, ScoreError};
use crate::brat::{DocumentAnnotation, Span};
use crate::schema::{RelationKind, SchemaLabel};

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct IaaCell {
    pub matched: usize,
    pub in_a: usize,
    pub in_b: usize,
}

impl IaaCell {
    pub fn f_measure(&self) -> f64 {
        let den = self.in_a + self.in_b;
        if den == 0 {
            0.0
        } else {
            2.0 * self.matched as f64 / den as f64
        }
    }

    fn add(&mut self, o: IaaCell) {
        self.matched += o.matched;
        self.in_a += o.in_a;
        self.in_b += o.in_b;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IaaReport {
    pub entities: BTreeMap<SchemaLabel, IaaCell>,
    pub relations: BTreeMap<RelationKind, IaaCell>,
    /// Mean entity F over labels annotated by either side; `None` when
    /// neither side annotated any entity.
    pub entity_f: Option<f64>,
    pub relation_f: Option<f64>,
}

fn count_matches<K: std::hash::Hash + Eq + Clone, G: Ord + Copy>(
    a: &[(G, K)],
    b: &[(G, K)],
) -> BTreeMap<G, IaaCell> {
    let mut out: BTreeMap<G, IaaCell> = BTreeMap::new();
    let mut pool: HashMap<&K, usize> = HashMap::new();
    for (g, k) in a {
        out.entry(*g).or_default().in_a += 1;
        *pool.entry(k).or_default() += 1;
    }
    for (g, k) in b {
        let cell = out.entry(*g).or_default();
        cell.in_b += 1;
        if let Some(n) = pool.get_mut(k).filter(|n| **n > 0) {
            *n -= 1;
            cell.matched += 1;
        }
    }
    out
}

type EntityKey = (SchemaLabel, Vec<Span>);

fn entity_keys(ann: &DocumentAnnotation) -> Vec<(SchemaLabel, EntityKey)> {
    ann.entities
        .iter()
        .map(|e| (e.label, (e.label, e.spans.clone())))
        .collect()
}

fn relation_keys(ann: &DocumentAnnotation) -> Vec<(RelationKind, (RelationKind, EntityKey, EntityKey))> {
    let by_id: HashMap<&str, EntityKey> = ann
        .entities
        .iter()
        .map(|e| (e.id.as_str(), (e.label, e.spans.clone())))
        .collect();
    ann.relations
        .iter()
        .filter_map(|r| {
            let t = by_id.get(r.trigger.as_str())?.clone();
            let a = by_id.get(r.argument.as_str())?.clone();
            Some((r.kind, (r.kind, t, a)))
        })
        .collect()
}

fn mean_f<G>(cells: &BTreeMap<G, IaaCell>) -> Option<f64> {
    let used: Vec<f64> = cells
        .values()
        .filter(|c| c.in_a + c.in_b > 0)
        .map(IaaCell::f_measure)
        .collect();
    (!used.is_empty()).then(|| used.iter().sum::<f64>() / used.len() as f64)
}

/// Agreement between two annotators over the same documents.
pub fn iaa(
    a: &BTreeMap<String, DocumentAnnotation>,
    b: &BTreeMap<String, DocumentAnnotation>,
) -> Result<IaaReport, ScoreError> {
    check_keys(a, b)?;
    let mut entities: BTreeMap<SchemaLabel, IaaCell> = BTreeMap::new();
    let mut relations: BTreeMap<RelationKind, IaaCell> = BTreeMap::new();
    for (id, da) in a {
        let db = &b[id];
        for (g, c) in count_matches(&entity_keys(da), &entity_keys(db)) {
            entities.entry(g).or_default().add(c);
        }
        for (g, c) in count_matches(&relation_keys(da), &relation_keys(db)) {
            relations.entry(g).or_default().add(c);
        }
    }
    Ok(IaaReport {
        entity_f: mean_f(&entities),
        relation_f: mean_f(&relations),
        entities,
        relations,
    })
}
