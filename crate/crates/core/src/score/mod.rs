//! Two-level evaluation of extracted events.
//!
//! * Level 1 checks, per document, which valued labels are present
//!   (`Living_Alone`, `Housing_No`, ...) with substance events turned into
//!   composite labels such as `Tobacco_StatusTime:current`.
//! * Level 2 scores whole events as slot fills. Two events are equivalent
//!   when labels, statuses and trigger spans agree and their arguments pair
//!   up one-to-one with equal kinds and matching spans. Spans match exactly
//!   or by sharing at least one character, depending on [`MatchCriterion`].
//!
//! Gold and predicted events are paired per document and category with a
//! maximum one-to-one matching, so TP counts never depend on event order.

pub mod iaa;
pub mod matching;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::{Add, AddAssign};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::brat::EntityAnnotation;
use crate::par;
use crate::schema::{category_of, SchemaLabel, SdohCategory, SdohEvent, StatusValue};

pub use iaa::{iaa, IaaCell, IaaReport};
pub use matching::max_matching;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ScoreError {
    #[error("document ids differ: only in gold {only_gold:?}, only in pred {only_pred:?}")]
    KeyMismatch {
        only_gold: Vec<String>,
        only_pred: Vec<String>,
    },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatchCriterion {
    Exact,
    Overlap,
}

impl fmt::Display for MatchCriterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MatchCriterion::Exact => "exact",
            MatchCriterion::Overlap => "overlap",
        })
    }
}

/// How level 2 hands out credit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level2Mode {
    /// All-or-nothing per event.
    #[default]
    Event,
    /// Each trigger, status and argument slot counted on its own, after
    /// pairing triggers by label and span.
    Argument,
}

/// TP/FP/FN counts; precision, recall and F1 derive from them with 0 for
/// any zero denominator.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "CellRecord", from = "CellRecord")]
pub struct ScoreCell {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
}

impl ScoreCell {
    pub fn new(tp: usize, fp: usize, fn_: usize) -> ScoreCell {
        ScoreCell { tp, fp, fn_ }
    }

    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    pub fn f1(&self) -> f64 {
        let (p, r) = (self.precision(), self.recall());
        if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        }
    }

    pub fn is_empty(&self) -> bool {
        self.tp + self.fp + self.fn_ == 0
    }

    /// The same cell with gold and prediction roles exchanged.
    pub fn swapped(&self) -> ScoreCell {
        ScoreCell::new(self.tp, self.fn_, self.fp)
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl Add for ScoreCell {
    type Output = ScoreCell;

    fn add(self, o: ScoreCell) -> ScoreCell {
        ScoreCell::new(self.tp + o.tp, self.fp + o.fp, self.fn_ + o.fn_)
    }
}

impl AddAssign for ScoreCell {
    fn add_assign(&mut self, o: ScoreCell) {
        *self = *self + o;
    }
}

#[derive(Serialize, Deserialize)]
struct CellRecord {
    tp: usize,
    fp: usize,
    #[serde(rename = "fn")]
    fn_: usize,
    #[serde(default)]
    precision: f64,
    #[serde(default)]
    recall: f64,
    #[serde(default)]
    f1: f64,
}

impl From<ScoreCell> for CellRecord {
    fn from(c: ScoreCell) -> CellRecord {
        CellRecord {
            tp: c.tp,
            fp: c.fp,
            fn_: c.fn_,
            precision: c.precision(),
            recall: c.recall(),
            f1: c.f1(),
        }
    }
}

impl From<CellRecord> for ScoreCell {
    fn from(r: CellRecord) -> ScoreCell {
        ScoreCell::new(r.tp, r.fp, r.fn_)
    }
}

/// A level-1 label: a valued entity label, or a substance label combined
/// with its status.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Level1Label {
    Valued(SchemaLabel),
    Substance(SchemaLabel, StatusValue),
}

impl Level1Label {
    pub fn all() -> Vec<Level1Label> {
        let mut out: Vec<Level1Label> = SchemaLabel::ALL
            .iter()
            .copied()
            .filter(|l| l.is_valued())
            .map(Level1Label::Valued)
            .collect();
        for sub in [SchemaLabel::Alcohol, SchemaLabel::Tobacco, SchemaLabel::Drug] {
            for v in StatusValue::ALL {
                out.push(Level1Label::Substance(sub, *v));
            }
        }
        out
    }

    pub fn category(&self) -> SdohCategory {
        let label = match self {
            Level1Label::Valued(l) | Level1Label::Substance(l, _) => *l,
        };
        category_of(label).expect("level-1 labels are triggers")
    }

    /// Categories that have level-1 labels.
    pub fn categories() -> Vec<SdohCategory> {
        let set: BTreeSet<SdohCategory> = Level1Label::all().iter().map(|l| l.category()).collect();
        SdohCategory::ALL
            .iter()
            .copied()
            .filter(|c| set.contains(c))
            .collect()
    }
}

impl fmt::Display for Level1Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Level1Label::Valued(l) => write!(f, "{l}"),
            Level1Label::Substance(l, v) => write!(f, "{l}_StatusTime:{v}"),
        }
    }
}

impl FromStr for Level1Label {
    type Err = ScoreError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Level1Label::all()
            .into_iter()
            .find(|l| l.to_string() == s)
            .ok_or_else(|| ScoreError::InvalidInput(format!("unknown level-1 label {s:?}")))
    }
}

/// Level-1 labels present in a document's events.
pub fn level1_labels(events: &[SdohEvent]) -> Result<BTreeSet<Level1Label>, ScoreError> {
    let mut out = BTreeSet::new();
    for ev in events {
        let label = ev.trigger.label;
        if label.is_substance() {
            let status = ev.status.as_ref().ok_or_else(|| {
                ScoreError::InvalidInput(format!(
                    "{label} event {} has no status",
                    ev.trigger.id
                ))
            })?;
            out.insert(Level1Label::Substance(label, status.value));
        } else if label.is_valued() {
            out.insert(Level1Label::Valued(label));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub level: u8,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub criterion: Option<MatchCriterion>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<Level2Mode>,
    /// Per-label cells (level 1 only).
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub labels: BTreeMap<String, ScoreCell>,
    pub categories: BTreeMap<SdohCategory, ScoreCell>,
    /// Categories entering the macro averages: those with at least one gold
    /// or predicted item.
    pub macro_categories: Vec<SdohCategory>,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
}

impl ScoreReport {
    fn from_categories(
        level: u8,
        criterion: Option<MatchCriterion>,
        mode: Option<Level2Mode>,
        labels: BTreeMap<String, ScoreCell>,
        categories: BTreeMap<SdohCategory, ScoreCell>,
    ) -> ScoreReport {
        let included: Vec<SdohCategory> = categories
            .iter()
            .filter(|(_, c)| !c.is_empty())
            .map(|(k, _)| *k)
            .collect();
        let mean = |f: fn(&ScoreCell) -> f64| {
            if included.is_empty() {
                0.0
            } else {
                included.iter().map(|k| f(&categories[k])).sum::<f64>() / included.len() as f64
            }
        };
        ScoreReport {
            level,
            criterion,
            mode,
            macro_precision: mean(ScoreCell::precision),
            macro_recall: mean(ScoreCell::recall),
            macro_f1: mean(ScoreCell::f1),
            labels,
            categories,
            macro_categories: included,
        }
    }

    /// Sum of all category cells.
    pub fn total(&self) -> ScoreCell {
        self.categories.values().fold(ScoreCell::default(), |a, c| a + *c)
    }
}

fn check_keys<A, B>(gold: &BTreeMap<String, A>, pred: &BTreeMap<String, B>) -> Result<(), ScoreError> {
    let only_gold: Vec<String> = gold.keys().filter(|k| !pred.contains_key(*k)).cloned().collect();
    let only_pred: Vec<String> = pred.keys().filter(|k| !gold.contains_key(*k)).cloned().collect();
    if only_gold.is_empty() && only_pred.is_empty() {
        Ok(())
    } else {
        Err(ScoreError::KeyMismatch {
            only_gold,
            only_pred,
        })
    }
}

pub type LabelCorpus = BTreeMap<String, BTreeSet<Level1Label>>;
pub type EventCorpus = BTreeMap<String, Vec<SdohEvent>>;

/// Level-1 scoring: document-level presence of each label. Category cells
/// pool the counts of their labels.
pub fn score_level1(gold: &LabelCorpus, pred: &LabelCorpus) -> Result<ScoreReport, ScoreError> {
    check_keys(gold, pred)?;
    let all = Level1Label::all();
    let mut per_label: BTreeMap<Level1Label, ScoreCell> =
        all.iter().map(|l| (*l, ScoreCell::default())).collect();
    for (doc, g) in gold {
        let p = &pred[doc];
        for l in g.union(p) {
            let cell = per_label.entry(*l).or_default();
            match (g.contains(l), p.contains(l)) {
                (true, true) => cell.tp += 1,
                (false, true) => cell.fp += 1,
                (true, false) => cell.fn_ += 1,
                (false, false) => unreachable!(),
            }
        }
    }
    let mut categories: BTreeMap<SdohCategory, ScoreCell> = Level1Label::categories()
        .into_iter()
        .map(|c| (c, ScoreCell::default()))
        .collect();
    for (l, cell) in &per_label {
        *categories.entry(l.category()).or_default() += *cell;
    }
    let labels = per_label
        .into_iter()
        .map(|(l, c)| (l.to_string(), c))
        .collect();
    Ok(ScoreReport::from_categories(1, None, None, labels, categories))
}

/// Convenience: level-1 label sets for an event corpus.
pub fn label_corpus(events: &EventCorpus) -> Result<LabelCorpus, ScoreError> {
    events
        .iter()
        .map(|(k, ev)| Ok((k.clone(), level1_labels(ev)?)))
        .collect()
}

pub fn spans_match(a: &EntityAnnotation, b: &EntityAnnotation, c: MatchCriterion) -> bool {
    match c {
        MatchCriterion::Exact => a.spans == b.spans,
        MatchCriterion::Overlap => a.overlaps(b),
    }
}

/// Slot-filling equivalence of two events.
pub fn equivalent(a: &SdohEvent, b: &SdohEvent, c: MatchCriterion) -> bool {
    if a.trigger.label != b.trigger.label || !spans_match(&a.trigger, &b.trigger, c) {
        return false;
    }
    let status_ok = match (&a.status, &b.status) {
        (None, None) => true,
        (Some(x), Some(y)) => {
            x.value == y.value
                && match (&x.anchor, &y.anchor) {
                    (None, None) => true,
                    (Some(p), Some(q)) => spans_match(p, q, c),
                    _ => false,
                }
        }
        _ => false,
    };
    if !status_ok || a.args.len() != b.args.len() {
        return false;
    }
    let m = max_matching(a.args.len(), b.args.len(), |i, j| {
        a.args[i].kind == b.args[j].kind && spans_match(&a.args[i].entity, &b.args[j].entity, c)
    });
    matching::matching_size(&m) == a.args.len()
}

fn by_category(events: &[SdohEvent]) -> BTreeMap<SdohCategory, Vec<&SdohEvent>> {
    let mut out: BTreeMap<SdohCategory, Vec<&SdohEvent>> = BTreeMap::new();
    for ev in events {
        out.entry(ev.category()).or_default().push(ev);
    }
    for v in out.values_mut() {
        v.sort_by_key(|e| (e.trigger.start(), e.trigger.end()));
    }
    out
}

fn slots(ev: &SdohEvent) -> usize {
    1 + usize::from(ev.status.is_some()) + ev.args.len()
}

fn argument_credit(g: &SdohEvent, p: &SdohEvent, c: MatchCriterion) -> ScoreCell {
    let mut cell = ScoreCell::new(1, 0, 0);
    match (&g.status, &p.status) {
        (Some(x), Some(y)) => {
            let anchors = match (&x.anchor, &y.anchor) {
                (Some(a), Some(b)) => spans_match(a, b, c),
                (None, None) => true,
                _ => false,
            };
            if x.value == y.value && anchors {
                cell.tp += 1;
            } else {
                cell.fp += 1;
                cell.fn_ += 1;
            }
        }
        (Some(_), None) => cell.fn_ += 1,
        (None, Some(_)) => cell.fp += 1,
        (None, None) => {}
    }
    let m = max_matching(g.args.len(), p.args.len(), |i, j| {
        g.args[i].kind == p.args[j].kind && spans_match(&g.args[i].entity, &p.args[j].entity, c)
    });
    let hits = matching::matching_size(&m);
    cell.tp += hits;
    cell.fn_ += g.args.len() - hits;
    cell.fp += p.args.len() - hits;
    cell
}

/// Category cells for one document.
pub fn document_cells(
    gold: &[SdohEvent],
    pred: &[SdohEvent],
    c: MatchCriterion,
    mode: Level2Mode,
) -> BTreeMap<SdohCategory, ScoreCell> {
    let g = by_category(gold);
    let p = by_category(pred);
    let cats: BTreeSet<SdohCategory> = g.keys().chain(p.keys()).copied().collect();
    let empty = Vec::new();
    cats.into_iter()
        .map(|cat| {
            let gs = g.get(&cat).unwrap_or(&empty);
            let ps = p.get(&cat).unwrap_or(&empty);
            let cell = match mode {
                Level2Mode::Event => {
                    let m = max_matching(gs.len(), ps.len(), |i, j| equivalent(gs[i], ps[j], c));
                    let tp = matching::matching_size(&m);
                    ScoreCell::new(tp, ps.len() - tp, gs.len() - tp)
                }
                Level2Mode::Argument => {
                    let m = max_matching(gs.len(), ps.len(), |i, j| {
                        gs[i].trigger.label == ps[j].trigger.label
                            && spans_match(&gs[i].trigger, &ps[j].trigger, c)
                    });
                    let mut cell = ScoreCell::default();
                    let mut claimed = vec![false; ps.len()];
                    for (i, partner) in m.iter().enumerate() {
                        match partner {
                            Some(j) => {
                                claimed[*j] = true;
                                cell += argument_credit(gs[i], ps[*j], c);
                            }
                            None => cell.fn_ += slots(gs[i]),
                        }
                    }
                    for (j, taken) in claimed.iter().enumerate() {
                        if !taken {
                            cell.fp += slots(ps[j]);
                        }
                    }
                    cell
                }
            };
            (cat, cell)
        })
        .collect()
}

/// Level-2 scoring over a corpus.
pub fn score_level2(
    gold: &EventCorpus,
    pred: &EventCorpus,
    c: MatchCriterion,
    mode: Level2Mode,
) -> Result<ScoreReport, ScoreError> {
    check_keys(gold, pred)?;
    let docs: Vec<(&Vec<SdohEvent>, &Vec<SdohEvent>)> =
        gold.iter().map(|(k, g)| (g, &pred[k])).collect();
    let per_doc = par::map(&docs, |(g, p)| document_cells(g, p, c, mode));
    let mut categories: BTreeMap<SdohCategory, ScoreCell> = SdohCategory::ALL
        .iter()
        .map(|c| (*c, ScoreCell::default()))
        .collect();
    for cells in per_doc {
        for (cat, cell) in cells {
            *categories.entry(cat).or_default() += cell;
        }
    }
    Ok(ScoreReport::from_categories(
        2,
        Some(c),
        Some(mode),
        BTreeMap::new(),
        categories,
    ))
}

fn fmt4(x: f64) -> String {
    format!("{x:.4}")
}

/// Rows laid out as category, then P/R/F1 for level 1, level-2 exact and
/// level-2 overlap. Missing reports and categories outside a report's macro
/// set render as `-`. The last row holds the macro averages.
pub fn category_table(
    level1: Option<&ScoreReport>,
    exact: Option<&ScoreReport>,
    overlap: Option<&ScoreReport>,
) -> Vec<Vec<String>> {
    let mut rows = vec![vec![
        "category".to_string(),
        "l1_precision".into(),
        "l1_recall".into(),
        "l1_f1".into(),
        "exact_precision".into(),
        "exact_recall".into(),
        "exact_f1".into(),
        "overlap_precision".into(),
        "overlap_recall".into(),
        "overlap_f1".into(),
    ]];
    let cols = |r: Option<&ScoreReport>, cat: SdohCategory| -> Vec<String> {
        match r {
            Some(r) if r.macro_categories.contains(&cat) => {
                let c = r.categories[&cat];
                vec![fmt4(c.precision()), fmt4(c.recall()), fmt4(c.f1())]
            }
            _ => vec!["-".to_string(); 3],
        }
    };
    for cat in SdohCategory::ALL {
        let mut row = vec![cat.to_string()];
        row.extend(cols(level1, *cat));
        row.extend(cols(exact, *cat));
        row.extend(cols(overlap, *cat));
        rows.push(row);
    }
    let mut macro_row = vec!["macro".to_string()];
    for r in [level1, exact, overlap] {
        match r {
            Some(r) => macro_row.extend([
                fmt4(r.macro_precision),
                fmt4(r.macro_recall),
                fmt4(r.macro_f1),
            ]),
            None => macro_row.extend(vec!["-".to_string(); 3]),
        }
    }
    rows.push(macro_row);
    rows
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::brat::{parse_standoff, Document};
    use crate::schema::to_events;

    const FIG2: &str = "Tabagisme actif à 17 cigarettes par jour";

    fn events(text: &str, ann: &str) -> Vec<SdohEvent> {
        to_events(&parse_standoff(&Document::new("d", text), ann).unwrap()).unwrap()
    }

    fn fig2_a() -> Vec<SdohEvent> {
        events(
            FIG2,
            "T1\tTobacco 0 9\tTabagisme\nT2\tStatusTime 10 15\tactif\nT3\tAmount 18 31\t17 cigarettes\n\
             T4\tFrequency 32 40\tpar jour\nR1\tStatus Arg1:T1 Arg2:T2\nR2\tAmount Arg1:T1 Arg2:T3\n\
             R3\tFrequency Arg1:T1 Arg2:T4\nA1\tStatusValue T2 current\n",
        )
    }

    fn fig2_b() -> Vec<SdohEvent> {
        events(
            FIG2,
            "T1\tTobacco 0 15\tTabagisme actif\nT2\tStatusTime 10 15\tactif\nT3\tAmount 18 20\t17\n\
             T4\tFrequency 36 40\tjour\nR1\tStatus Arg1:T1 Arg2:T2\nR2\tAmount Arg1:T1 Arg2:T3\n\
             R3\tFrequency Arg1:T1 Arg2:T4\nA1\tStatusValue T2 current\n",
        )
    }

    fn corpus(ev: Vec<SdohEvent>) -> EventCorpus {
        [("d".to_string(), ev)].into_iter().collect()
    }

    #[test]
    fn cell_arithmetic() {
        let c = ScoreCell::new(3, 1, 2);
        assert_eq!(c.precision(), 0.75);
        assert_eq!(c.recall(), 0.6);
        assert!((c.f1() - 2.0 * 0.75 * 0.6 / 1.35).abs() < 1e-12);
        let z = ScoreCell::new(0, 0, 4);
        assert_eq!((z.precision(), z.recall(), z.f1()), (0.0, 0.0, 0.0));
        let json = serde_json::to_value(c).unwrap();
        assert_eq!(json["fn"], 2);
        assert_eq!(json["precision"], 0.75);
        let back: ScoreCell = serde_json::from_value(json).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn level1_label_inventory() {
        let all = Level1Label::all();
        assert_eq!(all.len(), 26);
        assert_eq!(
            all.iter().filter(|l| matches!(l, Level1Label::Substance(..))).count(),
            9
        );
        assert_eq!(Level1Label::categories().len(), 9);
        for l in &all {
            assert_eq!(l.to_string().parse::<Level1Label>().unwrap(), *l);
        }
        assert_eq!(
            Level1Label::Substance(SchemaLabel::Tobacco, StatusValue::Current).to_string(),
            "Tobacco_StatusTime:current"
        );
    }

    #[test]
    fn level1_labels_of_events() {
        let set = level1_labels(&fig2_a()).unwrap();
        assert_eq!(
            set.into_iter().collect::<Vec<_>>(),
            vec![Level1Label::Substance(SchemaLabel::Tobacco, StatusValue::Current)]
        );
        let job = events("soudeur", "T1\tJob 0 7\tsoudeur\n");
        assert!(level1_labels(&job).unwrap().is_empty());
        assert!(level1_labels(&[]).unwrap().is_empty());

        let mut broken = fig2_a();
        broken[0].status = None;
        assert!(matches!(level1_labels(&broken), Err(ScoreError::InvalidInput(_))));
    }

    #[test]
    fn level1_identical_and_empty_predictions() {
        let g: LabelCorpus = [
            ("a".to_string(), [Level1Label::Valued(SchemaLabel::LivingAlone)].into()),
            (
                "b".to_string(),
                [
                    Level1Label::Valued(SchemaLabel::HousingYes),
                    Level1Label::Substance(SchemaLabel::Drug, StatusValue::Past),
                ]
                .into(),
            ),
        ]
        .into();
        let r = score_level1(&g, &g).unwrap();
        assert_eq!((r.macro_precision, r.macro_recall, r.macro_f1), (1.0, 1.0, 1.0));
        assert_eq!(r.macro_categories.len(), 3);
        for c in r.categories.values().filter(|c| !c.is_empty()) {
            assert_eq!(c.f1(), 1.0);
        }

        let empty: LabelCorpus = g.keys().map(|k| (k.clone(), BTreeSet::new())).collect();
        let r = score_level1(&g, &empty).unwrap();
        assert_eq!((r.macro_precision, r.macro_recall, r.macro_f1), (0.0, 0.0, 0.0));
        assert_eq!(r.total(), ScoreCell::new(0, 0, 3));
    }

    #[test]
    fn key_mismatch() {
        let g: LabelCorpus = [("a".to_string(), BTreeSet::new())].into();
        let p: LabelCorpus = [("b".to_string(), BTreeSet::new())].into();
        assert_eq!(
            score_level1(&g, &p).unwrap_err(),
            ScoreError::KeyMismatch {
                only_gold: vec!["a".into()],
                only_pred: vec!["b".into()]
            }
        );
        let ge: EventCorpus = [("a".to_string(), vec![])].into();
        assert!(score_level2(&ge, &EventCorpus::new(), MatchCriterion::Exact, Level2Mode::Event).is_err());
    }

    #[test]
    fn fig2_variants_equivalent_under_overlap_only() {
        let (a, b) = (&fig2_a()[0], &fig2_b()[0]);
        assert!(equivalent(a, b, MatchCriterion::Overlap));
        assert!(equivalent(b, a, MatchCriterion::Overlap));
        assert!(!equivalent(a, b, MatchCriterion::Exact));
        assert!(equivalent(a, a, MatchCriterion::Exact));

        let r = score_level2(&corpus(fig2_a()), &corpus(fig2_b()), MatchCriterion::Overlap, Level2Mode::Event).unwrap();
        assert_eq!(r.categories[&SdohCategory::Tobacco], ScoreCell::new(1, 0, 0));
        let r = score_level2(&corpus(fig2_a()), &corpus(fig2_b()), MatchCriterion::Exact, Level2Mode::Event).unwrap();
        assert_eq!(r.categories[&SdohCategory::Tobacco], ScoreCell::new(0, 1, 1));
    }

    #[test]
    fn extra_argument_breaks_equivalence() {
        let a = fig2_a().remove(0);
        let mut b = a.clone();
        b.args.pop();
        for c in [MatchCriterion::Exact, MatchCriterion::Overlap] {
            assert!(!equivalent(&a, &b, c));
        }
    }

    #[test]
    fn shifted_amount() {
        let gold = fig2_a();
        let mut pred = gold.clone();
        let amount = &mut pred[0].args[0].entity;
        amount.spans = vec![crate::brat::Span::new(19, 31).unwrap()];
        let overlap = score_level2(&corpus(gold.clone()), &corpus(pred.clone()), MatchCriterion::Overlap, Level2Mode::Event).unwrap();
        assert_eq!(overlap.total(), ScoreCell::new(1, 0, 0));
        let exact = score_level2(&corpus(gold), &corpus(pred), MatchCriterion::Exact, Level2Mode::Event).unwrap();
        assert_eq!(exact.total(), ScoreCell::new(0, 1, 1));
    }

    #[test]
    fn status_value_must_agree() {
        let a = fig2_a().remove(0);
        let mut b = a.clone();
        b.status.as_mut().unwrap().value = StatusValue::Past;
        assert!(!equivalent(&a, &b, MatchCriterion::Overlap));
    }

    #[test]
    fn argument_level_credit() {
        let gold = fig2_a();
        let mut pred = gold.clone();
        pred[0].args.pop();
        pred[0].status.as_mut().unwrap().value = StatusValue::Past;
        let r = score_level2(&corpus(gold), &corpus(pred), MatchCriterion::Exact, Level2Mode::Argument).unwrap();
        // trigger + amount hit; status wrong (fp+fn); frequency missed (fn)
        assert_eq!(r.categories[&SdohCategory::Tobacco], ScoreCell::new(2, 1, 2));
        assert_eq!(r.mode, Some(Level2Mode::Argument));
    }

    #[test]
    fn macro_excludes_empty_categories() {
        let gold = fig2_a();
        let r = score_level2(&corpus(gold.clone()), &corpus(gold), MatchCriterion::Exact, Level2Mode::Event).unwrap();
        assert_eq!(r.macro_categories, vec![SdohCategory::Tobacco]);
        assert_eq!(r.macro_f1, 1.0);
        let table = category_table(None, Some(&r), None);
        assert_eq!(table.len(), 16);
        let tobacco = table.iter().find(|row| row[0] == "Tobacco").unwrap();
        assert_eq!(&tobacco[4..7], &["1.0000", "1.0000", "1.0000"]);
        assert_eq!(tobacco[1], "-");
        assert_eq!(table.last().unwrap()[6], "1.0000");
    }
}
