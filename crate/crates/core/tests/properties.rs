use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;

use sdoh_core::corpus::{split, DEFAULT_RATIOS};
use sdoh_core::score::{equivalent, score_level1, score_level2, EventCorpus, LabelCorpus, Level1Label, Level2Mode, MatchCriterion};
use sdoh_core::zcode::{completeness_from_categories, CompletenessReport};
use sdoh_core::{
    parse_standoff, validate, Document, DocumentAnnotation, EntityAnnotation, EventArg, EventStatus,
    RelationKind, SchemaLabel, SdohCategory, SdohEvent, Span, StatusValue,
};

fn span() -> impl Strategy<Value = Span> {
    (0usize..10, 1usize..4).prop_map(|(s, l)| Span::new(s, s + l).unwrap())
}

fn entity(label: SchemaLabel, span: Span) -> EntityAnnotation {
    EntityAnnotation {
        id: "T0".into(),
        label,
        spans: vec![span],
        surface: "x".into(),
    }
}

fn event() -> impl Strategy<Value = SdohEvent> {
    let label = prop::sample::select(vec![SchemaLabel::Tobacco, SchemaLabel::LivingAlone, SchemaLabel::DescendantsYes]);
    (label, span(), span(), 0usize..3, prop::collection::vec(span(), 0..3)).prop_map(|(label, t, st, v, args)| {
        let kind = if label == SchemaLabel::LivingAlone {
            RelationKind::History
        } else {
            RelationKind::Amount
        };
        SdohEvent {
            trigger: entity(label, t),
            status: label.is_substance().then(|| EventStatus {
                value: StatusValue::ALL[v],
                anchor: Some(entity(SchemaLabel::StatusTime, st)),
            }),
            args: args
                .into_iter()
                .map(|s| EventArg {
                    kind,
                    entity: entity(kind.argument_label(), s),
                })
                .collect(),
        }
    })
}

fn event_corpus() -> impl Strategy<Value = EventCorpus> {
    prop::collection::vec(prop::collection::vec(event(), 0..5), 1..5)
        .prop_map(|docs| docs.into_iter().enumerate().map(|(i, d)| (format!("d{i}"), d)).collect())
}

fn label_corpus() -> impl Strategy<Value = (LabelCorpus, LabelCorpus)> {
    let n = Level1Label::all().len();
    prop::collection::vec((prop::collection::vec(any::<bool>(), n), prop::collection::vec(any::<bool>(), n)), 1..8)
        .prop_map(|docs| {
            let all = Level1Label::all();
            let pick = |mask: &[bool]| -> BTreeSet<Level1Label> {
                all.iter().zip(mask).filter(|(_, m)| **m).map(|(l, _)| *l).collect()
            };
            let mut g = LabelCorpus::new();
            let mut p = LabelCorpus::new();
            for (i, (a, b)) in docs.iter().enumerate() {
                g.insert(format!("d{i}"), pick(a));
                p.insert(format!("d{i}"), pick(b));
            }
            (g, p)
        })
}

proptest! {
    #[test]
    fn swapping_gold_and_pred_swaps_p_and_r((g, p) in label_corpus()) {
        let a = score_level1(&g, &p).unwrap();
        let b = score_level1(&p, &g).unwrap();
        prop_assert_eq!(a.macro_precision, b.macro_recall);
        prop_assert_eq!(a.macro_recall, b.macro_precision);
        for (cat, cell) in &a.categories {
            prop_assert_eq!(cell.swapped(), b.categories[cat]);
        }
    }

    #[test]
    fn level2_swap(g in event_corpus(), p in event_corpus()) {
        let p: EventCorpus = g.keys().zip(p.values().cloned().cycle()).map(|(k, v)| (k.clone(), v)).collect();
        for c in [MatchCriterion::Exact, MatchCriterion::Overlap] {
            let a = score_level2(&g, &p, c, Level2Mode::Event).unwrap();
            let b = score_level2(&p, &g, c, Level2Mode::Event).unwrap();
            prop_assert_eq!(a.total().swapped(), b.total());
        }
    }

    #[test]
    fn equivalence_reflexive_symmetric(a in event(), b in event()) {
        for c in [MatchCriterion::Exact, MatchCriterion::Overlap] {
            prop_assert!(equivalent(&a, &a, c));
            prop_assert_eq!(equivalent(&a, &b, c), equivalent(&b, &a, c));
        }
        if equivalent(&a, &b, MatchCriterion::Exact) {
            prop_assert!(equivalent(&a, &b, MatchCriterion::Overlap));
        }
    }

    #[test]
    fn validate_ignores_line_order(seed in any::<u64>()) {
        let text = "tabac actif, alcool sevré, vit seul";
        let lines = [
            "T1\tTobacco 0 5\ttabac",
            "T2\tStatusTime 6 11\tactif",
            "T3\tAlcohol 13 19\talcool",
            "T4\tLiving_Alone 27 35\tvit seul",
            "T5\tStatusTime 20 25\tsevré",
            "R1\tStatus Arg1:T1 Arg2:T2",
            "R2\tAmount Arg1:T4 Arg2:T2",
            "A1\tStatusValue T2 current",
            "A2\tStatusValue T5 past",
        ];
        let mut shuffled = lines.to_vec();
        let mut s = seed;
        for i in (1..shuffled.len()).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            shuffled.swap(i, (s >> 33) as usize % (i + 1));
        }
        let doc = Document::new("d", text);
        let a = validate(&parse_standoff(&doc, &lines.join("\n")).unwrap());
        let b = validate(&parse_standoff(&doc, &shuffled.join("\n")).unwrap());
        prop_assert!(!a.is_empty());
        prop_assert_eq!(a, b);
    }

    #[test]
    fn split_is_partition(n in 1usize..300, seed in any::<u64>()) {
        let ids: Vec<String> = (0..n).map(|i| format!("doc{i}")).collect();
        let parts = split(&ids, &DEFAULT_RATIOS, seed).unwrap();
        let all: Vec<&String> = parts.iter().flatten().collect();
        prop_assert_eq!(all.len(), n);
        let uniq: BTreeSet<&String> = all.into_iter().collect();
        prop_assert_eq!(uniq.len(), n);
    }

    #[test]
    fn zcode_report_ignores_patient_ids(
        rows in prop::collection::vec((prop::collection::btree_set(0usize..14, 0..3), prop::collection::btree_set(0usize..14, 0..3)), 0..40),
        salt in any::<u32>(),
    ) {
        let cats = |s: &BTreeSet<usize>| s.iter().map(|i| SdohCategory::ALL[*i]).collect::<BTreeSet<_>>();
        let build = |name: &dyn Fn(usize) -> String| {
            let t: BTreeMap<String, BTreeSet<SdohCategory>> = rows.iter().enumerate().map(|(i, (a, _))| (name(i), cats(a))).collect();
            let s: BTreeMap<String, BTreeSet<SdohCategory>> = rows.iter().enumerate().map(|(i, (_, b))| (name(i), cats(b))).collect();
            completeness_from_categories(&t, &s)
        };
        let a: CompletenessReport = build(&|i| format!("p{i}"));
        let b = build(&|i| format!("x{}-{}", salt, rows.len() - i));
        prop_assert!(a.overlap <= a.text_count.min(a.structured_count));
        prop_assert_eq!(a, b);
    }
}

#[test]
fn corpus_directory_round_trip() {
    use sdoh_core::corpus::{load_corpus, stats, write_corpus, Synthesizer};
    let dir = tempfile::tempdir().unwrap();
    let docs = Synthesizer::french().generate(20, 1).unwrap();
    write_corpus(dir.path(), &docs).unwrap();
    let back = load_corpus(dir.path()).unwrap();
    assert_eq!(back.len(), 20);
    let orig: BTreeMap<String, DocumentAnnotation> = docs.into_iter().map(|d| (d.doc.id.clone(), d)).collect();
    assert_eq!(back, orig);
    assert_eq!(stats(back.values()), stats(orig.values()));

    // a text without .ann loads with no annotations
    std::fs::write(dir.path().join("extra.txt"), "RAS").unwrap();
    assert!(load_corpus(dir.path()).unwrap()["extra"].entities.is_empty());

    // a bad .ann names its file
    std::fs::write(dir.path().join("extra.ann"), "T1\tTobacco 0 99\tRAS\n").unwrap();
    let err = load_corpus(dir.path()).unwrap_err().to_string();
    assert!(err.contains("extra.ann"), "{err}");
}
