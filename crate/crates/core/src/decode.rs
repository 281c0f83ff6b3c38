//! Decoding of generated sequences: a tolerant parser for the linearized
//! grammar, and alignment of every surface back to character offsets.
//!
//! Alignment rules:
//!
//! * a trigger takes the leftmost occurrence of its surface that no earlier
//!   trigger with the same label has taken;
//! * an argument (and a status anchor) takes the occurrence whose midpoint is
//!   closest to the trigger's midpoint, ties going to the leftmost. Arguments
//!   never consume occurrences.
//!
//! Surfaces match on Unicode scalars after collapsing whitespace runs on both
//! sides. In lenient mode, a surface with no strict match is retried with
//! case and accents folded (`é` → `e`), then with accented letters dropped
//! altogether, which recovers output from tokenizers that cannot emit them
//! (`cocane` for `cocaïne`).
//!
//! Model output is untrusted: nothing here fails. Every fragment that is
//! dropped is reported by exactly one [`DecodeIssue`].

use std::collections::{HashMap, HashSet};

use regex::Regex;
use serde::{Deserialize, Serialize};
use std::sync::OnceLock;
use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;

use crate::brat::{Document, DocumentAnnotation, EntityAnnotation, Span};
use crate::linearize::{NONE_TOKEN, SEP_TOKEN};
use crate::schema::{
    permits, RelationKind, SchemaLabel, SdohEvent, StatusValue, EventArg, EventStatus,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum IssueKind {
    MalformedOutput,
    UnknownLabel,
    UnalignedTrigger,
    UnalignedArgument,
    DuplicateExhausted,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecodeIssue {
    pub doc_id: String,
    pub kind: IssueKind,
    pub payload: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawStatus {
    pub value: StatusValue,
    pub surface: String,
}

/// A parsed but not yet aligned event.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawEvent {
    pub label: SchemaLabel,
    pub trigger: String,
    pub status: Option<RawStatus>,
    pub args: Vec<(RelationKind, String)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum MatchMode {
    #[default]
    Strict,
    Lenient,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Decoded {
    pub events: Vec<SdohEvent>,
    pub issues: Vec<DecodeIssue>,
}

/// Predictions file record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prediction {
    pub doc_id: String,
    pub generated: String,
}

fn marker_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\[([A-Za-z_]+)(?::([A-Za-z]+))?\]").expect("valid regex"))
}

enum Token<'a> {
    Marker {
        name: &'a str,
        value: Option<&'a str>,
        raw: &'a str,
    },
    Text(&'a str),
}

fn tokenize(s: &str) -> Vec<Token<'_>> {
    let mut out = Vec::new();
    let mut last = 0;
    for cap in marker_re().captures_iter(s) {
        let m = cap.get(0).expect("whole match");
        if m.start() > last {
            out.push(Token::Text(&s[last..m.start()]));
        }
        out.push(Token::Marker {
            name: cap.get(1).expect("name group").as_str(),
            value: cap.get(2).map(|v| v.as_str()),
            raw: m.as_str(),
        });
        last = m.end();
    }
    if last < s.len() {
        out.push(Token::Text(&s[last..]));
    }
    out
}

enum Slot {
    Status(StatusValue),
    Arg(RelationKind),
}

struct Builder {
    label: Option<SchemaLabel>,
    raw: String,
    trigger: String,
    slots: Vec<(Slot, String)>,
    /// Text following the last slot marker goes to the dropped fragment
    /// instead of a slot.
    in_dropped_slot: bool,
}

impl Builder {
    fn new(label: Option<SchemaLabel>, raw: &str) -> Builder {
        Builder {
            label,
            raw: raw.to_string(),
            trigger: String::new(),
            slots: Vec::new(),
            in_dropped_slot: false,
        }
    }
}

fn issue(kind: IssueKind, payload: impl Into<String>) -> DecodeIssue {
    DecodeIssue {
        doc_id: String::new(),
        kind,
        payload: payload.into().trim().to_string(),
    }
}

fn finish(b: Builder, events: &mut Vec<RawEvent>, issues: &mut Vec<DecodeIssue>) {
    let Some(label) = b.label else {
        issues.push(issue(IssueKind::UnknownLabel, b.raw));
        return;
    };
    let trigger = b.trigger.trim().to_string();
    if trigger.is_empty() {
        issues.push(issue(IssueKind::MalformedOutput, b.raw));
        return;
    }
    let mut status = None;
    let mut args = Vec::new();
    for (slot, surface) in b.slots {
        let surface = surface.trim().to_string();
        match slot {
            Slot::Status(value) => status = Some(RawStatus { value, surface }),
            Slot::Arg(kind) => args.push((kind, surface)),
        }
    }
    if label.is_substance() && status.is_none() {
        issues.push(issue(IssueKind::MalformedOutput, b.raw));
        return;
    }
    events.push(RawEvent {
        label,
        trigger,
        status,
        args,
    });
}

/// Parse generated text. Grammar-conforming events are kept, everything else
/// becomes an issue (with an empty `doc_id`).
pub fn parse_sequence(generated: &str) -> (Vec<RawEvent>, Vec<DecodeIssue>) {
    let mut events = Vec::new();
    let mut issues = Vec::new();
    if generated.trim() == NONE_TOKEN {
        return (events, issues);
    }
    let sep_name = &SEP_TOKEN[1..SEP_TOKEN.len() - 1];
    let none_name = &NONE_TOKEN[1..NONE_TOKEN.len() - 1];
    let mut current: Option<Builder> = None;
    // A slot being dropped: (issue kind, fragment).
    let mut dropped: Option<(IssueKind, String)> = None;

    for tok in tokenize(generated) {
        match tok {
            Token::Text(t) => {
                if let Some((_, frag)) = dropped.as_mut() {
                    frag.push_str(t);
                    continue;
                }
                match current.as_mut() {
                    Some(b) => {
                        b.raw.push_str(t);
                        if b.in_dropped_slot {
                            continue;
                        }
                        match b.slots.last_mut() {
                            Some((_, surface)) => surface.push_str(t),
                            None => b.trigger.push_str(t),
                        }
                    }
                    None if t.trim().is_empty() => {}
                    None => issues.push(issue(IssueKind::MalformedOutput, t)),
                }
            }
            Token::Marker { name, value, raw } => {
                if let Some((kind, frag)) = dropped.take() {
                    issues.push(issue(kind, frag));
                }
                if name == sep_name && value.is_none() {
                    if let Some(b) = current.take() {
                        finish(b, &mut events, &mut issues);
                    }
                    continue;
                }
                let label = name.parse::<SchemaLabel>().ok();
                let kind = name.parse::<RelationKind>().ok();
                if let Some(label) = label.filter(|l| l.is_trigger() && value.is_none()) {
                    if let Some(b) = current.take() {
                        finish(b, &mut events, &mut issues);
                    }
                    current = Some(Builder::new(Some(label), raw));
                    continue;
                }
                let Some(b) = current.as_mut() else {
                    if label.is_none() && kind.is_none() && name != none_name {
                        // unknown event label: keep collecting so the whole
                        // event is reported once
                        current = Some(Builder::new(None, raw));
                    } else {
                        dropped = Some((IssueKind::MalformedOutput, raw.to_string()));
                    }
                    continue;
                };
                if b.label.is_none() {
                    b.raw.push_str(raw);
                    b.in_dropped_slot = true;
                    continue;
                }
                let event_label = b.label.expect("checked above");
                let slot = match (label, kind, value) {
                    (Some(SchemaLabel::StatusTime), _, Some(v)) => v
                        .parse::<StatusValue>()
                        .ok()
                        .filter(|_| event_label.is_substance())
                        .filter(|_| {
                            !b.slots.iter().any(|(s, _)| matches!(s, Slot::Status(_)))
                        })
                        .map(Slot::Status)
                        .ok_or(IssueKind::MalformedOutput),
                    (_, Some(k), None) if k != RelationKind::Status => {
                        if permits(k, event_label) {
                            Ok(Slot::Arg(k))
                        } else {
                            Err(IssueKind::MalformedOutput)
                        }
                    }
                    (None, None, _) if name != none_name => Err(IssueKind::UnknownLabel),
                    _ => Err(IssueKind::MalformedOutput),
                };
                match slot {
                    Ok(slot) => {
                        b.raw.push_str(raw);
                        b.in_dropped_slot = false;
                        b.slots.push((slot, String::new()));
                    }
                    Err(kind) => {
                        b.in_dropped_slot = true;
                        dropped = Some((kind, raw.to_string()));
                    }
                }
            }
        }
    }
    if let Some((kind, frag)) = dropped.take() {
        issues.push(issue(kind, frag));
    }
    if let Some(b) = current.take() {
        finish(b, &mut events, &mut issues);
    }

    // Argument slots with no surface carry nothing to align.
    for ev in &mut events {
        ev.args.retain(|(kind, surface)| {
            if surface.is_empty() {
                issues.push(issue(IssueKind::MalformedOutput, format!("[{kind}]")));
                false
            } else {
                true
            }
        });
    }
    (events, issues)
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Fold {
    Strict,
    Accents,
    DropAccented,
}

/// Text after folding, with the originating char index of every folded char.
struct Folded {
    chars: Vec<char>,
    origin: Vec<usize>,
}

fn fold_char(c: char, fold: Fold, out: &mut Vec<char>) {
    if fold == Fold::Strict {
        out.push(c);
        return;
    }
    if fold == Fold::DropAccented && !c.is_ascii() && c.is_alphabetic() {
        let base: Vec<char> = c.nfd().filter(|d| !is_combining_mark(*d)).collect();
        if base.iter().collect::<String>() != c.to_string() {
            return;
        }
    }
    for d in c.nfd().filter(|d| !is_combining_mark(*d)) {
        out.extend(d.to_lowercase());
    }
}

fn fold_text(text: &str, fold: Fold) -> Folded {
    let mut chars = Vec::with_capacity(text.len());
    let mut origin = Vec::with_capacity(text.len());
    let mut buf = Vec::new();
    for (i, c) in text.chars().enumerate() {
        if c.is_whitespace() {
            if chars.last() != Some(&' ') {
                chars.push(' ');
                origin.push(i);
            }
            continue;
        }
        buf.clear();
        fold_char(c, fold, &mut buf);
        for d in &buf {
            chars.push(*d);
            origin.push(i);
        }
    }
    Folded { chars, origin }
}

fn fold_needle(surface: &str, fold: Fold) -> Vec<char> {
    let f = fold_text(surface.trim(), fold);
    f.chars
}

struct Aligner<'a> {
    doc: &'a Document,
    passes: Vec<(Fold, Folded)>,
}

impl<'a> Aligner<'a> {
    fn new(doc: &'a Document, mode: MatchMode) -> Aligner<'a> {
        let folds: &[Fold] = match mode {
            MatchMode::Strict => &[Fold::Strict],
            MatchMode::Lenient => &[Fold::Strict, Fold::Accents, Fold::DropAccented],
        };
        let passes = folds
            .iter()
            .map(|f| (*f, fold_text(doc.text(), *f)))
            .collect();
        Aligner { doc, passes }
    }

    /// All occurrences (in start order) from the first pass that finds any.
    fn occurrences(&self, surface: &str) -> Vec<Span> {
        for (fold, hay) in &self.passes {
            let needle = fold_needle(surface, *fold);
            if needle.is_empty() || needle.len() > hay.chars.len() {
                continue;
            }
            let spans: Vec<Span> = hay
                .chars
                .windows(needle.len())
                .enumerate()
                .filter(|(_, w)| *w == needle.as_slice())
                .filter_map(|(i, _)| {
                    Span::new(hay.origin[i], hay.origin[i + needle.len() - 1] + 1)
                })
                .collect();
            let mut spans = spans;
            spans.dedup();
            if !spans.is_empty() {
                return spans;
            }
        }
        Vec::new()
    }

    fn nearest(&self, surface: &str, anchor: Span) -> Option<Span> {
        let mid = (anchor.start + anchor.end) as i64;
        self.occurrences(surface)
            .into_iter()
            .min_by_key(|s| (((s.start + s.end) as i64 - mid).abs(), s.start))
    }

    fn entity(&self, id: usize, label: SchemaLabel, span: Span) -> EntityAnnotation {
        EntityAnnotation {
            id: format!("T{id}"),
            label,
            spans: vec![span],
            surface: self.doc.surface(&[span]).expect("span from the document"),
        }
    }
}

/// Resolve raw events to offsets in `doc`. Output events are sorted by
/// trigger start; issues carry `doc.id`.
pub fn align(doc: &Document, raw: &[RawEvent], mode: MatchMode) -> Decoded {
    let aligner = Aligner::new(doc, mode);
    let mut consumed: HashMap<SchemaLabel, HashSet<Span>> = HashMap::new();
    let mut issues = Vec::new();
    let mut events = Vec::new();
    let mut next_id = 1;
    let new_issue = |kind, payload: &str| DecodeIssue {
        doc_id: doc.id.clone(),
        kind,
        payload: payload.to_string(),
    };

    for ev in raw {
        let occurrences = aligner.occurrences(&ev.trigger);
        if occurrences.is_empty() {
            issues.push(new_issue(IssueKind::UnalignedTrigger, &ev.trigger));
            continue;
        }
        let taken = consumed.entry(ev.label).or_default();
        let Some(span) = occurrences.into_iter().find(|s| !taken.contains(s)) else {
            issues.push(new_issue(IssueKind::DuplicateExhausted, &ev.trigger));
            continue;
        };
        taken.insert(span);
        let trigger = aligner.entity(next_id, ev.label, span);
        next_id += 1;

        let status = ev.status.as_ref().map(|st| {
            let anchor = aligner.nearest(&st.surface, span).map(|s| {
                let e = aligner.entity(next_id, SchemaLabel::StatusTime, s);
                next_id += 1;
                e
            });
            if anchor.is_none() {
                issues.push(new_issue(IssueKind::UnalignedArgument, &st.surface));
            }
            EventStatus {
                value: st.value,
                anchor,
            }
        });

        let mut args = Vec::new();
        for (kind, surface) in &ev.args {
            match aligner.nearest(surface, span) {
                Some(s) => {
                    args.push(EventArg {
                        kind: *kind,
                        entity: aligner.entity(next_id, kind.argument_label(), s),
                    });
                    next_id += 1;
                }
                None => issues.push(new_issue(IssueKind::UnalignedArgument, surface)),
            }
        }
        args.sort_by_key(|a| (a.entity.start(), a.entity.end(), a.kind));
        events.push(SdohEvent {
            trigger,
            status,
            args,
        });
    }
    events.sort_by_key(|e| (e.trigger.start(), e.trigger.end()));
    Decoded { events, issues }
}

/// Parse and align one generated sequence against its source document.
pub fn decode(doc: &Document, generated: &str, mode: MatchMode) -> Decoded {
    let (raw, mut parse_issues) = parse_sequence(generated);
    for i in &mut parse_issues {
        i.doc_id = doc.id.clone();
    }
    let mut decoded = align(doc, &raw, mode);
    parse_issues.append(&mut decoded.issues);
    decoded.issues = parse_issues;
    decoded
}

/// Decode against a window of `doc` (e.g. the section the model saw),
/// reporting offsets in the full document.
pub fn decode_in_window(doc: &Document, window: Span, generated: &str, mode: MatchMode) -> Decoded {
    let Some(sub) = doc.window(window) else {
        return decode(doc, generated, mode);
    };
    let mut decoded = decode(&sub, generated, mode);
    let by = window.start;
    for ev in &mut decoded.events {
        ev.trigger = ev.trigger.shifted(by);
        if let Some(a) = ev.status.as_mut().and_then(|s| s.anchor.as_mut()) {
            *a = a.shifted(by);
        }
        for arg in &mut ev.args {
            arg.entity = arg.entity.shifted(by);
        }
    }
    decoded
}

/// Convert events into standoff annotations. Shared argument entities are
/// written once. A status whose StatusTime surface could not be aligned is
/// anchored on the trigger span so the value is not lost.
pub fn events_to_annotation(doc: &Document, events: &[SdohEvent]) -> DocumentAnnotation {
    let mut ann = DocumentAnnotation::new(doc.clone());
    for ev in events {
        let Some(tid) = ann.add_entity(ev.trigger.label, ev.trigger.spans.clone()) else {
            continue;
        };
        if let Some(st) = &ev.status {
            let spans = st
                .anchor
                .as_ref()
                .map_or_else(|| ev.trigger.spans.clone(), |a| a.spans.clone());
            if let Some(sid) = ann.add_entity(SchemaLabel::StatusTime, spans) {
                ann.add_relation(RelationKind::Status, &tid, &sid);
                ann.add_attribute(&sid, st.value);
            }
        }
        for arg in &ev.args {
            if let Some(aid) = ann.add_entity(arg.entity.label, arg.entity.spans.clone()) {
                ann.add_relation(arg.kind, &tid, &aid);
            }
        }
    }
    ann
}
