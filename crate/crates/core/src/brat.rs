//! BRAT standoff annotations and the offset types shared by every module.
//!
//! Offsets count Unicode scalar values (`char`s), never bytes.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::schema::{RelationKind, SchemaLabel, StatusValue};

const BOM: char = '\u{feff}';

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BratError {
    #[error("line {line}: malformed line: {reason}")]
    MalformedLine { line: usize, reason: String },
    #[error("line {line}: span {start}..{end} exceeds text length {len}")]
    OffsetOutOfRange {
        line: usize,
        start: usize,
        end: usize,
        len: usize,
    },
    #[error("line {line}: recorded surface {recorded:?} does not match text {actual:?}")]
    SurfaceMismatch {
        line: usize,
        recorded: String,
        actual: String,
    },
    #[error("line {line}: reference to missing annotation {id}")]
    DanglingReference { line: usize, id: String },
    #[error("line {line}: duplicate annotation id {id}")]
    DuplicateId { line: usize, id: String },
}

impl BratError {
    pub fn line(&self) -> usize {
        match self {
            BratError::MalformedLine { line, .. }
            | BratError::OffsetOutOfRange { line, .. }
            | BratError::SurfaceMismatch { line, .. }
            | BratError::DanglingReference { line, .. }
            | BratError::DuplicateId { line, .. } => *line,
        }
    }
}

/// Half-open character range `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    /// `None` when `start >= end`.
    pub fn new(start: usize, end: usize) -> Option<Span> {
        (start < end).then_some(Span { start, end })
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start >= self.end
    }

    /// True when the spans share at least one character.
    pub fn overlaps(&self, other: &Span) -> bool {
        self.start < other.end && other.start < self.end
    }

    pub fn contains(&self, other: &Span) -> bool {
        self.start <= other.start && other.end <= self.end
    }

    pub fn shifted(&self, by: usize) -> Span {
        Span {
            start: self.start + by,
            end: self.end + by,
        }
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.start, self.end)
    }
}

/// A document identifier plus its raw text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub id: String,
    text: String,
    /// Byte offset of each char, plus a trailing `text.len()`.
    boundaries: Vec<usize>,
}

impl Document {
    /// A leading byte-order mark is dropped so it never shifts offsets.
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Document {
        let mut text = text.into();
        if text.starts_with(BOM) {
            text.drain(..BOM.len_utf8());
        }
        let mut boundaries: Vec<usize> = text.char_indices().map(|(i, _)| i).collect();
        boundaries.push(text.len());
        Document {
            id: id.into(),
            text,
            boundaries,
        }
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    /// Length in chars.
    pub fn char_len(&self) -> usize {
        self.boundaries.len() - 1
    }

    pub fn slice(&self, span: Span) -> Option<&str> {
        if span.is_empty() || span.end > self.char_len() {
            return None;
        }
        Some(&self.text[self.boundaries[span.start]..self.boundaries[span.end]])
    }

    /// Surface string for a list of fragments: slices joined by one space,
    /// with tabs and line breaks flattened to spaces.
    pub fn surface(&self, spans: &[Span]) -> Option<String> {
        let mut parts = Vec::with_capacity(spans.len());
        for s in spans {
            parts.push(self.slice(*s)?);
        }
        Some(flatten_surface(&parts.join(" ")))
    }

    /// A sub-document over `span`, with offsets relative to `span.start`.
    pub fn window(&self, span: Span) -> Option<Document> {
        self.slice(span).map(|t| Document::new(self.id.clone(), t))
    }
}

/// Replace characters that cannot appear inside a standoff line.
pub fn flatten_surface(s: &str) -> String {
    s.chars()
        .map(|c| if matches!(c, '\t' | '\n' | '\r') { ' ' } else { c })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EntityAnnotation {
    pub id: String,
    pub label: SchemaLabel,
    /// Sorted, non-overlapping fragments; at least one.
    pub spans: Vec<Span>,
    pub surface: String,
}

impl EntityAnnotation {
    pub fn start(&self) -> usize {
        self.spans[0].start
    }

    pub fn end(&self) -> usize {
        self.spans[self.spans.len() - 1].end
    }

    /// The smallest single span covering every fragment.
    pub fn extent(&self) -> Span {
        Span {
            start: self.start(),
            end: self.end(),
        }
    }

    pub fn overlaps(&self, other: &EntityAnnotation) -> bool {
        self.spans
            .iter()
            .any(|a| other.spans.iter().any(|b| a.overlaps(b)))
    }

    pub fn shifted(&self, by: usize) -> EntityAnnotation {
        EntityAnnotation {
            spans: self.spans.iter().map(|s| s.shifted(by)).collect(),
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RelationAnnotation {
    pub id: String,
    pub kind: RelationKind,
    /// Arg1 entity id.
    pub trigger: String,
    /// Arg2 entity id.
    pub argument: String,
}

/// A `StatusValue` attribute; the only attribute type in the scheme.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AttributeAnnotation {
    pub id: String,
    pub target: String,
    pub value: StatusValue,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DocumentAnnotation {
    pub doc: Document,
    pub entities: Vec<EntityAnnotation>,
    pub relations: Vec<RelationAnnotation>,
    pub attributes: Vec<AttributeAnnotation>,
    /// Event, normalization and note lines, kept verbatim.
    pub passthrough: Vec<String>,
}

impl DocumentAnnotation {
    pub fn new(doc: Document) -> DocumentAnnotation {
        DocumentAnnotation {
            doc,
            entities: Vec::new(),
            relations: Vec::new(),
            attributes: Vec::new(),
            passthrough: Vec::new(),
        }
    }

    pub fn entity(&self, id: &str) -> Option<&EntityAnnotation> {
        self.entities.iter().find(|e| e.id == id)
    }

    /// Add an entity with the next free `T` id, reusing an existing entity
    /// with the same label and spans. Returns the id.
    pub fn add_entity(&mut self, label: SchemaLabel, spans: Vec<Span>) -> Option<String> {
        if let Some(e) = self
            .entities
            .iter()
            .find(|e| e.label == label && e.spans == spans)
        {
            return Some(e.id.clone());
        }
        if spans.is_empty() || spans.windows(2).any(|w| w[0].end > w[1].start) {
            return None;
        }
        let surface = self.doc.surface(&spans)?;
        let id = format!("T{}", next_number(self.entities.iter().map(|e| e.id.as_str())));
        self.entities.push(EntityAnnotation {
            id: id.clone(),
            label,
            spans,
            surface,
        });
        Some(id)
    }

    pub fn add_relation(&mut self, kind: RelationKind, trigger: &str, argument: &str) -> String {
        if let Some(r) = self
            .relations
            .iter()
            .find(|r| r.kind == kind && r.trigger == trigger && r.argument == argument)
        {
            return r.id.clone();
        }
        let id = format!("R{}", next_number(self.relations.iter().map(|r| r.id.as_str())));
        self.relations.push(RelationAnnotation {
            id: id.clone(),
            kind,
            trigger: trigger.to_string(),
            argument: argument.to_string(),
        });
        id
    }

    pub fn add_attribute(&mut self, target: &str, value: StatusValue) -> String {
        if let Some(a) = self
            .attributes
            .iter()
            .find(|a| a.target == target && a.value == value)
        {
            return a.id.clone();
        }
        let id = format!("A{}", next_number(self.attributes.iter().map(|a| a.id.as_str())));
        self.attributes.push(AttributeAnnotation {
            id: id.clone(),
            target: target.to_string(),
            value,
        });
        id
    }
}

fn next_number<'a>(ids: impl Iterator<Item = &'a str>) -> u64 {
    ids.filter_map(id_number).max().map_or(1, |n| n + 1)
}

fn id_number(id: &str) -> Option<u64> {
    id.get(1..)?.parse().ok()
}

fn check_id(id: &str, prefix: char, line: usize) -> Result<(), BratError> {
    if id.starts_with(prefix) && id_number(id).is_some() {
        Ok(())
    } else {
        Err(malformed(line, format!("bad annotation id {id:?}")))
    }
}

fn malformed(line: usize, reason: impl Into<String>) -> BratError {
    BratError::MalformedLine {
        line,
        reason: reason.into(),
    }
}

fn parse_spans(field: &str, line: usize) -> Result<Vec<Span>, BratError> {
    let mut spans = Vec::new();
    for frag in field.split(';') {
        let mut it = frag.split_whitespace();
        let (Some(s), Some(e), None) = (it.next(), it.next(), it.next()) else {
            return Err(malformed(line, format!("bad offsets {frag:?}")));
        };
        let parse = |v: &str| {
            v.parse::<usize>()
                .map_err(|_| malformed(line, format!("bad offset {v:?}")))
        };
        let (start, end) = (parse(s)?, parse(e)?);
        let span =
            Span::new(start, end).ok_or_else(|| malformed(line, format!("empty span {start} {end}")))?;
        spans.push(span);
    }
    if spans.windows(2).any(|w| w[0].end > w[1].start) {
        return Err(malformed(line, "fragments are unsorted or overlapping"));
    }
    Ok(spans)
}

fn arg_ref<'a>(token: &'a str, name: &str, line: usize) -> Result<&'a str, BratError> {
    token
        .strip_prefix(name)
        .and_then(|t| t.strip_prefix(':'))
        .ok_or_else(|| malformed(line, format!("expected {name}:<id>, got {token:?}")))
}

/// Parse a `.ann` file against its document text.
///
/// Every line becomes exactly one annotation or one error; the first error
/// aborts parsing and names its 1-based line number.
pub fn parse_standoff(doc: &Document, ann_text: &str) -> Result<DocumentAnnotation, BratError> {
    let ann_text = ann_text.strip_prefix(BOM).unwrap_or(ann_text);
    let mut out = DocumentAnnotation::new(doc.clone());
    let mut seen: HashSet<String> = HashSet::new();
    let mut refs: Vec<(usize, String)> = Vec::new();
    let mut attr_targets: HashMap<String, usize> = HashMap::new();

    for (idx, raw) in ann_text.lines().enumerate() {
        let line = idx + 1;
        let raw = raw.strip_suffix('\r').unwrap_or(raw);
        if raw.trim().is_empty() {
            continue;
        }
        let Some(first) = raw.chars().next() else { continue };
        if matches!(first, 'E' | 'N' | '#' | '*' | 'M') {
            out.passthrough.push(raw.to_string());
            continue;
        }
        let mut fields = raw.splitn(3, '\t');
        let id = fields.next().unwrap_or_default();
        let body = fields
            .next()
            .ok_or_else(|| malformed(line, "missing tab after id"))?;
        let rest = fields.next();

        match first {
            'T' => {
                check_id(id, 'T', line)?;
                let recorded = rest.ok_or_else(|| malformed(line, "missing surface field"))?;
                let (label, offsets) = body
                    .split_once(' ')
                    .ok_or_else(|| malformed(line, "missing offsets"))?;
                let label: SchemaLabel = label
                    .parse()
                    .map_err(|e| malformed(line, format!("{e}")))?;
                let spans = parse_spans(offsets, line)?;
                let len = doc.char_len();
                if let Some(bad) = spans.iter().find(|s| s.end > len) {
                    return Err(BratError::OffsetOutOfRange {
                        line,
                        start: bad.start,
                        end: bad.end,
                        len,
                    });
                }
                let actual = doc.surface(&spans).expect("spans checked against length");
                if flatten_surface(recorded) != actual {
                    return Err(BratError::SurfaceMismatch {
                        line,
                        recorded: recorded.to_string(),
                        actual,
                    });
                }
                if !seen.insert(id.to_string()) {
                    return Err(BratError::DuplicateId {
                        line,
                        id: id.to_string(),
                    });
                }
                out.entities.push(EntityAnnotation {
                    id: id.to_string(),
                    label,
                    spans,
                    surface: actual,
                });
            }
            'R' => {
                check_id(id, 'R', line)?;
                let mut tok = body.split_whitespace();
                let (Some(kind), Some(a1), Some(a2), None) =
                    (tok.next(), tok.next(), tok.next(), tok.next())
                else {
                    return Err(malformed(line, "expected `<Kind> Arg1:<id> Arg2:<id>`"));
                };
                let kind: RelationKind = kind
                    .parse()
                    .map_err(|e| malformed(line, format!("{e}")))?;
                let trigger = arg_ref(a1, "Arg1", line)?.to_string();
                let argument = arg_ref(a2, "Arg2", line)?.to_string();
                if !seen.insert(id.to_string()) {
                    return Err(BratError::DuplicateId {
                        line,
                        id: id.to_string(),
                    });
                }
                refs.push((line, trigger.clone()));
                refs.push((line, argument.clone()));
                out.relations.push(RelationAnnotation {
                    id: id.to_string(),
                    kind,
                    trigger,
                    argument,
                });
            }
            'A' => {
                check_id(id, 'A', line)?;
                let mut tok = body.split_whitespace();
                let (Some(name), Some(target), Some(value), None) =
                    (tok.next(), tok.next(), tok.next(), tok.next())
                else {
                    return Err(malformed(line, "expected `StatusValue <id> <value>`"));
                };
                if name != "StatusValue" {
                    return Err(malformed(line, format!("unknown attribute {name:?}")));
                }
                let value: StatusValue = value
                    .parse()
                    .map_err(|e| malformed(line, format!("{e}")))?;
                if !seen.insert(id.to_string()) {
                    return Err(BratError::DuplicateId {
                        line,
                        id: id.to_string(),
                    });
                }
                attr_targets.insert(target.to_string(), line);
                refs.push((line, target.to_string()));
                out.attributes.push(AttributeAnnotation {
                    id: id.to_string(),
                    target: target.to_string(),
                    value,
                });
            }
            _ => return Err(malformed(line, format!("unsupported annotation id {id:?}"))),
        }
    }

    let entity_ids: HashSet<&str> = out.entities.iter().map(|e| e.id.as_str()).collect();
    if let Some((line, id)) = refs.iter().find(|(_, id)| !entity_ids.contains(id.as_str())) {
        return Err(BratError::DanglingReference {
            line: *line,
            id: id.clone(),
        });
    }
    Ok(out)
}

fn by_number<T>(items: &[T], id: impl Fn(&T) -> &str) -> Vec<&T> {
    let mut sorted: Vec<&T> = items.iter().collect();
    sorted.sort_by_key(|x| (id_number(id(x)).unwrap_or(u64::MAX), id(x).to_string()));
    sorted
}

/// Render `T` lines, then `R`, then `A`, each in numeric id order, followed
/// by pass-through lines.
pub fn serialize_standoff(ann: &DocumentAnnotation) -> String {
    let mut out = String::new();
    for e in by_number(&ann.entities, |e| &e.id) {
        let offsets: Vec<String> = e.spans.iter().map(Span::to_string).collect();
        let _ = writeln!(
            out,
            "{}\t{} {}\t{}",
            e.id,
            e.label,
            offsets.join(";"),
            flatten_surface(&e.surface)
        );
    }
    for r in by_number(&ann.relations, |r| &r.id) {
        let _ = writeln!(
            out,
            "{}\t{} Arg1:{} Arg2:{}",
            r.id, r.kind, r.trigger, r.argument
        );
    }
    for a in by_number(&ann.attributes, |a| &a.id) {
        let _ = writeln!(out, "{}\tStatusValue {} {}", a.id, a.target, a.value);
    }
    for p in &ann.passthrough {
        out.push_str(p);
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(text: &str) -> Document {
        Document::new("d", text)
    }

    #[test]
    fn single_entity() {
        let d = doc("Consomme  tabac tous les jours");
        let a = parse_standoff(&d, "T1\tTobacco 10 15\ttabac\n").unwrap();
        assert_eq!(a.entities.len(), 1);
        let e = &a.entities[0];
        assert_eq!(e.label, SchemaLabel::Tobacco);
        assert_eq!(e.spans, vec![Span::new(10, 15).unwrap()]);
        assert_eq!(e.surface, "tabac");
    }

    #[test]
    fn attribute_value() {
        let d = doc("tabac actif");
        let a = parse_standoff(
            &d,
            "T1\tTobacco 0 5\ttabac\nT2\tStatusTime 6 11\tactif\nA1\tStatusValue T2 current\n",
        )
        .unwrap();
        assert_eq!(
            a.attributes,
            vec![AttributeAnnotation {
                id: "A1".into(),
                target: "T2".into(),
                value: StatusValue::Current
            }]
        );
    }

    #[test]
    fn offset_out_of_range() {
        let d = doc("0123456789tabac12345");
        assert_eq!(d.char_len(), 20);
        let err = parse_standoff(&d, "T1\tTobacco 10 99\ttabac\n").unwrap_err();
        assert!(matches!(err, BratError::OffsetOutOfRange { line: 1, .. }));
    }

    #[test]
    fn accented_offsets_are_chars() {
        let d = doc("Prise de cocaïne et de tabac");
        let a = parse_standoff(&d, "T1\tDrug 9 16\tcocaïne\nT2\tTobacco 23 28\ttabac\n").unwrap();
        assert_eq!(a.entities[0].surface, "cocaïne");
        assert_eq!(a.entities[1].surface, "tabac");
        // byte offsets would put "tabac" at 24..29
        assert!(parse_standoff(&d, "T1\tTobacco 24 29\ttabac\n").is_err());
    }

    #[test]
    fn bom_is_stripped() {
        let d = Document::new("d", "\u{feff}tabac");
        assert_eq!(d.char_len(), 5);
        let a = parse_standoff(&d, "\u{feff}T1\tTobacco 0 5\ttabac\n").unwrap();
        assert_eq!(a.entities.len(), 1);
    }

    #[test]
    fn discontinuous_spans() {
        let d = doc("Vit avec sa soeur et son frère");
        let a = parse_standoff(&d, "T1\tLiving_WithOthers 0 8;21 30\tVit avec son frère\n").unwrap();
        assert_eq!(a.entities[0].spans.len(), 2);
        assert_eq!(a.entities[0].extent(), Span::new(0, 30).unwrap());
        let back = serialize_standoff(&a);
        assert_eq!(back, "T1\tLiving_WithOthers 0 8;21 30\tVit avec son frère\n");
    }

    #[test]
    fn errors_carry_line_numbers() {
        let d = doc("tabac actif");
        let cases = [
            ("T1\tTobacco 0 5\ttabac\nT2\tTobacco 0 5\ttabak\n", 2),
            ("T1\tTobacco 0 5\ttabac\n\nR1\tStatus Arg1:T1 Arg2:T9\n", 3),
            ("T1\tTobacco 0 5\ttabac\nT1\tTobacco 0 5\ttabac\n", 2),
            ("X1\tfoo\n", 1),
            ("T1\tTobaco 0 5\ttabac\n", 1),
            ("T1\tTobacco 5 0\ttabac\n", 1),
            ("T1\tTobacco 0 5\ttabac\nA1\tNegation T1\n", 2),
            ("T1\tTobacco 0 5\ttabac\nA1\tStatusValue T1 maybe\n", 2),
            ("R1\tStatus Arg1:T1\n", 1),
            ("T1 Tobacco 0 5 tabac\n", 1),
        ];
        for (ann, line) in cases {
            let err = parse_standoff(&d, ann).unwrap_err();
            assert_eq!(err.line(), line, "{ann:?} -> {err}");
            assert!(err.to_string().starts_with(&format!("line {line}:")));
        }
    }

    #[test]
    fn surface_mismatch() {
        let d = doc("tabac actif");
        assert!(matches!(
            parse_standoff(&d, "T1\tTobacco 0 5\tTabac\n").unwrap_err(),
            BratError::SurfaceMismatch { .. }
        ));
    }

    #[test]
    fn newline_inside_span_is_flattened() {
        let d = doc("Vit\nseul");
        let a = parse_standoff(&d, "T1\tLiving_Alone 0 8\tVit seul\n").unwrap();
        assert_eq!(a.entities[0].surface, "Vit seul");
    }

    #[test]
    fn passthrough_lines_survive() {
        let d = doc("tabac");
        let src = "T1\tTobacco 0 5\ttabac\n#1\tAnnotatorNotes T1\tcheck\n";
        let a = parse_standoff(&d, src).unwrap();
        assert_eq!(a.passthrough.len(), 1);
        assert_eq!(serialize_standoff(&a), src);
    }

    #[test]
    fn empty_serializes_empty() {
        assert_eq!(serialize_standoff(&DocumentAnnotation::new(doc("x"))), "");
    }

    #[test]
    fn serialization_order() {
        let d = doc("tabac actif");
        let a = parse_standoff(
            &d,
            "A1\tStatusValue T10 none\nR1\tStatus Arg1:T2 Arg2:T10\nT10\tStatusTime 6 11\tactif\nT2\tTobacco 0 5\ttabac\n",
        )
        .unwrap();
        assert_eq!(
            serialize_standoff(&a),
            "T2\tTobacco 0 5\ttabac\nT10\tStatusTime 6 11\tactif\nR1\tStatus Arg1:T2 Arg2:T10\nA1\tStatusValue T10 none\n"
        );
    }

    #[test]
    fn entity_then_attribute() {
        let mut a = DocumentAnnotation::new(doc("jamais"));
        let t = a.add_entity(SchemaLabel::StatusTime, vec![Span::new(0, 6).unwrap()]).unwrap();
        a.add_attribute(&t, StatusValue::Never);
        assert_eq!(
            serialize_standoff(&a),
            "T1\tStatusTime 0 6\tjamais\nA1\tStatusValue T1 none\n"
        );
    }

    #[test]
    fn add_entity_dedups_and_checks_bounds() {
        let mut a = DocumentAnnotation::new(doc("17 cigarettes"));
        let s = vec![Span::new(0, 2).unwrap()];
        let id1 = a.add_entity(SchemaLabel::Amount, s.clone()).unwrap();
        let id2 = a.add_entity(SchemaLabel::Amount, s).unwrap();
        assert_eq!(id1, id2);
        assert!(a
            .add_entity(SchemaLabel::Amount, vec![Span::new(0, 40).unwrap()])
            .is_none());
    }

    #[test]
    fn window_rebases() {
        let d = doc("Mode de vie :\nVit seul.");
        let w = d.window(Span::new(14, 23).unwrap()).unwrap();
        assert_eq!(w.text(), "Vit seul.");
    }
}
