//! Corpus directories (`<id>.txt` + `<id>.ann`), label statistics,
//! deterministic splits, and a template-driven synthetic corpus generator.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::brat::{parse_standoff, serialize_standoff, BratError, Document, DocumentAnnotation, Span};
use crate::par;
use crate::schema::{permits, RelationKind, SchemaLabel, StatusValue};

pub type Corpus = BTreeMap<String, DocumentAnnotation>;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}: {source}")]
    Brat {
        path: PathBuf,
        #[source]
        source: BratError,
    },
    #[error("bad split ratios: {0}")]
    BadRatios(String),
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("template {line}: {reason}")]
    BadTemplate { line: usize, reason: String },
    #[error("lexicon line {line}: {reason}")]
    BadLexicon { line: usize, reason: String },
    #[error("document {index}: no occurrence-unique rendering found")]
    Exhausted { index: usize },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CorpusError + '_ {
    move |source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Ids of all `<id>.txt` files in `dir`, sorted.
pub fn document_ids(dir: &Path) -> Result<Vec<String>, CorpusError> {
    let mut ids = Vec::new();
    for entry in fs::read_dir(dir).map_err(io_err(dir))? {
        let path = entry.map_err(io_err(dir))?.path();
        if path.extension().is_some_and(|e| e == "txt") {
            if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                ids.push(stem.to_string());
            }
        }
    }
    ids.sort();
    Ok(ids)
}

pub fn load_text(dir: &Path, id: &str) -> Result<Document, CorpusError> {
    let path = dir.join(format!("{id}.txt"));
    let text = fs::read_to_string(&path).map_err(io_err(&path))?;
    Ok(Document::new(id, text))
}

/// Texts only, for directories without annotations.
pub fn load_texts(dir: &Path) -> Result<BTreeMap<String, Document>, CorpusError> {
    document_ids(dir)?
        .into_iter()
        .map(|id| Ok((id.clone(), load_text(dir, &id)?)))
        .collect()
}

/// Load every document with its annotations. A missing `.ann` file means
/// no annotations.
pub fn load_corpus(dir: &Path) -> Result<Corpus, CorpusError> {
    let mut out = Corpus::new();
    for id in document_ids(dir)? {
        let doc = load_text(dir, &id)?;
        let path = dir.join(format!("{id}.ann"));
        let ann = match fs::read_to_string(&path) {
            Ok(text) => parse_standoff(&doc, &text).map_err(|source| CorpusError::Brat {
                path: path.clone(),
                source,
            })?,
            Err(e) if e.kind() == io::ErrorKind::NotFound => DocumentAnnotation::new(doc),
            Err(e) => return Err(io_err(&path)(e)),
        };
        out.insert(id, ann);
    }
    Ok(out)
}

/// Write `<id>.txt` and `<id>.ann` for every document. The directory is
/// created if needed.
pub fn write_corpus<'a>(
    dir: &Path,
    docs: impl IntoIterator<Item = &'a DocumentAnnotation>,
) -> Result<(), CorpusError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    for ann in docs {
        let txt = dir.join(format!("{}.txt", ann.doc.id));
        fs::write(&txt, ann.doc.text()).map_err(io_err(&txt))?;
        let a = dir.join(format!("{}.ann", ann.doc.id));
        fs::write(&a, serialize_standoff(ann)).map_err(io_err(&a))?;
    }
    Ok(())
}

/// Entity counts per label and relation counts per kind. Every label and
/// kind is present, zeros included.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistributionTable {
    pub documents: usize,
    pub entities: BTreeMap<SchemaLabel, usize>,
    pub relations: BTreeMap<RelationKind, usize>,
}

impl DistributionTable {
    pub fn total_entities(&self) -> usize {
        self.entities.values().sum()
    }

    pub fn total_relations(&self) -> usize {
        self.relations.values().sum()
    }
}

pub fn stats<'a>(docs: impl IntoIterator<Item = &'a DocumentAnnotation>) -> DistributionTable {
    let mut t = DistributionTable {
        documents: 0,
        entities: SchemaLabel::ALL.iter().map(|l| (*l, 0)).collect(),
        relations: RelationKind::ALL.iter().map(|k| (*k, 0)).collect(),
    };
    for ann in docs {
        t.documents += 1;
        for e in &ann.entities {
            *t.entities.entry(e.label).or_default() += 1;
        }
        for r in &ann.relations {
            *t.relations.entry(r.kind).or_default() += 1;
        }
    }
    t
}

pub const DEFAULT_RATIOS: [f64; 3] = [0.7, 0.1, 0.2];

/// Part sizes for `n` items: floor of each share, then the remainder one by
/// one to the largest fractional parts (earlier parts win ties).
pub fn split_sizes(n: usize, ratios: &[f64]) -> Result<Vec<usize>, CorpusError> {
    if ratios.is_empty() {
        return Err(CorpusError::BadRatios("no ratios".into()));
    }
    if ratios.iter().any(|r| !r.is_finite() || *r < 0.0) {
        return Err(CorpusError::BadRatios(format!("{ratios:?} has a negative or non-finite entry")));
    }
    let sum: f64 = ratios.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(CorpusError::BadRatios(format!("{ratios:?} sums to {sum}, not 1")));
    }
    let exact: Vec<f64> = ratios.iter().map(|r| r * n as f64).collect();
    let mut sizes: Vec<usize> = exact.iter().map(|x| (x + 1e-9).floor() as usize).collect();
    let assigned: usize = sizes.iter().sum();
    let mut order: Vec<usize> = (0..ratios.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = exact[a] - sizes[a] as f64;
        let fb = exact[b] - sizes[b] as f64;
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    for &i in order.iter().cycle().take(n.saturating_sub(assigned)) {
        sizes[i] += 1;
    }
    Ok(sizes)
}

/// Partition `ids` by a seeded shuffle of the lexicographically sorted ids.
pub fn split(ids: &[String], ratios: &[f64], seed: u64) -> Result<Vec<Vec<String>>, CorpusError> {
    if ids.is_empty() {
        return Err(CorpusError::EmptyCorpus);
    }
    let sizes = split_sizes(ids.len(), ratios)?;
    let mut sorted = ids.to_vec();
    sorted.sort();
    sorted.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut rest = sorted.as_slice();
    let mut parts = Vec::with_capacity(sizes.len());
    for size in sizes {
        let (head, tail) = rest.split_at(size);
        parts.push(head.to_vec());
        rest = tail;
    }
    Ok(parts)
}

/// Filler lexicon: `key = filler | filler | ...`, one key per line. Keys are
/// a label (`Tobacco`), a label with a class (`Amount#tob`) or a status value
/// (`StatusTime:past`).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Lexicon {
    entries: BTreeMap<String, Vec<String>>,
}

impl Lexicon {
    pub fn parse(text: &str) -> Result<Lexicon, CorpusError> {
        let mut entries: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let bad = |reason: String| CorpusError::BadLexicon { line: i + 1, reason };
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, fillers) = line
                .split_once('=')
                .ok_or_else(|| bad("expected `key = filler | ...`".into()))?;
            let key = key.trim();
            for f in fillers.split('|').map(str::trim) {
                if f.is_empty() {
                    return Err(bad(format!("empty filler for {key}")));
                }
                if f.contains(['[', ']', '\t', '{', '}']) || f.contains("  ") {
                    return Err(bad(format!("filler {f:?} contains a reserved character")));
                }
                entries.entry(key.to_string()).or_default().push(f.to_string());
            }
        }
        Ok(Lexicon { entries })
    }

    pub fn get(&self, key: &str) -> Option<&[String]> {
        self.entries.get(key).map(Vec::as_slice).filter(|v| !v.is_empty())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Slot {
    /// One of several trigger labels, each with its lexicon key.
    Trigger(Vec<(SchemaLabel, String)>),
    Status(StatusValue),
    Argument(RelationKind, String),
}

impl Slot {
    fn key(&self) -> Vec<String> {
        match self {
            Slot::Trigger(alts) => alts.iter().map(|(_, k)| k.clone()).collect(),
            Slot::Status(v) => vec![format!("StatusTime:{v}")],
            Slot::Argument(_, k) => vec![k.clone()],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Piece {
    Text(String),
    Slot(Slot),
}

/// One sentence pattern with typed slots: `{Label}`, `{Label#class}`,
/// `{A|B}` (one of several trigger labels) and `{StatusTime:value}`.
/// The gold annotations follow from the slots: one trigger, its status when
/// the trigger is a substance, and one relation per argument slot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynthTemplate {
    pub source: String,
    pieces: Vec<Piece>,
}

fn split_key(key: &str) -> Result<SchemaLabel, String> {
    let label = key.split('#').next().unwrap_or(key);
    label.parse::<SchemaLabel>().map_err(|e| e.to_string())
}

impl SynthTemplate {
    pub fn parse(source: &str, lexicon: &Lexicon) -> Result<SynthTemplate, String> {
        let mut pieces = Vec::new();
        let mut rest = source;
        while let Some(open) = rest.find('{') {
            if open > 0 {
                pieces.push(Piece::Text(rest[..open].to_string()));
            }
            let close = rest[open..]
                .find('}')
                .map(|c| open + c)
                .ok_or("unclosed `{`")?;
            pieces.push(Piece::Slot(Self::parse_slot(&rest[open + 1..close])?));
            rest = &rest[close + 1..];
        }
        if rest.contains('}') {
            return Err("unmatched `}`".into());
        }
        if !rest.is_empty() {
            pieces.push(Piece::Text(rest.to_string()));
        }
        let t = SynthTemplate {
            source: source.to_string(),
            pieces,
        };
        t.check(lexicon)?;
        Ok(t)
    }

    fn parse_slot(body: &str) -> Result<Slot, String> {
        if let Some(value) = body.strip_prefix("StatusTime:") {
            return value
                .parse::<StatusValue>()
                .map(Slot::Status)
                .map_err(|e| e.to_string());
        }
        let keys: Vec<&str> = body.split('|').map(str::trim).collect();
        let labels = keys.iter().map(|k| split_key(k)).collect::<Result<Vec<_>, _>>()?;
        if labels.iter().all(|l| l.is_trigger()) {
            return Ok(Slot::Trigger(
                labels.into_iter().zip(keys.iter().map(|k| k.to_string())).collect(),
            ));
        }
        match (labels.as_slice(), keys.as_slice()) {
            ([l], [k]) if *l != SchemaLabel::StatusTime => {
                let kind = RelationKind::for_argument_label(*l).ok_or(format!("{l} is not an argument label"))?;
                Ok(Slot::Argument(kind, k.to_string()))
            }
            ([SchemaLabel::StatusTime], _) => Err("StatusTime slots need a value, e.g. {StatusTime:past}".into()),
            _ => Err(format!("slot {{{body}}} mixes argument and trigger labels")),
        }
    }

    fn slots(&self) -> impl Iterator<Item = &Slot> {
        self.pieces.iter().filter_map(|p| match p {
            Piece::Slot(s) => Some(s),
            Piece::Text(_) => None,
        })
    }

    fn check(&self, lexicon: &Lexicon) -> Result<(), String> {
        let triggers: Vec<&Vec<(SchemaLabel, String)>> = self
            .slots()
            .filter_map(|s| match s {
                Slot::Trigger(alts) => Some(alts),
                _ => None,
            })
            .collect();
        let [alts] = triggers.as_slice() else {
            return Err(format!("expected exactly one trigger slot, found {}", triggers.len()));
        };
        let statuses = self.slots().filter(|s| matches!(s, Slot::Status(_))).count();
        for (label, _) in alts.iter() {
            let want = usize::from(label.is_substance());
            if statuses != want {
                return Err(format!("{label} needs {want} StatusTime slot(s), found {statuses}"));
            }
            for slot in self.slots() {
                if let Slot::Argument(kind, _) = slot {
                    if !permits(*kind, *label) {
                        return Err(format!("{kind} is not permitted on {label}"));
                    }
                }
            }
        }
        for slot in self.slots() {
            for key in slot.key() {
                if lexicon.get(&key).is_none() {
                    return Err(format!("no lexicon entry for {key}"));
                }
            }
        }
        Ok(())
    }
}

pub fn parse_templates(text: &str, lexicon: &Lexicon) -> Result<Vec<SynthTemplate>, CorpusError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        out.push(
            SynthTemplate::parse(line, lexicon).map_err(|reason| CorpusError::BadTemplate { line: i + 1, reason })?,
        );
    }
    if out.is_empty() {
        return Err(CorpusError::BadTemplate {
            line: 0,
            reason: "no templates".into(),
        });
    }
    Ok(out)
}

pub const DEFAULT_TEMPLATES: &str = "\
{Tobacco} {StatusTime:current} à {Amount#tob} ({Type#tob}).
{Tobacco} {StatusTime:past} {History}, {Duration}.
{Tobacco} : {StatusTime:none}.
Consommation d'{Alcohol} {StatusTime:current}, {Amount#alc} de {Type#alc} {Frequency}.
{Alcohol} {StatusTime:past} {History}.
{Alcohol} {StatusTime:none}.
{Drug} {StatusTime:current} ({Type#drug}), {Amount#drug} {Frequency}, {Duration}.
{Drug} {StatusTime:past} {History}.
{Living_Alone}.
Patient qui {Living_WithOthers}.
Statut : {MaritalStatus_Single}.
{MaritalStatus_InRelationship} {History}.
{MaritalStatus_Divorced}.
{MaritalStatus_Widowed} {History}.
{Amount#desc} {Descendants_Yes} {Type#desc}.
{Descendants_No}.
Profession : {Job|Last_job}.
Travaillait comme {Last_job}.
{Employment_Working}.
Actuellement {Employment_Unemployed} {History}.
{Employment_Student}.
{Employment_Pensioner} {History}.
{Employment_Other}.
Logement : {Housing_Yes}.
{Housing_No} {History}.
Pratique {PhysicalActivity_Yes} {Frequency}.
{PhysicalActivity_No}.
Revenus : {Income}.
Niveau d'études : {Education}.
Patient {Ethnicity}.
";

pub const DEFAULT_LEXICON: &str = "\
Living_Alone = vit seul | vit seule | habite seul
Living_WithOthers = vit avec son épouse | vit avec sa fille | vit en couple | vit chez ses parents
MaritalStatus_Single = célibataire
MaritalStatus_InRelationship = marié | mariée | en concubinage | pacsé
MaritalStatus_Divorced = divorcé | divorcée | séparé
MaritalStatus_Widowed = veuf | veuve
Descendants_Yes = enfants | fils | filles | petits-enfants
Descendants_No = pas d'enfant | sans enfant
Job = boulanger | infirmière | maçon | comptable
Last_job = mineur | secrétaire | chauffeur routier | agriculteur
Employment_Working = en activité | travaille à temps plein
Employment_Unemployed = sans emploi | au chômage | demandeur d'emploi
Employment_Student = étudiant | étudiante | lycéen
Employment_Pensioner = retraité | retraitée | à la retraite
Employment_Other = en invalidité | en arrêt maladie longue durée
Alcohol = alcool | OH | éthylisme
Tobacco = tabac | tabagisme | fumeur | fumeuse
Drug = cannabis | héroïne | cocaïne | toxicomanie
Housing_Yes = domicile | appartement | maison individuelle
Housing_No = sans domicile fixe | SDF | hébergé en foyer
PhysicalActivity_Yes = sport | marche | vélo | natation
PhysicalActivity_No = sédentaire | pas d'activité physique
Income = RSA | AAH | minimum vieillesse | revenus modestes
Education = baccalauréat | CAP | licence | niveau brevet
Ethnicity = originaire du Maroc | né au Portugal | origine sénégalaise
StatusTime:current = actif | active | en cours
StatusTime:past = sevré | sevrée | ancien | arrêté
StatusTime:none = jamais | non | aucune
History = depuis 20 ans | depuis l'adolescence | depuis 2015 | il y a 5 ans
Duration = pendant 10 ans | durant 30 ans | pendant 5 ans
Frequency = par jour | quotidiennement | le week-end | 3 fois par semaine | deux fois par mois
Amount#tob = 20 PA | 10 paquets-années | 40 PA
Amount#alc = 3 verres | 1 litre | 2 verres
Amount#drug = 1 joint | 3 joints
Amount#desc = deux | trois | un
Type#tob = roulé | cigares
Type#alc = bière | vin
Type#drug = résine | herbe
Type#desc = adoptés | d'une première union
";

/// Header line every synthetic document starts with.
pub const SYNTH_HEADER: &str = "Mode de vie :\n";

const MAX_TEMPLATES_PER_DOC: usize = 4;
const MAX_ATTEMPTS: usize = 500;

#[derive(Debug, Clone)]
pub struct Synthesizer {
    templates: Vec<SynthTemplate>,
    lexicon: Lexicon,
}

struct Placed {
    slot: Slot,
    label: SchemaLabel,
    span: Span,
}

impl Synthesizer {
    pub fn new(templates: &str, lexicon: &str) -> Result<Synthesizer, CorpusError> {
        let lexicon = Lexicon::parse(lexicon)?;
        let templates = parse_templates(templates, &lexicon)?;
        Ok(Synthesizer { templates, lexicon })
    }

    pub fn french() -> Synthesizer {
        Synthesizer::new(DEFAULT_TEMPLATES, DEFAULT_LEXICON).expect("default templates are valid")
    }

    pub fn templates(&self) -> &[SynthTemplate] {
        &self.templates
    }

    fn pick<'a>(&'a self, rng: &mut ChaCha8Rng, key: &str) -> &'a str {
        let fillers = self.lexicon.get(key).expect("checked at template load");
        &fillers[rng.gen_range(0..fillers.len())]
    }

    fn render(&self, t: &SynthTemplate, rng: &mut ChaCha8Rng, text: &mut String, pos: &mut usize) -> Vec<Placed> {
        let mut placed = Vec::new();
        for piece in &t.pieces {
            let (filler, slot, label) = match piece {
                Piece::Text(s) => {
                    text.push_str(s);
                    *pos += s.chars().count();
                    continue;
                }
                Piece::Slot(Slot::Trigger(alts)) => {
                    let (label, key) = &alts[rng.gen_range(0..alts.len())];
                    (self.pick(rng, key), Slot::Trigger(vec![(*label, key.clone())]), *label)
                }
                Piece::Slot(slot @ Slot::Status(v)) => (
                    self.pick(rng, &format!("StatusTime:{v}")),
                    slot.clone(),
                    SchemaLabel::StatusTime,
                ),
                Piece::Slot(slot @ Slot::Argument(kind, key)) => {
                    (self.pick(rng, key), slot.clone(), kind.argument_label())
                }
            };
            let n = filler.chars().count();
            text.push_str(filler);
            placed.push(Placed {
                slot,
                label,
                span: Span::new(*pos, *pos + n).expect("fillers are non-empty"),
            });
            *pos += n;
        }
        placed
    }

    /// Document number `index` of the corpus generated from `seed`. Each index
    /// draws from its own stream, so documents are independent of `n` and of
    /// generation order.
    pub fn document(&self, seed: u64, index: usize) -> Result<DocumentAnnotation, CorpusError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index as u64);
        let id = format!("synth_{index:05}");
        let k_max = MAX_TEMPLATES_PER_DOC.min(self.templates.len());
        for _ in 0..MAX_ATTEMPTS {
            let k = rng.gen_range(1..=k_max);
            let chosen = index::sample(&mut rng, self.templates.len(), k);
            let mut text = SYNTH_HEADER.to_string();
            let mut pos = text.chars().count();
            let mut sentences = Vec::new();
            for (i, ti) in chosen.iter().enumerate() {
                if i > 0 {
                    text.push(' ');
                    pos += 1;
                }
                sentences.push(self.render(&self.templates[ti], &mut rng, &mut text, &mut pos));
            }
            let doc = Document::new(id.clone(), text);
            if sentences.iter().flatten().all(|p| occurrences(&doc, p.span) == 1) {
                return Ok(annotate(doc, &sentences));
            }
        }
        Err(CorpusError::Exhausted { index })
    }

    pub fn generate(&self, n: usize, seed: u64) -> Result<Vec<DocumentAnnotation>, CorpusError> {
        par::map_range(n, |i| self.document(seed, i)).into_iter().collect()
    }
}

/// Occurrences of the text at `span` anywhere in the document, counting
/// overlapping matches and treating any whitespace char as a space.
fn occurrences(doc: &Document, span: Span) -> usize {
    let norm = |c: char| if c.is_whitespace() { ' ' } else { c };
    let text: Vec<char> = doc.text().chars().map(norm).collect();
    let needle: Vec<char> = text[span.start..span.end].to_vec();
    text.windows(needle.len()).filter(|w| *w == needle.as_slice()).count()
}

fn annotate(doc: Document, sentences: &[Vec<Placed>]) -> DocumentAnnotation {
    let mut ann = DocumentAnnotation::new(doc);
    for placed in sentences {
        let trigger = placed
            .iter()
            .find(|p| matches!(p.slot, Slot::Trigger(_)))
            .expect("one trigger per template");
        let tid = ann.add_entity(trigger.label, vec![trigger.span]).expect("span in range");
        for p in placed {
            match &p.slot {
                Slot::Trigger(_) => {}
                Slot::Status(v) => {
                    let sid = ann.add_entity(p.label, vec![p.span]).expect("span in range");
                    ann.add_relation(RelationKind::Status, &tid, &sid);
                    ann.add_attribute(&sid, *v);
                }
                Slot::Argument(kind, _) => {
                    let aid = ann.add_entity(p.label, vec![p.span]).expect("span in range");
                    ann.add_relation(*kind, &tid, &aid);
                }
            }
        }
    }
    ann
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::validate;

    #[test]
    fn split_sizes_arithmetic() {
        assert_eq!(split_sizes(1700, &DEFAULT_RATIOS).unwrap(), vec![1190, 170, 340]);
        assert_eq!(split_sizes(10, &DEFAULT_RATIOS).unwrap(), vec![7, 1, 2]);
        assert_eq!(split_sizes(3, &[0.5, 0.5]).unwrap(), vec![2, 1]);
        assert_eq!(split_sizes(0, &DEFAULT_RATIOS).unwrap(), vec![0, 0, 0]);
        assert!(matches!(split_sizes(10, &[0.7, 0.2]), Err(CorpusError::BadRatios(_))));
        assert!(matches!(split_sizes(10, &[1.2, -0.2]), Err(CorpusError::BadRatios(_))));
    }

    #[test]
    fn split_deterministic_partition() {
        let ids: Vec<String> = (0..57).map(|i| format!("d{i}")).collect();
        let a = split(&ids, &DEFAULT_RATIOS, 3).unwrap();
        let mut rev = ids.clone();
        rev.reverse();
        assert_eq!(a, split(&rev, &DEFAULT_RATIOS, 3).unwrap());
        assert_ne!(a, split(&ids, &DEFAULT_RATIOS, 4).unwrap());
        let mut all: Vec<String> = a.concat();
        all.sort();
        let mut want = ids.clone();
        want.sort();
        assert_eq!(all, want);
        assert!(matches!(split(&[], &DEFAULT_RATIOS, 0), Err(CorpusError::EmptyCorpus)));
    }

    #[test]
    fn stats_hand_count() {
        let doc = Document::new("a", "tabac sevré, vit seul");
        let ann = parse_standoff(
            &doc,
            "T1\tTobacco 0 5\ttabac\nT2\tStatusTime 6 11\tsevré\nT3\tLiving_Alone 13 21\tvit seul\n\
             R1\tStatus Arg1:T1 Arg2:T2\nA1\tStatusValue T2 past\n",
        )
        .unwrap();
        let empty = DocumentAnnotation::new(Document::new("b", ""));
        let t = stats([&ann, &empty]);
        assert_eq!(t.documents, 2);
        assert_eq!(t.entities.len(), 31);
        assert_eq!(t.relations.len(), 6);
        assert_eq!(t.entities[&SchemaLabel::Tobacco], 1);
        assert_eq!(t.entities[&SchemaLabel::LivingAlone], 1);
        assert_eq!(t.entities[&SchemaLabel::Alcohol], 0);
        assert_eq!(t.relations[&RelationKind::Status], 1);
        assert_eq!(t.total_entities(), 3);
        assert_eq!(stats([]).total_entities(), 0);
    }

    #[test]
    fn template_errors() {
        let lex = Lexicon::parse(DEFAULT_LEXICON).unwrap();
        let bad = |t: &str| SynthTemplate::parse(t, &lex).unwrap_err();
        assert!(bad("{Tobacco} {Amount#tob}").contains("StatusTime"));
        assert!(bad("{Living_Alone} {StatusTime:past}").contains("StatusTime"));
        assert!(bad("{Living_Alone} {Amount#tob}").contains("not permitted"));
        assert!(bad("{Living_Alone} {Job}").contains("exactly one trigger"));
        assert!(bad("rien").contains("exactly one trigger"));
        assert!(bad("{Living_Alone#nope}").contains("lexicon"));
        assert!(bad("{Weather}").contains("unknown"));
        assert!(bad("{Living_Alone").contains("unclosed"));
        assert!(Lexicon::parse("Job = [x]").is_err());
    }

    #[test]
    fn default_templates_cover_schema() {
        let s = Synthesizer::french();
        let mut labels = std::collections::BTreeSet::new();
        let mut kinds = std::collections::BTreeSet::new();
        for t in s.templates() {
            for slot in t.slots() {
                match slot {
                    Slot::Trigger(alts) => labels.extend(alts.iter().map(|(l, _)| *l)),
                    Slot::Status(_) => {
                        labels.insert(SchemaLabel::StatusTime);
                        kinds.insert(RelationKind::Status);
                    }
                    Slot::Argument(k, _) => {
                        labels.insert(k.argument_label());
                        kinds.insert(*k);
                    }
                }
            }
        }
        assert_eq!(labels.len(), 31);
        assert_eq!(kinds.len(), 6);
    }

    #[test]
    fn synth_valid_and_deterministic() {
        let s = Synthesizer::french();
        assert!(s.generate(0, 7).unwrap().is_empty());
        let docs = s.generate(100, 7).unwrap();
        assert_eq!(docs.len(), 100);
        for d in &docs {
            assert!(validate(d).is_empty(), "{}", serialize_standoff(d));
            assert!(d.doc.text().starts_with(SYNTH_HEADER));
            for e in d.entities.iter().filter(|e| e.label.is_substance()) {
                assert!(d
                    .relations
                    .iter()
                    .any(|r| r.kind == RelationKind::Status && r.trigger == e.id));
            }
        }
        assert_eq!(docs, s.generate(100, 7).unwrap());
        assert_eq!(docs[42], s.document(7, 42).unwrap());
        assert_ne!(docs, s.generate(100, 8).unwrap());
    }
}
