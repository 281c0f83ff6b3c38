//! `sdoh-kit`: command-line front end for sdoh-core.
//!
//! Exit status is 0 on success, 1 on runtime, validation or scoring errors and
//! 2 on usage errors.

mod output;

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use sdoh_core::corpus::{self, Synthesizer, DEFAULT_RATIOS};
use sdoh_core::decode::{decode, decode_in_window, events_to_annotation, DecodeIssue, IssueKind, MatchMode, Prediction};
use sdoh_core::linearize::training_pair;
use sdoh_core::score::iaa::iaa;
use sdoh_core::score::{
    category_table, label_corpus, score_level1, score_level2, EventCorpus, Level2Mode, MatchCriterion, ScoreReport,
};
use sdoh_core::section::{extract_sections, social_history, SectionConfig};
use sdoh_core::zcode::{completeness_report, default_map, ZCodeMap};
use sdoh_core::{par, schema, serialize_standoff, to_events, validate, Document, DocumentAnnotation, SdohEvent};

use output::{emit_json, jsonl, write_file_with_manifest, RunManifest, StagedDir};

#[derive(Parser)]
#[command(name = "sdoh-kit", version, about = "SDoH extraction toolkit: schema, linearization, decoding, scoring")]
struct Cli {
    /// Worker threads for per-document work (default: all cores).
    #[arg(long, global = true, env = "SDOH_KIT_JOBS")]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check every annotation file against the annotation scheme.
    Validate(ValidateArgs),
    /// Extract note sections as JSONL (social history only by default).
    Section(SectionArgs),
    /// Export training pairs {"doc_id","input","target"} as JSONL.
    Linearize(LinearizeArgs),
    /// Turn generated sequences into standoff annotations.
    Decode(DecodeArgs),
    /// Score predictions against gold annotations.
    Score(ScoreArgs),
    /// Inter-annotator agreement between two annotation directories.
    Iaa(IaaArgs),
    /// Entity and relation counts for a corpus.
    Stats(StatsArgs),
    /// Seeded train/dev/test split of a corpus directory.
    Split(SplitArgs),
    /// Generate a synthetic annotated corpus from templates.
    Synth(SynthArgs),
    /// Compare free-text SDoH coverage with structured Z-codes.
    ZcodeReport(ZcodeArgs),
    /// Print the annotation scheme as JSON.
    SchemaDump(SchemaDumpArgs),
}

#[derive(Args, Serialize)]
struct SectionOpts {
    /// Section header config (`name = pattern` lines). Defaults to the
    /// built-in French headers.
    #[arg(long, alias = "config", value_name = "PATH")]
    sections: Option<PathBuf>,
}

impl SectionOpts {
    fn load(&self) -> Result<SectionConfig> {
        match &self.sections {
            Some(p) => {
                let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                SectionConfig::parse(&text).with_context(|| format!("parsing {}", p.display()))
            }
            None => Ok(SectionConfig::default()),
        }
    }
}

#[derive(Args, Serialize)]
struct ValidateArgs {
    #[arg(long)]
    corpus: PathBuf,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct SectionArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Emit every recognised section, not just social history.
    #[arg(long)]
    all: bool,
    #[command(flatten)]
    sections: SectionOpts,
}

#[derive(Args, Serialize)]
struct LinearizeArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Restrict input and targets to the social-history section; documents
    /// without one are skipped.
    #[arg(long)]
    section_only: bool,
    #[command(flatten)]
    sections: SectionOpts,
}

#[derive(Args, Serialize)]
struct DecodeArgs {
    /// Directory holding the source `<id>.txt` files.
    #[arg(long)]
    corpus: PathBuf,
    /// JSONL of {"doc_id", "generated"}.
    #[arg(long)]
    predictions: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Retry unmatched surfaces with accent and case folding.
    #[arg(long)]
    lenient_match: bool,
    /// Sequences were generated from the social-history section; align
    /// against that section.
    #[arg(long)]
    section_only: bool,
    #[command(flatten)]
    sections: SectionOpts,
}

#[derive(Clone, Copy, ValueEnum, Serialize, PartialEq, Eq)]
enum LevelArg {
    #[value(name = "1")]
    #[serde(rename = "1")]
    One,
    #[value(name = "2")]
    #[serde(rename = "2")]
    Two,
    #[serde(rename = "both")]
    Both,
}

#[derive(Clone, Copy, ValueEnum, Serialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
enum CriterionArg {
    Exact,
    Overlap,
    Both,
}

#[derive(Args, Serialize)]
struct ScoreArgs {
    #[arg(long)]
    gold: PathBuf,
    #[arg(long)]
    pred: PathBuf,
    #[arg(long, value_enum, default_value = "both")]
    level: LevelArg,
    #[arg(long, value_enum, default_value = "both")]
    criterion: CriterionArg,
    /// Level 2 with per-slot credit instead of whole-event matching.
    #[arg(long)]
    arg_level: bool,
    /// Output directory for report.json and report.csv; JSON goes to stdout
    /// when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct IaaArgs {
    #[arg(long)]
    a: PathBuf,
    #[arg(long)]
    b: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct StatsArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct SplitArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_RATIOS.to_vec())]
    ratios: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values = ["train", "dev", "test"])]
    names: Vec<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Serialize)]
struct SynthArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Template file (one template per line); needs --lexicon.
    #[arg(long, requires = "lexicon")]
    templates: Option<PathBuf>,
    /// Filler lexicon (`key = a | b` lines); needs --templates.
    #[arg(long, requires = "templates")]
    lexicon: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct ZcodeArgs {
    /// Annotated corpus directory.
    #[arg(long)]
    corpus: PathBuf,
    /// CSV with columns doc_id,patient_id.
    #[arg(long)]
    patients: PathBuf,
    /// CSV with columns patient_id,code.
    #[arg(long)]
    codes: PathBuf,
    /// Code mapping TSV (code, category, optional value). Defaults to the
    /// built-in table.
    #[arg(long)]
    map: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct SchemaDumpArgs {
    #[arg(long)]
    out: Option<PathBuf>,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_corpus(dir: &Path) -> Result<corpus::Corpus> {
    corpus::load_corpus(dir).with_context(|| format!("loading corpus {}", dir.display()))
}

fn events_of(corpus: &corpus::Corpus, what: &str) -> Result<EventCorpus> {
    let results = par::map(&corpus.values().collect::<Vec<_>>(), |ann| {
        to_events(ann).with_context(|| format!("{what} document {}", ann.doc.id))
    });
    corpus.keys().cloned().zip(results).map(|(k, r)| Ok((k, r?))).collect()
}

fn run_validate(a: &ValidateArgs) -> Result<bool> {
    #[derive(Serialize)]
    struct Report {
        documents: usize,
        violations: Vec<schema::SchemaViolation>,
    }
    let corpus = load_corpus(&a.corpus)?;
    let anns: Vec<&DocumentAnnotation> = corpus.values().collect();
    let violations: Vec<_> = par::map(&anns, |ann| validate(ann)).into_iter().flatten().collect();
    let ok = violations.is_empty();
    let report = Report {
        documents: corpus.len(),
        violations,
    };
    emit_json(a.out.as_deref(), &report, &RunManifest::new("validate", &[&a.corpus], a))?;
    eprintln!("{} documents, {} violations", report.documents, report.violations.len());
    Ok(ok)
}

#[derive(Serialize)]
struct SectionRecord<'a> {
    doc_id: &'a str,
    section: String,
    start: usize,
    end: usize,
    text: String,
}

fn run_section(a: &SectionArgs) -> Result<()> {
    let cfg = a.sections.load()?;
    let docs = corpus::load_texts(&a.corpus).with_context(|| format!("loading {}", a.corpus.display()))?;
    let docs: Vec<&Document> = docs.values().collect();
    let per_doc = par::map(&docs, |d| {
        let secs = if a.all {
            extract_sections(d, &cfg)
        } else {
            social_history(d, &cfg).into_iter().collect()
        };
        secs.into_iter()
            .map(|s| SectionRecord {
                doc_id: &d.id,
                section: s.name,
                start: s.span.start,
                end: s.span.end,
                text: s.text,
            })
            .collect::<Vec<_>>()
    });
    let without = per_doc.iter().filter(|r| r.is_empty()).count();
    let records: Vec<SectionRecord> = per_doc.into_iter().flatten().collect();
    write_file_with_manifest(&a.out, &jsonl(&records)?, &RunManifest::new("section", &[&a.corpus], a))?;
    eprintln!("{} sections from {} documents ({without} without a match)", records.len(), docs.len());
    Ok(())
}

fn run_linearize(a: &LinearizeArgs) -> Result<()> {
    let cfg = a.sections.load()?;
    let corpus = load_corpus(&a.corpus)?;
    let anns: Vec<&DocumentAnnotation> = corpus.values().collect();
    let pairs = par::map(&anns, |ann| -> Result<Option<_>> {
        let window = if a.section_only {
            match social_history(&ann.doc, &cfg) {
                Some(s) => Some(s.span),
                None => return Ok(None),
            }
        } else {
            None
        };
        training_pair(ann, window)
            .map(Some)
            .with_context(|| format!("document {}", ann.doc.id))
    });
    let pairs: Vec<_> = pairs.into_iter().collect::<Result<Vec<_>>>()?.into_iter().flatten().collect();
    write_file_with_manifest(&a.out, &jsonl(&pairs)?, &RunManifest::new("linearize", &[&a.corpus], a))?;
    eprintln!("{} training pairs from {} documents", pairs.len(), corpus.len());
    Ok(())
}

fn read_predictions(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = read(path)?;
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let p: Prediction = serde_json::from_str(line)
            .with_context(|| format!("{}:{}: not a {{\"doc_id\",\"generated\"}} record", path.display(), i + 1))?;
        if out.insert(p.doc_id.clone(), p.generated).is_some() {
            bail!("{}:{}: duplicate doc_id {}", path.display(), i + 1, p.doc_id);
        }
    }
    Ok(out)
}

fn run_decode(a: &DecodeArgs) -> Result<()> {
    let predictions = read_predictions(&a.predictions)?;
    let docs = corpus::load_texts(&a.corpus).with_context(|| format!("loading {}", a.corpus.display()))?;
    if let Some(id) = predictions.keys().find(|id| !docs.contains_key(*id)) {
        bail!("{}: doc_id {id} has no {id}.txt in {}", a.predictions.display(), a.corpus.display());
    }
    let cfg = a.sections.load()?;
    let mode = if a.lenient_match {
        MatchMode::Lenient
    } else {
        MatchMode::Strict
    };
    let docs: Vec<&Document> = docs.values().collect();
    let decoded = par::map(&docs, |doc| {
        let Some(generated) = predictions.get(&doc.id) else {
            let issue = DecodeIssue {
                doc_id: doc.id.clone(),
                kind: IssueKind::MalformedOutput,
                payload: "no prediction for this document".into(),
            };
            return (DocumentAnnotation::new((*doc).clone()), vec![issue]);
        };
        let d = match a.section_only.then(|| social_history(doc, &cfg)).flatten() {
            Some(s) => decode_in_window(doc, s.span, generated, mode),
            None => decode(doc, generated, mode),
        };
        (events_to_annotation(doc, &d.events), d.issues)
    });
    let staged = StagedDir::new(&a.out)?;
    let mut issues = Vec::new();
    for (ann, mut doc_issues) in decoded {
        staged.write(&format!("{}.txt", ann.doc.id), ann.doc.text().as_bytes())?;
        staged.write(&format!("{}.ann", ann.doc.id), serialize_standoff(&ann).as_bytes())?;
        issues.append(&mut doc_issues);
    }
    staged.write("issues.jsonl", &jsonl(&issues)?)?;
    staged.commit(&RunManifest::new("decode", &[&a.corpus, &a.predictions], a))?;
    eprintln!("decoded {} documents, {} issues", docs.len(), issues.len());
    Ok(())
}

#[derive(Serialize)]
struct ScoreOutput {
    #[serde(skip_serializing_if = "Option::is_none")]
    level1: Option<ScoreReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    level2_exact: Option<ScoreReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    level2_overlap: Option<ScoreReport>,
}

fn run_score(a: &ScoreArgs) -> Result<()> {
    let gold = events_of(&load_corpus(&a.gold)?, "gold")?;
    let pred = events_of(&load_corpus(&a.pred)?, "predicted")?;
    let mode = if a.arg_level {
        Level2Mode::Argument
    } else {
        Level2Mode::Event
    };
    let level2 = |c: MatchCriterion| -> Result<ScoreReport> { Ok(score_level2(&gold, &pred, c, mode)?) };
    let want_l1 = a.level != LevelArg::Two;
    let want_l2 = a.level != LevelArg::One;
    let out = ScoreOutput {
        level1: if want_l1 {
            Some(score_level1(&label_corpus(&gold)?, &label_corpus(&pred)?)?)
        } else {
            None
        },
        level2_exact: if want_l2 && a.criterion != CriterionArg::Overlap {
            Some(level2(MatchCriterion::Exact)?)
        } else {
            None
        },
        level2_overlap: if want_l2 && a.criterion != CriterionArg::Exact {
            Some(level2(MatchCriterion::Overlap)?)
        } else {
            None
        },
    };
    let table = category_table(out.level1.as_ref(), out.level2_exact.as_ref(), out.level2_overlap.as_ref());
    for r in [&out.level1, &out.level2_exact, &out.level2_overlap].into_iter().flatten() {
        let name = match (r.level, r.criterion) {
            (1, _) => "level 1".to_string(),
            (_, Some(c)) => format!("level 2 {c:?}").to_lowercase(),
            _ => "level 2".to_string(),
        };
        eprintln!(
            "{name}: macro P={:.4} R={:.4} F1={:.4}",
            r.macro_precision, r.macro_recall, r.macro_f1
        );
    }
    let manifest = RunManifest::new("score", &[&a.gold, &a.pred], a);
    match &a.out {
        None => emit_json(None, &out, &manifest),
        Some(dir) => {
            let staged = StagedDir::new(dir)?;
            let mut json = serde_json::to_vec_pretty(&out)?;
            json.push(b'\n');
            staged.write("report.json", &json)?;
            let mut w = csv::Writer::from_writer(Vec::new());
            for row in &table {
                w.write_record(row)?;
            }
            staged.write("report.csv", &w.into_inner().context("flushing CSV")?)?;
            staged.commit(&manifest)
        }
    }
}

fn run_iaa(a: &IaaArgs) -> Result<()> {
    let ca = load_corpus(&a.a)?;
    let cb = load_corpus(&a.b)?;
    let report = iaa(&ca, &cb)?;
    emit_json(a.out.as_deref(), &report, &RunManifest::new("iaa", &[&a.a, &a.b], a))
}

fn run_stats(a: &StatsArgs) -> Result<()> {
    let corpus = load_corpus(&a.corpus)?;
    let table = corpus::stats(corpus.values());
    emit_json(a.out.as_deref(), &table, &RunManifest::new("stats", &[&a.corpus], a))
}

fn run_split(a: &SplitArgs) -> Result<()> {
    if a.names.len() != a.ratios.len() {
        bail!("{} split names for {} ratios", a.names.len(), a.ratios.len());
    }
    let ids = corpus::document_ids(&a.corpus).with_context(|| format!("listing {}", a.corpus.display()))?;
    let parts = corpus::split(&ids, &a.ratios, a.seed)?;
    let staged = StagedDir::new(&a.out)?;
    let mut listing = BTreeMap::new();
    for (name, part) in a.names.iter().zip(&parts) {
        let dir = staged.path().join(name);
        fs::create_dir_all(&dir)?;
        for id in part {
            for ext in ["txt", "ann"] {
                let src = a.corpus.join(format!("{id}.{ext}"));
                if src.exists() {
                    fs::copy(&src, dir.join(format!("{id}.{ext}")))
                        .with_context(|| format!("copying {}", src.display()))?;
                }
            }
        }
        let mut sorted = part.clone();
        sorted.sort();
        listing.insert(name.clone(), sorted);
    }
    let mut json = serde_json::to_vec_pretty(&listing)?;
    json.push(b'\n');
    staged.write("split.json", &json)?;
    staged.commit(&RunManifest::new("split", &[&a.corpus], a))?;
    let sizes: Vec<String> = a.names.iter().zip(&parts).map(|(n, p)| format!("{n}={}", p.len())).collect();
    eprintln!("{}", sizes.join(" "));
    Ok(())
}

fn run_synth(a: &SynthArgs) -> Result<()> {
    let synth = match (&a.templates, &a.lexicon) {
        (Some(t), Some(l)) => Synthesizer::new(&read(t)?, &read(l)?)?,
        _ => Synthesizer::french(),
    };
    let docs = synth.generate(a.n, a.seed)?;
    let staged = StagedDir::new(&a.out)?;
    corpus::write_corpus(staged.path(), &docs)?;
    let inputs: Vec<&Path> = a.templates.iter().chain(&a.lexicon).map(PathBuf::as_path).collect();
    staged.commit(&RunManifest::new("synth", &inputs, a))?;
    eprintln!("wrote {} documents to {}", docs.len(), a.out.display());
    Ok(())
}

#[derive(Deserialize)]
struct PatientRow {
    doc_id: String,
    patient_id: String,
}

#[derive(Deserialize)]
struct CodeRow {
    patient_id: String,
    code: String,
}

fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("reading {}", path.display()))?;
    r.deserialize()
        .enumerate()
        .map(|(i, row)| row.with_context(|| format!("{}: row {}", path.display(), i + 2)))
        .collect()
}

fn run_zcode(a: &ZcodeArgs) -> Result<()> {
    let map = match &a.map {
        Some(p) => ZCodeMap::parse(&read(p)?).with_context(|| format!("parsing {}", p.display()))?,
        None => default_map(),
    };
    let events = events_of(&load_corpus(&a.corpus)?, "annotated")?;
    let mut text: BTreeMap<String, Vec<SdohEvent>> = BTreeMap::new();
    let mut seen = BTreeSet::new();
    for row in read_csv::<PatientRow>(&a.patients)? {
        let evs = events.get(&row.doc_id).with_context(|| {
            format!("{}: document {} is not in {}", a.patients.display(), row.doc_id, a.corpus.display())
        })?;
        text.entry(row.patient_id).or_default().extend(evs.iter().cloned());
        seen.insert(row.doc_id);
    }
    if let Some(missing) = events.keys().find(|d| !seen.contains(*d)) {
        bail!("document {missing} has no patient in {}", a.patients.display());
    }
    let mut codes: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for row in read_csv::<CodeRow>(&a.codes)? {
        codes.entry(row.patient_id).or_default().insert(row.code);
    }
    let report = completeness_report(&text, &codes, &map);
    let inputs = [a.corpus.as_path(), &a.patients, &a.codes];
    emit_json(a.out.as_deref(), &report, &RunManifest::new("zcode-report", &inputs, a))
}

fn run(cli: Cli) -> Result<bool> {
    if let Some(n) = cli.jobs {
        par::configure_threads(n);
    }
    match &cli.command {
        Command::Validate(a) => return run_validate(a),
        Command::Section(a) => run_section(a)?,
        Command::Linearize(a) => run_linearize(a)?,
        Command::Decode(a) => run_decode(a)?,
        Command::Score(a) => run_score(a)?,
        Command::Iaa(a) => run_iaa(a)?,
        Command::Stats(a) => run_stats(a)?,
        Command::Split(a) => run_split(a)?,
        Command::Synth(a) => run_synth(a)?,
        Command::ZcodeReport(a) => run_zcode(a)?,
        Command::SchemaDump(a) => emit_json(
            a.out.as_deref(),
            &schema::schema_document(),
            &RunManifest::new("schema-dump", &[], a),
        )?,
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;
    use sdoh_core::section::SOCIAL_HISTORY;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn section_header_constant_matches_default_config() {
        assert!(SectionConfig::default().names().any(|n| n == SOCIAL_HISTORY));
    }
}
