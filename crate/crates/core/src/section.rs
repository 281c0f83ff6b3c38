//! Rule-based section extraction for semi-structured notes.
//!
//! A header is a whole line matching one of a section's patterns,
//! case-insensitively, optionally followed by `:` and whitespace. A section
//! runs from the end of its header line to the start of the next header line
//! (or the end of the note), trimmed of surrounding whitespace.
//!
//! Config files are plain text, one `name = pattern` pair per line; repeating
//! a name adds patterns, and sections keep the order of first appearance.
//! Lines starting with `#` are comments.

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::brat::{Document, Span};

pub const SOCIAL_HISTORY: &str = "social_history";

/// Default French headers. The header inventory of the original corpus is
/// unpublished; these are a best-effort starting point.
pub const DEFAULT_CONFIG: &str = "\
social_history = Mode de vie
social_history = Habitus
social_history = Contexte social
social_history = Situation sociale
history = Antécédents( médicaux)?( et chirurgicaux)?
medications = Traitements?( habituels?)?( à l'entrée)?
disease_history = Histoire de la maladie
conclusion = Conclusion
";

#[derive(Debug, Error)]
pub enum SectionError {
    #[error("section {section}: invalid pattern {pattern:?}: {source}")]
    InvalidPattern {
        section: String,
        pattern: String,
        #[source]
        source: regex::Error,
    },
    #[error("config line {line}: {reason}")]
    BadConfig { line: usize, reason: String },
}

#[derive(Debug, Clone)]
struct SectionRule {
    name: String,
    patterns: Vec<Regex>,
}

#[derive(Debug, Clone)]
pub struct SectionConfig {
    rules: Vec<SectionRule>,
}

impl SectionConfig {
    pub fn new<N, P>(sections: impl IntoIterator<Item = (N, Vec<P>)>) -> Result<SectionConfig, SectionError>
    where
        N: Into<String>,
        P: AsRef<str>,
    {
        let mut rules = Vec::new();
        for (name, patterns) in sections {
            let name = name.into();
            if patterns.is_empty() {
                return Err(SectionError::BadConfig {
                    line: 0,
                    reason: format!("section {name} has no patterns"),
                });
            }
            let mut compiled = Vec::new();
            for p in patterns {
                let p = p.as_ref();
                let re = Regex::new(&format!(r"(?i)^[ \t]*(?:{p})[ \t]*:?[ \t]*$")).map_err(|source| {
                    SectionError::InvalidPattern {
                        section: name.clone(),
                        pattern: p.to_string(),
                        source,
                    }
                })?;
                compiled.push(re);
            }
            rules.push(SectionRule {
                name,
                patterns: compiled,
            });
        }
        if rules.is_empty() {
            return Err(SectionError::BadConfig {
                line: 0,
                reason: "no sections configured".into(),
            });
        }
        Ok(SectionConfig { rules })
    }

    pub fn parse(text: &str) -> Result<SectionConfig, SectionError> {
        let mut sections: Vec<(String, Vec<String>)> = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (name, pattern) = line.split_once('=').ok_or_else(|| SectionError::BadConfig {
                line: i + 1,
                reason: "expected `name = pattern`".into(),
            })?;
            let (name, pattern) = (name.trim(), pattern.trim());
            if name.is_empty() || pattern.is_empty() {
                return Err(SectionError::BadConfig {
                    line: i + 1,
                    reason: "empty section name or pattern".into(),
                });
            }
            match sections.iter_mut().find(|(n, _)| n == name) {
                Some((_, ps)) => ps.push(pattern.to_string()),
                None => sections.push((name.to_string(), vec![pattern.to_string()])),
            }
        }
        SectionConfig::new(sections)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.rules.iter().map(|r| r.name.as_str())
    }

    fn header_of(&self, line: &str) -> Option<&str> {
        self.rules
            .iter()
            .find(|r| r.patterns.iter().any(|p| p.is_match(line)))
            .map(|r| r.name.as_str())
    }
}

impl Default for SectionConfig {
    fn default() -> SectionConfig {
        SectionConfig::parse(DEFAULT_CONFIG).expect("default section config is valid")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Section {
    pub name: String,
    /// Char span in the note, header line excluded.
    pub span: Span,
    pub text: String,
}

struct Line {
    start: usize,
    /// First char after the line terminator.
    next: usize,
    text_end: usize,
}

fn lines(text: &str) -> Vec<Line> {
    let mut out = Vec::new();
    let mut start = 0;
    let mut pos = 0;
    for c in text.chars() {
        pos += 1;
        if c == '\n' {
            out.push(Line {
                start,
                next: pos,
                text_end: pos - 1,
            });
            start = pos;
        }
    }
    if start < pos {
        out.push(Line {
            start,
            next: pos,
            text_end: pos,
        });
    }
    out
}

/// All sections of `note`, in order. Sections with no content are skipped.
pub fn extract_sections(note: &Document, cfg: &SectionConfig) -> Vec<Section> {
    let chars: Vec<char> = note.text().chars().collect();
    let mut headers: Vec<(&str, usize, usize)> = Vec::new();
    for line in lines(note.text()) {
        let s: String = chars[line.start..line.text_end].iter().collect();
        let s = s.strip_suffix('\r').unwrap_or(&s);
        if let Some(name) = cfg.header_of(s) {
            headers.push((name, line.start, line.next));
        }
    }
    let mut out = Vec::new();
    for (i, (name, _, body_start)) in headers.iter().enumerate() {
        let body_end = headers.get(i + 1).map_or(chars.len(), |h| h.1);
        let mut s = *body_start;
        let mut e = body_end;
        while s < e && chars[s].is_whitespace() {
            s += 1;
        }
        while e > s && chars[e - 1].is_whitespace() {
            e -= 1;
        }
        let Some(span) = Span::new(s, e) else { continue };
        out.push(Section {
            name: name.to_string(),
            span,
            text: chars[s..e].iter().collect(),
        });
    }
    out
}

/// The first social-history section, if any.
pub fn social_history(note: &Document, cfg: &SectionConfig) -> Option<Section> {
    extract_sections(note, cfg)
        .into_iter()
        .find(|s| s.name == SOCIAL_HISTORY)
}
