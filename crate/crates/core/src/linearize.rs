//! Linearization of gold events into the model-facing target sequence.
//!
//! Grammar:
//!
//! ```text
//! sequence := "[NONE]" | event (" [SEP] " event)*
//! event    := "[" LABEL "] " trigger-surface slot*
//! slot     := " [StatusTime:" VALUE "] " status-surface
//!           | " [" KIND "] " argument-surface
//! ```
//!
//! Events appear in trigger start order; slots (status included) in start
//! order of the entity they point to. Surfaces are copied verbatim from the
//! text, except that tabs and line breaks become single spaces.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::brat::{flatten_surface, Document, DocumentAnnotation, EntityAnnotation, Span};
use crate::schema::{to_events, SchemaError, SdohEvent};

pub const NONE_TOKEN: &str = "[NONE]";
pub const SEP_TOKEN: &str = "[SEP]";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LinearizeError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Schema(#[from] SchemaError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinearizedSequence {
    pub doc_id: String,
    pub text: String,
}

/// One training record: model input and target sequence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingPair {
    pub doc_id: String,
    pub input: String,
    pub target: String,
}

fn check_surface(doc: &Document, e: &EntityAnnotation) -> Result<(), LinearizeError> {
    match doc.surface(&e.spans) {
        Some(s) if s == e.surface => Ok(()),
        _ => Err(LinearizeError::InvalidInput(format!(
            "entity {} surface {:?} does not match document {}",
            e.id, e.surface, doc.id
        ))),
    }
}

pub fn linearize(doc: &Document, events: &[SdohEvent]) -> Result<LinearizedSequence, LinearizeError> {
    if events
        .windows(2)
        .any(|w| w[0].trigger.start() > w[1].trigger.start())
    {
        return Err(LinearizeError::InvalidInput(
            "events are not sorted by trigger start offset".to_string(),
        ));
    }
    let mut rendered = Vec::with_capacity(events.len());
    for ev in events {
        ev.check()?;
        check_surface(doc, &ev.trigger)?;

        let mut slots: Vec<(usize, usize, String)> = Vec::new();
        if let Some(status) = &ev.status {
            let anchor = status.anchor.as_ref().ok_or_else(|| {
                LinearizeError::InvalidInput(format!(
                    "status of {} has no StatusTime entity",
                    ev.trigger.id
                ))
            })?;
            check_surface(doc, anchor)?;
            slots.push((
                anchor.start(),
                anchor.end(),
                format!("[StatusTime:{}] {}", status.value, flatten_surface(&anchor.surface)),
            ));
        }
        for arg in &ev.args {
            check_surface(doc, &arg.entity)?;
            slots.push((
                arg.entity.start(),
                arg.entity.end(),
                format!("[{}] {}", arg.kind, flatten_surface(&arg.entity.surface)),
            ));
        }
        slots.sort_by_key(|(s, e, _)| (*s, *e));

        let mut out = format!("[{}] {}", ev.trigger.label, flatten_surface(&ev.trigger.surface));
        for (_, _, slot) in slots {
            out.push(' ');
            out.push_str(&slot);
        }
        rendered.push(out);
    }
    let text = if rendered.is_empty() {
        NONE_TOKEN.to_string()
    } else {
        rendered.join(&format!(" {SEP_TOKEN} "))
    };
    Ok(LinearizedSequence {
        doc_id: doc.id.clone(),
        text,
    })
}

fn event_within(ev: &SdohEvent, window: Span) -> bool {
    let inside = |e: &EntityAnnotation| e.spans.iter().all(|s| window.contains(s));
    inside(&ev.trigger)
        && ev
            .status
            .as_ref()
            .and_then(|s| s.anchor.as_ref())
            .map_or(true, inside)
        && ev.args.iter().all(|a| inside(&a.entity))
}

/// Build a training pair for a schema-valid document. With a `window`
/// (typically the social-history section) the input is restricted to that
/// span and only events lying entirely inside it are kept.
pub fn training_pair(
    ann: &DocumentAnnotation,
    window: Option<Span>,
) -> Result<TrainingPair, LinearizeError> {
    let mut events = to_events(ann)?;
    let input = match window {
        Some(w) => {
            events.retain(|ev| event_within(ev, w));
            ann.doc
                .slice(w)
                .ok_or_else(|| LinearizeError::InvalidInput(format!("window {w} out of range")))?
                .to_string()
        }
        None => ann.doc.text().to_string(),
    };
    let seq = linearize(&ann.doc, &events)?;
    Ok(TrainingPair {
        doc_id: ann.doc.id.clone(),
        input,
        target: seq.text,
    })
}
