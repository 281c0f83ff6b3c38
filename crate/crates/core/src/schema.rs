//! The SDoH annotation scheme: 31 entity labels, 6 relation kinds, the
//! permitted and required trigger/argument pairings, validation, and the
//! assembly of flat annotations into [`SdohEvent`]s.
//!
//! Relation pairings:
//!
//! | kind      | triggers                                   | argument label |
//! |-----------|--------------------------------------------|----------------|
//! | Status    | Tobacco, Alcohol, Drug (required, exactly one) | StatusTime |
//! | Amount    | Descendants_Yes, Tobacco, Alcohol, Drug    | Amount         |
//! | Duration  | Tobacco, Alcohol, Drug                     | Duration       |
//! | Frequency | PhysicalActivity_*, Tobacco, Alcohol, Drug | Frequency      |
//! | History   | any trigger-eligible label                 | History        |
//! | Type      | Descendants_Yes, Tobacco, Alcohol, Drug    | Type           |
//!
//! The published relation table lists the Duration rows as "Tobacco – Amount"
//! etc.; that is read here as Duration on the three substances.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::brat::{DocumentAnnotation, EntityAnnotation};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SchemaError {
    #[error("unknown schema label `{0}`")]
    UnknownLabel(String),
    #[error("unknown relation kind `{0}`")]
    UnknownRelationKind(String),
    #[error("unknown status value `{0}`")]
    UnknownStatus(String),
    #[error("unknown SDoH category `{0}`")]
    UnknownCategory(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

macro_rules! closed_enum {
    (
        $(#[$meta:meta])*
        pub enum $name:ident { $($variant:ident => $text:literal),+ $(,)? }
    ) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        pub enum $name {
            $(
                #[serde(rename = $text)]
                $variant,
            )+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self {
                    $($name::$variant => $text,)+
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }
    };
}

closed_enum! {
    /// The 31 entity labels. The first 25 may anchor an event; the last six
    /// only ever appear as relation arguments.
    pub enum SchemaLabel {
        LivingAlone => "Living_Alone",
        LivingWithOthers => "Living_WithOthers",
        MaritalStatusSingle => "MaritalStatus_Single",
        MaritalStatusInRelationship => "MaritalStatus_InRelationship",
        MaritalStatusDivorced => "MaritalStatus_Divorced",
        MaritalStatusWidowed => "MaritalStatus_Widowed",
        DescendantsYes => "Descendants_Yes",
        DescendantsNo => "Descendants_No",
        Job => "Job",
        LastJob => "Last_job",
        EmploymentWorking => "Employment_Working",
        EmploymentUnemployed => "Employment_Unemployed",
        EmploymentStudent => "Employment_Student",
        EmploymentPensioner => "Employment_Pensioner",
        EmploymentOther => "Employment_Other",
        Alcohol => "Alcohol",
        Tobacco => "Tobacco",
        Drug => "Drug",
        HousingYes => "Housing_Yes",
        HousingNo => "Housing_No",
        PhysicalActivityYes => "PhysicalActivity_Yes",
        PhysicalActivityNo => "PhysicalActivity_No",
        Income => "Income",
        Education => "Education",
        Ethnicity => "Ethnicity",
        StatusTime => "StatusTime",
        History => "History",
        Duration => "Duration",
        Amount => "Amount",
        Frequency => "Frequency",
        Type => "Type",
    }
}

closed_enum! {
    pub enum RelationKind {
        Status => "Status",
        Amount => "Amount",
        Duration => "Duration",
        Frequency => "Frequency",
        History => "History",
        Type => "Type",
    }
}

closed_enum! {
    /// Value of the `StatusValue` attribute carried by a StatusTime entity.
    pub enum StatusValue {
        Current => "current",
        Past => "past",
        Never => "none",
    }
}

closed_enum! {
    /// Scoring categories, one row each in the per-category report.
    pub enum SdohCategory {
        LivingCondition => "LivingCondition",
        MaritalStatus => "MaritalStatus",
        Descendants => "Descendants",
        Housing => "Housing",
        Employment => "Employment",
        Alcohol => "Alcohol",
        Tobacco => "Tobacco",
        Drug => "Drug",
        PhysicalActivity => "PhysicalActivity",
        Job => "Job",
        LastJob => "LastJob",
        Income => "Income",
        Education => "Education",
        Ethnicity => "Ethnicity",
    }
}

impl FromStr for SchemaLabel {
    type Err = SchemaError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SchemaLabel::ALL
            .iter()
            .copied()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| SchemaError::UnknownLabel(s.to_string()))
    }
}

impl FromStr for RelationKind {
    type Err = SchemaError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RelationKind::ALL
            .iter()
            .copied()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| SchemaError::UnknownRelationKind(s.to_string()))
    }
}

impl FromStr for StatusValue {
    type Err = SchemaError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        StatusValue::ALL
            .iter()
            .copied()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| SchemaError::UnknownStatus(s.to_string()))
    }
}

/// Case-insensitive; also accepts the display names used in published tables
/// ("Living condition", "Last job", "Ethnicity/Country of birth").
impl FromStr for SdohCategory {
    type Err = SchemaError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s
            .chars()
            .take_while(|c| *c != '/' && *c != '(')
            .filter(|c| c.is_alphanumeric())
            .flat_map(char::to_lowercase)
            .collect();
        SdohCategory::ALL
            .iter()
            .copied()
            .find(|c| c.as_str().to_lowercase() == key)
            .ok_or_else(|| SchemaError::UnknownCategory(s.to_string()))
    }
}

impl SchemaLabel {
    pub fn is_trigger(self) -> bool {
        !self.is_argument_only()
    }

    pub fn is_argument_only(self) -> bool {
        matches!(
            self,
            SchemaLabel::StatusTime
                | SchemaLabel::History
                | SchemaLabel::Duration
                | SchemaLabel::Amount
                | SchemaLabel::Frequency
                | SchemaLabel::Type
        )
    }

    pub fn is_substance(self) -> bool {
        matches!(
            self,
            SchemaLabel::Alcohol | SchemaLabel::Tobacco | SchemaLabel::Drug
        )
    }

    /// Labels whose value is part of the label itself (Living_*, Housing_*, ...),
    /// as opposed to span-only labels.
    pub fn is_valued(self) -> bool {
        self.is_trigger() && !self.is_substance() && !self.is_span_only_non_substance()
    }

    fn is_span_only_non_substance(self) -> bool {
        matches!(
            self,
            SchemaLabel::Job
                | SchemaLabel::LastJob
                | SchemaLabel::Income
                | SchemaLabel::Education
                | SchemaLabel::Ethnicity
        )
    }

    pub fn triggers() -> impl Iterator<Item = SchemaLabel> {
        SchemaLabel::ALL.iter().copied().filter(|l| l.is_trigger())
    }
}

impl RelationKind {
    /// The entity label a relation of this kind must point to.
    pub fn argument_label(self) -> SchemaLabel {
        match self {
            RelationKind::Status => SchemaLabel::StatusTime,
            RelationKind::Amount => SchemaLabel::Amount,
            RelationKind::Duration => SchemaLabel::Duration,
            RelationKind::Frequency => SchemaLabel::Frequency,
            RelationKind::History => SchemaLabel::History,
            RelationKind::Type => SchemaLabel::Type,
        }
    }

    pub fn for_argument_label(label: SchemaLabel) -> Option<RelationKind> {
        RelationKind::ALL
            .iter()
            .copied()
            .find(|k| k.argument_label() == label)
    }
}

/// Whether a relation of `kind` may have an entity labelled `trigger` as Arg1.
pub fn permits(kind: RelationKind, trigger: SchemaLabel) -> bool {
    use SchemaLabel as L;
    if !trigger.is_trigger() {
        return false;
    }
    match kind {
        RelationKind::Status | RelationKind::Duration => trigger.is_substance(),
        RelationKind::Amount | RelationKind::Type => {
            trigger.is_substance() || trigger == L::DescendantsYes
        }
        RelationKind::Frequency => {
            trigger.is_substance()
                || matches!(trigger, L::PhysicalActivityYes | L::PhysicalActivityNo)
        }
        RelationKind::History => true,
    }
}

/// Relation kinds an annotated trigger must carry.
pub fn required(trigger: SchemaLabel) -> &'static [RelationKind] {
    if trigger.is_substance() {
        &[RelationKind::Status]
    } else {
        &[]
    }
}

/// Scoring category of a trigger-eligible label.
pub fn category_of(label: SchemaLabel) -> Result<SdohCategory, SchemaError> {
    use SchemaLabel as L;
    use SdohCategory as C;
    Ok(match label {
        L::LivingAlone | L::LivingWithOthers => C::LivingCondition,
        L::MaritalStatusSingle
        | L::MaritalStatusInRelationship
        | L::MaritalStatusDivorced
        | L::MaritalStatusWidowed => C::MaritalStatus,
        L::DescendantsYes | L::DescendantsNo => C::Descendants,
        L::Job => C::Job,
        L::LastJob => C::LastJob,
        L::EmploymentWorking
        | L::EmploymentUnemployed
        | L::EmploymentStudent
        | L::EmploymentPensioner
        | L::EmploymentOther => C::Employment,
        L::Alcohol => C::Alcohol,
        L::Tobacco => C::Tobacco,
        L::Drug => C::Drug,
        L::HousingYes | L::HousingNo => C::Housing,
        L::PhysicalActivityYes | L::PhysicalActivityNo => C::PhysicalActivity,
        L::Income => C::Income,
        L::Education => C::Education,
        L::Ethnicity => C::Ethnicity,
        L::StatusTime | L::History | L::Duration | L::Amount | L::Frequency | L::Type => {
            return Err(SchemaError::InvalidInput(format!(
                "{label} is an argument-only label and has no category"
            )))
        }
    })
}

/// Closed list of rule names a [`SchemaViolation`] can carry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ViolationRule {
    /// Relation kind not allowed between these entity labels.
    ForbiddenPairing,
    /// Substance trigger without a Status relation.
    MissingRequiredStatus,
    /// Substance trigger with more than one Status relation.
    MultipleStatus,
    /// StatusTime entity reached by a Status relation but carrying no StatusValue.
    MissingStatusValue,
    /// StatusTime entity carrying more than one StatusValue.
    MultipleStatusValues,
    /// StatusValue attribute on an entity that is not a StatusTime.
    MisplacedStatusValue,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SchemaViolation {
    pub doc_id: String,
    pub annotation_id: String,
    pub rule: ViolationRule,
    pub message: String,
}

/// Check an annotated document against the scheme. An empty result means the
/// document is valid. The result is sorted, so it does not depend on the
/// order annotations appear in the input.
pub fn validate(ann: &DocumentAnnotation) -> Vec<SchemaViolation> {
    let doc_id = ann.doc.id.as_str();
    let by_id: HashMap<&str, &EntityAnnotation> =
        ann.entities.iter().map(|e| (e.id.as_str(), e)).collect();
    let mut out = Vec::new();
    let mut violation = |id: &str, rule, message: String| {
        out.push(SchemaViolation {
            doc_id: doc_id.to_string(),
            annotation_id: id.to_string(),
            rule,
            message,
        })
    };

    let mut values_per_target: HashMap<&str, usize> = HashMap::new();
    for attr in &ann.attributes {
        match by_id.get(attr.target.as_str()) {
            Some(e) if e.label == SchemaLabel::StatusTime => {
                *values_per_target.entry(attr.target.as_str()).or_default() += 1;
            }
            Some(e) => violation(
                &attr.id,
                ViolationRule::MisplacedStatusValue,
                format!("StatusValue targets {} labelled {}", e.id, e.label),
            ),
            None => {}
        }
    }

    let mut status_per_trigger: HashMap<&str, Vec<&str>> = HashMap::new();
    for rel in &ann.relations {
        let (Some(trigger), Some(arg)) = (
            by_id.get(rel.trigger.as_str()),
            by_id.get(rel.argument.as_str()),
        ) else {
            continue;
        };
        if !permits(rel.kind, trigger.label) || arg.label != rel.kind.argument_label() {
            violation(
                &rel.id,
                ViolationRule::ForbiddenPairing,
                format!(
                    "{} relation not permitted between {} and {}",
                    rel.kind, trigger.label, arg.label
                ),
            );
            continue;
        }
        if rel.kind == RelationKind::Status {
            status_per_trigger
                .entry(trigger.id.as_str())
                .or_default()
                .push(arg.id.as_str());
        }
    }

    for e in &ann.entities {
        if !e.label.is_trigger() {
            continue;
        }
        let statuses = status_per_trigger
            .get(e.id.as_str())
            .map(Vec::as_slice)
            .unwrap_or(&[]);
        if required(e.label).contains(&RelationKind::Status) {
            match statuses.len() {
                0 => violation(
                    &e.id,
                    ViolationRule::MissingRequiredStatus,
                    format!("{} trigger has no Status relation", e.label),
                ),
                1 => {}
                n => violation(
                    &e.id,
                    ViolationRule::MultipleStatus,
                    format!("{} trigger has {n} Status relations", e.label),
                ),
            }
        }
    }

    let mut status_targets: Vec<&str> = status_per_trigger.values().flatten().copied().collect();
    status_targets.sort_unstable();
    status_targets.dedup();
    for target in status_targets {
        match values_per_target.get(target).copied().unwrap_or(0) {
            0 => violation(
                target,
                ViolationRule::MissingStatusValue,
                "StatusTime entity has no StatusValue attribute".to_string(),
            ),
            1 => {}
            n => violation(
                target,
                ViolationRule::MultipleStatusValues,
                format!("StatusTime entity has {n} StatusValue attributes"),
            ),
        }
    }

    out.sort();
    out
}

/// Status of a substance event: the value, and the StatusTime entity that
/// expresses it when one is known.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventStatus {
    pub value: StatusValue,
    pub anchor: Option<EntityAnnotation>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventArg {
    pub kind: RelationKind,
    pub entity: EntityAnnotation,
}

/// A trigger entity with its status and typed arguments.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SdohEvent {
    pub trigger: EntityAnnotation,
    pub status: Option<EventStatus>,
    /// Sorted by argument start offset. Never contains `RelationKind::Status`.
    pub args: Vec<EventArg>,
}

impl SdohEvent {
    pub fn label(&self) -> SchemaLabel {
        self.trigger.label
    }

    pub fn category(&self) -> SdohCategory {
        category_of(self.trigger.label).expect("event trigger is trigger-eligible")
    }

    /// Check the event-level invariants.
    pub fn check(&self) -> Result<(), SchemaError> {
        let label = self.trigger.label;
        if !label.is_trigger() {
            return Err(SchemaError::InvalidInput(format!(
                "{label} cannot be an event trigger"
            )));
        }
        if label.is_substance() != self.status.is_some() {
            return Err(SchemaError::InvalidInput(format!(
                "status must be present exactly for substance triggers ({label})"
            )));
        }
        if let Some(anchor) = self.status.as_ref().and_then(|s| s.anchor.as_ref()) {
            if anchor.label != SchemaLabel::StatusTime {
                return Err(SchemaError::InvalidInput(format!(
                    "status anchor labelled {}",
                    anchor.label
                )));
            }
        }
        for arg in &self.args {
            if arg.kind == RelationKind::Status
                || !permits(arg.kind, label)
                || arg.entity.label != arg.kind.argument_label()
            {
                return Err(SchemaError::InvalidInput(format!(
                    "{} argument labelled {} not permitted on {label}",
                    arg.kind, arg.entity.label
                )));
            }
        }
        if self
            .args
            .windows(2)
            .any(|w| w[0].entity.start() > w[1].entity.start())
        {
            return Err(SchemaError::InvalidInput(
                "event arguments are not sorted by start offset".to_string(),
            ));
        }
        Ok(())
    }
}

/// Assemble the events of a schema-valid document, one per trigger-eligible
/// entity, sorted by trigger start offset.
pub fn to_events(ann: &DocumentAnnotation) -> Result<Vec<SdohEvent>, SchemaError> {
    let violations = validate(ann);
    if let Some(v) = violations.first() {
        return Err(SchemaError::InvalidInput(format!(
            "{} violation(s) in {}, first: {:?} on {}: {}",
            violations.len(),
            ann.doc.id,
            v.rule,
            v.annotation_id,
            v.message
        )));
    }
    let by_id: HashMap<&str, &EntityAnnotation> =
        ann.entities.iter().map(|e| (e.id.as_str(), e)).collect();
    let value_of: HashMap<&str, StatusValue> = ann
        .attributes
        .iter()
        .map(|a| (a.target.as_str(), a.value))
        .collect();

    let mut relations_of: BTreeMap<&str, Vec<_>> = BTreeMap::new();
    for rel in &ann.relations {
        relations_of
            .entry(rel.trigger.as_str())
            .or_default()
            .push(rel);
    }

    let mut events = Vec::new();
    for trigger in ann.entities.iter().filter(|e| e.label.is_trigger()) {
        let mut status = None;
        let mut args = Vec::new();
        for rel in relations_of.get(trigger.id.as_str()).into_iter().flatten() {
            let arg = by_id[rel.argument.as_str()];
            if rel.kind == RelationKind::Status {
                status = Some(EventStatus {
                    value: value_of[arg.id.as_str()],
                    anchor: Some(arg.clone()),
                });
            } else {
                args.push(EventArg {
                    kind: rel.kind,
                    entity: arg.clone(),
                });
            }
        }
        args.sort_by(|a, b| {
            (a.entity.start(), a.entity.end(), a.kind).cmp(&(b.entity.start(), b.entity.end(), b.kind))
        });
        events.push(SdohEvent {
            trigger: trigger.clone(),
            status,
            args,
        });
    }
    events.sort_by(|a, b| {
        (a.trigger.start(), a.trigger.end(), a.trigger.label)
            .cmp(&(b.trigger.start(), b.trigger.end(), b.trigger.label))
    });
    Ok(events)
}

/// Machine-readable description of the scheme for downstream tools.
pub fn schema_document() -> serde_json::Value {
    let labels: Vec<_> = SchemaLabel::ALL
        .iter()
        .map(|l| {
            serde_json::json!({
                "label": l.as_str(),
                "trigger": l.is_trigger(),
                "substance": l.is_substance(),
                "category": category_of(*l).ok().map(|c| c.as_str()),
            })
        })
        .collect();
    let relations: Vec<_> = RelationKind::ALL
        .iter()
        .map(|k| {
            let triggers: Vec<_> = SchemaLabel::triggers()
                .filter(|t| permits(*k, *t))
                .map(|t| t.as_str())
                .collect();
            let required_on: Vec<_> = SchemaLabel::triggers()
                .filter(|t| required(*t).contains(k))
                .map(|t| t.as_str())
                .collect();
            serde_json::json!({
                "kind": k.as_str(),
                "argument": k.argument_label().as_str(),
                "permitted_triggers": triggers,
                "required_on": required_on,
            })
        })
        .collect();
    serde_json::json!({
        "labels": labels,
        "categories": SdohCategory::ALL.iter().map(|c| c.as_str()).collect::<Vec<_>>(),
        "relations": relations,
        "status_values": StatusValue::ALL.iter().map(|v| v.as_str()).collect::<Vec<_>>(),
    })
}
