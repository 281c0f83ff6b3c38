//! Structured vs free-text SDoH completeness through ICD-10 Z-codes.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::schema::{SdohCategory, SdohEvent};

/// Default manual mapping: code, category, optional value qualifier.
pub const DEFAULT_TABLE: &str = "\
Z502\tAlcohol\tcurrent,past
Z714\tAlcohol\tcurrent,past
Z720\tTobacco\tcurrent
Z503\tDrug
Z290\tLivingCondition\talone
Z602\tLivingCondition\talone
Z370\tDescendants\tyes
Z372\tDescendants\tyes
Z391\tDescendants\tyes
Z392\tDescendants\tyes
Z590\tHousing\tno
Z598\tHousing\tno
Z603\tEthnicity
";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ZCodeError {
    #[error("line {line}: unknown category {name:?}")]
    UnknownCategory { line: usize, name: String },
    #[error("line {line}: duplicate code {code}")]
    DuplicateCode { line: usize, code: String },
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZCodeTarget {
    pub category: SdohCategory,
    pub value: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ZCodeMap {
    codes: BTreeMap<String, ZCodeTarget>,
}

/// Uppercase, strip dots and surrounding whitespace: "z59.0" -> "Z590".
pub fn normalize_code(code: &str) -> String {
    code.trim()
        .chars()
        .filter(|c| *c != '.')
        .flat_map(char::to_uppercase)
        .collect()
}

impl ZCodeMap {
    pub fn parse(tsv: &str) -> Result<ZCodeMap, ZCodeError> {
        let mut codes = BTreeMap::new();
        for (i, raw) in tsv.lines().enumerate() {
            let line = i + 1;
            if raw.trim().is_empty() || raw.trim_start().starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = raw.split('\t').map(str::trim).collect();
            if !(2..=3).contains(&cols.len()) || cols[0].is_empty() {
                return Err(ZCodeError::Malformed {
                    line,
                    reason: format!("expected 2 or 3 tab-separated columns, got {}", cols.len()),
                });
            }
            let code = normalize_code(cols[0]);
            let category = cols[1]
                .parse::<SdohCategory>()
                .map_err(|_| ZCodeError::UnknownCategory {
                    line,
                    name: cols[1].to_string(),
                })?;
            let value = cols.get(2).filter(|v| !v.is_empty()).map(|v| v.to_string());
            if codes.contains_key(&code) {
                return Err(ZCodeError::DuplicateCode { line, code });
            }
            codes.insert(code, ZCodeTarget { category, value });
        }
        Ok(ZCodeMap { codes })
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &ZCodeTarget)> {
        self.codes.iter().map(|(k, v)| (k.as_str(), v))
    }

    /// Exact match on the normalized code, else the longest mapped prefix
    /// (so a subcode such as Z60.20 falls under Z602).
    pub fn lookup(&self, code: &str) -> Option<&ZCodeTarget> {
        let code = normalize_code(code);
        (3..=code.len())
            .rev()
            .filter(|&n| code.is_char_boundary(n))
            .find_map(|n| self.codes.get(&code[..n]))
    }
}

pub fn default_map() -> ZCodeMap {
    ZCodeMap::parse(DEFAULT_TABLE).expect("default Z-code table is valid")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletenessReport {
    pub n: usize,
    pub text_count: usize,
    pub text_percent: f64,
    pub structured_count: usize,
    pub structured_percent: f64,
    /// Patients where a mapped code and a text event share a category.
    pub overlap: usize,
    /// Patients with any text event and any mapped code.
    pub copresence: usize,
}

/// `count / n` as a percentage rounded half-up to one decimal, in integer
/// arithmetic so that ties are exact.
pub fn percent_1dp(count: usize, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let tenths = (2 * 1000 * count as u128 + n as u128) / (2 * n as u128);
    tenths as f64 / 10.0
}

/// Report from per-patient category sets. Patients absent from one side count
/// toward `n` with nothing on that side.
pub fn completeness_from_categories(
    text: &BTreeMap<String, BTreeSet<SdohCategory>>,
    structured: &BTreeMap<String, BTreeSet<SdohCategory>>,
) -> CompletenessReport {
    let empty = BTreeSet::new();
    let ids: BTreeSet<&String> = text.keys().chain(structured.keys()).collect();
    let (mut t, mut s, mut overlap, mut copresence) = (0, 0, 0, 0);
    for id in &ids {
        let tc = text.get(*id).unwrap_or(&empty);
        let sc = structured.get(*id).unwrap_or(&empty);
        t += usize::from(!tc.is_empty());
        s += usize::from(!sc.is_empty());
        copresence += usize::from(!tc.is_empty() && !sc.is_empty());
        overlap += usize::from(!tc.is_disjoint(sc));
    }
    let n = ids.len();
    CompletenessReport {
        n,
        text_count: t,
        text_percent: percent_1dp(t, n),
        structured_count: s,
        structured_percent: percent_1dp(s, n),
        overlap,
        copresence,
    }
}

pub fn completeness_report(
    text: &BTreeMap<String, Vec<SdohEvent>>,
    codes: &BTreeMap<String, BTreeSet<String>>,
    map: &ZCodeMap,
) -> CompletenessReport {
    let text_cats = text
        .iter()
        .map(|(id, evs)| (id.clone(), evs.iter().map(SdohEvent::category).collect()))
        .collect();
    let code_cats = codes
        .iter()
        .map(|(id, cs)| {
            let cats = cs.iter().filter_map(|c| map.lookup(c)).map(|t| t.category).collect();
            (id.clone(), cats)
        })
        .collect();
    completeness_from_categories(&text_cats, &code_cats)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_parse() {
        let m = ZCodeMap::parse("Z720\tTobacco\tcurrent\nZ59.0\tHousing\tNo\nz603\tEthnicity/Country of birth\n").unwrap();
        assert_eq!(
            m.lookup("Z720"),
            Some(&ZCodeTarget {
                category: SdohCategory::Tobacco,
                value: Some("current".into())
            })
        );
        assert_eq!(m.lookup("Z590").unwrap().value.as_deref(), Some("No"));
        assert_eq!(m.lookup("Z60.3").unwrap().category, SdohCategory::Ethnicity);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            ZCodeMap::parse("Z720\tTobacco\nZ72.0\tAlcohol\n"),
            Err(ZCodeError::DuplicateCode { line: 2, .. })
        ));
        assert!(matches!(
            ZCodeMap::parse("Z720\tWeather\n"),
            Err(ZCodeError::UnknownCategory { line: 1, .. })
        ));
        assert!(matches!(ZCodeMap::parse("Z720\n"), Err(ZCodeError::Malformed { .. })));
    }

    #[test]
    fn default_table_and_subcodes() {
        let m = default_map();
        assert_eq!(m.len(), 13);
        assert_eq!(m.lookup("Z60.20").unwrap().category, SdohCategory::LivingCondition);
        assert_eq!(m.lookup("Z29.0").unwrap().category, SdohCategory::LivingCondition);
        assert!(m.lookup("Z60.0").is_none());
        assert!(m.lookup("I10").is_none());
    }

    #[test]
    fn rounding() {
        assert_eq!(percent_1dp(1621, 1646), 98.5);
        assert_eq!(percent_1dp(46, 1646), 2.8);
        assert_eq!(percent_1dp(1, 8), 12.5);
        assert_eq!(percent_1dp(1, 16), 6.3);
        assert_eq!(percent_1dp(0, 0), 0.0);
    }

    fn cats(v: &[(&str, &[SdohCategory])]) -> BTreeMap<String, BTreeSet<SdohCategory>> {
        v.iter()
            .map(|(id, c)| (id.to_string(), c.iter().copied().collect()))
            .collect()
    }

    #[test]
    fn overlap_needs_same_category() {
        use SdohCategory::*;
        let text = cats(&[("p1", &[Tobacco]), ("p2", &[Alcohol]), ("p3", &[])]);
        let codes = cats(&[("p1", &[Tobacco]), ("p2", &[LivingCondition]), ("p4", &[Housing])]);
        let r = completeness_from_categories(&text, &codes);
        assert_eq!(r.n, 4);
        assert_eq!(r.text_count, 2);
        assert_eq!(r.structured_count, 3);
        assert_eq!(r.overlap, 1);
        assert_eq!(r.copresence, 2);
        assert_eq!(r.text_percent, 50.0);
        assert_eq!(r.structured_percent, 75.0);
    }

    #[test]
    fn no_codes() {
        let text = cats(&[("p1", &[SdohCategory::Tobacco])]);
        let r = completeness_from_categories(&text, &BTreeMap::new());
        assert_eq!(r.structured_percent, 0.0);
        assert_eq!(r.overlap, 0);
    }
}
