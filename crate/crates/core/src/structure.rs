//! Notice and zone segmentation.
//!
//! A volume is a preamble followed by numbered notices, one per municipality.
//! The header line shape and the zone inventory come from a [`NoticeGrammar`],
//! which is loaded from TOML so that new sources only need new config.

use std::collections::{BTreeSet, HashSet};

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Document;
use crate::diag::Diagnostic;
use crate::span::Span;

pub const HEADER_ZONE: &str = "header";
pub const BODY_ZONE: &str = "body";

/// `<digits> <dash> <municipality>` with dash one of `-`, `–`, `—`.
pub const DEFAULT_HEADER_PATTERN: &str = r"(\d+)\s*[-–—]\s*(\S.*?)\s*";

#[derive(Debug, Error)]
pub enum GrammarError {
    #[error("invalid pattern {pattern:?}: {source}")]
    Pattern {
        pattern: String,
        #[source]
        source: Box<regex::Error>,
    },
    #[error("header pattern must have exactly two capture groups, found {0}")]
    CaptureCount(usize),
    #[error("zone label {0:?} is empty, reserved or duplicated")]
    ZoneLabel(String),
    #[error("grammar file: {0}")]
    Parse(#[from] toml::de::Error),
}

/// Serializable grammar description, as found in a grammar file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GrammarSpec {
    #[serde(default = "default_header_pattern")]
    pub header_pattern: String,
    #[serde(default)]
    pub zone_rules: Vec<ZoneRuleSpec>,
}

fn default_header_pattern() -> String {
    DEFAULT_HEADER_PATTERN.to_owned()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZoneRuleSpec {
    pub label: String,
    pub start_pattern: String,
}

impl Default for GrammarSpec {
    fn default() -> Self {
        let rule = |label: &str, start_pattern: &str| ZoneRuleSpec {
            label: label.into(),
            start_pattern: start_pattern.into(),
        };
        GrammarSpec {
            header_pattern: default_header_pattern(),
            zone_rules: vec![
                rule("finds", r"^\s*(?:Mobilier|Funde|Finds)\b"),
                rule("biblio", r"^\s*(?:Bibl\.|Bibliographie|Literatur|Bibliography)"),
            ],
        }
    }
}

/// Compiled grammar. The header pattern is anchored to the whole line.
#[derive(Debug, Clone)]
pub struct NoticeGrammar {
    header: Regex,
    zone_rules: Vec<(String, Regex)>,
}

impl Default for NoticeGrammar {
    fn default() -> Self {
        NoticeGrammar::compile(&GrammarSpec::default()).expect("default grammar compiles")
    }
}

impl NoticeGrammar {
    pub fn compile(spec: &GrammarSpec) -> Result<Self, GrammarError> {
        let compile = |p: &str| {
            Regex::new(p).map_err(|source| GrammarError::Pattern {
                pattern: p.to_owned(),
                source: Box::new(source),
            })
        };
        let header = compile(&format!("^(?:{})$", spec.header_pattern))?;
        if header.captures_len() != 3 {
            return Err(GrammarError::CaptureCount(header.captures_len() - 1));
        }
        let mut seen = HashSet::new();
        let mut zone_rules = Vec::with_capacity(spec.zone_rules.len());
        for rule in &spec.zone_rules {
            let label = rule.label.trim();
            if label.is_empty() || label == HEADER_ZONE || label == BODY_ZONE || !seen.insert(label) {
                return Err(GrammarError::ZoneLabel(rule.label.clone()));
            }
            zone_rules.push((label.to_owned(), compile(&rule.start_pattern)?));
        }
        Ok(NoticeGrammar { header, zone_rules })
    }

    pub fn from_toml(src: &str) -> Result<Self, GrammarError> {
        NoticeGrammar::compile(&toml::from_str(src)?)
    }

    /// Zone labels in rule order, excluding `header` and `body`.
    pub fn zone_labels(&self) -> impl Iterator<Item = &str> {
        self.zone_rules.iter().map(|(l, _)| l.as_str())
    }

    fn match_header<'a>(&self, line: &'a str) -> Option<(&'a str, &'a str)> {
        let caps = self.header.captures(line)?;
        Some((caps.get(1)?.as_str(), caps.get(2)?.as_str()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Zone {
    pub label: String,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Notice {
    pub notice_id: String,
    pub number: u64,
    pub municipality: String,
    pub span: Span,
    pub zones: Vec<Zone>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segmentation {
    pub preamble: Span,
    pub notices: Vec<Notice>,
    pub warnings: Vec<Diagnostic>,
}

/// A line of text with its scalar span, newline included.
#[derive(Debug, Clone, Copy)]
struct Line<'a> {
    text: &'a str,
    start: usize,
    end: usize,
}

fn lines_with_offsets(text: &str, base: usize) -> Vec<Line<'_>> {
    let mut out = Vec::new();
    let mut start = base;
    for raw in text.split_inclusive('\n') {
        let len = raw.chars().count();
        out.push(Line { text: raw.strip_suffix('\n').unwrap_or(raw), start, end: start + len });
        start += len;
    }
    out
}

/// Cuts a document into a preamble and notices, then fills each notice's zones.
///
/// Notice numbers that do not increase produce a warning. A repeated number
/// gets a `-2`, `-3`, ... suffix on its notice_id so ids stay unique.
pub fn segment_notices(doc: &Document, grammar: &NoticeGrammar) -> Segmentation {
    let lines = lines_with_offsets(doc.text(), 0);
    let mut warnings = Vec::new();
    let mut headers = Vec::new();

    let mut last_number: Option<u64> = None;
    for (idx, line) in lines.iter().enumerate() {
        let Some((digits, municipality)) = grammar.match_header(line.text) else { continue };
        let Ok(number) = digits.parse::<u64>() else {
            warnings.push(Diagnostic::new(line.start, format!("notice number {digits:?} out of range, line ignored")));
            continue;
        };
        if let Some(prev) = last_number {
            if number <= prev {
                warnings.push(Diagnostic::new(
                    line.start,
                    format!("notice number {number} does not follow {prev}"),
                ));
            }
        }
        last_number = Some(number);
        headers.push((idx, number, municipality.to_owned()));
    }

    let text_len = doc.len();
    let preamble_end = headers.first().map_or(text_len, |(idx, _, _)| lines[*idx].start);
    let mut used_ids = HashSet::new();
    let mut notices = Vec::with_capacity(headers.len());
    for (k, (line_idx, number, municipality)) in headers.iter().enumerate() {
        let start = lines[*line_idx].start;
        let end = headers.get(k + 1).map_or(text_len, |(next, _, _)| lines[*next].start);
        let base_id = format!("{}#{}", doc.meta.doc_id, number);
        let mut notice_id = base_id.clone();
        let mut suffix = 2;
        while !used_ids.insert(notice_id.clone()) {
            notice_id = format!("{base_id}-{suffix}");
            suffix += 1;
        }
        if notice_id != base_id {
            warnings.push(Diagnostic::new(start, format!("duplicate notice number {number}, stored as {notice_id}")));
        }
        let mut notice = Notice {
            notice_id,
            number: *number,
            municipality: municipality.clone(),
            span: Span::new(start, end),
            zones: Vec::new(),
        };
        notice.zones = detect_zones(&notice, doc, grammar);
        notices.push(notice);
    }

    Segmentation { preamble: Span::new(0, preamble_end), notices, warnings }
}

/// Splits a notice into `header`, `body` and the grammar's zones.
///
/// The first line is the header. Each zone rule, in order, opens its zone at
/// the first matching line after the previous split point; rules without a
/// match are skipped. Empty zones are omitted.
pub fn detect_zones(notice: &Notice, doc: &Document, grammar: &NoticeGrammar) -> Vec<Zone> {
    let span = notice.span;
    if span.is_empty() {
        return Vec::new();
    }
    let lines = lines_with_offsets(doc.slice(span), span.start);
    let header_end = lines[0].end;
    let mut zones = vec![Zone { label: HEADER_ZONE.into(), span: Span::new(span.start, header_end) }];

    // (label, start offset) of every split after the header
    let mut splits: Vec<(&str, usize)> = vec![(BODY_ZONE, header_end)];
    let mut next_line = 1;
    for (label, pattern) in &grammar.zone_rules {
        if let Some(found) = (next_line..lines.len()).find(|&i| pattern.is_match(lines[i].text)) {
            splits.push((label, lines[found].start));
            next_line = found + 1;
        }
    }
    for (k, (label, start)) in splits.iter().enumerate() {
        let end = splits.get(k + 1).map_or(span.end, |(_, s)| *s);
        if end > *start {
            zones.push(Zone { label: (*label).to_owned(), span: Span::new(*start, end) });
        }
    }
    zones
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    Gap { span: Span },
    Overlap { span: Span },
    ZoneGap { notice_id: String, span: Span },
    ZoneOverlap { notice_id: String, span: Span },
    OutOfBounds { notice_id: Option<String>, span: Span },
}

impl Violation {
    pub fn span(&self) -> Span {
        match self {
            Violation::Gap { span }
            | Violation::Overlap { span }
            | Violation::ZoneGap { span, .. }
            | Violation::ZoneOverlap { span, .. }
            | Violation::OutOfBounds { span, .. } => *span,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct PartitionReport {
    pub violations: Vec<Violation>,
}

impl PartitionReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Sweeps sorted spans over `range`. Reports `(is_overlap, span)` for every
/// hole and every doubly covered stretch.
fn sweep(range: Span, mut spans: Vec<Span>, mut report: impl FnMut(bool, Span)) {
    spans.sort();
    let mut cursor = range.start;
    for s in spans {
        if s.start > cursor {
            report(false, Span::new(cursor, s.start));
        } else if s.start < cursor {
            report(true, Span::new(s.start, cursor.min(s.end)));
        }
        cursor = cursor.max(s.end);
    }
    if cursor < range.end {
        report(false, Span::new(cursor, range.end));
    }
}

/// Checks that the preamble and notices tile the text and that each notice's
/// zones tile the notice.
pub fn validate_partition(doc: &Document, preamble: Span, notices: &[Notice]) -> PartitionReport {
    let text = Span::new(0, doc.len());
    let mut violations = Vec::new();

    let mut top: Vec<Span> = notices.iter().map(|n| n.span).collect();
    if !preamble.is_empty() || preamble.start != 0 {
        top.push(preamble);
    }
    for s in &top {
        if s.end > text.end || s.start > s.end {
            violations.push(Violation::OutOfBounds { notice_id: None, span: *s });
        }
    }
    sweep(text, top, |overlap, span| {
        violations.push(if overlap { Violation::Overlap { span } } else { Violation::Gap { span } })
    });

    for notice in notices {
        let id = || notice.notice_id.clone();
        let mut inside = Vec::with_capacity(notice.zones.len());
        for z in &notice.zones {
            if !notice.span.contains(&z.span) || z.span.start > z.span.end {
                violations.push(Violation::OutOfBounds { notice_id: Some(id()), span: z.span });
            } else {
                inside.push(z.span);
            }
        }
        sweep(notice.span, inside, |overlap, span| {
            violations.push(if overlap {
                Violation::ZoneOverlap { notice_id: id(), span }
            } else {
                Violation::ZoneGap { notice_id: id(), span }
            })
        });
    }
    PartitionReport { violations }
}

/// Labels actually used by a set of notices, for reporting.
pub fn zone_inventory(notices: &[Notice]) -> BTreeSet<&str> {
    notices.iter().flat_map(|n| n.zones.iter().map(|z| z.label.as_str())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{load_document, DocumentMeta, Language};

    fn doc(text: &str) -> Document {
        load_document(text.as_bytes(), DocumentMeta::new("d", Language::Fr)).unwrap()
    }

    fn biblio_grammar() -> NoticeGrammar {
        NoticeGrammar::compile(&GrammarSpec {
            header_pattern: DEFAULT_HEADER_PATTERN.into(),
            zone_rules: vec![ZoneRuleSpec { label: "biblio".into(), start_pattern: r"^Bibl\.".into() }],
        })
        .unwrap()
    }

    #[test]
    fn segments_numbered_headers() {
        let d = doc("Intro.\n1 – ARCES\nBody A.\n2 – BAILLY\nBody B.\n");
        let seg = segment_notices(&d, &NoticeGrammar::default());
        assert_eq!(d.slice(seg.preamble), "Intro.\n");
        let got: Vec<_> = seg.notices.iter().map(|n| (n.number, n.municipality.as_str())).collect();
        assert_eq!(got, [(1, "ARCES"), (2, "BAILLY")]);
        assert_eq!(seg.notices[0].notice_id, "d#1");
        assert_eq!(d.slice(seg.notices[1].span), "2 – BAILLY\nBody B.\n");
        assert!(seg.warnings.is_empty());
        assert!(validate_partition(&d, seg.preamble, &seg.notices).is_valid());
    }

    #[test]
    fn empty_text() {
        let d = doc("");
        let seg = segment_notices(&d, &NoticeGrammar::default());
        assert_eq!(seg.preamble, Span::new(0, 0));
        assert!(seg.notices.is_empty());
        assert!(validate_partition(&d, seg.preamble, &seg.notices).is_valid());
    }

    #[test]
    fn no_headers_means_all_preamble() {
        let d = doc("just prose\nmore prose");
        let seg = segment_notices(&d, &NoticeGrammar::default());
        assert_eq!(seg.preamble, Span::new(0, d.len()));
        assert!(seg.notices.is_empty());
    }

    #[test]
    fn non_monotonic_numbers_warn() {
        let d = doc("2 - B\nx\n1 - A\ny\n");
        let seg = segment_notices(&d, &NoticeGrammar::default());
        assert_eq!(seg.notices.len(), 2);
        assert_eq!(seg.warnings.len(), 1);
        assert_eq!(seg.warnings[0].offset, 8);
    }

    #[test]
    fn duplicate_numbers_get_distinct_ids() {
        let d = doc("1 - A\n1 - B\n");
        let seg = segment_notices(&d, &NoticeGrammar::default());
        let ids: Vec<_> = seg.notices.iter().map(|n| n.notice_id.as_str()).collect();
        assert_eq!(ids, ["d#1", "d#1-2"]);
        assert_eq!(seg.warnings.len(), 2);
    }

    #[test]
    fn all_dash_variants_and_trimmed_municipality() {
        let d = doc("1 - A\n2 – B \n3 — La Ferté-Gaucher\n");
        let seg = segment_notices(&d, &NoticeGrammar::default());
        let names: Vec<_> = seg.notices.iter().map(|n| n.municipality.as_str()).collect();
        assert_eq!(names, ["A", "B", "La Ferté-Gaucher"]);
        for n in &seg.notices {
            assert!(d.text().contains(&n.municipality));
        }
    }

    #[test]
    fn zones_header_body_biblio() {
        let d = doc("1 – ARCES\nSome text.\nBibl. : Provost 1988.\n");
        let seg = segment_notices(&d, &biblio_grammar());
        let zones = &seg.notices[0].zones;
        let labels: Vec<_> = zones.iter().map(|z| z.label.as_str()).collect();
        assert_eq!(labels, ["header", "body", "biblio"]);
        assert_eq!(d.slice(zones[2].span), "Bibl. : Provost 1988.\n");
    }

    #[test]
    fn header_only_notice() {
        let d = doc("1 – ARCES");
        let seg = segment_notices(&d, &biblio_grammar());
        let labels: Vec<_> = seg.notices[0].zones.iter().map(|z| z.label.as_str()).collect();
        assert_eq!(labels, ["header"]);
    }

    #[test]
    fn unmatched_body() {
        let d = doc("1 – ARCES\nOnly prose.\nMore.\n");
        let seg = segment_notices(&d, &biblio_grammar());
        let labels: Vec<_> = seg.notices[0].zones.iter().map(|z| z.label.as_str()).collect();
        assert_eq!(labels, ["header", "body"]);
    }

    #[test]
    fn rules_fire_in_order() {
        // biblio appears before finds; finds must come after the biblio split
        let d = doc("1 - X\nBibl. a\nMobilier : b\n");
        let seg = segment_notices(&d, &NoticeGrammar::default());
        let labels: Vec<_> = seg.notices[0].zones.iter().map(|z| z.label.as_str()).collect();
        assert_eq!(labels, ["header", "body", "finds"]);
        let d = doc("1 - X\nMobilier : b\nBibl. a\n");
        let seg = segment_notices(&d, &NoticeGrammar::default());
        let labels: Vec<_> = seg.notices[0].zones.iter().map(|z| z.label.as_str()).collect();
        assert_eq!(labels, ["header", "finds", "biblio"]);
    }

    #[test]
    fn grammar_validation() {
        let bad = |header: &str, labels: &[&str]| {
            NoticeGrammar::compile(&GrammarSpec {
                header_pattern: header.into(),
                zone_rules: labels
                    .iter()
                    .map(|l| ZoneRuleSpec { label: (*l).into(), start_pattern: "^x".into() })
                    .collect(),
            })
        };
        assert!(matches!(bad(r"(\d+)", &[]), Err(GrammarError::CaptureCount(1))));
        assert!(matches!(bad(r"(\d+", &[]), Err(GrammarError::Pattern { .. })));
        assert!(matches!(bad(DEFAULT_HEADER_PATTERN, &["a", "a"]), Err(GrammarError::ZoneLabel(_))));
        assert!(matches!(bad(DEFAULT_HEADER_PATTERN, &["body"]), Err(GrammarError::ZoneLabel(_))));
        assert!(bad(DEFAULT_HEADER_PATTERN, &["a", "b"]).is_ok());
    }

    #[test]
    fn grammar_from_toml() {
        let g = NoticeGrammar::from_toml(
            "header_pattern = '(\\d+)\\. (.+)'\n[[zone_rules]]\nlabel = 'refs'\nstart_pattern = '^Refs'\n",
        )
        .unwrap();
        assert_eq!(g.zone_labels().collect::<Vec<_>>(), ["refs"]);
        let d = doc("12. Paris\nRefs x\n");
        let seg = segment_notices(&d, &g);
        assert_eq!(seg.notices[0].municipality, "Paris");
        assert_eq!(seg.notices[0].zones.len(), 2);
    }

    #[test]
    fn header_pattern_is_line_anchored() {
        let d = doc("see 1 - A here\n");
        assert!(segment_notices(&d, &NoticeGrammar::default()).notices.is_empty());
    }

    fn notice(id: &str, span: Span, zones: &[Span]) -> Notice {
        Notice {
            notice_id: id.into(),
            number: 1,
            municipality: "m".into(),
            span,
            zones: zones.iter().map(|s| Zone { label: "body".into(), span: *s }).collect(),
        }
    }

    #[test]
    fn detects_single_gap() {
        let d = doc("0123456789");
        let notices = [
            notice("a", Span::new(2, 5), &[Span::new(2, 5)]),
            notice("b", Span::new(6, 10), &[Span::new(6, 10)]),
        ];
        let report = validate_partition(&d, Span::new(0, 2), &notices);
        assert_eq!(report.violations, [Violation::Gap { span: Span::new(5, 6) }]);
    }

    #[test]
    fn detects_single_overlap() {
        let d = doc("0123456789");
        let notices = [
            notice("a", Span::new(2, 6), &[Span::new(2, 6)]),
            notice("b", Span::new(5, 10), &[Span::new(5, 10)]),
        ];
        let report = validate_partition(&d, Span::new(0, 2), &notices);
        assert_eq!(report.violations, [Violation::Overlap { span: Span::new(5, 6) }]);
    }

    #[test]
    fn detects_zone_problems() {
        let d = doc("0123456789");
        let notices = [notice("a", Span::new(0, 10), &[Span::new(0, 3), Span::new(4, 10), Span::new(8, 12)])];
        let report = validate_partition(&d, Span::new(0, 0), &notices);
        assert_eq!(
            report.violations,
            [
                Violation::OutOfBounds { notice_id: Some("a".into()), span: Span::new(8, 12) },
                Violation::ZoneGap { notice_id: "a".into(), span: Span::new(3, 4) },
            ]
        );
    }
}
