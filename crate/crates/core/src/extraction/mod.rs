//! Typed mention extraction: dates and periods, gazetteer places and persons,
//! and part-of-speech term candidates.

mod dates;
mod gazetteer;
mod terms;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use dates::{century_range, extract_dates, parse_roman, year_range, Era, PeriodTable};
pub use gazetteer::{extract_gazetteer, extract_places, Gazetteer, GazetteerEntry};
pub use terms::{
    aggregate_terms, extract_terms, head_index, parse_patterns, score_terms, TermCandidate, TermOccurrence,
    TermPattern, DEFAULT_PATTERNS,
};

use crate::corpus::Document;
use crate::lingproc::Token;
use crate::span::Span;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ExtractionError {
    #[error("invalid pattern {pattern:?}: {reason}")]
    InvalidPattern { pattern: String, reason: String },
    #[error("invalid time range [{from}, {to}]")]
    InvalidRange { from: i32, to: i32 },
    #[error("{table} line {line}: {message}")]
    Table { table: &'static str, line: usize, message: String },
}

/// Inclusive span of years. 1 BC is -1 and year 0 does not exist.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TimeRange {
    pub from_year: i32,
    pub to_year: i32,
}

impl TimeRange {
    pub fn new(from_year: i32, to_year: i32) -> Result<Self, ExtractionError> {
        if from_year > to_year || from_year == 0 || to_year == 0 {
            return Err(ExtractionError::InvalidRange { from: from_year, to: to_year });
        }
        Ok(TimeRange { from_year, to_year })
    }

    /// Inclusive interval intersection.
    pub fn overlaps(&self, other: &TimeRange) -> bool {
        self.from_year <= other.to_year && other.from_year <= self.to_year
    }

    /// Number of calendar years covered, skipping the missing year 0.
    pub fn years(&self) -> i64 {
        let span = i64::from(self.to_year) - i64::from(self.from_year) + 1;
        if self.from_year < 0 && self.to_year > 0 {
            span - 1
        } else {
            span
        }
    }
}

impl fmt::Display for TimeRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.from_year, self.to_year)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MentionKind {
    Place,
    Date,
    Term,
    Person,
}

impl MentionKind {
    pub const ALL: [MentionKind; 4] = [MentionKind::Place, MentionKind::Date, MentionKind::Term, MentionKind::Person];

    pub fn as_str(self) -> &'static str {
        match self {
            MentionKind::Place => "place",
            MentionKind::Date => "date",
            MentionKind::Term => "term",
            MentionKind::Person => "person",
        }
    }
}

impl fmt::Display for MentionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MentionKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        MentionKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown mention kind {s:?}"))
    }
}

/// A typed, located extraction.
///
/// `entity_id` carries the gazetteer id for places and persons; `concept_id`
/// is set once a term is linked to the concept table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mention {
    pub mention_id: String,
    pub notice_id: String,
    pub kind: MentionKind,
    pub span: Span,
    pub surface: String,
    pub normalized: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time: Option<TimeRange>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entity_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub concept_id: Option<String>,
}

impl Mention {
    /// Creates a mention with an id derived from its notice, kind and span.
    pub fn new(notice_id: &str, kind: MentionKind, span: Span, surface: String, normalized: String) -> Self {
        Mention {
            mention_id: format!("{notice_id}@{}-{}:{}", span.start, span.end, kind),
            notice_id: notice_id.to_owned(),
            kind,
            span,
            surface,
            normalized,
            time: None,
            entity_id: None,
            concept_id: None,
        }
    }
}

/// Where a run of mentions comes from: the source document and the notice.
#[derive(Debug, Clone, Copy)]
pub struct NoticeContext<'a> {
    pub doc: &'a Document,
    pub notice_id: &'a str,
}

impl<'a> NoticeContext<'a> {
    pub fn new(doc: &'a Document, notice_id: &'a str) -> Self {
        NoticeContext { doc, notice_id }
    }

    /// Mention spanning `tokens`, whose surface is the exact document slice.
    pub(crate) fn mention(&self, kind: MentionKind, tokens: &[Token], normalized: String) -> Mention {
        let span = Span::new(tokens[0].span.start, tokens[tokens.len() - 1].span.end);
        Mention::new(self.notice_id, kind, span, self.doc.slice(span).to_owned(), normalized)
    }
}
