use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::extraction::TimeRange;
use crate::lingproc::tokenize;
use crate::span::Span;

use super::{municipality_key, Snapshot};

pub const DEFAULT_LIMIT: usize = 20;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum QueryError {
    #[error("invalid value for {param}: {value:?}")]
    InvalidParam { param: &'static str, value: String },
    #[error("limit must be at least 1")]
    ZeroLimit,
    #[error("empty period [{from}, {to}]")]
    EmptyPeriod { from: i32, to: i32 },
}

/// A conjunctive query. Build it with [`Query::new`] or [`SearchParams::to_query`]
/// so that text terms are folded the same way as the index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Query {
    pub text_terms: Vec<String>,
    pub concept_id: Option<String>,
    pub place_id: Option<String>,
    pub period: Option<TimeRange>,
    pub municipality: Option<String>,
    pub limit: usize,
    pub offset: usize,
}

impl Default for Query {
    fn default() -> Self {
        Query {
            text_terms: Vec::new(),
            concept_id: None,
            place_id: None,
            period: None,
            municipality: None,
            limit: DEFAULT_LIMIT,
            offset: 0,
        }
    }
}

/// Folds raw query strings into index keys. A string holding several words
/// contributes each of them; duplicates are dropped, first occurrence kept.
pub fn normalize_terms<S: AsRef<str>>(raw: &[S]) -> Vec<String> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for s in raw {
        for t in tokenize(s.as_ref()) {
            if t.is_word() {
                let k = t.key();
                if seen.insert(k.clone()) {
                    out.push(k);
                }
            }
        }
    }
    out
}

impl Query {
    pub fn new<S: AsRef<str>>(text_terms: &[S]) -> Self {
        Query { text_terms: normalize_terms(text_terms), ..Default::default() }
    }

    /// Applies filter normalization in place: terms folded and deduplicated,
    /// municipality reduced to its comparison key.
    pub fn normalized(mut self) -> Self {
        self.text_terms = normalize_terms(&self.text_terms);
        self.municipality = self.municipality.map(|m| municipality_key(&m));
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hit {
    pub notice_id: String,
    pub score: u64,
    /// Spans of every matched term occurrence, in offset order.
    pub matched_spans: Vec<Span>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResultPage {
    pub total: usize,
    pub hits: Vec<Hit>,
}

/// Search parameters as they arrive from the command line or a URL.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchParams {
    /// Comma-separated text terms.
    pub q: Option<String>,
    pub concept: Option<String>,
    pub place: Option<String>,
    pub from: Option<String>,
    pub to: Option<String>,
    pub municipality: Option<String>,
    pub limit: Option<String>,
    pub offset: Option<String>,
}

fn parse<T: std::str::FromStr>(param: &'static str, v: &Option<String>) -> Result<Option<T>, QueryError> {
    match v.as_deref().map(str::trim) {
        None | Some("") => Ok(None),
        Some(s) => s.parse().map(Some).map_err(|_| QueryError::InvalidParam { param, value: s.to_owned() }),
    }
}

fn non_empty(v: &Option<String>) -> Option<String> {
    v.as_deref().map(str::trim).filter(|s| !s.is_empty()).map(str::to_owned)
}

impl SearchParams {
    /// Validates and normalizes the parameters. A missing `from` or `to`
    /// leaves that side of the period open.
    pub fn to_query(&self) -> Result<Query, QueryError> {
        let terms: Vec<&str> = self.q.as_deref().map(|q| q.split(',').collect()).unwrap_or_default();
        let year = |param, v| -> Result<Option<i32>, QueryError> {
            let y = parse::<i32>(param, v)?;
            if y == Some(0) {
                return Err(QueryError::InvalidParam { param, value: "0".into() });
            }
            Ok(y)
        };
        let from = year("from", &self.from)?;
        let to = year("to", &self.to)?;
        let period = match (from, to) {
            (None, None) => None,
            (f, t) => {
                let (f, t) = (f.unwrap_or(i32::MIN), t.unwrap_or(i32::MAX));
                Some(TimeRange::new(f, t).map_err(|_| QueryError::EmptyPeriod { from: f, to: t })?)
            }
        };
        let limit = parse::<usize>("limit", &self.limit)?.unwrap_or(DEFAULT_LIMIT);
        if limit == 0 {
            return Err(QueryError::ZeroLimit);
        }
        Ok(Query {
            text_terms: normalize_terms(&terms),
            concept_id: non_empty(&self.concept),
            place_id: non_empty(&self.place),
            period,
            municipality: non_empty(&self.municipality).map(|m| municipality_key(&m)),
            limit,
            offset: parse::<usize>("offset", &self.offset)?.unwrap_or(0),
        })
    }
}

/// Evaluates a query. Text terms are intersected through the index, then the
/// structured filters are checked per candidate. Unknown ids match nothing.
pub fn query(snapshot: &Snapshot, q: &Query) -> ResultPage {
    let limit = q.limit.max(1);
    let candidates: Vec<&str> = if q.text_terms.is_empty() {
        snapshot.notices.keys().map(String::as_str).collect()
    } else {
        intersect(snapshot, &q.text_terms)
    };

    let mut hits: Vec<Hit> = candidates
        .into_iter()
        .filter(|id| passes_filters(snapshot, id, q))
        .map(|id| score(snapshot, id, &q.text_terms))
        .collect();
    hits.sort_by(|a, b| b.score.cmp(&a.score).then_with(|| a.notice_id.cmp(&b.notice_id)));

    let total = hits.len();
    let hits = hits.into_iter().skip(q.offset).take(limit).collect();
    ResultPage { total, hits }
}

fn intersect<'a>(snapshot: &'a Snapshot, terms: &[String]) -> Vec<&'a str> {
    let mut lists: Vec<_> = terms.iter().map(|t| snapshot.index.postings(t)).collect();
    lists.sort_by_key(|l| l.len());
    let Some((first, rest)) = lists.split_first() else { return Vec::new() };
    first
        .iter()
        .map(|p| p.notice_id.as_str())
        .filter(|id| rest.iter().all(|l| l.binary_search_by(|p| p.notice_id.as_str().cmp(id)).is_ok()))
        .collect()
}

fn passes_filters(snapshot: &Snapshot, notice_id: &str, q: &Query) -> bool {
    let Some(f) = snapshot.facets(notice_id) else {
        return q.concept_id.is_none() && q.place_id.is_none() && q.period.is_none() && q.municipality.is_none();
    };
    q.concept_id.as_ref().is_none_or(|c| f.concepts.contains(c))
        && q.place_id.as_ref().is_none_or(|p| f.places.contains(p))
        && q.period.as_ref().is_none_or(|r| f.dates.iter().any(|d| d.overlaps(r)))
        && q.municipality.as_ref().is_none_or(|m| &f.municipality == m)
}

fn score(snapshot: &Snapshot, notice_id: &str, terms: &[String]) -> Hit {
    let token_spans = snapshot.notice_token_spans(notice_id);
    let mut matched = Vec::new();
    for t in terms {
        for &pos in snapshot.index.positions(t, notice_id).unwrap_or(&[]) {
            matched.push(token_spans[pos as usize]);
        }
    }
    matched.sort();
    Hit { notice_id: notice_id.to_owned(), score: matched.len() as u64, matched_spans: matched }
}
