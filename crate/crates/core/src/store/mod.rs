//! Immutable snapshots of the structured database.
//!
//! A [`Snapshot`] holds documents, notices, mentions, concepts and aggregated
//! term candidates, plus derived lookup structures (inverted index, per-notice
//! facets) that are rebuilt from the records. [`Snapshot::commit`] never
//! mutates its receiver: it returns a new snapshot with `version + 1`.

mod index;
mod persist;
mod query;

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use index::{build_index, indexable, InvertedIndex, Posting};
pub use persist::{load, persist, MANIFEST_FILE, STORE_FORMAT_VERSION};
pub use query::{query, Hit, Query, QueryError, ResultPage, SearchParams, DEFAULT_LIMIT};

use crate::corpus::{Document, DocumentMeta};
use crate::extraction::{Mention, MentionKind, TermCandidate, TimeRange};
use crate::lingproc::{fold, tokenize_at, Token};
use crate::span::Span;
use crate::structure::{Notice, Zone};
use crate::terminology::ConceptTable;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("foreign key violation: {0}")]
    ForeignKeyViolation(String),
    #[error("duplicate id {0:?}")]
    DuplicateId(String),
    #[error("invalid record: {0}")]
    InvalidRecord(String),
    #[error("corrupt snapshot: {0}")]
    CorruptSnapshot(String),
    #[error("store format version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// A document as stored: metadata plus full text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocumentRecord {
    #[serde(flatten)]
    pub meta: DocumentMeta,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NoticeRecord {
    pub notice_id: String,
    pub doc_id: String,
    pub number: u64,
    pub municipality: String,
    pub span: Span,
    pub zones: Vec<Zone>,
}

impl NoticeRecord {
    pub fn from_notice(doc_id: &str, n: &Notice) -> Self {
        NoticeRecord {
            notice_id: n.notice_id.clone(),
            doc_id: doc_id.to_owned(),
            number: n.number,
            municipality: n.municipality.clone(),
            span: n.span,
            zones: n.zones.clone(),
        }
    }
}

/// Lowercased, accent-folded, whitespace-collapsed municipality key.
pub fn municipality_key(s: &str) -> String {
    fold(s).split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Per-notice filter values, derived from mentions.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub(crate) struct NoticeFacets {
    pub concepts: BTreeSet<String>,
    pub places: BTreeSet<String>,
    pub dates: Vec<TimeRange>,
    pub municipality: String,
}

/// Records to add in one commit.
#[derive(Debug, Clone, Default)]
pub struct Batch {
    pub documents: Vec<Document>,
    pub notices: Vec<NoticeRecord>,
    pub mentions: Vec<Mention>,
    /// Replaces the whole concept table when set.
    pub concepts: Option<ConceptTable>,
    /// `(mention_id, concept_id)` link updates on existing mentions.
    pub relinks: Vec<(String, Option<String>)>,
    /// Replaces the aggregated term candidates when set.
    pub terms: Option<Vec<TermCandidate>>,
}

impl Batch {
    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
            && self.notices.is_empty()
            && self.mentions.is_empty()
            && self.concepts.is_none()
            && self.relinks.is_empty()
            && self.terms.is_none()
    }
}

#[derive(Debug, Clone, Default)]
pub struct Snapshot {
    version: u64,
    documents: BTreeMap<String, Document>,
    notices: BTreeMap<String, NoticeRecord>,
    mentions: BTreeMap<String, Mention>,
    concepts: ConceptTable,
    terms: Vec<TermCandidate>,
    // derived
    index: InvertedIndex,
    notice_tokens: HashMap<String, Vec<Span>>,
    facets: HashMap<String, NoticeFacets>,
}

impl Snapshot {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn documents(&self) -> impl Iterator<Item = &Document> {
        self.documents.values()
    }

    pub fn document(&self, doc_id: &str) -> Option<&Document> {
        self.documents.get(doc_id)
    }

    pub fn notices(&self) -> impl Iterator<Item = &NoticeRecord> {
        self.notices.values()
    }

    pub fn notice(&self, notice_id: &str) -> Option<&NoticeRecord> {
        self.notices.get(notice_id)
    }

    /// Text of a notice.
    pub fn notice_text(&self, notice_id: &str) -> Option<&str> {
        let n = self.notices.get(notice_id)?;
        Some(self.documents.get(&n.doc_id)?.slice(n.span))
    }

    pub fn mentions(&self) -> impl Iterator<Item = &Mention> {
        self.mentions.values()
    }

    /// Mentions of one notice, in span order.
    pub fn notice_mentions(&self, notice_id: &str) -> Vec<&Mention> {
        let prefix = format!("{notice_id}@");
        let mut out: Vec<&Mention> = self
            .mentions
            .range(prefix.clone()..)
            .take_while(|(k, _)| k.starts_with(&prefix))
            .map(|(_, m)| m)
            .filter(|m| m.notice_id == notice_id)
            .collect();
        out.sort_by_key(|m| (m.span, m.kind));
        out
    }

    pub fn concepts(&self) -> &ConceptTable {
        &self.concepts
    }

    pub fn terms(&self) -> &[TermCandidate] {
        &self.terms
    }

    pub fn index(&self) -> &InvertedIndex {
        &self.index
    }

    /// Scalar spans of a notice's indexed tokens, by position.
    pub fn notice_token_spans(&self, notice_id: &str) -> &[Span] {
        self.notice_tokens.get(notice_id).map_or(&[], Vec::as_slice)
    }

    pub(crate) fn facets(&self, notice_id: &str) -> Option<&NoticeFacets> {
        self.facets.get(notice_id)
    }

    /// Applies a batch and returns the next snapshot. `self` is unchanged.
    pub fn commit(&self, batch: Batch) -> Result<Snapshot, StoreError> {
        let mut next = self.clone();
        next.version += 1;

        for doc in batch.documents {
            let id = doc.meta.doc_id.clone();
            if next.documents.insert(id.clone(), doc).is_some() {
                return Err(StoreError::DuplicateId(id));
            }
        }

        let mut added_notices = Vec::with_capacity(batch.notices.len());
        for n in batch.notices {
            let Some(doc) = next.documents.get(&n.doc_id) else {
                return Err(StoreError::ForeignKeyViolation(format!(
                    "notice {:?} references missing document {:?}",
                    n.notice_id, n.doc_id
                )));
            };
            if n.span.end > doc.len() || n.span.start >= n.span.end {
                return Err(StoreError::InvalidRecord(format!("notice {:?} span {} is invalid", n.notice_id, n.span)));
            }
            if next.notices.contains_key(&n.notice_id) {
                return Err(StoreError::DuplicateId(n.notice_id));
            }
            added_notices.push(n.notice_id.clone());
            next.notices.insert(n.notice_id.clone(), n);
        }

        let mut touched: BTreeSet<String> = added_notices.iter().cloned().collect();
        for m in batch.mentions {
            let Some(notice) = next.notices.get(&m.notice_id) else {
                return Err(StoreError::ForeignKeyViolation(format!(
                    "mention {:?} references missing notice {:?}",
                    m.mention_id, m.notice_id
                )));
            };
            if !notice.span.contains(&m.span) {
                return Err(StoreError::InvalidRecord(format!(
                    "mention {:?} lies outside notice {:?}",
                    m.mention_id, m.notice_id
                )));
            }
            if (m.kind == MentionKind::Date) != m.time.is_some() {
                return Err(StoreError::InvalidRecord(format!(
                    "mention {:?}: time must be set exactly for dates",
                    m.mention_id
                )));
            }
            if next.mentions.contains_key(&m.mention_id) {
                return Err(StoreError::DuplicateId(m.mention_id));
            }
            touched.insert(m.notice_id.clone());
            next.mentions.insert(m.mention_id.clone(), m);
        }

        let concepts_replaced = batch.concepts.is_some();
        if let Some(table) = batch.concepts {
            next.concepts = table;
        }
        if let Some(terms) = batch.terms {
            next.terms = terms;
        }
        for (mention_id, concept_id) in batch.relinks {
            let Some(m) = next.mentions.get_mut(&mention_id) else {
                return Err(StoreError::ForeignKeyViolation(format!("relink of missing mention {mention_id:?}")));
            };
            m.concept_id = concept_id;
            touched.insert(m.notice_id.clone());
        }

        next.check_concept_links()?;

        for id in &added_notices {
            let tokens = next.tokens_of(id);
            next.index.add_notice(id, &tokens);
            next.notice_tokens.insert(id.clone(), indexable(&tokens).map(|t| t.span).collect());
        }
        if concepts_replaced {
            touched.extend(next.notices.keys().cloned());
        }
        for id in touched {
            let facets = next.compute_facets(&id);
            next.facets.insert(id, facets);
        }
        Ok(next)
    }

    fn check_concept_links(&self) -> Result<(), StoreError> {
        for m in self.mentions.values() {
            if let Some(c) = &m.concept_id {
                if !self.concepts.contains(c) {
                    return Err(StoreError::ForeignKeyViolation(format!(
                        "mention {:?} links to missing concept {c:?}",
                        m.mention_id
                    )));
                }
            }
        }
        Ok(())
    }

    /// Token stream of a notice, with document offsets.
    pub fn tokens_of(&self, notice_id: &str) -> Vec<Token> {
        let Some(n) = self.notices.get(notice_id) else { return Vec::new() };
        let Some(doc) = self.documents.get(&n.doc_id) else { return Vec::new() };
        tokenize_at(doc.slice(n.span), n.span.start)
    }

    fn compute_facets(&self, notice_id: &str) -> NoticeFacets {
        let mut f = NoticeFacets {
            municipality: self.notices.get(notice_id).map(|n| municipality_key(&n.municipality)).unwrap_or_default(),
            ..Default::default()
        };
        for m in self.notice_mentions(notice_id) {
            if let Some(c) = &m.concept_id {
                f.concepts.insert(c.clone());
            }
            if m.kind == MentionKind::Place {
                if let Some(p) = &m.entity_id {
                    f.places.insert(p.clone());
                }
            }
            if let Some(t) = m.time {
                f.dates.push(t);
            }
        }
        f
    }

    /// Rebuilds a snapshot from stored records at `version`.
    pub(crate) fn from_records(
        version: u64,
        documents: Vec<Document>,
        notices: Vec<NoticeRecord>,
        mentions: Vec<Mention>,
        concepts: ConceptTable,
        terms: Vec<TermCandidate>,
    ) -> Result<Snapshot, StoreError> {
        let batch = Batch { documents, notices, mentions, concepts: Some(concepts), relinks: Vec::new(), terms: Some(terms) };
        let mut snap = Snapshot::empty().commit(batch)?;
        snap.version = version;
        Ok(snap)
    }
}
