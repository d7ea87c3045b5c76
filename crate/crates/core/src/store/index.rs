use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::lingproc::Token;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Posting {
    pub notice_id: String,
    /// Indices into the notice's stream of indexed tokens, strictly increasing.
    pub positions: Vec<u32>,
}

/// Token -> notices -> positions. Posting lists are sorted by notice id and
/// never empty.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct InvertedIndex {
    postings: BTreeMap<String, Vec<Posting>>,
}

/// The tokens of a notice that are indexed: everything but punctuation.
pub fn indexable(tokens: &[Token]) -> impl Iterator<Item = &Token> {
    tokens.iter().filter(|t| t.is_word())
}

impl InvertedIndex {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds one notice's token stream. Tokens are folded; punctuation is skipped.
    /// To replace a notice that is already indexed, remove it first.
    pub fn add_notice(&mut self, notice_id: &str, tokens: &[Token]) {
        let mut local: BTreeMap<String, Vec<u32>> = BTreeMap::new();
        for (pos, t) in indexable(tokens).enumerate() {
            local.entry(t.key()).or_default().push(pos as u32);
        }
        for (term, positions) in local {
            let list = self.postings.entry(term).or_default();
            let at = list.partition_point(|p| p.notice_id.as_str() < notice_id);
            match list.get_mut(at) {
                Some(p) if p.notice_id == notice_id => p.positions = positions,
                _ => list.insert(at, Posting { notice_id: notice_id.to_owned(), positions }),
            }
        }
    }

    pub fn remove_notice(&mut self, notice_id: &str) {
        self.postings.retain(|_, list| {
            if let Ok(at) = list.binary_search_by(|p| p.notice_id.as_str().cmp(notice_id)) {
                list.remove(at);
            }
            !list.is_empty()
        });
    }

    pub fn postings(&self, term: &str) -> &[Posting] {
        self.postings.get(term).map_or(&[], Vec::as_slice)
    }

    pub fn positions(&self, term: &str, notice_id: &str) -> Option<&[u32]> {
        let list = self.postings(term);
        let at = list.binary_search_by(|p| p.notice_id.as_str().cmp(notice_id)).ok()?;
        Some(&list[at].positions)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&str, &[Posting])> {
        self.postings.iter().map(|(t, l)| (t.as_str(), l.as_slice()))
    }

    pub fn len(&self) -> usize {
        self.postings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.postings.is_empty()
    }
}

/// Builds an index from `(notice_id, tokens)` streams.
pub fn build_index<'a, I>(notices: I) -> InvertedIndex
where
    I: IntoIterator<Item = (&'a str, &'a [Token])>,
{
    let mut index = InvertedIndex::new();
    for (id, tokens) in notices {
        index.add_notice(id, tokens);
    }
    index
}
