use std::collections::HashMap;

use crate::lingproc::{tokenize, Pos, Token};

use super::{ExtractionError, Mention, MentionKind, NoticeContext};

/// Longest name, in word tokens, that the matcher will try.
const MAX_NGRAM: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GazetteerEntry {
    pub id: String,
    pub display_name: String,
}

/// Known names mapped to stable ids, matched case- and accent-insensitively.
///
/// Names are keyed by their folded word tokens, so `La Ferté-Gaucher` and
/// `la ferte gaucher` share a key.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Gazetteer {
    entries: HashMap<String, GazetteerEntry>,
}

fn is_hyphen(t: &Token) -> bool {
    t.is_punct() && matches!(t.surface.as_str(), "-" | "‐" | "‑")
}

/// Folded key of a name: word tokens joined by single spaces, hyphens dropped.
/// `None` if the name contains other punctuation or too many words.
fn name_key(tokens: &[Token]) -> Option<String> {
    let mut words = Vec::new();
    for t in tokens {
        if is_hyphen(t) {
            continue;
        }
        if t.pos == Some(Pos::Punct) {
            return None;
        }
        words.push(t.key());
    }
    (!words.is_empty() && words.len() <= MAX_NGRAM).then(|| words.join(" "))
}

impl Gazetteer {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a name. Fails if its normalized key is already present.
    pub fn insert(&mut self, name: &str, id: &str, display_name: &str) -> Result<(), String> {
        let key = name_key(&tokenize(name)).ok_or_else(|| format!("unusable name {name:?}"))?;
        if self.entries.contains_key(&key) {
            return Err(format!("duplicate normalized name {key:?}"));
        }
        self.entries.insert(key, GazetteerEntry { id: id.to_owned(), display_name: display_name.to_owned() });
        Ok(())
    }

    /// Parses `normalized_name<TAB>id<TAB>display_name` lines.
    pub fn from_tsv(src: &str) -> Result<Self, ExtractionError> {
        let mut gaz = Gazetteer::new();
        for (idx, line) in src.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| ExtractionError::Table { table: "gazetteer", line: idx + 1, message };
            let cols: Vec<&str> = line.split('\t').collect();
            let [name, id, display] = cols[..] else {
                return Err(err(format!("expected 3 columns, found {}", cols.len())));
            };
            gaz.insert(name, id.trim(), display.trim()).map_err(err)?;
        }
        Ok(gaz)
    }

    pub fn get(&self, name: &str) -> Option<&GazetteerEntry> {
        self.entries.get(&name_key(&tokenize(name))?)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Greedy leftmost-longest gazetteer matching over windows of up to four words.
///
/// Windows start and end on a word token and may contain hyphens but no other
/// punctuation. A match suppresses every shorter or later overlapping one.
pub fn extract_gazetteer(
    ctx: NoticeContext<'_>,
    tokens: &[Token],
    gazetteer: &Gazetteer,
    kind: MentionKind,
) -> Vec<Mention> {
    let mut out = Vec::new();
    if gazetteer.is_empty() {
        return out;
    }
    let mut i = 0;
    while i < tokens.len() {
        if !tokens[i].is_word() {
            i += 1;
            continue;
        }
        // candidate window ends: indices of the following word tokens
        let mut ends = Vec::with_capacity(MAX_NGRAM);
        let mut j = i;
        while j < tokens.len() && ends.len() < MAX_NGRAM {
            let t = &tokens[j];
            if t.is_word() {
                ends.push(j + 1);
            } else if !is_hyphen(t) {
                break;
            }
            j += 1;
        }
        let found = ends.iter().rev().find_map(|&end| {
            let key = name_key(&tokens[i..end])?;
            gazetteer.entries.get(&key).map(|e| (end, key, e))
        });
        match found {
            Some((end, key, entry)) => {
                let mut m = ctx.mention(kind, &tokens[i..end], key);
                m.entity_id = Some(entry.id.clone());
                out.push(m);
                i = end;
            }
            None => i += 1,
        }
    }
    out
}

pub fn extract_places(ctx: NoticeContext<'_>, tokens: &[Token], gazetteer: &Gazetteer) -> Vec<Mention> {
    extract_gazetteer(ctx, tokens, gazetteer, MentionKind::Place)
}
