//! Tokenization, sentence splitting and lexicon-driven part-of-speech tagging.
//!
//! [`fold`] is the one folding routine used for every case- and
//! accent-insensitive comparison in the crate.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;

use crate::span::Span;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LexiconError {
    #[error("unknown part-of-speech tag {0:?}")]
    UnknownTag(String),
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
}

/// Coarse part-of-speech inventory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Pos {
    N,
    A,
    P,
    V,
    D,
    #[serde(rename = "NUM")]
    Num,
    #[serde(rename = "PUNCT")]
    Punct,
    X,
}

impl Pos {
    pub fn as_str(self) -> &'static str {
        match self {
            Pos::N => "N",
            Pos::A => "A",
            Pos::P => "P",
            Pos::V => "V",
            Pos::D => "D",
            Pos::Num => "NUM",
            Pos::Punct => "PUNCT",
            Pos::X => "X",
        }
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Pos {
    type Err = LexiconError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.trim() {
            "N" => Pos::N,
            "A" => Pos::A,
            "P" => Pos::P,
            "V" => Pos::V,
            "D" => Pos::D,
            "NUM" => Pos::Num,
            "PUNCT" => Pos::Punct,
            "X" => Pos::X,
            other => return Err(LexiconError::UnknownTag(other.to_owned())),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub span: Span,
    pub surface: String,
    pub pos: Option<Pos>,
}

impl Token {
    pub fn is_punct(&self) -> bool {
        self.pos == Some(Pos::Punct)
    }

    pub fn is_word(&self) -> bool {
        !self.is_punct()
    }

    /// Folded surface, the key used for lexicon, gazetteer and index lookups.
    pub fn key(&self) -> String {
        fold(&self.surface)
    }
}

/// Lowercases and strips diacritics: canonical decomposition, then removal of
/// combining marks. Typographic apostrophes become `'` and `ß` becomes `ss`.
pub fn fold(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in fold_diacritics(&s.to_lowercase()).chars() {
        match c {
            '\u{2019}' | '\u{02bc}' => out.push('\''),
            // full case folding, so that `ß` and its uppercase `SS` agree
            'ß' => out.push_str("ss"),
            c => out.push(c),
        }
    }
    out
}

/// Canonical decomposition followed by removal of combining marks.
pub fn fold_diacritics(s: &str) -> String {
    s.nfd().filter(|c| !is_combining_mark(*c)).collect()
}

fn is_apostrophe(c: char) -> bool {
    matches!(c, '\'' | '\u{2019}' | '\u{02bc}')
}

/// Splits text into word, number and punctuation tokens with scalar spans.
///
/// Alphanumeric runs form one token (combining marks stay attached). An
/// apostrophe directly after a run closes it and belongs to it, so `l'âge`
/// yields `l'` and `âge`. Every other non-space scalar is its own PUNCT token.
pub fn tokenize(text: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut run: Option<(usize, String)> = None;

    fn close(tokens: &mut Vec<Token>, run: &mut Option<(usize, String)>, end: usize) {
        if let Some((start, surface)) = run.take() {
            let pos = surface.chars().all(|c| c.is_ascii_digit()).then_some(Pos::Num);
            tokens.push(Token { span: Span::new(start, end), surface, pos });
        }
    }

    let mut idx = 0;
    for c in text.chars() {
        if c.is_alphanumeric() || (run.is_some() && is_combining_mark(c)) {
            run.get_or_insert_with(|| (idx, String::new())).1.push(c);
        } else if is_apostrophe(c) && run.is_some() {
            run.as_mut().unwrap().1.push(c);
            close(&mut tokens, &mut run, idx + 1);
        } else {
            close(&mut tokens, &mut run, idx);
            if !c.is_whitespace() {
                tokens.push(Token {
                    span: Span::new(idx, idx + 1),
                    surface: c.to_string(),
                    pos: Some(Pos::Punct),
                });
            }
        }
        idx += 1;
    }
    close(&mut tokens, &mut run, idx);
    tokens
}

/// Like [`tokenize`] but with spans shifted by `base`.
pub fn tokenize_at(text: &str, base: usize) -> Vec<Token> {
    let mut tokens = tokenize(text);
    for t in &mut tokens {
        t.span = t.span.shift(base);
    }
    tokens
}

/// Sentence ranges as `(start_idx, end_idx)` token indices, end exclusive.
pub fn split_sentences(tokens: &[Token]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut start = 0;
    for (i, t) in tokens.iter().enumerate() {
        if matches!(t.surface.as_str(), "." | "!" | "?") {
            out.push((start, i + 1));
            start = i + 1;
        }
    }
    if start < tokens.len() {
        out.push((start, tokens.len()));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PosLexicon {
    entries: HashMap<String, Pos>,
    // lowercased NFC suffix, tag; order significant. Accents are kept so
    // that `-é` does not match every word ending in `e`.
    suffix_rules: Vec<(String, Pos)>,
    default_pos: Pos,
}

impl PosLexicon {
    pub fn new(default_pos: Pos) -> Self {
        PosLexicon { entries: HashMap::new(), suffix_rules: Vec::new(), default_pos }
    }

    pub fn insert(&mut self, surface: &str, pos: Pos) {
        self.entries.insert(fold(surface), pos);
    }

    /// Appends a suffix rule. A leading `-` is ignored; empty suffixes are rejected.
    pub fn push_suffix(&mut self, suffix: &str, pos: Pos) -> Result<(), LexiconError> {
        let folded = suffix_key(suffix.trim().trim_start_matches('-'));
        if folded.is_empty() {
            return Err(LexiconError::Malformed { line: 0, message: "empty suffix".into() });
        }
        self.suffix_rules.push((folded, pos));
        Ok(())
    }

    /// Builds a lexicon from the two TSV files: `surface<TAB>pos` and `suffix<TAB>pos`.
    pub fn from_tsv(lexicon: &str, suffixes: &str, default_pos: Pos) -> Result<Self, LexiconError> {
        let mut lex = PosLexicon::new(default_pos);
        for (line, surface, tag) in tsv_pairs(lexicon)? {
            let pos = tag.parse().map_err(|e: LexiconError| LexiconError::Malformed {
                line,
                message: e.to_string(),
            })?;
            lex.insert(surface, pos);
        }
        for (line, suffix, tag) in tsv_pairs(suffixes)? {
            let pos = tag.parse().map_err(|e: LexiconError| LexiconError::Malformed {
                line,
                message: e.to_string(),
            })?;
            lex.push_suffix(suffix, pos).map_err(|_| LexiconError::Malformed {
                line,
                message: "empty suffix".into(),
            })?;
        }
        Ok(lex)
    }

    /// Tag for a surface: exact entry, then first matching suffix, then default.
    /// Entries ignore case and accents; suffixes ignore case only.
    pub fn lookup(&self, surface: &str) -> Pos {
        if let Some(pos) = self.entries.get(&fold(surface)) {
            return *pos;
        }
        let key = suffix_key(surface);
        self.suffix_rules
            .iter()
            .find(|(suffix, _)| key.ends_with(suffix.as_str()))
            .map_or(self.default_pos, |(_, pos)| *pos)
    }
}

fn suffix_key(s: &str) -> String {
    s.nfc().collect::<String>().to_lowercase()
}

fn tsv_pairs(src: &str) -> Result<Vec<(usize, &str, &str)>, LexiconError> {
    let mut out = Vec::new();
    for (idx, line) in src.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let mut cols = line.split('\t');
        match (cols.next(), cols.next(), cols.next()) {
            (Some(a), Some(b), None) => out.push((idx + 1, a, b)),
            _ => {
                return Err(LexiconError::Malformed {
                    line: idx + 1,
                    message: "expected two tab-separated columns".into(),
                })
            }
        }
    }
    Ok(out)
}

/// Assigns tags to every token that is neither PUNCT nor NUM.
pub fn pos_tag(tokens: &[Token], lexicon: &PosLexicon) -> Vec<Token> {
    tokens
        .iter()
        .map(|t| {
            let mut t = t.clone();
            if !matches!(t.pos, Some(Pos::Punct | Pos::Num)) {
                t.pos = Some(lexicon.lookup(&t.surface));
            }
            t
        })
        .collect()
}
