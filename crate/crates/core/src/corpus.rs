//! Loading digitized volumes.
//!
//! A [`Document`] owns LF-normalized text and a table of scalar boundaries so
//! that slicing by [`Span`] never rescans the string.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::span::Span;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("document {doc_id:?} is not valid UTF-8: {source}")]
    InvalidEncoding {
        doc_id: String,
        #[source]
        source: std::str::Utf8Error,
    },
    #[error("document metadata has an empty doc_id")]
    EmptyMeta,
    #[error("duplicate doc_id {0:?}")]
    DuplicateDocId(String),
    #[error("unknown language {0:?} (expected fr, de or en)")]
    UnknownLanguage(String),
    #[error("meta.tsv line {line}: {message}")]
    MetaTable { line: usize, message: String },
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Language {
    Fr,
    De,
    En,
}

impl Language {
    pub const ALL: [Language; 3] = [Language::Fr, Language::De, Language::En];

    pub fn code(self) -> &'static str {
        match self {
            Language::Fr => "fr",
            Language::De => "de",
            Language::En => "en",
        }
    }
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Language {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "fr" => Ok(Language::Fr),
            "de" => Ok(Language::De),
            "en" => Ok(Language::En),
            _ => Err(CorpusError::UnknownLanguage(s.to_owned())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocumentMeta {
    pub doc_id: String,
    pub title: String,
    /// Publication volume, typically the department it covers.
    pub volume: String,
    pub language: Language,
    pub source_path: String,
}

impl DocumentMeta {
    pub fn new(doc_id: impl Into<String>, language: Language) -> Self {
        let doc_id = doc_id.into();
        DocumentMeta {
            title: doc_id.clone(),
            volume: String::new(),
            language,
            source_path: String::new(),
            doc_id,
        }
    }
}

/// Immutable text of one volume. Offsets index Unicode scalar values.
#[derive(Debug, Clone)]
pub struct Document {
    pub meta: DocumentMeta,
    text: String,
    // byte offset of every scalar, plus text.len() as a sentinel
    boundaries: Vec<usize>,
}

impl PartialEq for Document {
    fn eq(&self, other: &Self) -> bool {
        self.meta == other.meta && self.text == other.text
    }
}

impl Eq for Document {}

impl Document {
    /// Builds a document from text that is already normalized.
    pub(crate) fn from_normalized(meta: DocumentMeta, text: String) -> Self {
        let mut boundaries: Vec<usize> = text.char_indices().map(|(i, _)| i).collect();
        boundaries.push(text.len());
        Document { meta, text, boundaries }
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    /// Length in scalar values.
    pub fn len(&self) -> usize {
        self.boundaries.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn slice(&self, span: Span) -> &str {
        let end = span.end.min(self.len());
        let start = span.start.min(end);
        &self.text[self.boundaries[start]..self.boundaries[end]]
    }
}

/// Decodes `bytes` as UTF-8, strips a leading BOM and folds CRLF / CR to LF.
pub fn load_document(bytes: &[u8], meta: DocumentMeta) -> Result<Document, CorpusError> {
    if meta.doc_id.is_empty() {
        return Err(CorpusError::EmptyMeta);
    }
    let raw = std::str::from_utf8(bytes).map_err(|source| CorpusError::InvalidEncoding {
        doc_id: meta.doc_id.clone(),
        source,
    })?;
    let raw = raw.trim_start_matches('\u{feff}');
    Ok(Document::from_normalized(meta, normalize_newlines(raw)))
}

fn normalize_newlines(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars().peekable();
    while let Some(c) = chars.next() {
        if c == '\r' {
            if chars.peek() == Some(&'\n') {
                chars.next();
            }
            out.push('\n');
        } else {
            out.push(c);
        }
    }
    out
}

/// One [`DocumentMeta`] per `.txt` entry, ordered by doc_id.
pub fn corpus_manifest<S: AsRef<str>>(
    listing: &[S],
    default_language: Language,
) -> Result<Vec<DocumentMeta>, CorpusError> {
    let mut by_id = BTreeMap::new();
    for name in listing {
        let name = name.as_ref();
        let Some(stem) = name.strip_suffix(".txt") else { continue };
        if stem.is_empty() {
            continue;
        }
        let mut meta = DocumentMeta::new(stem, default_language);
        meta.source_path = name.to_owned();
        if by_id.insert(stem.to_owned(), meta).is_some() {
            return Err(CorpusError::DuplicateDocId(stem.to_owned()));
        }
    }
    Ok(by_id.into_values().collect())
}

/// Row of the optional `meta.tsv` sidecar.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MetaRow {
    pub doc_id: String,
    pub title: String,
    pub volume: String,
    pub language: Language,
}

/// Parses `meta.tsv`: header row, then `doc_id  title  volume  language`.
pub fn parse_meta_table(src: &str) -> Result<Vec<MetaRow>, CorpusError> {
    let mut rows = Vec::new();
    for (idx, line) in src.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 4 {
            return Err(CorpusError::MetaTable {
                line: idx + 1,
                message: format!("expected 4 columns, found {}", cols.len()),
            });
        }
        let language = cols[3].parse().map_err(|e: CorpusError| CorpusError::MetaTable {
            line: idx + 1,
            message: e.to_string(),
        })?;
        rows.push(MetaRow {
            doc_id: cols[0].trim().to_owned(),
            title: cols[1].trim().to_owned(),
            volume: cols[2].trim().to_owned(),
            language,
        });
    }
    Ok(rows)
}

/// Reads every `.txt` file of a corpus directory, applying `meta.tsv` when present.
pub fn load_corpus_dir(dir: &Path, default_language: Language) -> Result<Vec<Document>, CorpusError> {
    let io_err = |path: &Path| {
        let path = path.display().to_string();
        move |source| CorpusError::Io { path, source }
    };
    let mut listing = Vec::new();
    for entry in fs::read_dir(dir).map_err(io_err(dir))? {
        let entry = entry.map_err(io_err(dir))?;
        if entry.file_type().map_err(io_err(dir))?.is_file() {
            listing.push(entry.file_name().to_string_lossy().into_owned());
        }
    }
    let mut metas = corpus_manifest(&listing, default_language)?;

    let meta_path = dir.join("meta.tsv");
    if meta_path.is_file() {
        let src = fs::read_to_string(&meta_path).map_err(io_err(&meta_path))?;
        let rows: BTreeMap<String, MetaRow> =
            parse_meta_table(&src)?.into_iter().map(|r| (r.doc_id.clone(), r)).collect();
        for meta in &mut metas {
            if let Some(row) = rows.get(&meta.doc_id) {
                meta.title = row.title.clone();
                meta.volume = row.volume.clone();
                meta.language = row.language;
            }
        }
    }

    metas
        .into_iter()
        .map(|meta| {
            let path = dir.join(&meta.source_path);
            let bytes = fs::read(&path).map_err(io_err(&path))?;
            load_document(&bytes, meta)
        })
        .collect()
}
