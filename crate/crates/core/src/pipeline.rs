//! End-to-end driver: ingest, segment, tag, extract, link, commit.
//!
//! A run is fully described by a [`PipelineConfig`], read from TOML. Relative
//! paths in the file are resolved against the file's directory.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{load_corpus_dir, CorpusError, Document, Language};
use crate::diag::{Diagnostic, Warning};
use crate::extraction::{
    aggregate_terms, extract_dates, extract_gazetteer, extract_places, extract_terms, parse_patterns, score_terms,
    Gazetteer, Mention, MentionKind, NoticeContext, PeriodTable, TermOccurrence, TermPattern,
};
use crate::lingproc::{pos_tag, split_sentences, tokenize_at, Pos, PosLexicon, Token};
use crate::store::{persist, Batch, NoticeRecord, Snapshot, StoreError};
use crate::structure::{segment_notices, validate_partition, NoticeGrammar, HEADER_ZONE};
use crate::terminology::{link_normalized, normalize_form, ConceptTable, LinkOptions, LinkResult, NormalizationRules};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{path}: {message}")]
    Resource { path: String, message: String },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("document {doc_id}: {message}")]
    Document { doc_id: String, message: String },
    #[error(transparent)]
    Store(#[from] StoreError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LexiconPaths {
    pub lexicon: PathBuf,
    pub suffixes: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub corpus_dir: PathBuf,
    pub store_dir: PathBuf,
    pub grammar: PathBuf,
    pub periods: PathBuf,
    pub gazetteer: PathBuf,
    #[serde(default)]
    pub persons: Option<PathBuf>,
    pub patterns: PathBuf,
    pub concepts: PathBuf,
    pub default_language: Language,
    pub lexicons: BTreeMap<Language, LexiconPaths>,
    #[serde(default)]
    pub linking: LinkOptions,
    #[serde(default)]
    pub normalization: NormalizationRules,
}

impl PipelineConfig {
    pub fn from_toml(src: &str, base_dir: &Path) -> Result<Self, PipelineError> {
        let mut cfg: PipelineConfig = toml::from_str(src).map_err(|e| PipelineError::Config(e.to_string()))?;
        cfg.resolve(base_dir);
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self, PipelineError> {
        let src = fs::read_to_string(path).map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&src, path.parent().unwrap_or(Path::new(".")))
    }

    fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.corpus_dir);
        fix(&mut self.store_dir);
        fix(&mut self.grammar);
        fix(&mut self.periods);
        fix(&mut self.gazetteer);
        fix(&mut self.patterns);
        fix(&mut self.concepts);
        if let Some(p) = &mut self.persons {
            fix(p);
        }
        for l in self.lexicons.values_mut() {
            fix(&mut l.lexicon);
            fix(&mut l.suffixes);
        }
    }

    /// Checks that every referenced input exists.
    pub fn validate(&self) -> Result<(), PipelineError> {
        if !self.corpus_dir.is_dir() {
            return Err(PipelineError::Config(format!("corpus_dir {} is not a directory", self.corpus_dir.display())));
        }
        let mut files = vec![&self.grammar, &self.periods, &self.gazetteer, &self.patterns, &self.concepts];
        files.extend(self.persons.iter());
        for l in self.lexicons.values() {
            files.push(&l.lexicon);
            files.push(&l.suffixes);
        }
        for f in files {
            if !f.is_file() {
                return Err(PipelineError::Config(format!("missing file {}", f.display())));
            }
        }
        self.normalization.validate().map_err(|e| PipelineError::Config(e.to_string()))
    }
}

/// Everything a run needs, loaded and compiled.
#[derive(Debug, Clone)]
pub struct Resources {
    pub grammar: NoticeGrammar,
    pub periods: PeriodTable,
    pub places: Gazetteer,
    pub persons: Gazetteer,
    pub patterns: Vec<TermPattern>,
    pub lexicons: BTreeMap<Language, PosLexicon>,
    pub concepts: ConceptTable,
    pub rules: NormalizationRules,
    pub linking: LinkOptions,
}

fn read(path: &Path) -> Result<String, PipelineError> {
    fs::read_to_string(path).map_err(|e| PipelineError::Resource { path: path.display().to_string(), message: e.to_string() })
}

fn resource<T, E: std::fmt::Display>(path: &Path, r: Result<T, E>) -> Result<T, PipelineError> {
    r.map_err(|e| PipelineError::Resource { path: path.display().to_string(), message: e.to_string() })
}

impl Resources {
    pub fn load(cfg: &PipelineConfig) -> Result<Self, PipelineError> {
        cfg.validate()?;
        let mut lexicons = BTreeMap::new();
        for (lang, paths) in &cfg.lexicons {
            let lex = PosLexicon::from_tsv(&read(&paths.lexicon)?, &read(&paths.suffixes)?, Pos::N);
            lexicons.insert(*lang, resource(&paths.lexicon, lex)?);
        }
        let persons = match &cfg.persons {
            Some(p) => resource(p, Gazetteer::from_tsv(&read(p)?))?,
            None => Gazetteer::new(),
        };
        Ok(Resources {
            grammar: resource(&cfg.grammar, NoticeGrammar::from_toml(&read(&cfg.grammar)?))?,
            periods: resource(&cfg.periods, PeriodTable::from_tsv(&read(&cfg.periods)?))?,
            places: resource(&cfg.gazetteer, Gazetteer::from_tsv(&read(&cfg.gazetteer)?))?,
            persons,
            patterns: resource(&cfg.patterns, parse_patterns(&read(&cfg.patterns)?))?,
            lexicons,
            concepts: resource(&cfg.concepts, ConceptTable::from_tsv(&read(&cfg.concepts)?, &cfg.normalization))?,
            rules: cfg.normalization.clone(),
            linking: cfg.linking,
        })
    }
}

/// What one document contributes to the store.
#[derive(Debug, Clone, Default)]
pub struct DocumentOutput {
    pub notices: Vec<NoticeRecord>,
    pub mentions: Vec<Mention>,
    pub terms: Vec<TermOccurrence>,
    pub warnings: Vec<Warning>,
}

/// Links a term mention: the whole form first, then its head word.
pub fn link_term(
    normalized: &str,
    head_surface: &str,
    language: Language,
    res: &Resources,
) -> LinkResult {
    let full = link_normalized(normalized, &res.concepts, language, &res.linking);
    if full.concept_id().is_some() {
        return full;
    }
    let head = normalize_form(head_surface, &res.rules);
    if head == normalized {
        return full;
    }
    link_normalized(&head, &res.concepts, language, &res.linking)
}

/// Leftmost-first choice of non-overlapping occurrences; input sorted by start.
fn non_overlapping(occs: Vec<TermOccurrence>) -> Vec<TermOccurrence> {
    let mut out: Vec<TermOccurrence> = Vec::with_capacity(occs.len());
    for o in occs {
        if out.last().is_none_or(|prev| prev.tokens.1 <= o.tokens.0) {
            out.push(o);
        }
    }
    out
}

fn process_notice(
    doc: &Document,
    notice: &crate::structure::Notice,
    lexicon: &PosLexicon,
    res: &Resources,
    out: &mut DocumentOutput,
    diags: &mut Vec<Diagnostic>,
) {
    let language = doc.meta.language;
    let ctx = NoticeContext::new(doc, &notice.notice_id);
    let tagged = pos_tag(&tokenize_at(doc.slice(notice.span), notice.span.start), lexicon);

    let (dates, warnings) = extract_dates(ctx, &tagged, &res.periods, language);
    diags.extend(warnings);
    let mut entities = dates;
    entities.extend(extract_places(ctx, &tagged, &res.places));
    entities.extend(extract_gazetteer(ctx, &tagged, &res.persons, MentionKind::Person));

    // terms come from the notice body only, never from inside a named entity
    let header_end = notice
        .zones
        .iter()
        .find(|z| z.label == HEADER_ZONE)
        .map_or(notice.span.start, |z| z.span.end);
    let blocked = |t: &Token| t.span.start < header_end || entities.iter().any(|m| m.span.overlaps(&t.span));
    let mut terms = Vec::new();
    for (s, e) in split_sentences(&tagged) {
        let mut run_start = s;
        for i in s..=e {
            if i == e || blocked(&tagged[i]) {
                if run_start < i {
                    let occs = extract_terms(&tagged[run_start..i], &res.patterns, &notice.notice_id);
                    for occ in non_overlapping(occs) {
                        let head = tagged[run_start + occ.tokens.0 + occ.head_index].surface.clone();
                        terms.push((occ, head));
                    }
                }
                run_start = i + 1;
            }
        }
    }

    for (occ, head) in terms {
        let surface = doc.slice(occ.span).to_owned();
        let normalized = normalize_form(&surface, &res.rules);
        let concept = link_term(&normalized, &head, language, res).concept_id().map(str::to_owned);
        let mut m = Mention::new(&notice.notice_id, MentionKind::Term, occ.span, surface, normalized);
        m.concept_id = concept;
        out.mentions.push(m);
        out.terms.push(occ);
    }
    out.mentions.extend(entities);
}

/// Runs every per-document stage. Pure: reads nothing from disk.
pub fn process_document(doc: &Document, res: &Resources) -> Result<DocumentOutput, PipelineError> {
    let lexicon = res.lexicons.get(&doc.meta.language).ok_or_else(|| PipelineError::Document {
        doc_id: doc.meta.doc_id.clone(),
        message: format!("no lexicon configured for language {}", doc.meta.language),
    })?;
    let seg = segment_notices(doc, &res.grammar);
    let mut diags = seg.warnings.clone();
    let report = validate_partition(doc, seg.preamble, &seg.notices);
    for v in &report.violations {
        diags.push(Diagnostic::new(v.span().start, format!("segmentation: {v:?}")));
    }

    let mut out = DocumentOutput::default();
    for notice in &seg.notices {
        process_notice(doc, notice, lexicon, res, &mut out, &mut diags);
        out.notices.push(NoticeRecord::from_notice(&doc.meta.doc_id, notice));
    }
    diags.sort_by_key(|d| d.offset);
    out.warnings = diags.into_iter().map(|d| d.in_document(&doc.meta.doc_id)).collect();
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocumentReport {
    pub doc_id: String,
    pub notices: usize,
    pub mentions: BTreeMap<MentionKind, usize>,
    pub terms_linked: usize,
    /// Linked term mentions over all term mentions; 0 when there are none.
    pub linked_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub documents: Vec<DocumentReport>,
    pub warnings: Vec<Warning>,
    pub store_version: u64,
}

impl RunReport {
    pub fn total_notices(&self) -> usize {
        self.documents.iter().map(|d| d.notices).sum()
    }

    pub fn total_mentions(&self, kind: MentionKind) -> usize {
        self.documents.iter().map(|d| d.mentions.get(&kind).copied().unwrap_or(0)).sum()
    }
}

fn document_report(doc_id: &str, out: &DocumentOutput) -> DocumentReport {
    let mut mentions: BTreeMap<MentionKind, usize> = MentionKind::ALL.iter().map(|k| (*k, 0)).collect();
    for m in &out.mentions {
        *mentions.entry(m.kind).or_default() += 1;
    }
    let terms = mentions[&MentionKind::Term];
    let terms_linked = out.mentions.iter().filter(|m| m.kind == MentionKind::Term && m.concept_id.is_some()).count();
    DocumentReport {
        doc_id: doc_id.to_owned(),
        notices: out.notices.len(),
        mentions,
        terms_linked,
        linked_ratio: if terms == 0 { 0.0 } else { terms_linked as f64 / terms as f64 },
    }
}

/// Builds a fresh snapshot from `documents`. The store is not touched.
pub fn build_snapshot(documents: Vec<Document>, res: &Resources) -> Result<(Snapshot, RunReport), PipelineError> {
    let outputs = documents
        .par_iter()
        .map(|d| process_document(d, res))
        .collect::<Result<Vec<_>, _>>()?;

    let mut batch = Batch { concepts: Some(res.concepts.clone()), ..Default::default() };
    let mut reports = Vec::new();
    let mut warnings = Vec::new();
    let mut occurrences = Vec::new();
    for (doc, out) in documents.iter().zip(outputs) {
        reports.push(document_report(&doc.meta.doc_id, &out));
        warnings.extend(out.warnings);
        batch.notices.extend(out.notices);
        batch.mentions.extend(out.mentions);
        occurrences.extend(out.terms);
    }
    batch.terms = Some(score_terms(aggregate_terms(occurrences)));
    batch.documents = documents;
    let snapshot = Snapshot::empty().commit(batch)?;
    let report = RunReport { documents: reports, warnings, store_version: snapshot.version() };
    Ok((snapshot, report))
}

/// Full run: load inputs, build the snapshot and persist it to `store_dir`,
/// replacing whatever was there.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<RunReport, PipelineError> {
    let res = Resources::load(cfg)?;
    let documents = load_corpus_dir(&cfg.corpus_dir, cfg.default_language)?;
    let (snapshot, report) = build_snapshot(documents, &res)?;
    persist(&snapshot, &cfg.store_dir)?;
    Ok(report)
}
