//! Variant normalization, concept linking and terminology curation.
//!
//! The concept table is multilingual: each concept carries per-language label
//! sets. Labels are stored with their normalized key, computed by the same
//! [`normalize_form`] applied to mentions, so exact linking is a key lookup.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Language;
use crate::extraction::{Mention, TermCandidate};
use crate::lingproc::{fold, fold_diacritics};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TerminologyError {
    #[error("unknown concept {0:?}")]
    UnknownConcept(String),
    #[error("merge must keep the lexicographically smaller id: {keep:?} >= {merge:?}")]
    MergeOrderViolation { keep: String, merge: String },
    #[error("label {label:?} ({language}) already belongs to concept {concept_id:?}")]
    DuplicateLabel { concept_id: String, language: Language, label: String },
    #[error("concept {concept_id:?} has no {language} label {label:?}")]
    UnknownLabel { concept_id: String, language: Language, label: String },
    #[error("concept {0:?} already exists")]
    ConceptExists(String),
    #[error("label {0:?} is empty after normalization")]
    EmptyLabel(String),
    #[error("invalid normalization rules: {0}")]
    InvalidRules(String),
    #[error("concept table line {line}: {message}")]
    Table { line: usize, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct NormalizationRules {
    pub fold_case: bool,
    pub fold_diacritics: bool,
    /// `(suffix, replacement)` pairs tried in order on each word.
    pub plural_suffixes: Vec<(String, String)>,
    pub min_stem_length: usize,
}

impl Default for NormalizationRules {
    fn default() -> Self {
        NormalizationRules {
            fold_case: true,
            fold_diacritics: true,
            plural_suffixes: [("aux", "al"), ("x", ""), ("s", "")]
                .into_iter()
                .map(|(s, r)| (s.to_owned(), r.to_owned()))
                .collect(),
            min_stem_length: 3,
        }
    }
}

impl NormalizationRules {
    /// Every suffix must be non-empty and strictly longer than its replacement,
    /// which makes repeated application terminate.
    pub fn validate(&self) -> Result<(), TerminologyError> {
        for (suffix, replacement) in &self.plural_suffixes {
            if suffix.is_empty() || replacement.chars().count() >= suffix.chars().count() {
                return Err(TerminologyError::InvalidRules(format!(
                    "suffix rule {suffix:?} -> {replacement:?} must shorten the word"
                )));
            }
        }
        Ok(())
    }

    fn strip_plural(&self, word: &str) -> String {
        let mut word = word.to_owned();
        // apply until no rule fires, so that the result is a fixpoint
        'outer: loop {
            for (suffix, replacement) in &self.plural_suffixes {
                if let Some(stem) = word.strip_suffix(suffix.as_str()) {
                    let candidate = format!("{stem}{replacement}");
                    if candidate.chars().count() >= self.min_stem_length {
                        word = candidate;
                        continue 'outer;
                    }
                }
            }
            return word;
        }
    }
}

/// Case and diacritic folding, whitespace collapse, then plural reduction of
/// each word. Idempotent for valid rules.
pub fn normalize_form(s: &str, rules: &NormalizationRules) -> String {
    let mut folded = s.to_owned();
    if rules.fold_case && rules.fold_diacritics {
        folded = fold(&folded);
    } else if rules.fold_case {
        folded = folded.to_lowercase();
    } else if rules.fold_diacritics {
        folded = fold_diacritics(&folded);
    }
    folded.split_whitespace().map(|w| rules.strip_plural(w)).collect::<Vec<_>>().join(" ")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariantCluster {
    pub key: String,
    pub total_freq: usize,
    pub members: Vec<TermCandidate>,
}

/// Groups candidates whose normalized forms share a key; clusters are sorted
/// by total frequency desc then key asc, members by frequency desc then form.
pub fn cluster_variants(candidates: &[TermCandidate], rules: &NormalizationRules) -> Vec<VariantCluster> {
    let mut groups: BTreeMap<String, Vec<TermCandidate>> = BTreeMap::new();
    for c in candidates {
        groups.entry(normalize_form(&c.normalized, rules)).or_default().push(c.clone());
    }
    let mut clusters: Vec<VariantCluster> = groups
        .into_iter()
        .map(|(key, mut members)| {
            members.sort_by(|a, b| b.freq.cmp(&a.freq).then_with(|| a.normalized.cmp(&b.normalized)));
            VariantCluster { key, total_freq: members.iter().map(|m| m.freq).sum(), members }
        })
        .collect();
    clusters.sort_by(|a, b| b.total_freq.cmp(&a.total_freq).then_with(|| a.key.cmp(&b.key)));
    clusters
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Label {
    pub display: String,
    pub normalized: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Concept {
    pub concept_id: String,
    pub labels: BTreeMap<Language, Vec<Label>>,
    /// Display form of the preferred label per language.
    pub preferred_label: BTreeMap<Language, String>,
    #[serde(default)]
    pub notes: String,
}

impl Concept {
    pub fn new(concept_id: impl Into<String>) -> Self {
        Concept {
            concept_id: concept_id.into(),
            labels: BTreeMap::new(),
            preferred_label: BTreeMap::new(),
            notes: String::new(),
        }
    }

    pub fn label_count(&self) -> usize {
        self.labels.values().map(Vec::len).sum()
    }

    /// `(language, display)` for every label.
    pub fn label_pairs(&self) -> impl Iterator<Item = (Language, &str)> {
        self.labels.iter().flat_map(|(lang, ls)| ls.iter().map(move |l| (*lang, l.display.as_str())))
    }

    fn fix_preferred(&mut self) {
        let langs: Vec<Language> = self.labels.keys().copied().collect();
        for lang in langs {
            let labels = &self.labels[&lang];
            let ok = self.preferred_label.get(&lang).is_some_and(|p| labels.iter().any(|l| &l.display == p));
            if !ok {
                if let Some(first) = labels.first() {
                    self.preferred_label.insert(lang, first.display.clone());
                }
            }
        }
        self.labels.retain(|_, ls| !ls.is_empty());
        let labels = &self.labels;
        self.preferred_label.retain(|lang, _| labels.contains_key(lang));
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct LinkOptions {
    pub fuzzy_enabled: bool,
    pub max_edit_distance: usize,
    pub min_length_for_fuzzy: usize,
}

impl Default for LinkOptions {
    fn default() -> Self {
        LinkOptions { fuzzy_enabled: false, max_edit_distance: 1, min_length_for_fuzzy: 6 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinkMethod {
    Exact,
    Fuzzy,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum LinkResult {
    Linked { concept_id: String, method: LinkMethod, distance: usize },
    Unlinked,
}

impl LinkResult {
    pub fn concept_id(&self) -> Option<&str> {
        match self {
            LinkResult::Linked { concept_id, .. } => Some(concept_id),
            LinkResult::Unlinked => None,
        }
    }
}

/// Levenshtein distance over Unicode scalars.
pub fn edit_distance(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// The multilingual concept table, with a per-language index of normalized labels.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConceptTable {
    concepts: BTreeMap<String, Concept>,
    // (language, normalized label) -> concept_id
    index: BTreeMap<(Language, String), String>,
}

impl ConceptTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a table from concepts whose labels are already normalized.
    pub fn from_concepts(concepts: impl IntoIterator<Item = Concept>) -> Result<Self, TerminologyError> {
        let mut table = ConceptTable::new();
        for c in concepts {
            if table.concepts.contains_key(&c.concept_id) {
                return Err(TerminologyError::ConceptExists(c.concept_id));
            }
            table.index_concept(&c)?;
            table.concepts.insert(c.concept_id.clone(), c);
        }
        Ok(table)
    }

    fn index_concept(&mut self, c: &Concept) -> Result<(), TerminologyError> {
        for (lang, labels) in &c.labels {
            for l in labels {
                let key = (*lang, l.normalized.clone());
                match self.index.get(&key) {
                    Some(owner) if owner != &c.concept_id => {
                        return Err(TerminologyError::DuplicateLabel {
                            concept_id: owner.clone(),
                            language: *lang,
                            label: l.display.clone(),
                        })
                    }
                    _ => {
                        self.index.insert(key, c.concept_id.clone());
                    }
                }
            }
        }
        Ok(())
    }

    /// Parses `concept_id<TAB>language<TAB>label<TAB>is_preferred` rows.
    pub fn from_tsv(src: &str, rules: &NormalizationRules) -> Result<Self, TerminologyError> {
        let mut concepts: BTreeMap<String, Concept> = BTreeMap::new();
        for (idx, line) in src.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| TerminologyError::Table { line: idx + 1, message };
            let cols: Vec<&str> = line.split('\t').collect();
            let [id, lang, label, preferred] = cols[..] else {
                return Err(err(format!("expected 4 columns, found {}", cols.len())));
            };
            let lang: Language = lang.parse().map_err(|e: crate::corpus::CorpusError| err(e.to_string()))?;
            let preferred = match preferred.trim() {
                "1" => true,
                "0" => false,
                other => return Err(err(format!("is_preferred must be 0 or 1, found {other:?}"))),
            };
            let label = label.trim();
            let normalized = normalize_form(label, rules);
            if normalized.is_empty() {
                return Err(err("empty label".into()));
            }
            let concept = concepts.entry(id.trim().to_owned()).or_insert_with(|| Concept::new(id.trim()));
            let entry = concept.labels.entry(lang).or_default();
            if entry.iter().any(|l| l.normalized == normalized) {
                return Err(err(format!("duplicate label {label:?}")));
            }
            entry.push(Label { display: label.to_owned(), normalized });
            if preferred {
                concept.preferred_label.insert(lang, label.to_owned());
            }
        }
        for c in concepts.values_mut() {
            c.fix_preferred();
        }
        Self::from_concepts(concepts.into_values())
    }

    /// Writes the table back in the TSV layout read by [`ConceptTable::from_tsv`].
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for c in self.concepts.values() {
            for (lang, display) in c.label_pairs() {
                let preferred = c.preferred_label.get(&lang).is_some_and(|p| p == display);
                out.push_str(&format!("{}\t{}\t{}\t{}\n", c.concept_id, lang, display, u8::from(preferred)));
            }
        }
        out
    }

    pub fn get(&self, concept_id: &str) -> Option<&Concept> {
        self.concepts.get(concept_id)
    }

    pub fn contains(&self, concept_id: &str) -> bool {
        self.concepts.contains_key(concept_id)
    }

    pub fn len(&self) -> usize {
        self.concepts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.concepts.is_empty()
    }

    pub fn concepts(&self) -> impl Iterator<Item = &Concept> {
        self.concepts.values()
    }

    /// Concept whose `language` label normalizes to `normalized`.
    pub fn find_exact(&self, language: Language, normalized: &str) -> Option<&str> {
        self.index.get(&(language, normalized.to_owned())).map(String::as_str)
    }

    /// Concepts having a label with this normalized key in any language, ascending.
    pub fn find_any_language(&self, normalized: &str) -> Vec<&str> {
        let ids: BTreeSet<&str> = Language::ALL
            .iter()
            .filter_map(|lang| self.find_exact(*lang, normalized))
            .collect();
        ids.into_iter().collect()
    }

    /// Every `(language, label)` pair, as a sorted multiset.
    pub fn label_multiset(&self) -> Vec<(Language, String)> {
        let mut all: Vec<_> =
            self.concepts.values().flat_map(|c| c.label_pairs().map(|(l, d)| (l, d.to_owned()))).collect();
        all.sort();
        all
    }
}

/// Links a normalized form: exact label match in `language` first, then, if
/// enabled and the form is long enough, the closest label within the distance
/// bound (ties broken by concept id).
pub fn link_normalized(normalized: &str, table: &ConceptTable, language: Language, opts: &LinkOptions) -> LinkResult {
    if let Some(id) = table.find_exact(language, normalized) {
        return LinkResult::Linked { concept_id: id.to_owned(), method: LinkMethod::Exact, distance: 0 };
    }
    if !opts.fuzzy_enabled || normalized.chars().count() < opts.min_length_for_fuzzy {
        return LinkResult::Unlinked;
    }
    let len = normalized.chars().count();
    table
        .index
        .range((language, String::new())..)
        .take_while(|((lang, _), _)| *lang == language)
        .filter(|((_, label), _)| label.chars().count().abs_diff(len) <= opts.max_edit_distance)
        .map(|((_, label), id)| (edit_distance(normalized, label), id))
        .filter(|(d, _)| *d <= opts.max_edit_distance)
        .min()
        .map_or(LinkResult::Unlinked, |(distance, id)| LinkResult::Linked {
            concept_id: id.clone(),
            method: LinkMethod::Fuzzy,
            distance,
        })
}

/// Links `mention.normalized`, which must come from [`normalize_form`] with the
/// rules used for the table's labels.
pub fn link_mention(mention: &Mention, table: &ConceptTable, language: Language, opts: &LinkOptions) -> LinkResult {
    link_normalized(&mention.normalized, table, language, opts)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CurationEdit {
    AddLabel { concept_id: String, language: Language, label: String },
    MergeConcepts { keep_id: String, merge_id: String },
    SplitLabel { concept_id: String, language: Language, label: String, new_concept_id: String },
}

impl CurationEdit {
    pub fn kind(&self) -> &'static str {
        match self {
            CurationEdit::AddLabel { .. } => "add_label",
            CurationEdit::MergeConcepts { .. } => "merge_concepts",
            CurationEdit::SplitLabel { .. } => "split_label",
        }
    }
}

/// One line of the append-only curation log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditEntry {
    /// Milliseconds since the Unix epoch.
    pub timestamp: u64,
    pub kind: String,
    pub payload: CurationEdit,
}

/// Applies one edit and returns the new table with its audit record.
/// The input table is left untouched.
pub fn curate(
    table: &ConceptTable,
    edit: &CurationEdit,
    rules: &NormalizationRules,
    timestamp: u64,
) -> Result<(ConceptTable, AuditEntry), TerminologyError> {
    let mut next = table.clone();
    let unknown = |id: &str| TerminologyError::UnknownConcept(id.to_owned());
    match edit {
        CurationEdit::AddLabel { concept_id, language, label } => {
            let normalized = normalize_form(label, rules);
            if normalized.is_empty() {
                return Err(TerminologyError::EmptyLabel(label.clone()));
            }
            if let Some(owner) = next.find_exact(*language, &normalized) {
                return Err(TerminologyError::DuplicateLabel {
                    concept_id: owner.to_owned(),
                    language: *language,
                    label: label.clone(),
                });
            }
            let concept = next.concepts.get_mut(concept_id).ok_or_else(|| unknown(concept_id))?;
            concept.labels.entry(*language).or_default().push(Label { display: label.clone(), normalized: normalized.clone() });
            concept.fix_preferred();
            next.index.insert((*language, normalized), concept_id.clone());
        }
        CurationEdit::MergeConcepts { keep_id, merge_id } => {
            if !next.contains(keep_id) {
                return Err(unknown(keep_id));
            }
            if !next.contains(merge_id) {
                return Err(unknown(merge_id));
            }
            if keep_id >= merge_id {
                return Err(TerminologyError::MergeOrderViolation { keep: keep_id.clone(), merge: merge_id.clone() });
            }
            let gone = next.concepts.remove(merge_id).expect("checked above");
            let keep = next.concepts.get_mut(keep_id).expect("checked above");
            for (lang, labels) in gone.labels {
                for l in labels {
                    next.index.insert((lang, l.normalized.clone()), keep_id.clone());
                    keep.labels.entry(lang).or_default().push(l);
                }
            }
            for (lang, pref) in gone.preferred_label {
                keep.preferred_label.entry(lang).or_insert(pref);
            }
            if !gone.notes.is_empty() {
                if !keep.notes.is_empty() {
                    keep.notes.push_str("; ");
                }
                keep.notes.push_str(&gone.notes);
            }
            keep.fix_preferred();
        }
        CurationEdit::SplitLabel { concept_id, language, label, new_concept_id } => {
            if next.contains(new_concept_id) {
                return Err(TerminologyError::ConceptExists(new_concept_id.clone()));
            }
            let concept = next.concepts.get_mut(concept_id).ok_or_else(|| unknown(concept_id))?;
            let normalized = normalize_form(label, rules);
            let missing = || TerminologyError::UnknownLabel {
                concept_id: concept_id.clone(),
                language: *language,
                label: label.clone(),
            };
            let labels = concept.labels.get_mut(language).ok_or_else(missing)?;
            let pos = labels.iter().position(|l| l.normalized == normalized).ok_or_else(missing)?;
            let moved = labels.remove(pos);
            concept.fix_preferred();
            let mut fresh = Concept::new(new_concept_id.clone());
            fresh.preferred_label.insert(*language, moved.display.clone());
            fresh.labels.insert(*language, vec![moved]);
            next.index.insert((*language, normalized), new_concept_id.clone());
            next.concepts.insert(new_concept_id.clone(), fresh);
        }
    }
    let entry = AuditEntry { timestamp, kind: edit.kind().to_owned(), payload: edit.clone() };
    Ok((next, entry))
}
