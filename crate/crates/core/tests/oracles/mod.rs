//! Slow, obviously-correct reference implementations used by the integration
//! and acceptance tests. Nothing here shares an algorithm with the crate: each
//! oracle rescans raw data instead of using indexes or incremental state.

#![allow(dead_code, clippy::needless_range_loop)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use rand::seq::IndexedRandom;
use rand::Rng;

use cartae_core::corpus::load_document;
use cartae_core::extraction::{TermPattern, TimeRange};
use cartae_core::lingproc::{fold, tokenize_at, Pos, Token};
use cartae_core::store::{Batch, Hit, NoticeRecord, Query, ResultPage};
use cartae_core::terminology::{Concept, ConceptTable, Label, LinkOptions};
use cartae_core::{DocumentMeta, Language, Mention, MentionKind, Snapshot, Span};

pub fn fixtures_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

// ---------------------------------------------------------------- queries

fn word_tokens(snapshot: &Snapshot, notice: &NoticeRecord) -> Vec<Token> {
    let text = snapshot.notice_text(&notice.notice_id).unwrap();
    tokenize_at(text, notice.span.start).into_iter().filter(|t| t.pos != Some(Pos::Punct)).collect()
}

/// Full scan over every notice: retokenize, count, filter by walking all
/// mentions, sort, paginate.
pub fn naive_query(snapshot: &Snapshot, q: &Query) -> ResultPage {
    let mentions: Vec<&Mention> = snapshot.mentions().collect();
    let mut hits = Vec::new();
    for notice in snapshot.notices() {
        let id = &notice.notice_id;
        let toks = word_tokens(snapshot, notice);
        let mut spans = Vec::new();
        let mut all_present = true;
        for term in &q.text_terms {
            let found: Vec<Span> = toks.iter().filter(|t| &fold(&t.surface) == term).map(|t| t.span).collect();
            if found.is_empty() {
                all_present = false;
            }
            spans.extend(found);
        }
        if !all_present {
            continue;
        }
        let mine: Vec<&&Mention> = mentions.iter().filter(|m| &m.notice_id == id).collect();
        if let Some(c) = &q.concept_id {
            if !mine.iter().any(|m| m.concept_id.as_ref() == Some(c)) {
                continue;
            }
        }
        if let Some(p) = &q.place_id {
            if !mine.iter().any(|m| m.kind == MentionKind::Place && m.entity_id.as_ref() == Some(p)) {
                continue;
            }
        }
        if let Some(r) = &q.period {
            let hit = mine.iter().filter_map(|m| m.time).any(|t| {
                // overlap iff neither interval lies strictly on one side
                !(t.to_year < r.from_year || r.to_year < t.from_year)
            });
            if !hit {
                continue;
            }
        }
        if let Some(muni) = &q.municipality {
            let key = fold(&notice.municipality).split_whitespace().collect::<Vec<_>>().join(" ");
            if &key != muni {
                continue;
            }
        }
        spans.sort();
        hits.push(Hit { notice_id: id.clone(), score: spans.len() as u64, matched_spans: spans });
    }
    // insertion sort by (score desc, id asc), to avoid sharing the sort call
    let mut sorted: Vec<Hit> = Vec::new();
    for h in hits {
        let at = sorted
            .iter()
            .position(|s| (h.score > s.score) || (h.score == s.score && h.notice_id < s.notice_id))
            .unwrap_or(sorted.len());
        sorted.insert(at, h);
    }
    let total = sorted.len();
    let hits = sorted.into_iter().skip(q.offset).take(q.limit).collect();
    ResultPage { total, hits }
}

/// `(folded token, notice_id, position)` for every indexed token.
pub fn token_occurrences(snapshot: &Snapshot) -> BTreeSet<(String, String, u32)> {
    let mut out = BTreeSet::new();
    for n in snapshot.notices() {
        for (pos, t) in word_tokens(snapshot, n).iter().enumerate() {
            out.insert((fold(&t.surface), n.notice_id.clone(), pos as u32));
        }
    }
    out
}

// ---------------------------------------------------------------- terms

fn window_matches(window: &[Token], pattern: &TermPattern) -> bool {
    window.len() == pattern.len() && window.iter().zip(pattern.tags()).all(|(t, p)| t.pos == Some(*p))
}

/// Every `(start, end)` window that some pattern matches and that no other
/// matching window strictly contains.
pub fn brute_force_terms(tagged: &[Token], patterns: &[TermPattern]) -> BTreeSet<(usize, usize)> {
    let mut all = BTreeSet::new();
    for i in 0..tagged.len() {
        for j in i + 1..=tagged.len() {
            if patterns.iter().any(|p| window_matches(&tagged[i..j], p)) {
                all.insert((i, j));
            }
        }
    }
    all.iter()
        .filter(|&&(i, j)| !all.iter().any(|&(a, b)| a <= i && j <= b && (a, b) != (i, j)))
        .copied()
        .collect()
}

// ---------------------------------------------------------------- linking

/// Plain full-matrix Levenshtein distance over scalars.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut d = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i;
    }
    for j in 0..=b.len() {
        d[0][j] = j;
    }
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            let cost = if a[i - 1] == b[j - 1] { 0 } else { 1 };
            d[i][j] = (d[i - 1][j] + 1).min(d[i][j - 1] + 1).min(d[i - 1][j - 1] + cost);
        }
    }
    d[a.len()][b.len()]
}

/// Expected `(concept_id, distance)` by enumerating every label of the table.
pub fn brute_force_link(
    normalized: &str,
    table: &ConceptTable,
    language: Language,
    opts: &LinkOptions,
) -> Option<(String, usize)> {
    let mut labels: Vec<(String, String)> = Vec::new();
    for c in table.concepts() {
        for l in c.labels.get(&language).into_iter().flatten() {
            labels.push((l.normalized.clone(), c.concept_id.clone()));
        }
    }
    if let Some((_, id)) = labels.iter().find(|(l, _)| l == normalized) {
        return Some((id.clone(), 0));
    }
    if !opts.fuzzy_enabled || normalized.chars().count() < opts.min_length_for_fuzzy {
        return None;
    }
    labels
        .iter()
        .map(|(l, id)| (levenshtein(normalized, l), id.clone()))
        .filter(|(d, _)| *d <= opts.max_edit_distance)
        .min()
        .map(|(d, id)| (id, d))
}

// ---------------------------------------------------------------- tiling

/// Offsets covered zero times or more than once, at both levels.
pub fn tiling_defects(len: usize, preamble: Span, notices: &[(Span, Vec<Span>)]) -> Vec<String> {
    let mut defects = Vec::new();
    let mut cover = vec![0u32; len];
    for s in std::iter::once(&preamble).chain(notices.iter().map(|(s, _)| s)) {
        for off in s.start..s.end.min(len) {
            cover[off] += 1;
        }
        if s.end > len {
            defects.push(format!("span {s} beyond text end {len}"));
        }
    }
    for (off, c) in cover.iter().enumerate() {
        if *c != 1 {
            defects.push(format!("offset {off} covered {c} times"));
        }
    }
    for (span, zones) in notices {
        let mut inner = vec![0u32; span.len()];
        for z in zones {
            for off in z.start..z.end {
                if off < span.start || off >= span.end {
                    defects.push(format!("zone {z} leaves notice {span}"));
                    break;
                }
                inner[off - span.start] += 1;
            }
        }
        for (k, c) in inner.iter().enumerate() {
            if *c != 1 {
                defects.push(format!("notice {span}: offset {} covered by {c} zones", span.start + k));
            }
        }
    }
    defects
}

// ---------------------------------------------------------------- random stores

const WORDS: [&str; 14] = [
    "fibule", "Fibule", "céramique", "ceramique", "CÉRAMIQUE", "vase", "épée", "epee", "monnaie", "tesson", "bronze",
    "sigillée", "amphore", "tombe",
];
const MUNIS: [&str; 6] = ["Arces", "Bâle", "Saint-Moré", "Sens", "Bale", "Noyers"];

pub fn random_range<R: Rng>(rng: &mut R) -> TimeRange {
    let year = |rng: &mut R| loop {
        let y = rng.random_range(-800..=800);
        if y != 0 {
            return y;
        }
    };
    let (a, b) = (year(rng), year(rng));
    TimeRange::new(a.min(b), a.max(b)).unwrap()
}

/// A store of `n` notices spread over up to three documents, with random
/// dates, places and concept links.
pub fn random_store<R: Rng>(rng: &mut R, n: usize) -> Snapshot {
    let mut concepts = Vec::new();
    for k in 1..=6 {
        let mut c = Concept::new(format!("C{k}"));
        c.labels.insert(Language::Fr, vec![Label { display: format!("l{k}"), normalized: format!("l{k}") }]);
        concepts.push(c);
    }
    let table = ConceptTable::from_concepts(concepts).unwrap();

    let docs = rng.random_range(1..=3usize);
    let mut per_doc: Vec<Vec<usize>> = vec![Vec::new(); docs];
    for i in 0..n {
        per_doc[rng.random_range(0..docs)].push(i);
    }
    let mut batch = Batch { concepts: Some(table), ..Default::default() };
    for (d, numbers) in per_doc.into_iter().enumerate() {
        let doc_id = format!("doc{d}");
        let mut text = String::new();
        let mut spans = Vec::new();
        for num in &numbers {
            let start = text.chars().count();
            let muni = *MUNIS.choose(rng).unwrap();
            text.push_str(&format!("{num} - {muni}\n"));
            let words = rng.random_range(0..25);
            for w in 0..words {
                text.push_str(WORDS.choose(rng).unwrap());
                text.push_str(if w % 7 == 6 { ". " } else { " " });
            }
            text.push('\n');
            spans.push((format!("{doc_id}#{num}"), *num, muni, Span::new(start, text.chars().count())));
        }
        let doc = load_document(text.as_bytes(), DocumentMeta::new(doc_id.clone(), Language::Fr)).unwrap();
        for (id, num, muni, span) in spans {
            let toks: Vec<Token> = tokenize_at(doc.slice(span), span.start).into_iter().filter(Token::is_word).collect();
            for t in &toks {
                let roll = rng.random_range(0..10);
                let mut m = match roll {
                    0 => {
                        let mut m = Mention::new(&id, MentionKind::Date, t.span, t.surface.clone(), "d".into());
                        m.time = Some(random_range(rng));
                        m
                    }
                    1 => {
                        let mut m = Mention::new(&id, MentionKind::Place, t.span, t.surface.clone(), "p".into());
                        m.entity_id = Some(format!("P{}", rng.random_range(1..=5)));
                        m
                    }
                    2 | 3 => Mention::new(&id, MentionKind::Term, t.span, t.surface.clone(), fold(&t.surface)),
                    _ => continue,
                };
                if m.kind == MentionKind::Term && rng.random_bool(0.7) {
                    m.concept_id = Some(format!("C{}", rng.random_range(1..=6)));
                }
                batch.mentions.push(m);
            }
            batch.notices.push(NoticeRecord {
                notice_id: id,
                doc_id: doc_id.clone(),
                number: num as u64,
                municipality: muni.to_owned(),
                span,
                zones: Vec::new(),
            });
        }
        batch.documents.push(doc);
    }
    Snapshot::empty().commit(batch).unwrap()
}

/// A random conjunctive query, normalized the way the API does it.
pub fn random_query<R: Rng>(rng: &mut R) -> Query {
    let mut terms: Vec<String> = Vec::new();
    for _ in 0..rng.random_range(0..=2) {
        terms.push(if rng.random_bool(0.1) { "absent".into() } else { WORDS.choose(rng).unwrap().to_string() });
    }
    let q = Query {
        text_terms: terms,
        concept_id: rng.random_bool(0.3).then(|| format!("C{}", rng.random_range(1..=7))),
        place_id: rng.random_bool(0.3).then(|| format!("P{}", rng.random_range(1..=6))),
        period: rng.random_bool(0.3).then(|| random_range(rng)),
        municipality: rng.random_bool(0.2).then(|| MUNIS.choose(rng).unwrap().to_uppercase()),
        limit: rng.random_range(1..=12),
        offset: rng.random_range(0..=4),
    };
    q.normalized()
}

/// Mentions keyed by kind, for counting.
pub fn count_by_kind<'a>(mentions: impl Iterator<Item = &'a Mention>) -> BTreeMap<MentionKind, usize> {
    let mut out = BTreeMap::new();
    for m in mentions {
        *out.entry(m.kind).or_insert(0) += 1;
    }
    out
}
