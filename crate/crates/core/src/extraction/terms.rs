use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::lingproc::{Pos, Token};
use crate::span::Span;

use super::ExtractionError;

pub const DEFAULT_PATTERNS: &str = "N\nN A\nA N\nN N\nN P N\n";

/// A contiguous sequence of part-of-speech tags.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct TermPattern(Vec<Pos>);

impl TermPattern {
    pub fn tags(&self) -> &[Pos] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    fn matches(&self, tokens: &[Token]) -> bool {
        tokens.len() == self.0.len() && tokens.iter().zip(&self.0).all(|(t, p)| t.pos == Some(*p))
    }
}

impl std::str::FromStr for TermPattern {
    type Err = ExtractionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let invalid = |reason: String| ExtractionError::InvalidPattern { pattern: s.to_owned(), reason };
        let tags = s
            .split_whitespace()
            .map(|t| t.parse::<Pos>().map_err(|e| invalid(e.to_string())))
            .collect::<Result<Vec<_>, _>>()?;
        if tags.is_empty() {
            return Err(invalid("empty pattern".into()));
        }
        Ok(TermPattern(tags))
    }
}

impl TryFrom<String> for TermPattern {
    type Error = ExtractionError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<TermPattern> for String {
    fn from(p: TermPattern) -> String {
        p.to_string()
    }
}

impl fmt::Display for TermPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tags: Vec<&str> = self.0.iter().map(|p| p.as_str()).collect();
        f.write_str(&tags.join(" "))
    }
}

/// One pattern per line, tags separated by spaces. Blank and `#` lines are skipped.
pub fn parse_patterns(src: &str) -> Result<Vec<TermPattern>, ExtractionError> {
    src.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::parse)
        .collect()
}

/// Position of the head noun: the first `N`, or 0 when the pattern has none.
pub fn head_index(pattern: &TermPattern) -> usize {
    pattern.0.iter().position(|p| *p == Pos::N).unwrap_or(0)
}

/// A single maximal match inside one notice.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermOccurrence {
    pub notice_id: String,
    pub span: Span,
    /// Index range of the match in the token slice it was extracted from.
    pub tokens: (usize, usize),
    pub surface: String,
    pub normalized: String,
    pub pattern: TermPattern,
    pub head_index: usize,
}

/// Emits every maximal pattern match: a match is dropped when another match
/// strictly contains it.
pub fn extract_terms(tagged: &[Token], patterns: &[TermPattern], notice_id: &str) -> Vec<TermOccurrence> {
    // (start, end, pattern index); deduplicated by interval
    let mut matches: BTreeMap<(usize, std::cmp::Reverse<usize>), usize> = BTreeMap::new();
    for start in 0..tagged.len() {
        for (pi, p) in patterns.iter().enumerate() {
            let end = start + p.len();
            if end <= tagged.len() && p.matches(&tagged[start..end]) {
                matches.entry((start, std::cmp::Reverse(end))).or_insert(pi);
            }
        }
    }

    // sorted by start asc, end desc: a match is contained iff an earlier one reaches as far
    let mut out = Vec::new();
    let mut reach = 0;
    for ((start, std::cmp::Reverse(end)), pi) in matches {
        if end <= reach {
            continue;
        }
        reach = end;
        let toks = &tagged[start..end];
        let pattern = patterns[pi].clone();
        out.push(TermOccurrence {
            notice_id: notice_id.to_owned(),
            span: Span::new(toks[0].span.start, toks[toks.len() - 1].span.end),
            tokens: (start, end),
            surface: toks.iter().map(|t| t.surface.as_str()).collect::<Vec<_>>().join(" "),
            normalized: toks.iter().map(Token::key).collect::<Vec<_>>().join(" "),
            head_index: head_index(&pattern),
            pattern,
        });
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermCandidate {
    pub normalized: String,
    /// Surface of the first occurrence, for display.
    pub surface: String,
    pub pattern: TermPattern,
    pub head_index: usize,
    pub occurrences: Vec<(String, Span)>,
    pub freq: usize,
    /// Number of distinct notices the candidate occurs in.
    pub doc_freq: usize,
}

/// Merges occurrences by normalized form. The result does not depend on the
/// order of the input: occurrences are sorted and the first one supplies the
/// pattern and display surface.
pub fn aggregate_terms<I>(occurrences: I) -> Vec<TermCandidate>
where
    I: IntoIterator<Item = TermOccurrence>,
{
    let mut groups: BTreeMap<String, Vec<TermOccurrence>> = BTreeMap::new();
    for occ in occurrences {
        groups.entry(occ.normalized.clone()).or_default().push(occ);
    }
    groups
        .into_iter()
        .map(|(normalized, mut occs)| {
            occs.sort_by(|a, b| (&a.notice_id, a.span, &a.surface).cmp(&(&b.notice_id, b.span, &b.surface)));
            let first = &occs[0];
            let notices: BTreeSet<&str> = occs.iter().map(|o| o.notice_id.as_str()).collect();
            TermCandidate {
                surface: first.surface.clone(),
                pattern: first.pattern.clone(),
                head_index: first.head_index,
                doc_freq: notices.len(),
                freq: occs.len(),
                occurrences: occs.iter().map(|o| (o.notice_id.clone(), o.span)).collect(),
                normalized,
            }
        })
        .collect()
}

/// Orders by frequency desc, then notice frequency desc, then normalized asc.
pub fn score_terms(mut candidates: Vec<TermCandidate>) -> Vec<TermCandidate> {
    candidates.sort_by(|a, b| {
        b.freq.cmp(&a.freq).then(b.doc_freq.cmp(&a.doc_freq)).then_with(|| a.normalized.cmp(&b.normalized))
    });
    candidates
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lingproc::tokenize;

    fn tag(text: &str, tags: &[Pos]) -> Vec<Token> {
        let mut toks = tokenize(text);
        assert_eq!(toks.len(), tags.len());
        for (t, p) in toks.iter_mut().zip(tags) {
            t.pos = Some(*p);
        }
        toks
    }

    fn defaults() -> Vec<TermPattern> {
        parse_patterns(DEFAULT_PATTERNS).unwrap()
    }

    #[test]
    fn noun_adjective_candidate() {
        let toks = tag("céramique sigillée", &[Pos::N, Pos::A]);
        let terms = extract_terms(&toks, &defaults(), "n1");
        assert_eq!(terms.len(), 1);
        assert_eq!(terms[0].normalized, "ceramique sigillee");
        assert_eq!(terms[0].pattern.to_string(), "N A");
        assert_eq!(terms[0].head_index, 0);
        assert_eq!(terms[0].span, Span::new(0, 18));
    }

    #[test]
    fn only_maximal_matches() {
        let toks = tag("céramique sigillée", &[Pos::N, Pos::A]);
        let pats = parse_patterns("N\nN A").unwrap();
        let terms = extract_terms(&toks, &pats, "n1");
        assert_eq!(terms.len(), 1);
        assert_eq!(terms[0].tokens, (0, 2));
    }

    #[test]
    fn overlapping_maximal_matches_both_kept() {
        // N A N: "N A" and "A N" overlap but neither contains the other
        let toks = tag("vase peint amphore", &[Pos::N, Pos::A, Pos::N]);
        let terms = extract_terms(&toks, &defaults(), "n1");
        let ranges: Vec<_> = terms.iter().map(|t| t.tokens).collect();
        assert_eq!(ranges, [(0, 2), (1, 3)]);
        assert_eq!(terms[1].head_index, 1);
    }

    #[test]
    fn heads() {
        for (p, h) in [("N", 0), ("N A", 0), ("A N", 1), ("N N", 0), ("N P N", 0), ("A A", 0)] {
            assert_eq!(head_index(&p.parse().unwrap()), h, "{p}");
        }
    }

    #[test]
    fn invalid_patterns() {
        assert!(matches!("N Q".parse::<TermPattern>(), Err(ExtractionError::InvalidPattern { .. })));
        assert!("".parse::<TermPattern>().is_err());
        assert!(parse_patterns("N\n# c\n\nN X\n").is_ok());
    }

    #[test]
    fn aggregation_counts() {
        let toks = tag("fibule", &[Pos::N]);
        let mut occs = extract_terms(&toks, &defaults(), "a#1");
        occs.extend(extract_terms(&toks, &defaults(), "a#1").into_iter().map(|mut o| {
            o.span = Span::new(10, 16);
            o
        }));
        occs.extend(extract_terms(&toks, &defaults(), "a#2"));
        let agg = aggregate_terms(occs.clone());
        assert_eq!(agg.len(), 1);
        assert_eq!((agg[0].freq, agg[0].doc_freq), (3, 2));
        occs.reverse();
        assert_eq!(aggregate_terms(occs), agg);
    }

    fn cand(n: &str, freq: usize, doc_freq: usize) -> TermCandidate {
        TermCandidate {
            normalized: n.into(),
            surface: n.into(),
            pattern: "N".parse().unwrap(),
            head_index: 0,
            occurrences: vec![],
            freq,
            doc_freq,
        }
    }

    #[test]
    fn scoring_order() {
        let names = |v: Vec<TermCandidate>| v.into_iter().map(|c| c.normalized).collect::<Vec<_>>();
        assert_eq!(names(score_terms(vec![cand("a", 3, 1), cand("b", 5, 1)])), ["b", "a"]);
        assert_eq!(names(score_terms(vec![cand("z", 2, 2), cand("y", 2, 2), cand("x", 2, 1)])), ["y", "z", "x"]);
        assert!(score_terms(vec![]).is_empty());
    }
}
