use std::collections::HashMap;

use crate::corpus::Language;
use crate::diag::Diagnostic;
use crate::lingproc::{fold, tokenize, Token};

use super::{ExtractionError, Mention, MentionKind, NoticeContext, TimeRange};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Era {
    Bc,
    Ad,
}

/// `[-y, -y]` before Christ, `[y, y]` after.
pub fn year_range(year: u32, era: Era) -> Option<TimeRange> {
    let y = i32::try_from(year).ok().filter(|y| *y > 0)?;
    Some(match era {
        Era::Bc => TimeRange { from_year: -y, to_year: -y },
        Era::Ad => TimeRange { from_year: y, to_year: y },
    })
}

/// Century `c` BC is `[-100c, -(100(c-1)+1)]`; AD is `[100(c-1)+1, 100c]`.
pub fn century_range(century: u32, era: Era) -> Option<TimeRange> {
    let c = i32::try_from(century).ok().filter(|c| *c > 0)?;
    let last = c.checked_mul(100)?;
    let first = last - 99;
    Some(match era {
        Era::Bc => TimeRange { from_year: -last, to_year: -first },
        Era::Ad => TimeRange { from_year: first, to_year: last },
    })
}

/// Parses a canonical Roman numeral (case-insensitive, 1..=3999).
///
/// Non-canonical spellings such as `IIX` or `IIII` are rejected.
pub fn parse_roman(s: &str) -> Option<u32> {
    let digit = |c: char| match c.to_ascii_lowercase() {
        'i' => Some(1),
        'v' => Some(5),
        'x' => Some(10),
        'l' => Some(50),
        'c' => Some(100),
        'd' => Some(500),
        'm' => Some(1000),
        _ => None,
    };
    let values: Vec<u32> = s.chars().map(digit).collect::<Option<_>>()?;
    if values.is_empty() {
        return None;
    }
    let mut total = 0;
    for (i, v) in values.iter().enumerate() {
        match values.get(i + 1) {
            Some(next) if next > v => total -= *v as i64,
            _ => total += *v as i64,
        }
    }
    let total = u32::try_from(total).ok().filter(|t| (1..4000).contains(t))?;
    (to_roman(total) == s.to_ascii_uppercase()).then_some(total)
}

fn to_roman(mut n: u32) -> String {
    const TABLE: [(u32, &str); 13] = [
        (1000, "M"),
        (900, "CM"),
        (500, "D"),
        (400, "CD"),
        (100, "C"),
        (90, "XC"),
        (50, "L"),
        (40, "XL"),
        (10, "X"),
        (9, "IX"),
        (5, "V"),
        (4, "IV"),
        (1, "I"),
    ];
    let mut out = String::new();
    for (value, digits) in TABLE {
        while n >= value {
            out.push_str(digits);
            n -= value;
        }
    }
    out
}

fn parse_year(key: &str) -> Option<u32> {
    if key.is_empty() || !key.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    key.parse().ok()
}

/// Named periods keyed by their folded token sequence.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PeriodTable {
    entries: HashMap<Vec<String>, (String, TimeRange)>,
    max_tokens: usize,
}

const BUILTIN_PERIODS: &str = include_str!("../../data/periods.tsv");

fn period_key(name: &str) -> Vec<String> {
    tokenize(name).iter().map(Token::key).collect()
}

impl PeriodTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// The period table shipped with the crate.
    pub fn builtin() -> Self {
        Self::from_tsv(BUILTIN_PERIODS).expect("builtin period table is valid")
    }

    pub fn insert(&mut self, name: &str, range: TimeRange) {
        let key = period_key(name);
        if key.is_empty() {
            return;
        }
        self.max_tokens = self.max_tokens.max(key.len());
        self.entries.insert(key, (name.trim().to_owned(), range));
    }

    /// Parses `name<TAB>from_year<TAB>to_year` lines; `#` starts a comment line.
    pub fn from_tsv(src: &str) -> Result<Self, ExtractionError> {
        let mut table = PeriodTable::new();
        for (idx, line) in src.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| ExtractionError::Table { table: "period", line: idx + 1, message };
            let cols: Vec<&str> = line.split('\t').collect();
            let [name, from, to] = cols[..] else {
                return Err(err(format!("expected 3 columns, found {}", cols.len())));
            };
            let parse = |s: &str| s.trim().parse::<i32>().map_err(|e| err(format!("{s:?}: {e}")));
            let range = TimeRange::new(parse(from)?, parse(to)?).map_err(|e| err(e.to_string()))?;
            table.insert(name, range);
        }
        Ok(table)
    }

    pub fn lookup(&self, name: &str) -> Option<TimeRange> {
        self.entries.get(&period_key(name)).map(|(_, r)| *r)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries as `(display name, range)`, sorted by name.
    pub fn entries(&self) -> Vec<(&str, TimeRange)> {
        let mut out: Vec<_> = self.entries.values().map(|(n, r)| (n.as_str(), *r)).collect();
        out.sort();
        out
    }

    /// Longest period name starting at `keys[0]`, as (token count, range).
    fn longest_at(&self, keys: &[String]) -> Option<(usize, &(String, TimeRange))> {
        let max = self.max_tokens.min(keys.len());
        (1..=max).rev().find_map(|n| self.entries.get(&keys[..n]).map(|e| (n, e)))
    }
}

struct EraMarkers {
    bc: &'static [&'static [&'static str]],
    ad: &'static [&'static [&'static str]],
    // markers that may precede the year, e.g. "AD 79"
    ad_prefix: &'static [&'static [&'static str]],
    century: &'static [&'static [&'static str]],
}

fn markers(language: Language) -> EraMarkers {
    match language {
        Language::Fr => EraMarkers {
            bc: &[&["av", ".", "j", ".", "-", "c"], &["avant", "j", ".", "-", "c"]],
            ad: &[&["ap", ".", "j", ".", "-", "c"], &["apr", ".", "j", ".", "-", "c"], &["apres", "j", ".", "-", "c"]],
            ad_prefix: &[],
            century: &[&["siecle"], &["siecles"], &["s", "."]],
        },
        Language::En => EraMarkers {
            bc: &[&["bc"], &["b", ".", "c"], &["bce"]],
            ad: &[&["ad"], &["a", ".", "d"], &["ce"]],
            ad_prefix: &[&["ad"], &["a", ".", "d", "."]],
            century: &[&["century"], &["centuries"]],
        },
        Language::De => EraMarkers {
            bc: &[&["v", ".", "chr"], &["vor", "chr"]],
            ad: &[&["n", ".", "chr"], &["nach", "chr"]],
            ad_prefix: &[],
            century: &[&["jahrhundert"], &["jahrhunderts"], &["jh", "."], &["jh"]],
        },
    }
}

/// Abbreviations whose closing period belongs to the marker.
const DOTTED_ENDINGS: [&str; 3] = ["c", "chr", "d"];

fn match_seq(keys: &[String], at: usize, seq: &[&str]) -> Option<usize> {
    let window = keys.get(at..at + seq.len())?;
    window.iter().zip(seq).all(|(k, s)| k == s).then_some(at + seq.len())
}

fn match_any(keys: &[String], at: usize, seqs: &[&[&str]]) -> Option<usize> {
    seqs.iter().filter_map(|s| match_seq(keys, at, s)).max()
}

/// Matches an era marker at `at`, including a closing period glued to an
/// abbreviation like `J.-C.`.
fn match_era(keys: &[String], tokens: &[Token], at: usize, m: &EraMarkers) -> Option<(usize, Era)> {
    let (end, era) = match (match_any(keys, at, m.bc), match_any(keys, at, m.ad)) {
        (Some(b), Some(a)) if a > b => (a, Era::Ad),
        (Some(b), _) => (b, Era::Bc),
        (None, Some(a)) => (a, Era::Ad),
        (None, None) => return None,
    };
    let glued_dot = keys.get(end).is_some_and(|k| k == ".")
        && DOTTED_ENDINGS.contains(&keys[end - 1].as_str())
        && tokens[end].span.start == tokens[end - 1].span.end;
    Some((if glued_dot { end + 1 } else { end }, era))
}

enum Ordinal {
    Valid(u32),
    BadRoman,
}

/// Reads a century ordinal from one token (plus a trailing `.` in German).
///
/// Roman numerals must be written in capitals, so that `ce siècle` is not
/// read as the hundredth century.
fn match_ordinal(keys: &[String], tokens: &[Token], at: usize, language: Language) -> Option<(usize, Ordinal)> {
    let key = keys.get(at)?;
    let surface = &tokens[at].surface;
    let roman = |stem: &str| {
        let letters: String = surface.chars().take(stem.chars().count()).collect();
        let is_roman = !letters.is_empty() && letters.chars().all(|c| "IVXLCDM".contains(c));
        is_roman.then(|| parse_roman(stem).map_or(Ordinal::BadRoman, Ordinal::Valid))
    };
    match language {
        Language::Fr => {
            // `IIIe`, `Ier` or a bare `IV`
            let stem = ["eme", "er", "re", "e"].iter().find_map(|suf| key.strip_suffix(suf)).unwrap_or(key);
            roman(stem).map(|o| (at + 1, o))
        }
        Language::En => {
            if let Some(o) = roman(key) {
                return Some((at + 1, o));
            }
            let stem = ["st", "nd", "rd", "th"].iter().find_map(|suf| key.strip_suffix(suf))?;
            Some((at + 1, Ordinal::Valid(parse_year(stem)?)))
        }
        Language::De => {
            let ord = match roman(key) {
                Some(o) => o,
                None => Ordinal::Valid(parse_year(key)?),
            };
            let end = if keys.get(at + 1).is_some_and(|k| k == ".") { at + 2 } else { at + 1 };
            Some((end, ord))
        }
    }
}

/// Recognizes dated expressions among `tokens` and normalizes them to year ranges.
///
/// Handles explicit years with an era marker, Roman-numeral centuries with an
/// optional era marker (AD by default) and period names from `periods`. At
/// each position the longest match wins and matches never overlap.
/// Centuries written with malformed Roman numerals are skipped with a warning.
pub fn extract_dates(
    ctx: NoticeContext<'_>,
    tokens: &[Token],
    periods: &PeriodTable,
    language: Language,
) -> (Vec<Mention>, Vec<Diagnostic>) {
    let keys: Vec<String> = tokens.iter().map(Token::key).collect();
    let m = markers(language);
    let mut mentions = Vec::new();
    let mut warnings = Vec::new();

    let mut i = 0;
    while i < tokens.len() {
        // (end, range, normalized) of the best match so far
        let mut best: Option<(usize, TimeRange, String)> = None;
        let mut consider = |end: usize, range: Option<TimeRange>, normalized: String| {
            if let Some(range) = range {
                if best.as_ref().is_none_or(|(e, _, _)| end > *e) {
                    best = Some((end, range, normalized));
                }
            }
        };

        // <year> <era>
        if let Some(year) = parse_year(&keys[i]) {
            if let Some((end, era)) = match_era(&keys, tokens, i + 1, &m) {
                let range = year_range(year, era);
                consider(end, range, range.map(|r| r.to_string()).unwrap_or_default());
            }
        }
        // AD <year>
        if let Some(after) = match_any(&keys, i, m.ad_prefix) {
            if let Some(year) = keys.get(after).and_then(|k| parse_year(k)) {
                let range = year_range(year, Era::Ad);
                consider(after + 1, range, range.map(|r| r.to_string()).unwrap_or_default());
            }
        }
        // <ordinal> <century word> [<era>]
        if let Some((after_ord, ordinal)) = match_ordinal(&keys, tokens, i, language) {
            if let Some(after_word) = match_any(&keys, after_ord, m.century) {
                match ordinal {
                    Ordinal::Valid(c) => {
                        let (end, era) = match_era(&keys, tokens, after_word, &m).unwrap_or((after_word, Era::Ad));
                        let range = century_range(c, era);
                        consider(end, range, range.map(|r| r.to_string()).unwrap_or_default());
                    }
                    Ordinal::BadRoman => warnings.push(Diagnostic::new(
                        tokens[i].span.start,
                        format!("unparseable Roman numeral in {:?}", tokens[i].surface),
                    )),
                }
            }
        }
        // period name
        if let Some((n, (name, range))) = periods.longest_at(&keys[i..]) {
            consider(i + n, Some(*range), fold(name));
        }

        match best {
            Some((end, range, normalized)) => {
                let mut mention = ctx.mention(MentionKind::Date, &tokens[i..end], normalized);
                mention.time = Some(range);
                mentions.push(mention);
                i = end;
            }
            None => i += 1,
        }
    }
    (mentions, warnings)
}
