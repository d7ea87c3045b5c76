mod oracles;

use std::collections::BTreeMap;

use cartae_core::corpus::load_corpus_dir;
use cartae_core::extraction::{extract_dates, extract_gazetteer, extract_places, extract_terms, NoticeContext};
use cartae_core::lingproc::{pos_tag, tokenize, tokenize_at};
use cartae_core::pipeline::{build_snapshot, PipelineConfig, Resources};
use cartae_core::store::query;
use cartae_core::structure::{segment_notices, validate_partition};
use cartae_core::{Document, MentionKind, Query};

use oracles::{brute_force_terms, fixtures_dir, tiling_defects};

fn inputs() -> (Resources, Vec<Document>) {
    let cfg = PipelineConfig::from_file(&fixtures_dir().join("pipeline.toml")).unwrap();
    let res = Resources::load(&cfg).unwrap();
    let docs = load_corpus_dir(&cfg.corpus_dir, cfg.default_language).unwrap();
    (res, docs)
}

#[test]
fn fixture_shape() {
    let (_, docs) = inputs();
    assert_eq!(docs.len(), 3);
    let langs: Vec<_> = docs.iter().map(|d| d.meta.language.code()).collect();
    assert_eq!(langs, ["de", "en", "fr"]);
    let bytes: usize = docs.iter().map(|d| d.text().len()).sum();
    assert!((20_000..40_000).contains(&bytes), "{bytes} bytes");
}

#[test]
fn fixture_tiles_exactly() {
    let (res, docs) = inputs();
    for doc in &docs {
        let seg = segment_notices(doc, &res.grammar);
        assert_eq!(seg.notices.len(), 20, "{}", doc.meta.doc_id);
        assert!(validate_partition(doc, seg.preamble, &seg.notices).is_valid());
        let notices: Vec<_> =
            seg.notices.iter().map(|n| (n.span, n.zones.iter().map(|z| z.span).collect())).collect();
        assert_eq!(tiling_defects(doc.len(), seg.preamble, &notices), Vec::<String>::new());
        // every notice has header, body, finds and bibliography
        for n in &seg.notices {
            let labels: Vec<_> = n.zones.iter().map(|z| z.label.as_str()).collect();
            assert_eq!(labels, ["header", "body", "finds", "biblio"], "{}", n.notice_id);
        }
    }
}

#[test]
fn fixture_terms_match_enumeration() {
    let (res, docs) = inputs();
    for doc in &docs {
        let lex = &res.lexicons[&doc.meta.language];
        let tagged = pos_tag(&tokenize(doc.text()), lex);
        for len in 1..=12 {
            for start in (0..tagged.len().saturating_sub(len)).step_by(3) {
                let w = &tagged[start..start + len];
                let got: std::collections::BTreeSet<_> =
                    extract_terms(w, &res.patterns, "n").into_iter().map(|o| o.tokens).collect();
                assert_eq!(got, brute_force_terms(w, &res.patterns), "{} @{start}+{len}", doc.meta.doc_id);
            }
        }
    }
}

#[test]
fn counts_are_sums_of_module_outputs() {
    let (res, docs) = inputs();
    let (snap, report) = build_snapshot(docs.clone(), &res).unwrap();

    let mut expected: BTreeMap<MentionKind, usize> = BTreeMap::new();
    let mut notices = 0;
    for doc in &docs {
        let seg = segment_notices(doc, &res.grammar);
        notices += seg.notices.len();
        for n in &seg.notices {
            let ctx = NoticeContext::new(doc, &n.notice_id);
            let toks = tokenize_at(doc.slice(n.span), n.span.start);
            let (dates, _) = extract_dates(ctx, &toks, &res.periods, doc.meta.language);
            *expected.entry(MentionKind::Date).or_default() += dates.len();
            *expected.entry(MentionKind::Place).or_default() += extract_places(ctx, &toks, &res.places).len();
            *expected.entry(MentionKind::Person).or_default() +=
                extract_gazetteer(ctx, &toks, &res.persons, MentionKind::Person).len();
        }
    }
    expected.insert(MentionKind::Term, snap.terms().iter().map(|t| t.freq).sum());

    assert_eq!(report.total_notices(), notices);
    assert_eq!(snap.notices().count(), 60);
    for kind in MentionKind::ALL {
        assert_eq!(report.total_mentions(kind), expected[&kind], "{kind}");
    }
    assert_eq!(oracles::count_by_kind(snap.mentions()), expected);
    assert!(report.warnings.iter().all(|w| w.offset > 0 && !w.doc_id.is_empty()));
}

#[test]
fn rebuild_is_query_equivalent() {
    let (res, docs) = inputs();
    let (a, _) = build_snapshot(docs.clone(), &res).unwrap();
    let (b, _) = build_snapshot(docs, &res).unwrap();
    assert_eq!(a.mentions().collect::<Vec<_>>(), b.mentions().collect::<Vec<_>>());
    assert_eq!(a.index(), b.index());
    for terms in [vec![], vec!["fibule"], vec!["Keramik"], vec!["pottery", "coins"]] {
        let q = Query::new(&terms);
        assert_eq!(query(&a, &q), query(&b, &q));
    }
}

#[test]
fn fixture_concept_search() {
    let (res, docs) = inputs();
    let (snap, _) = build_snapshot(docs, &res).unwrap();
    // the brooch concept is found in all three languages
    let q = Query { concept_id: Some("C001".into()), limit: 100, ..Default::default() };
    let page = query(&snap, &q);
    let docs: std::collections::BTreeSet<_> =
        page.hits.iter().map(|h| h.notice_id.split('#').next().unwrap().to_owned()).collect();
    assert_eq!(docs.len(), 3);
}
