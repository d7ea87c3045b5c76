//! Shared setup for the benchmarks: the fixture corpus and its resources.

use std::path::{Path, PathBuf};

use cartae_core::corpus::load_corpus_dir;
use cartae_core::pipeline::{build_snapshot, PipelineConfig, Resources};
use cartae_core::{Document, Snapshot};

pub fn fixtures_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn fixture_config() -> PipelineConfig {
    PipelineConfig::from_file(&fixtures_dir().join("pipeline.toml")).expect("fixture config loads")
}

/// Resources and documents of the fixture corpus.
pub fn fixture_inputs() -> (Resources, Vec<Document>) {
    let cfg = fixture_config();
    let res = Resources::load(&cfg).expect("fixture resources load");
    let docs = load_corpus_dir(&cfg.corpus_dir, cfg.default_language).expect("fixture corpus loads");
    (res, docs)
}

pub fn fixture_snapshot() -> Snapshot {
    let (res, docs) = fixture_inputs();
    build_snapshot(docs, &res).expect("fixture builds").0
}
