//! On-disk layout: one JSON record per line for each collection, plus a
//! `manifest` holding the format version, snapshot version and a sha256 per
//! file. Derived structures are rebuilt on load.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::Document;
use crate::extraction::{Mention, TermCandidate};
use crate::terminology::{Concept, ConceptTable};

use super::{DocumentRecord, NoticeRecord, Snapshot, StoreError};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const STORE_FORMAT_VERSION: u32 = 1;

const DOCUMENTS: &str = "documents.jsonl";
const NOTICES: &str = "notices.jsonl";
const MENTIONS: &str = "mentions.jsonl";
const CONCEPTS: &str = "concepts.jsonl";
const TERMS: &str = "terms.jsonl";
const FILES: [&str; 5] = [DOCUMENTS, NOTICES, MENTIONS, CONCEPTS, TERMS];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct FileEntry {
    sha256: String,
    bytes: u64,
    records: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct Manifest {
    format_version: u32,
    version: u64,
    files: BTreeMap<String, FileEntry>,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> StoreError + '_ {
    move |source| StoreError::Io { path: path.display().to_string(), source }
}

fn jsonl<T: Serialize>(records: impl Iterator<Item = T>) -> (Vec<u8>, usize) {
    let mut out = Vec::new();
    let mut n = 0;
    for r in records {
        serde_json::to_writer(&mut out, &r).expect("records serialize");
        out.push(b'\n');
        n += 1;
    }
    (out, n)
}

fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> Result<(), StoreError> {
    let tmp = dir.join(format!(".{name}.tmp"));
    fs::write(&tmp, bytes).map_err(io_err(&tmp))?;
    let dest = dir.join(name);
    fs::rename(&tmp, &dest).map_err(io_err(&dest))
}

/// Writes `snapshot` to `dir`, creating it if needed. Data files go first and
/// the manifest last, each through a rename.
pub fn persist(snapshot: &Snapshot, dir: &Path) -> Result<(), StoreError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let payloads = [
        (
            DOCUMENTS,
            jsonl(snapshot.documents().map(|d| DocumentRecord { meta: d.meta.clone(), text: d.text().to_owned() })),
        ),
        (NOTICES, jsonl(snapshot.notices())),
        (MENTIONS, jsonl(snapshot.mentions())),
        (CONCEPTS, jsonl(snapshot.concepts().concepts())),
        (TERMS, jsonl(snapshot.terms().iter())),
    ];
    let mut files = BTreeMap::new();
    for (name, (bytes, records)) in payloads {
        write_atomic(dir, name, &bytes)?;
        files.insert(
            name.to_owned(),
            FileEntry { sha256: hex::encode(Sha256::digest(&bytes)), bytes: bytes.len() as u64, records },
        );
    }
    let manifest = Manifest { format_version: STORE_FORMAT_VERSION, version: snapshot.version(), files };
    let mut bytes = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
    bytes.push(b'\n');
    write_atomic(dir, MANIFEST_FILE, &bytes)
}

fn corrupt(msg: impl Into<String>) -> StoreError {
    StoreError::CorruptSnapshot(msg.into())
}

fn read_records<T: DeserializeOwned>(dir: &Path, name: &str, manifest: &Manifest) -> Result<Vec<T>, StoreError> {
    let entry = manifest.files.get(name).ok_or_else(|| corrupt(format!("manifest does not list {name}")))?;
    let path = dir.join(name);
    let bytes = fs::read(&path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => corrupt(format!("{name} is missing")),
        _ => StoreError::Io { path: path.display().to_string(), source: e },
    })?;
    if bytes.len() as u64 != entry.bytes || hex::encode(Sha256::digest(&bytes)) != entry.sha256 {
        return Err(corrupt(format!("checksum mismatch in {name}")));
    }
    let text = std::str::from_utf8(&bytes).map_err(|_| corrupt(format!("{name} is not UTF-8")))?;
    let records = text
        .lines()
        .enumerate()
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| corrupt(format!("{name} line {}: {e}", i + 1))))
        .collect::<Result<Vec<T>, _>>()?;
    if records.len() != entry.records {
        return Err(corrupt(format!("{name}: expected {} records, found {}", entry.records, records.len())));
    }
    Ok(records)
}

/// Loads a snapshot. A missing or empty directory is the empty snapshot at
/// version 0.
pub fn load(dir: &Path) -> Result<Snapshot, StoreError> {
    let manifest_path = dir.join(MANIFEST_FILE);
    let raw = match fs::read(&manifest_path) {
        Ok(raw) => raw,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            let has_data = FILES.iter().any(|f| dir.join(f).exists());
            if has_data {
                return Err(corrupt("data files present without a manifest"));
            }
            return Ok(Snapshot::empty());
        }
        Err(e) => return Err(io_err(&manifest_path)(e)),
    };
    let value: serde_json::Value = serde_json::from_slice(&raw).map_err(|e| corrupt(format!("manifest: {e}")))?;
    let found = value.get("format_version").and_then(serde_json::Value::as_u64);
    match found {
        Some(v) if v == u64::from(STORE_FORMAT_VERSION) => {}
        Some(v) => {
            return Err(StoreError::VersionMismatch {
                found: u32::try_from(v).unwrap_or(u32::MAX),
                expected: STORE_FORMAT_VERSION,
            })
        }
        None => return Err(corrupt("manifest has no format_version")),
    }
    let manifest: Manifest = serde_json::from_value(value).map_err(|e| corrupt(format!("manifest: {e}")))?;

    let documents: Vec<DocumentRecord> = read_records(dir, DOCUMENTS, &manifest)?;
    let notices: Vec<NoticeRecord> = read_records(dir, NOTICES, &manifest)?;
    let mentions: Vec<Mention> = read_records(dir, MENTIONS, &manifest)?;
    let concepts: Vec<Concept> = read_records(dir, CONCEPTS, &manifest)?;
    let terms: Vec<TermCandidate> = read_records(dir, TERMS, &manifest)?;

    let documents = documents.into_iter().map(|r| Document::from_normalized(r.meta, r.text)).collect();
    let concepts = ConceptTable::from_concepts(concepts).map_err(|e| corrupt(e.to_string()))?;
    Snapshot::from_records(manifest.version, documents, notices, mentions, concepts, terms).map_err(|e| match e {
        StoreError::Io { .. } => e,
        other => corrupt(other.to_string()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{load_document, DocumentMeta, Language};
    use crate::span::Span;
    use crate::store::{query, Batch, Query};

    fn sample() -> Snapshot {
        let doc = load_document("1 - Arces\nfibule vase\n".as_bytes(), DocumentMeta::new("d", Language::Fr)).unwrap();
        let n = NoticeRecord {
            notice_id: "d#1".into(),
            doc_id: "d".into(),
            number: 1,
            municipality: "Arces".into(),
            span: Span::new(0, 22),
            zones: vec![],
        };
        Snapshot::empty().commit(Batch { documents: vec![doc], notices: vec![n], ..Default::default() }).unwrap()
    }

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let s = sample();
        persist(&s, dir.path()).unwrap();
        let t = load(dir.path()).unwrap();
        assert_eq!(t.version(), s.version());
        assert_eq!(t.index(), s.index());
        let q = Query::new(&["vase"]);
        assert_eq!(query(&t, &q), query(&s, &q));
    }

    #[test]
    fn empty_dir_is_version_zero() {
        let dir = tempfile::tempdir().unwrap();
        assert_eq!(load(dir.path()).unwrap().version(), 0);
        assert_eq!(load(&dir.path().join("missing")).unwrap().version(), 0);
    }

    #[test]
    fn truncated_file_rejected() {
        let dir = tempfile::tempdir().unwrap();
        persist(&sample(), dir.path()).unwrap();
        let p = dir.path().join(DOCUMENTS);
        let bytes = fs::read(&p).unwrap();
        fs::write(&p, &bytes[..bytes.len() / 2]).unwrap();
        assert!(matches!(load(dir.path()), Err(StoreError::CorruptSnapshot(_))));
    }

    #[test]
    fn manifest_problems() {
        let dir = tempfile::tempdir().unwrap();
        persist(&sample(), dir.path()).unwrap();
        let p = dir.path().join(MANIFEST_FILE);
        let text = fs::read_to_string(&p).unwrap();

        fs::write(&p, text.replace("\"format_version\": 1", "\"format_version\": 7")).unwrap();
        assert!(matches!(load(dir.path()), Err(StoreError::VersionMismatch { found: 7, expected: 1 })));

        fs::write(&p, "{ not json").unwrap();
        assert!(matches!(load(dir.path()), Err(StoreError::CorruptSnapshot(_))));

        fs::remove_file(&p).unwrap();
        assert!(matches!(load(dir.path()), Err(StoreError::CorruptSnapshot(_))));
    }
}
