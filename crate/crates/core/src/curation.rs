//! Curation edits applied to a whole snapshot: the concept table changes and
//! the affected term mentions are relinked in the same commit.

use thiserror::Error;

use crate::corpus::Language;
use crate::extraction::{Mention, MentionKind};
use crate::store::{Batch, Snapshot, StoreError};
use crate::terminology::{curate, normalize_form, AuditEntry, CurationEdit, NormalizationRules, TerminologyError};

#[derive(Debug, Error)]
pub enum CurationError {
    #[error(transparent)]
    Terminology(#[from] TerminologyError),
    #[error(transparent)]
    Store(#[from] StoreError),
}

fn mention_language(snapshot: &Snapshot, m: &Mention) -> Option<Language> {
    let notice = snapshot.notice(&m.notice_id)?;
    Some(snapshot.document(&notice.doc_id)?.meta.language)
}

/// Link updates implied by an edit that `curate` accepted.
fn relinks(snapshot: &Snapshot, edit: &CurationEdit, rules: &NormalizationRules) -> Vec<(String, Option<String>)> {
    let terms = snapshot.mentions().filter(|m| m.kind == MentionKind::Term);
    match edit {
        CurationEdit::MergeConcepts { keep_id, merge_id } => terms
            .filter(|m| m.concept_id.as_deref() == Some(merge_id.as_str()))
            .map(|m| (m.mention_id.clone(), Some(keep_id.clone())))
            .collect(),
        CurationEdit::AddLabel { concept_id, language, label } => {
            let key = normalize_form(label, rules);
            terms
                .filter(|m| m.concept_id.is_none() && m.normalized == key)
                .filter(|m| mention_language(snapshot, m) == Some(*language))
                .map(|m| (m.mention_id.clone(), Some(concept_id.clone())))
                .collect()
        }
        CurationEdit::SplitLabel { concept_id, language, label, new_concept_id } => {
            let key = normalize_form(label, rules);
            terms
                .filter(|m| m.concept_id.as_deref() == Some(concept_id.as_str()) && m.normalized == key)
                .filter(|m| mention_language(snapshot, m) == Some(*language))
                .map(|m| (m.mention_id.clone(), Some(new_concept_id.clone())))
                .collect()
        }
    }
}

/// Applies `edit` and returns the committed snapshot with the audit record.
/// On error nothing is committed.
pub fn apply_edit(
    snapshot: &Snapshot,
    edit: &CurationEdit,
    rules: &NormalizationRules,
    timestamp: u64,
) -> Result<(Snapshot, AuditEntry), CurationError> {
    let (table, entry) = curate(snapshot.concepts(), edit, rules, timestamp)?;
    let batch = Batch { concepts: Some(table), relinks: relinks(snapshot, edit, rules), ..Default::default() };
    Ok((snapshot.commit(batch)?, entry))
}
