//! Index files: one compact JSON document with a SHA-256 checksum.
//!
//! Layout, keys in this order:
//! `{format_version, config_echo, documents:[{id, artifact, norm}],
//! vocabulary:[{term, df}], postings:[[term_id, [[doc_id, tf], ...]], ...],
//! checksum}`. The checksum is the hex SHA-256 of the same document
//! serialized without the `checksum` key.

use std::fs;
use std::path::Path;

use acir_core::index::{IndexedDocument, Posting, VocabEntry};
use acir_core::{Artifact, Index, IndexConfig};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const FORMAT_VERSION: u64 = 1;

#[derive(Serialize, Deserialize)]
struct StoredDocument {
    id: String,
    artifact: Artifact,
    norm: f64,
}

type StoredPostings = Vec<(u32, Vec<(u32, u32)>)>;

#[derive(Serialize)]
struct Payload<'a> {
    format_version: u64,
    config_echo: &'a IndexConfig,
    documents: &'a [StoredDocument],
    vocabulary: &'a [VocabEntry],
    postings: &'a StoredPostings,
}

#[derive(Deserialize)]
struct Stored {
    format_version: u64,
    config_echo: IndexConfig,
    documents: Vec<StoredDocument>,
    vocabulary: Vec<VocabEntry>,
    postings: StoredPostings,
    checksum: String,
}

fn checksum(payload: &[u8]) -> String {
    hex::encode(Sha256::digest(payload))
}

/// Deterministic serialization of `index`.
pub fn to_bytes(index: &Index) -> Result<Vec<u8>> {
    let documents: Vec<StoredDocument> = index
        .documents()
        .iter()
        .map(|d| StoredDocument {
            id: d.artifact.id.clone(),
            artifact: d.artifact.clone(),
            norm: d.norm,
        })
        .collect();
    let postings: StoredPostings = index
        .postings()
        .iter()
        .enumerate()
        .map(|(t, plist)| (t as u32, plist.iter().map(|p| (p.doc, p.tf)).collect()))
        .collect();
    let payload = Payload {
        format_version: FORMAT_VERSION,
        config_echo: index.config(),
        documents: &documents,
        vocabulary: index.vocabulary(),
        postings: &postings,
    };
    Ok(with_checksum(serde_json::to_vec(&payload)?))
}

fn with_checksum(mut payload: Vec<u8>) -> Vec<u8> {
    let sum = checksum(&payload);
    debug_assert_eq!(payload.last(), Some(&b'}'));
    payload.pop();
    payload.extend_from_slice(format!(",\"checksum\":\"{sum}\"}}").as_bytes());
    payload
}

pub fn from_bytes(bytes: &[u8]) -> Result<Index> {
    let value: serde_json::Value =
        serde_json::from_slice(bytes).map_err(|e| Error::CorruptIndex(format!("unreadable index: {e}")))?;
    let version = value
        .get("format_version")
        .and_then(serde_json::Value::as_u64)
        .ok_or_else(|| Error::CorruptIndex("missing format_version".into()))?;
    if version > FORMAT_VERSION {
        return Err(Error::FormatVersionMismatch {
            found: version,
            supported: FORMAT_VERSION,
        });
    }
    let stored: Stored = serde_json::from_value(value).map_err(|e| Error::CorruptIndex(e.to_string()))?;
    let payload = Payload {
        format_version: stored.format_version,
        config_echo: &stored.config_echo,
        documents: &stored.documents,
        vocabulary: &stored.vocabulary,
        postings: &stored.postings,
    };
    if checksum(&serde_json::to_vec(&payload)?) != stored.checksum {
        return Err(Error::CorruptIndex("checksum mismatch".into()));
    }
    if stored.documents.iter().any(|d| d.id != d.artifact.id) {
        return Err(Error::CorruptIndex("document id does not match its artifact".into()));
    }
    if stored.postings.iter().enumerate().any(|(i, (t, _))| *t as usize != i) {
        return Err(Error::CorruptIndex("postings out of term order".into()));
    }
    let documents = stored
        .documents
        .into_iter()
        .map(|d| IndexedDocument {
            artifact: d.artifact,
            norm: d.norm,
        })
        .collect();
    let postings = stored
        .postings
        .into_iter()
        .map(|(_, plist)| plist.into_iter().map(|(doc, tf)| Posting { doc, tf }).collect())
        .collect();
    Ok(Index::from_parts(stored.config_echo, documents, stored.vocabulary, postings)?)
}

pub fn save_index(index: &Index, path: &Path) -> Result<()> {
    let bytes = to_bytes(index)?;
    fs::write(path, bytes).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

pub fn load_index(path: &Path) -> Result<Index> {
    let bytes = fs::read(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    from_bytes(&bytes)
}
