//! Document collections and auxiliary word lists.

use std::collections::BTreeSet;
use std::collections::HashSet;
use std::io::{BufWriter, Write};
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One unit of text with identity, an optional day-precision date, and a
/// provenance label ("paper", "email", or any other string; empty when unknown).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub date: Option<NaiveDate>,
    #[serde(default)]
    pub source_tag: String,
}

/// Corpus file layouts accepted by [`load_corpus`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusFormat {
    /// One JSON object per line with fields `id`, `text`, optional `date`
    /// (ISO-8601 day precision), optional `source_tag`.
    JsonLines,
    /// A directory of `.txt` files; id is the file stem, date absent.
    DirectoryOfTextFiles,
}

/// What a word list is used for. Affects nothing but intent at call sites.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WordListKind {
    StopWords,
    Dictionary,
}

/// Sorted, deduplicated set of lowercase words.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WordList {
    kind: WordListKind,
    words: BTreeSet<String>,
}

impl WordList {
    /// Builds a list from arbitrary strings, lowercasing and deduplicating.
    /// Entries containing whitespace are not words and are skipped.
    pub fn new<I, S>(kind: WordListKind, words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let words = words
            .into_iter()
            .map(|w| w.as_ref().to_lowercase())
            .filter(|w| !w.is_empty() && !w.chars().any(char::is_whitespace))
            .collect();
        WordList { kind, words }
    }

    pub fn kind(&self) -> WordListKind {
        self.kind
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Words in sorted order.
    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.words.iter().map(String::as_str)
    }
}

fn read_utf8(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::unreadable(path, e))?;
    String::from_utf8(bytes).map_err(|_| Error::NonUtf8Content { path: path.into() })
}

/// Loads a corpus in stable input order. Directory entries are ordered by
/// file name; JSONL records keep file order. Duplicate ids are rejected.
pub fn load_corpus(path: &Path, format: CorpusFormat) -> Result<Vec<Document>> {
    let docs = match format {
        CorpusFormat::JsonLines => load_jsonl(path)?,
        CorpusFormat::DirectoryOfTextFiles => load_directory(path)?,
    };
    let mut seen = HashSet::new();
    for doc in &docs {
        if !seen.insert(doc.id.as_str()) {
            return Err(Error::DuplicateId { id: doc.id.clone() });
        }
    }
    Ok(docs)
}

fn load_jsonl(path: &Path) -> Result<Vec<Document>> {
    let content = read_utf8(path)?;
    let mut docs = Vec::new();
    for (idx, line) in content.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let doc: Document =
            serde_json::from_str(line).map_err(|e| Error::malformed(idx + 1, e.to_string()))?;
        if doc.id.is_empty() {
            return Err(Error::malformed(idx + 1, "empty document id"));
        }
        docs.push(doc);
    }
    Ok(docs)
}

fn load_directory(path: &Path) -> Result<Vec<Document>> {
    let entries = std::fs::read_dir(path).map_err(|e| Error::unreadable(path, e))?;
    let mut files = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| Error::unreadable(path, e))?;
        let p = entry.path();
        if p.is_file() && p.extension().is_some_and(|e| e == "txt") {
            files.push(p);
        }
    }
    files.sort_by(|a, b| a.file_name().cmp(&b.file_name()));
    let mut docs = Vec::new();
    for file in files {
        let id = file
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        if id.is_empty() {
            return Err(Error::malformed(0, format!("unusable file name {file:?}")));
        }
        docs.push(Document {
            id,
            text: read_utf8(&file)?,
            date: None,
            source_tag: String::new(),
        });
    }
    Ok(docs)
}

/// Writes documents as one JSON object per line. Reloading the file with
/// [`load_corpus`] yields a field-for-field identical collection.
pub fn save_corpus_jsonl(docs: &[Document], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::unreadable(path, e))?;
    let mut w = BufWriter::new(file);
    for doc in docs {
        let line = serde_json::to_string(doc).expect("document serialization cannot fail");
        writeln!(w, "{line}").map_err(|e| Error::unreadable(path, e))?;
    }
    w.flush().map_err(|e| Error::unreadable(path, e))
}

/// Loads a word list: one word per line, blank lines and `#` comments ignored,
/// entries lowercased, deduplicated, sorted.
pub fn load_wordlist(path: &Path, kind: WordListKind) -> Result<WordList> {
    let content = read_utf8(path)?;
    let words = content
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'));
    Ok(WordList::new(kind, words))
}
