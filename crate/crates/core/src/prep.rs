//! Tokenization, stop-word removal, stemming, n-grams, and the
//! document-term matrix.

use std::collections::{BTreeMap, HashMap};
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::corpus::{Document, WordList, WordListKind};
use crate::error::{Error, Result};

/// Ordered lowercase tokens of one document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenStream {
    pub doc_id: String,
    pub tokens: Vec<String>,
}

/// Sorted distinct terms with a reverse index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    terms: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    /// Builds from lexicographically sorted, distinct terms.
    pub fn from_sorted_terms(terms: Vec<String>) -> Self {
        debug_assert!(terms.windows(2).all(|w| w[0] < w[1]), "sorted and distinct");
        let index = terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Vocabulary { terms, index }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn term(&self, i: usize) -> &str {
        &self.terms[i]
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }
}

/// Sparse per-document term counts over a shared vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct DocTermMatrix {
    vocab: Vocabulary,
    doc_ids: Vec<String>,
    rows: Vec<Vec<(usize, u32)>>,
}

impl DocTermMatrix {
    /// Builds from parts. Rows must hold strictly positive counts with
    /// ascending in-range term indices, aligned with doc_ids.
    pub fn from_parts(
        vocab: Vocabulary,
        doc_ids: Vec<String>,
        rows: Vec<Vec<(usize, u32)>>,
    ) -> Self {
        assert_eq!(doc_ids.len(), rows.len(), "row alignment");
        debug_assert!(rows.iter().all(|r| {
            r.iter().all(|&(t, c)| t < vocab.len() && c > 0)
                && r.windows(2).all(|w| w[0].0 < w[1].0)
        }));
        DocTermMatrix {
            vocab,
            doc_ids,
            rows,
        }
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn n_docs(&self) -> usize {
        self.rows.len()
    }

    pub fn n_terms(&self) -> usize {
        self.vocab.len()
    }

    pub fn doc_ids(&self) -> &[String] {
        &self.doc_ids
    }

    /// Sparse row d: ascending (term_index, count) pairs.
    pub fn row(&self, d: usize) -> &[(usize, u32)] {
        &self.rows[d]
    }

    /// Token count of document d.
    pub fn doc_len(&self, d: usize) -> u64 {
        self.rows[d].iter().map(|&(_, c)| u64::from(c)).sum()
    }

    /// Token count of the whole matrix.
    pub fn total_tokens(&self) -> u64 {
        (0..self.n_docs()).map(|d| self.doc_len(d)).sum()
    }
}

fn is_token_char(c: char) -> bool {
    c.is_alphanumeric() || c == '\'' || c == '-'
}

/// Splits lowercased text into maximal runs of Unicode letters/digits,
/// keeping interior apostrophes/hyphens. Pure-punctuation residue is dropped.
pub fn tokenize(doc: &Document) -> TokenStream {
    let lowered = doc.text.to_lowercase();
    let mut tokens = Vec::new();
    for run in lowered.split(|c: char| !is_token_char(c)) {
        let core = run.trim_matches(|c: char| c == '\'' || c == '-');
        if !core.is_empty() {
            tokens.push(core.to_string());
        }
    }
    TokenStream {
        doc_id: doc.id.clone(),
        tokens,
    }
}

/// Drops tokens found in the stop list, preserving survivor order.
pub fn remove_stopwords(stream: TokenStream, stops: &WordList) -> TokenStream {
    debug_assert_eq!(stops.kind(), WordListKind::StopWords);
    TokenStream {
        doc_id: stream.doc_id,
        tokens: stream
            .tokens
            .into_iter()
            .filter(|t| !stops.contains(t))
            .collect(),
    }
}

/// Porter stem of one lowercase token.
pub fn stem(token: &str) -> String {
    crate::porter::porter_stem(token)
}

/// Stems every token in place.
pub fn stem_stream(stream: TokenStream) -> TokenStream {
    TokenStream {
        doc_id: stream.doc_id,
        tokens: stream.tokens.iter().map(|t| stem(t)).collect(),
    }
}

/// Contiguous n-gram strings, space-joined; empty when the stream is shorter
/// than n.
pub fn ngrams(stream: &TokenStream, n: usize) -> Result<Vec<String>> {
    if n == 0 {
        return Err(Error::InvalidN);
    }
    if stream.tokens.len() < n {
        return Ok(Vec::new());
    }
    Ok(stream.tokens.windows(n).map(|w| w.join(" ")).collect())
}

/// Builds the document-term matrix. The vocabulary keeps tokens occurring at
/// least `min_term_count` times corpus-wide; documents whose retained-token
/// count falls below `min_doc_length` are excluded, their ids returned
/// alongside the matrix.
pub fn build_dtm(
    streams: &[TokenStream],
    min_term_count: usize,
    min_doc_length: usize,
) -> Result<(DocTermMatrix, Vec<String>)> {
    let mut corpus_counts: HashMap<&str, usize> = HashMap::new();
    for s in streams {
        for t in &s.tokens {
            *corpus_counts.entry(t.as_str()).or_insert(0) += 1;
        }
    }
    let mut terms: Vec<String> = corpus_counts
        .iter()
        .filter(|&(_, &c)| c >= min_term_count)
        .map(|(&t, _)| t.to_string())
        .collect();
    terms.sort_unstable();
    if terms.is_empty() {
        return Err(Error::EmptyVocabulary);
    }
    let vocab = Vocabulary::from_sorted_terms(terms);

    let mut doc_ids = Vec::new();
    let mut rows = Vec::new();
    let mut excluded = Vec::new();
    for s in streams {
        let mut counts: BTreeMap<usize, u32> = BTreeMap::new();
        for t in &s.tokens {
            if let Some(i) = vocab.index_of(t) {
                *counts.entry(i).or_insert(0) += 1;
            }
        }
        let retained: u64 = counts.values().map(|&c| u64::from(c)).sum();
        if retained < min_doc_length as u64 {
            excluded.push(s.doc_id.clone());
        } else {
            doc_ids.push(s.doc_id.clone());
            rows.push(counts.into_iter().collect());
        }
    }
    Ok((DocTermMatrix::from_parts(vocab, doc_ids, rows), excluded))
}

/// Writes the matrix as a triplet file ("doc_id term count" per line after
/// the header) plus a sidecar vocabulary file, one term per line.
pub fn save_dtm(dtm: &DocTermMatrix, dtm_path: &Path, vocab_path: &Path) -> Result<()> {
    let file = std::fs::File::create(dtm_path).map_err(|e| Error::unreadable(dtm_path, e))?;
    let mut w = BufWriter::new(file);
    let io_err = |e| Error::unreadable(dtm_path, e);
    writeln!(w, "doc_id term count").map_err(io_err)?;
    for d in 0..dtm.n_docs() {
        for &(t, c) in dtm.row(d) {
            writeln!(w, "{} {} {}", dtm.doc_ids()[d], dtm.vocab().term(t), c).map_err(io_err)?;
        }
    }
    w.flush().map_err(io_err)?;

    let file = std::fs::File::create(vocab_path).map_err(|e| Error::unreadable(vocab_path, e))?;
    let mut w = BufWriter::new(file);
    for term in dtm.vocab().terms() {
        writeln!(w, "{term}").map_err(|e| Error::unreadable(vocab_path, e))?;
    }
    w.flush().map_err(|e| Error::unreadable(vocab_path, e))
}

/// Reads a triplet file and its vocabulary sidecar. Triplet lines are parsed
/// from the right, so doc ids may contain spaces; rows group consecutive
/// lines with the same doc id, in first-appearance order.
pub fn load_dtm(dtm_path: &Path, vocab_path: &Path) -> Result<DocTermMatrix> {
    let vocab_text =
        std::fs::read_to_string(vocab_path).map_err(|e| Error::unreadable(vocab_path, e))?;
    let terms: Vec<String> = vocab_text.lines().map(str::to_string).collect();
    for (i, w) in terms.windows(2).enumerate() {
        if w[0] >= w[1] {
            return Err(Error::malformed(
                i + 2,
                "vocabulary not sorted and distinct",
            ));
        }
    }
    let vocab = Vocabulary::from_sorted_terms(terms);
    if vocab.is_empty() {
        return Err(Error::EmptyVocabulary);
    }

    let text = std::fs::read_to_string(dtm_path).map_err(|e| Error::unreadable(dtm_path, e))?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == "doc_id term count" => {}
        _ => return Err(Error::malformed(1, "missing triplet header")),
    }
    let mut doc_ids: Vec<String> = Vec::new();
    let mut rows: Vec<Vec<(usize, u32)>> = Vec::new();
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.rsplitn(3, ' ');
        let (count, term, doc_id) = match (fields.next(), fields.next(), fields.next()) {
            (Some(c), Some(t), Some(d)) if !d.is_empty() => (c, t, d),
            _ => return Err(Error::malformed(idx + 1, "expected 'doc_id term count'")),
        };
        let count: u32 = count
            .parse()
            .map_err(|_| Error::malformed(idx + 1, "count is not a positive integer"))?;
        if count == 0 {
            return Err(Error::malformed(idx + 1, "zero count"));
        }
        let t = vocab
            .index_of(term)
            .ok_or_else(|| Error::malformed(idx + 1, format!("unknown term {term:?}")))?;
        if doc_ids.last().map(String::as_str) != Some(doc_id) {
            if doc_ids.iter().any(|d| d == doc_id) {
                return Err(Error::malformed(idx + 1, "non-contiguous doc_id group"));
            }
            doc_ids.push(doc_id.to_string());
            rows.push(Vec::new());
        }
        let row = rows.last_mut().expect("row pushed with doc id");
        if row.last().is_some_and(|&(prev, _)| prev >= t) {
            return Err(Error::malformed(
                idx + 1,
                "term indices not ascending in row",
            ));
        }
        row.push((t, count));
    }
    Ok(DocTermMatrix::from_parts(vocab, doc_ids, rows))
}
