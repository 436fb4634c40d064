//! Dictionary-based quality scoring, tier routing, and spelling correction
//! for OCR-derived documents.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Document, WordList, WordListKind};
use crate::error::{Error, Result};

pub const DEFAULT_LOW_THRESHOLD: f64 = 0.5;
pub const DEFAULT_HIGH_THRESHOLD: f64 = 0.9;
pub const DEFAULT_MAX_EDIT_DISTANCE: usize = 2;

/// Quality tier. Boundary scores are Keep: Drop and Correct both require a
/// strict inequality.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Tier {
    Drop,
    Keep,
    Correct,
}

/// Dictionary hit-rate of one document and the tier it lands in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    pub doc_id: String,
    pub total_words: usize,
    pub in_dictionary: usize,
    pub score: f64,
    pub tier: Tier,
}

/// Tier cut points; 0 <= low <= high <= 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub low: f64,
    pub high: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            low: DEFAULT_LOW_THRESHOLD,
            high: DEFAULT_HIGH_THRESHOLD,
        }
    }
}

impl Thresholds {
    pub fn new(low: f64, high: f64) -> Result<Self> {
        let t = Thresholds { low, high };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.low.is_finite()
            && self.high.is_finite()
            && 0.0 <= self.low
            && self.low <= self.high
            && self.high <= 1.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidThresholds {
                low: self.low,
                high: self.high,
            })
        }
    }

    fn tier_for(&self, score: f64) -> Tier {
        if score < self.low {
            Tier::Drop
        } else if score > self.high {
            Tier::Correct
        } else {
            Tier::Keep
        }
    }
}

/// A scoring word is one whitespace-delimited chunk. Its core is the chunk
/// lowercased with non-alphanumeric edge characters stripped (interior
/// hyphens/apostrophes survive); a chunk whose core is empty is a miss.
fn word_core(chunk: &str) -> String {
    chunk
        .trim_matches(|c: char| !c.is_alphanumeric())
        .to_lowercase()
}

/// All-digit tokens count as in-dictionary: digits are not OCR garbage.
fn core_hits(core: &str, dictionary: &WordList) -> bool {
    !core.is_empty() && (core.chars().all(|c| c.is_ascii_digit()) || dictionary.contains(core))
}

/// Scores a document with explicit thresholds.
pub fn score_document_with(
    doc: &Document,
    dictionary: &WordList,
    thresholds: &Thresholds,
) -> QualityReport {
    debug_assert_eq!(dictionary.kind(), WordListKind::Dictionary);
    let mut total_words = 0usize;
    let mut in_dictionary = 0usize;
    for chunk in doc.text.split_whitespace() {
        total_words += 1;
        if core_hits(&word_core(chunk), dictionary) {
            in_dictionary += 1;
        }
    }
    let score = if total_words == 0 {
        0.0
    } else {
        in_dictionary as f64 / total_words as f64
    };
    QualityReport {
        doc_id: doc.id.clone(),
        total_words,
        in_dictionary,
        score,
        tier: thresholds.tier_for(score),
    }
}

/// Scores a document with the default thresholds (0.5, 0.9).
pub fn score_document(doc: &Document, dictionary: &WordList) -> QualityReport {
    score_document_with(doc, dictionary, &Thresholds::default())
}

/// Levenshtein distance over chars.
fn levenshtein(a: &[char], b: &[char]) -> usize {
    if a.is_empty() {
        return b.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0usize; b.len() + 1];
    for (i, &ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, &cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Closest dictionary word within the edit-distance bound. Ties go to the
/// smaller distance, then the lexicographically smaller candidate. The
/// length band |len(candidate) - len(token)| <= bound is result-identical
/// to exhaustive search.
fn best_correction<'d>(
    core: &str,
    dictionary: &'d WordList,
    max_edit_distance: usize,
) -> Option<&'d str> {
    let token: Vec<char> = core.chars().collect();
    let mut best: Option<(usize, &str)> = None;
    for cand in dictionary.iter() {
        let cand_len = cand.chars().count();
        if cand_len.abs_diff(token.len()) > max_edit_distance {
            continue;
        }
        let cand_chars: Vec<char> = cand.chars().collect();
        let d = levenshtein(&token, &cand_chars);
        if d <= max_edit_distance && best.is_none_or(|(bd, _)| d < bd) {
            best = Some((d, cand));
            // Distance 0 cannot occur (the core is out-of-dictionary) and a
            // later candidate at distance 1 loses the lexicographic tie.
            if d == 1 {
                break;
            }
        }
    }
    best.map(|(_, c)| c)
}

/// Replaces each out-of-dictionary word core with its closest dictionary
/// word within `max_edit_distance`; everything else, including whitespace
/// and edge punctuation, is preserved verbatim. Idempotent: corrections
/// land in-dictionary or are untouched.
pub fn correct_document(
    doc: &Document,
    dictionary: &WordList,
    max_edit_distance: usize,
) -> Document {
    let mut out = String::with_capacity(doc.text.len());
    let mut rest = doc.text.as_str();
    while !rest.is_empty() {
        let split = rest
            .find(|c: char| c.is_whitespace() != rest.starts_with(char::is_whitespace))
            .unwrap_or(rest.len());
        let (run, tail) = rest.split_at(split);
        rest = tail;
        if run.starts_with(char::is_whitespace) {
            out.push_str(run);
            continue;
        }
        out.push_str(&correct_chunk(run, dictionary, max_edit_distance));
    }
    Document {
        id: doc.id.clone(),
        text: out,
        date: doc.date,
        source_tag: doc.source_tag.clone(),
    }
}

fn correct_chunk(chunk: &str, dictionary: &WordList, max_edit_distance: usize) -> String {
    let start = chunk
        .find(|c: char| c.is_alphanumeric())
        .unwrap_or(chunk.len());
    let end = chunk
        .rfind(|c: char| c.is_alphanumeric())
        .map_or(start, |i| i + chunk[i..].chars().next().unwrap().len_utf8());
    let core = chunk[start..end].to_lowercase();
    if core.is_empty() || core_hits(&core, dictionary) {
        return chunk.to_string();
    }
    match best_correction(&core, dictionary, max_edit_distance) {
        Some(fix) => format!("{}{}{}", &chunk[..start], fix, &chunk[end..]),
        None => chunk.to_string(),
    }
}

/// Scores every document, drops the low tier, corrects the high tier, and
/// keeps the middle tier verbatim. Output order matches input order.
pub fn gate_corpus(
    docs: &[Document],
    dictionary: &WordList,
    thresholds: &Thresholds,
    max_edit_distance: usize,
) -> Result<(Vec<Document>, Vec<QualityReport>)> {
    thresholds.validate()?;
    let gated: Vec<(Option<Document>, QualityReport)> = docs
        .par_iter()
        .map(|doc| {
            let report = score_document_with(doc, dictionary, thresholds);
            let kept = match report.tier {
                Tier::Drop => None,
                Tier::Keep => Some(doc.clone()),
                Tier::Correct => Some(correct_document(doc, dictionary, max_edit_distance)),
            };
            (kept, report)
        })
        .collect();
    let mut kept = Vec::new();
    let mut reports = Vec::with_capacity(docs.len());
    for (doc, report) in gated {
        kept.extend(doc);
        reports.push(report);
    }
    Ok((kept, reports))
}

/// Writes reports as CSV with header doc_id,total_words,in_dictionary,score,tier.
pub fn save_reports_csv(reports: &[QualityReport], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::unreadable(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    for r in reports {
        w.serialize(r)
            .map_err(|e| Error::malformed(0, format!("csv write: {e}")))?;
    }
    w.flush().map_err(|e| Error::unreadable(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dict(words: &[&str]) -> WordList {
        WordList::new(WordListKind::Dictionary, words.iter().copied())
    }

    fn doc(id: &str, text: &str) -> Document {
        Document {
            id: id.into(),
            text: text.into(),
            date: None,
            source_tag: String::new(),
        }
    }

    #[test]
    fn score_counts_hits_and_routes_tiers() {
        let d = dict(&["war", "peace", "the", "senate"]);
        let r = score_document(
            &doc("a", "the war, the PEACE. xqzt glarb foo bar baz quux"),
            &d,
        );
        assert_eq!(r.total_words, 10);
        assert_eq!(r.in_dictionary, 4);
        assert!((r.score - 0.4).abs() < 1e-12);
        assert_eq!(r.tier, Tier::Drop);
    }

    #[test]
    fn high_scores_route_to_correct() {
        let d = dict(&["word"]);
        let text = std::iter::repeat_n("word", 19)
            .chain(["xzqv"])
            .collect::<Vec<_>>()
            .join(" ");
        let r = score_document(&doc("a", &text), &d);
        assert_eq!((r.total_words, r.in_dictionary), (20, 19));
        assert_eq!(r.tier, Tier::Correct);
    }

    #[test]
    fn empty_document_drops() {
        let r = score_document(&doc("a", ""), &dict(&["x"]));
        assert_eq!(r.total_words, 0);
        assert_eq!(r.score, 0.0);
        assert_eq!(r.tier, Tier::Drop);
    }

    #[test]
    fn boundary_scores_are_keep() {
        let t = Thresholds::default();
        assert_eq!(t.tier_for(0.5), Tier::Keep);
        assert_eq!(t.tier_for(0.9), Tier::Keep);
        assert_eq!(t.tier_for(0.4999), Tier::Drop);
        assert_eq!(t.tier_for(0.9001), Tier::Correct);
    }

    #[test]
    fn digits_hit_but_digit_groupings_miss() {
        let d = dict(&["pay"]);
        let r = score_document(&doc("a", "pay 1000 in 1,000"), &d);
        // "in" misses (not in this dictionary), "1,000" misses (comma).
        assert_eq!(r.total_words, 4);
        assert_eq!(r.in_dictionary, 2);
    }

    #[test]
    fn symbol_runs_miss() {
        let d = dict(&["ok"]);
        let r = score_document(&doc("a", "ok $$$ --- ***"), &d);
        assert_eq!(r.total_words, 4);
        assert_eq!(r.in_dictionary, 1);
    }

    #[test]
    fn levenshtein_basics() {
        let c = |s: &str| s.chars().collect::<Vec<_>>();
        assert_eq!(levenshtein(&c("kitten"), &c("sitting")), 3);
        assert_eq!(levenshtein(&c(""), &c("ab")), 2);
        assert_eq!(levenshtein(&c("abc"), &c("abc")), 0);
        assert_eq!(levenshtein(&c("peqce"), &c("peace")), 1);
        assert_eq!(levenshtein(&c("peqce"), &c("piece")), 2);
    }

    #[test]
    fn correction_prefers_smaller_distance_then_lexicographic() {
        let d = dict(&["peace", "piece"]);
        let fixed = correct_document(&doc("a", "peqce"), &d, 2);
        assert_eq!(fixed.text, "peace");
        // Equidistant candidates: "pi_ce" is 1 from both; "peace" wins.
        let d2 = dict(&["piece", "pizce", "pince"]);
        let fixed = correct_document(&doc("a", "pioce"), &d2, 2);
        assert_eq!(fixed.text, "piece");
    }

    #[test]
    fn correction_preserves_everything_else() {
        let d = dict(&["peace", "now"]);
        let fixed = correct_document(&doc("a", "  Peace, peqce!!  now\tzzzzzzzz "), &d, 2);
        assert_eq!(fixed.text, "  Peace, peace!!  now\tzzzzzzzz ");
    }

    #[test]
    fn correction_is_idempotent() {
        let d = dict(&["peace", "piece", "senate", "war"]);
        let original = doc("a", "peqce of the senat: wqr --- 123");
        let once = correct_document(&original, &d, 2);
        let twice = correct_document(&once, &d, 2);
        assert_eq!(once, twice);
    }

    #[test]
    fn gate_partitions_and_orders() {
        let d = dict(&["alpha", "beta", "gamma"]);
        let mut good = ["alpha", "beta", "gamma"].repeat(7);
        good.truncate(19);
        good.push("alphb");
        let docs = vec![
            doc("good", &good.join(" ")),
            doc("bad", "zz qq ww"),
            doc("mid", "alpha beta zz qq"),
        ];
        let (kept, reports) = gate_corpus(&docs, &d, &Thresholds::default(), 2).unwrap();
        assert_eq!(reports.len(), 3);
        assert_eq!(
            kept.iter().map(|x| x.id.as_str()).collect::<Vec<_>>(),
            ["good", "mid"]
        );
        assert_eq!(reports[0].tier, Tier::Correct);
        assert!(kept[0].text.ends_with("alpha"));
        assert_eq!(reports[1].tier, Tier::Drop);
        assert_eq!(reports[2].tier, Tier::Keep);
        assert_eq!(kept[1].text, docs[2].text);
    }

    #[test]
    fn bad_thresholds_rejected() {
        assert!(matches!(
            Thresholds::new(0.6, 0.5),
            Err(Error::InvalidThresholds { .. })
        ));
        let err = gate_corpus(
            &[],
            &dict(&["x"]),
            &Thresholds {
                low: 0.6,
                high: 0.5,
            },
            2,
        );
        assert!(matches!(err, Err(Error::InvalidThresholds { .. })));
    }

    #[test]
    fn csv_header_and_rows() {
        let reports = vec![QualityReport {
            doc_id: "d1".into(),
            total_words: 4,
            in_dictionary: 3,
            score: 0.75,
            tier: Tier::Keep,
        }];
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.csv");
        save_reports_csv(&reports, &p).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert_eq!(
            text,
            "doc_id,total_words,in_dictionary,score,tier\nd1,4,3,0.75,Keep\n"
        );
    }
}
