//! Okapi BM25 over the candidate passages of one search.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use super::types::{Passage, WebDocument, WebQuery};
use crate::text::{collapse_whitespace, tokenize, truncate_chars};

pub const MAX_PASSAGE_CHARS: usize = 1200;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bm25 {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25 {
    fn default() -> Self {
        Self { k1: 1.2, b: 0.75 }
    }
}

impl Bm25 {
    /// Scores every document of `corpus` (already tokenized) against
    /// `query` terms. Repeated query terms contribute once per occurrence.
    pub fn score_all(&self, query: &[String], corpus: &[Vec<String>]) -> Vec<f64> {
        let n = corpus.len() as f64;
        if corpus.is_empty() {
            return Vec::new();
        }
        let avgdl = corpus.iter().map(Vec::len).sum::<usize>() as f64 / n;
        let mut df: BTreeMap<&str, usize> = BTreeMap::new();
        for doc in corpus {
            let mut seen: Vec<&str> = doc.iter().map(String::as_str).collect();
            seen.sort_unstable();
            seen.dedup();
            for term in seen {
                *df.entry(term).or_insert(0) += 1;
            }
        }
        corpus
            .iter()
            .map(|doc| {
                let len = doc.len() as f64;
                let norm = if avgdl > 0.0 { len / avgdl } else { 0.0 };
                query
                    .iter()
                    .map(|term| {
                        let tf = doc.iter().filter(|t| *t == term).count() as f64;
                        if tf == 0.0 {
                            return 0.0;
                        }
                        let n_t = df.get(term.as_str()).copied().unwrap_or(0) as f64;
                        let idf = libm::log(1.0 + (n - n_t + 0.5) / (n_t + 0.5));
                        idf * tf * (self.k1 + 1.0) / (tf + self.k1 * (1.0 - self.b + self.b * norm))
                    })
                    .sum()
            })
            .collect()
    }
}

/// Splits page text into passages of at most [`MAX_PASSAGE_CHARS`],
/// breaking after sentence punctuation where possible.
pub fn split_passages(text: &str) -> Vec<String> {
    let text = collapse_whitespace(text);
    let mut out = Vec::new();
    let mut current = String::new();
    for sentence in text.split_inclusive(['.', '!', '?']) {
        let sentence = sentence.trim();
        if sentence.is_empty() {
            continue;
        }
        let len = current.chars().count() + sentence.chars().count() + 1;
        if !current.is_empty() && len > MAX_PASSAGE_CHARS {
            out.push(core::mem::take(&mut current));
        }
        if !current.is_empty() {
            current.push(' ');
        }
        current.push_str(sentence);
        while current.chars().count() > MAX_PASSAGE_CHARS {
            let head = truncate_chars(&current, MAX_PASSAGE_CHARS);
            current = String::from(&current[head.len()..]);
            out.push(head);
        }
    }
    if !current.is_empty() {
        out.push(current);
    }
    out
}

fn passages_of(doc: &WebDocument) -> Vec<Passage> {
    let chunks = match &doc.body {
        Some(body) => split_passages(body),
        None => {
            let snippet = collapse_whitespace(&doc.snippet);
            if snippet.is_empty() {
                Vec::new()
            } else {
                alloc::vec![truncate_chars(&snippet, MAX_PASSAGE_CHARS)]
            }
        }
    };
    chunks
        .into_iter()
        .enumerate()
        .map(|(index, text)| Passage {
            text,
            source_url: doc.url.clone(),
            index,
            bm25: 0.0,
        })
        .collect()
}

/// Splits documents into passages and orders them by BM25 against the
/// query (k1 = 1.2, b = 0.75). Ties go to `(url, passage index)`.
pub fn rank_passages(query: &WebQuery, documents: &[WebDocument]) -> Vec<Passage> {
    let mut passages: Vec<Passage> = documents.iter().flat_map(passages_of).collect();
    let corpus: Vec<Vec<String>> = passages.iter().map(|p| tokenize(&p.text)).collect();
    let scores = Bm25::default().score_all(&tokenize(&query.text), &corpus);
    for (p, s) in passages.iter_mut().zip(scores) {
        p.bm25 = s;
    }
    passages.sort_by(|a, b| {
        b.bm25
            .total_cmp(&a.bm25)
            .then_with(|| a.source_url.cmp(&b.source_url))
            .then_with(|| a.index.cmp(&b.index))
    });
    passages
}
