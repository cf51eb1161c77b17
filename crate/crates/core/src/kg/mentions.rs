//! Heuristic topic-entity extraction.
//!
//! Picks up maximal runs of capitalized tokens (a lone sentence-initial
//! token does not count), quoted spans and four-digit years. Anything that
//! fails to link later is dropped by [`super::link_entities`].

use alloc::string::String;
use alloc::vec::Vec;

use super::types::{EntityMention, KgError};

const LEADING_FUNCTION_WORDS: &[&str] = &[
    "A", "An", "The", "In", "On", "At", "Of", "And", "But", "Or", "For", "From", "To", "By", "With", "As", "If", "It",
    "Its", "This", "That", "These", "Those", "There", "When", "While", "After", "Before",
];

#[derive(Debug, Clone)]
struct Token {
    start: usize,
    end: usize,
    text: String,
    sentence_initial: bool,
}

impl Token {
    fn capitalized(&self) -> bool {
        self.text.chars().next().is_some_and(char::is_uppercase)
    }

    fn is_year(&self) -> bool {
        self.text.len() == 4 && self.text.bytes().all(|b| b.is_ascii_digit())
    }
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric()
}

fn tokens(chars: &[char]) -> Vec<Token> {
    let mut out: Vec<Token> = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        if !is_word_char(chars[i]) {
            i += 1;
            continue;
        }
        let start = i;
        while i < chars.len() {
            let c = chars[i];
            let joiner =
                (c == '-' || c == '\'' || c == '’') && i > start && chars.get(i + 1).copied().is_some_and(is_word_char);
            if is_word_char(c) || joiner {
                i += 1;
            } else {
                break;
            }
        }
        let sentence_initial = match out.last() {
            None => true,
            Some(prev) => chars[prev.end..start].iter().any(|c| matches!(c, '.' | '!' | '?')),
        };
        out.push(Token {
            start,
            end: i,
            text: chars[start..i].iter().collect(),
            sentence_initial,
        });
    }
    out
}

fn quoted_spans(chars: &[char]) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    let mut open: Option<usize> = None;
    for (i, &c) in chars.iter().enumerate() {
        match (c, open) {
            ('"' | '“', None) => open = Some(i + 1),
            ('"' | '”', Some(s)) => {
                let mut a = s;
                let mut b = i;
                while a < b && chars[a].is_whitespace() {
                    a += 1;
                }
                while b > a && chars[b - 1].is_whitespace() {
                    b -= 1;
                }
                if a < b {
                    spans.push((a, b));
                }
                open = None;
            }
            _ => {}
        }
    }
    spans
}

fn mention(chars: &[char], start: usize, mut end: usize) -> EntityMention {
    // Drop a trailing possessive.
    if end >= start + 3 && matches!(chars[end - 2], '\'' | '’') && matches!(chars[end - 1], 's' | 'S') {
        end -= 2;
    }
    EntityMention {
        surface: chars[start..end].iter().collect(),
        span: (start, end),
        candidate_ids: Vec::new(),
    }
}

/// Extracts candidate entity mentions, ordered by span start and
/// non-overlapping. Offsets are character offsets.
pub fn extract_mentions(claim: &str) -> Result<Vec<EntityMention>, KgError> {
    if claim.trim().is_empty() {
        return Err(KgError::EmptyClaim);
    }
    let chars: Vec<char> = claim.chars().collect();
    let quoted = quoted_spans(&chars);
    let inside_quote = |t: &Token| quoted.iter().any(|&(a, b)| t.start < b && a < t.end);

    let mut found: Vec<EntityMention> = quoted.iter().map(|&(a, b)| mention(&chars, a, b)).collect();
    let toks: Vec<Token> = tokens(&chars).into_iter().filter(|t| !inside_quote(t)).collect();

    let mut i = 0;
    while i < toks.len() {
        let tok = &toks[i];
        if tok.is_year() {
            found.push(mention(&chars, tok.start, tok.end));
            i += 1;
            continue;
        }
        if !tok.capitalized() {
            i += 1;
            continue;
        }
        let mut j = i + 1;
        while j < toks.len() && toks[j].capitalized() && chars[toks[j - 1].end..toks[j].start] == [' '] {
            j += 1;
        }
        let mut first = i;
        if toks[i].sentence_initial && LEADING_FUNCTION_WORDS.contains(&toks[i].text.as_str()) {
            first += 1;
        }
        let run_len = j - first;
        let lone_initial = run_len == 1 && toks[first].sentence_initial;
        if run_len >= 1 && !lone_initial {
            found.push(mention(&chars, toks[first].start, toks[j - 1].end));
        }
        i = j;
    }

    found.sort_by_key(|m| m.span);
    let mut out: Vec<EntityMention> = Vec::with_capacity(found.len());
    for m in found {
        if out.last().is_none_or(|prev| prev.span.1 <= m.span.0) {
            out.push(m);
        }
    }
    Ok(out)
}
