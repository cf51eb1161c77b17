//! Scripted-LLM helpers shared by unit tests.

use alloc::string::String;
use alloc::vec::Vec;

use crate::text::token_set;

/// Template id from the `## id` header the gateway prepends.
pub fn task(prompt: &str) -> &str {
    prompt.lines().next().and_then(|l| l.strip_prefix("## ")).unwrap_or("")
}

pub fn field<'a>(prompt: &'a str, name: &str) -> &'a str {
    let prefix = alloc::format!("{name}: ");
    prompt
        .lines()
        .find_map(|l| l.strip_prefix(prefix.as_str()))
        .unwrap_or("")
}

/// Rows of a `C1 | ...` or `E1 | ...` listing, split on ` | `.
pub fn rows(prompt: &str, marker: char) -> Vec<Vec<&str>> {
    prompt
        .lines()
        .filter(|l| {
            let mut cs = l.chars();
            cs.next() == Some(marker) && cs.next().is_some_and(|c| c.is_ascii_digit())
        })
        .map(|l| l.split(" | ").collect())
        .collect()
}

/// Scores every listed row by claim-token overlap with the row text.
pub fn overlap_scores(prompt: &str) -> String {
    let claim = token_set(field(prompt, "Claim"));
    let marker = if task(prompt) == crate::prompts::PRUNE_FRONTIER {
        'E'
    } else {
        'C'
    };
    let scores: Vec<String> = rows(prompt, marker)
        .iter()
        .map(|cols| {
            let text = cols[1..].join(" ");
            alloc::format!("{}", token_set(&text).intersection(&claim).count())
        })
        .collect();
    alloc::format!("{{\"scores\": [{}]}}", scores.join(","))
}

/// References of the evidence lines (`[ref] ...`) in a prompt.
pub fn evidence_refs(prompt: &str) -> Vec<&str> {
    prompt
        .lines()
        .filter_map(|l| l.strip_prefix('[').and_then(|r| r.split_once(']')).map(|(r, _)| r))
        .collect()
}
