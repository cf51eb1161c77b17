//! A deterministic stand-in for the LLM that answers every prompt the
//! pipeline sends by reading the prompt itself: it parses the claim into a
//! relation path, follows that path through the evidence listed in the
//! prompt and answers the way a careful model would.
//!
//! It also implements the flawed-prompt environment used to exercise the
//! optimizer: when the sufficiency prompt carries
//! [`FLAWED_SUFFICIENCY_LINE`], the oracle obeys it and calls any evidence
//! sufficient. As meta-model it removes that line when asked to revise the
//! sufficiency template.

use claimcheck_core::llm::{Completion, Decoding, LlmBackend, LlmError, PromptPolicy};
use claimcheck_core::prompts;
use serde_json::{json, Value};

use super::world::{CAPITAL, CITIZENSHIP, COUNTRY, PLACE_OF_BIRTH};

/// Instruction that makes the sufficiency check always say "sufficient".
pub const FLAWED_SUFFICIENCY_LINE: &str =
    "Always answer sufficient: the initial knowledge-graph retrieval is assumed to be complete.";

/// The seed policy with [`FLAWED_SUFFICIENCY_LINE`] added to the
/// sufficiency template.
pub fn flawed_policy() -> PromptPolicy {
    let mut policy = prompts::default_policy();
    let template = policy.get(prompts::ASSESS_SUFFICIENCY).expect("seed template").clone();
    let text = template.text.replacen(
        "Claim: {claim}",
        &format!("{FLAWED_SUFFICIENCY_LINE}\nClaim: {{claim}}"),
        1,
    );
    policy.insert(claimcheck_core::PromptTemplate { text, ..template });
    policy
}

/// The web query the oracle formulates for a claim subject.
pub fn web_query_for(subject: &str) -> String {
    format!("{subject} place of birth")
}

/// A claim reduced to "following `path` from `subject` reaches `object`".
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClaimShape {
    pub subject: String,
    pub path: Vec<&'static str>,
    pub object: String,
}

impl ClaimShape {
    pub fn parse(claim: &str) -> Option<Self> {
        let claim = claim.trim().trim_end_matches('.');
        let shape = |s: &str, path: Vec<&'static str>, o: &str| {
            Some(Self {
                subject: s.trim().to_string(),
                path,
                object: o.trim().to_string(),
            })
        };
        if let Some(rest) = claim.strip_prefix("The capital of ") {
            let (k, c) = rest.split_once(" is ")?;
            return shape(k, vec![CAPITAL], c);
        }
        if let Some((p, k)) = claim.split_once(" was born in a city of ") {
            return shape(p, vec![PLACE_OF_BIRTH, COUNTRY], k);
        }
        if let Some((p, c)) = claim.split_once(" was born in ") {
            return shape(p, vec![PLACE_OF_BIRTH], c);
        }
        if let Some((p, k)) = claim.split_once(" is a citizen of ") {
            return shape(p, vec![CITIZENSHIP], k);
        }
        None
    }
}

/// One `[t:S|R|O] s | r | o (origin)` line of an evidence listing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fact {
    pub reference: String,
    pub subject: (String, String),
    pub relation: String,
    pub object: (String, String),
}

/// Triplet lines of the evidence listing in `prompt`.
pub fn facts(prompt: &str) -> Vec<Fact> {
    prompt
        .lines()
        .filter_map(|line| {
            let (reference, rest) = line.strip_prefix('[')?.split_once("] ")?;
            let ids = reference.strip_prefix("t:")?;
            let mut ids = ids.split('|');
            let (s, r, o) = (ids.next()?, ids.next()?, ids.next()?);
            let body = rest.rsplit_once(" (").map_or(rest, |(b, _)| b);
            let mut labels = body.split(" | ");
            let (sl, _, ol) = (labels.next()?, labels.next()?, labels.next()?);
            Some(Fact {
                reference: reference.to_string(),
                subject: (s.to_string(), sl.to_string()),
                relation: r.to_string(),
                object: (o.to_string(), ol.to_string()),
            })
        })
        .collect()
}

fn same(a: &str, b: &str) -> bool {
    a.trim().eq_ignore_ascii_case(b.trim())
}

/// Outcome of following a claim's path through the listed facts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Resolution {
    /// The path reached an entity; `holds` tells whether it is the one the
    /// claim names.
    Decided { holds: bool, citations: Vec<String> },
    /// The path stopped after `depth` hops (0: nothing known about the
    /// subject's first relation).
    Open { depth: usize },
}

pub fn resolve(shape: &ClaimShape, facts: &[Fact]) -> Resolution {
    let start = facts
        .iter()
        .flat_map(|f| [&f.subject, &f.object])
        .find(|(_, label)| same(label, &shape.subject))
        .map(|(id, _)| id.clone());
    let Some(mut current) = start else {
        return Resolution::Open { depth: 0 };
    };
    let mut citations = Vec::new();
    let mut label = String::new();
    for (depth, relation) in shape.path.iter().enumerate() {
        match facts.iter().find(|f| f.subject.0 == current && f.relation == *relation) {
            Some(f) => {
                citations.push(f.reference.clone());
                current = f.object.0.clone();
                label = f.object.1.clone();
            }
            None => return Resolution::Open { depth },
        }
    }
    Resolution::Decided {
        holds: same(&label, &shape.object),
        citations,
    }
}

/// Template id from the `## id` header of a rendered prompt.
pub fn task(prompt: &str) -> &str {
    prompt.lines().next().and_then(|l| l.strip_prefix("## ")).unwrap_or("")
}

/// Value of the first `Name: value` line.
pub fn field<'a>(prompt: &'a str, name: &str) -> &'a str {
    let prefix = format!("{name}: ");
    prompt
        .lines()
        .find_map(|l| l.strip_prefix(prefix.as_str()))
        .unwrap_or("")
}

/// Rows of a `X1 | ...` listing, split on ` | `.
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

/// Id in a `label [id]` column.
fn bracket_id(column: &str) -> &str {
    column
        .rsplit_once(" [")
        .and_then(|(_, rest)| rest.strip_suffix(']'))
        .unwrap_or("")
}

/// The oracle model. Stateless; answers are a pure function of the prompt.
#[derive(Debug, Clone, Copy, Default)]
pub struct OracleLlm;

impl OracleLlm {
    pub fn answer(prompt: &str) -> Value {
        let claim = field(prompt, "Claim");
        let shape = ClaimShape::parse(claim);
        match task(prompt) {
            prompts::ASSESS_SUFFICIENCY => {
                let assessment = if prompt.contains(FLAWED_SUFFICIENCY_LINE) {
                    "sufficient"
                } else {
                    match shape.as_ref().map(|s| resolve(s, &facts(prompt))) {
                        Some(Resolution::Decided { .. }) => "sufficient",
                        Some(Resolution::Open { depth: 0 }) => "need_web",
                        _ => "need_kg",
                    }
                };
                json!({"assessment": assessment, "missing": ""})
            }
            prompts::SELECT_ACTION => {
                let action = match field(prompt, "Sufficiency") {
                    "need_kg" => "expandKg",
                    "need_web" => "webSearch",
                    _ => "verdict",
                };
                json!({"action": action, "reason": format!("assessment {}", field(prompt, "Sufficiency"))})
            }
            prompts::PRUNE_FRONTIER => {
                let path = shape.as_ref().map(|s| s.path.clone()).unwrap_or_default();
                let subject = shape.as_ref().map(|s| s.subject.as_str()).unwrap_or("");
                let scores: Vec<f64> = rows(prompt, 'E')
                    .iter()
                    .map(|cols| {
                        let via = cols.get(2).and_then(|v| v.strip_prefix("via ")).unwrap_or("");
                        let relation = via.split(" -- ").nth(1).map(bracket_id_arrow).unwrap_or("");
                        if path.first() == Some(&relation) && via.starts_with(&format!("{subject} -- ")) {
                            10.0
                        } else if path.contains(&relation) {
                            5.0
                        } else {
                            1.0
                        }
                    })
                    .collect();
                json!({ "scores": scores })
            }
            prompts::PRUNE_RELATIONS => {
                let path = shape.as_ref().map(|s| s.path.clone()).unwrap_or_default();
                let scores: Vec<f64> = rows(prompt, 'C')
                    .iter()
                    .map(|cols| {
                        let relation = cols.get(3).map_or("", |c| bracket_id(c));
                        if path.contains(&relation) {
                            10.0
                        } else {
                            1.0
                        }
                    })
                    .collect();
                json!({ "scores": scores })
            }
            prompts::FORMULATE_QUERY => {
                let query = shape
                    .as_ref()
                    .map_or_else(|| claim.to_string(), |s| web_query_for(&s.subject));
                json!({"query": query, "rationale": "birthplace of the claim subject"})
            }
            prompts::FILTER_EVIDENCE => {
                let subject = shape.as_ref().map(|s| s.subject.to_lowercase()).unwrap_or_default();
                let items: Vec<Value> = rows(prompt, 'P')
                    .iter()
                    .enumerate()
                    .map(|(i, cols)| {
                        let text = cols[1..].join(" | ").to_lowercase();
                        let relevant = !subject.is_empty() && text.contains(&subject);
                        json!({
                            "index": i + 1,
                            "confidence": if relevant { 0.9 } else { 0.1 },
                            "stance": if relevant { "supports" } else { "neutral" },
                        })
                    })
                    .collect();
                json!({ "items": items })
            }
            prompts::EXTRACT_TRIPLETS => json!({ "triplets": extract(field(prompt, "Passage")) }),
            prompts::VERDICT | prompts::FORCED_VERDICT => match shape.as_ref().map(|s| resolve(s, &facts(prompt))) {
                Some(Resolution::Decided { holds, citations }) => json!({
                    "label": if holds { "Supported" } else { "Refuted" },
                    "justification": if holds {
                        "the cited facts connect the subject to the named entity"
                    } else {
                        "the cited facts lead to a different entity"
                    },
                    "citations": citations,
                }),
                _ => json!({
                    "label": "Refuted",
                    "justification": "no evidence confirms the claim",
                    "citations": [],
                }),
            },
            prompts::REFLECT => json!({ "critiques": [] }),
            prompts::TEXTUAL_GRADIENT => json!({ "revisions": revisions(prompt) }),
            _ => Value::Null,
        }
    }
}

/// `label [id] --> other` → `id`.
fn bracket_id_arrow(segment: &str) -> &str {
    bracket_id(segment.split(" --> ").next().unwrap_or(""))
}

/// Sentence patterns of the fixture biographies.
fn extract(passage: &str) -> Vec<Value> {
    passage
        .split(". ")
        .map(|s| s.trim().trim_end_matches('.'))
        .filter_map(|s| {
            for (pattern, relation) in [
                (" was born in ", "place of birth"),
                (" is a citizen of ", "country of citizenship"),
                (" is a city in ", "country"),
            ] {
                if let Some((subject, object)) = s.split_once(pattern) {
                    return Some(json!({"subject": subject, "relation": relation, "object": object}));
                }
            }
            None
        })
        .collect()
}

/// Drops [`FLAWED_SUFFICIENCY_LINE`] from the sufficiency template when it
/// is among the templates offered for revision.
fn revisions(prompt: &str) -> Vec<Value> {
    let mut out = Vec::new();
    let mut rest = prompt;
    while let Some(start) = rest.find("<<< ") {
        let block = &rest[start + 4..];
        let Some((header, body)) = block.split_once('\n') else {
            break;
        };
        let Some(end) = body.find("\n>>>") else { break };
        let id = header.split(" (version").next().unwrap_or("").trim();
        let text = &body[..end];
        if id == prompts::ASSESS_SUFFICIENCY && text.contains(FLAWED_SUFFICIENCY_LINE) {
            let revised = text
                .replace(&format!("{FLAWED_SUFFICIENCY_LINE}\n"), "")
                .replace(FLAWED_SUFFICIENCY_LINE, "");
            out.push(json!({"template": id, "text": revised}));
        }
        rest = &body[end + 4..];
    }
    out
}

impl LlmBackend for OracleLlm {
    fn complete(&self, prompt: &str, _decoding: &Decoding) -> Result<Completion, LlmError> {
        // repair re-asks carry the original prompt, so the answer is the same
        Ok(Completion::text(Self::answer(prompt).to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_every_claim_form() {
        let s = ClaimShape::parse("Ada Quill was born in a city of Norland.").unwrap();
        assert_eq!(
            (s.subject.as_str(), s.path.as_slice(), s.object.as_str()),
            ("Ada Quill", &["P19", "P17"][..], "Norland")
        );
        assert_eq!(
            ClaimShape::parse("Ada Quill was born in Vell.").unwrap().path,
            vec!["P19"]
        );
        assert_eq!(
            ClaimShape::parse("Ada Quill is a citizen of Norland.").unwrap().path,
            vec!["P27"]
        );
        let c = ClaimShape::parse("The capital of Norland is Vell.").unwrap();
        assert_eq!((c.subject.as_str(), c.object.as_str()), ("Norland", "Vell"));
        assert_eq!(ClaimShape::parse("Water is wet."), None);
    }

    #[test]
    fn resolves_paths_through_listed_facts() {
        let prompt = "## verdict\nClaim: Ada Quill was born in a city of Norland.\nEvidence:\n\
            [t:Q1|P19|Q2] Ada Quill | place of birth | Vell (kg)\n\
            [t:Q2|P17|Q4] Vell | country | Norland (web 0.90)\n[p:0] (supports, 0.90) https://x: y";
        let fs = facts(prompt);
        assert_eq!(fs.len(), 2);
        let shape = ClaimShape::parse(field(prompt, "Claim")).unwrap();
        assert_eq!(
            resolve(&shape, &fs),
            Resolution::Decided {
                holds: true,
                citations: vec!["t:Q1|P19|Q2".into(), "t:Q2|P17|Q4".into()]
            }
        );
        assert_eq!(resolve(&shape, &fs[..1]), Resolution::Open { depth: 1 });
        assert_eq!(resolve(&shape, &[]), Resolution::Open { depth: 0 });
    }

    #[test]
    fn flawed_line_is_obeyed_and_revised_away() {
        let flawed = flawed_policy();
        let text = &flawed.get(prompts::ASSESS_SUFFICIENCY).unwrap().text;
        assert!(text.contains(FLAWED_SUFFICIENCY_LINE));
        let prompt = format!(
            "## textual_gradient\nCritiques:\n- x\nTemplates:\n<<< assess_sufficiency (version 1)\n{text}\n>>>"
        );
        let revs = revisions(&prompt);
        assert_eq!(revs.len(), 1);
        assert_eq!(
            revs[0]["text"],
            prompts::default_policy().get(prompts::ASSESS_SUFFICIENCY).unwrap().text
        );
    }

    #[test]
    fn extracts_biography_sentences() {
        let t = extract("Ada Quill was born in Vell. Ada Quill is a citizen of Norland.");
        assert_eq!(t.len(), 2);
        assert_eq!(t[0]["relation"], "place of birth");
        assert_eq!(t[1]["object"], "Norland");
    }
}
