//! The public pipeline end to end on a four-entity graph with a scripted
//! model: linking, retrieval, verdict, benchmark and trajectory JSON.

use claimcheck_core::agent::ActionKind;
use claimcheck_core::eval::{load_dataset, run_benchmark, DatasetFormat};
use claimcheck_core::kg::FixtureGraph;
use claimcheck_core::llm::{FnBackend, LlmError};
use claimcheck_core::prompts::{self, default_policy};
use claimcheck_core::web::FixtureSearch;
use claimcheck_core::{run_episode, Environment, EpisodeConfig, Gateway, Label, Trajectory};
use serde_json::json;

const CAPITAL: &str = "t:Q114|P36|Q3870";

fn graph() -> FixtureGraph {
    FixtureGraph::builder()
        .with_entity("Q114", "Kenya")
        .with_entity("Q3870", "Nairobi")
        .with_entity("Q5465", "Mombasa")
        .with_entity("Q15", "Africa")
        .with_relation("P36", "capital", &["capital city"])
        .with_relation("P30", "continent", &[])
        .with_relation("P17", "country", &[])
        .with_triple("Q114", "P36", "Q3870")
        .with_triple("Q114", "P30", "Q15")
        .with_triple("Q5465", "P17", "Q114")
}

fn template(prompt: &str) -> &str {
    prompt.lines().next().unwrap_or("").trim_start_matches("## ").trim()
}

fn listed(prompt: &str, marker: char) -> Vec<&str> {
    prompt
        .lines()
        .filter(|l| l.starts_with(marker) && l[1..].split(' ').next().is_some_and(|n| n.parse::<u32>().is_ok()))
        .collect()
}

/// A careful reader: wants the capital triple before answering and
/// supports the claim only if the triple names the claimed city.
fn reply(prompt: &str) -> Result<String, LlmError> {
    let knows = prompt.contains(&format!("[{CAPITAL}]"));
    let reply = match template(prompt) {
        prompts::ASSESS_SUFFICIENCY if knows => json!({"assessment": "sufficient", "missing": ""}),
        prompts::ASSESS_SUFFICIENCY => json!({"assessment": "need_kg", "missing": "the capital"}),
        prompts::SELECT_ACTION => {
            let action = if prompt.contains("Sufficiency: sufficient") {
                "verdict"
            } else {
                "expandKg"
            };
            json!({"action": action, "reason": "follow the assessment"})
        }
        prompts::PRUNE_FRONTIER => json!({"scores": vec![1.0; listed(prompt, 'E').len()]}),
        prompts::PRUNE_RELATIONS => {
            let scores: Vec<f64> = listed(prompt, 'C')
                .iter()
                .map(|row| if row.contains("[P36]") { 10.0 } else { 1.0 })
                .collect();
            json!({ "scores": scores })
        }
        prompts::VERDICT | prompts::FORCED_VERDICT => {
            let claim = prompt.lines().find_map(|l| l.strip_prefix("Claim: ")).unwrap_or("");
            if knows && claim.contains("Nairobi") {
                json!({"label": "Supported", "justification": "Nairobi is the capital of Kenya.", "citations": [CAPITAL]})
            } else if knows {
                json!({"label": "Refuted", "justification": "The capital of Kenya is Nairobi.", "citations": [CAPITAL]})
            } else {
                json!({"label": "Refuted", "justification": "No evidence.", "citations": []})
            }
        }
        _ => json!({}),
    };
    Ok(reply.to_string())
}

fn check(claim: &str) -> Trajectory {
    let llm = FnBackend::new(reply);
    let graph = graph();
    let web = FixtureSearch::new();
    let mut gateway = Gateway::new(&llm);
    let env = Environment { kg: &graph, web: &web };
    let (verdict, t) = run_episode(claim, &default_policy(), &EpisodeConfig::default(), env, &mut gateway).unwrap();
    assert_eq!(Some(&verdict), t.verdict.as_ref());
    t
}

#[test]
fn true_claim_is_supported_with_a_graph_citation() {
    let t = check("The capital of Kenya is Nairobi.");
    let v = t.verdict.as_ref().unwrap();
    assert_eq!(v.label, Label::Supported);
    assert_eq!(v.citations, vec![CAPITAL.to_string()]);
    assert!(!v.forced);
    assert_eq!(t.steps[0].action.kind, ActionKind::InitKgRetrieval);
    assert!(t.violations().is_empty(), "{:?}", t.violations());
    assert!(t.counters.sparql_queries >= 1);
}

#[test]
fn false_claim_is_refuted_from_the_same_evidence() {
    let t = check("The capital of Kenya is Mombasa.");
    assert_eq!(t.label(), Some(Label::Refuted));
    assert!(t.evidence.references().contains(CAPITAL));
    assert!(t.violations().is_empty(), "{:?}", t.violations());
}

#[test]
fn trajectories_round_trip_through_json() {
    let t = check("The capital of Kenya is Nairobi.");
    let back: Trajectory = serde_json::from_str(&t.to_json()).unwrap();
    assert_eq!(back, t);
    assert_eq!(back.to_json(), t.to_json());
}

#[test]
fn benchmark_over_a_loaded_dataset() {
    let text = [
        json!({"id": "b", "claim": "The capital of Kenya is Mombasa.", "label": "pants-fire"}),
        json!({"id": "a", "claim": "The capital of Kenya is Nairobi.", "label": "TRUE"}),
        json!({"id": "c", "claim": "Nobody knows.", "label": "Not Enough Info"}),
    ]
    .map(|v| v.to_string())
    .join("\n");
    let dataset = load_dataset(&text, &DatasetFormat::default()).unwrap();
    assert_eq!(dataset.dropped, 1);
    assert_eq!(
        dataset.records.iter().map(|r| r.id.as_str()).collect::<Vec<_>>(),
        ["a", "b"]
    );
    let (report, outcomes) = run_benchmark(&dataset.records, |r| Ok(check(&r.claim))).unwrap();
    assert_eq!(report.balanced_accuracy, Some(1.0));
    assert_eq!(report.incorrect, 0);
    assert!(outcomes.iter().all(|o| o.predicted == Some(o.gold)));
}
