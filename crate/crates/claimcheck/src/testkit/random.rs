//! A model that answers every prompt with seeded noise: random actions,
//! scores of the wrong length, unparseable replies, bogus citations. It
//! exercises every recovery path of the episode loop.

use claimcheck_core::llm::{Completion, Decoding, LlmBackend, LlmError};
use claimcheck_core::prompts;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use super::oracle::{rows, task};

#[derive(Debug, Clone, Copy)]
pub struct RandomLlm {
    pub seed: u64,
    /// Probability of a reply that is not JSON at all.
    pub garbage_rate: f64,
}

impl RandomLlm {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            garbage_rate: 0.1,
        }
    }

    fn rng(&self, prompt: &str) -> ChaCha8Rng {
        let digest = Sha256::digest(format!("{}\u{1f}{prompt}", self.seed).as_bytes());
        ChaCha8Rng::from_seed(digest.into())
    }
}

fn scores(rng: &mut ChaCha8Rng, n: usize) -> Value {
    // occasionally one short or one long
    let len = match rng.gen_range(0..10) {
        0 => n.saturating_sub(1),
        1 => n + 1,
        _ => n,
    };
    json!({"scores": (0..len).map(|_| rng.gen_range(0..=10)).collect::<Vec<_>>()})
}

impl LlmBackend for RandomLlm {
    fn complete(&self, prompt: &str, _decoding: &Decoding) -> Result<Completion, LlmError> {
        let mut rng = self.rng(prompt);
        if rng.gen_bool(self.garbage_rate) {
            return Ok(Completion::text("I am not sure."));
        }
        let refs: Vec<&str> = prompt
            .lines()
            .filter_map(|l| l.strip_prefix('[').and_then(|r| r.split_once(']')).map(|(r, _)| r))
            .collect();
        let reply = match task(prompt) {
            prompts::SELECT_ACTION => {
                let action = ["initKg", "expandKg", "webSearch", "verdict", "dance"]
                    .choose(&mut rng)
                    .copied();
                json!({"action": action, "reason": "random"})
            }
            prompts::ASSESS_SUFFICIENCY => {
                let a = ["sufficient", "need_kg", "need_web", "maybe"].choose(&mut rng).copied();
                json!({"assessment": a})
            }
            prompts::PRUNE_FRONTIER => scores(&mut rng, rows(prompt, 'E').len()),
            prompts::PRUNE_RELATIONS => scores(&mut rng, rows(prompt, 'C').len()),
            prompts::FORMULATE_QUERY => {
                let q = ["birthplace", "capital city", "", "citizen"].choose(&mut rng).copied();
                json!({"query": q, "rationale": "random"})
            }
            prompts::FILTER_EVIDENCE => {
                let n = rows(prompt, 'P').len();
                let items: Vec<Value> = (0..n + 1)
                    .map(|i| json!({"index": i + 1, "confidence": rng.gen_range(-0.2..1.2), "stance": "supports"}))
                    .collect();
                json!({ "items": items })
            }
            prompts::EXTRACT_TRIPLETS => {
                let words: Vec<&str> = prompt.lines().last().unwrap_or("").split_whitespace().collect();
                let pick = |rng: &mut ChaCha8Rng| words.choose(rng).copied().unwrap_or("thing").to_string();
                let n = rng.gen_range(0..3);
                let triplets: Vec<Value> = (0..n)
                    .map(|_| json!({"subject": pick(&mut rng), "relation": "place of birth", "object": pick(&mut rng)}))
                    .collect();
                json!({ "triplets": triplets })
            }
            _ => {
                let mut citations: Vec<String> = refs
                    .iter()
                    .filter(|_| rng.gen_bool(0.3))
                    .map(|r| r.to_string())
                    .collect();
                if rng.gen_bool(0.3) {
                    citations.push("t:Q0|P0|Q0".into());
                }
                let label = ["Supported", "Refuted", "Mixed"].choose(&mut rng).copied();
                json!({"label": label, "justification": "random", "citations": citations})
            }
        };
        Ok(Completion::text(reply.to_string()))
    }
}
