use super::*;
use crate::kg::{FixtureGraph, RelationId};
use crate::llm::{FnBackend, LlmError};
use crate::prompts::default_policy;
use crate::testutil::{overlap_scores, rows, task};
use alloc::vec;

fn obama() -> FixtureGraph {
    FixtureGraph::builder()
        .with_entity("Q76", "Barack Obama")
        .with_entity("Q18094", "Honolulu")
        .with_entity("Q30", "United States")
        .with_entity("Q114", "Kenya")
        .with_entity("Q3870", "Nairobi")
        .with_relation("P19", "place of birth", &[])
        .with_relation("P27", "country of citizenship", &[])
        .with_relation("P36", "capital", &[])
        .with_triple("Q76", "P19", "Q18094")
        .with_triple("Q76", "P27", "Q30")
        .with_triple("Q114", "P36", "Q3870")
}

fn overlap_backend() -> FnBackend<impl Fn(&str) -> Result<String, LlmError>> {
    FnBackend::new(|p: &str| Ok(overlap_scores(p)))
}

fn ctx<'a>(backend: &'a FixtureGraph, policy: &'a PromptPolicy, k: u32, n_hops: u32, n_init: u32) -> KgContext<'a> {
    KgContext {
        backend,
        policy,
        config: KgConfig {
            k,
            n_hops,
            n_init,
            objects_per_relation: OBJECTS_PER_RELATION,
        },
    }
}

fn cand(rel: &str, anchor: &str, dir: Direction) -> RelationCandidate {
    RelationCandidate {
        relation: RelationId::new(rel, rel),
        direction: dir,
        anchor: EntityId::new(anchor, anchor),
        score: 0.0,
        sample_objects: Vec::new(),
    }
}

/// Independent oracle: repeated selection of the best remaining candidate,
/// comparing `(-score, relation, anchor, direction)` tuples.
fn selection_oracle(mut pool: Vec<RelationCandidate>, k: usize) -> Vec<RelationCandidate> {
    let mut out = Vec::new();
    while out.len() < k && !pool.is_empty() {
        let mut best = 0;
        for i in 1..pool.len() {
            let a = &pool[i];
            let b = &pool[best];
            let better = a.score > b.score
                || (a.score == b.score
                    && (a.relation.id.as_str(), a.anchor.id.as_str(), a.direction)
                        < (b.relation.id.as_str(), b.anchor.id.as_str(), b.direction));
            if better {
                best = i;
            }
        }
        out.push(pool.remove(best));
    }
    out
}

#[test]
fn fetch_enumerates_outgoing_adjacency() {
    let g = obama();
    let got = fetch_relations(&g, &EntityId::new("Q76", ""), Direction::Outgoing, 10, &BTreeSet::new()).unwrap();
    let ids: Vec<_> = got
        .iter()
        .map(|c| (c.relation.id.as_str(), c.sample_objects[0].id.as_str()))
        .collect();
    assert_eq!(ids, [("P19", "Q18094"), ("P27", "Q30")]);
    assert!(got.iter().all(|c| c.direction == Direction::Outgoing));
}

#[test]
fn isolated_entity_has_no_candidates() {
    let g = obama().with_entity("Q1", "Lonely");
    let mut budget = RetrievalBudget::new(4, 4);
    let got = fetch_neighborhood(&g, &EntityId::new("Q1", ""), &mut budget, 10, &BTreeSet::new()).unwrap();
    assert!(got.is_empty());
    assert_eq!(budget.sparql_queries_used, 1);
}

#[test]
fn objects_prefer_claim_tokens_then_ids() {
    let objs = vec![
        EntityId::new("Q3", "Alpha"),
        EntityId::new("Q1", "Gamma"),
        EntityId::new("Q2", "Beta Kenya"),
    ];
    let tokens = token_set("about kenya");
    let picked: Vec<_> = select_objects(objs, &tokens, 2).into_iter().map(|e| e.id).collect();
    assert_eq!(picked, ["Q2", "Q1"]);
}

#[test]
fn prune_six_candidates_matches_oracle() {
    let scores = "{\"scores\": [5,4,4,3,2,1]}";
    let backend = FnBackend::new(move |_: &str| Ok(scores.into()));
    let mut gw = Gateway::new(&backend);
    let policy = default_policy();
    let cands = vec![
        cand("P50", "Q1", Direction::Outgoing),
        cand("P9", "Q1", Direction::Outgoing),
        cand("P2", "Q1", Direction::Incoming),
        cand("P7", "Q1", Direction::Outgoing),
        cand("P1", "Q1", Direction::Outgoing),
        cand("P3", "Q1", Direction::Outgoing),
    ];
    let pruned = prune_relations("claim", cands.clone(), 4, &policy, &mut gw).unwrap();
    let ids: Vec<_> = pruned.iter().map(|c| c.relation.id.as_str()).collect();
    assert_eq!(ids, ["P50", "P2", "P9", "P7"]);
    assert_eq!(gw.meter().total, 1);

    let scored: Vec<_> = cands
        .into_iter()
        .zip([5.0, 4.0, 4.0, 3.0, 2.0, 1.0])
        .map(|(c, score)| RelationCandidate { score, ..c })
        .collect();
    assert_eq!(pruned, selection_oracle(scored, 4));
}

#[test]
fn under_full_beam_and_degenerate_beam() {
    let backend = FnBackend::new(|_: &str| Ok("{\"scores\": [1, 3]}".into()));
    let policy = default_policy();
    let cands = vec![
        cand("P1", "Q1", Direction::Outgoing),
        cand("P2", "Q1", Direction::Outgoing),
    ];
    let mut gw = Gateway::new(&backend);
    let both = prune_relations("c", cands.clone(), 4, &policy, &mut gw).unwrap();
    assert_eq!(
        both.iter().map(|c| c.relation.id.as_str()).collect::<Vec<_>>(),
        ["P2", "P1"]
    );
    let one = prune_relations("c", cands, 1, &policy, &mut gw).unwrap();
    assert_eq!(one.len(), 1);
    assert_eq!(one[0].relation.id, "P2");
    assert!(matches!(
        prune_relations("c", Vec::new(), 4, &policy, &mut gw),
        Err(KgError::NoCandidates)
    ));
}

#[test]
fn short_score_lists_are_padded_with_warning() {
    let backend = FnBackend::new(|_: &str| Ok("{\"scores\": [1]}".into()));
    let policy = default_policy();
    let mut gw = Gateway::new(&backend);
    let cands = vec![
        cand("P2", "Q1", Direction::Outgoing),
        cand("P1", "Q1", Direction::Outgoing),
    ];
    let got = prune_relations("c", cands, 2, &policy, &mut gw).unwrap();
    assert_eq!(got[0].relation.id, "P2");
    assert_eq!(gw.warnings().len(), 1);
}

fn star(n: usize) -> FixtureGraph {
    let mut g = FixtureGraph::builder()
        .with_entity("Q0", "Hub")
        .with_link("Hub Town", "Q0");
    for i in 1..=n {
        let id = alloc::format!("Q{i}");
        let rel = alloc::format!("P{i}");
        g = g
            .with_entity(&id, &alloc::format!("Spoke {i}"))
            .with_relation(&rel, &alloc::format!("link {i}"), &[])
            .with_triple("Q0", &rel, &id);
    }
    g
}

#[test]
fn expand_hop_requires_a_frontier() {
    let g = star(3);
    let policy = default_policy();
    let backend = overlap_backend();
    let mut gw = Gateway::new(&backend);
    let c = ctx(&g, &policy, 4, 4, 1);
    let mut state = KgState::new(&c.config);
    assert_eq!(expand_hop(&mut state, "x", &c, &mut gw), Err(KgError::EmptyFrontier));
}

#[test]
fn star_graph_adds_every_neighbor_when_beam_covers_degree() {
    let g = star(3);
    let policy = default_policy();
    let backend = overlap_backend();
    let mut gw = Gateway::new(&backend);
    let c = ctx(&g, &policy, 4, 4, 1);
    let (state, outcome) = init_kg_retrieval("We visited Hub Town today", &c, &mut gw).unwrap();
    let neighbors: Vec<_> = outcome.new_frontier.iter().map(|e| e.id.as_str()).collect();
    assert_eq!(neighbors, ["Q1", "Q2", "Q3"]);
    assert_eq!(state.subgraph.triplet_count(), 3);
    for id in ["Q1", "Q2", "Q3"] {
        assert_eq!(state.subgraph.hop_of(id), Some(1));
    }
    assert_eq!(state.budget.sparql_queries_used, 1);
    assert_eq!(gw.meter().total, 1);
}

#[test]
fn visited_entities_cost_no_queries() {
    let g = star(2);
    let policy = default_policy();
    let backend = overlap_backend();
    let mut gw = Gateway::new(&backend);
    let c = ctx(&g, &policy, 4, 4, 1);
    let (mut state, _) = init_kg_retrieval("We visited Hub Town today", &c, &mut gw).unwrap();
    state.frontier = vec![EntityId::new("Q0", "Hub")];
    let before = (
        state.budget.sparql_queries_used,
        gw.meter().total,
        state.subgraph.clone(),
    );
    let outcome = expand_hop(&mut state, "We visited Hub Town today", &c, &mut gw).unwrap();
    assert!(outcome.added.is_empty());
    assert_eq!(
        (
            state.budget.sparql_queries_used,
            gw.meter().total,
            state.subgraph.clone()
        ),
        before
    );
}

#[test]
fn init_with_two_topic_entities_respects_bounds() {
    let g = obama().with_link("Obama", "Q76");
    let policy = default_policy();
    let backend = overlap_backend();
    let mut gw = Gateway::new(&backend);
    let c = ctx(&g, &policy, 4, 4, 1);
    let (state, _) = init_kg_retrieval("Barack Obama was born in Kenya.", &c, &mut gw).unwrap();
    let topics: Vec<_> = state.subgraph.topic_entities().collect();
    assert_eq!(topics, ["Q114", "Q76"]);
    assert!(state.subgraph.max_hop().unwrap() <= 1);
    let relations: BTreeSet<_> = state
        .subgraph
        .triplets()
        .map(|t| (t.relation.id.clone(), t.subject.id.clone(), t.object.id.clone()))
        .collect();
    assert!(relations.len() <= 2 * 4);
    assert_eq!(state.subgraph.triplet_count(), 3);
    assert_eq!(state.budget.sparql_queries_used, 2);
    assert_eq!(state.mentions.len(), 2);
}

#[test]
fn unlinkable_claim_gives_empty_subgraph() {
    let g = obama();
    let policy = default_policy();
    let backend = overlap_backend();
    let mut gw = Gateway::new(&backend);
    let c = ctx(&g, &policy, 4, 4, 1);
    let (state, outcome) = init_kg_retrieval("the word zzqx means Zzqx Qqz", &c, &mut gw).unwrap();
    assert!(state.subgraph.is_empty());
    assert!(outcome.added.is_empty());
    assert_eq!(gw.meter().total, 0);
    assert_eq!(init_kg_retrieval("  ", &c, &mut gw).unwrap_err(), KgError::EmptyClaim);

    let mut mentions = extract_mentions("we saw Zzqx Qqz").unwrap();
    assert_eq!(link_entities(&mut mentions, &g), Err(KgError::AllMentionsUnlinkable));
}

#[test]
fn duplicate_links_are_collapsed() {
    let g = obama().with_link("Obama", "Q76").with_link("Barack", "Q76");
    let mut mentions = extract_mentions("we know Obama and \"Barack\" well").unwrap();
    assert_eq!(mentions.len(), 2);
    let linked = link_entities(&mut mentions, &g).unwrap();
    assert_eq!(linked.iter().map(|e| e.id.as_str()).collect::<Vec<_>>(), ["Q76"]);
}

fn chain(len: usize) -> FixtureGraph {
    let mut g = FixtureGraph::builder().with_relation("P1", "next", &[]);
    for i in 0..len {
        g = g.with_entity(&alloc::format!("Q{i}"), &alloc::format!("Node {i}"));
    }
    for i in 0..len - 1 {
        g = g.with_triple(&alloc::format!("Q{i}"), "P1", &alloc::format!("Q{}", i + 1));
    }
    g.with_link("Node Zero", "Q0")
}

/// Undirected BFS distances from the topic entities over the final subgraph.
fn bfs(sub: &KnowledgeSubgraph) -> BTreeMap<String, u32> {
    let mut dist: BTreeMap<String, u32> = sub.topic_entities().map(|t| (t.into(), 0)).collect();
    let mut layer: Vec<String> = dist.keys().cloned().collect();
    let mut d = 0;
    while !layer.is_empty() {
        d += 1;
        let mut next = Vec::new();
        for t in sub.triplets() {
            for (a, b) in [(&t.subject.id, &t.object.id), (&t.object.id, &t.subject.id)] {
                if layer.contains(a) && !dist.contains_key(b) {
                    dist.insert(b.clone(), d);
                    next.push(b.clone());
                }
            }
        }
        layer = next;
    }
    dist
}

#[test]
fn chain_end_is_reached_at_hop_four() {
    let g = chain(5);
    let policy = default_policy();
    let backend = overlap_backend();
    let mut gw = Gateway::new(&backend);
    let c = ctx(&g, &policy, 4, 4, 4);
    let (state, _) = init_kg_retrieval("we start at Node Zero here", &c, &mut gw).unwrap();
    assert_eq!(bfs(&state.subgraph)["Q4"], 4);
    assert_eq!(state.subgraph.hop_of("Q4"), Some(4));
    assert_eq!(state.budget.hops_used, 4);
}

#[test]
fn expand_kg_hop_arithmetic_fixed_point_and_exhaustion() {
    let g = chain(4);
    let policy = default_policy();
    let backend = overlap_backend();
    let mut gw = Gateway::new(&backend);
    let c = ctx(&g, &policy, 4, 4, 1);
    let claim = "we start at Node Zero here";
    let (mut state, _) = init_kg_retrieval(claim, &c, &mut gw).unwrap();
    assert_eq!(state.subgraph.max_hop(), Some(1));
    expand_kg(&mut state, claim, &c, &mut gw).unwrap();
    assert_eq!(state.subgraph.max_hop(), Some(2));
    expand_kg(&mut state, claim, &c, &mut gw).unwrap();
    assert_eq!(state.subgraph.max_hop(), Some(3));
    // Q3 is a dead end: its only edge leads back to a visited entity.
    let before = state.subgraph.clone();
    let out = expand_kg(&mut state, claim, &c, &mut gw).unwrap();
    assert!(out.added.is_empty());
    assert_eq!(state.subgraph, before);
    assert_eq!(
        expand_kg(&mut state, claim, &c, &mut gw),
        Err(KgError::BudgetExhausted(4))
    );
}

#[test]
fn wide_frontier_is_pruned_to_beam() {
    let g = star(7).with_link("Alpha Site", "Q1").with_link("Beta Site", "Q2");
    let policy = default_policy();
    let seen = core::cell::RefCell::new(Vec::new());
    let backend = FnBackend::new(|p: &str| {
        seen.borrow_mut().push((String::from(task(p)), rows(p, 'E').len()));
        Ok(overlap_scores(p))
    });
    let mut gw = Gateway::new(&backend);
    let c = ctx(&g, &policy, 2, 4, 1);
    let claim = "we saw Hub Town, Alpha Site, Beta Site";
    let (state, out) = init_kg_retrieval(claim, &c, &mut gw).unwrap();
    assert_eq!(state.subgraph.topic_entities().count(), 3);
    assert_eq!(out.expanded.len(), 2);
    assert_eq!(state.budget.sparql_queries_used, 2);
    assert_eq!(state.budget.llm_calls_used, 3);
    let frontier_calls: Vec<_> = seen
        .borrow()
        .iter()
        .filter(|(t, _)| t == crate::prompts::PRUNE_FRONTIER)
        .map(|(_, n)| *n)
        .collect();
    assert_eq!(frontier_calls, [3]);
}

#[test]
fn hop_values_have_a_witness_one_layer_up() {
    let g = star(5).with_link("Alpha Site", "Q1");
    let policy = default_policy();
    let backend = overlap_backend();
    let mut gw = Gateway::new(&backend);
    let c = ctx(&g, &policy, 2, 4, 3);
    let (state, _) = init_kg_retrieval("we saw Alpha Site today", &c, &mut gw).unwrap();
    let dist = bfs(&state.subgraph);
    for (id, &hop) in state.subgraph.hops() {
        assert!(hop >= dist[id], "{id}: hop {hop} below BFS distance {}", dist[id]);
        if hop > 0 {
            let witness = state.subgraph.triplets().any(|t| {
                let other = if &t.subject.id == id {
                    &t.object.id
                } else if &t.object.id == id {
                    &t.subject.id
                } else {
                    return false;
                };
                state.subgraph.hop_of(other) == Some(hop - 1)
            });
            assert!(witness, "{id} has no neighbour at hop {}", hop - 1);
        }
    }
}
