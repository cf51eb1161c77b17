use alloc::string::String;
use alloc::vec::Vec;

use proptest::prelude::*;

use super::*;
use crate::kg::{EntityId, RelationId};
use crate::web::{Passage, Stance};

fn e(id: &str, label: &str) -> EntityId {
    EntityId::new(id, label)
}

fn evidence(confidences: &[f64]) -> Vec<FilteredEvidence> {
    confidences
        .iter()
        .enumerate()
        .map(|(i, c)| FilteredEvidence {
            passage: Passage {
                text: alloc::format!("passage {i}"),
                source_url: alloc::format!("https://src.example/{i}"),
                index: 0,
                bm25: 1.0,
            },
            consistency_confidence: *c,
            stance: Stance::Supports,
        })
        .collect()
}

fn web(s: EntityId, r: RelationId, o: EntityId, evidence_index: usize) -> WebTriplet {
    let url = alloc::format!("https://src.example/{evidence_index}");
    WebTriplet {
        triplet: Triplet::web(s, r, o, 0.0, url.clone()),
        provenance: url,
        confidence: 0.0,
        schema_aligned: false,
        evidence_index,
    }
}

fn kenya() -> KnowledgeSubgraph {
    let mut g = KnowledgeSubgraph::new();
    let kenya = e("Q114", "Kenya");
    g.add_topic(&kenya);
    g.insert(Triplet::kg(
        kenya.clone(),
        RelationId::new("P36", "capital"),
        e("Q3870", "Nairobi"),
    ));
    g.insert(Triplet::kg(
        kenya,
        RelationId::new("P30", "continent"),
        e("Q15", "Africa"),
    ));
    g
}

#[test]
fn web_entity_ids_are_frozen() {
    // Expected digests computed outside the crate with a stock SHA-256 tool.
    assert_eq!(web_entity_id("Nairobi"), "W:a5c49775b0a6");
    assert_eq!(web_entity_id("  ADA   Quill "), "W:6851b62c6478");
    assert_eq!(web_entity_id("port vell"), "W:d8ce046fcf54");
}

#[test]
fn existing_kg_fact_is_skipped() {
    let g = kenya();
    let w = web(
        e("Q114", "Kenya"),
        RelationId::new("P36", "capital"),
        e("Q3870", "Nairobi"),
        0,
    );
    let (out, report) = integrate(&g, &[w], &evidence(&[0.8]));
    assert_eq!(out, g);
    assert_eq!(report.dispositions, [Disposition::Skipped]);
}

#[test]
fn matching_relation_is_schema_aligned() {
    let g = kenya();
    let nairobi = e(&web_entity_id("Nairobi"), "Nairobi");
    let by_id = web(
        e("Q114", "Kenya"),
        RelationId::new("P36", "capital"),
        nairobi.clone(),
        0,
    );
    let (out, report) = integrate(&g, &[by_id], &evidence(&[0.7]));
    assert_eq!(report.dispositions, [Disposition::Aligned]);
    assert_eq!(out.triplet_count(), 3);
    let added = out.get(&crate::kg::TripletKey {
        subject: "Q114".into(),
        relation: "P36".into(),
        object: "W:a5c49775b0a6".into(),
    });
    let added = added.unwrap();
    assert_eq!(added.origin, Origin::Web);
    assert_eq!(added.confidence, 0.7);

    let by_label = web(
        e("Q114", "Kenya"),
        RelationId::new("W:capital", " Capital "),
        nairobi,
        0,
    );
    let (out, report) = integrate(&g, &[by_label], &evidence(&[0.7]));
    assert_eq!(report.dispositions, [Disposition::Aligned]);
    assert!(out
        .triplets()
        .any(|t| t.relation.id == "P36" && t.object.id == "W:a5c49775b0a6"));
}

#[test]
fn unmatched_relation_on_known_entity_becomes_annotation() {
    let g = kenya();
    let w = web(
        e("Q114", "Kenya"),
        RelationId::new("W:national_anthem", "national anthem"),
        e("W:x", "Ee Mungu Nguvu Yetu"),
        0,
    );
    let (out, report) = integrate(&g, &[w], &evidence(&[0.66]));
    assert_eq!(report.dispositions, [Disposition::Annotated]);
    assert_eq!(out.triplet_count(), g.triplet_count());
    assert_eq!(
        out.annotations()["Q114"],
        ["Kenya national anthem Ee Mungu Nguvu Yetu (web, confidence 0.66, https://src.example/0)"]
    );
}

#[test]
fn fact_about_new_entities_is_added_with_evidence_confidence() {
    let g = kenya();
    let w = web(
        e("W:a", "Lake Turkana"),
        RelationId::new("W:located_in", "located in"),
        e("W:b", "Rift Valley"),
        1,
    );
    let (out, report) = integrate(&g, &[w], &evidence(&[0.9, 0.55]));
    assert_eq!(report.dispositions, [Disposition::Added]);
    let t = out.triplets().find(|t| t.subject.id == "W:a").unwrap();
    assert_eq!(t.confidence, 0.55);
    assert_eq!(t.source.as_deref(), Some("https://src.example/1"));
}

// Small id pools force collisions between graph and web facts.
fn entity() -> impl Strategy<Value = EntityId> {
    prop_oneof![
        (0u8..6).prop_map(|i| e(&alloc::format!("Q{i}"), &alloc::format!("entity {i}"))),
        (0u8..4).prop_map(|i| e(&alloc::format!("W:{i}"), &alloc::format!("web {i}"))),
    ]
}

fn relation() -> impl Strategy<Value = RelationId> {
    prop_oneof![
        (0u8..3).prop_map(|i| RelationId::new(alloc::format!("P{i}"), alloc::format!("rel {i}"))),
        (0u8..3).prop_map(|i| RelationId::new(alloc::format!("W:r{i}"), alloc::format!("REL  {i}"))),
        (0u8..3).prop_map(|i| RelationId::new(alloc::format!("W:x{i}"), alloc::format!("other {i}"))),
    ]
}

fn graph() -> impl Strategy<Value = KnowledgeSubgraph> {
    (
        prop::collection::vec(entity(), 1..3),
        prop::collection::vec((entity(), relation(), entity()), 0..8),
    )
        .prop_map(|(topics, facts)| {
            let mut g = KnowledgeSubgraph::new();
            for t in &topics {
                g.add_topic(t);
            }
            for (s, r, o) in facts {
                if r.id.starts_with('P') {
                    g.insert(Triplet::kg(s, r, o));
                }
            }
            g
        })
}

fn web_batch() -> impl Strategy<Value = (Vec<WebTriplet>, Vec<FilteredEvidence>)> {
    (
        prop::collection::vec((entity(), relation(), entity(), 0usize..3), 0..10),
        prop::collection::vec(0.0f64..=1.0, 3),
    )
        .prop_map(|(facts, confs)| {
            let ws = facts.into_iter().map(|(s, r, o, i)| web(s, r, o, i)).collect();
            (ws, evidence(&confs))
        })
}

fn kg_facts(g: &KnowledgeSubgraph) -> Vec<String> {
    let mut v: Vec<String> = g
        .triplets()
        .filter(|t| t.origin == Origin::Kg)
        .map(|t| {
            alloc::format!(
                "{}|{}|{}|{}",
                t.reference(),
                t.subject.label,
                t.relation.label,
                t.object.label
            )
        })
        .collect();
    v.sort();
    v
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn fusion_laws(g in graph(), (ws, ev) in web_batch()) {
        let (once, _) = integrate(&g, &ws, &ev);
        let (twice, second) = integrate(&once, &ws, &ev);
        prop_assert_eq!(&twice, &once);
        prop_assert!(second.dispositions.iter().all(|d| *d == Disposition::Skipped));
        prop_assert_eq!(kg_facts(&once), kg_facts(&g));
        let refs: Vec<String> = once.triplets().map(Triplet::reference).collect();
        let unique: alloc::collections::BTreeSet<&String> = refs.iter().collect();
        prop_assert_eq!(unique.len(), refs.len());
        for t in once.triplets().filter(|t| t.origin == Origin::Web) {
            let src = t.source.as_deref().unwrap();
            let idx: usize = src.rsplit('/').next().unwrap().parse().unwrap();
            prop_assert_eq!(t.confidence, ev[idx].consistency_confidence);
        }
    }
}
