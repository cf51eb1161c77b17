use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::types::{EntityId, Origin, RelationId, Triplet};
use crate::text::normalize_label;

/// Identity of a triplet: subject, relation and object ids.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TripletKey {
    pub subject: String,
    pub relation: String,
    pub object: String,
}

impl TripletKey {
    pub fn of(t: &Triplet) -> Self {
        Self {
            subject: t.subject.id.clone(),
            relation: t.relation.id.clone(),
            object: t.object.id.clone(),
        }
    }
}

/// The evidence graph accumulated during an episode.
///
/// Serializes with sorted keys everywhere so equal subgraphs produce
/// byte-identical JSON.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct KnowledgeSubgraph {
    #[serde(serialize_with = "ser_triplets", deserialize_with = "de_triplets")]
    triplets: BTreeMap<TripletKey, Triplet>,
    topic_entities: BTreeSet<String>,
    hop_of: BTreeMap<String, u32>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    annotations: BTreeMap<String, Vec<String>>,
    labels: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    relation_aliases: BTreeMap<String, BTreeSet<String>>,
}

fn ser_triplets<S: Serializer>(map: &BTreeMap<TripletKey, Triplet>, s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(map.values())
}

fn de_triplets<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<TripletKey, Triplet>, D::Error> {
    let list: Vec<Triplet> = Vec::deserialize(d)?;
    Ok(list.into_iter().map(|t| (t.key(), t)).collect())
}

impl KnowledgeSubgraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.triplets.is_empty() && self.topic_entities.is_empty() && self.annotations.is_empty()
    }

    pub fn triplet_count(&self) -> usize {
        self.triplets.len()
    }

    pub fn annotation_count(&self) -> usize {
        self.annotations.values().map(Vec::len).sum()
    }

    pub fn triplets(&self) -> impl Iterator<Item = &Triplet> {
        self.triplets.values()
    }

    pub fn get(&self, key: &TripletKey) -> Option<&Triplet> {
        self.triplets.get(key)
    }

    pub fn contains(&self, key: &TripletKey) -> bool {
        self.triplets.contains_key(key)
    }

    pub fn topic_entities(&self) -> impl Iterator<Item = &str> {
        self.topic_entities.iter().map(String::as_str)
    }

    pub fn is_topic(&self, id: &str) -> bool {
        self.topic_entities.contains(id)
    }

    pub fn hop_of(&self, id: &str) -> Option<u32> {
        self.hop_of.get(id).copied()
    }

    pub fn hops(&self) -> &BTreeMap<String, u32> {
        &self.hop_of
    }

    pub fn max_hop(&self) -> Option<u32> {
        self.hop_of.values().copied().max()
    }

    pub fn contains_entity(&self, id: &str) -> bool {
        self.hop_of.contains_key(id)
    }

    pub fn label_of(&self, id: &str) -> Option<&str> {
        self.labels.get(id).map(String::as_str)
    }

    pub fn entity(&self, id: &str) -> Option<EntityId> {
        self.labels.get(id).map(|label| EntityId::new(id, label.clone()))
    }

    pub fn annotations(&self) -> &BTreeMap<String, Vec<String>> {
        &self.annotations
    }

    /// Adds a hop-0 seed entity.
    pub fn add_topic(&mut self, entity: &EntityId) {
        self.topic_entities.insert(entity.id.clone());
        self.hop_of.insert(entity.id.clone(), 0);
        self.labels
            .entry(entity.id.clone())
            .or_insert_with(|| entity.label.clone());
    }

    /// Inserts a triplet unless one with the same identity exists. Endpoints
    /// without a hop get `hop(anchor) + 1`, where the anchor is whichever
    /// endpoint already has a hop (the subject when both do not).
    /// Returns whether the triplet was new.
    pub fn insert(&mut self, triplet: Triplet) -> bool {
        let key = triplet.key();
        if self.triplets.contains_key(&key) {
            return false;
        }
        let s_hop = self.hop_of.get(&triplet.subject.id).copied();
        let o_hop = self.hop_of.get(&triplet.object.id).copied();
        match (s_hop, o_hop) {
            (Some(_), Some(_)) => {}
            (Some(h), None) => {
                self.hop_of.insert(triplet.object.id.clone(), h + 1);
            }
            (None, Some(h)) => {
                self.hop_of.insert(triplet.subject.id.clone(), h + 1);
            }
            (None, None) => {
                // Disconnected fact (web-only); place it one layer past the
                // current graph.
                let h = self.max_hop().map_or(1, |m| m + 1);
                self.hop_of.insert(triplet.subject.id.clone(), h);
                self.hop_of.insert(triplet.object.id.clone(), h + 1);
            }
        }
        for e in [&triplet.subject, &triplet.object] {
            self.labels.entry(e.id.clone()).or_insert_with(|| e.label.clone());
        }
        self.triplets.insert(key, triplet);
        true
    }

    /// Appends a textual annotation to a known entity. Duplicates are
    /// ignored. Returns whether anything was added.
    pub fn annotate(&mut self, entity_id: &str, text: String) -> bool {
        if !self.contains_entity(entity_id) {
            return false;
        }
        let notes = self.annotations.entry(String::from(entity_id)).or_default();
        if notes.contains(&text) {
            return false;
        }
        notes.push(text);
        true
    }

    pub fn add_relation_aliases(&mut self, relation_id: &str, aliases: impl IntoIterator<Item = String>) {
        let set = self.relation_aliases.entry(String::from(relation_id)).or_default();
        set.extend(aliases.into_iter().map(|a| normalize_label(&a)));
    }

    /// Looks up a KG relation by normalized label or alias.
    pub fn kg_relation_by_label(&self, label: &str) -> Option<RelationId> {
        let wanted = normalize_label(label);
        if wanted.is_empty() {
            return None;
        }
        let mut kg_relations: BTreeMap<&str, &RelationId> = BTreeMap::new();
        for t in self.triplets.values().filter(|t| t.origin == Origin::Kg) {
            kg_relations.insert(t.relation.id.as_str(), &t.relation);
        }
        kg_relations.into_values().find_map(|r| {
            let alias_hit = self
                .relation_aliases
                .get(&r.id)
                .is_some_and(|aliases| aliases.contains(&wanted));
            (normalize_label(&r.label) == wanted || alias_hit).then(|| r.clone())
        })
    }

    /// Reference strings for every citable item currently in the graph.
    pub fn references(&self) -> BTreeSet<String> {
        let mut refs: BTreeSet<String> = self.triplets.values().map(Triplet::reference).collect();
        for (entity, notes) in &self.annotations {
            for i in 0..notes.len() {
                refs.insert(alloc::format!("a:{entity}#{i}"));
            }
        }
        refs
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).unwrap_or_default()
    }

    /// Short content hash used as a snapshot reference in trajectories.
    pub fn digest(&self) -> String {
        let mut d = crate::text::sha256_hex(self.to_json().as_bytes());
        d.truncate(16);
        d
    }
}
