use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::retrieval::ROWS_PER_DIRECTION;
use super::types::{Direction, Edge, EntityId, KgBackend, KgError, RelationId};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixtureEntity {
    pub id: String,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixtureRelation {
    pub id: String,
    pub label: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub aliases: Vec<String>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
struct FixtureData {
    entities: Vec<FixtureEntity>,
    relations: Vec<FixtureRelation>,
    triples: Vec<[String; 3]>,
    #[serde(default)]
    links: BTreeMap<String, String>,
}

/// In-memory knowledge graph read from the fixture JSON format
/// `{entities, relations, triples, links}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "FixtureData", into = "FixtureData")]
pub struct FixtureGraph {
    data: FixtureData,
    entities: BTreeMap<String, EntityId>,
    relations: BTreeMap<String, RelationId>,
    aliases: BTreeMap<String, Vec<String>>,
    outgoing: BTreeMap<String, Vec<Edge>>,
    incoming: BTreeMap<String, Vec<Edge>>,
}

impl TryFrom<FixtureData> for FixtureGraph {
    type Error = String;

    fn try_from(data: FixtureData) -> Result<Self, String> {
        let entities: BTreeMap<String, EntityId> = data
            .entities
            .iter()
            .map(|e| (e.id.clone(), EntityId::new(e.id.clone(), e.label.clone())))
            .collect();
        let relations: BTreeMap<String, RelationId> = data
            .relations
            .iter()
            .map(|r| (r.id.clone(), RelationId::new(r.id.clone(), r.label.clone())))
            .collect();
        let aliases = data
            .relations
            .iter()
            .filter(|r| !r.aliases.is_empty())
            .map(|r| (r.id.clone(), r.aliases.clone()))
            .collect();
        let mut outgoing: BTreeMap<String, Vec<Edge>> = BTreeMap::new();
        let mut incoming: BTreeMap<String, Vec<Edge>> = BTreeMap::new();
        for [s, p, o] in &data.triples {
            let lookup = |id: &String| {
                entities
                    .get(id)
                    .cloned()
                    .ok_or_else(|| alloc::format!("unknown entity `{id}`"))
            };
            let subject = lookup(s)?;
            let object = lookup(o)?;
            let relation = relations
                .get(p)
                .cloned()
                .ok_or_else(|| alloc::format!("unknown relation `{p}`"))?;
            outgoing.entry(s.clone()).or_default().push(Edge {
                relation: relation.clone(),
                other: object,
            });
            incoming.entry(o.clone()).or_default().push(Edge {
                relation,
                other: subject,
            });
        }
        for edges in outgoing.values_mut().chain(incoming.values_mut()) {
            edges.sort_by(|a, b| (&a.relation.id, &a.other.id).cmp(&(&b.relation.id, &b.other.id)));
            edges.dedup();
        }
        for (surface, id) in &data.links {
            if !entities.contains_key(id) {
                return Err(alloc::format!("link `{surface}` points at unknown entity `{id}`"));
            }
        }
        Ok(Self {
            data,
            entities,
            relations,
            aliases,
            outgoing,
            incoming,
        })
    }
}

impl From<FixtureGraph> for FixtureData {
    fn from(graph: FixtureGraph) -> Self {
        graph.data
    }
}

impl FixtureGraph {
    pub fn builder() -> Self {
        Self::try_from(FixtureData::default()).expect("empty fixture is valid")
    }

    pub fn from_json(json: &str) -> Result<Self, String> {
        serde_json::from_str(json).map_err(|e| e.to_string())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).unwrap_or_default()
    }

    /// Rebuilds the graph with an extra entity; convenient for tests.
    pub fn with_entity(self, id: &str, label: &str) -> Self {
        let mut data = self.data;
        data.entities.push(FixtureEntity {
            id: id.into(),
            label: label.into(),
        });
        Self::try_from(data).expect("valid fixture")
    }

    pub fn with_relation(self, id: &str, label: &str, aliases: &[&str]) -> Self {
        let mut data = self.data;
        data.relations.push(FixtureRelation {
            id: id.into(),
            label: label.into(),
            aliases: aliases.iter().map(|a| a.to_string()).collect(),
        });
        Self::try_from(data).expect("valid fixture")
    }

    pub fn with_triple(self, s: &str, p: &str, o: &str) -> Self {
        let mut data = self.data;
        data.triples.push([s.into(), p.into(), o.into()]);
        Self::try_from(data).expect("valid fixture")
    }

    pub fn with_link(self, surface: &str, id: &str) -> Self {
        let mut data = self.data;
        data.links.insert(surface.into(), id.into());
        Self::try_from(data).expect("valid fixture")
    }

    pub fn entity(&self, id: &str) -> Option<&EntityId> {
        self.entities.get(id)
    }

    pub fn relation(&self, id: &str) -> Option<&RelationId> {
        self.relations.get(id)
    }

    pub fn entities(&self) -> impl Iterator<Item = &EntityId> {
        self.entities.values()
    }

    /// All `(subject, relation, object)` id triples, as loaded.
    pub fn triples(&self) -> &[[String; 3]] {
        &self.data.triples
    }

    pub fn has_triple(&self, s: &str, p: &str, o: &str) -> bool {
        self.outgoing
            .get(s)
            .is_some_and(|edges| edges.iter().any(|e| e.relation.id == p && e.other.id == o))
    }
}

impl KgBackend for FixtureGraph {
    fn search_entities(&self, text: &str, limit: usize) -> Result<Vec<EntityId>, KgError> {
        let text = text.trim();
        if let Some(id) = self.data.links.get(text) {
            return Ok(self.entities.get(id).cloned().into_iter().take(limit).collect());
        }
        let folded = text.to_lowercase();
        let mut hits: Vec<EntityId> = self
            .data
            .links
            .iter()
            .filter(|(surface, _)| surface.to_lowercase() == folded)
            .filter_map(|(_, id)| self.entities.get(id).cloned())
            .collect();
        hits.extend(
            self.entities
                .values()
                .filter(|e| e.label.to_lowercase() == folded)
                .cloned(),
        );
        hits.sort();
        hits.dedup();
        hits.truncate(limit);
        Ok(hits)
    }

    fn edges(&self, entity: &EntityId, direction: Direction) -> Result<Vec<Edge>, KgError> {
        let table = match direction {
            Direction::Outgoing => &self.outgoing,
            Direction::Incoming => &self.incoming,
        };
        Ok(table
            .get(&entity.id)
            .map(|edges| edges.iter().take(ROWS_PER_DIRECTION).cloned().collect())
            .unwrap_or_default())
    }

    fn relation_aliases(&self, relation: &RelationId) -> Vec<String> {
        self.aliases.get(&relation.id).cloned().unwrap_or_default()
    }
}
