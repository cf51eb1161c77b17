use std::path::PathBuf;
use std::time::Duration;

use claimcheck_core::kg::{Direction, Edge, EntityId, KgBackend, KgError, RelationId, ROWS_PER_DIRECTION};
use reqwest::blocking::Client;
use serde_json::Value;

use super::cache::ResponseCache;
use super::jittered;
use super::ratelimit::{Throttle, ThrottleConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct WikidataSettings {
    pub sparql_endpoint: String,
    /// MediaWiki action API used for `wbsearchentities`.
    pub search_endpoint: String,
    pub language: String,
    pub timeout: Duration,
    /// Re-sends after a timeout or transport error.
    pub retries: u32,
    pub retry_delay: Duration,
    pub cache_dir: Option<PathBuf>,
    pub throttle: ThrottleConfig,
    pub user_agent: String,
}

impl Default for WikidataSettings {
    fn default() -> Self {
        Self {
            sparql_endpoint: "https://query.wikidata.org/sparql".into(),
            search_endpoint: "https://www.wikidata.org/w/api.php".into(),
            language: "en".into(),
            timeout: Duration::from_secs(10),
            retries: 1,
            retry_delay: Duration::from_millis(500),
            cache_dir: None,
            throttle: ThrottleConfig::default(),
            user_agent: concat!("claimcheck/", env!("CARGO_PKG_VERSION")).into(),
        }
    }
}

fn is_item_id(id: &str) -> bool {
    id.len() > 1 && id.starts_with('Q') && id[1..].bytes().all(|b| b.is_ascii_digit())
}

/// The relation query for one entity and direction: truthy statements
/// only, item-valued ends only, English labels from the label service.
/// `None` for ids that are not Wikidata items (e.g. web-derived entities).
pub fn sparql_query(entity_id: &str, direction: Direction, language: &str) -> Option<String> {
    if !is_item_id(entity_id) {
        return None;
    }
    let pattern = match direction {
        Direction::Outgoing => format!("wd:{entity_id} ?direct ?other ."),
        Direction::Incoming => format!("?other ?direct wd:{entity_id} ."),
    };
    let language: String = language
        .chars()
        .filter(|c| c.is_ascii_alphanumeric() || *c == '-')
        .collect();
    Some(format!(
        "SELECT ?prop ?propLabel ?other ?otherLabel WHERE {{\n  \
         {pattern}\n  \
         ?prop wikibase:directClaim ?direct .\n  \
         FILTER(STRSTARTS(STR(?other), \"http://www.wikidata.org/entity/Q\"))\n  \
         SERVICE wikibase:label {{ bd:serviceParam wikibase:language \"{language}\". }}\n\
         }}\nLIMIT {ROWS_PER_DIRECTION}"
    ))
}

fn local_name(uri: &str) -> &str {
    uri.rsplit('/').next().unwrap_or(uri)
}

/// Rows of a SPARQL JSON result produced by [`sparql_query`].
pub fn parse_edges(body: &Value) -> Result<Vec<Edge>, KgError> {
    let rows = body["results"]["bindings"]
        .as_array()
        .ok_or_else(|| KgError::Transport("SPARQL result has no results.bindings".into()))?;
    let mut edges = Vec::with_capacity(rows.len());
    for row in rows {
        let (Some(prop), Some(other)) = (row["prop"]["value"].as_str(), row["other"]["value"].as_str()) else {
            continue;
        };
        let (prop, other) = (local_name(prop), local_name(other));
        let label = |key: &str, fallback: &str| row[key]["value"].as_str().unwrap_or(fallback).to_string();
        edges.push(Edge {
            relation: RelationId::new(prop, label("propLabel", prop)),
            other: EntityId::new(other, label("otherLabel", other)),
        });
    }
    Ok(edges)
}

/// Hits of a `wbsearchentities` response, in API order.
pub fn parse_search(body: &Value) -> Result<Vec<EntityId>, KgError> {
    let hits = body["search"]
        .as_array()
        .ok_or_else(|| KgError::Transport("entity search response has no `search` array".into()))?;
    Ok(hits
        .iter()
        .filter_map(|h| {
            let id = h["id"].as_str()?;
            let label = h["label"]
                .as_str()
                .or_else(|| h["display"]["label"]["value"].as_str())
                .unwrap_or(id);
            Some(EntityId::new(id, label))
        })
        .collect())
}

/// Wikidata over HTTP with an optional on-disk response cache.
pub struct WikidataBackend {
    settings: WikidataSettings,
    client: Client,
    cache: Option<ResponseCache>,
    throttle: Throttle,
}

impl WikidataBackend {
    pub fn new(settings: WikidataSettings) -> Result<Self, KgError> {
        let client = Client::builder()
            .timeout(settings.timeout)
            .user_agent(settings.user_agent.clone())
            .build()
            .map_err(|e| KgError::Transport(e.to_string()))?;
        let cache = settings
            .cache_dir
            .as_ref()
            .map(ResponseCache::new)
            .transpose()
            .map_err(|e| KgError::Transport(format!("cache directory: {e}")))?;
        Ok(Self {
            throttle: Throttle::new(settings.throttle),
            settings,
            client,
            cache,
        })
    }

    fn fetch(&self, key: &str, request: impl Fn() -> reqwest::blocking::RequestBuilder) -> Result<Value, KgError> {
        if let Some(body) = self.cache.as_ref().and_then(|c| c.get(key)) {
            if let Ok(value) = serde_json::from_str(&body) {
                return Ok(value);
            }
        }
        let mut attempt = 0;
        let body = loop {
            let result = {
                let _permit = self.throttle.acquire();
                request()
                    .send()
                    .and_then(|r| r.error_for_status())
                    .and_then(|r| r.text())
            };
            match result {
                Ok(body) => break body,
                Err(e) if attempt < self.settings.retries => {
                    log::warn!("knowledge-graph request failed ({e}); retrying");
                    attempt += 1;
                    std::thread::sleep(jittered(self.settings.retry_delay));
                }
                Err(e) if e.is_timeout() => return Err(KgError::QueryTimeout),
                Err(e) => return Err(KgError::Transport(e.to_string())),
            }
        };
        let value: Value =
            serde_json::from_str(&body).map_err(|e| KgError::Transport(format!("unreadable response: {e}")))?;
        if let Some(cache) = &self.cache {
            if let Err(e) = cache.put(key, &body) {
                log::warn!("could not cache response: {e}");
            }
        }
        Ok(value)
    }
}

impl KgBackend for WikidataBackend {
    fn search_entities(&self, text: &str, limit: usize) -> Result<Vec<EntityId>, KgError> {
        let text = text.trim();
        if text.is_empty() || limit == 0 {
            return Ok(Vec::new());
        }
        let limit = limit.min(50).to_string();
        let params = [
            ("action", "wbsearchentities"),
            ("search", text),
            ("language", self.settings.language.as_str()),
            ("type", "item"),
            ("format", "json"),
            ("limit", limit.as_str()),
        ];
        let key = format!("search\u{1f}{}\u{1f}{:?}", self.settings.search_endpoint, params);
        let body = self.fetch(&key, || self.client.get(&self.settings.search_endpoint).query(&params))?;
        parse_search(&body)
    }

    fn edges(&self, entity: &EntityId, direction: Direction) -> Result<Vec<Edge>, KgError> {
        let Some(query) = sparql_query(&entity.id, direction, &self.settings.language) else {
            return Ok(Vec::new());
        };
        let key = format!("sparql\u{1f}{}\u{1f}{query}", self.settings.sparql_endpoint);
        let body = self.fetch(&key, || {
            self.client
                .get(&self.settings.sparql_endpoint)
                .header("Accept", "application/sparql-results+json")
                .query(&[("query", query.as_str()), ("format", "json")])
        })?;
        parse_edges(&body)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn queries_use_truthy_statements_and_a_limit() {
        let out = sparql_query("Q76", Direction::Outgoing, "en").unwrap();
        assert!(out.contains("wd:Q76 ?direct ?other ."));
        assert!(out.contains("wikibase:directClaim"));
        assert!(out.ends_with("LIMIT 50"));
        let inc = sparql_query("Q76", Direction::Incoming, "en").unwrap();
        assert!(inc.contains("?other ?direct wd:Q76 ."));
    }

    #[test]
    fn non_item_ids_are_never_interpolated() {
        assert_eq!(sparql_query("W:abc", Direction::Outgoing, "en"), None);
        assert_eq!(sparql_query("Q1 } DROP", Direction::Outgoing, "en"), None);
        assert_eq!(sparql_query("Q", Direction::Outgoing, "en"), None);
    }

    #[test]
    fn parses_sparql_rows() {
        let body = json!({"results": {"bindings": [
            {"prop": {"value": "http://www.wikidata.org/entity/P19"}, "propLabel": {"value": "place of birth"},
             "other": {"value": "http://www.wikidata.org/entity/Q18094"}, "otherLabel": {"value": "Honolulu"}},
            {"prop": {"value": "http://www.wikidata.org/entity/P27"},
             "other": {"value": "http://www.wikidata.org/entity/Q30"}}
        ]}});
        let edges = parse_edges(&body).unwrap();
        assert_eq!(edges.len(), 2);
        assert_eq!(edges[0].relation.label, "place of birth");
        assert_eq!(edges[0].other.id, "Q18094");
        assert_eq!(edges[1].relation.label, "P27");
        assert!(parse_edges(&json!({})).is_err());
    }

    #[test]
    fn parses_search_hits() {
        let body = json!({"search": [
            {"id": "Q76", "label": "Barack Obama"},
            {"id": "Q649593", "display": {"label": {"value": "Obama", "language": "en"}}}
        ]});
        let hits = parse_search(&body).unwrap();
        assert_eq!(hits[0].label, "Barack Obama");
        assert_eq!(hits[1].label, "Obama");
    }
}
