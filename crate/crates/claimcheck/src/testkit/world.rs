//! A small generated world of people, cities and countries, its knowledge
//! graph, canned web results and claim suites with known labels.

use std::collections::BTreeSet;

use claimcheck_core::eval::DatasetRecord;
use claimcheck_core::kg::FixtureGraph;
use claimcheck_core::optimize::LabeledClaim;
use claimcheck_core::web::{FixtureSearch, WebDocument};
use claimcheck_core::Label;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub const PLACE_OF_BIRTH: &str = "P19";
pub const COUNTRY: &str = "P17";
pub const CAPITAL: &str = "P36";
pub const CITIZENSHIP: &str = "P27";

/// Cities of a country with an index below this are the ones a country's
/// incoming-`country` query returns first; people are born elsewhere so
/// that "born in a city of X" needs a second hop.
const LISTED_CITIES: usize = 10;

const GIVEN: &[&str] = &[
    "Ada", "Bruno", "Cora", "Dario", "Elin", "Fenna", "Goran", "Hilde", "Ivo", "Juna", "Kasia", "Lorin", "Mira",
    "Nils", "Oda", "Pavel", "Rhea", "Sten", "Talia", "Ugo", "Vera", "Wim", "Yara", "Zeno",
];
const FAMILY: &[&str] = &[
    "Quill",
    "Marsh",
    "Holloway",
    "Brenn",
    "Castell",
    "Dunmore",
    "Eckart",
    "Falk",
    "Garrow",
    "Hesk",
    "Imber",
    "Jarvik",
    "Kessel",
    "Lindqvist",
    "Morrow",
    "Norcott",
    "Orsk",
    "Pellam",
    "Rooke",
    "Strand",
    "Tallis",
    "Varga",
    "Wendt",
    "Ystad",
];
const SYLLABLES: &[&str] = &[
    "ka", "lo", "mi", "ra", "ten", "vor", "sil", "dun", "bre", "tha", "nel", "gor", "ash", "wen", "pol", "zar",
];
const COUNTRY_SUFFIXES: &[&str] = &["land", "mark", "ria", "stan", "via"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Country {
    pub id: String,
    pub name: String,
    pub capital: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct City {
    pub id: String,
    pub name: String,
    pub country: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Person {
    pub id: String,
    pub name: String,
    pub birth_city: usize,
    pub citizenship: usize,
    /// When false the birthplace is only known from the web.
    pub birth_in_kg: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WorldSpec {
    pub seed: u64,
    pub countries: usize,
    pub cities_per_country: usize,
    pub persons: usize,
    /// Persons whose birthplace is missing from the graph.
    pub web_only_persons: usize,
}

impl Default for WorldSpec {
    fn default() -> Self {
        Self {
            seed: 7,
            countries: 5,
            cities_per_country: 14,
            persons: 60,
            web_only_persons: 6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct World {
    pub countries: Vec<Country>,
    pub cities: Vec<City>,
    pub persons: Vec<Person>,
}

fn capitalize(s: &str) -> String {
    let mut cs = s.chars();
    cs.next()
        .map(|c| c.to_uppercase().chain(cs).collect())
        .unwrap_or_default()
}

fn fresh_name(rng: &mut ChaCha8Rng, used: &mut BTreeSet<String>, suffix: Option<&str>) -> String {
    loop {
        let n = if suffix.is_some() { 1 } else { rng.gen_range(2..=3) };
        let mut word: String = (0..n).map(|_| *SYLLABLES.choose(rng).expect("syllables")).collect();
        if let Some(s) = suffix {
            word.push_str(s);
        }
        let name = capitalize(&word);
        if used.insert(name.to_lowercase()) {
            return name;
        }
    }
}

/// What a claim asserts, in graph terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ClaimKind {
    /// person —place of birth→ city
    BirthCity,
    /// person —place of birth→ city —country→ country
    BirthCountry,
    /// person —country of citizenship→ country
    Citizenship,
    /// country —capital→ city
    Capital,
    /// BirthCity for a person whose birthplace only the web knows.
    WebBirthCity,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuiteClaim {
    pub id: String,
    pub claim: String,
    pub label: Label,
    pub kind: ClaimKind,
    /// Ids of the claim's subject and of the entity it names as object.
    pub subject: String,
    pub object: String,
}

impl SuiteClaim {
    pub fn record(&self, source: &str) -> DatasetRecord {
        DatasetRecord {
            id: self.id.clone(),
            claim: self.claim.clone(),
            gold_label: self.label,
            evidence_docs: None,
            source: source.to_string(),
        }
    }

    pub fn labeled(&self) -> LabeledClaim {
        LabeledClaim {
            id: self.id.clone(),
            claim: self.claim.clone(),
            label: self.label,
        }
    }
}

impl World {
    pub fn generate(spec: WorldSpec) -> Self {
        assert!(
            spec.cities_per_country > LISTED_CITIES,
            "need unlisted cities to be born in"
        );
        assert!(spec.web_only_persons <= spec.persons);
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let mut used = BTreeSet::new();
        let countries: Vec<Country> = (0..spec.countries)
            .map(|m| Country {
                id: format!("Q{}", 1000 + m),
                name: fresh_name(&mut rng, &mut used, Some(COUNTRY_SUFFIXES[m % COUNTRY_SUFFIXES.len()])),
                capital: m * spec.cities_per_country,
            })
            .collect();
        let cities: Vec<City> = (0..spec.countries * spec.cities_per_country)
            .map(|i| City {
                id: format!("Q{}", 2000 + i),
                name: fresh_name(&mut rng, &mut used, None),
                country: i / spec.cities_per_country,
            })
            .collect();
        let mut names: Vec<(usize, usize)> = (0..GIVEN.len())
            .flat_map(|g| (0..FAMILY.len()).map(move |f| (g, f)))
            .collect();
        names.shuffle(&mut rng);
        assert!(spec.persons <= names.len(), "not enough distinct person names");
        let birth_slots = spec.cities_per_country - LISTED_CITIES;
        let persons = (0..spec.persons)
            .map(|i| {
                let (g, f) = names[i];
                // spread births evenly so every birth city has several natives
                let country = i % spec.countries;
                let slot = (i / spec.countries) % birth_slots;
                Person {
                    id: format!("Q{}", 3000 + i),
                    name: format!("{} {}", GIVEN[g], FAMILY[f]),
                    birth_city: country * spec.cities_per_country + LISTED_CITIES + slot,
                    citizenship: if rng.gen_bool(0.8) {
                        country
                    } else {
                        rng.gen_range(0..spec.countries)
                    },
                    birth_in_kg: i < spec.persons - spec.web_only_persons,
                }
            })
            .collect();
        Self {
            countries,
            cities,
            persons,
        }
    }

    pub fn graph(&self) -> FixtureGraph {
        let mut g = FixtureGraph::builder()
            .with_relation(PLACE_OF_BIRTH, "place of birth", &["born in", "birthplace"])
            .with_relation(COUNTRY, "country", &["located in", "is a city in"])
            .with_relation(CAPITAL, "capital", &["capital city"])
            .with_relation(CITIZENSHIP, "country of citizenship", &["citizen of", "citizenship"]);
        for c in &self.countries {
            g = g.with_entity(&c.id, &c.name);
        }
        for c in &self.cities {
            g = g.with_entity(&c.id, &c.name);
        }
        for p in &self.persons {
            g = g.with_entity(&p.id, &p.name);
        }
        for c in &self.countries {
            g = g.with_triple(&c.id, CAPITAL, &self.cities[c.capital].id);
        }
        for c in &self.cities {
            g = g.with_triple(&c.id, COUNTRY, &self.countries[c.country].id);
        }
        for p in &self.persons {
            if p.birth_in_kg {
                g = g.with_triple(&p.id, PLACE_OF_BIRTH, &self.cities[p.birth_city].id);
            }
            g = g.with_triple(&p.id, CITIZENSHIP, &self.countries[p.citizenship].id);
        }
        g
    }

    /// Every true fact, including the ones withheld from the graph, as
    /// `(subject id, relation id, object id)`.
    pub fn facts(&self) -> Vec<(String, &'static str, String)> {
        let mut out = Vec::new();
        for c in &self.countries {
            out.push((c.id.clone(), CAPITAL, self.cities[c.capital].id.clone()));
        }
        for c in &self.cities {
            out.push((c.id.clone(), COUNTRY, self.countries[c.country].id.clone()));
        }
        for p in &self.persons {
            out.push((p.id.clone(), PLACE_OF_BIRTH, self.cities[p.birth_city].id.clone()));
            out.push((p.id.clone(), CITIZENSHIP, self.countries[p.citizenship].id.clone()));
        }
        out
    }

    pub fn label_of(&self, id: &str) -> Option<&str> {
        self.countries
            .iter()
            .map(|c| (&c.id, &c.name))
            .chain(self.cities.iter().map(|c| (&c.id, &c.name)))
            .chain(self.persons.iter().map(|p| (&p.id, &p.name)))
            .find(|(i, _)| i.as_str() == id)
            .map(|(_, n)| n.as_str())
    }

    /// Biography pages for every person: the birthplace sentence and a
    /// citizenship sentence, keyed by the query the oracle formulates.
    pub fn web(&self) -> FixtureSearch {
        let mut search = FixtureSearch::new();
        for p in &self.persons {
            let slug = p.name.to_lowercase().replace(' ', "-");
            let city = &self.cities[p.birth_city];
            let docs = vec![
                WebDocument {
                    url: format!("https://bios.example.org/{slug}"),
                    title: format!("{} biography", p.name),
                    snippet: format!("{} was born in {}.", p.name, city.name),
                    provider_rank: 1,
                    body: None,
                },
                WebDocument {
                    url: format!("https://registry.example.org/{slug}"),
                    title: format!("{} registry entry", p.name),
                    snippet: format!("{} is a citizen of {}.", p.name, self.countries[p.citizenship].name),
                    provider_rank: 2,
                    body: None,
                },
            ];
            search.insert(super::oracle::web_query_for(&p.name), docs);
        }
        search
    }

    fn wrong_city(&self, rng: &mut ChaCha8Rng, p: &Person) -> usize {
        // another birth city, so the wrong city has natives in the graph
        let births: BTreeSet<usize> = self.persons.iter().map(|q| q.birth_city).collect();
        let options: Vec<usize> = births.into_iter().filter(|c| *c != p.birth_city).collect();
        *options.choose(rng).expect("several birth cities")
    }

    fn wrong_country(&self, rng: &mut ChaCha8Rng, right: usize) -> usize {
        let options: Vec<usize> = (0..self.countries.len()).filter(|c| *c != right).collect();
        *options.choose(rng).expect("several countries")
    }

    /// One claim of `kind`, true or false, about a random suitable subject.
    pub fn claim(&self, rng: &mut ChaCha8Rng, kind: ClaimKind, truth: bool, id: String) -> SuiteClaim {
        let label = if truth { Label::Supported } else { Label::Refuted };
        let pick_person = |rng: &mut ChaCha8Rng, web_only: bool| -> &Person {
            let pool: Vec<&Person> = self.persons.iter().filter(|p| p.birth_in_kg != web_only).collect();
            pool.choose(rng).expect("persons of the requested kind")
        };
        let (claim, subject, object) = match kind {
            ClaimKind::BirthCity | ClaimKind::WebBirthCity => {
                let p = pick_person(rng, kind == ClaimKind::WebBirthCity);
                let city = if truth { p.birth_city } else { self.wrong_city(rng, p) };
                let c = &self.cities[city];
                (format!("{} was born in {}.", p.name, c.name), &p.id, &c.id)
            }
            ClaimKind::BirthCountry => {
                let p = pick_person(rng, false);
                let right = self.cities[p.birth_city].country;
                let k = &self.countries[if truth { right } else { self.wrong_country(rng, right) }];
                (format!("{} was born in a city of {}.", p.name, k.name), &p.id, &k.id)
            }
            ClaimKind::Citizenship => {
                let p = pick_person(rng, false);
                let k = &self.countries[if truth {
                    p.citizenship
                } else {
                    self.wrong_country(rng, p.citizenship)
                }];
                (format!("{} is a citizen of {}.", p.name, k.name), &p.id, &k.id)
            }
            ClaimKind::Capital => {
                let k = self.countries.choose(rng).expect("countries");
                let city = if truth {
                    k.capital
                } else {
                    let others: Vec<usize> = (0..self.cities.len())
                        .filter(|c| self.cities[*c].country == self.cities[k.capital].country && *c != k.capital)
                        .collect();
                    *others.choose(rng).expect("non-capital cities")
                };
                let c = &self.cities[city];
                (format!("The capital of {} is {}.", k.name, c.name), &k.id, &c.id)
            }
        };
        SuiteClaim {
            id,
            claim,
            label,
            kind,
            subject: subject.clone(),
            object: object.clone(),
        }
    }

    /// Claims cycling through `kinds`, alternating true and false, without
    /// repeating a claim text.
    pub fn suite(&self, seed: u64, kinds: &[ClaimKind], n: usize, prefix: &str) -> Vec<SuiteClaim> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut seen = BTreeSet::new();
        let mut out = Vec::with_capacity(n);
        let mut i = 0usize;
        let mut attempts = 0usize;
        while out.len() < n {
            attempts += 1;
            assert!(attempts < 100 * n, "world too small for {n} distinct claims");
            let kind = kinds[(i / 2) % kinds.len()];
            let truth = i.is_multiple_of(2);
            let c = self.claim(&mut rng, kind, truth, format!("{prefix}-{:03}", out.len() + 1));
            if seen.insert(c.claim.clone()) {
                out.push(c);
                i += 1;
            }
        }
        out
    }
}

/// The 20-claim evaluation suite: four claims of each kind, half true.
pub fn oracle_suite() -> (World, Vec<SuiteClaim>) {
    let world = World::generate(WorldSpec::default());
    let kinds = [
        ClaimKind::BirthCity,
        ClaimKind::BirthCountry,
        ClaimKind::Citizenship,
        ClaimKind::Capital,
        ClaimKind::WebBirthCity,
    ];
    let claims = world.suite(11, &kinds, 20, "syn");
    (world, claims)
}

/// The 150-claim optimization suite. Two-hop claims make up 40% of it,
/// so a policy that stops after the initial retrieval loses accuracy.
pub fn optimization_suite() -> (World, Vec<SuiteClaim>) {
    let world = World::generate(WorldSpec::default());
    let kinds = [
        ClaimKind::BirthCountry,
        ClaimKind::BirthCity,
        ClaimKind::BirthCountry,
        ClaimKind::Citizenship,
        ClaimKind::BirthCity,
    ];
    let claims = world.suite(23, &kinds, 150, "opt");
    (world, claims)
}

/// Dataset JSONL for a suite: `{"id", "claim", "label"}` per line.
pub fn suite_jsonl(claims: &[SuiteClaim]) -> String {
    claims
        .iter()
        .map(|c| serde_json::json!({"id": c.id, "claim": c.claim, "label": c.label.as_str()}).to_string() + "\n")
        .collect()
}
