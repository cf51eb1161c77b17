//! Deterministic environments for tests, demos and acceptance checks:
//! a generated world with its graph, web results and labeled claim suites,
//! an oracle model that answers from the evidence in the prompt, a
//! worst-case dense graph, and a noisy random model.

mod dense;
mod oracle;
mod random;
mod world;

pub use dense::{DenseGraph, NeverSufficientLlm, DENSE_CLAIM};
pub use oracle::{
    facts, field, flawed_policy, resolve, rows, task, web_query_for, ClaimShape, Fact, OracleLlm, Resolution,
    FLAWED_SUFFICIENCY_LINE,
};
pub use random::RandomLlm;
pub use world::{
    optimization_suite, oracle_suite, suite_jsonl, City, ClaimKind, Country, Person, SuiteClaim, World, WorldSpec,
    CAPITAL, CITIZENSHIP, COUNTRY, PLACE_OF_BIRTH,
};
