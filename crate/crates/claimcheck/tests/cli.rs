//! End-to-end runs of the `claimcheck` binary against fixture files and
//! cassettes recorded in-process from the oracle model.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::Arc;

use claimcheck::cassette::RecordingBackend;
use claimcheck::runner::{evaluate, EvalOptions, Services};
use claimcheck::testkit::{
    flawed_policy, optimization_suite, oracle_suite, suite_jsonl, OracleLlm, SuiteClaim, World, FLAWED_SUFFICIENCY_LINE,
};
use claimcheck_core::optimize::{optimize, LabeledClaim, OptimizeConfig};
use claimcheck_core::prompts::default_policy;
use claimcheck_core::{EpisodeConfig, Label, PromptPolicy, Trajectory};
use serde_json::Value;
use tempfile::TempDir;

struct Fixture {
    dir: TempDir,
    world: World,
    claims: Vec<SuiteClaim>,
}

impl Fixture {
    fn new((world, claims): (World, Vec<SuiteClaim>)) -> Self {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("graph.json"), world.graph().to_json()).unwrap();
        fs::write(dir.path().join("web.json"), world.web().to_json()).unwrap();
        fs::write(dir.path().join("claims.jsonl"), suite_jsonl(&claims)).unwrap();
        Self { dir, world, claims }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn recorder(&self) -> (Arc<RecordingBackend<OracleLlm>>, Services) {
        let rec = Arc::new(RecordingBackend::new(OracleLlm));
        let services = Services::new(rec.clone(), Arc::new(self.world.graph()), Arc::new(self.world.web()));
        (rec, services)
    }

    /// Records a cassette for checking each of `claims` with `policy`.
    fn record_checks(&self, claims: &[&str], policy: &PromptPolicy) -> PathBuf {
        let (rec, services) = self.recorder();
        for c in claims {
            services.run_claim(c, policy, &EpisodeConfig::default()).unwrap();
        }
        let path = self.path("tape.jsonl");
        rec.save(&path).unwrap();
        path
    }

    fn run(&self, cassette: &Path, args: &[&str]) -> Output {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_claimcheck"));
        cmd.arg("--backend")
            .arg("replay")
            .arg("--cassette")
            .arg(cassette)
            .arg("--kg")
            .arg(self.path("graph.json"))
            .arg("--web")
            .arg(self.path("web.json"))
            .args(args);
        cmd.output().unwrap()
    }
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn claimcheck(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_claimcheck"))
        .args(args)
        .output()
        .unwrap()
}

#[test]
fn check_exit_code_follows_the_verdict() {
    let f = Fixture::new(oracle_suite());
    let supported = f.claims.iter().find(|c| c.label == Label::Supported).unwrap();
    let refuted = f.claims.iter().find(|c| c.label == Label::Refuted).unwrap();
    let tape = f.record_checks(&[&supported.claim, &refuted.claim], &default_policy());

    let out = f.run(&tape, &["check", &supported.claim]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.starts_with("Supported\n"), "{text}");
    assert!(text.contains("citations:\n  - t:"), "{text}");
    assert!(text.contains("sparql_queries="), "{text}");

    let out = f.run(&tape, &["check", &refuted.claim]);
    assert_eq!(out.status.code(), Some(1), "{}", stderr(&out));
    assert!(stdout(&out).starts_with("Refuted\n"));
}

#[test]
fn flags_override_the_config_file() {
    let f = Fixture::new(oracle_suite());
    let claim = &f.claims[0].claim;
    let config = f.path("config.json");
    fs::write(&config, r#"{"episode": {"k": 2, "max_steps": 5}}"#).unwrap();
    // the recording must use the same episode settings as the replay
    let (rec, services) = f.recorder();
    let episode = EpisodeConfig {
        k: 3,
        max_steps: 5,
        ..EpisodeConfig::default()
    };
    services.run_claim(claim, &default_policy(), &episode).unwrap();
    let tape = f.path("tape.jsonl");
    rec.save(&tape).unwrap();

    let out_file = f.path("out/trajectory.jsonl");
    let out = f.run(
        &tape,
        &[
            "--config",
            config.to_str().unwrap(),
            "--k",
            "3",
            "--out",
            out_file.to_str().unwrap(),
            "check",
            claim,
        ],
    );
    assert!(matches!(out.status.code(), Some(0 | 1)), "{}", stderr(&out));
    let t: Trajectory = serde_json::from_str(fs::read_to_string(&out_file).unwrap().trim()).unwrap();
    assert_eq!((t.config.k, t.config.max_steps), (3, 5));

    // the written trajectory replays cleanly
    let out = claimcheck(&["replay", out_file.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    assert!(stdout(&out).contains("invariants: ok"));
    assert!(stdout(&out).contains("initKg"));
}

#[test]
fn missing_fixture_is_an_error() {
    let f = Fixture::new(oracle_suite());
    let tape = f.record_checks(&[], &default_policy());
    let out = claimcheck(&[
        "--backend",
        "replay",
        "--cassette",
        tape.to_str().unwrap(),
        "--kg",
        "/nonexistent/graph.json",
        "--web",
        f.path("web.json").to_str().unwrap(),
        "check",
        "Anyone was born somewhere.",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("/nonexistent/graph.json"), "{}", stderr(&out));
}

#[test]
fn offline_backend_without_a_cassette_is_rejected() {
    let out = claimcheck(&["--backend", "replay", "check", "Anything."]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("--cassette"), "{}", stderr(&out));
}

#[test]
fn unrecorded_prompts_fail_instead_of_guessing() {
    let f = Fixture::new(oracle_suite());
    let tape = f.record_checks(&[&f.claims[0].claim], &default_policy());
    let out = f.run(&tape, &["check", &f.claims[1].claim]);
    assert_eq!(out.status.code(), Some(2), "{}", stdout(&out));
}

#[test]
fn eval_reports_balanced_accuracy_and_writes_json() {
    let f = Fixture::new(oracle_suite());
    let records: Vec<_> = f.claims.iter().map(|c| c.record("synthetic")).collect();
    let (rec, services) = f.recorder();
    let options = EvalOptions {
        parallel: 1,
        use_gold_evidence: false,
    };
    evaluate(
        &services,
        &records,
        &default_policy(),
        &EpisodeConfig::default(),
        options,
    )
    .unwrap();
    let tape = f.path("tape.jsonl");
    rec.save(&tape).unwrap();

    let report = f.path("report.json");
    let trajectories = f.path("all.jsonl");
    let out = f.run(
        &tape,
        &[
            "--parallel",
            "4",
            "--out",
            report.to_str().unwrap(),
            "--trajectories-out",
            trajectories.to_str().unwrap(),
            "eval",
            f.path("claims.jsonl").to_str().unwrap(),
        ],
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(stdout(&out).contains("balanced accuracy: 1.0000"), "{}", stdout(&out));
    assert!(stdout(&out).contains("InsufficientKG"));
    let json: Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(json["balanced_accuracy"], 1.0);
    assert_eq!(json["n"], 20);
    assert_eq!(fs::read_to_string(&trajectories).unwrap().lines().count(), 20);
}

#[test]
fn eval_names_the_malformed_line() {
    let f = Fixture::new(oracle_suite());
    let tape = f.record_checks(&[], &default_policy());
    let data = f.path("bad.jsonl");
    let mut text = suite_jsonl(&f.claims[..2]);
    text.push_str("{\"id\": \"x\", \"claim\": \n");
    fs::write(&data, text).unwrap();
    let out = f.run(&tape, &["eval", data.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("line 3"), "{}", stderr(&out));
}

#[test]
fn gold_evidence_flag_warns_when_the_dataset_has_none() {
    let f = Fixture::new(oracle_suite());
    let claims: Vec<&str> = f.claims[..4].iter().map(|c| c.claim.as_str()).collect();
    let tape = f.record_checks(&claims, &default_policy());
    let data = f.path("four.jsonl");
    fs::write(&data, suite_jsonl(&f.claims[..4])).unwrap();
    let out = f.run(&tape, &["--use-gold-evidence", "eval", data.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(stderr(&out).contains("no gold evidence"), "{}", stderr(&out));
}

#[test]
fn optimize_needs_enough_claims() {
    let f = Fixture::new(optimization_suite());
    let tape = f.record_checks(&[], &default_policy());
    let data = f.path("small.jsonl");
    fs::write(&data, suite_jsonl(&f.claims[..100])).unwrap();
    let out = f.run(&tape, &["optimize", data.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("150"), "{}", stderr(&out));
}

#[test]
fn optimize_writes_the_run_and_the_selected_policy() {
    let f = Fixture::new(optimization_suite());
    let policy_file = f.path("flawed.json");
    fs::write(&policy_file, serde_json::to_string(&flawed_policy()).unwrap()).unwrap();

    let (rec, services) = f.recorder();
    let labeled: Vec<LabeledClaim> = f.claims.iter().map(SuiteClaim::labeled).collect();
    let episode = EpisodeConfig::default();
    let runner = |claim: &str, policy: &PromptPolicy| services.run_claim(claim, policy, &episode);
    let config = OptimizeConfig {
        epochs: 2,
        ..OptimizeConfig::default()
    };
    let expected = optimize(&flawed_policy(), &labeled, &config, &runner, &*rec).unwrap();
    let tape = f.path("tape.jsonl");
    rec.save(&tape).unwrap();

    let out_file = f.path("reports/run.json");
    let out = f.run(
        &tape,
        &[
            "--policy",
            policy_file.to_str().unwrap(),
            "--epochs",
            "2",
            "--out",
            out_file.to_str().unwrap(),
            "optimize",
            f.path("claims.jsonl").to_str().unwrap(),
        ],
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let run: Value = serde_json::from_str(&fs::read_to_string(&out_file).unwrap()).unwrap();
    assert_eq!(run["history"].as_array().unwrap().len(), 2);
    assert_eq!(run, serde_json::to_value(&expected).unwrap());
    let selected: PromptPolicy =
        serde_json::from_str(&fs::read_to_string(f.path("reports/run.policy.json")).unwrap()).unwrap();
    assert!(!selected
        .get("assess_sufficiency")
        .unwrap()
        .text
        .contains(FLAWED_SUFFICIENCY_LINE));
    assert!(expected.selected_val.mean_reward > expected.initial_val.mean_reward);
}

#[test]
fn replay_flags_broken_trajectories() {
    let f = Fixture::new(oracle_suite());
    let (_, services) = f.recorder();
    let t = services
        .run_claim(&f.claims[0].claim, &default_policy(), &EpisodeConfig::default())
        .unwrap();
    let mut broken = t.clone();
    broken.steps.remove(0);
    let file = f.path("mixed.jsonl");
    fs::write(&file, format!("{}\n\n{}\n", t.to_json(), broken.to_json())).unwrap();
    let out = claimcheck(&["replay", file.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let text = stdout(&out);
    assert!(text.contains("episode 2"), "{text}");
    assert!(
        text.contains("VIOLATION: first action is not InitKgRetrieval"),
        "{text}"
    );
}

#[test]
fn replay_rejects_empty_and_garbled_files() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.jsonl");
    fs::write(&empty, "\n").unwrap();
    assert_eq!(claimcheck(&["replay", empty.to_str().unwrap()]).status.code(), Some(2));
    let garbled = dir.path().join("garbled.jsonl");
    fs::write(&garbled, "{\"claim\": 1}\n").unwrap();
    let out = claimcheck(&["replay", garbled.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("garbled.jsonl:1"), "{}", stderr(&out));
}
