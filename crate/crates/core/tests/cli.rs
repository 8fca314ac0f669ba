mod common;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use charground::embeddings::EmbeddingTable;
use charground::io::{read_report, write_embeddings, write_story};
use charground::model::AnnotatedStory;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_charground"));
    c.env_remove("CHARGROUND_SEED");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

struct Fixture {
    dir: TempDir,
    stories: Vec<AnnotatedStory>,
}

impl Fixture {
    fn new(count: usize) -> Self {
        let dir = TempDir::new().unwrap();
        fs::create_dir_all(dir.path().join("stories")).unwrap();
        fs::create_dir_all(dir.path().join("embeddings")).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut stories = Vec::new();
        for i in 0..count {
            let story = common::mixed_story(&format!("story{i}"), &mut rng);
            let faces = common::face_embeddings(&story, 8, &mut rng);
            let table = EmbeddingTable::new(Some(story.story_id.clone()), 8, faces, vec![]).unwrap();
            write_story(
                &story,
                &dir.path().join(format!("stories/{}.json", story.story_id)),
            )
            .unwrap();
            write_embeddings(
                &table,
                &dir.path().join(format!("embeddings/{}.json", story.story_id)),
            )
            .unwrap();
            stories.push(story);
        }
        Fixture { dir, stories }
    }

    fn path(&self, rel: &str) -> PathBuf {
        self.dir.path().join(rel)
    }

    fn s(&self, rel: &str) -> String {
        self.path(rel).display().to_string()
    }
}

#[test]
fn pipeline_writes_chains_and_report() {
    let f = Fixture::new(3);
    let out = run(&[
        "pipeline",
        "--stories",
        &f.s("stories"),
        "--embeddings",
        &f.s("embeddings"),
        "--method",
        "dist",
        "--out",
        &f.s("out"),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report = read_report(&f.path("out/report.json")).unwrap();
    assert_eq!(report.stories.len(), 3);
    assert!(report.corpus.contains_key("grounding.recall"));
    for s in &f.stories {
        assert!(f.path(&format!("out/chains/{}.json", s.story_id)).is_file());
    }
}

#[test]
fn inverted_k_range_is_a_usage_error() {
    let f = Fixture::new(1);
    let out = run(&[
        "cluster",
        "--embeddings",
        &f.s("embeddings/story0.json"),
        "--k-min",
        "11",
        "--k-max",
        "10",
    ]);
    assert_eq!(code(&out), 2);
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let out = run(&["stats", "--gold", "x", "--colour"]);
    assert_eq!(code(&out), 2);
    assert!(!out.stderr.is_empty());
}

#[test]
fn invalid_story_is_a_data_error() {
    let f = Fixture::new(1);
    let path = f.path("stories/story0.json");
    let mut doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    doc["gold"]["importance"] = serde_json::json!([{"chain_id": "T0", "stars": 6}]);
    let broken = serde_json::to_string(&doc).unwrap();
    fs::write(&path, broken).unwrap();
    let out = run(&["stats", "--gold", &f.s("stories/story0.json")]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("stars out of range"));
}

#[test]
fn malformed_seed_variable_is_a_usage_error() {
    let f = Fixture::new(1);
    let out = bin()
        .args(["cluster", "--embeddings", &f.s("embeddings/story0.json")])
        .env("CHARGROUND_SEED", "abc")
        .output()
        .unwrap();
    assert_eq!(code(&out), 2);
}

fn read(p: &Path) -> String {
    fs::read_to_string(p).unwrap()
}

#[test]
fn stages_compose_to_the_pipeline() {
    let f = Fixture::new(2);
    let out = run(&[
        "pipeline",
        "--stories",
        &f.s("stories"),
        "--embeddings",
        &f.s("embeddings"),
        "--seed",
        "3",
        "--out",
        &f.s("out"),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    for s in &f.stories {
        let id = &s.story_id;
        let story = f.s(&format!("stories/{id}.json"));
        let steps: [Vec<String>; 4] = [
            vec![
                "detect-text".into(),
                "--story".into(),
                story.clone(),
                "--out".into(),
                f.s("text.json"),
            ],
            vec![
                "cluster".into(),
                "--embeddings".into(),
                f.s(&format!("embeddings/{id}.json")),
                "--story".into(),
                story.clone(),
                "--seed".into(),
                "3".into(),
                "--out".into(),
                f.s("visual.json"),
            ],
            vec![
                "ground".into(),
                "--story".into(),
                story.clone(),
                "--text".into(),
                f.s("text.json"),
                "--visual".into(),
                f.s("visual.json"),
                "--out".into(),
                f.s("grounded.json"),
            ],
            vec![
                "rank".into(),
                "--story".into(),
                story.clone(),
                "--chains".into(),
                f.s("grounded.json"),
                "--out".into(),
                f.s("ranked.json"),
            ],
        ];
        for step in &steps {
            let out = bin().args(step).output().unwrap();
            assert_eq!(
                code(&out),
                0,
                "{step:?}: {}",
                String::from_utf8_lossy(&out.stderr)
            );
        }
        assert_eq!(
            read(&f.path("ranked.json")),
            read(&f.path(&format!("out/chains/{id}.json"))),
            "story {id}"
        );
    }
}

#[test]
fn reruns_are_byte_identical() {
    let f = Fixture::new(3);
    for out_dir in ["a", "b"] {
        let out = run(&[
            "pipeline",
            "--stories",
            &f.s("stories"),
            "--embeddings",
            &f.s("embeddings"),
            "--format",
            "csv",
            "--out",
            &f.s(out_dir),
        ]);
        assert_eq!(code(&out), 0);
    }
    assert_eq!(read(&f.path("a/report.csv")), read(&f.path("b/report.csv")));
    for s in &f.stories {
        let rel = format!("chains/{}.json", s.story_id);
        assert_eq!(
            read(&f.path(&format!("a/{rel}"))),
            read(&f.path(&format!("b/{rel}")))
        );
    }
    assert!(read(&f.path("a/report.csv")).starts_with("scope,metric,value\n"));
}

#[test]
fn sequential_and_parallel_agree() {
    let f = Fixture::new(3);
    for (dir, extra) in [("par", None), ("seq", Some("--sequential"))] {
        let mut args = vec![
            "pipeline".to_string(),
            "--stories".into(),
            f.s("stories"),
            "--embeddings".into(),
            f.s("embeddings"),
            "--out".into(),
            f.s(dir),
        ];
        args.extend(extra.map(String::from));
        assert_eq!(code(&bin().args(&args).output().unwrap()), 0);
    }
    assert_eq!(read(&f.path("par/report.json")), read(&f.path("seq/report.json")));
}

#[test]
fn eval_scores_pipeline_output() {
    let f = Fixture::new(2);
    let out = run(&[
        "pipeline",
        "--stories",
        &f.s("stories"),
        "--embeddings",
        &f.s("embeddings"),
        "--out",
        &f.s("out"),
    ]);
    assert_eq!(code(&out), 0);
    let out = run(&[
        "eval",
        "--pred",
        &f.s("out/chains"),
        "--gold",
        &f.s("stories"),
        "--metrics",
        "detection,pk",
        "--out",
        &f.s("eval.json"),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report = read_report(&f.path("eval.json")).unwrap();
    assert!(report.corpus.contains_key("text.detection.precision"));
    assert!(report.corpus.contains_key("p_at_1"));
    assert!(!report.corpus.contains_key("text.bcubed.precision"));

    let bad = run(&[
        "eval",
        "--pred",
        &f.s("out/chains"),
        "--gold",
        &f.s("stories"),
        "--metrics",
        "muc",
    ]);
    assert_eq!(code(&bad), 2);
}

#[test]
fn agreement_and_stats() {
    let f = Fixture::new(2);
    let out = run(&["agreement", "--a", &f.s("stories"), "--b", &f.s("stories")]);
    assert_eq!(code(&out), 0);
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    for key in ["detection", "b_cubed", "exact_match", "bounding_boxes"] {
        for side in ["precision", "recall"] {
            let r = &report[key][side];
            assert_eq!(r["num"], r["den"], "{key}.{side}");
        }
    }
    let out = run(&["stats", "--gold", &f.s("stories")]);
    assert_eq!(code(&out), 0);
    let stats: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(stats["stories"], 2);

    let lone = TempDir::new().unwrap();
    fs::copy(f.path("stories/story0.json"), lone.path().join("story0.json")).unwrap();
    let out = run(&[
        "agreement",
        "--a",
        &f.s("stories"),
        "--b",
        &lone.path().display().to_string(),
    ]);
    assert_eq!(code(&out), 3);
}

#[test]
fn seed_variable_stands_in_for_the_flag() {
    let f = Fixture::new(1);
    let emb = f.s("embeddings/story0.json");
    let flag = run(&["cluster", "--embeddings", &emb, "--seed", "17"]);
    let env = bin()
        .args(["cluster", "--embeddings", &emb])
        .env("CHARGROUND_SEED", "17")
        .output()
        .unwrap();
    assert_eq!(code(&flag), 0);
    assert_eq!(flag.stdout, env.stdout);
}
