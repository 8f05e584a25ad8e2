//! Small synthetic tweet corpus written to disk for the CLI tests.

#![allow(dead_code)]

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use chrono::{Duration, TimeZone, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const PHRASES: [(&str, f64); 8] = [
    ("Obama has failed us", -0.3),
    ("Crooked Hillary Clinton", 0.2),
    ("heroin is flooding our towns", 0.0),
    ("we will defeat ISIS", 0.5),
    ("defund Planned Parenthood", 0.1),
    ("Lyin' Ted Cruz", 0.3),
    ("the economy needs jobs", 0.0),
    ("watch https://t.co/xyz", -0.2),
];

const FILLER: [&str; 6] = ["Great", "crowd", "tonight", "in", "Iowa!", "Thank you"];

pub fn tally() -> Command {
    Command::new(env!("CARGO_BIN_EXE_tally"))
}

pub fn run_ok(cmd: &mut Command) -> Output {
    let out = cmd.output().expect("spawn tally");
    assert!(
        out.status.success(),
        "tally failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

/// Writes `corpus.jsonl` and `followers.csv` into `dir`.
pub fn write_corpus(dir: &Path, n: usize, seed: u64) -> (PathBuf, PathBuf) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = Utc.with_ymd_and_hms(2016, 2, 1, 0, 0, 0).unwrap();
    let mut corpus = String::new();
    for i in 0..n {
        let ts = start + Duration::minutes(30 * i as i64 + 5);
        let mut parts = vec![FILLER[rng.random_range(0..FILLER.len())]];
        let mut eta = 8.0;
        for (phrase, effect) in PHRASES {
            if rng.random_bool(0.25) {
                parts.push(phrase);
                eta += effect;
            }
        }
        let likes = (eta + rng.random_range(-0.7..0.7f64)).exp().round() as u64;
        let text = parts.join(" ").replace('"', "\\\"");
        writeln!(
            corpus,
            r#"{{"id":"{i}","timestamp":"{}","text":"{text}","likes":{likes},"author":"realDonaldTrump"}}"#,
            ts.to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
        )
        .unwrap();
    }
    let mut followers = String::from("author,timestamp,count\n");
    for h in 0..(n / 2 + 2) {
        let ts = start + Duration::hours(h as i64);
        writeln!(
            followers,
            "realDonaldTrump,{},{}",
            ts.to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            5_000_000 + 700 * h as u64
        )
        .unwrap();
    }
    let c = dir.join("corpus.jsonl");
    let f = dir.join("followers.csv");
    std::fs::write(&c, corpus).unwrap();
    std::fs::write(&f, followers).unwrap();
    (c, f)
}

/// Config driving the whole pipeline from `dir`, with a fast solver.
pub const PIPELINE_CONFIG: &str = r#"
eta = 0.1
max-iters = 4000
tol = 1e-9
seed = 11

[featurize]
corpus = "corpus.jsonl"
followers = "followers.csv"
out = "features"

[cv]
data = "features/dataset.csv"
grid-size = 8
out = "cv"

[fit]
data = "features/dataset.csv"
cv = "cv/cv_report.json"
out = "fit"

[boot]
data = "features/dataset.csv"
cv = "cv/cv_report.json"
replicates = 30
out = "boot"

[report]
model = ["Trump=boot"]
likes = ["features/log_likes.csv"]
out = "report"
"#;

pub const STAGES: [&str; 5] = ["featurize", "cv", "fit", "boot", "report"];

/// Runs every stage from `dir` using `config.toml` there.
pub fn run_pipeline(dir: &Path) {
    for stage in STAGES {
        run_ok(tally().current_dir(dir).args([stage, "--config", "config.toml"]));
    }
}

/// Every output file under the stage directories, keyed by relative path.
pub fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files = Vec::new();
    for stage_dir in ["features", "cv", "fit", "boot", "report"] {
        let mut entries: Vec<_> = std::fs::read_dir(dir.join(stage_dir))
            .unwrap()
            .map(|e| e.unwrap().path())
            .collect();
        entries.sort();
        for path in entries {
            let rel = path.strip_prefix(dir).unwrap().display().to_string();
            files.push((rel, std::fs::read(&path).unwrap()));
        }
    }
    files
}
