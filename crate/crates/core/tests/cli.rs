#![cfg(feature = "cli")]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use geobots_core::grid::{Difficulty, GridLevel};
use geobots_core::pcg::{validate_level, DifficultyProfile};
use geobots_core::robot::{compute_stats, Catalog};
use serde_json::{json, Value};

fn geobots(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_geobots"))
        .args(args)
        .env_remove("GEOBOTS_PROFILE")
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout)
        .unwrap_or_else(|e| panic!("stdout is not JSON ({e}): {:?}", out))
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write(dir: &Path, name: &str, value: &Value) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, value.to_string()).unwrap();
    path
}

fn tier_build(tier: u8) -> Value {
    serde_json::to_value(Catalog::shipped().uniform_build(tier).to_file()).unwrap()
}

fn gen_level(dir: &Path, seed: u64, difficulty: &str) -> PathBuf {
    let path = dir.join(format!("{difficulty}-{seed}.json"));
    let out = geobots(&[
        "gen",
        "--seed",
        &seed.to_string(),
        "--theme",
        "new-york",
        "--difficulty",
        difficulty,
        "-o",
        s(&path),
    ]);
    assert_eq!(code(&out), 0, "{out:?}");
    path
}

/// A 3x1 corridor whose middle cell is sand that tier-1 wheels cannot cross.
fn sandbag_level() -> Value {
    json!({
        "schema_version": 1, "seed": 0, "theme": "african-desert", "difficulty": "easy",
        "width": 3, "height": 1, "cells": ["LLL"],
        "start": {"col": 0, "row": 0}, "end": {"col": 2, "row": 0},
        "features": [{"at": {"col": 1, "row": 0}, "kind": {"type": "sandbag-track", "min_traction": 5, "min_wheel_size": 0}}],
        "pickups": []
    })
}

#[test]
fn gen_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for p in [&a, &b] {
        let out = geobots(&[
            "gen",
            "--seed",
            "42",
            "--theme",
            "new-york",
            "--difficulty",
            "hard",
            "-o",
            s(p),
        ]);
        assert_eq!(code(&out), 0);
        assert_eq!(stdout_json(&out)["seed"], 42);
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let fp = stdout_json(&geobots(&["fingerprint", s(&a)]));
    let listed = stdout_json(&geobots(&[
        "gen",
        "--seed",
        "42",
        "--theme",
        "new-york",
        "--difficulty",
        "hard",
        "-o",
        s(&b),
    ]));
    assert_eq!(fp["fingerprint"], listed["fingerprint"]);

    let to_stdout = geobots(&[
        "gen",
        "--seed",
        "42",
        "--theme",
        "new-york",
        "--difficulty",
        "hard",
    ]);
    assert_eq!(
        String::from_utf8(to_stdout.stdout).unwrap().trim(),
        fs::read_to_string(&a).unwrap()
    );
}

#[test]
fn seed_sweep_writes_validator_clean_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = geobots(&[
        "gen",
        "--seeds",
        "0..999",
        "--theme",
        "east-coast-islands",
        "--difficulty",
        "easy",
        "--out-dir",
        s(dir.path()),
    ]);
    assert_eq!(code(&out), 0);
    let lines: Vec<Value> = String::from_utf8(out.stdout)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), 1000);
    let files: Vec<_> = fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    assert_eq!(files.len(), 1000);
    for f in files {
        let level = GridLevel::from_json(&fs::read_to_string(&f).unwrap()).unwrap();
        let report = validate_level(&level);
        assert!(
            report.solvable && report.violations.is_empty(),
            "{}",
            f.display()
        );
    }
}

#[test]
fn validate_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let good = gen_level(dir.path(), 7, "medium");
    let out = geobots(&["validate", s(&good)]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout_json(&out)["solvable"], true);

    let mut doc: Value = serde_json::from_str(&fs::read_to_string(&good).unwrap()).unwrap();
    let end = (
        doc["end"]["col"].as_i64().unwrap(),
        doc["end"]["row"].as_i64().unwrap(),
    );
    let mut rows: Vec<Vec<char>> = doc["cells"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r.as_str().unwrap().chars().collect())
        .collect();
    for (dc, dr) in [(0, -1), (0, 1), (-1, 0), (1, 0)] {
        let (c, r) = (end.0 + dc, end.1 + dr);
        if r >= 0 && (r as usize) < rows.len() && c >= 0 && (c as usize) < rows[0].len() {
            rows[r as usize][c as usize] = 'X';
        }
    }
    doc["cells"] = json!(rows
        .iter()
        .map(|r| r.iter().collect::<String>())
        .collect::<Vec<_>>());
    let walled = write(dir.path(), "walled.json", &doc);
    let out = geobots(&["validate", s(&walled)]);
    assert_eq!(code(&out), 1);
    let report = stdout_json(&out);
    assert_eq!(report["solvable"], false);
    assert!(!report["violations"].as_array().unwrap().is_empty());

    let text = fs::read_to_string(&good).unwrap();
    let truncated = dir.path().join("truncated.json");
    fs::write(&truncated, &text[..text.len() / 2]).unwrap();
    let out = geobots(&["validate", s(&truncated)]);
    assert_eq!(code(&out), 2);
    assert!(out.stdout.is_empty());
}

#[test]
fn solve_and_replay() {
    let dir = tempfile::tempdir().unwrap();
    let level = gen_level(dir.path(), 11, "easy");
    let build = write(dir.path(), "t1.json", &tier_build(1));
    let replay = dir.path().join("replay.json");
    let out = geobots(&["solve", s(&level), s(&build), "--replay-out", s(&replay)]);
    assert_eq!(code(&out), 0, "{out:?}");
    let solved = stdout_json(&out);
    assert_eq!(solved["result"]["completed"], true);
    assert_eq!(solved["result"]["restarts"], 0);

    let out = geobots(&["replay", s(&level), s(&replay)]);
    assert_eq!(code(&out), 0);
    let run = stdout_json(&out);
    assert_eq!(run["result"], solved["result"]);
    assert_eq!(run["state"]["status"], "completed");

    let mut short: Value = serde_json::from_str(&fs::read_to_string(&replay).unwrap()).unwrap();
    short["commands"] = json!([]);
    let short = write(dir.path(), "short.json", &short);
    assert_eq!(code(&geobots(&["replay", s(&level), s(&short)])), 1);

    let other = gen_level(dir.path(), 12, "easy");
    assert_eq!(code(&geobots(&["replay", s(&other), s(&replay)])), 2);
}

#[test]
fn solve_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let sand = write(dir.path(), "sand.json", &sandbag_level());
    let t1 = write(dir.path(), "t1.json", &tier_build(1));
    let t3 = write(dir.path(), "t3.json", &tier_build(3));
    assert_eq!(code(&geobots(&["solve", s(&sand), s(&t1)])), 1);
    assert_eq!(code(&geobots(&["solve", s(&sand), s(&t3)])), 0);
    assert_eq!(
        code(&geobots(&[
            "solve",
            s(&sand),
            s(&dir.path().join("missing.json"))
        ])),
        2
    );
    let partial = write(
        dir.path(),
        "partial.json",
        &json!({"slots": {"motor": "motor-t1"}}),
    );
    assert_eq!(code(&geobots(&["solve", s(&sand), s(&partial)])), 2);
}

#[test]
fn stats_match_library() {
    let dir = tempfile::tempdir().unwrap();
    let empty = write(dir.path(), "empty.json", &json!({"slots": {}}));
    let out = stdout_json(&geobots(&["stats", s(&empty)]));
    assert!(out["stats"].as_object().unwrap().values().all(|v| v == 0));
    assert_eq!(out["complete"], false);

    let cat = Catalog::shipped();
    for tier in 1..=3 {
        let build = write(dir.path(), "b.json", &tier_build(tier));
        let out = stdout_json(&geobots(&["stats", s(&build)]));
        assert_eq!(
            out["stats"],
            serde_json::to_value(compute_stats(&cat.uniform_build(tier), &cat)).unwrap()
        );
    }
    let bad = write(
        dir.path(),
        "bad.json",
        &json!({"slots": {"motor": "wheel-t1"}}),
    );
    assert_eq!(code(&geobots(&["stats", s(&bad)])), 2);
}

#[test]
fn repair_commands() {
    let dir = tempfile::tempdir().unwrap();
    let a = geobots(&["repair", "gen", "--seed", "1", "--difficulty", "easy"]);
    let b = geobots(&["repair", "gen", "--seed", "1", "--difficulty", "easy"]);
    assert_eq!(a.stdout, b.stdout);
    let view = stdout_json(&a);
    assert!(view.get("answer_key").is_none());
    let full = stdout_json(&geobots(&[
        "repair",
        "gen",
        "--seed",
        "1",
        "--difficulty",
        "easy",
        "--full",
    ]));
    assert!(full.get("answer_key").is_some());

    let key = geobots(&["repair", "key", "--seed", "1", "--difficulty", "easy"]);
    let key_path = dir.path().join("key.json");
    fs::write(&key_path, &key.stdout).unwrap();
    let out = geobots(&[
        "repair",
        "grade",
        "--seed",
        "1",
        "--difficulty",
        "easy",
        "--submission",
        s(&key_path),
    ]);
    assert_eq!(code(&out), 0);
    assert_eq!(
        stdout_json(&out)["verdicts"]["electronics"]["verdict"],
        "fixed"
    );

    let empty = write(dir.path(), "empty.json", &json!({}));
    let out = geobots(&[
        "repair",
        "grade",
        "--seed",
        "1",
        "--difficulty",
        "easy",
        "--submission",
        s(&empty),
    ]);
    assert_eq!(code(&out), 1);
    assert_eq!(stdout_json(&out)["fixed"], false);

    let bogus = write(
        dir.path(),
        "bogus.json",
        &json!({"code_selections": [0, 0, 0, 0, 0, 0, 0, 0]}),
    );
    let out = geobots(&[
        "repair",
        "grade",
        "--seed",
        "1",
        "--difficulty",
        "easy",
        "--submission",
        s(&bogus),
    ]);
    assert_eq!(code(&out), 2);
}

#[test]
fn wallet_purchases() {
    let dir = tempfile::tempdir().unwrap();
    let w = dir.path().join("w.json");
    assert_eq!(
        code(&geobots(&[
            "wallet",
            "new",
            "--balance",
            "150",
            "-o",
            s(&w)
        ])),
        0
    );
    let out = geobots(&["wallet", "buy", s(&w), "motor-t2"]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout_json(&out)["wallet"]["balance"], 0);
    let before = fs::read(&w).unwrap();
    assert_eq!(code(&geobots(&["wallet", "buy", s(&w), "wheel-t2"])), 1);
    assert_eq!(fs::read(&w).unwrap(), before);
    assert_eq!(code(&geobots(&["wallet", "buy", s(&w), "motor-t2"])), 1);
    assert_eq!(
        code(&geobots(&["wallet", "buy", s(&w), "flux-capacitor"])),
        2
    );
}

#[test]
fn sweep_summary() {
    let out = geobots(&[
        "sweep",
        "--seeds",
        "0..19",
        "--difficulty",
        "easy",
        "--tier",
        "1",
        "--summary",
    ]);
    assert_eq!(code(&out), 0);
    let summary = &stdout_json(&out)["summary"];
    assert_eq!(summary["levels"], 180);
    assert_eq!(summary["completed"], 180);
    assert_eq!(summary["unique_fingerprints"], 180);

    let out = geobots(&[
        "sweep",
        "--seeds",
        "0..2",
        "--theme",
        "new-york,russian-gulag",
    ]);
    let lines: Vec<Value> = String::from_utf8(out.stdout)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), 2 * 3 * 3 + 1);
}

#[test]
fn profile_override_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let mut easy = DifficultyProfile::standard(Difficulty::Easy);
    easy.grid_size = (6, 6);
    let path = write(dir.path(), "profile.json", &json!({ "easy": easy }));
    let out = Command::new(env!("CARGO_BIN_EXE_geobots"))
        .args([
            "gen",
            "--seed",
            "3",
            "--theme",
            "new-york",
            "--difficulty",
            "easy",
        ])
        .env("GEOBOTS_PROFILE", &path)
        .output()
        .unwrap();
    assert_eq!(code(&out), 0);
    assert_eq!(stdout_json(&out)["width"], 6);

    let broken = dir.path().join("broken.json");
    fs::write(&broken, "{").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_geobots"))
        .args([
            "gen",
            "--seed",
            "3",
            "--theme",
            "new-york",
            "--difficulty",
            "easy",
        ])
        .env("GEOBOTS_PROFILE", &broken)
        .output()
        .unwrap();
    assert_eq!(code(&out), 2);
}

#[test]
fn exit_code_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let level = gen_level(dir.path(), 5, "easy");
    let missing = dir.path().join("nope.json");
    let garbage = dir.path().join("garbage.json");
    fs::write(&garbage, "not json").unwrap();
    let cases: &[(&[&str], i32)] = &[
        (
            &[
                "gen",
                "--seed",
                "1",
                "--theme",
                "atlantis",
                "--difficulty",
                "easy",
            ],
            2,
        ),
        (
            &[
                "gen",
                "--seed",
                "1",
                "--theme",
                "new-york",
                "--difficulty",
                "brutal",
            ],
            2,
        ),
        (
            &[
                "gen",
                "--seeds",
                "9..3",
                "--theme",
                "new-york",
                "--difficulty",
                "easy",
            ],
            2,
        ),
        (&["gen", "--theme", "new-york", "--difficulty", "easy"], 2),
        (&["validate", s(&missing)], 2),
        (&["validate", s(&garbage)], 2),
        (&["validate", s(&level)], 0),
        (&["fingerprint", s(&level)], 0),
        (&["fingerprint", s(&garbage)], 2),
        (&["replay", s(&level), s(&garbage)], 2),
        (&["stats", s(&garbage)], 2),
        (&["repair", "gen", "--seed", "x", "--difficulty", "easy"], 2),
        (&["repair", "key", "--seed", "4", "--difficulty", "hard"], 0),
        (
            &[
                "repair",
                "grade",
                "--seed",
                "4",
                "--difficulty",
                "hard",
                "--submission",
                s(&missing),
            ],
            2,
        ),
        (&["wallet", "buy", s(&missing), "motor-t2"], 2),
        (
            &[
                "sweep",
                "--seeds",
                "0..1",
                "--difficulty",
                "easy",
                "--tier",
                "9",
            ],
            2,
        ),
        (&["frobnicate"], 2),
    ];
    for (args, expected) in cases {
        let out = geobots(args);
        assert_eq!(
            code(&out),
            *expected,
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        if !out.stdout.is_empty() {
            for line in String::from_utf8(out.stdout).unwrap().lines() {
                serde_json::from_str::<Value>(line)
                    .unwrap_or_else(|_| panic!("{args:?} printed non-JSON: {line}"));
            }
        }
    }
}
