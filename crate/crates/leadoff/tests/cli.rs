use std::path::{Path, PathBuf};
use std::process::Command;

use leadoff::text::sha256_file;
use tempfile::TempDir;

const COARSE: &str = "0:20:1";

fn fixture(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name).display().to_string()
}

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

fn leadoff(args: &[&str]) -> Run {
    let out = Command::new(env!("CARGO_BIN_EXE_leadoff")).args(args).output().unwrap();
    Run {
        code: out.status.code().unwrap(),
        stdout: String::from_utf8(out.stdout).unwrap(),
        stderr: String::from_utf8(out.stderr).unwrap(),
    }
}

fn ok(args: &[&str]) -> Run {
    let r = leadoff(args);
    assert_eq!(r.code, 0, "{args:?}\n{}", r.stderr);
    r
}

fn p(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).display().to_string()
}

fn build(dir: &TempDir, name: &str, mode: &str, grid: &str) -> String {
    let out = p(dir, name);
    let (gen, coeffs) = (fixture("generator.json"), fixture("coeffs.json"));
    ok(&["build-transitions", "--ground-truth", &gen, "--coeffs", &coeffs, "--mode", mode, "--grid", grid, "--out", &out]);
    out
}

fn values(path: &str) -> Vec<f64> {
    let text = std::fs::read_to_string(path).unwrap();
    let body = text.split_once("\nstates 869\n").unwrap().1;
    body.lines().map(|l| l.split(' ').nth(2).unwrap().parse().unwrap()).collect()
}

fn report_field(path: &str, key: &str) -> String {
    let text = std::fs::read_to_string(path).unwrap();
    text.lines().find_map(|l| l.strip_prefix(&format!("{key} "))).unwrap().to_string()
}

fn max_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn build_requires_coefficients() {
    let dir = TempDir::new().unwrap();
    let r = leadoff(&["build-transitions", "--ground-truth", &fixture("generator.json"), "--mode", "two-player", "--out", &p(&dir, "k")]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("--coeffs"));
}

#[test]
fn mode_is_recorded_in_kernel_and_solution() {
    let dir = TempDir::new().unwrap();
    let k = build(&dir, "k.txt", "one-player", COARSE);
    let s = p(&dir, "s.txt");
    ok(&["solve", "--kernel", &k, "--out", &s]);
    assert_eq!(report_field(&k, "mode"), "one-player");
    assert_eq!(report_field(&s, "mode"), "one-player");
}

#[test]
fn value_and_policy_iteration_agree() {
    let dir = TempDir::new().unwrap();
    let k = build(&dir, "k.txt", "two-player", COARSE);
    let (vi, pi) = (p(&dir, "vi.txt"), p(&dir, "pi.txt"));
    ok(&["solve", "--kernel", &k, "--method", "vi", "--out", &vi]);
    ok(&["solve", "--kernel", &k, "--method", "pi", "--out", &pi]);
    assert!(max_gap(&values(&vi), &values(&pi)) < 1e-8);
}

#[test]
fn loose_tolerance_stays_close() {
    let dir = TempDir::new().unwrap();
    let k = build(&dir, "k.txt", "two-player", COARSE);
    let (loose, tight) = (p(&dir, "a.txt"), p(&dir, "b.txt"));
    ok(&["solve", "--kernel", &k, "--tol", "1e-4", "--out", &loose]);
    ok(&["solve", "--kernel", &k, "--tol", "1e-10", "--out", &tight]);
    assert!(max_gap(&values(&loose), &values(&tight)) < 1e-3);
}

#[test]
fn refused_kernel_exits_4() {
    let dir = TempDir::new().unwrap();
    let (gen, coeffs, out) = (fixture("generator.json"), fixture("coeffs.json"), p(&dir, "k.txt"));
    let r = leadoff(&[
        "build-transitions", "--ground-truth", &gen, "--coeffs", &coeffs, "--mode", "two-player", "--grid", COARSE,
        "--halting-m", "1", "--out", &out,
    ]);
    assert_eq!(r.code, 4, "{}", r.stderr);
    assert!(r.stdout.contains("halting m 1"));
}

#[test]
fn iteration_cap_exits_3_with_partial_output() {
    let dir = TempDir::new().unwrap();
    let k = build(&dir, "k.txt", "two-player", COARSE);
    let s = p(&dir, "s.txt");
    let r = leadoff(&["solve", "--kernel", &k, "--max-iters", "5", "--out", &s]);
    assert_eq!(r.code, 3);
    assert_eq!(report_field(&s, "converged"), "false");
    assert_eq!(report_field(&s, "iterations"), "5");
}

#[test]
fn tables() {
    let dir = TempDir::new().unwrap();
    let k = build(&dir, "k.txt", "two-player", COARSE);
    let s = p(&dir, "s.txt");
    ok(&["solve", "--kernel", &k, "--out", &s]);

    assert_eq!(leadoff(&["tables", "--solution", &s, "--by", "innings"]).code, 2);

    let outs = ok(&["tables", "--solution", &s, "--by", "outs", "--format", "csv"]).stdout;
    let rows: Vec<&str> = outs.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "outs,d0,d1,d2");
    assert_eq!(rows.len(), 4);
    assert!(rows[1..].iter().all(|r| r.split(',').count() == 4));

    let count = ok(&["tables", "--solution", &s, "--by", "count", "--outs", "2"]).stdout;
    assert_eq!(count.lines().filter(|l| l.contains('-') && !l.starts_with('#')).count(), 12);

    let (gen, coeffs) = (fixture("generator.json"), fixture("coeffs.json"));
    let players = ok(&["tables", "--solution", &s, "--by", "players", "--coeffs", &coeffs, "--ground-truth", &gen]).stdout;
    assert_eq!(players.lines().filter(|l| l.starts_with('#')).count(), 9);
}

#[test]
fn two_foot_report() {
    let dir = TempDir::new().unwrap();
    let k = build(&dir, "k.txt", "one-player", COARSE);
    let s = p(&dir, "s.txt");
    ok(&["solve", "--kernel", &k, "--out", &s]);
    let out = ok(&["two-foot", "--solution", &s]).stdout;
    assert!(!out.is_empty());
    assert!(!ok(&["two-foot", "--solution", &s, "--format", "csv"]).stdout.contains("  "));
}

#[test]
fn seeded_runs_are_reproducible() {
    let dir = TempDir::new().unwrap();
    let k = build(&dir, "k.txt", "two-player", COARSE);
    let s = p(&dir, "s.txt");
    ok(&["solve", "--kernel", &k, "--out", &s]);
    let sim = |name: &str| {
        let out = p(&dir, name);
        ok(&["simulate", "--kernel", &k, "--solution", &s, "--innings", "5000", "--seed", "7", "--out", &out]);
        std::fs::read(out).unwrap()
    };
    assert_eq!(sim("r1.txt"), sim("r2.txt"));

    let (cfg, coeffs) = (fixture("generator.json"), fixture("coeffs.json"));
    let gen = |name: &str| {
        let out = p(&dir, name);
        ok(&["generate", "--config", &cfg, "--coeffs", &coeffs, "--innings", "300", "--seed", "9", "--out", &out]);
        std::fs::read(out).unwrap()
    };
    assert_eq!(gen("g1.csv"), gen("g2.csv"));
}

#[test]
fn outputs_carry_their_manifest_hash() {
    let dir = TempDir::new().unwrap();
    let k = build(&dir, "k.txt", "two-player", COARSE);
    let s = p(&dir, "s.txt");
    ok(&["solve", "--kernel", &k, "--out", &s]);
    let r = p(&dir, "r.txt");
    ok(&["simulate", "--kernel", &k, "--solution", &s, "--innings", "1000", "--out", &r]);
    for out in [&k, &s, &r] {
        let manifest = PathBuf::from(format!("{out}.manifest.json"));
        assert_eq!(report_field(out, "manifest"), sha256_file(&manifest).unwrap(), "{out}");
    }
    assert_eq!(report_field(&s, "kernel"), sha256_file(Path::new(&k)).unwrap());
    let json = std::fs::read_to_string(format!("{s}.manifest.json")).unwrap();
    assert!(json.contains(&sha256_file(Path::new(&k)).unwrap()));
}

/// The empirical lead mix replayed on a kernel estimated from the same corpus
/// should score about what the corpus itself scored.
#[test]
fn empirical_policy_matches_corpus_scoring() {
    let dir = TempDir::new().unwrap();
    let (cfg, coeffs) = (fixture("generator.json"), fixture("coeffs.json"));
    let plays = p(&dir, "plays.csv");
    ok(&["generate", "--config", &cfg, "--coeffs", &coeffs, "--innings", "30000", "--seed", "5", "--out", &plays]);
    let k = p(&dir, "k.txt");
    ok(&["build-transitions", "--plays", &plays, "--coeffs", &coeffs, "--mode", "one-player", "--out", &k]);
    let r = p(&dir, "r.txt");
    ok(&["simulate", "--kernel", &k, "--policy", "empirical", "--plays", &plays, "--innings", "30000", "--seed", "3", "--out", &r]);

    // runs per inning straight from the corpus
    let text = std::fs::read_to_string(&plays).unwrap();
    let (mut innings, mut current) = (Vec::new(), 0.0);
    for line in text.lines().skip(2) {
        let f: Vec<&str> = line.split(',').collect();
        current += f[15].parse::<f64>().unwrap();
        if f[14] == "1" {
            innings.push(current);
            current = 0.0;
        }
    }
    let n = innings.len() as f64;
    let mean = innings.iter().sum::<f64>() / n;
    let se = (innings.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt();

    let line = report_field(&r, "mean");
    let (sim_mean, sim_se) = line.split_once(" +/- ").unwrap();
    let (sim_mean, sim_se): (f64, f64) = (sim_mean.parse().unwrap(), sim_se.parse().unwrap());
    assert!((sim_mean - mean).abs() < 4.0 * (se * se + sim_se * sim_se).sqrt(), "{sim_mean} vs corpus {mean}");
    assert_eq!(report_field(&r, "agreement"), "ok");
}
