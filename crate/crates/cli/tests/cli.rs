use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use baycv_core::io::read_report;

fn fixture(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(rel)
}

fn baycv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_baycv"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Model flags small enough for quick runs.
const QUICK: [&str; 6] = ["--samples", "2000", "--warmup", "1000", "--thin", "2"];

#[test]
fn split_is_deterministic_and_rejects_single_fold() {
    let (d1, d2) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let (p1, p2) = (d1.path().join("plan.txt"), d2.path().join("plan.txt"));
    for p in [&p1, &p2] {
        let out = baycv(&["split", "--n", "200", "--k", "10", "--m", "20", "--seed", "7", "--out", s(p)]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    }
    assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
    let manifest = std::fs::read_to_string(d1.path().join("plan.txt.manifest.txt")).unwrap();
    assert!(manifest.contains("seed = 7"));

    let bad = baycv(&["split", "--n", "200", "--k", "1", "--out", s(&d1.path().join("x.txt"))]);
    assert_eq!(code(&bad), 2);
}

#[test]
fn unknown_metric_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = baycv(&[
        "compare", "--scores", s(&fixture("scores/shift.csv")), "--a", "A", "--b", "B",
        "--metric", "bleu", "--rope", "0.01", "--out-dir", s(dir.path()),
    ]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("bleu"));
}

#[test]
fn missing_scores_file_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = baycv(&[
        "compare", "--scores", s(&dir.path().join("nope.csv")), "--a", "A", "--b", "B",
        "--metric", "token", "--rope", "0.01", "--out-dir", s(dir.path()),
    ]);
    assert_eq!(code(&out), 4);
}

#[test]
fn planted_shift_is_found_and_swapping_mirrors_it() {
    let dir = tempfile::tempdir().unwrap();
    let scores = fixture("scores/shift.csv");
    let mut triples = Vec::new();
    for (a, b, sub) in [("A", "B", "ab"), ("B", "A", "ba")] {
        let out_dir = dir.path().join(sub);
        let mut args = vec![
            "compare", "--scores", s(&scores), "--a", a, "--b", b,
            "--metric", "token", "--rope", "0.01", "--seed", "5", "--out-dir", s(&out_dir),
        ];
        args.extend(QUICK);
        let out = baycv(&args);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        for f in ["report.csv", "chains.csv", "chains.csv.meta", "manifest.txt"] {
            assert!(out_dir.join(f).exists(), "{f}");
        }
        let report = std::fs::read(out_dir.join("report.csv")).unwrap();
        let rows = read_report(report.as_slice(), "report.csv").unwrap();
        triples.push(rows[0].triple);
    }
    assert_eq!(triples[0].verdict.as_str(), "right");
    assert!(triples[0].p_right > 0.9, "{:?}", triples[0]);
    assert_eq!(triples[1].verdict.as_str(), "left");
    assert!(triples[1].p_left > 0.9, "{:?}", triples[1]);
}

fn rank(scores: &str, systems: Option<&str>) -> (Output, String) {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["rank", "--scores", scores, "--metric", "token", "--rope", "0.01", "--out-dir", s(dir.path())];
    if let Some(sys) = systems {
        args.extend(["--systems", sys]);
    }
    args.extend(QUICK);
    let out = baycv(&args);
    let text = std::fs::read_to_string(dir.path().join("ranking.txt")).unwrap_or_default();
    (out, text)
}

#[test]
fn three_systems_rank_with_a_tie() {
    let (out, text) = rank(s(&fixture("scores/rank3.csv")), None);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(text.contains("token: A ≈ B < C"), "{text}");
}

#[test]
fn six_systems_rank_in_planted_order() {
    let (out, text) = rank(s(&fixture("scores/rank6.csv")), None);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(text.contains("token: S1 < S2 < S3 < S4 < S5 < S6"), "{text}");
}

#[test]
fn ranking_one_system_is_a_usage_error() {
    let (out, _) = rank(s(&fixture("scores/rank3.csv")), Some("A"));
    assert_eq!(code(&out), 2);
}

fn compare_into(scores: &Path, a: &str, b: &str, out_dir: &Path) {
    let mut args = vec![
        "compare", "--scores", s(scores), "--a", a, "--b", b, "--metric", "token",
        "--rope", "0.01", "--seed", "2", "--out-dir", s(out_dir),
    ];
    args.extend(QUICK);
    let out = baycv(&args);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
}

fn circle_xs(svg: &str) -> Vec<f64> {
    svg.split("<circle")
        .skip(1)
        .map(|c| {
            let rest = &c[c.find("cx=\"").unwrap() + 4..];
            rest[..rest.find('"').unwrap()].parse().unwrap()
        })
        .collect()
}

#[test]
fn plot_is_reproducible_and_centres_a_null_comparison() {
    let dir = tempfile::tempdir().unwrap();
    compare_into(&fixture("scores/null.csv"), "A", "B", dir.path());
    let chains = dir.path().join("chains.csv");
    let report = dir.path().join("report.csv");
    let mut svgs = Vec::new();
    for name in ["one.svg", "two.svg"] {
        let out_path = dir.path().join(name);
        let out = baycv(&["plot", "--chains", s(&chains), "--report", s(&report), "--out", s(&out_path)]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        svgs.push(std::fs::read_to_string(&out_path).unwrap());
    }
    // the manifest comment names a per-output file, so compare past it
    let body = |svg: &str| svg.lines().filter(|l| !l.starts_with("<!-- manifest")).collect::<Vec<_>>().join("\n");
    assert_eq!(body(&svgs[0]), body(&svgs[1]));
    assert!(svgs[0].contains("<!-- manifest:"));

    let xs = circle_xs(&svgs[0]);
    assert!(!xs.is_empty());
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    // triangle side 500 centred in a 600 wide canvas
    assert!((mean - 300.0).abs() < 0.05 * 500.0, "mean cx {mean}");
}

#[test]
fn plot_of_a_clear_loss_hugs_the_left_corner() {
    let dir = tempfile::tempdir().unwrap();
    compare_into(&fixture("scores/shift.csv"), "B", "A", dir.path());
    let out_path = dir.path().join("p.svg");
    let out = baycv(&[
        "plot", "--chains", s(&dir.path().join("chains.csv")), "--rope", "0.01", "--out", s(&out_path),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let svg = std::fs::read_to_string(&out_path).unwrap();
    let xs = circle_xs(&svg);
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    assert!(mean < 300.0 - 200.0, "mean cx {mean}");
}

#[test]
fn single_dataset_uses_the_ttest() {
    let dir = tempfile::tempdir().unwrap();
    let scores = fixture("scores/shift.csv");
    let (hier_dir, out_dir) = (dir.path().join("h"), dir.path().join("t"));
    let base = [
        "compare", "--scores", s(&scores), "--a", "A", "--b", "B",
        "--metric", "token", "--rope", "0.01", "--dataset", "d0",
    ];
    let mut hier = base.to_vec();
    hier.extend(["--out-dir", s(&hier_dir)]);
    assert_eq!(code(&baycv(&hier)), 2);

    let mut tt = base.to_vec();
    tt.extend(["--model", "ttest", "--out-dir", s(&out_dir)]);
    let out = baycv(&tt);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let rows = read_report(std::fs::read(out_dir.join("report.csv")).unwrap().as_slice(), "r").unwrap();
    let t = &rows[0].triple;
    assert!((t.p_left + t.p_rope + t.p_right - 1.0).abs() < 1e-12);
    assert!(!out_dir.join("chains.csv").exists());
}

#[test]
fn ci95_rope_is_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let scores = fixture("scores/null.csv");
    let mut args = vec![
        "compare", "--scores", s(&scores), "--a", "A", "--b", "B",
        "--metric", "token", "--rope-ci95", "--out-dir", s(dir.path()),
    ];
    args.extend(QUICK);
    let out = baycv(&args);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let rows = read_report(std::fs::read(dir.path().join("report.csv")).unwrap().as_slice(), "r").unwrap();
    assert!(rows[0].rope_halfwidth > 0.0);
    let manifest = std::fs::read_to_string(dir.path().join("manifest.txt")).unwrap();
    assert!(manifest.contains("rope_halfwidth = "));
}
