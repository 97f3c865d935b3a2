use std::path::Path;
use std::process::{Command, Output, Stdio};
use std::time::Duration;

use proptest::prelude::*;
use tmx::{parse_args, Command as Cmd, MeshSource, RunConfig};

fn tmx(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tmx")).current_dir(dir).args(args).output().unwrap()
}

const SCAN: &[&str] = &[
    "scan", "--mesh", "disk:2", "--levels", "1", "--p", "2", "--lambdas", "0,1", "--seeds", "random:2;eigen",
    "--rng-seed", "11",
];

#[test]
fn scan_writes_csv_and_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = tmx(dir.path(), SCAN);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("scan.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("lambda,J_best,margin,peak_c,attained,inconclusive"));
    assert_eq!(lines.count(), 2);
    let cfg = std::fs::read_to_string(dir.path().join("scan.csv.config")).unwrap();
    let back = RunConfig::from_text(&cfg).unwrap();
    assert_eq!(back.lambdas, vec![0.0, 1.0]);
    assert_eq!(back.rng_seed, 11);
}

#[test]
fn same_seed_gives_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let mut args = SCAN.to_vec();
        args.extend(["--out", name]);
        assert_eq!(tmx(dir.path(), &args).status.code(), Some(0));
        std::fs::read(dir.path().join(name)).unwrap()
    };
    assert_eq!(run("a.csv"), run("b.csv"));
}

#[test]
fn rerun_from_config_sidecar_reproduces_output() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(tmx(dir.path(), SCAN).status.code(), Some(0));
    let out = tmx(dir.path(), &["scan", "--config", "scan.csv.config", "--out", "again.csv"]);
    assert_eq!(out.status.code(), Some(0));
    let a = std::fs::read(dir.path().join("scan.csv")).unwrap();
    let b = std::fs::read(dir.path().join("again.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(tmx(dir.path(), &["maximize", "--lambda", "abc"]).status.code(), Some(2));
    assert_eq!(tmx(dir.path(), &["maximize", "--mesh", "disk:2", "--mesh-file", "x"]).status.code(), Some(2));
    assert_eq!(tmx(dir.path(), &["--help"]).status.code(), Some(0));
    assert_eq!(tmx(dir.path(), &["verify", "--mesh", "disk:2"]).status.code(), Some(0));
    let bad_threads = Command::new(env!("CARGO_BIN_EXE_tmx"))
        .current_dir(dir.path())
        .env("TMX_THREADS", "0")
        .args(["mesh", "--mesh", "disk:1"])
        .output()
        .unwrap();
    assert_eq!(bad_threads.status.code(), Some(2));
    let missing = tmx(dir.path(), &["potential", "--mesh", "no-such.tmmesh"]);
    assert_eq!(missing.status.code(), Some(1));
    assert!(dir.path().join("potential.json.error.json").exists());
}

#[test]
fn unconverged_maximize_keeps_partial_result() {
    let dir = tempfile::tempdir().unwrap();
    let out = tmx(dir.path(), &["maximize", "--mesh", "disk:2", "--max-iters", "2", "--out", "m.json"]);
    assert_eq!(out.status.code(), Some(1));
    let res: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("m.json")).unwrap()).unwrap();
    assert_eq!(res["converged"], false);
    assert_eq!(res["result"]["termination"], "max_iterations");
    let diag: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("m.json.error.json")).unwrap()).unwrap();
    assert_eq!(diag["exit_code"], 1);
    assert!(dir.path().join("m.json.field.txt").exists());
}

#[test]
fn killed_runs_leave_no_partial_files() {
    let dir = tempfile::tempdir().unwrap();
    let reference = {
        let mut args = SCAN.to_vec();
        args.extend(["--out", "ref.csv"]);
        assert_eq!(tmx(dir.path(), &args).status.code(), Some(0));
        std::fs::read(dir.path().join("ref.csv")).unwrap()
    };
    for (i, ms) in [0u64, 5, 20, 60, 150, 400].into_iter().enumerate() {
        let name = format!("k{i}.csv");
        let mut args = SCAN.to_vec();
        args.extend(["--out", &name]);
        let mut child = Command::new(env!("CARGO_BIN_EXE_tmx"))
            .current_dir(dir.path())
            .args(&args)
            .stdout(Stdio::null())
            .stderr(Stdio::null())
            .spawn()
            .unwrap();
        std::thread::sleep(Duration::from_millis(ms));
        let _ = child.kill();
        let _ = child.wait();
        if let Ok(bytes) = std::fs::read(dir.path().join(&name)) {
            assert_eq!(bytes, reference, "kill after {ms} ms left a partial file");
        }
    }
}

#[test]
fn thread_cap_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let run = |threads: &str, name: &str| {
        let mut args = SCAN.to_vec();
        args.extend(["--out", name]);
        let out = Command::new(env!("CARGO_BIN_EXE_tmx"))
            .current_dir(dir.path())
            .env("TMX_THREADS", threads)
            .args(&args)
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0));
        std::fs::read(dir.path().join(name)).unwrap()
    };
    assert_eq!(run("1", "t1.csv"), run("3", "t3.csv"));
}

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![-1e6..1e6f64, Just(0.1 + 0.2), Just(1.0 / 3.0), Just(f64::MIN_POSITIVE)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn config_text_round_trips(
        cmd in 0usize..8,
        lambda in finite(),
        p in 1.0..6.0f64,
        tol in 1e-12..1e-2f64,
        seed in any::<u64>(),
        level in 0i32..7,
        rect in proptest::option::of((0.1..5.0f64, 0.1..5.0f64, 1usize..50, 1usize..50)),
        margin in proptest::option::of(finite()),
        energy in proptest::option::of(1.0..1e4f64),
        ks in proptest::collection::vec(1.0..20.0f64, 1..5),
        center in proptest::option::of((-1.0..1.0f64, -1.0..1.0f64)),
    ) {
        let mut c = RunConfig::new(Cmd::ALL[cmd]);
        c.params.lambda = lambda;
        c.params.p = p;
        c.el_tol = tol;
        c.rng_seed = seed;
        c.mesh = match rect {
            Some((w, h, nx, ny)) => MeshSource::Rect { width: w, height: h, nx, ny },
            None => MeshSource::Disk { level },
        };
        c.margin_min = margin;
        c.energy = energy;
        c.bubble_ks = ks;
        c.center = center.map(|(x, y)| [x, y]);
        let text = c.to_text();
        let back = RunConfig::from_text(&text).unwrap();
        prop_assert_eq!(&back, &c);
        prop_assert_eq!(back.to_text(), text);
    }
}

#[test]
fn flag_overrides_survive_sidecar() {
    let c = parse_args(["tmx", "radial", "--gamma", "7.5", "--E", "auto", "--delta", "0.25"]).unwrap();
    let back = RunConfig::from_text(&c.to_text()).unwrap();
    assert_eq!(back, c);
    assert_eq!(back.energy, None);
}
