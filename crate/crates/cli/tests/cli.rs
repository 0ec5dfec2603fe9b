use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn atlas(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_atlas"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Two disjoint triangles with labels and a 4/1/1 split.
fn triangles(dir: &Path) {
    fs::write(dir.join("edges.txt"), "# two triangles\n0 1\n1 2\n0 2\n3 4\n4 5\n3 5\n").unwrap();
    fs::write(dir.join("features.csv"), "0,1\n1,0\n0,0\n1,1\n0,1\n1,0\n").unwrap();
    fs::write(dir.join("labels.txt"), "0\n0\n0\n1\n1\n1\n").unwrap();
    fs::write(dir.join("masks.txt"), "train\ntrain\nval\ntrain\ntrain\ntest\n").unwrap();
}

const SMALL: &str = "synth.n = 300\nsynth.blocks = 3\nsynth.p_in = 0.1\nsynth.p_out = 0.005\n\
                     epochs = 8\nhidden = 16\nlayers = 2\nlr = 1e-2\ndropout = 0.2\nbatch = 64\n";

fn small_config(dir: &Path) -> String {
    let path = dir.join("small.cfg");
    fs::write(&path, SMALL).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn communities_matches_golden_table() {
    let dir = tempfile::tempdir().unwrap();
    triangles(dir.path());
    let out = dir.path().join("out");
    let o = atlas(&[
        "communities",
        "--data",
        s(dir.path()),
        "--resolutions",
        "1,0.5,2",
        "--out",
        s(&out),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o), include_str!("golden/communities_triangles.tsv"));
    let profile = fs::read_to_string(out.join("profile.tsv")).unwrap();
    assert!(profile.starts_with("#gamma\tQ\tK\tpartition_file\n"));
    let part = fs::read_to_string(out.join("partition_gamma_1.txt")).unwrap();
    assert!(part.starts_with("# gamma=1 Q=0.5 K=2\n"), "{part}");
}

#[test]
fn train_is_reproducible_from_config_and_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = atlas(&["train", "--config", &cfg, "--seeds", "3,4", "--out", s(out)]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    for name in [
        "train.tsv",
        "train_seed3.log",
        "train_seed4.log",
        "model_seed3.atlf",
        "profile_seed4/profile.tsv",
    ] {
        assert_eq!(
            fs::read(a.join(name)).unwrap(),
            fs::read(b.join(name)).unwrap(),
            "{name}"
        );
    }
    let table = fs::read_to_string(a.join("train.tsv")).unwrap();
    assert_eq!(table.lines().count(), 3);
    assert!(table.starts_with("#seed\t"));
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = dir.path().join("o");
    let o = atlas(&[
        "train",
        "--config",
        &cfg,
        "--epochs",
        "3",
        "--no-communities",
        "--seed",
        "1",
        "--out",
        s(&out),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let log = fs::read_to_string(out.join("train_seed1.log")).unwrap();
    assert_eq!(log.lines().count(), 1 + 3);
    let table = fs::read_to_string(out.join("train.tsv")).unwrap();
    assert!(table.lines().nth(1).unwrap().starts_with("1\t0\t"), "{table}");
}

#[test]
fn search_writes_profile_and_gaps() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = dir.path().join("o");
    let o = atlas(&[
        "search",
        "--config",
        &cfg,
        "--delta-max",
        "0.1",
        "--gap-range",
        "0.02,0.04",
        "--out",
        s(&out),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    for name in ["profile.tsv", "gaps.tsv", "search_steps.tsv"] {
        assert!(fs::read_to_string(out.join(name)).unwrap().starts_with('#'), "{name}");
    }

    let o = atlas(&["search", "--config", &cfg, "--qmin", "1.0", "--out", s(&out)]);
    assert!(o.status.success());
    assert!(stderr(&o).contains("no resolution reached"));
}

#[test]
fn sweep_with_one_threshold_has_one_row() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = dir.path().join("o");
    let o = atlas(&[
        "sweep-qmin",
        "--config",
        &cfg,
        "--q-mins",
        "0.3",
        "--seeds",
        "1,2",
        "--out",
        s(&out),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let table = fs::read_to_string(out.join("sweep_qmin.tsv")).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines[0], "#q_min\tT\tmean\tstd\tseed1\tseed2");
    assert_eq!(lines.len(), 2);
    assert!(lines[1].starts_with("0.3\t"));
}

#[test]
fn nmi_curve_columns() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = dir.path().join("o");
    let o = atlas(&["nmi-curve", "--config", &cfg, "--grid", "0.5,4,3", "--out", s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let table = fs::read_to_string(out.join("nmi_curve.tsv")).unwrap();
    assert_eq!(table.lines().next().unwrap(), "#gamma\tQ\tK\tNMI\tI\tH_C\tH_L\tH_C+H_L");
    assert_eq!(table.lines().count(), 4);
    for line in table.lines().skip(1) {
        assert_eq!(line.split('\t').count(), 8);
    }
}

#[test]
fn bench_reports_mean_and_std() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = dir.path().join("o");
    let o = atlas(&["bench", "--config", &cfg, "--epochs", "2", "--out", s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let table = fs::read_to_string(out.join("bench.tsv")).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines[0], "#preprocessing_s\tper_epoch_s\tinference_s");
    assert!(lines[1].split('\t').all(|c| c.contains('±')));
    let runs = fs::read_to_string(out.join("bench_runs.tsv")).unwrap();
    assert_eq!(runs.lines().count(), 1 + 5);

    let o = atlas(&["bench", "--config", &cfg, "--repetitions", "2", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    triangles(dir.path());
    let bad = dir.path().join("bad.cfg");
    fs::write(&bad, "learning_rate = 1\n").unwrap();
    let d = s(dir.path());
    let out = dir.path().join("o");
    let cases: Vec<Vec<&str>> = vec![
        vec!["train", "--config", s(&bad), "--data", d],
        vec!["communities", "--data", d, "--out", s(&out)],
        vec!["train", "--data", d, "--qmin", "1.5", "--out", s(&out)],
        vec!["train", "--data", d, "--gap-range", "0.1", "--out", s(&out)],
        vec!["train", "--out", s(&out)],
        vec!["train", "--config", "/no/such/file.cfg", "--data", d],
        vec!["frobnicate"],
    ];
    for args in cases {
        let o = atlas(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
    }
}

#[test]
fn data_errors_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    triangles(dir.path());
    fs::write(dir.path().join("edges.txt"), "0 1\n1 nine\n").unwrap();
    let out = dir.path().join("o");
    let o = atlas(&["search", "--data", s(dir.path()), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("edges.txt:2"), "{}", stderr(&o));

    let o = atlas(&["search", "--data", "/no/such/dataset", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(3));

    let empty = tempfile::tempdir().unwrap();
    triangles(empty.path());
    fs::remove_file(empty.path().join("labels.txt")).unwrap();
    let o = atlas(&[
        "nmi-curve",
        "--data",
        s(empty.path()),
        "--resolutions",
        "1",
        "--out",
        s(&out),
    ]);
    assert_eq!(o.status.code(), Some(3));
}
