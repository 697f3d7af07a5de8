use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn prase(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_prase"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn synth(dir: &Path) {
    let out = prase(&[
        "synth",
        "--out",
        dir.to_str().unwrap(),
        "--entities",
        "200",
        "--triple-drop",
        "0.2",
        "--seed",
        "3",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn paris_then_eval() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    synth(&data);
    for f in [
        "rel_triples_1",
        "rel_triples_2",
        "attr_triples_1",
        "attr_triples_2",
        "ent_links",
    ] {
        assert!(data.join(f).is_file(), "{f}");
    }
    let maps = tmp.path().join("maps.tsv");
    let out = prase(&[
        "paris",
        "--data",
        data.to_str().unwrap(),
        "--out",
        maps.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report = fs::read_to_string(tmp.path().join("maps.tsv.report")).unwrap();
    assert!(report.contains("config.K=0\n"));

    let metrics = tmp.path().join("metrics.txt");
    let gold = data.join("ent_links");
    let out = prase(&[
        "eval",
        "--pred",
        maps.to_str().unwrap(),
        "--gold",
        gold.to_str().unwrap(),
        "--metrics",
        metrics.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let table = String::from_utf8(out.stdout).unwrap();
    assert!(table.contains("precision") && table.contains("recall") && table.contains("f1"));
    assert!(fs::read_to_string(metrics)
        .unwrap()
        .starts_with("precision="));
}

#[test]
fn overrides_beat_config_file() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    synth(&data);
    let cfg = tmp.path().join("run.conf");
    fs::write(
        &cfg,
        "# small trainer\nK=1\ntrainer.dim=8\ntrainer.epochs=5\nreasoner.beta=0.5\n",
    )
    .unwrap();
    let maps = tmp.path().join("maps.tsv");
    let out = prase(&[
        "align",
        "--data",
        data.to_str().unwrap(),
        "--out",
        maps.to_str().unwrap(),
        "--config",
        cfg.to_str().unwrap(),
        "--set",
        "K=3",
        "--set",
        "feedback_mode=embeddings_only",
        "--workers",
        "2",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report = fs::read_to_string(tmp.path().join("maps.tsv.report")).unwrap();
    for line in [
        "config.K=3",
        "config.feedback_mode=embeddings_only",
        "config.reasoner.beta=0.5",
        "config.trainer.epochs=5",
        "config.delta_f=0.1",
        "iter.3.pr_mappings=",
    ] {
        assert!(report.contains(line), "missing {line}");
    }
}

#[test]
fn str_match_writes_mappings() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    synth(&data);
    let maps = tmp.path().join("names.tsv");
    let out = prase(&[
        "str-match",
        "--data",
        data.to_str().unwrap(),
        "--out",
        maps.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(maps.is_file());
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("nowhere");
    let out_file = tmp.path().join("x.tsv");
    let (m, o) = (missing.to_str().unwrap(), out_file.to_str().unwrap());

    assert_eq!(prase(&["align", "--bogus"]).status.code(), Some(2));
    assert_eq!(prase(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(
        prase(&["align", "--data", m, "--out", o, "--set", "nonsense=1"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        prase(&["align", "--data", m, "--out", o, "--set", "delta_f=2"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        prase(&["align", "--data", m, "--out", o]).status.code(),
        Some(1)
    );
    assert_eq!(
        prase(&["align", "--data", m, "--out", o, "--config", m])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(prase(&["--help"]).status.code(), Some(0));
}
