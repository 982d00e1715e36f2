use std::process::Command;

fn randgp() -> Command {
    Command::new(env!("CARGO_BIN_EXE_randgp"))
}

#[test]
fn same_seed_same_csv() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for dir in [&a, &b] {
        let st = randgp()
            .args(["run", "thm1-ratio", "--d", "1", "--alpha", "0.5", "--cutoffs", "4,8", "--samples", "5", "--seed", "7"])
            .arg("--out")
            .arg(dir.path())
            .status()
            .unwrap();
        assert!(st.success());
    }
    let ca = std::fs::read(a.path().join("thm1-ratio.csv")).unwrap();
    let cb = std::fs::read(b.path().join("thm1-ratio.csv")).unwrap();
    assert_eq!(ca, cb);
    let text = String::from_utf8(ca).unwrap();
    assert_eq!(text.lines().count(), 1 + 2 * 5);
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(a.path().join("thm1-ratio.json")).unwrap()).unwrap();
    assert_eq!(json["header"]["config.seed"], "7");
}

#[test]
fn config_file_round_trip_and_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("c.cfg");
    std::fs::write(&p, "# decay\nmode = dependent\nseed = 0x1f\nn_max = 3\n").unwrap();
    let out = randgp().args(["config", "duhamel-decay", "--n-max", "2"]).arg("--config").arg(&p).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("seed = 31\n"));
    assert!(text.contains("n_max = 2\n"));
    assert!(text.contains("mode = dependent\n"));
    let q = dir.path().join("d.cfg");
    std::fs::write(&q, &text).unwrap();
    let again = randgp().args(["config", "duhamel-decay"]).arg("--config").arg(&q).output().unwrap();
    assert_eq!(String::from_utf8(again.stdout).unwrap(), text);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(randgp().args(["run", "nope"]).status().unwrap().code(), Some(2));
    assert_eq!(randgp().args(["run", "thm1-ratio", "--seed", "x"]).status().unwrap().code(), Some(2));
    assert_eq!(randgp().args(["frobnicate"]).status().unwrap().code(), Some(2));
    // Diagonal data with α above d/4 fails the bounded-ratio check.
    let st = randgp()
        .args(["run", "thm1-ratio", "--alpha", "0.3", "--ensemble", "diagonal", "--beta", "0", "--cutoffs", "2,8"])
        .args(["--samples", "3", "--assert", "--out"])
        .arg(dir.path())
        .status()
        .unwrap();
    assert_eq!(st.code(), Some(3));
}

#[test]
fn dump_term_is_readable() {
    let dir = tempfile::tempdir().unwrap();
    let term = dir.path().join("sigma.txt");
    let st = randgp()
        .args(["run", "duhamel-decay", "--n-max", "2", "--out"])
        .arg(dir.path())
        .arg("--dump-term")
        .arg(&term)
        .status()
        .unwrap();
    assert!(st.success());
    let g = randgp::textfmt::from_text(&std::fs::read_to_string(&term).unwrap()).unwrap();
    assert_eq!(g.order(), 1);
}

#[test]
fn out_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let st = randgp()
        .args(["run", "pairing-oracle", "--samples", "3"])
        .env(randgp::harness::OUT_ENV, dir.path())
        .status()
        .unwrap();
    assert!(st.success());
    assert!(dir.path().join("pairing-oracle.csv").exists());
}
