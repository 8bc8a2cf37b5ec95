use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_bbit");

const TOY: &str = "\
+1 1:1 2:1 3:1
-1 4:1 5:1 6:1
+1 1:1 2:1 7:1
";

fn bbit(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn value<'a>(text: &'a str, key: &str) -> &'a str {
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key}=")))
        .unwrap_or_else(|| panic!("no {key} in\n{text}"))
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).to_str().unwrap().to_string()
}

#[test]
fn sketch_train_predict() {
    let dir = tempfile::tempdir().unwrap();
    let data = path(dir.path(), "toy.svm");
    std::fs::write(&data, TOY).unwrap();
    let (sk, sk2, model) = (
        path(dir.path(), "a.sk"),
        path(dir.path(), "b.sk"),
        path(dir.path(), "m"),
    );

    let s = stdout(&bbit(&[
        "sketch", "--input", &data, "--output", &sk, "--k", "3", "--b", "2",
    ]));
    assert_eq!(value(&s, "n"), "3");
    assert_eq!(value(&s, "payload_bytes"), "3");
    stdout(&bbit(&[
        "sketch", "--input", &data, "--output", &sk2, "--k", "3", "--b", "2",
    ]));
    assert_eq!(std::fs::read(&sk).unwrap(), std::fs::read(&sk2).unwrap());

    let t = stdout(&bbit(&[
        "train", "--input", &sk, "--output", &model, "--C", "10",
    ]));
    assert_eq!(value(&t, "features"), "sketch");
    assert_eq!(value(&t, "train_accuracy"), "1.000000");

    for input in [&sk, &data] {
        let p = stdout(&bbit(&["predict", "--model", &model, "--input", input]));
        assert_eq!(value(&p, "accuracy"), "1.000000");
        assert!(p.lines().filter(|l| l.starts_with("sample=")).count() == 3);
        value(&p, "load_seconds");
        value(&p, "compute_seconds");
    }

    // same data, different family seed: refused
    let other = path(dir.path(), "c.sk");
    stdout(&bbit(&[
        "sketch", "--input", &data, "--output", &other, "--k", "3", "--b", "2", "--seed", "1",
    ]));
    let o = bbit(&["predict", "--model", &model, "--input", &other]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.starts_with("error[E_MISMATCH]:"), "{err}");
    assert_eq!(err.trim_end().lines().count(), 1);

    // different b: refused as well
    stdout(&bbit(&[
        "sketch", "--input", &data, "--output", &other, "--k", "3", "--b", "4",
    ]));
    assert_eq!(
        bbit(&["predict", "--model", &model, "--input", &other])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn raw_training_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let data = path(dir.path(), "toy.svm");
    std::fs::write(&data, TOY).unwrap();
    let (m1, m2) = (path(dir.path(), "m1"), path(dir.path(), "m2"));
    let t = stdout(&bbit(&[
        "train", "--input", &data, "--output", &m1, "--seed", "5",
    ]));
    assert_eq!(value(&t, "features"), "raw");
    assert_eq!(value(&t, "train_accuracy"), "1.000000");
    stdout(&bbit(&[
        "train", "--input", &data, "--output", &m2, "--seed", "5",
    ]));
    assert_eq!(std::fs::read(&m1).unwrap(), std::fs::read(&m2).unwrap());
}

#[test]
fn estimate_reports_theory_and_bands() {
    // r1 = r2 = 1/2 and R = 1/2 at b = 1 gives P = 2/3
    let s = stdout(&bbit(&[
        "estimate",
        "--set1",
        "0,1,2,3",
        "--set2",
        "2,3,4,5",
        "--universe-size",
        "8",
        "--k",
        "50",
        "--b",
        "1",
    ]));
    assert_eq!(value(&s, "R_exact"), "0.333333333");
    let s = stdout(&bbit(&[
        "estimate",
        "--set1",
        "0,1,2,3,4,5",
        "--set2",
        "2,3,4,5,6,7",
        "--universe-size",
        "12",
        "--k",
        "50",
        "--b",
        "1",
    ]));
    assert_eq!(value(&s, "R_exact"), "0.500000000");
    assert_eq!(value(&s, "P_b_theory"), "0.666666667");
    assert!(value(&s, "R_bbit").contains("band="));

    let same = stdout(&bbit(&[
        "estimate", "--set1", "1,4", "--set2", "4,1", "--k", "20", "--b", "3",
    ]));
    assert_eq!(value(&same, "R_exact"), "1.000000000");
    assert_eq!(value(&same, "P_b_theory"), "1.000000000");
}

#[test]
fn kernel_check_prints_kind_order_and_eigenvalue() {
    let dir = tempfile::tempdir().unwrap();
    let data = path(dir.path(), "toy.svm");
    std::fs::write(&data, TOY).unwrap();
    for kind in ["resemblance", "minwise", "bbit", "expanded"] {
        let s = stdout(&bbit(&[
            "kernel-check",
            "--input",
            &data,
            "--kind",
            kind,
            "--k",
            "16",
            "--b",
            "2",
        ]));
        assert_eq!(value(&s, "order"), "3");
        assert_eq!(value(&s, "psd"), "true");
        value(&s, "min_eigenvalue").parse::<f64>().unwrap();
    }
}

#[test]
fn bench_enforces_two_trials_and_reports_cells() {
    let dir = tempfile::tempdir().unwrap();
    let data = path(dir.path(), "toy.svm");
    let mut text = String::new();
    for i in 0..30 {
        let (y, base) = if i % 2 == 0 { ("+1", 1) } else { ("-1", 20) };
        text.push_str(&format!(
            "{y} {}:1 {}:1 {}:1 {}:1\n",
            base,
            base + 1,
            base + 2 + i % 5,
            40 + i
        ));
    }
    std::fs::write(&data, text).unwrap();
    let o = bbit(&[
        "bench", "--input", &data, "--trials", "1", "--b", "2", "--k", "8",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8(o.stderr)
        .unwrap()
        .starts_with("error[E_PARAM]:"));

    let s = stdout(&bbit(&[
        "bench", "--input", &data, "--trials", "2", "--b", "2,8", "--k", "8,16", "--C", "1",
    ]));
    assert_eq!(s.lines().filter(|l| l.starts_with("cell ")).count(), 5);
    assert!(s.contains("cell features=hashed b=8 k=16 C=1 mean_accuracy="));
    assert!(s.contains("trend b=2 C=1 monotone_in_k="));
}

#[test]
fn errors_are_single_line_with_codes() {
    let o = bbit(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8(o.stderr)
        .unwrap()
        .starts_with("error[E_USAGE]:"));

    let dir = tempfile::tempdir().unwrap();
    let bad = path(dir.path(), "bad.svm");
    std::fs::write(&bad, "+1 1:1\n-1 0:1\n").unwrap();
    let o = bbit(&[
        "sketch",
        "--input",
        &bad,
        "--output",
        &path(dir.path(), "x"),
        "--k",
        "2",
    ]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(
        err.starts_with("error[E_PARSE]:") && err.contains("bad.svm") && err.contains("line 2"),
        "{err}"
    );

    let missing = bbit(&["train", "--input", "/definitely/not/here", "--output", "m"]);
    assert_eq!(missing.status.code(), Some(2));
    assert!(String::from_utf8(missing.stderr)
        .unwrap()
        .starts_with("error[E_IO]:"));
}
