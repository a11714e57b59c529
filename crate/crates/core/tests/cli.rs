use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_approxvar"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("run binary")
}

fn write_csv(dir: &Path, name: &str, values: &[f64]) -> String {
    let mut text = String::from("t,v\n");
    for (i, v) in values.iter().enumerate() {
        text.push_str(&format!("{i},{v}\n"));
    }
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn var_reports_variation_and_oscillation() {
    let dir = tempfile::tempdir().unwrap();
    for (values, expect) in [
        (&[0.0, 1.0, 2.0, 3.0][..], "p=0: V=3 osc=3"),
        (&[1.0, 1.0, 1.0][..], "p=0: V=0 osc=0"),
        (&[0.0, 2.0, 0.0][..], "p=0: V=4 osc=2"),
    ] {
        let input = write_csv(dir.path(), "f.csv", values);
        let o = run(&dir.path().join("out"), &["var", "--input", &input]);
        assert!(o.status.success());
        assert_eq!(String::from_utf8(o.stdout).unwrap().trim(), expect);
    }
    let csv = fs::read_to_string(dir.path().join("out/var.csv")).unwrap();
    assert_eq!(csv, "p,t,prefix\n0,0,0\n0,1,2\n0,2,4\n");
}

#[test]
fn profile_csv_columns_and_values() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_csv(dir.path(), "f.csv", &[0.0, 2.0, 0.0]);
    let out = dir.path().join("out");
    let o = run(
        &out,
        &["profile", "--input", &input, "--eps", "2,1,0.5,0.1", "--witness"],
    );
    assert!(o.status.success());
    let csv = fs::read_to_string(out.join("profile_p0.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("eps,lower,upper,exact"));
    let expected = [0.0, 0.0, 2.0, 3.6];
    for (line, want) in lines.zip(expected) {
        let cols: Vec<&str> = line.split(',').collect();
        let lower: f64 = cols[1].parse().unwrap();
        let upper: f64 = cols[2].parse().unwrap();
        assert!(
            (lower - want).abs() < 1e-9 && lower == upper && cols[3] == "true",
            "{line}"
        );
    }
    assert!(out.join("witness_p0_e3.csv").exists());
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("profile.json")).unwrap()).unwrap();
    assert_eq!(json["profiles"][0]["brackets"].as_array().unwrap().len(), 4);
}

#[test]
fn finite_space_profile_brackets() {
    let dir = tempfile::tempdir().unwrap();
    let space = r#"{"kind":"finite","points":["a","b"],"metrics":[[[0,1],[1,0]]]}"#;
    let mut text = String::from("t,idx\n");
    for i in 0..9 {
        text.push_str(&format!("{i},{}\n", i % 2));
    }
    let input = dir.path().join("f.csv");
    fs::write(&input, text).unwrap();
    let out = dir.path().join("out");
    let o = run(
        &out,
        &[
            "profile",
            "--input",
            input.to_str().unwrap(),
            "--space",
            space,
            "--eps",
            "1,0.4",
        ],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("profile_p0.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    // at eps = 1 one point covers both; below it the tube around each value
    // is that value alone, so the only path is f itself
    assert_eq!(rows[0], "1,0,0,true");
    let cols: Vec<f64> = rows[1].split(',').take(3).map(|c| c.parse().unwrap()).collect();
    assert!((cols[1] - 1.6).abs() < 1e-9 && cols[2] == 8.0, "{}", rows[1]);
}

#[test]
fn select_exit_codes_follow_the_outcome() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    assert_eq!(
        run(&out, &["select", "--family", "constant", "--eps", "0.5,0.1"])
            .status
            .code(),
        Some(0)
    );

    let o = run(
        &out,
        &["select", "--family", "factorial", "--eps", "0.25", "--probe", "5"],
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8(o.stdout)
        .unwrap()
        .starts_with("Diverging at (ε=0.25, p=0)"));

    let o = run(
        &out,
        &[
            "select",
            "--family",
            "shrinking-gap",
            "--eps",
            "0.5,0.25,0.1",
            "--probe",
            "48",
        ],
    );
    assert_eq!(o.status.code(), Some(0));
    let limit = fs::read_to_string(out.join("limit.csv")).unwrap();
    for line in limit.lines().skip(1) {
        let v: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert!(v.abs() <= 1e-12, "{line}");
    }
}

#[test]
fn select_from_a_directory() {
    let dir = tempfile::tempdir().unwrap();
    let fam = dir.path().join("fam");
    fs::create_dir(&fam).unwrap();
    // gap halves until it closes at j = 4
    for j in 1..=8 {
        let h = if j < 4 { 0.5f64.powi(j) } else { 0.0 };
        write_csv(&fam, &format!("f{j:02}.csv"), &[h, -h, h, -h, h]);
    }
    let o = run(
        &dir.path().join("out"),
        &["select", "--family", fam.to_str().unwrap(), "--eps", "0.5,0.25,0.1"],
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
}

#[test]
fn input_errors_exit_one_with_line_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    fs::write(&path, "t,v\n0,0\n1,x\n").unwrap();
    let o = run(&dir.path().join("out"), &["var", "--input", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8(o.stderr).unwrap().contains("bad.csv:3"));

    let o = run(
        &dir.path().join("out"),
        &["profile", "--input", path.to_str().unwrap(), "--eps", "0.1,0.5"],
    );
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn check_reports_are_reproducible_across_job_counts() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert!(run(&a, &["check", "unif", "--seed", "3", "--jobs", "1"])
        .status
        .success());
    assert!(run(&b, &["check", "unif", "--seed", "3", "--jobs", "4"])
        .status
        .success());
    assert_eq!(
        fs::read(a.join("check.json")).unwrap(),
        fs::read(b.join("check.json")).unwrap()
    );
}

#[test]
fn output_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_csv(dir.path(), "f.csv", &[0.0, 1.0]);
    let o = Command::new(env!("CARGO_BIN_EXE_approxvar"))
        .args(["step-approx", "--input", &input, "--eps", "0.25"])
        .env("APPROXVAR_OUT", dir.path().join("env-out"))
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(dir.path().join("env-out/step_p0_e0.csv").exists());
}
