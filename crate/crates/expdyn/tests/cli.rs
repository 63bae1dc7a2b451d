use std::process::Command;

fn expdyn(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_expdyn"))
        .args(args)
        .env("EXPDYN_THREADS", "2")
        .output()
        .unwrap()
}

fn json(path: &std::path::Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn supergrowth_report_is_versioned() {
    let out = expdyn(&["supergrowth", "--lambda", "1,0", "--c", "1", "--steps", "15"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["format_version"], 1);
    assert_eq!(v["holds"], true);
}

#[test]
fn ray_csv_has_the_documented_header() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ray.csv");
    let out = expdyn(&[
        "ray", "--lambda", "1,0", "--address", "0...const", "--t", "2:10:1", "--depth", "20", "--csv",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,re,im,depth,residual"));
    assert_eq!(lines.count(), 9);
}

#[test]
fn certify_pass_and_not_achieved_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cert.json");
    let base = ["certify", "--lambda", "1,0", "--set", "strip:0,3.141592653589793", "--m", "10", "--l0", "3", "--rmax", "30"];
    let mut args: Vec<&str> = base.to_vec();
    args.extend(["--delta", "0.5", "--json", path.to_str().unwrap()]);
    let out = expdyn(&args);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&path);
    assert_eq!(v["format_version"], 1);
    assert_eq!(v["pass"], true);
    for key in ["lambda", "c", "delta", "M", "l0", "r_range", "per_rectangle", "max_sum", "distortion_allowance"] {
        assert!(!v[key].is_null(), "missing {key}");
    }
    let mut args: Vec<&str> = base.to_vec();
    args.extend(["--delta", "0.01"]);
    assert_eq!(expdyn(&args).status.code(), Some(3));
}

#[test]
fn bad_input_exits_with_two() {
    assert_eq!(expdyn(&["orbit", "--lambda", "1", "--z", "0,0", "--steps", "3"]).status.code(), Some(2));
    assert_eq!(
        expdyn(&["supergrowth", "--lambda", "0,0", "--c", "1", "--steps", "5"]).status.code(),
        Some(2)
    );
    assert_eq!(
        expdyn(&["boxdim", "--points", "/nonexistent/p.csv", "--scales", "0.5:0.01:0.5"]).status.code(),
        Some(2)
    );
}

#[test]
fn unconverged_ray_exits_with_four() {
    let out = expdyn(&["ray", "--lambda", "1,0", "--address", "0...const", "--t", "2:3:1", "--depth", "1", "--tol", "1e-15"]);
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn lambdaset_outputs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let run = |threads: &str, tag: &str| {
        let pgm = dir.path().join(format!("{tag}.pgm"));
        let img = dir.path().join(format!("{tag}.ppm"));
        let out = Command::new(env!("CARGO_BIN_EXE_expdyn"))
            .args([
                "lambdaset", "--lambda", "1,0", "--set", "strip:0,3.141592653589793", "--window", "0,0,4,3.141592653589793",
                "--res", "40,30", "--depth", "6", "--pgm", pgm.to_str().unwrap(), "--image", img.to_str().unwrap(),
                "--palette", "fire",
            ])
            .env("EXPDYN_THREADS", threads)
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0));
        (std::fs::read(pgm).unwrap(), std::fs::read(img).unwrap())
    };
    assert_eq!(run("1", "a"), run("4", "b"));
}

#[test]
fn boxdim_and_searchbound_write_json() {
    let dir = tempfile::tempdir().unwrap();
    let pts = dir.path().join("p.csv");
    let mut text = String::from("re,im\n");
    for i in 0..2000 {
        text.push_str(&format!("{},0\n", i as f64 / 2000.0));
    }
    std::fs::write(&pts, text).unwrap();
    let out_json = dir.path().join("b.json");
    let out = expdyn(&[
        "boxdim", "--points", pts.to_str().unwrap(), "--scales", "0.25:0.0078125:0.5", "--json", out_json.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let slope = json(&out_json)["slope"].as_f64().unwrap();
    assert!((slope - 1.0).abs() < 0.05);

    let search = dir.path().join("s.json");
    let out = expdyn(&[
        "searchbound", "--lambda", "1,0", "--set", "strip:0,3.141592653589793", "--delta-grid", "0.5,0.3", "--m-grid",
        "5,10", "--json", search.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&search);
    assert!(v["bound_achieved"].as_f64().unwrap() <= 1.5);
    assert_eq!(v["scanned"].as_array().unwrap().len(), 4);
}
