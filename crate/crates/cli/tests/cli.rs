use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use ringform::analysis::w;
use ringform::dynamics::SystemState;
use ringform::sphere_geom::SphereAngles;
use serde_json::Value;
use tempfile::TempDir;

fn ringform(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ringform"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

fn run_with(verb: &str, config: &str, extra: &[&str]) -> (TempDir, Output) {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("exp.toml"), config).unwrap();
    let mut args = vec![verb, "--config", "exp.toml", "--out", "out"];
    args.extend_from_slice(extra);
    let out = ringform(dir.path(), &args);
    (dir, out)
}

fn summary(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

fn final_state_from_csv(csv: &str) -> SystemState {
    let header: Vec<&str> = csv.lines().next().unwrap().split(',').collect();
    let last: Vec<f64> = csv
        .lines()
        .last()
        .unwrap()
        .split(',')
        .map(|x| x.parse().unwrap())
        .collect();
    let n = header.iter().filter(|h| h.starts_with("psi_")).count();
    let angles: Vec<SphereAngles> = (0..n)
        .map(|i| SphereAngles::new(last[1 + i], last[1 + n + i]))
        .collect();
    SystemState::from_angles(&angles)
}

#[test]
fn six_agents_from_the_even_region_end_antipodal() {
    let (dir, out) = run_with(
        "simulate",
        "n = 6\ninit = \"random_in_omega_e\"\nseed = 1\n",
        &["--quiet"],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(out.stdout.is_empty());
    let s = summary(&dir.path().join("out"));
    assert_eq!(s["class"]["kind"], "Antipodal");
    assert!(s["spectrum"]["verdict"].is_string());
    assert_eq!(s["bounds"].as_array().unwrap().len(), 2);
}

#[test]
fn seven_agent_directed_ring_rotates_at_the_expected_rate() {
    let (dir, out) = run_with("simulate", "n = 7\ndirected = true\nseed = 1\n", &[]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(String::from_utf8_lossy(&out.stdout).contains("CyclicRotating"));
    let s = summary(&dir.path().join("out"));
    assert_eq!(s["class"]["kind"], "CyclicRotating");
    let mean = s["mean_omega"].as_f64().unwrap();
    assert!((0.433..=0.435).contains(&mean), "{mean}");
    assert!(s["spectrum"].is_null());
}

#[test]
fn reruns_reproduce_the_trajectory_table_byte_for_byte() {
    let config = "n = 5\nseed = 11\nt_end = 20.0\n";
    let (a, _) = run_with("simulate", config, &["--quiet"]);
    let (b, _) = run_with("simulate", config, &["--quiet"]);
    let read = |d: &TempDir, f: &str| fs::read(d.path().join("out").join(f)).unwrap();
    assert_eq!(read(&a, "trajectory.csv"), read(&b, "trajectory.csv"));
    assert_eq!(read(&a, "paths.svg"), read(&b, "paths.svg"));
}

#[test]
fn summary_gap_matches_the_final_recorded_state() {
    for config in [
        "n = 6\nseed = 3\n",
        "n = 7\ndirected = true\nseed = 4\nt_end = 30.0\n",
        "n = 4\nseed = 5\nt_end = 0.5\n",
    ] {
        let (dir, out) = run_with("simulate", config, &["--quiet"]);
        assert!(out.status.success());
        let out_dir = dir.path().join("out");
        let csv = fs::read_to_string(out_dir.join("trajectory.csv")).unwrap();
        let reported = summary(&out_dir)["final_w"].as_f64().unwrap();
        assert!((reported - w(&final_state_from_csv(&csv))).abs() < 1e-12);
        let column = csv
            .lines()
            .next()
            .unwrap()
            .split(',')
            .position(|h| h == "W_rad")
            .unwrap();
        let last_w: f64 = csv
            .lines()
            .last()
            .unwrap()
            .split(',')
            .nth(column)
            .unwrap()
            .parse()
            .unwrap();
        assert!((reported - last_w).abs() < 1e-12);
    }
}

#[test]
fn trajectory_table_layout() {
    let (dir, _) = run_with(
        "simulate",
        "n = 3\nseed = 2\nt_end = 0.1\nrecord_every = 2\n",
        &["--quiet"],
    );
    let csv = fs::read_to_string(dir.path().join("out/trajectory.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(
        lines[0],
        "t,psi_1_rad,psi_2_rad,psi_3_rad,phi_1_rad,phi_2_rad,phi_3_rad,W_rad,V,omega_1_norm,omega_2_norm,omega_3_norm"
    );
    // t = 0, 0.02, ..., 0.1
    assert_eq!(lines.len(), 1 + 6);
    let times: Vec<f64> = lines[1..]
        .iter()
        .map(|l| l.split(',').next().unwrap().parse().unwrap())
        .collect();
    assert!((times[5] - 0.1).abs() < 1e-12);
    for line in &lines[1..] {
        for field in line.split(',') {
            let mantissa = field.split('e').next().unwrap().trim_start_matches('-');
            assert_eq!(mantissa.len(), 18, "{field}");
        }
    }
}

#[test]
fn path_plot_structure() {
    let (dir, _) = run_with("simulate", "n = 6\nseed = 7\nt_end = 10.0\n", &["--quiet"]);
    let text = fs::read_to_string(dir.path().join("out/paths.svg")).unwrap();
    let doc = roxmltree::Document::parse(&text).unwrap();
    let root = doc.root_element();
    assert_eq!(root.tag_name().name(), "svg");
    assert_eq!(root.attribute("width"), Some("900"));
    let class_count = |c: &str| {
        doc.descendants()
            .filter(|n| n.attribute("class") == Some(c))
            .count()
    };
    assert_eq!(class_count("agent"), 6);
    assert_eq!(class_count("start"), 6);
    assert_eq!(class_count("end"), 6);
    assert!(class_count("path") >= 6);
    let texts: Vec<&str> = doc.descendants().filter_map(|n| n.text()).collect();
    for label in ["30°", "-60°", "90°", "180°"] {
        assert!(texts.iter().any(|t| t.trim() == label), "{label}");
    }
    assert!(
        texts.iter().any(|t| t.contains("northern"))
            && texts.iter().any(|t| t.contains("southern"))
    );
}

#[test]
fn sweep_of_six_agent_rings_ends_antipodal() {
    let (dir, out) = run_with("sweep", "n = 6\nseeds = 100\n", &["--quiet", "--seed", "0"]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let out_dir = dir.path().join("out");
    let table = fs::read_to_string(out_dir.join("sweep.csv")).unwrap();
    let rows: Vec<Vec<&str>> = table
        .lines()
        .skip(1)
        .map(|l| l.split(',').collect())
        .collect();
    assert_eq!(rows.len(), 100);
    let seeds: Vec<u64> = rows.iter().map(|r| r[0].parse().unwrap()).collect();
    assert_eq!(seeds, (0..100).collect::<Vec<_>>());
    let antipodal = rows.iter().filter(|r| r[1] == "Antipodal").count();
    assert!(antipodal >= 99, "{antipodal}");
    for seed in [0, 57, 99] {
        let member = out_dir.join(format!("seed_{seed}"));
        assert_eq!(summary(&member)["config"]["seed"], seed);
        assert!(member.join("trajectory.csv").exists() && member.join("paths.svg").exists());
    }
}

#[test]
fn sweep_members_match_single_runs() {
    let (sweep, _) = run_with(
        "sweep",
        "n = 5\nt_end = 15.0\nseed = 20\nseeds = 3\n",
        &["--quiet"],
    );
    let (single, _) = run_with("simulate", "n = 5\nt_end = 15.0\nseed = 21\n", &["--quiet"]);
    assert_eq!(
        fs::read(sweep.path().join("out/seed_21/trajectory.csv")).unwrap(),
        fs::read(single.path().join("out/trajectory.csv")).unwrap()
    );
}

#[test]
fn classify_eq_reports_formation_spectra() {
    let (dir, out) = run_with(
        "classify-eq",
        &format!("n = 6\nalpha = {}\n", std::f64::consts::PI),
        &["--quiet"],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let s = summary(&dir.path().join("out"));
    let zero = s["spectrum"]["psi"]["n_zero"].as_u64().unwrap()
        + s["spectrum"]["phi"]["n_zero"].as_u64().unwrap();
    let neg = s["spectrum"]["psi"]["n_negative"].as_u64().unwrap()
        + s["spectrum"]["phi"]["n_negative"].as_u64().unwrap();
    assert_eq!((zero, neg), (2, 10));

    let alpha = 2.0 * std::f64::consts::PI / 5.0;
    let (dir, _) = run_with(
        "classify-eq",
        &format!("n = 5\nalpha = {alpha}\n"),
        &["--quiet"],
    );
    assert_eq!(
        summary(&dir.path().join("out"))["spectrum"]["verdict"],
        "Unstable"
    );
}

#[test]
fn bound_audit_writes_every_check() {
    let (dir, out) = run_with(
        "bound-audit",
        "n = 4\nsamples = 12\nseed = 3\nresolution = 512\n",
        &["--quiet"],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let out_dir = dir.path().join("out");
    let table = fs::read_to_string(out_dir.join("bounds.csv")).unwrap();
    assert_eq!(table.lines().count(), 1 + 12 * 2);
    let s = summary(&out_dir);
    assert_eq!(s["parity"], "even");
    assert_eq!(s["all_hold"], true);
    assert_eq!(s["bounds"][0]["applicable"], 12);
}

#[test]
fn config_errors_exit_with_two() {
    let cases = [
        ("simulate", "n = 6\nspeed = 2\n"),
        ("simulate", "n = 1\n"),
        ("simulate", "n = 6\ndt = 0.0\n"),
        ("simulate", "n = 5\ninit = \"random_in_omega_e\"\n"),
        ("simulate", "this is not toml"),
        ("sweep", "n = 6\n"),
        ("classify-eq", "n = 5\nalpha = 1.0\n"),
        ("bound-audit", "n = 6\nparity = \"odd\"\n"),
    ];
    for (verb, config) in cases {
        let (_, out) = run_with(verb, config, &["--quiet"]);
        assert_eq!(out.status.code(), Some(2), "{verb}: {config}");
        assert!(String::from_utf8_lossy(&out.stderr).contains("config error"));
    }
    let dir = TempDir::new().unwrap();
    assert_eq!(
        ringform(dir.path(), &["simulate", "--config", "missing.toml"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(ringform(dir.path(), &["simulate"]).status.code(), Some(2));
    let (_, out) = run_with(
        "classify-eq",
        "n = 5\nalpha = 1.2566370614359172\n",
        &["--seed", "4"],
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unsatisfiable_sampling_exits_with_three() {
    let (_, out) = run_with(
        "simulate",
        "n = 40\ninit = \"random_in_omega_e\"\n",
        &["--quiet"],
    );
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("sampling error"));
}
