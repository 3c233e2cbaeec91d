use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_vcoher"))
}

fn recipe(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../recipes").join(format!("{name}.json"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

/// Data rows of a CSV, header and comment lines dropped.
fn rows(text: &str) -> Vec<Vec<f64>> {
    text.lines()
        .skip(1)
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split(',').map(|f| f.parse().unwrap()).collect())
        .collect()
}

fn write_config(dir: &tempfile::TempDir, body: &str) -> PathBuf {
    let path = dir.path().join("run.json");
    std::fs::write(&path, body).unwrap();
    path
}

#[test]
fn spectrum_recipe_has_one_row_per_point() {
    let o = run(&["spectrum", "--config", recipe("fig3a").to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.starts_with("delta_p,re_s,im_s,abs,disp\n"));
    let r = rows(&text);
    assert_eq!(r.len(), 401);
    assert!(r.iter().all(|row| row.len() == 5 && row.iter().all(|x| x.is_finite())));
    assert_eq!(r[0][0], -10.0);
    assert_eq!(r[400][0], 10.0);
}

#[test]
fn flag_overrides_config_value() {
    let o = run(&["spectrum", "--config", recipe("fig3a").to_str().unwrap(), "--sweep_count", "2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(rows(&stdout(&o)).len(), 2);
}

#[test]
fn misspelt_key_is_a_config_error_with_suggestions() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(&dir, r#"{"deltap": 1.0}"#);
    let o = run(&["spectrum", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("'delta'") && err.contains("'delta_c'"), "{err}");
}

#[test]
fn derived_probe_detuning_key_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(&dir, r#"{"delta_p": 1.0}"#);
    let o = run(&["spectrum", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("delta + delta_c"), "{}", stderr(&o));
}

#[test]
fn invalid_parameter_value_is_a_config_error() {
    let o = run(&["spectrum", "--eta", "1.5"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["spectrum", "--gamma2", "-1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn invalid_thread_count_is_a_config_error() {
    let o = bin().args(["spectrum", "--sweep_count", "2"]).env("VCOHER_THREADS", "zero").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    let o = bin().args(["spectrum", "--sweep_count", "2"]).env("VCOHER_THREADS", "2").output().unwrap();
    assert!(o.status.success());
}

#[test]
fn flat_spectrum_gives_constant_group_index() {
    // Far out on the wing of the bare probe line the dispersion is close
    // to linear over a short window.
    let o = run(&[
        "group-index",
        "--omega_c_mag",
        "0",
        "--sweep_start",
        "200",
        "--sweep_stop",
        "200.5",
        "--sweep_count",
        "11",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let r = rows(&stdout(&o));
    assert_eq!(r.len(), 11);
    let first = r[0][1];
    for row in &r {
        assert!(((row[1] - first) / first).abs() < 1e-2, "{row:?} vs {first}");
    }
}

#[test]
fn group_index_sign_at_line_center() {
    for (name, negative) in [("fig4a", true), ("fig4b", false)] {
        let o = run(&["group-index", "--config", recipe(name).to_str().unwrap()]);
        assert!(o.status.success(), "{}", stderr(&o));
        let r = rows(&stdout(&o));
        let center = r.iter().find(|row| row[0].abs() < 1e-9).expect("grid contains 0");
        assert_eq!(center[1] < 0.0, negative, "{name}: {center:?}");
    }
}

#[test]
fn empty_cavity_passes_input_through() {
    let o = run(&["ob", "--c_coop", "0", "--sweep_start", "0", "--sweep_stop", "10", "--sweep_count", "21"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    for row in rows(&text) {
        assert!((row[1] - row[0]).abs() <= 1e-12 * row[0].max(1.0), "{row:?}");
    }
    assert!(text.ends_with("# turning_points: none\n"));
}

#[test]
fn bistable_recipe_reports_turning_points() {
    let o = run(&["ob", "--config", recipe("fig6a").to_str().unwrap(), "--eta", "0"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let footer = text.lines().last().unwrap();
    let tps: Vec<f64> = footer
        .strip_prefix("# turning_points: ")
        .unwrap()
        .split(',')
        .map(|s| s.parse().unwrap())
        .collect();
    assert!(tps.len() >= 2, "{footer}");
    assert_eq!(rows(&text).len(), 241);
}

#[test]
fn harmonic_magnitudes_off_resonance_ignore_relative_phase() {
    let run_phase = |phi: &str| {
        let o = run(&["floquet", "--config", recipe("fig8").to_str().unwrap(), "--phi_c", phi]);
        assert!(o.status.success(), "{}", stderr(&o));
        stdout(&o)
    };
    let a = run_phase("0");
    let b = run_phase("3.141592653589793");
    assert!(a.starts_with("k,component,re,im\n"));
    let parse = |t: &str| -> Vec<(String, f64, f64)> {
        t.lines()
            .skip(1)
            .map(|l| {
                let f: Vec<&str> = l.split(',').collect();
                (format!("{},{}", f[0], f[1]), f[2].parse().unwrap(), f[3].parse().unwrap())
            })
            .collect()
    };
    let (pa, pb) = (parse(&a), parse(&b));
    assert_eq!(pa.len(), 13 * 8);
    for (x, y) in pa.iter().zip(&pb) {
        assert_eq!(x.0, y.0);
        // a shift of the relative phase by pi multiplies harmonic k by (-1)^k
        assert!((x.1.hypot(x.2) - y.1.hypot(y.2)).abs() <= 1e-9, "{x:?} vs {y:?}");
    }
}

#[test]
fn bistability_off_resonance_ignores_relative_phase() {
    let curve = |phi: &str| {
        let o = run(&[
            "ob",
            "--config",
            recipe("fig8").to_str().unwrap(),
            "--phi_c",
            phi,
            "--sweep_start",
            "0",
            "--sweep_stop",
            "120",
            "--sweep_count",
            "121",
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        rows(&stdout(&o))
    };
    let (a, b) = (curve("0"), curve("3.141592653589793"));
    assert_eq!(a.len(), 121);
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(&b) {
        assert!((x[1] - y[1]).abs() <= 1e-9 * x[1].max(1.0), "{x:?} vs {y:?}");
    }
}

#[test]
fn floquet_at_resonance_is_a_config_error() {
    let o = run(&["floquet", "--delta", "0"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn floquet_agrees_with_time_domain_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let traj = dir.path().join("traj.csv");
    let o = run(&[
        "floquet",
        "--config",
        recipe("fig8").to_str().unwrap(),
        "--k_max",
        "3",
        "--oracle",
        "--trajectory",
        traj.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).contains("pass"), "{}", stderr(&o));
    let t = std::fs::read_to_string(&traj).unwrap();
    assert!(t.starts_with("t,re_rho11,im_rho11,"));
    assert!(t.lines().count() > 1000);
}

#[test]
fn dump_config_round_trips() {
    let o = run(&["spectrum", "--config", recipe("fig7").to_str().unwrap(), "--eta", "0.25", "--dump-config"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let dumped = stdout(&o);
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(&dir, &dumped);
    let again = run(&["spectrum", "--config", cfg.to_str().unwrap(), "--dump-config"]);
    assert_eq!(stdout(&again), dumped);
    let v: serde_json::Value = serde_json::from_str(&dumped).unwrap();
    assert_eq!(v["eta"], 0.25);
    assert_eq!(v["mode"], "floquet_r1");
}

#[test]
fn output_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for (i, threads) in ["1", "4"].iter().enumerate() {
        let path = dir.path().join(format!("out{i}.csv"));
        let o = bin()
            .args(["spectrum", "--config", recipe("fig5").to_str().unwrap(), "--out_path", path.to_str().unwrap()])
            .env("VCOHER_THREADS", threads)
            .output()
            .unwrap();
        assert!(o.status.success(), "{}", stderr(&o));
        assert!(o.stdout.is_empty());
        outputs.push(std::fs::read(&path).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[cfg(not(feature = "mutation-fixture"))]
#[test]
fn quick_validation_passes() {
    let o = run(&["validate", "--quick"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).lines().all(|l| !l.starts_with("FAIL")));
}

#[cfg(feature = "mutation-fixture")]
#[test]
fn quick_validation_catches_corrupted_generator() {
    let o = run(&["validate", "--quick"]);
    assert_eq!(o.status.code(), Some(1));
    let out = stdout(&o);
    assert!(
        out.lines().any(|l| l.starts_with("FAIL") && l.contains("decomposition consistency")),
        "{out}"
    );
}

#[test]
fn full_validation_exit_code_matches_table() {
    let o = run(&["validate"]);
    let out = stdout(&o);
    let table: Vec<&str> = out.lines().filter(|l| l.starts_with("PASS") || l.starts_with("FAIL")).collect();
    assert!(table.len() >= 15, "{out}");
    let any_fail = table.iter().any(|l| l.starts_with("FAIL"));
    assert_eq!(o.status.code(), Some(if any_fail { 1 } else { 0 }), "{out}");
}
