use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spinphase")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn field(line: &str, k: usize) -> String {
    line.split(',').nth(k).unwrap().to_string()
}

#[test]
fn two_site_exact_row() {
    let o = run(&["exact", "--lattice", "2x1", "--J", "1", "--beta", "1", "--method", "two-site"]);
    assert!(o.status.success(), "{o:?}");
    let text = stdout(&o);
    let row = text.lines().find(|l| l.contains("nn_correlation")).unwrap();
    let value: f64 = field(row, 3).parse().unwrap();
    assert!((value - 0.7616).abs() < 5e-5);
    assert!((value - 1f64.tanh()).abs() < 1e-15);
}

#[test]
fn verify_passes() {
    let o = run(&["verify"]);
    assert!(o.status.success(), "{o:?}");
    assert_eq!(stdout(&o).lines().count(), 7);
}

#[test]
fn exact_methods_agree_on_a_torus() {
    let get = |method: &str| {
        let o = run(&["exact", "--lattice", "4x4", "--periodic", "--beta", "0.44", "--method", method, "--output", "json"]);
        assert!(o.status.success(), "{o:?}");
        let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
        (v[0]["estimate"].as_f64().unwrap(), v[1]["estimate"].as_f64().unwrap())
    };
    let (bz, bc) = get("brute");
    let (tz, tc) = get("transfer");
    assert!((bz - tz).abs() < 1e-10);
    assert!((bc - tc).abs() < 1e-7);
    let o = run(&["exact", "--lattice", "4x4", "--periodic", "--beta", "0.3", "--method", "onsager"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), 2);
}

fn run_to_file(dir: &Path, name: &str, args: &[&str]) -> Vec<u8> {
    let path = dir.join(name);
    let mut full: Vec<&str> = args.to_vec();
    let p = path.to_str().unwrap().to_string();
    full.extend(["--out", &p]);
    let o = run(&full);
    assert!(o.status.success(), "{o:?}");
    std::fs::read(path).unwrap()
}

#[test]
fn langevin_output_is_byte_identical_across_runs_and_threads() {
    let dir = tempfile::tempdir().unwrap();
    let base = [
        "langevin", "--lattice", "10x10", "--periodic", "--beta", "0.4", "--trajectories", "1000", "--seed", "7",
        "--total-tau", "12", "--burn-in", "10",
    ];
    let a = run_to_file(dir.path(), "a.csv", &base);
    let b = run_to_file(dir.path(), "b.csv", &base);
    let mut threaded = base.to_vec();
    threaded.extend(["--threads", "3"]);
    let c = run_to_file(dir.path(), "c.csv", &threaded);
    let mut sequential = base.to_vec();
    sequential.extend(["--threads", "1"]);
    let d = run_to_file(dir.path(), "d.csv", &sequential);
    assert_eq!(a, b);
    assert_eq!(a, c);
    assert_eq!(a, d);
    assert_eq!(String::from_utf8(a).unwrap().lines().count(), 2);
}

#[test]
fn direct_output_is_byte_identical_across_threads() {
    let dir = tempfile::tempdir().unwrap();
    let base = ["direct", "--lattice", "3x3", "--periodic", "--beta", "0.3", "--beta", "0.5", "--trajectories", "20000", "--oracle", "brute"];
    let a = run_to_file(dir.path(), "a.csv", &[&base[..], &["--threads", "1"]].concat());
    let b = run_to_file(dir.path(), "b.csv", &[&base[..], &["--threads", "4"]].concat());
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    // log Z and nn per beta.
    assert_eq!(text.lines().count(), 5);
    assert!(text.lines().nth(2).unwrap().contains(",brute,"));
}

#[test]
fn config_file_with_command_line_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "command = exact\nlattice = 2x1\nmethod = two-site\nbeta = 0.5, 1.0\noutput = json\n").unwrap();
    let o = run(&["--config", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{o:?}");
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 4);
    let o = run(&["--config", cfg.to_str().unwrap(), "--beta", "2", "--output", "csv"]);
    assert!(o.status.success(), "{o:?}");
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 3);
    assert!(text.lines().nth(2).unwrap().starts_with("2.0000000000000000e0,nn_correlation"));
}

#[test]
fn model_file_input() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("ring.model");
    std::fs::write(&model, "# four-site ring\nsites 4\nedge 0 1 1.0\nedge 1 2 1.0\nedge 2 3 1.0\nedge 3 0 1.0\n").unwrap();
    let o = run(&["exact", "--model", model.to_str().unwrap(), "--beta", "0.5", "--pairs", "0,1;0,2"]);
    assert!(o.status.success(), "{o:?}");
    let text = stdout(&o);
    let c01: f64 = field(text.lines().nth(2).unwrap(), 3).parse().unwrap();
    let t = 0.5f64.tanh();
    // Closed form for a ring of four: (t + t³)/(1 + t⁴).
    assert!((c01 - (t + t.powi(3)) / (1.0 + t.powi(4))).abs() < 1e-12);
}

fn error_json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(o.stderr.trim_ascii()).expect("stderr holds one JSON object")
}

#[test]
fn exit_codes_and_machine_readable_errors() {
    let o = run(&["exact", "--lattice", "axb"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_json(&o)["error"], "parse");

    let o = run(&["exact", "--lattice", "6x5", "--method", "brute"]);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(error_json(&o)["error"], "capacity");

    let o = run(&["exact", "--lattice", "17x2", "--periodic", "--method", "transfer"]);
    assert_eq!(o.status.code(), Some(3));

    let o = run(&[
        "langevin", "--lattice", "2x1", "--beta", "1000000", "--step", "1000", "--iterations", "40", "--burn-in", "0",
        "--measure-every", "1000", "--total-tau", "1000000", "--trajectories", "2",
    ]);
    assert_eq!(o.status.code(), Some(4));
    let e = error_json(&o);
    assert_eq!(e["error"], "divergence");
    assert!(e["message"].as_str().unwrap().contains("trajectory"));

    let o = run(&["langevin", "--lattice", "2x1", "--burn-in", "60", "--total-tau", "50"]);
    assert_eq!(o.status.code(), Some(2));

    let o = run(&["exact", "--model", "/no/such/file"]);
    assert_eq!(o.status.code(), Some(1));

    let o = run(&["exact", "--lattice", "3x3", "--pairs", "0,9"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unwritable_output_path_fails_cleanly() {
    let o = run(&["exact", "--lattice", "2x1", "--method", "two-site", "--out", "/no/such/dir/out.csv"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!Path::new("/no/such/dir/out.csv").exists());
}
