//! End-to-end checks of the `bpf-sim` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bpf-sim"))
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().expect("spawn bpf-sim")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

const HU: &str = "\
model = hu
n_cells = 100
epsilon = 0.05
T = 0.1
dt_out = 0.02
snapshot_times = 0, 0.05, 0.1
init.f.kind = gaussian_bump
init.f.center = -0.3
init.f.width = 0.25
init.f.amplitude = 1
init.f.background = 0.1
init.g.kind = gaussian_bump
init.g.center = 0.3
init.g.width = 0.25
init.g.amplitude = 1
init.g.background = 0.1
";

const BPF: &str = "\
model = bpf
n_cells = 400
sigma = 0.2
c = 1
T = 0.05
dt_out = 0.01
init.f.kind = gaussian_bump
init.f.center = -0.05
init.f.width = 0.1
init.f.amplitude = 1
init.g.kind = gaussian_bump
init.g.center = 0.05
init.g.width = 0.1
init.g.amplitude = 1
";

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn columns(csv: &str) -> Vec<String> {
    csv.lines()
        .find(|l| !l.starts_with('#'))
        .unwrap()
        .split(',')
        .map(str::to_string)
        .collect()
}

#[test]
fn run_writes_diagnostics_and_snapshots() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "hu.conf", HU);
    let out = run_in(tmp.path(), &["run", "--config", &cfg, "--output-dir", "out"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let diag = fs::read_to_string(tmp.path().join("out/diagnostics.csv")).unwrap();
    assert!(diag.contains("# c = 20\n"));
    assert!(diag.contains("# dx = 0.02\n"));
    assert!(diag.contains("# cell_peclet = "));
    assert_eq!(columns(&diag)[0], "t");
    assert_eq!(columns(&diag).len(), 15);
    let rows = diag.lines().filter(|l| !l.starts_with('#')).count() - 1;
    assert_eq!(rows, 6);
    for t in ["0", "0.05", "0.1"] {
        let snap = fs::read_to_string(tmp.path().join(format!("out/snapshot_{t}.csv"))).unwrap();
        assert_eq!(columns(&snap), ["x", "f", "g", "h", "u", "mu"]);
        let first = snap.lines().filter(|l| !l.starts_with('#')).nth(1).unwrap();
        assert!(first.ends_with(','), "mu must be empty for (h, u) runs: {first}");
        assert_eq!(snap.lines().filter(|l| !l.starts_with('#')).count(), 102);
    }
}

#[test]
fn runs_are_byte_identical() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "bpf.conf", &format!("{BPF}a = 0.01\n"));
    for dir in ["one", "two"] {
        let out = run_in(tmp.path(), &["run", "--config", &cfg, "--output-dir", dir]);
        assert_eq!(code(&out), 0, "{}", stderr(&out));
    }
    let mut names: Vec<_> = fs::read_dir(tmp.path().join("one"))
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    assert_eq!(names.len(), 3);
    for name in names {
        let a = fs::read(tmp.path().join("one").join(&name)).unwrap();
        let b = fs::read(tmp.path().join("two").join(&name)).unwrap();
        assert_eq!(a, b, "{name:?} differs");
    }
    let snap = fs::read_to_string(tmp.path().join("one/snapshot_0.05.csv")).unwrap();
    let first = snap.lines().filter(|l| !l.starts_with('#')).nth(1).unwrap();
    assert!(!first.ends_with(','), "kinetic snapshots carry mu");
}

#[test]
fn kinetic_cost_on_grid_echoes_nodes() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "bpf.conf", &format!("{BPF}a = 0.01\n"));
    let out = run_in(
        tmp.path(),
        &["run", "--config", &cfg, "--output-dir", "out", "--set", "T=0"],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let diag = fs::read_to_string(tmp.path().join("out/diagnostics.csv")).unwrap();
    assert!(diag.contains("# a_nodes = 2\n"));
    assert!(diag.contains("# k = 100\n"));
}

#[test]
fn kinetic_cost_off_grid_is_rejected_with_line() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "bpf.conf", &format!("{BPF}a = 0.007\n"));
    let out = run_in(tmp.path(), &["run", "--config", &cfg, "--output-dir", "out"]);
    assert_eq!(code(&out), 1);
    let msg = stderr(&out);
    assert!(msg.contains("a must be an integer multiple of dx"), "{msg}");
    assert!(msg.contains("line 15"), "{msg}");
    assert!(!tmp.path().join("out").exists());
}

#[test]
fn config_errors_exit_one() {
    let tmp = TempDir::new().unwrap();
    let cases = [
        (format!("{HU}colour = red\n"), "unknown key"),
        (format!("{HU}k = 2\n"), "does not apply"),
        (HU.replace("T = 0.1\n", ""), "missing required key `T`"),
        (HU.replace("epsilon = 0.05", "epsilon = 0.05\nc = 20"), "exactly one"),
        (HU.replace("init.f.amplitude = 1", "init.f.amplitude = -1"), "negative"),
        (HU.replace("model = hu", "model = burgers"), "f + g = 1"),
    ];
    for (i, (text, needle)) in cases.iter().enumerate() {
        let cfg = write_config(tmp.path(), &format!("bad{i}.conf"), text);
        let out = run_in(tmp.path(), &["run", "--config", &cfg, "--output-dir", "out"]);
        assert_eq!(code(&out), 1, "case {i}");
        assert!(stderr(&out).contains(needle), "case {i}: {}", stderr(&out));
    }
    let out = run_in(tmp.path(), &["run", "--preset", "nope"]);
    assert_eq!(code(&out), 1);
    let out = run_in(tmp.path(), &["frobnicate"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn oversized_time_step_exits_two() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "hu.conf", HU);
    let out = run_in(
        tmp.path(),
        &[
            "run",
            "--config",
            &cfg,
            "--output-dir",
            "out",
            "--set",
            "dt_override=0.01",
        ],
    );
    assert_eq!(code(&out), 2, "{}", stderr(&out));
}

#[test]
fn support_guard_exits_three() {
    let tmp = TempDir::new().unwrap();
    let text = BPF
        .replace("init.f.center = -0.05", "init.f.center = -0.97")
        .replace("init.g.center = 0.05", "init.g.center = -0.93");
    let cfg = write_config(tmp.path(), "wall.conf", &format!("{text}a = 0.1\n"));
    let out = run_in(tmp.path(), &["run", "--config", &cfg, "--output-dir", "out"]);
    assert_eq!(code(&out), 3, "{}", stderr(&out));
    assert!(stderr(&out).contains("support guard"));
}

#[test]
fn zero_horizon_writes_initial_snapshot_only() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "hu.conf", HU);
    let out = run_in(
        tmp.path(),
        &["run", "--config", &cfg, "--output-dir", "out", "--set", "T=0"],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let mut names: Vec<String> = fs::read_dir(tmp.path().join("out"))
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(names, ["diagnostics.csv", "snapshot_0.csv"]);
}

#[test]
fn compare_self_nested_and_mismatched() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "hu.conf", HU);
    for (dir, n) in [("c100", "100"), ("c200", "200"), ("c150", "150")] {
        let out = run_in(
            tmp.path(),
            &[
                "run",
                "--config",
                &cfg,
                "--output-dir",
                dir,
                "--set",
                &format!("n_cells={n}"),
            ],
        );
        assert_eq!(code(&out), 0, "{}", stderr(&out));
    }
    let same = run_in(tmp.path(), &["compare", "c100", "c100"]);
    assert_eq!(code(&same), 0);
    let text = String::from_utf8(same.stdout).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 12);
    assert!(rows.iter().all(|r| r.ends_with(",0.0000000000000000e0")), "{text}");

    let nested = run_in(
        tmp.path(),
        &["compare", "c200", "c100", "--fields", "u", "--norm", "linf"],
    );
    assert_eq!(code(&nested), 0, "{}", stderr(&nested));
    let text = String::from_utf8(nested.stdout).unwrap();
    let last: f64 = text
        .lines()
        .last()
        .unwrap()
        .rsplit(',')
        .next()
        .unwrap()
        .parse()
        .unwrap();
    assert!(last > 0.0 && last < 1e-2, "{text}");

    let bad = run_in(tmp.path(), &["compare", "c150", "c100"]);
    assert_eq!(code(&bad), 1);
    assert!(stderr(&bad).contains("nested"));
}

#[test]
fn file_initial_data() {
    let tmp = TempDir::new().unwrap();
    let n = 50;
    let mut f = String::from("x,f\n");
    let mut g = String::new();
    for i in 0..=n {
        let x = -1.0 + 2.0 * i as f64 / n as f64;
        f.push_str(&format!("{x},{}\n", 0.5 + 0.3 * x));
        g.push_str(&format!("{}\n", 0.5 - 0.3 * x));
    }
    fs::write(tmp.path().join("f.csv"), f).unwrap();
    fs::write(tmp.path().join("g.csv"), g).unwrap();
    let text = format!(
        "model = burgers\nn_cells = {n}\nepsilon = 0.1\nT = 0.01\ndt_out = 0.01\n\
         init.f.kind = file\ninit.f.path = f.csv\ninit.g.kind = file\ninit.g.path = g.csv\n"
    );
    let cfg = write_config(tmp.path(), "file.conf", &text);
    let out = run_in(tmp.path(), &["run", "--config", &cfg, "--output-dir", "out"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));

    let short = text.replace(&format!("n_cells = {n}"), "n_cells = 40");
    let cfg = write_config(tmp.path(), "short.conf", &short);
    let out = run_in(tmp.path(), &["run", "--config", &cfg, "--output-dir", "out2"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("grid has 41 nodes"), "{}", stderr(&out));
}

#[test]
fn eps_sweep_keeps_input_order() {
    let tmp = TempDir::new().unwrap();
    let out = run_in(
        tmp.path(),
        &[
            "sweep-eps",
            "--preset",
            "burgers-limit",
            "--set",
            "n_cells=80",
            "--set",
            "T=0.05",
            "--values",
            "0.2,0.1,0.05",
            "--output-dir",
            "sw",
        ],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let csv = fs::read_to_string(tmp.path().join("sw/sweep_eps.csv")).unwrap();
    let cols = columns(&csv);
    for c in [
        "epsilon",
        "dx",
        "dt",
        "diffusion",
        "scheme",
        "gap_integral",
        "gap_bound",
    ] {
        assert!(cols.iter().any(|x| x == c), "missing column {c}");
    }
    let eps: Vec<f64> = csv
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(eps, [0.2, 0.1, 0.05]);
    assert!(csv.contains("# gap_fit_slope = "));

    let bad = run_in(
        tmp.path(),
        &["sweep-eps", "--preset", "burgers-limit", "--values", "0.1,0.2,0.1"],
    );
    assert_eq!(code(&bad), 1);
}

#[test]
fn ka_sweep_rejects_mismatched_reference() {
    let tmp = TempDir::new().unwrap();
    let base = write_config(tmp.path(), "bpf.conf", &format!("{BPF}a = 0.02\n"));
    let reference = BPF
        .replace("model = bpf", "model = hu")
        .replace("c = 1", "epsilon = 0.5");
    let reference = write_config(tmp.path(), "ref.conf", &reference);
    let out = run_in(
        tmp.path(),
        &[
            "sweep-ka",
            "--config",
            &base,
            "--values",
            "0.02,0.01",
            "--reference",
            &reference,
        ],
    );
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("1 / c"), "{}", stderr(&out));

    let ok = run_in(
        tmp.path(),
        &[
            "sweep-ka",
            "--config",
            &base,
            "--values",
            "0.02,0.01",
            "--output-dir",
            "ka",
        ],
    );
    assert_eq!(code(&ok), 0, "{}", stderr(&ok));
    let csv = fs::read_to_string(tmp.path().join("ka/sweep_ka.csv")).unwrap();
    assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 3);

    let off_grid = run_in(tmp.path(), &["sweep-ka", "--config", &base, "--values", "0.013"]);
    assert_eq!(code(&off_grid), 1);
}

#[test]
fn transform_check_writes_levels() {
    let tmp = TempDir::new().unwrap();
    let text = format!(
        "{}a = 0.04\n",
        BPF.replace("n_cells = 400", "n_cells = 100").replace("c = 1", "k = 5")
    );
    let cfg = write_config(tmp.path(), "tc.conf", &text);
    let out = run_in(
        tmp.path(),
        &[
            "transform-check",
            "--config",
            &cfg,
            "--levels",
            "2",
            "--output-dir",
            "tc",
        ],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let csv = fs::read_to_string(tmp.path().join("tc/transform_check.csv")).unwrap();
    assert_eq!(
        columns(&csv),
        ["dx", "dt_out", "series_length", "heat_residual_FG", "heat_residual_fSg"]
    );
    assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 3);

    let hu = write_config(tmp.path(), "hu.conf", HU);
    let wrong = run_in(tmp.path(), &["transform-check", "--config", &hu]);
    assert_eq!(code(&wrong), 1);
}

#[test]
fn presets_run_at_reduced_size() {
    let tmp = TempDir::new().unwrap();
    let out = run_in(
        tmp.path(),
        &["run", "--preset", "figure1", "--set", "T=1", "--output-dir", "fig"],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    // Five times coarser, the cell Peclet number is far above one and u^2 > h^2.
    let coarse = run_in(
        tmp.path(),
        &[
            "run",
            "--preset",
            "figure1",
            "--set",
            "n_cells=200",
            "--set",
            "T=1",
            "--output-dir",
            "coarse",
        ],
    );
    assert_eq!(code(&coarse), 3, "{}", stderr(&coarse));
    assert!(stderr(&out).contains("beyond T"));
    for t in ["0", "0.5", "1"] {
        assert!(tmp.path().join(format!("fig/snapshot_{t}.csv")).exists());
    }
}
