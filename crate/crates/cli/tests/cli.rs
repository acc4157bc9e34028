use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use irsa_bac_cli::Table;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_irsa-bac"))
}

fn recipe(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("recipes").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn write_config(dir: &TempDir, name: &str, body: &str) -> String {
    let p = dir.path().join(name);
    fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

fn ok_table(out: &Output, path: &Path) -> Table {
    assert!(out.status.success(), "status {:?}, stderr: {}", out.status, String::from_utf8_lossy(&out.stderr));
    Table::read_path(path).unwrap()
}

const SMALL_SIM: &str = r#"
lambda_poly = "x^2"
N = 100
mu = 0.2
beta = 2.0
delta = 0.9
G_grid = [0.8, 2.0]
decoders = ["original", "ed-mpr", "ed-fg", "pvtc"]
frames = 300
batch = 50
seed = 9
"#;

#[test]
fn simulate_is_deterministic_across_workers() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "sim.toml", SMALL_SIM);
    let outs: Vec<PathBuf> = (0..3).map(|i| dir.path().join(format!("o{i}.csv"))).collect();
    for (o, w) in outs.iter().zip(["1", "4", "4"]) {
        let out = run(&["simulate", "--config", &cfg, "--out", o.to_str().unwrap(), "--workers", w]);
        ok_table(&out, o);
    }
    let bytes: Vec<Vec<u8>> = outs.iter().map(|o| fs::read(o).unwrap()).collect();
    assert_eq!(bytes[0], bytes[1]);
    assert_eq!(bytes[1], bytes[2]);

    let t = Table::read_path(&outs[0]).unwrap();
    assert_eq!(t.schema, "simulate/v1");
    assert_eq!(
        t.header.join(","),
        "point_id,G,K,N,M,n0,decoder,frames,packets,lost,plr,ci_low,ci_high"
    );
    assert_eq!(t.rows.len(), 8);
    let plr: Vec<f64> = t.values("plr").unwrap();
    let lo: Vec<f64> = t.values("ci_low").unwrap();
    let hi: Vec<f64> = t.values("ci_high").unwrap();
    for i in 0..plr.len() {
        assert!(lo[i] <= plr[i] && plr[i] <= hi[i]);
    }
    let k: Vec<usize> = t.values("K").unwrap();
    assert_eq!(k[0], 400);
}

#[test]
fn seed_flag_changes_output() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "sim.toml", SMALL_SIM);
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    ok_table(&run(&["simulate", "--config", &cfg, "--out", a.to_str().unwrap()]), &a);
    ok_table(&run(&["simulate", "--config", &cfg, "--out", b.to_str().unwrap(), "--seed", "10"]), &b);
    assert_ne!(fs::read(a).unwrap(), fs::read(b).unwrap());
}

#[test]
fn zero_frames_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "sim.toml", SMALL_SIM);
    let out = dir.path().join("o.csv");
    let r = run(&["simulate", "--config", &cfg, "--out", out.to_str().unwrap(), "--frames", "0"]);
    assert_eq!(r.status.code(), Some(2));
    assert!(!r.stderr.is_empty());
    assert!(!out.exists());
}

#[test]
fn invalid_configs_exit_with_two() {
    let dir = TempDir::new().unwrap();
    let cases = [
        "N = 100\nbogus = 1\n",
        "N = \"many\"\n",
        "mode = \"pi-u\"\nG = 0.5\nbeta = 2.0\ndelta = 1.5\nK_grid = [1e3]\n",
        "mode = \"nope\"\n",
        "N = 100\nmu = 0.2\nbeta = 2.0\ndelta = 0.9\nG_grid = [1.0]\ndecoders = [\"magic\"]\n",
        "N = 100\nmu = 0.2\nbeta = 2.0\ndelta = 0.9\nG_grid = \"1:0:2\"\n",
    ];
    for (i, body) in cases.iter().enumerate() {
        let cfg = write_config(&dir, &format!("c{i}.toml"), body);
        let cmd = if body.contains("mode") { "analyze" } else { "simulate" };
        let r = run(&[cmd, "--config", &cfg]);
        assert_eq!(r.status.code(), Some(2), "case {i}: {}", String::from_utf8_lossy(&r.stderr));
        assert!(!r.stderr.is_empty());
    }
    let r = run(&["simulate", "--config", dir.path().join("missing.toml").to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(2));
}

#[test]
fn unwritable_output_is_a_runtime_error() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "r.toml", "mode = \"regions\"\nbeta_grid = [1.0]\n");
    let out = dir.path().join("no/such/dir/o.csv");
    let r = run(&["analyze", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(3));
}

#[test]
fn empty_grid_gives_header_only() {
    let dir = TempDir::new().unwrap();
    let cases = [
        ("analyze", "mode = \"regions\"\nbeta_grid = []\n"),
        ("threshold", "delta = 0.9\nbeta_grid = []\n"),
        ("simulate", "N = 100\nmu = 0.2\nbeta = 2.0\ndelta = 0.9\nG_grid = []\nframes = 10\n"),
    ];
    for (i, (cmd, body)) in cases.iter().enumerate() {
        let cfg = write_config(&dir, &format!("e{i}.toml"), body);
        let out = dir.path().join(format!("e{i}.csv"));
        let t = ok_table(&run(&[cmd, "--config", &cfg, "--out", out.to_str().unwrap()]), &out);
        assert!(t.rows.is_empty());
        assert!(!t.header.is_empty());
    }
}

#[test]
fn threshold_rates() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "t.toml", "lambda_poly = \"x^2\"\ndelta = 0.9\nbeta_grid = [1.0, 2.0]\n");
    let out = dir.path().join("t.csv");
    let t = ok_table(&run(&["threshold", "--config", &cfg, "--out", out.to_str().unwrap(), "--tol", "1e-4"]), &out);
    let find = |beta: &str, scheme: &str| -> f64 {
        let r = t.rows.iter().find(|r| r[0] == beta && r[1] == scheme).unwrap();
        r[3].parse().unwrap()
    };
    assert!((find("1", "original") - 0.050046).abs() <= 1e-3);
    assert!((find("2", "ed-mpr") - 0.16998).abs() <= 2e-3);
    for r in &t.rows {
        let g: f64 = r[2].parse().unwrap();
        let rate: f64 = r[3].parse().unwrap();
        let beta: f64 = r[0].parse().unwrap();
        assert!((rate - 0.1 / beta * g).abs() <= 1e-12);
    }
}

#[test]
fn pi_u_columns_and_ordering() {
    let out_dir = TempDir::new().unwrap();
    let out = out_dir.path().join("f3.csv");
    let t = ok_table(
        &run(&["analyze", "--config", recipe("fig3.toml").to_str().unwrap(), "--out", out.to_str().unwrap()]),
        &out,
    );
    assert_eq!(t.header.join(","), "K,N,M,n0,U,pi_exact,pi_half,pi_lower,pi_asymptotic");
    assert_eq!(t.rows.len(), 30);
    let exact: Vec<f64> = t.values("pi_exact").unwrap();
    let half: Vec<f64> = t.values("pi_half").unwrap();
    let lower: Vec<f64> = t.values("pi_lower").unwrap();
    for i in 0..exact.len() {
        assert!((exact[i] - half[i]).abs() <= 1e-12 * exact[i].max(1e-300));
        assert!(lower[i] <= half[i] * (1.0 + 1e-12));
    }
}

#[test]
fn analyze_modes_round_trip() {
    let dir = TempDir::new().unwrap();
    let cases = [
        ("pmf", "mode = \"pmf\"\nn0 = 6\nnu = 0.3\nU_max = 3\n", "n0,nu,U,A0,AU,prob"),
        (
            "de",
            "mode = \"de\"\nbeta = 2.0\ndelta = 0.9\nG_grid = [0.4, 3.0]\niterations = 20\n",
            "scheme,G,iteration,p",
        ),
        (
            "sum-rate",
            "mode = \"sum-rate\"\nN = 200\nmu = 0.2\nbeta = 2.0\ndelta = 0.9\nG_grid = \"1:1:3\"\n",
            "G,K,N,M,n0,R_sum,R_asymptotic",
        ),
    ];
    for (name, body, header) in cases {
        let cfg = write_config(&dir, &format!("{name}.toml"), body);
        let out = dir.path().join(format!("{name}.csv"));
        let t = ok_table(&run(&["analyze", "--config", &cfg, "--out", out.to_str().unwrap()]), &out);
        assert_eq!(t.header.join(","), header);
        assert_eq!(t.schema, format!("{name}/v1"));
        assert!(!t.rows.is_empty());
    }
    let pmf = Table::read_path(&dir.path().join("pmf.csv")).unwrap();
    let probs: Vec<f64> = pmf.values("prob").unwrap();
    let us: Vec<u32> = pmf.values("U").unwrap();
    for u in 1..=3 {
        let total: f64 = probs.iter().zip(&us).filter(|(_, &x)| x == u).map(|(p, _)| p).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }
    let de = Table::read_path(&dir.path().join("de.csv")).unwrap();
    assert_eq!(de.rows.len(), 3 * 2 * 21);
}

#[test]
fn recipes_run_end_to_end() {
    let dir = TempDir::new().unwrap();
    for (cmd, name, rows) in [
        ("simulate", "fig2a.toml", 29 * 4),
        ("simulate", "fig2b.toml", 29 * 4),
        ("analyze", "fig3.toml", 30),
        ("analyze", "fig4.toml", 901),
        ("threshold", "fig5.toml", 81 * 3),
    ] {
        let out = dir.path().join(name.replace(".toml", ".csv"));
        let r = run(&[cmd, "--config", recipe(name).to_str().unwrap(), "--out", out.to_str().unwrap(), "--frames", "10"]);
        let t = ok_table(&r, &out);
        assert_eq!(t.rows.len(), rows, "{name}");
    }
}
