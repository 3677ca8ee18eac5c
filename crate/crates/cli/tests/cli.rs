use std::path::Path;
use std::process::{Command, Output};

use jones_cli::config::GEOMETRY_DIR_ENV;
use jones_cli::{execute, parse_records, payload_digest, ExperimentConfig, OutputFormat, ReportRecord};
use jones_core::toric::{Direction, GeometryConfig, PathConfig};

const LN4: f64 = 1.386_294_361_119_890_6;

fn jones(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_jones"))
        .args(args)
        .env_remove(GEOMETRY_DIR_ENV)
        .output()
        .expect("binary runs")
}

fn records(out: &Output) -> Vec<ReportRecord> {
    parse_records(&String::from_utf8_lossy(&out.stdout)).unwrap()
}

fn write_state(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}

#[test]
fn identical_config_gives_identical_payloads() {
    let args = ["toric", "--n", "2", "--backend", "stabilizer", "--seed", "11", "--trials", "50"];
    let a = records(&jones(&args));
    let b = records(&jones(&args));
    assert_eq!(a.len(), 1);
    assert_eq!(a[0].provenance.payload_sha256, b[0].provenance.payload_sha256);
    assert_eq!(a[0].payload, b[0].payload);
    assert_eq!(payload_digest(&a[0].payload), a[0].provenance.payload_sha256);

    let idx = ["index", "--k", "3", "--n", "2", "--seed", "5", "--trials", "200"];
    assert_eq!(
        records(&jones(&idx))[0].provenance.payload_sha256,
        records(&jones(&idx))[0].provenance.payload_sha256
    );
}

#[test]
fn reports_round_trip_and_replay() {
    let out = jones(&["index", "--k", "4", "--n", "2", "--trials", "100", "--seed", "3"]);
    assert!(out.status.success());
    let recs = records(&out);
    let text: String = recs.iter().map(|r| serde_json::to_string(r).unwrap() + "\n").collect();
    assert_eq!(parse_records(&text).unwrap(), recs);

    let cfg: ExperimentConfig = recs[0].config.clone();
    assert_eq!(cfg.seed, 3);
    let replay = execute(&cfg).unwrap();
    assert_eq!(replay.records[0].payload, recs[0].payload);
}

#[test]
fn toric_passes_and_reports_every_field() {
    let out = jones(&["toric", "--n", "1", "--backend", "dense", "--trials", "100"]);
    assert_eq!(out.status.code(), Some(0));
    let r = &records(&out)[0];
    let d = r.payload["disturbance"].as_f64().unwrap();
    assert!((d - LN4).abs() < 1e-9);
    assert!((r.payload["disturbance_bits"].as_f64().unwrap() - 2.0).abs() < 1e-9);
    assert_eq!(r.payload["pass"], true);
    assert_eq!(r.config.format, OutputFormat::Records);
}

#[test]
fn broken_routing_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let mut g = GeometryConfig::default_geometry();
    g.cones[0].dual = PathConfig {
        start: [-1, -1],
        waypoints: vec![],
        direction: Direction::Up,
    };
    let path = dir.path().join("broken.toml");
    std::fs::write(&path, g.to_toml()).unwrap();
    let out = jones(&["toric", "--n", "1", "--geometry", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("anticommute"), "{err}");
}

#[test]
fn geometry_directory_supplies_the_default() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("default.toml"), GeometryConfig::default_geometry().to_toml()).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_jones"))
        .args(["toric", "--n", "1", "--backend", "stabilizer", "--trials", "10"])
        .env(GEOMETRY_DIR_ENV, dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    let r = &records(&out)[0];
    assert_eq!(r.config.geometry.as_deref(), Some(dir.path().join("default.toml").as_path()));

    let missing = jones(&["toric", "--geometry", "nowhere.toml"]);
    assert_eq!(missing.status.code(), Some(3));
}

#[test]
fn entropy_examples() {
    let dir = tempfile::tempdir().unwrap();
    let zero = dir.path().join("zero.txt");
    let one = dir.path().join("one.txt");
    write_state(&zero, "dim 2\n1 0 0 0\n0 0 0 0\n");
    write_state(&one, "dim 2\n0 0 0 0\n0 0 1 0\n");

    let same = records(&jones(&["entropy", zero.to_str().unwrap(), zero.to_str().unwrap()]));
    let rel: Vec<_> = same.iter().filter(|r| r.kind == "relative_entropy").collect();
    assert!(rel.iter().all(|r| r.payload["nats"].as_f64() == Some(0.0)));

    let out = jones(&["entropy", zero.to_str().unwrap(), one.to_str().unwrap()]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains(r#""nats":"inf""#), "{text}");
    let chi = records(&out).into_iter().find(|r| r.kind == "holevo_chi").unwrap();
    assert!((chi.payload["nats"].as_f64().unwrap() - 2f64.ln()).abs() < 1e-12);

    let bad = dir.path().join("bad.txt");
    write_state(&bad, "dim 2\n1 0 0 0\n");
    let out = jones(&["entropy", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(!out.stderr.is_empty());
}

#[test]
fn dumped_ensemble_has_chi_ln4() {
    let dir = tempfile::tempdir().unwrap();
    let ens = dir.path().join("omega.txt");
    let out = jones(&["toric", "--n", "1", "--trials", "10", "--dump-ensemble", ens.to_str().unwrap()]);
    assert!(out.status.success());
    let recs = records(&jones(&["entropy", ens.to_str().unwrap()]));
    let chi = recs.iter().find(|r| r.kind == "holevo_chi").unwrap();
    assert!((chi.payload["nats"].as_f64().unwrap() - LN4).abs() < 1e-9);
}

#[test]
fn index_examples_and_exit_codes() {
    let one = records(&jones(&["index", "--k", "1", "--n", "3", "--trials", "50"]));
    assert!((one[0].payload["index_hat"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    let sq = records(&jones(&["index", "--k", "4", "--n", "2", "--tensor-square", "--trials", "20"]));
    assert!((sq[0].payload["index_hat"].as_f64().unwrap() - 16.0).abs() < 1e-6);

    // Round-off alone exceeds a tolerance this tight.
    let strict = jones(&["index", "--k", "4", "--n", "2", "--trials", "20", "--tol", "1e-300"]);
    assert_eq!(strict.status.code(), Some(2));
    let neg = jones(&["index", "--tol=-1"]);
    assert_eq!(neg.status.code(), Some(3));
    let unknown = jones(&["index", "--bogus"]);
    assert_eq!(unknown.status.code(), Some(3));
}

#[test]
fn sweep_rows_are_ordered_and_constant() {
    let out = jones(&["sweep", "--n", "1..=3", "--backend", "stabilizer,dense", "--trials", "10"]);
    let recs = records(&out);
    let rows: Vec<_> = recs.iter().filter(|r| r.kind == "sweep_row").collect();
    let order: Vec<(u64, &str)> = rows
        .iter()
        .map(|r| (r.payload["n"].as_u64().unwrap(), r.payload["backend"].as_str().unwrap()))
        .collect();
    assert_eq!(
        order,
        [(1, "stabilizer"), (1, "dense"), (2, "stabilizer"), (2, "dense"), (3, "stabilizer"), (3, "dense")]
    );
    // Dense rows beyond the cap fail individually.
    assert_eq!(rows[3].payload["ok"], false);
    assert!(rows[3].payload["error"].as_str().unwrap().contains("cap"));
    for r in rows.iter().filter(|r| r.payload["ok"] == true) {
        assert!((r.payload["disturbance"].as_f64().unwrap() - LN4).abs() < 1e-9);
    }
    let summary = recs.iter().find(|r| r.kind == "sweep_summary").unwrap();
    assert_eq!(summary.payload["constant"], true);
    assert_eq!(out.status.code(), Some(3));

    let empty = jones(&["sweep", "--n", "2..2"]);
    assert_eq!(empty.status.code(), Some(0));
    assert!(empty.stdout.is_empty());
}

#[test]
fn csv_summary_is_plot_ready() {
    let out = jones(&["sweep", "--n", "1..=2", "--format", "csv", "--trials", "10"]);
    assert!(out.status.success());
    let mut rdr = csv::Reader::from_reader(out.stdout.as_slice());
    let header = rdr.headers().unwrap().clone();
    let col = |name: &str| header.iter().position(|h| h == name).unwrap();
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 3);
    assert_eq!(&rows[0][col("n")], "1");
    assert_eq!(&rows[1][col("backend")], "stabilizer");
    let bits: f64 = rows[0][col("disturbance_bits")].parse().unwrap();
    assert!((bits - 2.0).abs() < 1e-9);
}

#[test]
fn privacy_matches_disturbance_when_bob_sees_everything() {
    let recs = records(&jones(&["privacy", "--n", "2", "--trials", "20"]));
    let p = &recs[0].payload;
    assert!((p["concentrated_nats"].as_f64().unwrap() - LN4).abs() < 1e-9);
    assert!(p["random_max_nats"].as_f64().unwrap() <= LN4 + 1e-8);
    let bad = jones(&["privacy", "--bob", "0,0,1,1", "--eve", "0,1,0,1"]);
    assert_eq!(bad.status.code(), Some(3));
}

#[test]
fn out_flag_writes_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.jsonl");
    let out = jones(&["index", "--trials", "5", "--out", path.to_str().unwrap()]);
    assert!(out.status.success() && out.stdout.is_empty());
    let recs = parse_records(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(recs[0].config.out.as_deref(), Some(path.as_path()));
}
