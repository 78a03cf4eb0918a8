use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_eastwalk");

fn eastwalk(args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .env_remove("EASTWALK_WORKERS")
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn rows(path: &Path) -> Vec<csv::StringRecord> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records().map(|x| x.unwrap()).collect()
}

/// CSV contents with the run-dependent columns blanked.
fn stable_rows(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    let headers = r.headers().unwrap().clone();
    let skip: Vec<usize> = ["runtime_s", "version"]
        .iter()
        .map(|h| headers.iter().position(|x| x == *h).unwrap())
        .collect();
    r.records()
        .map(|rec| {
            rec.unwrap()
                .iter()
                .enumerate()
                .map(|(i, v)| if skip.contains(&i) { String::new() } else { v.to_string() })
                .collect()
        })
        .collect()
}

fn out(dir: &tempfile::TempDir, name: &str) -> String {
    dir.path().join(name).to_str().unwrap().to_string()
}

const QUICK: [&str; 8] = ["-L", "64", "--horizon", "100", "--burn-in", "10", "--replicas", "20"];

#[test]
fn epsilon_outside_the_range_is_rejected() {
    let o = eastwalk(&["simulate", "--epsilon", "0.7"]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("kind=validation") && err.contains("key=epsilon"), "{err}");
}

#[test]
fn density_at_the_boundary_is_rejected() {
    let o = eastwalk(&["u-survival", "--rho", "0"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("key=rho"));
}

#[test]
fn too_few_replicas_are_rejected() {
    let o = eastwalk(&["simulate", "--replicas", "5"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("key=replicas"));
}

#[test]
fn wrong_topology_is_rejected() {
    let o = eastwalk(&["front", "--topology", "ring"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("key=topology"));
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "rho = 0.3\nreplicas = 20\nsites = 64\nhorizon = 100.0\nburn-in = 10.0\n").unwrap();
    let csv = out(&dir, "sim.csv");
    let o = eastwalk(&["simulate", "--config", cfg.to_str().unwrap(), "--rho", "0.6", "--out", &csv]);
    assert!(o.status.success(), "{}", stderr(&o));
    let r = rows(Path::new(&csv));
    assert_eq!(r.len(), 1);
    assert_eq!(r[0][2].parse::<f64>().unwrap(), 0.6);
    assert_eq!(&r[0][4], "64");
}

#[test]
fn unknown_config_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "rho = 0.3\nrepliacs = 20\n").unwrap();
    let o = eastwalk(&["simulate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("key=config"));
}

#[test]
fn spin_flip_walker_has_no_drift() {
    let dir = tempfile::tempdir().unwrap();
    let csv = out(&dir, "isf.csv");
    let mut args = vec!["simulate", "--kind", "isf", "--out", &csv];
    args.extend(QUICK);
    let o = eastwalk(&args);
    assert!(o.status.success(), "{}", stderr(&o));
    let r = &rows(Path::new(&csv))[0];
    let (v, se): (f64, f64) = (r[12].parse().unwrap(), r[13].parse().unwrap());
    assert!(se > 0.0 && v.abs() < 3.0 * se, "v = {v}, se = {se}");
}

#[test]
fn exact_checks_pass_and_header_is_stable() {
    let dir = tempfile::tempdir().unwrap();
    let csv = out(&dir, "exact.csv");
    let o = eastwalk(&["exact", "--out", &csv]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(
        text.lines().next().unwrap(),
        "command,kind,rho,epsilon,L,topology,horizon,replicas,seed,param1,param2,param3,\
         value,se,ci_lo,ci_hi,n_batches,runtime_s,version"
    );
    assert!(text.contains("exact:east-west"));
}

#[test]
fn series_check_reports_terms() {
    let dir = tempfile::tempdir().unwrap();
    let csv = out(&dir, "series.csv");
    let o = eastwalk(&["series-check", "--out", &csv]);
    assert!(o.status.success(), "{}", stderr(&o));
    let r = rows(Path::new(&csv));
    assert_eq!(r.iter().filter(|x| &x[0] == "series-check:term").count(), 5);
}

#[test]
fn output_is_reproducible_across_runs_and_workers() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, workers: &str| {
        let csv = out(&dir, name);
        let mut args = vec!["simulate", "--seed", "42", "--workers", workers, "--out", &csv];
        args.extend(QUICK);
        let o = eastwalk(&args);
        assert!(o.status.success(), "{}", stderr(&o));
        stable_rows(Path::new(&csv))
    };
    let a = run("a.csv", "1");
    assert_eq!(a, run("b.csv", "1"));
    assert_eq!(a, run("c.csv", "2"));
}

#[test]
fn figure3_writes_a_plot() {
    let dir = tempfile::tempdir().unwrap();
    let csv = out(&dir, "fig3.csv");
    let mut args = vec!["figure3", "--eps-grid", "-0.2,0,0.2", "--out", &csv];
    args.extend(QUICK);
    let o = eastwalk(&args);
    assert!(o.status.success(), "{}", stderr(&o));
    let r = rows(Path::new(&csv));
    assert_eq!(r.len(), 3);
    let vs: Vec<(f64, f64)> = r.iter().map(|x| (x[12].parse().unwrap(), x[13].parse().unwrap())).collect();
    let odd = vs[0].0 + vs[2].0;
    assert!(odd.abs() < 3.0 * vs[0].1.hypot(vs[2].1), "{vs:?}");
    let svg = std::fs::read_to_string(dir.path().join("fig3.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("polyline"));
}
