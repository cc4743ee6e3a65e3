use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rankflow::fit::FitResult;
use rankflow::io::read_numeric_csv;
use rankflow::limit::SalesShareReport;
use rankflow::sim::{synthesize_noisy_trajectory, SimulationSettings};
use rankflow::{RankingTrajectory, SalesRateDistribution};
use tempfile::TempDir;

fn rankflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rankflow")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn fixture_csv(dir: &Path, seed: u64) -> PathBuf {
    let d = SalesRateDistribution::pareto(3.939e-4, 0.6312).unwrap();
    let times: Vec<f64> = (0..77).map(|k| 1900.0 * k as f64 / 76.0).collect();
    let traj = synthesize_noisy_trajectory(&d, 8.57e5, &times, 1.44e4, seed).unwrap();
    let path = dir.join(format!("fixture{seed}.csv"));
    traj.write_csv(fs::File::create(&path).unwrap()).unwrap();
    path
}

/// Parses CSV text from stdout into numeric rows, skipping the header.
fn rows(text: &str) -> Vec<Vec<f64>> {
    text.lines().skip(1).map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect()
}

#[test]
fn fit_recovers_fixture() {
    let dir = TempDir::new().unwrap();
    let input = fixture_csv(dir.path(), 11);
    let output = dir.path().join("fit.json");
    let o = rankflow(&["fit", "--input", s(&input), "--output", s(&output)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let fit = FitResult::read_json(&output).unwrap();
    assert!(fit.converged);
    assert!((fit.b_star - 0.6312).abs() < 0.05, "b* = {}", fit.b_star);
}

#[test]
fn fit_rejects_bad_input() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("fit.json");

    let empty = dir.path().join("empty.csv");
    fs::write(&empty, "").unwrap();
    let o = rankflow(&["fit", "--input", s(&empty), "--output", s(&out)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("empty file"), "{}", stderr(&o));

    let five = dir.path().join("five.csv");
    fs::write(&five, "t_hours,rank\n1,10\n2,20\n3,30\n4,40\n5,50\n").unwrap();
    let o = rankflow(&["fit", "--input", s(&five), "--output", s(&out)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("insufficient observations"), "{}", stderr(&o));

    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "t_hours,rank\n1,10\n2,x\n3,30\n").unwrap();
    let o = rankflow(&["fit", "--input", s(&bad), "--output", s(&out)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));

    let missing = dir.path().join("missing.csv");
    let o = rankflow(&["fit", "--input", s(&missing), "--output", s(&out)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!out.exists());
}

#[test]
fn outputs_are_not_overwritten_without_force() {
    let dir = TempDir::new().unwrap();
    let input = fixture_csv(dir.path(), 3);
    let output = dir.path().join("fit.json");
    fs::write(&output, "keep").unwrap();
    let o = rankflow(&["fit", "--input", s(&input), "--output", s(&output)]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(fs::read_to_string(&output).unwrap(), "keep");
    let o = rankflow(&["fit", "--input", s(&input), "--output", s(&output), "--force"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(FitResult::read_json(&output).is_ok());
}

#[test]
fn non_convergence_exits_two_and_still_writes() {
    let dir = TempDir::new().unwrap();
    let input = fixture_csv(dir.path(), 5);
    let output = dir.path().join("fit.json");
    let o = rankflow(&["fit", "--input", s(&input), "--output", s(&output), "--max-iterations", "3"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let fit = FitResult::read_json(&output).unwrap();
    assert!(!fit.converged);
    let o = rankflow(&["report", "--fit", s(&output)]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn thread_count_from_environment() {
    let dir = TempDir::new().unwrap();
    let input = fixture_csv(dir.path(), 11);
    let (one, many) = (dir.path().join("one.json"), dir.path().join("many.json"));
    let o = Command::new(env!("CARGO_BIN_EXE_rankflow"))
        .args(["fit", "--input", s(&input), "--output", s(&one)])
        .env("RANKFLOW_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = rankflow(&["fit", "--input", s(&input), "--output", s(&many), "--threads", "4"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(fs::read(&one).unwrap(), fs::read(&many).unwrap());
    let o = Command::new(env!("CARGO_BIN_EXE_rankflow"))
        .args(["fit", "--input", s(&input), "--output", s(&many), "--force"])
        .env("RANKFLOW_THREADS", "zero")
        .output()
        .unwrap();
    assert_ne!(o.status.code(), Some(0));
}

#[test]
fn shares_long_tail_ratio_band() {
    let o = rankflow(&["shares", "--b", "1.15", "--r-start", "0.1", "--r-stop", "0.9", "--r-step", "0.05"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let table = rows(&stdout(&o));
    assert_eq!(table.len(), 17);
    for row in table {
        assert!((1.30..=1.45).contains(&row[4]), "ratio {} at r = {}", row[4], row[0]);
    }
}

#[test]
fn shares_great_hits_ratio_below_bound() {
    let o = rankflow(&["shares", "--a", "3.939e-4", "--b", "0.7959", "--r-start", "0.01", "--r-stop", "0.9"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let table = rows(&stdout(&o));
    assert_eq!(table.len(), 90);
    for row in &table {
        assert!(row[4] > 1.0 && row[4] < 1.6, "ratio {} at r = {}", row[4], row[0]);
    }
}

#[test]
fn shares_head_share_for_b_two() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("shares.csv");
    let o = rankflow(&["shares", "--b", "2", "--r", "0.2,1", "--output", s(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stderr(&o).contains("r = 0.2: head share S(0,r)/S_tot = 0.4472135955"), "{}", stderr(&o));
    let report = SalesShareReport::read_csv(&out).unwrap();
    assert_eq!(report.rows.len(), 2);
    let total = 1.0 * 2.0 / (2.0 - 1.0);
    assert!((report.rows[0].s_potential / total - (1.0 - 0.2f64.sqrt())).abs() < 1e-9);
    assert_eq!(report.rows[1].ratio, 1.0);

    let o = rankflow(&["shares", "--b", "2", "--r", "0,1"]);
    assert_eq!(o.status.code(), Some(1));
    let o = rankflow(&["shares", "--b", "2.5", "--r", "0.5"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn eval_rows() {
    let o = rankflow(&["eval", "--a", "3.939e-4", "--b", "0.6312", "--n", "857000", "--t", "0,4,1e12"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let table = rows(&stdout(&o));
    assert_eq!(table[0], vec![0.0, 0.0, 0.0]);
    assert!((table[2][1] - 1.0).abs() < 1e-12);
    assert!((table[2][2] - 857000.0).abs() < 1e-6);

    let o = rankflow(&["eval", "--a", "3.939e-4", "--b", "0.6312", "--n", "857000", "--t", "96", "--unit", "hours"]);
    let in_days =
        rankflow(&["eval", "--a", "3.939e-4", "--b", "0.6312", "--n", "857000", "--t", "4", "--unit", "days"]);
    assert_eq!(stdout(&o), stdout(&in_days));

    let o = rankflow(&["eval", "--a=-1", "--b", "0.6312", "--n", "10", "--t", "1"]);
    assert_eq!(o.status.code(), Some(1));
    let o = rankflow(&["eval", "--b", "0.6312", "--t", "1"]);
    assert_eq!(o.status.code(), Some(1), "usage errors are input errors");
    assert_eq!(rankflow(&["--help"]).status.code(), Some(0));
}

#[test]
fn oracle_values() {
    let o = rankflow(&["oracle", "gamma", "1", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let value: f64 = stdout(&o).lines().next().unwrap().trim_start_matches("value = ").parse().unwrap();
    assert!((value - (-2.0f64).exp()).abs() < 1e-12);

    let o = rankflow(&["oracle", "gamma", "-0.6312", "0.5"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("value = 0.604022441301"));
    assert!(stdout(&o).contains("error <= "));

    let o = rankflow(&["oracle", "laplace", "pareto", "3.939e-4", "0.6312", "100"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("value = 0.753934042845"), "{}", stdout(&o));

    let o = rankflow(&["oracle", "q", "1.2", "0.5"]);
    assert!(stdout(&o).contains("value = 0.30867705163"), "{}", stdout(&o));

    let o = rankflow(&["oracle", "share", "1.5", "0", "1"]);
    let value: f64 = stdout(&o).lines().next().unwrap().trim_start_matches("value = ").parse().unwrap();
    assert!((value - 3.0).abs() < 1e-9);

    assert_eq!(rankflow(&["oracle", "gamma", "1", "0"]).status.code(), Some(1));
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path
}

#[test]
fn simulate_outputs_reparse_and_are_deterministic() {
    let dir = TempDir::new().unwrap();
    let config = write_config(
        dir.path(),
        "small.txt",
        "n_items=2\na=1\nb=1.5\nhorizon=20\nseed=9\nobserve_every=1\ntrack_item=2\nsnapshots=true\n",
    );
    let prefix = |p: &str| dir.path().join(p).to_str().unwrap().to_string();
    for p in ["run1", "run2"] {
        let o = rankflow(&["simulate", "--config", s(&config), "--out-prefix", &prefix(p)]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    for suffix in ["events.csv", "trajectory.csv", "tracked.csv", "snapshots.csv", "config.txt"] {
        let a = fs::read(format!("{}_{suffix}", prefix("run1"))).unwrap();
        let b = fs::read(format!("{}_{suffix}", prefix("run2"))).unwrap();
        assert_eq!(a, b, "{suffix} differs between identical runs");
    }

    let file = |suffix: &str| PathBuf::from(format!("{}_{suffix}", prefix("run1")));
    let events = read_numeric_csv(&file("events.csv"), &["t", "item"]).unwrap();
    assert!(!events.is_empty());
    assert!(events.iter().all(|(_, r)| r[1] == 1.0 || r[1] == 2.0));
    let traj = RankingTrajectory::read_csv(file("trajectory.csv")).unwrap();
    assert_eq!(traj.n_d(), 20);
    RankingTrajectory::read_csv(file("tracked.csv")).unwrap();
    let snaps = read_numeric_csv(&file("snapshots.csv"), &["t", "item", "w", "rank"]).unwrap();
    for pair in snaps.chunks(2) {
        let mut ranks = [pair[0].1[3], pair[1].1[3]];
        ranks.sort_by(f64::total_cmp);
        assert_eq!(ranks, [1.0, 2.0]);
    }
    let echoed = fs::read_to_string(file("config.txt")).unwrap();
    let original = SimulationSettings::parse(&fs::read_to_string(&config).unwrap(), &config).unwrap();
    assert_eq!(SimulationSettings::parse(&echoed, &file("config.txt")).unwrap(), original);

    let o = rankflow(&["simulate", "--config", s(&config), "--out-prefix", &prefix("run1")]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("--force"));
    let o = rankflow(&["simulate", "--config", s(&config), "--out-prefix", &prefix("run1"), "--force"]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn simulate_rejects_bad_configs() {
    let dir = TempDir::new().unwrap();
    let prefix = dir.path().join("x");
    for (name, body) in [
        ("unknown.txt", "n_items=10\na=1\nb=1.5\nhorizon=1\nobserve_every=1\ncolour=blue\n"),
        ("missing.txt", "n_items=10\na=1\nhorizon=1\nobserve_every=1\n"),
        ("badb.txt", "n_items=10\na=1\nb=3\nhorizon=1\nobserve_every=1\n"),
        ("huge.txt", "n_items=1000\na=1\nb=1.5\nhorizon=1e9\nobserve_every=1e8\n"),
    ] {
        let config = write_config(dir.path(), name, body);
        let o = rankflow(&["simulate", "--config", s(&config), "--out-prefix", s(&prefix)]);
        assert_eq!(o.status.code(), Some(1), "{name}: {}", stderr(&o));
    }
}

#[test]
fn simulate_then_fit_round_trip() {
    let dir = TempDir::new().unwrap();
    for seed in 1..=5 {
        let body =
            format!("n_items=100000\na=0.01\nb=0.8\nhorizon=300\nseed={seed}\nobserve_every=5\nrecord_events=false\n");
        let config = write_config(dir.path(), &format!("c{seed}.txt"), &body);
        let prefix = dir.path().join(format!("s{seed}"));
        let o = rankflow(&["simulate", "--config", s(&config), "--out-prefix", s(&prefix)]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        let traj = format!("{}_trajectory.csv", prefix.display());
        let json = dir.path().join(format!("f{seed}.json"));
        let o = rankflow(&["fit", "--input", &traj, "--output", s(&json)]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        let fit = FitResult::read_json(&json).unwrap();
        assert!((fit.a_star / 0.01 - 1.0).abs() < 0.10, "seed {seed}: a* = {}", fit.a_star);
        assert!((fit.b_star - 0.8).abs() < 0.05, "seed {seed}: b* = {}", fit.b_star);

        if seed == 1 {
            let shares = dir.path().join("shares.csv");
            let o = rankflow(&[
                "report",
                "--fit",
                s(&json),
                "--shares",
                s(&shares),
                "--r-start",
                "0.1",
                "--r-stop",
                "0.9",
                "--r-step",
                "0.1",
            ]);
            assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
            assert!(stdout(&o).contains("regime = GreatHits"), "{}", stdout(&o));
            assert!(stdout(&o).contains("diverges"));
            assert_eq!(SalesShareReport::read_csv(&shares).unwrap().rows.len(), 9);
        }
    }
}
