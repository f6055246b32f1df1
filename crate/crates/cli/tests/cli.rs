use std::path::Path;
use std::process::{Command, Output};

use keygraph::sampler::SampledGraph;
use tempfile::TempDir;

const PROBE_HEADER: &str = "quantity,i,j,value";
const DIMENSION_HEADER: &str = "n,P,K1,K2,lambda1,c_n,P_over_n,nK1sq_over_P,gapA";
const SWEEP_HEADER: &str = "n,c_target,c_achieved,P,K1,K2,trials,p_no_isolated,p_no_isolated_se,p_connected,p_connected_se,mean_isolated,mean_isolated_se,exact_isolated,status";
const RESILIENCE_HEADER: &str =
    "s,pool_coverage,pool_coverage_se,pool_coverage_exact,compromised_links,compromised_links_se";

const SMALL_SCHEME: &str = "[scheme]\nprobs = [0.5, 0.5]\nring_sizes = [1, 2]\npool_size = 4\n";
const PRESET: &str = "[preset]\npool_rule = \"nlogn\"\nring_shape = [1.0, 2.0]\nprobs = [0.5, 0.5]\ntarget_c = 2.0\n";

fn keygraph(dir: &Path, config: &str, args: &[&str]) -> Output {
    let path = dir.join("run.toml");
    std::fs::write(&path, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_keygraph"))
        .args(args)
        .arg("--config")
        .arg(&path)
        .env_remove("KEYGRAPH_THREADS")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// `quantity,i,j` -> value.
fn probe_value(text: &str, key: &str) -> f64 {
    text.lines()
        .find_map(|l| l.strip_prefix(key)?.strip_prefix(',')?.parse().ok())
        .unwrap_or_else(|| panic!("no row {key}"))
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn probe_small_scheme() {
    let dir = TempDir::new().unwrap();
    let out = stdout(&keygraph(
        dir.path(),
        &format!("{SMALL_SCHEME}[experiment]\nn = 3\nmaster_seed = 4\n"),
        &["probe"],
    ));
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("# keygraph probe master_seed=4"));
    assert_eq!(lines.next(), Some(PROBE_HEADER));
    assert_eq!(probe_value(&out, "lambda,1,"), 0.375);
    assert_eq!(probe_value(&out, "expected_isolated,,"), 0.752604167);
    assert_eq!(probe_value(&out, "p,2,2"), 0.833333333);
}

#[test]
fn probe_single_class_has_one_lambda() {
    let dir = TempDir::new().unwrap();
    let config = "[scheme]\nprobs = [1.0]\nring_sizes = [1]\npool_size = 4\n[experiment]\nn = 3\n";
    let out = stdout(&keygraph(dir.path(), config, &["probe"]));
    assert_eq!(out.lines().filter(|l| l.starts_with("lambda,")).count(), 1);
    assert!(out.starts_with("# keygraph probe master_seed=0\n"));
}

#[test]
fn probe_rejects_non_monotone_rings() {
    let dir = TempDir::new().unwrap();
    let config =
        "[scheme]\nprobs = [0.5, 0.5]\nring_sizes = [2, 1]\npool_size = 4\n[experiment]\nn = 3\n";
    let o = keygraph(dir.path(), config, &["probe"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("nondecreasing"));
}

#[test]
fn config_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    let both = format!("{SMALL_SCHEME}{PRESET}[experiment]\nn = 3\n");
    assert_eq!(
        keygraph(dir.path(), &both, &["probe"]).status.code(),
        Some(2)
    );
    let unknown = format!("{SMALL_SCHEME}[experiment]\nn = 3\nbogus = 1\n");
    assert_eq!(
        keygraph(dir.path(), &unknown, &["probe"]).status.code(),
        Some(2)
    );
    let missing = Command::new(env!("CARGO_BIN_EXE_keygraph"))
        .args(["probe", "--config", "/nonexistent/run.toml"])
        .output()
        .unwrap();
    assert_eq!(missing.status.code(), Some(2));
    // dimension needs a preset
    let scheme_only = format!("{SMALL_SCHEME}[experiment]\nn = 3\n");
    assert_eq!(
        keygraph(dir.path(), &scheme_only, &["dimension"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn dimension_single_class_example() {
    let dir = TempDir::new().unwrap();
    let config = "[preset]\npool_rule = \"nlogn\"\nring_shape = [1.0]\nprobs = [1.0]\ntarget_c = 1.5\n[experiment]\nn = 10000\n";
    let out = stdout(&keygraph(dir.path(), config, &["dimension"]));
    let rows = csv_rows(&out);
    assert_eq!(rows.len(), 1);
    assert_eq!(&rows[0][..3], ["10000", "92104", "12"]);
}

#[test]
fn dimension_grid_meets_target() {
    let dir = TempDir::new().unwrap();
    let config = format!("{PRESET}[experiment]\nn_grid = [1000, 2000, 5000]\n");
    let out = stdout(&keygraph(dir.path(), &config, &["dimension"]));
    assert!(out.lines().any(|l| l == DIMENSION_HEADER));
    let rows = csv_rows(&out);
    assert_eq!(rows.len(), 3);
    for row in rows {
        assert!(row[5].parse::<f64>().unwrap() >= 2.0);
    }
}

#[test]
fn dimension_infeasible_exits_3() {
    let dir = TempDir::new().unwrap();
    let config = format!(
        "{}[experiment]\nn = 1000\n",
        PRESET.replace("2.0\n", "1e9\n")
    );
    let o = keygraph(dir.path(), &config, &["dimension"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn sweep_table_and_trailer() {
    let dir = TempDir::new().unwrap();
    let config = format!(
        "{PRESET}[experiment]\nn_grid = [300]\nc_grid = [0.5, 2.0]\ntrials = 20\nmaster_seed = 9\n"
    );
    let out = stdout(&keygraph(dir.path(), &config, &["sweep"]));
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "# keygraph sweep master_seed=9");
    assert_eq!(lines[1], SWEEP_HEADER);
    assert!(lines
        .last()
        .unwrap()
        .starts_with("# master_seed=9 wall_time_s="));
    let rows = csv_rows(&out);
    assert_eq!(rows.len(), 2);
    for row in &rows {
        assert_eq!(row.len(), SWEEP_HEADER.split(',').count());
        assert_eq!(row.last().unwrap(), "ok");
    }
}

#[test]
fn sweep_single_trial_marks_stderr_unavailable() {
    let dir = TempDir::new().unwrap();
    let config = format!("{PRESET}[experiment]\nn = 200\nc_grid = [1.0]\ntrials = 5\n");
    let out = stdout(&keygraph(dir.path(), &config, &["sweep", "--trials", "1"]));
    let row = &csv_rows(&out)[0];
    assert_eq!(row[6], "1");
    assert_eq!(row[8], "n/a");
    assert_eq!(row[10], "n/a");
}

#[test]
fn sweep_flags_infeasible_cells() {
    let dir = TempDir::new().unwrap();
    let config = format!("{PRESET}[experiment]\nn = 200\nc_grid = [1.0, 1e6]\ntrials = 3\n");
    let out = stdout(&keygraph(dir.path(), &config, &["sweep"]));
    let rows = csv_rows(&out);
    assert_eq!(rows[0].last().unwrap(), "ok");
    assert_eq!(rows[1].last().unwrap(), "infeasible");
    assert_eq!(rows[1].len(), SWEEP_HEADER.split(',').count());
}

#[test]
fn sweep_jsonl_records() {
    let dir = TempDir::new().unwrap();
    let config = format!(
        "{PRESET}[experiment]\nn = 200\nc_grid = [1.0]\ntrials = 4\n[output]\nformat = \"jsonl\"\n"
    );
    let out = stdout(&keygraph(dir.path(), &config, &["sweep"]));
    let records: Vec<serde_json::Value> = out
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(records.len(), 5);
    assert_eq!(records[0]["master_seed"], 0);
    assert_eq!(records[1]["n"], 200);
    assert!(records[4]["isolated"].is_u64());
}

#[test]
fn resilience_rows() {
    let dir = TempDir::new().unwrap();
    let config = "[scheme]\nprobs = [0.5, 0.5]\nring_sizes = [5, 10]\npool_size = 200\n[experiment]\nn = 60\ns = [0, 5, 20]\ntrials = 500\n";
    let out = stdout(&keygraph(dir.path(), config, &["resilience"]));
    assert!(out.lines().any(|l| l == RESILIENCE_HEADER));
    let rows = csv_rows(&out);
    assert_eq!(rows[0], ["0", "0", "0", "0", "0", "0"]);
    let coverage: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    assert!(coverage.windows(2).all(|w| w[0] <= w[1]));
    for row in &rows[1..] {
        let (mean, se, exact): (f64, f64, f64) = (
            row[1].parse().unwrap(),
            row[2].parse().unwrap(),
            row[3].parse().unwrap(),
        );
        assert!((mean - exact).abs() <= 3.0 * se, "{row:?}");
    }
}

#[test]
fn resilience_rejects_capture_beyond_n() {
    let dir = TempDir::new().unwrap();
    let config = format!("{SMALL_SCHEME}[experiment]\nn = 3\ns = 4\ntrials = 5\n");
    assert_eq!(
        keygraph(dir.path(), &config, &["resilience"]).status.code(),
        Some(2)
    );
}

#[test]
fn dump_graph_round_trips_and_writes_file() {
    let dir = TempDir::new().unwrap();
    let out_path = dir.path().join("g.txt");
    let config = "[scheme]\nprobs = [0.5, 0.5]\nring_sizes = [3, 6]\npool_size = 100\n[experiment]\nn = 40\nbeta = 0.4\ngamma = 0.4\n";
    let o = keygraph(
        dir.path(),
        config,
        &[
            "dump-graph",
            "--seed",
            "3",
            "--out",
            out_path.to_str().unwrap(),
        ],
    );
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let text = std::fs::read_to_string(&out_path).unwrap();
    assert!(text.starts_with("# keygraph dump-graph master_seed=3 trial=0\n"));
    let g = SampledGraph::parse_dump(text.as_bytes()).unwrap();
    assert_eq!(g.n(), 40);
    assert_eq!(g.pool_size, 100);
    assert_eq!(
        text.lines()
            .filter(|l| !l.starts_with('#'))
            .collect::<Vec<_>>()
            .join("\n")
            + "\n",
        g.dump()
    );
}

#[test]
fn bodies_identical_across_thread_counts() {
    let dir = TempDir::new().unwrap();
    let config = format!("{PRESET}[experiment]\nn_grid = [600, 900]\nc_grid = [0.8, 1.2]\ntrials = 30\nmaster_seed = 21\n");
    let body = |threads: &str| {
        let out = stdout(&keygraph(
            dir.path(),
            &config,
            &["sweep", "--threads", threads],
        ));
        out.lines()
            .filter(|l| !l.starts_with("# master_seed="))
            .collect::<Vec<_>>()
            .join("\n")
    };
    assert_eq!(body("1"), body("4"));
}
