use std::fmt::Write as _;
use std::time::Instant;

use keygraph::analysis::{event_thresholds, DEFAULT_PREFIX_CAP};
use keygraph::exactprob::{self, EdgeProbMatrix};
use keygraph::montecarlo::{self, Estimate, TrialRecord};
use keygraph::sampler::{build_graph, SeedSpec};
use keygraph::scaling;
use keygraph::SchemeParams;
use serde::Serialize;

use crate::config::{OutputFormat, RunConfig};
use crate::format::sig9;
use crate::CliError;

/// Header comment naming the command and its seed.
fn header(command: &str, config: &RunConfig) -> String {
    format!(
        "# keygraph {command} master_seed={}\n",
        config.master_seed()
    )
}

fn runtime(e: keygraph::Error) -> CliError {
    CliError::Runtime(e.to_string())
}

fn k_columns(classes: usize) -> String {
    (1..=classes).map(|j| format!(",K{j}")).collect()
}

pub fn probe(config: &RunConfig) -> Result<String, CliError> {
    let n = config.fixed_n()?;
    if n == 0 {
        return Err(CliError::Config("experiment.n must be at least 1".into()));
    }
    let theta = config.scheme_at(n.max(2))?;
    let mut out = header("probe", config);
    out.push_str("quantity,i,j,value\n");
    let mut row = |name: &str, i: Option<usize>, j: Option<usize>, value: f64| {
        let idx = |v: Option<usize>| v.map(|v| (v + 1).to_string()).unwrap_or_default();
        let _ = writeln!(out, "{name},{},{},{}", idx(i), idx(j), sig9(value));
    };
    let r = theta.num_classes();
    row("n", None, None, n as f64);
    row("pool_size", None, None, theta.pool_size() as f64);
    for (i, &k) in theta.mix().ring_sizes().iter().enumerate() {
        row("ring_size", Some(i), None, k as f64);
    }
    row("ring_size_mean", None, None, theta.mix().ring_size_mean());
    let matrix = EdgeProbMatrix::new(&theta);
    for i in 0..r {
        for j in 0..r {
            row("p", Some(i), Some(j), matrix.get(i, j));
            row(
                "saturated",
                Some(i),
                Some(j),
                matrix.is_saturated(i, j) as u8 as f64,
            );
            row(
                "p_lower_bound",
                Some(i),
                Some(j),
                exactprob::edge_prob_lower_bound(i, j, &theta).map_err(runtime)?,
            );
            row(
                "p_small_limit",
                Some(i),
                Some(j),
                exactprob::edge_prob_small_limit(i, j, &theta).map_err(runtime)?,
            );
        }
    }
    for (i, lambda) in exactprob::mean_edge_probs(&theta).into_iter().enumerate() {
        row("lambda", Some(i), None, lambda);
    }
    row(
        "expected_isolated",
        None,
        None,
        exactprob::expected_isolated(n, &theta).map_err(runtime)?,
    );
    row(
        "expected_class1_isolated",
        None,
        None,
        exactprob::expected_class1_isolated(n, &theta).map_err(runtime)?,
    );
    if n >= 2 {
        row(
            "pair_class1_isolated",
            None,
            None,
            exactprob::pair_class1_isolated_prob(n, &theta).map_err(runtime)?,
        );
        row(
            "second_moment_ratio",
            None,
            None,
            exactprob::second_moment_ratio(n, &theta).unwrap_or(f64::NAN),
        );
        row(
            "c_n",
            None,
            None,
            scaling::achieved_c(n, &theta).map_err(runtime)?,
        );
        row(
            "isolation_leading_term",
            None,
            None,
            scaling::isolation_leading_term(n, &theta).map_err(runtime)?,
        );
    }
    row(
        "popoviciu_bound",
        None,
        None,
        exactprob::popoviciu_bound(&theta),
    );
    row(
        "z_variance",
        None,
        None,
        exactprob::no_overlap_variance(&theta),
    );
    row(
        "scaling_gap",
        None,
        None,
        scaling::scaling_equivalence_gap(&theta),
    );
    // Capture-count rows carry `s` in the `i` column.
    if let Some(s) = &config.experiment.s {
        for s in s.to_vec() {
            let _ = writeln!(
                out,
                "expected_pool_coverage,{s},,{}",
                sig9(exactprob::expected_pool_coverage(s, &theta))
            );
        }
    }
    Ok(out)
}

pub fn dimension(config: &RunConfig) -> Result<String, CliError> {
    let preset = config.preset()?;
    let grid = config.n_grid()?;
    if let Some(&bad) = grid.iter().find(|&&n| n < 2) {
        return Err(CliError::Config(format!(
            "dimensioning needs n >= 2, got {bad}"
        )));
    }
    let sigma = config.experiment.sigma.unwrap_or(1.0);
    let report = scaling::check_theorem2_conditions(&preset, &grid, sigma)
        .map_err(|e| CliError::Config(e.to_string()))?;
    let mut out = header("dimension", config);
    let _ = writeln!(
        out,
        "# target_c={} sigma={} P_over_n_trend={:?} nK1sq_over_P_trend={:?}",
        sig9(preset.target_c),
        sig9(sigma),
        report.pool_over_n_trend,
        report.n_k1sq_over_pool_trend
    );
    out.push_str(&report.to_csv(preset.num_classes(), sig9));
    if !report.infeasible.is_empty() {
        let ns: Vec<String> = report.infeasible.iter().map(u64::to_string).collect();
        return Err(CliError::InfeasibleWithOutput(
            format!(
                "target c = {} cannot be reached at n = {}",
                preset.target_c,
                ns.join(", ")
            ),
            out,
        ));
    }
    Ok(out)
}

fn est_cells(e: &Estimate) -> String {
    format!("{},{}", sig9(e.mean), sig9(e.stderr))
}

#[derive(Serialize)]
struct RawTrial<'a> {
    n: u64,
    c_target: f64,
    master_seed: u64,
    #[serde(flatten)]
    record: &'a TrialRecord,
}

pub fn sweep(config: &RunConfig) -> Result<(String, String), CliError> {
    let start = Instant::now();
    let preset = config.preset()?;
    let c_grid = config
        .experiment
        .c_grid
        .clone()
        .filter(|g| !g.is_empty())
        .ok_or_else(|| CliError::Config("experiment.c_grid is required".into()))?;
    let n_grid = config.n_grid()?;
    if let Some(&bad) = n_grid.iter().find(|&&n| n < 2) {
        return Err(CliError::Config(format!("sweep needs n >= 2, got {bad}")));
    }
    let trials = config.trials()?;
    let seed = config.master_seed();
    let jsonl = config.output.format == OutputFormat::Jsonl;
    for &c in &c_grid {
        preset
            .with_target(c)
            .validate()
            .map_err(|e| CliError::Config(format!("invalid c_grid entry: {e}")))?;
    }
    let rows =
        montecarlo::sweep(&preset, &c_grid, &n_grid, trials, seed, jsonl).map_err(runtime)?;

    let mut out = String::new();
    if jsonl {
        let meta = serde_json::json!({ "command": "sweep", "master_seed": seed, "trials": trials });
        let _ = writeln!(out, "{meta}");
        for row in &rows {
            let Some(cell) = &row.cell else { continue };
            for record in cell.summary.records.iter().flatten() {
                let raw = RawTrial {
                    n: row.n,
                    c_target: row.c_target,
                    master_seed: seed,
                    record,
                };
                let _ = writeln!(
                    out,
                    "{}",
                    serde_json::to_string(&raw).map_err(|e| CliError::Runtime(e.to_string()))?
                );
            }
        }
    } else {
        out.push_str(&header("sweep", config));
        let classes = preset.num_classes();
        let _ = writeln!(
            out,
            "n,c_target,c_achieved,P{},trials,p_no_isolated,p_no_isolated_se,p_connected,p_connected_se,mean_isolated,mean_isolated_se,exact_isolated,status",
            k_columns(classes)
        );
        for row in &rows {
            let _ = write!(out, "{},{}", row.n, sig9(row.c_target));
            match &row.cell {
                Some(cell) => {
                    let s = &cell.summary;
                    let _ = write!(out, ",{},{}", sig9(cell.c_achieved), cell.theta.pool_size());
                    for k in cell.theta.mix().ring_sizes() {
                        let _ = write!(out, ",{k}");
                    }
                    let _ = writeln!(
                        out,
                        ",{trials},{},{},{},{},{}",
                        est_cells(&s.no_isolated),
                        est_cells(&s.connected),
                        est_cells(&s.isolated),
                        sig9(cell.exact_isolated),
                        row.status()
                    );
                }
                None => {
                    let empty = ",".repeat(classes + 2);
                    let _ = writeln!(out, "{empty},{trials},,,,,,,,{}", row.status());
                }
            }
        }
    }
    let trailer = format!(
        "# master_seed={seed} wall_time_s={:.3}\n",
        start.elapsed().as_secs_f64()
    );
    Ok((out, trailer))
}

pub fn resilience(config: &RunConfig) -> Result<String, CliError> {
    let n = config.fixed_n()?;
    let s_grid = config
        .experiment
        .s
        .as_ref()
        .map(|s| s.to_vec())
        .ok_or_else(|| CliError::Config("experiment.s is required".into()))?;
    if let Some(&bad) = s_grid.iter().find(|&&s| s > n) {
        return Err(CliError::Config(format!("s = {bad} exceeds n = {n}")));
    }
    let trials = config.trials()?;
    let theta = config.scheme_at(n)?;
    let seed = config.master_seed();
    let mut out = header("resilience", config);
    out.push_str("s,pool_coverage,pool_coverage_se,pool_coverage_exact,compromised_links,compromised_links_se\n");
    for s in s_grid {
        let est = montecarlo::capture_attack(&theta, n, s, trials, seed).map_err(runtime)?;
        let _ = writeln!(
            out,
            "{s},{},{},{}",
            est_cells(&est.pool_coverage),
            sig9(exactprob::expected_pool_coverage(s, &theta)),
            est_cells(&est.compromised_links)
        );
    }
    Ok(out)
}

pub fn dump_graph(config: &RunConfig) -> Result<String, CliError> {
    let n = config.fixed_n()?;
    if n == 0 {
        return Err(CliError::Config("experiment.n must be at least 1".into()));
    }
    let theta: SchemeParams = config.scheme_at(n.max(2))?;
    let trial = config.experiment.trial.unwrap_or(0);
    let seed = SeedSpec::new(config.master_seed(), trial);
    let g = build_graph(n as usize, &theta, seed).map_err(runtime)?;
    let mut out = format!(
        "# keygraph dump-graph master_seed={} trial={trial}\n",
        seed.master_seed
    );
    if let (Some(beta), Some(gamma)) = (config.experiment.beta, config.experiment.gamma) {
        let thresholds = event_thresholds(
            n,
            theta.mix().smallest_ring(),
            theta.pool_size(),
            beta,
            gamma,
        )
        .map_err(|e| CliError::Config(e.to_string()))?;
        let cap = config
            .experiment
            .prefix_cap
            .unwrap_or(DEFAULT_PREFIX_CAP)
            .min(n as usize);
        let profile =
            keygraph::analysis::prefix_union_profile(&g, cap, &thresholds).map_err(runtime)?;
        let flagged: Vec<String> = profile
            .iter()
            .filter(|p| p.violated)
            .map(|p| p.ell.to_string())
            .collect();
        let _ = writeln!(
            out,
            "# L_n={} prefix_violations=[{}]",
            thresholds.l_n,
            flagged.join(" ")
        );
    }
    out.push_str(&g.dump());
    Ok(out)
}
