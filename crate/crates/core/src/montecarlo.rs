//! Reproducible Monte-Carlo harness.
//!
//! Trial `t` always samples from `SeedSpec(master_seed, t)`. Trials run in
//! parallel on the rayon pool, per-trial results are collected in index order
//! and reduced sequentially, so every estimate is bit-identical for any
//! number of worker threads.

use rand::seq::index;
use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::{graph_stats, prefix_connected};
use crate::error::{Error, Result};
use crate::exactprob;
use crate::model::SchemeParams;
use crate::sampler::{build_graph, intersects, sample_ring, KeyId, SeedSpec};
use crate::scaling::{self, ScalingPreset};

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    /// Sample standard deviation over `sqrt(trials)`; NaN for a single trial.
    pub stderr: f64,
    pub trials: u64,
    pub ci95_low: f64,
    pub ci95_high: f64,
    pub master_seed: u64,
}

impl Estimate {
    /// Mean and standard error of `values`, summed in order.
    pub fn from_values(values: impl IntoIterator<Item = f64>, master_seed: u64) -> Self {
        let values: Vec<f64> = values.into_iter().collect();
        let trials = values.len() as u64;
        let count = values.len() as f64;
        let mean = values.iter().sum::<f64>() / count;
        let stderr = if trials > 1 {
            let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
            (ss / (count - 1.0)).sqrt() / count.sqrt()
        } else {
            f64::NAN
        };
        Estimate {
            mean,
            stderr,
            trials,
            ci95_low: mean - 1.96 * stderr,
            ci95_high: mean + 1.96 * stderr,
            master_seed,
        }
    }

    pub fn from_flags(flags: impl IntoIterator<Item = bool>, master_seed: u64) -> Self {
        Self::from_values(
            flags.into_iter().map(|f| if f { 1.0 } else { 0.0 }),
            master_seed,
        )
    }

    /// `|mean - target| <= k·stderr`. With a zero standard error the mean
    /// must hit the target exactly (up to 1e-12).
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.mean - target).abs() <= k * self.stderr + 1e-12
    }
}

/// Observables of one trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TrialRecord {
    pub trial_index: u64,
    /// `I_n`.
    pub isolated: u64,
    /// `Y_n`, isolated class-1 nodes.
    pub class1_isolated: u64,
    pub connected: bool,
    pub component_count: u64,
    /// No isolated node, yet disconnected.
    pub no_iso_but_disconnected: bool,
    /// Nodes 1 and 2 are both class-1 and both isolated.
    pub first_pair_class1_isolated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialSummary {
    pub n: u64,
    pub no_isolated: Estimate,
    pub connected: Estimate,
    pub isolated: Estimate,
    pub class1_isolated: Estimate,
    pub no_iso_but_disconnected: Estimate,
    pub first_pair_class1_isolated: Estimate,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub records: Option<Vec<TrialRecord>>,
}

fn check_trials(trials: u64) -> Result<()> {
    if trials == 0 {
        return Err(Error::invalid("trial count must be at least 1"));
    }
    Ok(())
}

/// Samples and measures a single trial.
pub fn run_trial(theta: &SchemeParams, n: usize, seed: SeedSpec) -> Result<TrialRecord> {
    let g = build_graph(n, theta, seed)?;
    let stats = graph_stats(&g);
    let first_pair = n >= 2 && {
        let degrees = g.degrees();
        g.classes[0] == 0 && g.classes[1] == 0 && degrees[0] == 0 && degrees[1] == 0
    };
    Ok(TrialRecord {
        trial_index: seed.trial_index,
        isolated: stats.isolated_total as u64,
        class1_isolated: stats.isolated_by_class[0] as u64,
        connected: stats.connected,
        component_count: stats.component_count as u64,
        no_iso_but_disconnected: stats.isolated_total == 0 && !stats.connected,
        first_pair_class1_isolated: first_pair,
    })
}

/// Runs `trials` independent graphs of `n` nodes.
pub fn run_trials(
    theta: &SchemeParams,
    n: u64,
    trials: u64,
    master_seed: u64,
    keep_records: bool,
) -> Result<TrialSummary> {
    check_trials(trials)?;
    if n == 0 {
        return Err(Error::invalid("node count must be at least 1"));
    }
    let records = (0..trials)
        .into_par_iter()
        .map(|t| run_trial(theta, n as usize, SeedSpec::new(master_seed, t)))
        .collect::<Result<Vec<_>>>()?;
    let est =
        |f: &dyn Fn(&TrialRecord) -> f64| Estimate::from_values(records.iter().map(f), master_seed);
    let flag = |b: bool| if b { 1.0 } else { 0.0 };
    Ok(TrialSummary {
        n,
        no_isolated: est(&|r| flag(r.isolated == 0)),
        connected: est(&|r| flag(r.connected)),
        isolated: est(&|r| r.isolated as f64),
        class1_isolated: est(&|r| r.class1_isolated as f64),
        no_iso_but_disconnected: est(&|r| flag(r.no_iso_but_disconnected)),
        first_pair_class1_isolated: est(&|r| flag(r.first_pair_class1_isolated)),
        records: keep_records.then_some(records),
    })
}

/// Outcome of one `(n, c)` cell of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub n: u64,
    pub c_target: f64,
    /// `None` when the cell could not be dimensioned.
    pub cell: Option<SweepCell>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepCell {
    pub theta: SchemeParams,
    pub c_achieved: f64,
    pub exact_isolated: f64,
    pub summary: TrialSummary,
}

impl SweepRow {
    pub fn status(&self) -> &'static str {
        if self.cell.is_some() {
            "ok"
        } else {
            "infeasible"
        }
    }
}

/// Zero-one law table: every `(n, c)` cell is dimensioned with
/// [`scaling::instantiate`] and simulated with [`run_trials`].
pub fn sweep(
    preset: &ScalingPreset,
    c_grid: &[f64],
    n_grid: &[u64],
    trials: u64,
    master_seed: u64,
    keep_records: bool,
) -> Result<Vec<SweepRow>> {
    if c_grid.is_empty() || n_grid.is_empty() {
        return Err(Error::invalid("sweep grids must not be empty"));
    }
    check_trials(trials)?;
    let mut rows = Vec::with_capacity(c_grid.len() * n_grid.len());
    for &n in n_grid {
        for &c in c_grid {
            let cell_preset = preset.with_target(c);
            cell_preset.validate()?;
            let cell = match scaling::instantiate(&cell_preset, n) {
                Ok(theta) => Some(SweepCell {
                    c_achieved: scaling::achieved_c(n, &theta)?,
                    exact_isolated: exactprob::expected_isolated(n, &theta)?,
                    summary: run_trials(&theta, n, trials, master_seed, keep_records)?,
                    theta,
                }),
                Err(Error::Infeasible { .. }) => None,
                Err(e) => return Err(e),
            };
            rows.push(SweepRow {
                n,
                c_target: c,
                cell,
            });
        }
    }
    Ok(rows)
}

/// Empirical frequency with which a class-`i` ring and an independent
/// class-`j` ring intersect.
pub fn edge_freq_check(
    theta: &SchemeParams,
    i: usize,
    j: usize,
    pairs: u64,
    master_seed: u64,
) -> Result<Estimate> {
    check_trials(pairs)?;
    theta.mix().check_class(i)?;
    theta.mix().check_class(j)?;
    let (ki, kj, pool) = (theta.ring_size(i), theta.ring_size(j), theta.pool_size());
    let hits = (0..pairs)
        .into_par_iter()
        .map(|t| {
            let seed = SeedSpec::new(master_seed, t);
            let a = sample_ring(ki, pool, &mut seed.node_stream(0))?;
            let b = sample_ring(kj, pool, &mut seed.node_stream(1))?;
            Ok(intersects(&a, &b))
        })
        .collect::<Result<Vec<bool>>>()?;
    Ok(Estimate::from_flags(hits, master_seed))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TreeBoundCheck {
    pub ell: u32,
    /// Probability that the first `ell` nodes induce a connected subgraph.
    pub connected: Estimate,
    /// `min(1, ℓ^(ℓ-2)·p_rr^(ℓ-1))`.
    pub bound: f64,
    /// The bound is capped at 1 and says nothing.
    pub vacuous: bool,
    /// Empirical probability does not exceed the bound by more than 3 SE.
    pub holds: bool,
}

/// Checks the spanning-tree union bound on the connectivity of `ell` nodes.
pub fn tree_bound_check(
    theta: &SchemeParams,
    ell: u32,
    trials: u64,
    master_seed: u64,
) -> Result<TreeBoundCheck> {
    if !(2..=8).contains(&ell) {
        return Err(Error::invalid(format!("ell = {ell} must lie in [2, 8]")));
    }
    check_trials(trials)?;
    let flags = (0..trials)
        .into_par_iter()
        .map(|t| {
            let g = build_graph(ell as usize, theta, SeedSpec::new(master_seed, t))?;
            Ok(prefix_connected(&g, ell as usize))
        })
        .collect::<Result<Vec<bool>>>()?;
    let connected = Estimate::from_flags(flags, master_seed);
    let bound = exactprob::cayley_tree_bound(ell, theta);
    let slack = if connected.stderr.is_nan() {
        0.0
    } else {
        3.0 * connected.stderr
    };
    Ok(TreeBoundCheck {
        ell,
        connected,
        bound,
        vacuous: bound >= 1.0,
        holds: connected.mean <= bound + slack + 1e-12,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CaptureEstimates {
    pub captured: u64,
    /// Fraction of the pool held by the captured nodes.
    pub pool_coverage: Estimate,
    /// Fraction of links between uncaptured nodes whose every shared key is
    /// held by a captured node (0 when no such link exists).
    pub compromised_links: Estimate,
}

fn capture_trial(theta: &SchemeParams, n: usize, s: usize, seed: SeedSpec) -> Result<(f64, f64)> {
    let g = build_graph(n, theta, seed)?;
    let mut captured = vec![false; n];
    for x in index::sample(&mut seed.aux_stream(0), n, s).iter() {
        captured[x] = true;
    }
    let mut keys: Vec<KeyId> = (0..n)
        .filter(|&x| captured[x])
        .flat_map(|x| g.rings[x].iter().copied())
        .collect();
    keys.sort_unstable();
    keys.dedup();
    let coverage = keys.len() as f64 / theta.pool_size() as f64;

    let mut links = 0u64;
    let mut compromised = 0u64;
    for &(x, y) in &g.edges {
        if captured[x as usize] || captured[y as usize] {
            continue;
        }
        links += 1;
        let (a, b) = (&g.rings[x as usize], &g.rings[y as usize]);
        let all_covered = a
            .iter()
            .filter(|k| b.binary_search(k).is_ok())
            .all(|k| keys.binary_search(k).is_ok());
        if all_covered {
            compromised += 1;
        }
    }
    let link_fraction = if links == 0 {
        0.0
    } else {
        compromised as f64 / links as f64
    };
    Ok((coverage, link_fraction))
}

/// Node capture attack: `s` uniformly random nodes give up their key rings.
pub fn capture_attack(
    theta: &SchemeParams,
    n: u64,
    s: u64,
    trials: u64,
    master_seed: u64,
) -> Result<CaptureEstimates> {
    if s > n {
        return Err(Error::invalid(format!(
            "cannot capture s = {s} nodes out of n = {n}"
        )));
    }
    check_trials(trials)?;
    let results = (0..trials)
        .into_par_iter()
        .map(|t| capture_trial(theta, n as usize, s as usize, SeedSpec::new(master_seed, t)))
        .collect::<Result<Vec<_>>>()?;
    Ok(CaptureEstimates {
        captured: s,
        pool_coverage: Estimate::from_values(results.iter().map(|r| r.0), master_seed),
        compromised_links: Estimate::from_values(results.iter().map(|r| r.1), master_seed),
    })
}
