//! Scaling families `n -> θ_n`, the critical constant `c_n`, ring-size
//! dimensioning, and finite-grid reports of the side conditions that go with
//! the connectivity results.
//!
//! Asymptotic conditions (`ω`, `Ω`) are undecidable at finite `n`; the
//! reports here only expose the numbers and a monotone-trend indicator across
//! the caller's grid.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exactprob::{self, EdgeProbMatrix};
use crate::model::{validate_probs, ClassMix, SchemeParams};

/// How the key pool grows with the number of nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "lowercase")]
pub enum PoolRule {
    /// `P = ⌈σ·n⌉`.
    Linear { sigma: f64 },
    /// `P = ⌈n·ln n⌉`.
    NLogN,
    /// `P = P₀` for every `n`.
    Fixed { pool: u64 },
}

impl PoolRule {
    pub fn pool_size(&self, n: u64) -> u64 {
        let nf = n as f64;
        match *self {
            PoolRule::Linear { sigma } => (sigma * nf).ceil() as u64,
            PoolRule::NLogN => (nf * nf.ln()).ceil() as u64,
            PoolRule::Fixed { pool } => pool,
        }
    }
}

/// A rule mapping `n` to scheme parameters that target `λ_1(n) ≈ c·ln n / n`.
///
/// Ring sizes keep a fixed shape relative to the smallest ring:
/// `K[j] = max(1, round(ρ[j]·K₁))`, so dimensioning is a 1-D search over `K₁`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingPreset {
    pub pool_rule: PoolRule,
    pub ring_shape: Vec<f64>,
    pub probs: Vec<f64>,
    pub target_c: f64,
}

impl ScalingPreset {
    pub fn new(
        pool_rule: PoolRule,
        ring_shape: Vec<f64>,
        probs: Vec<f64>,
        target_c: f64,
    ) -> Result<Self> {
        let preset = ScalingPreset {
            pool_rule,
            ring_shape,
            probs,
            target_c,
        };
        preset.validate()?;
        Ok(preset)
    }

    pub fn validate(&self) -> Result<()> {
        validate_probs(&self.probs)?;
        validate_shape(&self.ring_shape, self.probs.len())?;
        if !(self.target_c > 0.0) || !self.target_c.is_finite() {
            return Err(Error::invalid(format!(
                "target c must be a positive finite number, got {}",
                self.target_c
            )));
        }
        match self.pool_rule {
            PoolRule::Linear { sigma } if !(sigma > 0.0) || !sigma.is_finite() => Err(
                Error::invalid(format!("pool growth sigma must be positive, got {sigma}")),
            ),
            PoolRule::Fixed { pool } if pool < 2 => Err(Error::invalid(format!(
                "fixed pool size must be at least 2, got {pool}"
            ))),
            _ => Ok(()),
        }
    }

    /// Same preset with another target constant.
    pub fn with_target(&self, target_c: f64) -> Self {
        ScalingPreset {
            target_c,
            ..self.clone()
        }
    }

    pub fn num_classes(&self) -> usize {
        self.probs.len()
    }
}

fn validate_shape(shape: &[f64], classes: usize) -> Result<()> {
    if shape.len() != classes {
        return Err(Error::LengthMismatch {
            field: "ring shape",
            expected: classes,
            actual: shape.len(),
        });
    }
    if shape[0] != 1.0 {
        return Err(Error::invalid(format!(
            "ring shape must start at 1, got {}",
            shape[0]
        )));
    }
    for w in shape.windows(2) {
        if !(w[1] >= w[0]) || !w[1].is_finite() {
            return Err(Error::invalid(format!(
                "ring shape must be nondecreasing and finite, got {shape:?}"
            )));
        }
    }
    Ok(())
}

/// Ring vector for a given smallest ring size: `K[j] = max(1, round(ρ[j]·K₁))`
/// (halves rounded up), clipped to `P - 1`.
pub fn ring_vector(k1: u64, shape: &[f64], pool: u64) -> Result<Vec<u64>> {
    let cap = pool.saturating_sub(1).max(1);
    let ks: Vec<u64> = shape
        .iter()
        .map(|&rho| {
            let raw = (rho * k1 as f64 + 0.5).floor().max(1.0);
            (raw.min(cap as f64)) as u64
        })
        .collect();
    if let Some(index) = (1..ks.len()).find(|&i| ks[i] < ks[i - 1]) {
        return Err(Error::NonMonotoneRings {
            index,
            prev_index: index - 1,
            previous: ks[index - 1],
            current: ks[index],
        });
    }
    Ok(ks)
}

/// `c_n = λ_1(n)·n / ln n`.
pub fn achieved_c(n: u64, theta: &SchemeParams) -> Result<f64> {
    if n < 2 {
        return Err(Error::invalid(format!("achieved c needs n >= 2, got {n}")));
    }
    let lambda1 = exactprob::mean_edge_prob(0, theta)?;
    Ok(c_from_lambda(n, lambda1))
}

fn c_from_lambda(n: u64, lambda1: f64) -> f64 {
    let nf = n as f64;
    lambda1 * nf / nf.ln()
}

/// Leading term `mu[1]·n^(1 - c_n)` of the expected isolated-node count.
pub fn isolation_leading_term(n: u64, theta: &SchemeParams) -> Result<f64> {
    let c = achieved_c(n, theta)?;
    Ok(theta.mix().prob(0) * (n as f64).powf(1.0 - c))
}

/// Result of [`dimension_min_ring`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Dimensioning {
    pub ring_sizes: Vec<u64>,
    pub lambda1: f64,
    pub achieved_c: f64,
}

fn lambda1_for(k1: u64, probs: &[f64], shape: &[f64], pool: u64) -> Result<(Vec<u64>, f64)> {
    let ks = ring_vector(k1, shape, pool)?;
    let theta = SchemeParams::new(ClassMix::new(probs.to_vec(), ks.clone())?, pool)?;
    let lambda1 = exactprob::mean_edge_prob(0, &theta)?;
    Ok((ks, lambda1))
}

/// Smallest `K₁` whose shaped ring vector reaches `λ_1(n) >= c·ln n / n`.
///
/// `λ_1` is nondecreasing in `K₁` for a fixed shape, so bisection over
/// `K₁ ∈ [1, P - 1]` finds the minimum.
pub fn dimension_min_ring(
    n: u64,
    pool: u64,
    probs: &[f64],
    shape: &[f64],
    target_c: f64,
) -> Result<Dimensioning> {
    if n < 2 || pool < 2 {
        return Err(Error::invalid(format!(
            "dimensioning needs n >= 2 and P >= 2, got n = {n}, P = {pool}"
        )));
    }
    validate_probs(probs)?;
    validate_shape(shape, probs.len())?;
    let nf = n as f64;
    let target = target_c * nf.ln() / nf;

    let mut hi = pool - 1;
    let (ks_hi, lambda_hi) = lambda1_for(hi, probs, shape, pool)?;
    if lambda_hi < target {
        return Err(Error::Infeasible {
            n,
            pool,
            target_c,
            best_c: c_from_lambda(n, lambda_hi),
        });
    }
    let mut best = (ks_hi, lambda_hi);
    let mut lo = 1;
    // invariant: K₁ = hi meets the target; every K₁ < lo misses it
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        let (ks, lambda) = lambda1_for(mid, probs, shape, pool)?;
        if lambda >= target {
            hi = mid;
            best = (ks, lambda);
        } else {
            lo = mid + 1;
        }
    }
    Ok(Dimensioning {
        achieved_c: c_from_lambda(n, best.1),
        ring_sizes: best.0,
        lambda1: best.1,
    })
}

/// Applies the preset's pool rule, then dimensions the rings for `target_c`.
pub fn instantiate(preset: &ScalingPreset, n: u64) -> Result<SchemeParams> {
    if n < 2 {
        return Err(Error::invalid(format!("instantiate needs n >= 2, got {n}")));
    }
    preset.validate()?;
    let pool = preset.pool_rule.pool_size(n);
    let dim = dimension_min_ring(n, pool, &preset.probs, &preset.ring_shape, preset.target_c)?;
    SchemeParams::new(ClassMix::new(preset.probs.clone(), dim.ring_sizes)?, pool)
}

/// `|λ_1·P / (K₁·E|Σ|) - 1|`: how far `λ_1` is from its small-probability
/// approximation `K₁·E|Σ| / P`.
pub fn scaling_equivalence_gap(theta: &SchemeParams) -> f64 {
    let lambda1 = exactprob::mean_edge_probs(theta)[0];
    let approx = theta.mix().smallest_ring() as f64 * theta.mix().ring_size_mean()
        / theta.pool_size() as f64;
    (lambda1 / approx - 1.0).abs()
}

/// Direction of a sequence across an `n` grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Trend {
    Increasing,
    Decreasing,
    Constant,
    Mixed,
}

impl Trend {
    pub fn of(values: &[f64]) -> Trend {
        let mut up = false;
        let mut down = false;
        for w in values.windows(2) {
            if w[1] > w[0] {
                up = true;
            } else if w[1] < w[0] {
                down = true;
            }
        }
        match (up, down) {
            (true, false) => Trend::Increasing,
            (false, true) => Trend::Decreasing,
            (false, false) => Trend::Constant,
            (true, true) => Trend::Mixed,
        }
    }
}

/// One `n` of a [`ConditionReport`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionRow {
    pub n: u64,
    pub pool: u64,
    pub ring_sizes: Vec<u64>,
    pub lambda1: f64,
    pub c_n: f64,
    pub pool_over_n: f64,
    pub n_k1sq_over_pool: f64,
    pub gap_a: f64,
    /// Some class pair shares a key with certainty.
    pub saturated: bool,
    /// `P_n >= σ·n` at this row.
    pub pool_condition: bool,
}

/// Side conditions of the connectivity result evaluated along an `n` grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionReport {
    pub sigma: f64,
    pub rows: Vec<ConditionRow>,
    /// Grid points where the preset could not be dimensioned.
    pub infeasible: Vec<u64>,
    pub pool_over_n_trend: Trend,
    pub n_k1sq_over_pool_trend: Trend,
}

impl ConditionRow {
    fn new(n: u64, theta: &SchemeParams, sigma: f64) -> Self {
        let nf = n as f64;
        let pool = theta.pool_size();
        let lambda1 = exactprob::mean_edge_probs(theta)[0];
        let k1 = theta.mix().smallest_ring() as f64;
        ConditionRow {
            n,
            pool,
            ring_sizes: theta.mix().ring_sizes().to_vec(),
            lambda1,
            c_n: c_from_lambda(n, lambda1),
            pool_over_n: pool as f64 / nf,
            n_k1sq_over_pool: nf * k1 * k1 / pool as f64,
            gap_a: scaling_equivalence_gap(theta),
            saturated: EdgeProbMatrix::new(theta).any_saturated(),
            pool_condition: pool as f64 >= sigma * nf,
        }
    }
}

impl ConditionReport {
    pub fn csv_header(classes: usize) -> String {
        let mut header = String::from("n,P");
        for j in 1..=classes {
            let _ = write!(header, ",K{j}");
        }
        header.push_str(",lambda1,c_n,P_over_n,nK1sq_over_P,gapA");
        header
    }

    /// CSV with the fixed header `n,P,K1,...,Kr,lambda1,c_n,P_over_n,nK1sq_over_P,gapA`.
    /// `fmt` renders floating-point cells.
    pub fn to_csv(&self, classes: usize, fmt: impl Fn(f64) -> String) -> String {
        let mut out = Self::csv_header(classes);
        out.push('\n');
        for row in &self.rows {
            let _ = write!(out, "{},{}", row.n, row.pool);
            for k in &row.ring_sizes {
                let _ = write!(out, ",{k}");
            }
            let _ = writeln!(
                out,
                ",{},{},{},{},{}",
                fmt(row.lambda1),
                fmt(row.c_n),
                fmt(row.pool_over_n),
                fmt(row.n_k1sq_over_pool),
                fmt(row.gap_a)
            );
        }
        out
    }
}

/// Evaluates `P_n/n` against `σ` and the growth of `n·K₁²/P_n` along the grid.
pub fn check_theorem2_conditions(
    preset: &ScalingPreset,
    n_grid: &[u64],
    sigma: f64,
) -> Result<ConditionReport> {
    if n_grid.is_empty() {
        return Err(Error::invalid("n grid must not be empty"));
    }
    preset.validate()?;
    let mut rows = Vec::with_capacity(n_grid.len());
    let mut infeasible = Vec::new();
    for &n in n_grid {
        match instantiate(preset, n) {
            Ok(theta) => rows.push(ConditionRow::new(n, &theta, sigma)),
            Err(_) => infeasible.push(n),
        }
    }
    Ok(report_from_rows(sigma, rows, infeasible))
}

/// Builds a report from explicit `(n, θ_n)` pairs.
pub fn condition_report(sigma: f64, grid: &[(u64, SchemeParams)]) -> ConditionReport {
    let rows = grid
        .iter()
        .map(|(n, theta)| ConditionRow::new(*n, theta, sigma))
        .collect();
    report_from_rows(sigma, rows, Vec::new())
}

fn report_from_rows(sigma: f64, rows: Vec<ConditionRow>, infeasible: Vec<u64>) -> ConditionReport {
    let pool_over_n: Vec<f64> = rows.iter().map(|r| r.pool_over_n).collect();
    let nk: Vec<f64> = rows.iter().map(|r| r.n_k1sq_over_pool).collect();
    ConditionReport {
        sigma,
        pool_over_n_trend: Trend::of(&pool_over_n),
        n_k1sq_over_pool_trend: Trend::of(&nk),
        rows,
        infeasible,
    }
}

/// Constants of the relaxed ring-size condition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RelaxedParams {
    pub beta: f64,
    pub nu: f64,
    pub epsilon: f64,
    pub m: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RelaxedRow {
    pub n: u64,
    pub k1: u64,
    pub k1sq_over_pool: f64,
    /// `((2 ln 2 + ln(1 - mu_r) + ε) / (βν)) / n`; `None` when `mu_r = 1`.
    pub first_branch_rhs: Option<f64>,
    pub first_branch_holds: Option<bool>,
    /// `n·(ln n)^M·K₁²/P`, bounded away from zero under the second branch.
    pub second_branch_scaled: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RelaxedReport {
    /// True when `mu_r <= 0.75` (first branch governs).
    pub first_branch_applies: bool,
    pub rows: Vec<RelaxedRow>,
    /// `K₁` strictly larger at the last grid point than at the first.
    pub k1_growing: bool,
    /// Trend indicator for the `Ω(1/(n (ln n)^M))` branch: the scaled
    /// sequence ends at least where it started.
    pub second_branch_trend_holds: bool,
    pub second_branch_trend: Trend,
}

/// Relaxed side condition evaluated along an explicit `(n, θ_n)` grid.
pub fn relaxed_conditions(
    grid: &[(u64, SchemeParams)],
    params: RelaxedParams,
) -> Result<RelaxedReport> {
    let RelaxedParams {
        beta,
        nu,
        epsilon,
        m,
    } = params;
    if !(beta > 0.0 && nu > 0.0 && epsilon > 0.0) || m < 1 {
        return Err(Error::invalid(format!(
            "relaxed conditions need beta, nu, epsilon > 0 and M >= 1, got {params:?}"
        )));
    }
    let Some((_, first)) = grid.first() else {
        return Err(Error::invalid("n grid must not be empty"));
    };
    let classes = first.num_classes();
    let mu_r = first.mix().prob(classes - 1);
    let log_term = (1.0 - mu_r).ln();
    let rows: Vec<RelaxedRow> = grid
        .iter()
        .map(|(n, theta)| {
            let nf = *n as f64;
            let k1 = theta.mix().smallest_ring();
            let ratio = (k1 * k1) as f64 / theta.pool_size() as f64;
            let rhs = if log_term.is_finite() {
                Some(((2.0 * 2f64.ln() + log_term + epsilon) / (beta * nu)) / nf)
            } else {
                None
            };
            RelaxedRow {
                n: *n,
                k1,
                k1sq_over_pool: ratio,
                first_branch_rhs: rhs,
                first_branch_holds: rhs.map(|rhs| ratio >= rhs),
                second_branch_scaled: nf * nf.ln().powi(m as i32) * ratio,
            }
        })
        .collect();
    let scaled: Vec<f64> = rows.iter().map(|r| r.second_branch_scaled).collect();
    let last = rows.len() - 1;
    Ok(RelaxedReport {
        first_branch_applies: mu_r <= 0.75,
        k1_growing: rows[last].k1 > rows[0].k1,
        second_branch_trend_holds: scaled[last] >= scaled[0],
        second_branch_trend: Trend::of(&scaled),
        rows,
    })
}

/// Relaxed side condition along the preset's instantiations.
pub fn check_relaxed_conditions(
    preset: &ScalingPreset,
    n_grid: &[u64],
    params: RelaxedParams,
) -> Result<RelaxedReport> {
    let grid = n_grid
        .iter()
        .map(|&n| instantiate(preset, n).map(|theta| (n, theta)))
        .collect::<Result<Vec<_>>>()?;
    relaxed_conditions(&grid, params)
}

/// Condition arithmetic of two earlier general random intersection graph
/// results, for comparison reports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RelatedConditions {
    /// `α_n = n·E[|Σ|]²/P - ln n - (k-1)·ln ln n`.
    pub alpha_n: f64,
    /// `var(|Σ|)·n·(ln n)² / E[|Σ|]²`; must vanish for that result to apply.
    pub variance_ratio: f64,
    /// `(n/P)·(E|Σ| - P[|Σ| = 1]) - ln P`; must diverge for that result.
    pub godehardt_lhs: f64,
}

pub fn related_conditions_for(n: u64, theta: &SchemeParams, k: u32) -> Result<RelatedConditions> {
    if n < 3 || k < 1 {
        return Err(Error::invalid(format!(
            "related conditions need n >= 3 and k >= 1, got n = {n}, k = {k}"
        )));
    }
    let nf = n as f64;
    let pool = theta.pool_size() as f64;
    let rv = theta.mix().ring_size_rv();
    let mean = rv.mean();
    let ln_n = nf.ln();
    Ok(RelatedConditions {
        alpha_n: nf * mean * mean / pool - ln_n - (k as f64 - 1.0) * ln_n.ln(),
        variance_ratio: rv.variance() * nf * ln_n * ln_n / (mean * mean),
        godehardt_lhs: (nf / pool) * (mean - rv.pmf(1)) - pool.ln(),
    })
}

pub fn related_conditions(preset: &ScalingPreset, n: u64, k: u32) -> Result<RelatedConditions> {
    if n < 3 {
        return Err(Error::invalid(format!(
            "related conditions need n >= 3, got {n}"
        )));
    }
    related_conditions_for(n, &instantiate(preset, n)?, k)
}
