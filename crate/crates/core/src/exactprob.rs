//! Exact closed-form probabilities, moments and bounds of the inhomogeneous
//! random key graph.
//!
//! Every ratio of binomial coefficients `C(P - m, k) / C(P, k)` goes through
//! its product form `∏_{l<m} (1 - k/(P - l))`, summed in log domain. No
//! factorials are formed, so pools of size 10^7 and more are fine and tiny
//! edge probabilities keep their full relative precision.

use crate::error::{Error, Result};
use crate::model::SchemeParams;

/// `ln( C(P - m, k) / C(P, k) )`, the log-probability that a fixed set of
/// `m` keys misses a uniformly random `k`-subset of a pool of `p` keys.
///
/// Returns `-inf` when `m + k > p` (the sets cannot be disjoint). The
/// smaller of `m` and `k` drives the product, which makes the result
/// exactly symmetric in `(m, k)`.
pub fn log_disjoint_ratio(m: u64, k: u64, p: u64) -> f64 {
    if m + k > p {
        return f64::NEG_INFINITY;
    }
    let (short, long) = if m <= k { (m, k) } else { (k, m) };
    let long = long as f64;
    let pool = p as f64;
    (0..short)
        .map(|l| (-long / (pool - l as f64)).ln_1p())
        .sum()
}

/// `log( C(P - Ki, Kj) / C(P, Kj) )` for ring sizes in `[1, P)`.
pub fn log_ratio_no_overlap(ki: u64, kj: u64, p: u64) -> Result<f64> {
    if ki == 0 || kj == 0 || ki >= p || kj >= p {
        return Err(Error::invalid(format!(
            "ring sizes must lie in [1, P): Ki = {ki}, Kj = {kj}, P = {p}"
        )));
    }
    Ok(log_disjoint_ratio(ki, kj, p))
}

/// Probability that two rings of sizes `ki` and `kj` intersect.
fn intersect_prob(ki: u64, kj: u64, p: u64) -> f64 {
    let lr = log_disjoint_ratio(ki, kj, p);
    if lr == f64::NEG_INFINITY {
        1.0
    } else {
        -lr.exp_m1()
    }
}

/// `p_ij`: probability that a class-`i` and a class-`j` node share a key.
pub fn edge_prob(i: usize, j: usize, theta: &SchemeParams) -> Result<f64> {
    theta.mix().check_class(i)?;
    theta.mix().check_class(j)?;
    Ok(intersect_prob(
        theta.ring_size(i),
        theta.ring_size(j),
        theta.pool_size(),
    ))
}

/// True when `K[i] + K[j] > P`, so the edge is present with certainty.
pub fn is_saturated(i: usize, j: usize, theta: &SchemeParams) -> bool {
    theta.ring_size(i) + theta.ring_size(j) > theta.pool_size()
}

/// `λ_i = Σ_j mu[j]·p_ij`.
pub fn mean_edge_prob(i: usize, theta: &SchemeParams) -> Result<f64> {
    theta.mix().check_class(i)?;
    let mix = theta.mix();
    Ok((0..mix.num_classes())
        .map(|j| {
            mix.prob(j) * intersect_prob(mix.ring_size(i), mix.ring_size(j), theta.pool_size())
        })
        .sum())
}

/// `K_i·K_j / P`, the small-probability approximant of `p_ij`.
pub fn edge_prob_small_limit(i: usize, j: usize, theta: &SchemeParams) -> Result<f64> {
    theta.mix().check_class(i)?;
    theta.mix().check_class(j)?;
    Ok(theta.ring_size(i) as f64 * theta.ring_size(j) as f64 / theta.pool_size() as f64)
}

/// `1 - exp(-K_i·K_j/P)`, a lower bound on `p_ij`.
pub fn edge_prob_lower_bound(i: usize, j: usize, theta: &SchemeParams) -> Result<f64> {
    Ok(-(-edge_prob_small_limit(i, j, theta)?).exp_m1())
}

/// `C(P - ⌈a·Ki⌉, Kj) / C(P, Kj)` for `a >= 1`.
///
/// Never exceeds `(C(P - Ki, Kj) / C(P, Kj))^a`.
pub fn ratio_power_lhs(a: f64, ki: u64, kj: u64, p: u64) -> Result<f64> {
    if !(a >= 1.0) {
        return Err(Error::invalid(format!(
            "exponent a = {a} must be at least 1"
        )));
    }
    log_ratio_no_overlap(ki, kj, p)?;
    let scaled = (a * ki as f64).ceil();
    if scaled > p as f64 {
        return Ok(0.0);
    }
    Ok(log_disjoint_ratio(scaled as u64, kj, p).exp())
}

/// `Ψ(x) = -x - ln(1 - x)`, so that `ln(1 - x) = -x - Ψ(x)`.
pub fn psi(x: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&x) {
        return Err(Error::invalid(format!("psi needs x in [0, 1), got {x}")));
    }
    Ok(-x - (-x).ln_1p())
}

/// `(1 - x)^e` evaluated as `exp(e·ln(1 - x))`; `e = 0` gives exactly 1.
fn pow_one_minus(x: f64, e: u64) -> f64 {
    if e == 0 {
        return 1.0;
    }
    (e as f64 * (-x).ln_1p()).exp()
}

fn check_nodes(n: u64, min: u64) -> Result<()> {
    if n < min {
        return Err(Error::invalid(format!(
            "node count n = {n} must be at least {min}"
        )));
    }
    Ok(())
}

/// Expected number of isolated nodes, `n·Σ_i mu[i]·(1 - λ_i)^(n-1)`.
pub fn expected_isolated(n: u64, theta: &SchemeParams) -> Result<f64> {
    check_nodes(n, 1)?;
    let lambdas = mean_edge_probs(theta);
    let mix = theta.mix();
    let per_node: f64 = lambdas
        .iter()
        .enumerate()
        .map(|(i, &lambda)| mix.prob(i) * pow_one_minus(lambda, n - 1))
        .sum();
    Ok(n as f64 * per_node)
}

/// Expected number of isolated class-1 (smallest ring) nodes,
/// `n·mu[1]·(1 - λ_1)^(n-1)`.
pub fn expected_class1_isolated(n: u64, theta: &SchemeParams) -> Result<f64> {
    check_nodes(n, 1)?;
    let lambda1 = mean_edge_prob(0, theta)?;
    Ok(n as f64 * theta.mix().prob(0) * pow_one_minus(lambda1, n - 1))
}

/// `ln` of [`pair_class1_isolated_prob`], `-inf` when the event is impossible.
fn log_pair_class1_isolated(n: u64, theta: &SchemeParams) -> f64 {
    let mix = theta.mix();
    let pool = theta.pool_size();
    let k1 = mix.smallest_ring();
    let third_party: f64 = (0..mix.num_classes())
        .map(|j| mix.prob(j) * log_disjoint_ratio(2 * k1, mix.ring_size(j), pool).exp())
        .sum();
    let tail = if n == 2 {
        0.0
    } else {
        (n - 2) as f64 * third_party.ln()
    };
    2.0 * mix.prob(0).ln() + log_disjoint_ratio(k1, k1, pool) + tail
}

/// Probability that nodes 1 and 2 are both class-1 and both isolated:
/// `mu1²·(C(P-K1,K1)/C(P,K1))·(Σ_j mu[j]·C(P-2K1,Kj)/C(P,Kj))^(n-2)`.
pub fn pair_class1_isolated_prob(n: u64, theta: &SchemeParams) -> Result<f64> {
    check_nodes(n, 2)?;
    Ok(log_pair_class1_isolated(n, theta).exp())
}

/// `E[χ1·χ2] / E[χ1]²` where `χx` flags node `x` as isolated and class-1.
/// Evaluated as a difference of logs so that tiny moments do not underflow.
pub fn second_moment_ratio(n: u64, theta: &SchemeParams) -> Result<f64> {
    check_nodes(n, 2)?;
    let lambda1 = mean_edge_prob(0, theta)?;
    if lambda1 == 1.0 {
        return Err(Error::invalid(
            "second moment ratio undefined: class-1 nodes are never isolated (λ_1 = 1)",
        ));
    }
    let log_per_node = theta.mix().prob(0).ln() + (n - 1) as f64 * (-lambda1).ln_1p();
    Ok((log_pair_class1_isolated(n, theta) - 2.0 * log_per_node).exp())
}

/// Distribution of `Z = C(P-K1,Kj)/C(P,Kj)` with probability `mu[j]`, as
/// `(value, probability)` pairs in class order. `E[Z] = 1 - λ_1`.
pub fn no_overlap_distribution(theta: &SchemeParams) -> Vec<(f64, f64)> {
    let mix = theta.mix();
    let k1 = mix.smallest_ring();
    (0..mix.num_classes())
        .map(|j| {
            let value = log_disjoint_ratio(k1, mix.ring_size(j), theta.pool_size()).exp();
            (value, mix.prob(j))
        })
        .collect()
}

/// Variance of the `Z` variable of [`no_overlap_distribution`].
pub fn no_overlap_variance(theta: &SchemeParams) -> f64 {
    let dist = no_overlap_distribution(theta);
    let mean: f64 = dist.iter().map(|(z, mu)| mu * z).sum();
    dist.iter()
        .map(|(z, mu)| mu * (z - mean) * (z - mean))
        .sum()
}

/// Popoviciu bound `p_1r² / 4` on the variance of `Z`.
pub fn popoviciu_bound(theta: &SchemeParams) -> f64 {
    let r = theta.num_classes() - 1;
    let p1r = intersect_prob(theta.ring_size(0), theta.ring_size(r), theta.pool_size());
    0.25 * p1r * p1r
}

/// Expected fraction of the pool held by at least one of `s` independently
/// drawn nodes: `1 - (Σ_j mu[j]·(1 - K[j]/P))^s`.
pub fn expected_pool_coverage(s: u64, theta: &SchemeParams) -> f64 {
    if s == 0 {
        return 0.0;
    }
    let pool = theta.pool_size() as f64;
    let miss: f64 = theta
        .mix()
        .ring_size_rv()
        .support()
        .map(|(k, mu)| mu * (1.0 - k as f64 / pool))
        .sum();
    -(s as f64 * miss.ln()).exp_m1()
}

/// `min(1, ℓ^(ℓ-2)·p_rr^(ℓ-1))`: union bound over the spanning trees of an
/// `ℓ`-node set, each edge bounded by the largest edge probability.
pub fn cayley_tree_bound(ell: u32, theta: &SchemeParams) -> f64 {
    if ell <= 1 {
        return 1.0;
    }
    let r = theta.num_classes() - 1;
    let prr = intersect_prob(theta.ring_size(r), theta.ring_size(r), theta.pool_size());
    let ell_f = ell as f64;
    let log_bound = (ell_f - 2.0) * ell_f.ln() + (ell_f - 1.0) * prr.ln();
    log_bound.exp().min(1.0)
}

/// Full `r × r` matrix of edge probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeProbMatrix {
    classes: usize,
    values: Vec<f64>,
    saturated: Vec<bool>,
}

impl EdgeProbMatrix {
    pub fn new(theta: &SchemeParams) -> Self {
        let r = theta.num_classes();
        let mut values = Vec::with_capacity(r * r);
        let mut saturated = Vec::with_capacity(r * r);
        for i in 0..r {
            for j in 0..r {
                values.push(intersect_prob(
                    theta.ring_size(i),
                    theta.ring_size(j),
                    theta.pool_size(),
                ));
                saturated.push(is_saturated(i, j, theta));
            }
        }
        EdgeProbMatrix {
            classes: r,
            values,
            saturated,
        }
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.classes + j]
    }

    pub fn is_saturated(&self, i: usize, j: usize) -> bool {
        self.saturated[i * self.classes + j]
    }

    pub fn any_saturated(&self) -> bool {
        self.saturated.iter().any(|&s| s)
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.classes..(i + 1) * self.classes]
    }
}

/// Vector `λ` of mean edge probabilities, nondecreasing in the class index.
pub fn mean_edge_probs(theta: &SchemeParams) -> Vec<f64> {
    let matrix = EdgeProbMatrix::new(theta);
    let mix = theta.mix();
    (0..matrix.classes())
        .map(|i| {
            matrix
                .row(i)
                .iter()
                .zip(mix.probs())
                .map(|(p, mu)| p * mu)
                .sum()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate_scheme;

    fn scheme(probs: &[f64], ks: &[u64], pool: u64) -> SchemeParams {
        validate_scheme(probs.len(), probs, ks, pool).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn log_ratio_examples() {
        assert_eq!(log_ratio_no_overlap(3, 2, 4).unwrap(), f64::NEG_INFINITY);
        assert!(close(
            log_ratio_no_overlap(2, 2, 5).unwrap(),
            0.3f64.ln(),
            1e-12
        ));
        assert!(close(
            log_ratio_no_overlap(1, 1, 2).unwrap(),
            0.5f64.ln(),
            1e-12
        ));
        assert!(log_ratio_no_overlap(0, 1, 4).is_err());
        assert!(log_ratio_no_overlap(4, 1, 4).is_err());
    }

    #[test]
    fn edge_prob_examples() {
        let theta = scheme(&[0.5, 0.5], &[2, 3], 4);
        assert_eq!(edge_prob(1, 0, &theta).unwrap(), 1.0);
        assert!(is_saturated(1, 0, &theta));
        let theta = scheme(&[1.0], &[2], 5);
        assert!(close(edge_prob(0, 0, &theta).unwrap(), 0.7, 1e-12));
        let theta = scheme(&[1.0], &[1], 4);
        assert!(close(edge_prob(0, 0, &theta).unwrap(), 0.25, 1e-12));
        assert!(matches!(
            edge_prob(0, 1, &theta),
            Err(Error::ClassOutOfRange {
                index: 1,
                classes: 1
            })
        ));
    }

    #[test]
    fn tiny_edge_probability_keeps_relative_precision() {
        // p = 1 - (1 - 1/P) = 1/P exactly for singleton rings.
        let theta = scheme(&[1.0], &[1], 10_000_000);
        let p = edge_prob(0, 0, &theta).unwrap();
        assert!(((p - 1e-7) / 1e-7).abs() < 1e-12);
    }

    #[test]
    fn mean_edge_prob_examples() {
        let theta = scheme(&[0.5, 0.5], &[1, 2], 4);
        assert!(close(mean_edge_prob(0, &theta).unwrap(), 0.375, 1e-12));
        assert!(close(
            mean_edge_prob(1, &theta).unwrap(),
            0.25 + 0.5 * 5.0 / 6.0,
            1e-12
        ));
        let single = scheme(&[1.0], &[2], 5);
        assert_eq!(
            mean_edge_prob(0, &single).unwrap(),
            edge_prob(0, 0, &single).unwrap()
        );
        assert_eq!(mean_edge_probs(&theta).len(), 2);
        assert!(mean_edge_prob(2, &theta).is_err());
    }

    #[test]
    fn small_limit_and_lower_bound() {
        let theta = scheme(&[0.5, 0.5], &[10, 20], 1_000_000);
        assert!(close(
            edge_prob_small_limit(0, 1, &theta).unwrap(),
            2e-4,
            1e-18
        ));
        let theta = scheme(&[1.0], &[2], 5);
        assert!(close(
            edge_prob_small_limit(0, 0, &theta).unwrap(),
            0.8,
            1e-15
        ));
        let lb = edge_prob_lower_bound(0, 0, &theta).unwrap();
        assert!(close(lb, 0.550671035882778, 1e-12));
        assert!(lb <= 0.7);
        let theta = scheme(&[1.0], &[1], 4);
        let lb = edge_prob_lower_bound(0, 0, &theta).unwrap();
        assert!(close(lb, 0.221199216928595, 1e-12));
        assert!(lb <= 0.25);
    }

    #[test]
    fn ratio_power_examples() {
        assert!(close(
            ratio_power_lhs(1.0, 2, 2, 5).unwrap(),
            log_ratio_no_overlap(2, 2, 5).unwrap().exp(),
            1e-15
        ));
        assert!(close(ratio_power_lhs(2.0, 1, 1, 4).unwrap(), 0.5, 1e-12));
        assert_eq!(ratio_power_lhs(2.0, 2, 2, 5).unwrap(), 0.0);
        assert!(ratio_power_lhs(0.5, 2, 2, 5).is_err());
        assert!(ratio_power_lhs(f64::NAN, 2, 2, 5).is_err());
    }

    #[test]
    fn psi_examples() {
        assert_eq!(psi(0.0).unwrap(), 0.0);
        assert!(close(psi(0.5).unwrap(), 0.193147180559945, 1e-12));
        let x = 0.01;
        assert!(close(psi(x).unwrap() / (x * x), 0.5034, 1e-4));
        assert!(psi(1.0).is_err());
        assert!(psi(-0.1).is_err());
    }

    #[test]
    fn expected_isolated_examples() {
        let theta = scheme(&[0.5, 0.5], &[1, 2], 4);
        assert_eq!(expected_isolated(1, &theta).unwrap(), 1.0);
        let expected = 3.0 * (0.5 * 0.625f64.powi(2) + 0.5 * (1.0f64 / 3.0).powi(2));
        assert!(close(
            expected_isolated(3, &theta).unwrap(),
            expected,
            1e-12
        ));
        assert!(close(expected, 0.752604, 1e-6));
        let complete = scheme(&[1.0], &[3], 4);
        assert_eq!(expected_isolated(5, &complete).unwrap(), 0.0);
        assert!(expected_isolated(0, &theta).is_err());
    }

    #[test]
    fn expected_class1_isolated_examples() {
        let theta = scheme(&[0.5, 0.5], &[1, 2], 4);
        assert!(close(
            expected_class1_isolated(3, &theta).unwrap(),
            0.5859375,
            1e-12
        ));
        assert_eq!(expected_class1_isolated(1, &theta).unwrap(), 0.5);
        let single = scheme(&[1.0], &[2], 9);
        assert_eq!(
            expected_class1_isolated(7, &single).unwrap(),
            expected_isolated(7, &single).unwrap()
        );
    }

    #[test]
    fn pair_isolation_examples() {
        let theta = scheme(&[1.0], &[1], 4);
        assert!(close(
            pair_class1_isolated_prob(3, &theta).unwrap(),
            0.375,
            1e-12
        ));
        assert!(close(
            pair_class1_isolated_prob(2, &theta).unwrap(),
            0.75,
            1e-12
        ));
        let crowded = scheme(&[1.0], &[3], 5);
        assert_eq!(pair_class1_isolated_prob(4, &crowded).unwrap(), 0.0);
        assert!(pair_class1_isolated_prob(1, &theta).is_err());
    }

    #[test]
    fn second_moment_ratio_examples() {
        let theta = scheme(&[1.0], &[1], 4);
        assert!(close(
            second_moment_ratio(3, &theta).unwrap(),
            0.375 / 0.5625f64.powi(2),
            1e-12
        ));
        assert!(close(
            second_moment_ratio(3, &theta).unwrap(),
            1.185185185,
            1e-9
        ));
        assert!(close(
            second_moment_ratio(2, &theta).unwrap(),
            4.0 / 3.0,
            1e-12
        ));
        let complete = scheme(&[1.0], &[3], 4);
        assert!(second_moment_ratio(3, &complete).is_err());
    }

    #[test]
    fn popoviciu_examples() {
        let theta = scheme(&[0.5, 0.5], &[1, 2], 4);
        assert!(close(popoviciu_bound(&theta), 0.0625, 1e-15));
        assert!(close(no_overlap_variance(&theta), 0.015625, 1e-15));
        let single = scheme(&[1.0], &[2], 7);
        let p = edge_prob(0, 0, &single).unwrap();
        assert!(close(popoviciu_bound(&single), p * p / 4.0, 1e-15));
        assert_eq!(no_overlap_variance(&single), 0.0);
        let saturated = scheme(&[0.5, 0.5], &[2, 3], 4);
        assert!(popoviciu_bound(&saturated) <= 0.25);
    }

    #[test]
    fn z_mean_is_one_minus_lambda1() {
        let theta = scheme(&[0.2, 0.3, 0.5], &[3, 5, 9], 40);
        let mean: f64 = no_overlap_distribution(&theta)
            .iter()
            .map(|(z, mu)| z * mu)
            .sum();
        assert!(close(mean, 1.0 - mean_edge_prob(0, &theta).unwrap(), 1e-15));
    }

    #[test]
    fn pool_coverage_examples() {
        let theta = scheme(&[1.0], &[2], 10);
        assert_eq!(expected_pool_coverage(0, &theta), 0.0);
        assert!(close(expected_pool_coverage(1, &theta), 0.2, 1e-15));
        let theta = scheme(&[0.5, 0.5], &[1, 2], 4);
        assert!(close(
            expected_pool_coverage(3, &theta),
            1.0 - 0.625f64.powi(3),
            1e-15
        ));
    }

    #[test]
    fn cayley_bound_examples() {
        let theta = scheme(&[0.5, 0.5], &[1, 2], 4);
        let prr = 5.0 / 6.0;
        assert!(close(cayley_tree_bound(2, &theta), prr, 1e-12));
        assert_eq!(cayley_tree_bound(3, &theta), 1.0);
        let sparse = scheme(&[1.0], &[2], 1000);
        let prr = edge_prob(0, 0, &sparse).unwrap();
        assert!(close(cayley_tree_bound(3, &sparse), 3.0 * prr * prr, 1e-15));
        assert!(close(
            cayley_tree_bound(4, &sparse),
            16.0 * prr.powi(3),
            1e-15
        ));
    }

    #[test]
    fn matrix_flags_saturation() {
        let theta = scheme(&[0.5, 0.5], &[1, 3], 4);
        let m = EdgeProbMatrix::new(&theta);
        assert!(!m.is_saturated(0, 0));
        assert!(m.is_saturated(1, 1));
        assert_eq!(m.get(1, 1), 1.0);
        assert!(m.any_saturated());
        assert_eq!(m.get(0, 1), m.get(1, 0));
    }
}
