//! Structural observables of a sampled graph.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::sampler::SampledGraph;

/// Default cap on prefix sizes probed by [`prefix_union_profile`].
pub const DEFAULT_PREFIX_CAP: usize = 32;

/// Disjoint sets with path compression and union by size.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<u32>,
    size: Vec<u32>,
    sets: usize,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n as u32).collect(),
            size: vec![1; n],
            sets: n,
        }
    }

    pub fn find(&mut self, x: u32) -> u32 {
        let mut root = x;
        while self.parent[root as usize] != root {
            root = self.parent[root as usize];
        }
        let mut cur = x;
        while self.parent[cur as usize] != root {
            let next = self.parent[cur as usize];
            self.parent[cur as usize] = root;
            cur = next;
        }
        root
    }

    /// Returns false when `x` and `y` were already joined.
    pub fn union(&mut self, x: u32, y: u32) -> bool {
        let (mut a, mut b) = (self.find(x), self.find(y));
        if a == b {
            return false;
        }
        if self.size[a as usize] < self.size[b as usize] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b as usize] = a;
        self.size[a as usize] += self.size[b as usize];
        self.sets -= 1;
        true
    }

    pub fn set_count(&self) -> usize {
        self.sets
    }

    pub fn set_size(&mut self, x: u32) -> u32 {
        let root = self.find(x);
        self.size[root as usize]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GraphStats {
    /// Total isolated nodes `I_n`.
    pub isolated_total: usize,
    /// Isolated nodes per class; entry 0 is `Y_n`.
    pub isolated_by_class: Vec<usize>,
    pub connected: bool,
    pub component_count: usize,
    pub largest_component: usize,
}

/// Isolation counts and component census. A single node counts as connected.
pub fn graph_stats(g: &SampledGraph) -> GraphStats {
    let n = g.n();
    let mut isolated_by_class = vec![0; g.num_classes];
    for (deg, &class) in g.degrees().iter().zip(&g.classes) {
        if *deg == 0 {
            isolated_by_class[class] += 1;
        }
    }
    let mut uf = UnionFind::new(n);
    for &(x, y) in &g.edges {
        uf.union(x, y);
    }
    let largest_component = (0..n as u32).map(|x| uf.set_size(x)).max().unwrap_or(0) as usize;
    let component_count = uf.set_count();
    GraphStats {
        isolated_total: isolated_by_class.iter().sum(),
        isolated_by_class,
        connected: component_count == 1,
        component_count,
        largest_component,
    }
}

/// True when the nodes `0..ell` induce a connected subgraph.
pub fn prefix_connected(g: &SampledGraph, ell: usize) -> bool {
    let mut uf = UnionFind::new(ell);
    for &(x, y) in &g.edges {
        if (y as usize) < ell {
            uf.union(x, y);
        }
    }
    uf.set_count() == 1
}

/// `|∪_{x ∈ subset} Σ_x|`.
pub fn union_key_count(g: &SampledGraph, subset: &[usize]) -> Result<usize> {
    if subset.is_empty() {
        return Err(Error::invalid("node subset must not be empty"));
    }
    if let Some(&bad) = subset.iter().find(|&&x| x >= g.n()) {
        return Err(Error::invalid(format!(
            "node id {bad} out of range for {} nodes",
            g.n()
        )));
    }
    let mut keys: Vec<u32> = subset
        .iter()
        .flat_map(|&x| g.rings[x].iter().copied())
        .collect();
    keys.sort_unstable();
    keys.dedup();
    Ok(keys.len())
}

/// Key-coverage thresholds `X_ℓ` of the event that some `ℓ` nodes jointly
/// hold at most `X_ℓ` distinct keys.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EventThresholds {
    pub beta: f64,
    pub gamma: f64,
    /// Breakpoint `L_n = min(⌊P/K₁⌋, ⌊n/2⌋)`.
    pub l_n: u64,
    /// `x[ℓ - 1] = X_ℓ` for `ℓ = 1..=n`.
    pub x: Vec<u64>,
}

impl EventThresholds {
    /// `X_ℓ` for 1-based `ell`.
    pub fn threshold(&self, ell: usize) -> u64 {
        self.x[ell - 1]
    }
}

/// `X_ℓ = ⌊β·ℓ·K₁⌋` for `ℓ <= L_n` and `⌊γ·P⌋` beyond.
pub fn event_thresholds(
    n: u64,
    k1: u64,
    pool: u64,
    beta: f64,
    gamma: f64,
) -> Result<EventThresholds> {
    let open_half = |v: f64| v > 0.0 && v < 0.5;
    if !open_half(beta) || !open_half(gamma) {
        return Err(Error::invalid(format!(
            "beta and gamma must lie in (0, 1/2), got beta = {beta}, gamma = {gamma}"
        )));
    }
    if k1 == 0 {
        return Err(Error::invalid("smallest ring size must be positive"));
    }
    let l_n = (pool / k1).min(n / 2);
    let tail = (gamma * pool as f64).floor() as u64;
    let x = (1..=n)
        .map(|ell| {
            if ell <= l_n {
                (beta * ell as f64 * k1 as f64).floor() as u64
            } else {
                tail
            }
        })
        .collect();
    Ok(EventThresholds {
        beta,
        gamma,
        l_n,
        x,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PrefixUnion {
    pub ell: usize,
    pub union: u64,
    pub threshold: u64,
    /// `U_ℓ <= X_ℓ`.
    pub violated: bool,
}

/// `U_ℓ` on the prefixes `{1..ℓ}` for `ℓ = 1..=max_ell`, against `X_ℓ`.
pub fn prefix_union_profile(
    g: &SampledGraph,
    max_ell: usize,
    thresholds: &EventThresholds,
) -> Result<Vec<PrefixUnion>> {
    if max_ell == 0 || max_ell > g.n() || max_ell > thresholds.x.len() {
        return Err(Error::invalid(format!(
            "max_ell = {max_ell} must lie in [1, {}]",
            g.n().min(thresholds.x.len())
        )));
    }
    let mut held = std::collections::HashSet::new();
    Ok((1..=max_ell)
        .map(|ell| {
            held.extend(g.rings[ell - 1].iter().copied());
            let union = held.len() as u64;
            let threshold = thresholds.threshold(ell);
            PrefixUnion {
                ell,
                union,
                threshold,
                violated: union <= threshold,
            }
        })
        .collect())
}
