//! Deterministic sampling of inhomogeneous random key graphs.
//!
//! Randomness comes from ChaCha8 streams. A trial is identified by a
//! [`SeedSpec`]; its 256-bit ChaCha key is a SplitMix64 expansion of
//! `(master_seed, trial_index)`. Within a trial, stream `0` draws the class
//! labels and stream `x + 1` draws the key ring of node `x`, so the output
//! does not depend on how work is split across threads.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::io::{self, BufRead};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ClassMix, SchemeParams};

/// Key identifier in `[0, P)`.
pub type KeyId = u32;

/// Stream ids at and above this value are reserved for per-trial draws that
/// are not tied to a node (capture selection and similar).
pub const AUX_STREAM_BASE: u64 = 1 << 62;

const CLASS_STREAM: u64 = 0;

/// Identifies one reproducible trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedSpec {
    pub master_seed: u64,
    pub trial_index: u64,
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl SeedSpec {
    pub fn new(master_seed: u64, trial_index: u64) -> Self {
        SeedSpec {
            master_seed,
            trial_index,
        }
    }

    /// 256-bit ChaCha key for this trial.
    pub fn key(&self) -> [u8; 32] {
        let mut state = self.master_seed;
        let mixed = splitmix64(&mut state) ^ self.trial_index.wrapping_mul(0xD1B5_4A32_D192_ED03);
        let mut state = mixed;
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        key
    }

    /// Independent substream `stream` of this trial.
    pub fn stream(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::from_seed(self.key());
        rng.set_stream(stream);
        rng
    }

    pub fn class_stream(&self) -> ChaCha8Rng {
        self.stream(CLASS_STREAM)
    }

    pub fn node_stream(&self, node: u64) -> ChaCha8Rng {
        self.stream(node + 1)
    }

    pub fn aux_stream(&self, id: u64) -> ChaCha8Rng {
        self.stream(AUX_STREAM_BASE + id)
    }
}

/// i.i.d. class labels (0-based) by inverse CDF over `mu`.
pub fn assign_classes<R: Rng + ?Sized>(n: usize, mix: &ClassMix, rng: &mut R) -> Vec<usize> {
    let last = mix.num_classes() - 1;
    if last == 0 {
        return vec![0; n];
    }
    let cdf: Vec<f64> = mix
        .probs()
        .iter()
        .scan(0.0, |acc, &mu| {
            *acc += mu;
            Some(*acc)
        })
        .collect();
    (0..n)
        .map(|_| {
            let u: f64 = rng.random();
            // the last class absorbs any rounding slack in the cdf
            cdf[..last].iter().position(|&c| u < c).unwrap_or(last)
        })
        .collect()
}

/// Uniform random `k`-subset of `[0, pool)`, sorted ascending.
///
/// Floyd's algorithm: exactly `k` draws and `O(k)` memory, independent of
/// `pool`.
pub fn sample_ring<R: Rng + ?Sized>(k: u64, pool: u64, rng: &mut R) -> Result<Vec<KeyId>> {
    if k == 0 || k >= pool {
        return Err(Error::invalid(format!(
            "ring size must lie in [1, P): K = {k}, P = {pool}"
        )));
    }
    if pool > KeyId::MAX as u64 + 1 {
        return Err(Error::invalid(format!(
            "pool size {pool} exceeds the sampler's key id range"
        )));
    }
    let mut ring = Vec::with_capacity(k as usize);
    if k <= 32 {
        for top in (pool - k)..pool {
            let pick = rng.random_range(0..=top) as KeyId;
            let key = if ring.contains(&pick) {
                top as KeyId
            } else {
                pick
            };
            ring.push(key);
        }
    } else {
        let mut seen = HashSet::with_capacity(k as usize);
        for top in (pool - k)..pool {
            let pick = rng.random_range(0..=top) as KeyId;
            let key = if seen.insert(pick) {
                pick
            } else {
                seen.insert(top as KeyId);
                top as KeyId
            };
            ring.push(key);
        }
    }
    ring.sort_unstable();
    Ok(ring)
}

/// True when two sorted rings share a key (linear merge).
pub fn intersects(a: &[KeyId], b: &[KeyId]) -> bool {
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => return true,
        }
    }
    false
}

/// One realized network.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampledGraph {
    pub pool_size: u64,
    pub num_classes: usize,
    /// 0-based class label per node.
    pub classes: Vec<usize>,
    /// Sorted key ring per node.
    pub rings: Vec<Vec<KeyId>>,
    /// Sorted unordered pairs `(x, y)` with `x < y`.
    pub edges: Vec<(u32, u32)>,
}

impl SampledGraph {
    pub fn n(&self) -> usize {
        self.rings.len()
    }

    pub fn degrees(&self) -> Vec<u32> {
        let mut deg = vec![0u32; self.n()];
        for &(x, y) in &self.edges {
            deg[x as usize] += 1;
            deg[y as usize] += 1;
        }
        deg
    }

    pub fn adjacency(&self) -> Vec<Vec<u32>> {
        let mut adj = vec![Vec::new(); self.n()];
        for &(x, y) in &self.edges {
            adj[x as usize].push(y);
            adj[y as usize].push(x);
        }
        adj
    }

    /// Line-oriented dump: `n P r`, one `class key...` line per node (class
    /// 1-based), the `edges` sentinel, then one `x y` line per edge.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{} {} {}", self.n(), self.pool_size, self.num_classes);
        for (class, ring) in self.classes.iter().zip(&self.rings) {
            let _ = write!(out, "{}", class + 1);
            for key in ring {
                let _ = write!(out, " {key}");
            }
            out.push('\n');
        }
        out.push_str("edges\n");
        for (x, y) in &self.edges {
            let _ = writeln!(out, "{x} {y}");
        }
        out
    }

    /// Parses the format written by [`SampledGraph::dump`]. Lines starting
    /// with `#` are skipped.
    pub fn parse_dump<R: BufRead>(reader: R) -> io::Result<Self> {
        let bad = |msg: &str| io::Error::new(io::ErrorKind::InvalidData, msg.to_string());
        let mut lines = reader
            .lines()
            .filter(|l| !matches!(l, Ok(s) if s.starts_with('#')));
        let header = lines.next().ok_or_else(|| bad("missing header"))??;
        let nums: Vec<u64> = header
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| bad("bad header")))
            .collect::<io::Result<_>>()?;
        let [n, pool_size, r] = nums[..] else {
            return Err(bad("header must be `n P r`"));
        };
        let mut classes = Vec::with_capacity(n as usize);
        let mut rings = Vec::with_capacity(n as usize);
        for _ in 0..n {
            let line = lines.next().ok_or_else(|| bad("missing node line"))??;
            let mut tokens = line.split_whitespace();
            let class: usize = tokens
                .next()
                .and_then(|t| t.parse().ok())
                .filter(|&c| c >= 1 && c as u64 <= r)
                .ok_or_else(|| bad("bad class label"))?;
            let ring = tokens
                .map(|t| t.parse().map_err(|_| bad("bad key id")))
                .collect::<io::Result<Vec<KeyId>>>()?;
            classes.push(class - 1);
            rings.push(ring);
        }
        if lines.next().transpose()?.as_deref() != Some("edges") {
            return Err(bad("missing `edges` sentinel"));
        }
        let mut edges = Vec::new();
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let mut tokens = line.split_whitespace().map(|t| t.parse::<u32>());
            match (tokens.next(), tokens.next(), tokens.next()) {
                (Some(Ok(x)), Some(Ok(y)), None) => edges.push((x, y)),
                _ => return Err(bad("bad edge line")),
            }
        }
        Ok(SampledGraph {
            pool_size,
            num_classes: r as usize,
            classes,
            rings,
            edges,
        })
    }
}

/// Edges by the `O(n²)` pairwise intersection test.
pub fn pairwise_edges(rings: &[Vec<KeyId>]) -> Vec<(u32, u32)> {
    let mut edges = Vec::new();
    for x in 0..rings.len() {
        for y in (x + 1)..rings.len() {
            if intersects(&rings[x], &rings[y]) {
                edges.push((x as u32, y as u32));
            }
        }
    }
    edges
}

/// Edges via a key -> holders inverted index: every pair of holders of a
/// common key, deduplicated.
pub fn inverted_index_edges(rings: &[Vec<KeyId>]) -> Vec<(u32, u32)> {
    let total: usize = rings.iter().map(Vec::len).sum();
    let mut postings: Vec<(KeyId, u32)> = Vec::with_capacity(total);
    for (x, ring) in rings.iter().enumerate() {
        postings.extend(ring.iter().map(|&key| (key, x as u32)));
    }
    postings.sort_unstable();
    let mut edges = Vec::new();
    for holders in postings.chunk_by(|a, b| a.0 == b.0) {
        for (a, &(_, x)) in holders.iter().enumerate() {
            for &(_, y) in &holders[a + 1..] {
                edges.push((x, y));
            }
        }
    }
    edges.sort_unstable();
    edges.dedup();
    edges
}

/// Samples class labels and key rings for `n` nodes.
pub fn sample_nodes(
    n: usize,
    theta: &SchemeParams,
    seed: SeedSpec,
) -> Result<(Vec<usize>, Vec<Vec<KeyId>>)> {
    let classes = assign_classes(n, theta.mix(), &mut seed.class_stream());
    let pool = theta.pool_size();
    let sample = |(x, &class): (usize, &usize)| {
        sample_ring(
            theta.ring_size(class),
            pool,
            &mut seed.node_stream(x as u64),
        )
    };
    let rings = if n >= 512 {
        classes
            .par_iter()
            .enumerate()
            .map(sample)
            .collect::<Result<Vec<_>>>()?
    } else {
        classes
            .iter()
            .enumerate()
            .map(sample)
            .collect::<Result<Vec<_>>>()?
    };
    Ok((classes, rings))
}

/// Samples one graph. Edges come from the inverted index in the sparse
/// regime and from pairwise scans when `P < n`.
pub fn build_graph(n: usize, theta: &SchemeParams, seed: SeedSpec) -> Result<SampledGraph> {
    let (classes, rings) = sample_nodes(n, theta, seed)?;
    let edges = if theta.pool_size() < n as u64 {
        pairwise_edges(&rings)
    } else {
        inverted_index_edges(&rings)
    };
    Ok(SampledGraph {
        pool_size: theta.pool_size(),
        num_classes: theta.num_classes(),
        classes,
        rings,
        edges,
    })
}
