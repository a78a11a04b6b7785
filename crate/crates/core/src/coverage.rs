//! Edge-coverage accounting: per-execution traces, the bucketed global map,
//! new-coverage detection and corpus minimization.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::harness::{HarnessError, TargetHarness, Verdict};

/// Number of addressable edge ids.
pub const MAP_SIZE: usize = 65536;

/// Hit-count bucket labels, lowest first.
pub const BUCKETS: [u8; 8] = [1, 2, 3, 4, 8, 16, 32, 128];

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CoverageError {
    #[error("coverage improvement is undefined for an empty baseline")]
    UndefinedBaseline,
}

/// Identifier of a control-flow edge. Always `< MAP_SIZE` by construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EdgeId(pub u16);

impl fmt::Display for EdgeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:06}", self.0)
    }
}

/// Quantizes a raw hit count into its bucket label.
///
/// Ranges: `[1]`, `[2]`, `[3]`, `[4-7]`, `[8-15]`, `[16-31]`, `[32-127]`, `[128+]`.
/// A count of zero is a caller bug.
pub fn bucketize(count: u32) -> u8 {
    debug_assert!(count >= 1, "bucketize called with zero hits");
    match count {
        0 | 1 => 1,
        2 => 2,
        3 => 3,
        4..=7 => 4,
        8..=15 => 8,
        16..=31 => 16,
        32..=127 => 32,
        _ => 128,
    }
}

fn bucket_bit(label: u8) -> u8 {
    let idx = BUCKETS.iter().position(|&b| b == label).expect("bucket label");
    1 << idx
}

/// Edge hits of a single execution.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EdgeTrace {
    hits: BTreeMap<EdgeId, u32>,
}

impl EdgeTrace {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records `count` additional hits on `edge`. Zero counts are ignored.
    pub fn hit_n(&mut self, edge: EdgeId, count: u32) {
        if count == 0 {
            return;
        }
        let slot = self.hits.entry(edge).or_insert(0);
        *slot = slot.saturating_add(count);
    }

    pub fn hit(&mut self, edge: EdgeId) {
        self.hit_n(edge, 1);
    }

    pub fn is_empty(&self) -> bool {
        self.hits.is_empty()
    }

    pub fn len(&self) -> usize {
        self.hits.len()
    }

    pub fn count(&self, edge: EdgeId) -> u32 {
        self.hits.get(&edge).copied().unwrap_or(0)
    }

    /// Iterates `(edge, hit_count)` in ascending edge order.
    pub fn iter(&self) -> impl Iterator<Item = (EdgeId, u32)> + '_ {
        self.hits.iter().map(|(&e, &c)| (e, c))
    }

    pub fn edges(&self) -> impl Iterator<Item = EdgeId> + '_ {
        self.hits.keys().copied()
    }

    pub fn edge_set(&self) -> BTreeSet<EdgeId> {
        self.hits.keys().copied().collect()
    }
}

impl FromIterator<(EdgeId, u32)> for EdgeTrace {
    fn from_iter<I: IntoIterator<Item = (EdgeId, u32)>>(iter: I) -> Self {
        let mut t = EdgeTrace::new();
        for (e, c) in iter {
            t.hit_n(e, c);
        }
        t
    }
}

/// Outcome of folding one trace into the global map.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverageDelta {
    pub new_edges: usize,
    pub new_buckets: usize,
    pub is_interesting: bool,
}

impl CoverageDelta {
    pub fn new(new_edges: usize, new_buckets: usize) -> Self {
        Self {
            new_edges,
            new_buckets,
            is_interesting: new_edges + new_buckets > 0,
        }
    }
}

/// Global `(edge, bucket)` state. Each edge slot holds one bit per bucket label.
#[derive(Clone)]
pub struct CoverageMap {
    seen: Box<[u8]>,
    edge_count: usize,
}

impl Default for CoverageMap {
    fn default() -> Self {
        Self::new()
    }
}

impl fmt::Debug for CoverageMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CoverageMap")
            .field("edge_count", &self.edge_count)
            .field("pair_count", &self.pair_count())
            .finish()
    }
}

impl PartialEq for CoverageMap {
    fn eq(&self, other: &Self) -> bool {
        self.seen == other.seen
    }
}

impl CoverageMap {
    pub fn new() -> Self {
        Self {
            seen: vec![0u8; MAP_SIZE].into_boxed_slice(),
            edge_count: 0,
        }
    }

    /// Number of distinct edge ids present.
    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    /// Number of distinct `(edge, bucket)` pairs present.
    pub fn pair_count(&self) -> usize {
        self.seen.iter().map(|b| b.count_ones() as usize).sum()
    }

    pub fn contains(&self, edge: EdgeId, bucket: u8) -> bool {
        self.seen[edge.0 as usize] & bucket_bit(bucket) != 0
    }

    pub fn has_edge(&self, edge: EdgeId) -> bool {
        self.seen[edge.0 as usize] != 0
    }

    /// All `(edge, bucket)` pairs, ascending.
    pub fn pairs(&self) -> Vec<(EdgeId, u8)> {
        let mut out = Vec::new();
        for (edge, &bits) in self.seen.iter().enumerate() {
            for (i, &label) in BUCKETS.iter().enumerate() {
                if bits & (1 << i) != 0 {
                    out.push((EdgeId(edge as u16), label));
                }
            }
        }
        out
    }

    pub fn edges(&self) -> impl Iterator<Item = EdgeId> + '_ {
        self.seen
            .iter()
            .enumerate()
            .filter(|(_, &b)| b != 0)
            .map(|(e, _)| EdgeId(e as u16))
    }

    /// Reports what `trace` would add without mutating the map.
    pub fn peek(&self, trace: &EdgeTrace) -> CoverageDelta {
        let mut new_edges = 0;
        let mut new_buckets = 0;
        for (edge, count) in trace.iter() {
            let slot = self.seen[edge.0 as usize];
            if slot == 0 {
                new_edges += 1;
            }
            if slot & bucket_bit(bucketize(count)) == 0 {
                new_buckets += 1;
            }
        }
        CoverageDelta::new(new_edges, new_buckets)
    }
}

/// Folds `trace` into `map`, returning what was new.
pub fn accumulate(map: &mut CoverageMap, trace: &EdgeTrace) -> CoverageDelta {
    let mut new_edges = 0;
    let mut new_buckets = 0;
    for (edge, count) in trace.iter() {
        let slot = &mut map.seen[edge.0 as usize];
        if *slot == 0 {
            new_edges += 1;
            map.edge_count += 1;
        }
        let bit = bucket_bit(bucketize(count));
        if *slot & bit == 0 {
            new_buckets += 1;
            *slot |= bit;
        }
    }
    CoverageDelta::new(new_edges, new_buckets)
}

/// Relative growth of the distinct-edge count over a baseline.
pub fn coverage_improvement(initial_edges: usize, final_edges: usize) -> Result<f64, CoverageError> {
    if initial_edges == 0 {
        return Err(CoverageError::UndefinedBaseline);
    }
    Ok((final_edges as f64 - initial_edges as f64) / initial_edges as f64)
}

/// What corpus minimization needs to know about one seed.
#[derive(Debug, Clone)]
pub struct CminEntry<K> {
    pub key: K,
    pub edges: BTreeSet<EdgeId>,
    pub crashed: bool,
}

/// Greedy edge-preserving minimization.
///
/// Crashing entries are always kept and their edges count as covered. The
/// rest are visited by descending distinct-edge count (ties by ascending key)
/// and kept iff they contribute at least one unseen edge id. Output order is
/// crashes (input order) followed by the greedy selection order.
pub fn cmin_select<K: Ord + Clone>(entries: &[CminEntry<K>]) -> Vec<K> {
    let mut covered: BTreeSet<EdgeId> = BTreeSet::new();
    let mut kept = Vec::new();
    for e in entries.iter().filter(|e| e.crashed) {
        covered.extend(e.edges.iter().copied());
        kept.push(e.key.clone());
    }
    let mut order: Vec<&CminEntry<K>> = entries.iter().filter(|e| !e.crashed).collect();
    order.sort_by(|a, b| b.edges.len().cmp(&a.edges.len()).then_with(|| a.key.cmp(&b.key)));
    for e in order {
        if e.edges.iter().any(|edge| !covered.contains(edge)) {
            covered.extend(e.edges.iter().copied());
            kept.push(e.key.clone());
        }
    }
    kept
}

/// Runs every input through `harness` and minimizes. Returns indices into
/// `inputs`, ties broken by position.
pub fn cmin<S: AsRef<[u8]> + Sync>(inputs: &[S], harness: &TargetHarness) -> Result<Vec<usize>, HarnessError> {
    let results = crate::parallel::map(inputs, |s| harness.run(s.as_ref()));
    let entries = results
        .into_iter()
        .enumerate()
        .map(|(key, r)| {
            r.map(|r| CminEntry {
                key,
                edges: r.trace.edge_set(),
                crashed: r.verdict == Verdict::Crash,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(cmin_select(&entries))
}
