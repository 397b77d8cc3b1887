//! Loop dispatch over cell ranges.
//!
//! One [`Executor`] runs cell-indexed kernels under any of four loop shapes:
//!
//! * [`LoopPattern::SimdNested`]: serial `k`/`j` loops around a unit-stride
//!   inner `i` loop, the classic triple loop with a vectorizable body.
//! * [`LoopPattern::MdRange`]: parallel over `(k, j)` pairs, serial inner `i`.
//! * [`LoopPattern::Flat1d`]: parallel over the collapsed index, decoded back
//!   to `(k, j, i)` with [`decode_flat_index`].
//! * [`LoopPattern::TiledTeam`]: tiles act as teams, `j` rows inside a tile are
//!   dealt to team members, `i` is the inner vector range.
//!
//! Work is split into contiguous static chunks, one per worker, so the
//! iteration-to-worker mapping and the reduction tree only depend on the
//! policy, the bounds and the worker count.

mod counting;
mod profile;

pub use counting::{absorb_tally, current_tally, measure, Counted, OpTally};
pub use profile::{count_kernel_ops, KernelProfile, OpCount, ProfileReport, Profiler, KERNEL_REGIONS};

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::mesh::SliceWriter;
use crate::real::Real;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ExecError {
    #[error("worker count must be at least 1")]
    NoWorkers,
    #[error("tile extents and team size must be positive")]
    BadTile,
    #[error("unknown loop policy `{0}`")]
    UnknownPolicy(String),
    #[error("failed to build worker pool: {0}")]
    Pool(String),
    #[error("kernel `{0}` has no operation tallies (not instrumented or counting was off)")]
    Unsupported(String),
}

/// Inclusive-exclusive `(k, j, i)` index ranges.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct LoopBounds {
    pub ks: usize,
    pub ke: usize,
    pub js: usize,
    pub je: usize,
    pub is: usize,
    pub ie: usize,
}

impl LoopBounds {
    pub fn new(k: (usize, usize), j: (usize, usize), i: (usize, usize)) -> Self {
        debug_assert!(k.1 >= k.0 && j.1 >= j.0 && i.1 >= i.0);
        LoopBounds { ks: k.0, ke: k.1, js: j.0, je: j.1, is: i.0, ie: i.1 }
    }

    /// Bounds `[0, n3) x [0, n2) x [0, n1)`.
    pub fn extent(n3: usize, n2: usize, n1: usize) -> Self {
        Self::new((0, n3), (0, n2), (0, n1))
    }

    pub fn nk(&self) -> usize {
        self.ke.saturating_sub(self.ks)
    }
    pub fn nj(&self) -> usize {
        self.je.saturating_sub(self.js)
    }
    pub fn ni(&self) -> usize {
        self.ie.saturating_sub(self.is)
    }

    pub fn len(&self) -> usize {
        self.nk() * self.nj() * self.ni()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Inverse of `k * nj * ni + j * ni + i`.
#[inline(always)]
pub fn decode_flat_index(idx: usize, nj: usize, ni: usize) -> (usize, usize, usize) {
    let k = idx / (nj * ni);
    let j = (idx - k * nj * ni) / ni;
    let i = idx - k * nj * ni - j * ni;
    (k, j, i)
}

/// Tile extents for [`LoopPattern::TiledTeam`], in cells.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TileExtents {
    pub k: usize,
    pub j: usize,
    pub i: usize,
}

impl Default for TileExtents {
    fn default() -> Self {
        TileExtents { k: 1, j: 8, i: 1 << 20 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LoopPattern {
    SimdNested,
    MdRange,
    Flat1d,
    TiledTeam { team_size: usize, tile: TileExtents },
}

impl LoopPattern {
    pub const ALL_DEFAULT: [LoopPattern; 4] = [
        LoopPattern::SimdNested,
        LoopPattern::MdRange,
        LoopPattern::Flat1d,
        LoopPattern::TiledTeam { team_size: 4, tile: TileExtents { k: 1, j: 8, i: 1 << 20 } },
    ];

    pub fn name(&self) -> &'static str {
        match self {
            LoopPattern::SimdNested => "simd",
            LoopPattern::MdRange => "mdrange",
            LoopPattern::Flat1d => "flat1d",
            LoopPattern::TiledTeam { .. } => "team",
        }
    }
}

impl fmt::Display for LoopPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LoopPattern {
    type Err = ExecError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "simd" | "simd-for" | "simdnested" | "simd_nested" => Ok(LoopPattern::SimdNested),
            "mdrange" | "md_range" => Ok(LoopPattern::MdRange),
            "flat1d" | "1drange" | "flat" => Ok(LoopPattern::Flat1d),
            "team" | "tiledteam" | "tiled_team" | "teampolicy" => Ok(LoopPattern::ALL_DEFAULT[3]),
            other => Err(ExecError::UnknownPolicy(other.to_string())),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LoopPolicy {
    pub pattern: LoopPattern,
    pub workers: usize,
}

impl LoopPolicy {
    pub fn new(pattern: LoopPattern, workers: usize) -> Self {
        LoopPolicy { pattern, workers }
    }

    pub fn serial() -> Self {
        LoopPolicy { pattern: LoopPattern::SimdNested, workers: 1 }
    }

    pub fn validate(&self) -> Result<(), ExecError> {
        if self.workers == 0 {
            return Err(ExecError::NoWorkers);
        }
        if let LoopPattern::TiledTeam { team_size, tile } = self.pattern {
            if team_size == 0 || tile.k == 0 || tile.j == 0 || tile.i == 0 {
                return Err(ExecError::BadTile);
            }
        }
        Ok(())
    }
}

impl Default for LoopPolicy {
    fn default() -> Self {
        Self::serial()
    }
}

/// Executes kernels under a fixed [`LoopPolicy`] and records profiling data.
pub struct Executor {
    policy: LoopPolicy,
    pool: Option<rayon::ThreadPool>,
    profiler: Profiler,
}

impl fmt::Debug for Executor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Executor").field("policy", &self.policy).finish()
    }
}

impl Executor {
    pub fn new(policy: LoopPolicy) -> Result<Self, ExecError> {
        policy.validate()?;
        let pool = if policy.workers > 1 {
            Some(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(policy.workers)
                    .thread_name(|n| format!("pmhd-worker-{n}"))
                    .build()
                    .map_err(|e| ExecError::Pool(e.to_string()))?,
            )
        } else {
            None
        };
        Ok(Executor { policy, pool, profiler: Profiler::default() })
    }

    pub fn serial() -> Self {
        Self::new(LoopPolicy::serial()).expect("serial policy is always valid")
    }

    pub fn policy(&self) -> LoopPolicy {
        self.policy
    }

    pub fn profiler(&self) -> &Profiler {
        &self.profiler
    }

    /// Times `f` under the named profiling region.
    pub fn region<R>(&self, name: &str, f: impl FnOnce() -> R) -> R {
        self.profiler.with_region(name, f)
    }

    /// Records streamed array traffic for the innermost open regions.
    pub fn note_traffic(&self, elems_read: u64, elems_written: u64, elem_bytes: usize) {
        self.profiler.note_traffic(elems_read, elems_written, elem_bytes);
    }

    /// Invokes `body(k, j, i)` exactly once for every index in `bounds`.
    ///
    /// The body may write only to locations determined by its own index.
    pub fn par_for<F>(&self, bounds: LoopBounds, body: F)
    where
        F: Fn(usize, usize, usize) + Sync,
    {
        self.par_reduce(bounds, (), |k, j, i| body(k, j, i), |_, _| ());
    }

    /// Deterministic parallel reduction.
    ///
    /// Each chunk folds its cells in iteration order starting from
    /// `identity`; chunk partials are then combined by a fixed pairwise tree
    /// in chunk order. `combine` must be associative with `identity` neutral.
    pub fn par_reduce<R, F, C>(&self, bounds: LoopBounds, identity: R, body: F, combine: C) -> R
    where
        R: Copy + Send + Sync,
        F: Fn(usize, usize, usize) -> R + Sync,
        C: Fn(R, R) -> R + Sync,
    {
        if bounds.is_empty() {
            return identity;
        }
        let plan = Plan::new(self.policy.pattern, bounds);
        let chunks = split_static(plan.units(), self.policy.workers);
        let partials: Vec<R> = match &self.pool {
            None => chunks
                .iter()
                .map(|&(lo, hi)| plan.fold(lo, hi, identity, &body, &combine))
                .collect(),
            Some(pool) => {
                let results: Vec<(R, OpTally)> = pool.install(|| {
                    chunks
                        .par_iter()
                        .with_max_len(1)
                        .map(|&(lo, hi)| {
                            let before = current_tally();
                            let r = plan.fold(lo, hi, identity, &body, &combine);
                            (r, current_tally().delta_since(&before))
                        })
                        .collect()
                });
                let mut partials = Vec::with_capacity(results.len());
                for (r, tally) in results {
                    absorb_tally(&tally);
                    partials.push(r);
                }
                partials
            }
        };
        tree_combine(&partials, identity, &combine)
    }
}

/// `out[n] = a[n] + b[n]` under the `add` region: one FLOP, two reads and
/// one write per element.
pub fn add_kernel<T: Real>(exec: &Executor, a: &[T], b: &[T], out: &mut [T]) {
    assert!(a.len() == out.len() && b.len() == out.len(), "length mismatch");
    let n = out.len();
    let w = SliceWriter::new(out);
    exec.region("add", || {
        exec.par_for(LoopBounds::extent(1, 1, n), |_, _, i| {
            // SAFETY: each index is written by exactly one iteration.
            unsafe { w.write(i, a[i] + b[i]) };
        });
        exec.note_traffic(2 * n as u64, n as u64, T::BYTES);
    });
}

/// Splits `n` units into `parts` contiguous ranges; the first `n % parts`
/// ranges get one extra unit. Empty ranges are dropped.
fn split_static(n: usize, parts: usize) -> Vec<(usize, usize)> {
    let parts = parts.max(1);
    let base = n / parts;
    let extra = n % parts;
    let mut out = Vec::with_capacity(parts);
    let mut lo = 0;
    for p in 0..parts {
        let len = base + usize::from(p < extra);
        if len > 0 {
            out.push((lo, lo + len));
        }
        lo += len;
    }
    out
}

fn tree_combine<R: Copy, C: Fn(R, R) -> R>(items: &[R], identity: R, combine: &C) -> R {
    match items.len() {
        0 => identity,
        1 => items[0],
        n => {
            let mid = n.div_ceil(2);
            combine(tree_combine(&items[..mid], identity, combine), tree_combine(&items[mid..], identity, combine))
        }
    }
}

/// Unit decomposition of a bounds box for one loop pattern.
struct Plan {
    pattern: LoopPattern,
    b: LoopBounds,
    // TiledTeam geometry
    tiles: [usize; 3],
}

impl Plan {
    fn new(pattern: LoopPattern, b: LoopBounds) -> Self {
        let tiles = match pattern {
            LoopPattern::TiledTeam { tile, .. } => {
                [b.nk().div_ceil(tile.k), b.nj().div_ceil(tile.j), b.ni().div_ceil(tile.i)]
            }
            _ => [0; 3],
        };
        Plan { pattern, b, tiles }
    }

    fn units(&self) -> usize {
        let b = &self.b;
        match self.pattern {
            LoopPattern::SimdNested => b.nk(),
            LoopPattern::MdRange => b.nk() * b.nj(),
            LoopPattern::Flat1d => b.len(),
            LoopPattern::TiledTeam { team_size, .. } => {
                self.tiles[0] * self.tiles[1] * self.tiles[2] * team_size
            }
        }
    }

    #[inline]
    fn fold<R, F, C>(&self, lo: usize, hi: usize, identity: R, body: &F, combine: &C) -> R
    where
        R: Copy,
        F: Fn(usize, usize, usize) -> R,
        C: Fn(R, R) -> R,
    {
        let b = &self.b;
        let mut acc = identity;
        match self.pattern {
            LoopPattern::SimdNested => {
                for k in b.ks + lo..b.ks + hi {
                    for j in b.js..b.je {
                        for i in b.is..b.ie {
                            acc = combine(acc, body(k, j, i));
                        }
                    }
                }
            }
            LoopPattern::MdRange => {
                let nj = b.nj();
                for unit in lo..hi {
                    let k = b.ks + unit / nj;
                    let j = b.js + unit % nj;
                    for i in b.is..b.ie {
                        acc = combine(acc, body(k, j, i));
                    }
                }
            }
            LoopPattern::Flat1d => {
                let (nj, ni) = (b.nj(), b.ni());
                for idx in lo..hi {
                    let (k, j, i) = decode_flat_index(idx, nj, ni);
                    acc = combine(acc, body(b.ks + k, b.js + j, b.is + i));
                }
            }
            LoopPattern::TiledTeam { team_size, tile } => {
                let [_, tj, ti] = self.tiles;
                for unit in lo..hi {
                    let member = unit % team_size;
                    let league = unit / team_size;
                    let tk_idx = league / (tj * ti);
                    let tj_idx = (league / ti) % tj;
                    let ti_idx = league % ti;
                    let k0 = b.ks + tk_idx * tile.k;
                    let j0 = b.js + tj_idx * tile.j;
                    let i0 = b.is + ti_idx * tile.i;
                    let k1 = (k0 + tile.k).min(b.ke);
                    let j1 = (j0 + tile.j).min(b.je);
                    let i1 = (i0 + tile.i).min(b.ie);
                    for k in k0..k1 {
                        let mut j = j0 + member;
                        while j < j1 {
                            for i in i0..i1 {
                                acc = combine(acc, body(k, j, i));
                            }
                            j += team_size;
                        }
                    }
                }
            }
        }
        acc
    }
}
