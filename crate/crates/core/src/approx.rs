//! Randomized mining of fixed-size patterns.
//!
//! Both miners draw from the same candidate pools: per seed region one
//! origin set and one destination set, each grown by a randomized BFS, and
//! every slot window of the requested length. [`mine_approx`] samples
//! combinations uniformly; [`mine_weighted`] ranks all combinations by the
//! product of their atomic-pattern weights and verifies the best `M`.
//!
//! Every random choice comes from a ChaCha stream derived from the seed and
//! the item being processed, so thread count never changes the output.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap, VecDeque};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::exact::{count_exact, MiningContext, RunOptions};
use crate::fraction::Fraction;
use crate::ingest::AtomicPatternSet;
use crate::model::{OdtPattern, OdtTriple, RegionGraph, RegionId, RegionSet, SlotRange, TimeDomain};

const ORIGIN_STREAM: u64 = 0;
const DEST_STREAM: u64 = 1;
const DRAW_STREAM: u64 = 2;
const DRAW_CHUNK: usize = 1024;

/// Exact component sizes of the patterns being searched.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FixedSizes {
    pub origin: usize,
    pub dest: usize,
    pub time: u32,
}

impl FixedSizes {
    pub fn new(origin: usize, dest: usize, time: u32) -> Self {
        Self { origin, dest, time }
    }

    pub fn admits(&self, t: &OdtTriple) -> bool {
        t.origin.len() == self.origin && t.dest.len() == self.dest && t.time.len() == self.time
    }
}

fn derived_rng(seed: u64, kind: u64, item: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(item.wrapping_mul(4).wrapping_add(kind));
    rng
}

/// Connected set of `size` regions containing `seed`, grown by FIFO BFS
/// with neighbors enqueued in random order. `None` when the component of
/// `seed` is too small.
pub fn random_bfs_candidate<R: Rng + ?Sized>(
    g: &RegionGraph,
    seed: RegionId,
    size: usize,
    rng: &mut R,
) -> Option<RegionSet> {
    if size == 0 {
        return None;
    }
    let mut seen = vec![false; g.len()];
    let mut picked = vec![seed];
    seen[seed.index()] = true;
    let mut queue = VecDeque::new();
    let enqueue = |v: RegionId, seen: &mut Vec<bool>, queue: &mut VecDeque<RegionId>, rng: &mut R| {
        let mut nbrs: Vec<RegionId> = g.neighbors(v).iter().copied().filter(|n| !seen[n.index()]).collect();
        nbrs.shuffle(rng);
        for n in nbrs {
            seen[n.index()] = true;
            queue.push_back(n);
        }
    };
    enqueue(seed, &mut seen, &mut queue, rng);
    while picked.len() < size {
        let v = queue.pop_front()?;
        picked.push(v);
        enqueue(v, &mut seen, &mut queue, rng);
    }
    Some(RegionSet::new(picked))
}

/// Origin, destination and time candidates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidatePools {
    /// One entry per seed region whose component is large enough; repeats
    /// are kept.
    pub origins: Vec<RegionSet>,
    pub dests: Vec<RegionSet>,
    /// All windows `[i, i + S_T - 1]`.
    pub windows: Vec<SlotRange>,
}

impl CandidatePools {
    fn distinct(v: &[RegionSet]) -> Vec<RegionSet> {
        let mut out = v.to_vec();
        out.sort();
        out.dedup();
        out
    }

    pub fn distinct_origins(&self) -> Vec<RegionSet> {
        Self::distinct(&self.origins)
    }

    pub fn distinct_dests(&self) -> Vec<RegionSet> {
        Self::distinct(&self.dests)
    }
}

/// Builds the pools; node `v` uses its own random stream.
pub fn build_pools(g: &RegionGraph, td: &TimeDomain, sizes: FixedSizes, seed: u64) -> Result<CandidatePools> {
    if sizes.origin == 0 || sizes.dest == 0 || sizes.time == 0 {
        return Err(Error::InvalidParam("pattern sizes must be positive".into()));
    }
    if sizes.time > td.slot_count() {
        return Err(Error::InvalidParam(format!(
            "time size {} exceeds {} slots",
            sizes.time,
            td.slot_count()
        )));
    }
    let grow = |kind: u64, size: usize| -> Vec<RegionSet> {
        g.regions()
            .collect::<Vec<_>>()
            .par_iter()
            .filter_map(|&v| random_bfs_candidate(g, v, size, &mut derived_rng(seed, kind, v.0 as u64)))
            .collect()
    };
    let origins = grow(ORIGIN_STREAM, sizes.origin);
    let dests = grow(DEST_STREAM, sizes.dest);
    let windows = (0..=td.slot_count() - sizes.time)
        .map(|i| SlotRange::new(i, i + sizes.time - 1))
        .collect();
    Ok(CandidatePools { origins, dests, windows })
}

/// Per-node and per-slot atomic-pattern counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeWeights {
    pub w_o: Vec<u64>,
    pub w_d: Vec<u64>,
    pub w_t: Vec<u64>,
}

impl NodeWeights {
    pub fn from_atomic(aps: &AtomicPatternSet) -> Self {
        let mut w = Self {
            w_o: vec![0; aps.region_count()],
            w_d: vec![0; aps.region_count()],
            w_t: vec![0; aps.slot_count() as usize],
        };
        for (o, d, t) in aps.iter() {
            w.w_o[o.index()] += 1;
            w.w_d[d.index()] += 1;
            w.w_t[t as usize] += 1;
        }
        w
    }

    pub fn origin_weight(&self, s: &RegionSet) -> u64 {
        s.iter().map(|r| self.w_o[r.index()]).sum()
    }

    pub fn dest_weight(&self, s: &RegionSet) -> u64 {
        s.iter().map(|r| self.w_d[r.index()]).sum()
    }

    pub fn time_weight(&self, t: SlotRange) -> u64 {
        t.iter().map(|s| self.w_t[s as usize]).sum()
    }

    /// `w_O(O) · w_D(D) · w_T(T)`.
    pub fn triple_weight(&self, t: &OdtTriple) -> u128 {
        self.origin_weight(&t.origin) as u128 * self.dest_weight(&t.dest) as u128 * self.time_weight(t.time) as u128
    }
}

/// A sampled pattern and how many draws produced it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampledPattern {
    pub pattern: OdtPattern,
    pub hits: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApproxRun {
    /// Distinct patterns in canonical order.
    pub patterns: Vec<SampledPattern>,
    pub accepted_draws: u64,
    pub rejected_draws: u64,
    pub distinct_sampled: usize,
}

fn maybe_pool(threads: usize) -> Result<Option<rayon::ThreadPool>> {
    if threads <= 1 {
        return Ok(None);
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map(Some)
        .map_err(|e| Error::InvalidParam(format!("thread pool: {e}")))
}

fn verify<F: Fraction>(
    ctx: &MiningContext<'_>,
    triples: Vec<OdtTriple>,
    s_r: F,
    pool: Option<&rayon::ThreadPool>,
) -> Vec<Option<OdtPattern>> {
    let check = |t: OdtTriple| {
        let cnt = count_exact(&t, ctx.atomic());
        s_r.admits(cnt, t.card()).then(|| OdtPattern::new(t, cnt))
    };
    match pool {
        Some(p) => p.install(|| triples.into_par_iter().map(check).collect()),
        None => triples.into_iter().map(check).collect(),
    }
}

/// Draws `m` combinations uniformly from the pools, redrawing whenever the
/// origin and destination overlap, and keeps those passing `s_r`.
pub fn mine_approx<F: Fraction>(
    ctx: &MiningContext<'_>,
    s_r: F,
    sizes: FixedSizes,
    m: usize,
    seed: u64,
    opts: &RunOptions,
) -> Result<ApproxRun> {
    if m == 0 {
        return Err(Error::InvalidParam("sample count must be at least 1".into()));
    }
    let pools = build_pools(ctx.graph(), &ctx.time_domain(), sizes, seed)?;
    if pools.origins.is_empty() || pools.dests.is_empty() {
        return Err(Error::PoolExhausted { rejections: 0 });
    }
    let cap = 100 * m as u64;
    let draw_chunk = |chunk: usize| -> Result<(Vec<OdtTriple>, u64)> {
        let mut rng = derived_rng(seed, DRAW_STREAM, chunk as u64);
        let n = DRAW_CHUNK.min(m - chunk * DRAW_CHUNK);
        let mut out = Vec::with_capacity(n);
        let mut rejected = 0;
        while out.len() < n {
            let mut streak = 0u64;
            loop {
                let o = &pools.origins[rng.random_range(0..pools.origins.len())];
                let d = &pools.dests[rng.random_range(0..pools.dests.len())];
                let t = pools.windows[rng.random_range(0..pools.windows.len())];
                if o.is_disjoint(d) {
                    out.push(OdtTriple::new(o.clone(), d.clone(), t)?);
                    break;
                }
                rejected += 1;
                streak += 1;
                if streak >= cap {
                    return Err(Error::PoolExhausted { rejections: streak });
                }
            }
        }
        Ok((out, rejected))
    };
    let chunks = m.div_ceil(DRAW_CHUNK);
    let pool = maybe_pool(opts.threads)?;
    let drawn: Vec<Result<(Vec<OdtTriple>, u64)>> = match &pool {
        Some(p) => p.install(|| (0..chunks).into_par_iter().map(draw_chunk).collect()),
        None => (0..chunks).map(draw_chunk).collect(),
    };
    let mut hits: BTreeMap<OdtTriple, u64> = BTreeMap::new();
    let mut rejected_draws = 0;
    for part in drawn {
        let (triples, rej) = part?;
        rejected_draws += rej;
        for t in triples {
            *hits.entry(t).or_default() += 1;
        }
    }
    let distinct_sampled = hits.len();
    let (triples, counts): (Vec<OdtTriple>, Vec<u64>) = hits.into_iter().unzip();
    let patterns = verify(ctx, triples, s_r, pool.as_ref())
        .into_iter()
        .zip(counts)
        .filter_map(|(p, hits)| p.map(|pattern| SampledPattern { pattern, hits }))
        .collect();
    Ok(ApproxRun {
        patterns,
        accepted_draws: m as u64,
        rejected_draws,
        distinct_sampled,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeightedRun {
    /// Verified patterns in canonical order.
    pub patterns: Vec<OdtPattern>,
    /// The `M` heaviest combinations, heaviest first.
    pub selected: Vec<(OdtTriple, u128)>,
    /// Disjoint combinations enumerated.
    pub combinations: u64,
}

/// Ranks every disjoint pool combination by `w_O(O)·w_D(D)·w_T(T)` and
/// verifies the `m` heaviest (ties go to the canonically smaller triple).
pub fn mine_weighted<F: Fraction>(
    ctx: &MiningContext<'_>,
    s_r: F,
    sizes: FixedSizes,
    m: usize,
    seed: u64,
    opts: &RunOptions,
) -> Result<WeightedRun> {
    if m == 0 {
        return Err(Error::InvalidParam("candidate budget must be at least 1".into()));
    }
    let pools = build_pools(ctx.graph(), &ctx.time_domain(), sizes, seed)?;
    let weights = NodeWeights::from_atomic(ctx.atomic());
    // sorted pools make index order coincide with canonical triple order
    let origins = pools.distinct_origins();
    let dests = pools.distinct_dests();
    let wo: Vec<u128> = origins.iter().map(|s| weights.origin_weight(s) as u128).collect();
    let wd: Vec<u128> = dests.iter().map(|s| weights.dest_weight(s) as u128).collect();
    let wt: Vec<u128> = pools.windows.iter().map(|&t| weights.time_weight(t) as u128).collect();

    // top of the heap is the weakest kept entry
    let mut heap: BinaryHeap<(Reverse<u128>, (usize, usize, usize))> = BinaryHeap::with_capacity(m + 1);
    let mut combinations = 0u64;
    for (oi, o) in origins.iter().enumerate() {
        for (di, d) in dests.iter().enumerate() {
            if !o.is_disjoint(d) {
                continue;
            }
            for (ti, &w) in wt.iter().enumerate() {
                combinations += 1;
                let key = (Reverse(wo[oi] * wd[di] * w), (oi, di, ti));
                if heap.len() < m {
                    heap.push(key);
                } else if heap.peek().is_some_and(|top| key < *top) {
                    heap.pop();
                    heap.push(key);
                }
            }
        }
        if opts.deadline.is_some_and(|dl| std::time::Instant::now() >= dl) {
            return Err(Error::Timeout { levels_done: 0 });
        }
    }
    let mut chosen = heap.into_vec();
    chosen.sort();
    let selected: Vec<(OdtTriple, u128)> = chosen
        .into_iter()
        .map(|(Reverse(w), (oi, di, ti))| {
            let t = OdtTriple::new(origins[oi].clone(), dests[di].clone(), pools.windows[ti])?;
            Ok((t, w))
        })
        .collect::<Result<_>>()?;
    let pool = maybe_pool(opts.threads)?;
    let mut patterns: Vec<OdtPattern> = verify(
        ctx,
        selected.iter().map(|(t, _)| t.clone()).collect(),
        s_r,
        pool.as_ref(),
    )
    .into_iter()
    .flatten()
    .collect();
    patterns.sort_by(|a, b| a.triple.cmp(&b.triple));
    Ok(WeightedRun {
        patterns,
        selected,
        combinations,
    })
}

/// Number of approximate patterns that also appear in an exact result.
pub fn overlap<'a>(approx: impl IntoIterator<Item = &'a OdtTriple>, exact: &[OdtPattern]) -> usize {
    let exact: std::collections::HashSet<&OdtTriple> = exact.iter().map(|p| &p.triple).collect();
    approx.into_iter().filter(|t| exact.contains(t)).count()
}
