//! Size-bounded, domain-constrained and rank-based mining.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::exact::{
    count_candidate, quick_check, run_levelwise, DiffCache, MiningContext, MiningRun, OptimizationFlags, Quick, RunOptions,
    SearchSpace,
};
use crate::fraction::Fraction;
use crate::ingest::{extract_atomic_patterns_where, TripsTable};
use crate::model::{extensions, Dim, MiningParams, OdtPattern, OdtTriple, RegionGraph};

/// Patterns whose components stay within `params.bounds`. Extensions that
/// would break a bound are never generated.
pub fn mine_bounded<F: Fraction>(
    ctx: &MiningContext<'_>,
    params: &MiningParams<F>,
    flags: OptimizationFlags,
    opts: &RunOptions,
) -> Result<MiningRun> {
    params.validate(ctx.graph(), &ctx.time_domain())?;
    let bounds = params
        .bounds
        .ok_or_else(|| Error::InvalidParam("bounded mining needs size bounds".into()))?;
    let space = SearchSpace::new(ctx.graph().len(), Some(bounds), params.constraints.as_ref(), params.maxl);
    let seeds = ctx.atomic_patterns(params.constraints.as_ref());
    run_levelwise(ctx, seeds, params.s_r, &space, flags, opts)
}

/// Patterns inside `params.constraints`. Atomic membership comes from
/// `ctx` (the global `s_a` selection) filtered to the domain.
pub fn mine_constrained<F: Fraction>(
    ctx: &MiningContext<'_>,
    params: &MiningParams<F>,
    flags: OptimizationFlags,
    opts: &RunOptions,
) -> Result<MiningRun> {
    params.validate(ctx.graph(), &ctx.time_domain())?;
    let c = params
        .constraints
        .as_ref()
        .ok_or_else(|| Error::InvalidParam("constrained mining needs a domain".into()))?;
    let space = SearchSpace::new(ctx.graph().len(), params.bounds, Some(c), params.maxl);
    run_levelwise(ctx, ctx.atomic_patterns(Some(c)), params.s_r, &space, flags, opts)
}

/// Context whose atomic patterns are ranked only among triples inside the
/// constraint domain, for use with [`mine_constrained`].
pub fn rescoped_context<'g, F: Fraction>(
    graph: &'g RegionGraph,
    table: &TripsTable,
    params: &MiningParams<F>,
) -> Result<MiningContext<'g>> {
    let td = table.time_domain();
    params.validate(graph, &td)?;
    let c = params
        .constraints
        .as_ref()
        .ok_or_else(|| Error::InvalidParam("rescoping needs a domain".into()))?;
    let aps = extract_atomic_patterns_where(table, params.s_a, |o, d, t| c.admits_atom(o, d, t))?;
    Ok(MiningContext::from_atomic(graph, td, aps))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RankStrategy {
    /// Generate and count every candidate, then keep the top `k`.
    BaseRank,
    /// As `BaseRank` with the AV/FC/IN counting shortcuts.
    BaseOptRank,
    /// Shortcuts plus gain-bound pruning against the running `k`-th count.
    OptRank,
}

impl RankStrategy {
    pub const ALL: [RankStrategy; 3] = [RankStrategy::BaseRank, RankStrategy::BaseOptRank, RankStrategy::OptRank];
}

impl fmt::Display for RankStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RankStrategy::BaseRank => "baserank",
            RankStrategy::BaseOptRank => "baseoptrank",
            RankStrategy::OptRank => "optrank",
        })
    }
}

impl FromStr for RankStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        RankStrategy::ALL
            .into_iter()
            .find(|r| r.to_string() == s.to_ascii_lowercase())
            .ok_or_else(|| Error::InvalidParam(format!("unknown rank strategy `{s}`")))
    }
}

/// Heap entry ordered so that the heap top is the weakest pattern: lowest
/// `cnt`, then the largest canonical triple.
#[derive(Debug, Clone, PartialEq, Eq)]
struct Weakest(OdtPattern);

impl Ord for Weakest {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .0
            .cnt
            .cmp(&self.0.cnt)
            .then_with(|| self.0.triple.cmp(&other.0.triple))
    }
}

impl PartialOrd for Weakest {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Best `k` patterns of one level, by `cnt` then canonical order.
#[derive(Debug, Clone)]
pub struct RankedFrontier {
    k: usize,
    heap: BinaryHeap<Weakest>,
}

impl RankedFrontier {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            heap: BinaryHeap::with_capacity(k + 1),
        }
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.heap.len() >= self.k
    }

    /// The `k`-th largest count once the heap is full.
    pub fn theta(&self) -> Option<u64> {
        if self.is_full() {
            self.heap.peek().map(|w| w.0.cnt)
        } else {
            None
        }
    }

    /// Inserts `p` if it ranks among the best `k`; returns whether it did.
    pub fn offer(&mut self, p: OdtPattern) -> bool {
        let entry = Weakest(p);
        if !self.is_full() {
            self.heap.push(entry);
            return true;
        }
        match self.heap.peek() {
            Some(top) if entry < *top => {
                self.heap.pop();
                self.heap.push(entry);
                true
            }
            _ => false,
        }
    }

    /// Members in canonical order.
    pub fn into_sorted(self) -> Vec<OdtPattern> {
        let mut v: Vec<OdtPattern> = self.heap.into_iter().map(|w| w.0).collect();
        v.sort_by(|a, b| a.triple.cmp(&b.triple));
        v
    }
}

/// Largest number of atomic patterns a single extension along `dim` can add.
pub fn lemma1_max_gain(p: &OdtTriple, dim: Dim) -> u64 {
    let (o, d, t) = (p.origin.len() as u64, p.dest.len() as u64, p.time.len() as u64);
    match dim {
        Dim::Origin => d * t,
        Dim::Dest => o * t,
        Dim::Time => o * d,
    }
}

/// Whether no minimal generalization of `p` can beat a full frontier whose
/// weakest count is `theta`. Equality is not enough to prune: a candidate
/// tying `theta` may still win on canonical order.
pub fn lemma2_prunable(p: &OdtPattern, theta: Option<u64>) -> bool {
    let Some(theta) = theta else {
        return false;
    };
    let gain = Dim::ALL
        .iter()
        .map(|&d| lemma1_max_gain(&p.triple, d))
        .max()
        .unwrap_or(0);
    p.cnt + gain < theta
}

/// Top-`k` patterns per level up to `maxl`; level 3 is the whole atomic set.
/// No ratio test is applied.
pub fn mine_ranked<F: Fraction>(
    ctx: &MiningContext<'_>,
    params: &MiningParams<F>,
    strategy: RankStrategy,
    opts: &RunOptions,
) -> Result<MiningRun> {
    params.validate(ctx.graph(), &ctx.time_domain())?;
    let (Some(k), Some(maxl)) = (params.k, params.maxl) else {
        return Err(Error::InvalidParam("rank mining needs k and maxl".into()));
    };
    let started = Instant::now();
    let flags = match strategy {
        RankStrategy::BaseRank => OptimizationFlags::BASELINE,
        RankStrategy::BaseOptRank | RankStrategy::OptRank => OptimizationFlags::AVFCIN,
    };
    let space = SearchSpace::new(ctx.graph().len(), params.bounds, params.constraints.as_ref(), None);
    let (g, td) = (ctx.graph(), ctx.time_domain());

    let mut frontier = ctx.atomic_patterns(params.constraints.as_ref());
    frontier.sort_by(|a, b| a.triple.cmp(&b.triple));
    let mut stats = crate::exact::CostBreakdown {
        patterns_per_level: vec![0; maxl.max(3) + 1],
        ..Default::default()
    };
    stats.patterns_per_level[3] = frontier.len() as u64;
    let mut all = frontier.clone();
    let mut cache = DiffCache::default();
    let mut exts = Vec::new();

    for level in 4..=maxl {
        if frontier.is_empty() {
            break;
        }
        if strategy == RankStrategy::OptRank {
            // strongest first, so theta rises early
            frontier.sort_by(|a, b| b.cnt.cmp(&a.cnt).then_with(|| a.triple.cmp(&b.triple)));
        }
        let mut top = RankedFrontier::new(k);
        let mut considered: HashSet<OdtTriple> = HashSet::new();
        for (i, p) in frontier.iter().enumerate() {
            if i % 64 == 0 && opts.deadline.is_some_and(|d| Instant::now() >= d) {
                return Err(Error::Timeout { levels_done: level - 4 });
            }
            let pruning = strategy == RankStrategy::OptRank;
            if pruning && lemma2_prunable(p, top.theta()) {
                stats.pruned_lemma2 += 1;
                continue;
            }
            exts.clear();
            extensions(&p.triple, g, &td, flags.scan(), &mut exts);
            for &ext in &exts {
                if !space.permits(&p.triple, ext) {
                    continue;
                }
                stats.candidates_generated += 1;
                let cand = p.triple.extend(ext);
                if considered.contains(&cand) {
                    stats.duplicate_candidates += 1;
                    continue;
                }
                if pruning {
                    if let Some(theta) = top.theta() {
                        if p.cnt + lemma1_max_gain(&p.triple, ext.dim()) < theta {
                            stats.pruned_lemma1 += 1;
                            continue;
                        }
                    }
                }
                stats.candidates_evaluated += 1;
                let t0 = opts.instrument.then(Instant::now);
                let cnt = match quick_check::<F>(ctx, p, ext, cand.card(), None, flags, opts.audit_prunes, &mut stats) {
                    Quick::Known(cnt) => cnt,
                    _ => count_candidate(ctx, p, ext, flags, None, &mut cache, &mut stats),
                };
                if let Some(t0) = t0 {
                    stats.support_counting_time += t0.elapsed();
                }
                considered.insert(cand.clone());
                top.offer(OdtPattern::new(cand, cnt));
            }
        }
        frontier = top.into_sorted();
        stats.patterns_per_level[level] = frontier.len() as u64;
        all.extend(frontier.iter().cloned());
    }

    stats.total_time = started.elapsed();
    stats.candidate_generation_time = stats.total_time.saturating_sub(stats.support_counting_time);
    stats.peak_memory_estimate = cache.memory_bytes()
        + all.iter().map(|p| crate::exact::triple_bytes(&p.triple)).sum::<usize>();
    Ok(MiningRun { patterns: all, stats })
}
