//! Exact level-wise enumeration of ODT patterns.
//!
//! Level 3 holds the atomic patterns. Every pattern at level `ℓ` is expanded
//! by each minimal generalization; a candidate not seen before at level
//! `ℓ+1` gets `cnt = P.cnt + count(CandP − P)` and is kept when
//! `cnt / card >= s_r`. The loop stops at the first empty level.
//!
//! Four optimizations can be toggled independently:
//! - `av`: cache counted difference triples and reuse their counts;
//! - `fc`: skip counting when the new region has no pattern pair with the
//!   opposite side (`r.dests` / `r.srcs`);
//! - `in_`: merge member neighborhoods before generating region extensions,
//!   so each extension is produced once per pattern;
//! - `ps`: bound the difference with the prefix-sum index and discard the
//!   candidate when even the bound cannot reach `s_r`.
//!
//! All flag combinations return the same patterns.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fraction::Fraction;
use crate::ingest::{extract_atomic_patterns, AtomicPatternSet, TripsTable};
use crate::model::{
    extensions, Constraints, Extension, MiningParams, NeighborScan, OdtPattern, OdtTriple, RegionGraph,
    SizeBounds, TimeDomain,
};
use crate::psindex::PrefixSumIndex;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct OptimizationFlags {
    pub av: bool,
    pub fc: bool,
    pub in_: bool,
    pub ps: bool,
}

impl OptimizationFlags {
    pub const BASELINE: Self = Self::new(false, false, false, false);
    pub const AV: Self = Self::new(true, false, false, false);
    pub const AVFC: Self = Self::new(true, true, false, false);
    pub const AVFCIN: Self = Self::new(true, true, true, false);
    pub const OPT: Self = Self::new(true, true, true, true);

    pub const NAMED: [(&'static str, Self); 5] = [
        ("baseline", Self::BASELINE),
        ("av", Self::AV),
        ("avfc", Self::AVFC),
        ("avfcin", Self::AVFCIN),
        ("opt", Self::OPT),
    ];

    pub const fn new(av: bool, fc: bool, in_: bool, ps: bool) -> Self {
        Self { av, fc, in_, ps }
    }

    /// All sixteen on/off combinations.
    pub fn all_subsets() -> impl Iterator<Item = Self> {
        (0u8..16).map(|m| Self::new(m & 1 != 0, m & 2 != 0, m & 4 != 0, m & 8 != 0))
    }

    pub fn name(&self) -> Option<&'static str> {
        Self::NAMED.iter().find(|(_, f)| f == self).map(|(n, _)| *n)
    }

    pub(crate) fn scan(&self) -> NeighborScan {
        if self.in_ {
            NeighborScan::Merged
        } else {
            NeighborScan::PerMember
        }
    }
}

impl fmt::Display for OptimizationFlags {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(n) = self.name() {
            return f.write_str(n);
        }
        let mut parts = Vec::new();
        for (on, tag) in [(self.av, "av"), (self.fc, "fc"), (self.in_, "in"), (self.ps, "ps")] {
            if on {
                parts.push(tag);
            }
        }
        if parts.is_empty() {
            f.write_str("baseline")
        } else {
            f.write_str(&parts.join("+"))
        }
    }
}

impl FromStr for OptimizationFlags {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.to_ascii_lowercase();
        Self::NAMED
            .iter()
            .find(|(n, _)| *n == s)
            .map(|(_, f)| *f)
            .ok_or_else(|| Error::InvalidParam(format!("unknown optimization set `{s}`")))
    }
}

/// Execution knobs that do not change results.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Worker threads; 0 or 1 runs on the calling thread.
    pub threads: usize,
    /// Time the counting phase separately from generation.
    pub instrument: bool,
    pub deadline: Option<Instant>,
    /// Count the difference triple even when FC or PS skipped it and record
    /// any prune that turns out to be wrong.
    pub audit_prunes: bool,
    /// Abort once the estimated live bytes of the search exceed this.
    pub memory_limit: Option<usize>,
}

impl RunOptions {
    pub fn single_threaded() -> Self {
        Self::default()
    }

    pub fn with_timeout(mut self, limit: Duration) -> Self {
        self.deadline = Some(Instant::now() + limit);
        self
    }

    pub fn with_memory_limit(mut self, bytes: usize) -> Self {
        self.memory_limit = Some(bytes);
        self
    }
}

/// Counters and timings for one run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CostBreakdown {
    pub total_time: Duration,
    pub candidate_generation_time: Duration,
    pub support_counting_time: Duration,
    /// Extensions produced, duplicates included.
    pub candidates_generated: u64,
    /// Extensions rejected as already considered at their level.
    pub duplicate_candidates: u64,
    /// Distinct candidates whose count was settled.
    pub candidates_evaluated: u64,
    /// Difference counts answered from the AV cache.
    pub pruned_av: u64,
    pub pruned_fc: u64,
    pub pruned_ps: u64,
    /// Difference triples counted atom by atom.
    pub exact_counts: u64,
    pub atoms_probed: u64,
    /// Rank mining: candidates skipped by the per-dimension gain bound.
    pub pruned_lemma1: u64,
    /// Rank mining: frontier patterns skipped as a whole.
    pub pruned_lemma2: u64,
    /// Prunes contradicted by an audit count (always 0 for a sound engine).
    pub prune_violations: u64,
    /// Indexed by level; entries 0..3 are zero.
    pub patterns_per_level: Vec<u64>,
    pub peak_memory_estimate: usize,
}

impl CostBreakdown {
    pub fn total_patterns(&self) -> u64 {
        self.patterns_per_level.iter().sum()
    }

    pub(crate) fn absorb(&mut self, o: &CostBreakdown) {
        self.candidates_generated += o.candidates_generated;
        self.duplicate_candidates += o.duplicate_candidates;
        self.candidates_evaluated += o.candidates_evaluated;
        self.pruned_av += o.pruned_av;
        self.pruned_fc += o.pruned_fc;
        self.pruned_ps += o.pruned_ps;
        self.exact_counts += o.exact_counts;
        self.atoms_probed += o.atoms_probed;
        self.prune_violations += o.prune_violations;
        self.pruned_lemma1 += o.pruned_lemma1;
        self.pruned_lemma2 += o.pruned_lemma2;
        self.support_counting_time += o.support_counting_time;
    }
}

/// Patterns of one run, sorted by `(level, canonical triple)`.
#[derive(Debug, Clone)]
pub struct MiningRun {
    pub patterns: Vec<OdtPattern>,
    pub stats: CostBreakdown,
}

impl MiningRun {
    pub fn max_level(&self) -> usize {
        self.patterns.last().map_or(0, OdtPattern::level)
    }

    pub fn level(&self, level: usize) -> impl Iterator<Item = &OdtPattern> {
        self.patterns.iter().filter(move |p| p.level() == level)
    }

    /// `(triple, cnt)` pairs, the comparison key between runs.
    pub fn keyed(&self) -> Vec<(OdtTriple, u64)> {
        self.patterns.iter().map(|p| (p.triple.clone(), p.cnt)).collect()
    }
}

/// Shared read-only inputs of a mining run.
#[derive(Debug)]
pub struct MiningContext<'g> {
    graph: &'g RegionGraph,
    time_domain: TimeDomain,
    aps: AtomicPatternSet,
    index: OnceLock<PrefixSumIndex>,
}

impl<'g> MiningContext<'g> {
    /// Selects the atomic patterns of `table` with threshold `s_a`.
    pub fn new<F: Fraction>(graph: &'g RegionGraph, table: &TripsTable, s_a: F) -> Result<Self> {
        if table.region_count() != graph.len() {
            return Err(Error::InvalidParam(format!(
                "trips table built for {} regions, graph has {}",
                table.region_count(),
                graph.len()
            )));
        }
        let aps = extract_atomic_patterns(table, s_a)?;
        Ok(Self::from_atomic(graph, table.time_domain(), aps))
    }

    pub fn from_atomic(graph: &'g RegionGraph, time_domain: TimeDomain, aps: AtomicPatternSet) -> Self {
        Self {
            graph,
            time_domain,
            aps,
            index: OnceLock::new(),
        }
    }

    pub fn graph(&self) -> &'g RegionGraph {
        self.graph
    }

    pub fn time_domain(&self) -> TimeDomain {
        self.time_domain
    }

    pub fn atomic(&self) -> &AtomicPatternSet {
        &self.aps
    }

    /// The prefix-sum index, built on first use.
    pub fn index(&self) -> &PrefixSumIndex {
        self.index
            .get_or_init(|| PrefixSumIndex::build(&self.aps, self.graph.len(), self.time_domain.slot_count()))
    }

    /// Level-3 patterns (cnt 1 each), optionally restricted to a domain.
    pub fn atomic_patterns(&self, constraints: Option<&Constraints>) -> Vec<OdtPattern> {
        self.aps
            .iter()
            .filter(|&(o, d, t)| constraints.is_none_or(|c| c.admits_atom(o, d, t)))
            .map(|(o, d, t)| OdtPattern::new(OdtTriple::atomic(o, d, t), 1))
            .collect()
    }
}

/// Number of atomic patterns among the members of `t`; every member is
/// probed.
pub fn count_exact(t: &OdtTriple, aps: &AtomicPatternSet) -> u64 {
    let mut cnt = 0;
    for &o in t.origin.iter() {
        for &d in t.dest.iter() {
            for s in t.time.iter() {
                cnt += u64::from(aps.contains(o, d, s));
            }
        }
    }
    cnt
}

/// Whether the fast check proves the difference for `ext` holds no atomic
/// pattern. Time extensions are never decided here.
pub(crate) fn fast_zero(p: &OdtTriple, ext: Extension, aps: &AtomicPatternSet) -> bool {
    match ext {
        Extension::Origin(r) => !p.dest.iter().any(|&d| aps.has_pair(r, d)),
        Extension::Dest(r) => !p.origin.iter().any(|&o| aps.has_pair(o, r)),
        Extension::Time(_) => false,
    }
}

/// Which extensions the search may take.
#[derive(Debug, Clone)]
pub(crate) struct SearchSpace {
    bounds: SizeBounds,
    origin_ok: Option<Vec<bool>>,
    dest_ok: Option<Vec<bool>>,
    slots: Option<crate::model::SlotRange>,
    max_level: Option<usize>,
}

impl SearchSpace {
    pub(crate) fn new(
        n: usize,
        bounds: Option<SizeBounds>,
        constraints: Option<&Constraints>,
        max_level: Option<usize>,
    ) -> Self {
        let mask = |set: &crate::model::RegionSet| {
            let mut m = vec![false; n];
            for r in set.iter() {
                m[r.index()] = true;
            }
            m
        };
        Self {
            bounds: bounds.unwrap_or(SizeBounds::UNBOUNDED),
            origin_ok: constraints.map(|c| mask(&c.origins)),
            dest_ok: constraints.map(|c| mask(&c.dests)),
            slots: constraints.map(|c| c.time),
            max_level,
        }
    }

    #[inline]
    pub(crate) fn permits(&self, p: &OdtTriple, ext: Extension) -> bool {
        match ext {
            Extension::Origin(r) => {
                p.origin.len() < self.bounds.origin && self.origin_ok.as_ref().is_none_or(|m| m[r.index()])
            }
            Extension::Dest(r) => {
                p.dest.len() < self.bounds.dest && self.dest_ok.as_ref().is_none_or(|m| m[r.index()])
            }
            Extension::Time(t) => {
                (p.time.len() as usize) < self.bounds.time && self.slots.is_none_or(|s| s.contains(t))
            }
        }
    }

    pub(crate) fn allows_level(&self, level: usize) -> bool {
        self.max_level.is_none_or(|m| level <= m)
    }
}

/// Difference-count cache, one table per difference level.
#[derive(Debug, Default)]
pub(crate) struct DiffCache {
    by_level: Vec<HashMap<OdtTriple, u64>>,
    entries: usize,
    bytes: usize,
}

impl DiffCache {
    pub(crate) fn get(&self, t: &OdtTriple) -> Option<u64> {
        self.by_level.get(t.level())?.get(t).copied()
    }

    pub(crate) fn insert(&mut self, t: OdtTriple, cnt: u64) {
        let lvl = t.level();
        if self.by_level.len() <= lvl {
            self.by_level.resize_with(lvl + 1, HashMap::new);
        }
        let bytes = triple_bytes(&t);
        if self.by_level[lvl].insert(t, cnt).is_none() {
            self.entries += 1;
            self.bytes += bytes;
        }
    }

    fn merge(&mut self, other: DiffCache) {
        for level in other.by_level {
            for (t, c) in level {
                self.insert(t, c);
            }
        }
    }

    pub(crate) fn memory_bytes(&self) -> usize {
        self.bytes
    }
}

/// Rough heap + inline footprint of a triple held in a hash table.
pub(crate) fn triple_bytes(t: &OdtTriple) -> usize {
    std::mem::size_of::<OdtTriple>()
        + std::mem::size_of::<u64>() * 2
        + (t.origin.len() + t.dest.len()) * std::mem::size_of::<crate::model::RegionId>()
}

/// `card` of `p.extend(ext)` without building it.
pub(crate) fn extended_card(p: &OdtTriple, ext: Extension) -> u64 {
    let (o, d, t) = (p.origin.len() as u64, p.dest.len() as u64, p.time.len() as u64);
    match ext {
        Extension::Origin(_) => (o + 1) * d * t,
        Extension::Dest(_) => o * (d + 1) * t,
        Extension::Time(_) => o * d * (t + 1),
    }
}

/// Outcome of the allocation-free checks on one candidate.
pub(crate) enum Quick {
    /// FC proved the difference empty; the candidate's `cnt` is known.
    Known(u64),
    /// The prefix-sum bound already fails the ratio test.
    Rejected,
    Unknown,
}

/// FC and PS checks for `p.extend(ext)`. Both only read `p`, so they run
/// before the candidate is materialized or deduplicated.
#[allow(clippy::too_many_arguments)]
pub(crate) fn quick_check<F: Fraction>(
    ctx: &MiningContext<'_>,
    p: &OdtPattern,
    ext: Extension,
    cand_card: u64,
    s_r: Option<F>,
    flags: OptimizationFlags,
    audit: bool,
    stats: &mut CostBreakdown,
) -> Quick {
    let aps = ctx.atomic();
    if flags.fc && fast_zero(&p.triple, ext, aps) {
        stats.pruned_fc += 1;
        if audit && count_exact(&p.triple.gained_by(ext), aps) != 0 {
            stats.prune_violations += 1;
        }
        return Quick::Known(p.cnt);
    }
    if let (true, Some(s_r)) = (flags.ps, s_r) {
        let bound = ctx.index().gain_upper_bound(&p.triple, ext);
        if !s_r.admits(p.cnt + bound, cand_card) {
            stats.pruned_ps += 1;
            if audit {
                let c = count_exact(&p.triple.gained_by(ext), aps);
                if c > bound || s_r.admits(p.cnt + c, cand_card) {
                    stats.prune_violations += 1;
                }
            }
            return Quick::Rejected;
        }
    }
    Quick::Unknown
}

/// `cnt` of `p.extend(ext)` from the AV cache or by counting the difference.
pub(crate) fn count_candidate(
    ctx: &MiningContext<'_>,
    p: &OdtPattern,
    ext: Extension,
    flags: OptimizationFlags,
    shared: Option<&DiffCache>,
    local: &mut DiffCache,
    stats: &mut CostBreakdown,
) -> u64 {
    let diff = p.triple.gained_by(ext);
    if flags.av {
        if let Some(c) = local.get(&diff).or_else(|| shared.and_then(|s| s.get(&diff))) {
            stats.pruned_av += 1;
            return p.cnt + c;
        }
    }
    let c = count_exact(&diff, ctx.atomic());
    stats.exact_counts += 1;
    stats.atoms_probed += diff.card();
    if flags.av {
        local.insert(diff, c);
    }
    p.cnt + c
}

/// Output of expanding a slice of the frontier.
struct Expansion {
    considered: HashSet<OdtTriple>,
    patterns: Vec<OdtPattern>,
    cache: DiffCache,
    stats: CostBreakdown,
}

#[allow(clippy::too_many_arguments)]
fn expand_chunk<F: Fraction>(
    ctx: &MiningContext<'_>,
    frontier: &[OdtPattern],
    s_r: F,
    space: &SearchSpace,
    flags: OptimizationFlags,
    shared: &DiffCache,
    resident: usize,
    opts: &RunOptions,
) -> Result<Expansion, Error> {
    let mut out = Expansion {
        considered: HashSet::new(),
        patterns: Vec::new(),
        cache: DiffCache::default(),
        stats: CostBreakdown::default(),
    };
    let (g, td) = (ctx.graph(), ctx.time_domain());
    let mut exts = Vec::new();
    let mut local = 0;
    for (i, p) in frontier.iter().enumerate() {
        if i % 64 == 0 {
            if opts.deadline.is_some_and(|d| Instant::now() >= d) {
                return Err(Error::Timeout { levels_done: 0 });
            }
            let live = resident + local + out.cache.memory_bytes();
            if opts.memory_limit.is_some_and(|m| live > m) {
                return Err(Error::MemoryLimit { bytes: live, levels_done: 0 });
            }
        }
        exts.clear();
        extensions(&p.triple, g, &td, flags.scan(), &mut exts);
        for &ext in &exts {
            if !space.permits(&p.triple, ext) {
                continue;
            }
            out.stats.candidates_generated += 1;
            let card = extended_card(&p.triple, ext);
            let started = opts.instrument.then(Instant::now);
            // a candidate discarded here is not a pattern whichever parent
            // produced it, so it never needs a dedup entry
            let known = match quick_check(ctx, p, ext, card, Some(s_r), flags, opts.audit_prunes, &mut out.stats) {
                Quick::Rejected => None,
                Quick::Known(cnt) if !s_r.admits(cnt, card) => None,
                Quick::Known(cnt) => Some(Some(cnt)),
                Quick::Unknown => Some(None),
            };
            if let Some(t0) = started {
                out.stats.support_counting_time += t0.elapsed();
            }
            let Some(known) = known else {
                continue;
            };
            let cand = p.triple.extend(ext);
            if out.considered.contains(&cand) {
                out.stats.duplicate_candidates += 1;
                continue;
            }
            out.stats.candidates_evaluated += 1;
            let started = opts.instrument.then(Instant::now);
            let cnt = known
                .unwrap_or_else(|| count_candidate(ctx, p, ext, flags, Some(shared), &mut out.cache, &mut out.stats));
            if let Some(t0) = started {
                out.stats.support_counting_time += t0.elapsed();
            }
            let bytes = triple_bytes(&cand);
            if s_r.admits(cnt, card) {
                local += bytes;
                out.patterns.push(OdtPattern::new(cand.clone(), cnt));
            }
            local += bytes;
            out.considered.insert(cand);
        }
    }
    Ok(out)
}

/// Level-wise expansion from `seeds` (level-3 patterns) within `space`.
pub(crate) fn run_levelwise<F: Fraction>(
    ctx: &MiningContext<'_>,
    seeds: Vec<OdtPattern>,
    s_r: F,
    space: &SearchSpace,
    flags: OptimizationFlags,
    opts: &RunOptions,
) -> Result<MiningRun> {
    let started = Instant::now();
    let pool = if opts.threads > 1 {
        Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(opts.threads)
                .build()
                .map_err(|e| Error::InvalidParam(format!("thread pool: {e}")))?,
        )
    } else {
        None
    };
    if flags.ps {
        ctx.index();
    }

    let mut stats = CostBreakdown::default();
    let mut frontier = seeds;
    frontier.sort_by(|a, b| a.triple.cmp(&b.triple));
    let mut levels: Vec<Vec<OdtPattern>> = Vec::new();
    let mut stored_bytes = 0;
    let mut cache = DiffCache::default();
    let base_bytes = ctx.atomic().len() * 24 + if flags.ps { ctx.index().memory_bytes() } else { 0 };
    let mut level = 3;

    while !frontier.is_empty() {
        if stats.patterns_per_level.len() <= level {
            stats.patterns_per_level.resize(level + 1, 0);
        }
        stats.patterns_per_level[level] = frontier.len() as u64;
        let frontier_bytes: usize = frontier.iter().map(|p| triple_bytes(&p.triple)).sum();

        if !space.allows_level(level + 1) {
            levels.push(frontier);
            break;
        }
        let done = level - 2;
        let timeout = |e| match e {
            Error::Timeout { .. } => Error::Timeout { levels_done: done },
            Error::MemoryLimit { bytes, .. } => Error::MemoryLimit {
                bytes,
                levels_done: done,
            },
            e => e,
        };
        let resident = base_bytes + stored_bytes + frontier_bytes + cache.memory_bytes();

        let (mut next, considered_bytes) = match &pool {
            None => {
                let e = expand_chunk(ctx, &frontier, s_r, space, flags, &cache, resident, opts).map_err(timeout)?;
                stats.absorb(&e.stats);
                let bytes: usize = e.considered.iter().map(triple_bytes).sum();
                cache.merge(e.cache);
                (e.patterns, bytes)
            }
            Some(pool) => {
                let chunk = frontier.len().div_ceil(opts.threads * 4).max(1);
                let parts: Vec<Result<Expansion>> = pool.install(|| {
                    frontier
                        .par_chunks(chunk)
                        .map(|c| expand_chunk(ctx, c, s_r, space, flags, &cache, resident, opts))
                        .collect()
                });
                let mut seen: HashSet<OdtTriple> = HashSet::new();
                let mut merged = Vec::new();
                let mut bytes = 0;
                for part in parts {
                    let e = part.map_err(timeout)?;
                    stats.absorb(&e.stats);
                    bytes += e.considered.iter().map(triple_bytes).sum::<usize>();
                    cache.merge(e.cache);
                    for p in e.patterns {
                        if seen.insert(p.triple.clone()) {
                            merged.push(p);
                        }
                    }
                }
                (merged, bytes)
            }
        };
        let next_bytes: usize = next.iter().map(|p| triple_bytes(&p.triple)).sum();
        let live = base_bytes + frontier_bytes + considered_bytes + next_bytes + cache.memory_bytes();
        stats.peak_memory_estimate = stats.peak_memory_estimate.max(live);
        if opts.memory_limit.is_some_and(|m| live > m) {
            return Err(Error::MemoryLimit {
                bytes: live,
                levels_done: done,
            });
        }
        stored_bytes += frontier_bytes;

        next.sort_by(|a, b| a.triple.cmp(&b.triple));
        next.shrink_to_fit();
        levels.push(std::mem::replace(&mut frontier, next));
        level += 1;
    }

    stats.total_time = started.elapsed();
    if !opts.instrument {
        stats.support_counting_time = Duration::ZERO;
    }
    stats.candidate_generation_time = stats.total_time.saturating_sub(stats.support_counting_time);
    if stats.patterns_per_level.len() < 4 {
        stats.patterns_per_level.resize(4, 0);
    }
    let mut patterns = Vec::with_capacity(levels.iter().map(Vec::len).sum());
    for level in levels {
        patterns.extend(level);
    }
    Ok(MiningRun { patterns, stats })
}

/// All ODT patterns for `params.s_r` (bounds and constraints are handled in
/// [`crate::variants`]).
pub fn mine_all<F: Fraction>(
    ctx: &MiningContext<'_>,
    params: &MiningParams<F>,
    flags: OptimizationFlags,
    opts: &RunOptions,
) -> Result<MiningRun> {
    params.validate(ctx.graph(), &ctx.time_domain())?;
    if params.bounds.is_some() || params.constraints.is_some() || params.k.is_some() {
        return Err(Error::InvalidParam(
            "bounds, constraints and top-k belong to the variant miners".into(),
        ));
    }
    let space = SearchSpace::new(ctx.graph().len(), None, None, params.maxl);
    run_levelwise(ctx, ctx.atomic_patterns(None), params.s_r, &space, flags, opts)
}
