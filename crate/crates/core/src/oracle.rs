//! Brute-force reference miner for small instances.
//!
//! Every `(O, D, T)` with connected, disjoint `O` and `D` is counted
//! directly, so results do not depend on any candidate generation. Regions
//! and slots are bitmasks, which caps instances at 12 regions and 64 slots.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::fraction::Fraction;
use crate::ingest::{extract_atomic_patterns, AtomicPatternSet, TripsTable};
use crate::model::{MiningParams, OdtPattern, OdtTriple, RegionGraph, RegionId, RegionSet, SlotRange, TimeDomain};

pub const MAX_REGIONS: usize = 12;
pub const MAX_SLOTS: u32 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleConfig {
    /// Largest origin or destination set enumerated.
    pub max_region_size: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            max_region_size: MAX_REGIONS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleMode {
    /// Ratio test plus reachability from atomic patterns through chains of
    /// minimal generalizations that are themselves patterns.
    Reachable,
    /// Ratio test alone.
    RatioOnly,
}

fn guard(g: &RegionGraph, slots: u32) -> Result<()> {
    if g.len() > MAX_REGIONS || slots > MAX_SLOTS {
        return Err(Error::TooLarge(format!(
            "oracle handles at most {MAX_REGIONS} regions and {MAX_SLOTS} slots, got {} and {slots}",
            g.len()
        )));
    }
    Ok(())
}

fn neighbor_masks(g: &RegionGraph) -> Vec<u16> {
    g.regions()
        .map(|r| g.neighbors(r).iter().fold(0u16, |m, n| m | 1 << n.0))
        .collect()
}

fn is_connected(mask: u16, nbrs: &[u16]) -> bool {
    if mask == 0 {
        return false;
    }
    let mut reached = mask & mask.wrapping_neg();
    loop {
        let mut grown = reached;
        let mut rest = reached;
        while rest != 0 {
            let v = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            grown |= nbrs[v] & mask;
        }
        if grown == reached {
            return reached == mask;
        }
        reached = grown;
    }
}

fn mask_to_set(mask: u16) -> RegionSet {
    (0..16u32).filter(|b| mask >> b & 1 == 1).map(RegionId).collect()
}

fn connected_masks(g: &RegionGraph, max_size: usize) -> Vec<u16> {
    let nbrs = neighbor_masks(g);
    (1u32..1 << g.len())
        .map(|m| m as u16)
        .filter(|m| m.count_ones() as usize <= max_size && is_connected(*m, &nbrs))
        .collect()
}

/// Every connected region set with at most `max_size` members, in canonical
/// order.
pub fn enumerate_all_connected_subsets(g: &RegionGraph, max_size: usize) -> Result<Vec<RegionSet>> {
    guard(g, 0)?;
    let mut out: Vec<RegionSet> = connected_masks(g, max_size).into_iter().map(mask_to_set).collect();
    out.sort();
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct Key {
    o: u16,
    d: u16,
    start: u8,
    end: u8,
}

impl Key {
    fn level(&self) -> usize {
        (self.o.count_ones() + self.d.count_ones()) as usize + (self.end - self.start + 1) as usize
    }

    fn to_triple(self) -> OdtTriple {
        OdtTriple::new(
            mask_to_set(self.o),
            mask_to_set(self.d),
            SlotRange::new(self.start as u32, self.end as u32),
        )
        .expect("oracle keys are valid triples")
    }

    /// Minimal specializations that are still valid triples.
    fn specializations(self, connected: &[bool]) -> impl Iterator<Item = Key> + '_ {
        let drop = |m: u16| {
            let mut out = Vec::new();
            if m.count_ones() > 1 {
                let mut rest = m;
                while rest != 0 {
                    let bit = rest & rest.wrapping_neg();
                    rest &= rest - 1;
                    if connected[(m & !bit) as usize] {
                        out.push(m & !bit);
                    }
                }
            }
            out
        };
        let origins = drop(self.o).into_iter().map(move |o| Key { o, ..self });
        let dests = drop(self.d).into_iter().map(move |d| Key { d, ..self });
        let times = (self.end > self.start)
            .then(|| {
                [
                    Key {
                        start: self.start + 1,
                        ..self
                    },
                    Key {
                        end: self.end - 1,
                        ..self
                    },
                ]
            })
            .into_iter()
            .flatten();
        origins.chain(dests).chain(times)
    }
}

/// All patterns of an instance by exhaustive enumeration, sorted by
/// `(level, canonical triple)`.
pub fn oracle_patterns_from_atomic<F: Fraction>(
    g: &RegionGraph,
    td: &TimeDomain,
    aps: &AtomicPatternSet,
    s_r: F,
    config: OracleConfig,
    mode: OracleMode,
) -> Result<Vec<OdtPattern>> {
    let m = td.slot_count();
    guard(g, m)?;
    let n = g.len();
    // slot bitmask per (o, d)
    let mut cell = vec![0u64; n * n];
    for (o, d, t) in aps.iter() {
        cell[o.index() * n + d.index()] |= 1 << t;
    }
    let masks = connected_masks(g, config.max_region_size);
    let nbrs = neighbor_masks(g);
    let connected: Vec<bool> = (0u32..1 << n).map(|x| is_connected(x as u16, &nbrs)).collect();

    let mut passing: HashMap<Key, u64> = HashMap::new();
    let mut pair: Vec<u64> = Vec::new();
    for &o in &masks {
        for &d in &masks {
            if o & d != 0 {
                continue;
            }
            // slot masks of every member pair, reused across windows
            pair.clear();
            for oi in (0..n).filter(|i| o >> i & 1 == 1) {
                for di in (0..n).filter(|i| d >> i & 1 == 1) {
                    let c = cell[oi * n + di];
                    if c != 0 {
                        pair.push(c);
                    }
                }
            }
            let width = (o.count_ones() * d.count_ones()) as u64;
            for start in 0..m {
                for end in start..m {
                    let window = (u64::MAX >> (63 - end)) & (u64::MAX << start);
                    let cnt: u64 = pair.iter().map(|c| (c & window).count_ones() as u64).sum();
                    let card = width * (end - start + 1) as u64;
                    if s_r.admits(cnt, card) {
                        passing.insert(
                            Key {
                                o,
                                d,
                                start: start as u8,
                                end: end as u8,
                            },
                            cnt,
                        );
                    }
                }
            }
        }
    }

    let kept: Vec<(Key, u64)> = match mode {
        OracleMode::RatioOnly => passing.into_iter().collect(),
        OracleMode::Reachable => {
            let mut by_level: Vec<Vec<Key>> = Vec::new();
            for k in passing.keys() {
                let l = k.level();
                if by_level.len() <= l {
                    by_level.resize_with(l + 1, Vec::new);
                }
                by_level[l].push(*k);
            }
            let mut reached: HashMap<Key, u64> = HashMap::new();
            for (l, keys) in by_level.iter().enumerate() {
                for &k in keys {
                    let ok = if l == 3 {
                        passing[&k] == 1
                    } else {
                        k.specializations(&connected).any(|s| reached.contains_key(&s))
                    };
                    if ok {
                        reached.insert(k, passing[&k]);
                    }
                }
            }
            reached.into_iter().collect()
        }
    };
    let mut out: Vec<OdtPattern> = kept.into_iter().map(|(k, c)| OdtPattern::new(k.to_triple(), c)).collect();
    out.sort_by(|a, b| a.level().cmp(&b.level()).then_with(|| a.triple.cmp(&b.triple)));
    Ok(out)
}

/// [`oracle_patterns_from_atomic`] after selecting atomic patterns with
/// `params.s_a`. Bounds and constraints in `params` filter the output.
pub fn oracle_patterns<F: Fraction>(
    g: &RegionGraph,
    table: &TripsTable,
    params: &MiningParams<F>,
    mode: OracleMode,
) -> Result<Vec<OdtPattern>> {
    let td = table.time_domain();
    params.validate(g, &td)?;
    let aps = extract_atomic_patterns(table, params.s_a)?;
    let all = oracle_patterns_from_atomic(g, &td, &aps, params.s_r, OracleConfig::default(), mode)?;
    Ok(all
        .into_iter()
        .filter(|p| params.bounds.is_none_or(|b| b.admits(&p.triple)))
        .filter(|p| params.constraints.as_ref().is_none_or(|c| c.admits(&p.triple)))
        .collect())
}
