use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

use anyhow::{bail, Context, Result};
use odt_core::approx::{mine_approx, mine_weighted, FixedSizes};
use odt_core::exact::mine_all;
use odt_core::ingest::{load_graph, load_trips, TripsOptions};
use odt_core::synth::{generate, FlowDist, GraphKind, SynthSpec};
use odt_core::variants::{mine_bounded, mine_constrained, mine_ranked, rescoped_context, RankStrategy};
use odt_core::{
    Constraints, CostBreakdown, MiningContext, OdtPattern, OptimizationFlags, Params, RegionGraph, RegionSet,
    RunOptions, SizeBounds, SlotRange, TimeDomain, TripsTable,
};

use crate::args::{Algo, InstanceArgs, MiningArgs};

pub fn parse_graph_kind(s: &str) -> Result<GraphKind> {
    let parts: Vec<&str> = s.split(':').collect();
    let kind = match parts[..] {
        ["grid", dims] => {
            let (w, h) = dims.split_once('x').context("grid needs `WxH`")?;
            GraphKind::Grid {
                w: w.parse()?,
                h: h.parse()?,
            }
        }
        ["path", n] => GraphKind::Path { n: n.parse()? },
        ["random", n, p] => GraphKind::RandomEdges {
            n: n.parse()?,
            p: p.parse()?,
        },
        _ => bail!("unknown graph kind `{s}` (expected grid:WxH, path:N or random:N:P)"),
    };
    Ok(kind)
}

pub fn parse_flows(s: &str) -> Result<FlowDist> {
    let parts: Vec<&str> = s.split(':').collect();
    Ok(match parts[..] {
        ["zipf", e, max] => FlowDist::Zipf {
            s: e.parse()?,
            max: max.parse()?,
        },
        ["uniform", lo, hi] => FlowDist::Uniform {
            lo: lo.parse()?,
            hi: hi.parse()?,
        },
        _ => bail!("unknown flow distribution `{s}` (expected zipf:S:MAX or uniform:LO:HI)"),
    })
}

pub fn load_instance(a: &InstanceArgs) -> Result<(RegionGraph, TripsTable)> {
    if let Some(kind) = &a.synth {
        let spec = SynthSpec::new(parse_graph_kind(kind)?, a.slots.unwrap_or(48), a.density, a.seed);
        return Ok(generate(&spec)?);
    }
    let (Some(graph), Some(trips)) = (&a.graph, &a.trips) else {
        bail!("give --graph and --trips, or --synth");
    };
    let g = load_graph(graph)?;
    let td = match a.slots {
        Some(n) => TimeDomain::slots(n)?,
        None => TimeDomain::daily(a.slot_width)?,
    };
    let opts = TripsOptions {
        period: a.period.clone(),
    };
    let table = load_trips(trips, &g, td, &opts)?;
    log::info!(
        "loaded {} regions, {} aggregated triples over {} slots",
        g.len(),
        table.len(),
        td.slot_count()
    );
    Ok((g, table))
}

fn read_regions(path: &Path, g: &RegionGraph) -> Result<RegionSet> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let ids = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| g.resolve(l))
        .collect::<odt_core::Result<Vec<_>>>()?;
    Ok(RegionSet::new(ids))
}

/// The domain given by `--origins`, `--dests` and `--timerange`, with the
/// missing parts spanning the whole instance.
pub fn constraints(
    origins: Option<&Path>,
    dests: Option<&Path>,
    timerange: Option<(u32, u32)>,
    g: &RegionGraph,
    td: &TimeDomain,
) -> Result<Option<Constraints>> {
    if origins.is_none() && dests.is_none() && timerange.is_none() {
        return Ok(None);
    }
    let everything = || g.regions().collect::<RegionSet>();
    Ok(Some(Constraints {
        origins: origins.map(|p| read_regions(p, g)).transpose()?.unwrap_or_else(everything),
        dests: dests.map(|p| read_regions(p, g)).transpose()?.unwrap_or_else(everything),
        time: timerange.map_or(td.full_range(), |(a, b)| SlotRange::new(a, b)),
    }))
}

/// One fully specified mining job.
#[derive(Debug, Clone)]
pub struct Job {
    pub algo: Algo,
    pub s_a: f64,
    pub s_r: Option<f64>,
    pub bounds: Option<(usize, usize, usize)>,
    pub constraints: Option<Constraints>,
    pub rescope_sa: bool,
    pub k: Option<usize>,
    pub maxl: Option<usize>,
    pub rank_strategy: RankStrategy,
    pub sizes: Option<(usize, usize, usize)>,
    pub samples: Option<usize>,
    pub seed: u64,
    pub threads: usize,
    pub timeout: Option<Duration>,
    pub instrument: bool,
}

impl Job {
    pub fn from_args(m: &MiningArgs, seed: u64, g: &RegionGraph, td: &TimeDomain) -> Result<Self> {
        let job = Self {
            algo: m.algo,
            s_a: m.sa,
            s_r: m.sr,
            bounds: m.bounds,
            constraints: constraints(m.origins.as_deref(), m.dests.as_deref(), m.timerange, g, td)?,
            rescope_sa: m.rescope_sa,
            k: m.top_k,
            maxl: m.maxl,
            rank_strategy: m.rank_strategy,
            sizes: m.sizes,
            samples: m.samples,
            seed,
            threads: m.threads,
            timeout: m.timeout.map(Duration::from_secs),
            instrument: m.instrument,
        };
        job.validate()?;
        Ok(job)
    }

    /// Flag combinations that do not fit the algorithm.
    pub fn validate(&self) -> Result<()> {
        let algo = self.algo.name();
        match self.algo {
            Algo::Rank => {
                if self.s_r.is_some() {
                    bail!("--sr does not apply to rank mining");
                }
                if self.k.is_none() || self.maxl.is_none() {
                    bail!("rank mining needs --top-k and --maxl");
                }
            }
            _ if self.s_r.is_none() => bail!("{algo} needs --sr"),
            _ if self.k.is_some() => bail!("--top-k only applies to --algo rank"),
            _ => {}
        }
        if self.algo == Algo::Bounded && self.bounds.is_none() {
            bail!("bounded mining needs --bounds");
        }
        if self.algo == Algo::Constrained && self.constraints.is_none() {
            bail!("constrained mining needs --origins, --dests or --timerange");
        }
        if self.rescope_sa && self.algo != Algo::Constrained {
            bail!("--rescope-sa only applies to --algo constrained");
        }
        if matches!(self.algo, Algo::Approx | Algo::Wapprox) {
            if self.sizes.is_none() || self.samples.is_none() {
                bail!("{algo} needs --sizes and --samples");
            }
        } else if self.sizes.is_some() || self.samples.is_some() {
            bail!("--sizes and --samples only apply to approx and wapprox");
        }
        if self.bounds.is_some() && !matches!(self.algo, Algo::Bounded | Algo::Constrained) {
            bail!("--bounds applies to bounded and constrained mining");
        }
        if self.constraints.is_some() && !matches!(self.algo, Algo::Bounded | Algo::Constrained) {
            bail!("a domain applies to bounded and constrained mining");
        }
        Ok(())
    }

    pub fn params(&self) -> Params {
        let mut p = Params::new(self.s_a, self.s_r.unwrap_or(0.0));
        if let Some((o, d, t)) = self.bounds {
            p = p.with_bounds(SizeBounds::new(o, d, t));
        }
        if let Some(c) = &self.constraints {
            p = p.with_constraints(c.clone());
        }
        if let Some(l) = self.maxl {
            p = p.with_maxl(l);
        }
        if let Some(k) = self.k {
            p.k = Some(k);
        }
        p
    }

    pub fn run_options(&self) -> RunOptions {
        let mut o = RunOptions {
            threads: self.threads,
            instrument: self.instrument,
            ..Default::default()
        };
        if let Some(t) = self.timeout {
            o = o.with_timeout(t);
        }
        o
    }

    pub fn flags(&self) -> OptimizationFlags {
        self.algo
            .name()
            .parse()
            .unwrap_or(OptimizationFlags::OPT)
    }

    pub fn context<'g>(&self, g: &'g RegionGraph, table: &TripsTable) -> Result<MiningContext<'g>> {
        if self.rescope_sa {
            return Ok(rescoped_context(g, table, &self.params())?);
        }
        Ok(MiningContext::new(g, table, self.s_a)?)
    }

    /// Runs the job against a prepared context.
    pub fn run(&self, ctx: &MiningContext<'_>) -> odt_core::Result<Outcome> {
        let params = self.params();
        let opts = self.run_options();
        let started = Instant::now();
        let mut out = match self.algo {
            Algo::Baseline | Algo::Av | Algo::Avfc | Algo::Avfcin | Algo::Opt => {
                Outcome::exact(mine_all(ctx, &params, self.flags(), &opts)?)
            }
            Algo::Bounded => Outcome::exact(mine_bounded(ctx, &params, self.flags(), &opts)?),
            Algo::Constrained => Outcome::exact(mine_constrained(ctx, &params, self.flags(), &opts)?),
            Algo::Rank => Outcome::exact(mine_ranked(ctx, &params, self.rank_strategy, &opts)?),
            Algo::Approx | Algo::Wapprox => {
                let (so, sd, st) = self.sizes.unwrap_or_default();
                let sizes = FixedSizes::new(so, sd, st as u32);
                let m = self.samples.unwrap_or_default();
                let s_r = params.s_r;
                if self.algo == Algo::Approx {
                    let run = mine_approx(ctx, s_r, sizes, m, self.seed, &opts)?;
                    Outcome {
                        patterns: run.patterns.into_iter().map(|s| s.pattern).collect(),
                        stats: None,
                        note: format!(
                            "draws={} rejected={} distinct={}",
                            run.accepted_draws, run.rejected_draws, run.distinct_sampled
                        ),
                        elapsed: Duration::ZERO,
                    }
                } else {
                    let run = mine_weighted(ctx, s_r, sizes, m, self.seed, &opts)?;
                    Outcome {
                        patterns: run.patterns,
                        stats: None,
                        note: format!("combinations={} verified={}", run.combinations, run.selected.len()),
                        elapsed: Duration::ZERO,
                    }
                }
            }
        };
        out.elapsed = started.elapsed();
        Ok(out)
    }
}

pub struct Outcome {
    pub patterns: Vec<OdtPattern>,
    pub stats: Option<CostBreakdown>,
    pub note: String,
    pub elapsed: Duration,
}

impl Outcome {
    fn exact(run: odt_core::MiningRun) -> Self {
        Self {
            patterns: run.patterns,
            stats: Some(run.stats),
            note: String::new(),
            elapsed: Duration::ZERO,
        }
    }

    /// Pattern count per level, indexed by level.
    pub fn per_level(&self) -> Vec<u64> {
        let max = self.patterns.iter().map(OdtPattern::level).max().unwrap_or(0);
        let mut v = vec![0; max + 1];
        for p in &self.patterns {
            v[p.level()] += 1;
        }
        v
    }

    pub fn summary(&self, algo: Algo, peak_bytes: usize) -> String {
        let per_level = self.per_level();
        let levels: Vec<String> = per_level
            .iter()
            .enumerate()
            .filter(|(_, &n)| n > 0)
            .map(|(l, n)| format!("{l}:{n}"))
            .collect();
        let mut s = format!(
            "algo={} patterns={} levels=[{}] time={:.3}s mem={:.1}MB",
            algo.name(),
            self.patterns.len(),
            levels.join(" "),
            self.elapsed.as_secs_f64(),
            peak_bytes as f64 / (1 << 20) as f64
        );
        if !self.note.is_empty() {
            s.push(' ');
            s.push_str(&self.note);
        }
        s
    }
}

pub fn instrument_report(s: &CostBreakdown) -> String {
    format!(
        "generation={:.3}s counting={:.3}s generated={} duplicates={} evaluated={} exact_counts={} \
         pruned_av={} pruned_fc={} pruned_ps={} pruned_lemma1={} pruned_lemma2={} estimate={:.1}MB",
        s.candidate_generation_time.as_secs_f64(),
        s.support_counting_time.as_secs_f64(),
        s.candidates_generated,
        s.duplicate_candidates,
        s.candidates_evaluated,
        s.exact_counts,
        s.pruned_av,
        s.pruned_fc,
        s.pruned_ps,
        s.pruned_lemma1,
        s.pruned_lemma2,
        s.peak_memory_estimate as f64 / (1 << 20) as f64
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graph_kinds() {
        assert_eq!(parse_graph_kind("grid:3x4").unwrap(), GraphKind::Grid { w: 3, h: 4 });
        assert_eq!(parse_graph_kind("path:7").unwrap(), GraphKind::Path { n: 7 });
        assert!(parse_graph_kind("ring:5").is_err());
        assert_eq!(parse_flows("uniform:1:9").unwrap(), FlowDist::Uniform { lo: 1, hi: 9 });
    }
}
