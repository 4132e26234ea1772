//! Deterministic synthetic instances.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Zipf};

use crate::error::{Error, Result};
use crate::ingest::TripsTable;
use crate::model::{GraphBuilder, RegionGraph, RegionId, TimeDomain};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GraphKind {
    /// `w × h` 4-neighbor lattice.
    Grid { w: usize, h: usize },
    Path { n: usize },
    /// Erdős–Rényi `G(n, p)`.
    RandomEdges { n: usize, p: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FlowDist {
    /// Inclusive range.
    Uniform { lo: u64, hi: u64 },
    /// Zipf over `1..=max` with exponent `s`.
    Zipf { s: f64, max: u64 },
}

impl Default for FlowDist {
    fn default() -> Self {
        FlowDist::Zipf { s: 1.2, max: 100 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub graph: GraphKind,
    pub slots: u32,
    /// Probability that an `(o, d, t)` cell with `o != d` receives trips.
    pub density: f64,
    pub flows: FlowDist,
    pub seed: u64,
    /// Add one `o == d` trip per region, to exercise the ingestion drop path.
    pub inject_self_trips: bool,
}

impl SynthSpec {
    pub fn new(graph: GraphKind, slots: u32, density: f64, seed: u64) -> Self {
        Self {
            graph,
            slots,
            density,
            flows: FlowDist::default(),
            seed,
            inject_self_trips: false,
        }
    }

    pub fn with_flows(mut self, flows: FlowDist) -> Self {
        self.flows = flows;
        self
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParam(m.to_string()));
        match self.graph {
            GraphKind::Grid { w, h } if w == 0 || h == 0 => return bad("grid dimensions must be positive"),
            GraphKind::Path { n: 0 } => return bad("path length must be positive"),
            GraphKind::RandomEdges { n, p } if n == 0 || !(0.0..=1.0).contains(&p) => {
                return bad("random graph needs n > 0 and p in [0,1]")
            }
            _ => {}
        }
        if self.slots == 0 {
            return bad("slot count must be positive");
        }
        if !(0.0..=1.0).contains(&self.density) {
            return bad("density must be in [0,1]");
        }
        match self.flows {
            FlowDist::Uniform { lo, hi } if lo > hi => bad("uniform flow needs lo <= hi"),
            FlowDist::Zipf { s, max } if max == 0 || s <= 0.0 => bad("zipf needs max >= 1 and s > 0"),
            _ => Ok(()),
        }
    }
}

/// Builds the graph named by `kind`; region labels are `r0, r1, …` in
/// construction order before DFS renumbering.
pub fn build_graph(kind: GraphKind, rng: &mut ChaCha8Rng) -> RegionGraph {
    let mut b = GraphBuilder::new();
    let name = |i: usize| format!("r{i}");
    match kind {
        GraphKind::Grid { w, h } => {
            for i in 0..w * h {
                b.add_node(&name(i));
            }
            for y in 0..h {
                for x in 0..w {
                    let v = y * w + x;
                    if x + 1 < w {
                        b.add_edge(&name(v), &name(v + 1));
                    }
                    if y + 1 < h {
                        b.add_edge(&name(v), &name(v + w));
                    }
                }
            }
        }
        GraphKind::Path { n } => {
            b.add_node(&name(0));
            for i in 1..n {
                b.add_edge(&name(i - 1), &name(i));
            }
        }
        GraphKind::RandomEdges { n, p } => {
            for i in 0..n {
                b.add_node(&name(i));
            }
            for i in 0..n {
                for j in i + 1..n {
                    if rng.random_bool(p) {
                        b.add_edge(&name(i), &name(j));
                    }
                }
            }
        }
    }
    b.finalize()
}

/// Generates a graph and its aggregated trips table. The same spec always
/// yields the same instance.
pub fn generate(spec: &SynthSpec) -> Result<(RegionGraph, TripsTable)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let g = build_graph(spec.graph, &mut rng);
    let td = TimeDomain::slots(spec.slots)?;
    let zipf = match spec.flows {
        FlowDist::Zipf { s, max } => {
            Some(Zipf::new(max as f64, s).map_err(|e| Error::InvalidParam(format!("zipf: {e}")))?)
        }
        FlowDist::Uniform { .. } => None,
    };
    // iterate in label order so renumbering does not change the draws
    let mut by_label: Vec<RegionId> = g.regions().collect();
    by_label.sort_by_key(|&r| g.label(r)[1..].parse::<usize>().unwrap_or(usize::MAX));

    let mut records = Vec::new();
    for &o in &by_label {
        for &d in &by_label {
            if o == d {
                continue;
            }
            for t in 0..spec.slots {
                if !rng.random_bool(spec.density) {
                    continue;
                }
                let flow = match (spec.flows, &zipf) {
                    (FlowDist::Uniform { lo, hi }, _) => rng.random_range(lo..=hi),
                    (FlowDist::Zipf { .. }, Some(z)) => z.sample(&mut rng) as u64,
                    _ => unreachable!(),
                };
                records.push((o, d, t, flow));
            }
        }
    }
    if spec.inject_self_trips {
        for &r in &by_label {
            records.push((r, r, 0, 1));
        }
    }
    let table = TripsTable::aggregate(records, td, g.len());
    Ok((g, table))
}
