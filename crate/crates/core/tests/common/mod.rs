#![allow(dead_code)]

use odt_core::synth::{generate, GraphKind, SynthSpec};
use odt_core::{frac, AtomicPatternSet, Exact, OdtTriple, RegionGraph, TripsTable};
use std::path::PathBuf;

pub struct Instance {
    pub name: String,
    pub graph: RegionGraph,
    pub table: TripsTable,
    pub s_a: Exact,
    pub s_r: Exact,
}

const GRAPHS: [GraphKind; 8] = [
    GraphKind::Grid { w: 2, h: 2 },
    GraphKind::Path { n: 4 },
    GraphKind::Grid { w: 2, h: 3 },
    GraphKind::Path { n: 6 },
    GraphKind::Grid { w: 3, h: 3 },
    GraphKind::Path { n: 8 },
    GraphKind::Grid { w: 3, h: 4 },
    GraphKind::Path { n: 10 },
];
const SLOTS: [u32; 3] = [4, 6, 8];
const DENSITIES: [f64; 3] = [0.2, 0.5, 1.0];
const S_A: [(u32, u32); 3] = [(1, 10), (3, 10), (1, 2)];
const S_R: [(u32, u32); 3] = [(2, 5), (1, 2), (4, 5)];

/// The small seeded instances every oracle comparison runs on.
pub fn small_instances() -> Vec<Instance> {
    (0..54usize)
        .map(|i| {
            let graph = GRAPHS[i % GRAPHS.len()];
            let slots = SLOTS[i % 3];
            let density = DENSITIES[(i / 3) % 3];
            let (an, ad) = S_A[(i / 9) % 3];
            let (rn, rd) = S_R[(i + i / 27) % 3];
            let spec = SynthSpec::new(graph, slots, density, 1000 + i as u64);
            let (graph_built, table) = generate(&spec).unwrap();
            Instance {
                name: format!("#{i} {graph:?} slots={slots} density={density} s_a={an}/{ad} s_r={rn}/{rd}"),
                graph: graph_built,
                table,
                s_a: frac(an, ad),
                s_r: frac(rn, rd),
            }
        })
        .collect()
}

/// Atomic patterns inside `t`, counted one member at a time.
pub fn recount(t: &OdtTriple, aps: &AtomicPatternSet) -> u64 {
    let mut n = 0;
    for &o in t.origin.as_slice() {
        for &d in t.dest.as_slice() {
            for s in t.time.iter() {
                n += aps.contains(o, d, s) as u64;
            }
        }
    }
    n
}

/// `cnt / card >= num / den` in integers.
pub fn ratio_at_least(cnt: u64, card: u64, num: u64, den: u64) -> bool {
    cnt * den >= num * card
}

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

pub fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v[v.len() / 2]
}
