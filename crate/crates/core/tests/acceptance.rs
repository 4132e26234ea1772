//! Acceptance suite. Each test prints one `criterion N: PASS|FAIL` line.
//!
//! Run with `cargo test -p odt-core --release --test acceptance -- --nocapture`.

mod common;

use common::{fixture, median, ratio_at_least, recount, small_instances};
use odt_core::approx::{build_pools, mine_approx, mine_weighted, FixedSizes};
use odt_core::exact::{count_exact, mine_all};
use odt_core::ingest::{load_graph, load_trips, TripsOptions};
use odt_core::oracle::{oracle_patterns, OracleMode};
use odt_core::synth::{build_graph, generate, GraphKind, SynthSpec};
use odt_core::variants::{mine_bounded, mine_ranked, RankStrategy};
use odt_core::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::cmp::Reverse;
use std::collections::HashSet;
use std::time::{Duration, Instant};

fn report(n: u32, ok: bool, detail: &str) {
    println!("criterion {n}: {} ({detail})", if ok { "PASS" } else { "FAIL" });
}

fn sorted(run: &MiningRun) -> Vec<OdtPattern> {
    let mut v = run.patterns.clone();
    v.sort_by(|a, b| a.triple.cmp(&b.triple));
    v
}

fn keyed(patterns: &[OdtPattern]) -> Vec<(OdtTriple, u64)> {
    let mut v: Vec<_> = patterns.iter().map(|p| (p.triple.clone(), p.cnt)).collect();
    v.sort();
    v
}

#[test]
fn criterion_01_running_example() {
    let started = Instant::now();
    let g = load_graph(fixture("running_example/graph.txt")).unwrap();
    let td = TimeDomain::daily(30).unwrap();
    let table = load_trips(fixture("running_example/trips.csv"), &g, td, &TripsOptions::default()).unwrap();
    let id = |s: &str| g.id_of(s).unwrap();

    let merged = table
        .rows()
        .iter()
        .find(|r| r.o == id("B") && r.d == id("D") && r.t == 18)
        .map(|r| r.support);
    let mut failures = Vec::new();
    if merged != Some(3) {
        failures.push(format!("B->D slot 18 support {merged:?}"));
    }

    let want = OdtTriple::new(
        RegionSet::new(vec![id("A"), id("B")]),
        RegionSet::single(id("D")),
        SlotRange::single(18),
    )
    .unwrap();
    let params = ExactParams::new(frac(1, 2), frac(3, 5));
    let ctx = MiningContext::new(&g, &table, params.s_a).unwrap();
    for (name, flags) in OptimizationFlags::NAMED {
        let run = mine_all(&ctx, &params, flags, &RunOptions::default()).unwrap();
        match run.patterns.iter().find(|p| p.triple == want) {
            Some(p) if p.cnt == 2 && p.card() == 2 => {}
            other => failures.push(format!("{name}: {other:?}")),
        }
    }
    let elapsed = started.elapsed();
    if elapsed >= Duration::from_secs(1) {
        failures.push(format!("took {elapsed:?}"));
    }
    report(1, failures.is_empty(), &format!("{elapsed:?} {failures:?}"));
    assert!(failures.is_empty(), "{failures:?}");
}

#[test]
fn criterion_02_03_oracle_and_invariance() {
    let started = Instant::now();
    let instances = small_instances();
    let mut divergences = Vec::new();
    let mut named_mismatch = Vec::new();
    let (mut fc, mut ps) = (0, 0);
    for inst in &instances {
        let params = ExactParams::new(inst.s_a, inst.s_r);
        let ctx = MiningContext::new(&inst.graph, &inst.table, inst.s_a).unwrap();
        let want = keyed(&oracle_patterns(&inst.graph, &inst.table, &params, OracleMode::Reachable).unwrap());
        for flags in OptimizationFlags::all_subsets() {
            let run = mine_all(&ctx, &params, flags, &RunOptions::default()).unwrap();
            if keyed(&run.patterns) != want {
                divergences.push(format!("{} under {flags}", inst.name));
            }
        }
        let mut reference: Option<Vec<OdtPattern>> = None;
        for (name, flags) in OptimizationFlags::NAMED {
            let run = mine_all(&ctx, &params, flags, &RunOptions::default()).unwrap();
            fc += run.stats.pruned_fc;
            ps += run.stats.pruned_ps;
            let out = sorted(&run);
            match &reference {
                None => reference = Some(out),
                Some(r) if format!("{r:?}") != format!("{out:?}") => {
                    named_mismatch.push(format!("{} under {name}", inst.name))
                }
                Some(_) => {}
            }
        }
    }
    let elapsed = started.elapsed();
    let ok2 = instances.len() >= 50 && divergences.is_empty() && elapsed < Duration::from_secs(60);
    report(
        2,
        ok2,
        &format!("{} instances x 16 flag sets, {} divergences, {elapsed:?}", instances.len(), divergences.len()),
    );
    let ok3 = named_mismatch.is_empty() && fc > 0 && ps > 0;
    report(
        3,
        ok3,
        &format!("{} mismatches, FC prunes {fc}, PS prunes {ps}", named_mismatch.len()),
    );
    assert!(divergences.is_empty(), "{divergences:?}");
    assert!(elapsed < Duration::from_secs(60), "{elapsed:?}");
    assert!(ok3, "{named_mismatch:?}");
}

#[test]
fn criterion_04_prefix_sums() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut box_errors = 0;
    let mut bound_errors = 0;
    let mut equality_errors = 0;
    let mut cubes = Vec::new();
    for _ in 0..10 {
        let n = rng.random_range(2..=9usize);
        let m = rng.random_range(1..=12u32);
        let mut cube = vec![false; n * n * m as usize];
        let mut members = Vec::new();
        for o in 0..n {
            for d in 0..n {
                for t in 0..m {
                    if o != d && rng.random_bool(0.35) {
                        cube[(o * n + d) * m as usize + t as usize] = true;
                        members.push((RegionId(o as u32), RegionId(d as u32), t));
                    }
                }
            }
        }
        let aps = AtomicPatternSet::from_members(members, n, m, 1);
        cubes.push((n, m, cube, PrefixSumIndex::build(&aps, n, m), aps));
    }
    for i in 0..1000 {
        let (n, m, cube, index, _) = &cubes[i % 10];
        let (n, m) = (*n, *m as usize);
        let mut range = |hi: usize| {
            let a = rng.random_range(0..hi);
            let b = rng.random_range(a..hi);
            (a, b)
        };
        let (o, d, t) = (range(n), range(n), range(m));
        let mut direct = 0;
        for i in o.0..=o.1 {
            for j in d.0..=d.1 {
                for k in t.0..=t.1 {
                    direct += cube[(i * n + j) * m + k] as u32;
                }
            }
        }
        box_errors += (index.range_sum(o, d, t).unwrap() != direct) as u32;
    }
    for i in 0..1000 {
        let (n, m, _, index, aps) = &cubes[i % 10];
        let (n, m) = (*n, *m);
        let contiguous = rng.random_bool(0.5);
        let pick = |rng: &mut ChaCha8Rng, avoid: &[u32]| -> Vec<u32> {
            let free: Vec<u32> = (0..n as u32).filter(|r| !avoid.contains(r)).collect();
            if contiguous {
                let a = rng.random_range(0..free.len());
                let mut b = a;
                while b + 1 < free.len() && free[b + 1] == free[b] + 1 && rng.random_bool(0.5) {
                    b += 1;
                }
                free[a..=b].to_vec()
            } else {
                let mut v: Vec<u32> = free.iter().copied().filter(|_| rng.random_bool(0.4)).collect();
                if v.is_empty() {
                    v.push(free[0]);
                }
                v
            }
        };
        let origin = pick(&mut rng, &[n as u32 - 1]);
        let dest = pick(&mut rng, &origin);
        let lo = rng.random_range(0..m);
        let hi = rng.random_range(lo..m);
        let t = OdtTriple::new(
            RegionSet::from_indices(origin.iter().copied()),
            RegionSet::from_indices(dest.iter().copied()),
            SlotRange::new(lo, hi),
        )
        .unwrap();
        let exact = recount(&t, aps);
        let bound = index.upper_bound(&t);
        bound_errors += (bound < exact) as u32;
        let is_run = |v: &[u32]| v.windows(2).all(|w| w[1] == w[0] + 1);
        if is_run(&origin) && is_run(&dest) && bound != exact {
            equality_errors += 1;
        }
    }
    let ok = box_errors == 0 && bound_errors == 0 && equality_errors == 0;
    report(
        4,
        ok,
        &format!("box errors {box_errors}, bound violations {bound_errors}, contiguous inequalities {equality_errors}"),
    );
    assert!(ok);
}

#[test]
fn criterion_05_rank_equivalence() {
    let mut mismatches = Vec::new();
    let mut fewer = 0;
    let mut runs = 0;
    for inst in small_instances() {
        let ctx = MiningContext::new(&inst.graph, &inst.table, inst.s_a).unwrap();
        for k in [1, 3, 10] {
            let params = ExactParams::new(inst.s_a, inst.s_r).with_top_k(k, 8);
            let base = mine_ranked(&ctx, &params, RankStrategy::BaseRank, &RunOptions::default()).unwrap();
            let opt = mine_ranked(&ctx, &params, RankStrategy::OptRank, &RunOptions::default()).unwrap();
            runs += 1;
            for level in 3..=8 {
                let b: Vec<_> = base.level(level).map(|p| (p.triple.clone(), p.cnt)).collect();
                let o: Vec<_> = opt.level(level).map(|p| (p.triple.clone(), p.cnt)).collect();
                if b != o {
                    mismatches.push(format!("{} k={k} level {level}", inst.name));
                }
            }
            if opt.stats.candidates_evaluated < base.stats.candidates_evaluated {
                fewer += 1;
            }
        }
    }
    let ok = mismatches.is_empty() && fewer > 0;
    report(
        5,
        ok,
        &format!("{runs} runs, {} mismatched levels, OptRank evaluated fewer on {fewer}", mismatches.len()),
    );
    assert!(ok, "{mismatches:?}");
}

#[test]
fn criterion_06_monotone_in_s_r() {
    let mut instances = small_instances();
    let (graph, table) = generate(&SynthSpec::new(GraphKind::Grid { w: 4, h: 4 }, 12, 0.4, 66)).unwrap();
    instances.push(common::Instance {
        name: "grid 4x4".into(),
        graph,
        table,
        s_a: frac(3, 10),
        s_r: frac(1, 2),
    });
    let mut lost = Vec::new();
    for inst in &instances {
        let ctx = MiningContext::new(&inst.graph, &inst.table, inst.s_a).unwrap();
        let mut previous: Option<HashSet<OdtTriple>> = None;
        for (n, d) in [(4, 5), (1, 2), (2, 5)] {
            let params = ExactParams::new(inst.s_a, frac(n, d));
            let run = mine_all(&ctx, &params, OptimizationFlags::OPT, &RunOptions::default()).unwrap();
            let now: HashSet<OdtTriple> = run.patterns.into_iter().map(|p| p.triple).collect();
            if let Some(prev) = &previous {
                if !prev.is_subset(&now) {
                    lost.push(format!("{} at s_r={n}/{d}", inst.name));
                }
            }
            previous = Some(now);
        }
    }
    report(6, lost.is_empty(), &format!("{} instances, {} losses", instances.len(), lost.len()));
    assert!(lost.is_empty(), "{lost:?}");
}

#[test]
fn criterion_07_approx_soundness_and_determinism() {
    let (g, table) = generate(&SynthSpec::new(GraphKind::Grid { w: 6, h: 6 }, 24, 0.6, 7)).unwrap();
    let ctx = MiningContext::new(&g, &table, 0.6).unwrap();
    let aps = ctx.atomic();
    let (num, den) = (1, 4);
    let s_r = num as f64 / den as f64;
    let sizes = FixedSizes::new(2, 2, 2);
    let mut emitted = 0;
    let mut false_positives = 0;
    let mut nondeterministic = Vec::new();
    let mut check = |p: &OdtPattern| {
        let cnt = recount(&p.triple, aps);
        if cnt != p.cnt || !ratio_at_least(cnt, p.triple.card(), num, den) {
            false_positives += 1;
        }
    };
    let mut seed = 0;
    while emitted < 10_000 {
        let one = RunOptions::default();
        let four = RunOptions {
            threads: 4,
            ..Default::default()
        };
        let a = mine_approx(&ctx, s_r, sizes, 4000, seed, &one).unwrap();
        if a != mine_approx(&ctx, s_r, sizes, 4000, seed, &one).unwrap()
            || a != mine_approx(&ctx, s_r, sizes, 4000, seed, &four).unwrap()
        {
            nondeterministic.push(format!("approx seed {seed}"));
        }
        let w = mine_weighted(&ctx, s_r, sizes, 4000, seed, &one).unwrap();
        if w != mine_weighted(&ctx, s_r, sizes, 4000, seed, &one).unwrap()
            || w != mine_weighted(&ctx, s_r, sizes, 4000, seed, &four).unwrap()
        {
            nondeterministic.push(format!("weighted seed {seed}"));
        }
        for p in a.patterns.iter().map(|s| &s.pattern).chain(&w.patterns) {
            check(p);
            emitted += 1;
        }
        seed += 1;
    }
    let ok = false_positives == 0 && nondeterministic.is_empty();
    report(
        7,
        ok,
        &format!(
            "{emitted} patterns over {seed} seeds, {false_positives} false positives, {} nondeterministic",
            nondeterministic.len()
        ),
    );
    assert!(ok, "{nondeterministic:?}");
}

#[test]
fn criterion_08_weighted_top_m() {
    let cases = [
        (GraphKind::Grid { w: 4, h: 4 }, 12, FixedSizes::new(2, 2, 2)),
        (GraphKind::Path { n: 12 }, 10, FixedSizes::new(3, 2, 3)),
        (GraphKind::Grid { w: 5, h: 4 }, 16, FixedSizes::new(3, 3, 1)),
        (GraphKind::RandomEdges { n: 15, p: 0.3 }, 8, FixedSizes::new(2, 3, 2)),
    ];
    let mut failures = Vec::new();
    let mut checked = 0;
    for (i, (kind, slots, sizes)) in cases.into_iter().enumerate() {
        let (g, table) = generate(&SynthSpec::new(kind, slots, 0.4, 80 + i as u64)).unwrap();
        let ctx = MiningContext::new(&g, &table, 0.5).unwrap();
        let aps = ctx.atomic();
        let mut w_o = vec![0u128; g.len()];
        let mut w_d = vec![0u128; g.len()];
        let mut w_t = vec![0u128; slots as usize];
        for (o, d, t) in aps.iter() {
            w_o[o.index()] += 1;
            w_d[d.index()] += 1;
            w_t[t as usize] += 1;
        }
        let pools = build_pools(&g, &ctx.time_domain(), sizes, 3).unwrap();
        let mut all = Vec::new();
        for o in pools.distinct_origins() {
            for d in pools.distinct_dests() {
                if !o.is_disjoint(&d) {
                    continue;
                }
                for &t in &pools.windows {
                    let w = o.as_slice().iter().map(|r| w_o[r.index()]).sum::<u128>()
                        * d.as_slice().iter().map(|r| w_d[r.index()]).sum::<u128>()
                        * t.iter().map(|s| w_t[s as usize]).sum::<u128>();
                    all.push((Reverse(w), OdtTriple::new(o.clone(), d.clone(), t).unwrap()));
                }
            }
        }
        assert!(all.len() < 100_000, "{} combinations", all.len());
        all.sort();
        for m in [1, 17, 250] {
            let run = mine_weighted(&ctx, 0.5, sizes, m, 3, &RunOptions::default()).unwrap();
            let want: Vec<(OdtTriple, u128)> = all.iter().take(m).map(|(w, t)| (t.clone(), w.0)).collect();
            if run.selected != want {
                failures.push(format!("case {i} M={m}"));
            }
            let verified: Vec<OdtTriple> = want
                .iter()
                .filter(|(t, _)| ratio_at_least(count_exact(t, aps), t.card(), 1, 2))
                .map(|(t, _)| t.clone())
                .collect();
            let mut got: Vec<OdtTriple> = run.patterns.iter().map(|p| p.triple.clone()).collect();
            let mut verified = verified;
            got.sort();
            verified.sort();
            if got != verified {
                failures.push(format!("case {i} M={m} verified set"));
            }
            checked += 1;
        }
    }
    report(8, failures.is_empty(), &format!("{checked} runs, failures {failures:?}"));
    assert!(failures.is_empty());
}

#[test]
fn criterion_09_relative_performance() {
    let (g, table) = generate(&SynthSpec::new(GraphKind::Grid { w: 8, h: 8 }, 48, 0.3, 1)).unwrap();

    let ctx = MiningContext::new(&g, &table, 0.1).unwrap();
    let params = Params::new(0.1, 0.5);
    let time = |flags| {
        let t0 = Instant::now();
        let run = mine_all(&ctx, &params, flags, &RunOptions::default()).unwrap();
        (t0.elapsed(), run.patterns.len())
    };
    let (base, base_n) = time(OptimizationFlags::BASELINE);
    let (opt, opt_n) = time(OptimizationFlags::OPT);
    let speed_ok = opt.as_secs_f64() <= 0.6 * base.as_secs_f64() && base_n == opt_n;

    // The sizes (5,5,4) comparison uses every non-zero triple as an atomic
    // pattern, the heaviest setting the instance admits.
    let ctx = MiningContext::new(&g, &table, 1.0).unwrap();
    let sizes = FixedSizes::new(5, 5, 4);
    let t0 = Instant::now();
    let weighted = mine_weighted(&ctx, 0.5, sizes, 10_000, 1, &RunOptions::default());
    let weighted_time = t0.elapsed();

    let bounded = Params::new(1.0, 0.5).with_bounds(SizeBounds::new(5, 5, 4));
    let flags = OptimizationFlags::new(false, true, true, true);
    let opts = RunOptions::default()
        .with_timeout(Duration::from_secs(180))
        .with_memory_limit(3 << 30);
    let t0 = Instant::now();
    let exact = mine_bounded(&ctx, &bounded, flags, &opts);
    let exact_time = t0.elapsed();
    let exact_outcome = match &exact {
        Ok(run) => format!("completed with {} patterns", run.patterns.len()),
        Err(e) => e.to_string(),
    };
    let timed_out = matches!(exact, Err(Error::Timeout { .. }));
    let unfinished = timed_out || matches!(exact, Err(Error::MemoryLimit { .. }));

    let ok = speed_ok && weighted.is_ok() && timed_out;
    report(
        9,
        ok,
        &format!(
            "Baseline {base:?} vs OPT {opt:?}; weighted M=10^4 {} in {weighted_time:?}; exact run stopped at {exact_time:?}: {exact_outcome}",
            if weighted.is_ok() { "completed" } else { "failed" }
        ),
    );
    assert!(speed_ok, "Baseline {base:?} OPT {opt:?}");
    assert!(weighted.is_ok());
    assert!(unfinished, "exact bounded run finished: {exact_outcome}");
}

#[test]
fn criterion_10_linear_scaling() {
    let sizes = FixedSizes::new(3, 3, 2);
    let td = TimeDomain::slots(24).unwrap();
    let mut per_node = Vec::new();
    for n in [100usize, 200, 400] {
        let g = build_graph(GraphKind::Path { n }, &mut ChaCha8Rng::seed_from_u64(0));
        let reps = 40_000 / n;
        let samples: Vec<f64> = (0..15)
            .map(|s| {
                let t0 = Instant::now();
                for r in 0..reps {
                    std::hint::black_box(build_pools(&g, &td, sizes, (s * reps + r) as u64).unwrap());
                }
                t0.elapsed().as_secs_f64() / reps as f64
            })
            .collect();
        per_node.push(median(samples) / n as f64);
    }

    let (g, table) = generate(&SynthSpec::new(GraphKind::Grid { w: 20, h: 20 }, 48, 0.2, 10)).unwrap();
    let ctx = MiningContext::new(&g, &table, 0.5).unwrap();
    let pools: Vec<f64> = (0..5)
        .map(|s| {
            let t0 = Instant::now();
            build_pools(&g, &ctx.time_domain(), sizes, s).unwrap();
            t0.elapsed().as_secs_f64()
        })
        .collect();
    let pool_time = median(pools);
    let mut per_draw = Vec::new();
    for m in [10_000usize, 20_000, 40_000] {
        let samples: Vec<f64> = (0..5)
            .map(|s| {
                let t0 = Instant::now();
                mine_approx(&ctx, 0.3, sizes, m, s, &RunOptions::default()).unwrap();
                (t0.elapsed().as_secs_f64() - pool_time).max(0.0)
            })
            .collect();
        per_draw.push(median(samples) / m as f64);
    }

    let spread = |v: &[f64]| {
        let max = v.iter().cloned().fold(f64::MIN, f64::max);
        let min = v.iter().cloned().fold(f64::MAX, f64::min);
        max / min
    };
    let (a, b) = (spread(&per_node), spread(&per_draw));
    let ok = a <= 2.0 && b <= 2.0;
    report(
        10,
        ok,
        &format!("per-node pool cost spread {a:.2}x, per-draw verification cost spread {b:.2}x"),
    );
    assert!(ok);
}
