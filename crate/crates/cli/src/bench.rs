use std::collections::HashMap;
use std::fs::File;
use std::io;
use std::time::Duration;

use anyhow::{bail, Result};
use odt_core::{Error, MiningContext};
use serde::Serialize;

use crate::alloc;
use crate::args::{Algo, BenchArgs};
use crate::run::{constraints, load_instance, Job};

#[derive(Debug, Serialize)]
struct Row {
    algo: &'static str,
    strategy: String,
    s_a: f64,
    s_r: String,
    bounds: String,
    k: String,
    maxl: String,
    sizes: String,
    samples: String,
    status: &'static str,
    time_s: f64,
    patterns: usize,
    candidates_generated: u64,
    candidates_evaluated: u64,
    exact_counts: u64,
    pruned_av: u64,
    pruned_fc: u64,
    pruned_ps: u64,
    pruned_lemma1: u64,
    pruned_lemma2: u64,
    memory_mb: f64,
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn triple(v: Option<(usize, usize, usize)>) -> String {
    v.map(|(a, b, c)| format!("{a}x{b}x{c}")).unwrap_or_default()
}

/// Every job of the sweep, in output order.
fn jobs(a: &BenchArgs, template: &Job) -> Result<Vec<Job>> {
    let mut out = Vec::new();
    for &algo in &a.algos {
        for &s_a in &a.sa {
            let base = Job {
                algo,
                s_a,
                ..template.clone()
            };
            match algo {
                Algo::Rank => {
                    for &k in &a.k {
                        for &strategy in &a.rank_strategy {
                            out.push(Job {
                                k: Some(k),
                                maxl: Some(a.maxl),
                                rank_strategy: strategy,
                                ..base.clone()
                            });
                        }
                    }
                }
                Algo::Approx | Algo::Wapprox => {
                    if a.sizes.is_empty() {
                        bail!("{} needs at least one --sizes", algo.name());
                    }
                    for &s_r in &a.sr {
                        for &sizes in &a.sizes {
                            for &m in &a.samples {
                                out.push(Job {
                                    s_r: Some(s_r),
                                    sizes: Some(sizes),
                                    samples: Some(m),
                                    ..base.clone()
                                });
                            }
                        }
                    }
                }
                Algo::Bounded => {
                    if a.bounds.is_empty() {
                        bail!("bounded needs at least one --bounds");
                    }
                    for &s_r in &a.sr {
                        for &b in &a.bounds {
                            out.push(Job {
                                s_r: Some(s_r),
                                bounds: Some(b),
                                ..base.clone()
                            });
                        }
                    }
                }
                Algo::Constrained => {
                    if base.constraints.is_none() {
                        bail!("constrained needs --origins, --dests or --timerange");
                    }
                    for &s_r in &a.sr {
                        out.push(Job {
                            s_r: Some(s_r),
                            ..base.clone()
                        });
                    }
                }
                _ => {
                    for &s_r in &a.sr {
                        out.push(Job {
                            s_r: Some(s_r),
                            ..base.clone()
                        });
                    }
                }
            }
        }
    }
    for j in &mut out {
        if !matches!(j.algo, Algo::Bounded | Algo::Constrained) {
            j.constraints = None;
        }
        j.validate()?;
    }
    Ok(out)
}

pub fn bench(a: &BenchArgs) -> Result<u8> {
    let (g, table) = load_instance(&a.instance)?;
    let td = table.time_domain();
    let template = Job {
        algo: Algo::Opt,
        s_a: 0.5,
        s_r: None,
        bounds: None,
        constraints: constraints(a.origins.as_deref(), a.dests.as_deref(), a.timerange, &g, &td)?,
        rescope_sa: false,
        k: None,
        maxl: None,
        rank_strategy: odt_core::variants::RankStrategy::OptRank,
        sizes: None,
        samples: None,
        seed: a.instance.seed,
        threads: a.threads,
        timeout: Some(Duration::from_secs(a.timeout)),
        instrument: false,
    };
    let jobs = jobs(a, &template)?;

    let sink: Box<dyn io::Write> = match &a.out {
        Some(p) => Box::new(File::create(p)?),
        None => Box::new(io::stdout().lock()),
    };
    let mut wtr = csv::Writer::from_writer(sink);
    let mut contexts: HashMap<u64, MiningContext<'_>> = HashMap::new();
    for job in &jobs {
        let ctx = match contexts.entry(job.s_a.to_bits()) {
            std::collections::hash_map::Entry::Occupied(e) => e.into_mut(),
            std::collections::hash_map::Entry::Vacant(e) => e.insert(MiningContext::new(&g, &table, job.s_a)?),
        };
        alloc::reset_peak();
        let result = job.run(ctx);
        let memory_mb = alloc::peak_bytes() as f64 / (1 << 20) as f64;
        let mut row = Row {
            algo: job.algo.name(),
            strategy: if job.algo == Algo::Rank {
                job.rank_strategy.to_string()
            } else {
                String::new()
            },
            s_a: job.s_a,
            s_r: opt(job.s_r),
            bounds: triple(job.bounds),
            k: opt(job.k),
            maxl: opt(job.maxl),
            sizes: triple(job.sizes),
            samples: opt(job.samples),
            status: "ok",
            time_s: 0.0,
            patterns: 0,
            candidates_generated: 0,
            candidates_evaluated: 0,
            exact_counts: 0,
            pruned_av: 0,
            pruned_fc: 0,
            pruned_ps: 0,
            pruned_lemma1: 0,
            pruned_lemma2: 0,
            memory_mb,
        };
        match result {
            Ok(out) => {
                row.time_s = out.elapsed.as_secs_f64();
                row.patterns = out.patterns.len();
                if let Some(s) = &out.stats {
                    row.candidates_generated = s.candidates_generated;
                    row.candidates_evaluated = s.candidates_evaluated;
                    row.exact_counts = s.exact_counts;
                    row.pruned_av = s.pruned_av;
                    row.pruned_fc = s.pruned_fc;
                    row.pruned_ps = s.pruned_ps;
                    row.pruned_lemma1 = s.pruned_lemma1;
                    row.pruned_lemma2 = s.pruned_lemma2;
                }
            }
            Err(Error::Timeout { .. }) => {
                row.status = "timeout";
                row.time_s = a.timeout as f64;
            }
            Err(e) => return Err(e.into()),
        }
        log::info!("{} s_a={} s_r={} -> {} ({:.3}s)", row.algo, row.s_a, row.s_r, row.status, row.time_s);
        wtr.serialize(&row)?;
        wtr.flush()?;
    }
    Ok(0)
}
