mod alloc;
mod args;
mod bench;
mod output;
mod run;

use std::fs::{self, File};
use std::io::{self, Write};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::Parser;
use odt_core::ingest::{write_graph, write_trips};
use odt_core::oracle::{oracle_patterns, OracleMode};
use odt_core::synth::{generate, SynthSpec};
use odt_core::{Error, OdtPattern};

use args::{Algo, Cli, Command, MineArgs, SynthArgs, VerifyArgs};
use run::{instrument_report, load_instance, Job};

#[global_allocator]
static ALLOC: alloc::Counting = alloc::Counting;

const EXIT_USAGE: u8 = 1;
const EXIT_MISMATCH: u8 = 2;
const EXIT_TIMEOUT: u8 = 3;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("ODT_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Synth(a) => synth(&a),
        Command::Mine(a) => mine(&a),
        Command::Verify(a) => verify(&a),
        Command::Bench(a) => bench::bench(&a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("odt: {e:#}");
            match e.downcast_ref::<Error>() {
                Some(Error::Timeout { .. }) => ExitCode::from(EXIT_TIMEOUT),
                _ => ExitCode::from(EXIT_USAGE),
            }
        }
    }
}

fn synth(a: &SynthArgs) -> Result<u8> {
    let spec =
        SynthSpec::new(run::parse_graph_kind(&a.kind)?, a.slots, a.density, a.seed).with_flows(run::parse_flows(&a.flows)?);
    let (g, table) = generate(&spec)?;
    fs::create_dir_all(&a.out_dir).with_context(|| format!("creating {}", a.out_dir.display()))?;
    let graph_path = a.out_dir.join("graph.txt");
    write_graph(&g, io::BufWriter::new(File::create(&graph_path)?))?;
    write_trips(&table, &g, io::BufWriter::new(File::create(a.out_dir.join("trips.csv"))?))?;
    eprintln!(
        "odt: wrote {} regions and {} trips rows to {} (use --slots {})",
        g.len(),
        table.len(),
        a.out_dir.display(),
        a.slots
    );
    Ok(0)
}

fn mine(a: &MineArgs) -> Result<u8> {
    let (g, table) = load_instance(&a.instance)?;
    let job = Job::from_args(&a.mining, a.instance.seed, &g, &table.time_domain())?;
    alloc::reset_peak();
    let ctx = job.context(&g, &table)?;
    let outcome = job.run(&ctx)?;
    let peak = alloc::peak_bytes();

    match &a.out {
        Some(path) => {
            let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
            output::write_patterns(&outcome.patterns, &g, a.format, f)?;
        }
        None => output::write_patterns(&outcome.patterns, &g, a.format, io::stdout().lock())?,
    }
    eprintln!("odt: {}", outcome.summary(job.algo, peak));
    if job.instrument {
        if let Some(s) = &outcome.stats {
            eprintln!("odt: {}", instrument_report(s));
        }
    }
    Ok(0)
}

fn verify(a: &VerifyArgs) -> Result<u8> {
    let (g, table) = load_instance(&a.instance)?;
    let job = Job::from_args(&a.mining, a.instance.seed, &g, &table.time_domain())?;
    if matches!(job.algo, Algo::Rank | Algo::Approx | Algo::Wapprox) || job.rescope_sa {
        bail!("verify covers the exact, bounded and constrained miners");
    }
    let mut ctx = job.context(&g, &table)?;
    if a.corrupt_atomic {
        let aps = ctx.atomic();
        let Some(dropped) = aps.iter().next() else {
            bail!("no atomic pattern to drop");
        };
        let corrupted = aps.filtered(|o, d, t| (o, d, t) != dropped);
        ctx = odt_core::MiningContext::from_atomic(&g, table.time_domain(), corrupted);
    }
    let mined = job.run(&ctx)?;
    let expected = oracle_patterns(&g, &table, &job.params(), OracleMode::Reachable)?;

    let got = keyed(&mined.patterns);
    let want = keyed(&expected);
    if got == want {
        eprintln!("odt: verify ok: {} patterns agree with the oracle", got.len());
        return Ok(0);
    }
    let first = got.iter().zip(&want).position(|(x, y)| x != y).unwrap_or(got.len().min(want.len()));
    let show = |v: &[(odt_core::OdtTriple, u64)]| {
        v.get(first)
            .map(|(t, c)| format!("{} cnt={c}", t.display(&g)))
            .unwrap_or_else(|| "nothing".into())
    };
    let mut err = io::stderr().lock();
    writeln!(
        err,
        "odt: verify mismatch: {} mined vs {} expected; first divergence at #{first}",
        got.len(),
        want.len()
    )?;
    writeln!(err, "  mined:    {}", show(&got))?;
    writeln!(err, "  expected: {}", show(&want))?;
    Ok(EXIT_MISMATCH)
}

fn keyed(patterns: &[OdtPattern]) -> Vec<(odt_core::OdtTriple, u64)> {
    let mut v: Vec<_> = patterns.iter().map(|p| (p.triple.clone(), p.cnt)).collect();
    v.sort();
    v
}
