use std::io::Write;

use anyhow::Result;
use odt_core::{OdtPattern, RegionGraph};
use serde::{Deserialize, Serialize};

use crate::args::Format;

/// One emitted pattern. Regions are written by name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternRecord {
    pub level: usize,
    pub origin: Vec<String>,
    pub dest: Vec<String>,
    pub t_start: u32,
    pub t_end: u32,
    pub cnt: u64,
    pub card: u64,
    pub ratio: f64,
}

impl PatternRecord {
    pub fn new(p: &OdtPattern, g: &RegionGraph) -> Self {
        let names = |s: &odt_core::RegionSet| s.as_slice().iter().map(|&r| g.label(r).to_string()).collect();
        Self {
            level: p.level(),
            origin: names(&p.triple.origin),
            dest: names(&p.triple.dest),
            t_start: p.triple.time.start,
            t_end: p.triple.time.end,
            cnt: p.cnt,
            card: p.card(),
            ratio: p.ratio(),
        }
    }
}

pub fn write_patterns<W: Write>(patterns: &[OdtPattern], g: &RegionGraph, format: Format, w: W) -> Result<()> {
    match format {
        Format::Jsonl => {
            let mut w = std::io::BufWriter::new(w);
            for p in patterns {
                serde_json::to_writer(&mut w, &PatternRecord::new(p, g))?;
                w.write_all(b"\n")?;
            }
            w.flush()?;
        }
        Format::Csv => {
            let mut wtr = csv::Writer::from_writer(w);
            wtr.write_record(["level", "origin", "dest", "t_start", "t_end", "cnt", "card", "ratio"])?;
            for p in patterns {
                let r = PatternRecord::new(p, g);
                wtr.write_record([
                    r.level.to_string(),
                    r.origin.join(";"),
                    r.dest.join(";"),
                    r.t_start.to_string(),
                    r.t_end.to_string(),
                    r.cnt.to_string(),
                    r.card.to_string(),
                    r.ratio.to_string(),
                ])?;
            }
            wtr.flush()?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use odt_core::{OdtTriple, RegionSet, SlotRange};

    #[test]
    fn jsonl_round_trips() {
        let g = RegionGraph::from_edges(&[("A", "B"), ("B", "C")]);
        let id = |s| g.id_of(s).unwrap();
        let t = OdtTriple::new(
            RegionSet::new(vec![id("A"), id("B")]),
            RegionSet::single(id("C")),
            SlotRange::new(3, 4),
        )
        .unwrap();
        let p = OdtPattern::new(t, 3);
        let mut buf = Vec::new();
        write_patterns(std::slice::from_ref(&p), &g, Format::Jsonl, &mut buf).unwrap();
        let back: PatternRecord = serde_json::from_slice(buf.trim_ascii_end()).unwrap();
        assert_eq!(back, PatternRecord::new(&p, &g));
        assert_eq!((back.level, back.card, back.ratio), (5, 4, 0.75));
    }
}
