//! Reading the edge-list and trips files, aggregating trips into atomic
//! triples, and selecting the atomic patterns.

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use log::warn;

use crate::error::{Error, Result};
use crate::fraction::Fraction;
use crate::model::{GraphBuilder, RegionGraph, RegionId, Slot, TimeDomain};

/// One aggregated `(o, d, t)` row with its summed flow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AggregatedTriple {
    pub o: RegionId,
    pub d: RegionId,
    pub t: Slot,
    pub support: u64,
}

/// Aggregated trips table: one row per distinct `(o, d, t)`, sorted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TripsTable {
    rows: Vec<AggregatedTriple>,
    time_domain: TimeDomain,
    region_count: usize,
    /// Raw input rows, including dropped ones.
    pub total_raw_trips: u64,
    pub dropped_self_trips: u64,
    pub dropped_self_flow: u64,
}

impl TripsTable {
    /// Aggregates raw `(o, d, t, flow)` records. Records with `o == d` are
    /// dropped and counted.
    pub fn aggregate<I>(records: I, time_domain: TimeDomain, region_count: usize) -> Self
    where
        I: IntoIterator<Item = (RegionId, RegionId, Slot, u64)>,
    {
        let mut acc: BTreeMap<(RegionId, RegionId, Slot), u64> = BTreeMap::new();
        let mut total = 0;
        let (mut dropped, mut dropped_flow) = (0, 0);
        for (o, d, t, flow) in records {
            total += 1;
            if o == d {
                dropped += 1;
                dropped_flow += flow;
                continue;
            }
            *acc.entry((o, d, t)).or_insert(0) += flow;
        }
        if dropped > 0 {
            warn!("dropped {dropped} trips with identical origin and destination ({dropped_flow} flow)");
        }
        let rows = acc
            .into_iter()
            .map(|((o, d, t), support)| AggregatedTriple { o, d, t, support })
            .collect();
        Self {
            rows,
            time_domain,
            region_count,
            total_raw_trips: total,
            dropped_self_trips: dropped,
            dropped_self_flow: dropped_flow,
        }
    }

    pub fn rows(&self) -> &[AggregatedTriple] {
        &self.rows
    }

    pub fn time_domain(&self) -> TimeDomain {
        self.time_domain
    }

    pub fn region_count(&self) -> usize {
        self.region_count
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn total_support(&self) -> u64 {
        self.rows.iter().map(|r| r.support).sum()
    }

    /// Rows with non-zero support.
    pub fn nonzero(&self) -> impl Iterator<Item = &AggregatedTriple> {
        self.rows.iter().filter(|r| r.support > 0)
    }
}

/// The atomic patterns: non-zero triples whose support reaches the rank
/// cutoff, plus the per-region `dests`/`srcs` sets.
#[derive(Debug, Clone)]
pub struct AtomicPatternSet {
    members: HashSet<u64>,
    sorted: Vec<(RegionId, RegionId, Slot)>,
    threshold_support: u64,
    dests_of: Vec<Vec<RegionId>>,
    srcs_of: Vec<Vec<RegionId>>,
    has_pair: Vec<bool>,
    region_count: usize,
    slot_count: u32,
}

impl AtomicPatternSet {
    /// Builds the set from explicit members.
    pub fn from_members<I>(members: I, region_count: usize, slot_count: u32, threshold_support: u64) -> Self
    where
        I: IntoIterator<Item = (RegionId, RegionId, Slot)>,
    {
        let mut sorted: Vec<_> = members.into_iter().collect();
        sorted.sort_unstable();
        sorted.dedup();
        let n = region_count;
        let mut has_pair = vec![false; n * n];
        let mut keys = HashSet::with_capacity(sorted.len());
        for &(o, d, t) in &sorted {
            assert!(o.index() < n && d.index() < n && t < slot_count, "atom out of range");
            has_pair[o.index() * n + d.index()] = true;
            keys.insert(pack(n, slot_count, o, d, t));
        }
        let mut dests_of = vec![Vec::new(); n];
        let mut srcs_of = vec![Vec::new(); n];
        for o in 0..n {
            for d in 0..n {
                if has_pair[o * n + d] {
                    dests_of[o].push(RegionId(d as u32));
                    srcs_of[d].push(RegionId(o as u32));
                }
            }
        }
        Self {
            members: keys,
            sorted,
            threshold_support,
            dests_of,
            srcs_of,
            has_pair,
            region_count,
            slot_count,
        }
    }

    #[inline]
    pub fn contains(&self, o: RegionId, d: RegionId, t: Slot) -> bool {
        o.index() < self.region_count
            && d.index() < self.region_count
            && t < self.slot_count
            && self.members.contains(&pack(self.region_count, self.slot_count, o, d, t))
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (RegionId, RegionId, Slot)> + '_ {
        self.sorted.iter().copied()
    }

    pub fn threshold_support(&self) -> u64 {
        self.threshold_support
    }

    /// `r.dests`: regions `r'` with some pattern `(r, r', t)`.
    pub fn dests_of(&self, r: RegionId) -> &[RegionId] {
        &self.dests_of[r.index()]
    }

    /// `r.srcs`: regions `r'` with some pattern `(r', r, t)`.
    pub fn srcs_of(&self, r: RegionId) -> &[RegionId] {
        &self.srcs_of[r.index()]
    }

    /// Whether some slot makes `(o, d, ·)` a pattern.
    #[inline]
    pub fn has_pair(&self, o: RegionId, d: RegionId) -> bool {
        self.has_pair[o.index() * self.region_count + d.index()]
    }

    pub fn region_count(&self) -> usize {
        self.region_count
    }

    pub fn slot_count(&self) -> u32 {
        self.slot_count
    }

    /// Subset of members satisfying `keep`.
    pub fn filtered(&self, keep: impl Fn(RegionId, RegionId, Slot) -> bool) -> Self {
        Self::from_members(
            self.iter().filter(|&(o, d, t)| keep(o, d, t)),
            self.region_count,
            self.slot_count,
            self.threshold_support,
        )
    }
}

#[inline]
fn pack(n: usize, slots: u32, o: RegionId, d: RegionId, t: Slot) -> u64 {
    ((o.0 as u64 * n as u64) + d.0 as u64) * slots as u64 + t as u64
}

/// Selects the atomic patterns: with `n` non-zero rows, the cutoff is the
/// support of the `⌈s_a·n⌉`-th row in decreasing order, and every row at or
/// above it is a member (ties included).
pub fn extract_atomic_patterns<F: Fraction>(table: &TripsTable, s_a: F) -> Result<AtomicPatternSet> {
    extract_atomic_patterns_where(table, s_a, |_, _, _| true)
}

/// [`extract_atomic_patterns`] restricted to rows satisfying `keep`; both the
/// ranking and the membership only see those rows.
pub fn extract_atomic_patterns_where<F: Fraction>(
    table: &TripsTable,
    s_a: F,
    keep: impl Fn(RegionId, RegionId, Slot) -> bool,
) -> Result<AtomicPatternSet> {
    if table.is_empty() {
        return Err(Error::EmptyTable);
    }
    if !(s_a > F::zero() && s_a.in_unit_interval()) {
        return Err(Error::InvalidParam(format!("s_a must be in (0,1], got {s_a}")));
    }
    let td = table.time_domain();
    let rows: Vec<&AggregatedTriple> = table.nonzero().filter(|r| keep(r.o, r.d, r.t)).collect();
    if rows.is_empty() {
        return Ok(AtomicPatternSet::from_members([], table.region_count(), td.slot_count(), 0));
    }
    let mut supports: Vec<u64> = rows.iter().map(|r| r.support).collect();
    supports.sort_unstable_by(|a, b| b.cmp(a));
    let rank = s_a.ceil_mul(rows.len() as u64).clamp(1, rows.len() as u64);
    let threshold = supports[rank as usize - 1];
    let members = rows
        .iter()
        .filter(|r| r.support >= threshold)
        .map(|r| (r.o, r.d, r.t));
    Ok(AtomicPatternSet::from_members(
        members,
        table.region_count(),
        td.slot_count(),
        threshold,
    ))
}

/// Reads an edge list: one `a b` pair per line, `#` comments, blank lines
/// ignored. A line with a single name declares an isolated region.
pub fn load_graph(path: impl AsRef<Path>) -> Result<RegionGraph> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_graph(BufReader::new(file), path)
}

pub fn parse_graph<R: BufRead>(reader: R, origin: &Path) -> Result<RegionGraph> {
    let mut b = GraphBuilder::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|source| Error::Io {
            path: origin.to_path_buf(),
            source,
        })?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        match fields.as_slice() {
            [name] => {
                b.add_node(name);
            }
            [a, c] => {
                if a == c {
                    warn!("{}:{}: self-loop `{a}` ignored", origin.display(), i + 1);
                }
                b.add_edge(a, c);
            }
            _ => {
                return Err(Error::Parse {
                    path: origin.to_path_buf(),
                    line: i + 1,
                    msg: format!("expected two region names, found {} fields", fields.len()),
                })
            }
        }
    }
    if b.duplicate_edges() > 0 {
        warn!("{}: {} duplicate edges ignored", origin.display(), b.duplicate_edges());
    }
    let g = b.finalize();
    let comps = g.component_count();
    if comps > 1 {
        warn!("{}: region graph has {comps} connected components", origin.display());
    }
    Ok(g)
}

/// Optional ingestion filters.
#[derive(Debug, Clone, Default)]
pub struct TripsOptions {
    /// Keep only rows whose `period` column equals this label.
    pub period: Option<String>,
}

/// Reads a trips CSV (`origin,dest,timeslot[,flow]` or `origin,dest,time[,flow]`)
/// and aggregates it.
pub fn load_trips(
    path: impl AsRef<Path>,
    g: &RegionGraph,
    td: TimeDomain,
    opts: &TripsOptions,
) -> Result<TripsTable> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_trips(file, path, g, td, opts)
}

pub fn read_trips<R: Read>(
    reader: R,
    origin: &Path,
    g: &RegionGraph,
    td: TimeDomain,
    opts: &TripsOptions,
) -> Result<TripsTable> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
    let parse_err = |line: usize, msg: String| Error::Parse {
        path: origin.to_path_buf(),
        line,
        msg,
    };

    let (Some(o_col), Some(d_col)) = (col("origin"), col("dest")) else {
        return Err(parse_err(1, "header must name `origin` and `dest` columns".into()));
    };
    let time_col = match (col("timeslot"), col("time")) {
        (Some(c), None) => TimeColumn::Slot(c),
        (None, Some(c)) => TimeColumn::Clock(c),
        (Some(_), Some(_)) => {
            return Err(parse_err(1, "`timeslot` and `time` columns are mutually exclusive".into()))
        }
        (None, None) => return Err(parse_err(1, "missing `timeslot` or `time` column".into())),
    };
    let flow_col = col("flow");
    let period_col = col("period");
    if opts.period.is_some() && period_col.is_none() {
        return Err(parse_err(1, "period filter requested but no `period` column".into()));
    }

    let mut records = Vec::new();
    let mut filtered_out = 0u64;
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let field = |c: usize| rec.get(c).unwrap_or("");
        if let (Some(want), Some(c)) = (&opts.period, period_col) {
            if field(c) != want {
                filtered_out += 1;
                continue;
            }
        }
        let o = g
            .id_of(field(o_col))
            .ok_or_else(|| parse_err(line, format!("unknown region `{}`", field(o_col))))?;
        let d = g
            .id_of(field(d_col))
            .ok_or_else(|| parse_err(line, format!("unknown region `{}`", field(d_col))))?;
        let t = match time_col {
            TimeColumn::Slot(c) => {
                let t: Slot = field(c)
                    .parse()
                    .map_err(|_| parse_err(line, format!("bad timeslot `{}`", field(c))))?;
                if t >= td.slot_count() {
                    return Err(parse_err(
                        line,
                        format!("timeslot {t} outside [0,{})", td.slot_count()),
                    ));
                }
                t
            }
            TimeColumn::Clock(c) => {
                let minutes = parse_clock(field(c))
                    .ok_or_else(|| parse_err(line, format!("malformed time `{}`", field(c))))?;
                td.slot_of_minutes(minutes).ok_or_else(|| {
                    parse_err(line, format!("time `{}` falls outside the slot axis", field(c)))
                })?
            }
        };
        let flow = match flow_col {
            Some(c) if !field(c).is_empty() => field(c)
                .parse::<u64>()
                .map_err(|_| parse_err(line, format!("bad flow `{}`", field(c))))?,
            _ => 1,
        };
        records.push((o, d, t, flow));
    }
    if filtered_out > 0 {
        log::info!("period filter skipped {filtered_out} rows");
    }
    Ok(TripsTable::aggregate(records, td, g.len()))
}

#[derive(Clone, Copy)]
enum TimeColumn {
    Slot(usize),
    Clock(usize),
}

/// `H:MM` or `HH:MM[:SS]` to minutes since midnight.
pub fn parse_clock(s: &str) -> Option<u32> {
    let mut parts = s.trim().split(':');
    let h: u32 = parts.next()?.parse().ok()?;
    let m_str = parts.next()?;
    if m_str.len() != 2 {
        return None;
    }
    let m: u32 = m_str.parse().ok()?;
    if let Some(sec) = parts.next() {
        let sec: u32 = sec.parse().ok()?;
        if sec >= 60 {
            return None;
        }
    }
    if parts.next().is_some() || h >= 24 || m >= 60 {
        return None;
    }
    Some(h * 60 + m)
}

/// Writes a graph in the edge-list format [`parse_graph`] reads. Every region
/// is declared first, in id order, so parsing the output assigns the same ids.
pub fn write_graph<W: std::io::Write>(g: &RegionGraph, mut w: W) -> std::io::Result<()> {
    for r in g.regions() {
        writeln!(w, "{}", g.label(r))?;
    }
    for r in g.regions() {
        for &u in g.neighbors(r) {
            if r < u {
                writeln!(w, "{} {}", g.label(r), g.label(u))?;
            }
        }
    }
    Ok(())
}

/// Writes an aggregated table as `origin,dest,timeslot,flow`.
pub fn write_trips<W: std::io::Write>(table: &TripsTable, g: &RegionGraph, w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["origin", "dest", "timeslot", "flow"])?;
    for r in table.rows() {
        wtr.write_record([
            g.label(r.o),
            g.label(r.d),
            &r.t.to_string(),
            &r.support.to_string(),
        ])?;
    }
    wtr.flush().map_err(|e| Error::Csv(e.into()))?;
    Ok(())
}
