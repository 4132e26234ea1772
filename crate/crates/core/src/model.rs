//! Domain model: the region graph, the slot axis, ODT triples and patterns,
//! and the generalization algebra every miner shares.

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::ops::Deref;

use smallvec::{smallvec, SmallVec};

use crate::error::{Error, Result};
use crate::fraction::Fraction;

/// Dense region index, assigned by depth-first traversal when a graph is
/// finalized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RegionId(pub u32);

impl RegionId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for RegionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Atomic timeslot index.
pub type Slot = u32;

/// Collects named nodes and edges in input order; [`GraphBuilder::finalize`]
/// renumbers them.
#[derive(Debug, Default, Clone)]
pub struct GraphBuilder {
    names: Vec<String>,
    index: HashMap<String, usize>,
    adj: Vec<Vec<usize>>,
    duplicate_edges: usize,
    self_loops: usize,
}

impl GraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns the input-order index of `name`, registering it if new.
    pub fn add_node(&mut self, name: &str) -> usize {
        if let Some(&i) = self.index.get(name) {
            return i;
        }
        let i = self.names.len();
        self.names.push(name.to_string());
        self.index.insert(name.to_string(), i);
        self.adj.push(Vec::new());
        i
    }

    /// Adds an undirected edge. Returns false for a self-loop or a duplicate,
    /// which are skipped.
    pub fn add_edge(&mut self, a: &str, b: &str) -> bool {
        let (i, j) = (self.add_node(a), self.add_node(b));
        if i == j {
            self.self_loops += 1;
            return false;
        }
        if self.adj[i].contains(&j) {
            self.duplicate_edges += 1;
            return false;
        }
        self.adj[i].push(j);
        self.adj[j].push(i);
        true
    }

    pub fn duplicate_edges(&self) -> usize {
        self.duplicate_edges
    }

    pub fn self_loops(&self) -> usize {
        self.self_loops
    }

    /// Assigns dense ids in depth-first preorder. Each traversal starts from the
    /// unvisited vertex of smallest degree (ties by input order) and visits
    /// neighbors in input order.
    pub fn finalize(self) -> RegionGraph {
        let n = self.names.len();
        let mut adj = self.adj;
        for list in &mut adj {
            list.sort_unstable();
        }

        let mut order = Vec::with_capacity(n);
        let mut visited = vec![false; n];
        let mut by_degree: Vec<usize> = (0..n).collect();
        by_degree.sort_by_key(|&v| (adj[v].len(), v));

        for &root in &by_degree {
            if visited[root] {
                continue;
            }
            // explicit stack of (vertex, next neighbor cursor) gives true preorder
            let mut stack = vec![(root, 0usize)];
            visited[root] = true;
            order.push(root);
            while let Some((v, cursor)) = stack.last_mut() {
                let v = *v;
                if let Some(&u) = adj[v].get(*cursor) {
                    *cursor += 1;
                    if !visited[u] {
                        visited[u] = true;
                        order.push(u);
                        stack.push((u, 0));
                    }
                } else {
                    stack.pop();
                }
            }
        }

        let mut new_id = vec![0u32; n];
        for (id, &old) in order.iter().enumerate() {
            new_id[old] = id as u32;
        }
        let labels: Vec<String> = order.iter().map(|&old| self.names[old].clone()).collect();
        let adjacency: Vec<Vec<RegionId>> = order
            .iter()
            .map(|&old| {
                let mut nb: Vec<RegionId> = adj[old].iter().map(|&u| RegionId(new_id[u])).collect();
                nb.sort_unstable();
                nb
            })
            .collect();
        let by_label = labels
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), RegionId(i as u32)))
            .collect();
        RegionGraph {
            labels,
            adjacency,
            by_label,
        }
    }
}

/// Undirected neighborhood graph over atomic regions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegionGraph {
    labels: Vec<String>,
    adjacency: Vec<Vec<RegionId>>,
    by_label: HashMap<String, RegionId>,
}

impl RegionGraph {
    /// Builds and finalizes a graph from named edges.
    pub fn from_edges<S: AsRef<str>>(edges: &[(S, S)]) -> Self {
        let mut b = GraphBuilder::new();
        for (a, c) in edges {
            b.add_edge(a.as_ref(), c.as_ref());
        }
        b.finalize()
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn regions(&self) -> impl Iterator<Item = RegionId> + '_ {
        (0..self.len() as u32).map(RegionId)
    }

    pub fn neighbors(&self, r: RegionId) -> &[RegionId] {
        &self.adjacency[r.index()]
    }

    pub fn degree(&self, r: RegionId) -> usize {
        self.adjacency[r.index()].len()
    }

    pub fn label(&self, r: RegionId) -> &str {
        &self.labels[r.index()]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn id_of(&self, label: &str) -> Option<RegionId> {
        self.by_label.get(label).copied()
    }

    pub fn resolve(&self, label: &str) -> Result<RegionId> {
        self.id_of(label).ok_or_else(|| Error::UnknownRegion(label.to_string()))
    }

    pub fn is_adjacent(&self, a: RegionId, b: RegionId) -> bool {
        self.adjacency[a.index()].binary_search(&b).is_ok()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Whether `set` is non-empty and induces a connected subgraph.
    pub fn is_connected_subset(&self, set: &[RegionId]) -> bool {
        let Some(&first) = set.first() else {
            return false;
        };
        let mut inside = vec![false; self.len()];
        for r in set {
            inside[r.index()] = true;
        }
        let mut seen = vec![false; self.len()];
        seen[first.index()] = true;
        let mut queue = VecDeque::from([first]);
        let mut reached = 1;
        while let Some(v) = queue.pop_front() {
            for &u in self.neighbors(v) {
                if inside[u.index()] && !seen[u.index()] {
                    seen[u.index()] = true;
                    reached += 1;
                    queue.push_back(u);
                }
            }
        }
        reached == set.len()
    }

    pub fn component_count(&self) -> usize {
        let mut seen = vec![false; self.len()];
        let mut count = 0;
        for start in 0..self.len() {
            if seen[start] {
                continue;
            }
            count += 1;
            seen[start] = true;
            let mut stack = vec![RegionId(start as u32)];
            while let Some(v) = stack.pop() {
                for &u in self.neighbors(v) {
                    if !seen[u.index()] {
                        seen[u.index()] = true;
                        stack.push(u);
                    }
                }
            }
        }
        count
    }
}

/// The repeating period divided into `slot_count` atomic timeslots.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimeDomain {
    slot_count: u32,
    slot_width_minutes: u32,
}

impl TimeDomain {
    pub const MINUTES_PER_DAY: u32 = 24 * 60;

    pub fn new(slot_count: u32, slot_width_minutes: u32) -> Result<Self> {
        if slot_count == 0 || slot_width_minutes == 0 {
            return Err(Error::InvalidParam(
                "slot count and slot width must be positive".into(),
            ));
        }
        Ok(Self {
            slot_count,
            slot_width_minutes,
        })
    }

    /// A day split into `width`-minute slots.
    pub fn daily(slot_width_minutes: u32) -> Result<Self> {
        if slot_width_minutes == 0 {
            return Err(Error::InvalidParam("slot width must be positive".into()));
        }
        Self::new(
            Self::MINUTES_PER_DAY.div_ceil(slot_width_minutes),
            slot_width_minutes,
        )
    }

    /// Slot axis for pre-aggregated data where the width is irrelevant.
    pub fn slots(slot_count: u32) -> Result<Self> {
        Self::new(slot_count, 1)
    }

    pub fn slot_count(&self) -> u32 {
        self.slot_count
    }

    pub fn slot_width_minutes(&self) -> u32 {
        self.slot_width_minutes
    }

    pub fn slot_of_minutes(&self, minutes: u32) -> Option<Slot> {
        let s = minutes / self.slot_width_minutes;
        (s < self.slot_count).then_some(s)
    }

    pub fn full_range(&self) -> SlotRange {
        SlotRange::new(0, self.slot_count - 1)
    }

    pub fn contains(&self, range: SlotRange) -> bool {
        range.start <= range.end && range.end < self.slot_count
    }
}

/// Contiguous inclusive slot range `[start, end]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SlotRange {
    pub start: Slot,
    pub end: Slot,
}

impl SlotRange {
    pub const fn new(start: Slot, end: Slot) -> Self {
        Self { start, end }
    }

    pub const fn single(t: Slot) -> Self {
        Self { start: t, end: t }
    }

    pub fn len(&self) -> u32 {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, t: Slot) -> bool {
        self.start <= t && t <= self.end
    }

    pub fn contains_range(&self, other: SlotRange) -> bool {
        self.start <= other.start && other.end <= self.end
    }

    pub fn iter(&self) -> std::ops::RangeInclusive<Slot> {
        self.start..=self.end
    }
}

impl fmt::Display for SlotRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{}]", self.start, self.end)
    }
}

type RegionVec = SmallVec<[RegionId; 6]>;

/// Sorted, duplicate-free set of regions. Sets of up to six regions are
/// stored inline.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RegionSet(RegionVec);

impl RegionSet {
    pub fn new(ids: Vec<RegionId>) -> Self {
        Self::from_small(ids.into_iter().collect())
    }

    fn from_small(mut ids: RegionVec) -> Self {
        ids.sort_unstable();
        ids.dedup();
        Self(ids)
    }

    pub fn single(r: RegionId) -> Self {
        Self(smallvec![r])
    }

    pub fn from_indices<I: IntoIterator<Item = u32>>(ids: I) -> Self {
        Self::new(ids.into_iter().map(RegionId).collect())
    }

    pub fn contains(&self, r: RegionId) -> bool {
        self.0.binary_search(&r).is_ok()
    }

    pub fn is_disjoint(&self, other: &RegionSet) -> bool {
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            match self.0[i].cmp(&other.0[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => return false,
            }
        }
        true
    }

    pub fn is_subset(&self, other: &RegionSet) -> bool {
        self.0.iter().all(|&r| other.contains(r))
    }

    pub fn with(&self, r: RegionId) -> Self {
        let mut v = self.0.clone();
        if let Err(pos) = v.binary_search(&r) {
            v.insert(pos, r);
        }
        Self(v)
    }

    pub fn without(&self, r: RegionId) -> Self {
        Self(self.0.iter().copied().filter(|&x| x != r).collect())
    }

    pub fn first(&self) -> Option<RegionId> {
        self.0.first().copied()
    }

    pub fn last(&self) -> Option<RegionId> {
        self.0.last().copied()
    }

    pub fn as_slice(&self) -> &[RegionId] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<RegionId> {
        self.0.into_vec()
    }
}

impl Deref for RegionSet {
    type Target = [RegionId];

    fn deref(&self) -> &[RegionId] {
        &self.0
    }
}

impl FromIterator<RegionId> for RegionSet {
    fn from_iter<I: IntoIterator<Item = RegionId>>(iter: I) -> Self {
        Self::from_small(iter.into_iter().collect())
    }
}

/// Which component of a triple a generalization grows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Dim {
    Origin,
    Dest,
    Time,
}

impl Dim {
    pub const ALL: [Dim; 3] = [Dim::Origin, Dim::Dest, Dim::Time];
}

/// One atomic element added by a minimal generalization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Extension {
    Origin(RegionId),
    Dest(RegionId),
    Time(Slot),
}

impl Extension {
    pub fn dim(self) -> Dim {
        match self {
            Extension::Origin(_) => Dim::Origin,
            Extension::Dest(_) => Dim::Dest,
            Extension::Time(_) => Dim::Time,
        }
    }
}

/// Generalized triple `(O, D, T)`. Equality, hashing and ordering use the
/// canonical form (sorted id lists, then the slot range).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct OdtTriple {
    pub origin: RegionSet,
    pub dest: RegionSet,
    pub time: SlotRange,
}

impl OdtTriple {
    /// Checks the graph-independent invariants: non-empty components,
    /// disjoint origin and destination, `start <= end`.
    pub fn new(origin: RegionSet, dest: RegionSet, time: SlotRange) -> Result<Self> {
        if origin.is_empty() || dest.is_empty() {
            return Err(Error::InvalidTriple("empty origin or destination".into()));
        }
        if !origin.is_disjoint(&dest) {
            return Err(Error::InvalidTriple("origin and destination overlap".into()));
        }
        if time.start > time.end {
            return Err(Error::InvalidTriple(format!("empty slot range {time}")));
        }
        Ok(Self { origin, dest, time })
    }

    pub fn atomic(o: RegionId, d: RegionId, t: Slot) -> Self {
        debug_assert_ne!(o, d);
        Self {
            origin: RegionSet::single(o),
            dest: RegionSet::single(d),
            time: SlotRange::single(t),
        }
    }

    /// Full validity against a graph and slot axis (connected components,
    /// ids in range, slots in range).
    pub fn validate(&self, g: &RegionGraph, td: &TimeDomain) -> Result<()> {
        let n = g.len() as u32;
        if self.origin.iter().chain(self.dest.iter()).any(|r| r.0 >= n) {
            return Err(Error::InvalidTriple("region id out of range".into()));
        }
        if !td.contains(self.time) {
            return Err(Error::InvalidTriple(format!("slot range {} outside axis", self.time)));
        }
        if !g.is_connected_subset(&self.origin) {
            return Err(Error::InvalidTriple("origin is not connected".into()));
        }
        if !g.is_connected_subset(&self.dest) {
            return Err(Error::InvalidTriple("destination is not connected".into()));
        }
        Ok(())
    }

    pub fn card(&self) -> u64 {
        self.origin.len() as u64 * self.dest.len() as u64 * self.time.len() as u64
    }

    pub fn level(&self) -> usize {
        self.origin.len() + self.dest.len() + self.time.len() as usize
    }

    pub fn is_atomic(&self) -> bool {
        self.level() == 3
    }

    pub fn size_of(&self, dim: Dim) -> u64 {
        match dim {
            Dim::Origin => self.origin.len() as u64,
            Dim::Dest => self.dest.len() as u64,
            Dim::Time => self.time.len() as u64,
        }
    }

    /// Applies one extension. The caller guarantees validity.
    pub fn extend(&self, ext: Extension) -> Self {
        match ext {
            Extension::Origin(r) => Self {
                origin: self.origin.with(r),
                dest: self.dest.clone(),
                time: self.time,
            },
            Extension::Dest(r) => Self {
                origin: self.origin.clone(),
                dest: self.dest.with(r),
                time: self.time,
            },
            Extension::Time(t) => Self {
                origin: self.origin.clone(),
                dest: self.dest.clone(),
                time: SlotRange::new(self.time.start.min(t), self.time.end.max(t)),
            },
        }
    }

    /// The triple holding exactly the atomic triples `self.extend(ext)` gains.
    pub fn gained_by(&self, ext: Extension) -> Self {
        match ext {
            Extension::Origin(r) => Self {
                origin: RegionSet::single(r),
                dest: self.dest.clone(),
                time: self.time,
            },
            Extension::Dest(r) => Self {
                origin: self.origin.clone(),
                dest: RegionSet::single(r),
                time: self.time,
            },
            Extension::Time(t) => Self {
                origin: self.origin.clone(),
                dest: self.dest.clone(),
                time: SlotRange::single(t),
            },
        }
    }

    /// Iterates every atomic member `(o, d, t)`.
    pub fn atoms(&self) -> impl Iterator<Item = (RegionId, RegionId, Slot)> + '_ {
        self.origin.iter().flat_map(move |&o| {
            self.dest
                .iter()
                .flat_map(move |&d| self.time.iter().map(move |t| (o, d, t)))
        })
    }

    pub fn display<'a>(&'a self, g: &'a RegionGraph) -> TripleDisplay<'a> {
        TripleDisplay { triple: self, graph: g }
    }
}

pub struct TripleDisplay<'a> {
    triple: &'a OdtTriple,
    graph: &'a RegionGraph,
}

impl fmt::Display for TripleDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names = |s: &RegionSet| {
            s.iter()
                .map(|&r| self.graph.label(r))
                .collect::<Vec<_>>()
                .join("")
        };
        write!(
            f,
            "({},{},{})",
            names(&self.triple.origin),
            names(&self.triple.dest),
            self.triple.time
        )
    }
}

/// A triple together with the number of atomic patterns it contains.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct OdtPattern {
    pub triple: OdtTriple,
    pub cnt: u64,
}

impl OdtPattern {
    pub fn new(triple: OdtTriple, cnt: u64) -> Self {
        debug_assert!(cnt <= triple.card());
        Self { triple, cnt }
    }

    pub fn card(&self) -> u64 {
        self.triple.card()
    }

    pub fn level(&self) -> usize {
        self.triple.level()
    }

    pub fn ratio(&self) -> f64 {
        self.cnt as f64 / self.card() as f64
    }
}

/// How region neighbors are collected when generalizing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NeighborScan {
    /// Neighbors of each member separately; the same region can be produced
    /// more than once.
    PerMember,
    /// Union of all member neighborhoods minus `O ∪ D`, each region once.
    Merged,
}

/// Appends the extensions of `p` that keep it a valid triple. With
/// [`NeighborScan::Merged`] every extension is distinct.
pub fn extensions(
    p: &OdtTriple,
    g: &RegionGraph,
    td: &TimeDomain,
    scan: NeighborScan,
    out: &mut Vec<Extension>,
) {
    region_extensions(&p.origin, p, g, scan, Extension::Origin, out);
    region_extensions(&p.dest, p, g, scan, Extension::Dest, out);
    if p.time.start > 0 {
        out.push(Extension::Time(p.time.start - 1));
    }
    if p.time.end + 1 < td.slot_count() {
        out.push(Extension::Time(p.time.end + 1));
    }
}

fn region_extensions(
    side: &RegionSet,
    p: &OdtTriple,
    g: &RegionGraph,
    scan: NeighborScan,
    wrap: fn(RegionId) -> Extension,
    out: &mut Vec<Extension>,
) {
    let free = |u: RegionId| !p.origin.contains(u) && !p.dest.contains(u);
    match scan {
        NeighborScan::PerMember => {
            for &r in side.iter() {
                for &u in g.neighbors(r) {
                    if free(u) {
                        out.push(wrap(u));
                    }
                }
            }
        }
        NeighborScan::Merged => {
            let mut merged: Vec<RegionId> = side
                .iter()
                .flat_map(|&r| g.neighbors(r).iter().copied())
                .collect();
            merged.sort_unstable();
            merged.dedup();
            out.extend(merged.into_iter().filter(|&u| free(u)).map(wrap));
        }
    }
}

/// Every valid minimal generalization of `p`, each exactly once.
pub fn minimal_generalizations(p: &OdtTriple, g: &RegionGraph, td: &TimeDomain) -> Vec<OdtTriple> {
    let mut exts = Vec::new();
    extensions(p, g, td, NeighborScan::Merged, &mut exts);
    exts.into_iter().map(|e| p.extend(e)).collect()
}

/// Identifies the single element `cand` adds to `p`.
pub fn extension_between(cand: &OdtTriple, p: &OdtTriple) -> Result<Extension> {
    let reject = |why: &str| Err(Error::NotMinimalGeneralization(why.to_string()));
    let o_grew = cand.origin != p.origin;
    let d_grew = cand.dest != p.dest;
    let t_grew = cand.time != p.time;
    match (o_grew, d_grew, t_grew) {
        (true, false, false) => single_added(&cand.origin, &p.origin)
            .map(Extension::Origin)
            .ok_or_else(|| Error::NotMinimalGeneralization("origin differs by more than one region".into())),
        (false, true, false) => single_added(&cand.dest, &p.dest)
            .map(Extension::Dest)
            .ok_or_else(|| Error::NotMinimalGeneralization("destination differs by more than one region".into())),
        (false, false, true) => {
            let (c, q) = (cand.time, p.time);
            if c.end == q.end && q.start > 0 && c.start == q.start - 1 {
                Ok(Extension::Time(c.start))
            } else if c.start == q.start && c.end == q.end + 1 {
                Ok(Extension::Time(c.end))
            } else {
                reject("slot range is not a one-slot extension")
            }
        }
        (false, false, false) => reject("triples are equal"),
        _ => reject("more than one dimension differs"),
    }
}

fn single_added(big: &RegionSet, small: &RegionSet) -> Option<RegionId> {
    if big.len() != small.len() + 1 || !small.is_subset(big) {
        return None;
    }
    big.iter().copied().find(|&r| !small.contains(r))
}

/// `cand − p`: the newly added element in the grown dimension, the other two
/// dimensions copied from `p`.
pub fn difference(cand: &OdtTriple, p: &OdtTriple) -> Result<OdtTriple> {
    extension_between(cand, p).map(|e| p.gained_by(e))
}

/// Per-component size caps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SizeBounds {
    pub origin: usize,
    pub dest: usize,
    pub time: usize,
}

impl SizeBounds {
    pub const UNBOUNDED: SizeBounds = SizeBounds {
        origin: usize::MAX,
        dest: usize::MAX,
        time: usize::MAX,
    };

    pub fn new(origin: usize, dest: usize, time: usize) -> Self {
        Self { origin, dest, time }
    }

    pub fn admits(&self, t: &OdtTriple) -> bool {
        t.origin.len() <= self.origin && t.dest.len() <= self.dest && t.time.len() as usize <= self.time
    }
}

/// Restricted search domain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constraints {
    pub origins: RegionSet,
    pub dests: RegionSet,
    pub time: SlotRange,
}

impl Constraints {
    pub fn validate(&self, g: &RegionGraph, td: &TimeDomain) -> Result<()> {
        if !g.is_connected_subset(&self.origins) {
            return Err(Error::InvalidParam(
                "origin domain must be a non-empty connected region set".into(),
            ));
        }
        if !g.is_connected_subset(&self.dests) {
            return Err(Error::InvalidParam(
                "destination domain must be a non-empty connected region set".into(),
            ));
        }
        if !td.contains(self.time) {
            return Err(Error::InvalidParam(format!(
                "time range {} outside [0,{})",
                self.time,
                td.slot_count()
            )));
        }
        Ok(())
    }

    pub fn admits(&self, t: &OdtTriple) -> bool {
        t.origin.is_subset(&self.origins) && t.dest.is_subset(&self.dests) && self.time.contains_range(t.time)
    }

    pub fn admits_atom(&self, o: RegionId, d: RegionId, t: Slot) -> bool {
        self.origins.contains(o) && self.dests.contains(d) && self.time.contains(t)
    }
}

/// Thresholds and optional restrictions for one mining run.
#[derive(Debug, Clone, PartialEq)]
pub struct MiningParams<F: Fraction> {
    /// Fraction of non-zero atomic triples that become atomic patterns.
    pub s_a: F,
    /// Minimum share of atomic patterns inside a generalized pattern.
    pub s_r: F,
    pub bounds: Option<SizeBounds>,
    pub constraints: Option<Constraints>,
    pub k: Option<usize>,
    pub maxl: Option<usize>,
}

impl<F: Fraction> MiningParams<F> {
    pub fn new(s_a: F, s_r: F) -> Self {
        Self {
            s_a,
            s_r,
            bounds: None,
            constraints: None,
            k: None,
            maxl: None,
        }
    }

    pub fn with_bounds(mut self, bounds: SizeBounds) -> Self {
        self.bounds = Some(bounds);
        self
    }

    pub fn with_constraints(mut self, c: Constraints) -> Self {
        self.constraints = Some(c);
        self
    }

    pub fn with_top_k(mut self, k: usize, maxl: usize) -> Self {
        self.k = Some(k);
        self.maxl = Some(maxl);
        self
    }

    pub fn with_maxl(mut self, maxl: usize) -> Self {
        self.maxl = Some(maxl);
        self
    }

    pub fn validate(&self, g: &RegionGraph, td: &TimeDomain) -> Result<()> {
        if !(self.s_a > F::zero() && self.s_a.in_unit_interval()) {
            return Err(Error::InvalidParam(format!("s_a must be in (0,1], got {}", self.s_a)));
        }
        if !self.s_r.in_unit_interval() {
            return Err(Error::InvalidParam(format!("s_r must be in [0,1], got {}", self.s_r)));
        }
        if let Some(b) = self.bounds {
            if b.origin == 0 || b.dest == 0 || b.time == 0 {
                return Err(Error::InvalidParam("size bounds must be positive".into()));
            }
        }
        if let Some(c) = &self.constraints {
            c.validate(g, td)?;
        }
        if self.k == Some(0) {
            return Err(Error::InvalidParam("k must be at least 1".into()));
        }
        if matches!(self.maxl, Some(l) if l < 3) {
            return Err(Error::InvalidParam("maxl must be at least 3".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(w: usize, h: usize) -> RegionGraph {
        let mut edges = Vec::new();
        for y in 0..h {
            for x in 0..w {
                let v = format!("{}", y * w + x);
                if x + 1 < w {
                    edges.push((v.clone(), format!("{}", y * w + x + 1)));
                }
                if y + 1 < h {
                    edges.push((v.clone(), format!("{}", (y + 1) * w + x)));
                }
            }
        }
        RegionGraph::from_edges(&edges)
    }

    fn set(ids: &[u32]) -> RegionSet {
        RegionSet::from_indices(ids.iter().copied())
    }

    #[test]
    fn dfs_ids_start_at_min_degree_vertex() {
        // star center X with leaves; a pendant path X - P - Q
        let g = RegionGraph::from_edges(&[("X", "L1"), ("X", "L2"), ("X", "P"), ("P", "Q")]);
        // L1 is the first degree-1 vertex in input order
        assert_eq!(g.label(RegionId(0)), "L1");
        assert_eq!(g.label(RegionId(1)), "X");
        let labels: Vec<&str> = g.regions().map(|r| g.label(r)).collect();
        assert_eq!(labels, ["L1", "X", "L2", "P", "Q"]);
        for r in g.regions() {
            for &u in g.neighbors(r) {
                assert!(g.neighbors(u).contains(&r));
            }
        }
    }

    #[test]
    fn builder_skips_duplicates_and_self_loops() {
        let mut b = GraphBuilder::new();
        assert!(b.add_edge("A", "B"));
        assert!(!b.add_edge("B", "A"));
        assert!(!b.add_edge("A", "A"));
        assert_eq!(b.duplicate_edges(), 1);
        assert_eq!(b.self_loops(), 1);
        let g = b.finalize();
        assert_eq!(g.len(), 2);
        assert_eq!(g.neighbors(RegionId(0)), &[RegionId(1)]);
    }

    #[test]
    fn card_examples() {
        // (AB,CD,[1,3]) -> 12
        let t = OdtTriple::new(set(&[0, 1]), set(&[2, 3]), SlotRange::new(1, 3)).unwrap();
        assert_eq!(t.card(), 12);
        assert_eq!(t.level(), 7);
        assert_eq!(OdtTriple::atomic(RegionId(0), RegionId(1), 5).card(), 1);
        // (ABC,D,[4,5]): six explicit members
        let t = OdtTriple::new(set(&[0, 1, 2]), set(&[3]), SlotRange::new(4, 5)).unwrap();
        let members: Vec<_> = t.atoms().collect();
        assert_eq!(members.len(), 6);
        assert_eq!(t.card(), 6);
    }

    #[test]
    fn difference_examples() {
        let p = OdtTriple::new(set(&[0]), set(&[2, 3]), SlotRange::new(1, 2)).unwrap();
        let cand = OdtTriple::new(set(&[0, 1]), set(&[2, 3]), SlotRange::new(1, 2)).unwrap();
        let d = difference(&cand, &p).unwrap();
        assert_eq!(d, OdtTriple::new(set(&[1]), set(&[2, 3]), SlotRange::new(1, 2)).unwrap());

        let p = OdtTriple::new(set(&[0]), set(&[1]), SlotRange::new(1, 1)).unwrap();
        let cand = OdtTriple::new(set(&[0]), set(&[1]), SlotRange::new(1, 2)).unwrap();
        assert_eq!(difference(&cand, &p).unwrap().time, SlotRange::single(2));
    }

    #[test]
    fn difference_rejects_non_minimal() {
        let p = OdtTriple::new(set(&[0]), set(&[3]), SlotRange::new(1, 1)).unwrap();
        let two_dims = OdtTriple::new(set(&[0, 1]), set(&[3]), SlotRange::new(1, 2)).unwrap();
        assert!(difference(&two_dims, &p).is_err());
        let two_regions = OdtTriple::new(set(&[0, 1, 2]), set(&[3]), SlotRange::new(1, 1)).unwrap();
        assert!(difference(&two_regions, &p).is_err());
        let two_slots = OdtTriple::new(set(&[0]), set(&[3]), SlotRange::new(1, 3)).unwrap();
        assert!(difference(&two_slots, &p).is_err());
        assert!(difference(&p, &p).is_err());
    }

    #[test]
    fn no_time_extension_on_full_range() {
        let g = grid(2, 2);
        let td = TimeDomain::slots(4).unwrap();
        let p = OdtTriple::new(set(&[0]), set(&[3]), SlotRange::new(0, 3)).unwrap();
        let gens = minimal_generalizations(&p, &g, &td);
        assert!(gens.iter().all(|c| c.time == p.time));
        assert!(!gens.is_empty());
    }

    #[test]
    fn generalizations_match_brute_force_validity_filter() {
        let g = grid(3, 3);
        let td = TimeDomain::slots(6).unwrap();
        let p = OdtTriple::atomic(RegionId(0), RegionId(5), 2);
        let mut got = minimal_generalizations(&p, &g, &td);
        got.sort();

        // every single-element addition: |V| regions to O, |V| to D, 2 slots
        let mut expected = Vec::new();
        for r in g.regions() {
            for (o, d) in [(p.origin.with(r), p.dest.clone()), (p.origin.clone(), p.dest.with(r))] {
                if o.len() + d.len() != 3 {
                    continue;
                }
                if let Ok(t) = OdtTriple::new(o, d, p.time) {
                    if t.validate(&g, &td).is_ok() {
                        expected.push(t);
                    }
                }
            }
        }
        for time in [SlotRange::new(1, 2), SlotRange::new(2, 3)] {
            expected.push(OdtTriple::new(p.origin.clone(), p.dest.clone(), time).unwrap());
        }
        expected.sort();
        assert_eq!(got, expected);
    }

    #[test]
    fn per_member_scan_covers_the_same_set() {
        let g = grid(3, 3);
        let td = TimeDomain::slots(4).unwrap();
        let p = OdtTriple::new(set(&[0, 1, 3]), set(&[8]), SlotRange::new(1, 2)).unwrap();
        let mut a = Vec::new();
        extensions(&p, &g, &td, NeighborScan::PerMember, &mut a);
        let mut b = Vec::new();
        extensions(&p, &g, &td, NeighborScan::Merged, &mut b);
        assert!(a.len() > b.len(), "per-member scan should revisit shared neighbors");
        let mut a: Vec<_> = a.into_iter().map(|e| p.extend(e)).collect();
        a.sort();
        a.dedup();
        let mut b: Vec<_> = b.into_iter().map(|e| p.extend(e)).collect();
        b.sort();
        assert_eq!(a, b);
    }

    #[test]
    fn canonical_identity_ignores_insertion_order() {
        use std::collections::hash_map::DefaultHasher;
        use std::hash::{Hash, Hasher};
        let a = OdtTriple::new(
            RegionSet::new(vec![RegionId(3), RegionId(1), RegionId(2)]),
            RegionSet::new(vec![RegionId(7), RegionId(5)]),
            SlotRange::new(0, 1),
        )
        .unwrap();
        let b = OdtTriple::new(
            RegionSet::new(vec![RegionId(2), RegionId(3), RegionId(1)]),
            RegionSet::new(vec![RegionId(5), RegionId(7), RegionId(5)]),
            SlotRange::new(0, 1),
        )
        .unwrap();
        assert_eq!(a, b);
        let h = |t: &OdtTriple| {
            let mut s = DefaultHasher::new();
            t.hash(&mut s);
            s.finish()
        };
        assert_eq!(h(&a), h(&b));
    }

    #[test]
    fn triple_rejects_overlap_and_empty() {
        assert!(OdtTriple::new(set(&[0, 1]), set(&[1]), SlotRange::single(0)).is_err());
        assert!(OdtTriple::new(set(&[]), set(&[1]), SlotRange::single(0)).is_err());
        assert!(OdtTriple::new(set(&[0]), set(&[1]), SlotRange::new(2, 1)).is_err());
    }

    #[test]
    fn constraints_validation() {
        let g = grid(3, 1); // path 0-1-2
        let td = TimeDomain::slots(4).unwrap();
        let ok = Constraints {
            origins: set(&[0, 1]),
            dests: set(&[2]),
            time: SlotRange::new(0, 3),
        };
        assert!(ok.validate(&g, &td).is_ok());
        let disconnected = Constraints {
            origins: set(&[0, 2]),
            ..ok.clone()
        };
        assert!(disconnected.validate(&g, &td).is_err());
        let out_of_axis = Constraints {
            time: SlotRange::new(2, 4),
            ..ok
        };
        assert!(out_of_axis.validate(&g, &td).is_err());
    }
}

#[cfg(test)]
mod props {
    use proptest::prelude::*;

    use super::*;

    fn grid(w: u32, h: u32) -> RegionGraph {
        let mut edges = Vec::new();
        for y in 0..h {
            for x in 0..w {
                let v = y * w + x;
                if x + 1 < w {
                    edges.push((v.to_string(), (v + 1).to_string()));
                }
                if y + 1 < h {
                    edges.push((v.to_string(), (v + w).to_string()));
                }
            }
        }
        RegionGraph::from_edges(&edges)
    }

    /// Random valid triple grown from an atom by random minimal generalizations.
    fn grow(g: &RegionGraph, td: &TimeDomain, seed: Vec<u8>) -> OdtTriple {
        let o = RegionId(seed[0] as u32 % g.len() as u32);
        let d = g.regions().find(|&r| r != o).unwrap();
        let mut t = OdtTriple::atomic(o, d, seed[1] as u32 % td.slot_count());
        for &b in &seed[2..] {
            let gens = minimal_generalizations(&t, g, td);
            if gens.is_empty() {
                break;
            }
            t = gens[b as usize % gens.len()].clone();
        }
        t
    }

    proptest! {
        #[test]
        fn generalizations_grow_one_element_and_stay_connected(seed in proptest::collection::vec(any::<u8>(), 2..9)) {
            let g = grid(3, 3);
            let td = TimeDomain::slots(5).unwrap();
            let p = grow(&g, &td, seed);
            for cand in minimal_generalizations(&p, &g, &td) {
                prop_assert_eq!(cand.level(), p.level() + 1);
                prop_assert!(cand.validate(&g, &td).is_ok());
                let d = difference(&cand, &p).unwrap();
                prop_assert_eq!(p.card() + d.card(), cand.card());
                // removing the difference in the grown dimension gives back p
                match extension_between(&cand, &p).unwrap() {
                    Extension::Origin(r) => {
                        prop_assert_eq!(&d.origin, &RegionSet::single(r));
                        prop_assert_eq!(cand.origin.without(r), p.origin.clone());
                    }
                    Extension::Dest(r) => {
                        prop_assert_eq!(&d.dest, &RegionSet::single(r));
                        prop_assert_eq!(cand.dest.without(r), p.dest.clone());
                    }
                    Extension::Time(t) => {
                        prop_assert_eq!(d.time, SlotRange::single(t));
                        let rest = if cand.time.start == t {
                            SlotRange::new(t + 1, cand.time.end)
                        } else {
                            SlotRange::new(cand.time.start, t - 1)
                        };
                        prop_assert_eq!(rest, p.time);
                    }
                }
            }
        }
    }
}
