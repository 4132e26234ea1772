//! 3D prefix sums over the 0/1 atomic-pattern cube.
//!
//! `R[i][j][k]` holds the number of atomic patterns `(o, d, t)` with
//! `o < i`, `d < j`, `t < k` (the zero planes pad the cube), so any
//! axis-aligned box is counted with eight lookups.

use crate::error::{Error, Result};
use crate::ingest::AtomicPatternSet;
use crate::model::{Extension, OdtTriple, Slot};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrefixSumIndex {
    sums: Vec<u32>,
    regions: usize,
    slots: usize,
}

impl PrefixSumIndex {
    /// Builds the `(N+1)×(N+1)×(M+1)` cumulative array.
    pub fn build(aps: &AtomicPatternSet, regions: usize, slots: u32) -> Self {
        let slots = slots as usize;
        let (si, sj) = ((regions + 1) * (slots + 1), slots + 1);
        let mut sums = vec![0u32; (regions + 1) * si];
        for (o, d, t) in aps.iter() {
            if o.index() < regions && d.index() < regions && (t as usize) < slots {
                sums[(o.index() + 1) * si + (d.index() + 1) * sj + t as usize + 1] = 1;
            }
        }
        // running sums along each axis in turn
        for i in 1..=regions {
            for j in 1..=regions {
                let base = i * si + j * sj;
                for k in 1..=slots {
                    sums[base + k] += sums[base + k - 1];
                }
            }
        }
        for i in 1..=regions {
            for j in 1..=regions {
                for k in 1..=slots {
                    let at = i * si + j * sj + k;
                    sums[at] += sums[at - sj];
                }
            }
        }
        for i in 1..=regions {
            for j in 1..=regions {
                for k in 1..=slots {
                    let at = i * si + j * sj + k;
                    sums[at] += sums[at - si];
                }
            }
        }
        Self { sums, regions, slots }
    }

    pub fn regions(&self) -> usize {
        self.regions
    }

    pub fn slots(&self) -> usize {
        self.slots
    }

    /// Raw cumulative value `R[i][j][k]` (1-based, zero planes at 0).
    pub fn cumulative(&self, i: usize, j: usize, k: usize) -> u32 {
        self.sums[self.at(i, j, k)]
    }

    #[inline]
    fn at(&self, i: usize, j: usize, k: usize) -> usize {
        (i * (self.regions + 1) + j) * (self.slots + 1) + k
    }

    /// Atomic patterns in the inclusive 0-based box
    /// `[o_lo, o_hi] × [d_lo, d_hi] × [t_lo, t_hi]`.
    pub fn range_sum(
        &self,
        (o_lo, o_hi): (usize, usize),
        (d_lo, d_hi): (usize, usize),
        (t_lo, t_hi): (usize, usize),
    ) -> Result<u32> {
        if o_lo > o_hi || o_hi >= self.regions || d_lo > d_hi || d_hi >= self.regions || t_lo > t_hi || t_hi >= self.slots {
            return Err(Error::OutOfRange(format!(
                "box [{o_lo},{o_hi}]x[{d_lo},{d_hi}]x[{t_lo},{t_hi}] on {}x{}x{}",
                self.regions, self.regions, self.slots
            )));
        }
        Ok(self.box_sum(o_lo + 1, o_hi + 1, d_lo + 1, d_hi + 1, t_lo + 1, t_hi + 1))
    }

    /// Inclusion–exclusion on 1-based bounds.
    #[inline]
    fn box_sum(&self, a: usize, b: usize, c: usize, d: usize, e: usize, f: usize) -> u32 {
        let r = |i, j, k| self.sums[self.at(i, j, k)] as i64;
        let v = r(b, d, f) - r(a - 1, d, f) - r(b, c - 1, f) - r(b, d, e - 1)
            + r(a - 1, c - 1, f)
            + r(b, c - 1, e - 1)
            + r(a - 1, d, e - 1)
            - r(a - 1, c - 1, e - 1);
        v as u32
    }

    /// Count over the bounding box of `t`'s id ranges; never below the exact
    /// count of atomic patterns inside `t`.
    pub fn upper_bound(&self, t: &OdtTriple) -> u64 {
        let (Some(o_lo), Some(o_hi), Some(d_lo), Some(d_hi)) =
            (t.origin.first(), t.origin.last(), t.dest.first(), t.dest.last())
        else {
            return 0;
        };
        let clamp_slot = |s: Slot| (s as usize).min(self.slots.saturating_sub(1));
        self.box_sum(
            o_lo.index() + 1,
            o_hi.index() + 1,
            d_lo.index() + 1,
            d_hi.index() + 1,
            clamp_slot(t.time.start) + 1,
            clamp_slot(t.time.end) + 1,
        ) as u64
    }

    /// [`Self::upper_bound`] of `p.gained_by(ext)`, without building it.
    pub fn gain_upper_bound(&self, p: &OdtTriple, ext: Extension) -> u64 {
        let span = |s: &crate::model::RegionSet| match (s.first(), s.last()) {
            (Some(a), Some(b)) => (a.index(), b.index()),
            _ => (0, 0),
        };
        let (o, d) = (span(&p.origin), span(&p.dest));
        let t = (p.time.start as usize, p.time.end as usize);
        let ((o_lo, o_hi), (d_lo, d_hi), (t_lo, t_hi)) = match ext {
            Extension::Origin(r) => ((r.index(), r.index()), d, t),
            Extension::Dest(r) => (o, (r.index(), r.index()), t),
            Extension::Time(s) => (o, d, (s as usize, s as usize)),
        };
        let last = self.slots.saturating_sub(1);
        self.box_sum(o_lo + 1, o_hi + 1, d_lo + 1, d_hi + 1, t_lo.min(last) + 1, t_hi.min(last) + 1) as u64
    }

    /// Approximate heap footprint in bytes.
    pub fn memory_bytes(&self) -> usize {
        self.sums.len() * std::mem::size_of::<u32>()
    }
}
