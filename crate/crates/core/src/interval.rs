//! Sets of released versions, kept as sorted runs of closed intervals.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::version::Version;

/// One released version together with its position inside its soname group.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReleaseSlot {
    pub version: Version,
    pub soname: String,
    /// First release of its soname group (`V_init`).
    pub group_start: bool,
    /// Last release of its soname group (`V_last`).
    pub group_end: bool,
}

/// Closed interval `[lo, hi]`. The markers record that an endpoint is the
/// first or last release of its soname group.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Interval {
    pub lo: Version,
    pub hi: Version,
    pub lo_is_init: bool,
    pub hi_is_last: bool,
}

impl Interval {
    pub fn new(lo: Version, hi: Version) -> Self {
        Interval {
            lo,
            hi,
            lo_is_init: false,
            hi_is_last: false,
        }
    }

    pub fn contains(&self, v: &Version) -> bool {
        &self.lo <= v && v <= &self.hi
    }

    fn lo_label(&self) -> String {
        if self.lo_is_init {
            "V_init".to_string()
        } else {
            self.lo.to_string()
        }
    }

    fn hi_label(&self) -> String {
        if self.hi_is_last {
            "V_last".to_string()
        } else {
            self.hi.to_string()
        }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.lo == self.hi && !self.lo_is_init && !self.hi_is_last {
            write!(f, "[{}]", self.lo)
        } else {
            write!(f, "[{}, {}]", self.lo_label(), self.hi_label())
        }
    }
}

/// Sorted, disjoint, non-touching intervals.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IntervalSet {
    intervals: Vec<Interval>,
}

impl IntervalSet {
    pub fn empty() -> Self {
        IntervalSet::default()
    }

    /// Sorts and merges overlapping or touching intervals.
    pub fn normalize(mut intervals: Vec<Interval>) -> Self {
        intervals.retain(|i| i.lo <= i.hi);
        intervals.sort_by(|a, b| {
            a.lo.cmp(&b.lo)
                .then_with(|| b.lo_is_init.cmp(&a.lo_is_init))
        });
        let mut merged: Vec<Interval> = Vec::with_capacity(intervals.len());
        for next in intervals {
            match merged.last_mut() {
                Some(cur) if next.lo <= cur.hi => {
                    if cur.lo == next.lo {
                        cur.lo_is_init |= next.lo_is_init;
                    }
                    if next.hi > cur.hi {
                        cur.hi = next.hi;
                        cur.hi_is_last = next.hi_is_last;
                    } else if next.hi == cur.hi {
                        cur.hi_is_last |= next.hi_is_last;
                    }
                }
                _ => merged.push(next),
            }
        }
        IntervalSet { intervals: merged }
    }

    /// Maximal runs of consecutive selected releases. Runs never cross a
    /// soname group boundary.
    pub fn from_releases<F>(releases: &[ReleaseSlot], mut selected: F) -> Self
    where
        F: FnMut(&ReleaseSlot) -> bool,
    {
        let mut intervals = Vec::new();
        let mut open: Option<Interval> = None;
        for slot in releases {
            if slot.group_start {
                intervals.extend(open.take());
            }
            if selected(slot) {
                match open.as_mut() {
                    Some(run) => {
                        run.hi = slot.version.clone();
                        run.hi_is_last = slot.group_end;
                    }
                    None => {
                        open = Some(Interval {
                            lo: slot.version.clone(),
                            hi: slot.version.clone(),
                            lo_is_init: slot.group_start,
                            hi_is_last: slot.group_end,
                        })
                    }
                }
            } else {
                intervals.extend(open.take());
            }
        }
        intervals.extend(open);
        IntervalSet { intervals }
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn contains(&self, v: &Version) -> bool {
        self.intervals.iter().any(|i| i.contains(v))
    }

    /// Released versions covered by this set, in release order.
    pub fn members(&self, releases: &[ReleaseSlot]) -> Vec<Version> {
        releases
            .iter()
            .filter(|slot| self.contains(&slot.version))
            .map(|slot| slot.version.clone())
            .collect()
    }
}

impl fmt::Display for IntervalSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.intervals.is_empty() {
            return f.write_str("{}");
        }
        for (n, i) in self.intervals.iter().enumerate() {
            if n > 0 {
                f.write_str(" ∪ ")?;
            }
            write!(f, "{i}")?;
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct IntervalRecord {
    lo: String,
    hi: String,
    lo_version: Version,
    hi_version: Version,
}

impl Serialize for IntervalSet {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_seq(self.intervals.iter().map(|i| IntervalRecord {
            lo: i.lo_label(),
            hi: i.hi_label(),
            lo_version: i.lo.clone(),
            hi_version: i.hi.clone(),
        }))
    }
}

impl<'de> Deserialize<'de> for IntervalSet {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let records = Vec::<IntervalRecord>::deserialize(deserializer)?;
        let intervals = records
            .into_iter()
            .map(|r| Interval {
                lo_is_init: r.lo == "V_init",
                hi_is_last: r.hi == "V_last",
                lo: r.lo_version,
                hi: r.hi_version,
            })
            .collect();
        Ok(IntervalSet { intervals })
    }
}
