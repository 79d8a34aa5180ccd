//! Widens a single detected bug version to every release in which the
//! changed element is mutually compatible with the bug version.

use crate::abi::LibraryHistory;
use crate::diff::{ElementRef, IncompatibleChange};
use crate::interval::{IntervalSet, ReleaseSlot};
use crate::version::{Version, VersionRange};

pub use crate::diff::element_bbc;

/// `v_i` is incompatible exactly when the element neither breaks going
/// from `v_bug` to `v_i` nor going back, i.e. it looks the same in both.
pub fn is_incompatible_version(
    h: &LibraryHistory,
    v_bug: &Version,
    v_i: &Version,
    element: &ElementRef,
) -> bool {
    let (Some(bug), Some(other)) = (h.snapshot(v_bug), h.snapshot(v_i)) else {
        return false;
    };
    !element_bbc(bug, other, element) && !element_bbc(other, bug, element)
}

/// Index of the soname group every release belongs to.
fn group_ids(slots: &[ReleaseSlot]) -> Vec<usize> {
    let mut group = 0;
    slots
        .iter()
        .enumerate()
        .map(|(i, s)| {
            if s.group_start && i > 0 {
                group += 1;
            }
            group
        })
        .collect()
}

/// Releases in `v_bug`'s soname group, inside `required`, that share the
/// bug version's view of the changed element.
pub fn suggest_incompatible_versions(
    h: &LibraryHistory,
    ic: &IncompatibleChange,
    v_bug: &Version,
    required: &VersionRange,
) -> IntervalSet {
    let slots = h.release_slots();
    let groups = group_ids(&slots);
    let Some(bug_group) = slots
        .iter()
        .position(|s| &s.version == v_bug)
        .map(|i| groups[i])
    else {
        return IntervalSet::empty();
    };
    let selected: Vec<bool> = slots
        .iter()
        .zip(&groups)
        .map(|(s, &g)| {
            g == bug_group
                && required.contains(&s.version)
                && is_incompatible_version(h, v_bug, &s.version, &ic.element)
        })
        .collect();
    let mut flags = selected.iter();
    IntervalSet::from_releases(&slots, |_| *flags.next().expect("one flag per release"))
}

/// Union of per-change sets, re-expressed as maximal runs of releases.
pub fn union_over_changes(releases: &[ReleaseSlot], sets: &[IntervalSet]) -> IntervalSet {
    IntervalSet::from_releases(releases, |s| {
        sets.iter().any(|set| set.contains(&s.version))
    })
}
