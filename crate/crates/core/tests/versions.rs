//! Version comparison against a frozen corpus and ordering laws.

mod common;

use std::cmp::Ordering;
use std::fs;

use proptest::prelude::*;

use abirange_core::version::{compare_versions, parse_depends};
use abirange_core::{Version, VersionRange};

use common::{fixture, v};

/// `(a, expected ordering, b)` rows of the frozen corpus.
pub fn corpus() -> Vec<(String, Ordering, String)> {
    fs::read_to_string(fixture("version-corpus.txt"))
        .unwrap()
        .lines()
        .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
        .map(|l| {
            let parts: Vec<&str> = l.split_whitespace().collect();
            let ord = match parts[1] {
                "<" => Ordering::Less,
                "=" => Ordering::Equal,
                ">" => Ordering::Greater,
                other => panic!("bad operator {other}"),
            };
            (parts[0].to_string(), ord, parts[2].to_string())
        })
        .collect()
}

#[test]
fn corpus_agrees_with_reference() {
    let rows = corpus();
    assert!(rows.len() >= 30, "corpus has {} rows", rows.len());
    for (a, ord, b) in &rows {
        assert_eq!(compare_versions(&v(a), &v(b)), *ord, "{a} vs {b}");
        assert_eq!(compare_versions(&v(b), &v(a)), ord.reverse(), "{b} vs {a}");
    }
}

#[test]
fn corpus_covers_epochs_tildes_and_digit_runs() {
    let rows = corpus();
    assert!(rows
        .iter()
        .any(|(a, _, b)| a.contains(':') || b.contains(':')));
    assert!(rows
        .iter()
        .any(|(a, _, b)| a.contains('~') || b.contains('~')));
    assert!(rows.iter().any(|(a, _, b)| a == "1.2.9" && b == "1.2.10"));
}

#[test]
fn rejects_malformed_versions() {
    for bad in [
        "", " ", "1.0 beta", "a:1.0", "1:", ":1.0", "1.0-", "1.0_x", "-1",
    ] {
        assert!(Version::parse(bad).is_err(), "{bad:?} should not parse");
    }
}

#[test]
fn depends_lines_split_per_package() {
    let deps = parse_depends("libc6 (>= 2.14), libglib2.0-0 (>= 2.37.6), zlib1g").unwrap();
    let names: Vec<&str> = deps.iter().map(|(n, _)| n.as_str()).collect();
    assert_eq!(names, ["libc6", "libglib2.0-0", "zlib1g"]);
    assert!(deps[1].1.contains(&v("2.39.1")));
    assert!(!deps[1].1.contains(&v("2.37.3")));
    assert!(deps[2].1.accepts_all());
    assert!(parse_depends("foo (>= 1.0").is_err());
    assert!(parse_depends("foo (~ 1.0)").is_err());
}

#[test]
fn range_relations() {
    let r = VersionRange::parse(">= 1.0, << 2.0").unwrap();
    assert!(r.contains(&v("1.0")));
    assert!(r.contains(&v("2.0~rc1")));
    assert!(!r.contains(&v("2.0")));
    assert!(VersionRange::parse("= 1.0").unwrap().contains(&v("1.0-0")));
    assert!(VersionRange::parse(">> 1.0")
        .unwrap()
        .contains(&v("1.0+b1")));
    assert!(!VersionRange::parse("<= 1.0").unwrap().contains(&v("1.0.0")));
}

fn version_text() -> impl Strategy<Value = String> {
    let upstream = "[0-9][0-9a-z.+~]{0,6}";
    let revision = "[0-9a-z.+~]{1,4}";
    (
        prop::option::of(0u8..3),
        upstream,
        prop::option::of(revision),
    )
        .prop_map(|(e, u, r)| {
            let mut s = String::new();
            if let Some(e) = e {
                s.push_str(&format!("{e}:"));
            }
            s.push_str(&u);
            if let Some(r) = r {
                s.push('-');
                s.push_str(&r);
            }
            s
        })
}

proptest! {
    #[test]
    fn comparison_is_a_total_order(a in version_text(), b in version_text(), c in version_text()) {
        let (a, b, c) = (v(&a), v(&b), v(&c));
        prop_assert_eq!(compare_versions(&a, &a), Ordering::Equal);
        prop_assert_eq!(compare_versions(&a, &b), compare_versions(&b, &a).reverse());
        if a <= b && b <= c {
            prop_assert!(a <= c);
        }
        prop_assert_eq!(a == b, compare_versions(&a, &b) == Ordering::Equal);
    }

    #[test]
    fn display_round_trips(a in version_text()) {
        let parsed = v(&a);
        // A zero epoch is not printed.
        if !a.starts_with("0:") {
            prop_assert_eq!(parsed.to_string(), a.clone());
        }
        prop_assert_eq!(v(&parsed.to_string()), parsed);
    }

    #[test]
    fn tilde_sorts_before_release(a in "[0-9]{1,3}(\\.[0-9]{1,3}){0,2}") {
        let (rc, bin, epoch) = (format!("{a}~rc1"), format!("{a}+b1"), format!("1:{a}"));
        prop_assert!(v(&rc) < v(&a));
        prop_assert!(v(&a) < v(&bin));
        prop_assert!(v(&a) < v(&epoch));
    }
}
