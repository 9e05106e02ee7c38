//! Release versions and range arithmetic.
//!
//! A [`VersionRange`] is kept as a sorted union of disjoint, non-adjacent
//! half-open intervals `[lo, hi)`. Versions form a discrete total order, so
//! inclusive upper bounds and exclusive lower bounds are rewritten through
//! [`Version::successor`] and every range has exactly one normal form.

use std::cmp::{max, min};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Version {
    pub major: u64,
    pub minor: u64,
    pub patch: u64,
}

impl Version {
    pub const ZERO: Version = Version::new(0, 0, 0);

    pub const fn new(major: u64, minor: u64, patch: u64) -> Self {
        Version {
            major,
            minor,
            patch,
        }
    }

    /// The immediately following version, or `None` past the largest
    /// representable one.
    pub fn successor(self) -> Option<Version> {
        if let Some(patch) = self.patch.checked_add(1) {
            return Some(Version { patch, ..self });
        }
        if let Some(minor) = self.minor.checked_add(1) {
            return Some(Version::new(self.major, minor, 0));
        }
        self.major.checked_add(1).map(|major| Version::new(major, 0, 0))
    }

    fn next_major(self) -> Option<Version> {
        self.major.checked_add(1).map(|m| Version::new(m, 0, 0))
    }

    fn next_minor(self) -> Option<Version> {
        match self.minor.checked_add(1) {
            Some(m) => Some(Version::new(self.major, m, 0)),
            None => self.next_major(),
        }
    }
}

impl fmt::Display for Version {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}.{}", self.major, self.minor, self.patch)
    }
}

pub fn parse_version(text: &str) -> Result<Version> {
    let bad = |reason: &str| Error::BadVersion {
        text: text.to_string(),
        reason: reason.to_string(),
    };
    if text.contains(['-', '+']) {
        return Err(bad("prerelease and build metadata are not supported"));
    }
    let parts: Vec<&str> = text.split('.').collect();
    if parts.len() != 3 {
        return Err(bad("expected MAJOR.MINOR.PATCH"));
    }
    let mut nums = [0u64; 3];
    for (slot, part) in nums.iter_mut().zip(&parts) {
        if part.is_empty() || !part.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad("components must be decimal digits"));
        }
        *slot = part.parse().map_err(|_| bad("component out of range"))?;
    }
    Ok(Version::new(nums[0], nums[1], nums[2]))
}

impl FromStr for Version {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_version(s)
    }
}

impl Serialize for Version {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Version {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        parse_version(&text).map_err(serde::de::Error::custom)
    }
}

/// Half-open interval `[lo, hi)`; `hi == None` is unbounded above.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Interval {
    pub lo: Version,
    pub hi: Option<Version>,
}

impl Interval {
    pub const UNIVERSAL: Interval = Interval {
        lo: Version::ZERO,
        hi: None,
    };

    pub fn new(lo: Version, hi: Option<Version>) -> Self {
        Interval { lo, hi }
    }

    pub fn is_empty(&self) -> bool {
        matches!(self.hi, Some(hi) if hi <= self.lo)
    }

    pub fn contains(&self, v: Version) -> bool {
        v >= self.lo && self.hi.is_none_or(|hi| v < hi)
    }

    pub fn intersect(&self, other: &Interval) -> Interval {
        let hi = match (self.hi, other.hi) {
            (Some(a), Some(b)) => Some(min(a, b)),
            (a, None) => a,
            (None, b) => b,
        };
        Interval {
            lo: max(self.lo, other.lo),
            hi,
        }
    }
}

/// A set of versions: union of conjunctions of comparators, normalized.
///
/// Equality compares membership only; the source text is kept so manifests
/// re-serialize the way they were written.
#[derive(Debug, Clone)]
pub struct VersionRange {
    intervals: Vec<Interval>,
    text: String,
}

impl PartialEq for VersionRange {
    fn eq(&self, other: &Self) -> bool {
        self.intervals == other.intervals
    }
}

impl Eq for VersionRange {}

impl VersionRange {
    pub fn any() -> Self {
        Self::from_intervals(vec![Interval::UNIVERSAL])
    }

    pub fn empty() -> Self {
        Self::from_intervals(Vec::new())
    }

    pub fn exact(v: Version) -> Self {
        Self::from_intervals(vec![Interval::new(v, v.successor())])
    }

    /// Builds a range from arbitrary (possibly overlapping or empty)
    /// intervals. The text becomes the canonical rendering.
    pub fn from_intervals(intervals: Vec<Interval>) -> Self {
        let intervals = normalize(intervals);
        let text = render(&intervals);
        VersionRange { intervals, text }
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    /// The text this range was parsed from (trimmed), or the canonical
    /// rendering for computed ranges.
    pub fn as_str(&self) -> &str {
        &self.text
    }

    /// `>=lo <hi` conjunctions joined by ` || `. `*` for the universal range,
    /// `<0.0.0` for the empty one.
    pub fn canonical(&self) -> String {
        render(&self.intervals)
    }

    pub fn satisfies(&self, v: Version) -> bool {
        self.intervals.iter().any(|i| i.contains(v))
    }

    pub fn intersect(&self, other: &VersionRange) -> VersionRange {
        let mut out = Vec::new();
        for a in &self.intervals {
            for b in &other.intervals {
                out.push(a.intersect(b));
            }
        }
        Self::from_intervals(out)
    }

    pub fn highest_satisfying<'a, I>(&self, candidates: I) -> Option<Version>
    where
        I: IntoIterator<Item = &'a Version>,
    {
        candidates
            .into_iter()
            .copied()
            .filter(|v| self.satisfies(*v))
            .max()
    }
}

impl fmt::Display for VersionRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

impl FromStr for VersionRange {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_range(s)
    }
}

impl Serialize for VersionRange {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.text)
    }
}

impl<'de> Deserialize<'de> for VersionRange {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        parse_range(&text).map_err(serde::de::Error::custom)
    }
}

fn normalize(mut intervals: Vec<Interval>) -> Vec<Interval> {
    intervals.retain(|i| !i.is_empty());
    intervals.sort();
    let mut out: Vec<Interval> = Vec::with_capacity(intervals.len());
    for next in intervals {
        if let Some(last) = out.last_mut() {
            // overlapping or touching: [a, b) followed by [c, d) with c <= b
            match last.hi {
                None => continue,
                Some(hi) if next.lo <= hi => {
                    last.hi = match next.hi {
                        None => None,
                        Some(nh) => Some(max(hi, nh)),
                    };
                    continue;
                }
                Some(_) => {}
            }
        }
        out.push(next);
    }
    out
}

fn render(intervals: &[Interval]) -> String {
    if intervals.is_empty() {
        return "<0.0.0".to_string();
    }
    if intervals == [Interval::UNIVERSAL] {
        return "*".to_string();
    }
    intervals
        .iter()
        .map(|i| match i.hi {
            Some(hi) => format!(">={} <{}", i.lo, hi),
            None => format!(">={}", i.lo),
        })
        .collect::<Vec<_>>()
        .join(" || ")
}

/// Parses `||`-separated disjuncts of whitespace-separated comparators.
///
/// Supported atoms: `*`, `x.y.z`, `=x.y.z`, `^x.y.z`, `~x.y.z`, `>=x.y.z`,
/// `>x.y.z`, `<=x.y.z`, `<x.y.z`.
pub fn parse_range(text: &str) -> Result<VersionRange> {
    let mut intervals = Vec::new();
    for disjunct in text.split("||") {
        let mut acc = Interval::UNIVERSAL;
        let mut atoms = 0;
        for token in disjunct.split_whitespace() {
            acc = acc.intersect(&parse_atom(token, text)?);
            atoms += 1;
        }
        if atoms == 0 {
            return Err(Error::BadRange {
                text: text.to_string(),
                reason: "empty comparator set".to_string(),
            });
        }
        intervals.push(acc);
    }
    let intervals = normalize(intervals);
    Ok(VersionRange {
        intervals,
        text: text.trim().to_string(),
    })
}

fn parse_atom(token: &str, whole: &str) -> Result<Interval> {
    if token == "*" {
        return Ok(Interval::UNIVERSAL);
    }
    let (op, rest) = [">=", "<=", ">", "<", "=", "^", "~"]
        .iter()
        .find_map(|op| token.strip_prefix(op).map(|rest| (*op, rest)))
        .unwrap_or(("", token));
    let v = parse_version(rest).map_err(|e| Error::BadRange {
        text: whole.to_string(),
        reason: format!("bad comparator `{token}`: {e}"),
    })?;
    Ok(match op {
        "" | "=" => Interval::new(v, v.successor()),
        ">=" => Interval::new(v, None),
        ">" => match v.successor() {
            Some(s) => Interval::new(s, None),
            None => Interval::new(v, Some(v)),
        },
        "<" => Interval::new(Version::ZERO, Some(v)),
        "<=" => Interval::new(Version::ZERO, v.successor()),
        "^" => {
            let hi = if v.major > 0 {
                v.next_major()
            } else if v.minor > 0 {
                v.next_minor()
            } else {
                v.successor()
            };
            Interval::new(v, hi)
        }
        "~" => Interval::new(v, v.next_minor()),
        _ => unreachable!("operator list is closed"),
    })
}

pub fn satisfies(range: &VersionRange, v: Version) -> bool {
    range.satisfies(v)
}

pub fn intersect(a: &VersionRange, b: &VersionRange) -> VersionRange {
    a.intersect(b)
}

pub fn highest_satisfying(range: &VersionRange, candidates: &[Version]) -> Option<Version> {
    range.highest_satisfying(candidates)
}
