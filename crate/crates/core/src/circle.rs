//! Exact arithmetic on the circle R/Z.
//!
//! Angles are reduced rationals in [0, 1). The circle has total measure 1 and
//! every arc is traversed counterclockwise from its start.

use std::cmp::Ordering;
use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::word::{Letter, Word};


pub type Q = BigRational;

pub fn q(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

/// `x mod 1` in [0, 1).
pub fn frac(x: &Q) -> Q {
    x - x.floor()
}

/// A point of R/Z.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Angle(Q);

impl Angle {
    pub fn new(x: Q) -> Angle {
        Angle(frac(&x))
    }

    pub fn from_ratio(n: i64, d: i64) -> Angle {
        Angle::new(q(n, d))
    }

    pub fn zero() -> Angle {
        Angle(Q::zero())
    }

    pub fn value(&self) -> &Q {
        &self.0
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(0.0)
    }

    pub fn add(&self, t: &Q) -> Angle {
        Angle::new(&self.0 + t)
    }

    /// Counterclockwise distance from `self` to `other`, in [0, 1).
    pub fn ccw_to(&self, other: &Angle) -> Q {
        frac(&(&other.0 - &self.0))
    }

    /// Arc-length distance on the circle, in [0, 1/2].
    pub fn dist(&self, other: &Angle) -> Q {
        let a = self.ccw_to(other);
        let b = other.ccw_to(self);
        a.min(b)
    }

    /// Chordal distance |e^{2πia} − e^{2πib}| on the unit circle.
    pub fn chord(&self, other: &Angle) -> f64 {
        let t = self.dist(other).to_f64().unwrap_or(0.0);
        2.0 * (std::f64::consts::PI * t).sin()
    }
}

impl fmt::Display for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_zero() {
            write!(f, "0")
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl fmt::Debug for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl FromStr for Angle {
    type Err = Error;
    fn from_str(s: &str) -> Result<Angle> {
        let s = s.trim();
        let bad = || Error::InvalidInput(format!("cannot parse angle {s:?}"));
        let value = match s.split_once('/') {
            Some((n, d)) => {
                let n: BigInt = n.trim().parse().map_err(|_| bad())?;
                let d: BigInt = d.trim().parse().map_err(|_| bad())?;
                if d.is_zero() {
                    return Err(bad());
                }
                Q::new(n, d)
            }
            None => Q::from_integer(s.parse().map_err(|_| bad())?),
        };
        Ok(Angle::new(value))
    }
}

impl Serialize for Angle {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Angle {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Angle, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Position of `x` relative to the counterclockwise arc from `a` to `b`.
/// Coincidences with the endpoints are reported rather than broken.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum CyclicPosition {
    AtStart,
    AtEnd,
    Inside,
    Outside,
}

pub fn cyclic_position(a: &Angle, x: &Angle, b: &Angle) -> CyclicPosition {
    if x == a {
        return CyclicPosition::AtStart;
    }
    if x == b {
        return CyclicPosition::AtEnd;
    }
    let span = a.ccw_to(b);
    let off = a.ccw_to(x);
    if span.is_zero() || off < span {
        CyclicPosition::Inside
    } else {
        CyclicPosition::Outside
    }
}

/// True when `x` lies strictly inside the counterclockwise arc a⌢b.
pub fn strictly_between(a: &Angle, x: &Angle, b: &Angle) -> bool {
    cyclic_position(a, x, b) == CyclicPosition::Inside
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub struct Degree(u32);

impl Degree {
    pub fn new(d: u32) -> Result<Degree> {
        if d < 2 {
            return Err(Error::InvalidInput(format!("degree must be >= 2, got {d}")));
        }
        Ok(Degree(d))
    }

    pub const TWO: Degree = Degree(2);

    pub fn get(self) -> u32 {
        self.0
    }

    pub fn as_usize(self) -> usize {
        self.0 as usize
    }

    fn q(self) -> Q {
        Q::from_integer(BigInt::from(self.0))
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Closure {
    Closed,
    Open,
    /// Start excluded, end included.
    LeftOpen,
    /// Start included, end excluded.
    RightOpen,
}

/// Counterclockwise arc. A length of 1 with closed closure is the full circle.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Arc {
    start: Angle,
    len: Q,
    closure: Closure,
}

impl Arc {
    pub fn closed(start: Angle, end: &Angle) -> Arc {
        let len = start.ccw_to(end);
        Arc {
            start,
            len,
            closure: Closure::Closed,
        }
    }

    pub fn open(start: Angle, end: &Angle) -> Arc {
        let len = start.ccw_to(end);
        Arc {
            start,
            len,
            closure: Closure::Open,
        }
    }

    /// Arc from a start point and a length in [0, 1].
    pub fn with_len(start: Angle, len: Q, closure: Closure) -> Arc {
        assert!(!len.is_negative() && len <= Q::one(), "arc length out of range");
        Arc { start, len, closure }
    }

    pub fn full_circle() -> Arc {
        Arc {
            start: Angle::zero(),
            len: Q::one(),
            closure: Closure::Closed,
        }
    }

    pub fn is_full(&self) -> bool {
        self.len.is_one()
    }

    pub fn start(&self) -> &Angle {
        &self.start
    }

    pub fn end(&self) -> Angle {
        self.start.add(&self.len)
    }

    pub fn closure(&self) -> Closure {
        self.closure
    }

    pub fn measure(&self) -> &Q {
        &self.len
    }

    pub fn contains(&self, x: &Angle) -> bool {
        if self.is_full() {
            return true;
        }
        let off = self.start.ccw_to(x);
        let (start_in, end_in) = match self.closure {
            Closure::Closed => (true, true),
            Closure::Open => (false, false),
            Closure::LeftOpen => (false, true),
            Closure::RightOpen => (true, false),
        };
        if off.is_zero() {
            return start_in || (end_in && self.len.is_zero());
        }
        match off.cmp(&self.len) {
            Ordering::Less => true,
            Ordering::Equal => end_in,
            Ordering::Greater => false,
        }
    }

    /// Midpoint of the arc.
    pub fn midpoint(&self) -> Angle {
        self.start.add(&(&self.len / Q::from_integer(2.into())))
    }
}

impl fmt::Debug for Arc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_full() {
            return write!(f, "T");
        }
        let (l, r) = match self.closure {
            Closure::Closed => ('[', ']'),
            Closure::Open => ('(', ')'),
            Closure::LeftOpen => ('(', ']'),
            Closure::RightOpen => ('[', ')'),
        };
        let end = &self.start.0 + &self.len;
        let end = if end.denom().is_one() && end.numer().is_zero() { Q::zero() } else { end };
        write!(f, "{l}{}, {}{r}", self.start, fmt_q(&end))
    }
}

fn fmt_q(x: &Q) -> String {
    if x.is_zero() {
        "0".to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

#[derive(Serialize, Deserialize)]
struct ArcRepr {
    start: Angle,
    end: Angle,
    closed: bool,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    full: bool,
}

impl Serialize for Arc {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ArcRepr {
            start: self.start.clone(),
            end: self.end(),
            closed: self.closure == Closure::Closed,
            full: self.is_full(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Arc {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Arc, D::Error> {
        let r = ArcRepr::deserialize(d)?;
        if r.full {
            return Ok(Arc::full_circle());
        }
        Ok(if r.closed {
            Arc::closed(r.start, &r.end)
        } else {
            Arc::open(r.start, &r.end)
        })
    }
}

/// A finite union of closed arcs in normal form: arcs are pairwise disjoint
/// (touching arcs are merged) and sorted by start angle. Single points are
/// allowed as zero-length arcs.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ArcSet {
    arcs: Vec<Arc>,
    full: bool,
}

impl fmt::Debug for ArcSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.full {
            return write!(f, "T");
        }
        if self.arcs.is_empty() {
            return write!(f, "∅");
        }
        let parts: Vec<String> = self.arcs.iter().map(|a| format!("{a:?}")).collect();
        write!(f, "{}", parts.join(" ∪ "))
    }
}

/// Closed interval [lo, hi] of the unit interval, used for normalization.
type Interval = (Q, Q);

impl ArcSet {
    pub fn empty() -> ArcSet {
        ArcSet {
            arcs: Vec::new(),
            full: false,
        }
    }

    pub fn full() -> ArcSet {
        ArcSet {
            arcs: Vec::new(),
            full: true,
        }
    }

    pub fn from_arc(a: Arc) -> ArcSet {
        ArcSet::from_arcs(vec![a])
    }

    pub fn from_points(points: &[Angle]) -> ArcSet {
        ArcSet::from_arcs(points.iter().map(|p| Arc::with_len(p.clone(), Q::zero(), Closure::Closed)).collect())
    }

    /// Closure of the union of the given arcs.
    pub fn from_arcs(arcs: Vec<Arc>) -> ArcSet {
        if arcs.iter().any(Arc::is_full) {
            return ArcSet::full();
        }
        let mut iv = Vec::new();
        for a in &arcs {
            split_arc(&a.start.0, &a.len, &mut iv);
        }
        ArcSet::from_intervals(iv)
    }

    fn from_intervals(mut iv: Vec<Interval>) -> ArcSet {
        iv.sort();
        let mut merged: Vec<Interval> = Vec::new();
        for (lo, hi) in iv {
            match merged.last_mut() {
                Some(last) if lo <= last.1 => {
                    if hi > last.1 {
                        last.1 = hi;
                    }
                }
                _ => merged.push((lo, hi)),
            }
        }
        if merged.is_empty() {
            return ArcSet::empty();
        }
        let one = Q::one();
        if merged.len() == 1 && merged[0].0.is_zero() && merged[0].1 == one {
            return ArcSet::full();
        }
        let mut arcs: Vec<Arc> = Vec::new();
        let wraps = merged.len() > 1 && merged[0].0.is_zero() && merged[merged.len() - 1].1 == one;
        let (body, wrap) = if wraps {
            let first = merged[0].clone();
            let last = merged[merged.len() - 1].clone();
            { let len = &one - &last.0 + first.1; (&merged[1..merged.len() - 1], Some((last.0, len))) }
        } else {
            (&merged[..], None)
        };
        for (lo, hi) in body {
            if *lo == one {
                // A lone point at 1 is the point 0; it was merged above unless
                // nothing starts at 0.
                arcs.push(Arc::with_len(Angle::zero(), Q::zero(), Closure::Closed));
                continue;
            }
            arcs.push(Arc::with_len(Angle::new(lo.clone()), hi - lo, Closure::Closed));
        }
        if let Some((start, len)) = wrap {
            if len >= one {
                return ArcSet::full();
            }
            arcs.push(Arc::with_len(Angle::new(start), len, Closure::Closed));
        }
        arcs.sort_by(|a, b| a.start.cmp(&b.start).then_with(|| b.len.cmp(&a.len)));
        // A point at 0 produced from a lone [1,1] may duplicate an arc at 0.
        arcs.dedup_by(|b, a| a.start == b.start && b.len <= a.len);
        ArcSet { arcs, full: false }
    }

    fn intervals(&self) -> Vec<Interval> {
        let mut iv = Vec::new();
        if self.full {
            iv.push((Q::zero(), Q::one()));
            return iv;
        }
        for a in &self.arcs {
            split_arc(&a.start.0, &a.len, &mut iv);
        }
        iv
    }

    pub fn is_full(&self) -> bool {
        self.full
    }

    pub fn is_empty(&self) -> bool {
        !self.full && self.arcs.is_empty()
    }

    /// Arcs in counterclockwise order starting from angle 0. Empty for the
    /// full circle.
    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    pub fn arc_count(&self) -> usize {
        self.arcs.len()
    }

    pub fn measure(&self) -> Q {
        if self.full {
            return Q::one();
        }
        self.arcs.iter().fold(Q::zero(), |acc, a| acc + &a.len)
    }

    pub fn contains(&self, x: &Angle) -> bool {
        self.full || self.arcs.iter().any(|a| a.contains(x))
    }

    /// True when `x` lies in the interior of one of the arcs.
    pub fn contains_interior(&self, x: &Angle) -> bool {
        if self.full {
            return true;
        }
        self.arcs.iter().any(|a| {
            let off = a.start.ccw_to(x);
            !off.is_zero() && off < a.len
        })
    }

    pub fn union(&self, other: &ArcSet) -> ArcSet {
        if self.full || other.full {
            return ArcSet::full();
        }
        let mut iv = self.intervals();
        iv.extend(other.intervals());
        ArcSet::from_intervals(iv)
    }

    pub fn intersect(&self, other: &ArcSet) -> ArcSet {
        if self.full {
            return other.clone();
        }
        if other.full {
            return self.clone();
        }
        let a = self.intervals();
        let b = other.intervals();
        let mut out = Vec::new();
        for (alo, ahi) in &a {
            for (blo, bhi) in &b {
                let lo = if alo > blo { alo } else { blo };
                let hi = if ahi < bhi { ahi } else { bhi };
                if lo <= hi {
                    out.push((lo.clone(), hi.clone()));
                }
            }
        }
        ArcSet::from_intervals(out)
    }

    pub fn is_subset_of(&self, other: &ArcSet) -> bool {
        self.intersect(other) == *self
    }

    /// Full preimage under t ↦ d·t.
    pub fn preimage(&self, d: Degree) -> ArcSet {
        if self.full {
            return ArcSet::full();
        }
        let dq = d.q();
        let mut arcs = Vec::new();
        for a in &self.arcs {
            for j in 0..d.get() {
                let s = (&a.start.0 + Q::from_integer(j.into())) / &dq;
                arcs.push(Arc::with_len(Angle::new(s), &a.len / &dq, Closure::Closed));
            }
        }
        ArcSet::from_arcs(arcs)
    }

    /// Image under t ↦ d·t.
    pub fn image(&self, d: Degree) -> ArcSet {
        if self.full {
            return ArcSet::full();
        }
        let dq = d.q();
        let mut arcs = Vec::new();
        for a in &self.arcs {
            let len = &a.len * &dq;
            if len >= Q::one() {
                return ArcSet::full();
            }
            arcs.push(Arc::with_len(Angle::new(&a.start.0 * &dq), len, Closure::Closed));
        }
        ArcSet::from_arcs(arcs)
    }

    /// Arc-length distance from a point to the set (0 when inside).
    pub fn dist_to_point(&self, x: &Angle) -> Q {
        if self.contains(x) {
            return Q::zero();
        }
        self.arcs
            .iter()
            .map(|a| x.dist(&a.start).min(x.dist(&a.end())))
            .min()
            .unwrap_or_else(Q::one)
    }

    /// Arc-length distance between two sets (0 when they meet).
    pub fn dist(&self, other: &ArcSet) -> Q {
        if !self.intersect(other).is_empty() {
            return Q::zero();
        }
        let mut best: Option<Q> = None;
        for a in &self.arcs {
            for p in [a.start.clone(), a.end()] {
                let v = other.dist_to_point(&p);
                best = Some(match best {
                    Some(b) if b <= v => b,
                    _ => v,
                });
            }
        }
        for b in &other.arcs {
            for p in [b.start.clone(), b.end()] {
                let v = self.dist_to_point(&p);
                best = Some(match best {
                    Some(c) if c <= v => c,
                    _ => v,
                });
            }
        }
        best.unwrap_or_else(Q::one)
    }

    /// The closed `r`-neighbourhood {x : dist(x, self) ≤ r}.
    pub fn expand(&self, r: &Q) -> ArcSet {
        if self.full || self.is_empty() {
            return self.clone();
        }
        let two_r = r * Q::from_integer(2.into());
        let mut arcs = Vec::with_capacity(self.arcs.len());
        for a in &self.arcs {
            let len = &a.len + &two_r;
            if len >= Q::one() {
                return ArcSet::full();
            }
            arcs.push(Arc::with_len(a.start.add(&-r.clone()), len, Closure::Closed));
        }
        ArcSet::from_arcs(arcs)
    }

    /// Closure of the complement.
    pub fn complement_closure(&self) -> ArcSet {
        if self.full {
            return ArcSet::empty();
        }
        if self.arcs.is_empty() {
            return ArcSet::full();
        }
        let n = self.arcs.len();
        let mut gaps = Vec::with_capacity(n);
        for i in 0..n {
            let end = self.arcs[i].end();
            let next = &self.arcs[(i + 1) % n].start;
            let mut len = end.ccw_to(next);
            if n == 1 && len.is_zero() && !self.arcs[0].len.is_zero() {
                continue;
            }
            if n == 1 && self.arcs[0].len.is_zero() {
                len = Q::one();
            }
            gaps.push(Arc::with_len(end, len, Closure::Closed));
        }
        ArcSet::from_arcs(gaps)
    }

    /// All arc endpoints.
    pub fn endpoints(&self) -> Vec<Angle> {
        let mut v = Vec::new();
        for a in &self.arcs {
            v.push(a.start.clone());
            v.push(a.end());
        }
        v
    }
}

fn split_arc(start: &Q, len: &Q, out: &mut Vec<Interval>) {
    let one = Q::one();
    let end = start + len;
    if end <= one {
        if end == one {
            out.push((start.clone(), one.clone()));
            out.push((Q::zero(), Q::zero()));
        } else {
            out.push((start.clone(), end));
        }
        if start.is_zero() {
            out.push((one.clone(), one));
        }
    } else {
        out.push((start.clone(), one.clone()));
        out.push((Q::zero(), end - one));
    }
}

/// t ↦ d·t mod 1.
pub fn hop(d: Degree, t: &Angle) -> Angle {
    Angle::new(&t.0 * d.q())
}

pub fn hop_n(d: Degree, t: &Angle, n: usize) -> Angle {
    let f = Q::from_integer(BigInt::from(d.get()).pow(n as u32));
    Angle::new(&t.0 * f)
}

/// The d roots (α + j)/d, sorted counterclockwise from angle 0.
pub fn star_points(d: Degree, alpha: &Angle) -> Vec<Angle> {
    let dq = d.q();
    let mut v: Vec<Angle> = (0..d.get())
        .map(|j| Angle::new((&alpha.0 + Q::from_integer(j.into())) / &dq))
        .collect();
    v.sort();
    v
}

/// The first star point ★_1 = α/d; the others follow at spacing 1/d.
pub fn first_star(d: Degree, alpha: &Angle) -> Angle {
    Angle::new(&alpha.0 / d.q())
}

/// The closed semicircle (for d = 2) or sector C(L_i) = [★_i, ★_{i+1}].
pub fn branch_arc(d: Degree, alpha: &Angle, i: usize) -> Arc {
    let s = first_star(d, alpha).add(&Q::new(BigInt::from(i - 1), BigInt::from(d.get())));
    Arc::with_len(s, Q::new(BigInt::one(), BigInt::from(d.get())), Closure::Closed)
}

/// Itinerary letter of a single point: the star when `x` is a star point,
/// otherwise the index of the open sector containing it.
pub fn letter_of(d: Degree, alpha: &Angle, x: &Angle) -> Letter {
    let off = first_star(d, alpha).ccw_to(x) * d.q();
    if off.is_integer() {
        Letter::STAR
    } else {
        let k = off.floor().to_integer().to_usize().unwrap_or(0);
        Letter::branch(k + 1)
    }
}

/// The preimage of `t` in the closed sector of branch `i` (1-based).
pub fn branch(d: Degree, alpha: &Angle, i: usize, t: &Angle) -> Result<Angle> {
    if i == 0 || i > d.as_usize() {
        return Err(Error::InvalidInput(format!("branch index {i} out of range")));
    }
    if t == alpha {
        return Err(Error::IllDefinedAtAlpha);
    }
    let star = first_star(d, alpha).add(&Q::new(BigInt::from(i - 1), BigInt::from(d.get())));
    Ok(star.add(&(alpha.ccw_to(t) / d.q())))
}

/// ũ(t) = ũ[1] ∘ … ∘ ũ[n](t), applied right to left. On failure reports `i`
/// with t = hop^i(α).
pub fn apply_word(d: Degree, alpha: &Angle, u: &Word, t: &Angle) -> Result<Angle> {
    let n = u.len();
    let mut cur = t.clone();
    for p in (1..=n).rev() {
        let i = u
            .at(p)
            .index()
            .ok_or_else(|| Error::InvalidInput("word must be star-free".into()))?;
        cur = match branch(d, alpha, i, &cur) {
            Ok(c) => c,
            Err(Error::IllDefinedAtAlpha) => return Err(Error::IllDefinedAtOrbitPoint(n - p)),
            Err(e) => return Err(e),
        };
    }
    Ok(cur)
}

/// Exhaustive candidate search is used only while d^|u| stays below this.
const FIXED_POINT_EXHAUST_LIMIT: u64 = 1 << 18;

/// The angle t with ũ(t) = t.
pub fn fixed_point_of_word(d: Degree, alpha: &Angle, u: &Word) -> Result<Angle> {
    if u.is_empty() {
        return Err(Error::InvalidInput("word must be nonempty".into()));
    }
    if !u.is_star_free() {
        return Err(Error::InvalidInput("word must be star-free".into()));
    }
    let n = u.len() as u32;
    let period = BigInt::from(d.get()).pow(n) - BigInt::one();
    let per_q = Q::from_integer(period.clone());
    let check = |t: &Angle| -> bool { matches!(apply_word(d, alpha, u, t), Ok(ref s) if s == t) };
    let round_candidate = |t: &Angle| -> Angle {
        let scaled = &t.0 * &per_q;
        let j = (scaled + q(1, 2)).floor().to_integer().mod_floor(&period);
        Angle::new(Q::new(j, period.clone()))
    };

    // Iterate from an interior seed; the map contracts by d^-|u| on each
    // continuity piece, so once the orbit settles on one piece the rounded
    // candidate is the fixed point.
    let mut t = branch_arc(d, alpha, u.at(1).index().unwrap()).midpoint();
    let mut seen: HashSet<Angle> = HashSet::new();
    let mut hit_alpha = false;
    for _ in 0..64 {
        let next = match apply_word(d, alpha, u, &t) {
            Ok(s) => s,
            Err(Error::IllDefinedAtOrbitPoint(_)) => {
                hit_alpha = true;
                break;
            }
            Err(e) => return Err(e),
        };
        let cand = round_candidate(&next);
        if check(&cand) {
            return Ok(cand);
        }
        if !seen.insert(next.clone()) {
            break;
        }
        t = next;
    }
    if period.to_u64().is_some_and(|p| p <= FIXED_POINT_EXHAUST_LIMIT) {
        let p = period.to_u64().unwrap();
        for j in 0..p {
            let cand = Angle::new(Q::new(BigInt::from(j), period.clone()));
            if check(&cand) {
                return Ok(cand);
            }
        }
        return Err(Error::NoPeriodicPoint);
    }
    if hit_alpha {
        return Err(Error::IllDefined);
    }
    Err(Error::Undetermined(format!(
        "no fixed point of {u} found by iteration and d^|u| is too large to exhaust"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a(s: &str) -> Angle {
        s.parse().unwrap()
    }

    fn w(s: &str) -> Word {
        s.parse().unwrap()
    }

    const D2: Degree = Degree::TWO;

    #[test]
    fn hop_examples() {
        assert_eq!(hop(D2, &a("2/7")), a("4/7"));
        assert_eq!(hop(D2, &a("0")), a("0"));
        assert_eq!(hop(D2, &a("1/2")), a("0"));
    }

    #[test]
    fn star_point_examples() {
        assert_eq!(star_points(D2, &a("2/7")), vec![a("1/7"), a("9/14")]);
        assert_eq!(star_points(D2, &a("0")), vec![a("0"), a("1/2")]);
        assert_eq!(star_points(D2, &a("1/6")), vec![a("1/12"), a("7/12")]);
    }

    #[test]
    fn branch_examples() {
        assert_eq!(branch(D2, &a("1/6"), 1, &a("1/3")).unwrap(), a("1/6"));
        assert_eq!(branch(D2, &a("1/6"), 2, &a("1/3")).unwrap(), a("2/3"));
        assert_eq!(branch(D2, &a("1/6"), 1, &a("1/6")), Err(Error::IllDefinedAtAlpha));
    }

    #[test]
    fn apply_word_examples() {
        let al = a("1/6");
        assert_eq!(apply_word(D2, &al, &Word::empty(), &a("1/3")).unwrap(), a("1/3"));
        assert_eq!(apply_word(D2, &al, &w("LL"), &a("2/3")).unwrap(), a("1/6"));
        assert_eq!(apply_word(D2, &al, &w("L"), &al), Err(Error::IllDefinedAtOrbitPoint(0)));
    }

    #[test]
    fn fixed_point_examples() {
        let al = a("1/6");
        assert_eq!(fixed_point_of_word(D2, &al, &w("R")).unwrap(), a("0"));
        assert_eq!(fixed_point_of_word(D2, &al, &w("L")), Err(Error::NoPeriodicPoint));
        assert_eq!(fixed_point_of_word(D2, &al, &w("RL")).unwrap(), a("2/3"));
    }

    #[test]
    fn letters() {
        let al = a("2/7");
        assert_eq!(letter_of(D2, &al, &a("1/7")), Letter::STAR);
        assert_eq!(letter_of(D2, &al, &a("1/5")), Letter::L);
        assert_eq!(letter_of(D2, &al, &a("4/5")), Letter::R);
        assert_eq!(letter_of(D2, &al, &a("0")), Letter::R);
    }

    #[test]
    fn arcset_wraparound() {
        let s = ArcSet::from_arc(Arc::closed(a("3/4"), &a("1/4")));
        assert!(s.contains(&a("0")));
        assert!(!s.contains(&a("1/2")));
        assert_eq!(s.measure(), q(1, 2));
        let t = ArcSet::from_arc(Arc::closed(a("0"), &a("1/8")));
        assert_eq!(s.intersect(&t), t);
        let u = ArcSet::from_arc(Arc::closed(a("7/8"), &a("0")));
        let v = ArcSet::from_arc(Arc::closed(a("0"), &a("1/8")));
        assert_eq!(u.intersect(&v), ArcSet::from_points(&[a("0")]));
        assert_eq!(u.union(&v), ArcSet::from_arc(Arc::closed(a("7/8"), &a("1/8"))));
        assert!(ArcSet::from_arc(Arc::closed(a("0"), &a("1/2")))
            .union(&ArcSet::from_arc(Arc::closed(a("1/2"), &a("0"))))
            .is_full());
    }

    #[test]
    fn arcset_preimage_and_image() {
        let c_r = ArcSet::from_arc(branch_arc(D2, &a("1/6"), 2));
        let pre = c_r.preimage(D2);
        assert_eq!(
            pre,
            ArcSet::from_arcs(vec![Arc::closed(a("7/24"), &a("13/24")), Arc::closed(a("19/24"), &a("1/24"))])
        );
        assert_eq!(pre.image(D2), c_r);
        assert!(c_r.image(D2).is_full());
    }

    #[test]
    fn expand_and_complement() {
        let s = ArcSet::from_arcs(vec![Arc::closed(a("1/8"), &a("1/4")), Arc::closed(a("7/8"), &a("15/16"))]);
        assert_eq!(
            s.expand(&q(1, 16)),
            ArcSet::from_arcs(vec![Arc::closed(a("1/16"), &a("5/16")), Arc::closed(a("13/16"), &a("0"))])
        );
        // Neighbourhoods that meet merge into one arc.
        assert_eq!(s.expand(&q(3, 32)), ArcSet::from_arc(Arc::closed(a("25/32"), &a("11/32"))));
        assert!(s.expand(&q(1, 2)).is_full());
        assert_eq!(
            s.complement_closure(),
            ArcSet::from_arcs(vec![Arc::closed(a("1/4"), &a("7/8")), Arc::closed(a("15/16"), &a("1/8"))])
        );
        assert_eq!(s.complement_closure().complement_closure(), s);
        assert!(ArcSet::empty().complement_closure().is_full());
        assert!(ArcSet::full().complement_closure().is_empty());
    }

    #[test]
    fn cyclic_predicate_reports_ties() {
        assert_eq!(cyclic_position(&a("0"), &a("0"), &a("1/2")), CyclicPosition::AtStart);
        assert_eq!(cyclic_position(&a("0"), &a("1/2"), &a("1/2")), CyclicPosition::AtEnd);
        assert_eq!(cyclic_position(&a("3/4"), &a("0"), &a("1/4")), CyclicPosition::Inside);
        assert_eq!(cyclic_position(&a("1/4"), &a("0"), &a("3/4")), CyclicPosition::Outside);
    }
}
