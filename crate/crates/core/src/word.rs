//! Words over the branch alphabet {L_1, .., L_d} plus the star symbol.
//!
//! Letters are stored as small integers: 0 is the star, `i >= 1` is branch
//! `L_i`. For degree two the branches print as `L` and `R`; the star prints
//! as `*`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Letter(pub u8);

impl Letter {
    pub const STAR: Letter = Letter(0);
    pub const L: Letter = Letter(1);
    pub const R: Letter = Letter(2);

    pub fn branch(i: usize) -> Letter {
        assert!((1..=255).contains(&i), "branch index out of range");
        Letter(i as u8)
    }

    pub fn is_star(self) -> bool {
        self.0 == 0
    }

    /// Branch index in `1..=d`; `None` for the star.
    pub fn index(self) -> Option<usize> {
        if self.is_star() {
            None
        } else {
            Some(self.0 as usize)
        }
    }

    /// Wildcard comparison: a star on either side matches anything.
    pub fn matches(self, other: Letter) -> bool {
        self.is_star() || other.is_star() || self == other
    }

    pub fn to_char(self) -> char {
        match self.0 {
            0 => '*',
            1 => 'L',
            2 => 'R',
            k if k <= 9 => (b'0' + k) as char,
            _ => '?',
        }
    }

    pub fn from_char(c: char) -> Result<Letter> {
        match c {
            '*' | '★' => Ok(Letter::STAR),
            'L' | 'l' => Ok(Letter::L),
            'R' | 'r' => Ok(Letter::R),
            '1'..='9' => Ok(Letter(c as u8 - b'0')),
            _ => Err(Error::InvalidInput(format!("bad letter {c:?}"))),
        }
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_char())
    }
}

impl Serialize for Letter {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Letter {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Letter, D::Error> {
        let s = String::deserialize(d)?;
        let mut it = s.chars();
        match (it.next(), it.next()) {
            (Some(c), None) => Letter::from_char(c).map_err(serde::de::Error::custom),
            _ => Err(serde::de::Error::custom("expected a single letter")),
        }
    }
}

/// A finite word. Indexing through [`Word::at`] is 1-based.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word(pub Vec<Letter>);

impl Word {
    pub fn empty() -> Word {
        Word(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// The letter w[i], 1-based.
    pub fn at(&self, i: usize) -> Letter {
        self.0[i - 1]
    }

    pub fn set(&mut self, i: usize, l: Letter) {
        self.0[i - 1] = l;
    }

    /// w|[a, b], 1-based and inclusive; empty when b < a.
    pub fn sub(&self, a: usize, b: usize) -> Word {
        if b < a {
            return Word::empty();
        }
        Word(self.0[a - 1..b].to_vec())
    }

    pub fn prefix(&self, n: usize) -> Word {
        Word(self.0[..n.min(self.len())].to_vec())
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Word(v)
    }

    pub fn push(&mut self, l: Letter) {
        self.0.push(l);
    }

    pub fn is_star_free(&self) -> bool {
        self.0.iter().all(|l| !l.is_star())
    }

    pub fn letters(&self) -> impl Iterator<Item = Letter> + '_ {
        self.0.iter().copied()
    }

    /// All star-free words of length `n` over `d` branches, in lexicographic order.
    pub fn all_star_free(d: usize, n: usize) -> Vec<Word> {
        let mut out = vec![Word::empty()];
        for _ in 0..n {
            let mut next = Vec::with_capacity(out.len() * d);
            for w in &out {
                for i in 1..=d {
                    let mut v = w.clone();
                    v.push(Letter::branch(i));
                    next.push(v);
                }
            }
            out = next;
        }
        out
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in &self.0 {
            write!(f, "{l}")?;
        }
        Ok(())
    }
}

impl FromStr for Word {
    type Err = Error;
    fn from_str(s: &str) -> Result<Word> {
        let s = s.trim();
        if s == "ε" || s == "-" {
            return Ok(Word::empty());
        }
        s.chars().map(Letter::from_char).collect::<Result<Vec<_>>>().map(Word)
    }
}

impl Serialize for Word {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Word {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Word, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Anything that can hand out letters at 1-based positions. Finite words
/// return `None` past their end.
pub trait LetterSource {
    fn letter(&self, i: usize) -> Option<Letter>;
}

impl LetterSource for Word {
    fn letter(&self, i: usize) -> Option<Letter> {
        if i >= 1 && i <= self.len() {
            Some(self.at(i))
        } else {
            None
        }
    }
}

impl LetterSource for EventuallyPeriodicWord {
    fn letter(&self, i: usize) -> Option<Letter> {
        Some(self.at(i))
    }
}

/// `prefix (period)^∞` in canonical form: the period is primitive and the
/// preperiod is the shortest one whose length is a multiple of the period
/// length. `L(LR)` is therefore written `LL(RL)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct EventuallyPeriodicWord {
    preperiod: Word,
    period: Word,
}

impl EventuallyPeriodicWord {
    pub fn new(preperiod: Word, period: Word) -> Result<Self> {
        if period.is_empty() {
            return Err(Error::InvalidInput("period must be nonempty".into()));
        }
        let mut pre = preperiod.0;
        let mut per = primitive_root(&period.0);
        // Roll the period backwards into the preperiod while they agree.
        while let Some(&last) = pre.last() {
            if last == *per.last().unwrap() {
                pre.pop();
                per.rotate_right(1);
            } else {
                break;
            }
        }
        // Align the preperiod to a multiple of the period length.
        let p = per.len();
        let extra = (p - pre.len() % p) % p;
        for _ in 0..extra {
            pre.push(per[0]);
            per.rotate_left(1);
        }
        Ok(EventuallyPeriodicWord {
            preperiod: Word(pre),
            period: Word(per),
        })
    }

    pub fn periodic(period: Word) -> Result<Self> {
        Self::new(Word::empty(), period)
    }

    pub fn preperiod(&self) -> &Word {
        &self.preperiod
    }

    pub fn period(&self) -> &Word {
        &self.period
    }

    pub fn preperiod_len(&self) -> usize {
        self.preperiod.len()
    }

    pub fn period_len(&self) -> usize {
        self.period.len()
    }

    /// Letter at 1-based position `i`.
    pub fn at(&self, i: usize) -> Letter {
        assert!(i >= 1, "positions are 1-based");
        let m = self.preperiod.len();
        if i <= m {
            self.preperiod.at(i)
        } else {
            self.period.0[(i - m - 1) % self.period.len()]
        }
    }

    pub fn prefix(&self, n: usize) -> Word {
        Word((1..=n).map(|i| self.at(i)).collect())
    }

    pub fn contains_star(&self) -> bool {
        self.preperiod.letters().chain(self.period.letters()).any(Letter::is_star)
    }
}

fn primitive_root(v: &[Letter]) -> Vec<Letter> {
    let n = v.len();
    for p in 1..=n {
        if n % p == 0 && (p..n).all(|i| v[i] == v[i - p]) {
            return v[..p].to_vec();
        }
    }
    v.to_vec()
}

impl fmt::Display for EventuallyPeriodicWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.preperiod, self.period)
    }
}

impl FromStr for EventuallyPeriodicWord {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let open = s
            .find('(')
            .ok_or_else(|| Error::InvalidInput(format!("expected prefix(period), got {s:?}")))?;
        if !s.ends_with(')') {
            return Err(Error::InvalidInput(format!("expected prefix(period), got {s:?}")));
        }
        let pre: Word = s[..open].parse()?;
        let per: Word = s[open + 1..s.len() - 1].parse()?;
        EventuallyPeriodicWord::new(pre, per)
    }
}

impl Serialize for EventuallyPeriodicWord {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for EventuallyPeriodicWord {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_form() {
        let w = EventuallyPeriodicWord::new("LLRL".parse().unwrap(), "RLRL".parse().unwrap()).unwrap();
        assert_eq!(w.to_string(), "LL(RL)");
        let w: EventuallyPeriodicWord = "(LRLR)".parse().unwrap();
        assert_eq!(w.to_string(), "(LR)");
        let w: EventuallyPeriodicWord = "R(LR)".parse().unwrap();
        assert_eq!(w.to_string(), "(RL)");
        let w: EventuallyPeriodicWord = "L(LR)".parse().unwrap();
        assert_eq!(w.to_string(), "LL(RL)");
        let w: EventuallyPeriodicWord = "LRR(L)".parse().unwrap();
        assert_eq!(w.to_string(), "LRR(L)");
    }

    #[test]
    fn indexing() {
        let w: EventuallyPeriodicWord = "LL(RL)".parse().unwrap();
        assert_eq!(w.prefix(7).to_string(), "LLRLRLR");
        let g: Word = "LR*".parse().unwrap();
        assert_eq!(g.at(3), Letter::STAR);
        assert_eq!(g.sub(2, 3).to_string(), "R*");
        assert_eq!(g.sub(3, 2), Word::empty());
    }

    #[test]
    fn star_free_enumeration() {
        let all = Word::all_star_free(2, 3);
        assert_eq!(all.len(), 8);
        assert_eq!(all[0].to_string(), "LLL");
        assert_eq!(all[7].to_string(), "RRR");
    }
}
