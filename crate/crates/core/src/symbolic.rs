//! Word-level machinery: itineraries, kneading sequences, duplicating
//! intervals, rare sets, strong-recurrence certificates, weak
//! pre-periodicity, legal words and the φ walk.

use std::collections::{BTreeSet, HashMap};

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::circle::{hop, letter_of, Angle, Degree, Q};
use crate::error::{Error, Result};
use crate::word::{EventuallyPeriodicWord, Letter, LetterSource, Word};

/// Forward orbit of a rational angle up to its first repetition. Returns
/// the distinct orbit points and the index where the cycle starts.
pub fn orbit(d: Degree, x: &Angle) -> (Vec<Angle>, usize) {
    let mut pts = Vec::new();
    let mut index: HashMap<Angle, usize> = HashMap::new();
    let mut cur = x.clone();
    loop {
        if let Some(&i) = index.get(&cur) {
            return (pts, i);
        }
        index.insert(cur.clone(), pts.len());
        pts.push(cur.clone());
        cur = hop(d, &cur);
    }
}

/// The full itinerary of a rational point, as an eventually periodic word.
pub fn itinerary_full(d: Degree, alpha: &Angle, x: &Angle) -> EventuallyPeriodicWord {
    let (pts, start) = orbit(d, x);
    let letters: Vec<Letter> = pts.iter().map(|p| letter_of(d, alpha, p)).collect();
    EventuallyPeriodicWord::new(Word(letters[..start].to_vec()), Word(letters[start..].to_vec()))
        .expect("orbit cycle is nonempty")
}

/// The kneading sequence I^α(α).
pub fn kneading(d: Degree, alpha: &Angle) -> EventuallyPeriodicWord {
    itinerary_full(d, alpha, alpha)
}

/// The first `n` letters of I^α(x).
pub fn itinerary(d: Degree, alpha: &Angle, x: &Angle, n: usize) -> Word {
    let mut out = Vec::with_capacity(n);
    let mut cur = x.clone();
    for _ in 0..n {
        out.push(letter_of(d, alpha, &cur));
        cur = hop(d, &cur);
    }
    Word(out)
}

/// Is g|[a,b] a copy of ν|[1, b−a+1] away from the excused indices? A star
/// on either side matches anything.
pub fn is_duplicating(g: &Word, a: usize, b: usize, excused: &BTreeSet<usize>, nu: &dyn LetterSource) -> bool {
    if b + 1 < a {
        return true;
    }
    (a..=b).all(|i| {
        excused.contains(&i)
            || match nu.letter(i - a + 1) {
                Some(l) => g.at(i).matches(l),
                None => false,
            }
    })
}

/// Length of the longest match of g starting at `a` against ν, skipping the
/// excused indices.
fn match_len(g: &Word, a: usize, excused: &BTreeSet<usize>, nu: &dyn LetterSource) -> usize {
    let mut len = 0;
    while a + len <= g.len() {
        let i = a + len;
        let ok = excused.contains(&i) || nu.letter(len + 1).is_some_and(|l| g.at(i).matches(l));
        if !ok {
            break;
        }
        len += 1;
    }
    len
}

/// Every window [i, i+D] holds at most three indices.
pub fn is_rare(r: &BTreeSet<usize>, d: usize) -> bool {
    let v: Vec<usize> = r.iter().copied().collect();
    v.windows(4).all(|w| w[3] - w[0] > d)
}

/// A D-rare index set.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RareSet {
    indices: BTreeSet<usize>,
    d: usize,
}

impl RareSet {
    pub fn new(indices: BTreeSet<usize>, d: usize) -> Result<RareSet> {
        if !is_rare(&indices, d) {
            return Err(Error::InvalidInput(format!("{indices:?} is not {d}-rare")));
        }
        Ok(RareSet { indices, d })
    }

    pub fn empty(d: usize) -> RareSet {
        RareSet {
            indices: BTreeSet::new(),
            d,
        }
    }

    pub fn indices(&self) -> &BTreeSet<usize> {
        &self.indices
    }

    pub fn window(&self) -> usize {
        self.d
    }
}

/// Indices of g covered by an R-duplicating interval that either reaches the
/// last letter or is longer than D.
pub fn duplicating_digits(g: &Word, d: usize, r: &BTreeSet<usize>, nu: &dyn LetterSource) -> BTreeSet<usize> {
    let n = g.len();
    let mut out = BTreeSet::new();
    for a in 1..=n {
        let len = match_len(g, a, r, nu);
        if len == 0 {
            continue;
        }
        let b = a + len - 1;
        if len > d || b == n {
            out.extend(a..=b);
        }
    }
    out
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SrMode {
    /// Enumerate all rare sets up to the exhaustive cap, then greedy.
    Exhaustive,
    Greedy,
}

#[derive(Copy, Clone, Debug, Serialize, Deserialize)]
pub struct SrOptions {
    pub exhaustive_cap: usize,
    pub max_evaluations: u64,
}

impl Default for SrOptions {
    fn default() -> Self {
        SrOptions {
            exhaustive_cap: 12,
            max_evaluations: 5_000_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SrCertificate {
    pub d: usize,
    #[serde(with = "crate::report::rational")]
    pub tau: BigRational,
    pub n: usize,
    pub rare: RareSet,
    pub duplicating_count: usize,
}

impl SrCertificate {
    /// Recheck the certificate from scratch against ν.
    pub fn verify(&self, nu: &dyn LetterSource) -> bool {
        if self.n <= self.d || !is_rare(self.rare.indices(), self.d) {
            return false;
        }
        if self.rare.indices().iter().any(|&i| i == 0 || i > self.n) {
            return false;
        }
        let Some(g) = prefix_of(nu, self.n) else {
            return false;
        };
        let count = duplicating_digits(&g, self.d, self.rare.indices(), nu).len();
        count == self.duplicating_count && exceeds(count, &self.tau, self.n)
    }
}

fn prefix_of(nu: &dyn LetterSource, n: usize) -> Option<Word> {
    (1..=n).map(|i| nu.letter(i)).collect::<Option<Vec<_>>>().map(Word)
}

fn exceeds(count: usize, tau: &Q, n: usize) -> bool {
    Q::from_integer(BigInt::from(count)) > tau * Q::from_integer(BigInt::from(n))
}

/// Search for a strong-recurrence certificate at (D, τ). `Ok(None)` means
/// nothing was found up to `n_max`; it is not a proof of absence.
pub fn sr_search(
    nu: &dyn LetterSource,
    d: usize,
    tau: &Q,
    n_max: usize,
    mode: SrMode,
    opts: SrOptions,
) -> Result<Option<SrCertificate>> {
    if d < 1 {
        return Err(Error::InvalidInput("D must be at least 1".into()));
    }
    let zero = Q::from_integer(0.into());
    let one = Q::from_integer(1.into());
    if *tau <= zero || *tau >= one {
        return Err(Error::InvalidInput("tau must lie in (0, 1)".into()));
    }
    let mut evaluated: u64 = 0;
    let mut best = (0usize, 0usize);
    for n in d + 1..=n_max {
        let Some(g) = prefix_of(nu, n) else {
            break;
        };
        let exhaustive = mode == SrMode::Exhaustive && n <= opts.exhaustive_cap;
        let found = if exhaustive {
            exhaustive_rare(&g, d, tau, nu, &mut evaluated, opts.max_evaluations, &mut best)?
        } else {
            greedy_rare(&g, d, tau, nu, &mut evaluated, opts.max_evaluations, &mut best)?
        };
        if let Some(r) = found {
            let count = duplicating_digits(&g, d, &r, nu).len();
            let cert = SrCertificate {
                d,
                tau: tau.clone(),
                n,
                rare: RareSet { indices: r, d },
                duplicating_count: count,
            };
            debug_assert!(cert.verify(nu));
            return Ok(Some(cert));
        }
    }
    Ok(None)
}

fn charge(evaluated: &mut u64, limit: u64, best: (usize, usize)) -> Result<()> {
    *evaluated += 1;
    if *evaluated > limit {
        return Err(Error::BudgetExceeded {
            evaluated: *evaluated - 1,
            best_n: best.0,
            best_count: best.1,
        });
    }
    Ok(())
}

fn note_best(best: &mut (usize, usize), n: usize, count: usize) {
    if count > best.1 {
        *best = (n, count);
    }
}

/// Rare subsets of [n] in order of size, then lexicographically.
fn exhaustive_rare(
    g: &Word,
    d: usize,
    tau: &Q,
    nu: &dyn LetterSource,
    evaluated: &mut u64,
    limit: u64,
    best: &mut (usize, usize),
) -> Result<Option<BTreeSet<usize>>> {
    let n = g.len();
    for size in 0..=n {
        let mut chosen = Vec::new();
        if let Some(r) = subsets_of_size(g, d, tau, nu, 1, size, &mut chosen, evaluated, limit, best)? {
            return Ok(Some(r));
        }
    }
    Ok(None)
}

#[allow(clippy::too_many_arguments)]
fn subsets_of_size(
    g: &Word,
    d: usize,
    tau: &Q,
    nu: &dyn LetterSource,
    from: usize,
    remaining: usize,
    chosen: &mut Vec<usize>,
    evaluated: &mut u64,
    limit: u64,
    best: &mut (usize, usize),
) -> Result<Option<BTreeSet<usize>>> {
    let n = g.len();
    if remaining == 0 {
        charge(evaluated, limit, *best)?;
        let r: BTreeSet<usize> = chosen.iter().copied().collect();
        let count = duplicating_digits(g, d, &r, nu).len();
        note_best(best, n, count);
        return Ok(exceeds(count, tau, n).then_some(r));
    }
    for i in from..=n {
        if n + 1 - i < remaining {
            break;
        }
        // Adding i keeps the set rare iff the three indices before it are
        // spread beyond D.
        if chosen.len() >= 3 && i - chosen[chosen.len() - 3] <= d {
            continue;
        }
        chosen.push(i);
        let r = subsets_of_size(g, d, tau, nu, i + 1, remaining - 1, chosen, evaluated, limit, best)?;
        chosen.pop();
        if r.is_some() {
            return Ok(r);
        }
    }
    Ok(None)
}

/// Greedy: repeatedly excuse the alignment mismatch that gains the most
/// duplicating digits while keeping the set rare.
fn greedy_rare(
    g: &Word,
    d: usize,
    tau: &Q,
    nu: &dyn LetterSource,
    evaluated: &mut u64,
    limit: u64,
    best: &mut (usize, usize),
) -> Result<Option<BTreeSet<usize>>> {
    let n = g.len();
    let mut r = BTreeSet::new();
    charge(evaluated, limit, *best)?;
    let mut count = duplicating_digits(g, d, &r, nu).len();
    note_best(best, n, count);
    loop {
        if exceeds(count, tau, n) {
            return Ok(Some(r));
        }
        let mut candidates = BTreeSet::new();
        for a in 1..=n {
            let len = match_len(g, a, &r, nu);
            if a + len <= n {
                candidates.insert(a + len);
            }
        }
        let mut step: Option<(usize, usize)> = None;
        for c in candidates {
            let mut trial = r.clone();
            trial.insert(c);
            if !is_rare(&trial, d) {
                continue;
            }
            charge(evaluated, limit, *best)?;
            let k = duplicating_digits(g, d, &trial, nu).len();
            if k > count && step.is_none_or(|(_, bk)| k > bk) {
                step = Some((c, k));
            }
        }
        match step {
            Some((c, k)) => {
                r.insert(c);
                count = k;
                note_best(best, n, count);
            }
            None => return Ok(None),
        }
    }
}

/// A witness that ν[m + k·j] is one constant letter for all j ≥ 0.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WppWitness {
    pub m: usize,
    pub k: usize,
    pub letter: Letter,
}

/// Least (k, m) with m an offset inside the periodic tail such that the
/// progression m, m+k, m+2k, … carries one letter.
pub fn weak_preperiodicity(nu: &EventuallyPeriodicWord) -> WppWitness {
    let pre = nu.preperiod_len();
    let p = nu.period_len();
    for k in 1..=p {
        for m in pre + 1..=pre + p {
            let letter = nu.at(m);
            // The tail has period p, so p steps of size k visit every residue
            // the progression can reach.
            if (0..p).all(|j| nu.at(m + k * j) == letter) {
                return WppWitness { m, k, letter };
            }
        }
    }
    unreachable!("k = period length always works")
}

/// Re-verify a witness over `extra` letters past the preperiod.
pub fn verify_wpp(nu: &EventuallyPeriodicWord, w: &WppWitness, extra: usize) -> bool {
    let mut pos = w.m;
    while pos <= nu.preperiod_len() + extra {
        if nu.at(pos) != w.letter {
            return false;
        }
        pos += w.k;
    }
    true
}

/// All (m, k) ≤ bounds whose in-range progression positions carry a single
/// letter. The letter is `None` when no position is in range.
pub fn finite_wpp_scan(prefix: &Word, m_max: usize, k_max: usize) -> Vec<(usize, usize, Option<Letter>)> {
    let mut out = Vec::new();
    for m in 1..=m_max {
        for k in 1..=k_max {
            let mut letter: Option<Letter> = None;
            let mut ok = true;
            let mut pos = m;
            while pos <= prefix.len() {
                let l = prefix.at(pos);
                match letter {
                    None => letter = Some(l),
                    Some(x) if x != l => {
                        ok = false;
                        break;
                    }
                    _ => {}
                }
                pos += k;
            }
            if ok {
                out.push((m, k, letter));
            }
        }
    }
    out
}

/// The legal word of g: scanning k = |g|−1 down to 1, star u[k] whenever the
/// already-processed suffix u|[k+1, |g|] matches ν|[1, |g|−k] at every
/// position where neither side is a star. The last letter is never starred.
pub fn legal(g: &Word, nu: &dyn LetterSource) -> Word {
    let n = g.len();
    let mut u = g.clone();
    for k in (1..n).rev() {
        let matches = (k + 1..=n).all(|i| nu.letter(i - k).is_some_and(|l| u.at(i).matches(l)));
        if matches {
            u.set(k, Letter::STAR);
        }
    }
    u
}

/// Hypothesis of the truncation property: legal(gt)[|g|] is not a star.
pub fn truncation_hypothesis(g: &Word, t: &Word, nu: &dyn LetterSource) -> bool {
    if g.is_empty() {
        return true;
    }
    !legal(&g.concat(t), nu).at(g.len()).is_star()
}

/// Conclusion of the truncation property: legal(gt)|[1,|g|] = legal(g).
pub fn truncation_holds(g: &Word, t: &Word, nu: &dyn LetterSource) -> bool {
    legal(&g.concat(t), nu).prefix(g.len()) == legal(g, nu)
}

/// The containment form: every star of legal(gt)|[1,|g|] is also a star of
/// legal(g), so C(legal(gt)) ⊆ C(legal(g)). Holds whenever
/// [`truncation_hypothesis`] does, by induction from the right end of g.
pub fn truncation_refines(g: &Word, t: &Word, nu: &dyn LetterSource) -> bool {
    let long = legal(&g.concat(t), nu);
    let short = legal(g, nu);
    (1..=g.len()).all(|k| !long.at(k).is_star() || short.at(k).is_star())
}

/// Length of the longest run of one letter at the start of ν (capped).
pub fn constant_prefix_run(nu: &dyn LetterSource, cap: usize) -> usize {
    let Some(first) = nu.letter(1) else {
        return 0;
    };
    let mut k = 1;
    while k < cap && nu.letter(k + 1) == Some(first) {
        k += 1;
    }
    k
}

/// φ(i) for i = 0..=k, where k is the constant-prefix run length of ν:
/// the number of stars immediately before position |u|+1 in
/// legal((uu)|[1, 2|u|−i]).
pub fn phi_graph(u: &Word, nu: &dyn LetterSource) -> Result<Vec<usize>> {
    if !u.is_star_free() {
        return Err(Error::InvalidInput("u must be star-free".into()));
    }
    let k = constant_prefix_run(nu, u.len() + 1);
    if k >= u.len() {
        return Err(Error::InvalidInput(format!(
            "need k < |u|, got k = {k} and |u| = {}",
            u.len()
        )));
    }
    let uu = u.concat(u);
    let n = u.len();
    Ok((0..=k)
        .map(|i| {
            let v = legal(&uu.prefix(2 * n - i), nu);
            (1..=n).rev().take_while(|&p| v.at(p).is_star()).count()
        })
        .collect())
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
    fn ep(s: &str) -> EventuallyPeriodicWord {
        s.parse().unwrap()
    }
    fn set(v: &[usize]) -> BTreeSet<usize> {
        v.iter().copied().collect()
    }
    const D2: Degree = Degree::TWO;

    #[test]
    fn kneading_examples() {
        assert_eq!(kneading(D2, &a("1/6")), ep("LL(RL)"));
        assert_eq!(kneading(D2, &a("1/6")).to_string(), "LL(RL)");
        assert_eq!(kneading(D2, &a("2/7")), ep("(LL*)"));
        assert_eq!(kneading(D2, &a("0")), ep("(*)"));
    }

    #[test]
    fn itinerary_examples() {
        assert_eq!(itinerary(D2, &a("2/7"), &a("1/5"), 3), w("LLR"));
        assert_eq!(itinerary(D2, &a("1/6"), &a("1/12"), 3), w("*LL"));
        assert_eq!(itinerary(D2, &a("1/6"), &a("1/12"), 0), Word::empty());
    }

    #[test]
    fn duplicating_examples() {
        let nu = ep("(LR)");
        assert!(is_duplicating(&w("LRLR"), 1, 4, &set(&[]), &nu));
        assert!(!is_duplicating(&w("LRLR"), 2, 3, &set(&[2]), &nu));
        assert!(is_duplicating(&w("LRLR"), 3, 2, &set(&[]), &nu));
    }

    #[test]
    fn rare_examples() {
        assert!(is_rare(&set(&[]), 5));
        assert!(!is_rare(&set(&[1, 2, 3, 4]), 3));
        assert!(is_rare(&set(&[1, 5, 9]), 3));
    }

    #[test]
    fn duplicating_digit_examples() {
        let nu = ep("(L)");
        assert_eq!(duplicating_digits(&w("LLLL"), 2, &set(&[]), &nu), set(&[1, 2, 3, 4]));
        let nu = ep("LR(RL)");
        let g = nu.prefix(10);
        assert_eq!(duplicating_digits(&g, 5, &set(&[]), &nu), (1..=10).collect());
        // RRRR never copies ν = (L): no interval at all.
        assert!(duplicating_digits(&w("RRRR"), 1, &set(&[]), &ep("(L)")).is_empty());
    }

    #[test]
    fn sr_constant_word() {
        let nu = ep("(L)");
        let cert = sr_search(&nu, 10, &Q::new(9.into(), 10.into()), 20, SrMode::Exhaustive, SrOptions::default())
            .unwrap()
            .unwrap();
        assert_eq!(cert.n, 11);
        assert!(cert.rare.indices().is_empty());
        assert_eq!(cert.duplicating_count, 11);
        assert!(cert.verify(&nu));
    }

    #[test]
    fn wpp_examples() {
        let r = weak_preperiodicity(&ep("LL(RL)"));
        assert_eq!((r.m, r.k, r.letter), (3, 2, Letter::R));
        let r = weak_preperiodicity(&ep("(LR)"));
        assert_eq!((r.m, r.k, r.letter), (1, 2, Letter::L));
        let r = weak_preperiodicity(&ep("(L)"));
        assert_eq!((r.m, r.k, r.letter), (1, 1, Letter::L));
    }

    #[test]
    fn finite_wpp_examples() {
        let s = finite_wpp_scan(&w("LRLR"), 2, 2);
        assert!(s.contains(&(1, 2, Some(Letter::L))));
        assert!(s.contains(&(2, 2, Some(Letter::R))));
        assert!(!s.contains(&(1, 1, Some(Letter::L))));
        let s = finite_wpp_scan(&Word::empty(), 2, 3);
        assert_eq!(s.len(), 6);
        assert!(s.iter().all(|t| t.2.is_none()));
    }

    #[test]
    fn legal_examples() {
        let nu = ep("(LL*)");
        assert_eq!(legal(&w("RLL"), &nu), w("**L"));
        assert_eq!(legal(&w("LLR"), &nu), w("LLR"));
        assert_eq!(legal(&Word::empty(), &nu), Word::empty());
    }

    #[test]
    fn truncation_examples() {
        let nu = ep("(LL*)");
        // legal(LLR) = LLR keeps digit 2, yet legal(LL) = *L because
        // alpha = 2/7 lies in C(L). The equality form fails here; the
        // containment form holds.
        assert!(truncation_hypothesis(&w("LL"), &w("R"), &nu));
        assert_eq!(legal(&w("LLR"), &nu), w("LLR"));
        assert_eq!(legal(&w("LL"), &nu), w("*L"));
        assert!(!truncation_holds(&w("LL"), &w("R"), &nu));
        assert!(truncation_refines(&w("LL"), &w("R"), &nu));
        assert!(truncation_holds(&w("RLL"), &Word::empty(), &nu));
    }

    #[test]
    fn phi_examples() {
        let nu = ep("(LR)");
        assert_eq!(legal(&w("RLRL"), &nu), w("*L*L"));
        assert_eq!(phi_graph(&w("RL"), &nu).unwrap()[0], 0);
    }
}
