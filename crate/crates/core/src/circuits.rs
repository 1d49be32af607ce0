//! Nice gluing circuits over discrete measures: energies, the (N, C, r)
//! conditions, the three-case pullback, boundary-leaf and ill-definedness
//! formulas, periodic gluing pairs and Cantor pair measures.
//!
//! Arcs of a circuit are kept in counterclockwise order
//! A'_1, A_1, A'_2, A_2, …, A'_n, A_n. The gap between A'_k and A_k is the
//! pair gap; the pairing φ_k glues A_k to A'_{k+1} across the next gap.

use std::collections::BTreeSet;

use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::circle::{apply_word, branch, hop, hop_n, letter_of, star_points, strictly_between, Angle, Arc, ArcSet, Closure, Degree, Q};
use crate::error::{Error, Result};
use crate::gcs::{covering_ck, star_link, CoveringCK, Leaf, StarLink};
use crate::lamination::{component_of, cylinder_set, equivalent, link_preimage, EncounterTrace, GluingLink};
use crate::symbolic::{itinerary_full, kneading};
use crate::word::{EventuallyPeriodicWord, Letter, Word};

const D2: Degree = Degree::TWO;

fn half() -> Q {
    Q::new(1.into(), 2.into())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Atom {
    pub at: Angle,
    #[serde(with = "crate::report::rational")]
    pub weight: Q,
}

/// A probability measure with finitely many atoms on a closed arc. Atoms
/// are stored in counterclockwise order from the start of the support.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiscreteMeasure {
    pub support: Arc,
    pub atoms: Vec<Atom>,
}

impl DiscreteMeasure {
    /// Atoms must be listed in counterclockwise order inside the support.
    pub fn new(support: Arc, atoms: Vec<Atom>) -> Result<DiscreteMeasure> {
        if atoms.is_empty() {
            return Err(Error::DegenerateSupport);
        }
        let total: Q = atoms.iter().map(|a| a.weight.clone()).sum();
        if !total.is_one() || atoms.iter().any(|a| a.weight <= Q::zero()) {
            return Err(Error::InvalidInput("weights must be positive and sum to 1".into()));
        }
        let mut prev: Option<Q> = None;
        for a in &atoms {
            if !support.contains(&a.at) {
                return Err(Error::InvalidInput(format!("atom {} outside support", a.at)));
            }
            let off = support.start().ccw_to(&a.at);
            if prev.as_ref().is_some_and(|p| *p >= off) {
                return Err(Error::InvalidInput("atoms not in counterclockwise order".into()));
            }
            prev = Some(off);
        }
        Ok(DiscreteMeasure { support, atoms })
    }

    /// Uniform weights on sorted points.
    pub fn uniform(support: Arc, points: Vec<Angle>) -> Result<DiscreteMeasure> {
        let w = Q::new(1.into(), points.len().into());
        Self::new(support, points.into_iter().map(|at| Atom { at, weight: w.clone() }).collect())
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn offset(&self, x: &Angle) -> Q {
        self.support.start().ccw_to(x)
    }

    pub fn mass(&self, keep: &[bool]) -> Q {
        self.atoms
            .iter()
            .zip(keep)
            .filter(|(_, k)| **k)
            .map(|(a, _)| a.weight.clone())
            .sum()
    }

    /// Restrict to the kept atoms and renormalize. Returns the new measure
    /// and the old-to-new index map.
    pub fn restrict(&self, keep: &[bool]) -> Result<(DiscreteMeasure, Vec<Option<usize>>)> {
        let m = self.mass(keep);
        if m.is_zero() {
            return Err(Error::DegenerateSupport);
        }
        let mut map = vec![None; self.atoms.len()];
        let mut atoms = Vec::new();
        for (i, a) in self.atoms.iter().enumerate() {
            if keep[i] {
                map[i] = Some(atoms.len());
                atoms.push(Atom {
                    at: a.at.clone(),
                    weight: &a.weight / &m,
                });
            }
        }
        Ok((DiscreteMeasure::new(self.support.clone(), atoms)?, map))
    }

    /// The copy under branch `i`, optionally on a prescribed support.
    fn branch_copy(&self, alpha: &Angle, i: usize, support: Option<Arc>) -> Result<DiscreteMeasure> {
        let support = match support {
            Some(s) => s,
            None => {
                if self.support.contains(alpha) {
                    return Err(Error::OnBoundary);
                }
                Arc::with_len(branch(D2, alpha, i, self.support.start())?, self.support.measure() * half(), Closure::Closed)
            }
        };
        let atoms = self
            .atoms
            .iter()
            .map(|a| {
                Ok(Atom {
                    at: branch(D2, alpha, i, &a.at)?,
                    weight: a.weight.clone(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        DiscreteMeasure::new(support, atoms)
    }
}

/// Σ_{i≠j} w_i w_j (−ln(|x_i − x_j| / diam)) with positions measured along
/// the support arc and diam its length. Exactly invariant under affine maps.
pub fn rescaled_energy(mu: &DiscreteMeasure) -> Result<f64> {
    let len = mu.support.measure().clone();
    if mu.atoms.len() < 2 || len.is_zero() {
        return Err(Error::DegenerateSupport);
    }
    let pos: Vec<Q> = mu.atoms.iter().map(|a| mu.offset(&a.at) / &len).collect();
    let w: Vec<f64> = mu.atoms.iter().map(|a| a.weight.to_f64().unwrap_or(0.0)).collect();
    let mut e = 0.0;
    for i in 0..pos.len() {
        for j in i + 1..pos.len() {
            let d = (&pos[j] - &pos[i]).to_f64().unwrap_or(0.0);
            e += 2.0 * w[i] * w[j] * -d.ln();
        }
    }
    Ok(e)
}

/// One pair (A'_k, A_k) and the pairing φ_k from the atoms of A_k to the
/// atoms of A'_{k+1}.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArcPair {
    pub a_prime: DiscreteMeasure,
    pub a: DiscreteMeasure,
    pub pairing: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircuitParams {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "C")]
    pub c: f64,
    #[serde(with = "crate::report::rational")]
    pub r: Q,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GluingCircuit {
    pub alpha: Angle,
    pub pairs: Vec<ArcPair>,
    pub params: CircuitParams,
    /// The gluing link the circuit is meant to live in, when tracked.
    pub link: Option<ArcSet>,
}

impl GluingCircuit {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Arcs in counterclockwise order A'_1, A_1, A'_2, A_2, ….
    pub fn arcs(&self) -> Vec<&Arc> {
        self.pairs.iter().flat_map(|p| [&p.a_prime.support, &p.a.support]).collect()
    }

    /// diam(A'_k ∪ A_k), measured along the hull arc from A'_k to A_k.
    pub fn pair_diameter(&self, k: usize) -> Q {
        let p = &self.pairs[k];
        p.a_prime.support.start().ccw_to(&p.a.support.end())
    }

    /// x lies strictly inside some pair gap.
    pub fn is_around(&self, x: &Angle) -> bool {
        self.pairs
            .iter()
            .any(|p| strictly_between(&p.a_prime.support.end(), x, p.a.support.start()))
    }

    fn rotated(&self, j: usize) -> Vec<ArcPair> {
        let mut v = self.pairs.clone();
        v.rotate_left(j);
        v
    }

    fn next(&self, k: usize) -> usize {
        (k + 1) % self.pairs.len()
    }
}

/// Outcome of the (1)–(3) checks, with the first violating pair (1-based).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircuitReport {
    pub structure: Option<String>,
    pub diameter: Option<usize>,
    pub energy: Option<usize>,
    pub lamination: Option<usize>,
    pub max_energy: f64,
    /// Measures with a single atom, whose energy cannot be evaluated.
    pub unresolved_energy: Vec<usize>,
}

impl CircuitReport {
    pub fn passed(&self) -> bool {
        self.structure.is_none() && self.diameter.is_none() && self.energy.is_none() && self.lamination.is_none()
    }
}

fn q_of_f64(x: f64) -> Q {
    BigRational::from_float(x).unwrap_or_else(Q::zero)
}

fn structure_violation(c: &GluingCircuit) -> Option<String> {
    let n = c.pairs.len();
    if n == 0 {
        return Some("no pairs".into());
    }
    if c.params.n < n {
        return Some(format!("{n} pairs exceed N = {}", c.params.n));
    }
    let arcs = c.arcs();
    let mut total = Q::zero();
    for (i, a) in arcs.iter().enumerate() {
        let b = arcs[(i + 1) % arcs.len()];
        let gap = a.end().ccw_to(b.start());
        if gap.is_zero() {
            return Some(format!("arcs {} and {} touch or overlap", i + 1, i + 2));
        }
        total += a.measure() + gap;
    }
    if !total.is_one() {
        return Some("arcs are not in counterclockwise order".into());
    }
    if let Some(link) = &c.link {
        for (i, a) in arcs.iter().enumerate() {
            if !ArcSet::from_arc((*a).clone()).is_subset_of(link) {
                return Some(format!("arc {} leaves the link", i + 1));
            }
        }
    }
    for k in 0..n {
        let p = &c.pairs[k];
        let target = &c.pairs[c.next(k)].a_prime;
        if p.pairing.len() != p.a.len() || target.len() != p.a.len() {
            return Some(format!("pairing {} is not a bijection", k + 1));
        }
        let mut seen = vec![false; target.len()];
        for (i, &j) in p.pairing.iter().enumerate() {
            if j >= target.len() || seen[j] || p.a.atoms[i].weight != target.atoms[j].weight {
                return Some(format!("pairing {} does not preserve weights", k + 1));
            }
            seen[j] = true;
        }
        if p.pairing.windows(2).any(|w| w[1] >= w[0]) {
            return Some(format!("pairing {} is not orientation reversing", k + 1));
        }
    }
    None
}

/// Check Def. (1)–(3) and the structural invariants of a circuit.
pub fn circuit_check(c: &GluingCircuit) -> CircuitReport {
    let mut rep = CircuitReport {
        structure: structure_violation(c),
        diameter: None,
        energy: None,
        lamination: None,
        max_energy: 0.0,
        unresolved_energy: Vec::new(),
    };
    if rep.structure.is_some() {
        return rep;
    }
    let cq = q_of_f64(c.params.c);
    for k in 0..c.pairs.len() {
        let p = &c.pairs[k];
        let dm = c.pair_diameter(k);
        let ok = dm <= &c.params.r * &cq
            && &dm * &cq >= c.params.r
            && p.a.support.measure() * &cq >= dm
            && p.a_prime.support.measure() * &cq >= dm;
        if !ok && rep.diameter.is_none() {
            rep.diameter = Some(k + 1);
        }
        for mu in [&p.a_prime, &p.a] {
            match rescaled_energy(mu) {
                Ok(e) => {
                    rep.max_energy = rep.max_energy.max(e);
                    if e > c.params.c && rep.energy.is_none() {
                        rep.energy = Some(k + 1);
                    }
                }
                Err(_) => rep.unresolved_energy.push(k + 1),
            }
        }
        let target = &c.pairs[c.next(k)].a_prime;
        let glued = p
            .pairing
            .iter()
            .enumerate()
            .all(|(i, &j)| equivalent(D2, &c.alpha, &p.a.atoms[i].at, &target.atoms[j].at, None).is_yes());
        if !glued && rep.lamination.is_none() {
            rep.lamination = Some(k + 1);
        }
    }
    rep
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ArcRole {
    A,
    APrime,
}

/// Where α sits relative to a circuit (indices 1-based).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "case", rename_all = "snake_case")]
pub enum CircuitLocation {
    Outside,
    /// Between A_j and A'_{j+1}.
    BetweenPair { j: usize },
    /// Between A'_j and A_j.
    InsideGap { j: usize },
    InsideArc { which: ArcRole, j: usize },
}

pub fn classify_alpha(c: &GluingCircuit) -> Result<CircuitLocation> {
    let alpha = &c.alpha;
    for (k, p) in c.pairs.iter().enumerate() {
        for (mu, which) in [(&p.a_prime, ArcRole::APrime), (&p.a, ArcRole::A)] {
            let s = &mu.support;
            if s.start() == alpha || s.end() == *alpha || mu.atoms.iter().any(|a| &a.at == alpha) {
                return Err(Error::OnBoundary);
            }
            if s.contains(alpha) {
                return Ok(CircuitLocation::InsideArc { which, j: k + 1 });
            }
        }
    }
    if let Some(link) = &c.link {
        if !link.contains(alpha) {
            return Ok(CircuitLocation::Outside);
        }
    }
    for (k, p) in c.pairs.iter().enumerate() {
        if strictly_between(&p.a_prime.support.end(), alpha, p.a.support.start()) {
            return Ok(CircuitLocation::InsideGap { j: k + 1 });
        }
    }
    for (k, p) in c.pairs.iter().enumerate() {
        let next = &c.pairs[c.next(k)].a_prime.support;
        if strictly_between(&p.a.support.end(), alpha, next.start()) {
            return Ok(CircuitLocation::BetweenPair { j: k + 1 });
        }
    }
    Err(Error::OnBoundary)
}

/// Diagnostics of one pullback step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PullbackStep {
    pub location: CircuitLocation,
    /// The cut point carried to the glued arc by the monotone extension.
    pub alpha_prime: Option<Angle>,
    /// Mass kept by the restriction in the arc case.
    #[serde(with = "opt_rational")]
    pub kept_mass: Option<Q>,
}

mod opt_rational {
    use super::Q;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &Option<Q>, s: S) -> Result<S::Ok, S::Error> {
        match x {
            Some(v) => s.serialize_some(&crate::report::rational::to_string(v)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Q>, D::Error> {
        let v: Option<String> = Option::deserialize(d)?;
        v.map(|s| crate::report::rational::parse(&s).ok_or_else(|| serde::de::Error::custom("bad rational")))
            .transpose()
    }
}

fn other(i: usize) -> usize {
    3 - i
}

/// The preimage component of an arc containing α that holds the kept atoms
/// after branch `i`: kept atoms before α land at the far end of branch i,
/// kept atoms after α at its near end.
fn lifted_support(alpha: &Angle, arc: &Arc, i: usize, kept_before: bool) -> Result<Arc> {
    let b = if kept_before { i } else { other(i) };
    Ok(Arc::with_len(branch(D2, alpha, b, arc.start())?, arc.measure() * half(), Closure::Closed))
}

fn copy_pair(alpha: &Angle, p: &ArcPair, i: usize, sa: Option<Arc>, sap: Option<Arc>) -> Result<ArcPair> {
    Ok(ArcPair {
        a_prime: p.a_prime.branch_copy(alpha, i, sap)?,
        a: p.a.branch_copy(alpha, i, sa)?,
        pairing: p.pairing.clone(),
    })
}

type Overrides = Option<(ArcRole, Arc)>;

fn single_copy(alpha: &Angle, pairs: &[ArcPair], s: usize, first: [Overrides; 1]) -> Result<Vec<ArcPair>> {
    pairs
        .iter()
        .enumerate()
        .map(|(k, p)| {
            let (sa, sap) = match (&first[0], k) {
                (Some((ArcRole::A, arc)), 0) => (Some(arc.clone()), None),
                (Some((ArcRole::APrime, arc)), 0) => (None, Some(arc.clone())),
                _ => (None, None),
            };
            copy_pair(alpha, p, s, sa, sap)
        })
        .collect()
}

/// Both branch copies joined across the two stars. The first pair is the
/// one whose gap or arc holds α; `over[b-1]` overrides the support of that
/// arc in the branch-b copy.
fn two_copy(alpha: &Angle, pairs: &[ArcPair], role: Option<ArcRole>, over: [Option<Arc>; 2]) -> Result<Vec<ArcPair>> {
    let n = pairs.len();
    let get = |b: usize, role_here: ArcRole, k: usize| -> Option<Arc> {
        if k == 0 && role == Some(role_here) {
            over[b - 1].clone()
        } else {
            None
        }
    };
    let copy_a = |b: usize, k: usize| pairs[k].a.branch_copy(alpha, b, get(b, ArcRole::A, k));
    let copy_ap = |b: usize, k: usize| pairs[k].a_prime.branch_copy(alpha, b, get(b, ArcRole::APrime, k));
    let mut out = Vec::with_capacity(2 * n);
    for (b, first_ap) in [(1usize, 2usize), (2, 1)] {
        for k in 0..n {
            out.push(ArcPair {
                a_prime: if k == 0 { copy_ap(first_ap, 0)? } else { copy_ap(b, k)? },
                a: copy_a(b, k)?,
                pairing: pairs[k].pairing.clone(),
            });
        }
    }
    Ok(out)
}

/// Interpolate the image of a cut point through a monotone pairing. `src`
/// and `dst` are offsets in the source and target arcs; anchors are the
/// arc ends, reversed.
fn interpolate(src: &[Q], dst: &[Q], src_len: &Q, dst_len: &Q, cut: &Q) -> Q {
    let mut xs = vec![Q::zero()];
    let mut ys = vec![dst_len.clone()];
    for (a, b) in src.iter().zip(dst) {
        if a > xs.last().unwrap() && b < ys.last().unwrap() {
            xs.push(a.clone());
            ys.push(b.clone());
        }
    }
    if src_len > xs.last().unwrap() && ys.last().unwrap() > &Q::zero() {
        xs.push(src_len.clone());
        ys.push(Q::zero());
    }
    for w in 0..xs.len().saturating_sub(1) {
        if *cut >= xs[w] && *cut <= xs[w + 1] {
            let t = (cut - &xs[w]) / (&xs[w + 1] - &xs[w]);
            return &ys[w] + t * (&ys[w + 1] - &ys[w]);
        }
    }
    ys.last().unwrap().clone()
}

fn restrict_glued(
    pairs: &mut [ArcPair],
    src: usize,
    keep_src: &[bool],
) -> Result<()> {
    // Restrict A_src to keep_src and A'_{src+1} to the image.
    let n = pairs.len();
    let dst = (src + 1) % n;
    let mut keep_dst = vec![false; pairs[dst].a_prime.len()];
    for (i, &j) in pairs[src].pairing.iter().enumerate() {
        if keep_src[i] {
            keep_dst[j] = true;
        }
    }
    let (na, ma) = pairs[src].a.restrict(keep_src)?;
    let (nap, mb) = pairs[dst].a_prime.restrict(&keep_dst)?;
    let pairing: Vec<usize> = pairs[src]
        .pairing
        .iter()
        .enumerate()
        .filter(|(i, _)| keep_src[*i])
        .map(|(_, &j)| mb[j].expect("kept image"))
        .collect();
    debug_assert_eq!(pairing.len(), ma.iter().filter(|m| m.is_some()).count());
    pairs[src].a = na;
    pairs[dst].a_prime = nap;
    pairs[src].pairing = pairing;
    Ok(())
}

/// One step of the copying construction: pull the circuit back through
/// h, following the branch `side` that holds the next orbit point.
pub fn pullback_circuit(c: &GluingCircuit, side: usize) -> Result<(GluingCircuit, PullbackStep)> {
    if side != 1 && side != 2 {
        return Err(Error::InvalidInput(format!("side {side} is not a branch")));
    }
    let alpha = &c.alpha;
    let loc = classify_alpha(c)?;
    let n = c.pairs.len();
    let params = &c.params;
    let r2 = &params.r * half();
    let mut alpha_prime = None;
    let mut kept_mass = None;
    let (pairs, new_params) = match loc {
        CircuitLocation::Outside | CircuitLocation::BetweenPair { .. } => (
            single_copy(alpha, &c.pairs, side, [None])?,
            CircuitParams { n: params.n, c: params.c, r: r2 },
        ),
        CircuitLocation::InsideGap { j } => (
            two_copy(alpha, &c.rotated(j - 1), None, [None, None])?,
            CircuitParams { n: 2 * params.n, c: params.c, r: r2 },
        ),
        CircuitLocation::InsideArc { which: ArcRole::A, j } => {
            let mut pairs = c.rotated(j - 1);
            let a1 = pairs[0].a.clone();
            let dst = &pairs[1 % n].a_prime;
            let cut = a1.offset(alpha);
            let before: Vec<bool> = a1.atoms.iter().map(|a| a1.offset(&a.at) < cut).collect();
            if pairs[0].pairing.windows(2).any(|w| w[1] >= w[0]) {
                return Err(Error::NonMonotonePairing);
            }
            let src_off: Vec<Q> = a1.atoms.iter().map(|a| a1.offset(&a.at)).collect();
            let dst_off: Vec<Q> = pairs[0].pairing.iter().map(|&j| dst.offset(&dst.atoms[j].at)).collect();
            let ap = interpolate(&src_off, &dst_off, a1.support.measure(), dst.support.measure(), &cut);
            alpha_prime = Some(dst.support.start().add(&ap));
            let m = a1.mass(&before);
            kept_mass = Some(m.clone());
            if m >= half() {
                restrict_glued(&mut pairs, 0, &before)?;
                let g = lifted_support(alpha, &a1.support, side, true)?;
                (
                    single_copy(alpha, &pairs, side, [Some((ArcRole::A, g))])?,
                    CircuitParams { n: params.n, c: 4.0 * params.c, r: r2 },
                )
            } else {
                let after: Vec<bool> = before.iter().map(|b| !b).collect();
                kept_mass = Some(Q::one() - m);
                restrict_glued(&mut pairs, 0, &after)?;
                let over = [lifted_support(alpha, &a1.support, 1, false)?, lifted_support(alpha, &a1.support, 2, false)?];
                (
                    two_copy(alpha, &pairs, Some(ArcRole::A), over.map(Some))?,
                    CircuitParams { n: 2 * params.n, c: 4.0 * params.c, r: r2 },
                )
            }
        }
        CircuitLocation::InsideArc { which: ArcRole::APrime, j } => {
            let mut pairs = c.rotated(j - 1);
            let ap1 = pairs[0].a_prime.clone();
            let last = n - 1;
            let src = pairs[last].a.clone();
            let cut = ap1.offset(alpha);
            let after: Vec<bool> = ap1.atoms.iter().map(|a| ap1.offset(&a.at) > cut).collect();
            if pairs[last].pairing.windows(2).any(|w| w[1] >= w[0]) {
                return Err(Error::NonMonotonePairing);
            }
            // Inverse pairing read as a monotone map from A'_1 back to A_n.
            let mut inv = vec![0usize; ap1.len()];
            for (i, &j) in pairs[last].pairing.iter().enumerate() {
                inv[j] = i;
            }
            let src_off: Vec<Q> = ap1.atoms.iter().map(|a| ap1.offset(&a.at)).collect();
            let dst_off: Vec<Q> = inv.iter().map(|&i| src.offset(&src.atoms[i].at)).collect();
            let ap = interpolate(&src_off, &dst_off, ap1.support.measure(), src.support.measure(), &cut);
            alpha_prime = Some(src.support.start().add(&ap));
            let m = ap1.mass(&after);
            let keep_for = |keep_ap: &[bool]| -> Vec<bool> { pairs[last].pairing.iter().map(|&j| keep_ap[j]).collect() };
            if m >= half() {
                kept_mass = Some(m);
                let ks = keep_for(&after);
                restrict_glued(&mut pairs, last, &ks)?;
                let g = lifted_support(alpha, &ap1.support, side, false)?;
                (
                    single_copy(alpha, &pairs, side, [Some((ArcRole::APrime, g))])?,
                    CircuitParams { n: params.n, c: 4.0 * params.c, r: r2 },
                )
            } else {
                kept_mass = Some(Q::one() - m);
                let before: Vec<bool> = after.iter().map(|b| !b).collect();
                let ks = keep_for(&before);
                restrict_glued(&mut pairs, last, &ks)?;
                let over = [lifted_support(alpha, &ap1.support, 1, true)?, lifted_support(alpha, &ap1.support, 2, true)?];
                (
                    two_copy(alpha, &pairs, Some(ArcRole::APrime), over.map(Some))?,
                    CircuitParams { n: 2 * params.n, c: 4.0 * params.c, r: r2 },
                )
            }
        }
    };
    let link = match &c.link {
        Some(l) => {
            let comps = link_preimage(D2, alpha, &GluingLink::unverified(l.clone()))?;
            Some(if comps.len() == 1 { comps[0].set().clone() } else { comps[side - 1].set().clone() })
        }
        None => None,
    };
    Ok((
        GluingCircuit {
            alpha: alpha.clone(),
            pairs,
            params: new_params,
            link,
        },
        PullbackStep {
            location: loc,
            alpha_prime,
            kept_mass,
        },
    ))
}

/// Log line of iterate_pullback.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepLog {
    /// Orbit index of the point the new circuit surrounds.
    pub index: usize,
    pub step: PullbackStep,
    pub params: CircuitParams,
    pub pairs: usize,
    pub around: bool,
    pub check: CircuitReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PullbackRun {
    pub circuit: GluingCircuit,
    pub trace: EncounterTrace,
    pub steps: Vec<StepLog>,
}

/// Pull a circuit around hop^n(x) back along the orbit of x, n times.
pub fn iterate_pullback(c: &GluingCircuit, x: &Angle, n: usize) -> Result<PullbackRun> {
    let alpha = &c.alpha;
    let mut orbit = Vec::with_capacity(n + 1);
    let mut cur = x.clone();
    for _ in 0..=n {
        orbit.push(cur.clone());
        cur = hop(D2, &cur);
    }
    if !c.is_around(&orbit[n]) {
        return Err(Error::InvalidInput("circuit is not around hop^n(x)".into()));
    }
    let mut circ = c.clone();
    let mut hits = Vec::new();
    let mut steps = Vec::with_capacity(n);
    let mut link = c.link.clone().map(GluingLink::unverified);
    for j in 1..=n {
        let i = n - j + 1;
        let target = &orbit[i - 1];
        let side = letter_of(D2, alpha, target).index().ok_or(Error::OnBoundary)?;
        let hit = match &link {
            Some(l) => l.contains(alpha),
            None => false,
        };
        let (next, step) = pullback_circuit(&circ, side)?;
        let hit = hit
            || (link.is_none()
                && matches!(step.location, CircuitLocation::InsideGap { .. } | CircuitLocation::InsideArc { .. }));
        if hit {
            hits.push(i);
        }
        if let Some(l) = &link {
            let comps = link_preimage(D2, alpha, l)?;
            link = Some(component_of(&comps, target)?);
        }
        circ = next;
        steps.push(StepLog {
            index: i - 1,
            step,
            params: circ.params.clone(),
            pairs: circ.len(),
            around: circ.is_around(target),
            check: circuit_check(&circ),
        });
    }
    hits.sort_unstable();
    let count = hits.len();
    Ok(PullbackRun {
        circuit: circ,
        trace: EncounterTrace {
            x: x.clone(),
            n,
            hits,
            count,
        },
        steps,
    })
}

/// The boundary leaves l_{g|[1,i]} of C(g): those i for which g|[i+2,|g|]
/// copies the start of the kneading sequence.
pub fn boundary_leaves(alpha: &Angle, g: &Word) -> Result<Vec<Leaf>> {
    let nu = kneading(D2, alpha);
    let n = g.len();
    let mut out = Vec::new();
    for i in 0..n {
        let tail = n - i - 1;
        let dup = (1..=tail).all(|t| g.at(i + 1 + t) == nu.at(t));
        if dup {
            out.push(Leaf::new(alpha, &g.prefix(i))?);
        }
    }
    Ok(out)
}

/// Endpoints of the arcs of C(g).
pub fn cylinder_boundary(alpha: &Angle, g: &Word) -> Result<BTreeSet<Angle>> {
    Ok(cylinder_set(D2, alpha, g)?.endpoints().into_iter().collect())
}

/// {hop^i(α) : g|[|g|−i+1, |g|] = ν|[1, i]}, i < |g|. A full match
/// only lands the last branch on α, which is still a value.
pub fn ill_defined_points(alpha: &Angle, g: &Word) -> BTreeSet<Angle> {
    let nu = kneading(D2, alpha);
    let n = g.len();
    (0..n)
        .filter(|&i| (1..=i).all(|t| g.at(n - i + t) == nu.at(t)))
        .map(|i| hop_n(D2, alpha, i))
        .collect()
}

/// The orbit points hop^i(α), i ≤ |g|, where evaluating g̃ fails.
pub fn observed_failures(alpha: &Angle, g: &Word) -> BTreeSet<Angle> {
    (0..=g.len())
        .map(|i| hop_n(D2, alpha, i))
        .filter(|t| apply_word(D2, alpha, g, t).is_err())
        .collect()
}

/// A glued pair of periodic points with itinerary g^∞.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GluingPair {
    pub x: Angle,
    pub y: Angle,
    pub word: Word,
    /// The m of the cylinder C(ℓ·ν|[1,m]) the word came from.
    pub level: usize,
}

/// The gap next to ★_side outside C_*, its two target points and the
/// letter of the semicircle holding it.
pub struct PairTargets {
    pub gap: Arc,
    pub near: Angle,
    pub far: Angle,
    pub letter: Letter,
}

pub fn pair_targets(alpha: &Angle, star: &StarLink, side: usize) -> Result<PairTargets> {
    let stars = star_points(D2, alpha);
    let s = stars[side - 1].clone();
    let (gap, far) = match &star.b {
        None => {
            let o = stars[other(side) - 1].clone();
            (Arc::closed(s.clone(), &o), o)
        }
        Some((b1, b2)) => {
            let b = if side == 1 { b1.clone() } else { b2.clone() };
            let fwd = Arc::closed(s.clone(), &b);
            if star.link.contains_interior(&fwd.midpoint()) {
                (Arc::closed(b.clone(), &s), b)
            } else {
                (fwd, b)
            }
        }
    };
    let letter = letter_of(D2, alpha, &gap.midpoint());
    if letter.is_star() {
        return Err(Error::Undetermined("gap midpoint is a star".into()));
    }
    Ok(PairTargets { gap, near: s, far, letter })
}

/// Fixed point of w̃ reached by iterating from `seed`, verified exactly.
fn fixed_point_from(alpha: &Angle, w: &Word, seed: &Angle) -> Option<Angle> {
    let p: num_bigint::BigInt = num_traits::pow(num_bigint::BigInt::from(2), w.len()) - 1;
    let pq = Q::from_integer(p.clone());
    let mut t = seed.clone();
    for _ in 0..6 {
        t = apply_word(D2, alpha, w, &t).ok()?;
        let j = (t.value() * &pq + half()).floor().to_integer();
        let cand = Angle::new(Q::new(j, p.clone()));
        if apply_word(D2, alpha, w, &cand).ok().as_ref() == Some(&cand) {
            return Some(cand);
        }
    }
    None
}

/// Search budget for the periodic gluing pair search.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PairSearch {
    pub count: usize,
    /// Largest m tried.
    pub max_level: usize,
    /// Depth for deciding the class of α.
    pub class_depth: usize,
}

impl Default for PairSearch {
    fn default() -> Self {
        PairSearch {
            count: 4,
            max_level: 22,
            class_depth: 40,
        }
    }
}

/// Glued pairs of periodic points approaching ★_side and its partner, from
/// the boundary leaves of C(ℓ·ν|[1,m]) for increasing m.
pub fn periodic_gluing_pairs(alpha: &Angle, side: usize, opts: &PairSearch) -> Result<Vec<GluingPair>> {
    let star = star_link(alpha, opts.class_depth)?;
    periodic_gluing_pairs_with(alpha, &star, side, opts)
}

pub fn periodic_gluing_pairs_with(alpha: &Angle, star: &StarLink, side: usize, opts: &PairSearch) -> Result<Vec<GluingPair>> {
    let nu = kneading(D2, alpha);
    let tg = pair_targets(alpha, star, side)?;
    let mut out: Vec<GluingPair> = Vec::new();
    let mut tried = Vec::new();
    for m in 1..=opts.max_level {
        if out.len() >= opts.count {
            break;
        }
        let mut g0 = Word(vec![tg.letter]);
        g0 = g0.concat(&nu.prefix(m));
        let leaves = match boundary_leaves(alpha, &g0) {
            Ok(l) => l,
            Err(_) => continue,
        };
        let score = |l: &Leaf| -> Q {
            let (a, b) = (&l.endpoints.0, &l.endpoints.1);
            let s1 = a.dist(&tg.near).max(b.dist(&tg.far));
            let s2 = b.dist(&tg.near).max(a.dist(&tg.far));
            s1.min(s2)
        };
        let best = leaves.iter().filter(|l| !l.word.is_empty()).min_by(|a, b| score(a).cmp(&score(b)));
        let Some(leaf) = best else { continue };
        let g = leaf.word.clone();
        if 2 * g.len() > 60 {
            break;
        }
        let gg = g.concat(&g);
        let x = fixed_point_from(alpha, &gg, &tg.near);
        let y = fixed_point_from(alpha, &gg, &tg.far);
        let (Some(x), Some(y)) = (x, y) else {
            tried.push(format!("m={m}: no fixed point for {g}"));
            continue;
        };
        let per = EventuallyPeriodicWord::periodic(g.clone())?;
        let ok = x != y
            && tg.gap.contains(&x)
            && tg.gap.contains(&y)
            && !star.link.contains(&x)
            && !star.link.contains(&y)
            && itinerary_full(D2, alpha, &x) == per
            && itinerary_full(D2, alpha, &y) == per
            && equivalent(D2, alpha, &x, &y, None).is_yes();
        if !ok {
            tried.push(format!("m={m}: pair for {g} rejected"));
            continue;
        }
        if out.iter().any(|p| p.x == x && p.y == y) {
            continue;
        }
        out.push(GluingPair { x, y, word: g, level: m });
    }
    if out.is_empty() {
        return Err(Error::SearchExhausted(format!(
            "no gluing pair up to level {}: {}",
            opts.max_level,
            tried.join("; ")
        )));
    }
    Ok(out)
}

/// Two glued Cantor measures from the IFS {g̃_k², g̃_j²} and the pairing
/// of their atoms by branch word.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CantorPair {
    pub x_side: DiscreteMeasure,
    pub y_side: DiscreteMeasure,
    /// Atom i of `x_side` is glued to atom pairing[i] of `y_side`.
    pub pairing: Vec<usize>,
}

fn hull_support(a: &Angle, b: &Angle, pts: &[Angle]) -> Result<Arc> {
    let fwd = Arc::closed(a.clone(), b);
    let bwd = Arc::closed(b.clone(), a);
    let (first, second) = if fwd.measure() <= bwd.measure() { (fwd, bwd) } else { (bwd, fwd) };
    for s in [first, second] {
        if pts.iter().all(|p| s.contains(p)) {
            return Ok(s);
        }
    }
    Err(Error::DegenerateSupport)
}

pub fn cantor_pair_measures(alpha: &Angle, pk: &GluingPair, pj: &GluingPair, depth: usize) -> Result<CantorPair> {
    if depth == 0 {
        return Err(Error::InvalidInput("depth must be positive".into()));
    }
    let maps = [pk.word.concat(&pk.word), pj.word.concat(&pj.word)];
    let n = 1usize << depth;
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for code in 0..n {
        let mut x = pk.x.clone();
        let mut y = pk.y.clone();
        for bit in 0..depth {
            let f = &maps[(code >> bit) & 1];
            x = apply_word(D2, alpha, f, &x)?;
            y = apply_word(D2, alpha, f, &y)?;
        }
        xs.push(x);
        ys.push(y);
    }
    let sx = hull_support(&pk.x, &pj.x, &xs)?;
    let sy = hull_support(&pk.y, &pj.y, &ys)?;
    let mut ox: Vec<usize> = (0..n).collect();
    ox.sort_by_key(|&i| sx.start().ccw_to(&xs[i]));
    let mut oy: Vec<usize> = (0..n).collect();
    oy.sort_by_key(|&i| sy.start().ccw_to(&ys[i]));
    let mut pos_y = vec![0usize; n];
    for (rank, &i) in oy.iter().enumerate() {
        pos_y[i] = rank;
    }
    let x_side = DiscreteMeasure::uniform(sx, ox.iter().map(|&i| xs[i].clone()).collect())?;
    let y_side = DiscreteMeasure::uniform(sy, oy.iter().map(|&i| ys[i].clone()).collect())?;
    let pairing = ox.iter().map(|&i| pos_y[i]).collect();
    Ok(CantorPair { x_side, y_side, pairing })
}

/// Knobs for nice_circuit_for.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CircuitOptions {
    pub search: PairSearch,
    pub cantor_depth: usize,
}

impl Default for CircuitOptions {
    fn default() -> Self {
        CircuitOptions {
            search: PairSearch::default(),
            cantor_depth: 3,
        }
    }
}

/// The glued arcs built for one boundary leaf.
struct LeafArcs {
    x_side: DiscreteMeasure,
    y_side: DiscreteMeasure,
    pairing: Vec<usize>,
}

fn push_measure(alpha: &Angle, g: &Word, mu: &DiscreteMeasure) -> Result<(DiscreteMeasure, Vec<usize>)> {
    let scale = Q::new(1.into(), num_traits::pow(num_bigint::BigInt::from(2), g.len()));
    let start = apply_word(D2, alpha, g, mu.support.start())?;
    let support = Arc::with_len(start, mu.support.measure() * scale, Closure::Closed);
    if apply_word(D2, alpha, g, &mu.support.end())? != support.end() {
        return Err(Error::IllDefined);
    }
    let pts: Vec<Angle> = mu.atoms.iter().map(|a| apply_word(D2, alpha, g, &a.at)).collect::<Result<_>>()?;
    let mut order: Vec<usize> = (0..pts.len()).collect();
    order.sort_by_key(|&i| support.start().ccw_to(&pts[i]));
    let atoms = order
        .iter()
        .map(|&i| Atom {
            at: pts[i].clone(),
            weight: mu.atoms[i].weight.clone(),
        })
        .collect();
    let mut rank = vec![0usize; pts.len()];
    for (r, &i) in order.iter().enumerate() {
        rank[i] = r;
    }
    Ok((DiscreteMeasure::new(support, atoms)?, rank))
}

fn leaf_arcs(
    cov: &CoveringCK,
    g: &Word,
    link: &ArcSet,
    pairs: &[Vec<GluingPair>; 2],
    depth: usize,
) -> Result<LeafArcs> {
    let alpha = &cov.alpha;
    let zone = cov.bad[g].expand(&cov.delta);
    let mut last_err = Error::SearchExhausted(format!("no glued pairs near the leaf of {g}"));
    for side_pairs in pairs {
        // Deepest pairs first: they sit closest to the star class.
        for a in (0..side_pairs.len()).rev() {
            for b in (0..a).rev() {
                let cp = match cantor_pair_measures(alpha, &side_pairs[a], &side_pairs[b], depth) {
                    Ok(c) => c,
                    Err(e) => {
                        last_err = e;
                        continue;
                    }
                };
                let pushed = push_measure(alpha, g, &cp.x_side).and_then(|x| Ok((x, push_measure(alpha, g, &cp.y_side)?)));
                let ((mx, rx), (my, ry)) = match pushed {
                    Ok(v) => v,
                    Err(e) => {
                        last_err = e;
                        continue;
                    }
                };
                let fits = |m: &DiscreteMeasure| {
                    let s = ArcSet::from_arc(m.support.clone());
                    s.is_subset_of(link) && s.is_subset_of(&zone)
                };
                if !(fits(&mx) && fits(&my)) {
                    continue;
                }
                let mut pairing = vec![0usize; cp.pairing.len()];
                for (i, &j) in cp.pairing.iter().enumerate() {
                    pairing[rx[i]] = ry[j];
                }
                return Ok(LeafArcs {
                    x_side: mx,
                    y_side: my,
                    pairing,
                });
            }
        }
    }
    Err(last_err)
}

/// A nice gluing circuit around x inside C^K(x), built from glued Cantor
/// pairs pushed next to each boundary leaf.
pub fn nice_circuit_for(alpha: &Angle, k: usize, x: &Angle, opts: &CircuitOptions) -> Result<GluingCircuit> {
    let cov = covering_ck(alpha, k, opts.search.class_depth)?;
    let pairs = [
        periodic_gluing_pairs_with(alpha, &cov.star, 1, &opts.search).unwrap_or_default(),
        periodic_gluing_pairs_with(alpha, &cov.star, 2, &opts.search).unwrap_or_default(),
    ];
    nice_circuit_with(&cov, &pairs, x, opts)
}

/// As nice_circuit_for, reusing a covering and the pair searches.
pub fn nice_circuit_with(cov: &CoveringCK, pairs: &[Vec<GluingPair>; 2], x: &Angle, opts: &CircuitOptions) -> Result<GluingCircuit> {
    let alpha = &cov.alpha;
    let (level, r) = cov.assignment(x)?;
    let part = cov.partition(level);
    let link = part.links[r].set().clone();
    // (measure, leaf index, is the x side)
    let mut arcs: Vec<(DiscreteMeasure, usize, bool)> = Vec::new();
    let mut glue: Vec<Vec<usize>> = Vec::new();
    for (idx, g) in part.boundary[r].iter().enumerate() {
        let la = leaf_arcs(cov, g, &link, pairs, opts.cantor_depth)
            .map_err(|e| Error::Undetermined(format!("boundary leaf {g}: {e}")))?;
        arcs.push((la.x_side, idx, true));
        arcs.push((la.y_side, idx, false));
        glue.push(la.pairing);
    }
    if arcs.is_empty() {
        return Err(Error::Undetermined("link has no boundary leaves".into()));
    }
    arcs.sort_by(|a, b| a.0.support.start().cmp(b.0.support.start()));
    let m = arcs.len();
    // Pair gaps run inside the link, glue gaps cross a boundary leaf.
    let gap_inside = |i: usize| {
        let a = &arcs[i].0.support;
        let b = &arcs[(i + 1) % m].0.support;
        link.contains(&Arc::closed(a.end(), b.start()).midpoint())
    };
    let shift = (0..m)
        .find(|&i| gap_inside(i))
        .ok_or_else(|| Error::Undetermined("no pair gap inside the link".into()))?;
    arcs.rotate_left(shift);
    let n = m / 2;
    let mut out = Vec::with_capacity(n);
    for kk in 0..n {
        let a = &arcs[2 * kk + 1];
        let ap_next = &arcs[(2 * kk + 2) % m];
        if a.1 != ap_next.1 || a.2 == ap_next.2 {
            return Err(Error::Undetermined("glued arcs are not adjacent".into()));
        }
        let pairing = if a.2 { glue[a.1].clone() } else { invert(&glue[a.1]) };
        out.push(ArcPair {
            a_prime: arcs[2 * kk].0.clone(),
            a: a.0.clone(),
            pairing,
        });
    }
    let mut c = GluingCircuit {
        alpha: alpha.clone(),
        pairs: out,
        params: CircuitParams { n, c: 1.0, r: Q::one() },
        link: Some(link),
    };
    c.params = minimal_params(&c)?;
    if !c.is_around(x) {
        return Err(Error::Undetermined(format!("circuit is not around {x}")));
    }
    let rep = circuit_check(&c);
    if !rep.passed() {
        return Err(Error::Undetermined(format!("constructed circuit fails its check: {rep:?}")));
    }
    Ok(c)
}

fn invert(p: &[usize]) -> Vec<usize> {
    let mut inv = vec![0usize; p.len()];
    for (i, &j) in p.iter().enumerate() {
        inv[j] = i;
    }
    inv
}

/// The smallest C (rounded up) and matching r for which (1) and (2) hold.
pub fn minimal_params(c: &GluingCircuit) -> Result<CircuitParams> {
    let n = c.pairs.len();
    let diams: Vec<Q> = (0..n).map(|k| c.pair_diameter(k)).collect();
    let dmax = diams.iter().max().cloned().unwrap_or_else(Q::zero);
    let dmin = diams.iter().min().cloned().unwrap_or_else(Q::zero);
    if dmin.is_zero() {
        return Err(Error::DegenerateSupport);
    }
    let r = dmax.clone();
    let mut need = (&dmax / &dmin).to_f64().unwrap_or(f64::INFINITY);
    for (k, p) in c.pairs.iter().enumerate() {
        for mu in [&p.a, &p.a_prime] {
            need = need.max((&diams[k] / mu.support.measure()).to_f64().unwrap_or(f64::INFINITY));
            if let Ok(e) = rescaled_energy(mu) {
                need = need.max(e);
            }
        }
    }
    let cval = (need.max(1.0) * 100.0).ceil() / 100.0 + 0.01;
    Ok(CircuitParams { n, c: cval, r })
}
