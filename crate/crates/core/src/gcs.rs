//! Generalized cylinder sets for degree two: leaves l_u, the partitions
//! GCS_n, legal-word representation, the star link C_*, the C^K covering and
//! digit-fixing checks.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::circle::{
    apply_word, branch, cyclic_position, hop, hop_n, star_points, Angle, Arc, ArcSet, Closure, CyclicPosition, Degree, Q,
};
use crate::error::{Error, Result};
use crate::lamination::{component_of, cylinder, equivalence_class, link_preimage, Covering, GluingLink};
use crate::symbolic::{itinerary, kneading, legal, orbit};
use crate::word::{Letter, Word};

const D2: Degree = Degree::TWO;

/// The geodesic l_u joining ũ(★_1) and ũ(★_2).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Leaf {
    pub word: Word,
    pub endpoints: (Angle, Angle),
}

impl Leaf {
    pub fn new(alpha: &Angle, u: &Word) -> Result<Leaf> {
        let stars = star_points(D2, alpha);
        let eval = |t: &Angle| apply_word(D2, alpha, u, t).map_err(|_| Error::IllDefinedLeaf(u.to_string()));
        Ok(Leaf {
            word: u.clone(),
            endpoints: (eval(&stars[0])?, eval(&stars[1])?),
        })
    }

    /// Chordal length |e^{2πia} − e^{2πib}|.
    pub fn chord_length(&self) -> f64 {
        self.endpoints.0.chord(&self.endpoints.1)
    }
}

/// All leaves l_u with |u| = n.
pub fn leaves(alpha: &Angle, n: usize) -> Result<Vec<Leaf>> {
    Word::all_star_free(2, n).iter().map(|u| Leaf::new(alpha, u)).collect()
}

/// Do the chords ab and cd cross in the open disk? Chords sharing an
/// endpoint do not cross.
pub fn chords_cross(a: &Angle, b: &Angle, c: &Angle, d: &Angle) -> bool {
    if a == c || a == d || b == c || b == d || a == b || c == d {
        return false;
    }
    let side = |x: &Angle| cyclic_position(a, x, b) == CyclicPosition::Inside;
    side(c) != side(d)
}

/// First crossing pair among the leaves, if any. Uses a stack sweep over the
/// sorted endpoints; falls back to the pairwise test when endpoints repeat.
pub fn find_crossing(leaves: &[Leaf]) -> Option<(usize, usize)> {
    let mut pts: Vec<(&Angle, usize)> = Vec::with_capacity(2 * leaves.len());
    for (i, l) in leaves.iter().enumerate() {
        pts.push((&l.endpoints.0, i));
        pts.push((&l.endpoints.1, i));
    }
    pts.sort();
    let repeated = pts.windows(2).any(|w| w[0].0 == w[1].0);
    if repeated {
        for i in 0..leaves.len() {
            for j in i + 1..leaves.len() {
                let (a, b) = (&leaves[i].endpoints.0, &leaves[i].endpoints.1);
                let (c, d) = (&leaves[j].endpoints.0, &leaves[j].endpoints.1);
                if chords_cross(a, b, c, d) {
                    return Some((i, j));
                }
            }
        }
        return None;
    }
    let mut stack: Vec<usize> = Vec::new();
    let mut open = vec![false; leaves.len()];
    for (_, i) in pts {
        if open[i] {
            let top = stack.pop().expect("open leaf on stack");
            if top != i {
                return Some((top.min(i), top.max(i)));
            }
        } else {
            open[i] = true;
            stack.push(i);
        }
    }
    None
}

/// GCS_n: the components cut out by the leaves of depth n, each with its
/// legal word of length n + 1 and the leaf words on its boundary.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GcsPartition {
    pub alpha: Angle,
    pub depth: usize,
    pub links: Vec<GluingLink>,
    pub words: Vec<Word>,
    pub boundary: Vec<Vec<Word>>,
    #[serde(skip)]
    points: Vec<Angle>,
    #[serde(skip)]
    slot_region: Vec<usize>,
}

impl GcsPartition {
    pub fn len(&self) -> usize {
        self.links.len()
    }

    pub fn is_empty(&self) -> bool {
        self.links.is_empty()
    }

    /// Index of the component containing `x`. Leaf endpoints are refused.
    pub fn region_of(&self, x: &Angle) -> Result<usize> {
        let pos = self.points.binary_search(x);
        match pos {
            Ok(_) => Err(Error::AmbiguousAtBoundary),
            Err(0) => Ok(self.slot_region[self.points.len() - 1]),
            Err(k) => Ok(self.slot_region[k - 1]),
        }
    }

    pub fn link_of(&self, x: &Angle) -> Result<(&GluingLink, &Word)> {
        let r = self.region_of(x)?;
        Ok((&self.links[r], &self.words[r]))
    }

    pub fn index_of_word(&self, w: &Word) -> Option<usize> {
        self.words.iter().position(|v| v == w)
    }
}

/// Cut the circle by the leaves of depth n and label every component.
pub fn gcs_partition(alpha: &Angle, n: usize) -> Result<GcsPartition> {
    let ls = leaves(alpha, n)?;
    let nu = kneading(D2, alpha);
    let mut pts: Vec<(Angle, usize)> = Vec::with_capacity(2 * ls.len());
    for (i, l) in ls.iter().enumerate() {
        pts.push((l.endpoints.0.clone(), i));
        pts.push((l.endpoints.1.clone(), i));
    }
    pts.sort();
    if pts.windows(2).any(|w| w[0].0 == w[1].0) {
        return Err(Error::InvalidInput("leaf endpoints collide".into()));
    }
    let m = pts.len();
    let mut first_slot = vec![usize::MAX; ls.len()];
    let mut partner = vec![0usize; m];
    for (k, (_, i)) in pts.iter().enumerate() {
        if first_slot[*i] == usize::MAX {
            first_slot[*i] = k;
        } else {
            partner[k] = first_slot[*i];
            partner[first_slot[*i]] = k;
        }
    }
    let points: Vec<Angle> = pts.iter().map(|(a, _)| a.clone()).collect();
    let slot_arc = |k: usize| Arc::closed(points[k].clone(), &points[(k + 1) % m]);

    let mut slot_region = vec![usize::MAX; m];
    let mut links = Vec::new();
    let mut words = Vec::new();
    let mut boundary = Vec::new();
    for start in 0..m {
        if slot_region[start] != usize::MAX {
            continue;
        }
        let r = links.len();
        let mut arcs = Vec::new();
        let mut bwords = BTreeSet::new();
        let mut cur = start;
        loop {
            slot_region[cur] = r;
            arcs.push(slot_arc(cur));
            let corner = (cur + 1) % m;
            bwords.insert(ls[pts[corner].1].word.clone());
            cur = partner[corner];
            if cur == start {
                break;
            }
            if slot_region[cur] != usize::MAX {
                return Err(Error::InvalidInput("leaves cross".into()));
            }
        }
        let sample = interior_sample(alpha, &arcs[0], n + 1)?;
        let g = itinerary(D2, alpha, &sample, n + 1);
        words.push(legal(&g, &nu));
        links.push(GluingLink::verified(D2, alpha, ArcSet::from_arcs(arcs)));
        boundary.push(bwords.into_iter().collect());
    }
    Ok(GcsPartition {
        alpha: alpha.clone(),
        depth: n,
        links,
        words,
        boundary,
        points,
        slot_region,
    })
}

/// A point strictly inside the arc whose first `n` itinerary digits are
/// star-free.
fn interior_sample(alpha: &Angle, arc: &Arc, n: usize) -> Result<Angle> {
    for k in 2..64i64 {
        for j in 1..k {
            let p = arc.start().add(&(arc.measure() * Q::new(j.into(), k.into())));
            if itinerary(D2, alpha, &p, n).is_star_free() {
                return Ok(p);
            }
        }
    }
    Err(Error::Undetermined("no star-free sample point in region".into()))
}

/// Star letters replaced by L; the result still constrains x correctly
/// because star points lie in both closed semicircles.
fn unstar(w: &Word) -> Word {
    Word(w.letters().map(|l| if l.is_star() { Letter::L } else { l }).collect())
}

/// GCS_n(x) = C(legal(I(x)|[1, n+1])) with its legal word.
pub fn gcs_of_point(alpha: &Angle, n: usize, x: &Angle) -> Result<(GluingLink, Word)> {
    if hop_n(D2, x, n + 1) == *alpha {
        return Err(Error::AmbiguousAtBoundary);
    }
    let nu = kneading(D2, alpha);
    let g = unstar(&itinerary(D2, alpha, x, n + 1));
    let u = legal(&g, &nu);
    let link = cylinder(D2, alpha, &u)?;
    Ok((link, u))
}

/// Compare GCS^{(i)}_n(x), the pullback of GCS_n(hop^i x) along the orbit,
/// with GCS_{n+i}(x).
pub fn gcs_pullback_identity_check(alpha: &Angle, n: usize, i: usize, x: &Angle) -> Result<bool> {
    if hop_n(D2, x, n + i + 1) == *alpha {
        return Err(Error::AmbiguousAtBoundary);
    }
    let mut orbit = Vec::with_capacity(i + 1);
    let mut cur = x.clone();
    for _ in 0..=i {
        orbit.push(cur.clone());
        cur = hop(D2, &cur);
    }
    let (mut link, _) = gcs_of_point(alpha, n, &orbit[i])?;
    for j in (0..i).rev() {
        let comps = link_preimage(D2, alpha, &link)?;
        link = component_of(&comps, &orbit[j])?;
    }
    let (direct, _) = gcs_of_point(alpha, n + i, x)?;
    Ok(link.set() == direct.set())
}

/// The link C_* containing the star class.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StarLink {
    pub link: ArcSet,
    /// The partner of α when [α] = {α, β}.
    pub beta: Option<Angle>,
    /// The points b_1, b_2 ending the arcs ★_i⌢b_i outside C_*.
    pub b: Option<(Angle, Angle)>,
    /// The orientation of α⌢β avoids every forward image of α.
    pub orbit_clear: bool,
}

impl StarLink {
    pub fn is_degenerate(&self) -> bool {
        self.beta.is_none()
    }
}

/// C_* from the class of α, refined to `depth` digits.
pub fn star_link(alpha: &Angle, depth: usize) -> Result<StarLink> {
    let stars = star_points(D2, alpha);
    let class = equivalence_class(D2, alpha, alpha, depth)?;
    if !class.exact {
        return Err(Error::DepthLimited(depth));
    }
    match class.points.len() {
        1 => Ok(StarLink {
            link: ArcSet::from_points(&stars),
            beta: None,
            b: None,
            orbit_clear: true,
        }),
        2 => {
            let beta = class.points.iter().find(|p| *p != alpha).cloned().expect("two points");
            let (orbit, _) = orbit(D2, alpha);
            let forward: Vec<&Angle> = orbit.iter().skip(1).collect();
            let fwd = Arc::closed(alpha.clone(), &beta);
            let bwd = Arc::closed(beta.clone(), alpha);
            let clear = |a: &Arc| forward.iter().all(|p| !a.contains(p) || p == &alpha || *p == &beta);
            let (ab, orbit_clear) = match (clear(&fwd), clear(&bwd)) {
                (true, false) => (fwd, true),
                (false, true) => (bwd, true),
                (c1, c2) => {
                    let shorter = if fwd.measure() <= bwd.measure() { fwd } else { bwd };
                    (shorter, c1 && c2)
                }
            };
            let half = ab.measure() / Q::from_integer(2.into());
            let image_start = |i: usize| -> Result<Angle> {
                if ab.start() == alpha {
                    Ok(stars[i - 1].clone())
                } else {
                    branch(D2, alpha, i, ab.start())
                }
            };
            let c1 = Arc::with_len(image_start(1)?, half.clone(), Closure::Closed);
            let c2 = Arc::with_len(image_start(2)?, half, Closure::Closed);
            let link = ArcSet::from_arcs(vec![c1.clone(), c2.clone()]);
            let mut cls: Vec<Angle> = stars.clone();
            cls.push(c1.start().clone());
            cls.push(c1.end());
            cls.push(c2.start().clone());
            cls.push(c2.end());
            cls.sort();
            cls.dedup();
            let mut b1 = None;
            let mut b2 = None;
            for k in 0..cls.len() {
                let gap = Arc::closed(cls[k].clone(), &cls[(k + 1) % cls.len()]);
                let is_cstar = |c: &Arc| c.start() == gap.start() && c.end() == gap.end();
                if is_cstar(&c1) || is_cstar(&c2) {
                    continue;
                }
                for (i, s) in stars.iter().enumerate() {
                    let other = if gap.start() == s {
                        Some(gap.end())
                    } else if gap.end() == *s {
                        Some(gap.start().clone())
                    } else {
                        None
                    };
                    if let Some(o) = other {
                        if i == 0 {
                            b1 = Some(o);
                        } else {
                            b2 = Some(o);
                        }
                    }
                }
            }
            Ok(StarLink {
                link,
                beta: Some(beta),
                b: b1.zip(b2),
                orbit_clear,
            })
        }
        k => Err(Error::Undetermined(format!("class of alpha has {k} points"))),
    }
}

/// g̃(C_*): C_* pushed through the inverse branches of g.
pub fn star_image(alpha: &Angle, star: &StarLink, g: &Word) -> Result<ArcSet> {
    let scale = Q::new(1.into(), num_bigint::BigInt::from(2).pow(g.len() as u32));
    let mut arcs = Vec::new();
    for a in star.link.arcs() {
        let s = apply_word(D2, alpha, g, a.start())?;
        let img = Arc::with_len(s, a.measure() * &scale, Closure::Closed);
        if !a.measure().is_zero() && apply_word(D2, alpha, g, &a.end())? != img.end() {
            return Err(Error::IllDefined);
        }
        arcs.push(img);
    }
    Ok(ArcSet::from_arcs(arcs))
}

/// A piece of the C^K assignment: points of `set` are assigned the link
/// `region` of the partition at `level`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssignmentPiece {
    pub set: ArcSet,
    pub level: usize,
    pub region: usize,
}

/// The covering {C^K(x)} with its separation constant δ.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CoveringCK {
    pub alpha: Angle,
    pub k: usize,
    pub star: StarLink,
    #[serde(with = "crate::report::rational")]
    pub delta: Q,
    /// GCS_K and GCS_{K+1}.
    pub partitions: Vec<GcsPartition>,
    /// g̃(C_*) for every g with |g| ∈ {K, K+1}.
    pub bad: BTreeMap<Word, ArcSet>,
    /// Closed arcs on which the assignment is constant. Pieces overlap only
    /// at endpoints; at such points the deeper piece wins if it qualifies.
    pub pieces: Vec<AssignmentPiece>,
}

/// Build C^K: δ is a third of the least separation of the bad sets g̃(C_*) over
/// |g| ∈ {K, K+1}. A point takes its GCS_{K+1} link when that link keeps
/// it more than δ from all its boundary bad sets, else its GCS_K link.
pub fn covering_ck(alpha: &Angle, k: usize, class_depth: usize) -> Result<CoveringCK> {
    let star = star_link(alpha, class_depth)?;
    let partitions = vec![gcs_partition(alpha, k)?, gcs_partition(alpha, k + 1)?];
    let mut bad = BTreeMap::new();
    for len in [k, k + 1] {
        for g in Word::all_star_free(2, len) {
            let img = star_image(alpha, &star, &g)?;
            bad.insert(g, img);
        }
    }
    let sep = min_separation(&bad)?;
    let delta = sep / Q::from_integer(3.into());
    let mut pieces = Vec::new();
    let mut fallback = ArcSet::empty();
    let deep = &partitions[1];
    for (r, l) in deep.links.iter().enumerate() {
        let near = deep.boundary[r]
            .iter()
            .fold(ArcSet::empty(), |acc, g| acc.union(&bad[g]))
            .expand(&delta);
        let good = l.set().intersect(&near.complement_closure());
        if !good.is_empty() {
            pieces.push(AssignmentPiece { set: good, level: k + 1, region: r });
        }
        fallback = fallback.union(&l.set().intersect(&near));
    }
    for (r, l) in partitions[0].links.iter().enumerate() {
        let set = l.set().intersect(&fallback);
        if !set.is_empty() {
            pieces.push(AssignmentPiece { set, level: k, region: r });
        }
    }
    Ok(CoveringCK {
        alpha: alpha.clone(),
        k,
        star,
        delta,
        partitions,
        bad,
        pieces,
    })
}

/// Least gap between bad sets of different words; all arcs must be disjoint.
fn min_separation(bad: &BTreeMap<Word, ArcSet>) -> Result<Q> {
    let mut items: Vec<(&Arc, usize)> = Vec::new();
    for (owner, (_, s)) in bad.iter().enumerate() {
        for a in s.arcs() {
            items.push((a, owner));
        }
    }
    items.sort_by(|a, b| a.0.start().cmp(b.0.start()));
    let n = items.len();
    if n < 2 {
        return Err(Error::ZeroSeparation);
    }
    let mut best: Option<Q> = None;
    for i in 0..n {
        let (a, oa) = items[i];
        let (b, ob) = items[(i + 1) % n];
        let gap = a.end().ccw_to(b.start());
        let start_gap = a.start().ccw_to(b.start());
        let overlap = start_gap <= *a.measure() && !(n == 1);
        if overlap || (gap.is_zero() && oa != ob) {
            return Err(Error::ZeroSeparation);
        }
        if oa != ob {
            best = Some(match best {
                Some(c) if c <= gap => c,
                _ => gap,
            });
        }
    }
    best.ok_or(Error::ZeroSeparation)
}

impl CoveringCK {
    /// The level and region index assigned to `x`.
    pub fn assignment(&self, x: &Angle) -> Result<(usize, usize)> {
        if let Ok(r) = self.partitions[1].region_of(x) {
            if self.qualifies(self.k + 1, r, x) {
                return Ok((self.k + 1, r));
            }
        }
        let r = self.partitions[0].region_of(x)?;
        Ok((self.k, r))
    }

    fn qualifies(&self, level: usize, region: usize, x: &Angle) -> bool {
        self.boundary_bad_sets(level, region)
            .iter()
            .all(|(_, s)| s.dist_to_point(x) > self.delta)
    }

    pub fn partition(&self, level: usize) -> &GcsPartition {
        &self.partitions[level - self.k]
    }

    /// Bad sets on the boundary of a link.
    pub fn boundary_bad_sets(&self, level: usize, region: usize) -> Vec<(&Word, &ArcSet)> {
        self.partition(level).boundary[region]
            .iter()
            .map(|g| (g, &self.bad[g]))
            .collect()
    }

    /// dist(x, g̃(C_*)) > δ for every boundary word g of the assigned link.
    pub fn check_point(&self, x: &Angle) -> Result<bool> {
        let (level, r) = self.assignment(x)?;
        Ok(self.partition(level).links[r].contains(x) && self.qualifies(level, r, x))
    }
}

impl Covering for CoveringCK {
    fn degree(&self) -> Degree {
        D2
    }
    fn alpha(&self) -> &Angle {
        &self.alpha
    }
    fn link_for(&self, y: &Angle) -> Result<GluingLink> {
        let (level, r) = self.assignment(y)?;
        Ok(self.partition(level).links[r].clone())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum DigitFixing {
    /// No violation for any degree in [start, depth].
    Certified { start: usize },
    /// hop^i(α) ∈ GCS_m(α).
    Counterexample { m: usize, i: usize },
    /// GCS_m(α) is undefined for some degree in range.
    Inconclusive { m: usize },
}

/// Check GCS_m(α) ∩ {hop^i(α)}_{i=1..L} = ∅ for m from K through `depth`.
/// A certificate reports the least start below K that still passes.
pub fn digit_fixing_check(cov: &CoveringCK, l: usize, depth: usize) -> Result<DigitFixing> {
    let (alpha, k) = (&cov.alpha, cov.k);
    if l == 0 {
        return Ok(DigitFixing::Certified { start: 0 });
    }
    let mut orbit = Vec::with_capacity(l);
    let mut cur = hop(D2, alpha);
    for _ in 0..l {
        orbit.push(cur.clone());
        cur = hop(D2, &cur);
    }
    let violation = |m: usize| -> Result<Option<usize>> {
        let (link, _) = match gcs_of_point(alpha, m, alpha) {
            Ok(v) => v,
            Err(Error::AmbiguousAtBoundary) => return Err(Error::AmbiguousAtBoundary),
            Err(e) => return Err(e),
        };
        Ok(orbit.iter().position(|p| link.contains(p)).map(|i| i + 1))
    };
    for m in k..=depth {
        match violation(m) {
            Ok(Some(i)) => return Ok(DigitFixing::Counterexample { m, i }),
            Ok(None) => {}
            Err(Error::AmbiguousAtBoundary) => return Ok(DigitFixing::Inconclusive { m }),
            Err(e) => return Err(e),
        }
    }
    let mut start = k;
    while start > 0 {
        match violation(start - 1) {
            Ok(None) => start -= 1,
            _ => break,
        }
    }
    Ok(DigitFixing::Certified { start })
}

/// Positions (1-based) where two words differ letter by letter.
pub fn differing_digits(a: &Word, b: &Word) -> Vec<usize> {
    a.letters()
        .zip(b.letters())
        .enumerate()
        .filter(|(_, (x, y))| x != y)
        .map(|(i, _)| i + 1)
        .collect()
}

/// Do consecutive differing digits sit more than `l` apart?
pub fn digits_spread(diffs: &[usize], l: usize) -> bool {
    diffs.windows(2).all(|w| w[1] - w[0] > l)
}
