//! The lamination ≈_α: equivalence, classes, cylinder sets as gluing links,
//! link images and preimages, pullback chains and encounter numbers.

use std::collections::{BTreeSet, HashSet};

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::circle::{branch_arc, hop, letter_of, Angle, Arc, ArcSet, Degree, Q};
use crate::error::{Error, Result};
use crate::symbolic::{itinerary, orbit};
use crate::word::Word;

/// Verdict of an equivalence query.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Equivalence {
    Yes,
    /// The first digit (1-based) where the itineraries disagree.
    No { digit: usize },
    Unknown { depth: usize },
}

impl Equivalence {
    pub fn is_yes(&self) -> bool {
        matches!(self, Equivalence::Yes)
    }
}

/// Decide x ≈_α y. Rational inputs always get an exact answer from the cycle
/// of the joint orbit; `depth` caps the number of digits compared.
pub fn equivalent(d: Degree, alpha: &Angle, x: &Angle, y: &Angle, depth: Option<usize>) -> Equivalence {
    let mut seen: HashSet<(Angle, Angle)> = HashSet::new();
    let (mut a, mut b) = (x.clone(), y.clone());
    let mut k = 0usize;
    loop {
        if a == b {
            return Equivalence::Yes;
        }
        if !seen.insert((a.clone(), b.clone())) {
            return Equivalence::Yes;
        }
        if depth.is_some_and(|cap| k >= cap) {
            return Equivalence::Unknown { depth: k };
        }
        if !letter_of(d, alpha, &a).matches(letter_of(d, alpha, &b)) {
            return Equivalence::No { digit: k + 1 };
        }
        a = hop(d, &a);
        b = hop(d, &b);
        k += 1;
    }
}

/// Is α periodic under hop?
pub fn is_periodic(d: Degree, alpha: &Angle) -> bool {
    let (_, start) = orbit(d, alpha);
    start == 0
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GluingStatus {
    /// Every consecutive endpoint pair was checked exactly.
    Exact,
    /// The gluing of arc `index` to its successor failed.
    Broken { index: usize },
    Unverified,
}

/// A finite union of disjoint closed arcs whose consecutive endpoints are
/// glued by ≈_α. Arcs are listed counterclockwise from angle 0.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GluingLink {
    set: ArcSet,
    status: GluingStatus,
}

impl GluingLink {
    pub fn unverified(set: ArcSet) -> GluingLink {
        GluingLink {
            set,
            status: GluingStatus::Unverified,
        }
    }

    /// Build a link and check the endpoint gluings exactly.
    pub fn verified(d: Degree, alpha: &Angle, set: ArcSet) -> GluingLink {
        let mut l = GluingLink::unverified(set);
        l.status = l.check_gluing(d, alpha);
        l
    }

    pub fn set(&self) -> &ArcSet {
        &self.set
    }

    pub fn arcs(&self) -> &[Arc] {
        self.set.arcs()
    }

    pub fn status(&self) -> &GluingStatus {
        &self.status
    }

    pub fn measure(&self) -> Q {
        self.set.measure()
    }

    pub fn contains(&self, x: &Angle) -> bool {
        self.set.contains(x)
    }

    pub fn check_gluing(&self, d: Degree, alpha: &Angle) -> GluingStatus {
        let arcs = self.set.arcs();
        if self.set.is_full() {
            return GluingStatus::Exact;
        }
        for i in 0..arcs.len() {
            let b = arcs[i].end();
            let a_next = arcs[(i + 1) % arcs.len()].start();
            if !equivalent(d, alpha, &b, a_next, None).is_yes() {
                return GluingStatus::Broken { index: i };
            }
        }
        GluingStatus::Exact
    }
}

/// Enclosure of an equivalence class together with the points extracted.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassResult {
    pub points: Vec<Angle>,
    pub enclosure: ArcSet,
    pub depth: usize,
    /// Candidate enumeration was complete, every enclosure component holds
    /// exactly one verified member or is gone a few digits deeper.
    pub exact: bool,
}

/// Cap on candidate enumeration per enclosure arc.
const CANDIDATES_PER_ARC: u64 = 4096;

/// [x]_≈ for non-periodic α, by nested refinement of C(I(x)|[1,n]) and exact
/// extraction of the (pre-)periodic class members.
pub fn equivalence_class(d: Degree, alpha: &Angle, x: &Angle, depth: usize) -> Result<ClassResult> {
    if is_periodic(d, alpha) {
        return Err(Error::PeriodicAlpha);
    }
    let (pts, s) = orbit(d, x);
    let p = pts.len() - s;
    let z = &pts[s];
    let enclosure_z = cylinder_set(d, alpha, &itinerary(d, alpha, z, depth))?;
    let r_max = enclosure_z.arc_count().clamp(1, 6);

    // Members of the class of the periodic point z are periodic with period
    // p·r for some r ≤ r_max.
    let mut periodic_members: BTreeSet<Angle> = BTreeSet::new();
    periodic_members.insert(z.clone());
    let mut truncated = false;
    let dd = BigInt::from(d.get());
    for r in 1..=r_max {
        let m = (p * r) as u32;
        if m > 48 {
            truncated = true;
            break;
        }
        let denom = dd.pow(m) - BigInt::one();
        let dq = Q::from_integer(denom.clone());
        for arc in enclosure_z.arcs() {
            let lo = (arc.start().value() * &dq).ceil().to_integer();
            let hi = ((arc.start().value() + arc.measure()) * &dq).floor().to_integer();
            if hi < lo {
                continue;
            }
            let count = (&hi - &lo).to_u64().unwrap_or(u64::MAX);
            if count > CANDIDATES_PER_ARC {
                truncated = true;
                continue;
            }
            let mut j = lo.clone();
            while j <= hi {
                let c = Angle::new(Q::new(j.clone(), denom.clone()));
                if !periodic_members.contains(&c) && equivalent(d, alpha, z, &c, None).is_yes() {
                    periodic_members.insert(c);
                }
                j += 1;
            }
        }
    }

    let enclosure = cylinder_set(d, alpha, &itinerary(d, alpha, x, depth))?;
    let mut members: BTreeSet<Angle> = BTreeSet::new();
    let ds = dd.pow(s as u32);
    let dsq = Q::from_integer(ds.clone());
    for f in &periodic_members {
        if s == 0 {
            members.insert(f.clone());
            continue;
        }
        let mut j = BigInt::zero();
        while j < ds {
            let c = Angle::new((f.value() + Q::from_integer(j.clone())) / &dsq);
            if enclosure.contains(&c) && equivalent(d, alpha, x, &c, None).is_yes() {
                members.insert(c);
            }
            j += 1;
        }
    }
    members.insert(x.clone());
    let points: Vec<Angle> = members.into_iter().collect();
    // Components without a member must vanish a little deeper; the spurious
    // ones hug the class and move as the depth grows.
    let look = depth + 2 * p + 2;
    let deeper = cylinder_set(d, alpha, &itinerary(d, alpha, x, look))?;
    let exact = !truncated
        && enclosure.arcs().iter().all(|a| {
            let held = points.iter().filter(|p| a.contains(p)).count();
            held == 1 || (held == 0 && deeper.intersect(&ArcSet::from_arc(a.clone())).is_empty())
        });
    Ok(ClassResult {
        points,
        enclosure,
        depth,
        exact,
    })
}

/// The exact arc set C(w): points whose (i−1)-th image lies in the closed
/// sector C(w[i]) for every non-star letter.
pub fn cylinder_set(d: Degree, alpha: &Angle, w: &Word) -> Result<ArcSet> {
    let mut s = ArcSet::full();
    for i in (1..=w.len()).rev() {
        s = s.preimage(d);
        if let Some(b) = w.at(i).index() {
            if b > d.as_usize() {
                return Err(Error::InvalidInput(format!("letter {} exceeds degree", w.at(i))));
            }
            s = s.intersect(&ArcSet::from_arc(branch_arc(d, alpha, b)));
        }
        if s.is_empty() {
            return Err(Error::EmptySet);
        }
    }
    Ok(s)
}

/// C(w) as a gluing link with exactly verified endpoint gluings.
pub fn cylinder(d: Degree, alpha: &Angle, w: &Word) -> Result<GluingLink> {
    Ok(GluingLink::verified(d, alpha, cylinder_set(d, alpha, w)?))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkImage {
    FullCircle,
    Link(GluingLink),
}

pub fn link_image(d: Degree, _alpha: &Angle, link: &GluingLink) -> LinkImage {
    let img = link.set.image(d);
    if img.is_full() {
        LinkImage::FullCircle
    } else {
        LinkImage::Link(GluingLink {
            set: img,
            status: link.status.clone(),
        })
    }
}

/// The components of h^{-1}(D): one link of d·n arcs when α ∈ D, otherwise
/// the d branch copies L̃_i(D).
pub fn link_preimage(d: Degree, alpha: &Angle, link: &GluingLink) -> Result<Vec<GluingLink>> {
    if link.set.is_full() {
        return Err(Error::FullCircleInput);
    }
    let pre = link.set.preimage(d);
    if link.set.contains(alpha) {
        return Ok(vec![GluingLink {
            set: pre,
            status: link.status.clone(),
        }]);
    }
    Ok((1..=d.as_usize())
        .map(|i| GluingLink {
            set: pre.intersect(&ArcSet::from_arc(branch_arc(d, alpha, i))),
            status: link.status.clone(),
        })
        .collect())
}

/// The component containing x. At a point shared by two components the one
/// whose interior is entered counterclockwise from x wins.
pub fn component_of(components: &[GluingLink], x: &Angle) -> Result<GluingLink> {
    let holders: Vec<&GluingLink> = components.iter().filter(|c| c.contains(x)).collect();
    match holders.len() {
        0 => Err(Error::NotInSet),
        1 => Ok(holders[0].clone()),
        _ => {
            let starts_here = holders
                .iter()
                .find(|c| c.arcs().iter().any(|a| a.start() == x && !a.measure().is_zero()));
            Ok((*starts_here.unwrap_or(&holders[0])).clone())
        }
    }
}

/// A covering of the circle by gluing links with a total assignment rule.
pub trait Covering: Sync {
    fn degree(&self) -> Degree;
    fn alpha(&self) -> &Angle;
    /// The link D(y) ∋ y.
    fn link_for(&self, y: &Angle) -> Result<GluingLink>;
}

/// Which orbit points of x saw α inside the pulled-back link.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncounterTrace {
    pub x: Angle,
    pub n: usize,
    pub hits: Vec<usize>,
    #[serde(rename = "N")]
    pub count: usize,
}

/// D^{(n)}(x): pull D(hop^n x) back one step at a time along the orbit of x,
/// recording each step whose link contains α.
pub fn pullback_chain(cov: &dyn Covering, x: &Angle, n: usize) -> Result<(GluingLink, EncounterTrace)> {
    let d = cov.degree();
    let alpha = cov.alpha();
    let mut orbit_pts = Vec::with_capacity(n + 1);
    let mut cur = x.clone();
    for _ in 0..=n {
        orbit_pts.push(cur.clone());
        cur = hop(d, &cur);
    }
    let mut link = cov.link_for(&orbit_pts[n])?;
    let mut hits = Vec::new();
    for j in 1..=n {
        let i = n - j + 1;
        if link.contains(alpha) {
            hits.push(i);
        }
        let comps = link_preimage(d, alpha, &link).map_err(|e| step_error(e, j))?;
        link = component_of(&comps, &orbit_pts[i - 1]).map_err(|e| step_error(e, j))?;
    }
    hits.sort_unstable();
    let count = hits.len();
    Ok((
        link,
        EncounterTrace {
            x: x.clone(),
            n,
            hits,
            count,
        },
    ))
}

fn step_error(e: Error, step: usize) -> Error {
    match e {
        Error::FullCircleInput | Error::NotInSet => {
            Error::Undetermined(format!("pullback chain failed at step {step}: {e}"))
        }
        other => other,
    }
}

/// N(x, n).
pub fn encounter_number(cov: &dyn Covering, x: &Angle, n: usize) -> Result<usize> {
    Ok(pullback_chain(cov, x, n)?.1.count)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CceSequence {
    pub ns: Vec<usize>,
    /// n_j ≤ P·j for every listed index.
    pub bounded: bool,
}

/// All n ≤ n_max with N(x, n) ≤ M, and whether n_j ≤ P·j along the list.
pub fn cce_sequence(cov: &dyn Covering, x: &Angle, p: &Q, m: usize, n_max: usize) -> Result<CceSequence> {
    if *p <= Q::one() {
        return Err(Error::InvalidInput("P must exceed 1".into()));
    }
    let mut ns = Vec::new();
    for n in 1..=n_max {
        if encounter_number(cov, x, n)? <= m {
            ns.push(n);
        }
    }
    let bounded = !ns.is_empty()
        && ns
            .iter()
            .enumerate()
            .all(|(j, &n)| Q::from_integer(BigInt::from(n)) <= p * Q::from_integer(BigInt::from(j + 1)));
    Ok(CceSequence { ns, bounded })
}

/// The covering by equivalence classes, D(y) = [y]. Needs non-periodic α.
pub struct ClassCovering {
    pub d: Degree,
    pub alpha: Angle,
    pub depth: usize,
}

impl Covering for ClassCovering {
    fn degree(&self) -> Degree {
        self.d
    }
    fn alpha(&self) -> &Angle {
        &self.alpha
    }
    fn link_for(&self, y: &Angle) -> Result<GluingLink> {
        let c = equivalence_class(self.d, &self.alpha, y, self.depth)?;
        Ok(GluingLink::verified(self.d, &self.alpha, ArcSet::from_points(&c.points)))
    }
}
