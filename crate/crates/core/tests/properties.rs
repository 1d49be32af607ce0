//! Property tests for the module invariants.

use std::collections::BTreeSet;

use lamina::circle::{apply_word, branch, branch_arc, fixed_point_of_word, hop, hop_n, strictly_between, Angle, Arc, Closure, Degree, Q};
use lamina::circuits::{
    circuit_check, classify_alpha, pullback_circuit, rescaled_energy, ArcPair, Atom, CircuitLocation, CircuitParams,
    DiscreteMeasure, GluingCircuit,
};
use lamina::gcs::{covering_ck, gcs_of_point, gcs_partition, Leaf};
use lamina::lamination::{cylinder, cylinder_set, equivalence_class, equivalent, is_periodic, link_image, LinkImage};
use lamina::symbolic::{duplicating_digits, is_rare, itinerary, kneading, legal, verify_wpp, weak_preperiodicity};
use lamina::word::{Letter, Word};
use proptest::prelude::*;

const D2: Degree = Degree::TWO;

fn q(n: i64, d: i64) -> Q {
    Q::new(n.into(), d.into())
}

fn angle(max_den: i64) -> impl Strategy<Value = Angle> {
    (2..=max_den).prop_flat_map(|d| (1..d).prop_map(move |n| Angle::from_ratio(n, d)))
}

fn word(max_len: usize) -> impl Strategy<Value = Word> {
    prop::collection::vec(1usize..=2, 0..=max_len).prop_map(|v| Word(v.into_iter().map(Letter::branch).collect()))
}

fn nonperiodic_alpha() -> impl Strategy<Value = Angle> {
    angle(60).prop_filter("non-periodic", |a| !is_periodic(D2, a))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn branch_inverts_hop(alpha in angle(97), t in angle(200), d in 2u32..=4) {
        let d = Degree::new(d).unwrap();
        prop_assume!(t != alpha);
        let mut seen = BTreeSet::new();
        for i in 1..=d.as_usize() {
            let s = branch(d, &alpha, i, &t).unwrap();
            prop_assert_eq!(hop(d, &s), t.clone());
            prop_assert!(branch_arc(d, &alpha, i).contains(&s));
            seen.insert(s);
        }
        prop_assert_eq!(seen.len(), d.as_usize());
    }

    #[test]
    fn word_map_is_a_right_inverse(alpha in angle(60), u in word(10), t in angle(200)) {
        if let Ok(s) = apply_word(D2, &alpha, &u, &t) {
            prop_assert_eq!(hop_n(D2, &s, u.len()), t);
        }
    }

    #[test]
    fn word_map_contracts(alpha in angle(60), u in word(8), start in angle(500), k in 1i64..100) {
        // Each branch halves an arc whose interior misses α.
        let len = q(k, 100);
        let (mut s, mut e) = (start.clone(), start.add(&len));
        for p in (1..=u.len()).rev() {
            if strictly_between(&s, &alpha, &e) || s == alpha || e == alpha {
                return Ok(());
            }
            let i = u.at(p).index().unwrap();
            let (ns, ne) = (branch(D2, &alpha, i, &s).unwrap(), branch(D2, &alpha, i, &e).unwrap());
            prop_assert_eq!(ns.ccw_to(&ne) * q(2, 1), s.ccw_to(&e));
            s = ns;
            e = ne;
        }
        prop_assert_eq!(s, apply_word(D2, &alpha, &u, &start).unwrap());
    }

    #[test]
    fn fixed_points_are_periodic(alpha in angle(60), u in word(8)) {
        prop_assume!(!u.is_empty());
        if let Ok(f) = fixed_point_of_word(D2, &alpha, &u) {
            prop_assert_eq!(hop_n(D2, &f, u.len()), f);
        }
    }

    #[test]
    fn legal_stars_match_suffix_membership(alpha in angle(60), g in word(10)) {
        let nu = kneading(D2, &alpha);
        let lw = legal(&g, &nu);
        prop_assert_eq!(lw.len(), g.len());
        for k in 1..g.len() {
            let suffix = lw.sub(k + 1, g.len());
            let Ok(c) = cylinder_set(D2, &alpha, &suffix) else { continue };
            prop_assert_eq!(lw.at(k).is_star(), c.contains(&alpha), "k = {}, legal = {}", k, lw);
        }
    }

    #[test]
    fn legal_is_idempotent(alpha in angle(60), g in word(10)) {
        let nu = kneading(D2, &alpha);
        let lw = legal(&g, &nu);
        prop_assert_eq!(legal(&lw, &nu), lw);
    }

    #[test]
    fn duplicating_digits_monotone(alpha in angle(60), n in 2usize..24, d in 1usize..6, r in prop::collection::btree_set(1usize..24, 0..4)) {
        let nu = kneading(D2, &alpha);
        let g = nu.prefix(n);
        prop_assume!(is_rare(&r, d));
        let none = duplicating_digits(&g, d, &BTreeSet::new(), &nu);
        let with_r = duplicating_digits(&g, d, &r, &nu);
        prop_assert!(none.is_subset(&with_r));
        let bigger_d = duplicating_digits(&g, d + 1, &r, &nu);
        prop_assert!(bigger_d.is_subset(&with_r));
    }

    #[test]
    fn wpp_reverifies(alpha in angle(255)) {
        let nu = kneading(D2, &alpha);
        let w = weak_preperiodicity(&nu);
        prop_assert!(verify_wpp(&nu, &w, 10 * nu.period_len()));
    }

    #[test]
    fn cylinder_membership_is_itinerary_match(alpha in angle(60), w in word(8), x in angle(500)) {
        let Ok(c) = cylinder_set(D2, &alpha, &w) else { return Ok(()) };
        let it = itinerary(D2, &alpha, &x, w.len());
        let matches = w.letters().zip(it.letters()).all(|(a, b)| a.matches(b));
        prop_assert_eq!(c.contains(&x), matches, "x = {}, itinerary {}", x, it);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn classes_are_forward_and_branch_invariant(alpha in nonperiodic_alpha(), x in angle(300)) {
        let Ok(c) = equivalence_class(D2, &alpha, &x, 24) else { return Ok(()) };
        prop_assume!(c.exact && c.points.len() >= 2);
        for p in &c.points {
            for r in &c.points {
                prop_assert!(equivalent(D2, &alpha, p, r, None).is_yes());
                prop_assert!(equivalent(D2, &alpha, &hop(D2, p), &hop(D2, r), None).is_yes());
                if *p != alpha && *r != alpha {
                    for i in 1..=2 {
                        let (bp, br) = (branch(D2, &alpha, i, p).unwrap(), branch(D2, &alpha, i, r).unwrap());
                        prop_assert!(equivalent(D2, &alpha, &bp, &br, None).is_yes());
                    }
                }
            }
        }
    }

    #[test]
    fn leaves_of_adjacent_depths_do_not_cross(alpha in angle(60), n in 0usize..7) {
        let mut all = Vec::new();
        for m in n..=n + 1 {
            for u in Word::all_star_free(2, m) {
                if let Ok(l) = Leaf::new(&alpha, &u) {
                    all.push(l);
                }
            }
        }
        prop_assert!(lamina::gcs::find_crossing(&all).is_none());
    }

    #[test]
    fn gcs_formula_matches_partition(alpha in angle(60), n in 0usize..6, x in angle(997)) {
        let Ok(part) = gcs_partition(&alpha, n) else { return Ok(()) };
        let Ok(r) = part.region_of(&x) else { return Ok(()) };
        let Ok((link, word)) = gcs_of_point(&alpha, n, &x) else { return Ok(()) };
        prop_assert_eq!(link.set(), part.links[r].set());
        prop_assert_eq!(&word, &part.words[r]);
    }

    #[test]
    fn gcs_hop_image(alpha in angle(60), n in 1usize..6, x in angle(997)) {
        let (Ok((link, _)), Ok((next, _))) = (gcs_of_point(&alpha, n, &x), gcs_of_point(&alpha, n - 1, &hop(D2, &x))) else {
            return Ok(());
        };
        match link_image(D2, &alpha, &link) {
            LinkImage::Link(img) => prop_assert_eq!(img.set(), next.set()),
            LinkImage::FullCircle => prop_assert!(next.set().is_full()),
        }
    }

    #[test]
    fn covering_link_holds_point(alpha in nonperiodic_alpha(), k in 1usize..3, x in angle(997)) {
        let Ok(cov) = covering_ck(&alpha, k, 40) else { return Ok(()) };
        prop_assert!(cov.check_point(&x).unwrap_or(true));
        if let Ok((level, r)) = cov.assignment(&x) {
            prop_assert!(cov.partition(level).links[r].contains(&x));
        }
    }

    #[test]
    fn cylinder_is_range_of_word_map(alpha in nonperiodic_alpha(), w in word(6)) {
        let Ok(c) = cylinder(D2, &alpha, &w) else { return Ok(()) };
        for k in 0..64 {
            let t = Angle::from_ratio(2 * k + 1, 128);
            if let Ok(s) = apply_word(D2, &alpha, &w, &t) {
                prop_assert!(c.contains(&s));
            }
        }
    }
}

/// A circuit on random disjoint arcs with `m` evenly placed atoms per arc
/// and reversing pairings. It ignores the lamination, which the pullback
/// bookkeeping does not look at.
fn random_circuit(alpha: Angle, cuts: Vec<i64>, m: usize) -> GluingCircuit {
    let arcs: Vec<Arc> = cuts.chunks(2).map(|c| Arc::closed(Angle::from_ratio(c[0], 1000), &Angle::from_ratio(c[1], 1000))).collect();
    let measure = |arc: &Arc| {
        let pts: Vec<Angle> = match m {
            1 => vec![arc.midpoint()],
            _ => (0..m).map(|j| arc.start().add(&(arc.measure() * q(j as i64, m as i64 - 1)))).collect(),
        };
        DiscreteMeasure::uniform(arc.clone(), pts).unwrap()
    };
    let pairs = arcs
        .chunks(2)
        .map(|p| ArcPair {
            a_prime: measure(&p[0]),
            a: measure(&p[1]),
            pairing: (0..m).rev().collect(),
        })
        .collect::<Vec<_>>();
    GluingCircuit {
        alpha,
        params: CircuitParams { n: pairs.len(), c: 50.0, r: q(1, 3) },
        pairs,
        link: None,
    }
}

fn circuit_input() -> impl Strategy<Value = (Vec<i64>, usize, i64, usize)> {
    (1usize..=3).prop_flat_map(|n| {
        (
            prop::collection::btree_set(0i64..1000, 4 * n).prop_map(|s| s.into_iter().collect::<Vec<_>>()),
            1usize..=3,
            0i64..1000,
            1usize..=2,
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn pullback_bookkeeping((cuts, m, j, side) in circuit_input()) {
        // (4j+1)/4000 never meets an endpoint or atom at multiples of 1/2000.
        let alpha = Angle::from_ratio(4 * j + 1, 4000);
        let m = if m == 1 { 1 } else { m };
        let c = random_circuit(alpha, cuts, m);
        prop_assume!(circuit_check(&c).structure.is_none());
        let loc = classify_alpha(&c).unwrap();
        let (out, _) = pullback_circuit(&c, side).unwrap();
        let p = &c.params;
        prop_assert_eq!(&out.params.r, &(&p.r * q(1, 2)));
        match loc {
            CircuitLocation::Outside | CircuitLocation::BetweenPair { .. } => {
                prop_assert_eq!(out.params.n, p.n);
                prop_assert_eq!(out.params.c, p.c);
            }
            CircuitLocation::InsideGap { .. } => {
                prop_assert_eq!(out.params.n, 2 * p.n);
                prop_assert_eq!(out.params.c, p.c);
            }
            CircuitLocation::InsideArc { .. } => {
                prop_assert!(out.params.n == p.n || out.params.n == 2 * p.n);
                prop_assert_eq!(out.params.c, 4.0 * p.c);
            }
        }
        let rep = circuit_check(&out);
        prop_assert!(rep.structure.is_none(), "{:?} at {:?}", rep.structure, loc);
    }

    #[test]
    fn energy_is_affine_invariant(offs in prop::collection::btree_set(0i64..100_000, 2..10), s1 in angle(97), s2 in angle(97), scale in 1i64..1000) {
        let offs: Vec<i64> = offs.into_iter().collect();
        let k = offs.len() as i64;
        let build = |s: &Angle, unit: Q| {
            let support = Arc::with_len(s.clone(), &unit * q(100_000, 1), Closure::Closed);
            let atoms = offs.iter().enumerate().map(|(i, o)| Atom {
                at: s.add(&(&unit * q(*o, 1))),
                weight: q(i as i64 + 1, k * (k + 1) / 2),
            }).collect();
            DiscreteMeasure::new(support, atoms).unwrap()
        };
        let e1 = rescaled_energy(&build(&s1, q(1, 200_000))).unwrap();
        let e2 = rescaled_energy(&build(&s2, q(scale, 100_000_000_000))).unwrap();
        prop_assert!((e1 - e2).abs() < 1e-12);
    }
}
