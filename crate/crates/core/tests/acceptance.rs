//! Acceptance checks 1–11. Each test prints one line
//! `criterion N: PASS|FAIL (details)` and then asserts.
//!
//! Run with `cargo test --test acceptance -- --test-threads=1`.

use std::collections::BTreeMap;
use std::io::Write;
use std::time::{Duration, Instant};

use lamina::circle::{apply_word, star_points, Angle, ArcSet, Degree, Q};
use lamina::circuits::{
    boundary_leaves, cylinder_boundary, ill_defined_points, iterate_pullback, nice_circuit_with, observed_failures,
    periodic_gluing_pairs, periodic_gluing_pairs_with, rescaled_energy, Atom, CircuitOptions, DiscreteMeasure,
    GluingCircuit, PairSearch,
};
use lamina::gcs::{
    covering_ck, differing_digits, digit_fixing_check, digits_spread, find_crossing, gcs_partition,
    gcs_pullback_identity_check, DigitFixing, Leaf,
};
use lamina::lamination::{cylinder, cylinder_set, equivalent, is_periodic, link_preimage, pullback_chain};
use lamina::symbolic::{itinerary, itinerary_full, kneading, legal, sr_search, verify_wpp, weak_preperiodicity, SrMode, SrOptions};
use lamina::word::{EventuallyPeriodicWord, Word};
use lamina::Arc;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const D2: Degree = Degree::TWO;

const SAMPLE: [&str; 20] = [
    "1/6", "2/7", "1/10", "3/10", "1/12", "5/12", "1/5", "3/7", "1/9", "2/9", "4/9", "3/14", "5/14", "1/4", "3/8",
    "7/24", "5/18", "11/30", "13/28", "9/20",
];

fn a(s: &str) -> Angle {
    s.parse().unwrap()
}

fn w(s: &str) -> Word {
    s.parse().unwrap()
}

fn q(n: i64, d: i64) -> Q {
    Q::new(n.into(), d.into())
}

fn sample() -> Vec<Angle> {
    SAMPLE.iter().map(|s| a(s)).collect()
}

/// Written past the test harness capture so every criterion shows up in a plain run.
fn report(n: usize, pass: bool, detail: String) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "criterion {n}: {} ({detail})", if pass { "PASS" } else { "FAIL" });
}

fn random_angle(rng: &mut ChaCha8Rng, qmax: i64) -> Angle {
    let d = rng.gen_range(2..=qmax);
    Angle::from_ratio(rng.gen_range(1..d), d)
}

fn random_word(rng: &mut ChaCha8Rng, len: usize) -> Word {
    Word((0..len).map(|_| lamina::Letter::branch(rng.gen_range(1..=2))).collect())
}

/// A random point strictly inside one of the arcs of a set.
fn random_point_in(rng: &mut ChaCha8Rng, set: &ArcSet) -> Option<Angle> {
    let arcs: Vec<&Arc> = set.arcs().iter().filter(|x| !x.measure().is_zero()).collect();
    if arcs.is_empty() {
        return None;
    }
    let arc = arcs[rng.gen_range(0..arcs.len())];
    let k: i64 = rng.gen_range(1..1000);
    Some(arc.start().add(&(arc.measure() * q(k, 1000))))
}

#[test]
fn criterion_01_figure_reproduction() {
    let t = Instant::now();
    let al = a("2/7");
    let part = gcs_partition(&al, 2).unwrap();
    let mut words: Vec<String> = part.words.iter().map(|x| x.to_string()).collect();
    words.sort();
    let mut expect: Vec<String> = ["LLR", "LRR", "RLR", "RRR", "**L"].iter().map(|s| s.to_string()).collect();
    expect.sort();
    let words_ok = words == expect;
    let star = part.index_of_word(&w("**L")).map(|i| part.links[i].set().clone());
    let union = ["LLL", "LRL", "RRL", "RLL"]
        .iter()
        .fold(ArcSet::empty(), |acc, s| acc.union(&cylinder_set(D2, &al, &w(s)).unwrap()));
    let union_ok = star.as_ref() == Some(&union) && cylinder_set(D2, &al, &w("**L")).unwrap() == union;
    let c_llr = cylinder_set(D2, &al, &w("LLR")).unwrap();
    let c_sl = cylinder_set(D2, &al, &w("*L")).unwrap();
    let c_l = cylinder_set(D2, &al, &w("L")).unwrap();
    let chain = [c_llr.contains(&al), c_llr.is_subset_of(&c_sl), c_sl.is_subset_of(&c_l)];
    let chain_ok = chain.iter().all(|b| *b);
    let el = t.elapsed();
    let pass = words_ok && union_ok && chain_ok && el < Duration::from_secs(1);
    report(
        1,
        pass,
        format!(
            "words {words:?}, union {union_ok}, chain {chain:?} with C(*L) = {c_sl:?}, C(L) = {c_l:?}, {:.3}s",
            el.as_secs_f64()
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_02_legal_word_oracle() {
    let t = Instant::now();
    let (mut checked, mut mismatches, mut skipped) = (0usize, 0usize, 0usize);
    let mut first_bad = None;
    for al in sample() {
        let nu = kneading(D2, &al);
        let star1 = star_points(D2, &al)[0].clone();
        for len in 1..=10 {
            let Ok(part) = gcs_partition(&al, len - 1) else {
                skipped += 1 << len;
                continue;
            };
            for g in Word::all_star_free(2, len) {
                let Ok(pt) = apply_word(D2, &al, &g, &star1) else {
                    skipped += 1;
                    continue;
                };
                let Ok(r) = part.region_of(&pt) else {
                    skipped += 1;
                    continue;
                };
                checked += 1;
                let lw = legal(&g, &nu);
                let geo = part.links[r].set();
                let ok = cylinder_set(D2, &al, &lw).map(|s| &s == geo).unwrap_or(false);
                if !ok {
                    mismatches += 1;
                    first_bad.get_or_insert(format!("alpha {al} g {g}"));
                }
            }
        }
    }
    let el = t.elapsed();
    let pass = mismatches == 0 && checked > 0 && el < Duration::from_secs(120);
    report(
        2,
        pass,
        format!(
            "{checked} words checked, {mismatches} mismatches, {skipped} undefined skipped, first {first_bad:?}, {:.1}s",
            el.as_secs_f64()
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_03_gluing_link_measure_laws() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut checked, mut bad, mut with_alpha) = (0usize, 0usize, 0usize);
    for al in sample() {
        let mut done = 0;
        let mut tries = 0;
        while done < 500 && tries < 5000 {
            tries += 1;
            let len = rng.gen_range(1..=8);
            let g = random_word(&mut rng, len);
            let Ok(link) = cylinder(D2, &al, &g) else { continue };
            let set = link.set();
            if set.is_full() || set.endpoints().contains(&al) {
                continue;
            }
            let Ok(comps) = link_preimage(D2, &al, &link) else { continue };
            done += 1;
            let n = set.arc_count();
            let m = set.measure();
            let ok = if set.contains(&al) {
                with_alpha += 1;
                comps.len() == 1 && comps[0].set().measure() == m && comps[0].set().arc_count() == 2 * n
            } else {
                comps.len() == 2
                    && comps
                        .iter()
                        .all(|c| c.set().measure() == &m * q(1, 2) && c.set().arc_count() == n)
            };
            if !ok {
                bad += 1;
            }
        }
        checked += done;
    }
    let pass = bad == 0 && checked == 500 * SAMPLE.len();
    report(3, pass, format!("{checked} links ({with_alpha} containing alpha), {bad} violations"));
    assert!(pass);
}

#[test]
fn criterion_04_duplicating_formulas() {
    let angles = ["1/6", "1/10", "3/14", "5/12", "7/24", "9/20"];
    let (mut checked, mut bad_leaves, mut bad_ill, mut skipped) = (0usize, 0usize, 0usize, 0usize);
    let mut first = None;
    for s in angles {
        let al = a(s);
        for len in 1..=12 {
            for g in Word::all_star_free(2, len) {
                let leaves = match boundary_leaves(&al, &g) {
                    Ok(l) => l,
                    Err(_) => {
                        skipped += 1;
                        continue;
                    }
                };
                checked += 1;
                let mut pts = std::collections::BTreeSet::new();
                for l in &leaves {
                    pts.insert(l.endpoints.0.clone());
                    pts.insert(l.endpoints.1.clone());
                }
                if Some(pts) != cylinder_boundary(&al, &g).ok() {
                    bad_leaves += 1;
                    first.get_or_insert(format!("leaves {s} {g}"));
                }
                if ill_defined_points(&al, &g) != observed_failures(&al, &g) {
                    bad_ill += 1;
                    first.get_or_insert(format!("ill-defined {s} {g}"));
                }
            }
        }
    }
    let pass = bad_leaves == 0 && bad_ill == 0 && checked > 0;
    report(
        4,
        pass,
        format!("{checked} words, {bad_leaves} boundary and {bad_ill} ill-definedness disagreements, {skipped} skipped, first {first:?}"),
    );
    assert!(pass);
}

#[test]
fn criterion_05_non_crossing() {
    let mut total = 0usize;
    let mut violations = Vec::new();
    for al in sample() {
        let mut all: Vec<Leaf> = Vec::new();
        for n in 0..=12 {
            for u in Word::all_star_free(2, n) {
                if let Ok(l) = Leaf::new(&al, &u) {
                    all.push(l);
                }
            }
        }
        total += all.len();
        if let Some((i, j)) = find_crossing(&all) {
            violations.push(format!("{al}: {} x {}", all[i].word, all[j].word));
        }
    }
    let pass = violations.is_empty();
    report(5, pass, format!("{total} leaves over {} angles, violations {violations:?}", SAMPLE.len()));
    assert!(pass);
}

#[test]
fn criterion_06_circuit_pullback_ledger() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let opts = CircuitOptions::default();
    let mut circuits: Vec<(GluingCircuit, Angle)> = Vec::new();
    for s in ["1/6", "1/10", "5/12", "1/12", "3/10"] {
        let al = a(s);
        let cov = covering_ck(&al, 1, opts.search.class_depth).unwrap();
        let pairs = [
            periodic_gluing_pairs_with(&al, &cov.star, 1, &opts.search).unwrap_or_default(),
            periodic_gluing_pairs_with(&al, &cov.star, 2, &opts.search).unwrap_or_default(),
        ];
        for y in ["1/32", "3/7", "2/5", "9/11", "5/13"] {
            let y = a(y);
            if let Ok(c) = nice_circuit_with(&cov, &pairs, &y, &opts) {
                circuits.push((c, y));
            }
        }
    }
    assert!(!circuits.is_empty());
    let (mut runs, mut bad, mut encounters, mut steps) = (0usize, 0usize, 0usize, 0usize);
    let mut first = None;
    let mut attempts = 0;
    while runs < 100 && attempts < 2000 {
        attempts += 1;
        let (c, y) = &circuits[rng.gen_range(0..circuits.len())];
        let n = rng.gen_range(1..=20);
        let g = random_word(&mut rng, n);
        let Ok(x) = apply_word(D2, &c.alpha, &g, y) else { continue };
        let run = match iterate_pullback(c, &x, n) {
            Ok(r) => r,
            Err(e) => {
                bad += 1;
                first.get_or_insert(format!("alpha {} x {x}: {e}", c.alpha));
                runs += 1;
                continue;
            }
        };
        runs += 1;
        steps += run.steps.len();
        let m = run.trace.count as u32;
        encounters += m as usize;
        let p0 = &c.params;
        let pf = &run.circuit.params;
        let r_ok = pf.r == &p0.r / Q::from_integer(num_traits::pow(num_bigint::BigInt::from(2), n));
        let n_ok = pf.n <= (1usize << m) * p0.n;
        let c_ok = pf.c <= 4f64.powi(m as i32) * p0.c;
        let all_pass = run.steps.iter().all(|s| s.check.passed() && s.around);
        if !(r_ok && n_ok && c_ok && all_pass) {
            bad += 1;
            first.get_or_insert(format!(
                "alpha {} x {x} n {n}: r {r_ok} N {n_ok} C {c_ok} steps {all_pass}",
                c.alpha
            ));
        }
    }
    let pass = runs >= 100 && bad == 0;
    report(
        6,
        pass,
        format!(
            "{runs} runs from {} circuits, {steps} steps, {encounters} encounters, {bad} failures, first {first:?}",
            circuits.len()
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_07_energy() {
    let three = DiscreteMeasure::uniform(Arc::closed(a("1/5"), &a("3/10")), vec![a("1/5"), a("1/4"), a("3/10")]).unwrap();
    let e3 = rescaled_energy(&three).unwrap();
    let target = 4.0 / 9.0 * std::f64::consts::LN_2;
    let three_ok = (e3 - target).abs() < 1e-9;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0f64;
    for _ in 0..500 {
        let k = rng.gen_range(2..=12);
        let mut offs: Vec<i64> = (0..k).map(|_| rng.gen_range(0..=10_000)).collect();
        offs.sort_unstable();
        offs.dedup();
        if offs.len() < 2 {
            continue;
        }
        let raw: Vec<i64> = (0..offs.len()).map(|_| rng.gen_range(1..=9)).collect();
        let total: i64 = raw.iter().sum();
        let build = |start: &Angle, scale: &Q| {
            let support = Arc::with_len(start.clone(), scale * q(10_000, 1), lamina::circle::Closure::Closed);
            let atoms = offs
                .iter()
                .zip(&raw)
                .map(|(o, r)| Atom {
                    at: start.add(&(scale * q(*o, 1))),
                    weight: q(*r, total),
                })
                .collect();
            DiscreteMeasure::new(support, atoms).unwrap()
        };
        let s1 = random_angle(&mut rng, 97);
        let s2 = random_angle(&mut rng, 97);
        let m1 = build(&s1, &q(1, 40_000));
        let m2 = build(&s2, &q(rng.gen_range(1..50), 1_000_000_000));
        let d = (rescaled_energy(&m1).unwrap() - rescaled_energy(&m2).unwrap()).abs();
        worst = worst.max(d);
    }
    let pass = three_ok && worst < 1e-12;
    report(7, pass, format!("three atoms {e3:.12} vs {target:.12}, worst affine drift {worst:.2e}"));
    assert!(pass);
}

#[test]
fn criterion_08_periodic_gluing_pairs() {
    let (mut with_two, mut total, mut bad) = (0usize, 0usize, 0usize);
    let mut first = None;
    for al in sample() {
        let mut found = 0;
        for side in [1, 2] {
            let Ok(pairs) = periodic_gluing_pairs(&al, side, &PairSearch::default()) else { continue };
            let mut levels = BTreeMap::new();
            for p in &pairs {
                let per = EventuallyPeriodicWord::periodic(p.word.clone()).unwrap();
                let ok = equivalent(D2, &al, &p.x, &p.y, None).is_yes()
                    && itinerary_full(D2, &al, &p.x) == per
                    && itinerary_full(D2, &al, &p.y) == per
                    && levels.insert(p.level, (p.x.clone(), p.y.clone())).is_none();
                if !ok {
                    bad += 1;
                    first.get_or_insert(format!("{al} {}", p.word));
                }
            }
            let distinct: std::collections::BTreeSet<_> = levels.values().collect();
            if distinct.len() != levels.len() {
                bad += 1;
            }
            found = found.max(pairs.len());
            total += pairs.len();
        }
        if found >= 2 {
            with_two += 1;
        }
    }
    let pass = bad == 0 && with_two >= 5;
    report(8, pass, format!("{total} pairs, {with_two}/20 angles with at least 2, {bad} bad, first {first:?}"));
    assert!(pass);
}

#[test]
fn criterion_09_digit_fixing_consistency() {
    let (k, l, depth) = (1usize, 2usize, 8usize);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut certified = Vec::new();
    for al in sample() {
        if is_periodic(D2, &al) {
            continue;
        }
        let Ok(cov) = covering_ck(&al, k, 40) else { continue };
        if let Ok(DigitFixing::Certified { .. }) = digit_fixing_check(&cov, l, depth) {
            certified.push(cov);
        }
    }
    let (mut samples, mut bad, mut bad_last) = (0usize, 0usize, 0usize);
    let mut first = None;
    let mut attempts = 0;
    while !certified.is_empty() && samples < 1000 && attempts < 20_000 {
        attempts += 1;
        let cov = &certified[rng.gen_range(0..certified.len())];
        let y = random_angle(&mut rng, 499);
        let m = rng.gen_range(0..=depth);
        let Ok((link, _)) = pullback_chain(cov, &y, m) else { continue };
        let (Some(x1), Some(x2)) = (random_point_in(&mut rng, link.set()), random_point_in(&mut rng, link.set())) else {
            continue;
        };
        samples += 1;
        let i1 = itinerary(D2, &cov.alpha, &x1, m + 1);
        let i2 = itinerary(D2, &cov.alpha, &x2, m + 1);
        let diffs = differing_digits(&i1, &i2);
        if !digits_spread(&diffs, l) {
            bad += 1;
            // Violations that only arise through the final digit m + 1.
            let inner: Vec<usize> = diffs.iter().copied().filter(|&j| j <= m).collect();
            if digits_spread(&inner, l) {
                bad_last += 1;
            }
            first.get_or_insert(format!("alpha {} y {y} m {m}: {x1} {i1} vs {x2} {i2}", cov.alpha));
        }
    }
    let pass = !certified.is_empty() && samples == 1000 && bad == 0;
    report(
        9,
        pass,
        format!(
            "{} certified angles at (K, L) = ({k}, {l}) to depth {depth}, {samples} samples, {bad} counterexamples ({bad_last} only through digit m+1), first {first:?}",
            certified.len()
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_10_detector_sanity() {
    let mut wpp_bad = 0usize;
    let mut scanned = 0usize;
    for den in 2..=255i64 {
        for num in 1..den {
            if num_integer::gcd(num, den) != 1 {
                continue;
            }
            scanned += 1;
            let nu = kneading(D2, &Angle::from_ratio(num, den));
            let wit = weak_preperiodicity(&nu);
            if !verify_wpp(&nu, &wit, 64) {
                wpp_bad += 1;
            }
        }
    }
    let lin = EventuallyPeriodicWord::periodic(w("L")).unwrap();
    let mut sr_bad = 0usize;
    for d in 1..=20 {
        for tau in [q(1, 2), q(9, 10), q(99, 100)] {
            match sr_search(&lin, d, &tau, d + 5, SrMode::Exhaustive, SrOptions::default()) {
                Ok(Some(c)) if c.n == d + 1 && c.rare.indices().is_empty() && c.verify(&lin) => {}
                _ => sr_bad += 1,
            }
        }
    }
    let mut certs = 0usize;
    let mut reverify_bad = 0usize;
    for al in sample() {
        let nu = kneading(D2, &al);
        for d in [1, 2, 4] {
            for tau in [q(1, 2), q(3, 4), q(9, 10)] {
                for mode in [SrMode::Exhaustive, SrMode::Greedy] {
                    if let Ok(Some(c)) = sr_search(&nu, d, &tau, 24, mode, SrOptions::default()) {
                        certs += 1;
                        if !c.verify(&nu) {
                            reverify_bad += 1;
                        }
                    }
                }
            }
        }
    }
    let pass = wpp_bad == 0 && sr_bad == 0 && reverify_bad == 0;
    report(
        10,
        pass,
        format!("{scanned} angles, {wpp_bad} missing witnesses; L^inf failures {sr_bad}; {certs} certificates, {reverify_bad} fail re-verification"),
    );
    assert!(pass);
}

#[test]
fn criterion_11_gcs_pullback_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (mut ok, mut bad, mut attempts) = (0usize, 0usize, 0usize);
    let mut first = None;
    while ok + bad < 1000 && attempts < 50_000 {
        attempts += 1;
        let al = random_angle(&mut rng, 40);
        let n = rng.gen_range(0..=8);
        let i = rng.gen_range(0..=8);
        let x = random_angle(&mut rng, 997);
        match gcs_pullback_identity_check(&al, n, i, &x) {
            Ok(true) => ok += 1,
            Ok(false) => {
                bad += 1;
                first.get_or_insert(format!("alpha {al} n {n} i {i} x {x}"));
            }
            Err(_) => {}
        }
    }
    let pass = ok == 1000 && bad == 0;
    report(11, pass, format!("{ok} identities hold, {bad} fail, {attempts} attempts, first {first:?}"));
    assert!(pass);
}
