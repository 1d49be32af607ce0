//! Deterministic SVG drawings of the disk model: chords as hyperbolic
//! geodesics, links as colored boundary arcs, circuits with their atoms.

use std::f64::consts::PI;
use std::fmt::Write;

use crate::circle::{Angle, Arc, ArcSet};
use crate::circuits::GluingCircuit;
use crate::gcs::{GcsPartition, Leaf};

pub const CANVAS: f64 = 1000.0;
const CENTER: f64 = 500.0;
const RADIUS: f64 = 440.0;

const PALETTE: [&str; 10] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf", "#bcbd22", "#7f7f7f",
];

#[derive(Clone, Copy, Debug)]
pub struct Style {
    pub stroke: f64,
    pub arc_stroke: f64,
    pub labels: bool,
}

impl Default for Style {
    fn default() -> Self {
        Style {
            stroke: 1.5,
            arc_stroke: 8.0,
            labels: true,
        }
    }
}

fn color(i: usize) -> &'static str {
    PALETTE[i % PALETTE.len()]
}

/// Screen position of angle t on a circle of radius r.
fn at(t: f64, r: f64) -> (f64, f64) {
    let th = 2.0 * PI * t;
    (CENTER + r * th.cos(), CENTER - r * th.sin())
}

fn num(x: f64) -> String {
    let s = format!("{x:.3}");
    if s == "-0.000" {
        "0.000".into()
    } else {
        s
    }
}

/// Path data of the geodesic between two boundary points. The orthogonal
/// circle has its center on the bisector at distance 1/cos(πδ) and radius
/// tan(πδ), δ the shorter angular distance.
pub fn geodesic_path(a: f64, b: f64) -> String {
    let (ax, ay) = at(a, RADIUS);
    let (bx, by) = at(b, RADIUS);
    let mut delta = (b - a).rem_euclid(1.0);
    let mut mid = a + delta / 2.0;
    if delta > 0.5 {
        delta = 1.0 - delta;
        mid = b + delta / 2.0;
    }
    if (delta - 0.5).abs() < 1e-12 || delta < 1e-12 {
        return format!("M {} {} L {} {}", num(ax), num(ay), num(bx), num(by));
    }
    let rr = RADIUS * (PI * delta).tan();
    let (cx, cy) = at(mid, RADIUS / (PI * delta).cos());
    let cross = (ax - cx) * (by - cy) - (ay - cy) * (bx - cx);
    let sweep = if cross > 0.0 { 1 } else { 0 };
    format!(
        "M {} {} A {} {} 0 0 {} {} {}",
        num(ax),
        num(ay),
        num(rr),
        num(rr),
        sweep,
        num(bx),
        num(by)
    )
}

/// Path data of a boundary arc drawn at radius r.
fn arc_path(arc: &Arc, r: f64) -> String {
    let s = arc.start().to_f64();
    let len = crate::circle::Angle::new(arc.measure().clone()).to_f64();
    let len = if arc.is_full() { 0.999_999 } else { len };
    let (sx, sy) = at(s, r);
    let (ex, ey) = at(s + len, r);
    if len < 1e-9 {
        return format!("M {} {} L {} {}", num(sx), num(sy), num(ex), num(ey));
    }
    let large = if len > 0.5 { 1 } else { 0 };
    // Counterclockwise in the plane is negative sweep on screen.
    format!("M {} {} A {} {} 0 {} 0 {} {}", num(sx), num(sy), num(r), num(r), large, num(ex), num(ey))
}

struct Canvas {
    body: String,
    style: Style,
}

impl Canvas {
    fn new(title: &str, style: Style) -> Canvas {
        let mut body = String::new();
        let _ = writeln!(
            body,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{c}" height="{c}" viewBox="0 0 {c} {c}">"#,
            c = CANVAS
        );
        let _ = writeln!(body, "<title>{}</title>", escape(title));
        let _ = writeln!(body, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            body,
            r#"<circle cx="{c}" cy="{c}" r="{r}" fill="none" stroke="black" stroke-width="{w}"/>"#,
            c = CENTER,
            r = RADIUS,
            w = num(style.stroke)
        );
        Canvas { body, style }
    }

    fn chord(&mut self, a: &Angle, b: &Angle, stroke: &str) {
        let _ = writeln!(
            self.body,
            r#"<path d="{}" fill="none" stroke="{}" stroke-width="{}"/>"#,
            geodesic_path(a.to_f64(), b.to_f64()),
            stroke,
            num(self.style.stroke)
        );
    }

    fn arc(&mut self, arc: &Arc, r: f64, stroke: &str, width: f64) {
        let _ = writeln!(
            self.body,
            r#"<path d="{}" fill="none" stroke="{}" stroke-width="{}" stroke-opacity="0.8"/>"#,
            arc_path(arc, r),
            stroke,
            num(width)
        );
    }

    fn dot(&mut self, t: &Angle, r: f64, fill: &str, size: f64) {
        let (x, y) = at(t.to_f64(), r);
        let _ = writeln!(self.body, r#"<circle cx="{}" cy="{}" r="{}" fill="{}"/>"#, num(x), num(y), num(size), fill);
    }

    fn label(&mut self, t: f64, r: f64, text: &str, fill: &str) {
        if !self.style.labels {
            return;
        }
        let (x, y) = at(t, r);
        let _ = writeln!(
            self.body,
            r#"<text x="{}" y="{}" font-family="monospace" font-size="16" fill="{}" text-anchor="middle" dominant-baseline="middle">{}</text>"#,
            num(x),
            num(y),
            fill,
            escape(text)
        );
    }

    fn finish(mut self) -> String {
        self.body.push_str("</svg>\n");
        self.body
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn mark_alpha(cv: &mut Canvas, alpha: &Angle) {
    cv.dot(alpha, RADIUS, "black", 5.0);
    cv.label(alpha.to_f64(), RADIUS + 30.0, "α", "black");
}

/// Leaves l_u grouped by depth.
pub fn leaves_svg(alpha: &Angle, by_depth: &[Vec<Leaf>], style: Style) -> String {
    let mut cv = Canvas::new(&format!("leaves for alpha = {alpha}"), style);
    for (n, ls) in by_depth.iter().enumerate() {
        for l in ls {
            cv.chord(&l.endpoints.0, &l.endpoints.1, color(n));
        }
    }
    mark_alpha(&mut cv, alpha);
    cv.finish()
}

/// Labeled sets drawn as colored boundary arcs, one ring per set.
pub fn links_svg(alpha: &Angle, title: &str, sets: &[(String, ArcSet)], leaves: &[Leaf], style: Style) -> String {
    let mut cv = Canvas::new(title, style);
    for l in leaves {
        cv.chord(&l.endpoints.0, &l.endpoints.1, "#555555");
    }
    for (i, (name, set)) in sets.iter().enumerate() {
        let r = RADIUS + 12.0 + (i % 4) as f64 * 9.0;
        for a in set.arcs() {
            cv.arc(a, r, color(i), style.arc_stroke);
        }
        if let Some(big) = set.arcs().iter().max_by(|a, b| a.measure().cmp(b.measure())) {
            cv.label(big.midpoint().to_f64(), RADIUS - 40.0 - (i % 3) as f64 * 18.0, name, color(i));
        }
    }
    mark_alpha(&mut cv, alpha);
    cv.finish()
}

/// A GCS partition: every region colored, leaves of depth ≤ n drawn.
pub fn gcs_svg(part: &GcsPartition, leaves: &[Leaf], style: Style) -> String {
    let sets: Vec<(String, ArcSet)> = part
        .words
        .iter()
        .zip(&part.links)
        .map(|(w, l)| (w.to_string(), l.set().clone()))
        .collect();
    links_svg(
        &part.alpha,
        &format!("generalized cylinders of depth {} for alpha = {}", part.depth, part.alpha),
        &sets,
        leaves,
        style,
    )
}

/// A circuit: arcs, atoms and the glued atom pairs.
pub fn circuit_svg(c: &GluingCircuit, x: Option<&Angle>, style: Style) -> String {
    let mut cv = Canvas::new(&format!("gluing circuit for alpha = {}", c.alpha), style);
    if let Some(link) = &c.link {
        for a in link.arcs() {
            cv.arc(a, RADIUS + 24.0, "#cccccc", style.arc_stroke);
        }
    }
    let n = c.pairs.len();
    for (k, p) in c.pairs.iter().enumerate() {
        for (mu, tag) in [(&p.a_prime, "A'"), (&p.a, "A")] {
            cv.arc(&mu.support, RADIUS + 10.0, color(k), style.arc_stroke);
            for atom in &mu.atoms {
                cv.dot(&atom.at, RADIUS, color(k), 2.5);
            }
            cv.label(mu.support.midpoint().to_f64(), RADIUS + 45.0, &format!("{tag}{}", k + 1), color(k));
        }
        let next = &c.pairs[(k + 1) % n].a_prime;
        for (i, &j) in p.pairing.iter().enumerate() {
            cv.chord(&p.a.atoms[i].at, &next.atoms[j].at, color(k));
        }
    }
    if let Some(x) = x {
        cv.dot(x, RADIUS, "#000000", 4.0);
        cv.label(x.to_f64(), RADIUS - 25.0, "x", "black");
    }
    mark_alpha(&mut cv, &c.alpha);
    cv.finish()
}

/// Step plot of n against N(x, n).
pub fn encounter_plot(ns: &[(usize, usize)], title: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{c}" height="{c}" viewBox="0 0 {c} {c}">"#,
        c = CANVAS
    );
    let _ = writeln!(s, "<title>{}</title>", escape(title));
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let (x0, y0, w, h) = (100.0, 900.0, 800.0, 800.0);
    let nmax = ns.iter().map(|p| p.0).max().unwrap_or(1).max(1) as f64;
    let cmax = ns.iter().map(|p| p.1).max().unwrap_or(1).max(1) as f64;
    let _ = writeln!(s, r#"<path d="M {x0} {} L {x0} {y0} L {} {y0}" fill="none" stroke="black"/>"#, y0 - h, x0 + w);
    let _ = writeln!(s, r#"<text x="{}" y="950" font-family="monospace" font-size="20" text-anchor="middle">n</text>"#, x0 + w / 2.0);
    let _ = writeln!(s, r#"<text x="40" y="{}" font-family="monospace" font-size="20" text-anchor="middle">N(x,n)</text>"#, y0 - h / 2.0);
    let _ = writeln!(s, r#"<text x="{x0}" y="925" font-family="monospace" font-size="14" text-anchor="middle">0</text>"#);
    let _ = writeln!(s, r#"<text x="{}" y="925" font-family="monospace" font-size="14" text-anchor="middle">{}</text>"#, x0 + w, nmax);
    let _ = writeln!(s, r#"<text x="85" y="{}" font-family="monospace" font-size="14" text-anchor="end">{}</text>"#, y0 - h, cmax);
    let mut d = String::new();
    for (i, &(n, c)) in ns.iter().enumerate() {
        let px = x0 + w * n as f64 / nmax;
        let py = y0 - h * c as f64 / cmax;
        let _ = write!(d, "{} {} {} ", if i == 0 { "M" } else { "L" }, num(px), num(py));
    }
    let _ = writeln!(s, r#"<path d="{}" fill="none" stroke="{}" stroke-width="2"/>"#, d.trim_end(), color(0));
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn antipodal_is_straight() {
        assert!(geodesic_path(0.1, 0.6).contains(" L "));
        assert!(geodesic_path(0.1, 0.3).contains(" A "));
    }

    #[test]
    fn geodesic_is_orthogonal() {
        // Orthogonality: |center|^2 = R^2 + rr^2.
        for (a, b) in [(0.1, 0.3), (0.9, 0.05), (0.4, 0.2)] {
            let mut d = (b - a as f64).rem_euclid(1.0);
            if d > 0.5 {
                d = 1.0 - d;
            }
            let rr = RADIUS * (PI * d).tan();
            let dc = RADIUS / (PI * d).cos();
            assert!((dc * dc - RADIUS * RADIUS - rr * rr).abs() < 1e-6);
        }
    }

    #[test]
    fn deterministic_leaves() {
        let al: Angle = "2/7".parse().unwrap();
        let ls = vec![crate::gcs::leaves(&al, 0).unwrap(), crate::gcs::leaves(&al, 1).unwrap()];
        assert_eq!(leaves_svg(&al, &ls, Style::default()), leaves_svg(&al, &ls, Style::default()));
    }
}
