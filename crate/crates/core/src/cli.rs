//! The `lamina` command line tool: thin wrappers over the library, SVG
//! rendering, JSON/CSV reports and the parallel angle scan.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::circle::{Angle, ArcSet, Degree, Q};
use crate::circuits::{circuit_check, iterate_pullback, nice_circuit_for, CircuitOptions};
use crate::error::{Error, Result};
use crate::gcs::{covering_ck, digit_fixing_check, gcs_partition, CoveringCK, DigitFixing, Leaf};
use crate::lamination::{cylinder_set, equivalence_class, is_periodic, pullback_chain};
use crate::render::{self, Style};
use crate::report::{rational, SCHEMA_VERSION};
use crate::symbolic::{itinerary, kneading, legal, sr_search, weak_preperiodicity, SrCertificate, SrMode, SrOptions, WppWitness};
use crate::word::Word;

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Text,
    Json,
    Svg,
    Csv,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RenderWhat {
    Leaves,
    Cylinders,
    Gcs,
    Circuit,
    Links,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    All,
    Odd,
    Even,
}

/// Options shared by every command; the resolved set is embedded in reports.
#[derive(Args, Clone, Debug, Serialize)]
pub struct Common {
    /// Parameter angle p/q.
    #[arg(long, global = true)]
    pub alpha: Option<String>,
    #[arg(long, global = true, default_value_t = 2)]
    pub degree: u32,
    #[arg(long, global = true)]
    pub depth: Option<usize>,
    #[arg(long = "K", global = true)]
    pub k: Option<usize>,
    #[arg(long = "L", global = true)]
    pub l: Option<usize>,
    /// Comma-separated τ grid for the strong recurrence search.
    #[arg(long, global = true)]
    pub tau: Option<String>,
    /// Comma-separated D grid for the strong recurrence search.
    #[arg(long = "D", global = true)]
    pub d0: Option<String>,
    #[arg(long, global = true)]
    pub nmax: Option<usize>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Parser, Debug)]
#[command(name = "lamina", version, about = "Exact combinatorics of unicritical laminations")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub cmd: Command,
}

#[derive(Subcommand, Clone, Debug, Serialize)]
#[serde(tag = "command", rename_all = "lowercase")]
pub enum Command {
    /// First n letters of the itinerary of x.
    Itinerary {
        #[arg(long)]
        x: String,
        #[arg(long, default_value_t = 10)]
        n: usize,
    },
    /// Kneading sequence of α in eventually periodic form.
    Kneading,
    /// Legal word of a star-free word.
    Legal {
        #[arg(long)]
        word: String,
    },
    /// Equivalence class of x.
    Class {
        #[arg(long)]
        x: String,
    },
    /// Draw leaves, cylinders, the GCS partition, a circuit or C^K links.
    Render {
        #[arg(value_enum)]
        what: RenderWhat,
        /// Point the circuit is built around.
        #[arg(long)]
        x: Option<String>,
        #[arg(long, default_value_t = 1.5)]
        stroke: f64,
        #[arg(long)]
        no_labels: bool,
    },
    /// Per-angle detector statistics over a family of angles.
    Scan {
        /// Explicit comma-separated angle list.
        #[arg(long)]
        angles: Option<String>,
        /// All reduced p/q with q up to this bound.
        #[arg(long)]
        qmax: Option<u64>,
        #[arg(long, value_enum, default_value_t = Parity::All)]
        parity: Parity,
        /// Sampled points per angle for encounter statistics.
        #[arg(long, default_value_t = 4)]
        samples: usize,
        /// Also try to build a nice circuit per angle.
        #[arg(long)]
        circuits: bool,
    },
    /// Encounter numbers N(x, n) for n ≤ nmax with the C^K covering.
    Encounter {
        #[arg(long)]
        x: String,
        /// Also write an SVG plot here.
        #[arg(long)]
        plot: Option<PathBuf>,
    },
    /// Build a nice circuit around x and optionally pull it back along w.
    Circuit {
        #[arg(long)]
        x: String,
        /// Pull back to w̃(x) with this star-free word.
        #[arg(long)]
        word: Option<String>,
    },
}

/// The resolved configuration recorded in every report.
#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub command: Command,
    pub d: u32,
    pub alpha: Option<String>,
    pub depth: usize,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "L")]
    pub l: usize,
    pub sr_d: Vec<usize>,
    pub sr_tau: Vec<String>,
    pub nmax: usize,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub jobs: usize,
    pub seed: u64,
    pub max_denom: Option<u64>,
}

/// What a command produced.
pub enum Output {
    Text(String),
    Json(Value),
    Svg(String),
    Csv(String),
}

fn parse_angle(s: &str, cfg: &RunConfig) -> Result<Angle> {
    let a: Angle = s.parse().map_err(|_| Error::InvalidInput(format!("bad angle {s:?}")))?;
    if let Some(m) = cfg.max_denom {
        if a.denom() > &BigInt::from(m) {
            return Err(Error::DenominatorLimit(a.denom().to_string()));
        }
    }
    Ok(a)
}

fn alpha_of(cfg: &RunConfig) -> Result<Angle> {
    let s = cfg.alpha.as_deref().ok_or_else(|| Error::InvalidInput("--alpha is required".into()))?;
    parse_angle(s, cfg)
}

fn degree(cfg: &RunConfig) -> Result<Degree> {
    Degree::new(cfg.d)
}

fn need_two(cfg: &RunConfig) -> Result<()> {
    if cfg.d != 2 {
        return Err(Error::InvalidInput("this command supports degree 2 only".into()));
    }
    Ok(())
}

fn parse_list<T: std::str::FromStr>(s: &str) -> Result<Vec<T>> {
    s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| t.trim().parse::<T>().map_err(|_| Error::InvalidInput(format!("bad list entry {t:?}"))))
        .collect()
}

impl RunConfig {
    pub fn resolve(cli: &Cli) -> Result<RunConfig> {
        let c = &cli.common;
        let fmt_default = match cli.cmd {
            Command::Render { .. } => Format::Svg,
            Command::Itinerary { .. } | Command::Kneading | Command::Legal { .. } => Format::Text,
            _ => Format::Json,
        };
        let max_denom = match std::env::var("LAMINA_MAX_DENOM") {
            Ok(v) => Some(v.trim().parse::<u64>().map_err(|_| Error::InvalidInput(format!("LAMINA_MAX_DENOM={v:?}")))?),
            Err(_) => None,
        };
        let cfg = RunConfig {
            command: cli.cmd.clone(),
            d: c.degree,
            alpha: c.alpha.clone(),
            depth: c.depth.unwrap_or(2),
            k: c.k.unwrap_or(1),
            l: c.l.unwrap_or(2),
            sr_d: parse_list(c.d0.as_deref().unwrap_or("2,4,8"))?,
            sr_tau: c
                .tau
                .as_deref()
                .unwrap_or("1/2,9/10")
                .split(',')
                .map(|s| s.trim().to_string())
                .filter(|s| !s.is_empty())
                .collect(),
            nmax: c.nmax.unwrap_or(20),
            out: c.out.clone(),
            format: c.format.unwrap_or(fmt_default),
            jobs: c.jobs.unwrap_or(0),
            seed: c.seed,
            max_denom,
        };
        if cfg.k == 0 || cfg.nmax == 0 || cfg.sr_d.iter().any(|&d| d == 0) {
            return Err(Error::InvalidInput("K, nmax and D must be positive".into()));
        }
        Ok(cfg)
    }

    fn taus(&self) -> Result<Vec<Q>> {
        self.sr_tau
            .iter()
            .map(|s| rational::parse(s).ok_or_else(|| Error::InvalidInput(format!("bad tau {s:?}"))))
            .collect()
    }
}

fn style(cfg: &RunConfig) -> Style {
    match &cfg.command {
        Command::Render { stroke, no_labels, .. } => Style {
            stroke: *stroke,
            labels: !no_labels,
            ..Style::default()
        },
        _ => Style::default(),
    }
}

/// Class depth used by every C^K construction.
const CLASS_DEPTH: usize = 40;

fn covering(cfg: &RunConfig, alpha: &Angle) -> Result<CoveringCK> {
    need_two(cfg)?;
    covering_ck(alpha, cfg.k, CLASS_DEPTH)
}

pub fn execute(cfg: &RunConfig) -> Result<Output> {
    match &cfg.command {
        Command::Itinerary { x, n } => {
            let (a, x) = (alpha_of(cfg)?, parse_angle(x, cfg)?);
            let w = itinerary(degree(cfg)?, &a, &x, *n);
            Ok(match cfg.format {
                Format::Json => Output::Json(json!({ "itinerary": w })),
                _ => Output::Text(w.to_string()),
            })
        }
        Command::Kneading => {
            let a = alpha_of(cfg)?;
            let nu = kneading(degree(cfg)?, &a);
            Ok(match cfg.format {
                Format::Json => Output::Json(json!({ "kneading": nu })),
                _ => Output::Text(nu.to_string()),
            })
        }
        Command::Legal { word } => {
            let a = alpha_of(cfg)?;
            let g: Word = word.parse()?;
            let nu = kneading(degree(cfg)?, &a);
            let w = legal(&g, &nu);
            Ok(match cfg.format {
                Format::Json => Output::Json(json!({ "word": g, "legal": w })),
                _ => Output::Text(w.to_string()),
            })
        }
        Command::Class { x } => {
            let (a, x) = (alpha_of(cfg)?, parse_angle(x, cfg)?);
            let c = equivalence_class(degree(cfg)?, &a, &x, cfg.depth.max(8))?;
            Ok(match cfg.format {
                Format::Text => Output::Text(c.points.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(" ")),
                _ => Output::Json(serde_json::to_value(&c).map_err(internal)?),
            })
        }
        Command::Render { what, x, .. } => render_cmd(cfg, *what, x.as_deref()),
        Command::Scan {
            angles,
            qmax,
            parity,
            samples,
            circuits,
        } => {
            need_two(cfg)?;
            let family = angle_family(cfg, angles.as_deref(), *qmax, *parity)?;
            let report = scan(cfg, &family, *samples, *circuits)?;
            Ok(match cfg.format {
                Format::Csv => Output::Csv(scan_csv(&report)),
                _ => Output::Json(serde_json::to_value(&report).map_err(internal)?),
            })
        }
        Command::Encounter { x, plot } => {
            let (a, x) = (alpha_of(cfg)?, parse_angle(x, cfg)?);
            let cov = covering(cfg, &a)?;
            let mut pts = Vec::new();
            let mut traces = Vec::new();
            for n in 0..=cfg.nmax {
                let (_, tr) = pullback_chain(&cov, &x, n)?;
                pts.push((n, tr.count));
                traces.push(tr);
            }
            if let Some(p) = plot {
                let svg = render::encounter_plot(&pts, &format!("N(x, n) for alpha = {a}, x = {x}"));
                std::fs::write(p, svg).map_err(|e| Error::InvalidInput(format!("cannot write {}: {e}", p.display())))?;
            }
            Ok(Output::Json(json!({ "traces": traces })))
        }
        Command::Circuit { x, word } => {
            need_two(cfg)?;
            let (a, x) = (alpha_of(cfg)?, parse_angle(x, cfg)?);
            let c = nice_circuit_for(&a, cfg.k, &x, &CircuitOptions::default())?;
            let check = circuit_check(&c);
            let mut v = json!({ "circuit": c, "check": check });
            if let Some(w) = word {
                let w: Word = w.parse()?;
                let z = crate::circle::apply_word(Degree::TWO, &a, &w, &x)?;
                let run = iterate_pullback(&c, &z, w.len())?;
                v["pullback"] = json!({ "x": z, "trace": run.trace, "steps": run.steps, "params": run.circuit.params });
            }
            Ok(Output::Json(v))
        }
    }
}

fn internal(e: serde_json::Error) -> Error {
    Error::Undetermined(format!("serialization failed: {e}"))
}

fn render_cmd(cfg: &RunConfig, what: RenderWhat, x: Option<&str>) -> Result<Output> {
    need_two(cfg)?;
    let a = alpha_of(cfg)?;
    let st = style(cfg);
    let n = cfg.depth;
    // Leaves through an orbit point of a periodic α do not exist; skip them.
    let all_leaves = |n: usize| -> Result<Vec<Vec<Leaf>>> {
        Ok((0..=n)
            .map(|i| Word::all_star_free(2, i).iter().filter_map(|u| Leaf::new(&a, u).ok()).collect())
            .collect())
    };
    let svg = match what {
        RenderWhat::Leaves => render::leaves_svg(&a, &all_leaves(n)?, st),
        RenderWhat::Cylinders => {
            let mut sets = Vec::new();
            for w in Word::all_star_free(2, n.max(1)) {
                sets.push((w.to_string(), cylinder_set(Degree::TWO, &a, &w)?));
            }
            let ls: Vec<_> = all_leaves(n.max(1) - 1)?.into_iter().flatten().collect();
            render::links_svg(&a, &format!("cylinder sets of length {} for alpha = {a}", n.max(1)), &sets, &ls, st)
        }
        RenderWhat::Gcs => {
            let part = gcs_partition(&a, n)?;
            let ls: Vec<_> = all_leaves(n)?.into_iter().flatten().collect();
            render::gcs_svg(&part, &ls, st)
        }
        RenderWhat::Circuit => {
            let x = parse_angle(x.ok_or_else(|| Error::InvalidInput("render circuit needs --x".into()))?, cfg)?;
            let c = nice_circuit_for(&a, cfg.k, &x, &CircuitOptions::default())?;
            render::circuit_svg(&c, Some(&x), st)
        }
        RenderWhat::Links => {
            let cov = covering(cfg, &a)?;
            let sets: Vec<(String, ArcSet)> = cov
                .pieces
                .iter()
                .map(|p| {
                    let w = &cov.partition(p.level).words[p.region];
                    (format!("{w}@{}", p.level), p.set.clone())
                })
                .collect();
            render::links_svg(&a, &format!("C^{} pieces for alpha = {a}", cfg.k), &sets, &[], st)
        }
    };
    Ok(Output::Svg(svg))
}

fn angle_family(cfg: &RunConfig, angles: Option<&str>, qmax: Option<u64>, parity: Parity) -> Result<Vec<Angle>> {
    let mut out = Vec::new();
    if let Some(list) = angles {
        for s in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            out.push(parse_angle(s, cfg)?);
        }
    }
    if let Some(qm) = qmax {
        for q in 2..=qm {
            let keep = match parity {
                Parity::All => true,
                Parity::Odd => q % 2 == 1,
                Parity::Even => q % 2 == 0,
            };
            if !keep {
                continue;
            }
            for p in 1..q {
                if num_integer::gcd(p, q) == 1 {
                    out.push(Angle::from_ratio(p as i64, q as i64));
                }
            }
        }
    }
    out.sort();
    out.dedup();
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct SrEntry {
    #[serde(rename = "D")]
    pub d: usize,
    pub tau: String,
    /// None when nothing was found within the budget.
    pub certificate: Option<SrCertificate>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct EncounterStats {
    pub samples: usize,
    pub evaluated: usize,
    pub min: Option<usize>,
    pub median: Option<usize>,
    pub errors: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct AngleRecord {
    pub alpha: Angle,
    pub kneading: String,
    pub periodic: bool,
    pub wpp: WppWitness,
    pub sr: Vec<SrEntry>,
    pub digit_fixing: Option<DigitFixing>,
    pub encounters: Option<EncounterStats>,
    pub circuit: Option<bool>,
    /// Failures of individual detectors; never abort the scan.
    pub errors: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScanSummary {
    pub angles: usize,
    pub wpp_witnesses: usize,
    pub sr_certified: usize,
    pub digit_fixing_certified: usize,
    pub circuits_built: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScanReport {
    pub records: Vec<AngleRecord>,
    pub summary: ScanSummary,
}

fn sample_point(rng: &mut ChaCha8Rng) -> Angle {
    let q: i64 = rng.gen_range(3..=997);
    let p: i64 = rng.gen_range(1..q);
    Angle::from_ratio(p, q)
}

fn scan_one(cfg: &RunConfig, alpha: &Angle, taus: &[Q], samples: usize, circuits: bool, seed: u64) -> AngleRecord {
    let d = Degree::TWO;
    let nu = kneading(d, alpha);
    let periodic = is_periodic(d, alpha);
    let mut errors = Vec::new();
    let mut sr = Vec::new();
    for &dd in &cfg.sr_d {
        for (tau, ts) in taus.iter().zip(&cfg.sr_tau) {
            let opts = SrOptions {
                exhaustive_cap: 10,
                max_evaluations: 200_000,
            };
            let (certificate, error) = match sr_search(&nu, dd, tau, cfg.nmax.max(dd + 1), SrMode::Greedy, opts) {
                Ok(c) => (c, None),
                Err(e) => (None, Some(e.to_string())),
            };
            sr.push(SrEntry {
                d: dd,
                tau: ts.clone(),
                certificate,
                error,
            });
        }
    }
    let mut digit_fixing = None;
    let mut encounters = None;
    let mut circuit = None;
    if periodic {
        errors.push("periodic alpha: C^K covering skipped".into());
    } else {
        match covering_ck(alpha, cfg.k, CLASS_DEPTH) {
            Ok(cov) => {
                match digit_fixing_check(&cov, cfg.l, cfg.depth.max(cfg.k)) {
                    Ok(v) => digit_fixing = Some(v),
                    Err(e) => errors.push(format!("digit fixing: {e}")),
                }
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut vals = Vec::new();
                let mut errs = 0;
                for _ in 0..samples {
                    let x = sample_point(&mut rng);
                    let n = rng.gen_range(1..=cfg.nmax);
                    match pullback_chain(&cov, &x, n) {
                        Ok((_, tr)) => vals.push(tr.count),
                        Err(_) => errs += 1,
                    }
                }
                vals.sort_unstable();
                encounters = Some(EncounterStats {
                    samples,
                    evaluated: vals.len(),
                    min: vals.first().copied(),
                    median: vals.get(vals.len() / 2).copied(),
                    errors: errs,
                });
                if circuits {
                    let x = sample_point(&mut rng);
                    let ok = nice_circuit_for(alpha, cfg.k, &x, &CircuitOptions::default());
                    if let Err(e) = &ok {
                        errors.push(format!("circuit: {e}"));
                    }
                    circuit = Some(ok.is_ok());
                }
            }
            Err(e) => errors.push(format!("covering: {e}")),
        }
    }
    AngleRecord {
        alpha: alpha.clone(),
        kneading: nu.to_string(),
        periodic,
        wpp: weak_preperiodicity(&nu),
        sr,
        digit_fixing,
        encounters,
        circuit,
        errors,
    }
}

/// Evaluate every angle in parallel; records come back in angle order.
pub fn scan(cfg: &RunConfig, family: &[Angle], samples: usize, circuits: bool) -> Result<ScanReport> {
    let taus = cfg.taus()?;
    let work = || -> Vec<AngleRecord> {
        family
            .par_iter()
            .enumerate()
            .map(|(i, a)| scan_one(cfg, a, &taus, samples, circuits, cfg.seed.wrapping_add(i as u64)))
            .collect()
    };
    let records = if cfg.jobs > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.jobs)
            .build()
            .map_err(|e| Error::Undetermined(e.to_string()))?
            .install(work)
    } else {
        work()
    };
    let summary = ScanSummary {
        angles: records.len(),
        wpp_witnesses: records.len(),
        sr_certified: records.iter().filter(|r| r.sr.iter().any(|s| s.certificate.is_some())).count(),
        digit_fixing_certified: records
            .iter()
            .filter(|r| matches!(r.digit_fixing, Some(DigitFixing::Certified { .. })))
            .count(),
        circuits_built: records.iter().filter(|r| r.circuit == Some(true)).count(),
    };
    Ok(ScanReport { records, summary })
}

pub const CSV_COLUMNS: &str = "alpha,kneading,periodic,wpp_m,wpp_k,wpp_letter,sr_certified,digit_fixing,enc_min,enc_median,circuit,errors";

pub fn scan_csv(r: &ScanReport) -> String {
    let mut s = format!("# {SCHEMA_VERSION}\n{CSV_COLUMNS}\n");
    let opt = |x: Option<usize>| x.map(|v| v.to_string()).unwrap_or_default();
    for rec in &r.records {
        let df = match &rec.digit_fixing {
            Some(DigitFixing::Certified { start }) => format!("certified:{start}"),
            Some(DigitFixing::Counterexample { m, i }) => format!("counterexample:{m}:{i}"),
            Some(DigitFixing::Inconclusive { m }) => format!("inconclusive:{m}"),
            None => String::new(),
        };
        let enc = rec.encounters.as_ref();
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}\n",
            rec.alpha,
            rec.kneading,
            rec.periodic,
            rec.wpp.m,
            rec.wpp.k,
            rec.wpp.letter,
            rec.sr.iter().filter(|e| e.certificate.is_some()).count(),
            df,
            opt(enc.and_then(|e| e.min)),
            opt(enc.and_then(|e| e.median)),
            rec.circuit.map(|b| b.to_string()).unwrap_or_default(),
            rec.errors.len()
        ));
    }
    s
}

fn envelope(cfg: &RunConfig, result: Value) -> Value {
    json!({ "schema": SCHEMA_VERSION, "config": cfg, "result": result })
}

fn emit(cfg: &RunConfig, out: Output) -> std::io::Result<()> {
    let text = match out {
        Output::Text(t) => t + "\n",
        Output::Json(v) => serde_json::to_string_pretty(&envelope(cfg, v)).unwrap_or_default() + "\n",
        Output::Svg(s) => s,
        Output::Csv(s) => s,
    };
    match &cfg.out {
        Some(p) => std::fs::write(p, text),
        None => {
            use std::io::Write;
            std::io::stdout().write_all(text.as_bytes())
        }
    }
}

fn error_json(cfg: Option<&RunConfig>, e: &Error) -> String {
    let v = json!({
        "schema": SCHEMA_VERSION,
        "config": cfg,
        "error": { "kind": format!("{e:?}").split(['(', ' ', '{']).next().unwrap_or(""), "message": e.to_string() },
        "exit_code": e.exit_code(),
    });
    serde_json::to_string_pretty(&v).unwrap_or_default()
}

/// Parse arguments, run, print, and return the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let cfg = match RunConfig::resolve(&cli) {
        Ok(c) => c,
        Err(e) => {
            println!("{}", error_json(None, &e));
            return e.exit_code();
        }
    };
    match execute(&cfg) {
        Ok(out) => match emit(&cfg, out) {
            Ok(()) => 0,
            Err(e) => {
                eprintln!("cannot write output: {e}");
                1
            }
        },
        Err(e) => {
            println!("{}", error_json(Some(&cfg), &e));
            e.exit_code()
        }
    }
}
