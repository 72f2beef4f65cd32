//! `khflow`: Khovanov homology, the oriented cube of resolutions and its
//! spectral sequence from the command line.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::ExitCode;
use std::sync::atomic::{AtomicBool, Ordering};

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use khflow::c2complex::{marked_edges, stable_homology, C2Error, C2Options};
use khflow::diagram::{augment_s2n, Closure, DecoratedDiagram};
use khflow::khovanov::{kh_homology, kh_pointed, KhError, KhVariant, PoincarePolynomial};
use khflow::reference::{self, admissible_for, rank_inequality, thinness};
use khflow::spectral::{page_polynomial, relabel_index, verify_structure};

#[derive(Parser, Debug)]
#[command(name = "khflow", version, about = "Khovanov homology and the oriented cube of resolutions")]
struct Cli {
    /// Worker threads; falls back to KHFLOW_THREADS.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Write a JSON report to stdout.
    #[arg(long, global = true)]
    emit_json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Khovanov homology of a braid or plat closure.
    Kh(KhArgs),
    /// Homology of the oriented cube of resolutions.
    C2(C2Args),
    /// Cube-filtration spectral sequence with structural checks.
    Ss(SsArgs),
    /// Compare reduced Khovanov homology against the knot Floer table.
    Verify(VerifyArgs),
}

#[derive(Args, Debug, Clone)]
struct InputArgs {
    /// Braid word (`s1 s2^-1 x1 ...`) or path to a diagram JSON file.
    input: String,
    /// Strand count; inferred from the word when absent.
    #[arg(long)]
    strands: Option<usize>,
    #[arg(long, value_enum, default_value = "braid")]
    closure: ClosureArg,
    /// Prepend `S'_2n` to a plat input so the result has a braid closure
    /// whose smoothing is the plat closure.
    #[arg(long)]
    augment: bool,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum ClosureArg {
    Braid,
    Plat,
}

#[derive(Args, Debug)]
struct KhArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Reduced homology (knots only).
    #[arg(long, conflicts_with = "pointed")]
    reduced: bool,
    /// One basepoint on the lowest edge of each component.
    #[arg(long)]
    pointed: bool,
    /// Use the mirror diagram.
    #[arg(long)]
    mirror: bool,
    /// Print only the δ-graded Poincaré polynomial.
    #[arg(long)]
    delta: bool,
}

#[derive(Args, Debug, Clone)]
struct C2Args {
    #[command(flatten)]
    input: InputArgs,
    /// Use the reduced complex (one cone per component).
    #[arg(long)]
    reduce: bool,
    /// Fixed gr₂ window `lo:hi`.
    #[arg(long, value_parser = parse_window)]
    window: Option<(i64, i64)>,
    /// Empty gr₂ positions required below the homology before it counts as stable.
    #[arg(long, default_value_t = 3)]
    stability_run: usize,
    /// Deepest automatic window, in steps of 2 below the top position.
    #[arg(long, default_value_t = 40)]
    max_depth: usize,
}

#[derive(Args, Debug)]
struct SsArgs {
    #[command(flatten)]
    c2: C2Args,
    /// Expected knot Floer homology from the bundled table.
    #[arg(long, conflicts_with = "hfk")]
    knot: Option<String>,
    /// Expected knot Floer δ-polynomial, e.g. `3d^2`.
    #[arg(long, value_parser = parse_poly)]
    hfk: Option<PoincarePolynomial>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// Total and per-δ rank comparison.
    #[arg(long)]
    rank_inequality: bool,
    /// Report which higher differentials could account for the difference.
    #[arg(long)]
    differentials: bool,
    /// Table in the bundled format instead of the bundled one.
    #[arg(long)]
    table: Option<String>,
}

/// Human-readable output goes to stdout unless JSON owns it.
static JSON_STDOUT: AtomicBool = AtomicBool::new(false);

macro_rules! out {
    ($($t:tt)*) => {
        if JSON_STDOUT.load(Ordering::Relaxed) {
            eprintln!($($t)*)
        } else {
            println!($($t)*)
        }
    };
}

/// Failure classes mapped to exit codes.
#[derive(Debug)]
enum Failure {
    Parse(anyhow::Error),
    Resource(anyhow::Error),
    Verdict(String),
    Other(anyhow::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Verdict(_) => 1,
            Failure::Parse(_) => 2,
            Failure::Resource(_) => 3,
            Failure::Other(_) => 1,
        }
    }
}

impl From<C2Error> for Failure {
    fn from(e: C2Error) -> Self {
        match e {
            C2Error::TooManyCrossings(_) | C2Error::TooManyVertices(_) | C2Error::Unstable(_) => {
                Failure::Resource(e.into())
            }
            C2Error::Diagram(_) => Failure::Parse(e.into()),
            _ => Failure::Other(e.into()),
        }
    }
}

impl From<KhError> for Failure {
    fn from(e: KhError) -> Self {
        match e {
            KhError::TooManyCrossings(_) => Failure::Resource(e.into()),
            KhError::NotAKnot(_) | KhError::Basepoints(_) => Failure::Parse(e.into()),
            _ => Failure::Other(e.into()),
        }
    }
}

fn parse_window(s: &str) -> Result<(i64, i64), String> {
    let (a, b) = s.split_once(':').ok_or("expected lo:hi")?;
    let lo: i64 = a.trim().parse().map_err(|e| format!("{e}"))?;
    let hi: i64 = b.trim().parse().map_err(|e| format!("{e}"))?;
    if lo > hi {
        return Err(format!("empty window {lo}:{hi}"));
    }
    Ok((lo, hi))
}

/// Parse `4d^12+2d^10+3d^8` (coefficient optional, `d` or `δ`).
fn parse_poly(s: &str) -> Result<PoincarePolynomial, String> {
    let mut pairs = Vec::new();
    for term in s.split('+').map(str::trim).filter(|t| !t.is_empty()) {
        let (c, e) =
            term.split_once("d^").or_else(|| term.split_once("δ^")).ok_or_else(|| format!("bad term `{term}`"))?;
        let c: usize = if c.is_empty() { 1 } else { c.parse().map_err(|_| format!("bad coefficient `{c}`"))? };
        let e: i64 = e.parse().map_err(|_| format!("bad exponent `{e}`"))?;
        pairs.push((e, c));
    }
    Ok(PoincarePolynomial::from_pairs(&pairs))
}

fn infer_strands(word: &str) -> usize {
    word.split_whitespace()
        .filter_map(|t| {
            let bivalent = t.starts_with('b');
            let digits: String =
                t.trim_start_matches(|c: char| !c.is_ascii_digit()).chars().take_while(char::is_ascii_digit).collect();
            digits.parse::<usize>().ok().map(|i| if bivalent { i } else { i + 1 })
        })
        .max()
        .unwrap_or(1)
}

fn load_diagram(a: &InputArgs) -> Result<DecoratedDiagram, Failure> {
    let parse = |e: khflow::diagram::DiagramError| Failure::Parse(e.into());
    let d = if a.input.ends_with(".json") && Path::new(&a.input).exists() {
        let text = std::fs::read_to_string(&a.input)
            .with_context(|| format!("reading {}", a.input))
            .map_err(Failure::Parse)?;
        DecoratedDiagram::from_json(&text).map_err(parse)?
    } else {
        let closure = match a.closure {
            ClosureArg::Braid => Closure::Braid,
            ClosureArg::Plat => Closure::Plat,
        };
        let mut strands = a.strands.unwrap_or_else(|| infer_strands(&a.input));
        if a.strands.is_none() && closure == Closure::Plat && strands % 2 == 1 {
            strands += 1;
        }
        DecoratedDiagram::parse_braid(&a.input, strands, closure).map_err(parse)?
    };
    if a.augment {
        return augment_s2n(&d).map_err(parse);
    }
    Ok(d)
}

fn poly_json(p: &PoincarePolynomial) -> Value {
    json!({ "coefficients": p.coefficients, "text": p.to_string() })
}

fn run_kh(a: &KhArgs) -> Result<Value, Failure> {
    let mut d = load_diagram(&a.input)?;
    if a.mirror {
        d = d.mirror();
    }
    let variant = if a.reduced {
        KhVariant::Reduced
    } else if a.pointed {
        KhVariant::Pointed(marked_edges(&d))
    } else {
        KhVariant::Unreduced
    };
    let h = match &variant {
        KhVariant::Pointed(p) => kh_pointed(&d, p, None)?,
        v => kh_homology(&d, v)?,
    };
    let delta = h.delta_poincare();
    if a.delta {
        out!("{delta}");
    } else {
        for (g, r) in h.nonzero() {
            out!("h={:>3} q={:>4} rank {r}", g.h, g.q);
        }
        out!("total {}  δ: {delta}", h.total());
    }
    Ok(json!({
        "command": "kh",
        "variant": variant.name(),
        "word": d.word(),
        "strands": d.strands(),
        "ranks": h.nonzero().iter().map(|(g, r)| json!({"h": g.h, "q": g.q, "rank": r})).collect::<Vec<_>>(),
        "total": h.total(),
        "delta": poly_json(&delta),
        "thin": thinness(&delta),
    }))
}

fn c2_options(a: &C2Args) -> C2Options {
    C2Options {
        reduce: a.reduce,
        window: a.window,
        stability_run: a.stability_run,
        max_depth: a.max_depth,
        ..C2Options::default()
    }
}

fn run_c2(a: &C2Args) -> Result<Value, Failure> {
    let d = load_diagram(&a.input)?;
    let opts = c2_options(a);
    log::info!("assembling over {} resolutions", 1u64 << d.crossing_count());
    let s = stable_homology(&d, &opts)?;
    let ss = s.spectral_sequence()?;
    let by_level: Vec<Value> =
        ss.infinity().dims.iter().map(|((g, p), n)| json!({"level": p, "gr2": g, "dim": n})).collect();
    let (lo, hi) = s.complex.window;
    out!("window {lo}:{hi}  stable {}", s.stable);
    for (g, n) in &s.homology {
        if *n > 0 {
            out!("gr2 {g:>4}: {n}");
        }
    }
    out!("total {}", s.total());
    let dims: BTreeMap<i64, usize> =
        s.complex.complex.dims.iter().filter(|(g, _)| (lo..=hi).contains(*g)).map(|(g, n)| (*g, *n)).collect();
    Ok(json!({
        "command": "c2",
        "reduced": a.reduce,
        "window": [lo, hi],
        "stable": s.stable,
        "vertices": s.complex.vertices,
        "dims": dims,
        "homology": s.homology,
        "homology_by_level": by_level,
        "total": s.total(),
    }))
}

fn run_ss(a: &SsArgs) -> Result<Value, Failure> {
    let d = load_diagram(&a.c2.input)?;
    let s = stable_homology(&d, &c2_options(&a.c2))?;
    let ss = s.spectral_sequence()?;
    let basepoints = marked_edges(&d);
    let kh_e2 = kh_pointed(&d.mirror(), &basepoints, None)?.delta_poincare();
    let expected = match (&a.knot, &a.hfk) {
        (Some(name), _) => Some(reference::lookup(name).map_err(|e| Failure::Parse(e.into()))?.delta_hfk.clone()),
        (None, Some(p)) => Some(p.clone()),
        _ => None,
    };
    let verdict = verify_structure(&ss, &s.complex.complex, &kh_e2, expected.as_ref());
    for p in &ss.pages {
        out!("E{}: {}  (rank d{} = {})", p.r, page_polynomial(p), p.r, p.rank_total());
    }
    out!("stable from E{}", ss.stable_from);
    out!("E2 = pointed Kh of mirror ({kh_e2}) up to shift: {}", if verdict.e2_matches { "ok" } else { "FAIL" });
    match verdict.einf_matches {
        Some(ok) => out!("E∞ = expected HFK: {}", if ok { "ok" } else { "FAIL" }),
        None => out!("E∞ = expected HFK: not checked"),
    }
    out!("even differentials vanish: {}", if verdict.even_vanish { "ok" } else { "FAIL" });
    out!("δ-degree -2: {}", if verdict.delta_degree { "ok" } else { "FAIL" });
    let pages: Vec<Value> = ss
        .pages
        .iter()
        .map(|p| {
            json!({
                "r": p.r,
                "total": p.total(),
                "dims": p.dims.iter().map(|((g, l), n)| json!({"gr2": g, "level": l, "dim": n})).collect::<Vec<_>>(),
            })
        })
        .collect();
    let ranks: Vec<Value> = ss
        .pages
        .iter()
        .flat_map(|p| p.d_ranks.iter().map(move |((g, l), n)| json!({"r": p.r, "gr2": g, "level": l, "rank": n})))
        .collect();
    let report = json!({
        "command": "ss",
        "window": [s.complex.window.0, s.complex.window.1],
        "pages": pages,
        "differential_ranks": ranks,
        "stable_from": ss.stable_from,
        "verdict": verdict,
        "passed": verdict.passed(),
    });
    if !verdict.passed() {
        return Err(Failure::Verdict(report.to_string()));
    }
    Ok(report)
}

fn run_verify(a: &VerifyArgs) -> Result<Value, Failure> {
    let owned;
    let table = match &a.table {
        Some(path) => {
            let text =
                std::fs::read_to_string(path).with_context(|| format!("reading {path}")).map_err(Failure::Parse)?;
            owned = reference::parse_table(&text).map_err(|e| Failure::Parse(e.into()))?;
            &owned[..]
        }
        None => reference::reference_knots(),
    };
    let mut rows = Vec::new();
    let mut all = true;
    for k in table {
        let d =
            DecoratedDiagram::parse_braid(&k.braid, k.strands, Closure::Braid).map_err(|e| Failure::Parse(e.into()))?;
        let kh = kh_homology(&d, &KhVariant::Reduced)?;
        let poly = kh.delta_poincare();
        let v = rank_inequality(&k.name, &k.delta_hfk, &poly);
        all &= v.passed();
        out!(
            "{:<8} rk Kh {:>3} ≥ rk HFK {:>3}  {}{}",
            k.name,
            v.kh_rank,
            v.hfk_rank,
            if v.passed() { "pass" } else { "FAIL" },
            if v.kh_thin { "  thin" } else { "" }
        );
        let mut row = json!({
            "knot": k.name,
            "source": k.source,
            "kh_reduced": poly_json(&poly),
            "hfk": poly_json(&k.delta_hfk),
            "verdict": v,
            "passed": v.passed(),
        });
        if a.differentials {
            let sols = admissible_for(&kh, &k.delta_hfk);
            for (shift, arrows) in &sols {
                for ar in arrows {
                    let (dh, dq) = ar.bigrading();
                    out!(
                        "    shift {shift}: ({},{}) -> ({},{}) bigrading ({dh},{dq}) d{}{}",
                        ar.from.h,
                        ar.from.q,
                        ar.to.h,
                        ar.to.q,
                        dh,
                        relabel_index(dh as u32).map(|k| format!(" (E0-indexed d{k})")).unwrap_or_default()
                    );
                }
            }
            row["admissible"] = json!(sols
                .iter()
                .map(|(shift, arrows)| json!({
                    "shift": shift,
                    "arrows": arrows.iter().map(|ar| json!({
                        "from": [ar.from.h, ar.from.q],
                        "to": [ar.to.h, ar.to.q],
                        "bigrading": [ar.bigrading().0, ar.bigrading().1],
                    })).collect::<Vec<_>>(),
                }))
                .collect::<Vec<_>>());
        }
        rows.push(row);
    }
    let report = json!({ "command": "verify", "knots": rows, "passed": all });
    if !all {
        return Err(Failure::Verdict(report.to_string()));
    }
    Ok(report)
}

fn threads(cli: &Cli) -> Result<Option<usize>, Failure> {
    if let Some(n) = cli.threads {
        return Ok(Some(n));
    }
    match std::env::var("KHFLOW_THREADS") {
        Ok(v) => v.trim().parse().map(Some).map_err(|_| Failure::Parse(anyhow!("KHFLOW_THREADS={v} is not a number"))),
        Err(_) => Ok(None),
    }
}

fn run(cli: &Cli) -> Result<Value, Failure> {
    if let Some(n) = threads(cli)? {
        if n == 0 {
            return Err(Failure::Parse(anyhow!("thread count must be positive")));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| Failure::Other(e.into()))?;
    }
    let mut v = match &cli.command {
        Command::Kh(a) => run_kh(a)?,
        Command::C2(a) => run_c2(a)?,
        Command::Ss(a) => run_ss(a)?,
        Command::Verify(a) => {
            if !a.rank_inequality && !a.differentials {
                return Err(Failure::Parse(anyhow!("verify needs --rank-inequality or --differentials")));
            }
            run_verify(a)?
        }
    };
    v["schema"] = json!(1);
    Ok(v)
}

fn emit(v: &Value) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(v)?;
    println!("{text}");
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    JSON_STDOUT.store(cli.emit_json, Ordering::Relaxed);
    match run(&cli) {
        Ok(v) => {
            if cli.emit_json {
                if let Err(e) = emit(&v) {
                    eprintln!("error: {e}");
                    return ExitCode::from(1);
                }
            }
            ExitCode::SUCCESS
        }
        Err(f) => {
            if let Failure::Verdict(report) = &f {
                if cli.emit_json {
                    let mut v: Value = serde_json::from_str(report).unwrap_or(Value::Null);
                    v["schema"] = json!(1);
                    let _ = emit(&v);
                }
                eprintln!("verdict: FAIL");
            } else {
                let e = match &f {
                    Failure::Parse(e) | Failure::Resource(e) | Failure::Other(e) => e,
                    Failure::Verdict(_) => unreachable!(),
                };
                eprintln!("error: {e:#}");
            }
            ExitCode::from(f.code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn windows() {
        assert_eq!(parse_window("-4:6"), Ok((-4, 6)));
        assert!(parse_window("3:1").is_err());
        assert!(parse_window("3").is_err());
    }

    #[test]
    fn polynomials() {
        let p = parse_poly("4d^12+1d^10+2d^8").unwrap();
        assert_eq!(p.to_string(), "4d^12+1d^10+2d^8");
        assert_eq!(parse_poly("d^-2").unwrap().get(-2), 1);
        assert!(parse_poly("4x^2").is_err());
    }

    #[test]
    fn strand_inference() {
        assert_eq!(infer_strands("s1 s2^-1 s3"), 4);
        assert_eq!(infer_strands("x2 b3"), 3);
        assert_eq!(infer_strands(""), 1);
    }
}
