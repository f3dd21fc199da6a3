use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::{ContextKind, ContextValue, ErrorKind};
use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use canheights::canheight::{CanHeightError, DynamicalSystem, Kind, PointSpec, SystemFile, SystemPoint};
use canheights::character_lattice::{find_distinguished, lattice_certificate, GroupWord};
use canheights::elliptic::{CurveQ, PointRepr, HEIGHT_CONVENTION};
use canheights::exact::parse_rat;
use canheights::ns_abelian::dynamical_degree_profile;
use canheights::tolerance::DIGIT_BUDGET;
use canheights::wehler::{self, WehlerSurface};

#[derive(Parser, Debug)]
#[command(name = "canheights", version, about = "Canonical heights for abelian automorphism groups")]
struct Cli {
    /// Run directory; defaults to runs/<subcommand>.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Recorded in every manifest.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Invariant suite for a system file.
    Verify {
        #[arg(long)]
        system: PathBuf,
    },
    /// Characters and eigendivisors.
    Characters {
        #[arg(long)]
        system: PathBuf,
    },
    /// Distinguished words for every index.
    Distinguished {
        #[arg(long)]
        system: PathBuf,
        #[arg(long)]
        bound: Option<i64>,
    },
    /// Exact φ-orbit on a Wehler surface.
    Orbit {
        #[arg(long)]
        surface: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        point: String,
        #[arg(long, default_value_t = 5)]
        steps: usize,
    },
    /// Néron–Tate height of a point on a curve.
    Height {
        #[arg(long)]
        curve: PathBuf,
        /// `x,y` with rational entries, or `O`.
        #[arg(long, allow_hyphen_values = true)]
        point: String,
        #[arg(long, default_value_t = 8)]
        iters: u32,
    },
    /// ĥ_G with per-index values and tails.
    Canheight {
        #[arg(long)]
        system: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        point: String,
    },
    /// Zero-locus classification.
    Classify {
        #[arg(long)]
        system: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        point: String,
        #[arg(long, default_value_t = 64)]
        period_bound: usize,
    },
    /// Arithmetic degree along a word.
    Alpha {
        #[arg(long)]
        system: PathBuf,
        #[arg(long)]
        g: String,
        #[arg(long, allow_hyphen_values = true)]
        point: String,
        #[arg(long, default_value_t = 200)]
        m_budget: usize,
    },
    /// Orbit counting function N(T).
    Counting {
        #[arg(long)]
        system: PathBuf,
        #[arg(long)]
        g: String,
        #[arg(long, allow_hyphen_values = true)]
        point: String,
        /// `auto` or a positive number; the grid is geometric up to it.
        #[arg(long = "Tmax", default_value = "auto")]
        tmax: String,
        #[arg(long, default_value_t = 200)]
        m_budget: usize,
    },
    /// Points of bounded height on a Wehler surface.
    Enumerate {
        #[arg(long)]
        surface: PathBuf,
        #[arg(long)]
        bound: f64,
    },
    /// φ-periodic points of bounded height.
    Periodic {
        #[arg(long)]
        surface: PathBuf,
        #[arg(long)]
        bound: f64,
        #[arg(long, default_value_t = 6)]
        period_bound: usize,
    },
    /// ĥ_G against Ĥ_G over enumerated or fixture points.
    Scatter {
        #[arg(long)]
        system: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        bound: f64,
    },
}

impl Cmd {
    fn name(&self) -> &'static str {
        match self {
            Cmd::Verify { .. } => "verify",
            Cmd::Characters { .. } => "characters",
            Cmd::Distinguished { .. } => "distinguished",
            Cmd::Orbit { .. } => "orbit",
            Cmd::Height { .. } => "height",
            Cmd::Canheight { .. } => "canheight",
            Cmd::Classify { .. } => "classify",
            Cmd::Alpha { .. } => "alpha",
            Cmd::Counting { .. } => "counting",
            Cmd::Enumerate { .. } => "enumerate",
            Cmd::Periodic { .. } => "periodic",
            Cmd::Scatter { .. } => "scatter",
        }
    }
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{msg}")]
    Config { field: String, msg: String },
    #[error("{0}")]
    Module(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    fn config(field: impl Into<String>, msg: impl ToString) -> Self {
        CliError::Config { field: field.into(), msg: msg.to_string() }
    }

    fn to_json(&self) -> Value {
        match self {
            CliError::Config { field, msg } => json!({"error": "config", "field": field, "message": msg}),
            CliError::Module(msg) => json!({"error": "module", "message": msg}),
            CliError::Io(msg) => json!({"error": "io", "message": msg}),
        }
    }

    fn code(&self) -> u8 {
        match self {
            CliError::Config { .. } => 2,
            _ => 1,
        }
    }
}

impl From<CanHeightError> for CliError {
    fn from(e: CanHeightError) -> Self {
        match e {
            CanHeightError::Field { field, msg } => CliError::Config { field, msg },
            other => CliError::Module(other.to_string()),
        }
    }
}

macro_rules! module_err {
    ($($t:ty),*) => {
        $(impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Module(e.to_string())
            }
        })*
    };
}

module_err!(
    canheights::elliptic::EllipticError,
    canheights::wehler::WehlerError,
    canheights::ns_abelian::NsError,
    canheights::character_lattice::LatticeError
);

type Result<T> = std::result::Result<T, CliError>;

/// Output of one subcommand: a JSON record plus an optional CSV table.
struct Output {
    record: Value,
    table: Option<(Vec<&'static str>, Vec<Vec<String>>)>,
    ok: bool,
}

impl Output {
    fn record(v: impl Serialize) -> Result<Self> {
        Ok(Output { record: to_value(v)?, table: None, ok: true })
    }
}

fn to_value(v: impl Serialize) -> Result<Value> {
    serde_json::to_value(v).map_err(|e| CliError::Io(e.to_string()))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path, field: &str) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| CliError::config(field, format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::config(field, format!("{}: {e}", path.display())))
}

fn load_system(path: &Path) -> Result<(DynamicalSystem, SystemFile)> {
    let file: SystemFile = read_json(path, "system")?;
    let sys = DynamicalSystem::from_file(&file)?;
    Ok((sys, file))
}

fn load_surface(path: &Path) -> Result<WehlerSurface> {
    match read_json::<SystemFile>(path, "surface")? {
        SystemFile::Wehler(w) => Ok(WehlerSurface::from_fixture(&w.surface)?),
        SystemFile::Abelian(_) => Err(CliError::config("surface", "expected a system with kind \"wehler\"")),
    }
}

fn named_points(file: &SystemFile) -> Vec<(String, PointSpec)> {
    match file {
        SystemFile::Abelian(a) => a.points.iter().map(|(k, v)| (k.clone(), v.clone())).collect(),
        SystemFile::Wehler(w) => w.named_points.iter().map(|(k, v)| (k.clone(), v.clone())).collect(),
    }
}

/// A fixture point name, a JSON file, inline JSON, or `x0,x1,x2;y0,y1,y2`.
fn point_spec(file: Option<&SystemFile>, arg: &str) -> Result<PointSpec> {
    if let Some(f) = file {
        if let Some((_, spec)) = named_points(f).into_iter().find(|(k, _)| k == arg) {
            return Ok(spec);
        }
    }
    let path = Path::new(arg);
    if path.is_file() {
        return read_json(path, "point");
    }
    if let Ok(spec) = serde_json::from_str::<PointSpec>(arg) {
        return Ok(spec);
    }
    let halves: Vec<&str> = arg.split(';').collect();
    if halves.len() == 2 {
        let parse = |s: &str| -> Option<[i64; 3]> {
            let v: Vec<i64> = s.split(',').map(|t| t.trim().parse().ok()).collect::<Option<_>>()?;
            v.try_into().ok()
        };
        if let (Some(x), Some(y)) = (parse(halves[0]), parse(halves[1])) {
            return Ok(PointSpec::Wehler([x, y]));
        }
    }
    Err(CliError::config("point", format!("not a fixture name, file, or point literal: {arg}")))
}

fn resolve_point(sys: &DynamicalSystem, file: &SystemFile, arg: &str) -> Result<SystemPoint> {
    let spec = point_spec(Some(file), arg)?;
    sys.point(&spec).map_err(|e| match e {
        CanHeightError::WrongPointKind
        | CanHeightError::DimensionMismatch { .. }
        | CanHeightError::Elliptic(canheights::elliptic::EllipticError::NotOnCurve(..))
        | CanHeightError::Wehler(canheights::wehler::WehlerError::NotOnSurface | canheights::wehler::WehlerError::ZeroVector) => {
            CliError::config("point", e)
        }
        other => other.into(),
    })
}

/// Generator label, `g<i>` for the i-th distinguished word, `phi`, or
/// comma-separated exponents.
fn resolve_word(sys: &DynamicalSystem, arg: &str) -> Result<GroupWord> {
    let r = sys.n_generators();
    if let Some(j) = sys.labels().iter().position(|l| l == arg) {
        let mut e = vec![0; r];
        e[j] = 1;
        return Ok(GroupWord::new(e));
    }
    if let Some(i) = arg.strip_prefix('g').and_then(|s| s.parse::<usize>().ok()) {
        return sys
            .distinguished_words()
            .get(i)
            .cloned()
            .ok_or_else(|| CliError::config("g", format!("no distinguished word g{i}")));
    }
    let e: Option<Vec<i64>> = arg.split(',').map(|t| t.trim().parse().ok()).collect();
    match e {
        Some(e) if e.len() == r && e.iter().any(|&v| v != 0) => Ok(GroupWord::new(e)),
        _ => Err(CliError::config("g", format!("expected a generator label, g<i>, or {r} exponents: {arg}"))),
    }
}

fn fmt_f(x: f64) -> String {
    if x.is_finite() { serde_json::to_string(&x).unwrap() } else { format!("{x}") }
}

fn run(cmd: &Cmd) -> Result<Output> {
    match cmd {
        Cmd::Verify { system } => verify(system),
        Cmd::Characters { system } => {
            let (sys, _) = load_system(system)?;
            let body = match &sys.kind {
                Kind::Abelian(a) => json!({
                    "kind": "abelian",
                    "labels": sys.labels(),
                    "characters": sys.characters(),
                    "divisors": a.eig.divisors,
                    "certificates": a.eig.certificates,
                    "hypothesis": sys.hypothesis,
                }),
                Kind::Wehler(w) => json!({
                    "kind": "wehler",
                    "labels": sys.labels(),
                    "characters": sys.characters(),
                    "eigendivisors": w.eig,
                    "hypothesis": sys.hypothesis,
                }),
            };
            Output::record(body)
        }
        Cmd::Distinguished { system, bound } => {
            let (sys, file) = load_system(system)?;
            match (&sys.kind, &file) {
                (Kind::Abelian(a), SystemFile::Abelian(f)) => {
                    let b = bound.unwrap_or(f.search_bound);
                    if b < 1 {
                        return Err(CliError::config("bound", "must be positive"));
                    }
                    let l = a.eig.log_matrix();
                    let words: Vec<Vec<i64>> = (0..sys.n()).map(|i| find_distinguished(&l, i, b).map(|w| w.exponents)).collect::<std::result::Result<_, _>>()?;
                    let cert = lattice_certificate(&l, b)?;
                    Output::record(json!({"bound": b, "words": words, "lattice": cert, "hypothesis": sys.hypothesis}))
                }
                _ => Output::record(json!({"words": sys.hypothesis.distinguished.iter().map(|d| d.word.clone()).collect::<Vec<_>>(), "hypothesis": sys.hypothesis})),
            }
        }
        Cmd::Orbit { surface, point, steps } => {
            let (sys, file) = load_system(surface)?;
            if !matches!(sys.kind, Kind::Wehler(_)) {
                return Err(CliError::config("surface", "expected a system with kind \"wehler\""));
            }
            let x = resolve_point(&sys, &file, point)?;
            let rows = sys.orbit_table(&x, *steps)?;
            let table = rows
                .iter()
                .map(|r| vec![r.m.to_string(), fmt_f(r.h), fmt_f(r.hhat_plus), fmt_f(r.hhat_minus), fmt_f(r.tail)])
                .collect();
            Ok(Output {
                record: json!({"point": x, "steps": steps, "m_reached": rows.len().saturating_sub(1), "rows": rows}),
                table: Some((vec!["m", "h", "hhat_plus", "hhat_minus", "tail"], table)),
                ok: true,
            })
        }
        Cmd::Height { curve, point, iters } => {
            #[derive(serde::Deserialize)]
            struct CurveFile {
                curve: Vec<String>,
            }
            let f: CurveFile = read_json(curve, "curve")?;
            if f.curve.len() != 5 {
                return Err(CliError::config("curve", "expected [a1, a2, a3, a4, a6]"));
            }
            let coeffs: Vec<_> = f
                .curve
                .iter()
                .enumerate()
                .map(|(k, s)| parse_rat(s).map_err(|e| CliError::config(format!("curve[{k}]"), e)))
                .collect::<Result<_>>()?;
            let e = CurveQ::new(coeffs.try_into().unwrap())?;
            if *iters == 0 {
                return Err(CliError::config("iters", "must be positive"));
            }
            let repr = if point.trim().eq_ignore_ascii_case("o") {
                PointRepr::Infinity("O".into())
            } else {
                let parts: Vec<&str> = point.split(',').map(str::trim).collect();
                if parts.len() != 2 {
                    return Err(CliError::config("point", "expected x,y"));
                }
                PointRepr::Affine([parts[0].to_string(), parts[1].to_string()])
            };
            let p = e.parse_point(&repr).map_err(|err| CliError::config("point", err))?;
            let h = e.neron_tate(&p, *iters)?;
            Output::record(json!({"point": PointRepr::from_point(&p), "torsion": e.is_torsion(&p), "naive": e.naive_height(&p).ok(), "estimate": h, "convention": HEIGHT_CONVENTION}))
        }
        Cmd::Canheight { system, point } => {
            let (sys, file) = load_system(system)?;
            let x = resolve_point(&sys, &file, point)?;
            let est = sys.canonical_height_g(&x)?;
            let prod = sys.product_height(&x)?;
            Output::record(json!({"point": x, "estimate": est, "product": prod}))
        }
        Cmd::Classify { system, point, period_bound } => {
            let (sys, file) = load_system(system)?;
            let x = resolve_point(&sys, &file, point)?;
            Output::record(json!({"point": x, "report": sys.classify_zero_locus(&x, *period_bound)?}))
        }
        Cmd::Alpha { system, g, point, m_budget } => {
            let (sys, file) = load_system(system)?;
            let w = resolve_word(&sys, g)?;
            let x = resolve_point(&sys, &file, point)?;
            let ad = sys.arithmetic_degree(&w, &x, *m_budget)?;
            let lam = sys.word_lambda1(&w)?;
            let table = ad.heights.iter().enumerate().map(|(m, h)| vec![m.to_string(), fmt_f(*h)]).collect();
            Ok(Output {
                record: json!({"word": w.exponents, "point": x, "alpha": ad.alpha, "lambda1": lam, "periodic": ad.periodic, "m_used": ad.m_used}),
                table: Some((vec!["m", "h"], table)),
                ok: true,
            })
        }
        Cmd::Counting { system, g, point, tmax, m_budget } => {
            let (sys, file) = load_system(system)?;
            let w = resolve_word(&sys, g)?;
            let x = resolve_point(&sys, &file, point)?;
            let grid = if tmax == "auto" {
                None
            } else {
                let t: f64 = tmax.parse().map_err(|_| CliError::config("Tmax", "expected \"auto\" or a number"))?;
                if !(t > 1.0) {
                    return Err(CliError::config("Tmax", "must exceed 1"));
                }
                Some((1..=40).map(|k| t.powf(k as f64 / 40.0)).collect::<Vec<_>>())
            };
            let table = sys.counting_function(&w, &x, grid.as_deref(), *m_budget)?;
            let rows = table.rows.iter().map(|r| vec![fmt_f(r.t), r.n.to_string(), fmt_f(r.ratio)]).collect();
            Ok(Output {
                record: json!({"word": w.exponents, "point": x, "divergent": table.divergent, "m_used": table.m_used, "target": table.target, "final_ratio": table.rows.last().map(|r| r.ratio)}),
                table: Some((vec!["T", "N", "ratio"], rows)),
                ok: true,
            })
        }
        Cmd::Enumerate { surface, bound } => {
            if !(*bound >= 0.0) {
                return Err(CliError::config("bound", "must be nonnegative"));
            }
            let s = load_surface(surface)?;
            let pts = s.enumerate_points(*bound)?;
            let table = pts.iter().map(|p| p.to_strings().concat().to_vec()).collect();
            Ok(Output {
                record: json!({"bound": bound, "count": pts.len(), "points": pts}),
                table: Some((vec!["x0", "x1", "x2", "y0", "y1", "y2"], table)),
                ok: true,
            })
        }
        Cmd::Periodic { surface, bound, period_bound } => {
            if !(*bound >= 0.0) {
                return Err(CliError::config("bound", "must be nonnegative"));
            }
            let s = load_surface(surface)?;
            let found = s.find_periodic(*bound, *period_bound)?;
            let max_h = found.iter().map(|(p, _)| wehler::height(p, [1.0, 1.0])).fold(0.0f64, f64::max);
            let rows: Vec<Value> = found.iter().map(|(p, k)| json!({"point": p, "period": k})).collect();
            Output::record(json!({"bound": bound, "period_bound": period_bound, "periodic": rows, "max_height": max_h}))
        }
        Cmd::Scatter { system, bound } => {
            let (sys, file) = load_system(system)?;
            let mut pts: Vec<(String, SystemPoint)> = Vec::new();
            for (name, spec) in named_points(&file) {
                pts.push((name, sys.point(&spec)?));
            }
            if let Kind::Wehler(w) = &sys.kind {
                for p in w.surface.enumerate_points(*bound)? {
                    let label = format!("{:?}", p.to_strings());
                    pts.push((label, SystemPoint::Wehler(p)));
                }
            }
            let mut rows = Vec::new();
            for (label, x) in &pts {
                match sys.scatter(std::slice::from_ref(&(label.clone(), x.clone()))) {
                    Ok(mut r) => rows.append(&mut r),
                    Err(CanHeightError::ExcludedPoint(_)) => continue,
                    Err(e) => return Err(e.into()),
                }
            }
            let table = rows.iter().map(|r| vec![r.label.clone(), fmt_f(r.hhat_g), fmt_f(r.product), fmt_f(r.tail)]).collect();
            Ok(Output {
                record: json!({"rows": rows}),
                table: Some((vec!["label", "hhat_g", "product", "tail"], table)),
                ok: true,
            })
        }
    }
}

#[derive(Serialize)]
struct Check {
    name: String,
    pass: bool,
    detail: String,
}

fn check(out: &mut Vec<Check>, name: impl Into<String>, pass: bool, detail: impl Into<String>) {
    out.push(Check { name: name.into(), pass, detail: detail.into() });
}

fn verify(system: &Path) -> Result<Output> {
    let (sys, file) = load_system(system)?;
    let mut checks = Vec::new();
    check(&mut checks, "hypothesis", sys.hypothesis.holds(), format!("{:?}", sys.hypothesis.distinguished.iter().map(|d| &d.word).collect::<Vec<_>>()));
    let points: Vec<(String, SystemPoint)> = named_points(&file)
        .into_iter()
        .map(|(k, s)| Ok((k, sys.point(&s)?)))
        .collect::<Result<_>>()?;
    match &sys.kind {
        Kind::Abelian(a) => {
            let l = a.eig.log_matrix();
            let sums = l.column_sums();
            check(&mut checks, "column_sums_zero", sums.iter().all(|s| s.abs() < 1e-6), format!("{sums:?}"));
            for g in &a.generators {
                let p = dynamical_degree_profile(g);
                check(&mut checks, format!("degrees_{}", g.label()), p.agree && p.log_concave, format!("{:?}", p.spectral));
            }
        }
        Kind::Wehler(w) => {
            let g = wehler::gram();
            for k in [1u8, 2] {
                let m = wehler::ns_action(k)?;
                check(&mut checks, format!("sigma{k}_isometry"), m.transpose().mul(&g).mul(&m) == g, "");
            }
            let closed = 7.0 + 4.0 * 3f64.sqrt();
            check(&mut checks, "lambda1_closed_form", (w.eig.lambda - closed).abs() < 1e-12, format!("{}", w.eig.lambda));
            let pts = w.surface.fixture_points(1.0, 4)?;
            let bad = pts.iter().filter(|p| !matches!(w.surface.sigma(p, 1).and_then(|q| w.surface.sigma(&q, 1)), Ok(r) if r == **p)).count();
            check(&mut checks, "sigma_involution", bad == 0, format!("{} points", pts.len()));
        }
    }
    for (name, x) in &points {
        let est = match sys.canonical_height_g(x) {
            Ok(e) => e,
            Err(e) => {
                check(&mut checks, format!("point_{name}"), false, e.to_string());
                continue;
            }
        };
        let nonneg = est.per_index.iter().all(|t| t.value >= -t.tail - 1e-12);
        check(&mut checks, format!("nonnegative_{name}"), nonneg, format!("{}", est.value));
        match sys.classify_zero_locus(x, 64) {
            Ok(r) => check(&mut checks, format!("zero_locus_{name}"), true, format!("{:?}", r.class)),
            Err(e) => check(&mut checks, format!("zero_locus_{name}"), false, e.to_string()),
        }
        if matches!(sys.kind, Kind::Abelian(_)) {
            for j in 0..sys.n_generators() {
                let mut e = vec![0; sys.n_generators()];
                e[j] = 1;
                let w = GroupWord::new(e);
                let gx = sys.apply(&w, x)?;
                let lhs = sys.canonical_height_g(&gx)?;
                let ok = (0..sys.n()).all(|i| {
                    let want = sys.chi(i, &w) * est.per_index[i].value;
                    let tol = lhs.per_index[i].tail + sys.chi(i, &w) * est.per_index[i].tail + 1e-9;
                    (lhs.per_index[i].value - want).abs() <= tol
                });
                check(&mut checks, format!("functional_{name}_{}", sys.labels()[j]), ok, "");
            }
        }
    }
    let ok = checks.iter().all(|c| c.pass);
    Ok(Output { record: json!({"pass": ok, "checks": checks}), table: None, ok })
}

fn write_run(dir: &Path, cli_args: &[String], cmd: &Cmd, seed: u64, out: &Output) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let manifest = json!({
        "tool": "canheights",
        "version": env!("CARGO_PKG_VERSION"),
        "command": cmd.name(),
        "args": cli_args,
        "seed": seed,
        "height_convention": HEIGHT_CONVENTION,
        "budgets": {"digit_budget": DIGIT_BUDGET},
        "files": if out.table.is_some() { vec!["result.json", "table.csv"] } else { vec!["result.json"] },
    });
    let write = |name: &str, text: String| fs::write(dir.join(name), text).map_err(|e| CliError::Io(format!("{name}: {e}")));
    write("manifest.json", serde_json::to_string_pretty(&manifest).unwrap() + "\n")?;
    let mut record = out.record.clone();
    if let Value::Object(m) = &mut record {
        m.insert("seed".into(), json!(seed));
    }
    write("result.json", serde_json::to_string_pretty(&record).unwrap() + "\n")?;
    if let Some((header, rows)) = &out.table {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header).map_err(|e| CliError::Io(e.to_string()))?;
        for r in rows {
            w.write_record(r).map_err(|e| CliError::Io(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
        write("table.csv", String::from_utf8(bytes).unwrap())?;
    }
    Ok(())
}

fn clap_field(e: &clap::Error) -> String {
    match e.get(ContextKind::InvalidArg) {
        Some(ContextValue::String(s)) => s.trim_start_matches('-').split([' ', '=']).next().unwrap_or("").to_string(),
        Some(ContextValue::Strings(v)) => v.first().map(|s| s.trim_start_matches('-').split([' ', '=']).next().unwrap_or("").to_string()).unwrap_or_default(),
        _ => String::new(),
    }
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let err = CliError::config(clap_field(&e), e.to_string().lines().next().unwrap_or("").to_string());
            println!("{}", err.to_json());
            return ExitCode::from(2);
        }
    };
    let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("runs").join(cli.cmd.name()));
    let result = run(&cli.cmd).and_then(|out| {
        write_run(&dir, &args[1..], &cli.cmd, cli.seed, &out)?;
        Ok(out)
    });
    match result {
        Ok(out) => {
            println!("{}", serde_json::to_string_pretty(&out.record).unwrap());
            if out.ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            println!("{}", e.to_json());
            ExitCode::from(e.code())
        }
    }
}
