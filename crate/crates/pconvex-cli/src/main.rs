//! `pconvex` — certify p-convexity of implicit domains, synthesize
//! p-plurisubharmonic defining functions, and run the associated
//! verification sweeps.
//!
//! Every run embeds its fully resolved configuration (seed included) in the
//! emitted report and is byte-for-byte reproducible. Reports carry a
//! `schema_version` field so downstream regression tests can pin the exact
//! structure. Sample sweeps may run on multiple threads (capped by the
//! `PCONVEX_THREADS` environment variable); results are assembled by
//! deterministic reduction and do not depend on the worker count.

use std::fs;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;

use pconvex::convexity::{certify_boundary, sample_boundary, Verdict};
use pconvex::field::{build_domain, catalog, DomainSpec, ImplicitDomain};
use pconvex::harmonic::{dichotomy_flag, subharmonicity_sweep, ConformalHarmonicMap};
use pconvex::levi::theorem3_check;
use pconvex::sdf::curvature_transport_check;
use pconvex::synthesis::{
    build_grid, deep_point, synthesize, verify, DefiningFunction, DefiningFunctionRecord,
    GridSpec, SynthesisOptions,
};
use pconvex::{Error, Result};

const SCHEMA_VERSION: u32 = 1;

#[derive(Parser, Debug)]
#[command(name = "pconvex", version, about = "p-convexity certification toolkit")]
struct Cli {
    /// JSON file holding a full run configuration (replaces the subcommand).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Json,
    Csv,
}

fn default_samples() -> usize {
    500
}
fn default_seed() -> u64 {
    0
}
fn default_format() -> Format {
    Format::Json
}
fn default_interior() -> usize {
    2000
}
fn default_collar() -> usize {
    2000
}
fn default_boundary() -> usize {
    500
}
fn default_margin_a() -> f64 {
    0.1
}
fn default_t_values() -> Vec<f64> {
    vec![-0.05, -0.1]
}
fn default_grid_u() -> usize {
    25
}
fn default_grid_v() -> usize {
    20
}

#[derive(Subcommand, Serialize, Deserialize, Clone, Debug)]
#[serde(tag = "command", rename_all = "snake_case")]
enum Command {
    /// Sample the boundary and certify p-convexity of the curvature sums.
    Analyze {
        /// `catalog:<kind>:<params>` or a path to a domain-spec JSON file.
        #[arg(long)]
        domain: String,
        #[arg(long)]
        p: usize,
        #[arg(long, default_value_t = 500)]
        #[serde(default = "default_samples")]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        #[serde(default = "default_seed")]
        seed: u64,
        #[arg(long)]
        #[serde(default)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "json")]
        #[serde(default = "default_format")]
        format: Format,
    },
    /// Build a p-plurisubharmonic defining function and certify it.
    Synthesize {
        #[arg(long)]
        domain: String,
        #[arg(long)]
        p: usize,
        #[arg(long, default_value_t = 0)]
        #[serde(default = "default_seed")]
        seed: u64,
        #[arg(long, default_value_t = 2000)]
        #[serde(default = "default_interior")]
        interior: usize,
        #[arg(long, default_value_t = 2000)]
        #[serde(default = "default_collar")]
        collar: usize,
        #[arg(long, default_value_t = 500)]
        #[serde(default = "default_boundary")]
        boundary: usize,
        #[arg(long, default_value_t = 0.1)]
        #[serde(default = "default_margin_a")]
        margin_a: f64,
        /// Where to write the defining-function record (reloadable by
        /// `verify`).
        #[arg(long)]
        #[serde(default)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "json")]
        #[serde(default = "default_format")]
        format: Format,
    },
    /// Re-verify a synthesized defining function on a fresh grid.
    Verify {
        /// Defining-function record written by `synthesize --out`.
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 0)]
        #[serde(default = "default_seed")]
        seed: u64,
        #[arg(long, default_value_t = 2000)]
        #[serde(default = "default_interior")]
        interior: usize,
        #[arg(long, default_value_t = 2000)]
        #[serde(default = "default_collar")]
        collar: usize,
        #[arg(long, default_value_t = 500)]
        #[serde(default = "default_boundary")]
        boundary: usize,
        #[arg(long)]
        #[serde(default)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "json")]
        #[serde(default = "default_format")]
        format: Format,
    },
    /// Check the normal-line curvature transport ν_i/(1+tν_i) by
    /// finite-difference Hessians of the signed distance.
    Transport {
        #[arg(long)]
        domain: String,
        #[arg(long, default_value_t = 20)]
        #[serde(default = "default_transport_points")]
        points: usize,
        #[arg(long, default_value_t = 0)]
        #[serde(default = "default_seed")]
        seed: u64,
        /// Comma-separated normal offsets (negative = inward).
        #[arg(long, value_delimiter = ',', default_values_t = vec![-0.2, -0.1, -0.05, 0.05])]
        #[serde(default = "default_transport_t")]
        t_values: Vec<f64>,
        #[arg(long)]
        #[serde(default)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "json")]
        #[serde(default = "default_format")]
        format: Format,
    },
    /// Levi forms, degenerate complex tangent lines, and strong
    /// pseudoconvexity of interior level sets (even dimension).
    Levi {
        #[arg(long)]
        domain: String,
        #[arg(long, default_value_t = 40)]
        #[serde(default = "default_levi_samples")]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        #[serde(default = "default_seed")]
        seed: u64,
        #[arg(long, value_delimiter = ',', default_values_t = vec![-0.05, -0.1])]
        #[serde(default = "default_t_values")]
        t_values: Vec<f64>,
        #[arg(long)]
        #[serde(default)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "json")]
        #[serde(default = "default_format")]
        format: Format,
    },
    /// Synthesize a defining function and sweep its pullback Laplacian
    /// along minimal-surface patches fitted inside the domain.
    Harmonic {
        #[arg(long)]
        domain: String,
        #[arg(long, default_value_t = 2)]
        #[serde(default = "default_harmonic_p")]
        p: usize,
        #[arg(long, value_enum, default_value = "all")]
        #[serde(default)]
        surface: SurfaceChoice,
        #[arg(long, default_value_t = 25)]
        #[serde(default = "default_grid_u")]
        grid_u: usize,
        #[arg(long, default_value_t = 20)]
        #[serde(default = "default_grid_v")]
        grid_v: usize,
        #[arg(long, default_value_t = 0)]
        #[serde(default = "default_seed")]
        seed: u64,
        #[arg(long)]
        #[serde(default)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "json")]
        #[serde(default = "default_format")]
        format: Format,
    },
}

fn default_transport_points() -> usize {
    20
}
fn default_transport_t() -> Vec<f64> {
    vec![-0.2, -0.1, -0.05, 0.05]
}
fn default_levi_samples() -> usize {
    40
}
fn default_harmonic_p() -> usize {
    2
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
enum SurfaceChoice {
    #[default]
    All,
    Catenoid,
    Helicoid,
    Enneper,
    AffinePlane,
}

// ---------------------------------------------------------------------------

fn main() {
    std::process::exit(run());
}

fn run() -> i32 {
    init_thread_pool();
    let cli = Cli::parse();
    let command = match resolve_command(cli) {
        Ok(c) => c,
        Err(msg) => {
            eprintln!("pconvex: {msg}");
            return 2;
        }
    };
    match execute(&command) {
        Ok(outcome) => {
            println!("{}", outcome.stdout);
            outcome.exit
        }
        Err(e @ Error::NotPConvex { .. }) => {
            // A certified-negative verdict, not a failure of the tool.
            let report = json!({
                "schema_version": SCHEMA_VERSION,
                "config": command,
                "verdict": "not-p-convex",
                "detail": e.to_string(),
            });
            println!("{}", serde_json::to_string_pretty(&report).expect("serializable"));
            1
        }
        Err(e) => {
            eprintln!("pconvex: {e}");
            2
        }
    }
}

/// Honors PCONVEX_THREADS as a cap on sweep parallelism.
fn init_thread_pool() {
    if let Ok(raw) = std::env::var("PCONVEX_THREADS") {
        if let Ok(n) = raw.trim().parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build_global();
        } else {
            eprintln!("pconvex: ignoring unparseable PCONVEX_THREADS={raw}");
        }
    }
}

fn resolve_command(cli: Cli) -> std::result::Result<Command, String> {
    if let Some(path) = cli.config {
        let text = fs::read_to_string(&path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("malformed config: {e}"))
    } else {
        cli.command
            .ok_or_else(|| "a subcommand or --config is required (see --help)".to_string())
    }
}

/// Parses `catalog:<kind>:<p1>,<p2>,...` or loads a domain-spec JSON file.
fn load_domain(spec: &str) -> Result<ImplicitDomain> {
    if let Some(rest) = spec.strip_prefix("catalog:") {
        let (kind, params_text) = rest.split_once(':').unwrap_or((rest, ""));
        let mut params = Vec::new();
        if !params_text.is_empty() {
            for piece in params_text.split(',') {
                params.push(piece.trim().parse::<f64>().map_err(|_| Error::CatalogError {
                    reason: format!("bad numeric parameter `{piece}`"),
                })?);
            }
        }
        catalog(kind, &params)
    } else {
        let text = fs::read_to_string(spec).map_err(|e| Error::CatalogError {
            reason: format!("cannot read domain spec {spec}: {e}"),
        })?;
        let ds: DomainSpec = serde_json::from_str(&text).map_err(|e| Error::CatalogError {
            reason: format!("malformed domain spec: {e}"),
        })?;
        build_domain(&ds)
    }
}

struct Outcome {
    stdout: String,
    exit: i32,
}

fn execute(command: &Command) -> Result<Outcome> {
    let (result, csv_rows, exit) = match command {
        Command::Analyze {
            domain,
            p,
            samples,
            seed,
            ..
        } => run_analyze(domain, *p, *samples, *seed)?,
        Command::Synthesize {
            domain,
            p,
            seed,
            interior,
            collar,
            boundary,
            margin_a,
            out,
            ..
        } => run_synthesize(
            domain, *p, *seed, *interior, *collar, *boundary, *margin_a, out.as_deref(),
        )?,
        Command::Verify {
            input,
            seed,
            interior,
            collar,
            boundary,
            ..
        } => run_verify(input, *seed, *interior, *collar, *boundary)?,
        Command::Transport {
            domain,
            points,
            seed,
            t_values,
            ..
        } => run_transport(domain, *points, *seed, t_values)?,
        Command::Levi {
            domain,
            samples,
            seed,
            t_values,
            ..
        } => run_levi(domain, *samples, *seed, t_values)?,
        Command::Harmonic {
            domain,
            p,
            surface,
            grid_u,
            grid_v,
            seed,
            ..
        } => run_harmonic(domain, *p, *surface, *grid_u, *grid_v, *seed)?,
    };

    let report = json!({
        "schema_version": SCHEMA_VERSION,
        "config": command,
        "result": result,
    });
    let stdout = serde_json::to_string_pretty(&report).expect("report serializes");

    let (out, format) = output_options(command);
    if let Some(path) = out {
        match format {
            Format::Json => fs::write(path, &stdout).map_err(io_err)?,
            Format::Csv => {
                let mut writer = csv::Writer::from_writer(Vec::new());
                for row in &csv_rows {
                    writer.write_record(row).map_err(|e| Error::CatalogError {
                        reason: format!("csv write failed: {e}"),
                    })?;
                }
                let bytes = writer.into_inner().map_err(|e| Error::CatalogError {
                    reason: format!("csv write failed: {e}"),
                })?;
                fs::write(path, bytes).map_err(io_err)?;
            }
        }
    }
    Ok(Outcome { stdout, exit })
}

fn io_err(e: std::io::Error) -> Error {
    Error::CatalogError {
        reason: format!("io error: {e}"),
    }
}

fn output_options(command: &Command) -> (Option<&PathBuf>, Format) {
    match command {
        Command::Analyze { out, format, .. }
        | Command::Verify { out, format, .. }
        | Command::Transport { out, format, .. }
        | Command::Levi { out, format, .. }
        | Command::Harmonic { out, format, .. } => (out.as_ref(), *format),
        // `synthesize --out` holds the record itself; reports go to stdout.
        Command::Synthesize { format, .. } => (None, *format),
    }
}

type CommandResult = (serde_json::Value, Vec<Vec<String>>, i32);

fn fmt_f(v: f64) -> String {
    format!("{v}")
}

fn run_analyze(domain: &str, p: usize, samples: usize, seed: u64) -> Result<CommandResult> {
    let dom = load_domain(domain)?;
    let points = sample_boundary(&dom, samples, seed)?;
    let report = certify_boundary(&dom, p, &points)?;
    let exit = match report.verdict {
        Verdict::NotPConvex => 1,
        _ => 0,
    };

    let mut rows = Vec::with_capacity(report.samples.len() + 1);
    let mut header: Vec<String> = (0..dom.dim()).map(|i| format!("x{}", i + 1)).collect();
    header.extend((1..dom.dim()).map(|i| format!("nu{i}")));
    header.push("s_p".into());
    rows.push(header);
    for s in &report.samples {
        let mut row: Vec<String> = s.point.iter().map(|v| fmt_f(*v)).collect();
        row.extend(s.curvatures.iter().map(|v| fmt_f(*v)));
        row.push(fmt_f(s.s_p));
        rows.push(row);
    }

    let result = json!({
        "domain": dom.spec(),
        "report": report,
    });
    Ok((result, rows, exit))
}

#[allow(clippy::too_many_arguments)]
fn run_synthesize(
    domain: &str,
    p: usize,
    seed: u64,
    interior: usize,
    collar: usize,
    boundary: usize,
    margin_a: f64,
    out: Option<&std::path::Path>,
) -> Result<CommandResult> {
    let dom = load_domain(domain)?;
    let options = SynthesisOptions {
        margin_a,
        grid: GridSpec {
            n_interior: interior,
            n_collar: collar,
            n_boundary: boundary,
            seed,
        },
        collar_probes: 50,
    };
    let df = synthesize(&dom, p, Some(options))?;
    let record = df.record();
    if let Some(path) = out {
        fs::write(path, serde_json::to_string_pretty(&record).expect("record serializes"))
            .map_err(io_err)?;
    }
    let cert = df.certificate();
    let exit = if cert.min_overall >= -pconvex::tol::TOL_CERT {
        0
    } else {
        1
    };
    let rows = certificate_rows(&record);
    Ok((serde_json::to_value(&record).expect("record"), rows, exit))
}

fn certificate_rows(record: &DefiningFunctionRecord) -> Vec<Vec<String>> {
    let c = &record.certificate;
    vec![
        vec!["key".into(), "value".into()],
        vec!["p".into(), c.p.to_string()],
        vec!["a".into(), fmt_f(record.params.a)],
        vec!["c".into(), fmt_f(record.params.c)],
        vec!["eps".into(), fmt_f(record.params.eps)],
        vec!["min_overall".into(), fmt_f(c.min_overall)],
        vec!["min_interior".into(), fmt_f(c.min_interior)],
        vec!["strong".into(), c.strong.to_string()],
    ]
}

fn run_verify(
    input: &std::path::Path,
    seed: u64,
    interior: usize,
    collar: usize,
    boundary: usize,
) -> Result<CommandResult> {
    let text = fs::read_to_string(input).map_err(io_err)?;
    let record: DefiningFunctionRecord =
        serde_json::from_str(&text).map_err(|e| Error::CatalogError {
            reason: format!("malformed defining-function record: {e}"),
        })?;
    let df = DefiningFunction::from_record(&record)?;
    let dom = build_domain(&record.domain)?;
    let grid = build_grid(
        &dom,
        &GridSpec {
            n_interior: interior,
            n_collar: collar,
            n_boundary: boundary,
            seed,
        },
        record.params.c,
    )?;
    let cert = verify(&df, record.params.p, &grid)?;
    let exit = if cert.min_overall >= -pconvex::tol::TOL_CERT {
        0
    } else {
        1
    };
    let rows = vec![
        vec!["key".into(), "value".into()],
        vec!["min_overall".into(), fmt_f(cert.min_overall)],
        vec!["min_interior".into(), fmt_f(cert.min_interior)],
        vec!["strong".into(), cert.strong.to_string()],
    ];
    let result = json!({
        "params": record.params,
        "certificate": cert,
    });
    Ok((result, rows, exit))
}

fn run_transport(
    domain: &str,
    points: usize,
    seed: u64,
    t_values: &[f64],
) -> Result<CommandResult> {
    let dom = load_domain(domain)?;
    let boundary = sample_boundary(&dom, points, seed)?;
    let mut rows = vec![vec![
        "point".to_string(),
        "t".to_string(),
        "max_rel_err".to_string(),
    ]];
    let mut per_point = Vec::with_capacity(points);
    let mut overallss: f64 = 0.0;
    for (idx, q) in boundary.iter().enumerate() {
        let report = curvature_transport_check(&dom, q, t_values)?;
        for s in &report.samples {
            rows.push(vec![idx.to_string(), fmt_f(s.t), fmt_f(s.max_rel_err)]);
        }
        overallss = overallss.max(report.max_rel_err);
        per_point.push(json!({
            "point": report.base.point,
            "curvatures": report.base.principal_curvatures,
            "max_rel_err": report.max_rel_err,
        }));
    }
    let result = json!({
        "domain": dom.spec(),
        "t_values": t_values,
        "per_point": per_point,
        "max_rel_err": overallss,
    });
    Ok((result, rows, 0))
}

fn run_levi(domain: &str, samples: usize, seed: u64, t_values: &[f64]) -> Result<CommandResult> {
    let dom = load_domain(domain)?;
    let boundary = sample_boundary(&dom, samples, seed)?;
    let report = theorem3_check(&dom, t_values, &boundary)?;
    let exit = if report.pseudoconvex { 0 } else { 1 };
    let mut rows = vec![vec![
        "t".to_string(),
        "min_all_lines".to_string(),
        "min_degenerate_lines".to_string(),
        "min_slack".to_string(),
    ]];
    for e in &report.per_t {
        rows.push(vec![
            fmt_f(e.t),
            fmt_f(e.min_all_lines),
            e.min_degenerate_lines.map(fmt_f).unwrap_or_default(),
            fmt_f(e.min_slack),
        ]);
    }
    let result = json!({
        "domain": dom.spec(),
        "report": report,
    });
    Ok((result, rows, exit))
}

fn run_harmonic(
    domain: &str,
    p: usize,
    surface: SurfaceChoice,
    grid_u: usize,
    grid_v: usize,
    seed: u64,
) -> Result<CommandResult> {
    let dom = load_domain(domain)?;
    if dom.dim() != 3 {
        return Err(Error::DimensionError {
            expected: 3,
            got: dom.dim(),
        });
    }
    let df = synthesize(
        &dom,
        p,
        Some(SynthesisOptions {
            grid: GridSpec {
                n_interior: 500,
                n_collar: 500,
                n_boundary: 200,
                seed,
            },
            ..Default::default()
        }),
    )?;
    let (center, clearance) = deep_point(&dom, 50, seed.wrapping_add(7))?;
    let radius = 0.9 * clearance;

    let tau = std::f64::consts::TAU;
    let mut patches: Vec<ConformalHarmonicMap> = Vec::new();
    let want = |choice: SurfaceChoice| surface == SurfaceChoice::All || surface == choice;
    if want(SurfaceChoice::Catenoid) {
        patches.push(ConformalHarmonicMap::catenoid([[0.0, tau], [-0.8, 0.8]]));
    }
    if want(SurfaceChoice::Helicoid) {
        patches.push(ConformalHarmonicMap::helicoid([[-1.0, 1.0], [-0.8, 0.8]]));
    }
    if want(SurfaceChoice::Enneper) {
        patches.push(ConformalHarmonicMap::enneper([[-0.5, 0.5], [-0.5, 0.5]]));
    }
    if want(SurfaceChoice::AffinePlane) {
        patches.push(ConformalHarmonicMap::affine_plane(
            vec![0.0; 3],
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            [[-1.0, 1.0], [-1.0, 1.0]],
        )?);
    }

    let mut rows = vec![vec![
        "surface".to_string(),
        "u".to_string(),
        "v".to_string(),
        "rho".to_string(),
        "laplacian".to_string(),
    ]];
    let mut surfaces = Vec::new();
    let mut all_subharmonic = true;
    for patch in patches {
        let fitted = patch.fitted_into(&center, radius);
        let sweep = subharmonicity_sweep(df.field(), &fitted, grid_u, grid_v)?;
        let dichotomy = dichotomy_flag(df.field(), &fitted, grid_u, grid_v)?;
        if sweep.min_laplacian < -1e-5 {
            all_subharmonic = false;
        }
        for row in &sweep.rows {
            rows.push(vec![
                sweep.surface.clone(),
                fmt_f(row.u),
                fmt_f(row.v),
                fmt_f(row.rho),
                fmt_f(row.laplacian),
            ]);
        }
        surfaces.push(json!({
            "surface": sweep.surface,
            "min_laplacian": sweep.min_laplacian,
            "argmin": sweep.argmin,
            "max_stencil_dev": sweep.max_stencil_dev,
            "max_harmonic_residual": sweep.max_harmonic_residual,
            "max_conformal_residual": sweep.max_conformal_residual,
            "dichotomy": dichotomy,
        }));
    }
    let result = json!({
        "domain": dom.spec(),
        "params": df.params(),
        "fit_center": center,
        "fit_radius": radius,
        "surfaces": surfaces,
    });
    Ok((result, rows, if all_subharmonic { 0 } else { 1 }))
}
