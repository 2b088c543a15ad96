//! `kgs` — batch driver for the path-space geometry library.
//!
//! Every subcommand reads a JSON graph document (see [`doc::GraphDocument`])
//! and prints a versioned JSON report envelope to stdout.  `--format csv`
//! switches stdout to the command's CSV table, `--out FILE` writes that
//! table to a file alongside the JSON, and `--emit-series FILE` writes
//! plot-ready `x y` rows for commands with a natural series (zeta level
//! sums, trace probes, cover sums, commutator norms).
//!
//! Exit codes: `0` success, `2` invalid input or a graph failing
//! validation, `3` a computation that ended undecided or did not converge.
//! The environment variable `KGS_MAX_PATHS` overrides the path-enumeration
//! cap used by `measure`.

mod doc;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use kgs_core::dirac::{ck_check, commutator_norm, dirac_eigen_report, AlphaSequence};
use kgs_core::harmonic::{
    eigenspace_basis, j_wavelet_basis, laplacian_apply, refined_wavelet_basis, wavelet_basis,
    EigenspaceId, SubspaceBasis,
};
use kgs_core::kgraph::{period_and_cesaro, perron, DEFAULT_MAX_ITER, DEFAULT_TOL};
use kgs_core::zeta::{
    abscissa_estimate, dixmier_closed, dixmier_numeric, hausdorff_dim_estimate, hausdorff_sum,
    zeta_eval, DixmierResult, DixmierRoute, SeriesClass,
};
use kgs_core::{
    degree, enumerate_paths, inner, CylinderMeasureTable, FinitePath, KGraph, KgsError,
    WeightContext, DEFAULT_MAX_PATHS,
};

use doc::GraphDocument;
use output::{write_series, Bundle, CsvTable};

/// Exit code for invalid inputs or graphs failing validation.
const EXIT_INVALID: u8 = 2;
/// Exit code for undecided or non-converged computations.
const EXIT_UNDECIDED: u8 = 3;

#[derive(Parser)]
#[command(
    name = "kgs",
    version,
    about = "Spectral geometry on the path space of a finite higher-rank graph"
)]
struct Cli {
    #[command(flatten)]
    output: OutputOpts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct OutputOpts {
    /// Stdout format: the JSON report envelope or the command's CSV table
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Also write the command's CSV table to this file
    #[arg(long, global = true, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Write plot-ready `x y` rows for the command's series to this file
    #[arg(long, global = true, value_name = "FILE")]
    emit_series: Option<PathBuf>,
}

#[derive(Copy, Clone, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Route {
    /// Cesàro-limit closed form (no truncation)
    Closed,
    /// Probe sequence with Richardson extrapolation
    Numeric,
}

#[derive(Subcommand)]
enum Command {
    /// Run the structural checks and report pass/fail per check
    Validate {
        /// Graph document (JSON)
        graph: PathBuf,
    },
    /// Perron data: spectral radii, joint eigenvector, period, Cesàro limits
    Spectral {
        graph: PathBuf,
    },
    /// Cylinder table at a depth: measure, weight, diameter per path
    Measure {
        graph: PathBuf,
        /// Path length to enumerate
        #[arg(long)]
        depth: usize,
        /// Scaling exponent (overrides the document's "delta")
        #[arg(long)]
        delta: Option<f64>,
    },
    /// Weighted path-count series at one exponent, with classification
    Zeta {
        graph: PathBuf,
        /// Exponent to evaluate at
        #[arg(long)]
        s: f64,
        /// Largest path length included
        #[arg(long, default_value_t = 60)]
        depth: usize,
        #[arg(long)]
        delta: Option<f64>,
        /// Also bisect for the convergence abscissa
        #[arg(long)]
        abscissa: bool,
    },
    /// Trace-functional value of one cylinder
    Dixmier {
        graph: PathBuf,
        /// Cylinder path, e.g. "0:(0,0,1)/(0,0,0)" (a bare vertex index is
        /// the length-0 path)
        #[arg(long)]
        gamma: String,
        #[arg(long, value_enum, default_value_t = Route::Closed)]
        route: Route,
        /// Probe count (numeric route)
        #[arg(long, default_value_t = 12)]
        steps: usize,
        /// Series truncation level (numeric route)
        #[arg(long, default_value_t = 20000)]
        depth: usize,
        #[arg(long)]
        delta: Option<f64>,
    },
    /// Estimate the Hausdorff dimension of the ultrametric path space
    Hausdorff {
        graph: PathBuf,
        /// Bisection tolerance on the dimension
        #[arg(long, default_value_t = 1e-3)]
        tol: f64,
        #[arg(long)]
        delta: Option<f64>,
    },
    /// Export a wavelet basis with its Gram report
    Wavelets {
        graph: PathBuf,
        /// Wavelet layer (0 is the coarsest)
        #[arg(long, default_value_t = 0)]
        level: usize,
        /// Export only the colour-j slice of the layer (1..=k)
        #[arg(long, conflicts_with = "j_shape")]
        refined: Option<usize>,
        /// Reshaped ladder: comma-separated colour exponents, e.g. "2,1"
        #[arg(long = "J", value_name = "SHAPE")]
        j_shape: Option<String>,
        /// Slice index within the reshaped period (with --J)
        #[arg(long, requires = "j_shape", default_value_t = 1)]
        slice: usize,
        #[arg(long)]
        delta: Option<f64>,
    },
    /// Apply the Laplace-type operator on one labelled eigenspace
    Laplacian {
        graph: PathBuf,
        /// Operator exponent
        #[arg(long)]
        s: f64,
        /// Labelling path of the eigenspace
        #[arg(long)]
        gamma: String,
        #[arg(long)]
        delta: Option<f64>,
    },
    /// Eigenvalue and eigenspace report for the Dirac-type operator
    Dirac {
        graph: PathBuf,
        /// Eigenvalue sequence: "linear:<offset>" or "custom:v1,v2,..."
        #[arg(long, default_value = "linear:1")]
        alpha: String,
        /// Model depth (full periods)
        #[arg(long)]
        depth: usize,
        #[arg(long)]
        delta: Option<f64>,
    },
    /// Residuals of the four generator relations at a depth
    CkCheck {
        graph: PathBuf,
        #[arg(long)]
        depth: usize,
        #[arg(long)]
        delta: Option<f64>,
    },
    /// Commutator norms of the Dirac operator with a prefix shift
    Commutator {
        graph: PathBuf,
        /// Prefix to put on, e.g. "0:(0,0,0)/(0,0,1)"
        #[arg(long)]
        lambda: String,
        /// Prefix to take off (a bare vertex index is the length-0 path)
        #[arg(long)]
        mu: String,
        /// Inclusive depth range, e.g. "4..8"
        #[arg(long, default_value = "4..8")]
        depths: String,
        #[arg(long, default_value = "linear:1")]
        alpha: String,
        #[arg(long)]
        delta: Option<f64>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Validate { .. } => "validate",
            Command::Spectral { .. } => "spectral",
            Command::Measure { .. } => "measure",
            Command::Zeta { .. } => "zeta",
            Command::Dixmier { .. } => "dixmier",
            Command::Hausdorff { .. } => "hausdorff",
            Command::Wavelets { .. } => "wavelets",
            Command::Laplacian { .. } => "laplacian",
            Command::Dirac { .. } => "dirac",
            Command::CkCheck { .. } => "ck-check",
            Command::Commutator { .. } => "commutator",
        }
    }

    fn graph_path(&self) -> &PathBuf {
        match self {
            Command::Validate { graph }
            | Command::Spectral { graph }
            | Command::Measure { graph, .. }
            | Command::Zeta { graph, .. }
            | Command::Dixmier { graph, .. }
            | Command::Hausdorff { graph, .. }
            | Command::Wavelets { graph, .. }
            | Command::Laplacian { graph, .. }
            | Command::Dirac { graph, .. }
            | Command::CkCheck { graph, .. }
            | Command::Commutator { graph, .. } => graph,
        }
    }
}

/// A failed run, already sorted into its exit-code class.
enum Failure {
    Invalid(String),
    Undecided(String),
}

impl Failure {
    fn exit(&self) -> u8 {
        match self {
            Failure::Invalid(_) => EXIT_INVALID,
            Failure::Undecided(_) => EXIT_UNDECIDED,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Invalid(m) | Failure::Undecided(m) => m,
        }
    }
}

impl From<KgsError> for Failure {
    fn from(e: KgsError) -> Self {
        match e {
            KgsError::Undecided { .. } | KgsError::NoConvergence { .. } => {
                Failure::Undecided(e.to_string())
            }
            _ => Failure::Invalid(e.to_string()),
        }
    }
}

/// One command's outputs before emission.
struct Outcome {
    flags: Value,
    results: Value,
    table: CsvTable,
    series: Vec<(f64, f64)>,
    warnings: Vec<String>,
    exit: u8,
}

impl Outcome {
    fn new(flags: Value, results: Value, table: CsvTable) -> Self {
        Outcome {
            flags,
            results,
            table,
            series: Vec::new(),
            warnings: Vec::new(),
            exit: 0,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let clock = Instant::now();
    let name = cli.command.name().to_string();
    let code = match run(&cli) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("kgs {name}: {}", f.message());
            f.exit()
        }
    };
    eprintln!("kgs {name}: finished in {:.1} ms", clock.elapsed().as_secs_f64() * 1e3);
    ExitCode::from(code)
}

fn run(cli: &Cli) -> Result<u8, Failure> {
    let path = cli.command.graph_path();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Invalid(format!("cannot read {}: {e}", path.display())))?;
    let doc = GraphDocument::parse(&text).map_err(Failure::Invalid)?;
    let g = doc.to_graph()?;

    let outcome = dispatch(&cli.command, &doc, &g)?;

    let bundle = Bundle::new(
        cli.command.name(),
        json!({ "graph": doc, "flags": outcome.flags }),
        outcome.results,
        outcome.warnings,
    );
    match cli.output.format {
        Format::Json => println!("{}", bundle.to_json()),
        Format::Csv => print!("{}", outcome.table.to_csv_string()),
    }
    if let Some(p) = &cli.output.out {
        std::fs::write(p, outcome.table.to_csv_string())
            .map_err(|e| Failure::Invalid(format!("cannot write {}: {e}", p.display())))?;
    }
    if let Some(p) = &cli.output.emit_series {
        write_series(p, &outcome.series)
            .map_err(|e| Failure::Invalid(format!("cannot write {}: {e}", p.display())))?;
    }
    Ok(outcome.exit)
}

fn dispatch(cmd: &Command, doc: &GraphDocument, g: &KGraph) -> Result<Outcome, Failure> {
    match cmd {
        Command::Validate { .. } => cmd_validate(g),
        Command::Spectral { .. } => cmd_spectral(g),
        Command::Measure { depth, delta, .. } => cmd_measure(doc, g, *depth, *delta),
        Command::Zeta {
            s,
            depth,
            delta,
            abscissa,
            ..
        } => cmd_zeta(doc, g, *s, *depth, *delta, *abscissa),
        Command::Dixmier {
            gamma,
            route,
            steps,
            depth,
            delta,
            ..
        } => cmd_dixmier(doc, g, gamma, *route, *steps, *depth, *delta),
        Command::Hausdorff { tol, delta, .. } => cmd_hausdorff(doc, g, *tol, *delta),
        Command::Wavelets {
            level,
            refined,
            j_shape,
            slice,
            delta,
            ..
        } => cmd_wavelets(doc, g, *level, *refined, j_shape.as_deref(), *slice, *delta),
        Command::Laplacian {
            s, gamma, delta, ..
        } => cmd_laplacian(doc, g, *s, gamma, *delta),
        Command::Dirac {
            alpha,
            depth,
            delta,
            ..
        } => cmd_dirac(doc, g, alpha, *depth, *delta),
        Command::CkCheck { depth, delta, .. } => cmd_ck_check(doc, g, *depth, *delta),
        Command::Commutator {
            lambda,
            mu,
            depths,
            alpha,
            delta,
            ..
        } => cmd_commutator(doc, g, lambda, mu, depths, alpha, *delta),
    }
}

// ---------------------------------------------------------------- helpers

fn resolve_delta(doc: &GraphDocument, flag: Option<f64>) -> Result<f64, Failure> {
    flag.or(doc.delta).ok_or_else(|| {
        Failure::Invalid(
            "no scaling exponent: pass --delta or set \"delta\" in the graph document"
                .to_string(),
        )
    })
}

fn context(doc: &GraphDocument, g: &KGraph, flag: Option<f64>) -> Result<WeightContext, Failure> {
    let delta = resolve_delta(doc, flag)?;
    Ok(WeightContext::new(g, delta)?)
}

fn parse_path(text: &str) -> Result<FinitePath, Failure> {
    FinitePath::from_str(text).map_err(Failure::from)
}

fn parse_alpha(text: &str) -> Result<AlphaSequence, Failure> {
    if let Some(rest) = text.strip_prefix("linear:") {
        let offset: f64 = rest
            .parse()
            .map_err(|_| Failure::Invalid(format!("bad alpha offset {rest:?}")))?;
        return Ok(AlphaSequence::linear(offset));
    }
    if let Some(rest) = text.strip_prefix("custom:") {
        let values: Result<Vec<f64>, _> = rest.split(',').map(|v| v.trim().parse()).collect();
        return match values {
            Ok(v) if !v.is_empty() => Ok(AlphaSequence::Custom(v)),
            _ => Err(Failure::Invalid(format!("bad alpha list {rest:?}"))),
        };
    }
    Err(Failure::Invalid(format!(
        "alpha {text:?} is neither \"linear:<offset>\" nor \"custom:v1,v2,...\""
    )))
}

fn parse_depth_range(text: &str) -> Result<(usize, usize), Failure> {
    let bad = || Failure::Invalid(format!("depth range {text:?} is not of the form \"a..b\""));
    let (a, b) = text.split_once("..").ok_or_else(bad)?;
    let lo: usize = a.trim().parse().map_err(|_| bad())?;
    let hi: usize = b.trim().trim_start_matches('=').parse().map_err(|_| bad())?;
    if lo > hi {
        return Err(bad());
    }
    Ok((lo, hi))
}

/// Enumeration cap: the `KGS_MAX_PATHS` override or the library default.
fn max_paths_cap() -> Result<u128, Failure> {
    match std::env::var("KGS_MAX_PATHS") {
        Ok(v) => v
            .parse()
            .map_err(|_| Failure::Invalid(format!("KGS_MAX_PATHS={v:?} is not an integer"))),
        Err(_) => Ok(DEFAULT_MAX_PATHS),
    }
}

fn fmt(v: f64) -> String {
    format!("{v}")
}

/// JSON description of an exported basis: label, shape, the Gram matrix,
/// and how close it is to diagonal (all bases here are orthogonal; the
/// sliced ones are orthonormal on top of that).
fn basis_report(basis: &SubspaceBasis) -> Value {
    let d = basis.dim();
    let mut max_offdiag = 0.0f64;
    let mut max_diag_dev = 0.0f64;
    for i in 0..d {
        max_diag_dev = max_diag_dev.max((basis.gram[(i, i)] - 1.0).abs());
        for j in 0..d {
            if i != j {
                max_offdiag = max_offdiag.max(basis.gram[(i, j)].abs());
            }
        }
    }
    let gram: Vec<Vec<f64>> = (0..d)
        .map(|i| (0..d).map(|j| basis.gram[(i, j)]).collect())
        .collect();
    json!({
        "label": basis.label,
        "levels": basis.levels,
        "dim": d,
        "max_offdiagonal": max_offdiag,
        "orthonormal": max_offdiag <= 1e-10 && max_diag_dev <= 1e-10,
        "gram": gram,
    })
}

/// CSV with one row per basis vector; columns are the cylinder paths.
fn basis_table(ctx: &WeightContext, basis: &SubspaceBasis) -> Result<CsvTable, Failure> {
    let paths = enumerate_paths(ctx.graph(), basis.levels, None)?;
    let mut headers = vec!["vector".to_string()];
    headers.extend(paths.iter().map(|p| p.to_string()));
    let mut table = CsvTable::new(headers);
    for (i, f) in basis.vectors.iter().enumerate() {
        let mut row = vec![format!("{}[{i}]", basis.label)];
        row.extend(f.coeffs().iter().map(|&c| fmt(c)));
        table.push(row);
    }
    Ok(table)
}

// --------------------------------------------------------------- commands

fn cmd_validate(g: &KGraph) -> Result<Outcome, Failure> {
    let report = kgs_core::validate(g);
    let mut table = CsvTable::new(vec!["check", "passed", "detail"]);
    for (name, check) in [
        ("commuting", &report.commuting),
        ("source_free", &report.source_free),
        ("strongly_connected", &report.strongly_connected),
        ("rho_exceeds_one", &report.rho_exceeds_one),
        ("diameter_hypothesis", &report.diameter_hypothesis),
    ] {
        table.push(vec![
            name.to_string(),
            check.passed.to_string(),
            check.detail.clone(),
        ]);
    }
    let results = serde_json::to_value(&report)
        .map_err(|e| Failure::Invalid(format!("report serialization: {e}")))?;
    let mut outcome = Outcome::new(json!({}), results, table);
    if report.structurally_valid() && !report.admitted() {
        outcome.warnings.push(
            "graph is usable for enumeration and measures, but the spectral-triple \
             operations are gated off (see rho_exceeds_one / diameter_hypothesis)"
                .to_string(),
        );
    }
    if !report.structurally_valid() {
        outcome.exit = EXIT_INVALID;
    }
    Ok(outcome)
}

fn cmd_spectral(g: &KGraph) -> Result<Outcome, Failure> {
    let sd = perron(g, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
    let sd = period_and_cesaro(g, sd, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
    let n = g.num_vertices();
    let cesaro: Vec<Vec<Vec<f64>>> = sd
        .cesaro
        .iter()
        .map(|m| (0..n).map(|r| (0..n).map(|c| m[(r, c)]).collect()).collect())
        .collect();
    let results = json!({
        "rho": sd.rho,
        "rho_total": sd.rho_total,
        "x": sd.x,
        "iterations": sd.iterations,
        "residual": sd.residual,
        "period": sd.period,
        "cesaro": cesaro,
    });
    let mut table = CsvTable::new(vec!["quantity", "index", "value"]);
    for (i, r) in sd.rho.iter().enumerate() {
        table.push(vec!["rho".to_string(), (i + 1).to_string(), fmt(*r)]);
    }
    table.push(vec!["rho_total".to_string(), String::new(), fmt(sd.rho_total)]);
    for (v, x) in g.vertices().iter().zip(&sd.x) {
        table.push(vec!["x".to_string(), v.clone(), fmt(*x)]);
    }
    table.push(vec!["period".to_string(), String::new(), sd.period.to_string()]);
    table.push(vec!["residual".to_string(), String::new(), fmt(sd.residual)]);
    Ok(Outcome::new(json!({}), results, table))
}

fn cmd_measure(
    doc: &GraphDocument,
    g: &KGraph,
    depth: usize,
    delta: Option<f64>,
) -> Result<Outcome, Failure> {
    let ctx = context(doc, g, delta)?;
    let cap = max_paths_cap()?;
    let cylinders = CylinderMeasureTable::new(&ctx, depth, cap)?;
    let diam_ok = ctx.diameter_ok();
    let mut table = CsvTable::new(vec!["path", "degree", "M", "w_delta", "diam"]);
    let mut rows = Vec::new();
    for (p, m) in cylinders.iter() {
        let deg: Vec<String> = degree(g, p).iter().map(|d| d.to_string()).collect();
        let w = ctx.weight(p)?;
        let diam = if diam_ok { Some(ctx.diam(p)?) } else { None };
        table.push(vec![
            p.to_string(),
            deg.join(","),
            fmt(m),
            fmt(w),
            diam.map(fmt).unwrap_or_default(),
        ]);
        rows.push(json!({
            "path": p.to_string(),
            "degree": degree(g, p),
            "measure": m,
            "weight": w,
            "diam": diam,
        }));
    }
    let results = json!({
        "depth": depth,
        "delta": ctx.delta(),
        "total": cylinders.total(),
        "cylinders": rows,
    });
    let mut outcome = Outcome::new(json!({ "depth": depth, "delta": ctx.delta() }), results, table);
    if !diam_ok {
        outcome.warnings.push(
            "diameter hypothesis fails; cylinder diameters are not the weights and the \
             diam column is left empty"
                .to_string(),
        );
    }
    Ok(outcome)
}

fn cmd_zeta(
    doc: &GraphDocument,
    g: &KGraph,
    s: f64,
    depth: usize,
    delta: Option<f64>,
    with_abscissa: bool,
) -> Result<Outcome, Failure> {
    let ctx = context(doc, g, delta)?;
    let eval = zeta_eval(&ctx, s, depth)?;
    let abscissa = if with_abscissa {
        Some(abscissa_estimate(&ctx, 1e-3)?)
    } else {
        None
    };
    let class = eval.class.to_string();
    let results = json!({
        "s": eval.s,
        "delta": eval.delta,
        "depth": eval.depth,
        "partial_sum": eval.partial_sum,
        "class": class,
        "geometric_ratio": eval.geometric_ratio,
        "tail_bound": eval.tail_bound,
        "abscissa": abscissa,
        "level_sums": eval.level_sums,
    });
    let mut table = CsvTable::new(vec!["n", "level_sum"]);
    let mut series = Vec::new();
    for (n, t) in eval.level_sums.iter().enumerate() {
        table.push(vec![n.to_string(), fmt(*t)]);
        series.push((n as f64, *t));
    }
    let mut outcome = Outcome::new(
        json!({ "s": s, "depth": depth, "delta": ctx.delta(), "abscissa": with_abscissa }),
        results,
        table,
    );
    outcome.series = series;
    if eval.class == SeriesClass::Undecided {
        outcome.exit = EXIT_UNDECIDED;
        outcome
            .warnings
            .push("series classification undecided at this depth".to_string());
    }
    Ok(outcome)
}

fn dixmier_json(r: &DixmierResult) -> Value {
    json!({
        "gamma": r.gamma.to_string(),
        "value": r.value,
        "route": match r.route { DixmierRoute::Closed => "closed", DixmierRoute::Numeric => "numeric" },
        "probes": r.probes,
        "diagnostics": r.diagnostics,
    })
}

fn cmd_dixmier(
    doc: &GraphDocument,
    g: &KGraph,
    gamma: &str,
    route: Route,
    steps: usize,
    depth: usize,
    delta: Option<f64>,
) -> Result<Outcome, Failure> {
    let ctx = context(doc, g, delta)?;
    let gamma = parse_path(gamma)?;
    let result = match route {
        Route::Closed => dixmier_closed(&ctx, &gamma)?,
        Route::Numeric => dixmier_numeric(&ctx, &gamma, steps, depth)?,
    };
    let mut table = CsvTable::new(vec!["gamma", "value", "route"]);
    table.push(vec![
        result.gamma.to_string(),
        fmt(result.value),
        match result.route {
            DixmierRoute::Closed => "closed".to_string(),
            DixmierRoute::Numeric => "numeric".to_string(),
        },
    ]);
    let mut outcome = Outcome::new(
        json!({
            "gamma": gamma.to_string(),
            "route": match route { Route::Closed => "closed", Route::Numeric => "numeric" },
            "steps": steps,
            "depth": depth,
            "delta": ctx.delta(),
        }),
        dixmier_json(&result),
        table,
    );
    outcome.series = result.probes.clone();
    outcome.warnings = result.diagnostics.clone();
    Ok(outcome)
}

fn cmd_hausdorff(
    doc: &GraphDocument,
    g: &KGraph,
    tol: f64,
    delta: Option<f64>,
) -> Result<Outcome, Failure> {
    let ctx = context(doc, g, delta)?;
    let estimate = hausdorff_dim_estimate(&ctx, tol)?;
    // cover sums at the estimated dimension, for plotting
    let mut series = Vec::new();
    let mut table = CsvTable::new(vec!["q", "cover_sum"]);
    for q in 0..=12usize {
        let sum = hausdorff_sum(&ctx, q, estimate)?;
        series.push((q as f64, sum));
        table.push(vec![q.to_string(), fmt(sum)]);
    }
    let results = json!({
        "dimension": estimate,
        "tol": tol,
        "delta": ctx.delta(),
        "cover_sums": series.iter().map(|&(_, y)| y).collect::<Vec<f64>>(),
    });
    let mut outcome = Outcome::new(json!({ "tol": tol, "delta": ctx.delta() }), results, table);
    outcome.series = series;
    Ok(outcome)
}

fn cmd_wavelets(
    doc: &GraphDocument,
    g: &KGraph,
    level: usize,
    refined: Option<usize>,
    j_shape: Option<&str>,
    slice: usize,
    delta: Option<f64>,
) -> Result<Outcome, Failure> {
    let ctx = context(doc, g, delta)?;
    let k = g.k();
    let basis = if let Some(shape_text) = j_shape {
        let shape: Result<Vec<usize>, _> =
            shape_text.split(',').map(|v| v.trim().parse()).collect();
        let shape =
            shape.map_err(|_| Failure::Invalid(format!("bad shape {shape_text:?}")))?;
        if shape.len() != k || shape.iter().any(|&e| e == 0) {
            return Err(Failure::Invalid(format!(
                "shape {shape:?} must list one positive exponent per colour (k = {k})"
            )));
        }
        let period: usize = shape.iter().sum();
        if !(1..=period).contains(&slice) {
            return Err(Failure::Invalid(format!(
                "slice {slice} outside 1..={period} for shape {shape:?}"
            )));
        }
        j_wavelet_basis(&ctx, &shape, level, slice)?
    } else if let Some(j) = refined {
        if !(1..=k).contains(&j) {
            return Err(Failure::Invalid(format!(
                "colour slice {j} outside 1..={k}"
            )));
        }
        refined_wavelet_basis(&ctx, level, j)?
    } else {
        wavelet_basis(&ctx, level)?
    };
    let table = basis_table(&ctx, &basis)?;
    Ok(Outcome::new(
        json!({
            "level": level,
            "refined": refined,
            "J": j_shape,
            "slice": j_shape.map(|_| slice),
            "delta": ctx.delta(),
        }),
        basis_report(&basis),
        table,
    ))
}

fn cmd_laplacian(
    doc: &GraphDocument,
    g: &KGraph,
    s: f64,
    gamma: &str,
    delta: Option<f64>,
) -> Result<Outcome, Failure> {
    let ctx = context(doc, g, delta)?;
    let gamma = parse_path(gamma)?;
    let basis = eigenspace_basis(&ctx, &EigenspaceId::Path(gamma.clone()))?;
    let mut rayleigh = Vec::new();
    let mut max_residual = 0.0f64;
    for f in &basis.vectors {
        let image = laplacian_apply(&ctx, s, f)?;
        let den = inner(&ctx, f, f)?;
        let c = inner(&ctx, f, &image)? / den;
        let mut resid = image.clone();
        resid.add_scaled(f, -c)?;
        let rel = (inner(&ctx, &resid, &resid)? / den).sqrt();
        rayleigh.push(c);
        max_residual = max_residual.max(rel);
    }
    let mut results = basis_report(&basis);
    let extra = json!({
        "s": s,
        "gamma": gamma.to_string(),
        "eigenvalue": rayleigh.first().copied(),
        "rayleigh": rayleigh,
        "max_relative_residual": max_residual,
    });
    merge(&mut results, extra);
    let table = basis_table(&ctx, &basis)?;
    Ok(Outcome::new(
        json!({ "s": s, "gamma": gamma.to_string(), "delta": ctx.delta() }),
        results,
        table,
    ))
}

/// Merge `extra`'s top-level fields into `base` (both must be objects).
fn merge(base: &mut Value, extra: Value) {
    if let (Value::Object(b), Value::Object(e)) = (base, extra) {
        for (key, val) in e {
            b.insert(key, val);
        }
    }
}

fn cmd_dirac(
    doc: &GraphDocument,
    g: &KGraph,
    alpha: &str,
    depth: usize,
    delta: Option<f64>,
) -> Result<Outcome, Failure> {
    let ctx = context(doc, g, delta)?;
    let seq = parse_alpha(alpha)?;
    let report = dirac_eigen_report(&ctx, &seq, depth)?;
    let results = serde_json::to_value(&report)
        .map_err(|e| Failure::Invalid(format!("report serialization: {e}")))?;
    let mut table = CsvTable::new(vec!["eigenvalue", "multiplicity"]);
    for &(v, m) in &report.eigenvalues {
        table.push(vec![fmt(v), m.to_string()]);
    }
    Ok(Outcome::new(
        json!({ "alpha": alpha, "depth": depth, "delta": ctx.delta() }),
        results,
        table,
    ))
}

fn cmd_ck_check(
    doc: &GraphDocument,
    g: &KGraph,
    depth: usize,
    delta: Option<f64>,
) -> Result<Outcome, Failure> {
    let ctx = context(doc, g, delta)?;
    let report = ck_check(&ctx, depth)?;
    let mut results = serde_json::to_value(&report)
        .map_err(|e| Failure::Invalid(format!("report serialization: {e}")))?;
    merge(&mut results, json!({ "max_residual": report.max_residual() }));
    let mut table = CsvTable::new(vec!["relation", "residual"]);
    for (name, value) in [
        ("ck1", report.ck1),
        ("ck2", report.ck2),
        ("ck3", report.ck3),
        ("ck4", report.ck4),
    ] {
        table.push(vec![name.to_string(), fmt(value)]);
    }
    Ok(Outcome::new(
        json!({ "depth": depth, "delta": ctx.delta() }),
        results,
        table,
    ))
}

fn cmd_commutator(
    doc: &GraphDocument,
    g: &KGraph,
    lambda: &str,
    mu: &str,
    depths: &str,
    alpha: &str,
    delta: Option<f64>,
) -> Result<Outcome, Failure> {
    let ctx = context(doc, g, delta)?;
    let lambda = parse_path(lambda)?;
    let mu = parse_path(mu)?;
    let seq = parse_alpha(alpha)?;
    let (lo, hi) = parse_depth_range(depths)?;
    let mut table = CsvTable::new(vec!["depth", "norm"]);
    let mut series = Vec::new();
    let mut norms = Vec::new();
    for depth in lo..=hi {
        let norm = commutator_norm(&ctx, &seq, &lambda, &mu, depth)?;
        table.push(vec![depth.to_string(), fmt(norm)]);
        series.push((depth as f64, norm));
        norms.push(json!({ "depth": depth, "norm": norm }));
    }
    let results = json!({
        "lambda": lambda.to_string(),
        "mu": mu.to_string(),
        "alpha": alpha,
        "norms": norms,
    });
    let mut outcome = Outcome::new(
        json!({
            "lambda": lambda.to_string(),
            "mu": mu.to_string(),
            "depths": depths,
            "alpha": alpha,
            "delta": ctx.delta(),
        }),
        results,
        table,
    );
    outcome.series = series;
    Ok(outcome)
}
