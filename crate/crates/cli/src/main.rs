//! `qgraph`: command-line front end for the analyses in `qgraph-core`.
//!
//! Exit codes: 0 ok, 2 invalid input, 3 irregular pair or outside the scope of
//! the analysis, 4 numerical failure, 5 star graph required, 6 on the
//! spectrum, 7 Cayley pole.

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::Serialize;

use qgraph_core::boundary::{classify_bc, BoundaryConditions, ClassTag};
use qgraph_core::classify::{report, similarity_verdict_star, Obstruction, ReportOptions};
use qgraph_core::evolve::{evolve, DiscreteLaplacian, Equation, DEFAULT_EXT_LENGTH};
use qgraph_core::graph::{EdgeFunction, EdgeRef, MetricGraph};
use qgraph_core::matrixcore::RankTolerance;
use qgraph_core::problem::{AnalysisOptions, BcSpec, GraphSpec, ProblemSpec, RegionSpec};
use qgraph_core::spectral::{
    compact_spectrum, enclosure, resolvent_witness_irregular, resolvent_witness_nqs, star_point_spectrum, GreensKernel,
    IrregularWitness, RootOptions, SearchRegion,
};
use qgraph_core::Error;

#[derive(Parser, Debug)]
#[command(name = "qgraph", version, about = "Laplacians on metric graphs with general vertex conditions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Classification, Cayley poles, generator and similarity verdicts,
    /// enclosure and (optionally) spectrum in one JSON report.
    Classify(Common),
    /// Eigenvalues as CSV (re_k, im_k, re_lambda, im_lambda, multiplicity)
    /// or JSON.
    Spectrum(Common),
    /// Resolvent applied to a fixed source at a given k.
    Greens {
        #[command(flatten)]
        common: Common,
        /// Real and imaginary part of k.
        #[arg(long, num_args = 2, allow_negative_numbers = true, value_names = ["RE", "IM"])]
        k: Vec<f64>,
    },
    /// Region of the lambda-plane containing the spectrum.
    Enclosure(Common),
    /// Lower bounds for the resolvent norm along lambda = -kappa^2.
    Witness {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_values_t = vec![10.0, 20.0, 40.0, 80.0])]
        kappa: Vec<f64>,
    },
    /// Similarity to a self-adjoint operator (star graphs).
    Similarity(Common),
    /// Time evolution; norm series as CSV or full result as JSON.
    Evolve {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = EquationArg::Heat)]
        equation: EquationArg,
        /// Keep a snapshot every N steps in the JSON output (0: none).
        #[arg(long, default_value_t = 0)]
        snapshot_every: usize,
    },
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Problem file with graph, bc and options.
    #[arg(long, conflicts_with_all = ["graph"])]
    spec: Option<PathBuf>,
    /// Graph JSON file.
    #[arg(long)]
    graph: Option<PathBuf>,
    /// Vertex conditions: JSON file or preset name with optional parameters,
    /// e.g. `pt_point:0.785`, `delta:1,2`.
    #[arg(long)]
    bc: Option<String>,
    /// Relative rank tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Search rectangle in the k-plane.
    #[arg(long, num_args = 4, allow_negative_numbers = true, value_names = ["RE0", "RE1", "IM0", "IM1"])]
    region: Option<Vec<f64>>,
    /// Grid spacing.
    #[arg(long)]
    h: Option<f64>,
    /// Truncation length of external edges.
    #[arg(long)]
    ext_length: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
    /// Output file (default stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum Format {
    Json,
    Csv,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum EquationArg {
    Heat,
    Schrodinger,
    Wave,
}

/// Failure with its exit code.
#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidMatrix(_)
            | Error::Shape(_)
            | Error::InvalidGraph(_)
            | Error::InvalidArgument(_)
            | Error::Spec(_) => 2,
            Error::IrregularPencil | Error::RankDeficient { .. } | Error::WrongClass { .. } | Error::KappaTooSmall(_) => 3,
            Error::NoConvergence(_)
            | Error::ContourThroughZero
            | Error::ContourTooClose
            | Error::SingularStep
            | Error::NotAnEigenvalue(_) => 4,
            Error::NotAStarGraph => 5,
            Error::OnSpectrum(_) | Error::ZeroK => 6,
            Error::PoleOfCayley(_) => 7,
        };
        Failure { code, message: e.to_string() }
    }
}

fn spec_error(message: impl Into<String>) -> Failure {
    Failure { code: 2, message: message.into() }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn read(path: &PathBuf) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| spec_error(format!("{}: {e}", path.display())))
}

struct Problem {
    graph: MetricGraph,
    bc: BoundaryConditions,
    options: AnalysisOptions,
}

impl Common {
    fn load(&self) -> CliResult<Problem> {
        let (graph_spec, bc_spec, mut options) = match &self.spec {
            Some(path) => {
                let spec = ProblemSpec::from_json(&read(path)?).map_err(|e| spec_error(format!("{}: {e}", path.display())))?;
                let bc = match &self.bc {
                    Some(s) => self.bc_spec(s)?,
                    None => spec.bc,
                };
                (spec.graph, bc, spec.options)
            }
            None => {
                let path = self.graph.as_ref().ok_or_else(|| spec_error("either --spec or --graph is required"))?;
                let graph: GraphSpec = serde_json::from_str(&read(path)?)
                    .map_err(|e| spec_error(format!("{}: {e}", path.display())))?;
                let bc = self.bc.as_deref().ok_or_else(|| spec_error("--bc is required with --graph"))?;
                (graph, self.bc_spec(bc)?, AnalysisOptions::default())
            }
        };
        if let Some(t) = self.tol {
            options.tol = Some(t);
        }
        if let Some(r) = &self.region {
            options.region = Some(RegionSpec { re_min: r[0], re_max: r[1], im_min: r[2], im_max: r[3] });
        }
        options.h = self.h.or(options.h);
        options.ext_length = self.ext_length.or(options.ext_length);
        options.dt = self.dt.or(options.dt);
        options.steps = self.steps.or(options.steps);
        let graph = graph_spec.build()?;
        let bc = bc_spec.build(&graph)?;
        Ok(Problem { graph, bc, options })
    }

    fn bc_spec(&self, s: &str) -> CliResult<BcSpec> {
        let path = PathBuf::from(s);
        if path.is_file() {
            serde_json::from_str(&read(&path)?).map_err(|e| spec_error(format!("{s}: {e}")))
        } else {
            Ok(BcSpec::parse_preset(s)?)
        }
    }

    fn emit(&self, text: &str) -> CliResult<()> {
        match &self.out {
            Some(path) => fs::write(path, text).map_err(|e| Failure { code: 2, message: format!("{}: {e}", path.display()) }),
            None => {
                let mut out = std::io::stdout().lock();
                out.write_all(text.as_bytes()).and_then(|_| out.flush()).map_err(|e| Failure { code: 2, message: e.to_string() })
            }
        }
    }

    fn emit_json<T: Serialize>(&self, value: &T) -> CliResult<()> {
        let mut s = serde_json::to_string_pretty(value).map_err(|e| Failure { code: 4, message: e.to_string() })?;
        s.push('\n');
        self.emit(&s)
    }
}

impl Problem {
    fn tol(&self) -> CliResult<RankTolerance> {
        match self.options.tol {
            Some(t) => Ok(RankTolerance::new(t)?),
            None => Ok(RankTolerance::default()),
        }
    }

    fn region(&self) -> CliResult<Option<SearchRegion>> {
        match self.options.region {
            Some(r) => Ok(Some(SearchRegion::new(r.re_min, r.re_max, r.im_min, r.im_max)?)),
            None => Ok(None),
        }
    }

    fn h(&self) -> f64 {
        self.options.h.unwrap_or(1e-3)
    }

    fn ext_length(&self) -> f64 {
        self.options.ext_length.unwrap_or(DEFAULT_EXT_LENGTH)
    }
}

fn csv_text<F>(header: &[&str], fill: F) -> CliResult<String>
where
    F: FnOnce(&mut csv::Writer<Vec<u8>>) -> csv::Result<()>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    let run = || -> csv::Result<Vec<u8>> {
        w.write_record(header)?;
        fill(&mut w)?;
        w.into_inner().map_err(|e| e.into_error().into())
    };
    let bytes = run().map_err(|e| Failure { code: 4, message: e.to_string() })?;
    String::from_utf8(bytes).map_err(|e| Failure { code: 4, message: e.to_string() })
}

fn cmd_classify(c: &Common) -> CliResult<()> {
    let p = c.load()?;
    let r = report(&p.bc, &p.graph, ReportOptions { tol: p.tol()?, region: p.region()? })?;
    c.emit_json(&r)
}

fn cmd_spectrum(c: &Common) -> CliResult<()> {
    let p = c.load()?;
    let tol = p.tol()?;
    let class = classify_bc(&p.bc, tol)?;
    if matches!(class.tag, ClassTag::Irregular | ClassTag::RankDeficient) {
        return Err(Failure {
            code: 3,
            message: format!("boundary conditions are {}: the spectrum may be empty or all of C", class.tag),
        });
    }
    let rep = if p.graph.is_star() {
        star_point_spectrum(&p.bc, &p.graph, tol)?
    } else {
        let region = p.region()?.ok_or_else(|| spec_error("--region is required for graphs with internal edges"))?;
        compact_spectrum(&p.bc, &p.graph, region, RootOptions::default())?
    };
    match c.format {
        Format::Json => c.emit_json(&rep),
        Format::Csv => {
            let text = csv_text(&["re_k", "im_k", "re_lambda", "im_lambda", "multiplicity"], |w| {
                for pt in rep.points.iter().filter(|pt| pt.is_eigenvalue) {
                    w.write_record(&[
                        pt.k.re.to_string(),
                        pt.k.im.to_string(),
                        pt.lambda.re.to_string(),
                        pt.lambda.im.to_string(),
                        pt.multiplicity.to_string(),
                    ])?;
                }
                Ok(())
            })?;
            c.emit(&text)
        }
    }
}

/// `f = 1` on internal edges and `e^{-x}` on external ones.
fn default_source(graph: &MetricGraph, h: f64, ext_length: f64) -> CliResult<EdgeFunction> {
    Ok(EdgeFunction::sample(graph, h, ext_length, |e, x| match e {
        EdgeRef::Internal(_) => Complex64::new(1.0, 0.0),
        EdgeRef::External(_) => Complex64::new((-x).exp(), 0.0),
    })?)
}

#[derive(Serialize)]
struct EdgeValues {
    id: String,
    x: Vec<f64>,
    re: Vec<f64>,
    im: Vec<f64>,
}

fn edge_ids(graph: &MetricGraph) -> Vec<String> {
    graph.external_edges().iter().map(|e| e.id.clone()).chain(graph.internal_edges().iter().map(|e| e.id.clone())).collect()
}

fn edge_values(graph: &MetricGraph, f: &EdgeFunction) -> Vec<EdgeValues> {
    edge_ids(graph)
        .into_iter()
        .zip(&f.edges)
        .map(|(id, s)| EdgeValues {
            id,
            x: (0..s.values.len()).map(|j| s.x(j)).collect(),
            re: s.values.iter().map(|z| z.re).collect(),
            im: s.values.iter().map(|z| z.im).collect(),
        })
        .collect()
}

#[derive(Serialize)]
struct GreensOutput {
    #[serde(with = "qgraph_core::json::complex")]
    k: Complex64,
    source: &'static str,
    /// `|A u(v) + B u'(v)|` from the exact traces.
    boundary_residual: f64,
    edges: Vec<EdgeValues>,
}

fn cmd_greens(c: &Common, k: &[f64]) -> CliResult<()> {
    let p = c.load()?;
    let k = match k {
        [re, im] => Complex64::new(*re, *im),
        _ => return Err(spec_error("--k RE IM is required")),
    };
    let f = default_source(&p.graph, p.h(), p.ext_length())?;
    let (u, vals, ders) = GreensKernel::new(&p.bc, &p.graph, k)?.apply_with_traces(&f)?;
    let boundary_residual = (p.bc.a() * vals + p.bc.b() * ders).norm();
    match c.format {
        Format::Json => c.emit_json(&GreensOutput {
            k,
            source: "one on internal edges, exp(-x) on external edges",
            boundary_residual,
            edges: edge_values(&p.graph, &u),
        }),
        Format::Csv => {
            let ids = edge_ids(&p.graph);
            let text = csv_text(&["edge", "x", "re_u", "im_u"], |w| {
                for (id, s) in ids.iter().zip(&u.edges) {
                    for (j, z) in s.values.iter().enumerate() {
                        w.write_record(&[id.clone(), s.x(j).to_string(), z.re.to_string(), z.im.to_string()])?;
                    }
                }
                Ok(())
            })?;
            c.emit(&text)
        }
    }
}

fn cmd_enclosure(c: &Common) -> CliResult<()> {
    let p = c.load()?;
    let r = enclosure(&p.bc, &p.graph, p.tol()?)?;
    c.emit_json(&r)
}

#[derive(Serialize)]
struct WitnessRow {
    kappa: f64,
    quotient: f64,
}

#[derive(Serialize)]
struct WitnessOutput {
    kind: &'static str,
    rows: Vec<WitnessRow>,
    /// Least-squares slope: of `ln quotient` against `ln kappa` for
    /// regular pairs, of `ln(quotient kappa^2)` against `kappa` for
    /// irregular ones.
    slope: Option<f64>,
    everything_is_spectrum: bool,
}

fn least_squares_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() < 2 {
        return None;
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    Some(sxy / sxx)
}

fn cmd_witness(c: &Common, kappas: &[f64]) -> CliResult<()> {
    let p = c.load()?;
    let class = classify_bc(&p.bc, p.tol()?)?;
    let out = match class.tag {
        ClassTag::RegularNonQuasiSectorial => {
            let rows: Vec<WitnessRow> = kappas
                .iter()
                .map(|&kappa| Ok(WitnessRow { kappa, quotient: resolvent_witness_nqs(&p.bc, &p.graph, kappa)?.quotient }))
                .collect::<CliResult<_>>()?;
            let lx: Vec<f64> = rows.iter().map(|r| r.kappa.ln()).collect();
            let ly: Vec<f64> = rows.iter().map(|r| r.quotient.ln()).collect();
            WitnessOutput { kind: "regular_non_quasi_sectorial", slope: least_squares_slope(&lx, &ly), rows, everything_is_spectrum: false }
        }
        ClassTag::Irregular => {
            let mut rows = Vec::new();
            let mut everything = false;
            for &kappa in kappas {
                match resolvent_witness_irregular(&p.bc, &p.graph, Complex64::new(0.0, kappa))? {
                    IrregularWitness::EverythingIsSpectrum => {
                        everything = true;
                        break;
                    }
                    IrregularWitness::Quotient { quotient, .. } => rows.push(WitnessRow { kappa, quotient }),
                }
            }
            let x: Vec<f64> = rows.iter().map(|r| r.kappa).collect();
            let y: Vec<f64> = rows.iter().map(|r| (r.quotient * r.kappa * r.kappa).ln()).collect();
            let slope = if everything { None } else { least_squares_slope(&x, &y) };
            WitnessOutput { kind: "irregular", rows, slope, everything_is_spectrum: everything }
        }
        other => {
            return Err(Failure { code: 3, message: format!("no resolvent witness for class {other}") });
        }
    };
    match c.format {
        Format::Json => c.emit_json(&out),
        Format::Csv => {
            let slope = out.slope.map(|s| s.to_string()).unwrap_or_default();
            let text = csv_text(&["kappa", "quotient", "slope"], |w| {
                for r in &out.rows {
                    w.write_record(&[r.kappa.to_string(), r.quotient.to_string(), slope.clone()])?;
                }
                Ok(())
            })?;
            c.emit(&text)
        }
    }
}

#[derive(Serialize)]
struct SimilarityOutput {
    similar: bool,
    obstruction: Obstruction,
}

fn cmd_similarity(c: &Common) -> CliResult<()> {
    let p = c.load()?;
    let v = similarity_verdict_star(&p.bc, &p.graph, p.tol()?)?;
    c.emit_json(&SimilarityOutput { similar: v.is_similar_to_selfadjoint, obstruction: v.obstruction })
}

fn cmd_evolve(c: &Common, eq: EquationArg, snapshot_every: usize) -> CliResult<()> {
    let p = c.load()?;
    let eq = match eq {
        EquationArg::Heat => Equation::Heat,
        EquationArg::Schrodinger => Equation::Schrodinger,
        EquationArg::Wave => Equation::Wave,
    };
    let dl = DiscreteLaplacian::new(&p.graph, &p.bc, p.options.h.unwrap_or(1e-2), p.ext_length())?;
    let graph = p.graph.clone();
    // sin(pi x / a) on internal edges, a Gaussian on external ones
    let psi0 = dl.sample(|e, x| match e {
        EdgeRef::Internal(i) => {
            let a = graph.internal_edges()[i].length;
            Complex64::new((std::f64::consts::PI * x / a).sin(), 0.0)
        }
        EdgeRef::External(_) => Complex64::new((-x * x).exp(), 0.0),
    });
    let v0 = psi0.zeros_like();
    let r = evolve(&dl, eq, &psi0, Some(&v0), p.options.dt.unwrap_or(1e-3), p.options.steps.unwrap_or(100), snapshot_every)?;
    match c.format {
        Format::Json => c.emit_json(&r),
        Format::Csv => {
            let header: &[&str] = if r.energies.is_some() { &["time", "norm", "energy"] } else { &["time", "norm"] };
            let text = csv_text(header, |w| {
                for (i, (t, n)) in r.times.iter().zip(&r.norms).enumerate() {
                    let mut rec = vec![t.to_string(), n.to_string()];
                    if let Some(e) = &r.energies {
                        rec.push(e[i].to_string());
                    }
                    w.write_record(&rec)?;
                }
                Ok(())
            })?;
            c.emit(&text)
        }
    }
}

fn configure_threads() -> CliResult<()> {
    if let Ok(v) = std::env::var("QGRAPH_THREADS") {
        let n: usize = v.trim().parse().map_err(|_| spec_error(format!("QGRAPH_THREADS must be a positive integer, got {v:?}")))?;
        if n == 0 {
            return Err(spec_error("QGRAPH_THREADS must be positive"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure { code: 4, message: e.to_string() })?;
    }
    Ok(())
}

fn run(cli: Cli) -> CliResult<()> {
    configure_threads()?;
    match &cli.command {
        Command::Classify(c) => cmd_classify(c),
        Command::Spectrum(c) => cmd_spectrum(c),
        Command::Greens { common, k } => cmd_greens(common, k),
        Command::Enclosure(c) => cmd_enclosure(c),
        Command::Witness { common, kappa } => cmd_witness(common, kappa),
        Command::Similarity(c) => cmd_similarity(c),
        Command::Evolve { common, equation, snapshot_every } => cmd_evolve(common, *equation, *snapshot_every),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
