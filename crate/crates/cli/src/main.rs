//! `glb`: eigenvalue bounds for the clamped plate from the command line.

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use glb_core::afem::{afem_loop, uniform_history, AfemOptions, ConvergenceHistory, Driver, EstimatorOptions};
use glb_core::crlaplace::{cr_uniform_history, kappa1_for_cr};
use glb_core::eigen::EigenOptions;
use glb_core::linalg::SolverOptions;
use glb_core::mesh::{builtin_domain, read_mesh, Domain, Triangulation2D};
use glb_core::morley::kappa;
use glb_core::wf3d::wf3d_verify;
use glb_core::GlbError;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "glb", version, about = "Guaranteed lower eigenvalue bounds for the clamped plate")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Eigenvalue k on a mesh and its uniform refinements.
    Solve(SolveArgs),
    /// Adaptive (or, with θ = 1, uniform) refinement up to a dof budget.
    Afem(AfemArgs),
    /// Print the interpolation constants κ₁, κ₂ and the threshold 1/κ₂².
    Constants(ConstantsArgs),
    /// Run the Worsey–Farin verification suite and print a JSON report.
    Wf3dVerify(VerifyArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    /// Plain Morley, bound by post-processing λ_M.
    Morley,
    /// Extra-stabilised Morley, bound λ_h.
    Stabilised,
    /// Extra-stabilised Crouzeix–Raviart for the Laplacian.
    Cr,
}

#[derive(Args)]
struct Common {
    /// Built-in domain: unit_square, l_shape, dumbbell_slit, four_slit.
    #[arg(long, default_value = "l_shape")]
    domain: String,
    /// Start from this mesh file instead of the domain's initial mesh.
    #[arg(long)]
    mesh: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "stabilised")]
    method: Method,
    /// 1-based eigenvalue index.
    #[arg(long, default_value_t = 1)]
    k: usize,
    /// Relative residual tolerance of the eigensolver.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// CSV output path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Reference eigenvalue for error columns; defaults to the reference table
    /// entry for the domain and k when there is one.
    #[arg(long)]
    ref_lambda: Option<f64>,
    /// JSON list of `{"domain", "k", "lambda"}` reference eigenvalues that
    /// replaces the built-in table.
    #[arg(long)]
    references: Option<PathBuf>,
    /// Seed of the Krylov start vectors.
    #[arg(long, default_value_t = 0x5eed)]
    seed: u64,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    common: Common,
    /// Number of uniform refinements; one CSV row per level.
    #[arg(long, default_value_t = 0)]
    levels: usize,
}

#[derive(Args)]
struct AfemArgs {
    #[command(flatten)]
    common: Common,
    /// Dörfler bulk parameter θ ∈ (0, 1]; θ = 1 refines uniformly.
    #[arg(long, default_value_t = 0.5)]
    theta: f64,
    /// Stop before the first mesh with more dofs than this.
    #[arg(long, default_value_t = 200_000)]
    max_dofs: usize,
    /// Gnuplot data path for (|T|, λ − bound); defaults to the CSV path with
    /// extension `.dat` when a reference eigenvalue is known.
    #[arg(long)]
    dat: Option<PathBuf>,
    /// Drop the boundary jump terms from the estimator.
    #[arg(long)]
    no_boundary_jumps: bool,
}

#[derive(Args)]
struct ConstantsArgs {
    #[arg(long)]
    json: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of random tetrahedra with random admissible centers.
    #[arg(long, default_value_t = 50)]
    configurations: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Exit 2 for bad input, 3 for numerical failure.
enum Failure {
    Usage(String),
    Numeric(String),
}

impl From<GlbError> for Failure {
    fn from(e: GlbError) -> Self {
        match e {
            GlbError::Input(_) | GlbError::Parse { .. } | GlbError::Io(_) | GlbError::Geometry(_) => {
                Failure::Usage(e.to_string())
            }
            GlbError::Domain { .. } | GlbError::Condition(_) | GlbError::Iteration { .. } | GlbError::Factorization(_) => {
                Failure::Numeric(e.to_string())
            }
        }
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

/// Highly accurate approximations, the default reference table for error columns.
const DEFAULT_REFERENCES: &str = r#"[
  {"domain": "dumbbell_slit", "k": 1, "lambda": 80.93261350},
  {"domain": "dumbbell_slit", "k": 4, "lambda": 386.80177939},
  {"domain": "l_shape", "k": 1, "lambda": 418.97504246688220},
  {"domain": "four_slit", "k": 3, "lambda": 1125.12791932},
  {"domain": "four_slit", "k": 4, "lambda": 1125.12793193}
]"#;

#[derive(Deserialize)]
struct Reference {
    domain: String,
    k: usize,
    lambda: f64,
}

fn load_references(path: Option<&Path>) -> Result<Vec<(Domain, usize, f64)>, Failure> {
    let text = match path {
        Some(p) => std::fs::read_to_string(p).map_err(|e| usage(format!("cannot read {}: {e}", p.display())))?,
        None => DEFAULT_REFERENCES.to_string(),
    };
    let refs: Vec<Reference> = serde_json::from_str(&text).map_err(|e| usage(format!("bad reference table: {e}")))?;
    refs.into_iter().map(|r| Ok((r.domain.parse::<Domain>()?, r.k, r.lambda))).collect()
}

struct Setup {
    mesh: Triangulation2D,
    domain: Domain,
    eigen: EigenOptions,
    reference: Option<f64>,
}

fn setup(c: &Common) -> Result<Setup, Failure> {
    let domain: Domain = c.domain.parse()?;
    if c.k == 0 {
        return Err(usage("--k must be at least 1"));
    }
    if !(c.tol > 0.0) {
        return Err(usage("--tol must be positive"));
    }
    let mesh = match &c.mesh {
        Some(p) => read_mesh(p)?,
        None => builtin_domain(domain),
    };
    let eigen = EigenOptions { solver: SolverOptions { tol: c.tol, seed: c.seed, ..SolverOptions::default() }, ..EigenOptions::default() };
    let table = load_references(c.references.as_deref())?;
    // The table holds plate eigenvalues of the built-in meshes only.
    let reference = c.ref_lambda.or_else(|| {
        (c.method != Method::Cr && c.mesh.is_none())
            .then(|| table.iter().find(|r| r.0 == domain && r.1 == c.k).map(|r| r.2))
            .flatten()
    });
    Ok(Setup { mesh, domain, eigen, reference })
}

fn write_output(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| usage(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// The bound compared against the reference: `GLB` from post-processing for
/// the plain Morley method, `λ_h` otherwise.
fn bound(method: Method, r: &glb_core::afem::HistoryRow) -> f64 {
    match method {
        Method::Morley => r.glb,
        Method::Stabilised | Method::Cr => r.lambda_h,
    }
}

fn summarise(h: &ConvergenceHistory, method: Method, reference: Option<f64>) {
    if let (Some(last), Some(lambda)) = (h.rows.last(), reference) {
        eprintln!(
            "level {}: |T| = {}, bound = {:.10}, λ − bound = {:.3e}",
            last.level,
            last.num_triangles,
            bound(method, last),
            lambda - bound(method, last)
        );
    }
}

fn cmd_solve(a: &SolveArgs) -> Result<(), Failure> {
    let s = setup(&a.common)?;
    let h = match a.common.method {
        Method::Cr => cr_uniform_history(&s.mesh, a.common.k, a.levels, usize::MAX, &s.eigen)?,
        Method::Morley | Method::Stabilised => uniform_history(&s.mesh, a.common.k, a.levels, &s.eigen)?,
    };
    write_output(a.common.out.as_deref(), &h.to_csv())?;
    summarise(&h, a.common.method, s.reference);
    Ok(())
}

fn cmd_afem(a: &AfemArgs) -> Result<(), Failure> {
    let c = &a.common;
    let s = setup(c)?;
    if !(a.theta > 0.0 && a.theta <= 1.0) {
        return Err(usage(format!("--theta {} outside (0, 1]", a.theta)));
    }
    let h = match c.method {
        Method::Cr => {
            if a.theta < 1.0 {
                return Err(usage("the CR variant has no estimator; use --theta 1"));
            }
            cr_uniform_history(&s.mesh, c.k, usize::MAX, a.max_dofs, &s.eigen)?
        }
        Method::Morley | Method::Stabilised => {
            let opts = AfemOptions {
                k: c.k,
                theta: a.theta,
                max_dofs: a.max_dofs,
                eigen: s.eigen.clone(),
                estimator: EstimatorOptions { boundary_jumps: !a.no_boundary_jumps },
                driver: if c.method == Method::Morley { Driver::Morley } else { Driver::Stabilised },
                ..AfemOptions::default()
            };
            let (h, _) = afem_loop(&s.mesh, &opts, |row, _| {
                eprintln!("{}: level {} |T| = {} λ_h = {:.10}", s.domain, row.level, row.num_triangles, row.lambda_h)
            })?;
            h
        }
    };
    write_output(c.out.as_deref(), &h.to_csv())?;
    let dat = a.dat.clone().or_else(|| c.out.as_ref().map(|p| p.with_extension("dat")));
    if let (Some(path), Some(lambda)) = (dat, s.reference) {
        let mut text = String::from("# nT lambda-bound\n");
        for r in &h.rows {
            let _ = writeln!(text, "{} {:?}", r.num_triangles, lambda - bound(c.method, r));
        }
        write_output(Some(&path), &text)?;
    }
    summarise(&h, c.method, s.reference);
    Ok(())
}

fn cmd_constants(a: &ConstantsArgs) -> Result<(), Failure> {
    let rows = [kappa(2)?, kappa(3)?];
    let k1_cr = kappa1_for_cr(2)?;
    let text = if a.json {
        let v = serde_json::json!({ "morley": rows, "cr_kappa1_2d": k1_cr });
        serde_json::to_string_pretty(&v).expect("plain data serialises") + "\n"
    } else {
        let mut t = String::from("n  kappa1          kappa2          1/kappa2^2\n");
        for r in &rows {
            let _ = writeln!(t, "{}  {:.12}  {:.12}  {:.6}", r.n, r.kappa1, r.kappa2, r.threshold);
        }
        let _ = writeln!(t, "CR kappa1 (n = 2): {k1_cr:.12}");
        t
    };
    write_output(a.out.as_deref(), &text)
}

fn cmd_wf3d_verify(a: &VerifyArgs) -> Result<(), Failure> {
    if a.configurations == 0 {
        return Err(usage("--configurations must be at least 1"));
    }
    let report = wf3d_verify(a.seed, a.configurations)?;
    let text = serde_json::to_string_pretty(&report).expect("plain data serialises") + "\n";
    write_output(a.out.as_deref(), &text)?;
    if !report.pass {
        eprintln!("failed checks: {}", report.check().join(", "));
    }
    Ok(())
}

fn init_threads() -> Result<(), Failure> {
    if let Ok(v) = std::env::var("GLB_THREADS") {
        let n: usize = v.parse().map_err(|_| usage(format!("GLB_THREADS='{v}' is not a thread count")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| usage(format!("cannot start {n} threads: {e}")))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let run = init_threads().and_then(|()| match &cli.cmd {
        Command::Solve(a) => cmd_solve(a),
        Command::Afem(a) => cmd_afem(a),
        Command::Constants(a) => cmd_constants(a),
        Command::Wf3dVerify(a) => cmd_wf3d_verify(a),
    });
    match run {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Numeric(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(3)
        }
    }
}
