mod report;
mod spec;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use detconvex::acceptance;
use detconvex::certifier::{
    certify, reference_functions, sample_convexity, GridSpec, Verdict, DEFAULT_TOL,
    SAMPLE_EIG_RANGE,
};
use detconvex::detcalculus::{
    default_first_difference_step, fd_first_directional, g_grad_form, QuadFormSample,
};
use detconvex::linalg::{random_posdef_with, random_sym_with, sample_rng};
use detconvex::odelimit::{
    export_derivative_curves, export_family_curves, log_space, CurveTable, IvpSpec,
};
use detconvex::{CurveTable64, Error, ScalarFunction};

use report::{DiagnosticsJson, ReportJson};
use spec::{parse_function, FunctionSpec, SpecError};

const EXIT_CERTIFIED: u8 = 0;
const EXIT_REFUTED: u8 = 1;
const EXIT_INCONCLUSIVE: u8 = 2;
const EXIT_USAGE: u8 = 3;

#[derive(Parser)]
#[command(
    name = "detconvex",
    version,
    about = "Certify or refute convexity of C -> f(det C) on positive definite matrices"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the convexity conditions on a grid and write a JSON report.
    Certify(CertifyArgs),
    /// Print the counterexample pair (C, H) for the first failing grid point.
    Witness(GridArgs),
    /// Write the reference curves as CSV.
    Curves(CurvesArgs),
    /// Compare analytic derivatives of f(det C) with finite differences.
    Oracle(OracleArgs),
    /// Run the built-in acceptance suite.
    Selftest,
}

#[derive(Args)]
struct GridArgs {
    /// Expression in `s`, or family:<fa|power|log|neohooke>:k=v,...
    #[arg(long, short = 'f', allow_hyphen_values = true)]
    function: String,
    /// Matrix dimension n.
    #[arg(long, default_value_t = 3)]
    dim: usize,
    #[arg(long, default_value_t = 1e-3)]
    s_min: f64,
    #[arg(long, default_value_t = 1e3)]
    s_max: f64,
    /// Number of log-spaced grid points.
    #[arg(long, default_value_t = 1000)]
    count: usize,
    /// Relative tolerance of the per-point band.
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
}

#[derive(Args)]
struct CertifyArgs {
    #[command(flatten)]
    grid: GridArgs,
    /// Random (C, H) samples for the diagnostics block; 0 skips sampling.
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Write the report here instead of stdout.
    #[arg(long, short = 'o')]
    output: Option<PathBuf>,
    /// Leave out the timestamp so that reports are byte-identical across runs.
    #[arg(long)]
    no_timestamp: bool,
}

#[derive(Args)]
struct CurvesArgs {
    /// Directory for the CSV files; stdout if omitted.
    #[arg(long, short = 'o')]
    output: Option<PathBuf>,
    /// Additional function to tabulate (repeatable).
    #[arg(long, short = 'f', allow_hyphen_values = true)]
    function: Vec<String>,
    #[arg(long, default_value_t = 3)]
    dim: usize,
    /// Range of s for the function curves.
    #[arg(long, default_value_t = 0.04)]
    s_min: f64,
    #[arg(long, default_value_t = 7.05)]
    s_max: f64,
    /// Range of x for the derivative curves.
    #[arg(long, default_value_t = 0.3)]
    x_min: f64,
    #[arg(long, default_value_t = 9.6)]
    x_max: f64,
    #[arg(long, default_value_t = 1.0)]
    xi: f64,
    #[arg(long, default_value_t = -1.5, allow_hyphen_values = true)]
    eta: f64,
    #[arg(long, default_value_t = 200)]
    count: usize,
}

#[derive(Args)]
struct OracleArgs {
    /// Function to test; the built-in reference set if omitted.
    #[arg(long, short = 'f', allow_hyphen_values = true)]
    function: Option<String>,
    /// Dimensions to sample (repeatable).
    #[arg(long, default_values_t = [2usize, 3, 5])]
    dim: Vec<usize>,
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Run(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            Self::Usage(_) => EXIT_USAGE,
            Self::Run(_) => EXIT_INCONCLUSIVE,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Parameter(_)
            | Error::Dimension(_)
            | Error::Syntax { .. }
            | Error::UnknownIdentifier { .. } => Self::Usage(e.to_string()),
            other => Self::Run(other.to_string()),
        }
    }
}

impl From<SpecError> for CliError {
    fn from(e: SpecError) -> Self {
        Self::Usage(e.to_string())
    }
}

type CliResult = Result<u8, CliError>;

fn write_output(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, text)
            .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", p.display()))),
        None => io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Run(format!("cannot write to stdout: {e}"))),
    }
}

fn function_for(source: &str, n: usize) -> Result<FunctionSpec, CliError> {
    if n == 0 {
        return Err(CliError::Usage("--dim must be at least 1".into()));
    }
    Ok(parse_function(source, n)?)
}

fn run_certify(args: &CertifyArgs) -> CliResult {
    let g = &args.grid;
    let spec = function_for(&g.function, g.dim)?;
    let grid = GridSpec::new(g.s_min, g.s_max, g.count)?;
    let report = certify::<f64>(&spec.function, g.dim, &grid, g.tol)?;
    let diagnostics = if args.samples > 0 {
        DiagnosticsJson::from(&sample_convexity::<f64>(
            &spec.function,
            g.dim,
            args.samples,
            args.seed,
        )?)
    } else {
        DiagnosticsJson {
            samples_run: 0,
            samples_skipped: 0,
            min_hess_form: None,
            min_midpoint_gap: None,
            failing_count: 0,
        }
    };
    let timestamp = (!args.no_timestamp).then(|| {
        SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0)
    });
    let json = ReportJson::new(
        &spec.source,
        &report,
        diagnostics,
        &spec.notes,
        args.seed,
        timestamp,
    );
    let mut text = serde_json::to_string_pretty(&json).map_err(|e| CliError::Run(e.to_string()))?;
    text.push('\n');
    write_output(args.output.as_deref(), &text)?;

    if let Some(d) = &report.domain_failure {
        eprintln!(
            "detconvex: f cannot be evaluated at s = {}: {}",
            d.s, d.message
        );
    }
    eprintln!("{}: {}", spec.source, report.verdict.as_str());
    Ok(match report.verdict {
        Verdict::CertifiedOnGrid => EXIT_CERTIFIED,
        Verdict::Refuted => EXIT_REFUTED,
        Verdict::Inconclusive => EXIT_INCONCLUSIVE,
    })
}

fn format_matrix(rows: &[Vec<f64>]) -> String {
    rows.iter()
        .map(|r| {
            format!(
                "  [{}]\n",
                r.iter()
                    .map(|x| x.to_string())
                    .collect::<Vec<_>>()
                    .join(", ")
            )
        })
        .collect()
}

fn run_witness(args: &GridArgs) -> CliResult {
    let spec = function_for(&args.function, args.dim)?;
    let grid = GridSpec::new(args.s_min, args.s_max, args.count)?;
    let report = certify::<f64>(&spec.function, args.dim, &grid, args.tol)?;
    let mut out = String::new();
    if report.witnesses.is_empty() {
        out.push_str("no violation found on grid\n");
        if let Some(d) = &report.domain_failure {
            out.push_str(&format!(
                "(evaluation stopped at s = {}: {})\n",
                d.s, d.message
            ));
        }
    }
    for w in &report.witnesses {
        out.push_str(&format!(
            "kind: {}\ns*: {}\nC:\n{}",
            w.kind.as_str(),
            w.s_star,
            format_matrix(&w.c.rows())
        ));
        out.push_str(&format!("H:\n{}", format_matrix(&w.h.rows())));
        out.push_str(&format!(
            "analytic D2g(C).(H,H): {}\nfinite difference:     {}\n",
            w.analytic_value, w.fd_value
        ));
    }
    write_output(None, &out)?;
    Ok(
        if report.domain_failure.is_some() && report.witnesses.is_empty() {
            EXIT_INCONCLUSIVE
        } else {
            0
        },
    )
}

fn sanitize(label: &str) -> String {
    label
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '.' || c == '-' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

fn run_curves(args: &CurvesArgs) -> CliResult {
    if args.dim == 0 {
        return Err(CliError::Usage("--dim must be at least 1".into()));
    }
    let mut curves: Vec<CurveTable64> =
        export_family_curves(&[], (args.s_min, args.s_max), args.count)?;
    let ivp = IvpSpec::new(args.xi, args.eta, args.dim)?;
    curves.extend(export_derivative_curves(
        &ivp,
        (args.x_min, args.x_max),
        args.count,
    )?);
    for source in &args.function {
        let spec = function_for(source, args.dim)?;
        let xs = log_space::<f64>((args.s_min, args.s_max), args.count)?;
        let jets = xs
            .iter()
            .map(|&s| spec.function.eval_jet(s))
            .collect::<detconvex::Result<Vec<_>>>()?;
        let points = xs.iter().zip(&jets).map(|(&x, j)| (x, j.v)).collect();
        let curve = CurveTable::new(spec.source.clone(), format!("n={}", args.dim), points)?
            .with_derivative(jets.iter().map(|j| j.d1).collect())?;
        curves.push(curve);
    }

    match &args.output {
        Some(dir) => {
            fs::create_dir_all(dir)
                .map_err(|e| CliError::Usage(format!("cannot create {}: {e}", dir.display())))?;
            for (i, c) in curves.iter().enumerate() {
                let path = dir.join(format!("{:02}_{}.csv", i + 1, sanitize(&c.label)));
                write_output(Some(&path), &c.to_csv())?;
                eprintln!("wrote {}", path.display());
            }
        }
        None => {
            let text: Vec<String> = curves.iter().map(|c| c.to_csv()).collect();
            write_output(None, &text.join("\n"))?;
        }
    }
    Ok(0)
}

fn run_oracle(args: &OracleArgs) -> CliResult {
    if args.samples == 0 {
        return Err(CliError::Usage("--samples must be at least 1".into()));
    }
    if args.dim.contains(&0) {
        return Err(CliError::Usage("--dim must be at least 1".into()));
    }
    let fixed = args
        .function
        .as_deref()
        .map(|src| function_for(src, 3))
        .transpose()?;
    let range = (SAMPLE_EIG_RANGE.0.ln(), SAMPLE_EIG_RANGE.1.ln());
    let mut rng = sample_rng(args.seed);
    let (mut hess_min, mut hess_max) = (f64::INFINITY, 0.0f64);
    let (mut grad_min, mut grad_max) = (f64::INFINITY, 0.0f64);
    let mut skipped = 0usize;
    for i in 0..args.samples {
        let n = args.dim[i % args.dim.len()];
        let reference;
        let f: &ScalarFunction = match &fixed {
            Some(spec) => &spec.function,
            None => {
                reference = reference_functions(n);
                &reference[(i / args.dim.len()) % reference.len()]
            }
        };
        let c = random_posdef_with::<f64, _>(n, range, &mut rng)?;
        let h = random_sym_with::<f64, _>(n, 1.0, &mut rng)?;
        let evaluated = QuadFormSample::evaluate(f, c.clone(), h.clone()).and_then(|q| {
            let grad = g_grad_form(f, &c, &h)?;
            let fd = fd_first_directional(f, &c, &h, default_first_difference_step(&c, &h))?.value;
            Ok((q.discrepancy(), (grad - fd).abs() / grad.abs().max(1.0)))
        });
        match evaluated {
            Ok((dh, dg)) => {
                hess_min = hess_min.min(dh);
                hess_max = hess_max.max(dh);
                grad_min = grad_min.min(dg);
                grad_max = grad_max.max(dg);
            }
            Err(Error::Domain { .. }) | Err(Error::DegenerateDirection(_)) => skipped += 1,
            Err(e) => return Err(e.into()),
        }
    }
    let run = args.samples - skipped;
    println!("samples: {run} evaluated, {skipped} skipped");
    if run == 0 {
        return Ok(EXIT_INCONCLUSIVE);
    }
    println!("second derivative |analytic - fd| / max(1, |analytic|): min {hess_min:e}, max {hess_max:e} (limit 1e-5)");
    println!("first derivative  |analytic - fd| / max(1, |analytic|): min {grad_min:e}, max {grad_max:e} (limit 1e-6)");
    Ok(if hess_max <= 1e-5 && grad_max <= 1e-6 {
        0
    } else {
        1
    })
}

fn run_selftest() -> CliResult {
    let outcomes = acceptance::run_all();
    for o in &outcomes {
        println!("{o}");
    }
    let passed = outcomes.iter().filter(|o| o.passed).count();
    println!("{passed} of {} criteria passed", outcomes.len());
    Ok(if passed == outcomes.len() { 0 } else { 1 })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    let result = match &cli.command {
        Command::Certify(a) => run_certify(a),
        Command::Witness(a) => run_witness(a),
        Command::Curves(a) => run_curves(a),
        Command::Oracle(a) => run_oracle(a),
        Command::Selftest => run_selftest(),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            match &e {
                CliError::Usage(msg) => eprintln!("detconvex: {msg}"),
                CliError::Run(msg) => eprintln!("detconvex: run failed: {msg}"),
            }
            ExitCode::from(e.code())
        }
    }
}
