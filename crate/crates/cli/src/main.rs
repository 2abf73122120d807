//! `lrd` — test a time series for long-range dependence, simulate the
//! calibration models, and dump autocovariances for plotting.

use std::fs::File;
use std::io::{Read as _, Write as _};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use lrd_core::lrtest::{BlockSpec, OrderSpec, RunSettings, TestReport, VarianceMode};
use lrd_core::simulate::{monte_carlo, sample_acvf, simulate_named_model, NamedModel};
use lrd_core::LrdError;

#[derive(Parser)]
#[command(
    name = "lrd",
    version,
    about = "Long-range dependence test for non-stationary time series"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the test on a CSV series and emit a report.
    Test(TestArgs),
    /// Simulate a named model; emit one path or a Monte Carlo table.
    Simulate(SimulateArgs),
    /// Sample autocovariances of a CSV series as TSV plot data.
    Acvf(AcvfArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Transform {
    None,
    LogReturn,
    Square,
    SquareLogReturn,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum VarianceModeArg {
    Gaussian,
    General,
    Auto,
}

impl From<VarianceModeArg> for VarianceMode {
    fn from(v: VarianceModeArg) -> Self {
        match v {
            VarianceModeArg::Gaussian => VarianceMode::Gaussian,
            VarianceModeArg::General => VarianceMode::General,
            VarianceModeArg::Auto => VarianceMode::Auto,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Tsv,
}

#[derive(Args)]
struct TestArgs {
    /// Input CSV file (one numeric per row; optional header).
    #[arg(long)]
    input: PathBuf,
    /// Column name to read from a multi-column CSV.
    #[arg(long)]
    column: Option<String>,
    /// Transformation applied before testing.
    #[arg(long, value_enum, default_value = "none")]
    transform: Transform,
    /// Number of blocks M (exactly one of --M/--N).
    #[arg(long = "M", conflicts_with = "block_len")]
    blocks: Option<usize>,
    /// Block length N (exactly one of --M/--N).
    #[arg(long = "N")]
    block_len: Option<usize>,
    /// Sieve order: a fixed integer or `aic`.
    #[arg(long, default_value = "aic")]
    k: String,
    /// Largest order the AIC scan considers.
    #[arg(long, default_value_t = 10)]
    k_max: usize,
    /// Test level.
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, value_enum, default_value = "gaussian")]
    variance_mode: VarianceModeArg,
    /// Local-mean window override (default: the block length N).
    #[arg(long = "L")]
    mean_window: Option<usize>,
    /// Output path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Args)]
struct SimulateArgs {
    /// Model name: tvar1_smooth_mean, tvar1_jump_mean, tvma1,
    /// tvfarima_1_d_0, tvfarima_0_d_1, farima_1_d_1.
    #[arg(long)]
    model: String,
    /// Sample length.
    #[arg(long = "T")]
    len: usize,
    #[arg(long = "M", conflicts_with = "block_len")]
    blocks: Option<usize>,
    #[arg(long = "N")]
    block_len: Option<usize>,
    /// Replications: 1 emits the path, more runs a rejection experiment.
    #[arg(long, default_value_t = 1)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AcvfArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    column: Option<String>,
    #[arg(long)]
    max_lag: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Report serialization with the exact field set and order of the
/// documented schema.
#[derive(Serialize)]
struct ReportJson {
    #[serde(rename = "T")]
    t: usize,
    #[serde(rename = "N")]
    n: usize,
    #[serde(rename = "M")]
    m: usize,
    k: usize,
    #[serde(rename = "L")]
    l: usize,
    #[serde(rename = "F_hat")]
    f_hat: f64,
    #[serde(rename = "W_hat")]
    w_hat: f64,
    variance_mode: String,
    statistic: f64,
    p_value: f64,
    alpha: f64,
    reject: bool,
    d_profile: Vec<DPoint>,
    warnings: Vec<String>,
}

#[derive(Serialize)]
struct DPoint {
    j: usize,
    u: f64,
    d: f64,
}

impl From<&TestReport> for ReportJson {
    fn from(r: &TestReport) -> Self {
        ReportJson {
            t: r.t,
            n: r.n,
            m: r.m,
            k: r.k,
            l: r.l,
            f_hat: r.f_hat,
            w_hat: r.w_hat,
            variance_mode: r.variance_mode.as_str().to_string(),
            statistic: r.statistic,
            p_value: r.p_value,
            alpha: r.alpha,
            reject: r.reject,
            d_profile: r
                .d_profile
                .iter()
                .map(|p| DPoint { j: p.j, u: p.u, d: p.d })
                .collect(),
            warnings: r.warnings.clone(),
        }
    }
}

fn main() {
    if let Ok(threads) = std::env::var("LRD_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
        }
    }
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            exit_code_for(&e)
        }
    };
    std::process::exit(code);
}

/// Data and configuration problems exit with 2; anything else with 1.
fn exit_code_for(e: &anyhow::Error) -> i32 {
    if let Some(lrd) = e.downcast_ref::<LrdError>() {
        return match lrd {
            LrdError::Config(_)
            | LrdError::Domain(_)
            | LrdError::InvalidParams(_)
            | LrdError::UnknownModel(_) => 2,
            _ => 1,
        };
    }
    // I/O and parse failures are data errors
    2
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Test(args) => cmd_test(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Acvf(args) => cmd_acvf(args),
    }
}

fn cmd_test(args: TestArgs) -> anyhow::Result<()> {
    let raw = read_series(&args.input, args.column.as_deref())?;
    let values = apply_transform(&raw, args.transform)?;

    let blocks = match (args.blocks, args.block_len) {
        (Some(m), None) => BlockSpec::Blocks(m),
        (None, Some(n)) => BlockSpec::BlockLen(n),
        _ => bail!(LrdError::Config(
            "exactly one of --M and --N must be given".into()
        )),
    };
    let order = if args.k == "aic" {
        OrderSpec::Aic { k_max: args.k_max }
    } else {
        let k: usize = args
            .k
            .parse()
            .map_err(|_| LrdError::Config(format!("--k must be `aic` or an integer, got `{}`", args.k)))?;
        OrderSpec::Fixed(k)
    };

    let mut settings = RunSettings::with_blocks(1);
    settings.blocks = blocks;
    settings.order = order;
    settings.mean_window = args.mean_window;
    settings.alpha = args.alpha;
    settings.variance_mode = args.variance_mode.into();

    let report = lrd_core::run_test(&values, &settings)?;

    let body = match args.format {
        Format::Json => serde_json::to_string_pretty(&ReportJson::from(&report))? + "\n",
        Format::Tsv => report_tsv(&report),
    };
    write_output(args.out.as_deref(), &body)?;

    println!(
        "T={} N={} M={} k={} L={} F_hat={:.4} statistic={:.3} p={:.4} -> {}",
        report.t,
        report.n,
        report.m,
        report.k,
        report.l,
        report.f_hat,
        report.statistic,
        report.p_value,
        if report.reject {
            "reject: long-range dependence"
        } else {
            "no rejection: short memory not refuted"
        }
    );
    Ok(())
}

fn report_tsv(r: &TestReport) -> String {
    let profile = r
        .d_profile
        .iter()
        .map(|p| format!("{}:{:.6}:{:.6}", p.j, p.u, p.d))
        .collect::<Vec<_>>()
        .join(",");
    let mut s = String::new();
    for (k, v) in [
        ("T", r.t.to_string()),
        ("N", r.n.to_string()),
        ("M", r.m.to_string()),
        ("k", r.k.to_string()),
        ("L", r.l.to_string()),
        ("F_hat", format!("{:.10}", r.f_hat)),
        ("W_hat", format!("{:.10}", r.w_hat)),
        ("variance_mode", r.variance_mode.as_str().to_string()),
        ("statistic", format!("{:.10}", r.statistic)),
        ("p_value", format!("{:.10e}", r.p_value)),
        ("alpha", r.alpha.to_string()),
        ("reject", r.reject.to_string()),
        ("d_profile", profile),
        ("warnings", r.warnings.join("; ")),
    ] {
        s.push_str(k);
        s.push('\t');
        s.push_str(&v);
        s.push('\n');
    }
    s
}

fn cmd_simulate(args: SimulateArgs) -> anyhow::Result<()> {
    let model = NamedModel::parse(&args.model)?;
    if args.reps <= 1 {
        let path = simulate_named_model(model, args.len, args.seed)?;
        let mut body = String::with_capacity(path.len() * 20);
        for v in path {
            body.push_str(&format!("{v}\n"));
        }
        return write_output(args.out.as_deref(), &body);
    }

    let blocks = match (args.blocks, args.block_len) {
        (Some(m), None) => BlockSpec::Blocks(m),
        (None, Some(n)) => BlockSpec::BlockLen(n),
        _ => bail!(LrdError::Config(
            "exactly one of --M and --N must be given".into()
        )),
    };
    let mut settings = RunSettings::with_blocks(1);
    settings.blocks = blocks;

    let start = Instant::now();
    let summary = monte_carlo(model, args.len, &settings, args.reps, args.seed, true)?;
    let seconds = start.elapsed().as_secs_f64();
    let (n, m) = geometry(args.len, blocks);
    let mut body = String::from("model\tT\tN\tM\trate_5\trate_10\tse_5\tse_10\tseconds\n");
    body.push_str(&format!(
        "{}\t{}\t{}\t{}\t{:.4}\t{:.4}\t{:.4}\t{:.4}\t{:.2}\n",
        model.name(),
        args.len,
        n,
        m,
        summary.rate_5,
        summary.rate_10,
        summary.se_5,
        summary.se_10,
        seconds
    ));
    write_output(args.out.as_deref(), &body)
}

fn geometry(len: usize, blocks: BlockSpec) -> (usize, usize) {
    match blocks {
        BlockSpec::Blocks(m) => (2 * (len / (2 * m)), m),
        BlockSpec::BlockLen(n) => (n, len / n),
    }
}

fn cmd_acvf(args: AcvfArgs) -> anyhow::Result<()> {
    let values = read_series(&args.input, args.column.as_deref())?;
    let acvf = sample_acvf(&values, args.max_lag)?;
    let mut body = String::from("lag\tgamma_hat\n");
    for (lag, g) in acvf.iter().enumerate() {
        body.push_str(&format!("{lag}\t{g:.10e}\n"));
    }
    write_output(args.out.as_deref(), &body)
}

fn write_output(path: Option<&Path>, body: &str) -> anyhow::Result<()> {
    match path {
        Some(p) => {
            let mut f = File::create(p).with_context(|| format!("creating {}", p.display()))?;
            f.write_all(body.as_bytes())?;
        }
        None => {
            std::io::stdout().write_all(body.as_bytes())?;
        }
    }
    Ok(())
}

/// Read one numeric column from a CSV file. Header row is optional and
/// detected by attempting to parse the first row; NaN/Inf and non-numeric
/// rows are rejected with their line numbers.
fn read_series(path: &Path, column: Option<&str>) -> anyhow::Result<Vec<f64>> {
    let mut text = String::new();
    File::open(path)
        .with_context(|| format!("opening {}", path.display()))?
        .read_to_string(&mut text)
        .with_context(|| format!("reading {}", path.display()))?;

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(text.as_bytes());

    let mut rows: Vec<csv::StringRecord> = Vec::new();
    for rec in reader.records() {
        rows.push(rec?);
    }
    if rows.is_empty() {
        bail!(LrdError::Config(format!("{}: empty input", path.display())));
    }

    let col_idx: usize;
    let mut start_row = 0usize;
    match column {
        Some(name) => {
            let header = &rows[0];
            col_idx = header
                .iter()
                .position(|h| h.trim() == name)
                .ok_or_else(|| {
                    LrdError::Config(format!(
                        "{}: no column named `{name}` in header {:?}",
                        path.display(),
                        header
                    ))
                })?;
            start_row = 1;
        }
        None => {
            let width = rows.iter().map(|r| r.len()).max().unwrap_or(1);
            if width > 1 {
                bail!(LrdError::Config(format!(
                    "{}: multi-column input needs --column",
                    path.display()
                )));
            }
            col_idx = 0;
            // optional single header cell
            if parse_cell(rows[0].get(0).unwrap_or("")).is_err() {
                start_row = 1;
            }
        }
    }

    let mut out = Vec::with_capacity(rows.len());
    let mut bad: Vec<String> = Vec::new();
    for (i, row) in rows.iter().enumerate().skip(start_row) {
        let line = i + 1;
        let cell = match row.get(col_idx) {
            Some(c) => c,
            None => {
                bad.push(format!("line {line}: missing column {col_idx}"));
                continue;
            }
        };
        if cell.trim().is_empty() && row.iter().all(|c| c.trim().is_empty()) {
            continue; // trailing blank line
        }
        match parse_cell(cell) {
            Ok(v) => out.push(v),
            Err(msg) => bad.push(format!("line {line}: {msg}")),
        }
    }
    if !bad.is_empty() {
        let shown = bad.iter().take(5).cloned().collect::<Vec<_>>().join("; ");
        let more = if bad.len() > 5 {
            format!(" (+{} more)", bad.len() - 5)
        } else {
            String::new()
        };
        bail!(LrdError::Config(format!(
            "{}: {} bad rows: {shown}{more}",
            path.display(),
            bad.len()
        )));
    }
    if out.is_empty() {
        bail!(LrdError::Config(format!(
            "{}: no numeric data rows",
            path.display()
        )));
    }
    Ok(out)
}

fn parse_cell(cell: &str) -> Result<f64, String> {
    let v: f64 = cell
        .trim()
        .parse()
        .map_err(|_| format!("not a number: `{cell}`"))?;
    if !v.is_finite() {
        return Err(format!("non-finite value: `{cell}`"));
    }
    Ok(v)
}

fn apply_transform(values: &[f64], transform: Transform) -> anyhow::Result<Vec<f64>> {
    let log_return = |vals: &[f64]| -> anyhow::Result<Vec<f64>> {
        if vals.len() < 2 {
            bail!(LrdError::Config("log_return needs at least 2 values".into()));
        }
        let mut out = Vec::with_capacity(vals.len() - 1);
        for (i, w) in vals.windows(2).enumerate() {
            if w[0] <= 0.0 || w[1] <= 0.0 {
                bail!(LrdError::Config(format!(
                    "log_return needs positive values; row {} is {}",
                    i + 1,
                    w[0].min(w[1])
                )));
            }
            out.push((w[1] / w[0]).ln());
        }
        Ok(out)
    };
    match transform {
        Transform::None => Ok(values.to_vec()),
        Transform::Square => Ok(values.iter().map(|v| v * v).collect()),
        Transform::LogReturn => log_return(values),
        Transform::SquareLogReturn => {
            Ok(log_return(values)?.into_iter().map(|v| v * v).collect())
        }
    }
}
