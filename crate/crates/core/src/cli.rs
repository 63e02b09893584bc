//! Command-line front end for the `cksvar` binary.
//!
//! Exit codes: 0 success, 2 usage or invalid configuration, 3 missing
//! critical value or model validation failure, 4 I/O or input parsing,
//! 5 degenerate data, 6 too few accepted limit draws, 7 retention
//! exhausted, 1 anything else.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{Error, Result};
use crate::limitdist::{make_table, CritValTable, LimitSimConfig, DEFAULT_GRID};
use crate::lrv::{estimate_w0_from_series, Kernel, LagRule};
use crate::montecarlo::{format_table, run_table, verify_lln, McConfig, DEFAULT_SIZES, MU_XI};
use crate::paramfile::read_params;
use crate::ranktest::{run_test_w0, TestOutcome, Variant};
use crate::rng::RngState;
use crate::series::SeriesMatrix;
use crate::simulate::{mc_design, occupation, simulate_path, DesignKind, SimOptions};

#[derive(Debug, Parser)]
#[command(name = "cksvar", version, about = "Simulate CKSVAR models and test their cointegrating rank")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a sample path and write it as CSV.
    Simulate(SimulateArgs),
    /// Compute MB or SB statistics on a CSV dataset.
    Test(TestArgs),
    /// Tabulate critical values of the limiting distribution.
    Critvals(CritvalsArgs),
    /// Run the rejection-rate Monte Carlo study.
    Mc(McArgs),
    /// Check regime-conditional sample means of the equilibrium error.
    VerifyLln(LlnArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum DesignArg {
    Linear,
    Nonlinear,
}

impl From<DesignArg> for DesignKind {
    fn from(d: DesignArg) -> Self {
        match d {
            DesignArg::Linear => DesignKind::Linear,
            DesignArg::Nonlinear => DesignKind::Nonlinear,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum DesignSetArg {
    Linear,
    Nonlinear,
    Both,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum VariantArg {
    Mb,
    Sb,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Mb => Variant::Mb,
            VariantArg::Sb => Variant::Sb,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FormatArg {
    Text,
    Csv,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum KernelArg {
    Bartlett,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Built-in bivariate design.
    #[arg(long, value_enum, conflicts_with = "params", required_unless_present = "params")]
    pub design: Option<DesignArg>,
    /// Parameter file instead of a built-in design.
    #[arg(long)]
    pub params: Option<PathBuf>,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub burn_in: usize,
}

#[derive(Debug, Args)]
pub struct TestArgs {
    /// CSV with `y` in the first column.
    #[arg(long)]
    pub input: PathBuf,
    /// Hypothesized numbers of common trends; each is tested separately.
    #[arg(long, value_delimiter = ',', required = true)]
    pub q0: Vec<usize>,
    #[arg(long, value_enum, default_value = "mb")]
    pub variant: VariantArg,
    #[arg(long, default_value_t = 0.10)]
    pub alpha: f64,
    /// Conditioning threshold for MB (default 0.15); SB always uses 0.
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub critvals: PathBuf,
    #[arg(long, value_enum, default_value = "text")]
    pub format: FormatArg,
    /// Initial value of `y` preceding the first row.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub y0: f64,
    /// Fixed kernel lag for the long-run variance; automatic if absent.
    #[arg(long)]
    pub lrv_lags: Option<usize>,
    #[arg(long, value_enum, default_value = "bartlett")]
    pub kernel: KernelArg,
}

#[derive(Debug, Args)]
pub struct CritvalsArgs {
    #[arg(long, value_enum)]
    pub variant: VariantArg,
    /// One or more q0 values; each gets its own rows in the output table.
    #[arg(long, value_delimiter = ',', required = true)]
    pub q0: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "0")]
    pub taus: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "0.1")]
    pub alphas: Vec<f64>,
    #[arg(long, default_value_t = 100_000)]
    pub reps: usize,
    #[arg(long, default_value_t = DEFAULT_GRID)]
    pub grid: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, value_delimiter = ',', default_value = "0", allow_hyphen_values = true)]
    pub w0: Vec<f64>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
}

#[derive(Debug, Args)]
pub struct McArgs {
    #[arg(long, value_enum, default_value = "both")]
    pub design: DesignSetArg,
    #[arg(long, value_delimiter = ',')]
    pub sizes: Option<Vec<usize>>,
    #[arg(long, default_value_t = crate::montecarlo::DEFAULT_REPS)]
    pub reps: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
    #[arg(long)]
    pub critvals_mb: PathBuf,
    #[arg(long)]
    pub critvals_sb: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0.10)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.15)]
    pub tau: f64,
    #[arg(long, default_value_t = 0.15)]
    pub retention: f64,
    #[arg(long, default_value_t = crate::montecarlo::DEFAULT_MAX_REDRAWS)]
    pub max_redraws: usize,
}

#[derive(Debug, Args)]
pub struct LlnArgs {
    #[arg(long, value_enum, default_value = "nonlinear")]
    pub design: DesignArg,
    #[arg(long, default_value_t = 20_000)]
    pub n: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

/// Exit status for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidConfig(_) => 2,
        Error::MissingCriticalValue(_)
        | Error::CoherencyViolated(_)
        | Error::CoherencyParadox(_)
        | Error::RankDeficient(_)
        | Error::RankMismatch { .. }
        | Error::SignCondition(_)
        | Error::NotPositiveDefinite { .. }
        | Error::NotSymmetric
        | Error::DimensionMismatch(_) => 3,
        Error::Io(_) | Error::Parse(_) => 4,
        Error::DegenerateData(_)
        | Error::SingularLimit(_)
        | Error::TooFewObservations(_)
        | Error::EmptyRegime(_)
        | Error::ZeroLrv(_) => 5,
        Error::InsufficientAcceptedDraws { .. } => 6,
        Error::RetentionExhausted { .. } => 7,
        _ => 1,
    }
}

/// Parses `args` (including the program name), runs the command and
/// returns the exit status. Reports go to `out`, diagnostics to stderr.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn dispatch(cmd: Command, out: &mut dyn Write) -> Result<()> {
    match cmd {
        Command::Simulate(a) => cmd_simulate(a, out),
        Command::Test(a) => cmd_test(a, out),
        Command::Critvals(a) => cmd_critvals(a, out),
        Command::Mc(a) => cmd_mc(a, out),
        Command::VerifyLln(a) => cmd_verify_lln(a, out),
    }
}

fn require_input(path: &Path) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Error::Io(format!("cannot read `{}`", path.display())))
    }
}

fn require_output(path: &Path) -> Result<()> {
    let parent = path.parent().filter(|p| !p.as_os_str().is_empty());
    match parent {
        Some(dir) if !dir.is_dir() => Err(Error::Io(format!(
            "output directory `{}` does not exist",
            dir.display()
        ))),
        _ if path.is_dir() => Err(Error::Io(format!("`{}` is a directory", path.display()))),
        _ => Ok(()),
    }
}

fn write_out(out: &mut dyn Write, text: &str) -> Result<()> {
    out.write_all(text.as_bytes())?;
    Ok(())
}

fn cmd_simulate(a: SimulateArgs, out: &mut dyn Write) -> Result<()> {
    if let Some(p) = &a.params {
        require_input(p)?;
    }
    require_output(&a.out)?;
    if a.n == 0 {
        return Err(Error::InvalidConfig("--n must be at least 1".into()));
    }
    let params = match (&a.params, a.design) {
        (Some(p), _) => {
            let params = read_params(p)?;
            params.validate()?;
            params
        }
        (None, Some(d)) => mc_design(d.into()).0,
        (None, None) => unreachable!("clap requires one of --design and --params"),
    };
    let opts = SimOptions {
        init: None,
        burn_in: a.burn_in,
    };
    let path = simulate_path(&params, a.n, &opts, &mut RngState::new(a.seed))?;
    path.series.write_csv_file(&a.out)?;
    let occ = occupation(&path.series.y());
    write_out(
        out,
        &format!(
            "wrote {} rows to {}\noccupation  +: {} ({:.4})  -: {} ({:.4})\n",
            a.n,
            a.out.display(),
            occ.count_plus,
            occ.frac_plus,
            occ.count_minus,
            occ.frac_minus
        ),
    )
}

fn cmd_test(a: TestArgs, out: &mut dyn Write) -> Result<()> {
    require_input(&a.input)?;
    require_input(&a.critvals)?;
    if !(a.alpha > 0.0 && a.alpha <= 1.0) {
        return Err(Error::InvalidConfig(format!("alpha {} outside (0, 1]", a.alpha)));
    }
    let data = SeriesMatrix::read_csv_file(&a.input)?;
    let table = CritValTable::read_csv_file(&a.critvals)?;
    let variant: Variant = a.variant.into();
    let w0 = if variant == Variant::Mb && a.y0 != 0.0 {
        let mut y = vec![a.y0];
        y.extend(data.y());
        let lags = a.lrv_lags.map_or(LagRule::Auto, LagRule::Fixed);
        let kernel = match a.kernel {
            KernelArg::Bartlett => Kernel::Bartlett,
        };
        estimate_w0_from_series(&y, lags, kernel)?.value
    } else {
        0.0
    };
    let outcomes: Vec<TestOutcome> = a
        .q0
        .iter()
        .map(|&q0| run_test_w0(&data, q0, variant, &table, a.alpha, a.tau, w0))
        .collect::<Result<_>>()?;
    let text = match a.format {
        FormatArg::Csv => {
            let mut s = format!("{}\n", TestOutcome::CSV_HEADER);
            for o in &outcomes {
                s.push_str(&o.csv_row());
                s.push('\n');
            }
            s
        }
        FormatArg::Text => {
            let parts: Vec<String> = outcomes.iter().map(|o| o.to_string()).collect();
            format!("{}\n", parts.join("\n\n"))
        }
    };
    write_out(out, &text)
}

fn cmd_critvals(a: CritvalsArgs, out: &mut dyn Write) -> Result<()> {
    require_output(&a.out)?;
    let configs: Vec<LimitSimConfig> = a
        .q0
        .iter()
        .map(|&q0| LimitSimConfig {
            variant: a.variant.into(),
            q0,
            grid: a.grid,
            reps: a.reps,
            seed: a.seed,
            taus: a.taus.clone(),
            alphas: a.alphas.clone(),
            w0_values: a.w0.clone(),
        })
        .collect();
    for cfg in &configs {
        cfg.validate()?;
    }
    if a.threads == 0 {
        return Err(Error::InvalidConfig("--threads must be at least 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(a.threads)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    let mut table = CritValTable::default();
    for cfg in &configs {
        table.merge(&pool.install(|| make_table(cfg))?);
    }
    table.write_csv_file(&a.out)?;
    write_out(
        out,
        &format!("wrote {} rows to {}\n", table.rows().len(), a.out.display()),
    )
}

fn cmd_mc(a: McArgs, out: &mut dyn Write) -> Result<()> {
    require_input(&a.critvals_mb)?;
    require_input(&a.critvals_sb)?;
    require_output(&a.out)?;
    let designs = match a.design {
        DesignSetArg::Linear => vec![DesignKind::Linear],
        DesignSetArg::Nonlinear => vec![DesignKind::Nonlinear],
        DesignSetArg::Both => vec![DesignKind::Linear, DesignKind::Nonlinear],
    };
    let cfg = McConfig {
        designs,
        sample_sizes: a.sizes.unwrap_or_else(|| DEFAULT_SIZES.to_vec()),
        reps: a.reps,
        base_seed: a.seed,
        retention_threshold: a.retention,
        alpha: a.alpha,
        tau: a.tau,
        mb_table: CritValTable::read_csv_file(&a.critvals_mb)?,
        sb_table: CritValTable::read_csv_file(&a.critvals_sb)?,
        max_redraws_per_rep: a.max_redraws,
        threads: a.threads,
    };
    let cells = run_table(&cfg)?;
    std::fs::write(&a.out, format_table(&cells))?;
    let discards: Vec<String> = cells
        .chunks(4)
        .map(|c| format!("{} n={}: {:.3}", c[0].design, c[0].n, c[0].mean_discards_per_rep))
        .collect();
    write_out(
        out,
        &format!(
            "wrote {} cells to {}\nmean discards per replication: {}\n",
            cells.len(),
            a.out.display(),
            discards.join(", ")
        ),
    )
}

fn cmd_verify_lln(a: LlnArgs, out: &mut dyn Write) -> Result<()> {
    let report = verify_lln(a.design.into(), a.n, a.seed)?;
    let ok = |b: bool| if b { "ok" } else { "FAIL" };
    let text = format!(
        "{}\n  |mean - mu| <= 0.1          {}\n  regime means within 0.15    {}\n  second moments definite     {}\n",
        report.describe(),
        ok((report.mean_xi - MU_XI).abs() <= 0.1),
        ok((report.mean_xi_plus - MU_XI).abs() <= 0.15 && (report.mean_xi_minus - MU_XI).abs() <= 0.15),
        ok(report.min_eig_plus > 0.0 && report.min_eig_minus > 0.0),
    );
    write_out(out, &text)
}
