//! Command-line front end.
//!
//! Exit codes: 0 success, 1 configuration or flag error, 2 statistically
//! degenerate data, 3 I/O failure.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::experiment::{
    emit_report, run_experiment, summary, ExperimentConfig, OrderMode, DEFAULT_MAX_ORDER,
    DEFAULT_REPLICATIONS, REFERENCE_SAMPLES, REFERENCE_SNR_DB, REFERENCE_SPACING,
};
use crate::formats::{
    bicoherence_csv, histogram_csv, parse_sequence, parse_table, read_file, sequence_csv,
    write_file, TableFile,
};
use crate::gaussianity::{assess, assess_record, TestConfig, DEFAULT_BINS, DEFAULT_FFT_LEN};
use crate::ortho_poly::{
    build_basis, projection_operator, select_order, transform, OrderCriterion, SampleGrid,
};
use crate::sequence::Sequence;
use crate::signal_noise::{synth_signal, Component, NoiseFamily, SignalSpec, DEFAULT_GAMMA_SHAPE};

#[derive(Debug, Parser)]
#[command(
    name = "polygauss",
    version,
    about = "Orthogonal polynomial projection filtering and Gaussianity testing"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample a damped-exponential transient to a sequence CSV.
    GenSignal(GenSignalArgs),
    /// Project a sequence onto low-order orthogonal polynomials.
    Transform(TransformArgs),
    /// Run the bicoherence, kurtosis, and histogram tests on a sequence or ensemble.
    Test(TestArgs),
    /// Monte Carlo study of the projection error across noise families.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
pub struct GenSignalArgs {
    /// Number of samples.
    #[arg(long)]
    pub n: usize,
    /// Sample spacing.
    #[arg(long)]
    pub dt: f64,
    #[arg(long)]
    pub out: PathBuf,
    /// Use the reference three-mode transient.
    #[arg(long, alias = "reference", conflicts_with = "component")]
    pub paper_signal: bool,
    /// Component `amplitude,damping,frequency,phase`; repeatable.
    #[arg(long = "component", value_name = "B,SIGMA,OMEGA,PHI", allow_hyphen_values = true)]
    pub component: Vec<String>,
}

#[derive(Debug, Args)]
pub struct TransformArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Approximation order `J`, or `auto` for penalized minimum-risk selection.
    #[arg(long)]
    pub order: String,
    /// Noise variance; required with `--order auto`.
    #[arg(long)]
    pub sigma2: Option<f64>,
    /// Largest order considered by `auto` (default min(N, 32)).
    #[arg(long)]
    pub max_order: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TestArgs {
    /// Sequence CSV (segmented into frames) or ensemble CSV (one frame per record).
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, default_value_t = DEFAULT_FFT_LEN)]
    pub fft_len: usize,
    #[arg(long, default_value_t = DEFAULT_BINS)]
    pub bins: usize,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Worker thread hint; results do not depend on it.
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Reference setup: 60 samples, spacing 0.15, 10 dB, all four families.
    #[arg(long, alias = "reference", conflicts_with_all = ["n", "dt", "snr_db", "noise", "component"])]
    pub paper: bool,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub snr_db: Option<f64>,
    /// Comma-separated families: gaussian, laplacian, uniform, gamma.
    #[arg(long, value_delimiter = ',')]
    pub noise: Vec<String>,
    #[arg(long = "component", value_name = "B,SIGMA,OMEGA,PHI", allow_hyphen_values = true)]
    pub component: Vec<String>,
    #[arg(long, default_value_t = DEFAULT_GAMMA_SHAPE)]
    pub gamma_shape: f64,
    #[arg(long, default_value_t = DEFAULT_REPLICATIONS)]
    pub reps: usize,
    /// Master seed; required.
    #[arg(long)]
    pub seed: Option<u64>,
    /// `oracle`, `penalized`, or a fixed order.
    #[arg(long, default_value = "oracle")]
    pub order: String,
    #[arg(long)]
    pub max_order: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_FFT_LEN)]
    pub fft_len: usize,
    #[arg(long, default_value_t = DEFAULT_BINS)]
    pub bins: usize,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Worker thread hint; results do not depend on it.
    #[arg(long)]
    pub threads: Option<usize>,
}

/// Parse arguments, run, and return the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match execute(cli.command, &mut out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = out.flush();
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cmd: Command, out: &mut dyn Write) -> Result<()> {
    match cmd {
        Command::GenSignal(a) => cmd_gen_signal(&a, out),
        Command::Transform(a) => cmd_transform(&a, out),
        Command::Test(a) => cmd_test(&a, out),
        Command::Simulate(a) => cmd_simulate(&a, out),
    }
}

fn say(out: &mut dyn Write, text: std::fmt::Arguments<'_>) -> Result<()> {
    out.write_fmt(text)
        .map_err(|e| Error::io("<stdout>", e))
}

fn parse_component(text: &str) -> Result<Component> {
    let parts: Vec<f64> = text
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::Config(format!("bad component '{text}'")))?;
    match parts.as_slice() {
        &[b, s, w, p] => Ok(Component::new(b, s, w, p)),
        _ => Err(Error::Config(format!(
            "component '{text}' needs amplitude,damping,frequency,phase"
        ))),
    }
}

fn signal_from_flags(reference: bool, components: &[String]) -> Result<SignalSpec> {
    if reference {
        return Ok(SignalSpec::reference());
    }
    let parsed = components
        .iter()
        .map(|c| parse_component(c))
        .collect::<Result<Vec<_>>>()?;
    SignalSpec::new(parsed)
}

pub fn cmd_gen_signal(a: &GenSignalArgs, out: &mut dyn Write) -> Result<()> {
    let grid = SampleGrid::uniform(a.n, a.dt).map_err(|e| Error::Config(e.to_string()))?;
    let spec = signal_from_flags(a.paper_signal, &a.component)?;
    let g = synth_signal(&spec, &grid);
    write_file(&a.out, &sequence_csv(Some(grid.points()), &g))?;
    say(out, format_args!("wrote {} samples to {}\n", a.n, a.out.display()))
}

fn read_grid_sequence(path: &Path) -> Result<(SampleGrid, Sequence)> {
    let file = parse_sequence(&read_file(path)?)?;
    let grid = SampleGrid::from_points(file.times)?;
    let x = Sequence::new(file.values)?;
    Ok((grid, x))
}

pub fn cmd_transform(a: &TransformArgs, out: &mut dyn Write) -> Result<()> {
    let (grid, x) = read_grid_sequence(&a.input)?;
    let n = grid.len();
    let order = if a.order.trim().eq_ignore_ascii_case("auto") {
        let sigma2 = a
            .sigma2
            .ok_or_else(|| Error::Config("--order auto requires --sigma2".into()))?;
        let max = a.max_order.unwrap_or(DEFAULT_MAX_ORDER).min(n);
        let sel = select_order(
            &grid,
            OrderCriterion::Penalized {
                observed: &x,
                noise_var: sigma2,
            },
            1..=max,
        )?;
        say(out, format_args!("chosen J = {}\nJ,risk\n", sel.order))?;
        for (j, r) in &sel.risk_curve {
            say(out, format_args!("{j},{r:?}\n"))?;
        }
        sel.order
    } else {
        let j: usize = a
            .order
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("--order must be a positive integer or 'auto', got '{}'", a.order)))?;
        if j < 1 || j > n {
            return Err(Error::OrderOutOfRange { order: j, max: n });
        }
        j
    };
    let op = projection_operator(&build_basis(&grid, order)?);
    let y = transform(&op, &x)?;
    write_file(&a.out, &sequence_csv(Some(grid.points()), &y))
}

fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    match threads {
        Some(0) => Err(Error::Config("--threads must be positive".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(f),
        None => f(),
    }
}

pub fn cmd_test(a: &TestArgs, out: &mut dyn Write) -> Result<()> {
    let table = parse_table(&read_file(&a.input)?)?;
    let cfg = TestConfig {
        fft_len: a.fft_len,
        bins: a.bins,
        hist_range: None,
    };
    let (report, grid) = with_threads(a.threads, || match &table {
        TableFile::Sequence(s) => assess_record(&s.values, &cfg),
        TableFile::Ensemble(e) => assess(e, &cfg),
    })?;
    let hinich = report.hinich.ok_or(Error::InsufficientFrames {
        got: report.frames,
        min: crate::gaussianity::MIN_FRAMES,
    })?;

    std::fs::create_dir_all(&a.out_dir).map_err(|e| Error::io(&a.out_dir, e))?;
    let mut json = serde_json::to_string_pretty(&report)
        .map_err(|e| Error::Config(format!("report serialization: {e}")))?;
    json.push('\n');
    write_file(&a.out_dir.join("report.json"), &json)?;
    write_file(&a.out_dir.join("histogram.csv"), &histogram_csv(&report.histogram))?;
    write_file(&a.out_dir.join("bicoherence.csv"), &bicoherence_csv(grid.as_ref()))?;

    say(
        out,
        format_args!(
            "S = {:.6}\ndof = {}\nPFA = {:.6}\nK_u = {:.6}\n",
            hinich.statistic, hinich.dof, hinich.pfa, report.avg_kurtosis
        ),
    )?;
    for note in &report.notes {
        say(out, format_args!("note: {note}\n"))?;
    }
    Ok(())
}

fn simulate_config(a: &SimulateArgs) -> Result<ExperimentConfig> {
    let seed = a
        .seed
        .ok_or_else(|| Error::Config("simulate requires --seed".into()))?;
    let mut cfg = ExperimentConfig::reference(seed);
    if !a.paper {
        cfg.samples = a.n.unwrap_or(REFERENCE_SAMPLES);
        cfg.spacing = a.dt.unwrap_or(REFERENCE_SPACING);
        cfg.snr_db = a.snr_db.unwrap_or(REFERENCE_SNR_DB);
        if !a.component.is_empty() {
            cfg.signal = signal_from_flags(false, &a.component)?;
        }
        if !a.noise.is_empty() {
            cfg.families = a
                .noise
                .iter()
                .map(|s| s.parse::<NoiseFamily>())
                .collect::<Result<_>>()?;
        }
    }
    cfg.gamma_shape = a.gamma_shape;
    cfg.replications = a.reps;
    cfg.fft_len = a.fft_len;
    cfg.bins = a.bins;
    cfg.threads = a.threads;
    let max = a.max_order.unwrap_or(DEFAULT_MAX_ORDER).min(cfg.samples);
    cfg.order = match a.order.trim().to_ascii_lowercase().as_str() {
        "oracle" => OrderMode::Oracle { min: 1, max },
        "penalized" => OrderMode::Penalized { min: 1, max },
        other => OrderMode::Fixed {
            order: other.parse().map_err(|_| {
                Error::Config(format!("--order must be oracle, penalized, or an integer, got '{other}'"))
            })?,
        },
    };
    Ok(cfg)
}

pub fn cmd_simulate(a: &SimulateArgs, out: &mut dyn Write) -> Result<()> {
    let cfg = simulate_config(a)?;
    let result = run_experiment(&cfg)?;
    emit_report(&result, &a.out_dir)?;

    let fmt_opt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |v| format!("{v:.4}"));
    say(
        out,
        format_args!(
            "{:<10} {:>3} {:>10} {:>10} {:>10} {:>10}\n",
            "family", "J", "PFA_in", "K_in", "PFA_out", "K_out"
        ),
    )?;
    for rec in summary(&result) {
        say(
            out,
            format_args!(
                "{:<10} {:>3} {:>10} {:>10.4} {:>10} {:>10.4}\n",
                rec.family.name(),
                rec.order,
                fmt_opt(rec.pfa_input),
                rec.kurt_input,
                fmt_opt(rec.pfa_output),
                rec.kurt_output
            ),
        )?;
        for note in &rec.notes {
            say(out, format_args!("  note: {note}\n"))?;
        }
    }
    Ok(())
}
