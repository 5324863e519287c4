//! Command-line front end. Exit codes: 0 success, 2 input or parse error,
//! 3 computational failure.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::anm::{infer_direction, InferenceConfig, SignConvention};
use crate::data::{self, load_cep_corpus, Problem};
use crate::eval::{self, noise_sweep, run_benchmark, Method, NoiseTarget, SweepReport};
use crate::seed::Context;
use crate::synth::{self, AnmSpec};
use crate::{Error, PairedSample};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_COMPUTE: i32 = 3;

pub const META_FILE: &str = "pairmeta.txt";

#[derive(Debug, Parser)]
#[command(
    name = "causapair",
    version,
    about = "Cause-effect inference with additive noise models and HSIC sensitivity maps"
)]
pub struct Cli {
    /// Base seed; every random stream is derived from it.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Machine-readable JSON on stdout.
    #[arg(long, global = true, conflicts_with = "csv")]
    pub json: bool,
    /// CSV on stdout.
    #[arg(long, global = true)]
    pub csv: bool,
    /// Suppress notices on stderr.
    #[arg(long, short, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Infer the causal direction of one pair file (two columns).
    Infer(InferArgs),
    /// Benchmark a corpus over a sample-size sweep.
    Bench(BenchArgs),
    /// Emit synthetic pair files with a metadata file.
    Synth(SynthArgs),
    /// Benchmark a corpus over an SNR sweep.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Convention {
    Equation,
    Table,
}

impl From<Convention> for SignConvention {
    fn from(c: Convention) -> Self {
        match c {
            Convention::Equation => SignConvention::Equation,
            Convention::Table => SignConvention::Table,
        }
    }
}

#[derive(Debug, Args)]
pub struct InferArgs {
    /// Whitespace-separated pair file, or a two-column `.csv`.
    pub pair_file: PathBuf,
    /// Subsample to at most this many rows.
    #[arg(long)]
    pub nmax: Option<usize>,
    /// Sign convention for the reported C and C_s.
    #[arg(long, value_enum, default_value_t = Convention::Equation)]
    pub convention: Convention,
}

#[derive(Debug, Args)]
pub struct CorpusArgs {
    /// Directory holding `pairKKKK.txt` files.
    pub dir: PathBuf,
    /// Metadata file (six fields per line).
    pub meta_file: PathBuf,
    /// Repetitions per sweep value.
    #[arg(long, default_value_t = eval::DEFAULT_REPETITIONS)]
    pub reps: usize,
    /// Directory for curves.json, curves.csv and summary.csv.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    /// Comma-separated sample-size caps.
    #[arg(long, value_delimiter = ',', default_values_t = eval::DEFAULT_NMAX_SWEEP)]
    pub nmax_list: Vec<usize>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    /// Comma-separated SNR levels in dB.
    #[arg(long, value_delimiter = ',', default_values_t = eval::DEFAULT_SNR_SWEEP, allow_negative_numbers = true)]
    pub snr_list: Vec<f64>,
    /// Subsample every problem to at most this many rows.
    #[arg(long)]
    pub nmax: Option<usize>,
    /// Which variables receive noise.
    #[arg(long, value_enum, default_value_t = Target::Both)]
    pub noise_target: Target,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Target {
    Both,
    Effect,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    Uniform,
    Xor,
    Anm,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, value_enum)]
    pub kind: Kind,
    /// Samples per pair.
    #[arg(long, default_value_t = 300)]
    pub n: usize,
    /// Rotation angle for `--kind xor`, in [0, π/4].
    #[arg(long)]
    pub theta: Option<f64>,
    /// Number of pairs to write.
    #[arg(long, default_value_t = 1)]
    pub count: usize,
    /// Created if missing; receives `pairKKKK.txt` and `pairmeta.txt`.
    #[arg(long)]
    pub out_dir: PathBuf,
}

struct Failure {
    code: i32,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = if e.is_input_error() {
            EXIT_INPUT
        } else {
            EXIT_COMPUTE
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn input_failure(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_INPUT,
        message: message.into(),
    }
}

/// Loading failures are input errors whatever their cause.
fn load<T>(r: crate::Result<T>) -> Result<T, Failure> {
    r.map_err(|e| input_failure(e.to_string()))
}

/// Parse `args` and run; returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            if code == 0 {
                let _ = write!(out, "{text}");
            } else {
                let _ = write!(err, "{text}");
            }
            return code;
        }
    };
    let result = match &cli.command {
        Command::Infer(a) => cmd_infer(&cli, a, out),
        Command::Bench(a) => cmd_bench(&cli, a, out, err),
        Command::Synth(a) => cmd_synth(&cli, a, out),
        Command::Sweep(a) => cmd_sweep(&cli, a, out, err),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn load_pair(path: &Path) -> Result<PairedSample, Failure> {
    if path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"))
    {
        return load(data::load_csv_pair(path));
    }
    let mut columns = load(data::load_cep_pair(path))?;
    if columns.len() != 2 {
        return Err(input_failure(format!(
            "{}: expected exactly two columns, found {}",
            path.display(),
            columns.len()
        )));
    }
    let y = columns.pop().expect("two columns");
    let x = columns.pop().expect("two columns");
    load(PairedSample::new(x, y))
}

fn cmd_infer(cli: &Cli, a: &InferArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let pair = load_pair(&a.pair_file)?;
    let cfg = InferenceConfig {
        n_max: a.nmax,
        seed: cli.seed,
        sign_convention: a.convention.into(),
        ..Default::default()
    };
    if let Err(e) = cfg.validate() {
        return Err(input_failure(e.to_string()));
    }
    let v = infer_direction(&pair, &cfg)?;
    let text = if cli.json {
        let doc = serde_json::json!({
            "file": a.pair_file.display().to_string(),
            "verdict": v,
        });
        format!(
            "{}\n",
            serde_json::to_string_pretty(&doc).expect("verdict serializes")
        )
    } else if cli.csv {
        format!(
            "hsic_f,hsic_b,c,s_f_x,s_f_r,s_b_y,s_b_r,c_s,dir_c,dir_cs,n\n{},{},{},{},{},{},{},{},{},{},{}\n",
            v.hsic_f, v.hsic_b, v.c, v.s_f_x, v.s_f_r, v.s_b_y, v.s_b_r, v.c_s, v.dir_c, v.dir_cs, v.n
        )
    } else {
        format!(
            "pair      {}\n\
             samples   {}\n\
             hsic_f    {:.6e}\n\
             hsic_b    {:.6e}\n\
             C         {:.6e}   ({} convention)\n\
             s_f^x     {:.6e}\n\
             s_f^r     {:.6e}\n\
             s_b^y     {:.6e}\n\
             s_b^r     {:.6e}\n\
             C_s       {:.6e}\n\
             verdict C    {}\n\
             verdict C_s  {}\n",
            a.pair_file.display(),
            v.n,
            v.hsic_f,
            v.hsic_b,
            v.c,
            match v.convention {
                SignConvention::Equation => "equation",
                SignConvention::Table => "table",
            },
            v.s_f_x,
            v.s_f_r,
            v.s_b_y,
            v.s_b_r,
            v.c_s,
            v.dir_c,
            v.dir_cs
        )
    };
    out.write_all(text.as_bytes())
        .map_err(|e| input_failure(e.to_string()))
}

fn load_corpus(cli: &Cli, a: &CorpusArgs, err: &mut dyn Write) -> Result<Vec<Problem>, Failure> {
    let (problems, listing) = load(load_cep_corpus(&a.dir, &a.meta_file))?;
    if !cli.quiet && !listing.skipped.is_empty() {
        let ids: Vec<String> = listing.skipped.iter().map(u32::to_string).collect();
        let _ = writeln!(err, "note: skipped multivariate pairs {}", ids.join(", "));
    }
    if problems.is_empty() {
        return Err(input_failure("metadata lists no scalar pairs"));
    }
    Ok(problems)
}

fn emit_report(
    cli: &Cli,
    report: &SweepReport,
    out_dir: Option<&Path>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<(), Failure> {
    let write_err = |e: std::io::Error| input_failure(e.to_string());
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir).map_err(write_err)?;
        fs::write(dir.join("curves.json"), report.to_json() + "\n").map_err(write_err)?;
        let f = fs::File::create(dir.join("curves.csv")).map_err(write_err)?;
        report.write_curves_csv(f)?;
        let f = fs::File::create(dir.join("summary.csv")).map_err(write_err)?;
        report.write_summary_csv(f)?;
    }
    if !cli.quiet {
        for f in &report.failures {
            let _ = writeln!(
                err,
                "excluded {} (rep {}): {}",
                f.problem_id, f.repetition, f.message
            );
        }
    }
    if cli.json {
        writeln!(out, "{}", report.to_json()).map_err(write_err)?;
    } else if cli.csv {
        report.write_summary_csv(out)?;
    } else {
        let axis = match report.kind {
            eval::SweepKind::Benchmark => "n_max",
            eval::SweepKind::NoiseSweep => "snr_db",
        };
        writeln!(
            out,
            "{:<8}{:>10}{:>14}{:>14}{:>10}",
            "method", axis, "mean_auc_roc", "mean_auc_pr", "excluded"
        )
        .map_err(write_err)?;
        for method in Method::ALL {
            for s in report.summary_for(method) {
                let value = match report.kind {
                    eval::SweepKind::Benchmark => {
                        s.n_max.map_or_else(|| "-".into(), |v| v.to_string())
                    }
                    eval::SweepKind::NoiseSweep => {
                        s.snr_db.map_or_else(|| "-".into(), |v| v.to_string())
                    }
                };
                writeln!(
                    out,
                    "{:<8}{:>10}{:>14.4}{:>14.4}{:>10}",
                    method.name(),
                    value,
                    s.mean_auc_roc,
                    s.mean_auc_pr,
                    s.excluded
                )
                .map_err(write_err)?;
            }
        }
    }
    Ok(())
}

fn cmd_bench(
    cli: &Cli,
    a: &BenchArgs,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<(), Failure> {
    if a.nmax_list.is_empty() || a.corpus.reps == 0 {
        return Err(input_failure(
            "--nmax-list and --reps must be non-empty and positive",
        ));
    }
    if let Some(bad) = a.nmax_list.iter().find(|&&m| m < crate::anm::MIN_SAMPLES) {
        return Err(input_failure(format!(
            "n_max must be at least {}, got {bad}",
            crate::anm::MIN_SAMPLES
        )));
    }
    let problems = load_corpus(cli, &a.corpus, err)?;
    let cfg = InferenceConfig {
        seed: cli.seed,
        ..Default::default()
    };
    let report =
        run_benchmark(&problems, &cfg, &a.nmax_list, a.corpus.reps).map_err(compute_failure)?;
    emit_report(cli, &report, a.corpus.out.as_deref(), out, err)
}

fn cmd_sweep(
    cli: &Cli,
    a: &SweepArgs,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<(), Failure> {
    if a.snr_list.is_empty() || a.corpus.reps == 0 {
        return Err(input_failure(
            "--snr-list and --reps must be non-empty and positive",
        ));
    }
    let problems = load_corpus(cli, &a.corpus, err)?;
    let cfg = InferenceConfig {
        seed: cli.seed,
        n_max: a.nmax,
        ..Default::default()
    };
    if let Err(e) = cfg.validate() {
        return Err(input_failure(e.to_string()));
    }
    let target = match a.noise_target {
        Target::Both => NoiseTarget::Both,
        Target::Effect => NoiseTarget::Effect,
    };
    let report = noise_sweep(&problems, &cfg, &a.snr_list, a.corpus.reps, target)
        .map_err(compute_failure)?;
    emit_report(cli, &report, a.corpus.out.as_deref(), out, err)
}

/// Benchmark preconditions that fail on valid files are computational.
fn compute_failure(e: Error) -> Failure {
    let message = match &e {
        Error::SingleClass { .. } => {
            format!("{e}; the corpus needs pairs of both causal directions")
        }
        _ => e.to_string(),
    };
    Failure {
        code: EXIT_COMPUTE,
        message,
    }
}

fn cmd_synth(cli: &Cli, a: &SynthArgs, out: &mut dyn Write) -> Result<(), Failure> {
    if a.count == 0 {
        return Err(input_failure("--count must be positive"));
    }
    if a.theta.is_some() && a.kind != Kind::Xor {
        return Err(input_failure("--theta only applies to --kind xor"));
    }
    let item_seed = |k: usize| {
        Context::new("synth")
            .with_str(&format!("{:?}", a.kind))
            .with_u64(k as u64)
            .derive(cli.seed)
    };
    let build = || -> crate::Result<Vec<Problem>> {
        match a.kind {
            Kind::Anm => synth::gen_anm_corpus(
                &AnmSpec {
                    n: a.n,
                    ..Default::default()
                },
                a.count,
                cli.seed,
            ),
            // no ground truth: written as column 1 → column 2
            Kind::Uniform | Kind::Xor => (0..a.count)
                .map(|k| {
                    let pair = match a.kind {
                        Kind::Uniform => synth::gen_independent_uniform(a.n, item_seed(k))?,
                        _ => synth::gen_rotated_xor(a.n, a.theta.unwrap_or(0.0), item_seed(k))?,
                    };
                    Problem::new(
                        format!("{:?}-{k}", a.kind).to_lowercase(),
                        pair,
                        crate::Direction::Forward,
                        1.0,
                    )
                })
                .collect(),
        }
    };
    let problems = build().map_err(|e| input_failure(e.to_string()))?;
    let meta = data::write_corpus(&a.out_dir, &problems, META_FILE)
        .map_err(|e| input_failure(e.to_string()))?;
    if !cli.quiet {
        writeln!(
            out,
            "wrote {} pair files and {}",
            problems.len(),
            meta.display()
        )
        .map_err(|e| input_failure(e.to_string()))?;
    }
    Ok(())
}
