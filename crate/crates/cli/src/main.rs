use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use convexp::ca::{self, Embedding, EmbeddingConfig, Variant};
use convexp::checks::{run_checks, Scope};
use convexp::export::{self, PgmOptions};
use convexp::field::cfld;
use convexp::kernel::{classify, load_kernel_file, SYMMETRY_TOL};
use convexp::lift::DEFAULT_ORACLE_CAP;
use convexp::rnn::config::RunConfig;
use convexp::rnn::{gradient_norm_trace, run_observed, NetworkState, Record};
use convexp::spectral::{bipartite_exp, conv_cos, conv_exp, conv_sin};
use convexp::stencils::Stencil;
use convexp::{Error, GridShape, Kernel};

const EXIT_CHECK: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_IO: u8 = 3;
const EXIT_NUMERICAL: u8 = 4;

/// Convolutional exponentials of periodic kernels and the recurrences
/// built from them.
#[derive(Parser)]
#[command(name = "convexp", version)]
struct Cli {
    /// Worker threads for the parallel FFT passes (1 = sequential).
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a full-grid kernel from a built-in stencil or a core file.
    GenKernel {
        #[command(flatten)]
        kernel: KernelArg,
        /// Output CFLD file.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Convolutional exponential exp(tK).
    Exp {
        #[command(flatten)]
        kernel: KernelArg,
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        t: f64,
        /// Print per-axis second moments of the result.
        #[arg(long)]
        moments: bool,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Convolutional cosine and sine cos(tK), sin(tK).
    Trig {
        #[command(flatten)]
        kernel: KernelArg,
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        t: f64,
        /// Writes PREFIX.cos.cfld and PREFIX.sin.cfld.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Four-kernel block exponential of a real kernel.
    Bipartite {
        #[command(flatten)]
        kernel: KernelArg,
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        t: f64,
        /// Writes PREFIX.{xx,xp,px,pp}.cfld.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Run a recurrence described by a config file.
    Run {
        config: PathBuf,
        /// Also write the gradient-norm trace (step,gradient_norm) here.
        #[arg(long)]
        gradient: Option<PathBuf>,
        /// Largest grid for the gradient trace's dense Jacobians.
        #[arg(long, default_value_t = 256)]
        cap: usize,
    },
    /// Run the invariant catalog; one JSON line per check.
    Check {
        #[arg(default_value = "all")]
        scope: String,
        /// Largest grid (cells) for dense-oracle checks.
        #[arg(long, default_value_t = DEFAULT_ORACLE_CAP)]
        cap: usize,
        /// Human-readable lines instead of JSON.
        #[arg(long)]
        text: bool,
    },
    /// Export a field as CSV or 16-bit PGM.
    Export {
        field: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        /// Defaults to the extension of --out.
        #[arg(long, value_enum)]
        format: Option<Format>,
        /// PGM of |z| instead of the real part.
        #[arg(long)]
        abs: bool,
        /// PGM with the origin moved to the image centre.
        #[arg(long)]
        center: bool,
        /// Record index within a sequence file.
        #[arg(long, default_value_t = 0)]
        record: usize,
    },
    /// Rule 110 embedded in a convolutional recurrence, under noise.
    Ca(CaArgs),
}

#[derive(Args)]
struct KernelArg {
    /// Built-in stencil name or a kernel file (CFLD or core text).
    kernel: String,
    /// Grid shape such as 64x64 (defaults depend on the stencil).
    shape: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1.0)]
    amplitude: f64,
}

#[derive(Args)]
struct CaArgs {
    #[arg(long, default_value_t = 200)]
    length: usize,
    #[arg(long, default_value_t = 500)]
    steps: usize,
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, default_value_t = 1)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = CaVariant::Table)]
    variant: CaVariant,
    #[arg(long, default_value_t = EmbeddingConfig::DEFAULT_SIGMA)]
    sigma: f64,
    /// Space-time diagram from trial 0's initial row (one row per step).
    #[arg(long)]
    pgm: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Pgm,
}

#[derive(Clone, Copy, ValueEnum)]
enum CaVariant {
    Table,
    Sigmoid,
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = if e.is_io() {
            EXIT_IO
        } else if e.is_numerical() {
            EXIT_NUMERICAL
        } else {
            EXIT_USAGE
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure {
            code: EXIT_IO,
            message: e.to_string(),
        }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_USAGE,
        message: message.into(),
    }
}

type Outcome = Result<u8, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    convexp::set_jobs(cli.jobs);
    match dispatch(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn dispatch(cmd: Command) -> Outcome {
    match cmd {
        Command::GenKernel { kernel, out } => gen_kernel(&kernel, out.as_deref()),
        Command::Exp {
            kernel,
            t,
            moments,
            out,
        } => exp(&kernel, t, moments, out.as_deref()),
        Command::Trig { kernel, t, out } => trig(&kernel, t, out.as_deref()),
        Command::Bipartite { kernel, t, out } => bipartite(&kernel, t, out.as_deref()),
        Command::Run { config, gradient, cap } => run_config(&config, gradient.as_deref(), cap),
        Command::Check { scope, cap, text } => check(&scope, cap, text),
        Command::Export {
            field,
            out,
            format,
            abs,
            center,
            record,
        } => export_field(&field, &out, format, PgmOptions { abs, center }, record),
        Command::Ca(args) => ca_run(&args),
    }
}

fn load_kernel(arg: &KernelArg) -> Result<Kernel, Failure> {
    let shape = arg.shape.as_deref().map(|s| s.parse::<GridShape>()).transpose()?;
    let path = Path::new(&arg.kernel);
    if path.is_file() {
        return Ok(load_kernel_file(path, shape.as_ref())?);
    }
    let stencil: Stencil = arg.kernel.parse().map_err(|e: Error| {
        // stencil names never contain these, so treat the argument as a path
        if arg.kernel.contains(['.', '/', '\\']) {
            Failure {
                code: EXIT_IO,
                message: format!("cannot read kernel file {:?}", arg.kernel),
            }
        } else {
            usage(format!("{e}; {:?} is also not a readable file", arg.kernel))
        }
    })?;
    let shape = shape.unwrap_or_else(|| stencil.default_shape());
    Ok(stencil.build(&shape, arg.seed, arg.amplitude)?)
}

fn summarize(label: &str, k: &Kernel) {
    let m = k.mass();
    println!(
        "{label}: shape {} | {} | mass {:.6e}{:+.6e}i | max|k| {:.6e}",
        k.shape(),
        classify(k, SYMMETRY_TOL),
        m.re,
        m.im,
        k.max_abs()
    );
}

fn save(path: &Path, k: &Kernel) -> Result<(), Failure> {
    cfld::save(path, k.field())?;
    println!("wrote {}", path.display());
    Ok(())
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(format!(".{suffix}.cfld"));
    PathBuf::from(s)
}

fn gen_kernel(arg: &KernelArg, out: Option<&Path>) -> Outcome {
    let k = load_kernel(arg)?;
    summarize("kernel", &k);
    if let Some(out) = out {
        save(out, &k)?;
    }
    Ok(0)
}

fn exp(arg: &KernelArg, t: f64, moments: bool, out: Option<&Path>) -> Outcome {
    let k = load_kernel(arg)?;
    let e = conv_exp(&k, t)?;
    summarize("exp", &e);
    if moments {
        for (axis, m) in e.second_moments().iter().enumerate() {
            println!("moment axis {axis}: {m:.12}");
        }
    }
    if let Some(out) = out {
        save(out, &e)?;
    }
    Ok(0)
}

fn trig(arg: &KernelArg, t: f64, out: Option<&Path>) -> Outcome {
    let k = load_kernel(arg)?;
    let c = conv_cos(&k, t)?;
    let s = conv_sin(&k, t)?;
    summarize("cos", &c);
    summarize("sin", &s);
    if let Some(prefix) = out {
        save(&with_suffix(prefix, "cos"), &c)?;
        save(&with_suffix(prefix, "sin"), &s)?;
    }
    Ok(0)
}

fn bipartite(arg: &KernelArg, t: f64, out: Option<&Path>) -> Outcome {
    let k = load_kernel(arg)?;
    let b = bipartite_exp(&k, t)?;
    let blocks = [("xx", &b.xx), ("xp", &b.xp), ("px", &b.px), ("pp", &b.pp)];
    for (name, blk) in blocks {
        summarize(name, blk);
    }
    println!("max|xp + px| {:.3e}", b.xp.add(&b.px)?.max_abs());
    if let Some(prefix) = out {
        for (name, blk) in blocks {
            save(&with_suffix(prefix, name), blk)?;
        }
    }
    Ok(0)
}

fn run_config(path: &Path, gradient: Option<&Path>, cap: usize) -> Outcome {
    let cfg = RunConfig::load(path)?;
    let rec = cfg.build()?;
    let mut states = match (&cfg.states, cfg.record) {
        (Some(p), Record::Full) => Some(BufWriter::new(File::create(p)?)),
        _ => None,
    };
    let mut norms = Vec::with_capacity(cfg.steps + 1);
    let last = run_observed(&rec, cfg.steps, |s: &NetworkState| {
        norms.push(s.norm());
        if let Some(w) = states.as_mut() {
            for f in s.fields() {
                cfld::write(w, f)?;
            }
        }
        Ok(())
    })?;
    if let Some(mut w) = states {
        w.flush()?;
        println!("wrote {}", cfg.states.as_ref().unwrap().display());
    }
    let csv = export::norm_trace_csv(&norms);
    if let Some(p) = &cfg.norms {
        fs::write(p, &csv)?;
        println!("wrote {}", p.display());
    }
    let (n0, nt) = (norms[0], *norms.last().unwrap());
    println!(
        "steps {} | initial norm {n0:.15e} | final norm {nt:.15e} | ratio {:.15}",
        last.step_index(),
        nt / n0
    );
    if let Some(p) = gradient {
        let trace = gradient_norm_trace(&rec, cfg.steps, cap)?;
        let mut s = String::from("step,gradient_norm\n");
        for (i, v) in trace.iter().enumerate() {
            s.push_str(&format!("{i},{v}\n"));
        }
        fs::write(p, s)?;
        println!("wrote {}", p.display());
    }
    Ok(0)
}

fn check(scope: &str, cap: usize, text: bool) -> Outcome {
    let scope: Scope = scope.parse()?;
    let reports = run_checks(scope, cap);
    let stdout = io::stdout();
    let mut out = stdout.lock();
    for r in &reports {
        let line = if text { r.to_text() } else { r.to_json_line() };
        writeln!(out, "{line}")?;
    }
    let failed = reports.iter().filter(|r| !r.pass).count();
    eprintln!("{} checks, {} failed", reports.len(), failed);
    Ok(if failed == 0 { 0 } else { EXIT_CHECK })
}

fn export_field(path: &Path, out: &Path, format: Option<Format>, opts: PgmOptions, record: usize) -> Outcome {
    let records = cfld::load_sequence(path)?;
    let field = records.get(record).ok_or_else(|| {
        usage(format!(
            "{} has {} record(s), no index {record}",
            path.display(),
            records.len()
        ))
    })?;
    let format = match format {
        Some(f) => f,
        None => match out.extension().and_then(|e| e.to_str()) {
            Some("csv") => Format::Csv,
            Some("pgm") => Format::Pgm,
            _ => return Err(usage("cannot infer the format from --out; pass --format")),
        },
    };
    match format {
        Format::Csv => fs::write(out, export::field_to_csv(field)?)?,
        Format::Pgm => {
            let mut buf = Vec::new();
            export::write_field_pgm(&mut buf, field, opts)?;
            fs::write(out, buf)?;
        }
    }
    println!("wrote {}", out.display());
    Ok(0)
}

fn ca_run(args: &CaArgs) -> Outcome {
    let mut cfg = match args.variant {
        CaVariant::Table => EmbeddingConfig::table_map(),
        CaVariant::Sigmoid => EmbeddingConfig::sigmoid(),
    };
    cfg.sigma = args.sigma;
    let report = ca::stability_experiment(args.length, args.steps, args.noise, args.trials, &cfg, args.seed)?;
    println!("{}", report.to_json_line());
    if let Some(p) = &args.pgm {
        let emb = Embedding::new(&cfg)?;
        let row = ca::seeded_row(args.length, args.seed);
        let rows = ca::space_time(&row, args.steps, &emb, args.noise, args.seed);
        let values: Vec<f64> = rows.concat();
        let mut buf = Vec::new();
        export::write_pgm16(&mut buf, args.length, rows.len(), &values, (0.0, 1.0))?;
        fs::write(p, buf)?;
        eprintln!("wrote {}", p.display());
    }
    if cfg.variant == Variant::SigmoidProduct {
        if let Ok(e) = Embedding::new(&cfg) {
            if let Some((lo, hi)) = e.band() {
                eprintln!("pass-band ({lo}, {hi})");
            }
        }
    }
    Ok(0)
}
