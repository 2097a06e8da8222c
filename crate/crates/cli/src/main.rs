use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_bigint::BigUint;
use sha_delta_core::constant_surface::{frobenius_poly_from_json, FrobeniusSpec};
use sha_delta_core::curve::{count_sequence, CountConfig, CurveSpec, DEFAULT_BUDGET};
use sha_delta_core::numeric::DEFAULT_PRECISION_BITS;
use sha_delta_core::zeta::{zeta_from_counts, PointCounts};
use sha_delta_core::{
    bsd_value_check, family_report, milne_float_oracle, milne_invariant, weil_measure, Error, ErrorClass, Family,
    IsogenyClassData, Precision, ReportOptions, ZetaNumerator, SHIPPED_FAMILY,
};

/// Exact Sha·Δ, ranks and Brauer–Siegel ratios for constant surfaces over
/// finite fields.
#[derive(Parser)]
#[command(name = "sha-delta-lab", version)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Worker threads [default: available parallelism]
    #[arg(long, global = true, env = "SHA_DELTA_LAB_THREADS")]
    threads: Option<usize>,
    /// Largest number of field elements enumerated per count
    #[arg(long, global = true, default_value_t = DEFAULT_BUDGET)]
    budget: u64,
    /// Working precision for root finding
    #[arg(long, global = true, default_value_t = DEFAULT_PRECISION_BITS)]
    precision_bits: usize,
    /// Seed for synthetic family members
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output file [default: standard output]
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct Fiber {
    /// Elliptic fiber by trace and field size, e.g. '{"a":-2,"q":2}'
    #[arg(long, conflicts_with = "frobenius_poly", required_unless_present = "frobenius_poly")]
    frobenius: Option<String>,
    /// Frobenius polynomial, lowest coefficient first, e.g. '["2","2","1"]'
    #[arg(long)]
    frobenius_poly: Option<String>,
}

impl Fiber {
    fn load(&self) -> Result<IsogenyClassData, Failure> {
        Ok(match (&self.frobenius, &self.frobenius_poly) {
            (Some(f), _) => FrobeniusSpec::from_json(f)?,
            (None, Some(p)) => frobenius_poly_from_json(p)?,
            (None, None) => unreachable!("clap requires one"),
        })
    }
}

#[derive(Subcommand)]
enum Command {
    /// Point counts N_1..N_M of a curve as CSV
    Count {
        #[arg(long)]
        curve: PathBuf,
        #[arg(long, default_value_t = 1)]
        max_degree: u32,
    },
    /// Zeta numerator of a curve or of a counts table
    Zeta {
        #[arg(long, conflicts_with = "counts", required_unless_present = "counts")]
        curve: Option<PathBuf>,
        /// Counts CSV with at least g rows
        #[arg(long, requires_all = ["q", "genus"])]
        counts: Option<PathBuf>,
        #[arg(long)]
        q: Option<u64>,
        #[arg(long)]
        genus: Option<usize>,
    },
    /// Rank and Sha·Δ of the constant surface
    Milne {
        #[arg(long)]
        zeta: PathBuf,
        #[command(flatten)]
        fiber: Fiber,
        /// Also run the floating point evaluation and compare
        #[arg(long)]
        oracle: bool,
    },
    /// Brauer–Siegel ratio report for a family
    Ratio {
        /// Family JSON [default: the shipped Artin–Schreier family over F_2]
        #[arg(long)]
        family: Option<PathBuf>,
        #[command(flatten)]
        fiber: Fiber,
        #[arg(long, default_value_t = 12)]
        max_m: usize,
        /// Estimate β from the largest-genus member only
        #[arg(long)]
        pooled: bool,
        /// JSON sidecar with exact values [default: <out>.json when --out is set]
        #[arg(long)]
        sidecar: Option<PathBuf>,
    },
    /// Histogram of eigenvalue angles
    Measure {
        #[arg(long)]
        zeta: PathBuf,
        #[arg(long, default_value_t = 16)]
        bins: usize,
    },
}

enum Failure {
    Core(Error),
    Io(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Core(e) => match e.class() {
                ErrorClass::Validation => 2,
                ErrorClass::Resource => 3,
                ErrorClass::Internal => 4,
            },
            Failure::Io(_) => 2,
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Core(e) => e.to_string(),
            Failure::Io(m) => m.clone(),
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn write_to(path: &Path, content: &str) -> Result<(), Failure> {
    fs::write(path, content).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn emit(out: Option<&Path>, content: &str) -> Result<(), Failure> {
    match out {
        Some(path) => write_to(path, content),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(content.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| Failure::Io(format!("stdout: {e}")))
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let common = &cli.common;
    let threads = match common.threads {
        Some(0) => return Err(Error::InvalidInput("--threads must be positive".into()).into()),
        Some(t) => t,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Failure::Io(format!("thread pool: {e}")))?;
    let config = CountConfig { budget: common.budget, threads };
    let prec = Precision::new(common.precision_bits)?;
    let out = common.out.as_deref();

    match &cli.command {
        Command::Count { curve, max_degree } => {
            let model = CurveSpec::from_json(&read(curve)?)?;
            let needed = BigUint::from(model.q()).pow(*max_degree);
            if needed > BigUint::from(config.budget) {
                return Err(Error::BudgetExceeded { needed: needed.to_string(), budget: config.budget }.into());
            }
            let counts = count_sequence(&model, *max_degree, &config)?;
            emit(out, &PointCounts::from_u64(model.q(), &counts).to_csv())
        }
        Command::Zeta { curve, counts, q, genus } => {
            let zeta = match (curve, counts) {
                (Some(curve), _) => {
                    let model = CurveSpec::from_json(&read(curve)?)?;
                    let g = model.genus() as usize;
                    let n = count_sequence(&model, g as u32, &config)?;
                    let n: Vec<_> = n.into_iter().map(Into::into).collect();
                    zeta_from_counts(model.q(), g, &n)?
                }
                (None, Some(path)) => {
                    let (q, g) = (q.expect("clap"), genus.expect("clap"));
                    let table = PointCounts::from_csv(q, &read(path)?)?;
                    if table.len() < g {
                        return Err(Error::InvalidInput(format!("genus {g} needs {g} counts, got {}", table.len())).into());
                    }
                    zeta_from_counts(q, g, &table.counts[..g])?
                }
                (None, None) => unreachable!("clap requires one"),
            };
            emit(out, &(zeta.to_json() + "\n"))
        }
        Command::Milne { zeta, fiber, oracle } => {
            let p = ZetaNumerator::from_json(&read(zeta)?)?;
            let h = fiber.load()?;
            let result = milne_invariant(&p, &h)?;
            if h.dimension() == 1 {
                let (lhs, rhs) = bsd_value_check(&p, &h)?;
                if lhs != rhs {
                    return Err(Error::Invariant(format!("special value {lhs} differs from q^(1-g)·Sha·Δ/N_1² = {rhs}")).into());
                }
            }
            if *oracle {
                let o = milne_float_oracle(&p, &h, &prec)?;
                let exact = sha_delta_core::brauer_siegel::ln_rational(&result.sha_delta).exp();
                if o.rank != result.rank || (o.value - exact).abs() > 1e-9 * exact {
                    return Err(Error::Invariant(format!(
                        "oracle gives rank {} and {} against exact rank {} and {}",
                        o.rank, o.value, result.rank, result.sha_delta
                    ))
                    .into());
                }
            }
            emit(out, &(result.to_json() + "\n"))
        }
        Command::Ratio { family, fiber, max_m, pooled, sidecar } => {
            let h = fiber.load()?;
            let fam = match family {
                Some(path) => Family::load(path, common.seed)?,
                None => Family::from_json_seeded(SHIPPED_FAMILY, Path::new("."), common.seed)?,
            };
            let label = family
                .as_ref()
                .and_then(|p| p.file_stem())
                .map_or("shipped".to_string(), |s| s.to_string_lossy().into_owned());
            let members = fam.normalize(&config)?;
            let opts = ReportOptions { max_m: *max_m, pooled: *pooled, threads };
            let report = family_report(&label, &members, &h, &opts)?;
            emit(out, &report.to_csv())?;
            let sidecar = sidecar.clone().or_else(|| out.map(|o| o.with_extension("json")));
            if let Some(path) = sidecar {
                write_to(&path, &report.to_json())?;
            }
            Ok(())
        }
        Command::Measure { zeta, bins } => {
            let p = ZetaNumerator::from_json(&read(zeta)?)?;
            let m = weil_measure(&p, *bins, &prec)?;
            eprintln!(
                "g={} max_multiplicity={} ratio={}",
                m.g,
                m.max_multiplicity,
                sha_delta_core::brauer_siegel::sci(m.multiplicity_ratio())
            );
            emit(out, &m.to_csv())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.exit_code())
        }
    }
}
