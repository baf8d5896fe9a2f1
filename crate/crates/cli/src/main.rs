//! `rankpick`: choose the rank of a truncated SVD or NMF by
//! bi-cross-validation, with BIC and Eastment–Krzanowski baselines, a
//! simulation harness and closed-form theory values.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rankpick::baselines::{bic_curve, ek_curve, BicVariant};
use rankpick::bcv_svd::{bcv_svd_curve, bcv_svd_curve_rotated, ResidualMode};
use rankpick::io::read_matrix_file;
use rankpick::nmf::{bcv_nmf_curve, fit_nmf, NmfOptions, NmfResidualMode};
use rankpick::parse::{format_ranks, parse_folds, parse_rank_range};
use rankpick::simulation::{preset, run_suite, ExperimentConfig};
use rankpick::theory::theory_report;
use rankpick::{BcvCurve, Error, HoldoutPlan, Matrix64, Rng};
use serde_json::{json, Map, Value};

#[derive(Parser)]
#[command(name = "rankpick", version, about = "Rank selection by bi-cross-validation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// BCV curve for the truncated SVD.
    BcvSvd(BcvSvdArgs),
    /// BCV curve for nonnegative matrix factorization.
    BcvNmf(BcvNmfArgs),
    /// BIC-style criteria.
    Bic(BicArgs),
    /// Generalized Eastment–Krzanowski cross-validation.
    Ek(EkArgs),
    /// Simulation experiments from a preset or a JSON config.
    Simulate(SimulateArgs),
    /// Closed-form random-matrix predictions.
    Theory(TheoryArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Tsv,
}

#[derive(Args)]
struct Common {
    /// Base seed for plans, rotations and NMF starts.
    #[arg(long, env = "RANKPICK_SEED")]
    seed: Option<u64>,
    /// Worker threads (results do not depend on this).
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Write output here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct Input {
    /// Matrix file: `.mtx` for Matrix Market, CSV otherwise.
    #[arg(long = "in", value_name = "PATH")]
    input: PathBuf,
    /// Skip the first CSV row.
    #[arg(long)]
    header: bool,
    /// Candidate ranks `a..b` (inclusive); defaults to `0..min(20, largest fittable)`.
    #[arg(long)]
    ranks: Option<String>,
}

#[derive(Args)]
struct PlanArgs {
    /// Row and column fold counts as `HxL`.
    #[arg(long, default_value = "3x3")]
    folds: String,
    /// Replay a saved plan JSON instead of drawing one.
    #[arg(long, conflicts_with = "folds")]
    plan: Option<PathBuf>,
    /// Save the plan used as JSON.
    #[arg(long)]
    save_plan: Option<PathBuf>,
}

#[derive(Args)]
struct BcvSvdArgs {
    #[command(flatten)]
    input: Input,
    #[command(flatten)]
    plan: PlanArgs,
    /// Residual type: `I` or `II`.
    #[arg(long, default_value = "I")]
    mode: String,
    /// Apply random orthogonal rotations to both sides first.
    #[arg(long)]
    rotate: bool,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct NmfArgs {
    #[arg(long, default_value_t = 1)]
    restarts: usize,
    #[arg(long, default_value_t = 1e-4)]
    tol: f64,
    #[arg(long, default_value_t = 200)]
    max_iter: usize,
}

#[derive(Args)]
struct BcvNmfArgs {
    #[command(flatten)]
    input: Input,
    #[command(flatten)]
    plan: PlanArgs,
    /// Residual type: `simple` or `conforming`.
    #[arg(long, default_value = "conforming")]
    mode: String,
    #[command(flatten)]
    nmf: NmfArgs,
    /// Fit the full matrix at the selected rank and write factors here.
    #[arg(long, value_name = "DIR")]
    factors: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct BicArgs {
    #[command(flatten)]
    input: Input,
    /// `bic1`, `bic2`, `bic3` or `all`.
    #[arg(long, default_value = "all")]
    variant: String,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct EkArgs {
    #[command(flatten)]
    input: Input,
    #[command(flatten)]
    plan: PlanArgs,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct SimulateArgs {
    /// `table2-desk` or `table2-full`.
    #[arg(long, required_unless_present = "config", conflicts_with = "config")]
    preset: Option<String>,
    /// Experiment config JSON (one object or an array).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Replications per setting; overrides the config.
    #[arg(long)]
    reps: Option<usize>,
    /// Keep one signal per setting and redraw only the noise.
    #[arg(long)]
    fixed_mu: bool,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct TheoryArgs {
    #[arg(long)]
    m: usize,
    #[arg(long)]
    n: usize,
    /// Held-out rows.
    #[arg(long)]
    r: usize,
    /// Held-out columns.
    #[arg(long)]
    s: usize,
    /// Weak-factor strength δ.
    #[arg(long)]
    delta: Option<f64>,
    /// Fraction of the retained block's spike estimate that is signal.
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }
}

fn usage(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

fn exit_code(e: &Error) -> u8 {
    if e.is_numerical() {
        1
    } else {
        2
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Error> {
    let mut text = text.to_string();
    if !text.ends_with('\n') {
        text.push('\n');
    }
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Error::Io(format!("{}: {}", p.display(), e))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
            Ok(())
        }
    }
}

fn load(input: &Input) -> Result<Matrix64, Error> {
    read_matrix_file(&input.input, input.header).map_err(|e| match e {
        Error::Io(msg) => Error::Io(format!("{}: {}", input.input.display(), msg)),
        other => other,
    })
}

fn ranks_for(input: &Input, max_rank: usize) -> Result<Vec<usize>, Error> {
    match &input.ranks {
        Some(s) => parse_rank_range(s),
        None => Ok((0..=max_rank.min(20)).collect()),
    }
}

fn make_plan(args: &PlanArgs, x: &Matrix64, seed: u64) -> Result<HoldoutPlan, Error> {
    let plan = match &args.plan {
        Some(p) => {
            let plan = HoldoutPlan::from_json(&fs::read_to_string(p).map_err(|e| Error::Io(format!("{}: {}", p.display(), e)))?)?;
            plan.check_dims(x.rows(), x.cols())?;
            plan
        }
        None => {
            let (h, l) = parse_folds(&args.folds)?;
            HoldoutPlan::new(x.rows(), x.cols(), h, l, seed)?
        }
    };
    if let Some(p) = &args.save_plan {
        fs::write(p, plan.to_json()).map_err(|e| Error::Io(format!("{}: {}", p.display(), e)))?;
    }
    Ok(plan)
}

fn render_curves(curves: &[BcvCurve], format: Format) -> String {
    match format {
        Format::Json if curves.len() == 1 => curves[0].to_json(),
        Format::Json => {
            serde_json::to_string_pretty(&Value::Array(curves.iter().map(BcvCurve::to_json_value).collect())).expect("json")
        }
        Format::Tsv if curves.len() == 1 => curves[0].to_tsv(),
        Format::Tsv => {
            let mut out = String::from("rank");
            for c in curves {
                out += &format!("\t{}", c.metadata.method);
            }
            out.push('\n');
            for (i, k) in curves[0].ranks.iter().enumerate() {
                out += &k.to_string();
                for c in curves {
                    out += &format!("\t{}", c.scores[i]);
                }
                out.push('\n');
            }
            out
        }
    }
}

fn echo(curve: &mut BcvCurve, flags: &[(&str, Value)]) {
    for (k, v) in flags {
        curve.metadata.params.insert((*k).into(), v.clone());
    }
}

fn run_bcv_svd(a: &BcvSvdArgs) -> Result<String, Error> {
    let mode: ResidualMode = a.mode.parse()?;
    let x = load(&a.input)?;
    let plan = make_plan(&a.plan, &x, a.common.seed())?;
    let ranks = ranks_for(&a.input, plan.max_fit_rank())?;
    let mut curve = if a.rotate {
        bcv_svd_curve_rotated(&x, &plan, &ranks, mode, &mut Rng::new(a.common.seed()).child("rotation"))?
    } else {
        bcv_svd_curve(&x, &plan, &ranks, mode)?
    };
    echo(
        &mut curve,
        &[
            ("seed", json!(a.common.seed())),
            ("folds", json!(format!("{}x{}", plan.h(), plan.l()))),
            ("ranks", json!(format_ranks(&ranks))),
        ],
    );
    Ok(render_curves(&[curve], a.common.format))
}

fn run_bcv_nmf(a: &BcvNmfArgs) -> Result<String, Error> {
    let mode: NmfResidualMode = a.mode.parse()?;
    let x = load(&a.input)?;
    let plan = make_plan(&a.plan, &x, a.common.seed())?;
    let ranks = ranks_for(&a.input, plan.max_fit_rank())?;
    let opts = NmfOptions {
        max_outer_iterations: a.nmf.max_iter,
        relative_tolerance: a.nmf.tol,
        restarts: a.nmf.restarts,
        seed: a.common.seed(),
    };
    opts.validate()?;
    let mut curve = bcv_nmf_curve(&x, &plan, &ranks, mode, &opts)?;
    echo(
        &mut curve,
        &[
            ("seed", json!(a.common.seed())),
            ("folds", json!(format!("{}x{}", plan.h(), plan.l()))),
            ("ranks", json!(format_ranks(&ranks))),
        ],
    );
    if let Some(dir) = &a.factors {
        fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {}", dir.display(), e)))?;
        let k = curve.selected_rank;
        let full = NmfOptions { restarts: a.nmf.restarts.max(NmfOptions::standalone().restarts), ..opts };
        let factors = fit_nmf(&x, k, &full)?;
        factors.write_files(dir, &format!("nmf_k{}", k))?;
        log::info!("wrote rank-{} factors to {}", k, dir.display());
    }
    Ok(render_curves(&[curve], a.common.format))
}

fn run_bic(a: &BicArgs) -> Result<String, Error> {
    let variants: Vec<BicVariant> = match a.variant.as_str() {
        "all" => BicVariant::ALL.to_vec(),
        v => vec![v.parse()?],
    };
    let x = load(&a.input)?;
    let ranks = ranks_for(&a.input, x.rows().min(x.cols()))?;
    let mut curves = variants.iter().map(|&v| bic_curve(&x, &ranks, v)).collect::<Result<Vec<_>, _>>()?;
    for c in &mut curves {
        echo(c, &[("ranks", json!(format_ranks(&ranks)))]);
    }
    Ok(render_curves(&curves, a.common.format))
}

fn run_ek(a: &EkArgs) -> Result<String, Error> {
    let x = load(&a.input)?;
    let plan = make_plan(&a.plan, &x, a.common.seed())?;
    let ranks = ranks_for(&a.input, plan.max_fit_rank())?;
    let mut curve = ek_curve(&x, &plan, &ranks)?;
    echo(
        &mut curve,
        &[
            ("seed", json!(a.common.seed())),
            ("folds", json!(format!("{}x{}", plan.h(), plan.l()))),
            ("ranks", json!(format_ranks(&ranks))),
        ],
    );
    Ok(render_curves(&[curve], a.common.format))
}

fn run_simulate(a: &SimulateArgs) -> Result<String, Error> {
    let reps = a.reps.unwrap_or(10);
    if reps == 0 {
        return Err(usage("--reps must be >= 1"));
    }
    let mut configs = match (&a.preset, &a.config) {
        (Some(name), _) => preset(name, reps, a.common.seed())?,
        (None, Some(path)) => {
            let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {}", path.display(), e)))?;
            let value: Value = serde_json::from_str(&text)?;
            let items = match value {
                Value::Array(items) => items,
                one => vec![one],
            };
            items
                .into_iter()
                .map(|v| ExperimentConfig::from_json(&v.to_string()))
                .collect::<Result<Vec<_>, _>>()?
        }
        (None, None) => return Err(usage("give --preset or --config")),
    };
    for c in &mut configs {
        if a.reps.is_some() {
            c.replications = reps;
        }
        if let Some(seed) = a.common.seed {
            c.seed = seed;
        }
        c.fixed_mu |= a.fixed_mu;
        c.validate()?;
    }
    let suite = run_suite(&configs)?;
    Ok(match a.common.format {
        Format::Tsv => suite.to_tsv(),
        Format::Json => {
            let mut value: Value = serde_json::from_str(&suite.to_json())?;
            let mut md = Map::new();
            if let Some(p) = &a.preset {
                md.insert("preset".into(), json!(p));
            }
            md.insert("reps".into(), json!(reps));
            md.insert("seed".into(), json!(a.common.seed()));
            md.insert("fixed_mu".into(), json!(a.fixed_mu));
            value.as_object_mut().expect("suite is an object").insert("metadata".into(), Value::Object(md));
            serde_json::to_string_pretty(&value)?
        }
    })
}

fn run_theory(a: &TheoryArgs) -> Result<String, Error> {
    let report = theory_report(a.m, a.n, a.r, a.s, a.delta, a.eta)?;
    let value = serde_json::to_value(&report)?;
    Ok(match a.format {
        Format::Json => serde_json::to_string_pretty(&value)?,
        Format::Tsv => {
            let mut out = String::from("quantity\tvalue\n");
            flatten("", &value, &mut out);
            out
        }
    })
}

fn flatten(prefix: &str, v: &Value, out: &mut String) {
    match v {
        Value::Object(map) => {
            for (k, v) in map {
                let key = if prefix.is_empty() { k.clone() } else { format!("{}.{}", prefix, k) };
                flatten(&key, v, out);
            }
        }
        Value::Array(items) => {
            for (i, v) in items.iter().enumerate() {
                flatten(&format!("{}.{}", prefix, i), v, out);
            }
        }
        other => out.push_str(&format!("{}\t{}\n", prefix, other)),
    }
}

fn configure_threads(threads: Option<usize>) -> Result<(), Error> {
    if let Some(n) = threads {
        if n == 0 {
            return Err(usage("--threads must be >= 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {}", e)))?;
    }
    Ok(())
}

fn dispatch(cli: &Cli) -> Result<(), Error> {
    let (common, run): (Option<&Common>, Box<dyn Fn() -> Result<String, Error>>) = match &cli.command {
        Command::BcvSvd(a) => (Some(&a.common), Box::new(|| run_bcv_svd(a))),
        Command::BcvNmf(a) => (Some(&a.common), Box::new(|| run_bcv_nmf(a))),
        Command::Bic(a) => (Some(&a.common), Box::new(|| run_bic(a))),
        Command::Ek(a) => (Some(&a.common), Box::new(|| run_ek(a))),
        Command::Simulate(a) => (Some(&a.common), Box::new(|| run_simulate(a))),
        Command::Theory(a) => (None, Box::new(|| run_theory(a))),
    };
    configure_threads(common.and_then(|c| c.threads))?;
    let text = run()?;
    let out = match &cli.command {
        Command::Theory(a) => a.out.as_deref(),
        _ => common.and_then(|c| c.out.as_deref()),
    };
    emit(out, &text)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .target(env_logger::Target::Stderr)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("rankpick: {}", e);
            ExitCode::from(exit_code(&e))
        }
    }
}
