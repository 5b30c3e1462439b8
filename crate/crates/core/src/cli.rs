use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use gpdrift::covmat::{build_covariance, make_grid, write_matrix_csv, GridMode};
use gpdrift::estimator::{estimate, EstimateRecord};
use gpdrift::experiments::{verify_all, ExperimentConfig, ExperimentKind, ExperimentReport, CSV_HEADER};
use gpdrift::fmt::fmt_g17;
use gpdrift::sampler::{sample_path, SeedSpec};
use gpdrift::{Error, Family, KernelSpec};

pub const EXIT_OK: u8 = 0;
pub const EXIT_INVALID: u8 = 2;
pub const EXIT_NOT_PD: u8 = 3;
pub const EXIT_VERIFY: u8 = 4;

const SEED_ENV: &str = "GPDRIFT_SEED";
/// Keys accepted in config files besides the experiment keys.
const EXTRA_KEYS: [&str; 3] = ["s", "t", "data"];

#[derive(Parser, Debug)]
#[command(
    name = "gpdrift",
    version,
    about = "Drift and volatility MLE for Gaussian processes, with verification experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate R(s, t)
    EvalKernel(Args),
    /// Build and factor the covariance matrix
    BuildCov(Args),
    /// Draw one path X = μt + σG
    Sample(Args),
    /// Estimate μ and σ² from observations
    Estimate(Args),
    Consistency(Args),
    Clt(Args),
    BerryEsseen(Args),
    Moments(Args),
    PdAudit(Args),
    /// Run every experiment with the shipped configs
    VerifyAll(Args),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(clap::Args, Debug, Default)]
struct Args {
    /// JSON config (flat keys named after the flags) or a previous report
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    kernel: Option<Family>,
    #[arg(long = "H")]
    h: Option<f64>,
    #[arg(long = "K")]
    k: Option<f64>,
    /// Sample size, or a comma-separated list for experiments
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<usize>>,
    #[arg(long)]
    mode: Option<GridMode>,
    /// Power exponent or geometric ratio
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    scale: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    mu: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    z_probe: Option<Vec<f64>>,
    #[arg(long)]
    se_multiplier: Option<f64>,
    #[arg(long)]
    draws: Option<usize>,
    #[arg(long)]
    points: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    s: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    t: Option<f64>,
    /// Observations: comma-separated values or a single-column CSV file
    #[arg(long, allow_negative_numbers = true)]
    data: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Worker threads (default: available parallelism)
    #[arg(long)]
    threads: Option<usize>,
}

/// Fully resolved settings: the experiment config plus the extra keys.
struct Resolved {
    map: Map<String, Value>,
    cfg: ExperimentConfig,
    /// `n` came from a flag or the config file.
    n_explicit: bool,
}

impl Resolved {
    fn echo(&self) -> Value {
        Value::Object(self.map.clone())
    }

    fn f64_key(&self, key: &str) -> Result<f64> {
        self.map.get(key).and_then(Value::as_f64).ok_or_else(|| Error::InvalidConfig(format!("missing --{key}")).into())
    }

    fn single_n(&self) -> Result<usize> {
        match self.cfg.n_list.as_slice() {
            [n] => Ok(*n),
            other => Err(Error::InvalidConfig(format!("expected a single --n, got {other:?}")).into()),
        }
    }

    fn kernel(&self) -> Result<KernelSpec> {
        Ok(self.cfg.kernel_spec()?)
    }
}

pub fn run(cli: Cli) -> Result<u8> {
    let (cmd, args) = match &cli.command {
        Command::EvalKernel(a) => ("eval-kernel", a),
        Command::BuildCov(a) => ("build-cov", a),
        Command::Sample(a) => ("sample", a),
        Command::Estimate(a) => ("estimate", a),
        Command::Consistency(a) => ("consistency", a),
        Command::Clt(a) => ("clt", a),
        Command::BerryEsseen(a) => ("berry-esseen", a),
        Command::Moments(a) => ("moments", a),
        Command::PdAudit(a) => ("pd-audit", a),
        Command::VerifyAll(a) => ("verify-all", a),
    };
    if let Some(threads) = args.threads {
        if threads == 0 {
            bail!(Error::InvalidConfig("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new().num_threads(threads).build_global().context("configuring the thread pool")?;
    }
    let kind = cmd.parse::<ExperimentKind>().ok();
    let base = kind.map(ExperimentKind::default_config).unwrap_or_default();
    let mut resolved = resolve(base, args)?;
    let default_format = if matches!(cmd, "estimate" | "eval-kernel") { Format::Json } else { Format::Csv };
    let format = args.format.unwrap_or(default_format);

    let mut buf = Vec::new();
    let code = match (cmd, kind) {
        (_, Some(kind)) => {
            let mut report = kind.run(&resolved.cfg)?;
            report.config = resolved.echo();
            write_reports(&mut buf, format, &report.config, std::slice::from_ref(&report), false)?;
            if report.passed {
                EXIT_OK
            } else {
                EXIT_VERIFY
            }
        }
        ("verify-all", None) => {
            let seed = resolved.cfg.master_seed;
            let reports = verify_all(seed)?;
            let echo = json!({ "seed": seed });
            write_reports(&mut buf, format, &echo, &reports, true)?;
            if reports.iter().all(|r| r.passed) {
                EXIT_OK
            } else {
                EXIT_VERIFY
            }
        }
        ("eval-kernel", None) => eval_kernel(&mut buf, format, &resolved)?,
        ("build-cov", None) => build_cov(&mut buf, format, &resolved)?,
        ("sample", None) => sample(&mut buf, format, &resolved)?,
        ("estimate", None) => estimate_cmd(&mut buf, format, &mut resolved)?,
        _ => unreachable!("every subcommand is dispatched"),
    };
    emit(args.out.as_deref(), &buf)?;
    Ok(code)
}

/// Shipped defaults, then `GPDRIFT_SEED`, then the config file, then flags.
fn resolve(base: ExperimentConfig, args: &Args) -> Result<Resolved> {
    let Value::Object(mut map) = base.to_json() else { unreachable!("config is an object") };
    if let Ok(seed) = std::env::var(SEED_ENV) {
        let seed: u64 = seed
            .trim()
            .parse()
            .map_err(|_| Error::InvalidConfig(format!("{SEED_ENV} must be an unsigned integer, got '{seed}'")))?;
        map.insert("seed".into(), json!(seed));
    }
    let mut n_explicit = args.n.is_some();
    if let Some(path) = &args.config {
        let file = load_config(path)?;
        n_explicit |= file.contains_key("n");
        for (k, v) in file {
            if !map.contains_key(&k) && !EXTRA_KEYS.contains(&k.as_str()) {
                bail!(Error::InvalidConfig(format!("unknown config key '{k}' in {}", path.display())));
            }
            map.insert(k, v);
        }
    }
    let mut set = |k: &str, v: Option<Value>| {
        if let Some(v) = v {
            map.insert(k.to_string(), v);
        }
    };
    set("kernel", args.kernel.map(|f| json!(f)));
    set("H", args.h.map(|x| json!(x)));
    set("K", args.k.map(|x| json!(x)));
    set("n", args.n.as_ref().map(|x| json!(x)));
    set("mode", args.mode.map(|x| json!(x)));
    set("alpha", args.alpha.map(|x| json!(x)));
    set("scale", args.scale.map(|x| json!(x)));
    set("mu", args.mu.map(|x| json!(x)));
    set("sigma", args.sigma.map(|x| json!(x)));
    set("reps", args.reps.map(|x| json!(x)));
    set("seed", args.seed.map(|x| json!(x)));
    set("z_probe", args.z_probe.as_ref().map(|x| json!(x)));
    set("se_multiplier", args.se_multiplier.map(|x| json!(x)));
    set("draws", args.draws.map(|x| json!(x)));
    set("points", args.points.map(|x| json!(x)));
    set("s", args.s.map(|x| json!(x)));
    set("t", args.t.map(|x| json!(x)));
    if let Some(d) = &args.data {
        set("data", Some(json!(parse_data(d)?)));
    }
    let cfg: ExperimentConfig =
        serde_json::from_value(Value::Object(map.clone())).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    Ok(Resolved { map, cfg, n_explicit })
}

/// Reads a flat JSON config, a JSON report (its `config` object), or a CSV
/// report (its `# config:` line).
fn load_config(path: &Path) -> Result<Map<String, Value>> {
    let text =
        fs::read_to_string(path).map_err(|e| Error::InvalidConfig(format!("cannot read {}: {e}", path.display())))?;
    let json_text = match text.lines().next() {
        Some(first) if first.starts_with("# config:") => first.trim_start_matches("# config:").trim().to_string(),
        _ => text,
    };
    let value: Value =
        serde_json::from_str(&json_text).map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?;
    match value {
        Value::Object(mut m) => match m.remove("config") {
            Some(Value::Object(inner)) => Ok(inner),
            Some(_) => Err(Error::InvalidConfig("'config' must be an object".into()).into()),
            None => Ok(m),
        },
        _ => Err(Error::InvalidConfig(format!("{} is not a JSON object", path.display())).into()),
    }
}

/// Comma-separated numbers, or a path to a single-column file. A
/// non-numeric first line of the file is taken as a header.
fn parse_data(arg: &str) -> Result<Vec<f64>> {
    let inline: std::result::Result<Vec<f64>, _> = arg.split(',').map(|v| v.trim().parse::<f64>()).collect();
    if let Ok(v) = inline {
        return Ok(v);
    }
    let text = fs::read_to_string(arg)
        .map_err(|e| Error::InvalidConfig(format!("--data is neither numbers nor a readable file ({arg}): {e}")))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().map(str::trim).filter(|l| !l.is_empty()).enumerate() {
        match line.parse::<f64>() {
            Ok(x) => out.push(x),
            Err(_) if i == 0 => {}
            Err(_) => bail!(Error::InvalidConfig(format!("{arg}: cannot parse '{line}'"))),
        }
    }
    Ok(out)
}

fn emit(out: Option<&Path>, buf: &[u8]) -> Result<()> {
    match out {
        Some(path) => fs::write(path, buf).with_context(|| format!("writing {}", path.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(buf)?;
            stdout.flush()?;
            Ok(())
        }
    }
}

fn config_line(buf: &mut Vec<u8>, echo: &Value) -> Result<()> {
    writeln!(buf, "# config: {}", serde_json::to_string(echo)?)?;
    Ok(())
}

fn write_json(buf: &mut Vec<u8>, value: &Value) -> Result<()> {
    serde_json::to_writer_pretty(&mut *buf, value)?;
    buf.push(b'\n');
    Ok(())
}

fn write_reports(
    buf: &mut Vec<u8>,
    format: Format,
    echo: &Value,
    reports: &[ExperimentReport],
    wrap: bool,
) -> Result<()> {
    match format {
        Format::Csv => {
            config_line(buf, echo)?;
            writeln!(buf, "{CSV_HEADER}")?;
            for r in reports {
                r.write_csv_rows(&mut *buf)?;
            }
        }
        Format::Json if wrap => {
            let passed = reports.iter().all(|r| r.passed);
            write_json(buf, &json!({ "config": echo, "passed": passed, "reports": reports }))?;
        }
        Format::Json => write_json(buf, &serde_json::to_value(&reports[0])?)?,
    }
    Ok(())
}

fn with_config(mut value: Value, r: &Resolved) -> Value {
    value.as_object_mut().expect("object").insert("config".into(), r.echo());
    value
}

fn eval_kernel(buf: &mut Vec<u8>, format: Format, r: &Resolved) -> Result<u8> {
    let spec = r.kernel()?;
    let (s, t) = (r.f64_key("s")?, r.f64_key("t")?);
    let value = spec.eval(s, t)?;
    match format {
        Format::Csv => {
            config_line(buf, &r.echo())?;
            writeln!(buf, "s,t,R")?;
            writeln!(buf, "{},{},{}", fmt_g17(s), fmt_g17(t), fmt_g17(value))?;
        }
        Format::Json => write_json(buf, &with_config(json!({ "s": s, "t": t, "R": value }), r))?,
    }
    Ok(EXIT_OK)
}

fn build_cov(buf: &mut Vec<u8>, format: Format, r: &Resolved) -> Result<u8> {
    let spec = r.kernel()?;
    let grid = make_grid(r.single_n()?, r.cfg.mode, r.cfg.alpha, r.cfg.scale)?;
    let model = build_covariance(&spec, &grid)?;
    match format {
        Format::Csv => {
            config_line(buf, &r.echo())?;
            write_matrix_csv(model.v(), &mut *buf)?;
        }
        Format::Json => {
            let rows = |m: &gpdrift::DenseMatrix| m.rows().map(<[f64]>::to_vec).collect::<Vec<_>>();
            let value = json!({
                "t": grid.times(),
                "V": rows(model.v()),
                "L": rows(model.chol()),
                "min_pivot": model.min_pivot(),
                "log_det": model.log_det(),
            });
            write_json(buf, &with_config(value, r))?;
        }
    }
    Ok(EXIT_OK)
}

fn sample(buf: &mut Vec<u8>, format: Format, r: &Resolved) -> Result<u8> {
    let spec = r.kernel()?;
    let grid = make_grid(r.single_n()?, r.cfg.mode, r.cfg.alpha, r.cfg.scale)?;
    let model = build_covariance(&spec, &grid)?;
    let path = sample_path(&spec, &grid, &model, r.cfg.mu, r.cfg.sigma, SeedSpec::new(r.cfg.master_seed, 0))?;
    match format {
        Format::Csv => {
            config_line(buf, &r.echo())?;
            path.write_csv(&grid, &mut *buf)?;
        }
        Format::Json => write_json(buf, &with_config(json!({ "t": grid.times(), "G": path.g, "X": path.x }), r))?,
    }
    Ok(EXIT_OK)
}

fn estimate_cmd(buf: &mut Vec<u8>, format: Format, r: &mut Resolved) -> Result<u8> {
    let data: Vec<f64> = match r.map.get("data") {
        Some(v) => serde_json::from_value(v.clone()).map_err(|e| Error::InvalidConfig(format!("data: {e}")))?,
        None => bail!(Error::InvalidConfig("estimate needs --data".into())),
    };
    let n = if r.n_explicit {
        r.single_n()?
    } else {
        r.map.insert("n".into(), json!([data.len()]));
        data.len()
    };
    if n != data.len() {
        bail!(Error::DimensionMismatch { expected: n, found: data.len() });
    }
    let spec = r.kernel()?;
    let grid = make_grid(n, r.cfg.mode, r.cfg.alpha, r.cfg.scale)?;
    let model = build_covariance(&spec, &grid)?;
    let est = estimate(&model, &grid, &data)?;
    let record = EstimateRecord::new(&est, None);
    match format {
        Format::Csv => {
            config_line(buf, &r.echo())?;
            writeln!(buf, "mu_hat,sigma2_hat,n,ttt")?;
            writeln!(buf, "{},{},{},{}", fmt_g17(est.mu_hat), fmt_g17(est.sigma2_hat), est.n, fmt_g17(est.ttt))?;
        }
        Format::Json => write_json(buf, &with_config(serde_json::to_value(record)?, r))?,
    }
    Ok(EXIT_OK)
}

/// Exit code for an error escaping [`run`].
pub fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::NotPositiveDefinite { .. }) => EXIT_NOT_PD,
        _ => EXIT_INVALID,
    }
}

pub fn parse_args() -> std::result::Result<Cli, clap::Error> {
    Cli::try_parse()
}
