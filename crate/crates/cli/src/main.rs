use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_rational::BigRational;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use solenoid_core::config::{parse_exact, ExperimentConfig};
use solenoid_core::group::AffineReal;
use solenoid_core::harmonic::{check_harmonicity, poisson_transform, worked_example_table, BoundaryObservable};
use solenoid_core::measure::{parse_ratio, StepMeasure};
use solenoid_core::padic::TruncatedPAdic;
use solenoid_core::seed::{derive_seed, par_map, Stream};
use solenoid_core::solenoid::{project, sample_nu_tilde};
use solenoid_core::verify::{default_b_grid, verify_all, VerifySizes};
use solenoid_core::walk::{draw_boundary_batch, run_walk, BoundaryConfig};
use solenoid_core::Error;

#[derive(Parser)]
#[command(name = "solenoid", version, about = "Boundary sampling and harmonic checks for random walks on BS(1,p)")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact drifts at p and at infinity.
    Drift(Common),
    /// Drifts of a rational affine measure and the places where it contracts.
    Spectrum(Common),
    /// One trajectory of the right random walk.
    Walk(Common),
    /// Independent draws of the boundary limit in Q_p.
    SampleBoundary(Common),
    /// Projection of (g, x) onto the fundamental domain.
    Project(PointArgs),
    /// Draws from the invariant measure on the fundamental domain.
    NuTilde(Common),
    /// Monte Carlo Poisson transform at g.
    Estimate(PointArgs),
    /// Mean-value check at g with common random numbers.
    VerifyHarmonic(PointArgs),
    /// Worked-example estimates with their two-sided bounds.
    ExampleTable(Common),
    /// Every invariant suite.
    VerifyAll(VerifyArgs),
}

#[derive(Args, Clone)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    digits: Option<i64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Worker threads; 0 uses every core. Never changes any output.
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Confirmation window for digit certification.
    #[arg(long)]
    window: Option<usize>,
    /// Extra margin required of the exponent sum; negative disables it.
    #[arg(long, allow_hyphen_values = true)]
    slack: Option<i64>,
    #[arg(long)]
    max_steps: Option<usize>,
}

#[derive(Args, Clone)]
struct PointArgs {
    #[command(flatten)]
    common: Common,
    /// Translation part of g, an exact rational or decimal.
    #[arg(long, allow_hyphen_values = true)]
    b: Option<String>,
    /// Dilation exponent of g.
    #[arg(long, allow_hyphen_values = true)]
    m: Option<i64>,
    /// Boundary point for `project`, exact in Z[1/p].
    #[arg(long, allow_hyphen_values = true)]
    x: Option<String>,
    /// `worked`, `constant:<c>` or `cylinder:<low>:<d,d,...>:<lo>:<hi>`.
    #[arg(long)]
    observable: Option<String>,
}

#[derive(Args, Clone)]
struct VerifyArgs {
    #[command(flatten)]
    common: Common,
    /// Smaller sample sizes throughout.
    #[arg(long)]
    quick: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

enum Failure {
    Config(String),
    Numerical(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::EmptyWindow { .. }
            | Error::InsufficientPrecision { .. }
            | Error::MaxStepsExceeded { .. }
            | Error::InvalidPoint(_) => Failure::Numerical(e.to_string()),
            _ => Failure::Config(e.to_string()),
        }
    }
}

type Outcome = Result<bool, Failure>;

struct Ctx {
    cfg: ExperimentConfig,
    config_hash: String,
    seed: u64,
    common: Common,
}

impl Ctx {
    fn load(common: &Common) -> Result<Self, Failure> {
        let text = fs::read_to_string(&common.config)
            .map_err(|e| Failure::Config(format!("cannot read {}: {e}", common.config.display())))?;
        let cfg = ExperimentConfig::parse(&text)?;
        let seed = common
            .seed
            .or(cfg.seed)
            .ok_or_else(|| Failure::Config("no seed: pass --seed or add a `seed` line".into()))?;
        Ok(Ctx {
            config_hash: hex(&Sha256::digest(text.as_bytes())),
            cfg,
            seed,
            common: common.clone(),
        })
    }

    fn measure(&self) -> Result<StepMeasure, Failure> {
        Ok(self.cfg.measure()?)
    }

    fn n(&self, default: usize) -> Result<usize, Failure> {
        Ok(self.common.n.or(self.cfg.param_parsed("n")?).unwrap_or(default))
    }

    fn boundary(&self) -> Result<BoundaryConfig, Failure> {
        let mut b = BoundaryConfig::default();
        if let Some(d) = self.common.digits.or(self.cfg.param_parsed("digits")?) {
            b.digits = d;
        }
        if let Some(w) = self.common.window.or(self.cfg.param_parsed("window")?) {
            b.window = w;
        }
        if let Some(s) = self.common.slack.or(self.cfg.param_parsed("slack")?) {
            b.slack = (s >= 0).then_some(s);
        }
        if let Some(m) = self.common.max_steps.or(self.cfg.param_parsed("max_steps")?) {
            b.max_steps = m;
        }
        Ok(b)
    }

    fn format(&self, default: Format) -> Format {
        self.common.format.unwrap_or(default)
    }

    fn workers(&self) -> usize {
        self.common.workers
    }

    /// Writes the artifact, plus a manifest next to it when `--out` is set.
    fn emit(&self, command: &str, body: &str, params: Value) -> Result<(), Failure> {
        let write_err = |p: &Path, e: std::io::Error| Failure::Config(format!("cannot write {}: {e}", p.display()));
        match &self.common.out {
            None => {
                std::io::stdout()
                    .write_all(body.as_bytes())
                    .map_err(|e| write_err(Path::new("<stdout>"), e))?;
            }
            Some(path) => {
                fs::write(path, body).map_err(|e| write_err(path, e))?;
                let manifest = json!({
                    "tool": "solenoid",
                    "version": env!("CARGO_PKG_VERSION"),
                    "command": command,
                    "config": self.common.config.display().to_string(),
                    "config_sha256": self.config_hash,
                    "seed": self.seed,
                    "parameters": params,
                    "output_sha256": hex(&Sha256::digest(body.as_bytes())),
                });
                let mpath = manifest_path(path);
                let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
                fs::write(&mpath, text).map_err(|e| write_err(&mpath, e))?;
            }
        }
        Ok(())
    }
}

fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(|s| s.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    out.with_file_name(name)
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// 17 significant digits.
fn float(x: f64) -> String {
    format!("{x:.16e}")
}

fn json_text(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("json serializes") + "\n"
}

fn csv_text(header: &[&str], rows: Vec<Vec<String>>) -> Result<String, Failure> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let fail = |e: csv::Error| Failure::Numerical(format!("csv: {e}"));
    w.write_record(header).map_err(fail)?;
    for r in rows {
        w.write_record(&r).map_err(fail)?;
    }
    let bytes = w.into_inner().map_err(|e| Failure::Numerical(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn table(format: Format, header: &[&str], rows: Vec<Vec<String>>) -> Result<String, Failure> {
    match format {
        Format::Csv => csv_text(header, rows),
        Format::Json => {
            let objs: Vec<Value> = rows
                .into_iter()
                .map(|r| {
                    Value::Object(header.iter().map(|h| h.to_string()).zip(r.into_iter().map(Value::String)).collect())
                })
                .collect();
            Ok(json_text(&Value::Array(objs)))
        }
    }
}

fn report(format: Format, v: &Value) -> Result<String, Failure> {
    match format {
        Format::Json => Ok(json_text(v)),
        Format::Csv => Err(Failure::Config("this command only writes json".into())),
    }
}

fn drift(ctx: &Ctx) -> Outcome {
    let mu = ctx.measure()?;
    let r = mu.report();
    let v = json!({
        "prime": r.prime,
        "regime": r.regime,
        "generates_both_directions": r.generates_both_directions,
        "drifts": [r.drift_p, r.drift_inf],
    });
    ctx.emit("drift", &report(ctx.format(Format::Json), &v)?, json!({}))?;
    Ok(true)
}

fn spectrum(ctx: &Ctx) -> Outcome {
    let s = ctx.cfg.rational_measure()?.boundary_spectrum();
    ctx.emit("spectrum", &report(ctx.format(Format::Json), &s.to_json())?, json!({}))?;
    Ok(true)
}

fn walk(ctx: &Ctx) -> Outcome {
    let mu = ctx.measure()?;
    let n = ctx.n(100)?;
    let w = run_walk(&mu, n, ctx.seed)?;
    let rows = (0..=n)
        .map(|k| {
            let (m, b) = match k {
                0 => (String::new(), String::new()),
                _ => (w.steps[k - 1].m().to_string(), w.steps[k - 1].b().to_string()),
            };
            vec![k.to_string(), m, b, w.partials[k].m().to_string(), w.partials[k].b().to_string()]
        })
        .collect();
    let body = table(ctx.format(Format::Csv), &["k", "step_m", "step_b", "r_m", "r_b"], rows)?;
    ctx.emit("walk", &body, json!({ "n": n }))?;
    Ok(true)
}

fn sample_boundary(ctx: &Ctx) -> Outcome {
    let mu = ctx.measure()?;
    let n = ctx.n(1000)?;
    let cfg = ctx.boundary()?;
    let samples = draw_boundary_batch(&mu, &cfg, n, ctx.seed, ctx.workers())?;
    let rows = samples
        .iter()
        .map(|s| {
            vec![
                s.seed.to_string(),
                s.steps_used.to_string(),
                s.value.valuation().map_or("inf".into(), |v| v.to_string()),
                s.value.digit_string(),
                s.certified_digits.to_string(),
            ]
        })
        .collect();
    let body = table(
        ctx.format(Format::Csv),
        &["seed", "steps_used", "v", "digits", "certified_digits"],
        rows,
    )?;
    ctx.emit("sample-boundary", &body, json!({ "n": n, "boundary": cfg }))?;
    Ok(true)
}

fn point_g(ctx: &Ctx, args: &PointArgs) -> Result<AffineReal, Failure> {
    let b = match args.b.as_deref().or(ctx.cfg.param("b")) {
        Some(s) => parse_ratio(s)?,
        None => BigRational::from_integer(0.into()),
    };
    let m = match args.m {
        Some(m) => m,
        None => ctx.cfg.param_parsed("m")?.unwrap_or(0),
    };
    Ok(AffineReal::from_ratio(ctx.cfg.prime, b, m))
}

fn observable(ctx: &Ctx, args: &PointArgs) -> Result<BoundaryObservable, Failure> {
    let spec = args.observable.as_deref().or(ctx.cfg.param("observable")).unwrap_or("worked");
    let bad = || Failure::Config(format!("cannot parse observable `{spec}`"));
    let parts: Vec<&str> = spec.split(':').collect();
    match parts.as_slice() {
        ["worked"] => Ok(BoundaryObservable::WorkedExample),
        ["constant", c] => Ok(BoundaryObservable::Constant(c.parse().map_err(|_| bad())?)),
        ["cylinder", low, digits, lo, hi] => {
            let pattern = digits
                .split(',')
                .map(|d| d.parse::<u32>().map_err(|_| bad()))
                .collect::<Result<Vec<_>, _>>()?;
            if pattern.iter().any(|&d| d >= ctx.cfg.prime.get()) {
                return Err(bad());
            }
            Ok(BoundaryObservable::cylinder(
                low.parse().map_err(|_| bad())?,
                pattern,
                lo.parse().map_err(|_| bad())?,
                hi.parse().map_err(|_| bad())?,
            )?)
        }
        _ => Err(bad()),
    }
}

fn project_cmd(ctx: &Ctx, args: &PointArgs) -> Outcome {
    let g = point_g(ctx, args)?;
    let x = args
        .x
        .as_deref()
        .or(ctx.cfg.param("x"))
        .ok_or_else(|| Failure::Config("project needs --x".into()))?;
    let x = parse_exact(ctx.cfg.prime, x)?;
    let digits = ctx.common.digits.unwrap_or(16);
    let r = project(&g, &TruncatedPAdic::reduce(&x, digits))?;
    let v = json!({ "g": g.to_json(), "g_b_exact": g.b_exact().to_string(), "x": x.to_string(), "result": r.to_json() });
    ctx.emit("project", &report(ctx.format(Format::Json), &v)?, json!({ "digits": digits }))?;
    Ok(true)
}

fn nu_tilde(ctx: &Ctx) -> Outcome {
    let mu = ctx.measure()?;
    let n = ctx.n(1000)?;
    let cfg = ctx.boundary()?;
    let points = par_map(n, ctx.workers(), |i| {
        sample_nu_tilde(&mu, &cfg, derive_seed(ctx.seed, Stream::Boundary, i as u64))
    });
    let mut rows = Vec::with_capacity(n);
    for (i, s) in points.into_iter().enumerate() {
        let s = s?;
        rows.push(vec![i.to_string(), float(s.x_inf()), s.x_inf_exact().to_string(), s.x_p().to_string()]);
    }
    let body = table(ctx.format(Format::Csv), &["index", "x_inf", "x_inf_exact", "x_p"], rows)?;
    ctx.emit("nu-tilde", &body, json!({ "n": n, "boundary": cfg }))?;
    Ok(true)
}

fn estimate(ctx: &Ctx, args: &PointArgs) -> Outcome {
    let mu = ctx.measure()?;
    let g = point_g(ctx, args)?;
    let phi = observable(ctx, args)?;
    let n = ctx.n(100_000)?;
    let cfg = ctx.boundary()?;
    let est = poisson_transform(&phi, &g, &mu, n, ctx.seed, &cfg, ctx.workers())?;
    let v = json!({ "g": g.to_json(), "g_b_exact": g.b_exact().to_string(), "estimate": est });
    ctx.emit("estimate", &report(ctx.format(Format::Json), &v)?, json!({ "n": n, "boundary": cfg }))?;
    Ok(true)
}

fn verify_harmonic(ctx: &Ctx, args: &PointArgs) -> Outcome {
    let mu = ctx.measure()?;
    let g = point_g(ctx, args)?;
    let phi = observable(ctx, args)?;
    let n = ctx.n(100_000)?;
    let cfg = ctx.boundary()?;
    let rep = check_harmonicity(&phi, &g, &mu, n, ctx.seed, &cfg, ctx.workers())?;
    let v = json!({ "g": g.to_json(), "g_b_exact": g.b_exact().to_string(), "report": rep });
    ctx.emit("verify-harmonic", &report(ctx.format(Format::Json), &v)?, json!({ "n": n, "boundary": cfg }))?;
    Ok(rep.pass)
}

fn example_table(ctx: &Ctx) -> Outcome {
    let mu = ctx.measure()?;
    let n = ctx.n(100_000)?;
    let cfg = ctx.boundary()?;
    let grid = match ctx.cfg.param("b_grid") {
        Some(s) => s.split_whitespace().map(parse_ratio).collect::<Result<Vec<_>, _>>()?,
        None => default_b_grid(ctx.cfg.prime),
    };
    let (lo, hi) = match ctx.cfg.param("m_range") {
        Some(s) => {
            let v: Vec<i64> = s
                .split_whitespace()
                .map(|t| t.parse().map_err(|_| Failure::Config(format!("bad m_range `{s}`"))))
                .collect::<Result<_, _>>()?;
            match v.as_slice() {
                [a, b] if a <= b => (*a, *b),
                _ => return Err(Failure::Config(format!("bad m_range `{s}`"))),
            }
        }
        None => (1, 8),
    };
    let rows = worked_example_table(&mu, &grid, lo..=hi, n, ctx.seed, &cfg, ctx.workers())?;
    let pass = rows.iter().all(|r| r.pass);
    let body = table(
        ctx.format(Format::Csv),
        &["b", "m", "estimate", "stderr", "lower_bound", "upper_bound", "pass"],
        rows.iter()
            .map(|r| {
                vec![
                    float(r.b),
                    r.m.to_string(),
                    float(r.estimate),
                    float(r.stderr),
                    float(r.lower_bound),
                    float(r.upper_bound),
                    r.pass.to_string(),
                ]
            })
            .collect(),
    )?;
    let grid_text: Vec<String> = grid.iter().map(|b| b.to_string()).collect();
    ctx.emit(
        "example-table",
        &body,
        json!({ "n": n, "boundary": cfg, "b_grid": grid_text, "m_range": [lo, hi] }),
    )?;
    Ok(pass)
}

fn verify_all_cmd(ctx: &Ctx, quick: bool) -> Outcome {
    let mu = ctx.measure()?;
    let mut sizes = if quick { VerifySizes::quick() } else { VerifySizes::full() };
    if let Some(n) = ctx.common.n {
        sizes.harmonic = n;
        sizes.table = n;
    }
    let rep = verify_all(&mu, &sizes, ctx.seed, ctx.workers())?;
    ctx.emit("verify-all", &rep.to_json_string(), json!({ "sizes": sizes }))?;
    Ok(rep.pass)
}

fn run(cli: Cli) -> Outcome {
    match &cli.command {
        Command::Drift(c) => drift(&Ctx::load(c)?),
        Command::Spectrum(c) => spectrum(&Ctx::load(c)?),
        Command::Walk(c) => walk(&Ctx::load(c)?),
        Command::SampleBoundary(c) => sample_boundary(&Ctx::load(c)?),
        Command::Project(a) => project_cmd(&Ctx::load(&a.common)?, a),
        Command::NuTilde(c) => nu_tilde(&Ctx::load(c)?),
        Command::Estimate(a) => estimate(&Ctx::load(&a.common)?, a),
        Command::VerifyHarmonic(a) => verify_harmonic(&Ctx::load(&a.common)?, a),
        Command::ExampleTable(c) => example_table(&Ctx::load(c)?),
        Command::VerifyAll(a) => verify_all_cmd(&Ctx::load(&a.common)?, a.quick),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("statistical check failed");
            ExitCode::from(1)
        }
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
