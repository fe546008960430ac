//! Command-line front end: streaming LRV/LRCM estimation, Monte Carlo
//! benchmarking of the estimator family, and half-width stopping.
//!
//! Input format: univariate data is one decimal number per line;
//! multivariate data is one comma-separated row per time point. Blank lines
//! are skipped. Output records are newline-delimited JSON with fixed key
//! order and 17 significant digits.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 stream exhausted
//! before the stopping rule fired.

use std::fs::File;
use std::io::{self, BufRead, BufReader, Read, Write};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use lrv::auto::{psi_star, theta_star, AutoLaser};
use lrv::batch::BatchState;
use lrv::laser::{LaserConfig, LaserState, MeanMode};
use lrv::multivar::{pd_adjust, LrcmState, PdAdjustment};
use lrv::normal::two_sided_z;
use lrv::offline::bartlett;
use lrv::ramp::RampState;
use lrv::sim::SeriesModel;

#[derive(Parser)]
#[command(name = "lrv", version, about = "Streaming long-run variance estimation")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Stream univariate data through the estimator and emit estimates.
    Estimate(EstimateArgs),
    /// Stream vector data and emit long-run covariance matrix estimates.
    Lrcm(LrcmArgs),
    /// Monte Carlo mean-squared-error benchmark on the built-in models.
    Bench(BenchArgs),
    /// Half-width stopping rule over a univariate stream.
    Halfwidth(HalfwidthArgs),
}

#[derive(Args, Clone)]
struct EstimatorFlags {
    /// Characteristic exponent of the taper.
    #[arg(long, default_value_t = 1)]
    q: u32,
    /// Memory parameter (1, or >= 2 for constant space).
    #[arg(long, default_value_t = 1.0)]
    phi: f64,
    /// Select smoothing parameters automatically.
    #[arg(long)]
    auto: bool,
    /// Subsampling coefficient (explicit mode).
    #[arg(long = "Psi")]
    big_psi: Option<f64>,
    /// Subsampling exponent (explicit mode).
    #[arg(long = "psi")]
    small_psi: Option<f64>,
    /// Tapering coefficient (explicit mode).
    #[arg(long = "Theta")]
    big_theta: Option<f64>,
    /// Tapering exponent (explicit mode).
    #[arg(long = "theta")]
    small_theta: Option<f64>,
    /// Subsampling floor.
    #[arg(long)]
    s0: Option<u64>,
    /// Tapering floor.
    #[arg(long)]
    t0: Option<u64>,
    /// Treat the process mean as known to be zero.
    #[arg(long)]
    zero_mean: bool,
}

impl EstimatorFlags {
    fn config(&self) -> Result<LaserConfig, String> {
        let explicit = [
            self.big_psi,
            self.small_psi,
            self.big_theta,
            self.small_theta,
        ];
        let any_explicit = explicit.iter().any(Option::is_some);
        let mut cfg = if self.auto {
            if any_explicit {
                return Err("--auto conflicts with explicit --Psi/--psi/--Theta/--theta".into());
            }
            LaserConfig::auto(self.q, self.phi)
        } else {
            if explicit.iter().any(Option::is_none) {
                return Err(
                    "explicit mode needs all of --Psi, --psi, --Theta, --theta (or use --auto)"
                        .into(),
                );
            }
            LaserConfig::explicit(
                self.q,
                self.phi,
                self.big_psi.unwrap(),
                self.small_psi.unwrap(),
                self.big_theta.unwrap(),
                self.small_theta.unwrap(),
            )
        };
        if let Some(s0) = self.s0 {
            cfg.s_floor = s0;
        }
        if let Some(t0) = self.t0 {
            cfg.t_floor = t0;
        }
        if self.zero_mean {
            cfg.mean_mode = MeanMode::KnownZero;
        }
        cfg.validate().map_err(|e| e.to_string())?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct EstimateArgs {
    #[command(flatten)]
    flags: EstimatorFlags,
    /// Emit a record every `m` observations via block updates (0 = every
    /// observation).
    #[arg(long, default_value_t = 0)]
    every: u64,
    /// Input path ("-" for stdin).
    #[arg(default_value = "-")]
    input: String,
}

#[derive(Args)]
struct LrcmArgs {
    #[command(flatten)]
    flags: EstimatorFlags,
    /// Emit a record every `m` observations (0 = every observation).
    #[arg(long, default_value_t = 0)]
    every: u64,
    /// Apply the positive-definiteness adjustment to emitted matrices.
    #[arg(long)]
    pd_adjust: bool,
    /// Input path ("-" for stdin).
    #[arg(default_value = "-")]
    input: String,
}

#[derive(Args)]
struct BenchArgs {
    /// Benchmark model: I, II, III or IV.
    #[arg(long)]
    model: String,
    /// Number of Monte Carlo replicates.
    #[arg(long, default_value_t = 100)]
    reps: u64,
    /// Stream length per replicate.
    #[arg(long, default_value_t = 10_000)]
    n: usize,
    /// Base RNG seed; replicates use disjoint streams.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Nuisance ratio used for the oracle parameters (defaults to the
    /// model's closed form when available).
    #[arg(long)]
    kappa: Option<f64>,
    /// True LRV used as the MSE target (defaults to the model's closed
    /// form when available).
    #[arg(long)]
    sigma2: Option<f64>,
}

#[derive(Args)]
struct HalfwidthArgs {
    #[command(flatten)]
    flags: EstimatorFlags,
    /// Maximum tolerable half-width.
    #[arg(long)]
    eps: f64,
    /// Significance level of the interval.
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Penalty horizon: the rule cannot fire at or before this sample size.
    #[arg(long, default_value_t = 500)]
    pen: u64,
    /// Input path ("-" for stdin).
    #[arg(default_value = "-")]
    input: String,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are not usage errors.
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    let code = match cli.cmd {
        Cmd::Estimate(args) => run_estimate(args),
        Cmd::Lrcm(args) => run_lrcm(args),
        Cmd::Bench(args) => run_bench(args),
        Cmd::Halfwidth(args) => run_halfwidth(args),
    };
    match code {
        Ok(c) => c,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Data(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

enum CliError {
    Usage(String),
    Data(String),
}

fn data_err<T>(msg: impl Into<String>) -> Result<T, CliError> {
    Err(CliError::Data(msg.into()))
}

fn from_lib(e: lrv::Error) -> CliError {
    CliError::Data(e.to_string())
}

fn open_input(path: &str) -> Result<Box<dyn Read>, CliError> {
    if path == "-" {
        Ok(Box::new(io::stdin()))
    } else {
        match File::open(path) {
            Ok(f) => Ok(Box::new(f)),
            Err(e) => data_err(format!("cannot open {path}: {e}")),
        }
    }
}

/// Parse one decimal value per nonblank line, reporting the line number on
/// failure.
fn read_values(path: &str) -> Result<Vec<f64>, CliError> {
    let reader = BufReader::new(open_input(path)?);
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = match line {
            Ok(l) => l,
            Err(e) => return data_err(format!("line {}: {e}", idx + 1)),
        };
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        match trimmed.parse::<f64>() {
            Ok(v) if v.is_finite() => out.push(v),
            Ok(v) => return data_err(format!("line {}: non-finite value {v}", idx + 1)),
            Err(_) => return data_err(format!("line {}: cannot parse '{trimmed}'", idx + 1)),
        }
    }
    if out.is_empty() {
        return data_err("empty input");
    }
    Ok(out)
}

/// Parse one comma-separated row per nonblank line.
fn read_rows(path: &str) -> Result<Vec<Vec<f64>>, CliError> {
    let reader = BufReader::new(open_input(path)?);
    let mut out: Vec<Vec<f64>> = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = match line {
            Ok(l) => l,
            Err(e) => return data_err(format!("line {}: {e}", idx + 1)),
        };
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let mut row = Vec::new();
        for field in trimmed.split(',') {
            match field.trim().parse::<f64>() {
                Ok(v) if v.is_finite() => row.push(v),
                Ok(v) => return data_err(format!("line {}: non-finite value {v}", idx + 1)),
                Err(_) => {
                    return data_err(format!("line {}: cannot parse '{}'", idx + 1, field.trim()))
                }
            }
        }
        if let Some(first) = out.first() {
            if row.len() != first.len() {
                return data_err(format!(
                    "line {}: expected {} fields, got {}",
                    idx + 1,
                    first.len(),
                    row.len()
                ));
            }
        }
        out.push(row);
    }
    if out.is_empty() {
        return data_err("empty input");
    }
    Ok(out)
}

/// 17 significant digits, stable across runs.
fn sig17(v: f64) -> String {
    format!("{:.16e}", v)
}

enum Driver {
    Auto(AutoLaser),
    Buffered(LaserState),
    Ramped(RampState),
    Batched(BatchState),
}

impl Driver {
    fn new(cfg: &LaserConfig, batched: bool, x1: f64) -> Result<Self, CliError> {
        if cfg.auto {
            Ok(Driver::Auto(AutoLaser::init(cfg.clone(), x1).map_err(from_lib)?))
        } else if cfg.phi > 1.0 {
            Ok(Driver::Ramped(RampState::init(cfg.clone(), x1).map_err(from_lib)?))
        } else if batched {
            Ok(Driver::Batched(BatchState::init(cfg.clone(), x1).map_err(from_lib)?))
        } else {
            Ok(Driver::Buffered(LaserState::init(cfg.clone(), x1).map_err(from_lib)?))
        }
    }

    fn update(&mut self, x: f64) -> lrv::Result<()> {
        match self {
            Driver::Auto(st) => st.update(x),
            Driver::Buffered(st) => st.update(x),
            Driver::Ramped(st) => st.update(x),
            Driver::Batched(st) => st.update_block(&[x]),
        }
    }

    fn update_block(&mut self, xs: &[f64]) -> lrv::Result<()> {
        match self {
            Driver::Batched(st) => st.update_block(xs),
            _ => {
                for &x in xs {
                    self.update(x)?;
                }
                Ok(())
            }
        }
    }

    fn record(&self) -> (u64, f64, u64, u64, Option<f64>) {
        match self {
            Driver::Auto(st) => (
                st.n(),
                st.estimate(),
                st.current_s(),
                st.current_t(),
                Some(st.kappa_hat()),
            ),
            Driver::Buffered(st) => (st.n(), st.estimate(), st.current_s(), st.current_t(), None),
            Driver::Ramped(st) => (
                st.n(),
                st.estimate(),
                st.current_s_prime(),
                st.current_t(),
                None,
            ),
            Driver::Batched(st) => (st.n(), st.estimate(), st.current_s(), st.current_t(), None),
        }
    }

    fn mean(&self) -> f64 {
        match self {
            Driver::Auto(st) => st.mean(),
            Driver::Buffered(st) => st.mean(),
            Driver::Ramped(st) => st.mean(),
            Driver::Batched(st) => st.mean(),
        }
    }
}

fn emit_record(out: &mut impl Write, driver: &Driver) -> Result<(), CliError> {
    let (n, est, s, t, kappa) = driver.record();
    let res = match kappa {
        Some(k) => writeln!(
            out,
            "{{\"n\":{n},\"estimate\":{},\"s\":{s},\"t\":{t},\"kappa\":{}}}",
            sig17(est),
            sig17(k)
        ),
        None => writeln!(
            out,
            "{{\"n\":{n},\"estimate\":{},\"s\":{s},\"t\":{t}}}",
            sig17(est)
        ),
    };
    res.map_err(|e| CliError::Data(e.to_string()))
}

fn run_estimate(args: EstimateArgs) -> Result<ExitCode, CliError> {
    let cfg = args.flags.config().map_err(CliError::Usage)?;
    let values = read_values(&args.input)?;
    let stdout = io::stdout();
    let mut out = io::BufWriter::new(stdout.lock());
    let stride = args.every.max(1) as usize;
    let batched = args.every >= 1 && !cfg.auto && cfg.phi == 1.0;
    let mut driver = Driver::new(&cfg, batched, values[0])?;

    if args.every <= 1 {
        emit_record(&mut out, &driver)?;
        for &x in &values[1..] {
            driver.update(x).map_err(from_lib)?;
            emit_record(&mut out, &driver)?;
        }
    } else {
        let mut start = 1usize;
        while start < values.len() {
            // Checkpoints sit at multiples of the stride; the first block is
            // one short because the initial observation is consumed at init.
            let end = (((start / stride) + 1) * stride).min(values.len());
            driver.update_block(&values[start..end]).map_err(from_lib)?;
            emit_record(&mut out, &driver)?;
            start = end;
        }
    }
    out.flush().map_err(|e| CliError::Data(e.to_string()))?;
    Ok(ExitCode::SUCCESS)
}

fn run_lrcm(args: LrcmArgs) -> Result<ExitCode, CliError> {
    let cfg = args.flags.config().map_err(CliError::Usage)?;
    if cfg.phi != 1.0 {
        return Err(CliError::Usage("matrix estimation supports phi = 1 only".into()));
    }
    let rows = read_rows(&args.input)?;
    let d = rows[0].len();
    let mut state = LrcmState::init(cfg, None, &rows[0]).map_err(from_lib)?;
    let stdout = io::stdout();
    let mut out = io::BufWriter::new(stdout.lock());
    let stride = args.every.max(1);

    let emit = |state: &LrcmState, out: &mut dyn Write| -> Result<(), CliError> {
        let n = state.n();
        let mut est = state.estimate();
        let mut adjusted = false;
        if args.pd_adjust && (0..d).all(|i| est[(i, i)] > 0.0) {
            let adj = PdAdjustment::default_for(n, d);
            est = pd_adjust(&est, n, &adj).map_err(from_lib)?;
            adjusted = true;
        }
        let mut mat = String::from("[");
        for h in 0..d {
            if h > 0 {
                mat.push(',');
            }
            mat.push('[');
            for k in 0..d {
                if k > 0 {
                    mat.push(',');
                }
                mat.push_str(&sig17(est[(h, k)]));
            }
            mat.push(']');
        }
        mat.push(']');
        let kappa_field = state
            .kappa_hat()
            .map(|k| format!(",\"kappa\":{}", sig17(k)))
            .unwrap_or_default();
        let pd_field = if args.pd_adjust {
            format!(",\"pd_adjusted\":{adjusted}")
        } else {
            String::new()
        };
        writeln!(
            out,
            "{{\"n\":{n},\"estimate\":{mat},\"s\":{},\"t\":{}{kappa_field}{pd_field}}}",
            state.current_s(),
            state.current_t()
        )
        .map_err(|e| CliError::Data(e.to_string()))
    };

    if args.every == 0 || state.n() % stride == 0 {
        emit(&state, &mut out)?;
    }
    for (i, row) in rows.iter().enumerate().skip(1) {
        state.update(row).map_err(from_lib)?;
        let last = i + 1 == rows.len();
        if args.every == 0 || state.n() % stride == 0 || last {
            emit(&state, &mut out)?;
        }
    }
    out.flush().map_err(|e| CliError::Data(e.to_string()))?;
    Ok(ExitCode::SUCCESS)
}

fn run_halfwidth(args: HalfwidthArgs) -> Result<ExitCode, CliError> {
    if !(args.eps.is_finite() && args.eps > 0.0) {
        return Err(CliError::Usage("--eps must be positive".into()));
    }
    if !(args.alpha > 0.0 && args.alpha < 1.0) {
        return Err(CliError::Usage("--alpha must lie in (0, 1)".into()));
    }
    let cfg = args.flags.config().map_err(CliError::Usage)?;
    let values = read_values(&args.input)?;
    let mut driver = Driver::new(&cfg, false, values[0])?;
    let z = two_sided_z(args.alpha);
    let stdout = io::stdout();
    let mut out = io::BufWriter::new(stdout.lock());

    let check = |driver: &Driver| -> Option<(u64, f64, f64)> {
        let (n, est, _, _, _) = driver.record();
        let sigma = est.max(0.0).sqrt();
        let half = z * sigma / (n as f64).sqrt();
        let pen = if n <= args.pen { args.eps } else { 0.0 };
        (half + pen < args.eps).then_some((n, est, half))
    };

    let mut hit = check(&driver);
    if hit.is_none() {
        for &x in &values[1..] {
            driver.update(x).map_err(from_lib)?;
            hit = check(&driver);
            if hit.is_some() {
                break;
            }
        }
    }
    let code = match hit {
        Some((n, est, half)) => {
            writeln!(
                out,
                "{{\"n_star\":{n},\"mean\":{},\"estimate\":{},\"halfwidth\":{}}}",
                sig17(driver.mean()),
                sig17(est),
                sig17(half)
            )
            .map_err(|e| CliError::Data(e.to_string()))?;
            ExitCode::SUCCESS
        }
        None => {
            let (n, est, _, _, _) = driver.record();
            let sigma = est.max(0.0).sqrt();
            let half = z * sigma / (n as f64).sqrt();
            writeln!(
                out,
                "{{\"n_star\":null,\"mean\":{},\"estimate\":{},\"halfwidth\":{}}}",
                sig17(driver.mean()),
                sig17(est),
                sig17(half)
            )
            .map_err(|e| CliError::Data(e.to_string()))?;
            ExitCode::from(3)
        }
    };
    out.flush().map_err(|e| CliError::Data(e.to_string()))?;
    Ok(code)
}

fn bench_model(name: &str) -> Result<SeriesModel, CliError> {
    match name.to_ascii_uppercase().as_str() {
        "I" | "1" => Ok(SeriesModel::model_i()),
        "II" | "2" => Ok(SeriesModel::model_ii()),
        "III" | "3" => Ok(SeriesModel::model_iii()),
        "IV" | "4" => Ok(SeriesModel::model_iv()),
        other => Err(CliError::Usage(format!(
            "unknown model '{other}' (expected I, II, III or IV)"
        ))),
    }
}

fn bench_checkpoints(n: usize) -> Vec<usize> {
    let mut pts: Vec<usize> = [16, 8, 4, 2, 1].iter().map(|d| n / d).collect();
    pts.retain(|&p| p >= 2);
    pts.dedup();
    pts
}

fn run_bench(args: BenchArgs) -> Result<ExitCode, CliError> {
    let model = bench_model(&args.model)?.with_seed(args.seed);
    if args.reps == 0 || args.n < 2 {
        return Err(CliError::Usage("need --reps >= 1 and --n >= 2".into()));
    }
    let targets = model.true_targets();
    let kappa = match args.kappa.or(targets.map(|t| t.kappa1)) {
        Some(k) if k > 0.0 => k,
        Some(_) => {
            return Err(CliError::Usage("model has kappa = 0; supply a positive --kappa".into()))
        }
        None => {
            return Err(CliError::Usage(
                "model has no closed-form targets; supply --kappa".into(),
            ))
        }
    };
    let sigma2 = match args.sigma2.or(targets.map(|t| t.sigma2)) {
        Some(s) => s,
        None => {
            return Err(CliError::Usage(
                "model has no closed-form targets; supply --sigma2".into(),
            ))
        }
    };

    let p11 = psi_star(1, 1.0, kappa).map_err(from_lib)?;
    let t11 = theta_star(1, 1.0, kappa, p11).map_err(from_lib)?;
    let p12 = psi_star(1, 2.0, kappa).map_err(from_lib)?;
    let t12 = theta_star(1, 2.0, kappa, p12).map_err(from_lib)?;
    let bart_coeff = (1.5_f64).powf(1.0 / 3.0) * kappa.powf(2.0 / 3.0);

    let checkpoints = bench_checkpoints(args.n);
    let reps = args.reps as usize;
    let threads = std::env::var("LRV_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&v| v >= 1)
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
        .min(reps);

    // errs[r][c] = (laser11, laser12, bart) squared errors at checkpoint c,
    // filled per replicate and merged in index order for determinism.
    let mut errs: Vec<Vec<(f64, f64, f64)>> = vec![Vec::new(); reps];
    let chunk = reps.div_ceil(threads);
    let result: Result<(), String> = std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for (tid, slot) in errs.chunks_mut(chunk).enumerate() {
            let checkpoints = &checkpoints;
            let handle = scope.spawn(move || -> Result<(), String> {
                for (off, cell) in slot.iter_mut().enumerate() {
                    let r = tid * chunk + off;
                    let xs = model.replicate(r as u64).gen(args.n).map_err(|e| e.to_string())?;
                    let mut l11 = LaserState::init(
                        LaserConfig::explicit(1, 1.0, p11, 1.0 / 3.0, t11, 1.0 / 3.0),
                        xs[0],
                    )
                    .map_err(|e| e.to_string())?;
                    let mut l12 = RampState::init(
                        LaserConfig::explicit(1, 2.0, p12, 1.0 / 3.0, t12, 1.0 / 3.0),
                        xs[0],
                    )
                    .map_err(|e| e.to_string())?;
                    let mut next = 0usize;
                    for (i, &x) in xs.iter().enumerate() {
                        if i > 0 {
                            l11.update(x).map_err(|e| e.to_string())?;
                            l12.update(x).map_err(|e| e.to_string())?;
                        }
                        if next < checkpoints.len() && i + 1 == checkpoints[next] {
                            let nc = i + 1;
                            let bw = ((bart_coeff * (nc as f64).powf(1.0 / 3.0)).round() as usize)
                                .clamp(1, nc - 1);
                            let eb = bartlett(&xs[..nc], bw).map_err(|e| e.to_string())?;
                            let d11 = l11.estimate() - sigma2;
                            let d12 = l12.estimate() - sigma2;
                            let db = eb - sigma2;
                            cell.push((d11 * d11, d12 * d12, db * db));
                            next += 1;
                        }
                    }
                }
                Ok(())
            });
            handles.push(handle);
        }
        for h in handles {
            h.join().map_err(|_| "worker panicked".to_string())??;
        }
        Ok(())
    });
    result.map_err(CliError::Data)?;

    let stdout = io::stdout();
    let mut out = io::BufWriter::new(stdout.lock());
    writeln!(out, "n,mse_laser11,mse_laser12,mse_bart,ratio_laser11,ratio_laser12")
        .map_err(|e| CliError::Data(e.to_string()))?;
    for (c, &nc) in checkpoints.iter().enumerate() {
        let mut acc = (0.0, 0.0, 0.0);
        for row in &errs {
            acc.0 += row[c].0;
            acc.1 += row[c].1;
            acc.2 += row[c].2;
        }
        let m = reps as f64;
        let (m11, m12, mb) = (acc.0 / m, acc.1 / m, acc.2 / m);
        writeln!(
            out,
            "{nc},{},{},{},{},{}",
            sig17(m11),
            sig17(m12),
            sig17(mb),
            sig17(m11 / mb),
            sig17(m12 / mb)
        )
        .map_err(|e| CliError::Data(e.to_string()))?;
    }
    out.flush().map_err(|e| CliError::Data(e.to_string()))?;
    Ok(ExitCode::SUCCESS)
}
