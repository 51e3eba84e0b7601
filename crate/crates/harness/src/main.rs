use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use pirec::config::ExperimentConfig;
use pirec::output;
use pirec::returns::return_probability_experiment;
use pirec::sweep::{grid, run_point, trial_spec, SweepResult};
use pirec::{with_threads, Error, Result};
use pirec_core::calibration::{self, LossModel};
use pirec_core::channel::{simulate_blocks, substream};
use pirec_core::{run_recovery, ChannelModel, Interleaver, Monitor, Trellis};

/// Blind interleaver recovery with early stopping: calibration and simulation tool.
#[derive(Parser)]
#[command(name = "pirec", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Threshold calibration: solve for A, print the threshold table, the (A, B)
    /// surface or the feasible threshold bands.
    Calibrate(CalibrateArgs),
    /// Recover the interleaver from one dataset file.
    Recover(RecoverArgs),
    /// Monte Carlo trials at a single (SNR, M) point.
    Simulate(SimulateArgs),
    /// Monte Carlo trials over the SNR x M grid, written as CSV.
    Sweep(ExperimentArgs),
    /// Count returns to the correct state among failed runs.
    Returns(ReturnsArgs),
}

/// Settings shared by the experiment commands. Each overrides the same key of the
/// configuration file.
#[derive(Args, Clone, Default)]
struct ExperimentArgs {
    /// Configuration file (`key = value` lines).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long = "K")]
    k: Option<String>,
    /// Block count(s), comma separated.
    #[arg(long = "M")]
    m: Option<String>,
    /// SNR value(s) in dB (Es/N0), comma separated.
    #[arg(long = "snr-db", allow_hyphen_values = true)]
    snr_db: Option<String>,
    #[arg(long)]
    trials: Option<String>,
    /// Second encoder as feedforward/feedback/depth, masks in decimal with bit i for D^i (e.g. 23/25/4).
    #[arg(long)]
    generator: Option<String>,
    /// Early-stopping threshold A, or `auto`.
    #[arg(long = "A")]
    a: Option<String>,
    /// Early-stopping run length B.
    #[arg(long = "B")]
    b: Option<String>,
    /// Target expected wasted iterations used when A is automatic.
    #[arg(long = "target-ew")]
    target_ew: Option<String>,
    /// all-positions or unused-only.
    #[arg(long)]
    policy: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: $PIREC_THREADS, then all cores).
    #[arg(long)]
    threads: Option<String>,
    /// Report the runs without early stopping.
    #[arg(long = "no-early-stop")]
    no_early_stop: bool,
}

impl ExperimentArgs {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut config = match &self.config {
            Some(path) => ExperimentConfig::from_file(path)?,
            None => ExperimentConfig::default(),
        };
        let overrides = [
            ("K", &self.k),
            ("M", &self.m),
            ("snr-db", &self.snr_db),
            ("trials", &self.trials),
            ("generator", &self.generator),
            ("A", &self.a),
            ("B", &self.b),
            ("target-ew", &self.target_ew),
            ("policy", &self.policy),
            ("seed", &self.seed),
            ("threads", &self.threads),
        ];
        for (key, value) in overrides {
            if let Some(v) = value {
                config.set(key, v)?;
            }
        }
        if let Some(out) = &self.out {
            config.out = Some(out.clone());
        }
        if self.no_early_stop {
            config.early_stop = false;
        }
        config.validate()?;
        Ok(config)
    }
}

#[derive(Args)]
struct CalibrateArgs {
    #[arg(long = "K", default_value_t = 512)]
    k: usize,
    #[arg(long = "B", default_value_t = calibration::TABLE_RUN_LENGTH)]
    b: usize,
    #[arg(long = "target-ew", default_value_t = calibration::TABLE_TARGET_EW)]
    target_ew: f64,
    /// Evaluate this A instead of solving for it.
    #[arg(long = "A")]
    a: Option<f64>,
    /// Threshold table for K = 512 ... 16384.
    #[arg(long, conflicts_with_all = ["surface", "feasible"])]
    table: bool,
    /// E(W) and E_max(L) over a grid of A and B = 1..=max-b.
    #[arg(long, conflicts_with = "feasible")]
    surface: bool,
    /// Threshold bands meeting --max-ew and --max-loss.
    #[arg(long)]
    feasible: bool,
    #[arg(long = "max-ew", default_value_t = 10.0)]
    max_ew: f64,
    /// Bound on E_max(L) as a fraction of K.
    #[arg(long = "max-loss", default_value_t = 0.02)]
    max_loss: f64,
    #[arg(long = "a-min", default_value_t = 2.5)]
    a_min: f64,
    #[arg(long = "a-max", default_value_t = 5.0)]
    a_max: f64,
    #[arg(long = "a-step", default_value_t = 0.05)]
    a_step: f64,
    #[arg(long = "max-b", default_value_t = 10)]
    max_b: usize,
    /// Write CSV here instead of printing a summary.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RecoverArgs {
    /// Dataset file (as written by `simulate --dataset-out`).
    #[arg(long)]
    input: PathBuf,
    /// Channel noise standard deviation; overrides --snr-db.
    #[arg(long = "noise-std", conflicts_with = "snr_db")]
    noise_std: Option<f64>,
    #[command(flatten)]
    common: ExperimentArgs,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: ExperimentArgs,
    /// Also write trial 0's received blocks (and true interleaver) here.
    #[arg(long = "dataset-out")]
    dataset_out: Option<PathBuf>,
}

#[derive(Args)]
struct ReturnsArgs {
    #[command(flatten)]
    common: ExperimentArgs,
    /// Failed trials to examine.
    #[arg(long, default_value_t = 200)]
    cases: usize,
    #[arg(long = "max-trials", default_value_t = 100_000)]
    max_trials: usize,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let message = e.to_string().replace('\n', " ");
            eprintln!("pirec: error[{}]: {message}", e.kind());
            ExitCode::from(if e.is_usage() { 2 } else { 1 })
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Calibrate(args) => calibrate(args),
        Command::Recover(args) => recover(args),
        Command::Simulate(args) => simulate(args),
        Command::Sweep(args) => sweep(args),
        Command::Returns(args) => returns(args),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

/// Runs `write` against `path`, or stdout when there is none.
fn emit(path: Option<&Path>, write: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<()> {
    match path {
        Some(p) => {
            let mut w = create(p)?;
            write(&mut w).and_then(|_| w.flush()).map_err(|e| Error::io(p, e))
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            write(&mut lock).map_err(|e| Error::io("<stdout>", e))
        }
    }
}

fn calibrate(args: CalibrateArgs) -> Result<()> {
    if args.k < 2 || args.b == 0 {
        return Err(Error::Config("K must be at least 2 and B positive".into()));
    }
    if args.table {
        let rows = calibration::threshold_table()?;
        if let Some(out) = &args.out {
            return emit(Some(out), |w| output::write_calibration(w, &rows));
        }
        println!("{:>6} {:>6} {:>8} {:>12} {:>7}", "K", "A", "E(W)", "100*Emax(L)", "T*");
        for r in rows {
            println!(
                "{:>6} {:>6.2} {:>8.3} {:>12.2} {:>7.3}",
                r.k,
                r.a,
                r.e_w,
                100.0 * r.e_max_l,
                r.t_star
            );
        }
        return Ok(());
    }
    if args.surface {
        if args.a_step.is_nan() || args.a_step <= 0.0 || args.a_max < args.a_min || args.max_b == 0 {
            return Err(Error::Config("surface needs a-step > 0, a-max >= a-min and max-b >= 1".into()));
        }
        let steps = ((args.a_max - args.a_min) / args.a_step + 1e-9).floor() as usize;
        let a_values: Vec<f64> = (0..=steps).map(|i| args.a_min + i as f64 * args.a_step).collect();
        let bs: Vec<usize> = (1..=args.max_b).collect();
        let rows = calibration::threshold_surface(args.k, &bs, &a_values);
        return emit(args.out.as_deref(), |w| output::write_calibration(w, &rows));
    }
    if args.feasible {
        let model = LossModel::new(args.k);
        let bands = calibration::feasibility_region_with(&model, args.max_ew, args.max_loss);
        if let Some(out) = &args.out {
            return emit(Some(out), |w| output::write_feasible(w, args.k, &bands));
        }
        if bands.is_empty() {
            println!(
                "no feasible thresholds for K = {} with E(W) < {} and E_max(L) < {}",
                args.k, args.max_ew, args.max_loss
            );
        }
        for b in bands {
            println!("B = {}: {:.2} <= A <= {:.2}", b.b, b.a_min, b.a_max);
        }
        return Ok(());
    }
    let row = match args.a {
        Some(a) => {
            if a.is_nan() || a <= 0.0 {
                return Err(Error::Config("A must be positive".into()));
            }
            calibration::evaluate(args.k, a, args.b)
        }
        None => calibration::calibrate(args.k, args.b, args.target_ew)?,
    };
    if let Some(out) = &args.out {
        return emit(Some(out), |w| output::write_calibration(w, &[row]));
    }
    println!("A = {:.2}", row.a);
    println!(
        "K = {}, B = {}, E(W) = {:.3}, E_max(L) = {:.5} (T* = {:.3})",
        row.k, row.b, row.e_w, row.e_max_l, row.t_star
    );
    Ok(())
}

fn recover(args: RecoverArgs) -> Result<()> {
    let config = args.common.load()?;
    let channel = match args.noise_std {
        Some(s) => ChannelModel::from_noise_std(s)?,
        None => ChannelModel::from_snr_db(config.snr_db[0])?,
    };
    let dataset = output::read_dataset(&args.input)?;
    let trellis = Trellis::new(config.generator);
    let mut monitor = if config.early_stop {
        Some(Monitor::new(config.resolved_thresholds()?))
    } else {
        None
    };
    let k = dataset.blocks[0].len();
    let m = dataset.blocks.len();
    let outcome = run_recovery(&trellis, channel, dataset.blocks, config.policy, monitor.as_mut())?;
    let pi_hat: Vec<String> = outcome.pi_hat.iter().map(usize::to_string).collect();
    println!(
        "K = {k}, M = {m}, iterations = {}, stopped_early = {}",
        outcome.stop_iteration(),
        outcome.stopped_early
    );
    if let Some(truth) = &dataset.truth {
        let correct = outcome.pi_hat.iter().zip(truth).filter(|(a, b)| a == b).count();
        println!("correct = {correct}/{k}");
    }
    println!("pi_hat = {}", pi_hat.join(" "));
    if let Some(out) = &config.out {
        emit(Some(out), |w| output::write_trace(w, &outcome))?;
    }
    Ok(())
}

fn simulate(args: SimulateArgs) -> Result<()> {
    let config = args.common.load()?;
    let thresholds = config.resolved_thresholds()?;
    let trellis = Trellis::new(config.generator);
    let point = grid(&config)[0];
    if let Some(path) = &args.dataset_out {
        let spec = trial_spec(&trellis, &config, point)?;
        let pi = Interleaver::random(spec.k, &mut substream(spec.seed, 0, 0));
        let blocks = simulate_blocks(&trellis, &pi, &spec.channel, spec.m, spec.seed, 0);
        emit(Some(path), |w| output::write_dataset(w, &blocks, Some(pi.as_slice())))?;
    }
    let result = with_threads(config.threads, || run_point(&trellis, &config, point, thresholds))??;
    println!(
        "K = {}, M = {}, snr_db = {}, A = {}, B = {}, early_stop = {}, trials = {}",
        config.k,
        result.m,
        result.snr_db,
        thresholds.a(),
        thresholds.b(),
        config.early_stop,
        result.trials
    );
    println!("P_C = {:.6} +- {:.6}", result.p_c.mean, result.p_c.half_width);
    println!("E(W) = {:.4} +- {:.4}", result.e_w.mean, result.e_w.half_width);
    println!("delta_P_C = {:.6} +- {:.6}", result.delta_p_c.mean, result.delta_p_c.half_width);
    if let Some(out) = &config.out {
        let sweep = SweepResult {
            k: config.k,
            points: vec![result],
        };
        emit(Some(out), |w| output::write_sweep(w, &sweep))?;
    }
    Ok(())
}

fn sweep(args: ExperimentArgs) -> Result<()> {
    let config = args.load()?;
    let result = with_threads(config.threads, || pirec::sweep(&config))??;
    emit(config.out.as_deref(), |w| output::write_sweep(w, &result))
}

fn returns(args: ReturnsArgs) -> Result<()> {
    let config = args.common.load()?;
    let trellis = Trellis::new(config.generator);
    let spec = trial_spec(&trellis, &config, grid(&config)[0])?;
    let d = trellis.memory_depth() as usize;
    let result = with_threads(config.threads, || {
        return_probability_experiment(&spec, d, args.cases, args.max_trials)
    })??;
    println!(
        "K = {}, d = {}, failed_cases = {}, returns = {}, trials_run = {}, bound = {:e}",
        result.k, result.d, result.failed_cases, result.returns, result.trials_run, result.bound
    );
    Ok(())
}
