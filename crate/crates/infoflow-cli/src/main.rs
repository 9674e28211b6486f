//! Command-line entry point.
//!
//! Subcommands: analyze (closed-form rates and cross-checks), finite
//! (finite-horizon flows, no gate), verify (conservation and oracle gate),
//! sweep (per-sample convergence CSV), simulate (Monte Carlo CSV artifacts
//! and the PSD gate).
//!
//! Exit codes: 0 pass, 1 a documented threshold was exceeded, 2 invalid
//! input (config, flags, or a computation precondition).

mod config;
mod report;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use infoflow::{
    bode_integral_poles, closed_form_rates, empirical_covariance, finite_report, loop_output_psd,
    periodogram_psd, rms_relative_error, simulate_loop, FiniteInfoReport, InitialCondition,
    SignalRole, SimulationConfig, ORACLE_LIMIT, PERIODOGRAM_MIN_N, PERIODOGRAM_MIN_TRIALS,
};

use crate::config::LoopConfigFile;
use crate::report::RunReport;

/// Conservation residual gate for `verify`.
const RESIDUAL_TOL: f64 = 1e-8;
/// Definition-oracle disagreement gate for `verify`.
const ORACLE_TOL: f64 = 1e-7;
/// Periodogram-vs-analytic RMS relative error gate for `simulate`.
const RMS_TOL: f64 = 0.05;

const CONFIG_HELP: &str = "\
Config file (TOML):
  [plant]       num = [...], den = [...]    coefficients ascending in z^-1
  [noise]       sigma_w2, sigma_v2          channel variances (sigma_v2 > 0)
  [message]     sigma_02 = 1.0, theta = [1.0]            (optional)
  [quadrature]  panels, nodes_per_panel, tol             (optional)
  [run]         n, trials, seed             flag defaults (optional)

Unknown keys are rejected. Human tables print nats/sample at 6 decimals;
JSON reports and CSV artifacts carry full precision.

Exit codes: 0 pass, 1 thresholds exceeded, 2 invalid input.";

const SWEEP_HELP: &str = "\
CSV columns: n, i_total_per_n, i_x_per_n, i_cond_per_n, residual.
One row per requested horizon; the final row has n = \"limit\" and carries
the closed-form rates, with the dual-quadrature difference as its residual.
Full precision, nats per sample.";

const SIMULATE_HELP: &str = "\
Artifacts (full precision, byte-identical across reruns with the same seed):
  covariance_e.csv    lag,covariance               stationary-tail estimates
  periodogram_e.csv   theta,periodogram,analytic   theta in cycles/sample on [0, 1/2]
With --dump-trajectories additionally: x0.csv (one message draw per row) and
e/x/y/v/w_plus_v.csv (one row per trial, comma-separated samples, no header).
The PSD gate compares the e periodogram against the analytic output density
and needs trials >= 100 and n a power of two >= 256; otherwise the run is
covariance-only and the gate is not evaluated.";

#[derive(Parser)]
#[command(
    name = "infoflow",
    version,
    about = "Information flows in discrete-time LTI feedback loops over AWGN channels",
    after_help = CONFIG_HELP
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Closed-form rates with the dual-path and Bode cross-checks
    Analyze {
        config: PathBuf,
        /// Emit a JSON run report instead of the table
        #[arg(long)]
        json: bool,
    },
    /// Finite-horizon flows at one n (diagnostic, no gate)
    Finite {
        config: PathBuf,
        /// Horizon; falls back to [run].n, then 64
        #[arg(long)]
        n: Option<usize>,
        /// Initial condition: rest or stationary
        #[arg(long, default_value = "rest", value_parser = parse_init)]
        init: InitialCondition,
        #[arg(long)]
        json: bool,
    },
    /// Gate the conservation residual and the definition oracle
    Verify {
        config: PathBuf,
        /// Horizon; falls back to [run].n, then 32
        #[arg(long)]
        n: Option<usize>,
        /// Initial condition: rest or stationary (oracle runs at rest)
        #[arg(long, default_value = "rest", value_parser = parse_init)]
        init: InitialCondition,
        #[arg(long)]
        json: bool,
    },
    /// Per-sample flows over a horizon list, CSV on stdout
    #[command(after_help = SWEEP_HELP)]
    Sweep {
        config: PathBuf,
        /// Strictly ascending horizons, comma separated
        #[arg(long, value_delimiter = ',', required = true)]
        n_list: Vec<usize>,
        /// Initial condition; stationary is the one whose per-sample values
        /// approach the closed-form rates
        #[arg(long, default_value = "stationary", value_parser = parse_init)]
        init: InitialCondition,
    },
    /// Monte Carlo run: covariance and periodogram CSVs plus the PSD gate
    #[command(after_help = SIMULATE_HELP)]
    Simulate {
        config: PathBuf,
        /// Samples per trajectory; falls back to [run].n, then 1024
        #[arg(long)]
        n: Option<usize>,
        /// Trajectories; falls back to [run].trials, then 1000
        #[arg(long)]
        trials: Option<usize>,
        /// RNG seed; falls back to [run].seed, then 42
        #[arg(long)]
        seed: Option<u64>,
        /// Directory for CSV artifacts
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        /// Covariance lags to estimate (clamped below the tail length)
        #[arg(long, default_value_t = 16)]
        lag_window: usize,
        /// Also write one trajectory CSV per signal
        #[arg(long)]
        dump_trajectories: bool,
        #[arg(long)]
        json: bool,
    },
}

fn parse_init(s: &str) -> Result<InitialCondition, String> {
    s.parse()
}

fn main() -> ExitCode {
    // Dying on SIGPIPE like any filter keeps `infoflow sweep ... | head`
    // from panicking mid-write.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(cmd: Cmd) -> Result<ExitCode, String> {
    match cmd {
        Cmd::Analyze { config, json } => cmd_analyze(&config, json),
        Cmd::Finite {
            config,
            n,
            init,
            json,
        } => cmd_finite(&config, n, init, json),
        Cmd::Verify {
            config,
            n,
            init,
            json,
        } => cmd_verify(&config, n, init, json),
        Cmd::Sweep {
            config,
            n_list,
            init,
        } => cmd_sweep(&config, &n_list, init),
        Cmd::Simulate {
            config,
            n,
            trials,
            seed,
            out_dir,
            lag_window,
            dump_trajectories,
            json,
        } => cmd_simulate(
            &config,
            n,
            trials,
            seed,
            &out_dir,
            lag_window,
            dump_trajectories,
            json,
        ),
    }
}

fn init_label(init: InitialCondition) -> &'static str {
    match init {
        InitialCondition::Rest => "rest",
        InitialCondition::Stationary => "stationary",
    }
}

fn resolve_n(flag: Option<usize>, cfg: &LoopConfigFile, fallback: usize) -> Result<usize, String> {
    let n = flag.or(cfg.run.n).unwrap_or(fallback);
    if n == 0 {
        return Err("n must be >= 1".into());
    }
    Ok(n)
}

fn cmd_analyze(path: &Path, json: bool) -> Result<ExitCode, String> {
    let cfg = LoopConfigFile::load(path)?;
    let lp = cfg.to_loop()?;
    let quad = cfg.quadrature()?;
    let rates = closed_form_rates(&lp, &quad).map_err(|e| e.to_string())?;
    let pole_sum = bode_integral_poles(&lp.plant).map_err(|e| e.to_string())?;
    let bode_diff = rates.log_sens_term - pole_sum;

    if json {
        let results = serde_json::json!({
            "rates": rates,
            "bode": {
                "quadrature": rates.log_sens_term,
                "pole_sum": pole_sum,
                "difference": bode_diff,
            },
        });
        RunReport::new("analyze", &cfg, results).print();
    } else {
        println!("loop: G = ({}) / ({})", lp.plant.num(), lp.plant.den());
        println!(
            "      sigma_w2 = {:.6}  sigma_v2 = {:.6}  sigma_02 = {:.6}",
            lp.sigma_w2, lp.sigma_v2, lp.sigma_02
        );
        println!();
        println!("rates (nats/sample)");
        println!("  r_x     (message-borne)      {:>12.6}", rates.r_x);
        println!("  r_cond  (noise-borne)        {:>12.6}", rates.r_cond);
        println!("  r_total (term sum)           {:>12.6}", rates.r_total);
        println!("  r_total (psd entropy rate)   {:>12.6}", rates.r_total_psd);
        println!(
            "  dual-path residual           {:>12.3e}",
            rates.conservation_residual
        );
        println!();
        println!("bode cross-check");
        println!("  log-sensitivity integral     {:>12.6}", rates.log_sens_term);
        println!("  sum ln|unstable poles|       {:>12.6}", pole_sum);
        println!("  difference                   {:>12.3e}", bode_diff);
    }
    Ok(ExitCode::SUCCESS)
}

fn print_finite(rep: &FiniteInfoReport, with_tols: bool) {
    println!("n                       {:>12}", rep.n);
    println!("init                    {:>12}", init_label(rep.init));
    println!(
        "i_total                 {:>12.6}   per sample {:>10.6}",
        rep.i_total, rep.per_sample_total
    );
    println!(
        "i_x                     {:>12.6}   per sample {:>10.6}",
        rep.i_x, rep.per_sample_x
    );
    println!(
        "i_cond                  {:>12.6}   per sample {:>10.6}",
        rep.i_cond, rep.per_sample_cond
    );
    if with_tols {
        println!(
            "conservation residual   {:>12.3e}   (tol {RESIDUAL_TOL:e})",
            rep.residual
        );
    } else {
        println!("conservation residual   {:>12.3e}", rep.residual);
    }
    match (rep.oracle_disagreement, with_tols) {
        (Some(d), true) => println!("oracle disagreement     {:>12.3e}   (tol {ORACLE_TOL:e})", d),
        (Some(d), false) => println!("oracle disagreement     {:>12.3e}", d),
        (None, _) => println!(
            "oracle disagreement     {:>12}   (runs at rest with n <= {})",
            "n/a", ORACLE_LIMIT
        ),
    }
}

fn cmd_finite(
    path: &Path,
    n_flag: Option<usize>,
    init: InitialCondition,
    json: bool,
) -> Result<ExitCode, String> {
    let cfg = LoopConfigFile::load(path)?;
    let lp = cfg.to_loop()?;
    let n = resolve_n(n_flag, &cfg, 64)?;
    let rep = finite_report(&lp, n, init).map_err(|e| e.to_string())?;
    if json {
        RunReport::new("finite", &cfg, serde_json::json!({ "report": rep })).print();
    } else {
        print_finite(&rep, false);
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(
    path: &Path,
    n_flag: Option<usize>,
    init: InitialCondition,
    json: bool,
) -> Result<ExitCode, String> {
    let cfg = LoopConfigFile::load(path)?;
    let lp = cfg.to_loop()?;
    let n = resolve_n(n_flag, &cfg, 32)?;
    let rep = finite_report(&lp, n, init).map_err(|e| e.to_string())?;
    let residual_ok = rep.residual.abs() <= RESIDUAL_TOL;
    let oracle_ok = rep.oracle_disagreement.is_none_or(|d| d <= ORACLE_TOL);
    let pass = residual_ok && oracle_ok;

    if json {
        let results = serde_json::json!({
            "report": rep,
            "residual_tol": RESIDUAL_TOL,
            "oracle_tol": ORACLE_TOL,
            "pass": pass,
        });
        RunReport::new("verify", &cfg, results).print();
    } else {
        print_finite(&rep, true);
        println!("verdict                 {:>12}", if pass { "PASS" } else { "FAIL" });
    }
    Ok(if pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn cmd_sweep(path: &Path, n_list: &[usize], init: InitialCondition) -> Result<ExitCode, String> {
    if n_list.first() == Some(&0) {
        return Err("n must be >= 1".into());
    }
    if n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err("n list must be strictly ascending".into());
    }
    let cfg = LoopConfigFile::load(path)?;
    let lp = cfg.to_loop()?;
    let quad = cfg.quadrature()?;
    let rates = closed_form_rates(&lp, &quad).map_err(|e| e.to_string())?;

    println!("n,i_total_per_n,i_x_per_n,i_cond_per_n,residual");
    for &n in n_list {
        let rep = finite_report(&lp, n, init).map_err(|e| e.to_string())?;
        println!(
            "{},{},{},{},{}",
            n, rep.per_sample_total, rep.per_sample_x, rep.per_sample_cond, rep.residual
        );
    }
    println!(
        "limit,{},{},{},{}",
        rates.r_total, rates.r_x, rates.r_cond, rates.conservation_residual
    );
    Ok(ExitCode::SUCCESS)
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    path: &Path,
    n_flag: Option<usize>,
    trials_flag: Option<usize>,
    seed_flag: Option<u64>,
    out_dir: &Path,
    lag_window: usize,
    dump: bool,
    json: bool,
) -> Result<ExitCode, String> {
    let cfg = LoopConfigFile::load(path)?;
    let lp = cfg.to_loop()?;
    let n = resolve_n(n_flag, &cfg, 1024)?;
    let trials = trials_flag.or(cfg.run.trials).unwrap_or(1000);
    let seed = seed_flag.or(cfg.run.seed).unwrap_or(42);
    if trials == 0 {
        return Err("trials must be >= 1".into());
    }

    let sim = SimulationConfig {
        system: lp.clone(),
        n,
        trials,
        seed,
    };
    let batch = simulate_loop(&sim).map_err(|e| e.to_string())?;
    fs::create_dir_all(out_dir)
        .map_err(|e| format!("cannot create {}: {e}", out_dir.display()))?;
    let write_file = |name: &str, text: &str| -> Result<(), String> {
        fs::write(out_dir.join(name), text)
            .map_err(|e| format!("cannot write {}: {e}", out_dir.join(name).display()))
    };

    let mut files: Vec<String> = Vec::new();
    let mut notes: Vec<String> = Vec::new();

    let tail = n / 2;
    let mut cov_lags = None;
    if trials >= 2 && tail >= 1 {
        let lags = lag_window.min(tail - 1);
        let cov = empirical_covariance(&batch, SignalRole::E, lags).map_err(|e| e.to_string())?;
        let mut text = String::from("lag,covariance\n");
        for (lag, value) in cov.iter().enumerate() {
            writeln!(text, "{lag},{value}").unwrap();
        }
        write_file("covariance_e.csv", &text)?;
        files.push("covariance_e.csv".into());
        cov_lags = Some(lags);
    } else if trials < 2 {
        notes.push(format!(
            "covariance estimation skipped: needs >= 2 trials (got {trials})"
        ));
    } else {
        notes.push(format!("covariance estimation skipped: n = {n} has no stationary tail"));
    }

    let can_periodogram =
        trials >= PERIODOGRAM_MIN_TRIALS && n >= PERIODOGRAM_MIN_N && n.is_power_of_two();
    let mut rms = None;
    if can_periodogram {
        let psd = periodogram_psd(&batch, SignalRole::E).map_err(|e| e.to_string())?;
        let analytic = loop_output_psd(&lp).map_err(|e| e.to_string())?;
        let err = rms_relative_error(&psd, &analytic).map_err(|e| e.to_string())?;
        let (thetas, values) = psd.samples().expect("periodogram is sampled");
        let mut text = String::from("theta,periodogram,analytic\n");
        for (&t, &p) in thetas.iter().zip(values) {
            let a = analytic.value(t).map_err(|e| e.to_string())?;
            writeln!(text, "{t},{p},{a}").unwrap();
        }
        write_file("periodogram_e.csv", &text)?;
        files.push("periodogram_e.csv".into());
        rms = Some(err);
    } else {
        notes.push(format!(
            "periodogram comparison skipped: needs trials >= {PERIODOGRAM_MIN_TRIALS} and n a power of two >= {PERIODOGRAM_MIN_N} (got trials = {trials}, n = {n})"
        ));
    }

    if dump {
        let mut text = String::new();
        for v in batch.x0() {
            writeln!(text, "{v}").unwrap();
        }
        write_file("x0.csv", &text)?;
        files.push("x0.csv".into());
        for role in [
            SignalRole::E,
            SignalRole::X,
            SignalRole::Y,
            SignalRole::V,
            SignalRole::WPlusV,
        ] {
            let mut text = String::new();
            for row in batch.signal(role) {
                let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
                writeln!(text, "{}", line.join(",")).unwrap();
            }
            let name = format!("{}.csv", role.label());
            write_file(&name, &text)?;
            files.push(name);
        }
    }

    let pass = rms.map(|r| r <= RMS_TOL);
    if json {
        let results = serde_json::json!({
            "n": n,
            "trials": trials,
            "seed": seed,
            "algorithm": batch.algorithm(),
            "out_dir": out_dir.display().to_string(),
            "files": files,
            "covariance_lags": cov_lags,
            "rms_relative_error": rms,
            "rms_tol": RMS_TOL,
            "mode": if rms.is_some() { "periodogram" } else { "covariance-only" },
            "pass": pass,
            "notes": notes,
        });
        RunReport::new("simulate", &cfg, results).print();
    } else {
        println!(
            "simulate: n = {n}, trials = {trials}, seed = {seed}, rng = {}",
            batch.algorithm()
        );
        for name in &files {
            println!("wrote {}", out_dir.join(name).display());
        }
        for note in &notes {
            println!("{note}");
        }
        match rms {
            Some(r) => {
                println!("periodogram rms relative error {:>10.6}   (tol {RMS_TOL})", r);
                println!("verdict {}", if r <= RMS_TOL { "PASS" } else { "FAIL" });
            }
            None => println!("covariance-only mode: psd gate not evaluated"),
        }
    }
    Ok(match pass {
        Some(false) => ExitCode::from(1),
        _ => ExitCode::SUCCESS,
    })
}
