//! Command-line front end: single simulations, Monte-Carlo sweeps, gain
//! certification, Lyapunov monitoring, plot emission and EKF replay.
//!
//! Exit codes: 0 success, 1 usage/configuration error, 2 simulation
//! divergence or monitor violation, 3 certificate failure.

use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use su2track::estimator::{read_replay_log, EkfConfig, EkfState, ReplayRunner};
use su2track::harness::{
    certify, emit_plots, lyapunov_monitor, run_monte_carlo, run_single, HarnessError, SimConfig,
    SimTrace,
};

#[derive(Parser)]
#[command(name = "su2track", version, about = "Geometric quadrotor tracking toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ConfigArgs {
    /// Configuration file (TOML); defaults to the built-in study setup.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Load the printed study realization as initial conditions.
    #[arg(long, value_name = "NAME")]
    fixture: Option<String>,
    /// Realization seed (selects `setup.source = "sample"` when given).
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation and write the trace and summary.
    Sim {
        #[command(flatten)]
        config: ConfigArgs,
        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Also emit the plot panels.
        #[arg(long)]
        plots: bool,
    },
    /// Run a Monte-Carlo sweep of seeded realizations.
    Mc {
        #[command(flatten)]
        config: ConfigArgs,
        /// Number of realizations.
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Evaluate and print the gain certificate.
    Certify {
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Check a trace against the Lyapunov certificate.
    Monitor {
        /// Trace file produced by `sim`.
        trace: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Render the plot panels for a trace.
    Plot {
        trace: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Replay a sensor log through the multiplicative EKF.
    ReplayEkf {
        /// Line-oriented log: `IMU t ax ay az gx gy gz` /
        /// `POSE t px py pz sx sy sz`.
        log: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

fn load_config(args: &ConfigArgs) -> Result<SimConfig, HarnessError> {
    let mut cfg = match &args.config {
        Some(path) => SimConfig::load(path)?,
        None => SimConfig::default(),
    };
    if let Some(name) = &args.fixture {
        if name != "paper" {
            return Err(HarnessError::ConfigError(format!(
                "unknown fixture {name:?}; available: paper"
            )));
        }
        cfg.setup.source = "fixture".into();
    }
    if let Some(seed) = args.seed {
        cfg.setup.source = "sample".into();
        cfg.setup.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn ensure_dir(dir: &Path) -> Result<(), HarnessError> {
    std::fs::create_dir_all(dir)?;
    Ok(())
}

const EXIT_USAGE: u8 = 1;
const EXIT_VIOLATION: u8 = 2;
const EXIT_CERTIFICATE: u8 = 3;

fn run() -> Result<u8, HarnessError> {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return Ok(code);
        }
    };

    match cli.command {
        Command::Sim { config, out, plots } => {
            let cfg = load_config(&config)?;
            ensure_dir(&out)?;
            match run_single(&cfg) {
                Ok((trace, summary)) => {
                    let trace_path = out.join("trace.csv");
                    trace.save(&trace_path)?;
                    println!("trace {}", trace_path.display());
                    println!(
                        "terminal errors: e_p={:.6e} e_v={:.6e} e_x={:.6e} e_w={:.6e}",
                        summary.terminal_errors[0],
                        summary.terminal_errors[1],
                        summary.terminal_errors[2],
                        summary.terminal_errors[3]
                    );
                    println!("converged: {}", summary.converged);
                    match summary.entered_domain_at {
                        Some(t) => println!("entered exponential domain at t = {t:.4} s"),
                        None => println!("never entered the exponential domain"),
                    }
                    println!(
                        "negative-thrust samples: {} (raw projection; clamp {})",
                        summary.negative_thrust_samples,
                        if cfg.sim.clamp_thrust { "on" } else { "off" }
                    );
                    if summary.held_samples > 0 {
                        println!("degenerate samples held: {}", summary.held_samples);
                    }
                    if plots {
                        for f in emit_plots(&trace, &out)? {
                            println!("plot {}", f.display());
                        }
                    }
                    Ok(0)
                }
                Err(HarnessError::SimulationDiverged { time }) => {
                    eprintln!("simulation diverged at t = {time:.4} s");
                    Ok(EXIT_VIOLATION)
                }
                Err(e) => Err(e),
            }
        }
        Command::Mc { config, n, out } => {
            let cfg = load_config(&config)?;
            ensure_dir(&out)?;
            let summary = run_monte_carlo(n, &cfg, cfg.setup.seed);
            let path = out.join("monte_carlo.txt");
            std::fs::write(&path, summary.render_text())?;
            println!("summary {}", path.display());
            println!(
                "converged {}/{} (entered domain: {})",
                summary.converged_count, summary.requested, summary.entered_domain_count
            );
            for (seed, err) in &summary.failures {
                eprintln!("failure seed {seed}: {err}");
            }
            Ok(if summary.all_converged() { 0 } else { EXIT_VIOLATION })
        }
        Command::Certify { config } => {
            let cfg = load_config(&config)?;
            let (report, text) = certify(&cfg)?;
            print!("{text}");
            Ok(if report.pass { 0 } else { EXIT_CERTIFICATE })
        }
        Command::Monitor { trace, config } => {
            let cfg = load_config(&config)?;
            let trace = SimTrace::load(&trace)?;
            let (params, _) = cfg.resolve_setup()?;
            let domain = cfg.resolve_domain(&params)?;
            match lyapunov_monitor(
                &trace,
                &cfg.gains.translation(),
                &cfg.gains.attitude(),
                &params,
                &domain,
            ) {
                Ok(report) => {
                    match report.entered_domain_at {
                        Some(t) => println!("entered exponential domain at t = {t:.4} s"),
                        None => println!("trace never enters the exponential domain"),
                    }
                    if report.pass() {
                        println!("monitor: no violations over {} samples", trace.len());
                        Ok(0)
                    } else {
                        println!("monitor: {} violations", report.violations.len());
                        for v in report.violations.iter().take(20) {
                            println!(
                                "  t={:.4} row {} {:?}: {}",
                                v.time, v.index, v.kind, v.detail
                            );
                        }
                        Ok(EXIT_VIOLATION)
                    }
                }
                Err(HarnessError::CertificateFailed) => {
                    eprintln!("gains are not certified; run `su2track certify` for the report");
                    Ok(EXIT_CERTIFICATE)
                }
                Err(e) => Err(e),
            }
        }
        Command::Plot { trace, out } => {
            let trace = SimTrace::load(&trace)?;
            ensure_dir(&out)?;
            for f in emit_plots(&trace, &out)? {
                println!("plot {}", f.display());
            }
            Ok(0)
        }
        Command::ReplayEkf { log, config, out } => {
            let cfg = load_config(&config)?;
            ensure_dir(&out)?;
            let file = std::fs::File::open(&log)?;
            let records = read_replay_log(BufReader::new(file))?;
            if records.is_empty() {
                return Err(HarnessError::ParseError("log has no records".into()));
            }
            let (params, initial) = cfg.resolve_setup()?;
            let est = EkfState::new(
                &initial,
                records[0].time(),
                params.gravity(),
                cfg.estimator.init_sigma_p,
                cfg.estimator.init_sigma_v,
                cfg.estimator.init_sigma_delta,
            );
            let ekf_cfg = EkfConfig {
                accel_noise: cfg.estimator.accel_noise,
                gyro_noise: cfg.estimator.gyro_noise,
                pose_noise: cfg.estimator.pose_noise,
                reset_threshold: cfg.estimator.reset_threshold,
            };
            let mut runner = ReplayRunner::new(est, ekf_cfg);
            let estimates = runner.run(&records)?;
            let path = out.join("ekf_estimates.csv");
            let mut text = String::from("t,px,py,pz,vx,vy,vz,q1,q2,q3,q4,wx,wy,wz\n");
            for (t, s) in &estimates {
                let q = s.attitude.quaternion().as_array();
                text.push_str(&format!(
                    "{t:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
                    s.position.x, s.position.y, s.position.z,
                    s.velocity.x, s.velocity.y, s.velocity.z,
                    q[0], q[1], q[2], q[3],
                    s.rate.x, s.rate.y, s.rate.z,
                ));
            }
            std::fs::write(&path, text)?;
            println!("estimates {}", path.display());
            println!(
                "records {} (rejected stale: {})",
                records.len(),
                runner.state.rejected_measurements
            );
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e {
                HarnessError::ConfigError(_) | HarnessError::ParseError(_) => EXIT_USAGE,
                HarnessError::SimulationDiverged { .. } => EXIT_VIOLATION,
                HarnessError::CertificateFailed => EXIT_CERTIFICATE,
                _ => EXIT_USAGE,
            };
            ExitCode::from(code)
        }
    }
}
