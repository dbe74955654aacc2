//! `repeater`: coefficient queries, parameter sweeps, and protocol runs
//! for the waveguide-emitter repeater simulator.

mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};

use repeater_core::exec::map_trials;
use repeater_core::protocols::{
    analytic_protocol_success, run_creation_enumerate, run_creation_spectral, run_creation_trial,
    run_purification_enumerate, run_purification_trial, run_swapping_enumerate, run_swapping_trial,
    sample_creation, sample_purification, sample_swapping, CreationConfig, HeraldOutcome,
    NoiseParams,
};
use repeater_core::rng::trial_rng;
use repeater_core::scatter::{compute_coefficients, EmitterParams, Purcell, SpectralWavepacket};

use config::FileConfig;
use output::{emit, fmt_complex, fmt_f64};

#[derive(Parser)]
#[command(
    name = "repeater",
    version,
    about = "Heralded photon-scattering repeater simulator",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the scattering coefficients r, t, the loss weight, and the
    /// single-event success probability p_s for one working point.
    Coeff(CoeffArgs),
    /// Sweep p_s (and optionally the protocol success probabilities) along
    /// one parameter axis and emit CSV.
    Sweep(SweepArgs),
    /// Run one protocol: exact branch enumeration or seeded Monte Carlo.
    Run(RunArgs),
}

#[derive(Args)]
struct CoeffArgs {
    /// Purcell factor (positive number or `inf`).
    #[arg(long)]
    purcell: Option<Purcell>,
    /// Detuning in units of the guided decay rate.
    #[arg(long)]
    detuning: Option<f64>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
    /// key=value config file; command-line flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SweepAxis {
    Purcell,
    Detuning,
}

#[derive(Args)]
struct SweepArgs {
    /// Which parameter to sweep.
    #[arg(value_enum)]
    axis: SweepAxis,
    /// Start of the range (inclusive).
    #[arg(long)]
    from: f64,
    /// End of the range (inclusive).
    #[arg(long)]
    to: f64,
    /// Number of samples (evenly spaced).
    #[arg(long, default_value_t = 101)]
    points: usize,
    /// Fixed Purcell factor (required when sweeping the detuning).
    #[arg(long)]
    purcell: Option<Purcell>,
    /// Fixed detuning (used when sweeping the Purcell factor).
    #[arg(long)]
    detuning: Option<f64>,
    /// Also emit the protocol success probabilities p1, p2, p3.
    #[arg(long)]
    protocols: bool,
    /// Write CSV here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
    /// key=value config file; command-line flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProtocolName {
    Creation,
    Swap,
    Purify,
}

#[derive(Args)]
struct RunArgs {
    /// Which protocol to run.
    #[arg(value_enum)]
    protocol: ProtocolName,
    /// Purcell factor (positive number or `inf`).
    #[arg(long)]
    purcell: Option<Purcell>,
    /// Detuning in units of the guided decay rate.
    #[arg(long)]
    detuning: Option<f64>,
    /// Collective-noise parameters gamma,delta (creation only).
    #[arg(long, value_parser = parse_noise)]
    noise: Option<NoiseParams>,
    /// Input pair fidelity F (purify only).
    #[arg(long)]
    fidelity: Option<f64>,
    /// Exact branch enumeration (default when --trials is absent).
    #[arg(long)]
    enumerate: bool,
    /// Monte Carlo trial count.
    #[arg(long)]
    trials: Option<u64>,
    /// Monte Carlo seed (required with --trials).
    #[arg(long)]
    seed: Option<u64>,
    /// Spectral mode: number of frequency bins for a Gaussian wavepacket
    /// (creation only).
    #[arg(long)]
    bins: Option<usize>,
    /// Spectral mode: Gaussian amplitude width in units of the guided decay
    /// rate (creation only).
    #[arg(long)]
    sigma: Option<f64>,
    /// Disable the waveform corrector on the reference arm (demonstrates
    /// the broadband fidelity penalty it repairs).
    #[arg(long)]
    no_wfc: bool,
    /// Write per-trial CSV here (sample mode).
    #[arg(long)]
    per_trial: Option<PathBuf>,
    /// Write the summary here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
    /// key=value config file; command-line flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
}

fn parse_noise(raw: &str) -> Result<NoiseParams, String> {
    let (g, d) = raw
        .split_once(',')
        .ok_or_else(|| "expected gamma,delta".to_string())?;
    let g: f64 = g.trim().parse().map_err(|e| format!("gamma: {e}"))?;
    let d: f64 = d.trim().parse().map_err(|e| format!("delta: {e}"))?;
    NoiseParams::from_reals(g, d).map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Coeff(args) => cmd_coeff(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Run(args) => cmd_run(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}

fn load_config(path: &Option<PathBuf>) -> Result<FileConfig, String> {
    match path {
        None => Ok(FileConfig::default()),
        Some(p) => FileConfig::load(p).map_err(|e| e.to_string()),
    }
}

fn cmd_coeff(args: CoeffArgs) -> Result<(), String> {
    let file = load_config(&args.config)?;
    let purcell = file
        .merge(args.purcell, "purcell", Purcell::from_str)
        .map_err(|e| e.to_string())?
        .ok_or("missing --purcell")?;
    let detuning = file
        .merge(args.detuning, "detuning", |s| s.parse::<f64>())
        .map_err(|e| e.to_string())?
        .unwrap_or(0.0);
    let output = file
        .merge(args.output, "output", |s| {
            Ok::<_, std::convert::Infallible>(PathBuf::from(s))
        })
        .map_err(|e| e.to_string())?;

    let params = EmitterParams::new(purcell, detuning).map_err(|e| e.to_string())?;
    let c = compute_coefficients(&params);
    let lines = vec![
        format!("purcell={purcell}"),
        format!("detuning={}", fmt_f64(detuning)),
        format!("r={}", fmt_complex(c.r)),
        format!("t={}", fmt_complex(c.t)),
        format!("loss={}", fmt_f64(c.loss)),
        format!("p_s={}", fmt_f64(c.success_probability())),
    ];
    emit(&lines, output.as_ref()).map_err(|e| e.to_string())
}

fn cmd_sweep(args: SweepArgs) -> Result<(), String> {
    let file = load_config(&args.config)?;
    let fixed_purcell = file
        .merge(args.purcell, "purcell", Purcell::from_str)
        .map_err(|e| e.to_string())?;
    let fixed_detuning = file
        .merge(args.detuning, "detuning", |s| s.parse::<f64>())
        .map_err(|e| e.to_string())?
        .unwrap_or(0.0);
    let output = file
        .merge(args.output, "output", |s| {
            Ok::<_, std::convert::Infallible>(PathBuf::from(s))
        })
        .map_err(|e| e.to_string())?;

    if args.points == 0 {
        return Err("empty range: --points must be at least 1".into());
    }
    if !(args.from.is_finite() && args.to.is_finite()) || args.from > args.to {
        return Err(format!(
            "range must be monotone: from={} to={}",
            args.from, args.to
        ));
    }
    if args.points == 1 && args.from != args.to {
        return Err("a single-point sweep needs from == to".into());
    }

    let axis_name = match args.axis {
        SweepAxis::Purcell => "purcell",
        SweepAxis::Detuning => "detuning",
    };
    let mut lines = Vec::with_capacity(args.points + 1);
    lines.push(if args.protocols {
        format!("{axis_name},p_s,p1,p2,p3")
    } else {
        format!("{axis_name},p_s")
    });
    for i in 0..args.points {
        let x = if args.points == 1 {
            args.from
        } else {
            args.from + (args.to - args.from) * i as f64 / (args.points - 1) as f64
        };
        let params = match args.axis {
            SweepAxis::Purcell => {
                EmitterParams::new(Purcell::new(x).map_err(|e| e.to_string())?, fixed_detuning)
            }
            SweepAxis::Detuning => {
                let p = fixed_purcell.ok_or("sweeping the detuning requires a fixed --purcell")?;
                EmitterParams::new(p, x)
            }
        }
        .map_err(|e| e.to_string())?;
        let ps = compute_coefficients(&params).success_probability();
        if args.protocols {
            let (p1, p2, p3) = analytic_protocol_success(&params);
            lines.push(format!(
                "{},{},{},{},{}",
                fmt_f64(x),
                fmt_f64(ps),
                fmt_f64(p1),
                fmt_f64(p2),
                fmt_f64(p3)
            ));
        } else {
            lines.push(format!("{},{}", fmt_f64(x), fmt_f64(ps)));
        }
    }
    emit(&lines, output.as_ref()).map_err(|e| e.to_string())
}

struct RunSettings {
    params: EmitterParams,
    purcell: Purcell,
    detuning: f64,
    noise: NoiseParams,
    fidelity: Option<f64>,
    trials: Option<u64>,
    seed: Option<u64>,
    bins: Option<usize>,
    sigma: Option<f64>,
    no_wfc: bool,
    per_trial: Option<PathBuf>,
    output: Option<PathBuf>,
}

fn resolve_run(args: RunArgs) -> Result<(ProtocolName, RunSettings), String> {
    let file = load_config(&args.config)?;
    let purcell = file
        .merge(args.purcell, "purcell", Purcell::from_str)
        .map_err(|e| e.to_string())?
        .ok_or("missing --purcell")?;
    let detuning = file
        .merge(args.detuning, "detuning", |s| s.parse::<f64>())
        .map_err(|e| e.to_string())?
        .unwrap_or(0.0);
    let noise = file
        .merge(args.noise, "noise", parse_noise)
        .map_err(|e| e.to_string())?
        .unwrap_or_else(NoiseParams::identity);
    let fidelity = file
        .merge(args.fidelity, "fidelity", |s| s.parse::<f64>())
        .map_err(|e| e.to_string())?;
    let trials = file
        .merge(args.trials, "trials", |s| s.parse::<u64>())
        .map_err(|e| e.to_string())?;
    let seed = file
        .merge(args.seed, "seed", |s| s.parse::<u64>())
        .map_err(|e| e.to_string())?;
    let bins = file
        .merge(args.bins, "bins", |s| s.parse::<usize>())
        .map_err(|e| e.to_string())?;
    let sigma = file
        .merge(args.sigma, "sigma", |s| s.parse::<f64>())
        .map_err(|e| e.to_string())?;
    let output = file
        .merge(args.output, "output", |s| {
            Ok::<_, std::convert::Infallible>(PathBuf::from(s))
        })
        .map_err(|e| e.to_string())?;

    if args.enumerate && trials.is_some() {
        return Err("--enumerate and --trials are mutually exclusive".into());
    }
    if trials.is_some() && seed.is_none() {
        return Err("sample mode requires --seed".into());
    }
    // Explicit flags must be coherent with the protocol; config-file keys
    // are shared defaults and stay lenient.
    let spectral_flags = args.bins.is_some() || args.sigma.is_some();
    if spectral_flags && !matches!(args.protocol, ProtocolName::Creation) {
        return Err("--bins/--sigma apply to the creation protocol only".into());
    }
    if (bins.is_some() || sigma.is_some()) && trials.is_some() {
        return Err("spectral mode is enumerate-only; drop --trials".into());
    }
    if args.noise.is_some() && !matches!(args.protocol, ProtocolName::Creation) {
        return Err("--noise applies to the creation protocol only".into());
    }
    if args.fidelity.is_some() && !matches!(args.protocol, ProtocolName::Purify) {
        return Err("--fidelity applies to the purify protocol only".into());
    }
    let params = EmitterParams::new(purcell, detuning).map_err(|e| e.to_string())?;
    Ok((
        args.protocol,
        RunSettings {
            params,
            purcell,
            detuning,
            noise,
            fidelity,
            trials,
            seed,
            bins,
            sigma,
            no_wfc: args.no_wfc,
            per_trial: args.per_trial,
            output,
        },
    ))
}

fn cmd_run(args: RunArgs) -> Result<(), String> {
    let (protocol, s) = resolve_run(args)?;
    let mut lines: Vec<String> = Vec::new();
    lines.push(format!(
        "mode={}",
        if s.trials.is_some() {
            "sample"
        } else {
            "enumerate"
        }
    ));
    lines.push(format!(
        "protocol={}",
        match protocol {
            ProtocolName::Creation => "creation",
            ProtocolName::Swap => "swap",
            ProtocolName::Purify => "purify",
        }
    ));
    lines.push(format!("purcell={}", s.purcell));
    lines.push(format!("detuning={}", fmt_f64(s.detuning)));

    match protocol {
        ProtocolName::Creation => run_creation(&s, &mut lines)?,
        ProtocolName::Swap => run_swap(&s, &mut lines)?,
        ProtocolName::Purify => run_purify(&s, &mut lines)?,
    }
    emit(&lines, s.output.as_ref()).map_err(|e| e.to_string())
}

fn run_creation(s: &RunSettings, lines: &mut Vec<String>) -> Result<(), String> {
    let cfg = {
        let base = CreationConfig::new(s.params, s.noise);
        if s.no_wfc {
            base.without_wfc()
        } else {
            base
        }
    };
    lines.push(format!("noise_gamma={}", fmt_complex(s.noise.gamma())));
    lines.push(format!("noise_delta={}", fmt_complex(s.noise.delta())));
    lines.push(format!("wfc={}", cfg.wfc_enabled));

    if let Some(trials) = s.trials {
        let seed = s.seed.unwrap();
        let stats = sample_creation(&cfg, trials, seed).map_err(|e| e.to_string())?;
        lines.extend(stats.summary_lines().into_iter().skip(2)); // mode/protocol already emitted
        if let Some(path) = &s.per_trial {
            let results = map_trials(trials, |i| {
                let mut rng = trial_rng(seed, i);
                run_creation_trial(&cfg, &mut rng)
            });
            let mut rows = vec!["trial,herald,correction,fidelity".to_string()];
            for (i, r) in results.into_iter().enumerate() {
                let r = r.map_err(|e| e.to_string())?;
                rows.push(format!(
                    "{},{},{},{}",
                    i,
                    r.herald,
                    r.correction,
                    r.fidelity.map(fmt_f64).unwrap_or_default()
                ));
            }
            emit(&rows, Some(path)).map_err(|e| e.to_string())?;
        }
        return Ok(());
    }

    match (s.bins, s.sigma) {
        (None, None) => {
            let e = run_creation_enumerate(&cfg).map_err(|e| e.to_string())?;
            lines.push(format!(
                "success_probability={}",
                fmt_f64(e.success_probability)
            ));
            lines.push(format!(
                "herald_fail_probability={}",
                fmt_f64(e.herald_fail_probability)
            ));
            lines.push(format!("loss_probability={}", fmt_f64(e.loss_probability)));
            lines.push(format!("fidelity={}", fmt_f64(e.post_correction_fidelity)));
            let mut per_det = [0.0f64; 4];
            for b in &e.branches {
                if let HeraldOutcome::Detector(d) = b.herald {
                    per_det[d.index()] += b.probability;
                }
            }
            for (i, p) in per_det.iter().enumerate() {
                lines.push(format!("detector_D{}_probability={}", i + 1, fmt_f64(*p)));
            }
            let (p1, _, _) = analytic_protocol_success(&s.params);
            lines.push(format!("analytic_p1={}", fmt_f64(p1)));
        }
        (bins, sigma) => {
            let sigma = sigma.ok_or("spectral mode needs both --bins and --sigma")?;
            let bins = bins.unwrap_or(101);
            let wp = SpectralWavepacket::gaussian(sigma, bins).map_err(|e| e.to_string())?;
            let report = run_creation_spectral(&cfg, &wp).map_err(|e| e.to_string())?;
            lines.push(format!("spectral_bins={bins}"));
            lines.push(format!("spectral_sigma={}", fmt_f64(sigma)));
            lines.push(format!(
                "success_probability={}",
                fmt_f64(report.success_probability)
            ));
            lines.push(format!(
                "herald_fail_probability={}",
                fmt_f64(report.herald_fail_probability)
            ));
            lines.push(format!(
                "loss_probability={}",
                fmt_f64(report.loss_probability)
            ));
            lines.push(format!(
                "fidelity={}",
                fmt_f64(report.post_correction_fidelity)
            ));
            lines.push(format!(
                "overlap_p_s={}",
                fmt_f64(report.overlap_success_probability)
            ));
            for (det, w, f) in &report.detector_branches {
                lines.push(format!("detector_{det}_probability={}", fmt_f64(*w)));
                lines.push(format!("detector_{det}_fidelity={}", fmt_f64(*f)));
            }
        }
    }
    Ok(())
}

fn run_swap(s: &RunSettings, lines: &mut Vec<String>) -> Result<(), String> {
    if let Some(trials) = s.trials {
        let seed = s.seed.unwrap();
        let stats = sample_swapping(&s.params, trials, seed).map_err(|e| e.to_string())?;
        lines.extend(stats.summary_lines().into_iter().skip(2));
        if let Some(path) = &s.per_trial {
            let results = map_trials(trials, |i| {
                let mut rng = trial_rng(seed, i);
                run_swapping_trial(&s.params, &mut rng)
            });
            let mut rows = vec!["trial,herald,atom_c,atom_d,correction,fidelity".to_string()];
            for (i, r) in results.into_iter().enumerate() {
                let r = r.map_err(|e| e.to_string())?;
                rows.push(format!(
                    "{},{},{},{},{},{}",
                    i,
                    r.herald,
                    r.atom_c.map(|v| v.to_string()).unwrap_or_default(),
                    r.atom_d.map(|v| v.to_string()).unwrap_or_default(),
                    r.correction.map(|c| c.to_string()).unwrap_or_default(),
                    r.fidelity.map(fmt_f64).unwrap_or_default()
                ));
            }
            emit(&rows, Some(path)).map_err(|e| e.to_string())?;
        }
        return Ok(());
    }
    let e = run_swapping_enumerate(&s.params).map_err(|e| e.to_string())?;
    lines.push(format!(
        "success_probability={}",
        fmt_f64(e.success_probability)
    ));
    lines.push(format!(
        "herald_fail_probability={}",
        fmt_f64(e.herald_fail_probability)
    ));
    lines.push(format!("loss_probability={}", fmt_f64(e.loss_probability)));
    lines.push(format!("fidelity={}", fmt_f64(e.post_correction_fidelity)));
    let (_, p2, _) = analytic_protocol_success(&s.params);
    lines.push(format!("analytic_p2={}", fmt_f64(p2)));
    Ok(())
}

fn run_purify(s: &RunSettings, lines: &mut Vec<String>) -> Result<(), String> {
    let f = s.fidelity.ok_or("purify requires --fidelity")?;
    lines.push(format!("input_fidelity={}", fmt_f64(f)));
    if let Some(trials) = s.trials {
        let seed = s.seed.unwrap();
        let stats = sample_purification(f, &s.params, trials, seed).map_err(|e| e.to_string())?;
        lines.extend(stats.summary_lines().into_iter().skip(2));
        if let Some(path) = &s.per_trial {
            let results = map_trials(trials, |i| {
                let mut rng = trial_rng(seed, i);
                run_purification_trial(f, &s.params, &mut rng)
            });
            let mut rows = vec!["trial,herald,kept,correction,fidelity".to_string()];
            for (i, r) in results.into_iter().enumerate() {
                let r = r.map_err(|e| e.to_string())?;
                rows.push(format!(
                    "{},{},{},{},{}",
                    i,
                    r.herald,
                    r.kept,
                    r.correction.map(|c| c.to_string()).unwrap_or_default(),
                    r.output_fidelity.map(fmt_f64).unwrap_or_default()
                ));
            }
            emit(&rows, Some(path)).map_err(|e| e.to_string())?;
        }
        return Ok(());
    }
    let e = run_purification_enumerate(f, &s.params).map_err(|e| e.to_string())?;
    lines.push(format!("F_out={}", fmt_f64(e.output_fidelity)));
    lines.push(format!(
        "keep_probability={}",
        fmt_f64(e.conditional_keep_probability)
    ));
    lines.push(format!(
        "scattering_success={}",
        fmt_f64(e.scattering_success_probability)
    ));
    lines.push(format!(
        "overall_keep_probability={}",
        fmt_f64(e.overall_keep_probability)
    ));
    lines.push(format!(
        "herald_fail_probability={}",
        fmt_f64(e.herald_fail_probability)
    ));
    lines.push(format!("loss_probability={}", fmt_f64(e.loss_probability)));
    lines.push(format!(
        "discard_probability={}",
        fmt_f64(e.discard_probability)
    ));
    Ok(())
}
