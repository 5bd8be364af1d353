//! Command-line front end: compile scripts, run simulations and evaluate the
//! analytical models.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};

use ariel_core::gossip::{self, ClosedForm, PermKind};
use ariel_core::lang;
use ariel_core::reliability::{self, alpha_chain, spare_chain, Model, ReliabilityParams, SPARE_USEFUL};
use ariel_core::rcode::render_listing;
use ariel_core::simnet::{Scenario, World};
use ariel_core::tom::{simulate_congestion, AlarmMode, CongestionParams};

#[derive(Parser, Debug)]
#[command(name = "ariel", version, about = "ARIEL compiler, simulator and analysis tools")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Translate a script into r-code and its configuration tables.
    Compile {
        #[arg(short = 'i', long = "input")]
        input: PathBuf,
        /// Output directory (defaults to the script's directory).
        #[arg(short = 'o', long = "outdir")]
        outdir: Option<PathBuf>,
        /// Also print the r-code listing.
        #[arg(long)]
        listing: bool,
        /// Show include and substitution messages.
        #[arg(long)]
        verbose: bool,
    },
    /// Compile a script and simulate it under a scenario.
    Run {
        #[arg(short = 'i', long = "input")]
        input: PathBuf,
        #[arg(long)]
        scenario: PathBuf,
        /// Write the trace here instead of standard output.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Simulate one gossip exchange among N+1 voters.
    Gossip {
        #[arg(long = "n")]
        n: usize,
        #[arg(long, value_enum)]
        perm: PermArg,
        #[arg(long, default_value_t = 1)]
        sessions: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the run table as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Print the run table.
        #[arg(long)]
        table: bool,
    },
    /// Reliability curves of the redundancy schemes.
    Reliability {
        #[arg(long, value_enum)]
        model: ModelArg,
        #[arg(long)]
        lambda: f64,
        #[arg(long, default_value_t = 1.0)]
        coverage: f64,
        /// Probability that a fault is transient.
        #[arg(long = "T", default_value_t = 0.0)]
        transient: f64,
        /// Probability that recovery from a transient fault succeeds.
        #[arg(long = "R", default_value_t = 0.0)]
        recover: f64,
        #[arg(long)]
        tmax: f64,
        #[arg(long, default_value_t = 101)]
        points: usize,
        /// Check the closed form against the numeric Markov solution.
        #[arg(long)]
        verify: bool,
    },
    /// Timeout-manager congestion experiment.
    Tombench {
        #[arg(long, default_value_t = 1000)]
        timeouts: usize,
        #[arg(long, default_value_t = 100_000_000)]
        horizon: u64,
        #[arg(long, default_value_t = 20_000)]
        delta: u64,
        #[arg(long, default_value_t = 0)]
        workers: usize,
        #[arg(long, value_enum, default_value_t = ModeArg::Wait)]
        mode: ModeArg,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Write every alarm's delay as CSV.
        #[arg(long)]
        delays: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum PermArg {
    Identity,
    Random,
    Pipelined,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModelArg {
    Tmr,
    TmrSpare,
    TmrAlpha,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Wait,
    Cpu,
}

/// Failure classes mapped onto exit codes.
enum Failure {
    User(anyhow::Error),
    Internal(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::User(e)
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let res = match cli.cmd {
        Cmd::Compile { input, outdir, listing, verbose } => compile(&input, outdir, listing, verbose),
        Cmd::Run { input, scenario, trace } => run(&input, &scenario, trace),
        Cmd::Gossip { n, perm, sessions, seed, csv, table } => gossip_cmd(n, perm, sessions, seed, csv, table),
        Cmd::Reliability { model, lambda, coverage, transient, recover, tmax, points, verify } => {
            reliability_cmd(model, lambda, coverage, transient, recover, tmax, points, verify)
        }
        Cmd::Tombench { timeouts, horizon, delta, workers, mode, seed, delays } => tombench(timeouts, horizon, delta, workers, mode, seed, delays),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::User(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Internal(e)) => {
            eprintln!("internal error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn read(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn compile_script(input: &Path, verbose: bool) -> Result<lang::CompileOutput, Failure> {
    let src = read(input)?;
    let dir = input.parent().map(Path::to_path_buf).unwrap_or_default();
    let loader = move |name: &str| fs::read_to_string(dir.join(name)).ok();
    let name = input.file_name().map_or_else(|| input.display().to_string(), |n| n.to_string_lossy().into_owned());
    Ok(lang::compile(&src, &name, &loader, verbose))
}

fn compile(input: &Path, outdir: Option<PathBuf>, listing: bool, verbose: bool) -> Outcome {
    let out = compile_script(input, verbose)?;
    let (Some(program), Some(bundle)) = (&out.program, &out.bundle) else {
        for l in &out.transcript {
            eprintln!("{l}");
        }
        return Err(Failure::User(anyhow::anyhow!("{} rejected", input.display())));
    };
    for l in &out.transcript {
        println!("{l}");
    }
    let outdir = outdir.unwrap_or_else(|| input.parent().map(Path::to_path_buf).unwrap_or_default());
    let stem = input.file_stem().map_or_else(|| "out".to_string(), |s| s.to_string_lossy().into_owned());
    let lines = lang::emit_artifacts(program, bundle, &outdir, &stem).map_err(|e| Failure::User(e.into()))?;
    for l in lines {
        println!("{l}");
    }
    if listing {
        print!("{}", render_listing(program));
    }
    Ok(())
}

fn run(input: &Path, scenario: &Path, trace: Option<PathBuf>) -> Outcome {
    let out = compile_script(input, false)?;
    let (Some(program), Some(bundle)) = (out.program, out.bundle) else {
        for l in &out.transcript {
            eprintln!("{l}");
        }
        return Err(Failure::User(anyhow::anyhow!("{} rejected", input.display())));
    };
    let sc = Scenario::parse(&read(scenario)?).map_err(|e| Failure::User(e.into()))?;
    let mut world = World::new(program, bundle, sc).map_err(|e| Failure::User(e.into()))?;
    world.run();
    let text = world.trace_text();
    match trace {
        Some(p) => {
            fs::write(&p, text).with_context(|| format!("cannot write {}", p.display()))?;
            println!("{} trace events written to {}", world.trace().len(), p.display());
            println!("managers at end: {:?}", world.managers());
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn gossip_cmd(n: usize, perm: PermArg, sessions: usize, seed: u64, csv: Option<PathBuf>, table: bool) -> Outcome {
    let kind = match perm {
        PermArg::Identity => PermKind::Identity,
        PermArg::Random => PermKind::PseudoRandom,
        PermArg::Pipelined => PermKind::Pipelined,
    };
    let run = gossip::simulate(n, kind, sessions, seed).map_err(|e| Failure::User(e.into()))?;
    println!("N={} perm={} sessions={}", n, format!("{perm:?}").to_lowercase(), sessions);
    println!("λ={}", run.lambda());
    println!("μ={:.2}", run.mu());
    println!("ε={:.2}%", 100.0 * run.epsilon());
    println!("ν̄={}", run.nu.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" "));
    if sessions == 1 {
        if let Some(cf) = ClosedForm::predict(n as u64, kind) {
            let ok = cf.lambda == run.lambda() as u64;
            println!("closed form: λ={} μ={:.2} ε={:.2}% ({})", cf.lambda, cf.mu, 100.0 * cf.epsilon, if ok { "match" } else { "MISMATCH" });
            if !ok {
                return Err(Failure::Internal(anyhow::anyhow!("simulation disagrees with the closed form")));
            }
        }
    }
    if table {
        print!("{}", gossip::render_table(&run));
    }
    if let Some(p) = csv {
        let text = gossip::to_csv(&run).map_err(|e| Failure::Internal(e.into()))?;
        fs::write(&p, text).with_context(|| format!("cannot write {}", p.display()))?;
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn reliability_cmd(model: ModelArg, lambda: f64, coverage: f64, transient: f64, recover: f64, tmax: f64, points: usize, verify: bool) -> Outcome {
    let p = ReliabilityParams { lambda_fail: lambda, coverage_c: coverage, transient_t: transient, recover_r: recover };
    p.validate().map_err(|e| Failure::User(e.into()))?;
    if !(tmax > 0.0) || !tmax.is_finite() {
        return Err(Failure::User(anyhow::anyhow!("--tmax must be positive")));
    }
    let m = match model {
        ModelArg::Tmr => Model::Tmr,
        ModelArg::TmrSpare => Model::TmrSpare,
        ModelArg::TmrAlpha => Model::TmrAlpha,
    };
    let simplex = reliability::curve(Model::Simplex, &p, tmax, points).map_err(|e| Failure::User(e.into()))?;
    let closed = reliability::curve(m, &p, tmax, points).map_err(|e| Failure::User(e.into()))?;
    let oracle = if verify {
        let chain = match m {
            Model::TmrSpare => spare_chain(&p).map(|c| (c, SPARE_USEFUL.to_vec())),
            Model::TmrAlpha => alpha_chain(&p).map(|c| (c, vec!["3", "2"])),
            _ => alpha_chain(&ReliabilityParams { transient_t: 0.0, recover_r: 0.0, ..p }).map(|c| (c, vec!["3", "2"])),
        }
        .map_err(|e| Failure::Internal(e.into()))?;
        Some(chain.0.sum_curve(&closed.t, &chain.1).map_err(|e| Failure::Internal(e.into()))?)
    } else {
        None
    };
    println!("t,simplex,{}{}", model_name(model), if oracle.is_some() { ",markov" } else { "" });
    for i in 0..closed.t.len() {
        match &oracle {
            Some(o) => println!("{},{},{},{}", closed.t[i], simplex.values[i], closed.values[i], o.values[i]),
            None => println!("{},{},{}", closed.t[i], simplex.values[i], closed.values[i]),
        }
    }
    if let Some(o) = oracle {
        let worst = closed.values.iter().zip(&o.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        eprintln!("max |closed form - markov| = {worst:.3e}");
        if worst > 1e-6 {
            return Err(Failure::Internal(anyhow::anyhow!("closed form and Markov solution differ by {worst:.3e}")));
        }
    }
    Ok(())
}

fn model_name(m: ModelArg) -> &'static str {
    match m {
        ModelArg::Tmr => "tmr",
        ModelArg::TmrSpare => "tmr-spare",
        ModelArg::TmrAlpha => "tmr-alpha",
    }
}

fn tombench(timeouts: usize, horizon: u64, delta: u64, workers: usize, mode: ModeArg, seed: u64, delays: Option<PathBuf>) -> Outcome {
    let params = CongestionParams {
        timeouts,
        horizon,
        delta,
        workers,
        mode: match mode {
            ModeArg::Wait => AlarmMode::Wait,
            ModeArg::Cpu => AlarmMode::Cpu,
        },
        seed,
        ..CongestionParams::default()
    };
    let rep = simulate_congestion(&params).map_err(|e| Failure::User(e.into()))?;
    println!("timeouts,workers,mode,violations,max_delay,mean_delay");
    let mode = match mode {
        ModeArg::Wait => "wait",
        ModeArg::Cpu => "cpu",
    };
    println!("{},{},{},{},{},{:.3}", timeouts, workers, mode, rep.violations, rep.max_delay, rep.mean_delay);
    if let Some(p) = delays {
        let mut text = String::from("alarm,delay\n");
        for (i, d) in rep.delays.iter().enumerate() {
            text.push_str(&format!("{i},{d}\n"));
        }
        fs::write(&p, text).with_context(|| format!("cannot write {}", p.display()))?;
    }
    Ok(())
}
