//! Experiment runner behind the `tcpnc-exp` binary.
//!
//! Runs single sessions or sweeps one parameter, writing one CSV row per
//! session plus a `mean` row per swept value. Incomplete sessions are listed
//! but left out of the mean.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::time::Duration;

use clap::{Parser, ValueEnum};
use rayon::prelude::*;
use thiserror::Error;

use crate::netsim::{run_session, Mode, SessionMetrics, SimConfig, SimError};

pub const CSV_HEADER: &str =
    "axis,value,iteration,seed,goodput_bps,delivered_bytes,timeouts,visible_losses,completed";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Axis {
    Loss,
    Redundancy,
    Window,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::Loss => "loss",
            Axis::Redundancy => "redundancy",
            Axis::Window => "window",
        }
    }

    fn apply(self, cfg: &mut SimConfig, value: f64) {
        match self {
            Axis::Loss => cfg.loss_rate = value,
            Axis::Redundancy => cfg.redundancy = value,
            Axis::Window => cfg.window = value as usize,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Tcp,
    Tcpnc,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Tcp => Mode::Tcp,
            ModeArg::Tcpnc => Mode::TcpNc,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "tcpnc-exp", about = "Simulated TCP and TCP/NC goodput experiments")]
struct Args {
    #[arg(long, value_enum, default_value = "tcpnc")]
    mode: ModeArg,
    /// Forward-path loss probability.
    #[arg(long, default_value_t = 0.0)]
    loss: f64,
    /// Redundancy factor.
    #[arg(long = "R", default_value_t = 1.0)]
    redundancy: f64,
    /// Coding window size in packets.
    #[arg(long = "W", default_value_t = 1)]
    window: usize,
    #[arg(long, default_value_t = 1460)]
    mss: u32,
    /// Link rate in bits per second.
    #[arg(long, default_value_t = 6_000_000)]
    rate: u64,
    /// Bottleneck queue size in packets.
    #[arg(long, default_value_t = 5)]
    queue: usize,
    /// One-way propagation delay in seconds.
    #[arg(long, default_value_t = 0.01)]
    delay: f64,
    /// Session length in seconds.
    #[arg(long, default_value_t = 20.0)]
    duration: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Sessions per point, seeded seed, seed+1, ... Defaults to 4 for sweeps, 1 otherwise.
    #[arg(long)]
    iterations: Option<u32>,
    #[arg(long, value_enum, requires = "values")]
    sweep: Option<Axis>,
    /// Comma-separated values for the swept parameter.
    #[arg(long, value_delimiter = ',', requires = "sweep")]
    values: Vec<f64>,
    /// Run plain TCP and TCP/NC at every point.
    #[arg(long)]
    compare: bool,
    /// Write CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("cannot write {path}: {source}")]
    Output { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Sim(SimError::InvalidConfig(_)) => 2,
            CliError::Sim(SimError::Encoder(_)) => 2,
            CliError::Output { .. } => 1,
        }
    }
}

/// One or more sessions per swept value.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub axis: Axis,
    pub values: Vec<f64>,
    pub base: SimConfig,
    pub modes: Vec<Mode>,
    pub iterations: u32,
    /// Emit a mean row per value.
    pub aggregate: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointRun {
    pub mode: Mode,
    pub value: f64,
    pub iteration: u32,
    pub seed: u64,
    pub metrics: SessionMetrics,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointSummary {
    pub mode: Mode,
    pub value: f64,
    /// Mean over completed sessions; zero if none completed.
    pub goodput_bps: f64,
    pub delivered_bytes: f64,
    pub timeouts: f64,
    pub visible_losses: f64,
    pub completed: u32,
    pub total: u32,
}

impl SweepSpec {
    pub fn config(&self, mode: Mode, value: f64, iteration: u32) -> SimConfig {
        let mut cfg = SimConfig {
            mode,
            seed: self.base.seed.wrapping_add(iteration as u64),
            ..self.base.clone()
        };
        self.axis.apply(&mut cfg, value);
        cfg
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.iterations == 0 {
            return Err(CliError::Usage("--iterations must be at least 1".into()));
        }
        if self.values.is_empty() {
            return Err(CliError::Usage("--values must not be empty".into()));
        }
        for &v in &self.values {
            if !v.is_finite() {
                return Err(CliError::Usage(format!("value {v} is not finite")));
            }
            if self.axis == Axis::Window && (v.fract() != 0.0 || v < 1.0) {
                return Err(CliError::Usage(format!("window value {v} is not a positive integer")));
            }
            for &mode in &self.modes {
                self.config(mode, v, 0).validate()?;
            }
        }
        Ok(())
    }

    /// Runs every session, in parallel, returning them in (mode, value,
    /// iteration) order.
    pub fn run(&self) -> Result<Vec<PointRun>, CliError> {
        self.validate()?;
        let jobs: Vec<(Mode, f64, u32)> = self
            .modes
            .iter()
            .flat_map(|&m| {
                self.values
                    .iter()
                    .flat_map(move |&v| (0..self.iterations).map(move |i| (m, v, i)))
            })
            .collect();
        jobs.into_par_iter()
            .map(|(mode, value, iteration)| {
                let cfg = self.config(mode, value, iteration);
                let metrics = run_session(&cfg)?;
                Ok(PointRun { mode, value, iteration, seed: cfg.seed, metrics })
            })
            .collect()
    }
}

/// Groups runs by (mode, value), preserving order.
pub fn summarize(runs: &[PointRun]) -> Vec<PointSummary> {
    let mut out: Vec<PointSummary> = Vec::new();
    let mut i = 0;
    while i < runs.len() {
        let (mode, value) = (runs[i].mode, runs[i].value);
        let group: Vec<&PointRun> = runs[i..]
            .iter()
            .take_while(|r| r.mode == mode && r.value == value)
            .collect();
        i += group.len();
        let done: Vec<&SessionMetrics> =
            group.iter().map(|r| &r.metrics).filter(|m| m.completed).collect();
        let mean = |f: &dyn Fn(&SessionMetrics) -> f64| {
            if done.is_empty() {
                0.0
            } else {
                done.iter().map(|m| f(m)).sum::<f64>() / done.len() as f64
            }
        };
        out.push(PointSummary {
            mode,
            value,
            goodput_bps: mean(&|m| m.goodput_bps),
            delivered_bytes: mean(&|m| m.delivered_bytes as f64),
            timeouts: mean(&|m| m.timeouts as f64),
            visible_losses: mean(&|m| m.visible_losses as f64),
            completed: done.len() as u32,
            total: group.len() as u32,
        });
    }
    out
}

fn axis_label(axis: Axis, mode: Mode, paired: bool) -> String {
    if paired {
        format!("{}@{}", axis.name(), mode)
    } else {
        axis.name().to_string()
    }
}

/// Renders runs as CSV, per-session rows followed by the point's mean row.
pub fn to_csv(spec: &SweepSpec, runs: &[PointRun]) -> String {
    let paired = spec.modes.len() > 1;
    let summaries = summarize(runs);
    let mut csv = String::new();
    csv.push_str(CSV_HEADER);
    csv.push('\n');
    let mut rows = runs.iter().peekable();
    for s in &summaries {
        let label = axis_label(spec.axis, s.mode, paired);
        while let Some(r) = rows.next_if(|r| r.mode == s.mode && r.value == s.value) {
            let m = &r.metrics;
            let _ = writeln!(
                csv,
                "{label},{},{},{},{:.1},{},{},{},{}",
                r.value, r.iteration, r.seed, m.goodput_bps, m.delivered_bytes, m.timeouts, m.visible_losses, m.completed
            );
        }
        if spec.aggregate {
            let _ = writeln!(
                csv,
                "{label},{},mean,{},{:.1},{:.1},{:.2},{:.2},{}/{}",
                s.value, spec.base.seed, s.goodput_bps, s.delivered_bytes, s.timeouts, s.visible_losses, s.completed, s.total
            );
        }
    }
    csv
}

fn secs(name: &str, v: f64) -> Result<Duration, CliError> {
    Duration::try_from_secs_f64(v)
        .map_err(|_| CliError::Usage(format!("--{name} {v} is not a valid number of seconds")))
}

fn spec_from_args(a: &Args) -> Result<SweepSpec, CliError> {
    let base = SimConfig {
        mode: a.mode.into(),
        loss_rate: a.loss,
        link_rate: a.rate,
        bottleneck_queue: a.queue,
        prop_delay: secs("delay", a.delay)?,
        duration: secs("duration", a.duration)?,
        seed: a.seed,
        redundancy: a.redundancy,
        window: a.window,
        mss: a.mss,
        verify_stream: false,
        ..SimConfig::default()
    };
    let modes = if a.compare { vec![Mode::Tcp, Mode::TcpNc] } else { vec![base.mode] };
    let (axis, values, aggregate, default_iters) = match a.sweep {
        Some(axis) => (axis, a.values.clone(), true, 4),
        None => (Axis::Loss, vec![a.loss], a.iterations.is_some_and(|n| n > 1), 1),
    };
    Ok(SweepSpec {
        axis,
        values,
        base,
        modes,
        iterations: a.iterations.unwrap_or(default_iters),
        aggregate,
    })
}

/// Parses `argv` (program name first), runs, and writes CSV. Returns the
/// process exit code.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(argv) {
        Ok(a) => a,
        Err(e) => {
            let _ = write!(stderr, "{e}");
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&args, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

fn execute(args: &Args, stdout: &mut dyn Write) -> Result<(), CliError> {
    let spec = spec_from_args(args)?;
    let runs = spec.run()?;
    let csv = to_csv(&spec, &runs);
    match &args.out {
        Some(path) => fs::write(path, csv).map_err(|source| CliError::Output { path: path.clone(), source }),
        None => stdout
            .write_all(csv.as_bytes())
            .map_err(|source| CliError::Output { path: "<stdout>".into(), source }),
    }
}
