//! Browser bindings for the tcpnc simulator.
//!
//! Every export takes and returns JSON strings. The `*_json` functions hold
//! the logic and are plain Rust so they can be tested natively.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use tcpnc::decoder::{Decoder, DecoderConfig, Outcome};
use tcpnc::encoder::{Encoder, EncoderConfig};
use tcpnc::netsim::{self, Mode, SessionMetrics, SimConfig, TracePoint};
use tcpnc::segment::Segment;
use wasm_bindgen::prelude::*;

/// Session parameters in units a form can hold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DemoConfig {
    pub mode: Mode,
    pub loss: f64,
    pub redundancy: f64,
    pub window: usize,
    pub rate_mbps: f64,
    pub queue: usize,
    pub delay_ms: f64,
    pub duration_s: f64,
    pub seed: u64,
}

impl Default for DemoConfig {
    fn default() -> Self {
        DemoConfig {
            mode: Mode::TcpNc,
            loss: 0.05,
            redundancy: 1.06,
            window: 3,
            rate_mbps: 6.0,
            queue: 5,
            delay_ms: 10.0,
            duration_s: 10.0,
            seed: 1,
        }
    }
}

/// Longest simulated session a page may request.
pub const MAX_DURATION_S: f64 = 120.0;

impl DemoConfig {
    pub fn sim_config(&self) -> Result<SimConfig, String> {
        if !(self.duration_s > 0.0 && self.duration_s <= MAX_DURATION_S) {
            return Err(format!("duration must be in (0, {MAX_DURATION_S}] s"));
        }
        if !(self.rate_mbps > 0.0 && self.rate_mbps.is_finite()) {
            return Err("rate must be positive".into());
        }
        if !(self.delay_ms >= 0.0 && self.delay_ms.is_finite()) {
            return Err("delay must be non-negative".into());
        }
        let cfg = SimConfig {
            mode: self.mode,
            loss_rate: self.loss,
            link_rate: (self.rate_mbps * 1e6).round() as u64,
            bottleneck_queue: self.queue,
            prop_delay: Duration::from_secs_f64(self.delay_ms / 1e3),
            duration: Duration::from_secs_f64(self.duration_s),
            seed: self.seed,
            redundancy: self.redundancy,
            window: self.window,
            verify_stream: false,
            ..SimConfig::default()
        };
        cfg.validate().map_err(|e| e.to_string())?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SessionReport {
    pub metrics: SessionMetrics,
    pub trace: Vec<TracePoint>,
}

/// Runs one session and samples its progress every `sample_ms`.
pub fn session_json(config: &str, sample_ms: u32) -> Result<String, String> {
    let demo: DemoConfig = serde_json::from_str(config).map_err(|e| e.to_string())?;
    let cfg = demo.sim_config()?;
    let every = Duration::from_millis(u64::from(sample_ms.max(1)));
    let (metrics, trace) = netsim::run_session_traced(&cfg, every).map_err(|e| e.to_string())?;
    to_json(&SessionReport { metrics, trace })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparePoint {
    pub loss: f64,
    pub tcp_bps: f64,
    pub tcpnc_bps: f64,
}

/// Mean goodput of TCP and TCP/NC at each loss rate, over `seeds` seeds.
/// Sessions run one after another; the page has no worker threads.
pub fn compare_json(config: &str, losses: &[f64], seeds: u32) -> Result<String, String> {
    let demo: DemoConfig = serde_json::from_str(config).map_err(|e| e.to_string())?;
    if seeds == 0 {
        return Err("need at least one seed".into());
    }
    let mut points = Vec::with_capacity(losses.len());
    for &loss in losses {
        let mean = |mode| -> Result<f64, String> {
            let mut sum = 0.0;
            for i in 0..seeds {
                let d = DemoConfig { mode, loss, seed: demo.seed + u64::from(i), ..demo.clone() };
                sum += netsim::run_session(&d.sim_config()?).map_err(|e| e.to_string())?.goodput_bps;
            }
            Ok(sum / f64::from(seeds))
        };
        points.push(ComparePoint { loss, tcp_bps: mean(Mode::Tcp)?, tcpnc_bps: mean(Mode::TcpNc)? });
    }
    to_json(&points)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TokenStep {
    /// Coded packet index in emission order.
    pub index: usize,
    /// Segments handed to the encoder so far.
    pub segments: u32,
    pub lost: bool,
    /// "innovative", "redundant", "full" or "lost".
    pub outcome: &'static str,
    /// Segments acknowledged after this packet, in units of one segment.
    pub ack_segments: u32,
    pub duplicate: bool,
    /// Segments sent minus innovative packets received.
    pub deficit: u32,
}

const TOKEN_SEG: u32 = 100;

/// Replays `segments` equal-sized segments through an encoder and decoder
/// with the given coded packets lost, reporting the ACK after each one.
pub fn tokens(redundancy: f64, window: usize, segments: u32, lost: &[usize]) -> Result<Vec<TokenStep>, String> {
    if segments == 0 || segments > 1000 {
        return Err("segments must be in 1..=1000".into());
    }
    let cfg = EncoderConfig::new(redundancy, window)
        .map_err(|e| e.to_string())?
        .with_seed(7)
        .with_buffer_cap(segments as usize);
    let mut enc = Encoder::new(cfg, 0).map_err(|e| e.to_string())?;
    let mut dec = Decoder::new(DecoderConfig { buffer_cap: segments as usize, initial_seq: 0, slot_bytes: TOKEN_SEG });
    let (mut steps, mut innovative, mut prev_ack) = (Vec::new(), 0u32, 0);
    for a in 1..=segments {
        let seq = (a - 1) * TOKEN_SEG;
        let payload = (0..TOKEN_SEG).map(|i| (seq + i) as u8).collect();
        for pkt in enc.ingest_segment(&Segment::data(1, 2, seq, payload)).map_err(|e| e.to_string())? {
            let index = steps.len();
            let mut step = TokenStep {
                index,
                segments: a,
                lost: lost.contains(&index),
                outcome: "lost",
                ack_segments: prev_ack / TOKEN_SEG,
                duplicate: false,
                deficit: a - innovative,
            };
            if !step.lost {
                let rec = dec.receive_coded(&pkt).ok_or("coded packet rejected")?;
                step.outcome = match rec.outcome {
                    Outcome::Innovative => "innovative",
                    Outcome::Redundant => "redundant",
                    Outcome::BufferFull => "full",
                };
                if rec.outcome == Outcome::Innovative {
                    innovative += 1;
                }
                step.deficit = a.saturating_sub(innovative);
                step.duplicate = rec.ack == prev_ack;
                step.ack_segments = rec.ack / TOKEN_SEG;
                prev_ack = rec.ack;
            }
            steps.push(step);
        }
    }
    Ok(steps)
}

pub fn tokens_json(redundancy: f64, window: usize, segments: u32, lost: &[usize]) -> Result<String, String> {
    to_json(&tokens(redundancy, window, segments, lost)?)
}

fn to_json<T: Serialize>(v: &T) -> Result<String, String> {
    serde_json::to_string(v).map_err(|e| e.to_string())
}

#[wasm_bindgen(js_name = defaultConfig)]
pub fn default_config() -> String {
    serde_json::to_string(&DemoConfig::default()).expect("config serializes")
}

#[wasm_bindgen(js_name = runSession)]
pub fn run_session(config: &str, sample_ms: u32) -> Result<String, JsError> {
    session_json(config, sample_ms).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = compareModes)]
pub fn compare_modes(config: &str, losses: Vec<f64>, seeds: u32) -> Result<String, JsError> {
    compare_json(config, &losses, seeds).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = tokenTrace)]
pub fn token_trace(redundancy: f64, window: usize, segments: u32, lost: Vec<u32>) -> Result<String, JsError> {
    let lost: Vec<usize> = lost.into_iter().map(|i| i as usize).collect();
    tokens_json(redundancy, window, segments, &lost).map_err(|e| JsError::new(&e))
}
