//! Deterministic discrete-event simulation of one TCP or TCP/NC session.
//!
//! Forward path: sender -> Bernoulli loss element -> drop-tail queue ->
//! link serialization at `link_rate` -> propagation delay -> receiver.
//! The return path is a pure propagation delay with optional loss.
//! Losses are injected before the queue, so they are independent of
//! congestion. Time is integer nanoseconds, carried as [`Duration`].

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};
use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::decoder::{Decoder, DecoderConfig};
use crate::encoder::{Encoder, EncoderConfig, EncoderError};
use crate::segment::{Ack, Segment, IP_HEADER_LEN, TCP_HEADER_LEN};
use crate::tcp_reno::{stream_bytes, RenoConfig, RenoReceiver, RenoSender};
use crate::wire::Frame;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Tcp,
    TcpNc,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Tcp => "tcp",
            Mode::TcpNc => "tcpnc",
        })
    }
}

impl FromStr for Mode {
    type Err = SimError;
    fn from_str(s: &str) -> Result<Mode, SimError> {
        match s {
            "tcp" => Ok(Mode::Tcp),
            "tcpnc" => Ok(Mode::TcpNc),
            other => Err(SimError::InvalidConfig(format!("unknown mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Encoder(#[from] EncoderError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub mode: Mode,
    /// Forward-path frame loss probability, applied before the queue.
    pub loss_rate: f64,
    pub reverse_loss_rate: f64,
    /// Bits per second.
    pub link_rate: u64,
    /// Frames that may wait behind the one being transmitted.
    pub bottleneck_queue: usize,
    pub prop_delay: Duration,
    pub duration: Duration,
    pub seed: u64,
    pub redundancy: f64,
    pub window: usize,
    pub mss: u32,
    pub encoder_cap: usize,
    pub decoder_cap: usize,
    /// Delayed ACKs at the plain-TCP receiver. TCP/NC ACKs every frame.
    pub tcp_delayed_ack: bool,
    pub short_segment_prob: f64,
    pub repacketize_prob: f64,
    /// A session with no application progress during this final stretch is
    /// reported as stalled. Defaults to a quarter of the duration, at least 1 s.
    pub stall_window: Option<Duration>,
    /// Hash the delivered stream and the matching source prefix.
    pub verify_stream: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            mode: Mode::TcpNc,
            loss_rate: 0.0,
            reverse_loss_rate: 0.0,
            link_rate: 6_000_000,
            bottleneck_queue: 5,
            prop_delay: Duration::from_millis(10),
            duration: Duration::from_secs(20),
            seed: 1,
            redundancy: 1.0,
            window: 1,
            mss: 1460,
            encoder_cap: 100,
            decoder_cap: 100,
            tcp_delayed_ack: false,
            short_segment_prob: 0.0,
            repacketize_prob: 0.0,
            stall_window: None,
            verify_stream: true,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::InvalidConfig(m));
        if !(0.0..1.0).contains(&self.loss_rate) {
            return bad(format!("loss rate {} outside [0, 1)", self.loss_rate));
        }
        if !(0.0..1.0).contains(&self.reverse_loss_rate) {
            return bad(format!("reverse loss rate {} outside [0, 1)", self.reverse_loss_rate));
        }
        if self.link_rate == 0 {
            return bad("link rate must be positive".into());
        }
        if self.duration.is_zero() {
            return bad("duration must be positive".into());
        }
        if self.mss == 0 || self.mss > u16::MAX as u32 {
            return bad(format!("mss {} outside 1..=65535", self.mss));
        }
        for (name, p) in [("short segment", self.short_segment_prob), ("repacketize", self.repacketize_prob)] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} probability {p} outside [0, 1]"));
            }
        }
        if self.mode == Mode::TcpNc {
            EncoderConfig::new(self.redundancy, self.window)?;
            if self.window == 0 || self.window > 255 {
                return bad(format!("coding window {} outside 1..=255", self.window));
            }
            if self.encoder_cap == 0 || self.decoder_cap == 0 {
                return bad("coding buffers need a positive capacity".into());
            }
        }
        Ok(())
    }

    fn stall_window(&self) -> Duration {
        self.stall_window
            .unwrap_or_else(|| (self.duration / 4).max(Duration::from_secs(1)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionMetrics {
    /// Application bits delivered in order per second of session time.
    pub goodput_bps: f64,
    pub delivered_bytes: u64,
    pub coded_sent: u64,
    pub frames_sent: u64,
    pub frames_arrived: u64,
    pub frames_in_flight: u64,
    pub losses_injected: u64,
    pub queue_drops: u64,
    pub max_queue: usize,
    pub timeouts: u64,
    pub fast_retransmits: u64,
    /// Loss events TCP noticed: fast retransmits plus timeouts.
    pub visible_losses: u64,
    pub acks_sent: u64,
    pub acks_lost: u64,
    pub completed: bool,
    /// SHA-256 of the delivered stream, hex. Empty unless `verify_stream`.
    pub stream_digest: String,
    /// SHA-256 of the same-length prefix of the source stream, hex.
    pub source_digest: String,
}

impl SessionMetrics {
    pub fn stream_intact(&self) -> bool {
        self.stream_digest == self.source_digest
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub t: f64,
    pub delivered_bytes: u64,
    /// Goodput over the preceding sample interval.
    pub goodput_bps: f64,
    pub cwnd: u32,
    pub queue: usize,
}

// ---------------------------------------------------------------------------
// Event queue

struct Scheduled<E> {
    at: Duration,
    seq: u64,
    event: E,
}

impl<E> PartialEq for Scheduled<E> {
    fn eq(&self, other: &Self) -> bool {
        (self.at, self.seq) == (other.at, other.seq)
    }
}

impl<E> Eq for Scheduled<E> {}

impl<E> PartialOrd for Scheduled<E> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<E> Ord for Scheduled<E> {
    fn cmp(&self, other: &Self) -> Ordering {
        // BinaryHeap is a max-heap; earliest (time, insertion) first
        (other.at, other.seq).cmp(&(self.at, self.seq))
    }
}

/// Time-ordered event queue. Events at equal times fire in insertion order.
pub struct EventQueue<E> {
    heap: BinaryHeap<Scheduled<E>>,
    now: Duration,
    next_seq: u64,
}

impl<E> Default for EventQueue<E> {
    fn default() -> Self {
        EventQueue { heap: BinaryHeap::new(), now: Duration::ZERO, next_seq: 0 }
    }
}

impl<E> EventQueue<E> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn now(&self) -> Duration {
        self.now
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    /// Panics if `at` lies before the current time.
    pub fn schedule(&mut self, at: Duration, event: E) {
        assert!(at >= self.now, "event scheduled in the past: {at:?} < {:?}", self.now);
        self.heap.push(Scheduled { at, seq: self.next_seq, event });
        self.next_seq += 1;
    }

    pub fn schedule_in(&mut self, delay: Duration, event: E) {
        self.schedule(self.now + delay, event);
    }

    /// Removes the next event and advances the clock to it.
    pub fn pop(&mut self) -> Option<(Duration, E)> {
        let s = self.heap.pop()?;
        self.now = s.at;
        Some((s.at, s.event))
    }
}

// ---------------------------------------------------------------------------
// Session

enum Datagram {
    Tcp(Segment),
    Nc(Frame),
}

impl Datagram {
    fn wire_len(&self) -> usize {
        match self {
            Datagram::Tcp(seg) => IP_HEADER_LEN + TCP_HEADER_LEN + seg.len(),
            Datagram::Nc(frame) => frame.wire_len(),
        }
    }
}

enum Event {
    LinkDone(Datagram),
    Arrive(Datagram),
    AckArrive(Ack),
    RtoCheck,
    DelAckCheck,
    Sample,
    End,
}

/// Independent seed for one purpose within a session.
pub fn derive_seed(seed: u64, purpose: u64) -> u64 {
    let mut z = seed.wrapping_add(purpose.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

struct Session<'a> {
    cfg: &'a SimConfig,
    q: EventQueue<Event>,
    sender: RenoSender,
    receiver: RenoReceiver,
    coding: Option<(Encoder, Decoder)>,
    fwd_rng: ChaCha8Rng,
    rev_rng: ChaCha8Rng,
    queue: VecDeque<Datagram>,
    link_busy: bool,
    rto_check: Option<Duration>,
    delack_check: Option<Duration>,
    hasher: Option<Sha256>,
    last_progress: Option<Duration>,
    trace: Option<(Duration, Vec<TracePoint>)>,
    m: SessionMetrics,
}

impl<'a> Session<'a> {
    fn new(cfg: &'a SimConfig, sample_every: Option<Duration>) -> Result<Session<'a>, SimError> {
        cfg.validate()?;
        let reno = RenoConfig {
            mss: cfg.mss,
            short_segment_prob: cfg.short_segment_prob,
            repacketize_prob: cfg.repacketize_prob,
            seed: derive_seed(cfg.seed, 4),
            stream_seed: derive_seed(cfg.seed, 5),
            ..RenoConfig::default()
        };
        let isn = reno.initial_seq;
        let coding = match cfg.mode {
            Mode::Tcp => None,
            Mode::TcpNc => {
                let enc_cfg = EncoderConfig::new(cfg.redundancy, cfg.window)?
                    .with_seed(derive_seed(cfg.seed, 2))
                    .with_buffer_cap(cfg.encoder_cap);
                let dec_cfg = DecoderConfig {
                    buffer_cap: cfg.decoder_cap,
                    initial_seq: isn,
                    slot_bytes: cfg.mss,
                };
                Some((Encoder::new(enc_cfg, isn)?, Decoder::new(dec_cfg)))
            }
        };
        let delayed_ack = cfg.tcp_delayed_ack && cfg.mode == Mode::Tcp;
        Ok(Session {
            cfg,
            q: EventQueue::new(),
            sender: RenoSender::new(reno),
            receiver: RenoReceiver::new(isn, delayed_ack),
            coding,
            fwd_rng: ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, 1)),
            rev_rng: ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, 3)),
            queue: VecDeque::new(),
            link_busy: false,
            rto_check: None,
            delack_check: None,
            hasher: cfg.verify_stream.then(Sha256::new),
            last_progress: None,
            trace: sample_every.map(|d| (d, Vec::new())),
            m: SessionMetrics {
                goodput_bps: 0.0,
                delivered_bytes: 0,
                coded_sent: 0,
                frames_sent: 0,
                frames_arrived: 0,
                frames_in_flight: 0,
                losses_injected: 0,
                queue_drops: 0,
                max_queue: 0,
                timeouts: 0,
                fast_retransmits: 0,
                visible_losses: 0,
                acks_sent: 0,
                acks_lost: 0,
                completed: false,
                stream_digest: String::new(),
                source_digest: String::new(),
            },
        })
    }

    fn run(mut self) -> (SessionMetrics, Vec<TracePoint>) {
        self.q.schedule(self.cfg.duration, Event::End);
        if let Some((every, _)) = &self.trace {
            let every = *every;
            self.q.schedule(every.min(self.cfg.duration), Event::Sample);
        }
        let first = self.sender.poll_send(Duration::ZERO);
        self.send_segments(first);
        self.sync_timers();

        while let Some((now, event)) = self.q.pop() {
            match event {
                Event::End => break,
                Event::LinkDone(d) => {
                    self.q.schedule(now + self.cfg.prop_delay, Event::Arrive(d));
                    match self.queue.pop_front() {
                        Some(next) => self.start_tx(next),
                        None => self.link_busy = false,
                    }
                }
                Event::Arrive(d) => self.on_arrival(d, now),
                Event::AckArrive(ack) => {
                    if let Some((enc, _)) = &mut self.coding {
                        enc.handle_ack(ack.ack);
                    }
                    let segs = self.sender.on_ack(ack.ack, ack.window, now);
                    self.send_segments(segs);
                }
                Event::RtoCheck => {
                    self.rto_check = None;
                    if self.sender.timer_deadline().is_some_and(|d| d <= now) {
                        if let Some(seg) = self.sender.on_timeout(now) {
                            self.send_segments(vec![seg]);
                        }
                    }
                }
                Event::DelAckCheck => {
                    self.delack_check = None;
                    if let Some(ack) = self.receiver.on_delack_timer(now) {
                        self.send_ack(ack);
                    }
                }
                Event::Sample => self.sample(now),
            }
            self.sync_timers();
        }
        self.finish()
    }

    fn sync_timers(&mut self) {
        if let Some(d) = self.sender.timer_deadline() {
            if self.rto_check.is_none_or(|c| d < c) {
                self.q.schedule(d.max(self.q.now()), Event::RtoCheck);
                self.rto_check = Some(d);
            }
        }
        if let Some(d) = self.receiver.delack_deadline() {
            if self.delack_check.is_none_or(|c| d < c) {
                self.q.schedule(d.max(self.q.now()), Event::DelAckCheck);
                self.delack_check = Some(d);
            }
        }
    }

    fn send_segments(&mut self, segs: Vec<Segment>) {
        for seg in segs {
            match &mut self.coding {
                None => self.inject(Datagram::Tcp(seg)),
                Some((enc, _)) => {
                    let coded = enc.ingest_segment(&seg).expect("sender emits data segments only");
                    for pkt in coded {
                        let bytes = pkt.to_bytes().expect("encoder emits valid headers");
                        self.m.coded_sent += 1;
                        self.inject(Datagram::Nc(Frame::Coded(bytes)));
                    }
                }
            }
        }
    }

    fn inject(&mut self, d: Datagram) {
        self.m.frames_sent += 1;
        if self.cfg.loss_rate > 0.0 && self.fwd_rng.gen_bool(self.cfg.loss_rate) {
            self.m.losses_injected += 1;
            return;
        }
        if !self.link_busy {
            self.start_tx(d);
        } else if self.queue.len() < self.cfg.bottleneck_queue {
            self.queue.push_back(d);
            self.m.max_queue = self.m.max_queue.max(self.queue.len());
        } else {
            self.m.queue_drops += 1;
        }
    }

    fn start_tx(&mut self, d: Datagram) {
        self.link_busy = true;
        let bits = d.wire_len() as u128 * 8;
        let nanos = (bits * 1_000_000_000).div_ceil(self.cfg.link_rate as u128);
        self.q.schedule_in(Duration::from_nanos(nanos as u64), Event::LinkDone(d));
    }

    fn on_arrival(&mut self, d: Datagram, now: Duration) {
        self.m.frames_arrived += 1;
        match d {
            Datagram::Tcp(seg) | Datagram::Nc(Frame::Bypass(seg)) => {
                let out = self.receiver.on_segment(&seg, now);
                self.deliver(&out.delivered, now);
                if let Some(ack) = out.ack {
                    self.send_ack(ack);
                }
            }
            Datagram::Nc(Frame::Coded(bytes)) => {
                let Some((_, dec)) = &mut self.coding else {
                    return;
                };
                let Some(rec) = dec.receive_frame(&bytes) else {
                    return;
                };
                let mut app = Vec::new();
                for seg in &rec.delivered {
                    let out = self.receiver.on_segment(seg, now);
                    app.extend_from_slice(&out.delivered);
                    if let Some(a) = out.ack {
                        dec.handle_receiver_ack(a.ack, a.window);
                    }
                }
                let ack = Ack { ack: rec.ack, window: dec.advertised_window() };
                self.deliver(&app, now);
                self.send_ack(ack);
            }
        }
    }

    fn deliver(&mut self, bytes: &[u8], now: Duration) {
        if bytes.is_empty() {
            return;
        }
        self.m.delivered_bytes += bytes.len() as u64;
        if let Some(h) = &mut self.hasher {
            h.update(bytes);
        }
        self.last_progress = Some(now);
    }

    fn send_ack(&mut self, ack: Ack) {
        self.m.acks_sent += 1;
        if self.cfg.reverse_loss_rate > 0.0 && self.rev_rng.gen_bool(self.cfg.reverse_loss_rate) {
            self.m.acks_lost += 1;
            return;
        }
        self.q.schedule_in(self.cfg.prop_delay, Event::AckArrive(ack));
    }

    fn sample(&mut self, now: Duration) {
        let delivered = self.m.delivered_bytes;
        let cwnd = self.sender.cwnd();
        let queue = self.queue.len();
        if let Some((every, points)) = &mut self.trace {
            let prev = points.last().map(|p| p.delivered_bytes).unwrap_or(0);
            let prev_t = points.last().map(|p| p.t).unwrap_or(0.0);
            let t = now.as_secs_f64();
            let dt = (t - prev_t).max(f64::EPSILON);
            points.push(TracePoint {
                t,
                delivered_bytes: delivered,
                goodput_bps: (delivered - prev) as f64 * 8.0 / dt,
                cwnd,
                queue,
            });
            let next = now + *every;
            if next <= self.cfg.duration {
                self.q.schedule(next, Event::Sample);
            }
        }
    }

    fn finish(mut self) -> (SessionMetrics, Vec<TracePoint>) {
        let cfg = self.cfg;
        let end = cfg.duration.as_secs_f64();
        if self.trace.as_ref().is_some_and(|(_, p)| p.last().is_none_or(|l| l.t < end)) {
            self.sample(cfg.duration);
        }
        let m = &mut self.m;
        m.goodput_bps = m.delivered_bytes as f64 * 8.0 / cfg.duration.as_secs_f64();
        let stats = self.sender.stats();
        m.timeouts = stats.timeouts;
        m.fast_retransmits = stats.fast_retransmits;
        m.visible_losses = stats.timeouts + stats.fast_retransmits;
        m.frames_in_flight = m.frames_sent - m.frames_arrived - m.losses_injected - m.queue_drops;
        let cutoff = cfg.duration.saturating_sub(cfg.stall_window());
        m.completed = self.last_progress.is_some_and(|t| t >= cutoff);
        if let Some(h) = self.hasher.take() {
            m.stream_digest = hex::encode(h.finalize());
            let mut src = Sha256::new();
            let seed = self.sender.config().stream_seed;
            let mut off = 0u64;
            while off < m.delivered_bytes {
                let n = (m.delivered_bytes - off).min(1 << 16) as usize;
                src.update(stream_bytes(seed, off, n));
                off += n as u64;
            }
            m.source_digest = hex::encode(src.finalize());
        }
        let trace = self.trace.map(|(_, p)| p).unwrap_or_default();
        (self.m, trace)
    }
}

/// Runs one session to `cfg.duration` of simulated time.
pub fn run_session(cfg: &SimConfig) -> Result<SessionMetrics, SimError> {
    Ok(Session::new(cfg, None)?.run().0)
}

/// Like [`run_session`], also sampling progress every `sample_every`.
pub fn run_session_traced(
    cfg: &SimConfig,
    sample_every: Duration,
) -> Result<(SessionMetrics, Vec<TracePoint>), SimError> {
    if sample_every.is_zero() {
        return Err(SimError::InvalidConfig("sample interval must be positive".into()));
    }
    Ok(Session::new(cfg, Some(sample_every))?.run())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn short(mode: Mode, loss: f64) -> SimConfig {
        SimConfig {
            mode,
            loss_rate: loss,
            duration: Duration::from_secs(3),
            redundancy: 1.2,
            window: 3,
            ..SimConfig::default()
        }
    }

    #[test]
    fn equal_times_fire_in_insertion_order() {
        let mut q = EventQueue::new();
        q.schedule(Duration::from_secs(1), "a");
        q.schedule(Duration::from_millis(500), "early");
        q.schedule(Duration::from_secs(1), "b");
        assert_eq!(q.pop().unwrap().1, "early");
        assert_eq!(q.pop().unwrap().1, "a");
        assert_eq!(q.pop().unwrap().1, "b");
        assert!(q.pop().is_none());
        assert!(q.is_empty());
    }

    #[test]
    #[should_panic(expected = "in the past")]
    fn scheduling_in_the_past_panics() {
        let mut q = EventQueue::new();
        q.schedule(Duration::from_secs(2), ());
        q.pop();
        q.schedule(Duration::from_secs(1), ());
    }

    #[test]
    fn config_bounds() {
        let ok = SimConfig::default();
        assert!(ok.validate().is_ok());
        assert!(SimConfig { loss_rate: 1.0, ..ok.clone() }.validate().is_err());
        assert!(SimConfig { loss_rate: -0.1, ..ok.clone() }.validate().is_err());
        assert!(SimConfig { link_rate: 0, ..ok.clone() }.validate().is_err());
        assert!(SimConfig { duration: Duration::ZERO, ..ok.clone() }.validate().is_err());
        assert!(SimConfig { redundancy: 0.5, ..ok.clone() }.validate().is_err());
        assert!(SimConfig { window: 0, ..ok.clone() }.validate().is_err());
        // coding parameters are irrelevant to plain TCP
        assert!(SimConfig { mode: Mode::Tcp, window: 0, ..ok.clone() }.validate().is_ok());
        assert!(run_session(&SimConfig { loss_rate: 1.0, ..ok }).is_err());
        assert_eq!("tcpnc".parse::<Mode>().unwrap(), Mode::TcpNc);
        assert!("udp".parse::<Mode>().is_err());
    }

    #[test]
    fn lossless_tcp_fills_the_link() {
        let m = run_session(&short(Mode::Tcp, 0.0)).unwrap();
        assert_eq!(m.losses_injected, 0);
        assert!(m.completed);
        assert!(m.stream_intact());
        // 1460 of every 1500 bytes are payload
        let ceiling = 6e6 * 1460.0 / 1500.0;
        assert!(m.goodput_bps < ceiling && m.goodput_bps > 0.8 * ceiling, "{}", m.goodput_bps);
    }

    #[test]
    fn sessions_are_deterministic() {
        for mode in [Mode::Tcp, Mode::TcpNc] {
            let cfg = short(mode, 0.05);
            assert_eq!(run_session(&cfg).unwrap(), run_session(&cfg).unwrap());
        }
        let a = run_session(&short(Mode::TcpNc, 0.05)).unwrap();
        let b = run_session(&SimConfig { seed: 2, ..short(Mode::TcpNc, 0.05) }).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn frames_are_conserved_and_queue_bounded() {
        for mode in [Mode::Tcp, Mode::TcpNc] {
            let m = run_session(&short(mode, 0.1)).unwrap();
            assert_eq!(
                m.frames_sent,
                m.frames_arrived + m.losses_injected + m.queue_drops + m.frames_in_flight
            );
            assert!(m.max_queue <= 5);
            assert!(m.stream_intact());
        }
    }

    #[test]
    fn tracing_does_not_perturb_the_run() {
        let cfg = short(Mode::TcpNc, 0.1);
        let plain = run_session(&cfg).unwrap();
        let (traced, points) = run_session_traced(&cfg, Duration::from_millis(100)).unwrap();
        assert_eq!(plain, traced);
        assert_eq!(points.len(), 30);
        assert_eq!(points.last().unwrap().delivered_bytes, plain.delivered_bytes);
    }

    #[test]
    fn coded_session_survives_variable_segments_and_repacketization() {
        let cfg = SimConfig {
            short_segment_prob: 0.2,
            repacketize_prob: 0.5,
            ..short(Mode::TcpNc, 0.1)
        };
        let m = run_session(&cfg).unwrap();
        assert!(m.delivered_bytes > 0);
        assert!(m.stream_intact());
    }
}
