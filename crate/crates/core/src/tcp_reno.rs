//! Simplified TCP Reno endpoints for the simulator.
//!
//! The sender runs slow start, congestion avoidance, fast retransmit with
//! fast recovery, and an RFC 6298 retransmission timer with exponential
//! backoff. There is no SACK, window scaling, Nagle or timestamps. The
//! application is an infinite backlog whose bytes are a pure function of
//! the stream offset (see [`stream_bytes`]), so any byte can be regenerated
//! for retransmission or verification.
//!
//! Both endpoints are passive state machines: the caller supplies the clock
//! and owns the timers, polling [`RenoSender::timer_deadline`] and
//! [`RenoReceiver::delack_deadline`].

use std::collections::BTreeMap;
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::segment::{Ack, Flags, Segment, Seq};

/// Largest window a receiver can advertise without window scaling.
pub const MAX_UNSCALED_WINDOW: u32 = u16::MAX as u32;

#[derive(Debug, Clone, PartialEq)]
pub struct RenoConfig {
    pub mss: u32,
    pub initial_cwnd_segments: u32,
    pub initial_ssthresh: u32,
    pub initial_rto: Duration,
    pub min_rto: Duration,
    pub max_rto: Duration,
    /// Chance that a new segment is a short PUSH segment instead of a full MSS.
    pub short_segment_prob: f64,
    /// Chance that a retransmission ignores original segment boundaries.
    pub repacketize_prob: f64,
    /// Seeds segment sizing decisions.
    pub seed: u64,
    /// Seeds the application byte stream.
    pub stream_seed: u64,
    pub initial_seq: Seq,
    pub src_port: u16,
    pub dst_port: u16,
}

impl Default for RenoConfig {
    fn default() -> Self {
        RenoConfig {
            mss: 1460,
            initial_cwnd_segments: 2,
            initial_ssthresh: u32::MAX / 2,
            initial_rto: Duration::from_secs(1),
            min_rto: Duration::from_millis(200),
            max_rto: Duration::from_secs(60),
            short_segment_prob: 0.0,
            repacketize_prob: 0.0,
            seed: 0,
            stream_seed: 0,
            initial_seq: 0,
            src_port: 40_000,
            dst_port: 5001,
        }
    }
}

/// The application byte at `offset` for stream `seed`.
fn stream_word(seed: u64, block: u64) -> u64 {
    // splitmix64
    let mut z = seed ^ block.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// `len` application bytes starting at stream `offset`.
pub fn stream_bytes(seed: u64, offset: u64, len: usize) -> Vec<u8> {
    let mut out = Vec::with_capacity(len);
    let mut pos = offset;
    let end = offset + len as u64;
    while pos < end {
        let word = stream_word(seed, pos / 8).to_le_bytes();
        let from = (pos % 8) as usize;
        let take = ((end - pos) as usize).min(8 - from);
        out.extend_from_slice(&word[from..from + take]);
        pos += take as u64;
    }
    out
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SenderStats {
    pub segments_sent: u64,
    pub retransmitted_segments: u64,
    pub fast_retransmits: u64,
    pub timeouts: u64,
    pub invalid_acks: u64,
}

#[derive(Debug)]
pub struct RenoSender {
    cfg: RenoConfig,
    cwnd: u32,
    ssthresh: u32,
    snd_una: Seq,
    snd_nxt: Seq,
    /// Highest sequence ever sent; `snd_nxt` falls back to `snd_una` after a timeout.
    snd_max: Seq,
    peer_window: u32,
    dupacks: u32,
    /// Set while in fast recovery.
    recover: Option<Seq>,
    /// Bytes acknowledged toward the next congestion-avoidance increment.
    ca_acked: u32,
    rto: Duration,
    srtt: Option<Duration>,
    rttvar: Duration,
    /// End of the segment being timed and when it was sent.
    timed: Option<(Seq, Duration)>,
    timer: Option<Duration>,
    /// Start -> exclusive end of every segment sent and not yet acked.
    boundaries: BTreeMap<Seq, Seq>,
    /// Length picked for the next new segment.
    pending_len: Option<u32>,
    rng: ChaCha8Rng,
    stats: SenderStats,
}

impl RenoSender {
    pub fn new(cfg: RenoConfig) -> RenoSender {
        assert!(cfg.mss > 0, "mss must be positive");
        RenoSender {
            cwnd: cfg.mss * cfg.initial_cwnd_segments.max(1),
            ssthresh: cfg.initial_ssthresh,
            snd_una: cfg.initial_seq,
            snd_nxt: cfg.initial_seq,
            snd_max: cfg.initial_seq,
            peer_window: MAX_UNSCALED_WINDOW,
            dupacks: 0,
            recover: None,
            ca_acked: 0,
            rto: cfg.initial_rto,
            srtt: None,
            rttvar: Duration::ZERO,
            timed: None,
            timer: None,
            boundaries: BTreeMap::new(),
            pending_len: None,
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            stats: SenderStats::default(),
            cfg,
        }
    }

    pub fn config(&self) -> &RenoConfig {
        &self.cfg
    }

    pub fn cwnd(&self) -> u32 {
        self.cwnd
    }

    pub fn ssthresh(&self) -> u32 {
        self.ssthresh
    }

    pub fn snd_una(&self) -> Seq {
        self.snd_una
    }

    pub fn snd_nxt(&self) -> Seq {
        self.snd_nxt
    }

    pub fn snd_max(&self) -> Seq {
        self.snd_max
    }

    pub fn flight(&self) -> u32 {
        self.snd_nxt - self.snd_una
    }

    pub fn peer_window(&self) -> u32 {
        self.peer_window
    }

    pub fn rto(&self) -> Duration {
        self.rto
    }

    pub fn srtt(&self) -> Option<Duration> {
        self.srtt
    }

    pub fn dupacks(&self) -> u32 {
        self.dupacks
    }

    pub fn in_fast_recovery(&self) -> bool {
        self.recover.is_some()
    }

    pub fn stats(&self) -> SenderStats {
        self.stats
    }

    /// When the retransmission timer fires, if armed.
    pub fn timer_deadline(&self) -> Option<Duration> {
        self.timer
    }

    /// Sends whatever new data the window allows.
    // TODO: zero-window probing; the simulated receivers never close the
    // window while nothing is in flight, so a closed window cannot deadlock yet.
    pub fn poll_send(&mut self, now: Duration) -> Vec<Segment> {
        let mut out = Vec::new();
        let limit = self.cwnd.min(self.peer_window);
        loop {
            let len = if self.snd_nxt < self.snd_max {
                self.retransmit_len(self.snd_nxt)
            } else {
                self.next_new_len()
            };
            if self.snd_nxt + len - self.snd_una > limit {
                break;
            }
            out.push(self.emit(self.snd_nxt, len, now));
        }
        out
    }

    /// Handles a cumulative ACK carrying the peer's advertised window.
    pub fn on_ack(&mut self, ack: Seq, window: u32, now: Duration) -> Vec<Segment> {
        if ack > self.snd_max {
            log::warn!("ack {ack} beyond snd_max {}; ignored", self.snd_max);
            self.stats.invalid_acks += 1;
            return Vec::new();
        }
        self.peer_window = window;
        let mut out = Vec::new();
        if ack > self.snd_una {
            let acked = ack - self.snd_una;
            if let Some((end, sent)) = self.timed {
                if ack >= end {
                    self.rtt_sample(now.saturating_sub(sent));
                    self.timed = None;
                }
            }
            if self.recover.take().is_some() {
                self.cwnd = self.ssthresh;
                self.ca_acked = 0;
            } else if self.cwnd < self.ssthresh {
                self.cwnd += self.cfg.mss;
            } else {
                self.ca_acked += acked;
                if self.ca_acked >= self.cwnd {
                    self.ca_acked -= self.cwnd;
                    self.cwnd += self.cfg.mss;
                }
            }
            self.snd_una = ack;
            if self.snd_nxt < ack {
                self.snd_nxt = ack;
            }
            self.dupacks = 0;
            self.trim_boundaries();
            self.timer = (self.snd_una < self.snd_max).then(|| now + self.rto);
        } else if ack == self.snd_una && self.snd_max > self.snd_una {
            self.dupacks += 1;
            if self.dupacks == 3 {
                let flight = self.flight();
                self.ssthresh = (flight / 2).max(2 * self.cfg.mss);
                self.cwnd = self.ssthresh + 3 * self.cfg.mss;
                self.recover = Some(self.snd_max);
                self.stats.fast_retransmits += 1;
                let len = self.retransmit_len(self.snd_una);
                out.push(self.emit(self.snd_una, len, now));
                self.timer = Some(now + self.rto);
            } else if self.dupacks > 3 && self.recover.is_some() {
                self.cwnd += self.cfg.mss;
            }
        }
        out.extend(self.poll_send(now));
        out
    }

    /// Retransmission timeout. `None` if nothing is outstanding.
    pub fn on_timeout(&mut self, now: Duration) -> Option<Segment> {
        if self.snd_una == self.snd_max {
            self.timer = None;
            return None;
        }
        let flight = self.snd_max - self.snd_una;
        self.ssthresh = (flight / 2).max(2 * self.cfg.mss);
        self.cwnd = self.cfg.mss;
        self.rto = (self.rto * 2).min(self.cfg.max_rto);
        self.dupacks = 0;
        self.recover = None;
        self.ca_acked = 0;
        self.timed = None;
        self.stats.timeouts += 1;
        // go back N
        self.snd_nxt = self.snd_una;
        let len = self.retransmit_len(self.snd_una);
        let seg = self.emit(self.snd_una, len, now);
        self.timer = Some(now + self.rto);
        Some(seg)
    }

    fn rtt_sample(&mut self, r: Duration) {
        match self.srtt {
            None => {
                self.srtt = Some(r);
                self.rttvar = r / 2;
            }
            Some(srtt) => {
                let err = srtt.abs_diff(r);
                self.rttvar = (self.rttvar * 3 + err) / 4;
                self.srtt = Some((srtt * 7 + r) / 8);
            }
        }
        let srtt = self.srtt.unwrap_or(r);
        let var = (self.rttvar * 4).max(Duration::from_millis(1));
        self.rto = (srtt + var).clamp(self.cfg.min_rto, self.cfg.max_rto);
    }

    fn next_new_len(&mut self) -> u32 {
        if let Some(len) = self.pending_len {
            return len;
        }
        let mss = self.cfg.mss;
        let len = if self.cfg.short_segment_prob > 0.0 && self.rng.gen_bool(self.cfg.short_segment_prob) {
            self.rng.gen_range(1..=mss)
        } else {
            mss
        };
        self.pending_len = Some(len);
        len
    }

    /// Length of a retransmission starting at `seq`.
    fn retransmit_len(&mut self, seq: Seq) -> u32 {
        let avail = self.snd_max - seq;
        if self.cfg.repacketize_prob > 0.0 && self.rng.gen_bool(self.cfg.repacketize_prob) {
            return avail.min(self.cfg.mss);
        }
        match self.boundaries.range(..=seq).next_back() {
            Some((_, &end)) if end > seq => end - seq,
            _ => avail.min(self.cfg.mss),
        }
    }

    fn emit(&mut self, seq: Seq, len: u32, now: Duration) -> Segment {
        let end = seq + len;
        let is_new = seq >= self.snd_max;
        if is_new {
            self.pending_len = None;
            self.snd_max = end;
            if self.timed.is_none() {
                self.timed = Some((end, now));
            }
        } else {
            self.stats.retransmitted_segments += 1;
            // Karn: nothing retransmitted is timed
            if self.timed.is_some_and(|(t_end, _)| t_end > seq) {
                self.timed = None;
            }
        }
        self.record_boundary(seq, end);
        if self.snd_nxt < end && self.snd_nxt >= seq {
            self.snd_nxt = end;
        }
        if self.timer.is_none() {
            self.timer = Some(now + self.rto);
        }
        self.stats.segments_sent += 1;
        let offset = (seq - self.cfg.initial_seq) as u64;
        let mut seg = Segment::data(
            self.cfg.src_port,
            self.cfg.dst_port,
            seq,
            stream_bytes(self.cfg.stream_seed, offset, len as usize),
        );
        if len < self.cfg.mss {
            seg.flags = Flags::PSH;
        }
        seg
    }

    fn record_boundary(&mut self, start: Seq, end: Seq) {
        let overlapping: Vec<(Seq, Seq)> = self
            .boundaries
            .range(..end)
            .filter(|(_, &e)| e > start)
            .map(|(&s, &e)| (s, e))
            .collect();
        for (s, e) in overlapping {
            self.boundaries.remove(&s);
            if s < start {
                self.boundaries.insert(s, start);
            }
            if e > end {
                self.boundaries.insert(end, e);
            }
        }
        self.boundaries.insert(start, end);
    }

    fn trim_boundaries(&mut self) {
        while let Some((&s, &e)) = self.boundaries.first_key_value() {
            if e <= self.snd_una {
                self.boundaries.remove(&s);
            } else {
                if s < self.snd_una {
                    self.boundaries.remove(&s);
                    self.boundaries.insert(self.snd_una, e);
                }
                break;
            }
        }
    }
}

/// What a segment arrival produces at the receiver.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ReceiverOutput {
    /// ACK to send now, if any. Delayed ACKs come from the timer instead.
    pub ack: Option<Ack>,
    /// Bytes that became available in order to the application.
    pub delivered: Vec<u8>,
}

#[derive(Debug)]
pub struct RenoReceiver {
    rcv_nxt: Seq,
    /// Disjoint out-of-order ranges above `rcv_nxt`, keyed by start.
    out_of_order: BTreeMap<Seq, Vec<u8>>,
    delayed_ack: bool,
    delack_timeout: Duration,
    buffer: u32,
    ack_pending: bool,
    delack_deadline: Option<Duration>,
    delivered_bytes: u64,
}

impl RenoReceiver {
    pub fn new(initial_seq: Seq, delayed_ack: bool) -> RenoReceiver {
        RenoReceiver {
            rcv_nxt: initial_seq,
            out_of_order: BTreeMap::new(),
            delayed_ack,
            delack_timeout: Duration::from_millis(200),
            buffer: MAX_UNSCALED_WINDOW,
            ack_pending: false,
            delack_deadline: None,
            delivered_bytes: 0,
        }
    }

    pub fn rcv_nxt(&self) -> Seq {
        self.rcv_nxt
    }

    pub fn delivered_bytes(&self) -> u64 {
        self.delivered_bytes
    }

    pub fn out_of_order_ranges(&self) -> Vec<(Seq, Seq)> {
        self.out_of_order.iter().map(|(&s, d)| (s, s + d.len() as u32)).collect()
    }

    /// Free receive buffer, advertised as the window.
    pub fn rwnd(&self) -> u32 {
        let held: usize = self.out_of_order.values().map(Vec::len).sum();
        self.buffer.saturating_sub(held as u32)
    }

    pub fn delack_deadline(&self) -> Option<Duration> {
        self.delack_deadline
    }

    fn ack_now(&mut self) -> Ack {
        self.ack_pending = false;
        self.delack_deadline = None;
        Ack { ack: self.rcv_nxt, window: self.rwnd() }
    }

    pub fn on_segment(&mut self, seg: &Segment, now: Duration) -> ReceiverOutput {
        let mut out = ReceiverOutput::default();
        if seg.is_empty() {
            return out;
        }
        let start = seg.seq;
        let end = seg.end_exclusive();
        if end <= self.rcv_nxt {
            out.ack = Some(self.ack_now());
            return out;
        }
        if start > self.rcv_nxt {
            self.store_out_of_order(start, &seg.payload);
            out.ack = Some(self.ack_now());
            return out;
        }

        let had_gap = !self.out_of_order.is_empty();
        out.delivered.extend_from_slice(&seg.payload[(self.rcv_nxt - start) as usize..]);
        self.rcv_nxt = end;
        while let Some((&s, _)) = self.out_of_order.first_key_value() {
            if s > self.rcv_nxt {
                break;
            }
            let data = self.out_of_order.remove(&s).unwrap_or_default();
            let e = s + data.len() as u32;
            if e > self.rcv_nxt {
                out.delivered.extend_from_slice(&data[(self.rcv_nxt - s) as usize..]);
                self.rcv_nxt = e;
            }
        }
        self.delivered_bytes += out.delivered.len() as u64;

        if !self.delayed_ack || had_gap || self.ack_pending {
            out.ack = Some(self.ack_now());
        } else {
            self.ack_pending = true;
            self.delack_deadline = Some(now + self.delack_timeout);
        }
        out
    }

    /// Delayed-ACK timer expiry.
    pub fn on_delack_timer(&mut self, now: Duration) -> Option<Ack> {
        match self.delack_deadline {
            Some(d) if d <= now && self.ack_pending => Some(self.ack_now()),
            _ => None,
        }
    }

    fn store_out_of_order(&mut self, start: Seq, payload: &[u8]) {
        let end = start + payload.len() as u32;
        let mut cursor = start;
        let mut pieces = Vec::new();
        let held: Vec<(Seq, Seq)> = self
            .out_of_order
            .range(..end)
            .map(|(&s, d)| (s, s + d.len() as u32))
            .filter(|&(_, e)| e > start)
            .collect();
        for (s, e) in held {
            if s > cursor {
                pieces.push((cursor, s));
            }
            cursor = cursor.max(e);
        }
        if cursor < end {
            pieces.push((cursor, end));
        }
        for (s, e) in pieces {
            let lo = (s - start) as usize;
            let hi = (e - start) as usize;
            self.out_of_order.insert(s, payload[lo..hi].to_vec());
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MSS: u32 = 1000;

    fn cfg() -> RenoConfig {
        RenoConfig { mss: MSS, initial_cwnd_segments: 1, ..RenoConfig::default() }
    }

    fn ms(v: u64) -> Duration {
        Duration::from_millis(v)
    }

    #[test]
    fn stream_bytes_is_random_access() {
        let whole = stream_bytes(9, 0, 100);
        assert_eq!(stream_bytes(9, 13, 40), whole[13..53].to_vec());
        assert_ne!(stream_bytes(10, 0, 100), whole);
        assert_eq!(stream_bytes(9, 3, 0), Vec::<u8>::new());
    }

    #[test]
    fn slow_start_step() {
        let mut s = RenoSender::new(cfg());
        let segs = s.poll_send(ms(0));
        assert_eq!(segs.len(), 1);
        assert_eq!(s.cwnd(), MSS);
        let more = s.on_ack(MSS, 65_535, ms(20));
        assert_eq!(s.cwnd(), 2 * MSS);
        assert_eq!(more.len(), 2);
        assert_eq!(s.srtt(), Some(ms(20)));
    }

    #[test]
    fn triple_dupack_retransmits_once() {
        let mut s = RenoSender::new(RenoConfig { initial_cwnd_segments: 8, ..cfg() });
        let segs = s.poll_send(ms(0));
        assert_eq!(segs.len(), 8);
        let mut retx = Vec::new();
        for _ in 0..3 {
            retx.extend(s.on_ack(0, 65_535, ms(10)));
        }
        assert_eq!(retx.len(), 1);
        assert_eq!(retx[0].seq, 0);
        assert_eq!(retx[0].len(), MSS as usize);
        assert_eq!(s.ssthresh(), 4 * MSS);
        assert_eq!(s.cwnd(), 7 * MSS);
        assert!(s.in_fast_recovery());
        // a fourth dupack inflates but 8 MSS are still outstanding
        assert!(s.on_ack(0, 65_535, ms(11)).is_empty());
        assert_eq!(s.cwnd(), 8 * MSS);
        // new ack deflates to ssthresh
        s.on_ack(8 * MSS, 65_535, ms(30));
        assert_eq!(s.cwnd(), 4 * MSS);
        assert!(!s.in_fast_recovery());
        assert_eq!(s.stats().fast_retransmits, 1);
    }

    #[test]
    fn ack_beyond_snd_max_is_ignored() {
        let mut s = RenoSender::new(cfg());
        s.poll_send(ms(0));
        assert!(s.on_ack(5 * MSS, 65_535, ms(1)).is_empty());
        assert_eq!(s.snd_una(), 0);
        assert_eq!(s.stats().invalid_acks, 1);
    }

    #[test]
    fn timeout_halves_and_backs_off() {
        let mut s = RenoSender::new(RenoConfig { initial_cwnd_segments: 64, ..cfg() });
        let segs = s.on_ack(0, 1_000_000, ms(0));
        assert_eq!(segs.len(), 64);
        assert_eq!(s.flight(), 64 * MSS);
        let rto0 = s.rto();
        let seg = s.on_timeout(ms(1000)).unwrap();
        assert_eq!(seg.seq, 0);
        assert_eq!(s.cwnd(), MSS);
        assert_eq!(s.ssthresh(), 32 * MSS);
        assert_eq!(s.rto(), rto0 * 2);
        s.on_timeout(ms(3000)).unwrap();
        assert_eq!(s.rto(), rto0 * 4);
        assert_eq!(s.stats().timeouts, 2);
    }

    #[test]
    fn timeout_without_outstanding_data_is_noop() {
        let mut s = RenoSender::new(cfg());
        assert!(s.on_timeout(ms(5)).is_none());
        s.poll_send(ms(0));
        s.on_ack(MSS, 65_535, ms(10));
        s.on_ack(3 * MSS, 65_535, ms(20));
        assert!(s.on_timeout(ms(50)).is_some());
    }

    #[test]
    fn window_limits_sending() {
        let mut s = RenoSender::new(RenoConfig { initial_cwnd_segments: 10, ..cfg() });
        assert_eq!(s.on_ack(0, 3 * MSS + 10, ms(0)).len(), 3);
        assert!(s.poll_send(ms(0)).is_empty());
        assert!(s.flight() <= s.cwnd().min(s.peer_window()));
    }

    #[test]
    fn rto_follows_estimator_with_floor() {
        let mut s = RenoSender::new(cfg());
        s.poll_send(ms(0));
        s.on_ack(MSS, 65_535, ms(40));
        // srtt 40ms, rttvar 20ms: 40 + 80 = 120ms, floored at 200ms
        assert_eq!(s.rto(), ms(200));
        let mut s = RenoSender::new(RenoConfig { min_rto: ms(1), ..cfg() });
        s.poll_send(ms(0));
        s.on_ack(MSS, 65_535, ms(40));
        assert_eq!(s.rto(), ms(120));
    }

    #[test]
    fn retransmission_keeps_or_merges_boundaries() {
        let mut s = RenoSender::new(RenoConfig { initial_cwnd_segments: 4, short_segment_prob: 1.0, seed: 3, ..cfg() });
        let segs = s.poll_send(ms(0));
        assert!(segs.iter().all(|x| x.len() <= MSS as usize && x.flags.psh));
        let first_len = segs[0].len();
        let seg = s.on_timeout(ms(1000)).unwrap();
        assert_eq!(seg.len(), first_len);

        let mut s = RenoSender::new(RenoConfig { initial_cwnd_segments: 4, short_segment_prob: 1.0, repacketize_prob: 1.0, seed: 3, ..cfg() });
        let segs = s.poll_send(ms(0));
        let sent: u32 = segs.iter().map(|x| x.len() as u32).sum();
        let seg = s.on_timeout(ms(1000)).unwrap();
        assert_eq!(seg.len() as u32, sent.min(MSS));
        assert_eq!(seg.payload, stream_bytes(0, 0, seg.len()));
    }

    #[test]
    fn receiver_cumulative_and_duplicate_acks() {
        let mut r = RenoReceiver::new(0, false);
        let seg = |s: u32| Segment::data(1, 2, s, stream_bytes(0, s as u64, 1000));
        let out = r.on_segment(&seg(0), ms(0));
        assert_eq!(out.ack.unwrap().ack, 1000);
        assert_eq!(out.delivered.len(), 1000);
        let out = r.on_segment(&seg(2000), ms(1));
        assert_eq!(out.ack.unwrap().ack, 1000);
        assert!(out.delivered.is_empty());
        assert_eq!(r.rwnd(), MAX_UNSCALED_WINDOW - 1000);
        let out = r.on_segment(&seg(1000), ms(2));
        assert_eq!(out.ack.unwrap().ack, 3000);
        assert_eq!(out.delivered, stream_bytes(0, 1000, 2000));
        // old duplicate
        assert_eq!(r.on_segment(&seg(0), ms(3)).ack.unwrap().ack, 3000);
    }

    #[test]
    fn receiver_trims_overlaps() {
        let mut r = RenoReceiver::new(0, false);
        let part = |s: u32, l: usize| Segment::data(1, 2, s, stream_bytes(0, s as u64, l));
        r.on_segment(&part(100, 50), ms(0));
        r.on_segment(&part(120, 100), ms(0));
        assert_eq!(r.out_of_order_ranges(), vec![(100, 150), (150, 220)]);
        let out = r.on_segment(&part(0, 130), ms(0));
        assert_eq!(out.delivered, stream_bytes(0, 0, 220));
        assert_eq!(r.rcv_nxt(), 220);
        assert!(r.out_of_order_ranges().is_empty());
    }

    #[test]
    fn delayed_ack_every_second_segment_or_timer() {
        let mut r = RenoReceiver::new(0, true);
        let seg = |s: u32| Segment::data(1, 2, s, vec![0; 1000]);
        assert!(r.on_segment(&seg(0), ms(0)).ack.is_none());
        assert_eq!(r.on_segment(&seg(1000), ms(1)).ack.unwrap().ack, 2000);
        assert!(r.on_segment(&seg(2000), ms(2)).ack.is_none());
        assert_eq!(r.delack_deadline(), Some(ms(202)));
        assert!(r.on_delack_timer(ms(100)).is_none());
        assert_eq!(r.on_delack_timer(ms(202)).unwrap().ack, 3000);
        assert!(r.on_delack_timer(ms(300)).is_none());
        // out-of-order is acked at once even with delayed ACKs
        assert_eq!(r.on_segment(&seg(5000), ms(3)).ack.unwrap().ack, 3000);
    }

    /// Drives the sender in lockstep rounds on a lossless path: everything
    /// in flight is acked, one segment at a time, once per round.
    #[test]
    fn cwnd_trace_matches_closed_form() {
        let ssthresh = 8 * MSS;
        let mut s = RenoSender::new(RenoConfig { initial_ssthresh: ssthresh, ..cfg() });
        let mut now = ms(0);
        let mut in_flight: Vec<Seq> = s.poll_send(now).iter().map(|x| x.end_exclusive()).collect();
        let mut expected = MSS;
        for _round in 0..10 {
            now += ms(30);
            let mut next = Vec::new();
            for end in in_flight.drain(..) {
                next.extend(s.on_ack(end, 1_000_000, now).iter().map(|x| x.end_exclusive()));
            }
            expected = if expected < ssthresh { (expected * 2).min(ssthresh) } else { expected + MSS };
            assert_eq!(s.cwnd(), expected);
            in_flight = next;
        }
        assert_eq!(s.cwnd(), 15 * MSS);
    }

    proptest::proptest! {
        #[test]
        fn new_segments_fit_the_window(acks in proptest::collection::vec((0u32..6, 0u32..20_000), 1..60)) {
            let mut s = RenoSender::new(RenoConfig { initial_cwnd_segments: 4, ..cfg() });
            s.poll_send(ms(0));
            for (i, (step, wnd)) in acks.into_iter().enumerate() {
                let now = ms(10 * i as u64 + 10);
                let ack = (s.snd_una() + step * MSS).min(s.snd_max());
                let fast_before = s.stats().fast_retransmits;
                let segs = s.on_ack(ack, wnd, now);
                let fast_retx = s.stats().fast_retransmits > fast_before;
                proptest::prop_assert!(s.cwnd() >= MSS);
                let limit = s.cwnd().min(wnd);
                for seg in segs.iter().skip(fast_retx as usize) {
                    proptest::prop_assert!(seg.end_exclusive() - s.snd_una() <= limit);
                }
            }
        }
    }
}
