//! Sender-side coding layer.
//!
//! Incoming TCP segments are cut into packets that cover disjoint byte ranges
//! (anything already buffered or already acknowledged is stripped first), so
//! each buffered packet is one unknown no matter how TCP chose its segment
//! boundaries. Every arrival earns `R` units of send credit; each whole unit
//! buys one random linear combination over the coding window.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::gf256::{self, Gf256};
use crate::segment::{encode_subheader, Segment, Seq, SUBHEADER_LEN};
use crate::wire::{CodedPacket, CodingHeaderMeta, Frame, HeaderEntry, MAX_ENTRIES};

pub const DEFAULT_BUFFER_CAP: usize = 100;

const CREDIT_UNIT: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EncoderError {
    #[error("redundancy factor must be a finite value >= 1, got {0}")]
    InvalidRedundancy(f64),
    #[error("coding window must be between 1 and 255 packets, got {0}")]
    InvalidWindow(usize),
    #[error("coding buffer capacity must be positive")]
    InvalidCapacity,
    #[error("SYN/RST segment at seq {0} must bypass the coding buffer")]
    ControlSegment(Seq),
    #[error("data segment at seq {0} cannot bypass the coding buffer")]
    NotControl(Seq),
}

/// Average number of coded packets sent per TCP arrival, held in
/// millionths so that credit accounting is exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Redundancy(u64);

impl Redundancy {
    pub fn new(r: f64) -> Result<Redundancy, EncoderError> {
        if !r.is_finite() || !(1.0..=1_000.0).contains(&r) {
            return Err(EncoderError::InvalidRedundancy(r));
        }
        Ok(Redundancy((r * CREDIT_UNIT as f64).round() as u64))
    }

    pub fn as_f64(self) -> f64 {
        self.0 as f64 / CREDIT_UNIT as f64
    }

    pub fn millionths(self) -> u64 {
        self.0
    }
}

#[derive(Debug, Clone)]
pub struct EncoderConfig {
    pub redundancy: Redundancy,
    pub window: usize,
    pub buffer_cap: usize,
    pub seed: u64,
}

impl EncoderConfig {
    pub fn new(redundancy: f64, window: usize) -> Result<EncoderConfig, EncoderError> {
        Ok(EncoderConfig {
            redundancy: Redundancy::new(redundancy)?,
            window,
            buffer_cap: DEFAULT_BUFFER_CAP,
            seed: 0,
        })
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_buffer_cap(mut self, cap: usize) -> Self {
        self.buffer_cap = cap;
        self
    }
}

/// One unknown in the coding buffer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BufferedPacket {
    pub start: Seq,
    /// Inclusive.
    pub end: Seq,
    /// Subheader and payload, zero-padded to the longest buffered packet.
    pub data: Vec<u8>,
    /// Monotone creation index.
    pub index: u64,
}

impl BufferedPacket {
    /// Subheader plus real payload bytes, without padding.
    pub fn real_len(&self) -> usize {
        SUBHEADER_LEN + (self.end - self.start) as usize + 1
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EncoderStats {
    pub arrivals: u64,
    pub coded_sent: u64,
    pub packets_buffered: u64,
    pub buffer_drops: u64,
}

#[derive(Debug)]
pub struct Encoder {
    cfg: EncoderConfig,
    /// Sorted by `start`; ranges disjoint.
    buffer: VecDeque<BufferedPacket>,
    padded_len: usize,
    base: Seq,
    credit: u64,
    /// A byte inside the packet that most recently arrived from TCP.
    anchor: Option<Seq>,
    next_index: u64,
    ports: (u16, u16),
    rng: ChaCha8Rng,
    stats: EncoderStats,
}

impl Encoder {
    pub fn new(cfg: EncoderConfig, initial_seq: Seq) -> Result<Encoder, EncoderError> {
        if cfg.window == 0 || cfg.window > MAX_ENTRIES {
            return Err(EncoderError::InvalidWindow(cfg.window));
        }
        if cfg.buffer_cap == 0 {
            return Err(EncoderError::InvalidCapacity);
        }
        let rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        Ok(Encoder {
            cfg,
            buffer: VecDeque::new(),
            padded_len: 0,
            base: initial_seq,
            credit: 0,
            anchor: None,
            next_index: 0,
            ports: (0, 0),
            rng,
            stats: EncoderStats::default(),
        })
    }

    pub fn config(&self) -> &EncoderConfig {
        &self.cfg
    }

    pub fn buffer(&self) -> impl ExactSizeIterator<Item = &BufferedPacket> {
        self.buffer.iter()
    }

    pub fn buffer_len(&self) -> usize {
        self.buffer.len()
    }

    /// First byte not yet acknowledged; carried as `Base` in every header.
    pub fn base(&self) -> Seq {
        self.base
    }

    pub fn stats(&self) -> EncoderStats {
        self.stats
    }

    /// Pending fractional credit, in units of one coded packet.
    pub fn credit(&self) -> f64 {
        self.credit as f64 / CREDIT_UNIT as f64
    }

    /// Buffers the new bytes of `seg` and returns the coded packets its
    /// arrival pays for.
    pub fn ingest_segment(&mut self, seg: &Segment) -> Result<Vec<CodedPacket>, EncoderError> {
        if seg.is_control() {
            return Err(EncoderError::ControlSegment(seg.seq));
        }
        self.ports = (seg.src_port, seg.dst_port);
        self.stats.arrivals += 1;

        if let Some(last) = seg.last_byte() {
            let runs = self.uncovered_runs(seg.seq, last);
            let fresh = runs.as_slice() == [(seg.seq, last)];
            for (start, end) in runs {
                let lo = (start - seg.seq) as usize;
                let hi = (end - seg.seq) as usize;
                let mut data = Vec::with_capacity(SUBHEADER_LEN + hi - lo + 1);
                data.extend_from_slice(&encode_subheader(start, seg.flags));
                data.extend_from_slice(&seg.payload[lo..=hi]);
                self.insert(start, end, data);
            }
            if fresh {
                if self.position_of(last).is_some() {
                    self.anchor = Some(last);
                }
            } else if let Some(p) = self.buffer.iter().find(|p| p.end >= seg.seq && p.start <= last) {
                // a retransmission starts at the byte the receiver is missing
                self.anchor = Some(p.start);
            }
        }

        self.credit += self.cfg.redundancy.millionths();
        let mut out = Vec::new();
        while self.credit >= CREDIT_UNIT {
            self.credit -= CREDIT_UNIT;
            if let Some(pkt) = self.generate_coded() {
                out.push(pkt);
            }
        }
        Ok(out)
    }

    /// Wraps a SYN or RST for uncoded delivery.
    pub fn bypass_control(&self, seg: &Segment) -> Result<Frame, EncoderError> {
        if !seg.is_control() {
            return Err(EncoderError::NotControl(seg.seq));
        }
        Ok(Frame::Bypass(seg.clone()))
    }

    /// Frees every packet whose last byte lies below `ack_byte`.
    pub fn handle_ack(&mut self, ack_byte: Seq) -> usize {
        if ack_byte > self.base {
            self.base = ack_byte;
        }
        let mut freed = 0;
        while self.buffer.front().is_some_and(|p| p.end < self.base) {
            self.buffer.pop_front();
            freed += 1;
        }
        freed
    }

    /// Indices into the buffer that the next combination would mix.
    pub fn coding_window(&self) -> std::ops::Range<usize> {
        let len = self.buffer.len();
        if len == 0 {
            return 0..0;
        }
        let w = self.cfg.window;
        let anchor = self
            .anchor
            .and_then(|a| self.position_of(a))
            .unwrap_or(len - 1);
        let lo = anchor.saturating_sub(w - 1);
        let hi = (lo + w).min(len);
        hi.saturating_sub(w)..hi
    }

    /// Forms one random linear combination over the coding window. `None`
    /// when the buffer is empty.
    pub fn generate_coded(&mut self) -> Option<CodedPacket> {
        let window = self.coding_window();
        if window.is_empty() {
            return None;
        }
        let len = window.clone().map(|i| self.buffer[i].real_len()).max().unwrap_or(0);
        let mut payload = vec![0u8; len];
        let mut entries = Vec::with_capacity(window.len());
        for i in window {
            let coeff = Gf256(self.rng.gen_range(1..=255u8));
            let p = &self.buffer[i];
            let n = p.real_len();
            gf256::axpy(&mut payload[..n], &p.data[..n], coeff);
            entries.push(HeaderEntry { start: p.start, end: p.end, coeff });
        }
        self.stats.coded_sent += 1;
        Some(CodedPacket {
            header: CodingHeaderMeta {
                src_port: self.ports.0,
                dst_port: self.ports.1,
                base: self.base,
                entries,
            },
            payload,
        })
    }

    /// Index of the buffered packet containing `byte`.
    fn position_of(&self, byte: Seq) -> Option<usize> {
        let idx = self.buffer.partition_point(|p| p.start <= byte);
        if idx == 0 {
            return None;
        }
        let p = &self.buffer[idx - 1];
        (byte <= p.end).then_some(idx - 1)
    }

    /// Sub-ranges of `[first, last]` neither buffered nor below `base`.
    fn uncovered_runs(&self, first: Seq, last: Seq) -> Vec<(Seq, Seq)> {
        let mut runs = Vec::new();
        let mut cursor = first.max(self.base);
        if cursor > last {
            return runs;
        }
        let from = self.buffer.partition_point(|p| p.end < cursor);
        for p in self.buffer.iter().skip(from) {
            if p.start > last {
                break;
            }
            if p.start > cursor {
                runs.push((cursor, p.start - 1));
            }
            if p.end >= last {
                return runs;
            }
            cursor = cursor.max(p.end + 1);
        }
        runs.push((cursor, last));
        runs
    }

    fn insert(&mut self, start: Seq, end: Seq, data: Vec<u8>) {
        if self.buffer.len() >= self.cfg.buffer_cap {
            // keep the older bytes; the newest range goes
            let newest = self.buffer.back().map(|p| p.start).unwrap_or(0);
            self.stats.buffer_drops += 1;
            if start > newest {
                return;
            }
            self.buffer.pop_back();
        }
        let mut pkt = BufferedPacket { start, end, data, index: self.next_index };
        self.next_index += 1;
        self.stats.packets_buffered += 1;

        if pkt.data.len() > self.padded_len {
            self.padded_len = pkt.data.len();
            for p in self.buffer.iter_mut() {
                p.data.resize(self.padded_len, 0);
            }
        } else {
            pkt.data.resize(self.padded_len, 0);
        }
        let pos = self.buffer.partition_point(|p| p.start < start);
        self.buffer.insert(pos, pkt);
    }
}
