//! Receiver-side coding layer.
//!
//! Coefficient vectors are kept in reduced row-echelon form over columns
//! ordered by byte sequence. A packet is *seen* once its column holds a
//! pivot, and it is decoded once its row has no other nonzero entry. The
//! ACK sent back to TCP names the first byte of the first unseen packet, so
//! the sender's window advances with every degree of freedom received,
//! before anything is necessarily decodable.

use crate::gf256::{self, Gf256};
use crate::segment::{decode_subheader, Flags, Segment, Seq, SUBHEADER_LEN};
use crate::wire::{CodedPacket, CodingHeaderMeta};

pub const DEFAULT_BUFFER_CAP: usize = 100;

#[derive(Debug, Clone)]
pub struct DecoderConfig {
    /// Rows the decoding buffer may hold, decoded-but-undropped ones included.
    pub buffer_cap: usize,
    /// Sequence number of the first stream byte.
    pub initial_seq: Seq,
    /// Bytes per buffer slot assumed before any packet has been seen.
    pub slot_bytes: u32,
}

impl Default for DecoderConfig {
    fn default() -> Self {
        DecoderConfig { buffer_cap: DEFAULT_BUFFER_CAP, initial_seq: 0, slot_bytes: 1460 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Column {
    pub start: Seq,
    /// Inclusive.
    pub end: Seq,
    pub pivot: bool,
    pub delivered: bool,
}

#[derive(Debug, Clone)]
struct Row {
    pivot: usize,
    coeffs: Vec<u8>,
    payload: Vec<u8>,
}

impl Row {
    fn is_unit(&self) -> bool {
        self.coeffs
            .iter()
            .enumerate()
            .all(|(i, &c)| if i == self.pivot { c == 1 } else { c == 0 })
    }
}

/// Row-reduced decoding matrix with one payload per row.
#[derive(Debug, Clone, Default)]
pub struct DecoderMatrix {
    columns: Vec<Column>,
    /// Sorted by pivot column. Every pivot entry is 1 and the rest of its
    /// column is 0.
    rows: Vec<Row>,
}

impl DecoderMatrix {
    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    /// Coefficient rows over [`columns`](Self::columns), in pivot order.
    pub fn coefficient_rows(&self) -> impl Iterator<Item = &[u8]> {
        self.rows.iter().map(|r| r.coeffs.as_slice())
    }

    fn find_column(&self, start: Seq) -> Result<usize, usize> {
        self.columns.binary_search_by_key(&start, |c| c.start)
    }

    fn insert_column(&mut self, at: usize, start: Seq, end: Seq) {
        self.columns.insert(at, Column { start, end, pivot: false, delivered: false });
        for row in &mut self.rows {
            row.coeffs.insert(at, 0);
            if row.pivot >= at {
                row.pivot += 1;
            }
        }
    }

    fn remove_column(&mut self, at: usize) {
        self.columns.remove(at);
        for row in &mut self.rows {
            debug_assert_eq!(row.coeffs[at], 0);
            row.coeffs.remove(at);
            if row.pivot > at {
                row.pivot -= 1;
            }
        }
    }

    fn row_for_pivot(&self, col: usize) -> Option<usize> {
        self.rows.binary_search_by_key(&col, |r| r.pivot).ok()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    /// Raised the rank.
    Innovative,
    /// Linearly dependent on what is already held; discarded.
    Redundant,
    /// Innovative, but the decoding buffer had no room; discarded.
    BufferFull,
}

/// Result of handing one coded packet to the decoder.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reception {
    pub ack: Seq,
    pub outcome: Outcome,
    /// Newly decoded packets, padding removed.
    pub delivered: Vec<Segment>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DecoderStats {
    pub received: u64,
    pub innovative: u64,
    pub redundant: u64,
    pub malformed: u64,
    pub buffer_full: u64,
    pub delivered_packets: u64,
    pub dropped_packets: u64,
}

#[derive(Debug)]
pub struct Decoder {
    cfg: DecoderConfig,
    matrix: DecoderMatrix,
    base: Seq,
    delivered_ack: Seq,
    recv_window: u32,
    /// One past the last byte of the dropped prefix.
    watermark: Seq,
    slot_bytes: u32,
    stats: DecoderStats,
}

impl Decoder {
    pub fn new(cfg: DecoderConfig) -> Decoder {
        Decoder {
            base: cfg.initial_seq,
            delivered_ack: cfg.initial_seq,
            recv_window: u16::MAX as u32,
            watermark: cfg.initial_seq,
            slot_bytes: cfg.slot_bytes.max(1),
            matrix: DecoderMatrix::default(),
            stats: DecoderStats::default(),
            cfg,
        }
    }

    pub fn matrix(&self) -> &DecoderMatrix {
        &self.matrix
    }

    pub fn stats(&self) -> DecoderStats {
        self.stats
    }

    pub fn base(&self) -> Seq {
        self.base
    }

    pub fn delivered_ack(&self) -> Seq {
        self.delivered_ack
    }

    pub fn recv_window(&self) -> u32 {
        self.recv_window
    }

    /// Starts of all seen packets still held.
    pub fn seen(&self) -> Vec<Seq> {
        self.matrix.columns.iter().filter(|c| c.pivot).map(|c| c.start).collect()
    }

    /// Parses and processes a serialized coded packet. Unparseable frames
    /// are dropped silently.
    pub fn receive_frame(&mut self, bytes: &[u8]) -> Option<Reception> {
        match CodedPacket::from_bytes(bytes) {
            Ok(pkt) => self.receive_coded(&pkt),
            Err(err) => {
                log::debug!("dropping unparseable coded frame: {err}");
                self.stats.malformed += 1;
                None
            }
        }
    }

    /// Uncoded SYN/RST passthrough.
    pub fn receive_bypass(&mut self, seg: Segment) -> Segment {
        seg
    }

    /// Folds one linear combination into the matrix. Returns `None` when
    /// the header contradicts what the decoder already knows.
    pub fn receive_coded(&mut self, pkt: &CodedPacket) -> Option<Reception> {
        self.stats.received += 1;
        if pkt.header.validate().is_err() {
            self.stats.malformed += 1;
            return None;
        }
        let Some(inserted) = self.register_columns(&pkt.header) else {
            self.stats.malformed += 1;
            return None;
        };

        let mut coeffs = vec![0u8; self.matrix.columns.len()];
        for e in pkt.header.entries.iter().filter(|e| !e.coeff.is_zero()) {
            let col = self.matrix.find_column(e.start).expect("registered above");
            coeffs[col] = e.coeff.0;
        }

        // Innovation test on coefficients alone.
        let mut factors = Vec::new();
        for (i, row) in self.matrix.rows.iter().enumerate() {
            let f = coeffs[row.pivot];
            if f != 0 {
                gf256::axpy(&mut coeffs, &row.coeffs, Gf256(f));
                factors.push((i, Gf256(f)));
            }
        }
        let pivot = coeffs.iter().position(|&c| c != 0);

        let outcome = match pivot {
            None => Outcome::Redundant,
            Some(_) if self.matrix.rows.len() >= self.cfg.buffer_cap => {
                self.update_base(pkt.header.base);
                if self.matrix.rows.len() >= self.cfg.buffer_cap {
                    Outcome::BufferFull
                } else {
                    // dropping freed a slot; column indices may have moved
                    return self.retry_after_drop(pkt);
                }
            }
            Some(_) => Outcome::Innovative,
        };

        let mut delivered = Vec::new();
        match (outcome, pivot) {
            (Outcome::Innovative, Some(pivot)) => {
                let mut payload = pkt.payload.clone();
                for (i, f) in factors {
                    gf256::axpy_extend(&mut payload, &self.matrix.rows[i].payload, f);
                }
                let norm = Gf256(coeffs[pivot]).inv().expect("pivot is nonzero");
                let coeffs = gf256::scaled(&coeffs, norm);
                let payload = gf256::scaled(&payload, norm);
                for row in &mut self.matrix.rows {
                    let f = row.coeffs[pivot];
                    if f != 0 {
                        gf256::axpy(&mut row.coeffs, &coeffs, Gf256(f));
                        gf256::axpy_extend(&mut row.payload, &payload, Gf256(f));
                    }
                }
                let at = self.matrix.rows.partition_point(|r| r.pivot < pivot);
                self.matrix.rows.insert(at, Row { pivot, coeffs, payload });
                self.matrix.columns[pivot].pivot = true;
                self.stats.innovative += 1;
                delivered = self.collect_decoded(&pkt.header);
            }
            _ => {
                for &col in inserted.iter().rev() {
                    self.matrix.remove_column(col);
                }
                match outcome {
                    Outcome::BufferFull => self.stats.buffer_full += 1,
                    _ => self.stats.redundant += 1,
                }
            }
        }

        self.update_base(pkt.header.base);
        Some(Reception { ack: self.first_unseen(), outcome, delivered })
    }

    fn retry_after_drop(&mut self, pkt: &CodedPacket) -> Option<Reception> {
        // undo the received count; receive_coded counts again
        self.stats.received -= 1;
        // columns registered on the first pass are still present and empty
        self.receive_coded(pkt)
    }

    /// Adds columns for unknown ranges in the header. Returns the indices of
    /// newly inserted columns in ascending order, or `None` if a range
    /// overlaps a known column or a dropped packet.
    fn register_columns(&mut self, header: &CodingHeaderMeta) -> Option<Vec<usize>> {
        for e in header.entries.iter().filter(|e| !e.coeff.is_zero()) {
            if e.start < self.watermark {
                return None;
            }
            match self.matrix.find_column(e.start) {
                Ok(i) if self.matrix.columns[i].end != e.end => return None,
                Ok(_) => {}
                Err(i) => {
                    let prev_overlaps = i > 0 && self.matrix.columns[i - 1].end >= e.start;
                    let next_overlaps =
                        i < self.matrix.columns.len() && self.matrix.columns[i].start <= e.end;
                    if prev_overlaps || next_overlaps {
                        return None;
                    }
                }
            }
        }
        let mut inserted = Vec::new();
        for e in header.entries.iter().filter(|e| !e.coeff.is_zero()) {
            if let Err(i) = self.matrix.find_column(e.start) {
                self.matrix.insert_column(i, e.start, e.end);
                for x in inserted.iter_mut() {
                    if *x >= i {
                        *x += 1;
                    }
                }
                inserted.push(i);
                let len = e.end - e.start + 1;
                self.slot_bytes = self.slot_bytes.max(len);
            }
        }
        inserted.sort_unstable();
        Some(inserted)
    }

    fn collect_decoded(&mut self, header: &CodingHeaderMeta) -> Vec<Segment> {
        let mut out = Vec::new();
        for row in &self.matrix.rows {
            let col = &mut self.matrix.columns[row.pivot];
            if col.delivered || !row.is_unit() {
                continue;
            }
            col.delivered = true;
            let len = (col.end - col.start) as usize + 1;
            let mut data = row.payload.clone();
            data.resize(SUBHEADER_LEN + len, 0);
            let flags = match decode_subheader(&data) {
                Some((seq, flags)) if seq == col.start => flags,
                Some((seq, _)) => {
                    log::warn!("decoded subheader seq {seq} disagrees with range start {}", col.start);
                    Flags::default()
                }
                None => Flags::default(),
            };
            out.push(Segment {
                src_port: header.src_port,
                dst_port: header.dst_port,
                seq: col.start,
                flags,
                payload: data.split_off(SUBHEADER_LEN),
            });
        }
        self.stats.delivered_packets += out.len() as u64;
        out
    }

    fn update_base(&mut self, base: Seq) {
        if base > self.base {
            self.base = base;
        }
        self.drop_obsolete();
    }

    /// First byte of the oldest packet not yet seen.
    pub fn first_unseen(&self) -> Seq {
        let mut expected = self.watermark;
        for col in &self.matrix.columns {
            // a range nobody has told us about yet is unseen too
            if col.start > expected || !col.pivot {
                return expected.min(col.start);
            }
            expected = col.end + 1;
        }
        expected
    }

    /// Records an ACK from the local TCP receiver. Never forwarded upstream.
    pub fn handle_receiver_ack(&mut self, ack: Seq, rwnd: u32) {
        if ack > self.delivered_ack {
            self.delivered_ack = ack;
        }
        self.recv_window = rwnd;
        self.drop_obsolete();
    }

    /// Drops decoded packets below `base` that the receiver TCP has ACKed.
    pub fn drop_obsolete(&mut self) -> usize {
        let mut dropped = 0;
        while let Some(col) = self.matrix.columns.first().copied() {
            let removable = col.delivered && col.end < self.base && col.end < self.delivered_ack;
            if !removable {
                break;
            }
            let row = self.matrix.row_for_pivot(0).expect("delivered column has a pivot row");
            self.matrix.rows.remove(row);
            self.matrix.remove_column(0);
            self.watermark = col.end + 1;
            dropped += 1;
        }
        self.stats.dropped_packets += dropped as u64;
        dropped
    }

    /// Receive window to advertise to the sender, relative to the current ACK.
    ///
    /// Takes the tighter of the receiver TCP's limit and what the decoding
    /// buffer can still hold. Rows already delivered count as free space.
    pub fn advertised_window(&self) -> u32 {
        let ack = self.first_unseen() as u64;
        let tcp_last = self.delivered_ack as u64 + self.recv_window as u64;
        let occupied = self.matrix.rows.iter().filter(|r| !self.matrix.columns[r.pivot].delivered).count();
        let free = self.cfg.buffer_cap.saturating_sub(occupied) as u64;
        let buf_last = ack + free * self.slot_bytes as u64;
        tcp_last.min(buf_last).saturating_sub(ack).min(u32::MAX as u64) as u32
    }
}
