//! TCP segments and ACKs as exchanged between the transport models and the
//! coding layer.

use serde::{Deserialize, Serialize};

/// Absolute byte sequence number. Sessions never wrap the 32-bit space.
pub type Seq = u32;

/// Bytes of IPv4 header charged to every frame on the link.
pub const IP_HEADER_LEN: usize = 20;
/// Bytes of a plain TCP header (no options).
pub const TCP_HEADER_LEN: usize = 20;
/// TCP header minus the two port fields. Coded together with the payload.
pub const SUBHEADER_LEN: usize = TCP_HEADER_LEN - 4;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Flags {
    pub syn: bool,
    pub rst: bool,
    pub fin: bool,
    pub psh: bool,
}

impl Flags {
    pub const PSH: Flags = Flags { syn: false, rst: false, fin: false, psh: true };
    pub const SYN: Flags = Flags { syn: true, rst: false, fin: false, psh: false };
    pub const RST: Flags = Flags { syn: false, rst: true, fin: false, psh: false };

    fn bits(self) -> u8 {
        (self.fin as u8) | (self.syn as u8) << 1 | (self.rst as u8) << 2 | (self.psh as u8) << 3
    }

    fn from_bits(b: u8) -> Flags {
        Flags {
            fin: b & 0x01 != 0,
            syn: b & 0x02 != 0,
            rst: b & 0x04 != 0,
            psh: b & 0x08 != 0,
        }
    }
}

/// A contiguous range of the sender's byte stream plus control flags.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment {
    pub src_port: u16,
    pub dst_port: u16,
    pub seq: Seq,
    pub flags: Flags,
    pub payload: Vec<u8>,
}

impl Segment {
    pub fn data(src_port: u16, dst_port: u16, seq: Seq, payload: Vec<u8>) -> Segment {
        Segment { src_port, dst_port, seq, flags: Flags::default(), payload }
    }

    pub fn control(src_port: u16, dst_port: u16, seq: Seq, flags: Flags) -> Segment {
        Segment { src_port, dst_port, seq, flags, payload: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.payload.len()
    }

    pub fn is_empty(&self) -> bool {
        self.payload.is_empty()
    }

    /// SYN and RST segments skip the coding buffer.
    pub fn is_control(&self) -> bool {
        self.flags.syn || self.flags.rst
    }

    /// Last byte covered, inclusive. `None` for an empty segment.
    pub fn last_byte(&self) -> Option<Seq> {
        if self.payload.is_empty() {
            None
        } else {
            Some(self.seq + self.payload.len() as u32 - 1)
        }
    }

    /// One past the last byte.
    pub fn end_exclusive(&self) -> Seq {
        self.seq + self.payload.len() as u32
    }
}

/// A cumulative TCP acknowledgement with its advertised receive window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ack {
    pub ack: Seq,
    pub window: u32,
}

/// Synthetic 16-byte subheader: seq(4) ack(4) offset/flags(2) window(2)
/// checksum(2) urgent(2). Only seq and flags carry information here.
pub fn encode_subheader(seq: Seq, flags: Flags) -> [u8; SUBHEADER_LEN] {
    let mut out = [0u8; SUBHEADER_LEN];
    out[0..4].copy_from_slice(&seq.to_be_bytes());
    // data offset of 5 words in the high nibble, as a plain TCP header would
    out[8] = 5 << 4;
    out[9] = flags.bits();
    out
}

pub fn decode_subheader(bytes: &[u8]) -> Option<(Seq, Flags)> {
    if bytes.len() < SUBHEADER_LEN {
        return None;
    }
    let seq = u32::from_be_bytes([bytes[0], bytes[1], bytes[2], bytes[3]]);
    Some((seq, Flags::from_bits(bytes[9])))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subheader_roundtrip() {
        let flags = Flags { psh: true, fin: true, ..Flags::default() };
        let sh = encode_subheader(123_456, flags);
        assert_eq!(decode_subheader(&sh), Some((123_456, flags)));
        assert_eq!(decode_subheader(&sh[..10]), None);
    }

    #[test]
    fn segment_ranges() {
        let s = Segment::data(1, 2, 1000, vec![0; 1000]);
        assert_eq!(s.last_byte(), Some(1999));
        assert_eq!(s.end_exclusive(), 2000);
        assert!(!s.is_control());
        assert!(Segment::control(1, 2, 0, Flags::SYN).is_control());
        assert_eq!(Segment::control(1, 2, 0, Flags::RST).last_byte(), None);
    }
}
