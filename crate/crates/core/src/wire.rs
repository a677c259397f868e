//! Network coding header codec.
//!
//! Layout, all fields big-endian:
//!
//! ```text
//! src_port(2) dst_port(2) | base(4) n(1)
//! entry 1:   start_1(4)               end_1 - start_1(2) coeff_1(1)
//! entry i>1: start_i - end_{i-1}(2)   end_i - start_i(2) coeff_i(1)
//! ```
//!
//! The header is `4 + 5n + 7` bytes. The `5n + 7` part is the coding
//! overhead proper; the ports are moved out of the TCP header rather than
//! added. Payload length is not carried here: the enclosing frame knows it.

use thiserror::Error;

use crate::gf256::Gf256;
use crate::segment::{Segment, Seq, IP_HEADER_LEN, TCP_HEADER_LEN};

pub const PORTS_LEN: usize = 4;
pub const MAX_ENTRIES: usize = 255;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WireError {
    #[error("header has no entries")]
    NoEntries,
    #[error("header has {0} entries, at most 255 fit")]
    TooManyEntries(usize),
    #[error("entry {index}: end {end} precedes start {start}")]
    InvertedRange { index: usize, start: Seq, end: Seq },
    #[error("entry {index}: range of {span} bytes does not fit a 16-bit offset")]
    RangeTooLong { index: usize, span: u64 },
    #[error("entry {index}: start {start} does not follow previous end {prev_end}")]
    Unordered { index: usize, start: Seq, prev_end: Seq },
    #[error("entry {index}: gap of {gap} from previous end does not fit a 16-bit offset")]
    GapTooLong { index: usize, gap: u64 },
    #[error("entry {index}: byte sequence overflows 32 bits")]
    SeqOverflow { index: usize },
    #[error("truncated header: need {need} bytes, have {have}")]
    Truncated { need: usize, have: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HeaderEntry {
    pub start: Seq,
    /// Inclusive.
    pub end: Seq,
    pub coeff: Gf256,
}

impl HeaderEntry {
    pub fn len(&self) -> usize {
        (self.end - self.start) as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodingHeaderMeta {
    pub src_port: u16,
    pub dst_port: u16,
    pub base: Seq,
    pub entries: Vec<HeaderEntry>,
}

impl CodingHeaderMeta {
    pub fn n(&self) -> usize {
        self.entries.len()
    }

    /// Checks the invariants `encode_header` relies on.
    pub fn validate(&self) -> Result<(), WireError> {
        let n = self.entries.len();
        if n == 0 {
            return Err(WireError::NoEntries);
        }
        if n > MAX_ENTRIES {
            return Err(WireError::TooManyEntries(n));
        }
        let mut prev_end: Option<Seq> = None;
        for (index, e) in self.entries.iter().enumerate() {
            if e.end < e.start {
                return Err(WireError::InvertedRange { index, start: e.start, end: e.end });
            }
            let span = (e.end - e.start) as u64;
            if span > u16::MAX as u64 {
                return Err(WireError::RangeTooLong { index, span });
            }
            if let Some(prev_end) = prev_end {
                if e.start <= prev_end {
                    return Err(WireError::Unordered { index, start: e.start, prev_end });
                }
                let gap = (e.start - prev_end) as u64;
                if gap > u16::MAX as u64 {
                    return Err(WireError::GapTooLong { index, gap });
                }
            }
            prev_end = Some(e.end);
        }
        Ok(())
    }
}

/// Coding overhead in bytes for a combination of `n` packets, ports excluded.
pub const fn header_overhead(n: usize) -> usize {
    5 * n + 7
}

/// Total encoded header length, ports included.
pub const fn header_len(n: usize) -> usize {
    PORTS_LEN + header_overhead(n)
}

pub fn encode_header(meta: &CodingHeaderMeta) -> Result<Vec<u8>, WireError> {
    let mut out = Vec::with_capacity(header_len(meta.n()));
    encode_header_into(meta, &mut out)?;
    Ok(out)
}

pub fn encode_header_into(meta: &CodingHeaderMeta, out: &mut Vec<u8>) -> Result<(), WireError> {
    meta.validate()?;
    out.extend_from_slice(&meta.src_port.to_be_bytes());
    out.extend_from_slice(&meta.dst_port.to_be_bytes());
    out.extend_from_slice(&meta.base.to_be_bytes());
    out.push(meta.entries.len() as u8);
    let mut prev_end: Option<Seq> = None;
    for e in &meta.entries {
        match prev_end {
            None => out.extend_from_slice(&e.start.to_be_bytes()),
            Some(p) => out.extend_from_slice(&((e.start - p) as u16).to_be_bytes()),
        }
        out.extend_from_slice(&((e.end - e.start) as u16).to_be_bytes());
        out.push(e.coeff.0);
        prev_end = Some(e.end);
    }
    Ok(())
}

/// Parses a header, returning it with the offset where the payload begins.
pub fn decode_header(bytes: &[u8]) -> Result<(CodingHeaderMeta, usize), WireError> {
    // fixed part: ports, base, n, and the first entry
    let fixed = header_len(1);
    if bytes.len() < PORTS_LEN + 5 {
        return Err(WireError::Truncated { need: fixed, have: bytes.len() });
    }
    let n = bytes[8] as usize;
    if n == 0 {
        return Err(WireError::NoEntries);
    }
    let need = header_len(n);
    if bytes.len() < need {
        return Err(WireError::Truncated { need, have: bytes.len() });
    }
    let be16 = |i: usize| u16::from_be_bytes([bytes[i], bytes[i + 1]]);
    let be32 = |i: usize| u32::from_be_bytes([bytes[i], bytes[i + 1], bytes[i + 2], bytes[i + 3]]);

    let mut entries = Vec::with_capacity(n);
    let mut pos = 9;
    let mut prev_end: Seq = 0;
    for index in 0..n {
        let start = if index == 0 {
            let s = be32(pos);
            pos += 4;
            s
        } else {
            let gap = be16(pos);
            pos += 2;
            if gap == 0 {
                // zero gap would overlap the previous range
                return Err(WireError::Unordered { index, start: prev_end, prev_end });
            }
            prev_end.checked_add(gap as u32).ok_or(WireError::SeqOverflow { index })?
        };
        let span = be16(pos);
        let end = start.checked_add(span as u32).ok_or(WireError::SeqOverflow { index })?;
        let coeff = Gf256(bytes[pos + 2]);
        pos += 3;
        entries.push(HeaderEntry { start, end, coeff });
        prev_end = end;
    }
    debug_assert_eq!(pos, need);
    let meta = CodingHeaderMeta {
        src_port: be16(0),
        dst_port: be16(2),
        base: be32(4),
        entries,
    };
    Ok((meta, pos))
}

/// A random linear combination of buffered packets and the header naming it.
///
/// The payload covers the TCP subheader and data of every involved packet,
/// zero-padded to the longest of them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodedPacket {
    pub header: CodingHeaderMeta,
    pub payload: Vec<u8>,
}

impl CodedPacket {
    pub fn to_bytes(&self) -> Result<Vec<u8>, WireError> {
        let mut out = Vec::with_capacity(header_len(self.header.n()) + self.payload.len());
        encode_header_into(&self.header, &mut out)?;
        out.extend_from_slice(&self.payload);
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<CodedPacket, WireError> {
        let (header, off) = decode_header(bytes)?;
        Ok(CodedPacket { header, payload: bytes[off..].to_vec() })
    }

    /// Bytes on the wire including the IP header.
    pub fn wire_len(&self) -> usize {
        IP_HEADER_LEN + header_len(self.header.n()) + self.payload.len()
    }
}

/// What the coding layer hands to the network.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Frame {
    /// Serialized coded packet: header followed by payload.
    Coded(Vec<u8>),
    /// SYN/RST passed through without coding.
    Bypass(Segment),
}

impl Frame {
    pub fn wire_len(&self) -> usize {
        match self {
            Frame::Coded(bytes) => IP_HEADER_LEN + bytes.len(),
            Frame::Bypass(seg) => IP_HEADER_LEN + TCP_HEADER_LEN + seg.len(),
        }
    }
}
