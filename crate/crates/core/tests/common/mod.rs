//! Helpers shared by the integration tests. The field and rank oracles here
//! deliberately avoid the crate's own table-based arithmetic.

#![allow(dead_code)]

use std::path::PathBuf;

use tcpnc::gf256::Gf256;
use tcpnc::wire::{CodingHeaderMeta, HeaderEntry};

/// Shift-and-add multiplication modulo x^8 + x^4 + x^3 + x^2 + 1.
pub fn poly_mul(mut a: u8, mut b: u8) -> u8 {
    let mut acc = 0u8;
    while b != 0 {
        if b & 1 != 0 {
            acc ^= a;
        }
        let carry = a & 0x80 != 0;
        a <<= 1;
        if carry {
            a ^= 0x1D;
        }
        b >>= 1;
    }
    acc
}

/// Inverse by exhaustive search.
pub fn poly_inv(a: u8) -> u8 {
    (1..=255u8).find(|&b| poly_mul(a, b) == 1).expect("nonzero element has an inverse")
}

/// Pivot columns of the reduced row-echelon form of `rows` (each row has the
/// same length), plus the rank. Column j is a pivot iff adding it raises the
/// rank of the column prefix, which is independent of elimination order.
pub fn rank_and_pivots(rows: &[Vec<u8>]) -> (usize, Vec<usize>) {
    let width = rows.first().map_or(0, |r| r.len());
    let mut pivots = Vec::new();
    let mut prev = 0;
    for j in 0..width {
        let prefix: Vec<Vec<u8>> = rows.iter().map(|r| r[..=j].to_vec()).collect();
        let r = rank(prefix);
        if r > prev {
            pivots.push(j);
        }
        prev = r;
    }
    (prev, pivots)
}

/// Plain Gaussian elimination over GF(256) using `poly_mul`/`poly_inv`.
pub fn rank(mut m: Vec<Vec<u8>>) -> usize {
    let width = m.first().map_or(0, |r| r.len());
    let mut r = 0;
    for c in 0..width {
        let Some(p) = (r..m.len()).find(|&i| m[i][c] != 0) else {
            continue;
        };
        m.swap(r, p);
        let inv = poly_inv(m[r][c]);
        for x in m[r].iter_mut() {
            *x = poly_mul(*x, inv);
        }
        for i in 0..m.len() {
            if i != r && m[i][c] != 0 {
                let f = m[i][c];
                let pivot = m[r].clone();
                for (x, &y) in m[i].iter_mut().zip(&pivot) {
                    *x ^= poly_mul(f, y);
                }
            }
        }
        r += 1;
    }
    r
}

pub fn golden_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

/// Reads a `.hex` vector: whitespace-separated hex, `#` starts a comment.
pub fn read_hex(name: &str) -> Vec<u8> {
    let text = std::fs::read_to_string(golden_path(name)).expect("golden file");
    let digits: String = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or(""))
        .flat_map(|l| l.split_whitespace())
        .collect();
    hex::decode(digits).expect("valid hex")
}

fn entry(start: u32, end: u32, coeff: u8) -> HeaderEntry {
    HeaderEntry { start, end, coeff: Gf256(coeff) }
}

/// Each golden file with the header it encodes and any trailing payload.
pub fn golden_vectors() -> Vec<(&'static str, CodingHeaderMeta, Vec<u8>)> {
    let meta = |src_port, dst_port, base, entries| CodingHeaderMeta { src_port, dst_port, base, entries };
    vec![
        ("header_n1.hex", meta(40000, 5001, 1000, vec![entry(1000, 2459, 0x53)]), vec![]),
        (
            "header_n3.hex",
            meta(
                40000,
                5001,
                65536,
                vec![entry(65536, 66995, 0x02), entry(66996, 68455, 0xFF), entry(68456, 68499, 0x1D)],
            ),
            vec![],
        ),
        ("header_gap.hex", meta(40000, 5001, 0, vec![entry(0, 99, 0x01), entry(200, 299, 0x80)]), vec![]),
        ("coded_packet.hex", meta(1, 2, 0, vec![entry(0, 3, 0x07)]), vec![0xDE, 0xAD, 0xBE, 0xEF]),
    ]
}

pub mod decoding {
    use rand::Rng;
    use tcpnc::decoder::{Decoder, DecoderConfig, Outcome};
    use tcpnc::gf256::Gf256;
    use tcpnc::segment::{encode_subheader, Flags, SUBHEADER_LEN};
    use tcpnc::wire::{CodedPacket, CodingHeaderMeta, HeaderEntry};

    use super::{poly_mul, rank, rank_and_pivots};

    struct Packet {
        start: u32,
        end: u32,
        data: Vec<u8>,
    }

    /// Random contiguous packets of 1..=40 payload bytes each.
    fn packets(rng: &mut impl Rng, k: usize) -> Vec<Packet> {
        let mut start = 0u32;
        (0..k)
            .map(|_| {
                let len = rng.gen_range(1..=40u32);
                let mut data = encode_subheader(start, Flags::default()).to_vec();
                data.extend((0..len).map(|_| rng.gen::<u8>()));
                let p = Packet { start, end: start + len - 1, data };
                start += len;
                p
            })
            .collect()
    }

    /// Coefficients for the next combination: usually a random subset, and
    /// sometimes a mix of two earlier rows to force a redundant arrival.
    fn next_row(rng: &mut impl Rng, k: usize, rows: &[Vec<u8>]) -> Vec<u8> {
        loop {
            let row: Vec<u8> = if rows.len() >= 2 && rng.gen_bool(0.25) {
                let x = &rows[rng.gen_range(0..rows.len())];
                let y = &rows[rng.gen_range(0..rows.len())];
                let (a, b) = (rng.gen_range(1..=255u8), rng.gen_range(0..=255u8));
                (0..k).map(|j| poly_mul(a, x[j]) ^ poly_mul(b, y[j])).collect()
            } else {
                (0..k).map(|_| if rng.gen_bool(0.5) { rng.gen_range(1..=255u8) } else { 0 }).collect()
            };
            if row.iter().any(|&c| c != 0) {
                return row;
            }
        }
    }

    fn combination(packets: &[Packet], row: &[u8]) -> CodedPacket {
        let width = packets
            .iter()
            .zip(row)
            .filter(|(_, &c)| c != 0)
            .map(|(p, _)| p.data.len())
            .max()
            .unwrap();
        let mut payload = vec![0u8; width];
        let mut entries = Vec::new();
        for (p, &c) in packets.iter().zip(row) {
            if c == 0 {
                continue;
            }
            for (acc, &b) in payload.iter_mut().zip(&p.data) {
                *acc ^= poly_mul(c, b);
            }
            entries.push(HeaderEntry { start: p.start, end: p.end, coeff: Gf256(c) });
        }
        CodedPacket { header: CodingHeaderMeta { src_port: 1, dst_port: 2, base: 0, entries }, payload }
    }

    /// Whether unit vector e_j lies in the row space of `rows`.
    fn decodable(rows: &[Vec<u8>], j: usize, k: usize) -> bool {
        let mut with = rows.to_vec();
        let mut e = vec![0u8; k];
        e[j] = 1;
        with.push(e);
        rank(with) == rank(rows.to_vec())
    }

    /// One randomized trial of at most 8 packets and 12 combinations,
    /// checking every decoder decision against the oracle.
    pub fn trial(rng: &mut impl Rng) -> Result<(), String> {
        let k = rng.gen_range(1..=8);
        let m = rng.gen_range(1..=12);
        let packets = packets(rng, k);
        let mut dec = Decoder::new(DecoderConfig { buffer_cap: 64, initial_seq: 0, slot_bytes: 64 });
        let mut rows: Vec<Vec<u8>> = Vec::new();
        let mut delivered = vec![false; k];
        let (mut prev_rank, mut prev_ack) = (0, 0);
        for t in 0..m {
            let row = next_row(rng, k, &rows);
            let rec = dec
                .receive_coded(&combination(&packets, &row))
                .ok_or_else(|| format!("step {t}: well-formed combination dropped"))?;
            rows.push(row);
            let (r, pivots) = rank_and_pivots(&rows);

            let want = if r > prev_rank { Outcome::Innovative } else { Outcome::Redundant };
            if rec.outcome != want {
                return Err(format!("step {t}: outcome {:?}, oracle {want:?}", rec.outcome));
            }
            let seen: Vec<u32> = pivots.iter().map(|&j| packets[j].start).collect();
            if dec.seen() != seen {
                return Err(format!("step {t}: seen {:?}, oracle {seen:?}", dec.seen()));
            }
            let first_unseen = (0..k)
                .find(|j| !pivots.contains(j))
                .map_or(packets[k - 1].end + 1, |j| packets[j].start);
            if rec.ack != first_unseen || rec.ack < prev_ack {
                return Err(format!("step {t}: ack {}, oracle {first_unseen}", rec.ack));
            }
            for seg in &rec.delivered {
                let j = packets
                    .iter()
                    .position(|p| p.start == seg.seq)
                    .ok_or_else(|| format!("step {t}: delivered unknown seq {}", seg.seq))?;
                if seg.payload != packets[j].data[SUBHEADER_LEN..] {
                    return Err(format!("step {t}: packet {j} decoded to wrong bytes"));
                }
                if std::mem::replace(&mut delivered[j], true) {
                    return Err(format!("step {t}: packet {j} delivered twice"));
                }
            }
            for (j, &d) in delivered.iter().enumerate() {
                if d != decodable(&rows, j, k) {
                    return Err(format!("step {t}: packet {j} delivered={d}, oracle disagrees"));
                }
            }
            prev_rank = r;
            prev_ack = rec.ack;
        }
        Ok(())
    }
}

pub mod tokens {
    use tcpnc::decoder::{Decoder, DecoderConfig, Outcome};
    use tcpnc::encoder::{Encoder, EncoderConfig};
    use tcpnc::segment::Segment;

    pub const W: usize = 3;
    const SEG: u32 = 100;

    pub struct Scenario {
        pub name: &'static str,
        pub redundancy: f64,
        pub arrivals: u32,
        /// Indices, in emission order, of coded packets lost in transit.
        pub lost: &'static [usize],
        /// Whether the deficit is expected to reach W.
        pub reaches_w: bool,
    }

    pub fn scenarios() -> Vec<Scenario> {
        let s = |name, redundancy, arrivals, lost, reaches_w| Scenario { name, redundancy, arrivals, lost, reaches_w };
        vec![
            s("lossless", 1.0, 12, &[], false),
            s("isolated losses", 1.0, 12, &[3, 7], false),
            s("two in a row", 1.0, 12, &[4, 5], false),
            s("three in a row", 1.0, 12, &[4, 5, 6], true),
            s("three spread out", 1.0, 14, &[1, 5, 9], true),
            s("redundancy repays losses", 2.0, 12, &[2, 3, 5, 6, 11, 14, 15], false),
            s("burst beyond redundancy", 1.5, 14, &[6, 7, 8, 9, 10, 11], true),
        ]
    }

    /// Replays a scenario. While the deficit (arrivals minus innovative
    /// receptions) stays below W the ACK must request exactly the packet
    /// after the first `arrivals - deficit`, and no three duplicate ACKs may
    /// occur in a row. The first reception at deficit >= W must repeat the
    /// previous ACK.
    pub fn run(sc: &Scenario) -> Result<String, String> {
        let cfg = EncoderConfig::new(sc.redundancy, W).unwrap().with_seed(11).with_buffer_cap(1000);
        let mut enc = Encoder::new(cfg, 0).unwrap();
        let mut dec = Decoder::new(DecoderConfig { buffer_cap: 1000, initial_seq: 0, slot_bytes: 1460 });
        let (mut emitted, mut innovative, mut prev_ack, mut dup_run) = (0usize, 0u32, 0u32, 0u32);
        for a in 1..=sc.arrivals {
            let seq = (a - 1) * SEG;
            let payload = (0..SEG).map(|i| (seq + i) as u8).collect();
            for pkt in enc.ingest_segment(&Segment::data(1, 2, seq, payload)).unwrap() {
                let index = emitted;
                emitted += 1;
                if sc.lost.contains(&index) {
                    continue;
                }
                let rec = dec.receive_coded(&pkt).ok_or("combination dropped")?;
                if rec.outcome == Outcome::Innovative {
                    innovative += 1;
                }
                let deficit = a - innovative;
                let dup = rec.ack == prev_ack;
                dup_run = if dup { dup_run + 1 } else { 0 };
                if deficit as usize >= W {
                    if !sc.reaches_w {
                        return Err(format!("deficit reached {deficit} at packet {index}"));
                    }
                    if !dup {
                        return Err(format!("packet {index}: deficit {deficit} but ACK advanced to {}", rec.ack));
                    }
                    return Ok(format!("first duplicate at coded packet {index}, deficit {deficit}"));
                }
                if rec.ack != (a - deficit) * SEG {
                    return Err(format!("packet {index}: ack {} with deficit {deficit}", rec.ack));
                }
                if dup_run >= 3 {
                    return Err(format!("packet {index}: duplicate-ACK burst at deficit {deficit}"));
                }
                prev_ack = rec.ack;
            }
        }
        if sc.reaches_w {
            Err("deficit never reached W".into())
        } else {
            Ok("no duplicate-ACK burst".into())
        }
    }
}
