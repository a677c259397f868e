mod common;

use tcpnc::wire::{decode_header, encode_header, header_len, CodedPacket};

#[test]
fn golden_vectors_match_bit_for_bit() {
    for (name, meta, payload) in common::golden_vectors() {
        let bytes = common::read_hex(name);
        let pkt = CodedPacket { header: meta.clone(), payload: payload.clone() };
        assert_eq!(pkt.to_bytes().unwrap(), bytes, "{name}");
        assert_eq!(encode_header(&meta).unwrap().len(), header_len(meta.n()), "{name}");
        let (back, off) = decode_header(&bytes).unwrap();
        assert_eq!(back, meta, "{name}");
        assert_eq!(&bytes[off..], &payload[..], "{name}");
    }
}
