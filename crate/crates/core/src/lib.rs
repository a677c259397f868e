//! TCP/NC: a sliding-window random linear network coding layer that sits
//! between a TCP sender and the network, masking link losses from TCP.
//!
//! The crate contains the coding layer itself ([`encoder`], [`decoder`],
//! [`wire`], [`gf256`]), a simplified TCP Reno ([`tcp_reno`]), a deterministic
//! discrete-event simulator of a lossy bottleneck link ([`netsim`]), and the
//! experiment runner behind the `tcpnc-exp` binary ([`expcli`]).

pub mod decoder;
pub mod encoder;
pub mod expcli;
pub mod gf256;
pub mod netsim;
pub mod segment;
pub mod tcp_reno;
pub mod wire;
