//! Length-prefixed JSON framing for node-to-node TCP streams.

use thiserror::Error;

use super::{Beacon, PeerMessage};

/// Frames larger than this are refused before allocation.
pub const MAX_FRAME_BYTES: usize = 32 * 1024 * 1024;

#[derive(Debug, Error)]
pub enum WireError {
    #[error("frame of {0} bytes exceeds limit")]
    TooLarge(usize),
    #[error("malformed frame: {0}")]
    Json(#[from] serde_json::Error),
}

pub fn encode_frame(msg: &PeerMessage) -> Vec<u8> {
    let json = serde_json::to_vec(msg).expect("peer messages always serialize");
    let mut out = Vec::with_capacity(json.len() + 4);
    out.extend_from_slice(&(json.len() as u32).to_be_bytes());
    out.extend_from_slice(&json);
    out
}

/// Decodes the frame at the start of `buf`.
///
/// Returns `Ok(None)` if more bytes are needed, otherwise the message and
/// the number of bytes consumed.
pub fn decode_frame(buf: &[u8]) -> Result<Option<(PeerMessage, usize)>, WireError> {
    if buf.len() < 4 {
        return Ok(None);
    }
    let len = u32::from_be_bytes(buf[..4].try_into().unwrap()) as usize;
    if len > MAX_FRAME_BYTES {
        return Err(WireError::TooLarge(len));
    }
    if buf.len() < 4 + len {
        return Ok(None);
    }
    let msg = serde_json::from_slice(&buf[4..4 + len])?;
    Ok(Some((msg, 4 + len)))
}

pub fn encode_beacon(beacon: &Beacon) -> Vec<u8> {
    serde_json::to_vec(beacon).expect("beacons always serialize")
}

pub fn decode_beacon(datagram: &[u8]) -> Option<Beacon> {
    serde_json::from_slice(datagram).ok()
}
