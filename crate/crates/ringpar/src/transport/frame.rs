//! Framed wire format shared by the in-process and TCP transports.
//!
//! Every frame is a fixed 16-byte header followed by the payload:
//!
//! ```text
//! +-------+---------+----------+--------+-------------+-------------+---------+
//! | magic | version | msg_type | round  | block_index | payload_len | payload |
//! | RPAR  | u8 (=1) | u8       | u16 LE | u32 LE      | u32 LE      | bytes   |
//! +-------+---------+----------+--------+-------------+-------------+---------+
//! ```
//!
//! Payloads carry little-endian IEEE-754 64-bit elements, so `payload_len` is
//! always a multiple of 8 for gradient frames.

use std::io::{ErrorKind, Read, Write};

use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"RPAR";
pub const VERSION: u8 = 1;
pub const HEADER_LEN: usize = 16;

/// Upper bound on a single payload; a header claiming more than this is
/// treated as corrupt rather than honored with a giant allocation.
pub const MAX_PAYLOAD_BYTES: u32 = 1 << 30;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u8)]
pub enum MsgType {
    /// A block of gradient elements.
    GradBlock = 0,
    /// Setup handshake; `block_index` carries the sender's rank.
    Hello = 1,
    /// Sender has finished its session.
    Done = 2,
}

impl MsgType {
    fn from_byte(byte: u8) -> Result<Self> {
        match byte {
            0 => Ok(MsgType::GradBlock),
            1 => Ok(MsgType::Hello),
            2 => Ok(MsgType::Done),
            other => Err(Error::protocol(format!("unknown message type {other}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Frame {
    pub msg_type: MsgType,
    pub round: u16,
    pub block_index: u32,
    pub payload: Vec<f64>,
}

impl Frame {
    pub fn grad_block(round: u16, block_index: u32, payload: &[f64]) -> Self {
        Frame {
            msg_type: MsgType::GradBlock,
            round,
            block_index,
            payload: payload.to_vec(),
        }
    }

    pub fn hello(rank: usize) -> Self {
        Frame {
            msg_type: MsgType::Hello,
            round: 0,
            block_index: rank as u32,
            payload: Vec::new(),
        }
    }

    pub fn done() -> Self {
        Frame {
            msg_type: MsgType::Done,
            round: 0,
            block_index: 0,
            payload: Vec::new(),
        }
    }

    pub fn payload_bytes(&self) -> usize {
        self.payload.len() * 8
    }

    /// Total size on the wire, header included.
    pub fn wire_len(&self) -> usize {
        HEADER_LEN + self.payload_bytes()
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.wire_len());
        out.extend_from_slice(&MAGIC);
        out.push(VERSION);
        out.push(self.msg_type as u8);
        out.extend_from_slice(&self.round.to_le_bytes());
        out.extend_from_slice(&self.block_index.to_le_bytes());
        out.extend_from_slice(&(self.payload_bytes() as u32).to_le_bytes());
        for value in &self.payload {
            out.extend_from_slice(&value.to_le_bytes());
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_LEN {
            return Err(Error::protocol(format!(
                "frame truncated: {} bytes, header needs {HEADER_LEN}",
                bytes.len()
            )));
        }
        let mut header = [0u8; HEADER_LEN];
        header.copy_from_slice(&bytes[..HEADER_LEN]);
        let (msg_type, round, block_index, payload_len) = parse_header(&header)?;
        if bytes.len() - HEADER_LEN != payload_len as usize {
            return Err(Error::protocol(format!(
                "payload length mismatch: header says {payload_len}, got {}",
                bytes.len() - HEADER_LEN
            )));
        }
        let payload = decode_payload(&bytes[HEADER_LEN..])?;
        Ok(Frame {
            msg_type,
            round,
            block_index,
            payload,
        })
    }

    /// Reads one frame from a byte stream, blocking until it is complete.
    ///
    /// A clean EOF before the first header byte maps to [`Error::LinkClosed`];
    /// EOF mid-frame is a protocol violation.
    pub fn read_from(reader: &mut impl Read) -> Result<Self> {
        let mut header = [0u8; HEADER_LEN];
        if let Err(err) = reader.read_exact(&mut header) {
            return Err(match err.kind() {
                ErrorKind::UnexpectedEof => Error::LinkClosed,
                _ => Error::Io(err),
            });
        }
        let (msg_type, round, block_index, payload_len) = parse_header(&header)?;
        let mut payload_bytes = vec![0u8; payload_len as usize];
        reader
            .read_exact(&mut payload_bytes)
            .map_err(|err| match err.kind() {
                ErrorKind::UnexpectedEof => Error::protocol("link closed mid-frame".to_string()),
                _ => Error::Io(err),
            })?;
        let payload = decode_payload(&payload_bytes)?;
        Ok(Frame {
            msg_type,
            round,
            block_index,
            payload,
        })
    }

    pub fn write_to(&self, writer: &mut impl Write) -> Result<()> {
        writer.write_all(&self.encode())?;
        writer.flush()?;
        Ok(())
    }
}

fn parse_header(header: &[u8; HEADER_LEN]) -> Result<(MsgType, u16, u32, u32)> {
    if header[0..4] != MAGIC {
        return Err(Error::protocol(format!(
            "bad magic {:?}, expected {:?}",
            &header[0..4],
            MAGIC
        )));
    }
    if header[4] != VERSION {
        return Err(Error::protocol(format!(
            "unsupported version {}, expected {VERSION}",
            header[4]
        )));
    }
    let msg_type = MsgType::from_byte(header[5])?;
    let round = u16::from_le_bytes([header[6], header[7]]);
    let block_index = u32::from_le_bytes([header[8], header[9], header[10], header[11]]);
    let payload_len = u32::from_le_bytes([header[12], header[13], header[14], header[15]]);
    if payload_len > MAX_PAYLOAD_BYTES {
        return Err(Error::protocol(format!(
            "payload length {payload_len} exceeds limit {MAX_PAYLOAD_BYTES}"
        )));
    }
    if !payload_len.is_multiple_of(8) {
        return Err(Error::protocol(format!(
            "payload length {payload_len} is not a multiple of 8"
        )));
    }
    Ok((msg_type, round, block_index, payload_len))
}

fn decode_payload(bytes: &[u8]) -> Result<Vec<f64>> {
    if !bytes.len().is_multiple_of(8) {
        return Err(Error::protocol(format!(
            "payload of {} bytes is not a multiple of 8",
            bytes.len()
        )));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|chunk| f64::from_le_bytes(chunk.try_into().unwrap()))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_layout_is_fixed() {
        let frame = Frame::grad_block(7, 3, &[1.5, -2.0, 0.25]);
        let bytes = frame.encode();
        assert_eq!(&bytes[0..4], b"RPAR");
        assert_eq!(bytes[4], 1);
        assert_eq!(bytes[5], 0);
        assert_eq!(u16::from_le_bytes([bytes[6], bytes[7]]), 7);
        assert_eq!(
            u32::from_le_bytes([bytes[8], bytes[9], bytes[10], bytes[11]]),
            3
        );
        assert_eq!(
            u32::from_le_bytes([bytes[12], bytes[13], bytes[14], bytes[15]]),
            24
        );
        assert_eq!(bytes.len(), HEADER_LEN + 24);
        assert_eq!(&bytes[16..24], &1.5f64.to_le_bytes());
    }

    #[test]
    fn empty_payload_is_a_valid_frame() {
        let frame = Frame::grad_block(0, 9, &[]);
        assert_eq!(frame.payload_bytes(), 0);
        let decoded = Frame::decode(&frame.encode()).unwrap();
        assert_eq!(decoded, frame);
    }

    #[test]
    fn bad_magic_rejected() {
        let mut bytes = Frame::done().encode();
        bytes[0..4].copy_from_slice(b"XXXX");
        let err = Frame::decode(&bytes).unwrap_err();
        assert!(err.to_string().contains("bad magic"), "{err}");
    }

    #[test]
    fn bad_version_rejected() {
        let mut bytes = Frame::done().encode();
        bytes[4] = 9;
        assert!(Frame::decode(&bytes).is_err());
    }

    #[test]
    fn unknown_msg_type_rejected() {
        let mut bytes = Frame::done().encode();
        bytes[5] = 77;
        assert!(Frame::decode(&bytes).is_err());
    }

    #[test]
    fn stream_read_round_trips_and_reports_eof() {
        let frames = [
            Frame::hello(3),
            Frame::grad_block(1, 2, &[0.5, -0.5]),
            Frame::done(),
        ];
        let mut buf = Vec::new();
        for frame in &frames {
            frame.write_to(&mut buf).unwrap();
        }
        let mut cursor = std::io::Cursor::new(buf);
        for frame in &frames {
            assert_eq!(&Frame::read_from(&mut cursor).unwrap(), frame);
        }
        assert!(matches!(
            Frame::read_from(&mut cursor).unwrap_err(),
            Error::LinkClosed
        ));
    }

    proptest! {
        #[test]
        fn decode_encode_round_trip(
            round in any::<u16>(),
            block_index in any::<u32>(),
            payload in proptest::collection::vec(any::<f64>(), 0..256),
        ) {
            let frame = Frame::grad_block(round, block_index, &payload);
            let decoded = Frame::decode(&frame.encode()).unwrap();
            prop_assert_eq!(decoded.msg_type, frame.msg_type);
            prop_assert_eq!(decoded.round, frame.round);
            prop_assert_eq!(decoded.block_index, frame.block_index);
            // Bitwise comparison so NaN payloads round-trip too.
            let a: Vec<u64> = decoded.payload.iter().map(|v| v.to_bits()).collect();
            let b: Vec<u64> = frame.payload.iter().map(|v| v.to_bits()).collect();
            prop_assert_eq!(a, b);
        }
    }
}
