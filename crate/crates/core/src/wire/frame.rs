//! Length-prefixed binary frames.
//!
//! ```text
//! +----------+----------------------+-------------------+
//! | type: u8 | length: u32 (LE)     | payload: length B |
//! +----------+----------------------+-------------------+
//! ```
//!
//! Matrices are `rows: u32, cols: u32` followed by row-major `f64` entries;
//! vectors are `len: u32` followed by `f64` entries. All little-endian.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::numerics::{Mat, Vector};
use crate::target::EncodedConfig;

/// Upper bound on accepted payloads; far above any real configuration.
pub const MAX_PAYLOAD: u32 = 64 * 1024 * 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum MsgType {
    Config = 0x01,
    StepReq = 0x02,
    StepResp = 0x03,
    Close = 0x04,
    Error = 0x7F,
}

impl TryFrom<u8> for MsgType {
    type Error = Error;

    fn try_from(b: u8) -> Result<Self> {
        Ok(match b {
            0x01 => MsgType::Config,
            0x02 => MsgType::StepReq,
            0x03 => MsgType::StepResp,
            0x04 => MsgType::Close,
            0x7F => MsgType::Error,
            other => return Err(bad_frame(format!("unknown message type 0x{other:02x}"))),
        })
    }
}

/// Error codes carried in ERROR frames.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum ErrorCode {
    NoConfig = 1,
    BadFrame = 2,
    KMismatch = 3,
    DimMismatch = 4,
}

pub(crate) fn bad_frame(detail: impl Into<String>) -> Error {
    Error::Protocol {
        code: ErrorCode::BadFrame as u8,
        detail: detail.into(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub msg_type: u8,
    pub payload: Vec<u8>,
}

impl Frame {
    pub fn new(msg_type: MsgType, payload: Vec<u8>) -> Self {
        Frame {
            msg_type: msg_type as u8,
            payload,
        }
    }

    pub fn kind(&self) -> Result<MsgType> {
        MsgType::try_from(self.msg_type)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(5 + self.payload.len());
        out.push(self.msg_type);
        out.extend_from_slice(&(self.payload.len() as u32).to_le_bytes());
        out.extend_from_slice(&self.payload);
        out
    }

    /// Parses exactly one frame occupying all of `bytes`.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut cursor = bytes;
        let frame = read_frame(&mut cursor)?;
        if !cursor.is_empty() {
            return Err(bad_frame(format!("{} trailing bytes after frame", cursor.len())));
        }
        Ok(frame)
    }

    pub fn close() -> Self {
        Frame::new(MsgType::Close, Vec::new())
    }

    pub fn error(code: ErrorCode, detail: &str) -> Self {
        let mut payload = vec![code as u8];
        payload.extend_from_slice(detail.as_bytes());
        Frame::new(MsgType::Error, payload)
    }

    pub fn config(cfg: &EncodedConfig) -> Self {
        let mut w = PayloadWriter::default();
        for m in [
            &cfg.f1,
            &cfg.f2,
            &cfg.f3,
            &cfg.h1,
            &cfg.h2,
            &cfg.w,
            &cfg.pi6,
            &cfg.pi6_inv,
            &cfg.pi8,
            &cfg.pi4,
            &cfg.pi9,
        ] {
            w.mat(m);
        }
        w.f64(cfg.alpha);
        w.vector(&cfg.x0);
        Frame::new(MsgType::Config, w.0)
    }

    pub fn step_req(k: u64, utilde: &Vector, ytilde: &Vector) -> Self {
        let mut w = PayloadWriter::default();
        w.u64(k);
        w.vector(utilde);
        w.vector(ytilde);
        Frame::new(MsgType::StepReq, w.0)
    }

    pub fn step_resp(k: u64, atilde: &Vector) -> Self {
        let mut w = PayloadWriter::default();
        w.u64(k);
        w.vector(atilde);
        Frame::new(MsgType::StepResp, w.0)
    }

    pub fn parse_config(&self) -> Result<EncodedConfig> {
        let mut r = PayloadReader::new(&self.payload);
        let mut next = || r.mat();
        let cfg = EncodedConfig {
            f1: next()?,
            f2: next()?,
            f3: next()?,
            h1: next()?,
            h2: next()?,
            w: next()?,
            pi6: next()?,
            pi6_inv: next()?,
            pi8: next()?,
            pi4: next()?,
            pi9: next()?,
            alpha: r.f64()?,
            x0: r.vector()?,
        };
        r.finish()?;
        Ok(cfg)
    }

    pub fn parse_step_req(&self) -> Result<(u64, Vector, Vector)> {
        let mut r = PayloadReader::new(&self.payload);
        let k = r.u64()?;
        let u = r.vector()?;
        let y = r.vector()?;
        r.finish()?;
        Ok((k, u, y))
    }

    pub fn parse_step_resp(&self) -> Result<(u64, Vector)> {
        let mut r = PayloadReader::new(&self.payload);
        let k = r.u64()?;
        let a = r.vector()?;
        r.finish()?;
        Ok((k, a))
    }

    pub fn parse_error(&self) -> Result<(u8, String)> {
        let (&code, rest) = self
            .payload
            .split_first()
            .ok_or_else(|| bad_frame("empty ERROR payload"))?;
        Ok((code, String::from_utf8_lossy(rest).into_owned()))
    }
}

pub fn write_frame(w: &mut impl Write, frame: &Frame) -> Result<()> {
    w.write_all(&frame.to_bytes())?;
    w.flush()?;
    Ok(())
}

/// Reads one frame. I/O failures surface as `Transport`, malformed headers as `Protocol`.
pub fn read_frame(r: &mut impl Read) -> Result<Frame> {
    let mut header = [0u8; 5];
    r.read_exact(&mut header)?;
    let msg_type = header[0];
    MsgType::try_from(msg_type)?;
    let len = u32::from_le_bytes([header[1], header[2], header[3], header[4]]);
    if len > MAX_PAYLOAD {
        return Err(bad_frame(format!("payload length {len} exceeds limit")));
    }
    let mut payload = vec![0u8; len as usize];
    r.read_exact(&mut payload)?;
    Ok(Frame { msg_type, payload })
}

#[derive(Default)]
struct PayloadWriter(Vec<u8>);

impl PayloadWriter {
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn vector(&mut self, v: &Vector) {
        self.u32(v.len() as u32);
        v.iter().for_each(|&x| self.f64(x));
    }
    fn mat(&mut self, m: &Mat) {
        self.u32(m.nrows() as u32);
        self.u32(m.ncols() as u32);
        for row in m.row_iter() {
            row.iter().for_each(|&x| self.f64(x));
        }
    }
}

struct PayloadReader<'a> {
    buf: &'a [u8],
}

impl<'a> PayloadReader<'a> {
    fn new(buf: &'a [u8]) -> Self {
        PayloadReader { buf }
    }

    fn take<const N: usize>(&mut self) -> Result<[u8; N]> {
        if self.buf.len() < N {
            return Err(bad_frame("payload truncated"));
        }
        let (head, rest) = self.buf.split_at(N);
        self.buf = rest;
        Ok(head.try_into().expect("length checked"))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take()?))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take()?))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take()?))
    }

    fn floats(&mut self, n: usize) -> Result<Vec<f64>> {
        if self.buf.len() / 8 < n {
            return Err(bad_frame("payload truncated"));
        }
        (0..n).map(|_| self.f64()).collect()
    }

    fn vector(&mut self) -> Result<Vector> {
        let n = self.u32()? as usize;
        Ok(Vector::from_vec(self.floats(n)?))
    }

    fn mat(&mut self) -> Result<Mat> {
        let rows = self.u32()? as usize;
        let cols = self.u32()? as usize;
        let n = rows
            .checked_mul(cols)
            .ok_or_else(|| bad_frame("matrix header overflow"))?;
        Ok(Mat::from_row_slice(rows, cols, &self.floats(n)?))
    }

    fn finish(self) -> Result<()> {
        if self.buf.is_empty() {
            Ok(())
        } else {
            Err(bad_frame(format!("{} unread payload bytes", self.buf.len())))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_layout() {
        let f = Frame::new(MsgType::StepResp, vec![9, 8, 7]);
        assert_eq!(f.to_bytes(), vec![0x03, 3, 0, 0, 0, 9, 8, 7]);
    }

    #[test]
    fn step_req_layout() {
        let f = Frame::step_req(1, &Vector::from_vec(vec![1.5]), &Vector::from_vec(vec![]));
        let mut expect = 1u64.to_le_bytes().to_vec();
        expect.extend_from_slice(&1u32.to_le_bytes());
        expect.extend_from_slice(&1.5f64.to_le_bytes());
        expect.extend_from_slice(&0u32.to_le_bytes());
        assert_eq!(f.payload, expect);
        assert_eq!(f.msg_type, 0x02);
    }

    #[test]
    fn unknown_type_rejected() {
        assert!(matches!(
            Frame::from_bytes(&[0x55, 0, 0, 0, 0]),
            Err(Error::Protocol { code: 2, .. })
        ));
    }

    #[test]
    fn truncated_payload_rejected() {
        let f = Frame::step_resp(3, &Vector::from_vec(vec![1.0, 2.0]));
        let mut bad = f.clone();
        bad.payload.truncate(f.payload.len() - 3);
        assert!(bad.parse_step_resp().is_err());
        let mut extra = f;
        extra.payload.push(0);
        assert!(extra.parse_step_resp().is_err());
    }

    #[test]
    fn oversized_length_rejected() {
        let mut bytes = vec![0x01];
        bytes.extend_from_slice(&(MAX_PAYLOAD + 1).to_le_bytes());
        assert!(matches!(Frame::from_bytes(&bytes), Err(Error::Protocol { code: 2, .. })));
    }

    #[test]
    fn error_frame_round_trip() {
        let f = Frame::error(ErrorCode::KMismatch, "expected 4");
        assert_eq!(f.parse_error().unwrap(), (3, "expected 4".to_string()));
    }

    fn msg_type() -> impl Strategy<Value = MsgType> {
        prop_oneof![
            Just(MsgType::Config),
            Just(MsgType::StepReq),
            Just(MsgType::StepResp),
            Just(MsgType::Close),
            Just(MsgType::Error),
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]
        #[test]
        fn codec_round_trip(t in msg_type(), payload in proptest::collection::vec(any::<u8>(), 0..256)) {
            let f = Frame::new(t, payload);
            prop_assert_eq!(Frame::from_bytes(&f.to_bytes()).unwrap(), f);
        }
    }

    proptest! {
        #[test]
        fn step_req_round_trip(
            k in any::<u64>(),
            u in proptest::collection::vec(-1e6f64..1e6, 0..8),
            y in proptest::collection::vec(-1e6f64..1e6, 0..8),
        ) {
            let (u, y) = (Vector::from_vec(u), Vector::from_vec(y));
            let f = Frame::from_bytes(&Frame::step_req(k, &u, &y).to_bytes()).unwrap();
            prop_assert_eq!(f.parse_step_req().unwrap(), (k, u, y));
        }
    }
}
