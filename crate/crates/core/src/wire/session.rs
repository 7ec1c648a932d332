use crate::error::Error;
use crate::target::{EncodedConfig, TargetDetector};

use super::frame::{ErrorCode, Frame, MsgType};

/// What the connection handler must do after feeding a frame to a [`Session`].
#[derive(Debug, Clone, PartialEq)]
pub enum Reply {
    /// Nothing to send; keep reading.
    None,
    Send(Frame),
    /// Send the frame, then drop the connection.
    SendAndClose(Frame),
    Close,
}

/// Remote-side protocol state for one connection.
#[derive(Debug, Default)]
pub struct Session {
    target: Option<TargetDetector>,
    k: u64,
}

fn fail(code: ErrorCode, detail: impl std::fmt::Display) -> Reply {
    Reply::SendAndClose(Frame::error(code, &detail.to_string()))
}

impl Session {
    pub fn new() -> Self {
        Self::default()
    }

    /// Number of steps served so far.
    pub fn steps(&self) -> u64 {
        self.k
    }

    pub fn handle(&mut self, frame: &Frame) -> Reply {
        let kind = match frame.kind() {
            Ok(kind) => kind,
            Err(e) => return fail(ErrorCode::BadFrame, e),
        };
        match kind {
            MsgType::Config => {
                if self.target.is_some() {
                    return fail(ErrorCode::BadFrame, "duplicate CONFIG");
                }
                match frame.parse_config().and_then(|cfg: EncodedConfig| {
                    cfg.validate()?;
                    Ok(cfg)
                }) {
                    Ok(cfg) => {
                        self.target = Some(TargetDetector::new(cfg));
                        self.k = 0;
                        Reply::None
                    }
                    Err(e) => fail(ErrorCode::BadFrame, e),
                }
            }
            MsgType::StepReq => {
                let Some(target) = self.target.as_mut() else {
                    return fail(ErrorCode::NoConfig, "STEP_REQ before CONFIG");
                };
                let (k, utilde, ytilde) = match frame.parse_step_req() {
                    Ok(parsed) => parsed,
                    Err(e) => return fail(ErrorCode::BadFrame, e),
                };
                if k != self.k + 1 {
                    return fail(ErrorCode::KMismatch, format!("expected k = {}, got {k}", self.k + 1));
                }
                match target.step(&utilde, &ytilde) {
                    Ok(diag) => {
                        self.k = k;
                        Reply::Send(Frame::step_resp(k, &diag.atil))
                    }
                    Err(Error::DimensionMismatch(msg)) => fail(ErrorCode::DimMismatch, msg),
                    Err(e) => fail(ErrorCode::BadFrame, e),
                }
            }
            MsgType::Close => Reply::Close,
            MsgType::StepResp | MsgType::Error => fail(ErrorCode::BadFrame, "unexpected message type"),
        }
    }
}
