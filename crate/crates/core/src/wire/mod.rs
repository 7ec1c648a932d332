//! User/remote split over a byte stream.
//!
//! The remote process owns a [`Session`] per connection and runs the target
//! detector on whatever encoded signals arrive. The user process encodes,
//! sends `STEP_REQ`, and decodes each `STEP_RESP`. A connection carries
//! exactly one session: `CONFIG`, then `STEP_REQ` for `k = 1, 2, ...`, then
//! `CLOSE`. Protocol violations are answered with an `ERROR` frame and the
//! connection is dropped.

mod frame;
mod session;

use std::collections::VecDeque;
use std::io::ErrorKind;
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::Duration;

pub use frame::{read_frame, write_frame, ErrorCode, Frame, MsgType, MAX_PAYLOAD};
pub use session::{Reply, Session};

use crate::coding::{Encoded, KeySet};
use crate::error::{Error, Result};
use crate::numerics::Vector;
use crate::rng::{self, Stream, StreamId};
use crate::target::EncodedConfig;

/// Environment variable naming the default server address.
pub const ADDR_ENV: &str = "II_DETECT_ADDR";

pub trait Transport {
    fn send(&mut self, frame: &Frame) -> Result<()>;
    fn recv(&mut self) -> Result<Frame>;
}

pub struct TcpTransport {
    stream: TcpStream,
}

impl TcpTransport {
    pub fn connect(addr: impl ToSocketAddrs) -> Result<Self> {
        let stream = TcpStream::connect(addr)?;
        stream.set_nodelay(true)?;
        Ok(TcpTransport { stream })
    }
}

impl Transport for TcpTransport {
    fn send(&mut self, frame: &Frame) -> Result<()> {
        write_frame(&mut self.stream, frame)
    }

    fn recv(&mut self) -> Result<Frame> {
        read_frame(&mut self.stream)
    }
}

/// In-process transport: frames go through the byte codec into a local [`Session`].
#[derive(Default)]
pub struct Loopback {
    session: Session,
    pending: VecDeque<Frame>,
    closed: bool,
    transcript: Vec<Frame>,
}

impl Loopback {
    pub fn new() -> Self {
        Self::default()
    }

    /// Every frame that crossed the loopback, in order, both directions.
    pub fn transcript(&self) -> &[Frame] {
        &self.transcript
    }
}

impl Transport for Loopback {
    fn send(&mut self, frame: &Frame) -> Result<()> {
        if self.closed {
            return Err(Error::Transport(ErrorKind::BrokenPipe.into()));
        }
        let frame = Frame::from_bytes(&frame.to_bytes())?;
        self.transcript.push(frame.clone());
        match self.session.handle(&frame) {
            Reply::None => {}
            Reply::Send(f) => self.pending.push_back(f),
            Reply::SendAndClose(f) => {
                self.pending.push_back(f);
                self.closed = true;
            }
            Reply::Close => self.closed = true,
        }
        Ok(())
    }

    fn recv(&mut self) -> Result<Frame> {
        let frame = self
            .pending
            .pop_front()
            .ok_or_else(|| Error::Transport(ErrorKind::UnexpectedEof.into()))?;
        let frame = Frame::from_bytes(&frame.to_bytes())?;
        self.transcript.push(frame.clone());
        Ok(frame)
    }
}

/// Frame-level client of a remote target detector.
pub struct RemoteClient<T> {
    transport: T,
    k: u64,
}

fn protocol_error(frame: &Frame) -> Error {
    match frame.parse_error() {
        Ok((code, detail)) => Error::Protocol { code, detail },
        Err(e) => e,
    }
}

impl<T: Transport> RemoteClient<T> {
    pub fn new(transport: T) -> Self {
        RemoteClient { transport, k: 0 }
    }

    pub fn configure(&mut self, cfg: &EncodedConfig) -> Result<()> {
        self.transport.send(&Frame::config(cfg))
    }

    /// Sends step `k + 1` and returns the encoded alarm.
    pub fn step(&mut self, utilde: &Vector, ytilde: &Vector) -> Result<Vector> {
        let k = self.k + 1;
        self.transport.send(&Frame::step_req(k, utilde, ytilde))?;
        let resp = self.transport.recv()?;
        match resp.kind()? {
            MsgType::StepResp => {
                let (rk, atilde) = resp.parse_step_resp()?;
                if rk != k {
                    return Err(Error::Protocol {
                        code: ErrorCode::KMismatch as u8,
                        detail: format!("response for k = {rk}, expected {k}"),
                    });
                }
                self.k = k;
                Ok(atilde)
            }
            MsgType::Error => Err(protocol_error(&resp)),
            other => Err(frame::bad_frame(format!("unexpected {other:?} from server"))),
        }
    }

    pub fn close(mut self) -> Result<T> {
        self.transport.send(&Frame::close())?;
        Ok(self.transport)
    }

    pub fn steps(&self) -> u64 {
        self.k
    }

    pub fn transport(&self) -> &T {
        &self.transport
    }
}

/// One user-side step: what was sent, what came back, and the decoded alarm.
#[derive(Debug, Clone, PartialEq)]
pub struct UserStep {
    pub k: u64,
    pub utilde: Encoded,
    pub ytilde: Encoded,
    pub atilde: Vector,
    pub alarm: bool,
}

/// User side of the protocol: encodes with a secret key, decodes returned alarms.
pub struct UserSession<T> {
    key: KeySet,
    rng: Stream,
    client: RemoteClient<T>,
}

impl<T: Transport> UserSession<T> {
    /// Opens a session and ships `config`. Key noise is drawn from the encoding stream of `seed`.
    pub fn open(transport: T, key: KeySet, config: &EncodedConfig, seed: u64) -> Result<Self> {
        let mut client = RemoteClient::new(transport);
        client.configure(config)?;
        Ok(UserSession {
            key,
            rng: rng::stream(seed, StreamId::Encoding),
            client,
        })
    }

    pub fn step(&mut self, u: &Vector, y: &Vector) -> Result<UserStep> {
        let ytilde = self.key.encode_y(y, &mut self.rng)?;
        let utilde = self.key.encode_u(u, &mut self.rng)?;
        let atilde = self.client.step(&utilde.value, &ytilde.value)?;
        let alarm = self.key.decode_alarm(&atilde, &ytilde.value)?;
        Ok(UserStep {
            k: self.client.steps(),
            utilde,
            ytilde,
            atilde,
            alarm,
        })
    }

    pub fn close(self) -> Result<T> {
        self.client.close()
    }

    pub fn client(&self) -> &RemoteClient<T> {
        &self.client
    }
}

/// Connects to `addr`, runs one session over `signals` (pairs `(u_k, y_k)`),
/// and returns the decoded alarms `(k, a_k)`.
pub fn client_session(
    addr: impl ToSocketAddrs,
    key: KeySet,
    config: &EncodedConfig,
    seed: u64,
    signals: impl IntoIterator<Item = (Vector, Vector)>,
) -> Result<Vec<(u64, bool)>> {
    let mut session = UserSession::open(TcpTransport::connect(addr)?, key, config, seed)?;
    let mut alarms = Vec::new();
    for (u, y) in signals {
        let step = session.step(&u, &y)?;
        alarms.push((step.k, step.alarm));
    }
    session.close()?;
    Ok(alarms)
}

fn handle_connection(mut stream: TcpStream) -> Result<()> {
    stream.set_nodelay(true)?;
    let mut session = Session::new();
    loop {
        let frame = match read_frame(&mut stream) {
            Ok(f) => f,
            Err(Error::Protocol { detail, .. }) => {
                write_frame(&mut stream, &Frame::error(ErrorCode::BadFrame, &detail))?;
                return Ok(());
            }
            Err(Error::Transport(e)) if e.kind() == ErrorKind::UnexpectedEof => return Ok(()),
            Err(e) => return Err(e),
        };
        match session.handle(&frame) {
            Reply::None => {}
            Reply::Send(f) => write_frame(&mut stream, &f)?,
            Reply::SendAndClose(f) => {
                write_frame(&mut stream, &f)?;
                return Ok(());
            }
            Reply::Close => return Ok(()),
        }
    }
}

/// TCP server running one [`Session`] per connection, each on its own thread.
pub struct Server {
    listener: TcpListener,
}

pub struct ServerHandle {
    addr: SocketAddr,
    shutdown: Arc<AtomicBool>,
    thread: Option<JoinHandle<()>>,
}

impl ServerHandle {
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn shutdown(mut self) {
        self.stop();
    }

    fn stop(&mut self) {
        self.shutdown.store(true, Ordering::SeqCst);
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

impl Drop for ServerHandle {
    fn drop(&mut self) {
        self.stop();
    }
}

impl Server {
    pub fn bind(addr: impl ToSocketAddrs) -> Result<Self> {
        Ok(Server {
            listener: TcpListener::bind(addr)?,
        })
    }

    pub fn local_addr(&self) -> Result<SocketAddr> {
        Ok(self.listener.local_addr()?)
    }

    /// Accepts connections until `shutdown` is set.
    pub fn run(self, shutdown: Arc<AtomicBool>) -> Result<()> {
        self.listener.set_nonblocking(true)?;
        while !shutdown.load(Ordering::SeqCst) {
            match self.listener.accept() {
                Ok((stream, peer)) => {
                    stream.set_nonblocking(false)?;
                    std::thread::spawn(move || {
                        if let Err(e) = handle_connection(stream) {
                            eprintln!("session with {peer} ended: {e}");
                        }
                    });
                }
                Err(e) if e.kind() == ErrorKind::WouldBlock => std::thread::sleep(Duration::from_millis(2)),
                Err(e) => return Err(e.into()),
            }
        }
        Ok(())
    }

    /// Runs the accept loop on a background thread.
    pub fn spawn(self) -> Result<ServerHandle> {
        let addr = self.local_addr()?;
        let shutdown = Arc::new(AtomicBool::new(false));
        let flag = shutdown.clone();
        let thread = std::thread::spawn(move || {
            if let Err(e) = self.run(flag) {
                eprintln!("server stopped: {e}");
            }
        });
        Ok(ServerHandle {
            addr,
            shutdown,
            thread: Some(thread),
        })
    }
}

/// Binds `addr` and serves until the process exits.
pub fn serve(addr: impl ToSocketAddrs) -> Result<()> {
    Server::bind(addr)?.run(Arc::new(AtomicBool::new(false)))
}
