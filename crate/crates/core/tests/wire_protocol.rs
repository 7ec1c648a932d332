//! Session state machine and TCP server behavior.

use std::io::Write;
use std::net::TcpStream;
use std::time::Duration;

use ii_detect::coding::{build_encoded_config, KeyDims, KeyGenParams, KeySet};
use ii_detect::experiment::{self, ExperimentConfig, Mode};
use ii_detect::numerics::Vector;
use ii_detect::target::EncodedConfig;
use ii_detect::trace::trace_to_string;
use ii_detect::wire::{read_frame, write_frame, ErrorCode, Frame, MsgType, Reply, Server, Session};
use ii_detect::{reactor, DetectorDesign};

fn config() -> EncodedConfig {
    let model = reactor::model();
    let design = DetectorDesign::new(&model, reactor::FALSE_ALARM_RATE).unwrap();
    let key = KeySet::generate(KeyDims::CASE_STUDY, (4, 3, 3), 21, &KeyGenParams::default()).unwrap();
    build_encoded_config(&key, &model, &design).unwrap()
}

fn error_code(reply: Reply) -> u8 {
    match reply {
        Reply::SendAndClose(f) => f.parse_error().unwrap().0,
        other => panic!("expected an ERROR reply, got {other:?}"),
    }
}

fn z4() -> Vector {
    Vector::zeros(4)
}

#[test]
fn session_happy_path() {
    let mut s = Session::new();
    assert!(matches!(s.handle(&Frame::config(&config())), Reply::None));
    for k in 1..=3 {
        match s.handle(&Frame::step_req(k, &z4(), &z4())) {
            Reply::Send(f) => {
                let (rk, atilde) = f.parse_step_resp().unwrap();
                assert_eq!(rk, k);
                assert_eq!(atilde.len(), 2);
            }
            other => panic!("unexpected {other:?}"),
        }
    }
    assert!(matches!(s.handle(&Frame::close()), Reply::Close));
}

#[test]
fn session_error_codes() {
    assert_eq!(error_code(Session::new().handle(&Frame::step_req(1, &z4(), &z4()))), 1);

    let mut s = Session::new();
    s.handle(&Frame::config(&config()));
    assert_eq!(error_code(s.handle(&Frame::config(&config()))), 2);

    let mut s = Session::new();
    s.handle(&Frame::config(&config()));
    assert_eq!(error_code(s.handle(&Frame::step_req(0, &z4(), &z4()))), 3);

    let mut s = Session::new();
    s.handle(&Frame::config(&config()));
    s.handle(&Frame::step_req(1, &z4(), &z4()));
    assert_eq!(error_code(s.handle(&Frame::step_req(1, &z4(), &z4()))), 3);

    let mut s = Session::new();
    s.handle(&Frame::config(&config()));
    assert_eq!(error_code(s.handle(&Frame::step_req(1, &Vector::zeros(5), &z4()))), 4);

    let mut s = Session::new();
    assert_eq!(error_code(s.handle(&Frame::step_resp(1, &z4()))), 2);

    let mut s = Session::new();
    let garbage = Frame {
        msg_type: MsgType::Config as u8,
        payload: vec![1, 2, 3],
    };
    assert_eq!(error_code(s.handle(&garbage)), 2);
}

#[test]
fn config_with_inconsistent_shapes_rejected() {
    let mut cfg = config();
    cfg.x0 = Vector::zeros(3);
    assert_eq!(error_code(Session::new().handle(&Frame::config(&cfg))), 2);
}

fn connect(addr: std::net::SocketAddr) -> TcpStream {
    let s = TcpStream::connect(addr).unwrap();
    s.set_read_timeout(Some(Duration::from_secs(5))).unwrap();
    s
}

#[test]
fn truncated_frame_over_tcp_is_bad_frame() {
    let server = Server::bind("127.0.0.1:0").unwrap().spawn().unwrap();
    let mut s = connect(server.addr());
    // Unknown type byte with an empty payload.
    s.write_all(&[0x42, 0, 0, 0, 0]).unwrap();
    let f = read_frame(&mut s).unwrap();
    assert_eq!(f.kind().unwrap(), MsgType::Error);
    assert_eq!(f.parse_error().unwrap().0, ErrorCode::BadFrame as u8);
    assert!(read_frame(&mut s).is_err());
}

#[test]
fn concurrent_sessions_are_independent() {
    let server = Server::bind("127.0.0.1:0").unwrap().spawn().unwrap();
    let cfg = config();
    let mut a = connect(server.addr());
    let mut b = connect(server.addr());
    write_frame(&mut a, &Frame::config(&cfg)).unwrap();
    write_frame(&mut b, &Frame::config(&cfg)).unwrap();
    for k in 1..=5 {
        write_frame(&mut a, &Frame::step_req(k, &z4(), &z4())).unwrap();
        assert_eq!(read_frame(&mut a).unwrap().parse_step_resp().unwrap().0, k);
    }
    write_frame(&mut b, &Frame::step_req(1, &z4(), &z4())).unwrap();
    assert_eq!(read_frame(&mut b).unwrap().parse_step_resp().unwrap().0, 1);
    write_frame(&mut a, &Frame::close()).unwrap();
    write_frame(&mut b, &Frame::close()).unwrap();
}

#[test]
fn networked_thousand_steps_match_loopback() {
    let server = Server::bind("127.0.0.1:0").unwrap().spawn().unwrap();
    let run = |mode| {
        let mut cfg = ExperimentConfig::case_study(9, 1_000);
        cfg.mode = mode;
        trace_to_string(&experiment::simulate(&cfg).unwrap().records).unwrap()
    };
    assert_eq!(run(Mode::Networked(Some(server.addr()))), run(Mode::Loopback));
}

#[test]
fn remote_error_surfaces_as_protocol_error() {
    let server = Server::bind("127.0.0.1:0").unwrap().spawn().unwrap();
    let t = ii_detect::wire::TcpTransport::connect(server.addr()).unwrap();
    let mut client = ii_detect::wire::RemoteClient::new(t);
    let err = client.step(&z4(), &z4()).unwrap_err();
    assert!(
        matches!(err, ii_detect::Error::Protocol { code: 1, .. }),
        "{err}"
    );
}
