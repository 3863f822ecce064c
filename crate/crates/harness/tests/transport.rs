mod common;

use std::io::{BufRead, BufReader, Write};
use std::net::TcpListener;

use tabletop::pipeline::{run_one, PolicySpec};
use tabletop::transport::Endpoint;
use tabletop_core::episode::Termination;
use tabletop_core::policy::protocol::{encode_message, Client};
use tabletop_core::sim::{Action, Fidelity};
use tabletop_core::SimConfig;

fn quick() -> SimConfig {
    SimConfig { action_timeout_ms: 300, max_steps: 40, ..SimConfig::default() }
}

/// A policy over TCP that moves toward the first object for `moves`
/// steps and then terminates.
fn serve_once(moves: usize) -> String {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap().to_string();
    std::thread::spawn(move || {
        let (stream, _) = listener.accept().unwrap();
        let mut w = stream.try_clone().unwrap();
        let mut client = Client::default();
        let mut n = 0;
        for line in BufReader::new(stream).lines() {
            let line = line.unwrap() + "\n";
            let reply = client
                .handle(&line, &mut |obs| {
                    n += 1;
                    if n > moves {
                        return Action::Terminate;
                    }
                    let p = obs.proprio.position;
                    let o = obs.objects[0].position;
                    Action::translate((o[0] - p[0]).clamp(-0.05, 0.05), (o[1] - p[1]).clamp(-0.05, 0.05), 0.0)
                })
                .unwrap();
            if let Some(r) = reply {
                w.write_all(encode_message(&r).as_bytes()).unwrap();
            }
            if client.finished.is_some() {
                break;
            }
        }
    });
    addr
}

#[test]
fn tcp_policy_runs_a_full_episode() {
    let m = common::manifest();
    let addr = serve_once(5);
    let p = PolicySpec::External(Endpoint::Tcp(addr));
    let log = run_one(m, m.get("coffee").unwrap(), &p, Fidelity::Full, &quick(), 7).unwrap();
    assert_eq!(log.end.reason, Termination::Failure);
    assert_eq!(log.steps.len(), 6);
    assert_eq!(log.header.policy_id, "tcp");
}

#[test]
fn unreachable_tcp_policy_fails_the_handshake() {
    let m = common::manifest();
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let p = PolicySpec::External(Endpoint::Tcp(format!("127.0.0.1:{port}")));
    let err = run_one(m, m.get("coffee").unwrap(), &p, Fidelity::Full, &quick(), 7).unwrap_err();
    assert_eq!(err.code, "handshake_failed");
}

const ACK: &str = r#"{"type":"hello_ack","seq":0,"payload":{"protocol_version":1}}"#;

#[test]
fn stdio_policy_that_terminates() {
    let m = common::manifest();
    let script = format!(r#"read l; echo '{ACK}'; read l; echo '{{"type":"act","seq":1,"payload":{{"kind":"terminate"}}}}'; read l"#);
    let p = PolicySpec::External(Endpoint::Stdio(script));
    let log = run_one(m, m.get("coffee").unwrap(), &p, Fidelity::Full, &quick(), 7).unwrap();
    assert_eq!(log.end.reason, Termination::Failure);
    assert_eq!(log.steps.len(), 1);
}

#[test]
fn silent_stdio_policy_times_out_after_the_handshake() {
    let m = common::manifest();
    let p = PolicySpec::External(Endpoint::Stdio(format!("read l; echo '{ACK}'; sleep 5")));
    let log = run_one(m, m.get("coffee").unwrap(), &p, Fidelity::Full, &quick(), 7).unwrap();
    assert_eq!(log.end.reason, Termination::PolicyTimeout);
}

#[test]
fn mute_stdio_policy_fails_the_handshake() {
    let m = common::manifest();
    let p = PolicySpec::External(Endpoint::Stdio("sleep 5".into()));
    let err = run_one(m, m.get("coffee").unwrap(), &p, Fidelity::Full, &quick(), 7).unwrap_err();
    assert_eq!(err.code, "handshake_failed");
}

#[test]
fn wrong_version_fails_the_handshake() {
    let m = common::manifest();
    let ack = ACK.replace(":1}", ":2}");
    let p = PolicySpec::External(Endpoint::Stdio(format!("read l; echo '{ack}'; sleep 5")));
    let err = run_one(m, m.get("coffee").unwrap(), &p, Fidelity::Full, &quick(), 7).unwrap_err();
    assert_eq!(err.code, "handshake_failed");
}

#[test]
fn act_with_wrong_seq_is_a_policy_error() {
    let m = common::manifest();
    let script = format!(r#"read l; echo '{ACK}'; read l; echo '{{"type":"act","seq":7,"payload":{{"kind":"no_op"}}}}'; sleep 5"#);
    let p = PolicySpec::External(Endpoint::Stdio(script));
    let log = run_one(m, m.get("coffee").unwrap(), &p, Fidelity::Full, &quick(), 7).unwrap();
    assert_eq!(log.end.reason, Termination::PolicyError);
}

#[test]
fn policy_specs_parse() {
    assert_eq!("builtin:oracle".parse::<PolicySpec>().unwrap(), PolicySpec::Builtin("oracle".into()));
    assert_eq!("tcp:localhost:9".parse::<PolicySpec>().unwrap(), PolicySpec::External(Endpoint::Tcp("localhost:9".into())));
    assert!("builtin:nope".parse::<PolicySpec>().is_err());
    assert!("carrier:pigeon".parse::<PolicySpec>().is_err());
}
