//! Wire protocol v1: newline-delimited JSON messages between the episode
//! driver and an external policy.
//!
//! The driver sends `hello` (seq 0), one `observe` per step and a final
//! `episode_end`; the policy answers `hello` with `hello_ack` and each
//! `observe` with one `act` carrying the same seq.

use alloc::format;
use alloc::string::{String, ToString};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::episode::Termination;
use crate::error::{Error, Result};
use crate::sim::{Action, Fidelity, Observation};

pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MessageType {
    Hello,
    HelloAck,
    Observe,
    Act,
    EpisodeEnd,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BridgeMessage {
    #[serde(rename = "type")]
    pub kind: MessageType,
    pub seq: u64,
    pub payload: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HelloPayload {
    pub protocol_version: u32,
    pub instruction: String,
    pub observation_fidelity: Fidelity,
    pub action_schema: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HelloAckPayload {
    pub protocol_version: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeEndPayload {
    pub reason: Termination,
    pub success: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorPayload {
    pub code: String,
    pub message: String,
}

/// The action kinds and their fields, as announced in `hello`.
pub fn action_schema() -> Value {
    json!({
        "tag": "kind",
        "kinds": {
            "move_delta": {"dx": "number", "dy": "number", "dz": "number", "dyaw": "number (optional, default 0)"},
            "grasp": {},
            "release": {},
            "set_articulation": {"joint": "string", "value": "number"},
            "no_op": {},
            "terminate": {}
        }
    })
}

/// One line of UTF-8 JSON terminated by `\n`. String newlines are escaped
/// by JSON, so the line never breaks.
pub fn encode_message(m: &BridgeMessage) -> String {
    let mut s = serde_json::to_string(m).expect("messages serialize");
    s.push('\n');
    s
}

pub fn decode_message(line: &str) -> Result<BridgeMessage> {
    let body = line.strip_suffix('\n').unwrap_or(line);
    let body = body.strip_suffix('\r').unwrap_or(body);
    if body.contains('\n') {
        return Err(Error::Protocol("message spans more than one line".into()));
    }
    serde_json::from_str(body).map_err(|e| Error::Protocol(format!("malformed message: {e}")))
}

fn message<T: Serialize>(kind: MessageType, seq: u64, payload: &T) -> BridgeMessage {
    BridgeMessage { kind, seq, payload: serde_json::to_value(payload).expect("payloads serialize") }
}

fn payload<T: serde::de::DeserializeOwned>(m: &BridgeMessage) -> Result<T> {
    serde_json::from_value(m.payload.clone())
        .map_err(|e| Error::Protocol(format!("bad {:?} payload: {e}", m.kind)))
}

/// Rejects any message whose seq does not exceed the previous one.
#[derive(Debug, Clone, Default)]
pub struct SeqTracker {
    last: Option<u64>,
}

impl SeqTracker {
    pub fn accept(&mut self, seq: u64) -> Result<()> {
        if let Some(prev) = self.last {
            if seq <= prev {
                return Err(Error::Protocol(format!("seq {seq} does not follow {prev}")));
            }
        }
        self.last = Some(seq);
        Ok(())
    }
}

/// Decodes a stream of lines from one direction, enforcing seq order.
#[derive(Debug, Clone, Default)]
pub struct DecodeStream {
    seq: SeqTracker,
}

impl DecodeStream {
    pub fn decode(&mut self, line: &str) -> Result<BridgeMessage> {
        let m = decode_message(line)?;
        self.seq.accept(m.seq)?;
        Ok(m)
    }
}

/// Driver side of one session.
#[derive(Debug, Clone, Default)]
pub struct Session {
    next_seq: u64,
    incoming: DecodeStream,
    pending: Option<u64>,
}

impl Session {
    fn take_seq(&mut self) -> u64 {
        let s = self.next_seq;
        self.next_seq += 1;
        s
    }

    pub fn hello(&mut self, instruction: &str, fidelity: Fidelity) -> BridgeMessage {
        let seq = self.take_seq();
        self.pending = Some(seq);
        let p = HelloPayload {
            protocol_version: PROTOCOL_VERSION,
            instruction: instruction.into(),
            observation_fidelity: fidelity,
            action_schema: action_schema(),
        };
        message(MessageType::Hello, seq, &p)
    }

    pub fn accept_hello_ack(&mut self, line: &str) -> Result<()> {
        let fail = |e: Error| Error::HandshakeFailed(e.to_string());
        let m = self.incoming.decode(line).map_err(fail)?;
        if m.kind != MessageType::HelloAck || Some(m.seq) != self.pending {
            return Err(Error::HandshakeFailed(format!("expected hello_ack {:?}, got {:?} {}", self.pending, m.kind, m.seq)));
        }
        let ack: HelloAckPayload = payload(&m).map_err(fail)?;
        if ack.protocol_version != PROTOCOL_VERSION {
            return Err(Error::HandshakeFailed(format!("unsupported protocol version {}", ack.protocol_version)));
        }
        self.pending = None;
        Ok(())
    }

    pub fn observe(&mut self, obs: &Observation) -> BridgeMessage {
        let seq = self.take_seq();
        self.pending = Some(seq);
        message(MessageType::Observe, seq, obs)
    }

    /// The action answering the outstanding observe.
    pub fn accept_act(&mut self, line: &str) -> Result<Action> {
        let m = self.incoming.decode(line)?;
        match m.kind {
            MessageType::Act if Some(m.seq) == self.pending => {
                self.pending = None;
                payload(&m)
            }
            MessageType::Act => Err(Error::Protocol(format!("act seq {} does not answer observe {:?}", m.seq, self.pending))),
            MessageType::Error => {
                let e: ErrorPayload = payload(&m)?;
                Err(Error::Protocol(format!("policy error {}: {}", e.code, e.message)))
            }
            other => Err(Error::Protocol(format!("expected act, got {other:?}"))),
        }
    }

    pub fn episode_end(&mut self, reason: Termination, success: bool) -> BridgeMessage {
        let seq = self.take_seq();
        message(MessageType::EpisodeEnd, seq, &EpisodeEndPayload { reason, success })
    }
}

/// Policy side of one session, for clients written against this crate.
#[derive(Debug, Clone, Default)]
pub struct Client {
    incoming: DecodeStream,
    pub finished: Option<EpisodeEndPayload>,
}

impl Client {
    /// Answers one driver line. Returns the reply, if any.
    pub fn handle(&mut self, line: &str, act: &mut dyn FnMut(&Observation) -> Action) -> Result<Option<BridgeMessage>> {
        let m = self.incoming.decode(line)?;
        match m.kind {
            MessageType::Hello => {
                let h: HelloPayload = payload(&m)?;
                if h.protocol_version != PROTOCOL_VERSION {
                    return Err(Error::Protocol(format!("unsupported protocol version {}", h.protocol_version)));
                }
                Ok(Some(message(MessageType::HelloAck, m.seq, &HelloAckPayload { protocol_version: PROTOCOL_VERSION })))
            }
            MessageType::Observe => {
                let obs: Observation = payload(&m)?;
                Ok(Some(message(MessageType::Act, m.seq, &act(&obs))))
            }
            MessageType::EpisodeEnd => {
                self.finished = Some(payload(&m)?);
                Ok(None)
            }
            other => Err(Error::Protocol(format!("unexpected {other:?} from driver"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn hello_round_trips() {
        let m = Session::default().hello("put the lemon\ninto the basket", Fidelity::Full);
        let line = encode_message(&m);
        assert_eq!(line.matches('\n').count(), 1);
        assert!(line.ends_with('\n'));
        assert_eq!(decode_message(&line).unwrap(), m);
    }

    #[test]
    fn seq_regression_is_rejected() {
        let mut d = DecodeStream::default();
        let mk = |seq| encode_message(&BridgeMessage { kind: MessageType::Act, seq, payload: json!({"kind": "no_op"}) });
        d.decode(&mk(1)).unwrap();
        d.decode(&mk(2)).unwrap();
        assert!(matches!(d.decode(&mk(2)), Err(Error::Protocol(_))));
        assert!(matches!(d.decode(&mk(1)), Err(Error::Protocol(_))));
    }

    #[test]
    fn act_must_echo_observe() {
        let mut s = Session::default();
        let hello = s.hello("x", Fidelity::Full);
        let ack = BridgeMessage { kind: MessageType::HelloAck, seq: hello.seq, payload: json!({"protocol_version": 1}) };
        s.accept_hello_ack(&encode_message(&ack)).unwrap();
        let obs = Observation {
            instruction: "x".into(),
            proprio: crate::sim::Proprio { position: [0.0; 3], yaw: 0.0, holding: false },
            objects: vec![],
            articulations: Default::default(),
            fidelity: Fidelity::Full,
        };
        let o = s.observe(&obs);
        let wrong = BridgeMessage { kind: MessageType::Act, seq: o.seq + 1, payload: json!({"kind": "no_op"}) };
        assert!(s.clone().accept_act(&encode_message(&wrong)).is_err());
        let right = BridgeMessage { kind: MessageType::Act, seq: o.seq, payload: json!({"kind": "no_op"}) };
        assert_eq!(s.accept_act(&encode_message(&right)).unwrap(), Action::NoOp);
    }

    #[test]
    fn wrong_version_fails_handshake() {
        let mut s = Session::default();
        let hello = s.hello("x", Fidelity::Full);
        let ack = BridgeMessage { kind: MessageType::HelloAck, seq: hello.seq, payload: json!({"protocol_version": 2}) };
        assert!(matches!(s.accept_hello_ack(&encode_message(&ack)), Err(Error::HandshakeFailed(_))));
    }
}
