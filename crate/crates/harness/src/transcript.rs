//! Golden protocol transcripts: the exact lines a driver sends
//! (`<name>.server.jsonl`) and a conforming client answers
//! (`<name>.client.jsonl`) over one episode.

use std::sync::{Arc, Mutex};

use tabletop_core::episode::{EpisodeLog, Termination};
use tabletop_core::policy::protocol::{encode_message, Client, Session};
use tabletop_core::policy::{run_episode, EpisodeContext, Limits, Policy, PolicyInput};
use tabletop_core::sim::{Action, Fidelity};
use tabletop_core::{Error, Result, SimConfig, Variation};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Transcript {
    pub server: String,
    pub client: String,
}

/// Runs `inner` behind an in-memory session, keeping every line.
struct Recorder {
    inner: Box<dyn Policy + Send>,
    session: Session,
    client: Client,
    out: Arc<Mutex<Transcript>>,
}

impl Recorder {
    fn exchange(&mut self, line: String, action: Option<Action>) -> Result<Option<String>> {
        let a = action.unwrap_or(Action::NoOp);
        let reply = self.client.handle(&line, &mut |_| a.clone())?.map(|m| encode_message(&m));
        let mut t = self.out.lock().expect("transcript lock");
        t.server.push_str(&line);
        if let Some(r) = &reply {
            t.client.push_str(r);
        }
        Ok(reply)
    }
}

impl Policy for Recorder {
    fn name(&self) -> String {
        self.inner.name()
    }

    fn begin(&mut self, ctx: &EpisodeContext<'_>) -> Result<()> {
        self.inner.begin(ctx)?;
        let hello = encode_message(&self.session.hello(&ctx.variation.instruction, ctx.fidelity));
        let ack = self.exchange(hello, None)?.ok_or_else(|| Error::HandshakeFailed("no hello_ack".into()))?;
        self.session.accept_hello_ack(&ack)
    }

    fn act(&mut self, input: &PolicyInput<'_>) -> Result<Action> {
        let action = self.inner.act(input)?;
        let observe = encode_message(&self.session.observe(input.observation));
        let reply = self.exchange(observe, Some(action))?.ok_or_else(|| Error::Protocol("no act".into()))?;
        self.session.accept_act(&reply)
    }

    fn end(&mut self, reason: Termination, success: bool) -> Result<()> {
        let line = encode_message(&self.session.episode_end(reason, success));
        self.exchange(line, None)?;
        self.inner.end(reason, success)
    }
}

/// One episode of `policy` on `v`, with both sides of the wire.
pub fn record_transcript(
    policy: Box<dyn Policy + Send>,
    v: &Variation,
    train: Vec<&Variation>,
    cfg: &SimConfig,
    fidelity: Fidelity,
    seed: u64,
) -> Result<(Transcript, EpisodeLog)> {
    let out = Arc::new(Mutex::new(Transcript::default()));
    let mut rec = Recorder { inner: policy, session: Session::default(), client: Client::default(), out: out.clone() };
    let ctx = EpisodeContext { variation: v, train, cfg, fidelity, seed };
    let log = run_episode(&mut rec, &ctx, Limits::from(cfg))?;
    let t = out.lock().expect("transcript lock").clone();
    Ok((t, log))
}
