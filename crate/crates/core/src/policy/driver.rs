use alloc::string::ToString;
use alloc::vec::Vec;

use super::{EpisodeContext, Policy, PolicyInput};
use crate::episode::{EpisodeEnd, EpisodeHeader, EpisodeLog, FirstGrasp, StepRecord, Termination};
use crate::error::{Error, Result};
use crate::sim::{make_frame, make_observation, Event, World};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    pub max_steps: u32,
    pub action_timeout_ms: u64,
}

impl From<&crate::config::SimConfig> for Limits {
    fn from(c: &crate::config::SimConfig) -> Self {
        Self { max_steps: c.max_steps, action_timeout_ms: c.action_timeout_ms }
    }
}

/// Runs one episode: observe, act, step, until the policy terminates, the
/// step budget runs out, or the policy fails. A handshake failure in
/// `begin` is returned as an error; every later failure ends the episode
/// with the matching reason.
pub fn run_episode(policy: &mut dyn Policy, ctx: &EpisodeContext<'_>, limits: Limits) -> Result<EpisodeLog> {
    let v = ctx.variation;
    let mut world = World::reset(v, ctx.cfg);
    let header = EpisodeHeader {
        variation_id: v.id.clone(),
        base_task_id: v.base_task_id.clone(),
        policy_id: policy.name(),
        seed: ctx.seed,
        fidelity: ctx.fidelity,
        instruction: v.instruction.clone(),
        config: ctx.cfg.clone(),
        effective: world.effective.clone(),
        required_order: world.required_order.clone(),
        premise_violation: world.premise_violation.clone(),
        pre_satisfied: world.pre_satisfied,
    };
    let reset = make_frame(&world, None)?;
    policy.begin(ctx)?;

    let mut steps = Vec::new();
    let mut error = None;
    let reason = loop {
        if world.state.terminated {
            break if world.episode_success() { Termination::Success } else { Termination::Failure };
        }
        if world.state.t >= limits.max_steps {
            break Termination::Timeout;
        }
        let observation = make_observation(&world, ctx.fidelity);
        let action = match policy.act(&PolicyInput { observation: &observation, world: &world }) {
            Ok(a) => a,
            Err(Error::PolicyTimeout) => break Termination::PolicyTimeout,
            Err(e) => {
                error = Some(e.to_string());
                break Termination::PolicyError;
            }
        };
        let t = world.state.t;
        let events = match world.step(&action) {
            Ok(ev) => ev,
            Err(e) => {
                error = Some(e.to_string());
                break Termination::PolicyError;
            }
        };
        let frame = make_frame(&world, events.last().cloned())?;
        steps.push(StepRecord { t, action, annotation: policy.annotation(), events, frame });
    };
    let success = reason == Termination::Success;
    let first_grasp = steps.iter().flat_map(|s| s.events.iter()).find_map(|e| match e {
        Event::GraspAttempt { target: Some(t), valid, aborted: false } => {
            Some(FirstGrasp { instance: t.clone(), valid: *valid })
        }
        _ => None,
    });
    let end = EpisodeEnd { reason, success, steps: world.state.t, first_grasp, error };
    policy.end(reason, success)?;
    Ok(EpisodeLog { header, reset, steps, end })
}
