//! Policies: the interface the episode driver talks to, the scripted zoo,
//! and the wire protocol for external policies.

mod driver;
mod motion;
mod prior;
pub mod protocol;
mod zoo;

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;

pub use driver::{run_episode, Limits};
pub use motion::{Motion, MotionStep};
pub use prior::{Destination, Slot, TrainingPrior};
pub use zoo::{builtin, BUILTIN_NAMES};

use crate::config::SimConfig;
use crate::episode::Termination;
use crate::error::Result;
use crate::perturbation::Variation;
use crate::sim::{Action, Fidelity, Observation, World};

/// What a policy is told before the first observation.
pub struct EpisodeContext<'a> {
    pub variation: &'a Variation,
    /// Variations whose demonstrations the policy was trained on.
    pub train: Vec<&'a Variation>,
    pub cfg: &'a SimConfig,
    pub fidelity: Fidelity,
    pub seed: u64,
}

/// One decision point. `world` is privileged and only read by the oracle.
pub struct PolicyInput<'a> {
    pub observation: &'a Observation,
    pub world: &'a World,
}

pub trait Policy {
    fn name(&self) -> String;

    fn begin(&mut self, ctx: &EpisodeContext<'_>) -> Result<()>;

    fn act(&mut self, input: &PolicyInput<'_>) -> Result<Action>;

    fn end(&mut self, _reason: Termination, _success: bool) -> Result<()> {
        Ok(())
    }

    /// Anchor instance for the action just returned, when the policy knows
    /// what it is manipulating. Used when recording demonstrations.
    fn annotation(&self) -> Option<String> {
        None
    }
}

impl<P: Policy + ?Sized> Policy for Box<P> {
    fn name(&self) -> String {
        (**self).name()
    }

    fn begin(&mut self, ctx: &EpisodeContext<'_>) -> Result<()> {
        (**self).begin(ctx)
    }

    fn act(&mut self, input: &PolicyInput<'_>) -> Result<Action> {
        (**self).act(input)
    }

    fn end(&mut self, reason: Termination, success: bool) -> Result<()> {
        (**self).end(reason, success)
    }

    fn annotation(&self) -> Option<String> {
        (**self).annotation()
    }
}
