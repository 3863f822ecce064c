//! Physics-lite tabletop world. Objects snap to supports; there is no
//! dynamics, friction, or falling beyond that.

mod action;
mod frame;
mod observation;
mod success;
mod world;

pub use action::{Action, Event};
pub use frame::{display_name, make_frame, ActiveSubgoal, FrameObject, PrivilegedFrame};
pub use observation::{make_observation, Fidelity, ObservedAttributes, ObservedObject, Observation, Proprio};
pub use success::{check_success, holds, order_violation};
pub use world::{Gripper, LedgerEntry, ObjectState, World, WorldState};
