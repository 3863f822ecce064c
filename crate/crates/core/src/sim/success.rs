use alloc::string::String;

use super::world::{LedgerEntry, WorldState};
use crate::error::Result;
use crate::geometry::overlap_ratio;
use crate::goal::{GoalSpec, Subgoal, SubgoalKind};
use crate::instantiation::{slot_pose, Support};
use crate::math::{dist2, yaw_difference};

/// Evaluates one subgoal predicate against the current state. Missing
/// instances make the predicate false.
pub fn holds(state: &WorldState, goal: &GoalSpec, s: &Subgoal) -> bool {
    match &s.kind {
        SubgoalKind::Contain { instance, container } => state
            .objects
            .get(instance)
            .is_some_and(|o| matches!(&o.support, Support::In(c) if c == container)),
        SubgoalKind::AtPose { instance, reference, offset, pos_tol, yaw_tol } => {
            let (Some(o), Some(r)) = (state.objects.get(instance), state.objects.get(reference)) else {
                return false;
            };
            if o.support == Support::Held {
                return false;
            }
            let slot = slot_pose(&r.pose, *offset);
            dist2(o.pose.xy(), slot.xy()) <= *pos_tol && yaw_difference(o.pose.yaw, slot.yaw).abs() <= *yaw_tol
        }
        SubgoalKind::StackOn { instance, base, min_overlap } => {
            let (Some(o), Some(b)) = (state.objects.get(instance), state.objects.get(base)) else {
                return false;
            };
            matches!(&o.support, Support::On(x) if x == base)
                && overlap_ratio(&o.footprint(), &b.footprint()) >= *min_overlap
        }
        SubgoalKind::Articulation { container, joint, value, tol } => {
            let at_value = state.articulations.get(joint).is_some_and(|v| (v - value).abs() <= *tol);
            at_value
                && goal.subgoals.iter().all(|other| match &other.kind {
                    SubgoalKind::Contain { instance, container: c } if c == container => {
                        !state.objects.contains_key(instance) || holds(state, goal, other)
                    }
                    _ => true,
                })
        }
    }
}

/// Template predicate over the whole goal. Absent instances are reported,
/// except packing targets that drop out while another target remains.
pub fn check_success(state: &WorldState, goal: &GoalSpec) -> Result<bool> {
    let eff = goal.effective(|n| state.objects.contains_key(n))?;
    Ok(!eff.is_empty() && eff.into_iter().all(|s| holds(state, goal, s)))
}

/// First subgoal completed while an earlier one in `order` was still open,
/// paired with that predecessor. Subgoals already done at reset were never
/// performed, so they cannot be out of order.
pub fn order_violation(ledger: &[LedgerEntry], order: &[String]) -> Option<(String, String)> {
    let done_at = |id: &str| ledger.iter().find(|e| e.subgoal_id == id).and_then(|e| e.done_at);
    let mut worst: Option<(u32, String, String)> = None;
    for (j, later) in order.iter().enumerate() {
        let Some(tj) = done_at(later).filter(|t| *t > 0) else { continue };
        for earlier in &order[..j] {
            let late = match done_at(earlier) {
                Some(ti) => ti > tj,
                None => true,
            };
            if late && worst.as_ref().is_none_or(|(t, _, _)| tj < *t) {
                worst = Some((tj, later.clone(), earlier.clone()));
            }
        }
    }
    worst.map(|(_, a, b)| (a, b))
}
