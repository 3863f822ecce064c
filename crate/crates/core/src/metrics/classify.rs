use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::episode::{EpisodeLog, Termination};
use crate::math::dist3;
use crate::sim::{order_violation, Action};

/// One label per episode. Variant order is the classifier priority, and
/// also breaks ties when picking a matrix cell's modal label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum FailureMode {
    Success,
    CorrectFreeze,
    AirGrasp,
    DistractorGrasp,
    SkipStep,
    PhaseFreeze,
    Oscillation,
    Timeout,
    Ambiguous,
}

impl FailureMode {
    pub const ALL: [FailureMode; 9] = [
        Self::Success,
        Self::CorrectFreeze,
        Self::AirGrasp,
        Self::DistractorGrasp,
        Self::SkipStep,
        Self::PhaseFreeze,
        Self::Oscillation,
        Self::Timeout,
        Self::Ambiguous,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Success => "Success",
            Self::CorrectFreeze => "CorrectFreeze",
            Self::AirGrasp => "AirGrasp",
            Self::DistractorGrasp => "DistractorGrasp",
            Self::SkipStep => "SkipStep",
            Self::PhaseFreeze => "PhaseFreeze",
            Self::Oscillation => "Oscillation",
            Self::Timeout => "Timeout",
            Self::Ambiguous => "Ambiguous",
        }
    }
}

fn gripper_path(log: &EpisodeLog) -> Vec<[f64; 3]> {
    log.frames().map(|f| f.gripper.position).collect()
}

/// Direction changes of a zigzag filter with threshold `amp`: a reversal
/// counts once the series has moved more than `amp` back from its last
/// extreme.
fn reversals(series: &[f64], amp: f64) -> u32 {
    let Some(&first) = series.first() else { return 0 };
    let mut extreme = first;
    let mut dir = 0i8;
    let mut count = 0;
    for &x in &series[1..] {
        match dir {
            0 => {
                if (x - extreme).abs() > amp {
                    dir = if x > extreme { 1 } else { -1 };
                    extreme = x;
                }
            }
            1 if x > extreme => extreme = x,
            -1 if x < extreme => extreme = x,
            _ => {
                if (x - extreme).abs() > amp {
                    dir = -dir;
                    extreme = x;
                    count += 1;
                }
            }
        }
    }
    count
}

fn oscillates(path: &[[f64; 3]], window: usize, amp: f64, min_reversals: u32) -> bool {
    if path.len() < 2 {
        return false;
    }
    let w = window.max(2).min(path.len());
    (0..=path.len() - w).any(|s| {
        let seg = &path[s..s + w];
        let range = |a: usize| {
            let (lo, hi) = seg.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p[a]), hi.max(p[a])));
            hi - lo
        };
        let axis = (0..3).fold(0, |best, a| if range(a) > range(best) { a } else { best });
        let series: Vec<f64> = seg.iter().map(|p| p[axis]).collect();
        reversals(&series, amp) >= min_reversals
    })
}

/// Longest run of steps, before `until`, in which the gripper moved less
/// than `eps` and nothing else happened.
fn longest_still_run(log: &EpisodeLog, until: u32, eps: f64) -> u32 {
    let mut prev = log.reset.gripper.position;
    let (mut run, mut best) = (0, 0);
    for s in log.steps.iter().take_while(|s| s.t < until) {
        let p = s.frame.gripper.position;
        if dist3(p, prev) < eps && s.events.is_empty() {
            run += 1;
            best = best.max(run);
        } else {
            run = 0;
        }
        prev = p;
    }
    best
}

/// Labels one finished episode. Rules run in priority order; the first
/// that matches wins.
pub fn classify_failure(log: &EpisodeLog) -> FailureMode {
    let h = &log.header;
    let c = &h.config;
    let grasps = log.grasps();
    if log.end.success {
        return FailureMode::Success;
    }
    if h.premise_violation.is_some() {
        return FailureMode::Ambiguous;
    }
    if h.pre_satisfied {
        let active = log.steps.iter().filter(|s| !matches!(s.action, Action::NoOp)).count();
        if active as u32 <= c.correct_freeze_actions && grasps.is_empty() {
            return FailureMode::CorrectFreeze;
        }
    }
    let last_valid = grasps.iter().filter(|g| !g.aborted && g.valid).map(|g| g.t).max();
    if grasps.iter().any(|g| g.aborted && last_valid.is_none_or(|v| v < g.t)) {
        return FailureMode::AirGrasp;
    }
    if log.end.first_grasp.as_ref().is_some_and(|g| !g.valid) {
        return FailureMode::DistractorGrasp;
    }
    let final_ledger = &log.frames().last().expect("reset frame").ledger;
    if order_violation(final_ledger, &h.required_order).is_some() {
        return FailureMode::SkipStep;
    }
    if grasps.is_empty() && oscillates(&gripper_path(log), c.osc_window as usize, c.osc_amplitude, c.osc_reversals) {
        return FailureMode::Oscillation;
    }
    let goal_done = !final_ledger.is_empty() && final_ledger.iter().all(|e| e.done);
    let first_grasp_t = grasps.first().map_or(u32::MAX, |g| g.t);
    if !goal_done && longest_still_run(log, first_grasp_t, c.freeze_eps) >= c.freeze_steps {
        return FailureMode::PhaseFreeze;
    }
    if log.end.reason == Termination::Timeout {
        return FailureMode::Timeout;
    }
    FailureMode::Ambiguous
}
