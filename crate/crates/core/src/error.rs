use alloc::string::String;
use alloc::vec::Vec;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("schema error at {path}: {reason}")]
    Schema { path: String, reason: String },
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("scenario source failed: {0}")]
    Source(String),
    #[error("scenario {index} failed validation: {}", violations.join(", "))]
    Validation { index: usize, violations: Vec<String> },
    #[error("no asset found for {0}")]
    NoAssetFound(String),
    #[error("override for {uid} is malformed: {reason}")]
    OverrideParse { uid: String, reason: String },
    #[error("layout infeasible for {0}")]
    LayoutInfeasible(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("no novel composition exists")]
    NoNovelComposition,
    #[error("no adversarial candidate for {0}")]
    NoAdversarialCandidate(String),
    #[error("goal references absent instance {0}")]
    GoalReferencesAbsent(String),
    #[error("episode is over")]
    EpisodeOver,
    #[error("unknown joint {0}")]
    UnknownJoint(String),
    #[error("unknown instance {0}")]
    UnknownInstance(String),
    #[error("demonstration has no anchor annotations")]
    MissingAnnotations,
    #[error("anchor {0} missing from scene")]
    AnchorMissing(String),
    #[error("waypoint at step {step} leaves the workspace")]
    UnreachableWaypoint { step: usize },
    #[error("object projects behind the camera")]
    BehindCamera,
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("handshake failed: {0}")]
    HandshakeFailed(String),
    #[error("policy did not answer in time")]
    PolicyTimeout,
    #[error("unknown policy {0}")]
    UnknownPolicy(String),
}

impl Error {
    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            Self::Schema { .. } => "schema_error",
            Self::Invariant(_) => "invariant_error",
            Self::Source(_) => "source_error",
            Self::Validation { .. } => "validation_error",
            Self::NoAssetFound(_) => "no_asset_found",
            Self::OverrideParse { .. } => "override_parse_error",
            Self::LayoutInfeasible(_) => "layout_infeasible",
            Self::Precondition(_) => "precondition",
            Self::NoNovelComposition => "no_novel_composition",
            Self::NoAdversarialCandidate(_) => "no_adversarial_candidate",
            Self::GoalReferencesAbsent(_) => "goal_references_absent",
            Self::EpisodeOver => "episode_over",
            Self::UnknownJoint(_) => "unknown_joint",
            Self::UnknownInstance(_) => "unknown_instance",
            Self::MissingAnnotations => "missing_annotations",
            Self::AnchorMissing(_) => "anchor_missing",
            Self::UnreachableWaypoint { .. } => "unreachable_waypoint",
            Self::BehindCamera => "behind_camera",
            Self::Protocol(_) => "protocol_error",
            Self::HandshakeFailed(_) => "handshake_failed",
            Self::PolicyTimeout => "policy_timeout",
            Self::UnknownPolicy(_) => "unknown_policy",
        }
    }
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
