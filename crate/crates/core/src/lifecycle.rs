//! Lifecycle state machines of the simulated runtime, one per kind.

use crate::occi::ids;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Transition {
    pub from: &'static str,
    pub action: &'static str,
    pub to: &'static str,
}

const fn t(from: &'static str, action: &'static str, to: &'static str) -> Transition {
    Transition { from, action, to }
}

#[derive(Debug, PartialEq, Eq)]
pub struct LifecycleFsm {
    pub kind: &'static str,
    /// Entity attribute that holds the state.
    pub state_attribute: &'static str,
    pub states: &'static [&'static str],
    pub initial: &'static str,
    /// State reached without any request once the simulated provisioning
    /// delay has passed.
    pub auto_target: Option<&'static str>,
    pub transitions: &'static [Transition],
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TransitionError {
    #[error("{kind} has no action {action:?}")]
    UnknownAction { kind: &'static str, action: alloc::string::String },
    #[error("action {action:?} is not allowed in state {state:?}")]
    NotAllowed { state: alloc::string::String, action: alloc::string::String },
}

impl LifecycleFsm {
    pub fn actions(&self) -> impl Iterator<Item = &'static str> + '_ {
        let mut seen: alloc::vec::Vec<&str> = alloc::vec::Vec::new();
        self.transitions.iter().filter_map(move |t| {
            if seen.contains(&t.action) {
                None
            } else {
                seen.push(t.action);
                Some(t.action)
            }
        })
    }

    pub fn has_state(&self, state: &str) -> bool {
        self.states.contains(&state)
    }

    pub fn apply(&self, state: &str, action: &str) -> Result<&'static str, TransitionError> {
        if !self.transitions.iter().any(|t| t.action == action) {
            return Err(TransitionError::UnknownAction { kind: self.kind, action: action.into() });
        }
        self.transitions
            .iter()
            .find(|t| t.from == state && t.action == action)
            .map(|t| t.to)
            .ok_or_else(|| TransitionError::NotAllowed { state: state.into(), action: action.into() })
    }
}

pub const ACTIVE: &str = "active";
pub const INACTIVE: &str = "inactive";
pub const UNDEPLOYED: &str = "undeployed";
pub const DEPLOYED: &str = "deployed";

pub static COMPUTE: LifecycleFsm = LifecycleFsm {
    kind: ids::COMPUTE,
    state_attribute: "occi.compute.state",
    states: &["inactive", "active", "suspended", "error"],
    initial: "inactive",
    auto_target: Some("active"),
    transitions: &[
        t("inactive", "start", "active"),
        t("suspended", "start", "active"),
        t("active", "stop", "inactive"),
        t("suspended", "stop", "inactive"),
        t("active", "suspend", "suspended"),
    ],
};

pub static STORAGE: LifecycleFsm = LifecycleFsm {
    kind: ids::STORAGE,
    state_attribute: "occi.storage.state",
    states: &["offline", "online", "error"],
    initial: "offline",
    auto_target: Some("online"),
    transitions: &[t("offline", "online", "online"), t("online", "offline", "offline")],
};

pub static NETWORK: LifecycleFsm = LifecycleFsm {
    kind: ids::NETWORK,
    state_attribute: "occi.network.state",
    states: &["inactive", "active"],
    initial: "inactive",
    auto_target: Some("active"),
    transitions: &[t("inactive", "up", "active"), t("active", "down", "inactive")],
};

const PLATFORM_TRANSITIONS: &[Transition] = &[
    t("undeployed", "deploy", "deployed"),
    t("deployed", "configure", "deployed"),
    t("deployed", "start", "active"),
    t("active", "stop", "deployed"),
    t("deployed", "undeploy", "undeployed"),
    t("error", "undeploy", "undeployed"),
];

const PLATFORM_STATES: &[&str] = &["undeployed", "deployed", "active", "error"];

pub static COMPONENT: LifecycleFsm = LifecycleFsm {
    kind: ids::COMPONENT,
    state_attribute: "occi.component.state",
    states: PLATFORM_STATES,
    initial: "undeployed",
    auto_target: None,
    transitions: PLATFORM_TRANSITIONS,
};

pub static APPLICATION: LifecycleFsm = LifecycleFsm {
    kind: ids::APPLICATION,
    state_attribute: "occi.app.state",
    states: PLATFORM_STATES,
    initial: "undeployed",
    auto_target: None,
    transitions: PLATFORM_TRANSITIONS,
};

pub static ALL: [&LifecycleFsm; 5] = [&COMPUTE, &STORAGE, &NETWORK, &COMPONENT, &APPLICATION];

/// The state machine of `kind`, if entities of that kind have a lifecycle.
pub fn fsm_for(kind: &str) -> Option<&'static LifecycleFsm> {
    ALL.iter().copied().find(|f| f.kind == kind)
}
