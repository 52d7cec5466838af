use std::collections::{BTreeMap, BTreeSet};
use std::sync::{Arc, Mutex, MutexGuard};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use tosca2occi_core::lifecycle::{fsm_for, LifecycleFsm};
use tosca2occi_core::occi::{check_datatype, ids, DataTypeLookup, Entity, ExtensionSet, OcciConfiguration};
use tosca2occi_core::orchestrator::{EdgeReason, EntityBody, LinkClassifier, PatchBody};

use super::{RuntimeClient, RuntimeError};

#[derive(Clone, Debug)]
pub struct MockConfig {
    /// Time between creation and automatic activation.
    pub delay: Duration,
    /// Prefix of the generated provider ids.
    pub provider: String,
    /// When set, kinds, mixins and attribute values are checked on the way in.
    pub extensions: Option<Arc<ExtensionSet>>,
}

impl Default for MockConfig {
    fn default() -> Self {
        MockConfig { delay: Duration::from_millis(20), provider: "mock".into(), extensions: None }
    }
}

impl MockConfig {
    /// Zero delay: entities activate as soon as they are created.
    pub fn deterministic() -> Self {
        MockConfig { delay: Duration::ZERO, ..MockConfig::default() }
    }

    pub fn with_extensions(mut self, exts: ExtensionSet) -> Self {
        self.extensions = Some(Arc::new(exts));
        self
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "fault", rename_all = "kebab-case", rename_all_fields = "camelCase")]
pub enum FaultSpec {
    /// The entity never activates on its own.
    HoldState { entity_id: String },
    /// The `nth` CREATE received (counting from 1) fails.
    RejectCreate { nth: usize },
    /// Matching actions are acknowledged but have no effect.
    DropAction {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        entity_id: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        action: Option<String>,
    },
}

/// A request as the runtime applied it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verb", rename_all = "UPPERCASE")]
pub enum RuntimeRequest {
    Create { id: String, body: EntityBody },
    Update { id: String, patch: PatchBody },
    Delete { id: String },
    Action { id: String, action: String },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TransitionRecord {
    pub seq: usize,
    pub entity_id: String,
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub from: Option<String>,
    pub to: String,
    pub cause: String,
}

struct Stored {
    entity: Entity,
    state: Option<&'static str>,
    provider_id: String,
    due: Option<Instant>,
}

#[derive(Default)]
struct State {
    order: Vec<String>,
    entities: BTreeMap<String, Stored>,
    faults: Vec<FaultSpec>,
    creates: usize,
    next_provider: u64,
    transitions: Vec<TransitionRecord>,
    log: Vec<RuntimeRequest>,
}

/// In-process simulated runtime. Clones share the same state.
#[derive(Clone, Default)]
pub struct MockRuntime {
    config: MockConfig,
    state: Arc<Mutex<State>>,
}

impl State {
    fn held(&self, id: &str) -> bool {
        self.faults.iter().any(|f| matches!(f, FaultSpec::HoldState { entity_id } if entity_id == id))
    }

    fn record(&mut self, id: &str, from: Option<&str>, to: &str, cause: &str) {
        let kind = self.entities.get(id).map(|s| s.entity.kind().to_string()).unwrap_or_default();
        self.transitions.push(TransitionRecord {
            seq: self.transitions.len() + 1,
            entity_id: id.into(),
            kind,
            from: from.map(String::from),
            to: to.into(),
            cause: cause.into(),
        });
    }

    /// Applies automatic activations that are due.
    fn tick(&mut self, now: Instant) {
        let due: Vec<String> = self
            .order
            .iter()
            .filter(|id| self.entities[*id].due.is_some_and(|d| d <= now) && !self.held(id))
            .cloned()
            .collect();
        for id in due {
            self.activate(&id);
        }
    }

    fn activate(&mut self, id: &str) {
        let Some(s) = self.entities.get_mut(id) else { return };
        s.due = None;
        let Some(target) = fsm_for(s.entity.kind()).and_then(|f| f.auto_target) else { return };
        let from = s.state.replace(target);
        if from != Some(target) {
            self.record(id, from, target, "auto");
        }
    }

    fn transition(&mut self, id: &str, fsm: &LifecycleFsm, action: &str, cause: &str) -> Result<(), RuntimeError> {
        let s = self.entities.get_mut(id).ok_or_else(|| RuntimeError::NotFound(id.into()))?;
        let from = s.state.unwrap_or(fsm.initial);
        let to = fsm.apply(from, action).map_err(|e| RuntimeError::Conflict(format!("{id}: {e}")))?;
        s.state = Some(to);
        s.due = None;
        self.record(id, Some(from), to, cause);
        Ok(())
    }

    fn snapshot_entity(&self, s: &Stored) -> Entity {
        let mut e = s.entity.clone();
        let attrs = match &mut e {
            Entity::Resource(r) => &mut r.attribute_values,
            Entity::Link(l) => &mut l.attribute_values,
        };
        if let (Some(state), Some(fsm)) = (s.state, fsm_for(s.entity.kind())) {
            attrs.insert(fsm.state_attribute.into(), Value::from(state));
        }
        attrs.insert(ids::PROVIDER_ID_ATTRIBUTE.into(), Value::from(s.provider_id.as_str()));
        e
    }

    fn links_touching(&self, id: &str) -> Vec<&str> {
        self.order
            .iter()
            .filter(
                |l| matches!(&self.entities[*l].entity, Entity::Link(link) if link.source == id || link.target == id),
            )
            .map(String::as_str)
            .collect()
    }
}

fn check_entity(exts: &ExtensionSet, e: &Entity) -> Result<(), String> {
    if exts.kind(e.kind()).is_none() {
        return Err(format!("unknown kind {}", e.kind()));
    }
    let conforms = |owner: &str, name: &str, datatype: &str, value: &Value| match exts.datatype(datatype) {
        Some(dt) if check_datatype(value, dt, exts) => Ok(()),
        _ => Err(format!("{owner}: value {value} of {name} does not conform to {datatype}")),
    };
    for mb in e.mixin_bases() {
        if exts.mixin(&mb.mixin).is_none() {
            return Err(format!("unknown mixin {}", mb.mixin));
        }
        for (name, value) in &mb.attribute_values {
            let def =
                exts.mixin_attribute(&mb.mixin, name).ok_or_else(|| format!("{} declares no {name}", mb.mixin))?;
            conforms(&mb.mixin, name, &def.datatype, value)?;
        }
    }
    for (name, value) in e.attribute_values() {
        if ids::is_runtime_attribute(name) {
            continue;
        }
        let def = exts
            .kind_attribute(e.kind(), name)
            .or_else(|| e.mixin_bases().iter().find_map(|mb| exts.mixin_attribute(&mb.mixin, name)))
            .ok_or_else(|| format!("attribute {name} is not declared"))?;
        conforms(e.id(), name, &def.datatype, value)?;
    }
    Ok(())
}

fn strip_runtime(attrs: &mut crate::core::AttributeMap) {
    attrs.retain(|k, _| !ids::is_runtime_attribute(k));
}

impl MockRuntime {
    pub fn new(config: MockConfig) -> Self {
        MockRuntime { config, state: Arc::default() }
    }

    pub fn config(&self) -> &MockConfig {
        &self.config
    }

    fn lock(&self) -> MutexGuard<'_, State> {
        let mut state = self.state.lock().unwrap_or_else(|p| p.into_inner());
        state.tick(Instant::now());
        state
    }

    /// Point-in-time runtime model, states and provider ids included.
    pub fn snapshot(&self) -> OcciConfiguration {
        let state = self.lock();
        let mut cfg = OcciConfiguration::default();
        let mut uses = BTreeSet::new();
        for id in &state.order {
            let s = &state.entities[id];
            if let Some(exts) = &self.config.extensions {
                uses.extend(exts.extension_of(s.entity.kind()).map(String::from));
                uses.extend(
                    s.entity.mixin_bases().iter().filter_map(|m| exts.extension_of(&m.mixin)).map(String::from),
                );
            }
            cfg.push(state.snapshot_entity(s));
        }
        cfg.uses = uses.into_iter().collect();
        cfg
    }

    pub fn transitions(&self) -> Vec<TransitionRecord> {
        self.lock().transitions.clone()
    }

    /// Requests applied so far, in order.
    pub fn requests(&self) -> Vec<RuntimeRequest> {
        self.lock().log.clone()
    }

    pub fn faults(&self) -> Vec<FaultSpec> {
        self.lock().faults.clone()
    }

    pub fn inject(&self, fault: FaultSpec) {
        self.lock().faults.push(fault);
    }

    pub fn clear_faults(&self) {
        let mut state = self.lock();
        state.faults.clear();
        state.tick(Instant::now());
    }

    pub fn apply(&self, request: &RuntimeRequest) -> Result<(), RuntimeError> {
        let mut state = self.lock();
        let result = match request {
            RuntimeRequest::Create { id, body } => self.create_locked(&mut state, id, body),
            RuntimeRequest::Update { id, patch } => self.update_locked(&mut state, id, patch),
            RuntimeRequest::Delete { id } => Self::delete_locked(&mut state, id),
            RuntimeRequest::Action { id, action } => self.action_locked(&mut state, id, action),
        };
        if result.is_ok() {
            state.log.push(request.clone());
        }
        result
    }

    fn validate(&self, e: &Entity) -> Result<(), RuntimeError> {
        match &self.config.extensions {
            Some(exts) => check_entity(exts, e).map_err(RuntimeError::BadRequest),
            None => Ok(()),
        }
    }

    fn create_locked(&self, state: &mut State, id: &str, body: &EntityBody) -> Result<(), RuntimeError> {
        state.creates += 1;
        let n = state.creates;
        if state.faults.iter().any(|f| matches!(f, FaultSpec::RejectCreate { nth } if *nth == n)) {
            return Err(RuntimeError::Conflict(format!("create #{n} of {id} rejected by injected fault")));
        }
        if state.entities.contains_key(id) {
            return Err(RuntimeError::Conflict(format!("{id} already exists")));
        }
        let mut body = body.clone();
        strip_runtime(&mut body.attributes);
        let entity = body.into_entity(id.to_string());
        if let Entity::Link(l) = &entity {
            for end in [&l.source, &l.target] {
                match state.entities.get(end) {
                    Some(s) if !s.entity.is_link() => {}
                    _ => return Err(RuntimeError::Conflict(format!("{id}: endpoint {end} is not a stored resource"))),
                }
            }
        }
        self.validate(&entity)?;

        let fsm = fsm_for(entity.kind());
        state.next_provider += 1;
        let provider_id = format!("{}-{:06}", self.config.provider, state.next_provider);
        let initial = fsm.map(|f| f.initial);
        let due = fsm.and_then(|f| f.auto_target).map(|_| Instant::now() + self.config.delay);
        state.entities.insert(id.to_string(), Stored { entity, state: initial, provider_id, due });
        state.order.push(id.to_string());
        if let Some(initial) = initial {
            state.record(id, None, initial, "create");
        }
        if due.is_some() && self.config.delay.is_zero() && !state.held(id) {
            state.activate(id);
        }
        Ok(())
    }

    fn update_locked(&self, state: &mut State, id: &str, patch: &PatchBody) -> Result<(), RuntimeError> {
        let stored = state.entities.get(id).ok_or_else(|| RuntimeError::NotFound(id.into()))?;
        let mut entity = stored.entity.clone();
        for end in [&patch.source, &patch.target].into_iter().flatten() {
            if !state.entities.get(end).is_some_and(|s| !s.entity.is_link()) {
                return Err(RuntimeError::Conflict(format!("{id}: endpoint {end} is not a stored resource")));
            }
        }
        match &mut entity {
            Entity::Resource(r) => {
                if patch.source.is_some() || patch.target.is_some() {
                    return Err(RuntimeError::BadRequest(format!("{id} is not a link")));
                }
                apply_common(&mut r.title, &mut r.attribute_values, &mut r.mixin_bases, patch);
            }
            Entity::Link(l) => {
                if let Some(s) = &patch.source {
                    l.source = s.clone();
                }
                if let Some(t) = &patch.target {
                    l.target = t.clone();
                }
                apply_common(&mut l.title, &mut l.attribute_values, &mut l.mixin_bases, patch);
            }
        }
        self.validate(&entity)?;
        if let Some(s) = state.entities.get_mut(id) {
            s.entity = entity;
        }
        Ok(())
    }

    fn delete_locked(state: &mut State, id: &str) -> Result<(), RuntimeError> {
        let stored = state.entities.get(id).ok_or_else(|| RuntimeError::NotFound(id.into()))?;
        if !stored.entity.is_link() {
            let links = state.links_touching(id);
            if !links.is_empty() {
                return Err(RuntimeError::Conflict(format!("{id} is still referenced by {}", links.join(", "))));
            }
        }
        state.entities.remove(id);
        state.order.retain(|o| o != id);
        Ok(())
    }

    fn action_locked(&self, state: &mut State, id: &str, action: &str) -> Result<(), RuntimeError> {
        let stored = state.entities.get(id).ok_or_else(|| RuntimeError::NotFound(id.into()))?;
        let kind = stored.entity.kind().to_string();
        let dropped = state.faults.iter().any(|f| match f {
            FaultSpec::DropAction { entity_id, action: a } => {
                entity_id.as_deref().is_none_or(|e| e == id) && a.as_deref().is_none_or(|a| a == action)
            }
            _ => false,
        });
        if dropped {
            log::debug!("dropping action {action} on {id}");
            return Ok(());
        }
        let fsm =
            fsm_for(&kind).ok_or_else(|| RuntimeError::Conflict(format!("{id}: kind {kind} has no lifecycle")))?;
        if kind == ids::APPLICATION && (action == "start" || action == "stop") {
            return self.cascade(state, id, fsm, action);
        }
        state.transition(id, fsm, action, "request")
    }

    /// Components of `app` in start order: every component after the ones it
    /// is hosted on, connects to or depends on.
    fn components_in_order(&self, state: &State, app: &str) -> Vec<String> {
        let is_component = |id: &str| state.entities.get(id).is_some_and(|s| s.entity.kind() == ids::COMPONENT);
        let mut members = BTreeSet::new();
        for id in &state.order {
            if let Entity::Link(l) = &state.entities[id].entity {
                if l.kind == ids::COMPONENTLINK && l.source == app && is_component(&l.target) {
                    members.insert(l.target.clone());
                }
            }
        }
        let mut waits: BTreeMap<&str, BTreeSet<&str>> = members.iter().map(|m| (m.as_str(), BTreeSet::new())).collect();
        for id in &state.order {
            let Entity::Link(l) = &state.entities[id].entity else { continue };
            if !members.contains(&l.source) || !members.contains(&l.target) || l.source == l.target {
                continue;
            }
            let orders = match &self.config.extensions {
                Some(exts) => {
                    matches!(exts.classify(l), Some(EdgeReason::Hosted | EdgeReason::Connects | EdgeReason::Depends))
                }
                None => l.kind == ids::COMPONENTLINK,
            };
            if orders {
                if let Some(w) = waits.get_mut(l.source.as_str()) {
                    w.insert(l.target.as_str());
                }
            }
        }
        let mut order = Vec::new();
        let mut done = BTreeSet::new();
        while done.len() < members.len() {
            let next = waits
                .iter()
                .find(|(m, w)| !done.contains(*m) && w.iter().all(|d| done.contains(d)))
                .or_else(|| waits.iter().find(|(m, _)| !done.contains(*m)))
                .map(|(m, _)| *m);
            let Some(next) = next else { break };
            done.insert(next);
            order.push(next.to_string());
        }
        order
    }

    fn cascade(&self, state: &mut State, app: &str, fsm: &LifecycleFsm, action: &str) -> Result<(), RuntimeError> {
        let components = self.components_in_order(state, app);
        let current = |state: &State, id: &str| state.entities.get(id).and_then(|s| s.state).unwrap_or(fsm.initial);
        if action == "start" {
            if current(state, app) == "active" {
                return Err(RuntimeError::Conflict(format!("{app} is already active")));
            }
            let cause = format!("start {app}");
            for (step, from) in [("deploy", "undeployed"), ("configure", "deployed"), ("start", "deployed")] {
                for c in &components {
                    if current(state, c) == from {
                        let cfsm = fsm_for(ids::COMPONENT).expect("component lifecycle");
                        state.transition(c, cfsm, step, &cause)?;
                    }
                }
            }
            if current(state, app) == "undeployed" {
                state.transition(app, fsm, "deploy", &cause)?;
            }
            state.transition(app, fsm, "configure", &cause)?;
            state.transition(app, fsm, "start", &cause)
        } else {
            state.transition(app, fsm, "stop", &format!("stop {app}"))?;
            for c in components.iter().rev() {
                if current(state, c) == "active" {
                    let cfsm = fsm_for(ids::COMPONENT).expect("component lifecycle");
                    state.transition(c, cfsm, "stop", &format!("stop {app}"))?;
                }
            }
            Ok(())
        }
    }
}

fn apply_common(
    title: &mut Option<String>,
    attrs: &mut crate::core::AttributeMap,
    mixins: &mut Vec<tosca2occi_core::occi::MixinBase>,
    patch: &PatchBody,
) {
    if let Some(t) = &patch.title {
        *title = Some(t.clone());
    }
    for (k, v) in &patch.attributes {
        if ids::is_runtime_attribute(k) {
            continue;
        }
        if v.is_null() {
            attrs.remove(k);
        } else {
            attrs.insert(k.clone(), v.clone());
        }
    }
    if let Some(m) = &patch.mixins {
        *mixins = m.clone();
    }
}

impl RuntimeClient for MockRuntime {
    fn configuration(&self) -> Result<OcciConfiguration, RuntimeError> {
        Ok(self.snapshot())
    }

    fn create(&self, id: &str, body: &EntityBody) -> Result<(), RuntimeError> {
        self.apply(&RuntimeRequest::Create { id: id.into(), body: body.clone() })
    }

    fn update(&self, id: &str, patch: &PatchBody) -> Result<(), RuntimeError> {
        self.apply(&RuntimeRequest::Update { id: id.into(), patch: patch.clone() })
    }

    fn delete(&self, id: &str) -> Result<(), RuntimeError> {
        self.apply(&RuntimeRequest::Delete { id: id.into() })
    }

    fn action(&self, id: &str, action: &str) -> Result<(), RuntimeError> {
        self.apply(&RuntimeRequest::Action { id: id.into(), action: action.into() })
    }

    fn inject_fault(&self, fault: &FaultSpec) -> Result<(), RuntimeError> {
        self.inject(fault.clone());
        Ok(())
    }

    fn entity(&self, id: &str) -> Result<Option<Entity>, RuntimeError> {
        let state = self.lock();
        Ok(state.entities.get(id).map(|s| state.snapshot_entity(s)))
    }
}
