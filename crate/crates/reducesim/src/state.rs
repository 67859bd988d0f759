//! State model for the superposition: components, statuses, weights, and the
//! event log.
//!
//! A [`SystemState`] is a plain value. Every operation in the other modules
//! either takes it by reference or mutates it under exclusive access, so
//! independent trajectories can run on separate threads without sharing.

use std::fmt;

use thiserror::Error;

/// Index of a component within a [`SystemState`].
///
/// Ids are assigned densely (`0..n`) by the scenario loader and stay stable
/// for the lifetime of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ComponentId(pub u32);

impl ComponentId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for ComponentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Role of a component in the reduction dynamics.
///
/// `Ready` marks a newly emerged, non-continuous brain pulse that is armed
/// for the stochastic trigger but not yet experienced. At most one component
/// is `Conscious` at any time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Status {
    Plain,
    Ready,
    Conscious,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Plain => "plain",
            Status::Ready => "ready",
            Status::Conscious => "conscious",
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One additive term of the total state: a square-modulus weight plus the
/// detector configuration and brain-pulse labels that identify the branch.
///
/// Weights are square moduli, not amplitudes; no interference between
/// branches is ever computed, so the real weight is the whole story.
#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    pub id: ComponentId,
    /// Square modulus, dimensionless, `>= 0` at all times.
    pub weight: f64,
    /// Ordered detector-stage labels, e.g. `[D1, D0, D0]`.
    pub detector_config: Vec<String>,
    /// Symbolic pulse name (`X`, `B`, `B_0`, ...), if the branch carries one.
    pub pulse_label: Option<String>,
    pub status: Status,
}

impl Component {
    pub fn has_brain_pulse(&self) -> bool {
        self.pulse_label.is_some()
    }
}

/// Whether the stochastic trigger has fired yet.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    PreCollapse,
    /// A hit has selected this component; every other branch is dead.
    Collapsed(ComponentId),
}

/// A single record in the run history.
#[derive(Debug, Clone, PartialEq)]
pub enum Event {
    /// The stochastic trigger fired at `t` and selected `target`.
    Hit { t: f64, target: ComponentId },
    /// `component` changed status at `t`.
    StatusChange {
        t: f64,
        component: ComponentId,
        from: Status,
        to: Status,
    },
    /// One leg of the post-hit classical progression completed at `t`.
    CascadeStep {
        t: f64,
        from: ComponentId,
        to: ComponentId,
    },
}

impl Event {
    pub fn time(&self) -> f64 {
        match *self {
            Event::Hit { t, .. } | Event::StatusChange { t, .. } | Event::CascadeStep { t, .. } => {
                t
            }
        }
    }
}

/// Ordered history of a run: at most one hit, times nondecreasing.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EventLog {
    events: Vec<Event>,
}

impl EventLog {
    pub fn new() -> Self {
        Self::default()
    }

    /// Append an event. Panics on misuse (out-of-order time or a second
    /// hit), which always indicates a bug in the caller, not bad input.
    pub fn push(&mut self, event: Event) {
        if let Some(last) = self.events.last() {
            assert!(
                event.time() >= last.time(),
                "events must be appended in nondecreasing time order"
            );
        }
        if matches!(event, Event::Hit { .. }) {
            assert!(self.hit().is_none(), "a run records at most one hit");
        }
        self.events.push(event);
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// The hit record, if the trigger has fired.
    pub fn hit(&self) -> Option<(f64, ComponentId)> {
        self.events.iter().find_map(|e| match *e {
            Event::Hit { t, target } => Some((t, target)),
            _ => None,
        })
    }

    pub fn hit_count(&self) -> usize {
        self.events
            .iter()
            .filter(|e| matches!(e, Event::Hit { .. }))
            .count()
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum StateError {
    #[error("unknown component id {0}")]
    UnknownComponent(ComponentId),
    #[error("corrupted state: components {0} and {1} are both conscious")]
    MultipleConscious(ComponentId, ComponentId),
}

/// The full state at one instant: component set, clock, phase, and history.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemState {
    /// Indexed by id: `components[i].id == ComponentId(i)`.
    pub components: Vec<Component>,
    /// Simulation time.
    pub time: f64,
    pub phase: Phase,
    /// Normalization target for the pre-collapse weight sum. Loaders fix
    /// this at 1.0 so transferred weight reads directly as probability.
    pub total_weight_reference: f64,
    pub log: EventLog,
}

impl SystemState {
    /// Build a state at `t = 0` from components with dense ids.
    pub fn new(components: Vec<Component>) -> Self {
        for (i, c) in components.iter().enumerate() {
            assert_eq!(c.id.index(), i, "component ids must be dense and in order");
        }
        Self {
            components,
            time: 0.0,
            phase: Phase::PreCollapse,
            total_weight_reference: 1.0,
            log: EventLog::new(),
        }
    }

    pub fn component(&self, id: ComponentId) -> Result<&Component, StateError> {
        self.components
            .get(id.index())
            .ok_or(StateError::UnknownComponent(id))
    }

    pub(crate) fn component_mut(&mut self, id: ComponentId) -> Result<&mut Component, StateError> {
        self.components
            .get_mut(id.index())
            .ok_or(StateError::UnknownComponent(id))
    }

    /// Sum of all component weights.
    pub fn total_weight(&self) -> f64 {
        self.components.iter().map(|c| c.weight).sum()
    }

    /// The unique conscious component, or `None` if no branch is conscious.
    ///
    /// Two conscious components means the state is corrupted and the run
    /// must abort.
    pub fn conscious_component(&self) -> Result<Option<ComponentId>, StateError> {
        let mut found = None;
        for c in &self.components {
            if c.status == Status::Conscious {
                if let Some(first) = found {
                    return Err(StateError::MultipleConscious(first, c.id));
                }
                found = Some(c.id);
            }
        }
        Ok(found)
    }
}

/// Free-function form of [`SystemState::total_weight`].
pub fn total_weight(state: &SystemState) -> f64 {
    state.total_weight()
}

/// Free-function form of [`SystemState::conscious_component`].
pub fn conscious_component(state: &SystemState) -> Result<Option<ComponentId>, StateError> {
    state.conscious_component()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn component(id: u32, weight: f64, status: Status) -> Component {
        Component {
            id: ComponentId(id),
            weight,
            detector_config: vec!["D0".to_string()],
            pulse_label: Some(format!("B_{id}")),
            status,
        }
    }

    #[test]
    fn total_weight_single_component() {
        let state = SystemState::new(vec![component(0, 1.0, Status::Conscious)]);
        assert_eq!(state.total_weight(), 1.0);
    }

    #[test]
    fn total_weight_empty() {
        let state = SystemState::new(vec![]);
        assert_eq!(state.total_weight(), 0.0);
    }

    #[test]
    fn total_weight_mid_run_split() {
        // Oracle: direct summation of a mid-run two-branch split with two
        // dead branches. The integrator conservation cross-check lives in
        // the dynamics tests.
        let weights = [0.3, 0.7, 0.0, 0.0];
        let oracle: f64 = weights.iter().sum();
        let state = SystemState::new(
            weights
                .iter()
                .enumerate()
                .map(|(i, &w)| component(i as u32, w, Status::Plain))
                .collect(),
        );
        assert_eq!(state.total_weight(), oracle);
        assert!((state.total_weight() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn conscious_component_pre_hit() {
        let state = SystemState::new(vec![
            component(0, 0.8, Status::Conscious),
            component(1, 0.2, Status::Ready),
        ]);
        assert_eq!(state.conscious_component(), Ok(Some(ComponentId(0))));
    }

    #[test]
    fn conscious_component_none_when_all_plain() {
        let state = SystemState::new(vec![
            component(0, 0.5, Status::Plain),
            component(1, 0.5, Status::Plain),
        ]);
        assert_eq!(state.conscious_component(), Ok(None));
    }

    #[test]
    fn conscious_component_post_collapse() {
        let state = SystemState::new(vec![
            component(0, 0.0, Status::Plain),
            component(1, 1.0, Status::Conscious),
        ]);
        assert_eq!(state.conscious_component(), Ok(Some(ComponentId(1))));
    }

    #[test]
    fn conscious_component_rejects_corrupted_state() {
        let state = SystemState::new(vec![
            component(0, 0.5, Status::Conscious),
            component(1, 0.5, Status::Conscious),
        ]);
        assert_eq!(
            state.conscious_component(),
            Err(StateError::MultipleConscious(
                ComponentId(0),
                ComponentId(1)
            ))
        );
    }

    #[test]
    fn event_log_keeps_time_order() {
        let mut log = EventLog::new();
        log.push(Event::StatusChange {
            t: 0.5,
            component: ComponentId(0),
            from: Status::Plain,
            to: Status::Conscious,
        });
        log.push(Event::Hit {
            t: 1.0,
            target: ComponentId(1),
        });
        assert_eq!(log.hit(), Some((1.0, ComponentId(1))));
        assert_eq!(log.hit_count(), 1);
    }

    #[test]
    #[should_panic(expected = "nondecreasing")]
    fn event_log_rejects_time_regression() {
        let mut log = EventLog::new();
        log.push(Event::Hit {
            t: 1.0,
            target: ComponentId(0),
        });
        log.push(Event::StatusChange {
            t: 0.5,
            component: ComponentId(0),
            from: Status::Ready,
            to: Status::Conscious,
        });
    }

    #[test]
    #[should_panic(expected = "at most one hit")]
    fn event_log_rejects_second_hit() {
        let mut log = EventLog::new();
        log.push(Event::Hit {
            t: 1.0,
            target: ComponentId(0),
        });
        log.push(Event::Hit {
            t: 2.0,
            target: ComponentId(1),
        });
    }
}
