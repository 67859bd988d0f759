//! Rule engine: emergence classification, the stochastic trigger, collapse
//! at the hit time, and the post-hit classical cascade.
//!
//! The trigger uses inverse-CDF sampling: one uniform threshold per run,
//! drawn from a seeded [`SplitMix64`], and a hit fires the first time the
//! cumulative weight delivered into ready components crosses it. The hit
//! probability of a ready component therefore equals the total weight ever
//! transferred into it, and the hit-time law is the transfer schedule
//! itself — exact in `dt`, with a single RNG consumption point per run.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::dynamics::{
    carry_conscious_pulse, step_edges, CurrentEdge, DynamicsError, EdgeKind, FlowProfile,
    StepOutcome,
};
use crate::state::{ComponentId, Event, Phase, StateError, Status, SystemState};

/// Counter-based 64-bit generator (SplitMix64). Platform-independent and
/// trivially seedable; this is the pinned generator for every stochastic
/// draw in the library, so event logs reproduce bit-for-bit across
/// machines.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(Self::GAMMA);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform draw in the open interval `(0, 1)`.
    pub fn next_open01(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }
}

/// How a component first came into existence, for emergence classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EmergenceContext {
    pub new_component: ComponentId,
    /// Kind of the edge that first feeds the component.
    pub creating_edge_kind: EdgeKind,
    pub has_brain_pulse: bool,
}

/// Status a newly emerging (weight-zero) component must carry.
///
/// A branching edge into a brain pulse arms a ready state; continuous
/// chains never do, and neither does a branch into a brainless component.
pub fn classify_emergence(ctx: &EmergenceContext) -> Status {
    if ctx.creating_edge_kind == EdgeKind::Branching && ctx.has_brain_pulse {
        Status::Ready
    } else {
        Status::Plain
    }
}

/// The stochastic hit: fired at `t_sc` on `target`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HitEvent {
    pub t_sc: f64,
    pub target: ComponentId,
}

/// Per-run trigger state: one uniform threshold and the running account of
/// weight delivered into each ready component.
#[derive(Debug, Clone)]
pub struct StochasticTrigger {
    rng_seed: u64,
    threshold_u: f64,
    cumulative_transfer: BTreeMap<ComponentId, f64>,
    fired: bool,
}

impl StochasticTrigger {
    pub fn new(seed: u64) -> Self {
        let mut rng = SplitMix64::new(seed);
        Self {
            rng_seed: seed,
            threshold_u: rng.next_open01(),
            cumulative_transfer: BTreeMap::new(),
            fired: false,
        }
    }

    /// Build a trigger with an explicit threshold. Intended for tests and
    /// for callers that plug in their own sampling law.
    pub fn with_threshold(threshold_u: f64) -> Self {
        assert!(
            threshold_u > 0.0 && threshold_u < 1.0,
            "threshold must lie in (0, 1)"
        );
        Self {
            rng_seed: 0,
            threshold_u,
            cumulative_transfer: BTreeMap::new(),
            fired: false,
        }
    }

    pub fn seed(&self) -> u64 {
        self.rng_seed
    }

    pub fn threshold(&self) -> f64 {
        self.threshold_u
    }

    pub fn cumulative_transfer(&self) -> &BTreeMap<ComponentId, f64> {
        &self.cumulative_transfer
    }

    pub fn total_transferred(&self) -> f64 {
        self.cumulative_transfer.values().sum()
    }

    /// Account one step of inbound current and test for a hit.
    ///
    /// `inbound` lists `(ready component, average rate over the step)`.
    /// Each entry accrues `rate * dt`; the step's increment of the
    /// cumulative axis is owned piecewise by the receiving components in
    /// ascending id order, and the hit lands on whichever piece contains
    /// the threshold. Returns the hit the first time the running total
    /// crosses the threshold, `None` otherwise.
    pub fn accumulate_and_test(
        &mut self,
        inbound: &[(ComponentId, f64)],
        dt: f64,
        t: f64,
    ) -> Option<HitEvent> {
        if inbound.is_empty() {
            return None;
        }
        // Entries usually arrive in id order already; only copy and sort
        // when they do not.
        let sorted_inline = inbound.windows(2).all(|w| w[0].0 <= w[1].0);
        let mut scratch: Vec<(ComponentId, f64)>;
        let entries: &[(ComponentId, f64)] = if sorted_inline {
            inbound
        } else {
            scratch = inbound.to_vec();
            scratch.sort_by_key(|&(id, _)| id);
            &scratch
        };

        let mut acc = self.total_transferred();
        let mut hit = None;
        for &(id, rate) in entries {
            let dq = rate * dt;
            if dq < 0.0 {
                continue;
            }
            *self.cumulative_transfer.entry(id).or_insert(0.0) += dq;
            let next = acc + dq;
            if !self.fired && self.threshold_u > acc && self.threshold_u <= next {
                self.fired = true;
                hit = Some(HitEvent {
                    t_sc: t + dt,
                    target: id,
                });
            }
            acc = next;
        }
        hit
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ReductionError {
    #[error("hit target {0} is not ready")]
    TargetNotReady(ComponentId),
    #[error("cascade invoked before a collapse")]
    NotCollapsed,
    #[error("invalid cascade chain: {0}")]
    InvalidChain(String),
    #[error(transparent)]
    State(#[from] StateError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
}

/// Apply the stochastic hit: every component except the target goes to
/// zero, the target becomes the conscious carrier with the full weight,
/// and the phase flips to [`Phase::Collapsed`].
pub fn collapse(state: &mut SystemState, hit: &HitEvent) -> Result<(), ReductionError> {
    assert!(
        matches!(state.phase, Phase::PreCollapse),
        "collapse requires a pre-collapse state"
    );
    if state.component(hit.target)?.status != Status::Ready {
        return Err(ReductionError::TargetNotReady(hit.target));
    }
    let previous = state.conscious_component()?;

    state.log.push(Event::Hit {
        t: hit.t_sc,
        target: hit.target,
    });
    if let Some(prev) = previous {
        state.component_mut(prev)?.status = Status::Plain;
        state.log.push(Event::StatusChange {
            t: hit.t_sc,
            component: prev,
            from: Status::Conscious,
            to: Status::Plain,
        });
    }
    for c in &mut state.components {
        c.weight = if c.id == hit.target { 1.0 } else { 0.0 };
    }
    state.component_mut(hit.target)?.status = Status::Conscious;
    state.log.push(Event::StatusChange {
        t: hit.t_sc,
        component: hit.target,
        from: Status::Ready,
        to: Status::Conscious,
    });
    state.phase = Phase::Collapsed(hit.target);
    Ok(())
}

/// Run the post-hit classical progression along `chain` and collect the
/// state after every step (the final state is last).
///
/// `profiles[k]` shapes the transfer of leg `chain[k] -> chain[k + 1]`,
/// interpreted relative to the moment the leg begins; legs run one after
/// another, each until its profile support ends. Consciousness rides the
/// maximum-weight member of the active leg.
pub fn cascade(
    mut state: SystemState,
    chain: &[ComponentId],
    profiles: &[FlowProfile],
    dt: f64,
) -> Result<Vec<SystemState>, ReductionError> {
    let mut trajectory = Vec::new();
    cascade_with(&mut state, chain, profiles, dt, |s| {
        trajectory.push(s.clone());
    })?;
    // The last per-step snapshot predates the final leg-completion log
    // entry; end the trajectory with the fully updated state instead.
    if trajectory.last().map(|s| s.time) == Some(state.time) {
        trajectory.pop();
    }
    trajectory.push(state);
    Ok(trajectory)
}

/// Callback-driven form of [`cascade`]; `sink` observes the state after
/// every step. Used by the run harness to avoid cloning per step.
pub(crate) fn cascade_with<F: FnMut(&SystemState)>(
    state: &mut SystemState,
    chain: &[ComponentId],
    profiles: &[FlowProfile],
    dt: f64,
    mut sink: F,
) -> Result<(), ReductionError> {
    match state.phase {
        Phase::PreCollapse => return Err(ReductionError::NotCollapsed),
        Phase::Collapsed(c) => {
            if chain.first() != Some(&c) {
                return Err(ReductionError::InvalidChain(format!(
                    "chain must start at the collapsed component {c}"
                )));
            }
        }
    }
    if chain.len() <= 1 {
        return Ok(());
    }
    if profiles.len() != chain.len() - 1 {
        return Err(ReductionError::InvalidChain(format!(
            "chain of {} components needs {} profiles, got {}",
            chain.len(),
            chain.len() - 1,
            profiles.len()
        )));
    }

    let mut out = StepOutcome::default();
    for (pair, profile) in chain.windows(2).zip(profiles) {
        let span = profile.support_end().ok_or_else(|| {
            ReductionError::InvalidChain("cascade profiles must have finite support".into())
        })?;
        let leg_start = state.time;
        let leg = [CurrentEdge {
            from: pair[0],
            to: pair[1],
            profile: profile.shifted(leg_start),
            kind: EdgeKind::Continuous,
        }];
        // Keep the clock on the leg grid instead of accumulating
        // additions, so rate evaluations do not pick up ulp drift.
        let steps = (span / dt).round().max(1.0) as usize;
        for j in 0..steps {
            step_edges(state, &leg, dt, &mut out, true)?;
            state.time = leg_start + (j + 1) as f64 * dt;
            carry_conscious_pulse(state, &leg)?;
            sink(state);
        }
        let t = state.time;
        state.log.push(Event::CascadeStep {
            t,
            from: pair[0],
            to: pair[1],
        });
    }
    Ok(())
}
