//! Probability-current graph and the fixed-step integrator.
//!
//! Weight moves between components along [`CurrentEdge`]s according to a
//! time profile. Transfers are computed antisymmetrically: the exact amount
//! removed from the source is added to the target, so the total weight is
//! conserved to rounding regardless of step size.
//!
//! Two gates can zero an edge's current:
//! * a ready source passes no current onward (so branches downstream of an
//!   armed pulse stay empty), and
//! * once the state has collapsed, ordinary edges carry nothing (the
//!   post-hit cascade drives its own edges through the reduction module).

use libm::{cos, sin};
use std::f64::consts::PI;
use thiserror::Error;

use crate::state::{ComponentId, Event, Phase, StateError, Status, SystemState};

/// Time profile of the instantaneous transfer rate carried by an edge.
#[derive(Debug, Clone, PartialEq)]
pub enum FlowProfile {
    /// Fixed rate for all `t >= 0`.
    Constant { rate: f64 },
    /// Rate rises linearly from zero at `t_start` to `rate_max` at `t_end`;
    /// zero outside.
    Ramp {
        rate_max: f64,
        t_start: f64,
        t_end: f64,
    },
    /// Half-sine rate arch over `[t_start, t_start + duration]` whose
    /// integral is exactly `total`. The cumulative transfer traces a
    /// raised-cosine S-curve, which is the default shape for a pulse that
    /// weakens while its successor gains strength.
    RaisedCosine {
        t_start: f64,
        duration: f64,
        total: f64,
    },
}

impl FlowProfile {
    /// Instantaneous rate at time `t`. Nonnegative for all `t`.
    pub fn rate(&self, t: f64) -> f64 {
        match *self {
            FlowProfile::Constant { rate } => {
                if t >= 0.0 {
                    rate
                } else {
                    0.0
                }
            }
            FlowProfile::Ramp {
                rate_max,
                t_start,
                t_end,
            } => {
                if t < t_start || t > t_end {
                    0.0
                } else {
                    rate_max * (t - t_start) / (t_end - t_start)
                }
            }
            FlowProfile::RaisedCosine {
                t_start,
                duration,
                total,
            } => {
                if t < t_start || t > t_start + duration {
                    0.0
                } else {
                    total * PI / (2.0 * duration) * sin(PI * (t - t_start) / duration)
                }
            }
        }
    }

    /// Closed-form integral of [`rate`](Self::rate) over `[0, t]`.
    ///
    /// For `RaisedCosine` the integral over the full support equals `total`
    /// exactly: `(1 - cos(pi))/2 = 1`.
    pub fn cumulative(&self, t: f64) -> f64 {
        match *self {
            FlowProfile::Constant { rate } => rate * t.max(0.0),
            FlowProfile::Ramp {
                rate_max,
                t_start,
                t_end,
            } => {
                let span = t_end - t_start;
                let s = (t - t_start).clamp(0.0, span);
                rate_max * s * s / (2.0 * span)
            }
            FlowProfile::RaisedCosine {
                t_start,
                duration,
                total,
            } => {
                let s = (t - t_start).clamp(0.0, duration);
                total * (1.0 - cos(PI * s / duration)) / 2.0
            }
        }
    }

    /// End of the active support, if finite.
    pub fn support_end(&self) -> Option<f64> {
        match *self {
            FlowProfile::Constant { rate } => (rate == 0.0).then_some(0.0),
            FlowProfile::Ramp { t_end, .. } => Some(t_end),
            FlowProfile::RaisedCosine {
                t_start, duration, ..
            } => Some(t_start + duration),
        }
    }

    /// The same profile delayed by `offset`. Used to re-base cascade legs
    /// onto the (run-dependent) hit time.
    pub(crate) fn shifted(&self, offset: f64) -> FlowProfile {
        match *self {
            FlowProfile::Constant { rate } => FlowProfile::Constant { rate },
            FlowProfile::Ramp {
                rate_max,
                t_start,
                t_end,
            } => FlowProfile::Ramp {
                rate_max,
                t_start: t_start + offset,
                t_end: t_end + offset,
            },
            FlowProfile::RaisedCosine {
                t_start,
                duration,
                total,
            } => FlowProfile::RaisedCosine {
                t_start: t_start + offset,
                duration,
                total,
            },
        }
    }
}

/// Whether an edge continues an existing branch or opens a new one.
///
/// `Branching` edges are the ones that feed ready pulses and arm the
/// stochastic trigger; `Continuous` edges never do.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeKind {
    Continuous,
    Branching,
}

/// Directed probability-current channel between two components.
#[derive(Debug, Clone, PartialEq)]
pub struct CurrentEdge {
    pub from: ComponentId,
    pub to: ComponentId,
    pub profile: FlowProfile,
    pub kind: EdgeKind,
}

/// Edge set of a scenario. No self-loops, no duplicate `(from, to)` pairs.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CurrentGraph {
    edges: Vec<CurrentEdge>,
}

impl CurrentGraph {
    pub fn new(edges: Vec<CurrentEdge>) -> Result<Self, DynamicsError> {
        for (i, e) in edges.iter().enumerate() {
            if e.from == e.to {
                return Err(DynamicsError::SelfLoop(e.from));
            }
            if edges[..i].iter().any(|p| p.from == e.from && p.to == e.to) {
                return Err(DynamicsError::DuplicateEdge(e.from, e.to));
            }
        }
        Ok(Self { edges })
    }

    pub fn edges(&self) -> &[CurrentEdge] {
        &self.edges
    }

    /// Latest finite support end over all profiles, or `None` if any edge
    /// can stay active forever.
    pub fn quiet_after(&self) -> Option<f64> {
        let mut end = 0.0_f64;
        for e in &self.edges {
            end = end.max(e.profile.support_end()?);
        }
        Some(end)
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum DynamicsError {
    #[error("edge references unknown component {0}")]
    UnknownComponent(ComponentId),
    #[error("edge on component {0} is a self-loop")]
    SelfLoop(ComponentId),
    #[error("duplicate edge {0} -> {1}")]
    DuplicateEdge(ComponentId, ComponentId),
    #[error("weight of component {component} fell to {weight:e}; dt is too large for the profile")]
    NegativeWeight { component: ComponentId, weight: f64 },
}

/// Gated instantaneous rate through `edge` at time `t`.
///
/// Zero when the source holds a ready pulse (ready components pass no
/// current onward) or the state has collapsed; otherwise the profile rate.
pub fn effective_current(
    edge: &CurrentEdge,
    state: &SystemState,
    t: f64,
) -> Result<f64, DynamicsError> {
    let source = state
        .component(edge.from)
        .map_err(|_| DynamicsError::UnknownComponent(edge.from))?;
    state
        .component(edge.to)
        .map_err(|_| DynamicsError::UnknownComponent(edge.to))?;
    if matches!(state.phase, Phase::Collapsed(_)) || source.status == Status::Ready {
        return Ok(0.0);
    }
    Ok(edge.profile.rate(t))
}

/// Fourth-order stage quadrature of a profile over `[t, t + dt]`.
///
/// Classic four-stage weights; the two midpoint stages coincide because the
/// rates depend on time only, so the tableau reduces to one midpoint
/// evaluation.
#[inline]
pub(crate) fn stage_transfer(profile: &FlowProfile, t: f64, dt: f64) -> f64 {
    let k1 = profile.rate(t);
    let k_mid = profile.rate(t + 0.5 * dt);
    let k4 = profile.rate(t + dt);
    (dt / 6.0) * (k1 + 4.0 * k_mid + k4)
}

/// Per-step integration report.
#[derive(Debug, Clone, Default)]
pub struct StepOutcome {
    /// Weight delivered this step into each ready target of a branching
    /// edge, in edge order. Feeds the stochastic trigger.
    pub ready_inflow: Vec<(ComponentId, f64)>,
    /// Transfers truncated by source exhaustion this step.
    pub clamped: u32,
    /// Absolute change of the total weight produced by this step
    /// (rounding only; the transfers themselves are antisymmetric).
    pub drift: f64,
}

impl StepOutcome {
    fn clear(&mut self) {
        self.ready_inflow.clear();
        self.clamped = 0;
        self.drift = 0.0;
    }
}

/// Advance `state` by one step of size `dt`, moving weight along every edge
/// of `graph`.
///
/// Each edge transfers the stage quadrature of its gated rate, truncated so
/// the source cannot go negative (truncation increments
/// [`StepOutcome::clamped`]). Edges are evaluated in list order; scenario
/// files are expected to list them in causal order.
pub fn step(
    state: &mut SystemState,
    graph: &CurrentGraph,
    dt: f64,
    out: &mut StepOutcome,
) -> Result<(), DynamicsError> {
    assert!(dt > 0.0, "dt must be positive");
    step_edges(state, graph.edges(), dt, out, false)
}

/// Shared transfer kernel. `ungate_collapsed` lets the post-hit cascade
/// drive its own edges while the state is collapsed; every other caller
/// keeps the collapse gate.
pub(crate) fn step_edges(
    state: &mut SystemState,
    edges: &[CurrentEdge],
    dt: f64,
    out: &mut StepOutcome,
    ungate_collapsed: bool,
) -> Result<(), DynamicsError> {
    out.clear();
    let total_before = state.total_weight();
    let collapsed = matches!(state.phase, Phase::Collapsed(_));
    let t = state.time;

    for edge in edges {
        let from = edge.from.index();
        let to = edge.to.index();
        if from >= state.components.len() {
            return Err(DynamicsError::UnknownComponent(edge.from));
        }
        if to >= state.components.len() {
            return Err(DynamicsError::UnknownComponent(edge.to));
        }

        let gated =
            (collapsed && !ungate_collapsed) || state.components[from].status == Status::Ready;
        if gated {
            continue;
        }

        let mut amount = stage_transfer(&edge.profile, t, dt);
        if amount <= 0.0 {
            continue;
        }
        let available = state.components[from].weight;
        if amount > available {
            amount = available;
            out.clamped += 1;
        }
        if amount == 0.0 {
            continue;
        }
        state.components[from].weight -= amount;
        state.components[to].weight += amount;
        if edge.kind == EdgeKind::Branching && state.components[to].status == Status::Ready {
            out.ready_inflow.push((edge.to, amount));
        }
    }

    for c in &state.components {
        if c.weight < -1e-12 {
            return Err(DynamicsError::NegativeWeight {
                component: c.id,
                weight: c.weight,
            });
        }
    }

    out.drift = (state.total_weight() - total_before).abs();
    state.time += dt;
    Ok(())
}

/// `true` iff the total weight matches the normalization target within
/// `tol`.
pub fn check_conservation(state: &SystemState, tol: f64) -> bool {
    (state.total_weight() - state.total_weight_reference).abs() <= tol
}

/// Re-seat the conscious status on the maximum-weight member of the
/// continuous chain containing the current carrier (ties go to the lowest
/// id). Returns the handoff `(from, to)` if consciousness moved.
///
/// Only continuous edges knit a chain together; a branching edge never
/// extends it, which is what keeps the original carrier conscious while a
/// competing ready pulse gains weight.
pub fn carry_conscious_pulse(
    state: &mut SystemState,
    edges: &[CurrentEdge],
) -> Result<Option<(ComponentId, ComponentId)>, StateError> {
    let Some(current) = state.conscious_component()? else {
        return Ok(None);
    };
    let chain = continuous_chain(state.components.len(), edges, current);
    Ok(carry_with_mask(state, current, &chain)?.map(|to| (current, to)))
}

/// Hand the conscious status from `current` to the chain's maximum-weight
/// member if that is a different component. Returns the new carrier.
pub(crate) fn carry_with_mask(
    state: &mut SystemState,
    current: ComponentId,
    chain: &[bool],
) -> Result<Option<ComponentId>, StateError> {
    let Some(best) = max_weight_member(state, chain) else {
        return Ok(None);
    };
    if best == current {
        return Ok(None);
    }
    let t = state.time;
    state.component_mut(current)?.status = Status::Plain;
    state.log.push(Event::StatusChange {
        t,
        component: current,
        from: Status::Conscious,
        to: Status::Plain,
    });
    state.component_mut(best)?.status = Status::Conscious;
    state.log.push(Event::StatusChange {
        t,
        component: best,
        from: Status::Plain,
        to: Status::Conscious,
    });
    Ok(Some(best))
}

/// Membership mask of the continuous chain containing `start` (undirected
/// reachability over continuous edges).
pub(crate) fn continuous_chain(
    n_components: usize,
    edges: &[CurrentEdge],
    start: ComponentId,
) -> Vec<bool> {
    let mut mask = vec![false; n_components];
    if start.index() >= n_components {
        return mask;
    }
    mask[start.index()] = true;
    let mut stack = vec![start];
    while let Some(node) = stack.pop() {
        for e in edges {
            if e.kind != EdgeKind::Continuous {
                continue;
            }
            let next = if e.from == node {
                e.to
            } else if e.to == node {
                e.from
            } else {
                continue;
            };
            if next.index() < n_components && !mask[next.index()] {
                mask[next.index()] = true;
                stack.push(next);
            }
        }
    }
    mask
}

/// Lowest-id maximum-weight component among `mask` members.
pub(crate) fn max_weight_member(state: &SystemState, mask: &[bool]) -> Option<ComponentId> {
    let mut best: Option<(ComponentId, f64)> = None;
    for c in &state.components {
        if !mask.get(c.id.index()).copied().unwrap_or(false) {
            continue;
        }
        match best {
            Some((_, w)) if c.weight <= w => {}
            _ => best = Some((c.id, c.weight)),
        }
    }
    best.map(|(id, _)| id)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::Component;

    fn plain_component(id: u32, weight: f64) -> Component {
        Component {
            id: ComponentId(id),
            weight,
            detector_config: vec!["D".into()],
            pulse_label: None,
            status: Status::Plain,
        }
    }

    fn two_component_state(w0: f64, w1: f64) -> SystemState {
        SystemState::new(vec![plain_component(0, w0), plain_component(1, w1)])
    }

    fn rcos(t_start: f64, duration: f64, total: f64) -> FlowProfile {
        FlowProfile::RaisedCosine {
            t_start,
            duration,
            total,
        }
    }

    fn edge(from: u32, to: u32, profile: FlowProfile, kind: EdgeKind) -> CurrentEdge {
        CurrentEdge {
            from: ComponentId(from),
            to: ComponentId(to),
            profile,
            kind,
        }
    }

    /// Independent quadrature oracle: composite trapezoid on a fine grid.
    fn quadrature(profile: &FlowProfile, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut acc = 0.5 * (profile.rate(a) + profile.rate(b));
        for i in 1..n {
            acc += profile.rate(a + h * i as f64);
        }
        acc * h
    }

    #[test]
    fn raised_cosine_peak_rate_is_pi_over_four() {
        // Oracle: the half-sine density total*pi/(2*dur)*sin(pi t/dur) has
        // unit integral (checked by quadrature below); its peak for
        // total = 1, duration = 2 sits at pi/4.
        let p = rcos(0.0, 2.0, 1.0);
        assert!((p.rate(1.0) - PI / 4.0).abs() < 1e-15);
        let integral = quadrature(&p, 0.0, 2.0, 200_000);
        assert!((integral - 1.0).abs() < 1e-10, "integral = {integral}");
        assert!(
            (p.cumulative(2.0) - 1.0).abs() == 0.0,
            "closed form is exact"
        );
    }

    #[test]
    fn raised_cosine_half_integral() {
        let p = rcos(0.0, 2.0, 1.0);
        assert!((p.cumulative(1.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn ramp_cumulative_matches_quadrature() {
        let p = FlowProfile::Ramp {
            rate_max: 0.8,
            t_start: 1.0,
            t_end: 3.0,
        };
        let oracle = quadrature(&p, 0.0, 3.0, 100_000);
        assert!((p.cumulative(3.0) - oracle).abs() < 1e-9);
        assert_eq!(p.cumulative(3.0), 0.8);
    }

    #[test]
    fn effective_current_gates_ready_source() {
        let mut state = two_component_state(0.0, 1.0);
        state.components[0].status = Status::Ready;
        let e = edge(0, 1, rcos(0.0, 2.0, 1.0), EdgeKind::Continuous);
        for t in [0.0, 0.5, 1.0, 1.9] {
            assert_eq!(effective_current(&e, &state, t), Ok(0.0));
        }
    }

    #[test]
    fn effective_current_passes_ungated_constant() {
        let state = two_component_state(1.0, 0.0);
        let e = edge(
            0,
            1,
            FlowProfile::Constant { rate: 0.5 },
            EdgeKind::Continuous,
        );
        assert_eq!(effective_current(&e, &state, 0.3), Ok(0.5));
    }

    #[test]
    fn effective_current_zero_after_collapse() {
        let mut state = two_component_state(0.0, 1.0);
        state.phase = Phase::Collapsed(ComponentId(1));
        let e = edge(
            0,
            1,
            FlowProfile::Constant { rate: 0.5 },
            EdgeKind::Continuous,
        );
        assert_eq!(effective_current(&e, &state, 0.3), Ok(0.0));
    }

    #[test]
    fn effective_current_unknown_component() {
        let state = two_component_state(1.0, 0.0);
        let e = edge(
            0,
            7,
            FlowProfile::Constant { rate: 0.5 },
            EdgeKind::Continuous,
        );
        assert_eq!(
            effective_current(&e, &state, 0.0),
            Err(DynamicsError::UnknownComponent(ComponentId(7)))
        );
    }

    #[test]
    fn step_constant_transfer() {
        let mut state = two_component_state(1.0, 0.0);
        let graph = CurrentGraph::new(vec![edge(
            0,
            1,
            FlowProfile::Constant { rate: 0.5 },
            EdgeKind::Continuous,
        )])
        .unwrap();
        let mut out = StepOutcome::default();
        step(&mut state, &graph, 0.1, &mut out).unwrap();
        assert!((state.components[0].weight - 0.95).abs() < 1e-15);
        assert!((state.components[1].weight - 0.05).abs() < 1e-15);
        assert!(out.drift <= 1e-15);
        assert_eq!(out.clamped, 0);
    }

    /// Forward-Euler reference at a much finer step, used as the
    /// independent oracle for the multi-stage integrator.
    fn euler_reference(
        weights: &mut [f64],
        edges: &[CurrentEdge],
        ready: &[bool],
        t_end: f64,
        dt: f64,
    ) {
        let mut t = 0.0;
        while t < t_end - 0.5 * dt {
            for e in edges {
                if ready[e.from.index()] {
                    continue;
                }
                let mut q = e.profile.rate(t) * dt;
                if q > weights[e.from.index()] {
                    q = weights[e.from.index()];
                }
                if q > 0.0 {
                    weights[e.from.index()] -= q;
                    weights[e.to.index()] += q;
                }
            }
            t += dt;
        }
    }

    fn chain_graph() -> CurrentGraph {
        CurrentGraph::new(vec![
            edge(0, 1, rcos(0.0, 1.0, 1.0), EdgeKind::Continuous),
            edge(1, 2, rcos(1.0, 1.0, 1.0), EdgeKind::Continuous),
            edge(2, 3, rcos(2.0, 1.0, 1.0), EdgeKind::Continuous),
        ])
        .unwrap()
    }

    #[test]
    fn step_chain_passes_all_weight_to_last_component() {
        let mut state = SystemState::new(
            (0..4)
                .map(|i| plain_component(i, if i == 0 { 1.0 } else { 0.0 }))
                .collect(),
        );
        let graph = chain_graph();
        let mut out = StepOutcome::default();
        for _ in 0..3200 {
            step(&mut state, &graph, 1e-3, &mut out).unwrap();
        }
        let w: Vec<f64> = state.components.iter().map(|c| c.weight).collect();
        // Oracle: fine-step Euler reference.
        let mut euler = vec![1.0, 0.0, 0.0, 0.0];
        euler_reference(&mut euler, graph.edges(), &[false; 4], 3.2, 1e-6);
        for i in 0..4 {
            assert!(
                (w[i] - euler[i]).abs() < 1e-5,
                "component {i}: {w:?} vs {euler:?}"
            );
        }
        assert!((w[3] - 1.0).abs() < 1e-9, "final weights {w:?}");
        for drained in &w[..3] {
            assert!(drained.abs() < 1e-9);
        }
    }

    #[test]
    fn step_detector_stage_graph_pins_gated_branches_at_zero() {
        // Four components: a draining source, a ready target, and two
        // downstream stages that must stay exactly empty while the source
        // of their chain holds a ready pulse.
        let mut components = vec![
            plain_component(0, 1.0),
            plain_component(1, 0.0),
            plain_component(2, 0.0),
            plain_component(3, 0.0),
        ];
        components[1].status = Status::Ready;
        components[1].pulse_label = Some("B_0".into());
        let mut state = SystemState::new(components);
        let graph = CurrentGraph::new(vec![
            edge(0, 1, rcos(1.0, 2.0, 1.0), EdgeKind::Branching),
            edge(1, 2, rcos(0.0, 0.5, 1.0), EdgeKind::Continuous),
            edge(2, 3, rcos(0.0, 0.5, 1.0), EdgeKind::Continuous),
        ])
        .unwrap();
        let mut out = StepOutcome::default();
        for _ in 0..3000 {
            step(&mut state, &graph, 1e-3, &mut out).unwrap();
            assert_eq!(state.components[2].weight, 0.0);
            assert_eq!(state.components[3].weight, 0.0);
        }
        let w: Vec<f64> = state.components.iter().map(|c| c.weight).collect();
        // Oracle: brute-force Euler at dt = 1e-6 with the same gate.
        let mut euler = vec![1.0, 0.0, 0.0, 0.0];
        euler_reference(
            &mut euler,
            graph.edges(),
            &[false, true, false, false],
            3.0,
            1e-6,
        );
        for i in 0..4 {
            assert!((w[i] - euler[i]).abs() < 1e-5, "{w:?} vs {euler:?}");
        }
        assert_eq!(w[0], 0.0, "source drains exactly via clamping");
        assert!((w[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn step_conserves_weight_every_step() {
        let mut state = SystemState::new(
            (0..4)
                .map(|i| plain_component(i, if i == 0 { 1.0 } else { 0.0 }))
                .collect(),
        );
        let graph = chain_graph();
        let mut out = StepOutcome::default();
        for _ in 0..10_000 {
            step(&mut state, &graph, 1e-3, &mut out).unwrap();
            assert!(out.drift <= 1e-12, "per-step drift {}", out.drift);
        }
        assert!(check_conservation(&state, 1e-9));
    }

    #[test]
    fn check_conservation_flags_unnormalized_state() {
        let state = two_component_state(0.5, 0.4);
        assert!(!check_conservation(&state, 1e-9));
        let fresh = two_component_state(1.0, 0.0);
        assert!(check_conservation(&fresh, 1e-9));
    }

    #[test]
    fn step_reports_negative_weight() {
        let mut state = two_component_state(1.0, 0.0);
        state.components[0].weight = -1e-6;
        let graph = CurrentGraph::new(vec![edge(
            0,
            1,
            FlowProfile::Constant { rate: 0.5 },
            EdgeKind::Continuous,
        )])
        .unwrap();
        let mut out = StepOutcome::default();
        let err = step(&mut state, &graph, 0.1, &mut out).unwrap_err();
        assert!(matches!(err, DynamicsError::NegativeWeight { .. }));
    }

    #[test]
    fn graph_rejects_duplicates_and_self_loops() {
        let c = FlowProfile::Constant { rate: 0.1 };
        assert_eq!(
            CurrentGraph::new(vec![edge(0, 0, c.clone(), EdgeKind::Continuous)]),
            Err(DynamicsError::SelfLoop(ComponentId(0)))
        );
        assert_eq!(
            CurrentGraph::new(vec![
                edge(0, 1, c.clone(), EdgeKind::Continuous),
                edge(0, 1, c, EdgeKind::Branching),
            ]),
            Err(DynamicsError::DuplicateEdge(ComponentId(0), ComponentId(1)))
        );
    }

    #[test]
    fn monotone_source_and_sink_on_a_chain() {
        let mut state = SystemState::new(
            (0..3)
                .map(|i| plain_component(i, if i == 0 { 1.0 } else { 0.0 }))
                .collect(),
        );
        let graph = CurrentGraph::new(vec![
            edge(0, 1, rcos(0.0, 1.5, 0.7), EdgeKind::Continuous),
            edge(1, 2, rcos(0.5, 1.5, 0.7), EdgeKind::Continuous),
        ])
        .unwrap();
        let mut out = StepOutcome::default();
        let mut last_source = 1.0;
        let mut last_sink = 0.0;
        for _ in 0..2500 {
            step(&mut state, &graph, 1e-3, &mut out).unwrap();
            assert!(state.components[0].weight <= last_source + 1e-15);
            assert!(state.components[2].weight >= last_sink - 1e-15);
            last_source = state.components[0].weight;
            last_sink = state.components[2].weight;
        }
    }

    #[test]
    fn conscious_pulse_follows_max_weight_with_low_id_ties() {
        let mut state = two_component_state(0.5, 0.5);
        state.components[0].status = Status::Conscious;
        let edges = vec![edge(0, 1, rcos(0.0, 1.0, 1.0), EdgeKind::Continuous)];
        // Exact tie: stays on the lower id.
        assert_eq!(carry_conscious_pulse(&mut state, &edges), Ok(None));
        assert_eq!(state.components[0].status, Status::Conscious);
        // Strictly heavier neighbor takes over.
        state.components[1].weight = 0.6;
        state.components[0].weight = 0.4;
        let moved = carry_conscious_pulse(&mut state, &edges).unwrap();
        assert_eq!(moved, Some((ComponentId(0), ComponentId(1))));
        assert_eq!(state.components[1].status, Status::Conscious);
        assert_eq!(state.components[0].status, Status::Plain);
        assert_eq!(state.log.len(), 2);
    }

    #[test]
    fn conscious_pulse_ignores_branching_neighbors() {
        let mut state = two_component_state(0.1, 0.9);
        state.components[0].status = Status::Conscious;
        state.components[1].status = Status::Ready;
        let edges = vec![edge(0, 1, rcos(0.0, 1.0, 1.0), EdgeKind::Branching)];
        // The heavier ready branch is not part of the continuous chain, so
        // the carrier stays put until the trigger fires.
        assert_eq!(carry_conscious_pulse(&mut state, &edges), Ok(None));
        assert_eq!(state.components[0].status, Status::Conscious);
    }
}
