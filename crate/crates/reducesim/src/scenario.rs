//! Declarative scenario model, the text file format, and built-in
//! constructors for the four observer/detector cases.
//!
//! A scenario file is UTF-8, line oriented, with bracketed section headers:
//!
//! ```text
//! [scenario]
//! name = quantum
//!
//! [components]
//! 0 weight=1 config=D0 pulse=B_0 status=conscious
//! 1 weight=0 config=D1 pulse=B_1 status=ready
//!
//! [edges]
//! 0 -> 1 kind=branching profile=rcos:1,2,1
//!
//! [schedule]
//! t_i = 0
//! t_0 = 1
//! t_max = 5
//! dt = 0.001
//! ```
//!
//! `#` begins a comment, blank lines are ignored, unknown keys are errors.
//! Optional sections: `[cascade]` with `chain = id,id,...` and `[field]`
//! with `width`, `height`, `epsilon`, `pattern`. A component may carry
//! `relabel_at_ob=<label>`: at the schedule mark `t_ob` its pulse label is
//! rewritten in place (a classical relabel, not a weight transfer), which
//! is how an observer resolving a detector superposition is declared.

use std::fmt::Write as _;

use thiserror::Error;

use crate::dynamics::{CurrentEdge, CurrentGraph, EdgeKind, FlowProfile};
use crate::pulse_field::{FieldError, PulseField};
use crate::reduction::{classify_emergence, EmergenceContext};
use crate::state::{Component, ComponentId, Event, StateError, Status, SystemState};

pub const DEFAULT_T_MAX: f64 = 5.0;
pub const DEFAULT_DT: f64 = 1e-3;

/// Schedule marks of a run: interaction times and integration parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleMarks {
    /// Observer/detector interaction start.
    pub t_i: f64,
    /// Particle interaction time, if the scenario has one.
    pub t_0: Option<f64>,
    /// Detector interaction complete, if marked.
    pub t_f: Option<f64>,
    /// Observer resolves the superposition, if marked.
    pub t_ob: Option<f64>,
    pub t_max: f64,
    pub dt: f64,
}

impl Default for ScheduleMarks {
    fn default() -> Self {
        Self {
            t_i: 0.0,
            t_0: None,
            t_f: None,
            t_ob: None,
            t_max: DEFAULT_T_MAX,
            dt: DEFAULT_DT,
        }
    }
}

/// Declaration of one component.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentDecl {
    pub id: ComponentId,
    pub weight: f64,
    pub detector_config: Vec<String>,
    pub pulse: Option<String>,
    pub status: Status,
    /// Pulse label this component takes at `t_ob`.
    pub relabel_at_ob: Option<String>,
}

/// Declaration of one current edge.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeDecl {
    pub from: ComponentId,
    pub to: ComponentId,
    pub kind: EdgeKind,
    pub profile: FlowProfile,
}

/// Optional field declaration for scene rendering.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldDecl {
    pub width: usize,
    pub height: usize,
    pub epsilon: f64,
    pub pattern: FieldPattern,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FieldPattern {
    HueRamp,
    Uniform(f64),
}

impl FieldDecl {
    pub fn build(&self) -> Result<PulseField, FieldError> {
        match self.pattern {
            FieldPattern::HueRamp => {
                let step = 2.0 / self.width as f64;
                PulseField::from_fn(self.width, self.height, self.epsilon, |x, _| {
                    vec![x as f64 * step]
                })
            }
            FieldPattern::Uniform(v) => {
                PulseField::uniform(self.width, self.height, v, self.epsilon)
            }
        }
    }
}

/// Cascade chain plus the per-leg transfer profiles.
pub type CascadeLegs = (Vec<ComponentId>, Vec<FlowProfile>);

/// A validated, immutable description of one run setup.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub name: String,
    /// Allow arbitrary positive weight sums; the loader rescales.
    pub normalize: bool,
    pub components: Vec<ComponentDecl>,
    pub edges: Vec<EdgeDecl>,
    pub cascade_chain: Option<Vec<ComponentId>>,
    pub schedule: ScheduleMarks,
    pub field: Option<FieldDecl>,
}

#[derive(Debug, Error, PartialEq)]
pub enum ScenarioError {
    #[error("line {line}, column {col}: expected {expected}")]
    Syntax {
        line: usize,
        col: usize,
        expected: String,
    },
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("invalid branch weights: w0 + w1 must equal 1, got {0}")]
    InvalidWeights(f64),
}

fn invalid(msg: impl Into<String>) -> ScenarioError {
    ScenarioError::Validation(msg.into())
}

const READY_NEEDS_PULSE: &str = "rule-2 target must carry a brain pulse";
const WEIGHT_SUM: &str = "weights must sum to 1";

impl ScenarioSpec {
    /// Enforce every structural invariant. Called by the parser and the
    /// builders; run it again after mutating a spec by hand.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.name.is_empty() {
            return Err(invalid("scenario must define a name"));
        }
        if self.components.is_empty() {
            return Err(invalid("scenario must declare at least one component"));
        }
        for (i, c) in self.components.iter().enumerate() {
            if c.id.index() != i {
                return Err(invalid(format!(
                    "component ids must be dense and in order (found {} at position {i})",
                    c.id
                )));
            }
            if !c.weight.is_finite() || c.weight < 0.0 {
                return Err(invalid(format!(
                    "component {} weight must be finite and nonnegative",
                    c.id
                )));
            }
            for label in c
                .detector_config
                .iter()
                .chain(&c.pulse)
                .chain(&c.relabel_at_ob)
            {
                if label.is_empty()
                    || !label
                        .chars()
                        .all(|ch| ch.is_ascii_alphanumeric() || ch == '_')
                {
                    return Err(invalid(format!(
                        "component {} label {label:?} must be alphanumeric or underscore",
                        c.id
                    )));
                }
            }
            if c.pulse.as_deref() == Some("none") {
                return Err(invalid("pulse label 'none' is reserved"));
            }
            if c.status == Status::Ready && c.pulse.is_none() {
                return Err(invalid(READY_NEEDS_PULSE));
            }
            if c.relabel_at_ob.is_some() && self.schedule.t_ob.is_none() {
                return Err(invalid("relabel_at_ob requires the schedule mark t_ob"));
            }
        }

        let sum: f64 = self.components.iter().map(|c| c.weight).sum();
        if sum <= 0.0 {
            return Err(invalid("total weight must be positive"));
        }
        if !self.normalize && (sum - 1.0).abs() > 1e-9 {
            return Err(invalid(WEIGHT_SUM));
        }
        let conscious = self
            .components
            .iter()
            .filter(|c| c.status == Status::Conscious)
            .count();
        if conscious > 1 {
            return Err(invalid("at most one component may start conscious"));
        }

        let n = self.components.len();
        for e in &self.edges {
            if e.from.index() >= n || e.to.index() >= n {
                return Err(invalid(format!(
                    "edge {} -> {} references an undeclared component",
                    e.from, e.to
                )));
            }
            self.validate_profile(&e.profile)?;
            let target = &self.components[e.to.index()];
            match e.kind {
                EdgeKind::Branching => {
                    // Emergence classification decides what the target must
                    // have been declared as.
                    let expected = classify_emergence(&EmergenceContext {
                        new_component: e.to,
                        creating_edge_kind: EdgeKind::Branching,
                        has_brain_pulse: target.pulse.is_some(),
                    });
                    if target.status == Status::Ready && expected != Status::Ready {
                        return Err(invalid(READY_NEEDS_PULSE));
                    }
                    if expected == Status::Ready && target.status != Status::Ready {
                        return Err(invalid(format!(
                            "branching edge target {} carries a brain pulse and must be declared ready",
                            e.to
                        )));
                    }
                }
                EdgeKind::Continuous => {
                    if target.status == Status::Ready {
                        return Err(invalid(format!(
                            "ready component {} must not receive continuous current",
                            e.to
                        )));
                    }
                }
            }
        }
        for c in &self.components {
            if c.status == Status::Ready
                && !self
                    .edges
                    .iter()
                    .any(|e| e.kind == EdgeKind::Branching && e.to == c.id)
            {
                return Err(invalid(format!(
                    "ready component {} must be the target of a branching edge",
                    c.id
                )));
            }
        }
        // Self-loop / duplicate detection.
        self.graph()?;

        let s = &self.schedule;
        for (label, v) in [
            ("t_i", Some(s.t_i)),
            ("t_0", s.t_0),
            ("t_f", s.t_f),
            ("t_ob", s.t_ob),
        ] {
            if let Some(v) = v {
                if !v.is_finite() || v < 0.0 {
                    return Err(invalid(format!("{label} must be finite and nonnegative")));
                }
            }
        }
        if !(s.dt > 0.0 && s.dt <= s.t_max) {
            return Err(invalid("schedule must satisfy 0 < dt <= t_max"));
        }
        if let Some(t_0) = s.t_0 {
            if s.t_i > t_0 {
                return Err(invalid("t_i must not exceed t_0"));
            }
        }
        if let (Some(t_f), Some(t_ob)) = (s.t_f, s.t_ob) {
            if t_f > t_ob {
                return Err(invalid("t_f must not exceed t_ob"));
            }
        }

        if self.cascade_chain.is_some() {
            self.cascade_legs()?;
        }

        if let Some(f) = &self.field {
            if f.width == 0 || f.height == 0 {
                return Err(invalid("field dimensions must be positive"));
            }
            if !(f.epsilon.is_finite() && f.epsilon > 0.0) {
                return Err(invalid("field continuity bound must be positive"));
            }
        }
        Ok(())
    }

    fn validate_profile(&self, p: &FlowProfile) -> Result<(), ScenarioError> {
        let ok = match *p {
            FlowProfile::Constant { rate } => rate.is_finite() && rate >= 0.0,
            FlowProfile::Ramp {
                rate_max,
                t_start,
                t_end,
            } => rate_max.is_finite() && rate_max >= 0.0 && t_start.is_finite() && t_end > t_start,
            FlowProfile::RaisedCosine {
                t_start,
                duration,
                total,
            } => t_start.is_finite() && duration > 0.0 && total.is_finite() && total >= 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(invalid(
                "profile parameters must be finite, nonnegative, and ordered",
            ))
        }
    }

    /// Initial [`SystemState`] with weights rescaled to the reference sum 1.
    pub fn initial_state(&self) -> SystemState {
        let sum: f64 = self.components.iter().map(|c| c.weight).sum();
        SystemState::new(
            self.components
                .iter()
                .map(|c| Component {
                    id: c.id,
                    weight: c.weight / sum,
                    detector_config: c.detector_config.clone(),
                    pulse_label: c.pulse.clone(),
                    status: c.status,
                })
                .collect(),
        )
    }

    pub fn graph(&self) -> Result<CurrentGraph, ScenarioError> {
        CurrentGraph::new(
            self.edges
                .iter()
                .map(|e| CurrentEdge {
                    from: e.from,
                    to: e.to,
                    profile: e.profile.clone(),
                    kind: e.kind,
                })
                .collect(),
        )
        .map_err(|e| invalid(e.to_string()))
    }

    /// The declared cascade chain together with the leg profiles pulled
    /// from the matching continuous edges.
    pub fn cascade_legs(&self) -> Result<Option<CascadeLegs>, ScenarioError> {
        let Some(chain) = &self.cascade_chain else {
            return Ok(None);
        };
        if chain.is_empty() {
            return Err(invalid("cascade chain must not be empty"));
        }
        let n = self.components.len();
        if chain.iter().any(|id| id.index() >= n) {
            return Err(invalid("cascade chain references an undeclared component"));
        }
        if self.components[chain[0].index()].status != Status::Ready {
            return Err(invalid("cascade chain must start at a ready component"));
        }
        let mut profiles = Vec::new();
        for pair in chain.windows(2) {
            let edge = self
                .edges
                .iter()
                .find(|e| e.kind == EdgeKind::Continuous && e.from == pair[0] && e.to == pair[1])
                .ok_or_else(|| {
                    invalid(format!(
                        "cascade chain {} -> {} must be linked by a declared continuous edge",
                        pair[0], pair[1]
                    ))
                })?;
            if edge.profile.support_end().is_none() {
                return Err(invalid("cascade profiles must have finite support"));
            }
            profiles.push(edge.profile.clone());
        }
        Ok(Some((chain.clone(), profiles)))
    }

    /// Whether any component declares a pulse relabel at `t_ob`.
    pub fn has_observation_relabel(&self) -> bool {
        self.components.iter().any(|c| c.relabel_at_ob.is_some())
    }

    /// Apply the classical relabel at `t_ob`: rewrite the declared pulse
    /// labels in place (weights untouched), and if nothing is conscious
    /// yet, seat the conscious pulse on the heaviest relabeled component
    /// (ties to the lowest id). Returns `true` if anything changed.
    pub fn apply_observation_relabel(&self, state: &mut SystemState) -> Result<bool, StateError> {
        let targets: Vec<&ComponentDecl> = self
            .components
            .iter()
            .filter(|c| c.relabel_at_ob.is_some())
            .collect();
        if targets.is_empty() {
            return Ok(false);
        }
        for decl in &targets {
            state.component_mut(decl.id)?.pulse_label = decl.relabel_at_ob.clone();
        }
        if state.conscious_component()?.is_none() {
            let mut best: Option<(ComponentId, f64)> = None;
            for decl in &targets {
                let w = state.component(decl.id)?.weight;
                match best {
                    Some((_, bw)) if w <= bw => {}
                    _ => best = Some((decl.id, w)),
                }
            }
            if let Some((id, _)) = best {
                let t = state.time;
                state.component_mut(id)?.status = Status::Conscious;
                state.log.push(Event::StatusChange {
                    t,
                    component: id,
                    from: Status::Plain,
                    to: Status::Conscious,
                });
            }
        }
        Ok(true)
    }

    /// Canonical text form; [`parse_scenario`] of the output reproduces
    /// this scenario exactly.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        s.push_str("[scenario]\n");
        let _ = writeln!(s, "name = {}", self.name);
        if self.normalize {
            s.push_str("normalize = true\n");
        }
        s.push_str("\n[components]\n");
        for c in &self.components {
            let _ = write!(
                s,
                "{} weight={} config={} pulse={} status={}",
                c.id,
                c.weight,
                c.detector_config.join(","),
                c.pulse.as_deref().unwrap_or("none"),
                c.status
            );
            if let Some(label) = &c.relabel_at_ob {
                let _ = write!(s, " relabel_at_ob={label}");
            }
            s.push('\n');
        }
        s.push_str("\n[edges]\n");
        for e in &self.edges {
            let kind = match e.kind {
                EdgeKind::Continuous => "continuous",
                EdgeKind::Branching => "branching",
            };
            let profile = match &e.profile {
                FlowProfile::Constant { rate } => format!("constant:{rate}"),
                FlowProfile::Ramp {
                    rate_max,
                    t_start,
                    t_end,
                } => format!("ramp:{rate_max},{t_start},{t_end}"),
                FlowProfile::RaisedCosine {
                    t_start,
                    duration,
                    total,
                } => format!("rcos:{t_start},{duration},{total}"),
            };
            let _ = writeln!(s, "{} -> {} kind={kind} profile={profile}", e.from, e.to);
        }
        if let Some(chain) = &self.cascade_chain {
            s.push_str("\n[cascade]\n");
            let ids: Vec<String> = chain.iter().map(|id| id.to_string()).collect();
            let _ = writeln!(s, "chain = {}", ids.join(","));
        }
        s.push_str("\n[schedule]\n");
        let _ = writeln!(s, "t_i = {}", self.schedule.t_i);
        if let Some(t_0) = self.schedule.t_0 {
            let _ = writeln!(s, "t_0 = {t_0}");
        }
        if let Some(t_f) = self.schedule.t_f {
            let _ = writeln!(s, "t_f = {t_f}");
        }
        if let Some(t_ob) = self.schedule.t_ob {
            let _ = writeln!(s, "t_ob = {t_ob}");
        }
        let _ = writeln!(s, "t_max = {}", self.schedule.t_max);
        let _ = writeln!(s, "dt = {}", self.schedule.dt);
        if let Some(f) = &self.field {
            s.push_str("\n[field]\n");
            let _ = writeln!(s, "width = {}", f.width);
            let _ = writeln!(s, "height = {}", f.height);
            let _ = writeln!(s, "epsilon = {}", f.epsilon);
            match f.pattern {
                FieldPattern::HueRamp => s.push_str("pattern = hue_ramp\n"),
                FieldPattern::Uniform(v) => {
                    let _ = writeln!(s, "pattern = uniform:{v}");
                }
            }
        }
        s
    }
}

// ---------------------------------------------------------------------------
// Built-in scenarios
// ---------------------------------------------------------------------------

fn decl(
    id: u32,
    weight: f64,
    config: &[&str],
    pulse: Option<&str>,
    status: Status,
) -> ComponentDecl {
    ComponentDecl {
        id: ComponentId(id),
        weight,
        detector_config: config.iter().map(|s| s.to_string()).collect(),
        pulse: pulse.map(str::to_string),
        status,
        relabel_at_ob: None,
    }
}

fn rcos(t_start: f64, duration: f64, total: f64) -> FlowProfile {
    FlowProfile::RaisedCosine {
        t_start,
        duration,
        total,
    }
}

fn edge(from: u32, to: u32, kind: EdgeKind, profile: FlowProfile) -> EdgeDecl {
    EdgeDecl {
        from: ComponentId(from),
        to: ComponentId(to),
        kind,
        profile,
    }
}

/// Purely classical observation: a four-component continuous chain with
/// sequential transfers and no branching, so no run can ever produce a hit.
/// Consciousness drifts down the chain with the weight.
pub fn build_classical() -> ScenarioSpec {
    let spec = ScenarioSpec {
        name: "classical".into(),
        normalize: false,
        components: vec![
            decl(0, 1.0, &["D"], Some("X"), Status::Conscious),
            decl(1, 0.0, &["D"], Some("X1"), Status::Plain),
            decl(2, 0.0, &["D"], Some("X2"), Status::Plain),
            decl(3, 0.0, &["D"], Some("B"), Status::Plain),
        ],
        edges: vec![
            edge(0, 1, EdgeKind::Continuous, rcos(0.0, 1.0, 1.0)),
            edge(1, 2, EdgeKind::Continuous, rcos(1.0, 1.0, 1.0)),
            edge(2, 3, EdgeKind::Continuous, rcos(2.0, 1.0, 1.0)),
        ],
        cascade_chain: None,
        schedule: ScheduleMarks::default(),
        field: None,
    };
    debug_assert!(spec.validate().is_ok());
    spec
}

/// Quantum observation: the conscious component feeds a single ready brain
/// pulse through one branching edge. `transfer_total` is the weight moved
/// over the profile, which is exactly the per-run hit probability.
pub fn build_quantum(transfer_total: f64) -> ScenarioSpec {
    assert!(
        transfer_total > 0.0 && transfer_total <= 1.0,
        "transfer_total must lie in (0, 1]"
    );
    let spec = ScenarioSpec {
        name: "quantum".into(),
        normalize: false,
        components: vec![
            decl(0, 1.0, &["D0"], Some("B_0"), Status::Conscious),
            decl(1, 0.0, &["D1"], Some("B_1"), Status::Ready),
        ],
        edges: vec![edge(
            0,
            1,
            EdgeKind::Branching,
            rcos(1.0, 2.0, transfer_total),
        )],
        cascade_chain: None,
        schedule: ScheduleMarks {
            t_0: Some(1.0),
            ..ScheduleMarks::default()
        },
        field: None,
    };
    debug_assert!(spec.validate().is_ok());
    spec
}

/// Constant-current variant of the quantum scenario, flowing from `t = 0`.
/// With rate `J` from unit weight, hit times are uniform on `[0, 1/J]`.
pub fn build_quantum_constant(rate: f64) -> ScenarioSpec {
    assert!(rate > 0.0 && rate.is_finite(), "rate must be positive");
    let mut spec = build_quantum(1.0);
    spec.name = "quantum_constant".into();
    spec.edges[0].profile = FlowProfile::Constant { rate };
    spec.schedule.t_0 = Some(0.0);
    debug_assert!(spec.validate().is_ok());
    spec
}

/// Quantum observation with the detector split into three stages. All
/// current flows into the first ready stage (the later stages are gated),
/// so the trigger selects it with certainty; the post-hit cascade then
/// walks the capture through the remaining stages.
pub fn build_quantum_ddd() -> ScenarioSpec {
    let spec = ScenarioSpec {
        name: "quantum_ddd".into(),
        normalize: false,
        components: vec![
            decl(0, 1.0, &["D0", "D0", "D0"], Some("B_0"), Status::Conscious),
            decl(1, 0.0, &["D1", "D0", "D0"], Some("B_0"), Status::Ready),
            decl(2, 0.0, &["D1", "D1", "D0"], Some("B_0"), Status::Plain),
            decl(3, 0.0, &["D1", "D1", "D1"], Some("B_1"), Status::Plain),
        ],
        edges: vec![
            edge(0, 1, EdgeKind::Branching, rcos(1.0, 2.0, 1.0)),
            // Cascade legs: timing is relative to the hit, so their
            // profiles are re-based at run time.
            edge(1, 2, EdgeKind::Continuous, rcos(0.0, 0.5, 1.0)),
            edge(2, 3, EdgeKind::Continuous, rcos(0.0, 0.5, 1.0)),
        ],
        cascade_chain: Some(vec![ComponentId(1), ComponentId(2), ComponentId(3)]),
        schedule: ScheduleMarks {
            t_0: Some(1.0),
            ..ScheduleMarks::default()
        },
        field: None,
    };
    debug_assert!(spec.validate().is_ok());
    spec
}

/// Terminal observation: the detector superposition is already settled
/// when the observer looks. The two rows hold weights `w0` and `w1` under
/// the not-yet-entangled pulse `X`; at `t_ob` the pulse classically
/// relabels to `B` and two branching edges feed the competing ready pulses
/// `B_0` and `B_1` with exactly `w0` and `w1`.
pub fn build_terminal(w0: f64, w1: f64) -> Result<ScenarioSpec, ScenarioError> {
    let sum = w0 + w1;
    if (sum - 1.0).abs() > 1e-12 {
        return Err(ScenarioError::InvalidWeights(sum));
    }
    if !(w0 > 0.0 && w1 > 0.0) {
        return Err(invalid("branch weights must be positive"));
    }
    let mut c0 = decl(0, w0, &["D0"], Some("X"), Status::Plain);
    c0.relabel_at_ob = Some("B".into());
    let mut c1 = decl(1, w1, &["D1"], Some("X"), Status::Plain);
    c1.relabel_at_ob = Some("B".into());
    let spec = ScenarioSpec {
        name: "terminal".into(),
        normalize: false,
        components: vec![
            c0,
            c1,
            decl(2, 0.0, &["D0"], Some("B_0"), Status::Ready),
            decl(3, 0.0, &["D1"], Some("B_1"), Status::Ready),
        ],
        edges: vec![
            edge(0, 2, EdgeKind::Branching, rcos(1.0, 2.0, w0)),
            edge(1, 3, EdgeKind::Branching, rcos(1.0, 2.0, w1)),
        ],
        cascade_chain: None,
        schedule: ScheduleMarks {
            t_f: Some(0.0),
            t_ob: Some(1.0),
            ..ScheduleMarks::default()
        },
        field: None,
    };
    spec.validate()?;
    Ok(spec)
}

/// Resolve a CLI builtin name: `classical`, `quantum`, `quantum_ddd`, or
/// `terminal:w0,w1`.
pub fn builtin(name: &str) -> Result<ScenarioSpec, ScenarioError> {
    if let Some(args) = name.strip_prefix("terminal:") {
        let parts: Vec<&str> = args.split(',').collect();
        if parts.len() != 2 {
            return Err(invalid(format!(
                "builtin terminal takes two weights, got {name:?}"
            )));
        }
        let w0: f64 = parts[0]
            .trim()
            .parse()
            .map_err(|_| invalid(format!("bad weight {:?}", parts[0])))?;
        let w1: f64 = parts[1]
            .trim()
            .parse()
            .map_err(|_| invalid(format!("bad weight {:?}", parts[1])))?;
        return build_terminal(w0, w1);
    }
    match name {
        "classical" => Ok(build_classical()),
        "quantum" => Ok(build_quantum(1.0)),
        "quantum_ddd" => Ok(build_quantum_ddd()),
        _ => Err(invalid(format!(
            "unknown builtin scenario {name:?} (expected classical, quantum, quantum_ddd, or terminal:w0,w1)"
        ))),
    }
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
enum Section {
    Scenario,
    Components,
    Edges,
    Cascade,
    Schedule,
    Field,
}

#[derive(Default)]
struct Assembler {
    section: Option<Section>,
    name: Option<String>,
    normalize: bool,
    components: Vec<ComponentDecl>,
    edges: Vec<EdgeDecl>,
    cascade_chain: Option<Vec<ComponentId>>,
    t_i: Option<f64>,
    t_0: Option<f64>,
    t_f: Option<f64>,
    t_ob: Option<f64>,
    t_max: Option<f64>,
    dt: Option<f64>,
    field_width: Option<usize>,
    field_height: Option<usize>,
    field_epsilon: Option<f64>,
    field_pattern: Option<FieldPattern>,
}

fn syntax(line: usize, col: usize, expected: impl Into<String>) -> ScenarioError {
    ScenarioError::Syntax {
        line,
        col,
        expected: expected.into(),
    }
}

/// Whitespace-separated tokens with their 1-based starting columns.
fn tokens_with_cols(line: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, ch) in line.char_indices() {
        if ch.is_whitespace() {
            if let Some(s) = start.take() {
                out.push((s + 1, &line[s..i]));
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push((s + 1, &line[s..]));
    }
    out
}

fn parse_f64(line: usize, col: usize, text: &str) -> Result<f64, ScenarioError> {
    text.parse()
        .map_err(|_| syntax(line, col, format!("a number, got {text:?}")))
}

fn parse_id(line: usize, col: usize, text: &str) -> Result<ComponentId, ScenarioError> {
    text.parse::<u32>()
        .map(ComponentId)
        .map_err(|_| syntax(line, col, format!("a component id, got {text:?}")))
}

fn parse_profile(line: usize, col: usize, text: &str) -> Result<FlowProfile, ScenarioError> {
    let expected = "profile constant:J, ramp:Jmax,t0,t1, or rcos:t0,dur,total";
    let (kind, args) = text
        .split_once(':')
        .ok_or_else(|| syntax(line, col, expected))?;
    let nums: Result<Vec<f64>, _> = args.split(',').map(|a| parse_f64(line, col, a)).collect();
    let nums = nums?;
    match (kind, nums.as_slice()) {
        ("constant", [rate]) => Ok(FlowProfile::Constant { rate: *rate }),
        ("ramp", [rate_max, t_start, t_end]) => Ok(FlowProfile::Ramp {
            rate_max: *rate_max,
            t_start: *t_start,
            t_end: *t_end,
        }),
        ("rcos", [t_start, duration, total]) => Ok(FlowProfile::RaisedCosine {
            t_start: *t_start,
            duration: *duration,
            total: *total,
        }),
        _ => Err(syntax(line, col, expected)),
    }
}

fn parse_status(line: usize, col: usize, text: &str) -> Result<Status, ScenarioError> {
    match text {
        "plain" => Ok(Status::Plain),
        "ready" => Ok(Status::Ready),
        "conscious" => Ok(Status::Conscious),
        _ => Err(syntax(
            line,
            col,
            format!("status plain, ready, or conscious, got {text:?}"),
        )),
    }
}

impl Assembler {
    fn header(&mut self, line: usize, content: &str) -> Result<(), ScenarioError> {
        self.section =
            Some(match content {
                "[scenario]" => Section::Scenario,
                "[components]" => Section::Components,
                "[edges]" => Section::Edges,
                "[cascade]" => Section::Cascade,
                "[schedule]" => Section::Schedule,
                "[field]" => Section::Field,
                _ => return Err(syntax(
                    line,
                    1,
                    "section [scenario], [components], [edges], [cascade], [schedule], or [field]",
                )),
            });
        Ok(())
    }

    fn key_value(line: usize, content: &str) -> Result<(&str, &str, usize), ScenarioError> {
        let eq = content
            .find('=')
            .ok_or_else(|| syntax(line, 1, "a key = value line"))?;
        let key = content[..eq].trim();
        let value = content[eq + 1..].trim();
        if key.is_empty() || value.is_empty() {
            return Err(syntax(line, eq + 1, "a key = value line"));
        }
        Ok((key, value, eq + 2))
    }

    fn scenario_line(&mut self, line: usize, content: &str) -> Result<(), ScenarioError> {
        let (key, value, vcol) = Self::key_value(line, content)?;
        match key {
            "name" => self.name = Some(value.to_string()),
            "normalize" => {
                self.normalize = match value {
                    "true" => true,
                    "false" => false,
                    _ => return Err(syntax(line, vcol, "true or false")),
                }
            }
            _ => return Err(syntax(line, 1, "key name or normalize")),
        }
        Ok(())
    }

    fn component_line(&mut self, line: usize, content: &str) -> Result<(), ScenarioError> {
        let toks = tokens_with_cols(content);
        let (id_col, id_tok) = toks[0];
        let id = parse_id(line, id_col, id_tok)?;
        let mut weight = None;
        let mut config = None;
        let mut pulse = None;
        let mut status = None;
        let mut relabel = None;
        for &(col, tok) in &toks[1..] {
            let (key, value) = tok
                .split_once('=')
                .ok_or_else(|| syntax(line, col, "key=value"))?;
            match key {
                "weight" => weight = Some(parse_f64(line, col, value)?),
                "config" => config = Some(value.split(',').map(str::to_string).collect::<Vec<_>>()),
                "pulse" => {
                    pulse = Some(if value == "none" {
                        None
                    } else {
                        Some(value.to_string())
                    })
                }
                "status" => status = Some(parse_status(line, col, value)?),
                "relabel_at_ob" => relabel = Some(value.to_string()),
                _ => {
                    return Err(syntax(
                        line,
                        col,
                        "key weight=, config=, pulse=, status=, or relabel_at_ob=",
                    ))
                }
            }
        }
        let missing = |what: &str| syntax(line, 1, format!("component key {what}="));
        self.components.push(ComponentDecl {
            id,
            weight: weight.ok_or_else(|| missing("weight"))?,
            detector_config: config.ok_or_else(|| missing("config"))?,
            pulse: pulse.ok_or_else(|| missing("pulse"))?,
            status: status.ok_or_else(|| missing("status"))?,
            relabel_at_ob: relabel,
        });
        Ok(())
    }

    fn edge_line(&mut self, line: usize, content: &str) -> Result<(), ScenarioError> {
        let toks = tokens_with_cols(content);
        if toks.len() < 3 || toks[1].1 != "->" {
            let col = toks.get(1).map_or(1, |t| t.0);
            return Err(syntax(line, col, "an edge line <from> -> <to> ..."));
        }
        let from = parse_id(line, toks[0].0, toks[0].1)?;
        let to = parse_id(line, toks[2].0, toks[2].1)?;
        let mut kind = None;
        let mut profile = None;
        for &(col, tok) in &toks[3..] {
            let (key, value) = tok
                .split_once('=')
                .ok_or_else(|| syntax(line, col, "key=value"))?;
            match key {
                "kind" => {
                    kind = Some(match value {
                        "continuous" => EdgeKind::Continuous,
                        "branching" => EdgeKind::Branching,
                        _ => return Err(syntax(line, col, "kind continuous or branching")),
                    })
                }
                "profile" => profile = Some(parse_profile(line, col, value)?),
                _ => return Err(syntax(line, col, "key kind= or profile=")),
            }
        }
        self.edges.push(EdgeDecl {
            from,
            to,
            kind: kind.ok_or_else(|| syntax(line, 1, "edge key kind="))?,
            profile: profile.ok_or_else(|| syntax(line, 1, "edge key profile="))?,
        });
        Ok(())
    }

    fn cascade_line(&mut self, line: usize, content: &str) -> Result<(), ScenarioError> {
        let (key, value, vcol) = Self::key_value(line, content)?;
        if key != "chain" {
            return Err(syntax(line, 1, "key chain"));
        }
        let ids: Result<Vec<ComponentId>, _> = value
            .split(',')
            .map(|part| parse_id(line, vcol, part.trim()))
            .collect();
        self.cascade_chain = Some(ids?);
        Ok(())
    }

    fn schedule_line(&mut self, line: usize, content: &str) -> Result<(), ScenarioError> {
        let (key, value, vcol) = Self::key_value(line, content)?;
        let v = parse_f64(line, vcol, value)?;
        let slot = match key {
            "t_i" => &mut self.t_i,
            "t_0" => &mut self.t_0,
            "t_f" => &mut self.t_f,
            "t_ob" => &mut self.t_ob,
            "t_max" => &mut self.t_max,
            "dt" => &mut self.dt,
            _ => return Err(syntax(line, 1, "key t_i, t_0, t_f, t_ob, t_max, or dt")),
        };
        if slot.is_some() {
            return Err(syntax(line, 1, format!("{key} to appear once")));
        }
        *slot = Some(v);
        Ok(())
    }

    fn field_line(&mut self, line: usize, content: &str) -> Result<(), ScenarioError> {
        let (key, value, vcol) = Self::key_value(line, content)?;
        match key {
            "width" | "height" => {
                let v: usize = value
                    .parse()
                    .map_err(|_| syntax(line, vcol, "a positive integer"))?;
                if key == "width" {
                    self.field_width = Some(v);
                } else {
                    self.field_height = Some(v);
                }
            }
            "epsilon" => self.field_epsilon = Some(parse_f64(line, vcol, value)?),
            "pattern" => {
                self.field_pattern = Some(if value == "hue_ramp" {
                    FieldPattern::HueRamp
                } else if let Some(arg) = value.strip_prefix("uniform:") {
                    FieldPattern::Uniform(parse_f64(line, vcol, arg)?)
                } else {
                    return Err(syntax(line, vcol, "pattern hue_ramp or uniform:<value>"));
                });
            }
            _ => return Err(syntax(line, 1, "key width, height, epsilon, or pattern")),
        }
        Ok(())
    }

    fn line(&mut self, line: usize, content: &str) -> Result<(), ScenarioError> {
        let trimmed = content.trim();
        if trimmed.starts_with('[') {
            return self.header(line, trimmed);
        }
        match self.section {
            None => Err(syntax(line, 1, "a section header before content")),
            Some(Section::Scenario) => self.scenario_line(line, trimmed),
            Some(Section::Components) => self.component_line(line, trimmed),
            Some(Section::Edges) => self.edge_line(line, trimmed),
            Some(Section::Cascade) => self.cascade_line(line, trimmed),
            Some(Section::Schedule) => self.schedule_line(line, trimmed),
            Some(Section::Field) => self.field_line(line, trimmed),
        }
    }

    fn finish(self) -> Result<ScenarioSpec, ScenarioError> {
        let name = self
            .name
            .ok_or_else(|| invalid("scenario must define a name"))?;
        let schedule = ScheduleMarks {
            t_i: self.t_i.unwrap_or(0.0),
            t_0: self.t_0,
            t_f: self.t_f,
            t_ob: self.t_ob,
            t_max: self
                .t_max
                .ok_or_else(|| invalid("schedule must define t_max"))?,
            dt: self.dt.ok_or_else(|| invalid("schedule must define dt"))?,
        };
        let field = match (
            self.field_width,
            self.field_height,
            self.field_epsilon,
            self.field_pattern,
        ) {
            (None, None, None, None) => None,
            (Some(width), Some(height), Some(epsilon), Some(pattern)) => Some(FieldDecl {
                width,
                height,
                epsilon,
                pattern,
            }),
            _ => {
                return Err(invalid(
                    "field section must define width, height, epsilon, and pattern",
                ))
            }
        };
        Ok(ScenarioSpec {
            name,
            normalize: self.normalize,
            components: self.components,
            edges: self.edges,
            cascade_chain: self.cascade_chain,
            schedule,
            field,
        })
    }
}

/// Parse and validate a scenario file.
pub fn parse_scenario(text: &str) -> Result<ScenarioSpec, ScenarioError> {
    let mut asm = Assembler::default();
    for (idx, raw) in text.lines().enumerate() {
        let content = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        if content.trim().is_empty() {
            continue;
        }
        asm.line(idx + 1, content)?;
    }
    let spec = asm.finish()?;
    spec.validate()?;
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn builtins() -> Vec<ScenarioSpec> {
        vec![
            build_classical(),
            build_quantum(1.0),
            build_quantum_ddd(),
            build_terminal(0.3, 0.7).unwrap(),
        ]
    }

    #[test]
    fn builtins_validate_and_round_trip() {
        for spec in builtins() {
            spec.validate().unwrap();
            let text = spec.to_text();
            let parsed = parse_scenario(&text)
                .unwrap_or_else(|e| panic!("round-trip of {} failed: {e}\n{text}", spec.name));
            assert_eq!(parsed, spec, "round-trip of {}", spec.name);
        }
    }

    #[test]
    fn quantum_constant_round_trips() {
        let spec = build_quantum_constant(0.5);
        let parsed = parse_scenario(&spec.to_text()).unwrap();
        assert_eq!(parsed, spec);
    }

    #[test]
    fn field_section_round_trips() {
        let mut spec = build_classical();
        spec.field = Some(FieldDecl {
            width: 64,
            height: 16,
            epsilon: 2.0 / 64.0,
            pattern: FieldPattern::HueRamp,
        });
        let parsed = parse_scenario(&spec.to_text()).unwrap();
        assert_eq!(parsed, spec);
        assert!(parsed
            .field
            .unwrap()
            .build()
            .unwrap()
            .continuity_check()
            .is_empty());
    }

    #[test]
    fn unnormalized_weights_are_rejected() {
        let mut spec = build_terminal(0.5, 0.5).unwrap();
        spec.components[0].weight = 0.5;
        spec.components[1].weight = 0.4;
        let err = parse_scenario(&spec.to_text()).unwrap_err();
        assert_eq!(
            err,
            ScenarioError::Validation("weights must sum to 1".into())
        );
    }

    #[test]
    fn normalize_flag_allows_rescaling() {
        let mut spec = build_terminal(0.5, 0.5).unwrap();
        spec.components[0].weight = 1.0;
        spec.components[1].weight = 0.8;
        spec.normalize = true;
        // Ready targets keep weight 0; rows rescale to 1/1.8 and 0.8/1.8.
        let parsed = parse_scenario(&spec.to_text()).unwrap();
        let state = parsed.initial_state();
        assert!((state.total_weight() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn branching_into_pulseless_ready_target_is_rejected() {
        let text = "\
[scenario]
name = bad

[components]
0 weight=1 config=D pulse=X status=conscious
1 weight=0 config=D pulse=none status=ready

[edges]
0 -> 1 kind=branching profile=rcos:0,1,1

[schedule]
t_max = 5
dt = 0.001
";
        let err = parse_scenario(text).unwrap_err();
        assert_eq!(
            err,
            ScenarioError::Validation("rule-2 target must carry a brain pulse".into())
        );
    }

    #[test]
    fn branching_into_brainless_plain_target_is_allowed() {
        let text = "\
[scenario]
name = ancilla

[components]
0 weight=1 config=D pulse=X status=conscious
1 weight=0 config=D pulse=none status=plain

[edges]
0 -> 1 kind=branching profile=rcos:0,1,0.5

[schedule]
t_max = 5
dt = 0.001
";
        let spec = parse_scenario(text).unwrap();
        assert_eq!(spec.components[1].status, Status::Plain);
    }

    #[test]
    fn syntax_errors_carry_line_and_column() {
        let err = parse_scenario("[scenario]\nname = x\n[junk]\n").unwrap_err();
        match err {
            ScenarioError::Syntax { line, col, .. } => {
                assert_eq!((line, col), (3, 1));
            }
            other => panic!("expected syntax error, got {other}"),
        }

        let text =
            "[scenario]\nname = x\n\n[components]\n0 weight=1 config=D pulse=X status=awake\n";
        match parse_scenario(text).unwrap_err() {
            ScenarioError::Syntax {
                line,
                col,
                expected,
            } => {
                assert_eq!(line, 5);
                assert!(col > 1);
                assert!(expected.contains("plain"));
            }
            other => panic!("expected syntax error, got {other}"),
        }
    }

    #[test]
    fn comments_and_blank_lines_are_ignored() {
        let text = "\
# a scenario file
[scenario]
name = commented   # trailing comment

[components]
0 weight=1 config=D pulse=X status=conscious

[schedule]
t_max = 5
dt = 0.001
";
        let spec = parse_scenario(text).unwrap();
        assert_eq!(spec.name, "commented");
    }

    #[test]
    fn unknown_keys_are_errors() {
        let text = "[scenario]\nname = x\nresolution = high\n";
        assert!(matches!(
            parse_scenario(text).unwrap_err(),
            ScenarioError::Syntax { line: 3, .. }
        ));
    }

    #[test]
    fn terminal_rejects_bad_weights() {
        assert_eq!(
            build_terminal(0.3, 0.6).unwrap_err(),
            ScenarioError::InvalidWeights(0.3 + 0.6)
        );
        assert!(build_terminal(0.0, 1.0).is_err());
    }

    #[test]
    fn builtin_names_resolve() {
        assert_eq!(builtin("classical").unwrap().name, "classical");
        assert_eq!(builtin("quantum").unwrap().name, "quantum");
        assert_eq!(builtin("quantum_ddd").unwrap().name, "quantum_ddd");
        let t = builtin("terminal:0.3,0.7").unwrap();
        assert_eq!(t.components[0].weight, 0.3);
        assert!(builtin("mystery").is_err());
    }

    #[test]
    fn schedule_marks_obey_ordering() {
        for spec in builtins() {
            let s = &spec.schedule;
            if let Some(t_0) = s.t_0 {
                assert!(s.t_i <= t_0);
            }
            if let (Some(t_f), Some(t_ob)) = (s.t_f, s.t_ob) {
                assert!(t_f <= t_ob);
            }
            assert!(s.dt > 0.0 && s.dt <= s.t_max);
        }
    }

    #[test]
    fn observation_relabel_marks_heaviest_component_conscious() {
        let spec = build_terminal(0.3, 0.7).unwrap();
        let mut state = spec.initial_state();
        state.time = 1.0;
        assert!(spec.apply_observation_relabel(&mut state).unwrap());
        assert_eq!(state.components[0].pulse_label.as_deref(), Some("B"));
        assert_eq!(state.components[1].pulse_label.as_deref(), Some("B"));
        assert_eq!(state.conscious_component().unwrap(), Some(ComponentId(1)));
    }

    #[test]
    fn cascade_chain_must_be_linked() {
        let mut spec = build_quantum_ddd();
        spec.cascade_chain = Some(vec![ComponentId(1), ComponentId(3)]);
        let err = spec.validate().unwrap_err();
        assert!(matches!(err, ScenarioError::Validation(msg) if msg.contains("continuous edge")));
    }
}
