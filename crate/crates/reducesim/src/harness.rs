//! Single-trajectory runner, seeded Monte Carlo ensembles, aggregation,
//! and CSV artifact emission.
//!
//! Trials are embarrassingly parallel: seeds `base_seed..base_seed + n`
//! run independently (worker count capped by `REDUCESIM_THREADS`) and the
//! per-trial summaries merge as a commutative monoid, so splitting an
//! ensemble across calls and merging the stats reproduces a single call
//! exactly.
//!
//! The trial engine precomputes the per-step stage quadrature of every
//! edge profile once per scenario. Rates depend on time only, so the table
//! entries are bit-identical to what [`dynamics::step`] computes inline;
//! a trial then reduces to table lookups, exhaustion clamping, the trigger
//! test, and the conscious-pulse bookkeeping.

use std::collections::BTreeMap;
use std::io::{self, Write};
use std::path::Path;

use rayon::prelude::*;
use thiserror::Error;

use crate::dynamics::{
    carry_with_mask, continuous_chain, stage_transfer, CurrentGraph, DynamicsError, EdgeKind,
};
use crate::reduction::{cascade_with, collapse, ReductionError, StochasticTrigger};
use crate::scenario::{ScenarioError, ScenarioSpec};
use crate::state::{ComponentId, Event, StateError, Status, SystemState};

/// Default number of hit-time histogram bins over `[0, t_max]`.
pub const DEFAULT_HISTOGRAM_BINS: usize = 100;

/// Resolution of the conservation-error accumulator. Quantizing per-trial
/// errors to integer ticks keeps ensemble merging exact regardless of
/// trial order.
const CONSERVATION_TICK: f64 = 1e-18;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("at t = {t}: {source}")]
    Dynamics {
        t: f64,
        #[source]
        source: DynamicsError,
    },
    #[error("at t = {t}: {source}")]
    Reduction {
        t: f64,
        #[source]
        source: ReductionError,
    },
    #[error("at t = {t}: {source}")]
    State {
        t: f64,
        #[source]
        source: StateError,
    },
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("trial with seed {seed} failed: {source}")]
    Trial {
        seed: u64,
        #[source]
        source: Box<RunError>,
    },
    #[error("cannot merge run stats: {0}")]
    MergeMismatch(String),
}

/// One recorded instant of a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub weights: Vec<f64>,
    pub statuses: Vec<Status>,
}

impl Sample {
    fn of(state: &SystemState) -> Self {
        Self {
            t: state.time,
            weights: state.components.iter().map(|c| c.weight).collect(),
            statuses: state.components.iter().map(|c| c.status).collect(),
        }
    }
}

/// A single run: sampled weights plus the final state (which carries the
/// event log).
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub final_state: SystemState,
}

impl Trajectory {
    pub fn events(&self) -> &[Event] {
        self.final_state.log.events()
    }

    pub fn hit(&self) -> Option<(f64, ComponentId)> {
        self.final_state.log.hit()
    }

    pub fn hit_count(&self) -> usize {
        self.final_state.log.hit_count()
    }
}

/// Aggregated outcome of a seeded ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct RunStats {
    n_trials: u64,
    branch_counts: BTreeMap<ComponentId, u64>,
    no_hit_count: u64,
    bins: Vec<u64>,
    t_max: f64,
    conservation_ticks: u128,
    max_conservation_error: f64,
    max_step_drift: f64,
    clamped_transfers: u64,
}

impl RunStats {
    fn empty(t_max: f64, n_bins: usize) -> Self {
        Self {
            n_trials: 0,
            branch_counts: BTreeMap::new(),
            no_hit_count: 0,
            bins: vec![0; n_bins],
            t_max,
            conservation_ticks: 0,
            max_conservation_error: 0.0,
            max_step_drift: 0.0,
            clamped_transfers: 0,
        }
    }

    fn record(&mut self, trial: &TrialSummary) {
        self.n_trials += 1;
        match trial.hit {
            Some((t_sc, target)) => {
                *self.branch_counts.entry(target).or_insert(0) += 1;
                let idx = ((t_sc / self.t_max) * self.bins.len() as f64) as usize;
                let idx = idx.min(self.bins.len() - 1);
                self.bins[idx] += 1;
            }
            None => self.no_hit_count += 1,
        }
        self.conservation_ticks += (trial.max_conservation_error / CONSERVATION_TICK) as u128;
        self.max_conservation_error = self
            .max_conservation_error
            .max(trial.max_conservation_error);
        self.max_step_drift = self.max_step_drift.max(trial.max_step_drift);
        self.clamped_transfers += trial.clamped;
    }

    pub fn n_trials(&self) -> u64 {
        self.n_trials
    }

    pub fn branch_counts(&self) -> &BTreeMap<ComponentId, u64> {
        &self.branch_counts
    }

    pub fn no_hit_count(&self) -> u64 {
        self.no_hit_count
    }

    pub fn branch_fraction(&self, id: ComponentId) -> f64 {
        let count = self.branch_counts.get(&id).copied().unwrap_or(0);
        count as f64 / self.n_trials as f64
    }

    /// Hit-time histogram counts over `[0, t_max]`.
    pub fn hit_time_histogram(&self) -> &[u64] {
        &self.bins
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    /// Mean over trials of the per-trial worst pre-collapse deviation of
    /// the total weight from 1.
    pub fn mean_conservation_error(&self) -> f64 {
        if self.n_trials == 0 {
            return 0.0;
        }
        (self.conservation_ticks as f64) * CONSERVATION_TICK / self.n_trials as f64
    }

    /// Worst pre-collapse deviation of the total weight from 1 over every
    /// sample of every trial.
    pub fn max_conservation_error(&self) -> f64 {
        self.max_conservation_error
    }

    /// Worst single-step change of the total weight (rounding noise of the
    /// antisymmetric transfers).
    pub fn max_step_drift(&self) -> f64 {
        self.max_step_drift
    }

    /// Transfers truncated by source exhaustion (diagnostic, not an error).
    pub fn clamped_transfers(&self) -> u64 {
        self.clamped_transfers
    }

    /// Merge two ensembles over disjoint seed ranges. Exact: merged stats
    /// equal a single call over the union.
    pub fn merge(&self, other: &RunStats) -> Result<RunStats, RunError> {
        if self.bins.len() != other.bins.len() || self.t_max != other.t_max {
            return Err(RunError::MergeMismatch(format!(
                "{} bins over t_max {} vs {} bins over t_max {}",
                self.bins.len(),
                self.t_max,
                other.bins.len(),
                other.t_max
            )));
        }
        let mut merged = self.clone();
        merged.n_trials += other.n_trials;
        for (&id, &count) in &other.branch_counts {
            *merged.branch_counts.entry(id).or_insert(0) += count;
        }
        merged.no_hit_count += other.no_hit_count;
        for (b, o) in merged.bins.iter_mut().zip(&other.bins) {
            *b += o;
        }
        merged.conservation_ticks += other.conservation_ticks;
        merged.max_conservation_error = merged
            .max_conservation_error
            .max(other.max_conservation_error);
        merged.max_step_drift = merged.max_step_drift.max(other.max_step_drift);
        merged.clamped_transfers += other.clamped_transfers;
        Ok(merged)
    }
}

/// Compact per-trial record fed into [`RunStats`].
#[derive(Debug, Clone)]
struct TrialSummary {
    hit: Option<(f64, ComponentId)>,
    max_conservation_error: f64,
    max_step_drift: f64,
    clamped: u64,
}

struct EdgeMeta {
    from: usize,
    to: usize,
    to_id: ComponentId,
    /// Branching edge into an (initially) ready target: its transfers arm
    /// the trigger.
    feeds_trigger: bool,
    /// Source starts ready, so the edge passes nothing before the hit.
    gated: bool,
}

/// A scenario compiled for repeated trials: initial state, per-step
/// transfer table, and the static conscious-chain masks.
pub struct CompiledRun {
    initial: SystemState,
    graph: CurrentGraph,
    edges: Vec<EdgeMeta>,
    /// `n_steps x n_edges`, row-major: unclamped stage transfer of edge
    /// `e` over step `k`.
    table: Vec<f64>,
    n_steps: usize,
    dt: f64,
    t_ob: Option<f64>,
    has_relabel: bool,
    /// First step index after which no profile is active.
    quiet_step: Option<usize>,
    /// Continuous-chain membership per component id.
    chains: Vec<Vec<bool>>,
    cascade: Option<(Vec<ComponentId>, Vec<crate::dynamics::FlowProfile>)>,
    spec: ScenarioSpec,
}

impl CompiledRun {
    pub fn compile(spec: &ScenarioSpec) -> Result<Self, RunError> {
        spec.validate()?;
        let graph = spec.graph()?;
        let initial = spec.initial_state();
        let dt = spec.schedule.dt;
        let n_steps = ((spec.schedule.t_max / dt).round() as usize).max(1);

        let edges: Vec<EdgeMeta> = graph
            .edges()
            .iter()
            .map(|e| {
                let target_ready = initial.components[e.to.index()].status == Status::Ready;
                EdgeMeta {
                    from: e.from.index(),
                    to: e.to.index(),
                    to_id: e.to,
                    feeds_trigger: e.kind == EdgeKind::Branching && target_ready,
                    gated: initial.components[e.from.index()].status == Status::Ready,
                }
            })
            .collect();

        // The per-step quadrature is a pure function of time, so it is
        // shared by every trial. Step k starts at exactly k * dt: the run
        // loop keeps the clock on that grid rather than accumulating
        // additions, which would drift by the step count times an ulp.
        let n_edges = edges.len();
        let mut table = vec![0.0; n_steps * n_edges];
        let quiet_t = graph.quiet_after();
        let mut quiet_step = None;
        for k in 0..n_steps {
            let t = k as f64 * dt;
            if let Some(tq) = quiet_t {
                if quiet_step.is_none() && t >= tq {
                    quiet_step = Some(k);
                }
            }
            for (e, edge) in graph.edges().iter().enumerate() {
                table[k * n_edges + e] = stage_transfer(&edge.profile, t, dt);
            }
        }

        let n = initial.components.len();
        let chains = (0..n)
            .map(|i| continuous_chain(n, graph.edges(), ComponentId(i as u32)))
            .collect();

        Ok(Self {
            initial,
            edges,
            table,
            n_steps,
            dt,
            t_ob: spec.schedule.t_ob,
            has_relabel: spec.has_observation_relabel(),
            quiet_step,
            chains,
            cascade: spec.cascade_legs()?,
            graph,
            spec: spec.clone(),
        })
    }

    pub fn graph(&self) -> &CurrentGraph {
        &self.graph
    }

    fn state_err(t: f64) -> impl FnOnce(StateError) -> RunError {
        move |source| RunError::State { t, source }
    }

    /// Run one trial, feeding every recorded instant (the initial state,
    /// each completed step, cascade steps) to `sink`. With `record_tail`
    /// the run keeps sampling through quiet time up to `t_max`; otherwise
    /// it stops as soon as nothing further can change.
    fn run_trial<F: FnMut(&SystemState)>(
        &self,
        seed: u64,
        mut sink: F,
        record_tail: bool,
    ) -> Result<(TrialSummary, SystemState), RunError> {
        let n_edges = self.edges.len();
        let mut state = self.initial.clone();
        let mut trigger = StochasticTrigger::new(seed);
        let mut relabel_pending = self.has_relabel;
        let mut conscious = state
            .conscious_component()
            .map_err(Self::state_err(state.time))?;
        let mut inflow: Vec<(ComponentId, f64)> = Vec::new();
        let mut summary = TrialSummary {
            hit: None,
            max_conservation_error: 0.0,
            max_step_drift: 0.0,
            clamped: 0,
        };

        sink(&state);
        let mut k = 0;
        while k < self.n_steps {
            if relabel_pending {
                if let Some(t_ob) = self.t_ob {
                    if state.time >= t_ob - 0.5 * self.dt {
                        self.spec
                            .apply_observation_relabel(&mut state)
                            .map_err(Self::state_err(state.time))?;
                        conscious = state
                            .conscious_component()
                            .map_err(Self::state_err(state.time))?;
                        relabel_pending = false;
                    }
                }
            }
            if !relabel_pending {
                if let Some(quiet) = self.quiet_step {
                    if k >= quiet {
                        break;
                    }
                }
            }

            // One integrator step from the transfer table; identical
            // arithmetic to dynamics::step on the same state.
            let t0 = state.time;
            let total_before = state.total_weight();
            inflow.clear();
            let row = &self.table[k * n_edges..(k + 1) * n_edges];
            for (meta, &raw) in self.edges.iter().zip(row) {
                if meta.gated || raw <= 0.0 {
                    continue;
                }
                let mut amount = raw;
                let available = state.components[meta.from].weight;
                if amount > available {
                    amount = available;
                    summary.clamped += 1;
                }
                if amount == 0.0 {
                    continue;
                }
                state.components[meta.from].weight -= amount;
                state.components[meta.to].weight += amount;
                if meta.feeds_trigger {
                    inflow.push((meta.to_id, amount / self.dt));
                }
            }
            let total_after = state.total_weight();
            k += 1;
            state.time = k as f64 * self.dt;

            summary.max_step_drift = summary
                .max_step_drift
                .max((total_after - total_before).abs());
            summary.max_conservation_error = summary
                .max_conservation_error
                .max((total_after - state.total_weight_reference).abs());

            if let Some(hit) = trigger.accumulate_and_test(&inflow, self.dt, t0) {
                state.time = hit.t_sc;
                collapse(&mut state, &hit).map_err(|source| RunError::Reduction {
                    t: hit.t_sc,
                    source,
                })?;
                summary.hit = Some((hit.t_sc, hit.target));
                sink(&state);
                if let Some((chain, profiles)) = &self.cascade {
                    cascade_with(&mut state, chain, profiles, self.dt, &mut sink).map_err(
                        |source| RunError::Reduction {
                            t: state.time,
                            source,
                        },
                    )?;
                }
                k = (state.time / self.dt).round() as usize;
                break;
            }

            if let Some(current) = conscious {
                if let Some(moved) =
                    carry_with_mask(&mut state, current, &self.chains[current.index()])
                        .map_err(Self::state_err(state.time))?
                {
                    conscious = Some(moved);
                }
            }
            sink(&state);
        }

        if record_tail {
            // Hit-free runs stay on the k * dt grid; after a cascade the
            // clock is anchored to the (off-grid) hit time instead.
            let on_grid = summary.hit.is_none();
            while k < self.n_steps {
                k += 1;
                if on_grid {
                    state.time = k as f64 * self.dt;
                } else {
                    state.time += self.dt;
                }
                sink(&state);
            }
        }

        for c in &state.components {
            if c.weight < -1e-12 {
                return Err(RunError::Dynamics {
                    t: state.time,
                    source: DynamicsError::NegativeWeight {
                        component: c.id,
                        weight: c.weight,
                    },
                });
            }
        }
        Ok((summary, state))
    }
}

/// Run a single trajectory, sampling every step.
pub fn run_once(spec: &ScenarioSpec, seed: u64) -> Result<Trajectory, RunError> {
    run_once_strided(spec, seed, 1)
}

/// Run a single trajectory, sampling every `stride`-th step (the initial
/// instant and the final state are always included). Deterministic for a
/// fixed `(spec, seed)`.
pub fn run_once_strided(
    spec: &ScenarioSpec,
    seed: u64,
    stride: usize,
) -> Result<Trajectory, RunError> {
    let compiled = CompiledRun::compile(spec)?;
    run_compiled_strided(&compiled, seed, stride)
}

/// [`run_once_strided`] against an already compiled scenario.
pub fn run_compiled_strided(
    compiled: &CompiledRun,
    seed: u64,
    stride: usize,
) -> Result<Trajectory, RunError> {
    let stride = stride.max(1);
    let mut samples: Vec<Sample> = Vec::new();
    let mut index = 0usize;
    let (_, final_state) = compiled
        .run_trial(
            seed,
            |state| {
                if index.is_multiple_of(stride) {
                    samples.push(Sample::of(state));
                }
                index += 1;
            },
            true,
        )
        .map_err(|source| RunError::Trial {
            seed,
            source: Box::new(source),
        })?;
    if samples.last().map(|s| s.t) != Some(final_state.time) {
        samples.push(Sample::of(&final_state));
    }
    Ok(Trajectory {
        samples,
        final_state,
    })
}

fn thread_pool() -> Option<rayon::ThreadPool> {
    let threads: usize = std::env::var("REDUCESIM_THREADS").ok()?.parse().ok()?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .ok()
}

/// Run `n` trials with seeds `base_seed..base_seed + n` and aggregate.
/// Trial order never affects the result, so the ensemble parallelizes
/// freely; `REDUCESIM_THREADS` caps the worker pool.
pub fn run_monte_carlo(spec: &ScenarioSpec, n: u64, base_seed: u64) -> Result<RunStats, RunError> {
    run_monte_carlo_with_bins(spec, n, base_seed, DEFAULT_HISTOGRAM_BINS)
}

/// [`run_monte_carlo`] with an explicit histogram bin count.
pub fn run_monte_carlo_with_bins(
    spec: &ScenarioSpec,
    n: u64,
    base_seed: u64,
    n_bins: usize,
) -> Result<RunStats, RunError> {
    assert!(n >= 1, "an ensemble needs at least one trial");
    assert!(n_bins >= 1, "histogram needs at least one bin");
    let compiled = CompiledRun::compile(spec)?;

    let trial = |i: u64| -> Result<TrialSummary, RunError> {
        let seed = base_seed.wrapping_add(i);
        compiled
            .run_trial(seed, |_| {}, false)
            .map(|(summary, _)| summary)
            .map_err(|source| RunError::Trial {
                seed,
                source: Box::new(source),
            })
    };

    let summaries: Result<Vec<TrialSummary>, RunError> = match thread_pool() {
        Some(pool) => pool.install(|| (0..n).into_par_iter().map(trial).collect()),
        None => (0..n).into_par_iter().map(trial).collect(),
    };
    let summaries = summaries?;

    let mut stats = RunStats::empty(compiled.spec.schedule.t_max, n_bins);
    for summary in &summaries {
        stats.record(summary);
    }
    Ok(stats)
}

// ---------------------------------------------------------------------------
// Artifact emission
// ---------------------------------------------------------------------------

#[derive(Debug, Error)]
pub enum EmitError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("format {format} does not apply to {artifact}")]
    FormatMismatch {
        format: &'static str,
        artifact: &'static str,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmitFormat {
    Timeseries,
    Events,
    Stats,
    Histogram,
}

impl EmitFormat {
    fn name(self) -> &'static str {
        match self {
            EmitFormat::Timeseries => "timeseries",
            EmitFormat::Events => "events",
            EmitFormat::Stats => "stats",
            EmitFormat::Histogram => "histogram",
        }
    }
}

pub enum Artifact<'a> {
    Trajectory(&'a Trajectory),
    Stats(&'a RunStats),
}

/// Write the requested artifact. Output bytes are a pure function of the
/// artifact (fixed decimal formatting at 12 significant digits), so
/// identical runs emit identical files on any platform.
pub fn emit(artifact: &Artifact<'_>, format: EmitFormat, path: &Path) -> Result<(), EmitError> {
    let mut buf = Vec::new();
    match (artifact, format) {
        (Artifact::Trajectory(t), EmitFormat::Timeseries) => write_timeseries(t, &mut buf)?,
        (Artifact::Trajectory(t), EmitFormat::Events) => write_events(t, &mut buf)?,
        (Artifact::Stats(s), EmitFormat::Stats) => write_stats(s, &mut buf)?,
        (Artifact::Stats(s), EmitFormat::Histogram) => write_histogram(s, &mut buf)?,
        (Artifact::Trajectory(_), _) => {
            return Err(EmitError::FormatMismatch {
                format: format.name(),
                artifact: "a trajectory",
            })
        }
        (Artifact::Stats(_), _) => {
            return Err(EmitError::FormatMismatch {
                format: format.name(),
                artifact: "run stats",
            })
        }
    }
    std::fs::write(path, buf)?;
    Ok(())
}

/// Deterministic decimal formatting at 12 significant digits.
pub fn format_sig12(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    let rounded: f64 = format!("{x:.11e}").parse().expect("float round-trip");
    format!("{rounded}")
}

/// `t,w_0,...,status_0,...` — one row per sample.
pub fn write_timeseries<W: Write>(trajectory: &Trajectory, out: &mut W) -> io::Result<()> {
    let n = trajectory.final_state.components.len();
    let mut header = String::from("t");
    for i in 0..n {
        header.push_str(&format!(",w_{i}"));
    }
    for i in 0..n {
        header.push_str(&format!(",status_{i}"));
    }
    writeln!(out, "{header}")?;
    for s in &trajectory.samples {
        let mut row = format_sig12(s.t);
        for w in &s.weights {
            row.push(',');
            row.push_str(&format_sig12(*w));
        }
        for st in &s.statuses {
            row.push(',');
            row.push_str(st.as_str());
        }
        writeln!(out, "{row}")?;
    }
    Ok(())
}

/// `t,event_kind,component,detail` — one row per logged event.
pub fn write_events<W: Write>(trajectory: &Trajectory, out: &mut W) -> io::Result<()> {
    writeln!(out, "t,event_kind,component,detail")?;
    for e in trajectory.events() {
        match *e {
            Event::Hit { t, target } => {
                writeln!(out, "{},hit,{target},", format_sig12(t))?;
            }
            Event::StatusChange {
                t,
                component,
                from,
                to,
            } => {
                writeln!(
                    out,
                    "{},status_change,{component},{}->{}",
                    format_sig12(t),
                    from.as_str(),
                    to.as_str()
                )?;
            }
            Event::CascadeStep { t, from, to } => {
                writeln!(out, "{},cascade_step,{from},to={to}", format_sig12(t))?;
            }
        }
    }
    Ok(())
}

/// `component,count,fraction` — branch counts in id order; a final `none`
/// row accounts for hit-free trials, so the counts always sum to the
/// trial count.
pub fn write_stats<W: Write>(stats: &RunStats, out: &mut W) -> io::Result<()> {
    writeln!(out, "component,count,fraction")?;
    let n = stats.n_trials() as f64;
    for (id, count) in stats.branch_counts() {
        writeln!(out, "{id},{count},{}", format_sig12(*count as f64 / n))?;
    }
    if stats.no_hit_count() > 0 {
        writeln!(
            out,
            "none,{},{}",
            stats.no_hit_count(),
            format_sig12(stats.no_hit_count() as f64 / n)
        )?;
    }
    Ok(())
}

/// `bin_start,bin_end,count` — hit-time histogram over `[0, t_max]`.
pub fn write_histogram<W: Write>(stats: &RunStats, out: &mut W) -> io::Result<()> {
    writeln!(out, "bin_start,bin_end,count")?;
    let n_bins = stats.hit_time_histogram().len();
    let width = stats.t_max() / n_bins as f64;
    for (i, count) in stats.hit_time_histogram().iter().enumerate() {
        writeln!(
            out,
            "{},{},{count}",
            format_sig12(i as f64 * width),
            format_sig12((i + 1) as f64 * width)
        )?;
    }
    Ok(())
}

/// Hit times of an ensemble gathered trial by trial (for distribution
/// tests that need more than the histogram).
pub fn collect_hit_times(
    spec: &ScenarioSpec,
    n: u64,
    base_seed: u64,
) -> Result<Vec<f64>, RunError> {
    let compiled = CompiledRun::compile(spec)?;
    let trial = |i: u64| -> Result<Option<f64>, RunError> {
        let seed = base_seed.wrapping_add(i);
        compiled
            .run_trial(seed, |_| {}, false)
            .map(|(summary, _)| summary.hit.map(|(t, _)| t))
            .map_err(|source| RunError::Trial {
                seed,
                source: Box::new(source),
            })
    };
    let times: Result<Vec<Option<f64>>, RunError> = match thread_pool() {
        Some(pool) => pool.install(|| (0..n).into_par_iter().map(trial).collect()),
        None => (0..n).into_par_iter().map(trial).collect(),
    };
    Ok(times?.into_iter().flatten().collect())
}
