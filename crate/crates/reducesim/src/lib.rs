//! # reducesim
//!
//! Current-driven stochastic state reduction as a simulation library:
//! superposition components exchange probability current along a graph,
//! newly branched brain pulses arm as *ready* states, a seeded stochastic
//! trigger collapses the state onto one branch with Born statistics, and a
//! conscious pulse drifts classically over a continuous field of states.
//!
//! The library is the primary interface; each major capability has a
//! runnable example:
//!
//! | Example | Shows |
//! |---|---|
//! | `classical_drift` | a continuous chain with no stochastic choice |
//! | `quantum_collapse` | one branching edge, a hit, and the collapse |
//! | `detector_cascade` | gated detector stages and the post-hit cascade |
//! | `terminal_branching` | two competing ready pulses splitting 30/70 |
//! | `hit_time_histogram` | the uniform hit-time law of a constant current |
//! | `pulse_drift` | the conscious pulse crossing a red-to-green scene |
//! | `scenario_files` | the text format, diagnostics, and round-tripping |
//! | `reproducibility` | seed determinism and exact ensemble merging |
//!
//! ```bash
//! cargo run --release -p reducesim --example quantum_collapse
//! ```
//!
//! A thin `reducesim` binary wraps the harness for shell use:
//!
//! ```bash
//! reducesim run --scenario builtin:quantum --seed 42 --emit timeseries --out run.csv
//! reducesim mc  --scenario builtin:terminal:0.3,0.7 --trials 100000 --seed 1 --emit stats --out stats.csv
//! reducesim check --scenario my_scenario.txt
//! ```
//!
//! ## Quick start
//!
//! ```
//! use reducesim::scenario::build_quantum;
//! use reducesim::harness::run_once;
//!
//! let spec = build_quantum(1.0);
//! let trajectory = run_once(&spec, 42).unwrap();
//! let (t_sc, target) = trajectory.hit().unwrap();
//! assert_eq!(target.index(), 1);
//! assert!(t_sc > 1.0);
//! ```
//!
//! ## Reproducibility
//!
//! All randomness flows through one pinned, counter-based generator
//! (SplitMix64) consuming exactly one draw per trial, and transcendental
//! functions come from a pure-Rust math library, so identical
//! `(scenario, seed)` pairs produce bit-identical event logs and CSV
//! artifacts on any platform. Monte Carlo trials use sequential seeds
//! `base_seed..base_seed + n`; aggregation is an exact monoid merge.

pub mod dynamics;
pub mod harness;
pub mod pulse_field;
pub mod reduction;
pub mod scenario;
pub mod state;
pub mod stats;

pub use dynamics::{
    check_conservation, effective_current, step, CurrentEdge, CurrentGraph, EdgeKind, FlowProfile,
};
pub use harness::{
    emit, run_monte_carlo, run_once, run_once_strided, Artifact, EmitFormat, RunError, RunStats,
    Trajectory,
};
pub use reduction::{
    cascade, classify_emergence, collapse, HitEvent, SplitMix64, StochasticTrigger,
};
pub use scenario::{
    build_classical, build_quantum, build_quantum_constant, build_quantum_ddd, build_terminal,
    builtin, parse_scenario, ScenarioError, ScenarioSpec,
};
pub use state::{Component, ComponentId, Phase, Status, SystemState};
