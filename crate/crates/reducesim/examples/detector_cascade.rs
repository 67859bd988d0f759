//! The detector split into three stages. Before the hit, only the first
//! stage receives current (a ready source passes nothing onward, so the
//! later stages are pinned at exactly zero); the trigger therefore selects
//! the first stage with certainty, and a classical cascade then walks the
//! capture through the remaining stages.
//!
//! ```bash
//! cargo run --release -p reducesim --example detector_cascade
//! ```

use reducesim::harness::{run_monte_carlo, run_once};
use reducesim::scenario::build_quantum_ddd;
use reducesim::state::Event;

fn main() {
    let spec = build_quantum_ddd();
    let trajectory = run_once(&spec, 11).unwrap();
    let (t_sc, target) = trajectory.hit().unwrap();

    println!("pre-hit gating (later stages must hold exactly zero):");
    let mut checked = 0;
    for s in &trajectory.samples {
        if s.t < t_sc {
            assert_eq!(s.weights[2], 0.0);
            assert_eq!(s.weights[3], 0.0);
            checked += 1;
        }
    }
    println!("  {checked} pre-hit samples, w_2 = w_3 = 0 in every one");
    println!("\nhit at t_sc = {t_sc:.4} on component {target}");

    println!("\ncascade (hit stage -> middle stage -> final stage):");
    for e in trajectory.events() {
        match e {
            Event::CascadeStep { t, from, to } => {
                println!("  t = {t:.4}: stage {from} -> stage {to} complete");
            }
            Event::StatusChange {
                t,
                component,
                from,
                to,
            } if *t > t_sc => {
                println!("  t = {t:.4}: component {component} {from} -> {to}");
            }
            _ => {}
        }
    }

    let last = &trajectory.final_state;
    println!(
        "\nfinal state: weight {} on component 3, conscious pulse {{{}}}",
        last.components[3].weight,
        last.components[3].pulse_label.as_deref().unwrap()
    );

    let stats = run_monte_carlo(&spec, 1000, 1).unwrap();
    println!(
        "\nover {} seeds the trigger selected component 1 every time: {}",
        stats.n_trials(),
        stats.branch_counts().get(&reducesim::ComponentId(1)) == Some(&stats.n_trials())
    );
}
