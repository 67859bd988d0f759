//! A purely classical observation: weight flows down a continuous chain
//! and the conscious pulse rides along, with no branching and therefore
//! no stochastic choice in any run.
//!
//! ```bash
//! cargo run --release -p reducesim --example classical_drift
//! ```

use reducesim::harness::{run_monte_carlo, run_once_strided};
use reducesim::scenario::build_classical;
use reducesim::state::Event;

fn main() {
    let spec = build_classical();
    let trajectory = run_once_strided(&spec, 7, 250).unwrap();

    println!("weights along the chain (sampled every 0.25 time units):");
    println!(
        "{:>6} {:>8} {:>8} {:>8} {:>8}  conscious",
        "t", "w_0", "w_1", "w_2", "w_3"
    );
    for s in &trajectory.samples {
        let conscious = s
            .statuses
            .iter()
            .position(|st| st == &reducesim::Status::Conscious)
            .map(|i| i.to_string())
            .unwrap_or_default();
        println!(
            "{:>6.2} {:>8.4} {:>8.4} {:>8.4} {:>8.4}  {}",
            s.t, s.weights[0], s.weights[1], s.weights[2], s.weights[3], conscious
        );
    }

    println!("\nconscious-pulse handoffs:");
    for e in trajectory.events() {
        if let Event::StatusChange {
            t,
            component,
            from,
            to,
        } = e
        {
            println!("  t = {t:.3}: component {component} {from} -> {to}");
        }
    }

    let final_state = &trajectory.final_state;
    println!(
        "\nfinal carrier: component {} (pulse {})",
        final_state.conscious_component().unwrap().unwrap(),
        final_state.components[3].pulse_label.as_deref().unwrap()
    );

    let stats = run_monte_carlo(&spec, 1000, 1).unwrap();
    println!(
        "over {} seeded runs: {} hits (a continuous chain never triggers)",
        stats.n_trials(),
        stats.n_trials() - stats.no_hit_count()
    );
}
