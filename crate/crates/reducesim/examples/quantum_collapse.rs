//! One branching edge: the conscious component weakens while a ready
//! brain pulse gains strength, until the stochastic trigger fires and the
//! state collapses onto the ready branch.
//!
//! ```bash
//! cargo run --release -p reducesim --example quantum_collapse
//! ```

use reducesim::harness::run_once_strided;
use reducesim::reduction::StochasticTrigger;
use reducesim::scenario::build_quantum;

fn main() {
    let spec = build_quantum(1.0);
    let seed = 42;
    println!(
        "seed {seed} draws threshold u = {:.6}",
        StochasticTrigger::new(seed).threshold()
    );

    let trajectory = run_once_strided(&spec, seed, 200).unwrap();
    println!("\n{:>6} {:>10} {:>10}  statuses", "t", "w_0", "w_1");
    for s in &trajectory.samples {
        println!(
            "{:>6.2} {:>10.6} {:>10.6}  {} / {}",
            s.t, s.weights[0], s.weights[1], s.statuses[0], s.statuses[1]
        );
    }

    let (t_sc, target) = trajectory.hit().expect("full transfer always triggers");
    println!("\nhit at t_sc = {t_sc:.4} on component {target}");

    let last = &trajectory.final_state;
    println!(
        "post-collapse: w_0 = {}, w_1 = {}, conscious pulse = {{{}}}",
        last.components[0].weight,
        last.components[1].weight,
        last.components[1].pulse_label.as_deref().unwrap()
    );
    println!(
        "the trigger crossed its threshold once the cumulative transfer reached u: \
         total transferred before the hit never exceeds 1"
    );
}
