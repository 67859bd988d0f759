//! A terminal observation: the detector superposition settles before the
//! observer looks. Resolving it feeds two competing ready pulses, and the
//! stochastic choice between them reproduces the branch weights as hit
//! frequencies.
//!
//! ```bash
//! cargo run --release -p reducesim --example terminal_branching
//! ```

use reducesim::harness::run_monte_carlo;
use reducesim::scenario::build_terminal;
use reducesim::ComponentId;

fn main() {
    let (w0, w1) = (0.3, 0.7);
    let spec = build_terminal(w0, w1).unwrap();
    let n = 100_000;
    let stats = run_monte_carlo(&spec, n, 12345).unwrap();

    let f0 = stats.branch_fraction(ComponentId(2));
    let f1 = stats.branch_fraction(ComponentId(3));
    let sigma = |p: f64| (p * (1.0 - p) / n as f64).sqrt();

    println!("{n} trials of the terminal scenario with branch weights {w0} / {w1}:");
    println!(
        "  pulse B_0: {:>7} hits, fraction {f0:.4} (expected {w0} +- {:.4})",
        stats.branch_counts()[&ComponentId(2)],
        3.0 * sigma(w0)
    );
    println!(
        "  pulse B_1: {:>7} hits, fraction {f1:.4} (expected {w1} +- {:.4})",
        stats.branch_counts()[&ComponentId(3)],
        3.0 * sigma(w1)
    );
    println!("  runs without a hit: {}", stats.no_hit_count());
    println!(
        "  worst conservation error across all trials: {:.2e}",
        stats.max_conservation_error()
    );

    println!("\nhit frequencies track the transferred weights for any split:");
    for (a, b) in [(0.5, 0.5), (0.1, 0.9)] {
        let spec = build_terminal(a, b).unwrap();
        let stats = run_monte_carlo(&spec, 20_000, 7).unwrap();
        println!(
            "  {a} / {b}: observed {:.4} / {:.4}",
            stats.branch_fraction(ComponentId(2)),
            stats.branch_fraction(ComponentId(3))
        );
    }
}
