//! Hit-time law of the current-based trigger: with a constant current J
//! draining unit weight, the cumulative transfer grows linearly, so hit
//! times are uniform on [0, 1/J].
//!
//! ```bash
//! cargo run --release -p reducesim --example hit_time_histogram
//! ```

use reducesim::harness::{collect_hit_times, run_monte_carlo_with_bins};
use reducesim::scenario::build_quantum_constant;
use reducesim::stats::ks_uniform_test;

fn main() {
    let rate = 0.5;
    let spec = build_quantum_constant(rate);
    let n = 10_000;

    let stats = run_monte_carlo_with_bins(&spec, n, 777, 25).unwrap();
    println!(
        "hit-time histogram, constant current J = {rate} (support [0, {}]):",
        1.0 / rate
    );
    let width = stats.t_max() / stats.hit_time_histogram().len() as f64;
    for (i, count) in stats.hit_time_histogram().iter().enumerate() {
        if *count == 0 && i as f64 * width > 1.0 / rate {
            continue;
        }
        let bar = "#".repeat((*count as usize) / 25);
        println!(
            "  [{:>5.2}, {:>5.2})  {count:>5}  {bar}",
            i as f64 * width,
            (i + 1) as f64 * width
        );
    }

    let times = collect_hit_times(&spec, n, 777).unwrap();
    let ks = ks_uniform_test(&times, 0.0, 1.0 / rate, 0.01);
    println!(
        "\nKolmogorov-Smirnov vs uniform[0, {}]: D = {:.5}, critical(1%) = {:.5} -> {}",
        1.0 / rate,
        ks.statistic,
        ks.critical,
        if ks.pass { "consistent" } else { "rejected" }
    );
}
