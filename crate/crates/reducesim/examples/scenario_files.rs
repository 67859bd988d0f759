//! The scenario text format: serialize a builtin, parse it back, and show
//! the diagnostics a malformed or invalid file produces.
//!
//! ```bash
//! cargo run --release -p reducesim --example scenario_files
//! ```

use reducesim::scenario::{build_quantum_ddd, parse_scenario};

fn main() {
    let spec = build_quantum_ddd();
    let text = spec.to_text();
    println!("serialized builtin 'quantum_ddd':\n");
    println!("{text}");

    let parsed = parse_scenario(&text).unwrap();
    println!("round-trip equality: {}", parsed == spec);

    println!("\nmalformed input gets a position:");
    let broken = text.replace("status=ready", "status=armed");
    println!("  {}", parse_scenario(&broken).unwrap_err());

    println!("\ninvalid physics gets a named invariant:");
    let unbalanced = text.replace("0 weight=1 ", "0 weight=0.9 ");
    println!("  {}", parse_scenario(&unbalanced).unwrap_err());

    let pulseless = text.replace(
        "1 weight=0 config=D1,D0,D0 pulse=B_0 status=ready",
        "1 weight=0 config=D1,D0,D0 pulse=none status=ready",
    );
    println!("  {}", parse_scenario(&pulseless).unwrap_err());
}
