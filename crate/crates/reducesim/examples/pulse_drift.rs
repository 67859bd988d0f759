//! Classical motion of the conscious pulse over a red-to-green scene: the
//! window of experienced states slides along the hue ramp, its leading
//! edge always greener than its trailing edge, with no branching anywhere.
//!
//! ```bash
//! cargo run --release -p reducesim --example pulse_drift
//! ```

use reducesim::pulse_field::{ConsciousPulse, PulseField};

fn main() {
    let field = PulseField::hue_ramp(64, 16);
    println!(
        "{}x{} hue ramp, continuity bound {:.5}: {} violations",
        field.width(),
        field.height(),
        field.continuity_bound(),
        field.continuity_check().len()
    );

    let mut pulse = ConsciousPulse::new(&field, (8.0, 8.0), 2.0).unwrap();
    println!("\ndrifting at velocity (1, 0), sampling the window every 8 time units:");
    println!(
        "{:>6} {:>8} {:>10} {:>10} {:>10}",
        "t", "center_x", "mean hue", "leading", "trailing"
    );
    loop {
        let (cx, _) = pulse.center();
        let window = pulse.window(&field);
        let total: f64 = window.iter().map(|&(_, w)| w).sum();
        let mean: f64 = window.iter().map(|(p, w)| p.state_vector[0] * w).sum();
        let side = |sign: f64| {
            let (mut hue, mut mass) = (0.0, 0.0);
            for (p, w) in &window {
                if (p.x as f64 - cx) * sign > 0.0 {
                    hue += p.state_vector[0] * w;
                    mass += w;
                }
            }
            hue / mass
        };
        println!(
            "{:>6.1} {:>8.2} {:>10.4} {:>10.4} {:>10.4}   (weights sum to {total:.12})",
            pulse.time(),
            cx,
            mean,
            side(1.0),
            side(-1.0)
        );
        if cx >= 48.0 {
            break;
        }
        for _ in 0..16 {
            pulse.drift(&field, (1.0, 0.0), 0.5).unwrap();
        }
    }

    // The two post-observation regions of a settled scene.
    let (left, right) = field.branch(32, "D_0", "D_1").unwrap();
    println!(
        "\nbranched at column 32: left region '{}' ({} columns), right region '{}' ({} columns)",
        left.branch_label().unwrap(),
        left.width(),
        right.branch_label().unwrap(),
        right.width()
    );

    let dump = std::env::temp_dir().join("reducesim_field.txt");
    std::fs::write(&dump, field.export_grid()).unwrap();
    println!("grid dump written to {}", dump.display());
}
