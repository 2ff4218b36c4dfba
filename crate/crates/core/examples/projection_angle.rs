//! Recovered SNR as the projection line is rotated away from the fitted angle.

use radiomic::recover::{recover_bin, RecoverConfig};
use radiomic::sim::simulate;
use radiomic::suite::{projection_scene, projection_silent_span};
use radiomic::Span;

fn main() -> radiomic::Result<()> {
    let deviations = [0.0f64, 22.5, 45.0, 67.5, 90.0];
    println!("scene  {}", deviations.map(|d| format!("{d:>6.1}")).join(" "));
    for i in 0..6 {
        let scene = projection_scene(5, i);
        let cir = simulate(&scene)?;
        let bin = scene.source_bin(0).expect("source bin");
        let mut row = Vec::new();
        for d in deviations {
            let config = RecoverConfig {
                angle_offset: d.to_radians(),
                silent_spans: vec![projection_silent_span(cir.params.slow_time_rate)],
                ..Default::default()
            };
            let sound = recover_bin(&cir, 0, bin, Span::new(0, cir.num_samples()), &config)?;
            row.push(format!("{:6.2}", sound.snr_db));
        }
        println!("{i:5}  {}", row.join(" "));
    }
    Ok(())
}
