//! Runs the pipeline on synthetic mirrored images and prints what it finds.
//!
//! ```sh
//! cargo run --release -p symdetect --example synthetic
//! ```

use std::time::Instant;

use symdetect::{run, synthetic, PipelineConfig};

fn main() {
    let config = PipelineConfig::default();
    let images = [
        ("mirrored", synthetic::mirrored_texture(256, 256, 11)),
        ("four-fold", synthetic::four_fold_texture(256, 256, 5)),
    ];
    for (name, image) in images {
        let start = Instant::now();
        let out = match run(&image, &config) {
            Ok(out) => out,
            Err(e) => {
                eprintln!("{name}: {e}");
                continue;
            }
        };
        println!(
            "{name}: {} features, {} candidates in {:.2?}",
            out.features.len(),
            out.candidates.len(),
            start.elapsed()
        );
        for d in &out.detections {
            let a = &d.axis;
            let [p, q] = a.endpoints;
            println!(
                "  theta {:6.1} deg  rho {:+.4}  score {:.3}  ({:.1}, {:.1}) - ({:.1}, {:.1})",
                a.theta.to_degrees(),
                a.rho,
                a.score,
                p[0],
                p[1],
                q[0],
                q[1]
            );
        }
    }
}
