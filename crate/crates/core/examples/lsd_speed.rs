//! Times the modified detector settings against the stock settings on the
//! same clutter images.
//!
//! `cargo run --release --example lsd_speed`

use lineslam::lsd::{benchmark_detector, DetectorParams};
use lineslam::sim::clutter_image;

fn main() -> lineslam::Result<()> {
    let images = (0..10).map(|seed| clutter_image(seed, 752, 480, 120)).collect::<lineslam::Result<Vec<_>>>()?;
    let fast = DetectorParams::default();
    let stock = DetectorParams::stock();
    let r = benchmark_detector(&images, &fast, &stock, 2)?;
    println!("s={} d={} eta={}: {:.2} ms, {:.1} segments", fast.image_scale, fast.density_threshold, fast.length_ratio, r.mean_ms_a, r.mean_segments_a);
    println!("s={} d={} eta={}: {:.2} ms, {:.1} segments", stock.image_scale, stock.density_threshold, stock.length_ratio, r.mean_ms_b, r.mean_segments_b);
    println!("speedup {:.2}x (single pyramid layer {:.2}x)", r.speedup, r.single_layer_speedup);
    Ok(())
}
