//! Writes a seeded synthetic scene file to stdout.
//!
//! `cargo run --example example_scene -- [seed] [sigma]`

use cyltri::io::SceneFile;
use cyltri::synth::{generate_seeded_scene, NoiseModel, SceneConfig};
use serde_json::Value;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let seed = args.next().map(|s| s.parse()).transpose()?.unwrap_or(2024);
    let sigma = args.next().map(|s| s.parse()).transpose()?.unwrap_or(2e-4);
    let cfg = SceneConfig {
        n_cameras: 5,
        sigma,
        noise: NoiseModel::ImageCoordinate,
        seed,
        ..Default::default()
    };
    let scene = generate_seeded_scene(&cfg)?;
    let mut file = SceneFile::from_synthetic(&scene);
    file.metadata.insert("focal_length".into(), Value::from(500.0));
    file.metadata.insert("seed".into(), Value::from(seed));
    let c = &scene.cylinders[0];
    file.metadata.insert(
        "truth".into(),
        serde_json::json!({"axis_point": <[f64; 3]>::from(*c.point()), "radius": c.radius()}),
    );
    print!("{}", file.to_json());
    Ok(())
}
