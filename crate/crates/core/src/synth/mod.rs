//! Synthetic scenes, noise, error metrics and benchmark experiments.

pub mod bench;
pub mod metrics;
pub mod scene;

pub use bench::{run_benchmark, to_csv, BenchConfig, BenchRow, Experiment, CSV_HEADER};
pub use metrics::{circle_error, cylinder_error, frobenius_conic_error, ErrorMetrics};
pub use scene::{add_line_noise, generate_scene, generate_seeded_scene, CameraLayout, NoiseModel, SceneConfig, SceneLine, SyntheticScene};
