//! `cyltri`: cylinder triangulation from silhouette lines.
//!
//! Exit status: 0 success, 1 usage error, 2 estimation failure, 3 invalid
//! input.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use cyltri::direction::{estimate_direction, DirectionConfig, DirectionMethod};
use cyltri::geometry::{backproject_line_2d, geometric_line_residual, rotation_to_y_axis};
use cyltri::io::{CylinderEntry, ResidualStats, ResultFile, Scene, SceneFile};
use cyltri::pipeline::{triangulate_scene, CrossSectionMethod, PipelineConfig, PIPELINE_DIRECTION_TOL};
use cyltri::robust::{exhaustive_multi_cylinder, RansacConfig};
use cyltri::synth::{run_benchmark, to_csv, BenchConfig, Experiment, NoiseModel};

const EXIT_USAGE: u8 = 1;
const EXIT_ESTIMATION: u8 = 2;
const EXIT_INPUT: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "cyltri", version, about = "Triangulate cylinders from image silhouette lines")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum DirectionArg {
    Lsq,
    Ransac,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum CrossSectionArg {
    MinimalRansac,
    ConstrainedLsq,
    Linear,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ExperimentArg {
    Numerics,
    NoiseSweep,
    MethodComparison,
    Degeneracy,
    MultiCylinder,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum NoiseArg {
    RectifiedOffset,
    ImageCoordinate,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Estimate one cylinder from all lines, or one per group label.
    Triangulate {
        scene: PathBuf,
        #[arg(long, value_enum, default_value = "lsq")]
        direction: DirectionArg,
        #[arg(long, value_enum, default_value = "constrained-lsq")]
        cross_section: CrossSectionArg,
        /// Inlier threshold on the tangency defect, scene units.
        #[arg(long)]
        threshold: Option<f64>,
        /// RANSAC iterations for the robust stages.
        #[arg(long)]
        iterations: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Treat group labels as known correspondences.
        #[arg(long)]
        group: bool,
        /// Estimate one axis direction from all groups.
        #[arg(long)]
        shared_direction: bool,
        #[arg(long, default_value_t = PIPELINE_DIRECTION_TOL)]
        direction_tol: f64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Find several parallel cylinders among unlabeled lines.
    Match {
        scene: PathBuf,
        /// Camera whose silhouette pairs seed the hypotheses.
        #[arg(long)]
        ref_image: String,
        #[arg(long, value_enum, default_value = "lsq")]
        direction: DirectionArg,
        #[arg(long, default_value_t = RansacConfig::default().inlier_threshold)]
        threshold: f64,
        #[arg(long, default_value_t = RansacConfig::default().min_inliers)]
        min_inliers: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = PIPELINE_DIRECTION_TOL)]
        direction_tol: f64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run a synthetic experiment and write CSV.
    Synth {
        #[arg(value_enum)]
        experiment: ExperimentArg,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Trials per grid point.
        #[arg(long)]
        trials: Option<usize>,
        /// Fill the runtime_us column.
        #[arg(long)]
        timing: bool,
        #[arg(long, value_enum, default_value = "rectified-offset")]
        noise: NoiseArg,
    },
    /// Check a scene file against the schema and its invariants.
    Validate { scene: PathBuf },
}

struct Failure {
    code: u8,
    message: String,
}

fn fail(code: u8, message: impl Into<String>) -> Failure {
    Failure {
        code,
        message: message.into(),
    }
}

fn load_scene(path: &Path) -> Result<Scene, Failure> {
    let file = SceneFile::load(path).map_err(|e| fail(EXIT_INPUT, format!("{}: {e}", path.display())))?;
    file.to_scene()
        .map_err(|e| fail(EXIT_INPUT, format!("{}: {e}", path.display())))
}

fn emit(text: &str, output: Option<&Path>) -> Result<(), Failure> {
    match output {
        Some(p) => std::fs::write(p, text).map_err(|e| fail(EXIT_INPUT, format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn direction_config(arg: DirectionArg, iterations: Option<usize>, seed: u64, shared: bool) -> DirectionConfig {
    let d = DirectionConfig::default();
    DirectionConfig {
        method: match arg {
            DirectionArg::Lsq => DirectionMethod::LeastSquares,
            DirectionArg::Ransac => DirectionMethod::Ransac,
        },
        ransac_iterations: iterations.unwrap_or(d.ransac_iterations),
        shared_direction: shared,
        seed,
        ..d
    }
}

/// Pipeline configuration for the `triangulate` flags.
fn pipeline_config(
    direction: DirectionArg,
    cross_section: CrossSectionArg,
    threshold: Option<f64>,
    iterations: Option<usize>,
    seed: u64,
    shared_direction: bool,
    direction_tol: f64,
) -> Result<PipelineConfig, Failure> {
    let r = RansacConfig::default();
    let cfg = PipelineConfig {
        direction: direction_config(direction, iterations, seed, shared_direction),
        cross_section: match cross_section {
            CrossSectionArg::MinimalRansac => CrossSectionMethod::MinimalRansac,
            CrossSectionArg::ConstrainedLsq => CrossSectionMethod::ConstrainedLsq,
            CrossSectionArg::Linear => CrossSectionMethod::Linear,
        },
        ransac: RansacConfig {
            iterations: iterations.unwrap_or(r.iterations),
            inlier_threshold: threshold.unwrap_or(r.inlier_threshold),
            seed,
            ..r
        },
        direction_tol,
    };
    cfg.direction.validate().map_err(|e| fail(EXIT_USAGE, e.to_string()))?;
    cfg.ransac.validate().map_err(|e| fail(EXIT_USAGE, e.to_string()))?;
    if !(direction_tol > 0.0) {
        return Err(fail(EXIT_USAGE, "--direction-tol must be positive"));
    }
    Ok(cfg)
}

fn run_match(
    scene: &Scene,
    ref_image: &str,
    direction: DirectionConfig,
    ransac: RansacConfig,
    direction_tol: f64,
) -> Result<ResultFile, Failure> {
    let obs = scene.observations();
    let in_ref: Vec<usize> = (0..obs.len()).filter(|&i| obs[i].camera.id() == ref_image).collect();
    if !scene.cameras.iter().any(|c| c.id() == ref_image) {
        return Err(fail(EXIT_INPUT, format!("unknown reference image '{ref_image}'")));
    }
    // labeled silhouettes pair up by label, otherwise every pair is tried
    let mut ref_pairs = Vec::new();
    for (a, &i) in in_ref.iter().enumerate() {
        for &j in &in_ref[a + 1..] {
            let paired = match (&scene.groups[i], &scene.groups[j]) {
                (Some(x), Some(y)) => x == y,
                _ => true,
            };
            if paired {
                ref_pairs.push((i, j));
            }
        }
    }
    let est = estimate_direction(&obs, &direction).map_err(|e| fail(EXIT_ESTIMATION, format!("direction stage: {e}")))?;
    let res = exhaustive_multi_cylinder(&obs, &ref_pairs, &est.w, direction_tol, &ransac)
        .map_err(|e| fail(EXIT_ESTIMATION, format!("matching: {e}")))?;
    if res.cylinders.is_empty() {
        return Err(fail(EXIT_ESTIMATION, "matching: no cylinder found"));
    }
    let r_align = rotation_to_y_axis(&est.w);
    let cylinders = res
        .cylinders
        .iter()
        .map(|m| {
            let defects: Vec<f64> = m
                .matched_lines
                .iter()
                .filter_map(|&(_, i)| {
                    let l = backproject_line_2d(obs[i].line, obs[i].camera, &r_align, direction_tol).ok()?;
                    Some(geometric_line_residual(&l, &m.circle).abs())
                })
                .collect();
            let max = defects.iter().copied().fold(0.0, f64::max);
            let mean = defects.iter().sum::<f64>() / defects.len().max(1) as f64;
            let (a, b) = ref_pairs[m.pair];
            CylinderEntry {
                group: scene.groups[a].clone().filter(|g| Some(g) == scene.groups[b].as_ref()),
                direction: (*m.cylinder.direction()).into(),
                axis_point: (*m.cylinder.point()).into(),
                radius: m.cylinder.radius(),
                inliers: m.matched_lines.iter().map(|&(_, i)| i).collect(),
                residuals: ResidualStats {
                    max_defect: max,
                    mean_defect: mean,
                    max_defect_px: scene.focal_length.map(|f| max * f),
                    mean_defect_px: scene.focal_length.map(|f| mean * f),
                },
                method: "exhaustive".into(),
                conic_class: "circle".into(),
            }
        })
        .collect();
    Ok(ResultFile {
        cylinders,
        config: serde_json::json!({
            "ref_image": ref_image,
            "direction": direction,
            "ransac": ransac,
            "direction_tol": direction_tol,
            "hypotheses": res.hypotheses,
        }),
    })
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Triangulate {
            scene,
            direction,
            cross_section,
            threshold,
            iterations,
            seed,
            group,
            shared_direction,
            direction_tol,
            output,
        } => {
            let cfg = pipeline_config(direction, cross_section, threshold, iterations, seed, shared_direction, direction_tol)?;
            let scene = load_scene(&scene)?;
            if group && scene.groups().is_empty() {
                return Err(fail(EXIT_INPUT, "--group given but no line has a group label"));
            }
            let result = triangulate_scene(&scene, &cfg, group).map_err(|(g, e)| match g {
                Some(g) => fail(EXIT_ESTIMATION, format!("group '{g}': {e}")),
                None => fail(EXIT_ESTIMATION, e.to_string()),
            })?;
            emit(&result.to_json(), output.as_deref())
        }
        Command::Match {
            scene,
            ref_image,
            direction,
            threshold,
            min_inliers,
            seed,
            direction_tol,
            output,
        } => {
            let ransac = RansacConfig {
                inlier_threshold: threshold,
                min_inliers,
                seed,
                ..RansacConfig::default()
            };
            ransac.validate().map_err(|e| fail(EXIT_USAGE, e.to_string()))?;
            let scene = load_scene(&scene)?;
            let result = run_match(&scene, &ref_image, direction_config(direction, None, seed, true), ransac, direction_tol)?;
            emit(&result.to_json(), output.as_deref())
        }
        Command::Synth {
            experiment,
            out,
            seed,
            trials,
            timing,
            noise,
        } => {
            let experiment = match experiment {
                ExperimentArg::Numerics => Experiment::Numerics,
                ExperimentArg::NoiseSweep => Experiment::NoiseSweep,
                ExperimentArg::MethodComparison => Experiment::MethodComparison,
                ExperimentArg::Degeneracy => Experiment::Degeneracy,
                ExperimentArg::MultiCylinder => Experiment::MultiCylinder,
            };
            let cfg = BenchConfig {
                seed,
                trials,
                timing,
                noise: match noise {
                    NoiseArg::RectifiedOffset => NoiseModel::RectifiedOffset,
                    NoiseArg::ImageCoordinate => NoiseModel::ImageCoordinate,
                },
            };
            let rows = run_benchmark(experiment, &cfg).map_err(|e| fail(EXIT_USAGE, e.to_string()))?;
            emit(&to_csv(&rows), out.as_deref())
        }
        Command::Validate { scene } => {
            let s = load_scene(&scene)?;
            eprintln!("{}: ok ({} cameras, {} lines)", scene.display(), s.cameras.len(), s.lines.len());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("cyltri: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
