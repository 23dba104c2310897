use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use cyltri::io::{ResultFile, SceneFile};
use cyltri::pipeline::{triangulate_scene, PipelineConfig};
use cyltri::synth::{generate_seeded_scene, NoiseModel, SceneConfig};
use cyltri::Line2D;
use serde_json::json;

#[allow(dead_code)]
#[path = "../../core/tests/common/oracle.rs"]
mod oracle;

fn cyltri(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cyltri")).args(args).output().unwrap()
}

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &tempfile::TempDir, name: &str, text: &str) -> String {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

#[test]
fn validate_reports_the_line_with_a_missing_camera() {
    let dir = tempfile::tempdir().unwrap();
    let mut scene = SceneFile::load(data("example_scene.json")).unwrap();
    scene.lines[3].camera_id = "nowhere".into();
    let path = write(&dir, "bad.json", &scene.to_json());
    let o = cyltri(&["validate", &path]);
    assert_eq!(o.status.code(), Some(3));
    let e = stderr(&o);
    assert!(e.contains("line 3") && e.contains("nowhere"), "{e}");

    let ok = cyltri(&["validate", data("example_scene.json").to_str().unwrap()]);
    assert_eq!(ok.status.code(), Some(0), "{}", stderr(&ok));
}

#[test]
fn malformed_and_missing_files_are_input_errors() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(&dir, "broken.json", "{\"cameras\": [");
    assert_eq!(cyltri(&["triangulate", &path]).status.code(), Some(3));
    assert_eq!(cyltri(&["validate", "/nonexistent/scene.json"]).status.code(), Some(3));
}

#[test]
fn usage_errors_exit_with_one() {
    assert_eq!(cyltri(&[]).status.code(), Some(1));
    assert_eq!(cyltri(&["triangulate"]).status.code(), Some(1));
    assert_eq!(cyltri(&["synth", "nope"]).status.code(), Some(1));
    assert_eq!(cyltri(&["triangulate", "x.json", "--cross-section", "quadratic"]).status.code(), Some(1));
    assert_eq!(cyltri(&["synth", "numerics", "--trials", "0"]).status.code(), Some(1));
    assert_eq!(cyltri(&["--help"]).status.code(), Some(0));
}

#[test]
fn synth_csv_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        let o = cyltri(&["synth", "numerics", "--seed", "7", "--trials", "50", "--out", p.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    let (a, b) = (std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with("experiment,seed,n_lines,sigma,method,"));
    assert_eq!(text.lines().count(), 1 + 100);
}

/// Lines tangent to the hyperbola `x^2 - z^2 = 1` in the plane `y = 0`,
/// one per camera; each camera sits on its line and looks down `z`.
fn hyperbola_scene() -> String {
    let mut cameras = Vec::new();
    let mut lines = Vec::new();
    for (k, u) in [-1.0f64, -0.6, -0.2, 0.3, 0.7, 1.1].into_iter().enumerate() {
        let d = if k % 2 == 0 { 1.0 } else { -1.0 };
        let (a, c) = (u.cosh(), u.sinh());
        let n2 = a * a + c * c;
        let along = 4.0 + k as f64;
        let (px, pz) = (-d * a / n2 - along * c / n2.sqrt(), -d * c / n2 + along * a / n2.sqrt());
        let id = format!("c{k}");
        cameras.push(json!({"id": id, "P": [1, 0, 0, -px, 0, 1, 0, 0, 0, 0, 1, -pz]}));
        lines.push(json!({"camera_id": id, "l": [a, 0, c]}));
    }
    json!({"cameras": cameras, "lines": lines}).to_string()
}

#[test]
fn linear_method_reports_a_non_circle() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(&dir, "hyperbola.json", &hyperbola_scene());
    let o = cyltri(&["triangulate", &path, "--cross-section", "linear"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("hyperbola"), "{}", stderr(&o));
}

#[test]
fn too_few_lines_is_an_estimation_failure() {
    let dir = tempfile::tempdir().unwrap();
    let mut scene = SceneFile::load(data("example_scene.json")).unwrap();
    scene.lines.truncate(1);
    let path = write(&dir, "one.json", &scene.to_json());
    let o = cyltri(&["triangulate", &path]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("direction"), "{}", stderr(&o));
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + b.abs())
}

#[test]
fn example_scene_matches_the_golden_result() {
    let o = cyltri(&["triangulate", data("example_scene.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let got = ResultFile::from_json(std::str::from_utf8(&o.stdout).unwrap()).unwrap();
    let want = ResultFile::load(data("example_result.json")).unwrap();
    assert_eq!(got.cylinders.len(), 1);
    let (g, w) = (&got.cylinders[0], &want.cylinders[0]);
    for k in 0..3 {
        assert!(close(g.direction[k], w.direction[k], 1e-9));
        assert!(close(g.axis_point[k], w.axis_point[k], 1e-9));
    }
    assert!(close(g.radius, w.radius, 1e-9));
    assert_eq!(g.inliers, w.inliers);
    assert_eq!((g.method.as_str(), g.conic_class.as_str()), ("constrained-lsq", "circle"));
    assert!(close(g.residuals.max_defect, w.residuals.max_defect, 1e-9));
}

#[test]
fn golden_result_agrees_with_the_reference_fit() {
    // silhouettes in the example are vertical, so the cross-section plane is y = 0
    let scene = SceneFile::load(data("example_scene.json")).unwrap();
    let lines: Vec<Line2D> = scene
        .lines
        .iter()
        .map(|l| {
            let p = &scene.cameras.iter().find(|c| c.id == l.camera_id).unwrap().p;
            let plane: [f64; 4] = std::array::from_fn(|j| (0..3).map(|i| p[4 * i + j] * l.l[i]).sum());
            let n = plane[0].hypot(plane[2]);
            Line2D::new(plane[0] / n, plane[2] / n, plane[3] / n).unwrap()
        })
        .collect();
    let fit = oracle::oracle_lsq(&lines, 8);
    let want = ResultFile::load(data("example_result.json")).unwrap();
    let c = &want.cylinders[0];
    assert!(c.direction[1].abs() > 1.0 - 1e-12);
    assert!((c.axis_point[0] - fit.center[0]).abs() < 1e-8, "{:?} {:?}", c.axis_point, fit.center);
    assert!((c.axis_point[2] - fit.center[1]).abs() < 1e-8);
    assert!((c.radius - fit.r_squared.sqrt()).abs() < 1e-8);

    let truth = &scene.metadata["truth"];
    assert!((c.radius - truth["radius"].as_f64().unwrap()).abs() < 0.01);
}

#[test]
fn cli_output_equals_the_library_result() {
    let path = data("example_scene.json");
    let o = cyltri(&["triangulate", path.to_str().unwrap()]);
    let scene = SceneFile::load(&path).unwrap().to_scene().unwrap();
    let lib = triangulate_scene(&scene, &PipelineConfig::default(), false).unwrap();
    assert_eq!(String::from_utf8(o.stdout).unwrap(), lib.to_json());
}

#[test]
fn grouped_triangulation_and_matching() {
    let cfg = SceneConfig {
        n_cameras: 5,
        n_cylinders: 3,
        center_spread: 6.0,
        sigma: 1e-4,
        noise: NoiseModel::ImageCoordinate,
        seed: 21,
        ..Default::default()
    };
    let synthetic = generate_seeded_scene(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = write(&dir, "multi.json", &SceneFile::from_synthetic(&synthetic).to_json());

    let out = dir.path().join("grouped.json");
    let o = cyltri(&["triangulate", &path, "--group", "--shared-direction", "--output", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = ResultFile::load(&out).unwrap();
    assert_eq!(r.cylinders.len(), 3);
    for (k, c) in r.cylinders.iter().enumerate() {
        assert!((c.radius - synthetic.cylinders[k].radius()).abs() < 0.01);
    }

    let o = cyltri(&["match", &path, "--ref-image", "cam0", "--threshold", "0.01"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let m = ResultFile::from_json(std::str::from_utf8(&o.stdout).unwrap()).unwrap();
    assert_eq!(m.cylinders.len(), 3);
    assert!(m.cylinders.iter().all(|c| c.method == "exhaustive"));
    let mut radii: Vec<f64> = m.cylinders.iter().map(|c| c.radius).collect();
    let mut truth: Vec<f64> = synthetic.cylinders.iter().map(|c| c.radius()).collect();
    radii.sort_by(f64::total_cmp);
    truth.sort_by(f64::total_cmp);
    for (a, b) in radii.iter().zip(&truth) {
        assert!((a - b).abs() < 0.01, "{radii:?} {truth:?}");
    }
}
