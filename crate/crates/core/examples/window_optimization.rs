//! One sliding window over a synthetic corridor: perturbed keyframes are
//! refined jointly with inverse-depth points and orthonormal lines.
//!
//! `cargo run --release --example window_optimization [pixel_sigma]`

use lineslam::geometry::Pose;
use lineslam::sim::{ate_rmse, generate_scene, ground_truth_window, perturb_trajectory, project_scene, SceneConfig};
use lineslam::window::{optimize_window, LineResidual, SolverConfig};

fn main() -> lineslam::Result<()> {
    let sigma: f64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1.0);
    let scene = generate_scene(&SceneConfig { points: 100, lines: 30, ..Default::default() }, 7)?;
    let frames = project_scene(&scene, sigma, 8)?;
    let truth: Vec<Pose> = scene.trajectory.iter().map(|(_, p)| *p).collect();
    let initial = perturb_trajectory(&truth, 0.05, 2.0, 9);
    let residual = LineResidual::Endpoints;
    let (state, obs) = ground_truth_window(&scene, &frames, &initial, sigma.max(1.0), residual, 1e-8)?;
    println!("{} keyframes, {} points, {} lines, {} observations", state.keyframes.len(), state.points.len(), state.lines.len(), obs.len());
    println!("initial ATE {:.4} m", ate_rmse(&scene.stamped(&state), &scene.truth(), true)?);
    let cfg = SolverConfig { line_residual: residual, ..Default::default() };
    let (out, report) = optimize_window(&state, &obs, &scene.camera, &cfg)?;
    println!(
        "{:?} after {} iterations, cost {:.4e} -> {:.4e}",
        report.termination,
        report.iterations,
        report.cost_trace[0],
        report.final_cost
    );
    println!("final ATE {:.6} m", ate_rmse(&scene.stamped(&out), &scene.truth(), true)?);
    Ok(())
}
