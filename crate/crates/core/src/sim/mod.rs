//! Synthetic data and evaluation: corridor scenes with exact and noisy
//! measurements, rendered detector test images, trajectory metrics, TUM I/O
//! and the seeded ablation experiment.

mod experiment;
mod images;
mod metrics;
mod scene;
mod tum;

pub use experiment::{
    ground_truth_window, line_tracks, perturb_trajectory, point_tracks, run_experiment, run_pipeline, runs_csv, write_outputs,
    AblationSpec, AssertionOutcome, Comparison, ExperimentOutput, ExperimentReport, ExperimentSpec, Mode,
    ModeSummary, NoiseConfig, PipelineResult, RunRecord, SolverSpec,
};
pub use images::{
    clutter_image, endpoint_error, jittered_permutation, score_detections, segment_distance, segment_scene,
    textured_segment_scene, OracleScore,
    SegmentSceneConfig,
};
pub use metrics::{align_se3, ate_rmse, rpe, RpeDelta, RpeResult, StampedPose};
pub use scene::{
    default_extrinsic, generate_scene, project_scene, view_segment, FrameObservations, SceneConfig, SyntheticScene,
};
pub use tum::{format_sig9, read_tum, write_tum};
