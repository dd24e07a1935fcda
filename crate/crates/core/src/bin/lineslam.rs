use clap::{Args, Parser, Subcommand};
use lineslam::image::load_pgm;
use lineslam::lsd::{benchmark_detector, detect_lines, segments_csv, DetectorParams};
use lineslam::matching::{describe_all, match_lines, matches_csv, DEFAULT_ANGLE_GATE, DEFAULT_HAMMING_GATE};
use lineslam::sim::{ate_rmse, read_tum, rpe, run_experiment, write_outputs, ExperimentSpec, RpeDelta};
use lineslam::{Error, GrayImage};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "lineslam", version, about = "Line detection, matching, window optimization experiments and trajectory metrics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct DetectorArgs {
    /// Image scale.
    #[arg(long)]
    s: Option<f64>,
    /// Density threshold.
    #[arg(long)]
    d: Option<f64>,
    /// Length ratio; the minimum length is eta times the shorter image side.
    #[arg(long)]
    eta: Option<f64>,
}

impl DetectorArgs {
    fn params(&self) -> DetectorParams {
        let mut p = DetectorParams::default();
        p.image_scale = self.s.unwrap_or(p.image_scale);
        p.density_threshold = self.d.unwrap_or(p.density_threshold);
        p.length_ratio = self.eta.unwrap_or(p.length_ratio);
        p
    }
}

#[derive(Subcommand)]
enum Command {
    /// Detect segments in a PGM image.
    Detect {
        image: PathBuf,
        #[command(flatten)]
        detector: DetectorArgs,
        /// Write `x1,y1,x2,y2,length,angle` here instead of stdout.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Time two detector configurations on every PGM in a directory.
    BenchLsd {
        dir: PathBuf,
        /// `key=value` overrides of the defaults, e.g. `s=0.5,d=0.6,eta=0.125`.
        #[arg(long, default_value = "")]
        config_a: String,
        /// Overrides of the stock settings (`s=0.8,d=0.7,eta=0`).
        #[arg(long, default_value = "")]
        config_b: String,
        #[arg(long, default_value_t = 3)]
        reps: usize,
        /// Exit 1 unless the speedup of A over B reaches this.
        #[arg(long)]
        min_speedup: Option<f64>,
    },
    /// Run a seeded ablation experiment from a JSON spec.
    Simulate {
        spec: PathBuf,
        /// Directory for report.json, runs.csv and TUM trajectories.
        #[arg(long, default_value = "sim_out")]
        out: PathBuf,
    },
    /// ATE and RPE of an estimated TUM trajectory against ground truth.
    Eval {
        #[arg(long)]
        est: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        /// `all`, `<frames>`, `<frames>f` or `<seconds>s`.
        #[arg(long, default_value = "1")]
        rpe_delta: String,
        /// Report raw ATE without SE(3) alignment.
        #[arg(long)]
        no_align: bool,
    },
    /// Detect and match segments between two PGM images.
    Match {
        image_a: PathBuf,
        image_b: PathBuf,
        #[command(flatten)]
        detector: DetectorArgs,
        #[arg(long, default_value_t = DEFAULT_HAMMING_GATE)]
        hamming_gate: u32,
        /// Radians.
        #[arg(long, default_value_t = DEFAULT_ANGLE_GATE)]
        angle_gate: f64,
        /// Write `idx_a,idx_b,hamming,angle_diff` here instead of stdout.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

/// Exit 1: a configured check failed. Exit 2: bad input or configuration.
enum Failure {
    Assertion(String),
    Usage(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn read_image(path: &Path) -> Result<GrayImage, Failure> {
    let bytes = std::fs::read(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    load_pgm(&bytes).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn emit(text: &str, path: Option<&Path>) -> Result<(), Failure> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::Usage(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Detect { image, detector, csv } => {
            let segs = detect_lines(&read_image(&image)?, &detector.params())?;
            emit(&segments_csv(&segs), csv.as_deref())?;
            eprintln!("{} segments", segs.len());
        }
        Command::BenchLsd { dir, config_a, config_b, reps, min_speedup } => {
            let a = DetectorParams::default().parse_overrides(&config_a)?;
            let b = DetectorParams::stock().parse_overrides(&config_b)?;
            let mut paths: Vec<PathBuf> = std::fs::read_dir(&dir)
                .map_err(|e| Failure::Usage(format!("{}: {e}", dir.display())))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "pgm"))
                .collect();
            paths.sort();
            let images = paths.iter().map(|p| read_image(p)).collect::<Result<Vec<_>, _>>()?;
            let report = benchmark_detector(&images, &a, &b, reps)?;
            println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
            if let Some(min) = min_speedup.filter(|&m| report.speedup < m) {
                return Err(Failure::Assertion(format!("speedup {:.2} below {min}", report.speedup)));
            }
        }
        Command::Simulate { spec, out } => {
            let text = std::fs::read_to_string(&spec).map_err(|e| Failure::Usage(format!("{}: {e}", spec.display())))?;
            // Parse and validate fully before anything is written.
            let spec = ExperimentSpec::from_json(&text)?;
            let output = run_experiment(&spec)?;
            write_outputs(&out, &output)?;
            for a in &output.report.assertions {
                println!("{} {}: {}", if a.passed { "PASS" } else { "FAIL" }, a.name, a.detail);
            }
            if !output.report.passed {
                return Err(Failure::Assertion("experiment assertions failed".into()));
            }
        }
        Command::Eval { est, gt, rpe_delta, no_align } => {
            let load = |p: &Path| -> Result<_, Failure> {
                let text = std::fs::read_to_string(p).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?;
                read_tum(&text).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))
            };
            let (est, gt) = (load(&est)?, load(&gt)?);
            let delta: RpeDelta = rpe_delta.parse()?;
            let ate = ate_rmse(&est, &gt, !no_align)?;
            let r = rpe(&est, &gt, delta)?;
            let report = serde_json::json!({
                "ate_rmse": ate,
                "aligned": !no_align,
                "rpe_delta": rpe_delta,
                "rpe_trans": r.trans,
                "rpe_rot_deg": r.rot_deg,
                "rpe_pairs": r.pairs,
            });
            println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
        }
        Command::Match { image_a, image_b, detector, hamming_gate, angle_gate, csv } => {
            let params = detector.params();
            let (img_a, img_b) = (read_image(&image_a)?, read_image(&image_b)?);
            let (segs_a, segs_b) = (detect_lines(&img_a, &params)?, detect_lines(&img_b, &params)?);
            let (desc_a, desc_b) = (describe_all(&img_a, &segs_a)?, describe_all(&img_b, &segs_b)?);
            let matches = match_lines(&desc_a, &desc_b, &segs_a, &segs_b, hamming_gate, angle_gate)?;
            emit(&matches_csv(&matches), csv.as_deref())?;
            eprintln!("{} + {} segments, {} matches", segs_a.len(), segs_b.len(), matches.len());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Assertion(msg)) => {
            eprintln!("assertion failed: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
