mod config;
mod error;
mod output;
mod svg;

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use epiline::planar::{planar_calibrate, InlierTest};
use epiline::refine::refine_model;
use epiline::sim::{generate_scene, GroundTruth, GroundTruthFile, SceneConfig};
use epiline::track_io::{read_track, write_track};
use epiline::{calibrate, CalibrationOutcome, VideoTrack};

use config::{load_run_config, load_scene_config, Mode, RunConfig};
use error::CliError;
use output::{CalibrationResult, Timing};

#[derive(Parser)]
#[command(name = "epiline", version, about = "Epipolar geometry from synchronized motion tracks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic scene: two track files and its ground truth.
    Simulate(SimulateArgs),
    /// Calibrate a camera pair from two track files.
    Calibrate(CalibrateArgs),
    /// Recover camera B's epipole when camera A lies on the motion plane.
    Planar(CalibrateArgs),
    /// Re-run refinement on a stored standard-mode result.
    Refine(RefineArgs),
    /// Compare a result against ground truth and print a CSV row.
    Evaluate(EvaluateArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    Desk,
    Planar,
}

#[derive(Args)]
struct SimulateArgs {
    /// Scene description (TOML).
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    preset: Option<Preset>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct Overrides {
    #[arg(long)]
    tau_p: Option<f64>,
    #[arg(long)]
    tau_l: Option<f64>,
    #[arg(long)]
    theta_ncc: Option<f64>,
    #[arg(long)]
    theta_planar: Option<f64>,
    #[arg(long)]
    tau_e: Option<f64>,
    #[arg(long)]
    disc_radius: Option<f64>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    validation_lines: Option<usize>,
    #[arg(long, value_parser = parse_inlier_test)]
    inlier_test: Option<InlierTest>,
    #[arg(long)]
    no_refine: bool,
}

fn parse_inlier_test(s: &str) -> Result<InlierTest, String> {
    match s {
        "area" => Ok(InlierTest::Area),
        "distance" => Ok(InlierTest::Distance),
        _ => Err(format!("expected area or distance, got {s}")),
    }
}

#[derive(Args)]
struct CalibrateArgs {
    #[arg(long)]
    track_a: PathBuf,
    #[arg(long)]
    track_b: PathBuf,
    /// Run configuration (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    /// Directory for result.json (and overlay.svg); stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, requires = "out")]
    svg: bool,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Args)]
struct RefineArgs {
    #[arg(long)]
    result: PathBuf,
    #[arg(long)]
    track_a: PathBuf,
    #[arg(long)]
    track_b: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    result: PathBuf,
    #[arg(long)]
    ground_truth: PathBuf,
    /// Number of exact correspondences for the epipolar distance.
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    /// CSV destination; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    if let Some(n) = std::env::var("EPILINE_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Calibrate(a) => run_calibration(a, None),
        Command::Planar(a) => run_calibration(a, Some(Mode::Planar)),
        Command::Refine(a) => refine(a),
        Command::Evaluate(a) => evaluate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path).map(BufWriter::new).map_err(|e| CliError::io(path, e))
}

fn write_text(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => {
            let mut w = create(p)?;
            w.write_all(text.as_bytes()).and_then(|_| w.flush()).map_err(|e| CliError::io(p, e))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn make_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn load_track(path: &Path) -> Result<VideoTrack, CliError> {
    let f = File::open(path).map_err(|e| CliError::io(path, e))?;
    read_track(BufReader::new(f)).map_err(|e| CliError::track(path, e))
}

fn to_json<T: serde::Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("results serialize");
    s.push('\n');
    s
}

fn simulate(a: SimulateArgs) -> Result<(), CliError> {
    let mut cfg = match (&a.config, a.preset) {
        (Some(p), _) => load_scene_config(p)?,
        (None, Some(Preset::Planar)) => SceneConfig::planar(a.seed.unwrap_or(0)),
        (None, _) => SceneConfig::desk(a.seed.unwrap_or(0)),
    };
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    let scene = generate_scene(&cfg)?;
    make_dir(&a.out)?;
    for (name, video) in [("track_a.jsonl", &scene.video_a), ("track_b.jsonl", &scene.video_b)] {
        let path = a.out.join(name);
        write_track(video, create(&path)?).map_err(|e| CliError::track(&path, e))?;
    }
    let gt = GroundTruthFile::from(&scene.ground_truth);
    write_text(Some(&a.out.join("ground_truth.json")), &to_json(&gt))
}

fn run_config(path: Option<&Path>, seed: Option<u64>) -> Result<RunConfig, CliError> {
    let mut cfg = match path {
        Some(p) => load_run_config(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn apply(cfg: &mut RunConfig, o: &Overrides) {
    let set = |slot: &mut f64, v: Option<f64>| {
        if let Some(v) = v {
            *slot = v;
        }
    };
    set(&mut cfg.matching.tau_p, o.tau_p);
    set(&mut cfg.matching.tau_l, o.tau_l);
    set(&mut cfg.matching.theta_ncc, o.theta_ncc);
    set(&mut cfg.planar.theta_planar, o.theta_planar);
    set(&mut cfg.planar.tau_e, o.tau_e);
    set(&mut cfg.planar.disc_radius, o.disc_radius);
    if let Some(n) = o.iterations {
        cfg.ransac.iterations = n;
        cfg.planar.iterations = n;
    }
    if let Some(n) = o.validation_lines {
        cfg.ransac.validation_lines = n;
    }
    if let Some(t) = o.inlier_test {
        cfg.planar.inlier_test = t;
    }
    if o.no_refine {
        cfg.refine.enabled = false;
    }
}

fn run_calibration(a: CalibrateArgs, forced: Option<Mode>) -> Result<(), CliError> {
    let mut cfg = run_config(a.config.as_deref(), a.seed)?;
    apply(&mut cfg, &a.overrides);
    if let Some(m) = forced.or(a.mode) {
        cfg.mode = m;
    }
    cfg.validate()?;
    let va = load_track(&a.track_a)?;
    let vb = load_track(&a.track_b)?;
    let start = Instant::now();
    let elapsed = || Timing { total_ms: start.elapsed().as_secs_f64() * 1e3 };
    let (json, model) = match cfg.mode {
        Mode::Standard => {
            let outcome = calibrate(&va, &vb, &cfg.pipeline_params())?;
            let r = output::standard_result(&outcome, cfg.seed, va.image(), vb.image(), elapsed());
            (to_json(&CalibrationResult::Standard(r)), Some(outcome.model))
        }
        Mode::Planar => {
            let outcome = planar_calibrate(&va, &vb, &cfg.planar_params())?;
            let r = output::planar_result(&outcome, cfg.seed, va.image(), vb.image(), elapsed());
            (to_json(&CalibrationResult::Planar(r)), None)
        }
    };
    match &a.out {
        Some(dir) => {
            make_dir(dir)?;
            write_text(Some(&dir.join("result.json")), &json)?;
            if a.svg {
                if let Some(m) = model {
                    write_text(Some(&dir.join("overlay.svg")), &svg::overlay(&m, va.image(), vb.image(), 10))?;
                }
            }
            Ok(())
        }
        None => write_text(None, &json),
    }
}

fn read_result(path: &Path) -> Result<CalibrationResult, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::parse(path, e))
}

fn refine(a: RefineArgs) -> Result<(), CliError> {
    let cfg = run_config(a.config.as_deref(), a.seed)?;
    cfg.validate()?;
    let CalibrationResult::Standard(stored) = read_result(&a.result)? else {
        return Err(CliError::parse(&a.result, "refinement needs a standard-mode result"));
    };
    let model = output::model_from_result(&stored).map_err(|e| CliError::parse(&a.result, e))?;
    let va = load_track(&a.track_a)?;
    let vb = load_track(&a.track_b)?;
    if va.n_frames() != vb.n_frames() {
        return Err(CliError::Pipeline(
            epiline::matching::MatchError::Desynchronized(va.n_frames(), vb.n_frames()).into(),
        ));
    }
    let start = Instant::now();
    let params = cfg.refine_params();
    let refined = refine_model(&model, &stored.candidates.pairs, &va, &vb, &params);
    let outcome = CalibrationOutcome {
        model: refined.model,
        initial: model,
        variant: refined.variant,
        candidates: epiline::matching::CandidateSet {
            pairs: stored.candidates.pairs.clone(),
            recurring_pixels: stored.candidates.recurring_pixels,
            barcodes_evaluated: stored.candidates.barcodes_evaluated,
        },
        ransac_iterations: stored.stats.ransac_iterations,
        inliers: refined.inliers,
    };
    let timing = Timing { total_ms: start.elapsed().as_secs_f64() * 1e3 };
    let r = output::standard_result(&outcome, cfg.seed, va.image(), vb.image(), timing);
    let json = to_json(&CalibrationResult::Standard(r));
    match &a.out {
        Some(dir) => {
            make_dir(dir)?;
            write_text(Some(&dir.join("result.json")), &json)
        }
        None => write_text(None, &json),
    }
}

fn evaluate(a: EvaluateArgs) -> Result<(), CliError> {
    let result = read_result(&a.result)?;
    let text = std::fs::read_to_string(&a.ground_truth).map_err(|e| CliError::io(&a.ground_truth, e))?;
    let file: GroundTruthFile = serde_json::from_str(&text).map_err(|e| CliError::parse(&a.ground_truth, e))?;
    let gt = GroundTruth::try_from(file).map_err(|e| CliError::parse(&a.ground_truth, e))?;
    if a.samples == 0 {
        return Err(CliError::Config("samples must be positive".into()));
    }
    let csv = output::evaluation_csv(&result, &gt, a.samples).map_err(|e| CliError::parse(&a.result, e))?;
    write_text(a.out.as_deref(), &csv)
}
