//! `vlcsim`: command-line driver for the VLC handover simulator.
//!
//! Exit codes: 0 success, 1 configuration error (bad flags, unreadable or
//! invalid scene/path/input files), 2 runtime error.

use std::env;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use vlc_handover::experiment::{
    run_ber_map, run_trajectory, BerMode, Trajectory, DEFAULT_BITS_PER_POINT, PAPER_PATH,
};
use vlc_handover::handover::HandoverConfig;
use vlc_handover::phy::{
    build_frame, random_payload, synthesize_received, Frame, DEFAULT_PAYLOAD_BITS,
};
use vlc_handover::report::{export_report, read_waveform_csv, CsvReport, ExportFormat};
use vlc_handover::rng::stream;
use vlc_handover::scene::{load_scene, Scene, PAPER_SCENE};
use vlc_handover::stats::{kurtosis, KurtosisReport};

/// Directory searched for `<name>.toml` when a `--scene`/`--path` value is
/// not an existing file.
const SCENE_DIR_ENV: &str = "VLCSIM_SCENE_DIR";

#[derive(Parser)]
#[command(
    name = "vlcsim",
    version,
    about = "Multi-cell VLC link simulator with kurtosis-based handover"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Walk a trajectory, record per-frame ID-segment kurtosis and handover events.
    Trajectory(TrajectoryArgs),
    /// Monte Carlo BER of every transmitter over a grid of receiver positions.
    Bermap(BermapArgs),
    /// Kurtosis of the samples in a waveform CSV (`n,time_s,amps`).
    Kurtosis(KurtosisArgs),
    /// Export one synthesized received frame as a waveform CSV.
    Waveform(WaveformArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

impl From<Format> for ExportFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => ExportFormat::Csv,
            Format::Json => ExportFormat::Json,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Isolated,
    Concurrent,
}

#[derive(Args)]
struct SceneArg {
    /// Scene file, or a name resolved in $VLCSIM_SCENE_DIR (`<name>.toml`);
    /// `paper_scene` is bundled.
    #[arg(long, default_value = "paper_scene")]
    scene: String,
}

#[derive(Args)]
struct TrajectoryArgs {
    #[command(flatten)]
    scene: SceneArg,
    /// Trajectory file or name; `paper_path` is bundled.
    #[arg(long, default_value = "paper_path")]
    path: String,
    /// Master random seed (required; no clock-based default).
    #[arg(long)]
    seed: u64,
    /// Output file for the per-frame report.
    #[arg(long)]
    out: PathBuf,
    /// Output file for the handover event log [default: <out stem>.events.<ext>].
    #[arg(long)]
    events: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Overrides the trajectory's frames per waypoint.
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    frames_per_waypoint: Option<u32>,
    /// Relative-maximum window, frames on each side of the peak.
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u32).range(1..))]
    peak_window: u32,
    /// Minimum rise of a peak over its window minimum (kurtosis, dimensionless).
    #[arg(long, default_value_t = 0.3)]
    peak_margin: f64,
    /// Consecutive dominant frames needed to decide, frames.
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u32).range(1..))]
    confirm_frames: u32,
    /// Level ratio counted as dominance (dimensionless, >= 1).
    #[arg(long, default_value_t = 1.1)]
    gain_hysteresis: f64,
}

#[derive(Args)]
struct BermapArgs {
    #[command(flatten)]
    scene: SceneArg,
    /// Grid points along x (cell centers).
    #[arg(long, default_value_t = 8, value_parser = clap::value_parser!(u32).range(1..))]
    nx: u32,
    /// Grid points along y (cell centers).
    #[arg(long, default_value_t = 8, value_parser = clap::value_parser!(u32).range(1..))]
    ny: u32,
    /// isolated: only the measured transmitter is on; concurrent: all transmit.
    #[arg(long, value_enum, default_value = "isolated")]
    mode: Mode,
    /// Payload bits simulated per grid point and transmitter (bits).
    #[arg(long, default_value_t = DEFAULT_BITS_PER_POINT as u64, value_parser = clap::value_parser!(u64).range(1..))]
    bits: u64,
    /// Master random seed (required; no clock-based default).
    #[arg(long)]
    seed: u64,
    /// Overrides the receiver noise standard deviation per sample (amps).
    #[arg(long)]
    noise_std: Option<f64>,
    /// Output file.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Args)]
struct KurtosisArgs {
    /// Waveform CSV with an `amps` column (amps).
    #[arg(long)]
    input: PathBuf,
}

#[derive(Args)]
struct WaveformArgs {
    #[command(flatten)]
    scene: SceneArg,
    /// Receiver x position (meters).
    #[arg(long)]
    x: f64,
    /// Receiver y position (meters).
    #[arg(long)]
    y: f64,
    /// Master random seed.
    #[arg(long)]
    seed: u64,
    /// Payload length per frame (bits).
    #[arg(long, default_value_t = DEFAULT_PAYLOAD_BITS as u32)]
    payload_bits: u32,
    /// Output CSV file.
    #[arg(long)]
    out: PathBuf,
}

enum Failure {
    Config(String),
    Runtime(String),
}

fn config(e: impl std::fmt::Display) -> Failure {
    Failure::Config(e.to_string())
}

fn runtime(e: impl std::fmt::Display) -> Failure {
    Failure::Runtime(e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Trajectory(a) => cmd_trajectory(a),
        Command::Bermap(a) => cmd_bermap(a),
        Command::Kurtosis(a) => cmd_kurtosis(a),
        Command::Waveform(a) => cmd_waveform(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("vlcsim: configuration error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("vlcsim: {msg}");
            ExitCode::from(2)
        }
    }
}

/// Reads `arg` as a file, then as `$VLCSIM_SCENE_DIR/<arg>.toml`, then as
/// the bundled document `bundled_name`.
fn read_named(arg: &str, bundled_name: &str, bundled: &str) -> Result<String, Failure> {
    let direct = Path::new(arg);
    if direct.is_file() {
        return fs::read_to_string(direct).map_err(|e| config(format!("{arg}: {e}")));
    }
    if let Ok(dir) = env::var(SCENE_DIR_ENV) {
        let candidate = Path::new(&dir).join(format!("{arg}.toml"));
        if candidate.is_file() {
            return fs::read_to_string(&candidate)
                .map_err(|e| config(format!("{}: {e}", candidate.display())));
        }
    }
    if arg == bundled_name {
        return Ok(bundled.to_string());
    }
    Err(config(format!("{arg}: no such file")))
}

fn load_scene_arg(arg: &SceneArg) -> Result<Scene, Failure> {
    let text = read_named(&arg.scene, "paper_scene", PAPER_SCENE)?;
    load_scene(&text).map_err(|e| config(format!("{}: {e}", arg.scene)))
}

fn events_path(out: &Path, format: Format) -> PathBuf {
    let ext = match format {
        Format::Csv => "csv",
        Format::Json => "json",
    };
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    out.with_file_name(format!("{stem}.events.{ext}"))
}

fn cmd_trajectory(a: TrajectoryArgs) -> Result<(), Failure> {
    let scene = load_scene_arg(&a.scene)?;
    let text = read_named(&a.path, "paper_path", PAPER_PATH)?;
    let mut path = Trajectory::parse(&text).map_err(|e| config(format!("{}: {e}", a.path)))?;
    if let Some(f) = a.frames_per_waypoint {
        path.frames_per_waypoint = f as usize;
    }
    path.validate_in(&scene)
        .map_err(|e| config(format!("{}: {e}", a.path)))?;
    let cfg = HandoverConfig {
        peak_window: a.peak_window as usize,
        peak_margin: a.peak_margin,
        confirm_frames: a.confirm_frames as usize,
        gain_hysteresis: a.gain_hysteresis,
    };
    cfg.validate().map_err(config)?;

    let report = run_trajectory(&scene, &path, &cfg, a.seed).map_err(runtime)?;
    export_report(&report, &a.out, a.format.into()).map_err(runtime)?;
    let events_out = a.events.unwrap_or_else(|| events_path(&a.out, a.format));
    export_report(report.events.as_slice(), &events_out, a.format.into()).map_err(runtime)?;
    println!(
        "{} frames, {} handover event(s); wrote {} and {}",
        report.records.len(),
        report.events.len(),
        a.out.display(),
        events_out.display()
    );
    Ok(())
}

fn cmd_bermap(a: BermapArgs) -> Result<(), Failure> {
    let mut scene = load_scene_arg(&a.scene)?;
    if let Some(s) = a.noise_std {
        scene = scene.with_noise_std(s).map_err(config)?;
    }
    if a.bits < 10_000 {
        eprintln!(
            "vlcsim: warning: {} bits per point gives unstable BER estimates (use >= 10000)",
            a.bits
        );
    }
    let mode = match a.mode {
        Mode::Isolated => BerMode::Isolated,
        Mode::Concurrent => BerMode::Concurrent,
    };
    let map = run_ber_map(
        &scene,
        a.nx as usize,
        a.ny as usize,
        a.bits as usize,
        mode,
        a.seed,
    )
    .map_err(runtime)?;
    export_report(&map, &a.out, a.format.into()).map_err(runtime)?;
    println!(
        "{}x{} {} BER map written to {}",
        a.nx,
        a.ny,
        mode,
        a.out.display()
    );
    Ok(())
}

fn cmd_kurtosis(a: KurtosisArgs) -> Result<(), Failure> {
    let text =
        fs::read_to_string(&a.input).map_err(|e| config(format!("{}: {e}", a.input.display())))?;
    let samples =
        read_waveform_csv(&text).map_err(|e| config(format!("{}: {e}", a.input.display())))?;
    let report = kurtosis(&samples).map_err(runtime)?;
    println!("{}", KurtosisReport::CSV_HEADER);
    println!("{}", report.csv_record());
    Ok(())
}

fn cmd_waveform(a: WaveformArgs) -> Result<(), Failure> {
    let scene = load_scene_arg(&a.scene)?;
    let mut rng = stream(a.seed, 0, 0);
    let n = a.payload_bits as usize;
    let frames: Vec<Frame> = scene
        .transmitters
        .iter()
        .map(|t| build_frame(t.cell_id, random_payload(&mut rng, n), n))
        .collect::<Result<_, _>>()
        .map_err(runtime)?;
    let refs: Vec<Option<&Frame>> = frames.iter().map(Some).collect();
    let w = synthesize_received(&scene, [a.x, a.y], &refs, &mut rng).map_err(config)?;
    fs::write(&a.out, w.to_csv()).map_err(runtime)?;
    println!(
        "{} samples written to {}",
        w.samples().len(),
        a.out.display()
    );
    Ok(())
}
