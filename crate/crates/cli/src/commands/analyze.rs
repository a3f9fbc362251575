use crate::error::{require_file, CliError};
use crate::output::OutDir;
use std::path::PathBuf;
use taippg_core::face_rois::{load_landmarks, Indicator, RegionSpec};
use taippg_core::media::{load_video, Channel};
use taippg_core::pgm::encode_pgm;
use taippg_core::pipeline::{analyze, AnalysisConfig};
use taippg_core::pulse::series_csv;
use taippg_core::register::shifts_csv;

#[derive(clap::Args)]
pub struct Args {
    /// Input video container.
    video: PathBuf,
    /// 81-point landmark JSON for the video frame grid.
    #[arg(long)]
    landmarks: PathBuf,
    /// Output directory.
    #[arg(short, long, default_value = ".")]
    out: PathBuf,
    /// JSON file with analysis settings; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Region name to landmark-index polygon JSON (default: bundled).
    #[arg(long)]
    regions: Option<PathBuf>,
    #[arg(long, value_parser = parse_channel)]
    channel: Option<Channel>,
    /// Heart-rate search band low edge, Hz.
    #[arg(long)]
    band_low: Option<f64>,
    /// Heart-rate search band high edge, Hz.
    #[arg(long)]
    band_high: Option<f64>,
    /// Reference bandwidth, Hz.
    #[arg(long)]
    bandwidth: Option<f64>,
    #[arg(long)]
    block_size: Option<usize>,
    #[arg(long)]
    reference_frame: Option<usize>,
    /// Skip frame registration.
    #[arg(long)]
    no_register: bool,
}

fn parse_channel(s: &str) -> Result<Channel, String> {
    match s.to_ascii_uppercase().as_str() {
        "R" => Ok(Channel::R),
        "G" => Ok(Channel::G),
        "B" => Ok(Channel::B),
        _ => Err(format!("unknown channel {s:?}; expected R, G or B")),
    }
}

/// Defaults, then the config file, then flags.
fn resolve(args: &Args) -> Result<(AnalysisConfig, Option<PathBuf>), CliError> {
    let mut map = super::read_config(args.config.as_deref())?;
    let regions_from_file = match map.remove("regions") {
        None => None,
        Some(serde_json::Value::String(p)) => Some(PathBuf::from(p)),
        Some(_) => return Err(CliError::input("MalformedJson", "config field \"regions\" must be a path string")),
    };
    let mut config: AnalysisConfig = serde_json::from_value(serde_json::Value::Object(map))
        .map_err(|e| CliError::input("MalformedJson", format!("config: {e}")))?;
    if let Some(c) = args.channel {
        config.channel = c;
    }
    if let Some(v) = args.band_low {
        config.band.0 = v;
    }
    if let Some(v) = args.band_high {
        config.band.1 = v;
    }
    if let Some(v) = args.bandwidth {
        config.bandwidth = v;
    }
    if let Some(v) = args.block_size {
        config.block_size = v;
    }
    if let Some(v) = args.reference_frame {
        config.reference_frame = v;
    }
    if args.no_register {
        config.register = false;
    }
    Ok((config, args.regions.clone().or(regions_from_file)))
}

pub fn run(args: Args) -> Result<(), CliError> {
    let (config, regions_path) = resolve(&args)?;
    require_file(&args.video, "video")?;
    require_file(&args.landmarks, "landmarks file")?;
    let regions = match &regions_path {
        Some(p) => {
            require_file(p, "region spec")?;
            RegionSpec::load(p)?
        }
        None => RegionSpec::default(),
    };
    let landmarks = load_landmarks(&args.landmarks)?;
    let video = load_video(&args.video)?;
    let fps = video.fps();

    let result = analyze(video, &landmarks, &regions, &config)?;

    let out = OutDir::create(&args.out)?;
    out.write("indicators.csv", result.regional.to_csv())?;
    out.write("bpa_map.pgm", encode_pgm(&result.map.to_pgm()))?;
    out.write("pulse.csv", series_csv(result.pulse.values(), fps))?;
    out.write("shifts.csv", shifts_csv(&result.shifts))?;

    let flagged = result.shifts.iter().filter(|s| s.is_flagged()).count();
    println!("heart_rate_hz {}", result.heart_rate);
    for which in Indicator::ALL {
        println!("relative_{} {}", which.name(), result.regional.relative_of(which));
    }
    if flagged > 0 {
        eprintln!("warning: {flagged} frame(s) registered with low confidence");
    }
    Ok(())
}
