use crate::error::{require_file, CliError};
use crate::output::OutDir;
use std::path::PathBuf;
use taippg_core::face_rois::layout::synthetic_landmarks;
use taippg_core::media::{synthesize_video, write_video, Motion, SceneSpec};

#[derive(clap::Args)]
pub struct Args {
    /// Output directory.
    #[arg(short, long, default_value = ".")]
    out: PathBuf,
    /// Base name of the written files.
    #[arg(long, default_value = "fixture")]
    name: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Complete scene description as JSON; replaces the face geometry
    /// flags below, which are then ignored.
    #[arg(long)]
    scene: Option<PathBuf>,
    #[arg(long, default_value_t = 400)]
    frames: usize,
    #[arg(long, default_value_t = 256)]
    height: usize,
    #[arg(long, default_value_t = 320)]
    width: usize,
    /// Cheek, side-forehead and central-forehead amplitudes, DN.
    #[arg(long, value_delimiter = ',', default_values_t = [4.0, 2.0, 2.0])]
    amplitudes: Vec<f64>,
    #[arg(long)]
    heart_rate: Option<f64>,
    /// Additive Gaussian noise, DN.
    #[arg(long)]
    noise_sigma: Option<f64>,
    /// Constant content drift `dx,dy` in px per frame.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    drift: Option<Vec<f64>>,
}

fn scene(args: &Args) -> Result<SceneSpec, CliError> {
    if let Some(path) = &args.scene {
        require_file(path, "scene file")?;
        let text = std::fs::read_to_string(path)?;
        return serde_json::from_str(&text).map_err(|e| CliError::input("MalformedJson", format!("{}: {e}", path.display())));
    }
    if args.amplitudes.len() != 3 {
        return Err(CliError::input("InvalidArgument", "--amplitudes takes three comma-separated values"));
    }
    if args.drift.as_ref().is_some_and(|d| d.len() != 2) {
        return Err(CliError::input("InvalidArgument", "--drift takes two comma-separated values"));
    }
    let amps = [args.amplitudes[0], args.amplitudes[1], args.amplitudes[2]];
    let mut spec = SceneSpec::synthetic_face(args.frames, args.height, args.width, amps);
    if let Some(hr) = args.heart_rate {
        spec.heart_rate_hz = hr;
    }
    if let Some(sigma) = args.noise_sigma {
        spec.noise_sigma = sigma;
    }
    if let Some(d) = &args.drift {
        spec.motion = Motion::Drift { dx_per_frame: d[0], dy_per_frame: d[1] };
    }
    Ok(spec)
}

pub fn run(args: Args) -> Result<(), CliError> {
    let spec = scene(&args)?;
    let (video, truth) = synthesize_video(&spec, args.seed)?;
    let landmarks = synthetic_landmarks(spec.height, spec.width);

    let out = OutDir::create(&args.out)?;
    let video_path = out.write_with(&format!("{}.taiv", args.name), |mut w| {
        write_video(&video, &mut w).map_err(|e| std::io::Error::other(e.to_string()))
    })?;
    out.write(&format!("{}.truth.json", args.name), truth.to_json())?;
    out.write(&format!("{}.landmarks.json", args.name), landmarks.to_json())?;
    println!("{}", video_path.display());
    Ok(())
}
