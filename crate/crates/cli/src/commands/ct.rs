use crate::error::{require_file, CliError};
use crate::output::OutDir;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use taippg_core::ct_map::{mean_ct, thickness_map, BoundarySurface, ThicknessMap};
use taippg_core::pgm::encode_pgm;

#[derive(clap::Args)]
pub struct Args {
    /// Bruch's membrane surface CSV.
    #[arg(long)]
    bm: PathBuf,
    /// Choroid-sclera interface surface CSV.
    #[arg(long)]
    csi: PathBuf,
    /// Bruch's membrane surface of the fellow eye.
    #[arg(long, requires = "fellow_csi")]
    fellow_bm: Option<PathBuf>,
    /// Choroid-sclera interface of the fellow eye.
    #[arg(long, requires = "fellow_bm")]
    fellow_csi: Option<PathBuf>,
    /// Output directory.
    #[arg(short, long, default_value = ".")]
    out: PathBuf,
}

fn eye_map(bm: &Path, csi: &Path) -> Result<ThicknessMap, CliError> {
    require_file(bm, "BM surface")?;
    require_file(csi, "CSI surface")?;
    let bm = BoundarySurface::load(bm)?;
    let csi = BoundarySurface::load(csi)?;
    Ok(thickness_map(&bm, &csi)?)
}

pub fn run(args: Args) -> Result<(), CliError> {
    let mut maps = vec![eye_map(&args.bm, &args.csi)?];
    if let (Some(bm), Some(csi)) = (&args.fellow_bm, &args.fellow_csi) {
        maps.push(eye_map(bm, csi)?);
    }
    let subject = match maps.as_slice() {
        [a, b] => Some(mean_ct(a, b)?),
        _ => None,
    };

    let out = OutDir::create(&args.out)?;
    let mut summary = String::from("eye,mct_um\n");
    for map in &maps {
        let eye = map.eye.to_string();
        out.write(&format!("thickness_{eye}.csv"), map.to_csv())?;
        out.write(&format!("thickness_{eye}.pgm"), encode_pgm(&map.to_pgm()))?;
        let _ = writeln!(summary, "{eye},{}", map.mean());
    }
    if let Some(m) = subject {
        let _ = writeln!(summary, "subject,{m}");
    }
    out.write("mct.txt", &summary)?;
    print!("{summary}");
    Ok(())
}
