use crate::error::{require_file, CliError};
use crate::output::OutDir;
use std::path::PathBuf;
use taippg_core::plot::{roc_svg, scatter_svg};
use taippg_core::stats::{analyze_study, fits_csv, MaskingOptions, StatsError, StudyTable, DEFAULT_CUTOFF_UM};

/// Fewest rows for which every fit keeps two residual degrees of freedom
/// after masking one outlier.
const MIN_ROWS: usize = 4;

#[derive(clap::Args)]
pub struct Args {
    /// Study table CSV.
    table: PathBuf,
    /// Output directory.
    #[arg(short, long, default_value = ".")]
    out: PathBuf,
    /// Mean thickness below which a subject counts as thin, μm.
    #[arg(long, default_value_t = DEFAULT_CUTOFF_UM)]
    cutoff: f64,
    /// Mask on leave-one-out studentized residuals instead of plain
    /// standardized residuals.
    #[arg(long)]
    studentized: bool,
}

pub fn run(args: Args) -> Result<(), CliError> {
    require_file(&args.table, "study table")?;
    if !args.cutoff.is_finite() {
        return Err(CliError::input("InvalidArgument", "cutoff must be finite"));
    }
    let table = StudyTable::load(&args.table)?;
    if table.len() < MIN_ROWS {
        return Err(StatsError::TooFewPoints { needed: MIN_ROWS, got: table.len() }.into());
    }
    let reports = analyze_study(&table, args.cutoff, MaskingOptions { studentized: args.studentized });

    let out = OutDir::create(&args.out)?;
    out.write("fits.csv", fits_csv(table.len(), &reports))?;
    let mct = table.mct();
    for (which, report) in &reports {
        let name = which.name();
        let Ok(rep) = report else {
            continue;
        };
        let x = table.indicator(*which);
        let title = format!("relative {} BPA", name.replace('_', " "));
        out.write(&format!("scatter_{name}.svg"), scatter_svg(&title, &title, "mean choroidal thickness (μm)", &x, &mct, &rep.fit))?;
        if let Ok(curve) = &rep.roc {
            out.write(&format!("roc_{name}.csv"), curve.to_csv())?;
            out.write(&format!("roc_{name}.svg"), roc_svg(&title, curve))?;
        }
    }
    for (which, report) in &reports {
        match report {
            Ok(rep) => {
                let auc = rep.roc.as_ref().map_or_else(|e| e.kind().to_string(), |c| c.auc.to_string());
                println!("{} r {} p {} accuracy {} auc {}", which.name(), rep.fit.r, rep.fit.p, rep.confusion.accuracy, auc);
            }
            Err(e) => println!("{} {}", which.name(), e.kind()),
        }
    }
    Ok(())
}
