//! Study statistics linking facial indicators to mean choroidal thickness.
//!
//! Thickness is regressed on each indicator with one round of
//! standardized-residual outlier masking, the fitted line is inverted at a
//! thickness cutoff to classify thin choroids, and ROC curves measure how
//! well each indicator separates the two groups.

mod correlation;
mod regression;
mod roc;

pub use correlation::{correlation_p_value, pearson, t_two_sided_p};
pub use regression::{
    classify_at_cutoff, fit_masked, fit_masked_with, ols, ConfusionStats, MaskingOptions, RegressionFit, OUTLIER_Z,
};
pub use roc::{hanley_mcneil_se, roc, Direction, RocCurve};

use crate::face_rois::Indicator;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::Path;
use thiserror::Error;

/// Thickness below which a choroid counts as thin, μm.
pub const DEFAULT_CUTOFF_UM: f64 = 200.0;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum StatsError {
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("a variable has zero variance")]
    DegenerateVariance,
    #[error("non-finite value in input")]
    NonFinite,
    #[error("fitted slope is zero")]
    ZeroSlope,
    #[error("labels contain a single class")]
    SingleClass,
    #[error("malformed study table at line {line}: {message}")]
    MalformedTable { line: u64, message: String },
    #[error("i/o error: {0}")]
    Io(String),
}

impl StatsError {
    pub fn kind(&self) -> &'static str {
        match self {
            StatsError::LengthMismatch(..) => "LengthMismatch",
            StatsError::TooFewPoints { .. } => "TooFewPoints",
            StatsError::DegenerateVariance => "DegenerateVariance",
            StatsError::NonFinite => "NonFinite",
            StatsError::ZeroSlope => "ZeroSlope",
            StatsError::SingleClass => "SingleClass",
            StatsError::MalformedTable { .. } => "MalformedCsv",
            StatsError::Io(_) => "IoFailure",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyRow {
    pub subject_id: String,
    pub rel_cheek: f64,
    pub rel_side_forehead: f64,
    pub rel_central_forehead: f64,
    pub mct_um: f64,
}

impl StudyRow {
    pub fn indicator(&self, which: Indicator) -> f64 {
        match which {
            Indicator::Cheek => self.rel_cheek,
            Indicator::SideForehead => self.rel_side_forehead,
            Indicator::CentralForehead => self.rel_central_forehead,
        }
    }
}

/// One row per measurement: the relative indicator triple and MCT.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StudyTable {
    pub rows: Vec<StudyRow>,
}

impl StudyTable {
    /// Parses `subject_id,rel_cheek,rel_side_forehead,rel_central_forehead,mct_um`.
    pub fn from_csv(text: &str) -> Result<Self, StatsError> {
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
        let headers = reader
            .headers()
            .map_err(|e| StatsError::MalformedTable { line: 1, message: e.to_string() })?
            .clone();
        let expected = ["subject_id", "rel_cheek", "rel_side_forehead", "rel_central_forehead", "mct_um"];
        if headers.iter().collect::<Vec<_>>() != expected {
            return Err(StatsError::MalformedTable {
                line: 1,
                message: format!("header must be {}", expected.join(",")),
            });
        }
        let mut rows = Vec::new();
        for record in reader.deserialize::<StudyRow>() {
            let row = record.map_err(|e| StatsError::MalformedTable {
                line: e.position().map_or(0, |p| p.line()),
                message: e.to_string(),
            })?;
            let line = rows.len() as u64 + 2;
            let triple = [row.rel_cheek, row.rel_side_forehead, row.rel_central_forehead];
            if triple.iter().chain([&row.mct_um]).any(|v| !v.is_finite()) {
                return Err(StatsError::MalformedTable { line, message: "non-finite value".into() });
            }
            if (triple.iter().sum::<f64>() - 1.0).abs() > 1e-6 {
                return Err(StatsError::MalformedTable { line, message: "indicator triple does not sum to 1".into() });
            }
            if row.mct_um <= 0.0 {
                return Err(StatsError::MalformedTable { line, message: "mct_um must be positive".into() });
            }
            rows.push(row);
        }
        Ok(StudyTable { rows })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, StatsError> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| StatsError::Io(format!("{}: {e}", path.as_ref().display())))?;
        Self::from_csv(&text)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("subject_id,rel_cheek,rel_side_forehead,rel_central_forehead,mct_um\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                r.subject_id, r.rel_cheek, r.rel_side_forehead, r.rel_central_forehead, r.mct_um
            );
        }
        out
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn indicator(&self, which: Indicator) -> Vec<f64> {
        self.rows.iter().map(|r| r.indicator(which)).collect()
    }

    pub fn mct(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.mct_um).collect()
    }
}

/// Everything computed for one indicator.
#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorReport {
    pub indicator: Indicator,
    pub fit: RegressionFit,
    pub confusion: ConfusionStats,
    /// Fails alone when the cutoff leaves a single class.
    pub roc: Result<RocCurve, StatsError>,
}

/// Fits, classifies and scores one indicator. The ROC orientation follows
/// the fitted slope: with a positive slope, thin choroids (the positive
/// class) sit at low indicator values.
pub fn analyze_indicator(table: &StudyTable, which: Indicator, cutoff: f64, options: MaskingOptions) -> Result<IndicatorReport, StatsError> {
    let x = table.indicator(which);
    let y = table.mct();
    let fit = fit_masked_with(&x, &y, options)?;
    let confusion = classify_at_cutoff(&fit, &x, &y, cutoff)?;
    let labels: Vec<bool> = y.iter().map(|&ct| ct < cutoff).collect();
    let direction = if fit.slope > 0.0 { Direction::Negative } else { Direction::Positive };
    Ok(IndicatorReport {
        indicator: which,
        fit,
        confusion,
        roc: roc(&labels, &x, direction),
    })
}

pub fn analyze_study(table: &StudyTable, cutoff: f64, options: MaskingOptions) -> Vec<(Indicator, Result<IndicatorReport, StatsError>)> {
    Indicator::ALL
        .iter()
        .map(|&which| (which, analyze_indicator(table, which, cutoff, options)))
        .collect()
}

const FITS_HEADER: &str = "indicator,status,n,n_used,n_masked,slope,intercept,r,p,threshold,tp,fp,tn,fn,accuracy,sensitivity,specificity,auc,auc_se,auc_ci_low,auc_ci_high,roc_direction";

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

/// One row per indicator. Failed indicators carry the error kind in
/// `status` and empty numeric fields; undefined rates are left empty.
pub fn fits_csv(n: usize, reports: &[(Indicator, Result<IndicatorReport, StatsError>)]) -> String {
    let mut out = format!("{FITS_HEADER}\n");
    for (which, report) in reports {
        match report {
            Err(e) => {
                let _ = writeln!(out, "{},{},{n}{}", which.name(), e.kind(), ",".repeat(19));
            }
            Ok(rep) => {
                let f = &rep.fit;
                let c = &rep.confusion;
                let (status, roc_fields) = match &rep.roc {
                    Ok(r) => {
                        let (lo, hi) = r.ci95();
                        ("ok", format!("{},{},{lo},{hi},{}", r.auc, r.auc_se, r.direction.sign()))
                    }
                    Err(e) => (e.kind(), ",,,,".to_string()),
                };
                let masked = f.outlier_mask.iter().filter(|&&m| m).count();
                let _ = writeln!(
                    out,
                    "{},{status},{n},{},{masked},{},{},{},{},{},{},{},{},{},{},{},{},{roc_fields}",
                    which.name(),
                    f.n_used,
                    f.slope,
                    f.intercept,
                    f.r,
                    f.p,
                    c.threshold,
                    c.tp,
                    c.fp,
                    c.tn,
                    c.fn_,
                    c.accuracy,
                    opt(c.sensitivity),
                    opt(c.specificity),
                );
            }
        }
    }
    out
}
