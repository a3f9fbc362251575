//! En-face choroidal thickness from two segmented boundary surfaces.
//!
//! Boundaries are depth grids in axial pixels (Bruch's membrane above the
//! choroid-sclera interface). Thickness is their difference scaled to μm;
//! the subject's mean choroidal thickness (MCT) averages the two per-eye
//! means.

use crate::pgm::normalize_to_max;
use ndarray::{Array2, Zip};
use std::fmt::{self, Write as _};
use std::path::Path;
use std::str::FromStr;
use thiserror::Error;

/// Scan grid of the reference protocol: 500 × 500 A-scans over 12 × 12 mm.
pub const DEFAULT_GRID: (usize, usize) = (500, 500);
pub const DEFAULT_EXTENT_MM: (f64, f64) = (12.0, 12.0);

#[derive(Debug, Error, PartialEq)]
pub enum CtError {
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),
    #[error("eye mismatch: {0}")]
    EyeMismatch(String),
    #[error("boundary scale mismatch: {0} vs {1} um/px")]
    ScaleMismatch(f64, f64),
    #[error("choroid-sclera interface above Bruch's membrane at row {row}, col {col}")]
    NegativeThickness { row: usize, col: usize },
    #[error("invalid surface: {0}")]
    InvalidSurface(String),
    #[error("malformed boundary CSV at line {line}: {message}")]
    MalformedCsv { line: usize, message: String },
    #[error("i/o error: {0}")]
    Io(String),
}

impl CtError {
    pub fn kind(&self) -> &'static str {
        match self {
            CtError::DimMismatch(_) => "DimMismatch",
            CtError::EyeMismatch(_) => "EyeMismatch",
            CtError::ScaleMismatch(..) => "ScaleMismatch",
            CtError::NegativeThickness { .. } => "NegativeThickness",
            CtError::InvalidSurface(_) => "InvalidSurface",
            CtError::MalformedCsv { .. } => "MalformedCsv",
            CtError::Io(_) => "IoFailure",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Eye {
    Od,
    Os,
}

impl fmt::Display for Eye {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Eye::Od => "OD",
            Eye::Os => "OS",
        })
    }
}

impl FromStr for Eye {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "OD" => Ok(Eye::Od),
            "OS" => Ok(Eye::Os),
            other => Err(format!("unknown eye {other:?}")),
        }
    }
}

/// Segmented boundary depth grid in axial pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundarySurface {
    depths: Array2<f64>,
    axial_scale_um: f64,
    extent_mm: (f64, f64),
    eye: Eye,
}

impl BoundarySurface {
    pub fn new(depths: Array2<f64>, axial_scale_um: f64, eye: Eye) -> Result<Self, CtError> {
        if !(axial_scale_um > 0.0 && axial_scale_um.is_finite()) {
            return Err(CtError::InvalidSurface(format!("axial scale {axial_scale_um}")));
        }
        if depths.is_empty() {
            return Err(CtError::InvalidSurface("empty grid".into()));
        }
        if let Some(((r, c), _)) = depths.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(CtError::InvalidSurface(format!("non-finite depth at row {r}, col {c}")));
        }
        Ok(BoundarySurface {
            depths,
            axial_scale_um,
            extent_mm: DEFAULT_EXTENT_MM,
            eye,
        })
    }

    pub fn with_extent_mm(mut self, extent_mm: (f64, f64)) -> Self {
        self.extent_mm = extent_mm;
        self
    }

    pub fn depths(&self) -> &Array2<f64> {
        &self.depths
    }

    pub fn axial_scale_um(&self) -> f64 {
        self.axial_scale_um
    }

    pub fn extent_mm(&self) -> (f64, f64) {
        self.extent_mm
    }

    pub fn eye(&self) -> Eye {
        self.eye
    }

    /// Parses the boundary CSV: a `# eye=OD axial_scale_um=5.0 rows=R cols=C`
    /// header followed by `R` lines of `C` comma-separated depths.
    pub fn from_csv(text: &str) -> Result<Self, CtError> {
        let malformed = |line: usize, message: String| CtError::MalformedCsv { line, message };
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or_else(|| malformed(1, "empty file".into()))?;
        let header = header
            .trim()
            .strip_prefix('#')
            .ok_or_else(|| malformed(1, "missing '#' header".into()))?;
        let (mut eye, mut scale, mut rows, mut cols) = (None, None, None, None);
        for field in header.split_whitespace() {
            let (key, value) = field
                .split_once('=')
                .ok_or_else(|| malformed(1, format!("header field {field:?}")))?;
            let bad = |e: String| malformed(1, format!("{key}: {e}"));
            match key {
                "eye" => eye = Some(value.parse::<Eye>().map_err(bad)?),
                "axial_scale_um" => scale = Some(value.parse::<f64>().map_err(|e| bad(e.to_string()))?),
                "rows" => rows = Some(value.parse::<usize>().map_err(|e| bad(e.to_string()))?),
                "cols" => cols = Some(value.parse::<usize>().map_err(|e| bad(e.to_string()))?),
                _ => {}
            }
        }
        let lacks = |name: &str| malformed(1, format!("header lacks {name}"));
        let eye = eye.ok_or_else(|| lacks("eye"))?;
        let scale = scale.ok_or_else(|| lacks("axial_scale_um"))?;
        let rows = rows.ok_or_else(|| lacks("rows"))?;
        let cols = cols.ok_or_else(|| lacks("cols"))?;

        let mut values = Vec::with_capacity(rows * cols);
        let mut seen = 0;
        for (idx, line) in lines {
            let line_no = idx + 1;
            seen += 1;
            if seen > rows {
                return Err(malformed(line_no, format!("more than {rows} rows")));
            }
            let before = values.len();
            for cell in line.split(',') {
                let v: f64 = cell
                    .trim()
                    .parse()
                    .map_err(|_| malformed(line_no, format!("not a number: {:?}", cell.trim())))?;
                values.push(v);
            }
            if values.len() - before != cols {
                return Err(malformed(line_no, format!("{} values, expected {cols}", values.len() - before)));
            }
        }
        if seen != rows {
            return Err(malformed(seen + 1, format!("{seen} rows, expected {rows}")));
        }
        let depths = Array2::from_shape_vec((rows, cols), values).expect("row count checked");
        BoundarySurface::new(depths, scale, eye)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, CtError> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| CtError::Io(format!("{}: {e}", path.as_ref().display())))?;
        Self::from_csv(&text)
    }

    pub fn to_csv(&self) -> String {
        let (rows, cols) = self.depths.dim();
        let header = format!("# eye={} axial_scale_um={} rows={rows} cols={cols}", self.eye, self.axial_scale_um);
        grid_csv(&header, &self.depths)
    }
}

fn grid_csv(header: &str, grid: &Array2<f64>) -> String {
    let mut out = String::with_capacity(grid.len() * 8);
    let _ = writeln!(out, "{header}");
    for row in grid.rows() {
        let mut first = true;
        for v in row {
            if !first {
                out.push(',');
            }
            first = false;
            let _ = write!(out, "{v}");
        }
        out.push('\n');
    }
    out
}

/// Choroidal thickness per grid cell, μm.
#[derive(Debug, Clone, PartialEq)]
pub struct ThicknessMap {
    pub thickness: Array2<f64>,
    pub eye: Eye,
}

impl ThicknessMap {
    pub fn mean(&self) -> f64 {
        self.thickness.mean().unwrap_or(0.0)
    }

    /// `# eye=OD unit=um rows=R cols=C` header, then the grid.
    pub fn to_csv(&self) -> String {
        let (rows, cols) = self.thickness.dim();
        grid_csv(&format!("# eye={} unit=um rows={rows} cols={cols}", self.eye), &self.thickness)
    }

    pub fn to_pgm(&self) -> Array2<u8> {
        normalize_to_max(&self.thickness)
    }
}

pub fn thickness_map(bm: &BoundarySurface, csi: &BoundarySurface) -> Result<ThicknessMap, CtError> {
    if bm.eye != csi.eye {
        return Err(CtError::EyeMismatch(format!("BM is {}, CSI is {}", bm.eye, csi.eye)));
    }
    if bm.depths.dim() != csi.depths.dim() {
        return Err(CtError::DimMismatch(format!("{:?} vs {:?}", bm.depths.dim(), csi.depths.dim())));
    }
    if bm.axial_scale_um != csi.axial_scale_um {
        return Err(CtError::ScaleMismatch(bm.axial_scale_um, csi.axial_scale_um));
    }
    if let Some(((row, col), _)) = bm.depths.indexed_iter().find(|&(idx, &b)| csi.depths[idx] < b) {
        return Err(CtError::NegativeThickness { row, col });
    }
    let scale = bm.axial_scale_um;
    let thickness = Zip::from(&csi.depths).and(&bm.depths).map_collect(|&c, &b| (c - b) * scale);
    Ok(ThicknessMap { thickness, eye: bm.eye })
}

/// Mean of the two per-eye means, μm. Arguments may come in either order
/// but must cover both eyes.
pub fn mean_ct(a: &ThicknessMap, b: &ThicknessMap) -> Result<f64, CtError> {
    if a.eye == b.eye {
        return Err(CtError::EyeMismatch(format!("both maps are {}", a.eye)));
    }
    Ok((a.mean() + b.mean()) / 2.0)
}
