//! File formats: detections, ground truth, manifests, density exports and
//! debug dumps.
//!
//! Pixel coordinates everywhere use the continuous frame where pixel `(c, r)`
//! covers `[c, c + 1) x [r, r + 1)`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::density::{DensityGrid, GridSpec, KernelParams, RHO_MAX, RHO_MIN};
use crate::error::{Error, Result};
use crate::evaluation::{GtAxis, PrCurve, Scored, Segment};
use crate::features::FeaturePoint;
use crate::peaks::SymmetryAxis;
use crate::voting::CandidateSet;

/// One detected axis as written to detection JSON.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionRecord {
    pub x1: f64,
    pub y1: f64,
    pub x2: f64,
    pub y2: f64,
    pub theta: f64,
    pub rho: f64,
    pub score: f64,
    pub support_count: usize,
}

impl From<&SymmetryAxis> for DetectionRecord {
    fn from(a: &SymmetryAxis) -> Self {
        let [[x1, y1], [x2, y2]] = a.endpoints;
        Self {
            x1,
            y1,
            x2,
            y2,
            theta: a.theta,
            rho: a.rho,
            score: a.score,
            support_count: a.support_count,
        }
    }
}

impl DetectionRecord {
    pub fn to_scored(&self) -> Result<Scored> {
        Ok(Scored {
            segment: Segment::new([self.x1, self.y1], [self.x2, self.y2])?,
            score: self.score,
        })
    }
}

/// Detection JSON array, sorted by score descending.
pub fn detections_to_json(axes: &[SymmetryAxis]) -> String {
    let mut records: Vec<DetectionRecord> = axes.iter().map(DetectionRecord::from).collect();
    records.sort_by(|a, b| b.score.total_cmp(&a.score));
    serde_json::to_string_pretty(&records).expect("records serialize") + "\n"
}

pub fn parse_detections(text: &str) -> Result<Vec<DetectionRecord>> {
    serde_json::from_str(text).map_err(|e| Error::Parse(format!("detection JSON: {e}")))
}

/// Canonical ground truth: one `x1 y1 x2 y2` axis per line. Blank lines and
/// lines starting with `#` are ignored.
pub fn parse_ground_truth(text: &str) -> Result<Vec<GtAxis>> {
    numeric_rows(text, false)?
        .into_iter()
        .map(|r| Segment::new([r[0], r[1]], [r[2], r[3]]))
        .collect()
}

pub fn format_ground_truth(axes: &[GtAxis]) -> String {
    let mut out = String::new();
    for a in axes {
        writeln!(out, "{} {} {} {}", a.p1[0], a.p1[1], a.p2[0], a.p2[1]).unwrap();
    }
    out
}

/// Source layouts accepted by [`convert_ground_truth`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GtFormat {
    /// Text export of PSU annotations: one axis per row, `x1 y1 x2 y2` as
    /// 1-based pixel indices separated by whitespace or commas.
    Psu,
    /// NY annotations as CSV: `x1,y1,x2,y2` 0-based pixel indices, with an
    /// optional header row.
    Ny,
    Canonical,
}

impl std::str::FromStr for GtFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "psu" => Ok(Self::Psu),
            "ny" | "nyu" => Ok(Self::Ny),
            "canonical" => Ok(Self::Canonical),
            other => Err(Error::Parse(format!("unknown ground-truth format `{other}`"))),
        }
    }
}

/// Reads ground truth in `format` and returns axes in the canonical frame.
/// Pixel indices map to pixel centers.
pub fn convert_ground_truth(text: &str, format: GtFormat) -> Result<Vec<GtAxis>> {
    let (shift, header_ok) = match format {
        GtFormat::Psu => (-0.5, false),
        GtFormat::Ny => (0.5, true),
        GtFormat::Canonical => (0.0, false),
    };
    numeric_rows(text, header_ok)?
        .into_iter()
        .map(|r| Segment::new([r[0] + shift, r[1] + shift], [r[2] + shift, r[3] + shift]))
        .collect()
}

fn numeric_rows(text: &str, allow_header: bool) -> Result<Vec<[f64; 4]>> {
    let mut rows = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|f| !f.is_empty())
            .collect();
        let parsed: std::result::Result<Vec<f64>, _> = fields.iter().map(|f| f.parse()).collect();
        match parsed {
            Ok(v) if v.len() == 4 && v.iter().all(|x| x.is_finite()) => {
                rows.push([v[0], v[1], v[2], v[3]])
            }
            Err(_) if allow_header && rows.is_empty() => continue,
            _ => {
                return Err(Error::Parse(format!(
                    "line {}: expected four numbers, got `{line}`",
                    n + 1
                )))
            }
        }
    }
    Ok(rows)
}

/// Maps image names to image and ground-truth files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub entries: Vec<ManifestEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    /// Detections are looked up as `<name>.json`.
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image: Option<PathBuf>,
    pub ground_truth: PathBuf,
}

impl Manifest {
    /// Loads a manifest; relative paths resolve against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut m: Self = serde_json::from_str(&text)
            .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for e in &mut m.entries {
            e.ground_truth = base.join(&e.ground_truth);
            if let Some(img) = &mut e.image {
                *img = base.join(&*img);
            }
        }
        Ok(m)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityHeader {
    pub n_rho: usize,
    pub n_theta: usize,
    pub g: f64,
    pub k: f64,
    pub rho_min: f64,
    pub rho_max: f64,
}

pub fn density_header(grid: &DensityGrid) -> DensityHeader {
    DensityHeader {
        n_rho: grid.spec.n_rho,
        n_theta: grid.spec.n_theta,
        g: grid.params.g,
        k: grid.params.k,
        rho_min: RHO_MIN,
        rho_max: RHO_MAX,
    }
}

/// Density matrix as CSV, one row per `rho` bin.
pub fn density_csv(grid: &DensityGrid) -> String {
    let mut out = String::with_capacity(grid.values().len() * 12);
    for i in 0..grid.spec.n_rho {
        for (j, v) in grid.row(i).iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            write!(out, "{v}").unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn parse_density(header: &DensityHeader, csv: &str) -> Result<DensityGrid> {
    let mut values = Vec::with_capacity(header.n_rho * header.n_theta);
    for (n, line) in csv.lines().filter(|l| !l.trim().is_empty()).enumerate() {
        let before = values.len();
        for f in line.split(',') {
            values.push(
                f.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("density row {}: {e}", n + 1)))?,
            );
        }
        if values.len() - before != header.n_theta {
            return Err(Error::Parse(format!(
                "density row {} has {} columns, expected {}",
                n + 1,
                values.len() - before,
                header.n_theta
            )));
        }
    }
    DensityGrid::from_values(
        GridSpec {
            n_rho: header.n_rho,
            n_theta: header.n_theta,
        },
        KernelParams {
            g: header.g,
            k: header.k,
        },
        values,
    )
}

#[derive(Serialize)]
struct FeatureRecord<'a> {
    x: f64,
    y: f64,
    scale: usize,
    #[serde(rename = "J")]
    magnitude: f64,
    tau: f64,
    hist: &'a [f64],
}

/// Feature dump: JSON array of `{x, y, scale, J, tau, hist}` in normalized
/// coordinates.
pub fn features_to_json(features: &[FeaturePoint]) -> String {
    let records: Vec<FeatureRecord> = features
        .iter()
        .map(|f| FeatureRecord {
            x: f.pos[0],
            y: f.pos[1],
            scale: f.scale,
            magnitude: f.magnitude,
            tau: f.direction,
            hist: &f.texture,
        })
        .collect();
    serde_json::to_string(&records).expect("features serialize") + "\n"
}

/// Candidate dump: CSV with columns `theta,rho,m,c,d,omega,i,j`.
pub fn candidates_csv(set: &CandidateSet) -> String {
    let mut out = String::from("theta,rho,m,c,d,omega,i,j\n");
    for c in &set.candidates {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            c.theta, c.rho, c.m, c.c, c.d, c.weight, c.pair.0, c.pair.1
        )
        .unwrap();
    }
    out
}

/// PR curve CSV with columns `threshold,precision,recall`.
pub fn pr_curve_csv(curve: &PrCurve) -> String {
    let mut out = String::from("threshold,precision,recall\n");
    for p in &curve.points {
        writeln!(out, "{},{},{}", p.threshold, p.report.precision, p.report.recall).unwrap();
    }
    out
}
