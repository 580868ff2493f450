//! End-to-end detection: features, voting, density, peaks.

use crate::config::PipelineConfig;
use crate::density::{evaluate_joint_density, DensityGrid};
use crate::error::{Error, Result};
use crate::features::{extract_features, FeaturePoint};
use crate::image::GrayImage;
use crate::peaks::{axis_extent, find_peaks, support_hull, supporting_pairs, Peak, SymmetryAxis};
use crate::voting::{generate_pairs, normalize_weights, vote, CandidateSet};

/// A reported axis together with the hull of its supporting features.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub axis: SymmetryAxis,
    /// Pixel-space convex hull of the supporting features.
    pub hull: Vec<[f64; 2]>,
}

/// Every intermediate product of one run.
#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub features: Vec<FeaturePoint>,
    pub candidates: CandidateSet,
    pub grid: DensityGrid,
    pub peaks: Vec<Peak>,
    pub detections: Vec<Detection>,
}

/// Runs the full pipeline and keeps the intermediates.
pub fn run(image: &GrayImage, config: &PipelineConfig) -> Result<PipelineOutput> {
    config.validate()?;
    let features = extract_features(image, &config.features)?;
    if features.is_empty() {
        return Err(Error::NoEvidence("no wavelet response above threshold".into()));
    }
    let pairs = generate_pairs(&features, config.voting.max_per_scale);
    if pairs.is_empty() {
        return Err(Error::NoEvidence("no scale has two features".into()));
    }
    let candidates = normalize_weights(vote(&features, &pairs))?;
    let params = config.density.kernel();
    let grid = evaluate_joint_density(&candidates, config.density.grid(), params)?;
    let peaks = find_peaks(&grid, &config.peaks)?;

    let (w, h) = (image.width(), image.height());
    let detections = peaks
        .iter()
        .filter_map(|peak| {
            let supports = supporting_pairs(peak, &candidates, &params);
            // Peaks without support or with zero extent are unreportable.
            let axis = axis_extent(peak, &supports, &candidates, &features, w, h).ok()?;
            let hull = support_hull(&supports, &candidates, &features, w, h);
            Some(Detection { axis, hull })
        })
        .collect();

    Ok(PipelineOutput {
        features,
        candidates,
        grid,
        peaks,
        detections,
    })
}

/// Detected axes, strongest first.
pub fn detect(image: &GrayImage, config: &PipelineConfig) -> Result<Vec<SymmetryAxis>> {
    Ok(run(image, config)?
        .detections
        .into_iter()
        .map(|d| d.axis)
        .collect())
}
