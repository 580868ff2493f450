//! Peak extraction from the density grid and spatial extent of each axis.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::density::{DensityGrid, KernelParams};
use crate::error::{Error, Result};
use crate::features::{denormalize_point, FeaturePoint};
use crate::hull::convex_hull;
use crate::voting::CandidateSet;

/// Non-maximal suppression settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PeakParams {
    /// Suppression half-window over `rho`, in bins. About one bandwidth `g`
    /// at the default grid.
    pub nms_rho_radius: usize,
    /// Suppression half-window over `theta`, in bins. Wraps with period `pi`.
    pub nms_theta_radius: usize,
    /// Peaks below this fraction of the global maximum are ignored.
    pub rel_threshold: f64,
    pub top_k: usize,
}

impl Default for PeakParams {
    fn default() -> Self {
        Self {
            nms_rho_radius: 17,
            nms_theta_radius: 5,
            rel_threshold: 0.05,
            top_k: 5,
        }
    }
}

impl PeakParams {
    pub fn validate(&self) -> Result<()> {
        if self.nms_rho_radius < 1 || self.nms_theta_radius < 1 {
            return Err(Error::Config("peaks NMS radii must be >= 1".into()));
        }
        if !(self.rel_threshold > 0.0 && self.rel_threshold <= 1.0) {
            return Err(Error::Config("peaks.rel_threshold must lie in (0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub rho_bin: usize,
    pub theta_bin: usize,
    /// Center of the owning cell.
    pub rho: f64,
    pub theta: f64,
    pub score: f64,
}

/// A detected axis with its extent in pixel coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetryAxis {
    pub theta: f64,
    pub rho: f64,
    pub score: f64,
    /// Segment endpoints in pixels, in lexicographic order.
    pub endpoints: [[f64; 2]; 2],
    pub support_count: usize,
}

/// Local maxima of the grid, strongest first.
///
/// A cell is kept when it beats every other cell in its
/// `(2 r_rho + 1) x (2 r_theta + 1)` window (lower flat index wins ties) and
/// reaches `rel_threshold` of the global maximum. `theta` wraps circularly;
/// the `rho` window is clipped at the grid ends.
pub fn find_peaks(grid: &DensityGrid, params: &PeakParams) -> Result<Vec<Peak>> {
    params.validate()?;
    let spec = grid.spec;
    let (n_rho, n_theta) = (spec.n_rho, spec.n_theta);
    let max = grid.max();
    if !(max > 0.0) {
        return Err(Error::NoEvidence("density grid is zero everywhere".into()));
    }
    let floor = params.rel_threshold * max;
    let r_rho = params.nms_rho_radius;
    let r_theta = params.nms_theta_radius.min(n_theta / 2);

    let mut peaks: Vec<Peak> = (0..n_rho)
        .into_par_iter()
        .flat_map_iter(|i| {
            let mut found = Vec::new();
            for j in 0..n_theta {
                let v = grid.get(i, j);
                if v < floor || !(v > 0.0) {
                    continue;
                }
                let here = i * n_theta + j;
                let dominated = (i.saturating_sub(r_rho)..=(i + r_rho).min(n_rho - 1)).any(|a| {
                    (0..=2 * r_theta).any(|t| {
                        let b = (j + n_theta + t - r_theta) % n_theta;
                        let there = a * n_theta + b;
                        if there == here {
                            return false;
                        }
                        let u = grid.get(a, b);
                        u > v || (u == v && there < here)
                    })
                });
                if !dominated {
                    found.push(Peak {
                        rho_bin: i,
                        theta_bin: j,
                        rho: spec.rho_center(i),
                        theta: spec.theta_center(j),
                        score: v,
                    });
                }
            }
            found
        })
        .collect();

    peaks.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then((a.rho_bin, a.theta_bin).cmp(&(b.rho_bin, b.theta_bin)))
    });
    peaks.truncate(params.top_k);
    Ok(peaks)
}

/// Distance between two line orientations on the doubled circle, in `[0, pi]`.
pub fn doubled_angle_distance(a: f64, b: f64) -> f64 {
    let d = (2.0 * (a - b)).rem_euclid(2.0 * PI);
    d.min(2.0 * PI - d)
}

/// Indices of positive-weight candidates within `2 g` in `rho` and
/// `2 / sqrt(k)` on the doubled circle of the peak.
pub fn supporting_pairs(peak: &Peak, set: &CandidateSet, params: &KernelParams) -> Vec<usize> {
    let rho_tol = 2.0 * params.g;
    let ang_tol = if params.k > 0.0 {
        2.0 / params.k.sqrt()
    } else {
        f64::INFINITY
    };
    set.candidates
        .iter()
        .enumerate()
        .filter(|(_, c)| {
            c.weight > 0.0
                && (c.rho - peak.rho).abs() <= rho_tol
                && doubled_angle_distance(c.theta, peak.theta) <= ang_tol
        })
        .map(|(i, _)| i)
        .collect()
}

fn support_points<'a>(
    supports: &'a [usize],
    set: &'a CandidateSet,
    features: &'a [FeaturePoint],
) -> impl Iterator<Item = [f64; 2]> + 'a {
    supports.iter().flat_map(move |&s| {
        let (i, j) = set.candidates[s].pair;
        [features[i].pos, features[j].pos]
    })
}

/// Segment of the peak's line spanned by its supporting features.
///
/// Every feature of every supporting pair is projected onto the line; the
/// two extreme projections (the extreme points of the supports' convex hull
/// along the axis direction) become the endpoints, mapped back to pixels.
pub fn axis_extent(
    peak: &Peak,
    supports: &[usize],
    set: &CandidateSet,
    features: &[FeaturePoint],
    width: usize,
    height: usize,
) -> Result<SymmetryAxis> {
    let (sin, cos) = peak.theta.sin_cos();
    let dir = [-sin, cos];
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for p in support_points(supports, set, features) {
        let s = p[0] * dir[0] + p[1] * dir[1];
        lo = lo.min(s);
        hi = hi.max(s);
    }
    if !(hi - lo > 1e-12) {
        return Err(Error::DegenerateExtent);
    }
    let on_line = |s: f64| {
        denormalize_point(
            [peak.rho * cos + s * dir[0], peak.rho * sin + s * dir[1]],
            width as f64,
            height as f64,
        )
    };
    let mut endpoints = [on_line(lo), on_line(hi)];
    if endpoints[1] < endpoints[0] {
        endpoints.swap(0, 1);
    }
    Ok(SymmetryAxis {
        theta: peak.theta,
        rho: peak.rho,
        score: peak.score,
        endpoints,
        support_count: supports.len(),
    })
}

/// Convex hull, in pixels, of the features voting for a peak.
pub fn support_hull(
    supports: &[usize],
    set: &CandidateSet,
    features: &[FeaturePoint],
    width: usize,
    height: usize,
) -> Vec<[f64; 2]> {
    let pts: Vec<[f64; 2]> = support_points(supports, set, features)
        .map(|p| denormalize_point(p, width as f64, height as f64))
        .collect();
    convex_hull(&pts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::{evaluate_joint_density, GridSpec};
    use crate::voting::AxisCandidate;

    fn grid_with(spec: GridSpec, cells: &[(usize, usize, f64)]) -> DensityGrid {
        let mut v = vec![0.0; spec.n_rho * spec.n_theta];
        for &(i, j, x) in cells {
            v[i * spec.n_theta + j] = x;
        }
        DensityGrid::from_values(spec, KernelParams::default(), v).unwrap()
    }

    fn feature_at(pos: [f64; 2]) -> FeaturePoint {
        FeaturePoint {
            pos,
            scale: 0,
            magnitude: 1.0,
            direction: 0.0,
            texture: vec![1.0],
        }
    }

    #[test]
    fn single_candidate_single_peak() {
        let spec = GridSpec::default();
        let set = CandidateSet::new(vec![AxisCandidate::new(0.9, -0.3, 1.0)]);
        let grid = evaluate_joint_density(&set, spec, KernelParams::default()).unwrap();
        let peaks = find_peaks(&grid, &PeakParams::default()).unwrap();
        assert_eq!(peaks.len(), 1);
        assert_eq!(peaks[0].rho_bin, spec.rho_bin(-0.3));
        assert_eq!(peaks[0].theta_bin, spec.theta_bin(0.9));
        let support = supporting_pairs(&peaks[0], &set, &KernelParams::default());
        assert_eq!(support, vec![0]);
    }

    #[test]
    fn separated_candidates_give_equal_peaks() {
        let spec = GridSpec::default();
        let set = CandidateSet::new(vec![
            AxisCandidate::new(spec.theta_center(30), spec.rho_center(200), 1.0),
            AxisCandidate::new(spec.theta_center(120), spec.rho_center(600), 1.0),
        ]);
        let grid = evaluate_joint_density(&set, spec, KernelParams::default()).unwrap();
        let peaks = find_peaks(&grid, &PeakParams::default()).unwrap();
        assert_eq!(peaks.len(), 2);
        assert!((peaks[0].score - peaks[1].score).abs() < 1e-9 * peaks[0].score);
    }

    #[test]
    fn theta_wraps_around() {
        let spec = GridSpec { n_rho: 50, n_theta: 40 };
        let grid = grid_with(spec, &[(20, 0, 1.0), (20, 39, 2.0)]);
        let peaks = find_peaks(&grid, &PeakParams::default()).unwrap();
        assert_eq!(peaks.len(), 1);
        assert_eq!((peaks[0].rho_bin, peaks[0].theta_bin), (20, 39));
    }

    #[test]
    fn plateau_resolves_to_lowest_index() {
        let spec = GridSpec { n_rho: 50, n_theta: 40 };
        let grid = grid_with(spec, &[(20, 10, 1.0), (20, 11, 1.0), (21, 10, 1.0)]);
        let peaks = find_peaks(&grid, &PeakParams::default()).unwrap();
        assert_eq!(peaks.len(), 1);
        assert_eq!((peaks[0].rho_bin, peaks[0].theta_bin), (20, 10));
    }

    #[test]
    fn threshold_and_top_k() {
        let spec = GridSpec { n_rho: 200, n_theta: 40 };
        let cells: Vec<_> = (0..6).map(|n| (10 + 30 * n, 5, 1.0 + n as f64)).collect();
        let grid = grid_with(spec, &cells);
        let peaks = find_peaks(&grid, &PeakParams::default()).unwrap();
        assert_eq!(peaks.len(), 5);
        assert!(peaks.windows(2).all(|w| w[0].score >= w[1].score));
        let strict = PeakParams { rel_threshold: 0.9, ..Default::default() };
        assert_eq!(find_peaks(&grid, &strict).unwrap().len(), 1);
    }

    #[test]
    fn zero_grid_is_no_evidence() {
        let grid = grid_with(GridSpec { n_rho: 10, n_theta: 10 }, &[]);
        assert!(matches!(
            find_peaks(&grid, &PeakParams::default()),
            Err(Error::NoEvidence(_))
        ));
    }

    #[test]
    fn support_tolerances() {
        let params = KernelParams::default();
        let peak = Peak { rho_bin: 0, theta_bin: 0, rho: 0.1, theta: 0.5, score: 1.0 };
        let set = CandidateSet::new(vec![
            AxisCandidate::new(0.5, 0.1 + 3.0 * params.g, 1.0),
            AxisCandidate::new(0.5, 0.1 + 1.5 * params.g, 1.0),
            AxisCandidate::new(0.5 + 0.15, 0.1, 1.0),
            AxisCandidate::new(0.5 + 0.17, 0.1, 1.0),
            AxisCandidate::new(0.5, 0.1, 0.0),
        ]);
        assert_eq!(supporting_pairs(&peak, &set, &params), vec![1, 2]);
        // 2/sqrt(40) on the doubled circle is about 9.06 degrees of theta.
        let half = (2.0 / 40f64.sqrt() / 2.0).to_degrees();
        assert!((half - 9.06).abs() < 0.01);
    }

    #[test]
    fn extent_examples() {
        let peak = Peak { rho_bin: 0, theta_bin: 0, rho: 0.0, theta: 0.0, score: 1.0 };
        // A single pair mirrored across x = 0 projects to one point.
        let feats = vec![feature_at([-0.2, 0.1]), feature_at([0.2, 0.1])];
        let mut cand = AxisCandidate::new(0.0, 0.0, 1.0);
        cand.pair = (0, 1);
        let set = CandidateSet::new(vec![cand]);
        assert!(matches!(
            axis_extent(&peak, &[0], &set, &feats, 200, 200),
            Err(Error::DegenerateExtent)
        ));

        let feats = vec![
            feature_at([-0.1, -0.2]),
            feature_at([0.1, 0.3]),
            feature_at([0.05, 0.0]),
            feature_at([-0.05, 0.1]),
        ];
        let mut a = AxisCandidate::new(0.0, 0.0, 1.0);
        a.pair = (0, 1);
        let mut b = a;
        b.pair = (2, 3);
        let set = CandidateSet::new(vec![a, b]);
        let axis = axis_extent(&peak, &[0], &set, &feats, 200, 200).unwrap();
        assert_eq!(axis.endpoints, [[100.0, 60.0], [100.0, 160.0]]);
        // Interior points leave the endpoints alone.
        let both = axis_extent(&peak, &[0, 1], &set, &feats, 200, 200).unwrap();
        assert_eq!(both.endpoints, axis.endpoints);
        assert_eq!(both.support_count, 2);
    }
}
