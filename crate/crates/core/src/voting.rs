//! Pairwise triangulation of same-scale features into weighted axis
//! candidates.
//!
//! An axis is the line `{x : x . (cos theta, sin theta) = rho}` with the
//! normal angle `theta` in `[0, pi)`. A feature pair votes for the
//! perpendicular bisector of its segment.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::features::FeaturePoint;

pub const DEFAULT_MAX_PER_SCALE: usize = 300;

/// One pair's axis hypothesis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisCandidate {
    pub theta: f64,
    pub rho: f64,
    /// `m * c * d` before normalization, `N * w / sum(w)` after.
    pub weight: f64,
    pub m: f64,
    pub c: f64,
    pub d: f64,
    pub pair: (usize, usize),
}

impl AxisCandidate {
    /// Candidate with unit components, for building sets by hand.
    pub fn new(theta: f64, rho: f64, weight: f64) -> Self {
        Self {
            theta,
            rho,
            weight,
            m: 1.0,
            c: 1.0,
            d: 1.0,
            pair: (0, 0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CandidateSet {
    pub candidates: Vec<AxisCandidate>,
    /// Sum of raw weights, in index order.
    pub total_raw_weight: f64,
    normalized: bool,
}

impl CandidateSet {
    pub fn new(candidates: Vec<AxisCandidate>) -> Self {
        let total_raw_weight = candidates.iter().map(|c| c.weight).sum();
        Self {
            candidates,
            total_raw_weight,
            normalized: false,
        }
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn weights(&self) -> impl Iterator<Item = f64> + '_ {
        self.candidates.iter().map(|c| c.weight)
    }
}

/// Same-scale index pairs `(i, j)` with `i < j`. Scales holding more than
/// `max_per_scale` features keep only the strongest ones (by magnitude, ties
/// by index).
pub fn generate_pairs(features: &[FeaturePoint], max_per_scale: usize) -> Vec<(usize, usize)> {
    let num_scales = features.iter().map(|f| f.scale + 1).max().unwrap_or(0);
    let mut pairs = Vec::new();
    for s in 0..num_scales {
        let mut idx: Vec<usize> = (0..features.len())
            .filter(|&i| features[i].scale == s)
            .collect();
        if idx.len() > max_per_scale {
            idx.sort_by(|&a, &b| {
                features[b]
                    .magnitude
                    .total_cmp(&features[a].magnitude)
                    .then(a.cmp(&b))
            });
            idx.truncate(max_per_scale);
            idx.sort_unstable();
        }
        for (a, &i) in idx.iter().enumerate() {
            for &j in &idx[a + 1..] {
                pairs.push((i, j));
            }
        }
    }
    pairs
}

/// Perpendicular bisector of the segment `(pi, pj)` as `(theta, rho)`.
///
/// The segment direction is the axis normal. It is canonicalized to the
/// upper half-plane before taking its angle, so the result does not depend
/// on argument order.
pub fn triangulate(pi: [f64; 2], pj: [f64; 2]) -> Result<(f64, f64)> {
    let (mut dx, mut dy) = (pj[0] - pi[0], pj[1] - pi[1]);
    if dx == 0.0 && dy == 0.0 {
        return Err(Error::DegeneratePair);
    }
    if dy < 0.0 || (dy == 0.0 && dx < 0.0) {
        dx = -dx;
        dy = -dy;
    }
    let mut theta = dy.atan2(dx);
    if theta >= PI {
        theta -= PI;
    }
    let mid = [(pi[0] + pj[0]) / 2.0, (pi[1] + pj[1]) / 2.0];
    let rho = mid[0] * theta.cos() + mid[1] * theta.sin();
    Ok((theta, rho))
}

/// Pair weight components for a pair voting for an axis with normal `theta`.
///
/// Returns `(m, c, d, omega)`:
/// * `m = sqrt(J_i J_j)`, the geometric mean of edge magnitudes;
/// * `c = |cos(tau_i + tau_j - 2 theta)|`, 1 when the edge directions are
///   mirror images across the axis;
/// * `d = 1 - 0.5 * sum |h_i - h_j|`, the texture histogram overlap;
/// * `omega = m * c * d`.
pub fn pair_weight(fi: &FeaturePoint, fj: &FeaturePoint, theta: f64) -> (f64, f64, f64, f64) {
    let m = (fi.magnitude * fj.magnitude).sqrt().clamp(0.0, 1.0);
    let c = (fi.direction + fj.direction - 2.0 * theta)
        .cos()
        .abs()
        .min(1.0);
    let l1: f64 = fi
        .texture
        .iter()
        .zip(&fj.texture)
        .map(|(a, b)| (a - b).abs())
        .sum();
    let d = (1.0 - 0.5 * l1).clamp(0.0, 1.0);
    (m, c, d, m * c * d)
}

/// Triangulates and weighs every pair. Degenerate pairs are skipped.
pub fn vote(features: &[FeaturePoint], pairs: &[(usize, usize)]) -> CandidateSet {
    let candidates: Vec<AxisCandidate> = pairs
        .par_iter()
        .filter_map(|&(i, j)| {
            let (fi, fj) = (&features[i], &features[j]);
            let (theta, rho) = triangulate(fi.pos, fj.pos).ok()?;
            let (m, c, d, weight) = pair_weight(fi, fj, theta);
            Some(AxisCandidate {
                theta,
                rho,
                weight,
                m,
                c,
                d,
                pair: (i, j),
            })
        })
        .collect();
    CandidateSet::new(candidates)
}

/// Rescales weights to `N * w / sum(w)`, so their mean is 1.
pub fn normalize_weights(mut set: CandidateSet) -> Result<CandidateSet> {
    let total: f64 = set.weights().sum();
    if set.is_empty() || !(total > 0.0) {
        return Err(Error::NoEvidence("all candidate weights are zero".into()));
    }
    let n = set.len() as f64;
    for c in &mut set.candidates {
        c.weight = n * c.weight / total;
    }
    set.total_raw_weight = total;
    set.normalized = true;
    Ok(set)
}
