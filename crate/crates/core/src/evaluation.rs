//! Scoring detections against ground-truth axes.
//!
//! A detection matches a ground-truth axis when their orientations differ by
//! less than 10 degrees (modulo 180) and their centers are closer than 20% of
//! the shorter of the two segments. Several detections may match the same
//! ground truth; each detection counts at most once.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A line segment in pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub p1: [f64; 2],
    pub p2: [f64; 2],
}

/// Ground-truth axes are plain segments.
pub type GtAxis = Segment;

impl Segment {
    pub fn new(p1: [f64; 2], p2: [f64; 2]) -> Result<Self> {
        let s = Self { p1, p2 };
        if !(s.length() > 0.0) {
            return Err(Error::Parse(format!(
                "zero-length segment at ({}, {})",
                p1[0], p1[1]
            )));
        }
        Ok(s)
    }

    pub fn center(&self) -> [f64; 2] {
        [(self.p1[0] + self.p2[0]) / 2.0, (self.p1[1] + self.p2[1]) / 2.0]
    }

    /// Orientation in `[0, pi)`.
    pub fn angle(&self) -> f64 {
        let a = (self.p2[1] - self.p1[1]).atan2(self.p2[0] - self.p1[0]);
        let a = a.rem_euclid(PI);
        if a >= PI {
            0.0
        } else {
            a
        }
    }

    pub fn length(&self) -> f64 {
        (self.p2[0] - self.p1[0]).hypot(self.p2[1] - self.p1[1])
    }
}

/// Orientation difference modulo `pi`, in `[0, pi/2]`.
pub fn angle_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(PI);
    d.min(PI - d)
}

fn center_distance(a: &Segment, b: &Segment) -> f64 {
    let (ca, cb) = (a.center(), b.center());
    (ca[0] - cb[0]).hypot(ca[1] - cb[1])
}

/// A detection with its confidence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scored {
    pub segment: Segment,
    pub score: f64,
}

/// Angle and center-distance tolerances shared by matching and clustering.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    pub angle_deg: f64,
    /// Fraction of the shorter segment's length.
    pub center_frac: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            angle_deg: 10.0,
            center_frac: 0.2,
        }
    }
}

impl Tolerance {
    pub fn accepts(&self, a: &Segment, b: &Segment) -> bool {
        angle_distance(a.angle(), b.angle()) < self.angle_deg.to_radians()
            && center_distance(a, b) < self.center_frac * a.length().min(b.length())
    }
}

/// Evaluation settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalParams {
    pub match_angle_deg: f64,
    pub match_center_frac: f64,
    pub cluster_angle_deg: f64,
    pub cluster_center_frac: f64,
}

impl Default for EvalParams {
    fn default() -> Self {
        Self {
            match_angle_deg: 10.0,
            match_center_frac: 0.2,
            cluster_angle_deg: 10.0,
            cluster_center_frac: 0.2,
        }
    }
}

impl EvalParams {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.match_angle_deg,
            self.match_center_frac,
            self.cluster_angle_deg,
            self.cluster_center_frac,
        ];
        if all.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(Error::Config("evaluation tolerances must be > 0".into()));
        }
        Ok(())
    }

    pub fn matching(&self) -> Tolerance {
        Tolerance {
            angle_deg: self.match_angle_deg,
            center_frac: self.match_center_frac,
        }
    }

    pub fn clustering(&self) -> Tolerance {
        Tolerance {
            angle_deg: self.cluster_angle_deg,
            center_frac: self.cluster_center_frac,
        }
    }
}

/// True when `det` matches `gt` under the default 10 degree / 20% rule.
pub fn axis_match(det: &Segment, gt: &GtAxis) -> bool {
    Tolerance::default().accepts(det, gt)
}

/// Indices ordered by score descending, input order on ties.
fn by_score(dets: &[Scored]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..dets.len()).collect();
    order.sort_by(|&a, &b| dets[b].score.total_cmp(&dets[a].score).then(a.cmp(&b)));
    order
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    /// Matched ground-truth index per detection, in input order.
    pub matches: Vec<Option<usize>>,
}

/// Counts true positives, false positives and missed ground truth.
///
/// Each detection is assigned to its best matching ground truth (smallest
/// angle difference, then smallest center distance).
pub fn match_axes(dets: &[Scored], gts: &[GtAxis], tol: &Tolerance) -> Assignment {
    let mut matches = vec![None; dets.len()];
    let mut hit = vec![false; gts.len()];
    for i in by_score(dets) {
        let det = &dets[i].segment;
        let best = gts
            .iter()
            .enumerate()
            .filter(|(_, gt)| tol.accepts(det, gt))
            .min_by(|(_, a), (_, b)| {
                let ka = (angle_distance(det.angle(), a.angle()), center_distance(det, a));
                let kb = (angle_distance(det.angle(), b.angle()), center_distance(det, b));
                ka.0.total_cmp(&kb.0).then(ka.1.total_cmp(&kb.1))
            })
            .map(|(g, _)| g);
        if let Some(g) = best {
            hit[g] = true;
        }
        matches[i] = best;
    }
    let tp = matches.iter().filter(|m| m.is_some()).count();
    Assignment {
        tp,
        fp: dets.len() - tp,
        fn_: hit.iter().filter(|h| !**h).count(),
        matches,
    }
}

/// Greedy clustering: the strongest remaining detection absorbs every
/// remaining detection within tolerance. Returns the cluster
/// representatives, strongest first.
pub fn cluster_detections(dets: &[Scored], tol: &Tolerance) -> Vec<Scored> {
    let order = by_score(dets);
    let mut taken = vec![false; dets.len()];
    let mut reps = Vec::new();
    for (a, &i) in order.iter().enumerate() {
        if taken[i] {
            continue;
        }
        taken[i] = true;
        reps.push(dets[i]);
        for &j in &order[a + 1..] {
            if !taken[j] && tol.accepts(&dets[i].segment, &dets[j].segment) {
                taken[j] = true;
            }
        }
    }
    reps
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchReport {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl MatchReport {
    /// Rates from counts. An empty denominator gives a rate of 1.
    pub fn from_counts(tp: usize, fp: usize, fn_: usize) -> Self {
        let rate = |num: usize, den: usize| {
            if den == 0 {
                1.0
            } else {
                num as f64 / den as f64
            }
        };
        let precision = rate(tp, tp + fp);
        let recall = rate(tp, tp + fn_);
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        Self {
            tp,
            fp,
            fn_,
            precision,
            recall,
            f1,
        }
    }
}

/// One image's detections and ground truth.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ImageResult {
    pub detections: Vec<Scored>,
    pub ground_truth: Vec<GtAxis>,
}

/// Dataset totals at a score threshold: detections below it are dropped,
/// the rest are clustered and matched per image.
pub fn evaluate_at(images: &[ImageResult], threshold: f64, params: &EvalParams) -> MatchReport {
    let (mut tp, mut fp, mut fn_) = (0, 0, 0);
    for img in images {
        let kept: Vec<Scored> = img
            .detections
            .iter()
            .filter(|d| d.score >= threshold)
            .copied()
            .collect();
        let reps = cluster_detections(&kept, &params.clustering());
        let a = match_axes(&reps, &img.ground_truth, &params.matching());
        tp += a.tp;
        fp += a.fp;
        fn_ += a.fn_;
    }
    MatchReport::from_counts(tp, fp, fn_)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrPoint {
    pub threshold: f64,
    pub report: MatchReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrCurve {
    /// One point per distinct detection score, thresholds descending.
    pub points: Vec<PrPoint>,
    pub max_f1: f64,
    /// Threshold achieving `max_f1` (the highest one on ties); `None` when
    /// there are no detections.
    pub max_f1_threshold: Option<f64>,
}

impl PrCurve {
    /// Report at the max-F1 threshold, or with every detection dropped when
    /// there are none.
    pub fn best(&self, images: &[ImageResult], params: &EvalParams) -> MatchReport {
        evaluate_at(
            images,
            self.max_f1_threshold.unwrap_or(f64::INFINITY),
            params,
        )
    }
}

/// Sweeps the global score threshold over all detection scores.
pub fn pr_curve(images: &[ImageResult], params: &EvalParams) -> Result<PrCurve> {
    if images.iter().all(|img| img.ground_truth.is_empty()) {
        return Err(Error::InvalidBenchmark("no ground-truth axes".into()));
    }
    let mut thresholds: Vec<f64> = images
        .iter()
        .flat_map(|img| img.detections.iter().map(|d| d.score))
        .collect();
    thresholds.sort_by(|a, b| b.total_cmp(a));
    thresholds.dedup();

    let points: Vec<PrPoint> = thresholds
        .iter()
        .map(|&t| PrPoint {
            threshold: t,
            report: evaluate_at(images, t, params),
        })
        .collect();
    let mut max_f1 = 0.0;
    let mut max_f1_threshold = None;
    for p in &points {
        if max_f1_threshold.is_none() || p.report.f1 > max_f1 {
            max_f1 = p.report.f1;
            max_f1_threshold = Some(p.threshold);
        }
    }
    Ok(PrCurve {
        points,
        max_f1,
        max_f1_threshold,
    })
}
