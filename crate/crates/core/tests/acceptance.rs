//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any criterion fails.
//!
//! Criterion 9 needs an external benchmark: set `SYMDETECT_BENCH_MANIFEST` to
//! a manifest JSON and `SYMDETECT_BENCH_IMAGES` to the image directory.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use symdetect::density::{evaluate_joint_density, vmf_kernel, vmf_norm_const};
use symdetect::evaluation::{evaluate_at, pr_curve, EvalParams, ImageResult, Scored, Segment};
use symdetect::io::{parse_ground_truth, pr_curve_csv, Manifest};
use symdetect::special::bessel_i0;
use symdetect::voting::{normalize_weights, triangulate};
use symdetect::{
    run, synthetic, AxisCandidate, CandidateSet, GrayImage, GridSpec, KernelParams, PipelineConfig,
};

// Tolerances and thresholds, pinned.
const G: f64 = 0.03;
const K: f64 = 40.0;
const NORMALIZATION_TOL: f64 = 1e-3;
const NORMALIZATION_MAX_SECS: f64 = 30.0;
const ORACLE_REL_TOL: f64 = 1e-9;
const BESSEL_REL_TOL: f64 = 1e-8;
const BESSEL_ORACLE_TERMS: usize = 30;
const BESSEL_ARGS: [f64; 7] = [0.0, 0.5, 1.0, 5.0, 40.0, 100.0, 500.0];
const TRIANGULATION_TOL: f64 = 1e-12;
const SYNTHETIC_SIZE: usize = 256;
const SYNTHETIC_THETA_BINS: f64 = 2.0;
const SYNTHETIC_RHO_BINS: f64 = 3.0;
const SYNTHETIC_MAX_SECS: f64 = 10.0;
const VMF_QUADRATURE_POINTS: usize = 100_000;
const VMF_TOL: f64 = 1e-6;
const THREAD_COUNTS: [usize; 3] = [1, 4, 8];

struct Outcome {
    passed: bool,
    detail: String,
    /// Bit patterns of the criterion's numeric output, for determinism checks.
    fingerprint: Vec<u64>,
}

impl Outcome {
    fn new(passed: bool, detail: String) -> Self {
        Self {
            passed,
            detail,
            fingerprint: Vec::new(),
        }
    }
}

fn pool(threads: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .expect("thread pool")
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

/// 1000 candidates with random weights, `|rho| < sqrt(2)/2 - 4g`.
fn random_candidates(seed: u64) -> CandidateSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bound = FRAC_1_SQRT_2 - 4.0 * G;
    let cands = (0..1000)
        .map(|_| {
            AxisCandidate::new(
                rng.gen_range(0.0..PI),
                rng.gen_range(-bound..bound),
                rng.gen_range(0.05..1.0),
            )
        })
        .collect();
    normalize_weights(CandidateSet::new(cands)).expect("positive weights")
}

fn criterion_1() -> Outcome {
    let set = random_candidates(1);
    let start = Instant::now();
    let grid = pool(1).install(|| {
        evaluate_joint_density(&set, GridSpec::default(), KernelParams { g: G, k: K })
    });
    let elapsed = start.elapsed();
    let grid = grid.expect("density");
    let integral = grid.integral();
    let passed = (integral - 1.0).abs() <= NORMALIZATION_TOL && secs(elapsed) < NORMALIZATION_MAX_SECS;
    let mut out = Outcome::new(
        passed,
        format!(
            "integral = {integral:.8} (tol {NORMALIZATION_TOL}), {:.2}s single-threaded (limit {NORMALIZATION_MAX_SECS}s)",
            secs(elapsed)
        ),
    );
    out.fingerprint = grid.values().iter().map(|v| v.to_bits()).collect();
    out
}

/// Converged power series for `I0`, independent of the library.
fn i0_series(x: f64, terms: usize) -> f64 {
    let q = x * x / 4.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    for m in 1..terms {
        term *= q / (m * m) as f64;
        sum += term;
    }
    sum
}

/// Literal double loop over the weighted joint estimator.
fn naive_density(set: &CandidateSet, rho: f64, theta: f64) -> f64 {
    let n = set.len() as f64;
    let c = 1.0 / (2.0 * PI * i0_series(K, 200));
    let y = [(2.0 * theta).cos(), (2.0 * theta).sin()];
    let mut sum = 0.0;
    for cand in &set.candidates {
        let mu = [(2.0 * cand.theta).cos(), (2.0 * cand.theta).sin()];
        let u = (rho - cand.rho) / G;
        let gauss = (-0.5 * u * u).exp() / (2.0 * PI).sqrt();
        sum += cand.weight * gauss * (K * (y[0] * mu[0] + y[1] * mu[1])).exp();
    }
    c / (n * G) * sum
}

fn criterion_2() -> Outcome {
    let set = random_candidates(2);
    let spec = GridSpec::default();
    let grid = evaluate_joint_density(&set, spec, KernelParams { g: G, k: K }).expect("density");
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let mut worst: f64 = 0.0;
    let mut fingerprint = Vec::new();
    for _ in 0..10 {
        let (i, j) = (rng.gen_range(0..spec.n_rho), rng.gen_range(0..spec.n_theta));
        let naive = naive_density(&set, spec.rho_center(i), spec.theta_center(j));
        let fast = grid.get(i, j);
        worst = worst.max(((fast - naive) / naive).abs());
        fingerprint.push(fast.to_bits());
    }
    let mut out = Outcome::new(
        worst < ORACLE_REL_TOL,
        format!("max relative error at 10 cells = {worst:.3e} (tol {ORACLE_REL_TOL:e})"),
    );
    out.fingerprint = fingerprint;
    out
}

fn criterion_3() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut failing = Vec::new();
    for &k in &BESSEL_ARGS {
        let oracle = i0_series(k, BESSEL_ORACLE_TERMS);
        let rel = ((bessel_i0(k) - oracle) / oracle).abs();
        worst = worst.max(rel);
        if !(rel < BESSEL_REL_TOL) {
            failing.push(format!("k={k}: {rel:.2e}"));
        }
    }
    let detail = if failing.is_empty() {
        format!("max relative error vs {BESSEL_ORACLE_TERMS}-term series = {worst:.3e}")
    } else {
        format!(
            "relative error vs {BESSEL_ORACLE_TERMS}-term series exceeds {BESSEL_REL_TOL:e} at [{}]",
            failing.join(", ")
        )
    };
    Outcome::new(failing.is_empty(), detail)
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let theta: f64 = rng.gen_range(0.0..PI);
        let rho: f64 = rng.gen_range(-0.6..0.6);
        let p = [rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)];
        let n = [theta.cos(), theta.sin()];
        let dist = p[0] * n[0] + p[1] * n[1] - rho;
        let q = [p[0] - 2.0 * dist * n[0], p[1] - 2.0 * dist * n[1]];
        let (t, r) = triangulate(p, q).expect("distinct points");
        // The same line may come back as (theta - pi, -rho) near the wrap.
        let direct = (t - theta).abs().max((r - rho).abs());
        let wrapped = (PI - (t - theta).abs()).abs().max((r + rho).abs());
        worst = worst.max(direct.min(wrapped));
    }
    Outcome::new(
        worst <= TRIANGULATION_TOL,
        format!("max (theta, rho) error over 1000 draws = {worst:.3e} (tol {TRIANGULATION_TOL:e})"),
    )
}

fn bins_from(spec: &GridSpec, theta: f64, rho: f64, want_theta: f64, want_rho: f64) -> (f64, f64) {
    let d = (theta - want_theta).rem_euclid(PI);
    let dtheta = d.min(PI - d) / spec.theta_step();
    let drho = (rho - want_rho).abs() / spec.rho_step();
    (dtheta, drho)
}

fn criterion_5() -> Outcome {
    let config = PipelineConfig::default();
    let spec = config.density.grid();
    let mirrored = synthetic::mirrored_texture(SYNTHETIC_SIZE, SYNTHETIC_SIZE, 11);
    let four = synthetic::four_fold_texture(SYNTHETIC_SIZE, SYNTHETIC_SIZE, 5);

    let start = Instant::now();
    let out = pool(1).install(|| run(&mirrored, &config)).expect("pipeline");
    let elapsed = start.elapsed();
    let mut fingerprint = Vec::new();
    let top = out.detections.first().map(|d| &d.axis);
    let (top_ok, top_detail) = match top {
        Some(a) => {
            let (dt, dr) = bins_from(&spec, a.theta, a.rho, 0.0, 0.0);
            fingerprint.extend(a.endpoints.iter().flatten().map(|v| v.to_bits()));
            fingerprint.push(a.score.to_bits());
            (
                dt <= SYNTHETIC_THETA_BINS && dr <= SYNTHETIC_RHO_BINS,
                format!("mirrored top-1 off by {dt:.2} theta-bins, {dr:.2} rho-bins"),
            )
        }
        None => (false, "mirrored image: no detection".into()),
    };
    let time_ok = secs(elapsed) < SYNTHETIC_MAX_SECS;

    let out4 = pool(1).install(|| run(&four, &config)).expect("pipeline");
    let targets = [(0.0, 0.0), (PI / 2.0, 0.0)];
    let found = targets
        .iter()
        .filter(|&&(t, r)| {
            out4.peaks.iter().take(3).any(|p| {
                let (dt, dr) = bins_from(&spec, p.theta, p.rho, t, r);
                dt <= SYNTHETIC_THETA_BINS && dr <= SYNTHETIC_RHO_BINS
            })
        })
        .count();
    fingerprint.extend(out4.peaks.iter().map(|p| p.score.to_bits()));

    let mut o = Outcome::new(
        top_ok && time_ok && found == 2,
        format!(
            "{top_detail}; {:.2}s single-threaded (limit {SYNTHETIC_MAX_SECS}s); four-fold: {found}/2 true axes in top-3",
            secs(elapsed)
        ),
    );
    o.fingerprint = fingerprint;
    o
}

fn criterion_6() -> Outcome {
    let mut worst: f64 = 0.0;
    for k in [0.0, 1.0, 40.0] {
        let h = 2.0 * PI / VMF_QUADRATURE_POINTS as f64;
        let sum: f64 = (0..VMF_QUADRATURE_POINTS)
            .map(|i| vmf_kernel((i as f64 * h).cos(), k))
            .sum();
        worst = worst.max((vmf_norm_const(k) * sum * h - 1.0).abs());
    }
    Outcome::new(
        worst <= VMF_TOL,
        format!("max |C(k) * integral - 1| for k in {{0, 1, 40}} = {worst:.3e} (tol {VMF_TOL:e})"),
    )
}

/// Segment of length `len` through `center` at `deg` degrees.
fn seg(center: [f64; 2], deg: f64, len: f64) -> Segment {
    let (s, c) = deg.to_radians().sin_cos();
    let h = len / 2.0;
    Segment::new(
        [center[0] - h * c, center[1] - h * s],
        [center[0] + h * c, center[1] + h * s],
    )
    .expect("non-degenerate")
}

fn det(segment: Segment, score: f64) -> Scored {
    Scored { segment, score }
}

fn criterion_7() -> Outcome {
    // Image A: two crossing axes. One detection 9.9 degrees off the vertical
    // (match), a near-duplicate of it (clustered away), and one 10.1 degrees
    // off the horizontal (no match).
    let a = ImageResult {
        ground_truth: vec![seg([100.0, 100.0], 90.0, 100.0), seg([100.0, 100.0], 0.0, 100.0)],
        detections: vec![
            det(seg([100.0, 100.0], 99.9, 100.0), 0.9),
            det(seg([100.0, 100.0], 10.1, 100.0), 0.8),
            det(seg([101.0, 100.0], 98.0, 90.0), 0.5),
        ],
    };
    // Image B: two detections 16 degrees apart (separate clusters), both
    // within 10 degrees of the single ground truth: many-to-one.
    let b = ImageResult {
        ground_truth: vec![seg([50.0, 50.0], 45.0, 100.0)],
        detections: vec![
            det(seg([50.0, 50.0], 53.0, 100.0), 0.95),
            det(seg([50.0, 50.0], 37.0, 100.0), 0.7),
        ],
    };
    // Image C: center-distance boundary. Tolerance is 20% of the shorter
    // (50 px) segment = 10 px: 9.9 px matches, 10.1 px does not.
    let c = ImageResult {
        ground_truth: vec![
            seg([200.0, 100.0], 0.0, 100.0),
            seg([100.0, 200.0], 90.0, 200.0),
            seg([300.0, 300.0], 30.0, 60.0),
        ],
        detections: vec![
            det(seg([200.0, 109.9], 0.0, 50.0), 0.85),
            det(seg([110.1, 200.0], 90.0, 50.0), 0.6),
            det(seg([20.0, 300.0], 60.0, 40.0), 0.4),
        ],
    };
    let params = EvalParams::default();
    let expected = [(1, 1, 1), (2, 0, 0), (1, 2, 2)];
    let mut ok = true;
    let mut per_image = Vec::new();
    for (img, want) in [&a, &b, &c].into_iter().zip(expected) {
        let r = evaluate_at(std::slice::from_ref(img), f64::NEG_INFINITY, &params);
        ok &= (r.tp, r.fp, r.fn_) == want;
        per_image.push(format!("{}/{}/{}", r.tp, r.fp, r.fn_));
    }
    let images = [a, b, c];
    let total = evaluate_at(&images, f64::NEG_INFINITY, &params);
    ok &= (total.tp, total.fp, total.fn_) == (4, 3, 3);
    ok &= (total.precision - 4.0 / 7.0).abs() < 1e-15 && (total.recall - 4.0 / 7.0).abs() < 1e-15;
    let curve = pr_curve(&images, &params).expect("benchmark has ground truth");
    ok &= curve.points.len() == 8;
    ok &= curve
        .points
        .windows(2)
        .all(|w| w[1].report.recall >= w[0].report.recall);
    Outcome::new(
        ok,
        format!(
            "TP/FP/FN per image [{}], total {}/{}/{} (expected 4/3/3), max F1 = {:.4}",
            per_image.join(", "),
            total.tp,
            total.fp,
            total.fn_,
            curve.max_f1
        ),
    )
}

fn criterion_8(reference: [&Outcome; 3]) -> Outcome {
    let runs: [fn() -> Outcome; 3] = [criterion_1, criterion_2, criterion_5];
    let mut mismatches = Vec::new();
    for (n, (f, base)) in runs.iter().zip(reference).enumerate() {
        for &threads in &THREAD_COUNTS {
            let out = pool(threads).install(f);
            if out.fingerprint != base.fingerprint || out.fingerprint.is_empty() {
                mismatches.push(format!("criterion {} at {threads} threads", [1, 2, 5][n]));
            }
        }
    }
    let detail = if mismatches.is_empty() {
        "criteria 1, 2, 5 bit-identical at 1, 4 and 8 threads".to_string()
    } else {
        format!("output differs: {}", mismatches.join(", "))
    };
    Outcome::new(mismatches.is_empty(), detail)
}

/// Returns `None` when no benchmark is configured.
fn criterion_9() -> Option<Outcome> {
    let manifest = PathBuf::from(std::env::var_os("SYMDETECT_BENCH_MANIFEST")?);
    let images_dir = std::env::var_os("SYMDETECT_BENCH_IMAGES").map(PathBuf::from);
    let run_bench = || -> symdetect::Result<String> {
        let m = Manifest::load(&manifest)?;
        let config = PipelineConfig::default();
        let mut results = Vec::new();
        for e in &m.entries {
            let gt = parse_ground_truth(&std::fs::read_to_string(&e.ground_truth)?)?;
            let path = match (&e.image, &images_dir) {
                (Some(p), _) => p.clone(),
                (None, Some(dir)) => dir.join(&e.name),
                (None, None) => continue,
            };
            let detections = match run(&GrayImage::open(&path)?, &config) {
                Ok(out) => out
                    .detections
                    .iter()
                    .map(|d| {
                        let [p1, p2] = d.axis.endpoints;
                        det(Segment { p1, p2 }, d.axis.score)
                    })
                    .collect(),
                Err(symdetect::Error::NoEvidence(_)) => Vec::new(),
                Err(e) => return Err(e),
            };
            results.push(ImageResult {
                detections,
                ground_truth: gt,
            });
        }
        let curve = pr_curve(&results, &config.evaluation)?;
        let csv = pr_curve_csv(&curve);
        Ok(format!(
            "{} images, {} PR points, max F1 = {:.4}",
            results.len(),
            csv.lines().count() - 1,
            curve.max_f1
        ))
    };
    Some(match run_bench() {
        Ok(detail) => Outcome::new(true, detail),
        Err(e) => Outcome::new(false, format!("benchmark run failed: {e}")),
    })
}

fn main() -> ExitCode {
    let names = [
        "density normalization",
        "oracle equivalence",
        "Bessel I0 accuracy",
        "triangulation round-trip",
        "synthetic end-to-end",
        "vMF normalization",
        "evaluation protocol",
        "determinism across threads",
        "external benchmark",
    ];
    let c1 = criterion_1();
    let c2 = criterion_2();
    let c3 = criterion_3();
    let c4 = criterion_4();
    let c5 = criterion_5();
    let c6 = criterion_6();
    let c7 = criterion_7();
    let c8 = criterion_8([&c1, &c2, &c5]);
    let c9 = criterion_9();

    let mut failed = 0;
    let all = [Some(c1), Some(c2), Some(c3), Some(c4), Some(c5), Some(c6), Some(c7), Some(c8), c9];
    for (n, (outcome, name)) in all.iter().zip(names).enumerate() {
        match outcome {
            Some(o) => {
                if !o.passed {
                    failed += 1;
                }
                let tag = if o.passed { "PASS" } else { "FAIL" };
                println!("[{tag}] criterion {} ({name}): {}", n + 1, o.detail);
            }
            None => println!(
                "[SKIP] criterion {} ({name}): set SYMDETECT_BENCH_MANIFEST to run",
                n + 1
            ),
        }
    }
    if failed > 0 {
        println!("acceptance: {failed} criterion(s) failed");
        ExitCode::FAILURE
    } else {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    }
}
