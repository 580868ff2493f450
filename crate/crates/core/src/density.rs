//! Weighted linear-directional kernel density over axis space.
//!
//! Each candidate `(rho_n, theta_n)` with weight `w_n` contributes a product
//! of a Gaussian kernel in `rho` and a von Mises–Fisher kernel on the unit
//! circle. Line orientations are `pi`-periodic, so angles are doubled before
//! embedding: `y = (cos 2theta, sin 2theta)`. The joint estimate at `(x, y)` is
//!
//! ```text
//! f(x, y) = C(k) / (N g) * sum_n w_n G((x - rho_n) / g) exp(k y . mu_n)
//! ```
//!
//! with `C(k) = 1 / (2 pi I0(k))`. With weights scaled to mean 1, `f`
//! integrates to 1 over `rho` and the doubled circle.
//!
//! The grid evaluator skips kernel terms whose Gaussian or vMF factor is
//! below `1e-16` of its peak. Every skipped term is bounded by `1e-16` times
//! that candidate's peak contribution, so pruning never moves a cell by more
//! than `1e-16 * sum_n (peak contribution of n)`.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{bessel_i0, bessel_i0_scaled};
use crate::voting::CandidateSet;

/// `ln(1e16)`: kernel factors below `exp(-TAIL_LOG)` of their peak are
/// skipped.
const TAIL_LOG: f64 = 36.841_361_487_904_734;

/// Grid rows evaluated per parallel task. Fixed, so the per-cell summation
/// order never depends on the thread count.
const ROWS_PER_BLOCK: usize = 64;

pub const RHO_MAX: f64 = FRAC_1_SQRT_2;
pub const RHO_MIN: f64 = -FRAC_1_SQRT_2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelParams {
    /// Gaussian bandwidth over `rho`.
    pub g: f64,
    /// vMF concentration over the doubled angle.
    pub k: f64,
}

impl Default for KernelParams {
    fn default() -> Self {
        Self { g: 0.03, k: 40.0 }
    }
}

impl KernelParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.g > 0.0) || !self.g.is_finite() {
            return Err(Error::Config("density.g must be > 0".into()));
        }
        if !(self.k >= 0.0) || !self.k.is_finite() {
            return Err(Error::Config("density.k must be >= 0".into()));
        }
        Ok(())
    }
}

/// Bin layout: `n_rho` bins over `[-sqrt(2)/2, sqrt(2)/2]`, `n_theta` bins
/// over `[0, pi)`, evaluated at cell centers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub n_rho: usize,
    pub n_theta: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            n_rho: 800,
            n_theta: 180,
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_rho < 2 || self.n_theta < 2 {
            return Err(Error::Config(
                "density.n_rho and density.n_theta must be >= 2".into(),
            ));
        }
        Ok(())
    }

    pub fn rho_step(&self) -> f64 {
        (RHO_MAX - RHO_MIN) / self.n_rho as f64
    }

    pub fn theta_step(&self) -> f64 {
        PI / self.n_theta as f64
    }

    pub fn rho_center(&self, i: usize) -> f64 {
        RHO_MIN + (i as f64 + 0.5) * self.rho_step()
    }

    pub fn theta_center(&self, j: usize) -> f64 {
        (j as f64 + 0.5) * self.theta_step()
    }

    /// Bin containing `rho`, clamped to the grid.
    pub fn rho_bin(&self, rho: f64) -> usize {
        let i = ((rho - RHO_MIN) / self.rho_step()).floor();
        (i.max(0.0) as usize).min(self.n_rho - 1)
    }

    /// Bin containing `theta`, reduced modulo `pi`.
    pub fn theta_bin(&self, theta: f64) -> usize {
        let t = theta.rem_euclid(PI);
        ((t / self.theta_step()).floor() as usize).min(self.n_theta - 1)
    }
}

/// Density values, row-major with one row per `rho` bin.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityGrid {
    pub spec: GridSpec,
    pub params: KernelParams,
    values: Vec<f64>,
}

impl DensityGrid {
    pub fn from_values(spec: GridSpec, params: KernelParams, values: Vec<f64>) -> Result<Self> {
        spec.validate()?;
        if values.len() != spec.n_rho * spec.n_theta {
            return Err(Error::Parse(format!(
                "density grid needs {} values, got {}",
                spec.n_rho * spec.n_theta,
                values.len()
            )));
        }
        if values.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::Parse("density values must be finite and >= 0".into()));
        }
        Ok(Self {
            spec,
            params,
            values,
        })
    }

    #[inline]
    pub fn get(&self, rho_bin: usize, theta_bin: usize) -> f64 {
        self.values[rho_bin * self.spec.n_theta + theta_bin]
    }

    pub fn row(&self, rho_bin: usize) -> &[f64] {
        let n = self.spec.n_theta;
        &self.values[rho_bin * n..(rho_bin + 1) * n]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(0.0, f64::max)
    }

    /// `(rho_bin, theta_bin)` of the largest value, lowest index on ties.
    pub fn argmax(&self) -> (usize, usize) {
        let mut best = 0;
        for (i, v) in self.values.iter().enumerate() {
            if *v > self.values[best] {
                best = i;
            }
        }
        (best / self.spec.n_theta, best % self.spec.n_theta)
    }

    /// Integral over `rho` (trapezoid across bin centers) and the doubled
    /// circle (periodic rule, Jacobian 2 for `phi = 2 theta`).
    pub fn integral(&self) -> f64 {
        let n = self.spec.n_rho;
        let mut total = 0.0;
        for i in 0..n {
            let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
            total += w * self.row(i).iter().sum::<f64>();
        }
        total * self.spec.rho_step() * 2.0 * self.spec.theta_step()
    }

    /// Integral over the doubled circle at each `rho` bin.
    pub fn theta_marginal(&self) -> Vec<f64> {
        let dphi = 2.0 * self.spec.theta_step();
        (0..self.spec.n_rho)
            .map(|i| self.row(i).iter().sum::<f64>() * dphi)
            .collect()
    }
}

/// Standard normal density.
pub fn gaussian_kernel(u: f64) -> f64 {
    (-0.5 * u * u).exp() / (2.0 * PI).sqrt()
}

/// Unnormalized vMF kernel `exp(k * dot)`.
pub fn vmf_kernel(dot: f64, k: f64) -> f64 {
    (k * dot).exp()
}

/// vMF normalizer on the circle, `1 / (2 pi I0(k))`.
pub fn vmf_norm_const(k: f64) -> f64 {
    1.0 / (2.0 * PI * bessel_i0(k))
}

/// `exp(k) * C(k)`, pairing with `exp(k (dot - 1))` so neither factor
/// overflows for large `k`.
pub fn vmf_scaled_norm_const(k: f64) -> f64 {
    1.0 / (2.0 * PI * bessel_i0_scaled(k))
}

/// Doubled-angle unit vector for a line orientation in `[0, pi)`.
pub fn embed_angle(theta: f64) -> [f64; 2] {
    let (s, c) = (2.0 * theta).sin_cos();
    [c, s]
}

/// Half-width of the `rho` window outside of which the Gaussian factor is
/// negligible.
fn rho_cutoff(g: f64) -> f64 {
    g * (2.0 * TAIL_LOG).sqrt()
}

/// Half-width in bins of the `theta` window outside of which the vMF factor
/// is negligible, or `None` when every bin is needed.
fn theta_window(k: f64, spec: &GridSpec) -> Option<usize> {
    if k <= 0.0 || TAIL_LOG / k >= 2.0 {
        return None;
    }
    let dtheta = 0.5 * (1.0 - TAIL_LOG / k).acos();
    let w = (dtheta / spec.theta_step()).ceil() as usize + 1;
    (2 * w + 1 < spec.n_theta).then_some(w)
}

struct Active {
    rho: f64,
    theta: f64,
    weight: f64,
}

/// Candidates with positive weight, ordered by `(rho, index)`.
fn active_sorted(set: &CandidateSet) -> Vec<Active> {
    let mut idx: Vec<usize> = (0..set.len())
        .filter(|&i| set.candidates[i].weight > 0.0)
        .collect();
    idx.sort_by(|&a, &b| {
        set.candidates[a]
            .rho
            .total_cmp(&set.candidates[b].rho)
            .then(a.cmp(&b))
    });
    idx.into_iter()
        .map(|i| {
            let c = &set.candidates[i];
            Active {
                rho: c.rho,
                theta: c.theta,
                weight: c.weight,
            }
        })
        .collect()
}

/// Evaluates the joint density at every cell center.
///
/// Rows are split into fixed blocks evaluated in parallel. Within a cell,
/// contributions are accumulated in `(rho, index)` order of the candidates,
/// so the result is bit-identical for any thread count.
pub fn evaluate_joint_density(
    set: &CandidateSet,
    spec: GridSpec,
    params: KernelParams,
) -> Result<DensityGrid> {
    spec.validate()?;
    params.validate()?;
    if set.is_empty() {
        return Err(Error::NoEvidence("empty candidate set".into()));
    }
    let active = active_sorted(set);
    let (g, k) = (params.g, params.k);
    let n_theta = spec.n_theta;
    let cut = rho_cutoff(g);
    let window = theta_window(k, &spec);
    let scale = vmf_scaled_norm_const(k) / (set.len() as f64 * g * (2.0 * PI).sqrt());

    let mut values = vec![0.0; spec.n_rho * n_theta];
    values
        .par_chunks_mut(ROWS_PER_BLOCK * n_theta)
        .enumerate()
        .for_each(|(block, out)| {
            let row0 = block * ROWS_PER_BLOCK;
            let rows = out.len() / n_theta;
            let x_lo = spec.rho_center(row0) - cut;
            let x_hi = spec.rho_center(row0 + rows - 1) + cut;
            let start = active.partition_point(|a| a.rho < x_lo);
            let end = active.partition_point(|a| a.rho <= x_hi);

            let mut profile = vec![0.0; n_theta];
            for a in &active[start..end] {
                // vMF factor exp(k (cos(2 dtheta) - 1)) over the angular window.
                let (first, len) = match window {
                    Some(w) => {
                        let c0 = spec.theta_bin(a.theta) as i64;
                        ((c0 - w as i64).rem_euclid(n_theta as i64) as usize, 2 * w + 1)
                    }
                    None => (0, n_theta),
                };
                for t in 0..len {
                    let col = (first + t) % n_theta;
                    let dot = (2.0 * (spec.theta_center(col) - a.theta)).cos();
                    profile[t] = (k * (dot - 1.0)).exp();
                }
                let split = len.min(n_theta - first);

                for r in 0..rows {
                    let x = spec.rho_center(row0 + r);
                    let u = (x - a.rho) / g;
                    if 0.5 * u * u > TAIL_LOG {
                        continue;
                    }
                    let gv = a.weight * (-0.5 * u * u).exp();
                    let row = &mut out[r * n_theta..(r + 1) * n_theta];
                    for (dst, p) in row[first..first + split].iter_mut().zip(&profile[..split]) {
                        *dst += gv * p;
                    }
                    for (dst, p) in row[..len - split].iter_mut().zip(&profile[split..len]) {
                        *dst += gv * p;
                    }
                }
            }
            out.iter_mut().for_each(|v| *v *= scale);
        });

    Ok(DensityGrid {
        spec,
        params,
        values,
    })
}

/// Weighted linear estimate `1/(N g) sum_n w_n G((x - rho_n)/g)` at the
/// centers of `n_bins` bins over `[-sqrt(2)/2, sqrt(2)/2]`.
pub fn linear_density(set: &CandidateSet, n_bins: usize, g: f64) -> Result<Vec<f64>> {
    KernelParams { g, k: 0.0 }.validate()?;
    if set.is_empty() {
        return Err(Error::NoEvidence("empty candidate set".into()));
    }
    if n_bins < 2 {
        return Err(Error::Config("linear density needs >= 2 bins".into()));
    }
    let active = active_sorted(set);
    let cut = rho_cutoff(g);
    let step = (RHO_MAX - RHO_MIN) / n_bins as f64;
    let scale = 1.0 / (set.len() as f64 * g * (2.0 * PI).sqrt());
    Ok((0..n_bins)
        .into_par_iter()
        .map(|i| {
            let x = RHO_MIN + (i as f64 + 0.5) * step;
            let start = active.partition_point(|a| a.rho < x - cut);
            let end = active.partition_point(|a| a.rho <= x + cut);
            active[start..end]
                .iter()
                .map(|a| {
                    let u = (x - a.rho) / g;
                    a.weight * (-0.5 * u * u).exp()
                })
                .sum::<f64>()
                * scale
        })
        .collect())
}

/// Weighted directional estimate `C(k)/N sum_n w_n exp(k y . mu_n)` on the
/// doubled circle at the centers of `n_bins` bins over `[0, pi)`.
pub fn directional_density(set: &CandidateSet, n_bins: usize, k: f64) -> Result<Vec<f64>> {
    KernelParams { g: 1.0, k }.validate()?;
    if set.is_empty() {
        return Err(Error::NoEvidence("empty candidate set".into()));
    }
    if n_bins < 2 {
        return Err(Error::Config("directional density needs >= 2 bins".into()));
    }
    let active = active_sorted(set);
    let step = PI / n_bins as f64;
    let scale = vmf_scaled_norm_const(k) / set.len() as f64;
    Ok((0..n_bins)
        .into_par_iter()
        .map(|j| {
            let y = embed_angle((j as f64 + 0.5) * step);
            active
                .iter()
                .map(|a| {
                    let mu = embed_angle(a.theta);
                    let dot = y[0] * mu[0] + y[1] * mu[1];
                    a.weight * (k * (dot - 1.0)).exp()
                })
                .sum::<f64>()
                * scale
        })
        .collect())
}
