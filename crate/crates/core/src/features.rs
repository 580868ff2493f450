//! Multi-scale Morlet wavelet features sampled on a regular grid.
//!
//! Positions use a continuous pixel frame in which pixel `(c, r)` covers
//! `[c, c + 1) x [r, r + 1)` and its center sits at `(c + 0.5, r + 0.5)`.
//! Grid points are laid out symmetrically about the image center
//! `(W / 2, H / 2)`, so mirroring an image maps the sampling grid onto
//! itself. Filters are sampled at the sub-pixel phase that matches the
//! grid, which makes the whole extraction reflection-equivariant.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::GrayImage;

/// Responses whose per-scale maximum falls below this are treated as zero.
const RESPONSE_FLOOR: f64 = 1e-8;

/// Filter-bank and sampling parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterBankConfig {
    pub num_scales: usize,
    pub num_orientations: usize,
    /// Wavelength of the finest scale, in pixels. Doubles per scale.
    pub base_wavelength: f64,
    /// Grid spacing in pixels, shared by all scales. `None` uses each
    /// scale's wavelength.
    pub grid_stride: Option<usize>,
    /// Features with normalized magnitude below this are discarded.
    pub magnitude_threshold: f64,
}

impl Default for FilterBankConfig {
    fn default() -> Self {
        Self {
            num_scales: 4,
            num_orientations: 8,
            base_wavelength: 4.0,
            grid_stride: None,
            magnitude_threshold: 0.05,
        }
    }
}

impl FilterBankConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_scales < 1 {
            return Err(Error::Config("features.num_scales must be >= 1".into()));
        }
        if self.num_orientations < 2 {
            return Err(Error::Config(
                "features.num_orientations must be >= 2".into(),
            ));
        }
        if !(self.base_wavelength >= 2.0) || !self.base_wavelength.is_finite() {
            return Err(Error::Config(
                "features.base_wavelength must be >= 2".into(),
            ));
        }
        if self.grid_stride == Some(0) {
            return Err(Error::Config("features.grid_stride must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.magnitude_threshold) {
            return Err(Error::Config(
                "features.magnitude_threshold must lie in [0, 1]".into(),
            ));
        }
        Ok(())
    }

    pub fn wavelength(&self, scale: usize) -> f64 {
        self.base_wavelength * (1u64 << scale) as f64
    }

    pub fn stride(&self, scale: usize) -> usize {
        self.grid_stride
            .unwrap_or_else(|| (self.wavelength(scale).round() as usize).max(1))
    }

    /// Wave-vector angle of orientation `o`; orientations cover `[0, pi)`.
    pub fn orientation_angle(&self, o: usize) -> f64 {
        o as f64 * PI / self.num_orientations as f64
    }
}

/// One grid-sampled wavelet feature.
#[derive(Debug, Clone, PartialEq)]
pub struct FeaturePoint {
    /// Position in the normalized frame, each component in `[-0.5, 0.5]`.
    pub pos: [f64; 2],
    pub scale: usize,
    /// Maximum response over orientations, normalized so that the largest
    /// value at this scale is 1.
    pub magnitude: f64,
    /// Edge direction in `[0, pi)`, perpendicular to the wave vector of the
    /// maximizing orientation.
    pub direction: f64,
    /// L1-normalized histogram of orientation responses around the point.
    pub texture: Vec<f64>,
}

/// Maps a pixel-frame point into the unified frame: `(p - c) / max(W, H)`
/// with `c = (W / 2, H / 2)`.
pub fn normalize_point(p: [f64; 2], width: f64, height: f64) -> [f64; 2] {
    let s = width.max(height);
    [(p[0] - width / 2.0) / s, (p[1] - height / 2.0) / s]
}

/// Inverse of [`normalize_point`].
pub fn denormalize_point(q: [f64; 2], width: f64, height: f64) -> [f64; 2] {
    let s = width.max(height);
    [q[0] * s + width / 2.0, q[1] * s + height / 2.0]
}

/// A complex Morlet filter sampled on a (possibly half-pixel shifted) lattice.
///
/// `psi(u) = exp(-|u|^2 / (2 sigma^2)) * (exp(i k.u) - kappa)`, with `kappa`
/// chosen so the sampled filter sums to zero, then scaled to unit L2 norm.
#[derive(Debug, Clone)]
pub struct MorletFilter {
    pub scale: usize,
    pub orientation: usize,
    pub wavelength: f64,
    /// Direction of the wave vector.
    pub angle: f64,
    pub sigma: f64,
    radius: usize,
    /// Sub-pixel phase of the taps per axis, 0 or 0.5.
    offset: [f64; 2],
    nx: usize,
    ny: usize,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl MorletFilter {
    pub fn new(
        scale: usize,
        orientation: usize,
        wavelength: f64,
        angle: f64,
        offset: [f64; 2],
    ) -> Self {
        let sigma = wavelength / 2.0;
        let radius = (3.0 * sigma).ceil() as usize;
        let nx = 2 * radius + 1 - (2.0 * offset[0]) as usize;
        let ny = 2 * radius + 1 - (2.0 * offset[1]) as usize;
        let freq = 2.0 * PI / wavelength;
        let (kx, ky) = (freq * angle.cos(), freq * angle.sin());

        let mut env = Vec::with_capacity(nx * ny);
        let mut phase = Vec::with_capacity(nx * ny);
        for ty in 0..ny {
            let uy = ty as f64 - radius as f64 + offset[1];
            for tx in 0..nx {
                let ux = tx as f64 - radius as f64 + offset[0];
                env.push((-(ux * ux + uy * uy) / (2.0 * sigma * sigma)).exp());
                phase.push(kx * ux + ky * uy);
            }
        }
        // Admissibility: remove the envelope-weighted DC component.
        let env_sum: f64 = env.iter().sum();
        let (mut kr, mut ki) = (0.0, 0.0);
        for (e, p) in env.iter().zip(&phase) {
            kr += e * p.cos();
            ki += e * p.sin();
        }
        kr /= env_sum;
        ki /= env_sum;

        let mut re: Vec<f64> = env
            .iter()
            .zip(&phase)
            .map(|(e, p)| e * (p.cos() - kr))
            .collect();
        let mut im: Vec<f64> = env
            .iter()
            .zip(&phase)
            .map(|(e, p)| e * (p.sin() - ki))
            .collect();
        let norm = re
            .iter()
            .zip(&im)
            .map(|(a, b)| a * a + b * b)
            .sum::<f64>()
            .sqrt();
        re.iter_mut().for_each(|v| *v /= norm);
        im.iter_mut().for_each(|v| *v /= norm);

        Self {
            scale,
            orientation,
            wavelength,
            angle,
            sigma,
            radius,
            offset,
            nx,
            ny,
            re,
            im,
        }
    }

    /// Tap counts `(columns, rows)`.
    pub fn size(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    /// Sub-pixel phase of the taps per axis.
    pub fn offset(&self) -> [f64; 2] {
        self.offset
    }

    /// Complex sum of all taps.
    pub fn sum(&self) -> (f64, f64) {
        (self.re.iter().sum(), self.im.iter().sum())
    }

    pub fn l2_norm(&self) -> f64 {
        self.re
            .iter()
            .zip(&self.im)
            .map(|(a, b)| a * a + b * b)
            .sum::<f64>()
            .sqrt()
    }

    /// Tap value at offset `(tx, ty)` from the top-left tap.
    pub fn tap(&self, tx: usize, ty: usize) -> (f64, f64) {
        let i = ty * self.nx + tx;
        (self.re[i], self.im[i])
    }

    /// Correlation with the image window whose top-left pixel is `(x0, y0)`.
    fn respond(&self, image: &GrayImage, x0: usize, y0: usize) -> (f64, f64) {
        let (mut sr, mut si) = (0.0, 0.0);
        for ty in 0..self.ny {
            let row = &image.row(y0 + ty)[x0..x0 + self.nx];
            let fr = &self.re[ty * self.nx..(ty + 1) * self.nx];
            let fi = &self.im[ty * self.nx..(ty + 1) * self.nx];
            for ((v, a), b) in row.iter().zip(fr).zip(fi) {
                sr += v * a;
                si += v * b;
            }
        }
        (sr, si)
    }
}

/// Morlet filters for every (scale, orientation), scale-major.
#[derive(Debug, Clone)]
pub struct FilterBank {
    config: FilterBankConfig,
    filters: Vec<MorletFilter>,
}

impl FilterBank {
    /// Builds the bank with taps at the given sub-pixel phase (0 or 0.5 per
    /// axis).
    pub fn with_offset(config: &FilterBankConfig, offset: [f64; 2]) -> Result<Self> {
        config.validate()?;
        let mut filters = Vec::with_capacity(config.num_scales * config.num_orientations);
        for s in 0..config.num_scales {
            for o in 0..config.num_orientations {
                filters.push(MorletFilter::new(
                    s,
                    o,
                    config.wavelength(s),
                    config.orientation_angle(o),
                    offset,
                ));
            }
        }
        Ok(Self {
            config: config.clone(),
            filters,
        })
    }

    pub fn filters(&self) -> &[MorletFilter] {
        &self.filters
    }

    pub fn scale(&self, s: usize) -> &[MorletFilter] {
        let n = self.config.num_orientations;
        &self.filters[s * n..(s + 1) * n]
    }

    pub fn len(&self) -> usize {
        self.filters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.filters.is_empty()
    }
}

/// Bank of pixel-centered filters, one per (scale, orientation).
pub fn build_filter_bank(config: &FilterBankConfig) -> Result<FilterBank> {
    FilterBank::with_offset(config, [0.0, 0.0])
}

/// Sub-pixel tap phase that aligns filters with grid points on an axis of
/// the given length. Grid points sit at `len / 2 + m * stride`.
fn tap_phase(len: usize) -> f64 {
    if len % 2 == 0 {
        0.5
    } else {
        0.0
    }
}

/// Grid points along one axis: `(continuous coordinate, first tap pixel)`.
fn axis_grid(len: usize, radius: usize, phase: f64, stride: usize) -> Vec<(f64, usize)> {
    let center = len as f64 / 2.0;
    // First tap pixel of a point at coordinate x is x - radius + phase - 0.5,
    // last is x + radius - phase - 0.5.
    let lo = radius as f64 - phase + 0.5;
    let hi = len as f64 - 1.0 - radius as f64 + phase + 0.5;
    let s = stride as f64;
    let m_min = ((lo - center) / s).ceil() as i64;
    let m_max = ((hi - center) / s).floor() as i64;
    (m_min..=m_max)
        .map(|m| {
            let x = center + m as f64 * s;
            (x, (x - radius as f64 + phase - 0.5) as usize)
        })
        .collect()
}

/// Extracts thresholded features in scale-major, then row-major grid order.
pub fn extract_features(
    image: &GrayImage,
    config: &FilterBankConfig,
) -> Result<Vec<FeaturePoint>> {
    let (w, h) = (image.width(), image.height());
    let bank = FilterBank::with_offset(config, [tap_phase(w), tap_phase(h)])?;
    for f in bank.scale(config.num_scales - 1) {
        let (nx, ny) = f.size();
        if nx > w || ny > h {
            return Err(Error::Config(format!(
                "scale {} filter ({nx}x{ny} taps) exceeds the {w}x{h} image",
                f.scale
            )));
        }
    }
    let per_scale: Vec<Vec<FeaturePoint>> = (0..config.num_scales)
        .into_par_iter()
        .map(|s| extract_scale(image, config, bank.scale(s), s))
        .collect();
    Ok(per_scale.into_iter().flatten().collect())
}

fn extract_scale(
    image: &GrayImage,
    config: &FilterBankConfig,
    filters: &[MorletFilter],
    scale: usize,
) -> Vec<FeaturePoint> {
    let (w, h) = (image.width(), image.height());
    let n_orient = filters.len();
    let radius = filters[0].radius();
    let stride = config.stride(scale);
    let xs = axis_grid(w, radius, tap_phase(w), stride);
    let ys = axis_grid(h, radius, tap_phase(h), stride);
    let (gw, gh) = (xs.len(), ys.len());
    if gw == 0 || gh == 0 {
        return Vec::new();
    }

    // Orientation magnitudes for every grid point, row-major.
    let mags: Vec<f64> = ys
        .par_iter()
        .flat_map_iter(|&(_, y0)| {
            let mut row = Vec::with_capacity(gw * n_orient);
            for &(_, x0) in &xs {
                for f in filters {
                    let (re, im) = f.respond(image, x0, y0);
                    row.push(re.hypot(im));
                }
            }
            row
        })
        .collect();

    let max = mags.iter().cloned().fold(0.0, f64::max);
    if max < RESPONSE_FLOOR {
        return Vec::new();
    }

    // Grid offsets inside the texture neighborhood (radius 2 wavelengths).
    let reach = 2.0 * config.wavelength(scale);
    let span = (reach / stride as f64).floor() as i64;
    let mut neighborhood = Vec::new();
    for dy in -span..=span {
        for dx in -span..=span {
            let d2 = ((dx * dx + dy * dy) as f64) * (stride * stride) as f64;
            if d2 <= reach * reach {
                neighborhood.push((dx, dy));
            }
        }
    }

    let mut out = Vec::new();
    for (gy, &(y, _)) in ys.iter().enumerate() {
        for (gx, &(x, _)) in xs.iter().enumerate() {
            let at = |gx: usize, gy: usize| &mags[(gy * gw + gx) * n_orient..][..n_orient];
            let here = at(gx, gy);
            let (best, peak) = here
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |acc, (o, &v)| {
                    if v > acc.1 {
                        (o, v)
                    } else {
                        acc
                    }
                });
            let magnitude = peak / max;
            if magnitude < config.magnitude_threshold {
                continue;
            }

            let mut texture = vec![0.0; n_orient];
            for &(dx, dy) in &neighborhood {
                let (nx, ny) = (gx as i64 + dx, gy as i64 + dy);
                if nx < 0 || ny < 0 || nx >= gw as i64 || ny >= gh as i64 {
                    continue;
                }
                for (t, v) in texture.iter_mut().zip(at(nx as usize, ny as usize)) {
                    *t += v;
                }
            }
            let total: f64 = texture.iter().sum();
            if total > 0.0 {
                texture.iter_mut().for_each(|t| *t /= total);
            } else {
                texture.fill(1.0 / n_orient as f64);
            }

            let direction = (config.orientation_angle(best) + PI / 2.0) % PI;
            out.push(FeaturePoint {
                pos: normalize_point([x, y], w as f64, h as f64),
                scale,
                magnitude,
                direction,
                texture,
            });
        }
    }
    out
}
