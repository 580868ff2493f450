//! Overlay drawing: axes as thick colored segments with square endpoints,
//! and an optional density heatmap panel.

use std::f64::consts::PI;

use image::{Rgb, RgbImage};
use symdetect::io::DetectionRecord;
use symdetect::DensityGrid;

/// Drawing order for ranks 1 to 5.
pub const PALETTE: [Rgb<u8>; 5] = [
    Rgb([255, 0, 0]),
    Rgb([255, 255, 0]),
    Rgb([0, 255, 0]),
    Rgb([0, 0, 255]),
    Rgb([255, 0, 255]),
];

pub const MAX_DRAWN: usize = PALETTE.len();

/// Slack, in pixels, allowed for endpoints just outside the image.
const BOUNDS_SLACK: f64 = 1.0;

fn half_width(img: &RgbImage) -> f64 {
    (img.width().min(img.height()) as f64 / 160.0).max(1.0)
}

/// Rejects detections that do not fit the image they are drawn on.
pub fn check_bounds(records: &[DetectionRecord], width: u32, height: u32) -> Result<(), String> {
    let (w, h) = (width as f64, height as f64);
    for (n, r) in records.iter().enumerate() {
        for (x, y) in [(r.x1, r.y1), (r.x2, r.y2)] {
            let inside = (-BOUNDS_SLACK..=w + BOUNDS_SLACK).contains(&x)
                && (-BOUNDS_SLACK..=h + BOUNDS_SLACK).contains(&y);
            if !inside {
                return Err(format!(
                    "detection {} endpoint ({x}, {y}) lies outside the {width}x{height} image",
                    n + 1
                ));
            }
        }
    }
    Ok(())
}

/// Top detections by score, at most [`MAX_DRAWN`].
pub fn top_detections(records: &[DetectionRecord]) -> Vec<DetectionRecord> {
    let mut sorted = records.to_vec();
    sorted.sort_by(|a, b| b.score.total_cmp(&a.score));
    sorted.truncate(MAX_DRAWN);
    sorted
}

fn fill_rect(img: &mut RgbImage, x0: f64, y0: f64, x1: f64, y1: f64, color: Rgb<u8>) {
    let cols = x0.max(0.0).floor() as u32..(x1.ceil().max(0.0) as u32).min(img.width());
    let rows = y0.max(0.0).floor() as u32..(y1.ceil().max(0.0) as u32).min(img.height());
    for y in rows {
        for x in cols.clone() {
            img.put_pixel(x, y, color);
        }
    }
}

/// Paints every pixel whose center is within `hw` of the segment and
/// projects inside it, then a square on each endpoint.
pub fn draw_axis(img: &mut RgbImage, p: [f64; 2], q: [f64; 2], color: Rgb<u8>) {
    let hw = half_width(img);
    let (dx, dy) = (q[0] - p[0], q[1] - p[1]);
    let len2 = dx * dx + dy * dy;
    let xmin = (p[0].min(q[0]) - hw).floor().max(0.0) as u32;
    let ymin = (p[1].min(q[1]) - hw).floor().max(0.0) as u32;
    let xmax = ((p[0].max(q[0]) + hw).ceil().max(0.0) as u32).min(img.width());
    let ymax = ((p[1].max(q[1]) + hw).ceil().max(0.0) as u32).min(img.height());
    if len2 > 0.0 {
        let len = len2.sqrt();
        for y in ymin..ymax {
            for x in xmin..xmax {
                let (cx, cy) = (x as f64 + 0.5 - p[0], y as f64 + 0.5 - p[1]);
                let t = (cx * dx + cy * dy) / len2;
                let off = (cx * dy - cy * dx).abs() / len;
                if (0.0..=1.0).contains(&t) && off <= hw {
                    img.put_pixel(x, y, color);
                }
            }
        }
    }
    let s = 2.0 * hw;
    for e in [p, q] {
        fill_rect(img, e[0] - s, e[1] - s, e[0] + s, e[1] + s, color);
    }
}

/// Draws the top detections, lowest rank first so rank 1 ends up on top.
pub fn draw_overlay(img: &mut RgbImage, records: &[DetectionRecord]) {
    let top = top_detections(records);
    for (r, color) in top.iter().zip(PALETTE).rev() {
        draw_axis(img, [r.x1, r.y1], [r.x2, r.y2], color);
    }
}

/// Black-red-yellow-white ramp for `t` in `[0, 1]`.
fn heat(t: f64) -> Rgb<u8> {
    let t = t.clamp(0.0, 1.0);
    let channel = |v: f64| (v.clamp(0.0, 1.0) * 255.0).round() as u8;
    Rgb([channel(3.0 * t), channel(3.0 * t - 1.0), channel(3.0 * t - 2.0)])
}

/// Density grid as an image the height of the overlay: `rho` runs down,
/// `theta` across. Square markers show the drawn axes in their colors.
pub fn heatmap_panel(grid: &DensityGrid, height: u32, records: &[DetectionRecord]) -> RgbImage {
    let spec = grid.spec;
    let width = ((height as f64 * spec.n_theta as f64 / spec.n_rho as f64).round() as u32).max(1);
    let max = grid.max();
    let mut panel = RgbImage::from_fn(width, height, |x, y| {
        let i = ((y as f64 + 0.5) / height as f64 * spec.n_rho as f64) as usize;
        let j = ((x as f64 + 0.5) / width as f64 * spec.n_theta as f64) as usize;
        let v = grid.get(i.min(spec.n_rho - 1), j.min(spec.n_theta - 1));
        heat(if max > 0.0 { v / max } else { 0.0 })
    });
    let s = (height as f64 / 100.0).max(2.0);
    let span = symdetect::density::RHO_MAX - symdetect::density::RHO_MIN;
    for (r, color) in top_detections(records).iter().zip(PALETTE).rev() {
        let x = r.theta.rem_euclid(PI) / PI * width as f64;
        let y = (r.rho - symdetect::density::RHO_MIN) / span * height as f64;
        fill_rect(&mut panel, x - s, y - s, x + s, y + s, color);
    }
    panel
}

/// Places `right` to the right of `left`, top-aligned.
pub fn side_by_side(left: &RgbImage, right: &RgbImage) -> RgbImage {
    let mut out = RgbImage::new(left.width() + right.width(), left.height().max(right.height()));
    image::imageops::replace(&mut out, left, 0, 0);
    image::imageops::replace(&mut out, right, left.width() as i64, 0);
    out
}
