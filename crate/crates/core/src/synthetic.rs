//! Synthetic test images with known symmetry axes.

use crate::image::GrayImage;

/// SplitMix64; enough randomness for test textures without a dependency.
struct SplitMix(u64);

impl SplitMix {
    fn next_f64(&mut self) -> f64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^= z >> 31;
        (z >> 11) as f64 / (1u64 << 53) as f64
    }
}

/// Uniform noise smoothed by a 3x3 box filter, values in `[0, 1]`.
pub fn random_texture(width: usize, height: usize, seed: u64) -> Vec<f64> {
    let mut rng = SplitMix(seed);
    let noise: Vec<f64> = (0..width * height).map(|_| rng.next_f64()).collect();
    let mut out = vec![0.0; width * height];
    for y in 0..height {
        for x in 0..width {
            let (mut sum, mut n) = (0.0, 0.0);
            for yy in y.saturating_sub(1)..=(y + 1).min(height - 1) {
                for xx in x.saturating_sub(1)..=(x + 1).min(width - 1) {
                    sum += noise[yy * width + xx];
                    n += 1.0;
                }
            }
            out[y * width + x] = sum / n;
        }
    }
    out
}

/// Random texture mirrored about the vertical midline `x = W / 2`.
pub fn mirrored_texture(width: usize, height: usize, seed: u64) -> GrayImage {
    let tex = random_texture(width, height, seed);
    GrayImage::from_fn(width, height, |x, y| {
        let sx = x.min(width - 1 - x);
        tex[y * width + sx]
    })
    .expect("texture values lie in [0, 1]")
}

/// Random texture mirrored about both midlines.
pub fn four_fold_texture(width: usize, height: usize, seed: u64) -> GrayImage {
    let tex = random_texture(width, height, seed);
    GrayImage::from_fn(width, height, |x, y| {
        let sx = x.min(width - 1 - x);
        let sy = y.min(height - 1 - y);
        tex[sy * width + sx]
    })
    .expect("texture values lie in [0, 1]")
}

/// Dark left part, bright right part, with the step at column `edge`.
pub fn step_edge(width: usize, height: usize, edge: usize) -> GrayImage {
    GrayImage::from_fn(width, height, |x, _| if x < edge { 0.0 } else { 1.0 })
        .expect("binary image")
}
