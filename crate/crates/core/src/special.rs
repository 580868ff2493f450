//! Modified Bessel function of the first kind, order zero.

use std::f64::consts::PI;

/// Below this argument the power series is used, above it the large-argument
/// expansion.
const SERIES_LIMIT: f64 = 50.0;

/// `I0(x)`. Overflows to infinity beyond `x ~ 713`.
pub fn bessel_i0(x: f64) -> f64 {
    let x = x.abs();
    if x <= SERIES_LIMIT {
        series_sum(x, 1.0)
    } else {
        bessel_i0_scaled(x) * x.exp()
    }
}

/// Exponentially scaled `exp(-x) I0(x)`, finite for every finite `x`.
pub fn bessel_i0_scaled(x: f64) -> f64 {
    let x = x.abs();
    if x <= SERIES_LIMIT {
        // Shift the exponent into the first term so nothing overflows.
        series_sum(x, (-x).exp())
    } else {
        asymptotic_scaled(x)
    }
}

/// `first * sum_m (x/2)^{2m} / (m!)^2`. All terms are positive, so the sum
/// carries no cancellation error.
fn series_sum(x: f64, first: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = first;
    let mut sum = first;
    let mut m = 0.0;
    loop {
        m += 1.0;
        term *= q / (m * m);
        sum += term;
        if term <= sum * 1e-17 && m > 0.5 * x {
            return sum;
        }
    }
}

/// `exp(-x) I0(x) ~ (2 pi x)^{-1/2} sum_j ((2j-1)!!)^2 / (j! (8x)^j)`.
fn asymptotic_scaled(x: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut j = 0.0;
    loop {
        let next = term * (2.0 * j + 1.0) * (2.0 * j + 1.0) / ((j + 1.0) * 8.0 * x);
        if next >= term || next <= sum * 1e-17 {
            break;
        }
        term = next;
        sum += term;
        j += 1.0;
    }
    sum / (2.0 * PI * x).sqrt()
}
