use std::f64::consts::PI;

use symdetect::special::{bessel_i0, bessel_i0_scaled};

/// Power series summed until the terms stop changing the total.
fn i0_converged(x: f64) -> f64 {
    let q = x * x / 4.0;
    let (mut term, mut sum) = (1.0f64, 1.0f64);
    let mut m = 1.0;
    loop {
        term *= q / (m * m);
        sum += term;
        if term < sum * 1e-18 && m > x {
            return sum;
        }
        m += 1.0;
    }
}

#[test]
fn matches_converged_series_on_0_to_500() {
    let mut k = 0.0;
    while k <= 500.0 {
        let want = i0_converged(k);
        let got = bessel_i0(k);
        assert!(((got - want) / want).abs() < 1e-8, "k={k}: {got} vs {want}");
        k += 0.25;
    }
}

#[test]
fn known_values() {
    assert_eq!(bessel_i0(0.0), 1.0);
    assert!((bessel_i0(1.0) - 1.26606588).abs() < 1e-8);
}

#[test]
fn k40_sits_inside_asymptotic_sandwich() {
    let lead = 40f64.exp() / (80.0 * PI).sqrt();
    let v = bessel_i0(40.0);
    assert!(v > 0.99 * lead && v < 1.01 * lead);
}

#[test]
fn scaled_form_agrees_with_unscaled() {
    for k in [0.0, 0.3, 7.0, 49.9, 50.1, 120.0, 400.0] {
        let want = i0_converged(k) * (-k as f64).exp();
        let got = bessel_i0_scaled(k);
        assert!(((got - want) / want).abs() < 1e-8, "k={k}");
    }
    assert!(bessel_i0_scaled(2000.0).is_finite() && bessel_i0_scaled(2000.0) > 0.0);
}
