//! Small numeric kernels shared by the detectors and estimators.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rustfft::FftPlanner;

/// Modified Bessel function of the first kind, order 0, by power series.
pub fn bessel_i0(x: f64) -> f64 {
    let q = x * x / 4.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 1.0;
    while term > sum * 1e-17 {
        term *= q / (k * k);
        sum += term;
        k += 1.0;
    }
    sum
}

/// Symmetric Kaiser window of `len` points.
pub fn kaiser(len: usize, beta: f64) -> Vec<f64> {
    if len == 1 {
        return vec![1.0];
    }
    let denom = bessel_i0(beta);
    let m = (len - 1) as f64;
    (0..len)
        .map(|n| {
            let r = 2.0 * n as f64 / m - 1.0;
            bessel_i0(beta * (1.0 - r * r).max(0.0).sqrt()) / denom
        })
        .collect()
}

/// Analytic signal of a real sequence via the FFT Hilbert construction.
pub fn analytic_signal(x: &[f64]) -> Vec<Complex64> {
    let n = x.len();
    if n == 0 {
        return Vec::new();
    }
    let mut planner = FftPlanner::new();
    let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    planner.plan_fft_forward(n).process(&mut buf);
    // H[0] = 1, H[n/2] = 1 for even n, 2 on positive frequencies, 0 on negative.
    let half = n / 2;
    for (k, v) in buf.iter_mut().enumerate() {
        let gain = if k == 0 || (n % 2 == 0 && k == half) {
            1.0
        } else if k <= (n - 1) / 2 {
            2.0
        } else {
            0.0
        };
        *v *= gain / n as f64;
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    buf
}

/// `sum_n x[n] * exp(-j*2*pi*f*n/fs)` via a phasor recurrence renormalized every 1024 steps.
pub fn dft_at(x: &[Complex64], freq_hz: f64, sample_rate: f64) -> Complex64 {
    let step = Complex64::from_polar(1.0, -TAU * freq_hz / sample_rate);
    let mut rot = Complex64::new(1.0, 0.0);
    let mut acc = Complex64::new(0.0, 0.0);
    for (n, &v) in x.iter().enumerate() {
        if n % 1024 == 0 {
            rot = Complex64::from_polar(1.0, -TAU * freq_hz * n as f64 / sample_rate);
        }
        acc += v * rot;
        rot *= step;
    }
    acc
}

/// Forward FFT of a copy of `x`.
pub fn fft(x: &[Complex64]) -> Vec<Complex64> {
    let mut buf = x.to_vec();
    FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
    buf
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn i0_known_values() {
        assert!((bessel_i0(0.0) - 1.0).abs() < 1e-15);
        assert!((bessel_i0(1.0) - 1.266_065_877_752_008_4).abs() < 1e-13);
        assert!((bessel_i0(8.0) - 427.564_115_721_804_7).abs() < 1e-9);
    }

    #[test]
    fn kaiser_symmetric_unit_peak() {
        let w = kaiser(129, 8.0);
        assert!((w[64] - 1.0).abs() < 1e-15);
        for i in 0..129 {
            assert!((w[i] - w[128 - i]).abs() < 1e-15);
        }
        assert!(w[0] < 1e-2);
    }

    #[test]
    fn analytic_of_cosine_is_complex_exponential() {
        let n = 1000;
        let x: Vec<f64> = (0..n).map(|i| (TAU * 50.0 * i as f64 / n as f64).cos()).collect();
        let a = analytic_signal(&x);
        for (i, z) in a.iter().enumerate() {
            let expect = Complex64::from_polar(1.0, TAU * 50.0 * i as f64 / n as f64);
            assert!((z - expect).norm() < 1e-9);
        }
    }

    #[test]
    fn dft_at_matches_naive() {
        let x: Vec<Complex64> =
            (0..3000).map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos())).collect();
        let f = 1234.5;
        let naive: Complex64 =
            x.iter().enumerate().map(|(n, v)| v * Complex64::from_polar(1.0, -TAU * f * n as f64 / 2.4e6)).sum();
        assert!((dft_at(&x, f, 2.4e6) - naive).norm() < 1e-8);
    }
}
