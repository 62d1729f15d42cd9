use super::{Detector, OnsetError, OnsetResult};
use crate::dsp::analytic_signal;
use crate::signal::IqTrace;

pub const DEFAULT_CHUNK_LEN: usize = 200;

/// Envelope folding: the chunk whose envelope sum most exceeds its
/// predecessor's marks the onset. Ties resolve to the earliest chunk.
///
/// The envelope is the RMS of the Hilbert envelopes of I and Q. A chirp
/// sweeping through DC collapses the envelope of either rail alone, but the
/// two rails always sum to the full amplitude.
pub fn detect_env(trace: &IqTrace, chunk_len: usize) -> Result<OnsetResult, OnsetError> {
    if chunk_len == 0 || trace.len() < 2 * chunk_len {
        return Err(OnsetError::TooShort { len: trace.len(), min: 2 * chunk_len.max(1) });
    }
    let envelope = envelope(trace);
    let sums: Vec<f64> = envelope.chunks_exact(chunk_len).map(|c| c.iter().sum()).collect();
    let peak = sums.iter().cloned().fold(0.0, f64::max);
    if peak <= 0.0 {
        return Err(OnsetError::NoOnset("all-zero trace"));
    }
    let floor = peak * 1e-12;
    let (mut best, mut best_ratio) = (1, f64::NEG_INFINITY);
    for i in 1..sums.len() {
        let ratio = (sums[i] + floor) / (sums[i - 1] + floor);
        if ratio > best_ratio {
            best = i;
            best_ratio = ratio;
        }
    }
    Ok(OnsetResult::new(trace, Detector::Env, best * chunk_len, best_ratio))
}

/// `sqrt((|H(I)|^2 + |H(Q)|^2) / 2)` per sample.
pub fn envelope(trace: &IqTrace) -> Vec<f64> {
    let rail = |f: fn(&num_complex::Complex64) -> f64| {
        let x: Vec<f64> = trace.samples.iter().map(f).collect();
        analytic_signal(&x)
    };
    let i = rail(|z| z.re);
    let q = rail(|z| z.im);
    i.iter().zip(&q).map(|(a, b)| ((a.norm_sqr() + b.norm_sqr()) / 2.0).sqrt()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn step_on_chunk_boundary() {
        let mut s = vec![Complex64::new(0.0, 0.0); 1000];
        s.extend((0..1000).map(|n| Complex64::from_polar(1.0, n as f64 * 0.3)));
        let r = detect_env(&IqTrace::new(s, 2.4e6), 200).unwrap();
        assert_eq!(r.onset_sample, 1000);
    }

    #[test]
    fn all_zero_is_error() {
        let t = IqTrace::new(vec![Complex64::new(0.0, 0.0); 1000], 2.4e6);
        assert_eq!(detect_env(&t, 200), Err(OnsetError::NoOnset("all-zero trace")));
    }

    #[test]
    fn too_short() {
        let t = IqTrace::new(vec![Complex64::new(1.0, 0.0); 300], 2.4e6);
        assert!(matches!(detect_env(&t, 200), Err(OnsetError::TooShort { .. })));
    }
}
