use num_complex::Complex;
use rustfft::FftPlanner;

use crate::{Error, FrequencyGrid, Psd, Real, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Window {
    /// Periodic Hann window.
    #[default]
    Hann,
    Rectangular,
}

impl Window {
    fn coefficients<T: Real>(self, n: usize) -> Vec<T> {
        match self {
            Window::Rectangular => vec![T::one(); n],
            Window::Hann => (0..n)
                .map(|i| {
                    let phase = T::TAU() * T::from_count(i) / T::from_count(n);
                    T::lit(0.5) * (T::one() - phase.cos())
                })
                .collect(),
        }
    }
}

/// One-sided Welch PSD with a Hann window.
///
/// The result lives on a grid of `segment_len/2 + 1` bins of width
/// `fs/segment_len` centered on the DFT frequencies `k·fs/segment_len`, so
/// its first and last bins overhang `[0, fs/2]` by half a bin. With that
/// geometry `∫PSD df` equals the window-compensated mean power.
pub fn estimate_psd<T: Real>(
    samples: &[T],
    sample_rate: T,
    segment_len: usize,
    overlap_fraction: T,
) -> Result<Psd<T>> {
    estimate_psd_with(
        samples,
        sample_rate,
        segment_len,
        overlap_fraction,
        Window::Hann,
    )
}

pub fn estimate_psd_with<T: Real>(
    samples: &[T],
    sample_rate: T,
    segment_len: usize,
    overlap_fraction: T,
    window: Window,
) -> Result<Psd<T>> {
    if !(overlap_fraction >= T::zero() && overlap_fraction < T::one()) {
        return Err(Error::InvalidOverlap(overlap_fraction.as_f64()));
    }
    if !(sample_rate > T::zero() && sample_rate.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "sample_rate",
            reason: "must be positive and finite".into(),
        });
    }
    let n = segment_len;
    if n < 2 || samples.len() < n {
        return Err(Error::TooFewSamples {
            needed: n.max(2),
            got: samples.len(),
        });
    }
    let overlap = (overlap_fraction * T::from_count(n))
        .round()
        .to_usize()
        .unwrap_or(0)
        .min(n - 1);
    let step = n - overlap;
    let num_segments = (samples.len() - n) / step + 1;

    let w: Vec<T> = window.coefficients(n);
    let w_energy: T = w.iter().map(|&x| x * x).sum();
    let fft = FftPlanner::new().plan_fft_forward(n);
    let bins = n / 2 + 1;
    let mut acc = vec![T::zero(); bins];
    let mut buf = vec![Complex::new(T::zero(), T::zero()); n];
    for s in 0..num_segments {
        let seg = &samples[s * step..s * step + n];
        for ((b, &x), &wi) in buf.iter_mut().zip(seg).zip(&w) {
            *b = Complex::new(x * wi, T::zero());
        }
        fft.process(&mut buf);
        for (a, b) in acc.iter_mut().zip(&buf) {
            *a = *a + b.norm_sqr();
        }
    }

    let scale = T::one() / (sample_rate * w_energy * T::from_count(num_segments));
    let has_nyquist = n.is_multiple_of(2);
    let values = acc
        .into_iter()
        .enumerate()
        .map(|(k, p)| {
            let one_sided = k == 0 || (has_nyquist && k == bins - 1);
            if one_sided {
                p * scale
            } else {
                T::lit(2.0) * p * scale
            }
        })
        .collect();
    let delta = sample_rate / T::from_count(n);
    let half = delta / T::lit(2.0);
    let grid = FrequencyGrid::new(-half, delta * T::from_count(bins - 1) + half, bins)?;
    Psd::new(grid, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn sinusoid_power_is_half() {
        let fs = 1000.0;
        let x: Vec<f64> = (0..65536)
            .map(|i| (2.0 * std::f64::consts::PI * 123.4 * i as f64 / fs).sin())
            .collect();
        let psd = estimate_psd(&x, fs, 1024, 0.5).unwrap();
        let p = psd.integrate();
        assert!((p - 0.5).abs() / 0.5 < 0.01, "integrated power {p}");
        assert!((psd.grid().center(1) - fs / 1024.0).abs() < 1e-9);
    }

    #[test]
    fn zero_input_zero_psd() {
        let psd = estimate_psd(&[0.0f64; 512], 10.0, 64, 0.5).unwrap();
        assert!(psd.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn white_noise_level_and_parseval() {
        let fs = 2.0e3;
        let sigma = 0.7;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let normal = Normal::new(0.0, sigma).unwrap();
        let seg = 256;
        // 100 averaged segments at 50 % overlap.
        let x: Vec<f64> = (0..seg * 101 / 2)
            .map(|_| normal.sample(&mut rng))
            .collect();
        let psd = estimate_psd(&x, fs, seg, 0.5).unwrap();
        let expected = sigma * sigma / (fs / 2.0);
        let inner = &psd.values()[1..psd.len() - 1];
        let mean = inner.iter().sum::<f64>() / inner.len() as f64;
        assert!(
            (mean / expected - 1.0).abs() < 0.1,
            "mean {mean} vs {expected}"
        );
        let power = x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64;
        assert!((psd.integrate() - power).abs() / power < 0.02);
    }

    #[test]
    fn argument_errors() {
        let x = vec![0.0f64; 100];
        assert!(matches!(
            estimate_psd(&x, 1.0, 128, 0.5),
            Err(Error::TooFewSamples { .. })
        ));
        assert!(matches!(
            estimate_psd(&x, 1.0, 32, 1.0),
            Err(Error::InvalidOverlap(_))
        ));
        assert!(matches!(
            estimate_psd(&x, 1.0, 32, -0.1),
            Err(Error::InvalidOverlap(_))
        ));
    }
}
