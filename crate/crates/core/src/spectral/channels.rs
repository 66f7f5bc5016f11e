//! Parametric example channels.
//!
//! Wireline: log-linear loop attenuation of the signal over a noise floor
//! that tilts upward, so the SNR falls monotonically with frequency.
//! Wireless: flat signal over a flat noise floor with raised-cosine noise
//! bumps (interferers / fades), giving one SNR notch per bump.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{ChannelSpec, Error, FrequencyGrid, Psd, Real, Result};

fn from_db<T: Real>(x: T) -> T {
    T::lit(10.0).powf(x / T::lit(10.0))
}

fn positive_noise<T: Real>(grid: &FrequencyGrid<T>, values: Vec<T>) -> Result<Psd<T>> {
    let noise = Psd::new(*grid, values)?;
    noise.require_positive("noise PSD")?;
    Ok(noise)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WirelineParams<T> {
    /// Signal PSD at `f_lo`, dB.
    pub signal_level_db: T,
    /// Signal attenuation accumulated across the band, dB (≥ 0).
    pub signal_slope_db: T,
    /// Noise PSD at `f_lo`, dB.
    pub noise_floor_db: T,
    /// Noise rise accumulated across the band, dB (≥ 0).
    pub noise_tilt_db: T,
}

impl<T: Real> Default for WirelineParams<T> {
    fn default() -> Self {
        Self {
            signal_level_db: T::zero(),
            signal_slope_db: T::lit(20.0),
            noise_floor_db: T::lit(-70.0),
            noise_tilt_db: T::lit(20.0),
        }
    }
}

/// Wireline-style channel: `S_x` and `S_v` are straight lines in dB across
/// the band.
pub fn wireline_channel<T: Real>(
    grid: &FrequencyGrid<T>,
    params: &WirelineParams<T>,
) -> Result<ChannelSpec<T>> {
    let p = params;
    for (name, v) in [
        ("signal_level_db", p.signal_level_db),
        ("signal_slope_db", p.signal_slope_db),
        ("noise_floor_db", p.noise_floor_db),
        ("noise_tilt_db", p.noise_tilt_db),
    ] {
        if !v.is_finite() {
            return Err(Error::InvalidParameter {
                name,
                reason: "must be finite".into(),
            });
        }
    }
    if p.signal_slope_db < T::zero() || p.noise_tilt_db < T::zero() {
        return Err(Error::InvalidParameter {
            name: "signal_slope_db/noise_tilt_db",
            reason: "negative values would make the SNR rise with frequency".into(),
        });
    }
    let position = |f: T| (f - grid.f_lo()) / grid.bandwidth();
    let signal = Psd::from_fn(grid, |f| {
        from_db(p.signal_level_db - p.signal_slope_db * position(f))
    });
    let noise = positive_noise(
        grid,
        grid.centers()
            .map(|f| from_db(p.noise_floor_db + p.noise_tilt_db * position(f)))
            .collect(),
    )?;
    ChannelSpec::new(signal, noise)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WirelessParams<T> {
    /// Flat signal PSD, dB.
    pub signal_level_db: T,
    pub num_notches: usize,
    /// Height of each noise bump above the floor, dB; the SNR notch depth.
    pub notch_depth_db: T,
    /// Full width of each raised-cosine bump as a fraction of the band.
    pub notch_width: T,
    pub noise_floor_db: T,
    pub seed: u64,
}

impl<T: Real> Default for WirelessParams<T> {
    fn default() -> Self {
        Self {
            signal_level_db: T::lit(-10.0),
            num_notches: 2,
            notch_depth_db: T::lit(12.0),
            notch_width: T::lit(0.3),
            noise_floor_db: T::lit(-70.0),
            seed: 7,
        }
    }
}

impl<T: Real> WirelessParams<T> {
    /// Notch centers as fractions of the band. The band is split into
    /// `num_notches` equal slots and each notch is placed uniformly at
    /// random where it fits inside its slot, so notches never overlap.
    pub fn notch_positions(&self) -> Result<Vec<f64>> {
        let width = self.notch_width.as_f64();
        let depth = self.notch_depth_db.as_f64();
        if !depth.is_finite() || depth < 0.0 {
            return Err(Error::InvalidParameter {
                name: "notch_depth_db",
                reason: "must be finite and non-negative".into(),
            });
        }
        if self.num_notches == 0 {
            return Ok(Vec::new());
        }
        if !(width > 0.0) || width * self.num_notches as f64 > 1.0 {
            return Err(Error::InvalidParameter {
                name: "notch_width",
                reason: format!(
                    "{} notches of width {} do not fit in the band",
                    self.num_notches, width
                ),
            });
        }
        let slot = 1.0 / self.num_notches as f64;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        Ok((0..self.num_notches)
            .map(|i| {
                let free = slot - width;
                i as f64 * slot + width / 2.0 + free * rng.random::<f64>()
            })
            .collect())
    }
}

/// Wireless-style channel with frequency-selective SNR notches.
pub fn wireless_channel<T: Real>(
    grid: &FrequencyGrid<T>,
    params: &WirelessParams<T>,
) -> Result<ChannelSpec<T>> {
    let p = params;
    if !(p.signal_level_db.is_finite() && p.noise_floor_db.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "signal_level_db/noise_floor_db",
            reason: "must be finite".into(),
        });
    }
    let centers: Vec<T> = p.notch_positions()?.into_iter().map(T::lit).collect();
    let floor = from_db(p.noise_floor_db);
    let bump = from_db(p.notch_depth_db) - T::one();
    let half = p.notch_width / T::lit(2.0);
    let shape = |u: T| -> T {
        centers
            .iter()
            .map(|&c| {
                let d = (u - c).abs();
                if d < half {
                    T::lit(0.5) * (T::one() + (T::PI() * d / half).cos())
                } else {
                    T::zero()
                }
            })
            .sum()
    };
    let signal = Psd::from_fn(grid, |_| from_db(p.signal_level_db));
    let noise = positive_noise(
        grid,
        grid.centers()
            .map(|f| {
                let u = (f - grid.f_lo()) / grid.bandwidth();
                floor * (T::one() + bump * shape(u))
            })
            .collect(),
    )?;
    ChannelSpec::new(signal, noise)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn snr_db(ch: &ChannelSpec<f64>) -> Vec<f64> {
        ch.snr().iter().map(|s| 10.0 * s.log10()).collect()
    }

    /// Strict local minima, treating plateaus as a single point.
    fn count_local_minima(x: &[f64]) -> usize {
        let mut dedup: Vec<f64> = Vec::new();
        for &v in x {
            if dedup.last().is_none_or(|l| (l - v).abs() > 1e-9) {
                dedup.push(v);
            }
        }
        dedup
            .windows(3)
            .filter(|w| w[1] < w[0] && w[1] < w[2])
            .count()
    }

    #[test]
    fn wireline_snr_falls_monotonically() {
        let g = FrequencyGrid::new(0.0, 1.0, 200).unwrap();
        let params = WirelineParams {
            signal_level_db: 0.0,
            signal_slope_db: 0.0,
            noise_floor_db: -90.0,
            noise_tilt_db: 50.0,
        };
        let ch = wireline_channel(&g, &params).unwrap();
        let snr = snr_db(&ch);
        assert!(snr.windows(2).all(|w| w[1] < w[0]));
        // Evaluated at bin centers: 90 − 50·u with u = (k + 1/2)/K.
        assert!((snr[0] - (90.0 - 50.0 * 0.5 / 200.0)).abs() < 1e-9);
        assert!((snr[199] - (40.0 + 50.0 * 0.5 / 200.0)).abs() < 1e-9);
    }

    #[test]
    fn wireline_flat_case() {
        let g = FrequencyGrid::new(0.0, 1.0, 16).unwrap();
        let params = WirelineParams {
            signal_level_db: -3.0,
            signal_slope_db: 0.0,
            noise_floor_db: -40.0,
            noise_tilt_db: 0.0,
        };
        let snr = snr_db(&wireline_channel(&g, &params).unwrap());
        assert!(snr.iter().all(|s| (s - 37.0).abs() < 1e-9));
    }

    #[test]
    fn wireline_zero_noise_rejected() {
        let g = FrequencyGrid::new(0.0, 1.0, 16).unwrap();
        let params = WirelineParams {
            noise_floor_db: -5000.0,
            ..WirelineParams::default()
        };
        assert!(matches!(
            wireline_channel(&g, &params),
            Err(Error::NonPositive { .. })
        ));
        let params = WirelineParams {
            noise_floor_db: f64::NEG_INFINITY,
            ..WirelineParams::default()
        };
        assert!(wireline_channel(&g, &params).is_err());
    }

    #[test]
    fn wireless_three_notches() {
        let g = FrequencyGrid::new(0.0, 1.0, 600).unwrap();
        let params = WirelessParams {
            signal_level_db: 0.0,
            num_notches: 3,
            notch_depth_db: 30.0,
            notch_width: 0.15,
            noise_floor_db: -60.0,
            seed: 11,
        };
        let ch = wireless_channel(&g, &params).unwrap();
        let snr = snr_db(&ch);
        assert_eq!(count_local_minima(&snr), 3);
        let top = snr.iter().cloned().fold(f64::MIN, f64::max);
        assert!((top - 60.0).abs() < 1e-9);
        let bottom = snr.iter().cloned().fold(f64::MAX, f64::min);
        // Bin centers land within half a bin of the bump peaks.
        assert!((top - bottom - 30.0).abs() < 0.1, "depth {}", top - bottom);
    }

    #[test]
    fn wireless_no_notches_is_flat() {
        let g = FrequencyGrid::new(0.0, 1.0, 64).unwrap();
        let params = WirelessParams {
            num_notches: 0,
            ..WirelessParams::default()
        };
        let snr = snr_db(&wireless_channel(&g, &params).unwrap());
        assert!(snr.iter().all(|s| (s - 60.0).abs() < 1e-9));
    }

    #[test]
    fn wireless_is_deterministic_per_seed() {
        let g = FrequencyGrid::new(0.0, 1.0, 128).unwrap();
        let p = WirelessParams::<f64>::default();
        assert_eq!(
            wireless_channel(&g, &p).unwrap(),
            wireless_channel(&g, &p).unwrap()
        );
        let q = WirelessParams { seed: 8, ..p };
        assert_ne!(
            wireless_channel(&g, &p).unwrap(),
            wireless_channel(&g, &q).unwrap()
        );
    }

    #[test]
    fn wireless_notches_must_fit() {
        let g = FrequencyGrid::new(0.0, 1.0, 128).unwrap();
        let p = WirelessParams {
            num_notches: 4,
            notch_width: 0.3,
            ..WirelessParams::default()
        };
        assert!(matches!(
            wireless_channel(&g, &p),
            Err(Error::InvalidParameter { .. })
        ));
    }
}
