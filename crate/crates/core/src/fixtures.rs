//! Reference channels used by the tests, the acceptance suite and the CLI
//! defaults. Band `[0, 1] Hz`; budgets chosen so the quantization noise
//! stays well below the channel noise.

use crate::spectral::{wireless_channel, wireline_channel, WirelessParams, WirelineParams};
use crate::{ChannelSpec, FrequencyGrid, ModulatorConfig, PowerBudget, Real, Result};

pub const BINS: usize = 256;
pub const BUDGET: f64 = 1e4;

pub fn unit_grid<T: Real>(bins: usize) -> Result<FrequencyGrid<T>> {
    FrequencyGrid::new(T::zero(), T::one(), bins)
}

/// Signal 0 → −20 dB, noise −70 → −50 dB: SNR falls from 70 to 30 dB.
pub fn wireline<T: Real>(bins: usize) -> Result<ChannelSpec<T>> {
    wireline_channel(&unit_grid(bins)?, &WirelineParams::default())
}

/// Signal −10 dB over a −70 dB floor with two 12 dB noise bumps of width
/// 0.3·band (seed 7).
pub fn wireless<T: Real>(bins: usize) -> Result<ChannelSpec<T>> {
    wireless_channel(&unit_grid(bins)?, &WirelessParams::default())
}

pub fn budget<T: Real>() -> PowerBudget<T> {
    PowerBudget::new(T::lit(BUDGET)).expect("positive budget")
}

/// Order 4, OSR 12, 16-level quantizer, sampled so the signal band is
/// exactly the fixtures' `[0, 1] Hz`.
pub fn modulator<T: Real>() -> ModulatorConfig<T> {
    let osr = T::lit(12.0);
    ModulatorConfig {
        osr,
        sample_rate: T::lit(2.0) * osr,
        ..ModulatorConfig::default()
    }
}

/// `len` samples of an in-band sinusoid at half the quantizer full scale
/// (−6 dBFS). Its frequency is an irrational fraction of `f_s`, so the
/// quantizer error never settles into a short period.
pub fn test_tone<T: Real>(cfg: &ModulatorConfig<T>, len: usize) -> Vec<T> {
    let amp = T::lit(0.5) * cfg.full_scale();
    let w = T::TAU() * cfg.band_edge() * T::lit(std::f64::consts::FRAC_1_PI) / cfg.sample_rate;
    (0..len)
        .map(|i| amp * (w * T::from_count(i)).sin())
        .collect()
}
