//! Delta-sigma realization of a quantization-noise shape: transfer-function
//! algebra, NTF-induced noise PSD, NTF synthesis and loop simulation.

mod design;
mod poly;
mod sim;
mod tf;

pub use design::{design_ntf, design_ntf_with, FitOptions, NtfDesign};
pub use sim::{
    measured_vs_predicted, measured_vs_predicted_with, realization_report, simulate, simulate_with,
    QuantizerModel, RealizationReport, SimulationTrace, TrackingReport,
};
pub use tf::{loop_from_ntf, ntf_from_loop, stf_from_loop, RationalTf};

use crate::{Error, FrequencyGrid, Psd, Real, Result};

/// Modulator parameters. `quantizer_levels` and `step` describe a mid-rise
/// uniform quantizer with output levels `(k − (L−1)/2)·step`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModulatorConfig<T> {
    pub order: usize,
    pub osr: T,
    pub sample_rate: T,
    pub quantizer_levels: usize,
    pub step: T,
    /// Cap on `max |NTF(e^{jθ})|`.
    pub max_ntf_gain: T,
    /// Adds triangular dither of ±`step` peak before quantization.
    pub dither: bool,
    pub seed: u64,
}

impl<T: Real> Default for ModulatorConfig<T> {
    fn default() -> Self {
        Self {
            order: 4,
            osr: T::lit(12.0),
            sample_rate: T::one(),
            quantizer_levels: 16,
            step: T::lit(0.125),
            max_ntf_gain: T::lit(1.5),
            dither: false,
            seed: 0,
        }
    }
}

impl<T: Real> ModulatorConfig<T> {
    pub fn validate(&self) -> Result<()> {
        let bad = |name, reason: &str| {
            Err(Error::InvalidParameter {
                name,
                reason: reason.to_string(),
            })
        };
        if self.order == 0 {
            return bad("order", "order 0 cannot shape quantization noise");
        }
        if !(self.osr >= T::lit(2.0)) || !self.osr.is_finite() {
            return bad("osr", "must be at least 2");
        }
        if !(self.sample_rate > T::zero()) || !self.sample_rate.is_finite() {
            return bad("sample_rate", "must be positive and finite");
        }
        if self.quantizer_levels < 2 {
            return bad("quantizer_levels", "need at least 2 levels");
        }
        if !(self.step > T::zero()) || !self.step.is_finite() {
            return bad("step", "must be positive and finite");
        }
        if !(self.max_ntf_gain >= T::one()) || !self.max_ntf_gain.is_finite() {
            return bad("max_ntf_gain", "must be at least 1");
        }
        Ok(())
    }

    /// Largest quantizer output magnitude, `(L − 1)·step / 2`.
    pub fn full_scale(&self) -> T {
        T::from_count(self.quantizer_levels - 1) * self.step / T::lit(2.0)
    }

    /// Upper edge of the signal band, `f_s / (2·osr)`.
    pub fn band_edge(&self) -> T {
        self.sample_rate / (T::lit(2.0) * self.osr)
    }

    /// Normalized angle `2π f / f_s`.
    pub fn angle(&self, f: T) -> T {
        T::TAU() * f / self.sample_rate
    }
}

/// Quantization-noise PSD induced by `ntf`:
/// `S_q(f) = step² / (12 f_s) · |NTF(e^{j2πf/f_s})|²`, evaluated at bin centers.
pub fn ntf_quant_psd<T: Real>(
    ntf: &RationalTf<T>,
    cfg: &ModulatorConfig<T>,
    grid: &FrequencyGrid<T>,
) -> Result<Psd<T>> {
    cfg.validate()?;
    check_nyquist(grid, cfg.sample_rate)?;
    let floor = cfg.step * cfg.step / (T::lit(12.0) * cfg.sample_rate);
    let values = grid
        .centers()
        .map(|f| floor * ntf.eval_angle(cfg.angle(f)).norm_sqr())
        .collect();
    Psd::new(*grid, values)
}

fn check_nyquist<T: Real>(grid: &FrequencyGrid<T>, fs: T) -> Result<()> {
    let nyquist = fs / T::lit(2.0);
    let slack = T::lit(1e-12) * nyquist;
    for f in [grid.f_lo(), grid.f_hi()] {
        if f < -slack || f > nyquist + slack {
            return Err(Error::OutsideNyquist {
                frequency: f.as_f64(),
                sample_rate: fs.as_f64(),
            });
        }
    }
    Ok(())
}
