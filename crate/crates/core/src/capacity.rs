//! Information and ADC-power functionals.
//!
//! All integrals are midpoint sums on the PSDs' shared grid. Quantization
//! noise and bits are related by `S_q = 2^(−2b)/12`, and ADC power (with the
//! technology constant absorbed) by `P = ∫ 2^b df = ∫ S_q^(−1/2) df / √12`.

use crate::{ChannelSpec, Error, FrequencyGrid, Psd, Real, Result};

/// Normalized ADC power, in Hz·2^bits.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct PowerBudget<T>(T);

impl<T: Real> PowerBudget<T> {
    pub fn new(p: T) -> Result<Self> {
        if p > T::zero() && p.is_finite() {
            Ok(Self(p))
        } else {
            Err(Error::NonPositive {
                what: "power budget",
                index: 0,
                value: p.as_f64(),
            })
        }
    }

    pub fn value(self) -> T {
        self.0
    }

    /// Physical ADC power for a proportionality constant `c` (`P = c·P_ADC`).
    pub fn watts(self, c: T) -> T {
        self.0 / c
    }

    pub fn relative_error(self, other: Self) -> T {
        ((self.0 - other.0) / other.0).abs()
    }
}

/// Real-valued bits per frequency bin.
///
/// Bits may be negative when they come from a quantization PSD above 1/12;
/// the math keeps them as is and only [`BitProfile::reporting_view`] clamps.
#[derive(Debug, Clone, PartialEq)]
pub struct BitProfile<T> {
    grid: FrequencyGrid<T>,
    bits: Vec<T>,
}

impl<T: Real> BitProfile<T> {
    pub fn new(grid: FrequencyGrid<T>, bits: Vec<T>) -> Result<Self> {
        if bits.len() != grid.num_bins() {
            return Err(Error::LengthMismatch {
                expected: grid.num_bins(),
                got: bits.len(),
            });
        }
        if let Some((index, b)) = bits.iter().enumerate().find(|(_, b)| !b.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "bits",
                reason: format!("bin {index} is {b}"),
            });
        }
        Ok(Self { grid, bits })
    }

    pub fn constant(grid: &FrequencyGrid<T>, bits: T) -> Result<Self> {
        Self::new(*grid, vec![bits; grid.num_bins()])
    }

    pub fn grid(&self) -> &FrequencyGrid<T> {
        &self.grid
    }

    pub fn bits(&self) -> &[T] {
        &self.bits
    }

    /// Bits clamped at zero, for tables and plots.
    pub fn reporting_view(&self) -> Vec<T> {
        self.bits.iter().map(|&b| b.max(T::zero())).collect()
    }

    /// Reporting view rounded to whole bits.
    pub fn rounded(&self) -> Vec<u32> {
        self.reporting_view()
            .iter()
            .map(|b| b.round().to_u32().unwrap_or(u32::MAX))
            .collect()
    }

    pub fn min_bits(&self) -> T {
        self.bits.iter().copied().fold(T::infinity(), T::min)
    }
}

fn log2_sum<T: Real>(grid: &FrequencyGrid<T>, ratios: impl Iterator<Item = T>) -> T {
    grid.integrate(ratios.map(|r| r.ln_1p() * T::LOG2_E()))
}

/// Capacity before conversion, `∫ log2(1 + S_x/S_v) df`, in bits/s.
pub fn capacity_before<T: Real>(ch: &ChannelSpec<T>) -> T {
    log2_sum(
        ch.grid(),
        ch.signal()
            .values()
            .iter()
            .zip(ch.noise().values())
            .map(|(&x, &v)| x / v),
    )
}

/// Capacity after conversion, `∫ log2(1 + S_x/(S_v + S_q)) df`.
pub fn capacity_after<T: Real>(ch: &ChannelSpec<T>, sq: &Psd<T>) -> Result<T> {
    ch.noise().require_same_grid(sq)?;
    Ok(log2_sum(
        ch.grid(),
        ch.signal()
            .values()
            .iter()
            .zip(ch.noise().values())
            .zip(sq.values())
            .map(|((&x, &v), &q)| x / (v + q)),
    ))
}

/// Information lost in conversion under the small-noise approximation,
/// `∫ log2(1 + S_q/S_v) df`.
pub fn info_loss<T: Real>(noise: &Psd<T>, sq: &Psd<T>) -> Result<T> {
    noise.require_same_grid(sq)?;
    noise.require_positive("noise PSD")?;
    Ok(log2_sum(
        noise.grid(),
        sq.values().iter().zip(noise.values()).map(|(&q, &v)| q / v),
    ))
}

/// `b(f) = −½·log2(12·S_q(f))`.
pub fn bits_from_sq<T: Real>(sq: &Psd<T>) -> Result<BitProfile<T>> {
    sq.require_positive("quantization PSD")?;
    let bits = sq
        .values()
        .iter()
        .map(|&q| -T::lit(0.5) * (T::lit(12.0) * q).log2())
        .collect();
    BitProfile::new(*sq.grid(), bits)
}

/// `S_q(f) = 2^(−2·b(f)) / 12`.
pub fn sq_from_bits<T: Real>(bp: &BitProfile<T>) -> Result<Psd<T>> {
    let values = bp
        .bits()
        .iter()
        .map(|&b| (-T::lit(2.0) * b).exp2() / T::lit(12.0))
        .collect();
    Psd::new(*bp.grid(), values)
}

/// `P = ∫ 2^b(f) df`.
pub fn power_of_bits<T: Real>(bp: &BitProfile<T>) -> Result<PowerBudget<T>> {
    PowerBudget::new(bp.grid().integrate(bp.bits().iter().map(|b| b.exp2())))
}

/// `P = ∫ S_q^(−1/2)(f) df / √12`.
pub fn power_of_sq<T: Real>(sq: &Psd<T>) -> Result<PowerBudget<T>> {
    sq.require_positive("quantization PSD")?;
    let integral = sq
        .grid()
        .integrate(sq.values().iter().map(|q| q.sqrt().recip()));
    PowerBudget::new(integral / T::lit(12.0).sqrt())
}
