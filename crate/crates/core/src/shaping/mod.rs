//! Power-constrained optimal quantization-noise shaping.
//!
//! Minimizing the information loss `∫ log2(1 + S_q/S_v) df` subject to the
//! ADC power `∫ S_q^(−1/2) df = √12·P` gives, in the small-noise regime,
//!
//! ```text
//! S_q(f) = S_v(f)^(2/3) · [ Δ·Σ S_v(f_k)^(−1/3) / (√12·P) ]²
//! ```
//!
//! evaluated here with the discrete sum on the problem's own grid, so the
//! power constraint holds exactly on that grid. [`optimal_sq_numerical`] is
//! an independent stochastic descent on the exact loss used to cross-check
//! the closed form.

mod search;

use std::io::Write;

use crate::spectral::io::{fmt_value, write_columns};
use crate::{
    bits_from_sq, info_loss, power_of_sq, BitProfile, ChannelSpec, PowerBudget, Psd, Real, Result,
};

pub use search::{optimal_sq_numerical, NumericalShaping, SearchConfig};

/// Smallness ratio `max(S_q/S_v)` above which the closed form is flagged.
pub const SMALLNESS_WARNING: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct ShapingResult<T> {
    pub sq_opt: Psd<T>,
    pub bit_profile: BitProfile<T>,
    pub achieved_power: PowerBudget<T>,
    /// `∫ log2(1 + S_q/S_v) df` of `sq_opt`, bits/s.
    pub info_loss: T,
    /// The squared bracket `[Δ·Σ S_v^(−1/3) / (√12·P)]²`, i.e. the constant
    /// with `S_q = S_v^(2/3) · lagrange_scale`.
    pub lagrange_scale: T,
}

impl<T: Real> ShapingResult<T> {
    pub(crate) fn assemble(noise: &Psd<T>, sq: Psd<T>, lagrange_scale: T) -> Result<Self> {
        Ok(Self {
            bit_profile: bits_from_sq(&sq)?,
            achieved_power: power_of_sq(&sq)?,
            info_loss: info_loss(noise, &sq)?,
            sq_opt: sq,
            lagrange_scale,
        })
    }

    /// Lagrange multiplier of the power constraint implied by
    /// `lagrange_scale`: `λ = 2·W·log2(e)·scale^(3/2)` for band width `W`.
    pub fn lagrange_multiplier(&self) -> T {
        let w = self.sq_opt.grid().bandwidth();
        T::lit(2.0) * w * T::LOG2_E() * self.lagrange_scale.powf(T::lit(1.5))
    }

    /// CSV with header `frequency_hz,sq_opt,bits`. Bits are the raw,
    /// unclamped real values.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let f: Vec<T> = self.sq_opt.grid().centers().collect();
        write_columns(
            writer,
            &["frequency_hz", "sq_opt", "bits"],
            &[&f, self.sq_opt.values(), self.bit_profile.bits()],
        )
    }

    pub fn summary_pairs(&self) -> Vec<(String, String)> {
        vec![
            ("power".into(), fmt_value(self.achieved_power.value())),
            ("info_loss".into(), fmt_value(self.info_loss)),
            ("lagrange_scale".into(), fmt_value(self.lagrange_scale)),
            (
                "lagrange_multiplier".into(),
                fmt_value(self.lagrange_multiplier()),
            ),
            ("min_bits".into(), fmt_value(self.bit_profile.min_bits())),
        ]
    }
}

/// The bracket term `[Σ w_k·Δ·S_v^(−1/3) / (√12·P)]²` with per-bin weights
/// (fractions of each bin inside the band of interest).
pub(crate) fn bracket<T: Real>(noise: &Psd<T>, weights: Option<&[T]>, budget: PowerBudget<T>) -> T {
    let third = T::one() / T::lit(3.0);
    let grid = noise.grid();
    let integral = match weights {
        None => grid.integrate(noise.values().iter().map(|v| v.powf(-third))),
        Some(w) => grid.integrate(
            noise
                .values()
                .iter()
                .zip(w)
                .map(|(v, &wk)| wk * v.powf(-third)),
        ),
    };
    let ratio = integral / (T::lit(12.0).sqrt() * budget.value());
    ratio * ratio
}

pub(crate) fn shape_with_bracket<T: Real>(noise: &Psd<T>, scale: T) -> Result<Psd<T>> {
    let two_thirds = T::lit(2.0) / T::lit(3.0);
    Psd::new(
        *noise.grid(),
        noise
            .values()
            .iter()
            .map(|v| v.powf(two_thirds) * scale)
            .collect(),
    )
}

/// Closed-form optimal quantization-noise PSD for `noise` under `budget`.
pub fn optimal_sq<T: Real>(noise: &Psd<T>, budget: PowerBudget<T>) -> Result<ShapingResult<T>> {
    noise.require_positive("noise PSD")?;
    let scale = bracket(noise, None, budget);
    let sq = shape_with_bracket(noise, scale)?;
    sq.require_positive("optimal quantization PSD")?;
    ShapingResult::assemble(noise, sq, scale)
}

/// Checks of a candidate quantization PSD against the power budget, the
/// closed-form optimum and the small-noise assumptions.
#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport<T> {
    /// `(power_of_sq(sq) − P) / P`.
    pub power_residual: T,
    pub info_loss: T,
    pub closed_form_loss: T,
    /// `info_loss − closed_form_loss`; positive when `sq` is worse.
    pub loss_vs_closed_form: T,
    /// `max S_q/S_v`.
    pub max_sq_over_noise: T,
    /// `max (S_v + S_q)/S_x`; infinite where the signal vanishes.
    pub max_noise_over_signal: T,
    pub min_bits: T,
    pub warnings: Vec<String>,
}

impl<T: Real> VerificationReport<T> {
    pub fn pairs(&self) -> Vec<(String, String)> {
        vec![
            ("power_residual".into(), fmt_value(self.power_residual)),
            ("info_loss".into(), fmt_value(self.info_loss)),
            ("closed_form_loss".into(), fmt_value(self.closed_form_loss)),
            (
                "loss_vs_closed_form".into(),
                fmt_value(self.loss_vs_closed_form),
            ),
            (
                "max_sq_over_noise".into(),
                fmt_value(self.max_sq_over_noise),
            ),
            (
                "max_noise_over_signal".into(),
                fmt_value(self.max_noise_over_signal),
            ),
            ("min_bits".into(), fmt_value(self.min_bits)),
            ("warnings".into(), self.warnings.len().to_string()),
        ]
    }
}

pub fn verify_shaping<T: Real>(
    ch: &ChannelSpec<T>,
    sq: &Psd<T>,
    budget: PowerBudget<T>,
) -> Result<VerificationReport<T>> {
    ch.noise().require_same_grid(sq)?;
    let power = power_of_sq(sq)?;
    let power_residual = (power.value() - budget.value()) / budget.value();
    let loss = info_loss(ch.noise(), sq)?;
    let closed = optimal_sq(ch.noise(), budget)?;
    let fold_max = |it: &mut dyn Iterator<Item = T>| it.fold(T::zero(), T::max);
    let max_sq_over_noise = fold_max(
        &mut sq
            .values()
            .iter()
            .zip(ch.noise().values())
            .map(|(&q, &v)| q / v),
    );
    let max_noise_over_signal = fold_max(
        &mut ch
            .signal()
            .values()
            .iter()
            .zip(ch.noise().values())
            .zip(sq.values())
            .map(|((&x, &v), &q)| {
                if x > T::zero() {
                    (v + q) / x
                } else {
                    T::infinity()
                }
            }),
    );
    let min_bits = bits_from_sq(sq)?.min_bits();

    let mut warnings = Vec::new();
    if max_sq_over_noise > T::lit(SMALLNESS_WARNING) {
        warnings.push(format!(
            "max S_q/S_v = {max_sq_over_noise:.3e} exceeds {SMALLNESS_WARNING}: small-quantization-noise assumption is weak"
        ));
    }
    if max_noise_over_signal > T::lit(SMALLNESS_WARNING) {
        warnings.push(format!(
            "max (S_v+S_q)/S_x = {max_noise_over_signal:.3e} exceeds {SMALLNESS_WARNING}: noise is not small relative to the signal"
        ));
    }
    if min_bits < T::zero() {
        warnings.push(format!(
            "negative bits (min {min_bits:.3}): budget too small for part of the band"
        ));
    }
    Ok(VerificationReport {
        power_residual,
        info_loss: loss,
        closed_form_loss: closed.info_loss,
        loss_vs_closed_form: loss - closed.info_loss,
        max_sq_over_noise,
        max_noise_over_signal,
        min_bits,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{Error, FrequencyGrid};

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn flat_noise_gives_flat_closed_form() {
        let g = FrequencyGrid::new(2.0, 7.0, 16).unwrap();
        let p = PowerBudget::new(40.0).unwrap();
        let expected = 25.0 / (12.0 * 1600.0);
        for v in [1e-9, 1.0, 3e4] {
            let r = optimal_sq(&Psd::constant(&g, v).unwrap(), p).unwrap();
            assert!(r.sq_opt.values().iter().all(|&q| rel(q, expected) < 1e-12));
        }
    }

    #[test]
    fn single_bin_ignores_noise_level() {
        let g = FrequencyGrid::new(0.0, 3.0, 1).unwrap();
        let p = PowerBudget::new(10.0).unwrap();
        let r = optimal_sq(&Psd::constant(&g, 0.37).unwrap(), p).unwrap();
        assert!(rel(r.sq_opt.values()[0], 9.0 / 1200.0) < 1e-12);
    }

    #[test]
    fn two_level_noise_ratio() {
        let g = FrequencyGrid::new(0.0, 1.0, 128).unwrap();
        let noise = Psd::from_fn(&g, |f| if f < 0.5 { 1.0 } else { 8.0 });
        let r = optimal_sq(&noise, PowerBudget::new(1.0).unwrap()).unwrap();
        let v = r.sq_opt.values();
        assert!(rel(v[100] / v[10], 4.0) < 1e-12);
        // Bracket: (½·1 + ½·½)² / 12 = 0.5625/12.
        assert!(rel(v[10], 0.5625 / 12.0) < 1e-12);
        assert!(rel(v[100], 4.0 * 0.5625 / 12.0) < 1e-12);
    }

    #[test]
    fn rejects_bad_inputs() {
        let g = FrequencyGrid::new(0.0, 1.0, 4).unwrap();
        let p = PowerBudget::new(1.0).unwrap();
        assert!(matches!(
            optimal_sq(&Psd::new(g, vec![1.0, 0.0, 1.0, 1.0]).unwrap(), p),
            Err(Error::NonPositive { .. })
        ));
    }

    #[test]
    fn lagrange_multiplier_matches_stationarity() {
        // λ must satisfy S_q^(−1/2) = 2W·log2(e)/λ · S_q/S_v at every bin.
        let g = FrequencyGrid::<f64>::new(0.0, 2.0, 32).unwrap();
        let noise = Psd::from_fn(&g, |f| 1e-4 * (1.0 + 5.0 * f * f));
        let r = optimal_sq(&noise, PowerBudget::new(300.0).unwrap()).unwrap();
        let lambda = r.lagrange_multiplier();
        for (q, v) in r.sq_opt.values().iter().zip(noise.values()) {
            let lhs = q.powf(-0.5);
            let rhs = 2.0 * 2.0 * std::f64::consts::LOG2_E / lambda * q / v;
            assert!(rel(lhs, rhs) < 1e-12);
        }
    }

    #[test]
    fn verification_reports() {
        let g = FrequencyGrid::<f64>::new(0.0, 1.0, 64).unwrap();
        let ch = crate::spectral::wireline_channel(&g, &Default::default()).unwrap();
        let p = PowerBudget::new(1e4).unwrap();
        let opt = optimal_sq(ch.noise(), p).unwrap();
        let rep = verify_shaping(&ch, &opt.sq_opt, p).unwrap();
        assert_eq!(rep.loss_vs_closed_form, 0.0);
        assert!(rep.power_residual.abs() < 1e-9);
        assert!(rep.warnings.is_empty());

        // Flat PSD at the same power loses more on a non-flat noise floor.
        let w = g.bandwidth();
        let flat = Psd::constant(&g, w * w / (12.0 * 1e8)).unwrap();
        let rep = verify_shaping(&ch, &flat, p).unwrap();
        assert!(rep.power_residual.abs() < 1e-12);
        assert!(rep.loss_vs_closed_form > 0.0);

        let doubled = opt.sq_opt.scaled(4.0).unwrap();
        let rep = verify_shaping(&ch, &doubled, p).unwrap();
        assert!((rep.power_residual + 0.5).abs() < 1e-12);
    }

    #[test]
    fn verification_flags_weak_assumptions() {
        let g = FrequencyGrid::new(0.0, 1.0, 8).unwrap();
        let ch = ChannelSpec::new(
            Psd::constant(&g, 1.0).unwrap(),
            Psd::constant(&g, 1e-3).unwrap(),
        )
        .unwrap();
        let p = PowerBudget::new(0.1).unwrap();
        let r = optimal_sq(ch.noise(), p).unwrap();
        let rep = verify_shaping(&ch, &r.sq_opt, p).unwrap();
        assert!(rep.min_bits < 0.0);
        assert_eq!(rep.warnings.len(), 3);
    }

    #[test]
    fn csv_layout() {
        let g = FrequencyGrid::new(0.0, 1.0, 3).unwrap();
        let r = optimal_sq(
            &Psd::constant(&g, 1.0).unwrap(),
            PowerBudget::new(2.0).unwrap(),
        )
        .unwrap();
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("frequency_hz,sq_opt,bits"));
        assert_eq!(lines.count(), 3);
    }
}
