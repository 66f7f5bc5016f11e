//! NTF synthesis by in-band log-magnitude fitting.

use std::f64::consts::PI;

use num_complex::Complex;
use rayon::prelude::*;

use super::{ModulatorConfig, RationalTf};
use crate::optim::nelder_mead;
use crate::spectral::db;
use crate::{Error, Psd, Real, Result};

/// Tuning knobs for [`design_ntf_with`].
#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    /// Designs whose in-band RMS error exceeds this are rejected as infeasible.
    pub max_rms_db: f64,
    /// Upper bound on NTF pole radius.
    pub max_pole_radius: f64,
    /// Lower bound on NTF zero radius.
    pub min_zero_radius: f64,
    /// Angles on `[0, π]` where the gain cap is enforced during the fit.
    pub cap_points: usize,
    pub max_evals: usize,
    /// Reward per dB of in-band suppression, traded against the squared
    /// RMS shape error (dB²).
    pub depth_weight: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            max_rms_db: 6.0,
            max_pole_radius: 0.98,
            min_zero_radius: 0.5,
            cap_points: 256,
            max_evals: 8_000,
            depth_weight: 0.05,
        }
    }
}

/// A synthesized NTF with its fit quality.
#[derive(Debug, Clone, PartialEq)]
pub struct NtfDesign<T> {
    pub ntf: RationalTf<T>,
    /// RMS of the in-band dB residual after removing the best level offset.
    pub rms_error_db: f64,
    /// Mean of `10·log10(S_q,ntf) − 10·log10(target)` over the band.
    pub level_offset_db: f64,
    /// `max |NTF(e^{jθ})|` on a dense grid.
    pub peak_gain: f64,
}

/// [`design_ntf_with`] using default [`FitOptions`].
pub fn design_ntf<T: Real>(target_sq: &Psd<T>, cfg: &ModulatorConfig<T>) -> Result<NtfDesign<T>> {
    design_ntf_with(target_sq, cfg, &FitOptions::default())
}

/// Fits an order-`cfg.order` monic NTF whose induced quantization-noise PSD
/// follows `target_sq` (up to a constant level) over the signal band
/// `[0, f_s/(2·osr)]`, with peak `|NTF|` held below `cfg.max_ntf_gain`.
///
/// Zeros start at the target's in-band minima and the poles are fitted to
/// them first; a joint refinement of zeros and poles follows.
pub fn design_ntf_with<T: Real>(
    target_sq: &Psd<T>,
    cfg: &ModulatorConfig<T>,
    opts: &FitOptions,
) -> Result<NtfDesign<T>> {
    cfg.validate()?;
    let fit = FitProblem::new(target_sq, cfg, opts)?;

    let starts = fit.starts();
    let refined: Vec<(Vec<f64>, f64)> = starts
        .into_par_iter()
        .map(|start| fit.refine(start))
        .collect();
    // Earliest start wins ties so the result does not depend on scheduling.
    let best = refined
        .into_iter()
        .reduce(|a, b| if b.1 < a.1 { b } else { a })
        .expect("at least one start");

    let layout = fit.decode(&best.0);
    let (rms, offset) = fit.residual(&layout);
    let zeros: Vec<Complex<T>> = layout.zeros.iter().map(|z| to_t(*z)).collect();
    let poles: Vec<Complex<T>> = layout.poles.iter().map(|p| to_t(*p)).collect();
    let ntf = RationalTf::new(zeros, poles, T::one())?;
    let peak = ntf.peak_gain(16 * opts.cap_points.max(512)).as_f64();

    let cap = cfg.max_ntf_gain.as_f64();
    if !ntf.is_stable() {
        return Err(Error::Infeasible {
            reason: "fitted NTF has poles on or outside the unit circle".into(),
            achieved_rms_db: rms,
            peak_gain: peak,
        });
    }
    if peak > cap * (1.0 + 1e-9) {
        return Err(Error::Infeasible {
            reason: format!("peak |NTF| exceeds the cap {cap}"),
            achieved_rms_db: rms,
            peak_gain: peak,
        });
    }
    if !(rms <= opts.max_rms_db) {
        return Err(Error::Infeasible {
            reason: format!(
                "in-band shape not reachable with order {} (limit {} dB)",
                cfg.order, opts.max_rms_db
            ),
            achieved_rms_db: rms,
            peak_gain: peak,
        });
    }
    Ok(NtfDesign {
        ntf,
        rms_error_db: rms,
        level_offset_db: offset,
        peak_gain: peak,
    })
}

fn to_t<T: Real>(z: Complex<f64>) -> Complex<T> {
    Complex::new(T::lit(z.re), T::lit(z.im))
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn logit(p: f64) -> f64 {
    let p = p.clamp(1e-9, 1.0 - 1e-9);
    (p / (1.0 - p)).ln()
}

struct Layout {
    zeros: Vec<Complex<f64>>,
    poles: Vec<Complex<f64>>,
}

/// Parameter vector: for each conjugate zero pair (angle, radius), then a
/// real zero if the order is odd, then the same for poles. Every entry is
/// unconstrained and mapped through a sigmoid into its admissible range.
struct FitProblem {
    order: usize,
    band_angle: f64,
    /// In-band angles and target levels in dB.
    angles: Vec<f64>,
    target_db: Vec<f64>,
    cap_angles: Vec<f64>,
    cap: f64,
    opts: FitOptions,
}

const CAP_PENALTY: f64 = 1e4;
const CAP_MARGIN: f64 = 0.99;

impl FitProblem {
    fn new<T: Real>(target: &Psd<T>, cfg: &ModulatorConfig<T>, opts: &FitOptions) -> Result<Self> {
        let edge = cfg.band_edge().as_f64();
        let fs = cfg.sample_rate.as_f64();
        let mut angles = Vec::new();
        let mut target_db = Vec::new();
        for (k, (f, &v)) in target.grid().centers().zip(target.values()).enumerate() {
            let f = f.as_f64();
            if f < 0.0 || f > edge * (1.0 + 1e-12) {
                continue;
            }
            let v = v.as_f64();
            if !(v > 0.0) {
                return Err(Error::NonPositive {
                    what: "in-band target PSD",
                    index: k,
                    value: v,
                });
            }
            angles.push(2.0 * PI * f / fs);
            target_db.push(db(v));
        }
        if angles.len() < 2 {
            return Err(Error::InvalidParameter {
                name: "target_sq",
                reason: format!("needs at least two bins inside the signal band [0, {edge}]"),
            });
        }
        let n = opts.cap_points.max(2);
        let cap_angles = (0..n).map(|i| PI * i as f64 / (n - 1) as f64).collect();
        Ok(Self {
            order: cfg.order,
            band_angle: PI / cfg.osr.as_f64(),
            angles,
            target_db,
            cap_angles,
            cap: cfg.max_ntf_gain.as_f64(),
            opts: opts.clone(),
        })
    }

    fn pairs(&self) -> usize {
        self.order / 2
    }

    fn odd(&self) -> bool {
        self.order % 2 == 1
    }

    fn dim_half(&self) -> usize {
        2 * self.pairs() + usize::from(self.odd())
    }

    fn decode(&self, x: &[f64]) -> Layout {
        let (zx, px) = x.split_at(self.dim_half());
        let rz = self.opts.min_zero_radius;
        let rp = self.opts.max_pole_radius;
        let mut zeros = Vec::with_capacity(self.order);
        let mut poles = Vec::with_capacity(self.order);
        for pair in zx[..2 * self.pairs()].chunks(2) {
            let z = Complex::from_polar(
                rz + (1.0 - rz) * sigmoid(pair[1]),
                self.band_angle * sigmoid(pair[0]),
            );
            zeros.extend([z, z.conj()]);
        }
        for pair in px[..2 * self.pairs()].chunks(2) {
            let p = Complex::from_polar(rp * sigmoid(pair[1]), PI * sigmoid(pair[0]));
            poles.extend([p, p.conj()]);
        }
        if self.odd() {
            zeros.push(Complex::new(
                rz + (1.0 - rz) * sigmoid(zx[zx.len() - 1]),
                0.0,
            ));
            poles.push(Complex::new(rp * (px[px.len() - 1]).tanh(), 0.0));
        }
        Layout { zeros, poles }
    }

    fn encode(
        &self,
        zeros: &[(f64, f64)],
        poles: &[(f64, f64)],
        real: Option<(f64, f64)>,
    ) -> Vec<f64> {
        let rz = self.opts.min_zero_radius;
        let rp = self.opts.max_pole_radius;
        let mut x = Vec::with_capacity(2 * self.dim_half());
        for &(angle, radius) in zeros {
            x.push(logit(angle / self.band_angle));
            x.push(logit((radius - rz) / (1.0 - rz)));
        }
        if let Some((zr, _)) = real {
            x.push(logit((zr - rz) / (1.0 - rz)));
        }
        for &(angle, radius) in poles {
            x.push(logit(angle / PI));
            x.push(logit(radius / rp));
        }
        if let Some((_, pr)) = real {
            x.push((pr / rp).clamp(-0.999_999, 0.999_999).atanh());
        }
        x
    }

    fn log_gain(layout: &Layout, theta: f64) -> f64 {
        let z = Complex::from_polar(1.0, theta);
        let num: f64 = layout
            .zeros
            .iter()
            .map(|q| (z - q).norm_sqr().max(1e-300).log10())
            .sum();
        let den: f64 = layout
            .poles
            .iter()
            .map(|p| (z - p).norm_sqr().log10())
            .sum();
        10.0 * (num - den)
    }

    /// In-band RMS dB residual after removing the mean, and that mean.
    fn residual(&self, layout: &Layout) -> (f64, f64) {
        let r: Vec<f64> = self
            .angles
            .iter()
            .zip(&self.target_db)
            .map(|(&a, &t)| Self::log_gain(layout, a) - t)
            .collect();
        let n = r.len() as f64;
        let mean = r.iter().sum::<f64>() / n;
        let var = r.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        (var.sqrt(), mean)
    }

    fn peak(&self, layout: &Layout) -> f64 {
        self.cap_angles
            .iter()
            .map(|&a| Self::log_gain(layout, a))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    fn objective(&self, x: &[f64]) -> f64 {
        let layout = self.decode(x);
        let (rms, level) = self.residual(&layout);
        let peak = 10f64.powf(self.peak(&layout) / 20.0);
        let excess = (peak / (CAP_MARGIN * self.cap) - 1.0).max(0.0);
        rms * rms + self.opts.depth_weight * level + CAP_PENALTY * excess * excess
    }

    /// Starting layouts: zeros at the target's in-band minima, padded with
    /// evenly spread in-band angles, combined with several pole families.
    fn starts(&self) -> Vec<Vec<f64>> {
        let pairs = self.pairs();
        let mut minima: Vec<(f64, f64)> = (1..self.angles.len().saturating_sub(1))
            .filter(|&k| {
                self.target_db[k] < self.target_db[k - 1]
                    && self.target_db[k] <= self.target_db[k + 1]
            })
            .map(|k| (self.target_db[k], self.angles[k]))
            .collect();
        minima.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut zero_angles: Vec<f64> = minima.iter().take(pairs).map(|m| m.1).collect();
        let mut slot = 0;
        while zero_angles.len() < pairs {
            zero_angles.push(self.band_angle * (2 * slot + 1) as f64 / (2 * pairs) as f64);
            slot += 1;
        }

        let mut maxima: Vec<(f64, f64)> = (1..self.angles.len().saturating_sub(1))
            .filter(|&k| {
                self.target_db[k] > self.target_db[k - 1]
                    && self.target_db[k] >= self.target_db[k + 1]
            })
            .map(|k| (-self.target_db[k], self.angles[k]))
            .collect();
        maxima.sort_by(|a, b| a.0.total_cmp(&b.0));

        let mut starts = Vec::new();
        for &zr in &[0.999, 0.99, 0.95] {
            let zeros: Vec<(f64, f64)> = zero_angles.iter().map(|&a| (a, zr)).collect();
            let families: Vec<Vec<(f64, f64)>> = vec![
                (0..pairs)
                    .map(|i| (self.band_angle * (2.0 + i as f64), 0.6))
                    .collect(),
                (0..pairs)
                    .map(|i| (PI * (i + 1) as f64 / (pairs + 1) as f64, 0.3))
                    .collect(),
                (0..pairs)
                    .map(|i| {
                        let a = maxima.get(i).map_or(self.band_angle * 0.5, |m| m.1);
                        (a, 0.95)
                    })
                    .collect(),
            ];
            for poles in families {
                starts.push(self.encode(&zeros, &poles, self.odd().then_some((zr, 0.5))));
            }
        }
        starts
    }

    /// Poles first with zeros held, then everything jointly, then a restart
    /// of the joint search from its own optimum.
    fn refine(&self, start: Vec<f64>) -> (Vec<f64>, f64) {
        let half = self.dim_half();
        let zeros = start[..half].to_vec();
        let poles_only = |p: &[f64]| {
            let mut x = zeros.clone();
            x.extend_from_slice(p);
            self.objective(&x)
        };
        let stage1 = nelder_mead(
            poles_only,
            &start[half..],
            0.5,
            1e-10,
            self.opts.max_evals / 4,
        );
        let mut x = zeros.clone();
        x.extend(stage1.x);
        let f = |v: &[f64]| self.objective(v);
        let stage2 = nelder_mead(f, &x, 0.5, 1e-10, self.opts.max_evals / 2);
        let stage3 = nelder_mead(f, &stage2.x, 0.1, 1e-12, self.opts.max_evals / 4);
        if stage3.value <= stage2.value {
            (stage3.x, stage3.value)
        } else {
            (stage2.x, stage2.value)
        }
    }
}
