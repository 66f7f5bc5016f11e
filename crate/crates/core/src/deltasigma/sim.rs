//! Time-domain loop simulation and PSD comparison.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ModulatorConfig, RationalTf};
use crate::spectral::{db, estimate_psd};
use crate::{Error, Psd, Real, Result};

/// Quantizer inside the loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum QuantizerModel {
    /// Mid-rise uniform quantizer from the modulator config.
    #[default]
    Uniform,
    /// Adds independent uniform noise on `[−step/2, step/2)` instead of
    /// quantizing; the linear model holds exactly.
    AdditiveWhite { seed: u64 },
}

/// Per-sample record of a loop run. All sequences have equal length; a
/// diverging run stops at the first sample whose state exceeds the bound.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationTrace<T> {
    pub input: Vec<T>,
    pub output: Vec<T>,
    /// `output − quantizer input` per sample; the quantizer input includes
    /// any dither.
    pub quantizer_error: Vec<T>,
    /// Samples where the quantizer input exceeded `levels·step/2`.
    pub saturation_count: usize,
    /// False iff some loop state exceeded 10× the quantizer full scale.
    pub stable: bool,
}

impl<T: Real> SimulationTrace<T> {
    pub fn len(&self) -> usize {
        self.output.len()
    }

    pub fn is_empty(&self) -> bool {
        self.output.is_empty()
    }

    /// CSV with header `n,input,output,qerror`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["n", "input", "output", "qerror"])?;
        for (n, ((x, y), q)) in self
            .input
            .iter()
            .zip(&self.output)
            .zip(&self.quantizer_error)
            .enumerate()
        {
            w.write_record([
                n.to_string(),
                format!("{x:e}"),
                format!("{y:e}"),
                format!("{q:e}"),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Runs the loop `y = Q(H·(x − y))` with a mid-rise uniform quantizer.
pub fn simulate<T: Real>(
    h: &RationalTf<T>,
    cfg: &ModulatorConfig<T>,
    input: &[T],
) -> Result<SimulationTrace<T>> {
    simulate_with(h, cfg, input, QuantizerModel::Uniform)
}

/// Transposed direct-form II realization of a strictly proper filter in
/// powers of `z^{-1}`: `b[0] = 0`, `a[0] = 1`.
struct LoopFilter<T> {
    b: Vec<T>,
    a: Vec<T>,
    state: Vec<T>,
}

impl<T: Real> LoopFilter<T> {
    fn new(h: &RationalTf<T>) -> Result<Self> {
        if h.is_zero() {
            return Ok(Self {
                b: vec![T::zero()],
                a: vec![T::one()],
                state: Vec::new(),
            });
        }
        if h.relative_degree() < 1 {
            return Err(Error::DegenerateTransferFunction(
                "loop filter must be strictly proper (no delay-free loop)".into(),
            ));
        }
        let a = h.denominator();
        let num = h.numerator();
        let mut b = vec![T::zero(); a.len() - num.len()];
        b.extend(num);
        Ok(Self {
            state: vec![T::zero(); a.len() - 1],
            b,
            a,
        })
    }

    fn output(&self) -> T {
        self.state.first().copied().unwrap_or(T::zero())
    }

    fn push(&mut self, e: T, v: T) {
        let n = self.state.len();
        for i in 0..n {
            let next = if i + 1 < n {
                self.state[i + 1]
            } else {
                T::zero()
            };
            self.state[i] = next + self.b[i + 1] * e - self.a[i + 1] * v;
        }
    }

    fn exceeds(&self, bound: T) -> bool {
        self.state.iter().any(|s| !(s.abs() <= bound))
    }
}

/// Direct-form filtering of `x` by a proper transfer function.
fn filter<T: Real>(tf: &RationalTf<T>, x: &[T]) -> Vec<T> {
    let a = tf.denominator();
    let num = tf.numerator();
    let mut b = vec![T::zero(); a.len().saturating_sub(num.len())];
    b.extend(num);
    let n = a.len() - 1;
    let mut state = vec![T::zero(); n];
    x.iter()
        .map(|&xi| {
            let y = b[0] * xi + state.first().copied().unwrap_or(T::zero());
            for i in 0..n {
                let next = if i + 1 < n { state[i + 1] } else { T::zero() };
                state[i] = next + b[i + 1] * xi - a[i + 1] * y;
            }
            y
        })
        .collect()
}

/// Loop simulation with a selectable quantizer model.
pub fn simulate_with<T: Real>(
    h: &RationalTf<T>,
    cfg: &ModulatorConfig<T>,
    input: &[T],
    model: QuantizerModel,
) -> Result<SimulationTrace<T>> {
    cfg.validate()?;
    let mut filt = LoopFilter::new(h)?;
    let levels = T::from_count(cfg.quantizer_levels);
    let half_levels = levels / T::lit(2.0);
    let top = T::from_count(cfg.quantizer_levels - 1);
    let overload = half_levels * cfg.step;
    let bound = T::lit(10.0) * cfg.full_scale();
    let mut dither_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut white_rng = match model {
        QuantizerModel::AdditiveWhite { seed } => Some(ChaCha8Rng::seed_from_u64(seed)),
        QuantizerModel::Uniform => None,
    };

    let mut trace = SimulationTrace {
        input: Vec::with_capacity(input.len()),
        output: Vec::with_capacity(input.len()),
        quantizer_error: Vec::with_capacity(input.len()),
        saturation_count: 0,
        stable: true,
    };
    for &x in input {
        let v = filt.output();
        if !(v.abs() <= bound) {
            trace.stable = false;
            break;
        }
        if v.abs() > overload {
            trace.saturation_count += 1;
        }
        let y = match white_rng.as_mut() {
            Some(rng) => (
                v + cfg.step * (T::lit(rng.random::<f64>()) - T::lit(0.5)),
                v,
            ),
            None => {
                let d = if cfg.dither {
                    let u: f64 = dither_rng.random::<f64>() - dither_rng.random::<f64>();
                    cfg.step * T::lit(u)
                } else {
                    T::zero()
                };
                let u = v + d;
                let k = (u / cfg.step + half_levels).floor().max(T::zero()).min(top);
                ((k - top / T::lit(2.0)) * cfg.step, u)
            }
        };
        let (y, u) = y;
        filt.push(x - y, v);
        trace.input.push(x);
        trace.output.push(y);
        trace.quantizer_error.push(y - u);
        if filt.exceeds(bound) {
            trace.stable = false;
            break;
        }
    }
    Ok(trace)
}

/// Measured vs. modeled shaped-noise PSD over the signal band.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackingReport<T> {
    /// In-band Welch bin centers, excluding DC.
    pub frequencies: Vec<T>,
    pub measured: Vec<T>,
    pub predicted: Vec<T>,
    /// `10·log10(measured / predicted)` per bin.
    pub error_db: Vec<T>,
    pub rms_error_db: T,
    /// Number of Welch segments averaged.
    pub averages: usize,
}

/// Two-sided Welch PSD of the NTF-shaped quantizer error, `NTF·q`.
fn shaped_error_psd<T: Real>(
    trace: &SimulationTrace<T>,
    ntf: &RationalTf<T>,
    cfg: &ModulatorConfig<T>,
    segment: Option<usize>,
) -> Result<(Psd<T>, usize)> {
    cfg.validate()?;
    if !trace.stable {
        return Err(Error::UnstableTrace);
    }
    let n = trace.len();
    let segment = match segment {
        Some(s) => s,
        None if n < 1024 => {
            return Err(Error::TooFewSamples {
                needed: 1024,
                got: n,
            })
        }
        None => 1usize << (n / 64).ilog2(),
    };
    if segment < 16 || n < segment {
        return Err(Error::TooFewSamples {
            needed: segment.max(16),
            got: n,
        });
    }
    let shaped = filter(ntf, &trace.quantizer_error);
    let one_sided = estimate_psd(&shaped, cfg.sample_rate, segment, T::lit(0.5))?;
    let hop = segment - segment / 2;
    let averages = (n - segment) / hop + 1;
    Ok((one_sided.scaled(T::lit(0.5))?, averages))
}

fn in_band<T: Real>(psd: &Psd<T>, cfg: &ModulatorConfig<T>) -> Vec<usize> {
    let edge = cfg.band_edge() * (T::one() + T::lit(1e-12));
    psd.grid()
        .centers()
        .enumerate()
        .filter(|&(k, f)| k >= 1 && f <= edge)
        .map(|(k, _)| k)
        .collect()
}

fn rms<T: Real>(v: &[T]) -> T {
    (v.iter().map(|&e| e * e).sum::<T>() / T::from_count(v.len().max(1))).sqrt()
}

/// Compares the Welch PSD of `NTF·q` against `step²/(12 f_s)·|NTF|²` on the
/// in-band Welch bins. Welch segments are `len/64` long (a power of two)
/// with 50% overlap.
pub fn measured_vs_predicted<T: Real>(
    trace: &SimulationTrace<T>,
    ntf: &RationalTf<T>,
    cfg: &ModulatorConfig<T>,
) -> Result<TrackingReport<T>> {
    tracking(trace, ntf, cfg, None)
}

/// [`measured_vs_predicted`] with an explicit Welch segment length.
pub fn measured_vs_predicted_with<T: Real>(
    trace: &SimulationTrace<T>,
    ntf: &RationalTf<T>,
    cfg: &ModulatorConfig<T>,
    segment_len: usize,
) -> Result<TrackingReport<T>> {
    tracking(trace, ntf, cfg, Some(segment_len))
}

fn tracking<T: Real>(
    trace: &SimulationTrace<T>,
    ntf: &RationalTf<T>,
    cfg: &ModulatorConfig<T>,
    segment: Option<usize>,
) -> Result<TrackingReport<T>> {
    let (psd, averages) = shaped_error_psd(trace, ntf, cfg, segment)?;
    let floor = cfg.step * cfg.step / (T::lit(12.0) * cfg.sample_rate);
    let bins = in_band(&psd, cfg);
    let frequencies: Vec<T> = bins.iter().map(|&k| psd.grid().center(k)).collect();
    let measured: Vec<T> = bins.iter().map(|&k| psd.values()[k]).collect();
    let predicted: Vec<T> = frequencies
        .iter()
        .map(|&f| floor * ntf.eval_angle(cfg.angle(f)).norm_sqr())
        .collect();
    let error_db: Vec<T> = measured
        .iter()
        .zip(&predicted)
        .map(|(&m, &p)| db(m) - db(p))
        .collect();
    Ok(TrackingReport {
        rms_error_db: rms(&error_db),
        frequencies,
        measured,
        predicted,
        error_db,
        averages,
    })
}

/// Measured shaped-noise PSD against an optimal-shape target.
#[derive(Debug, Clone, PartialEq)]
pub struct RealizationReport<T> {
    pub frequencies: Vec<T>,
    pub measured: Vec<T>,
    /// Target rescaled to consume the same ADC power as the measurement.
    pub target: Vec<T>,
    pub error_db: Vec<T>,
    pub rms_error_db: T,
    /// `10·log10` of the scale applied to the supplied target.
    pub level_offset_db: T,
    /// `∫ (12·S_q,measured)^{-1/2} df` over the compared band.
    pub equivalent_power: T,
}

/// Compares the measured in-band shaped-noise PSD against `target`
/// (interpolated at the Welch bins). Optimal shapes for different power
/// budgets differ only by a factor `(P/P')²`, so the target is rescaled to
/// the budget the measured PSD consumes over the same bins before the dB
/// error is taken.
pub fn realization_report<T: Real>(
    trace: &SimulationTrace<T>,
    ntf: &RationalTf<T>,
    cfg: &ModulatorConfig<T>,
    target: &Psd<T>,
) -> Result<RealizationReport<T>> {
    target.require_positive("target PSD")?;
    let (psd, _) = shaped_error_psd(trace, ntf, cfg, None)?;
    let bins = in_band(&psd, cfg);
    let frequencies: Vec<T> = bins.iter().map(|&k| psd.grid().center(k)).collect();
    let measured: Vec<T> = bins.iter().map(|&k| psd.values()[k]).collect();
    if let Some((k, &m)) = measured
        .iter()
        .enumerate()
        .find(|(_, m)| !(**m > T::zero()))
    {
        return Err(Error::NonPositive {
            what: "measured shaped-noise PSD",
            index: k,
            value: m.as_f64(),
        });
    }
    let raw: Vec<T> = frequencies
        .iter()
        .map(|&f| target.interpolate_at(f))
        .collect();
    let power = |v: &[T]| v.iter().map(|s| s.sqrt().recip()).sum::<T>();
    let ratio = power(&raw) / power(&measured);
    let scale = ratio * ratio;
    let target: Vec<T> = raw.iter().map(|&t| t * scale).collect();
    let error_db: Vec<T> = measured
        .iter()
        .zip(&target)
        .map(|(&m, &t)| db(m) - db(t))
        .collect();
    let width = psd.grid().bin_width();
    Ok(RealizationReport {
        rms_error_db: rms(&error_db),
        level_offset_db: db(scale),
        equivalent_power: width * power(&measured) / T::lit(12.0).sqrt(),
        frequencies,
        measured,
        target,
        error_db,
    })
}
