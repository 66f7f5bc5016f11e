use crate::{Error, FrequencyGrid, Real, Result};

/// dB value reported for zero (or negative) PSD bins.
pub const DB_FLOOR: f64 = -200.0;

/// `10·log10(x)`, floored at [`DB_FLOOR`].
pub fn db<T: Real>(x: T) -> T {
    if x > T::zero() {
        (T::lit(10.0) * x.log10()).max(T::lit(DB_FLOOR))
    } else {
        T::lit(DB_FLOOR)
    }
}

/// Nonnegative one-sided spectral density sampled at the bin centers of a
/// [`FrequencyGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct Psd<T> {
    grid: FrequencyGrid<T>,
    values: Vec<T>,
}

impl<T: Real> Psd<T> {
    pub fn new(grid: FrequencyGrid<T>, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.num_bins() {
            return Err(Error::LengthMismatch {
                expected: grid.num_bins(),
                got: values.len(),
            });
        }
        if let Some((index, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v >= T::zero()))
        {
            return Err(Error::Negative {
                what: "PSD value",
                index,
                value: v.as_f64(),
            });
        }
        Ok(Self { grid, values })
    }

    /// Evaluates `f` at every bin center. Panics if `f` returns a negative or
    /// non-finite value.
    pub fn from_fn(grid: &FrequencyGrid<T>, f: impl Fn(T) -> T) -> Self {
        Self::new(*grid, grid.centers().map(f).collect()).expect("PSD generator output")
    }

    pub fn constant(grid: &FrequencyGrid<T>, level: T) -> Result<Self> {
        Self::new(*grid, vec![level; grid.num_bins()])
    }

    pub fn zeros(grid: &FrequencyGrid<T>) -> Self {
        Self {
            grid: *grid,
            values: vec![T::zero(); grid.num_bins()],
        }
    }

    pub fn grid(&self) -> &FrequencyGrid<T> {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `∫ S(f) df` over the grid.
    pub fn integrate(&self) -> T {
        self.grid.integrate(self.values.iter().copied())
    }

    pub fn to_db(&self) -> Vec<T> {
        self.values.iter().map(|&v| db(v)).collect()
    }

    pub fn scaled(&self, factor: T) -> Result<Self> {
        Self::new(self.grid, self.values.iter().map(|&v| v * factor).collect())
    }

    /// Errors unless every bin is strictly positive.
    pub fn require_positive(&self, what: &'static str) -> Result<()> {
        match self
            .values
            .iter()
            .enumerate()
            .find(|(_, v)| **v <= T::zero())
        {
            Some((index, v)) => Err(Error::NonPositive {
                what,
                index,
                value: v.as_f64(),
            }),
            None => Ok(()),
        }
    }

    pub fn require_same_grid(&self, other: &Self) -> Result<()> {
        if self.grid.same_as(&other.grid) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// Piecewise-linear interpolation between bin centers, held constant
    /// beyond the first and last centers.
    pub fn interpolate_at(&self, f: T) -> T {
        let k = self.values.len();
        let first = self.grid.center(0);
        if k == 1 || f <= first {
            return self.values[0];
        }
        if f >= self.grid.center(k - 1) {
            return self.values[k - 1];
        }
        let x = (f - first) / self.grid.bin_width();
        let i = x.floor().to_usize().unwrap_or(0).min(k - 2);
        let t = x - T::from_count(i);
        self.values[i] + (self.values[i + 1] - self.values[i]) * t
    }

    /// Linear resampling onto another grid's centers.
    pub fn resample(&self, grid: &FrequencyGrid<T>) -> Self {
        Self {
            grid: *grid,
            values: grid.centers().map(|f| self.interpolate_at(f)).collect(),
        }
    }

    /// Bin-averages onto a coarser grid: every target bin gets the
    /// overlap-weighted mean of the source bins it covers. Target bins
    /// outside the source span are rejected.
    pub fn rebin(&self, grid: &FrequencyGrid<T>) -> Result<Self> {
        let src = &self.grid;
        let slack = src.bin_width() * T::lit(1e-9);
        if grid.f_lo() < src.f_lo() - slack || grid.f_hi() > src.f_hi() + slack {
            return Err(Error::GridMismatch);
        }
        let values = (0..grid.num_bins())
            .map(|j| {
                let (lo, hi) = (grid.edge(j), grid.edge(j + 1));
                let first = src.bin_of(lo);
                let last = src.bin_of(hi);
                let (mut acc, mut weight) = (T::zero(), T::zero());
                for k in first..=last {
                    let w = src.overlap_fraction(k, lo, hi);
                    acc = acc + w * self.values[k];
                    weight = weight + w;
                }
                if weight > T::zero() {
                    acc / weight
                } else {
                    self.values[first]
                }
            })
            .collect();
        Self::new(*grid, values)
    }
}

/// Signal and noise PSDs on a shared grid: one conversion problem.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSpec<T> {
    signal: Psd<T>,
    noise: Psd<T>,
}

impl<T: Real> ChannelSpec<T> {
    pub fn new(signal: Psd<T>, noise: Psd<T>) -> Result<Self> {
        signal.require_same_grid(&noise)?;
        noise.require_positive("noise PSD")?;
        Ok(Self { signal, noise })
    }

    pub fn signal(&self) -> &Psd<T> {
        &self.signal
    }

    pub fn noise(&self) -> &Psd<T> {
        &self.noise
    }

    pub fn grid(&self) -> &FrequencyGrid<T> {
        self.signal.grid()
    }

    /// Per-bin `S_x / S_v`.
    pub fn snr(&self) -> Vec<T> {
        self.signal
            .values()
            .iter()
            .zip(self.noise.values())
            .map(|(&s, &n)| s / n)
            .collect()
    }
}
