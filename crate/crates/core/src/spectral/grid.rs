use crate::{Error, Real, Result};

/// Uniform midpoint discretization of `[f_lo, f_hi]` into `num_bins` bins.
///
/// Bin `k` (zero-based) is centered at `f_lo + (k + 1/2)·Δ` with
/// `Δ = (f_hi − f_lo) / num_bins`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyGrid<T> {
    f_lo: T,
    f_hi: T,
    num_bins: usize,
}

impl<T: Real> FrequencyGrid<T> {
    pub fn new(f_lo: T, f_hi: T, num_bins: usize) -> Result<Self> {
        if !(f_lo.is_finite() && f_hi.is_finite()) || f_hi <= f_lo {
            return Err(Error::InvalidRange {
                f_lo: f_lo.as_f64(),
                f_hi: f_hi.as_f64(),
            });
        }
        if num_bins == 0 {
            return Err(Error::ZeroBins);
        }
        let grid = Self {
            f_lo,
            f_hi,
            num_bins,
        };
        // Bins narrower than the scalar's resolution would collapse centers.
        if grid.bin_width() <= T::zero() || grid.center(0) <= f_lo {
            return Err(Error::InvalidRange {
                f_lo: f_lo.as_f64(),
                f_hi: f_hi.as_f64(),
            });
        }
        Ok(grid)
    }

    /// Rebuilds a grid from its bin centers, as read back from a CSV file.
    /// Centers must be uniformly spaced to 1e−6 of the spacing.
    pub fn from_centers(centers: &[T]) -> Result<Self> {
        match centers {
            [] => Err(Error::ZeroBins),
            [_] => Err(Error::Parse(
                "a single frequency row does not determine the bin width".into(),
            )),
            [first, .., last] => {
                let k = centers.len();
                let width = (*last - *first) / T::from_count(k - 1);
                let tol = width * T::lit(1e-6);
                for (i, pair) in centers.windows(2).enumerate() {
                    if ((pair[1] - pair[0]) - width).abs() > tol {
                        return Err(Error::Parse(format!(
                            "frequencies are not uniformly spaced near row {}",
                            i + 2
                        )));
                    }
                }
                let half = width / T::lit(2.0);
                Self::new(*first - half, *last + half, k)
            }
        }
    }

    pub fn f_lo(&self) -> T {
        self.f_lo
    }

    pub fn f_hi(&self) -> T {
        self.f_hi
    }

    pub fn num_bins(&self) -> usize {
        self.num_bins
    }

    pub fn bandwidth(&self) -> T {
        self.f_hi - self.f_lo
    }

    /// Δ, the width of one bin.
    pub fn bin_width(&self) -> T {
        self.bandwidth() / T::from_count(self.num_bins)
    }

    pub fn center(&self, k: usize) -> T {
        self.f_lo + (T::from_count(k) + T::lit(0.5)) * self.bin_width()
    }

    /// Lower boundary of bin `k`; `edge(num_bins)` is `f_hi`.
    pub fn edge(&self, k: usize) -> T {
        if k == self.num_bins {
            self.f_hi
        } else {
            self.f_lo + T::from_count(k) * self.bin_width()
        }
    }

    pub fn centers(&self) -> impl ExactSizeIterator<Item = T> + '_ {
        (0..self.num_bins).map(move |k| self.center(k))
    }

    /// Midpoint-rule integral `Δ·Σ values`.
    pub fn integrate(&self, values: impl IntoIterator<Item = T>) -> T {
        self.bin_width() * values.into_iter().sum::<T>()
    }

    /// Grid spanned by bins `start..end` of this grid.
    pub fn sub_grid(&self, start: usize, end: usize) -> Result<Self> {
        if start >= end || end > self.num_bins {
            return Err(Error::InvalidParameter {
                name: "bin range",
                reason: format!("{start}..{end} not inside 0..{}", self.num_bins),
            });
        }
        Self::new(self.edge(start), self.edge(end), end - start)
    }

    /// Same grid up to rounding: identical bin count and edges within 1e−9
    /// of the bandwidth.
    pub fn same_as(&self, other: &Self) -> bool {
        if self.num_bins != other.num_bins {
            return false;
        }
        let tol = T::lit(1e-9) * self.bandwidth().max(other.bandwidth());
        (self.f_lo - other.f_lo).abs() <= tol && (self.f_hi - other.f_hi).abs() <= tol
    }

    /// Fraction of bin `k` covered by the interval `[lo, hi]`.
    pub fn overlap_fraction(&self, k: usize, lo: T, hi: T) -> T {
        let a = self.edge(k).max(lo);
        let b = self.edge(k + 1).min(hi);
        if b <= a {
            T::zero()
        } else {
            (b - a) / self.bin_width()
        }
    }

    /// Index of the bin containing `f`, clamped to the grid.
    pub fn bin_of(&self, f: T) -> usize {
        let x = ((f - self.f_lo) / self.bin_width()).floor();
        if x <= T::zero() {
            0
        } else {
            x.to_usize().unwrap_or(usize::MAX).min(self.num_bins - 1)
        }
    }
}
