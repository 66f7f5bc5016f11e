use std::fmt;
use std::str::FromStr;

use num_complex::Complex;

use super::poly::{self, c, finite, C};
use crate::{Error, Real, Result};

/// Real-coefficient rational transfer function in zero/pole/gain form:
/// `gain · Π(z − zeros) / Π(z − poles)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalTf<T> {
    zeros: Vec<Complex<T>>,
    poles: Vec<Complex<T>>,
    gain: T,
}

fn check_conjugate_symmetry<T: Real>(roots: &[Complex<T>], what: &str) -> Result<()> {
    let tol = T::lit(1e-9);
    for r in roots {
        if !finite(*r) {
            return Err(Error::DegenerateTransferFunction(format!(
                "non-finite {what}"
            )));
        }
        if r.im == T::zero() {
            continue;
        }
        let scale = T::one() + r.norm();
        let has_partner = roots
            .iter()
            .any(|q| (q.re - r.re).abs() <= tol * scale && (q.im + r.im).abs() <= tol * scale);
        if !has_partner {
            return Err(Error::DegenerateTransferFunction(format!(
                "{what} {r} has no conjugate partner"
            )));
        }
    }
    Ok(())
}

impl<T: Real> RationalTf<T> {
    pub fn new(zeros: Vec<Complex<T>>, poles: Vec<Complex<T>>, gain: T) -> Result<Self> {
        if !gain.is_finite() {
            return Err(Error::DegenerateTransferFunction("non-finite gain".into()));
        }
        check_conjugate_symmetry(&zeros, "zero")?;
        check_conjugate_symmetry(&poles, "pole")?;
        Ok(Self { zeros, poles, gain })
    }

    /// The constant transfer function `k`.
    pub fn constant(k: T) -> Self {
        Self {
            zeros: Vec::new(),
            poles: Vec::new(),
            gain: k,
        }
    }

    /// Builds from real numerator and denominator coefficients in
    /// descending powers of z.
    pub fn from_coefficients(num: &[T], den: &[T]) -> Result<Self> {
        let to_c = |p: &[T]| p.iter().map(|&a| c(a)).collect::<Vec<_>>();
        let num = poly::trim_leading(&to_c(num), T::zero());
        let den = poly::trim_leading(&to_c(den), T::zero());
        if den.is_empty() {
            return Err(Error::DegenerateTransferFunction("zero denominator".into()));
        }
        if num.is_empty() {
            return Ok(Self::constant(T::zero()));
        }
        Self::new(
            poly::real_roots(&num)?,
            poly::real_roots(&den)?,
            num[0].re / den[0].re,
        )
    }

    pub fn zeros(&self) -> &[Complex<T>] {
        &self.zeros
    }

    pub fn poles(&self) -> &[Complex<T>] {
        &self.poles
    }

    pub fn gain(&self) -> T {
        self.gain
    }

    pub fn is_zero(&self) -> bool {
        self.gain == T::zero()
    }

    /// Numerator coefficients `gain·Π(z − zeros)`, descending powers.
    pub fn numerator(&self) -> Vec<T> {
        poly::real_coefficients(&poly::scale(&poly::from_roots(&self.zeros), self.gain))
    }

    /// Monic denominator coefficients `Π(z − poles)`, descending powers.
    pub fn denominator(&self) -> Vec<T> {
        poly::real_coefficients(&poly::from_roots(&self.poles))
    }

    pub fn eval(&self, z: Complex<T>) -> Complex<T> {
        let num = self
            .zeros
            .iter()
            .fold(c(self.gain), |acc, &q| acc * (z - q));
        self.poles.iter().fold(num, |acc, &p| acc / (z - p))
    }

    /// Value at `z = e^{jθ}`.
    pub fn eval_angle(&self, theta: T) -> Complex<T> {
        self.eval(Complex::from_polar(T::one(), theta))
    }

    /// Number of poles minus number of zeros (ignoring a zero gain).
    pub fn relative_degree(&self) -> isize {
        self.poles.len() as isize - self.zeros.len() as isize
    }

    /// Proper with equal degrees and unit leading-coefficient ratio.
    pub fn is_monic(&self) -> bool {
        self.relative_degree() == 0 && (self.gain - T::one()).abs() <= T::lit(1e-12)
    }

    pub fn is_stable(&self) -> bool {
        self.poles.iter().all(|p| p.norm() < T::one())
    }

    /// Largest `|H(e^{jθ})|` over `points` uniformly spaced angles in `[0, π]`.
    pub fn peak_gain(&self, points: usize) -> T {
        let points = points.max(2);
        (0..points)
            .map(|i| {
                let theta = T::PI() * T::from_count(i) / T::from_count(points - 1);
                self.eval_angle(theta).norm()
            })
            .fold(T::zero(), T::max)
    }
}

/// `NTF = 1 / (1 + H)`. The NTF's zeros are the loop filter's poles and its
/// poles the roots of `den(H) + num(H)`.
pub fn ntf_from_loop<T: Real>(h: &RationalTf<T>) -> Result<RationalTf<T>> {
    if h.is_zero() {
        return Ok(RationalTf::constant(T::one()));
    }
    let sum = loop_sum(h)?;
    let lead = sum[0].re;
    RationalTf::new(h.poles.clone(), poly::real_roots(&sum)?, T::one() / lead)
}

/// `STF = H / (1 + H)`.
pub fn stf_from_loop<T: Real>(h: &RationalTf<T>) -> Result<RationalTf<T>> {
    if h.is_zero() {
        return Ok(RationalTf::constant(T::zero()));
    }
    let sum = loop_sum(h)?;
    let lead = sum[0].re;
    RationalTf::new(h.zeros.clone(), poly::real_roots(&sum)?, h.gain / lead)
}

/// `den(H) + num(H)`, with cancelled leading terms removed.
fn loop_sum<T: Real>(h: &RationalTf<T>) -> Result<Vec<C<T>>> {
    let den = poly::from_roots(&h.poles);
    let num = poly::scale(&poly::from_roots(&h.zeros), h.gain);
    let sum = poly::trim_leading(&poly::add(&den, &num), T::lit(1e-13));
    if sum.is_empty() {
        return Err(Error::DegenerateTransferFunction(
            "1 + H vanishes identically".into(),
        ));
    }
    Ok(sum)
}

/// Inverts `NTF = 1/(1 + H)`: `H = (den(NTF) − num(NTF)) / num(NTF)`.
pub fn loop_from_ntf<T: Real>(ntf: &RationalTf<T>) -> Result<RationalTf<T>> {
    if ntf.is_zero() {
        return Err(Error::DegenerateTransferFunction(
            "NTF is identically zero".into(),
        ));
    }
    match ntf.relative_degree() {
        d if d > 0 => return Err(Error::NonInvertibleLoop),
        d if d < 0 => {
            return Err(Error::DegenerateTransferFunction(
                "improper NTF (more zeros than poles)".into(),
            ))
        }
        _ => {}
    }
    let num = poly::scale(&poly::from_roots(&ntf.zeros), ntf.gain);
    let den = poly::from_roots(&ntf.poles);
    let diff = poly::add(&den, &poly::scale(&num, -T::one()));
    let diff = poly::trim_leading(&diff, T::lit(1e-13));
    if diff.is_empty() {
        return Ok(RationalTf::constant(T::zero()));
    }
    RationalTf::new(
        poly::real_roots(&diff)?,
        ntf.zeros.clone(),
        diff[0].re / ntf.gain,
    )
}

fn fmt_roots<T: Real>(
    f: &mut fmt::Formatter<'_>,
    label: &str,
    roots: &[Complex<T>],
) -> fmt::Result {
    write!(f, "{label}:")?;
    for r in roots {
        write!(f, " {:e},{:e}", r.re, r.im)?;
    }
    writeln!(f)
}

/// Text form:
///
/// ```text
/// zeros: 1e0,0e0 9.9e-1,5e-2 9.9e-1,-5e-2
/// poles: 0e0,0e0 ...
/// gain: 1e0
/// ```
impl<T: Real> fmt::Display for RationalTf<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_roots(f, "zeros", &self.zeros)?;
        fmt_roots(f, "poles", &self.poles)?;
        writeln!(f, "gain: {:e}", self.gain)
    }
}

impl<T: Real> FromStr for RationalTf<T> {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut zeros = None;
        let mut poles = None;
        let mut gain = None;
        let num = |t: &str| -> Result<T> {
            t.trim()
                .parse::<f64>()
                .ok()
                .and_then(T::from_f64)
                .ok_or_else(|| Error::Parse(format!("bad number `{t}`")))
        };
        let roots = |body: &str| -> Result<Vec<Complex<T>>> {
            body.split_whitespace()
                .map(|pair| {
                    let (re, im) = pair
                        .split_once(',')
                        .ok_or_else(|| Error::Parse(format!("expected re,im, got `{pair}`")))?;
                    Ok(Complex::new(num(re)?, num(im)?))
                })
                .collect()
        };
        for line in s.lines().map(str::trim).filter(|l| !l.is_empty()) {
            let (key, body) = line
                .split_once(':')
                .ok_or_else(|| Error::Parse(format!("expected `key: ...`, got `{line}`")))?;
            match key.trim() {
                "zeros" => zeros = Some(roots(body)?),
                "poles" => poles = Some(roots(body)?),
                "gain" => gain = Some(num(body)?),
                other => return Err(Error::Parse(format!("unknown key `{other}`"))),
            }
        }
        match (zeros, poles, gain) {
            (Some(z), Some(p), Some(g)) => RationalTf::new(z, p, g),
            _ => Err(Error::Parse(
                "need `zeros:`, `poles:` and `gain:` lines".into(),
            )),
        }
    }
}
