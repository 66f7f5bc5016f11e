//! Polynomials in z with coefficients in descending powers.

use num_complex::Complex;

use crate::{Error, Real, Result};

pub(crate) type C<T> = Complex<T>;

pub(crate) fn c<T: Real>(re: T) -> C<T> {
    Complex::new(re, T::zero())
}

pub(crate) fn finite<T: Real>(z: C<T>) -> bool {
    z.re.is_finite() && z.im.is_finite()
}

/// Monic polynomial with the given roots.
pub(crate) fn from_roots<T: Real>(roots: &[C<T>]) -> Vec<C<T>> {
    let mut p = vec![c(T::one())];
    for &r in roots {
        p.push(c(T::zero()));
        for i in (1..p.len()).rev() {
            let prev = p[i - 1];
            p[i] = p[i] - r * prev;
        }
    }
    p
}

pub(crate) fn eval<T: Real>(p: &[C<T>], z: C<T>) -> C<T> {
    p.iter().fold(c(T::zero()), |acc, &a| acc * z + a)
}

fn derivative<T: Real>(p: &[C<T>]) -> Vec<C<T>> {
    let n = p.len().saturating_sub(1);
    p.iter()
        .take(n)
        .enumerate()
        .map(|(i, &a)| a * T::from_count(n - i))
        .collect()
}

/// `a + b`, aligned at the constant term.
pub(crate) fn add<T: Real>(a: &[C<T>], b: &[C<T>]) -> Vec<C<T>> {
    let n = a.len().max(b.len());
    let pad = |p: &[C<T>], i: usize| {
        let off = n - p.len();
        if i < off {
            c(T::zero())
        } else {
            p[i - off]
        }
    };
    (0..n).map(|i| pad(a, i) + pad(b, i)).collect()
}

pub(crate) fn scale<T: Real>(p: &[C<T>], s: T) -> Vec<C<T>> {
    p.iter().map(|&a| a * s).collect()
}

/// Drops leading coefficients that are negligible next to the largest one.
pub(crate) fn trim_leading<T: Real>(p: &[C<T>], rel_tol: T) -> Vec<C<T>> {
    let big = p.iter().fold(T::zero(), |m, a| m.max(a.norm()));
    let start = p
        .iter()
        .position(|a| a.norm() > rel_tol * big)
        .unwrap_or(p.len());
    p[start..].to_vec()
}

pub(crate) fn real_coefficients<T: Real>(p: &[C<T>]) -> Vec<T> {
    p.iter().map(|a| a.re).collect()
}

/// Roots of a polynomial with real coefficients (imaginary parts of `p`
/// are ignored), returned as exact conjugate pairs sorted by angle.
pub(crate) fn real_roots<T: Real>(p: &[C<T>]) -> Result<Vec<C<T>>> {
    let real: Vec<C<T>> = p.iter().map(|a| c(a.re)).collect();
    let roots = roots(&real)?;
    Ok(pair_conjugates(roots))
}

/// Aberth–Ehrlich iteration with Newton polishing. Exact zero roots are
/// peeled off first.
pub(crate) fn roots<T: Real>(p: &[C<T>]) -> Result<Vec<C<T>>> {
    let p = trim_leading(p, T::zero());
    if p.is_empty() {
        return Err(Error::DegenerateTransferFunction(
            "zero polynomial has no defined roots".into(),
        ));
    }
    let zeros_at_origin = p.iter().rev().take_while(|a| a.norm() == T::zero()).count();
    let q = &p[..p.len() - zeros_at_origin];
    let mut out = vec![c(T::zero()); zeros_at_origin];
    let n = q.len() - 1;
    if n == 0 {
        return Ok(out);
    }
    let lead = q[0];
    let monic: Vec<C<T>> = q.iter().map(|&a| a / lead).collect();
    let dp = derivative(&monic);

    // Start on a circle enclosing all roots (Fujiwara-style bound).
    let radius = monic[1..]
        .iter()
        .enumerate()
        .map(|(i, a)| a.norm().powf(T::one() / T::from_count(i + 1)))
        .fold(T::zero(), T::max)
        .max(T::lit(1e-3));
    let mut z: Vec<C<T>> = (0..n)
        .map(|k| {
            let angle = T::TAU() * T::from_count(k) / T::from_count(n) + T::lit(0.4);
            Complex::from_polar(radius, angle)
        })
        .collect();

    let eps = T::epsilon() * T::lit(4.0);
    for _ in 0..500 {
        let mut biggest = T::zero();
        for k in 0..n {
            let pk = eval(&monic, z[k]);
            if pk.norm() == T::zero() {
                continue;
            }
            let ratio = pk / eval(&dp, z[k]);
            let repulsion = (0..n)
                .filter(|&j| j != k)
                .fold(c(T::zero()), |acc, j| acc + (z[k] - z[j]).inv());
            let step = ratio / (c(T::one()) - ratio * repulsion);
            if finite(step) {
                z[k] = z[k] - step;
                biggest = biggest.max(step.norm() / (T::one() + z[k].norm()));
            }
        }
        if biggest < eps {
            break;
        }
    }
    for zk in z.iter_mut() {
        for _ in 0..2 {
            let before = eval(&monic, *zk);
            let step = before / eval(&dp, *zk);
            let next = *zk - step;
            if finite(step) && eval(&monic, next).norm() < before.norm() {
                *zk = next;
            }
        }
    }
    if z.iter().any(|r| !finite(*r)) {
        return Err(Error::DegenerateTransferFunction(
            "root finding did not converge".into(),
        ));
    }
    out.extend(z);
    Ok(out)
}

/// Snaps nearly-real roots onto the real axis and replaces every complex
/// root with the average of itself and its nearest conjugate partner.
pub(crate) fn pair_conjugates<T: Real>(mut roots: Vec<C<T>>) -> Vec<C<T>> {
    let tol = T::lit(1e-7);
    let mut out = Vec::with_capacity(roots.len());
    roots.sort_by(|a, b| b.im.partial_cmp(&a.im).unwrap_or(std::cmp::Ordering::Equal));
    while let Some(r) = roots.first().copied() {
        roots.remove(0);
        let scale = T::one() + r.norm();
        if r.im.abs() <= tol * scale {
            out.push(c(r.re));
            continue;
        }
        let partner = roots
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| {
                let da = (**a - r.conj()).norm();
                let db = (**b - r.conj()).norm();
                da.partial_cmp(&db).unwrap_or(std::cmp::Ordering::Equal)
            })
            .map(|(i, _)| i);
        match partner {
            Some(i) => {
                let q = roots.remove(i);
                let avg = Complex::new(
                    (r.re + q.re) / T::lit(2.0),
                    (r.im - q.im).abs() / T::lit(2.0),
                );
                out.push(avg);
                out.push(avg.conj());
            }
            None => out.push(c(r.re)),
        }
    }
    out.sort_by(|a, b| {
        (a.arg(), a.norm())
            .partial_cmp(&(b.arg(), b.norm()))
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cx(re: f64, im: f64) -> C<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn expand_and_evaluate() {
        let p = from_roots(&[cx(1.0, 0.0), cx(-2.0, 0.0)]);
        assert_eq!(real_coefficients(&p), vec![1.0, 1.0, -2.0]);
        assert_eq!(eval(&p, cx(3.0, 0.0)), cx(10.0, 0.0));
        let s = add(&p, &[cx(1.0, 0.0), cx(2.0, 0.0)]);
        assert_eq!(real_coefficients(&s), vec![1.0, 2.0, 0.0]);
    }

    #[test]
    fn recovers_known_roots() {
        let want = vec![
            cx(0.5, 0.3),
            cx(0.5, -0.3),
            cx(-0.7, 0.0),
            cx(0.99, 0.05),
            cx(0.99, -0.05),
            cx(0.2, 0.0),
        ];
        let p = from_roots(&want);
        let got = real_roots(&p).unwrap();
        assert_eq!(got.len(), want.len());
        for w in &want {
            let best = got.iter().map(|g| (g - w).norm()).fold(f64::MAX, f64::min);
            assert!(best < 1e-10, "{w} missing, closest {best}");
        }
    }

    #[test]
    fn zeros_at_origin_are_exact() {
        let p = from_roots(&[cx(0.0, 0.0); 4]);
        let r = roots(&p).unwrap();
        assert_eq!(r, vec![cx(0.0, 0.0); 4]);
    }

    #[test]
    fn multiple_root_is_located() {
        // A root of multiplicity m is only determined to about eps^(1/m).
        let p = from_roots(&[cx(1.0, 0.0); 4]);
        let r = real_roots(&p).unwrap();
        assert_eq!(r.len(), 4);
        assert!(r.iter().all(|z| (z - cx(1.0, 0.0)).norm() < 1e-3), "{r:?}");
    }

    #[test]
    fn conjugate_pairing_is_exact() {
        let r = pair_conjugates(vec![
            cx(0.3, 0.4 + 1e-12),
            cx(0.3 + 1e-12, -0.4),
            cx(0.1, 1e-12),
        ]);
        assert_eq!(r.len(), 3);
        let complex: Vec<_> = r.iter().filter(|z| z.im != 0.0).collect();
        assert_eq!(complex.len(), 2);
        assert_eq!(*complex[0], complex[1].conj());
    }
}
