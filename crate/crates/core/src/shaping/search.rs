//! Stochastic projected descent on the exact information loss.
//!
//! Iterates in log-PSD coordinates `x_k = ln S_q(k)`. Every candidate is
//! pulled back onto the power constraint by a uniform rescale (the constraint
//! is homogeneous of degree −1/2), so each accepted iterate is feasible.
//! Each iteration tries a projected-gradient step with an adaptive length and
//! then, while the annealed temperature is non-negligible, a random
//! multiplicative perturbation; either is kept only if it lowers the loss.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use rayon::prelude::*;

use crate::{ChannelSpec, Error, PowerBudget, Psd, Real, Result, ShapingResult};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchConfig {
    pub max_iters: usize,
    /// Initial step and perturbation size in natural-log units of `S_q`.
    pub step_scale: f64,
    /// Convergence threshold on the relative projected-gradient norm. Double
    /// precision resolves loss decreases down to roughly 1e−7.
    pub tolerance: f64,
    pub seed: u64,
    pub restarts: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            max_iters: 20_000,
            step_scale: 0.5,
            tolerance: 1e-6,
            seed: 0,
            restarts: 4,
        }
    }
}

impl SearchConfig {
    fn validate(&self) -> Result<()> {
        let bad = |name, reason: &str| {
            Err(Error::InvalidParameter {
                name,
                reason: reason.into(),
            })
        };
        if self.max_iters == 0 {
            return bad("max_iters", "must be at least 1");
        }
        if !(self.tolerance > 0.0) {
            return bad("tolerance", "must be positive");
        }
        if !(self.step_scale > 0.0 && self.step_scale.is_finite()) {
            return bad("step_scale", "must be positive and finite");
        }
        if self.restarts == 0 {
            return bad("restarts", "must be at least 1");
        }
        Ok(())
    }
}

/// Outcome of [`optimal_sq_numerical`]: the best iterate over all restarts.
#[derive(Debug, Clone, PartialEq)]
pub struct NumericalShaping<T> {
    pub result: ShapingResult<T>,
    /// Whether the best restart met the stationarity tolerance.
    pub converged: bool,
    pub iterations: usize,
    /// Relative projected-gradient norm at the returned iterate.
    pub stationarity: T,
    /// Final loss of every restart, in restart order.
    pub restart_losses: Vec<T>,
}

struct Problem<'a, T> {
    noise: &'a [T],
    width: T,
    /// `√12·P`, the required value of `Δ·Σ S_q^(−1/2)`.
    target: T,
}

/// `ln S_q(k) = level + shape[k]`. Keeping the common level apart from the
/// O(1) shape preserves full precision in the small steps near convergence.
#[derive(Clone)]
struct Point<T> {
    shape: Vec<T>,
    level: T,
}

struct Run<T> {
    point: Point<T>,
    loss: T,
    iterations: usize,
    stationarity: T,
    converged: bool,
}

impl<T: Real> Problem<'_, T> {
    /// Sets the level so that the point meets the power constraint exactly.
    fn project(&self, p: &mut Point<T>) {
        let half = T::lit(0.5);
        let integral = self.width * p.shape.iter().map(|&y| (-y * half).exp()).sum::<T>();
        // Δ·Σ exp(−(level + y)/2) = target.
        p.level = T::lit(2.0) * (integral / self.target).ln();
    }

    fn loss(&self, p: &Point<T>) -> T {
        self.width
            * p.shape
                .iter()
                .zip(self.noise)
                .map(|(&y, &v)| ((p.level + y).exp() / v).ln_1p())
                .sum::<T>()
            * T::LOG2_E()
    }

    /// `loss(to) − loss(from)`, accumulated term by term so that differences
    /// far below the loss's own rounding level stay resolvable.
    fn loss_change(&self, from: &Point<T>, to: &Point<T>) -> T {
        let dlevel = to.level - from.level;
        self.width
            * from
                .shape
                .iter()
                .zip(&to.shape)
                .zip(self.noise)
                .map(|((&a, &b), &v)| {
                    let s = (from.level + a).exp();
                    (s * ((b - a) + dlevel).exp_m1() / (v + s)).ln_1p()
                })
                .sum::<T>()
            * T::LOG2_E()
    }

    /// Gradient of the loss in log coordinates, projected onto the tangent
    /// space of the constraint. Returns the projection and the relative
    /// stationarity measure `max|g_proj| / max|g|`.
    fn projected_gradient(&self, p: &Point<T>) -> (Vec<T>, T) {
        let half = T::lit(0.5);
        let g: Vec<T> = p
            .shape
            .iter()
            .zip(self.noise)
            .map(|(&y, &v)| {
                let s = (p.level + y).exp();
                self.width * T::LOG2_E() * s / (v + s)
            })
            .collect();
        let c: Vec<T> = p
            .shape
            .iter()
            .map(|&y| -self.width * half * (-(p.level + y) * half).exp())
            .collect();
        let gc: T = g.iter().zip(&c).map(|(&a, &b)| a * b).sum();
        let cc: T = c.iter().map(|&b| b * b).sum();
        let proj: Vec<T> = g.iter().zip(&c).map(|(&a, &b)| a - gc / cc * b).collect();
        let gmax = g.iter().fold(T::zero(), |m, v| m.max(v.abs()));
        let pmax = proj.iter().fold(T::zero(), |m, v| m.max(v.abs()));
        (
            proj,
            if gmax > T::zero() {
                pmax / gmax
            } else {
                T::zero()
            },
        )
    }

    fn run(&self, cfg: &SearchConfig, restart: usize) -> Run<T> {
        let k = self.noise.len();
        let mut rng = ChaCha8Rng::seed_from_u64(
            cfg.seed ^ (restart as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15),
        );
        let spread = Uniform::new(-2.0, 2.0).expect("valid range");
        let shape: Vec<T> = if restart == 0 {
            vec![T::zero(); k]
        } else {
            (0..k).map(|_| T::lit(spread.sample(&mut rng))).collect()
        };
        let mut x = Point {
            shape,
            level: T::zero(),
        };
        self.project(&mut x);
        let mut trial = x.clone();
        let mut step = T::lit(cfg.step_scale);
        let min_step = T::lit(1e-15);
        let anneal = (cfg.max_iters as f64 / 20.0).max(1.0);

        let mut stationarity = T::infinity();
        let mut iterations = 0;
        while iterations < cfg.max_iters {
            let (dir, stat) = self.projected_gradient(&x);
            stationarity = stat;
            if stat < T::lit(cfg.tolerance) || step < min_step {
                break;
            }
            iterations += 1;

            let dmax = dir.iter().fold(T::zero(), |m, v| m.max(v.abs()));
            for ((t, &y), &d) in trial.shape.iter_mut().zip(&x.shape).zip(&dir) {
                *t = y - step * d / dmax;
            }
            self.project(&mut trial);
            if self.loss_change(&x, &trial) < T::zero() {
                std::mem::swap(&mut x, &mut trial);
                step = (step * T::lit(1.5)).min(T::lit(cfg.step_scale));
            } else {
                step = step / T::lit(2.0);
            }

            let temperature = cfg.step_scale * 0.2 * (-(iterations as f64) / anneal).exp();
            if temperature > 1e-6 {
                for (t, &y) in trial.shape.iter_mut().zip(&x.shape) {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    *t = y + T::lit(temperature * z);
                }
                self.project(&mut trial);
                if self.loss_change(&x, &trial) < T::zero() {
                    std::mem::swap(&mut x, &mut trial);
                }
            }
        }
        Run {
            converged: stationarity < T::lit(cfg.tolerance),
            loss: self.loss(&x),
            point: x,
            iterations,
            stationarity,
        }
    }
}

/// Numerically minimizes `∫ log2(1 + S_q/S_v) df` subject to
/// `∫ S_q^(−1/2) df = √12·P` without using the closed-form solution.
///
/// Restarts run in parallel; the lowest-loss restart wins (earliest index on
/// ties), so results are deterministic for a given seed. Non-convergence is
/// reported through [`NumericalShaping::converged`] together with the best
/// iterate.
pub fn optimal_sq_numerical<T: Real>(
    ch: &ChannelSpec<T>,
    budget: PowerBudget<T>,
    cfg: &SearchConfig,
) -> Result<NumericalShaping<T>> {
    cfg.validate()?;
    let noise = ch.noise();
    noise.require_positive("noise PSD")?;
    let problem = Problem {
        noise: noise.values(),
        width: noise.grid().bin_width(),
        target: T::lit(12.0).sqrt() * budget.value(),
    };
    let runs: Vec<Run<T>> = (0..cfg.restarts)
        .into_par_iter()
        .map(|r| problem.run(cfg, r))
        .collect();
    let restart_losses: Vec<T> = runs.iter().map(|r| r.loss).collect();
    let best = runs
        .into_iter()
        .reduce(|a, b| if b.loss < a.loss { b } else { a })
        .expect("at least one restart");

    let sq = Psd::new(
        *noise.grid(),
        best.point
            .shape
            .iter()
            .map(|&y| (best.point.level + y).exp())
            .collect(),
    )?;
    // Empirical counterpart of the closed-form bracket: geometric mean of
    // S_q / S_v^(2/3).
    let two_thirds = T::lit(2.0) / T::lit(3.0);
    let log_scale = sq
        .values()
        .iter()
        .zip(noise.values())
        .map(|(&q, &v)| q.ln() - two_thirds * v.ln())
        .sum::<T>()
        / T::from_count(sq.len());
    let result = ShapingResult::assemble(noise, sq, log_scale.exp())?;
    Ok(NumericalShaping {
        result,
        converged: best.converged,
        iterations: best.iterations,
        stationarity: best.stationarity,
        restart_losses,
    })
}
