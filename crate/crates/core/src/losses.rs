//! Clustering loss contract and built-in losses.
//!
//! A loss must be coercive, convex and beta-smooth in its first argument, and
//! must rank candidate centers exactly like Euclidean distance does. Those
//! three conditions are what [`validate_assumption3`] probes numerically, so
//! new losses can be checked before being plugged into the engine.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::centers::dist2;
use crate::error::{Error, Result};
use crate::seeding::{derive_rng, random_unit, standard_normal};

/// Pairwise clustering loss `f(x, y)` with its smoothness constant.
pub trait Loss: Send + Sync {
    fn name(&self) -> &str;
    /// Smoothness constant: an upper bound on the curvature of `f(., y)`.
    fn beta(&self) -> f64;
    fn value(&self, x: &[f64], y: &[f64]) -> f64;
    /// Gradient with respect to `x`, written into `out`.
    fn gradient(&self, x: &[f64], y: &[f64], out: &mut [f64]);
}

/// Squared Euclidean loss: the K-means cost.
#[derive(Debug, Clone, Copy)]
pub struct SquaredEuclidean;

impl Loss for SquaredEuclidean {
    fn name(&self) -> &str {
        "kmeans"
    }

    fn beta(&self) -> f64 {
        2.0
    }

    fn value(&self, x: &[f64], y: &[f64]) -> f64 {
        dist2(x, y)
    }

    fn gradient(&self, x: &[f64], y: &[f64], out: &mut [f64]) {
        for ((o, &xi), &yi) in out.iter_mut().zip(x).zip(y) {
            *o = 2.0 * (xi - yi);
        }
    }
}

/// Huber loss on the Euclidean residual norm: quadratic inside `delta`,
/// linear outside, 1-smooth everywhere.
#[derive(Debug, Clone, Copy)]
pub struct HuberLoss {
    delta: f64,
}

impl HuberLoss {
    pub fn delta(&self) -> f64 {
        self.delta
    }
}

impl Loss for HuberLoss {
    fn name(&self) -> &str {
        "huber"
    }

    fn beta(&self) -> f64 {
        1.0
    }

    fn value(&self, x: &[f64], y: &[f64]) -> f64 {
        let r = dist2(x, y).sqrt();
        if r <= self.delta {
            0.5 * r * r
        } else {
            self.delta * r - 0.5 * self.delta * self.delta
        }
    }

    fn gradient(&self, x: &[f64], y: &[f64], out: &mut [f64]) {
        let r = dist2(x, y).sqrt();
        let scale = if r <= self.delta { 1.0 } else { self.delta / r };
        for ((o, &xi), &yi) in out.iter_mut().zip(x).zip(y) {
            *o = scale * (xi - yi);
        }
    }
}

/// The K-means loss `f(x,y) = ||x - y||^2` with gradient `2(x - y)`, beta = 2.
pub fn kmeans_loss() -> SquaredEuclidean {
    SquaredEuclidean
}

/// Huber loss with threshold `delta > 0`.
pub fn huber_loss(delta: f64) -> Result<HuberLoss> {
    if !delta.is_finite() || delta <= 0.0 {
        return Err(Error::Config(format!("huber delta must be positive, got {delta}")));
    }
    Ok(HuberLoss { delta })
}

/// Loss selection for configs and the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum LossKind {
    #[default]
    Kmeans,
    Huber { delta: f64 },
}

impl LossKind {
    pub fn build(&self) -> Result<Box<dyn Loss>> {
        match *self {
            LossKind::Kmeans => Ok(Box::new(kmeans_loss())),
            LossKind::Huber { delta } => Ok(Box::new(huber_loss(delta)?)),
        }
    }
}

/// Outcome of probing one condition.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConditionReport {
    pub passed: bool,
    pub trials: usize,
    pub failures: usize,
    /// Largest observed violation (0 when clean).
    pub worst_violation: f64,
}

impl ConditionReport {
    fn new(trials: usize) -> Self {
        Self { passed: true, trials, failures: 0, worst_violation: 0.0 }
    }

    fn record(&mut self, violation: f64) {
        if violation > 0.0 {
            self.passed = false;
            self.failures += 1;
            self.worst_violation = self.worst_violation.max(violation);
        }
    }
}

/// Numerical report on the loss contract: coercivity, convexity plus
/// beta-smoothness, and Euclidean order preservation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub loss: String,
    pub dimension: usize,
    pub coercivity: ConditionReport,
    pub smoothness: ConditionReport,
    pub order_preservation: ConditionReport,
}

impl AssumptionReport {
    pub fn all_passed(&self) -> bool {
        self.coercivity.passed && self.smoothness.passed && self.order_preservation.passed
    }
}

const BREGMAN_SLACK: f64 = 1e-9;
const COERCIVITY_RADII: [f64; 5] = [1e2, 1e3, 1e4, 1e5, 1e6];

/// Probes the three loss conditions at `trials` random configurations each.
///
/// Coercivity walks random rays outward; convexity and smoothness sandwich the
/// Bregman gap `f(x,y) - f(z,y) - <grad f(z,y), x - z>` between 0 and
/// `(beta/2)||x - z||^2`; order preservation compares nested and equal radii.
/// Every fourth smoothness trial places `z` within 1e-1..1e-6 of `y` to catch
/// losses that are non-smooth at their minimum.
pub fn validate_assumption3(
    loss: &dyn Loss,
    d: usize,
    trials: usize,
    seed: u64,
) -> AssumptionReport {
    assert!(trials >= 1, "need at least one trial");
    assert!(d >= 1, "need dimension >= 1");
    let beta = loss.beta();

    let mut coercivity = ConditionReport::new(trials);
    let mut rng = derive_rng(seed, 1);
    for _ in 0..trials {
        let y: Vec<f64> = (0..d).map(|_| standard_normal(&mut rng)).collect();
        let u = random_unit(&mut rng, d);
        let base = loss.value(&y, &y);
        let mut prev = base;
        let mut worst: f64 = 0.0;
        for radius in COERCIVITY_RADII {
            let x: Vec<f64> = y.iter().zip(&u).map(|(&yi, &ui)| yi + radius * ui).collect();
            let v = loss.value(&x, &y);
            if v <= prev {
                worst = worst.max(prev - v + f64::MIN_POSITIVE);
            }
            prev = v;
        }
        coercivity.record(worst);
    }

    let mut smoothness = ConditionReport::new(trials);
    let mut rng = derive_rng(seed, 2);
    for trial in 0..trials {
        let y: Vec<f64> = (0..d).map(|_| standard_normal(&mut rng)).collect();
        let scale = [0.1, 1.0, 10.0][trial % 3];
        let x: Vec<f64> =
            y.iter().map(|&yi| yi + scale * standard_normal(&mut rng)).collect();
        let z: Vec<f64> = if trial % 4 == 0 {
            // Probe near the minimum, where non-smooth losses break.
            let eps = 10f64.powi(-(1 + (trial / 4 % 6) as i32));
            let u = random_unit(&mut rng, d);
            y.iter().zip(&u).map(|(&yi, &ui)| yi + eps * ui).collect()
        } else {
            y.iter().map(|&yi| yi + scale * standard_normal(&mut rng)).collect()
        };

        let mut grad = vec![0.0; d];
        loss.gradient(&z, &y, &mut grad);
        let inner: f64 = grad.iter().zip(x.iter().zip(&z)).map(|(g, (xi, zi))| g * (xi - zi)).sum();
        let gap = loss.value(&x, &y) - loss.value(&z, &y) - inner;
        let quad = 0.5 * beta * dist2(&x, &z);
        // Convexity: gap >= 0. Smoothness: gap <= quad.
        let violation = (-gap - BREGMAN_SLACK).max(gap - quad - BREGMAN_SLACK).max(0.0);
        smoothness.record(violation);
    }

    let mut order = ConditionReport::new(trials);
    let mut rng = derive_rng(seed, 3);
    for _ in 0..trials {
        let y: Vec<f64> = (0..d).map(|_| standard_normal(&mut rng)).collect();
        let u1 = random_unit(&mut rng, d);
        let u2 = random_unit(&mut rng, d);
        let r1 = rng.random::<f64>() * 3.0 + 1e-3;
        let r2 = r1 * (1.0 + rng.random::<f64>() + 1e-6);

        let at = |u: &[f64], r: f64| -> Vec<f64> {
            y.iter().zip(u).map(|(&yi, &ui)| yi + r * ui).collect()
        };
        let near = loss.value(&at(&u1, r1), &y);
        let far = loss.value(&at(&u2, r2), &y);
        let same = loss.value(&at(&u2, r1), &y);
        let strict_violation = if near < far { 0.0 } else { near - far + f64::MIN_POSITIVE };
        let eq_violation =
            ((near - same).abs() - 1e-9 * (1.0 + near.abs())).max(0.0);
        order.record(strict_violation.max(eq_violation));
    }

    AssumptionReport {
        loss: loss.name().to_string(),
        dimension: d,
        coercivity,
        smoothness,
        order_preservation: order,
    }
}

/// Central-difference gradient of `loss.value(., y)` at `x`, for tests and
/// diagnostics. Step is `1e-6 * max(1, ||x||)` per coordinate.
pub fn numerical_gradient(loss: &dyn Loss, x: &[f64], y: &[f64]) -> Vec<f64> {
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let h = 1e-6 * norm.max(1.0);
    let mut grad = vec![0.0; x.len()];
    let mut probe = x.to_vec();
    for i in 0..x.len() {
        probe[i] = x[i] + h;
        let fp = loss.value(&probe, y);
        probe[i] = x[i] - h;
        let fm = loss.value(&probe, y);
        probe[i] = x[i];
        grad[i] = (fp - fm) / (2.0 * h);
    }
    grad
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Euclidean norm loss: convex and coercive but not smooth at x = y.
    struct NormLoss;

    impl Loss for NormLoss {
        fn name(&self) -> &str {
            "norm"
        }

        fn beta(&self) -> f64 {
            1.0
        }

        fn value(&self, x: &[f64], y: &[f64]) -> f64 {
            dist2(x, y).sqrt()
        }

        fn gradient(&self, x: &[f64], y: &[f64], out: &mut [f64]) {
            let r = dist2(x, y).sqrt();
            let scale = if r > 0.0 { 1.0 / r } else { 0.0 };
            for ((o, &xi), &yi) in out.iter_mut().zip(x).zip(y) {
                *o = scale * (xi - yi);
            }
        }
    }

    #[test]
    fn kmeans_loss_basics() {
        let loss = kmeans_loss();
        assert_eq!(loss.value(&[1.0, 2.0], &[1.0, 2.0]), 0.0);
        let mut g = [0.0, 0.0];
        loss.gradient(&[1.0, 2.0], &[1.0, 2.0], &mut g);
        assert_eq!(g, [0.0, 0.0]);

        assert_eq!(loss.value(&[1.0, 0.0], &[0.0, 0.0]), 1.0);
        loss.gradient(&[1.0, 0.0], &[0.0, 0.0], &mut g);
        assert_eq!(g, [2.0, 0.0]);
    }

    #[test]
    fn kmeans_gradient_matches_finite_differences() {
        let loss = kmeans_loss();
        let mut rng = derive_rng(9, 0);
        for _ in 0..50 {
            let x: Vec<f64> = (0..4).map(|_| standard_normal(&mut rng) * 3.0).collect();
            let y: Vec<f64> = (0..4).map(|_| standard_normal(&mut rng) * 3.0).collect();
            let mut g = vec![0.0; 4];
            loss.gradient(&x, &y, &mut g);
            let num = numerical_gradient(&loss, &x, &y);
            for (a, b) in g.iter().zip(&num) {
                assert_relative_eq!(a, b, max_relative = 1e-6, epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn huber_requires_positive_delta() {
        assert!(huber_loss(0.0).is_err());
        assert!(huber_loss(-1.0).is_err());
        assert!(huber_loss(f64::NAN).is_err());
    }

    #[test]
    fn huber_closed_form_outside_the_ball() {
        let loss = huber_loss(1.0).unwrap();
        // ||x - y|| = 2: value = delta*r - delta^2/2 = 2 - 0.5.
        let x = [2.0, 0.0];
        let y = [0.0, 0.0];
        assert_relative_eq!(loss.value(&x, &y), 1.5, max_relative = 1e-15);
        let mut g = [0.0, 0.0];
        loss.gradient(&x, &y, &mut g);
        let norm = (g[0] * g[0] + g[1] * g[1]).sqrt();
        assert_relative_eq!(norm, 1.0, max_relative = 1e-15);
    }

    #[test]
    fn huber_at_minimum_has_zero_gradient() {
        let loss = huber_loss(0.5).unwrap();
        let y = [1.0, -2.0, 3.0];
        assert_eq!(loss.value(&y, &y), 0.0);
        let mut g = [9.0; 3];
        loss.gradient(&y, &y, &mut g);
        assert_eq!(g, [0.0; 3]);
    }

    #[test]
    fn huber_is_continuous_at_the_kink() {
        let loss = huber_loss(1.0).unwrap();
        let y = [0.0];
        // Scan a path crossing ||x - y|| = delta.
        for i in 0..=100 {
            let r = 0.99 + 0.0002 * i as f64;
            let lo = loss.value(&[r], &y);
            let hi = loss.value(&[r + 1e-9], &y);
            assert!((hi - lo).abs() < 1e-8, "value jump at r={r}");
        }
        let inside = loss.value(&[1.0 - 1e-13], &y);
        let outside = loss.value(&[1.0 + 1e-13], &y);
        assert!((inside - outside).abs() < 1e-12);
        let mut gi = [0.0];
        let mut go = [0.0];
        loss.gradient(&[1.0 - 1e-13], &y, &mut gi);
        loss.gradient(&[1.0 + 1e-13], &y, &mut go);
        assert!((gi[0] - go[0]).abs() < 1e-12);
    }

    #[test]
    fn huber_gradient_matches_finite_differences() {
        let loss = huber_loss(1.5).unwrap();
        let mut rng = derive_rng(10, 0);
        for _ in 0..50 {
            let x: Vec<f64> = (0..4).map(|_| standard_normal(&mut rng) * 2.0).collect();
            let y: Vec<f64> = (0..4).map(|_| standard_normal(&mut rng) * 2.0).collect();
            let mut g = vec![0.0; 4];
            loss.gradient(&x, &y, &mut g);
            let num = numerical_gradient(&loss, &x, &y);
            for (a, b) in g.iter().zip(&num) {
                assert_relative_eq!(a, b, max_relative = 1e-5, epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn validator_passes_builtin_losses() {
        for d in [1usize, 2, 4, 8] {
            let report = validate_assumption3(&kmeans_loss(), d, 1000, 42);
            assert!(report.all_passed(), "kmeans d={d}: {report:?}");
            let report = validate_assumption3(&huber_loss(1.0).unwrap(), d, 1000, 42);
            assert!(report.all_passed(), "huber d={d}: {report:?}");
        }
    }

    #[test]
    fn validator_flags_the_non_smooth_norm_loss() {
        let report = validate_assumption3(&NormLoss, 3, 1000, 42);
        assert!(!report.smoothness.passed, "{report:?}");
        // The norm is still coercive and order preserving.
        assert!(report.coercivity.passed);
        assert!(report.order_preservation.passed);
    }

    #[test]
    fn losses_are_rotation_invariant() {
        // Householder reflection H = I - 2 v v^T is orthogonal.
        let mut rng = derive_rng(11, 0);
        let kmeans = kmeans_loss();
        let huber = huber_loss(0.7).unwrap();
        for _ in 0..100 {
            let d = 3;
            let v = random_unit(&mut rng, d);
            let reflect = |x: &[f64]| -> Vec<f64> {
                let dot: f64 = x.iter().zip(&v).map(|(a, b)| a * b).sum();
                x.iter().zip(&v).map(|(a, b)| a - 2.0 * dot * b).collect()
            };
            let x: Vec<f64> = (0..d).map(|_| standard_normal(&mut rng)).collect();
            let y: Vec<f64> = (0..d).map(|_| standard_normal(&mut rng)).collect();
            assert_relative_eq!(
                kmeans.value(&x, &y),
                kmeans.value(&reflect(&x), &reflect(&y)),
                max_relative = 1e-12
            );
            assert_relative_eq!(
                huber.value(&x, &y),
                huber.value(&reflect(&x), &reflect(&y)),
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn reported_beta_is_an_upper_bound() {
        // The measured Bregman gap never exceeds (beta/2)||x - z||^2.
        for d in [1usize, 2, 4, 8] {
            for report in [
                validate_assumption3(&kmeans_loss(), d, 1500, 7),
                validate_assumption3(&huber_loss(2.0).unwrap(), d, 1500, 7),
            ] {
                assert!(report.smoothness.passed, "{report:?}");
            }
        }
    }
}
