//! Two-sided exponential Green kernels.
//!
//! For `a y'' - c y' - b y = -h` with `a, b > 0` the bounded solution is
//! `y = k * h` where
//!
//! ```text
//! k(s) = exp(ν s) / σ   (s >= 0),    exp(μ s) / σ   (s < 0),
//! ```
//!
//! `ν < 0 < μ` are the roots of `a z² - c z - b = 0` and `σ = √(c² + 4ab)`.

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GreenKernel {
    pub sigma: f64,
    pub nu: f64,
    pub mu: f64,
}

impl GreenKernel {
    /// Kernel of `y'' - c y' - β y`.
    pub fn profile(c: f64, beta: f64) -> Self {
        Self::second_order(1.0, c, beta)
    }

    /// Kernel of `a y'' - c y' - b y`.
    pub fn second_order(a: f64, c: f64, b: f64) -> Self {
        let sigma = (c * c + 4.0 * a * b).sqrt();
        // Take the root free of cancellation, the other from `ν μ = -b / a`.
        let (nu, mu) = if c >= 0.0 {
            let mu = (c + sigma) / (2.0 * a);
            (-b / (a * mu), mu)
        } else {
            let nu = (c - sigma) / (2.0 * a);
            (nu, -b / (a * nu))
        };
        GreenKernel { sigma, nu, mu }
    }

    pub fn eval(&self, s: f64) -> f64 {
        if s >= 0.0 {
            (self.nu * s).exp() / self.sigma
        } else {
            (self.mu * s).exp() / self.sigma
        }
    }

    /// `∫ k`.
    pub fn mass(&self) -> f64 {
        (1.0 / -self.nu + 1.0 / self.mu) / self.sigma
    }

    /// `∫ k(s) exp(-z s) ds`, finite for `ν < z < μ`.
    pub fn transform(&self, z: f64) -> Option<f64> {
        (z > self.nu && z < self.mu).then(|| (1.0 / (z - self.nu) + 1.0 / (self.mu - z)) / self.sigma)
    }

    /// Fastest exponential rate of either side.
    pub fn max_rate(&self) -> f64 {
        self.mu.max(-self.nu)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn value_at_origin() {
        let k = GreenKernel::profile(1.3, 2.0);
        assert_eq!(k.eval(0.0), 1.0 / (1.3f64 * 1.3 + 8.0).sqrt());
    }

    #[test]
    fn mass_is_inverse_beta() {
        for (c, beta) in [(0.0, 1.0), (2.5, 3.0), (-4.0, 0.2)] {
            let k = GreenKernel::profile(c, beta);
            assert!((k.mass() - 1.0 / beta).abs() < 1e-14);
        }
    }

    #[test]
    fn symmetric_at_zero_speed() {
        let k = GreenKernel::profile(0.0, 1.0);
        assert_eq!((k.sigma, k.nu, k.mu), (2.0, -1.0, 1.0));
        for s in [-2.0f64, -0.5, 0.3, 4.0] {
            assert!((k.eval(s) - (-s.abs()).exp() / 2.0).abs() < 1e-15);
        }
    }

    #[test]
    fn transform_is_reciprocal_symbol() {
        let (c, beta) = (1.7, 2.2);
        let k = GreenKernel::profile(c, beta);
        for z in [-0.5, 0.0, 0.9, 2.0] {
            let want = 1.0 / (beta + c * z - z * z);
            assert!((k.transform(z).unwrap() - want).abs() < 1e-13);
        }
        assert!(k.transform(k.mu + 0.1).is_none());
    }

    #[test]
    fn jump_condition_of_diffusion_kernel() {
        let (d, c, g) = (0.7, 1.1, 0.4);
        let k = GreenKernel::second_order(d, c, g);
        // a [k'(0+) - k'(0-)] = -1
        assert!((d * (k.nu - k.mu) / k.sigma + 1.0).abs() < 1e-14);
        assert!((d * k.nu * k.nu - c * k.nu - g).abs() < 1e-12);
    }
}
