//! Grid convolutions with `k₂` (FFT or direct sum) and `k₁` (exponential
//! recursions).

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::Result;
use crate::green::GreenKernel;
use crate::kernels::Projection;

/// Below this many weights the convolution is summed directly.
const DIRECT_LIMIT: usize = 64;

/// `(k₂ * F)(t_i) ≈ Σ_j w_j F(t_i - j h)` on a fixed grid.
///
/// Densities are sampled at the nodes `r_j = j h` with trapezoid weights,
/// point masses are split between their two neighbouring nodes, and the
/// weights are rescaled so that they sum to one.
#[derive(Clone)]
pub struct K2Convolution {
    h: f64,
    jlo: i64,
    weights: Vec<f64>,
    n: usize,
    fft: Option<FftPlan>,
}

#[derive(Clone)]
struct FftPlan {
    len: usize,
    spectrum: Vec<Complex<f64>>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for K2Convolution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("K2Convolution")
            .field("h", &self.h)
            .field("jlo", &self.jlo)
            .field("len", &self.weights.len())
            .finish()
    }
}

impl K2Convolution {
    /// Samples `proj` with step `h` for grids of `n` nodes.
    pub fn new(proj: &Projection, h: f64, n: usize) -> Result<Self> {
        let mut lo = 0.0f64;
        let mut hi = 0.0f64;
        if proj.has_density() {
            let (a, b) = proj.support();
            lo = lo.min(a);
            hi = hi.max(b);
        }
        for a in proj.atoms() {
            lo = lo.min(a.at);
            hi = hi.max(a.at);
        }
        let jlo = (lo / h).floor() as i64;
        let jhi = (hi / h).ceil() as i64 + 1;
        let len = (jhi - jlo + 1) as usize;
        let mut weights = vec![0.0; len];

        if proj.has_density() {
            let breaks = proj.breakpoints();
            for (k, w) in weights.iter_mut().enumerate() {
                let r = (jlo + k as i64) as f64 * h;
                // At a jump the trapezoid rule wants the mean of both sides.
                let v = if breaks.iter().any(|&b| (b - r).abs() < 1e-9 * h) {
                    let e = 1e-9 * h;
                    0.5 * (proj.density(r - e)? + proj.density(r + e)?)
                } else {
                    proj.density(r)?
                };
                *w = v * h;
            }
            let total: f64 = weights.iter().sum();
            let target = 1.0 - proj.atom_mass();
            if total > 0.0 {
                weights.iter_mut().for_each(|w| *w *= target / total);
            }
        }
        for a in proj.atoms() {
            let x = a.at / h - jlo as f64;
            let k = x.floor() as usize;
            let th = x - k as f64;
            weights[k] += a.weight * (1.0 - th);
            if th > 0.0 {
                weights[k + 1] += a.weight * th;
            }
        }
        // Trim exact zeros at both ends.
        let first = weights.iter().position(|&w| w != 0.0).unwrap_or(0);
        let last = weights.iter().rposition(|&w| w != 0.0).unwrap_or(0);
        let weights = weights[first..=last].to_vec();
        let jlo = jlo + first as i64;

        let mut out = K2Convolution {
            h,
            jlo,
            weights,
            n,
            fft: None,
        };
        if out.weights.len() > DIRECT_LIMIT {
            out.fft = Some(out.plan());
        }
        Ok(out)
    }

    fn padded_len(&self) -> usize {
        self.n + self.weights.len() - 1
    }

    fn plan(&self) -> FftPlan {
        let len = (self.padded_len() + self.weights.len() - 1).next_power_of_two();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(len);
        let inverse = planner.plan_fft_inverse(len);
        let mut spectrum = vec![Complex::new(0.0, 0.0); len];
        for (s, &w) in spectrum.iter_mut().zip(&self.weights) {
            s.re = w;
        }
        forward.process(&mut spectrum);
        FftPlan {
            len,
            spectrum,
            forward,
            inverse,
        }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Index of the first weight: it sits at `r = first_index * h`.
    pub fn first_index(&self) -> i64 {
        self.jlo
    }

    /// Largest `|r|` carrying weight.
    pub fn support_radius(&self) -> f64 {
        let jhi = self.jlo + self.weights.len() as i64 - 1;
        self.jlo.abs().max(jhi.abs()) as f64 * self.h
    }

    /// `Σ_j w_j exp(-z r_j)`, the discrete counterpart of `M(z, c)`.
    pub fn tilted_sum(&self, z: f64) -> f64 {
        self.weights
            .iter()
            .enumerate()
            .map(|(k, w)| w * (-z * (self.jlo + k as i64) as f64 * self.h).exp())
            .sum()
    }

    /// `F` padded so that index `x` holds `F(t_{x - jhi})`, with zero to the
    /// left of the grid and the last value to the right.
    fn pad(&self, f: &[f64]) -> Vec<f64> {
        let jhi = self.jlo + self.weights.len() as i64 - 1;
        let last = f[self.n - 1];
        (0..self.padded_len())
            .map(|x| {
                let i = x as i64 - jhi;
                if i < 0 {
                    0.0
                } else if i as usize >= self.n {
                    last
                } else {
                    f[i as usize]
                }
            })
            .collect()
    }

    /// Same as [`Self::apply`] but always by direct summation. FFT rounding
    /// is absolute in `max |f|`; this keeps the error relative at each node,
    /// which matters for inputs spanning many orders of magnitude.
    pub fn apply_direct(&self, f: &[f64]) -> Vec<f64> {
        assert_eq!(f.len(), self.n, "grid size mismatch");
        self.direct(&self.pad(f))
    }

    fn direct(&self, p: &[f64]) -> Vec<f64> {
        let m = self.weights.len();
        (0..self.n)
            .map(|i| {
                self.weights
                    .iter()
                    .enumerate()
                    .map(|(k, w)| w * p[i + m - 1 - k])
                    .sum()
            })
            .collect()
    }

    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        assert_eq!(f.len(), self.n, "grid size mismatch");
        let p = self.pad(f);
        let m = self.weights.len();
        // out_i = Σ_k W_k P[i + m - 1 - k]
        match &self.fft {
            None => self.direct(&p),
            Some(plan) => {
                let mut buf = vec![Complex::new(0.0, 0.0); plan.len];
                for (b, &v) in buf.iter_mut().zip(&p) {
                    b.re = v;
                }
                plan.forward.process(&mut buf);
                for (b, s) in buf.iter_mut().zip(&plan.spectrum) {
                    *b *= s;
                }
                plan.inverse.process(&mut buf);
                let scale = 1.0 / plan.len as f64;
                (0..self.n).map(|i| buf[i + m - 1].re * scale).collect()
            }
        }
    }
}

/// `∫_0^∞ e^{-a u} F(t_i - u) du` for the piecewise-linear interpolant of
/// `F`, with `F` ramping to zero one step left of the grid.
pub fn exp_filter_left(f: &[f64], a: f64, h: f64) -> Vec<f64> {
    let (e, e0, e1) = filter_coeffs(a, h);
    let mut out = vec![0.0; f.len()];
    out[0] = f[0] * (e0 - e1 / h);
    for i in 1..f.len() {
        out[i] = e * out[i - 1] + f[i] * e0 + (f[i - 1] - f[i]) * e1 / h;
    }
    out
}

/// `∫_0^∞ e^{-b u} F(t_i + u) du`, holding `F` constant right of the grid.
pub fn exp_filter_right(f: &[f64], b: f64, h: f64) -> Vec<f64> {
    let (e, e0, e1) = filter_coeffs(b, h);
    let n = f.len();
    let mut out = vec![0.0; n];
    out[n - 1] = f[n - 1] / b;
    for i in (0..n - 1).rev() {
        out[i] = e * out[i + 1] + f[i] * e0 + (f[i + 1] - f[i]) * e1 / h;
    }
    out
}

/// `(e^{-ah}, ∫_0^h e^{-au} du, ∫_0^h u e^{-au} du)`.
fn filter_coeffs(a: f64, h: f64) -> (f64, f64, f64) {
    let x = a * h;
    let e = (-x).exp();
    let e0 = -(-x).exp_m1() / a;
    let e1 = (-(-x).exp_m1() - x * e) / (a * a);
    (e, e0, e1)
}

/// `k₁ * G` on a uniform grid, exact for piecewise-linear `G`.
pub fn k1_convolve(k1: &GreenKernel, g: &[f64], h: f64) -> Vec<f64> {
    let left = exp_filter_left(g, -k1.nu, h);
    let right = exp_filter_right(g, k1.mu, h);
    left.iter().zip(&right).map(|(l, r)| (l + r) / k1.sigma).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{Kernel, SpatialLaw, TemporalLaw};

    #[test]
    fn local_kernel_is_identity() {
        let k = Kernel::local().projection(1.3);
        let c = K2Convolution::new(&k, 0.1, 20).unwrap();
        assert_eq!(c.weights(), &[1.0]);
        let f: Vec<f64> = (0..20).map(|i| (i as f64).sin()).collect();
        assert_eq!(c.apply(&f), f);
    }

    #[test]
    fn discrete_delay_shifts() {
        // r = c τ = 0.3 = 3 steps.
        let k = Kernel::separable(TemporalLaw::discrete(0.5), SpatialLaw::Dirac { at: 0.0 }).unwrap();
        let c = K2Convolution::new(&k.projection(0.6), 0.1, 16).unwrap();
        let mut f = vec![0.0; 16];
        f[5] = 1.0;
        let out = c.apply(&f);
        for (i, v) in out.iter().enumerate() {
            let want = if i == 8 { 1.0 } else { 0.0 };
            assert!((v - want).abs() < 1e-12, "{i} {v}");
        }
    }

    #[test]
    fn fft_matches_direct_sum() {
        let k = Kernel::separable(
            TemporalLaw::Exponential { rate: 1.0 },
            SpatialLaw::Gaussian { mean: 0.0, variance: 1.0 },
        )
        .unwrap();
        let h = 0.05;
        let n = 400;
        let conv = K2Convolution::new(&k.projection(1.5), h, n).unwrap();
        assert!(conv.weights().len() > DIRECT_LIMIT);
        assert!((conv.weights().iter().sum::<f64>() - 1.0).abs() < 1e-14);
        let f: Vec<f64> = (0..n).map(|i| 1.0 / (1.0 + (-(i as f64 - 200.0) * h).exp())).collect();
        let out = conv.apply(&f);
        let ext = |i: i64| -> f64 {
            if i < 0 {
                0.0
            } else if i as usize >= n {
                f[n - 1]
            } else {
                f[i as usize]
            }
        };
        for i in (0..n).step_by(37) {
            let direct: f64 = conv
                .weights()
                .iter()
                .enumerate()
                .map(|(k, w)| w * ext(i as i64 - (conv.first_index() + k as i64)))
                .sum();
            assert!((out[i] - direct).abs() < 1e-13);
        }
    }

    #[test]
    fn tilted_sum_tracks_transform() {
        let k = Kernel::separable(
            TemporalLaw::Exponential { rate: 1.0 },
            SpatialLaw::Gaussian { mean: 0.0, variance: 1.0 },
        )
        .unwrap();
        let c = 1.8;
        let conv = K2Convolution::new(&k.projection(c), 0.01, 10).unwrap();
        for z in [0.0, 0.25, 1.0] {
            let exact = k.transform(z, c).unwrap();
            assert!((conv.tilted_sum(z) - exact).abs() < 1e-4 * exact, "{z}");
        }
    }

    #[test]
    fn filters_reproduce_exponentials() {
        // Left filter of e^{λt}: ∫_0^∞ e^{-au} e^{λ(t-u)} du = e^{λt}/(a+λ).
        let (h, a, lam) = (0.01, 2.0, 0.5);
        let t: Vec<f64> = (0..3000).map(|i| -20.0 + i as f64 * h).collect();
        let f: Vec<f64> = t.iter().map(|&x| (lam * x).exp()).collect();
        let out = exp_filter_left(&f, a, h);
        let i = 2500;
        let want = f[i] / (a + lam);
        assert!((out[i] - want).abs() < 1e-5 * want);
        let out = exp_filter_right(&f, a, h);
        let i = 100;
        let want = f[i] / (a - lam);
        assert!((out[i] - want).abs() < 1e-5 * want);
    }

    #[test]
    fn linear_data_is_exact() {
        // Piecewise-linear data: the recursions are exact up to rounding.
        let (h, a) = (0.2, 1.5);
        let f: Vec<f64> = (0..200).map(|i| (i as f64 * h).min(10.0)).collect();
        let out = exp_filter_right(&f, a, h);
        // Right of t = 10 the data are constant.
        assert!((out[150] - 10.0 / a).abs() < 1e-12);
        let i = 20; // t = 4: ∫_0^6 e^{-au}(4+u)du + 10 e^{-6a}/a
        let exact = 4.0 / a + 1.0 / (a * a) - (-6.0 * a).exp() * (10.0 / a + 1.0 / (a * a)) + 10.0 * (-6.0 * a).exp() / a;
        assert!((out[i] - exact).abs() < 1e-12, "{} {}", out[i], exact);
    }

    #[test]
    fn k1_of_constant() {
        let k1 = GreenKernel::profile(1.2, 3.0);
        let g = vec![6.0; 4000];
        let out = k1_convolve(&k1, &g, 0.01);
        // 20 units from either end the boundary transients are below e^{-24}.
        assert!((out[2000] - 2.0).abs() < 1e-9);
    }
}
