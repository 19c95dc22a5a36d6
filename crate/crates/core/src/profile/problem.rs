use serde::{Deserialize, Serialize};

use super::conv::{k1_convolve, K2Convolution};
use super::grid::Grid;
use super::nonlinearity::{Nonlinearity, Regularized};
use crate::dispersion::{mu_q, DispersionFunction, RootOptions};
use crate::error::{Error, Result};
use crate::green::GreenKernel;
use crate::kernels::Kernel;

/// Knobs for building a [`WaveProblem`]; `None` picks the default.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProblemOptions {
    pub beta: Option<f64>,
    /// Regularization level `n`.
    pub reg_n: u32,
    /// Grid step; default resolves every exponential rate with 20 points.
    pub h: Option<f64>,
    /// Grid is `[-half_width, half_width]`; default `40 / λ`.
    pub half_width: Option<f64>,
    /// Sub/super amplitude; default `min(1 / reg_n, U / 10)`.
    pub delta: Option<f64>,
    /// Points scanned in `(λ, λ₂)` when choosing `m`.
    pub m_scan_points: usize,
}

impl Default for ProblemOptions {
    fn default() -> Self {
        ProblemOptions {
            beta: None,
            reg_n: 1000,
            h: None,
            half_width: None,
            delta: None,
            m_scan_points: 64,
        }
    }
}

/// One instance of the profile equation at speed `c`.
#[derive(Debug, Clone)]
pub struct WaveProblem {
    nl: Nonlinearity,
    kernel: Kernel,
    c: f64,
    beta: f64,
    grid: Grid,
    reg_n: u32,
    delta: f64,
    lambda: f64,
    lambda2: Option<f64>,
    m: f64,
    upper: f64,
    k1: GreenKernel,
    k2: K2Convolution,
    chi_l: DispersionFunction,
}

impl WaveProblem {
    pub fn new(nl: &Nonlinearity, kernel: &Kernel, c: f64, opts: &ProblemOptions) -> Result<Self> {
        let report = nl.validate_hypotheses(400);
        if !report.all_passed() {
            let names: Vec<_> = report.failures().map(|f| f.name).collect();
            return Err(Error::invalid("nonlinearity", format!("failed checks: {}", names.join(", "))));
        }
        if opts.reg_n == 0 {
            return Err(Error::invalid("reg_n", "must be at least 1"));
        }
        let upper = nl.upper_bound();
        let beta = match opts.beta {
            Some(b) => b,
            None => nl.select_beta()?,
        };
        check_beta(nl, beta, upper)?;

        let consts = nl.consts;
        let chi_l = DispersionFunction::new(consts.f_inf_slope, consts.l, kernel.clone())?;
        let roots = chi_l.positive_roots(c, &RootOptions::default())?;
        let lambda = roots.lambda1().ok_or(Error::NoPositiveRoot { c })?;
        let lambda2 = (roots.roots.len() == 2).then(|| roots.roots[1]);
        let top = lambda2
            .unwrap_or(roots.scan_hi)
            .min(mu_q(c, consts.f_inf_slope));
        if roots.is_double {
            return Err(Error::NoAdmissibleM { c, lambda, upper: top });
        }
        let m = choose_m(&chi_l, c, lambda, top, opts.m_scan_points)?;

        let delta = opts.delta.unwrap_or_else(|| (1.0 / opts.reg_n as f64).min(0.1 * upper));
        if !(delta > 0.0) {
            return Err(Error::invalid("delta", format!("must be positive, got {delta}")));
        }

        let k1 = GreenKernel::profile(c, beta);
        let fastest = k1.max_rate().max(lambda);
        let h = opts.h.unwrap_or(1.0 / (20.0 * fastest));
        if !((k1.max_rate() * h).exp() - 1.0 < 0.5) {
            return Err(Error::invalid("h", format!("step {h} does not resolve rate {}", k1.max_rate())));
        }
        let half = opts.half_width.unwrap_or(40.0 / lambda);
        let grid = Grid::new(-half, half, h)?;
        let k2 = K2Convolution::new(&kernel.projection(c), h, grid.n)?;

        Ok(WaveProblem {
            nl: nl.clone(),
            kernel: kernel.clone(),
            c,
            beta,
            grid,
            reg_n: opts.reg_n,
            delta,
            lambda,
            lambda2,
            m,
            upper,
            k1,
            k2,
            chi_l,
        })
    }

    pub fn nonlinearity(&self) -> &Nonlinearity {
        &self.nl
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn speed(&self) -> f64 {
        self.c
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn reg_n(&self) -> u32 {
        self.reg_n
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Leftmost positive root of `χ_L(·, c)`.
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn lambda2(&self) -> Option<f64> {
        self.lambda2
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    /// `U = sup g / inf f'`.
    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn k1(&self) -> &GreenKernel {
        &self.k1
    }

    pub fn k2(&self) -> &K2Convolution {
        &self.k2
    }

    pub fn chi_l(&self) -> &DispersionFunction {
        &self.chi_l
    }

    /// `(g_n, f_βn)` at this problem's level.
    pub fn regularized(&self) -> Regularized {
        self.nl.regularize(self.beta, self.reg_n)
    }

    /// `(g, f_β)`.
    pub fn exact(&self) -> Regularized {
        Regularized::exact(&self.nl, self.beta)
    }

    /// `(φ⁻, φ⁺)` sampled on the grid.
    pub fn sub_super(&self) -> (Vec<f64>, Vec<f64>) {
        let (d, l, m) = (self.delta, self.lambda, self.m);
        self.grid
            .nodes()
            .into_iter()
            .map(|t| {
                let sup = d * (l * t).exp();
                let sub = if t <= 0.0 { -d * (l * t).exp() * ((m - l) * t).exp_m1() } else { 0.0 };
                (sub, sup)
            })
            .unzip()
    }

    /// `∫ g(φ(t - r)) k₂(r) dr + f_β(φ(t))` with the given pair.
    pub fn apply_g_with(&self, phi: &[f64], pair: &Regularized) -> Vec<f64> {
        let gphi: Vec<f64> = phi.iter().map(|&v| pair.g(v)).collect();
        let mut out = self.k2.apply(&gphi);
        for (o, &v) in out.iter_mut().zip(phi) {
            *o += pair.f_beta(v);
        }
        out
    }

    pub fn apply_g(&self, phi: &[f64]) -> Vec<f64> {
        self.apply_g_with(phi, &self.exact())
    }

    /// `k₁ * 𝒢φ`.
    pub fn apply_a_with(&self, phi: &[f64], pair: &Regularized) -> Vec<f64> {
        k1_convolve(&self.k1, &self.apply_g_with(phi, pair), self.grid.h)
    }

    pub fn apply_a(&self, phi: &[f64]) -> Vec<f64> {
        self.apply_a_with(phi, &self.exact())
    }

    /// Linear operator `k₁ * (L k₂ * φ + (β - inf f') φ)`. Meant for
    /// unbounded inputs such as `φ⁺`, so `k₂` is applied by direct summation.
    pub fn apply_l(&self, phi: &[f64]) -> Vec<f64> {
        let c = self.nl.consts;
        let mut inner = self.k2.apply_direct(phi);
        for (o, &v) in inner.iter_mut().zip(phi) {
            *o = c.l * *o + (self.beta - c.f_inf_slope) * v;
        }
        k1_convolve(&self.k1, &inner, self.grid.h)
    }

    /// Nodes kept clear of both ends when measuring residuals: the `k₂`
    /// reach plus thirty decay lengths of `k₁`.
    pub fn margin_nodes(&self) -> usize {
        let slow = (-self.k1.nu).min(self.k1.mu);
        let m = self.grid.steps(self.k2.support_radius() + 30.0 / slow);
        m.min(self.grid.n / 4)
    }

    /// `[start, end)` of the nodes away from both boundaries.
    pub fn interior(&self) -> (usize, usize) {
        let m = self.margin_nodes();
        (m.max(1), self.grid.n - m.max(1))
    }

    /// `φ'' - c φ' - f(φ) + ∫ g(φ(t - r)) k₂(r) dr` at each node, by central
    /// differences; zero at the two end nodes.
    pub fn residual_local(&self, phi: &[f64]) -> Vec<f64> {
        let h = self.grid.h;
        let gphi: Vec<f64> = phi.iter().map(|&v| self.nl.g(v)).collect();
        let conv = self.k2.apply(&gphi);
        let mut out = vec![0.0; phi.len()];
        for i in 1..phi.len() - 1 {
            let d2 = (phi[i + 1] - 2.0 * phi[i] + phi[i - 1]) / (h * h);
            let d1 = (phi[i + 1] - phi[i - 1]) / (2.0 * h);
            out[i] = d2 - self.c * d1 - self.nl.f(phi[i]) + conv[i];
        }
        out
    }

    /// Sup of [`Self::residual_local`] over the interior.
    pub fn residual_ode(&self, phi: &[f64]) -> f64 {
        let (a, b) = self.interior();
        self.residual_local(phi)[a..b].iter().fold(0.0, |m, r| m.max(r.abs()))
    }

    /// Least-squares slope of `ln φ` over the leftmost tenth of the grid
    /// past the boundary margin.
    pub fn tail_rate(&self, phi: &[f64]) -> f64 {
        let (a, _) = self.interior();
        let b = (a + self.grid.n / 10).min(self.grid.n);
        let pts: Vec<(f64, f64)> = (a..b)
            .filter(|&i| phi[i] > 0.0)
            .map(|i| (self.grid.node(i), phi[i].ln()))
            .collect();
        let n = pts.len() as f64;
        if n < 2.0 {
            return f64::NAN;
        }
        let (sx, sy) = pts.iter().fold((0.0, 0.0), |(x, y), p| (x + p.0, y + p.1));
        let (mx, my) = (sx / n, sy / n);
        let (sxy, sxx) = pts
            .iter()
            .fold((0.0, 0.0), |(a, b), p| (a + (p.0 - mx) * (p.1 - my), b + (p.0 - mx) * (p.0 - mx)));
        sxy / sxx
    }
}

/// `β > f'(0)` and `s ↦ β s - f(s)` nonnegative and nondecreasing on `[0, U]`.
fn check_beta(nl: &Nonlinearity, beta: f64, upper: f64) -> Result<()> {
    if !(beta > nl.consts.f_prime0) {
        return Err(Error::invalid("beta", format!("must exceed f'(0) = {}", nl.consts.f_prime0)));
    }
    let n = 1000;
    let mut prev = 0.0;
    for i in 1..=n {
        let s = upper * i as f64 / n as f64;
        let v = nl.f_beta(beta, s);
        if v < 0.0 || v < prev - 1e-12 * v.abs().max(1.0) {
            return Err(Error::invalid(
                "beta",
                format!("β s - f(s) is negative or decreasing near s = {s}"),
            ));
        }
        prev = v;
    }
    Ok(())
}

/// Midpoint of the region in `(λ, top)` where `χ_L < 0`.
fn choose_m(chi: &DispersionFunction, c: f64, lambda: f64, top: f64, points: usize) -> Result<f64> {
    let points = points.max(2);
    let mut neg = Vec::new();
    for i in 1..=points {
        let z = lambda + (top - lambda) * i as f64 / (points + 1) as f64;
        let v = chi.eval(z, c)?;
        if v < 0.0 {
            neg.push((z, v));
        }
    }
    let (Some(first), Some(last)) = (neg.first(), neg.last()) else {
        return Err(Error::NoAdmissibleM { c, lambda, upper: top });
    };
    let mid = 0.5 * (first.0 + last.0);
    if chi.eval(mid, c)? < 0.0 {
        Ok(mid)
    } else {
        Ok(neg.iter().fold(neg[0], |a, &b| if b.1 < a.1 { b } else { a }).0)
    }
}
