//! Application systems reduced to the scalar machinery: an epidemic model
//! with an infectious agent, a mature/immature population model, and the
//! marine population preset.

use serde::Serialize;

use crate::dispersion::{DispersionFunction, SpeedOptions, SpeedResult};
use crate::error::{Error, Result};
use crate::green::GreenKernel;
use crate::kernels::{Kernel, SpatialLaw, TemporalLaw};
use crate::profile::{
    exp_filter_left, exp_filter_right, k1_convolve, Birth, Grid, K2Convolution, Nonlinearity, ProblemOptions, Profile,
    Removal, WaveProblem,
};

/// Minimal speeds of the linearization at zero and of its majorant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpeedPair {
    /// Minimal speed of `χ₀`.
    pub c_lower: SpeedResult,
    /// Minimal speed of `χ_L`.
    pub c_critical: SpeedResult,
}

impl SpeedPair {
    pub fn compute(chi0: &DispersionFunction, chi_l: &DispersionFunction, opts: &SpeedOptions) -> Result<Self> {
        Ok(SpeedPair {
            c_lower: chi0.minimal_speed_auto(opts)?,
            c_critical: chi_l.minimal_speed_auto(opts)?,
        })
    }

    /// `c_⋆ >= c_*` up to the bisection tolerance.
    pub fn ordered(&self, tol: f64) -> bool {
        self.c_critical.c_min >= self.c_lower.c_min - tol
    }
}

/// Agent density `φ` driven by infected hosts `ψ`, with agent decay `α`,
/// latency law `P` and spatial contact law `J`.
#[derive(Debug, Clone)]
pub struct EpidemicModel {
    alpha: f64,
    latency: TemporalLaw,
    contact: SpatialLaw,
    nl: Nonlinearity,
}

/// Second component recovered from a profile, with its sanity checks.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Reconstruction {
    pub psi: Vec<f64>,
    pub sup: f64,
    /// Upper bound the component must respect, where one is known.
    pub bound: Option<f64>,
    /// Largest value over the leftmost tenth of the grid.
    pub left_tail: f64,
    pub nonnegative: bool,
}

impl Reconstruction {
    fn new(psi: Vec<f64>, bound: Option<f64>) -> Self {
        let sup = psi.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let left_tail = psi[..(psi.len() / 10).max(1)].iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let nonnegative = psi.iter().all(|&v| v >= -1e-12);
        Reconstruction {
            psi,
            sup,
            bound,
            left_tail,
            nonnegative,
        }
    }

    pub fn within_bound(&self, tol: f64) -> bool {
        self.bound.is_none_or(|b| self.sup <= b + tol)
    }
}

impl EpidemicModel {
    pub fn new(alpha: f64, latency: TemporalLaw, contact: SpatialLaw, nl: Nonlinearity) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::invalid("alpha", format!("must be positive, got {alpha}")));
        }
        latency.validate()?;
        contact.validate()?;
        Ok(EpidemicModel {
            alpha,
            latency,
            contact,
            nl,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn nonlinearity(&self) -> &Nonlinearity {
        &self.nl
    }

    /// Space-time kernel of the scalar equation for `φ`: the latency law
    /// smoothed by the agent lifetime, times the contact law.
    pub fn reduced_kernel(&self) -> Result<Kernel> {
        Kernel::separable(
            TemporalLaw::ExpSmoothed {
                rate: self.alpha,
                base: Box::new(self.latency.clone()),
            },
            self.contact.clone(),
        )
    }

    /// `(f, g / α)`.
    pub fn reduced_nonlinearity(&self) -> Nonlinearity {
        self.nl.scale_birth(1.0 / self.alpha)
    }

    pub fn chi0(&self) -> Result<DispersionFunction> {
        let c = self.nl.consts;
        DispersionFunction::new(c.f_prime0, c.g_prime0 / self.alpha, self.reduced_kernel()?)
    }

    pub fn chi_l(&self) -> Result<DispersionFunction> {
        let c = self.nl.consts;
        DispersionFunction::new(c.f_inf_slope, c.l / self.alpha, self.reduced_kernel()?)
    }

    /// `z² - c z - f'(0) + g'(0) / (c z + α) · E[e^{-z c S}] · ∫ J(w) e^{-z w} dw`,
    /// written out without the reduced kernel.
    pub fn chi0_direct(&self, z: f64, c: f64) -> Result<f64> {
        let rate = c * z + self.alpha;
        let (Some(t), Some(s)) = (self.latency.transform(z * c), self.contact.transform(z)) else {
            return Err(Error::DomainExceeded { z, c, limit: f64::NAN });
        };
        if rate <= 0.0 {
            return Err(Error::DomainExceeded { z, c, limit: -self.alpha / c });
        }
        let k = self.nl.consts;
        Ok(z * z - c * z - k.f_prime0 + k.g_prime0 / rate * t * s)
    }

    pub fn speeds(&self, opts: &SpeedOptions) -> Result<SpeedPair> {
        SpeedPair::compute(&self.chi0()?, &self.chi_l()?, opts)
    }

    pub fn wave_problem(&self, c: f64, opts: &ProblemOptions) -> Result<WaveProblem> {
        WaveProblem::new(&self.reduced_nonlinearity(), &self.reduced_kernel()?, c, opts)
    }

    /// `K₂(w) = ∫_0^w e^{-α (w - r)} P(dr)`, continuous part only.
    pub fn lifetime_kernel(&self, w: f64) -> f64 {
        if w < 0.0 {
            return 0.0;
        }
        let smoothed = TemporalLaw::ExpSmoothed {
            rate: self.alpha,
            base: Box::new(self.latency.clone()),
        };
        smoothed.density(w) / self.alpha
    }

    /// `ψ(t) = ∫_0^∞ g(φ(t - c w)) K₂(w) dw`, or `g(φ) / α` when `c == 0`.
    ///
    /// `g∘φ` is treated as piecewise linear between nodes; for discrete and
    /// exponential latency the `w`-integral is done exactly through
    /// exponential recursions.
    pub fn reconstruct(&self, prof: &Profile, c: f64) -> Reconstruction {
        let gphi: Vec<f64> = prof.values.iter().map(|&v| self.nl.g(v)).collect();
        let bound = Some(self.nl.consts.g_sup / self.alpha);
        if c == 0.0 {
            let psi = gphi.iter().map(|v| v / self.alpha).collect();
            return Reconstruction::new(psi, bound);
        }
        let grid = prof.grid;
        let speed = c.abs();
        // ∫_0^∞ e^{-a v} G(t ∓ v) dv, looking back along the direction of c.
        let filt = |a: f64| {
            if c > 0.0 {
                exp_filter_left(&gphi, a, grid.h)
            } else {
                exp_filter_right(&gphi, a, grid.h)
            }
        };
        let psi = match &self.latency {
            TemporalLaw::Atoms { atoms } => {
                let base = filt(self.alpha / speed);
                let mut psi = vec![0.0; grid.n];
                for a in atoms {
                    for (i, p) in psi.iter_mut().enumerate() {
                        *p += a.weight / speed * grid.interpolate(&base, grid.node(i) - c * a.at);
                    }
                }
                psi
            }
            TemporalLaw::Exponential { rate } if (rate - self.alpha).abs() > 1e-9 * self.alpha => {
                let fa = filt(self.alpha / speed);
                let fe = filt(rate / speed);
                let k = rate / (rate - self.alpha) / speed;
                fa.iter().zip(&fe).map(|(a, e)| k * (a - e)).collect()
            }
            _ => self.reconstruct_quadrature(&gphi, &grid, c),
        };
        Reconstruction::new(psi, bound)
    }

    /// Trapezoid rule in `w` with step `h / |c|`, so that every shift lands on
    /// a node.
    fn reconstruct_quadrature(&self, gphi: &[f64], grid: &Grid, c: f64) -> Vec<f64> {
        let dw = grid.h / c.abs();
        let smoothed = TemporalLaw::ExpSmoothed {
            rate: self.alpha,
            base: Box::new(self.latency.clone()),
        };
        let end = smoothed.tail_end(0.0, 1e-14);
        let k = ((end / dw).ceil() as usize).min(10 * grid.n);
        let weights: Vec<f64> = (0..=k)
            .map(|j| {
                let w = self.lifetime_kernel(j as f64 * dw) * dw;
                if j == 0 || j == k {
                    0.5 * w
                } else {
                    w
                }
            })
            .collect();
        let n = grid.n as i64;
        let last = gphi[grid.n - 1];
        let sign = if c > 0.0 { 1 } else { -1 };
        (0..n)
            .map(|i| {
                weights
                    .iter()
                    .enumerate()
                    .map(|(j, w)| {
                        let idx = i - sign * j as i64;
                        let g = if idx < 0 {
                            0.0
                        } else if idx >= n {
                            last
                        } else {
                            gphi[idx as usize]
                        };
                        w * g
                    })
                    .sum()
            })
            .collect()
    }
}

/// Mature density `φ` with immature stage of diffusivity `D` and death rate
/// `γ`.
#[derive(Debug, Clone)]
pub struct PopulationModel {
    diffusivity: f64,
    death: f64,
    kernel: Kernel,
    nl: Nonlinearity,
}

impl PopulationModel {
    pub fn new(diffusivity: f64, death: f64, kernel: Kernel, nl: Nonlinearity) -> Result<Self> {
        if !(diffusivity > 0.0 && diffusivity.is_finite()) {
            return Err(Error::invalid("diffusivity", format!("must be positive, got {diffusivity}")));
        }
        if !(death > 0.0 && death.is_finite()) {
            return Err(Error::invalid("death", format!("must be positive, got {death}")));
        }
        Ok(PopulationModel {
            diffusivity,
            death,
            kernel,
            nl,
        })
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn nonlinearity(&self) -> &Nonlinearity {
        &self.nl
    }

    pub fn chi0(&self) -> Result<DispersionFunction> {
        let c = self.nl.consts;
        DispersionFunction::new(c.f_prime0, c.g_prime0, self.kernel.clone())
    }

    pub fn chi_l(&self) -> Result<DispersionFunction> {
        let c = self.nl.consts;
        DispersionFunction::new(c.f_inf_slope, c.l, self.kernel.clone())
    }

    pub fn speeds(&self, opts: &SpeedOptions) -> Result<SpeedPair> {
        SpeedPair::compute(&self.chi0()?, &self.chi_l()?, opts)
    }

    pub fn wave_problem(&self, c: f64, opts: &ProblemOptions) -> Result<WaveProblem> {
        WaveProblem::new(&self.nl, &self.kernel, c, opts)
    }

    /// Green kernel of `D y'' - c y' - γ y`.
    pub fn immature_kernel(&self, c: f64) -> GreenKernel {
        GreenKernel::second_order(self.diffusivity, c, self.death)
    }

    /// `(ℋφ)(t) = g(φ(t)) - ∫ g(φ(t - r)) k₂(r) dr` on the grid of `values`.
    pub fn h_operator(&self, grid: &Grid, values: &[f64], c: f64) -> Result<Vec<f64>> {
        let conv = K2Convolution::new(&self.kernel.projection(c), grid.h, grid.n)?;
        let gphi: Vec<f64> = values.iter().map(|&v| self.nl.g(v)).collect();
        let smoothed = conv.apply(&gphi);
        Ok(gphi.iter().zip(&smoothed).map(|(a, b)| a - b).collect())
    }

    /// Immature density `ψ = k₁^{D,γ} * ℋφ`.
    pub fn reconstruct(&self, prof: &Profile, c: f64) -> Result<Reconstruction> {
        let h = self.h_operator(&prof.grid, &prof.values, c)?;
        let psi = k1_convolve(&self.immature_kernel(c), &h, prof.grid.h);
        Ok(Reconstruction::new(psi, None))
    }
}

/// Marine population: juveniles drift, diffuse and die before settling.
#[derive(Debug, Clone)]
pub struct MarinePreset {
    pub kernel: Kernel,
    pub nonlinearity: Nonlinearity,
    pub dispersion: DispersionFunction,
}

/// Kernel from the juvenile parameters, adult death `f(s) = μ_a s`, and
/// birth `g(s) = p s / (1 + s)`.
pub fn marine_preset(advection: f64, diffusivity: f64, death: f64, adult_death: f64, p: f64) -> Result<MarinePreset> {
    if !(adult_death > 0.0) {
        return Err(Error::invalid("adult_death", format!("must be positive, got {adult_death}")));
    }
    if !(p > adult_death) {
        return Err(Error::invalid("p", format!("must exceed the adult death rate {adult_death}, got {p}")));
    }
    let kernel = Kernel::marine(advection, diffusivity, death)?;
    let nonlinearity = Nonlinearity::new(Removal::Linear { rate: adult_death }, Birth::BevertonHolt { p, b: 1.0 });
    let dispersion = DispersionFunction::new(adult_death, p, kernel.clone())?;
    Ok(MarinePreset {
        kernel,
        nonlinearity,
        dispersion,
    })
}
