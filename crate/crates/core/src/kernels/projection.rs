//! The projected kernel `k₂(r) = ∫_0^∞ K(s, r - c s) ds`.
//!
//! Dirac factors collapse symbolically: a discrete delay with no dispersal
//! projects to point masses in `r`, never to a narrow bump.

use super::{marine_density, Atom, Kernel, SpatialLaw, TemporalLaw};
use crate::error::{Error, Result};
use crate::quad;

const INTEGRAL_TOL: f64 = 1e-13;

#[derive(Debug, Clone)]
enum DensityKind {
    Empty,
    /// `Σ w_i J(r - c τ_i)`.
    ShiftedSpatial,
    /// `p((r - at) / c) / |c|`.
    ScaledTemporal { at: f64 },
    /// `J(r)` (zero speed, continuous delay).
    SpatialOnly,
    /// Numerical integral over `s`.
    Integral,
}

/// `k₂` at a fixed speed: point masses plus a density.
#[derive(Debug, Clone)]
pub struct Projection {
    kernel: Kernel,
    c: f64,
    atoms: Vec<Atom>,
    kind: DensityKind,
    support: (f64, f64),
}

impl Projection {
    pub(super) fn new(kernel: Kernel, c: f64) -> Self {
        let b = kernel.support();
        let support = ((c * b.s_max).min(0.0) + b.w_min, (c * b.s_max).max(0.0) + b.w_max);
        let mut atoms = Vec::new();
        let kind = match kernel.separable_laws() {
            Some((t, s)) => match (t.is_atomic(), s) {
                (true, SpatialLaw::Dirac { at }) => {
                    atoms = t
                        .atoms()
                        .iter()
                        .map(|a| Atom {
                            at: c * a.at + at,
                            weight: a.weight,
                        })
                        .collect();
                    DensityKind::Empty
                }
                (true, _) => DensityKind::ShiftedSpatial,
                (false, SpatialLaw::Dirac { at }) if c == 0.0 => {
                    atoms.push(Atom { at: *at, weight: 1.0 });
                    DensityKind::Empty
                }
                (false, SpatialLaw::Dirac { at }) => DensityKind::ScaledTemporal { at: *at },
                (false, _) if c == 0.0 => DensityKind::SpatialOnly,
                (false, _) => DensityKind::Integral,
            },
            None => DensityKind::Integral,
        };
        Projection {
            kernel,
            c,
            atoms,
            kind,
            support,
        }
    }

    pub fn speed(&self) -> f64 {
        self.c
    }

    /// Point masses of `k₂` (location `at` in `r`).
    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn atom_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.weight).sum()
    }

    pub fn has_density(&self) -> bool {
        !matches!(self.kind, DensityKind::Empty)
    }

    /// Interval in `r` outside which the density part is negligible.
    pub fn support(&self) -> (f64, f64) {
        self.support
    }

    /// Locations in `r` where the density has kinks, jumps or sharp peaks.
    pub fn breakpoints(&self) -> Vec<f64> {
        let c = self.c;
        match (&self.kind, self.kernel.separable_laws()) {
            (DensityKind::ShiftedSpatial, Some((t, s))) => t
                .atoms()
                .iter()
                .flat_map(|a| s.breakpoints().into_iter().map(move |b| b + c * a.at))
                .collect(),
            (DensityKind::ScaledTemporal { at }, Some((t, _))) => {
                t.breakpoints().into_iter().map(|b| at + c * b).collect()
            }
            (DensityKind::SpatialOnly, Some((_, s))) => s.breakpoints(),
            (DensityKind::Integral, Some((_, s))) => s.breakpoints(),
            (DensityKind::Integral, None) => vec![0.0],
            _ => Vec::new(),
        }
    }

    /// Density part of `k₂(r)`.
    pub fn density(&self, r: f64) -> Result<f64> {
        let c = self.c;
        match (&self.kind, self.kernel.separable_laws()) {
            (DensityKind::Empty, _) => Ok(0.0),
            (DensityKind::ShiftedSpatial, Some((t, s))) => {
                Ok(t.atoms().iter().map(|a| a.weight * s.density(r - c * a.at)).sum())
            }
            (DensityKind::ScaledTemporal { at }, Some((t, _))) => {
                let s = (r - at) / c;
                Ok(if s < 0.0 { 0.0 } else { t.density(s) / c.abs() })
            }
            (DensityKind::SpatialOnly, Some((_, s))) => Ok(s.density(r)),
            (DensityKind::Integral, Some((t, s))) => separable_integral(t, s, c, r, self.kernel.support().s_max),
            (DensityKind::Integral, None) => self.generic_integral(r),
            _ => unreachable!("projection kind does not match kernel family"),
        }
    }

    fn generic_integral(&self, r: f64) -> Result<f64> {
        let c = self.c;
        let s_max = self.kernel.support().s_max;
        if let Some(p) = self.kernel.family_marine() {
            let mut breaks = vec![];
            let drift = c - p.advection;
            let peak = r / drift;
            if peak > 0.0 && peak.is_finite() {
                let width = (2.0 * p.diffusivity * peak).sqrt() / drift.abs();
                for k in [0.0, 1.0, 3.0, 6.0, 12.0] {
                    breaks.push(peak - k * width);
                    breaks.push(peak + k * width);
                }
            }
            // Small-s region where the Gaussian is narrowest.
            breaks.extend([1e-6, 1e-4, 1e-2, 1.0, 10.0, 100.0]);
            breaks.extend(quad::uniform_breaks(0.0, s_max, 32));
            let f = |s: f64| marine_density(p, s, r - c * s);
            return quad::integrate_with_breaks(&f, 0.0, s_max, &breaks, INTEGRAL_TOL);
        }
        let density = self.kernel.custom_density().expect("generic kernels are marine or custom");
        let breaks = quad::uniform_breaks(0.0, s_max, 64);
        quad::integrate_with_breaks(&|s| density(s, r - c * s), 0.0, s_max, &breaks, INTEGRAL_TOL)
    }

    /// Total mass of `k₂`: atoms plus the integrated density.
    pub fn mass(&self, tol: f64) -> Result<f64> {
        let mut total = self.atom_mass();
        if self.has_density() {
            let (lo, hi) = self.support;
            let mut breaks = quad::uniform_breaks(lo, hi, 128);
            breaks.extend(self.breakpoints());
            let err = std::cell::Cell::new(None);
            let f = |r: f64| match self.density(r) {
                Ok(v) => v,
                Err(e) => {
                    err.set(Some(e));
                    0.0
                }
            };
            total += quad::integrate_with_breaks(&f, lo, hi, &breaks, tol)?;
            if let Some(e) = err.take() {
                return Err(e);
            }
        }
        Ok(total)
    }
}

fn separable_integral(t: &TemporalLaw, s: &SpatialLaw, c: f64, r: f64, s_max: f64) -> Result<f64> {
    // Restrict s to where the spatial factor is not negligible.
    let (w_lo, w_hi) = s.support(1e-16);
    let (a, b) = {
        let x = (r - w_hi) / c;
        let y = (r - w_lo) / c;
        (x.min(y).max(0.0), x.max(y).min(s_max))
    };
    if a >= b {
        return Ok(0.0);
    }
    let mut breaks = quad::uniform_breaks(a, b, 8);
    breaks.extend(t.breakpoints());
    breaks.extend(s.breakpoints().into_iter().map(|w| (r - w) / c));
    let f = |u: f64| t.density(u) * s.density(r - c * u);
    quad::integrate_with_breaks(&f, a, b, &breaks, INTEGRAL_TOL).map_err(|e| match e {
        Error::QuadratureFailure { a, b, estimate, tolerance } => Error::QuadratureFailure {
            a,
            b,
            estimate,
            tolerance,
        },
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn discrete_delay_shifts_spatial_density() {
        let j = SpatialLaw::Gaussian { mean: 0.0, variance: 0.5 };
        let k = Kernel::separable(TemporalLaw::discrete(2.0), j.clone()).unwrap();
        let c = 1.5;
        for r in [-1.0, 0.0, 2.5, 3.0, 4.2] {
            let got = k.project_k2(c, r).unwrap();
            assert!((got - j.density(r - c * 2.0)).abs() < 1e-15);
        }
    }

    #[test]
    fn fully_local_kernel_projects_to_point_mass() {
        let p = Kernel::local().projection(2.0);
        assert_eq!(p.atoms(), &[Atom { at: 0.0, weight: 1.0 }]);
        assert!(!p.has_density());
        assert_eq!(p.mass(1e-12).unwrap(), 1.0);
    }

    #[test]
    fn exponential_delay_without_dispersal() {
        let k = Kernel::separable(TemporalLaw::Exponential { rate: 2.0 }, SpatialLaw::Dirac { at: 0.0 }).unwrap();
        let p = k.projection(4.0);
        assert!((p.density(1.0).unwrap() - 0.5 * (-0.5f64).exp()).abs() < 1e-15);
        assert_eq!(p.density(-0.1).unwrap(), 0.0);
        let p0 = k.projection(0.0);
        assert_eq!(p0.atoms().len(), 1);
    }

    #[test]
    fn benchmark_projection_matches_emg() {
        // c S + W with S ~ Exp(1), W ~ N(0,1): exponentially modified Gaussian.
        let k = Kernel::separable(TemporalLaw::Exponential { rate: 1.0 }, SpatialLaw::Gaussian { mean: 0.0, variance: 1.0 }).unwrap();
        let c = 2.0;
        let p = k.projection(c);
        // Riemann sum oracle in s.
        for r in [-2.0, 0.0, 1.0, 5.0] {
            let n = 400_000;
            let ds = 40.0 / n as f64;
            let oracle: f64 = (0..n)
                .map(|i| {
                    let s = (i as f64 + 0.5) * ds;
                    (-s).exp() * (-(r - c * s) * (r - c * s) / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt()
                })
                .sum::<f64>()
                * ds;
            let got = p.density(r).unwrap();
            assert!((got - oracle).abs() < 1e-8, "r={r}: {got} vs {oracle}");
        }
    }
}
