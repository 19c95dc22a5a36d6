//! Space-time averaging kernels `K(s, w)`.
//!
//! A kernel is a unit-mass density over delays `s >= 0` and displacements
//! `w`. Its bilateral transform
//!
//! ```text
//! M(z, c) = ∫_0^∞ ∫_ℝ K(s, w) exp(-z (c s + w)) dw ds
//! ```
//!
//! converges on `[0, γ#(c))`. Built-in families carry a closed-form transform;
//! every family can also be integrated numerically, which is what the
//! closed forms are checked against.

mod laws;
mod projection;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad;

pub use laws::{Atom, SpatialLaw, TemporalLaw};
pub use projection::Projection;

/// Mass left outside a family's default support box.
pub const TAIL_TOL: f64 = 1e-10;

/// Evaluations stay below this fraction of `δ(c)`.
pub const DOMAIN_MARGIN: f64 = 0.99;

const GAUSS_WINDOW: f64 = 12.0;

/// Truncation bounds: `s ∈ [0, s_max]`, `w ∈ [w_min, w_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupportBox {
    pub s_max: f64,
    pub w_min: f64,
    pub w_max: f64,
}

/// Usable transform interval `[z_lo, z_hi)` at speed `c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransformDomain {
    pub c: f64,
    pub z_lo: f64,
    pub z_hi: f64,
}

impl TransformDomain {
    /// Largest `z` at which evaluation is allowed.
    pub fn usable_hi(&self) -> f64 {
        DOMAIN_MARGIN * self.z_hi
    }

    pub fn contains(&self, z: f64) -> bool {
        z >= self.z_lo && z < self.usable_hi()
    }
}

/// Juvenile parameters of the marine kernel: advection `v_j`, diffusivity
/// `d_j`, death rate `μ_j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarineParams {
    pub advection: f64,
    pub diffusivity: f64,
    pub death: f64,
}

type DensityFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
type AbscissaFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Family {
    Marine(MarineParams),
    Separable {
        temporal: TemporalLaw,
        spatial: SpatialLaw,
    },
    Custom {
        density: DensityFn,
        abscissa: AbscissaFn,
    },
}

/// An admissible space-time kernel. Cheap to clone and immutable.
#[derive(Clone)]
pub struct Kernel {
    family: Arc<Family>,
    support: SupportBox,
}

impl fmt::Debug for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match &*self.family {
            Family::Marine(p) => format!("Marine({p:?})"),
            Family::Separable { temporal, spatial } => format!("Separable({temporal:?}, {spatial:?})"),
            Family::Custom { .. } => "Custom".to_string(),
        };
        f.debug_struct("Kernel").field("family", &name).field("support", &self.support).finish()
    }
}

impl Kernel {
    /// The asymmetric advective Gaussian kernel
    /// `μ exp(-(w + v s)² / (4 d s) - μ s) / (2 √(π d s))`.
    pub fn marine(advection: f64, diffusivity: f64, death: f64) -> Result<Self> {
        for (name, v) in [("v_j", advection), ("d_j", diffusivity), ("mu_j", death)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(name, format!("must be positive, got {v}")));
            }
        }
        let p = MarineParams {
            advection,
            diffusivity,
            death,
        };
        let s_max = (1.0 / TAIL_TOL).ln() / death;
        let spread = 6.5 * (2.0 * diffusivity * s_max).sqrt();
        let drift = -advection * s_max;
        let support = SupportBox {
            s_max,
            w_min: drift.min(0.0) - spread,
            w_max: drift.max(0.0) + spread,
        };
        Ok(Kernel {
            family: Arc::new(Family::Marine(p)),
            support,
        })
    }

    /// Product kernel `P(ds) J(w) dw`.
    pub fn separable(temporal: TemporalLaw, spatial: SpatialLaw) -> Result<Self> {
        temporal.validate()?;
        spatial.validate()?;
        let (w_min, w_max) = spatial.support(TAIL_TOL);
        let support = SupportBox {
            s_max: temporal.tail_end(0.0, TAIL_TOL),
            w_min,
            w_max,
        };
        Ok(Kernel {
            family: Arc::new(Family::Separable { temporal, spatial }),
            support,
        })
    }

    /// No delay and no dispersal: `K = δ(s) δ(w)`.
    pub fn local() -> Self {
        Kernel::separable(TemporalLaw::discrete(0.0), SpatialLaw::Dirac { at: 0.0 })
            .expect("local kernel is valid")
    }

    /// User-supplied density. The caller provides the support box and the
    /// abscissa `γ#(c)`; no closed-form transform is available.
    pub fn custom<D, A>(density: D, abscissa: A, support: SupportBox) -> Result<Self>
    where
        D: Fn(f64, f64) -> f64 + Send + Sync + 'static,
        A: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if !(support.s_max > 0.0 && support.w_min < support.w_max) {
            return Err(Error::invalid("support", "box must have positive extent"));
        }
        Ok(Kernel {
            family: Arc::new(Family::Custom {
                density: Arc::new(density),
                abscissa: Arc::new(abscissa),
            }),
            support,
        })
    }

    /// Same kernel with a different truncation box.
    pub fn with_support(&self, support: SupportBox) -> Self {
        Kernel {
            family: Arc::clone(&self.family),
            support,
        }
    }

    pub fn support(&self) -> SupportBox {
        self.support
    }

    pub fn marine_params(&self) -> Option<MarineParams> {
        match &*self.family {
            Family::Marine(p) => Some(*p),
            _ => None,
        }
    }

    pub fn separable_laws(&self) -> Option<(&TemporalLaw, &SpatialLaw)> {
        match &*self.family {
            Family::Separable { temporal, spatial } => Some((temporal, spatial)),
            _ => None,
        }
    }

    /// `K(s, w)`; `None` when the kernel has a Dirac component.
    pub fn density(&self, s: f64, w: f64) -> Option<f64> {
        match &*self.family {
            Family::Marine(p) => Some(marine_density(p, s, w)),
            Family::Separable { temporal, spatial } => {
                if temporal.is_atomic() || spatial.is_atomic() {
                    None
                } else {
                    Some(temporal.density(s) * spatial.density(w))
                }
            }
            Family::Custom { density, .. } => Some(if s < 0.0 { 0.0 } else { density(s, w) }),
        }
    }

    /// `γ#(c)`: supremum of `z` where the transform converges.
    pub fn abscissa(&self, c: f64) -> f64 {
        match &*self.family {
            Family::Marine(p) => {
                let b = c - p.advection;
                (b + (b * b + 4.0 * p.diffusivity * p.death).sqrt()) / (2.0 * p.diffusivity)
            }
            Family::Separable { temporal, spatial } => {
                let t = if c < 0.0 {
                    temporal.convergence_floor() / -c
                } else {
                    f64::INFINITY
                };
                t.min(spatial.abscissa())
            }
            Family::Custom { abscissa, .. } => abscissa(c),
        }
    }

    /// `[0, δ(c))`. For the built-in families the abscissa is also the first
    /// pole of the closed-form transform.
    pub fn domain(&self, c: f64) -> TransformDomain {
        TransformDomain {
            c,
            z_lo: 0.0,
            z_hi: self.abscissa(c),
        }
    }

    fn check_domain(&self, z: f64, c: f64) -> Result<()> {
        let d = self.domain(c);
        if d.contains(z) {
            Ok(())
        } else {
            Err(Error::DomainExceeded {
                z,
                c,
                limit: d.usable_hi(),
            })
        }
    }

    pub fn has_closed_form(&self) -> bool {
        !matches!(&*self.family, Family::Custom { .. })
    }

    /// Closed-form `M(z, c)` where one exists and converges.
    pub fn closed_form_transform(&self, z: f64, c: f64) -> Option<f64> {
        match &*self.family {
            Family::Marine(p) => {
                let den = p.death + (c - p.advection) * z - p.diffusivity * z * z;
                (den > 0.0 && z < self.abscissa(c)).then(|| p.death / den)
            }
            Family::Separable { temporal, spatial } => Some(temporal.transform(z * c)? * spatial.transform(z)?),
            Family::Custom { .. } => None,
        }
    }

    /// `M(z, c)`: closed form when available, quadrature otherwise.
    pub fn transform(&self, z: f64, c: f64) -> Result<f64> {
        self.check_domain(z, c)?;
        match self.closed_form_transform(z, c) {
            Some(v) => Ok(v),
            None => self.transform_quadrature(z, c, 1e-10),
        }
    }

    /// `M(z, c)` by numerical integration, whatever the family.
    pub fn transform_quadrature(&self, z: f64, c: f64, tol: f64) -> Result<f64> {
        self.check_domain(z, c)?;
        match &*self.family {
            Family::Marine(p) => marine_transform_quadrature(p, z, c, tol),
            Family::Separable { temporal, spatial } => {
                let x = z * c;
                let end = temporal.tail_end(x, tol * 1e-2);
                let t = temporal.tilted_mass_quadrature(x, end, tol * 1e-2)?;
                let s = spatial.tilted_mass_quadrature(z, tol * 1e-2)?;
                Ok(t * s)
            }
            Family::Custom { density, .. } => custom_transform_quadrature(density, self.support, z, c, tol),
        }
    }

    /// Numerical mass over the support box.
    pub fn mass(&self, quad_tol: f64) -> Result<f64> {
        let b = self.support;
        match &*self.family {
            Family::Marine(p) => {
                let inner = |s: f64| -> f64 {
                    if s <= 0.0 {
                        return 0.0;
                    }
                    let sd = (2.0 * p.diffusivity * s).sqrt();
                    let centre = -p.advection * s;
                    let lo = (centre - GAUSS_WINDOW * sd).max(b.w_min);
                    let hi = (centre + GAUSS_WINDOW * sd).min(b.w_max);
                    if lo >= hi {
                        return 0.0;
                    }
                    quad::integrate_with_breaks(&|w| marine_density(p, s, w), lo, hi, &[centre], quad_tol * 1e-3)
                        .unwrap_or(f64::NAN)
                };
                let breaks = quad::uniform_breaks(0.0, b.s_max, 64);
                nan_guard(quad::integrate_with_breaks(&inner, 0.0, b.s_max, &breaks, quad_tol), 0.0, b.s_max)
            }
            Family::Separable { temporal, spatial } => {
                let t = temporal.tilted_mass_quadrature(0.0, b.s_max, quad_tol * 0.5)?;
                let s = match spatial {
                    SpatialLaw::Dirac { at } => {
                        if (b.w_min..=b.w_max).contains(at) {
                            1.0
                        } else {
                            0.0
                        }
                    }
                    _ => {
                        let mut breaks = quad::uniform_breaks(b.w_min, b.w_max, 16);
                        breaks.extend(spatial.breakpoints());
                        quad::integrate_with_breaks(&|w| spatial.density(w), b.w_min, b.w_max, &breaks, quad_tol * 0.5)?
                    }
                };
                Ok(t * s)
            }
            Family::Custom { density, .. } => {
                let inner = |s: f64| -> f64 {
                    let breaks = quad::uniform_breaks(b.w_min, b.w_max, 16);
                    quad::integrate_with_breaks(&|w| density(s, w), b.w_min, b.w_max, &breaks, quad_tol * 1e-3)
                        .unwrap_or(f64::NAN)
                };
                let breaks = quad::uniform_breaks(0.0, b.s_max, 16);
                nan_guard(quad::integrate_with_breaks(&inner, 0.0, b.s_max, &breaks, quad_tol), 0.0, b.s_max)
            }
        }
    }

    /// The kernel seen along `r = c s + w`:
    /// `k₂(r) = ∫_0^∞ K(s, r - c s) ds`.
    pub fn projection(&self, c: f64) -> Projection {
        Projection::new(self.clone(), c)
    }

    /// Density part of `k₂(r)` at speed `c`.
    pub fn project_k2(&self, c: f64, r: f64) -> Result<f64> {
        self.projection(c).density(r)
    }

    pub(crate) fn family_marine(&self) -> Option<&MarineParams> {
        match &*self.family {
            Family::Marine(p) => Some(p),
            _ => None,
        }
    }

    pub(crate) fn custom_density(&self) -> Option<&DensityFn> {
        match &*self.family {
            Family::Custom { density, .. } => Some(density),
            _ => None,
        }
    }
}

fn nan_guard(v: Result<f64>, a: f64, b: f64) -> Result<f64> {
    match v {
        Ok(x) if x.is_finite() => Ok(x),
        Ok(_) => Err(Error::QuadratureFailure {
            a,
            b,
            estimate: f64::INFINITY,
            tolerance: 0.0,
        }),
        Err(e) => Err(e),
    }
}

pub(crate) fn marine_density(p: &MarineParams, s: f64, w: f64) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    let d = w + p.advection * s;
    let ds = p.diffusivity * s;
    p.death * (-d * d / (4.0 * ds) - p.death * s).exp() / (2.0 * (std::f64::consts::PI * ds).sqrt())
}

fn marine_transform_quadrature(p: &MarineParams, z: f64, c: f64, tol: f64) -> Result<f64> {
    // Outer decay rate of the tilted integrand in s.
    let rate = p.death + (c - p.advection) * z - p.diffusivity * z * z;
    let s_end = ((1.0 / tol).ln() + 5.0) / rate;
    let inner = |s: f64| -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        // Re-centre on the tilted Gaussian mean.
        let sd = (2.0 * p.diffusivity * s).sqrt();
        let centre = -p.advection * s - 2.0 * p.diffusivity * s * z;
        let f = |x: f64| {
            let w = centre + sd * x;
            marine_density(p, s, w) * (-z * (c * s + w)).exp() * sd
        };
        quad::integrate_with_breaks(&f, -GAUSS_WINDOW, GAUSS_WINDOW, &[0.0], tol * 1e-3).unwrap_or(f64::NAN)
    };
    let mut breaks = quad::uniform_breaks(0.0, s_end, 48);
    breaks.extend([1e-3, 1e-2, 1e-1, 1.0].iter().map(|f| f / rate));
    nan_guard(quad::integrate_with_breaks(&inner, 0.0, s_end, &breaks, tol), 0.0, s_end)
}

fn custom_transform_quadrature(density: &DensityFn, support: SupportBox, z: f64, c: f64, tol: f64) -> Result<f64> {
    let eval = |b: SupportBox| -> Result<f64> {
        let inner = |s: f64| -> f64 {
            let breaks = quad::uniform_breaks(b.w_min, b.w_max, 16);
            quad::integrate_with_breaks(
                &|w| density(s, w) * (-z * (c * s + w)).exp(),
                b.w_min,
                b.w_max,
                &breaks,
                tol * 1e-3,
            )
            .unwrap_or(f64::NAN)
        };
        let breaks = quad::uniform_breaks(0.0, b.s_max, 16);
        nan_guard(quad::integrate_with_breaks(&inner, 0.0, b.s_max, &breaks, tol), 0.0, b.s_max)
    };
    // The exponential tilt moves mass; grow the box until the value settles.
    let mut b = support;
    let mut prev = eval(b)?;
    for _ in 0..8 {
        let half = 0.5 * (b.w_max - b.w_min);
        b = SupportBox {
            s_max: 2.0 * b.s_max,
            w_min: b.w_min - half,
            w_max: b.w_max + half,
        };
        let next = eval(b)?;
        if (next - prev).abs() <= tol * next.abs().max(1.0) {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::QuadratureFailure {
        a: 0.0,
        b: b.s_max,
        estimate: f64::INFINITY,
        tolerance: tol,
    })
}
