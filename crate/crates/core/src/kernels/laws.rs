//! Temporal delay laws and spatial dispersal laws for separable kernels.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad;

/// A point mass of a delay law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub at: f64,
    pub weight: f64,
}

/// Probability law of the delay `s >= 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum TemporalLaw {
    /// Finite mixture of discrete delays.
    Atoms { atoms: Vec<Atom> },
    /// Density `rate * exp(-rate * s)`.
    Exponential { rate: f64 },
    /// Gamma density with the given shape and rate.
    Gamma { shape: f64, rate: f64 },
    /// The base law convolved with an exponential of the given rate.
    ExpSmoothed { rate: f64, base: Box<TemporalLaw> },
}

impl TemporalLaw {
    pub fn discrete(tau: f64) -> Self {
        TemporalLaw::Atoms {
            atoms: vec![Atom { at: tau, weight: 1.0 }],
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            TemporalLaw::Atoms { atoms } => {
                if atoms.is_empty() {
                    return Err(Error::invalid("atoms", "at least one atom is required"));
                }
                if atoms.iter().any(|a| !(a.at >= 0.0) || !a.at.is_finite()) {
                    return Err(Error::invalid("atoms", "delays must be finite and nonnegative"));
                }
                if atoms.iter().any(|a| !(a.weight >= 0.0)) {
                    return Err(Error::invalid("atoms", "weights must be nonnegative"));
                }
                let total: f64 = atoms.iter().map(|a| a.weight).sum();
                if (total - 1.0).abs() > 1e-12 {
                    return Err(Error::invalid("atoms", format!("weights sum to {total}, not 1")));
                }
                Ok(())
            }
            TemporalLaw::Exponential { rate } => positive("rate", *rate),
            TemporalLaw::Gamma { shape, rate } => {
                positive("shape", *shape)?;
                positive("rate", *rate)
            }
            TemporalLaw::ExpSmoothed { rate, base } => {
                positive("rate", *rate)?;
                base.validate()
            }
        }
    }

    pub fn is_atomic(&self) -> bool {
        matches!(self, TemporalLaw::Atoms { .. })
    }

    pub fn atoms(&self) -> &[Atom] {
        match self {
            TemporalLaw::Atoms { atoms } => atoms,
            _ => &[],
        }
    }

    /// Density of the continuous part; zero for atomic laws.
    pub fn density(&self, s: f64) -> f64 {
        if s < 0.0 {
            return 0.0;
        }
        match self {
            TemporalLaw::Atoms { .. } => 0.0,
            TemporalLaw::Exponential { rate } => rate * (-rate * s).exp(),
            TemporalLaw::Gamma { shape, rate } => gamma_density(*shape, *rate, s),
            TemporalLaw::ExpSmoothed { rate, base } => smoothed_density(*rate, base, s),
        }
    }

    /// `E[exp(-x S)]`, or `None` where it diverges.
    pub fn transform(&self, x: f64) -> Option<f64> {
        if x <= -self.convergence_floor() {
            return None;
        }
        let v = match self {
            TemporalLaw::Atoms { atoms } => atoms.iter().map(|a| a.weight * (-x * a.at).exp()).sum(),
            TemporalLaw::Exponential { rate } => rate / (rate + x),
            TemporalLaw::Gamma { shape, rate } => (rate / (rate + x)).powf(*shape),
            TemporalLaw::ExpSmoothed { rate, base } => rate / (rate + x) * base.transform(x)?,
        };
        Some(v)
    }

    /// The transform converges exactly for `x > -floor`.
    pub fn convergence_floor(&self) -> f64 {
        match self {
            TemporalLaw::Atoms { .. } => f64::INFINITY,
            TemporalLaw::Exponential { rate } | TemporalLaw::Gamma { rate, .. } => *rate,
            TemporalLaw::ExpSmoothed { rate, base } => rate.min(base.convergence_floor()),
        }
    }

    /// A point beyond which the tilted mass `∫ exp(-x s) P(ds)` is below `tol`.
    pub fn tail_end(&self, x: f64, tol: f64) -> f64 {
        let log_inv = (1.0 / tol).ln();
        match self {
            TemporalLaw::Atoms { atoms } => atoms.iter().map(|a| a.at).fold(0.0, f64::max),
            TemporalLaw::Exponential { rate } => log_inv / (rate + x),
            // Chernoff bound with half the available exponential moment.
            TemporalLaw::Gamma { shape, rate } => {
                2.0 * (shape * std::f64::consts::LN_2 + log_inv) / (rate + x)
            }
            TemporalLaw::ExpSmoothed { rate, base } => {
                base.tail_end(x, 0.5 * tol) + (2.0 / tol).ln() / (rate + x)
            }
        }
    }

    /// Points where the density has a kink or jump.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            TemporalLaw::Atoms { atoms } => atoms.iter().map(|a| a.at).collect(),
            TemporalLaw::ExpSmoothed { base, .. } => {
                let mut b = base.breakpoints();
                b.push(0.0);
                b
            }
            _ => vec![0.0],
        }
    }

    /// `∫_0^end exp(-x s) P(ds)` by quadrature (atoms summed exactly).
    pub fn tilted_mass_quadrature(&self, x: f64, end: f64, tol: f64) -> Result<f64> {
        match self {
            TemporalLaw::Atoms { atoms } => Ok(atoms
                .iter()
                .filter(|a| a.at <= end)
                .map(|a| a.weight * (-x * a.at).exp())
                .sum()),
            _ => {
                let mut breaks = quad::uniform_breaks(0.0, end, 32);
                breaks.extend(self.breakpoints());
                quad::integrate_with_breaks(&|s| self.density(s) * (-x * s).exp(), 0.0, end, &breaks, tol)
            }
        }
    }
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("must be positive and finite, got {v}")))
    }
}

fn gamma_density(shape: f64, rate: f64, s: f64) -> f64 {
    if s == 0.0 {
        return if shape < 1.0 {
            f64::INFINITY
        } else if shape == 1.0 {
            rate
        } else {
            0.0
        };
    }
    ((shape - 1.0) * (rate * s).ln() - rate * s - ln_gamma(shape)).exp() * rate
}

fn smoothed_density(rate: f64, base: &TemporalLaw, s: f64) -> f64 {
    match base {
        TemporalLaw::Atoms { atoms } => atoms
            .iter()
            .filter(|a| s >= a.at)
            .map(|a| a.weight * rate * (-rate * (s - a.at)).exp())
            .sum(),
        TemporalLaw::Exponential { rate: eta } => {
            let d = eta - rate;
            if d.abs() <= 1e-9 * rate {
                rate * rate * s * (-rate * s).exp()
            } else {
                // rate*eta/(eta-rate) * (e^{-rate s} - e^{-eta s}), written to avoid cancellation.
                rate * eta * (-rate * s).exp() * (-(-d * s).exp_m1()) / d
            }
        }
        TemporalLaw::Gamma { shape, rate: r } => smoothed_gamma(rate, *shape, *r, s).unwrap_or_else(|| {
            quad::integrate_with_breaks(&|u| rate * (-rate * (s - u)).exp() * base.density(u), 0.0, s, &[], 1e-13)
                .unwrap_or(f64::NAN)
        }),
        _ => {
            let mut breaks = base.breakpoints();
            breaks.extend(quad::uniform_breaks(0.0, s, 8));
            quad::integrate_with_breaks(
                &|u| rate * (-rate * (s - u)).exp() * base.density(u),
                0.0,
                s,
                &breaks,
                1e-13,
            )
            .unwrap_or(f64::NAN)
        }
    }
}

/// `α e^{-αs} r^k / Γ(k) ∫_0^s u^{k-1} e^{-(r-α)u} du` through a Kummer
/// series with positive terms. `None` when the series argument is too large.
fn smoothed_gamma(alpha: f64, k: f64, r: f64, s: f64) -> Option<f64> {
    if s <= 0.0 {
        return Some(0.0);
    }
    let a = r - alpha;
    let x = a.abs() * s;
    if x > 600.0 {
        return None;
    }
    // ∫_0^s u^{k-1} e^{-au} du = s^k/k M(k, k+1, -as) = s^k e^{-as}/k M(1, k+1, as).
    let (series, shift) = if a >= 0.0 {
        (kummer_series(x, |j| 1.0 / (k + 1.0 + j)), -x)
    } else {
        (kummer_series(x, |j| (k + j) / ((k + 1.0 + j) * (j + 1.0))), 0.0)
    };
    let log = alpha.ln() - alpha * s + k * (r * s).ln() - ln_gamma(k) - k.ln() + shift;
    Some(log.exp() * series)
}

/// `Σ_j t_j` with `t_0 = 1` and `t_{j+1} = t_j x ratio(j)`.
fn kummer_series(x: f64, ratio: impl Fn(f64) -> f64) -> f64 {
    let (mut term, mut sum) = (1.0, 1.0);
    let mut j = 0.0;
    while j < 10_000.0 {
        term *= x * ratio(j);
        sum += term;
        j += 1.0;
        if j > x && term < 1e-17 * sum {
            break;
        }
    }
    sum
}

/// Lanczos approximation (g = 7, n = 9).
pub(crate) fn ln_gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = COEF[0];
    let t = x + G + 0.5;
    for (i, c) in COEF.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// Probability law of the spatial displacement `w`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum SpatialLaw {
    Dirac { at: f64 },
    Gaussian { mean: f64, variance: f64 },
    /// Two-sided exponential `exp(-|w - mean| / scale) / (2 scale)`.
    Laplace { mean: f64, scale: f64 },
}

/// Gaussian tails beyond this many standard deviations carry < 1e-10 mass.
const GAUSS_SIGMAS: f64 = 6.5;

impl SpatialLaw {
    pub fn validate(&self) -> Result<()> {
        match self {
            SpatialLaw::Dirac { at } if at.is_finite() => Ok(()),
            SpatialLaw::Dirac { .. } => Err(Error::invalid("at", "must be finite")),
            SpatialLaw::Gaussian { variance, .. } => positive("variance", *variance),
            SpatialLaw::Laplace { scale, .. } => positive("scale", *scale),
        }
    }

    pub fn is_atomic(&self) -> bool {
        matches!(self, SpatialLaw::Dirac { .. })
    }

    pub fn density(&self, w: f64) -> f64 {
        match self {
            SpatialLaw::Dirac { .. } => 0.0,
            SpatialLaw::Gaussian { mean, variance } => {
                let d = w - mean;
                (-d * d / (2.0 * variance)).exp() / (2.0 * std::f64::consts::PI * variance).sqrt()
            }
            SpatialLaw::Laplace { mean, scale } => (-(w - mean).abs() / scale).exp() / (2.0 * scale),
        }
    }

    /// `E[exp(-z W)]`, or `None` where it diverges.
    pub fn transform(&self, z: f64) -> Option<f64> {
        match self {
            SpatialLaw::Dirac { at } => Some((-z * at).exp()),
            SpatialLaw::Gaussian { mean, variance } => Some((-z * mean + 0.5 * z * z * variance).exp()),
            SpatialLaw::Laplace { mean, scale } => {
                let bz = scale * z;
                (bz.abs() < 1.0).then(|| (-z * mean).exp() / (1.0 - bz * bz))
            }
        }
    }

    /// Transform converges for `|z| < abscissa`.
    pub fn abscissa(&self) -> f64 {
        match self {
            SpatialLaw::Laplace { scale, .. } => 1.0 / scale,
            _ => f64::INFINITY,
        }
    }

    /// Interval carrying all but `tol` of the mass.
    pub fn support(&self, tol: f64) -> (f64, f64) {
        match self {
            SpatialLaw::Dirac { at } => (*at, *at),
            SpatialLaw::Gaussian { mean, variance } => {
                let half = GAUSS_SIGMAS.max((2.0 * (1.0 / tol).ln()).sqrt()) * variance.sqrt();
                (mean - half, mean + half)
            }
            SpatialLaw::Laplace { mean, scale } => {
                let half = scale * (1.0 / tol).ln();
                (mean - half, mean + half)
            }
        }
    }

    /// Interval carrying all but `tol` of the tilted mass `J(w) exp(-z w)`.
    pub fn tilted_window(&self, z: f64, tol: f64) -> (f64, f64) {
        match self {
            SpatialLaw::Dirac { at } => (*at, *at),
            SpatialLaw::Gaussian { mean, variance } => {
                let centre = mean - z * variance;
                let half = 12.0 * variance.sqrt();
                (centre - half, centre + half)
            }
            SpatialLaw::Laplace { mean, scale } => {
                let log_inv = (1.0 / tol).ln() + 2.0;
                let rate = 1.0 / scale;
                (mean - log_inv / (rate - z), mean + log_inv / (rate + z))
            }
        }
    }

    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            SpatialLaw::Dirac { at } | SpatialLaw::Laplace { mean: at, .. } | SpatialLaw::Gaussian { mean: at, .. } => {
                vec![*at]
            }
        }
    }

    /// `∫ J(w) exp(-z w) dw` by quadrature (atoms exact).
    pub fn tilted_mass_quadrature(&self, z: f64, tol: f64) -> Result<f64> {
        match self {
            SpatialLaw::Dirac { at } => Ok((-z * at).exp()),
            _ => {
                let (lo, hi) = self.tilted_window(z, tol);
                let mut breaks = quad::uniform_breaks(lo, hi, 16);
                breaks.extend(self.breakpoints());
                quad::integrate_with_breaks(&|w| self.density(w) * (-z * w).exp(), lo, hi, &breaks, tol)
            }
        }
    }
}
