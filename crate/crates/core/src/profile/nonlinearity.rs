//! Removal and birth terms `f`, `g` of the profile equation.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Built-in removal terms `f`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Removal {
    /// `f(s) = rate * s`.
    Linear { rate: f64 },
    /// `f(s) = rate * s + quad * s²`.
    Quadratic { rate: f64, quad: f64 },
}

/// Built-in birth terms `g`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Birth {
    /// `g(s) = p s / (1 + b s)`.
    BevertonHolt { p: f64, b: f64 },
    /// `g(s) = p s exp(-b s)`.
    Ricker { p: f64, b: f64 },
    /// `g(s) = p s`; unbounded, only useful for exercising validation.
    Linear { p: f64 },
}

/// Scalar constants describing a pair `(f, g)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    pub f_prime0: f64,
    pub g_prime0: f64,
    /// Linear majorant: `g(s) <= l s`.
    pub l: f64,
    pub g_sup: f64,
    /// `inf f'` over the half line.
    pub f_inf_slope: f64,
}

/// The pair `(f, g)` with the constants the construction needs.
#[derive(Clone)]
pub struct Nonlinearity {
    f: ScalarFn,
    f_deriv: ScalarFn,
    f_inverse: Option<ScalarFn>,
    g: ScalarFn,
    pub consts: Constants,
}

impl fmt::Debug for Nonlinearity {
    fn fmt(&self, fm: &mut fmt::Formatter<'_>) -> fmt::Result {
        fm.debug_struct("Nonlinearity").field("consts", &self.consts).finish_non_exhaustive()
    }
}

impl Nonlinearity {
    pub fn new(removal: Removal, birth: Birth) -> Self {
        let (f, f_deriv, f_inverse, f_prime0, f_inf_slope): (ScalarFn, ScalarFn, ScalarFn, f64, f64) = match removal {
            Removal::Linear { rate } => (
                Arc::new(move |s| rate * s),
                Arc::new(move |_| rate),
                Arc::new(move |y| y / rate),
                rate,
                rate,
            ),
            Removal::Quadratic { rate, quad } => (
                Arc::new(move |s| rate * s + quad * s * s),
                Arc::new(move |s| rate + 2.0 * quad * s),
                Arc::new(move |y: f64| {
                    if quad == 0.0 {
                        y / rate
                    } else {
                        // Rationalized root, stable when `rate² >> quad * y`.
                        2.0 * y / (rate + (rate * rate + 4.0 * quad * y).sqrt())
                    }
                }),
                rate,
                if quad >= 0.0 { rate } else { f64::NEG_INFINITY },
            ),
        };
        let (g, g_prime0, g_sup): (ScalarFn, f64, f64) = match birth {
            Birth::BevertonHolt { p, b } => (Arc::new(move |s| p * s / (1.0 + b * s)), p, p / b),
            Birth::Ricker { p, b } => (
                Arc::new(move |s: f64| p * s * (-b * s).exp()),
                p,
                p / (b * std::f64::consts::E),
            ),
            Birth::Linear { p } => (Arc::new(move |s| p * s), p, f64::INFINITY),
        };
        Nonlinearity {
            f,
            f_deriv,
            f_inverse: Some(f_inverse),
            g,
            consts: Constants {
                f_prime0,
                g_prime0,
                l: g_prime0,
                g_sup,
                f_inf_slope,
            },
        }
    }

    /// User-supplied functions. `f'` is taken by central differences and
    /// `f⁻¹` by bisection.
    pub fn custom<F, G>(f: F, g: G, consts: Constants) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
        G: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let f: ScalarFn = Arc::new(f);
        let fc = f.clone();
        let f_deriv: ScalarFn = Arc::new(move |s: f64| {
            let e = 1e-6 * s.abs().max(1e-3);
            let a = (s - e).max(0.0);
            (fc(s + e) - fc(a)) / (s + e - a)
        });
        Nonlinearity {
            f,
            f_deriv,
            f_inverse: None,
            g: Arc::new(g),
            consts,
        }
    }

    /// Replaces the linear majorant `L`.
    pub fn with_majorant(mut self, l: f64) -> Self {
        self.consts.l = l;
        self
    }

    /// `(f, k g)`.
    pub fn scale_birth(&self, k: f64) -> Self {
        let g = self.g.clone();
        let mut out = self.clone();
        out.g = Arc::new(move |s| k * g(s));
        out.consts.g_prime0 *= k;
        out.consts.l *= k;
        out.consts.g_sup *= k;
        out
    }

    pub fn f(&self, s: f64) -> f64 {
        (self.f)(s)
    }

    pub fn f_prime(&self, s: f64) -> f64 {
        (self.f_deriv)(s)
    }

    pub fn g(&self, s: f64) -> f64 {
        (self.g)(s)
    }

    /// `f⁻¹(y)` for `y >= 0`.
    pub fn f_inverse(&self, y: f64) -> f64 {
        if let Some(inv) = &self.f_inverse {
            return inv(y);
        }
        let mut hi = 1.0;
        while self.f(hi) < y && hi < 1e300 {
            hi *= 2.0;
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.f(mid) < y {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// `U = sup g / inf f'`, the a-priori bound on profiles.
    pub fn upper_bound(&self) -> f64 {
        let c = &self.consts;
        if c.f_inf_slope > 0.0 {
            c.g_sup / c.f_inf_slope
        } else {
            f64::INFINITY
        }
    }

    /// Right end of the sampling range used by the checks below.
    fn sample_range(&self) -> f64 {
        let u = self.upper_bound();
        if u.is_finite() {
            10.0 * u
        } else {
            1e3
        }
    }

    /// `samples` log-spaced points in `(0, hi]`, from `hi * 1e-8` upward.
    fn log_samples(hi: f64, samples: usize) -> Vec<f64> {
        let n = samples.max(2);
        (0..n)
            .map(|k| hi * 10f64.powf(-8.0 * (1.0 - k as f64 / (n - 1) as f64)))
            .collect()
    }

    pub fn validate_hypotheses(&self, samples: usize) -> HypothesisReport {
        let c = self.consts;
        let xs = Self::log_samples(self.sample_range(), samples);
        let rel = 1e-12;
        let mut checks = Vec::new();

        let birth = if self.g(0.0) != 0.0 {
            Some(0.0)
        } else {
            xs.iter().copied().find(|&s| !(self.g(s) > 0.0))
        };
        checks.push(HypothesisCheck::new("birth_positive", birth, "g(0) = 0 and g > 0 on (0, ∞)"));

        let mut removal = (self.f(0.0) != 0.0).then_some(0.0);
        if removal.is_none() {
            let mut prev = 0.0;
            for &s in &xs {
                let v = self.f(s);
                if !(v > prev) {
                    removal = Some(s);
                    break;
                }
                prev = v;
            }
        }
        checks.push(HypothesisCheck::new("removal_increasing", removal, "f(0) = 0 and f strictly increasing"));

        let instab = !(c.f_prime0 > 0.0 && c.f_prime0 < c.g_prime0);
        checks.push(HypothesisCheck::new(
            "linear_instability",
            instab.then_some(0.0),
            format!("0 < f'(0) = {} < g'(0) = {}", c.f_prime0, c.g_prime0),
        ));

        let majorant = xs
            .iter()
            .copied()
            .find(|&s| self.g(s) > c.l * s * (1.0 + rel))
            .or((c.l < c.g_prime0).then_some(0.0));
        checks.push(HypothesisCheck::new("linear_majorant", majorant, format!("g(s) <= {} s", c.l)));

        let slope = if !(c.f_inf_slope > 0.0) {
            Some(0.0)
        } else {
            xs.iter().copied().find(|&s| self.f(s) < c.f_inf_slope * s * (1.0 - rel))
        };
        checks.push(HypothesisCheck::new(
            "removal_slope",
            slope,
            format!("f(s) >= {} s with a positive slope", c.f_inf_slope),
        ));

        let dominates = xs.iter().any(|&s| self.f(s) > c.g_sup);
        let mut check = HypothesisCheck::new("removal_dominates", None, "f(s) > sup g for some s");
        check.passed = dominates;
        checks.push(check);

        HypothesisReport { checks }
    }

    /// `β = max(2 f'(0), sup f' on [0, U]) + 1`.
    pub fn select_beta(&self) -> Result<f64> {
        let u = self.upper_bound();
        if !u.is_finite() {
            return Err(Error::invalid("nonlinearity", "sup g / inf f' is not finite"));
        }
        let mut sup: f64 = 0.0;
        let n = 1000;
        for i in 0..=n {
            let s = u * i as f64 / n as f64;
            let d = self.f_prime(s);
            if !d.is_finite() || d.abs() > 1e12 {
                return Err(Error::UnboundedDerivative { s });
            }
            sup = sup.max(d);
        }
        Ok((2.0 * self.consts.f_prime0).max(sup) + 1.0)
    }

    /// `f_β(s) = β s - f(s)`.
    pub fn f_beta(&self, beta: f64, s: f64) -> f64 {
        beta * s - self.f(s)
    }

    /// Linearized pair `(g_n, f_βn)` at level `n`.
    pub fn regularize(&self, beta: f64, n: u32) -> Regularized {
        Regularized {
            nl: self.clone(),
            beta,
            n: Some(n),
        }
    }

    /// Positive solutions of `f = g` and their stability under `f⁻¹ ∘ g`.
    pub fn fixed_points(&self) -> Result<FixedPointReport> {
        let hi = self.sample_range();
        let h = |s: f64| self.f(s) - self.g(s);
        let n = 4096;
        let xs = Self::log_samples(hi, n);
        let mut kappas = Vec::new();
        let mut prev = (xs[0], h(xs[0]));
        for &s in &xs[1..] {
            let v = h(s);
            if v == 0.0 {
                kappas.push(s);
            } else if prev.1 != 0.0 && (v > 0.0) != (prev.1 > 0.0) {
                let (mut a, mut b) = (prev.0, s);
                let fa = prev.1;
                for _ in 0..200 {
                    let m = 0.5 * (a + b);
                    if m <= a || m >= b {
                        break;
                    }
                    if (h(m) > 0.0) == (fa > 0.0) {
                        a = m;
                    } else {
                        b = m;
                    }
                }
                kappas.push(0.5 * (a + b));
            }
            prev = (s, v);
        }
        if kappas.is_empty() {
            return Err(Error::NoPositiveFixedPoint { upper: hi });
        }

        let map = |s: f64| self.f_inverse(self.g(s));
        let seeds: Vec<f64> = (1..=16).map(|k| hi * k as f64 / 16.0).chain([1e-3 * kappas[0]]).collect();
        let points = kappas
            .iter()
            .map(|&kappa| {
                let attracting = seeds.iter().all(|&s0| {
                    let mut s = s0;
                    for _ in 0..10_000 {
                        let next = map(s);
                        if (next - s).abs() <= 1e-12 * kappa.max(1.0) {
                            s = next;
                            break;
                        }
                        s = next;
                    }
                    (s - kappa).abs() <= 1e-6 * kappa.max(1.0)
                });
                let e = 1e-6 * kappa;
                FixedPoint {
                    kappa,
                    attracting,
                    map_slope: (map(kappa + e) - map(kappa - e)) / (2.0 * e),
                }
            })
            .collect();
        Ok(FixedPointReport {
            points,
            slope_at_zero: self.consts.g_prime0 / self.consts.f_prime0,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisCheck {
    pub name: &'static str,
    pub passed: bool,
    pub first_violation: Option<f64>,
    pub condition: String,
}

impl HypothesisCheck {
    fn new(name: &'static str, violation: Option<f64>, condition: impl Into<String>) -> Self {
        HypothesisCheck {
            name,
            passed: violation.is_none(),
            first_violation: violation,
            condition: condition.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisReport {
    pub checks: Vec<HypothesisCheck>,
}

impl HypothesisReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&HypothesisCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> impl Iterator<Item = &HypothesisCheck> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FixedPoint {
    pub kappa: f64,
    /// Every seed of the `f⁻¹ ∘ g` iteration ends at `kappa`.
    pub attracting: bool,
    /// `(f⁻¹ ∘ g)'(kappa)`.
    pub map_slope: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FixedPointReport {
    pub points: Vec<FixedPoint>,
    /// `g'(0) / f'(0)`.
    pub slope_at_zero: f64,
}

impl FixedPointReport {
    /// The equilibrium profiles are expected to approach.
    pub fn primary(&self) -> f64 {
        self.points
            .iter()
            .find(|p| p.attracting)
            .unwrap_or(&self.points[0])
            .kappa
    }
}

/// `(g_n, f_βn)`, or `(g, f_β)` when `n` is `None`.
#[derive(Debug, Clone)]
pub struct Regularized {
    nl: Nonlinearity,
    beta: f64,
    n: Option<u32>,
}

impl Regularized {
    pub fn exact(nl: &Nonlinearity, beta: f64) -> Self {
        Regularized {
            nl: nl.clone(),
            beta,
            n: None,
        }
    }

    pub fn level(&self) -> Option<u32> {
        self.n
    }

    pub fn g(&self, s: f64) -> f64 {
        match self.n {
            None => self.nl.g(s),
            Some(n) => {
                let l = self.nl.consts.l;
                let cut = 1.0 / n as f64;
                if s <= cut {
                    l * s
                } else {
                    self.nl.g(s).max(l * cut)
                }
            }
        }
    }

    pub fn f_beta(&self, s: f64) -> f64 {
        match self.n {
            None => self.nl.f_beta(self.beta, s),
            Some(n) => {
                let k = self.beta - self.nl.consts.f_inf_slope;
                let cut = 1.0 / n as f64;
                if s <= cut {
                    k * s
                } else {
                    self.nl.f_beta(self.beta, s).max(k * cut)
                }
            }
        }
    }
}
