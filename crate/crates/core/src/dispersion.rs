//! Characteristic functions `ℛ(z, c) = z² - c z - q + p M(z, c)` and the
//! minimal speeds they define.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::green::GreenKernel;
use crate::kernels::Kernel;

/// Positive root of `z² - c z - q = 0`.
pub fn mu_q(c: f64, q: f64) -> f64 {
    (c + (c * c + 4.0 * q).sqrt()) / 2.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RootOptions {
    /// Uniform scan points on `(0, z_hi]`.
    pub grid_points: usize,
    /// Bisection stops once `|ℛ| < root_tol`.
    pub root_tol: f64,
    /// Minimum values within this band of zero count as tangency.
    pub double_tol: f64,
    /// Two roots closer than this are reported as one double root.
    pub double_gap: f64,
}

impl Default for RootOptions {
    fn default() -> Self {
        RootOptions {
            grid_points: 256,
            root_tol: 1e-10,
            double_tol: 1e-6,
            double_gap: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RootReport {
    pub c: f64,
    /// Zero, one or two positive roots in increasing order.
    pub roots: Vec<f64>,
    pub is_double: bool,
    pub bound_mu_q: f64,
    /// Right end of the scanned interval.
    pub scan_hi: f64,
    pub min_value: f64,
    pub argmin: f64,
    /// `ℛ` is still negative where the scan stops at the transform domain.
    pub open_at_boundary: bool,
}

impl RootReport {
    pub fn has_root(&self) -> bool {
        !self.roots.is_empty()
    }

    pub fn lambda1(&self) -> Option<f64> {
        self.roots.first().copied()
    }

    pub fn lambda2(&self) -> Option<f64> {
        self.roots.last().copied()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpeedOptions {
    /// Bisection on `c` stops below this bracket width.
    pub speed_tol: f64,
    /// Doublings allowed while searching for a bracket.
    pub max_doublings: usize,
    pub roots: RootOptions,
}

impl Default for SpeedOptions {
    fn default() -> Self {
        SpeedOptions {
            speed_tol: 1e-10,
            max_doublings: 40,
            roots: RootOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpeedResult {
    pub c_min: f64,
    pub lambda_tangent: f64,
    /// `ℛ(lambda_tangent, c_min)`.
    pub value_at_tangent: f64,
    pub bracket: (f64, f64),
    /// Number of `ℛ` evaluations spent.
    pub evaluations: usize,
    pub warnings: Vec<String>,
}

/// Output of [`DispersionFunction::chi_identity_check`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityCheck {
    pub max_discrepancy: f64,
    pub chi0_integral: f64,
    pub chi0_ratio: f64,
    pub expected_chi0: f64,
}

/// `ℛ(z, c) = z² - c z - q + p M(z, c)`.
#[derive(Debug, Clone)]
pub struct DispersionFunction {
    q: f64,
    p: f64,
    kernel: Kernel,
}

struct Scan {
    hi: f64,
    zs: Vec<f64>,
    vals: Vec<f64>,
}

impl DispersionFunction {
    pub fn new(q: f64, p: f64, kernel: Kernel) -> Result<Self> {
        if !(q > 0.0 && q.is_finite()) {
            return Err(Error::invalid("q", format!("must be positive, got {q}")));
        }
        if !(p > q && p.is_finite()) {
            return Err(Error::invalid("p", format!("must exceed q = {q}, got {p}")));
        }
        Ok(DispersionFunction { q, p, kernel })
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn eval(&self, z: f64, c: f64) -> Result<f64> {
        let m = self.kernel.transform(z, c)?;
        Ok(z * z - c * z - self.q + self.p * m)
    }

    pub fn mu_q(&self, c: f64) -> f64 {
        mu_q(c, self.q)
    }

    /// Right end of the root search at speed `c`.
    pub fn scan_limit(&self, c: f64) -> f64 {
        self.mu_q(c).min(self.kernel.domain(c).usable_hi())
    }

    fn scan(&self, c: f64, opts: &RootOptions, evals: &mut usize) -> Result<Scan> {
        let hi = self.scan_limit(c);
        let n = opts.grid_points.max(8);
        let mut zs = Vec::with_capacity(n + 1);
        let mut vals = Vec::with_capacity(n + 1);
        for i in 0..=n {
            // The last node sits just inside the domain margin.
            let z = if i == n { hi * (1.0 - 1e-12) } else { hi * i as f64 / n as f64 };
            zs.push(z);
            vals.push(self.eval(z, c)?);
        }
        *evals += n + 1;
        Ok(Scan { hi, zs, vals })
    }

    fn refine_min(&self, c: f64, scan: &Scan, evals: &mut usize) -> Result<(f64, f64)> {
        let (i, _) = scan
            .vals
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (i, &v)| if v < acc.1 { (i, v) } else { acc });
        let a = scan.zs[i.saturating_sub(1)];
        let b = scan.zs[(i + 1).min(scan.zs.len() - 1)];
        let (z, v) = golden_min(|z| self.eval(z, c), a, b, 1e-13 * scan.hi.max(1e-300), evals)?;
        Ok(if v < scan.vals[i] { (z, v) } else { (scan.zs[i], scan.vals[i]) })
    }

    /// Minimum of `ℛ(·, c)` over the scan interval and where it is attained.
    pub fn minimum(&self, c: f64, opts: &RootOptions) -> Result<(f64, f64)> {
        let mut evals = 0;
        let scan = self.scan(c, opts, &mut evals)?;
        self.refine_min(c, &scan, &mut evals)
    }

    pub fn positive_roots(&self, c: f64, opts: &RootOptions) -> Result<RootReport> {
        let mut evals = 0;
        self.roots_counted(c, opts, &mut evals)
    }

    fn roots_counted(&self, c: f64, opts: &RootOptions, evals: &mut usize) -> Result<RootReport> {
        let scan = self.scan(c, opts, evals)?;
        let (argmin, min_value) = self.refine_min(c, &scan, evals)?;

        let mut brackets = Vec::new();
        for i in 1..scan.zs.len() {
            let (v0, v1) = (scan.vals[i - 1], scan.vals[i]);
            if v1 == 0.0 || (v0 > 0.0) != (v1 > 0.0) && v0 != 0.0 {
                brackets.push((scan.zs[i - 1], scan.zs[i]));
            }
        }
        if brackets.is_empty() && min_value < 0.0 {
            // A dip narrower than one scan cell.
            let i = scan.zs.partition_point(|&z| z < argmin);
            brackets.push((scan.zs[i.saturating_sub(1)], argmin));
            if i < scan.zs.len() {
                brackets.push((argmin, scan.zs[i]));
            }
        }
        if brackets.len() > 2 {
            return Err(Error::TooManyRoots {
                c,
                count: brackets.len(),
            });
        }

        let mut roots = Vec::with_capacity(2);
        for (a, b) in brackets {
            roots.push(bisect(|z| self.eval(z, c), a, b, opts.root_tol, evals)?);
        }
        let mut is_double = roots.len() == 2 && roots[1] - roots[0] < opts.double_gap;
        if roots.is_empty() && min_value.abs() <= opts.double_tol {
            roots.push(argmin);
            is_double = true;
        }
        let open_at_boundary = *scan.vals.last().unwrap() < 0.0;
        Ok(RootReport {
            c,
            roots,
            is_double,
            bound_mu_q: self.mu_q(c),
            scan_hi: scan.hi,
            min_value,
            argmin,
            open_at_boundary,
        })
    }

    /// Whether `min_z ℛ(z, c) <= 0`.
    fn rooted(&self, c: f64, opts: &RootOptions, evals: &mut usize) -> Result<bool> {
        let scan = self.scan(c, opts, evals)?;
        if scan.vals.iter().any(|&v| v <= 0.0) {
            return Ok(true);
        }
        Ok(self.refine_min(c, &scan, evals)?.1 <= 0.0)
    }

    /// Smallest `c` in `bracket` at which `ℛ(·, c)` has a positive root.
    pub fn minimal_speed(&self, bracket: (f64, f64), opts: &SpeedOptions) -> Result<SpeedResult> {
        let mut evals = 0;
        let (lo, hi) = bracket;
        if !(lo < hi)
            || self.rooted(lo, &opts.roots, &mut evals)?
            || !self.rooted(hi, &opts.roots, &mut evals)?
        {
            return Err(Error::BadBracket { lo, hi });
        }
        self.bisect_speed(lo, hi, opts, evals, Vec::new())
    }

    /// [`Self::minimal_speed`] with a bracket grown from `[0, 1]` by doubling.
    pub fn minimal_speed_auto(&self, opts: &SpeedOptions) -> Result<SpeedResult> {
        let mut evals = 0;
        let mut warnings = Vec::new();
        let cap = 2.0 * self.p;

        let mut lo = 0.0;
        let mut step = 1.0;
        let mut tries = 0;
        while self.rooted(lo, &opts.roots, &mut evals)? {
            tries += 1;
            if tries > opts.max_doublings {
                return Err(Error::BadBracket { lo, hi: 0.0 });
            }
            lo = -step;
            step *= 2.0;
        }

        let mut hi = lo.max(0.0) + 1.0;
        let mut tries = 0;
        while !self.rooted(hi, &opts.roots, &mut evals)? {
            tries += 1;
            if tries > opts.max_doublings {
                return Err(Error::BadBracket { lo, hi });
            }
            lo = hi;
            hi *= 2.0;
        }
        if hi > cap {
            warnings.push(format!(
                "minimal_speed: bracket grew to {hi} beyond the heuristic cap 2p = {cap}"
            ));
        }
        self.bisect_speed(lo, hi, opts, evals, warnings)
    }

    fn bisect_speed(
        &self,
        mut lo: f64,
        mut hi: f64,
        opts: &SpeedOptions,
        mut evals: usize,
        warnings: Vec<String>,
    ) -> Result<SpeedResult> {
        let bracket = (lo, hi);
        while hi - lo > opts.speed_tol {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.rooted(mid, &opts.roots, &mut evals)? {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let scan = self.scan(hi, &opts.roots, &mut evals)?;
        let (lambda_tangent, value_at_tangent) = self.refine_min(hi, &scan, &mut evals)?;
        Ok(SpeedResult {
            c_min: hi,
            lambda_tangent,
            value_at_tangent,
            bracket,
            evaluations: evals,
            warnings,
        })
    }

    /// Evaluates `χ(z) = -ℛ(z, c) / (β + c z - z²)` two ways on `z_grid`:
    /// directly, and through the transform of the Green kernel of
    /// `y'' - c y' - β y`. Returns the worst disagreement.
    pub fn chi_identity_check(&self, beta: f64, c: f64, z_grid: &[f64]) -> Result<IdentityCheck> {
        if !(beta > self.q) {
            return Err(Error::invalid("beta", format!("must exceed q = {}, got {beta}", self.q)));
        }
        let k1 = GreenKernel::profile(c, beta);
        let upper = k1.mu.min(self.kernel.domain(c).usable_hi());
        let integral = |z: f64| -> Result<f64> {
            let t = k1.transform(z).ok_or(Error::DomainExceeded { z, c, limit: upper })?;
            let m = self.kernel.transform(z, c)?;
            Ok(1.0 - (beta - self.q) * t - self.p * m * t)
        };
        let ratio = |z: f64| -> Result<f64> { Ok(-self.eval(z, c)? / (beta + c * z - z * z)) };

        let mut max_discrepancy: f64 = 0.0;
        for &z in z_grid {
            if !(z >= 0.0 && z < upper) {
                return Err(Error::DomainExceeded { z, c, limit: upper });
            }
            max_discrepancy = max_discrepancy.max((integral(z)? - ratio(z)?).abs());
        }
        Ok(IdentityCheck {
            max_discrepancy,
            chi0_integral: integral(0.0)?,
            chi0_ratio: ratio(0.0)?,
            expected_chi0: (self.q - self.p) / beta,
        })
    }
}

fn bisect<F: Fn(f64) -> Result<f64>>(f: F, mut a: f64, mut b: f64, tol: f64, evals: &mut usize) -> Result<f64> {
    let mut fa = f(a)?;
    *evals += 1;
    if fa == 0.0 {
        return Ok(a);
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = f(m)?;
        *evals += 1;
        if fm.abs() < tol && b - a < 1e-6 * b.abs().max(1e-300) {
            return Ok(m);
        }
        if (fm > 0.0) == (fa > 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

fn golden_min<F: Fn(f64) -> Result<f64>>(
    f: F,
    mut a: f64,
    mut b: f64,
    tol: f64,
    evals: &mut usize,
) -> Result<(f64, f64)> {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - r * (b - a);
    let mut x2 = a + r * (b - a);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    *evals += 2;
    while b - a > tol {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - r * (b - a);
            f1 = f(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + r * (b - a);
            f2 = f(x2)?;
        }
        *evals += 1;
    }
    Ok(if f1 <= f2 { (x1, f1) } else { (x2, f2) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{SpatialLaw, TemporalLaw};

    fn local(q: f64, p: f64) -> DispersionFunction {
        DispersionFunction::new(q, p, Kernel::local()).unwrap()
    }

    fn marine() -> DispersionFunction {
        DispersionFunction::new(0.05, 2.0, Kernel::marine(0.02, 100.0, 0.001).unwrap()).unwrap()
    }

    #[test]
    fn mu_q_values() {
        assert_eq!(mu_q(0.0, 1.0), 1.0);
        assert!((mu_q(3.0, 0.05) - (3.0 + 9.2f64.sqrt()) / 2.0).abs() < 1e-15);
        assert!((mu_q(-2.0, 1.0) - (8f64.sqrt() - 2.0) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn value_at_origin() {
        let d = marine();
        for c in [-1.0, 0.0, 2.0, 3.0] {
            assert!((d.eval(0.0, c).unwrap() - 1.95).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_bad_coefficients() {
        assert!(DispersionFunction::new(0.0, 1.0, Kernel::local()).is_err());
        assert!(DispersionFunction::new(1.0, 1.0, Kernel::local()).is_err());
    }

    #[test]
    fn local_quadratic() {
        let d = local(1.0, 2.0);
        for (z, c) in [(0.3, 1.0), (1.2, 2.5)] {
            assert!((d.eval(z, c).unwrap() - (z * z - c * z + 1.0)).abs() < 1e-14);
        }
        let r = d.positive_roots(2.0, &RootOptions::default()).unwrap();
        assert!(r.is_double);
        assert!((r.lambda1().unwrap() - 1.0).abs() < 1e-5);
        let r = d.positive_roots(1.9, &RootOptions::default()).unwrap();
        assert!(!r.has_root());
        let r = d.positive_roots(2.5, &RootOptions::default()).unwrap();
        assert_eq!(r.roots.len(), 2);
        assert!((r.roots[0] - 0.5).abs() < 1e-9 && (r.roots[1] - 2.0).abs() < 1e-9);
        assert!(r.roots.iter().all(|&l| l < r.bound_mu_q));
    }

    #[test]
    fn local_minimal_speed() {
        let opts = SpeedOptions::default();
        let s = local(1.0, 2.0).minimal_speed((0.0, 5.0), &opts).unwrap();
        assert!((s.c_min - 2.0).abs() < 1e-6);
        assert!((s.lambda_tangent - 1.0).abs() < 1e-4);
        let s = local(1.0, 1.0 + 1e-4).minimal_speed_auto(&opts).unwrap();
        assert!((s.c_min - 0.02).abs() < 1e-5);
        assert!(s.warnings.is_empty());
    }

    #[test]
    fn bad_bracket() {
        let d = local(1.0, 2.0);
        let e = d.minimal_speed((2.5, 3.0), &SpeedOptions::default()).unwrap_err();
        assert!(matches!(e, Error::BadBracket { .. }));
    }

    #[test]
    fn marine_two_roots_at_three() {
        let r = marine().positive_roots(3.0, &RootOptions::default()).unwrap();
        assert_eq!(r.roots.len(), 2);
        assert!(!r.is_double);
        for &l in &r.roots {
            assert!(marine().eval(l, 3.0).unwrap().abs() < 1e-10);
        }
    }

    #[test]
    fn identity_on_local_kernel() {
        let d = local(1.0, 2.0);
        let zs: Vec<f64> = (0..50).map(|i| 2.0 * i as f64 / 50.0).collect();
        let chk = d.chi_identity_check(2.0, 2.0, &zs).unwrap();
        assert!(chk.max_discrepancy < 1e-12);
        assert!((chk.chi0_ratio - chk.expected_chi0).abs() < 1e-15);
        assert!(chk.expected_chi0 < 0.0);
        assert!(d.chi_identity_check(0.5, 2.0, &zs).is_err());
    }

    #[test]
    fn separable_gaussian_delay() {
        let k = Kernel::separable(
            TemporalLaw::Exponential { rate: 1.0 },
            SpatialLaw::Gaussian { mean: 0.0, variance: 1.0 },
        )
        .unwrap();
        let d = DispersionFunction::new(1.0, 2.0, k).unwrap();
        let s = d.minimal_speed_auto(&SpeedOptions::default()).unwrap();
        assert!((s.c_min - 1.226287251617141).abs() < 1e-8, "{}", s.c_min);
        assert!(s.value_at_tangent.abs() < 1e-9);
    }
}
