use serde::{Deserialize, Serialize};

use super::grid::Grid;
use super::nonlinearity::{Nonlinearity, Regularized};
use super::problem::{ProblemOptions, WaveProblem};
use crate::error::{Error, PartialSolve, Result};
use crate::green::GreenKernel;
use crate::kernels::Kernel;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolveOptions {
    /// Stop a phase when the sup-norm change drops below this.
    pub tol: f64,
    /// Budget shared by both phases.
    pub max_iter: usize,
    /// A finished run is `converged` only below this residual.
    pub residual_tol: f64,
    /// Un-clipped iterates may leave the sandwich by `10 * quad_tol` before
    /// the solve is abandoned.
    pub quad_tol: f64,
    /// Nodes moved by less than this are not counted as clipped.
    pub clip_threshold: f64,
    /// Iterations without a new smallest change before averaging kicks in.
    pub damping_window: usize,
    /// Re-run with the unregularized pair after the regularized phase.
    pub polish: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: 1e-11,
            max_iter: 2000,
            residual_tol: 1e-4,
            quad_tol: 1e-6,
            clip_threshold: 1e-8,
            damping_window: 20,
            polish: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Regularized,
    Polish,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceEntry {
    pub phase: Phase,
    /// Sup-norm change of the clipped iterate.
    pub change: f64,
    /// How far the un-clipped image left `[φ⁻, min(φ⁺, U)]`.
    pub violation: f64,
    pub clips: usize,
    pub damped: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct IterationTrace {
    pub entries: Vec<TraceEntry>,
}

impl IterationTrace {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn max_violation(&self) -> f64 {
        self.entries.iter().fold(0.0, |m, e| m.max(e.violation))
    }

    /// Clip counts of the last `k` iterations.
    pub fn trailing_clips(&self, k: usize) -> Vec<usize> {
        let n = self.entries.len();
        self.entries[n.saturating_sub(k)..].iter().map(|e| e.clips).collect()
    }

    pub fn damped(&self) -> bool {
        self.entries.iter().any(|e| e.damped)
    }
}

/// A sampled wave profile and its diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Profile {
    pub grid: Grid,
    pub values: Vec<f64>,
    pub c: f64,
    pub residual_sup: f64,
    pub tail_rate: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Nodes `[start, end)` clear of boundary effects.
    pub interior: (usize, usize),
}

impl Profile {
    /// Min over the rightmost quarter exceeds `xi1`, and the profile is
    /// positive everywhere right of the left margin.
    pub fn persistence_check(&self, xi1: f64) -> bool {
        let n = self.values.len();
        let right = self.values[3 * n / 4..].iter().copied().fold(f64::INFINITY, f64::min);
        let positive = self.values[self.interior.0..].iter().all(|&v| v > 0.0);
        right > xi1 && positive
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// First `t` past the left margin where the profile reaches `level`.
    pub fn crossing(&self, level: f64) -> Option<f64> {
        let v = &self.values;
        (self.interior.0.max(1)..v.len()).find(|&i| v[i] >= level).map(|i| {
            let th = if v[i] == v[i - 1] { 0.0 } else { (level - v[i - 1]) / (v[i] - v[i - 1]) };
            self.grid.node(i - 1) + th * self.grid.h
        })
    }

    /// Samples `t ↦ φ(t + shift)` at `ts`.
    pub fn shifted(&self, shift: f64, ts: &[f64]) -> Vec<f64> {
        ts.iter().map(|&t| self.grid.interpolate(&self.values, t + shift)).collect()
    }
}

impl WaveProblem {
    /// Picard iteration of `φ ↦ clip(𝒜_n φ, φ⁻, min(φ⁺, U))` from
    /// `min(φ⁺, U)`, then the same with the unregularized pair.
    pub fn solve_profile(&self, opts: &SolveOptions) -> Result<(Profile, IterationTrace)> {
        let (sub, sup) = self.sub_super();
        let cap: Vec<f64> = sup.iter().map(|&v| v.min(self.upper())).collect();
        let mut phi = cap.clone();
        let mut trace = IterationTrace::default();

        let mut phases = vec![(Phase::Regularized, self.regularized())];
        if opts.polish {
            phases.push((Phase::Polish, self.exact()));
        }
        for (phase, pair) in phases {
            let done = self.iterate(&mut phi, &sub, &cap, &pair, phase, opts, &mut trace)?;
            if !done {
                let profile = self.finish(phi, &trace, opts);
                return Err(Error::NotConverged(Box::new(PartialSolve { profile, trace })));
            }
        }
        let profile = self.finish(phi, &trace, opts);
        Ok((profile, trace))
    }

    #[allow(clippy::too_many_arguments)]
    fn iterate(
        &self,
        phi: &mut [f64],
        sub: &[f64],
        cap: &[f64],
        pair: &Regularized,
        phase: Phase,
        opts: &SolveOptions,
        trace: &mut IterationTrace,
    ) -> Result<bool> {
        let mut best = f64::INFINITY;
        let mut stall = 0;
        let mut damped = false;
        while trace.len() < opts.max_iter {
            let image = self.apply_a_with(phi, pair);
            let mut violation: f64 = 0.0;
            let mut clips = 0;
            let mut change: f64 = 0.0;
            for i in 0..phi.len() {
                let a = image[i];
                violation = violation.max(a - cap[i]).max(sub[i] - a);
                let next = if damped { 0.5 * (phi[i] + a) } else { a };
                let clipped = next.clamp(sub[i], cap[i]);
                if (clipped - next).abs() > opts.clip_threshold {
                    clips += 1;
                }
                change = change.max((clipped - phi[i]).abs());
                phi[i] = clipped;
            }
            let iteration = trace.len();
            trace.entries.push(TraceEntry {
                phase,
                change,
                violation,
                clips,
                damped,
            });
            if violation > 10.0 * opts.quad_tol {
                return Err(Error::SandwichBroken { iteration, violation });
            }
            if change < opts.tol {
                return Ok(true);
            }
            if change < best {
                best = change;
                stall = 0;
            } else {
                stall += 1;
                if stall >= opts.damping_window && !damped {
                    damped = true;
                    stall = 0;
                }
            }
        }
        Ok(false)
    }

    fn finish(&self, values: Vec<f64>, trace: &IterationTrace, opts: &SolveOptions) -> Profile {
        let residual_sup = self.residual_ode(&values);
        let iterated = trace.entries.last().is_some_and(|e| e.change < opts.tol);
        Profile {
            grid: *self.grid(),
            c: self.speed(),
            tail_rate: self.tail_rate(&values),
            residual_sup,
            iterations: trace.len(),
            converged: iterated && residual_sup < opts.residual_tol,
            interior: self.interior(),
            values,
        }
    }
}

/// One approximant of [`critical_speed_profile`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalLevel {
    pub n: u32,
    pub c: f64,
    /// Translation applied so that the profile equals `κ / 2` at `t = 0`.
    pub shift: f64,
    pub max_derivative: f64,
    pub residual_sup: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalReport {
    pub c_star: f64,
    pub kappa: f64,
    /// Finest approximant, untranslated.
    pub profile: Profile,
    /// Sample points of the comparison window.
    pub window: Vec<f64>,
    /// Translated finest approximant on `window`.
    pub normalized: Vec<f64>,
    pub levels: Vec<CriticalLevel>,
    /// `(n, 2n, sup gap on the window)`.
    pub gaps: Vec<(u32, u32, f64)>,
    /// `(sup g + sup g / inf f') / σ(c_⋆)`.
    pub derivative_bound: f64,
}

impl CriticalReport {
    pub fn bound_holds(&self) -> bool {
        self.levels.iter().all(|l| l.max_derivative <= self.derivative_bound)
    }
}

/// Largest `|φ'|` over the grid: central differences inside, one-sided at
/// the ends.
pub fn max_derivative(values: &[f64], h: f64) -> f64 {
    let n = values.len();
    let mut m: f64 = ((values[1] - values[0]) / h).abs().max(((values[n - 1] - values[n - 2]) / h).abs());
    for i in 1..n - 1 {
        m = m.max(((values[i + 1] - values[i - 1]) / (2.0 * h)).abs());
    }
    m
}

/// Profiles at `c_n = (n + 1) c_⋆ / n` for `n = 2, 4, ..., n_max`, each
/// translated so that `φ(0) = κ / 2`, compared on `window`.
pub fn critical_speed_profile(
    nl: &Nonlinearity,
    kernel: &Kernel,
    c_star: f64,
    n_max: u32,
    window: (f64, f64),
    popts: &ProblemOptions,
    sopts: &SolveOptions,
) -> Result<CriticalReport> {
    if n_max < 2 {
        return Err(Error::invalid("n_max", "must be at least 2"));
    }
    let kappa = nl.fixed_points()?.primary();
    let beta = match popts.beta {
        Some(b) => b,
        None => nl.select_beta()?,
    };
    let popts = ProblemOptions {
        beta: Some(beta),
        ..*popts
    };
    let g_sup = nl.consts.g_sup;
    let derivative_bound = (g_sup + g_sup / nl.consts.f_inf_slope) / GreenKernel::profile(c_star, beta).sigma;

    let pts = 4001;
    let ts: Vec<f64> = (0..pts)
        .map(|i| window.0 + (window.1 - window.0) * i as f64 / (pts - 1) as f64)
        .collect();

    let mut levels = Vec::new();
    let mut gaps = Vec::new();
    let mut prev: Option<(u32, Vec<f64>)> = None;
    let mut last = None;
    let mut n = 2;
    while n <= n_max {
        let c = (n + 1) as f64 * c_star / n as f64;
        let problem = WaveProblem::new(nl, kernel, c, &popts)?;
        let (profile, _) = problem.solve_profile(sopts)?;
        let shift = profile.crossing(0.5 * kappa).ok_or_else(|| {
            Error::invalid("profile", format!("never reaches κ/2 = {} at c = {c}", 0.5 * kappa))
        })?;
        let sampled = profile.shifted(shift, &ts);
        levels.push(CriticalLevel {
            n,
            c,
            shift,
            max_derivative: max_derivative(&profile.values, profile.grid.h),
            residual_sup: profile.residual_sup,
            iterations: profile.iterations,
        });
        if let Some((m, p)) = &prev {
            let gap = p.iter().zip(&sampled).fold(0.0f64, |g, (a, b)| g.max((a - b).abs()));
            gaps.push((*m, n, gap));
        }
        prev = Some((n, sampled));
        last = Some(profile);
        n *= 2;
    }
    let (_, normalized) = prev.expect("at least one level");
    Ok(CriticalReport {
        c_star,
        kappa,
        profile: last.expect("at least one level"),
        window: ts,
        normalized,
        levels,
        gaps,
        derivative_bound,
    })
}
