//! End-to-end acceptance checks. Each test prints one `criterion N: PASS|FAIL`
//! line before asserting, so `cargo test --test acceptance -- --nocapture`
//! gives a readable scorecard.

use std::time::Instant;

use semiwave::dispersion::{DispersionFunction, RootOptions, SpeedOptions};
use semiwave::green::GreenKernel;
use semiwave::kernels::{Kernel, SpatialLaw, TemporalLaw};
use semiwave::models::{marine_preset, EpidemicModel, PopulationModel, SpeedPair};
use semiwave::profile::{
    critical_speed_profile, Birth, Grid, K2Convolution, Nonlinearity, ProblemOptions, Removal, SolveOptions,
    WaveProblem,
};

fn verdict(n: u32, ok: bool, detail: String) {
    println!("criterion {n}: {} {detail}", if ok { "PASS" } else { "FAIL" });
}

fn bench_nl() -> Nonlinearity {
    Nonlinearity::new(Removal::Linear { rate: 1.0 }, Birth::BevertonHolt { p: 2.0, b: 1.0 })
}

fn bench_kernel() -> Kernel {
    Kernel::separable(
        TemporalLaw::Exponential { rate: 1.0 },
        SpatialLaw::Gaussian { mean: 0.0, variance: 1.0 },
    )
    .unwrap()
}

fn critical_speed(nl: &Nonlinearity, k: &Kernel) -> f64 {
    let c = nl.consts;
    DispersionFunction::new(c.f_inf_slope, c.l, k.clone())
        .unwrap()
        .minimal_speed_auto(&SpeedOptions::default())
        .unwrap()
        .c_min
}

fn sup_abs(v: impl Iterator<Item = f64>) -> f64 {
    v.fold(0.0, |m, x| m.max(x.abs()))
}

#[test]
fn criterion_1_marine_transform_identity() {
    let (v, d, mu) = (0.02, 100.0, 0.001);
    let k = Kernel::marine(v, d, mu).unwrap();
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for c in [0.5, 1.5, 2.854, 3.0, 5.0] {
        let hi = k.abscissa(c);
        for i in 0..20 {
            let z = 0.95 * hi * i as f64 / 19.0;
            let exact = mu / (mu + (c - v) * z - d * z * z);
            let quad = k.transform_quadrature(z, c, 1e-10 * exact).unwrap();
            worst = worst.max((quad - exact).abs() / exact);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let ok = worst < 1e-6 && secs < 10.0;
    verdict(1, ok, format!("max relative error {worst:.2e} over 100 points in {secs:.2}s"));
    assert!(ok);
}

/// Smallest grid speed at which `min_z ℛ(z, c) <= 0`, with `ℛ` written out
/// from the closed-form marine transform and `z` stepped in thousandths of
/// the convergence abscissa.
fn brute_force_marine_speed(lo: f64, hi: f64) -> f64 {
    let (v, d, mu, q, p) = (0.02, 100.0, 0.001, 0.05, 2.0);
    let chi = |z: f64, c: f64| z * z - c * z - q + p * mu / (mu + (c - v) * z - d * z * z);
    let mut c = lo;
    while c <= hi {
        let b = c - v;
        let abscissa = (b + (b * b + 4.0 * d * mu).sqrt()) / (2.0 * d);
        if (1..1000).any(|i| chi(abscissa * i as f64 * 1e-3, c) <= 0.0) {
            return c;
        }
        c += 1e-3;
    }
    f64::NAN
}

#[test]
fn criterion_2_marine_minimal_speed() {
    let start = Instant::now();
    let m = marine_preset(0.02, 100.0, 0.001, 0.05, 2.0).unwrap();
    let opts = RootOptions::default();
    let at3 = m.dispersion.positive_roots(3.0, &opts).unwrap();
    let (_, min_2854) = m.dispersion.minimum(2.854, &opts).unwrap();
    let speed = m.dispersion.minimal_speed_auto(&SpeedOptions::default()).unwrap().c_min;
    let oracle = brute_force_marine_speed(2.80, 2.90);
    let secs = start.elapsed().as_secs_f64();

    let ok = at3.roots.len() == 2
        && !at3.is_double
        && min_2854.abs() < 5e-3
        && (2.84..=2.87).contains(&speed)
        && (speed - oracle).abs() <= 1e-3
        && secs < 30.0;
    verdict(
        2,
        ok,
        format!(
            "roots at c=3 {:?}, min at c=2.854 {min_2854:.3e}, c_min {speed:.7} vs scan {oracle:.3} in {secs:.2}s",
            at3.roots
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_3_kpp_limit() {
    let start = Instant::now();
    let k = Kernel::separable(TemporalLaw::discrete(0.0), SpatialLaw::Gaussian { mean: 0.0, variance: 1e-3 }).unwrap();
    let mut detail = Vec::new();
    let mut ok = true;
    for (q, p) in [(1.0, 2.0), (0.05, 2.0)] {
        let c = DispersionFunction::new(q, p, k.clone())
            .unwrap()
            .minimal_speed_auto(&SpeedOptions::default())
            .unwrap()
            .c_min;
        let kpp = 2.0 * f64::sqrt(p - q);
        let rel = (c - kpp).abs() / kpp;
        ok &= rel < 0.01;
        detail.push(format!("(q,p)=({q},{p}): {c:.6} vs {kpp:.6}, rel {rel:.1e}"));
    }
    let secs = start.elapsed().as_secs_f64();
    ok &= secs < 10.0;
    verdict(3, ok, format!("{} in {secs:.2}s", detail.join("; ")));
    assert!(ok);
}

#[test]
fn criterion_4_green_identity() {
    let marine = marine_preset(0.02, 100.0, 0.001, 0.05, 2.0).unwrap().dispersion;
    let bench = DispersionFunction::new(1.0, 2.0, bench_kernel()).unwrap();
    let local = DispersionFunction::new(1.0, 2.0, Kernel::local()).unwrap();
    let cases = [(&bench, 3.0, 1.8), (&marine, 1.0, 3.0), (&local, 2.5, -0.7)];
    let mut ok = true;
    let mut detail = Vec::new();
    for (chi, beta, c) in cases {
        let upper = GreenKernel::profile(c, beta).mu.min(chi.kernel().domain(c).usable_hi());
        let zs: Vec<f64> = (0..50).map(|i| 0.95 * upper * i as f64 / 49.0).collect();
        let r = chi.chi_identity_check(beta, c, &zs).unwrap();
        let exact = |v: f64| (v - r.expected_chi0).abs() <= 4.0 * f64::EPSILON * r.expected_chi0.abs();
        let pass = r.max_discrepancy < 1e-10 && r.expected_chi0 < 0.0 && exact(r.chi0_integral) && exact(r.chi0_ratio);
        ok &= pass;
        detail.push(format!("β={beta} c={c}: {:.1e}", r.max_discrepancy));
    }
    verdict(4, ok, detail.join("; "));
    assert!(ok);
}

fn bench_problem(h: Option<f64>) -> WaveProblem {
    let nl = bench_nl();
    let k = bench_kernel();
    let c = 1.5 * critical_speed(&nl, &k);
    let opts = ProblemOptions { h, ..Default::default() };
    WaveProblem::new(&nl, &k, c, &opts).unwrap()
}

#[test]
fn criterion_5_operator_invariants() {
    let pb = bench_problem(None);
    let (a, b) = pb.interior();
    let kappa = pb.nonlinearity().fixed_points().unwrap().primary();

    let ones = vec![kappa; pb.grid().n];
    let image = pb.apply_a(&ones);
    let constant_err = sup_abs((a..b).map(|i| image[i] - kappa));

    let (_, sup) = pb.sub_super();
    let lsup = pb.apply_l(&sup);
    let grid = pb.grid();
    let lin_err = sup_abs((a..b).filter(|&i| grid.node(i) <= 0.0).map(|i| lsup[i] - sup[i]));

    let (_, trace) = pb.solve_profile(&SolveOptions::default()).unwrap();
    let violation = trace.max_violation();

    let ok = constant_err < 1e-6 && lin_err < 1e-5 && violation < 1e-5;
    verdict(
        5,
        ok,
        format!("|A(κ)-κ| {constant_err:.1e}, |Lφ⁺-φ⁺| {lin_err:.1e}, max violation {violation:.1e}"),
    );
    assert!(ok);
}

#[test]
fn criterion_6_benchmark_profile() {
    let start = Instant::now();
    let pb = bench_problem(None);
    let (prof, _) = pb.solve_profile(&SolveOptions::default()).unwrap();
    let fine = bench_problem(Some(0.5 * pb.grid().h));
    let (fine_prof, _) = fine.solve_profile(&SolveOptions::default()).unwrap();
    let secs = start.elapsed().as_secs_f64();

    let n = prof.values.len();
    let right_min = prof.values[3 * n / 4..].iter().copied().fold(f64::INFINITY, f64::min);
    let tail_err = (prof.tail_rate - pb.lambda()).abs() / pb.lambda();
    let cap = pb.nonlinearity().upper_bound() + 1e-6;
    let ratio = prof.residual_sup / fine_prof.residual_sup;

    let ok = prof.converged
        && prof.iterations <= 2000
        && prof.residual_sup < 1e-4
        && tail_err < 0.05
        && right_min > 0.5
        && prof.max_value() <= cap
        && ratio >= 3.0
        && secs < 60.0;
    verdict(
        6,
        ok,
        format!(
            "{} iterations, residual {:.2e}, tail error {tail_err:.1e}, right min {right_min:.4}, \
             max φ {:.8}, halving ratio {ratio:.2}, {secs:.1}s",
            prof.iterations,
            prof.residual_sup,
            prof.max_value()
        ),
    );
    assert!(ok);
}

/// `y'' = c y' + y - 2y/(1+y)`, integrated backwards from the saddle at 1
/// along its stable direction with classical RK4. Returns `(t, y)` samples.
fn shooting_oracle(c: f64, dt: f64, t_end: f64) -> Vec<(f64, f64)> {
    let rhs = |y: f64, p: f64| (p, c * p + y - 2.0 * y / (1.0 + y));
    // Linearization at 1: z² - c z - (1 - g'(1)) = 0 with g'(1) = 1/2.
    let nu = 0.5 * (c - (c * c + 2.0).sqrt());
    let eta = 1e-9;
    let (mut y, mut p) = (1.0 - eta, -eta * nu);
    let mut t = 0.0;
    let mut out = vec![(t, y)];
    let s = -dt;
    while t > -t_end && y > 1e-12 {
        let (k1y, k1p) = rhs(y, p);
        let (k2y, k2p) = rhs(y + 0.5 * s * k1y, p + 0.5 * s * k1p);
        let (k3y, k3p) = rhs(y + 0.5 * s * k2y, p + 0.5 * s * k2p);
        let (k4y, k4p) = rhs(y + s * k3y, p + s * k3p);
        y += s / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
        p += s / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
        t += s;
        out.push((t, y));
    }
    out.reverse();
    out
}

fn half_crossing(samples: &[(f64, f64)]) -> f64 {
    let i = samples.iter().position(|&(_, y)| y >= 0.5).unwrap();
    let (t0, y0) = samples[i - 1];
    let (t1, y1) = samples[i];
    t0 + (0.5 - y0) / (y1 - y0) * (t1 - t0)
}

fn interpolate(samples: &[(f64, f64)], t: f64) -> f64 {
    let i = samples.partition_point(|&(s, _)| s < t).clamp(1, samples.len() - 1);
    let (t0, y0) = samples[i - 1];
    let (t1, y1) = samples[i];
    y0 + (t - t0) / (t1 - t0) * (y1 - y0)
}

#[test]
fn criterion_7_local_equation_oracle() {
    let c = 3.0;
    let pb = WaveProblem::new(&bench_nl(), &Kernel::local(), c, &ProblemOptions::default()).unwrap();
    let (prof, _) = pb.solve_profile(&SolveOptions::default()).unwrap();
    let oracle = shooting_oracle(c, 1e-3, 200.0);
    let t_oracle = half_crossing(&oracle);
    let t_prof = prof.crossing(0.5).unwrap();

    let ts: Vec<f64> = (0..=4000).map(|i| -20.0 + 40.0 * i as f64 / 4000.0).collect();
    let ours = prof.shifted(t_prof, &ts);
    let gap = sup_abs(ts.iter().zip(&ours).map(|(&t, &v)| v - interpolate(&oracle, t + t_oracle)));
    let ok = prof.converged && gap < 1e-3;
    verdict(7, ok, format!("sup gap to RK4 shooting {gap:.2e} on [-20, 20]"));
    assert!(ok);
}

#[test]
fn criterion_8_critical_speed() {
    let nl = bench_nl();
    let k = bench_kernel();
    let c_star = critical_speed(&nl, &k);
    let rep = critical_speed_profile(
        &nl,
        &k,
        c_star,
        16,
        (-20.0, 20.0),
        &ProblemOptions::default(),
        &SolveOptions::default(),
    )
    .unwrap();
    let gap = rep.gaps.iter().find(|g| g.0 == 8 && g.1 == 16).map(|g| g.2).unwrap();
    let steepest = rep.levels.iter().fold(0.0f64, |m, l| m.max(l.max_derivative));
    let ok = gap < 5e-2 && rep.bound_holds();
    verdict(
        8,
        ok,
        format!(
            "gap(8,16) {gap:.3e}, max |φ'| {steepest:.4} <= bound {:.4}",
            rep.derivative_bound
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_9_applications() {
    // Epidemic with the default preset parameters.
    let epi_nl = Nonlinearity::new(Removal::Linear { rate: 1.0 }, Birth::BevertonHolt { p: 4.0, b: 1.0 });
    let alpha = 2.0;
    let epi = EpidemicModel::new(
        alpha,
        TemporalLaw::discrete(0.5),
        SpatialLaw::Gaussian { mean: 0.0, variance: 1.0 },
        epi_nl.clone(),
    )
    .unwrap();
    let epi_speeds = epi.speeds(&SpeedOptions::default()).unwrap();
    let c = 1.5 * epi_speeds.c_critical.c_min;
    let (prof, _) = epi
        .wave_problem(c, &ProblemOptions::default())
        .unwrap()
        .solve_profile(&SolveOptions::default())
        .unwrap();
    let rec = epi.reconstruct(&prof, c);
    let psi_bound = epi_nl.consts.g_sup / alpha;
    let bound_ok = rec.sup <= psi_bound + 1e-6;

    let still = epi.reconstruct(&prof, 0.0);
    let still_err = prof
        .values
        .iter()
        .zip(&still.psi)
        .map(|(&v, &p)| (p - epi_nl.g(v) / alpha).abs() / (epi_nl.g(v) / alpha).abs().max(f64::MIN_POSITIVE))
        .fold(0.0f64, f64::max);
    let still_ok = still_err <= f64::EPSILON;

    // Population: ℋ of a constant away from the left zero extension.
    let pop = PopulationModel::new(1.0, 1.0, bench_kernel(), bench_nl()).unwrap();
    let grid = Grid::new(-80.0, 80.0, 0.02).unwrap();
    let cpop = 2.0;
    let reach = K2Convolution::new(&pop.kernel().projection(cpop), grid.h, grid.n).unwrap().support_radius();
    let hk = pop.h_operator(&grid, &vec![1.0; grid.n], cpop).unwrap();
    let h_err = sup_abs(hk[grid.steps(reach) + 1..].iter().copied());
    let h_ok = h_err < 1e-8;

    // Speed ordering, and equality whenever the majorant is tight.
    let opts = SpeedOptions::default();
    let marine = marine_preset(0.02, 100.0, 0.001, 0.05, 2.0).unwrap();
    let chi_l = |nl: &Nonlinearity, k: &Kernel| {
        DispersionFunction::new(nl.consts.f_inf_slope, nl.consts.l, k.clone()).unwrap()
    };
    let chi_0 = |nl: &Nonlinearity, k: &Kernel| {
        DispersionFunction::new(nl.consts.f_prime0, nl.consts.g_prime0, k.clone()).unwrap()
    };
    let loose = bench_nl().with_majorant(2.5);
    let presets: Vec<(&str, SpeedPair, bool)> = vec![
        (
            "marine",
            SpeedPair::compute(&marine.dispersion, &chi_l(&marine.nonlinearity, &marine.kernel), &opts).unwrap(),
            true,
        ),
        ("epidemic", epi_speeds, true),
        ("population", pop.speeds(&opts).unwrap(), true),
        (
            "scalar",
            SpeedPair::compute(&chi_0(&bench_nl(), &bench_kernel()), &chi_l(&bench_nl(), &bench_kernel()), &opts)
                .unwrap(),
            true,
        ),
        (
            "scalar, L = 2.5",
            SpeedPair::compute(&chi_0(&loose, &bench_kernel()), &chi_l(&loose, &bench_kernel()), &opts).unwrap(),
            false,
        ),
    ];
    let mut order_ok = true;
    let mut speeds = Vec::new();
    for (name, pair, tight) in &presets {
        let (lo, hi) = (pair.c_lower.c_min, pair.c_critical.c_min);
        order_ok &= pair.ordered(1e-9);
        if *tight {
            order_ok &= (hi - lo).abs() <= 1e-3;
        }
        speeds.push(format!("{name} {lo:.5}/{hi:.5}"));
    }

    let ok = bound_ok && still_ok && h_ok && order_ok;
    verdict(
        9,
        ok,
        format!(
            "sup ψ {:.6} <= {psi_bound}, c=0 rel err {still_err:.1e}, |ℋ1| {h_err:.1e}, speeds {}",
            rec.sup,
            speeds.join(", ")
        ),
    );
    assert!(ok);
}
