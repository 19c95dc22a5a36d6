use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use semiwave::dispersion::SpeedOptions;
use semiwave::error::Error;
use semiwave::models::Reconstruction;
use semiwave::profile::{
    critical_speed_profile, HypothesisCheck, HypothesisReport, IterationTrace, ProblemOptions, Profile, SolveOptions,
    WaveProblem,
};

use crate::config::RunConfig;
use crate::model::{Extra, Resolved};
use crate::output::{line_chart, write_atomic, Csv, Series};
use crate::{Cli, CliError, Verb};

#[derive(Debug, Clone, Serialize)]
pub struct Warning {
    pub operation: &'static str,
    pub message: String,
}

/// Everything a command reports, written as `report_<verb>.json`.
#[derive(Debug, Serialize)]
pub struct RunReport {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub config_sha256: String,
    pub config: RunConfig,
    pub model: &'static str,
    pub hypotheses: Option<HypothesisReport>,
    pub results: BTreeMap<String, Value>,
    /// Wall-clock seconds per operation.
    pub timings: BTreeMap<String, f64>,
    pub warnings: Vec<Warning>,
    pub outputs: Vec<String>,
    pub exit_code: i32,
}

struct Ctx {
    cfg: RunConfig,
    hash: String,
    out: PathBuf,
    csv: bool,
    svg: bool,
    verbose: bool,
    model: Resolved,
    report: RunReport,
}

impl Ctx {
    fn timed<T>(&mut self, op: &str, f: impl FnOnce(&Resolved) -> T) -> T {
        let start = Instant::now();
        let v = f(&self.model);
        let secs = start.elapsed().as_secs_f64();
        *self.report.timings.entry(op.to_string()).or_default() += secs;
        if self.verbose {
            eprintln!("[{op}] {secs:.3}s");
        }
        v
    }

    fn warn(&mut self, operation: &'static str, message: impl Into<String>) {
        let message = message.into();
        if self.verbose {
            eprintln!("warning [{operation}]: {message}");
        }
        self.report.warnings.push(Warning { operation, message });
    }

    fn result(&mut self, key: &str, v: impl Serialize) {
        let v = serde_json::to_value(v).unwrap_or(Value::Null);
        self.report.results.insert(key.to_string(), v);
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn emit(&mut self, name: &str, contents: &[u8]) -> Result<(), CliError> {
        write_atomic(&self.path(name), contents)?;
        self.report.outputs.push(name.to_string());
        Ok(())
    }

    fn finish(mut self, code: i32) -> Result<i32, CliError> {
        self.report.exit_code = code;
        let name = format!("report_{}.json", self.report.command);
        let text = serde_json::to_string_pretty(&self.report).map_err(|e| CliError::Io(e.to_string()))?;
        write_atomic(&self.path(&name), text.as_bytes())?;
        println!("report: {}", self.path(&name).display());
        for w in &self.report.warnings {
            println!("warning [{}]: {}", w.operation, w.message);
        }
        Ok(code)
    }
}

pub fn execute(cli: &Cli) -> Result<i32, CliError> {
    let path = cli
        .config
        .as_deref()
        .ok_or_else(|| CliError::Config("--config PATH is required".into()))?;
    let raw = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let cfg = RunConfig::parse(&raw)?;
    let hash = format!("{:x}", Sha256::digest(raw.as_bytes()));

    let formats = cli.format.clone().unwrap_or_else(|| cfg.output.formats.clone());
    if let Some(f) = formats.iter().find(|f| *f != "csv" && *f != "svg") {
        return Err(CliError::Config(format!("--format: unknown format `{f}`")));
    }
    let out = cli.out.clone().unwrap_or_else(|| Path::new(&cfg.output.dir).to_path_buf());
    let model = Resolved::new(&cfg.model).map_err(|e| CliError::Config(format!("model: {e}")))?;

    let report = RunReport {
        tool: "semiwave",
        version: env!("CARGO_PKG_VERSION"),
        command: cli.command.name(),
        config_sha256: hash.clone(),
        config: cfg.clone(),
        model: model.name,
        hypotheses: None,
        results: BTreeMap::new(),
        timings: BTreeMap::new(),
        warnings: Vec::new(),
        outputs: Vec::new(),
        exit_code: 0,
    };
    let mut ctx = Ctx {
        cfg,
        hash,
        out,
        csv: formats.iter().any(|f| f == "csv"),
        svg: formats.iter().any(|f| f == "svg"),
        verbose: cli.verbose,
        model,
        report,
    };
    match cli.command {
        Verb::Validate => validate(ctx),
        Verb::Dispersion => dispersion(ctx),
        Verb::Minspeed => minspeed(ctx),
        Verb::Profile => {
            let rep = ctx.timed("validate_hypotheses", |m| m.nl.validate_hypotheses(400));
            ctx.report.hypotheses = Some(rep);
            profile(ctx)
        }
    }
}

fn validate(mut ctx: Ctx) -> Result<i32, CliError> {
    let mut rep = ctx.timed("validate_hypotheses", |m| m.nl.validate_hypotheses(400));
    let mass = ctx.timed("kernel_mass", |m| m.kernel.mass(1e-9));
    rep.checks.push(match mass {
        Ok(m) => HypothesisCheck {
            name: "kernel_mass",
            passed: (m - 1.0).abs() <= 1e-6,
            first_violation: None,
            condition: format!("kernel integrates to {m}"),
        },
        Err(e) => HypothesisCheck {
            name: "kernel_mass",
            passed: false,
            first_violation: None,
            condition: format!("kernel mass not computable: {e}"),
        },
    });
    for c in &rep.checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.condition);
    }
    let ok = rep.all_passed();
    ctx.report.hypotheses = Some(rep);

    match ctx.timed("fixed_points", |m| m.nl.fixed_points()) {
        Ok(fp) => ctx.result("fixed_points", fp),
        Err(e) => ctx.warn("fixed_points", e.to_string()),
    }
    if ok {
        match ctx.model.nl.select_beta() {
            Ok(b) => ctx.result("beta", b),
            Err(e) => ctx.warn("select_beta", e.to_string()),
        }
        ctx.result("upper_bound", ctx.model.nl.upper_bound());
    }
    ctx.finish(if ok { 0 } else { 1 })
}

fn dispersion(mut ctx: Ctx) -> Result<i32, CliError> {
    let chi0 = ctx.model.chi0()?;
    let chi_l = ctx.model.chi_l()?;
    let d = ctx.cfg.dispersion.clone();
    let mut csv = Csv::new(&ctx.hash, &["c", "z", "chi0", "chi_l"]);
    let mut series = Vec::new();
    let mut per_speed = Vec::new();
    for &c in &d.c {
        let hi = d.z_max.unwrap_or_else(|| chi0.scan_limit(c));
        let mut omitted = 0;
        let mut pts = Vec::new();
        for i in 0..d.points {
            let z = d.z_min + (hi - d.z_min) * i as f64 / (d.points - 1) as f64;
            match (chi0.eval(z, c), chi_l.eval(z, c)) {
                (Ok(a), Ok(b)) => {
                    csv.row(&[c, z, a, b]);
                    pts.push((z, a));
                }
                (Err(Error::DomainExceeded { .. }), _) | (_, Err(Error::DomainExceeded { .. })) => omitted += 1,
                (Err(e), _) | (_, Err(e)) => return Err(e.into()),
            }
        }
        if omitted > 0 {
            ctx.warn("dispersion", format!("{omitted} rows outside the transform domain omitted at c = {c}"));
        }
        let opts = Default::default();
        let roots0 = ctx.timed("positive_roots", |_| chi0.positive_roots(c, &opts));
        let roots_l = ctx.timed("positive_roots", |_| chi_l.positive_roots(c, &opts));
        let mut entry = json!({ "c": c, "z_max": hi, "rows": pts.len(), "omitted": omitted });
        match roots0 {
            Ok(r) => entry["chi0_roots"] = serde_json::to_value(r).unwrap_or(Value::Null),
            Err(e) => ctx.warn("positive_roots", format!("χ₀ at c = {c}: {e}")),
        }
        match roots_l {
            Ok(r) => entry["chi_l_roots"] = serde_json::to_value(r).unwrap_or(Value::Null),
            Err(e) => ctx.warn("positive_roots", format!("χ_L at c = {c}: {e}")),
        }
        per_speed.push(entry);
        series.push(Series {
            label: format!("c = {c}"),
            points: pts,
        });
    }
    ctx.result("speeds", per_speed);
    if ctx.csv {
        ctx.emit("dispersion.csv", csv.as_str().as_bytes())?;
    }
    if ctx.svg {
        let svg = line_chart("Characteristic function χ₀(z, c)", "z", "χ₀", &series);
        ctx.emit("dispersion.svg", svg.as_bytes())?;
    }
    ctx.finish(0)
}

fn speed_opts(ctx: &Ctx) -> SpeedOptions {
    SpeedOptions {
        speed_tol: ctx.cfg.minspeed.speed_tol,
        ..Default::default()
    }
}

fn minspeed(mut ctx: Ctx) -> Result<i32, CliError> {
    let chi0 = ctx.model.chi0()?;
    let chi_l = ctx.model.chi_l()?;
    let opts = speed_opts(&ctx);
    let bracket = ctx.cfg.minspeed.bracket;
    let guidance = |e: Error| match e {
        Error::BadBracket { lo, hi } => CliError::Numeric(format!(
            "speed bracket [{lo}, {hi}] does not straddle the minimal speed; widen [minspeed].bracket or drop it to search automatically"
        )),
        e => e.into(),
    };
    let solve = |d: &semiwave::dispersion::DispersionFunction| match bracket {
        Some(b) => d.minimal_speed(b, &opts),
        None => d.minimal_speed_auto(&opts),
    };
    let lower = ctx.timed("minimal_speed", |_| solve(&chi0)).map_err(guidance)?;
    let critical = ctx.timed("minimal_speed", |_| solve(&chi_l)).map_err(guidance)?;
    for w in lower.warnings.iter().chain(&critical.warnings) {
        ctx.warn("minimal_speed", w.clone());
    }
    let ordered = critical.c_min >= lower.c_min - 10.0 * opts.speed_tol;
    if !ordered {
        ctx.warn("minspeed", "critical speed fell below the linear speed");
    }
    let tight = ctx.model.majorant_is_tight();
    println!("c_* = {}  (λ = {})", lower.c_min, lower.lambda_tangent);
    println!("c_⋆ = {}  (λ = {})", critical.c_min, critical.lambda_tangent);
    println!("c_⋆ >= c_*: {ordered}");
    ctx.result("c_lower", &lower);
    ctx.result("c_critical", &critical);
    ctx.result("ordered", ordered);
    ctx.result("majorant_tight", tight);
    ctx.result("gap", critical.c_min - lower.c_min);
    ctx.finish(0)
}

fn profile(mut ctx: Ctx) -> Result<i32, CliError> {
    let p = ctx.cfg.profile.clone();
    let chi_l = ctx.model.chi_l()?;
    let opts = speed_opts(&ctx);
    let c_star = ctx.timed("minimal_speed", |_| chi_l.minimal_speed_auto(&opts))?.c_min;
    ctx.result("c_critical", c_star);
    let popts = ProblemOptions {
        beta: p.beta,
        reg_n: p.reg_n,
        h: p.h,
        half_width: p.half_width,
        delta: p.delta,
        ..Default::default()
    };
    let sopts = SolveOptions {
        tol: p.tol,
        max_iter: p.max_iter,
        residual_tol: p.residual_tol,
        ..Default::default()
    };

    if p.critical {
        return critical(ctx, c_star, &popts, &sopts);
    }

    let c = p.c.unwrap_or(p.c_factor * c_star);
    ctx.result("c", c);
    if c < c_star {
        ctx.warn("profile", format!("c = {c} is below the critical speed {c_star}; the construction is expected to fail"));
    }
    let problem = match ctx.timed("wave_problem", |m| WaveProblem::new(&m.nl, &m.kernel, c, &popts)) {
        Ok(pb) => pb,
        Err(e) => {
            ctx.warn("wave_problem", e.to_string());
            return ctx.finish(2);
        }
    };
    ctx.result(
        "problem",
        json!({
            "beta": problem.beta(), "lambda": problem.lambda(), "lambda2": problem.lambda2(),
            "m": problem.m(), "delta": problem.delta(), "reg_n": problem.reg_n(),
            "upper_bound": problem.upper(), "grid": problem.grid(),
        }),
    );
    let (prof, trace) = match ctx.timed("solve_profile", |_| problem.solve_profile(&sopts)) {
        Ok(v) => v,
        Err(Error::NotConverged(partial)) => {
            ctx.warn("solve_profile", format!("no convergence after {} iterations", partial.trace.len()));
            (partial.profile, partial.trace)
        }
        Err(e) => {
            ctx.warn("solve_profile", e.to_string());
            return ctx.finish(2);
        }
    };
    if !prof.converged {
        ctx.warn("solve_profile", format!("not converged: residual {:e}", prof.residual_sup));
    }
    diagnostics(&mut ctx, &problem, &prof, &trace);
    let psi = reconstruct(&mut ctx, &prof, c)?;
    write_profile(&mut ctx, &problem, &prof, psi.as_ref().map(|r| r.psi.as_slice()))?;
    println!(
        "c = {c}: converged = {}, iterations = {}, residual = {:e}",
        prof.converged, prof.iterations, prof.residual_sup
    );
    ctx.finish(if prof.converged { 0 } else { 2 })
}

fn diagnostics(ctx: &mut Ctx, problem: &WaveProblem, prof: &Profile, trace: &IterationTrace) {
    let kappa = problem.nonlinearity().fixed_points().map(|r| r.primary()).ok();
    let rel_tail = (prof.tail_rate - problem.lambda()).abs() / problem.lambda();
    if rel_tail > 0.05 {
        ctx.warn("tail_rate", format!("left tail rate {} differs from λ = {}", prof.tail_rate, problem.lambda()));
    }
    let persistent = kappa.map(|k| prof.persistence_check(0.5 * k));
    if persistent == Some(false) {
        ctx.warn("persistence_check", "profile does not stay above κ/2 on the right quarter");
    }
    let clipping = trace.trailing_clips(10).iter().any(|&n| n > 0);
    if clipping {
        ctx.warn("solve_profile", "clipping still active in the final iterations");
    }
    ctx.result(
        "profile",
        json!({
            "converged": prof.converged, "iterations": prof.iterations,
            "residual_sup": prof.residual_sup, "tail_rate": prof.tail_rate,
            "tail_rate_relative_error": rel_tail, "max_phi": prof.max_value(),
            "kappa": kappa, "persistent": persistent,
            "max_sandwich_violation": trace.max_violation(), "damped": trace.damped(),
            "clipping_active": clipping,
        }),
    );
}

fn reconstruct(ctx: &mut Ctx, prof: &Profile, c: f64) -> Result<Option<Reconstruction>, CliError> {
    let rec = match ctx.model.extra.clone() {
        Extra::None => return Ok(None),
        Extra::Epidemic(m) => ctx.timed("epidemic_reconstruct", |_| m.reconstruct(prof, c)),
        Extra::Population(m) => ctx.timed("population_reconstruct", |_| m.reconstruct(prof, c))?,
    };
    if !rec.within_bound(1e-6) {
        ctx.warn("reconstruct", format!("sup ψ = {} exceeds its bound {:?}", rec.sup, rec.bound));
    }
    if !rec.nonnegative {
        ctx.warn("reconstruct", "ψ takes negative values");
    }
    ctx.result(
        "reconstruction",
        json!({ "sup": rec.sup, "bound": rec.bound, "left_tail": rec.left_tail, "nonnegative": rec.nonnegative }),
    );
    Ok(Some(rec))
}

fn write_profile(ctx: &mut Ctx, problem: &WaveProblem, prof: &Profile, psi: Option<&[f64]>) -> Result<(), CliError> {
    let (sub, sup) = problem.sub_super();
    let res = problem.residual_local(&prof.values);
    let nodes = prof.grid.nodes();
    if ctx.csv {
        let mut cols = vec!["t", "phi", "sub", "super", "residual_local"];
        if psi.is_some() {
            cols.push("psi");
        }
        let mut csv = Csv::new(&ctx.hash, &cols);
        for i in 0..nodes.len() {
            let mut row = vec![nodes[i], prof.values[i], sub[i], sup[i], res[i]];
            if let Some(p) = psi {
                row.push(p[i]);
            }
            csv.row(&row);
        }
        ctx.emit("profile.csv", csv.as_str().as_bytes())?;
    }
    if ctx.svg {
        let (a, b) = prof.interior;
        let step = ((b - a) / 1500).max(1);
        let pick = |v: &[f64]| -> Vec<(f64, f64)> { (a..b).step_by(step).map(|i| (nodes[i], v[i])).collect() };
        let cap: Vec<f64> = sup.iter().map(|v| v.min(problem.upper())).collect();
        let mut series = vec![
            Series { label: "φ".into(), points: pick(&prof.values) },
            Series { label: "φ⁻".into(), points: pick(&sub) },
            Series { label: "min(φ⁺, U)".into(), points: pick(&cap) },
        ];
        if let Some(p) = psi {
            series.push(Series { label: "ψ".into(), points: pick(p) });
        }
        let svg = line_chart(&format!("Wave profile at c = {}", prof.c), "t", "value", &series);
        ctx.emit("profile.svg", svg.as_bytes())?;
    }
    Ok(())
}

fn critical(mut ctx: Ctx, c_star: f64, popts: &ProblemOptions, sopts: &SolveOptions) -> Result<i32, CliError> {
    let p = ctx.cfg.profile.clone();
    let rep = match ctx.timed("critical_speed_profile", |m| {
        critical_speed_profile(&m.nl, &m.kernel, c_star, p.n_max, p.window, popts, sopts)
    }) {
        Ok(r) => r,
        Err(e) => {
            ctx.warn("critical_speed_profile", e.to_string());
            return ctx.finish(2);
        }
    };
    if !rep.bound_holds() {
        ctx.warn("critical_speed_profile", "derivative bound violated");
    }
    ctx.result(
        "critical",
        json!({
            "kappa": rep.kappa, "levels": rep.levels, "gaps": rep.gaps,
            "derivative_bound": rep.derivative_bound, "bound_holds": rep.bound_holds(),
        }),
    );
    for (a, b, g) in &rep.gaps {
        println!("n = {a} vs {b}: sup gap {g:e}");
    }
    if ctx.csv {
        let mut csv = Csv::new(&ctx.hash, &["t", "phi"]);
        for (t, v) in rep.window.iter().zip(&rep.normalized) {
            csv.row(&[*t, *v]);
        }
        ctx.emit("critical.csv", csv.as_str().as_bytes())?;
    }
    if ctx.svg {
        let pts = rep.window.iter().copied().zip(rep.normalized.iter().copied()).collect();
        let n = rep.levels.last().map_or(0, |l| l.n);
        let svg = line_chart(
            &format!("Approach to the critical speed {c_star:.6}"),
            "t",
            "φ",
            &[Series { label: format!("n = {n}"), points: pts }],
        );
        ctx.emit("critical.svg", svg.as_bytes())?;
    }
    ctx.finish(0)
}
