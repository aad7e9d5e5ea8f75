use std::io::Write;

use qvi_core::analysis::{
    check_pseudo_pair, estimate_constants, linear_monotonicity_modulus, pair_modulus_linear,
    sample_lipschitz, sample_pair_modulus, Constant, ProblemConstants, SamplingPlan, Source,
};
use qvi_core::field::{FnMap, Identity, Map, VectorField};
use qvi_core::library;
use qvi_core::model::QviProblem;
use qvi_core::problem_file::{load_problem, save_problem, Problem};
use qvi_core::solvers::{
    fit_linear_rate, solve_alg1, solve_catching_up, solve_tseng, solve_zero_alg3, step_from_constants,
    sweep_trajectory, Record, SolveReport, SolverConfig, Status, StepSize, SweepScheme, TsengVariant,
    ZeroProblem,
};
use qvi_core::{Matrix, Vector};

use crate::output::{format_point, report_csv, summary_json, trajectory_csv, write_file};
use crate::{
    AnalyzeArgs, Algorithm, Command, Estimate, RunArgs, Scheme, ShowArgs, SolveArgs, SweepArgs, ZeroArgs,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitCode {
    Success = 0,
    Usage = 1,
    Diverged = 2,
    IterationCap = 3,
}

type CmdResult<T> = Result<T, String>;

fn core<T>(r: qvi_core::Result<T>) -> CmdResult<T> {
    r.map_err(|e| e.to_string())
}

pub fn execute(command: &Command, out: &mut dyn Write) -> CmdResult<ExitCode> {
    match command {
        Command::Solve(a) => solve(a, out),
        Command::Sweep(a) => sweep(a, out),
        Command::Analyze(a) => analyze(a, out),
        Command::Zero(a) => zero(a, out),
        Command::Show(a) => show(a, out),
        Command::List => {
            for name in library::builtin_names() {
                emit(out, name)?;
            }
            Ok(ExitCode::Success)
        }
    }
}

fn emit(out: &mut dyn Write, line: impl AsRef<str>) -> CmdResult<()> {
    writeln!(out, "{}", line.as_ref()).map_err(|e| format!("cannot write output: {e}"))
}

fn load(spec: &str) -> CmdResult<Problem> {
    match spec.strip_prefix("builtin:") {
        Some(name) => core(library::builtin(name)),
        None => {
            let text = std::fs::read_to_string(spec).map_err(|e| format!("cannot read {spec}: {e}"))?;
            core(load_problem(&text)).map_err(|e| format!("{spec}: {e}"))
        }
    }
}

fn load_qvi(spec: &str) -> CmdResult<QviProblem> {
    match load(spec)? {
        Problem::Qvi(p) => Ok(p),
        Problem::Zero(_) => Err(format!("{spec} is a zero problem; use the zero command or --algorithm alg3")),
    }
}

fn load_zero(spec: &str) -> CmdResult<ZeroProblem> {
    match load(spec)? {
        Problem::Zero(z) => Ok(z),
        Problem::Qvi(_) => Err(format!("{spec} is not a zero problem")),
    }
}

fn parse_point(text: &str, dim: usize) -> CmdResult<Vector> {
    let values = text
        .split(',')
        .map(|s| {
            let s = s.trim();
            match s.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(format!("invalid coordinate {s:?} in --x0")),
            }
        })
        .collect::<CmdResult<Vec<f64>>>()?;
    if values.len() != dim {
        return Err(format!("--x0 has {} coordinates but the problem has dimension {dim}", values.len()));
    }
    Ok(Vector::from_vec(values))
}

fn parse_step(text: &str) -> CmdResult<StepSize> {
    if text == "auto" {
        return Ok(StepSize::Auto);
    }
    match text.parse::<f64>() {
        Ok(h) if h > 0.0 && h.is_finite() => Ok(StepSize::Fixed(h)),
        _ => Err(format!("--h must be \"auto\" or a positive number, got {text:?}")),
    }
}

fn config(run: &RunArgs, h: StepSize, seed: u64) -> SolverConfig {
    SolverConfig {
        h,
        tol: run.tol,
        max_iter: run.max_iter,
        record: if run.out.is_some() { Record::Iterates } else { Record::Residuals },
        seed,
        ..SolverConfig::default()
    }
}

fn finish(report: &SolveReport, dim: usize, run: &RunArgs, out: &mut dyn Write) -> CmdResult<ExitCode> {
    if let Some(path) = &run.out {
        write_file(path, &report_csv(report, dim))?;
    }
    if let Some(path) = &run.summary {
        write_file(path, &summary_json(report))?;
    }
    emit(out, format!("status: {}", report.status.as_str()))?;
    emit(out, format!("iterations: {}", report.iterations))?;
    emit(out, format!("x_final: {}", format_point(&report.x_final)))?;
    emit(out, format!("residual: {:e}", report.final_residual))?;
    emit(out, format!("h: {}", report.h_used))?;
    match report.rate_estimate {
        Some(r) => emit(out, format!("rate: {r:.6}"))?,
        None => emit(out, "rate: n/a")?,
    }
    Ok(match report.status {
        Status::Converged => ExitCode::Success,
        Status::Diverged => ExitCode::Diverged,
        Status::IterationCap => ExitCode::IterationCap,
    })
}

fn solve(args: &SolveArgs, out: &mut dyn Write) -> CmdResult<ExitCode> {
    let problem = load(&args.problem.problem)?;
    let x0 = parse_point(&args.run.x0, problem.dim())?;
    let h = parse_step(&args.h)?;
    let cfg = config(&args.run, h, args.seed);
    let report = match (&problem, args.algorithm) {
        (Problem::Zero(z), Algorithm::Alg3) => {
            if h == StepSize::Auto {
                return Err("alg3 needs a numeric --h".into());
            }
            core(solve_zero_alg3(z, &x0, &cfg))?
        }
        (Problem::Zero(_), _) => return Err("zero problems are solved with --algorithm alg3".into()),
        (Problem::Qvi(_), Algorithm::Alg3) => return Err("alg3 needs a zero problem (kind \"zero\")".into()),
        (Problem::Qvi(p), Algorithm::Alg1) => core(solve_alg1(p, &x0, &cfg))?,
        (Problem::Qvi(p), Algorithm::Catchup) => core(solve_catching_up(p, &x0, &cfg))?,
        (Problem::Qvi(p), Algorithm::Tseng) => {
            let variant = if args.literal_tseng {
                TsengVariant::Literal
            } else {
                TsengVariant::Standard
            };
            core(solve_tseng(p, &x0, &cfg, variant))?
        }
    };
    finish(&report, problem.dim(), &args.run, out)
}

fn zero(args: &ZeroArgs, out: &mut dyn Write) -> CmdResult<ExitCode> {
    let z = load_zero(&args.problem.problem)?;
    let x0 = parse_point(&args.run.x0, z.dim())?;
    if !(args.h > 0.0 && args.h.is_finite()) {
        return Err(format!("--h must be positive, got {}", args.h));
    }
    let report = core(solve_zero_alg3(&z, &x0, &config(&args.run, StepSize::Fixed(args.h), 0)))?;
    finish(&report, z.dim(), &args.run, out)
}

fn sweep(args: &SweepArgs, out: &mut dyn Write) -> CmdResult<ExitCode> {
    let p = load_qvi(&args.problem.problem)?;
    let x0 = parse_point(&args.x0, p.dim())?;
    let scheme = match args.scheme {
        Scheme::SemiImplicit => SweepScheme::SemiImplicit,
        Scheme::CatchingUp => SweepScheme::CatchingUp,
    };
    let traj = core(sweep_trajectory(&p, &x0, args.h, args.t_end, scheme))?;
    if let Some(path) = &args.out {
        write_file(path, &trajectory_csv(&traj, p.dim()))?;
    }
    emit(out, format!("steps: {}", traj.states.len() - 1))?;
    emit(out, format!("t_final: {}", traj.times.last().copied().unwrap_or(0.0)))?;
    emit(out, format!("x_final: {}", format_point(traj.terminal())))?;
    emit(out, format!("residual: {:e}", traj.residuals.last().copied().unwrap_or(0.0)))?;
    match fit_linear_rate(&traj.speeds[1..]) {
        Ok(fit) => emit(
            out,
            format!("decay_rate: {:.6} (r_squared {:.4})", fit.continuous_rate(args.h), fit.r_squared),
        )?,
        Err(_) => emit(out, "decay_rate: n/a")?,
    }
    if traj.diverged {
        emit(out, "status: diverged")?;
        Ok(ExitCode::Diverged)
    } else {
        emit(out, "status: completed")?;
        Ok(ExitCode::Success)
    }
}

fn show(args: &ShowArgs, out: &mut dyn Write) -> CmdResult<ExitCode> {
    let p = load(&args.problem.problem)?;
    emit(out, core(save_problem(&p))?)?;
    Ok(ExitCode::Success)
}

fn describe(c: &Constant, lower_bias: bool) -> String {
    match c.source {
        Source::Sampled if lower_bias => format!("{:.6} (sampled, lower bound on the true value)", c.value),
        Source::Sampled => format!("{:.6} (sampled, upper bound on the true value)", c.value),
        other => format!("{:.6} ({other})", c.value),
    }
}

/// Lipschitz estimates are dropped only when zero.
fn print_lipschitz(out: &mut dyn Write, label: &str, c: Option<Constant>) -> CmdResult<()> {
    match c {
        Some(c) => emit(out, format!("{label} = {}", describe(&c, true))),
        None => emit(out, format!("{label} = 0 (constant map)")),
    }
}

/// Moduli; a missing value is recomputed raw to show how far from positive it is.
fn print_modulus(
    out: &mut dyn Write,
    label: &str,
    c: Option<Constant>,
    raw: impl FnOnce() -> CmdResult<(f64, Source)>,
) -> CmdResult<()> {
    match c {
        Some(c) => emit(out, format!("{label} = {}", describe(&c, false))),
        None => {
            let (value, source) = raw()?;
            emit(
                out,
                format!("{label} = {value:.6} ({source}; not positive, no strong monotonicity)"),
            )
        }
    }
}

fn pair_raw(f: &VectorField, w_matrix: Option<Matrix>, w: &dyn Map, plan: &SamplingPlan) -> CmdResult<(f64, Source)> {
    Ok(match (f.as_matrix(), w_matrix) {
        (Some(fm), Some(wm)) => (core(pair_modulus_linear(fm, &wm))?, Source::Spectral),
        _ => (core(sample_pair_modulus(f, w, plan))?, Source::Sampled),
    })
}

fn wants(e: Estimate, which: Estimate) -> bool {
    e == which || e == Estimate::All
}

fn analyze(args: &AnalyzeArgs, out: &mut dyn Write) -> CmdResult<ExitCode> {
    let plan = SamplingPlan {
        seed: args.seed,
        count: args.samples,
        ..SamplingPlan::default()
    };
    match load(&args.problem.problem)? {
        Problem::Qvi(p) => analyze_qvi(&p, args.estimate, &plan, out)?,
        Problem::Zero(z) => analyze_zero(&z, args.estimate, &plan, out)?,
    }
    Ok(ExitCode::Success)
}

fn analyze_qvi(p: &QviProblem, e: Estimate, plan: &SamplingPlan, out: &mut dyn Write) -> CmdResult<()> {
    let n = p.dim();
    let c: ProblemConstants = core(estimate_constants(p, plan))?;
    let v = p.v();
    let w = FnMap::new(n, |x: &Vector| Ok(x - v.eval(x)?));
    let w_matrix = v.as_matrix().map(|m| Matrix::identity(n, n) - m);
    if wants(e, Estimate::BigL) {
        print_lipschitz(out, "L (Lipschitz constant of f)", c.lipschitz_f)?;
    }
    if wants(e, Estimate::SmallL) {
        print_lipschitz(out, "l (Lipschitz constant of v)", c.lipschitz_v)?;
    }
    if wants(e, Estimate::LTilde) {
        print_lipschitz(out, "l_tilde (Lipschitz constant of (Id - v)^-1)", c.lipschitz_inverse)?;
    }
    if wants(e, Estimate::Gamma) {
        print_modulus(out, "gamma (modulus of the pair (f, Id - v))", c.gamma, || {
            pair_raw(p.f(), w_matrix.clone(), &w, plan)
        })?;
    }
    if wants(e, Estimate::Mu) {
        print_modulus(out, "mu (monotonicity modulus of f)", c.mu, || {
            Ok(match p.f().as_matrix() {
                Some(m) => (linear_monotonicity_modulus(m), Source::Spectral),
                None => (core(sample_pair_modulus(p.f(), &Identity(n), plan))?, Source::Sampled),
            })
        })?;
    }
    if wants(e, Estimate::Pseudo) {
        let r = core(check_pseudo_pair(p.f(), &w, plan))?;
        emit(
            out,
            format!(
                "pseudo-monotonicity of (f, Id - v): {} violations in {} ordered pairs",
                r.violations, r.checked
            ),
        )?;
    }
    if e == Estimate::All {
        let show = |v: Option<f64>| v.map_or("n/a".to_string(), |v| format!("{v:.6}"));
        emit(out, format!("alpha = gamma/(1+l)^2 = {}", show(c.alpha())))?;
        emit(out, format!("rho = {}", show(c.rho())))?;
        emit(out, format!("kappa = {}", show(c.kappa())))?;
        emit(out, format!("auto step gamma/L^2 = {}", show(step_from_constants(&c).ok())))?;
    }
    Ok(())
}

fn analyze_zero(z: &ZeroProblem, e: Estimate, plan: &SamplingPlan, out: &mut dyn Write) -> CmdResult<()> {
    let spectral_or_sampled = |field: &VectorField| -> CmdResult<Constant> {
        Ok(match field.as_matrix() {
            Some(m) => Constant::new(qvi_core::analysis::operator_norm(m), Source::Spectral),
            None => Constant::new(core(sample_lipschitz(field, plan))?, Source::Sampled),
        })
    };
    if wants(e, Estimate::BigL) {
        let c = spectral_or_sampled(z.f())?;
        emit(out, format!("L (Lipschitz constant of f) = {}", describe(&c, true)))?;
    }
    if wants(e, Estimate::SmallL) {
        let c = spectral_or_sampled(z.w())?;
        emit(out, format!("L_w (Lipschitz constant of w) = {}", describe(&c, true)))?;
    }
    if wants(e, Estimate::Gamma) {
        let (value, source) = pair_raw(z.f(), z.matrix().cloned(), z.w(), plan)?;
        emit(out, format!("gamma (modulus of the pair (f, w)) = {}", describe(&Constant::new(value, source), false)))?;
    }
    if wants(e, Estimate::Pseudo) {
        let r = core(check_pseudo_pair(z.f(), z.w(), plan))?;
        emit(
            out,
            format!("pseudo-monotonicity of (f, w): {} violations in {} ordered pairs", r.violations, r.checked),
        )?;
    }
    if e == Estimate::All && z.matrix().is_some() {
        let alpha = core(z.contraction_alpha(plan))?;
        emit(out, format!("alpha = ||A^-1|| L_g = {alpha:.6} (sampled L_g, lower bound)"))?;
    }
    Ok(())
}
