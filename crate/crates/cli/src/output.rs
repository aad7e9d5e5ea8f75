use std::fmt::Write as _;
use std::path::Path;

use qvi_core::solvers::{SolveReport, Trajectory};
use qvi_core::Vector;
use serde_json::json;

/// Scientific notation with 17 significant digits.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn header(first: &str, dim: usize, last: &str) -> String {
    let mut h = first.to_string();
    for i in 1..=dim {
        let _ = write!(h, ",x{i}");
    }
    let _ = writeln!(h, ",{last}");
    h
}

fn row(out: &mut String, first: String, x: &Vector, last: f64) {
    out.push_str(&first);
    for v in x.iter() {
        out.push(',');
        out.push_str(&num(*v));
    }
    out.push(',');
    out.push_str(&num(last));
    out.push('\n');
}

/// `iter,x1..xn,residual`, one row per recorded iterate.
pub fn report_csv(report: &SolveReport, dim: usize) -> String {
    let mut out = header("iter", dim, "residual");
    for (k, (x, r)) in report.iterates.iter().zip(&report.residuals).enumerate() {
        row(&mut out, k.to_string(), x, *r);
    }
    out
}

/// `t,x1..xn,speed`.
pub fn trajectory_csv(traj: &Trajectory, dim: usize) -> String {
    let mut out = header("t", dim, "speed");
    for ((t, x), s) in traj.times.iter().zip(&traj.states).zip(&traj.speeds) {
        row(&mut out, num(*t), x, *s);
    }
    out
}

pub fn summary_json(report: &SolveReport) -> String {
    let v = json!({
        "status": report.status.as_str(),
        "converged": report.converged,
        "diverged": report.diverged,
        "iterations": report.iterations,
        "x_final": report.x_final.iter().copied().collect::<Vec<f64>>(),
        "h_used": report.h_used,
        "rate_estimate": report.rate_estimate,
        "final_residual": report.final_residual,
        "final_displacement": report.final_displacement,
        "displacement_converged": report.displacement_converged,
    });
    serde_json::to_string_pretty(&v).expect("summary serializes") + "\n"
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), String> {
    std::fs::write(path, contents).map_err(|e| format!("cannot write {}: {e}", path.display()))
}

pub fn format_point(x: &Vector) -> String {
    let parts: Vec<String> = x.iter().map(|v| format!("{v:.6}")).collect();
    format!("({})", parts.join(", "))
}
