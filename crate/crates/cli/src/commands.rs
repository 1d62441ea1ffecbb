use std::fmt::Write as _;
use std::path::Path;

use pcsplit::analysis::{convergence_report, ConvergenceReport, EtaCoefficients};
use pcsplit::benchmark::{run_benchmark, run_synthetic, sweep_ts, sweep_ts_synthetic, SweepTable, TrajectoryRecord};
use pcsplit::prox::Zero;
use pcsplit::{Method, PCConfig};

use crate::config::{Experiment, Problem, Sweep};

/// Formats with 17 significant digits, which round-trips every `f64`.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn simulate(exp: &Experiment, pc: &PCConfig) -> pcsplit::Result<TrajectoryRecord> {
    match &exp.problem {
        Problem::Formation(p) => run_benchmark(p.spec(), pc, exp.duration),
        Problem::Synthetic(s) => run_synthetic(s, &Zero, s.start(), pc, exp.duration),
    }
}

/// `k,t,E,pred_residual,corr_residual` for `k = 1..K`, then the asymptotic error.
pub fn run_csv(record: &TrajectoryRecord) -> String {
    let mut out = String::from("k,t,E,pred_residual,corr_residual\n");
    for (i, step) in record.steps.iter().enumerate() {
        let k = i + 1;
        writeln!(
            out,
            "{k},{},{},{},{}",
            num(record.times[k]),
            num(record.errors[k]),
            num(step.pred_residual),
            num(step.corr_residual)
        )
        .unwrap();
    }
    writeln!(out, "# asymptotic_error={}", num(record.asymptotic_error)).unwrap();
    out
}

pub fn sweep_tables(sweep: &Sweep) -> pcsplit::Result<Vec<(String, SweepTable)>> {
    let base = &sweep.base;
    sweep
        .variants
        .iter()
        .map(|v| {
            let table = match &base.problem {
                Problem::Formation(p) => sweep_ts(p.spec(), &v.pc, &sweep.ts_values, sweep.noise_rule, base.duration),
                Problem::Synthetic(s) => sweep_ts_synthetic(s, &v.pc, &sweep.ts_values, base.duration),
            }?;
            Ok((v.label.clone(), table))
        })
        .collect()
}

/// `variant,Ts,asymptotic_error,loglog_slope`, slope repeated on every row of a variant.
pub fn sweep_csv(tables: &[(String, SweepTable)]) -> String {
    let mut out = String::from("variant,Ts,asymptotic_error,loglog_slope\n");
    for (label, table) in tables {
        let slope = table.slope.map_or_else(|| "undefined".to_string(), num);
        for row in &table.rows {
            writeln!(out, "{label},{},{},{slope}", num(row.ts), num(row.asymptotic_error)).unwrap();
        }
    }
    out
}

pub fn analyze(exp: &Experiment) -> pcsplit::Result<ConvergenceReport> {
    let (m, l) = exp.problem.moduli();
    let pc = &exp.pc;
    convergence_report(
        &pc.split,
        pc.prediction_steps,
        pc.correction_steps,
        m,
        l,
        exp.bounds,
        pc.ts,
        exp.tau,
    )
}

fn eta_rows(rows: &mut Vec<(String, String)>, tag: &str, eta: &EtaCoefficients) {
    rows.push((format!("eta2_{tag}"), num(eta.eta2)));
    rows.push((format!("eta1_{tag}"), num(eta.eta1)));
    rows.push((format!("eta0_{tag}"), num(eta.eta0)));
    rows.push((
        format!("asymptote_{tag}"),
        eta.asymptote().map_or_else(|| "unbounded".to_string(), num),
    ));
}

/// Key-value listing of a report, in a fixed order.
pub fn report_rows(exp: &Experiment, report: &ConvergenceReport) -> Vec<(String, String)> {
    let (m, l) = exp.problem.moduli();
    let pc = &exp.pc;
    let b = &exp.bounds;
    let mut rows: Vec<(String, String)> = vec![
        ("method".into(), pc.split.method.name().into()),
        ("rho".into(), num(pc.split.rho)),
        ("P".into(), pc.prediction_steps.to_string()),
        ("C".into(), pc.correction_steps.to_string()),
        ("Ts".into(), num(pc.ts)),
        ("tau".into(), num(exp.tau)),
        ("m".into(), num(m)),
        ("L".into(), num(l)),
        ("C0".into(), num(b.c0)),
        ("C1".into(), num(b.c1)),
        ("C2".into(), num(b.c2)),
        ("C3".into(), num(b.c3)),
        ("zeta".into(), num(report.rate.zeta)),
        ("prefactor".into(), num(report.rate.prefactor)),
        ("zeta_P".into(), num(report.zeta_p)),
        ("zeta_C".into(), num(report.zeta_c)),
        ("zeta_PC".into(), num(report.zeta_pc)),
        ("theorem1_lhs".into(), num(report.theorem1_lhs)),
        ("theorem1_holds".into(), report.theorem1_holds.to_string()),
    ];
    eta_rows(&mut rows, "linear", &report.linear);
    eta_rows(&mut rows, "quadratic", &report.quadratic);
    let feasible = |r: &Result<f64, String>| r.as_ref().map_or_else(|_| "infeasible".to_string(), |v| num(*v));
    rows.push(("ts_bar".into(), feasible(&report.ts_bar)));
    rows.push(("r_bar".into(), feasible(&report.r_bar)));
    rows
}

pub fn report_csv(rows: &[(String, String)]) -> String {
    let mut out = String::from("key,value\n");
    for (k, v) in rows {
        writeln!(out, "{k},{v}").unwrap();
    }
    out
}

/// Human-readable report for the terminal.
pub fn report_text(exp: &Experiment, report: &ConvergenceReport) -> String {
    let (m, l) = exp.problem.moduli();
    let pc = &exp.pc;
    let method = match pc.split.method {
        Method::ForwardBackward => "forward-backward",
        Method::DouglasRachford => "Douglas-Rachford",
    };
    let mut out = String::new();
    let w = &mut out;
    writeln!(
        w,
        "{method}, rho = {}, P = {}, C = {}, Ts = {}",
        pc.split.rho, pc.prediction_steps, pc.correction_steps, pc.ts
    )
    .unwrap();
    writeln!(
        w,
        "m = {m}, L = {l}; C0..C3 = {}, {}, {}, {}",
        exp.bounds.c0, exp.bounds.c1, exp.bounds.c2, exp.bounds.c3
    )
    .unwrap();
    writeln!(
        w,
        "contraction zeta = {} (prefactor {})",
        report.rate.zeta, report.rate.prefactor
    )
    .unwrap();
    writeln!(
        w,
        "zeta(P) = {}, zeta(C) = {}, zeta(P+C) = {}",
        report.zeta_p, report.zeta_c, report.zeta_pc
    )
    .unwrap();
    writeln!(
        w,
        "linear convergence condition: lhs = {} -> {}",
        report.theorem1_lhs,
        if report.theorem1_holds { "holds" } else { "violated" }
    )
    .unwrap();
    for (name, eta) in [("linear", &report.linear), ("quadratic", &report.quadratic)] {
        writeln!(
            w,
            "{name} regime: eta2 = {}, eta1 = {}, eta0 = {}",
            eta.eta2, eta.eta1, eta.eta0
        )
        .unwrap();
        match eta.asymptote() {
            Some(a) => writeln!(w, "  predicted asymptotic error {a}").unwrap(),
            None => writeln!(w, "  eta1 >= 1, no asymptotic bound").unwrap(),
        }
    }
    match (&report.ts_bar, &report.r_bar) {
        (Ok(ts), Ok(r)) => writeln!(
            w,
            "quadratic-regime region (tau = {}): Ts_bar = {ts}, R_bar = {r}",
            exp.tau
        )
        .unwrap(),
        (Ok(ts), Err(e)) => writeln!(
            w,
            "quadratic-regime region (tau = {}): Ts_bar = {ts}; infeasible: {e}",
            exp.tau
        )
        .unwrap(),
        (Err(e), _) => writeln!(w, "quadratic-regime region (tau = {}): infeasible: {e}", exp.tau).unwrap(),
    }
    out
}

pub fn write_output(path: &Path, contents: &str) -> std::io::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, contents)
}
