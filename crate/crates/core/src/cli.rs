//! Commands behind the `cellload` binary.
//!
//! Each command returns a [`Report`]: a table, a metadata record and the
//! list of failed checks. The binary only parses arguments, writes files
//! and maps failures to exit codes.

use std::f64::consts::PI;
use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::analytic::{
    cf_mean_load, ei_mean_load, load_cdf, load_cdf_pushforward, load_of_area,
    mean_load_mc_baseline, stable_fraction, ConstantMode, LoadModel,
};
use crate::config::Config;
use crate::dynsim::{CellSet, DynamicResult, Estimate};
use crate::error::Result;
use crate::geomc::{run_monte_carlo, sample_realization, McConfig};
use crate::quad::{integrate, QuadOptions};
use crate::specfun::{
    e1, e1_barry, ei, ei_inverse, ei_inverse_on, geller_ng_i1, geller_ng_i2, ApproxMode, EiBranch,
};
use crate::stats::{ks_critical_95, ks_statistic};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Bool(bool),
    Text(String),
    Missing,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(v) => format!("{v:e}"),
            Cell::Int(v) => v.to_string(),
            Cell::Bool(b) => u8::from(*b).to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Missing => String::new(),
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Num(v) => Some(*v),
            Cell::Int(v) => Some(*v as f64),
            Cell::Bool(b) => Some(f64::from(u8::from(*b))),
            _ => None,
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Missing, Cell::Num)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Values of column `name`, `None` for non-numeric cells.
    pub fn values(&self, name: &str) -> Vec<Option<f64>> {
        let Some(j) = self.column(name) else {
            return Vec::new();
        };
        self.rows.iter().map(|r| r[j].as_f64()).collect()
    }

    pub fn write<W: Write>(&self, out: W, format: Format) -> std::io::Result<()> {
        match format {
            Format::Csv => self.write_csv(out),
            Format::Json => {
                let mut out = out;
                serde_json::to_writer_pretty(&mut out, self)?;
                writeln!(out)
            }
        }
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{}", self.columns.join(","))?;
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(Cell::csv).collect();
            writeln!(out, "{}", line.join(","))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub command: &'static str,
    pub table: Table,
    pub meta: serde_json::Value,
    /// Failed checks; non-empty means exit code 2.
    pub failures: Vec<String>,
}

impl Report {
    pub fn exit_code(&self) -> i32 {
        if self.failures.is_empty() {
            EXIT_OK
        } else {
            EXIT_VALIDATION
        }
    }

    /// Metadata sidecar: command, resolved config, columns and failures.
    pub fn sidecar(&self, cfg: &Config) -> serde_json::Value {
        serde_json::json!({
            "command": self.command,
            "version": env!("CARGO_PKG_VERSION"),
            "seed": cfg.mc.seed,
            "config": cfg,
            "columns": self.table.columns,
            "details": self.meta,
            "failures": self.failures,
        })
    }
}

fn grid_models(cfg: &Config) -> Result<Vec<(f64, LoadModel)>> {
    cfg.validate()?;
    let base = cfg.model()?;
    cfg.sweep
        .values
        .iter()
        .map(|&v| Ok((v, cfg.sweep.apply(&base, v)?)))
        .collect()
}

/// Stable fraction over the sweep; with `validate`, compared with the
/// fraction of Monte-Carlo cells whose load is below one.
pub fn cmd_stable_fraction(cfg: &Config, validate: bool) -> Result<Report> {
    let grid = grid_models(cfg)?;
    let mut columns = vec![cfg.sweep.variable.column(), "stable_fraction"];
    if validate {
        columns.extend([
            "mc_stable_fraction",
            "mc_stable_stderr",
            "mc_cells",
            "ks_load",
            "tolerance",
            "pass",
        ]);
    }
    let mut table = Table::new(&columns);
    let mut failures = Vec::new();
    let mut notes = Vec::new();
    let rows: Vec<(Vec<Cell>, Option<String>, Option<String>)> = grid
        .par_iter()
        .map(|(v, m)| {
            let mut row = vec![Cell::Num(*v)];
            let analytic = stable_fraction(m, cfg.approx_mode);
            let note = analytic.as_ref().err().map(|e| format!("{v}: {e}"));
            row.push(analytic.as_ref().ok().copied().into());
            let mut failure = None;
            if validate {
                let run = run_monte_carlo(m, &cfg.mc, true)?;
                let n = run.samples.len();
                let empirical =
                    run.samples.iter().filter(|s| s.load < 1.0).count() as f64 / n as f64;
                let stderr = (empirical * (1.0 - empirical) / n as f64).sqrt();
                let mut loads: Vec<f64> = run.samples.iter().map(|s| s.load).collect();
                let ks = ks_statistic(&mut loads, |l| {
                    load_cdf(l, m, cfg.approx_mode).unwrap_or(f64::NAN)
                });
                let tol = cfg.validate_tolerance + ks_critical_95(n);
                let pass = matches!(analytic, Ok(a) if (a - empirical).abs() <= tol);
                if !pass {
                    failure = Some(format!(
                        "{} = {v}: analytic stable fraction {analytic:?} vs Monte-Carlo {empirical:.6} exceeds {tol:.4}",
                        cfg.sweep.variable.column()
                    ));
                }
                row.extend([
                    Cell::Num(empirical),
                    Cell::Num(stderr),
                    Cell::Int(n as u64),
                    Cell::Num(ks),
                    Cell::Num(tol),
                    Cell::Bool(pass),
                ]);
            }
            Ok((row, failure, note))
        })
        .collect::<Result<_>>()?;
    for (row, failure, note) in rows {
        table.rows.push(row);
        failures.extend(failure);
        notes.extend(note);
    }
    Ok(Report {
        command: "stable-fraction",
        table,
        meta: serde_json::json!({ "notes": notes, "validate": validate }),
        failures,
    })
}

/// Mean-load approximations over the sweep; with `validate`, Monte-Carlo
/// typical and zero-cell loads with their bands.
///
/// Checks: the mean-cell load is at least the EI load on every row, and the
/// EI load lies in the 2.5–97.5% band of per-realization typical loads on
/// at least `band_coverage` of the rows.
pub fn cmd_mean_load(cfg: &Config, validate: bool) -> Result<Report> {
    let grid = grid_models(cfg)?;
    let mut columns = vec![
        cfg.sweep.variable.column(),
        "ei_mean_load",
        "cf_mean_load",
        "mean_cell_load",
    ];
    if validate {
        columns.extend([
            "mc_typical_load",
            "mc_typical_stderr",
            "mc_typical_lo",
            "mc_typical_hi",
            "mc_zero_load",
            "mc_zero_stderr",
            "mc_zero_lo",
            "mc_zero_hi",
            "realizations",
            "mean_cell_ge_ei",
            "ei_in_band",
        ]);
    }
    let rows: Vec<(Vec<Cell>, Vec<String>, Option<bool>)> = grid
        .par_iter()
        .map(|(v, m)| {
            let mut notes = Vec::new();
            let mut keep = |r: Result<f64>, what: &str| match r {
                Ok(x) => Some(x),
                Err(e) => {
                    notes.push(format!("{v}: {what}: {e}"));
                    None
                }
            };
            let ei = keep(ei_mean_load(m, cfg.approx_mode), "ei_mean_load");
            let cf = keep(cf_mean_load(m), "cf_mean_load");
            let mc = keep(mean_load_mc_baseline(m), "mean_cell_load");
            let mut row = vec![Cell::Num(*v), ei.into(), cf.into(), mc.into()];
            let mut in_band = None;
            if validate {
                let run = run_monte_carlo(m, &cfg.mc, false)?;
                let typ = run.typical_load();
                let zero = run.zero_load();
                let ge = matches!((mc, ei), (Some(a), Some(b)) if a >= b);
                let inside = matches!(ei, Some(e) if e >= typ.lo && e <= typ.hi);
                in_band = Some(inside);
                if !ge {
                    notes.push(format!("{v}: mean-cell load below EI load"));
                }
                row.extend([
                    Cell::Num(typ.mean),
                    Cell::Num(typ.stderr),
                    Cell::Num(typ.lo),
                    Cell::Num(typ.hi),
                    Cell::Num(zero.mean),
                    Cell::Num(zero.stderr),
                    Cell::Num(zero.lo),
                    Cell::Num(zero.hi),
                    Cell::Int(run.realizations.len() as u64),
                    Cell::Bool(ge),
                    Cell::Bool(inside),
                ]);
            }
            Ok((row, notes, in_band))
        })
        .collect::<Result<_>>()?;
    let mut table = Table::new(&columns);
    let mut notes = Vec::new();
    let mut failures = Vec::new();
    let mut inside = 0usize;
    for (row, n, band) in rows {
        if validate {
            let ge_col = table.column("mean_cell_ge_ei").expect("column present");
            if row[ge_col] != Cell::Bool(true) {
                failures.push(format!(
                    "{} = {}: mean-cell load is not above the EI load",
                    cfg.sweep.variable.column(),
                    row[0].csv()
                ));
            }
        }
        inside += usize::from(band == Some(true));
        table.rows.push(row);
        notes.extend(n);
    }
    if validate {
        let frac = inside as f64 / table.rows.len() as f64;
        if frac < cfg.band_coverage {
            failures.push(format!(
                "EI load inside the Monte-Carlo band at {:.1}% of grid points, need {:.1}%",
                100.0 * frac,
                100.0 * cfg.band_coverage
            ));
        }
    }
    Ok(Report {
        command: "mean-load",
        table,
        meta: serde_json::json!({ "notes": notes, "validate": validate }),
        failures,
    })
}

/// Dynamic (processor sharing) versus static full-buffer throughput over
/// the traffic points `throughput_lambda_u_per_km2`.
///
/// Rows with an overloaded cell are flagged and report `r_dyn = 0`.
pub fn cmd_throughput_compare(cfg: &Config) -> Result<Report> {
    cfg.validate()?;
    let base = cfg.model()?;
    let mc = McConfig {
        realizations: cfg.sim_realizations,
        inner_cells: cfg.sim_inner_cells,
        ..cfg.mc
    };
    let mut table = Table::new(&[
        "lambda_u_per_km2",
        "w_bps_per_m2",
        "rho_bar",
        "mean_users",
        "cells",
        "unstable_cells",
        "unstable_flag",
        "r_dyn",
        "r_dyn_stderr",
        "r_ppp",
        "r_ppp_stderr",
        "gap_significant",
        "mean_flow_rate",
        "mean_flow_rate_stderr",
        "single_user_uniform",
        "single_user_per_cell",
    ]);
    let mut failures = Vec::new();
    let mut any_gap = false;
    for &lu in &cfg.throughput_lambda_u {
        let mut m = base;
        m.traffic.lambda_u = lu / crate::linkbudget::M2_PER_KM2;
        let realizations: Vec<_> = (0..mc.realizations)
            .map(|i| sample_realization(&m, &mc, i).map(|(r, _)| r))
            .collect::<Result<_>>()?;
        let mut cells = Vec::new();
        for r in &realizations {
            cells.extend(CellSet::build(r, &m, &cfg.sim).simulate_dynamic(&m, &cfg.sim)?);
        }
        let d = DynamicResult::from_cells(cells);
        let unstable = d.unstable_cells > 0;
        let r_dyn = if unstable {
            Estimate {
                value: 0.0,
                stderr: 0.0,
            }
        } else {
            d.flow_throughput
        };
        let r_ppp = if d.rho_bar > 0.0 && d.rho_bar < 1.0 {
            let n = d.rho_bar / (1.0 - d.rho_bar);
            let parts: Vec<_> = realizations
                .iter()
                .map(|r| CellSet::build(r, &m, &cfg.sim).simulate_static(&m, n, &cfg.sim))
                .collect::<Result<_>>()?;
            Some(pool_static(&parts))
        } else {
            None
        };
        let gap = match r_ppp {
            Some(p) if !unstable => r_dyn.separated_from(&p),
            _ => false,
        };
        any_gap |= gap;
        table.rows.push(vec![
            Cell::Num(lu),
            Cell::Num(m.w()),
            Cell::Num(d.rho_bar),
            Cell::Num(d.mean_users),
            Cell::Int(d.cells.len() as u64),
            Cell::Int(d.unstable_cells as u64),
            Cell::Bool(unstable),
            Cell::Num(r_dyn.value),
            Cell::Num(r_dyn.stderr),
            r_ppp.map(|p| p.value).into(),
            r_ppp.map(|p| p.stderr).into(),
            Cell::Bool(gap),
            Cell::Num(d.mean_flow_rate.value),
            Cell::Num(d.mean_flow_rate.stderr),
            Cell::Num(d.single_user_uniform),
            Cell::Num(d.single_user_per_cell),
        ]);
    }
    if !any_gap {
        failures.push("no traffic point separates the dynamic and static throughputs".into());
    }
    Ok(Report {
        command: "throughput-compare",
        table,
        meta: serde_json::json!({ "sim": cfg.sim, "mc": mc }),
        failures,
    })
}

fn pool_static(parts: &[crate::dynsim::StaticResult]) -> Estimate {
    // Realizations are independent: combine the ratio estimates by their
    // user counts and add variances accordingly.
    let total: f64 = parts.iter().map(|p| p.user_samples as f64).sum();
    let value = parts
        .iter()
        .map(|p| p.throughput.value * p.user_samples as f64)
        .sum::<f64>()
        / total;
    let var = parts
        .iter()
        .map(|p| (p.throughput.stderr * p.user_samples as f64 / total).powi(2))
        .sum::<f64>();
    Estimate {
        value,
        stderr: var.sqrt(),
    }
}

/// One self-test line.
struct Check {
    name: &'static str,
    measured: f64,
    tolerance: f64,
    pass: bool,
}

fn check_le(name: &'static str, measured: f64, tolerance: f64) -> Check {
    Check {
        name,
        measured,
        tolerance,
        pass: measured <= tolerance,
    }
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

/// Oracle-equivalence diagnostics with frozen tolerances, all multiplied
/// by `selftest_tolerance_scale`.
pub fn cmd_selftest(cfg: &Config) -> Result<Report> {
    let s = cfg.selftest_tolerance_scale;
    let model = cfg.model()?.with_constant_mode(ConstantMode::Rederived);
    let literal = model.with_constant_mode(ConstantMode::PaperLiteral);
    let opts = QuadOptions::with_rel_tol(1e-12);
    let mut checks = Vec::new();

    // Constant modes differ by exactly 2ξ/(αλ).
    let ratio = literal.k_prime() / model.k_prime();
    let predicted = 2.0 * model.xi() / (model.alpha() * model.lambda());
    checks.push(check_le(
        "constant_ratio_rel_err",
        rel(ratio, predicted),
        1e-12 * s,
    ));
    checks.push(Check {
        name: "constant_ratio_literal_over_rederived",
        measured: ratio,
        tolerance: f64::NAN,
        pass: true,
    });

    // Disk load against direct radial quadrature.
    let mut worst = 0.0f64;
    for frac in [1e-6, 1e-3, 0.1] {
        let area = frac * model.area_limit();
        let (w, b, xi, a) = (model.w(), model.net.bandwidth_hz, model.xi(), model.alpha());
        let direct = 2.0
            * PI
            * integrate(
                |r: f64| {
                    if r > 0.0 {
                        w * r / (b * (xi * r.powf(-a)).log2())
                    } else {
                        0.0
                    }
                },
                0.0,
                (area / PI).sqrt(),
                opts,
            )?
            .value;
        worst = worst.max(rel(load_of_area(area, &model)?, direct));
    }
    checks.push(check_le("load_of_area_vs_quadrature", worst, 1e-6 * s));

    // Negative Ei⁻¹ branch reproduces the push-forward; the positive one
    // does not.
    let mut worst_neg = 0.0f64;
    let mut best_pos = f64::INFINITY;
    for scale in [0.3, 0.6, 1.0] {
        // Loads of typical-sized cells keep the CDF away from 0 and 1.
        let l = load_of_area(scale / model.lambda(), &model)?;
        let oracle = load_cdf_pushforward(l, &model)?;
        worst_neg = worst_neg.max((load_cdf(l, &model, ApproxMode::Reference)? - oracle).abs());
        let v = l / model.k_prime();
        let pos = ei_inverse_on(-v, EiBranch::Positive)?;
        let area =
            PI * ((-0.5 * model.alpha() * pos).exp() / model.xi()).powf(-2.0 / model.alpha());
        let f_pos = crate::analytic::area_cdf(area, model.lambda());
        best_pos = best_pos.min((f_pos - oracle).abs());
    }
    checks.push(check_le(
        "ei_inverse_negative_branch_vs_pushforward",
        worst_neg,
        1e-6 * s,
    ));
    checks.push(Check {
        name: "ei_inverse_positive_branch_min_gap",
        measured: best_pos,
        tolerance: 1e-2 / s.max(f64::MIN_POSITIVE),
        pass: best_pos >= 1e-2 / s.max(f64::MIN_POSITIVE),
    });

    // Asymptotic Ei⁻¹ against the positive branch near zero.
    let y = -1e-8;
    let gap =
        (ei_inverse(y, ApproxMode::PaperApprox)? - ei_inverse_on(y, EiBranch::Positive)?).abs();
    checks.push(check_le(
        "pecina_gap_at_minus_1e-8_err",
        (gap - 0.127_492_6).abs(),
        1e-6 * s,
    ));

    // Geller–Ng primitives: derivatives match the decaying integrands.
    let mut worst_gn = 0.0f64;
    for x in [0.05, 0.5, 2.0, 8.0] {
        let h = 1e-5 * x;
        let d1 = (geller_ng_i1(x + h)? - geller_ng_i1(x - h)?) / (2.0 * h);
        let d2 = (geller_ng_i2(x + h)? - geller_ng_i2(x - h)?) / (2.0 * h);
        let f2 = e1(x)? * (-3.5 * x).exp();
        worst_gn = worst_gn.max(rel(d1, x * f2)).max(rel(d2, f2));
    }
    checks.push(check_le(
        "geller_ng_decaying_convention",
        worst_gn,
        1e-6 * s,
    ));

    // Special functions against quadrature.
    let mut worst_e1 = 0.0f64;
    for x in [1e-3, 0.5, 1.0, 3.0, 20.0] {
        let q = crate::quad::integrate_to_infinity(|t: f64| (-t).exp() / t, x, opts)?.value;
        worst_e1 = worst_e1.max(rel(e1(x)?, q));
    }
    checks.push(check_le("e1_vs_quadrature", worst_e1, 1e-10 * s));
    checks.push(check_le(
        "ei_at_1",
        rel(ei(1.0)?, 1.895_117_816_355_936_8),
        1e-13 * s,
    ));
    let mut worst_barry = 0.0f64;
    for i in 0..=98 {
        let x = 1.0 + 0.5 * i as f64;
        worst_barry = worst_barry.max(rel(e1_barry(x)?, e1(x)?));
    }
    checks.push(check_le("barry_max_rel_err", worst_barry, 1e-3 * s));

    let mut table = Table::new(&["check", "measured", "tolerance", "pass"]);
    let mut failures = Vec::new();
    for c in &checks {
        if !c.pass {
            failures.push(format!(
                "{}: measured {:e}, tolerance {:e}",
                c.name, c.measured, c.tolerance
            ));
        }
        table.rows.push(vec![
            Cell::Text(c.name.to_string()),
            Cell::Num(c.measured),
            if c.tolerance.is_nan() {
                Cell::Missing
            } else {
                Cell::Num(c.tolerance)
            },
            Cell::Bool(c.pass),
        ]);
    }
    Ok(Report {
        command: "selftest",
        table,
        meta: serde_json::json!({ "tolerance_scale": s }),
        failures,
    })
}
