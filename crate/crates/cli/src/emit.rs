//! Tables and the summary report.

use std::io;
use std::path::Path;

use lefschetz_core::checks::CheckOutcome;
use num_complex::Complex64;
use serde::Serialize;

use crate::config::EffectiveConfig;

pub const SCHEMA_VERSION: u32 = 1;

pub const HEAT_TRACE_HEADER: [&str; 8] =
    ["scenario", "degree", "method", "t", "g_params", "value_re", "value_im", "err_est"];
pub const EXPANSION_HEADER: [&str; 7] =
    ["scenario", "mu", "I_re", "I_im", "leading_re", "leading_im", "abs_err"];
pub const LEFSCHETZ_HEADER: [&str; 6] = ["scenario", "rho", "method", "value_re", "value_im", "err_est"];

/// Fixed scientific format with 17 significant digits; parses back exactly.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn join(values: impl IntoIterator<Item = String>) -> String {
    values.into_iter().collect::<Vec<_>>().join(";")
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeatTraceRow {
    pub scenario: String,
    pub degree: usize,
    pub method: String,
    pub t: f64,
    pub g: Vec<f64>,
    pub value: Complex64,
    pub err_est: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionRow {
    pub scenario: String,
    pub mu: f64,
    pub integral: Complex64,
    pub leading: Complex64,
    pub abs_err: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LefschetzRow {
    pub scenario: String,
    pub rho: Vec<i64>,
    pub method: String,
    pub value: Complex64,
    pub err_est: f64,
}

/// Everything a run produces, held in memory until written.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Artifacts {
    pub heat_trace: Vec<HeatTraceRow>,
    pub expansion: Vec<ExpansionRow>,
    pub lefschetz: Vec<LefschetzRow>,
    pub checks: Vec<CheckOutcome>,
}

impl Artifacts {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(CheckOutcome::pass)
    }
}

fn table(header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> io::Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.into_inner().map_err(|e| io::Error::new(io::ErrorKind::Other, e.to_string()))
}

pub fn heat_trace_csv(rows: &[HeatTraceRow]) -> io::Result<Vec<u8>> {
    table(
        &HEAT_TRACE_HEADER,
        rows.iter().map(|r| {
            vec![
                r.scenario.clone(),
                r.degree.to_string(),
                r.method.clone(),
                num(r.t),
                join(r.g.iter().map(|&a| num(a))),
                num(r.value.re),
                num(r.value.im),
                num(r.err_est),
            ]
        }),
    )
}

pub fn expansion_csv(rows: &[ExpansionRow]) -> io::Result<Vec<u8>> {
    table(
        &EXPANSION_HEADER,
        rows.iter().map(|r| {
            vec![
                r.scenario.clone(),
                num(r.mu),
                num(r.integral.re),
                num(r.integral.im),
                num(r.leading.re),
                num(r.leading.im),
                num(r.abs_err),
            ]
        }),
    )
}

pub fn lefschetz_csv(rows: &[LefschetzRow]) -> io::Result<Vec<u8>> {
    table(
        &LEFSCHETZ_HEADER,
        rows.iter().map(|r| {
            vec![
                r.scenario.clone(),
                join(r.rho.iter().map(|k| k.to_string())),
                r.method.clone(),
                num(r.value.re),
                num(r.value.im),
                num(r.err_est),
            ]
        }),
    )
}

#[derive(Serialize)]
struct CheckEntry<'a> {
    name: &'a str,
    achieved: f64,
    required: f64,
    pass: bool,
}

#[derive(Serialize)]
struct Report<'a> {
    schema_version: u32,
    config: &'a EffectiveConfig,
    checks: Vec<CheckEntry<'a>>,
}

pub fn report_json(config: &EffectiveConfig, checks: &[CheckOutcome]) -> serde_json::Result<Vec<u8>> {
    let report = Report {
        schema_version: SCHEMA_VERSION,
        config,
        checks: checks
            .iter()
            .map(|c| CheckEntry {
                name: &c.name,
                achieved: c.achieved,
                required: c.required,
                pass: c.pass(),
            })
            .collect(),
    };
    let mut out = serde_json::to_vec_pretty(&report)?;
    out.push(b'\n');
    Ok(out)
}

/// Writes the four artifacts into `dir`, creating it if needed.
///
/// All files are rendered before anything touches the disk, and each is
/// written to a temporary name and renamed, so a failure leaves no partial
/// artifact set behind.
pub fn write_all(dir: &Path, config: &EffectiveConfig, a: &Artifacts) -> io::Result<()> {
    let files = [
        ("heat_trace.csv", heat_trace_csv(&a.heat_trace)?),
        ("expansion.csv", expansion_csv(&a.expansion)?),
        ("lefschetz.csv", lefschetz_csv(&a.lefschetz)?),
        ("report.json", report_json(config, &a.checks).map_err(io::Error::other)?),
    ];
    std::fs::create_dir_all(dir)?;
    let mut staged = Vec::new();
    for (name, bytes) in &files {
        let tmp = dir.join(format!(".{name}.partial"));
        if let Err(e) = std::fs::write(&tmp, bytes) {
            for t in &staged {
                let _ = std::fs::remove_file(t);
            }
            let _ = std::fs::remove_file(&tmp);
            return Err(e);
        }
        staged.push(tmp);
    }
    for ((name, _), tmp) in files.iter().zip(&staged) {
        std::fs::rename(tmp, dir.join(name))?;
    }
    Ok(())
}
