//! CSV writers. Numbers use `%.17g` formatting so every `f64` round-trips.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{Context, Result};
use killing_flow::chart::{Chart, NodeField};
use killing_flow::flow::FlowRecord;

pub const SERIES_HEADER: &str = "t,max_ut,max_W,min_W,energy,dissipation_residual";

/// C `printf("%.17g")`: 17 significant digits, trailing zeros dropped,
/// scientific notation when the exponent is below −4 or at least 17.
/// Both signed zeros print as `0`.
pub fn fmt_g17(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return if v.is_nan() {
            "nan".into()
        } else if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{v:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..17).contains(&exp) {
        let m = strip_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{m}e{sign}{:02}", exp.abs());
    }
    let decimals = (16 - exp).max(0) as usize;
    strip_zeros(&format!("{v:.decimals$}")).to_string()
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

pub fn series_csv(series: &[FlowRecord]) -> String {
    let mut s = String::from(SERIES_HEADER);
    s.push('\n');
    for r in series {
        let row = [r.t, r.max_ut, r.max_w, r.min_w, r.energy, r.dissipation_residual];
        let cells: Vec<String> = row.iter().map(|&v| fmt_g17(v)).collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    s
}

pub fn emit_series(series: &[FlowRecord], path: &Path) -> Result<()> {
    write_text(path, &series_csv(series))
}

pub fn snapshot_csv(chart: &Chart, u: &NodeField) -> String {
    let mut s = String::from(if chart.dim() == 1 { "x1,u\n" } else { "x1,x2,u\n" });
    for k in 0..chart.len() {
        let x = chart.node_coord(k);
        for a in 0..chart.dim() {
            let _ = write!(s, "{},", fmt_g17(x[a]));
        }
        let _ = writeln!(s, "{}", fmt_g17(u.values[k]));
    }
    s
}

pub fn emit_snapshot(chart: &Chart, u: &NodeField, path: &Path) -> Result<()> {
    write_text(path, &snapshot_csv(chart, u))
}

/// Generic table with a header row and numeric or text cells.
pub fn emit_table(header: &[&str], rows: &[Vec<String>], path: &Path) -> Result<()> {
    let mut s = header.join(",");
    s.push('\n');
    for r in rows {
        s.push_str(&r.join(","));
        s.push('\n');
    }
    write_text(path, &s)
}
