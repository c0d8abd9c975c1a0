//! Trace CSV, index tables, monitor summaries and atomic file writes.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use crate::bench39::AuditReport;
use crate::error::Result;
use crate::metrics::{ComparisonReport, IndexReport, TransientReport};
use crate::plant::STATE_NAMES;
use crate::sim::{ReachingReport, SimTrace, UncertaintyTrace};

pub const CSV_HEADER: &str = "t,area,dP_tie,df,dP_m,dE,dP_g,dP_pv,dP_wt,mu,theta,L,dP_L,dP_phi,dP_wind";

/// Writes `bytes` to a temporary file next to `path` and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// One row per (sample, area); floats in shortest round-trip form, −0 written as 0.
pub fn trace_csv(trace: &SimTrace) -> String {
    let mut out = String::with_capacity(trace.len() * trace.areas() * 200);
    out.push_str(CSV_HEADER);
    out.push('\n');
    for s in &trace.samples {
        for (i, x) in s.state.iter().enumerate() {
            let sig = &s.signals[i];
            let d = &s.disturbance[i];
            let _ = write!(out, "{},{}", s.t, i + 1);
            for v in x {
                let _ = write!(out, ",{}", v + 0.0);
            }
            let _ = writeln!(
                out,
                ",{},{},{},{},{},{}",
                s.applied[i] + 0.0,
                sig.theta + 0.0,
                s.lyapunov(i) + 0.0,
                d.load + 0.0,
                d.solar + 0.0,
                d.wind + 0.0
            );
        }
    }
    out
}

fn sci(v: f64) -> String {
    format!("{v:.6e}")
}

/// Plain-text table with one row per labelled report.
pub fn index_table_text(rows: &[(&str, IndexReport)]) -> String {
    let width = rows.iter().map(|(l, _)| l.len()).max().unwrap_or(0).max(10);
    let mut out = format!("{:<width$}", "controller");
    for n in IndexReport::NAMES {
        let _ = write!(out, "  {n:>14}");
    }
    out.push('\n');
    for (label, r) in rows {
        let _ = write!(out, "{label:<width$}");
        for v in r.values() {
            let _ = write!(out, "  {:>14}", sci(v));
        }
        out.push('\n');
    }
    out
}

pub fn index_table_csv(rows: &[(&str, IndexReport)]) -> String {
    let mut out = String::from("controller,ITAE,ITSE,ISE,IAE\n");
    for (label, r) in rows {
        let v = r.values();
        let _ = writeln!(out, "{label},{},{},{},{}", v[0], v[1], v[2], v[3]);
    }
    out
}

pub fn comparison_text(report: &ComparisonReport, test: &str, baseline: &str) -> String {
    let mut out = format!("{:<6}  {:>14}  {:>14}  {:>12}\n", "index", test, baseline, "improvement");
    for c in &report.indices {
        let imp = c.improvement.map_or_else(|| "undefined".to_string(), |p| format!("{p:.2}%"));
        let _ = writeln!(out, "{:<6}  {:>14}  {:>14}  {:>12}", c.name, sci(c.test), sci(c.baseline), imp);
    }
    out
}

pub fn comparison_csv(report: &ComparisonReport) -> String {
    let mut out = String::from("index,test,baseline,improvement_percent\n");
    for c in &report.indices {
        let imp = c.improvement.map_or_else(String::new, |p| format!("{p}"));
        let _ = writeln!(out, "{},{},{},{imp}", c.name, c.test, c.baseline);
    }
    out
}

pub fn monitor_text(reach: &ReachingReport, uncertainty: &UncertaintyTrace, transients: &TransientReport) -> String {
    let mut out = format!(
        "reaching condition (|theta| > {}, {} s excluded after each step):\n",
        reach.delta, reach.exclusion_window
    );
    for (i, a) in reach.areas.iter().enumerate() {
        let _ = writeln!(
            out,
            "  area {}: {} / {} samples violate ({:.4}%), max |theta| {}",
            i + 1,
            a.violations,
            a.considered,
            100.0 * a.fraction(),
            sci(a.max_abs_theta)
        );
    }
    out.push_str("lumped perturbation:\n");
    for (i, a) in uncertainty.areas.iter().enumerate() {
        let _ = writeln!(
            out,
            "  area {}: max |sigma| {} vs zeta {} ({})",
            i + 1,
            sci(a.max_norm),
            a.bound,
            if a.bound_holds() { "holds" } else { "exceeded" }
        );
    }
    let _ = writeln!(out, "frequency transients (band {}):", transients.band);
    for e in &transients.entries {
        let _ = writeln!(
            out,
            "  area {} step at {:>6} s: overshoot {}  undershoot {}  settling {:.3} s{}",
            e.area + 1,
            e.event,
            sci(e.overshoot),
            sci(e.undershoot),
            e.settling_time,
            if e.unsettled { " (unsettled)" } else { "" }
        );
    }
    out
}

pub fn audit_text(report: &AuditReport) -> String {
    let mut out = format!(
        "{:<4} {:<3} {:>4} {:>4} {:>14} {:>14} {:>10}  {:<4} note\n",
        "area", "mat", "row", "col", "built", "published", "rel diff", "flag"
    );
    for e in &report.entries {
        let note = e.anomaly.map_or("", |a| a.note);
        let _ = writeln!(
            out,
            "{:<4} {:<3} {:>4} {:>4} {:>14.6} {:>14.6} {:>9.3}%  {:<4} {}",
            e.area,
            e.matrix.to_string(),
            e.row,
            e.col,
            e.built,
            e.published,
            100.0 * e.rel_diff,
            if e.flagged { "*" } else { "" },
            note
        );
    }
    let flagged = report.flagged().count();
    let unexplained = report.unexplained().count();
    let _ = writeln!(
        out,
        "{} differing elements, {flagged} above {}%, {unexplained} without a ledger entry",
        report.entries.len(),
        100.0 * report.rel_tol
    );
    out
}

/// Column names of the per-area state block, in CSV order.
pub fn state_columns() -> [&'static str; 7] {
    STATE_NAMES
}
