//! Integral performance indices, per-event transient figures and
//! controller-versus-baseline comparison.

use crate::error::{LfcError, Result};
use crate::plant::idx;
use crate::sim::SimTrace;

pub const DEFAULT_SETTLING_BAND: f64 = 2e-4;

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct IndexReport {
    pub itae: f64,
    pub itse: f64,
    pub ise: f64,
    pub iae: f64,
}

impl IndexReport {
    pub const NAMES: [&'static str; 4] = ["ITAE", "ITSE", "ISE", "IAE"];

    pub fn values(&self) -> [f64; 4] {
        [self.itae, self.itse, self.ise, self.iae]
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        match name.to_ascii_lowercase().as_str() {
            "itae" => Some(self.itae),
            "itse" => Some(self.itse),
            "ise" => Some(self.ise),
            "iae" => Some(self.iae),
            _ => None,
        }
    }
}

/// Trapezoidal quadrature of a uniformly sampled series.
pub fn trapezoid(values: &[f64], dt: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => dt * (values[1..n - 1].iter().sum::<f64>() + 0.5 * (values[0] + values[n - 1])),
    }
}

/// Indices from raw per-sample absolute and squared error sums.
pub fn indices_from_series(times: &[f64], abs_err: &[f64], sq_err: &[f64], dt: f64) -> IndexReport {
    let weighted = |v: &[f64]| -> Vec<f64> { v.iter().zip(times).map(|(e, t)| e * t).collect() };
    IndexReport {
        itae: trapezoid(&weighted(abs_err), dt),
        itse: trapezoid(&weighted(sq_err), dt),
        ise: trapezoid(sq_err, dt),
        iae: trapezoid(abs_err, dt),
    }
}

/// ITAE, ITSE, ISE and IAE over Δf and ΔP_tie of every area.
pub fn integral_indices(trace: &SimTrace) -> Result<IndexReport> {
    if trace.is_empty() {
        return Err(LfcError::EmptyTrace);
    }
    let times: Vec<f64> = trace.times().collect();
    let mut abs_err = Vec::with_capacity(trace.len());
    let mut sq_err = Vec::with_capacity(trace.len());
    for s in &trace.samples {
        let (mut a, mut q) = (0.0, 0.0);
        for x in &s.state {
            let (f, p) = (x[idx::FREQ], x[idx::TIE]);
            a += f.abs() + p.abs();
            q += f * f + p * p;
        }
        abs_err.push(a);
        sq_err.push(q);
    }
    Ok(indices_from_series(&times, &abs_err, &sq_err, trace.dt))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventTransient {
    pub area: usize,
    pub event: f64,
    pub window_end: f64,
    /// Largest positive Δf in the window (0 if none).
    pub overshoot: f64,
    /// Largest negative excursion as a magnitude (0 if none).
    pub undershoot: f64,
    pub peak: f64,
    /// Seconds after the event at which |Δf| last leaves the band.
    pub settling_time: f64,
    /// |Δf| is still outside the band at the window end.
    pub unsettled: bool,
    /// |Δf| at the last sample before the window ends.
    pub final_deviation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransientReport {
    pub band: f64,
    pub entries: Vec<EventTransient>,
}

impl TransientReport {
    pub fn for_area(&self, area: usize) -> impl Iterator<Item = &EventTransient> {
        self.entries.iter().filter(move |e| e.area == area)
    }
}

/// Per-area, per-event Δf transient figures. Each window runs from its event
/// to the next event or the end of the trace.
pub fn transient_metrics(trace: &SimTrace, events: &[f64], band: f64) -> Result<TransientReport> {
    if trace.is_empty() {
        return Err(LfcError::EmptyTrace);
    }
    if !(band > 0.0) {
        return Err(LfcError::param(format!("settling band must be > 0, got {band}")));
    }
    let end = trace.samples.last().map_or(0.0, |s| s.t);
    let mut events: Vec<f64> = events.iter().copied().filter(|&e| e >= 0.0 && e < end).collect();
    events.sort_by(f64::total_cmp);
    events.dedup();

    let mut entries = Vec::new();
    for area in 0..trace.areas() {
        let df = trace.series(area, idx::FREQ);
        for (n, &event) in events.iter().enumerate() {
            let window_end = events.get(n + 1).copied().unwrap_or(end);
            let window: Vec<(f64, f64)> = trace
                .samples
                .iter()
                .zip(&df)
                .filter(|(s, _)| s.t >= event - 1e-9 && s.t < window_end - 1e-9)
                .map(|(s, v)| (s.t, *v))
                .collect();
            entries.push(window_transient(area, event, window_end, &window, band));
        }
    }
    Ok(TransientReport { band, entries })
}

fn window_transient(area: usize, event: f64, window_end: f64, window: &[(f64, f64)], band: f64) -> EventTransient {
    let overshoot = window.iter().fold(0.0f64, |m, (_, v)| m.max(*v));
    let undershoot = window.iter().fold(0.0f64, |m, (_, v)| m.max(-*v));
    let final_deviation = window.last().map_or(0.0, |(_, v)| v.abs());
    // last sample outside the band, then interpolate the crossing into the band
    let last_out = window.iter().rposition(|(_, v)| v.abs() > band);
    let settling_time = match last_out {
        None => 0.0,
        Some(k) if k + 1 < window.len() => {
            let (t0, v0) = window[k];
            let (t1, v1) = window[k + 1];
            let (a0, a1) = (v0.abs(), v1.abs());
            let frac = if a0 > a1 { (a0 - band) / (a0 - a1) } else { 0.0 };
            t0 + frac * (t1 - t0) - event
        }
        Some(_) => window_end - event,
    };
    EventTransient {
        area,
        event,
        window_end,
        overshoot,
        undershoot,
        peak: overshoot.max(undershoot),
        settling_time,
        unsettled: last_out.is_some_and(|k| k + 1 == window.len()),
        final_deviation,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndexComparison {
    pub name: &'static str,
    pub test: f64,
    pub baseline: f64,
    /// (baseline − test)/baseline·100; `None` when the baseline is zero and
    /// the test value is not.
    pub improvement: Option<f64>,
}

impl IndexComparison {
    pub fn ratio(&self) -> Option<f64> {
        (self.baseline != 0.0).then(|| self.test / self.baseline)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub indices: [IndexComparison; 4],
}

impl ComparisonReport {
    pub fn get(&self, name: &str) -> Option<&IndexComparison> {
        self.indices.iter().find(|c| c.name.eq_ignore_ascii_case(name))
    }
}

pub fn improvement_percent(test: f64, baseline: f64) -> Option<f64> {
    if test == baseline {
        Some(0.0)
    } else if baseline == 0.0 {
        None
    } else {
        Some((baseline - test) / baseline * 100.0)
    }
}

pub fn compare_controllers(test: &IndexReport, baseline: &IndexReport) -> ComparisonReport {
    let (t, b) = (test.values(), baseline.values());
    let indices = std::array::from_fn(|k| IndexComparison {
        name: IndexReport::NAMES[k],
        test: t[k],
        baseline: b[k],
        improvement: improvement_percent(t[k], b[k]),
    });
    ComparisonReport { indices }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs().max(1e-300)
    }

    #[test]
    fn trapezoid_examples() {
        assert_eq!(trapezoid(&[], 0.1), 0.0);
        assert_eq!(trapezoid(&[3.0], 0.1), 0.0);
        assert!(close(trapezoid(&[0.0, 1.0, 2.0], 0.5), 1.0, 1e-15));
    }

    #[test]
    fn constant_error_closed_forms() {
        let (c, t_end, dt) = (0.3, 10.0, 0.005);
        let n = (t_end / dt) as usize + 1;
        let times: Vec<f64> = (0..n).map(|k| k as f64 * dt).collect();
        let r = indices_from_series(&times, &vec![c; n], &vec![c * c; n], dt);
        assert!(close(r.iae, c * t_end, 1e-9));
        assert!(close(r.itae, c * t_end * t_end / 2.0, 1e-9));
        assert!(close(r.ise, c * c * t_end, 1e-9));
        assert!(close(r.itse, c * c * t_end * t_end / 2.0, 1e-9));
    }

    #[test]
    fn published_improvements() {
        assert!((improvement_percent(4.430051e-7, 8.712740e-6).unwrap() - 94.9).abs() < 0.05);
        assert!((improvement_percent(1.914747e-9, 3.441012e-8).unwrap() - 94.4).abs() < 0.05);
        assert_eq!(improvement_percent(0.0, 0.0), Some(0.0));
        assert_eq!(improvement_percent(1.0, 0.0), None);
        let r = IndexReport {
            itae: 1.0,
            itse: 2.0,
            ise: 3.0,
            iae: 4.0,
        };
        let cmp = compare_controllers(&r, &r);
        assert!(cmp.indices.iter().all(|c| c.improvement == Some(0.0)));
        assert_eq!(cmp.get("itse").unwrap().test, 2.0);
    }

    #[test]
    fn damped_settling_time() {
        let (c, b, dt) = (1.0, 1e-2, 1e-3);
        let window: Vec<(f64, f64)> = (0..20_000).map(|k| (k as f64 * dt, c * (-(k as f64) * dt).exp())).collect();
        let e = window_transient(0, 0.0, 20.0, &window, b);
        assert!((e.settling_time - (c / b).ln()).abs() < 1e-6);
        assert!(!e.unsettled);
        assert_eq!(e.overshoot, 1.0);
        assert_eq!(e.undershoot, 0.0);

        let flat = vec![(0.0, 0.0), (1.0, 0.0)];
        let e = window_transient(0, 0.0, 2.0, &flat, b);
        assert_eq!((e.overshoot, e.settling_time, e.unsettled), (0.0, 0.0, false));

        let rising = vec![(0.0, 0.0), (1.0, 1.0)];
        let e = window_transient(0, 0.0, 2.0, &rising, b);
        assert!(e.unsettled);
        assert_eq!(e.settling_time, 2.0);
    }
}
