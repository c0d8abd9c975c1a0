//! Line-oriented scenario files.
//!
//! ```text
//! # comment
//! [scenario]
//! name = bench39
//! horizon = 400
//! dt = 0.005
//! controller = gitsmc          # gitsmc | pi | none
//! controller_period = none     # seconds, or none for continuous
//! control_limit = none
//! noise_std = 0.005
//! noise_seed = 42
//!
//! [monitor]
//! reach_delta = 0.1
//! exclusion_window = 0.5
//!
//! [topology]
//! tie = 1 3 1.3272             # 1-based areas, coefficient
//!
//! [gitsmc]                     # defaults for every area
//! lambda1 = 24
//! ...
//! [pi]
//! kp = 0.5
//! ki = 0.2
//! integral_limit = none
//!
//! [area.1]
//! beta = 22.2314
//! a.1 = 0 8.33 0 0 0 0 0       # rows of A0, or `params = H D R T_t T_g`
//! b = 0 0 0 0 12.43 0 0
//! psi.2 = 5 0 0                # rows of the 7x3 disturbance input
//! theta = 0 0 0 0 0.0804 0 0   # or `surface_pole = 3`
//! load = 50 250 0.5            # start end level, repeatable
//! gitsmc.eta1 = 3              # per-area override
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use crate::control::{regulating_surface_row, GitsmcGains, PiGains};
use crate::error::{LfcError, Result};
use crate::plant::{
    build_plant_matrices, AreaParameters, PlantMatrices, TieLineTopology, DISTURBANCE_DIM, STATE_DIM,
};
use crate::sim::{
    AreaConfig, AreaSchedule, ControllerKind, DisturbanceSchedule, MonitorThresholds, ScenarioConfig, Segment,
};

fn syntax(line: usize, message: impl Into<String>) -> LfcError {
    LfcError::ConfigSyntax {
        line,
        message: message.into(),
    }
}

#[derive(Debug, Clone)]
struct Entry {
    line: usize,
    key: String,
    value: String,
}

#[derive(Debug, Default)]
struct Sections {
    /// Section name → entries in file order.
    map: BTreeMap<String, (usize, Vec<Entry>)>,
}

fn tokenize(text: &str) -> Result<Sections> {
    let mut sections = Sections::default();
    let mut current: Option<String> = None;
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| syntax(line, "unterminated section header"))?
                .trim()
                .to_string();
            if name.is_empty() {
                return Err(syntax(line, "empty section name"));
            }
            if sections.map.contains_key(&name) {
                return Err(syntax(line, format!("duplicate section [{name}]")));
            }
            sections.map.insert(name.clone(), (line, Vec::new()));
            current = Some(name);
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| syntax(line, format!("expected `key = value`, got `{content}`")))?;
        let section = current.as_ref().ok_or_else(|| syntax(line, "key outside of any section"))?;
        let key = key.trim();
        if key.is_empty() {
            return Err(syntax(line, "empty key"));
        }
        sections.map.get_mut(section).expect("section exists").1.push(Entry {
            line,
            key: key.to_string(),
            value: value.trim().to_string(),
        });
    }
    Ok(sections)
}

fn number(e: &Entry) -> Result<f64> {
    let v: f64 = e
        .value
        .parse()
        .map_err(|_| syntax(e.line, format!("{}: `{}` is not a number", e.key, e.value)))?;
    if !v.is_finite() {
        return Err(syntax(e.line, format!("{}: value must be finite", e.key)));
    }
    Ok(v)
}

fn optional_number(e: &Entry) -> Result<Option<f64>> {
    if e.value.eq_ignore_ascii_case("none") {
        Ok(None)
    } else {
        number(e).map(Some)
    }
}

fn numbers<const N: usize>(e: &Entry) -> Result<[f64; N]> {
    let parts: Vec<&str> = e.value.split_whitespace().collect();
    if parts.len() != N {
        return Err(syntax(e.line, format!("{}: expected {N} numbers, got {}", e.key, parts.len())));
    }
    let mut out = [0.0; N];
    for (o, p) in out.iter_mut().zip(parts) {
        *o = p
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| syntax(e.line, format!("{}: `{p}` is not a finite number", e.key)))?;
    }
    Ok(out)
}

fn row_index(e: &Entry, prefix: &str) -> Result<Option<usize>> {
    let Some(rest) = e.key.strip_prefix(prefix) else {
        return Ok(None);
    };
    match rest.parse::<usize>() {
        Ok(k) if (1..=STATE_DIM).contains(&k) => Ok(Some(k - 1)),
        _ => Err(syntax(e.line, format!("{}: row must be 1..={STATE_DIM}", e.key))),
    }
}

fn unknown(e: &Entry, section: &str) -> LfcError {
    syntax(e.line, format!("unknown key `{}` in [{section}]", e.key))
}

fn apply_gitsmc(g: &mut GitsmcGains, key: &str, e: &Entry) -> Result<bool> {
    let slot = match key {
        "lambda1" => &mut g.lambda1,
        "lambda2" => &mut g.lambda2,
        "alpha" => &mut g.alpha,
        "eta1" => &mut g.eta1,
        "eta2" => &mut g.eta2,
        "boundary_eps" => &mut g.boundary_eps,
        _ => return Ok(false),
    };
    *slot = number(e)?;
    Ok(true)
}

fn apply_pi(g: &mut PiGains, key: &str, e: &Entry) -> Result<bool> {
    match key {
        "kp" => g.kp = number(e)?,
        "ki" => g.ki = number(e)?,
        "integral_limit" => g.integral_limit = optional_number(e)?,
        _ => return Ok(false),
    }
    Ok(true)
}

#[derive(Default)]
struct AreaDraft {
    beta: Option<f64>,
    zeta: Option<f64>,
    rows: [Option<[f64; STATE_DIM]>; STATE_DIM],
    params: Option<(usize, [f64; 5])>,
    b: Option<[f64; STATE_DIM]>,
    psi: [Option<[f64; DISTURBANCE_DIM]>; STATE_DIM],
    theta: Option<[f64; STATE_DIM]>,
    surface_pole: Option<f64>,
    initial: Option<[f64; STATE_DIM]>,
    schedule: AreaSchedule,
    gitsmc: Vec<Entry>,
    pi: Vec<Entry>,
}

/// Parses a scenario file's text.
pub fn parse_scenario(text: &str) -> Result<ScenarioConfig> {
    let sections = tokenize(text)?;
    let mut name = String::from("scenario");
    let mut horizon = None;
    let mut dt = None;
    let mut controller = ControllerKind::Gitsmc;
    let mut controller_period = None;
    let mut control_limit = None;
    let mut noise_std = 0.0;
    let mut noise_seed = 0u64;
    let mut monitor = MonitorThresholds::default();
    let mut ties: Vec<(usize, usize, usize, f64)> = Vec::new();
    let mut gitsmc = GitsmcGains::default();
    let mut pi = PiGains::default();
    let mut drafts: BTreeMap<usize, AreaDraft> = BTreeMap::new();

    for (section, (header_line, entries)) in &sections.map {
        match section.as_str() {
            "scenario" => {
                for e in entries {
                    match e.key.as_str() {
                        "name" => name = e.value.clone(),
                        "horizon" => horizon = Some(number(e)?),
                        "dt" => dt = Some(number(e)?),
                        "controller" => {
                            controller = ControllerKind::parse(&e.value).map_err(|err| syntax(e.line, err.to_string()))?
                        }
                        "controller_period" => controller_period = optional_number(e)?,
                        "control_limit" => control_limit = optional_number(e)?,
                        "noise_std" => noise_std = number(e)?,
                        "noise_seed" => {
                            noise_seed = e
                                .value
                                .parse()
                                .map_err(|_| syntax(e.line, "noise_seed must be an unsigned 64-bit integer"))?
                        }
                        _ => return Err(unknown(e, section)),
                    }
                }
            }
            "monitor" => {
                for e in entries {
                    match e.key.as_str() {
                        "reach_delta" => monitor.reach_delta = number(e)?,
                        "exclusion_window" => monitor.exclusion_window = number(e)?,
                        _ => return Err(unknown(e, section)),
                    }
                }
            }
            "topology" => {
                for e in entries {
                    if e.key != "tie" {
                        return Err(unknown(e, section));
                    }
                    let [i, j, c] = numbers::<3>(e)?;
                    if i < 1.0 || j < 1.0 || i.fract() != 0.0 || j.fract() != 0.0 {
                        return Err(syntax(e.line, "tie areas must be positive integers"));
                    }
                    ties.push((e.line, i as usize - 1, j as usize - 1, c));
                }
            }
            "gitsmc" => {
                for e in entries {
                    if !apply_gitsmc(&mut gitsmc, &e.key, e)? {
                        return Err(unknown(e, section));
                    }
                }
            }
            "pi" => {
                for e in entries {
                    if !apply_pi(&mut pi, &e.key, e)? {
                        return Err(unknown(e, section));
                    }
                }
            }
            other => {
                let index = other
                    .strip_prefix("area.")
                    .and_then(|n| n.parse::<usize>().ok())
                    .filter(|&n| n >= 1)
                    .ok_or_else(|| syntax(*header_line, format!("unknown section [{other}]")))?;
                let mut d = AreaDraft::default();
                for e in entries {
                    if let Some(r) = row_index(e, "a.")? {
                        d.rows[r] = Some(numbers(e)?);
                        continue;
                    }
                    if let Some(r) = row_index(e, "psi.")? {
                        d.psi[r] = Some(numbers(e)?);
                        continue;
                    }
                    if let Some(k) = e.key.strip_prefix("gitsmc.") {
                        let mut probe = GitsmcGains::default();
                        if !apply_gitsmc(&mut probe, k, e)? {
                            return Err(unknown(e, section));
                        }
                        d.gitsmc.push(e.clone());
                        continue;
                    }
                    if let Some(k) = e.key.strip_prefix("pi.") {
                        let mut probe = PiGains::default();
                        if !apply_pi(&mut probe, k, e)? {
                            return Err(unknown(e, section));
                        }
                        d.pi.push(e.clone());
                        continue;
                    }
                    match e.key.as_str() {
                        "beta" => d.beta = Some(number(e)?),
                        "zeta" => d.zeta = Some(number(e)?),
                        "params" => d.params = Some((e.line, numbers(e)?)),
                        "b" => d.b = Some(numbers(e)?),
                        "theta" => d.theta = Some(numbers(e)?),
                        "surface_pole" => d.surface_pole = Some(number(e)?),
                        "initial" => d.initial = Some(numbers(e)?),
                        "load" | "solar" | "wind" => {
                            let [s, t, l] = numbers::<3>(e)?;
                            let seg = Segment::new(s, t, l);
                            match e.key.as_str() {
                                "load" => d.schedule.load.push(seg),
                                "solar" => d.schedule.solar.push(seg),
                                _ => d.schedule.wind.push(seg),
                            }
                        }
                        _ => return Err(unknown(e, section)),
                    }
                }
                drafts.insert(index, d);
            }
        }
    }

    let n = drafts.len();
    if n == 0 {
        return Err(LfcError::config("no [area.N] sections"));
    }
    if drafts.keys().copied().ne(1..=n) {
        return Err(LfcError::config(format!("area sections must be numbered 1..={n} without gaps")));
    }
    let mut topology = TieLineTopology::isolated(n);
    for (line, i, j, c) in ties {
        topology = topology.with_tie(i, j, c).map_err(|e| syntax(line, e.to_string()))?;
    }

    let mut areas = Vec::with_capacity(n);
    let mut schedules = Vec::with_capacity(n);
    for (index, d) in drafts {
        let label = format!("area {index}");
        let plant = area_plant(&d, topology.row_sum(index - 1), &label)?;
        let frequency_bias = match (d.beta, d.params) {
            (Some(b), _) => b,
            (None, Some((_, p))) => p[1] + 1.0 / p[2],
            (None, None) => return Err(LfcError::config(format!("{label}: missing beta"))),
        };
        let mut g = gitsmc;
        for e in &d.gitsmc {
            apply_gitsmc(&mut g, &e.key["gitsmc.".len()..], e)?;
        }
        let mut p = pi;
        for e in &d.pi {
            apply_pi(&mut p, &e.key["pi.".len()..], e)?;
        }
        areas.push(AreaConfig {
            plant,
            frequency_bias,
            gitsmc: g,
            pi: p,
            zeta: d.zeta.unwrap_or(1.0),
            initial: d.initial.unwrap_or([0.0; STATE_DIM]),
        });
        schedules.push(d.schedule);
    }

    let config = ScenarioConfig {
        name,
        horizon: horizon.ok_or_else(|| LfcError::config("[scenario] horizon is required"))?,
        dt: dt.ok_or_else(|| LfcError::config("[scenario] dt is required"))?,
        controller,
        topology,
        areas,
        schedule: DisturbanceSchedule {
            areas: schedules,
            noise_std,
            noise_seed,
        },
        controller_period,
        control_limit,
        monitor,
    };
    config.validate()?;
    Ok(config)
}

fn area_plant(d: &AreaDraft, tie_row_sum: f64, label: &str) -> Result<PlantMatrices> {
    let any_rows = d.rows.iter().any(Option::is_some);
    let mut plant = match (d.params, any_rows) {
        (Some(_), true) => {
            return Err(LfcError::config(format!("{label}: give either params or a.1..a.7, not both")));
        }
        (Some((line, [h, damping, droop, tt, tg])), false) => {
            let params = AreaParameters::new(h, damping, droop, tt, tg).map_err(|e| syntax(line, e.to_string()))?;
            build_plant_matrices(&params, tie_row_sum)?
        }
        (None, true) => {
            let mut a = [[0.0; STATE_DIM]; STATE_DIM];
            for (r, row) in d.rows.iter().enumerate() {
                a[r] = row.ok_or_else(|| LfcError::config(format!("{label}: missing a.{}", r + 1)))?;
            }
            let b = d.b.ok_or_else(|| LfcError::config(format!("{label}: missing b")))?;
            let mut surface_row = [0.0; STATE_DIM];
            if b[4] != 0.0 {
                surface_row[4] = 1.0 / b[4];
            }
            PlantMatrices {
                a,
                b,
                psi: [[0.0; DISTURBANCE_DIM]; STATE_DIM],
                surface_row,
            }
        }
        (None, false) => return Err(LfcError::config(format!("{label}: needs params or a.1..a.7"))),
    };
    if d.params.is_some() {
        if let Some(b) = d.b {
            plant.b = b;
        }
    }
    for (r, row) in d.psi.iter().enumerate() {
        if let Some(row) = row {
            plant.psi[r] = *row;
        }
    }
    match (d.theta, d.surface_pole) {
        (Some(_), Some(_)) => {
            return Err(LfcError::config(format!("{label}: give either theta or surface_pole, not both")));
        }
        (Some(t), None) => plant.surface_row = t,
        (None, Some(p)) => plant.surface_row = regulating_surface_row(&plant, p)?,
        (None, None) => {}
    }
    Ok(plant)
}

pub fn load_scenario(path: &Path) -> Result<ScenarioConfig> {
    parse_scenario(&std::fs::read_to_string(path)?)
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(" ")
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "none".to_string(), |x| format!("{x}"))
}

fn write_gitsmc(out: &mut String, prefix: &str, g: &GitsmcGains, base: Option<&GitsmcGains>) {
    let fields = [
        ("lambda1", g.lambda1, base.map(|b| b.lambda1)),
        ("lambda2", g.lambda2, base.map(|b| b.lambda2)),
        ("alpha", g.alpha, base.map(|b| b.alpha)),
        ("eta1", g.eta1, base.map(|b| b.eta1)),
        ("eta2", g.eta2, base.map(|b| b.eta2)),
        ("boundary_eps", g.boundary_eps, base.map(|b| b.boundary_eps)),
    ];
    for (k, v, b) in fields {
        if b != Some(v) {
            out.push_str(&format!("{prefix}{k} = {v}\n"));
        }
    }
}

fn write_pi(out: &mut String, prefix: &str, g: &PiGains, base: Option<&PiGains>) {
    if base.map(|b| b.kp) != Some(g.kp) {
        out.push_str(&format!("{prefix}kp = {}\n", g.kp));
    }
    if base.map(|b| b.ki) != Some(g.ki) {
        out.push_str(&format!("{prefix}ki = {}\n", g.ki));
    }
    if base.map(|b| b.integral_limit) != Some(g.integral_limit) {
        out.push_str(&format!("{prefix}integral_limit = {}\n", opt(g.integral_limit)));
    }
}

/// Serialises a scenario; every number is written in shortest round-trip form,
/// so `parse_scenario(write_scenario(c)) == c`.
pub fn write_scenario(c: &ScenarioConfig) -> String {
    let mut out = String::new();
    out.push_str("[scenario]\n");
    out.push_str(&format!("name = {}\n", c.name));
    out.push_str(&format!("horizon = {}\n", c.horizon));
    out.push_str(&format!("dt = {}\n", c.dt));
    out.push_str(&format!("controller = {}\n", c.controller));
    out.push_str(&format!("controller_period = {}\n", opt(c.controller_period)));
    out.push_str(&format!("control_limit = {}\n", opt(c.control_limit)));
    out.push_str(&format!("noise_std = {}\n", c.schedule.noise_std));
    out.push_str(&format!("noise_seed = {}\n", c.schedule.noise_seed));

    out.push_str("\n[monitor]\n");
    out.push_str(&format!("reach_delta = {}\n", c.monitor.reach_delta));
    out.push_str(&format!("exclusion_window = {}\n", c.monitor.exclusion_window));

    out.push_str("\n[topology]\n");
    for (i, j, t) in c.topology.ties() {
        out.push_str(&format!("tie = {} {} {t}\n", i + 1, j + 1));
    }

    let base_g = c.areas[0].gitsmc;
    let base_p = c.areas[0].pi;
    out.push_str("\n[gitsmc]\n");
    write_gitsmc(&mut out, "", &base_g, None);
    out.push_str("\n[pi]\n");
    write_pi(&mut out, "", &base_p, None);

    for (i, a) in c.areas.iter().enumerate() {
        out.push_str(&format!("\n[area.{}]\n", i + 1));
        out.push_str(&format!("beta = {}\n", a.frequency_bias));
        out.push_str(&format!("zeta = {}\n", a.zeta));
        for (r, row) in a.plant.a.iter().enumerate() {
            out.push_str(&format!("a.{} = {}\n", r + 1, join(row)));
        }
        out.push_str(&format!("b = {}\n", join(&a.plant.b)));
        for (r, row) in a.plant.psi.iter().enumerate() {
            if row.iter().any(|v| *v != 0.0) {
                out.push_str(&format!("psi.{} = {}\n", r + 1, join(row)));
            }
        }
        out.push_str(&format!("theta = {}\n", join(&a.plant.surface_row)));
        if a.initial.iter().any(|v| *v != 0.0) {
            out.push_str(&format!("initial = {}\n", join(&a.initial)));
        }
        let s = &c.schedule.areas[i];
        for (key, segs) in [("load", &s.load), ("solar", &s.solar), ("wind", &s.wind)] {
            for seg in segs {
                out.push_str(&format!("{key} = {} {} {}\n", seg.start, seg.end, seg.level));
            }
        }
        write_gitsmc(&mut out, "gitsmc.", &a.gitsmc, Some(&base_g));
        write_pi(&mut out, "pi.", &a.pi, Some(&base_p));
    }
    out
}
