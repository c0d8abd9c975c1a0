//! Four-area reduction of the New England 39-bus system: generator and area
//! data, the published per-area matrices, the standard disturbance scenario
//! and an audit of formula-built matrices against the published ones.

use std::f64::consts::PI;

use crate::control::{regulating_surface_row, GitsmcGains, PiGains};
use crate::error::{LfcError, Result};
use crate::plant::{
    build_plant_matrices, AreaParameters, GeneratorParameters, PlantMatrices, TieLineTopology, DISTURBANCE_DIM,
    STATE_DIM,
};
use crate::sim::{
    AreaConfig, AreaSchedule, ControllerKind, DisturbanceSchedule, MonitorThresholds, ScenarioConfig, Segment,
};

pub const AREAS: usize = 4;
pub const HORIZON: f64 = 400.0;
pub const DEFAULT_DT: f64 = 0.005;
pub const NOISE_STD: f64 = 0.005;
pub const NOISE_SEED: u64 = 42;
/// Installed PV plus wind capacity on the system base.
pub const RENEWABLE_CAPACITY_PU: f64 = 0.8;
/// Closed-loop pole (1/s) placed by the benchmark surface row.
pub const SURFACE_POLE: f64 = 3.0;
/// Declared lumped-perturbation bound per area.
pub const ZETA: f64 = 50.0;
pub const DAMPING: f64 = 1.0;

/// Published 7-element switching vectors; kept for reference only, the
/// controller uses scalar gains.
pub const PUBLISHED_ETA1: [f64; 7] = [1.498, 1.991, 0.637, 0.728, 0.1582, 0.248, 0.239];
pub const PUBLISHED_ETA2: [f64; 7] = [2.498, 2.991, 0.737, 0.728, 0.258, 0.148, 0.339];

/// (rating MVA, T_t, T_g, R, H) for G1..G10.
const GENERATORS: [(f64, f64, f64, f64, f64); 10] = [
    (1000.0, 0.3742, 0.0804, 0.0471, 10.0),
    (520.81, 0.3888, 0.0774, 0.0541, 6.06),
    (650.0, 0.3645, 0.0748, 0.0518, 7.16),
    (632.0, 0.3707, 0.0759, 0.0540, 5.72),
    (508.0, 0.3770, 0.0729, 0.0470, 5.20),
    (650.0, 0.4316, 0.0791, 0.0459, 6.96),
    (560.0, 0.3657, 0.0722, 0.0481, 5.28),
    (540.0, 0.3665, 0.0805, 0.0484, 4.86),
    (830.0, 0.4222, 0.0737, 0.0479, 6.90),
    (250.0, 0.4324, 0.0852, 0.0525, 8.40),
];

/// 1-based area of each generator.
const GENERATOR_AREA: [usize; 10] = [1, 2, 2, 3, 3, 3, 3, 4, 4, 4];

/// Tabulated equivalent constants (T_t, T_g, R, H) per area. Area 2 uses
/// H = 6.6706; its β/H cells are printed in swapped columns.
const AREA_TABLE: [(f64, f64, f64, f64); AREAS] = [
    (0.3742, 0.0804, 0.0471, 10.0),
    (0.3766, 0.0760, 0.0528, 6.6706),
    (0.3862, 0.0750, 0.0486, 6.6706),
    (0.4070, 0.0798, 0.0487, 6.4515),
];

pub const FREQUENCY_BIAS: [f64; AREAS] = [22.2314, 19.9394, 21.5761, 21.5339];

const TIES: [(usize, usize, f64); 4] = [(0, 2, 1.3272), (1, 2, 0.2959), (1, 3, 0.6128), (2, 3, 0.3959)];

/// Published A0 per area (row-major, as printed).
const PUBLISHED_A: [[[f64; STATE_DIM]; STATE_DIM]; AREAS] = [
    [
        [0.0, 8.33, 0.0, 0.0, 0.0, 0.0, 0.0],
        [-5.0, -5.0, 5.0, 0.0, 0.0, 5.0, 5.0],
        [0.0, 0.0, -2.67, 0.0, 2.67, 0.0, 0.0],
        [5.0, 11.15, 0.0, 0.0, 0.0, 0.0, 0.0],
        [0.0, -264.07, 0.0, -12.43, -12.43, 0.0, 0.0],
        [0.0, 0.0, 0.0, 0.0, 0.0, -25.0, 0.0],
        [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, -23.81],
    ],
    [
        [0.0, 5.70, 0.0, 0.0, 0.0, 0.0, 0.0],
        [-3.33, -3.33, 3.33, 0.0, 0.0, 3.33, 3.33],
        [0.0, 0.0, -2.65, 0.0, 2.65, 0.0, 0.0],
        [5.0, 99.69, 0.0, 0.0, 0.0, 0.0, 0.0],
        [0.0, -279.36, 0.0, -13.15, -13.15, 0.0, 0.0],
        [0.0, 0.0, 0.0, 0.0, 0.0, -25.0, 0.0],
        [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, -23.81],
    ],
    [
        [0.0, 12.68, 0.0, 0.0, 0.0, 0.0, 0.0],
        [-2.92, -2.92, 2.92, 0.0, 0.0, 2.92, 2.92],
        [0.0, 0.0, -2.58, 0.0, 2.58, 0.0, 0.0],
        [5.0, 107.88, 0.0, 0.0, 0.0, 0.0, 0.0],
        [0.0, -423.37, 0.0, -13.33, -13.33, 0.0, 0.0],
        [0.0, 0.0, 0.0, 0.0, 0.0, -25.0, 0.0],
        [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, -23.81],
    ],
    [
        [0.0, 6.33, 0.0, 0.0, 0.0, 0.0, 0.0],
        [-3.22, -3.22, 3.22, 0.0, 0.0, 3.22, 3.22],
        [0.0, 0.0, -2.45, 0.0, 2.45, 0.0, 0.0],
        [5.0, 107.66, 0.0, 0.0, 0.0, 0.0, 0.0],
        [0.0, -257.31, 0.0, -12.53, -12.53, 0.0, 0.0],
        [0.0, 0.0, 0.0, 0.0, 0.0, -25.0, 0.0],
        [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, -23.81],
    ],
];

const PUBLISHED_B: [f64; AREAS] = [12.43, 13.15, 20.57, 12.53];

pub fn generators() -> Vec<(usize, GeneratorParameters)> {
    GENERATORS
        .iter()
        .zip(GENERATOR_AREA)
        .map(|(&(s, tt, tg, r, h), area)| {
            let g = GeneratorParameters::new(s, tt, tg, r, h, DAMPING).expect("tabulated generator is valid");
            (area, g)
        })
        .collect()
}

/// Generators of one 1-based area.
pub fn area_generators(area: usize) -> Vec<GeneratorParameters> {
    generators().into_iter().filter(|(a, _)| *a == area).map(|(_, g)| g).collect()
}

/// Tabulated equivalent constants of every area.
pub fn area_parameters() -> [AreaParameters; AREAS] {
    std::array::from_fn(|i| {
        let (tt, tg, r, h) = AREA_TABLE[i];
        AreaParameters::new(h, DAMPING, r, tt, tg).expect("tabulated area is valid")
    })
}

pub fn topology() -> TieLineTopology {
    TIES.iter()
        .try_fold(TieLineTopology::isolated(AREAS), |t, &(i, j, c)| t.with_tie(i, j, c))
        .expect("benchmark ties are valid")
}

/// Published matrices with their printed surface rows. Disturbance inputs are
/// not printed; each channel gets the gain that gives it the same DC effect
/// as the state it drives (ψ_load = −A[2][3], ψ_pv = −A[6][6], ψ_wt = −A[7][7]).
pub fn published_matrices() -> [PlantMatrices; AREAS] {
    std::array::from_fn(|i| {
        let a = PUBLISHED_A[i];
        let mut b = [0.0; STATE_DIM];
        b[4] = PUBLISHED_B[i];
        let mut psi = [[0.0; DISTURBANCE_DIM]; STATE_DIM];
        psi[1][0] = -a[1][2];
        psi[5][1] = -a[5][5];
        psi[6][2] = -a[6][6];
        let mut surface_row = [0.0; STATE_DIM];
        surface_row[4] = 1.0 / PUBLISHED_B[i];
        PlantMatrices {
            a,
            b,
            psi,
            surface_row,
        }
    })
}

/// Formula-built matrices from the tabulated area constants and topology.
pub fn formula_matrices() -> Result<[PlantMatrices; AREAS]> {
    let params = area_parameters();
    let topo = topology();
    let built: Vec<PlantMatrices> = (0..AREAS)
        .map(|i| build_plant_matrices(&params[i], topo.row_sum(i)))
        .collect::<Result<_>>()?;
    Ok(built.try_into().expect("four areas"))
}

/// Plant used by the benchmark run: published matrices with γ recomputed
/// from the topology (so tie flows sum to zero exactly) and a regulating
/// surface row.
pub fn simulation_matrices() -> Result<[PlantMatrices; AREAS]> {
    let topo = topology();
    let mut out = published_matrices();
    for (i, m) in out.iter_mut().enumerate() {
        m.a[0][1] = 2.0 * PI * topo.row_sum(i);
        m.surface_row = regulating_surface_row(m, SURFACE_POLE)?;
    }
    Ok(out)
}

pub fn schedule() -> DisturbanceSchedule {
    let loads = [(50.0, 250.0, 0.5), (150.0, 250.0, 1.0), (250.0, 300.0, 1.0), (250.0, 350.0, 1.0)];
    let areas = loads
        .iter()
        .map(|&(s, e, l)| AreaSchedule {
            load: vec![Segment::new(s, e, l)],
            solar: vec![Segment::new(50.0, 300.0, 0.25)],
            wind: vec![
                Segment::new(0.0, 100.0, 0.8),
                Segment::new(100.0, 270.0, 0.9),
                Segment::new(270.0, HORIZON, 0.0),
            ],
        })
        .collect();
    DisturbanceSchedule {
        areas,
        noise_std: NOISE_STD,
        noise_seed: NOISE_SEED,
    }
}

pub fn gitsmc_gains() -> GitsmcGains {
    GitsmcGains {
        lambda1: 24.0,
        lambda2: 24.0,
        alpha: 1.7,
        eta1: 2.0,
        eta2: 0.5,
        boundary_eps: 0.01,
    }
}

/// The standard four-area scenario under the sliding-mode controller.
pub fn builtin_benchmark() -> ScenarioConfig {
    let plants = simulation_matrices().expect("benchmark surface rows are placeable");
    ScenarioConfig {
        name: "bench39".into(),
        horizon: HORIZON,
        dt: DEFAULT_DT,
        controller: ControllerKind::Gitsmc,
        topology: topology(),
        areas: (0..AREAS)
            .map(|i| AreaConfig {
                plant: plants[i],
                frequency_bias: FREQUENCY_BIAS[i],
                gitsmc: gitsmc_gains(),
                pi: PiGains::default(),
                zeta: ZETA,
                initial: [0.0; STATE_DIM],
            })
            .collect(),
        schedule: schedule(),
        controller_period: None,
        control_limit: None,
        monitor: MonitorThresholds {
            reach_delta: 10.0 * gitsmc_gains().boundary_eps,
            exclusion_window: 0.5,
        },
    }
}

/// Every tabulated quantity of the benchmark in one place.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkData {
    /// (1-based area, generator).
    pub generators: Vec<(usize, GeneratorParameters)>,
    pub areas: [AreaParameters; AREAS],
    pub frequency_bias: [f64; AREAS],
    pub topology: TieLineTopology,
    pub published: [PlantMatrices; AREAS],
    pub schedule: DisturbanceSchedule,
    pub gains: GitsmcGains,
    pub published_eta1: [f64; 7],
    pub published_eta2: [f64; 7],
    pub pv: (f64, f64),
    pub wt: (f64, f64),
    pub renewable_capacity: f64,
}

pub fn benchmark_data() -> BenchmarkData {
    BenchmarkData {
        generators: generators(),
        areas: area_parameters(),
        frequency_bias: FREQUENCY_BIAS,
        topology: topology(),
        published: published_matrices(),
        schedule: schedule(),
        gains: gitsmc_gains(),
        published_eta1: PUBLISHED_ETA1,
        published_eta2: PUBLISHED_ETA2,
        pv: (1.8, 1.0),
        wt: (1.5, 1.0),
        renewable_capacity: RENEWABLE_CAPACITY_PU,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MatrixKind {
    A,
    B,
}

impl std::fmt::Display for MatrixKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            MatrixKind::A => "A0",
            MatrixKind::B => "B0",
        })
    }
}

/// Whether an anomaly was known when the data were transcribed or surfaced
/// by the audit itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnomalyOrigin {
    Documented,
    Discovered,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KnownAnomaly {
    /// 1-based area.
    pub area: usize,
    pub matrix: MatrixKind,
    /// 1-based row and column (column 1 for B0).
    pub row: usize,
    pub col: usize,
    pub origin: AnomalyOrigin,
    pub note: &'static str,
}

pub fn known_anomalies() -> Vec<KnownAnomaly> {
    use AnomalyOrigin::*;
    use MatrixKind::*;
    let mut out = vec![KnownAnomaly {
        area: 1,
        matrix: A,
        row: 4,
        col: 2,
        origin: Documented,
        note: "K_E·β printed as 11.15, formula gives 111.16 (dropped digit)",
    }];
    for area in 1..=AREAS {
        for col in [1, 2, 3, 6, 7] {
            out.push(KnownAnomaly {
                area,
                matrix: A,
                row: 2,
                col,
                origin: Documented,
                note: "inertia entry ≈100× larger than 1/(2H)",
            });
        }
    }
    out.push(KnownAnomaly {
        area: 3,
        matrix: A,
        row: 5,
        col: 2,
        origin: Documented,
        note: "droop entry −423.37 vs −1/(R·T_g)",
    });
    out.push(KnownAnomaly {
        area: 3,
        matrix: B,
        row: 5,
        col: 1,
        origin: Documented,
        note: "input gain 20.57 vs 1/T_g",
    });
    out.push(KnownAnomaly {
        area: 2,
        matrix: A,
        row: 5,
        col: 2,
        origin: Discovered,
        note: "−279.36 equals −1/(0.0471·0.0760): area-1 droop used",
    });
    for area in 1..=AREAS {
        out.push(KnownAnomaly {
            area,
            matrix: A,
            row: 6,
            col: 6,
            origin: Discovered,
            note: "PV lag −25 implies T_PV = 0.04 s, not 1.8 s",
        });
        out.push(KnownAnomaly {
            area,
            matrix: A,
            row: 7,
            col: 7,
            origin: Discovered,
            note: "WT lag −23.81 implies T_WT = 0.042 s, not 1.5 s",
        });
    }
    out
}

/// The anomalies known when the data were transcribed.
pub fn documented_anomalies() -> Vec<KnownAnomaly> {
    known_anomalies()
        .into_iter()
        .filter(|a| a.origin == AnomalyOrigin::Documented)
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditEntry {
    pub area: usize,
    pub matrix: MatrixKind,
    pub row: usize,
    pub col: usize,
    pub built: f64,
    pub published: f64,
    pub rel_diff: f64,
    pub flagged: bool,
    pub anomaly: Option<KnownAnomaly>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditReport {
    pub rel_tol: f64,
    /// Elements whose built and published values differ at all.
    pub entries: Vec<AuditEntry>,
}

impl AuditReport {
    pub fn flagged(&self) -> impl Iterator<Item = &AuditEntry> {
        self.entries.iter().filter(|e| e.flagged)
    }

    /// Flagged elements with no ledger entry.
    pub fn unexplained(&self) -> impl Iterator<Item = &AuditEntry> {
        self.flagged().filter(|e| e.anomaly.is_none())
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// (area, matrix, row, col) of every flagged element.
    pub fn flag_set(&self) -> Vec<(usize, MatrixKind, usize, usize)> {
        self.flagged().map(|e| (e.area, e.matrix, e.row, e.col)).collect()
    }
}

pub fn relative_difference(built: f64, published: f64) -> f64 {
    (built - published).abs() / published.abs().max(1e-12)
}

/// Element-wise comparison of A0 and B0 for one 1-based area.
pub fn audit_matrices(area: usize, built: &PlantMatrices, published: &PlantMatrices, rel_tol: f64) -> Result<AuditReport> {
    if !(rel_tol >= 0.0) {
        return Err(LfcError::param(format!("rel_tol must be >= 0, got {rel_tol}")));
    }
    let ledger = known_anomalies();
    let lookup = |matrix, row, col| {
        ledger
            .iter()
            .find(|a| a.area == area && a.matrix == matrix && a.row == row && a.col == col)
            .copied()
    };
    let mut entries = Vec::new();
    let mut push = |matrix, row: usize, col: usize, b: f64, p: f64| {
        if b == p {
            return;
        }
        let rel_diff = relative_difference(b, p);
        entries.push(AuditEntry {
            area,
            matrix,
            row,
            col,
            built: b,
            published: p,
            rel_diff,
            flagged: rel_diff > rel_tol,
            anomaly: lookup(matrix, row, col),
        });
    };
    for r in 0..STATE_DIM {
        for c in 0..STATE_DIM {
            push(MatrixKind::A, r + 1, c + 1, built.a[r][c], published.a[r][c]);
        }
    }
    for r in 0..STATE_DIM {
        push(MatrixKind::B, r + 1, 1, built.b[r], published.b[r]);
    }
    Ok(AuditReport { rel_tol, entries })
}

/// Audits every selected area (1-based; `None` for all) of the formula-built
/// model against the published matrices.
pub fn audit_benchmark(rel_tol: f64, area: Option<usize>) -> Result<AuditReport> {
    if let Some(a) = area {
        if a == 0 || a > AREAS {
            return Err(LfcError::config(format!("area {a} outside 1..={AREAS}")));
        }
    }
    let built = formula_matrices()?;
    let published = published_matrices();
    let mut entries = Vec::new();
    for i in 0..AREAS {
        if area.is_some_and(|a| a != i + 1) {
            continue;
        }
        entries.extend(audit_matrices(i + 1, &built[i], &published[i], rel_tol)?.entries);
    }
    Ok(AuditReport { rel_tol, entries })
}
