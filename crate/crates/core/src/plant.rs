//! Per-area load-frequency models and the coupled multi-area dynamics.
//!
//! Each area carries seven deviation states, in this order:
//! tie-line power, frequency, turbine mechanical power, integrated area
//! control error, governor output, PV output and wind-turbine output.

use std::f64::consts::PI;

use crate::error::{LfcError, Result};

pub const STATE_DIM: usize = 7;
pub const DISTURBANCE_DIM: usize = 3;

pub type StateVec = [f64; STATE_DIM];

/// Positions inside an area state vector.
pub mod idx {
    pub const TIE: usize = 0;
    pub const FREQ: usize = 1;
    pub const MECH: usize = 2;
    pub const ACE_INT: usize = 3;
    pub const GOV: usize = 4;
    pub const PV: usize = 5;
    pub const WT: usize = 6;
}

pub const STATE_NAMES: [&str; STATE_DIM] = ["dP_tie", "df", "dP_m", "dE", "dP_g", "dP_pv", "dP_wt"];

fn require_positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(LfcError::param(format!("{name} must be finite and > 0, got {v}")))
    }
}

/// One synchronous generator as listed in a network data table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneratorParameters {
    pub rating_mva: f64,
    pub turbine_time: f64,
    pub governor_time: f64,
    pub droop: f64,
    pub inertia: f64,
    pub damping: f64,
}

impl GeneratorParameters {
    pub fn new(
        rating_mva: f64,
        turbine_time: f64,
        governor_time: f64,
        droop: f64,
        inertia: f64,
        damping: f64,
    ) -> Result<Self> {
        let g = GeneratorParameters {
            rating_mva,
            turbine_time,
            governor_time,
            droop,
            inertia,
            damping,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        require_positive("rating_mva", self.rating_mva)?;
        require_positive("turbine_time", self.turbine_time)?;
        require_positive("governor_time", self.governor_time)?;
        require_positive("droop", self.droop)?;
        require_positive("inertia", self.inertia)?;
        require_positive("damping", self.damping)
    }
}

/// Equivalent constants of one control area.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AreaParameters {
    pub inertia: f64,
    pub damping: f64,
    pub droop: f64,
    /// β = D + 1/R.
    pub frequency_bias: f64,
    pub turbine_time: f64,
    pub governor_time: f64,
    pub turbine_gain: f64,
    pub governor_gain: f64,
    pub integral_gain: f64,
    pub pv_time: f64,
    pub pv_gain: f64,
    pub wt_time: f64,
    pub wt_gain: f64,
}

pub const DEFAULT_INTEGRAL_GAIN: f64 = 5.0;
pub const DEFAULT_PV_TIME: f64 = 1.8;
pub const DEFAULT_PV_GAIN: f64 = 1.0;
pub const DEFAULT_WT_TIME: f64 = 1.5;
pub const DEFAULT_WT_GAIN: f64 = 1.0;

impl AreaParameters {
    /// Builds an area with β derived from `damping` and `droop` and every other
    /// constant at its default.
    pub fn new(
        inertia: f64,
        damping: f64,
        droop: f64,
        turbine_time: f64,
        governor_time: f64,
    ) -> Result<Self> {
        let p = AreaParameters {
            inertia,
            damping,
            droop,
            frequency_bias: damping + 1.0 / droop,
            turbine_time,
            governor_time,
            turbine_gain: 1.0,
            governor_gain: 1.0,
            integral_gain: DEFAULT_INTEGRAL_GAIN,
            pv_time: DEFAULT_PV_TIME,
            pv_gain: DEFAULT_PV_GAIN,
            wt_time: DEFAULT_WT_TIME,
            wt_gain: DEFAULT_WT_GAIN,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        require_positive("inertia", self.inertia)?;
        require_positive("damping", self.damping)?;
        require_positive("droop", self.droop)?;
        require_positive("turbine_time", self.turbine_time)?;
        require_positive("governor_time", self.governor_time)?;
        require_positive("pv_time", self.pv_time)?;
        require_positive("wt_time", self.wt_time)?;
        for (name, v) in [
            ("turbine_gain", self.turbine_gain),
            ("governor_gain", self.governor_gain),
            ("integral_gain", self.integral_gain),
            ("pv_gain", self.pv_gain),
            ("wt_gain", self.wt_gain),
        ] {
            if !v.is_finite() {
                return Err(LfcError::param(format!("{name} must be finite")));
            }
        }
        let expected = self.damping + 1.0 / self.droop;
        if (self.frequency_bias - expected).abs() > 1e-6 * expected.abs() {
            return Err(LfcError::param(format!(
                "frequency_bias {} differs from D + 1/R = {expected}",
                self.frequency_bias
            )));
        }
        Ok(())
    }
}

/// Aggregates the generators of one area into equivalent constants.
///
/// Time constants are arithmetic means, droop and inertia are weighted by
/// rating, and β is recomputed as `damping + 1/R_eqv`.
pub fn aggregate_area_parameters(
    generators: &[GeneratorParameters],
    damping: f64,
) -> Result<AreaParameters> {
    if generators.is_empty() {
        return Err(LfcError::EmptyGeneratorList);
    }
    for g in generators {
        g.validate()?;
    }
    require_positive("damping", damping)?;

    let n = generators.len() as f64;
    let total_rating: f64 = generators.iter().map(|g| g.rating_mva).sum();
    let weighted = |f: fn(&GeneratorParameters) -> f64| {
        generators.iter().map(|g| g.rating_mva * f(g)).sum::<f64>() / total_rating
    };

    let turbine_time = generators.iter().map(|g| g.turbine_time).sum::<f64>() / n;
    let governor_time = generators.iter().map(|g| g.governor_time).sum::<f64>() / n;
    let droop = weighted(|g| g.droop);
    let inertia = weighted(|g| g.inertia);

    AreaParameters::new(inertia, damping, droop, turbine_time, governor_time)
}

/// Symmetric matrix of synchronizing coefficients between areas.
#[derive(Debug, Clone, PartialEq)]
pub struct TieLineTopology {
    coefficients: Vec<Vec<f64>>,
}

impl TieLineTopology {
    /// `n` isolated areas.
    pub fn isolated(n: usize) -> Self {
        TieLineTopology {
            coefficients: vec![vec![0.0; n]; n],
        }
    }

    pub fn from_matrix(coefficients: Vec<Vec<f64>>) -> Result<Self> {
        let n = coefficients.len();
        for (i, row) in coefficients.iter().enumerate() {
            if row.len() != n {
                return Err(LfcError::DimensionMismatch {
                    what: "tie-line matrix row",
                    expected: n,
                    found: row.len(),
                });
            }
            if row[i] != 0.0 {
                return Err(LfcError::param(format!("tie-line diagonal T[{i}][{i}] must be 0")));
            }
            for (j, &v) in row.iter().enumerate() {
                if !v.is_finite() || v < 0.0 {
                    return Err(LfcError::param(format!("tie coefficient T[{i}][{j}] = {v} is invalid")));
                }
                if v != coefficients[j][i] {
                    return Err(LfcError::param(format!("tie-line matrix not symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(TieLineTopology { coefficients })
    }

    /// Adds (or replaces) the tie between areas `i` and `j` (zero-based).
    pub fn with_tie(mut self, i: usize, j: usize, coefficient: f64) -> Result<Self> {
        let n = self.len();
        if i >= n || j >= n || i == j {
            return Err(LfcError::param(format!("invalid tie ({i}, {j}) for {n} areas")));
        }
        if !coefficient.is_finite() || coefficient < 0.0 {
            return Err(LfcError::param(format!("tie coefficient {coefficient} is invalid")));
        }
        self.coefficients[i][j] = coefficient;
        self.coefficients[j][i] = coefficient;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    pub fn coefficient(&self, i: usize, j: usize) -> f64 {
        self.coefficients[i][j]
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        self.coefficients[i].iter().sum()
    }

    pub fn matrix(&self) -> &[Vec<f64>] {
        &self.coefficients
    }

    /// Unordered pairs `(i, j, T_ij)` with `i < j` and a nonzero coefficient.
    pub fn ties(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let n = self.len();
        (0..n).flat_map(move |i| {
            ((i + 1)..n).filter_map(move |j| {
                let t = self.coefficients[i][j];
                (t != 0.0).then_some((i, j, t))
            })
        })
    }
}

/// Nominal state-space matrices of one area.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantMatrices {
    pub a: [[f64; STATE_DIM]; STATE_DIM],
    pub b: StateVec,
    pub psi: [[f64; DISTURBANCE_DIM]; STATE_DIM],
    pub surface_row: StateVec,
}

pub(crate) fn dot(a: &StateVec, b: &StateVec) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn mat_vec(m: &[[f64; STATE_DIM]; STATE_DIM], x: &StateVec) -> StateVec {
    let mut out = [0.0; STATE_DIM];
    for (o, row) in out.iter_mut().zip(m) {
        *o = dot(row, x);
    }
    out
}

impl PlantMatrices {
    /// ϑ·B0, the scalar every sliding-mode term divides by.
    pub fn surface_gain(&self) -> f64 {
        dot(&self.surface_row, &self.b)
    }

    /// A0·x + B0·μ + ψ0·d for one area, without inter-area coupling.
    pub fn nominal_derivative(&self, x: &StateVec, mu: f64, d: &DisturbanceInput) -> StateVec {
        let dv = d.as_array();
        let mut out = mat_vec(&self.a, x);
        for k in 0..STATE_DIM {
            out[k] += self.b[k] * mu + self.psi[k].iter().zip(&dv).map(|(p, v)| p * v).sum::<f64>();
        }
        out
    }

    /// Same matrices with a different surface row.
    pub fn with_surface_row(mut self, row: StateVec) -> Self {
        self.surface_row = row;
        self
    }
}

/// Fills A0, B0, ψ0 and ϑ for one area from its equivalent constants.
///
/// `tie_row_sum` is Σ_j T_ij for this area; the tie row entry is 2π times it.
pub fn build_plant_matrices(params: &AreaParameters, tie_row_sum: f64) -> Result<PlantMatrices> {
    params.validate()?;
    if !tie_row_sum.is_finite() || tie_row_sum < 0.0 {
        return Err(LfcError::param(format!("tie_row_sum must be >= 0, got {tie_row_sum}")));
    }
    let p = params;
    let m = 1.0 / (2.0 * p.inertia);
    let gov = p.governor_gain / p.governor_time;
    let tur = p.turbine_gain / p.turbine_time;

    let mut a = [[0.0; STATE_DIM]; STATE_DIM];
    a[0][1] = 2.0 * PI * tie_row_sum;
    a[1] = [-m, -p.damping * m, m, 0.0, 0.0, m, m];
    a[2][2] = -tur;
    a[2][4] = tur;
    a[3][0] = p.integral_gain;
    a[3][1] = p.integral_gain * p.frequency_bias;
    a[4][1] = -gov / p.droop;
    a[4][3] = -gov;
    a[4][4] = -gov;
    a[5][5] = -1.0 / p.pv_time;
    a[6][6] = -1.0 / p.wt_time;

    let mut b = [0.0; STATE_DIM];
    b[4] = gov;

    let mut psi = [[0.0; DISTURBANCE_DIM]; STATE_DIM];
    psi[1][0] = -m;
    psi[5][1] = p.pv_gain / p.pv_time;
    psi[6][2] = p.wt_gain / p.wt_time;

    let mut surface_row = [0.0; STATE_DIM];
    surface_row[4] = 1.0 / gov;

    Ok(PlantMatrices {
        a,
        b,
        psi,
        surface_row,
    })
}

/// Load, solar-irradiance and wind inputs of one area (per-unit).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DisturbanceInput {
    pub load: f64,
    pub solar: f64,
    pub wind: f64,
}

impl DisturbanceInput {
    pub fn new(load: f64, solar: f64, wind: f64) -> Self {
        DisturbanceInput { load, solar, wind }
    }

    pub fn as_array(&self) -> [f64; DISTURBANCE_DIM] {
        [self.load, self.solar, self.wind]
    }

    pub fn from_array(v: [f64; DISTURBANCE_DIM]) -> Self {
        DisturbanceInput::new(v[0], v[1], v[2])
    }
}

/// Concatenated per-area states.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemState(pub Vec<StateVec>);

impl SystemState {
    pub fn zeros(areas: usize) -> Self {
        SystemState(vec![[0.0; STATE_DIM]; areas])
    }

    pub fn areas(&self) -> usize {
        self.0.len()
    }

    pub fn area(&self, i: usize) -> &StateVec {
        &self.0[i]
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|v| v.is_finite())
    }

    pub fn flat(&self) -> impl Iterator<Item = f64> + '_ {
        self.0.iter().flatten().copied()
    }
}

/// All areas plus the tie-line topology that couples them.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiAreaModel {
    pub areas: Vec<PlantMatrices>,
    pub topology: TieLineTopology,
}

impl MultiAreaModel {
    pub fn new(areas: Vec<PlantMatrices>, topology: TieLineTopology) -> Result<Self> {
        if areas.len() != topology.len() {
            return Err(LfcError::DimensionMismatch {
                what: "tie-line topology",
                expected: areas.len(),
                found: topology.len(),
            });
        }
        Ok(MultiAreaModel { areas, topology })
    }

    pub fn len(&self) -> usize {
        self.areas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.areas.is_empty()
    }

    /// Coupled derivative of every area state.
    pub fn plant_derivative(
        &self,
        state: &SystemState,
        controls: &[f64],
        disturbances: &[DisturbanceInput],
    ) -> Result<SystemState> {
        let n = self.len();
        for (what, found) in [
            ("state areas", state.areas()),
            ("controls", controls.len()),
            ("disturbances", disturbances.len()),
        ] {
            if found != n {
                return Err(LfcError::DimensionMismatch {
                    what,
                    expected: n,
                    found,
                });
            }
        }
        let mut out = vec![[0.0; STATE_DIM]; n];
        self.derivative_into(&state.0, controls, disturbances, &mut out);
        Ok(SystemState(out))
    }

    /// Unchecked form of [`plant_derivative`](Self::plant_derivative) writing into `out`.
    pub fn derivative_into(
        &self,
        x: &[StateVec],
        controls: &[f64],
        disturbances: &[DisturbanceInput],
        out: &mut [StateVec],
    ) {
        for (i, area) in self.areas.iter().enumerate() {
            out[i] = area.nominal_derivative(&x[i], controls[i], &disturbances[i]);
            let coupling: f64 = (0..x.len())
                .filter(|&j| j != i)
                .map(|j| self.topology.coefficient(i, j) * x[j][idx::FREQ])
                .sum();
            out[i][idx::TIE] -= 2.0 * PI * coupling;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g1() -> GeneratorParameters {
        GeneratorParameters::new(1000.0, 0.3742, 0.0804, 0.0471, 10.0, 1.0).unwrap()
    }

    #[test]
    fn single_generator_aggregation_is_identity() {
        let a = aggregate_area_parameters(&[g1()], 1.0).unwrap();
        assert_eq!(a.turbine_time, 0.3742);
        assert_eq!(a.governor_time, 0.0804);
        assert!((a.droop - 0.0471).abs() < 1e-15);
        assert!((a.inertia - 10.0).abs() < 1e-12);
        assert!((a.frequency_bias - 22.2314).abs() < 1e-4);
        assert_eq!(a.turbine_gain, 1.0);
        assert_eq!(a.governor_gain, 1.0);
    }

    #[test]
    fn two_generator_area_matches_table_values() {
        let g2 = GeneratorParameters::new(520.81, 0.3888, 0.0774, 0.0541, 6.06, 1.0).unwrap();
        let g3 = GeneratorParameters::new(650.0, 0.3645, 0.0748, 0.0518, 7.16, 1.0).unwrap();
        let a = aggregate_area_parameters(&[g2, g3], 1.0).unwrap();
        assert!((a.turbine_time - 0.37665).abs() < 1e-12);
        assert!((a.droop - 0.0528).abs() < 5e-5);
        // hand arithmetic: (520.81·6.06 + 650·7.16)/1170.81
        assert!((a.inertia - 6.6706).abs() < 1e-4);
        // the tabulated β 19.9394 is 1 + 1/R with R rounded to 0.0528
        assert_eq!(a.frequency_bias, 1.0 + 1.0 / a.droop);
        assert!((a.frequency_bias - 19.9394).abs() < 1e-2);
    }

    #[test]
    fn aggregation_errors() {
        assert!(matches!(
            aggregate_area_parameters(&[], 1.0),
            Err(LfcError::EmptyGeneratorList)
        ));
        let mut bad = g1();
        bad.governor_time = 0.0;
        assert!(aggregate_area_parameters(&[bad], 1.0).is_err());
        assert!(GeneratorParameters::new(1.0, 1.0, 1.0, -0.05, 1.0, 1.0).is_err());
    }

    #[test]
    fn area_one_matrix_entries() {
        let p = aggregate_area_parameters(&[g1()], 1.0).unwrap();
        let m = build_plant_matrices(&p, 1.3272).unwrap();
        let gamma = m.a[0][1];
        assert!((gamma - 2.0 * PI * 1.3272).abs() < 1e-12);
        assert!((gamma - 8.33).abs() / 8.33 < 2e-3);
        assert!((m.a[4][1] + 264.07).abs() < 0.01);
        assert!((m.surface_gain() - 1.0).abs() < 1e-12);
        assert_eq!(m.psi[1][0], -1.0 / 20.0);
    }

    #[test]
    fn isolated_area_has_no_tie_dynamics() {
        let p = aggregate_area_parameters(&[g1()], 1.0).unwrap();
        let m = build_plant_matrices(&p, 0.0).unwrap();
        assert_eq!(m.a[0], [0.0; STATE_DIM]);
    }

    #[test]
    fn sparsity_pattern() {
        let p = aggregate_area_parameters(&[g1()], 1.0).unwrap();
        let m = build_plant_matrices(&p, 1.0).unwrap();
        let expected: [[u8; 7]; 7] = [
            [0, 1, 0, 0, 0, 0, 0],
            [1, 1, 1, 0, 0, 1, 1],
            [0, 0, 1, 0, 1, 0, 0],
            [1, 1, 0, 0, 0, 0, 0],
            [0, 1, 0, 1, 1, 0, 0],
            [0, 0, 0, 0, 0, 1, 0],
            [0, 0, 0, 0, 0, 0, 1],
        ];
        let mut count = 0;
        for r in 0..7 {
            for c in 0..7 {
                assert_eq!(m.a[r][c] != 0.0, expected[r][c] == 1, "entry ({r},{c})");
                count += usize::from(m.a[r][c] != 0.0);
            }
        }
        assert_eq!(count, 15);
    }

    #[test]
    fn zero_time_constant_rejected() {
        let mut p = aggregate_area_parameters(&[g1()], 1.0).unwrap();
        p.pv_time = 0.0;
        assert!(build_plant_matrices(&p, 1.0).is_err());
    }

    #[test]
    fn topology_validation() {
        assert!(TieLineTopology::from_matrix(vec![vec![0.0, 1.0], vec![2.0, 0.0]]).is_err());
        assert!(TieLineTopology::from_matrix(vec![vec![1.0, 0.0], vec![0.0, 0.0]]).is_err());
        let t = TieLineTopology::isolated(3).with_tie(0, 2, 0.5).unwrap();
        assert_eq!(t.coefficient(2, 0), 0.5);
        assert_eq!(t.row_sum(0), 0.5);
        assert_eq!(t.ties().collect::<Vec<_>>(), vec![(0, 2, 0.5)]);
        assert!(t.clone().with_tie(1, 1, 1.0).is_err());
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let p = aggregate_area_parameters(&[g1()], 1.0).unwrap();
        let m = build_plant_matrices(&p, 0.0).unwrap();
        let model = MultiAreaModel::new(vec![m, m], TieLineTopology::isolated(2)).unwrap();
        let err = model
            .plant_derivative(&SystemState::zeros(2), &[0.0], &[DisturbanceInput::default(); 2])
            .unwrap_err();
        assert!(matches!(err, LfcError::DimensionMismatch { what: "controls", .. }));
        assert!(MultiAreaModel::new(vec![m], TieLineTopology::isolated(2)).is_err());
    }
}
