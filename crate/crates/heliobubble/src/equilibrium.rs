//! Equilibrium bubble radii and pressure-dependent emission wavelengths:
//! the model layer that turns pair potentials plus thermodynamic
//! conditions into the three predicted line positions.

use std::cell::RefCell;

use rayon::prelude::*;
use thiserror::Error;

use crate::energy::{
    defect_energy, AngularPrefactor, ElectronicState, EnergyBreakdown, EnergyContext, EnergyError,
    QuadratureSpec, RadiusMap,
};
use crate::lines::{LineId, LineSample, LineSeries, LinesError};
use crate::minimize::{brent_min, nelder_mead, BrentOptions, MinimizeError, NelderMeadOptions};
use crate::potential::PairPotentialSet;
use crate::profile::{DensityProfileParams, ProfileError};
use crate::units::{PhysicalConstants, UnitsError};

#[derive(Debug, Error)]
pub enum EquilibriumError {
    #[error(transparent)]
    Energy(#[from] EnergyError),
    #[error(transparent)]
    Minimize(#[from] MinimizeError),
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error(transparent)]
    Units(#[from] UnitsError),
    #[error(transparent)]
    Lines(#[from] LinesError),
    #[error("pressure must lie in [0, 25] bar, got {0}")]
    BadPressure(f64),
    #[error("search bracket invalid: [{0}, {1}] angstrom")]
    BadBracket(f64, f64),
    #[error("pressure grid invalid: {0}")]
    BadGrid(String),
    #[error("transition table inconsistent: {0}")]
    BadTransitions(String),
}

/// Profile width treatment during the energy minimization: hold the decay
/// constant at a fixed value, or relax it together with the radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AlphaMode {
    Fixed(f64),
    Joint { initial: f64 },
}

impl Default for AlphaMode {
    fn default() -> Self {
        AlphaMode::Fixed(1.18)
    }
}

/// How the emitted photon's helium contribution is evaluated. Franck-
/// Condon keeps the upper-state profile frozen during emission (the bubble
/// terms cancel, leaving the interaction-energy difference); Adiabatic
/// lets each state relax to its own equilibrium first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EmissionMode {
    #[default]
    FranckCondon,
    Adiabatic,
}

/// Free-atom wavelengths of the triplet components and the fine-structure
/// offsets used to place the outer lines around the computed middle one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionTable {
    /// Free-atom wavelengths in nm, ordered P0, P1, P2.
    pub free_nm: [f64; 3],
    /// In-bubble offset of the P0 line from the P1 line, nm.
    pub offset_p0_nm: f64,
    /// In-bubble offset of the P2 line from the P1 line, nm.
    pub offset_p2_nm: f64,
}

impl Default for TransitionTable {
    fn default() -> Self {
        Self {
            free_nm: [516.73, 517.27, 518.36],
            offset_p0_nm: -0.54,
            offset_p2_nm: 1.09,
        }
    }
}

impl TransitionTable {
    /// The offsets are the fine-structure splittings, so they must agree
    /// with the free-atom wavelength differences (to the rounding of the
    /// tabulated values).
    pub fn validate(&self) -> Result<(), EquilibriumError> {
        for &l in &self.free_nm {
            if !(l > 0.0) || !l.is_finite() {
                return Err(EquilibriumError::BadTransitions(format!(
                    "non-positive free wavelength {l}"
                )));
            }
        }
        if !(self.free_nm[0] < self.free_nm[1] && self.free_nm[1] < self.free_nm[2]) {
            return Err(EquilibriumError::BadTransitions(
                "free wavelengths must increase P0 < P1 < P2".into(),
            ));
        }
        let split_p0 = self.free_nm[0] - self.free_nm[1];
        let split_p2 = self.free_nm[2] - self.free_nm[1];
        if (self.offset_p0_nm - split_p0).abs() > 0.02 || (self.offset_p2_nm - split_p2).abs() > 0.02
        {
            return Err(EquilibriumError::BadTransitions(format!(
                "offsets ({}, {}) disagree with free splittings ({}, {})",
                self.offset_p0_nm, self.offset_p2_nm, split_p0, split_p2
            )));
        }
        Ok(())
    }

    /// All three line positions from the computed P1 wavelength; the
    /// offsets are pressure independent by construction.
    pub fn line_wavelengths(&self, lambda_p1_nm: f64) -> [f64; 3] {
        [
            lambda_p1_nm + self.offset_p0_nm,
            lambda_p1_nm,
            lambda_p1_nm + self.offset_p2_nm,
        ]
    }
}

/// Result of minimizing the defect energy over the profile radius.
#[derive(Debug, Clone)]
pub struct EquilibriumResult {
    pub state: ElectronicState,
    pub pressure_bar: f64,
    /// Empty-core radius of the minimizing profile.
    pub r0_bohr: f64,
    pub r0_angstrom: f64,
    /// Decay constant actually used (the fixed value, or the jointly
    /// optimized one).
    pub alpha: f64,
    /// Equal-displaced-volume bubble radius of the minimizing profile.
    pub bubble_radius_bohr: f64,
    pub bubble_radius_angstrom: f64,
    pub breakdown: EnergyBreakdown,
    pub bracket_bohr: (f64, f64),
    /// True when the minimum sits at (or within resolution of) a bracket
    /// edge, meaning the reported radius is a constraint, not a minimum.
    pub at_boundary: bool,
    pub evaluations: usize,
}

/// One pressure point of the predicted spectrum.
#[derive(Debug, Clone)]
pub struct EmissionPoint {
    pub pressure_bar: f64,
    /// Predicted line wavelengths in nm, ordered P0, P1, P2.
    pub lambda_nm: [f64; 3],
    /// Photon-energy change relative to the free atom, in hartree.
    pub energy_shift_hartree: f64,
    pub eq_s: EquilibriumResult,
    pub eq_p: EquilibriumResult,
}

impl EmissionPoint {
    pub fn lambda_p1_nm(&self) -> f64 {
        self.lambda_nm[1]
    }
}

#[derive(Debug, Clone)]
pub struct ScanFailure {
    pub pressure_bar: f64,
    pub message: String,
}

/// A pressure sweep: the successful points, the per-pressure failures, and
/// one wavelength series per line (fitted when three or more points
/// survived).
#[derive(Debug, Clone)]
pub struct PressureScan {
    pub points: Vec<EmissionPoint>,
    pub failures: Vec<ScanFailure>,
    pub series: [LineSeries; 3],
}

pub const ALPHA_BOUNDS: (f64, f64) = (0.2, 6.0);
pub const MAX_PRESSURE_BAR: f64 = 25.0;

/// The full bubble model: constants, potentials, numerical policy, and
/// search settings. All fields are plain data so variants (different
/// potentials, emission mode, tolerances) are struct updates.
#[derive(Debug, Clone)]
pub struct BubbleModel {
    pub constants: PhysicalConstants,
    pub potentials: PairPotentialSet,
    pub alpha_mode: AlphaMode,
    pub emission_mode: EmissionMode,
    pub quad: QuadratureSpec,
    pub angular: AngularPrefactor,
    pub radius_map: RadiusMap,
    pub transitions: TransitionTable,
    /// Radius search bracket in angstrom.
    pub bracket_angstrom: (f64, f64),
    /// Radius convergence tolerance in angstrom.
    pub xatol_angstrom: f64,
    /// Saturated-vapor-pressure reference in bar.
    pub svp_bar: f64,
}

impl Default for BubbleModel {
    fn default() -> Self {
        Self {
            constants: PhysicalConstants::default(),
            potentials: PairPotentialSet::calibrated_default(),
            alpha_mode: AlphaMode::default(),
            emission_mode: EmissionMode::default(),
            quad: QuadratureSpec::default(),
            angular: AngularPrefactor::default(),
            radius_map: RadiusMap::default(),
            transitions: TransitionTable::default(),
            bracket_angstrom: (2.0, 15.0),
            xatol_angstrom: 1e-4,
            svp_bar: 2.9e-3,
        }
    }
}

impl BubbleModel {
    fn check_pressure(&self, p_bar: f64) -> Result<(), EquilibriumError> {
        if !p_bar.is_finite() || !(0.0..=MAX_PRESSURE_BAR).contains(&p_bar) {
            return Err(EquilibriumError::BadPressure(p_bar));
        }
        Ok(())
    }

    fn bracket_bohr(&self) -> Result<(f64, f64), EquilibriumError> {
        let (lo_a, hi_a) = self.bracket_angstrom;
        if !(lo_a > 0.0) || !(hi_a > lo_a) || !hi_a.is_finite() {
            return Err(EquilibriumError::BadBracket(lo_a, hi_a));
        }
        Ok((
            self.constants.angstrom_to_bohr(lo_a),
            self.constants.angstrom_to_bohr(hi_a),
        ))
    }

    /// Energy context at the given pressure, in atomic units.
    pub fn context(&self, p_bar: f64) -> EnergyContext {
        EnergyContext {
            pressure: self.constants.bar_to_au(p_bar),
            sigma: self.constants.surface_tension_to_au(self.constants.sigma_j_m2),
            kinetic_prefactor: self.constants.kinetic_prefactor_au(),
            quad: self.quad,
            prefactor: self.angular,
            radius_map: self.radius_map,
        }
    }

    /// Density profile with the model's bulk density.
    pub fn profile(&self, r0_bohr: f64, alpha: f64) -> Result<DensityProfileParams, ProfileError> {
        DensityProfileParams::new(
            r0_bohr,
            alpha,
            self.constants.number_density_au(self.constants.rho0_g_cm3),
        )
    }

    pub(crate) fn defect_at(
        &self,
        state: ElectronicState,
        r0_bohr: f64,
        alpha: f64,
        ctx: &EnergyContext,
    ) -> Result<EnergyBreakdown, EquilibriumError> {
        let profile = self.profile(r0_bohr, alpha)?;
        Ok(defect_energy(state, &self.potentials, &profile, ctx)?)
    }

    /// Minimizes the defect energy over the profile radius (and the decay
    /// constant too under `AlphaMode::Joint`) inside the configured
    /// bracket. A minimum pinned to the bracket edge is reported, not
    /// hidden: `at_boundary` is set and the caller decides.
    pub fn find_equilibrium(
        &self,
        state: ElectronicState,
        p_bar: f64,
    ) -> Result<EquilibriumResult, EquilibriumError> {
        self.check_pressure(p_bar)?;
        self.transitions.validate()?;
        let (lo, hi) = self.bracket_bohr()?;
        let ctx = self.context(p_bar);
        let xatol = self.constants.angstrom_to_bohr(self.xatol_angstrom);
        let captured: RefCell<Option<EquilibriumError>> = RefCell::new(None);

        let (r0, alpha, at_boundary, evaluations) = match self.alpha_mode {
            AlphaMode::Fixed(alpha) => {
                let objective = |r0: f64| match self.defect_at(state, r0, alpha, &ctx) {
                    Ok(b) => b.e_defect,
                    Err(e) => {
                        captured.borrow_mut().get_or_insert(e);
                        f64::NAN
                    }
                };
                let opts = BrentOptions { xatol, max_iterations: 500 };
                let min = match brent_min(objective, lo, hi, &opts) {
                    Ok(m) => m,
                    Err(e) => {
                        return Err(captured.into_inner().unwrap_or(EquilibriumError::Minimize(e)))
                    }
                };
                (min.x, alpha, min.at_boundary, min.evaluations)
            }
            AlphaMode::Joint { initial } => {
                let objective = |x: &[f64]| {
                    let (r0, alpha) = (x[0], x[1]);
                    if r0 < lo || r0 > hi || alpha < ALPHA_BOUNDS.0 || alpha > ALPHA_BOUNDS.1 {
                        return f64::INFINITY;
                    }
                    match self.defect_at(state, r0, alpha, &ctx) {
                        Ok(b) => b.e_defect,
                        Err(e) => {
                            captured.borrow_mut().get_or_insert(e);
                            f64::NAN
                        }
                    }
                };
                let opts = NelderMeadOptions {
                    xatol,
                    fatol: 1e-13,
                    max_iterations: 2000,
                    initial_steps: Some(vec![0.05 * (hi - lo), 0.1 * initial.max(0.25)]),
                    target_value: None,
                };
                let min = match nelder_mead(objective, &[0.5 * (lo + hi), initial], &opts) {
                    Ok(m) => m,
                    Err(e) => {
                        return Err(captured.into_inner().unwrap_or(EquilibriumError::Minimize(e)))
                    }
                };
                if !min.value.is_finite() {
                    return Err(captured
                        .into_inner()
                        .unwrap_or(EquilibriumError::BadBracket(
                            self.bracket_angstrom.0,
                            self.bracket_angstrom.1,
                        )));
                }
                let near_edge = min.x[0] - lo < 10.0 * xatol
                    || hi - min.x[0] < 10.0 * xatol
                    || min.x[1] - ALPHA_BOUNDS.0 < 1e-3
                    || ALPHA_BOUNDS.1 - min.x[1] < 1e-3;
                (min.x[0], min.x[1], near_edge, min.iterations)
            }
        };

        let breakdown = self.defect_at(state, r0, alpha, &ctx)?;
        let bubble_radius_bohr = ctx.radius_map.bubble_radius(&breakdown.profile);
        Ok(EquilibriumResult {
            state,
            pressure_bar: p_bar,
            r0_bohr: r0,
            r0_angstrom: self.constants.bohr_to_angstrom(r0),
            alpha,
            bubble_radius_bohr,
            bubble_radius_angstrom: self.constants.bohr_to_angstrom(bubble_radius_bohr),
            breakdown,
            bracket_bohr: (lo, hi),
            at_boundary,
            evaluations,
        })
    }

    /// Photon wavelength of the P1 component and the helium energy shift,
    /// from already-computed equilibria.
    pub(crate) fn lambda_p1_from(
        &self,
        eq_s: &EquilibriumResult,
        eq_p: &EquilibriumResult,
    ) -> Result<(f64, f64), EquilibriumError> {
        let energy_shift = match self.emission_mode {
            EmissionMode::FranckCondon => {
                // emitting-state profile held fixed: bubble terms cancel
                // and only the interaction energies differ
                let ctx = self.context(eq_s.pressure_bar);
                let p_at_s = self.defect_at(ElectronicState::P, eq_s.r0_bohr, eq_s.alpha, &ctx)?;
                eq_s.breakdown.e_defect - p_at_s.e_defect
            }
            EmissionMode::Adiabatic => eq_s.breakdown.e_defect - eq_p.breakdown.e_defect,
        };
        let e_free = self
            .constants
            .wavelength_to_energy(self.transitions.free_nm[1])?;
        let lambda_p1 = self.constants.energy_to_wavelength(e_free + energy_shift)?;
        Ok((lambda_p1, energy_shift))
    }

    /// Predicted emission wavelengths at one pressure. Both equilibria are
    /// computed; the photon energy is the free-atom energy plus the
    /// state-energy difference evaluated per the emission mode.
    pub fn emission(&self, p_bar: f64) -> Result<EmissionPoint, EquilibriumError> {
        let eq_s = self.find_equilibrium(ElectronicState::S, p_bar)?;
        let eq_p = self.find_equilibrium(ElectronicState::P, p_bar)?;
        let (lambda_p1, energy_shift_hartree) = self.lambda_p1_from(&eq_s, &eq_p)?;
        Ok(EmissionPoint {
            pressure_bar: p_bar,
            lambda_nm: self.transitions.line_wavelengths(lambda_p1),
            energy_shift_hartree,
            eq_s,
            eq_p,
        })
    }

    /// Emission over a pressure grid (strictly increasing, within
    /// [0, 25] bar). Points run in parallel and independently: one bad
    /// pressure lands in `failures` while the rest of the scan completes.
    pub fn pressure_scan(&self, pressures_bar: &[f64]) -> Result<PressureScan, EquilibriumError> {
        if pressures_bar.is_empty() {
            return Err(EquilibriumError::BadGrid("empty pressure grid".into()));
        }
        for (i, &p) in pressures_bar.iter().enumerate() {
            if !p.is_finite() || !(0.0..=MAX_PRESSURE_BAR).contains(&p) {
                return Err(EquilibriumError::BadGrid(format!(
                    "pressure {p} bar at index {i} outside [0, {MAX_PRESSURE_BAR}]"
                )));
            }
            if i > 0 && p <= pressures_bar[i - 1] {
                return Err(EquilibriumError::BadGrid(format!(
                    "pressures must increase strictly (index {i})"
                )));
            }
        }
        let outcomes: Vec<Result<EmissionPoint, ScanFailure>> = pressures_bar
            .par_iter()
            .map(|&p| {
                self.emission(p).map_err(|e| ScanFailure {
                    pressure_bar: p,
                    message: e.to_string(),
                })
            })
            .collect();
        let mut points = Vec::new();
        let mut failures = Vec::new();
        for o in outcomes {
            match o {
                Ok(pt) => points.push(pt),
                Err(f) => failures.push(f),
            }
        }
        let series = self.series_from_points(&points)?;
        Ok(PressureScan { points, failures, series })
    }

    fn series_from_points(
        &self,
        points: &[EmissionPoint],
    ) -> Result<[LineSeries; 3], EquilibriumError> {
        let mut out = Vec::with_capacity(3);
        for line in LineId::ALL {
            let samples: Vec<LineSample> = points
                .iter()
                .map(|pt| LineSample {
                    pressure_bar: pt.pressure_bar,
                    lambda_nm: pt.lambda_nm[line.index()],
                    sigma_nm: None,
                })
                .collect();
            out.push(LineSeries::new(line, samples)?);
        }
        Ok(out.try_into().expect("three series"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::PotentialCurve;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn zero_potentials() -> PairPotentialSet {
        let nodes: Vec<(f64, f64)> = (0..120).map(|i| (0.5 + 2.5 * i as f64, 0.0)).collect();
        let zero = || PotentialCurve::tabulated(&nodes).unwrap();
        PairPotentialSet { v_s: zero(), v_p_sigma: zero(), v_p_pi: zero() }
    }

    fn no_surface_constants() -> PhysicalConstants {
        PhysicalConstants { sigma_j_m2: 0.0, ..Default::default() }
    }

    #[test]
    fn transition_table_places_lines_at_free_wavelengths() {
        let table = TransitionTable::default();
        table.validate().unwrap();
        let at_free = table.line_wavelengths(517.27);
        assert_abs_diff_eq!(at_free[0], 516.73, epsilon = 1e-9);
        assert_abs_diff_eq!(at_free[1], 517.27, epsilon = 1e-9);
        assert_abs_diff_eq!(at_free[2], 518.36, epsilon = 1e-9);
        // offsets are rigid: any input wavelength keeps the splittings
        let shifted = table.line_wavelengths(515.0);
        assert_abs_diff_eq!(shifted[0] - shifted[1], -0.54, epsilon = 1e-12);
        assert_abs_diff_eq!(shifted[2] - shifted[1], 1.09, epsilon = 1e-12);
    }

    #[test]
    fn inconsistent_transition_table_is_rejected() {
        let table = TransitionTable { offset_p0_nm: -0.70, ..TransitionTable::default() };
        assert!(matches!(
            table.validate(),
            Err(EquilibriumError::BadTransitions(_))
        ));
        let table =
            TransitionTable { free_nm: [517.27, 516.73, 518.36], ..TransitionTable::default() };
        assert!(table.validate().is_err());
    }

    #[test]
    fn free_atom_limit_recovers_the_free_wavelength() {
        // no potentials, no pressure, no surface tension: the photon
        // energy must be exactly the free-atom energy in both modes
        for mode in [EmissionMode::FranckCondon, EmissionMode::Adiabatic] {
            let model = BubbleModel {
                potentials: zero_potentials(),
                constants: no_surface_constants(),
                emission_mode: mode,
                ..Default::default()
            };
            let point = model.emission(0.0).unwrap();
            assert_abs_diff_eq!(point.lambda_nm[1], 517.27, epsilon = 1e-9);
            assert_abs_diff_eq!(point.energy_shift_hartree, 0.0, epsilon = 1e-15);
            assert_abs_diff_eq!(point.lambda_nm[0], 516.73, epsilon = 1e-9);
            assert_abs_diff_eq!(point.lambda_nm[2], 518.36, epsilon = 1e-9);
        }
    }

    #[test]
    fn pure_bubble_under_pressure_collapses_to_the_bracket_edge() {
        let model = BubbleModel {
            potentials: zero_potentials(),
            ..Default::default()
        };
        let eq = model.find_equilibrium(ElectronicState::S, 1.0).unwrap();
        assert!(eq.at_boundary, "pure bubble should pin to the inner edge");
        assert!(
            eq.r0_bohr - eq.bracket_bohr.0 < 0.05,
            "collapsed radius {} should sit at bracket edge {}",
            eq.r0_bohr,
            eq.bracket_bohr.0
        );
    }

    #[test]
    fn calibrated_equilibria_match_reference_radii() {
        let model = BubbleModel::default();
        let eq_s = model.find_equilibrium(ElectronicState::S, model.svp_bar).unwrap();
        let eq_p = model.find_equilibrium(ElectronicState::P, model.svp_bar).unwrap();
        assert!(!eq_s.at_boundary && !eq_p.at_boundary);
        assert_relative_eq!(eq_s.r0_angstrom, 8.34, max_relative = 0.01);
        assert_relative_eq!(eq_p.r0_angstrom, 4.85, max_relative = 0.01);
        // the bubble radius includes the displaced interface volume, so it
        // always exceeds the empty-core radius
        assert!(eq_s.bubble_radius_bohr > eq_s.r0_bohr);
        assert!(eq_p.bubble_radius_bohr > eq_p.r0_bohr);
    }

    #[test]
    fn radius_shrinks_monotonically_with_pressure() {
        let model = BubbleModel::default();
        let radii: Vec<f64> = [model.svp_bar, 10.0, 24.0]
            .iter()
            .map(|&p| {
                model
                    .find_equilibrium(ElectronicState::S, p)
                    .unwrap()
                    .r0_angstrom
            })
            .collect();
        assert!(radii[0] > radii[1] && radii[1] > radii[2], "{radii:?}");
    }

    #[test]
    fn minimizer_agrees_with_a_dense_grid() {
        let model = BubbleModel::default();
        let ctx = model.context(8.0);
        let (lo, hi) = model.bracket_bohr().unwrap();
        let eq = model.find_equilibrium(ElectronicState::S, 8.0).unwrap();
        let n = 2000;
        let step = (hi - lo) / n as f64;
        let mut best = (f64::INFINITY, lo);
        for i in 0..=n {
            let r0 = lo + i as f64 * step;
            let e = model
                .defect_at(ElectronicState::S, r0, 1.18, &ctx)
                .unwrap()
                .e_defect;
            if e < best.0 {
                best = (e, r0);
            }
        }
        assert!(
            (eq.r0_bohr - best.1).abs() <= step,
            "brent {} vs grid argmin {} (step {step})",
            eq.r0_bohr,
            best.1
        );
        assert!(eq.breakdown.e_defect <= best.0 + 1e-12);
    }

    #[test]
    fn equilibrium_is_a_certified_local_minimum() {
        let model = BubbleModel::default();
        let ctx = model.context(12.0);
        for state in [ElectronicState::S, ElectronicState::P] {
            let eq = model.find_equilibrium(state, 12.0).unwrap();
            assert!(!eq.at_boundary);
            let delta = 1e-2;
            let e0 = eq.breakdown.e_defect;
            for side in [-1.0, 1.0] {
                let e = model
                    .defect_at(state, eq.r0_bohr + side * delta, eq.alpha, &ctx)
                    .unwrap()
                    .e_defect;
                assert!(
                    e >= e0 - 1e-14,
                    "{state} displaced by {side}*{delta} went downhill: {e} < {e0}"
                );
            }
        }
    }

    #[test]
    fn scan_matches_reference_line_parameters() {
        let model = BubbleModel::default();
        let scan = model
            .pressure_scan(&[model.svp_bar, 6.0, 12.0, 18.0, 24.0])
            .unwrap();
        assert!(scan.failures.is_empty());
        assert_eq!(scan.points.len(), 5);
        let fit = scan.series[1].fit.as_ref().expect("five points fit");
        assert_abs_diff_eq!(fit.slope_nm_per_bar, -0.088, epsilon = 0.015);
        assert_abs_diff_eq!(fit.lambda0_nm, 516.48, epsilon = 0.15);
        assert!(fit.r_squared > 0.99, "scan should be nearly linear, R2 = {}", fit.r_squared);
        // outer lines stay rigidly offset at every pressure
        for pt in &scan.points {
            assert_abs_diff_eq!(pt.lambda_nm[0] - pt.lambda_nm[1], -0.54, epsilon = 1e-12);
            assert_abs_diff_eq!(pt.lambda_nm[2] - pt.lambda_nm[1], 1.09, epsilon = 1e-12);
        }
    }

    #[test]
    fn franck_condon_emission_sits_red_of_adiabatic() {
        let fc = BubbleModel::default().emission(8.0).unwrap();
        let ad = BubbleModel {
            emission_mode: EmissionMode::Adiabatic,
            ..Default::default()
        }
        .emission(8.0)
        .unwrap();
        // the relaxed lower state can only lower its energy, raising the
        // adiabatic photon energy above the Franck-Condon one
        assert!(ad.energy_shift_hartree > fc.energy_shift_hartree);
        assert!(ad.lambda_nm[1] < fc.lambda_nm[1]);
    }

    #[test]
    fn joint_width_relaxation_never_loses_to_the_fixed_width() {
        let fixed = BubbleModel::default()
            .find_equilibrium(ElectronicState::S, 8.0)
            .unwrap();
        let joint = BubbleModel {
            alpha_mode: AlphaMode::Joint { initial: 1.18 },
            ..Default::default()
        }
        .find_equilibrium(ElectronicState::S, 8.0)
        .unwrap();
        assert!(joint.alpha > 0.0);
        assert!(
            joint.breakdown.e_defect <= fixed.breakdown.e_defect + 1e-10,
            "joint {} vs fixed {}",
            joint.breakdown.e_defect,
            fixed.breakdown.e_defect
        );
    }

    #[test]
    fn invalid_inputs_are_rejected() {
        let model = BubbleModel::default();
        assert!(matches!(
            model.find_equilibrium(ElectronicState::S, -1.0),
            Err(EquilibriumError::BadPressure(_))
        ));
        assert!(matches!(
            model.find_equilibrium(ElectronicState::S, 26.0),
            Err(EquilibriumError::BadPressure(_))
        ));
        assert!(matches!(
            model.pressure_scan(&[]),
            Err(EquilibriumError::BadGrid(_))
        ));
        assert!(matches!(
            model.pressure_scan(&[4.0, 4.0]),
            Err(EquilibriumError::BadGrid(_))
        ));
        assert!(matches!(
            model.pressure_scan(&[4.0, 2.0]),
            Err(EquilibriumError::BadGrid(_))
        ));
        let bad_bracket = BubbleModel {
            bracket_angstrom: (15.0, 2.0),
            ..Default::default()
        };
        assert!(matches!(
            bad_bracket.find_equilibrium(ElectronicState::S, 1.0),
            Err(EquilibriumError::BadBracket(..))
        ));
    }

    #[test]
    fn single_point_scan_yields_unfitted_series() {
        let model = BubbleModel::default();
        let scan = model.pressure_scan(&[8.0]).unwrap();
        assert_eq!(scan.points.len(), 1);
        for s in &scan.series {
            assert_eq!(s.samples.len(), 1);
            assert!(s.fit.is_none());
        }
    }

    #[test]
    fn scan_records_per_point_failures_without_aborting() {
        // potentials tabulated only far outside the bracket: every radius
        // probe lands below the table, so every point fails but the scan
        // itself still returns
        let nodes: Vec<(f64, f64)> = (0..60).map(|i| (40.0 + i as f64, 0.0)).collect();
        let curve = || PotentialCurve::tabulated(&nodes).unwrap();
        let model = BubbleModel {
            potentials: PairPotentialSet {
                v_s: curve(),
                v_p_sigma: curve(),
                v_p_pi: curve(),
            },
            ..Default::default()
        };
        let scan = model.pressure_scan(&[1.0, 8.0, 16.0]).unwrap();
        assert!(scan.points.is_empty());
        assert_eq!(scan.failures.len(), 3);
        for f in &scan.failures {
            assert!(!f.message.is_empty());
        }
        for s in &scan.series {
            assert!(s.samples.is_empty() && s.fit.is_none());
        }
    }
}
