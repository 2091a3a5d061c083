//! Terms of the defect energy in atomic units (hartree, bohr).
//!
//! E_defect = E_vol + E_surf + E_vk + E_int:
//! pressure-volume work (4π/3)pR_B³, surface energy 4πσR_B², the quantum
//! kinetic cost of the interface gradient (ħ²/8m_He)∫(∇ρ)²/ρ d³r, and the
//! pairwise defect-helium interaction folded over the density profile. The
//! P-state interaction reduces analytically over the orientation angle to
//! (4π/3)∫[V_Pσ + 2V_Pπ]ρr²dr.

use crate::potential::{PairPotentialSet, PotentialCurve, PotentialError};
use crate::profile::DensityProfileParams;
use crate::quadrature::{integrate, QuadratureError, QuadratureOptions};
use num_traits::Float;
use std::cell::RefCell;
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EnergyError {
    #[error("quadrature failed: {0}")]
    Quadrature(#[from] QuadratureError),
    #[error("pair potential evaluation failed: {0}")]
    Potential(#[from] PotentialError),
    #[error("integrand tail at r = {radius} is {tail:.3e}, above 1e-12 of the peak {peak:.3e}; extend the truncation radius")]
    TailNotNegligible { radius: f64, tail: f64, peak: f64 },
}

fn c<F: Float>(x: f64) -> F {
    F::from(x).unwrap()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElectronicState {
    /// Upper 3s4s³S₁ state.
    S,
    /// Lower 3s3p³P state (fine structure applied downstream).
    P,
}

impl std::fmt::Display for ElectronicState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ElectronicState::S => "S",
            ElectronicState::P => "P",
        })
    }
}

/// Azimuthal prefactor of the P-state angular reduction. The printed form
/// of the interaction integral carries 4π, which makes the isotropic case
/// twice the S-state integral; the consistent choice is 2π. Both are
/// available so the discrepancy can be quantified.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AngularPrefactor {
    #[default]
    IsotropicConsistent,
    AsPrinted,
}

/// How the sharp bubble radius entering E_vol and E_surf is obtained from
/// the diffuse profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RadiusMap {
    /// Radius of the sharp bubble displacing the same helium volume.
    #[default]
    EqualDisplacedVolume,
    /// Use R₀ itself (for comparison runs).
    SharpInner,
}

impl RadiusMap {
    pub fn bubble_radius<F: Float>(&self, profile: &DensityProfileParams<F>) -> F {
        match self {
            RadiusMap::EqualDisplacedVolume => profile.equivalent_bubble_radius(),
            RadiusMap::SharpInner => profile.r0(),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadratureSpec<F = crate::Real> {
    pub relative_tolerance: F,
    /// Explicit outer truncation radius; `None` picks R₀ + 40/α, extended
    /// past the reach of any potential involved.
    pub outer_truncation: Option<F>,
    pub max_subdivisions: usize,
}

impl<F: Float> Default for QuadratureSpec<F> {
    fn default() -> Self {
        Self {
            relative_tolerance: c(1e-8),
            outer_truncation: None,
            max_subdivisions: 200,
        }
    }
}

impl<F: Float> QuadratureSpec<F> {
    fn options(&self) -> QuadratureOptions<F> {
        QuadratureOptions {
            rtol: self.relative_tolerance,
            atol: c(1e-300),
            max_subdivisions: self.max_subdivisions,
        }
    }
}

/// Integral value with its quadrature error estimate.
#[derive(Debug, Clone, Copy)]
pub struct Estimate<F = crate::Real> {
    pub value: F,
    pub abs_error: F,
}

/// Everything besides state and profile that defect_energy needs: pressure
/// and surface tension in atomic units, the kinetic prefactor ħ²/8m_He in
/// hartree·bohr², and the numerical policy knobs.
#[derive(Debug, Clone, Copy)]
pub struct EnergyContext<F = crate::Real> {
    pub pressure: F,
    pub sigma: F,
    pub kinetic_prefactor: F,
    pub quad: QuadratureSpec<F>,
    pub prefactor: AngularPrefactor,
    pub radius_map: RadiusMap,
}

impl EnergyContext {
    /// Context in atomic units with stock constants, pressure in bar and
    /// surface tension in J/m².
    pub fn from_si(p_bar: f64, sigma_j_m2: f64) -> Self {
        let k = crate::units::PhysicalConstants::default();
        Self {
            pressure: k.bar_to_au(p_bar),
            sigma: k.surface_tension_to_au(sigma_j_m2),
            kinetic_prefactor: k.kinetic_prefactor_au(),
            quad: QuadratureSpec::default(),
            prefactor: AngularPrefactor::default(),
            radius_map: RadiusMap::default(),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct EnergyBreakdown<F = crate::Real> {
    pub state: ElectronicState,
    pub pressure: F,
    pub profile: DensityProfileParams<F>,
    pub e_vol: F,
    pub e_surf: F,
    pub e_vk: F,
    pub e_int: F,
    /// Always the sum of the four terms above.
    pub e_defect: F,
    /// Summed quadrature error estimate of the integral terms.
    pub quad_error: F,
}

/// (4π/3)·p·r_b³.
pub fn volume_energy<F: Float>(p: F, r_b: F) -> F {
    c::<F>(4.0 / 3.0 * PI) * p * r_b.powi(3)
}

/// 4π·σ·r_b².
pub fn surface_energy<F: Float>(sigma: F, r_b: F) -> F {
    c::<F>(4.0 * PI) * sigma * r_b * r_b
}

/// Default truncation radius R₀ + 40/α: every profile factor has decayed by
/// e⁻⁴⁰ there.
fn auto_truncation<F: Float>(profile: &DensityProfileParams<F>) -> F {
    profile.r0() + c::<F>(40.0) / profile.alpha()
}

/// Verify the integrand is negligible at the truncation radius: sampled
/// |f(hi)| must be below 10⁻¹² of the sampled peak.
fn tail_is_negligible<F: Float>(f: &impl Fn(F) -> F, lo: F, hi: F) -> bool {
    let n = 128;
    let mut peak = F::zero();
    for i in 1..=n {
        let r = lo + (hi - lo) * c::<F>(i as f64 / n as f64);
        peak = peak.max(f(r).abs());
    }
    if peak == F::zero() {
        return true;
    }
    f(hi).abs() <= c::<F>(1e-12) * peak
}

fn integrate_radial<F: Float>(
    f: impl Fn(F) -> F,
    profile: &DensityProfileParams<F>,
    quad: &QuadratureSpec<F>,
    reach: Option<F>,
) -> Result<Estimate<F>, EnergyError> {
    let lo = profile.r0();
    let mut hi = match quad.outer_truncation {
        Some(h) => h,
        None => {
            let auto = auto_truncation(profile);
            match reach {
                Some(r) => auto.max(r * c(1.2)),
                None => auto,
            }
        }
    };
    let mut attempts = 0;
    while !tail_is_negligible(&f, lo, hi) {
        attempts += 1;
        if attempts > 3 {
            return Err(EnergyError::TailNotNegligible {
                radius: hi.to_f64().unwrap_or(f64::NAN),
                tail: f(hi).abs().to_f64().unwrap_or(f64::NAN),
                peak: f64::NAN,
            });
        }
        hi = lo + (hi - lo) * c(1.5);
    }
    let r = integrate(&f, lo, hi, &quad.options())?;
    Ok(Estimate {
        value: r.value,
        abs_error: r.abs_error,
    })
}

/// (ħ²/8m_He)·∫ (ρ′)²/ρ · 4πr² dr over the interface, with the analytic
/// boundary limit substituted near R₀ where the ratio is 0/0.
pub fn volume_kinetic_energy<F: Float>(
    kinetic_prefactor: F,
    profile: &DensityProfileParams<F>,
    quad: &QuadratureSpec<F>,
) -> Result<Estimate<F>, EnergyError> {
    let f = |r: F| profile.kinetic_density_ratio(r) * r * r;
    let raw = integrate_radial(f, profile, quad, None)?;
    let scale = kinetic_prefactor * c::<F>(4.0 * PI);
    Ok(Estimate {
        value: scale * raw.value,
        abs_error: scale.abs() * raw.abs_error,
    })
}

/// Shared radial integral Σᵢ wᵢ·∫ Vᵢ(r)·ρ(r)·r² dr, times `scale`.
/// Potential evaluation failures inside the integrand are reported, not
/// masked.
fn weighted_interaction<F: Float>(
    terms: &[(F, &PotentialCurve<F>)],
    scale: F,
    profile: &DensityProfileParams<F>,
    quad: &QuadratureSpec<F>,
) -> Result<Estimate<F>, EnergyError> {
    let failure: RefCell<Option<PotentialError>> = RefCell::new(None);
    let f = |r: F| {
        let mut v = F::zero();
        for &(w, curve) in terms {
            match curve.evaluate(r) {
                Ok(val) => v = v + w * val,
                Err(e) => {
                    let mut slot = failure.borrow_mut();
                    if slot.is_none() {
                        *slot = Some(e);
                    }
                    return F::nan();
                }
            }
        }
        v * profile.density_at(r).expect("r >= r0 >= 0") * r * r
    };
    let reach = terms
        .iter()
        .map(|&(_, curve)| curve.negligible_beyond())
        .fold(F::zero(), F::max);
    let raw = integrate_radial(f, profile, quad, Some(reach));
    if let Some(e) = failure.into_inner() {
        return Err(EnergyError::Potential(e));
    }
    let raw = raw?;
    Ok(Estimate {
        value: scale * raw.value,
        abs_error: scale.abs() * raw.abs_error,
    })
}

/// S-state interaction energy 4π·∫ V_S·ρ·r² dr.
pub fn interaction_energy_s<F: Float>(
    v_s: &PotentialCurve<F>,
    profile: &DensityProfileParams<F>,
    quad: &QuadratureSpec<F>,
) -> Result<Estimate<F>, EnergyError> {
    weighted_interaction(&[(F::one(), v_s)], c(4.0 * PI), profile, quad)
}

/// P-state interaction energy after analytic angular reduction:
/// (4π/3)·∫ [V_Pσ + 2V_Pπ]·ρ·r² dr with the consistent azimuthal prefactor
/// (doubled under [`AngularPrefactor::AsPrinted`]).
pub fn interaction_energy_p<F: Float>(
    v_p_sigma: &PotentialCurve<F>,
    v_p_pi: &PotentialCurve<F>,
    profile: &DensityProfileParams<F>,
    quad: &QuadratureSpec<F>,
    prefactor: AngularPrefactor,
) -> Result<Estimate<F>, EnergyError> {
    let scale = match prefactor {
        AngularPrefactor::IsotropicConsistent => c::<F>(4.0 / 3.0 * PI),
        AngularPrefactor::AsPrinted => c::<F>(8.0 / 3.0 * PI),
    };
    weighted_interaction(
        &[(F::one(), v_p_sigma), (c(2.0), v_p_pi)],
        scale,
        profile,
        quad,
    )
}

/// All four defect-energy terms for one state, profile, and context.
pub fn defect_energy<F: Float>(
    state: ElectronicState,
    potentials: &PairPotentialSet<F>,
    profile: &DensityProfileParams<F>,
    ctx: &EnergyContext<F>,
) -> Result<EnergyBreakdown<F>, EnergyError> {
    let r_b = ctx.radius_map.bubble_radius(profile);
    let e_vol = volume_energy(ctx.pressure, r_b);
    let e_surf = surface_energy(ctx.sigma, r_b);
    let e_vk = volume_kinetic_energy(ctx.kinetic_prefactor, profile, &ctx.quad)?;
    let e_int = match state {
        ElectronicState::S => interaction_energy_s(&potentials.v_s, profile, &ctx.quad)?,
        ElectronicState::P => interaction_energy_p(
            &potentials.v_p_sigma,
            &potentials.v_p_pi,
            profile,
            &ctx.quad,
            ctx.prefactor,
        )?,
    };
    Ok(EnergyBreakdown {
        state,
        pressure: ctx.pressure,
        profile: *profile,
        e_vol,
        e_surf,
        e_vk: e_vk.value,
        e_int: e_int.value,
        e_defect: e_vol + e_surf + e_vk.value + e_int.value,
        quad_error: e_vk.abs_error + e_int.abs_error,
    })
}
