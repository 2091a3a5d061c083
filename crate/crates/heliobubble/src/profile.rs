//! Helium density profile around the defect.
//!
//! The density vanishes inside the bubble radius `r0` and relaxes to the bulk
//! value `rho0` over an interface of width `1/alpha`:
//!
//! ρ(r) = 0 for r < r0,  ρ₀·[1 − (1 + α(r−r0))·e^{−α(r−r0)}] for r ≥ r0.
//!
//! `rho0` is a number density (a₀⁻³); see
//! [`crate::units::PhysicalConstants::number_density_au`].

use num_traits::Float;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ProfileError {
    #[error("bubble radius r0 must be non-negative, got {0}")]
    NegativeR0(f64),
    #[error("interface parameter alpha must be positive, got {0}")]
    NonPositiveAlpha(f64),
    #[error("bulk density rho0 must be positive, got {0}")]
    NonPositiveRho0(f64),
    #[error("density requested at negative radius {0}")]
    NegativeRadius(f64),
}

fn c<F: Float>(x: f64) -> F {
    F::from(x).unwrap()
}

/// Parameters (r0, α, ρ₀) of the helium density profile. Immutable after
/// construction; construction validates r0 ≥ 0, α > 0, ρ₀ > 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityProfileParams<F = crate::Real> {
    r0: F,
    alpha: F,
    rho0: F,
}

impl<F: Float> DensityProfileParams<F> {
    pub fn new(r0: F, alpha: F, rho0: F) -> Result<Self, ProfileError> {
        let as_f64 = |v: F| v.to_f64().unwrap_or(f64::NAN);
        if !(r0 >= F::zero()) {
            return Err(ProfileError::NegativeR0(as_f64(r0)));
        }
        if !(alpha > F::zero()) || !alpha.is_finite() {
            return Err(ProfileError::NonPositiveAlpha(as_f64(alpha)));
        }
        if !(rho0 > F::zero()) || !rho0.is_finite() {
            return Err(ProfileError::NonPositiveRho0(as_f64(rho0)));
        }
        Ok(Self { r0, alpha, rho0 })
    }

    pub fn r0(&self) -> F {
        self.r0
    }

    pub fn alpha(&self) -> F {
        self.alpha
    }

    pub fn rho0(&self) -> F {
        self.rho0
    }

    /// Same interface shape at a different bubble radius.
    pub fn with_r0(&self, r0: F) -> Result<Self, ProfileError> {
        Self::new(r0, self.alpha, self.rho0)
    }

    /// 1 − (1+x)e^{−x}, evaluated without cancellation near x = 0.
    fn shoulder(x: F) -> F {
        if x < c(0.03) {
            // alternating series Σ_{k≥2} (−1)^k (k−1)/k! x^k, truncated at k = 8
            let coeff = [
                1.0 / 2.0,     // k=2
                -1.0 / 3.0,    // k=3
                1.0 / 8.0,     // k=4
                -1.0 / 30.0,   // k=5
                1.0 / 144.0,   // k=6
                -1.0 / 840.0,  // k=7
                1.0 / 5760.0,  // k=8
            ];
            let mut acc = F::zero();
            let mut xk = x * x;
            for ck in coeff {
                acc = acc + c::<F>(ck) * xk;
                xk = xk * x;
            }
            acc
        } else {
            F::one() - (F::one() + x) * (-x).exp()
        }
    }

    fn density_unchecked(&self, r: F) -> F {
        let s = r - self.r0;
        if s <= F::zero() {
            F::zero()
        } else {
            self.rho0 * Self::shoulder(self.alpha * s)
        }
    }

    /// ρ(r); zero inside the bubble, → ρ₀ far outside. Rejects negative r.
    pub fn density_at(&self, r: F) -> Result<F, ProfileError> {
        if r < F::zero() {
            return Err(ProfileError::NegativeRadius(r.to_f64().unwrap_or(f64::NAN)));
        }
        Ok(self.density_unchecked(r))
    }

    /// dρ/dr = ρ₀α²(r−r0)e^{−α(r−r0)} for r > r0, zero otherwise.
    pub fn density_gradient(&self, r: F) -> Result<F, ProfileError> {
        if r < F::zero() {
            return Err(ProfileError::NegativeRadius(r.to_f64().unwrap_or(f64::NAN)));
        }
        let s = r - self.r0;
        if s <= F::zero() {
            return Ok(F::zero());
        }
        Ok(self.rho0 * self.alpha * self.alpha * s * (-(self.alpha * s)).exp())
    }

    /// lim_{r→r0⁺} (ρ′)²/ρ = 2ρ₀α², the finite boundary value of the
    /// gradient-kinetic integrand's density ratio.
    pub fn kinetic_integrand_limit(&self) -> F {
        c::<F>(2.0) * self.rho0 * self.alpha * self.alpha
    }

    /// (ρ′)²/ρ at radius r; inside a guard band of 10⁻⁸/α around r0 the
    /// analytic boundary limit is substituted (the raw ratio is 0/0 there).
    pub fn kinetic_density_ratio(&self, r: F) -> F {
        let s = r - self.r0;
        if s <= c::<F>(1e-8) / self.alpha {
            return self.kinetic_integrand_limit();
        }
        let g = self.density_gradient(r).expect("r > r0 >= 0");
        g * g / self.density_unchecked(r)
    }

    /// Radius of the sharp bubble displacing the same helium volume:
    /// R_B³ = r0³ + 6r0²/α + 18r0/α² + 24/α³ (∫(ρ₀ − ρ) d³r in closed form).
    pub fn equivalent_bubble_radius(&self) -> F {
        let a = self.alpha;
        let r = self.r0;
        let cube = r.powi(3)
            + c::<F>(6.0) * r.powi(2) / a
            + c::<F>(18.0) * r / a.powi(2)
            + c::<F>(24.0) / a.powi(3);
        cube.cbrt()
    }

    /// Interface width 1/α.
    pub fn interface_width(&self) -> F {
        self.alpha.recip()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn params() -> DensityProfileParams {
        DensityProfileParams::new(15.7656, 1.18, 3.2518e-3).unwrap()
    }

    #[test]
    fn construction_validates_parameters() {
        assert!(DensityProfileParams::new(-1.0, 1.0, 1.0).is_err());
        assert!(DensityProfileParams::new(1.0, 0.0, 1.0).is_err());
        assert!(DensityProfileParams::new(1.0, 1.0, -0.5).is_err());
        assert!(DensityProfileParams::new(0.0, 1.0, 1.0).is_ok());
    }

    #[test]
    fn density_is_zero_inside_and_at_the_bubble_radius() {
        let p = params();
        assert_eq!(p.density_at(p.r0() / 2.0).unwrap(), 0.0);
        assert_eq!(p.density_at(p.r0()).unwrap(), 0.0);
        assert!(p.density_at(-0.1).is_err());
    }

    #[test]
    fn density_one_width_out_is_the_shoulder_value() {
        let p = params();
        let rho = p.density_at(p.r0() + 1.0 / p.alpha()).unwrap();
        let expected = p.rho0() * (1.0 - 2.0 * (-1.0f64).exp());
        assert_relative_eq!(rho, expected, max_relative = 1e-14);
        assert_relative_eq!(rho / p.rho0(), 0.2642, max_relative = 1e-3);
    }

    #[test]
    fn series_branch_matches_direct_evaluation_at_crossover() {
        let p = params();
        // straddle the series/direct switch at alpha*s = 0.03
        for s_scaled in [0.029_f64, 0.03, 0.031] {
            let r = p.r0() + s_scaled / p.alpha();
            let direct = p.rho0() * (1.0 - (1.0 + s_scaled) * (-s_scaled).exp());
            assert_relative_eq!(p.density_at(r).unwrap(), direct, max_relative = 1e-10);
        }
    }

    #[test]
    fn gradient_vanishes_at_and_inside_the_boundary() {
        let p = params();
        assert_eq!(p.density_gradient(p.r0()).unwrap(), 0.0);
        assert_eq!(p.density_gradient(p.r0() * 0.3).unwrap(), 0.0);
    }

    #[test]
    fn gradient_matches_central_finite_differences() {
        let p = params();
        let r = p.r0() + 1.0 / p.alpha();
        let h0 = 1e-3;
        let fd = |h: f64| {
            (p.density_at(r + h).unwrap() - p.density_at(r - h).unwrap()) / (2.0 * h)
        };
        let exact = p.density_gradient(r).unwrap();
        let e1 = (fd(h0) - exact).abs();
        let e2 = (fd(h0 / 2.0) - exact).abs();
        // O(h^2) convergence: quartering the error when halving h
        assert!(e2 < e1 / 3.0, "fd errors {e1:.3e} -> {e2:.3e} not O(h^2)");
        assert_relative_eq!(fd(1e-5), exact, max_relative = 1e-9);
    }

    #[test]
    fn kinetic_limit_is_twice_rho0_alpha_squared_and_linear_in_rho0() {
        let p = params();
        assert_relative_eq!(
            p.kinetic_integrand_limit(),
            2.0 * p.rho0() * p.alpha() * p.alpha(),
            max_relative = 1e-15
        );
        let doubled = DensityProfileParams::new(p.r0(), p.alpha(), 2.0 * p.rho0()).unwrap();
        assert_relative_eq!(
            doubled.kinetic_integrand_limit(),
            2.0 * p.kinetic_integrand_limit(),
            max_relative = 1e-15
        );
    }

    #[test]
    fn kinetic_ratio_near_boundary_approaches_the_limit() {
        let p = params();
        let r = p.r0() + 1e-6 / p.alpha();
        assert_relative_eq!(
            p.kinetic_density_ratio(r),
            p.kinetic_integrand_limit(),
            max_relative = 1e-4
        );
        // inside the guard band the limit is substituted exactly
        let r_guard = p.r0() + 0.5e-8 / p.alpha();
        assert_eq!(p.kinetic_density_ratio(r_guard), p.kinetic_integrand_limit());
    }

    #[test]
    fn bubble_radius_closed_form_limits() {
        let sharp = DensityProfileParams::new(10.0, 1e9, 1.0).unwrap();
        assert_relative_eq!(sharp.equivalent_bubble_radius(), 10.0, max_relative = 1e-8);
        let hollow = DensityProfileParams::new(0.0, 1.18, 1.0).unwrap();
        assert_relative_eq!(
            hollow.equivalent_bubble_radius(),
            24.0f64.cbrt() / 1.18,
            max_relative = 1e-14
        );
    }

    #[test]
    fn bubble_radius_monotone_in_r0_and_alpha() {
        let base = params();
        let bigger = base.with_r0(base.r0() + 0.5).unwrap();
        assert!(bigger.equivalent_bubble_radius() > base.equivalent_bubble_radius());
        let sharper = DensityProfileParams::new(base.r0(), base.alpha() * 2.0, base.rho0()).unwrap();
        assert!(sharper.equivalent_bubble_radius() < base.equivalent_bubble_radius());
    }

    #[test]
    fn interface_width_is_reciprocal_alpha() {
        let p = DensityProfileParams::new(1.0, 1.18, 1.0).unwrap();
        assert_relative_eq!(p.interface_width(), 0.8474576271186439, max_relative = 1e-12);
        // 0.529 A per bohr puts that at 0.448 A
        assert_relative_eq!(p.interface_width() * 0.529, 0.448, max_relative = 1e-2);
        let unit = DensityProfileParams::new(1.0, 1.0, 1.0).unwrap();
        assert_eq!(unit.interface_width(), 1.0);
        let double = DensityProfileParams::new(1.0, 2.36, 1.0).unwrap();
        assert_relative_eq!(double.interface_width() * 0.529, 0.224, max_relative = 1e-2);
    }

    #[test]
    fn density_monotone_and_bounded() {
        let p = params();
        let mut prev = 0.0;
        for i in 0..2000 {
            let r = p.r0() + (i as f64) * 0.02;
            let rho = p.density_at(r).unwrap();
            assert!(rho >= prev - 1e-18, "density decreasing at r={r}");
            assert!(rho <= p.rho0());
            // strictly below rho0 until the approach saturates in f64
            if p.alpha() * (r - p.r0()) < 30.0 {
                assert!(rho < p.rho0());
            }
            prev = rho;
        }
        let far = p.density_at(p.r0() + 30.0 / p.alpha()).unwrap();
        assert!(far > 0.999999 * p.rho0());
    }

    #[test]
    fn profile_is_usable_at_f32() {
        let p = DensityProfileParams::<f32>::new(10.0, 1.18, 3.25e-3).unwrap();
        let rho = p.density_at(p.r0() + 1.0 / p.alpha()).unwrap();
        assert_relative_eq!(rho / p.rho0(), 0.2642, max_relative = 1e-3);
    }
}
