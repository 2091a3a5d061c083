//! Bubble-model spectroscopy of atomic defects in superfluid helium.
//!
//! A foreign atom whose electron cloud repels helium opens a cavity (a
//! "bubble") in the liquid. The model here balances the pressure-volume work,
//! surface energy, and quantum kinetic energy of the helium interface against
//! the pairwise defect-helium interaction, minimizes the total over the bubble
//! radius per electronic state, and converts the state-resolved energies into
//! pressure-dependent emission wavelengths of the Mg 3s4s³S₁ → 3s3p³P₀,₁,₂
//! triplet. The companion analysis pipeline synthesizes and fits
//! three-Gaussian emission spectra, regresses line centers against pressure,
//! and combines the per-line slopes statistically.
//!
//! Numeric kernels (density profile, pair potentials, quadrature, minimizers,
//! energy terms) are generic over the scalar type via [`num_traits::Float`];
//! the pipeline layers run on [`Real`] (f64).

// `!(x > 0)` guards deliberately reject NaN along with the out-of-range
// values; frozen calibration constants keep their full printed precision.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod calibrate;
pub mod config;
pub mod energy;
pub mod equilibrium;
pub mod gaussfit;
pub mod lines;
pub mod minimize;
pub mod potential;
pub mod profile;
pub mod quadrature;
pub mod report;
pub mod spectrum;
pub mod table;
pub mod units;

/// Scalar type used by the concrete pipeline layers and type defaults.
pub type Real = f64;

pub use calibrate::{calibrate_model_potentials, CalibrationReport, CalibrationTargets};
pub use config::{ConfigError, PotentialSpec, Provenance, RunConfig};
pub use energy::{
    defect_energy, interaction_energy_p, interaction_energy_s, surface_energy, volume_energy,
    volume_kinetic_energy, AngularPrefactor, ElectronicState, EnergyBreakdown, EnergyContext,
    QuadratureSpec, RadiusMap,
};
pub use equilibrium::{
    AlphaMode, BubbleModel, EmissionMode, EmissionPoint, EquilibriumResult, PressureScan,
    TransitionTable,
};
pub use gaussfit::{extract_line_series, fit_three_gaussians, FitOptions, FittedLine, SpectrumFit};
pub use lines::{
    combine_slopes, linear_fit, LineId, LineSample, LineSeries, LinearFit, SlopeCombination,
    SlopeEstimate,
};
pub use potential::{PairPotentialSet, PotentialCurve, PotentialForm};
pub use profile::DensityProfileParams;
pub use report::{csv_text, fmt_sig, json_text};
pub use spectrum::{synthesize, GaussianLine, Spectrum, SynthesisSpec};
pub use table::{comparison_table, relative_shift, ComparisonRow};
pub use units::{EnergyUnit, PhysicalConstants};
