//! Published cross-species comparison of pressure-induced line shifts in
//! superfluid helium, with the relative-shift column recomputed from the
//! slope and the saturated-vapor-pressure wavelength.

/// One measured transition: free-atom wavelength (when the assignment is
/// unambiguous), wavelength in superfluid helium at saturated vapor
/// pressure, pressure slope, and the relative shift as printed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonRow {
    pub species: &'static str,
    pub transition: &'static str,
    pub lambda_free_nm: Option<f64>,
    pub lambda_svp_nm: f64,
    pub slope_nm_per_bar: f64,
    pub relative_shift_percent_per_bar: f64,
}

impl ComparisonRow {
    /// Relative shift recomputed from the slope and SVP wavelength; agrees
    /// with the printed column to print rounding.
    pub fn recomputed_relative_shift(&self) -> f64 {
        relative_shift(self.slope_nm_per_bar, self.lambda_svp_nm)
    }
}

/// Wavelength change per bar relative to the SVP wavelength, in %/bar.
pub fn relative_shift(slope_nm_per_bar: f64, lambda_svp_nm: f64) -> f64 {
    assert!(
        lambda_svp_nm > 0.0,
        "SVP wavelength must be positive, got {lambda_svp_nm}"
    );
    100.0 * slope_nm_per_bar / lambda_svp_nm
}

const ROWS: [ComparisonRow; 13] = [
    ComparisonRow {
        species: "e-",
        transition: "1s-2p",
        lambda_free_nm: None,
        lambda_svp_nm: 11270.0,
        slope_nm_per_bar: 61.0,
        relative_shift_percent_per_bar: 0.541,
    },
    ComparisonRow {
        species: "e-",
        transition: "1s-1p",
        lambda_free_nm: None,
        lambda_svp_nm: 2480.0,
        slope_nm_per_bar: 252.0,
        relative_shift_percent_per_bar: 10.161,
    },
    ComparisonRow {
        species: "e-",
        transition: "1s-1p",
        lambda_free_nm: None,
        lambda_svp_nm: 2480.0,
        slope_nm_per_bar: 300.0,
        relative_shift_percent_per_bar: 12.097,
    },
    ComparisonRow {
        species: "He2",
        transition: "2^3S -> 2^3P",
        lambda_free_nm: Some(1083.0),
        lambda_svp_nm: 1083.2,
        slope_nm_per_bar: -0.11,
        relative_shift_percent_per_bar: -0.010,
    },
    ComparisonRow {
        species: "He2",
        transition: "2^3P -> 2^3S",
        lambda_free_nm: Some(1083.0),
        lambda_svp_nm: 1091.1,
        slope_nm_per_bar: -0.3,
        relative_shift_percent_per_bar: -0.027,
    },
    ComparisonRow {
        species: "Rb",
        transition: "5^2S_1/2 -> 5^2P_1/2",
        lambda_free_nm: Some(794.76),
        lambda_svp_nm: 777.96,
        slope_nm_per_bar: -0.26,
        relative_shift_percent_per_bar: -0.033,
    },
    ComparisonRow {
        species: "Ba",
        transition: "6s^2 1S_0 -> 6s6p 1P_1",
        lambda_free_nm: Some(553.55),
        lambda_svp_nm: 547.05,
        slope_nm_per_bar: -0.11,
        relative_shift_percent_per_bar: -0.020,
    },
    ComparisonRow {
        species: "Cs",
        transition: "6^2P_1/2 -> 6^2S_1/2",
        lambda_free_nm: Some(894.35),
        lambda_svp_nm: 875.95,
        slope_nm_per_bar: -0.26,
        relative_shift_percent_per_bar: -0.030,
    },
    ComparisonRow {
        species: "Cs",
        transition: "6^2S_1/2 -> 6^2P_1/2",
        lambda_free_nm: Some(894.35),
        lambda_svp_nm: 892.25,
        slope_nm_per_bar: -0.67,
        relative_shift_percent_per_bar: -0.075,
    },
    // two candidate free-atom assignments (590.11 / 589.73 nm) exist for
    // this line, so no single free wavelength is recorded
    ComparisonRow {
        species: "Tm",
        transition: "(4f^12 5d 6s^2 or 4f^13 6s6p) -> 4f^13 6s^2",
        lambda_free_nm: None,
        lambda_svp_nm: 596.21,
        slope_nm_per_bar: -0.06,
        relative_shift_percent_per_bar: -0.01,
    },
    ComparisonRow {
        species: "Mg",
        transition: "3s4s 3S_1 -> 3s3p 3P_0",
        lambda_free_nm: Some(516.73),
        lambda_svp_nm: 517.11,
        slope_nm_per_bar: -0.09,
        relative_shift_percent_per_bar: -0.017,
    },
    ComparisonRow {
        species: "Mg",
        transition: "3s4s 3S_1 -> 3s3p 3P_1",
        lambda_free_nm: Some(517.27),
        lambda_svp_nm: 517.51,
        slope_nm_per_bar: -0.06,
        relative_shift_percent_per_bar: -0.012,
    },
    ComparisonRow {
        species: "Mg",
        transition: "3s4s 3S_1 -> 3s3p 3P_2",
        lambda_free_nm: Some(518.36),
        lambda_svp_nm: 518.52,
        slope_nm_per_bar: -0.06,
        relative_shift_percent_per_bar: -0.012,
    },
];

/// All rows of the cross-species comparison.
pub fn comparison_table() -> &'static [ComparisonRow] {
    &ROWS
}
