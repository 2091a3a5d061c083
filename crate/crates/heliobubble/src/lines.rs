//! Pressure-shift regression per emission line and the statistical
//! combination of the three fitted slopes.

use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum LinesError {
    #[error("linear fit needs at least 3 samples, got {0}")]
    TooFewSamples(usize),
    #[error("degenerate design: all pressures equal ({0} bar)")]
    DegenerateDesign(f64),
    #[error("sample {index} invalid: {reason}")]
    BadSample { index: usize, reason: String },
    #[error("pressures must be strictly increasing (sample {0})")]
    UnorderedPressures(usize),
    #[error("slope estimate {index} invalid: {reason}")]
    BadEstimate { index: usize, reason: String },
}

/// The three fine-structure components of the 3s4s³S₁ → 3s3p³P triplet,
/// indexed by lower level and ordered by wavelength (P0 shortest).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LineId {
    P0,
    P1,
    P2,
}

impl LineId {
    pub const ALL: [LineId; 3] = [LineId::P0, LineId::P1, LineId::P2];

    pub fn index(self) -> usize {
        match self {
            LineId::P0 => 0,
            LineId::P1 => 1,
            LineId::P2 => 2,
        }
    }
}

impl std::fmt::Display for LineId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{self:?}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineSample {
    pub pressure_bar: f64,
    pub lambda_nm: f64,
    pub sigma_nm: Option<f64>,
}

/// (pressure, wavelength, uncertainty) samples of one line, with the
/// attached straight-line fit once three or more samples exist.
#[derive(Debug, Clone, PartialEq)]
pub struct LineSeries {
    pub line: LineId,
    pub samples: Vec<LineSample>,
    pub fit: Option<LinearFit>,
}

impl LineSeries {
    /// Validates ordering and positivity; attaches a fit when the series
    /// has at least three samples (shorter series stay unfitted).
    pub fn new(line: LineId, samples: Vec<LineSample>) -> Result<Self, LinesError> {
        for (i, s) in samples.iter().enumerate() {
            if !(s.lambda_nm > 0.0) || !s.lambda_nm.is_finite() || !s.pressure_bar.is_finite() {
                return Err(LinesError::BadSample {
                    index: i,
                    reason: format!("(p, lambda) = ({}, {})", s.pressure_bar, s.lambda_nm),
                });
            }
            if i > 0 && s.pressure_bar <= samples[i - 1].pressure_bar {
                return Err(LinesError::UnorderedPressures(i));
            }
        }
        let fit = if samples.len() >= 3 {
            Some(linear_fit(&samples)?)
        } else {
            None
        };
        Ok(Self { line, samples, fit })
    }
}

/// Weighted least-squares fit of λ = λ₀ + slope·p.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub lambda0_nm: f64,
    pub slope_nm_per_bar: f64,
    pub sigma_lambda0: f64,
    pub sigma_slope: f64,
    pub chi2: f64,
    pub dof: usize,
    pub r_squared: f64,
    /// True when any sample lacked an uncertainty, making all weights one
    /// and the parameter errors s²-scaled.
    pub unit_weights: bool,
}

impl LinearFit {
    /// Slope uncertainty inflated by √(χ²/dof) when the fit is poorer than
    /// its stated errors claim (and left alone when χ²/dof ≤ 1). Standard
    /// practice when combining measurements whose error bars underestimate
    /// the scatter.
    pub fn scaled_sigma_slope(&self) -> f64 {
        self.sigma_slope * self.error_scale()
    }

    pub fn scaled_sigma_lambda0(&self) -> f64 {
        self.sigma_lambda0 * self.error_scale()
    }

    fn error_scale(&self) -> f64 {
        if self.unit_weights || self.dof == 0 {
            return 1.0;
        }
        (self.chi2 / self.dof as f64).sqrt().max(1.0)
    }

    pub fn slope_estimate(&self) -> SlopeEstimate {
        SlopeEstimate {
            slope: self.slope_nm_per_bar,
            sigma: self.scaled_sigma_slope(),
            dof: self.dof as f64,
        }
    }
}

/// Weighted least squares for λ = λ₀ + m·p with covariance from the normal
/// equations, computed around the weighted mean pressure so that wide
/// pressure ranges cost no precision. Falls back to unit weights (and
/// residual-scaled errors) when any uncertainty is missing.
pub fn linear_fit(samples: &[LineSample]) -> Result<LinearFit, LinesError> {
    let n = samples.len();
    if n < 3 {
        return Err(LinesError::TooFewSamples(n));
    }
    for (i, s) in samples.iter().enumerate() {
        if !s.pressure_bar.is_finite() || !s.lambda_nm.is_finite() {
            return Err(LinesError::BadSample {
                index: i,
                reason: "non-finite sample".into(),
            });
        }
        if let Some(sig) = s.sigma_nm {
            if !(sig > 0.0) || !sig.is_finite() {
                return Err(LinesError::BadSample {
                    index: i,
                    reason: format!("sigma = {sig}"),
                });
            }
        }
    }
    let unit_weights = samples.iter().any(|s| s.sigma_nm.is_none());
    let weight = |s: &LineSample| {
        if unit_weights {
            1.0
        } else {
            let sig = s.sigma_nm.unwrap();
            1.0 / (sig * sig)
        }
    };

    let s_w: f64 = samples.iter().map(weight).sum();
    let x_bar: f64 = samples.iter().map(|s| weight(s) * s.pressure_bar).sum::<f64>() / s_w;
    let y_bar: f64 = samples.iter().map(|s| weight(s) * s.lambda_nm).sum::<f64>() / s_w;
    let mut s_tt = 0.0;
    let mut s_ty = 0.0;
    for s in samples {
        let t = s.pressure_bar - x_bar;
        s_tt += weight(s) * t * t;
        s_ty += weight(s) * t * s.lambda_nm;
    }
    let spread = samples
        .iter()
        .map(|s| (s.pressure_bar - x_bar).abs())
        .fold(0.0, f64::max);
    if s_tt <= 0.0 || spread < 1e-12 * (1.0 + x_bar.abs()) {
        return Err(LinesError::DegenerateDesign(x_bar));
    }

    let slope = s_ty / s_tt;
    let lambda0 = y_bar - slope * x_bar;
    let dof = n - 2;
    let mut chi2 = 0.0;
    let mut ss_tot = 0.0;
    for s in samples {
        let r = s.lambda_nm - lambda0 - slope * s.pressure_bar;
        chi2 += weight(s) * r * r;
        let d = s.lambda_nm - y_bar;
        ss_tot += weight(s) * d * d;
    }
    // covariance of (λ₀, m) from the weighted normal equations
    let mut var_slope = 1.0 / s_tt;
    let mut var_lambda0 = 1.0 / s_w + x_bar * x_bar / s_tt;
    if unit_weights {
        // absolute errors unknown: scale by the residual variance
        let s2 = if dof > 0 { chi2 / dof as f64 } else { 0.0 };
        var_slope *= s2;
        var_lambda0 *= s2;
    }
    let r_squared = if ss_tot > 0.0 { 1.0 - chi2 / ss_tot } else { 1.0 };

    Ok(LinearFit {
        lambda0_nm: lambda0,
        slope_nm_per_bar: slope,
        sigma_lambda0: var_lambda0.sqrt(),
        sigma_slope: var_slope.sqrt(),
        chi2,
        dof,
        r_squared,
        unit_weights,
    })
}

/// One fitted slope with its standard error and residual degrees of
/// freedom (from the fit: samples − 2).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeEstimate {
    pub slope: f64,
    pub sigma: f64,
    pub dof: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairwiseT {
    pub first: usize,
    pub second: usize,
    pub t: f64,
    /// Welch-Satterthwaite effective degrees of freedom of the difference.
    pub dof: f64,
    /// Two-sided critical value at the combination's significance level.
    pub critical: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlopeCombination {
    pub mean: f64,
    pub sigma: f64,
    pub pairwise: Vec<PairwiseT>,
    pub consistent: bool,
    pub significance: f64,
}

fn critical_t(dof: f64, significance: f64) -> f64 {
    let p = 1.0 - significance / 2.0;
    if dof.is_finite() && dof <= 1000.0 {
        StudentsT::new(0.0, 1.0, dof)
            .expect("valid dof")
            .inverse_cdf(p)
    } else {
        // normal limit
        statrs::distribution::Normal::new(0.0, 1.0)
            .expect("unit normal")
            .inverse_cdf(p)
    }
}

/// Inverse-variance weighted mean of the three line slopes plus pairwise
/// two-sample t tests on their differences, with a consistency verdict at
/// the 5% level. Pairwise degrees of freedom follow Welch-Satterthwaite.
pub fn combine_slopes(estimates: &[SlopeEstimate; 3]) -> Result<SlopeCombination, LinesError> {
    for (i, e) in estimates.iter().enumerate() {
        if !e.slope.is_finite() || !(e.sigma > 0.0) || !e.sigma.is_finite() || !(e.dof > 0.0) {
            return Err(LinesError::BadEstimate {
                index: i,
                reason: format!("slope {} sigma {} dof {}", e.slope, e.sigma, e.dof),
            });
        }
    }
    let significance = 0.05;
    let sum_w: f64 = estimates.iter().map(|e| 1.0 / (e.sigma * e.sigma)).sum();
    let mean = estimates
        .iter()
        .map(|e| e.slope / (e.sigma * e.sigma))
        .sum::<f64>()
        / sum_w;
    let sigma = sum_w.sqrt().recip();

    let mut pairwise = Vec::with_capacity(3);
    let mut consistent = true;
    for i in 0..3 {
        for j in (i + 1)..3 {
            let (a, b) = (&estimates[i], &estimates[j]);
            let var = a.sigma * a.sigma + b.sigma * b.sigma;
            let t = (a.slope - b.slope).abs() / var.sqrt();
            let dof = var * var
                / (a.sigma.powi(4) / a.dof + b.sigma.powi(4) / b.dof);
            let critical = critical_t(dof, significance);
            if t >= critical {
                consistent = false;
            }
            pairwise.push(PairwiseT {
                first: i,
                second: j,
                t,
                dof,
                critical,
            });
        }
    }
    Ok(SlopeCombination {
        mean,
        sigma,
        pairwise,
        consistent,
        significance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use rand::SeedableRng;

    fn exact_samples(lambda0: f64, slope: f64, pressures: &[f64]) -> Vec<LineSample> {
        pressures
            .iter()
            .map(|&p| LineSample {
                pressure_bar: p,
                lambda_nm: lambda0 + slope * p,
                sigma_nm: Some(0.05),
            })
            .collect()
    }

    #[test]
    fn exact_line_is_recovered_to_rounding() {
        let pressures: Vec<f64> = (0..10).map(|i| 2.4 * i as f64).collect();
        let fit = linear_fit(&exact_samples(517.51, -0.06, &pressures)).unwrap();
        assert_abs_diff_eq!(fit.lambda0_nm, 517.51, epsilon = 1e-10);
        assert_abs_diff_eq!(fit.slope_nm_per_bar, -0.06, epsilon = 1e-10);
        assert!(fit.chi2 < 1e-18);
        assert!(fit.r_squared > 1.0 - 1e-12);
    }

    #[test]
    fn affine_equivariance() {
        let pressures: Vec<f64> = vec![1.5, 4.0, 8.0, 12.0, 16.0, 20.0, 24.0];
        let mut samples = exact_samples(517.0, -0.08, &pressures);
        // perturb so residuals are not all zero
        for (i, s) in samples.iter_mut().enumerate() {
            s.lambda_nm += 0.01 * ((i as f64 * 2.3).sin());
        }
        let base = linear_fit(&samples).unwrap();

        let shifted: Vec<LineSample> = samples
            .iter()
            .map(|s| LineSample {
                lambda_nm: s.lambda_nm + 3.25,
                ..*s
            })
            .collect();
        let fs = linear_fit(&shifted).unwrap();
        assert_relative_eq!(fs.lambda0_nm, base.lambda0_nm + 3.25, max_relative = 1e-12);
        assert_relative_eq!(fs.slope_nm_per_bar, base.slope_nm_per_bar, max_relative = 1e-12);

        let rescaled: Vec<LineSample> = samples
            .iter()
            .map(|s| LineSample {
                pressure_bar: 2.0 * s.pressure_bar,
                ..*s
            })
            .collect();
        let fr = linear_fit(&rescaled).unwrap();
        assert_relative_eq!(
            fr.slope_nm_per_bar,
            base.slope_nm_per_bar / 2.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn degenerate_designs_are_rejected() {
        let two = exact_samples(517.0, -0.06, &[0.0, 5.0]);
        assert!(matches!(linear_fit(&two), Err(LinesError::TooFewSamples(2))));
        let flat: Vec<LineSample> = (0..5)
            .map(|i| LineSample {
                pressure_bar: 8.0,
                lambda_nm: 517.0 + 0.001 * i as f64,
                sigma_nm: Some(0.05),
            })
            .collect();
        assert!(matches!(
            linear_fit(&flat),
            Err(LinesError::DegenerateDesign(_))
        ));
    }

    #[test]
    fn weighted_fit_matches_hand_solved_normal_equations() {
        // three points, unequal weights, solved by hand:
        // w = (4, 1, 1), p = (0, 1, 2), y = (1.0, 2.0, 2.5)
        let samples = [
            LineSample { pressure_bar: 0.0, lambda_nm: 1.0, sigma_nm: Some(0.5) },
            LineSample { pressure_bar: 1.0, lambda_nm: 2.0, sigma_nm: Some(1.0) },
            LineSample { pressure_bar: 2.0, lambda_nm: 2.5, sigma_nm: Some(1.0) },
        ];
        // S=6, Sx=3, x̄=0.5, Stt=4·0.25+1·0.25+1·2.25=3.5
        // Sty=4·(−0.5)(1)+1·(0.5)(2)+1·(1.5)(2.5)=−2+1+3.75=2.75
        // m=2.75/3.5, λ0=ȳ−m·x̄ with ȳ=(4+2+2.5)/6
        let m = 2.75 / 3.5;
        let y_bar = 8.5 / 6.0;
        let fit = linear_fit(&samples).unwrap();
        assert_relative_eq!(fit.slope_nm_per_bar, m, max_relative = 1e-14);
        assert_relative_eq!(fit.lambda0_nm, y_bar - m * 0.5, max_relative = 1e-14);
        assert_relative_eq!(fit.sigma_slope, (1.0f64 / 3.5).sqrt(), max_relative = 1e-14);
        assert_relative_eq!(
            fit.sigma_lambda0,
            (1.0f64 / 6.0 + 0.25 / 3.5).sqrt(),
            max_relative = 1e-14
        );
        assert!(!fit.unit_weights);
    }

    #[test]
    fn unit_weight_fallback_scales_errors_by_residuals() {
        let samples: Vec<LineSample> = (0..8)
            .map(|i| LineSample {
                pressure_bar: i as f64,
                lambda_nm: 517.0 - 0.06 * i as f64 + 0.02 * ((i * i) as f64).sin(),
                sigma_nm: None,
            })
            .collect();
        let fit = linear_fit(&samples).unwrap();
        assert!(fit.unit_weights);
        // s² scaling: recompute from definitions
        let s2 = fit.chi2 / fit.dof as f64;
        let x_bar = 3.5;
        let s_tt: f64 = (0..8).map(|i| (i as f64 - x_bar).powi(2)).sum();
        assert_relative_eq!(fit.sigma_slope, (s2 / s_tt).sqrt(), max_relative = 1e-12);
    }

    #[test]
    fn monte_carlo_slope_statistics_match_reported_errors() {
        use rand::Rng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        let mut normal = || -> f64 {
            // Box-Muller
            let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
            let u2: f64 = rng.gen::<f64>();
            (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
        };
        let pressures: Vec<f64> = (0..20).map(|i| 24.0 * i as f64 / 19.0).collect();
        let mut slopes = Vec::with_capacity(500);
        let mut reported = Vec::with_capacity(500);
        for _ in 0..500 {
            let samples: Vec<LineSample> = pressures
                .iter()
                .map(|&p| LineSample {
                    pressure_bar: p,
                    lambda_nm: 517.51 - 0.06 * p + 0.05 * normal(),
                    sigma_nm: Some(0.05),
                })
                .collect();
            let fit = linear_fit(&samples).unwrap();
            slopes.push(fit.slope_nm_per_bar);
            reported.push(fit.sigma_slope);
        }
        let mean: f64 = slopes.iter().sum::<f64>() / 500.0;
        let sd: f64 = (slopes.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / 499.0).sqrt();
        let mean_reported: f64 = reported.iter().sum::<f64>() / 500.0;
        // mean within three standard errors of the truth
        assert!(
            (mean + 0.06).abs() < 3.0 * sd / (500.0f64).sqrt(),
            "MC mean {mean} too far from -0.06"
        );
        assert_relative_eq!(sd, mean_reported, max_relative = 0.2);
    }

    #[test]
    fn reported_slopes_combine_to_a_consistent_mean() {
        let est = [
            SlopeEstimate { slope: -0.09, sigma: 0.01, dof: 5.0 },
            SlopeEstimate { slope: -0.06, sigma: 0.01, dof: 5.0 },
            SlopeEstimate { slope: -0.06, sigma: 0.01, dof: 5.0 },
        ];
        let c = combine_slopes(&est).unwrap();
        assert_relative_eq!(c.mean, -0.07, max_relative = 1e-12);
        assert_relative_eq!(c.sigma, 0.01 / 3.0f64.sqrt(), max_relative = 1e-12);
        assert!(c.sigma < 0.0065 && c.sigma > 0.0055);
        assert!(c.consistent);
        // the worst pair: |Δm| = 0.03, σ_Δ = 0.01√2, Welch dof = 10
        let worst = c
            .pairwise
            .iter()
            .max_by(|a, b| a.t.partial_cmp(&b.t).unwrap())
            .unwrap();
        assert_relative_eq!(worst.t, 0.03 / (0.01 * 2.0f64.sqrt()), max_relative = 1e-12);
        assert_relative_eq!(worst.dof, 10.0, max_relative = 1e-12);
        assert!(worst.critical > 2.2 && worst.critical < 2.3);
    }

    #[test]
    fn identical_slopes_give_zero_t() {
        let est = [
            SlopeEstimate { slope: -0.07, sigma: 0.02, dof: 8.0 },
            SlopeEstimate { slope: -0.07, sigma: 0.02, dof: 8.0 },
            SlopeEstimate { slope: -0.07, sigma: 0.02, dof: 8.0 },
        ];
        let c = combine_slopes(&est).unwrap();
        assert_eq!(c.mean, -0.07);
        assert!(c.pairwise.iter().all(|p| p.t == 0.0));
        assert!(c.consistent);
    }

    #[test]
    fn tight_errors_flag_inconsistency() {
        let est = [
            SlopeEstimate { slope: -0.09, sigma: 0.001, dof: 5.0 },
            SlopeEstimate { slope: -0.06, sigma: 0.001, dof: 5.0 },
            SlopeEstimate { slope: -0.06, sigma: 0.001, dof: 5.0 },
        ];
        let c = combine_slopes(&est).unwrap();
        assert!(!c.consistent);
        assert!(c.pairwise.iter().any(|p| p.t > 20.0));
    }

    #[test]
    fn combination_is_order_invariant() {
        let a = SlopeEstimate { slope: -0.09, sigma: 0.013, dof: 5.0 };
        let b = SlopeEstimate { slope: -0.06, sigma: 0.008, dof: 5.0 };
        let d = SlopeEstimate { slope: -0.065, sigma: 0.02, dof: 5.0 };
        let c1 = combine_slopes(&[a, b, d]).unwrap();
        let c2 = combine_slopes(&[d, a, b]).unwrap();
        assert_relative_eq!(c1.mean, c2.mean, max_relative = 1e-14);
        assert_relative_eq!(c1.sigma, c2.sigma, max_relative = 1e-14);
        assert_eq!(c1.consistent, c2.consistent);
    }

    #[test]
    fn invalid_estimates_are_rejected() {
        let good = SlopeEstimate { slope: -0.07, sigma: 0.01, dof: 5.0 };
        let bad = SlopeEstimate { slope: f64::NAN, sigma: 0.01, dof: 5.0 };
        assert!(combine_slopes(&[good, bad, good]).is_err());
        let zero_sigma = SlopeEstimate { slope: -0.07, sigma: 0.0, dof: 5.0 };
        assert!(combine_slopes(&[good, zero_sigma, good]).is_err());
    }

    #[test]
    fn series_validation_and_fit_attachment() {
        let samples = exact_samples(517.51, -0.06, &[1.5, 4.0, 8.0, 12.0]);
        let series = LineSeries::new(LineId::P1, samples).unwrap();
        assert!(series.fit.is_some());
        let single = LineSeries::new(LineId::P0, exact_samples(517.11, -0.09, &[1.5])).unwrap();
        assert!(single.fit.is_none());
        let unordered = vec![
            LineSample { pressure_bar: 4.0, lambda_nm: 517.0, sigma_nm: None },
            LineSample { pressure_bar: 4.0, lambda_nm: 517.1, sigma_nm: None },
        ];
        assert!(matches!(
            LineSeries::new(LineId::P2, unordered),
            Err(LinesError::UnorderedPressures(1))
        ));
        let negative = vec![LineSample { pressure_bar: 0.0, lambda_nm: -1.0, sigma_nm: None }];
        assert!(LineSeries::new(LineId::P2, negative).is_err());
    }
}
