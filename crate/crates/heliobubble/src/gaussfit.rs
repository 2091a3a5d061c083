//! Three-Gaussian spectral decomposition by damped least squares, plus the
//! multi-pressure series extraction built on top of it.

use crate::lines::{LineId, LineSample, LineSeries, LinesError};
use crate::spectrum::{peak_partials, peak_value, GaussianLine, Spectrum};
use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GaussFitError {
    #[error("need at least {need} samples to fit three lines, got {have}")]
    TooFewPoints { have: usize, need: usize },
    #[error("found {found} candidate peaks in the data, need 3")]
    SeedingFailed { found: usize },
    #[error(
        "no convergence after {iterations} iterations (chi2 {chi2:.6e}, scaled gradient {gradient:.3e})"
    )]
    DidNotConverge {
        iterations: usize,
        chi2: f64,
        gradient: f64,
        best: Box<SpectrumFit>,
    },
    #[error("normal equations singular at iteration {0}")]
    Singular(usize),
    #[error("initial guess is not admissible: {0}")]
    BadInit(String),
    #[error("fitted center {0} nm lies outside the data range [{1}, {2}] nm")]
    CenterOutOfRange(f64, f64, f64),
}

/// Knobs for [`fit_three_gaussians`].  Defaults fit a flat baseline with the
/// lines treated as pure Gaussians.
#[derive(Debug, Clone)]
pub struct FitOptions {
    /// Fit `baseline + tilt * (lambda - mean(lambda))` instead of a constant.
    pub linear_baseline: bool,
    /// Rectangular slit width folded into every line, if known.
    pub instrument_width_nm: Option<f64>,
    pub max_iterations: usize,
    /// Convergence: the largest cosine between the weighted residual and any
    /// Jacobian column must fall below this.  Dimensionless; the achievable
    /// floor in double precision is around 2e-8.
    pub gtol: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            linear_baseline: false,
            instrument_width_nm: None,
            max_iterations: 200,
            gtol: 1e-6,
        }
    }
}

/// One fitted emission line with 1-sigma parameter uncertainties.
#[derive(Debug, Clone, Copy)]
pub struct FittedLine {
    pub amplitude: f64,
    pub center_nm: f64,
    pub width_nm: f64,
    pub amplitude_sigma: f64,
    pub center_sigma_nm: f64,
    pub width_sigma_nm: f64,
}

/// Full result of a three-line fit.  `lines` are sorted by center, and
/// `covariance` rows/columns follow the parameter order
/// `[baseline, (tilt), (amplitude, center, width) x 3]` after that sort.
/// With a linear baseline, `baseline` is the level at the grid mean.
#[derive(Debug, Clone)]
pub struct SpectrumFit {
    pub lines: [FittedLine; 3],
    pub baseline: f64,
    pub baseline_sigma: f64,
    pub tilt_per_nm: Option<f64>,
    pub tilt_sigma_per_nm: Option<f64>,
    pub covariance: Vec<Vec<f64>>,
    pub chi2: f64,
    pub dof: usize,
    /// chi-square after the initial guess and after every accepted step;
    /// non-increasing by construction.
    pub chi2_trace: Vec<f64>,
    /// Largest residual/Jacobian-column cosine at the last evaluated point;
    /// a converged fit has this below [`FitOptions::gtol`].
    pub gradient_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    /// True when the spectrum carried no per-sample uncertainties and the
    /// covariance was rescaled by chi2/dof.
    pub unit_weights: bool,
}

impl SpectrumFit {
    pub fn line(&self, id: LineId) -> &FittedLine {
        &self.lines[id.index()]
    }

    /// Fitted model evaluated on a wavelength grid.  The tilt, when present,
    /// pivots about the mean of the grid the fit ran on, so pass that same
    /// grid (or one with the same mean); `instrument_width_nm` must match
    /// the fit options too.
    pub fn model(&self, wavelength_nm: &[f64], instrument_width_nm: Option<f64>) -> Vec<f64> {
        let x_mid = wavelength_nm.iter().sum::<f64>() / wavelength_nm.len().max(1) as f64;
        let tilt = self.tilt_per_nm.unwrap_or(0.0);
        wavelength_nm
            .iter()
            .map(|&x| {
                self.lines.iter().fold(
                    self.baseline + tilt * (x - x_mid),
                    |acc, line| {
                        acc + peak_value(
                            x,
                            line.amplitude,
                            line.center_nm,
                            line.width_nm,
                            instrument_width_nm,
                        )
                    },
                )
            })
            .collect()
    }
}

struct Problem<'a> {
    x: &'a [f64],
    y: &'a [f64],
    weights: Vec<f64>,
    unit_weights: bool,
    base_params: usize,
    x_mid: f64,
    width: Option<f64>,
    lo: f64,
    hi: f64,
}

impl Problem<'_> {
    fn n_params(&self) -> usize {
        self.base_params + 9
    }

    fn model(&self, x: f64, theta: &[f64]) -> f64 {
        let mut y = theta[0];
        if self.base_params == 2 {
            y += theta[1] * (x - self.x_mid);
        }
        for k in 0..3 {
            let j = self.base_params + 3 * k;
            y += peak_value(x, theta[j], theta[j + 1], theta[j + 2], self.width);
        }
        y
    }

    fn chi2(&self, theta: &[f64]) -> f64 {
        self.x
            .iter()
            .zip(self.y)
            .zip(&self.weights)
            .map(|((&x, &y), &w)| {
                let r = y - self.model(x, theta);
                w * r * r
            })
            .sum()
    }

    /// Weighted normal-equation pieces at `theta`:
    /// `(J^T W J, J^T W r, chi2)`.
    fn normal_equations(&self, theta: &[f64]) -> (DMatrix<f64>, DVector<f64>, f64) {
        let n = self.x.len();
        let m = self.n_params();
        let mut jac = DMatrix::zeros(n, m);
        let mut wr = DVector::zeros(n);
        let mut chi2 = 0.0;
        for (i, (&x, &y)) in self.x.iter().zip(self.y).enumerate() {
            let w = self.weights[i];
            let sw = w.sqrt();
            jac[(i, 0)] = sw;
            if self.base_params == 2 {
                jac[(i, 1)] = sw * (x - self.x_mid);
            }
            for k in 0..3 {
                let j = self.base_params + 3 * k;
                let (da, dc, ds) =
                    peak_partials(x, theta[j], theta[j + 1], theta[j + 2], self.width);
                jac[(i, j)] = sw * da;
                jac[(i, j + 1)] = sw * dc;
                jac[(i, j + 2)] = sw * ds;
            }
            let r = y - self.model(x, theta);
            wr[i] = sw * r;
            chi2 += w * r * r;
        }
        let hessian = jac.transpose() * &jac;
        let gradient = jac.transpose() * &wr;
        (hessian, gradient, chi2)
    }

    /// Parameters a candidate step may not leave: non-negative amplitudes,
    /// widths inside (1e-6, range), centers within half a range of the data.
    fn admissible(&self, theta: &[f64]) -> bool {
        let range = self.hi - self.lo;
        for k in 0..3 {
            let j = self.base_params + 3 * k;
            let (a, c, s) = (theta[j], theta[j + 1], theta[j + 2]);
            if !(a >= 0.0) || !(s > 1e-6 && s < range) {
                return false;
            }
            if !(c >= self.lo - 0.5 * range && c <= self.hi + 0.5 * range) {
                return false;
            }
        }
        theta.iter().all(|v| v.is_finite())
    }
}

/// Moving average over a 5-sample window, shrinking at the edges.
fn smooth(y: &[f64]) -> Vec<f64> {
    let n = y.len();
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(2);
            let hi = (i + 2).min(n - 1);
            y[lo..=hi].iter().sum::<f64>() / (hi - lo + 1) as f64
        })
        .collect()
}

fn lower_decile(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    sorted[((sorted.len() - 1) as f64 * 0.1).round() as usize]
}

/// Half-maximum walk around a smoothed peak; returns a Gaussian sigma
/// estimate, falling back to a few grid steps when the walk degenerates.
fn width_from_half_max(x: &[f64], smoothed: &[f64], peak: usize, base: f64, step: f64) -> f64 {
    let half = base + 0.5 * (smoothed[peak] - base);
    let mut left = None;
    let mut j = peak;
    while j > 0 {
        j -= 1;
        if smoothed[j] <= half {
            left = Some(x[j]);
            break;
        }
    }
    let mut right = None;
    let mut j = peak;
    while j + 1 < x.len() {
        j += 1;
        if smoothed[j] <= half {
            right = Some(x[j]);
            break;
        }
    }
    let fwhm = match (left, right) {
        (Some(l), Some(r)) => r - l,
        (Some(l), None) => 2.0 * (x[peak] - l),
        (None, Some(r)) => 2.0 * (r - x[peak]),
        (None, None) => 0.0,
    };
    let sigma = fwhm / 2.354_820_045_030_949;
    let range = x[x.len() - 1] - x[0];
    if !sigma.is_finite() || sigma <= 0.0 {
        4.0 * step
    } else {
        sigma.clamp(2.0 * step, 0.25 * range)
    }
}

/// Peak seeding straight from the data: smooth, threshold above the smoothed
/// floor, keep the three tallest local maxima at least 0.3 nm apart.
fn seed_from_data(spectrum: &Spectrum) -> Result<(f64, [GaussianLine; 3]), GaussFitError> {
    let x = &spectrum.wavelength_nm;
    let smoothed = smooth(&spectrum.intensity);
    let base = lower_decile(&smoothed);
    let top = smoothed.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let floor = base + 0.1 * (top - base);
    let step = (x[x.len() - 1] - x[0]) / (x.len() - 1) as f64;

    let mut candidates: Vec<usize> = (1..x.len() - 1)
        .filter(|&i| {
            smoothed[i] > floor && smoothed[i] > smoothed[i - 1] && smoothed[i] > smoothed[i + 1]
        })
        .collect();
    candidates.sort_by(|&a, &b| smoothed[b].total_cmp(&smoothed[a]));

    const MIN_SEPARATION_NM: f64 = 0.3;
    let mut picked: Vec<usize> = Vec::new();
    for i in candidates {
        if picked.iter().all(|&p| (x[i] - x[p]).abs() >= MIN_SEPARATION_NM) {
            picked.push(i);
        }
    }
    if picked.len() < 3 {
        return Err(GaussFitError::SeedingFailed {
            found: picked.len(),
        });
    }
    picked.truncate(3);
    picked.sort_unstable();

    let mut lines = [GaussianLine {
        amplitude: 0.0,
        center_nm: 0.0,
        sigma_nm: 0.0,
    }; 3];
    for (slot, &i) in lines.iter_mut().zip(&picked) {
        *slot = GaussianLine {
            amplitude: (smoothed[i] - base).max(1e-3 * (top - base)),
            center_nm: x[i],
            sigma_nm: width_from_half_max(x, &smoothed, i, base, step),
        };
    }
    Ok((base, lines))
}

fn build_fit(
    problem: &Problem<'_>,
    theta: &[f64],
    chi2: f64,
    chi2_trace: Vec<f64>,
    gradient_norm: f64,
    iterations: usize,
    converged: bool,
) -> SpectrumFit {
    let m = problem.n_params();
    let n = problem.x.len();
    let dof = n - m;

    // Sort the line blocks by center so callers always see ascending lines;
    // the covariance gets the same permutation.
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| {
        theta[problem.base_params + 3 * a + 1].total_cmp(&theta[problem.base_params + 3 * b + 1])
    });
    let mut index_map: Vec<usize> = (0..problem.base_params).collect();
    for &k in &order {
        let j = problem.base_params + 3 * k;
        index_map.extend([j, j + 1, j + 2]);
    }

    let (hessian, _, _) = problem.normal_equations(theta);
    let scale = if problem.unit_weights && dof > 0 {
        chi2 / dof as f64
    } else {
        1.0
    };
    let covariance: Vec<Vec<f64>> = match hessian.try_inverse() {
        Some(inv) => index_map
            .iter()
            .map(|&i| index_map.iter().map(|&j| scale * inv[(i, j)]).collect())
            .collect(),
        None => vec![vec![f64::NAN; m]; m],
    };

    // Clip roundoff-negative variances to zero; a NaN covariance (singular
    // Hessian) propagates into NaN sigmas instead of being hidden.
    let sigma = |i: usize| {
        let v = covariance[i][i];
        if v < 0.0 {
            0.0
        } else {
            v.sqrt()
        }
    };
    let mut lines = [FittedLine {
        amplitude: 0.0,
        center_nm: 0.0,
        width_nm: 0.0,
        amplitude_sigma: 0.0,
        center_sigma_nm: 0.0,
        width_sigma_nm: 0.0,
    }; 3];
    for (slot, &k) in order.iter().enumerate() {
        let j = problem.base_params + 3 * k;
        let jj = problem.base_params + 3 * slot;
        lines[slot] = FittedLine {
            amplitude: theta[j],
            center_nm: theta[j + 1],
            width_nm: theta[j + 2],
            amplitude_sigma: sigma(jj),
            center_sigma_nm: sigma(jj + 1),
            width_sigma_nm: sigma(jj + 2),
        };
    }

    SpectrumFit {
        lines,
        baseline: theta[0],
        baseline_sigma: sigma(0),
        tilt_per_nm: (problem.base_params == 2).then_some(theta[1]),
        tilt_sigma_per_nm: (problem.base_params == 2).then(|| sigma(1)),
        covariance,
        chi2,
        dof,
        chi2_trace,
        gradient_norm,
        iterations,
        converged,
        unit_weights: problem.unit_weights,
    }
}

/// Fit `baseline (+ tilt) + three Gaussian lines` to a spectrum by
/// Levenberg-Marquardt with an analytic Jacobian.  `init` seeds the lines;
/// when absent the seeds come from the data itself.  Samples are weighted by
/// their uncertainties when the spectrum carries them.  Convergence is
/// claimed only once the scaled chi-square gradient drops below `gtol`.
pub fn fit_three_gaussians(
    spectrum: &Spectrum,
    init: Option<[GaussianLine; 3]>,
    options: &FitOptions,
) -> Result<SpectrumFit, GaussFitError> {
    let n = spectrum.len();
    let base_params = if options.linear_baseline { 2 } else { 1 };
    let need = (base_params + 9 + 1).max(30);
    if n < need {
        return Err(GaussFitError::TooFewPoints { have: n, need });
    }

    let x = &spectrum.wavelength_nm;
    let (weights, unit_weights) = match &spectrum.sigma_intensity {
        Some(sig) => (sig.iter().map(|s| 1.0 / (s * s)).collect(), false),
        None => (vec![1.0; n], true),
    };
    let problem = Problem {
        x,
        y: &spectrum.intensity,
        weights,
        unit_weights,
        base_params,
        x_mid: x.iter().sum::<f64>() / n as f64,
        width: options.instrument_width_nm,
        lo: x[0],
        hi: x[n - 1],
    };

    let (baseline_seed, seeds) = match init {
        Some(lines) => (lower_decile(&smooth(&spectrum.intensity)), lines),
        None => seed_from_data(spectrum)?,
    };
    let mut theta = vec![0.0; problem.n_params()];
    theta[0] = baseline_seed;
    for (k, line) in seeds.iter().enumerate() {
        let j = base_params + 3 * k;
        theta[j] = line.amplitude;
        theta[j + 1] = line.center_nm;
        theta[j + 2] = line.sigma_nm;
    }
    if !problem.admissible(&theta) {
        return Err(GaussFitError::BadInit(format!("{seeds:?}")));
    }

    let mut chi2 = problem.chi2(&theta);
    let mut chi2_trace = vec![chi2];
    let mut lambda = 1e-3;
    let mut iterations = 0;
    let mut converged = false;
    let mut gradient_norm = f64::INFINITY;
    // Below this the residual is rounding dust relative to the data and the
    // gradient direction carries no information.
    let chi2_floor = (16.0 * f64::EPSILON).powi(2)
        * problem
            .y
            .iter()
            .zip(&problem.weights)
            .map(|(&y, &w)| w * y * y)
            .sum::<f64>();

    while iterations < options.max_iterations {
        if chi2 <= chi2_floor {
            converged = true;
            gradient_norm = 0.0;
            break;
        }
        let (hessian, gradient, _) = problem.normal_equations(&theta);
        // Scale-invariant gradient test: cosine of the weighted residual
        // against each Jacobian column (sqrt(H_jj) is that column's norm).
        let residual_norm = chi2.sqrt();
        gradient_norm = (0..gradient.len())
            .map(|j| {
                let scale = hessian[(j, j)].sqrt() * residual_norm;
                if scale > 0.0 {
                    gradient[j].abs() / scale
                } else {
                    0.0
                }
            })
            .fold(0.0, f64::max);
        if gradient_norm <= options.gtol {
            converged = true;
            break;
        }

        let mut accepted = false;
        loop {
            let mut damped = hessian.clone();
            for i in 0..damped.nrows() {
                damped[(i, i)] += lambda * hessian[(i, i)];
            }
            let step = match damped.cholesky() {
                Some(ch) => ch.solve(&gradient),
                None => {
                    lambda *= 10.0;
                    if lambda > 1e14 {
                        return Err(GaussFitError::Singular(iterations));
                    }
                    continue;
                }
            };
            let trial: Vec<f64> = theta.iter().zip(step.iter()).map(|(t, d)| t + d).collect();
            if problem.admissible(&trial) {
                let trial_chi2 = problem.chi2(&trial);
                if trial_chi2 < chi2 {
                    theta = trial;
                    chi2 = trial_chi2;
                    chi2_trace.push(chi2);
                    lambda = (lambda / 3.0).max(1e-15);
                    accepted = true;
                    break;
                }
            }
            lambda *= 10.0;
            if lambda > 1e14 {
                break;
            }
        }
        iterations += 1;
        if !accepted {
            break;
        }
    }

    let fit = build_fit(
        &problem,
        &theta,
        chi2,
        chi2_trace,
        gradient_norm,
        iterations,
        converged,
    );
    if !converged {
        return Err(GaussFitError::DidNotConverge {
            iterations,
            chi2,
            gradient: gradient_norm,
            best: Box::new(fit),
        });
    }
    for line in &fit.lines {
        if line.center_nm < problem.lo || line.center_nm > problem.hi {
            return Err(GaussFitError::CenterOutOfRange(
                line.center_nm,
                problem.lo,
                problem.hi,
            ));
        }
    }
    Ok(fit)
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("no spectra given")]
    Empty,
    #[error("spectrum {index} carries no pressure_bar metadata")]
    MissingPressure { index: usize },
    #[error("two spectra share pressure {pressure_bar} bar")]
    DuplicatePressure { pressure_bar: f64 },
    #[error("fit of spectrum {index} at {pressure_bar} bar failed: {source}")]
    Fit {
        index: usize,
        pressure_bar: f64,
        source: GaussFitError,
    },
    #[error("line identities swap between neighbouring pressures near {pressure_bar} bar")]
    InconsistentOrdering { pressure_bar: f64 },
    #[error(transparent)]
    Lines(#[from] LinesError),
}

fn amplitude_cost(prev: &SpectrumFit, next: &SpectrumFit, perm: &[usize; 3]) -> f64 {
    (0..3)
        .map(|k| (next.lines[perm[k]].amplitude - prev.lines[k].amplitude).abs())
        .sum()
}

/// Lines are identified per spectrum by ascending center, which cannot by
/// itself reveal two lines crossing between pressures.  Amplitudes can: if
/// matching lines by strength prefers a non-identity assignment by more than
/// the amplitude uncertainties, the positional identification has swapped
/// physical lines.
fn ordering_consistent(prev: &SpectrumFit, next: &SpectrumFit) -> bool {
    const PERMUTATIONS: [[usize; 3]; 6] = [
        [0, 1, 2],
        [0, 2, 1],
        [1, 0, 2],
        [1, 2, 0],
        [2, 0, 1],
        [2, 1, 0],
    ];
    let identity_cost = amplitude_cost(prev, next, &PERMUTATIONS[0]);
    let margin: f64 = (0..3)
        .map(|k| prev.lines[k].amplitude_sigma + next.lines[k].amplitude_sigma)
        .sum();
    PERMUTATIONS[1..]
        .iter()
        .all(|perm| amplitude_cost(prev, next, perm) + margin >= identity_cost)
}

/// Fit every spectrum and collect the three line-center series against
/// pressure.  Each spectrum must carry `pressure_bar` metadata; spectra may
/// arrive in any order.  Centers with degenerate uncertainties are recorded
/// as unweighted samples.
pub fn extract_line_series(
    spectra: &[Spectrum],
    options: &FitOptions,
) -> Result<[LineSeries; 3], PipelineError> {
    if spectra.is_empty() {
        return Err(PipelineError::Empty);
    }
    let mut tagged: Vec<(usize, f64, &Spectrum)> = Vec::with_capacity(spectra.len());
    for (index, s) in spectra.iter().enumerate() {
        let p = s
            .metadata_f64("pressure_bar")
            .ok_or(PipelineError::MissingPressure { index })?;
        tagged.push((index, p, s));
    }
    tagged.sort_by(|a, b| a.1.total_cmp(&b.1));
    for pair in tagged.windows(2) {
        if pair[0].1 == pair[1].1 {
            return Err(PipelineError::DuplicatePressure {
                pressure_bar: pair[0].1,
            });
        }
    }

    let mut fits: Vec<(f64, SpectrumFit)> = Vec::with_capacity(tagged.len());
    for &(index, pressure_bar, spectrum) in &tagged {
        let fit = fit_three_gaussians(spectrum, None, options).map_err(|source| {
            PipelineError::Fit {
                index,
                pressure_bar,
                source,
            }
        })?;
        if let Some((_, prev)) = fits.last() {
            if !ordering_consistent(prev, &fit) {
                return Err(PipelineError::InconsistentOrdering { pressure_bar });
            }
        }
        fits.push((pressure_bar, fit));
    }

    let mut series = Vec::with_capacity(3);
    for (k, id) in [LineId::P0, LineId::P1, LineId::P2].into_iter().enumerate() {
        let samples: Vec<LineSample> = fits
            .iter()
            .map(|(p, fit)| {
                let s = fit.lines[k].center_sigma_nm;
                LineSample {
                    pressure_bar: *p,
                    lambda_nm: fit.lines[k].center_nm,
                    sigma_nm: (s.is_finite() && s > 0.0).then_some(s),
                }
            })
            .collect();
        series.push(LineSeries::new(id, samples)?);
    }
    let mut it = series.into_iter();
    Ok([it.next().unwrap(), it.next().unwrap(), it.next().unwrap()])
}
