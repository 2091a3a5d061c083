//! Synthetic emission spectra: three Gaussian lines on a constant
//! baseline with seeded Gaussian noise, plus plain-text spectrum files.

use std::io::{BufRead, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use statrs::function::erf::erf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SpectrumError {
    #[error("bad wavelength grid: {0}")]
    BadGrid(String),
    #[error("line {index} invalid: {reason}")]
    BadLine { index: usize, reason: String },
    #[error("noise fraction must be finite and >= 0, got {0}")]
    BadNoise(f64),
    #[error("instrument width must be > 0, got {0}")]
    BadWidth(f64),
    #[error("wavelength and intensity lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("spectrum value at index {0} is not finite")]
    NonFinite(usize),
    #[error("intensity uncertainty at index {0} must be finite and > 0")]
    BadSigma(usize),
    #[error("wavelengths must increase strictly (index {0})")]
    Unordered(usize),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: cannot parse {content:?}")]
    Parse { line: usize, content: String },
    #[error("spectrum file has no data rows")]
    Empty,
}

/// One emission line: peak height `amplitude` at `center_nm` with Gaussian
/// width `sigma_nm` (standard deviation, not FWHM).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianLine {
    pub amplitude: f64,
    pub center_nm: f64,
    pub sigma_nm: f64,
}

/// Everything needed to synthesize one noisy spectrum reproducibly.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisSpec {
    pub lines: [GaussianLine; 3],
    pub baseline: f64,
    pub grid_lo_nm: f64,
    pub grid_hi_nm: f64,
    pub step_nm: f64,
    /// Additive noise standard deviation as a fraction of the clean
    /// signal's maximum.
    pub noise_fraction: f64,
    /// Width of a rectangular instrument (slit) function folded into each
    /// line; None leaves the Gaussians pure.
    pub instrument_width_nm: Option<f64>,
    pub seed: u64,
}

impl Default for SynthesisSpec {
    fn default() -> Self {
        Self {
            lines: [
                GaussianLine { amplitude: 2.2, center_nm: 517.11, sigma_nm: 0.12 },
                GaussianLine { amplitude: 3.0, center_nm: 517.51, sigma_nm: 0.12 },
                GaussianLine { amplitude: 3.8, center_nm: 518.52, sigma_nm: 0.12 },
            ],
            baseline: 0.4,
            grid_lo_nm: 514.0,
            grid_hi_nm: 521.0,
            step_nm: 0.025,
            noise_fraction: 0.03,
            instrument_width_nm: None,
            seed: 0,
        }
    }
}

/// A sampled spectrum with its `# key = value` file headers preserved.
/// Per-sample intensity uncertainties are optional (all or none).
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub wavelength_nm: Vec<f64>,
    pub intensity: Vec<f64>,
    pub sigma_intensity: Option<Vec<f64>>,
    pub metadata: Vec<(String, String)>,
}

impl Spectrum {
    pub fn new(
        wavelength_nm: Vec<f64>,
        intensity: Vec<f64>,
        sigma_intensity: Option<Vec<f64>>,
        metadata: Vec<(String, String)>,
    ) -> Result<Self, SpectrumError> {
        if wavelength_nm.len() != intensity.len() {
            return Err(SpectrumError::LengthMismatch(
                wavelength_nm.len(),
                intensity.len(),
            ));
        }
        if wavelength_nm.is_empty() {
            return Err(SpectrumError::Empty);
        }
        if let Some(s) = &sigma_intensity {
            if s.len() != wavelength_nm.len() {
                return Err(SpectrumError::LengthMismatch(wavelength_nm.len(), s.len()));
            }
            for (i, &v) in s.iter().enumerate() {
                if !(v > 0.0) || !v.is_finite() {
                    return Err(SpectrumError::BadSigma(i));
                }
            }
        }
        for i in 0..wavelength_nm.len() {
            if !wavelength_nm[i].is_finite() || !intensity[i].is_finite() {
                return Err(SpectrumError::NonFinite(i));
            }
            if i > 0 && wavelength_nm[i] <= wavelength_nm[i - 1] {
                return Err(SpectrumError::Unordered(i));
            }
        }
        Ok(Self { wavelength_nm, intensity, sigma_intensity, metadata })
    }

    pub fn len(&self) -> usize {
        self.wavelength_nm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.wavelength_nm.is_empty()
    }

    pub fn metadata_value(&self, key: &str) -> Option<&str> {
        self.metadata
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn metadata_f64(&self, key: &str) -> Option<f64> {
        self.metadata_value(key).and_then(|v| v.parse().ok())
    }
}

/// Standard normal deviate via Box-Muller; uses two uniforms per call so
/// the stream is reproducible without hidden state.
pub fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// One line's contribution at `x`: a pure Gaussian, or its average over a
/// rectangular slit of the given width (the closed form uses erf). The
/// slit-folded profile keeps the line's area and tends to the pure
/// Gaussian as the width vanishes.
pub(crate) fn peak_value(x: f64, amplitude: f64, center: f64, sigma: f64, width: Option<f64>) -> f64 {
    let d = x - center;
    match width {
        None => amplitude * (-0.5 * d * d / (sigma * sigma)).exp(),
        // far below the line width the erf difference cancels to rounding
        // noise; the series form of the slit average is exact there
        Some(w) if w < 1e-3 * sigma => {
            let g = amplitude * (-0.5 * d * d / (sigma * sigma)).exp();
            let u = d / sigma;
            g * (1.0 + w * w / (24.0 * sigma * sigma) * (u * u - 1.0))
        }
        Some(w) => {
            let s = sigma * std::f64::consts::SQRT_2;
            let scale = amplitude / w * sigma * (std::f64::consts::PI / 2.0).sqrt();
            scale * (erf((d + 0.5 * w) / s) - erf((d - 0.5 * w) / s))
        }
    }
}

/// Partial derivatives of [`peak_value`] with respect to (amplitude,
/// center, sigma), in closed form for both evaluation branches.
pub(crate) fn peak_partials(
    x: f64,
    amplitude: f64,
    center: f64,
    sigma: f64,
    width: Option<f64>,
) -> (f64, f64, f64) {
    let d = x - center;
    match width {
        Some(w) if w >= 1e-3 * sigma => {
            let s2 = sigma * std::f64::consts::SQRT_2;
            let u_hi = (d + 0.5 * w) / s2;
            let u_lo = (d - 0.5 * w) / s2;
            let g_hi = (-u_hi * u_hi).exp();
            let g_lo = (-u_lo * u_lo).exp();
            let value = peak_value(x, amplitude, center, sigma, width);
            let da = value / amplitude;
            let dc = amplitude / w * (g_lo - g_hi);
            let ds = value / sigma
                - amplitude / w * std::f64::consts::SQRT_2 * (g_hi * u_hi - g_lo * u_lo);
            (da, dc, ds)
        }
        // pure Gaussian, and the narrow-slit branch whose correction term
        // is far below fitting precision
        _ => {
            let g = (-0.5 * d * d / (sigma * sigma)).exp();
            (
                g,
                amplitude * g * d / (sigma * sigma),
                amplitude * g * d * d / (sigma * sigma * sigma),
            )
        }
    }
}

fn validate_spec(spec: &SynthesisSpec) -> Result<(), SpectrumError> {
    if !(spec.grid_lo_nm < spec.grid_hi_nm)
        || !(spec.step_nm > 0.0)
        || !spec.grid_lo_nm.is_finite()
        || !spec.grid_hi_nm.is_finite()
    {
        return Err(SpectrumError::BadGrid(format!(
            "[{}, {}] step {}",
            spec.grid_lo_nm, spec.grid_hi_nm, spec.step_nm
        )));
    }
    for (i, l) in spec.lines.iter().enumerate() {
        if !(l.amplitude > 0.0) || !(l.sigma_nm > 0.0) || !l.center_nm.is_finite() {
            return Err(SpectrumError::BadLine {
                index: i,
                reason: format!(
                    "amplitude {} center {} sigma {}",
                    l.amplitude, l.center_nm, l.sigma_nm
                ),
            });
        }
    }
    if !(spec.noise_fraction >= 0.0) || !spec.noise_fraction.is_finite() {
        return Err(SpectrumError::BadNoise(spec.noise_fraction));
    }
    if let Some(w) = spec.instrument_width_nm {
        if !(w > 0.0) || !w.is_finite() {
            return Err(SpectrumError::BadWidth(w));
        }
    }
    if !spec.baseline.is_finite() {
        return Err(SpectrumError::BadGrid(format!("baseline {}", spec.baseline)));
    }
    Ok(())
}

/// Noise-free model value at one wavelength.
pub fn clean_intensity(spec: &SynthesisSpec, x: f64) -> f64 {
    let mut y = spec.baseline;
    for l in &spec.lines {
        y += peak_value(x, l.amplitude, l.center_nm, l.sigma_nm, spec.instrument_width_nm);
    }
    y
}

/// Builds the wavelength grid, evaluates the three-line model, and adds
/// seeded Gaussian noise scaled to the clean maximum. The same spec (seed
/// included) always produces the identical spectrum.
pub fn synthesize(spec: &SynthesisSpec) -> Result<Spectrum, SpectrumError> {
    validate_spec(spec)?;
    let n = ((spec.grid_hi_nm - spec.grid_lo_nm) / spec.step_nm).floor() as usize + 1;
    let wavelength_nm: Vec<f64> = (0..n)
        .map(|i| spec.grid_lo_nm + i as f64 * spec.step_nm)
        .collect();
    let clean: Vec<f64> = wavelength_nm
        .iter()
        .map(|&x| clean_intensity(spec, x))
        .collect();
    let peak = clean.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let noise_sigma = spec.noise_fraction * peak;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(spec.seed);
    let intensity: Vec<f64> = clean
        .iter()
        .map(|&y| y + noise_sigma * standard_normal(&mut rng))
        .collect();
    // the synthesis knows its own noise level, so it ships honest error bars
    let sigma = (noise_sigma > 0.0).then(|| vec![noise_sigma; n]);
    Spectrum::new(wavelength_nm, intensity, sigma, Vec::new())
}

/// Two or three columns (wavelength, intensity, optional uncertainty) with
/// `# key = value` headers. Values print in Rust's shortest round-trip
/// form, so a write/read cycle reproduces the numbers bit for bit.
pub fn write_spectrum(path: &Path, s: &Spectrum) -> Result<(), SpectrumError> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    for (k, v) in &s.metadata {
        writeln!(out, "# {k} = {v}")?;
    }
    for i in 0..s.len() {
        match &s.sigma_intensity {
            Some(sig) => writeln!(out, "{} {} {}", s.wavelength_nm[i], s.intensity[i], sig[i])?,
            None => writeln!(out, "{} {}", s.wavelength_nm[i], s.intensity[i])?,
        }
    }
    out.flush()?;
    Ok(())
}

pub fn read_spectrum(path: &Path) -> Result<Spectrum, SpectrumError> {
    let file = std::fs::File::open(path)?;
    let mut wavelength = Vec::new();
    let mut intensity = Vec::new();
    let mut sigma: Vec<f64> = Vec::new();
    let mut metadata = Vec::new();
    for (idx, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix('#') {
            if let Some((k, v)) = rest.split_once('=') {
                metadata.push((k.trim().to_string(), v.trim().to_string()));
            }
            continue;
        }
        let bad = || SpectrumError::Parse {
            line: idx + 1,
            content: trimmed.to_string(),
        };
        let cols: Vec<f64> = trimmed
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| bad())?;
        // column count must be uniform: 2 everywhere, or 3 everywhere
        let expected = if wavelength.is_empty() {
            cols.len()
        } else if sigma.is_empty() {
            2
        } else {
            3
        };
        if cols.len() != expected || !(2..=3).contains(&cols.len()) {
            return Err(bad());
        }
        wavelength.push(cols[0]);
        intensity.push(cols[1]);
        if cols.len() == 3 {
            sigma.push(cols[2]);
        }
    }
    let sigma = (!sigma.is_empty()).then_some(sigma);
    Spectrum::new(wavelength, intensity, sigma, metadata)
}
