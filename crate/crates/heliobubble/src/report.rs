//! Deterministic result serialization: CSV with nine significant digits and
//! an embedded configuration header, JSON reports carrying the same
//! configuration, and matplotlib scripts that render the data files.  Given
//! the same configuration and inputs every function here returns the same
//! bytes, so outputs can be golden-file tested.

use crate::config::RunConfig;
use crate::equilibrium::{EmissionPoint, EquilibriumResult};
use crate::gaussfit::{FitOptions, SpectrumFit};
use crate::lines::{LineSeries, LinearFit, SlopeCombination};
use serde_json::{json, Value};

/// Nine significant digits, shortest form: plain decimal inside
/// 0.0001..=999999999, exponent notation outside, trailing zeros dropped.
/// Locale-independent ('.' separator, ASCII digits).
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if x.is_nan() {
        return "nan".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    // {:.8e} rounds the mantissa to 9 significant digits and normalizes the
    // exponent, so the digit string can be re-punctuated without rounding
    // a second time.
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("{:.8e} always has an exponent");
    let exp: i32 = exp.parse().expect("{:.8e} exponent is an integer");
    let neg = mantissa.starts_with('-');
    let digits: String = mantissa.chars().filter(|c| c.is_ascii_digit()).collect();
    debug_assert_eq!(digits.len(), 9);

    let body = if (-4..9).contains(&exp) {
        if exp >= 0 {
            let (int_part, frac) = digits.split_at(exp as usize + 1);
            format!("{int_part}.{frac}")
        } else {
            format!("0.{}{}", "0".repeat((-exp - 1) as usize), digits)
        }
    } else {
        format!("{}.{}e{exp}", &digits[..1], &digits[1..])
    };
    let trimmed = match body.split_once('e') {
        Some((m, e)) => format!(
            "{}e{e}",
            m.trim_end_matches('0').trim_end_matches('.')
        ),
        None => body.trim_end_matches('0').trim_end_matches('.').to_string(),
    };
    if neg {
        format!("-{trimmed}")
    } else {
        trimmed
    }
}

/// CSV text: the embedded configuration, a `# columns:` line naming the
/// fields, then one comma-separated line per row.  Every non-data line is
/// '#'-commented so the body loads directly into numeric tools.
pub fn csv_text(config: &RunConfig, columns: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = String::new();
    for line in config.header_lines() {
        out.push_str(&line);
        out.push('\n');
    }
    out.push_str("# columns: ");
    out.push_str(&columns.join(","));
    out.push('\n');
    for row in rows {
        assert_eq!(row.len(), columns.len(), "row width must match the column list");
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// The resolved configuration as a JSON object of string values, embedded
/// into every JSON report for the same reproducibility as the CSV headers.
pub fn config_json(config: &RunConfig) -> Value {
    Value::Object(
        config
            .entries()
            .into_iter()
            .map(|(k, v)| (k.to_string(), Value::String(v)))
            .collect(),
    )
}

/// Pretty-printed JSON with sorted keys and a trailing newline.  Non-finite
/// numbers appear as null (JSON has no NaN).
pub fn json_text(value: &Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("built from plain values");
    s.push('\n');
    s
}

pub fn equilibrium_json(r: &EquilibriumResult, angstrom_per_bohr: f64) -> Value {
    json!({
        "state": r.state.to_string(),
        "pressure_bar": r.pressure_bar,
        "r0_angstrom": r.r0_angstrom,
        "alpha_per_bohr": r.alpha,
        "bubble_radius_angstrom": r.bubble_radius_angstrom,
        "interface_width_angstrom": r.breakdown.profile.interface_width() * angstrom_per_bohr,
        "energy_hartree": {
            "volume": r.breakdown.e_vol,
            "surface": r.breakdown.e_surf,
            "volume_kinetic": r.breakdown.e_vk,
            "interaction": r.breakdown.e_int,
            "total": r.breakdown.e_defect,
        },
        "quadrature_error_hartree": r.breakdown.quad_error,
        "at_boundary": r.at_boundary,
        "evaluations": r.evaluations,
    })
}

pub fn emission_json(point: &EmissionPoint, free_nm: [f64; 3], angstrom_per_bohr: f64) -> Value {
    json!({
        "pressure_bar": point.pressure_bar,
        "lambda_nm": {
            "P0": point.lambda_nm[0],
            "P1": point.lambda_nm[1],
            "P2": point.lambda_nm[2],
        },
        "shift_from_free_nm": {
            "P0": point.lambda_nm[0] - free_nm[0],
            "P1": point.lambda_nm[1] - free_nm[1],
            "P2": point.lambda_nm[2] - free_nm[2],
        },
        "energy_shift_hartree": point.energy_shift_hartree,
        "equilibrium_S": equilibrium_json(&point.eq_s, angstrom_per_bohr),
        "equilibrium_P": equilibrium_json(&point.eq_p, angstrom_per_bohr),
    })
}

pub fn linear_fit_json(f: &LinearFit) -> Value {
    json!({
        "lambda0_nm": f.lambda0_nm,
        "slope_nm_per_bar": f.slope_nm_per_bar,
        "sigma_lambda0_nm": f.sigma_lambda0,
        "sigma_slope_nm_per_bar": f.sigma_slope,
        "scaled_sigma_slope_nm_per_bar": f.scaled_sigma_slope(),
        "chi2": f.chi2,
        "dof": f.dof,
        "r_squared": f.r_squared,
        "unit_weights": f.unit_weights,
    })
}

pub fn line_series_json(s: &LineSeries) -> Value {
    json!({
        "line": format!("P{}", s.line.index()),
        "samples": s.samples.iter().map(|p| json!({
            "pressure_bar": p.pressure_bar,
            "lambda_nm": p.lambda_nm,
            "sigma_nm": p.sigma_nm,
        })).collect::<Vec<_>>(),
        "fit": s.fit.as_ref().map(linear_fit_json),
    })
}

pub fn slope_combination_json(c: &SlopeCombination) -> Value {
    json!({
        "weighted_mean_slope_nm_per_bar": c.mean,
        "sigma_nm_per_bar": c.sigma,
        "significance": c.significance,
        "consistent": c.consistent,
        "pairwise_t": c.pairwise.iter().map(|p| json!({
            "first": format!("P{}", p.first),
            "second": format!("P{}", p.second),
            "t": p.t,
            "dof": p.dof,
            "critical": p.critical,
        })).collect::<Vec<_>>(),
    })
}

pub fn spectrum_fit_json(fit: &SpectrumFit, options: &FitOptions) -> Value {
    json!({
        "lines": fit.lines.iter().enumerate().map(|(i, l)| json!({
            "line": format!("P{i}"),
            "amplitude": l.amplitude,
            "amplitude_sigma": l.amplitude_sigma,
            "center_nm": l.center_nm,
            "center_sigma_nm": l.center_sigma_nm,
            "width_nm": l.width_nm,
            "width_sigma_nm": l.width_sigma_nm,
        })).collect::<Vec<_>>(),
        "baseline": fit.baseline,
        "baseline_sigma": fit.baseline_sigma,
        "tilt_per_nm": fit.tilt_per_nm,
        "tilt_sigma_per_nm": fit.tilt_sigma_per_nm,
        "chi2": fit.chi2,
        "dof": fit.dof,
        "reduced_chi2": if fit.dof > 0 { Value::from(fit.chi2 / fit.dof as f64) } else { Value::Null },
        "iterations": fit.iterations,
        "converged": fit.converged,
        "gradient_norm": fit.gradient_norm,
        "unit_weights": fit.unit_weights,
        "covariance": fit.covariance,
        "options": {
            "linear_baseline": options.linear_baseline,
            "instrument_width_nm": options.instrument_width_nm,
            "max_iterations": options.max_iterations,
            "gtol": options.gtol,
        },
    })
}

fn png_name(data_file: &str) -> String {
    match data_file.rsplit_once('.') {
        Some((stem, _)) => format!("{stem}.png"),
        None => format!("{data_file}.png"),
    }
}

fn script_text(config: &RunConfig, body: &str) -> String {
    let mut out = String::new();
    for line in config.header_lines() {
        out.push_str(&line);
        out.push('\n');
    }
    out.push_str(body);
    out
}

/// Script plotting a density-profile CSV (columns r_angstrom, rho_over_rho0).
pub fn density_plot_script(config: &RunConfig, data_file: &str) -> String {
    let body = r##"
import numpy as np
import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

data = np.loadtxt("@DATA@", delimiter=",", comments="#")
r, rho = data[:, 0], data[:, 1]
fig, ax = plt.subplots(figsize=(6.0, 4.0))
ax.plot(r, rho, "-", lw=1.5)
ax.set_xlabel("r [angstrom]")
ax.set_ylabel("helium density / bulk density")
ax.set_ylim(-0.05, 1.1)
ax.grid(alpha=0.3)
fig.tight_layout()
fig.savefig("@OUT@", dpi=150)
print("wrote @OUT@")
"##;
    script_text(
        config,
        &body
            .replace("@DATA@", data_file)
            .replace("@OUT@", &png_name(data_file)),
    )
}

/// Script plotting a pressure-scan CSV (columns p_bar, lambda_P0_nm,
/// lambda_P1_nm, lambda_P2_nm, r0_S_A, r0_P_A): predicted wavelengths with
/// their linear fits, dashed free-atom references, and the radii.
pub fn scan_plot_script(config: &RunConfig, data_file: &str, free_nm: [f64; 3]) -> String {
    let free = format!(
        "[{}, {}, {}]",
        fmt_sig(free_nm[0]),
        fmt_sig(free_nm[1]),
        fmt_sig(free_nm[2])
    );
    let body = r##"
import numpy as np
import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

data = np.loadtxt("@DATA@", delimiter=",", comments="#")
p = data[:, 0]
free = @FREE@
fig, (ax, ar) = plt.subplots(
    2, 1, figsize=(6.0, 7.0), sharex=True, height_ratios=[2, 1]
)
for i, label in enumerate(["3P0", "3P1", "3P2"]):
    lam = data[:, 1 + i]
    slope, intercept = np.polyfit(p, lam, 1)
    pts, = ax.plot(p, lam, "o", ms=4, label=f"{label}: {slope:+.4f} nm/bar")
    ax.plot(p, slope * p + intercept, "-", lw=1, color=pts.get_color())
    ax.axhline(free[i], ls=":", lw=1, color=pts.get_color())
ax.set_ylabel("wavelength [nm]")
ax.legend(fontsize=8)
ax.grid(alpha=0.3)
ar.plot(p, data[:, 4], "s-", ms=3, lw=1, label="S state")
ar.plot(p, data[:, 5], "d-", ms=3, lw=1, label="P state")
ar.set_xlabel("pressure [bar]")
ar.set_ylabel("bubble radius r0 [angstrom]")
ar.legend(fontsize=8)
ar.grid(alpha=0.3)
fig.tight_layout()
fig.savefig("@OUT@", dpi=150)
print("wrote @OUT@")
"##;
    script_text(
        config,
        &body
            .replace("@DATA@", data_file)
            .replace("@FREE@", &free)
            .replace("@OUT@", &png_name(data_file)),
    )
}

/// Script plotting a fitted spectrum from a residuals CSV (columns
/// wavelength_nm, intensity[, sigma_intensity], model, residual).
pub fn spectrum_plot_script(config: &RunConfig, data_file: &str) -> String {
    let body = r##"
import numpy as np
import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

data = np.loadtxt("@DATA@", delimiter=",", comments="#")
x, y = data[:, 0], data[:, 1]
has_sigma = data.shape[1] == 5
model = data[:, 3] if has_sigma else data[:, 2]
resid = data[:, 4] if has_sigma else data[:, 3]
fig, (ax, ar) = plt.subplots(
    2, 1, figsize=(6.0, 6.0), sharex=True, height_ratios=[3, 1]
)
if has_sigma:
    ax.errorbar(x, y, yerr=data[:, 2], fmt=".", ms=3, lw=0.5, label="data")
else:
    ax.plot(x, y, ".", ms=3, label="data")
ax.plot(x, model, "-", lw=1.2, label="fit")
ax.set_ylabel("intensity [arb. u.]")
ax.legend(fontsize=8)
ax.grid(alpha=0.3)
ar.axhline(0.0, color="k", lw=0.8)
ar.plot(x, resid, ".", ms=3)
ar.set_xlabel("wavelength [nm]")
ar.set_ylabel("residual")
ar.grid(alpha=0.3)
fig.tight_layout()
fig.savefig("@OUT@", dpi=150)
print("wrote @OUT@")
"##;
    script_text(
        config,
        &body
            .replace("@DATA@", data_file)
            .replace("@OUT@", &png_name(data_file)),
    )
}

/// Script plotting extracted line centers vs. pressure from a series CSV
/// (columns p_bar, then lambda/sigma pairs for P0, P1, P2).
pub fn slopes_plot_script(config: &RunConfig, data_file: &str) -> String {
    let body = r##"
import numpy as np
import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

data = np.loadtxt("@DATA@", delimiter=",", comments="#")
p = data[:, 0]
fig, ax = plt.subplots(figsize=(6.0, 4.5))
for i, label in enumerate(["3P0", "3P1", "3P2"]):
    lam = data[:, 1 + 2 * i]
    sig = data[:, 2 + 2 * i]
    slope, intercept = np.polyfit(p, lam, 1)
    pts = ax.errorbar(
        p, lam, yerr=np.where(np.isfinite(sig), sig, 0.0),
        fmt="o", ms=4, lw=1, label=f"{label}: {slope:+.4f} nm/bar",
    )
    ax.plot(p, slope * p + intercept, "-", lw=1, color=pts[0].get_color())
ax.set_xlabel("pressure [bar]")
ax.set_ylabel("fitted line center [nm]")
ax.legend(fontsize=8)
ax.grid(alpha=0.3)
fig.tight_layout()
fig.savefig("@OUT@", dpi=150)
print("wrote @OUT@")
"##;
    script_text(
        config,
        &body
            .replace("@DATA@", data_file)
            .replace("@OUT@", &png_name(data_file)),
    )
}
