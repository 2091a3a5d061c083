//! Command-line front end: loads a run configuration, dispatches one
//! subcommand, and writes CSV/JSON/plot-script outputs that all embed the
//! resolved configuration.  Same configuration and flags, same bytes.

use clap::{Args, Parser, Subcommand};
use heliobubble::config::{ConfigError, RunConfig};
use heliobubble::equilibrium::MAX_PRESSURE_BAR;
use heliobubble::gaussfit::FitOptions;
use heliobubble::lines::SlopeEstimate;
use heliobubble::report;
use heliobubble::spectrum::{read_spectrum, standard_normal, write_spectrum, SynthesisSpec};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use heliobubble::{
    combine_slopes, comparison_table, defect_energy, extract_line_series, fit_three_gaussians,
    synthesize, ElectronicState, Spectrum,
};
use serde_json::json;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "heliobubble",
    version,
    about = "Bubble-model emission lines of Mg in superfluid helium, plus the spectrum-analysis pipeline"
)]
struct Cli {
    /// Configuration file; $HELIOBUBBLE_CONFIG is the fallback, defaults
    /// apply when neither is set.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides the configured out_dir).
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Random seed (overrides the configured seed).
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct FitFlags {
    /// Fit a tilted baseline instead of a constant one.
    #[arg(long)]
    linear_baseline: bool,
    /// Rectangular slit width folded into every line, nm.
    #[arg(long)]
    instrument_width_nm: Option<f64>,
}

impl FitFlags {
    fn options(&self) -> FitOptions {
        FitOptions {
            linear_baseline: self.linear_baseline,
            instrument_width_nm: self.instrument_width_nm,
            ..FitOptions::default()
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate the helium density profile around the defect.
    Density {
        /// Profile radius in angstrom; defaults to the equilibrium radius
        /// of the upper state at --pressure.
        #[arg(long)]
        r0_angstrom: Option<f64>,
        /// Pressure in bar (used when --r0-angstrom is not given).
        #[arg(long)]
        pressure: Option<f64>,
        /// Number of radial samples.
        #[arg(long, default_value_t = 400)]
        steps: usize,
    },
    /// Tabulate the defect energy terms against the profile radius.
    Energy {
        /// Pressure in bar.
        #[arg(long)]
        pressure: Option<f64>,
        /// Number of radius samples across the search bracket.
        #[arg(long, default_value_t = 121)]
        steps: usize,
    },
    /// Equilibrium bubble radii and energies of both electronic states.
    Equilibrium {
        /// Pressure in bar.
        #[arg(long)]
        pressure: Option<f64>,
    },
    /// Predicted emission wavelengths of the triplet at one pressure.
    Lines {
        /// Pressure in bar.
        #[arg(long)]
        pressure: Option<f64>,
    },
    /// Sweep the pressure grid: wavelengths, radii, and linear fits.
    Scan {
        /// Lowest pressure in bar (overrides p_min_bar).
        #[arg(long)]
        pmin: Option<f64>,
        /// Highest pressure in bar (overrides p_max_bar).
        #[arg(long)]
        pmax: Option<f64>,
        /// Number of grid points (overrides p_steps).
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Synthesize noisy three-line spectra at the configured pressures.
    Synth {
        /// Pressure in bar; repeat for several spectra (default: the
        /// configured pressure grid).
        #[arg(long = "pressure")]
        pressures: Vec<f64>,
        /// Noise standard deviation as a fraction of the clean maximum.
        #[arg(long, default_value_t = 0.03)]
        noise_fraction: f64,
        /// Per-spectrum wavelength-calibration scatter: one normal offset
        /// of this sigma (nm) shifts all three lines of each spectrum.
        #[arg(long, default_value_t = 0.0)]
        calibration_sigma_nm: f64,
    },
    /// Fit three Gaussian lines to a measured spectrum file.
    FitSpectrum {
        /// Spectrum file: `# key = value` headers, then columns
        /// wavelength [nm], intensity [, intensity sigma].
        file: PathBuf,
        #[command(flatten)]
        fit: FitFlags,
    },
    /// Extract line centers from several spectra and combine the slopes.
    Slopes {
        /// Spectrum files, one per pressure (at least three).
        files: Vec<PathBuf>,
        #[command(flatten)]
        fit: FitFlags,
    },
    /// Export the measured-shift comparison table across defect species.
    Table,
}

enum CliError {
    Config(String),
    Computation(String),
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Computation(format!("io: {e}"))
    }
}

fn computation(e: impl std::fmt::Display) -> CliError {
    CliError::Computation(e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = match load_config(&cli) {
        Ok(c) => c,
        Err(CliError::Config(message)) | Err(CliError::Computation(message)) => {
            report_error("config", &message);
            return ExitCode::from(2);
        }
    };
    match run(&cli.command, &config) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Config(message)) => {
            report_error("config", &message);
            ExitCode::from(2)
        }
        Err(CliError::Computation(message)) => {
            report_error("computation", &message);
            ExitCode::from(1)
        }
    }
}

/// One machine-readable JSON error line on stderr.
fn report_error(kind: &str, message: &str) {
    eprintln!(
        "{}",
        json!({ "error": { "kind": kind, "message": message } })
    );
}

fn load_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let path = cli
        .config
        .clone()
        .or_else(|| std::env::var_os("HELIOBUBBLE_CONFIG").map(PathBuf::from));
    let mut config = match path {
        Some(p) => RunConfig::from_file(&p)
            .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?,
        None => RunConfig::default(),
    };
    if let Some(out_dir) = &cli.out_dir {
        config.out_dir = out_dir.clone();
    }
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    // overrides bypass the parser, so check ranges again
    config.validate()?;
    Ok(config)
}

fn check_pressure(p: f64) -> Result<f64, CliError> {
    if p.is_finite() && (0.0..=MAX_PRESSURE_BAR).contains(&p) {
        Ok(p)
    } else {
        Err(CliError::Config(format!(
            "invalid value for pressure: {p} outside [0, {MAX_PRESSURE_BAR}] bar"
        )))
    }
}

fn write_output(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn run(command: &Command, config: &RunConfig) -> Result<(), CliError> {
    std::fs::create_dir_all(&config.out_dir)?;
    let out = |name: &str| config.out_dir.join(name);
    let model = config.to_model()?;

    match command {
        Command::Density { r0_angstrom, pressure, steps } => {
            let p_bar = check_pressure(pressure.unwrap_or(model.svp_bar))?;
            if *steps < 2 {
                return Err(CliError::Config(format!(
                    "invalid value for steps: {steps} must be at least 2"
                )));
            }
            let (r0_a, alpha, source) = match r0_angstrom {
                Some(r0) if !(r0.is_finite() && *r0 > 0.0) => {
                    return Err(CliError::Config(format!(
                        "invalid value for r0-angstrom: {r0} must be positive"
                    )))
                }
                Some(r0) => (*r0, config.alpha(), "flag"),
                None => {
                    let eq = model
                        .find_equilibrium(ElectronicState::S, p_bar)
                        .map_err(computation)?;
                    (eq.r0_angstrom, eq.alpha, "equilibrium")
                }
            };
            let profile = model
                .profile(model.constants.angstrom_to_bohr(r0_a), alpha)
                .map_err(computation)?;

            let r_max_a = r0_a + 8.0;
            let rows: Vec<Vec<String>> = (0..*steps)
                .map(|i| {
                    let r_a = r_max_a * i as f64 / (*steps - 1) as f64;
                    let rho = profile
                        .density_at(model.constants.angstrom_to_bohr(r_a))
                        .map(|d| d / profile.rho0())
                        .unwrap_or(f64::NAN);
                    vec![report::fmt_sig(r_a), report::fmt_sig(rho)]
                })
                .collect();
            write_output(
                &out("density.csv"),
                &report::csv_text(config, &["r_angstrom", "rho_over_rho0"], &rows),
            )?;
            let apb = model.constants.angstrom_per_bohr();
            write_output(
                &out("density.json"),
                &report::json_text(&json!({
                    "config": report::config_json(config),
                    "source": source,
                    "pressure_bar": p_bar,
                    "r0_angstrom": r0_a,
                    "alpha_per_bohr": alpha,
                    "interface_width_angstrom": profile.interface_width() * apb,
                    "bubble_radius_angstrom": profile.equivalent_bubble_radius() * apb,
                })),
            )?;
            write_output(
                &out("density_plot.py"),
                &report::density_plot_script(config, "density.csv"),
            )
        }

        Command::Energy { pressure, steps } => {
            let p_bar = check_pressure(pressure.unwrap_or(model.svp_bar))?;
            if *steps < 2 {
                return Err(CliError::Config(format!(
                    "invalid value for steps: {steps} must be at least 2"
                )));
            }
            let ctx = model.context(p_bar);
            let alpha = config.alpha();
            let (lo_a, hi_a) = model.bracket_angstrom;
            let mut rows = Vec::with_capacity(*steps);
            for i in 0..*steps {
                let r0_a = lo_a + (hi_a - lo_a) * i as f64 / (*steps - 1) as f64;
                let r0 = model.constants.angstrom_to_bohr(r0_a);
                let energies = model.profile(r0, alpha).ok().map(|profile| {
                    let term = |state| {
                        defect_energy(state, &model.potentials, &profile, &ctx).ok()
                    };
                    (term(ElectronicState::S), term(ElectronicState::P))
                });
                let (s, p) = energies.unwrap_or((None, None));
                let cell = |v: Option<f64>| report::fmt_sig(v.unwrap_or(f64::NAN));
                rows.push(vec![
                    report::fmt_sig(r0_a),
                    cell(s.as_ref().map(|b| b.e_vol)),
                    cell(s.as_ref().map(|b| b.e_surf)),
                    cell(s.as_ref().map(|b| b.e_vk)),
                    cell(s.as_ref().map(|b| b.e_int)),
                    cell(p.as_ref().map(|b| b.e_int)),
                    cell(s.as_ref().map(|b| b.e_defect)),
                    cell(p.as_ref().map(|b| b.e_defect)),
                ]);
            }
            write_output(
                &out("energy.csv"),
                &report::csv_text(
                    config,
                    &[
                        "r0_angstrom",
                        "e_vol_hartree",
                        "e_surf_hartree",
                        "e_vk_hartree",
                        "e_int_S_hartree",
                        "e_int_P_hartree",
                        "e_total_S_hartree",
                        "e_total_P_hartree",
                    ],
                    &rows,
                ),
            )
        }

        Command::Equilibrium { pressure } => {
            let p_bar = check_pressure(pressure.unwrap_or(model.svp_bar))?;
            let apb = model.constants.angstrom_per_bohr();
            let eq_s = model
                .find_equilibrium(ElectronicState::S, p_bar)
                .map_err(computation)?;
            let eq_p = model
                .find_equilibrium(ElectronicState::P, p_bar)
                .map_err(computation)?;
            write_output(
                &out("equilibrium.json"),
                &report::json_text(&json!({
                    "config": report::config_json(config),
                    "pressure_bar": p_bar,
                    "S": report::equilibrium_json(&eq_s, apb),
                    "P": report::equilibrium_json(&eq_p, apb),
                })),
            )
        }

        Command::Lines { pressure } => {
            let p_bar = check_pressure(pressure.unwrap_or(model.svp_bar))?;
            let point = model.emission(p_bar).map_err(computation)?;
            write_output(
                &out("lines.json"),
                &report::json_text(&json!({
                    "config": report::config_json(config),
                    "emission": report::emission_json(
                        &point,
                        model.transitions.free_nm,
                        model.constants.angstrom_per_bohr(),
                    ),
                })),
            )
        }

        Command::Scan { pmin, pmax, steps } => {
            let mut config = config.clone();
            if let Some(p) = pmin {
                config.p_min_bar = *p;
            }
            if let Some(p) = pmax {
                config.p_max_bar = *p;
            }
            if let Some(n) = steps {
                config.p_steps = *n;
            }
            config.validate()?;
            let scan = model
                .pressure_scan(&config.pressure_grid())
                .map_err(computation)?;

            let rows: Vec<Vec<String>> = scan
                .points
                .iter()
                .map(|pt| {
                    vec![
                        report::fmt_sig(pt.pressure_bar),
                        report::fmt_sig(pt.lambda_nm[0]),
                        report::fmt_sig(pt.lambda_nm[1]),
                        report::fmt_sig(pt.lambda_nm[2]),
                        report::fmt_sig(pt.eq_s.r0_angstrom),
                        report::fmt_sig(pt.eq_p.r0_angstrom),
                    ]
                })
                .collect();
            write_output(
                &out("scan.csv"),
                &report::csv_text(
                    &config,
                    &[
                        "p_bar",
                        "lambda_P0_nm",
                        "lambda_P1_nm",
                        "lambda_P2_nm",
                        "r0_S_A",
                        "r0_P_A",
                    ],
                    &rows,
                ),
            )?;
            write_output(
                &out("scan_fit.json"),
                &report::json_text(&json!({
                    "config": report::config_json(&config),
                    "points": scan.points.len(),
                    "lines": scan.series.iter().map(report::line_series_json).collect::<Vec<_>>(),
                    "failures": scan.failures.iter().map(|f| json!({
                        "pressure_bar": f.pressure_bar,
                        "message": f.message,
                    })).collect::<Vec<_>>(),
                })),
            )?;
            write_output(
                &out("scan_plot.py"),
                &report::scan_plot_script(&config, "scan.csv", model.transitions.free_nm),
            )
        }

        Command::Synth { pressures, noise_fraction, calibration_sigma_nm } => {
            let pressures = if pressures.is_empty() {
                config.pressure_grid()
            } else {
                pressures.clone()
            };
            if !(noise_fraction.is_finite() && *noise_fraction >= 0.0) {
                return Err(CliError::Config(format!(
                    "invalid value for noise-fraction: {noise_fraction} must be non-negative"
                )));
            }
            if !(calibration_sigma_nm.is_finite() && *calibration_sigma_nm >= 0.0) {
                return Err(CliError::Config(format!(
                    "invalid value for calibration-sigma-nm: {calibration_sigma_nm} must be non-negative"
                )));
            }
            // measured line positions and pressure slopes of this triplet,
            // from the cross-species comparison table
            let mg: Vec<_> = comparison_table()
                .iter()
                .filter(|row| row.species == "Mg")
                .collect();
            assert_eq!(mg.len(), 3, "comparison table carries three Mg rows");

            for (index, &p_bar) in pressures.iter().enumerate() {
                let p_bar = check_pressure(p_bar)?;
                let mut spec = SynthesisSpec {
                    noise_fraction: *noise_fraction,
                    seed: config.seed.wrapping_add(index as u64),
                    ..SynthesisSpec::default()
                };
                // the calibration offset stream is decoupled from the noise
                // stream so changing one sigma never reshuffles the other
                let mut jitter_rng =
                    ChaCha8Rng::seed_from_u64(spec.seed ^ 0x6a09_e667_f3bc_c908);
                let offset_nm = *calibration_sigma_nm * standard_normal(&mut jitter_rng);
                for (line, row) in spec.lines.iter_mut().zip(&mg) {
                    line.center_nm = row.lambda_svp_nm + row.slope_nm_per_bar * p_bar + offset_nm;
                }
                let mut spectrum = synthesize(&spec).map_err(computation)?;
                let mut metadata: Vec<(String, String)> = config
                    .entries()
                    .into_iter()
                    .map(|(k, v)| (format!("config: {k}"), v))
                    .collect();
                metadata.push(("pressure_bar".into(), report::fmt_sig(p_bar)));
                metadata.push(("seed".into(), spec.seed.to_string()));
                metadata.push(("noise_fraction".into(), report::fmt_sig(*noise_fraction)));
                metadata.push((
                    "calibration_sigma_nm".into(),
                    report::fmt_sig(*calibration_sigma_nm),
                ));
                metadata.push(("calibration_offset_nm".into(), report::fmt_sig(offset_nm)));
                for (i, line) in spec.lines.iter().enumerate() {
                    metadata.push((
                        format!("synthesized_P{i}"),
                        format!(
                            "amplitude {} center_nm {} sigma_nm {}",
                            report::fmt_sig(line.amplitude),
                            report::fmt_sig(line.center_nm),
                            report::fmt_sig(line.sigma_nm)
                        ),
                    ));
                }
                spectrum.metadata = metadata;
                let path = out(&format!("spectrum_{index:02}.dat"));
                write_spectrum(&path, &spectrum).map_err(computation)?;
                println!("wrote {}", path.display());
            }
            Ok(())
        }

        Command::FitSpectrum { file, fit } => {
            let options = fit.options();
            let spectrum = read_spectrum(file).map_err(computation)?;
            let result = fit_three_gaussians(&spectrum, None, &options).map_err(computation)?;
            let stem = file
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "spectrum".to_string());

            write_output(
                &out(&format!("{stem}_fit.json")),
                &report::json_text(&json!({
                    "config": report::config_json(config),
                    "input": file.display().to_string(),
                    "fit": report::spectrum_fit_json(&result, &options),
                })),
            )?;

            let modeled = result.model(&spectrum.wavelength_nm, options.instrument_width_nm);
            let mut columns = vec!["wavelength_nm", "intensity"];
            if spectrum.sigma_intensity.is_some() {
                columns.push("sigma_intensity");
            }
            columns.push("model");
            columns.push("residual");
            let rows: Vec<Vec<String>> = (0..spectrum.len())
                .map(|i| {
                    let mut row = vec![
                        report::fmt_sig(spectrum.wavelength_nm[i]),
                        report::fmt_sig(spectrum.intensity[i]),
                    ];
                    if let Some(sigma) = &spectrum.sigma_intensity {
                        row.push(report::fmt_sig(sigma[i]));
                    }
                    row.push(report::fmt_sig(modeled[i]));
                    row.push(report::fmt_sig(spectrum.intensity[i] - modeled[i]));
                    row
                })
                .collect();
            let residuals_csv = format!("{stem}_residuals.csv");
            write_output(
                &out(&residuals_csv),
                &report::csv_text(config, &columns, &rows),
            )?;
            write_output(
                &out(&format!("{stem}_plot.py")),
                &report::spectrum_plot_script(config, &residuals_csv),
            )
        }

        Command::Slopes { files, fit } => {
            if files.len() < 3 {
                return Err(CliError::Config(format!(
                    "slopes needs at least three spectrum files, got {}",
                    files.len()
                )));
            }
            let options = fit.options();
            let spectra: Vec<Spectrum> = files
                .iter()
                .map(|f| read_spectrum(f).map_err(computation))
                .collect::<Result<_, _>>()?;
            let series = extract_line_series(&spectra, &options).map_err(computation)?;

            let estimates: [SlopeEstimate; 3] = std::array::from_fn(|i| {
                let fitted = series[i]
                    .fit
                    .as_ref()
                    .expect("three or more spectra give every series a fit");
                SlopeEstimate {
                    slope: fitted.slope_nm_per_bar,
                    sigma: fitted.scaled_sigma_slope(),
                    dof: fitted.dof as f64,
                }
            });
            let combination = combine_slopes(&estimates).map_err(computation)?;

            write_output(
                &out("slopes.json"),
                &report::json_text(&json!({
                    "config": report::config_json(config),
                    "spectra": files.iter().map(|f| f.display().to_string()).collect::<Vec<_>>(),
                    "lines": series.iter().map(report::line_series_json).collect::<Vec<_>>(),
                    "combination": report::slope_combination_json(&combination),
                })),
            )?;

            // all three series share the pressure axis by construction
            let rows: Vec<Vec<String>> = (0..series[0].samples.len())
                .map(|i| {
                    let mut row = vec![report::fmt_sig(series[0].samples[i].pressure_bar)];
                    for s in &series {
                        row.push(report::fmt_sig(s.samples[i].lambda_nm));
                        row.push(report::fmt_sig(s.samples[i].sigma_nm.unwrap_or(f64::NAN)));
                    }
                    row
                })
                .collect();
            write_output(
                &out("line_series.csv"),
                &report::csv_text(
                    config,
                    &[
                        "p_bar",
                        "lambda_P0_nm",
                        "sigma_P0_nm",
                        "lambda_P1_nm",
                        "sigma_P1_nm",
                        "lambda_P2_nm",
                        "sigma_P2_nm",
                    ],
                    &rows,
                ),
            )?;
            write_output(
                &out("slopes_plot.py"),
                &report::slopes_plot_script(config, "line_series.csv"),
            )
        }

        Command::Table => {
            let rows: Vec<Vec<String>> = comparison_table()
                .iter()
                .map(|row| {
                    vec![
                        row.species.to_string(),
                        row.transition.to_string(),
                        row.lambda_free_nm.map(report::fmt_sig).unwrap_or_default(),
                        report::fmt_sig(row.lambda_svp_nm),
                        report::fmt_sig(row.slope_nm_per_bar),
                        report::fmt_sig(row.relative_shift_percent_per_bar),
                        report::fmt_sig(row.recomputed_relative_shift()),
                    ]
                })
                .collect();
            write_output(
                &out("table.csv"),
                &report::csv_text(
                    config,
                    &[
                        "species",
                        "transition",
                        "lambda_free_nm",
                        "lambda_svp_nm",
                        "slope_nm_per_bar",
                        "shift_percent_per_bar",
                        "recomputed_percent_per_bar",
                    ],
                    &rows,
                ),
            )
        }
    }
}
