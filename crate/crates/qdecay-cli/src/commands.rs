//! One function per subcommand.
//!
//! Conventions: data goes to files under `--out`, progress notes to stderr,
//! result summaries to stdout. Every handler first builds the *effective*
//! configuration (base config plus its own flag overrides) and hashes that,
//! so artifact headers always describe exactly what produced them.

use std::path::PathBuf;

use clap::ValueEnum;
use serde::Serialize;

use qdecay::config::{FitModeSpec, NPoles, RunConfig, TimeGridSpec};
use qdecay::dynamics::{sum_rules, survival_curve, SumRuleReport};
use qdecay::initial::InitialStateSpec;
use qdecay::oracle::GridSpec;
use qdecay::poles::{find_resonances, scan_imaginary_axis, PoleClass, SolverOptions};
use qdecay::shorttime::{
    classify_cubic_sum, default_ladder, fit_experimental, fit_short_time, predict_exponent,
    synthetic_experiment, CubicSumDiagnostic, CubicVerdict, FitMode, FitResult,
};
use qdecay::{Error, Result};

use crate::app::{fmt_f64, read_curve, write_csv, write_json, App};
use crate::{Cli, Command};

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum StateKind {
    /// Cutoff Gaussian wave packet
    Gaussian,
    /// Sinusoidal mode on the inner well
    Sine,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum FitModeArg {
    /// Exact interpolation through the window endpoints
    #[value(name = "two-point")]
    TwoPoint,
    /// Least squares with the exponent restricted to {3/2, 2}
    #[value(name = "lsq")]
    Lsq,
    /// Log-log regression with a free exponent
    #[value(name = "free")]
    Free,
}

pub fn run(cli: Cli) -> Result<()> {
    let app = App::new(&cli)?;
    match cli.command {
        Command::Poles { n_poles, box_re_max, box_im_max } => {
            cmd_poles(&app, n_poles, box_re_max, box_im_max)
        }
        Command::Coeffs { state, x0, sigma, j } => cmd_coeffs(&app, state, x0, sigma, j),
        Command::Survival { t_max, t_points, n_poles } => {
            cmd_survival(&app, t_max, t_points, n_poles)
        }
        Command::Classify => cmd_classify(&app),
        Command::Fit { mode, window, input } => cmd_fit(&app, mode, window, input),
        Command::Oracle { dx, dt, pad_factor, t_max, samples } => {
            cmd_oracle(&app, dx, dt, pad_factor, t_max, samples)
        }
        Command::Compare { a, b } => cmd_compare(&app, &a, &b),
        Command::Figure1 => cmd_figure1(&app),
        Command::Experiment { input } => cmd_experiment(&app, input),
        Command::FaddeyevaSelftest => cmd_selftest(&app),
    }
}

// ---------------------------------------------------------------- poles --

fn cmd_poles(
    app: &App,
    n_poles: Option<usize>,
    box_re_max: Option<f64>,
    box_im_max: Option<f64>,
) -> Result<()> {
    let mut config = app.config.clone();
    if let Some(n) = n_poles {
        config.n_poles = NPoles(n);
    }
    if let Some(x) = box_re_max {
        config.solver.box_re_max = x;
    }
    if let Some(y) = box_im_max {
        config.solver.box_im_max = y;
    }
    config.validate()?;
    let hash = config.config_hash();

    let resolved = config.resolve()?;
    let (poles, _) = app.spectral(&config)?;
    let axis = scan_imaginary_axis(&resolved.potential, &resolved.params, config.solver.box_re_max);

    let columns = ["n", "re_kappa_nm^-1", "im_kappa_nm^-1", "re_E_eV", "im_E_eV", "class"];
    let mut rows = Vec::with_capacity(axis.len() + poles.len());
    for (i, &kappa) in axis.iter().enumerate() {
        let class = if kappa.im > 0.0 { PoleClass::Bound } else { PoleClass::Antibound };
        let energy = resolved.params.energy_of(kappa);
        rows.push(vec![
            (i + 1).to_string(),
            fmt_f64(kappa.re),
            fmt_f64(kappa.im),
            fmt_f64(energy.re),
            fmt_f64(energy.im),
            class.to_string(),
        ]);
    }
    for n in 1..=poles.len() {
        let kappa = poles.resonance(n);
        let energy = poles.energy(n);
        rows.push(vec![
            n.to_string(),
            fmt_f64(kappa.re),
            fmt_f64(kappa.im),
            fmt_f64(energy.re),
            fmt_f64(energy.im),
            PoleClass::Resonance.to_string(),
        ]);
    }

    let path = app.artifact("poles.csv");
    write_csv(&path, &hash, &[], &columns, &rows)?;
    println!(
        "{}: {} resonances, {} imaginary-axis poles; tau_1 = {:.6} fs",
        path.display(),
        poles.len(),
        axis.len(),
        poles.tau1_fs()
    );
    Ok(())
}

// --------------------------------------------------------------- coeffs --

fn cmd_coeffs(
    app: &App,
    state: Option<StateKind>,
    x0: Option<f64>,
    sigma: Option<f64>,
    j: Option<u32>,
) -> Result<()> {
    let mut config = app.config.clone();
    match state {
        Some(StateKind::Gaussian) => {
            let (base_x0, base_sigma) = match config.initial_state {
                InitialStateSpec::Gaussian { x0_nm, sigma_nm } => (x0_nm, sigma_nm),
                _ => match InitialStateSpec::default() {
                    InitialStateSpec::Gaussian { x0_nm, sigma_nm } => (x0_nm, sigma_nm),
                    _ => unreachable!("default initial state is Gaussian"),
                },
            };
            config.initial_state = InitialStateSpec::Gaussian {
                x0_nm: x0.unwrap_or(base_x0),
                sigma_nm: sigma.unwrap_or(base_sigma),
            };
        }
        Some(StateKind::Sine) => {
            config.initial_state = InitialStateSpec::Sinusoidal {
                j: j.unwrap_or(1),
                support_nm: None,
            };
        }
        None => {}
    }
    config.validate()?;
    let hash = config.config_hash();

    let (_, set) = app.spectral(&config)?;
    let columns = ["n", "re_C", "im_C", "re_Cbar", "im_Cbar", "re_product", "im_product"];
    let mut rows = Vec::with_capacity(set.len());
    for n in 1..=set.len() {
        let c = set.c(n);
        let cbar = set.cbar(n);
        let product = set.product(n);
        rows.push(vec![
            n.to_string(),
            fmt_f64(c.re),
            fmt_f64(c.im),
            fmt_f64(cbar.re),
            fmt_f64(cbar.im),
            fmt_f64(product.re),
            fmt_f64(product.im),
        ]);
    }

    let path = app.artifact("coeffs.csv");
    write_csv(&path, &hash, &[], &columns, &rows)?;
    let report = sum_rules(&set, set.len())?;
    println!(
        "{}: {} coefficients; norm sum-rule residual {:.3e}",
        path.display(),
        set.len(),
        report.eq_norm_residual
    );
    Ok(())
}

// ------------------------------------------------------------- survival --

fn cmd_survival(
    app: &App,
    t_max: Option<String>,
    t_points: Option<usize>,
    n_poles: Option<usize>,
) -> Result<()> {
    let mut config = app.config.clone();
    if let Some(n) = n_poles {
        config.n_poles = NPoles(n);
    }
    config.validate()?;

    let (poles, set) = app.spectral(&config)?;
    let tau1 = poles.tau1_fs();
    if let Some(text) = t_max {
        let horizon_fs = parse_horizon(&text, tau1)?;
        config.time_grid = TimeGridSpec::Linear {
            t_min_fs: 0.0,
            t_max_fs: horizon_fs,
            points: t_points.unwrap_or(200),
        };
        config.validate()?;
    }
    let hash = config.config_hash();

    let times = config.time_grid.times_fs(tau1);
    let curve = survival_curve(&set, &times, config.n_poles.0)?;

    let columns = ["t_fs", "t_over_tau1", "re_A", "im_A", "S", "ln_S"];
    let rows: Vec<Vec<String>> = curve
        .iter()
        .map(|p| {
            vec![
                fmt_f64(p.t_fs),
                fmt_f64(p.t_fs / tau1),
                fmt_f64(p.amplitude.re),
                fmt_f64(p.amplitude.im),
                fmt_f64(p.survival),
                fmt_f64(p.survival.ln()),
            ]
        })
        .collect();

    let path = app.artifact("survival.csv");
    write_csv(&path, &hash, &[], &columns, &rows)?;
    let last = curve.last().expect("non-empty grid");
    println!(
        "{}: {} samples to t = {:.6} fs ({:.4} tau_1); final S = {:.6e}",
        path.display(),
        curve.len(),
        last.t_fs,
        last.t_fs / tau1,
        last.survival
    );
    Ok(())
}

/// `"250"` or `"250fs"` mean femtoseconds; `"2tau1"` means lifetimes.
fn parse_horizon(text: &str, tau1_fs: f64) -> Result<f64> {
    let lower = text.trim().to_ascii_lowercase();
    let (number, scale) = if let Some(stripped) = lower.strip_suffix("tau1") {
        (stripped, tau1_fs)
    } else if let Some(stripped) = lower.strip_suffix("fs") {
        (stripped, 1.0)
    } else {
        (lower.as_str(), 1.0)
    };
    let value: f64 = number
        .trim()
        .parse()
        .map_err(|_| Error::validation(format!("cannot parse time '{text}' (use e.g. 250, 250fs or 2tau1)")))?;
    if !(value > 0.0) {
        return Err(Error::validation(format!("time '{text}' must be positive")));
    }
    Ok(value * scale)
}

// ------------------------------------------------------------- classify --

#[derive(Serialize)]
struct ClassifySummary {
    config_hash: String,
    diagnostic: CubicSumDiagnostic,
    predicted_theta: Option<f64>,
}

fn cmd_classify(app: &App) -> Result<()> {
    let config = app.config.clone();
    let hash = config.config_hash();
    let (_, set) = app.spectral(&config)?;

    let ladder = default_ladder(config.n_poles.0, config.analysis.ladder_rungs);
    let diag = classify_cubic_sum(&set, &ladder, &config.analysis.thresholds)?;

    println!("cubic-sum ladder (scale |kappa_1|^3 = {:.6e}):", diag.scale);
    println!("{:>8}  {:>14}  {:>14}", "N", "|P_N|/scale", "|D_N|/scale");
    for (i, &n) in diag.ladder.iter().enumerate() {
        println!(
            "{:>8}  {:>14.6e}  {:>14.6e}",
            n,
            diag.partial_sums[i].norm() / diag.scale,
            diag.one_sided_sums[i].norm() / diag.scale
        );
    }
    println!(
        "log-log slopes: symmetric {:+.3}, one-sided {:+.3}",
        diag.alpha_symmetric, diag.alpha_one_sided
    );
    println!("verdict: {}", verdict_label(&diag.verdict));

    let predicted_theta = predict_exponent(&diag).ok();
    match predicted_theta {
        Some(theta) => println!("predicted short-time exponent: {theta}"),
        None => println!("predicted short-time exponent: undetermined"),
    }

    write_json(
        &app.artifact("classify.json"),
        &ClassifySummary { config_hash: hash, diagnostic: diag, predicted_theta },
    )?;
    Ok(())
}

fn verdict_label(verdict: &CubicVerdict) -> String {
    match verdict {
        CubicVerdict::Vanishes => "vanishes".to_string(),
        CubicVerdict::Converges { limit } => {
            format!("converges (limit {:.6e} + {:.6e}i)", limit.re, limit.im)
        }
        CubicVerdict::Diverges { growth_exponent } => {
            format!("diverges (growth exponent {growth_exponent:.3})")
        }
        CubicVerdict::Inconclusive => "inconclusive".to_string(),
    }
}

// ------------------------------------------------------------------ fit --

#[derive(Serialize)]
struct FitSummary {
    config_hash: String,
    /// "computed" or the input path.
    source: String,
    #[serde(flatten)]
    fit: FitResult,
}

fn cmd_fit(
    app: &App,
    mode: Option<FitModeArg>,
    window: Option<String>,
    input: Option<PathBuf>,
) -> Result<()> {
    let config = app.config.clone();
    let hash = config.config_hash();

    let (curve, default_window, source) = match &input {
        Some(path) => {
            let file = read_curve(path, 2, 3)?;
            let curve: Vec<(f64, f64)> = file.rows.iter().map(|r| (r[0], r[1])).collect();
            let t_max = curve.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
            (curve, (0.0, t_max), path.display().to_string())
        }
        None => {
            let (poles, set) = app.spectral(&config)?;
            let tau1 = poles.tau1_fs();
            let times = config.time_grid.times_fs(tau1);
            let curve: Vec<(f64, f64)> = survival_curve(&set, &times, config.n_poles.0)?
                .into_iter()
                .map(|p| (p.t_fs, p.survival))
                .collect();
            let w = (
                config.analysis.window_tau1.0 * tau1,
                config.analysis.window_tau1.1 * tau1,
            );
            (curve, w, "computed".to_string())
        }
    };

    let window = match window {
        Some(text) => parse_window(&text)?,
        None => default_window,
    };
    let fit_mode = resolve_fit_mode(mode, &config.analysis.fit_mode, window, &curve)?;
    let fit = fit_short_time(&curve, fit_mode)?;

    println!(
        "theta = {}, tau_star = {:.6}, residual = {:.3e}, ambiguous = {}",
        fit.theta, fit.tau_star, fit.residual, fit.ambiguous
    );
    write_json(
        &app.artifact("fit.json"),
        &FitSummary { config_hash: hash, source, fit },
    )?;
    Ok(())
}

fn parse_window(text: &str) -> Result<(f64, f64)> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 2 {
        return Err(Error::validation(format!("window '{text}' must be LO:HI")));
    }
    let lo: f64 = parts[0]
        .trim()
        .parse()
        .map_err(|_| Error::validation(format!("window bound '{}' is not a number", parts[0])))?;
    let hi: f64 = parts[1]
        .trim()
        .parse()
        .map_err(|_| Error::validation(format!("window bound '{}' is not a number", parts[1])))?;
    if !(lo >= 0.0 && hi > lo) {
        return Err(Error::validation(format!("window '{text}' needs 0 <= LO < HI")));
    }
    Ok((lo, hi))
}

/// Resolve mode flag (or config default) into a concrete [`FitMode`].
/// Two-point endpoints snap to the nearest sampled times inside the window.
fn resolve_fit_mode(
    arg: Option<FitModeArg>,
    config_mode: &FitModeSpec,
    window: (f64, f64),
    curve: &[(f64, f64)],
) -> Result<FitMode> {
    let two_point_from_window = |curve: &[(f64, f64)]| -> Result<FitMode> {
        let inside: Vec<f64> = curve
            .iter()
            .map(|p| p.0)
            .filter(|&t| t > window.0 && t <= window.1)
            .collect();
        if inside.len() < 2 {
            return Err(Error::validation(format!(
                "two-point fit needs two samples inside the window ({}, {}]",
                window.0, window.1
            )));
        }
        Ok(FitMode::TwoPoint { t_a: inside[0], t_b: *inside.last().expect("len >= 2") })
    };
    match arg {
        Some(FitModeArg::TwoPoint) => two_point_from_window(curve),
        Some(FitModeArg::Lsq) => Ok(FitMode::LeastSquares { window }),
        Some(FitModeArg::Free) => Ok(FitMode::FreeExponent { window }),
        None => match *config_mode {
            FitModeSpec::TwoPoint { t_a_fs, t_b_fs } => Ok(FitMode::TwoPoint {
                t_a: snap_to_sample(t_a_fs, curve),
                t_b: snap_to_sample(t_b_fs, curve),
            }),
            FitModeSpec::LeastSquares => Ok(FitMode::LeastSquares { window }),
            FitModeSpec::FreeExponent => Ok(FitMode::FreeExponent { window }),
        },
    }
}

fn snap_to_sample(t: f64, curve: &[(f64, f64)]) -> f64 {
    curve
        .iter()
        .map(|p| p.0)
        .min_by(|a, b| {
            (a - t).abs()
                .partial_cmp(&(b - t).abs())
                .expect("finite times")
        })
        .unwrap_or(t)
}

// --------------------------------------------------------------- oracle --

fn cmd_oracle(
    app: &App,
    dx: Option<f64>,
    dt: Option<f64>,
    pad_factor: Option<f64>,
    t_max: Option<f64>,
    samples: Option<usize>,
) -> Result<()> {
    let mut config = app.config.clone();
    if let Some(v) = dx {
        config.oracle.dx_nm = v;
    }
    if let Some(v) = dt {
        config.oracle.dt_fs = Some(v);
    }
    if let Some(v) = pad_factor {
        config.oracle.pad_factor = v;
    }
    if let Some(v) = t_max {
        config.oracle.t_max_fs = Some(v);
    }
    if let Some(v) = samples {
        config.oracle.samples = v;
    }
    config.validate()?;
    let hash = config.config_hash();
    let resolved = config.resolve()?;

    let t_max_fs = match config.oracle.t_max_fs {
        Some(t) => t,
        None => 2.0 * lowest_lifetime(&config)?,
    };
    let pad_nm = config.oracle.pad_factor * resolved.potential.length();
    let mut grid = GridSpec::padded_box(
        &resolved.potential,
        pad_nm,
        config.oracle.dx_nm,
        &resolved.params,
    );
    if let Some(dt) = config.oracle.dt_fs {
        grid.dt_fs = dt;
    }

    let n = config.oracle.samples;
    let times: Vec<f64> = (0..n)
        .map(|i| t_max_fs * i as f64 / (n - 1) as f64)
        .collect();
    let span = grid.x_max_nm - grid.x_min_nm;
    eprintln!(
        "oracle: box [{:.1}, {:.1}] nm, dx = {} nm ({} nodes), dt = {:.3e} fs ({} steps)",
        grid.x_min_nm,
        grid.x_max_nm,
        grid.dx_nm,
        (span / grid.dx_nm).round() as u64,
        grid.dt_fs,
        (t_max_fs / grid.dt_fs).round() as u64
    );
    let result = qdecay::oracle::propagate(
        &resolved.potential,
        &resolved.initial,
        &grid,
        &resolved.params,
        &times,
    )?;

    let columns = ["t_fs", "S_oracle"];
    let rows: Vec<Vec<String>> = result
        .times_fs
        .iter()
        .zip(&result.survival)
        .map(|(&t, &s)| vec![fmt_f64(t), fmt_f64(s)])
        .collect();
    let path = app.artifact("oracle.csv");
    write_csv(&path, &hash, &[], &columns, &rows)?;

    if let Some(tc) = result.contamination_time_fs {
        eprintln!(
            "note: outgoing flux reached the box edge at t = {tc:.1} fs; \
             samples beyond that may contain reflected contamination"
        );
    }
    let norm_last = *result.norm_in_box.last().expect("non-empty");
    println!(
        "{}: {} samples to t = {:.3} fs; final S = {:.6e}, box norm {:.6}",
        path.display(),
        result.times_fs.len(),
        t_max_fs,
        result.survival.last().expect("non-empty"),
        norm_last
    );
    Ok(())
}

/// tau_1 without pulling the full pole table: one certified pole suffices.
fn lowest_lifetime(config: &RunConfig) -> Result<f64> {
    let resolved = config.resolve()?;
    let opts = SolverOptions { n_poles: 1, ..config.solver_options() };
    let poles = find_resonances(&resolved.potential, &resolved.params, &opts)?;
    Ok(poles.tau1_fs())
}

// -------------------------------------------------------------- compare --

#[derive(Serialize)]
struct CompareSummary {
    file_a: String,
    file_b: String,
    joined_points: usize,
    /// Of the joined points, how many needed interpolation of curve B.
    interpolated_points: usize,
    skipped_points: usize,
    max_abs_deviation: f64,
    median_abs_deviation: f64,
}

fn cmd_compare(app: &App, a: &PathBuf, b: &PathBuf) -> Result<()> {
    let file_a = read_curve(a, 2, 8)?;
    let file_b = read_curve(b, 2, 8)?;
    let series_a = survival_column(&file_a);
    let mut series_b = survival_column(&file_b);
    series_b.sort_by(|x, y| x.0.partial_cmp(&y.0).expect("finite times"));

    // join on time: exact within a relative tolerance, otherwise linear
    // interpolation of curve B (grids rarely coincide bit-for-bit — the
    // propagation snaps its samples to whole steps)
    let mut devs: Vec<f64> = Vec::new();
    let mut interpolated = 0_usize;
    let mut skipped = 0_usize;
    for &(ta, sa) in &series_a {
        match value_at(&series_b, ta) {
            Some((sb, was_interpolated)) => {
                devs.push((sa - sb).abs());
                interpolated += usize::from(was_interpolated);
            }
            None => skipped += 1,
        }
    }
    if devs.is_empty() {
        return Err(Error::validation(format!(
            "no overlapping time range between {} and {}",
            a.display(),
            b.display()
        )));
    }
    devs.sort_by(|x, y| x.partial_cmp(y).expect("finite deviations"));
    let max = *devs.last().expect("non-empty");
    let median = if devs.len() % 2 == 1 {
        devs[devs.len() / 2]
    } else {
        0.5 * (devs[devs.len() / 2 - 1] + devs[devs.len() / 2])
    };

    println!(
        "joined {} of {} samples ({} interpolated, {} outside range): \
         max |dS| = {:.6e}, median |dS| = {:.6e}",
        devs.len(),
        series_a.len(),
        interpolated,
        skipped,
        max,
        median
    );
    write_json(
        &app.artifact("compare.json"),
        &CompareSummary {
            file_a: a.display().to_string(),
            file_b: b.display().to_string(),
            joined_points: devs.len(),
            interpolated_points: interpolated,
            skipped_points: skipped,
            max_abs_deviation: max,
            median_abs_deviation: median,
        },
    )?;
    Ok(())
}

/// Value of a time-sorted series at `t`: exact sample within 1e-9 relative,
/// else linear interpolation, else `None` outside the sampled range.
fn value_at(series: &[(f64, f64)], t: f64) -> Option<(f64, bool)> {
    let tol = 1e-9 * t.abs().max(1.0);
    let next = series.partition_point(|&(tb, _)| tb < t);
    for idx in [next.wrapping_sub(1), next] {
        if let Some(&(tb, sb)) = series.get(idx) {
            if (tb - t).abs() <= tol {
                return Some((sb, false));
            }
        }
    }
    if next == 0 || next == series.len() {
        return None;
    }
    let (t0, s0) = series[next - 1];
    let (t1, s1) = series[next];
    let frac = (t - t0) / (t1 - t0);
    Some((s0 + frac * (s1 - s0), true))
}

/// (t, S) pairs from a curve file: time is the first column; the survival
/// column is found by name (`S`, `S_oracle`, `survival`) or defaults to the
/// second column.
fn survival_column(file: &crate::app::CurveFile) -> Vec<(f64, f64)> {
    let idx = ["S", "S_oracle", "survival"]
        .iter()
        .find_map(|name| file.column(name))
        .unwrap_or(1);
    file.rows
        .iter()
        .filter(|r| r.len() > idx)
        .map(|r| (r[0], r[idx]))
        .collect()
}

// -------------------------------------------------------------- figure1 --

#[derive(Serialize)]
struct Figure1Summary {
    config_hash: String,
    n_primary: usize,
    n_reference: usize,
    tau1_fs: f64,
    theta: f64,
    tau_star_fs: f64,
    ambiguous: bool,
    residual: f64,
    verdict: Option<CubicVerdict>,
    predicted_theta: Option<f64>,
    sum_rule: SumRuleReport,
    /// All sum-rule residuals below 1e-3.
    sum_rules_converged: bool,
    max_curve_deviation: f64,
}

fn cmd_figure1(app: &App) -> Result<()> {
    let config = app.config.clone();
    let hash = config.config_hash();
    let n_primary = config.n_poles.0;
    let n_reference = n_primary * 20;

    let (poles, set) = app.spectral(&config)?;
    let mut ref_config = config.clone();
    ref_config.n_poles = NPoles(n_reference);
    let (_, ref_set) = app.spectral(&ref_config)?;

    let tau1 = poles.tau1_fs();
    let times = config.time_grid.times_fs(tau1);
    let curve = survival_curve(&set, &times, n_primary)?;
    let ref_curve = survival_curve(&ref_set, &times, n_reference)?;

    let columns = ["t_fs", "t_over_tau1", "S", "ln_S"];
    for (suffix, data) in [(n_primary, &curve), (n_reference, &ref_curve)] {
        let rows: Vec<Vec<String>> = data
            .iter()
            .map(|p| {
                vec![
                    fmt_f64(p.t_fs),
                    fmt_f64(p.t_fs / tau1),
                    fmt_f64(p.survival),
                    fmt_f64(p.survival.ln()),
                ]
            })
            .collect();
        write_csv(
            &app.artifact(&format!("figure1-n{suffix}.csv")),
            &hash,
            &[],
            &columns,
            &rows,
        )?;
    }
    let max_curve_deviation = curve
        .iter()
        .zip(&ref_curve)
        .map(|(p, q)| (p.survival - q.survival).abs())
        .fold(0.0, f64::max);

    // classification degrades gracefully for truncations too small to ladder
    let ladder = default_ladder(n_primary, config.analysis.ladder_rungs);
    let (verdict, predicted_theta) =
        match classify_cubic_sum(&set, &ladder, &config.analysis.thresholds) {
            Ok(diag) => {
                let theta = predict_exponent(&diag).ok();
                (Some(diag.verdict), theta)
            }
            Err(e) => {
                eprintln!("note: classifier unavailable at N = {n_primary}: {e}");
                (None, None)
            }
        };

    let pairs: Vec<(f64, f64)> = curve.iter().map(|p| (p.t_fs, p.survival)).collect();
    let window = (
        config.analysis.window_tau1.0 * tau1,
        config.analysis.window_tau1.1 * tau1,
    );
    let fit_mode = resolve_fit_mode(None, &config.analysis.fit_mode, window, &pairs)?;
    let fit = fit_short_time(&pairs, fit_mode)?;

    let model_rows: Vec<Vec<String>> = times
        .iter()
        .map(|&t| {
            let s_model = 1.0 - (t / fit.tau_star).powf(fit.theta);
            vec![
                fmt_f64(t),
                fmt_f64(t / tau1),
                fmt_f64(s_model),
                fmt_f64(s_model.ln()),
            ]
        })
        .collect();
    write_csv(
        &app.artifact("figure1-fit.csv"),
        &hash,
        &[format!("model: S = 1 - (t/{})^{}", fit.tau_star, fit.theta)],
        &["t_fs", "t_over_tau1", "S_model", "ln_S_model"],
        &model_rows,
    )?;

    let sum_rule = sum_rules(&set, n_primary)?;
    let sum_rules_converged = sum_rule.eq_norm_residual < 1e-3
        && sum_rule.eq_linear_residual < 1e-3
        && sum_rule.eq_inverse_residual < 1e-3;
    if !sum_rules_converged {
        eprintln!(
            "note: sum rules unconverged at N = {n_primary} (norm residual {:.3e})",
            sum_rule.eq_norm_residual
        );
    }

    let summary = Figure1Summary {
        config_hash: hash,
        n_primary,
        n_reference,
        tau1_fs: tau1,
        theta: fit.theta,
        tau_star_fs: fit.tau_star,
        ambiguous: fit.ambiguous,
        residual: fit.residual,
        verdict,
        predicted_theta,
        sum_rule,
        sum_rules_converged,
        max_curve_deviation,
    };
    write_json(&app.artifact("figure1-summary.json"), &summary)?;

    println!(
        "theta = {}, tau_star = {:.6} fs, verdict = {}, max |S_{} - S_{}| = {:.3e}",
        summary.theta,
        summary.tau_star_fs,
        summary
            .verdict
            .as_ref()
            .map_or("unavailable".to_string(), verdict_label),
        n_primary,
        n_reference,
        summary.max_curve_deviation
    );
    Ok(())
}

// ----------------------------------------------------------- experiment --

#[derive(Serialize)]
struct CandidateFits {
    source: String,
    fits: Vec<FitResult>,
    preferred_theta: f64,
    /// residual(best) / residual(other); small means clear preference
    residual_ratio: f64,
}

#[derive(Serialize)]
struct ExperimentSummary {
    seed: Option<u64>,
    datasets: Vec<CandidateFits>,
}

fn cmd_experiment(app: &App, input: Option<PathBuf>) -> Result<()> {
    let candidates = [1.5, 2.0];
    let summary = match &input {
        Some(path) => {
            let file = read_curve(path, 2, 3)?;
            let data: Vec<(f64, f64, f64)> = file
                .rows
                .iter()
                .map(|r| (r[0], r[1], r.get(2).copied().unwrap_or(0.0)))
                .collect();
            let fits = fit_experimental(&data, &candidates)?;
            ExperimentSummary {
                seed: None,
                datasets: vec![candidate_fits(path.display().to_string(), fits)],
            }
        }
        None => {
            // reference generators: one clean power law per candidate exponent,
            // sampled at 20 evenly spaced times with 1% absolute noise
            let times: Vec<f64> = (0..20)
                .map(|i| 0.3 + (6.0 - 0.3) * i as f64 / 19.0)
                .collect();
            let generators = [("quadratic", 2.0, 12.55_f64), ("three-halves", 1.5, 23.15)];
            let mut datasets = Vec::new();
            for (offset, (name, theta, tau_star)) in generators.iter().enumerate() {
                let data =
                    synthetic_experiment(*theta, *tau_star, &times, 0.01, app.seed + offset as u64);
                let file_name = format!("experiment-{name}.csv");
                let rows: Vec<Vec<String>> = data
                    .iter()
                    .map(|&(t, s, e)| vec![fmt_f64(t), fmt_f64(s), fmt_f64(e)])
                    .collect();
                write_csv(
                    &app.artifact(&file_name),
                    &app.config.config_hash(),
                    &[
                        format!("generator: S = 1 - (t/{tau_star})^{theta} + noise"),
                        format!("seed: {}", app.seed + offset as u64),
                    ],
                    &["t", "S", "sigma"],
                    &rows,
                )?;
                let fits = fit_experimental(&data, &candidates)?;
                datasets.push(candidate_fits(file_name, fits));
            }
            ExperimentSummary { seed: Some(app.seed), datasets }
        }
    };

    for d in &summary.datasets {
        println!("{}:", d.source);
        for f in &d.fits {
            println!(
                "  theta = {}: tau_star = {:.6}, weighted residual = {:.6e}",
                f.theta, f.tau_star, f.residual
            );
        }
        println!(
            "  preferred: theta = {} (residual ratio {:.3})",
            d.preferred_theta, d.residual_ratio
        );
    }
    write_json(&app.artifact("experiment-fits.json"), &summary)?;
    Ok(())
}

fn candidate_fits(source: String, fits: Vec<FitResult>) -> CandidateFits {
    let best = fits
        .iter()
        .min_by(|a, b| a.residual.partial_cmp(&b.residual).expect("finite residuals"))
        .expect("at least one candidate");
    let worst = fits
        .iter()
        .map(|f| f.residual)
        .fold(f64::NEG_INFINITY, f64::max);
    let ratio = if worst > 0.0 { best.residual / worst } else { 1.0 };
    CandidateFits {
        source,
        preferred_theta: best.theta,
        residual_ratio: ratio,
        fits,
    }
}

// ------------------------------------------------------------- selftest --

#[derive(Serialize)]
struct SelfTestSummary {
    seed: u64,
    #[serde(flatten)]
    report: qdecay::faddeyeva::SelfTestReport,
}

fn cmd_selftest(app: &App) -> Result<()> {
    let report = qdecay::faddeyeva::self_test(app.seed);
    println!(
        "series vs direct, |z| <= 1 ({} lattice points): max rel {:.3e}",
        report.series_points, report.max_series_rel
    );
    println!(
        "reflection identity, |z| <= 20 ({} random points): max rel {:.3e}",
        report.reflection_points, report.max_reflection_rel
    );
    println!(
        "mirror identity, same points: max rel {:.3e}",
        report.max_mirror_rel
    );
    write_json(
        &app.artifact("faddeyeva-selftest.json"),
        &SelfTestSummary { seed: app.seed, report },
    )?;

    if report.max_series_rel >= 1e-13
        || report.max_reflection_rel >= 1e-12
        || report.max_mirror_rel >= 1e-12
    {
        return Err(Error::numerical(
            "faddeyeva",
            format!(
                "identity residuals exceed tolerances (series {:.3e} / 1e-13, \
                 reflection {:.3e} / 1e-12, mirror {:.3e} / 1e-12)",
                report.max_series_rel, report.max_reflection_rel, report.max_mirror_rel
            ),
        ));
    }
    println!("all identities within tolerance");
    Ok(())
}
