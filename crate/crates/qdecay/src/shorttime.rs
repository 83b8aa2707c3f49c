//! Short-time analysis: classify the cubic coefficient sum that decides
//! whether 1 − S(t) opens as t² or as t^(3/2), and fit survival curves (or
//! experimental data) to 1 − S = (t/τ*)^ϑ.
//!
//! The classifier watches two ladders over truncation N:
//!
//! * the symmetric partial sums P_N = Σ_{|n|≤N} CₙC̄ₙκₙ³ (purely imaginary —
//!   these are the μ_N(3) entering the t^(−1/2) channel of Ä_N), and
//! * the one-sided sums D_N = Σ_{n=1..N} CₙC̄ₙκₙ³.
//!
//! Both matter: for a state whose cubic sum diverges, the divergence is
//! logarithmic and lives in the one-sided tail, while the symmetric sums
//! oscillate with a slowly decaying envelope.  A rule watching only P_N
//! would return "inconclusive" exactly in the physically interesting case,
//! so divergence is detected on the D ladder (log-log growth, or steady
//! per-octave increments well above rounding) and the vanishing/plateau
//! distinction is read off the P ladder.  All thresholds are configurable.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::coefficients::CoefficientSet;
use crate::dynamics::mu_moment;
use crate::error::{Error, Result};
use crate::kahan::KahanComplex;

/// Tunable constants of the classifier decision rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassifierThresholds {
    /// |log-log slope| above which a ladder counts as growing (default 0.2).
    pub power_alpha: f64,
    /// Max RMS residual for the log-log fit to be trusted (default 0.1).
    pub power_residual: f64,
    /// |P| below `vanish_scale`·|κ₁|³ counts as vanished (default 1e-6).
    pub vanish_scale: f64,
    /// Successive one-sided increments must keep at least this ratio to count
    /// as steady growth (default 0.5).
    pub increment_ratio: f64,
    /// …and the last increment must exceed `increment_floor`·|κ₁|³
    /// (default 1e-3), so rounding noise never masquerades as divergence.
    pub increment_floor: f64,
    /// Relative change between the two largest rungs below which a ladder
    /// counts as a stable plateau (default 0.05).
    pub plateau_rel: f64,
}

impl Default for ClassifierThresholds {
    fn default() -> Self {
        ClassifierThresholds {
            power_alpha: 0.2,
            power_residual: 0.1,
            vanish_scale: 1e-6,
            increment_ratio: 0.5,
            increment_floor: 1e-3,
            plateau_rel: 0.05,
        }
    }
}

/// Fate of the cubic sum as N → ∞.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CubicVerdict {
    Vanishes,
    Converges { limit: Complex64 },
    Diverges { growth_exponent: f64 },
    Inconclusive,
}

/// Everything the classifier looked at, so the verdict is recomputable.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CubicSumDiagnostic {
    pub ladder: Vec<usize>,
    /// P_N = Σ_{|n|≤N} CₙC̄ₙκₙ³ per rung.
    pub partial_sums: Vec<Complex64>,
    /// D_N = Σ_{n=1..N} CₙC̄ₙκₙ³ per rung.
    pub one_sided_sums: Vec<Complex64>,
    /// Reference scale |κ₁|³.
    pub scale: f64,
    /// Log-log slope of |P_N| over the ladder.
    pub alpha_symmetric: f64,
    /// Log-log slope of |D_N| over the ladder.
    pub alpha_one_sided: f64,
    pub verdict: CubicVerdict,
}

/// Least-squares slope and RMS residual of ln(y) against ln(n).
fn loglog_fit(ns: &[usize], ys: &[f64]) -> (f64, f64) {
    let xs: Vec<f64> = ns.iter().map(|&n| (n as f64).ln()).collect();
    let ls: Vec<f64> = ys.iter().map(|&y| y.max(f64::MIN_POSITIVE).ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ls.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ls).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    let rms = (xs
        .iter()
        .zip(&ls)
        .map(|(x, y)| {
            let e = y - my - slope * (x - mx);
            e * e
        })
        .sum::<f64>()
        / n)
        .sqrt();
    (slope, rms)
}

/// Classify the cubic sum on a geometric truncation ladder (≥ 5 rungs).
/// An undecidable ladder yields `CubicVerdict::Inconclusive`, not an error.
pub fn classify_cubic_sum(
    set: &CoefficientSet,
    ladder: &[usize],
    thresholds: &ClassifierThresholds,
) -> Result<CubicSumDiagnostic> {
    if ladder.len() < 5 {
        return Err(Error::validation(format!(
            "classifier ladder needs at least 5 rungs, got {}",
            ladder.len()
        )));
    }
    if ladder.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::validation("classifier ladder must be strictly increasing"));
    }
    let n_max = *ladder.last().expect("non-empty ladder");
    if n_max > set.len() {
        return Err(Error::validation(format!(
            "classifier ladder rung {n_max} exceeds the {} available coefficients",
            set.len()
        )));
    }
    if ladder[0] == 0 {
        return Err(Error::validation("classifier ladder rungs must be at least 1"));
    }

    let mut partial_sums = Vec::with_capacity(ladder.len());
    let mut one_sided_sums = Vec::with_capacity(ladder.len());
    for &n in ladder {
        partial_sums.push(mu_moment(set, 3, n)?);
        // one-sided sum in the same ascending-|κ| order as the moments
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            set.kappa(a + 1)
                .norm_sqr()
                .partial_cmp(&set.kappa(b + 1).norm_sqr())
                .expect("pole moduli are finite")
        });
        let mut acc = KahanComplex::new();
        for i in order {
            acc.add(set.product(i + 1) * set.kappa(i + 1).powi(3));
        }
        one_sided_sums.push(acc.value());
    }
    let scale = set.kappa(1).norm().powi(3);

    let p_abs: Vec<f64> = partial_sums.iter().map(|p| p.norm()).collect();
    let d_abs: Vec<f64> = one_sided_sums.iter().map(|d| d.norm()).collect();
    let (alpha_symmetric, rms_p) = loglog_fit(ladder, &p_abs);
    let (alpha_one_sided, rms_d) = loglog_fit(ladder, &d_abs);

    // one-sided increments per rung: steady growth means the ratio of
    // successive increments never collapses and the last one is well above
    // the rounding floor
    let increments: Vec<f64> = one_sided_sums
        .windows(2)
        .map(|w| (w[1] - w[0]).norm())
        .collect();
    let steady = increments
        .windows(2)
        .all(|w| w[1] >= thresholds.increment_ratio * w[0])
        && increments[increments.len() - 1] > thresholds.increment_floor * scale;

    let power_growth = |alpha: f64, rms: f64| alpha > thresholds.power_alpha && rms < thresholds.power_residual;

    let verdict = if power_growth(alpha_one_sided, rms_d) || steady {
        CubicVerdict::Diverges {
            growth_exponent: alpha_one_sided,
        }
    } else if power_growth(alpha_symmetric, rms_p) {
        CubicVerdict::Diverges {
            growth_exponent: alpha_symmetric,
        }
    } else if p_abs[p_abs.len() - 1] < thresholds.vanish_scale * scale {
        CubicVerdict::Vanishes
    } else if alpha_symmetric.abs() <= thresholds.power_alpha && {
        let last = &partial_sums[partial_sums.len() - 1];
        let prev = &partial_sums[partial_sums.len() - 2];
        (last - prev).norm() <= thresholds.plateau_rel * last.norm()
    } {
        CubicVerdict::Converges {
            limit: partial_sums[partial_sums.len() - 1],
        }
    } else {
        CubicVerdict::Inconclusive
    };

    Ok(CubicSumDiagnostic {
        ladder: ladder.to_vec(),
        partial_sums,
        one_sided_sums,
        scale,
        alpha_symmetric,
        alpha_one_sided,
        verdict,
    })
}

/// Geometric ladder of `rungs` truncations ending at `n_max` (halving down).
pub fn default_ladder(n_max: usize, rungs: usize) -> Vec<usize> {
    (0..rungs).rev().map(|k| n_max >> k).collect()
}

/// Leading short-time exponent implied by the verdict: a vanished sum leaves
/// the quadratic channel, anything that survives (finite or divergent) makes
/// the t^(3/2) channel dominant.
pub fn predict_exponent(diag: &CubicSumDiagnostic) -> Result<f64> {
    match diag.verdict {
        CubicVerdict::Vanishes => Ok(2.0),
        CubicVerdict::Converges { .. } | CubicVerdict::Diverges { .. } => Ok(1.5),
        CubicVerdict::Inconclusive => Err(Error::numerical(
            "predict_exponent",
            "cubic-sum ladder was inconclusive; widen the ladder or adjust thresholds",
        )),
    }
}

/// How a fit was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitMethod {
    TwoPoint,
    LeastSquares,
    FreeExponent,
}

/// Result of fitting 1 − S = (t/τ*)^ϑ.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FitResult {
    pub theta: f64,
    pub tau_star: f64,
    /// Sum of squared deviations in the fit's own space (log space for the
    /// curve fits, error-weighted linear space for experimental fits).
    pub residual: f64,
    pub method: FitMethod,
    pub window: (f64, f64),
    /// Set when the ϑ=3/2 and ϑ=2 hypotheses are statistically
    /// indistinguishable (residuals within 10% of each other).
    pub ambiguous: bool,
}

/// Fit mode selector.
#[derive(Debug, Clone, Copy)]
pub enum FitMode {
    /// The origin plus the two samples taken at t_a and t_b.
    TwoPoint { t_a: f64, t_b: f64 },
    /// Log-space least squares over every sample in (t_min, t_max], with ϑ
    /// restricted to {3/2, 2}.
    LeastSquares { window: (f64, f64) },
    /// Unrestricted ϑ from log-log regression (diagnostic).
    FreeExponent { window: (f64, f64) },
}

const NOISE_FLOOR: f64 = 1e-12;
const AMBIGUITY_BAND: f64 = 0.10;

/// Extract (t, 1−S) samples, enforcing S ∈ (0, 1] and the noise floor.
fn decay_samples(curve: &[(f64, f64)], window: (f64, f64)) -> Result<Vec<(f64, f64)>> {
    let (t_min, t_max) = window;
    if !(t_max > t_min && t_min >= 0.0) {
        return Err(Error::validation(format!(
            "fit window ({t_min}, {t_max}] is empty or negative"
        )));
    }
    let mut out = Vec::new();
    for &(t, s) in curve {
        if t <= t_min || t > t_max * (1.0 + 1e-12) {
            continue;
        }
        if !(s > 0.0 && s <= 1.0 + 1e-12) {
            return Err(Error::validation(format!(
                "survival value S = {s} at t = {t} is outside (0, 1]"
            )));
        }
        let y = 1.0 - s;
        if y < NOISE_FLOOR {
            return Err(Error::validation(format!(
                "window too early: 1 − S = {y:.3e} at t = {t} is below the {NOISE_FLOOR:.0e} noise floor"
            )));
        }
        out.push((t, y));
    }
    if out.len() < 2 {
        return Err(Error::validation(format!(
            "fit window ({t_min}, {t_max}] contains {} samples, need at least 2",
            out.len()
        )));
    }
    Ok(out)
}

/// Fixed-ϑ log-space least squares: ln y = ϑ·ln(t/τ).
fn fixed_theta_fit(samples: &[(f64, f64)], theta: f64) -> (f64, f64) {
    let n = samples.len() as f64;
    let ln_tau = samples
        .iter()
        .map(|&(t, y)| t.ln() - y.ln() / theta)
        .sum::<f64>()
        / n;
    let residual: f64 = samples
        .iter()
        .map(|&(t, y)| {
            let e = y.ln() - theta * (t.ln() - ln_tau);
            e * e
        })
        .sum();
    (ln_tau.exp(), residual)
}

/// Fit 1 − S = (t/τ*)^ϑ to a sampled survival curve of (t, S) pairs.
pub fn fit_short_time(curve: &[(f64, f64)], mode: FitMode) -> Result<FitResult> {
    match mode {
        FitMode::TwoPoint { t_a, t_b } => {
            let pick = |target: f64| -> Result<(f64, f64)> {
                curve
                    .iter()
                    .copied()
                    .find(|&(t, _)| (t - target).abs() <= 1e-9 * target.abs().max(1e-300))
                    .ok_or_else(|| {
                        Error::validation(format!("two-point time {target} is not sampled in the curve"))
                    })
            };
            if !(t_a > 0.0 && t_b > t_a) {
                return Err(Error::validation(format!(
                    "two-point times must satisfy 0 < t_a < t_b, got {t_a}, {t_b}"
                )));
            }
            let pair = [pick(t_a)?, pick(t_b)?];
            let samples = decay_samples(&pair, (0.0, t_b))?;
            pick_hypothesis(&samples, FitMethod::TwoPoint, (t_a, t_b))
        }
        FitMode::LeastSquares { window } => {
            let samples = decay_samples(curve, window)?;
            pick_hypothesis(&samples, FitMethod::LeastSquares, window)
        }
        FitMode::FreeExponent { window } => {
            let samples = decay_samples(curve, window)?;
            let n = samples.len() as f64;
            let mx = samples.iter().map(|&(t, _)| t.ln()).sum::<f64>() / n;
            let my = samples.iter().map(|&(_, y)| y.ln()).sum::<f64>() / n;
            let sxy: f64 = samples
                .iter()
                .map(|&(t, y)| (t.ln() - mx) * (y.ln() - my))
                .sum();
            let sxx: f64 = samples.iter().map(|&(t, _)| (t.ln() - mx) * (t.ln() - mx)).sum();
            if sxx == 0.0 {
                return Err(Error::validation("free-exponent fit needs at least two distinct times"));
            }
            let theta = sxy / sxx;
            if !(theta > 0.0) {
                return Err(Error::numerical(
                    "fit",
                    format!("free exponent came out non-positive ({theta}); the window is not in the short-time regime"),
                ));
            }
            let intercept = my - theta * mx;
            let tau_star = (-intercept / theta).exp();
            let residual: f64 = samples
                .iter()
                .map(|&(t, y)| {
                    let e = y.ln() - theta * (t.ln() - tau_star.ln());
                    e * e
                })
                .sum();
            Ok(FitResult {
                theta,
                tau_star,
                residual,
                method: FitMethod::FreeExponent,
                window,
                ambiguous: false,
            })
        }
    }
}

/// Try ϑ = 3/2 and ϑ = 2, keep the lower residual, flag near-ties.
fn pick_hypothesis(
    samples: &[(f64, f64)],
    method: FitMethod,
    window: (f64, f64),
) -> Result<FitResult> {
    let (tau_32, r_32) = fixed_theta_fit(samples, 1.5);
    let (tau_2, r_2) = fixed_theta_fit(samples, 2.0);
    let ambiguous = (r_32 - r_2).abs() <= AMBIGUITY_BAND * r_32.max(r_2);
    let (theta, tau_star, residual) = if r_32 <= r_2 {
        (1.5, tau_32, r_32)
    } else {
        (2.0, tau_2, r_2)
    };
    Ok(FitResult {
        theta,
        tau_star,
        residual,
        method,
        window,
        ambiguous,
    })
}

/// Error-weighted fit of experimental (t, S, σ) triples at each candidate ϑ.
/// Linear in c = τ*^(−ϑ): y = c·t^ϑ, so noisy points with S ≥ 1 are handled
/// without logs.  Points with σ ≤ 0 get unit weight.
pub fn fit_experimental(
    data: &[(f64, f64, f64)],
    theta_candidates: &[f64],
) -> Result<Vec<FitResult>> {
    let usable: Vec<(f64, f64, f64)> = data
        .iter()
        .copied()
        .filter(|&(t, s, e)| t > 0.0 && t.is_finite() && s.is_finite() && e.is_finite())
        .collect();
    if usable.len() < 2 {
        return Err(Error::validation(format!(
            "experimental fit needs at least 2 points beyond t = 0, got {}",
            usable.len()
        )));
    }
    if theta_candidates.is_empty() {
        return Err(Error::validation("experimental fit needs at least one candidate ϑ"));
    }
    let t_lo = usable.iter().map(|&(t, _, _)| t).fold(f64::INFINITY, f64::min);
    let t_hi = usable.iter().map(|&(t, _, _)| t).fold(0.0_f64, f64::max);
    let mut results = Vec::with_capacity(theta_candidates.len());
    for &theta in theta_candidates {
        if !(theta > 0.0) {
            return Err(Error::validation(format!("candidate ϑ must be positive, got {theta}")));
        }
        let mut num = 0.0;
        let mut den = 0.0;
        for &(t, s, e) in &usable {
            let w = if e > 0.0 { 1.0 / (e * e) } else { 1.0 };
            let model = t.powf(theta);
            num += w * (1.0 - s) * model;
            den += w * model * model;
        }
        let c = num / den;
        if !(c > 0.0) {
            return Err(Error::numerical(
                "fit",
                format!("weighted amplitude for ϑ = {theta} is non-positive ({c}); data shows no decay"),
            ));
        }
        let tau_star = c.powf(-1.0 / theta);
        let residual: f64 = usable
            .iter()
            .map(|&(t, s, e)| {
                let w = if e > 0.0 { 1.0 / (e * e) } else { 1.0 };
                let r = (1.0 - s) - c * t.powf(theta);
                w * r * r
            })
            .sum();
        results.push(FitResult {
            theta,
            tau_star,
            residual,
            method: FitMethod::LeastSquares,
            window: (t_lo, t_hi),
            ambiguous: false,
        });
    }
    Ok(results)
}

/// Default sampling of the short-time window (0, 10⁻³τ₁]: 50 log-spaced
/// times across three decades ending at 10⁻³τ₁.
pub fn default_short_time_grid(tau1_fs: f64) -> Vec<f64> {
    log_spaced(1e-6 * tau1_fs, 1e-3 * tau1_fs, 50)
}

/// `n` log-spaced points from `lo` to `hi` inclusive.
pub fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && n >= 2, "log grid needs 0 < lo < hi and n >= 2");
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

/// Truncate a curve to its quadratic-era prefix 1 − S ≤ 0.1, so a fixed-ϑ
/// fit estimates the Zeno time on the window where the t² model holds.
/// Fails if fewer than 5 samples survive.
pub fn zeno_window(curve: &[(f64, f64)]) -> Result<&[(f64, f64)]> {
    let end = curve
        .iter()
        .position(|&(_, s)| 1.0 - s > 0.1)
        .unwrap_or(curve.len());
    if end < 5 {
        return Err(Error::validation(format!(
            "only {end} samples have 1 − S ≤ 0.1; the grid does not resolve the quadratic era"
        )));
    }
    Ok(&curve[..end])
}

/// Synthetic experimental dataset: S = 1 − (t/τ*)^ϑ plus Gaussian noise of
/// absolute scale σ, reported back as the per-point error bar.  Deterministic
/// in the seed.
pub fn synthetic_experiment(
    theta: f64,
    tau_star: f64,
    times: &[f64],
    sigma: f64,
    seed: u64,
) -> Vec<(f64, f64, f64)> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut gauss = move || -> f64 {
        // Box–Muller from two uniform draws
        let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
        let u2: f64 = rng.gen::<f64>();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    };
    times
        .iter()
        .map(|&t| {
            let s = 1.0 - (t / tau_star).powf(theta) + sigma * gauss();
            (t, s, sigma)
        })
        .collect()
}
