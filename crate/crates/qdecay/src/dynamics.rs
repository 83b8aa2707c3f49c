//! Time evolution assembled from the resonant expansion: moment sums μ_N(j),
//! sum-rule residuals, spectral Hamiltonian moments with ladder-based
//! convergence tagging, the survival amplitude A_N(t) and survival curve, the
//! interior wavefunction ψ_N(x,t), and the two-term decomposition of the
//! second time derivative Ä_N(t).
//!
//! Conventions shared by everything here:
//!
//! * Sums always run over the symmetric index set |n| ≤ N.  The mirror row is
//!   derived, never stored: κ₋ₙ = −κₙ*, C₋ₙC̄₋ₙ = (CₙC̄ₙ)*, so the ±n pair of
//!   CₙC̄ₙκₙʲ contributes 2·Re(CₙC̄ₙκₙʲ) for even j and 2i·Im(CₙC̄ₙκₙʲ) for odd
//!   j.  Each sum accumulates pairs in ascending |κ| with Kahan compensation.
//! * A_N(t) = (1/μ₀) Σ CₙC̄ₙ ω(iyₙ) with iyₙ = −e^(iπ/4)√(ħ/2m)·κₙ√t and
//!   μ₀ = μ_N(0).  At t = 0 every ω factor is exactly 1 and A_N(0) = 1 exactly.
//! * ψ_N(x,t) = ½ Σ Cₙ uₙ(x) ω(iyₙ), defined only on the interaction region
//!   x ∈ [0, L]; outside the region the expansion does not represent the
//!   evolving state and the request is rejected.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::coefficients::CoefficientSet;
use crate::error::{Error, Result};
use crate::faddeyeva::{faddeyeva_checked, omega_argument};
use crate::initial::MomentValue;
use crate::kahan::{KahanComplex, KahanF64};
use crate::par;
use crate::potential::PiecewisePotential;
use crate::states::ResonantState;

/// Relative growth per rung above which a moment ladder counts as growing,
/// and relative change between the two largest rungs below which it counts
/// as settled.
const LADDER_GROWTH_FACTOR: f64 = 1.15;
const LADDER_PLATEAU_REL: f64 = 0.05;

fn check_truncation(set: &CoefficientSet, n_terms: usize) -> Result<()> {
    if n_terms == 0 {
        return Err(Error::validation("truncation order N must be at least 1"));
    }
    if n_terms > set.len() {
        return Err(Error::validation(format!(
            "truncation order N = {n_terms} exceeds the {} available poles",
            set.len()
        )));
    }
    Ok(())
}

/// Indices 0..n_terms sorted by ascending |κ|, the summation order used by
/// every moment and amplitude sum.
fn ascending_order(set: &CoefficientSet, n_terms: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n_terms).collect();
    order.sort_by(|&a, &b| {
        let na = set.kappa(a + 1).norm_sqr();
        let nb = set.kappa(b + 1).norm_sqr();
        na.partial_cmp(&nb).expect("pole moduli are finite")
    });
    order
}

/// μ_N(j) = Σ_{|n|≤N} CₙC̄ₙ κₙʲ.  Negative j is allowed (j = −1 appears in
/// the inverse-moment sum rule); resonance poles never sit at the origin so
/// the inverse powers are well defined.
pub fn mu_moment(set: &CoefficientSet, j: i32, n_terms: usize) -> Result<Complex64> {
    check_truncation(set, n_terms)?;
    let mut acc = KahanComplex::new();
    for &i in &ascending_order(set, n_terms) {
        let x = set.product(i + 1) * set.kappa(i + 1).powi(j);
        let pair = if j.rem_euclid(2) == 0 {
            Complex64::new(2.0 * x.re, 0.0)
        } else {
            Complex64::new(0.0, 2.0 * x.im)
        };
        acc.add(pair);
    }
    Ok(acc.value())
}

/// μ_N(j) tabulated on a ladder of truncation orders, one row per j.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MomentTable {
    pub orders: Vec<i32>,
    pub ladder: Vec<usize>,
    /// values[oi][ri] = μ_{ladder[ri]}(orders[oi])
    pub values: Vec<Vec<Complex64>>,
}

fn check_ladder(set: &CoefficientSet, ladder: &[usize], min_rungs: usize) -> Result<()> {
    if ladder.len() < min_rungs {
        return Err(Error::validation(format!(
            "truncation ladder needs at least {min_rungs} rungs, got {}",
            ladder.len()
        )));
    }
    if ladder.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::validation("truncation ladder must be strictly increasing"));
    }
    check_truncation(set, *ladder.first().expect("non-empty ladder"))?;
    check_truncation(set, *ladder.last().expect("non-empty ladder"))?;
    Ok(())
}

/// Evaluate μ_N(j) for every requested order j on every rung of the ladder.
pub fn moment_table(set: &CoefficientSet, orders: &[i32], ladder: &[usize]) -> Result<MomentTable> {
    if orders.is_empty() {
        return Err(Error::validation("moment table needs at least one order j"));
    }
    check_ladder(set, ladder, 1)?;
    let mut values = Vec::with_capacity(orders.len());
    for &j in orders {
        let mut row = Vec::with_capacity(ladder.len());
        for &n in ladder {
            row.push(mu_moment(set, j, n)?);
        }
        values.push(row);
    }
    Ok(MomentTable {
        orders: orders.to_vec(),
        ladder: ladder.to_vec(),
        values,
    })
}

/// Residuals of the three exact expansion identities at truncation N:
/// ½μ_N(0) → 1, μ_N(1) → 0 and μ_N(−1) → 0.  The two vanishing moments are
/// normalized by the corresponding absolute sums so the residual measures
/// genuine cancellation rather than overall scale.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SumRuleReport {
    pub n_terms: usize,
    pub eq_norm_residual: f64,
    pub eq_linear_residual: f64,
    pub eq_inverse_residual: f64,
}

/// Evaluate the closure sum rules at truncation N.
pub fn sum_rules(set: &CoefficientSet, n_terms: usize) -> Result<SumRuleReport> {
    check_truncation(set, n_terms)?;
    let eq_norm = (0.5 * mu_moment(set, 0, n_terms)?.re - 1.0).abs();
    let normalized = |j: i32| -> Result<f64> {
        let mu = mu_moment(set, j, n_terms)?;
        let mut scale = KahanF64::new();
        for &i in &ascending_order(set, n_terms) {
            scale.add(2.0 * (set.product(i + 1) * set.kappa(i + 1).powi(j)).norm());
        }
        let scale = scale.value();
        if scale <= 0.0 {
            return Err(Error::numerical(
                "sum_rules",
                format!("absolute moment scale vanished for j = {j}"),
            ));
        }
        Ok(mu.norm() / scale)
    };
    Ok(SumRuleReport {
        n_terms,
        eq_norm_residual: eq_norm,
        eq_linear_residual: normalized(1)?,
        eq_inverse_residual: normalized(-1)?,
    })
}

/// Spectral Hamiltonian moments ⟨Hʲ⟩ = ½·(ħ²/2m)ʲ·μ_N(2j) with a truncation
/// ladder deciding whether the fourth moment actually converges.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HamiltonianMoments {
    pub ladder: Vec<usize>,
    /// |μ_N(2)| per rung.
    pub mu2_ladder: Vec<f64>,
    /// |μ_N(4)| per rung.
    pub mu4_ladder: Vec<f64>,
    pub mean_h_ev: f64,
    pub mean_h2_ev2: MomentValue,
    pub energy_spread_ev: MomentValue,
    pub zeno_time_fs: Option<f64>,
}

/// ⟨H⟩ from μ(2) at the largest rung; ⟨H²⟩ from μ(4) there too, but tagged
/// `Divergent` when |μ_N(4)| grows monotonically across the whole ladder.
/// A ladder that neither settles nor grows steadily is reported as a
/// numerical error rather than silently picking a side.
pub fn hamiltonian_moments(
    set: &CoefficientSet,
    ladder: &[usize],
) -> Result<HamiltonianMoments> {
    check_ladder(set, ladder, 3)?;
    let c2 = set.params().hbar2_over_2m();
    let mut mu2_ladder = Vec::with_capacity(ladder.len());
    let mut mu4_ladder = Vec::with_capacity(ladder.len());
    let mut mu2_last = Complex64::default();
    let mut mu4_last = Complex64::default();
    for &n in ladder {
        mu2_last = mu_moment(set, 2, n)?;
        mu4_last = mu_moment(set, 4, n)?;
        mu2_ladder.push(mu2_last.norm());
        mu4_ladder.push(mu4_last.norm());
    }
    let mean_h_ev = 0.5 * c2 * mu2_last.re;

    let m = &mu4_ladder;
    let growing = m.windows(2).all(|w| w[1] > w[0] * LADDER_GROWTH_FACTOR)
        && m[m.len() - 1] > 2.0 * m[0];
    let settled = {
        let last = m[m.len() - 1];
        let prev = m[m.len() - 2];
        (last - prev).abs() <= LADDER_PLATEAU_REL * last.abs().max(f64::MIN_POSITIVE)
    };
    let (mean_h2_ev2, energy_spread_ev, zeno_time_fs) = if growing {
        (MomentValue::Divergent, MomentValue::Divergent, None)
    } else if settled {
        let h2 = 0.5 * c2 * c2 * mu4_last.re;
        let var = h2 - mean_h_ev * mean_h_ev;
        if var <= 0.0 {
            return Err(Error::numerical(
                "hamiltonian_moments",
                format!("non-positive energy variance {var} at N = {}", ladder[ladder.len() - 1]),
            ));
        }
        let spread = var.sqrt();
        (
            MomentValue::Finite(h2),
            MomentValue::Finite(spread),
            Some(set.params().hbar() / spread),
        )
    } else {
        return Err(Error::numerical(
            "hamiltonian_moments",
            format!(
                "|μ_N(4)| ladder is neither settled nor monotonically growing: {m:?} at rungs {ladder:?}"
            ),
        ));
    };

    Ok(HamiltonianMoments {
        ladder: ladder.to_vec(),
        mu2_ladder,
        mu4_ladder,
        mean_h_ev,
        mean_h2_ev2,
        energy_spread_ev,
        zeno_time_fs,
    })
}

/// Rows (κₙ, CₙC̄ₙ) in ascending |κ|, plus μ₀, shared by the amplitude sums.
struct PreparedSum {
    rows: Vec<(Complex64, Complex64)>,
    mu0: f64,
}

impl PreparedSum {
    fn new(set: &CoefficientSet, n_terms: usize) -> Result<Self> {
        check_truncation(set, n_terms)?;
        let rows: Vec<(Complex64, Complex64)> = ascending_order(set, n_terms)
            .into_iter()
            .map(|i| (set.kappa(i + 1), set.product(i + 1)))
            .collect();
        let mut mu0 = KahanF64::new();
        for &(_, cc) in &rows {
            mu0.add(2.0 * cc.re);
        }
        let mu0 = mu0.value();
        if !(mu0 > 0.0) {
            return Err(Error::numerical(
                "survival",
                format!("normalization μ₀ = {mu0} is not positive at N = {n_terms}"),
            ));
        }
        Ok(PreparedSum { rows, mu0 })
    }

    /// A_N(t).  Exact 1 at t = 0; the two ω factors per pair live on opposite
    /// half-planes, so neither saturates for t ≥ 0 unless the inputs are
    /// corrupt — in which case the clamp flag surfaces as a numerical error.
    fn amplitude(&self, t_fs: f64, params: &crate::units::PhysicalParams) -> Result<Complex64> {
        if t_fs == 0.0 {
            return Ok(Complex64::new(1.0, 0.0));
        }
        let mut acc = KahanComplex::new();
        for &(kappa, cc) in &self.rows {
            let (wz, sat_z) = faddeyeva_checked(omega_argument(kappa, t_fs, params));
            let (wzm, sat_m) = faddeyeva_checked(omega_argument(-kappa.conj(), t_fs, params));
            if sat_z || sat_m {
                return Err(Error::numerical(
                    "survival",
                    format!("ω factor saturated at t = {t_fs} fs, κ = {kappa}"),
                ));
            }
            acc.add(cc * wz + cc.conj() * wzm);
        }
        Ok(acc.value() / self.mu0)
    }
}

/// A_N(t) for a single time t ≥ 0 (fs).
pub fn survival_amplitude(set: &CoefficientSet, t_fs: f64, n_terms: usize) -> Result<Complex64> {
    if !(t_fs >= 0.0) {
        return Err(Error::validation(format!("survival time must be >= 0, got {t_fs}")));
    }
    PreparedSum::new(set, n_terms)?.amplitude(t_fs, set.params())
}

/// One sampled point of the survival curve.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SurvivalPoint {
    pub t_fs: f64,
    pub amplitude: Complex64,
    pub survival: f64,
}

/// S_N(t) = |A_N(t)|² on a caller-supplied grid, evaluated in parallel when
/// the `parallel` feature is active (results are identical either way).
pub fn survival_curve(
    set: &CoefficientSet,
    times_fs: &[f64],
    n_terms: usize,
) -> Result<Vec<SurvivalPoint>> {
    if let Some(bad) = times_fs.iter().find(|t| !(**t >= 0.0)) {
        return Err(Error::validation(format!("survival times must be >= 0, got {bad}")));
    }
    let prepared = PreparedSum::new(set, n_terms)?;
    let params = *set.params();
    par::map_slice(times_fs, |&t_fs| {
        let amplitude = prepared.amplitude(t_fs, &params)?;
        Ok(SurvivalPoint {
            t_fs,
            amplitude,
            survival: amplitude.norm_sqr(),
        })
    })
    .into_iter()
    .collect()
}

/// dA_N/dt at t = 0⁺, which the expansion fixes as −(i/ħ)·⟨H⟩ with
/// ⟨H⟩ = ½(ħ²/2m)·μ_N(2).
pub fn amplitude_derivative_at_zero(set: &CoefficientSet, n_terms: usize) -> Result<Complex64> {
    let mu2 = mu_moment(set, 2, n_terms)?;
    let params = set.params();
    let mean_h = 0.5 * params.hbar2_over_2m() * mu2;
    Ok(Complex64::new(0.0, -1.0) / params.hbar() * mean_h)
}

/// The two channels of Ä_N(t): the regular ω-weighted quartic sum and the
/// t^(−1/2) channel carried by the cubic moment μ_N(3).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SecondDerivativeTerms {
    /// a⁴ Σ CₙC̄ₙ κₙ⁴ ω(iyₙ) / μ₀, with a = e^(−iπ/4)√(ħ/2m).
    pub term_omega: Complex64,
    /// (a³/√π)·μ_N(3)·t^(−1/2) / μ₀.
    pub term_sqrt: Complex64,
}

impl SecondDerivativeTerms {
    pub fn total(&self) -> Complex64 {
        self.term_omega + self.term_sqrt
    }
}

/// Ä_N(t) split into its ω channel and its t^(−1/2) channel, both carrying
/// the 1/μ₀ normalization of A_N so that term_omega + term_sqrt matches a
/// finite-difference second derivative of A_N directly.  The exact remainder
/// ∝ μ_N(1)·t^(−3/2) is dropped: the linear moment vanishes by sum rule, so
/// the remainder is rounding-level for any faithful coefficient set.
/// Requires t > 0 (the split is singular at t = 0).
pub fn second_derivative_amplitude(
    set: &CoefficientSet,
    t_fs: f64,
    n_terms: usize,
) -> Result<SecondDerivativeTerms> {
    if !(t_fs > 0.0) {
        return Err(Error::validation(format!(
            "second derivative split requires t > 0, got {t_fs}"
        )));
    }
    let prepared = PreparedSum::new(set, n_terms)?;
    let params = set.params();
    let a = params.sqrt_hbar_over_2m()
        * Complex64::new(std::f64::consts::FRAC_1_SQRT_2, -std::f64::consts::FRAC_1_SQRT_2);
    let a3 = a * a * a;
    let a4 = a3 * a;

    let mut quartic = KahanComplex::new();
    for &(kappa, cc) in &prepared.rows {
        let (wz, sat_z) = faddeyeva_checked(omega_argument(kappa, t_fs, params));
        let (wzm, sat_m) = faddeyeva_checked(omega_argument(-kappa.conj(), t_fs, params));
        if sat_z || sat_m {
            return Err(Error::numerical(
                "second_derivative",
                format!("ω factor saturated at t = {t_fs} fs, κ = {kappa}"),
            ));
        }
        let x = cc * kappa.powi(4);
        quartic.add(x * wz + x.conj() * wzm);
    }
    let mu3 = mu_moment(set, 3, n_terms)?;

    Ok(SecondDerivativeTerms {
        term_omega: a4 * quartic.value() / prepared.mu0,
        term_sqrt: a3 / std::f64::consts::PI.sqrt() * mu3 / t_fs.sqrt() / prepared.mu0,
    })
}

/// ψ_N(x,t) = ½ Σ_{|n|≤N} Cₙ uₙ(x) ω(iyₙ) on the interaction region.
/// Every x must lie in [0, L]; outside the region the truncated expansion is
/// not a representation of the state and the request is rejected.  The states
/// uₙ are rebuilt from the stored poles against `potential`, which must be
/// the same potential the coefficients were computed for.
pub fn wavefunction(
    set: &CoefficientSet,
    potential: &PiecewisePotential,
    xs: &[f64],
    t_fs: f64,
    n_terms: usize,
) -> Result<Vec<Complex64>> {
    if !(t_fs >= 0.0) {
        return Err(Error::validation(format!("wavefunction time must be >= 0, got {t_fs}")));
    }
    let length = potential.length();
    if let Some(bad) = xs.iter().find(|x| !(**x >= 0.0 && **x <= length)) {
        return Err(Error::validation(format!(
            "wavefunction position {bad} lies outside the interaction region [0, {length}]"
        )));
    }
    check_truncation(set, n_terms)?;
    let params = *set.params();

    // weight_plus = ½Cₙω(iyₙ), weight_minus = ½C₋ₙω(iy₋ₙ); the mirror state
    // is the pointwise conjugate of uₙ, so each pair needs only one state.
    struct Row {
        state: ResonantState,
        weight_plus: Complex64,
        weight_minus: Complex64,
    }
    let order = ascending_order(set, n_terms);
    let rows: Vec<Result<Row>> = par::map_slice(&order, |&i| {
        let kappa = set.kappa(i + 1);
        let state = ResonantState::new(kappa, potential, &params);
        let (wz, sat_z) = if t_fs == 0.0 {
            (Complex64::new(1.0, 0.0), false)
        } else {
            faddeyeva_checked(omega_argument(kappa, t_fs, &params))
        };
        let (wzm, sat_m) = if t_fs == 0.0 {
            (Complex64::new(1.0, 0.0), false)
        } else {
            faddeyeva_checked(omega_argument(-kappa.conj(), t_fs, &params))
        };
        if sat_z || sat_m {
            return Err(Error::numerical(
                "wavefunction",
                format!("ω factor saturated at t = {t_fs} fs, κ = {kappa}"),
            ));
        }
        Ok(Row {
            state,
            weight_plus: 0.5 * set.c(i + 1) * wz,
            weight_minus: 0.5 * set.c(i + 1).conj() * wzm,
        })
    });
    let rows: Vec<Row> = rows.into_iter().collect::<Result<_>>()?;

    Ok(par::map_slice(xs, |&x| {
        let mut acc = KahanComplex::new();
        for row in &rows {
            let u = row.state.eval(x);
            acc.add(row.weight_plus * u + row.weight_minus * u.conj());
        }
        acc.value()
    }))
}
