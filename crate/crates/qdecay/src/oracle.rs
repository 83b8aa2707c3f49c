//! Independent validation path: direct grid propagation of the
//! time-dependent Schrödinger equation, used to cross-check the survival
//! probability and wavefunction obtained from the pole expansion.
//!
//! The propagator is Crank–Nicolson: (I + λH)ψ^{k+1} = (I − λH)ψ^k with
//! λ = i·dt/2ħ and H the standard three-point tridiagonal discretization.
//! The scheme is unconditionally stable and exactly unitary for Hermitian H,
//! so the guard on dt below is an accuracy heuristic, not a stability bound.
//! The left-hand matrix is constant in time, so its Thomas factorization is
//! computed once and every step costs three sweeps over the grid.
//!
//! Conventions that matter for accuracy:
//!
//! * Nodes that land exactly on a potential jump take the midpoint value
//!   ½(V_left + V_right); this keeps the effective interface position
//!   second-order accurate (full-value assignment degrades the double
//!   barrier comparison by more than an order of magnitude).
//! * The survival inner product is restricted to nodes in [0, L], which
//!   equals the full-line inner product because ψ(x,0) vanishes outside.
//! * In large-box mode a detector watches the outermost slice of the box
//!   every step; the first time more than 1e-6 of the norm sits there is
//!   reported, because from then on reflected flux can contaminate S(t).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::initial::InitialState;
use crate::potential::PiecewisePotential;
use crate::units::PhysicalParams;

/// Boundary handling at the box edges.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Boundary {
    /// Hard walls (ψ = 0) far enough out that nothing returns during the run.
    LargeBox,
    /// Quadratic complex absorbing potential −i·strength·(d/width)² filling
    /// the outermost `width_nm` on each side.
    AbsorbingLayer { width_nm: f64, strength_ev: f64 },
}

/// Spatial/temporal grid for one propagation run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x_min_nm: f64,
    pub x_max_nm: f64,
    pub dx_nm: f64,
    pub dt_fs: f64,
    pub boundary: Boundary,
}

impl GridSpec {
    /// Largest dt the accuracy heuristic allows: dt ≤ ½·(2m/ħ)·dx².
    pub fn guard_dt(params: &PhysicalParams, dx_nm: f64) -> f64 {
        0.5 * dx_nm * dx_nm * params.hbar() / params.hbar2_over_2m()
    }

    /// Symmetric large box around the interaction region with `pad_nm` of
    /// free space on each side and dt snapped to the accuracy guard.
    pub fn padded_box(
        potential: &PiecewisePotential,
        pad_nm: f64,
        dx_nm: f64,
        params: &PhysicalParams,
    ) -> GridSpec {
        GridSpec {
            x_min_nm: -pad_nm,
            x_max_nm: potential.length() + pad_nm,
            dx_nm,
            dt_fs: Self::guard_dt(params, dx_nm),
            boundary: Boundary::LargeBox,
        }
    }

    fn validate(&self, potential: &PiecewisePotential, params: &PhysicalParams) -> Result<()> {
        let length = potential.length();
        if !(self.x_min_nm <= 0.0 && length <= self.x_max_nm) {
            return Err(Error::validation(format!(
                "grid [{}, {}] must contain the interaction region [0, {length}]",
                self.x_min_nm, self.x_max_nm
            )));
        }
        if !(self.dx_nm > 0.0 && self.dt_fs > 0.0) {
            return Err(Error::validation("grid steps dx and dt must be positive"));
        }
        let span = self.x_max_nm - self.x_min_nm;
        let cells = span / self.dx_nm;
        if (cells - cells.round()).abs() > 1e-6 {
            return Err(Error::validation(format!(
                "box span {span} nm is not an integer number of dx = {} cells",
                self.dx_nm
            )));
        }
        let guard = Self::guard_dt(params, self.dx_nm);
        if self.dt_fs > guard * (1.0 + 1e-9) {
            return Err(Error::validation(format!(
                "dt = {} fs exceeds the accuracy guard 0.5·(2m/ħ)·dx² = {guard:.6e} fs",
                self.dt_fs
            )));
        }
        if let Boundary::AbsorbingLayer { width_nm, strength_ev } = self.boundary {
            if !(width_nm > 0.0 && strength_ev > 0.0) {
                return Err(Error::validation(
                    "absorbing layer needs positive width and strength",
                ));
            }
            if 2.0 * width_nm >= span {
                return Err(Error::validation(
                    "absorbing layers may not overlap: 2·width must be below the box span",
                ));
            }
        }
        Ok(())
    }
}

/// What one propagation run produced, sampled at the snapped times.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OracleResult {
    /// Requested sample times snapped to whole steps k·dt.
    pub times_fs: Vec<f64>,
    /// S(t) = |⟨ψ(·,0), ψ(·,t)⟩|² over the interaction region.
    pub survival: Vec<f64>,
    /// Total norm inside the box at each sample time.
    pub norm_in_box: Vec<f64>,
    /// First time the outer edge slice held more than 1e-6 of the norm
    /// (large-box mode only): reflected flux may contaminate S after this.
    pub contamination_time_fs: Option<f64>,
}

/// Node potential with the midpoint convention at jumps.
pub(crate) fn node_potential(potential: &PiecewisePotential, x: f64) -> f64 {
    let tol = 1e-9;
    let mut boundaries = vec![0.0];
    for seg in potential.segments() {
        boundaries.push(seg.x_hi);
    }
    if boundaries.iter().any(|b| (x - b).abs() <= tol) {
        let left = potential.evaluate(x - 1e-7);
        let right = potential.evaluate(x + 1e-7);
        0.5 * (left + right)
    } else {
        potential.evaluate(x)
    }
}

const EDGE_NORM_LIMIT: f64 = 1e-6;

/// Propagate `initial` under `potential` and sample S(t) and the box norm at
/// `sample_times_fs` (each snapped to the nearest whole step).
pub fn propagate(
    potential: &PiecewisePotential,
    initial: &InitialState,
    grid: &GridSpec,
    params: &PhysicalParams,
    sample_times_fs: &[f64],
) -> Result<OracleResult> {
    grid.validate(potential, params)?;
    if sample_times_fs.is_empty() {
        return Err(Error::validation("propagation needs at least one sample time"));
    }
    if let Some(bad) = sample_times_fs.iter().find(|t| !(**t >= 0.0)) {
        return Err(Error::validation(format!("sample times must be >= 0, got {bad}")));
    }
    let dt = grid.dt_fs;
    let mut samples: Vec<u64> = sample_times_fs
        .iter()
        .map(|&t| (t / dt).round() as u64)
        .collect();
    samples.sort_unstable();
    samples.dedup();

    let span = grid.x_max_nm - grid.x_min_nm;
    let n_cells = (span / grid.dx_nm).round() as usize;
    if n_cells < 8 {
        return Err(Error::validation("grid must have at least 8 cells"));
    }
    let dx = grid.dx_nm;
    let m = n_cells - 1; // interior nodes; ψ = 0 on both walls
    let xs: Vec<f64> = (1..=m).map(|i| grid.x_min_nm + i as f64 * dx).collect();
    let length = potential.length();

    // effective node potential, complex in absorbing mode
    let veff: Vec<Complex64> = xs
        .iter()
        .map(|&x| {
            let v = node_potential(potential, x);
            let absorb = match grid.boundary {
                Boundary::LargeBox => 0.0,
                Boundary::AbsorbingLayer { width_nm, strength_ev } => {
                    let d_left = (grid.x_min_nm + width_nm - x).max(0.0);
                    let d_right = (x - (grid.x_max_nm - width_nm)).max(0.0);
                    let d = d_left.max(d_right);
                    strength_ev * (d / width_nm) * (d / width_nm)
                }
            };
            Complex64::new(v, -absorb)
        })
        .collect();

    // initial vector: the state truncated to [0, L], normalized on the grid
    let mut psi0: Vec<f64> = xs
        .iter()
        .map(|&x| {
            if (-1e-9..=length + 1e-9).contains(&x) {
                initial.eval(x)
            } else {
                0.0
            }
        })
        .collect();
    let norm0: f64 = psi0.iter().map(|p| p * p).sum::<f64>() * dx;
    if !(norm0 > 0.0) {
        return Err(Error::validation("initial state vanishes on the grid"));
    }
    let scale = norm0.sqrt().recip();
    for p in &mut psi0 {
        *p *= scale;
    }
    let mut psi: Vec<Complex64> = psi0.iter().map(|&p| Complex64::new(p, 0.0)).collect();

    // Crank–Nicolson matrices: A = I + λH, B = I − λH, λ = i·dt/2ħ
    let c2 = params.hbar2_over_2m();
    let lambda = Complex64::new(0.0, 0.5 * dt / params.hbar());
    let hop = -c2 / (dx * dx); // H off-diagonal
    let a_off = lambda * hop;
    let b_off = -a_off;
    let a_diag: Vec<Complex64> = veff
        .iter()
        .map(|&v| 1.0 + lambda * (2.0 * c2 / (dx * dx) + v))
        .collect();
    let b_diag: Vec<Complex64> = veff
        .iter()
        .map(|&v| 1.0 - lambda * (2.0 * c2 / (dx * dx) + v))
        .collect();

    // constant-matrix Thomas factorization, reused every step
    let mut c_prime = vec![Complex64::default(); m];
    let mut inv_denom = vec![Complex64::default(); m];
    inv_denom[0] = a_diag[0].finv();
    c_prime[0] = a_off * inv_denom[0];
    for i in 1..m {
        let denom = a_diag[i] - a_off * c_prime[i - 1];
        inv_denom[i] = denom.finv();
        c_prime[i] = a_off * inv_denom[i];
    }
    if inv_denom.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::numerical("oracle", "tridiagonal factorization is singular"));
    }

    // indices participating in the survival sum and in the edge detector
    let survival_nodes: Vec<usize> = xs
        .iter()
        .enumerate()
        .filter(|(_, &x)| (-1e-9..=length + 1e-9).contains(&x))
        .map(|(i, _)| i)
        .collect();
    let edge_width = (0.01 * span).min(20.0).max(5.0 * dx);
    let edge_nodes: Vec<usize> = xs
        .iter()
        .enumerate()
        .filter(|(_, &x)| x < grid.x_min_nm + edge_width || x > grid.x_max_nm - edge_width)
        .map(|(i, _)| i)
        .collect();
    let watch_edges = matches!(grid.boundary, Boundary::LargeBox);

    let survival_of = |psi: &[Complex64]| -> f64 {
        let mut acc = Complex64::default();
        for &i in &survival_nodes {
            acc += psi0[i] * psi[i];
        }
        (acc * dx).norm_sqr()
    };
    let norm_of = |psi: &[Complex64]| -> f64 { psi.iter().map(|z| z.norm_sqr()).sum::<f64>() * dx };

    let mut times_fs = Vec::with_capacity(samples.len());
    let mut survival = Vec::with_capacity(samples.len());
    let mut norm_in_box = Vec::with_capacity(samples.len());
    let mut contamination_time_fs: Option<f64> = None;

    let mut rhs = vec![Complex64::default(); m];
    let mut k: u64 = 0;
    for &target in &samples {
        while k < target {
            // rhs = Bψ
            rhs[0] = b_diag[0] * psi[0] + b_off * psi[1];
            for i in 1..m - 1 {
                rhs[i] = b_off * psi[i - 1] + b_diag[i] * psi[i] + b_off * psi[i + 1];
            }
            rhs[m - 1] = b_off * psi[m - 2] + b_diag[m - 1] * psi[m - 1];
            // solve Aψ' = rhs with the cached factorization
            psi[0] = rhs[0] * inv_denom[0];
            for i in 1..m {
                psi[i] = (rhs[i] - a_off * psi[i - 1]) * inv_denom[i];
            }
            for i in (0..m - 1).rev() {
                let next = psi[i + 1];
                psi[i] -= c_prime[i] * next;
            }
            k += 1;
            if watch_edges && contamination_time_fs.is_none() {
                let edge: f64 = edge_nodes.iter().map(|&i| psi[i].norm_sqr()).sum::<f64>() * dx;
                if edge > EDGE_NORM_LIMIT {
                    contamination_time_fs = Some(k as f64 * dt);
                }
            }
        }
        times_fs.push(k as f64 * dt);
        survival.push(survival_of(&psi));
        norm_in_box.push(norm_of(&psi));
    }

    Ok(OracleResult {
        times_fs,
        survival,
        norm_in_box,
        contamination_time_fs,
    })
}

/// Closed-form survival of a free Gaussian packet (zero mean momentum):
/// S(t) = |1 + i·(ħ/2m)·t/(2σ²)|⁻¹.
pub fn free_gaussian_survival(sigma_nm: f64, t_fs: f64, params: &PhysicalParams) -> f64 {
    let beta = params.hbar2_over_2m() / params.hbar() * t_fs / (2.0 * sigma_nm * sigma_nm);
    Complex64::new(1.0, beta).norm().recip()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::CoefficientSet;
    use crate::dynamics::survival_curve;
    use crate::initial::InitialStateSpec;
    use crate::poles::{find_resonances, SolverOptions};
    use crate::potential::{PotentialSpec, Segment};
    use crate::shorttime::{fit_short_time, log_spaced, FitMode};
    use std::sync::OnceLock;

    const TAU1_FS: f64 = 640.3502126512374;

    fn free_space() -> PiecewisePotential {
        PiecewisePotential::from_segments(vec![Segment {
            x_lo: 0.0,
            x_hi: 15.0,
            height_ev: 0.0,
        }])
        .unwrap()
    }

    fn gauss_state(potential: &PiecewisePotential) -> InitialState {
        InitialStateSpec::default().build(potential).unwrap()
    }

    #[test]
    fn survival_and_norm_start_at_one() {
        let params = PhysicalParams::default();
        let p = free_space();
        let grid = GridSpec::padded_box(&p, 10.0, 0.05, &params);
        let r = propagate(&p, &gauss_state(&p), &grid, &params, &[0.0, 0.1]).unwrap();
        assert!((r.survival[0] - 1.0).abs() < 1e-12);
        assert!((r.norm_in_box[0] - 1.0).abs() < 1e-10);
        assert_eq!(r.times_fs[0], 0.0);
    }

    #[test]
    fn free_gaussian_matches_analytic_spreading() {
        let params = PhysicalParams::default();
        let p = free_space();
        let grid = GridSpec::padded_box(&p, 12.0, 0.01, &params);
        let times: Vec<f64> = (1..=10).map(|i| 0.05 * i as f64).collect();
        let r = propagate(&p, &gauss_state(&p), &grid, &params, &times).unwrap();
        let worst = r
            .times_fs
            .iter()
            .zip(&r.survival)
            .map(|(&t, &s)| (s - free_gaussian_survival(0.5, t, &params)).abs())
            .fold(0.0_f64, f64::max);
        assert!(worst < 2e-5, "max |S_CN − S_analytic| = {worst:.3e}");
        assert!(r.contamination_time_fs.is_none());
        // norm conserved to well under the 1e-8 budget
        for n in &r.norm_in_box {
            assert!((n - 1.0).abs() < 1e-10, "norm {n}");
        }
    }

    #[test]
    fn spatial_refinement_converges_second_order() {
        let params = PhysicalParams::default();
        let p = free_space();
        let err_at = |dx: f64| {
            let grid = GridSpec::padded_box(&p, 12.0, dx, &params);
            let r = propagate(&p, &gauss_state(&p), &grid, &params, &[0.5]).unwrap();
            (r.survival[0] - free_gaussian_survival(0.5, r.times_fs[0], &params)).abs()
        };
        let (e4, e2) = (err_at(0.04), err_at(0.02));
        assert!(e2 < e4 / 2.5, "dx errors {e4:.3e} → {e2:.3e} did not shrink ~4×");
    }

    #[test]
    fn temporal_refinement_is_already_converged() {
        let params = PhysicalParams::default();
        let p = free_space();
        let mut grid = GridSpec::padded_box(&p, 12.0, 0.02, &params);
        let r1 = propagate(&p, &gauss_state(&p), &grid, &params, &[0.25]).unwrap();
        grid.dt_fs /= 2.0;
        let r2 = propagate(&p, &gauss_state(&p), &grid, &params, &[0.25]).unwrap();
        assert!(
            (r1.survival[0] - r2.survival[0]).abs() < 1e-6,
            "dt halving moved S by {:.3e}",
            (r1.survival[0] - r2.survival[0]).abs()
        );
    }

    #[test]
    fn interface_nodes_take_the_midpoint_value() {
        let p = PotentialSpec::default().build().unwrap();
        assert!((node_potential(&p, 5.0) - 0.115).abs() < 1e-12);
        assert!((node_potential(&p, 0.0) - 0.115).abs() < 1e-12);
        assert!((node_potential(&p, 15.0) - 0.115).abs() < 1e-12);
        assert!((node_potential(&p, 2.0) - 0.23).abs() < 1e-15);
        assert!((node_potential(&p, 7.5) - 0.0).abs() < 1e-15);
    }

    #[test]
    fn absorbing_layer_norm_decreases_monotonically() {
        let params = PhysicalParams::default();
        let p = free_space();
        let grid = GridSpec {
            x_min_nm: -10.0,
            x_max_nm: 25.0,
            dx_nm: 0.05,
            dt_fs: GridSpec::guard_dt(&params, 0.05),
            boundary: Boundary::AbsorbingLayer {
                width_nm: 5.0,
                strength_ev: 0.5,
            },
        };
        let times: Vec<f64> = (0..=24).map(|i| 0.5 * i as f64).collect();
        let r = propagate(&p, &gauss_state(&p), &grid, &params, &times).unwrap();
        for w in r.norm_in_box.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "norm went up: {w:?}");
        }
        assert!(
            r.norm_in_box[r.norm_in_box.len() - 1] < 0.85,
            "absorber removed too little: {:?}",
            r.norm_in_box
        );
    }

    #[test]
    fn too_small_box_reports_contamination_time() {
        let params = PhysicalParams::default();
        let p = free_space();
        let grid = GridSpec::padded_box(&p, 3.0, 0.05, &params);
        let r = propagate(&p, &gauss_state(&p), &grid, &params, &[6.0]).unwrap();
        let t_hit = r.contamination_time_fs.expect("spreading packet must reach a 3 nm pad");
        assert!(t_hit > 0.0 && t_hit < 6.0, "t_hit = {t_hit}");
    }

    #[test]
    fn grid_validation_rejects_bad_specs() {
        let params = PhysicalParams::default();
        let p = PotentialSpec::default().build().unwrap();
        let ok = GridSpec::padded_box(&p, 10.0, 0.05, &params);
        let state = gauss_state(&p);
        // dt above the guard
        let mut bad = ok;
        bad.dt_fs *= 1.5;
        assert!(propagate(&p, &state, &bad, &params, &[0.1]).is_err());
        // box not containing [0, L]
        let mut bad = ok;
        bad.x_max_nm = 10.0;
        assert!(propagate(&p, &state, &bad, &params, &[0.1]).is_err());
        // span not a whole number of cells
        let mut bad = ok;
        bad.x_max_nm += 0.5 * bad.dx_nm;
        assert!(propagate(&p, &state, &bad, &params, &[0.1]).is_err());
        // negative sample time
        assert!(propagate(&p, &state, &ok, &params, &[-1.0]).is_err());
        assert!(propagate(&p, &state, &ok, &params, &[]).is_err());
    }

    struct Fixture {
        potential: PiecewisePotential,
        gauss: CoefficientSet,
        sine: CoefficientSet,
    }

    fn fixture() -> &'static Fixture {
        static FIXTURE: OnceLock<Fixture> = OnceLock::new();
        FIXTURE.get_or_init(|| {
            let potential = PotentialSpec::default().build().expect("default potential");
            let params = PhysicalParams::default();
            let opts = SolverOptions {
                n_poles: 1000,
                ..SolverOptions::default()
            };
            let poles = find_resonances(&potential, &params, &opts).expect("poles");
            let gauss_state = InitialStateSpec::default().build(&potential).expect("gauss");
            let sine_state = InitialStateSpec::Sinusoidal { j: 1, support_nm: None }
                .build(&potential)
                .expect("sine");
            Fixture {
                gauss: CoefficientSet::compute(&poles, &gauss_state, &potential).expect("C gauss"),
                sine: CoefficientSet::compute(&poles, &sine_state, &potential).expect("C sine"),
                potential,
            }
        })
    }

    #[test]
    fn double_barrier_oracle_tracks_the_expansion() {
        let params = PhysicalParams::default();
        let f = fixture();
        let state = gauss_state(&f.potential);
        let grid = GridSpec::padded_box(&f.potential, 700.0, 0.1, &params);
        let times: Vec<f64> = (1..=16).map(|i| 4.0 * i as f64).collect();
        let r = propagate(&f.potential, &state, &grid, &params, &times).unwrap();
        assert!(r.contamination_time_fs.is_none(), "700 nm pad contaminated at {:?}", r.contamination_time_fs);
        let expansion = survival_curve(&f.gauss, &r.times_fs, 1000).unwrap();
        let worst = r
            .survival
            .iter()
            .zip(&expansion)
            .map(|(&s, p)| (s - p.survival).abs())
            .fold(0.0_f64, f64::max);
        assert!(worst < 5e-4, "max |S_CN − S_N| = {worst:.3e} over [0, 64 fs]");
    }

    #[test]
    fn sinusoidal_oracle_confirms_the_three_halves_law() {
        let params = PhysicalParams::default();
        let f = fixture();
        let state = InitialStateSpec::Sinusoidal { j: 1, support_nm: None }
            .build(&f.potential)
            .unwrap();
        let grid = GridSpec {
            x_min_nm: -25.0,
            x_max_nm: 40.0,
            dx_nm: 0.02,
            dt_fs: GridSpec::guard_dt(&params, 0.02),
            boundary: Boundary::LargeBox,
        };
        let times = log_spaced(1e-4 * TAU1_FS, 1e-3 * TAU1_FS, 25);
        let r = propagate(&f.potential, &state, &grid, &params, &times).unwrap();
        assert!(r.contamination_time_fs.is_none());
        let curve: Vec<(f64, f64)> = r.times_fs.iter().copied().zip(r.survival.iter().copied()).collect();
        let window = (0.0, 1e-3 * TAU1_FS);
        let fit = fit_short_time(&curve, FitMode::FreeExponent { window }).unwrap();
        assert!(
            (1.35..=1.65).contains(&fit.theta),
            "CN free exponent {} outside [1.35, 1.65]",
            fit.theta
        );
        // and the expansion agrees with the oracle pointwise in this window
        let expansion = survival_curve(&f.sine, &r.times_fs, 1000).unwrap();
        let worst = r
            .survival
            .iter()
            .zip(&expansion)
            .map(|(&s, p)| (s - p.survival).abs())
            .fold(0.0_f64, f64::max);
        assert!(worst < 1e-4, "max |S_CN − S_N| = {worst:.3e}");
    }
}
