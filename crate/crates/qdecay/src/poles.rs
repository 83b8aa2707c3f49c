//! Resonance momenta: lower-half-plane zeros κₙ of the boundary function.
//!
//! Enumeration strategy, in two phases:
//!
//! 1. **Certified box sweep.** The argument principle is evaluated on a
//!    rectangle in the fourth quadrant with adaptive phase tracking (panel
//!    count doubles until no single phase step exceeds 1.5 rad). Boxes with
//!    nonzero winding are subdivided until they isolate a single zero, which
//!    Newton's method then polishes. This phase cannot miss a zero inside the
//!    box, which anchors the count.
//! 2. **Spacing continuation.** Beyond the box the zeros approach the free
//!    ladder with spacing π/L. Each next zero is seeded from the previous
//!    spacing, Newton-refined on the scaled boundary function, and accepted
//!    only if it lands in the forward window (0.4π/L, 1.6π/L); anything else
//!    aborts loudly rather than silently skipping a rung.
//!
//! Both the winding integrand and Newton refinement use the scaled boundary
//! function, which keeps full relative accuracy on deep contours and at
//! arbitrarily large |κ| where the raw trig form cancels catastrophically.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potential::PiecewisePotential;
use crate::units::PhysicalParams;

/// How a pole entered the set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoleClass {
    /// Fourth quadrant: Re κ > 0, Im κ < 0.
    Resonance,
    /// Third-quadrant partner −κ* of a resonance.
    Mirror,
    /// Positive imaginary axis (κ = iβ, β > 0).
    Bound,
    /// Negative imaginary axis (κ = −iβ, β > 0).
    Antibound,
}

impl std::fmt::Display for PoleClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            PoleClass::Resonance => "resonance",
            PoleClass::Mirror => "mirror",
            PoleClass::Bound => "bound",
            PoleClass::Antibound => "antibound",
        };
        f.write_str(s)
    }
}

/// Search-region and count controls for [`find_resonances`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Number of fourth-quadrant resonances to return.
    pub n_poles: usize,
    /// Right edge of the certification box (nm⁻¹).
    pub box_re_max: f64,
    /// Bottom edge of the certification box (nm⁻¹, negative).
    pub box_im_max: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            n_poles: 1000,
            box_re_max: 12.0,
            box_im_max: -2.0,
        }
    }
}

/// The resonances of one potential, with the derived spectral quantities.
#[derive(Debug, Clone)]
pub struct PoleSet {
    resonances: Vec<Complex64>,
    params: PhysicalParams,
}

impl PoleSet {
    pub fn new(resonances: Vec<Complex64>, params: PhysicalParams) -> Self {
        PoleSet { resonances, params }
    }

    /// Number of fourth-quadrant resonances (mirrors are implied, not stored).
    pub fn len(&self) -> usize {
        self.resonances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.resonances.is_empty()
    }

    /// All fourth-quadrant resonances, ascending in Re κ.
    pub fn resonances(&self) -> &[Complex64] {
        &self.resonances
    }

    /// κₙ for 1-based n.
    pub fn resonance(&self, n: usize) -> Complex64 {
        self.resonances[n - 1]
    }

    /// Mirror partner κ₋ₙ = −κₙ*.
    pub fn mirror(&self, n: usize) -> Complex64 {
        -self.resonances[n - 1].conj()
    }

    pub fn params(&self) -> &PhysicalParams {
        &self.params
    }

    /// Complex energy Eₙ = c₂κₙ² (eV).
    pub fn energy(&self, n: usize) -> Complex64 {
        let k = self.resonance(n);
        self.params.hbar2_over_2m() * k * k
    }

    /// Decay width Γₙ = −2 Im Eₙ (eV).
    pub fn gamma(&self, n: usize) -> f64 {
        -2.0 * self.energy(n).im
    }

    /// Lifetime τₙ = ħ/Γₙ (fs).
    pub fn lifetime_fs(&self, n: usize) -> f64 {
        self.params.hbar() / self.gamma(n)
    }

    /// τ₁, the natural time unit of the slowest resonance.
    pub fn tau1_fs(&self) -> f64 {
        self.lifetime_fs(1)
    }
}

/// Winding number of f around the rectangle [x0,x1]×[y0,y1], traversed
/// counterclockwise, with adaptive refinement of the phase sampling.
fn winding_number<F>(f: &F, x0: f64, x1: f64, y0: f64, y1: f64) -> Result<i32>
where
    F: Fn(Complex64) -> Complex64,
{
    let mut n0 = 64usize;
    loop {
        let mut pts = Vec::with_capacity(4 * n0 + 1);
        for j in 0..n0 {
            let t = j as f64 / n0 as f64;
            pts.push(Complex64::new(x0 + (x1 - x0) * t, y0));
        }
        for j in 0..n0 {
            let t = j as f64 / n0 as f64;
            pts.push(Complex64::new(x1, y0 + (y1 - y0) * t));
        }
        for j in 0..n0 {
            let t = j as f64 / n0 as f64;
            pts.push(Complex64::new(x1 - (x1 - x0) * t, y1));
        }
        for j in 0..n0 {
            let t = j as f64 / n0 as f64;
            pts.push(Complex64::new(x0, y1 - (y1 - y0) * t));
        }
        pts.push(pts[0]);

        let phases: Vec<f64> = pts.iter().map(|&p| f(p).arg()).collect();
        let mut total = 0.0;
        let mut max_step = 0.0f64;
        for w in phases.windows(2) {
            let mut d = w[1] - w[0];
            d = (d + std::f64::consts::PI).rem_euclid(2.0 * std::f64::consts::PI)
                - std::f64::consts::PI;
            max_step = max_step.max(d.abs());
            total += d;
        }
        if max_step <= 1.5 {
            return Ok((total / (2.0 * std::f64::consts::PI)).round() as i32);
        }
        n0 *= 2;
        if n0 > 1 << 17 {
            return Err(Error::numerical(
                "pole-search",
                format!(
                    "phase tracking on box [{x0},{x1}]x[{y0},{y1}] did not settle; \
                     a zero may lie on the contour"
                ),
            ));
        }
    }
}

/// Newton refinement on the scaled boundary function, central difference with
/// absolute step 1e-7. Returns the last iterate; callers gate acceptance.
pub fn newton_refine(
    potential: &PiecewisePotential,
    params: &PhysicalParams,
    seed: Complex64,
) -> Complex64 {
    let g = |k: Complex64| potential.jost_scaled(k, params);
    let h = 1e-7;
    let mut k = seed;
    for _ in 0..60 {
        let fp = (g(k + h) - g(k - h)) / (2.0 * h);
        let dk = g(k) / fp;
        k -= dk;
        if dk.norm() < 1e-13 * k.norm().max(1.0) {
            return k;
        }
    }
    k
}

/// All zeros inside the rectangle, found by winding-count subdivision.
///
/// The winding integrand is the scaled form: it shares zeros and
/// multiplicities with the trig form (their ratio is analytic and nonvanishing
/// in the open fourth quadrant), but keeps full relative accuracy on deep
/// contours where the trig form cancels to rounding noise (the free potential
/// is the extreme case: |f| ~ e^{−|Im k|L} assembled from e^{+|Im k|L} terms).
fn zeros_in_box(
    potential: &PiecewisePotential,
    params: &PhysicalParams,
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
    depth: u32,
) -> Result<Vec<Complex64>> {
    let f = |k: Complex64| potential.jost_scaled(k, params);
    let w = winding_number(&f, x0, x1, y0, y1)?;
    if w == 0 {
        return Ok(vec![]);
    }
    if w == 1 && depth > 2 {
        let k = newton_refine(
            potential,
            params,
            Complex64::new(0.5 * (x0 + x1), 0.5 * (y0 + y1)),
        );
        if k.re >= x0 && k.re <= x1 && k.im >= y0 && k.im <= y1 {
            return Ok(vec![k]);
        }
        // Newton escaped: fall through to subdivision
    }
    if depth > 40 {
        return Err(Error::numerical(
            "pole-search",
            format!("subdivision limit reached near [{x0},{x1}]x[{y0},{y1}]"),
        ));
    }
    let (mut left, right);
    if (x1 - x0) >= (y1 - y0) {
        let xm = 0.5 * (x0 + x1);
        left = zeros_in_box(potential, params, x0, xm, y0, y1, depth + 1)?;
        right = zeros_in_box(potential, params, xm, x1, y0, y1, depth + 1)?;
    } else {
        let ym = 0.5 * (y0 + y1);
        left = zeros_in_box(potential, params, x0, x1, y0, ym, depth + 1)?;
        right = zeros_in_box(potential, params, x0, x1, ym, y1, depth + 1)?;
    }
    left.extend(right);
    Ok(left)
}

/// Find the first `opts.n_poles` fourth-quadrant resonances, ascending in
/// Re κ: certified box sweep up to `box_re_max`, then spacing continuation.
pub fn find_resonances(
    potential: &PiecewisePotential,
    params: &PhysicalParams,
    opts: &SolverOptions,
) -> Result<PoleSet> {
    if opts.n_poles == 0 {
        return Err(Error::validation("n_poles must be at least 1"));
    }
    if !(opts.box_re_max > 0.0) || !(opts.box_im_max < 0.0) {
        return Err(Error::validation(format!(
            "search box must satisfy box_re_max > 0 and box_im_max < 0, got {} and {}",
            opts.box_re_max, opts.box_im_max
        )));
    }
    let mut out = zeros_in_box(
        potential,
        params,
        1e-4,
        opts.box_re_max,
        opts.box_im_max,
        -1e-7,
        0,
    )?;
    if out.is_empty() {
        return Err(Error::validation(
            "no resonances found in the certification box (free or near-free potential?)",
        ));
    }
    out.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap());
    for w in out.windows(2) {
        if (w[1] - w[0]).norm() < 1e-8 {
            return Err(Error::numerical(
                "pole-search",
                format!("degenerate pole pair near {}", w[0]),
            ));
        }
    }
    let l = potential.length();
    let rung = std::f64::consts::PI / l;
    if out.len() < 2 && out.len() < opts.n_poles {
        return Err(Error::numerical(
            "pole-search",
            "certification box isolated fewer than two poles; widen box_re_max",
        ));
    }
    while out.len() < opts.n_poles {
        let last = out[out.len() - 1];
        let step = last - out[out.len() - 2];
        let seed = if 0.5 * rung < step.re && step.re < 1.5 * rung {
            last + step
        } else {
            last + rung
        };
        let k = newton_refine(potential, params, seed);
        let advance = (k - last).re;
        let ok = k.re.is_finite()
            && k.im.is_finite()
            && k.im < 0.0
            && advance > 0.4 * rung
            && advance < 1.6 * rung;
        if !ok {
            return Err(Error::numerical(
                "pole-search",
                format!("continuation lost track at n = {}: got {}", out.len() + 1, k),
            ));
        }
        out.push(k);
    }
    out.truncate(opts.n_poles);
    Ok(PoleSet::new(out, *params))
}

/// Scan the imaginary axis for bound (κ = iβ) and antibound (κ = −iβ) poles.
/// The boundary function is real there for real potentials; sign changes on a
/// dense grid are refined by bisection. Returns the located κ values.
pub fn scan_imaginary_axis(
    potential: &PiecewisePotential,
    params: &PhysicalParams,
    beta_max: f64,
) -> Vec<Complex64> {
    let g = |beta: f64, sign: f64| {
        potential
            .jost_scaled(Complex64::new(0.0, sign * beta), params)
            .re
    };
    let mut found = Vec::new();
    let n = 2000;
    for &sign in &[1.0f64, -1.0] {
        let mut prev_beta = 1e-6;
        let mut prev = g(prev_beta, sign);
        for i in 1..=n {
            let beta = 1e-6 + (beta_max - 1e-6) * i as f64 / n as f64;
            let cur = g(beta, sign);
            if prev != 0.0 && cur != 0.0 && prev.signum() != cur.signum() {
                let (mut lo, mut hi) = (prev_beta, beta);
                let (mut glo, _) = (prev, cur);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    let gm = g(mid, sign);
                    if gm == 0.0 {
                        lo = mid;
                        hi = mid;
                        break;
                    }
                    if gm.signum() == glo.signum() {
                        lo = mid;
                        glo = gm;
                    } else {
                        hi = mid;
                    }
                    if hi - lo < 1e-14 * hi.max(1.0) {
                        break;
                    }
                }
                found.push(Complex64::new(0.0, sign * 0.5 * (lo + hi)));
            }
            prev = cur;
            prev_beta = beta;
        }
    }
    found
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::PotentialSpec;

    fn setup() -> (PiecewisePotential, PhysicalParams) {
        (PotentialSpec::default().build().unwrap(), PhysicalParams::default())
    }

    #[test]
    fn first_resonance_matches_frozen_value() {
        let (v, p) = setup();
        let set = find_resonances(&v, &p, &SolverOptions { n_poles: 1, ..Default::default() })
            .unwrap();
        let k1 = set.resonance(1);
        assert!((k1.re - 0.375_206_535_534).abs() < 1e-9, "Re k1 = {}", k1.re);
        assert!((k1.im + 0.001_204_397_065).abs() < 1e-9, "Im k1 = {}", k1.im);
    }

    #[test]
    fn lifetime_of_first_resonance() {
        let (v, p) = setup();
        let set = find_resonances(&v, &p, &SolverOptions { n_poles: 1, ..Default::default() })
            .unwrap();
        assert!((set.gamma(1) - 1.027_893_711_746_904_5e-3).abs() < 1e-12);
        assert!((set.tau1_fs() - 640.350_212_651_237_4).abs() < 1e-6);
    }

    #[test]
    fn box_census_in_low_window() {
        // 28 resonances with Re κ in (0, 6]
        let (v, p) = setup();
        let set = find_resonances(&v, &p, &SolverOptions { n_poles: 40, ..Default::default() })
            .unwrap();
        let count = set.resonances().iter().filter(|k| k.re <= 6.0).count();
        assert_eq!(count, 28);
    }

    #[test]
    fn spacing_approaches_free_ladder() {
        let (v, p) = setup();
        let set = find_resonances(&v, &p, &SolverOptions { n_poles: 400, ..Default::default() })
            .unwrap();
        let ks = set.resonances();
        let spacing = (ks[399] - ks[398]).re;
        let rung = std::f64::consts::PI / 15.0;
        assert!((spacing - rung).abs() < 1e-3 * rung, "spacing {spacing} vs {rung}");
        // strictly ordered, all in the fourth quadrant
        for w in ks.windows(2) {
            assert!(w[1].re > w[0].re);
        }
        assert!(ks.iter().all(|k| k.re > 0.0 && k.im < 0.0));
    }

    #[test]
    fn residual_vanishes_at_poles() {
        let (v, p) = setup();
        let set = find_resonances(&v, &p, &SolverOptions { n_poles: 50, ..Default::default() })
            .unwrap();
        for &k in set.resonances() {
            let g = v.jost_scaled(k, &p).norm();
            // compare against the local derivative scale
            let h = 1e-6;
            let gp = (v.jost_scaled(k + h, &p) - v.jost_scaled(k - h, &p)).norm() / (2.0 * h);
            assert!(g < 1e-9 * gp, "residual {g} vs derivative scale {gp} at {k}");
        }
    }

    #[test]
    fn mirror_partners_are_zeros_too() {
        let (v, p) = setup();
        let set = find_resonances(&v, &p, &SolverOptions { n_poles: 5, ..Default::default() })
            .unwrap();
        for n in 1..=5 {
            let m = set.mirror(n);
            assert!(m.re < 0.0 && m.im < 0.0);
            // f(−κ*) = f(κ)* = 0 at a zero
            let g = v.jost_scaled(m, &p).norm();
            let h = 1e-6;
            let gp = (v.jost_scaled(m + h, &p) - v.jost_scaled(m - h, &p)).norm() / (2.0 * h);
            assert!(g < 1e-9 * gp);
        }
    }

    #[test]
    fn no_bound_states_for_pure_barriers() {
        let (v, p) = setup();
        let found = scan_imaginary_axis(&v, &p, 2.0);
        assert!(found.is_empty(), "unexpected imaginary-axis poles: {found:?}");
    }

    #[test]
    fn free_potential_reports_no_resonances() {
        let v = PiecewisePotential::from_segments(vec![crate::potential::Segment {
            x_lo: 0.0,
            x_hi: 15.0,
            height_ev: 0.0,
        }])
        .unwrap();
        let p = PhysicalParams::default();
        let err = find_resonances(&v, &p, &SolverOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }

    #[test]
    fn rejects_bad_options() {
        let (v, p) = setup();
        assert!(find_resonances(&v, &p, &SolverOptions { n_poles: 0, ..Default::default() })
            .is_err());
        assert!(find_resonances(
            &v,
            &p,
            &SolverOptions { box_re_max: -1.0, ..Default::default() }
        )
        .is_err());
    }

    #[test]
    fn energies_and_widths_are_consistent() {
        let (v, p) = setup();
        let set = find_resonances(&v, &p, &SolverOptions { n_poles: 3, ..Default::default() })
            .unwrap();
        for n in 1..=3 {
            let e = set.energy(n);
            assert!(e.re > 0.0);
            assert!(e.im < 0.0);
            assert!((set.gamma(n) + 2.0 * e.im).abs() < 1e-18);
            assert!(set.lifetime_fs(n) > 0.0);
        }
        // widths grow with n in this regime
        assert!(set.gamma(2) > set.gamma(1));
    }
}
