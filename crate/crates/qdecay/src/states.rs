//! Resonant eigenfunctions uₙ(x): outgoing-wave solutions at the resonance
//! momenta, with the complex (non-Hermitian) normalization that makes the
//! pole expansion work.
//!
//! Construction is a left-to-right interface recursion in the amplitude basis
//! u = A·e^{iqξ} + B·e^{−iqξ} per segment (ξ local), seeded by the
//! left-outgoing condition u(0) = 1, u′(0) = −iκ. The normalization integral
//! ∫₀ᴸ u² dx (note: u², not |u|²) is accumulated in closed form per segment,
//! and the boundary term i·[u(0)² + u(L)²]/(2κ) completes the resonant norm
//!
//!   ∫₀ᴸ u² dx + i·(u(0)² + u(L)²)/(2κ) = 1.
//!
//! Everything downstream (coefficients, moments, survival) consumes the
//! per-segment amplitudes directly; no numerical quadrature is involved.

use num_complex::Complex64;

use crate::potential::PiecewisePotential;
use crate::units::PhysicalParams;

/// One segment of a resonant state: u(x) = a·e^{iq(x−x_lo)} + b·e^{−iq(x−x_lo)}.
#[derive(Debug, Clone, Copy)]
pub struct SegmentWave {
    pub x_lo: f64,
    pub width: f64,
    pub q: Complex64,
    pub a: Complex64,
    pub b: Complex64,
}

/// A normalized resonant state uₙ.
#[derive(Debug, Clone)]
pub struct ResonantState {
    kappa: Complex64,
    segments: Vec<SegmentWave>,
    u0: Complex64,
    u_l: Complex64,
    length: f64,
}

impl ResonantState {
    /// Build and normalize the state at momentum `kappa` (a zero of the
    /// boundary function; for other κ the outgoing condition at L is simply
    /// not satisfied and downstream identities fail).
    pub fn new(
        kappa: Complex64,
        potential: &PiecewisePotential,
        params: &PhysicalParams,
    ) -> Self {
        let qs = potential.local_wavenumbers(kappa, params);
        let n = potential.segments().len();
        let mut a = 0.5 * (Complex64::new(1.0, 0.0) - kappa / qs[0]);
        let mut b = 0.5 * (Complex64::new(1.0, 0.0) + kappa / qs[0]);
        let mut segments = Vec::with_capacity(n);
        for (j, seg) in potential.segments().iter().enumerate() {
            let d = seg.width();
            let q = qs[j];
            segments.push(SegmentWave { x_lo: seg.x_lo, width: d, q, a, b });
            if j + 1 < n {
                let r = q / qs[j + 1];
                let ep = (Complex64::new(0.0, 1.0) * q * d).exp();
                let em = (Complex64::new(0.0, -1.0) * q * d).exp();
                let half = Complex64::new(0.5, 0.0);
                let (na, nb) = (
                    half * (1.0 + r) * ep * a + half * (1.0 - r) * em * b,
                    half * (1.0 - r) * ep * a + half * (1.0 + r) * em * b,
                );
                a = na;
                b = nb;
            }
        }
        let last = segments[n - 1];
        let u_l = last.a * (Complex64::new(0.0, 1.0) * last.q * last.width).exp()
            + last.b * (Complex64::new(0.0, -1.0) * last.q * last.width).exp();

        // closed-form ∫ u² per segment:
        // ∫₀ᵈ (Ae^{iqξ}+Be^{−iqξ})² dξ = A²(e^{2iqd}−1)/(2iq) + 2ABd + B²(1−e^{−2iqd})/(2iq)
        let mut integral = Complex64::new(0.0, 0.0);
        for s in &segments {
            let two_iq = Complex64::new(0.0, 2.0) * s.q;
            let e2 = (two_iq * s.width).exp();
            let em2 = ((-two_iq) * s.width).exp();
            integral += s.a * s.a * (e2 - 1.0) / two_iq
                + 2.0 * s.a * s.b * s.width
                + s.b * s.b * (1.0 - em2) / two_iq;
        }
        // u(0) = 1 before normalization
        let n2 = integral + Complex64::new(0.0, 1.0) * (1.0 + u_l * u_l) / (2.0 * kappa);
        let nc = n2.sqrt();
        for s in &mut segments {
            s.a /= nc;
            s.b /= nc;
        }
        ResonantState {
            kappa,
            segments,
            u0: 1.0 / nc,
            u_l: u_l / nc,
            length: potential.length(),
        }
    }

    pub fn kappa(&self) -> Complex64 {
        self.kappa
    }

    /// Per-segment amplitudes (normalized).
    pub fn segments(&self) -> &[SegmentWave] {
        &self.segments
    }

    /// u(0).
    pub fn u_at_origin(&self) -> Complex64 {
        self.u0
    }

    /// u(L).
    pub fn u_at_length(&self) -> Complex64 {
        self.u_l
    }

    /// u(x) everywhere: segment form inside [0, L], outgoing exponential tails
    /// e^{−iκx} (left) and e^{iκ(x−L)} (right) outside.
    pub fn eval(&self, x: f64) -> Complex64 {
        if x < 0.0 {
            return self.u0 * (Complex64::new(0.0, -1.0) * self.kappa * x).exp();
        }
        if x > self.length {
            return self.u_l * (Complex64::new(0.0, 1.0) * self.kappa * (x - self.length)).exp();
        }
        let s = self.segment_at(x);
        let xi = x - s.x_lo;
        s.a * (Complex64::new(0.0, 1.0) * s.q * xi).exp()
            + s.b * (Complex64::new(0.0, -1.0) * s.q * xi).exp()
    }

    /// u′(x), same piecewise conventions as [`eval`](Self::eval).
    pub fn eval_derivative(&self, x: f64) -> Complex64 {
        let ik = Complex64::new(0.0, 1.0) * self.kappa;
        if x < 0.0 {
            return -ik * self.u0 * (-ik * x).exp();
        }
        if x > self.length {
            return ik * self.u_l * (ik * (x - self.length)).exp();
        }
        let s = self.segment_at(x);
        let xi = x - s.x_lo;
        let iq = Complex64::new(0.0, 1.0) * s.q;
        iq * (s.a * (iq * xi).exp() - s.b * (-iq * xi).exp())
    }

    fn segment_at(&self, x: f64) -> &SegmentWave {
        for s in &self.segments {
            if x <= s.x_lo + s.width {
                return s;
            }
        }
        self.segments.last().unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poles::{find_resonances, SolverOptions};
    use crate::potential::PotentialSpec;

    fn first_states(n: usize) -> (Vec<ResonantState>, PiecewisePotential, PhysicalParams) {
        let v = PotentialSpec::default().build().unwrap();
        let p = PhysicalParams::default();
        let set = find_resonances(&v, &p, &SolverOptions { n_poles: n, ..Default::default() })
            .unwrap();
        let states = set
            .resonances()
            .iter()
            .map(|&k| ResonantState::new(k, &v, &p))
            .collect();
        (states, v, p)
    }

    #[test]
    fn boundary_conditions_hold() {
        let (states, _, _) = first_states(8);
        for s in &states {
            let k = s.kappa();
            let scale = (k * s.u_at_origin()).norm();
            // u′(0) = −iκ u(0)
            let r0 = (s.eval_derivative(0.0) + Complex64::new(0.0, 1.0) * k * s.eval(0.0)).norm();
            assert!(r0 < 1e-10 * scale, "left BC residual {r0}");
            // u′(L) = +iκ u(L)
            let rl = (s.eval_derivative(15.0) - Complex64::new(0.0, 1.0) * k * s.eval(15.0)).norm();
            assert!(rl < 1e-10 * (k * s.u_at_length()).norm(), "right BC residual {rl}");
        }
    }

    #[test]
    fn continuity_at_interfaces() {
        let (states, _, _) = first_states(8);
        for s in &states {
            for j in 0..s.segments().len() - 1 {
                let seg = s.segments()[j];
                let xb = seg.x_lo + seg.width;
                let iq = Complex64::new(0.0, 1.0) * seg.q;
                let left = seg.a * (iq * seg.width).exp() + seg.b * (-iq * seg.width).exp();
                let dleft = iq * (seg.a * (iq * seg.width).exp() - seg.b * (-iq * seg.width).exp());
                let nxt = s.segments()[j + 1];
                let right = nxt.a + nxt.b;
                let dright = Complex64::new(0.0, 1.0) * nxt.q * (nxt.a - nxt.b);
                assert!((left - right).norm() < 1e-10 * right.norm(), "u jump at {xb}");
                assert!(
                    (dleft - dright).norm() < 1e-10 * dright.norm().max(1e-30),
                    "u' jump at {xb}"
                );
            }
        }
    }

    #[test]
    fn resonant_normalization_checked_by_quadrature() {
        let (states, _, _) = first_states(7);
        for s in &states {
            // Simpson on u² over [0, 15]
            let n = 60_000usize;
            let h = 15.0 / n as f64;
            let mut acc = Complex64::new(0.0, 0.0);
            for i in 0..=n {
                let x = i as f64 * h;
                let w = if i == 0 || i == n {
                    1.0
                } else if i % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                let u = s.eval(x);
                acc += w * u * u;
            }
            acc *= h / 3.0;
            let u0 = s.eval(0.0);
            let ul = s.eval(15.0);
            let norm = acc
                + Complex64::new(0.0, 1.0) * (u0 * u0 + ul * ul) / (2.0 * s.kappa());
            assert!(
                (norm - Complex64::new(1.0, 0.0)).norm() < 1e-10,
                "norm = {norm} for kappa = {}",
                s.kappa()
            );
        }
    }

    #[test]
    fn ode_residual_by_finite_differences() {
        let (states, v, p) = first_states(3);
        let c2 = p.hbar2_over_2m();
        for s in &states {
            for &x in &[2.3, 7.1, 12.9] {
                let h = 1e-4;
                let upp = (s.eval(x + h) - 2.0 * s.eval(x) + s.eval(x - h)) / (h * h);
                let lhs = -c2 * upp + v.evaluate(x) * s.eval(x);
                let rhs = c2 * s.kappa() * s.kappa() * s.eval(x);
                assert!((lhs - rhs).norm() < 1e-5 * rhs.norm().max(1e-12));
            }
        }
    }

    #[test]
    fn mirror_state_is_complex_conjugate() {
        let (states, v, p) = first_states(4);
        for s in &states {
            let mirror = ResonantState::new(-s.kappa().conj(), &v, &p);
            for &x in &[0.0, 1.0, 6.2, 9.9, 14.5, 15.0] {
                let lhs = mirror.eval(x);
                let rhs = s.eval(x).conj();
                assert!((lhs - rhs).norm() < 1e-9 * rhs.norm().max(1e-12));
            }
        }
    }

    #[test]
    fn outgoing_tails_attach_continuously() {
        let (states, _, _) = first_states(2);
        for s in &states {
            let eps = 1e-9;
            assert!((s.eval(-eps) - s.eval(0.0)).norm() < 1e-6 * s.eval(0.0).norm());
            assert!((s.eval(15.0 + eps) - s.eval(15.0)).norm() < 1e-6 * s.eval(15.0).norm());
            // tails grow outward for resonances (Im κ < 0)
            assert!(s.eval(-5.0).norm() > s.eval(0.0).norm());
            assert!(s.eval(20.0).norm() > s.eval(15.0).norm());
        }
    }
}
