//! Piecewise-constant potentials on a finite support [0, L] and the Jost-type
//! boundary function whose lower-half-plane zeros are the resonance momenta.
//!
//! Two evaluations of the same analytic function are provided:
//!
//! * [`PiecewisePotential::jost_trig`] — the textbook transfer-matrix form
//!   f(k) = M21 − ik(M11 + M22) − k²M12. Simple and exact in exact
//!   arithmetic, but for Im k ≪ 0 the matrix entries grow like e^{2|Im k|L}
//!   while f itself stays moderate, so the form loses all significance beyond
//!   |Im k|·L ≈ 35.
//! * [`PiecewisePotential::jost_scaled`] — a left-to-right amplitude
//!   recursion that factors the growing exponential out analytically. Its
//!   zeros coincide with those of f (the removed factor never vanishes), every
//!   internal quantity is bounded for Im k < 0, and the final subtraction is
//!   rewritten as −(V/c₂)/(q+k) to avoid the q−k cancellation. All root
//!   finding uses this form.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::PhysicalParams;

/// One constant-height piece of the potential, in nm / eV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    /// Left edge (nm).
    pub x_lo: f64,
    /// Right edge (nm).
    pub x_hi: f64,
    /// Height (eV).
    #[serde(rename = "height_eV")]
    pub height_ev: f64,
}

impl Segment {
    /// Segment width (nm).
    pub fn width(&self) -> f64 {
        self.x_hi - self.x_lo
    }
}

/// Symmetric barrier–well–barrier shorthand: V on [0, b] and [b+w, 2b+w],
/// zero on the well [b, b+w].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DoubleBarrierSpec {
    /// Barrier width (nm).
    pub b_nm: f64,
    /// Well width (nm).
    pub w_nm: f64,
    /// Barrier height (eV).
    #[serde(rename = "V_eV")]
    pub v_ev: f64,
}

impl DoubleBarrierSpec {
    pub fn segments(&self) -> Vec<Segment> {
        let b = self.b_nm;
        let w = self.w_nm;
        vec![
            Segment { x_lo: 0.0, x_hi: b, height_ev: self.v_ev },
            Segment { x_lo: b, x_hi: b + w, height_ev: 0.0 },
            Segment { x_lo: b + w, x_hi: 2.0 * b + w, height_ev: self.v_ev },
        ]
    }
}

/// A validated piecewise-constant potential: contiguous segments covering
/// [0, L], identically zero outside.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewisePotential {
    segments: Vec<Segment>,
}

/// 2×2 complex matrix in row-major order, used for segment transfer matrices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2 {
    pub m11: Complex64,
    pub m12: Complex64,
    pub m21: Complex64,
    pub m22: Complex64,
}

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2 {
        m11: Complex64::new(1.0, 0.0),
        m12: Complex64::new(0.0, 0.0),
        m21: Complex64::new(0.0, 0.0),
        m22: Complex64::new(1.0, 0.0),
    };

    pub fn mul(&self, rhs: &Mat2) -> Mat2 {
        Mat2 {
            m11: self.m11 * rhs.m11 + self.m12 * rhs.m21,
            m12: self.m11 * rhs.m12 + self.m12 * rhs.m22,
            m21: self.m21 * rhs.m11 + self.m22 * rhs.m21,
            m22: self.m21 * rhs.m12 + self.m22 * rhs.m22,
        }
    }

    pub fn det(&self) -> Complex64 {
        self.m11 * self.m22 - self.m12 * self.m21
    }
}

/// cos(qd) and d·sinc(qd), series-guarded near qd = 0 so that a zero-height
/// (or barrier-top) segment is handled smoothly.
fn cos_and_dsinc(q: Complex64, d: f64) -> (Complex64, Complex64) {
    let qd = q * d;
    if qd.norm() < 1e-8 {
        let qd2 = qd * qd;
        (
            Complex64::new(1.0, 0.0) - qd2 * 0.5,
            d * (Complex64::new(1.0, 0.0) - qd2 / 6.0),
        )
    } else {
        (qd.cos(), d * qd.sin() / qd)
    }
}

impl PiecewisePotential {
    /// Build from explicit segments. They must be finite, strictly positive in
    /// width, start at x = 0, and tile [0, L] without gaps or overlaps.
    pub fn from_segments(segments: Vec<Segment>) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::validation("potential needs at least one segment"));
        }
        if segments[0].x_lo.abs() > 1e-12 {
            return Err(Error::validation(format!(
                "first segment must start at x = 0, got x_lo = {}",
                segments[0].x_lo
            )));
        }
        for (i, s) in segments.iter().enumerate() {
            if !(s.x_lo.is_finite() && s.x_hi.is_finite() && s.height_ev.is_finite()) {
                return Err(Error::validation(format!("segment {i} has non-finite fields")));
            }
            if s.width() <= 0.0 {
                return Err(Error::validation(format!(
                    "segment {i} has non-positive width {}",
                    s.width()
                )));
            }
            if i > 0 && (s.x_lo - segments[i - 1].x_hi).abs() > 1e-12 {
                return Err(Error::validation(format!(
                    "segments {i} and {} are not contiguous ({} vs {})",
                    i - 1,
                    s.x_lo,
                    segments[i - 1].x_hi
                )));
            }
        }
        Ok(PiecewisePotential { segments })
    }

    /// Build the symmetric double-barrier layout.
    pub fn double_barrier(spec: &DoubleBarrierSpec) -> Result<Self> {
        if spec.b_nm <= 0.0 || spec.w_nm <= 0.0 || !spec.v_ev.is_finite() {
            return Err(Error::validation(format!(
                "double barrier needs b > 0, w > 0, finite V; got b = {}, w = {}, V = {}",
                spec.b_nm, spec.w_nm, spec.v_ev
            )));
        }
        Self::from_segments(spec.segments())
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// Total support length L (nm).
    pub fn length(&self) -> f64 {
        self.segments.last().unwrap().x_hi
    }

    /// V(x) in eV. Zero outside [0, L]; an interior boundary point belongs to
    /// the segment on its right, and x = L to the last segment.
    pub fn evaluate(&self, x: f64) -> f64 {
        let l = self.length();
        if x < 0.0 || x > l {
            return 0.0;
        }
        if x == l {
            return self.segments.last().unwrap().height_ev;
        }
        for s in &self.segments {
            if x >= s.x_lo && x < s.x_hi {
                return s.height_ev;
            }
        }
        0.0
    }

    /// Local wavenumber q_j = √(k² − V_j/c₂) for each segment (principal
    /// branch).
    pub fn local_wavenumbers(&self, k: Complex64, params: &PhysicalParams) -> Vec<Complex64> {
        let c2 = params.hbar2_over_2m();
        self.segments
            .iter()
            .map(|s| (k * k - s.height_ev / c2).sqrt())
            .collect()
    }

    /// Transfer matrix of one segment: propagates (u, u′) across width d at
    /// local wavenumber q.
    pub fn segment_matrix(q: Complex64, d: f64) -> Mat2 {
        let (c, ds) = cos_and_dsinc(q, d);
        Mat2 {
            m11: c,
            m12: ds,
            m21: -q * q * ds,
            m22: c,
        }
    }

    /// Full transfer matrix M(k) across [0, L], rightmost segment applied
    /// last.
    pub fn transfer_matrix(&self, k: Complex64, params: &PhysicalParams) -> Mat2 {
        let qs = self.local_wavenumbers(k, params);
        let mut m = Mat2::IDENTITY;
        for (s, q) in self.segments.iter().zip(qs) {
            m = Self::segment_matrix(q, s.width()).mul(&m);
        }
        m
    }

    /// Boundary function f(k) = M21 − ik(M11 + M22) − k²M12 in the raw
    /// transfer-matrix form. Zeros in the lower half-plane are the resonance
    /// momenta; for the free potential f(k) = −2ik·e^{−ikL} (never zero).
    pub fn jost_trig(&self, k: Complex64, params: &PhysicalParams) -> Complex64 {
        let m = self.transfer_matrix(k, params);
        let ik = Complex64::new(0.0, 1.0) * k;
        m.m21 - ik * (m.m11 + m.m22) - k * k * m.m12
    }

    /// Scaled boundary function g(k): same zeros as `jost_trig`, but with the
    /// factor growing like e^{|Im k|·stuff} removed analytically so the value
    /// stays well-conditioned arbitrarily deep in the lower half-plane.
    ///
    /// Amplitude recursion: in segment j write u = A e^{iq x̃} + B e^{−iq x̃}
    /// with the growing exponential factored into a per-segment decay weight
    /// dec = e^{−2iqd} (|dec| ≤ 1 for Im k ≤ 0). The outgoing-wave mismatch
    /// at x = L is returned with the q−k difference computed as
    /// −(V/c₂)/(q + k).
    pub fn jost_scaled(&self, k: Complex64, params: &PhysicalParams) -> Complex64 {
        let c2 = params.hbar2_over_2m();
        let qs = self.local_wavenumbers(k, params);
        let n = self.segments.len();
        let q0 = qs[0];
        let mut a = 0.5 * (Complex64::new(1.0, 0.0) - k / q0);
        let mut b = 0.5 * (Complex64::new(1.0, 0.0) + k / q0);
        for (j, seg) in self.segments.iter().enumerate() {
            let d = seg.width();
            let q = qs[j];
            let dec = (Complex64::new(0.0, -2.0) * q * d).exp();
            if j + 1 < n {
                let r = q / qs[j + 1];
                let half = Complex64::new(0.5, 0.0);
                let (na, nb) = (
                    half * (1.0 + r) * a + half * (1.0 - r) * dec * b,
                    half * (1.0 - r) * a + half * (1.0 + r) * dec * b,
                );
                a = na;
                b = nb;
            } else {
                // cancellation-free q − k for the outgoing-wave mismatch
                let qmk = -(seg.height_ev / c2) / (q + k);
                return a * qmk - b * (q + k) * dec;
            }
        }
        unreachable!("validated potential always has at least one segment");
    }
}

/// JSON-facing spec: either explicit segments or the double-barrier shorthand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PotentialSpec {
    Segments(Vec<Segment>),
    DoubleBarrier(DoubleBarrierSpec),
}

impl PotentialSpec {
    pub fn build(&self) -> Result<PiecewisePotential> {
        match self {
            PotentialSpec::Segments(segs) => PiecewisePotential::from_segments(segs.clone()),
            PotentialSpec::DoubleBarrier(db) => PiecewisePotential::double_barrier(db),
        }
    }
}

impl Default for PotentialSpec {
    /// The GaAs double-barrier layout used throughout: 5 nm barriers of
    /// 0.23 eV around a 5 nm well (L = 15 nm).
    fn default() -> Self {
        PotentialSpec::DoubleBarrier(DoubleBarrierSpec {
            b_nm: 5.0,
            w_nm: 5.0,
            v_ev: 0.23,
        })
    }
}
