//! Compensated (Kahan–Neumaier) summation for long oscillatory series.
//!
//! The resonant-state sums run over up to 4×10⁴ terms whose partial sums
//! cancel by many orders of magnitude (the sum rules of the expansion), so
//! plain accumulation loses digits linearly in N. Neumaier's variant also
//! stays exact when a single term dwarfs the running sum.

use num_complex::Complex64;

/// Compensated accumulator for `f64`.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanF64 {
    sum: f64,
    comp: f64,
}

impl KahanF64 {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Compensated accumulator for `Complex64` (component-wise).
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanComplex {
    re: KahanF64,
    im: KahanF64,
}

impl KahanComplex {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, z: Complex64) {
        self.re.add(z.re);
        self.im.add(z.im);
    }

    #[inline]
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re.value(), self.im.value())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_cancelling_series() {
        // 1 + 1e-16 repeated: naive summation loses the small terms entirely.
        let mut k = KahanF64::new();
        k.add(1.0);
        for _ in 0..1_000_000 {
            k.add(1e-16);
        }
        let exact = 1.0 + 1e-10;
        assert!((k.value() - exact).abs() < 1e-15);
    }

    #[test]
    fn neumaier_branch_handles_large_late_term() {
        let mut k = KahanF64::new();
        k.add(1.0);
        k.add(1e100);
        k.add(-1e100);
        assert_eq!(k.value(), 1.0);
    }

    #[test]
    fn complex_matches_componentwise() {
        let mut k = KahanComplex::new();
        let zs = [
            Complex64::new(1.0, -2.0),
            Complex64::new(1e-17, 1e-17),
            Complex64::new(-1.0, 2.0),
        ];
        for z in zs {
            k.add(z);
        }
        let v = k.value();
        assert!((v.re - 1e-17).abs() < 1e-30);
        assert!((v.im - 1e-17).abs() < 1e-30);
    }
}
