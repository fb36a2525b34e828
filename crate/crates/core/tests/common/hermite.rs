//! Position-space oracle for 1D oscillator matrix elements: tabulated Hermite
//! functions and a trapezoid rule, which converges geometrically for these
//! Gaussian-decaying entire integrands.

#![allow(dead_code)]

pub struct HermiteGrid {
    pub step: f64,
    pub xs: Vec<f64>,
    /// `psi[n][i]` is the normalised Hermite function `n` at `xs[i]`.
    pub psi: Vec<Vec<f64>>,
}

impl HermiteGrid {
    pub fn new(max_level: usize, half_width: f64, step: f64) -> Self {
        let count = (2.0 * half_width / step).round() as usize + 1;
        let xs: Vec<f64> = (0..count).map(|i| -half_width + i as f64 * step).collect();
        let norm = std::f64::consts::PI.powf(-0.25);
        let mut psi = vec![vec![0.0; count]; max_level + 1];
        for (i, &x) in xs.iter().enumerate() {
            let mut prev = 0.0;
            let mut cur = norm * (-0.5 * x * x).exp();
            psi[0][i] = cur;
            for n in 0..max_level {
                let nf = n as f64;
                let next = (2.0 / (nf + 1.0)).sqrt() * x * cur - (nf / (nf + 1.0)).sqrt() * prev;
                prev = cur;
                cur = next;
                psi[n + 1][i] = cur;
            }
        }
        HermiteGrid { step, xs, psi }
    }

    /// Real and imaginary parts of `<m| e^{i delta x} |m'>`.
    pub fn amplitude(&self, m: usize, m_prime: usize, delta: f64) -> (f64, f64) {
        let (a, b) = (&self.psi[m], &self.psi[m_prime]);
        let mut re = 0.0;
        let mut im = 0.0;
        for (i, &x) in self.xs.iter().enumerate() {
            let w = a[i] * b[i];
            let (s, c) = (delta * x).sin_cos();
            re += w * c;
            im += w * s;
        }
        (re * self.step, im * self.step)
    }

    pub fn squared(&self, m: usize, m_prime: usize, delta: f64) -> f64 {
        let (re, im) = self.amplitude(m, m_prime, delta);
        re * re + im * im
    }
}
