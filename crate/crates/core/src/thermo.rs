//! Ideal Bose gas in a 3D isotropic harmonic trap, in oscillator units
//! (`m = omega = hbar = k_B = 1`, ground-state energy 0).

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::quad::{polylog3, ZETA3};

/// Coefficient of the linear chemical-potential expansion just above Tc:
/// `mu / T ~ -(18 zeta(3) / pi^2) (T - Tc) / Tc`.
pub const MU_SLOPE_ABOVE_TC: f64 = 18.0 * ZETA3 / (PI * PI);

const MU_BISECTION_BUDGET: usize = 200;
const MU_REL_TOL: f64 = 1e-12;
const MU_SPAN: f64 = 50.0;

/// `Tc = (N / zeta(3))^(1/3)`.
pub fn critical_temperature(n_total: u64) -> f64 {
    (n_total as f64 / ZETA3).cbrt()
}

/// Leading-order condensate population `N (1 - (T/Tc)^3)`, zero above Tc.
/// Non-positive temperatures are treated as the `T -> 0` limit.
pub fn condensate_count(n_total: u64, temperature: f64) -> f64 {
    let n = n_total as f64;
    if temperature <= 0.0 {
        return n;
    }
    let ratio = temperature / critical_temperature(n_total);
    if ratio >= 1.0 {
        0.0
    } else {
        n * (1.0 - ratio * ratio * ratio)
    }
}

/// Continuum excited population `int (m^2/2) dm / (e^((m-mu)/T) - 1) = T^3 Li3(e^(mu/T))`.
pub fn excited_count(temperature: f64, mu: f64) -> Result<f64> {
    if mu > 0.0 {
        return Err(Error::invalid(format!("chemical potential {mu} > 0")));
    }
    if !(temperature > 0.0) {
        return Err(Error::invalid("temperature must be positive"));
    }
    let fugacity = (mu / temperature).exp();
    Ok(temperature.powi(3) * polylog3(fugacity)?)
}

/// Bose occupation `1 / (e^((e - mu)/T) - 1)` of one state at energy `energy_level`.
pub fn occupation(energy_level: f64, mu: f64, temperature: f64) -> Result<f64> {
    if !(mu < energy_level) {
        return Err(Error::invalid(format!(
            "chemical potential {mu} must lie below the level energy {energy_level}"
        )));
    }
    if !(temperature > 0.0) {
        return Err(Error::invalid("temperature must be positive"));
    }
    Ok(1.0 / ((energy_level - mu) / temperature).exp_m1())
}

/// Number of 3D states `(e + 1)(e + 2) / 2` at integer energy `e`.
pub fn degeneracy(energy_level: u64) -> u64 {
    (energy_level + 1) * (energy_level + 2) / 2
}

/// Chemical potential of the trapped gas.
///
/// The ground state is kept as a discrete level and the excited states as the
/// continuum, so `mu` solves `N = 1/(e^(-mu/T) - 1) + T^3 Li3(e^(mu/T))` at
/// every temperature. Below Tc this reduces to `e^(-mu/T) = 1 + 1/N0`; above
/// it to `T^3 Li3(e^(mu/T)) = N`. The root is bracketed and bisected in
/// `ln(-mu/T)`, which keeps the relative tolerance uniform when `mu` is
/// `O(1/N)`.
pub fn chemical_potential(n_total: u64, temperature: f64) -> Result<f64> {
    if n_total == 0 {
        return Err(Error::invalid("n_total must be at least 1"));
    }
    if !(temperature > 0.0) || !temperature.is_finite() {
        return Err(Error::invalid("temperature must be positive and finite"));
    }
    let n = n_total as f64;
    let t3 = temperature.powi(3);
    // Excess particle count at reduced chemical potential x = -mu/T; decreasing in x.
    let excess = |x: f64| -> Result<f64> {
        let ground = 1.0 / x.exp_m1();
        Ok(ground + t3 * polylog3((-x).exp())? - n)
    };
    let mut lo = (1.0 / n).ln_1p().ln();
    let mut hi = MU_SPAN.ln();
    if excess(hi.exp())? > 0.0 {
        return Err(Error::NoConvergence(format!(
            "no root with -mu/T <= {MU_SPAN} (N = {n_total}, T = {temperature})"
        )));
    }
    for _ in 0..MU_BISECTION_BUDGET {
        if hi - lo <= MU_REL_TOL {
            return Ok(-temperature * (0.5 * (lo + hi)).exp());
        }
        let mid = 0.5 * (lo + hi);
        if excess(mid.exp())? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::NoConvergence(format!(
        "chemical potential bisection exceeded {MU_BISECTION_BUDGET} iterations"
    )))
}

/// Linearised `mu(T)` just above Tc. Used to validate [`chemical_potential`].
pub fn mu_linearized_above_tc(n_total: u64, temperature: f64) -> f64 {
    let tc = critical_temperature(n_total);
    -temperature * MU_SLOPE_ABOVE_TC * (temperature - tc) / tc
}

/// Thermal state of the trapped gas.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrapEnsemble {
    n_total: u64,
    temperature: f64,
    t_critical: f64,
    mu: f64,
    n_condensate: f64,
    n_excited: f64,
}

impl TrapEnsemble {
    pub fn new(n_total: u64, temperature: f64) -> Result<Self> {
        let mu = chemical_potential(n_total, temperature)?;
        let n_condensate = condensate_count(n_total, temperature);
        Ok(TrapEnsemble {
            n_total,
            temperature,
            t_critical: critical_temperature(n_total),
            mu,
            n_condensate,
            n_excited: n_total as f64 - n_condensate,
        })
    }

    /// Ensemble at `T = ratio * Tc(N)`.
    pub fn at_reduced_temperature(n_total: u64, ratio: f64) -> Result<Self> {
        if !(ratio > 0.0) {
            return Err(Error::invalid("T/Tc must be positive"));
        }
        Self::new(n_total, ratio * critical_temperature(n_total))
    }

    pub fn n_total(&self) -> u64 {
        self.n_total
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    pub fn t_critical(&self) -> f64 {
        self.t_critical
    }

    pub fn reduced_temperature(&self) -> f64 {
        self.temperature / self.t_critical
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn n_condensate(&self) -> f64 {
        self.n_condensate
    }

    pub fn n_excited(&self) -> f64 {
        self.n_excited
    }

    /// Chemical potential seen by the excited-state continuum: 0 at or below
    /// Tc, where `mu / T` is `O(1/N0)`, and the solved `mu` above it.
    pub fn continuum_mu(&self) -> f64 {
        if self.temperature <= self.t_critical {
            0.0
        } else {
            self.mu
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn critical_temperature_values() {
        assert!((critical_temperature(1) - 0.940_499).abs() < 1e-6);
        assert!((critical_temperature(1000) - 10.0 * critical_temperature(1)).abs() < 1e-12);
        assert!((critical_temperature(1000) - 9.404_99).abs() < 1e-4);
    }

    #[test]
    fn condensate_fraction() {
        let tc = critical_temperature(1000);
        assert_eq!(condensate_count(1000, tc), 0.0);
        assert_eq!(condensate_count(1000, 2.0 * tc), 0.0);
        assert!((condensate_count(1000, 0.5 * tc) - 875.0).abs() < 1e-9);
        assert!((condensate_count(1000, 1e-9) - 1000.0).abs() < 1e-9);
    }

    #[test]
    fn excited_count_limits() {
        assert_eq!(excited_count(3.0, 0.0).unwrap(), 27.0 * ZETA3);
        assert!(excited_count(5.0, -1e4).unwrap() < 1e-300);
        assert!(excited_count(5.0, 0.1).is_err());
    }

    #[test]
    fn excited_count_matches_defining_integral() {
        // Independent trapezoid sum of int (m^2/2)/(e^((m-mu)/T)-1) dm, T = 5, mu = -1.
        let (t, mu) = (5.0f64, -1.0f64);
        let h = 1e-3;
        let mut sum = 0.0;
        let mut m = h;
        while m < 400.0 {
            sum += 0.5 * m * m / ((m - mu) / t).exp_m1();
            m += h;
        }
        let brute = sum * h;
        let value = excited_count(t, mu).unwrap();
        assert!((value / brute - 1.0).abs() < 1e-6, "{value} vs {brute}");
        let li3: f64 = (1..2000).map(|k| (-0.2 * k as f64).exp() / (k as f64).powi(3)).sum();
        assert!((value - 125.0 * li3).abs() < 1e-9);
    }

    #[test]
    fn occupation_cases() {
        let t = 3.0;
        let v = occupation(1.0, 1.0 - t * 2f64.ln(), t).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
        let tail = occupation(100.0, 0.0, t).unwrap();
        assert!((tail / (-100.0f64 / t).exp() - 1.0).abs() < 1e-12);
        assert!(occupation(1.0, 1.0, t).is_err());
        assert!(occupation(0.0, 0.5, t).is_err());
    }

    #[test]
    fn degeneracy_by_enumeration() {
        for e in 0..=12u64 {
            let mut count = 0;
            for mx in 0..=e {
                for my in 0..=(e - mx) {
                    let _mz = e - mx - my;
                    count += 1;
                }
            }
            assert_eq!(degeneracy(e), count);
        }
        assert_eq!(degeneracy(0), 1);
        assert_eq!(degeneracy(2), 6);
        assert_eq!(degeneracy(10), 66);
    }

    #[test]
    fn generating_function_identity() {
        for &t in &[0.5f64, 2.0, 10.0] {
            let x: f64 = (-1.0 / t).exp();
            let mut sum = 0.0;
            let mut e = 0u64;
            loop {
                let term = degeneracy(e) as f64 * x.powi(e as i32);
                sum += term;
                if term < 1e-18 * sum {
                    break;
                }
                e += 1;
            }
            let closed = (1.0 - x).powi(-3);
            assert!((sum / closed - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn mu_below_tc_reproduces_ground_population() {
        let ens = TrapEnsemble::at_reduced_temperature(10_000, 0.5).unwrap();
        let n0 = occupation(0.0, ens.mu(), ens.temperature()).unwrap();
        // Self-consistent N0 differs from the leading-order value by O(T^3 / N0).
        assert!((n0 / ens.n_condensate() - 1.0).abs() < 1e-3, "{n0}");
        assert!(ens.mu() < 0.0);
    }

    #[test]
    fn mu_near_tc_is_small_and_shrinks_with_n() {
        let mut previous = f64::INFINITY;
        for &n in &[1_000u64, 10_000, 100_000, 1_000_000] {
            let tc = critical_temperature(n);
            let x = -chemical_potential(n, tc).unwrap() / tc;
            // At Tc the ground level holds ~ sqrt(N zeta3 / zeta2) particles.
            let expected = (n as f64 * crate::quad::ZETA2 / ZETA3).sqrt().recip();
            assert!((x / expected - 1.0).abs() < 0.1, "N={n}: {x} vs {expected}");
            assert!(x < previous);
            previous = x;
        }
    }

    #[test]
    fn mu_above_tc_matches_linear_slope() {
        let n = 10_000;
        let t = 1.1 * critical_temperature(n);
        let mu = chemical_potential(n, t).unwrap();
        let lin = mu_linearized_above_tc(n, t);
        assert!((mu / lin - 1.0).abs() < 0.15, "{mu} vs {lin}");
        assert!((MU_SLOPE_ABOVE_TC - 2.192_289).abs() < 1e-6);
    }

    #[test]
    fn ensemble_split_is_exact() {
        for &r in &[0.2, 0.7, 1.0, 1.3] {
            let e = TrapEnsemble::at_reduced_temperature(5_000, r).unwrap();
            assert_eq!(e.n_condensate() + e.n_excited(), 5_000.0);
            assert!(e.mu() < 0.0);
        }
    }

    #[test]
    fn consistency_below_tc() {
        let n = 20_000;
        for &r in &[0.1, 0.4, 0.8, 1.0] {
            let t = r * critical_temperature(n);
            let total = excited_count(t, 0.0).unwrap() + condensate_count(n, t);
            assert!((total / n as f64 - 1.0).abs() < 1e-9);
        }
    }

    proptest! {
        #[test]
        fn condensate_decreases_with_t(n in 1u64..1_000_000, t1 in 0.01f64..200.0, dt in 0.0f64..50.0) {
            prop_assert!(condensate_count(n, t1 + dt) <= condensate_count(n, t1));
        }

        #[test]
        fn occupation_decreases_with_energy(e in 0.0f64..100.0, de in 1e-3f64..10.0, t in 1.0f64..50.0) {
            let a = occupation(e, -0.01, t).unwrap();
            let b = occupation(e + de, -0.01, t).unwrap();
            prop_assert!(b < a && b > 0.0);
        }

        #[test]
        fn excited_count_increases_with_mu_and_t(t in 0.5f64..40.0, x in 0.01f64..5.0) {
            let base = excited_count(t, -x * t).unwrap();
            prop_assert!(excited_count(t, -0.5 * x * t).unwrap() > base);
            prop_assert!(excited_count(1.1 * t, -x * t).unwrap() > base);
        }

        #[test]
        fn mu_continuous_across_tc(n in 10u64..2_000_000) {
            let tc = critical_temperature(n);
            let h = 1e-9 * tc;
            let below = chemical_potential(n, tc - h).unwrap();
            let above = chemical_potential(n, tc + h).unwrap();
            prop_assert!((above - below).abs() < 1e-6 * tc);
        }
    }
}
