//! Lanczos approximation of Γ (g = 7, nine coefficients).

use std::f64::consts::PI;

const LANCZOS_G: f64 = 7.0;
#[allow(clippy::excessive_precision)]
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

#[inline]
fn lanczos_sum(z: f64) -> f64 {
    // z here is the shifted argument (Γ(z + 1)).
    let mut acc = LANCZOS_COEF[0];
    for (i, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        acc += c / (z + i as f64);
    }
    acc
}

/// Γ(z) for real z, not a non-positive integer.
pub fn gamma(z: f64) -> f64 {
    if z < 0.5 {
        return PI / ((PI * z).sin() * gamma(1.0 - z));
    }
    let zm = z - 1.0;
    let t = zm + LANCZOS_G + 0.5;
    // split the power so t^(zm + 1/2) does not overflow before e^-t is applied
    let half = t.powf(0.5 * (zm + 0.5));
    (2.0 * PI).sqrt() * half * ((-t).exp() * half) * lanczos_sum(zm)
}

/// ln Γ(z) for z > 0.
pub fn ln_gamma(z: f64) -> f64 {
    if z < 0.5 {
        return (PI / (PI * z).sin()).ln() - ln_gamma(1.0 - z);
    }
    let zm = z - 1.0;
    let t = zm + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (zm + 0.5) * t.ln() - t + lanczos_sum(zm).ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: u32) -> f64 {
        (1..=n).map(f64::from).product()
    }

    #[test]
    fn integers_match_factorials() {
        for n in 1..=60u32 {
            let rel = (gamma(f64::from(n)) - factorial(n - 1)).abs() / factorial(n - 1);
            assert!(rel < 1e-13, "n={n} rel={rel:e}");
        }
    }

    #[test]
    fn half_integers() {
        let sqrt_pi = PI.sqrt();
        assert!((gamma(0.5) - sqrt_pi).abs() < 1e-14);
        assert!((gamma(1.5) - 0.5 * sqrt_pi).abs() < 1e-14);
        // Γ(n + 1/2) = (2n)! √π / (4^n n!)
        for n in 1..25u32 {
            let exact = factorial(2 * n) * sqrt_pi / (4f64.powi(n as i32) * factorial(n));
            let rel = (gamma(f64::from(n) + 0.5) - exact).abs() / exact;
            assert!(rel < 1e-13, "n={n} rel={rel:e}");
        }
    }

    #[test]
    fn recurrence_holds_on_fine_sweep() {
        let mut z = 0.01;
        while z < 59.0 {
            let rel = (gamma(z + 1.0) - z * gamma(z)).abs() / gamma(z + 1.0);
            assert!(rel < 1e-13, "z={z} rel={rel:e}");
            z += 0.173;
        }
    }

    #[test]
    fn log_gamma_consistent() {
        for &z in &[0.1, 0.5, 0.75, 1.3, 7.7, 31.0, 60.0] {
            assert!((ln_gamma(z) - gamma(z).ln()).abs() < 1e-12 * (1.0 + ln_gamma(z).abs()));
        }
    }
}
