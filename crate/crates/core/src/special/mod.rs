//! Normalized Bessel functions of the first kind,
//!
//! ```text
//! j_ν(x) = Γ(ν+1) Σ_k (-1)^k / (k! Γ(ν+k+1)) (x/2)^{2k} = Γ(ν+1) (2/x)^ν J_ν(x),
//! ```
//!
//! and their tensor products over a multi-index.
//!
//! Small arguments are summed in double-double arithmetic, where the
//! alternating series is safe. Larger arguments go through J_ν computed from
//! the ratio continued fraction J'_ν/J_ν and Steed's complex continued
//! fraction for (J + iY), then rescaled in log space.

mod dd;
mod gamma;

pub use dd::DoubleDouble;
pub use gamma::{gamma, ln_gamma};

use std::f64::consts::PI;

use crate::error::{PaxError, Result};
use crate::grid::Alpha;

/// Largest argument handled by the double-double series regardless of order.
pub const SERIES_SWITCH: f64 = 24.0;

/// Order ν of a normalized Bessel function; always ν > −1/2.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct BesselOrder(f64);

impl BesselOrder {
    pub fn new(nu: f64) -> Result<Self> {
        if nu.is_finite() && nu > -0.5 {
            Ok(BesselOrder(nu))
        } else {
            Err(PaxError::domain(format!("Bessel order must exceed -1/2, got {nu}")))
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }
}

/// j_ν(x) for x ≥ 0.
pub fn normalized_bessel(nu: BesselOrder, x: f64) -> Result<f64> {
    if !(x >= 0.0) || !x.is_finite() {
        return Err(PaxError::domain(format!("argument must be finite and >= 0, got {x}")));
    }
    Ok(j_unchecked(nu.0, x))
}

/// Same as [`normalized_bessel`] without argument validation; callers
/// guarantee ν > −1/2 and x ≥ 0.
#[inline]
pub(crate) fn j_unchecked(nu: f64, x: f64) -> f64 {
    if x == 0.0 {
        return 1.0;
    }
    // below 4(ν+1) in x²/4 the series terms shrink almost immediately
    if x <= SERIES_SWITCH || x * x <= 16.0 * (nu + 1.0) {
        series_dd(nu, x)
    } else {
        continued_fraction(nu, x)
    }
}

fn series_dd(nu: f64, x: f64) -> f64 {
    let half = 0.5 * x;
    let q = DoubleDouble::from_prod(half, half);
    let mut term = DoubleDouble::ONE;
    let mut sum = DoubleDouble::ONE;
    let mut k = 1.0f64;
    loop {
        let denom = DoubleDouble::from_sum(nu, k).mul_f64(k);
        term = -(term * q) / denom;
        sum = sum + term;
        let past_peak = k * (nu + k) > q.hi;
        if past_peak && term.hi.abs() <= 1e-20 * sum.hi.abs().max(1e-300) {
            break;
        }
        if term.hi == 0.0 {
            break;
        }
        k += 1.0;
    }
    sum.to_f64()
}

/// Truncated series Σ_{k<terms} in double-double precision. Reference path
/// for tests; no early exit.
pub fn normalized_bessel_series_oracle(nu: BesselOrder, x: f64, terms: usize) -> Result<f64> {
    if terms == 0 {
        return Err(PaxError::domain("series oracle needs at least one term"));
    }
    if !(x >= 0.0) || !x.is_finite() {
        return Err(PaxError::domain(format!("argument must be finite and >= 0, got {x}")));
    }
    let nu = nu.0;
    let half = 0.5 * x;
    let q = DoubleDouble::from_prod(half, half);
    if !q.is_finite() {
        return Err(PaxError::Overflow(format!("(x/2)^2 overflows for x = {x}")));
    }
    let mut term = DoubleDouble::ONE;
    let mut sum = DoubleDouble::ONE;
    for k in 1..terms {
        let k = k as f64;
        let denom = DoubleDouble::from_sum(nu, k).mul_f64(k);
        term = -(term * q) / denom;
        sum = sum + term;
        if !term.is_finite() || !sum.is_finite() {
            return Err(PaxError::Overflow(format!(
                "series term {k} overflows for nu = {nu}, x = {x}"
            )));
        }
    }
    Ok(sum.to_f64())
}

/// Π_i j_{α_i}(λ_i x_i).
pub fn tensor_bessel(alpha: &Alpha, x: &[f64], lambda: &[f64]) -> Result<f64> {
    let n = alpha.dim();
    if x.len() != n || lambda.len() != n {
        return Err(PaxError::domain(format!(
            "expected points of dimension {n}, got {} and {}",
            x.len(),
            lambda.len()
        )));
    }
    let mut prod = 1.0;
    for ((&a, &xi), &li) in alpha.orders().iter().zip(x).zip(lambda) {
        if !(xi >= 0.0) || !(li >= 0.0) {
            return Err(PaxError::domain("tensor Bessel coordinates must be >= 0"));
        }
        prod *= j_unchecked(a, li * xi);
    }
    Ok(prod)
}

const CF_EPS: f64 = 1e-16;
const CF_TINY: f64 = 1e-300;
const CF_MAXIT: usize = 1_000_000;
const RESCALE: f64 = 1e200;

/// j_ν(x) via J_ν from continued fractions; valid for x ≥ 2, ν > −1/2.
fn continued_fraction(nu: f64, x: f64) -> f64 {
    // Downward recurrence count that brings the order below x.
    let nl = (nu - x + 1.5).floor().max(0.0) as usize;
    let xmu = nu - nl as f64;
    let xi = 1.0 / x;
    let xi2 = 2.0 * xi;
    let w = xi2 / PI;

    // CF1: J'_ν/J_ν by modified Lentz; the sign of J_ν/J_{ν+k} is tracked in `sign`.
    let mut sign = 1.0;
    let mut h = nu * xi;
    if h.abs() < CF_TINY {
        h = CF_TINY;
    }
    let mut b = xi2 * nu;
    let mut d = 0.0;
    let mut c = h;
    for _ in 0..CF_MAXIT {
        b += xi2;
        d = b - d;
        if d.abs() < CF_TINY {
            d = CF_TINY;
        }
        c = b - 1.0 / c;
        if c.abs() < CF_TINY {
            c = CF_TINY;
        }
        d = 1.0 / d;
        let del = c * d;
        h *= del;
        if d < 0.0 {
            sign = -sign;
        }
        if (del - 1.0).abs() < CF_EPS {
            break;
        }
    }

    let rjl_top = sign * CF_TINY;
    let mut rjl = rjl_top;
    let mut rjpl = h * rjl;
    let mut fact = nu * xi;
    let mut rescales = 0i32;
    for _ in 0..nl {
        let tmp = fact * rjl + rjpl;
        fact -= xi;
        rjpl = fact * tmp - rjl;
        rjl = tmp;
        if rjl.abs() > RESCALE {
            rjl /= RESCALE;
            rjpl /= RESCALE;
            rescales += 1;
        }
    }
    if rjl == 0.0 {
        rjl = CF_EPS;
    }
    let f = rjpl / rjl;

    // CF2 (Steed): p + iq = (J' + iY')/(J + iY) at order xmu.
    let mut a = 0.25 - xmu * xmu;
    let mut p = -0.5 * xi;
    let mut q = 1.0;
    let br = 2.0 * x;
    let mut bi = 2.0;
    let mut fct = a * xi / (p * p + q * q);
    let mut cr = br + q * fct;
    let mut ci = bi + p * fct;
    let mut den = br * br + bi * bi;
    let mut dr = br / den;
    let mut di = -bi / den;
    let mut dlr = cr * dr - ci * di;
    let mut dli = cr * di + ci * dr;
    let mut tmp = p * dlr - q * dli;
    q = p * dli + q * dlr;
    p = tmp;
    for i in 2..CF_MAXIT {
        a += 2.0 * (i - 1) as f64;
        bi += 2.0;
        dr = a * dr + br;
        di = a * di + bi;
        if dr.abs() + di.abs() < CF_TINY {
            dr = CF_TINY;
        }
        fct = a / (cr * cr + ci * ci);
        cr = br + cr * fct;
        ci = bi - ci * fct;
        if cr.abs() + ci.abs() < CF_TINY {
            cr = CF_TINY;
        }
        den = dr * dr + di * di;
        dr /= den;
        di /= -den;
        dlr = cr * dr - ci * di;
        dli = cr * di + ci * dr;
        tmp = p * dlr - q * dli;
        q = p * dli + q * dlr;
        p = tmp;
        if (dlr - 1.0).abs() + dli.abs() < CF_EPS {
            break;
        }
    }
    let gam = (p - f) / q;
    let jmu = (w / ((p - f) * gam + q)).sqrt().copysign(rjl);

    // J_ν = rjl_top · jmu / rjl_true with rjl_true = rjl · RESCALE^rescales.
    let ratio = rjl_top / rjl * jmu;
    if ratio == 0.0 {
        return 0.0;
    }
    let log_mag = ln_gamma(nu + 1.0) + nu * (2.0 * xi).ln() + ratio.abs().ln()
        - f64::from(rescales) * RESCALE.ln();
    ratio.signum() * log_mag.exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn order(nu: f64) -> BesselOrder {
        BesselOrder::new(nu).unwrap()
    }

    #[test]
    fn value_at_origin_is_exactly_one() {
        assert_eq!(normalized_bessel(order(0.7), 0.0).unwrap(), 1.0);
        assert_eq!(normalized_bessel(order(-0.49), 0.0).unwrap(), 1.0);
    }

    #[test]
    fn half_order_zero_at_pi() {
        let v = normalized_bessel(order(0.5), PI).unwrap();
        assert!(v.abs() < 1e-15, "{v}");
        let oracle = normalized_bessel_series_oracle(order(0.5), PI, 60).unwrap();
        assert!(oracle.abs() < 1e-15);
    }

    #[test]
    fn near_minus_half_is_cosine() {
        let v = normalized_bessel(order(-0.5 + 1e-9), 0.5).unwrap();
        assert!((v - 0.877_582_561_890_372_7).abs() < 1e-8, "{v}");
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(BesselOrder::new(-0.5).is_err());
        assert!(BesselOrder::new(f64::NAN).is_err());
        assert!(normalized_bessel(order(0.0), -1.0).is_err());
        assert!(normalized_bessel(order(0.0), f64::INFINITY).is_err());
    }

    #[test]
    fn oracle_single_term_and_consistency() {
        assert_eq!(normalized_bessel_series_oracle(order(0.0), 0.0, 1).unwrap(), 1.0);
        let a = normalized_bessel_series_oracle(order(0.0), 2.0, 30).unwrap();
        let b = normalized_bessel(order(0.0), 2.0).unwrap();
        assert!((a - b).abs() < 1e-12);
        let short = normalized_bessel_series_oracle(order(1.5), 10.0, 5).unwrap();
        let full = normalized_bessel_series_oracle(order(1.5), 10.0, 80).unwrap();
        assert!((short - full).abs() > 1e-3);
        assert!((full - normalized_bessel(order(1.5), 10.0).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn oracle_overflow_is_reported() {
        assert!(matches!(
            normalized_bessel_series_oracle(order(0.0), 1e300, 3),
            Err(PaxError::Overflow(_))
        ));
    }

    #[test]
    fn continued_fraction_matches_series_in_overlap() {
        // dd series stays accurate to ~1e-13 up to x≈40 for modest orders
        for &nu in &[-0.3, 0.0, 0.5, 1.2, 3.7, 9.0] {
            let mut x = 24.5;
            while x < 40.0 {
                let a = series_dd(nu, x);
                let b = continued_fraction(nu, x);
                assert!((a - b).abs() < 1e-11, "nu={nu} x={x} {a} {b}");
                x += 0.77;
            }
        }
    }

    #[test]
    fn closed_forms_across_range() {
        let mut x = 0.01;
        while x < 500.0 {
            let s = normalized_bessel(order(0.5), x).unwrap();
            assert!((s - x.sin() / x).abs() < 1e-12, "x={x}");
            // j_{3/2}(x) = 3 (sin x - x cos x) / x^3
            let t = normalized_bessel(order(1.5), x).unwrap();
            let exact = 3.0 * (x.sin() - x * x.cos()) / (x * x * x);
            assert!((t - exact).abs() < 1e-12 * (1.0 + exact.abs()), "x={x} {t} {exact}");
            x *= 1.037;
        }
    }

    #[test]
    fn tensor_product() {
        let alpha = Alpha::new(vec![0.5, 0.5]).unwrap();
        assert!(tensor_bessel(&alpha, &[PI, PI], &[1.0, 1.0]).unwrap().abs() < 1e-15);
        assert_eq!(tensor_bessel(&alpha, &[3.0, 7.0], &[0.0, 0.0]).unwrap(), 1.0);
        let a1 = Alpha::new(vec![0.0]).unwrap();
        let v = tensor_bessel(&a1, &[1.0], &[2.0]).unwrap();
        let o = normalized_bessel_series_oracle(order(0.0), 2.0, 60).unwrap();
        assert!((v - o).abs() < 1e-15);
        assert!(tensor_bessel(&alpha, &[1.0], &[1.0, 1.0]).is_err());
    }
}
