//! Gauss–Jacobi rules via Golub–Welsch.
//!
//! The Jacobi matrix is diagonalized with implicit QL; only the first
//! component of each eigenvector is carried through the rotations, which is
//! all the weights need and keeps construction at O(N²).

use crate::error::{PaxError, Result};
use crate::special::ln_gamma;

/// Nodes in ascending order with their weights.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    /// Affine map of a rule on [-1, 1] to [lo, hi]; weights pick up `scale_pow`
    /// powers of the half-length (1 for a plain dt, more when the weight
    /// function is rescaled as well).
    pub fn mapped(&self, lo: f64, hi: f64, scale_pow: f64) -> GaussRule {
        let half = 0.5 * (hi - lo);
        let factor = half.powf(scale_pow);
        GaussRule {
            nodes: self.nodes.iter().map(|t| lo + half * (1.0 + t)).collect(),
            weights: self.weights.iter().map(|w| w * factor).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Gauss rule for ∫_{-1}^{1} f(t) (1-t)^a (1+t)^b dt.
pub fn gauss_jacobi(n: usize, a: f64, b: f64) -> Result<GaussRule> {
    if n == 0 {
        return Err(PaxError::domain("Gauss rule needs at least one node"));
    }
    if !(a > -1.0 && b > -1.0) {
        return Err(PaxError::domain(format!(
            "Jacobi exponents must exceed -1, got a={a}, b={b}"
        )));
    }
    let ab = a + b;
    let mut diag = vec![0.0; n];
    let mut off = vec![0.0; n];
    diag[0] = (b - a) / (ab + 2.0);
    for k in 1..n {
        let kf = k as f64;
        let s = 2.0 * kf + ab;
        diag[k] = (b * b - a * a) / (s * (s + 2.0));
        let beta = if k == 1 {
            4.0 * (1.0 + a) * (1.0 + b) / ((2.0 + ab).powi(2) * (3.0 + ab))
        } else {
            4.0 * kf * (kf + a) * (kf + b) * (kf + ab) / (s * s * (s + 1.0) * (s - 1.0))
        };
        off[k - 1] = beta.sqrt();
    }
    let mu0 = ((ab + 1.0) * std::f64::consts::LN_2 + ln_gamma(a + 1.0) + ln_gamma(b + 1.0)
        - ln_gamma(ab + 2.0))
    .exp();

    let first = symmetric_tridiagonal_ql(&mut diag, &mut off)?;
    let mut pairs: Vec<(f64, f64)> = diag
        .into_iter()
        .zip(first)
        .map(|(x, z)| (x, mu0 * z * z))
        .collect();
    pairs.sort_by(|p, q| p.0.total_cmp(&q.0));
    Ok(GaussRule {
        nodes: pairs.iter().map(|p| p.0).collect(),
        weights: pairs.iter().map(|p| p.1).collect(),
    })
}

pub fn gauss_legendre(n: usize) -> Result<GaussRule> {
    gauss_jacobi(n, 0.0, 0.0)
}

/// Eigenvalues (in `d`) and first eigenvector components of the symmetric
/// tridiagonal matrix with diagonal `d` and off-diagonal `e[0..n-1]`.
fn symmetric_tridiagonal_ql(d: &mut [f64], e: &mut [f64]) -> Result<Vec<f64>> {
    let n = d.len();
    let mut z = vec![0.0; n];
    z[0] = 1.0;
    if n == 1 {
        return Ok(z);
    }
    e[n - 1] = 0.0;
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m < n - 1 {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 100 {
                return Err(PaxError::domain("tridiagonal QL failed to converge"));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut underflow = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let bb = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * bb;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - bb;
                let zf = z[i + 1];
                z[i + 1] = s * z[i] + c * zf;
                z[i] = c * z[i] - s * zf;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(z)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_five_point_nodes() {
        let r = gauss_legendre(5).unwrap();
        let expected = [
            -0.906_179_845_938_664,
            -0.538_469_310_105_683,
            0.0,
            0.538_469_310_105_683,
            0.906_179_845_938_664,
        ];
        for (x, e) in r.nodes.iter().zip(expected) {
            assert!((x - e).abs() < 1e-14);
        }
        assert!((r.weights[2] - 128.0 / 225.0).abs() < 1e-14);
    }

    #[test]
    fn jacobi_integrates_polynomials_exactly() {
        // ∫_{-1}^{1} (1+t)^{b+k} dt = 2^{b+k+1}/(b+k+1)
        for &b in &[0.5, 1.4, 2.0, 5.3] {
            let n = 12;
            let r = gauss_jacobi(n, 0.0, b).unwrap();
            for k in 0..(2 * n) {
                let num: f64 = r
                    .nodes
                    .iter()
                    .zip(&r.weights)
                    .map(|(t, w)| w * (1.0 + t).powi(k as i32))
                    .sum();
                let exact = 2f64.powf(b + k as f64 + 1.0) / (b + k as f64 + 1.0);
                assert!(((num - exact) / exact).abs() < 1e-12, "b={b} k={k}");
            }
        }
    }

    #[test]
    fn symmetric_weight_total_mass() {
        // ∫ (1-t²)^{a} dt = √π Γ(a+1)/Γ(a+3/2)
        for &a in &[-0.45, -0.2, 0.0, 0.5, 1.7] {
            let r = gauss_jacobi(40, a, a).unwrap();
            let total: f64 = r.weights.iter().sum();
            let exact = (0.5 * std::f64::consts::PI.ln() + ln_gamma(a + 1.0) - ln_gamma(a + 1.5)).exp();
            assert!((total - exact).abs() < 1e-13 * exact, "a={a}");
        }
    }

    #[test]
    fn large_rule_is_sorted_and_positive() {
        let r = gauss_jacobi(1024, 0.0, 1.0).unwrap();
        assert!(r.nodes.windows(2).all(|w| w[0] < w[1]));
        assert!(r.weights.iter().all(|&w| w > 0.0));
        let total: f64 = r.weights.iter().sum();
        assert!((total - 2.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(gauss_jacobi(0, 0.0, 0.0).is_err());
        assert!(gauss_jacobi(4, -1.0, 0.0).is_err());
    }
}
