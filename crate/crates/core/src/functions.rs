//! Closed-form radial test functions with known transforms.
//!
//! A radial function f(‖x‖) on R_+^n transforms like a one-dimensional
//! Hankel transform of order ν = |α| + n − 1 in the radius, which is how
//! the closed forms below are obtained.

use serde::{Deserialize, Serialize};

use crate::error::{PaxError, Result};
use crate::grid::{Alpha, Field, TensorGrid};
use crate::special::{j_unchecked, ln_gamma};
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum TestFunction {
    /// e^{-t²‖x‖²/2}
    Gaussian { t: f64 },
    /// (1 − ‖x‖²/a²)_+^b
    Bump { a: f64, b: f64 },
    /// L_k^ν(‖x‖²) e^{-‖x‖²/2}; an eigenfunction of F_α with eigenvalue (−1)^k.
    HermiteGaussian { k: u32 },
}

impl TestFunction {
    pub fn validate(&self) -> Result<()> {
        match *self {
            TestFunction::Gaussian { t } if !(t > 0.0 && t.is_finite()) => {
                Err(PaxError::domain(format!("gaussian needs t > 0, got {t}")))
            }
            TestFunction::Bump { a, b } if !(a > 0.0 && a.is_finite() && b >= 1.0 && b.is_finite()) => Err(
                PaxError::domain(format!("bump needs a > 0 and b >= 1, got a={a}, b={b}")),
            ),
            TestFunction::HermiteGaussian { k } if k > 40 => {
                Err(PaxError::domain(format!("hermite_gaussian degree {k} exceeds 40")))
            }
            _ => Ok(()),
        }
    }

    pub fn eval(&self, alpha: &Alpha, x: &[f64]) -> f64 {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        match *self {
            TestFunction::Gaussian { t } => (-0.5 * t * t * r2).exp(),
            TestFunction::Bump { a, b } => {
                let u = 1.0 - r2 / (a * a);
                if u > 0.0 {
                    u.powf(b)
                } else {
                    0.0
                }
            }
            TestFunction::HermiteGaussian { k } => laguerre(k, radial_order(alpha), r2) * (-0.5 * r2).exp(),
        }
    }

    /// F_α f at λ.
    pub fn transform(&self, alpha: &Alpha, lambda: &[f64]) -> f64 {
        let l2: f64 = lambda.iter().map(|v| v * v).sum();
        let nu = radial_order(alpha);
        match *self {
            TestFunction::Gaussian { t } => t.powf(-alpha.scaling_degree()) * (-0.5 * l2 / (t * t)).exp(),
            TestFunction::Bump { a, b } => {
                let mu = nu + b + 1.0;
                let scale = ((2.0 * nu + 2.0) * a.ln() + ln_gamma(b + 1.0)
                    - (nu + 1.0) * std::f64::consts::LN_2
                    - ln_gamma(nu + b + 2.0))
                .exp();
                scale * j_unchecked(mu, a * l2.sqrt())
            }
            TestFunction::HermiteGaussian { k } => {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                sign * laguerre(k, nu, l2) * (-0.5 * l2).exp()
            }
        }
    }

    pub fn sample(&self, grid: &Arc<TensorGrid>) -> Field {
        let alpha = grid.alpha().clone();
        Field::from_real_fn(grid.clone(), |x| self.eval(&alpha, x))
    }

    pub fn sample_transform(&self, grid: &Arc<TensorGrid>) -> Field {
        let alpha = grid.alpha().clone();
        Field::from_real_fn(grid.clone(), |x| self.transform(&alpha, x))
    }
}

fn radial_order(alpha: &Alpha) -> f64 {
    alpha.abs_alpha() + alpha.dim() as f64 - 1.0
}

/// Generalized Laguerre polynomial L_k^a(x) by the three-term recurrence.
pub fn laguerre(k: u32, a: f64, x: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, 1.0 + a - x);
    if k == 0 {
        return prev;
    }
    for j in 1..k {
        let j = j as f64;
        let next = ((2.0 * j + 1.0 + a - x) * cur - (j + a) * prev) / (j + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::AxisRule;
    use crate::transform::TransformPlan;

    fn plan(orders: Vec<f64>, r: f64, n: usize) -> TransformPlan {
        let g = TensorGrid::uniform(Alpha::new(orders).unwrap(), r, n, AxisRule::GaussJacobi).unwrap();
        TransformPlan::new(Arc::new(g))
    }

    #[test]
    fn laguerre_low_degrees() {
        let (a, x) = (0.7, 1.3);
        assert!((laguerre(1, a, x) - (1.0 + a - x)).abs() < 1e-15);
        let l2 = 0.5 * (x * x - 2.0 * (a + 2.0) * x + (a + 1.0) * (a + 2.0));
        assert!((laguerre(2, a, x) - l2).abs() < 1e-14);
    }

    #[test]
    fn closed_forms_match_quadrature() {
        for orders in [vec![0.0], vec![1.5], vec![0.5, 0.25]] {
            let p = plan(orders.clone(), 12.0, 96);
            let alpha = Alpha::new(orders).unwrap();
            for tf in [
                TestFunction::Gaussian { t: 1.3 },
                TestFunction::HermiteGaussian { k: 1 },
                TestFunction::HermiteGaussian { k: 4 },
            ] {
                let got = p.forward(&tf.sample(p.input_grid())).unwrap();
                let want = tf.sample_transform(p.output_grid());
                assert!(got.max_abs_diff(&want).unwrap() < 1e-9, "{tf:?} {alpha:?}");
            }
        }
    }

    #[test]
    fn bump_transform_at_origin_and_off() {
        let g = Arc::new(TensorGrid::from_specs(
            Alpha::new(vec![0.5]).unwrap(),
            vec![crate::grid::AxisSpec {
                order: 0.5,
                radius: 6.0,
                nodes: 48,
                rule: AxisRule::GaussJacobi,
                breaks: vec![2.0],
            }],
        )
        .unwrap());
        let tf = TestFunction::Bump { a: 2.0, b: 3.0 };
        let f = tf.sample(&g);
        for lam in [0.0, 0.8, 3.1, 7.5] {
            let got = crate::transform::transform_at(&f, &[lam]).unwrap().re;
            let want = tf.transform(g.alpha(), &[lam]);
            assert!((got - want).abs() < 1e-12, "{lam}: {got} vs {want}");
        }
    }
}
