//! Scale-dilated multiplier operators T_σ f = F_α^{-1}(m(σ·) F_α f).

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{PaxError, Result};
use crate::grid::{norm_p, Field, Norm, ScaleField, ScaleGrid, TensorGrid};
use crate::interp::{Evaluate, Extension, FieldInterpolator, InterpKind};
use crate::special::{j_unchecked, ln_gamma};
use crate::transform::{transform_at, TransformPlan};
use crate::translation::{convolve, AngularRule, TranslationOptions};

/// Tolerance on |∫|m_σ|² dσ/σ − 1| below which a multiplier counts as admissible.
pub const ADMISSIBILITY_TOL: f64 = 1e-3;

/// Radial profiles g with m(λ) = g(‖λ‖).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "profile", rename_all = "snake_case")]
pub enum Profile {
    /// g(t) = c t^p e^{-t²}
    GaussianRay { c: f64, p: f64 },
    /// 1 on a ≤ t ≤ b
    IndicatorAnnulus { a: f64, b: f64 },
    Constant { c: f64 },
}

impl Profile {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Profile::GaussianRay { c, p } if !(c.is_finite() && p.is_finite() && p >= 0.0) => Err(
                PaxError::domain(format!("gaussian_ray needs finite c and p >= 0, got c={c}, p={p}")),
            ),
            Profile::IndicatorAnnulus { a, b } if !(a >= 0.0 && b > a && b.is_finite()) => Err(
                PaxError::domain(format!("indicator_annulus needs 0 <= a < b, got [{a}, {b}]")),
            ),
            Profile::Constant { c } if !c.is_finite() => Err(PaxError::domain("constant must be finite")),
            _ => Ok(()),
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            Profile::GaussianRay { c, p } => {
                if p == 0.0 {
                    c * (-t * t).exp()
                } else {
                    c * t.powf(p) * (-t * t).exp()
                }
            }
            Profile::IndicatorAnnulus { a, b } => {
                if (a..=b).contains(&t) {
                    1.0
                } else {
                    0.0
                }
            }
            Profile::Constant { c } => c,
        }
    }

    /// ∫₀^∞ |g(t)|² dt/t in closed form (may be infinite).
    pub fn admissibility_integral(&self) -> f64 {
        match *self {
            Profile::GaussianRay { c, p } => {
                if c == 0.0 {
                    0.0
                } else if p <= 0.0 {
                    f64::INFINITY
                } else {
                    c * c * (ln_gamma(p) - (p + 1.0) * std::f64::consts::LN_2).exp()
                }
            }
            Profile::IndicatorAnnulus { a, b } => {
                if a > 0.0 {
                    (b / a).ln()
                } else {
                    f64::INFINITY
                }
            }
            Profile::Constant { c } => {
                if c == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
        }
    }
}

/// The symbol m: a radial profile or samples on the spectral grid.
#[derive(Debug, Clone)]
pub enum Multiplier {
    Radial(Profile),
    Samples(Box<FieldInterpolator>),
}

impl Multiplier {
    pub fn radial(p: Profile) -> Result<Self> {
        p.validate()?;
        Ok(Multiplier::Radial(p))
    }

    /// Sampled symbol; off-grid values by tensor cubic interpolation, zero past the radius.
    pub fn samples(field: Field) -> Self {
        Multiplier::Samples(Box::new(FieldInterpolator::new(&field, InterpKind::Cubic, Extension::Zero)))
    }

    pub fn is_radial(&self) -> bool {
        matches!(self, Multiplier::Radial(_))
    }

    pub fn eval(&self, lambda: &[f64]) -> Result<Complex64> {
        match self {
            Multiplier::Radial(p) => {
                let r = lambda.iter().map(|v| v * v).sum::<f64>().sqrt();
                Ok(Complex64::new(p.eval(r), 0.0))
            }
            Multiplier::Samples(s) => s.eval(lambda),
        }
    }

    /// m_σ = m(σ ·).
    pub fn dilate(&self, sigma: f64) -> Result<Dilated<'_>> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(PaxError::domain(format!("dilation needs sigma > 0, got {sigma}")));
        }
        if let Multiplier::Samples(s) = self {
            if sigma != 1.0 {
                let radii: Vec<f64> = s.field().grid().axes().iter().map(|a| a.radius() / sigma).collect();
                log::warn!(
                    "dilated sampled multiplier is interpolated and clamped to zero beyond {radii:?}"
                );
            }
        }
        Ok(Dilated { m: self, sigma })
    }

    /// Values of m_σ at the points of `grid`; exact samples when no interpolation is needed.
    pub fn samples_on(&self, grid: &Arc<TensorGrid>, sigma: f64) -> Result<Vec<Complex64>> {
        if let Multiplier::Samples(s) = self {
            if sigma == 1.0 && s.field().grid().same_layout(grid) {
                return Ok(s.field().values().to_vec());
            }
        }
        let d = self.dilate(sigma)?;
        (0..grid.len()).map(|i| d.eval(&grid.point(i))).collect()
    }

    /// ‖m‖_{α,1} on the given spectral grid.
    pub fn l1_norm(&self, grid: &Arc<TensorGrid>) -> Result<f64> {
        let f = Field::new(grid.clone(), self.samples_on(grid, 1.0)?)?;
        Ok(norm_p(&f, Norm::L1))
    }
}

pub struct Dilated<'a> {
    m: &'a Multiplier,
    sigma: f64,
}

impl Evaluate for Dilated<'_> {
    fn eval(&self, x: &[f64]) -> Result<Complex64> {
        let p: Vec<f64> = x.iter().map(|v| v * self.sigma).collect();
        self.m.eval(&p)
    }
}

/// Truncated ∫|m(σx)|² dσ/σ along each ray, with tail estimates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdmissibilityReport {
    pub rays: Vec<Vec<f64>>,
    pub values: Vec<f64>,
    pub max_deviation: f64,
    /// Largest estimated mass outside [σ_min, σ_max] over the rays.
    pub tail_estimate: f64,
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub nodes: usize,
    /// Closed-form ∫|g|² dt/t for radial profiles.
    pub profile_integral: Option<f64>,
    pub radial: bool,
    pub admissible: bool,
    pub note: String,
}

/// Rays along each axis plus the normalized diagonal.
pub fn default_rays(n: usize) -> Vec<Vec<f64>> {
    let mut rays: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|k| if k == i { 1.0 } else { 0.0 }).collect())
        .collect();
    if n > 1 {
        rays.push(vec![1.0 / (n as f64).sqrt(); n]);
    }
    rays
}

/// Geometric tail mass beyond the end of a log-uniform sample h_0, h_1, …
fn tail(h_end: f64, h_prev: f64, step: f64) -> f64 {
    if h_end == 0.0 {
        return 0.0;
    }
    let rate = (h_prev / h_end).ln() / step;
    if rate > 0.0 && rate.is_finite() {
        h_end / rate
    } else {
        f64::INFINITY
    }
}

pub fn check_admissibility(m: &Multiplier, scales: &ScaleGrid, rays: &[Vec<f64>]) -> Result<AdmissibilityReport> {
    if rays.is_empty() {
        return Err(PaxError::domain("admissibility needs at least one ray"));
    }
    let mut values = Vec::with_capacity(rays.len());
    let mut worst_tail: f64 = 0.0;
    for ray in rays {
        if ray.iter().all(|&v| v == 0.0) || ray.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(PaxError::domain(format!("invalid ray {ray:?}")));
        }
        let h: Vec<f64> = scales
            .nodes()
            .iter()
            .map(|&s| {
                let p: Vec<f64> = ray.iter().map(|v| v * s).collect();
                m.eval(&p).map(|z| z.norm_sqr())
            })
            .collect::<Result<_>>()?;
        let v: f64 = h.iter().zip(scales.log_weights()).map(|(a, w)| a * w).sum();
        let k = h.len();
        let step = scales.log_weights()[0];
        let t = if k < 2 {
            f64::INFINITY
        } else {
            tail(h[0], h[1], step) + tail(h[k - 1], h[k - 2], step)
        };
        worst_tail = worst_tail.max(t);
        values.push(v);
    }
    let max_deviation = values.iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max);
    let profile_integral = match m {
        Multiplier::Radial(p) => Some(p.admissibility_integral()),
        Multiplier::Samples(_) => None,
    };
    let admissible = max_deviation <= ADMISSIBILITY_TOL && worst_tail <= ADMISSIBILITY_TOL;
    let note = if m.is_radial() {
        "radial profile: the integral does not depend on the ray".to_string()
    } else {
        format!("sampled symbol: checked on {} supplied rays only", rays.len())
    };
    Ok(AdmissibilityReport {
        rays: rays.to_vec(),
        values,
        max_deviation,
        tail_estimate: worst_tail,
        sigma_min: scales.sigma_min(),
        sigma_max: scales.sigma_max(),
        nodes: scales.len(),
        profile_integral,
        radial: m.is_radial(),
        admissible,
        note,
    })
}

/// Admissibility on the default rays, as an error when it fails.
pub fn require_admissible(m: &Multiplier, scales: &ScaleGrid, n: usize) -> Result<AdmissibilityReport> {
    let report = check_admissibility(m, scales, &default_rays(n))?;
    if report.admissible {
        Ok(report)
    } else {
        Err(PaxError::NotAdmissible(Box::new(report)))
    }
}

fn check_sigma(sigma: f64) -> Result<()> {
    if sigma.is_finite() && sigma > 0.0 {
        Ok(())
    } else {
        Err(PaxError::domain(format!("sigma must be positive, got {sigma}")))
    }
}

fn spectral_with(ff: &Field, m: &Multiplier, sigma: f64, plan: &TransformPlan) -> Result<Field> {
    let ms = m.samples_on(plan.output_grid(), sigma)?;
    let mut g = ff.clone();
    for (v, s) in g.values_mut().iter_mut().zip(&ms) {
        *v *= s;
    }
    plan.inverse(&g)
}

/// F_α^{-1}(m_σ · F_α f).
pub fn apply_spectral(f: &Field, m: &Multiplier, sigma: f64, plan: &TransformPlan) -> Result<Field> {
    check_sigma(sigma)?;
    let ff = plan.forward(f)?;
    spectral_with(&ff, m, sigma, plan)
}

/// F_α^{-1}(m) sampled on the spectral grid, evaluable anywhere.
pub struct InverseKernel {
    symbol: Field,
    degree: f64,
}

impl InverseKernel {
    /// Kernel of m_σ computed from samples of m_σ itself.
    pub fn new(m: &Multiplier, sigma: f64, plan: &TransformPlan) -> Result<Self> {
        check_sigma(sigma)?;
        let grid = plan.output_grid().clone();
        let values = m.samples_on(&grid, sigma)?;
        Ok(InverseKernel {
            degree: grid.alpha().scaling_degree(),
            symbol: Field::new(grid, values)?,
        })
    }

    pub fn at(&self, y: &[f64]) -> Result<Complex64> {
        transform_at(&self.symbol, y)
    }

    /// σ^{-D} k(y/σ) with D = 2|α| + 2n, the kernel of m_σ obtained by rescaling this one.
    pub fn dilated_at(&self, sigma: f64, y: &[f64]) -> Result<Complex64> {
        check_sigma(sigma)?;
        let p: Vec<f64> = y.iter().map(|v| v / sigma).collect();
        Ok(self.at(&p)? * sigma.powf(-self.degree))
    }

    pub fn sample(&self, sigma: f64, grid: &Arc<TensorGrid>) -> Result<Field> {
        let values = (0..grid.len())
            .into_par_iter()
            .map(|i| self.dilated_at(sigma, &grid.point(i)))
            .collect::<Result<Vec<_>>>()?;
        Field::new(grid.clone(), values)
    }
}

/// F_α^{-1}(m_σ) *_α f through the translation operator.
pub fn apply_convolution(
    f: &Field,
    m: &Multiplier,
    sigma: f64,
    plan: &TransformPlan,
    rule: &AngularRule,
    opts: &TranslationOptions,
) -> Result<Field> {
    check_sigma(sigma)?;
    let kernel = InverseKernel::new(m, 1.0, plan)?.sample(sigma, f.grid())?;
    convolve(f, &kernel, rule, opts)
}

fn tensor_j(orders: &[f64], a: &[f64], b: &[f64], scale: f64) -> f64 {
    orders
        .iter()
        .zip(a.iter().zip(b))
        .map(|(&nu, (&p, &q))| j_unchecked(nu, p * q * scale))
        .product()
}

/// Θ_α(y, λ) = ∫ m(x) Π j_{α_i}(x_i λ_i/σ) Π j_{α_i}(x_i y_i/σ) dμ_α(x) over the spectral grid.
pub fn theta_kernel(y: &[f64], lambda: &[f64], m: &Multiplier, sigma: f64, plan: &TransformPlan) -> Result<Complex64> {
    check_sigma(sigma)?;
    let grid = plan.output_grid();
    if y.len() != grid.dim() || lambda.len() != grid.dim() {
        return Err(PaxError::domain("theta kernel arguments must match the grid dimension"));
    }
    let ms = m.samples_on(grid, 1.0)?;
    let orders = grid.alpha().orders();
    let inv = 1.0 / sigma;
    let mut x = vec![0.0; grid.dim()];
    let mut acc = Complex64::new(0.0, 0.0);
    for (i, (v, w)) in ms.iter().zip(grid.weights()).enumerate() {
        grid.point_into(i, &mut x);
        acc += v * (w * tensor_j(orders, &x, lambda, inv) * tensor_j(orders, &x, y, inv));
    }
    Ok(acc)
}

/// σ^{-D} ∫ Θ_α(y, λ) φ(y) dμ_α(y), D = 2|α| + 2n, at every point λ of φ's grid.
pub fn apply_theta(phi: &Field, m: &Multiplier, sigma: f64, plan: &TransformPlan) -> Result<Field> {
    check_sigma(sigma)?;
    let grid = phi.grid().clone();
    let spec = plan.output_grid();
    let ms = m.samples_on(spec, 1.0)?;
    let orders = grid.alpha().orders().to_vec();
    let inv = 1.0 / sigma;
    let ys: Vec<Vec<f64>> = grid.points().collect();
    let xs: Vec<Vec<f64>> = spec.points().collect();
    // J[x][y] = Π j(x_i y_i / σ)
    let jmat: Vec<Vec<f64>> = xs
        .par_iter()
        .map(|x| ys.iter().map(|y| tensor_j(&orders, x, y, inv)).collect())
        .collect();
    let wm: Vec<Complex64> = ms.iter().zip(spec.weights()).map(|(v, w)| v * w).collect();
    let wphi: Vec<Complex64> = phi.values().iter().zip(grid.weights()).map(|(v, w)| v * w).collect();
    let scale = sigma.powf(-grid.alpha().scaling_degree());
    let values: Vec<Complex64> = (0..ys.len())
        .into_par_iter()
        .map(|l| {
            // Θ(y, λ_l) for every y, then integrate against φ
            let mut acc = Complex64::new(0.0, 0.0);
            for (y, wp) in wphi.iter().enumerate() {
                let theta = jmat
                    .iter()
                    .zip(&wm)
                    .fold(Complex64::new(0.0, 0.0), |t, (row, w)| t + w * (row[l] * row[y]));
                acc += theta * wp;
            }
            acc * scale
        })
        .collect();
    Field::new(grid, values)
}

/// σ ↦ T_σ f at every node of the scale grid.
pub fn apply_scale_family(f: &Field, m: &Multiplier, scales: &ScaleGrid, plan: &TransformPlan) -> Result<ScaleField> {
    let ff = plan.forward(f)?;
    let slices = scales
        .nodes()
        .par_iter()
        .map(|&s| spectral_with(&ff, m, s, plan))
        .collect::<Result<Vec<_>>>()?;
    ScaleField::new(scales.clone(), slices)
}

/// | ∫‖T_σ f‖² dσ/σ − ‖f‖² | / ‖f‖².
pub fn calderon_isometry_defect(f: &Field, m: &Multiplier, scales: &ScaleGrid, plan: &TransformPlan) -> Result<f64> {
    let nf = norm_p(f, Norm::L2).powi(2);
    if nf == 0.0 {
        return Err(PaxError::ZeroNorm("input field"));
    }
    let report = check_admissibility(m, scales, &default_rays(f.grid().dim()))?;
    if !report.admissible {
        log::warn!(
            "isometry defect requested for a non-admissible multiplier (deviation {:.3e})",
            report.max_deviation
        );
    }
    let family = apply_scale_family(f, m, scales, plan)?;
    let total = family.weighted_norm_sq(|_| 1.0, |_| true);
    Ok((total - nf).abs() / nf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Alpha, AxisRule};

    fn plan(orders: Vec<f64>, r: f64, n: usize) -> TransformPlan {
        TransformPlan::new(Arc::new(
            TensorGrid::uniform(Alpha::new(orders).unwrap(), r, n, AxisRule::GaussJacobi).unwrap(),
        ))
    }

    fn wavelet() -> Multiplier {
        Multiplier::radial(Profile::GaussianRay { c: 2.0, p: 1.0 }).unwrap()
    }

    #[test]
    fn dilation() {
        let m = wavelet();
        let v = m.dilate(2.0).unwrap().eval(&[0.6, 0.8]).unwrap().re;
        assert!((v - 4.0 * (-4f64).exp()).abs() < 1e-15);
        assert_eq!(m.dilate(1.0).unwrap().eval(&[0.3]).unwrap(), m.eval(&[0.3]).unwrap());
        assert!(m.dilate(0.0).is_err());
        assert!(m.dilate(-1.0).is_err());
    }

    #[test]
    fn admissibility_values() {
        let scales = ScaleGrid::log_uniform(1e-4, 1e2, 400).unwrap();
        let r = check_admissibility(&wavelet(), &scales, &[vec![1.0]]).unwrap();
        assert!(r.max_deviation < 1e-6 && r.admissible);
        assert!((r.profile_integral.unwrap() - 1.0).abs() < 1e-14);

        let half = Multiplier::radial(Profile::GaussianRay { c: 1.0, p: 1.0 }).unwrap();
        let r = check_admissibility(&half, &scales, &[vec![1.0]]).unwrap();
        assert!((r.values[0] - 0.25).abs() < 1e-6 && !r.admissible);

        let one = Multiplier::radial(Profile::Constant { c: 1.0 }).unwrap();
        let r = check_admissibility(&one, &scales, &[vec![1.0]]).unwrap();
        assert!((r.values[0] - 1e6f64.ln()).abs() < 1e-9);
        assert!(!r.admissible && r.tail_estimate.is_infinite());

        assert!(check_admissibility(&one, &scales, &[vec![0.0]]).is_err());
    }

    #[test]
    fn spectral_identity_and_zero() {
        let p = plan(vec![0.0], 10.0, 96);
        let f = Field::from_real_fn(p.input_grid().clone(), |x| (-0.5 * x[0] * x[0]).exp());
        let one = Multiplier::radial(Profile::Constant { c: 1.0 }).unwrap();
        let zero = Multiplier::radial(Profile::Constant { c: 0.0 }).unwrap();
        assert!(apply_spectral(&f, &one, 3.0, &p).unwrap().max_abs_diff(&f).unwrap() < 1e-6);
        assert!(apply_spectral(&f, &zero, 1.0, &p).unwrap().is_zero());
    }

    #[test]
    fn theta_symmetry_and_origin() {
        let p = plan(vec![0.5], 10.0, 64);
        let m = wavelet();
        let a = theta_kernel(&[0.4], &[1.7], &m, 1.3, &p).unwrap();
        let b = theta_kernel(&[1.7], &[0.4], &m, 1.3, &p).unwrap();
        assert!((a - b).norm() < 1e-12);
        let o = theta_kernel(&[0.0], &[0.0], &m, 1.0, &p).unwrap();
        let f = Field::new(p.output_grid().clone(), m.samples_on(p.output_grid(), 1.0).unwrap()).unwrap();
        assert!((o - crate::grid::integrate_mu(&f)).norm() < 1e-14);
    }

    #[test]
    fn scale_rescaling_of_inverse_kernel() {
        let p = plan(vec![0.5], 10.0, 96);
        let m = wavelet();
        let k1 = InverseKernel::new(&m, 1.0, &p).unwrap();
        let k2 = InverseKernel::new(&m, 2.0, &p).unwrap();
        for y in [0.1, 0.7, 1.5, 3.0] {
            let a = k2.at(&[y]).unwrap();
            let b = k1.dilated_at(2.0, &[y]).unwrap();
            assert!((a - b).norm() < 1e-6, "y={y}: {a} vs {b}");
        }
    }
}
