//! Generalized translation T_x^α and the Bessel convolution.
//!
//! On a sampled field translation is linear, and with tensor interpolation it
//! factorizes: T_x f(y) = Σ_j Π_i M_i(x_i)[y_i, j_i] f_j. Each per-axis matrix
//! M_i(x_i) is built once from the angular (or kernel) rule and the axis
//! interpolation weights, then applied like a transform kernel.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{PaxError, Result};
use crate::grid::{Alpha, Field, TensorGrid};
use crate::interp::{Evaluate, Extension, GridInterpolator, InterpKind};
use crate::quadrature::{gauss_jacobi, GaussRule};
use crate::special::ln_gamma;

/// Γ(a+1) / (√π Γ(a+1/2)).
pub fn c_prime_axis(a: f64) -> f64 {
    (ln_gamma(a + 1.0) - 0.5 * PI.ln() - ln_gamma(a + 0.5)).exp()
}

/// c'_α = Π_i c'_{α_i}.
pub fn c_prime(alpha: &Alpha) -> f64 {
    alpha.orders().iter().map(|&a| c_prime_axis(a)).product()
}

/// Per-axis rules in u = cos θ whose weights realize c'_{α_i} sin^{2α_i}θ dθ.
#[derive(Debug, Clone, PartialEq)]
pub struct AngularRule {
    axes: Vec<GaussRule>,
}

impl AngularRule {
    /// Gauss–Jacobi in u with exponents α_i − 1/2 at both ends.
    pub fn gauss_jacobi(alpha: &Alpha, nodes: usize) -> Result<Self> {
        let axes = alpha
            .orders()
            .iter()
            .map(|&a| {
                let mut r = gauss_jacobi(nodes, a - 0.5, a - 0.5)?;
                let c = c_prime_axis(a);
                r.weights.iter_mut().for_each(|w| *w *= c);
                Ok(r)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(AngularRule { axes })
    }

    /// Composite midpoint rule in θ, renormalized to unit mass.
    pub fn midpoint(alpha: &Alpha, nodes: usize) -> Result<Self> {
        if nodes == 0 {
            return Err(PaxError::domain("angular rule needs at least one node"));
        }
        let h = PI / nodes as f64;
        let axes = alpha
            .orders()
            .iter()
            .map(|&a| {
                let thetas: Vec<f64> = (0..nodes).map(|k| (k as f64 + 0.5) * h).collect();
                let raw: Vec<f64> = thetas.iter().map(|t| t.sin().powf(2.0 * a) * h).collect();
                let total: f64 = raw.iter().sum();
                let mut pairs: Vec<(f64, f64)> = thetas
                    .iter()
                    .zip(raw)
                    .map(|(t, w)| (t.cos(), w / total))
                    .collect();
                pairs.sort_by(|p, q| p.0.total_cmp(&q.0));
                GaussRule {
                    nodes: pairs.iter().map(|p| p.0).collect(),
                    weights: pairs.iter().map(|p| p.1).collect(),
                }
            })
            .collect();
        Ok(AngularRule { axes })
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axis(&self, i: usize) -> &GaussRule {
        &self.axes[i]
    }

    /// Mass of the product rule; 1 up to rounding.
    pub fn total_weight(&self) -> f64 {
        self.axes.iter().map(|r| r.weights.iter().sum::<f64>()).product()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranslationOptions {
    pub interp: InterpKind,
    pub extension: Extension,
    /// Nodes per axis of the kernel-form rule.
    pub kernel_nodes: usize,
}

impl Default for TranslationOptions {
    fn default() -> Self {
        TranslationOptions {
            interp: InterpKind::Barycentric,
            extension: Extension::Zero,
            kernel_nodes: 64,
        }
    }
}

/// sqrt(x² + y² − 2xy u), written to avoid cancellation near u = 1.
#[inline]
fn shifted_radius(x: f64, y: f64, u: f64) -> f64 {
    ((x - y).powi(2) + 2.0 * x * y * (1.0 - u)).max(0.0).sqrt()
}

/// (X, weight) pairs of one axis for the pair (x_i, y_i).
fn axis_samples(rule: &GaussRule, x: f64, y: f64) -> Vec<(f64, f64)> {
    if x == 0.0 || y == 0.0 {
        return vec![(x + y, 1.0)];
    }
    rule.nodes
        .iter()
        .zip(&rule.weights)
        .map(|(&u, &w)| (shifted_radius(x, y, u), w))
        .collect()
}

fn check_point(x: &[f64], n: usize) -> Result<()> {
    if x.len() != n {
        return Err(PaxError::domain(format!(
            "point has {} coordinates, expected {n}",
            x.len()
        )));
    }
    if x.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(PaxError::domain(format!("point {x:?} must lie in the closed positive orthant")));
    }
    Ok(())
}

/// T_x^α f(y) for any evaluable f, by the angular product rule.
pub fn translate_at<F: Evaluate + ?Sized>(f: &F, x: &[f64], y: &[f64], rule: &AngularRule) -> Result<Complex64> {
    let n = rule.dim();
    check_point(x, n)?;
    check_point(y, n)?;
    let samples: Vec<Vec<(f64, f64)>> = (0..n).map(|i| axis_samples(rule.axis(i), x[i], y[i])).collect();
    let mut idx = vec![0usize; n];
    let mut p = vec![0.0; n];
    let mut acc = Complex64::new(0.0, 0.0);
    loop {
        let mut w = 1.0;
        for i in 0..n {
            let (xi, wi) = samples[i][idx[i]];
            p[i] = xi;
            w *= wi;
        }
        acc += f.eval(&p)? * w;
        let mut k = n;
        loop {
            if k == 0 {
                return Ok(acc);
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < samples[k].len() {
                break;
            }
            idx[k] = 0;
        }
    }
}

/// T_x^α f evaluated at every point of `targets`.
pub fn translate_angular<F: Evaluate + ?Sized>(
    f: &F,
    x: &[f64],
    targets: &Arc<TensorGrid>,
    rule: &AngularRule,
) -> Result<Field> {
    let values = (0..targets.len())
        .into_par_iter()
        .map(|i| translate_at(f, x, &targets.point(i), rule))
        .collect::<Result<Vec<_>>>()?;
    Field::new(targets.clone(), values)
}

/// Row-major square matrix acting along one axis.
struct AxisOperator {
    n: usize,
    data: Vec<f64>,
}

fn accumulate_basis(
    interp: &GridInterpolator,
    axis: usize,
    samples: &[(f64, f64)],
    ext: Extension,
    row: &mut [f64],
    scratch: &mut Vec<(usize, f64)>,
) -> Result<()> {
    for &(xs, w) in samples {
        if !interp.axis_basis(axis, xs, scratch) {
            match ext {
                Extension::Zero => continue,
                Extension::Error => {
                    return Err(PaxError::OutOfRange { point: vec![xs] });
                }
            }
        }
        for &(j, c) in scratch.iter() {
            row[j] += w * c;
        }
    }
    Ok(())
}

/// M(x_i)[y_i, j] for the angular form.
fn angular_operator(
    grid: &TensorGrid,
    interp: &GridInterpolator,
    rule: &AngularRule,
    axis: usize,
    x: f64,
    ext: Extension,
) -> Result<AxisOperator> {
    let nodes = grid.axes()[axis].nodes();
    let n = nodes.len();
    let mut data = vec![0.0; n * n];
    let mut scratch = Vec::new();
    for (r, &y) in nodes.iter().enumerate() {
        let samples = axis_samples(rule.axis(axis), x, y);
        accumulate_basis(interp, axis, &samples, ext, &mut data[r * n..(r + 1) * n], &mut scratch)?;
    }
    Ok(AxisOperator { n, data })
}

fn apply_operators(values: &[Complex64], dims: &[usize], ops: &[&AxisOperator]) -> Vec<Complex64> {
    let mut cur = values.to_vec();
    for (axis, op) in ops.iter().enumerate() {
        let outer: usize = dims[..axis].iter().product();
        let inner: usize = dims[axis + 1..].iter().product();
        let mut next = vec![Complex64::new(0.0, 0.0); cur.len()];
        for o in 0..outer {
            for r in 0..op.n {
                let acc = &mut next[(o * op.n + r) * inner..(o * op.n + r + 1) * inner];
                for (j, &m) in op.data[r * op.n..(r + 1) * op.n].iter().enumerate() {
                    if m == 0.0 {
                        continue;
                    }
                    let src = &cur[(o * op.n + j) * inner..(o * op.n + j + 1) * inner];
                    for (a, s) in acc.iter_mut().zip(src) {
                        *a += s * m;
                    }
                }
            }
        }
        cur = next;
    }
    cur
}

/// T_x^α f on the field's own grid, f interpolated off-grid.
pub fn translate_field(f: &Field, x: &[f64], rule: &AngularRule, opts: &TranslationOptions) -> Result<Field> {
    let grid = f.grid();
    check_point(x, grid.dim())?;
    if rule.dim() != grid.dim() {
        return Err(PaxError::GridMismatch("angular rule and field differ in dimension".into()));
    }
    let interp = GridInterpolator::new(grid, opts.interp);
    let ops = (0..grid.dim())
        .map(|i| angular_operator(grid, &interp, rule, i, x[i], opts.extension))
        .collect::<Result<Vec<_>>>()?;
    let refs: Vec<&AxisOperator> = ops.iter().collect();
    Field::new(grid.clone(), apply_operators(f.values(), grid.dims(), &refs))
}

fn bracket(x: f64, y: f64, z: f64) -> f64 {
    (z * z - (x - y).powi(2)) * ((x + y).powi(2) - z * z)
}

/// One-axis factor of ω_α; the full kernel is the product over axes.
fn kernel_factor(a: f64, x: f64, y: f64, z: f64) -> f64 {
    if z < (x - y).abs() || z > x + y {
        return 0.0;
    }
    let b = bracket(x, y, z);
    let e = a - 0.5;
    let pow = if b <= 0.0 {
        match e.partial_cmp(&0.0) {
            Some(std::cmp::Ordering::Greater) => 0.0,
            Some(std::cmp::Ordering::Equal) => 1.0,
            _ => f64::INFINITY,
        }
    } else {
        b.powf(e)
    };
    c_prime_axis(a) / 2f64.powf(2.0 * a - 1.0) * pow / (x * y * z).powf(2.0 * a)
}

/// ω_α(x, y, z); infinite on the support boundary when some α_i < 1/2.
pub fn translation_kernel(alpha: &Alpha, x: &[f64], y: &[f64], z: &[f64]) -> Result<f64> {
    let n = alpha.dim();
    for p in [x, y, z] {
        if p.len() != n {
            return Err(PaxError::domain("kernel arguments must match alpha's dimension"));
        }
        if p.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(PaxError::domain(format!("kernel needs positive coordinates, got {p:?}")));
        }
    }
    Ok((0..n)
        .map(|i| kernel_factor(alpha.orders()[i], x[i], y[i], z[i]))
        .product())
}

/// M(x_i)[y_i, j] for the kernel form: ∫ ω f z^{2α+1} dz in s = z² with the
/// bracket power absorbed into a Gauss–Jacobi rule.
fn kernel_operator(
    grid: &TensorGrid,
    interp: &GridInterpolator,
    axis: usize,
    x: f64,
    nodes_per_axis: usize,
    ext: Extension,
) -> Result<AxisOperator> {
    let a = grid.alpha().orders()[axis];
    let base = gauss_jacobi(nodes_per_axis, a - 0.5, a - 0.5)?;
    let ynodes = grid.axes()[axis].nodes();
    let n = ynodes.len();
    let mut data = vec![0.0; n * n];
    let mut scratch = Vec::new();
    for (r, &y) in ynodes.iter().enumerate() {
        let (lo, hi) = ((x - y).powi(2), (x + y).powi(2));
        let rule = base.mapped(lo, hi, 2.0 * a);
        let samples: Vec<(f64, f64)> = rule
            .nodes
            .iter()
            .zip(&rule.weights)
            .map(|(&s, &w)| {
                let z = s.sqrt();
                let jac = z.powf(2.0 * a + 1.0) / (2.0 * z);
                let absorbed = ((s - lo) * (hi - s)).powf(a - 0.5);
                (z, w * kernel_factor(a, x, y, z) * jac / absorbed)
            })
            .collect();
        accumulate_basis(interp, axis, &samples, ext, &mut data[r * n..(r + 1) * n], &mut scratch)?;
    }
    Ok(AxisOperator { n, data })
}

/// T_x^α f(y) = ∫ ω_α(x, y, z) f(z) Π z_i^{2α_i+1} dz_i at the grid points y.
pub fn translate_kernel_form(f: &Field, x: &[f64], opts: &TranslationOptions) -> Result<Field> {
    let grid = f.grid();
    check_point(x, grid.dim())?;
    if x.contains(&0.0) {
        return Err(PaxError::domain("kernel form needs a translation point off the axes"));
    }
    if grid.alpha().orders().iter().any(|&a| a < 0.5) {
        log::warn!("kernel-form translation with some alpha_i < 1/2: endpoint singularity, reduced accuracy");
    }
    let interp = GridInterpolator::new(grid, opts.interp);
    let ops = (0..grid.dim())
        .map(|i| kernel_operator(grid, &interp, i, x[i], opts.kernel_nodes, opts.extension))
        .collect::<Result<Vec<_>>>()?;
    let refs: Vec<&AxisOperator> = ops.iter().collect();
    Field::new(grid.clone(), apply_operators(f.values(), grid.dims(), &refs))
}

/// (f *_α g)(x) = ∫ T_x f(y) g(y) dμ_α(y) at every grid point x.
pub fn convolve(f: &Field, g: &Field, rule: &AngularRule, opts: &TranslationOptions) -> Result<Field> {
    f.check_same_grid(g)?;
    let grid = f.grid();
    if rule.dim() != grid.dim() {
        return Err(PaxError::GridMismatch("angular rule and field differ in dimension".into()));
    }
    let interp = GridInterpolator::new(grid, opts.interp);
    // one operator per axis and per x-node
    let ops: Vec<Vec<AxisOperator>> = (0..grid.dim())
        .map(|i| {
            grid.axes()[i]
                .nodes()
                .par_iter()
                .map(|&x| angular_operator(grid, &interp, rule, i, x, opts.extension))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let weighted: Vec<Complex64> = g
        .values()
        .iter()
        .zip(grid.weights())
        .map(|(v, w)| v * w)
        .collect();
    let values: Vec<Complex64> = (0..grid.len())
        .into_par_iter()
        .map(|k| {
            let mut idx = vec![0usize; grid.dim()];
            grid.unravel(k, &mut idx);
            let refs: Vec<&AxisOperator> = idx.iter().enumerate().map(|(i, &j)| &ops[i][j]).collect();
            let shifted = apply_operators(f.values(), grid.dims(), &refs);
            shifted
                .iter()
                .zip(&weighted)
                .fold(Complex64::new(0.0, 0.0), |acc, (a, b)| acc + a * b)
        })
        .collect();
    Field::new(grid.clone(), values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::AxisRule;
    use crate::interp::ClosedForm;

    fn alpha(v: &[f64]) -> Alpha {
        Alpha::new(v.to_vec()).unwrap()
    }

    #[test]
    fn angular_rules_have_unit_mass() {
        for a in [-0.4, 0.0, 0.5, 1.3] {
            let al = alpha(&[a, 0.7]);
            assert!((AngularRule::gauss_jacobi(&al, 32).unwrap().total_weight() - 1.0).abs() < 1e-12);
            assert!((AngularRule::midpoint(&al, 256).unwrap().total_weight() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn product_formula() {
        let al = alpha(&[0.5]);
        let rule = AngularRule::gauss_jacobi(&al, 48).unwrap();
        let f = ClosedForm(|z: &[f64]| z[0].sin() / z[0]);
        let v = translate_at(&f, &[0.7], &[1.1], &rule).unwrap().re;
        let exact = (0.7f64.sin() / 0.7) * (1.1f64.sin() / 1.1);
        assert!((v - exact).abs() < 1e-12);
        let one = ClosedForm(|_: &[f64]| 1.0);
        assert!((translate_at(&one, &[2.0], &[3.0], &rule).unwrap().re - 1.0).abs() < 1e-13);
    }

    #[test]
    fn zero_shift_is_identity_at_nodes() {
        let al = alpha(&[0.2, 1.0]);
        let g = Arc::new(TensorGrid::uniform(al.clone(), 6.0, 24, AxisRule::GaussJacobi).unwrap());
        let f = Field::from_real_fn(g.clone(), |x| (-x[0] * x[0] - 0.3 * x[1]).exp());
        let rule = AngularRule::gauss_jacobi(&al, 16).unwrap();
        let t = translate_field(&f, &[0.0, 0.0], &rule, &TranslationOptions::default()).unwrap();
        assert_eq!(t.values(), f.values());
    }

    #[test]
    fn kernel_values() {
        let al = alpha(&[0.5]);
        assert!((translation_kernel(&al, &[1.0], &[1.0], &[1.0]).unwrap() - 0.5).abs() < 1e-14);
        assert_eq!(translation_kernel(&al, &[1.0], &[1.0], &[2.5]).unwrap(), 0.0);
        assert!(translation_kernel(&al, &[0.0], &[1.0], &[1.0]).is_err());
        let al = alpha(&[1.3, 0.2]);
        let (x, y, z) = ([0.7, 1.9], [1.4, 0.8], [1.0, 1.5]);
        let a = translation_kernel(&al, &x, &y, &z).unwrap();
        let b = translation_kernel(&al, &y, &x, &z).unwrap();
        assert!(a > 0.0 && (a - b).abs() < 1e-14 * a);
        assert_eq!(translation_kernel(&alpha(&[0.2]), &[1.0], &[1.0], &[2.0]).unwrap(), f64::INFINITY);
    }

    #[test]
    fn kernel_form_matches_angular_form() {
        let al = alpha(&[1.0]);
        let g = Arc::new(TensorGrid::uniform(al.clone(), 10.0, 128, AxisRule::GaussJacobi).unwrap());
        let f = Field::from_real_fn(g.clone(), |x| (-0.5 * x[0] * x[0]).exp());
        let rule = AngularRule::gauss_jacobi(&al, 64).unwrap();
        let opts = TranslationOptions::default();
        let a = translate_field(&f, &[0.5], &rule, &opts).unwrap();
        let k = translate_kernel_form(&f, &[0.5], &opts).unwrap();
        assert!(a.max_abs_diff(&k).unwrap() < 1e-4);
        let z = translate_kernel_form(&Field::zeros(g), &[0.5], &opts).unwrap();
        assert!(z.is_zero());
    }

    #[test]
    fn field_translation_matches_closed_form() {
        let al = alpha(&[0.5]);
        let g = Arc::new(TensorGrid::uniform(al.clone(), 10.0, 96, AxisRule::GaussJacobi).unwrap());
        let gauss = |x: &[f64]| (-0.5 * x[0] * x[0]).exp();
        let f = Field::from_real_fn(g.clone(), gauss);
        let rule = AngularRule::gauss_jacobi(&al, 64).unwrap();
        let t = translate_field(&f, &[1.3], &rule, &TranslationOptions::default()).unwrap();
        let direct = translate_angular(&ClosedForm(gauss), &[1.3], &g, &rule).unwrap();
        assert!(t.max_abs_diff(&direct).unwrap() < 1e-10);
    }
}
