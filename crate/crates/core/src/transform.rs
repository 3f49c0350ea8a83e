//! Separable Fourier–Bessel transform on tensor grids.
//!
//! With the kernel Π j_{α_i}(λ_i x_i) the transform factorizes over axes, so
//! a plan stores one matrix per axis and applies them in turn.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{PaxError, Result};
use crate::grid::{norm_p, AxisGrid, Field, Norm, TensorGrid};
use crate::special::j_unchecked;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum KernelStorage {
    #[default]
    Precomputed,
    OnTheFly,
}

/// Row-major K[out, in] = j_α(λ_out x_in) · w_in.
#[derive(Debug, Clone)]
struct AxisKernel {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl AxisKernel {
    fn build(out: &AxisGrid, inp: &AxisGrid) -> Self {
        let nu = inp.order();
        let (rows, cols) = (out.len(), inp.len());
        let mut data = vec![0.0; rows * cols];
        data.par_chunks_mut(cols).enumerate().for_each(|(r, row)| {
            let lambda = out.nodes()[r];
            for ((slot, &x), &w) in row.iter_mut().zip(inp.nodes()).zip(inp.measure_weights()) {
                *slot = j_unchecked(nu, lambda * x) * w;
            }
        });
        AxisKernel { rows, cols, data }
    }
}

/// Reusable transform between two grids with the same α.
#[derive(Debug, Clone)]
pub struct TransformPlan {
    input: Arc<TensorGrid>,
    output: Arc<TensorGrid>,
    storage: KernelStorage,
    forward: Vec<AxisKernel>,
    backward: Vec<AxisKernel>,
}

impl TransformPlan {
    /// Plan whose output grid is the input grid.
    pub fn new(grid: Arc<TensorGrid>) -> Self {
        Self::with_output(grid.clone(), grid, KernelStorage::Precomputed)
            .expect("a grid is always compatible with itself")
    }

    pub fn with_output(
        input: Arc<TensorGrid>,
        output: Arc<TensorGrid>,
        storage: KernelStorage,
    ) -> Result<Self> {
        if input.alpha() != output.alpha() {
            return Err(PaxError::GridMismatch(
                "input and output grids must share alpha".into(),
            ));
        }
        let mut plan = TransformPlan {
            input,
            output,
            storage,
            forward: Vec::new(),
            backward: Vec::new(),
        };
        if storage == KernelStorage::Precomputed {
            plan.forward = plan.forward_kernels();
            if !plan.input.same_layout(&plan.output) {
                plan.backward = plan.backward_kernels();
            }
        }
        Ok(plan)
    }

    fn forward_kernels(&self) -> Vec<AxisKernel> {
        self.output
            .axes()
            .iter()
            .zip(self.input.axes())
            .map(|(o, i)| AxisKernel::build(o, i))
            .collect()
    }

    fn backward_kernels(&self) -> Vec<AxisKernel> {
        self.input
            .axes()
            .iter()
            .zip(self.output.axes())
            .map(|(o, i)| AxisKernel::build(o, i))
            .collect()
    }

    pub fn input_grid(&self) -> &Arc<TensorGrid> {
        &self.input
    }

    pub fn output_grid(&self) -> &Arc<TensorGrid> {
        &self.output
    }

    pub fn storage(&self) -> KernelStorage {
        self.storage
    }

    /// F_α f sampled on the output grid.
    pub fn forward(&self, f: &Field) -> Result<Field> {
        if !f.grid().same_layout(&self.input) {
            return Err(PaxError::GridMismatch(
                "field is not on the plan's input grid".into(),
            ));
        }
        let kernels = match self.storage {
            KernelStorage::Precomputed => None,
            KernelStorage::OnTheFly => Some(self.forward_kernels()),
        };
        let ks = kernels.as_ref().unwrap_or(&self.forward);
        Ok(self.apply(ks, f.values(), &self.output))
    }

    /// F_α^{-1} = F_α, taking samples on the output grid back to the input grid.
    pub fn inverse(&self, g: &Field) -> Result<Field> {
        if !g.grid().same_layout(&self.output) {
            return Err(PaxError::GridMismatch(
                "field is not on the plan's output grid".into(),
            ));
        }
        let same = self.input.same_layout(&self.output);
        let kernels = match (self.storage, same) {
            (KernelStorage::Precomputed, true) => None,
            (KernelStorage::Precomputed, false) => Some(&self.backward),
            (KernelStorage::OnTheFly, _) => None,
        };
        let fresh;
        let ks = match kernels {
            Some(k) => k,
            None if self.storage == KernelStorage::Precomputed => &self.forward,
            None => {
                fresh = self.backward_kernels();
                &fresh
            }
        };
        Ok(self.apply(ks, g.values(), &self.input))
    }

    fn apply(&self, kernels: &[AxisKernel], values: &[Complex64], target: &Arc<TensorGrid>) -> Field {
        let mut dims: Vec<usize> = kernels.iter().map(|k| k.cols).collect();
        let mut cur = values.to_vec();
        for (axis, k) in kernels.iter().enumerate() {
            cur = apply_axis(&cur, &dims, axis, k);
            dims[axis] = k.rows;
        }
        let c = target.c_alpha();
        for v in &mut cur {
            *v *= c;
        }
        Field::new(target.clone(), cur).expect("output length matches target grid")
    }
}

fn apply_axis(values: &[Complex64], dims: &[usize], axis: usize, k: &AxisKernel) -> Vec<Complex64> {
    let outer: usize = dims[..axis].iter().product();
    let inner: usize = dims[axis + 1..].iter().product();
    let n_in = k.cols;
    let mut out = vec![Complex64::new(0.0, 0.0); outer * k.rows * inner];
    out.par_chunks_mut(inner).enumerate().for_each(|(chunk, acc)| {
        let (o, r) = (chunk / k.rows, chunk % k.rows);
        let row = &k.data[r * n_in..(r + 1) * n_in];
        for (j, &m) in row.iter().enumerate() {
            let src = &values[(o * n_in + j) * inner..(o * n_in + j + 1) * inner];
            for (a, s) in acc.iter_mut().zip(src) {
                *a += s * m;
            }
        }
    });
    out
}

/// F_α f evaluated at one arbitrary spectral point.
pub fn transform_at(f: &Field, lambda: &[f64]) -> Result<Complex64> {
    let grid = f.grid();
    if lambda.len() != grid.dim() {
        return Err(PaxError::domain("spectral point has the wrong dimension"));
    }
    if lambda.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
        return Err(PaxError::domain("spectral point needs finite nonnegative coordinates"));
    }
    let factors: Vec<Vec<f64>> = grid
        .axes()
        .iter()
        .zip(lambda)
        .map(|(ax, &l)| ax.nodes().iter().map(|&x| j_unchecked(ax.order(), l * x)).collect())
        .collect();
    let mut idx = vec![0usize; grid.dim()];
    let mut acc = Complex64::new(0.0, 0.0);
    for (i, (v, w)) in f.values().iter().zip(grid.weights()).enumerate() {
        grid.unravel(i, &mut idx);
        let k: f64 = idx.iter().zip(&factors).map(|(&j, fac)| fac[j]).product();
        acc += v * (w * k);
    }
    Ok(acc)
}

/// Central-difference Δ_α f(x) with step h.
pub fn apply_delta_alpha(
    f: impl Fn(&[f64]) -> f64,
    orders: &[f64],
    x: &[f64],
    h: f64,
) -> Result<f64> {
    if orders.len() != x.len() {
        return Err(PaxError::domain("alpha and point dimensions differ"));
    }
    if !(h > 0.0) {
        return Err(PaxError::domain(format!("step must be positive, got {h}")));
    }
    if let Some(bad) = x.iter().find(|&&xi| xi <= h) {
        return Err(PaxError::domain(format!(
            "coordinate {bad} must exceed the step {h}"
        )));
    }
    let f0 = f(x);
    let mut p = x.to_vec();
    let mut total = 0.0;
    for (i, &a) in orders.iter().enumerate() {
        p[i] = x[i] + h;
        let fp = f(&p);
        p[i] = x[i] - h;
        let fm = f(&p);
        p[i] = x[i];
        total += (fp - 2.0 * f0 + fm) / (h * h) + (2.0 * a + 1.0) / x[i] * (fp - fm) / (2.0 * h);
    }
    Ok(total)
}

/// | ‖F_α f‖₂ − ‖f‖₂ | / ‖f‖₂.
pub fn plancherel_defect(plan: &TransformPlan, f: &Field) -> Result<f64> {
    let nf = norm_p(f, Norm::L2);
    if nf == 0.0 {
        return Err(PaxError::ZeroNorm("input field"));
    }
    let g = plan.forward(f)?;
    Ok((norm_p(&g, Norm::L2) - nf).abs() / nf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{integrate_mu, Alpha, AxisRule};
    use crate::special::{normalized_bessel_series_oracle, tensor_bessel, BesselOrder};

    fn grid(orders: Vec<f64>, r: f64, n: usize) -> Arc<TensorGrid> {
        Arc::new(TensorGrid::uniform(Alpha::new(orders).unwrap(), r, n, AxisRule::GaussJacobi).unwrap())
    }

    fn gauss(x: &[f64]) -> f64 {
        (-0.5 * x.iter().map(|v| v * v).sum::<f64>()).exp()
    }

    #[test]
    fn zero_maps_to_zero() {
        let g = grid(vec![0.0], 10.0, 32);
        let plan = TransformPlan::new(g.clone());
        assert!(plan.forward(&Field::zeros(g.clone())).unwrap().is_zero());
        assert!(plan.inverse(&Field::zeros(g)).unwrap().is_zero());
    }

    #[test]
    fn gaussian_self_dual_1d() {
        let g = grid(vec![0.0], 10.0, 128);
        let plan = TransformPlan::new(g.clone());
        let f = Field::from_real_fn(g.clone(), gauss);
        let ff = plan.forward(&f).unwrap();
        assert!(ff.max_abs_diff(&f).unwrap() < 1e-8);
        assert!(plancherel_defect(&plan, &f).unwrap() < 1e-8);
    }

    #[test]
    fn gaussian_self_dual_2d_mixed() {
        let g = grid(vec![0.3, 1.2], 10.0, 64);
        let plan = TransformPlan::new(g.clone());
        let f = Field::from_real_fn(g.clone(), gauss);
        assert!(plan.forward(&f).unwrap().max_abs_diff(&f).unwrap() < 1e-7);
    }

    #[test]
    fn decoupled_grids_round_trip() {
        let x = grid(vec![0.5], 10.0, 96);
        let l = grid(vec![0.5], 12.0, 80);
        let plan = TransformPlan::with_output(x.clone(), l.clone(), KernelStorage::Precomputed).unwrap();
        let f = Field::from_real_fn(x.clone(), gauss);
        let ff = plan.forward(&f).unwrap();
        assert!(ff.max_abs_diff(&Field::from_real_fn(l.clone(), gauss)).unwrap() < 1e-8);
        let back = plan.inverse(&ff).unwrap();
        assert!(back.max_abs_diff(&f).unwrap() < 1e-8);

        let lazy = TransformPlan::with_output(x.clone(), plan.output_grid().clone(), KernelStorage::OnTheFly).unwrap();
        let ff2 = lazy.forward(&f).unwrap();
        assert!(ff2.max_abs_diff(&ff).unwrap() < 1e-15);
        assert!(lazy.inverse(&ff2).unwrap().max_abs_diff(&back).unwrap() < 1e-15);

        assert!(plan.forward(&Field::zeros(l.clone())).is_err());
        let other = grid(vec![0.0], 10.0, 96);
        assert!(TransformPlan::with_output(x, other, KernelStorage::Precomputed).is_err());
    }

    #[test]
    fn sup_bound_and_point_evaluation() {
        let g = grid(vec![0.7], 10.0, 64);
        let plan = TransformPlan::new(g.clone());
        let f = Field::from_real_fn(g.clone(), |x| x[0].powi(2) * (-x[0] * x[0]).exp());
        let ff = plan.forward(&f).unwrap();
        assert!(norm_p(&ff, Norm::Inf) <= norm_p(&f, Norm::L1) * (1.0 + 1e-10));
        let at0 = transform_at(&f, &[0.0]).unwrap();
        assert!((at0 - integrate_mu(&f)).norm() < 1e-14);
        let node = g.point(17);
        assert!((transform_at(&f, &node).unwrap() - ff.values()[17]).norm() < 1e-13);
    }

    #[test]
    fn delta_alpha_constants_and_eigenfunctions() {
        assert!(apply_delta_alpha(|_| 1.0, &[0.2], &[1.0], 1e-3).unwrap().abs() < 1e-10);
        assert!(apply_delta_alpha(|_| 1.0, &[0.2], &[1e-3], 1e-3).is_err());

        let alpha = Alpha::new(vec![0.7]).unwrap();
        let f = |x: &[f64]| tensor_bessel(&alpha, x, &[2.0]).unwrap();
        let d = apply_delta_alpha(f, &[0.7], &[1.3], 1e-3).unwrap();
        let j = normalized_bessel_series_oracle(BesselOrder::new(0.7).unwrap(), 2.6, 80).unwrap();
        assert!((d + 4.0 * j).abs() < 1e-5);
    }
}
