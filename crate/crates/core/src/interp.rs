//! Off-grid evaluation of sampled fields.
//!
//! Fields are even in every coordinate, so negative arguments fold onto
//! their absolute value. Beyond the grid radius the field is either taken
//! to vanish or the evaluation fails, depending on [`Extension`].

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{PaxError, Result};
use crate::grid::{AxisGrid, Field, TensorGrid};

/// Anything that can be evaluated at an arbitrary point of R_+^n.
pub trait Evaluate: Sync {
    fn eval(&self, x: &[f64]) -> Result<Complex64>;
}

/// Adapter for closed-form real functions.
pub struct ClosedForm<F>(pub F);

impl<F: Fn(&[f64]) -> f64 + Sync> Evaluate for ClosedForm<F> {
    fn eval(&self, x: &[f64]) -> Result<Complex64> {
        Ok(Complex64::new((self.0)(x), 0.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum InterpKind {
    /// Polynomial through all nodes of the enclosing panel.
    #[default]
    Barycentric,
    /// Local four-point Lagrange.
    Cubic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Extension {
    #[default]
    Zero,
    Error,
}

#[derive(Debug, Clone)]
struct AxisInterp {
    nodes: Vec<f64>,
    radius: f64,
    panels: Vec<(f64, f64, usize, usize)>,
    bary: Vec<f64>,
    kind: InterpKind,
}

impl AxisInterp {
    fn new(axis: &AxisGrid, kind: InterpKind) -> Self {
        let nodes = axis.nodes().to_vec();
        let panels: Vec<_> = axis.panels().iter().map(|p| (p.lo, p.hi, p.start, p.end)).collect();
        let mut bary = vec![0.0; nodes.len()];
        if kind == InterpKind::Barycentric {
            for &(_, _, s, e) in &panels {
                let pts = &nodes[s..e];
                // log-magnitude form; products of node gaps over/underflow for large panels
                let logs: Vec<(f64, f64)> = (0..pts.len())
                    .map(|j| {
                        let mut sign = 1.0;
                        let mut lg = 0.0;
                        for (k, xk) in pts.iter().enumerate() {
                            if k != j {
                                let d = pts[j] - xk;
                                if d < 0.0 {
                                    sign = -sign;
                                }
                                lg -= d.abs().ln();
                            }
                        }
                        (sign, lg)
                    })
                    .collect();
                let top = logs.iter().map(|l| l.1).fold(f64::NEG_INFINITY, f64::max);
                for (j, (sign, lg)) in logs.into_iter().enumerate() {
                    bary[s + j] = sign * (lg - top).exp();
                }
            }
        }
        AxisInterp {
            nodes,
            radius: axis.radius(),
            panels,
            bary,
            kind,
        }
    }

    /// Sparse interpolation coefficients at `x`; false when x is past the radius.
    fn basis(&self, x: f64, out: &mut Vec<(usize, f64)>) -> bool {
        out.clear();
        let x = x.abs();
        if x > self.radius * (1.0 + 1e-12) {
            return false;
        }
        match self.kind {
            InterpKind::Barycentric => self.barycentric(x, out),
            InterpKind::Cubic => self.cubic(x, out),
        }
        true
    }

    fn barycentric(&self, x: f64, out: &mut Vec<(usize, f64)>) {
        let &(_, _, s, e) = self
            .panels
            .iter()
            .find(|p| x <= p.1)
            .unwrap_or_else(|| self.panels.last().unwrap());
        let mut total = 0.0;
        for j in s..e {
            let d = x - self.nodes[j];
            if d == 0.0 {
                out.clear();
                out.push((j, 1.0));
                return;
            }
            let c = self.bary[j] / d;
            total += c;
            out.push((j, c));
        }
        for slot in out.iter_mut() {
            slot.1 /= total;
        }
    }

    fn cubic(&self, x: f64, out: &mut Vec<(usize, f64)>) {
        let n = self.nodes.len();
        // stencil positions over the even extension: index k < 0 maps to node -k-1 mirrored
        let at = |k: isize| -> (usize, f64) {
            if k < 0 {
                let j = (-k - 1) as usize;
                (j, -self.nodes[j])
            } else {
                let j = k as usize;
                (j, self.nodes[j])
            }
        };
        let upper = self.nodes.partition_point(|&v| v <= x) as isize;
        let first = (upper - 2).min(n as isize - 4).max(-(n.min(2) as isize));
        let stencil: Vec<(usize, f64)> = (first..first + 4).map(at).collect();
        for (i, &(j, xi)) in stencil.iter().enumerate() {
            let mut l = 1.0;
            for (k, &(_, xk)) in stencil.iter().enumerate() {
                if k != i {
                    l *= (x - xk) / (xi - xk);
                }
            }
            if let Some(slot) = out.iter_mut().find(|s| s.0 == j) {
                slot.1 += l;
            } else {
                out.push((j, l));
            }
        }
    }
}

/// Interpolation weights for a grid, independent of any field values.
#[derive(Debug, Clone)]
pub struct GridInterpolator {
    axes: Vec<AxisInterp>,
    strides: Vec<usize>,
}

impl GridInterpolator {
    pub fn new(grid: &TensorGrid, kind: InterpKind) -> Self {
        let axes = grid.axes().iter().map(|a| AxisInterp::new(a, kind)).collect();
        let mut strides = vec![1; grid.dim()];
        for k in (0..grid.dim().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * grid.dims()[k + 1];
        }
        GridInterpolator { axes, strides }
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    /// Sparse coefficients (node index, weight) reproducing the value at
    /// coordinate `x` of axis `axis`; false when x lies past the radius.
    pub fn axis_basis(&self, axis: usize, x: f64, out: &mut Vec<(usize, f64)>) -> bool {
        self.axes[axis].basis(x, out)
    }

    pub fn axis_len(&self, axis: usize) -> usize {
        self.axes[axis].nodes.len()
    }
}

/// Tensor interpolant of a sampled field.
#[derive(Debug, Clone)]
pub struct FieldInterpolator {
    field: Field,
    grid: GridInterpolator,
    extension: Extension,
}

impl FieldInterpolator {
    pub fn new(field: &Field, kind: InterpKind, extension: Extension) -> Self {
        FieldInterpolator {
            field: field.clone(),
            grid: GridInterpolator::new(field.grid(), kind),
            extension,
        }
    }

    pub fn field(&self) -> &Field {
        &self.field
    }
}

impl Evaluate for FieldInterpolator {
    fn eval(&self, x: &[f64]) -> Result<Complex64> {
        if x.len() != self.grid.dim() {
            return Err(PaxError::domain(format!(
                "point has {} coordinates, field has {} axes",
                x.len(),
                self.grid.dim()
            )));
        }
        let mut bases: Vec<Vec<(usize, f64)>> = Vec::with_capacity(x.len());
        for (k, &xi) in x.iter().enumerate() {
            let mut b = Vec::new();
            if !self.grid.axis_basis(k, xi, &mut b) {
                return match self.extension {
                    Extension::Zero => Ok(Complex64::new(0.0, 0.0)),
                    Extension::Error => Err(PaxError::OutOfRange { point: x.to_vec() }),
                };
            }
            bases.push(b);
        }
        Ok(contract(&bases, &self.grid.strides, self.field.values(), 0, 0))
    }
}

fn contract(
    bases: &[Vec<(usize, f64)>],
    strides: &[usize],
    values: &[Complex64],
    axis: usize,
    offset: usize,
) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    if axis + 1 == bases.len() {
        for &(j, c) in &bases[axis] {
            acc += values[offset + j] * c;
        }
    } else {
        for &(j, c) in &bases[axis] {
            acc += contract(bases, strides, values, axis + 1, offset + j * strides[axis]) * c;
        }
    }
    acc
}
