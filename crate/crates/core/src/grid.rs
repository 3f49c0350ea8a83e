//! Discretizations of dμ_α(x) = c_α Π x_i^{2α_i+1} dx_i on boxes Π[0, R_i]
//! and of dΩ_α = (dσ/σ) dμ_α on a logarithmic σ-range.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{PaxError, Result};
use crate::quadrature::{gauss_jacobi, gauss_legendre};
use crate::special::ln_gamma;

/// Multi-index α = (α_1, …, α_n), every α_i > −1/2.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Alpha {
    orders: Vec<f64>,
}

impl Alpha {
    pub fn new(orders: Vec<f64>) -> Result<Self> {
        if orders.is_empty() {
            return Err(PaxError::domain("alpha needs at least one axis"));
        }
        if let Some(bad) = orders.iter().find(|a| !(a.is_finite() && **a > -0.5)) {
            return Err(PaxError::domain(format!("every alpha_i must exceed -1/2, got {bad}")));
        }
        Ok(Alpha { orders })
    }

    pub fn orders(&self) -> &[f64] {
        &self.orders
    }

    pub fn dim(&self) -> usize {
        self.orders.len()
    }

    /// |α| = Σ α_i.
    pub fn abs_alpha(&self) -> f64 {
        self.orders.iter().sum()
    }

    /// 2|α| + n, the exponent in the uncertainty constants.
    pub fn homogeneity(&self) -> f64 {
        2.0 * self.abs_alpha() + self.dim() as f64
    }

    /// 2|α| + 2n: dμ_α(σx) = σ^{2|α|+2n} dμ_α(x).
    pub fn scaling_degree(&self) -> f64 {
        2.0 * self.abs_alpha() + 2.0 * self.dim() as f64
    }

    /// c_α = 1 / (2^{|α|} Π Γ(α_i + 1)).
    pub fn c_alpha(&self) -> f64 {
        let log: f64 = self.abs_alpha() * std::f64::consts::LN_2
            + self.orders.iter().map(|a| ln_gamma(a + 1.0)).sum::<f64>();
        (-log).exp()
    }
}

impl TryFrom<Vec<f64>> for Alpha {
    type Error = PaxError;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Alpha::new(v)
    }
}

impl From<Alpha> for Vec<f64> {
    fn from(a: Alpha) -> Vec<f64> {
        a.orders
    }
}

/// Per-axis quadrature family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum AxisRule {
    /// Gauss rule for the weight x^{2α+1} on the panel touching the origin,
    /// Gauss–Legendre on the others.
    #[default]
    GaussJacobi,
    GaussLegendre,
    Trapezoid,
}

impl AxisRule {
    pub fn code(self) -> u64 {
        match self {
            AxisRule::GaussJacobi => 0,
            AxisRule::GaussLegendre => 1,
            AxisRule::Trapezoid => 2,
        }
    }

    pub fn from_code(code: u64) -> Option<Self> {
        match code {
            0 => Some(AxisRule::GaussJacobi),
            1 => Some(AxisRule::GaussLegendre),
            2 => Some(AxisRule::Trapezoid),
            _ => None,
        }
    }
}

/// Contiguous block of nodes covering [lo, hi].
#[derive(Debug, Clone, PartialEq)]
pub struct Panel {
    pub lo: f64,
    pub hi: f64,
    pub start: usize,
    pub end: usize,
}

/// Construction parameters of an axis; also what the binary field header stores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisSpec {
    pub order: f64,
    pub radius: f64,
    /// Nodes per panel.
    pub nodes: usize,
    #[serde(default)]
    pub rule: AxisRule,
    /// Interior panel boundaries, strictly inside (0, radius).
    #[serde(default)]
    pub breaks: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AxisGrid {
    spec: AxisSpec,
    nodes: Vec<f64>,
    bare_weights: Vec<f64>,
    measure_weights: Vec<f64>,
    panels: Vec<Panel>,
}

impl AxisGrid {
    pub fn build(order: f64, radius: f64, n: usize, rule: AxisRule) -> Result<Self> {
        Self::from_spec(AxisSpec {
            order,
            radius,
            nodes: n,
            rule,
            breaks: Vec::new(),
        })
    }

    pub fn from_spec(spec: AxisSpec) -> Result<Self> {
        let AxisSpec {
            order,
            radius,
            nodes: n,
            rule,
            ref breaks,
        } = spec;
        if !(order.is_finite() && order > -0.5) {
            return Err(PaxError::domain(format!("axis order must exceed -1/2, got {order}")));
        }
        if !(radius.is_finite() && radius > 0.0) {
            return Err(PaxError::domain(format!("axis radius must be positive, got {radius}")));
        }
        if n < 2 {
            return Err(PaxError::domain(format!("axis needs at least 2 nodes, got {n}")));
        }
        let mut bounds = vec![0.0];
        for &b in breaks {
            if !(b > *bounds.last().unwrap() && b < radius) {
                return Err(PaxError::domain(format!(
                    "breaks must be increasing inside (0, {radius}), got {breaks:?}"
                )));
            }
            bounds.push(b);
        }
        bounds.push(radius);
        if rule == AxisRule::Trapezoid && bounds.len() > 2 {
            return Err(PaxError::domain("trapezoid axes do not support breaks"));
        }

        let p = 2.0 * order + 1.0;
        let mut nodes = Vec::new();
        let mut bare = Vec::new();
        let mut measure = Vec::new();
        let mut panels = Vec::new();
        for (i, win) in bounds.windows(2).enumerate() {
            let (lo, hi) = (win[0], win[1]);
            let start = nodes.len();
            match rule {
                AxisRule::GaussJacobi if i == 0 => {
                    let r = gauss_jacobi(n, 0.0, p)?.mapped(lo, hi, p + 1.0);
                    for (x, w) in r.nodes.into_iter().zip(r.weights) {
                        nodes.push(x);
                        measure.push(w);
                        bare.push(w / x.powf(p));
                    }
                }
                AxisRule::GaussJacobi | AxisRule::GaussLegendre => {
                    let r = gauss_legendre(n)?.mapped(lo, hi, 1.0);
                    for (x, w) in r.nodes.into_iter().zip(r.weights) {
                        nodes.push(x);
                        bare.push(w);
                        measure.push(w * x.powf(p));
                    }
                }
                AxisRule::Trapezoid => {
                    // the x = 0 endpoint carries zero measure and is dropped
                    let h = radius / n as f64;
                    for k in 1..=n {
                        let x = h * k as f64;
                        let w = if k == n { 0.5 * h } else { h };
                        nodes.push(x);
                        bare.push(w);
                        measure.push(w * x.powf(p));
                    }
                }
            }
            panels.push(Panel {
                lo,
                hi,
                start,
                end: nodes.len(),
            });
        }
        Ok(AxisGrid {
            spec,
            nodes,
            bare_weights: bare,
            measure_weights: measure,
            panels,
        })
    }

    pub fn spec(&self) -> &AxisSpec {
        &self.spec
    }
    pub fn order(&self) -> f64 {
        self.spec.order
    }
    pub fn radius(&self) -> f64 {
        self.spec.radius
    }
    pub fn rule(&self) -> AxisRule {
        self.spec.rule
    }
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }
    pub fn bare_weights(&self) -> &[f64] {
        &self.bare_weights
    }
    /// Quadrature weights for x^{2α+1} dx (c_α not included).
    pub fn measure_weights(&self) -> &[f64] {
        &self.measure_weights
    }
    pub fn panels(&self) -> &[Panel] {
        &self.panels
    }
    pub fn len(&self) -> usize {
        self.nodes.len()
    }
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Tensor product of axis grids carrying the full measure dμ_α.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorGrid {
    alpha: Alpha,
    axes: Vec<AxisGrid>,
    c_alpha: f64,
    dims: Vec<usize>,
    weights: Vec<f64>,
}

impl TensorGrid {
    pub fn new(alpha: Alpha, axes: Vec<AxisGrid>) -> Result<Self> {
        if axes.len() != alpha.dim() {
            return Err(PaxError::domain(format!(
                "alpha has {} axes but {} axis grids were given",
                alpha.dim(),
                axes.len()
            )));
        }
        for (a, ax) in alpha.orders().iter().zip(&axes) {
            if a != &ax.order() {
                return Err(PaxError::domain(format!(
                    "axis order {} does not match alpha entry {a}",
                    ax.order()
                )));
            }
        }
        let c_alpha = alpha.c_alpha();
        let dims: Vec<usize> = axes.iter().map(AxisGrid::len).collect();
        let mut weights = vec![c_alpha];
        for ax in &axes {
            let mut next = Vec::with_capacity(weights.len() * ax.len());
            for w in &weights {
                next.extend(ax.measure_weights().iter().map(|m| w * m));
            }
            weights = next;
        }
        Ok(TensorGrid {
            alpha,
            axes,
            c_alpha,
            dims,
            weights,
        })
    }

    /// Same radius, node count and rule on every axis.
    pub fn uniform(alpha: Alpha, radius: f64, n: usize, rule: AxisRule) -> Result<Self> {
        let axes = alpha
            .orders()
            .iter()
            .map(|&a| AxisGrid::build(a, radius, n, rule))
            .collect::<Result<Vec<_>>>()?;
        TensorGrid::new(alpha, axes)
    }

    pub fn from_specs(alpha: Alpha, specs: Vec<AxisSpec>) -> Result<Self> {
        let axes = specs
            .into_iter()
            .map(AxisGrid::from_spec)
            .collect::<Result<Vec<_>>>()?;
        TensorGrid::new(alpha, axes)
    }

    pub fn alpha(&self) -> &Alpha {
        &self.alpha
    }
    pub fn axes(&self) -> &[AxisGrid] {
        &self.axes
    }
    pub fn dim(&self) -> usize {
        self.axes.len()
    }
    pub fn dims(&self) -> &[usize] {
        &self.dims
    }
    pub fn c_alpha(&self) -> f64 {
        self.c_alpha
    }
    pub fn len(&self) -> usize {
        self.weights.len()
    }
    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
    /// Full point weights, c_α included.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Per-axis node indices of flat (row-major) index `idx`.
    pub fn unravel(&self, mut idx: usize, out: &mut [usize]) {
        for (slot, &d) in out.iter_mut().zip(&self.dims).rev() {
            *slot = idx % d;
            idx /= d;
        }
    }

    pub fn point_into(&self, idx: usize, out: &mut [f64]) {
        let mut rem = idx;
        for (k, d) in self.dims.iter().enumerate().rev() {
            out[k] = self.axes[k].nodes()[rem % d];
            rem /= d;
        }
    }

    pub fn point(&self, idx: usize) -> Vec<f64> {
        let mut p = vec![0.0; self.dim()];
        self.point_into(idx, &mut p);
        p
    }

    pub fn points(&self) -> impl Iterator<Item = Vec<f64>> + '_ {
        (0..self.len()).map(|i| self.point(i))
    }

    /// ‖x‖² at every grid point.
    pub fn squared_norms(&self) -> Vec<f64> {
        self.points().map(|p| p.iter().map(|v| v * v).sum()).collect()
    }

    pub fn same_layout(&self, other: &TensorGrid) -> bool {
        std::ptr::eq(self, other) || self == other
    }
}

/// Samples of a function on a tensor grid, row-major with axis 0 slowest.
#[derive(Debug, Clone)]
pub struct Field {
    grid: Arc<TensorGrid>,
    values: Vec<Complex64>,
}

impl Field {
    pub fn new(grid: Arc<TensorGrid>, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(PaxError::GridMismatch(format!(
                "{} values for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        Ok(Field { grid, values })
    }

    pub fn zeros(grid: Arc<TensorGrid>) -> Self {
        let n = grid.len();
        Field {
            grid,
            values: vec![Complex64::new(0.0, 0.0); n],
        }
    }

    pub fn from_real_fn(grid: Arc<TensorGrid>, f: impl Fn(&[f64]) -> f64) -> Self {
        let mut p = vec![0.0; grid.dim()];
        let values = (0..grid.len())
            .map(|i| {
                grid.point_into(i, &mut p);
                Complex64::new(f(&p), 0.0)
            })
            .collect();
        Field { grid, values }
    }

    pub fn from_fn(grid: Arc<TensorGrid>, f: impl Fn(&[f64]) -> Complex64) -> Self {
        let mut p = vec![0.0; grid.dim()];
        let values = (0..grid.len())
            .map(|i| {
                grid.point_into(i, &mut p);
                f(&p)
            })
            .collect();
        Field { grid, values }
    }

    pub fn grid(&self) -> &Arc<TensorGrid> {
        &self.grid
    }
    pub fn values(&self) -> &[Complex64] {
        &self.values
    }
    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }
    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| v.re == 0.0 && v.im == 0.0)
    }

    pub fn check_same_grid(&self, other: &Field) -> Result<()> {
        if self.grid.same_layout(&other.grid) {
            Ok(())
        } else {
            Err(PaxError::GridMismatch("fields live on different grids".into()))
        }
    }

    /// Pointwise product with a real weight depending on the point.
    pub fn weighted(&self, w: impl Fn(&[f64]) -> f64) -> Field {
        let mut p = vec![0.0; self.grid.dim()];
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(i, v)| {
                self.grid.point_into(i, &mut p);
                v * w(&p)
            })
            .collect();
        Field {
            grid: self.grid.clone(),
            values,
        }
    }

    pub fn masked(&self, mask: &[bool]) -> Field {
        let values = self
            .values
            .iter()
            .zip(mask)
            .map(|(v, &keep)| if keep { *v } else { Complex64::new(0.0, 0.0) })
            .collect();
        Field {
            grid: self.grid.clone(),
            values,
        }
    }

    pub fn scaled(&self, s: f64) -> Field {
        Field {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v * s).collect(),
        }
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.check_same_grid(other)?;
        Ok(Field {
            grid: self.grid.clone(),
            values: self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect(),
        })
    }

    pub fn max_abs_diff(&self, other: &Field) -> Result<f64> {
        self.check_same_grid(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }
}

/// ∫ f dμ_α by the grid quadrature.
pub fn integrate_mu(f: &Field) -> Complex64 {
    f.values
        .iter()
        .zip(f.grid.weights())
        .fold(Complex64::new(0.0, 0.0), |acc, (v, w)| acc + v * w)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Norm {
    L1,
    L2,
    Inf,
}

pub fn norm_p(f: &Field, p: Norm) -> f64 {
    let w = f.grid.weights();
    match p {
        Norm::L1 => f.values.iter().zip(w).map(|(v, w)| v.norm() * w).sum(),
        Norm::L2 => f
            .values
            .iter()
            .zip(w)
            .map(|(v, w)| v.norm_sqr() * w)
            .sum::<f64>()
            .sqrt(),
        Norm::Inf => f.values.iter().map(|v| v.norm()).fold(0.0, f64::max),
    }
}

/// Log-uniform σ-nodes with midpoint weights for dσ/σ.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScaleGrid {
    sigma_min: f64,
    sigma_max: f64,
    nodes: Vec<f64>,
    log_weights: Vec<f64>,
}

impl ScaleGrid {
    pub fn log_uniform(sigma_min: f64, sigma_max: f64, count: usize) -> Result<Self> {
        if !(sigma_min > 0.0 && sigma_max > sigma_min && sigma_max.is_finite()) {
            return Err(PaxError::domain(format!(
                "need 0 < sigma_min < sigma_max, got [{sigma_min}, {sigma_max}]"
            )));
        }
        if count == 0 {
            return Err(PaxError::domain("scale grid needs at least one node"));
        }
        let (lmin, lmax) = (sigma_min.ln(), sigma_max.ln());
        let step = (lmax - lmin) / count as f64;
        let nodes = (0..count)
            .map(|k| (lmin + (k as f64 + 0.5) * step).exp())
            .collect();
        Ok(ScaleGrid {
            sigma_min,
            sigma_max,
            nodes,
            log_weights: vec![step; count],
        })
    }

    pub fn sigma_min(&self) -> f64 {
        self.sigma_min
    }
    pub fn sigma_max(&self) -> f64 {
        self.sigma_max
    }
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }
    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }
    pub fn len(&self) -> usize {
        self.nodes.len()
    }
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Family σ ↦ F_σ sampled at the nodes of a scale grid.
#[derive(Debug, Clone)]
pub struct ScaleField {
    scales: ScaleGrid,
    slices: Vec<Field>,
}

impl ScaleField {
    pub fn new(scales: ScaleGrid, slices: Vec<Field>) -> Result<Self> {
        if slices.len() != scales.len() {
            return Err(PaxError::GridMismatch(format!(
                "{} slices for {} scales",
                slices.len(),
                scales.len()
            )));
        }
        if let Some(first) = slices.first() {
            for s in &slices[1..] {
                first.check_same_grid(s)?;
            }
        }
        Ok(ScaleField { scales, slices })
    }

    pub fn scales(&self) -> &ScaleGrid {
        &self.scales
    }
    pub fn slices(&self) -> &[Field] {
        &self.slices
    }
    pub fn grid(&self) -> Option<&Arc<TensorGrid>> {
        self.slices.first().map(Field::grid)
    }

    /// ∬ w(x) |F(σ, x)|² dΩ_α restricted to σ-nodes where `keep_sigma` holds.
    pub fn weighted_norm_sq(
        &self,
        spatial: impl Fn(usize) -> f64,
        keep_sigma: impl Fn(f64) -> bool,
    ) -> f64 {
        let mut total = 0.0;
        for ((slice, &sigma), &lw) in self
            .slices
            .iter()
            .zip(self.scales.nodes())
            .zip(self.scales.log_weights())
        {
            if !keep_sigma(sigma) {
                continue;
            }
            let w = slice.grid().weights();
            let inner: f64 = slice
                .values()
                .iter()
                .enumerate()
                .map(|(i, v)| v.norm_sqr() * w[i] * spatial(i))
                .sum();
            total += lw * inner;
        }
        total
    }
}

/// Σ_σ log_weight · weight(σ) · ∫ F_σ dμ_α.
pub fn integrate_omega(f: &ScaleField, weight: Option<&dyn Fn(f64) -> f64>) -> Complex64 {
    f.slices
        .iter()
        .zip(f.scales.nodes())
        .zip(f.scales.log_weights())
        .fold(Complex64::new(0.0, 0.0), |acc, ((slice, &s), &lw)| {
            let ws = weight.map_or(1.0, |w| w(s));
            acc + integrate_mu(slice) * (lw * ws)
        })
}

/// Subset of the grid domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpatialSet {
    /// Per-axis closed intervals [lo, hi].
    Box(Vec<(f64, f64)>),
    /// Characteristic vector over the grid points.
    Mask(Vec<bool>),
}

impl SpatialSet {
    pub fn empty_box(n: usize) -> SpatialSet {
        SpatialSet::Box(vec![(0.0, 0.0); n])
    }

    pub fn full(grid: &TensorGrid) -> SpatialSet {
        SpatialSet::Box(grid.axes().iter().map(|a| (0.0, a.radius())).collect())
    }

    pub fn mask(&self, grid: &TensorGrid) -> Result<Vec<bool>> {
        match self {
            SpatialSet::Mask(m) => {
                if m.len() != grid.len() {
                    return Err(PaxError::GridMismatch(format!(
                        "mask of length {} for {} grid points",
                        m.len(),
                        grid.len()
                    )));
                }
                Ok(m.clone())
            }
            SpatialSet::Box(b) => {
                check_box(b, grid)?;
                let mut p = vec![0.0; grid.dim()];
                Ok((0..grid.len())
                    .map(|i| {
                        grid.point_into(i, &mut p);
                        p.iter().zip(b).all(|(x, (lo, hi))| x >= lo && x <= hi)
                    })
                    .collect())
            }
        }
    }
}

fn check_box(b: &[(f64, f64)], grid: &TensorGrid) -> Result<()> {
    if b.len() != grid.dim() {
        return Err(PaxError::domain(format!(
            "box has {} intervals for a {}-dimensional grid",
            b.len(),
            grid.dim()
        )));
    }
    for ((lo, hi), ax) in b.iter().zip(grid.axes()) {
        if !(*lo >= 0.0 && lo <= hi && *hi <= ax.radius() * (1.0 + 1e-12)) {
            return Err(PaxError::domain(format!(
                "interval [{lo}, {hi}] is not inside [0, {}]",
                ax.radius()
            )));
        }
    }
    Ok(())
}

/// μ_α(E): closed form for boxes, quadrature for masks.
pub fn measure_of_set(grid: &TensorGrid, set: &SpatialSet) -> Result<f64> {
    match set {
        SpatialSet::Box(b) => {
            check_box(b, grid)?;
            let mut m = grid.c_alpha();
            for ((lo, hi), a) in b.iter().zip(grid.alpha().orders()) {
                let p = 2.0 * a + 2.0;
                m *= (hi.powf(p) - lo.powf(p)) / p;
            }
            Ok(m)
        }
        SpatialSet::Mask(_) => {
            let mask = set.mask(grid)?;
            Ok(grid
                .weights()
                .iter()
                .zip(&mask)
                .filter(|(_, &k)| k)
                .map(|(w, _)| w)
                .sum())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::gamma;

    fn grid1(order: f64, r: f64, n: usize) -> Arc<TensorGrid> {
        Arc::new(TensorGrid::uniform(Alpha::new(vec![order]).unwrap(), r, n, AxisRule::GaussJacobi).unwrap())
    }

    #[test]
    fn alpha_validation_and_derived() {
        assert!(Alpha::new(vec![]).is_err());
        assert!(Alpha::new(vec![0.0, -0.5]).is_err());
        let a = Alpha::new(vec![0.5, 1.0]).unwrap();
        assert_eq!(a.abs_alpha(), 1.5);
        assert_eq!(a.homogeneity(), 5.0);
        let closed = 1.0 / (2f64.powf(1.5) * gamma(1.5) * gamma(2.0));
        assert!((a.c_alpha() - closed).abs() < 1e-13 * closed);
    }

    #[test]
    fn axis_measure_sums() {
        let ax = AxisGrid::build(0.0, 1.0, 64, AxisRule::GaussLegendre).unwrap();
        let s: f64 = ax.measure_weights().iter().sum();
        assert!((s - 0.5).abs() < 1e-12);
        for rule in [AxisRule::GaussJacobi, AxisRule::GaussLegendre] {
            let ax = AxisGrid::build(-0.25, 2.0, 64, rule).unwrap();
            let s: f64 = ax.measure_weights().iter().sum();
            let exact = 2f64.powf(1.5) / 1.5;
            let tol = if rule == AxisRule::GaussJacobi { 1e-10 } else { 1e-4 };
            assert!((s - exact).abs() < tol, "{rule:?}: {s} vs {exact}");
        }
        assert!(AxisGrid::build(0.0, 1.0, 1, AxisRule::GaussLegendre).is_err());
        assert!(AxisGrid::build(-0.5, 1.0, 8, AxisRule::GaussLegendre).is_err());
        assert!(AxisGrid::build(0.0, 0.0, 8, AxisRule::GaussLegendre).is_err());
    }

    #[test]
    fn axis_nodes_increasing_positive_with_breaks() {
        let ax = AxisGrid::from_spec(AxisSpec {
            order: 0.3,
            radius: 10.0,
            nodes: 20,
            rule: AxisRule::GaussJacobi,
            breaks: vec![2.0, 5.0],
        })
        .unwrap();
        assert_eq!(ax.len(), 60);
        assert!(ax.nodes()[0] > 0.0);
        assert!(ax.nodes().windows(2).all(|w| w[0] < w[1]));
        let s: f64 = ax.measure_weights().iter().sum();
        let exact = 10f64.powf(2.6) / 2.6;
        assert!((s - exact).abs() < 1e-10 * exact);
        assert_eq!(ax.panels().len(), 3);
    }

    #[test]
    fn integrate_gaussians() {
        let g = grid1(0.0, 8.0, 128);
        let f = Field::from_real_fn(g.clone(), |x| (-x[0] * x[0]).exp());
        assert!((integrate_mu(&f).re - 0.5).abs() < 1e-10);
        assert_eq!(integrate_mu(&Field::zeros(g)).re, 0.0);

        let g2 = Arc::new(
            TensorGrid::uniform(Alpha::new(vec![0.0, 0.0]).unwrap(), 8.0, 64, AxisRule::GaussJacobi).unwrap(),
        );
        let f2 = Field::from_real_fn(g2, |x| (-(x[0] * x[0] + x[1] * x[1])).exp());
        assert!((integrate_mu(&f2).re - 0.25).abs() < 1e-9);
    }

    #[test]
    fn norms() {
        let g = grid1(0.0, 10.0, 128);
        let f = Field::from_real_fn(g.clone(), |x| (-0.5 * x[0] * x[0]).exp());
        assert!((norm_p(&f, Norm::L2).powi(2) - 0.5).abs() < 1e-9);
        let z = Field::zeros(g);
        for p in [Norm::L1, Norm::L2, Norm::Inf] {
            assert_eq!(norm_p(&z, p), 0.0);
        }
        let ind = AxisSpec {
            order: 0.0,
            radius: 3.0,
            nodes: 16,
            rule: AxisRule::GaussJacobi,
            breaks: vec![1.0],
        };
        let gi = Arc::new(TensorGrid::from_specs(Alpha::new(vec![0.0]).unwrap(), vec![ind]).unwrap());
        let f = Field::from_real_fn(gi, |x| if x[0] <= 1.0 { 1.0 } else { 0.0 });
        assert!((norm_p(&f, Norm::L1) - 0.5).abs() < 1e-13);
    }

    #[test]
    fn scale_grid_weights() {
        let s = ScaleGrid::log_uniform(1e-3, 1e2, 200).unwrap();
        let total: f64 = s.log_weights().iter().sum();
        assert!((total - (1e5f64).ln()).abs() < 1e-12);
        assert!(ScaleGrid::log_uniform(0.0, 1.0, 5).is_err());
        assert!(ScaleGrid::log_uniform(2.0, 1.0, 5).is_err());
    }

    #[test]
    fn omega_integrals() {
        let g = grid1(0.0, 10.0, 32);
        let scales = ScaleGrid::log_uniform(0.5, 4.0, 50).unwrap();
        let slice = Field::from_real_fn(g.clone(), |x| (-x[0] * x[0]).exp());
        let sf = ScaleField::new(scales.clone(), vec![slice.clone(); 50]).unwrap();
        let v = integrate_omega(&sf, None).re;
        assert!((v - 8f64.ln() * integrate_mu(&slice).re).abs() < 1e-12);

        let zero = ScaleField::new(scales.clone(), vec![Field::zeros(g.clone()); 50]).unwrap();
        assert_eq!(integrate_omega(&zero, None).re, 0.0);

        // σ^{-2d} weight on constant slices over E = [0, 1]: closed form
        let spec = AxisSpec { order: 0.0, radius: 10.0, nodes: 16, rule: AxisRule::GaussJacobi, breaks: vec![1.0] };
        let ge = Arc::new(TensorGrid::from_specs(Alpha::new(vec![0.0]).unwrap(), vec![spec]).unwrap());
        let ind = Field::from_real_fn(ge, |x| if x[0] <= 1.0 { 1.0 } else { 0.0 });
        let scales = ScaleGrid::log_uniform(1.0, 3.0, 400).unwrap();
        let sf = ScaleField::new(scales, vec![ind; 400]).unwrap();
        let w = |s: f64| s.powi(-2);
        let v = integrate_omega(&sf, Some(&w)).re;
        let exact = (1.0 - 3f64.powi(-2)) / 2.0 * 0.5;
        // midpoint rule in ln σ: relative error ≈ (Δ·2)²/24
        let step = 3f64.ln() / 400.0;
        assert!(((v - exact) / exact).abs() < (2.0 * step).powi(2) / 24.0 * 1.1);
    }

    #[test]
    fn measures_of_sets() {
        let g = grid1(0.0, 4.0, 32);
        assert_eq!(measure_of_set(&g, &SpatialSet::empty_box(1)).unwrap(), 0.0);
        assert!((measure_of_set(&g, &SpatialSet::Box(vec![(0.0, 1.0)])).unwrap() - 0.5).abs() < 1e-14);
        assert_eq!(measure_of_set(&g, &SpatialSet::Mask(vec![false; 32])).unwrap(), 0.0);
        assert!(measure_of_set(&g, &SpatialSet::Box(vec![(0.0, 5.0)])).is_err());

        let a = Alpha::new(vec![0.5, 0.0]).unwrap();
        let g2 = TensorGrid::uniform(a.clone(), 3.0, 16, AxisRule::GaussJacobi).unwrap();
        let m = measure_of_set(&g2, &SpatialSet::Box(vec![(0.0, 1.0), (0.0, 2.0)])).unwrap();
        let c = 1.0 / (2f64.sqrt() * gamma(1.5));
        assert!((m - c * (1.0 / 3.0) * 2.0).abs() < 1e-13);

        let full = SpatialSet::full(&g2);
        let mq = measure_of_set(&g2, &SpatialSet::Mask(full.mask(&g2).unwrap())).unwrap();
        let mb = measure_of_set(&g2, &full).unwrap();
        assert!((mq - mb).abs() < 1e-12 * mb);
    }
}
