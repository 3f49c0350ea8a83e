//! Uncertainty certificates: Heisenberg–Pauli–Weyl type bounds and the
//! Donoho–Stark concentration bound for the multiplier scale family.

use serde::{Deserialize, Serialize};

use crate::error::{PaxError, Result};
use crate::grid::{measure_of_set, norm_p, Field, Norm, ScaleField, ScaleGrid, SpatialSet, TensorGrid};
use crate::multiplier::{apply_scale_family, require_admissible, Multiplier};
use crate::transform::TransformPlan;

/// Relative slack tolerated before an inequality counts as violated.
pub const SLACK_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HpwVariant {
    /// ‖f‖² ≤ C·A·B
    SquaredNorm,
    /// ‖f‖ ≤ C^κ·A^ε·B^{1-ε}
    Norm,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HpwCertificate {
    pub variant: HpwVariant,
    pub lhs: f64,
    pub rhs: f64,
    /// 2 / (2|α| + n)
    pub constant: f64,
    /// Power carried by the constant (1, or aε for the general form).
    pub exponent: f64,
    pub spatial_factor: f64,
    pub spectral_factor: f64,
    pub slack: f64,
    pub ratio: f64,
    pub pass: bool,
    /// False when a weighted integrand is still visible at the grid boundary.
    pub resolved: bool,
}

impl HpwCertificate {
    #[allow(clippy::too_many_arguments)]
    fn assemble(
        variant: HpwVariant,
        lhs: f64,
        constant: f64,
        exponent: f64,
        spatial: f64,
        spectral: f64,
        rhs: f64,
        resolved: bool,
    ) -> Self {
        let slack = rhs - lhs;
        HpwCertificate {
            variant,
            lhs,
            rhs,
            constant,
            exponent,
            spatial_factor: spatial,
            spectral_factor: spectral,
            slack,
            ratio: rhs / lhs,
            pass: slack >= -SLACK_TOL * lhs,
            resolved,
        }
    }

    /// The squared form of a norm certificate (identity on squared ones).
    pub fn squared(&self) -> HpwCertificate {
        match self.variant {
            HpwVariant::SquaredNorm => self.clone(),
            HpwVariant::Norm => HpwCertificate::assemble(
                HpwVariant::SquaredNorm,
                self.lhs * self.lhs,
                self.constant,
                2.0 * self.exponent,
                self.spatial_factor,
                self.spectral_factor,
                self.rhs * self.rhs,
                self.resolved,
            ),
        }
    }
}

fn radial_moment_sq(f: &Field, power: f64) -> f64 {
    let w = f.grid().weights();
    f.grid()
        .squared_norms()
        .iter()
        .zip(f.values())
        .zip(w)
        .map(|((r2, v), w)| r2.powf(power) * v.norm_sqr() * w)
        .sum()
}

/// ‖ ‖x‖^a f ‖_{α,2}
pub fn radial_moment(f: &Field, a: f64) -> f64 {
    radial_moment_sq(f, a).sqrt()
}

/// ‖ ‖x‖^a F ‖_{σ,α,2}
pub fn omega_radial_moment(tf: &ScaleField, a: f64) -> f64 {
    match tf.grid() {
        None => 0.0,
        Some(g) => {
            let r2 = g.squared_norms();
            tf.weighted_norm_sq(|i| r2[i].powf(a), |_| true).sqrt()
        }
    }
}

/// Fraction of |x|²|f|² mass on the outermost nodes of any axis.
fn boundary_leak(f: &Field, a: f64) -> f64 {
    let g = f.grid();
    let total = radial_moment_sq(f, a);
    if total == 0.0 {
        return 0.0;
    }
    let r2 = g.squared_norms();
    let mut idx = vec![0usize; g.dim()];
    let mut edge = 0.0;
    for (i, v) in f.values().iter().enumerate() {
        g.unravel(i, &mut idx);
        if idx.iter().zip(g.dims()).any(|(&j, &d)| j + 1 == d) {
            edge += r2[i].powf(a) * v.norm_sqr() * g.weights()[i];
        }
    }
    edge / total
}

const LEAK_TOL: f64 = 1e-8;

fn nonzero_norm(f: &Field) -> Result<f64> {
    let n = norm_p(f, Norm::L2);
    if n == 0.0 {
        Err(PaxError::ZeroNorm("input field"))
    } else {
        Ok(n)
    }
}

/// ‖f‖² ≤ (2/(2|α|+n)) ‖‖x‖f‖ ‖‖y‖F_α f‖.
pub fn hpw_transform(f: &Field, plan: &TransformPlan) -> Result<HpwCertificate> {
    let nf = nonzero_norm(f)?;
    let ff = plan.forward(f)?;
    let constant = 2.0 / f.grid().alpha().homogeneity();
    let a = radial_moment(f, 1.0);
    let b = radial_moment(&ff, 1.0);
    let resolved = boundary_leak(f, 1.0) < LEAK_TOL && boundary_leak(&ff, 1.0) < LEAK_TOL;
    if !resolved {
        log::warn!("weighted integrands reach the grid boundary; enlarge the radius");
    }
    Ok(HpwCertificate::assemble(
        HpwVariant::SquaredNorm,
        nf * nf,
        constant,
        1.0,
        a,
        b,
        constant * a * b,
        resolved,
    ))
}

/// ‖f‖² ≤ (2/(2|α|+n)) ‖‖y‖F_α f‖ ‖‖x‖T_σ f‖_{σ,α,2}; refuses non-admissible m.
pub fn hpw_multiplier(f: &Field, m: &Multiplier, scales: &ScaleGrid, plan: &TransformPlan) -> Result<HpwCertificate> {
    hpw_general_impl(f, m, 1.0, 1.0, scales, plan, HpwVariant::SquaredNorm)
}

/// ‖f‖ ≤ (2/(2|α|+n))^{aε} ‖‖x‖^a T_σ f‖^ε_{σ,α,2} ‖‖y‖^b F_α f‖^{1-ε}, ε = b/(a+b).
pub fn hpw_general(
    f: &Field,
    m: &Multiplier,
    a: f64,
    b: f64,
    scales: &ScaleGrid,
    plan: &TransformPlan,
) -> Result<HpwCertificate> {
    hpw_general_impl(f, m, a, b, scales, plan, HpwVariant::Norm)
}

fn hpw_general_impl(
    f: &Field,
    m: &Multiplier,
    a: f64,
    b: f64,
    scales: &ScaleGrid,
    plan: &TransformPlan,
    variant: HpwVariant,
) -> Result<HpwCertificate> {
    if !(a >= 1.0 && b >= 1.0 && a.is_finite() && b.is_finite()) {
        return Err(PaxError::domain(format!("exponents must satisfy a, b >= 1, got a={a}, b={b}")));
    }
    let nf = nonzero_norm(f)?;
    require_admissible(m, scales, f.grid().dim())?;
    let ff = plan.forward(f)?;
    let tf = apply_scale_family(f, m, scales, plan)?;
    let constant = 2.0 / f.grid().alpha().homogeneity();
    let spatial = omega_radial_moment(&tf, a);
    let spectral = radial_moment(&ff, b);
    let resolved = boundary_leak(&ff, b) < LEAK_TOL
        && tf.slices().iter().all(|s| boundary_leak(s, a) < LEAK_TOL.sqrt());
    Ok(match variant {
        HpwVariant::SquaredNorm => HpwCertificate::assemble(
            variant,
            nf * nf,
            constant,
            1.0,
            spatial,
            spectral,
            constant * spatial * spectral,
            resolved,
        ),
        HpwVariant::Norm => {
            let eps = b / (a + b);
            let kappa = a * eps;
            let rhs = constant.powf(kappa) * spatial.powf(eps) * spectral.powf(1.0 - eps);
            HpwCertificate::assemble(variant, nf, constant, kappa, spatial, spectral, rhs, resolved)
        }
    })
}

/// Both sides of ‖‖x‖T f‖ ≤ ‖‖x‖^a T f‖^{1/a} ‖T f‖^{1/a'} over the σ-family.
pub fn holder_step(tf: &ScaleField, a: f64) -> Result<(f64, f64)> {
    if !(a >= 1.0) {
        return Err(PaxError::domain(format!("Hölder exponent must be >= 1, got {a}")));
    }
    let lhs = omega_radial_moment(tf, 1.0);
    let rhs = omega_radial_moment(tf, a).powf(1.0 / a) * omega_radial_moment(tf, 0.0).powf(1.0 - 1.0 / a);
    Ok((lhs, rhs))
}

/// (σ-interval) × (spatial set) region of scale space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleRegion {
    pub sigma: (f64, f64),
    pub spatial: SpatialSet,
}

impl ScaleRegion {
    pub fn validate(&self) -> Result<()> {
        let (a, b) = self.sigma;
        if !(a >= 0.0 && b >= a && b.is_finite()) {
            return Err(PaxError::domain(format!("scale interval must satisfy 0 <= a <= b < inf, got [{a}, {b}]")));
        }
        Ok(())
    }

    pub fn contains_sigma(&self, s: f64) -> bool {
        s >= self.sigma.0 && s <= self.sigma.1
    }
}

/// ‖f − χ_E f‖ / ‖f‖.
pub fn concentration_space(f: &Field, e: &SpatialSet) -> Result<f64> {
    let nf = nonzero_norm(f)?;
    let mask = e.mask(f.grid())?;
    let outside: Vec<bool> = mask.iter().map(|k| !k).collect();
    Ok(norm_p(&f.masked(&outside), Norm::L2) / nf)
}

/// ‖T f − χ_S T f‖_{σ,α,2} / ‖T f‖_{σ,α,2}.
pub fn concentration_scale(tf: &ScaleField, s: &ScaleRegion) -> Result<f64> {
    s.validate()?;
    let grid = tf.grid().ok_or(PaxError::ZeroNorm("scale family"))?;
    let total = tf.weighted_norm_sq(|_| 1.0, |_| true);
    if total == 0.0 {
        return Err(PaxError::ZeroNorm("scale family"));
    }
    let mask = s.spatial.mask(grid)?;
    let inside = tf.weighted_norm_sq(|i| if mask[i] { 1.0 } else { 0.0 }, |sig| s.contains_sigma(sig));
    Ok(((total - inside).max(0.0) / total).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConcentrationMeasurement {
    pub epsilon: f64,
    pub delta: f64,
    pub e: SpatialSet,
    pub s: ScaleRegion,
}

pub fn measure_concentration(f: &Field, tf: &ScaleField, e: &SpatialSet, s: &ScaleRegion) -> Result<ConcentrationMeasurement> {
    Ok(ConcentrationMeasurement {
        epsilon: concentration_space(f, e)?,
        delta: concentration_scale(tf, s)?,
        e: e.clone(),
        s: s.clone(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DsCertificate {
    pub m_l1: f64,
    pub mu_e: f64,
    /// ∬_S σ^{-2(2|α|+n)} dΩ_α
    pub s_weight: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub slack: f64,
    pub pass: bool,
    pub vacuous: bool,
    pub unbounded: bool,
}

/// ∬_S σ^{-q} dΩ_α in closed form in σ.
fn power_weight(grid: &TensorGrid, s: &ScaleRegion, q: f64) -> Result<f64> {
    let mu = measure_of_set(grid, &s.spatial)?;
    let (a, b) = s.sigma;
    if mu == 0.0 || a == b {
        return Ok(0.0);
    }
    if a == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(mu * (a.powf(-q) - b.powf(-q)) / q)
}

pub fn donoho_stark_certificate(
    f: &Field,
    m: &Multiplier,
    e: &SpatialSet,
    s: &ScaleRegion,
    scales: &ScaleGrid,
    plan: &TransformPlan,
) -> Result<DsCertificate> {
    s.validate()?;
    require_admissible(m, scales, f.grid().dim())?;
    let epsilon = concentration_space(f, e)?;
    let tf = apply_scale_family(f, m, scales, plan)?;
    let delta = concentration_scale(&tf, s)?;
    let grid = f.grid();
    let m_l1 = m.l1_norm(plan.output_grid())?;
    let mu_e = measure_of_set(grid, e)?;
    let s_weight = power_weight(grid, s, 2.0 * grid.alpha().homogeneity())?;
    let unbounded = s_weight.is_infinite();
    let lhs = if unbounded && m_l1 * mu_e > 0.0 {
        f64::INFINITY
    } else if unbounded {
        0.0
    } else {
        m_l1 * mu_e.sqrt() * s_weight.sqrt()
    };
    let rhs = 1.0 - (epsilon + delta);
    let vacuous = rhs <= 0.0;
    Ok(DsCertificate {
        m_l1,
        mu_e,
        s_weight,
        lhs,
        rhs,
        epsilon,
        delta,
        slack: lhs - rhs,
        pass: vacuous || lhs >= rhs - SLACK_TOL,
        vacuous,
        unbounded,
    })
}

/// ϱ^{2|α|+n} ‖m‖_{α,1} μ_α(E)^{1/2} Ω_α(S)^{1/2} with ϱ = 1/σ_a, for S above ξ.
pub fn remark_bound(s: &ScaleRegion, m: &Multiplier, e: &SpatialSet, xi: f64, plan: &TransformPlan) -> Result<f64> {
    s.validate()?;
    if !(xi > 0.0) {
        return Err(PaxError::domain(format!("xi must be positive, got {xi}")));
    }
    let (a, b) = s.sigma;
    if xi > b {
        return Err(PaxError::domain(format!("no scale of [{a}, {b}] lies above xi = {xi}")));
    }
    if a < xi {
        return Err(PaxError::domain(format!("scale region starts at {a}, below xi = {xi}")));
    }
    let grid = plan.input_grid();
    let rho = 1.0 / a;
    let omega = (b / a).ln() * measure_of_set(grid, &s.spatial)?;
    let mu_e = measure_of_set(grid, e)?;
    Ok(rho.powf(grid.alpha().homogeneity()) * m.l1_norm(plan.output_grid())? * mu_e.sqrt() * omega.sqrt())
}
