//! Synthesis of Lagrangians with a prescribed extremal.
//!
//! Every Lagrangian built here has the form
//!
//! ```text
//! L(t, x, v) = P(t, x) + Q(t, x) v + ½ R(t, x, v) v²
//! Q(t, x)    = C + ∫_a^t P_x(τ, 0) Δτ + q(t, x) - q(t, 0)
//! R(t, x, v) = R(t) + w(t, x, v) - w(t, 0, 0)
//! ```
//!
//! where `P`, `p`, `q`, `w`, `C`, `R0` are free and the profile `R(t)` solves
//!
//! ```text
//! R(t) + μ(t) {2 q_x(t, 0) + μ(t) P_xx(t, 0) + μ(σ(t))† R(σ(t))} = p(t),   R(a) = R0
//! ```
//!
//! on the κ²-domain. That makes `y ≡ 0` satisfy the Euler–Lagrange equation
//! with constant `C` and the Legendre quantity equal `p(t) > 0`. A nonzero
//! extremal `y0` is handled by composing with the shift
//! `(x, v) ↦ (x - y0(σ(t)), v - y0^Δ(t))`.
//!
//! On an isolated grid the profile equation is the dynamic equation
//! `R^Δ = r R + s` with
//!
//! ```text
//! r(t) = -(1 + μ(t) μ(σ(t))†) / (μ(t)² μ(σ(t))†)
//! s(t) = (p(t) - μ(t) [2 q_x(t, 0) + μ(t) P_xx(t, 0)]) / (μ(t)² μ(σ(t))†)
//! ```
//!
//! and `1 + μ r = -μ(σ(t)) / μ(t)`, so `r` is always regressive.

use std::fmt::Write as _;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::dynamic::{exp_profile, solve_ivp, CoefficientPair, IvpMethod};
use crate::error::{Error, Result};
use crate::expr::{eval2, parse, validate_arity, Expr, HyperDual, Var};
use crate::timescale::{dagger, delta_derivative, GridFunction, Support, TimeScaleGrid};
use crate::variational::Lagrangian;

/// Relative slack used to recognise `hZ` and `q`-power grids.
const FAMILY_SLACK: f64 = 1e-9;

/// Source text of the free ingredients, as they appear in configs and bundles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngredientSources {
    /// `P(t, x)`, the Lagrangian at zero velocity.
    #[serde(rename = "P")]
    pub potential: String,
    /// `p(t) > 0`, the prescribed value of the Legendre quantity.
    #[serde(rename = "p")]
    pub legendre: String,
    /// `q(t, x)`, the free part of `Q`.
    #[serde(rename = "q")]
    pub coupling: String,
    /// `w(t, x, v)`, the free part of `R`.
    #[serde(rename = "w")]
    pub curvature: String,
    /// `C`, the Euler–Lagrange constant.
    #[serde(rename = "C")]
    pub c: f64,
    /// `R0 = R(a)`.
    #[serde(rename = "R0")]
    pub r0: f64,
}

impl IngredientSources {
    pub fn new(potential: &str, legendre: &str, coupling: &str, curvature: &str, c: f64, r0: f64) -> Self {
        Self {
            potential: potential.into(),
            legendre: legendre.into(),
            coupling: coupling.into(),
            curvature: curvature.into(),
            c,
            r0,
        }
    }
}

/// Parsed ingredients with their variable restrictions checked:
/// `P = P(t, x)`, `p = p(t)`, `q = q(t, x)`, `w = w(t, x, v)`.
#[derive(Debug, Clone, PartialEq)]
pub struct IngredientBundle {
    sources: IngredientSources,
    potential: Expr,
    legendre: Expr,
    coupling: Expr,
    curvature: Expr,
}

fn parse_field(name: &str, src: &str, allowed: &[Var]) -> Result<Expr> {
    let expr = parse(src).map_err(|e| Error::Config(format!("ingredient {name}: {e}")))?;
    validate_arity(&expr, allowed).map_err(|e| match e {
        Error::DisallowedVariables { vars, .. } => Error::DisallowedVariables { name: name.into(), vars },
        other => other,
    })?;
    Ok(expr)
}

impl IngredientBundle {
    pub fn from_sources(sources: &IngredientSources) -> Result<Self> {
        if !(sources.c.is_finite() && sources.r0.is_finite()) {
            return Err(Error::Config("ingredients C and R0 must be finite".into()));
        }
        Ok(Self {
            potential: parse_field("P", &sources.potential, &[Var::T, Var::X])?,
            legendre: parse_field("p", &sources.legendre, &[Var::T])?,
            coupling: parse_field("q", &sources.coupling, &[Var::T, Var::X])?,
            curvature: parse_field("w", &sources.curvature, &[Var::T, Var::X, Var::V])?,
            sources: sources.clone(),
        })
    }

    pub fn parse(potential: &str, legendre: &str, coupling: &str, curvature: &str, c: f64, r0: f64) -> Result<Self> {
        Self::from_sources(&IngredientSources::new(potential, legendre, coupling, curvature, c, r0))
    }

    pub fn sources(&self) -> &IngredientSources {
        &self.sources
    }

    pub fn c(&self) -> f64 {
        self.sources.c
    }

    pub fn r0(&self) -> f64 {
        self.sources.r0
    }

    pub fn potential(&self) -> &Expr {
        &self.potential
    }

    pub fn coupling(&self) -> &Expr {
        &self.coupling
    }

    pub fn curvature(&self) -> &Expr {
        &self.curvature
    }

    /// `p(t)`.
    pub fn legendre_target(&self, t: f64) -> Result<f64> {
        self.legendre.eval(t, 0.0, 0.0)
    }

    /// `P(t, x)` with its x-partials.
    pub fn potential_at(&self, t: f64, x: f64) -> Result<HyperDual> {
        eval2(&self.potential, t, x, 0.0)
    }

    /// `q_x(t, 0)`, which equals `Q_x(t, 0)` because the offset of `Q` does not depend on `x`.
    pub fn coupling_x0(&self, t: f64) -> Result<f64> {
        eval2(&self.coupling, t, 0.0, 0.0).map(|d| d.d_x)
    }

    /// Fails unless `p(t) > 0` on the κ²-domain.
    pub fn validate_on(&self, grid: &TimeScaleGrid) -> Result<()> {
        for i in grid.kappa2() {
            let t = grid.t(i);
            let p = self.legendre_target(t)?;
            if p.is_nan() || p <= 0.0 {
                return Err(Error::Validation(format!(
                    "ingredient p must satisfy p(t) > 0 on [a,b]^κ² (strengthened Legendre condition), \
                     but p({t}) = {p}"
                )));
            }
        }
        Ok(())
    }
}

/// Which trajectory the synthesized Lagrangian is built around.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "lowercase")]
pub enum ExtremalSpec {
    Zero,
    /// An expression in `t` sampled on the grid.
    Expr(String),
    /// One value per grid point.
    Values(Vec<f64>),
}

impl ExtremalSpec {
    pub fn sample(&self, grid: &Arc<TimeScaleGrid>) -> Result<GridFunction> {
        match self {
            ExtremalSpec::Zero => GridFunction::constant(grid.clone(), Support::Full, 0.0),
            ExtremalSpec::Expr(src) => {
                let e = parse(src).map_err(|e| Error::Config(format!("extremal: {e}")))?;
                validate_arity(&e, &[Var::T]).map_err(|e| match e {
                    Error::DisallowedVariables { vars, .. } => {
                        Error::DisallowedVariables { name: "extremal".into(), vars }
                    }
                    other => other,
                })?;
                GridFunction::try_from_fn(grid.clone(), Support::Full, |_, t| e.eval(t, 0.0, 0.0))
            }
            ExtremalSpec::Values(v) => {
                if v.len() != grid.len() {
                    return Err(Error::Config(format!(
                        "extremal needs {} values, got {}",
                        grid.len(),
                        v.len()
                    )));
                }
                GridFunction::new(grid.clone(), Support::Full, v.clone())
            }
        }
    }
}

/// `r` and `s` of the profile equation `R^Δ = r R + s`, on the κ²-domain.
#[derive(Debug, Clone)]
pub struct RsCoefficients {
    pub r: GridFunction,
    pub s: GridFunction,
}

/// `C + ∫_a^t P_x(τ, base(τ)) Δτ` on the full grid.
fn offset_with_base(grid: &Arc<TimeScaleGrid>, ing: &IngredientBundle, base: impl Fn(usize) -> f64) -> Result<GridFunction> {
    let mut values = Vec::with_capacity(grid.len());
    let mut acc = ing.c();
    values.push(acc);
    for i in grid.kappa() {
        acc += grid.mu_at(i) * ing.potential_at(grid.t(i), base(i))?.d_x;
        values.push(acc);
    }
    GridFunction::new(grid.clone(), Support::Full, values)
}

/// The x-independent part of `Q`: `C + ∫_a^t P_x(τ, 0) Δτ`.
pub fn build_offset_q(grid: &Arc<TimeScaleGrid>, ing: &IngredientBundle) -> Result<GridFunction> {
    offset_with_base(grid, ing, |_| 0.0)
}

pub fn rs_coefficients(grid: &Arc<TimeScaleGrid>, ing: &IngredientBundle) -> Result<RsCoefficients> {
    let n = Support::Kappa2.len_on(grid);
    let mut r = Vec::with_capacity(n);
    let mut s = Vec::with_capacity(n);
    for i in grid.kappa2() {
        let t = grid.t(i);
        let mu = grid.mu_at(i);
        let mu_sigma_dag = dagger(grid.mu_at(i + 1));
        let denom = mu * mu * mu_sigma_dag;
        let p = ing.legendre_target(t)?;
        let bracket = 2.0 * ing.coupling_x0(t)? + mu * ing.potential_at(t, 0.0)?.d_xx;
        r.push(-(1.0 + mu * mu_sigma_dag) / denom);
        s.push((p - mu * bracket) / denom);
    }
    Ok(RsCoefficients {
        r: GridFunction::new(grid.clone(), Support::Kappa2, r)?,
        s: GridFunction::new(grid.clone(), Support::Kappa2, s)?,
    })
}

/// Profile `R(t) = R(t, 0, 0)` on the κ-domain, solved by forward recurrence.
pub fn solve_r_profile(grid: &Arc<TimeScaleGrid>, ing: &IngredientBundle) -> Result<GridFunction> {
    solve_r_profile_with(grid, ing, IvpMethod::Recurrence)
}

/// As [`solve_r_profile`] with a choice of solver; the closed forms are the
/// `e_r` representations `e_r(t,a) R0 + ∫ e_r(t, σ(τ)) s Δτ` and
/// `e_r(t,a) [R0 + ∫ e_r(a, σ(τ)) s Δτ]`.
pub fn solve_r_profile_with(grid: &Arc<TimeScaleGrid>, ing: &IngredientBundle, method: IvpMethod) -> Result<GridFunction> {
    ing.validate_on(grid)?;
    let RsCoefficients { r, s } = rs_coefficients(grid, ing)?;
    let pair = CoefficientPair::new(r, s)?;
    solve_ivp(&pair, grid.a(), ing.r0(), method)
}

#[derive(Debug, Clone, PartialEq)]
enum Baseline {
    /// Baselines at 0 after the shift, inheriting the null-extremal properties.
    Shifted,
    /// The printed general formula: baselines at `-y0(σ(t))`, `-y0^Δ(t)`, with its own offset.
    Literal { offset: GridFunction },
}

/// A synthesized Lagrangian, evaluable with exact partials at any κ-point.
#[derive(Debug, Clone, PartialEq)]
pub struct LagrangianForm {
    grid: Arc<TimeScaleGrid>,
    ingredients: IngredientBundle,
    offset_q: GridFunction,
    r_profile: GridFunction,
    extremal: GridFunction,
    extremal_delta: GridFunction,
    baseline: Baseline,
}

impl LagrangianForm {
    /// Reassembles a form from stored arrays, e.g. a serialized bundle.
    pub fn from_parts(
        grid: Arc<TimeScaleGrid>,
        ingredients: IngredientBundle,
        offset_q: Vec<f64>,
        r_profile: Vec<f64>,
        extremal: Vec<f64>,
        literal_offset: Option<Vec<f64>>,
    ) -> Result<Self> {
        let offset_q = GridFunction::new(grid.clone(), Support::Full, offset_q)?;
        let r_profile = GridFunction::new(grid.clone(), Support::Kappa, r_profile)?;
        let extremal = GridFunction::new(grid.clone(), Support::Full, extremal)?;
        let baseline = match literal_offset {
            None => Baseline::Shifted,
            Some(v) => Baseline::Literal { offset: GridFunction::new(grid.clone(), Support::Full, v)? },
        };
        Self::with_extremal(grid, ingredients, offset_q, r_profile, extremal, baseline)
    }

    fn with_extremal(
        grid: Arc<TimeScaleGrid>,
        ingredients: IngredientBundle,
        offset_q: GridFunction,
        r_profile: GridFunction,
        extremal: GridFunction,
        baseline: Baseline,
    ) -> Result<Self> {
        let extremal_delta = delta_derivative(&extremal)?;
        Ok(Self { grid, ingredients, offset_q, r_profile, extremal, extremal_delta, baseline })
    }

    pub fn grid(&self) -> &Arc<TimeScaleGrid> {
        &self.grid
    }

    pub fn ingredients(&self) -> &IngredientBundle {
        &self.ingredients
    }

    /// `C + ∫_a^t P_x(τ, 0) Δτ`, full grid.
    pub fn offset_q(&self) -> &GridFunction {
        &self.offset_q
    }

    /// `R(t, 0, 0)` on `a..ρ(b)`.
    pub fn r_profile(&self) -> &GridFunction {
        &self.r_profile
    }

    pub fn extremal(&self) -> &GridFunction {
        &self.extremal
    }

    pub fn is_literal(&self) -> bool {
        matches!(self.baseline, Baseline::Literal { .. })
    }

    /// Offset used by the literal general formula, if this is one.
    pub fn literal_offset(&self) -> Option<&GridFunction> {
        match &self.baseline {
            Baseline::Literal { offset } => Some(offset),
            Baseline::Shifted => None,
        }
    }

    /// `L(t_i, x, v)` with `x`, `v` seeded as independent hyper-dual variables.
    pub fn eval_at(&self, i: usize, x: f64, v: f64) -> Result<HyperDual> {
        if i >= self.grid.last() {
            return Err(Error::Domain(format!(
                "the Lagrangian is only defined on [a,b)^κ, not at t = {}",
                self.grid.t(i)
            )));
        }
        let t = self.grid.t(i);
        let y_sigma = self.extremal.at(i + 1);
        let y_delta = self.extremal_delta.at(i);
        let xs = HyperDual::var_x(x - y_sigma);
        let vs = HyperDual::var_v(v - y_delta);
        let ing = &self.ingredients;

        let (offset, q_base, w_base) = match &self.baseline {
            Baseline::Shifted => (self.offset_q.at(i), ing.coupling.eval(t, 0.0, 0.0)?, ing.curvature.eval(t, 0.0, 0.0)?),
            Baseline::Literal { offset } => (
                offset.at(i),
                ing.coupling.eval(t, -y_sigma, 0.0)?,
                ing.curvature.eval(t, -y_sigma, -y_delta)?,
            ),
        };
        let p_term = ing.potential.eval_dual(t, xs, vs)?;
        let q_coef = (ing.coupling.eval_dual(t, xs, vs)? - q_base) + offset;
        let r_coef = (ing.curvature.eval_dual(t, xs, vs)? - w_base) + self.r_profile.at(i);
        Ok(p_term + vs * q_coef + r_coef * (vs * vs) * 0.5)
    }

    /// CSV with columns `t,sigma,mu,offsetQ,Rprofile`; `Rprofile` is empty at `b`.
    pub fn to_csv(&self) -> String {
        let g = &self.grid;
        let mut out = String::from("t,sigma,mu,offsetQ,Rprofile\n");
        for i in 0..g.len() {
            let _ = write!(out, "{:?},{:?},{:?},{:?},", g.t(i), g.sigma_at(i), g.mu_at(i), self.offset_q.at(i));
            if i < self.r_profile.len() {
                let _ = write!(out, "{:?}", self.r_profile.at(i));
            }
            out.push('\n');
        }
        out
    }
}

impl Lagrangian for LagrangianForm {
    fn eval(&self, i: usize, _t: f64, x: f64, v: f64) -> Result<HyperDual> {
        self.eval_at(i, x, v)
    }
}

/// Synthesizes the Lagrangian for `extremal`, using the shift composition for
/// a nonzero extremal.
pub fn assemble_lagrangian(
    grid: &Arc<TimeScaleGrid>,
    ingredients: &IngredientBundle,
    extremal: &ExtremalSpec,
) -> Result<LagrangianForm> {
    let r_profile = solve_r_profile(grid, ingredients)?;
    let offset_q = build_offset_q(grid, ingredients)?;
    let y0 = extremal.sample(grid)?;
    LagrangianForm::with_extremal(grid.clone(), ingredients.clone(), offset_q, r_profile, y0, Baseline::Shifted)
}

/// The general formula exactly as printed, with baselines at `-y0(σ(τ))`
/// instead of 0. Kept for comparing Euler–Lagrange residuals against the
/// shift-composed form; it is not guaranteed to have `y0` as an extremal.
pub fn literal_general_form(
    grid: &Arc<TimeScaleGrid>,
    ingredients: &IngredientBundle,
    extremal: &ExtremalSpec,
) -> Result<LagrangianForm> {
    let r_profile = solve_r_profile(grid, ingredients)?;
    let offset_q = build_offset_q(grid, ingredients)?;
    let y0 = extremal.sample(grid)?;
    let offset = offset_with_base(grid, ingredients, |i| -y0.at(i + 1))?;
    LagrangianForm::with_extremal(grid.clone(), ingredients.clone(), offset_q, r_profile, y0, Baseline::Literal { offset })
}

/// Zero-extremal Lagrangian on `hZ` from the alternating-sum closed form
/// `R(t_k) = (-1)^k R0 + Σ_{i<k} (-1)^{k-i-1} (p(t_i) - 2h q_x(t_i,0) - h² P_xx(t_i,0))`.
pub fn closed_form_hz(grid: &Arc<TimeScaleGrid>, ing: &IngredientBundle) -> Result<LagrangianForm> {
    let h = (grid.b() - grid.a()) / grid.last() as f64;
    if grid.kappa().any(|i| (grid.mu_at(i) - h).abs() > FAMILY_SLACK * h) {
        return Err(Error::Config("closed form for hZ needs a uniform grid".into()));
    }
    ing.validate_on(grid)?;
    let n = grid.last();
    let mut terms = Vec::with_capacity(n);
    let mut px = Vec::with_capacity(n);
    for i in 0..n.saturating_sub(1) {
        let t = grid.t(i);
        let pot = ing.potential_at(t, 0.0)?;
        terms.push(ing.legendre_target(t)? - 2.0 * h * ing.coupling_x0(t)? - h * h * pot.d_xx);
    }
    for i in 0..n {
        px.push(ing.potential_at(grid.t(i), 0.0)?.d_x);
    }
    let sign = |k: usize| if k.is_multiple_of(2) { 1.0 } else { -1.0 };
    let r_profile = (0..n)
        .map(|k| sign(k) * ing.r0() + (0..k).map(|i| sign(k - i - 1) * terms[i]).sum::<f64>())
        .collect();
    let offset_q = (0..=n).map(|k| ing.c() + h * px[..k].iter().sum::<f64>()).collect();
    let zero = vec![0.0; grid.len()];
    LagrangianForm::from_parts(grid.clone(), ing.clone(), offset_q, r_profile, zero, None)
}

/// Zero-extremal Lagrangian on a `q`-power grid from the product closed form
/// `R(t) = Π_{[a,t)}(-q) [R0 + Σ_{τ∈[a,t)} (1-q) τ / (q Π_{[a,τ)}(-q)) s(τ)]`
/// with `s(τ) = q p(τ) / (τ (q-1)) - 2q q_x(τ,0) - q (q-1) τ P_xx(τ,0)`.
pub fn closed_form_q(grid: &Arc<TimeScaleGrid>, ing: &IngredientBundle) -> Result<LagrangianForm> {
    let a = grid.a();
    let q = grid.t(1) / a;
    if !(a > 0.0 && q > 1.0) || grid.kappa().any(|i| (grid.t(i + 1) / grid.t(i) - q).abs() > FAMILY_SLACK * q) {
        return Err(Error::Config("closed form for the q-scale needs a grid of consecutive powers of q".into()));
    }
    ing.validate_on(grid)?;
    let n = grid.last();
    let neg_q_pow = |k: usize| (-q).powi(k as i32);
    let mut weighted_s = Vec::with_capacity(n);
    for j in 0..n.saturating_sub(1) {
        let tau = grid.t(j);
        let s = q * ing.legendre_target(tau)? / (tau * (q - 1.0))
            - 2.0 * q * ing.coupling_x0(tau)?
            - q * (q - 1.0) * tau * ing.potential_at(tau, 0.0)?.d_xx;
        weighted_s.push((1.0 - q) * tau / (q * neg_q_pow(j)) * s);
    }
    let r_profile = (0..n)
        .map(|k| neg_q_pow(k) * (ing.r0() + weighted_s[..k].iter().sum::<f64>()))
        .collect();
    let mut px = Vec::with_capacity(n);
    for i in 0..n {
        let tau = grid.t(i);
        px.push(tau * ing.potential_at(tau, 0.0)?.d_x);
    }
    let offset_q = (0..=n).map(|k| ing.c() + (q - 1.0) * px[..k].iter().sum::<f64>()).collect();
    let zero = vec![0.0; grid.len()];
    LagrangianForm::from_parts(grid.clone(), ing.clone(), offset_q, r_profile, zero, None)
}

/// `e_r(t, a)` on the κ-domain, for tabulation.
pub fn exp_r_profile(grid: &Arc<TimeScaleGrid>, ing: &IngredientBundle) -> Result<Vec<f64>> {
    exp_profile(&rs_coefficients(grid, ing)?.r)
}
