//! Independent numerical checks of first- and second-order optimality
//! conditions for `𝓛(y) = ∫_a^b L(t, y^σ(t), y^Δ(t)) Δt` on an isolated grid.
//!
//! All checks read the Lagrangian only through [`Lagrangian::eval`], so they
//! apply equally to synthesized forms and to hand-written expressions.

use std::fmt::Write as _;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{parse, validate_arity, Expr, HyperDual, Var};
use crate::timescale::{dagger, GridFunction, Support, TimeScaleGrid};

/// Boundary values must match to this absolute tolerance.
pub const BOUNDARY_TOLERANCE: f64 = 1e-12;

/// Anything that evaluates `L(t_i, x, v)` with partials in `(x, v)` at a κ-point.
pub trait Lagrangian {
    fn eval(&self, i: usize, t: f64, x: f64, v: f64) -> Result<HyperDual>;
}

/// A Lagrangian given directly as an expression in `t`, `x`, `v`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExprLagrangian(pub Expr);

impl ExprLagrangian {
    pub fn parse(src: &str) -> Result<Self> {
        let e = parse(src)?;
        validate_arity(&e, &[Var::T, Var::X, Var::V])?;
        Ok(Self(e))
    }
}

impl Lagrangian for ExprLagrangian {
    fn eval(&self, _i: usize, t: f64, x: f64, v: f64) -> Result<HyperDual> {
        self.0.eval_dual(t, HyperDual::var_x(x), HyperDual::var_v(v))
    }
}

impl<L: Lagrangian + ?Sized> Lagrangian for &L {
    fn eval(&self, i: usize, t: f64, x: f64, v: f64) -> Result<HyperDual> {
        (**self).eval(i, t, x, v)
    }
}

/// `sup_κ |y^σ| + sup_κ |y^Δ|`.
pub fn c1rd_norm(y: &GridFunction) -> f64 {
    let g = y.grid();
    g.kappa().fold(0.0f64, |m, i| m.max(y.at(i + 1).abs()))
        + g.kappa().fold(0.0f64, |m, i| m.max(((y.at(i + 1) - y.at(i)) / g.mu_at(i)).abs()))
}

/// Euler–Lagrange residual in integral form.
#[derive(Debug, Clone)]
pub struct ElResidual {
    /// `g(t) = L_v(t) - ∫_a^t L_x Δτ` on the κ-domain.
    pub g: GridFunction,
    /// `max |g - mean(g)|`.
    pub constancy: f64,
    /// `mean(g)`, the Euler–Lagrange constant when the equation holds.
    pub constant: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub t: Vec<f64>,
    pub el_residual: Vec<f64>,
    pub el_constancy: f64,
    pub el_constant: f64,
    pub legendre_lhs: Vec<f64>,
    pub legendre_min: f64,
    /// `max |legendre_lhs - p|` when the prescribed `p` is known.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub legendre_max_deviation: Option<f64>,
    pub grad_norm: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub perturbation_min_delta: Option<f64>,
}

impl VerificationReport {
    /// Fixed-order text table followed by the scalar summaries.
    pub fn render(&self) -> String {
        let mut out = format!("{:>24} {:>24} {:>24}\n", "t", "g(t)", "legendre_lhs(t)");
        for (i, (t, g)) in self.t.iter().zip(&self.el_residual).enumerate() {
            let leg = self.legendre_lhs.get(i).map_or_else(|| "-".to_string(), |v| format!("{v:.15e}"));
            let _ = writeln!(out, "{t:>24.15e} {g:>24.15e} {leg:>24}");
        }
        let _ = writeln!(out, "el_constant            {:.15e}", self.el_constant);
        let _ = writeln!(out, "el_constancy           {:.6e}", self.el_constancy);
        let _ = writeln!(out, "legendre_min           {:.15e}", self.legendre_min);
        if let Some(d) = self.legendre_max_deviation {
            let _ = writeln!(out, "legendre_max_deviation {d:.6e}");
        }
        let _ = writeln!(out, "grad_norm              {:.6e}", self.grad_norm);
        if let Some(d) = self.perturbation_min_delta {
            let _ = writeln!(out, "perturbation_min_delta {d:.15e}");
        }
        out
    }
}

/// `min 𝓛 subject to y(a) = α, y(b) = β` on `grid`.
pub struct VariationalProblem<'a> {
    grid: Arc<TimeScaleGrid>,
    lagrangian: &'a dyn Lagrangian,
    boundary: (f64, f64),
}

impl<'a> VariationalProblem<'a> {
    pub fn new(grid: Arc<TimeScaleGrid>, lagrangian: &'a dyn Lagrangian, alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha.is_finite() && beta.is_finite()) {
            return Err(Error::Config("boundary values must be finite".into()));
        }
        Ok(Self { grid, lagrangian, boundary: (alpha, beta) })
    }

    /// Problem whose boundary values are taken from `y`.
    pub fn through(lagrangian: &'a dyn Lagrangian, y: &GridFunction) -> Result<Self> {
        let grid = y.grid().clone();
        let (a, b) = (y.at(0), y.at(grid.last()));
        Self::new(grid, lagrangian, a, b)
    }

    pub fn grid(&self) -> &Arc<TimeScaleGrid> {
        &self.grid
    }

    pub fn boundary(&self) -> (f64, f64) {
        self.boundary
    }

    fn check_admissible(&self, y: &GridFunction) -> Result<()> {
        if y.support() != Support::Full || !y.same_grid(&self.grid) {
            return Err(Error::Domain("trajectory must be given on every point of the problem's grid".into()));
        }
        let (alpha, beta) = self.boundary;
        let (ya, yb) = (y.at(0), y.at(self.grid.last()));
        if (ya - alpha).abs() > BOUNDARY_TOLERANCE || (yb - beta).abs() > BOUNDARY_TOLERANCE {
            return Err(Error::BoundaryMismatch(format!(
                "y(a) = {ya}, y(b) = {yb} but the problem requires y(a) = {alpha}, y(b) = {beta}"
            )));
        }
        Ok(())
    }

    /// `L(t, y^σ(t), y^Δ(t))` at every κ-point.
    fn samples(&self, y: &GridFunction) -> Result<Vec<HyperDual>> {
        self.check_admissible(y)?;
        let g = &self.grid;
        g.kappa()
            .map(|i| {
                let x = y.at(i + 1);
                let v = (y.at(i + 1) - y.at(i)) / g.mu_at(i);
                self.lagrangian.eval(i, g.t(i), x, v)
            })
            .collect()
    }

    /// `Σ_{t ∈ [a, b)} μ(t) L(t, y^σ(t), y^Δ(t))`.
    pub fn evaluate_functional(&self, y: &GridFunction) -> Result<f64> {
        let g = &self.grid;
        Ok(self.samples(y)?.iter().enumerate().map(|(i, s)| g.mu_at(i) * s.value).sum())
    }

    pub fn el_residual(&self, y: &GridFunction) -> Result<ElResidual> {
        let g = &self.grid;
        let samples = self.samples(y)?;
        let mut integral = 0.0;
        let mut values = Vec::with_capacity(samples.len());
        for (i, s) in samples.iter().enumerate() {
            values.push(s.d_v - integral);
            integral += g.mu_at(i) * s.d_x;
        }
        let constant = values.iter().sum::<f64>() / values.len() as f64;
        let constancy = values.iter().fold(0.0f64, |m, v| m.max((v - constant).abs()));
        Ok(ElResidual { g: GridFunction::new(g.clone(), Support::Kappa, values)?, constancy, constant })
    }

    /// `A(t) + μ(t) {2C(t) + μ(t) B(t) + μ(σ(t))† A(σ(t))}` on the κ²-domain with
    /// `A = L_vv`, `B = L_xx`, `C = L_xv` along `y`.
    pub fn legendre_lhs(&self, y: &GridFunction) -> Result<GridFunction> {
        let g = &self.grid;
        let s = self.samples(y)?;
        let values = g
            .kappa2()
            .map(|i| {
                let mu = g.mu_at(i);
                let here = &s[i];
                here.d_vv + mu * (2.0 * here.d_xv + mu * here.d_xx + dagger(g.mu_at(i + 1)) * s[i + 1].d_vv)
            })
            .collect();
        GridFunction::new(g.clone(), Support::Kappa2, values)
    }

    /// Gradient of the discretized functional with respect to the interior
    /// values `y(t_1), ..., y(t_{N-1})`:
    /// `∂𝓛/∂y_j = μ_{j-1} L_x(t_{j-1}) + L_v(t_{j-1}) - L_v(t_j)`.
    pub fn gradient(&self, y: &GridFunction) -> Result<Vec<f64>> {
        let g = &self.grid;
        let s = self.samples(y)?;
        Ok((1..g.last())
            .map(|j| g.mu_at(j - 1) * s[j - 1].d_x + s[j - 1].d_v - s[j].d_v)
            .collect())
    }

    /// Sup-norm of [`Self::gradient`].
    pub fn stationarity_gradient(&self, y: &GridFunction) -> Result<f64> {
        Ok(self.gradient(y)?.iter().fold(0.0f64, |m, d| m.max(d.abs())))
    }

    /// Smallest `𝓛(y0 + εη) - 𝓛(y0)` over `count` seeded random perturbations
    /// `η` vanishing at both ends, scaled so `‖εη‖_{C¹_rd} <= radius`.
    pub fn perturbation_sample(&self, y0: &GridFunction, count: usize, radius: f64, seed: u64) -> Result<f64> {
        if count == 0 {
            return Err(Error::Config("perturbation count must be at least 1".into()));
        }
        if !(radius >= 0.0 && radius.is_finite()) {
            return Err(Error::Config(format!("perturbation radius must be non-negative, got {radius}")));
        }
        let base = self.evaluate_functional(y0)?;
        let g = &self.grid;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut best = f64::INFINITY;
        for _ in 0..count {
            let mut eta = vec![0.0; g.len()];
            for e in &mut eta[1..g.last()] {
                *e = rng.gen_range(-1.0..=1.0);
            }
            let eta = GridFunction::new(g.clone(), Support::Full, eta)?;
            let norm = c1rd_norm(&eta);
            let shrink: f64 = 1.0 - rng.gen::<f64>();
            let eps = if norm > 0.0 { radius * shrink / norm } else { 0.0 };
            let values = y0.values().iter().zip(eta.values()).map(|(y, e)| y + eps * e).collect();
            let y = GridFunction::new(g.clone(), Support::Full, values)?;
            best = best.min(self.evaluate_functional(&y)? - base);
        }
        Ok(best)
    }

    /// Runs the Euler–Lagrange, Legendre and stationarity checks at `y`.
    pub fn verify(&self, y: &GridFunction) -> Result<VerificationReport> {
        let el = self.el_residual(y)?;
        let leg = self.legendre_lhs(y)?;
        Ok(VerificationReport {
            t: self.grid.points()[..self.grid.last()].to_vec(),
            el_residual: el.g.values().to_vec(),
            el_constancy: el.constancy,
            el_constant: el.constant,
            legendre_min: leg.values().iter().copied().fold(f64::INFINITY, f64::min),
            legendre_lhs: leg.into_values(),
            legendre_max_deviation: None,
            grad_norm: self.stationarity_gradient(y)?,
            perturbation_min_delta: None,
        })
    }
}
