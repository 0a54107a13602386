//! Regressivity, the time-scale exponential and first-order linear dynamic
//! equations `y^Δ = p(t) y + f(t)` on isolated grids.
//!
//! On an isolated grid `y(σ(t)) = y(t) + μ(t) y^Δ(t)`, so the forward
//! recurrence is exact and is the reference solver. The two closed forms,
//! variation of constants and the factored form, are kept as independent
//! cross-checks.

use crate::error::{Error, Result};
use crate::timescale::{GridFunction, Support, TimeScaleGrid};

/// True iff `1 + μ(t) p(t) != 0` at every point where `p` is defined.
pub fn is_regressive(p: &GridFunction) -> bool {
    let grid = p.grid();
    p.values().iter().enumerate().all(|(i, &pi)| 1.0 + grid.mu_at(i) * pi != 0.0)
}

fn require_regressive(p: &GridFunction) -> Result<()> {
    if p.support() == Support::Full {
        return Err(Error::Domain("dynamic coefficients must not extend to b".into()));
    }
    let grid = p.grid();
    match p.values().iter().enumerate().find(|(i, &pi)| 1.0 + grid.mu_at(*i) * pi == 0.0) {
        None => Ok(()),
        Some((i, pi)) => Err(Error::Validation(format!(
            "coefficient is not regressive: 1 + μ(t)p(t) = 0 at t = {} (p = {pi})",
            grid.t(i)
        ))),
    }
}

/// `e_p(t_k, t_j)` for `j <= k` as the direct product `Π_{j <= i < k} (1 + μ_i p_i)`.
fn exp_forward(grid: &TimeScaleGrid, p: &[f64], j: usize, k: usize) -> f64 {
    (j..k).map(|i| 1.0 + grid.mu_at(i) * p[i]).product()
}

/// Time-scale exponential `e_p(t, t0)`.
///
/// For `t0 <= t` this is `Π_{τ ∈ [t0, t)} (1 + μ(τ) p(τ))`; for `t < t0` it is
/// `1 / e_p(t0, t)`. Both points must lie where the product is defined, i.e.
/// no further right than one past the end of `p`'s support.
pub fn exp_ts(p: &GridFunction, t: f64, t0: f64) -> Result<f64> {
    require_regressive(p)?;
    let grid = p.grid();
    let k = grid.index_of(t)?;
    let j = grid.index_of(t0)?;
    let reach = p.len();
    if k > reach || j > reach {
        return Err(Error::Domain(format!(
            "e_p({t}, {t0}) needs p beyond its {:?} support",
            p.support()
        )));
    }
    if j <= k {
        Ok(exp_forward(grid, p.values(), j, k))
    } else {
        Ok(1.0 / exp_forward(grid, p.values(), k, j))
    }
}

/// Prefix products `e_p(t_k, a)` for `k = 0..=len(p)`.
pub fn exp_profile(p: &GridFunction) -> Result<Vec<f64>> {
    require_regressive(p)?;
    let grid = p.grid();
    let mut out = Vec::with_capacity(p.len() + 1);
    let mut acc = 1.0;
    out.push(acc);
    for (i, &pi) in p.values().iter().enumerate() {
        acc *= 1.0 + grid.mu_at(i) * pi;
        out.push(acc);
    }
    Ok(out)
}

/// Regressive coefficient `p` and forcing `f` of `y^Δ = p y + f`, on a common support.
#[derive(Debug, Clone)]
pub struct CoefficientPair {
    p: GridFunction,
    f: GridFunction,
}

impl CoefficientPair {
    pub fn new(p: GridFunction, f: GridFunction) -> Result<Self> {
        if p.grid() != f.grid() {
            return Err(Error::Domain("p and f live on different grids".into()));
        }
        if p.support() != f.support() {
            return Err(Error::Domain(format!(
                "p is on {:?} but f is on {:?}",
                p.support(),
                f.support()
            )));
        }
        require_regressive(&p)?;
        Ok(Self { p, f })
    }

    pub fn p(&self) -> &GridFunction {
        &self.p
    }

    pub fn f(&self) -> &GridFunction {
        &self.f
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IvpMethod {
    /// `y(σ(t)) = y(t) + μ(t) (p(t) y(t) + f(t))`.
    Recurrence,
    /// `y(t) = e_p(t, t0) y0 + ∫_{t0}^t e_p(t, σ(τ)) f(τ) Δτ`, each exponential a direct product.
    VariationOfConstants,
    /// `y(t) = e_p(t, t0) [y0 + ∫_{t0}^t e_p(t0, σ(τ)) f(τ) Δτ]`.
    Factored,
}

/// Forward solve of `y^Δ = p y + f`, `y(t0) = y0` from the left end of the grid.
///
/// The solution lives one point further right than the coefficients: on the
/// full grid for κ-coefficients, on the κ-domain for κ²-coefficients.
pub fn solve_ivp(pair: &CoefficientPair, t0: f64, y0: f64, method: IvpMethod) -> Result<GridFunction> {
    let grid = pair.p.grid();
    if t0 != grid.a() {
        return Err(Error::Domain(format!(
            "forward solve must start at a = {}, got t0 = {t0}",
            grid.a()
        )));
    }
    let support = pair.p.support().widen()?;
    let p = pair.p.values();
    let f = pair.f.values();
    let n = p.len();
    let values = match method {
        IvpMethod::Recurrence => {
            let mut y = Vec::with_capacity(n + 1);
            let mut cur = y0;
            y.push(cur);
            for i in 0..n {
                cur += grid.mu_at(i) * (p[i] * cur + f[i]);
                y.push(cur);
            }
            y
        }
        IvpMethod::VariationOfConstants => (0..=n)
            .map(|k| {
                // Walk τ = t_{k-1}, ..., t_0 keeping prod = e_p(t_k, σ(τ)).
                let mut prod = 1.0;
                let mut integral = 0.0;
                for i in (0..k).rev() {
                    integral += grid.mu_at(i) * prod * f[i];
                    prod *= 1.0 + grid.mu_at(i) * p[i];
                }
                prod * y0 + integral
            })
            .collect(),
        IvpMethod::Factored => {
            let e = exp_profile(&pair.p)?;
            let mut integral = 0.0;
            let mut y = Vec::with_capacity(n + 1);
            for k in 0..=n {
                y.push(e[k] * (y0 + integral));
                if k < n {
                    // e_p(t0, σ(t_k)) = 1 / e_p(t_{k+1}, t0)
                    integral += grid.mu_at(k) * f[k] / e[k + 1];
                }
            }
            y
        }
    };
    GridFunction::new(grid.clone(), support, values)
}
