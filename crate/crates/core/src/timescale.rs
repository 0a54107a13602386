//! Bounded isolated time scales and the delta-calculus primitives on them.
//!
//! A [`TimeScaleGrid`] holds the points `t_0 < t_1 < ... < t_N` of `[a, b]_T`.
//! Every point except `b` is right-scattered, so the forward jump, graininess,
//! delta derivative and delta integral all reduce to exact finite formulas:
//!
//! * `sigma(t_i) = t_{i+1}`, `sigma(b) = b`
//! * `rho(t_i) = t_{i-1}`, `rho(a) = a`
//! * `mu(t_i) = t_{i+1} - t_i`, `mu(b) = 0`
//! * `f^Δ(t_i) = (f(t_{i+1}) - f(t_i)) / mu(t_i)` on the κ-domain `t_0..t_{N-1}`
//! * `∫_{t_j}^{t_k} f Δt = Σ_{j <= i < k} mu(t_i) f(t_i)`

use std::fmt::Write as _;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative slack allowed when checking that `(b - a) / h` is an integer.
const UNIFORM_STEP_SLACK: f64 = 1e-9;

/// Generalized reciprocal: `1/α` for `α != 0`, and `0` for `α == 0`.
pub fn dagger(alpha: f64) -> f64 {
    if alpha == 0.0 {
        0.0
    } else {
        1.0 / alpha
    }
}

/// Recipe for one of the supported families of isolated time scales.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum GridSpec {
    /// `[a, b] ∩ (a + hZ)`; `b - a` must be an integer multiple of `h`.
    Uniform { a: f64, b: f64, h: f64 },
    /// `{q^k : kmin <= k <= kmax}` with `q > 1`.
    Qpow { q: f64, kmin: i32, kmax: i32 },
    /// Any strictly increasing list of at least three finite points.
    Explicit { points: Vec<f64> },
}

/// A finite, strictly increasing set of at least three points.
///
/// Points are computed once at construction and never recomputed, so grid
/// membership is tested with exact equality.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeScaleGrid {
    points: Vec<f64>,
}

impl TimeScaleGrid {
    pub fn from_points(points: Vec<f64>) -> Result<Self> {
        if points.len() < 3 {
            return Err(Error::Config(format!(
                "a time scale needs at least three points, got {}",
                points.len()
            )));
        }
        if let Some(bad) = points.iter().find(|p| !p.is_finite()) {
            return Err(Error::Config(format!("grid point {bad} is not finite")));
        }
        if let Some(i) = points.windows(2).position(|w| w[0] >= w[1]) {
            return Err(Error::Config(format!(
                "grid points must be strictly increasing: t[{}] = {} >= t[{}] = {}",
                i,
                points[i],
                i + 1,
                points[i + 1]
            )));
        }
        Ok(Self { points })
    }

    pub fn uniform(a: f64, b: f64, h: f64) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::Config(format!("uniform step h must be positive, got {h}")));
        }
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::Config(format!("uniform grid needs finite a < b, got [{a}, {b}]")));
        }
        let steps = (b - a) / h;
        let n = steps.round();
        if (steps - n).abs() > UNIFORM_STEP_SLACK * n.max(1.0) {
            return Err(Error::Config(format!(
                "b - a = {} is not an integer multiple of h = {h}",
                b - a
            )));
        }
        let n = n as usize;
        let mut points: Vec<f64> = (0..n).map(|i| a + i as f64 * h).collect();
        points.push(b);
        Self::from_points(points)
    }

    pub fn qpow(q: f64, kmin: i32, kmax: i32) -> Result<Self> {
        if !(q > 1.0 && q.is_finite()) {
            return Err(Error::Config(format!("q-scale needs q > 1, got {q}")));
        }
        if kmin > kmax {
            return Err(Error::Config(format!("q-scale needs kmin <= kmax, got {kmin} > {kmax}")));
        }
        Self::from_points((kmin..=kmax).map(|k| q.powi(k)).collect())
    }

    pub fn build(spec: &GridSpec) -> Result<Self> {
        match spec {
            GridSpec::Uniform { a, b, h } => Self::uniform(*a, *b, *h),
            GridSpec::Qpow { q, kmin, kmax } => Self::qpow(*q, *kmin, *kmax),
            GridSpec::Explicit { points } => Self::from_points(points.clone()),
        }
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// Number of points, `N + 1`.
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn a(&self) -> f64 {
        self.points[0]
    }

    pub fn b(&self) -> f64 {
        self.points[self.points.len() - 1]
    }

    /// Index of the last point, `N`.
    pub fn last(&self) -> usize {
        self.points.len() - 1
    }

    pub fn t(&self, i: usize) -> f64 {
        self.points[i]
    }

    /// Exact-equality lookup of a grid point.
    pub fn index_of(&self, t: f64) -> Result<usize> {
        let i = self.points.partition_point(|&p| p < t);
        if i < self.points.len() && self.points[i] == t {
            Ok(i)
        } else {
            Err(Error::Domain(format!("{t} is not a point of the time scale")))
        }
    }

    pub fn sigma_at(&self, i: usize) -> f64 {
        self.points[(i + 1).min(self.last())]
    }

    pub fn rho_at(&self, i: usize) -> f64 {
        self.points[i.saturating_sub(1)]
    }

    pub fn mu_at(&self, i: usize) -> f64 {
        self.sigma_at(i) - self.points[i]
    }

    pub fn sigma(&self, t: f64) -> Result<f64> {
        self.index_of(t).map(|i| self.sigma_at(i))
    }

    pub fn rho(&self, t: f64) -> Result<f64> {
        self.index_of(t).map(|i| self.rho_at(i))
    }

    pub fn mu(&self, t: f64) -> Result<f64> {
        self.index_of(t).map(|i| self.mu_at(i))
    }

    /// Indices of `[a, b]^κ`, i.e. every point but `b`.
    pub fn kappa(&self) -> std::ops::Range<usize> {
        0..self.last()
    }

    /// Indices of `[a, b]^{κ²}`, i.e. every point but the last two.
    pub fn kappa2(&self) -> std::ops::Range<usize> {
        0..self.last() - 1
    }

    /// CSV with columns `index,t,sigma,mu`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,t,sigma,mu\n");
        for i in 0..self.len() {
            let _ = writeln!(out, "{},{:?},{:?},{:?}", i, self.t(i), self.sigma_at(i), self.mu_at(i));
        }
        out
    }
}

/// The part of the grid a [`GridFunction`] is defined on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Support {
    /// Every point `t_0..t_N`.
    Full,
    /// `t_0..t_{N-1}`.
    Kappa,
    /// `t_0..t_{N-2}`.
    Kappa2,
}

impl Support {
    /// Number of values a function with this support has on `grid`.
    pub fn len_on(self, grid: &TimeScaleGrid) -> usize {
        match self {
            Support::Full => grid.len(),
            Support::Kappa => grid.len() - 1,
            Support::Kappa2 => grid.len() - 2,
        }
    }

    /// Support of the solution of a first-order dynamic equation whose
    /// coefficients live on `self`: one point further to the right.
    pub fn widen(self) -> Result<Support> {
        match self {
            Support::Kappa => Ok(Support::Full),
            Support::Kappa2 => Ok(Support::Kappa),
            Support::Full => Err(Error::Domain(
                "coefficients on the full grid have no successor at b".into(),
            )),
        }
    }

    pub fn contains(self, other: Support) -> bool {
        self.rank() >= other.rank()
    }

    fn rank(self) -> u8 {
        match self {
            Support::Full => 2,
            Support::Kappa => 1,
            Support::Kappa2 => 0,
        }
    }
}

/// Real values attached to the first `support.len_on(grid)` grid points.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Arc<TimeScaleGrid>,
    support: Support,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Arc<TimeScaleGrid>, support: Support, values: Vec<f64>) -> Result<Self> {
        let expected = support.len_on(&grid);
        if values.len() != expected {
            return Err(Error::Domain(format!(
                "grid function on {support:?} needs {expected} values, got {}",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!(
                "grid function value at t = {} is not finite ({})",
                grid.t(i),
                values[i]
            )));
        }
        Ok(Self { grid, support, values })
    }

    /// Samples `f` at each point of `support`.
    pub fn from_fn(
        grid: Arc<TimeScaleGrid>,
        support: Support,
        mut f: impl FnMut(f64) -> f64,
    ) -> Result<Self> {
        let values = grid.points()[..support.len_on(&grid)].iter().map(|&t| f(t)).collect();
        Self::new(grid, support, values)
    }

    pub fn try_from_fn(
        grid: Arc<TimeScaleGrid>,
        support: Support,
        mut f: impl FnMut(usize, f64) -> Result<f64>,
    ) -> Result<Self> {
        let values = grid.points()[..support.len_on(&grid)]
            .iter()
            .enumerate()
            .map(|(i, &t)| f(i, t))
            .collect::<Result<Vec<_>>>()?;
        Self::new(grid, support, values)
    }

    pub fn constant(grid: Arc<TimeScaleGrid>, support: Support, c: f64) -> Result<Self> {
        Self::from_fn(grid, support, |_| c)
    }

    pub fn grid(&self) -> &Arc<TimeScaleGrid> {
        &self.grid
    }

    pub fn support(&self) -> Support {
        self.support
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Value at the `i`-th grid point.
    pub fn at(&self, i: usize) -> f64 {
        self.values[i]
    }

    /// Value at the grid point `t`.
    pub fn get(&self, t: f64) -> Result<f64> {
        let i = self.grid.index_of(t)?;
        self.values.get(i).copied().ok_or_else(|| {
            Error::Domain(format!("t = {t} lies outside the {:?} support", self.support))
        })
    }

    /// Pointwise scaling.
    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        Self::new(self.grid.clone(), self.support, self.values.iter().map(|v| lambda * v).collect())
    }

    pub(crate) fn same_grid(&self, other: &TimeScaleGrid) -> bool {
        std::ptr::eq(Arc::as_ptr(&self.grid), other) || *self.grid == *other
    }
}

/// `f^Δ(t) = (f(σ(t)) - f(t)) / μ(t)` on the κ-domain.
pub fn delta_derivative(f: &GridFunction) -> Result<GridFunction> {
    if f.support != Support::Full {
        return Err(Error::Domain(format!(
            "delta derivative needs values on the full grid, got {:?}",
            f.support
        )));
    }
    let grid = &f.grid;
    let values = grid
        .kappa()
        .map(|i| (f.values[i + 1] - f.values[i]) / grid.mu_at(i))
        .collect();
    GridFunction::new(grid.clone(), Support::Kappa, values)
}

/// `∫_lo^hi f(t) Δt = Σ_{t ∈ [lo, hi)} μ(t) f(t)`.
pub fn delta_integral(f: &GridFunction, lo: f64, hi: f64) -> Result<f64> {
    let grid = &f.grid;
    let i = grid.index_of(lo)?;
    let k = grid.index_of(hi)?;
    if i > k {
        return Err(Error::Domain(format!("integral bounds out of order: {lo} > {hi}")));
    }
    if k > f.len() {
        return Err(Error::Domain(format!(
            "integrand on {:?} does not cover [{lo}, {hi})",
            f.support
        )));
    }
    Ok((i..k).map(|j| grid.mu_at(j) * f.values[j]).sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z(a: f64, b: f64) -> Arc<TimeScaleGrid> {
        Arc::new(TimeScaleGrid::uniform(a, b, 1.0).unwrap())
    }

    #[test]
    fn jump_operators_on_standard_scales() {
        let hz = TimeScaleGrid::uniform(0.0, 10.0, 2.0).unwrap();
        assert_eq!(hz.sigma(4.0).unwrap(), 6.0);
        assert_eq!(hz.mu(4.0).unwrap(), 2.0);
        assert_eq!(hz.rho(4.0).unwrap(), 2.0);

        let qs = TimeScaleGrid::qpow(2.0, 0, 5).unwrap();
        assert_eq!(qs.sigma(4.0).unwrap(), 8.0);
        assert_eq!(qs.mu(4.0).unwrap(), 4.0);
    }

    #[test]
    fn boundary_conventions() {
        let g = TimeScaleGrid::uniform(0.0, 4.0, 1.0).unwrap();
        assert_eq!(g.sigma(4.0).unwrap(), 4.0);
        assert_eq!(g.mu(4.0).unwrap(), 0.0);
        assert_eq!(g.rho(0.0).unwrap(), 0.0);
        assert_eq!(g.kappa(), 0..4);
        assert_eq!(g.kappa2(), 0..3);
    }

    #[test]
    fn off_grid_points_are_domain_errors() {
        let g = TimeScaleGrid::uniform(0.0, 4.0, 1.0).unwrap();
        assert!(matches!(g.sigma(0.5), Err(Error::Domain(_))));
        assert!(matches!(g.mu(-1.0), Err(Error::Domain(_))));
        assert!(matches!(g.rho(5.0), Err(Error::Domain(_))));
    }

    #[test]
    fn dagger_values() {
        assert_eq!(dagger(2.0), 0.5);
        assert_eq!(dagger(0.0), 0.0);
        assert_eq!(dagger(-4.0), -0.25);
    }

    #[test]
    fn build_grid_families() {
        let u = TimeScaleGrid::build(&GridSpec::Uniform { a: 0.0, b: 4.0, h: 1.0 }).unwrap();
        assert_eq!(u.points(), &[0.0, 1.0, 2.0, 3.0, 4.0]);
        let q = TimeScaleGrid::build(&GridSpec::Qpow { q: 2.0, kmin: 0, kmax: 3 }).unwrap();
        assert_eq!(q.points(), &[1.0, 2.0, 4.0, 8.0]);
        let logs = vec![1f64.ln(), 2f64.ln(), 3f64.ln()];
        let e = TimeScaleGrid::build(&GridSpec::Explicit { points: logs.clone() }).unwrap();
        assert_eq!(e.points(), logs.as_slice());
    }

    #[test]
    fn uniform_endpoint_is_exact() {
        let g = TimeScaleGrid::uniform(0.0, 1.0, 0.1).unwrap();
        assert_eq!(g.len(), 11);
        assert_eq!(g.b(), 1.0);
        assert!(g.index_of(1.0).is_ok());
    }

    #[test]
    fn nonconforming_specs_are_rejected() {
        assert!(matches!(TimeScaleGrid::uniform(0.0, 1.0, 0.3), Err(Error::Config(_))));
        assert!(matches!(TimeScaleGrid::uniform(0.0, 1.0, 0.0), Err(Error::Config(_))));
        assert!(matches!(TimeScaleGrid::uniform(1.0, 1.0, 0.5), Err(Error::Config(_))));
        assert!(matches!(TimeScaleGrid::qpow(1.0, 0, 3), Err(Error::Config(_))));
        assert!(matches!(TimeScaleGrid::qpow(2.0, 0, 1), Err(Error::Config(_))));
        assert!(matches!(TimeScaleGrid::from_points(vec![0.0, 2.0, 1.0]), Err(Error::Config(_))));
        assert!(matches!(TimeScaleGrid::from_points(vec![0.0, 1.0, 1.0]), Err(Error::Config(_))));
        assert!(matches!(TimeScaleGrid::from_points(vec![0.0, 1.0]), Err(Error::Config(_))));
    }

    #[test]
    fn delta_derivative_examples() {
        let g = z(0.0, 5.0);
        let f = GridFunction::from_fn(g.clone(), Support::Full, |t| t * t).unwrap();
        let d = delta_derivative(&f).unwrap();
        assert_eq!(d.get(3.0).unwrap(), 7.0);
        assert_eq!(d.support(), Support::Kappa);

        let q = Arc::new(TimeScaleGrid::qpow(2.0, 0, 4).unwrap());
        let f = GridFunction::from_fn(q, Support::Full, |t| t * t).unwrap();
        assert_eq!(delta_derivative(&f).unwrap().get(1.0).unwrap(), 3.0);

        let c = GridFunction::constant(g, Support::Full, 3.5).unwrap();
        assert!(delta_derivative(&c).unwrap().values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn delta_integral_examples() {
        let g = z(0.0, 5.0);
        let f = GridFunction::from_fn(g.clone(), Support::Full, |t| t).unwrap();
        assert_eq!(delta_integral(&f, 0.0, 3.0).unwrap(), 3.0);
        assert_eq!(delta_integral(&f, 2.0, 2.0).unwrap(), 0.0);

        let h = Arc::new(TimeScaleGrid::uniform(0.0, 3.0, 0.5).unwrap());
        let one = GridFunction::constant(h, Support::Full, 1.0).unwrap();
        assert_eq!(delta_integral(&one, 0.0, 2.0).unwrap(), 2.0);

        let q = Arc::new(TimeScaleGrid::qpow(2.0, 0, 3).unwrap());
        let one = GridFunction::constant(q, Support::Full, 1.0).unwrap();
        assert_eq!(delta_integral(&one, 1.0, 8.0).unwrap(), 7.0);
    }

    #[test]
    fn delta_integral_errors() {
        let g = z(0.0, 5.0);
        let f = GridFunction::constant(g.clone(), Support::Full, 1.0).unwrap();
        assert!(matches!(delta_integral(&f, 3.0, 1.0), Err(Error::Domain(_))));
        assert!(matches!(delta_integral(&f, 0.5, 3.0), Err(Error::Domain(_))));
        let k2 = GridFunction::constant(g, Support::Kappa2, 1.0).unwrap();
        assert!(delta_integral(&k2, 0.0, 4.0).is_ok());
        assert!(matches!(delta_integral(&k2, 0.0, 5.0), Err(Error::Domain(_))));
    }

    #[test]
    fn grid_function_rejects_bad_lengths_and_nans() {
        let g = z(0.0, 3.0);
        assert!(GridFunction::new(g.clone(), Support::Full, vec![0.0; 3]).is_err());
        assert!(GridFunction::new(g.clone(), Support::Kappa, vec![0.0; 3]).is_ok());
        assert!(GridFunction::new(g, Support::Full, vec![0.0, f64::NAN, 0.0, 0.0]).is_err());
    }

    #[test]
    fn csv_export_has_expected_columns() {
        let g = TimeScaleGrid::qpow(2.0, 0, 2).unwrap();
        assert_eq!(g.to_csv(), "index,t,sigma,mu\n0,1.0,2.0,1.0\n1,2.0,4.0,2.0\n2,4.0,4.0,0.0\n");
    }
}
