//! Shared generators and independent oracles for the integration tests.
#![allow(dead_code)]

use std::sync::Arc;

use deltavar::expr::{BinOp, Func};
use deltavar::{
    Expr, GridFunction, GridSpec, HyperDual, IngredientBundle, Lagrangian, Support, TimeScaleGrid, Var,
    VariationalProblem,
};
use rand::Rng;

pub fn grid(spec: GridSpec) -> Arc<TimeScaleGrid> {
    Arc::new(TimeScaleGrid::build(&spec).unwrap())
}

/// `n` points starting at `start` with gaps drawn from `[min_gap, max_gap]`.
pub fn random_grid(rng: &mut impl Rng, n: usize, start: f64, min_gap: f64, max_gap: f64) -> Arc<TimeScaleGrid> {
    let mut pts = Vec::with_capacity(n);
    let mut t = start;
    for _ in 0..n {
        pts.push(t);
        t += rng.gen_range(min_gap..=max_gap);
    }
    grid(GridSpec::Explicit { points: pts })
}

fn monomial(coef: f64, vars: &[(&str, u32)]) -> String {
    let mut s = format!("{coef:?}");
    for (name, power) in vars {
        match power {
            0 => {}
            1 => s.push_str(&format!("*{name}")),
            p => s.push_str(&format!("*{name}^{p}")),
        }
    }
    s
}

/// Random polynomial of total degree <= `degree` in `vars`, coefficients in `[-scale, scale]`.
pub fn random_poly(rng: &mut impl Rng, vars: &[&str], degree: u32, scale: f64) -> String {
    let mut exps: Vec<Vec<u32>> = vec![vec![]];
    for _ in vars {
        exps = exps
            .into_iter()
            .flat_map(|e| (0..=degree).map(move |k| [e.clone(), vec![k]].concat()))
            .collect();
    }
    let terms: Vec<String> = exps
        .into_iter()
        .filter(|e| e.iter().sum::<u32>() <= degree)
        .filter_map(|e| {
            if !rng.gen_bool(0.6) {
                return None;
            }
            let c: f64 = rng.gen_range(-scale..=scale);
            let vp: Vec<(&str, u32)> = vars.iter().copied().zip(e).collect();
            Some(monomial(c, &vp))
        })
        .collect();
    if terms.is_empty() {
        "0".into()
    } else {
        terms.join(" + ")
    }
}

/// `1 + Σ c_k t^k` with `c_k ∈ [0, scale]`, positive for `t >= 0`.
pub fn random_positive_p(rng: &mut impl Rng, scale: f64) -> String {
    let mut s = String::from("1");
    for k in 0..=3 {
        let c: f64 = rng.gen_range(0.0..=scale);
        s.push_str(&format!(" + {}", monomial(c, &[("t", k)])));
    }
    s
}

/// Ingredient draw: cubic `P(t,x)`, `q(t,x)`, `w(t,x,v)` and `p = 1 + positive cubic`.
pub fn random_bundle(rng: &mut impl Rng, scale: f64) -> IngredientBundle {
    let pot = random_poly(rng, &["t", "x"], 3, scale);
    let p = random_positive_p(rng, scale);
    let q = random_poly(rng, &["t", "x"], 3, scale);
    let w = random_poly(rng, &["t", "x", "v"], 3, scale);
    let c = rng.gen_range(-2.0..=2.0);
    let r0 = rng.gen_range(-2.0..=2.0);
    IngredientBundle::parse(&pot, &p, &q, &w, c, r0).unwrap()
}

/// `max |a - b| / max(max |a|, max |b|)`; zero when both are identically zero.
pub fn rel_dev(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let scale = a.iter().chain(b).fold(0.0f64, |m, v| m.max(v.abs()));
    let diff = a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

/// Gradient of `𝓛` in the interior values by central differences on `evaluate_functional`.
pub fn fd_gradient(l: &dyn Lagrangian, y: &GridFunction, step: f64) -> Vec<f64> {
    let g = y.grid().clone();
    let prob = VariationalProblem::through(l, y).unwrap();
    (1..g.last())
        .map(|j| {
            let mut plus = y.values().to_vec();
            let mut minus = y.values().to_vec();
            plus[j] += step;
            minus[j] -= step;
            let plus = GridFunction::new(g.clone(), Support::Full, plus).unwrap();
            let minus = GridFunction::new(g.clone(), Support::Full, minus).unwrap();
            (prob.evaluate_functional(&plus).unwrap() - prob.evaluate_functional(&minus).unwrap()) / (2.0 * step)
        })
        .collect()
}

/// `R(t) + μ(t){2 q_x(t,0) + μ(t) P_xx(t,0) + μ(σ(t))† R(σ(t))} - p(t)` on κ², straight from the definition.
pub fn profile_equation_residual(g: &TimeScaleGrid, ing: &IngredientBundle, r: &[f64]) -> Vec<f64> {
    g.kappa2()
        .map(|i| {
            let t = g.t(i);
            let mu = g.mu_at(i);
            let qx = deltavar::eval2(ing.coupling(), t, 0.0, 0.0).unwrap().d_x;
            let pxx = deltavar::eval2(ing.potential(), t, 0.0, 0.0).unwrap().d_xx;
            r[i] + mu * (2.0 * qx + mu * pxx + deltavar::dagger(g.mu_at(i + 1)) * r[i + 1]) - ing.legendre_target(t).unwrap()
        })
        .collect()
}

/// A literal in the shape the parser produces: negatives as `Neg(Num)`.
fn lit(c: f64) -> Expr {
    if c < 0.0 {
        Expr::Neg(Box::new(Expr::num(-c)))
    } else {
        Expr::num(c.abs())
    }
}

/// Random expression tree in `t`, `x`, `v` of depth at most `depth`.
pub fn random_expr(rng: &mut impl Rng, depth: u32) -> Expr {
    if depth == 0 || rng.gen_bool(0.25) {
        return match rng.gen_range(0..4) {
            0 => lit((rng.gen_range(-2.0..=2.0f64) * 8.0).round() / 8.0),
            1 => Expr::Var(Var::T),
            2 => Expr::Var(Var::X),
            _ => Expr::Var(Var::V),
        };
    }
    let d = depth - 1;
    match rng.gen_range(0..9) {
        0 => Expr::bin(BinOp::Add, random_expr(rng, d), random_expr(rng, d)),
        1 => Expr::bin(BinOp::Sub, random_expr(rng, d), random_expr(rng, d)),
        2 | 3 => Expr::bin(BinOp::Mul, random_expr(rng, d), random_expr(rng, d)),
        4 => Expr::bin(BinOp::Div, random_expr(rng, d), random_expr(rng, d)),
        5 => Expr::bin(BinOp::Pow, random_expr(rng, d), Expr::num(rng.gen_range(2..=3) as f64)),
        6 => Expr::bin(BinOp::Pow, random_expr(rng, d), lit(rng.gen_range(-1.5..=2.5f64))),
        7 => Expr::Neg(Box::new(random_expr(rng, d))),
        _ => Expr::Call(Func::ALL[rng.gen_range(0..Func::ALL.len())], Box::new(random_expr(rng, d))),
    }
}

/// Every component of `d` bounded by `bound` in magnitude.
pub fn tame(d: &HyperDual, bound: f64) -> bool {
    [d.value, d.d_x, d.d_v, d.d_xx, d.d_xv, d.d_vv].iter().all(|c| c.is_finite() && c.abs() <= bound)
}

/// Ridders' extrapolation of a difference quotient `d(h)` whose error is
/// even in `h`: shrinks `h` geometrically from `h0` and returns the tableau
/// entry with the smallest estimated error, with that estimate.
pub fn ridders(d: impl Fn(f64) -> Option<f64>, h0: f64) -> Option<(f64, f64)> {
    const CON: f64 = 1.4;
    const CON2: f64 = CON * CON;
    const NTAB: usize = 10;
    const SAFE: f64 = 2.0;
    let mut h = h0;
    let mut a = [[0.0f64; NTAB]; NTAB];
    a[0][0] = d(h)?;
    let mut err = f64::INFINITY;
    let mut ans = a[0][0];
    for i in 1..NTAB {
        h /= CON;
        a[0][i] = d(h)?;
        let mut fac = CON2;
        for j in 1..=i {
            a[j][i] = (a[j - 1][i] * fac - a[j - 1][i - 1]) / (fac - 1.0);
            fac *= CON2;
            let errt = (a[j][i] - a[j - 1][i]).abs().max((a[j][i] - a[j - 1][i - 1]).abs());
            if errt <= err {
                err = errt;
                ans = a[j][i];
            }
        }
        if (a[i][i] - a[i - 1][i - 1]).abs() >= SAFE * err {
            break;
        }
    }
    Some((ans, err))
}

/// [`ridders`] from several starting steps; the estimate with the smallest
/// error wins. Starting steps whose stencil leaves the domain are skipped.
pub fn ridders_multi(d: impl Fn(f64) -> Option<f64>) -> Option<f64> {
    [0.1, 0.03, 0.01, 0.003]
        .iter()
        .filter_map(|&h0| ridders(&d, h0))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(ans, _)| ans)
}

/// Partials `(d_x, d_v, d_xx, d_xv, d_vv)` of `e` at `(t, x, v)` from central
/// differences of plain values, extrapolated with [`ridders_multi`].
/// `None` if every stencil leaves the domain.
pub fn fd_partials(e: &Expr, t: f64, x: f64, v: f64) -> Option<[f64; 5]> {
    let f = |dx: f64, dv: f64| e.eval(t, x + dx, v + dv).ok();
    let f0 = f(0.0, 0.0)?;
    Some([
        ridders_multi(|h| Some((f(h, 0.0)? - f(-h, 0.0)?) / (2.0 * h)))?,
        ridders_multi(|h| Some((f(0.0, h)? - f(0.0, -h)?) / (2.0 * h)))?,
        ridders_multi(|h| Some((f(h, 0.0)? - 2.0 * f0 + f(-h, 0.0)?) / (h * h)))?,
        ridders_multi(|h| Some((f(h, h)? - f(h, -h)? - f(-h, h)? + f(-h, -h)?) / (4.0 * h * h)))?,
        ridders_multi(|h| Some((f(0.0, h)? - 2.0 * f0 + f(0.0, -h)?) / (h * h)))?,
    ])
}

/// `|a - b| / max(|a|, |b|, 1)`.
pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

/// `e` with every variable replaced according to `f`.
pub fn map_vars(e: &Expr, f: &impl Fn(Var) -> Var) -> Expr {
    match e {
        Expr::Num(n) => Expr::Num(*n),
        Expr::Var(v) => Expr::Var(f(*v)),
        Expr::Neg(a) => Expr::Neg(Box::new(map_vars(a, f))),
        Expr::Bin(op, a, b) => Expr::bin(*op, map_vars(a, f), map_vars(b, f)),
        Expr::Call(func, a) => Expr::Call(*func, Box::new(map_vars(a, f))),
    }
}
