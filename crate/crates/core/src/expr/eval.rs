use super::ast::{BinOp, Expr, Func, Var};
use super::hyperdual::HyperDual;
use crate::error::{Error, Result};

impl Expr {
    /// Evaluates with `x` and `v` carried as hyper-dual numbers; `t` is a plain real.
    pub fn eval_dual(&self, t: f64, x: HyperDual, v: HyperDual) -> Result<HyperDual> {
        let out = match self {
            Expr::Num(n) => HyperDual::constant(*n),
            Expr::Var(Var::T) => HyperDual::constant(t),
            Expr::Var(Var::X) => x,
            Expr::Var(Var::V) => v,
            Expr::Neg(e) => -e.eval_dual(t, x, v)?,
            Expr::Call(func, arg) => {
                let a = arg.eval_dual(t, x, v)?;
                match func {
                    Func::Sin => a.sin(),
                    Func::Cos => a.cos(),
                    Func::Exp => a.exp(),
                    Func::Ln if a.value > 0.0 => a.ln(),
                    Func::Ln => return Err(self.domain(format!("ln of non-positive value {}", a.value))),
                    Func::Sqrt if a.value > 0.0 => a.sqrt(),
                    // sqrt is not differentiable at 0
                    Func::Sqrt => {
                        return Err(self.domain(format!("sqrt of non-positive value {}", a.value)))
                    }
                }
            }
            Expr::Bin(op, l, r) => {
                let a = l.eval_dual(t, x, v)?;
                let b = r.eval_dual(t, x, v)?;
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div if b.value == 0.0 => return Err(self.domain("division by zero".into())),
                    BinOp::Div => a / b,
                    BinOp::Pow => self.power(a, b)?,
                }
            }
        };
        if out.is_finite() {
            Ok(out)
        } else {
            Err(self.domain("result is not finite".into()))
        }
    }

    /// Plain value at `(t, x, v)`.
    pub fn eval(&self, t: f64, x: f64, v: f64) -> Result<f64> {
        self.eval_dual(t, HyperDual::constant(x), HyperDual::constant(v)).map(|d| d.value)
    }

    fn power(&self, base: HyperDual, exponent: HyperDual) -> Result<HyperDual> {
        if exponent.is_constant() {
            let p = exponent.value;
            if p.fract() == 0.0 && p.abs() <= i32::MAX as f64 {
                if base.value == 0.0 && p < 0.0 {
                    return Err(self.domain("zero raised to a negative power".into()));
                }
                return Ok(base.powi(p as i32));
            }
            if base.value > 0.0 {
                return Ok(base.powf(p));
            }
        } else if base.value > 0.0 {
            return Ok(base.pow(exponent));
        }
        Err(self.domain(format!(
            "non-integer or variable exponent needs a positive base, got {}",
            base.value
        )))
    }

    fn domain(&self, reason: String) -> Error {
        Error::Eval { node: self.to_string(), reason }
    }
}

/// Value and all partials in `(x, v)` through second order.
pub fn eval2(e: &Expr, t: f64, x: f64, v: f64) -> Result<HyperDual> {
    e.eval_dual(t, HyperDual::var_x(x), HyperDual::var_v(v))
}

/// Fails when `e` references a variable outside `allowed`.
pub fn validate_arity(e: &Expr, allowed: &[Var]) -> Result<()> {
    let bad: Vec<String> = e
        .variables()
        .into_iter()
        .filter(|v| !allowed.contains(v))
        .map(|v| v.name().to_string())
        .collect();
    if bad.is_empty() {
        Ok(())
    } else {
        Err(Error::DisallowedVariables { name: "expression".into(), vars: bad })
    }
}
