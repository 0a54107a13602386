//! Delta calculus on bounded isolated time scales, synthesis of variational
//! Lagrangians that have a prescribed extremal, and numerical verification of
//! the Euler–Lagrange and Legendre conditions for those Lagrangians.
//!
//! The pipeline is:
//!
//! 1. build a [`TimeScaleGrid`] (uniform `hZ` slice, `q`-power slice, or an
//!    explicit list of points);
//! 2. parse the free ingredient functions into an [`IngredientBundle`];
//! 3. synthesize a [`LagrangianForm`] with [`assemble_lagrangian`];
//! 4. check it with a [`VariationalProblem`].

pub mod config;
pub mod dynamic;
mod error;
pub mod expr;
pub mod inverse;
pub mod timescale;
pub mod variational;

pub use dynamic::{exp_ts, is_regressive, solve_ivp, CoefficientPair, IvpMethod};
pub use error::{Error, Result};
pub use expr::{eval2, parse, validate_arity, Expr, HyperDual, Var};
pub use inverse::{
    assemble_lagrangian, build_offset_q, closed_form_hz, closed_form_q, literal_general_form,
    rs_coefficients, solve_r_profile, ExtremalSpec, IngredientBundle, IngredientSources,
    LagrangianForm, RsCoefficients,
};
pub use timescale::{dagger, delta_derivative, delta_integral, GridFunction, GridSpec, Support, TimeScaleGrid};
pub use variational::{c1rd_norm, ExprLagrangian, Lagrangian, VariationalProblem, VerificationReport};
