//! JSON problem configurations, Lagrangian bundles, and the build/verify
//! pipeline shared by the command-line tool and the Python bindings.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inverse::{assemble_lagrangian, literal_general_form, ExtremalSpec, IngredientBundle, IngredientSources, LagrangianForm};
use crate::timescale::{GridFunction, GridSpec, TimeScaleGrid};
use crate::variational::{ExprLagrangian, Lagrangian, VariationalProblem, VerificationReport};

/// JSON schema for [`ProblemConfig`]; its defaults mirror [`Options::default`].
pub const PROBLEM_CONFIG_SCHEMA: &str = include_str!("../schema/problem_config.schema.json");

pub const BUNDLE_FORMAT: &str = "deltavar-lagrangian/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Options {
    /// Also build the literal general formula and report its residuals.
    pub literal_general: bool,
    pub tolerance_el: f64,
    pub tolerance_legendre: f64,
    pub perturbations: usize,
    pub radius: f64,
    pub seed: u64,
}

impl Default for Options {
    fn default() -> Self {
        Self {
            literal_general: false,
            tolerance_el: 1e-9,
            tolerance_legendre: 1e-10,
            perturbations: 0,
            radius: 0.01,
            seed: 0,
        }
    }
}

fn default_extremal() -> ExtremalSpec {
    ExtremalSpec::Zero
}

/// A problem description: either ingredients to synthesize from, or a
/// hand-written Lagrangian to check along the extremal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub timescale: GridSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ingredients: Option<IngredientSources>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lagrangian: Option<String>,
    #[serde(default = "default_extremal")]
    pub extremal: ExtremalSpec,
    #[serde(default)]
    pub options: Options,
}

impl ProblemConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        match (&cfg.ingredients, &cfg.lagrangian) {
            (Some(_), Some(_)) => Err(Error::Config("give either `ingredients` or `lagrangian`, not both".into())),
            (None, None) => Err(Error::Config("one of `ingredients` or `lagrangian` is required".into())),
            _ => Ok(cfg),
        }
    }

    pub fn grid(&self) -> Result<Arc<TimeScaleGrid>> {
        TimeScaleGrid::build(&self.timescale).map(Arc::new)
    }
}

/// Synthesized forms for one configuration.
#[derive(Debug, Clone)]
pub struct Synthesis {
    pub form: LagrangianForm,
    /// The literal general formula, when requested.
    pub literal: Option<LagrangianForm>,
}

/// Runs the synthesis pipeline for a configuration with ingredients.
pub fn synthesize(cfg: &ProblemConfig) -> Result<Synthesis> {
    let sources = cfg
        .ingredients
        .as_ref()
        .ok_or_else(|| Error::Config("synthesis needs `ingredients`".into()))?;
    let grid = cfg.grid()?;
    let ingredients = IngredientBundle::from_sources(sources)?;
    let form = assemble_lagrangian(&grid, &ingredients, &cfg.extremal)?;
    let literal = if cfg.options.literal_general {
        Some(literal_general_form(&grid, &ingredients, &cfg.extremal)?)
    } else {
        None
    };
    Ok(Synthesis { form, literal })
}

/// Serialized synthesized Lagrangian.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LagrangianBundle {
    pub format: String,
    pub timescale: GridSpec,
    pub points: Vec<f64>,
    pub ingredients: IngredientSources,
    pub extremal: Vec<f64>,
    #[serde(rename = "offsetQ")]
    pub offset_q: Vec<f64>,
    #[serde(rename = "Rprofile")]
    pub r_profile: Vec<f64>,
    #[serde(rename = "literalOffsetQ", default, skip_serializing_if = "Option::is_none")]
    pub literal_offset_q: Option<Vec<f64>>,
    pub options: Options,
}

impl LagrangianBundle {
    pub fn new(spec: &GridSpec, synthesis: &Synthesis, options: &Options) -> Self {
        let form = &synthesis.form;
        Self {
            format: BUNDLE_FORMAT.into(),
            timescale: spec.clone(),
            points: form.grid().points().to_vec(),
            ingredients: form.ingredients().sources().clone(),
            extremal: form.extremal().values().to_vec(),
            offset_q: form.offset_q().values().to_vec(),
            r_profile: form.r_profile().values().to_vec(),
            literal_offset_q: synthesis
                .literal
                .as_ref()
                .and_then(|l| l.literal_offset())
                .map(|o| o.values().to_vec()),
            options: options.clone(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let bundle: Self = serde_json::from_str(text).map_err(|e| Error::Config(format!("bundle: {e}")))?;
        if bundle.format != BUNDLE_FORMAT {
            return Err(Error::Config(format!("unsupported bundle format `{}`", bundle.format)));
        }
        Ok(bundle)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("bundle serializes");
        s.push('\n');
        s
    }

    /// Rebuilds the forms from the stored arrays; the arrays are not recomputed.
    pub fn restore(&self) -> Result<Synthesis> {
        let grid = Arc::new(TimeScaleGrid::build(&self.timescale)?);
        if grid.points() != self.points.as_slice() {
            return Err(Error::Config("bundle points do not match its timescale".into()));
        }
        let ingredients = IngredientBundle::from_sources(&self.ingredients)?;
        let form = LagrangianForm::from_parts(
            grid.clone(),
            ingredients.clone(),
            self.offset_q.clone(),
            self.r_profile.clone(),
            self.extremal.clone(),
            None,
        )?;
        let literal = self
            .literal_offset_q
            .as_ref()
            .map(|lit| {
                LagrangianForm::from_parts(
                    grid.clone(),
                    ingredients.clone(),
                    self.offset_q.clone(),
                    self.r_profile.clone(),
                    self.extremal.clone(),
                    Some(lit.clone()),
                )
            })
            .transpose()?;
        Ok(Synthesis { form, literal })
    }
}

/// Verification of a synthesized form at its own extremal, including the
/// deviation of the Legendre quantity from the prescribed `p`.
pub fn verify_form(form: &LagrangianForm, options: &Options) -> Result<VerificationReport> {
    let y = form.extremal();
    let mut report = verify_along(form, y, options)?;
    let grid = form.grid();
    let mut dev = 0.0f64;
    for (i, lhs) in report.legendre_lhs.iter().enumerate() {
        dev = dev.max((lhs - form.ingredients().legendre_target(grid.t(i))?).abs());
    }
    report.legendre_max_deviation = Some(dev);
    Ok(report)
}

/// Verification of any Lagrangian along `y`, with `y`'s end values as boundary data.
pub fn verify_along(l: &dyn Lagrangian, y: &GridFunction, options: &Options) -> Result<VerificationReport> {
    let prob = VariationalProblem::through(l, y)?;
    let mut report = prob.verify(y)?;
    if options.perturbations > 0 {
        report.perturbation_min_delta = Some(prob.perturbation_sample(y, options.perturbations, options.radius, options.seed)?);
    }
    Ok(report)
}

/// Verification for a configuration: synthesized when it has ingredients,
/// otherwise the hand-written Lagrangian along the configured extremal.
pub fn verify_config(cfg: &ProblemConfig) -> Result<(VerificationReport, Option<VerificationReport>)> {
    if let Some(src) = &cfg.lagrangian {
        let grid = cfg.grid()?;
        let l = ExprLagrangian::parse(src).map_err(|e| Error::Config(format!("lagrangian: {e}")))?;
        let y = cfg.extremal.sample(&grid)?;
        return Ok((verify_along(&l, &y, &cfg.options)?, None));
    }
    verify_synthesis(&synthesize(cfg)?, &cfg.options)
}

pub fn verify_synthesis(s: &Synthesis, options: &Options) -> Result<(VerificationReport, Option<VerificationReport>)> {
    let main = verify_form(&s.form, options)?;
    let literal = s.literal.as_ref().map(|l| verify_form(l, options)).transpose()?;
    Ok((main, literal))
}

/// True iff the Euler–Lagrange residual is constant to `tolerance_el`, the
/// Legendre quantity is strictly positive, and, when the prescribed `p` is
/// known, the Legendre quantity matches it to `tolerance_legendre · max(1, max|p|)`.
pub fn passes(report: &VerificationReport, options: &Options, p_scale: Option<f64>) -> bool {
    let el_ok = report.el_constancy <= options.tolerance_el;
    let positive = report.legendre_min > 0.0;
    let matches_p = match (report.legendre_max_deviation, p_scale) {
        (Some(dev), Some(scale)) => dev <= options.tolerance_legendre * scale.max(1.0),
        _ => true,
    };
    el_ok && positive && matches_p
}

/// `max |p(t)|` over the κ²-domain.
pub fn p_scale(form: &LagrangianForm) -> Result<f64> {
    let grid = form.grid();
    let mut m = 0.0f64;
    for i in grid.kappa2() {
        m = m.max(form.ingredients().legendre_target(grid.t(i))?.abs());
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    const HZ: &str = r#"{
        "timescale": {"kind": "uniform", "a": 0, "b": 3, "h": 0.5},
        "ingredients": {"P": "t*x^2", "p": "1 + t", "q": "x*t", "w": "v^2", "C": 0.5, "R0": 1},
        "extremal": {"kind": "expr", "payload": "sin(t)"}
    }"#;

    #[test]
    fn defaults_fill_in() {
        let cfg = ProblemConfig::from_json(HZ).unwrap();
        assert_eq!(cfg.options, Options::default());
        let bare = r#"{"timescale": {"kind": "qpow", "q": 2, "kmin": 0, "kmax": 3}, "lagrangian": "v^2"}"#;
        assert_eq!(ProblemConfig::from_json(bare).unwrap().extremal, ExtremalSpec::Zero);
    }

    #[test]
    fn schema_defaults_match_options() {
        let schema: serde_json::Value = serde_json::from_str(PROBLEM_CONFIG_SCHEMA).unwrap();
        let props = &schema["properties"]["options"]["properties"];
        let d = Options::default();
        assert_eq!(props["literal_general"]["default"], serde_json::json!(d.literal_general));
        assert_eq!(props["tolerance_el"]["default"].as_f64(), Some(d.tolerance_el));
        assert_eq!(props["tolerance_legendre"]["default"].as_f64(), Some(d.tolerance_legendre));
        assert_eq!(props["perturbations"]["default"].as_u64(), Some(d.perturbations as u64));
        assert_eq!(props["radius"]["default"].as_f64(), Some(d.radius));
        assert_eq!(props["seed"]["default"].as_u64(), Some(d.seed));
        assert_eq!(schema["properties"]["extremal"]["default"], serde_json::json!({"kind": "zero"}));
    }

    #[test]
    fn malformed_configs() {
        assert!(matches!(ProblemConfig::from_json("{"), Err(Error::Config(_))));
        let both = r#"{"timescale": {"kind": "explicit", "points": [0, 1, 2]}, "lagrangian": "v^2",
                       "ingredients": {"P": "0", "p": "1", "q": "0", "w": "0", "C": 0, "R0": 0}}"#;
        assert!(matches!(ProblemConfig::from_json(both), Err(Error::Config(_))));
        let neither = r#"{"timescale": {"kind": "explicit", "points": [0, 1, 2]}}"#;
        assert!(matches!(ProblemConfig::from_json(neither), Err(Error::Config(_))));
        let typo = r#"{"timescale": {"kind": "explicit", "points": [0, 1, 2]}, "lagrangian": "v", "option": {}}"#;
        assert!(matches!(ProblemConfig::from_json(typo), Err(Error::Config(_))));
    }

    #[test]
    fn bundle_round_trip_preserves_verification() {
        let mut cfg = ProblemConfig::from_json(HZ).unwrap();
        cfg.options.literal_general = true;
        let s = synthesize(&cfg).unwrap();
        let bundle = LagrangianBundle::new(&cfg.timescale, &s, &cfg.options);
        let text = bundle.to_json();
        let back = LagrangianBundle::from_json(&text).unwrap();
        assert_eq!(back, bundle);
        let restored = back.restore().unwrap();
        assert_eq!(restored.form, s.form);
        assert_eq!(restored.literal, s.literal);
        let (a, la) = verify_synthesis(&s, &cfg.options).unwrap();
        let (b, lb) = verify_synthesis(&restored, &cfg.options).unwrap();
        assert_eq!(a, b);
        assert_eq!(la, lb);
        assert!(passes(&a, &cfg.options, Some(p_scale(&s.form).unwrap())));
    }

    #[test]
    fn tampered_bundle_points_are_rejected() {
        let cfg = ProblemConfig::from_json(HZ).unwrap();
        let s = synthesize(&cfg).unwrap();
        let mut bundle = LagrangianBundle::new(&cfg.timescale, &s, &cfg.options);
        bundle.points[1] += 1e-9;
        assert!(matches!(bundle.restore(), Err(Error::Config(_))));
        bundle.format = "other".into();
        assert!(LagrangianBundle::from_json(&bundle.to_json()).is_err());
    }

    #[test]
    fn hand_written_lagrangian_fails_el() {
        let cfg = ProblemConfig::from_json(
            r#"{"timescale": {"kind": "uniform", "a": 0, "b": 3, "h": 1}, "lagrangian": "0.5*v^2 - x"}"#,
        )
        .unwrap();
        let (report, literal) = verify_config(&cfg).unwrap();
        assert!(literal.is_none());
        assert_eq!(report.el_residual, vec![0.0, 1.0, 2.0]);
        assert!(!passes(&report, &cfg.options, None));
    }
}
