//! `deltavar` command-line tool: build, verify, evaluate and tabulate
//! synthesized Lagrangians on isolated time scales.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use deltavar::config::{self, LagrangianBundle, Options, ProblemConfig, Synthesis};
use deltavar::inverse::exp_r_profile;
use deltavar::{rs_coefficients, GridFunction, IngredientBundle, Support, VariationalProblem, VerificationReport};

const EXIT_INPUT: u8 = 2;
const EXIT_VALIDATION: u8 = 3;
const EXIT_VERIFICATION: u8 = 4;

/// Relative tolerance for matching trajectory times to grid points.
const TIME_MATCH: f64 = 1e-9;

#[derive(Parser)]
#[command(name = "deltavar", version, about = "Inverse variational problems on isolated time scales")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Output {
    /// Directory for generated files.
    #[arg(long, env = "DELTAVAR_OUT_DIR", default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize the Lagrangian for a configuration; writes `<stem>.bundle.json` and `<stem>.csv`.
    Build {
        config: PathBuf,
        /// Also build the literal general formula.
        #[arg(long)]
        literal_general: bool,
        #[command(flatten)]
        output: Output,
    },
    /// Check Euler–Lagrange and Legendre conditions; writes `<stem>.report.json`.
    Verify {
        /// A problem configuration or a bundle written by `build`.
        input: PathBuf,
        #[arg(long)]
        literal_general: bool,
        #[command(flatten)]
        output: Output,
    },
    /// Evaluate the functional of a bundle along a trajectory given as CSV with columns `t,y`.
    Eval { bundle: PathBuf, trajectory: PathBuf },
    /// Print the grid with σ, ρ, μ, r, s, e_r, offsetQ and Rprofile as CSV.
    Table { config: PathBuf },
}

/// Errors carry the exit code they map to.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        let code = match error.downcast_ref::<deltavar::Error>() {
            Some(deltavar::Error::Validation(_) | deltavar::Error::Eval { .. }) => EXIT_VALIDATION,
            Some(deltavar::Error::BoundaryMismatch(_)) => EXIT_VERIFICATION,
            _ => EXIT_INPUT,
        };
        Self { code, error }
    }
}

impl From<deltavar::Error> for Failure {
    fn from(e: deltavar::Error) -> Self {
        anyhow::Error::from(e).into()
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Build { config, literal_general, output } => build(&config, literal_general, &output.out_dir),
        Command::Verify { input, literal_general, output } => verify(&input, literal_general, &output.out_dir),
        Command::Eval { bundle, trajectory } => eval(&bundle, &trajectory),
        Command::Table { config } => table(&config),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn stem(path: &Path) -> String {
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let name = name.strip_suffix(".json").unwrap_or(&name);
    name.strip_suffix(".bundle").unwrap_or(name).to_string()
}

fn load_config(path: &Path, literal_general: bool) -> Result<ProblemConfig> {
    let mut cfg = ProblemConfig::from_json(&read(path)?).with_context(|| format!("in {}", path.display()))?;
    cfg.options.literal_general |= literal_general;
    Ok(cfg)
}

fn build(path: &Path, literal_general: bool, out_dir: &Path) -> Result<ExitCode, Failure> {
    let cfg = load_config(path, literal_general)?;
    if cfg.ingredients.is_none() {
        return Err(anyhow::anyhow!("{}: `build` needs `ingredients`", path.display()).into());
    }
    let synthesis = config::synthesize(&cfg)?;
    let bundle = LagrangianBundle::new(&cfg.timescale, &synthesis, &cfg.options);
    let stem = stem(path);
    let bundle_path = out_dir.join(format!("{stem}.bundle.json"));
    let csv_path = out_dir.join(format!("{stem}.csv"));
    write(&bundle_path, &bundle.to_json())?;
    write(&csv_path, &synthesis.form.to_csv())?;
    println!("wrote {}", bundle_path.display());
    println!("wrote {}", csv_path.display());
    Ok(ExitCode::SUCCESS)
}

/// What `verify` was pointed at.
enum VerifyInput {
    Synthesized { synthesis: Box<Synthesis>, options: Options },
    HandWritten(ProblemConfig),
}

fn load_verify_input(path: &Path, literal_general: bool) -> Result<VerifyInput> {
    let text = read(path)?;
    let value: serde_json::Value =
        serde_json::from_str(&text).with_context(|| format!("{} is not JSON", path.display()))?;
    if value.get("format").is_some() {
        let bundle = LagrangianBundle::from_json(&text)?;
        let mut options = bundle.options.clone();
        if literal_general && bundle.literal_offset_q.is_none() {
            bail!("{} was built without the literal general form; rebuild with --literal-general", path.display());
        }
        options.literal_general |= literal_general;
        return Ok(VerifyInput::Synthesized { synthesis: Box::new(bundle.restore()?), options });
    }
    let cfg = load_config(path, literal_general)?;
    if cfg.lagrangian.is_some() {
        return Ok(VerifyInput::HandWritten(cfg));
    }
    let synthesis = config::synthesize(&cfg)?;
    Ok(VerifyInput::Synthesized { synthesis: Box::new(synthesis), options: cfg.options })
}

fn verify(path: &Path, literal_general: bool, out_dir: &Path) -> Result<ExitCode, Failure> {
    let input = load_verify_input(path, literal_general)?;
    let (report, literal, options, scale) = match &input {
        VerifyInput::Synthesized { synthesis, options } => {
            let (main, literal) = config::verify_synthesis(synthesis, options)?;
            (main, literal, options.clone(), Some(config::p_scale(&synthesis.form)?))
        }
        VerifyInput::HandWritten(cfg) => {
            let (main, _) = config::verify_config(cfg)?;
            (main, None, cfg.options.clone(), None)
        }
    };
    let pass = config::passes(&report, &options, scale);
    match &literal {
        None => print!("{}", report.render()),
        Some(lit) => print!("{}", side_by_side(&report, lit)),
    }
    println!("result: {}", if pass { "PASS" } else { "FAIL" });

    let mut json = serde_json::json!({ "pass": pass, "report": report });
    if let Some(lit) = &literal {
        json["literal"] = serde_json::to_value(lit).context("serializing report")?;
    }
    let mut text = serde_json::to_string_pretty(&json).context("serializing report")?;
    text.push('\n');
    let report_path = out_dir.join(format!("{}.report.json", stem(path)));
    write(&report_path, &text)?;
    eprintln!("wrote {}", report_path.display());
    Ok(if pass { ExitCode::SUCCESS } else { ExitCode::from(EXIT_VERIFICATION) })
}

/// Residuals of the shift-composed and literal forms in adjacent columns.
fn side_by_side(shift: &VerificationReport, literal: &VerificationReport) -> String {
    let mut out = format!(
        "{:>24} {:>24} {:>24} {:>24} {:>24}\n",
        "t", "g_shift(t)", "g_literal(t)", "legendre_shift(t)", "legendre_literal(t)"
    );
    let leg = |r: &VerificationReport, i: usize| {
        r.legendre_lhs.get(i).map_or_else(|| "-".to_string(), |v| format!("{v:.15e}"))
    };
    for (i, t) in shift.t.iter().enumerate() {
        let _ = writeln!(
            out,
            "{t:>24.15e} {:>24.15e} {:>24.15e} {:>24} {:>24}",
            shift.el_residual[i],
            literal.el_residual[i],
            leg(shift, i),
            leg(literal, i)
        );
    }
    for (name, a, b) in [
        ("el_constant", shift.el_constant, literal.el_constant),
        ("el_constancy", shift.el_constancy, literal.el_constancy),
        ("legendre_min", shift.legendre_min, literal.legendre_min),
        ("grad_norm", shift.grad_norm, literal.grad_norm),
    ] {
        let _ = writeln!(out, "{name:<16} shift {a:.6e}  literal {b:.6e}");
    }
    out
}

fn eval(bundle_path: &Path, traj_path: &Path) -> Result<ExitCode, Failure> {
    let bundle = LagrangianBundle::from_json(&read(bundle_path)?)
        .with_context(|| format!("in {}", bundle_path.display()))?;
    let form = bundle.restore()?.form;
    let grid = form.grid().clone();

    let mut reader = csv::Reader::from_path(traj_path).with_context(|| format!("reading {}", traj_path.display()))?;
    let headers = reader.headers().context("reading trajectory header")?.clone();
    let col = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .with_context(|| format!("{}: missing column `{name}`", traj_path.display()))
    };
    let (tc, yc) = (col("t")?, col("y")?);
    let mut values: Vec<Option<f64>> = vec![None; grid.len()];
    for (row, record) in reader.records().enumerate() {
        let record = record.with_context(|| format!("{}: row {}", traj_path.display(), row + 1))?;
        let field = |c: usize| -> Result<f64> {
            let s = record.get(c).unwrap_or("").trim();
            s.parse().with_context(|| format!("{}: row {}: `{s}` is not a number", traj_path.display(), row + 1))
        };
        let (t, y) = (field(tc)?, field(yc)?);
        let i = grid
            .points()
            .iter()
            .position(|&p| (p - t).abs() <= TIME_MATCH * p.abs().max(1.0))
            .with_context(|| format!("{}: t = {t} is not a grid point", traj_path.display()))?;
        if values[i].replace(y).is_some() {
            return Err(anyhow::anyhow!("{}: grid point t = {} appears twice", traj_path.display(), grid.t(i)).into());
        }
    }
    let values = values
        .into_iter()
        .enumerate()
        .map(|(i, v)| v.with_context(|| format!("{}: no value for grid point t = {}", traj_path.display(), grid.t(i))))
        .collect::<Result<Vec<_>>>()?;
    let y = GridFunction::new(grid.clone(), Support::Full, values)?;
    let y0 = form.extremal();
    let prob = VariationalProblem::new(grid.clone(), &form, y0.at(0), y0.at(grid.last()))?;
    let value = prob.evaluate_functional(&y)?;
    println!("{value:.14e}");
    Ok(ExitCode::SUCCESS)
}

fn table(path: &Path) -> Result<ExitCode, Failure> {
    let cfg = load_config(path, false)?;
    let grid = cfg.grid()?;
    let sources = cfg
        .ingredients
        .as_ref()
        .with_context(|| format!("{}: `table` needs `ingredients`", path.display()))?;
    let ing = IngredientBundle::from_sources(sources)?;
    let synthesis = config::synthesize(&cfg)?;
    let rs = rs_coefficients(&grid, &ing)?;
    let e_r = exp_r_profile(&grid, &ing)?;
    let form = &synthesis.form;

    let mut w = csv::Writer::from_writer(std::io::stdout());
    let opt = |v: Option<f64>| v.map_or_else(String::new, |x| format!("{x:?}"));
    w.write_record(["index", "t", "sigma", "rho", "mu", "r", "s", "e_r", "offsetQ", "Rprofile"])
        .context("writing table")?;
    for i in 0..grid.len() {
        let on = |f: &GridFunction| (i < f.len()).then(|| f.at(i));
        w.write_record([
            i.to_string(),
            format!("{:?}", grid.t(i)),
            format!("{:?}", grid.sigma_at(i)),
            format!("{:?}", grid.rho_at(i)),
            format!("{:?}", grid.mu_at(i)),
            opt(on(&rs.r)),
            opt(on(&rs.s)),
            opt(e_r.get(i).copied()),
            opt(on(form.offset_q())),
            opt(on(form.r_profile())),
        ])
        .context("writing table")?;
    }
    w.flush().context("writing table")?;
    Ok(ExitCode::SUCCESS)
}
