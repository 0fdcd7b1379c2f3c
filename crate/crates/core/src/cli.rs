//! Command-line front end. [`run`] parses arguments, dispatches and returns
//! the process exit code: 0 success, 1 tolerance failure, 2 input error,
//! 3 numerical or calibration failure.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::energy::{aubin_yau, aubin_yau_dump, deligne_norm_log, deligne_norm_log_dump, delta_log_norm, k_energy, EnergyRecord};
use crate::error::{Error, Result};
use crate::forms::{chow_form_hypersurface, degree_data_for, discriminant_form, read_curve, DualMethod, FormFile};
use crate::coeff::CRat;
use crate::poly::{AnyPoly, BlockGrading, MultiPoly};
use crate::projgeom::{one_param_subgroup, FormRole, GroupElement, C64};
use crate::quadrature::{PlaneCurve, SpaceSpec};
use crate::verify::{self, matrix_from_spec, Budgets, CheckKind, KForm, MatrixSpec, Report, ReportFormat, Scenario};

#[derive(Parser, Debug)]
#[command(name = "ddlab", version, about = "Chow forms, dual curves and energy functionals of projective curves")]
pub struct Cli {
    /// Worker threads for Monte-Carlo integration (overrides DDLAB_JOBS).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Chow form of a plane curve, written as a form file.
    Chow {
        /// Curve form file (or a bare polynomial in x0, x1, x2).
        #[arg(long)]
        curve: PathBuf,
        /// Output form file; printed to stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Discriminant (dual curve) form of a plane curve.
    Dual {
        /// Curve form file (or a bare polynomial in x0, x1, x2).
        #[arg(long)]
        curve: PathBuf,
        #[arg(long, value_enum, default_value_t = MethodArg::Eliminate)]
        method: MethodArg,
        /// Seed for tangent-line sampling (required by `interpolate`).
        #[arg(long)]
        seed: Option<u64>,
        /// Output form file; printed to stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate one energy functional and emit a JSON record.
    Energy(EnergyArgs),
    /// K-energy and log-norm changes along a one-parameter ray, as CSV.
    Knorm(KnormArgs),
    /// Run verification checks from a scenario file.
    Verify {
        #[arg(value_enum)]
        target: VerifyTarget,
        /// Scenario file (JSON).
        #[arg(long)]
        scenario: PathBuf,
        /// Quadrature seed; replaces the scenario's quadrature seed.
        #[arg(long)]
        seed: u64,
        /// Report path; the text summary always goes to stdout.
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = FormatArg::Json)]
        format: FormatArg,
    },
    /// Fast invariant suite.
    Selftest,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Eliminate,
    Interpolate,
    Adjugate,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum VerifyTarget {
    Zero,
    Cor1,
    Cor2,
    Kderiv,
    All,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Json,
    Text,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Functional {
    /// Aubin–Yau energy of the Bergman potential of --sigma.
    AubinYau,
    /// log of the Deligne norm of --form.
    DeligneNorm,
    /// Change of the log Deligne norm of --form under --sigma.
    DeltaLogNorm,
    /// Mabuchi K-energy of the Bergman potential of --sigma on --curve.
    KEnergy,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum RoleArg {
    Points,
    Hyperplanes,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum KFormArg {
    Multilinear,
    Entropy,
}

#[derive(Args, Debug)]
pub struct EnergyArgs {
    #[arg(long, value_enum)]
    pub functional: Functional,
    /// Plane curve (aubin-yau on a curve, k-energy).
    #[arg(long)]
    pub curve: Option<PathBuf>,
    /// Integrate over projective space of this dimension instead of a curve.
    #[arg(long)]
    pub projective: Option<usize>,
    /// Form file (deligne-norm, delta-log-norm).
    #[arg(long)]
    pub form: Option<PathBuf>,
    /// Group element as a JSON matrix, e.g. '[[2,0],[0,0.5]]'; entries may
    /// be numbers, "a+bi" strings or [re, im] pairs.
    #[arg(long)]
    pub sigma: Option<String>,
    /// Transformation rule of the form's variables.
    #[arg(long, value_enum, default_value_t = RoleArg::Hyperplanes)]
    pub role: RoleArg,
    /// K-energy formula.
    #[arg(long, value_enum, default_value_t = KFormArg::Multilinear)]
    pub k_form: KFormArg,
    /// Monte-Carlo samples (random lines for curve integrals).
    #[arg(long, default_value_t = 100_000)]
    pub samples: u64,
    #[arg(long)]
    pub seed: u64,
    /// JSON record output; printed to stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// CSV of per-sample integrand values (aubin-yau, deligne-norm).
    #[arg(long)]
    pub dump_samples: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct KnormArgs {
    #[arg(long)]
    pub curve: PathBuf,
    /// Trace-free generator A of the ray exp(tA), as a JSON matrix.
    #[arg(long)]
    pub generator: String,
    /// Comma-separated t values.
    #[arg(long, allow_hyphen_values = true)]
    pub t: String,
    #[arg(long)]
    pub seed: u64,
    /// Random lines per K-energy evaluation.
    #[arg(long, default_value_t = 100_000)]
    pub curve_samples: u64,
    /// Samples per log-norm change.
    #[arg(long, default_value_t = 1_000_000)]
    pub ambient_samples: u64,
    #[arg(long, value_enum, default_value_t = KFormArg::Multilinear)]
    pub k_form: KFormArg,
    /// CSV output with header t,nu,nu_stderr,dlogD,dlogC.
    #[arg(long)]
    pub out: PathBuf,
}

/// Parses `args` (including the program name) and runs the command,
/// writing the human summary to `out`.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = if e.use_stderr() { write!(std::io::stderr(), "{e}") } else { write!(out, "{e}") };
            return code;
        }
    };
    let jobs = match cli.jobs.map(Ok).or_else(|| std::env::var("DDLAB_JOBS").ok().map(|v| v.trim().parse::<usize>())) {
        None => None,
        Some(Ok(0)) | Some(Err(_)) => {
            let _ = writeln!(std::io::stderr(), "error: --jobs / DDLAB_JOBS must be a positive integer");
            return 2;
        }
        Some(Ok(n)) => Some(n),
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(jobs.unwrap_or(0)).build() {
        Ok(p) => p,
        Err(e) => {
            let _ = writeln!(std::io::stderr(), "error: cannot start worker pool: {e}");
            return 3;
        }
    };
    let mut buf: Vec<u8> = Vec::new();
    let result = pool.install(|| dispatch(&cli.command, &mut buf));
    let _ = out.write_all(&buf);
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(std::io::stderr(), "error: {e}");
            e.exit_code()
        }
    }
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Input(format!("cannot read {}: {e}", path.display())))
}

/// A `--curve` argument: a form file, or polynomial text when no such
/// file exists and the argument mentions a curve variable.
fn curve_text(arg: &Path) -> Result<String> {
    let s = arg.to_string_lossy();
    if !arg.exists() && ["x0", "x1", "x2"].iter().any(|v| s.contains(v)) {
        return Ok(s.into_owned());
    }
    read_text(arg)
}

fn write_or_print(path: Option<&Path>, body: &str, out: &mut dyn Write) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, body)?,
        None => out.write_all(body.as_bytes())?,
    }
    Ok(())
}

fn parse_matrix(text: &str) -> Result<crate::linalg::CMat> {
    let spec: MatrixSpec = serde_json::from_str(text).map_err(|e| Error::Input(format!("bad matrix {text:?}: {e}")))?;
    matrix_from_spec(&spec)
}

fn plane_curve(p: &AnyPoly) -> Result<PlaneCurve> {
    match p {
        AnyPoly::Exact(f) => PlaneCurve::smooth(f),
        AnyPoly::Float(f) => PlaneCurve::smooth(f),
    }
}

fn dispatch(cmd: &Command, out: &mut dyn Write) -> Result<i32> {
    match cmd {
        Command::Chow { curve, out: path } => {
            let f = read_curve(&curve_text(curve)?)?;
            let (poly, d) = match &f {
                AnyPoly::Exact(p) => {
                    let c = chow_form_hypersurface(p, 2)?;
                    (AnyPoly::Exact(c.poly), c.source_degree)
                }
                AnyPoly::Float(p) => {
                    let c = chow_form_hypersurface(p, 2)?;
                    (AnyPoly::Float(c.poly), c.source_degree)
                }
            };
            let ff = FormFile::new("chow", poly, &[("source_degree", d.to_string())]);
            write_or_print(path.as_deref(), &ff.render(), out)?;
            if path.is_some() {
                writeln!(out, "chow form of a degree-{d} curve: multidegree ({d},{d})")?;
            }
            Ok(0)
        }
        Command::Dual { curve, method, seed, out: path } => {
            let f = read_curve(&curve_text(curve)?)?;
            let m = match method {
                MethodArg::Eliminate => DualMethod::Eliminate,
                MethodArg::Interpolate => DualMethod::Interpolate,
                MethodArg::Adjugate => DualMethod::Adjugate,
            };
            let seed = match (m, seed) {
                (DualMethod::Interpolate, None) => return Err(Error::Input("--seed is required for the interpolate method".into())),
                (_, s) => s.unwrap_or(0),
            };
            plane_curve(&f)?;
            let d = discriminant_form(&f, m, seed)?;
            let mut extra = vec![
                ("method", d.method.to_string()),
                ("claimed_degree", d.claimed_degree.to_string()),
                ("computed_degree", d.computed_degree.to_string()),
            ];
            if m == DualMethod::Interpolate {
                extra.push(("residual", format!("{:e}", d.residual)));
                extra.push(("seed", seed.to_string()));
            }
            let ff = FormFile::new("discriminant", d.poly.clone(), &extra);
            write_or_print(path.as_deref(), &ff.render(), out)?;
            if path.is_some() {
                writeln!(out, "dual curve by {}: degree {} (expected {})", d.method, d.computed_degree, d.claimed_degree)?;
            }
            Ok(0)
        }
        Command::Energy(a) => energy(a, out),
        Command::Knorm(a) => knorm(a, out),
        Command::Verify { target, scenario, seed, report, format } => {
            let mut s = Scenario::load(scenario)?;
            s.seeds.quadrature = *seed;
            let r = match target {
                VerifyTarget::Zero => verify::run_check(CheckKind::Zero, &s, *seed)?,
                VerifyTarget::Cor1 => verify::run_check(CheckKind::Cor1, &s, *seed)?,
                VerifyTarget::Cor2 => verify::run_check(CheckKind::Cor2, &s, *seed)?,
                VerifyTarget::Kderiv => verify::run_check(CheckKind::Kderiv, &s, *seed)?,
                VerifyTarget::All => verify::verify_all(&s, *seed)?,
            };
            if let Some(p) = report {
                let f = match format {
                    FormatArg::Json => ReportFormat::Json,
                    FormatArg::Text => ReportFormat::Text,
                };
                verify::emit_report(&r, p, f)?;
            }
            out.write_all(r.to_text().as_bytes())?;
            Ok(if r.all_pass() { 0 } else { 1 })
        }
        Command::Selftest => {
            let (text, ok) = selftest();
            out.write_all(text.as_bytes())?;
            Ok(if ok { 0 } else { 1 })
        }
    }
}

fn need<'a, T>(v: &'a Option<T>, flag: &str, what: &str) -> Result<&'a T> {
    v.as_ref().ok_or_else(|| Error::Input(format!("{flag} is required for {what}")))
}

fn energy(a: &EnergyArgs, out: &mut dyn Write) -> Result<i32> {
    let dump = a.dump_samples.as_deref();
    let sigma_text = a.sigma.clone().unwrap_or_default();
    let (name, est, inputs): (&str, _, Vec<String>) = match a.functional {
        Functional::AubinYau => {
            let sigma = GroupElement::new(parse_matrix(need(&a.sigma, "--sigma", "aubin-yau")?)?)?;
            let (space, desc) = match (&a.curve, a.projective) {
                (Some(c), None) => {
                    let text = curve_text(c)?;
                    let f = read_curve(&text)?;
                    (SpaceSpec::PlaneCurve(Arc::new(plane_curve(&f)?)), format!("curve {}", f.to_text()))
                }
                (None, Some(n)) => (SpaceSpec::Projective(n), format!("P{n}")),
                _ => return Err(Error::Input("aubin-yau needs exactly one of --curve and --projective".into())),
            };
            if sigma.size() != 3 && matches!(space, SpaceSpec::PlaneCurve(_)) || matches!(space, SpaceSpec::Projective(n) if n + 1 != sigma.size()) {
                return Err(Error::Input("--sigma size does not match the space".into()));
            }
            let e = aubin_yau_dump(&space, &sigma.bergman_potential(), a.samples, a.seed, dump)?;
            ("aubin-yau", e, vec![desc, sigma_text])
        }
        Functional::DeligneNorm => {
            let ff = FormFile::parse(&read_text(need(&a.form, "--form", "deligne-norm")?)?)?;
            let e = deligne_norm_log_dump(&ff.poly.to_float(), a.samples, a.seed, dump)?;
            ("deligne-norm", e, vec![ff.poly.to_text()])
        }
        Functional::DeltaLogNorm => {
            let ff = FormFile::parse(&read_text(need(&a.form, "--form", "delta-log-norm")?)?)?;
            let sigma = GroupElement::new(parse_matrix(need(&a.sigma, "--sigma", "delta-log-norm")?)?)?;
            let role = match a.role {
                RoleArg::Points => FormRole::Points,
                RoleArg::Hyperplanes => FormRole::Hyperplanes,
            };
            let e = delta_log_norm(&ff.poly.to_float(), &sigma, role, a.samples, a.seed)?;
            ("delta-log-norm", e, vec![ff.poly.to_text(), sigma_text, format!("{:?}", a.role)])
        }
        Functional::KEnergy => {
            let f = read_curve(&curve_text(need(&a.curve, "--curve", "k-energy")?)?)?;
            let curve = plane_curve(&f)?;
            let sigma = GroupElement::new(parse_matrix(need(&a.sigma, "--sigma", "k-energy")?)?)?;
            let dd = degree_data_for(curve.degree())?;
            let k = k_energy(&curve, &sigma, dd.mu, a.samples, a.seed)?;
            let e = match a.k_form {
                KFormArg::Multilinear => k.multilinear,
                KFormArg::Entropy => k.entropy,
            };
            ("k-energy", e, vec![f.to_text(), sigma_text, format!("{:?}", a.k_form)])
        }
    };
    let refs: Vec<&str> = inputs.iter().map(String::as_str).collect();
    let rec = EnergyRecord::new(name, &refs, &est);
    let mut body = serde_json::to_string_pretty(&rec)?;
    body.push('\n');
    write_or_print(a.out.as_deref(), &body, out)?;
    if a.out.is_some() {
        writeln!(out, "{name}: {:.6e} ± {:.2e} ({} samples, seed {})", est.value, est.stderr, est.samples, est.seed)?;
    }
    Ok(0)
}

/// Parses a comma-separated grid of finite numbers; rejects an empty grid.
pub fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let vals: Vec<f64> = text
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| Error::Input(format!("bad grid value {s:?}"))))
        .collect::<Result<_>>()?;
    if vals.is_empty() {
        return Err(Error::Input("the t grid is empty".into()));
    }
    Ok(vals)
}

/// One CSV row per grid point.
#[derive(Clone, Debug, PartialEq)]
pub struct PlotRow {
    pub t: f64,
    pub nu: f64,
    pub nu_stderr: f64,
    pub dlog_d: f64,
    pub dlog_c: f64,
}

pub fn render_plot_csv(rows: &[PlotRow]) -> Result<String> {
    if rows.is_empty() {
        return Err(Error::Input("no data rows to emit".into()));
    }
    let mut s = String::from("t,nu,nu_stderr,dlogD,dlogC\n");
    for r in rows {
        let _ = writeln!(s, "{:?},{:?},{:?},{:?},{:?}", r.t, r.nu, r.nu_stderr, r.dlog_d, r.dlog_c);
    }
    Ok(s)
}

pub fn emit_plot_data(rows: &[PlotRow], path: &Path) -> Result<()> {
    std::fs::write(path, render_plot_csv(rows)?)?;
    Ok(())
}

fn knorm(a: &KnormArgs, out: &mut dyn Write) -> Result<i32> {
    let grid = parse_grid(&a.t)?;
    let gen = parse_matrix(&a.generator)?;
    if gen.nrows() != 3 {
        return Err(Error::Input("the generator must be 3x3".into()));
    }
    let f = read_curve(&curve_text(&a.curve)?)?;
    let curve = plane_curve(&f)?;
    let forms = verify::curve_forms(&f, verify::derive_seed(a.seed, "dual"))?;
    let budgets = Budgets { ambient: a.ambient_samples, curve: a.curve_samples, ..Budgets::default() };
    let form = match a.k_form {
        KFormArg::Multilinear => KForm::Multilinear,
        KFormArg::Entropy => KForm::Entropy,
    };
    let mut rows = vec![];
    for &t in &grid {
        let g = one_param_subgroup(&gen, t)?;
        let p = verify::cor2_point(&curve, &forms, &g, &format!("t={t}"), &budgets, form, a.seed)?;
        rows.push(PlotRow { t, nu: p.nu, nu_stderr: p.nu_stderr, dlog_d: p.dlog_d, dlog_c: p.dlog_c });
    }
    emit_plot_data(&rows, &a.out)?;
    writeln!(out, "wrote {} rows to {}", rows.len(), a.out.display())?;
    Ok(0)
}

/// Quick checks of exact algebra, quadrature calibration and determinism.
pub fn selftest() -> (String, bool) {
    let mut text = String::new();
    let mut all = true;
    let mut record = |name: &str, r: Result<bool>| {
        let ok = matches!(r, Ok(true));
        all &= ok;
        let detail = match r {
            Err(e) => format!(" ({e})"),
            _ => String::new(),
        };
        let _ = writeln!(text, "{} {name}{detail}", if ok { "PASS" } else { "FAIL" });
    };
    record("dual of the standard conic is 4 u0 u2 - u1^2 up to sign", (|| {
        let f = read_curve("x0*x2 - x1^2")?;
        let d = discriminant_form(&f, DualMethod::Eliminate, 0)?.poly.to_float();
        // 4·1·3 − 2² = 8 and 4·2·1 − 3² = −1
        let at = |u: [f64; 3]| d.eval_c64(&[u.iter().map(|&x| C64::new(x, 0.0)).collect()]);
        let (a, b) = (at([1.0, 2.0, 3.0])?, at([2.0, 3.0, 1.0])?);
        Ok(d.num_terms() == 2 && ((a.re - 8.0).abs() < 1e-12 && (b.re + 1.0).abs() < 1e-12 || (a.re + 8.0).abs() < 1e-12 && (b.re - 1.0).abs() < 1e-12))
    })());
    record("chow form of a conic has multidegree (2,2)", (|| {
        let AnyPoly::Exact(f) = read_curve("x0^2 + x1^2 + x2^2")? else { return Ok(false) };
        Ok(chow_form_hypersurface(&f, 2)?.poly.multidegree()? == vec![2, 2])
    })());
    record("log|z0|^2 averages to -1 on P1", (|| {
        let f = MultiPoly::<CRat>::parse(BlockGrading::single("x", 2), "x0")?;
        let e = deligne_norm_log(&f, 200_000, 1)?;
        Ok((e.value + 1.0).abs() <= 3.0 * e.stderr)
    })());
    record("aubin-yau of a Bergman potential vanishes on P1", (|| {
        let c = |x: f64| C64::new(x, 0.0);
        let s = GroupElement::diagonal(&[c(2.0), c(0.5)])?;
        let e = aubin_yau(&SpaceSpec::Projective(1), &s.bergman_potential(), 100_000, 2)?;
        Ok(e.value.abs() <= (3.0 * e.stderr).max(1e-2))
    })());
    record("same seed gives identical estimates", (|| {
        let c = |x: f64| C64::new(x, 0.0);
        let s = GroupElement::diagonal(&[c(1.5), c(1.0), c(1.0 / 1.5)])?;
        let run = || aubin_yau(&SpaceSpec::Projective(2), &s.bergman_potential(), 20_000, 3);
        Ok(run()? == run()?)
    })());
    let report = Report::empty("selftest", 0, "");
    record("empty report serializes", Ok(serde_json::from_str::<Report>(&report.to_json()).map(|r| r == report).unwrap_or(false)));
    let _ = writeln!(text, "{}", if all { "selftest passed" } else { "selftest FAILED" });
    (text, all)
}
