use clap::{Args, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;
use toruslab::estimates::{self, SweepConfig};
use toruslab::growth::{self, RecurrenceParams};
use toruslab::nls::{self, Alpha, NlsParams, ObservableSpec, PicardConfig};
use toruslab::quadform::{self, QuadForm, ScanConfig, REMAINDER_EXPONENT};
use toruslab::spectral::{Field, FourierGrid, SobolevWeight, TorusGeometry};
use toruslab::xsb::{self, LiftConfig, ProductConfig};
use toruslab::{Complex, Rational64};

use crate::error::CliError;
use crate::output::{num, OutDir};

#[derive(Debug, Clone, Subcommand, Serialize, Deserialize)]
#[serde(tag = "command", content = "args", rename_all = "kebab-case")]
pub enum Command {
    /// Lattice count, main term and remainder of Q(m, n) <= x.
    Count(CountArgs),
    /// Growth exponent of sup |R(x)| over geometric blocks.
    RemainderFit(RemainderArgs),
    /// Dyadic-block maxima of annulus counts |G_l|.
    AnnulusScan(AnnulusArgs),
    /// Split-step evolution with observables.
    Evolve(EvolveArgs),
    /// Picard iteration of the Duhamel map.
    Picard(PicardArgs),
    /// Strichartz ratio sweep over frequency scales.
    Strichartz(SweepArgs),
    /// Bilinear ratio sweep at fixed N1.
    Bilinear(BilinearArgs),
    /// Exponential-sum inequality on random instances.
    Expsum(ExpsumArgs),
    /// Quadrilinear vanishing on random configurations.
    Vanish(VanishArgs),
    /// X^{s,b} norm of a windowed free solution and its dyadic pieces.
    XsbNorm(XsbNormArgs),
    /// Localized product estimate sweep.
    ProductCheck(ProductArgs),
    /// Sobolev-norm growth run.
    Growth(GrowthArgs),
    /// Polynomial bound from the increment recurrence.
    Recurrence(RecurrenceArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Count(_) => "count",
            Command::RemainderFit(_) => "remainder-fit",
            Command::AnnulusScan(_) => "annulus-scan",
            Command::Evolve(_) => "evolve",
            Command::Picard(_) => "picard",
            Command::Strichartz(_) => "strichartz",
            Command::Bilinear(_) => "bilinear",
            Command::Expsum(_) => "expsum",
            Command::Vanish(_) => "vanish",
            Command::XsbNorm(_) => "xsb-norm",
            Command::ProductCheck(_) => "product-check",
            Command::Growth(_) => "growth",
            Command::Recurrence(_) => "recurrence",
        }
    }
}

/// Runs the command, writing its files into `out`. Returns the verdict for
/// commands that have one.
pub fn execute(cmd: &Command, out: &OutDir) -> Result<Option<bool>, CliError> {
    match cmd {
        Command::Count(a) => count(a, out),
        Command::RemainderFit(a) => remainder_fit(a, out),
        Command::AnnulusScan(a) => annulus_scan(a, out),
        Command::Evolve(a) => evolve(a, out),
        Command::Picard(a) => picard(a, out),
        Command::Strichartz(a) => strichartz(a, out),
        Command::Bilinear(a) => bilinear(a, out),
        Command::Expsum(a) => expsum(a, out),
        Command::Vanish(a) => vanish(a, out),
        Command::XsbNorm(a) => xsb_norm(a, out),
        Command::ProductCheck(a) => product_check(a, out),
        Command::Growth(a) => growth(a, out),
        Command::Recurrence(a) => recurrence(a, out),
    }
}

// ---- shared argument groups ----

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct FormArgs {
    /// Coefficient of m²: integer, fraction `p/q` or decimal.
    #[arg(long, allow_hyphen_values = true)]
    pub a: String,
    #[arg(long, allow_hyphen_values = true, default_value = "0")]
    pub b: String,
    #[arg(long, allow_hyphen_values = true)]
    pub c: String,
    /// Use f64 coefficients instead of exact rationals.
    #[arg(long)]
    pub float: bool,
}

/// `"3"`, `"-2/7"` or `"1.25"` as an exact rational.
pub fn parse_rational(s: &str) -> Result<Rational64, CliError> {
    let bad = || CliError::Config(format!("not a rational number: {s:?}"));
    let s = s.trim();
    if let Some((int, frac)) = s.split_once('.') {
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) || frac.len() > 15 {
            return Err(bad());
        }
        let den = 10i64.pow(frac.len() as u32);
        let neg = int.starts_with('-');
        let whole: i64 = if int.is_empty() || int == "-" { 0 } else { int.parse().map_err(|_| bad())? };
        let f: i64 = frac.parse().map_err(|_| bad())?;
        let mag = whole.abs().checked_mul(den).and_then(|v| v.checked_add(f)).ok_or_else(bad)?;
        return Ok(Rational64::new(if neg { -mag } else { mag }, den));
    }
    s.parse::<Rational64>().map_err(|_| bad())
}

fn parse_float(s: &str) -> Result<f64, CliError> {
    match s.trim().split_once('/') {
        Some((p, q)) => {
            let p: f64 = p.parse().map_err(|_| CliError::Config(format!("not a number: {s:?}")))?;
            let q: f64 = q.parse().map_err(|_| CliError::Config(format!("not a number: {s:?}")))?;
            Ok(p / q)
        }
        None => s.trim().parse().map_err(|_| CliError::Config(format!("not a number: {s:?}"))),
    }
}

enum Form {
    Exact(QuadForm<Rational64>),
    Float(QuadForm<f64>),
}

impl FormArgs {
    fn form(&self) -> Result<Form, CliError> {
        if self.float {
            let (a, b, c) = (parse_float(&self.a)?, parse_float(&self.b)?, parse_float(&self.c)?);
            Ok(Form::Float(QuadForm::new(a, b, c)?))
        } else {
            let (a, b, c) = (parse_rational(&self.a)?, parse_rational(&self.b)?, parse_rational(&self.c)?);
            Ok(Form::Exact(QuadForm::new(a, b, c)?))
        }
    }
}

#[derive(Debug, Clone, Copy, Args, Serialize, Deserialize)]
pub struct GeometryArgs {
    #[arg(long, default_value_t = 1.0)]
    pub theta1: f64,
    #[arg(long, default_value_t = 2f64.powf(0.25))]
    pub theta2: f64,
}

impl GeometryArgs {
    fn geometry(&self) -> Result<TorusGeometry<f64>, CliError> {
        Ok(TorusGeometry::new(self.theta1, self.theta2)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlphaArg {
    Defocusing,
    Focusing,
}

impl From<AlphaArg> for Alpha {
    fn from(a: AlphaArg) -> Self {
        match a {
            AlphaArg::Defocusing => Alpha::Defocusing,
            AlphaArg::Focusing => Alpha::Focusing,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DataKind {
    /// u₀ = 0.
    Zero,
    /// A single mode `(m1, m2)` with the given amplitude.
    Plane,
    /// Random-phase data `⟨m⟩^{-3}` scaled to the given H¹ norm.
    Smooth,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct DataArgs {
    #[arg(long, value_enum, default_value_t = DataKind::Smooth)]
    pub data: DataKind,
    /// Modes per axis.
    #[arg(long, default_value_t = 32)]
    pub modes: usize,
    #[arg(long, default_value_t = 1.0)]
    pub h1: f64,
    /// Frequency cutoff `|m_i| ≤ cutoff` for smooth data.
    #[arg(long, default_value_t = 4)]
    pub cutoff: i64,
    #[arg(long, default_value_t = 1, allow_hyphen_values = true)]
    pub m1: i64,
    #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
    pub m2: i64,
    #[arg(long, default_value_t = 0.5)]
    pub amplitude: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    #[serde(flatten)]
    pub geometry: GeometryArgs,
}

impl DataArgs {
    fn field(&self) -> Result<Field<f64>, CliError> {
        let grid = FourierGrid::new(self.geometry.geometry()?, self.modes)?;
        Ok(match self.data {
            DataKind::Zero => Field::zeros(grid),
            DataKind::Plane => Field::single_mode(grid, (self.m1, self.m2), Complex::new(self.amplitude, 0.0))?,
            DataKind::Smooth => {
                if !(self.h1 >= 0.0 && self.h1.is_finite()) {
                    return Err(CliError::Config(format!("--h1 must be finite and >= 0, got {}", self.h1)));
                }
                growth::smooth_random_data(grid, self.cutoff, self.h1, self.seed)
            }
        })
    }
}

fn verdict_json(out: &OutDir, summary: serde_json::Value) -> Result<(), CliError> {
    out.json("summary.json", &summary)
}

// ---- quadform ----

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct CountArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub form: FormArgs,
    /// Threshold x (same number syntax as the coefficients).
    #[arg(long)]
    pub x: String,
}

fn count(a: &CountArgs, out: &OutDir) -> Result<Option<bool>, CliError> {
    let r = match a.form.form()? {
        Form::Exact(q) => q.count(parse_rational(&a.x)?)?,
        Form::Float(q) => q.count(parse_float(&a.x)?)?,
    };
    out.csv(
        "count.csv",
        &["x", "count", "main_term", "remainder", "precision_warning"],
        [[num(r.x), r.count.to_string(), num(r.main_term), num(r.remainder), r.precision_warning.to_string()]],
    )?;
    out.json("summary.json", &r)?;
    Ok(None)
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct RemainderArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub form: FormArgs,
    #[arg(long, default_value_t = 1e3)]
    pub x_min: f64,
    #[arg(long, default_value_t = 1e7)]
    pub x_max: f64,
    #[arg(long, default_value_t = 8)]
    pub blocks_per_decade: usize,
    #[arg(long, default_value_t = 200)]
    pub samples_per_block: usize,
    /// Exact forms are scanned at every jump point below this threshold.
    #[arg(long, default_value_t = 1e5)]
    pub dense_below: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

fn write_fit(out: &OutDir, rep: &quadform::FitReport, extra: serde_json::Value) -> Result<(), CliError> {
    out.csv(
        "blocks.csv",
        &["lo", "hi", "center", "max_abs", "argmax", "samples", "ambiguous"],
        rep.points.iter().map(|p| {
            [num(p.lo), num(p.hi), num(p.center), num(p.max_abs), num(p.argmax), p.samples.to_string(), p.ambiguous.to_string()]
        }),
    )?;
    let mut summary = json!({
        "slope": rep.slope,
        "intercept": rep.intercept,
        "residual": rep.residual,
        "reference_exponent": REMAINDER_EXPONENT,
        "blocks": rep.points.len(),
        "ambiguous_samples": rep.points.iter().map(|p| p.ambiguous).sum::<usize>(),
    });
    if let (Some(s), serde_json::Value::Object(e)) = (summary.as_object_mut(), extra) {
        s.extend(e);
    }
    out.json("summary.json", &summary)
}

fn remainder_fit(a: &RemainderArgs, out: &OutDir) -> Result<Option<bool>, CliError> {
    let cfg = ScanConfig {
        blocks_per_decade: a.blocks_per_decade,
        samples_per_block: a.samples_per_block,
        seed: a.seed,
        dense_below: a.dense_below,
    };
    let rep = match a.form.form()? {
        Form::Exact(q) => quadform::fit_remainder_exponent_with(&q, a.x_min, a.x_max, &cfg)?,
        Form::Float(q) => quadform::fit_remainder_exponent_with(&q, a.x_min, a.x_max, &cfg)?,
    };
    write_fit(out, &rep, json!({}))?;
    Ok(None)
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct AnnulusArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub form: FormArgs,
    #[arg(long, default_value_t = 1)]
    pub l_min: i64,
    #[arg(long, default_value_t = 1_000_000)]
    pub l_max: i64,
    /// Also write the full profile `|G_l|` for every l.
    #[arg(long)]
    pub profile: bool,
}

fn annulus_scan(a: &AnnulusArgs, out: &OutDir) -> Result<Option<bool>, CliError> {
    let Form::Exact(q) = a.form.form()? else {
        return Err(CliError::Config("annulus-scan needs exact coefficients".into()));
    };
    let rep = quadform::fit_annulus_exponent(&q, a.l_min, a.l_max)?;
    if a.profile {
        let prof = quadform::annulus_profile(&q, a.l_max)?;
        out.csv("profile.csv", &["l", "count"], prof.iter().enumerate().map(|(l, c)| [l.to_string(), c.to_string()]))?;
    }
    let max = rep.points.iter().map(|p| p.max_abs).fold(0.0, f64::max);
    write_fit(out, &rep, json!({ "max_count": max }))?;
    Ok(None)
}

// ---- nls ----

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct EvolveArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub data: DataArgs,
    #[arg(long, value_enum, default_value_t = AlphaArg::Defocusing)]
    pub alpha: AlphaArg,
    #[arg(long, default_value_t = 0.01)]
    pub dt: f64,
    #[arg(long, default_value_t = 1.0)]
    pub t_final: f64,
    #[arg(long, default_value_t = 10)]
    pub sample_every: usize,
    /// Sobolev exponents recorded with the eigen weight.
    #[arg(long, value_delimiter = ',', default_value = "1,2")]
    pub sobolev: Vec<f64>,
    #[arg(long, default_value_t = 2)]
    pub dealias_oversample: usize,
    /// Write the final field as a checkpoint.
    #[arg(long)]
    pub checkpoint: bool,
}

fn evolve(a: &EvolveArgs, out: &OutDir) -> Result<Option<bool>, CliError> {
    let u0 = a.data.field()?;
    let params = NlsParams::new(a.alpha.into(), a.dt, a.dealias_oversample)?;
    let spec = ObservableSpec {
        sample_every: a.sample_every,
        sobolev: a.sobolev.iter().map(|&s| (s, SobolevWeight::Eigen)).collect(),
        store_snapshots: false,
    };
    let tr = nls::evolve(&u0, a.t_final, &params, &spec)?;
    tr.write_csv(out.file("observables.csv")?)?;
    if a.checkpoint {
        let t_last = tr.times.last().copied().unwrap_or(0.0);
        nls::write_checkpoint(&tr.last, t_last, &params, &out.path().join("checkpoint"))?;
    }
    verdict_json(
        out,
        json!({
            "completed": tr.completed(),
            "halted": tr.halted,
            "samples": tr.times.len(),
            "mass_drift": tr.mass_drift(),
            "energy_drift": tr.energy_drift(),
            "final_mass": tr.observables.last().map(|r| r.mass),
            "final_energy": tr.observables.last().map(|r| r.energy),
        }),
    )?;
    Ok(Some(tr.completed()))
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct PicardArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub data: DataArgs,
    #[arg(long, value_enum, default_value_t = AlphaArg::Focusing)]
    pub alpha: AlphaArg,
    #[arg(long, default_value_t = 0.01)]
    pub t_final: f64,
    #[arg(long, default_value_t = 8)]
    pub n_iter: usize,
    #[arg(long, default_value_t = 65)]
    pub n_quad: usize,
    #[arg(long, default_value_t = 1.0)]
    pub s: f64,
    #[arg(long, default_value_t = 2)]
    pub dealias_oversample: usize,
}

fn picard(a: &PicardArgs, out: &OutDir) -> Result<Option<bool>, CliError> {
    let u0 = a.data.field()?;
    let cfg = PicardConfig {
        t_final: a.t_final,
        alpha: a.alpha.into(),
        n_iter: a.n_iter,
        n_quad: a.n_quad,
        s: a.s,
        dealias_oversample: a.dealias_oversample,
    };
    let rep = nls::picard_with_refinement(&u0, &cfg)?;
    let ratios = rep.ratios();
    out.csv(
        "differences.csv",
        &["iteration", "difference", "ratio", "within_ball"],
        rep.differences.iter().enumerate().map(|(k, d)| {
            let r = if k == 0 { String::new() } else { num(ratios[k - 1]) };
            [(k + 1).to_string(), num(*d), r, rep.within_ball[k + 1].to_string()]
        }),
    )?;
    // Reference solution from the splitting scheme on a fine step.
    let dt = a.t_final / 1000.0;
    let params = NlsParams::new(cfg.alpha, dt, a.dealias_oversample)?;
    let spec = ObservableSpec { sample_every: 1000, sobolev: vec![], store_snapshots: false };
    let tr = nls::evolve(&u0, a.t_final, &params, &spec)?;
    let evolve_distance = match rep.last().last() {
        Some(f) => f.sub(&tr.last)?.l2_norm(),
        None => f64::NAN,
    };
    let within = rep.within_ball.iter().all(|&b| b);
    // Ratios between differences already at roundoff carry no information.
    let floor = 1e-14 * u0.l2_norm().max(f64::MIN_POSITIVE);
    let contracting = !rep.diverged
        && rep.differences.windows(2).all(|w| w[0] <= floor || w[1] <= 0.5 * w[0]);
    verdict_json(
        out,
        json!({
            "diverged": rep.diverged,
            "ball_radius": rep.ball_radius,
            "within_ball": within,
            "ratios": ratios,
            "residual": rep.residual(),
            "quadrature_delta": rep.quadrature_delta,
            "evolve_distance": evolve_distance,
            "passed": contracting && within,
        }),
    )?;
    Ok(Some(contracting && within))
}

// ---- estimates ----

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SweepArgs {
    #[arg(long, value_delimiter = ',', default_value = "8,16,32,64")]
    pub n_list: Vec<u64>,
    #[arg(long, default_value_t = 200)]
    pub ensemble: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 64)]
    pub n_time_samples: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub geometry: GeometryArgs,
}

impl SweepArgs {
    fn config(&self) -> Result<SweepConfig, CliError> {
        Ok(SweepConfig {
            n_list: self.n_list.clone(),
            ensemble_size: self.ensemble,
            seed: self.seed,
            n_time_samples: self.n_time_samples,
            geometry: self.geometry.geometry()?,
        })
    }
}

fn write_sweep(out: &OutDir, rep: &estimates::SweepReport) -> Result<(), CliError> {
    estimates::write_records_csv(&rep.records, out.file("records.csv")?)?;
    out.json(
        "summary.json",
        &json!({
            "exponent": rep.fit.as_ref().map(|f| f.slope),
            "intercept": rep.fit.as_ref().map(|f| f.intercept),
            "sobolev_exponent": rep.sobolev_fit.as_ref().map(|f| f.slope),
            "reference_exponent": rep.reference_exponent,
            "spread": rep.spread,
            "any_flagged": rep.any_flagged,
            "max_refinement_delta": rep.records.iter().map(|r| r.refinement_delta).fold(0.0, f64::max),
        }),
    )
}

fn strichartz(a: &SweepArgs, out: &OutDir) -> Result<Option<bool>, CliError> {
    let rep = estimates::strichartz_sweep(&a.config()?)?;
    write_sweep(out, &rep)?;
    Ok(None)
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct BilinearArgs {
    #[arg(long, default_value_t = 4)]
    pub n1: u64,
    #[command(flatten)]
    #[serde(flatten)]
    pub sweep: SweepArgs,
}

fn bilinear(a: &BilinearArgs, out: &OutDir) -> Result<Option<bool>, CliError> {
    let rep = estimates::bilinear_sweep(&a.sweep.config()?, a.n1)?;
    write_sweep(out, &rep)?;
    Ok(Some(rep.spread < 2.0))
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ExpsumArgs {
    #[arg(long, default_value_t = 1000)]
    pub instances: u64,
    #[arg(long, default_value_t = 8)]
    pub terms: usize,
    /// Frequencies are drawn from [-spread, spread].
    #[arg(long, default_value_t = 5.0)]
    pub spread: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

fn expsum(a: &ExpsumArgs, out: &OutDir) -> Result<Option<bool>, CliError> {
    if a.terms == 0 || !(a.spread > 0.0 && a.spread.is_finite()) {
        return Err(CliError::Config("need --terms >= 1 and a positive finite --spread".into()));
    }
    let mut rows = Vec::new();
    let mut max_ratio: f64 = 0.0;
    for i in 0..a.instances {
        let (fr, co) = estimates::random_exp_sum_instance(a.seed, i, a.terms, a.spread);
        let r = estimates::exp_sum_check(&fr, &co)?;
        max_ratio = max_ratio.max(r.ratio);
        rows.push([i.to_string(), num(r.lhs), num(r.rhs), num(r.ratio)]);
    }
    out.csv("instances.csv", &["instance", "lhs", "rhs", "ratio"], rows)?;
    let passed = max_ratio <= 10.0;
    verdict_json(out, json!({ "instances": a.instances, "max_ratio": max_ratio, "passed": passed }))?;
    Ok(Some(passed))
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct VanishArgs {
    #[arg(long, default_value_t = 100)]
    pub configs: u64,
    #[arg(long, default_value_t = 32)]
    pub modes: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    #[serde(flatten)]
    pub geometry: GeometryArgs,
}

fn vanish(a: &VanishArgs, out: &OutDir) -> Result<Option<bool>, CliError> {
    if a.modes < 32 {
        return Err(CliError::Config(format!("vanish configurations need --modes >= 32, got {}", a.modes)));
    }
    let grid = FourierGrid::new(a.geometry.geometry()?, a.modes)?;
    let mut rows = Vec::new();
    let mut passed = true;
    for i in 0..a.configs {
        for (kind, f) in [
            ("vanishing", estimates::random_vanishing_configuration(grid, a.seed, i)?),
            ("zero-sum", estimates::random_zero_sum_configuration(grid, a.seed, i)?),
        ] {
            let r = estimates::quadrilinear_vanish_check([&f[0], &f[1], &f[2], &f[3]])?;
            passed &= r.consistent && (kind == "zero-sum") != r.predicted_zero;
            rows.push([
                i.to_string(),
                kind.to_string(),
                num(r.integral.re),
                num(r.integral.im),
                num(r.norm_product),
                r.predicted_zero.to_string(),
                r.consistent.to_string(),
            ]);
        }
    }
    out.csv(
        "configs.csv",
        &["config", "kind", "integral_re", "integral_im", "norm_product", "predicted_zero", "consistent"],
        rows,
    )?;
    verdict_json(out, json!({ "configs": a.configs, "passed": passed }))?;
    Ok(Some(passed))
}

// ---- xsb ----

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct XsbNormArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value_t = 0.0)]
    pub s: f64,
    #[arg(long, default_value_t = 0.55)]
    pub b: f64,
    #[arg(long, default_value_t = 64)]
    pub n_time_samples: usize,
}

fn xsb_norm(a: &XsbNormArgs, out: &OutDir) -> Result<Option<bool>, CliError> {
    let u0 = a.data.field()?;
    let samples = xsb::free_flow_samples(&u0, a.n_time_samples);
    let field = xsb::lift(&samples, LiftConfig::default())?;
    let norm = field.xsb_norm(a.s, a.b);
    let pieces = field.dyadic_decompose();
    out.csv(
        "pieces.csv",
        &["freq_shell", "mod_shell", "norm"],
        pieces.iter().map(|p| [p.freq_shell.to_string(), p.mod_shell.to_string(), num(p.field.xsb_norm(a.s, a.b))]),
    )?;
    verdict_json(
        out,
        json!({
            "norm": norm,
            "s": a.s,
            "b": a.b,
            "pieces": pieces.len(),
            "tail_fraction": field.tail_fraction,
            "flagged": field.flagged(),
        }),
    )?;
    Ok(None)
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ProductArgs {
    #[arg(long, value_delimiter = ',', default_value = "2,4,8,16")]
    pub n1_list: Vec<u64>,
    #[arg(long, default_value_t = 4)]
    pub n2_factor: u64,
    #[arg(long, value_delimiter = ',', default_value = "4,8,16")]
    pub spread_factors: Vec<u64>,
    #[arg(long, value_delimiter = ',', default_value = "0.3,0.4,0.45")]
    pub b_primes: Vec<f64>,
    #[arg(long, default_value_t = 8)]
    pub ensemble: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 64)]
    pub n_time_samples: usize,
    /// Modulation dressing strength of the random space-time fields.
    #[arg(long, default_value_t = 4.0)]
    pub dressing: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub geometry: GeometryArgs,
}

fn product_check(a: &ProductArgs, out: &OutDir) -> Result<Option<bool>, CliError> {
    let cfg = ProductConfig {
        n1_list: a.n1_list.clone(),
        n2_factor: a.n2_factor,
        spread_factors: a.spread_factors.clone(),
        b_primes: a.b_primes.clone(),
        ensemble_size: a.ensemble,
        seed: a.seed,
        n_time_samples: a.n_time_samples,
        dressing: a.dressing,
        geometry: a.geometry.geometry()?,
    };
    let sweep = xsb::localized_product_sweep(&cfg)?;
    xsb::write_product_csv(&sweep, out.file("records.csv")?)?;
    out.json("summary.json", &sweep.summaries)?;
    Ok(None)
}

// ---- growth ----

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct GrowthArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value_t = 2.0)]
    pub s: f64,
    #[arg(long, default_value_t = 0.01)]
    pub dt: f64,
    #[arg(long, default_value_t = 200.0)]
    pub t_final: f64,
    #[arg(long, default_value_t = 100)]
    pub sample_every: usize,
    /// Increment window length; defaults to min(0.1, 1/‖u₀‖²_{H¹}).
    #[arg(long)]
    pub window: Option<f64>,
}

fn growth(a: &GrowthArgs, out: &OutDir) -> Result<Option<bool>, CliError> {
    let u0 = a.data.field()?;
    let params = NlsParams::new(Alpha::Defocusing, a.dt, 2)?;
    let series = growth::track_growth(&u0, a.s, a.t_final, &params, a.sample_every)?;
    series.write_csv(out.file("series.csv")?)?;
    let window = a.window.unwrap_or_else(|| growth::default_window(&u0));
    let spacing = a.dt * a.sample_every as f64;
    let steps = ((window / spacing).round() as usize).max(1);
    let verdict = growth::verdict(&series, steps)?;
    out.json("summary.json", &json!({ "verdict": verdict, "window": window, "window_steps": steps, "halted": series.halted }))?;
    Ok(Some(!verdict.violated && verdict.audit_passed))
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct RecurrenceArgs {
    #[arg(long)]
    pub r: f64,
    #[arg(long)]
    pub c: f64,
    #[arg(long, default_value_t = 1.0)]
    pub delta: f64,
    #[arg(long, default_value_t = 1.0)]
    pub y0: f64,
    #[arg(long, default_value_t = 100_000)]
    pub k: u64,
}

fn recurrence(a: &RecurrenceArgs, out: &OutDir) -> Result<Option<bool>, CliError> {
    let p = RecurrenceParams::new(a.r, a.c, a.delta, a.y0)?;
    let rep = growth::recurrence_bound_check(&p, a.k)?;
    out.csv(
        "recurrence.csv",
        &["r", "C", "delta", "y0", "K", "c_prime", "max_ratio_index", "last_decade_increase", "holds"],
        [[num(a.r), num(a.c), num(a.delta), num(a.y0), a.k.to_string(), num(rep.c_prime), rep.max_ratio_index.to_string(), num(rep.last_decade_increase), rep.holds.to_string()]],
    )?;
    out.json("summary.json", &rep)?;
    Ok(Some(rep.holds))
}
