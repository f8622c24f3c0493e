//! Command-line driver: run configuration, initial data, the `evolve`, `verify`, `beta` and
//! `explicit` subcommands, and their machine-readable outputs.
//!
//! Exit codes: 0 success, 1 configuration error, 2 numerical failure, 3 failed verification.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::check::Check;
use crate::conserved::{self, Transform};
use crate::error::{Error, Result};
use crate::explicit_virial::{self, GerardSystem, PhiSpec};
use crate::flows::{self, Flow, FlowSpec};
use crate::lax_gauge::LaxOperator;
use crate::spectral::{Field, Geometry, HardyField, NormSpec, RealField};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;
pub const EXIT_VERIFY: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "bolab", version, about = "Spectral laboratory for the Benjamin–Ono Lax operator and its flows")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Subcommand, Debug, Clone, PartialEq)]
pub enum Command {
    /// Integrate a flow; writes trajectory.jsonl and monitors.csv.
    Evolve,
    /// Run a verification suite; writes <suite>.json.
    Verify {
        #[arg(value_enum)]
        suite: Suite,
    },
    /// Tabulate β(κ), its derivatives and H_κ over the κ list; writes beta.csv and beta_fit.json.
    Beta,
    /// Evaluate the explicit formula at the configured times and points; writes explicit.csv.
    Explicit,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Identities,
    Conservation,
    Commuting,
    Virial,
    Gerard,
    BockKruskal,
    Alpha,
}

impl Suite {
    pub fn name(&self) -> &'static str {
        match self {
            Suite::Identities => "identities",
            Suite::Conservation => "conservation",
            Suite::Commuting => "commuting",
            Suite::Virial => "virial",
            Suite::Gerard => "gerard",
            Suite::BockKruskal => "bock-kruskal",
            Suite::Alpha => "alpha",
        }
    }

    /// Tolerance used when none is configured.
    pub fn default_tol(&self) -> f64 {
        match self {
            Suite::Identities => 1e-8,
            Suite::Conservation => 1e-6,
            Suite::Commuting => 1e-6,
            Suite::Virial => 1e-6,
            Suite::Gerard => 1e-8,
            Suite::BockKruskal => 1e-8,
            Suite::Alpha => 0.25,
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeometryKind {
    Circle,
    Box,
    Line,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FlowKind {
    Bo,
    Hk,
    Beta,
    Diff,
    Phi,
}

/// Command-line overrides of the configuration file.
#[derive(Args, Debug, Clone, Default)]
pub struct Overrides {
    /// JSON configuration file (unknown keys are rejected).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub geometry: Option<GeometryKind>,
    #[arg(long, global = true)]
    pub box_length: Option<f64>,
    /// Length scale of the rational basis on the line.
    #[arg(long, global = true)]
    pub line_scale: Option<f64>,
    /// Grid size N (a power of two).
    #[arg(long, global = true)]
    pub modes: Option<usize>,
    /// Hardy modes M of the Lax operator (default N/3).
    #[arg(long, global = true)]
    pub hardy_modes: Option<usize>,
    #[arg(long, global = true, value_enum)]
    pub flow: Option<FlowKind>,
    /// Comma-separated list, or `lo:hi:count` for a geometric grid.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub kappa: Option<String>,
    #[arg(long, global = true)]
    pub varkappa: Option<f64>,
    /// φ for the phi flow, as JSON: {"poles":[[c,κ],…],"a":…,"b":…}.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub phi: Option<String>,
    #[arg(long, global = true)]
    pub dt: Option<f64>,
    #[arg(long = "T", global = true)]
    pub t_final: Option<f64>,
    /// Steps between trajectory samples.
    #[arg(long, global = true)]
    pub stride: Option<usize>,
    /// "soliton c=…", "constant c=…", "mode a,k", "gaussian a,w", "random amp=…,modes=…", or a file.
    #[arg(long, global = true)]
    pub init: Option<String>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Writes the dense Lax matrix of the initial datum as JSON.
    #[arg(long, global = true)]
    pub dump_operator: Option<PathBuf>,
    /// Evaluation points `re:im,…` for the explicit formula.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub points: Option<String>,
    /// Comma-separated times for the explicit formula.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub times: Option<String>,
}

/// Complete run configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub geometry: GeometryKind,
    pub box_length: f64,
    pub line_scale: f64,
    pub n: usize,
    pub m: Option<usize>,
    pub flow: FlowKind,
    pub kappa: Vec<f64>,
    pub varkappa: f64,
    pub phi: Option<PhiSpec>,
    pub dt: f64,
    #[serde(rename = "T")]
    pub t_final: f64,
    pub stride: usize,
    pub init: String,
    pub out: PathBuf,
    pub tol: Option<f64>,
    pub seed: u64,
    pub dump_operator: Option<PathBuf>,
    pub points: Vec<[f64; 2]>,
    pub times: Vec<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            geometry: GeometryKind::Box,
            box_length: 50.0,
            line_scale: 1.0,
            n: 512,
            m: None,
            flow: FlowKind::Bo,
            kappa: vec![16.0],
            varkappa: 20.0,
            phi: None,
            dt: 1e-3,
            t_final: 1.0,
            stride: 100,
            init: "soliton c=1".into(),
            out: PathBuf::from("bolab-out"),
            tol: None,
            seed: 0,
            dump_operator: None,
            points: vec![[0.3, 0.5]],
            times: vec![0.0, 0.25, 0.5, 0.75, 1.0],
        }
    }
}

fn parse_list(s: &str) -> Result<Vec<f64>> {
    let bad = || Error::Config(format!("cannot parse number list {s:?}"));
    if let [lo, hi, count] = s.split(':').collect::<Vec<_>>()[..] {
        let (lo, hi): (f64, f64) = (lo.trim().parse().map_err(|_| bad())?, hi.trim().parse().map_err(|_| bad())?);
        let count: usize = count.trim().parse().map_err(|_| bad())?;
        if !(lo > 0.0 && hi > lo && count >= 2) {
            return Err(bad());
        }
        let r = (hi / lo).powf(1.0 / (count - 1) as f64);
        return Ok((0..count).map(|j| lo * r.powi(j as i32)).collect());
    }
    s.split(',').map(|t| t.trim().parse::<f64>().map_err(|_| bad())).collect()
}

fn parse_points(s: &str) -> Result<Vec<[f64; 2]>> {
    s.split(',')
        .map(|p| {
            let v = p.split(':').map(|t| t.trim().parse::<f64>()).collect::<std::result::Result<Vec<_>, _>>();
            match v.as_deref() {
                Ok([re, im]) => Ok([*re, *im]),
                _ => Err(Error::Config(format!("point {p:?} is not of the form re:im"))),
            }
        })
        .collect()
}

impl RunConfig {
    /// The configuration file (if any) with command-line overrides applied, validated.
    pub fn load(o: &Overrides) -> Result<Self> {
        let mut c = match &o.config {
            Some(p) => serde_json::from_str(&fs::read_to_string(p)?)?,
            None => Self::default(),
        };
        macro_rules! set {
            ($field:ident, $src:expr) => {
                if let Some(v) = $src.clone() {
                    c.$field = v;
                }
            };
        }
        set!(geometry, o.geometry);
        set!(box_length, o.box_length);
        set!(line_scale, o.line_scale);
        set!(n, o.modes);
        set!(flow, o.flow);
        set!(varkappa, o.varkappa);
        set!(dt, o.dt);
        set!(t_final, o.t_final);
        set!(stride, o.stride);
        set!(init, o.init);
        set!(out, o.out);
        set!(seed, o.seed);
        if o.hardy_modes.is_some() {
            c.m = o.hardy_modes;
        }
        if o.tol.is_some() {
            c.tol = o.tol;
        }
        if o.dump_operator.is_some() {
            c.dump_operator = o.dump_operator.clone();
        }
        if let Some(k) = &o.kappa {
            c.kappa = parse_list(k)?;
        }
        if let Some(p) = &o.phi {
            c.phi = Some(serde_json::from_str(p)?);
        }
        if let Some(p) = &o.points {
            c.points = parse_points(p)?;
        }
        if let Some(t) = &o.times {
            c.times = parse_list(t)?;
        }
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        self.geometry().validate()?;
        if self.kappa.is_empty() || self.kappa.iter().any(|k| !(*k > 0.0)) {
            return Err(Error::Config(format!("kappa list {:?} must be nonempty and positive", self.kappa)));
        }
        if !(self.dt > 0.0) || !(self.t_final >= 0.0) || self.stride == 0 {
            return Err(Error::Config("need dt > 0, T ≥ 0 and stride ≥ 1".into()));
        }
        if let Some(t) = self.tol {
            if !(t > 0.0) {
                return Err(Error::Config(format!("tolerance {t} must be positive")));
            }
        }
        Ok(())
    }

    pub fn geometry(&self) -> Geometry {
        match self.geometry {
            GeometryKind::Circle => Geometry::circle(self.n),
            GeometryKind::Box => Geometry::periodic_box(self.box_length, self.n),
            GeometryKind::Line => Geometry::line(self.line_scale, self.n),
        }
    }

    pub fn flow(&self) -> Result<Flow> {
        let kappa = self.kappa[0];
        Ok(match self.flow {
            FlowKind::Bo => Flow::Bo,
            FlowKind::Hk => Flow::Hk { kappa },
            FlowKind::Beta => Flow::Beta { kappa },
            FlowKind::Diff => Flow::Diff { kappa },
            FlowKind::Phi => Flow::Phi { phi: self.phi.clone().unwrap_or_else(|| PhiSpec::beta(kappa)) },
        })
    }

    /// `φ` whose Hamiltonian generates the configured flow.
    pub fn phi_spec(&self) -> Result<PhiSpec> {
        match self.flow()? {
            Flow::Bo => Ok(PhiSpec::bo()),
            Flow::Beta { kappa } => Ok(PhiSpec::beta(kappa)),
            Flow::Phi { phi } => Ok(phi),
            f => Err(Error::Config(format!("flow {} has no spectral function φ", f.name()))),
        }
    }

    pub fn initial(&self) -> Result<RealField> {
        initial_datum(&self.init, self.geometry(), self.seed)
    }

    pub fn lax(&self, q: &RealField) -> Result<LaxOperator> {
        match self.m {
            Some(m) => LaxOperator::new(q, m),
            None => LaxOperator::from_potential(q),
        }
    }

    pub fn flow_spec(&self) -> Result<FlowSpec> {
        Ok(FlowSpec {
            flow: self.flow()?,
            dt: self.dt,
            t_final: self.t_final,
            stride: self.stride,
            monitor_kappas: self.kappa.clone(),
            safety: 2.0,
        })
    }

    fn tol_for(&self, suite: Suite) -> f64 {
        self.tol.unwrap_or_else(|| suite.default_tol())
    }
}

/// `Q_c(x − x₀) = 2c/(c²(x−x₀)²+1)`; on periodic geometries its exact periodization
/// `(2π/Λ) sinh b / (cosh b − cos(2π(x−x₀)/Λ))`, `b = 2π/(cΛ)`, which is smooth across the seam.
pub fn soliton(geom: Geometry, c: f64, x0: f64) -> Result<RealField> {
    if !(c > 0.0) {
        return Err(Error::Config(format!("soliton speed {c} must be positive")));
    }
    Ok(match geom {
        Geometry::Line { .. } => RealField::from_fn(geom, |x| 2.0 * c / (c * c * (x - x0) * (x - x0) + 1.0)),
        _ => {
            let w = geom.period();
            let b = 2.0 * PI / (c * w);
            RealField::from_fn(geom, |x| 2.0 * PI / w * b.sinh() / (b.cosh() - (2.0 * PI * (x - x0) / w).cos()))
        }
    })
}

fn descriptor_params(rest: &str) -> (BTreeMap<String, f64>, Vec<f64>) {
    let mut named = BTreeMap::new();
    let mut positional = Vec::new();
    for tok in rest.split([',', ' ']).map(str::trim).filter(|t| !t.is_empty()) {
        match tok.split_once('=') {
            Some((k, v)) => {
                if let Ok(v) = v.trim().parse() {
                    named.insert(k.trim().to_string(), v);
                }
            }
            None => {
                if let Ok(v) = tok.parse() {
                    positional.push(v);
                }
            }
        }
    }
    (named, positional)
}

/// Builds the initial datum from a descriptor or a file holding `{"coeffs": [[re, im], …]}` (for
/// instance a line of `trajectory.jsonl`) or `{"values": […]}` on the grid of `geom`.
pub fn initial_datum(desc: &str, geom: Geometry, seed: u64) -> Result<RealField> {
    let desc = desc.trim();
    let (kind, rest) = desc.split_once(char::is_whitespace).unwrap_or((desc, ""));
    let (named, pos) = descriptor_params(rest);
    let get = |name: &str, idx: usize, default: Option<f64>| -> Result<f64> {
        named
            .get(name)
            .copied()
            .or_else(|| pos.get(idx).copied())
            .or(default)
            .ok_or_else(|| Error::Config(format!("initial datum {desc:?} needs {name}")))
    };
    let center = if geom.is_periodic() && !geom.models_line() { 0.5 } else { 0.0 };
    let q = match kind {
        "soliton" => soliton(geom, get("c", 0, Some(1.0))?, get("x0", 1, Some(center))?)?,
        "constant" => RealField::constant(geom, get("c", 0, None)?)?,
        "mode" => {
            let (a, k) = (get("a", 0, None)?, get("k", 1, None)?);
            if !geom.is_periodic() {
                return Err(Error::WrongGeometry { expected: "periodic (mode data)", got: geom.to_string() });
            }
            let xi = geom.frequency(k.round() as i64);
            RealField::from_fn(geom, |x| a * (xi * x).cos())
        }
        "gaussian" => {
            let (a, w) = (get("a", 0, None)?, get("w", 1, Some(1.0))?);
            let x0 = get("x0", 2, Some(center))?;
            RealField::from_fn(geom, |x| a * (-((x - x0) / w).powi(2)).exp())
        }
        "random" => random_datum(geom, get("amp", 0, Some(0.1))?, get("modes", 1, Some(8.0))? as usize, seed)?,
        _ => datum_from_file(Path::new(desc), geom)?,
    };
    if q.coeffs().iter().any(|c| !c.is_finite()) {
        return Err(Error::Config(format!("initial datum {desc:?} is not finite")));
    }
    Ok(q)
}

/// Mean-zero trigonometric polynomial with coefficients `amp·u/k`, `u` uniform in the unit
/// square (periodic), or a sum of Gaussian bumps (line).
pub fn random_datum(geom: Geometry, amp: f64, modes: usize, seed: u64) -> Result<RealField> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if geom.is_periodic() {
        if modes == 0 || modes > geom.dealias_band() {
            return Err(Error::Config(format!("random datum needs 1 ≤ modes ≤ {}", geom.dealias_band())));
        }
        let mut f = Field::zeros(geom);
        for k in 1..=modes as i64 {
            let a = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * amp / k as f64;
            f = &f + &Field::mode(geom, k, a);
            f = &f + &Field::mode(geom, -k, a.conj());
        }
        Ok(RealField::from_field(&f))
    } else {
        let bumps: Vec<(f64, f64)> = (0..modes.max(1)).map(|_| (amp * rng.gen_range(-1.0..1.0), rng.gen_range(-2.0..2.0))).collect();
        Ok(RealField::from_fn(geom, |x| bumps.iter().map(|(a, c)| a * (-(x - c) * (x - c)).exp()).sum()))
    }
}

fn datum_from_file(path: &Path, geom: Geometry) -> Result<RealField> {
    if !path.exists() {
        return Err(Error::Config(format!("unknown initial datum {:?} (not a descriptor or a file)", path.display())));
    }
    let v: serde_json::Value = serde_json::from_str(fs::read_to_string(path)?.lines().last().unwrap_or(""))?;
    let n = geom.n();
    if let Some(c) = v.get("coeffs") {
        let coeffs: Vec<C64> = serde_json::from_value(c.clone())?;
        if coeffs.len() != n {
            return Err(Error::Config(format!("file has {} coefficients, geometry needs {n}", coeffs.len())));
        }
        return RealField::from_coeffs(geom, coeffs);
    }
    if let Some(vals) = v.get("values") {
        let vals: Vec<f64> = serde_json::from_value(vals.clone())?;
        if vals.len() != n {
            return Err(Error::Config(format!("file has {} values, geometry needs {n}", vals.len())));
        }
        return Ok(RealField::from_values(geom, &vals));
    }
    Err(Error::Config(format!("{} holds neither \"coeffs\" nor \"values\"", path.display())))
}

/// One verification record.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Record {
    pub id: String,
    pub params: String,
    pub lhs: f64,
    pub rhs: f64,
    pub abs_err: f64,
    pub rel_err: f64,
    pub tol: f64,
    pub pass: bool,
}

impl Record {
    pub fn new(c: Check, tol: f64) -> Self {
        Self { pass: c.passes(tol), id: c.id, params: c.params, lhs: c.lhs, rhs: c.rhs, abs_err: c.abs_err, rel_err: c.rel_err, tol }
    }
}

/// Records of one suite, sorted by id; `tables` carries reported-but-not-asserted data.
#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub suite: String,
    pub pass: bool,
    pub records: Vec<Record>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub tables: BTreeMap<String, serde_json::Value>,
    /// Kept out of the JSON so identical configurations give identical files.
    #[serde(skip)]
    pub wall_time: f64,
}

impl Report {
    fn new(suite: Suite, mut records: Vec<Record>, tables: BTreeMap<String, serde_json::Value>, wall_time: f64) -> Self {
        records.sort_by(|a, b| a.id.cmp(&b.id).then_with(|| a.params.cmp(&b.params)));
        Self { suite: suite.name().into(), pass: records.iter().all(|r| r.pass), records, tables, wall_time }
    }
}

/// A check with an optional tolerance of its own (otherwise the configured one applies).
type Item = (Check, Option<f64>);

fn plain(checks: Vec<Check>) -> Vec<Item> {
    checks.into_iter().map(|c| (c, None)).collect()
}

/// Runs a suite; failures of individual checks are recorded, numerical errors propagate.
pub fn verify(cfg: &RunConfig, suite: Suite) -> Result<Report> {
    let start = Instant::now();
    let q0 = cfg.initial()?;
    let mut tables = BTreeMap::new();
    let items = match suite {
        Suite::Identities => identities_suite(cfg, &q0)?,
        Suite::Conservation => conservation_suite(cfg, &q0, &mut tables)?,
        Suite::Commuting => commuting_suite(cfg, &q0, &mut tables)?,
        Suite::Virial => virial_suite(cfg, &q0)?,
        Suite::Gerard => gerard_suite(cfg, &q0)?,
        Suite::BockKruskal => bock_kruskal_suite(cfg, &q0)?,
        Suite::Alpha => alpha_suite(cfg, &q0, &mut tables)?,
    };
    let tol = cfg.tol_for(suite);
    let records = items.into_iter().map(|(c, t)| Record::new(c, t.unwrap_or(tol))).collect();
    Ok(Report::new(suite, records, tables, start.elapsed().as_secs_f64()))
}

fn identities_suite(cfg: &RunConfig, q0: &RealField) -> Result<Vec<Item>> {
    let l = cfg.lax(q0)?;
    let geom = l.geometry();
    let mut checks = Vec::new();
    for &kappa in &cfg.kappa {
        checks.extend(conserved::identity_suite(&l, kappa, cfg.varkappa)?);
    }
    let transform = if geom.models_line() { Transform::Scale(2.0) } else { Transform::Galilei(0.3) };
    let admissible: Vec<f64> = cfg.kappa.iter().copied().filter(|&k| k > 0.3 && l.ensure_admissible(k - 0.3).is_ok()).collect();
    let label = if geom.models_line() { "covariance.scale" } else { "covariance.galilei" };
    for row in conserved::symmetry_covariance(q0, transform, &admissible)? {
        checks.push(Check::new(label, format!("kappa={}", row.kappa), row.lhs, row.rhs));
    }
    Ok(plain(checks))
}

fn conservation_suite(cfg: &RunConfig, q0: &RealField, tables: &mut BTreeMap<String, serde_json::Value>) -> Result<Vec<Item>> {
    let spec = cfg.flow_spec()?;
    let traj = flows::evolve(q0, &spec)?;
    if let Some(e) = &traj.abort {
        return Err(Error::Numerical(e.clone()));
    }
    let params = format!("flow={},T={},dt={}", spec.flow.name(), spec.t_final, spec.dt);
    tables.insert("final_monitor".into(), serde_json::to_value(&traj.last().monitor)?);
    Ok(plain(
        traj.drifts().into_iter().map(|(k, d)| Check::residual(format!("drift.{k}"), params.clone(), d, 1.0)).collect(),
    ))
}

fn commuting_suite(cfg: &RunConfig, q0: &RealField, tables: &mut BTreeMap<String, serde_json::Value>) -> Result<Vec<Item>> {
    let dts = [4.0 * cfg.dt, 2.0 * cfg.dt, cfg.dt];
    let study = flows::commuting_flows_study(q0, &cfg.kappa, cfg.t_final, &dts)?;
    let scale = q0.sobolev_norm(NormSpec { sigma: -2.0, kappa: 1.0 });
    let mut items = Vec::new();
    for r in study.rows.iter().filter(|r| r.dt == cfg.dt) {
        items.push((Check::residual("commuting.error", format!("kappa={},t={},dt={}", r.kappa, r.t, r.dt), r.h_minus2, scale), None));
    }
    if cfg.kappa.len() > 1 {
        let m = if study.monotone_in_kappa { 1.0 } else { 0.0 };
        items.push((Check::new("commuting.monotone_in_kappa", format!("kappas={:?}", cfg.kappa), m, 1.0), Some(0.0)));
    }
    for (k, order) in &study.orders {
        // fourth order within ±½ over two halvings of dt
        items.push((Check::new("commuting.dt_order", format!("kappa={k}"), *order, 4.0), Some(0.125)));
    }
    tables.insert("errors".into(), serde_json::to_value(&study.rows)?);
    Ok(items)
}

fn virial_suite(cfg: &RunConfig, q0: &RealField) -> Result<Vec<Item>> {
    let l = cfg.lax(q0)?;
    let kappa = cfg.kappa[0];
    let mut items = plain(explicit_virial::virial_checks(&l, kappa, cfg.varkappa)?);
    items.push((explicit_virial::cofp_speed_check(q0, kappa, 0.05, cfg.dt.max(1e-3))?, Some(1e-4)));
    let law = explicit_virial::vofp_time_law(q0, kappa, cfg.t_final.max(0.1), cfg.dt.max(1e-3), 10)?;
    for c in law.checks() {
        let tol = if c.id == "vofp.fit_residual" { 1e-8 } else { 1e-4 };
        items.push((c, Some(tol)));
    }
    Ok(items)
}

/// The datum on the line: box data are transferred to the rational grid of the same size.
fn on_line(cfg: &RunConfig, q0: &RealField) -> Result<RealField> {
    match q0.geometry() {
        Geometry::Line { .. } => Ok(q0.clone()),
        Geometry::Box { .. } => explicit_virial::transfer_to_line(q0, cfg.line_scale, cfg.n),
        g => Err(Error::WrongGeometry { expected: "box or line", got: g.to_string() }),
    }
}

fn soliton_speed(init: &str) -> Option<f64> {
    let (kind, rest) = init.trim().split_once(char::is_whitespace).unwrap_or((init.trim(), ""));
    if kind != "soliton" {
        return None;
    }
    let (named, pos) = descriptor_params(rest);
    Some(named.get("c").copied().or(pos.first().copied()).unwrap_or(1.0))
}

fn gerard_suite(cfg: &RunConfig, q0: &RealField) -> Result<Vec<Item>> {
    let q = on_line(cfg, q0)?;
    let points: Vec<C64> = cfg.points.iter().map(|p| C64::new(p[0], p[1])).collect();
    let times: Vec<f64> = cfg.times.iter().copied().filter(|t| *t > 0.0).collect();
    let mut items = Vec::new();
    let l = cfg.lax(&q)?;
    if let (Some(c), Flow::Bo) = (soliton_speed(&cfg.init), cfg.flow()?) {
        // one soliton under Benjamin–Ono: q₊(t, z) = q₊⁰(z − ct)
        let sys = GerardSystem::new(&l, &PhiSpec::bo())?;
        let qp = l.q_plus();
        for &t in &times {
            for &z in &points {
                let lhs = sys.evaluate(t, z)?;
                let rhs = qp.eval(z - c * t);
                items.push((Check::residual("gerard.translation", format!("c={c},t={t},z={}{:+}i", z.re, z.im), (lhs - rhs).norm(), rhs.norm()), None));
            }
        }
    }
    let phi = cfg.phi_spec()?;
    let dt = cfg.dt;
    let flow_checks: Vec<Vec<Check>> =
        times.par_iter().map(|&t| explicit_virial::gerard_vs_flow(&q, &phi, t, &points, dt)).collect::<Result<_>>()?;
    items.extend(flow_checks.into_iter().flatten().map(|c| (c, Some(1e-2))));
    Ok(items)
}

fn bock_kruskal_suite(cfg: &RunConfig, q0: &RealField) -> Result<Vec<Item>> {
    let l = cfg.lax(q0)?;
    let geom = l.geometry();
    let mut checks = Vec::new();
    for &kappa in &cfg.kappa {
        let params = format!("kappa={kappa}");
        let bk = conserved::bock_kruskal(&l, kappa)?;
        checks.push(Check::residual("bk.residual", params.clone(), bk.residual, 1.0));
        if geom.is_periodic() {
            checks.push(Check::new("bk.integral", params.clone(), bk.integral.0, bk.integral.1));
        }
        let mu = conserved::wiener_hopf(&bk.w, kappa, l.modes())?;
        let m = l.gauge(kappa)?.m;
        let mu = if geom.is_periodic() { align_phase(&mu, &m)? } else { mu };
        let err = mu.axpy(C64::new(-1.0, 0.0), &m).norm();
        checks.push(Check::residual("bk.wiener_hopf", params, err, m.norm().max(1e-300)));
    }
    Ok(plain(checks))
}

/// On periodic geometries the factor `1 + μ` is determined up to a constant phase.
fn align_phase(mu: &HardyField, m: &HardyField) -> Result<HardyField> {
    let one = C64::new(1.0, 0.0);
    let (a, b) = (one + mu.coeffs()[0], one + m.coeffs()[0]);
    let phase = (b / a) / (b / a).norm();
    let mut rot: Vec<C64> = mu.coeffs().iter().map(|z| z * phase).collect();
    rot[0] = a * phase - one;
    HardyField::new(mu.geometry(), rot)
}

fn alpha_suite(cfg: &RunConfig, q0: &RealField, tables: &mut BTreeMap<String, serde_json::Value>) -> Result<Vec<Item>> {
    let kappa = cfg.kappa[0];
    let l = cfg.lax(q0)?;
    tables.insert("datum".into(), serde_json::to_value(conserved::perturbation_determinant_alpha(&l, kappa)?)?);
    // single-mode sweep: the two evaluations agree to fourth order in the amplitude
    let geom = if cfg.geometry().is_periodic() { cfg.geometry() } else { Geometry::circle(64) };
    let amps = [0.05, 0.1, 0.2];
    let xi = geom.frequency(1);
    let sweep: Vec<conserved::AlphaReport> = amps
        .par_iter()
        .map(|&a| {
            let q = RealField::from_fn(geom, |x| a * (xi * x).cos());
            conserved::perturbation_determinant_alpha(&LaxOperator::from_potential(&q)?, kappa)
        })
        .collect::<Result<_>>()?;
    let table: Vec<serde_json::Value> = amps
        .iter()
        .zip(&sweep)
        .map(|(a, r)| serde_json::json!({"amplitude": a, "series": r.series, "beta_sum": r.beta_sum, "difference": r.difference}))
        .collect();
    tables.insert("amplitude_sweep".into(), serde_json::Value::Array(table));
    Ok(sweep
        .windows(2)
        .zip(amps.windows(2))
        .map(|(r, a)| {
            let ratio = r[1].difference.abs() / r[0].difference.abs();
            (Check::new("alpha.doubling_ratio", format!("kappa={kappa},a={}→{}", a[0], a[1]), ratio, 16.0), None)
        })
        .collect())
}

/// `trajectory.jsonl` and `monitors.csv` under `out`.
pub fn evolve_cmd(cfg: &RunConfig) -> Result<flows::Trajectory> {
    let q0 = cfg.initial()?;
    let traj = flows::evolve(&q0, &cfg.flow_spec()?)?;
    fs::create_dir_all(&cfg.out)?;
    let mut jl = std::io::BufWriter::new(fs::File::create(cfg.out.join("trajectory.jsonl"))?);
    for s in &traj.samples {
        let mut v = serde_json::to_value(&s.monitor)?;
        v["coeffs"] = serde_json::to_value(s.q.coeffs())?;
        writeln!(jl, "{}", serde_json::to_string(&v)?)?;
    }
    jl.flush()?;
    let mut w = csv::Writer::from_path(cfg.out.join("monitors.csv"))?;
    let keys: Vec<String> = traj.samples[0].monitor.beta.keys().cloned().collect();
    let mut header = vec!["t".to_string(), "P".into(), "H_BO".into(), "H2".into(), "mean".into(), "tail".into()];
    header.extend(keys.iter().map(|k| format!("beta({k})")));
    w.write_record(&header)?;
    for s in &traj.samples {
        let m = &s.monitor;
        let mut row = vec![m.t, m.p, m.h_bo, m.h2, m.mean, m.tail];
        row.extend(keys.iter().map(|k| m.beta.get(k).copied().unwrap_or(f64::NAN)));
        w.write_record(row.iter().map(|v| format!("{v:e}")))?;
    }
    w.flush()?;
    Ok(traj)
}

/// One row of the β table.
#[derive(Clone, Debug, Serialize)]
pub struct BetaRow {
    pub kappa: f64,
    pub beta: f64,
    pub dbeta: f64,
    pub d2beta: f64,
    #[serde(rename = "H_kappa")]
    pub h_kappa: f64,
}

/// Summary written next to the β table.
#[derive(Clone, Debug, Serialize)]
pub struct BetaSummary {
    pub skipped: Vec<f64>,
    pub monotone_decreasing: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit: Option<conserved::ExpansionFit>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit_error: Option<String>,
}

/// Rows over the admissible κ (inadmissible points are skipped with a warning).
pub fn beta_table(cfg: &RunConfig, q0: &RealField) -> Result<(Vec<BetaRow>, BetaSummary)> {
    let l = cfg.lax(q0)?;
    let mut kappas = cfg.kappa.clone();
    kappas.sort_by(f64::total_cmp);
    kappas.dedup();
    let (ok, skipped): (Vec<f64>, Vec<f64>) = kappas.iter().partition(|&&k| l.ensure_admissible(k).is_ok());
    for k in &skipped {
        log::warn!("skipping inadmissible kappa = {k}");
    }
    let rows: Vec<BetaRow> = ok
        .par_iter()
        .map(|&kappa| {
            let d = conserved::beta_derivatives(&l, kappa, 2)?;
            Ok(BetaRow { kappa, beta: d[0], dbeta: d[1], d2beta: d[2], h_kappa: conserved::h_kappa(&l, kappa)? })
        })
        .collect::<Result<_>>()?;
    let monotone_decreasing = rows.windows(2).all(|w| w[1].beta <= w[0].beta);
    if !monotone_decreasing {
        log::warn!("beta is not monotone decreasing over the grid");
    }
    let (fit, fit_error) = match conserved::beta_expansion_fit(
        &ok,
        &rows.iter().map(|r| r.beta).collect::<Vec<_>>(),
        l.average(),
        l.geometry().period(),
    ) {
        Ok(f) => (Some(f), None),
        Err(e) => (None, Some(e.to_string())),
    };
    Ok((rows, BetaSummary { skipped, monotone_decreasing, fit, fit_error }))
}

pub fn beta_cmd(cfg: &RunConfig) -> Result<(Vec<BetaRow>, BetaSummary)> {
    let q0 = cfg.initial()?;
    let (rows, summary) = beta_table(cfg, &q0)?;
    fs::create_dir_all(&cfg.out)?;
    let mut w = csv::Writer::from_path(cfg.out.join("beta.csv"))?;
    for r in &rows {
        w.serialize(r)?;
    }
    w.flush()?;
    fs::write(cfg.out.join("beta_fit.json"), serde_json::to_string_pretty(&summary)?)?;
    Ok((rows, summary))
}

/// One row of the explicit-formula table.
#[derive(Clone, Debug, Serialize)]
pub struct ExplicitRow {
    pub t: f64,
    #[serde(rename = "Re z")]
    pub re_z: f64,
    #[serde(rename = "Im z")]
    pub im_z: f64,
    #[serde(rename = "Re q+")]
    pub re_q: f64,
    #[serde(rename = "Im q+")]
    pub im_q: f64,
    #[serde(rename = "ref Re")]
    pub ref_re: f64,
    #[serde(rename = "ref Im")]
    pub ref_im: f64,
    #[serde(rename = "abs err")]
    pub abs_err: f64,
}

/// `q₊(t, z)` from the explicit formula, with `C₊q(t)` from time stepping as the reference.
pub fn explicit_table(cfg: &RunConfig, q0: &RealField) -> Result<Vec<ExplicitRow>> {
    let q = on_line(cfg, q0)?;
    let phi = cfg.phi_spec()?;
    let flow = Flow::Phi { phi: phi.clone() };
    let l = cfg.lax(&q)?;
    let sys = GerardSystem::new(&l, &phi)?;
    let mut times = cfg.times.clone();
    times.sort_by(f64::total_cmp);
    let mut rows = Vec::new();
    let (mut state, mut now) = (q.dealias(), 0.0);
    for &t in &times {
        if t < 0.0 {
            return Err(Error::Config(format!("explicit times must be nonnegative, got {t}")));
        }
        state = flows::flow_map(&state, &flow, t - now, cfg.dt)?;
        now = t;
        let plus = state.plus(l.modes());
        for p in &cfg.points {
            let z = C64::new(p[0], p[1]);
            let v = sys.evaluate(t, z)?;
            let r = plus.eval(z);
            rows.push(ExplicitRow { t, re_z: z.re, im_z: z.im, re_q: v.re, im_q: v.im, ref_re: r.re, ref_im: r.im, abs_err: (v - r).norm() });
        }
    }
    Ok(rows)
}

pub fn explicit_cmd(cfg: &RunConfig) -> Result<Vec<ExplicitRow>> {
    let rows = explicit_table(cfg, &cfg.initial()?)?;
    fs::create_dir_all(&cfg.out)?;
    let mut w = csv::Writer::from_path(cfg.out.join("explicit.csv"))?;
    for r in &rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(rows)
}

fn dump_operator(cfg: &RunConfig, path: &Path) -> Result<()> {
    let l = cfg.lax(&cfg.initial()?)?;
    fs::write(path, serde_json::to_string(&l.matrix().to_json())?)?;
    Ok(())
}

/// Exit code for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Numerical(_) | Error::Singular { .. } | Error::IllConditioned(_) => EXIT_NUMERICAL,
        _ => EXIT_CONFIG,
    }
}

fn configure_threads() {
    if let Ok(v) = std::env::var("BOLAB_THREADS") {
        match v.parse::<usize>() {
            Ok(n) if n > 0 => {
                if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                    log::debug!("thread pool already configured: {e}");
                }
            }
            _ => log::warn!("ignoring BOLAB_THREADS = {v:?}"),
        }
    }
}

/// Parses arguments and runs the command; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    run(&cli)
}

pub fn run(cli: &Cli) -> i32 {
    configure_threads();
    let cfg = match RunConfig::load(&cli.overrides) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    match execute(&cli.command, &cfg) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn preflight(cfg: &RunConfig) -> Result<()> {
    let q0 = cfg.initial()?;
    let kappas = cfg.flow()?.kappas();
    if !kappas.is_empty() {
        let l = cfg.lax(&q0)?;
        let kmin = l.admissibility().kappa_min;
        for k in kappas {
            if !(k >= 2.0 * kmin) {
                return Err(Error::Inadmissible { kappa: k, kappa_min: 2.0 * kmin });
            }
        }
    }
    Ok(())
}

fn execute(cmd: &Command, cfg: &RunConfig) -> Result<i32> {
    if let Some(p) = &cfg.dump_operator {
        dump_operator(cfg, p)?;
    }
    match cmd {
        Command::Evolve => {
            preflight(cfg)?;
            let traj = evolve_cmd(cfg)?;
            let last = &traj.last().monitor;
            println!("wrote {} samples to {} (t = {})", traj.samples.len(), cfg.out.display(), last.t);
            for (k, d) in traj.drifts() {
                println!("  drift {k}: {d:.3e}");
            }
            if let Some(e) = traj.abort {
                eprintln!("numerical abort: {e}");
                return Ok(EXIT_NUMERICAL);
            }
            Ok(EXIT_OK)
        }
        Command::Verify { suite } => {
            if matches!(suite, Suite::Conservation) {
                preflight(cfg)?;
            }
            let report = verify(cfg, *suite)?;
            fs::create_dir_all(&cfg.out)?;
            let path = cfg.out.join(format!("{}.json", suite.name()));
            fs::write(&path, serde_json::to_string_pretty(&report)?)?;
            for r in &report.records {
                println!("{} {:<32} {:<40} rel_err={:.3e} tol={:.1e}", if r.pass { "PASS" } else { "FAIL" }, r.id, r.params, r.rel_err, r.tol);
            }
            println!("{} suite: {} ({:.2}s) -> {}", suite.name(), if report.pass { "pass" } else { "FAIL" }, report.wall_time, path.display());
            Ok(if report.pass { EXIT_OK } else { EXIT_VERIFY })
        }
        Command::Beta => {
            let (rows, summary) = beta_cmd(cfg)?;
            println!("wrote {} rows to {}", rows.len(), cfg.out.join("beta.csv").display());
            if let Some(f) = summary.fit {
                println!("  fit: P = {:.6}, H_BO = {:.6}, H2 = {:.6}", f.p, f.h_bo, f.h2);
            }
            Ok(EXIT_OK)
        }
        Command::Explicit => {
            let rows = explicit_cmd(cfg)?;
            let worst = rows.iter().map(|r| r.abs_err).fold(0.0, f64::max);
            println!("wrote {} rows to {} (max abs err {worst:.3e})", rows.len(), cfg.out.join("explicit.csv").display());
            Ok(EXIT_OK)
        }
    }
}

#[cfg(test)]
mod tests;
