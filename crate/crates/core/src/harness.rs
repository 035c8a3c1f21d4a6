//! Experiment configuration and the subcommands of the `scatter` binary.

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::asymptotics::{
    decay_bound_check, log_eta, loglog_slope, nu_functional, t2_norm_estimate_with, EstimatePoint, EstimateReport,
    EtaFinder, JIntegralReport, NuMode, T2Options, Verdict,
};
use crate::checks::{run_check, CheckOutcome, CheckScale, CHECK_COUNT};
use crate::error::{Result, ScatterError};
use crate::grid::{fibonacci_sphere, make_grid, BallDomain, DirectionSet};
use crate::identities::{amplitude_difference_check, orthogonality_relation_check, reciprocity_check, IdentityReport};
use crate::inversion::{data_to_fourier_samples, node_placed_sweep, reconstruct, solver_dataset, FillMode};
use crate::io::{
    config_hash, export_potential, write_amplitude_table, write_estimate_report, write_identity_reports, write_json,
    write_spectral_slice, CsvSink,
};
use crate::potential::{bump_potential, piecewise_smooth_potential, shifted_bump_potential, Potential};
use crate::radon::{antipodal_identity_check, moment_identity_check, radon_transform, slice_identity_check};
use crate::solver::{
    fixed_direction_dataset, ls_residual_u, scattering_amplitude, solve_eps, AmplitudeEntry, AmplitudeTable,
};
use crate::spectral::forward_ft_real;
use crate::vec3::{self, Vec3};

pub const SUBCOMMANDS: [&str; 12] = [
    "forward",
    "amplitude",
    "dataset",
    "radon",
    "verify-identities",
    "estimates",
    "eta-curve",
    "nu-sweep",
    "t2-norm",
    "j-integral",
    "invert",
    "all-checks",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Zero,
    Bump,
    Polynomial,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PotentialConfig {
    pub family: Family,
    pub amplitude: f64,
    pub support_r: f64,
    pub order: u32,
    pub center: Vec3,
}

impl Default for PotentialConfig {
    fn default() -> Self {
        Self {
            family: Family::Bump,
            amplitude: 0.1,
            support_r: 0.8,
            order: 4,
            center: [0.0; 3],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub a: f64,
    pub n: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { a: 1.0, n: 25 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EtaRule {
    /// `eta = ln(kappa) / a`.
    Log,
    /// The listed `etas`.
    Fixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub k: Vec<f64>,
    pub alpha: Vec3,
    pub kappas: Vec<f64>,
    pub etas: Vec<f64>,
    pub eta_rule: EtaRule,
    pub ell: u32,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            k: vec![5.0],
            alpha: [0.0, 0.0, 1.0],
            kappas: vec![8.0, 16.0, 32.0, 64.0],
            etas: vec![0.0, 1.0, 2.0],
            eta_rule: EtaRule::Log,
            ell: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub solve_tol: f64,
    pub max_iter: usize,
    pub eta_tol: f64,
    pub probes: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            solve_tol: 1e-10,
            max_iter: 200,
            eta_tol: 1e-6,
            probes: 8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FillConfig {
    Zero,
    Radial,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InversionConfig {
    pub alpha0: Vec3,
    pub xi_max: f64,
    pub k_max: f64,
    pub fill: FillConfig,
}

impl Default for InversionConfig {
    fn default() -> Self {
        Self {
            alpha0: vec3::normalize(&[0.2113, 0.1547, 1.0]),
            xi_max: 12.0,
            k_max: 60.0,
            fill: FillConfig::Zero,
        }
    }
}

/// Everything a subcommand needs; loaded from TOML, then overridden by flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub output_dir: PathBuf,
    pub directions: usize,
    pub grid: GridConfig,
    pub potential: PotentialConfig,
    pub sweep: SweepConfig,
    pub tolerances: Tolerances,
    pub inversion: InversionConfig,
    /// Check ids for `all-checks`; empty means all.
    pub checks: Vec<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 20_240_901,
            output_dir: PathBuf::from("out"),
            directions: 64,
            grid: GridConfig::default(),
            potential: PotentialConfig::default(),
            sweep: SweepConfig::default(),
            tolerances: Tolerances::default(),
            inversion: InversionConfig::default(),
            checks: Vec::new(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| ScatterError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    /// Check every field against the preconditions of the modules it feeds.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(ScatterError::Config(m));
        if !(self.grid.a > 0.0) {
            return bad(format!("grid.a must be positive, got {}", self.grid.a));
        }
        self.domain()?;
        fibonacci_sphere(self.directions)?;
        if let Some(k) = self.sweep.k.iter().find(|k| !(**k > 0.0)) {
            return bad(format!("sweep.k entries must be positive, got {k}"));
        }
        if self.sweep.k.is_empty() {
            return bad("sweep.k is empty".into());
        }
        if self.sweep.kappas.iter().any(|k| !(*k > 0.0)) {
            return bad("sweep.kappas must be positive".into());
        }
        if self.sweep.etas.iter().any(|e| !(*e >= 0.0)) {
            return bad("sweep.etas must be non-negative".into());
        }
        if self.sweep.ell <= 3 {
            return bad(format!("sweep.ell must exceed 3, got {}", self.sweep.ell));
        }
        for (name, v) in [("sweep.alpha", self.sweep.alpha), ("inversion.alpha0", self.inversion.alpha0)] {
            if !vec3::is_unit(&v, 1e-9) {
                return bad(format!("{name} must be a unit vector"));
            }
        }
        if !(self.tolerances.solve_tol > 0.0) || !(self.tolerances.eta_tol > 0.0) {
            return bad("tolerances must be positive".into());
        }
        if self.tolerances.probes < 8 {
            return bad(format!("tolerances.probes must be >= 8, got {}", self.tolerances.probes));
        }
        if let Some(id) = self.checks.iter().find(|i| **i == 0 || **i > CHECK_COUNT) {
            return bad(format!("no check {id}"));
        }
        self.potential(&self.domain()?)?;
        Ok(())
    }

    pub fn domain(&self) -> Result<BallDomain> {
        make_grid(self.grid.a, self.grid.n)
    }

    pub fn potential(&self, d: &BallDomain) -> Result<Potential> {
        let p = &self.potential;
        match p.family {
            Family::Zero => Ok(Potential::zero(d)),
            Family::Bump if p.center == [0.0; 3] => bump_potential(d, p.amplitude, p.support_r),
            Family::Bump => shifted_bump_potential(d, p.amplitude, p.support_r, p.center),
            Family::Polynomial => piecewise_smooth_potential(d, p.amplitude, p.support_r, p.order),
        }
    }

    pub fn direction_set(&self) -> Result<DirectionSet> {
        fibonacci_sphere(self.directions)
    }

    /// `(kappa, eta)` sweep points under the configured rule.
    pub fn sweep_points(&self) -> Vec<(f64, f64)> {
        match self.sweep.eta_rule {
            EtaRule::Log => self
                .sweep
                .kappas
                .iter()
                .map(|k| (*k, log_eta(*k, self.grid.a)))
                .collect(),
            EtaRule::Fixed => self
                .sweep
                .etas
                .iter()
                .flat_map(|e| self.sweep.kappas.iter().map(move |k| (*k, *e)))
                .collect(),
        }
    }

    /// Hash of everything that affects results; the output location does not.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output_dir = PathBuf::new();
        config_hash(&c)
    }
}

/// How a subcommand ended when it did not error.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    ChecksFailed,
}

/// Exit code for an error: 1 for usage and configuration, 2 for numerical
/// or I/O failure.
pub fn exit_code(e: &ScatterError) -> i32 {
    match e {
        ScatterError::InvalidGrid(_)
        | ScatterError::InvalidDirections(_)
        | ScatterError::InvalidPotential(_)
        | ScatterError::InvalidArgument(_)
        | ScatterError::Config(_) => 1,
        _ => 2,
    }
}

struct Ctx<'a> {
    cfg: &'a ExperimentConfig,
    hash: String,
    out: &'a Path,
}

impl Ctx<'_> {
    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }
}

/// Run subcommand `name`; artifacts go to `cfg.output_dir`.
pub fn run_subcommand(name: &str, cfg: &ExperimentConfig) -> Result<Status> {
    cfg.validate()?;
    std::fs::create_dir_all(&cfg.output_dir)?;
    let ctx = Ctx {
        cfg,
        hash: cfg.hash(),
        out: &cfg.output_dir,
    };
    write_json(&ctx.path("config.json"), &ConfigRecord { config_hash: &ctx.hash, config: cfg })?;
    log::info!("{name}: config hash {}", ctx.hash);
    match name {
        "forward" => forward(&ctx),
        "amplitude" => amplitude(&ctx),
        "dataset" => dataset(&ctx),
        "radon" => radon(&ctx),
        "verify-identities" => verify_identities(&ctx),
        "estimates" => estimates(&ctx),
        "eta-curve" => eta_curve(&ctx),
        "nu-sweep" => nu_sweep(&ctx).map(|_| Status::Pass),
        "t2-norm" => t2_norm(&ctx).map(|_| Status::Pass),
        "j-integral" => j_sweep(&ctx).map(|_| Status::Pass),
        "invert" => invert(&ctx),
        "all-checks" => all_checks(&ctx),
        other => Err(ScatterError::Config(format!("unknown subcommand {other}"))),
    }
}

#[derive(Serialize)]
struct ConfigRecord<'a> {
    config_hash: &'a str,
    config: &'a ExperimentConfig,
}

fn num(x: f64) -> String {
    format!("{x:.17e}")
}

fn forward(ctx: &Ctx) -> Result<Status> {
    let cfg = ctx.cfg;
    let d = cfg.domain()?;
    let q = cfg.potential(&d)?;
    export_potential(&ctx.path("potential"), &q)?;
    write_spectral_slice(&ctx.path("potential_spectrum_z0.csv"), &forward_ft_real(&q.values, &d, 2)?, 2, 0, &ctx.hash)?;
    let mut sink = CsvSink::create(
        &ctx.path("forward.csv"),
        &ctx.hash,
        &["k", "iterations", "series_residual", "converged", "sup_eps", "ls_residual"],
    )?;
    let probe = vec3::normalize(&[1.0, 1.0, 0.0]);
    for &k in &cfg.sweep.k {
        let sol = solve_eps(
            &q,
            cfg.sweep.alpha,
            Complex64::new(k, 0.0),
            cfg.tolerances.solve_tol,
            cfg.tolerances.max_iter,
        )?;
        let sup = sol.eps.ball_sup_norm(&d);
        let ls = ls_residual_u(&q, &sol, probe)?;
        sink.row([
            num(k),
            sol.iterations.to_string(),
            num(sol.residual),
            sol.converged().to_string(),
            num(sup),
            num(ls),
        ])?;
        if !sol.converged() {
            sink.finish()?;
            return Err(ScatterError::NotConverged {
                tol: cfg.tolerances.solve_tol,
                max_iter: cfg.tolerances.max_iter,
            });
        }
    }
    sink.finish()?;
    Ok(Status::Pass)
}

fn amplitude(ctx: &Ctx) -> Result<Status> {
    let cfg = ctx.cfg;
    let d = cfg.domain()?;
    let q = cfg.potential(&d)?;
    let dirs = cfg.direction_set()?;
    let mut table = AmplitudeTable::default();
    for &k in &cfg.sweep.k {
        let kc = Complex64::new(k, 0.0);
        let sol = solve_eps(&q, cfg.sweep.alpha, kc, cfg.tolerances.solve_tol, cfg.tolerances.max_iter)?;
        for beta in dirs.directions() {
            table.entries.push(AmplitudeEntry {
                beta: *beta,
                alpha: cfg.sweep.alpha,
                k: kc,
                amplitude: scattering_amplitude(&q, &sol, beta)?,
            });
        }
    }
    write_amplitude_table(&ctx.path("amplitude.csv"), &table, &ctx.hash)?;
    Ok(Status::Pass)
}

fn dataset(ctx: &Ctx) -> Result<Status> {
    let cfg = ctx.cfg;
    let d = cfg.domain()?;
    let q = cfg.potential(&d)?;
    let table = fixed_direction_dataset(
        &q,
        cfg.sweep.alpha,
        &cfg.direction_set()?,
        &cfg.sweep.k,
        cfg.tolerances.solve_tol,
        cfg.tolerances.max_iter,
    )?;
    write_amplitude_table(&ctx.path("dataset.csv"), &table, &ctx.hash)?;
    Ok(Status::Pass)
}

fn radon(ctx: &Ctx) -> Result<Status> {
    let cfg = ctx.cfg;
    let d = cfg.domain()?;
    let q = cfg.potential(&d)?;
    let dirs = cfg.direction_set()?;
    let mut sink = CsvSink::create(
        &ctx.path("radon.csv"),
        &ctx.hash,
        &["beta_x", "beta_y", "beta_z", "lambda", "value"],
    )?;
    for beta in dirs.directions() {
        let p = radon_transform(&q, beta, 2 * d.n());
        for (l, v) in p.lambdas.iter().zip(&p.values) {
            sink.row([beta[0], beta[1], beta[2], *l, *v].map(num))?;
        }
    }
    sink.finish()?;
    let mut ids = CsvSink::create(
        &ctx.path("radon_identities.csv"),
        &ctx.hash,
        &["beta_x", "beta_y", "beta_z", "k", "moment_gap", "slice_gap"],
    )?;
    for beta in dirs.directions() {
        for &k in &cfg.sweep.k {
            ids.row([
                beta[0],
                beta[1],
                beta[2],
                k,
                moment_identity_check(&q, beta),
                slice_identity_check(&q, beta, k),
            ]
            .map(num))?;
        }
    }
    ids.finish()?;
    let gap = antipodal_identity_check(&q, &dirs);
    write_json(
        &ctx.path("radon_summary.json"),
        &serde_json::json!({ "config_hash": ctx.hash, "antipodal_gap": gap }),
    )?;
    Ok(Status::Pass)
}

fn verify_identities(ctx: &Ctx) -> Result<Status> {
    let cfg = ctx.cfg;
    let d = cfg.domain()?;
    let q1 = cfg.potential(&d)?;
    let q2 = shifted_bump_potential(&d, 0.8 * cfg.potential.amplitude, 0.5, [0.1, 0.2, -0.1])?;
    let alpha = cfg.sweep.alpha;
    let mut reports: Vec<IdentityReport> = Vec::new();
    for beta in cfg.direction_set()?.directions().iter().take(4) {
        for &k in &cfg.sweep.k {
            reports.push(amplitude_difference_check(&q1, &q2, beta, &alpha, k)?);
            reports.push(reciprocity_check(&q1, beta, &alpha, k)?);
            if vec3::norm(&vec3::sub(beta, &alpha)) > 1e-12 {
                reports.push(orthogonality_relation_check(&q1, &q2, &alpha, beta, k)?);
            }
        }
    }
    write_identity_reports(&ctx.path("identities.csv"), &reports, &ctx.hash)?;
    Ok(Status::Pass)
}

fn estimates(ctx: &Ctx) -> Result<Status> {
    let cfg = ctx.cfg;
    let d = cfg.domain()?;
    let q = cfg.potential(&d)?;
    let dirs = cfg.direction_set()?;
    let etas: Vec<f64> = match cfg.sweep.eta_rule {
        EtaRule::Fixed => cfg.sweep.etas.clone(),
        EtaRule::Log => {
            let mut e = vec![0.0];
            e.extend(cfg.sweep.kappas.iter().map(|k| log_eta(*k, cfg.grid.a)));
            e
        }
    };
    let decay = decay_bound_check(&q, &dirs, &cfg.sweep.kappas, &etas)?;
    write_estimate_report(&ctx.path("decay.csv"), &decay, &ctx.hash)?;
    let reports = [decay, nu_sweep(ctx)?, j_sweep(ctx)?, t2_norm(ctx)?];
    Ok(if reports.iter().all(EstimateReport::passed) {
        Status::Pass
    } else {
        Status::ChecksFailed
    })
}

fn eta_curve(ctx: &Ctx) -> Result<Status> {
    let cfg = ctx.cfg;
    let d = cfg.domain()?;
    let finder = EtaFinder::new(&cfg.potential(&d)?, &cfg.direction_set()?)?;
    let mut points = Vec::new();
    for &kappa in &cfg.sweep.kappas {
        let eta = finder.find(kappa, cfg.tolerances.eta_tol)?;
        points.push(EstimatePoint {
            kappa,
            eta,
            measured: finder.envelope(kappa, eta)?,
            bound: finder.target(),
        });
    }
    let ratios: Vec<String> = points
        .iter()
        .map(|p| format!("{:.4}", p.eta * cfg.grid.a / p.kappa.ln()))
        .collect();
    let report = EstimateReport {
        quantity: "matching height".into(),
        fitted_exponent: None,
        fitted_constant: Some(finder.target()),
        verdicts: vec![Verdict {
            name: "a eta / ln kappa".into(),
            pass: true,
            detail: ratios.join(", "),
        }],
        points,
    };
    write_estimate_report(&ctx.path("eta_curve.csv"), &report, &ctx.hash)?;
    Ok(Status::Pass)
}

fn monotone_verdict(name: &str, values: &[f64]) -> Verdict {
    let pass = values.windows(2).all(|w| w[1] < w[0]);
    Verdict {
        name: name.into(),
        pass,
        detail: values.iter().map(|v| format!("{v:.4e}")).collect::<Vec<_>>().join(", "),
    }
}

fn nu_sweep(ctx: &Ctx) -> Result<EstimateReport> {
    let cfg = ctx.cfg;
    let d = cfg.domain()?;
    let q = cfg.potential(&d)?;
    let dirs = cfg.direction_set()?;
    let mut points = Vec::new();
    for (kappa, eta) in cfg.sweep_points() {
        let r = nu_functional(NuMode::Proxy, &q, kappa, eta, &dirs)?;
        points.push(EstimatePoint {
            kappa,
            eta,
            measured: r.nu,
            bound: r.tail_bound,
        });
    }
    let values: Vec<f64> = points.iter().map(|p| p.measured).collect();
    let report = EstimateReport {
        quantity: "nu proxy (bound column: tail uncertainty)".into(),
        fitted_exponent: loglog_slope(&points.iter().map(|p| p.kappa).collect::<Vec<_>>(), &values),
        fitted_constant: None,
        verdicts: vec![monotone_verdict("decreasing", &values)],
        points,
    };
    write_estimate_report(&ctx.path("nu.csv"), &report, &ctx.hash)?;
    Ok(report)
}

fn j_sweep(ctx: &Ctx) -> Result<EstimateReport> {
    let cfg = ctx.cfg;
    let mut points = Vec::new();
    let mut dominated = true;
    for (kappa, eta) in cfg.sweep_points() {
        if eta <= 0.0 {
            continue;
        }
        let r = JIntegralReport::compute(kappa, eta, cfg.sweep.ell)?;
        dominated &= r.j <= r.j_bound;
        points.push(EstimatePoint {
            kappa,
            eta,
            measured: r.j,
            bound: r.j_bound,
        });
    }
    let scaled: Vec<f64> = points.iter().map(|p| p.kappa * p.measured).collect();
    let report = EstimateReport {
        quantity: "J (bound column: J-script bound)".into(),
        fitted_exponent: loglog_slope(
            &points.iter().map(|p| p.kappa).collect::<Vec<_>>(),
            &points.iter().map(|p| p.measured).collect::<Vec<_>>(),
        ),
        fitted_constant: None,
        verdicts: vec![
            monotone_verdict("kappa J decreasing", &scaled),
            Verdict {
                name: "bound dominates".into(),
                pass: dominated,
                detail: String::new(),
            },
        ],
        points,
    };
    write_estimate_report(&ctx.path("j_integral.csv"), &report, &ctx.hash)?;
    Ok(report)
}

fn t2_norm(ctx: &Ctx) -> Result<EstimateReport> {
    let cfg = ctx.cfg;
    let d = cfg.domain()?;
    let q = cfg.potential(&d)?;
    let opts = T2Options {
        probes: cfg.tolerances.probes,
        seed: cfg.seed,
        ..T2Options::default()
    };
    let mut points = Vec::new();
    for (kappa, eta) in cfg.sweep_points() {
        points.push(EstimatePoint {
            kappa,
            eta,
            measured: t2_norm_estimate_with(&q, kappa, eta, &opts)?,
            bound: f64::NAN,
        });
    }
    let slope = loglog_slope(
        &points.iter().map(|p| p.kappa).collect::<Vec<_>>(),
        &points.iter().map(|p| p.measured).collect::<Vec<_>>(),
    );
    let report = EstimateReport {
        quantity: "T^2 norm lower bound".into(),
        fitted_exponent: slope,
        fitted_constant: None,
        verdicts: vec![Verdict {
            name: "slope <= -0.8".into(),
            pass: q.is_zero() || slope.is_some_and(|s| s <= -0.8),
            detail: format!("{slope:?}"),
        }],
        points,
    };
    write_estimate_report(&ctx.path("t2_norm.csv"), &report, &ctx.hash)?;
    Ok(report)
}

fn invert(ctx: &Ctx) -> Result<Status> {
    let cfg = ctx.cfg;
    let d = cfg.domain()?;
    let q = cfg.potential(&d)?;
    let inv = &cfg.inversion;
    let sweep = node_placed_sweep(&d, 1, &inv.alpha0, inv.xi_max, inv.k_max)?;
    let table = solver_dataset(&q, &inv.alpha0, &sweep, cfg.tolerances.solve_tol, cfg.tolerances.max_iter)?;
    write_amplitude_table(&ctx.path("inversion_data.csv"), &table, &ctx.hash)?;
    let samples = data_to_fourier_samples(&table, &inv.alpha0)?;
    let fill = match inv.fill {
        FillConfig::Zero => FillMode::Zero,
        FillConfig::Radial => FillMode::Radial,
    };
    let r = reconstruct(&samples, &d, 1, fill, Some(&q))?;
    export_potential(&ctx.path("q_rec"), &r.q_rec)?;
    let mut sink = CsvSink::create(
        &ctx.path("inversion.csv"),
        &ctx.hash,
        &["samples", "off_grid", "coverage", "filled", "imag_ratio", "rel_l2_error"],
    )?;
    sink.row([
        r.samples_used.to_string(),
        r.samples_off_grid.to_string(),
        num(r.coverage),
        num(r.filled),
        num(r.imag_ratio),
        num(r.rel_l2_error.unwrap_or(f64::NAN)),
    ])?;
    sink.finish()?;
    Ok(Status::Pass)
}

fn all_checks(ctx: &Ctx) -> Result<Status> {
    let cfg = ctx.cfg;
    let scale = CheckScale {
        n: cfg.grid.n,
        directions: cfg.directions,
        seed: cfg.seed,
    };
    let ids: Vec<usize> = if cfg.checks.is_empty() {
        (1..=CHECK_COUNT).collect()
    } else {
        cfg.checks.clone()
    };
    let mut outcomes: Vec<CheckOutcome> = Vec::new();
    let mut sink = CsvSink::create(&ctx.path("checks.csv"), &ctx.hash, &["id", "name", "pass", "measure", "value"])?;
    let mut first_error = None;
    for id in ids {
        match run_check(id, &scale) {
            Ok(o) => {
                println!("{}", o.line());
                for m in &o.measures {
                    sink.row([o.id.to_string(), o.name.to_string(), o.pass.to_string(), m.name.clone(), num(m.value)])?;
                }
                outcomes.push(o);
            }
            Err(e) => {
                println!("[ERROR] {id:>2}: {e}");
                first_error.get_or_insert(e);
            }
        }
    }
    sink.finish()?;
    write_json(
        &ctx.path("checks.json"),
        &serde_json::json!({ "config_hash": ctx.hash, "checks": outcomes }),
    )?;
    if let Some(e) = first_error {
        return Err(e);
    }
    let passed = outcomes.iter().filter(|o| o.pass).count();
    println!("{passed}/{} checks passed", outcomes.len());
    Ok(if passed == outcomes.len() {
        Status::Pass
    } else {
        Status::ChecksFailed
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_round_trip() {
        let cfg = ExperimentConfig::default();
        cfg.validate().unwrap();
        let text = toml::to_string(&cfg).unwrap();
        assert_eq!(ExperimentConfig::from_toml(&text).unwrap(), cfg);
    }

    #[test]
    fn rejects_bad_config() {
        assert!(ExperimentConfig::from_toml("bogus = 1").is_err());
        let mut cfg = ExperimentConfig::default();
        cfg.sweep.k = vec![-1.0];
        assert!(matches!(cfg.validate(), Err(ScatterError::Config(_))));
        let mut cfg = ExperimentConfig::default();
        cfg.checks = vec![16];
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn log_rule_sweep_points() {
        let cfg = ExperimentConfig::default();
        let pts = cfg.sweep_points();
        assert_eq!(pts.len(), 4);
        assert!((pts[1].1 - 16.0_f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&ScatterError::Config("x".into())), 1);
        assert_eq!(exit_code(&ScatterError::Overflow(800.0)), 2);
    }
}
