//! Command dispatch: load a problem file, run the requested check and
//! assemble a machine-readable run report.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use aeds_core::chart::SampleSpec;
use aeds_core::eds;
use aeds_core::ip;
use aeds_core::odesim;
use aeds_core::report::{CheckFamily, Report};
use aeds_core::solver;

use crate::config::{self, ConfigError, EffectiveAlgebroid, ProblemFile};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    Validate,
    IdealCheck,
    IntegralCheck,
    IpReport,
    Helmholtz,
    TwoForm,
    SigmaCheck,
    Solve,
    Cohomology,
    Ode,
}

impl CommandKind {
    pub fn name(&self) -> &'static str {
        match self {
            CommandKind::Validate => "validate",
            CommandKind::IdealCheck => "ideal-check",
            CommandKind::IntegralCheck => "integral-check",
            CommandKind::IpReport => "ip-report",
            CommandKind::Helmholtz => "helmholtz",
            CommandKind::TwoForm => "two-form",
            CommandKind::SigmaCheck => "sigma-check",
            CommandKind::Solve => "solve",
            CommandKind::Cohomology => "cohomology",
            CommandKind::Ode => "ode",
        }
    }
}

/// Command-line overrides applied on top of the file's `[sampling]` block.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub tol_abs: Option<f64>,
    pub tol_rel: Option<f64>,
    pub max_degree: Option<u32>,
    pub trials: Option<usize>,
}

#[derive(Debug)]
pub enum CliError {
    Io(String),
    Config(ConfigError),
    Math(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Io(msg) => write!(f, "io error: {msg}"),
            CliError::Config(e) => write!(f, "{e}"),
            CliError::Math(msg) => write!(f, "{msg}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> CliError {
        CliError::Config(e)
    }
}

fn math(e: impl std::fmt::Display) -> CliError {
    CliError::Math(e.to_string())
}

#[derive(Debug, Clone, Serialize)]
pub struct SamplingSummary {
    pub seed: u64,
    pub count: usize,
    pub tol_abs: f64,
    pub tol_rel: f64,
}

/// Machine-readable run record. The body is a pure function of the
/// command and inputs; wall time is deliberately not part of it so equal
/// runs serialize to identical bytes.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub report_version: u32,
    pub command: String,
    pub input: String,
    pub input_digest: String,
    pub sampling: SamplingSummary,
    pub checks: Vec<CheckFamily>,
    pub verdict: String,
    pub details: BTreeMap<String, serde_json::Value>,
}

impl RunReport {
    pub fn passed(&self) -> bool {
        matches!(self.verdict.as_str(), "pass" | "found")
    }

    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            0
        } else {
            1
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }

    pub fn render_text(&self) -> String {
        use std::fmt::Write;
        let mut out = String::new();
        let _ = writeln!(out, "aeds {} {}", self.command, self.input);
        let _ = writeln!(
            out,
            "  sampling: seed={} count={} tol_abs={:e} tol_rel={:e}",
            self.sampling.seed, self.sampling.count, self.sampling.tol_abs, self.sampling.tol_rel
        );
        let report = Report {
            families: self.checks.clone(),
        };
        let _ = write!(out, "{report}");
        for (key, value) in &self.details {
            let _ = writeln!(out, "  {key}: {value}");
        }
        let _ = writeln!(out, "verdict: {}", self.verdict);
        out
    }
}

fn digest(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    format!("sha256:{:x}", hasher.finalize())
}

fn sampling_with_overrides(file: &ProblemFile, opts: &Overrides) -> SampleSpec {
    let mut spec = config::build_sampling(file);
    if let Some(seed) = opts.seed {
        spec.seed = seed;
    }
    if let Some(count) = opts.samples {
        spec.count = count.max(1);
    }
    if let Some(t) = opts.tol_abs {
        spec.tol_abs = t;
    }
    if let Some(t) = opts.tol_rel {
        spec.tol_rel = t;
    }
    spec
}

/// Run a command against a problem file on disk.
pub fn run_file(cmd: CommandKind, path: &Path, opts: &Overrides) -> Result<RunReport, CliError> {
    let bytes = std::fs::read(path)
        .map_err(|e| CliError::Io(format!("cannot read `{}`: {e}", path.display())))?;
    let text = String::from_utf8(bytes.clone())
        .map_err(|_| CliError::Io(format!("`{}` is not UTF-8", path.display())))?;
    let file = ProblemFile::parse(&text)?;
    run_problem(cmd, &file, &path.display().to_string(), &digest(&bytes), opts)
}

/// Run a command against an already-parsed problem.
pub fn run_problem(
    cmd: CommandKind,
    file: &ProblemFile,
    input_name: &str,
    input_digest: &str,
    opts: &Overrides,
) -> Result<RunReport, CliError> {
    let spec = sampling_with_overrides(file, opts);
    let mut details: BTreeMap<String, serde_json::Value> = BTreeMap::new();

    let (checks, verdict) = match cmd {
        CommandKind::Validate => {
            let report = if file.algebroid.is_some() {
                let effective = config::build_effective(file)?;
                effective.algebroid().validate(&spec).map_err(math)?
            } else {
                let ip_data = config::build_ip(file)?;
                ip_data.algebroid().validate(&spec).map_err(math)?
            };
            let verdict = pass_fail(report.pass());
            (report, verdict)
        }
        CommandKind::IdealCheck => {
            let effective = config::build_effective(file)?;
            let ideal = config::build_ideal(file, effective.algebroid())?;
            let report = eds::is_differential_ideal(&ideal, &spec).map_err(math)?;
            details.insert(
                "differential_ideal".to_string(),
                serde_json::Value::Bool(report.pass()),
            );
            let verdict = pass_fail(report.pass());
            (report, verdict)
        }
        CommandKind::IntegralCheck => {
            let effective = config::build_effective(file)?;
            let EffectiveAlgebroid::Prolonged(prolonged) = effective else {
                return Err(CliError::Config(ConfigError(
                    "integral-check requires a [prolongation] block".to_string(),
                )));
            };
            let ideal = config::build_ideal(file, prolonged.algebroid())?;
            let section = config::build_section(file, &prolonged)?;
            let mut report = eds::integral_residual(&prolonged, &ideal, &section, &spec)
                .map_err(math)?;
            let dep = eds::dependency_residual(&prolonged, &ideal, &section, &spec)
                .map_err(math)?;
            for fam in dep.families {
                report.push(fam);
            }
            let verdict = pass_fail(report.pass());
            (report, verdict)
        }
        CommandKind::IpReport => {
            let ip_data = config::build_ip(file)?;
            let mut report = ip_data.algebroid().validate(&spec).map_err(math)?;
            let table = ip_data.bracket_table_check(&spec).map_err(math)?;
            for fam in table.families {
                report.push(fam);
            }
            let dual = ip_data.delta_psi_theta_check(&spec).map_err(math)?;
            for fam in dual.families {
                report.push(fam);
            }
            details.insert("fields".to_string(), derived_fields_json(&ip_data));
            let verdict = pass_fail(report.pass());
            (report, verdict)
        }
        CommandKind::Helmholtz => {
            let ip_data = config::build_ip(file)?;
            let k = config::build_multiplier(file, &ip_data)?;
            let report = ip::helmholtz_residuals(&ip_data, &k, &spec).map_err(math)?;
            details.insert(
                "det_k".to_string(),
                serde_json::Value::String(k.det().simplify().to_string()),
            );
            let verdict = pass_fail(report.pass());
            (report, verdict)
        }
        CommandKind::TwoForm => {
            let ip_data = config::build_ip(file)?;
            let k = config::build_multiplier(file, &ip_data)?;
            let report = ip::two_form_checks(&ip_data, &k, &spec).map_err(math)?;
            let verdict = pass_fail(report.pass());
            (report, verdict)
        }
        CommandKind::SigmaCheck => {
            let ip_data = config::build_ip(file)?;
            let ext = config::build_extended_section(file, &ip_data)?;
            match ip::sigma_residual(&ip_data, &ext, &spec) {
                Ok(report) => {
                    let verdict = pass_fail(report.pass());
                    (report, verdict)
                }
                Err(ip::IpError::PreconditionFailed(report)) => {
                    (*report, "precondition failed".to_string())
                }
                Err(e) => return Err(math(e)),
            }
        }
        CommandKind::Solve => {
            let ip_data = config::build_ip(file)?;
            let max_degree = opts.max_degree.unwrap_or(2);
            let trials = opts.trials.unwrap_or(32);
            let result =
                solver::search_multiplier(&ip_data, max_degree, trials, &spec).map_err(math)?;
            let mut report = Report::new();
            for (degree, nullity) in &result.nullity_by_degree {
                report.push(CheckFamily::value(
                    &format!("nullity_degree_{degree}"),
                    *nullity as f64,
                    true,
                ));
            }
            report.push(CheckFamily::value(
                "best_trial_min_det",
                result.best_trial_min_det,
                true,
            ));
            if let Some(best) = result.candidates.first() {
                for fam in &best.report.families {
                    let mut f = fam.clone();
                    f.name = format!("best/{}", f.name);
                    report.push(f);
                }
            }
            details.insert(
                "trials".to_string(),
                serde_json::Value::Number(result.trials.into()),
            );
            details.insert(
                "candidate_count".to_string(),
                serde_json::Value::Number(result.candidates.len().into()),
            );
            details.insert(
                "candidates".to_string(),
                serde_json::Value::Array(
                    result
                        .candidates
                        .iter()
                        .take(8)
                        .map(|c| {
                            let mut m = serde_json::Map::new();
                            m.insert(
                                "degree".to_string(),
                                serde_json::Value::Number(c.degree.into()),
                            );
                            m.insert(
                                "min_det".to_string(),
                                serde_json::json!(c.min_det),
                            );
                            m.insert(
                                "k".to_string(),
                                serde_json::Value::Array(
                                    c.k.entries
                                        .iter()
                                        .map(|row| {
                                            serde_json::Value::Array(
                                                row.iter()
                                                    .map(|e| {
                                                        serde_json::Value::String(
                                                            e.simplify().to_string(),
                                                        )
                                                    })
                                                    .collect(),
                                            )
                                        })
                                        .collect(),
                                ),
                            );
                            serde_json::Value::Object(m)
                        })
                        .collect(),
                ),
            );
            (report, result.verdict.as_str().to_string())
        }
        CommandKind::Cohomology => {
            let ip_block = file
                .ip
                .as_ref()
                .ok_or_else(|| ConfigError("missing [ip] block".to_string()))?;
            let c = config::build_structure_constants(ip_block)?;
            let input = config::build_cohomology(file, ip_block.n)?;
            let mut t_spec = spec.clone();
            t_spec
                .boxes
                .insert("t".to_string(), input.t_interval);
            let prob = ip::CohomologyProblem::new(ip_block.n, c, input.mu, input.nu, &t_spec)
                .map_err(math)?;
            let report = ip::cohomology_obstruction(&prob, &t_spec).map_err(math)?;
            details.insert(
                "invariant_lagrangian_obstruction".to_string(),
                serde_json::Value::String(
                    if report.pass() { "vanishes" } else { "present" }.to_string(),
                ),
            );
            let verdict = pass_fail(report.pass());
            (report, verdict)
        }
        CommandKind::Ode => {
            let input = config::build_ode(file)?;
            let traj = odesim::rk4(&input.system, &input.x0, input.t0, input.t1, input.h)
                .map_err(math)?;
            let mut report = Report::new();
            if let Some(exact) = &input.exact {
                let errs =
                    odesim::compare_closed_form(&input.system, &traj, exact).map_err(math)?;
                // tolerance: the zero-test policy against the trajectory scale
                for ((state, err_val), e) in
                    input.system.states.iter().zip(&errs).zip(exact)
                {
                    let mut scale = 0.0f64;
                    for t in &traj.times {
                        let mut p = aeds_core::expr::Point::new();
                        p.insert(input.system.time.clone(), *t);
                        scale = scale.max(e.evaluate(&p).map_err(math)?.abs());
                    }
                    let tol = spec.tol_abs.max(1e-6) + spec.tol_rel * scale;
                    report.push(CheckFamily {
                        name: format!("ode/{state}"),
                        max_residual: *err_val,
                        worst_point: None,
                        pass: *err_val <= tol,
                        kind: aeds_core::report::FamilyKind::Residual,
                    });
                }
            }
            let final_state: BTreeMap<String, f64> = input
                .system
                .states
                .iter()
                .cloned()
                .zip(traj.states.last().cloned().unwrap_or_default())
                .collect();
            details.insert("final_t".to_string(), serde_json::json!(traj.times.last()));
            details.insert("final_state".to_string(), serde_json::json!(final_state));
            details.insert(
                "steps".to_string(),
                serde_json::Value::Number((traj.times.len() - 1).into()),
            );
            let verdict = pass_fail(report.pass());
            (report, verdict)
        }
    };

    Ok(RunReport {
        report_version: 1,
        command: cmd.name().to_string(),
        input: input_name.to_string(),
        input_digest: input_digest.to_string(),
        sampling: SamplingSummary {
            seed: spec.seed,
            count: spec.count,
            tol_abs: spec.tol_abs,
            tol_rel: spec.tol_rel,
        },
        checks: checks.families,
        verdict,
        details,
    })
}

fn pass_fail(pass: bool) -> String {
    if pass { "pass" } else { "fail" }.to_string()
}

fn derived_fields_json(ip_data: &ip::IpData) -> serde_json::Value {
    let n = ip_data.n();
    let matrix = |get: &dyn Fn(usize, usize) -> String| -> serde_json::Value {
        serde_json::Value::Array(
            (0..n)
                .map(|i| {
                    serde_json::Value::Array(
                        (0..n)
                            .map(|j| serde_json::Value::String(get(i, j)))
                            .collect(),
                    )
                })
                .collect(),
        )
    };
    let cube = |get: &dyn Fn(usize, usize, usize) -> String| -> serde_json::Value {
        serde_json::Value::Array(
            (0..n)
                .map(|i| {
                    serde_json::Value::Array(
                        (0..n)
                            .map(|j| {
                                serde_json::Value::Array(
                                    (0..n)
                                        .map(|k| serde_json::Value::String(get(i, j, k)))
                                        .collect(),
                                )
                            })
                            .collect(),
                    )
                })
                .collect(),
        )
    };
    let mut m = serde_json::Map::new();
    m.insert(
        "gamma".to_string(),
        serde_json::Value::Array(
            ip_data
                .gamma()
                .iter()
                .map(|g| serde_json::Value::String(g.to_string()))
                .collect(),
        ),
    );
    m.insert(
        "lambda".to_string(),
        matrix(&|i, j| ip_data.lambda(i, j).to_string()),
    );
    m.insert(
        "psi".to_string(),
        matrix(&|i, j| ip_data.psi_coeff(i, j).to_string()),
    );
    m.insert(
        "phi".to_string(),
        matrix(&|i, j| ip_data.phi(i, j).to_string()),
    );
    m.insert(
        "lambda_ijk".to_string(),
        cube(&|i, j, k| ip_data.lambda3(i, j, k).to_string()),
    );
    m.insert("r".to_string(), cube(&|i, j, k| ip_data.r(i, j, k).to_string()));
    serde_json::Value::Object(m)
}
