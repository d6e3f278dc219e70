//! Problem-file schema and conversion into domain objects.
//!
//! A problem file is a TOML document with the blocks `[sampling]`,
//! `[chart]`, `[algebroid]`, `[prolongation]`, `[ideal]`, `[section]`,
//! `[ip]`, `[candidate]` and `[ode]`. All mathematical entries are
//! expression strings; unknown keys are rejected.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::Deserialize;

use aeds_core::algebroid::{Algebroid, Form};
use aeds_core::chart::{Chart, SampleSpec};
use aeds_core::eds::IdealSpec;
use aeds_core::expr::{parse, Expr};
use aeds_core::ip::{ip_chart, CandidateMultiplier, ExtendedSection, IpData};
use aeds_core::odesim::OdeSystem;
use aeds_core::prolong::{
    prolong_connection, prolong_trivial, BundleSection, ConnectionData, ProlongedAlgebroid,
};

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn err(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    #[serde(default)]
    pub sampling: Option<SamplingBlock>,
    #[serde(default)]
    pub chart: Option<ChartBlock>,
    #[serde(default)]
    pub algebroid: Option<AlgebroidBlock>,
    #[serde(default)]
    pub prolongation: Option<ProlongationBlock>,
    #[serde(default)]
    pub ideal: Option<IdealBlock>,
    #[serde(default)]
    pub section: Option<BTreeMap<String, String>>,
    #[serde(default)]
    pub ip: Option<IpBlock>,
    #[serde(default)]
    pub candidate: Option<CandidateBlock>,
    #[serde(default)]
    pub ode: Option<OdeBlock>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct SamplingBlock {
    pub seed: Option<u64>,
    pub count: Option<usize>,
    pub tol_abs: Option<f64>,
    pub tol_rel: Option<f64>,
    #[serde(default, rename = "box")]
    pub boxes: BTreeMap<String, [f64; 2]>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChartBlock {
    pub coords: Vec<String>,
    #[serde(default)]
    pub domain: BTreeMap<String, [f64; 2]>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgebroidBlock {
    pub rank: usize,
    #[serde(default)]
    pub basis: Option<Vec<String>>,
    /// rank x dim matrix of expression strings.
    pub anchor: Vec<Vec<String>>,
    /// Sparse bracket entries; absent entries are zero.
    #[serde(default)]
    pub structure: Vec<StructureEntry>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StructureEntry {
    /// 1-based basis indices of the bracket `[e_alpha, e_beta]`.
    pub alpha: usize,
    pub beta: usize,
    /// 1-based index of the output component.
    pub gamma: usize,
    pub value: String,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProlongationBlock {
    pub fiber: Vec<String>,
    #[serde(default)]
    pub domain: BTreeMap<String, [f64; 2]>,
    #[serde(default)]
    pub connection: Vec<ConnectionEntry>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConnectionEntry {
    /// Fiber coordinate name.
    pub mu: String,
    /// Base coordinate name.
    pub i: String,
    pub value: String,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdealBlock {
    /// Close the membership span under the exterior derivative.
    #[serde(default)]
    pub differential: bool,
    pub generators: Vec<GeneratorEntry>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorEntry {
    pub name: String,
    /// Map from basis-label tuples ("ew", "Eu", "ew^Eu", "1" for degree
    /// zero) to coefficient expression strings.
    pub coeffs: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IpBlock {
    pub n: usize,
    /// Nonzero structure constants; antisymmetric partners are filled in
    /// automatically.
    #[serde(default)]
    pub c: Vec<CEntry>,
    pub gamma: Vec<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CEntry {
    pub i: usize,
    pub j: usize,
    pub k: usize,
    pub value: f64,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct CandidateBlock {
    /// Multiplier matrix entries.
    pub k: Option<Vec<Vec<String>>>,
    /// Reduced Lagrangian.
    pub l: Option<String>,
    /// Extended section of the sigma system.
    pub s: Option<Vec<Vec<String>>>,
    pub p: Option<Vec<Vec<Vec<String>>>>,
    pub q: Option<Vec<Vec<Vec<String>>>>,
    /// Cohomology data: `mu_{ij}(t)` and `nu_i(t)`.
    pub mu: Option<Vec<Vec<String>>>,
    pub nu: Option<Vec<String>>,
    pub t_interval: Option<[f64; 2]>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OdeBlock {
    pub time: String,
    pub states: Vec<String>,
    pub rhs: BTreeMap<String, String>,
    pub x0: BTreeMap<String, f64>,
    pub t0: f64,
    pub t1: f64,
    pub h: f64,
    #[serde(default)]
    pub exact: BTreeMap<String, String>,
}

impl ProblemFile {
    pub fn parse(text: &str) -> Result<ProblemFile, ConfigError> {
        toml::from_str(text).map_err(|e| err(format!("config error: {e}")))
    }
}

pub fn build_sampling(file: &ProblemFile) -> SampleSpec {
    let mut spec = SampleSpec::default();
    if let Some(s) = &file.sampling {
        if let Some(seed) = s.seed {
            spec.seed = seed;
        }
        if let Some(count) = s.count {
            spec.count = count.max(1);
        }
        if let Some(t) = s.tol_abs {
            spec.tol_abs = t;
        }
        if let Some(t) = s.tol_rel {
            spec.tol_rel = t;
        }
        for (coord, [lo, hi]) in &s.boxes {
            spec.boxes.insert(coord.clone(), (*lo, *hi));
        }
    }
    spec
}

pub fn build_chart(file: &ProblemFile) -> Result<Chart, ConfigError> {
    let block = file
        .chart
        .as_ref()
        .ok_or_else(|| err("missing [chart] block"))?;
    let mut chart = Chart::from_names(block.coords.clone());
    for (coord, [lo, hi]) in &block.domain {
        if !chart.has_coord(coord) {
            return Err(err(format!("domain for unknown coordinate `{coord}`")));
        }
        if lo >= hi {
            return Err(err(format!("domain for `{coord}` must satisfy lo < hi")));
        }
        chart = chart.with_domain(coord, *lo, *hi);
    }
    Ok(chart)
}

pub fn build_base_algebroid(file: &ProblemFile) -> Result<Arc<Algebroid>, ConfigError> {
    let chart = build_chart(file)?;
    let block = file
        .algebroid
        .as_ref()
        .ok_or_else(|| err("missing [algebroid] block"))?;
    let rank = block.rank;
    if rank == 0 {
        return Err(err("[algebroid] rank must be positive"));
    }
    if block.anchor.len() != rank {
        return Err(err(format!(
            "[algebroid] anchor must have {rank} rows, found {}",
            block.anchor.len()
        )));
    }
    let mut anchor = Vec::with_capacity(rank);
    for (a, row) in block.anchor.iter().enumerate() {
        if row.len() != chart.dim() {
            return Err(err(format!(
                "[algebroid] anchor row {} must have {} entries",
                a + 1,
                chart.dim()
            )));
        }
        let mut out = Vec::with_capacity(row.len());
        for src in row {
            out.push(parse(src, &chart).map_err(|e| err(format!("anchor entry `{src}`: {e}")))?);
        }
        anchor.push(out);
    }
    let mut structure = vec![vec![vec![Expr::zero(); rank]; rank]; rank];
    for entry in &block.structure {
        let (a, b, g) = (entry.alpha, entry.beta, entry.gamma);
        for (label, idx) in [("alpha", a), ("beta", b), ("gamma", g)] {
            if idx == 0 || idx > rank {
                return Err(err(format!(
                    "[algebroid] structure index {label} = {idx} out of range 1..={rank}"
                )));
            }
        }
        let value = parse(&entry.value, &chart)
            .map_err(|e| err(format!("structure entry `{}`: {e}", entry.value)))?;
        structure[a - 1][b - 1][g - 1] = value;
    }
    if let Some(basis) = &block.basis {
        if basis.len() != rank {
            return Err(err("[algebroid] basis must name every section"));
        }
    }
    Ok(Algebroid::new(
        chart,
        rank,
        anchor,
        structure,
        block.basis.clone(),
    ))
}

pub fn build_prolongation(file: &ProblemFile) -> Result<ProlongedAlgebroid, ConfigError> {
    let base = build_base_algebroid(file)?;
    let block = file
        .prolongation
        .as_ref()
        .ok_or_else(|| err("missing [prolongation] block"))?;
    let mut fiber = Chart::from_names(block.fiber.clone());
    for (coord, [lo, hi]) in &block.domain {
        if !fiber.has_coord(coord) {
            return Err(err(format!(
                "[prolongation] domain for unknown fiber coordinate `{coord}`"
            )));
        }
        fiber = fiber.with_domain(coord, *lo, *hi);
    }
    if block.connection.is_empty() {
        return prolong_trivial(base, fiber).map_err(|e| err(e.to_string()));
    }
    let full = base.chart().extend(&fiber);
    let mut coeffs = vec![vec![Expr::zero(); base.chart().dim()]; fiber.dim()];
    for entry in &block.connection {
        let mu = fiber
            .index_of(&entry.mu)
            .ok_or_else(|| err(format!("connection entry: unknown fiber coordinate `{}`", entry.mu)))?;
        let i = base
            .chart()
            .index_of(&entry.i)
            .ok_or_else(|| err(format!("connection entry: unknown base coordinate `{}`", entry.i)))?;
        coeffs[mu][i] =
            parse(&entry.value, &full).map_err(|e| err(format!("connection entry: {e}")))?;
    }
    prolong_connection(base, fiber, ConnectionData { coeffs }).map_err(|e| err(e.to_string()))
}

/// The algebroid a command operates on: the prolongation when one is
/// declared, else the base.
pub enum EffectiveAlgebroid {
    Base(Arc<Algebroid>),
    Prolonged(ProlongedAlgebroid),
}

impl EffectiveAlgebroid {
    pub fn algebroid(&self) -> &Arc<Algebroid> {
        match self {
            EffectiveAlgebroid::Base(a) => a,
            EffectiveAlgebroid::Prolonged(p) => p.algebroid(),
        }
    }
}

pub fn build_effective(file: &ProblemFile) -> Result<EffectiveAlgebroid, ConfigError> {
    if file.prolongation.is_some() {
        Ok(EffectiveAlgebroid::Prolonged(build_prolongation(file)?))
    } else {
        Ok(EffectiveAlgebroid::Base(build_base_algebroid(file)?))
    }
}

fn parse_tuple_key(key: &str, algebroid: &Arc<Algebroid>) -> Result<Vec<usize>, ConfigError> {
    let trimmed = key.trim();
    if trimmed == "1" || trimmed.is_empty() {
        return Ok(Vec::new());
    }
    trimmed
        .split('^')
        .map(|label| {
            algebroid
                .basis_index(label.trim())
                .ok_or_else(|| err(format!("unknown basis label `{}` in key `{key}`", label.trim())))
        })
        .collect()
}

pub fn build_ideal(
    file: &ProblemFile,
    algebroid: &Arc<Algebroid>,
) -> Result<IdealSpec, ConfigError> {
    let block = file
        .ideal
        .as_ref()
        .ok_or_else(|| err("missing [ideal] block"))?;
    let chart = algebroid.chart();
    let mut generators = Vec::with_capacity(block.generators.len());
    for gen in &block.generators {
        let mut degree: Option<usize> = None;
        let mut pieces: Vec<(Vec<usize>, Expr)> = Vec::new();
        for (key, src) in &gen.coeffs {
            let tuple = parse_tuple_key(key, algebroid)?;
            match degree {
                None => degree = Some(tuple.len()),
                Some(d) if d != tuple.len() => {
                    return Err(err(format!(
                        "generator `{}` mixes degrees {d} and {}",
                        gen.name,
                        tuple.len()
                    )))
                }
                _ => {}
            }
            let coeff =
                parse(src, chart).map_err(|e| err(format!("generator `{}`: {e}", gen.name)))?;
            pieces.push((tuple, coeff));
        }
        let degree = degree.ok_or_else(|| err(format!("generator `{}` has no entries", gen.name)))?;
        let mut form = Form::zero(algebroid.clone(), degree);
        for (tuple, coeff) in pieces {
            form.accumulate(&tuple, coeff);
        }
        generators.push((gen.name.clone(), form));
    }
    IdealSpec::new(algebroid.clone(), generators, block.differential)
        .map_err(|e| err(e.to_string()))
}

pub fn build_section(
    file: &ProblemFile,
    prolonged: &ProlongedAlgebroid,
) -> Result<BundleSection, ConfigError> {
    let block = file
        .section
        .as_ref()
        .ok_or_else(|| err("missing [section] block"))?;
    let base_chart = prolonged.base().chart();
    let mut components = Vec::with_capacity(prolonged.fiber().len());
    for y in prolonged.fiber() {
        let src = block
            .get(y)
            .ok_or_else(|| err(format!("[section] missing entry for fiber coordinate `{y}`")))?;
        components
            .push(parse(src, base_chart).map_err(|e| err(format!("[section] `{y}`: {e}")))?);
    }
    for key in block.keys() {
        if !prolonged.fiber().contains(key) {
            return Err(err(format!("[section] unknown fiber coordinate `{key}`")));
        }
    }
    BundleSection::new(&prolonged.fiber().to_vec(), components).map_err(|e| err(e.to_string()))
}

pub fn build_structure_constants(block: &IpBlock) -> Result<Vec<Vec<Vec<f64>>>, ConfigError> {
    let n = block.n;
    let mut c = vec![vec![vec![0.0; n]; n]; n];
    for entry in &block.c {
        for (label, idx) in [("i", entry.i), ("j", entry.j), ("k", entry.k)] {
            if idx == 0 || idx > n {
                return Err(err(format!(
                    "[ip] structure constant index {label} = {idx} out of range 1..={n}"
                )));
            }
        }
        c[entry.i - 1][entry.j - 1][entry.k - 1] = entry.value;
        c[entry.j - 1][entry.i - 1][entry.k - 1] = -entry.value;
    }
    Ok(c)
}

pub fn build_ip(file: &ProblemFile) -> Result<IpData, ConfigError> {
    let block = file.ip.as_ref().ok_or_else(|| err("missing [ip] block"))?;
    let c = build_structure_constants(block)?;
    let chart = ip_chart(block.n);
    if block.gamma.len() != block.n {
        return Err(err("[ip] gamma must have n entries"));
    }
    let gamma = block
        .gamma
        .iter()
        .map(|src| parse(src, &chart).map_err(|e| err(format!("[ip] gamma: {e}"))))
        .collect::<Result<Vec<_>, _>>()?;
    IpData::build(block.n, c, gamma).map_err(|e| err(e.to_string()))
}

fn parse_matrix(
    src: &[Vec<String>],
    n: usize,
    chart: &Chart,
    what: &str,
) -> Result<Vec<Vec<Expr>>, ConfigError> {
    if src.len() != n || src.iter().any(|row| row.len() != n) {
        return Err(err(format!("[candidate] {what} must be {n} x {n}")));
    }
    src.iter()
        .map(|row| {
            row.iter()
                .map(|s| parse(s, chart).map_err(|e| err(format!("[candidate] {what}: {e}"))))
                .collect()
        })
        .collect()
}

fn parse_cube(
    src: &[Vec<Vec<String>>],
    n: usize,
    chart: &Chart,
    what: &str,
) -> Result<Vec<Vec<Vec<Expr>>>, ConfigError> {
    if src.len() != n
        || src
            .iter()
            .any(|p| p.len() != n || p.iter().any(|row| row.len() != n))
    {
        return Err(err(format!("[candidate] {what} must be {n} x {n} x {n}")));
    }
    src.iter()
        .map(|plane| {
            plane
                .iter()
                .map(|row| {
                    row.iter()
                        .map(|s| {
                            parse(s, chart).map_err(|e| err(format!("[candidate] {what}: {e}")))
                        })
                        .collect()
                })
                .collect()
        })
        .collect()
}

pub fn build_multiplier(
    file: &ProblemFile,
    ip: &IpData,
) -> Result<CandidateMultiplier, ConfigError> {
    let block = file
        .candidate
        .as_ref()
        .ok_or_else(|| err("missing [candidate] block"))?;
    let k = block
        .k
        .as_ref()
        .ok_or_else(|| err("[candidate] missing multiplier entry `k`"))?;
    Ok(CandidateMultiplier::new(parse_matrix(
        k,
        ip.n(),
        ip.chart(),
        "k",
    )?))
}

pub fn build_extended_section(
    file: &ProblemFile,
    ip: &IpData,
) -> Result<ExtendedSection, ConfigError> {
    let block = file
        .candidate
        .as_ref()
        .ok_or_else(|| err("missing [candidate] block"))?;
    let s = block
        .s
        .as_ref()
        .ok_or_else(|| err("[candidate] missing sigma entry `s`"))?;
    let p = block
        .p
        .as_ref()
        .ok_or_else(|| err("[candidate] missing sigma entry `p`"))?;
    let q = block
        .q
        .as_ref()
        .ok_or_else(|| err("[candidate] missing sigma entry `q`"))?;
    Ok(ExtendedSection {
        s: parse_matrix(s, ip.n(), ip.chart(), "s")?,
        p: parse_cube(p, ip.n(), ip.chart(), "p")?,
        q: parse_cube(q, ip.n(), ip.chart(), "q")?,
    })
}

pub struct CohomologyInput {
    pub mu: Vec<Vec<Expr>>,
    pub nu: Vec<Expr>,
    pub t_interval: (f64, f64),
}

pub fn build_cohomology(file: &ProblemFile, n: usize) -> Result<CohomologyInput, ConfigError> {
    let block = file
        .candidate
        .as_ref()
        .ok_or_else(|| err("missing [candidate] block"))?;
    let t_chart = Chart::new(&["t"]);
    let mu_src = block
        .mu
        .as_ref()
        .ok_or_else(|| err("[candidate] missing cohomology entry `mu`"))?;
    let nu_src = block
        .nu
        .as_ref()
        .ok_or_else(|| err("[candidate] missing cohomology entry `nu`"))?;
    let mu = parse_matrix(mu_src, n, &t_chart, "mu")?;
    if nu_src.len() != n {
        return Err(err(format!("[candidate] nu must have {n} entries")));
    }
    let nu = nu_src
        .iter()
        .map(|s| parse(s, &t_chart).map_err(|e| err(format!("[candidate] nu: {e}"))))
        .collect::<Result<Vec<_>, _>>()?;
    let [lo, hi] = block.t_interval.unwrap_or([0.0, 1.0]);
    if lo >= hi {
        return Err(err("[candidate] t_interval must satisfy lo < hi"));
    }
    Ok(CohomologyInput {
        mu,
        nu,
        t_interval: (lo, hi),
    })
}

pub struct OdeInput {
    pub system: OdeSystem,
    pub x0: Vec<f64>,
    pub t0: f64,
    pub t1: f64,
    pub h: f64,
    pub exact: Option<Vec<Expr>>,
}

pub fn build_ode(file: &ProblemFile) -> Result<OdeInput, ConfigError> {
    let block = file.ode.as_ref().ok_or_else(|| err("missing [ode] block"))?;
    let mut names = vec![block.time.clone()];
    names.extend(block.states.iter().cloned());
    let chart = Chart::from_names(names);
    let mut rhs = Vec::with_capacity(block.states.len());
    let mut x0 = Vec::with_capacity(block.states.len());
    for state in &block.states {
        let src = block
            .rhs
            .get(state)
            .ok_or_else(|| err(format!("[ode] missing rhs for state `{state}`")))?;
        rhs.push(parse(src, &chart).map_err(|e| err(format!("[ode] rhs `{state}`: {e}")))?);
        x0.push(
            *block
                .x0
                .get(state)
                .ok_or_else(|| err(format!("[ode] missing initial value for `{state}`")))?,
        );
    }
    for key in block.rhs.keys().chain(block.x0.keys()) {
        if !block.states.contains(key) {
            return Err(err(format!("[ode] unknown state `{key}`")));
        }
    }
    let states: Vec<&str> = block.states.iter().map(String::as_str).collect();
    let system = OdeSystem::new(&block.time, &states, rhs).map_err(|e| err(e.to_string()))?;
    let exact = if block.exact.is_empty() {
        None
    } else {
        let t_chart = Chart::from_names(vec![block.time.clone()]);
        let mut out = Vec::with_capacity(block.states.len());
        for state in &block.states {
            let src = block
                .exact
                .get(state)
                .ok_or_else(|| err(format!("[ode] exact block missing state `{state}`")))?;
            out.push(parse(src, &t_chart).map_err(|e| err(format!("[ode] exact `{state}`: {e}")))?);
        }
        Some(out)
    };
    if block.h <= 0.0 || block.t1 <= block.t0 {
        return Err(err("[ode] requires h > 0 and t1 > t0"));
    }
    Ok(OdeInput {
        system,
        x0,
        t0: block.t0,
        t1: block.t1,
        h: block.h,
        exact,
    })
}
