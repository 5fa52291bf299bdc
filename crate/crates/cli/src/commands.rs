//! The `mass`, `check`, `boost` and `catalog` commands.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use alh_core::backgrounds::{boost_isometry_on, pullback_metric};
use alh_core::hypotheses::{check, HypothesisReport};
use alh_core::mass::{
    classify_causal, end_mass, energy_momentum, mass_limit, minkowski_norm2, CausalClass, EnergyMomentum, LevelRow,
    MassError, MassResult,
};
use serde::Serialize;

use crate::exit;
use crate::output::write_atomic;
use crate::spec::{catalog_entries, load_spec, EffectiveConfig, LoadedSpec, NormalizationTag, SpecError};

/// A failed command: the message for stderr and the exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl From<SpecError> for Failure {
    fn from(e: SpecError) -> Self {
        Failure { code: exit::INPUT, message: e.to_string() }
    }
}

fn input(ctx: &Path, e: impl std::fmt::Display) -> Failure {
    Failure { code: exit::INPUT, message: format!("{}: {e}", ctx.display()) }
}

/// What a command produced.
#[derive(Debug)]
pub struct Outcome {
    pub code: i32,
    /// Human-readable summary; printed to stderr when `report` is set.
    pub summary: String,
    pub files: Vec<PathBuf>,
    /// Machine-readable report for stdout.
    pub report: Option<String>,
}

#[derive(Serialize)]
struct PotentialResult<'a> {
    label: &'a str,
    normalization: NormalizationTag,
    #[serde(flatten)]
    result: &'a MassResult,
}

#[derive(Serialize)]
struct EnergyMomentumSummary<'a> {
    components: &'a [f64],
    norm2: f64,
    class: CausalClass,
    tolerance: f64,
}

#[derive(Serialize)]
struct DivergenceReport<'a> {
    potential: &'a str,
    reason: &'a str,
    table: &'a [LevelRow],
}

#[derive(Serialize)]
struct MassReport<'a> {
    command: &'static str,
    spec: String,
    config: &'a EffectiveConfig,
    verdict: &'static str,
    exit_code: i32,
    #[serde(skip_serializing_if = "Option::is_none")]
    energy_momentum: Option<EnergyMomentumSummary<'a>>,
    results: Vec<PotentialResult<'a>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    divergence: Option<DivergenceReport<'a>>,
}

fn spec_name(spec: &LoadedSpec) -> String {
    spec.path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report serializes");
    s.push('\n');
    s
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

/// `potential,x,m(x),extrapolant,error-estimate`.
fn convergence_csv(rows: &[(&str, &MassResult)]) -> String {
    let mut s = String::from("potential,x,m(x),extrapolant,error-estimate\n");
    for (label, r) in rows {
        for (x, m, e, err) in r.convergence_rows() {
            writeln!(s, "{label},{x:e},{m:e},{},{}", fmt_opt(e), fmt_opt(err)).unwrap();
        }
    }
    s
}

fn divergence_csv(label: &str, table: &[LevelRow]) -> String {
    let mut s = String::from("potential,x,m(x),extrapolant,error-estimate\n");
    for row in table {
        writeln!(s, "{label},{:e},{:e},,", row.x, row.value).unwrap();
    }
    s
}

/// `alh mass`: energy-momentum on an AH end, otherwise one mass per potential.
pub fn cmd_mass(spec_path: &Path, out_dir: &Path) -> Result<Outcome, Failure> {
    let spec = load_spec(spec_path)?;
    let g = &spec.metric;
    let stem = spec.stem();
    let report_path = out_dir.join(format!("{stem}.mass.json"));
    let table_path = out_dir.join(format!("{stem}.convergence.csv"));

    let mut labels: Vec<String> = Vec::new();
    let mut tags: Vec<NormalizationTag> = Vec::new();
    let computed: Result<(Option<EnergyMomentum>, Vec<MassResult>), (String, MassError)> = if spec.ah_end {
        labels = spec.config.potentials.iter().map(|p| p.label.clone()).collect();
        tags = vec![NormalizationTag::AhBasis; labels.len()];
        energy_momentum(g, &spec.mass, spec.config.tolerance)
            .map(|em| {
                let results = em.results.clone();
                (Some(em), results)
            })
            .map_err(|e| ("energy-momentum".to_string(), e))
    } else {
        let mut results = Vec::new();
        let mut failed = None;
        for (v, tag) in &spec.potentials {
            labels.push(v.label.clone());
            tags.push(*tag);
            let r = match tag {
                NormalizationTag::AlhNormalized => end_mass(g, v, &spec.mass),
                _ => mass_limit(g, &v.expr, &spec.mass),
            };
            match r {
                Ok(r) => results.push(r),
                Err(e) => {
                    failed = Some((v.label.clone(), e));
                    break;
                }
            }
        }
        match failed {
            Some(f) => Err(f),
            None => Ok((None, results)),
        }
    };

    let name = spec_name(&spec);
    match computed {
        Ok((em, results)) => {
            let report = MassReport {
                command: "mass",
                spec: name,
                config: &spec.config,
                verdict: "converged",
                exit_code: exit::OK,
                energy_momentum: em.as_ref().map(|e| EnergyMomentumSummary {
                    components: &e.components,
                    norm2: e.norm2,
                    class: e.class,
                    tolerance: e.tolerance,
                }),
                results: labels
                    .iter()
                    .zip(&tags)
                    .zip(&results)
                    .map(|((l, t), r)| PotentialResult { label: l, normalization: *t, result: r })
                    .collect(),
                divergence: None,
            };
            let rows: Vec<(&str, &MassResult)> = labels.iter().map(String::as_str).zip(&results).collect();
            write_atomic(&report_path, &json(&report)).map_err(|e| input(&report_path, e))?;
            write_atomic(&table_path, &convergence_csv(&rows)).map_err(|e| input(&table_path, e))?;
            let mut summary = String::new();
            if let Some(e) = &em {
                writeln!(summary, "energy-momentum: {:?}", e.components).unwrap();
                writeln!(summary, "minkowski norm^2: {:e}", e.norm2).unwrap();
                writeln!(summary, "class: {}", e.class).unwrap();
            } else {
                for (l, r) in labels.iter().zip(&results) {
                    writeln!(summary, "m({l}) = {} +/- {:e}", r.m, r.error).unwrap();
                }
            }
            Ok(Outcome { code: exit::OK, summary, files: vec![report_path, table_path], report: None })
        }
        Err((label, MassError::Divergence { reason, table })) => {
            let report = MassReport {
                command: "mass",
                spec: name,
                config: &spec.config,
                verdict: "divergent",
                exit_code: exit::DIVERGENCE,
                energy_momentum: None,
                results: Vec::new(),
                divergence: Some(DivergenceReport { potential: &label, reason: &reason, table: &table }),
            };
            write_atomic(&report_path, &json(&report)).map_err(|e| input(&report_path, e))?;
            write_atomic(&table_path, &divergence_csv(&label, &table)).map_err(|e| input(&table_path, e))?;
            Ok(Outcome {
                code: exit::DIVERGENCE,
                summary: format!("mass does not converge ({label}): {reason}\n"),
                files: vec![report_path, table_path],
                report: None,
            })
        }
        Err((label, e)) => Err(input(spec_path, format!("{label}: {e}"))),
    }
}

#[derive(Serialize)]
struct CheckReport<'a> {
    command: &'static str,
    spec: String,
    config: &'a EffectiveConfig,
    exit_code: i32,
    #[serde(flatten)]
    report: &'a HypothesisReport,
}

/// `alh check`: hypothesis margins. The report goes to `out_dir` when given.
pub fn cmd_check(spec_path: &Path, out_dir: Option<&Path>) -> Result<Outcome, Failure> {
    let spec = load_spec(spec_path)?;
    let report = check(&spec.metric, &spec.check_config()).map_err(|e| input(spec_path, e))?;
    let code = if report.verdict.hypotheses_satisfied { exit::OK } else { exit::HYPOTHESES_VIOLATED };
    let full = CheckReport { command: "check", spec: spec_name(&spec), config: &spec.config, exit_code: code, report: &report };
    let text = json(&full);
    let mut files = Vec::new();
    let mut summary = String::new();
    writeln!(summary, "scalar curvature margin: {:e}", report.scalar_margin.value).unwrap();
    match &report.boundary {
        Some(b) => writeln!(summary, "boundary mean curvature margin: {:e}", b.margin.value).unwrap(),
        None => writeln!(summary, "boundary mean curvature margin: absent").unwrap(),
    }
    if let Some(d) = &report.alh.divergence {
        writeln!(summary, "curvature decay: {d}").unwrap();
    }
    writeln!(
        summary,
        "hypotheses {}",
        if report.verdict.hypotheses_satisfied { "satisfied" } else { "violated" }
    )
    .unwrap();
    let mut stdout = None;
    match out_dir {
        Some(dir) => {
            let p = dir.join(format!("{}.check.json", spec.stem()));
            write_atomic(&p, &text).map_err(|e| input(&p, e))?;
            files.push(p);
        }
        None => stdout = Some(text),
    }
    Ok(Outcome { code, summary, files, report: stdout })
}

#[derive(Serialize)]
struct BoostReport<'a> {
    command: &'static str,
    spec: String,
    config: &'a EffectiveConfig,
    axis: usize,
    rapidity: f64,
    before: Vec<f64>,
    after: Vec<f64>,
    predicted: Vec<f64>,
    /// Largest component deviation of `after` from `predicted`, relative to
    /// the Euclidean length of `predicted`; absolute when `predicted` is zero.
    max_deviation: f64,
    norm2_before: f64,
    norm2_after: f64,
    norm2_deviation: f64,
    class_before: CausalClass,
    class_after: CausalClass,
    tolerance: f64,
    within_tolerance: bool,
    exit_code: i32,
}

/// `|a − b|` relative to `scale`, or absolute when the class is zero.
fn relative(diff: f64, scale: f64, zero: bool) -> f64 {
    if zero {
        diff
    } else {
        diff / scale
    }
}

/// `alh boost`: energy-momentum before and after pulling back by a boost.
pub fn cmd_boost(spec_path: &Path, axis: usize, beta: f64, out_dir: Option<&Path>) -> Result<Outcome, Failure> {
    let spec = load_spec(spec_path)?;
    if !spec.ah_end {
        return Err(input(spec_path, "boosts need an AH end with the default potential basis"));
    }
    let g = &spec.metric;
    let phi = boost_isometry_on(g.chart(), axis, beta).map_err(|e| input(spec_path, e))?;
    let pulled = pullback_metric(g, &phi).map_err(|e| input(spec_path, e))?;
    let tol = spec.config.tolerance;
    let run = |metric| match energy_momentum(metric, &spec.mass, tol) {
        Ok(e) => Ok(Ok(e)),
        Err(MassError::Divergence { reason, .. }) => Ok(Err(reason)),
        Err(e) => Err(input(spec_path, e)),
    };
    let (before, after) = match (run(g)?, run(&pulled)?) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(reason), _) | (_, Err(reason)) => {
            return Ok(Outcome {
                code: exit::DIVERGENCE,
                summary: format!("mass does not converge: {reason}\n"),
                files: Vec::new(),
                report: None,
            })
        }
    };
    let predicted = phi.transform_energy_momentum(&before.components);
    let scale = predicted.iter().map(|v| v * v).sum::<f64>().sqrt();
    let zero = classify_causal(&predicted, tol) == CausalClass::Zero;
    let diff = after.components.iter().zip(&predicted).map(|(a, p)| (a - p).abs()).fold(0.0, f64::max);
    let max_deviation = relative(diff, scale, zero);
    let norm2_after = minkowski_norm2(&after.components);
    let norm2_deviation = relative((norm2_after - before.norm2).abs(), before.norm2.abs(), zero);
    let boost_tol = spec.config.boost_tolerance;
    let ok = max_deviation <= boost_tol && norm2_deviation <= boost_tol;
    let code = if ok { exit::OK } else { exit::BOOST_TOLERANCE };
    let report = BoostReport {
        command: "boost",
        spec: spec_name(&spec),
        config: &spec.config,
        axis,
        rapidity: beta,
        before: before.components.clone(),
        after: after.components.clone(),
        predicted: predicted.clone(),
        max_deviation,
        norm2_before: before.norm2,
        norm2_after,
        norm2_deviation,
        class_before: before.class,
        class_after: after.class,
        tolerance: boost_tol,
        within_tolerance: ok,
        exit_code: code,
    };
    let mut summary = String::new();
    writeln!(summary, "before:    {:?}", before.components).unwrap();
    writeln!(summary, "after:     {:?}", after.components).unwrap();
    writeln!(summary, "predicted: {predicted:?}").unwrap();
    writeln!(summary, "max relative deviation: {max_deviation:e}").unwrap();
    let mut files = Vec::new();
    if let Some(dir) = out_dir {
        let p = dir.join(format!("{}.boost.json", spec.stem()));
        write_atomic(&p, &json(&report)).map_err(|e| input(&p, e))?;
        files.push(p);
    }
    Ok(Outcome { code, summary, files, report: None })
}

/// `alh catalog`: entries in alphabetical order with their potential counts
/// in dimension `n`.
pub fn cmd_catalog(n: usize) -> Result<Outcome, Failure> {
    let mut s = String::new();
    writeln!(s, "{:<18} {:<28} {:<14} potentials (n = {n})", "name", "parameters", "end type").unwrap();
    for e in catalog_entries(n).map_err(|m| Failure { code: exit::INPUT, message: m })? {
        let end = serde_json::to_value(e.end_type).expect("end type serializes");
        writeln!(s, "{:<18} {:<28} {:<14} {}", e.name, e.parameters, end.as_str().unwrap_or_default(), e.potentials)
            .unwrap();
    }
    Ok(Outcome { code: exit::OK, summary: s, files: Vec::new(), report: None })
}
