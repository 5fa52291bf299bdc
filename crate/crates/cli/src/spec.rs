//! Metric specification files.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::PI;
use std::fmt;
use std::path::{Path, PathBuf};

use alh_core::backgrounds::{
    ah_basis, birmingham_with_torus, hyperbolic_background, BackgroundModel, EndType, Normalization, StaticPotential,
};
use alh_core::expr::{parse_expression, parse_with, Vocabulary};
use alh_core::hypotheses::{CheckConfig, Sampler, DEFAULT_SEED, DEFAULT_TOLERANCE};
use alh_core::mass::MassConfig;
use alh_core::tensor::{AsymptoticDirection, Axis, Chart, CrossSection, GridMetric, MetricField};
use serde::{Deserialize, Serialize};

/// An input problem, with the file it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct SpecError {
    pub context: String,
    pub message: String,
}

impl SpecError {
    fn new(context: impl Into<String>, message: impl fmt::Display) -> Self {
        Self { context: context.into(), message: message.to_string() }
    }
}

impl fmt::Display for SpecError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.context, self.message)
    }
}

impl std::error::Error for SpecError {}

/// A real number written either as a literal or as a constant expression
/// such as `"2*pi"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Number {
    Value(f64),
    Expr(String),
}

impl Number {
    pub fn value(&self) -> Result<f64, String> {
        match self {
            Number::Value(v) => Ok(*v),
            Number::Expr(s) => {
                let e = parse_expression(s, &[], &["pi"]).map_err(|e| e.to_string())?;
                let e = e.bind(&HashMap::from([("pi".to_string(), PI)])).map_err(|e| e.to_string())?;
                e.eval_value(&[]).map_err(|e| e.to_string())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoordinateSpec {
    pub name: String,
    /// `[lower, upper]`; `null` stands for an infinite end.
    #[serde(default)]
    pub range: Option<[Option<Number>; 2]>,
    /// Period of an angle; its range then starts at `range[0]` (default 0).
    #[serde(default)]
    pub period: Option<Number>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChartSpec {
    pub coordinates: Vec<CoordinateSpec>,
    pub asymptotic: String,
    #[serde(default = "default_direction")]
    pub direction: AsymptoticDirection,
    pub cross_section: CrossSection,
}

fn default_direction() -> AsymptoticDirection {
    AsymptoticDirection::ToInfinity
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CatalogSpec {
    pub name: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    /// Delimited file, relative to the spec file.
    pub path: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundarySpec {
    pub coord: String,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormalizationTag {
    /// Used exactly as written.
    AsGiven,
    /// Member of the AH basis; used as written.
    AhBasis,
    /// Rescaled so that `lim x·V` matches the boundary volume convention.
    AlhNormalized,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSpec {
    #[serde(default)]
    pub label: Option<String>,
    pub expr: String,
    #[serde(default)]
    pub normalization: Option<NormalizationTag>,
}

/// The `run` block. Everything has a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSpec {
    pub r_sequence: Option<Vec<f64>>,
    pub x_sequence: Option<Vec<f64>>,
    pub order: usize,
    pub max_order: usize,
    pub order_tolerance: f64,
    pub sigma: Option<f64>,
    /// Zero band and null band of the causal classification.
    pub tolerance: f64,
    pub hypothesis_tolerance: f64,
    pub boost_tolerance: f64,
    pub seed: u64,
    pub samples: usize,
    pub planes_per_level: usize,
    pub cross_samples: usize,
    /// Range of the asymptotic coordinate for interior samples.
    pub sample_range: Option<[f64; 2]>,
}

impl Default for RunSpec {
    fn default() -> Self {
        let mass = MassConfig::default();
        let check = CheckConfig::default();
        Self {
            r_sequence: None,
            x_sequence: None,
            order: mass.order,
            max_order: mass.max_order,
            order_tolerance: mass.order_tolerance,
            sigma: None,
            tolerance: 1e-9,
            hypothesis_tolerance: DEFAULT_TOLERANCE,
            boost_tolerance: 1e-5,
            seed: DEFAULT_SEED,
            samples: check.sampler.count,
            planes_per_level: check.planes_per_level,
            cross_samples: check.cross_samples,
            sample_range: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricSpecFile {
    pub dimension: usize,
    #[serde(default)]
    pub chart: Option<ChartSpec>,
    #[serde(default)]
    pub catalog: Option<CatalogSpec>,
    /// Upper-triangle components keyed `"i,j"` by coordinate name or index.
    #[serde(default)]
    pub components: Option<BTreeMap<String, String>>,
    #[serde(default)]
    pub grid: Option<GridSpec>,
    /// Named constants usable in component and potential expressions.
    #[serde(default)]
    pub parameters: BTreeMap<String, f64>,
    #[serde(default)]
    pub boundary: Option<BoundarySpec>,
    #[serde(default)]
    pub potentials: Vec<PotentialSpec>,
    #[serde(default)]
    pub run: RunSpec,
}

/// Where the metric came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SourceKind {
    Catalog,
    Components,
    Grid,
}

/// Effective settings after defaults are applied; echoed in every report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EffectiveConfig {
    pub source: SourceKind,
    pub catalog: Option<CatalogSpec>,
    pub dimension: usize,
    pub coordinates: Vec<String>,
    pub asymptotic: String,
    pub cross_section: CrossSection,
    pub levels: Vec<f64>,
    pub x_sequence: Vec<f64>,
    pub mass: MassConfig,
    pub tolerance: f64,
    pub hypothesis_tolerance: f64,
    pub boost_tolerance: f64,
    pub seed: u64,
    pub samples: usize,
    pub planes_per_level: usize,
    pub cross_samples: usize,
    pub sample_range: Option<[f64; 2]>,
    pub potentials: Vec<PotentialEcho>,
    pub boundary: Option<BoundarySpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PotentialEcho {
    pub label: String,
    pub expr: String,
    pub normalization: NormalizationTag,
}

/// A spec file turned into a metric, potentials and run settings.
#[derive(Debug, Clone)]
pub struct LoadedSpec {
    pub path: PathBuf,
    pub file: MetricSpecFile,
    pub metric: MetricField,
    pub model: Option<BackgroundModel>,
    pub potentials: Vec<(StaticPotential, NormalizationTag)>,
    /// Energy-momentum against the AH basis rather than single potentials.
    pub ah_end: bool,
    pub boundary: Option<(usize, f64)>,
    pub mass: MassConfig,
    pub config: EffectiveConfig,
}

impl LoadedSpec {
    pub fn check_config(&self) -> CheckConfig {
        let run = &self.file.run;
        CheckConfig {
            sampler: Sampler {
                seed: run.seed,
                count: run.samples,
                asymptotic_range: run.sample_range.map(|[a, b]| (a, b)),
            },
            tolerance: run.hypothesis_tolerance,
            boundary: self.boundary,
            levels: self.mass.levels.clone(),
            planes_per_level: run.planes_per_level,
            cross_samples: run.cross_samples,
        }
    }

    /// File stem used to name outputs.
    pub fn stem(&self) -> String {
        self.path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "spec".into())
    }
}

/// Read and validate a spec file.
pub fn load_spec(path: &Path) -> Result<LoadedSpec, SpecError> {
    let ctx = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|e| SpecError::new(&ctx, e))?;
    let file: MetricSpecFile = serde_json::from_str(&text).map_err(|e| SpecError::new(&ctx, e))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    build(path, base, file)
}

fn build(path: &Path, base: &Path, file: MetricSpecFile) -> Result<LoadedSpec, SpecError> {
    let ctx = path.display().to_string();
    let err = |field: &str, m: &dyn fmt::Display| SpecError::new(format!("{ctx}: {field}"), m);
    let sources = [file.catalog.is_some(), file.components.is_some(), file.grid.is_some()];
    if sources.iter().filter(|s| **s).count() != 1 {
        return Err(SpecError::new(&ctx, "exactly one of \"catalog\", \"components\" or \"grid\" must be present"));
    }
    let n = file.dimension;

    let (metric, model, source) = if let Some(cat) = &file.catalog {
        if file.chart.is_some() {
            return Err(err("chart", &"a catalog entry defines its own chart; remove \"chart\""));
        }
        let model = catalog_model(n, cat).map_err(|m| err("catalog", &m))?;
        (model.metric.clone(), Some(model), SourceKind::Catalog)
    } else {
        let chart_spec = file.chart.as_ref().ok_or_else(|| err("chart", &"required for components and grid"))?;
        let chart = build_chart(chart_spec).map_err(|m| err("chart", &m))?;
        if chart.dim() != n {
            return Err(err("chart", &format!("{} coordinates for dimension {n}", chart.dim())));
        }
        if let Some(comps) = &file.components {
            (build_components(&chart, comps, &file.parameters).map_err(|m| err("components", &m))?, None, SourceKind::Components)
        } else {
            let g = file.grid.as_ref().expect("checked above");
            let p = base.join(&g.path);
            let grid = GridMetric::read_csv(&chart, &p).map_err(|e| err("grid", &e))?;
            (MetricField::grid(chart, grid), None, SourceKind::Grid)
        }
    };
    let chart = metric.chart().clone();
    let sphere = chart.cross_section() == CrossSection::Sphere;

    let mut potentials = Vec::new();
    for (i, p) in file.potentials.iter().enumerate() {
        let field = format!("potentials[{i}]");
        let vocab = std::sync::Arc::new(Vocabulary::new(
            &chart.names(),
            &file.parameters.keys().map(String::as_str).collect::<Vec<_>>(),
        ));
        let e = parse_with(&p.expr, vocab)
            .and_then(|e| e.bind(&file.parameters.clone().into_iter().collect()))
            .and_then(|e| e.with_vocabulary(chart.vocabulary().clone()))
            .map_err(|e| err(&field, &e))?;
        let tag = p.normalization.unwrap_or(if sphere { NormalizationTag::AsGiven } else { NormalizationTag::AlhNormalized });
        if tag == NormalizationTag::AlhNormalized && sphere {
            return Err(err(&field, &"alh-normalized potentials need a toroidal or patch cross-section"));
        }
        let norm = match tag {
            NormalizationTag::AhBasis => Normalization::AhBasis(i),
            _ => Normalization::AlhNormalized { scale: 1.0 },
        };
        let label = p.label.clone().unwrap_or_else(|| format!("V{i}"));
        potentials.push((StaticPotential { label, expr: e, tag: norm }, tag));
    }
    let ah_end = potentials.is_empty() && sphere;
    if potentials.is_empty() && !sphere {
        match &model {
            Some(m) => {
                potentials = m.potentials.iter().map(|v| (v.clone(), NormalizationTag::AlhNormalized)).collect();
            }
            None => return Err(err("potentials", &"a non-spherical end needs a static potential")),
        }
    }

    let boundary = match &file.boundary {
        Some(b) => {
            let i = chart.index_of(&b.coord).ok_or_else(|| err("boundary", &format!("unknown coordinate '{}'", b.coord)))?;
            Some((i, b.value))
        }
        None => None,
    };

    let run = &file.run;
    let levels = match (&run.r_sequence, &run.x_sequence) {
        (Some(_), Some(_)) => return Err(err("run", &"give r_sequence or x_sequence, not both")),
        (Some(r), None) => r.clone(),
        (None, Some(x)) => x.iter().map(|&x| chart.s_of(x)).collect(),
        (None, None) => Vec::new(),
    };
    let mass = MassConfig {
        levels,
        order: run.order,
        max_order: run.max_order,
        order_tolerance: run.order_tolerance,
        sigma: run.sigma,
    };
    let levels = mass.levels_for(&metric);
    for (name, v) in [("tolerance", run.tolerance), ("hypothesis_tolerance", run.hypothesis_tolerance), ("boost_tolerance", run.boost_tolerance)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(err("run", &format!("{name} = {v} must be positive")));
        }
    }

    let echo_potentials = if ah_end {
        ah_basis(&chart)
            .map_err(|e| err("potentials", &e))?
            .into_iter()
            .map(|v| PotentialEcho { label: v.label, expr: v.expr.to_string(), normalization: NormalizationTag::AhBasis })
            .collect()
    } else {
        potentials
            .iter()
            .map(|(v, t)| PotentialEcho { label: v.label.clone(), expr: v.expr.to_string(), normalization: *t })
            .collect()
    };
    let config = EffectiveConfig {
        source,
        catalog: file.catalog.clone(),
        dimension: n,
        coordinates: chart.names().iter().map(|s| s.to_string()).collect(),
        asymptotic: chart.axis(chart.asymptotic()).name.clone(),
        cross_section: chart.cross_section(),
        x_sequence: levels.iter().map(|&s| chart.x_of(s)).collect(),
        mass: MassConfig { levels: levels.clone(), ..mass.clone() },
        levels,
        tolerance: run.tolerance,
        hypothesis_tolerance: run.hypothesis_tolerance,
        boost_tolerance: run.boost_tolerance,
        seed: run.seed,
        samples: run.samples,
        planes_per_level: run.planes_per_level,
        cross_samples: run.cross_samples,
        sample_range: run.sample_range,
        potentials: echo_potentials,
        boundary: file.boundary.clone(),
    };
    Ok(LoadedSpec { path: path.to_path_buf(), file, metric, model, potentials, ah_end, boundary, mass, config })
}

/// A line of the catalog listing.
pub struct CatalogEntry {
    pub name: &'static str,
    pub parameters: &'static str,
    pub end_type: EndType,
    /// Number of static potentials of the background in dimension `n`.
    pub potentials: usize,
}

/// Catalog entries in alphabetical order.
pub fn catalog_entries(n: usize) -> Result<Vec<CatalogEntry>, String> {
    let rows: [(&str, &str, &str, Option<f64>); 4] = [
        ("birmingham k=-1", "k = -1, m", "birmingham", Some(-1.0)),
        ("birmingham k=0", "k = 0, m, side (default 1)", "birmingham", Some(0.0)),
        ("birmingham k=1", "k = 1, m", "birmingham", Some(1.0)),
        ("hyperbolic", "none", "hyperbolic", None),
    ];
    rows.iter()
        .map(|&(name, parameters, family, k)| {
            let mut params = BTreeMap::new();
            if let Some(k) = k {
                params.insert("k".to_string(), k);
                params.insert("m".to_string(), 0.0);
            }
            let model = catalog_model(n, &CatalogSpec { name: family.into(), params })?;
            Ok(CatalogEntry { name, parameters, end_type: model.end_type, potentials: model.potentials.len() })
        })
        .collect()
}

fn catalog_model(n: usize, cat: &CatalogSpec) -> Result<BackgroundModel, String> {
    let allowed: &[&str] = match cat.name.as_str() {
        "hyperbolic" => &[],
        "birmingham" => &["k", "m", "side"],
        other => return Err(format!("unknown catalog entry '{other}' (see `alh catalog`)")),
    };
    if let Some(bad) = cat.params.keys().find(|k| !allowed.contains(&k.as_str())) {
        return Err(format!("'{}' takes no parameter '{bad}'", cat.name));
    }
    let model = if cat.name == "hyperbolic" {
        hyperbolic_background(n)
    } else {
        let get = |k: &str| cat.params.get(k).copied().ok_or_else(|| format!("birmingham needs parameter '{k}'"));
        let k = get("k")?;
        if k.fract() != 0.0 {
            return Err(format!("k = {k} must be 1, 0 or -1"));
        }
        birmingham_with_torus(n, k as i32, get("m")?, cat.params.get("side").copied().unwrap_or(1.0))
    };
    model.map_err(|e| e.to_string())
}

fn build_chart(spec: &ChartSpec) -> Result<Chart, String> {
    let mut axes = Vec::with_capacity(spec.coordinates.len());
    for c in &spec.coordinates {
        let num = |v: &Option<Number>, inf: f64| -> Result<f64, String> {
            v.as_ref().map(|x| x.value().map_err(|e| format!("coordinate '{}': {e}", c.name))).unwrap_or(Ok(inf))
        };
        let axis = match (&c.period, &c.range) {
            (Some(p), range) => {
                let start = match range {
                    Some([lo, _]) => num(lo, 0.0)?,
                    None => 0.0,
                };
                Axis::periodic(&c.name, start, p.value().map_err(|e| format!("coordinate '{}': {e}", c.name))?)
            }
            (None, Some([lo, hi])) => Axis::new(&c.name, num(lo, f64::NEG_INFINITY)?, num(hi, f64::INFINITY)?),
            (None, None) => return Err(format!("coordinate '{}' needs a range or a period", c.name)),
        };
        axes.push(axis);
    }
    let asym = axes
        .iter()
        .position(|a| a.name == spec.asymptotic)
        .ok_or_else(|| format!("asymptotic coordinate '{}' is not declared", spec.asymptotic))?;
    Chart::new(axes, asym, spec.direction, spec.cross_section).map_err(|e| e.to_string())
}

fn component_index(chart: &Chart, s: &str) -> Result<usize, String> {
    let s = s.trim();
    chart
        .index_of(s)
        .or_else(|| s.parse::<usize>().ok().filter(|&i| i < chart.dim()))
        .ok_or_else(|| format!("unknown coordinate '{s}'"))
}

fn build_components(
    chart: &Chart,
    comps: &BTreeMap<String, String>,
    params: &BTreeMap<String, f64>,
) -> Result<MetricField, String> {
    let names = chart.names();
    let pnames: Vec<&str> = params.keys().map(String::as_str).collect();
    let vocab = std::sync::Arc::new(Vocabulary::new(&names, &pnames));
    let bound: HashMap<String, f64> = params.clone().into_iter().collect();
    let mut sources = BTreeMap::new();
    let mut parsed = BTreeMap::new();
    for (key, src) in comps {
        let (a, b) = key.split_once(',').ok_or_else(|| format!("key \"{key}\" is not of the form \"i,j\""))?;
        let (i, j) = (component_index(chart, a)?, component_index(chart, b)?);
        let (i, j) = (i.min(j), i.max(j));
        if sources.insert((i, j), src.clone()).is_some() {
            return Err(format!("component ({}, {}) given twice", names[i], names[j]));
        }
        let e = parse_with(src, vocab.clone())
            .and_then(|e| e.bind(&bound))
            .map_err(|e| format!("\"{key}\": {e}"))?;
        parsed.insert((i, j), e);
    }
    let n = chart.dim();
    let mut out = Vec::with_capacity(n * (n + 1) / 2);
    for i in 0..n {
        for j in i..n {
            let e = match parsed.remove(&(i, j)) {
                Some(e) => e,
                None => parse_with("0", std::sync::Arc::new(Vocabulary::new(&names, &[]))).map_err(|e| e.to_string())?,
            };
            out.push(e);
        }
    }
    MetricField::analytic(chart.clone(), out).map_err(|e| e.to_string())
}
