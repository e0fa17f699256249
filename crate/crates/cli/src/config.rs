//! Run configurations in a flat `key = value` grammar with dotted keys.
//!
//! ```text
//! line   := blank | '#' comment | key '=' value
//! value  := scalar | '[' scalar (',' scalar)* ']'
//!         | 'linspace(' a ',' b ',' n ')' | 'logspace(' a ',' b ',' n ')'
//! ```
//!
//! `logspace` takes decade exponents. A file that contains any line starting
//! with `#!` is read as the metadata header of a previous output. Only the
//! `#!` lines are parsed then, and `meta.*` and `summary.*` keys are skipped.
//! Each key may appear at most once.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;

use catarray::model::{self, KerrArrayParams, ModelInstance, ModelKind, Truncations, TwoPhotonArrayParams};
use catarray::solver::{EvolveMethod, EvolveOptions, DEFAULT_KERNEL_TOL};
use catarray::states::Parity;
use catarray::wigner::{Quadrature, DEFAULT_POINTS};

/// Field-level configuration error.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfigError {
    pub key: String,
    pub message: String,
}

impl ConfigError {
    fn new(key: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError {
            key: key.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.key, self.message)
    }
}

impl std::error::Error for ConfigError {}

type CResult<T> = std::result::Result<T, ConfigError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Task {
    Steady,
    Gap,
    Evolve,
    Wigner,
    Conserved,
    ZenoCompare,
}

impl Task {
    pub const ALL: [Task; 6] = [
        Task::Steady,
        Task::Gap,
        Task::Evolve,
        Task::Wigner,
        Task::Conserved,
        Task::ZenoCompare,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Task::Steady => "steady",
            Task::Gap => "gap",
            Task::Evolve => "evolve",
            Task::Wigner => "wigner",
            Task::Conserved => "conserved",
            Task::ZenoCompare => "zeno-compare",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Task::ALL.into_iter().find(|t| t.name() == s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn name(&self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "csv" => Some(Format::Csv),
            "json" => Some(Format::Json),
            _ => None,
        }
    }
}

/// Model parameters that can be fixed or swept.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Param {
    N,
    /// U for the Kerr models, η for the two-photon models.
    Unit,
    G,
    PhiIndex,
    Gamma,
    Kappa,
    MPhi,
    MD,
}

impl Param {
    fn is_rate(&self) -> bool {
        matches!(self, Param::G | Param::Gamma | Param::Kappa)
    }

    fn is_integer(&self) -> bool {
        matches!(self, Param::N | Param::PhiIndex | Param::MPhi | Param::MD)
    }

    fn base_name(&self, unit: &str) -> String {
        match self {
            Param::N => "N".into(),
            Param::Unit => unit.into(),
            Param::G => "G".into(),
            Param::PhiIndex => "phi_index".into(),
            Param::Gamma => "gamma".into(),
            Param::Kappa => "kappa".into(),
            Param::MPhi => "M_phi".into(),
            Param::MD => "M_d".into(),
        }
    }
}

/// Name of the rate unit of a model family.
pub fn unit_name(kind: ModelKind) -> &'static str {
    if kind.is_kerr() {
        "U"
    } else {
        "eta"
    }
}

/// Resolves a parameter name such as `gamma_over_U` to (parameter, scaled by unit).
fn param_from_name(name: &str, kind: ModelKind) -> Option<(Param, bool)> {
    let unit = unit_name(kind);
    let (base, scaled) = match name.strip_suffix(&format!("_over_{unit}")) {
        Some(b) => (b, true),
        None => (name, false),
    };
    let p = match base {
        "N" => Param::N,
        "G" => Param::G,
        "phi_index" => Param::PhiIndex,
        "gamma" => Param::Gamma,
        "kappa" => Param::Kappa,
        "M_phi" => Param::MPhi,
        "M_d" => Param::MD,
        b if b == unit => Param::Unit,
        _ => return None,
    };
    if scaled && !p.is_rate() {
        return None;
    }
    Some((p, scaled))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Setting {
    pub value: f64,
    /// Value is given in units of U (or η).
    pub scaled: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sweep {
    pub param: Param,
    pub scaled: bool,
    pub values: Vec<f64>,
}

impl Sweep {
    pub fn key(&self, kind: ModelKind) -> String {
        let mut k = self.param.base_name(unit_name(kind));
        if self.scaled {
            k.push_str("_over_");
            k.push_str(unit_name(kind));
        }
        k
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum TimeGrid {
    Log { t0: f64, t1: f64, per_decade: usize },
    List(Vec<f64>),
}

impl TimeGrid {
    pub fn times(&self) -> Vec<f64> {
        match self {
            TimeGrid::Log { t0, t1, per_decade } => catarray::solver::log_time_grid(*t0, *t1, *per_decade),
            TimeGrid::List(v) => v.clone(),
        }
    }
}

/// State a trajectory starts from, or whose Wigner function is sampled.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StateChoice {
    Vacuum,
    Cat(Parity),
    /// Vacuum-seeded steady state.
    Steady,
}

impl StateChoice {
    pub fn name(&self) -> &'static str {
        match self {
            StateChoice::Vacuum => "vacuum",
            StateChoice::Cat(Parity::Even) => "cat+",
            StateChoice::Cat(Parity::Odd) => "cat-",
            StateChoice::Steady => "steady",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "vacuum" => Some(StateChoice::Vacuum),
            "cat+" => Some(StateChoice::Cat(Parity::Even)),
            "cat-" => Some(StateChoice::Cat(Parity::Odd)),
            "steady" => Some(StateChoice::Steady),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvolveSpec {
    pub grid: TimeGrid,
    pub initial: StateChoice,
    pub options: EvolveOptions,
}

fn method_name(m: EvolveMethod) -> &'static str {
    match m {
        EvolveMethod::Auto => "auto",
        EvolveMethod::Exact => "exact",
        EvolveMethod::RungeKutta => "rk45",
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WignerPath {
    Numeric,
    Analytic,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WignerSpec {
    pub state: StateChoice,
    /// (1-based site, quadrature) per varying axis.
    pub axes: Vec<(usize, Quadrature)>,
    pub points: usize,
    pub min: Option<f64>,
    pub max: Option<f64>,
    pub path: WignerPath,
    /// Sample in the frame rotated by the φ phase pattern.
    pub rotated: bool,
    /// Fixed (x, p) of sites off the slice, by 1-based site.
    pub pins: BTreeMap<usize, (f64, f64)>,
}

/// Truncation overrides; `None` picks the drive-dependent default.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct TruncSpec {
    pub m_phi: Option<usize>,
    pub m_d: Option<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub task: Task,
    pub kind: ModelKind,
    pub n: Option<usize>,
    pub unit: f64,
    pub g: Option<Setting>,
    pub phi_index: Option<usize>,
    pub gamma: Option<Setting>,
    pub kappa: Setting,
    pub trunc: TruncSpec,
    pub sweeps: Vec<Sweep>,
    pub evolve: Option<EvolveSpec>,
    pub wigner: Option<WignerSpec>,
    pub kernel_tol: f64,
    pub format: Format,
}

/// One fully resolved sweep point.
#[derive(Clone, Debug, PartialEq)]
pub struct Point {
    pub n: usize,
    pub unit: f64,
    pub g: f64,
    pub phi_index: usize,
    pub gamma: f64,
    pub kappa: f64,
    pub trunc: Truncations,
}

impl Point {
    pub fn phi(&self) -> f64 {
        2.0 * PI * self.phi_index as f64 / self.n as f64
    }

    pub fn kerr(&self) -> KerrArrayParams {
        KerrArrayParams {
            n: self.n,
            u: self.unit,
            g: self.g,
            phi: self.phi(),
            gamma: self.gamma,
            kappa: self.kappa,
        }
    }

    pub fn twophoton(&self) -> TwoPhotonArrayParams {
        TwoPhotonArrayParams {
            n: self.n,
            eta: self.unit,
            g: self.g,
            phi: self.phi(),
            gamma: self.gamma,
            kappa: self.kappa,
        }
    }

    /// Builds the selected model at this point.
    pub fn build(&self, kind: ModelKind) -> catarray::Result<ModelInstance> {
        match kind {
            ModelKind::KerrArray => model::kerr_array(&self.kerr(), self.trunc),
            ModelKind::TwoPhotonArray => model::twophoton_array(&self.twophoton(), self.trunc),
            ModelKind::KerrZeno => model::effective_zeno_kerr(&self.kerr(), self.trunc.m_phi),
            ModelKind::TwoPhotonZeno => model::effective_zeno_twophoton(&self.twophoton(), self.trunc.m_phi),
        }
    }

    /// Parameter checks that do not need the model to be built.
    fn validate(&self, kind: ModelKind) -> catarray::Result<()> {
        if kind.is_kerr() {
            self.kerr().validate()?;
        } else {
            self.twophoton().validate()?;
        }
        if kind == ModelKind::KerrZeno {
            model::zeno_rate(&self.kerr())?;
        }
        if self.trunc.m_phi < 2 || self.trunc.m_d < 2 {
            return Err(catarray::Error::InvalidDimension(self.trunc.m_phi.min(self.trunc.m_d)));
        }
        Ok(())
    }
}

/// Default cat-mode truncation of the single-mode Zeno models.
pub const ZENO_M_PHI: usize = 40;

/// Canonical number text that parses back to the same f64.
pub fn num(v: f64) -> String {
    format!("{v:e}")
}

#[derive(Clone, Debug)]
enum Raw {
    Scalar(String),
    List(Vec<String>),
}

struct Entries {
    map: BTreeMap<String, (usize, Raw)>,
    order: Vec<String>,
}

impl Entries {
    fn take(&mut self, key: &str) -> Option<Raw> {
        self.map.remove(key).map(|(_, r)| r)
    }

    fn scalar(&mut self, key: &str) -> CResult<Option<String>> {
        match self.take(key) {
            None => Ok(None),
            Some(Raw::Scalar(s)) => Ok(Some(s)),
            Some(Raw::List(_)) => Err(ConfigError::new(key, "expected a single value, got a list")),
        }
    }

    fn float(&mut self, key: &str) -> CResult<Option<f64>> {
        self.scalar(key)?.map(|s| parse_float(key, &s)).transpose()
    }

    fn uint(&mut self, key: &str) -> CResult<Option<usize>> {
        self.scalar(key)?.map(|s| parse_uint(key, &s)).transpose()
    }

    fn list(&mut self, key: &str) -> CResult<Option<Vec<f64>>> {
        match self.take(key) {
            None => Ok(None),
            Some(Raw::Scalar(s)) => Ok(Some(vec![parse_float(key, &s)?])),
            Some(Raw::List(v)) => v.iter().map(|s| parse_float(key, s)).collect::<CResult<_>>().map(Some),
        }
    }
}

fn parse_float(key: &str, s: &str) -> CResult<f64> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(ConfigError::new(key, format!("`{s}` is not a finite number"))),
    }
}

fn parse_uint(key: &str, s: &str) -> CResult<usize> {
    let v = parse_float(key, s)?;
    if v < 0.0 || v.fract() != 0.0 || v > u32::MAX as f64 {
        return Err(ConfigError::new(key, format!("`{s}` is not a non-negative integer")));
    }
    Ok(v as usize)
}

fn parse_value(key: &str, text: &str) -> CResult<Raw> {
    let t = text.trim();
    if let Some(inner) = t.strip_prefix('[') {
        let inner = inner
            .strip_suffix(']')
            .ok_or_else(|| ConfigError::new(key, "unterminated list"))?;
        let items: Vec<String> = inner.split(',').map(|s| s.trim().to_string()).collect();
        if items.iter().any(String::is_empty) {
            return Err(ConfigError::new(key, "list must be non-empty with no empty items"));
        }
        return Ok(Raw::List(items));
    }
    for (name, log) in [("linspace", false), ("logspace", true)] {
        if let Some(args) = t.strip_prefix(name).and_then(|r| r.trim().strip_prefix('(')) {
            let args = args
                .strip_suffix(')')
                .ok_or_else(|| ConfigError::new(key, format!("unterminated {name}(...)")))?;
            let a: Vec<&str> = args.split(',').map(str::trim).collect();
            if a.len() != 3 {
                return Err(ConfigError::new(key, format!("{name} takes (start, stop, count)")));
            }
            let (lo, hi, n) = (parse_float(key, a[0])?, parse_float(key, a[1])?, parse_uint(key, a[2])?);
            if n == 0 {
                return Err(ConfigError::new(key, format!("{name} count must be positive")));
            }
            let vals = (0..n)
                .map(|i| {
                    let s = if n == 1 { lo } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 };
                    num(if log { 10f64.powf(s) } else { s })
                })
                .collect();
            return Ok(Raw::List(vals));
        }
    }
    if t.is_empty() {
        return Err(ConfigError::new(key, "missing value"));
    }
    Ok(Raw::Scalar(t.to_string()))
}

fn tokenize(text: &str) -> CResult<Entries> {
    let header_mode = text.lines().any(|l| l.starts_with("#!"));
    let mut map = BTreeMap::new();
    let mut order = Vec::new();
    for (no, line) in text.lines().enumerate() {
        let body = if header_mode {
            match line.strip_prefix("#!") {
                Some(b) => b,
                None => continue,
            }
        } else if line.trim_start().starts_with('#') {
            continue;
        } else {
            line
        };
        if body.trim().is_empty() {
            continue;
        }
        let (k, v) = body
            .split_once('=')
            .ok_or_else(|| ConfigError::new(format!("line {}", no + 1), format!("expected `key = value`, got `{}`", body.trim())))?;
        let key = k.trim().to_string();
        if key.is_empty() || key.contains(char::is_whitespace) {
            return Err(ConfigError::new(format!("line {}", no + 1), format!("invalid key `{}`", k.trim())));
        }
        if key.starts_with("meta.") || key.starts_with("summary.") {
            continue;
        }
        let raw = parse_value(&key, v)?;
        if let Some((prev, _)) = map.insert(key.clone(), (no + 1, raw)) {
            return Err(ConfigError::new(key, format!("duplicate key (first on line {prev})")));
        }
        order.push(key);
    }
    Ok(Entries { map, order })
}

fn positive(key: &str, v: f64) -> CResult<f64> {
    if v > 0.0 {
        Ok(v)
    } else {
        Err(ConfigError::new(key, format!("must be > 0, got {v}")))
    }
}

fn parse_axis(key: &str, s: &str) -> CResult<(usize, Quadrature)> {
    let (q, rest) = match s.chars().next() {
        Some('x') => (Quadrature::X, &s[1..]),
        Some('p') => (Quadrature::P, &s[1..]),
        _ => return Err(ConfigError::new(key, format!("axis `{s}` must look like x1 or p2"))),
    };
    let site = rest
        .parse::<usize>()
        .ok()
        .filter(|&j| j >= 1)
        .ok_or_else(|| ConfigError::new(key, format!("axis `{s}` needs a 1-based site number")))?;
    Ok((site, q))
}

impl RunConfig {
    /// Parses and validates a configuration for `task`. A `task` key in the
    /// text must agree with it.
    pub fn parse(text: &str, task: Task) -> CResult<Self> {
        let mut e = tokenize(text)?;
        if let Some(t) = e.scalar("task")? {
            if Task::parse(&t) != Some(task) {
                return Err(ConfigError::new("task", format!("config is for `{t}` but `{}` was requested", task.name())));
            }
        }
        let kind_s = e.scalar("model.kind")?.ok_or_else(|| ConfigError::new("model.kind", "required"))?;
        let kind = ModelKind::parse(&kind_s).ok_or_else(|| {
            ConfigError::new("model.kind", format!("unknown model `{kind_s}` (kerr-array, twophoton-array, kerr-zeno, twophoton-zeno)"))
        })?;
        let unit_key = format!("model.{}", unit_name(kind));
        let other_unit = if kind.is_kerr() { "model.eta" } else { "model.U" };
        if e.map.contains_key(other_unit) {
            return Err(ConfigError::new(other_unit, format!("not a parameter of {}", kind.name())));
        }
        let mut cfg = RunConfig {
            task,
            kind,
            n: None,
            unit: 1.0,
            g: None,
            phi_index: None,
            gamma: None,
            kappa: Setting { value: 0.0, scaled: true },
            trunc: TruncSpec::default(),
            sweeps: Vec::new(),
            evolve: None,
            wigner: None,
            kernel_tol: DEFAULT_KERNEL_TOL,
            format: Format::Csv,
        };
        cfg.n = e.uint("model.N")?;
        if let Some(u) = e.float(&unit_key)? {
            cfg.unit = positive(&unit_key, u)?;
        }
        match e.scalar("model.phi_index")? {
            Some(s) if s == "auto" => {}
            Some(s) => cfg.phi_index = Some(parse_uint("model.phi_index", &s)?),
            None => {}
        }
        for (param, slot) in [(Param::G, 0), (Param::Gamma, 1), (Param::Kappa, 2)] {
            let base = param.base_name("");
            let plain = format!("model.{base}");
            let scaled = format!("model.{base}_over_{}", unit_name(kind));
            let v = match (e.float(&plain)?, e.float(&scaled)?) {
                (Some(_), Some(_)) => {
                    return Err(ConfigError::new(scaled, format!("conflicts with {plain}")));
                }
                (Some(v), None) => Some(Setting { value: v, scaled: false }),
                (None, Some(v)) => Some(Setting { value: v, scaled: true }),
                (None, None) => None,
            };
            match (slot, v) {
                (0, v) => cfg.g = v,
                (1, v) => cfg.gamma = v,
                (_, Some(v)) => cfg.kappa = v,
                _ => {}
            }
        }
        for (key, slot) in [("truncation.M_phi", 0), ("truncation.M_d", 1)] {
            let v = match e.scalar(key)? {
                Some(s) if s == "auto" => None,
                Some(s) => Some(parse_uint(key, &s)?),
                None => None,
            };
            if slot == 0 {
                cfg.trunc.m_phi = v;
            } else {
                cfg.trunc.m_d = v;
            }
        }
        if let Some(t) = e.float("tolerance.kernel_tol")? {
            cfg.kernel_tol = positive("tolerance.kernel_tol", t)?;
        }
        if let Some(f) = e.scalar("output.format")? {
            cfg.format = Format::parse(&f).ok_or_else(|| ConfigError::new("output.format", format!("`{f}` is not csv or json")))?;
        }

        let sweep_keys: Vec<String> = e.order.iter().filter(|k| k.starts_with("sweep.")).cloned().collect();
        for key in sweep_keys {
            let name = &key["sweep.".len()..];
            let (param, scaled) = param_from_name(name, kind)
                .ok_or_else(|| ConfigError::new(key.as_str(), format!("unknown parameter `{name}` for {}", kind.name())))?;
            if cfg.sweeps.iter().any(|s| s.param == param) {
                return Err(ConfigError::new(key.as_str(), "parameter is already swept"));
            }
            let values = e.list(&key)?.expect("present");
            if param.is_integer() {
                for v in &values {
                    parse_uint(&key, &num(*v))?;
                }
            }
            cfg.sweeps.push(Sweep { param, scaled, values });
        }

        cfg.evolve = cfg.parse_evolve(&mut e)?;
        cfg.wigner = cfg.parse_wigner(&mut e)?;

        if let Some(key) = e.order.iter().find(|k| e.map.contains_key(*k)) {
            return Err(ConfigError::new(key.as_str(), "unknown key"));
        }
        cfg.check_required()?;
        Ok(cfg)
    }

    fn swept(&self, p: Param) -> bool {
        self.sweeps.iter().any(|s| s.param == p)
    }

    fn parse_evolve(&self, e: &mut Entries) -> CResult<Option<EvolveSpec>> {
        let present = e.map.keys().any(|k| k.starts_with("evolve."));
        if !present && self.task != Task::Evolve {
            return Ok(None);
        }
        let grid = match (e.list("evolve.times")?, e.float("evolve.t0")?, e.float("evolve.t1")?) {
            (Some(_), Some(_), _) | (Some(_), _, Some(_)) => {
                return Err(ConfigError::new("evolve.times", "give either evolve.times or evolve.t0/evolve.t1"));
            }
            (Some(v), None, None) => {
                if v.windows(2).any(|w| w[1] <= w[0]) || v[0] < 0.0 {
                    return Err(ConfigError::new("evolve.times", "must be non-negative and strictly increasing"));
                }
                TimeGrid::List(v)
            }
            (None, Some(t0), Some(t1)) => {
                let t0 = positive("evolve.t0", t0)?;
                if t1 <= t0 {
                    return Err(ConfigError::new("evolve.t1", "must exceed evolve.t0"));
                }
                let per_decade = e.uint("evolve.per_decade")?.unwrap_or(20);
                if per_decade == 0 {
                    return Err(ConfigError::new("evolve.per_decade", "must be positive"));
                }
                TimeGrid::Log { t0, t1, per_decade }
            }
            (None, None, None) => {
                return Err(ConfigError::new("evolve.t1", "time grid required: evolve.t0 and evolve.t1, or evolve.times"));
            }
            (None, None, Some(_)) => return Err(ConfigError::new("evolve.t0", "required with evolve.t1")),
            (None, Some(_), None) => return Err(ConfigError::new("evolve.t1", "required with evolve.t0")),
        };
        if matches!(grid, TimeGrid::List(_)) && e.map.contains_key("evolve.per_decade") {
            return Err(ConfigError::new("evolve.per_decade", "only applies to evolve.t0/evolve.t1 grids"));
        }
        let initial = match e.scalar("evolve.initial")? {
            None => StateChoice::Vacuum,
            Some(s) => match StateChoice::parse(&s) {
                Some(c @ (StateChoice::Vacuum | StateChoice::Cat(_))) => c,
                _ => return Err(ConfigError::new("evolve.initial", format!("`{s}` is not vacuum, cat+ or cat-"))),
            },
        };
        let mut options = EvolveOptions::default();
        if let Some(m) = e.scalar("evolve.method")? {
            options.method = match m.as_str() {
                "auto" => EvolveMethod::Auto,
                "exact" => EvolveMethod::Exact,
                "rk45" => EvolveMethod::RungeKutta,
                _ => return Err(ConfigError::new("evolve.method", format!("`{m}` is not auto, exact or rk45"))),
            };
        }
        if let Some(v) = e.float("evolve.rtol")? {
            options.rtol = positive("evolve.rtol", v)?;
        }
        if let Some(v) = e.float("evolve.atol")? {
            options.atol = positive("evolve.atol", v)?;
        }
        if let Some(v) = e.float("evolve.trace_tol")? {
            options.trace_tol = positive("evolve.trace_tol", v)?;
        }
        Ok(Some(EvolveSpec { grid, initial, options }))
    }

    fn parse_wigner(&self, e: &mut Entries) -> CResult<Option<WignerSpec>> {
        let present = e.map.keys().any(|k| k.starts_with("wigner."));
        if !present && self.task != Task::Wigner {
            return Ok(None);
        }
        let axes: Vec<(usize, Quadrature)> = match e.take("wigner.axes") {
            None => return Err(ConfigError::new("wigner.axes", "required, e.g. [x1, x2]")),
            Some(Raw::Scalar(s)) => vec![parse_axis("wigner.axes", &s)?],
            Some(Raw::List(v)) => v.iter().map(|s| parse_axis("wigner.axes", s)).collect::<CResult<_>>()?,
        };
        if axes.is_empty() || axes.len() > 2 {
            return Err(ConfigError::new("wigner.axes", "one or two axes"));
        }
        let state = match e.scalar("wigner.state")? {
            None => StateChoice::Steady,
            Some(s) => match StateChoice::parse(&s) {
                Some(c @ (StateChoice::Steady | StateChoice::Cat(_))) => c,
                _ => return Err(ConfigError::new("wigner.state", format!("`{s}` is not steady, cat+ or cat-"))),
            },
        };
        let points = e.uint("wigner.points")?.unwrap_or(DEFAULT_POINTS);
        if points == 0 {
            return Err(ConfigError::new("wigner.points", "must be positive"));
        }
        let (min, max) = (e.float("wigner.min")?, e.float("wigner.max")?);
        if min.is_some() != max.is_some() {
            return Err(ConfigError::new("wigner.min", "wigner.min and wigner.max go together"));
        }
        if let (Some(a), Some(b)) = (min, max) {
            if b < a {
                return Err(ConfigError::new("wigner.max", "must not be below wigner.min"));
            }
        }
        let path = match e.scalar("wigner.method")?.as_deref() {
            None | Some("numeric") => WignerPath::Numeric,
            Some("analytic") => WignerPath::Analytic,
            Some(s) => return Err(ConfigError::new("wigner.method", format!("`{s}` is not numeric or analytic"))),
        };
        let rotated = match e.scalar("wigner.frame")?.as_deref() {
            None | Some("lab") => false,
            Some("rotated") => true,
            Some(s) => return Err(ConfigError::new("wigner.frame", format!("`{s}` is not lab or rotated"))),
        };
        let mut pins = BTreeMap::new();
        let pin_keys: Vec<String> = e.order.iter().filter(|k| k.starts_with("wigner.pin.")).cloned().collect();
        for key in pin_keys {
            let site = key["wigner.pin.".len()..]
                .parse::<usize>()
                .ok()
                .filter(|&j| j >= 1)
                .ok_or_else(|| ConfigError::new(key.as_str(), "pin key needs a 1-based site number"))?;
            let v = e.list(&key)?.expect("present");
            if v.len() != 2 {
                return Err(ConfigError::new(key.as_str(), "pin value is [x, p]"));
            }
            if axes.iter().any(|a| a.0 == site) {
                return Err(ConfigError::new(key.as_str(), "site is on a slice axis"));
            }
            pins.insert(site, (v[0], v[1]));
        }
        Ok(Some(WignerSpec {
            state,
            axes,
            points,
            min,
            max,
            path,
            rotated,
            pins,
        }))
    }

    fn check_required(&self) -> CResult<()> {
        if self.g.is_none() && !self.swept(Param::G) {
            return Err(ConfigError::new(format!("model.G_over_{}", unit_name(self.kind)), "required (fixed or swept)"));
        }
        if self.gamma.is_none() && !self.swept(Param::Gamma) {
            return Err(ConfigError::new(format!("model.gamma_over_{}", unit_name(self.kind)), "required (fixed or swept)"));
        }
        if self.task == Task::ZenoCompare {
            if self.kind != ModelKind::KerrArray {
                return Err(ConfigError::new("model.kind", "zeno-compare compares a kerr-array against its Zeno reduction"));
            }
            if self.sweeps.len() != 1 || self.sweeps[0].param != Param::Gamma {
                return Err(ConfigError::new("sweep", "zeno-compare needs exactly one sweep, over gamma"));
            }
        }
        if let Some(w) = &self.wigner {
            let max_site = self.axes_bound();
            for site in w.axes.iter().map(|a| a.0).chain(w.pins.keys().copied()) {
                if site > max_site {
                    return Err(ConfigError::new("wigner.axes", format!("site {site} exceeds N = {max_site}")));
                }
            }
        }
        // Resolving every point surfaces parameter errors before any solve.
        for (i, p) in self.points().into_iter().enumerate() {
            let p = p?;
            p.validate(self.kind)
                .map_err(|err| ConfigError::new(format!("sweep point {i}"), err.to_string()))?;
        }
        Ok(())
    }

    /// Smallest N over the sweep.
    fn axes_bound(&self) -> usize {
        match self.sweeps.iter().find(|s| s.param == Param::N) {
            Some(s) => s.values.iter().fold(usize::MAX, |a, &v| a.min(v as usize)),
            None => self.n.unwrap_or(3),
        }
    }

    fn setting(&self, p: Param) -> Option<Setting> {
        match p {
            Param::G => self.g,
            Param::Gamma => self.gamma,
            Param::Kappa => Some(self.kappa),
            _ => None,
        }
    }

    /// Number of sweep points.
    pub fn n_points(&self) -> usize {
        self.sweeps.iter().map(|s| s.values.len()).product()
    }

    /// Sweep values of point `i`, first axis outermost.
    pub fn sweep_values(&self, mut i: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.sweeps.len()];
        for (a, s) in self.sweeps.iter().enumerate().rev() {
            out[a] = s.values[i % s.values.len()];
            i /= s.values.len();
        }
        out
    }

    pub fn point(&self, i: usize) -> CResult<Point> {
        let vals = self.sweep_values(i);
        let get = |p: Param| self.sweeps.iter().position(|s| s.param == p).map(|a| (vals[a], self.sweeps[a].scaled));
        let n = get(Param::N).map(|v| v.0 as usize).or(self.n).unwrap_or(3);
        let unit = match get(Param::Unit) {
            Some((u, _)) => positive(&format!("sweep.{}", unit_name(self.kind)), u)?,
            None => self.unit,
        };
        let rate = |p: Param| -> Option<f64> {
            let (v, scaled) = get(p).or_else(|| self.setting(p).map(|s| (s.value, s.scaled)))?;
            Some(if scaled { v * unit } else { v })
        };
        let g = rate(Param::G).expect("checked");
        let base_trunc = if self.kind.is_zeno() {
            Truncations {
                m_phi: ZENO_M_PHI,
                m_d: 3,
            }
        } else {
            Truncations::for_drive(g / unit)
        };
        let m_phi = get(Param::MPhi).map(|v| v.0 as usize).or(self.trunc.m_phi).unwrap_or(base_trunc.m_phi);
        let m_d = get(Param::MD).map(|v| v.0 as usize).or(self.trunc.m_d).unwrap_or(base_trunc.m_d);
        Ok(Point {
            n,
            unit,
            g,
            phi_index: get(Param::PhiIndex).map(|v| v.0 as usize).or(self.phi_index).unwrap_or(n),
            gamma: rate(Param::Gamma).expect("checked"),
            kappa: rate(Param::Kappa).unwrap_or(0.0),
            trunc: Truncations { m_phi, m_d },
        })
    }

    pub fn points(&self) -> Vec<CResult<Point>> {
        (0..self.n_points()).map(|i| self.point(i)).collect()
    }

    /// Resolved configuration as canonical `key = value` pairs. Parsing the
    /// echo reproduces this configuration.
    pub fn echo(&self) -> Vec<(String, String)> {
        let unit = unit_name(self.kind);
        let mut out: Vec<(String, String)> = Vec::new();
        let mut put = |k: &str, v: String| out.push((k.to_string(), v));
        put("task", self.task.name().into());
        put("model.kind", self.kind.name().into());
        if !self.swept(Param::N) {
            put("model.N", self.n.unwrap_or(3).to_string());
        }
        if !self.swept(Param::Unit) {
            put(&format!("model.{unit}"), num(self.unit));
        }
        if !self.swept(Param::PhiIndex) {
            put("model.phi_index", self.phi_index.map_or("auto".into(), |m| m.to_string()));
        }
        for p in [Param::G, Param::Gamma, Param::Kappa] {
            if self.swept(p) {
                continue;
            }
            if let Some(s) = self.setting(p) {
                let mut k = format!("model.{}", p.base_name(unit));
                if s.scaled {
                    k.push_str(&format!("_over_{unit}"));
                }
                put(&k, num(s.value));
            }
        }
        if !self.swept(Param::MPhi) {
            put("truncation.M_phi", self.trunc.m_phi.map_or("auto".into(), |m| m.to_string()));
        }
        if !self.swept(Param::MD) {
            put("truncation.M_d", self.trunc.m_d.map_or("auto".into(), |m| m.to_string()));
        }
        for s in &self.sweeps {
            let vals: Vec<String> = s
                .values
                .iter()
                .map(|&v| if s.param.is_integer() { (v as usize).to_string() } else { num(v) })
                .collect();
            put(&format!("sweep.{}", s.key(self.kind)), format!("[{}]", vals.join(", ")));
        }
        put("tolerance.kernel_tol", num(self.kernel_tol));
        if let (Task::Evolve, Some(ev)) = (self.task, &self.evolve) {
            match &ev.grid {
                TimeGrid::Log { t0, t1, per_decade } => {
                    put("evolve.t0", num(*t0));
                    put("evolve.t1", num(*t1));
                    put("evolve.per_decade", per_decade.to_string());
                }
                TimeGrid::List(v) => {
                    let vals: Vec<String> = v.iter().map(|&t| num(t)).collect();
                    put("evolve.times", format!("[{}]", vals.join(", ")));
                }
            }
            put("evolve.initial", ev.initial.name().into());
            put("evolve.method", method_name(ev.options.method).into());
            put("evolve.rtol", num(ev.options.rtol));
            put("evolve.atol", num(ev.options.atol));
            put("evolve.trace_tol", num(ev.options.trace_tol));
        }
        if let (Task::Wigner, Some(w)) = (self.task, &self.wigner) {
            put("wigner.state", w.state.name().into());
            let axes: Vec<String> = w.axes.iter().map(|(s, q)| format!("{}{s}", q.name())).collect();
            put("wigner.axes", format!("[{}]", axes.join(", ")));
            put("wigner.points", w.points.to_string());
            if let (Some(a), Some(b)) = (w.min, w.max) {
                put("wigner.min", num(a));
                put("wigner.max", num(b));
            }
            put(
                "wigner.method",
                match w.path {
                    WignerPath::Numeric => "numeric",
                    WignerPath::Analytic => "analytic",
                }
                .into(),
            );
            put("wigner.frame", if w.rotated { "rotated" } else { "lab" }.into());
            for (site, (x, p)) in &w.pins {
                put(&format!("wigner.pin.{site}"), format!("[{}, {}]", num(*x), num(*p)));
            }
        }
        put("output.format", self.format.name().into());
        out
    }
}
