//! Flat `section.key = value` run configuration.
//!
//! Every key of the file (and every `KDV_*` environment override) is checked
//! before anything runs, and all problems are reported together.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::PathBuf;

use kdv_core::{
    linear_multipliers, CompositionScheme, EquationSpec, GuardMode, InitialData, StepperConfig, SCHEME_NAMES,
};
use num_complex::Complex64;

/// Prefix of environment variables overriding config keys: `grid.N` is
/// overridden by `KDV_GRID_N`.
pub const ENV_PREFIX: &str = "KDV_";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Int,
    Float,
    Text,
    FloatList,
    IntList,
}

impl Kind {
    fn describe(self) -> &'static str {
        match self {
            Kind::Int => "an integer",
            Kind::Float => "a number",
            Kind::Text => "a string",
            Kind::FloatList => "a list of numbers",
            Kind::IntList => "a list of integers",
        }
    }
}

const KEYS: &[(&str, Kind)] = &[
    ("equation.preset", Kind::Text),
    ("equation.delta", Kind::Float),
    ("equation.m", Kind::Int),
    ("equation.gamma", Kind::Float),
    ("equation.r", Kind::Int),
    ("equation.q", Kind::Int),
    ("time.k", Kind::Float),
    ("time.T", Kind::Float),
    ("scheme.name", Kind::Text),
    ("solver.fp_tol", Kind::Float),
    ("solver.fp_max_iter", Kind::Int),
    ("solver.c0", Kind::Float),
    ("solver.guard", Kind::Text),
    ("grid.N", Kind::Int),
    ("initial.kind", Kind::Text),
    ("initial.amplitude", Kind::Float),
    ("initial.wavenumber", Kind::Int),
    ("initial.center", Kind::Float),
    ("initial.width", Kind::Float),
    ("initial.modes", Kind::Text),
    ("output.every", Kind::Int),
    ("output.dir", Kind::Text),
    ("study.k_list", Kind::FloatList),
    ("study.N_list", Kind::IntList),
    ("study.N_ref", Kind::Int),
    ("study.order_min", Kind::Float),
    ("study.order_max", Kind::Float),
];

/// Environment variable name for a config key.
pub fn env_name(key: &str) -> String {
    format!("{ENV_PREFIX}{}", key.replace('.', "_").to_uppercase())
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConfigIssue {
    Syntax { line: usize, text: String },
    UnknownKey { key: String, line: Option<usize> },
    Duplicate { key: String, line: usize },
    Type { key: String, expected: &'static str, got: String },
    Constraint { key: String, message: String },
    Missing { key: String },
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigIssue::Syntax { line, text } => write!(f, "line {line}: expected 'section.key = value', got '{text}'"),
            ConfigIssue::UnknownKey { key, line: Some(line) } => write!(f, "line {line}: unknown key '{key}'"),
            ConfigIssue::UnknownKey { key, line: None } => write!(f, "unknown key '{key}'"),
            ConfigIssue::Duplicate { key, line } => write!(f, "line {line}: duplicate key '{key}'"),
            ConfigIssue::Type { key, expected, got } => write!(f, "{key}: expected {expected}, got '{got}'"),
            ConfigIssue::Constraint { key, message } => write!(f, "{key}: {message}"),
            ConfigIssue::Missing { key } => write!(f, "missing required key '{key}'"),
        }
    }
}

/// All problems found in a configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigErrors(pub Vec<ConfigIssue>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} configuration error(s):", self.0.len())?;
        for issue in &self.0 {
            writeln!(f, "  {issue}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

/// Optional study keys; checked per study kind by [`RunConfig::require_study`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StudyKeys {
    pub k_list: Option<Vec<f64>>,
    pub n_list: Option<Vec<usize>>,
    pub n_ref: Option<usize>,
    pub order_min: Option<f64>,
    pub order_max: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub spec: EquationSpec,
    pub t_final: f64,
    pub scheme: CompositionScheme,
    pub solver: StepperConfig,
    pub modes: usize,
    pub initial: InitialData,
    pub output_every: usize,
    pub output_dir: PathBuf,
    pub study: StudyKeys,
}

#[derive(Debug, Clone)]
enum Value {
    Int(i64),
    Float(f64),
    Text(String),
    FloatList(Vec<f64>),
    IntList(Vec<i64>),
}

fn unquote(s: &str) -> &str {
    let s = s.trim();
    for q in ['"', '\''] {
        if s.len() >= 2 && s.starts_with(q) && s.ends_with(q) {
            return &s[1..s.len() - 1];
        }
    }
    s
}

fn list_items(raw: &str) -> Vec<&str> {
    let inner = raw.trim().trim_start_matches('[').trim_end_matches(']');
    inner
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .collect()
}

fn convert(key: &str, kind: Kind, raw: &str) -> Result<Value, ConfigIssue> {
    let mismatch = || ConfigIssue::Type {
        key: key.to_string(),
        expected: kind.describe(),
        got: raw.to_string(),
    };
    let text = unquote(raw);
    match kind {
        Kind::Int => text.parse().map(Value::Int).map_err(|_| mismatch()),
        Kind::Float => text
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .map(Value::Float)
            .ok_or_else(mismatch),
        Kind::Text => Ok(Value::Text(text.to_string())),
        Kind::FloatList => {
            let items = list_items(text);
            let parsed: Option<Vec<f64>> = items.iter().map(|s| s.parse().ok().filter(|v: &f64| v.is_finite())).collect();
            match parsed {
                Some(v) if !v.is_empty() => Ok(Value::FloatList(v)),
                _ => Err(mismatch()),
            }
        }
        Kind::IntList => {
            let parsed: Option<Vec<i64>> = list_items(text).iter().map(|s| s.parse().ok()).collect();
            match parsed {
                Some(v) if !v.is_empty() => Ok(Value::IntList(v)),
                _ => Err(mismatch()),
            }
        }
    }
}

/// Typed lookups that record every problem instead of stopping at the first.
struct Reader {
    values: BTreeMap<String, Value>,
    /// Keys given at all, including those whose value failed to convert.
    present: BTreeSet<String>,
    issues: Vec<ConfigIssue>,
}

impl Reader {
    fn constraint(&mut self, key: &str, message: impl Into<String>) {
        self.issues.push(ConfigIssue::Constraint {
            key: key.to_string(),
            message: message.into(),
        });
    }

    fn missing(&mut self, key: &str) {
        self.issues.push(ConfigIssue::Missing { key: key.to_string() });
    }

    fn has(&self, key: &str) -> bool {
        self.present.contains(key)
    }

    fn int(&self, key: &str) -> Option<i64> {
        match self.values.get(key) {
            Some(Value::Int(v)) => Some(*v),
            _ => None,
        }
    }

    fn float(&self, key: &str) -> Option<f64> {
        match self.values.get(key) {
            Some(Value::Float(v)) => Some(*v),
            Some(Value::Int(v)) => Some(*v as f64),
            _ => None,
        }
    }

    fn text(&self, key: &str) -> Option<String> {
        match self.values.get(key) {
            Some(Value::Text(v)) => Some(v.clone()),
            _ => None,
        }
    }

    /// Integer in `[min, max]`; `None` (after recording the issue) otherwise.
    fn bounded_int(&mut self, key: &str, min: i64, max: i64) -> Option<i64> {
        let v = self.int(key)?;
        if v < min || v > max {
            self.constraint(key, format!("must lie in [{min}, {max}] (got {v})"));
            return None;
        }
        Some(v)
    }

    fn required_int(&mut self, key: &str, min: i64, max: i64) -> Option<i64> {
        if !self.has(key) {
            self.missing(key);
            return None;
        }
        self.bounded_int(key, min, max)
    }

    fn positive_float(&mut self, key: &str) -> Option<f64> {
        let v = self.float(key)?;
        if v <= 0.0 {
            self.constraint(key, format!("must be > 0 (got {v})"));
            return None;
        }
        Some(v)
    }

    fn required_positive(&mut self, key: &str) -> Option<f64> {
        if !self.has(key) {
            self.missing(key);
            return None;
        }
        self.positive_float(key)
    }
}

/// Parses and validates a configuration, without environment overrides.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigErrors> {
    parse_config_with_env(text, |_| None)
}

/// Parses a configuration, giving `env(name)` the chance to override each key.
pub fn parse_config_with_env(text: &str, env: impl Fn(&str) -> Option<String>) -> Result<RunConfig, ConfigErrors> {
    let mut issues = Vec::new();
    let mut raw: BTreeMap<String, (String, Option<usize>)> = BTreeMap::new();

    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            issues.push(ConfigIssue::Syntax {
                line: line_no,
                text: content.to_string(),
            });
            continue;
        };
        let key = key.trim();
        if !key.contains('.') || key.contains(char::is_whitespace) || value.trim().is_empty() {
            issues.push(ConfigIssue::Syntax {
                line: line_no,
                text: content.to_string(),
            });
            continue;
        }
        if !KEYS.iter().any(|(k, _)| *k == key) {
            issues.push(ConfigIssue::UnknownKey {
                key: key.to_string(),
                line: Some(line_no),
            });
            continue;
        }
        if raw.contains_key(key) {
            issues.push(ConfigIssue::Duplicate {
                key: key.to_string(),
                line: line_no,
            });
            continue;
        }
        raw.insert(key.to_string(), (value.trim().to_string(), Some(line_no)));
    }
    for (key, _) in KEYS {
        if let Some(v) = env(&env_name(key)) {
            raw.insert(key.to_string(), (v, None));
        }
    }

    let mut values = BTreeMap::new();
    for (key, (value, _)) in &raw {
        let kind = KEYS.iter().find(|(k, _)| k == key).map(|(_, kind)| *kind).expect("known key");
        match convert(key, kind, value) {
            Ok(v) => {
                values.insert(key.clone(), v);
            }
            Err(issue) => issues.push(issue),
        }
    }

    let present = raw.keys().cloned().collect();
    let mut r = Reader { values, present, issues };
    let config = build(&mut r);
    if r.issues.is_empty() {
        Ok(config.expect("no issues recorded"))
    } else {
        Err(ConfigErrors(r.issues))
    }
}

fn build(r: &mut Reader) -> Option<RunConfig> {
    let spec = read_equation(r);
    let modes = r.required_int("grid.N", 1, 1 << 20).map(|n| n as usize);
    let k = r.required_positive("time.k");
    let t_final = r.required_positive("time.T");
    if let (Some(k), Some(t)) = (k, t_final) {
        if kdv_core::step_count(t, k).is_err() {
            r.constraint("time.T", format!("must be an integer multiple of time.k = {k} (got {t})"));
        }
    }
    let scheme = read_scheme(r);
    let solver = read_solver(r, k.unwrap_or(1.0));
    let initial = read_initial(r);
    let output_every = if r.has("output.every") {
        r.bounded_int("output.every", 1, i64::MAX).map(|v| v as usize)
    } else {
        Some(1)
    };
    let output_dir = PathBuf::from(r.text("output.dir").unwrap_or_else(|| ".".to_string()));
    let study = read_study(r);

    if let (Some(spec), Some(n)) = (spec, modes) {
        if let Err(e) = linear_multipliers(&spec, n) {
            r.constraint("grid.N", e.to_string());
        }
    }

    Some(RunConfig {
        spec: spec?,
        t_final: t_final?,
        scheme: scheme?,
        solver: solver?,
        modes: modes?,
        initial: initial?,
        output_every: output_every?,
        output_dir,
        study: study?,
    })
}

fn read_equation(r: &mut Reader) -> Option<EquationSpec> {
    const EXPLICIT: [&str; 5] = ["equation.delta", "equation.m", "equation.gamma", "equation.r", "equation.q"];
    if r.has("equation.preset") {
        let preset = r.text("equation.preset")?;
        let mut ok = true;
        for key in EXPLICIT {
            if r.has(key) {
                r.constraint(key, "cannot be combined with equation.preset");
                ok = false;
            }
        }
        return match preset.as_str() {
            "kdv" => ok.then(EquationSpec::kdv),
            other => {
                r.constraint("equation.preset", format!("unknown preset '{other}' (valid: kdv)"));
                None
            }
        };
    }
    let delta = r.required_positive("equation.delta");
    let m = r.required_int("equation.m", 1, 16);
    let q = r.required_int("equation.q", 1, 16);
    let gamma = match r.float("equation.gamma") {
        Some(g) if g < 0.0 => {
            r.constraint("equation.gamma", format!("must be >= 0 (got {g})"));
            None
        }
        Some(g) => Some(g),
        None if r.has("equation.gamma") => None,
        None => Some(0.0),
    };
    let rr = if r.has("equation.r") {
        r.bounded_int("equation.r", 0, 15)
    } else {
        Some(0)
    };
    if let (Some(m), Some(rv)) = (m, rr) {
        if rv >= m {
            r.constraint("equation.r", format!("must satisfy r < m (got r={rv}, m={m})"));
            return None;
        }
    }
    EquationSpec::new(delta?, m? as u32, gamma?, rr? as u32, q? as u32).ok()
}

fn read_scheme(r: &mut Reader) -> Option<CompositionScheme> {
    let Some(name) = r.text("scheme.name") else {
        if !r.has("scheme.name") {
            r.missing("scheme.name");
        }
        return None;
    };
    match CompositionScheme::by_name(&name) {
        Ok(s) => Some(s),
        Err(_) => {
            r.constraint(
                "scheme.name",
                format!("unknown scheme '{name}' (valid: {})", SCHEME_NAMES.join(", ")),
            );
            None
        }
    }
}

fn read_solver(r: &mut Reader, k: f64) -> Option<StepperConfig> {
    let mut cfg = StepperConfig::new(k);
    let mut ok = true;
    if r.has("solver.fp_tol") {
        match r.float("solver.fp_tol") {
            Some(t) if t > 0.0 && t < 1.0 => cfg.fp_tol = t,
            Some(t) => {
                r.constraint("solver.fp_tol", format!("must lie in (0, 1) (got {t})"));
                ok = false;
            }
            None => ok = false,
        }
    }
    if r.has("solver.fp_max_iter") {
        match r.bounded_int("solver.fp_max_iter", 2, 1 << 20) {
            Some(v) => cfg.fp_max_iter = v as usize,
            None => ok = false,
        }
    }
    if r.has("solver.c0") {
        match r.positive_float("solver.c0") {
            Some(v) => cfg.c0_estimate = v,
            None => ok = false,
        }
    }
    if let Some(g) = r.text("solver.guard") {
        match GuardMode::parse(&g) {
            Some(mode) => cfg.guard_mode = mode,
            None => {
                r.constraint(
                    "solver.guard",
                    format!("unknown guard mode '{g}' (valid: {})", GuardMode::NAMES.join(", ")),
                );
                ok = false;
            }
        }
    }
    ok.then_some(cfg)
}

fn parse_modes(text: &str) -> Result<Vec<(u32, Complex64)>, String> {
    let mut out = Vec::new();
    for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let parts: Vec<&str> = item.split(':').map(str::trim).collect();
        let (j, re, im) = match parts.as_slice() {
            [j, re] => (*j, *re, "0"),
            [j, re, im] => (*j, *re, *im),
            _ => return Err(format!("entry '{item}' is not j:re[:im]")),
        };
        let j: u32 = j.parse().map_err(|_| format!("mode index '{j}' is not a nonnegative integer"))?;
        let re: f64 = re.parse().map_err(|_| format!("'{re}' is not a number"))?;
        let im: f64 = im.parse().map_err(|_| format!("'{im}' is not a number"))?;
        if j == 0 && im != 0.0 {
            return Err("mode 0 must be real".to_string());
        }
        out.push((j, Complex64::new(re, im)));
    }
    if out.is_empty() {
        return Err("no modes given".to_string());
    }
    Ok(out)
}

fn read_initial(r: &mut Reader) -> Option<InitialData> {
    let Some(kind) = r.text("initial.kind") else {
        if !r.has("initial.kind") {
            r.missing("initial.kind");
        }
        return None;
    };
    let allowed: &[&str] = match kind.as_str() {
        "cosine" => &["initial.amplitude", "initial.wavenumber"],
        "gaussian_periodic" => &["initial.amplitude", "initial.center", "initial.width"],
        "modes" => &["initial.modes"],
        other => {
            r.constraint(
                "initial.kind",
                format!("unknown kind '{other}' (valid: cosine, gaussian_periodic, modes)"),
            );
            return None;
        }
    };
    let mut ok = true;
    for key in ["initial.amplitude", "initial.wavenumber", "initial.center", "initial.width", "initial.modes"] {
        if r.has(key) && !allowed.contains(&key) {
            r.constraint(key, format!("not used by initial.kind = {kind}"));
            ok = false;
        }
    }
    let amplitude = r.float("initial.amplitude").unwrap_or(1.0);
    let data = match kind.as_str() {
        "cosine" => {
            let w = if r.has("initial.wavenumber") {
                r.bounded_int("initial.wavenumber", 0, u32::MAX as i64)? as u32
            } else {
                1
            };
            InitialData::Cosine { amplitude, wavenumber: w }
        }
        "gaussian_periodic" => {
            let width = if r.has("initial.width") {
                r.positive_float("initial.width")?
            } else {
                r.missing("initial.width");
                return None;
            };
            InitialData::GaussianPeriodic {
                amplitude,
                center: r.float("initial.center").unwrap_or(0.0),
                width,
            }
        }
        _ => {
            let Some(text) = r.text("initial.modes") else {
                r.missing("initial.modes");
                return None;
            };
            match parse_modes(&text) {
                Ok(list) => InitialData::Modes(list),
                Err(msg) => {
                    r.constraint("initial.modes", msg);
                    return None;
                }
            }
        }
    };
    ok.then_some(data)
}

fn read_study(r: &mut Reader) -> Option<StudyKeys> {
    let mut keys = StudyKeys::default();
    let mut ok = true;
    if let Some(Value::FloatList(list)) = r.values.get("study.k_list").cloned() {
        if list.iter().any(|k| *k <= 0.0) {
            r.constraint("study.k_list", "entries must be > 0");
            ok = false;
        } else if list.windows(2).any(|w| w[1] >= w[0]) {
            r.constraint("study.k_list", "must be strictly decreasing");
            ok = false;
        } else {
            keys.k_list = Some(list);
        }
    }
    if let Some(Value::IntList(list)) = r.values.get("study.N_list").cloned() {
        if list.iter().any(|n| *n < 1) {
            r.constraint("study.N_list", "entries must be >= 1");
            ok = false;
        } else if list.windows(2).any(|w| w[1] <= w[0]) {
            r.constraint("study.N_list", "must be strictly increasing");
            ok = false;
        } else {
            keys.n_list = Some(list.into_iter().map(|n| n as usize).collect());
        }
    }
    if r.has("study.N_ref") {
        keys.n_ref = r.bounded_int("study.N_ref", 2, 1 << 20).map(|n| n as usize);
        ok &= keys.n_ref.is_some();
    }
    keys.order_min = r.float("study.order_min");
    keys.order_max = r.float("study.order_max");
    if let (Some(lo), Some(hi)) = (keys.order_min, keys.order_max) {
        if lo > hi {
            r.constraint("study.order_min", format!("exceeds study.order_max ({lo} > {hi})"));
            ok = false;
        }
    }
    ok.then_some(keys)
}

impl RunConfig {
    /// Checks the keys a study of `kind` needs.
    pub fn require_study(&self, kind: kdv_core::StudyKind) -> Result<(), ConfigErrors> {
        use kdv_core::StudyKind::*;
        let mut issues = Vec::new();
        match kind {
            Temporal | Local => match &self.study.k_list {
                None => issues.push(ConfigIssue::Missing {
                    key: "study.k_list".to_string(),
                }),
                Some(list) if list.len() < 2 => issues.push(ConfigIssue::Constraint {
                    key: "study.k_list".to_string(),
                    message: "needs at least 2 step sizes".to_string(),
                }),
                Some(list) if kind == Temporal => {
                    for k in list {
                        if kdv_core::step_count(self.t_final, *k).is_err() {
                            issues.push(ConfigIssue::Constraint {
                                key: "study.k_list".to_string(),
                                message: format!("time.T = {} is not a multiple of {k}", self.t_final),
                            });
                        }
                    }
                }
                Some(_) => {}
            },
            Spatial => match &self.study.n_list {
                None => issues.push(ConfigIssue::Missing {
                    key: "study.N_list".to_string(),
                }),
                Some(list) => {
                    if list.len() < 2 {
                        issues.push(ConfigIssue::Constraint {
                            key: "study.N_list".to_string(),
                            message: "needs at least 2 degrees".to_string(),
                        });
                    }
                    let max = list.iter().copied().max().unwrap_or(0);
                    let n_ref = self.study.n_ref.unwrap_or(2 * max);
                    if n_ref <= max {
                        issues.push(ConfigIssue::Constraint {
                            key: "study.N_ref".to_string(),
                            message: format!("must exceed max(study.N_list) = {max}"),
                        });
                    }
                    if let Err(e) = linear_multipliers(&self.spec, n_ref) {
                        issues.push(ConfigIssue::Constraint {
                            key: "study.N_ref".to_string(),
                            message: e.to_string(),
                        });
                    }
                }
            },
        }
        if issues.is_empty() {
            Ok(())
        } else {
            Err(ConfigErrors(issues))
        }
    }
}
