//! INI-style run configuration and the bundled templates.
//!
//! ```ini
//! [fd]
//! type = greenshields
//! free_flow_speed = 20
//! jam_density = 0.14285714285714285
//!
//! [scenario]
//! k1 = 0.03571428571428571
//! lead_speed = 7.5
//! dn = 0.0625
//! dt_ratio = 0.35
//! duration = 30
//!
//! [run]
//! measure = shock
//! ```
//!
//! A `[run] template = <name>` line starts from a bundled template and
//! overrides its keys.

use std::collections::BTreeMap;
use std::path::PathBuf;

use kinwave::engine::{check_combination, Model, Scenario, Scheme};
use kinwave::{Diagram, FundamentalDiagram, Greenshields, Kerner, Triangular};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("cannot parse configuration: {0}")]
    Parse(String),
    #[error("unknown section [{0}]")]
    UnknownSection(String),
    #[error("unknown key {0}")]
    UnknownKey(String),
    #[error("key {0} given twice")]
    Duplicate(String),
    #[error("missing required keys: {}", .0.join(", "))]
    Missing(Vec<String>),
    #[error("invalid value for {key}: {message}")]
    Invalid { key: String, message: String },
    #[error("unknown template {0:?}; available: {}", template_names().join(", "))]
    UnknownTemplate(String),
}

type Result<T> = std::result::Result<T, ConfigError>;

/// How the time step is tied to `dn`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepSpec {
    Dt(f64),
    /// `dt = ratio * dn`, kept fixed across a sweep.
    Ratio(f64),
}

impl StepSpec {
    pub fn dt(&self, dn: f64) -> f64 {
        match self {
            StepSpec::Dt(dt) => *dt,
            StepSpec::Ratio(r) => r * dn,
        }
    }

    /// `dt / dn` at the given `dn`.
    pub fn ratio(&self, dn: f64) -> f64 {
        match self {
            StepSpec::Dt(dt) => dt / dn,
            StepSpec::Ratio(r) => *r,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Measure {
    None,
    Shock,
    Startup,
}

impl Measure {
    fn name(&self) -> &'static str {
        match self {
            Measure::None => "none",
            Measure::Shock => "shock",
            Measure::Startup => "startup",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilitySpec {
    /// m/s
    pub amplitude: f64,
    /// rad/s
    pub omega: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub scenario: Scenario,
    pub model: Model,
    pub scheme: Scheme,
    pub output_dir: PathBuf,
    pub sweep: Option<Vec<f64>>,
    pub step: StepSpec,
    /// Platoon extent in vehicles; `followers = round(platoon / dn)`.
    pub platoon: f64,
    pub record_every: usize,
    pub measure: Measure,
    pub startup_threshold: Option<f64>,
    /// Vehicles `N = 1..=display` are measured and compared in sweeps.
    pub display: usize,
    pub stability: Option<StabilitySpec>,
}

pub const DEFAULT_PLATOON: f64 = 50.0;
pub const DEFAULT_OUTPUT_DIR: &str = "kinwave-out";

impl RunSpec {
    /// The same run at another `dn`, with `dt / dn` and the platoon extent kept.
    pub fn with_dn(&self, dn: f64) -> RunSpec {
        let ratio = self.step.ratio(self.scenario.dn);
        let mut spec = self.clone();
        spec.scenario.dn = dn;
        spec.scenario.dt = ratio * dn;
        spec.scenario.followers = followers(self.platoon, dn);
        spec.step = StepSpec::Ratio(ratio);
        spec.sweep = None;
        spec
    }
}

fn followers(platoon: f64, dn: f64) -> usize {
    (platoon / dn).round().max(0.0) as usize
}

const ALLOWED: &[(&str, &[&str])] = &[
    (
        "fd",
        &[
            "type",
            "free_flow_speed",
            "jam_density",
            "wave_speed",
            "unit_length",
            "relaxation_time",
            "c1",
            "c2",
            "c3",
            "c4",
            "clamp",
        ],
    ),
    (
        "scenario",
        &[
            "k1",
            "lead_speed",
            "initial_speed",
            "dn",
            "dt",
            "dt_ratio",
            "duration",
            "platoon",
        ],
    ),
    (
        "run",
        &[
            "template",
            "model",
            "inner",
            "relaxation_time",
            "c0",
            "scheme",
            "sweep",
            "record_every",
            "measure",
            "startup_threshold",
            "display",
            "output_dir",
        ],
    ),
    ("stability", &["amplitude", "omega"]),
];

type Keys = BTreeMap<(String, String), String>;

fn parse_keys(text: &str) -> Result<Keys> {
    let ini = ini::Ini::load_from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
    let mut keys = Keys::new();
    for (section, props) in ini.iter() {
        let Some(section) = section else {
            if let Some((k, _)) = props.iter().next() {
                return Err(ConfigError::UnknownKey(format!("{k} (outside any section)")));
            }
            continue;
        };
        let allowed = ALLOWED
            .iter()
            .find(|(s, _)| *s == section)
            .ok_or_else(|| ConfigError::UnknownSection(section.to_string()))?
            .1;
        for (k, v) in props.iter() {
            let name = format!("{section}.{k}");
            if !allowed.contains(&k) {
                return Err(ConfigError::UnknownKey(name));
            }
            if keys.insert((section.to_string(), k.to_string()), v.trim().to_string()).is_some() {
                return Err(ConfigError::Duplicate(name));
            }
        }
    }
    Ok(keys)
}

/// Parses configuration text, expanding a template if one is named.
pub fn load_spec(text: &str) -> Result<RunSpec> {
    let overlay = parse_keys(text)?;
    let template = overlay.get(&("run".into(), "template".into())).cloned();
    let mut keys = match template {
        Some(name) => parse_keys(template_text(&name).ok_or(ConfigError::UnknownTemplate(name))?)?,
        None => Keys::new(),
    };
    let step_keys = [("scenario".to_string(), "dt".to_string()), ("scenario".to_string(), "dt_ratio".to_string())];
    if step_keys.iter().any(|k| overlay.contains_key(k)) {
        for k in &step_keys {
            keys.remove(k);
        }
    }
    keys.extend(overlay);
    keys.remove(&("run".into(), "template".into()));
    build(&keys)
}

/// Loads a config argument that is either a template name or a file path.
pub fn load_spec_arg(arg: &str) -> anyhow::Result<RunSpec> {
    if let Some(text) = template_text(arg) {
        return Ok(load_spec(text)?);
    }
    let text = std::fs::read_to_string(arg)
        .map_err(|e| anyhow::anyhow!("cannot read config {arg}: {e} (not a template name either)"))?;
    Ok(load_spec(&text)?)
}

struct Reader<'a> {
    keys: &'a Keys,
    missing: Vec<String>,
}

impl Reader<'_> {
    fn raw(&self, section: &str, key: &str) -> Option<&str> {
        self.keys
            .get(&(section.to_string(), key.to_string()))
            .map(String::as_str)
    }

    fn float(&mut self, section: &str, key: &str) -> Result<Option<f64>> {
        match self.raw(section, key) {
            None => Ok(None),
            Some(v) => v.parse::<f64>().map(Some).map_err(|_| ConfigError::Invalid {
                key: format!("{section}.{key}"),
                message: format!("{v:?} is not a number"),
            }),
        }
    }

    fn required(&mut self, section: &str, key: &str) -> Result<f64> {
        match self.float(section, key)? {
            Some(v) => Ok(v),
            None => {
                self.missing.push(format!("{section}.{key}"));
                Ok(f64::NAN)
            }
        }
    }

    fn usize(&mut self, section: &str, key: &str, default: usize) -> Result<usize> {
        match self.raw(section, key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| ConfigError::Invalid {
                key: format!("{section}.{key}"),
                message: format!("{v:?} is not a nonnegative integer"),
            }),
        }
    }
}

fn invalid(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key: key.into(),
        message: message.into(),
    }
}

fn build(keys: &Keys) -> Result<RunSpec> {
    let mut r = Reader {
        keys,
        missing: Vec::new(),
    };
    let fd_type = r.raw("fd", "type").map(str::to_string);
    if fd_type.is_none() {
        r.missing.push("fd.type".into());
    }
    let fd = match fd_type.as_deref() {
        Some("greenshields") => {
            let v = r.required("fd", "free_flow_speed")?;
            let k = r.required("fd", "jam_density")?;
            Some((v, None, k))
        }
        Some("triangular") => {
            let v = r.required("fd", "free_flow_speed")?;
            let w = r.required("fd", "wave_speed")?;
            let k = r.required("fd", "jam_density")?;
            Some((v, Some(w), k))
        }
        Some("kerner") => None,
        Some(other) => {
            return Err(invalid(
                "fd.type",
                format!("{other:?}; expected greenshields, triangular or kerner"),
            ))
        }
        None => None,
    };
    let kerner = if fd_type.as_deref() == Some("kerner") {
        let d = Kerner::default();
        let clamp = match r.raw("fd", "clamp") {
            None => d.clamp_nonnegative,
            Some("true") => true,
            Some("false") => false,
            Some(v) => return Err(invalid("fd.clamp", format!("{v:?}; expected true or false"))),
        };
        Some(Kerner {
            unit_length: r.float("fd", "unit_length")?.unwrap_or(d.unit_length),
            relaxation_time: r.float("fd", "relaxation_time")?.unwrap_or(d.relaxation_time),
            jam_density: r.float("fd", "jam_density")?.unwrap_or(d.jam_density),
            c1: r.float("fd", "c1")?.unwrap_or(d.c1),
            c2: r.float("fd", "c2")?.unwrap_or(d.c2),
            c3: r.float("fd", "c3")?.unwrap_or(d.c3),
            c4: r.float("fd", "c4")?.unwrap_or(d.c4),
            clamp_nonnegative: clamp,
        })
    } else {
        for key in ["unit_length", "relaxation_time", "c1", "c2", "c3", "c4", "clamp"] {
            if r.raw("fd", key).is_some() {
                return Err(ConfigError::UnknownKey(format!("fd.{key} (only for kerner)")));
            }
        }
        if fd_type.as_deref() == Some("greenshields") && r.raw("fd", "wave_speed").is_some() {
            return Err(ConfigError::UnknownKey("fd.wave_speed (only for triangular)".into()));
        }
        None
    };
    if kerner.is_some() && (r.raw("fd", "free_flow_speed").is_some() || r.raw("fd", "wave_speed").is_some()) {
        return Err(ConfigError::UnknownKey(
            "fd.free_flow_speed/wave_speed (not used by kerner)".into(),
        ));
    }

    let k1 = r.required("scenario", "k1")?;
    let lead_speed = r.required("scenario", "lead_speed")?;
    let dn = r.required("scenario", "dn")?;
    let duration = r.required("scenario", "duration")?;
    let initial_speed = r.float("scenario", "initial_speed")?;
    let platoon = r.float("scenario", "platoon")?.unwrap_or(DEFAULT_PLATOON);
    let step = match (r.float("scenario", "dt")?, r.float("scenario", "dt_ratio")?) {
        (Some(_), Some(_)) => {
            return Err(invalid("scenario.dt", "give either dt or dt_ratio, not both"))
        }
        (Some(dt), None) => StepSpec::Dt(dt),
        (None, Some(ratio)) => StepSpec::Ratio(ratio),
        (None, None) => {
            r.missing.push("scenario.dt or scenario.dt_ratio".into());
            StepSpec::Ratio(f64::NAN)
        }
    };

    let model_name = r.raw("run", "model").unwrap_or("nonstandard").to_string();
    let inner_name = r.raw("run", "inner").map(str::to_string);
    let relaxation_time = r.float("run", "relaxation_time")?;
    let c0 = r.float("run", "c0")?;
    let base = |name: &str, key: &str, r: &mut Reader| -> Result<Model> {
        Ok(match name {
            "nonstandard" => Model::NonstandardLwr,
            "phillips" => Model::PhillipsRelax {
                relaxation_time: relaxation_time.unwrap_or_else(|| {
                    r.missing.push("run.relaxation_time".into());
                    f64::NAN
                }),
            },
            "jwz" => Model::Jwz {
                relaxation_time: relaxation_time.unwrap_or_else(|| {
                    r.missing.push("run.relaxation_time".into());
                    f64::NAN
                }),
                c0: c0.unwrap_or_else(|| {
                    r.missing.push("run.c0".into());
                    f64::NAN
                }),
            },
            other => {
                return Err(invalid(
                    key,
                    format!("{other:?}; expected nonstandard, phillips or jwz"),
                ))
            }
        })
    };
    let model = match model_name.as_str() {
        "corrected1" | "corrected2" => {
            let inner_name = inner_name.clone().unwrap_or_else(|| {
                r.missing.push("run.inner".into());
                "nonstandard".into()
            });
            let inner = base(&inner_name, "run.inner", &mut r)?;
            if model_name == "corrected1" {
                Model::corrected1(inner)
            } else {
                Model::corrected2(inner)
            }
        }
        name => {
            if inner_name.is_some() {
                return Err(ConfigError::UnknownKey("run.inner (only for corrected models)".into()));
            }
            base(name, "run.model", &mut r)?
        }
    };
    if relaxation_time.is_some() && !uses_relaxation(&model) {
        return Err(ConfigError::UnknownKey("run.relaxation_time (model has none)".into()));
    }
    if c0.is_some() && !uses_c0(&model) {
        return Err(ConfigError::UnknownKey("run.c0 (only for jwz)".into()));
    }

    let scheme_name = r.raw("run", "scheme").unwrap_or("anisotropic");
    let scheme = Scheme::from_name(scheme_name).ok_or_else(|| {
        invalid(
            "run.scheme",
            format!(
                "{scheme_name:?}; expected one of {}",
                Scheme::ALL.map(|s| s.name()).join(", ")
            ),
        )
    })?;
    let sweep = match r.raw("run", "sweep") {
        None => None,
        Some(list) => Some(parse_dn_list(list).map_err(|m| invalid("run.sweep", m))?),
    };
    let record_every = r.usize("run", "record_every", 1)?;
    let display = r.usize("run", "display", 5)?;
    let measure = match r.raw("run", "measure").unwrap_or("none") {
        "none" => Measure::None,
        "shock" => Measure::Shock,
        "startup" => Measure::Startup,
        other => {
            return Err(invalid(
                "run.measure",
                format!("{other:?}; expected none, shock or startup"),
            ))
        }
    };
    let startup_threshold = r.float("run", "startup_threshold")?;
    let output_dir = PathBuf::from(r.raw("run", "output_dir").unwrap_or(DEFAULT_OUTPUT_DIR));
    let stability = if keys.keys().any(|(s, _)| s == "stability") {
        Some(StabilitySpec {
            amplitude: r.required("stability", "amplitude")?,
            omega: r.required("stability", "omega")?,
        })
    } else {
        None
    };

    if !r.missing.is_empty() {
        return Err(ConfigError::Missing(r.missing));
    }

    let fd: Diagram = match (fd, kerner) {
        (_, Some(k)) => {
            k.validate().map_err(|e| invalid("fd", e.to_string()))?;
            k.into()
        }
        (Some((v, None, k)), None) => Greenshields::new(v, k)
            .map_err(|e| invalid("fd", e.to_string()))?
            .into(),
        (Some((v, Some(w), k)), None) => Triangular::new(v, w, k)
            .map_err(|e| invalid("fd", e.to_string()))?
            .into(),
        (None, None) => unreachable!("fd.type checked above"),
    };

    let positive = |key: &str, v: f64| -> Result<()> {
        if v > 0.0 && v.is_finite() {
            Ok(())
        } else {
            Err(invalid(key, format!("must be positive, got {v}")))
        }
    };
    positive("scenario.dn", dn)?;
    match step {
        StepSpec::Dt(dt) => positive("scenario.dt", dt)?,
        StepSpec::Ratio(q) => positive("scenario.dt_ratio", q)?,
    }
    positive("scenario.platoon", platoon)?;
    if !(duration >= 0.0) || !duration.is_finite() {
        return Err(invalid("scenario.duration", format!("must be nonnegative, got {duration}")));
    }
    let jam = fd.jam_density();
    if !(k1 > 0.0) || k1 > jam * (1.0 + 1e-12) {
        return Err(invalid("scenario.k1", format!("{k1} outside (0, {jam}]")));
    }
    if !(lead_speed >= 0.0) || !lead_speed.is_finite() {
        return Err(invalid("scenario.lead_speed", format!("must be nonnegative, got {lead_speed}")));
    }
    if record_every == 0 {
        return Err(invalid("run.record_every", "must be at least 1"));
    }
    if let Some(t) = startup_threshold {
        positive("run.startup_threshold", t)?;
    }
    check_combination(&model, scheme).map_err(|e| match e {
        kinwave::Error::Unsupported(m) => invalid("run.scheme", m),
        other => invalid("run.model", other.to_string()),
    })?;

    let scenario = Scenario {
        fd,
        k1,
        lead_speed,
        followers: followers(platoon, dn),
        dn,
        dt: step.dt(dn),
        duration,
        initial_speed,
    };
    scenario
        .validate()
        .map_err(|e| invalid("scenario", e.to_string()))?;
    Ok(RunSpec {
        scenario,
        model,
        scheme,
        output_dir,
        sweep,
        step,
        platoon,
        record_every,
        measure,
        startup_threshold,
        display,
        stability,
    })
}

fn uses_relaxation(model: &Model) -> bool {
    match model {
        Model::NonstandardLwr => false,
        Model::PhillipsRelax { .. } | Model::Jwz { .. } => true,
        Model::Corrected1(m) | Model::Corrected2(m) => uses_relaxation(m),
    }
}

fn uses_c0(model: &Model) -> bool {
    match model {
        Model::Jwz { .. } => true,
        Model::Corrected1(m) | Model::Corrected2(m) => uses_c0(m),
        _ => false,
    }
}

/// Comma-separated positive, distinct `dn` values.
pub fn parse_dn_list(list: &str) -> std::result::Result<Vec<f64>, String> {
    let mut out: Vec<f64> = Vec::new();
    for item in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let v: f64 = item.parse().map_err(|_| format!("{item:?} is not a number"))?;
        if !(v > 0.0) || !v.is_finite() {
            return Err(format!("{v} is not positive"));
        }
        if out.contains(&v) {
            return Err(format!("{v} listed twice"));
        }
        out.push(v);
    }
    if out.is_empty() {
        return Err("empty list".into());
    }
    Ok(out)
}

/// Writes `spec` back as configuration text that loads to the same spec.
pub fn serialize(spec: &RunSpec) -> String {
    let mut s = String::from("[fd]\n");
    match spec.scenario.fd {
        Diagram::Greenshields(g) => {
            s += "type = greenshields\n";
            s += &format!("free_flow_speed = {:?}\njam_density = {:?}\n", g.free_flow_speed, g.jam_density);
        }
        Diagram::Triangular(t) => {
            s += "type = triangular\n";
            s += &format!(
                "free_flow_speed = {:?}\nwave_speed = {:?}\njam_density = {:?}\n",
                t.free_flow_speed, t.wave_speed, t.jam_density
            );
        }
        Diagram::Kerner(k) => {
            s += "type = kerner\n";
            s += &format!(
                "unit_length = {:?}\nrelaxation_time = {:?}\njam_density = {:?}\nc1 = {:?}\nc2 = {:?}\nc3 = {:?}\nc4 = {:?}\nclamp = {}\n",
                k.unit_length, k.relaxation_time, k.jam_density, k.c1, k.c2, k.c3, k.c4, k.clamp_nonnegative
            );
        }
    }
    let sc = &spec.scenario;
    s += "\n[scenario]\n";
    s += &format!("k1 = {:?}\nlead_speed = {:?}\n", sc.k1, sc.lead_speed);
    if let Some(v) = sc.initial_speed {
        s += &format!("initial_speed = {v:?}\n");
    }
    s += &format!("dn = {:?}\n", sc.dn);
    match spec.step {
        StepSpec::Dt(dt) => s += &format!("dt = {dt:?}\n"),
        StepSpec::Ratio(r) => s += &format!("dt_ratio = {r:?}\n"),
    }
    s += &format!("duration = {:?}\nplatoon = {:?}\n", sc.duration, spec.platoon);

    s += "\n[run]\n";
    let (name, inner) = match &spec.model {
        Model::Corrected1(m) => ("corrected1", Some(&**m)),
        Model::Corrected2(m) => ("corrected2", Some(&**m)),
        m => (m.name(), None),
    };
    s += &format!("model = {name}\n");
    if let Some(m) = inner {
        s += &format!("inner = {}\n", m.name());
    }
    match inner.unwrap_or(&spec.model) {
        Model::PhillipsRelax { relaxation_time } => s += &format!("relaxation_time = {relaxation_time:?}\n"),
        Model::Jwz { relaxation_time, c0 } => {
            s += &format!("relaxation_time = {relaxation_time:?}\nc0 = {c0:?}\n")
        }
        _ => {}
    }
    s += &format!("scheme = {}\n", spec.scheme.name());
    if let Some(list) = &spec.sweep {
        let items: Vec<String> = list.iter().map(|v| format!("{v:?}")).collect();
        s += &format!("sweep = {}\n", items.join(", "));
    }
    s += &format!(
        "record_every = {}\nmeasure = {}\ndisplay = {}\n",
        spec.record_every,
        spec.measure.name(),
        spec.display
    );
    if let Some(t) = spec.startup_threshold {
        s += &format!("startup_threshold = {t:?}\n");
    }
    s += &format!("output_dir = {}\n", spec.output_dir.display());
    if let Some(st) = spec.stability {
        s += &format!("\n[stability]\namplitude = {:?}\nomega = {:?}\n", st.amplitude, st.omega);
    }
    s
}

const GREENSHIELDS: &str = "[fd]\ntype = greenshields\nfree_flow_speed = 20\njam_density = 0.14285714285714285\n";
const TRIANGULAR: &str =
    "[fd]\ntype = triangular\nfree_flow_speed = 20\nwave_speed = 5\njam_density = 0.14285714285714285\n";

/// Bundled templates: `(name, description, body without [fd])`.
const TEMPLATES: &[(&str, &str, &str, &str)] = &[
    (
        "greenshields-shock-a",
        "Greenshields, k1 = K/4, leader at 3V/8: forward shock at V/8",
        GREENSHIELDS,
        "[scenario]\nk1 = 0.03571428571428571\nlead_speed = 7.5\ndn = 0.0625\ndt_ratio = 0.35\nduration = 30\nplatoon = 10\n[run]\nmeasure = shock\n",
    ),
    (
        "greenshields-shock-c",
        "Greenshields, k1 = K/4, leader at V/8: backward shock at -V/8",
        GREENSHIELDS,
        "[scenario]\nk1 = 0.03571428571428571\nlead_speed = 2.5\ndn = 0.0625\ndt_ratio = 0.35\nduration = 30\nplatoon = 10\n[run]\nmeasure = shock\n",
    ),
    (
        "greenshields-queue",
        "Greenshields queue discharge, k1 = K, leader at V",
        GREENSHIELDS,
        "[scenario]\nk1 = 0.14285714285714285\nlead_speed = 20\ndn = 0.0625\ndt_ratio = 0.35\nduration = 20\nplatoon = 10\n[run]\nmeasure = startup\n",
    ),
    (
        "triangular-shock-a",
        "triangular, k1 = K/10, leader at 3V/8: forward shock at V/6",
        TRIANGULAR,
        "[scenario]\nk1 = 0.014285714285714285\nlead_speed = 7.5\ndn = 0.0625\ndt_ratio = 1.2\nduration = 30\nplatoon = 10\n[run]\nmeasure = shock\n",
    ),
    (
        "triangular-shock-c",
        "triangular, k1 = K/10, leader at V/16: backward shock at -V/14",
        TRIANGULAR,
        "[scenario]\nk1 = 0.014285714285714285\nlead_speed = 1.25\ndn = 0.0625\ndt_ratio = 1.2\nduration = 30\nplatoon = 10\n[run]\nmeasure = shock\n",
    ),
    (
        "triangular-queue",
        "triangular queue discharge, k1 = K, leader at V",
        TRIANGULAR,
        "[scenario]\nk1 = 0.14285714285714285\nlead_speed = 20\ndn = 0.0625\ndt_ratio = 1.2\nduration = 20\nplatoon = 10\n[run]\nmeasure = startup\nstartup_threshold = 2\n",
    ),
    (
        "kerner-redlight",
        "Kerner diagram, sparse traffic (k1 = 0.002) meets a red light",
        "[fd]\ntype = kerner\nclamp = false\n",
        "[scenario]\nk1 = 0.002\nlead_speed = 0\ndn = 0.1\ndt_ratio = 1\nduration = 17000\nplatoon = 5\n[run]\nrecord_every = 100\n",
    ),
    (
        "jwz-redlight",
        "JWZ model (T = 5, c0 = 2), vehicles at rest at K/100 behind a red light",
        TRIANGULAR,
        "[scenario]\nk1 = 0.0014285714285714286\nlead_speed = 0\ninitial_speed = 0\ndn = 1\ndt_ratio = 1\nduration = 600\nplatoon = 5\n[run]\nmodel = jwz\nrelaxation_time = 5\nc0 = 2\n",
    ),
    (
        "jwz-redlight-corrected1",
        "jwz-redlight with the speed clamped to [0, theta(s)]",
        TRIANGULAR,
        "[scenario]\nk1 = 0.0014285714285714286\nlead_speed = 0\ninitial_speed = 0\ndn = 1\ndt_ratio = 1\nduration = 600\nplatoon = 5\n[run]\nmodel = corrected1\ninner = jwz\nrelaxation_time = 5\nc0 = 2\n",
    ),
    (
        "jwz-redlight-corrected2",
        "jwz-redlight with the speed clamped to [0, (gap - S dn)/dt]",
        TRIANGULAR,
        "[scenario]\nk1 = 0.0014285714285714286\nlead_speed = 0\ninitial_speed = 0\ndn = 1\ndt_ratio = 1\nduration = 600\nplatoon = 5\n[run]\nmodel = corrected2\ninner = jwz\nrelaxation_time = 5\nc0 = 2\n",
    ),
    (
        "string-phillips",
        "Phillips model (T = 5) at s0 = 14 m, leader speed perturbed at 0.1 rad/s",
        GREENSHIELDS,
        "[scenario]\nk1 = 0.07142857142857142\nlead_speed = 10\ndn = 1\ndt_ratio = 0.1\nduration = 2500\nplatoon = 10\n[run]\nmodel = phillips\nrelaxation_time = 5\n[stability]\namplitude = 0.01\nomega = 0.1\n",
    ),
    (
        "string-nonstandard",
        "nonstandard model at s0 = 14 m, leader speed perturbed at 0.1 rad/s",
        GREENSHIELDS,
        "[scenario]\nk1 = 0.07142857142857142\nlead_speed = 10\ndn = 1\ndt_ratio = 0.1\nduration = 2500\nplatoon = 50\n[stability]\namplitude = 0.01\nomega = 0.1\n",
    ),
];

pub fn template_names() -> Vec<&'static str> {
    TEMPLATES.iter().map(|t| t.0).collect()
}

pub fn template_description(name: &str) -> Option<&'static str> {
    TEMPLATES.iter().find(|t| t.0 == name).map(|t| t.1)
}

fn template_text(name: &str) -> Option<&'static str> {
    use std::sync::OnceLock;
    static TEXTS: OnceLock<Vec<(&'static str, String)>> = OnceLock::new();
    let texts = TEXTS.get_or_init(|| {
        TEMPLATES
            .iter()
            .map(|(n, _, fd, body)| (*n, format!("{fd}{body}")))
            .collect()
    });
    texts.iter().find(|(n, _)| *n == name).map(|(_, t)| t.as_str())
}
