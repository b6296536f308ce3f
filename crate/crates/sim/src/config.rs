//! `key = value` run configuration.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use bpf_core::bpf::{BpfParams, BpfState};
use bpf_core::hu::{self, HuParams, HuState, Scheme};
use bpf_core::init::{Bump, Profile};
use bpf_core::run::{BpfProblem, HuProblem, Schedule, SharpProblem};
use bpf_core::sharp::{self, SharpState};
use bpf_core::{grid, Field, Grid1D};
use thiserror::Error;

/// Where a configuration value came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Origin {
    Line(usize),
    Override,
    Default,
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::Line(n) => write!(f, "line {n}: "),
            Origin::Override => write!(f, "--set: "),
            Origin::Default => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{origin}{msg}")]
pub struct ConfigError {
    pub origin: Origin,
    pub msg: String,
}

impl ConfigError {
    fn at(origin: Origin, msg: impl Into<String>) -> Self {
        Self {
            origin,
            msg: msg.into(),
        }
    }

    fn plain(msg: impl Into<String>) -> Self {
        Self::at(Origin::Default, msg)
    }
}

type Result<T> = std::result::Result<T, ConfigError>;

const TOP_KEYS: &[&str] = &[
    "model",
    "x_min",
    "x_max",
    "n_cells",
    "sigma",
    "diffusion",
    "epsilon",
    "k",
    "a",
    "c",
    "T",
    "dt_out",
    "dt_override",
    "snapshot_times",
    "scheme",
    "freeze_h",
    "output_dir",
    "safety",
];

const INIT_KEYS: &[&str] = &[
    "kind",
    "center",
    "width",
    "amplitude",
    "background",
    "offset",
    "centers",
    "widths",
    "amplitudes",
    "path",
];

#[derive(Debug, Clone, PartialEq)]
struct Entry {
    value: String,
    origin: Origin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Model {
    Bpf,
    Hu,
    Burgers,
    Sharp,
}

impl Model {
    pub fn name(&self) -> &'static str {
        match self {
            Model::Bpf => "bpf",
            Model::Hu => "hu",
            Model::Burgers => "burgers",
            Model::Sharp => "sharp",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitSpec {
    Formula(Profile),
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Physics {
    Kinetic(BpfParams),
    Limit(HuParams),
    Sharp { diffusion: f64 },
}

/// Fully validated run description.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub model: Model,
    pub grid: Grid1D,
    pub physics: Physics,
    pub schedule: Schedule,
    pub init_f: InitSpec,
    pub init_g: InitSpec,
    pub output_dir: Option<PathBuf>,
    /// Non-fatal remarks about the configuration.
    pub notes: Vec<String>,
    entries: BTreeMap<String, Entry>,
}

/// Initial-value problem built from a config.
#[derive(Debug, Clone, PartialEq)]
pub enum Problem {
    Bpf(BpfProblem),
    Hu(HuProblem),
    Sharp(SharpProblem),
}

fn read_entries(text: &str) -> Result<BTreeMap<String, Entry>> {
    let mut entries = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(ConfigError::at(
                Origin::Line(line),
                format!("expected `key = value`, got `{content}`"),
            ));
        };
        let (key, value) = (key.trim(), value.trim());
        check_key(key, Origin::Line(line))?;
        if value.is_empty() {
            return Err(ConfigError::at(Origin::Line(line), format!("empty value for `{key}`")));
        }
        let entry = Entry {
            value: value.to_string(),
            origin: Origin::Line(line),
        };
        if let Some(prev) = entries.insert(key.to_string(), entry) {
            return Err(ConfigError::at(
                Origin::Line(line),
                format!("duplicate key `{key}` (first set {})", prev.origin)
                    .trim_end_matches(": ")
                    .to_string(),
            ));
        }
    }
    Ok(entries)
}

fn check_key(key: &str, origin: Origin) -> Result<()> {
    if TOP_KEYS.contains(&key) {
        return Ok(());
    }
    for prefix in ["init.f.", "init.g."] {
        if let Some(rest) = key.strip_prefix(prefix) {
            if INIT_KEYS.contains(&rest) {
                return Ok(());
            }
        }
    }
    Err(ConfigError::at(origin, format!("unknown key `{key}`")))
}

struct Reader {
    entries: BTreeMap<String, Entry>,
}

impl Reader {
    fn get(&self, key: &str) -> Option<&Entry> {
        self.entries.get(key)
    }

    fn origin(&self, key: &str) -> Origin {
        self.get(key).map(|e| e.origin).unwrap_or(Origin::Default)
    }

    fn has(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    fn real(&self, key: &str) -> Result<Option<f64>> {
        self.get(key)
            .map(|e| {
                e.value.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| {
                    ConfigError::at(e.origin, format!("`{key}` must be a finite number, got `{}`", e.value))
                })
            })
            .transpose()
    }

    fn required_real(&self, key: &str) -> Result<f64> {
        self.real(key)?
            .ok_or_else(|| ConfigError::plain(format!("missing required key `{key}`")))
    }

    fn list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        self.get(key)
            .map(|e| {
                e.value
                    .split(',')
                    .map(|s| {
                        s.trim()
                            .parse::<f64>()
                            .ok()
                            .filter(|v| v.is_finite())
                            .ok_or_else(|| ConfigError::at(e.origin, format!("`{key}`: bad list entry `{}`", s.trim())))
                    })
                    .collect()
            })
            .transpose()
    }

    fn forbid(&self, key: &str, model: Model) -> Result<()> {
        if self.has(key) {
            return Err(ConfigError::at(
                self.origin(key),
                format!("`{key}` does not apply to model {}", model.name()),
            ));
        }
        Ok(())
    }
}

fn profile_from(r: &Reader, side: &str) -> Result<InitSpec> {
    let key = |k: &str| format!("init.{side}.{k}");
    let kind_key = key("kind");
    let kind = r
        .get(&kind_key)
        .ok_or_else(|| ConfigError::plain(format!("missing required key `{kind_key}`")))?;
    let need = |k: &str| -> Result<f64> {
        r.real(&key(k))?
            .ok_or_else(|| ConfigError::at(kind.origin, format!("{} `{}` needs `{}`", kind_key, kind.value, key(k))))
    };
    let allowed: &[&str] = match kind.value.as_str() {
        "gaussian_bump" => &["kind", "center", "width", "amplitude", "background"],
        "bump_sum" => &["kind", "centers", "widths", "amplitudes", "background"],
        "tanh_profile" => &["kind", "center", "width", "amplitude", "offset"],
        "file" => &["kind", "path"],
        other => {
            return Err(ConfigError::at(
                kind.origin,
                format!("unknown initial data kind `{other}` (gaussian_bump, bump_sum, tanh_profile, file)"),
            ))
        }
    };
    for sub in INIT_KEYS {
        if !allowed.contains(sub) && r.has(&key(sub)) {
            return Err(ConfigError::at(
                r.origin(&key(sub)),
                format!("`{}` does not apply to kind `{}`", key(sub), kind.value),
            ));
        }
    }
    let background = r.real(&key("background"))?.unwrap_or(0.0);
    let profile = match kind.value.as_str() {
        "gaussian_bump" => Profile::GaussianBump {
            bump: Bump::new(need("center")?, need("width")?, need("amplitude")?),
            background,
        },
        "bump_sum" => {
            let lists: Vec<Vec<f64>> = ["centers", "widths", "amplitudes"]
                .iter()
                .map(|k| {
                    r.list(&key(k))?
                        .ok_or_else(|| ConfigError::at(kind.origin, format!("bump_sum needs `{}`", key(k))))
                })
                .collect::<Result<_>>()?;
            let n = lists[0].len();
            let pick = |l: &Vec<f64>, i: usize| if l.len() == 1 { l[0] } else { l[i] };
            if lists.iter().any(|l| l.len() != n && l.len() != 1) {
                return Err(ConfigError::at(
                    r.origin(&key("centers")),
                    "bump_sum lists must have equal length (or length one)",
                ));
            }
            Profile::BumpSum {
                bumps: (0..n)
                    .map(|i| Bump::new(lists[0][i], pick(&lists[1], i), pick(&lists[2], i)))
                    .collect(),
                background,
            }
        }
        "tanh_profile" => Profile::TanhProfile {
            center: need("center")?,
            width: need("width")?,
            amplitude: need("amplitude")?,
            offset: r.real(&key("offset"))?.unwrap_or(0.0),
        },
        _ => {
            let path = r
                .get(&key("path"))
                .ok_or_else(|| ConfigError::at(kind.origin, format!("kind `file` needs `{}`", key("path"))))?;
            return Ok(InitSpec::File(PathBuf::from(&path.value)));
        }
    };
    if !profile.is_well_formed() {
        return Err(ConfigError::at(
            kind.origin,
            format!("{kind_key}: widths must be positive"),
        ));
    }
    Ok(InitSpec::Formula(profile))
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        Self::parse_with(text, &[])
    }

    /// Parses `text`, then applies `key=value` overrides (which replace keys).
    pub fn parse_with(text: &str, overrides: &[String]) -> Result<Self> {
        let mut entries = read_entries(text)?;
        for o in overrides {
            let Some((k, v)) = o.split_once('=') else {
                return Err(ConfigError::at(
                    Origin::Override,
                    format!("expected key=value, got `{o}`"),
                ));
            };
            let (k, v) = (k.trim(), v.trim());
            check_key(k, Origin::Override)?;
            if k.starts_with("init.") && k.ends_with(".kind") {
                // A new kind discards the parameters of the old one.
                let prefix = &k[..k.len() - "kind".len()];
                entries.retain(|key, _| !key.starts_with(prefix));
            }
            entries.insert(
                k.to_string(),
                Entry {
                    value: v.to_string(),
                    origin: Origin::Override,
                },
            );
        }
        Self::validate(entries)
    }

    fn validate(entries: BTreeMap<String, Entry>) -> Result<Self> {
        let r = Reader { entries };
        let model_entry = r
            .get("model")
            .ok_or_else(|| ConfigError::plain("missing required key `model`"))?;
        let model = match model_entry.value.as_str() {
            "bpf" => Model::Bpf,
            "hu" => Model::Hu,
            "burgers" => Model::Burgers,
            "sharp" => Model::Sharp,
            other => {
                return Err(ConfigError::at(
                    model_entry.origin,
                    format!("unknown model `{other}` (bpf, hu, burgers, sharp)"),
                ))
            }
        };
        let x_min = r.real("x_min")?.unwrap_or(-1.0);
        let x_max = r.real("x_max")?.unwrap_or(1.0);
        let n_entry = r
            .get("n_cells")
            .ok_or_else(|| ConfigError::plain("missing required key `n_cells`"))?;
        let n_cells: usize = n_entry.value.parse().map_err(|_| {
            ConfigError::at(
                n_entry.origin,
                format!("`n_cells` must be a positive integer, got `{}`", n_entry.value),
            )
        })?;
        let grid = Grid1D::new(x_min, x_max, n_cells).map_err(|e| ConfigError::at(n_entry.origin, e.to_string()))?;

        let sigma = r.real("sigma")?;
        let diffusion = r.real("diffusion")?;
        if let Some(s) = sigma {
            if !(s > 0.0) {
                return Err(ConfigError::at(r.origin("sigma"), "`sigma` must be positive"));
            }
        }
        if let Some(d) = diffusion {
            if !(d > 0.0) {
                return Err(ConfigError::at(r.origin("diffusion"), "`diffusion` must be positive"));
            }
        }
        let diffusion = match (sigma, diffusion) {
            (Some(s), Some(d)) => {
                if ((s * s / 2.0) - d).abs() > 1e-12 * d {
                    return Err(ConfigError::at(
                        r.origin("diffusion"),
                        format!("`diffusion` = {d} disagrees with sigma^2/2 = {}", s * s / 2.0),
                    ));
                }
                d
            }
            (Some(s), None) => s * s / 2.0,
            (None, Some(d)) => d,
            // sigma = 1 for the kinetic model, unit diffusion for the limits.
            (None, None) => {
                if model == Model::Bpf {
                    0.5
                } else {
                    1.0
                }
            }
        };

        let physics = match model {
            Model::Bpf => {
                r.forbid("epsilon", model)?;
                r.forbid("scheme", model)?;
                r.forbid("freeze_h", model)?;
                let a = r
                    .real("a")?
                    .ok_or_else(|| ConfigError::plain("missing required key `a` for model bpf"))?;
                let k = match (r.real("k")?, r.real("c")?) {
                    (Some(_), Some(_)) => return Err(ConfigError::at(r.origin("c"), "set exactly one of `k` and `c`")),
                    (Some(k), None) => k,
                    (None, Some(c)) => c / a,
                    (None, None) => return Err(ConfigError::plain("model bpf needs `k` or `c`")),
                };
                let params = BpfParams::new(k, a, (2.0 * diffusion).sqrt())
                    .map_err(|e| ConfigError::at(r.origin("a"), e.to_string()))?;
                params
                    .a_nodes(&grid)
                    .map_err(|e| ConfigError::at(r.origin("a"), e.to_string()))?;
                Physics::Kinetic(params)
            }
            Model::Hu | Model::Burgers => {
                r.forbid("k", model)?;
                r.forbid("a", model)?;
                let epsilon = match (r.real("epsilon")?, r.real("c")?) {
                    (Some(_), Some(_)) => {
                        return Err(ConfigError::at(r.origin("c"), "set exactly one of `epsilon` and `c`"))
                    }
                    (Some(e), None) => e,
                    (None, Some(c)) => 1.0 / c,
                    (None, None) => {
                        return Err(ConfigError::plain(format!(
                            "model {} needs `epsilon` or `c`",
                            model.name()
                        )))
                    }
                };
                let scheme = match r.get("scheme") {
                    Some(e) => Scheme::parse(&e.value).ok_or_else(|| {
                        ConfigError::at(
                            e.origin,
                            format!("unknown scheme `{}` (paper_central, flux_conservative)", e.value),
                        )
                    })?,
                    None => Scheme::default(),
                };
                let freeze_h = match r.get("freeze_h") {
                    Some(e) => match e.value.as_str() {
                        "true" => true,
                        "false" => false,
                        v => {
                            return Err(ConfigError::at(
                                e.origin,
                                format!("`freeze_h` must be true or false, got `{v}`"),
                            ))
                        }
                    },
                    None => model == Model::Burgers,
                };
                if model == Model::Burgers && !freeze_h {
                    return Err(ConfigError::at(
                        r.origin("freeze_h"),
                        "model burgers requires freeze_h = true",
                    ));
                }
                let params = HuParams::new(epsilon, diffusion)
                    .map_err(|e| ConfigError::at(r.origin("epsilon"), e.to_string()))?
                    .with_scheme(scheme)
                    .frozen(freeze_h);
                Physics::Limit(params)
            }
            Model::Sharp => {
                for key in ["epsilon", "c", "k", "a", "scheme", "freeze_h"] {
                    r.forbid(key, model)?;
                }
                Physics::Sharp { diffusion }
            }
        };

        let t_end = r.required_real("T")?;
        let dt_out = r.required_real("dt_out")?;
        if t_end < 0.0 {
            return Err(ConfigError::at(r.origin("T"), "`T` must be non-negative"));
        }
        if !(dt_out > 0.0) {
            return Err(ConfigError::at(r.origin("dt_out"), "`dt_out` must be positive"));
        }
        let snapshot_times =
            r.list("snapshot_times")?
                .unwrap_or_else(|| if t_end > 0.0 { vec![0.0, t_end] } else { vec![0.0] });
        if let Some(bad) = snapshot_times.iter().find(|s| !(**s >= 0.0)) {
            return Err(ConfigError::at(
                r.origin("snapshot_times"),
                format!("snapshot time {bad} is negative"),
            ));
        }
        let mut notes = Vec::new();
        let (snapshot_times, late): (Vec<f64>, Vec<f64>) = snapshot_times.into_iter().partition(|s| *s <= t_end);
        if !late.is_empty() {
            notes.push(format!(
                "snapshot times {late:?} lie beyond T = {t_end} and are skipped"
            ));
        }
        let mut schedule = Schedule::new(t_end, dt_out).with_snapshots(snapshot_times);
        if let Some(s) = r.real("safety")? {
            if !(s > 0.0 && s <= 1.0) {
                return Err(ConfigError::at(r.origin("safety"), "`safety` must lie in (0, 1]"));
            }
            schedule.safety = s;
        }
        if let Some(dt) = r.real("dt_override")? {
            if !(dt > 0.0) {
                return Err(ConfigError::at(
                    r.origin("dt_override"),
                    "`dt_override` must be positive",
                ));
            }
            schedule.dt_override = Some(dt);
        }

        let init_f = profile_from(&r, "f")?;
        let init_g = profile_from(&r, "g")?;
        let output_dir = r.get("output_dir").map(|e| PathBuf::from(&e.value));
        Ok(Self {
            model,
            grid,
            physics,
            schedule,
            init_f,
            init_g,
            output_dir,
            notes,
            entries: r.entries,
        })
    }

    pub fn diffusion(&self) -> f64 {
        match &self.physics {
            Physics::Kinetic(p) => p.diffusion(),
            Physics::Limit(p) => p.diffusion,
            Physics::Sharp { diffusion } => *diffusion,
        }
    }

    /// `c = k a` for the kinetic model, `1 / epsilon` for the limits.
    pub fn c(&self) -> Option<f64> {
        match &self.physics {
            Physics::Kinetic(p) => Some(p.c()),
            Physics::Limit(p) => Some(p.c()),
            Physics::Sharp { .. } => None,
        }
    }

    fn sample(&self, spec: &InitSpec, side: &str) -> Result<Field> {
        let origin = self
            .entries
            .get(&format!("init.{side}.kind"))
            .map(|e| e.origin)
            .unwrap_or(Origin::Default);
        let field = match spec {
            InitSpec::Formula(p) => p.sample(self.grid),
            InitSpec::File(path) => read_profile_file(path, self.grid).map_err(|msg| ConfigError::at(origin, msg))?,
        };
        if let Some(i) = field.values().iter().position(|v| *v < 0.0) {
            return Err(ConfigError::at(
                origin,
                format!("initial {side} is negative at x = {}", self.grid.x(i)),
            ));
        }
        Ok(field)
    }

    /// Sampled `(f_I, g_I)`.
    pub fn initial_fg(&self) -> Result<(Field, Field)> {
        Ok((self.sample(&self.init_f, "f")?, self.sample(&self.init_g, "g")?))
    }

    pub fn problem(&self) -> Result<Problem> {
        let (f, g) = self.initial_fg()?;
        let schedule = self.schedule.clone();
        Ok(match &self.physics {
            Physics::Kinetic(params) => Problem::Bpf(BpfProblem {
                params: *params,
                initial: BpfState::new(f, g, 0.0).map_err(|e| ConfigError::plain(e.to_string()))?,
                schedule,
            }),
            Physics::Limit(params) => {
                let mut state = hu::from_fg(&f, &g, 0.0).map_err(|e| ConfigError::plain(e.to_string()))?;
                if self.model == Model::Burgers {
                    let off = state.h.values().iter().map(|h| (h - 1.0).abs()).fold(0.0, f64::max);
                    if off > 1e-12 {
                        return Err(ConfigError::at(
                            self.entries.get("model").map(|e| e.origin).unwrap_or(Origin::Default),
                            format!("model burgers needs f + g = 1 everywhere (off by {off:e})"),
                        ));
                    }
                    state = HuState::new(Field::constant(self.grid, 1.0), state.u, 0.0)
                        .map_err(|e| ConfigError::plain(e.to_string()))?;
                }
                Problem::Hu(HuProblem {
                    params: *params,
                    initial: state,
                    schedule,
                })
            }
            Physics::Sharp { diffusion } => {
                let h = f
                    .zip_with(&g, |a, b| a + b)
                    .map_err(|e| ConfigError::plain(e.to_string()))?;
                let m_f = grid::integrate(&f);
                let initial = SharpState::from_mass(h, m_f, 0.0).map_err(|e| ConfigError::plain(e.to_string()))?;
                Problem::Sharp(SharpProblem {
                    diffusion: *diffusion,
                    initial,
                    schedule,
                })
            }
        })
    }

    /// Effective configuration followed by derived quantities, as `# ` lines.
    pub fn header(&self, problem: &Problem) -> Vec<String> {
        let mut eff: Vec<(String, String)> = Vec::new();
        let mut push = |k: &str, v: String| eff.push((k.to_string(), v));
        push("model", self.model.name().to_string());
        push("x_min", fmt_real(self.grid.x_min()));
        push("x_max", fmt_real(self.grid.x_max()));
        push("n_cells", self.grid.n_cells().to_string());
        match &self.physics {
            Physics::Kinetic(p) => {
                push("sigma", fmt_real(p.sigma));
                push("diffusion", fmt_real(p.diffusion()));
                push("k", fmt_real(p.k));
                push("a", fmt_real(p.a));
            }
            Physics::Limit(p) => {
                push("diffusion", fmt_real(p.diffusion));
                push("epsilon", fmt_real(p.epsilon));
                push("scheme", p.scheme.name().to_string());
                push("freeze_h", p.freeze_h.to_string());
            }
            Physics::Sharp { diffusion } => push("diffusion", fmt_real(*diffusion)),
        }
        push("T", fmt_real(self.schedule.t_end));
        push("dt_out", fmt_real(self.schedule.dt_out));
        if let Some(dt) = self.schedule.dt_override {
            push("dt_override", fmt_real(dt));
        }
        push(
            "snapshot_times",
            self.schedule
                .snapshot_times
                .iter()
                .map(|t| fmt_real(*t))
                .collect::<Vec<_>>()
                .join(", "),
        );
        push("safety", fmt_real(self.schedule.safety));
        for (k, e) in &self.entries {
            if k.starts_with("init.") {
                push(k, e.value.clone());
            }
        }
        if let Some(dir) = &self.output_dir {
            push("output_dir", dir.display().to_string());
        }

        let mut lines: Vec<String> = eff.into_iter().map(|(k, v)| format!("# {k} = {v}")).collect();
        lines.push(format!("# dx = {}", fmt_real(self.grid.dx())));
        lines.push(format!("# dt = {}", fmt_real(self.initial_dt(problem))));
        if let Some(c) = self.c() {
            lines.push(format!("# c = {}", fmt_real(c)));
        }
        match (&self.physics, problem) {
            (Physics::Kinetic(p), _) => {
                if let Ok(m) = p.a_nodes(&self.grid) {
                    lines.push(format!("# a_nodes = {m}"));
                    lines.push(format!(
                        "# series_length = {}",
                        bpf_core::transforms::series_length(&self.grid, m)
                    ));
                }
            }
            (Physics::Limit(p), Problem::Hu(hp)) => {
                lines.push(format!(
                    "# cell_peclet = {}",
                    fmt_real(p.cell_peclet(&self.grid, hp.initial.h.max()))
                ));
            }
            _ => {}
        }
        lines
    }

    /// Time step the driver starts with.
    pub fn initial_dt(&self, problem: &Problem) -> f64 {
        if let Some(dt) = self.schedule.dt_override {
            return dt;
        }
        let safety = self.schedule.safety;
        match problem {
            Problem::Bpf(p) => p.params.stable_dt(&p.initial, safety),
            Problem::Hu(p) => p.params.stable_dt(&self.grid, p.initial.h.max(), safety),
            Problem::Sharp(p) => sharp::heat_stable_dt(&self.grid, p.diffusion, safety),
        }
    }
}

/// Shortest decimal that round-trips.
pub fn fmt_real(v: f64) -> String {
    format!("{v}")
}

/// One value per node, either a single column or `x,value` pairs; `#` lines
/// and a non-numeric header row are skipped.
fn read_profile_file(path: &Path, grid: Grid1D) -> std::result::Result<Field, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let mut values = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let last = line.rsplit(',').next().unwrap_or("").trim();
        match last.parse::<f64>() {
            Ok(v) if v.is_finite() => values.push(v),
            _ if values.is_empty() && i == 0 => continue,
            _ => return Err(format!("{}:{}: bad value `{last}`", path.display(), i + 1)),
        }
    }
    if values.len() != grid.len() {
        return Err(format!(
            "{} holds {} values, grid has {} nodes",
            path.display(),
            values.len(),
            grid.len()
        ));
    }
    Field::new(grid, values).map_err(|e| e.to_string())
}
