//! Flat `key = value` experiment configuration.
//!
//! One setting per line, `#` starts a comment, lists are comma-separated.
//! Parsing reports every problem it finds, each tagged with its line.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use nspe_core::algorithms::{AlgorithmKind, InitialGuess, StepSizes};
use nspe_core::datagen::{make_scenario, RegressorSpec, SpectrumSpec};
use nspe_core::model::{Dimensions, Scenario};
use nspe_core::topology::{metropolis_weights, ring_topology, CombinationMatrix, Topology};
use nspe_core::RunSeed;

/// Built-in configurations, by name.
pub const PRESETS: &[(&str, &str)] = &[
    ("paper_fig3", include_str!("../presets/paper_fig3.conf")),
    (
        "gaussian_small",
        include_str!("../presets/gaussian_small.conf"),
    ),
];

pub fn preset(name: &str) -> Option<&'static str> {
    PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| *text)
}

const COMMON_KEYS: &[&str] = &[
    "name",
    "scenario",
    "n_nodes",
    "noise_stddev",
    "ring_degree",
    "link_drop_prob",
    "combination",
    "algorithms",
    "mu",
    "iterations",
    "runs",
    "seed",
    "init",
    "init_stddev",
    "oracle_stride",
    "output_dir",
];
const SPECTRUM_KEYS: &[&str] = &[
    "q_primary",
    "j_basis",
    "n_channels",
    "f_min",
    "f_max",
    "basis_width",
    "gain_jitter",
    "gains",
];
const GAUSSIAN_KEYS: &[&str] = &["m_global", "m_local", "l_obs", "regressor_stddev"];

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "line {line}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

/// Every problem found in one configuration.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub struct ConfigErrors(pub Vec<ConfigError>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CombinationRule {
    Uniform,
    Metropolis,
    Identity,
}

impl CombinationRule {
    pub fn name(self) -> &'static str {
        match self {
            CombinationRule::Uniform => "uniform",
            CombinationRule::Metropolis => "metropolis",
            CombinationRule::Identity => "identity",
        }
    }
}

impl FromStr for CombinationRule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "uniform" => Ok(Self::Uniform),
            "metropolis" => Ok(Self::Metropolis),
            "identity" => Ok(Self::Identity),
            other => Err(format!(
                "unknown combination rule `{other}` (expected uniform, metropolis or identity)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScenarioConfig {
    Gaussian {
        m_global: usize,
        m_local: usize,
        l_obs: usize,
        regressor_stddev: f64,
    },
    Spectrum(SpectrumSpec),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub name: String,
    pub scenario: ScenarioConfig,
    pub n_nodes: usize,
    /// One entry per node.
    pub noise_stddev: Vec<f64>,
    pub ring_degree: usize,
    pub link_drop_prob: f64,
    pub combination: CombinationRule,
    pub algorithms: Vec<AlgorithmKind>,
    /// One entry per node.
    pub mu: Vec<f64>,
    pub iterations: usize,
    pub runs: usize,
    pub seed: u64,
    pub init: InitialGuess,
    pub oracle_stride: usize,
    pub output_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn dims(&self) -> Dimensions {
        match &self.scenario {
            ScenarioConfig::Gaussian {
                m_global,
                m_local,
                l_obs,
                ..
            } => Dimensions {
                n_nodes: self.n_nodes,
                m_global: *m_global,
                m_local: *m_local,
                l_obs: *l_obs,
            },
            ScenarioConfig::Spectrum(spec) => spec.dimensions(self.n_nodes),
        }
    }

    pub fn regressor_spec(&self) -> RegressorSpec {
        match &self.scenario {
            ScenarioConfig::Gaussian {
                regressor_stddev, ..
            } => RegressorSpec::Gaussian {
                stddev: *regressor_stddev,
            },
            ScenarioConfig::Spectrum(spec) => RegressorSpec::Spectrum(spec.clone()),
        }
    }

    /// Ground truth, drawn from the master seed.
    pub fn build_scenario(&self) -> Scenario {
        make_scenario(
            self.regressor_spec(),
            self.dims(),
            self.noise_stddev.clone(),
            &mut RunSeed::scenario_rng(self.seed),
        )
        .expect("validated at parse time")
    }

    pub fn build_topology(&self) -> Topology {
        ring_topology(self.n_nodes, self.ring_degree)
            .and_then(|t| t.with_link_drop_prob(self.link_drop_prob))
            .expect("validated at parse time")
    }

    pub fn build_combination(&self, topology: &Topology) -> CombinationMatrix {
        match self.combination {
            CombinationRule::Uniform => CombinationMatrix::uniform(topology),
            CombinationRule::Metropolis => {
                metropolis_weights(topology).expect("validated at parse time")
            }
            CombinationRule::Identity => CombinationMatrix::identity(topology.n_nodes()),
        }
    }

    pub fn step_sizes(&self) -> StepSizes {
        StepSizes::new(self.mu.clone()).expect("validated at parse time")
    }
}

struct Entry {
    line: usize,
    value: String,
    used: bool,
}

struct Parser {
    entries: BTreeMap<String, Entry>,
    errors: Vec<ConfigError>,
}

impl Parser {
    fn new(text: &str) -> Self {
        let mut entries = BTreeMap::new();
        let mut errors = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                errors.push(ConfigError {
                    line: Some(line),
                    message: format!("expected `key = value`, got `{content}`"),
                });
                continue;
            };
            let key = key.trim().to_owned();
            let value = value.trim().to_owned();
            if let Some(prev) = entries.get(&key).map(|e: &Entry| e.line) {
                errors.push(ConfigError {
                    line: Some(line),
                    message: format!("duplicate key `{key}` (first set on line {prev})"),
                });
                continue;
            }
            entries.insert(
                key,
                Entry {
                    line,
                    value,
                    used: false,
                },
            );
        }
        Self { entries, errors }
    }

    fn error(&mut self, line: Option<usize>, message: impl Into<String>) {
        self.errors.push(ConfigError {
            line,
            message: message.into(),
        });
    }

    fn line(&self, key: &str) -> Option<usize> {
        self.entries.get(key).map(|e| e.line)
    }

    fn raw(&mut self, key: &str) -> Option<(usize, String)> {
        let e = self.entries.get_mut(key)?;
        e.used = true;
        Some((e.line, e.value.clone()))
    }

    fn parse_value<T: FromStr>(
        &mut self,
        key: &str,
        line: usize,
        value: &str,
        kind: &str,
    ) -> Option<T> {
        match value.parse() {
            Ok(v) => Some(v),
            Err(_) => {
                self.error(Some(line), format!("`{key}` expects {kind}, got `{value}`"));
                None
            }
        }
    }

    fn required<T: FromStr>(&mut self, key: &str, kind: &str) -> Option<T> {
        match self.raw(key) {
            Some((line, value)) => self.parse_value(key, line, &value, kind),
            None => {
                self.error(None, format!("missing required key `{key}`"));
                None
            }
        }
    }

    /// `Some(default)` when absent, `None` on a parse error.
    fn optional<T: FromStr>(&mut self, key: &str, kind: &str, default: T) -> Option<T> {
        match self.raw(key) {
            Some((line, value)) => self.parse_value(key, line, &value, kind),
            None => Some(default),
        }
    }

    /// `Some(None)` when absent, `None` on a parse error.
    fn maybe<T: FromStr>(&mut self, key: &str, kind: &str) -> Option<Option<T>> {
        match self.raw(key) {
            Some((line, value)) => self.parse_value(key, line, &value, kind).map(Some),
            None => Some(None),
        }
    }

    fn list<T: FromStr>(
        &mut self,
        key: &str,
        line: usize,
        value: &str,
        kind: &str,
    ) -> Option<Vec<T>> {
        let mut out = Vec::new();
        let mut ok = true;
        for item in value.split(',').map(str::trim) {
            match item.parse() {
                Ok(v) => out.push(v),
                Err(_) => {
                    self.error(
                        Some(line),
                        format!("`{key}` expects a list of {kind}, got item `{item}`"),
                    );
                    ok = false;
                }
            }
        }
        ok.then_some(out)
    }

    /// A scalar applied to every node, or one value per node.
    fn per_node(&mut self, key: &str, n_nodes: Option<usize>) -> Option<Vec<f64>> {
        let Some((line, value)) = self.raw(key) else {
            self.error(None, format!("missing required key `{key}`"));
            return None;
        };
        let values: Vec<f64> = self.list(key, line, &value, "numbers")?;
        match (values.len(), n_nodes) {
            (1, Some(n)) => Some(vec![values[0]; n]),
            (len, Some(n)) if len == n => Some(values),
            (len, Some(n)) => {
                self.error(
                    Some(line),
                    format!("`{key}` needs 1 or n_nodes = {n} values, got {len}"),
                );
                None
            }
            (_, None) => None,
        }
    }

    fn constraint(&mut self, key: &str, ok: bool, message: impl Into<String>) -> bool {
        if !ok {
            let line = self.line(key);
            self.error(line, message);
        }
        ok
    }

    fn finish_unknown(&mut self, allowed: &[&str], scenario: Option<&str>) {
        let unused: Vec<(String, usize)> = self
            .entries
            .iter()
            .filter(|(_, e)| !e.used)
            .map(|(k, e)| (k.clone(), e.line))
            .collect();
        for (key, line) in unused {
            let other_kind =
                SPECTRUM_KEYS.contains(&key.as_str()) || GAUSSIAN_KEYS.contains(&key.as_str());
            let message = match scenario {
                Some(kind) if other_kind && !allowed.contains(&key.as_str()) => {
                    format!("key `{key}` does not apply to {kind} scenarios")
                }
                _ => format!("unknown key `{key}`"),
            };
            self.error(Some(line), message);
        }
    }
}

/// Parses and validates a configuration. `default_name` is used when the
/// text has no `name` key.
pub fn parse_config(text: &str, default_name: &str) -> Result<ExperimentConfig, ConfigErrors> {
    let mut p = Parser::new(text);

    let name = p.optional("name", "a string", default_name.to_owned());
    if let Some(name) = &name {
        let ok = !name.is_empty()
            && name
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'));
        p.constraint(
            "name",
            ok,
            format!("`name` must be a non-empty file-name-safe identifier, got `{name}`"),
        );
    }
    let kind: Option<String> = p.required("scenario", "`spectrum` or `gaussian`");
    let n_nodes: Option<usize> = p.required("n_nodes", "a positive integer");
    let n_nodes =
        n_nodes.filter(|&n| p.constraint("n_nodes", n >= 1, "`n_nodes` must be at least 1"));

    let scenario = match kind.as_deref() {
        Some("spectrum") => parse_spectrum(&mut p, n_nodes),
        Some("gaussian") => parse_gaussian(&mut p),
        Some(other) => {
            let line = p.line("scenario");
            p.error(
                line,
                format!("`scenario` must be `spectrum` or `gaussian`, got `{other}`"),
            );
            None
        }
        None => None,
    };

    let noise = p.per_node("noise_stddev", n_nodes);
    if let Some(noise) = &noise {
        p.constraint(
            "noise_stddev",
            noise.iter().all(|s| s.is_finite() && *s >= 0.0),
            "`noise_stddev` values must be finite and nonnegative",
        );
    }

    let ring_degree: Option<usize> = p.required("ring_degree", "an even integer");
    let link_drop_prob: Option<f64> = p.optional("link_drop_prob", "a probability", 0.0);
    if let (Some(n), Some(deg)) = (n_nodes, ring_degree) {
        if let Err(e) = ring_topology(n, deg) {
            let line = p.line("ring_degree");
            p.error(line, e.to_string());
        }
    }
    if let Some(prob) = link_drop_prob {
        p.constraint(
            "link_drop_prob",
            (0.0..1.0).contains(&prob),
            format!("`link_drop_prob` must lie in [0, 1), got {prob}"),
        );
    }

    let combination = match p.raw("combination") {
        Some((line, value)) => match value.parse::<CombinationRule>() {
            Ok(rule) => Some(rule),
            Err(message) => {
                p.error(Some(line), message);
                None
            }
        },
        None => Some(CombinationRule::Uniform),
    };
    if combination == Some(CombinationRule::Metropolis) && link_drop_prob.is_some_and(|q| q > 0.0) {
        let line = p.line("combination");
        p.error(
            line,
            "metropolis weights need a static topology (link_drop_prob = 0)",
        );
    }

    let algorithms = match p.raw("algorithms") {
        Some((line, value)) => {
            let mut out = Vec::new();
            let mut ok = true;
            for item in value.split(',').map(str::trim) {
                match item.parse::<AlgorithmKind>() {
                    Ok(k) if out.contains(&k) => {
                        p.error(Some(line), format!("algorithm `{k}` listed twice"));
                        ok = false;
                    }
                    Ok(k) => out.push(k),
                    Err(e) => {
                        p.error(Some(line), e.to_string());
                        ok = false;
                    }
                }
            }
            ok.then_some(out)
        }
        None => {
            p.error(None, "missing required key `algorithms`");
            None
        }
    };

    let mu = p.per_node("mu", n_nodes);
    if let Some(mu) = &mu {
        p.constraint(
            "mu",
            mu.iter().all(|m| m.is_finite() && *m > 0.0),
            "`mu` values must be positive and finite",
        );
    }

    let iterations: Option<usize> = p.required("iterations", "a positive integer");
    let iterations = iterations
        .filter(|&t| p.constraint("iterations", t >= 1, "`iterations` must be at least 1"));
    let runs: Option<usize> = p.required("runs", "a positive integer");
    let runs = runs.filter(|&r| p.constraint("runs", r >= 1, "`runs` must be at least 1"));
    let seed: Option<u64> = p.optional("seed", "an unsigned integer", 0);

    let init_kind: Option<String> = p.optional("init", "`zero` or `gaussian`", "zero".to_owned());
    let init_stddev: Option<f64> = p.optional("init_stddev", "a positive number", 1.0);
    let init = match (init_kind.as_deref(), init_stddev) {
        (Some("zero"), _) => Some(InitialGuess::Zero),
        (Some("gaussian"), Some(s)) if s.is_finite() && s > 0.0 => {
            Some(InitialGuess::Gaussian { stddev: s })
        }
        (Some("gaussian"), Some(s)) => {
            let line = p.line("init_stddev");
            p.error(
                line,
                format!("`init_stddev` must be positive and finite, got {s}"),
            );
            None
        }
        (Some(other), _) => {
            let line = p.line("init");
            p.error(
                line,
                format!("`init` must be `zero` or `gaussian`, got `{other}`"),
            );
            None
        }
        _ => None,
    };

    let default_stride = iterations.map_or(1, |t| (t / 100).max(1));
    let oracle_stride: Option<usize> =
        p.optional("oracle_stride", "a positive integer", default_stride);
    let oracle_stride = oracle_stride.filter(|&s| {
        p.constraint(
            "oracle_stride",
            s >= 1,
            "`oracle_stride` must be at least 1",
        )
    });
    let output_dir: Option<String> = p.optional("output_dir", "a path", ".".to_owned());

    let allowed: Vec<&str> = COMMON_KEYS
        .iter()
        .chain(match kind.as_deref() {
            Some("spectrum") => SPECTRUM_KEYS,
            Some("gaussian") => GAUSSIAN_KEYS,
            _ => &[],
        })
        .copied()
        .collect();
    p.finish_unknown(&allowed, kind.as_deref());

    if !p.errors.is_empty() {
        let mut errors = p.errors;
        errors.sort_by_key(|e| e.line.unwrap_or(0));
        return Err(ConfigErrors(errors));
    }
    // Every `None` above pushed an error, so these unwraps cannot fail.
    Ok(ExperimentConfig {
        name: name.unwrap(),
        scenario: scenario.unwrap(),
        n_nodes: n_nodes.unwrap(),
        noise_stddev: noise.unwrap(),
        ring_degree: ring_degree.unwrap(),
        link_drop_prob: link_drop_prob.unwrap(),
        combination: combination.unwrap(),
        algorithms: algorithms.unwrap(),
        mu: mu.unwrap(),
        iterations: iterations.unwrap(),
        runs: runs.unwrap(),
        seed: seed.unwrap(),
        init: init.unwrap(),
        oracle_stride: oracle_stride.unwrap(),
        output_dir: PathBuf::from(output_dir.unwrap()),
    })
}

fn parse_spectrum(p: &mut Parser, n_nodes: Option<usize>) -> Option<ScenarioConfig> {
    let q: Option<usize> = p.required("q_primary", "a positive integer");
    let j: Option<usize> = p.required("j_basis", "a positive integer");
    let l: Option<usize> = p.required("n_channels", "a positive integer");
    let f_min: Option<f64> = p.required("f_min", "a frequency in Hz");
    let f_max: Option<f64> = p.required("f_max", "a frequency in Hz");
    let width: Option<Option<f64>> = p.maybe("basis_width", "a width in Hz");
    let jitter: Option<f64> = p.optional("gain_jitter", "a number in [0, 1]", 0.0);
    let gains = match p.raw("gains") {
        Some((line, value)) => {
            let flat: Option<Vec<f64>> = p.list("gains", line, &value, "numbers");
            match (flat, n_nodes, q) {
                (Some(flat), Some(n), Some(q)) if flat.len() == n * (q + 1) => Some(Some(
                    flat.chunks(q + 1).map(<[f64]>::to_vec).collect::<Vec<_>>(),
                )),
                (Some(flat), Some(n), Some(q)) => {
                    p.error(
                        Some(line),
                        format!(
                            "`gains` needs n_nodes*(q_primary+1) = {} values, got {}",
                            n * (q + 1),
                            flat.len()
                        ),
                    );
                    None
                }
                _ => None,
            }
        }
        None => Some(None),
    };

    let (q, j, l, f_min, f_max, width, jitter, gains) =
        (q?, j?, l?, f_min?, f_max?, width?, jitter?, gains?);
    let mut spec = SpectrumSpec::new(q, j, l, f_min, f_max);
    if let Some(w) = width {
        spec.basis_width = w;
    }
    spec.gain_jitter = jitter;
    spec.gains = gains;
    if let Err(e) = spec.validate() {
        use nspe_core::datagen::DatagenError as E;
        let key = match e {
            E::ZeroCount("Q") => "q_primary",
            E::ZeroCount(_) => "j_basis",
            E::Band { .. } => "f_max",
            E::BasisWidth(_) => "basis_width",
            E::TooFewChannels { .. } => "n_channels",
            E::GainJitter(_) => "gain_jitter",
            _ => "scenario",
        };
        let line = p.line(key);
        p.error(line, e.to_string());
        return None;
    }
    if spec
        .gains
        .as_ref()
        .is_some_and(|rows| rows.iter().flatten().any(|g| !(g.is_finite() && *g >= 0.0)))
    {
        let line = p.line("gains");
        p.error(line, "`gains` must be finite and nonnegative");
        return None;
    }
    Some(ScenarioConfig::Spectrum(spec))
}

fn parse_gaussian(p: &mut Parser) -> Option<ScenarioConfig> {
    let m_global: Option<usize> = p.required("m_global", "a positive integer");
    let m_local: Option<usize> = p.required("m_local", "a positive integer");
    let l_obs: Option<usize> = p.required("l_obs", "a positive integer");
    let stddev: Option<f64> = p.optional("regressor_stddev", "a positive number", 1.0);
    let mut ok = true;
    for (key, v) in [
        ("m_global", m_global),
        ("m_local", m_local),
        ("l_obs", l_obs),
    ] {
        if v == Some(0) {
            ok &= p.constraint(key, false, format!("`{key}` must be at least 1"));
        }
    }
    if let Some(s) = stddev {
        ok &= p.constraint(
            "regressor_stddev",
            s.is_finite() && s > 0.0,
            format!("`regressor_stddev` must be positive and finite, got {s}"),
        );
    }
    if !ok {
        return None;
    }
    Some(ScenarioConfig::Gaussian {
        m_global: m_global?,
        m_local: m_local?,
        l_obs: l_obs?,
        regressor_stddev: stddev?,
    })
}
