//! Flat `key = value` study configuration.
//!
//! One assignment per line, `#` starts a comment. Lists are comma separated
//! and numbers may be written as fractions (`1/16`). Unknown and repeated
//! keys are rejected. [`StudyConfig::to_config_string`] writes every
//! resolved value back in the same format.

use fdcg::problems::BUILTIN_NAMES;
use fdcg::stepper::{InitMode, RunConfig};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ConfigError {
    #[error("cannot read {path}: {reason}")]
    Read { path: String, reason: String },
    #[error("line {line}: {reason}")]
    Syntax { line: usize, reason: String },
    #[error("{key}: {reason}")]
    Invalid { key: String, reason: String },
}

fn invalid(key: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { key: key.to_string(), reason: reason.into() }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Solve,
    Converge,
    Track,
    Project,
    Validate,
}

impl Mode {
    pub const NAMES: [&'static str; 5] = ["solve", "converge", "track", "project", "validate"];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Solve => "solve",
            Mode::Converge => "converge",
            Mode::Track => "track",
            Mode::Project => "project",
            Mode::Validate => "validate",
        }
    }
}

impl FromStr for Mode {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        Ok(match s {
            "solve" => Mode::Solve,
            "converge" => Mode::Converge,
            "track" => Mode::Track,
            "project" => Mode::Project,
            "validate" => Mode::Validate,
            _ => return Err(invalid("mode", format!("'{s}' is not one of {}", Mode::NAMES.join(", ")))),
        })
    }
}

/// One refinement level of a study.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeshLevel {
    pub h: f64,
    pub tau: f64,
    pub eta: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StudyConfig {
    pub mode: Mode,
    pub problem: String,
    pub levels: Vec<MeshLevel>,
    /// Shared run parameters; `h`, `tau` and `eta` are taken from each level.
    pub run: RunConfig,
    /// Lifts the `tau = h` requirement of the paper-sec7 preset.
    pub allow_tau_ne_h: bool,
    pub out: PathBuf,
}

const KEYS: [&str; 18] = [
    "mode",
    "problem",
    "k",
    "rk_order",
    "h",
    "tau",
    "eta",
    "gamma0",
    "gamma1",
    "q",
    "redistribute",
    "init",
    "final_time",
    "domain_origin",
    "domain_side",
    "snapshots",
    "allow_tau_ne_h",
    "out",
];

pub const DEFAULT_OUT: &str = "out";

/// Number or fraction `a/b`.
fn parse_number(key: &str, s: &str) -> Result<f64, ConfigError> {
    let s = s.trim();
    let v = match s.split_once('/') {
        Some((a, b)) => {
            let a: f64 = a.trim().parse().map_err(|_| invalid(key, format!("'{s}' is not a number")))?;
            let b: f64 = b.trim().parse().map_err(|_| invalid(key, format!("'{s}' is not a number")))?;
            a / b
        }
        None => s.parse().map_err(|_| invalid(key, format!("'{s}' is not a number")))?,
    };
    if !v.is_finite() {
        return Err(invalid(key, format!("'{s}' is not finite")));
    }
    Ok(v)
}

fn parse_list(key: &str, s: &str) -> Result<Vec<f64>, ConfigError> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(',').map(|x| parse_number(key, x)).collect()
}

fn parse_usize(key: &str, s: &str) -> Result<usize, ConfigError> {
    s.parse().map_err(|_| invalid(key, format!("'{s}' is not a non-negative integer")))
}

fn parse_bool(key: &str, s: &str) -> Result<bool, ConfigError> {
    match s {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(invalid(key, format!("'{s}' is not true or false"))),
    }
}

/// Splits the text into a key map, rejecting syntax errors, unknown keys and
/// repeats.
fn tokenize(text: &str) -> Result<BTreeMap<String, String>, ConfigError> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(ConfigError::Syntax { line: i + 1, reason: format!("expected 'key = value', got '{line}'") });
        };
        let key = key.trim();
        if !KEYS.contains(&key) {
            return Err(ConfigError::Syntax { line: i + 1, reason: format!("unknown key '{key}'") });
        }
        if map.insert(key.to_string(), value.trim().to_string()).is_some() {
            return Err(ConfigError::Syntax { line: i + 1, reason: format!("key '{key}' given twice") });
        }
    }
    Ok(map)
}

impl StudyConfig {
    pub fn from_path(path: &Path, mode_override: Option<Mode>) -> Result<Self, ConfigError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| ConfigError::Read { path: path.display().to_string(), reason: e.to_string() })?;
        Self::parse(&text, mode_override)
    }

    /// Parses and validates. `mode_override` stands in for a missing or
    /// different `mode` line.
    pub fn parse(text: &str, mode_override: Option<Mode>) -> Result<Self, ConfigError> {
        let map = tokenize(text)?;
        let get = |k: &str| map.get(k).map(String::as_str);

        let mode = match (mode_override, get("mode")) {
            (Some(m), _) => m,
            (None, Some(s)) => s.parse()?,
            (None, None) => return Err(invalid("mode", format!("required; one of {}", Mode::NAMES.join(", ")))),
        };
        let problem = get("problem").unwrap_or("paper-sec7").to_string();
        if !BUILTIN_NAMES.contains(&problem.as_str()) {
            return Err(invalid("problem", format!("unknown problem '{problem}'; built-ins are {}", BUILTIN_NAMES.join(", "))));
        }
        let k = get("k").map(|s| parse_usize("k", s)).transpose()?.unwrap_or(3);
        let hs = get("h").map(|s| parse_list("h", s)).transpose()?.unwrap_or_else(|| vec![1.0 / 16.0]);
        let taus = get("tau").map(|s| parse_list("tau", s)).transpose()?;
        let etas = get("eta").map(|s| parse_list("eta", s)).transpose()?;
        if hs.is_empty() {
            return Err(invalid("h", "at least one level is required"));
        }
        for (key, list) in [("tau", &taus), ("eta", &etas)] {
            if let Some(l) = list {
                if l.len() != hs.len() {
                    return Err(invalid(key, format!("has {} entries but h has {}", l.len(), hs.len())));
                }
            }
        }
        let levels: Vec<MeshLevel> = hs
            .iter()
            .enumerate()
            .map(|(i, &h)| MeshLevel { h, tau: taus.as_ref().map_or(h, |t| t[i]), eta: etas.as_ref().map(|e| e[i]) })
            .collect();

        let mut run = RunConfig::new(k, levels[0].h, levels[0].tau);
        if let Some(s) = get("rk_order") {
            run.rk_order = parse_usize("rk_order", s)?;
        }
        if let Some(s) = get("gamma0") {
            run.gamma0 = parse_number("gamma0", s)?;
        }
        if let Some(s) = get("gamma1") {
            run.gamma1 = parse_number("gamma1", s)?;
        }
        if let Some(s) = get("q") {
            run.q = parse_usize("q", s)?;
        }
        if let Some(s) = get("redistribute") {
            run.redistribute = parse_bool("redistribute", s)?;
        }
        if let Some(s) = get("init") {
            run.init = match s {
                "interpolate" => InitMode::Interpolate,
                "ritz" => InitMode::Ritz,
                _ => return Err(invalid("init", format!("'{s}' is not interpolate or ritz"))),
            };
        }
        if let Some(s) = get("final_time") {
            run.final_time = Some(parse_number("final_time", s)?);
        }
        if let Some(s) = get("domain_origin") {
            run.domain_origin = parse_number("domain_origin", s)?;
        }
        if let Some(s) = get("domain_side") {
            run.domain_side = parse_number("domain_side", s)?;
        }
        if let Some(s) = get("snapshots") {
            run.snapshot_times = parse_list("snapshots", s)?;
        }
        let allow_tau_ne_h = get("allow_tau_ne_h").map(|s| parse_bool("allow_tau_ne_h", s)).transpose()?.unwrap_or(false);
        let out = PathBuf::from(get("out").unwrap_or(DEFAULT_OUT));

        let cfg = StudyConfig { mode, problem, levels, run, allow_tau_ne_h, out };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Run parameters of level `i`.
    pub fn level_config(&self, i: usize) -> RunConfig {
        let l = self.levels[i];
        RunConfig { h: l.h, tau: l.tau, eta: l.eta, ..self.run.clone() }
    }

    fn validate(&self) -> Result<(), ConfigError> {
        if self.mode == Mode::Converge && self.levels.len() < 2 {
            return Err(invalid("h", "converge mode needs at least two levels"));
        }
        if self.problem == "paper-sec7" && !self.allow_tau_ne_h {
            if let Some(l) = self.levels.iter().find(|l| l.tau != l.h) {
                return Err(invalid(
                    "tau",
                    format!("paper-sec7 uses tau = h (got tau = {}, h = {}); set allow_tau_ne_h = true to override", l.tau, l.h),
                ));
            }
        }
        if let Some(t) = self.run.final_time {
            if !(t > 0.0) {
                return Err(invalid("final_time", format!("{t} must be positive")));
            }
        }
        if self.run.snapshot_times.iter().any(|t| *t < 0.0) {
            return Err(invalid("snapshots", "times must be non-negative"));
        }
        for i in 0..self.levels.len() {
            let cfg = self.level_config(i);
            // The track mode never builds a mesh, so only the tracking
            // parameters are checked there.
            let cfg = if self.mode == Mode::Track { RunConfig { h: cfg.tau.max(cfg.h), ..cfg } } else { cfg };
            cfg.validate().map_err(|e| {
                let msg = e.to_string();
                let msg = msg.strip_prefix("invalid configuration: ").unwrap_or(&msg).to_string();
                let key = msg.split([' ', ':']).next().unwrap_or("config").to_string();
                invalid(&key, format!("level {i}: {msg}"))
            })?;
        }
        Ok(())
    }

    /// Every resolved value, in the input format.
    pub fn to_config_string(&self) -> String {
        let list = |v: &mut dyn Iterator<Item = f64>| v.map(|x| x.to_string()).collect::<Vec<_>>().join(", ");
        let r = &self.run;
        let mut s = String::new();
        let mut put = |k: &str, v: String| writeln!(s, "{k} = {v}").unwrap();
        put("mode", self.mode.as_str().into());
        put("problem", self.problem.clone());
        put("k", r.k.to_string());
        put("rk_order", r.rk_order.to_string());
        put("h", list(&mut self.levels.iter().map(|l| l.h)));
        put("tau", list(&mut self.levels.iter().map(|l| l.tau)));
        if self.levels.iter().all(|l| l.eta.is_some()) {
            put("eta", list(&mut self.levels.iter().filter_map(|l| l.eta)));
        }
        put("gamma0", r.gamma0.to_string());
        put("gamma1", r.gamma1.to_string());
        put("q", r.q.to_string());
        put("redistribute", r.redistribute.to_string());
        put(
            "init",
            match r.init {
                InitMode::Interpolate => "interpolate".into(),
                InitMode::Ritz => "ritz".into(),
            },
        );
        if let Some(t) = r.final_time {
            put("final_time", t.to_string());
        }
        put("domain_origin", r.domain_origin.to_string());
        put("domain_side", r.domain_side.to_string());
        put("snapshots", list(&mut r.snapshot_times.iter().copied()));
        put("allow_tau_ne_h", self.allow_tau_ne_h.to_string());
        put("out", self.out.display().to_string());
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_needs_mode() {
        let err = StudyConfig::parse("", None).unwrap_err();
        assert!(matches!(&err, ConfigError::Invalid { key, .. } if key == "mode"), "{err}");
        assert!(StudyConfig::parse("# only a comment\n\n", Some(Mode::Validate)).is_ok());
    }

    #[test]
    fn defaults() {
        let c = StudyConfig::parse("mode = solve", None).unwrap();
        assert_eq!(c.problem, "paper-sec7");
        assert_eq!(c.run.k, 3);
        assert_eq!(c.run.rk_order, 3);
        assert_eq!(c.run.q, 5);
        assert_eq!(c.run.gamma0, 800.0);
        assert_eq!(c.run.gamma1, 1.0 / 800.0);
        assert_eq!(c.levels, vec![MeshLevel { h: 0.0625, tau: 0.0625, eta: None }]);
        assert_eq!(c.out, PathBuf::from(DEFAULT_OUT));
    }

    #[test]
    fn order_five_is_rejected() {
        let err = StudyConfig::parse("mode = solve\nk = 5\n", None).unwrap_err();
        assert!(matches!(&err, ConfigError::Invalid { key, reason } if key == "k" && reason.contains("2..=4")), "{err}");
    }

    #[test]
    fn unknown_and_repeated_keys() {
        let e = StudyConfig::parse("mode = solve\ngama0 = 3\n", None).unwrap_err();
        assert_eq!(e, ConfigError::Syntax { line: 2, reason: "unknown key 'gama0'".into() });
        let e = StudyConfig::parse("mode = solve\nk = 3\nk = 4\n", None).unwrap_err();
        assert!(matches!(e, ConfigError::Syntax { line: 3, .. }));
        let e = StudyConfig::parse("mode solve\n", None).unwrap_err();
        assert!(matches!(e, ConfigError::Syntax { line: 1, .. }));
    }

    #[test]
    fn fractions_lists_and_comments() {
        let c = StudyConfig::parse("mode = converge # sweep\nh = 1/16, 1/32,1/64\nk = 4\n", None).unwrap();
        assert_eq!(c.levels.iter().map(|l| l.h).collect::<Vec<_>>(), vec![1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0]);
        assert_eq!(c.run.q, 6);
        assert!(StudyConfig::parse("mode = solve\nh = 1/0\n", None).is_err());
        assert!(StudyConfig::parse("mode = solve\nh = x\n", None).is_err());
    }

    #[test]
    fn level_invariants() {
        assert!(StudyConfig::parse("mode = converge\nh = 0.1\n", None).is_err());
        let e = StudyConfig::parse("mode = solve\nh = 0.1\ntau = 0.05\n", None).unwrap_err();
        assert!(matches!(&e, ConfigError::Invalid { key, .. } if key == "tau"), "{e}");
        assert!(StudyConfig::parse("mode = solve\nh = 0.1\ntau = 0.05\nallow_tau_ne_h = true\n", None).is_ok());
        assert!(StudyConfig::parse("mode = solve\nh = 0.1, 0.05\ntau = 0.05\nallow_tau_ne_h = true\n", None).is_err());
        // tau > h is a solver constraint, except in tracking studies.
        let sweep = "problem = rotation\nh = 0.1\ntau = 0.2\n";
        assert!(StudyConfig::parse(sweep, Some(Mode::Solve)).is_err());
        assert!(StudyConfig::parse(sweep, Some(Mode::Track)).is_ok());
    }

    #[test]
    fn mode_override_wins() {
        let c = StudyConfig::parse("mode = solve\n", Some(Mode::Validate)).unwrap();
        assert_eq!(c.mode, Mode::Validate);
    }

    #[test]
    fn echo_round_trips() {
        let text = "mode = converge\nproblem = rotation\nk = 4\nrk_order = 5\nh = 1/8, 1/16\neta = 0.1, 0.05\ngamma0 = 123.5\n\
                    q = 7\nredistribute = false\ninit = ritz\nfinal_time = 0.3\nsnapshots = 0, 0.1\nout = results/a b\n";
        let c = StudyConfig::parse(text, None).unwrap();
        let echoed = c.to_config_string();
        assert_eq!(StudyConfig::parse(&echoed, None).unwrap(), c);
        let d = StudyConfig::parse("mode = solve", None).unwrap();
        assert_eq!(StudyConfig::parse(&d.to_config_string(), None).unwrap(), d);
    }
}
