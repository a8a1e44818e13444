//! Experiment configuration files.
//!
//! A config is a TOML document with four tables. Only `graph`, `dynamics.rule`
//! and `run.trials` are required:
//!
//! ```toml
//! [graph]
//! model = "er:20:0.3"        # or "ring:<n>:<k>", "complete:<n>"
//! seed = 7                   # generator seed
//! # file = "graph.txt"       # herdsim-graph file, relative to the config
//! # matrix = [[0, 1], [1, 0]]
//!
//! [dynamics]
//! rule = "consensus"         # random_interactions | bounded_confidence | reinforcement
//! alpha = 0.3                # or one value per agent
//! # tau = 0.25               # bounded_confidence
//! # scheme = "pairwise_gossip"   # or "edge_sampling" (random_interactions)
//! # keep_probability = 0.5       # edge_sampling
//! # frozen_bystanders = true     # random_interactions
//! # pair_selection = "weighted"  # or "uniform" (reinforcement)
//!
//! [init]
//! mode = "constant"          # iid_uniform_mean | explicit
//! p0 = 0.6
//! # values = [0, 0.45, 0.55, 1]
//!
//! [run]
//! trials = 5000
//! # max_steps = 1000000, epsilon = 1e-6, master_seed = 0,
//! # sample_every = 100, trajectory_trials = 1
//! ```

use std::path::{Path, PathBuf};

use herdsim_core::montecarlo::{DEFAULT_EPSILON, DEFAULT_MAX_STEPS, DEFAULT_SAMPLE_EVERY};
use herdsim_core::{
    Alpha, DynamicsSpec, ExperimentConfig, GraphSource, InitMode, InteractionScheme, PairSelection,
    RandomGraphModel, Rule,
};
use thiserror::Error;
use toml::{Table, Value};

/// Step size used when a config does not set `dynamics.alpha`.
pub const DEFAULT_ALPHA: f64 = 0.3;
/// Initial belief used when a config has no `[init]` table.
pub const DEFAULT_P0: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid `{field}`: {message}")]
    Validation { field: String, message: String },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
}

fn invalid(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Validation { field: field.to_string(), message: message.into() }
}

const KEYS: &[(&str, &[&str])] = &[
    ("graph", &["model", "seed", "file", "matrix"]),
    ("dynamics", &["rule", "alpha", "tau", "scheme", "keep_probability", "frozen_bystanders", "pair_selection"]),
    ("init", &["mode", "p0", "values"]),
    ("run", &["trials", "max_steps", "epsilon", "master_seed", "sample_every", "trajectory_trials"]),
];

pub fn parse_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::Io { path: path.display().to_string(), message: e.to_string() })?;
    parse_config_str(&text, path.parent().unwrap_or(Path::new(".")))
}

/// Parses config text; relative graph file paths resolve against `base`.
pub fn parse_config_str(text: &str, base: &Path) -> Result<ExperimentConfig, ConfigError> {
    let table: Table = text.parse().map_err(|e: toml::de::Error| {
        let line = e.span().map_or(1, |s| text[..s.start.min(text.len())].matches('\n').count() + 1);
        ConfigError::Parse { line, message: e.message().to_string() }
    })?;
    from_table(&table, base)
}

/// Parses the JSON config echo written to `manifest.json`.
pub fn parse_config_json(json: &serde_json::Value) -> Result<ExperimentConfig, ConfigError> {
    let table: Table =
        serde_json::from_value(json.clone()).map_err(|e| ConfigError::Parse { line: 1, message: e.to_string() })?;
    from_table(&table, Path::new("."))
}

struct Section<'a> {
    name: &'static str,
    table: Option<&'a Table>,
}

impl<'a> Section<'a> {
    fn path(&self, key: &str) -> String {
        format!("{}.{key}", self.name)
    }

    fn get(&self, key: &str) -> Option<&'a Value> {
        self.table.and_then(|t| t.get(key))
    }

    fn has(&self, key: &str) -> bool {
        self.get(key).is_some()
    }

    fn str(&self, key: &str) -> Result<Option<&'a str>, ConfigError> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s)),
            Some(_) => Err(invalid(&self.path(key), "expected a string")),
        }
    }

    fn float(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        self.get(key).map(|v| as_float(v).ok_or_else(|| invalid(&self.path(key), "expected a number"))).transpose()
    }

    fn uint(&self, key: &str) -> Result<Option<u64>, ConfigError> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::Integer(i)) if *i >= 0 => Ok(Some(*i as u64)),
            Some(_) => Err(invalid(&self.path(key), "expected a non-negative integer")),
        }
    }

    fn bool(&self, key: &str) -> Result<Option<bool>, ConfigError> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::Boolean(b)) => Ok(Some(*b)),
            Some(_) => Err(invalid(&self.path(key), "expected true or false")),
        }
    }

    fn floats(&self, key: &str) -> Result<Option<Vec<f64>>, ConfigError> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::Array(items)) => items
                .iter()
                .map(|v| as_float(v).ok_or_else(|| invalid(&self.path(key), "expected an array of numbers")))
                .collect::<Result<Vec<_>, _>>()
                .map(Some),
            Some(_) => Err(invalid(&self.path(key), "expected an array of numbers")),
        }
    }

    fn reject_unless(&self, key: &str, allowed: bool, why: &str) -> Result<(), ConfigError> {
        if self.has(key) && !allowed {
            Err(invalid(&self.path(key), why))
        } else {
            Ok(())
        }
    }
}

fn as_float(v: &Value) -> Option<f64> {
    match v {
        Value::Float(f) => Some(*f),
        Value::Integer(i) => Some(*i as f64),
        _ => None,
    }
}

fn check_keys(table: &Table) -> Result<(), ConfigError> {
    for (section, value) in table {
        let Some((_, allowed)) = KEYS.iter().find(|(name, _)| name == section) else {
            return Err(ConfigError::UnknownKey(section.clone()));
        };
        let Value::Table(inner) = value else {
            return Err(invalid(section, "expected a table"));
        };
        if let Some(key) = inner.keys().find(|k| !allowed.contains(&k.as_str())) {
            return Err(ConfigError::UnknownKey(format!("{section}.{key}")));
        }
    }
    Ok(())
}

fn section<'a>(table: &'a Table, name: &'static str) -> Section<'a> {
    Section { name, table: table.get(name).and_then(Value::as_table) }
}

fn from_table(table: &Table, base: &Path) -> Result<ExperimentConfig, ConfigError> {
    check_keys(table)?;
    let graph = parse_graph(&section(table, "graph"), base)?;
    let dynamics = parse_dynamics(&section(table, "dynamics"))?;
    let init = parse_init(&section(table, "init"))?;

    let run = section(table, "run");
    let mut cfg = ExperimentConfig::new(graph, dynamics, init);
    cfg.trials = run.uint("trials")?.ok_or_else(|| invalid("run.trials", "required"))?;
    cfg.max_steps = run.uint("max_steps")?.unwrap_or(DEFAULT_MAX_STEPS);
    cfg.epsilon = run.float("epsilon")?.unwrap_or(DEFAULT_EPSILON);
    cfg.master_seed = run.uint("master_seed")?.unwrap_or(0);
    cfg.sample_every = run.uint("sample_every")?.unwrap_or(DEFAULT_SAMPLE_EVERY);
    cfg.trajectory_trials = run.uint("trajectory_trials")?.unwrap_or(1);
    cfg.validate().map_err(|e| match e {
        herdsim_core::Error::InvalidParameter { name, reason } => invalid(name, reason),
        other => invalid("run", other.to_string()),
    })?;
    Ok(cfg)
}

pub fn parse_model(spec: &str) -> Result<(usize, RandomGraphModel), String> {
    let parts: Vec<&str> = spec.split(':').collect();
    let n = |s: &str| s.parse::<usize>().map_err(|_| format!("bad agent count `{s}`"));
    match parts.as_slice() {
        ["er", count, p] => {
            let p: f64 = p.parse().map_err(|_| format!("bad edge probability `{p}`"))?;
            if !(p > 0.0 && p <= 1.0) {
                return Err(format!("edge probability {p} outside (0, 1]"));
            }
            Ok((n(count)?, RandomGraphModel::ErdosRenyi { p }))
        }
        ["ring", count, k] => {
            let k: usize = k.parse().map_err(|_| format!("bad ring degree `{k}`"))?;
            if k == 0 {
                return Err("ring degree must be at least 1".into());
            }
            Ok((n(count)?, RandomGraphModel::Ring { k }))
        }
        ["complete", count] => Ok((n(count)?, RandomGraphModel::Complete)),
        _ => Err(format!("unknown model `{spec}`; expected er:<n>:<p>, ring:<n>:<k> or complete:<n>")),
    }
    .and_then(|(n, m)| if n >= 2 { Ok((n, m)) } else { Err("graph needs at least 2 agents".into()) })
}

pub fn model_string(n: usize, model: &RandomGraphModel) -> String {
    match model {
        RandomGraphModel::ErdosRenyi { p } => format!("er:{n}:{p}"),
        RandomGraphModel::Ring { k } => format!("ring:{n}:{k}"),
        RandomGraphModel::Complete => format!("complete:{n}"),
    }
}

fn parse_graph(s: &Section<'_>, base: &Path) -> Result<GraphSource, ConfigError> {
    let given: Vec<&str> = ["model", "file", "matrix"].into_iter().filter(|k| s.has(k)).collect();
    if given.len() != 1 {
        return Err(invalid("graph", "set exactly one of `model`, `file` or `matrix`"));
    }
    s.reject_unless("seed", s.has("model"), "only applies to generated graphs")?;
    if let Some(spec) = s.str("model")? {
        let (n, model) = parse_model(spec).map_err(|m| invalid("graph.model", m))?;
        return Ok(GraphSource::Generated { n, model, seed: s.uint("seed")?.unwrap_or(0) });
    }
    if let Some(file) = s.str("file")? {
        let path = PathBuf::from(file);
        return Ok(GraphSource::File(if path.is_absolute() { path } else { base.join(path) }));
    }
    let Some(Value::Array(rows)) = s.get("matrix") else {
        return Err(invalid("graph.matrix", "expected an array of rows"));
    };
    let rows = rows
        .iter()
        .map(|r| match r {
            Value::Array(vals) => vals.iter().map(as_float).collect::<Option<Vec<f64>>>(),
            _ => None,
        })
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| invalid("graph.matrix", "expected an array of numeric rows"))?;
    Ok(GraphSource::Matrix(rows))
}

fn parse_dynamics(s: &Section<'_>) -> Result<DynamicsSpec, ConfigError> {
    let rule_name = s.str("rule")?.ok_or_else(|| invalid("dynamics.rule", "required"))?;
    let is = |name: &str| rule_name == name;
    s.reject_unless("tau", is("bounded_confidence"), "only applies to bounded_confidence")?;
    s.reject_unless("scheme", is("random_interactions"), "only applies to random_interactions")?;
    s.reject_unless("frozen_bystanders", is("random_interactions"), "only applies to random_interactions")?;
    s.reject_unless("pair_selection", is("reinforcement"), "only applies to reinforcement")?;
    s.reject_unless(
        "keep_probability",
        s.str("scheme")? == Some("edge_sampling"),
        "only applies to scheme = \"edge_sampling\"",
    )?;

    let rule = match rule_name {
        "consensus" => Rule::Consensus,
        "bounded_confidence" => {
            let tau = s.float("tau")?.ok_or_else(|| invalid("dynamics.tau", "required for bounded_confidence"))?;
            if !(tau > 0.0 && tau < 1.0) {
                return Err(invalid("dynamics.tau", format!("confidence threshold must lie in (0, 1), got {tau}")));
            }
            Rule::BoundedConfidence { tau }
        }
        "random_interactions" => {
            let scheme = match s.str("scheme")?.unwrap_or("pairwise_gossip") {
                "pairwise_gossip" => InteractionScheme::PairwiseGossip,
                "edge_sampling" => {
                    let keep = s
                        .float("keep_probability")?
                        .ok_or_else(|| invalid("dynamics.keep_probability", "required for edge_sampling"))?;
                    if !(keep > 0.0 && keep <= 1.0) {
                        return Err(invalid("dynamics.keep_probability", format!("must lie in (0, 1], got {keep}")));
                    }
                    InteractionScheme::EdgeSampling { keep }
                }
                other => return Err(invalid("dynamics.scheme", format!("unknown scheme `{other}`"))),
            };
            Rule::RandomInteractions { scheme, frozen_bystanders: s.bool("frozen_bystanders")?.unwrap_or(true) }
        }
        "reinforcement" => Rule::Reinforcement {
            pair_selection: match s.str("pair_selection")?.unwrap_or("weighted") {
                "weighted" => PairSelection::Weighted,
                "uniform" => PairSelection::Uniform,
                other => return Err(invalid("dynamics.pair_selection", format!("unknown selection `{other}`"))),
            },
        },
        other => return Err(invalid("dynamics.rule", format!("unknown rule `{other}`"))),
    };

    let alpha = match s.get("alpha") {
        None => Alpha::Uniform(DEFAULT_ALPHA),
        Some(Value::Array(_)) => Alpha::PerNode(s.floats("alpha")?.unwrap()),
        Some(_) => Alpha::Uniform(s.float("alpha")?.unwrap()),
    };
    let values: Vec<f64> = match &alpha {
        Alpha::Uniform(a) => vec![*a],
        Alpha::PerNode(v) => v.clone(),
    };
    if let Some(a) = values.iter().find(|a| !(0.0..=1.0).contains(*a)) {
        return Err(invalid("dynamics.alpha", format!("must lie in [0, 1], got {a}")));
    }
    Ok(DynamicsSpec { rule, alpha })
}

fn parse_init(s: &Section<'_>) -> Result<InitMode, ConfigError> {
    let mode = s.str("mode")?.unwrap_or("constant");
    s.reject_unless("values", mode == "explicit", "only applies to mode = \"explicit\"")?;
    s.reject_unless("p0", mode != "explicit", "does not apply to mode = \"explicit\"")?;
    let p0 = || -> Result<f64, ConfigError> {
        let p = s.float("p0")?.unwrap_or(DEFAULT_P0);
        if !(0.0..=1.0).contains(&p) {
            return Err(invalid("init.p0", format!("must lie in [0, 1], got {p}")));
        }
        Ok(p)
    };
    match mode {
        "constant" => Ok(InitMode::Constant(p0()?)),
        "iid_uniform_mean" => Ok(InitMode::IidUniformMean(p0()?)),
        "explicit" => {
            let values = s.floats("values")?.ok_or_else(|| invalid("init.values", "required for explicit"))?;
            if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                return Err(invalid("init.values", format!("belief {v} outside [0, 1]")));
            }
            Ok(InitMode::Explicit(values))
        }
        other => Err(invalid("init.mode", format!("unknown mode `{other}`"))),
    }
}

fn floats_value(v: &[f64]) -> Value {
    Value::Array(v.iter().map(|&x| Value::Float(x)).collect())
}

/// The fully-resolved config in file layout, defaults included.
pub fn to_table(cfg: &ExperimentConfig) -> Table {
    let mut graph = Table::new();
    match &cfg.graph {
        GraphSource::Generated { n, model, seed } => {
            graph.insert("model".into(), Value::String(model_string(*n, model)));
            graph.insert("seed".into(), Value::Integer(*seed as i64));
        }
        GraphSource::File(p) => {
            graph.insert("file".into(), Value::String(p.display().to_string()));
        }
        GraphSource::Matrix(rows) => {
            graph.insert("matrix".into(), Value::Array(rows.iter().map(|r| floats_value(r)).collect()));
        }
    }

    let mut dynamics = Table::new();
    let rule = match &cfg.dynamics.rule {
        Rule::Consensus => "consensus",
        Rule::BoundedConfidence { tau } => {
            dynamics.insert("tau".into(), Value::Float(*tau));
            "bounded_confidence"
        }
        Rule::RandomInteractions { scheme, frozen_bystanders } => {
            match scheme {
                InteractionScheme::PairwiseGossip => {
                    dynamics.insert("scheme".into(), Value::String("pairwise_gossip".into()));
                }
                InteractionScheme::EdgeSampling { keep } => {
                    dynamics.insert("scheme".into(), Value::String("edge_sampling".into()));
                    dynamics.insert("keep_probability".into(), Value::Float(*keep));
                }
            }
            dynamics.insert("frozen_bystanders".into(), Value::Boolean(*frozen_bystanders));
            "random_interactions"
        }
        Rule::Reinforcement { pair_selection } => {
            let sel = match pair_selection {
                PairSelection::Weighted => "weighted",
                PairSelection::Uniform => "uniform",
            };
            dynamics.insert("pair_selection".into(), Value::String(sel.into()));
            "reinforcement"
        }
    };
    dynamics.insert("rule".into(), Value::String(rule.into()));
    dynamics.insert(
        "alpha".into(),
        match &cfg.dynamics.alpha {
            Alpha::Uniform(a) => Value::Float(*a),
            Alpha::PerNode(v) => floats_value(v),
        },
    );

    let mut init = Table::new();
    match &cfg.init {
        InitMode::Constant(p) | InitMode::IidUniformMean(p) => {
            let mode = if matches!(cfg.init, InitMode::Constant(_)) { "constant" } else { "iid_uniform_mean" };
            init.insert("mode".into(), Value::String(mode.into()));
            init.insert("p0".into(), Value::Float(*p));
        }
        InitMode::Explicit(v) => {
            init.insert("mode".into(), Value::String("explicit".into()));
            init.insert("values".into(), floats_value(v));
        }
    }

    let mut run = Table::new();
    run.insert("trials".into(), Value::Integer(cfg.trials as i64));
    run.insert("max_steps".into(), Value::Integer(cfg.max_steps as i64));
    run.insert("epsilon".into(), Value::Float(cfg.epsilon));
    run.insert("master_seed".into(), Value::Integer(cfg.master_seed as i64));
    run.insert("sample_every".into(), Value::Integer(cfg.sample_every as i64));
    run.insert("trajectory_trials".into(), Value::Integer(cfg.trajectory_trials as i64));

    let mut table = Table::new();
    table.insert("graph".into(), Value::Table(graph));
    table.insert("dynamics".into(), Value::Table(dynamics));
    table.insert("init".into(), Value::Table(init));
    table.insert("run".into(), Value::Table(run));
    table
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ExperimentConfig, ConfigError> {
        parse_config_str(text, Path::new("/cfg"))
    }

    const MINIMAL: &str = "[graph]\nmodel = \"er:20:0.3\"\n[dynamics]\nrule = \"consensus\"\n[run]\ntrials = 10\n";

    #[test]
    fn minimal_gets_defaults() {
        let cfg = parse(MINIMAL).unwrap();
        assert_eq!(cfg.epsilon, 1e-6);
        assert_eq!(cfg.max_steps, 1_000_000);
        assert_eq!(cfg.sample_every, 100);
        assert_eq!(cfg.trials, 10);
        assert_eq!(cfg.dynamics, DynamicsSpec::consensus(DEFAULT_ALPHA));
        assert_eq!(cfg.init, InitMode::Constant(0.5));
    }

    #[test]
    fn tau_must_be_below_one() {
        let text = "[graph]\nmodel = \"complete:4\"\n[dynamics]\nrule = \"bounded_confidence\"\ntau = 1.5\n[run]\ntrials = 1\n";
        assert!(matches!(parse(text), Err(ConfigError::Validation { field, .. }) if field == "dynamics.tau"));
    }

    #[test]
    fn negative_alpha_rejected() {
        let text = MINIMAL.replace("rule = \"consensus\"", "rule = \"consensus\"\nalpha = -0.1");
        assert!(matches!(parse(&text), Err(ConfigError::Validation { field, .. }) if field == "dynamics.alpha"));
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = MINIMAL.replace("trials = 10", "trials = 10\nworkers = 4");
        assert_eq!(parse(&text), Err(ConfigError::UnknownKey("run.workers".into())));
        let text = format!("{MINIMAL}[extra]\nx = 1\n");
        assert_eq!(parse(&text), Err(ConfigError::UnknownKey("extra".into())));
    }

    #[test]
    fn syntax_errors_carry_line() {
        let text = "[graph]\nmodel = \"er:20:0.3\"\n[dynamics\nrule = 1\n";
        assert!(matches!(parse(text), Err(ConfigError::Parse { line: 3, .. })));
    }

    #[test]
    fn misplaced_keys_rejected() {
        let text = MINIMAL.replace("rule = \"consensus\"", "rule = \"consensus\"\ntau = 0.2");
        assert!(matches!(parse(&text), Err(ConfigError::Validation { field, .. }) if field == "dynamics.tau"));
        let text = MINIMAL.replace("model = \"er:20:0.3\"", "model = \"er:20:0.3\"\nfile = \"g.txt\"");
        assert!(matches!(parse(&text), Err(ConfigError::Validation { field, .. }) if field == "graph"));
    }

    #[test]
    fn relative_graph_file_resolves_against_config_dir() {
        let text = MINIMAL.replace("model = \"er:20:0.3\"", "file = \"g.txt\"");
        assert_eq!(parse(&text).unwrap().graph, GraphSource::File(PathBuf::from("/cfg/g.txt")));
    }

    #[test]
    fn full_config_round_trips_through_json() {
        let text = r#"
[graph]
matrix = [[0, 1, 0, 0], [0.5, 0, 0.25, 0.25], [0.25, 0.25, 0, 0.5], [0, 0, 1, 0]]
[dynamics]
rule = "random_interactions"
alpha = [0.1, 0.2, 0.3, 0.4]
scheme = "edge_sampling"
keep_probability = 0.7
frozen_bystanders = false
[init]
mode = "explicit"
values = [0, 0.45, 0.55, 1]
[run]
trials = 3
epsilon = 1e-9
master_seed = 12345
"#;
        let cfg = parse(text).unwrap();
        let json = serde_json::to_value(to_table(&cfg)).unwrap();
        assert_eq!(parse_config_json(&json).unwrap(), cfg);
    }

    #[test]
    fn models() {
        assert_eq!(parse_model("er:20:0.3"), Ok((20, RandomGraphModel::ErdosRenyi { p: 0.3 })));
        assert_eq!(parse_model("ring:10:2"), Ok((10, RandomGraphModel::Ring { k: 2 })));
        assert_eq!(parse_model("complete:4"), Ok((4, RandomGraphModel::Complete)));
        assert!(parse_model("er:20:1.5").is_err());
        assert!(parse_model("star:5").is_err());
        assert!(parse_model("complete:1").is_err());
        let (n, m) = parse_model("er:20:0.3").unwrap();
        assert_eq!(model_string(n, &m), "er:20:0.3");
    }
}
