//! Plain-text run configuration.
//!
//! The format is INI-like: a `[global]` section for run-wide settings, one
//! section per stage (its `kind` key selects the implementation, remaining
//! keys are stage parameters), and a `[connections]` section whose lines
//! wire output ports to input ports:
//!
//! ```text
//! [global]
//! delta_t = 0.05
//! t_sim = 60
//!
//! [robot]
//! kind = robot
//! arena = builtin:box10
//!
//! [enc]
//! kind = rate_encoder
//! width = 2
//!
//! [connections]
//! robot.out -> enc.in
//! ```
//!
//! Unknown keys are errors, not warnings: `[global]` is checked here, stage
//! sections when the graph is built against the stage registry.

use crate::runtime::Link;
use std::fmt::Write as _;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("section [{section}]: unknown key {key:?}")]
    UnknownKey { section: String, key: String },
    #[error("section [{section}]: key {key:?} = {value:?}, expected {expected}")]
    BadValue { section: String, key: String, value: String, expected: &'static str },
    #[error("section [{section}]: missing required key {key:?}")]
    MissingKey { section: String, key: String },
    #[error("line {line}: connection references unknown stage {stage:?}")]
    DanglingConnection { line: usize, stage: String },
    #[error("line {line}: section [{name}] appears twice")]
    DuplicateSection { line: usize, name: String },
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunMode {
    Deterministic,
    Realtime,
}

impl RunMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            RunMode::Deterministic => "deterministic",
            RunMode::Realtime => "realtime",
        }
    }
}

pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone, PartialEq)]
pub struct GlobalConfig {
    /// Tick length in seconds.
    pub delta_t: f64,
    /// Simulated duration in seconds.
    pub t_sim: f64,
    pub mode: RunMode,
    pub seed: u64,
}

impl Default for GlobalConfig {
    fn default() -> Self {
        GlobalConfig { delta_t: 0.001, t_sim: 1.0, mode: RunMode::Deterministic, seed: DEFAULT_SEED }
    }
}

/// One stage section: `kind` plus its remaining keys in file order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StageSection {
    pub name: String,
    pub kind: String,
    pub keys: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConfigDocument {
    pub global: GlobalConfig,
    pub stages: Vec<StageSection>,
    pub connections: Vec<Link>,
}

fn ident_ok(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

impl ConfigDocument {
    pub fn new() -> Self {
        ConfigDocument::default()
    }

    pub fn stage(&self, name: &str) -> Option<&StageSection> {
        self.stages.iter().find(|s| s.name == name)
    }

    /// Append a stage section (builder-style, used to assemble configurations
    /// programmatically).
    pub fn add_stage(&mut self, name: &str, kind: &str, keys: &[(&str, String)]) -> &mut Self {
        self.stages.push(StageSection {
            name: name.to_string(),
            kind: kind.to_string(),
            keys: keys.iter().map(|(k, v)| (k.to_string(), v.clone())).collect(),
        });
        self
    }

    pub fn connect(&mut self, from: &str, to: &str) -> &mut Self {
        self.connections.push(Link::new(from, "out", to, "in"));
        self
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        enum At {
            Nowhere,
            Global,
            Connections,
            Stage(usize),
        }
        let mut doc = ConfigDocument::default();
        let mut at = At::Nowhere;
        let mut seen_global = false;
        let mut seen_connections = false;
        let mut global_keys: Vec<(usize, String, String)> = Vec::new();
        let mut connection_lines: Vec<usize> = Vec::new();

        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(inner) = line.strip_prefix('[') {
                let name = inner.strip_suffix(']').ok_or_else(|| ConfigError::Syntax {
                    line: line_no,
                    message: "unterminated section header".into(),
                })?;
                let name = name.trim();
                at = match name {
                    "global" => {
                        if seen_global {
                            return Err(ConfigError::DuplicateSection {
                                line: line_no,
                                name: name.into(),
                            });
                        }
                        seen_global = true;
                        At::Global
                    }
                    "connections" => {
                        if seen_connections {
                            return Err(ConfigError::DuplicateSection {
                                line: line_no,
                                name: name.into(),
                            });
                        }
                        seen_connections = true;
                        At::Connections
                    }
                    _ => {
                        if !ident_ok(name) {
                            return Err(ConfigError::Syntax {
                                line: line_no,
                                message: format!("bad stage name {name:?}"),
                            });
                        }
                        if doc.stages.iter().any(|s| s.name == name) {
                            return Err(ConfigError::DuplicateSection {
                                line: line_no,
                                name: name.into(),
                            });
                        }
                        doc.stages.push(StageSection {
                            name: name.to_string(),
                            kind: String::new(),
                            keys: Vec::new(),
                        });
                        At::Stage(doc.stages.len() - 1)
                    }
                };
                continue;
            }
            match at {
                At::Nowhere => {
                    return Err(ConfigError::Syntax {
                        line: line_no,
                        message: "content before any [section]".into(),
                    });
                }
                At::Global | At::Stage(_) => {
                    let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                        line: line_no,
                        message: "expected `key = value`".into(),
                    })?;
                    let key = key.trim().to_string();
                    let value = value.trim().to_string();
                    if !ident_ok(&key) {
                        return Err(ConfigError::Syntax {
                            line: line_no,
                            message: format!("bad key {key:?}"),
                        });
                    }
                    match at {
                        At::Global => global_keys.push((line_no, key, value)),
                        At::Stage(i) => {
                            if key == "kind" {
                                doc.stages[i].kind = value;
                            } else {
                                doc.stages[i].keys.push((key, value));
                            }
                        }
                        _ => unreachable!(),
                    }
                }
                At::Connections => {
                    let (from, to) = line.split_once("->").ok_or_else(|| ConfigError::Syntax {
                        line: line_no,
                        message: "expected `stage.port -> stage.port`".into(),
                    })?;
                    let parse_end = |s: &str| -> Result<(String, String), ConfigError> {
                        let (stage, port) =
                            s.trim().split_once('.').ok_or_else(|| ConfigError::Syntax {
                                line: line_no,
                                message: format!("endpoint {:?} is not stage.port", s.trim()),
                            })?;
                        if !ident_ok(stage) || !ident_ok(port) {
                            return Err(ConfigError::Syntax {
                                line: line_no,
                                message: format!("bad endpoint {:?}", s.trim()),
                            });
                        }
                        Ok((stage.to_string(), port.to_string()))
                    };
                    let (fs, fp) = parse_end(from)?;
                    let (ts, tp) = parse_end(to)?;
                    doc.connections.push(Link {
                        from_stage: fs,
                        from_port: fp,
                        to_stage: ts,
                        to_port: tp,
                    });
                    connection_lines.push(line_no);
                }
            }
        }

        for (line, key, value) in global_keys {
            match key.as_str() {
                "delta_t" => {
                    doc.global.delta_t = parse_f64("global", &key, &value)?;
                    if !(doc.global.delta_t > 0.0 && doc.global.delta_t.is_finite()) {
                        return Err(ConfigError::BadValue {
                            section: "global".into(),
                            key,
                            value,
                            expected: "a positive tick length in seconds",
                        });
                    }
                }
                "t_sim" => {
                    doc.global.t_sim = parse_f64("global", &key, &value)?;
                    if !(doc.global.t_sim > 0.0 && doc.global.t_sim.is_finite()) {
                        return Err(ConfigError::BadValue {
                            section: "global".into(),
                            key,
                            value,
                            expected: "a positive duration in seconds",
                        });
                    }
                }
                "mode" => {
                    doc.global.mode = match value.as_str() {
                        "deterministic" => RunMode::Deterministic,
                        "realtime" => RunMode::Realtime,
                        _ => {
                            return Err(ConfigError::BadValue {
                                section: "global".into(),
                                key,
                                value,
                                expected: "deterministic or realtime",
                            })
                        }
                    };
                }
                "seed" => {
                    doc.global.seed = value.parse().map_err(|_| ConfigError::BadValue {
                        section: "global".into(),
                        key: key.clone(),
                        value: value.clone(),
                        expected: "an unsigned integer",
                    })?;
                }
                _ => {
                    let _ = line;
                    return Err(ConfigError::UnknownKey { section: "global".into(), key });
                }
            }
        }

        for stage in &doc.stages {
            if stage.kind.is_empty() {
                return Err(ConfigError::MissingKey {
                    section: stage.name.clone(),
                    key: "kind".into(),
                });
            }
        }
        for (link, &line) in doc.connections.iter().zip(&connection_lines) {
            for end in [&link.from_stage, &link.to_stage] {
                if doc.stage(end).is_none() {
                    return Err(ConfigError::DanglingConnection { line, stage: end.clone() });
                }
            }
        }
        Ok(doc)
    }

    /// Serialise back to the text format; `parse(render(doc))` reproduces
    /// the document.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let g = &self.global;
        let _ = writeln!(out, "[global]");
        let _ = writeln!(out, "delta_t = {}", g.delta_t);
        let _ = writeln!(out, "t_sim = {}", g.t_sim);
        let _ = writeln!(out, "mode = {}", g.mode.as_str());
        let _ = writeln!(out, "seed = {}", g.seed);
        for stage in &self.stages {
            let _ = writeln!(out, "\n[{}]", stage.name);
            let _ = writeln!(out, "kind = {}", stage.kind);
            for (k, v) in &stage.keys {
                let _ = writeln!(out, "{k} = {v}");
            }
        }
        if !self.connections.is_empty() {
            let _ = writeln!(out, "\n[connections]");
            for link in &self.connections {
                let _ = writeln!(out, "{}", link.describe());
            }
        }
        out
    }
}

fn parse_f64(section: &str, key: &str, value: &str) -> Result<f64, ConfigError> {
    value.parse().map_err(|_| ConfigError::BadValue {
        section: section.into(),
        key: key.into(),
        value: value.into(),
        expected: "a number",
    })
}

/// Typed access to a stage section's keys. Every key must be consumed; call
/// `finish` after building the stage to reject the ones that were not.
pub struct SectionReader<'a> {
    section: &'a StageSection,
    used: Vec<bool>,
}

impl<'a> SectionReader<'a> {
    pub fn new(section: &'a StageSection) -> Self {
        SectionReader { section, used: vec![false; section.keys.len()] }
    }

    pub fn section_name(&self) -> &str {
        &self.section.name
    }

    /// Last occurrence wins, all occurrences count as consumed.
    fn take(&mut self, key: &str) -> Option<&'a str> {
        let mut found = None;
        for (i, (k, v)) in self.section.keys.iter().enumerate() {
            if k == key {
                self.used[i] = true;
                found = Some(v.as_str());
            }
        }
        found
    }

    pub fn str_or(&mut self, key: &str, default: &str) -> String {
        self.take(key).unwrap_or(default).to_string()
    }

    pub fn opt_str(&mut self, key: &str) -> Option<String> {
        self.take(key).map(str::to_string)
    }

    pub fn require_str(&mut self, key: &str) -> Result<String, ConfigError> {
        self.take(key).map(str::to_string).ok_or_else(|| ConfigError::MissingKey {
            section: self.section.name.clone(),
            key: key.into(),
        })
    }

    pub fn f64_or(&mut self, key: &str, default: f64) -> Result<f64, ConfigError> {
        match self.take(key) {
            None => Ok(default),
            Some(v) => parse_f64(&self.section.name, key, v),
        }
    }

    pub fn require_f64(&mut self, key: &str) -> Result<f64, ConfigError> {
        match self.take(key) {
            None => Err(ConfigError::MissingKey {
                section: self.section.name.clone(),
                key: key.into(),
            }),
            Some(v) => parse_f64(&self.section.name, key, v),
        }
    }

    pub fn usize_or(&mut self, key: &str, default: usize) -> Result<usize, ConfigError> {
        match self.take(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| ConfigError::BadValue {
                section: self.section.name.clone(),
                key: key.into(),
                value: v.into(),
                expected: "a non-negative integer",
            }),
        }
    }

    pub fn require_usize(&mut self, key: &str) -> Result<usize, ConfigError> {
        match self.take(key) {
            None => Err(ConfigError::MissingKey {
                section: self.section.name.clone(),
                key: key.into(),
            }),
            Some(v) => v.parse().map_err(|_| ConfigError::BadValue {
                section: self.section.name.clone(),
                key: key.into(),
                value: v.into(),
                expected: "a non-negative integer",
            }),
        }
    }

    pub fn i64_or(&mut self, key: &str, default: i64) -> Result<i64, ConfigError> {
        match self.take(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| ConfigError::BadValue {
                section: self.section.name.clone(),
                key: key.into(),
                value: v.into(),
                expected: "an integer",
            }),
        }
    }

    pub fn bool_or(&mut self, key: &str, default: bool) -> Result<bool, ConfigError> {
        match self.take(key) {
            None => Ok(default),
            Some("true") | Some("yes") | Some("1") => Ok(true),
            Some("false") | Some("no") | Some("0") => Ok(false),
            Some(v) => Err(ConfigError::BadValue {
                section: self.section.name.clone(),
                key: key.into(),
                value: v.into(),
                expected: "true or false",
            }),
        }
    }

    /// Comma- or whitespace-separated list of numbers.
    pub fn opt_vec_f64(&mut self, key: &str) -> Result<Option<Vec<f64>>, ConfigError> {
        let Some(raw) = self.take(key) else { return Ok(None) };
        let mut values = Vec::new();
        for tok in raw.split(|c: char| c == ',' || c.is_whitespace()) {
            let tok = tok.trim();
            if tok.is_empty() {
                continue;
            }
            values.push(tok.parse().map_err(|_| ConfigError::BadValue {
                section: self.section.name.clone(),
                key: key.into(),
                value: raw.into(),
                expected: "a list of numbers",
            })?);
        }
        Ok(Some(values))
    }

    /// Reject keys nothing consumed.
    pub fn finish(self) -> Result<(), ConfigError> {
        for (i, (k, _)) in self.section.keys.iter().enumerate() {
            if !self.used[i] {
                return Err(ConfigError::UnknownKey {
                    section: self.section.name.clone(),
                    key: k.clone(),
                });
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const SAMPLE: &str = "\
# loop demo
[global]
delta_t = 0.05
t_sim = 60
mode = deterministic
seed = 7

[robot]
kind = robot
arena = builtin:box10
beams = 100

[enc]
kind = rate_encoder
width = 2
v_max = 100

[connections]
robot.out -> enc.in
";

    #[test]
    fn parses_sections_keys_and_connections() {
        let doc = ConfigDocument::parse(SAMPLE).unwrap();
        assert_eq!(doc.global.delta_t, 0.05);
        assert_eq!(doc.global.t_sim, 60.0);
        assert_eq!(doc.global.mode, RunMode::Deterministic);
        assert_eq!(doc.global.seed, 7);
        assert_eq!(doc.stages.len(), 2);
        assert_eq!(doc.stages[0].name, "robot");
        assert_eq!(doc.stages[0].kind, "robot");
        assert_eq!(doc.stages[0].keys, vec![
            ("arena".to_string(), "builtin:box10".to_string()),
            ("beams".to_string(), "100".to_string()),
        ]);
        assert_eq!(doc.connections, vec![Link::new("robot", "out", "enc", "in")]);
    }

    #[test]
    fn defaults_fill_missing_global_keys() {
        let doc = ConfigDocument::parse("[s]\nkind = null\n").unwrap();
        assert_eq!(doc.global, GlobalConfig::default());
        assert_eq!(doc.global.seed, DEFAULT_SEED);
    }

    #[test]
    fn unknown_global_key_is_rejected() {
        let err = ConfigDocument::parse("[global]\ndt = 0.01\n").unwrap_err();
        match err {
            ConfigError::UnknownKey { section, key } => {
                assert_eq!((section.as_str(), key.as_str()), ("global", "dt"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn syntax_errors_carry_line_numbers() {
        let err = ConfigDocument::parse("[global]\ndelta_t = 0.01\nnot a key value\n").unwrap_err();
        match err {
            ConfigError::Syntax { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        let err = ConfigDocument::parse("orphan = 1\n").unwrap_err();
        assert!(matches!(err, ConfigError::Syntax { line: 1, .. }), "{err:?}");
    }

    #[test]
    fn bad_global_values_are_rejected() {
        for text in [
            "[global]\ndelta_t = banana\n",
            "[global]\ndelta_t = -0.5\n",
            "[global]\nmode = casual\n",
            "[global]\nseed = -3\n",
        ] {
            let err = ConfigDocument::parse(text).unwrap_err();
            assert!(matches!(err, ConfigError::BadValue { .. }), "{text:?}: {err:?}");
        }
    }

    #[test]
    fn connection_to_unknown_stage_is_dangling() {
        let text = "[a]\nkind = constant\n[connections]\na.out -> ghost.in\n";
        let err = ConfigDocument::parse(text).unwrap_err();
        match err {
            ConfigError::DanglingConnection { line, stage } => {
                assert_eq!(line, 4);
                assert_eq!(stage, "ghost");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn stage_without_kind_is_rejected() {
        let err = ConfigDocument::parse("[a]\nwidth = 2\n").unwrap_err();
        assert!(
            matches!(err, ConfigError::MissingKey { ref section, ref key } if section == "a" && key == "kind"),
            "{err:?}"
        );
    }

    #[test]
    fn duplicate_sections_are_rejected() {
        let err = ConfigDocument::parse("[a]\nkind = null\n[a]\nkind = null\n").unwrap_err();
        assert!(matches!(err, ConfigError::DuplicateSection { line: 3, .. }), "{err:?}");
    }

    #[test]
    fn render_round_trips_the_sample() {
        let doc = ConfigDocument::parse(SAMPLE).unwrap();
        let again = ConfigDocument::parse(&doc.render()).unwrap();
        assert_eq!(doc, again);
    }

    #[test]
    fn section_reader_consumes_and_rejects() {
        let doc = ConfigDocument::parse("[e]\nkind = rate_encoder\nwidth = 3\nv_max = 10\n").unwrap();
        let mut r = SectionReader::new(&doc.stages[0]);
        assert_eq!(r.require_usize("width").unwrap(), 3);
        assert_eq!(r.f64_or("v_min", 1.0).unwrap(), 1.0);
        // v_max was never read:
        let err = {
            let _ = r.f64_or("nothing", 0.0);
            r.finish().unwrap_err()
        };
        assert!(
            matches!(err, ConfigError::UnknownKey { ref section, ref key } if section == "e" && key == "v_max"),
            "{err:?}"
        );
    }

    #[test]
    fn section_reader_parses_lists_and_bools() {
        let doc = ConfigDocument::parse(
            "[d]\nkind = linear_decoder\noffset = 0.5, -0.25\ntrace = yes\n",
        )
        .unwrap();
        let mut r = SectionReader::new(&doc.stages[0]);
        assert_eq!(r.opt_vec_f64("offset").unwrap(), Some(vec![0.5, -0.25]));
        assert!(r.bool_or("trace", false).unwrap());
        assert_eq!(r.opt_vec_f64("absent").unwrap(), None);
        r.finish().unwrap();
    }

    #[test]
    fn last_occurrence_of_a_repeated_key_wins() {
        let doc = ConfigDocument::parse("[e]\nkind = constant\nvalue = 1\nvalue = 2\n").unwrap();
        let mut r = SectionReader::new(&doc.stages[0]);
        assert_eq!(r.f64_or("value", 0.0).unwrap(), 2.0);
        r.finish().unwrap();
    }

    #[test]
    fn programmatic_construction_matches_parsed_form() {
        let mut doc = ConfigDocument::new();
        doc.global.delta_t = 0.01;
        doc.add_stage("src", "constant", &[("width", "2".into()), ("value", "0.5".into())]);
        doc.add_stage("sink", "null", &[("width", "2".into())]);
        doc.connect("src", "sink");
        let again = ConfigDocument::parse(&doc.render()).unwrap();
        assert_eq!(doc, again);
    }

    proptest! {
        /// Rendering then parsing reproduces any well-formed document.
        #[test]
        fn render_parse_round_trip(
            delta_t in 1e-4..1.0f64,
            t_sim in 0.1..100.0f64,
            seed in any::<u64>(),
            realtime in any::<bool>(),
            n_stages in 1usize..5,
            key_vals in proptest::collection::vec((0u8..4, -100i64..100), 0..6),
        ) {
            let mut doc = ConfigDocument::new();
            doc.global.delta_t = delta_t;
            doc.global.t_sim = t_sim;
            doc.global.seed = seed;
            doc.global.mode = if realtime { RunMode::Realtime } else { RunMode::Deterministic };
            let key_names = ["width", "value", "v_max", "tau"];
            for i in 0..n_stages {
                let keys: Vec<(&str, String)> = key_vals
                    .iter()
                    .enumerate()
                    .map(|(j, (k, v))| (key_names[(*k as usize + i + j) % 4], v.to_string()))
                    .collect();
                // Duplicate key names collapse under last-wins; keep them unique.
                let mut seen = std::collections::HashSet::new();
                let keys: Vec<(&str, String)> =
                    keys.into_iter().filter(|(k, _)| seen.insert(*k)).collect();
                doc.add_stage(&format!("stage{i}"), "null", &keys);
            }
            for i in 1..n_stages {
                doc.connect(&format!("stage{}", i - 1), &format!("stage{i}"));
            }
            let again = ConfigDocument::parse(&doc.render()).unwrap();
            prop_assert_eq!(doc, again);
        }
    }
}
