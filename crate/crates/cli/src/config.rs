//! Experiment configuration.
//!
//! A config is a TOML document: common keys at the top level and one section
//! named after the experiment kind.
//!
//! ```toml
//! kind = "ruin"
//! d = 2
//! seed = 7
//! trials = 100000
//!
//! [ruin]
//! k = [1, 2, 1]
//! l = [1, 1, 2]
//! ```

use std::collections::HashMap;
use std::fmt;
use std::ops::Range;
use std::path::PathBuf;

use cutlab_core::exponents::Exponents;
use cutlab_core::measures::NiceBox;
use serde::Serialize;
use toml::de::{DeTable, DeValue};
use toml::{Table, Value};

pub const DEFAULT_TRIALS: u64 = 100_000;
pub const WORKERS_ENV: &str = "CUTLAB_WORKERS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Xi,
    OnePoint,
    TwoPoint,
    Moments,
    Cutball,
    Couple,
    L2box,
    Dimension,
    Ruin,
    Beurling,
}

impl Kind {
    pub const ALL: [Kind; 10] = [
        Kind::Xi,
        Kind::OnePoint,
        Kind::TwoPoint,
        Kind::Moments,
        Kind::Cutball,
        Kind::Couple,
        Kind::L2box,
        Kind::Dimension,
        Kind::Ruin,
        Kind::Beurling,
    ];

    /// Name used in config files and as the section header.
    pub fn name(self) -> &'static str {
        match self {
            Kind::Xi => "xi",
            Kind::OnePoint => "one_point",
            Kind::TwoPoint => "two_point",
            Kind::Moments => "moments",
            Kind::Cutball => "cutball",
            Kind::Couple => "couple",
            Kind::L2box => "l2box",
            Kind::Dimension => "dimension",
            Kind::Ruin => "ruin",
            Kind::Beurling => "beurling",
        }
    }

    /// Subcommand running this kind.
    pub fn command(self) -> &'static str {
        match self {
            Kind::OnePoint => "onepoint",
            Kind::TwoPoint => "twopoint",
            Kind::Dimension => "boxdim",
            k => k.name(),
        }
    }

    /// Value of the `kind` field of the random stream ids.
    pub fn code(self) -> u8 {
        Kind::ALL.iter().position(|&k| k == self).expect("listed") as u8 + 1
    }

    pub fn from_name(s: &str) -> Option<Kind> {
        Kind::ALL.into_iter().find(|k| k.name() == s || k.command() == s)
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoxSpec {
    pub k: Vec<i64>,
    pub level: u32,
}

impl BoxSpec {
    pub fn nice_box<const D: usize>(&self) -> NiceBox<D> {
        NiceBox::new(std::array::from_fn(|i| self.k[i]), self.level).expect("validated")
    }
}

/// Parameters of one experiment kind.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Params {
    Xi {
        scales: Vec<f64>,
        time_indexed: bool,
    },
    OnePoint {
        scales: Vec<f64>,
        points: Vec<Vec<f64>>,
    },
    TwoPoint {
        scales: Vec<f64>,
        z: Option<Vec<f64>>,
        w: Vec<Vec<f64>>,
        #[serde(rename = "box")]
        bx: Option<BoxSpec>,
        /// Profile bin edges in lattice units.
        edges: Vec<f64>,
        batches: u64,
    },
    Moments {
        scales: Vec<f64>,
    },
    Cutball {
        scales: Vec<f64>,
        points: Vec<Vec<f64>>,
        /// Scales at which the first path's grid measure is written out.
        grid: Vec<f64>,
        rho: f64,
    },
    Couple {
        scales: Vec<f64>,
        dt: f64,
        exponent: f64,
        early_stop: bool,
        points: Vec<Vec<f64>>,
    },
    L2box {
        scales: Vec<f64>,
        #[serde(rename = "box")]
        bx: BoxSpec,
        dt: f64,
        dump_pairs: u64,
    },
    Dimension {
        scales: Vec<f64>,
        sizes: Vec<f64>,
    },
    Ruin {
        k: Vec<f64>,
        l: Vec<f64>,
    },
    Beurling {
        r: f64,
        x: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub kind: Kind,
    pub d: usize,
    pub seed: u64,
    pub trials: u64,
    pub workers: usize,
    pub out: PathBuf,
    /// Intersection exponent used for `d = 3` normalizations.
    pub xi: f64,
    pub params: Params,
}

impl ExperimentConfig {
    pub fn exponents(&self) -> Exponents {
        Exponents::with_xi(self.d, self.xi).expect("validated")
    }
}

/// Values that replace the file's, applied before validation.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub kind: Option<Kind>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
    pub trials: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Location {
    pub line: usize,
    pub column: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigIssue {
    pub key: String,
    pub location: Option<Location>,
    pub message: String,
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.location {
            Some(l) => write!(f, "line {}, column {}: `{}`: {}", l.line, l.column, self.key, self.message),
            None => write!(f, "`{}`: {}", self.key, self.message),
        }
    }
}

/// Every problem found in a config.
#[derive(Debug, Clone, PartialEq, Serialize, thiserror::Error)]
pub struct ConfigError {
    pub issues: Vec<ConfigIssue>,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid config ({} problem{})", self.issues.len(), if self.issues.len() == 1 { "" } else { "s" })?;
        for i in &self.issues {
            write!(f, "\n  {i}")?;
        }
        Ok(())
    }
}

fn location(raw: &str, offset: usize) -> Location {
    let before = &raw[..offset.min(raw.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rfind('\n').map_or(before.len(), |p| before.len() - p - 1) + 1;
    Location { line, column }
}

/// Spans of every key and value, by dotted path.
struct Spans {
    keys: HashMap<String, Range<usize>>,
    values: HashMap<String, Range<usize>>,
}

impl Spans {
    fn collect(raw: &str) -> Self {
        let mut s = Spans {
            keys: HashMap::new(),
            values: HashMap::new(),
        };
        if let Ok(doc) = DeTable::parse(raw) {
            s.walk("", doc.get_ref());
        }
        s
    }

    fn walk(&mut self, prefix: &str, t: &DeTable<'_>) {
        for (k, v) in t.iter() {
            let path = if prefix.is_empty() { k.get_ref().to_string() } else { format!("{prefix}.{}", k.get_ref()) };
            self.keys.insert(path.clone(), k.span());
            self.values.insert(path.clone(), v.span());
            if let DeValue::Table(inner) = v.get_ref() {
                self.walk(&path, inner);
            }
        }
    }
}

struct Reader<'a> {
    raw: &'a str,
    spans: Spans,
    issues: Vec<ConfigIssue>,
}

impl<'a> Reader<'a> {
    fn issue(&mut self, key: &str, message: impl Into<String>) {
        let location = self.spans.values.get(key).or_else(|| self.spans.keys.get(key)).map(|r| location(self.raw, r.start));
        self.issues.push(ConfigIssue {
            key: key.to_string(),
            location,
            message: message.into(),
        });
    }

    fn issue_at_key(&mut self, key: &str, message: impl Into<String>) {
        let location = self.spans.keys.get(key).map(|r| location(self.raw, r.start));
        self.issues.push(ConfigIssue {
            key: key.to_string(),
            location,
            message: message.into(),
        });
    }

    fn number(&mut self, path: &str, v: &Value) -> Option<f64> {
        match v {
            Value::Integer(i) => Some(*i as f64),
            Value::Float(x) if x.is_finite() => Some(*x),
            _ => {
                self.issue(path, format!("expected a number, found {}", v.type_str()));
                None
            }
        }
    }

    fn f64_opt(&mut self, t: &Table, sect: &str, key: &str) -> Option<f64> {
        let path = join(sect, key);
        t.get(key).and_then(|v| self.number(&path, v))
    }

    fn f64_or(&mut self, t: &Table, sect: &str, key: &str, default: f64) -> f64 {
        if t.contains_key(key) {
            self.f64_opt(t, sect, key).unwrap_or(default)
        } else {
            default
        }
    }

    fn required<T>(&mut self, t: &Table, sect: &str, key: &str, v: Option<T>) -> Option<T> {
        if v.is_none() && !t.contains_key(key) {
            let path = join(sect, key);
            let location = self.spans.keys.get(sect).map(|r| location(self.raw, r.start));
            self.issues.push(ConfigIssue {
                key: path,
                location,
                message: "missing required field".into(),
            });
        }
        v
    }

    fn uint(&mut self, t: &Table, sect: &str, key: &str) -> Option<u64> {
        let path = join(sect, key);
        match t.get(key)? {
            Value::Integer(i) if *i >= 0 => Some(*i as u64),
            Value::Integer(i) => {
                self.issue(&path, format!("{i} is negative"));
                None
            }
            v => {
                self.issue(&path, format!("expected an integer, found {}", v.type_str()));
                None
            }
        }
    }

    fn bool_or(&mut self, t: &Table, sect: &str, key: &str, default: bool) -> bool {
        match t.get(key) {
            None => default,
            Some(Value::Boolean(b)) => *b,
            Some(v) => {
                let msg = format!("expected a boolean, found {}", v.type_str());
                self.issue(&join(sect, key), msg);
                default
            }
        }
    }

    fn list(&mut self, t: &Table, sect: &str, key: &str) -> Option<Vec<f64>> {
        let path = join(sect, key);
        match t.get(key)? {
            Value::Array(a) => {
                let mut out = Vec::with_capacity(a.len());
                for v in a {
                    out.push(self.number(&path, v)?);
                }
                Some(out)
            }
            v => {
                self.issue(&path, format!("expected an array of numbers, found {}", v.type_str()));
                None
            }
        }
    }

    fn point(&mut self, path: &str, v: &Value, d: usize) -> Option<Vec<f64>> {
        let Value::Array(a) = v else {
            self.issue(path, format!("expected a point [x, y{}], found {}", if d == 3 { ", z" } else { "" }, v.type_str()));
            return None;
        };
        let mut p = Vec::with_capacity(a.len());
        for c in a {
            p.push(self.number(path, c)?);
        }
        if p.len() != d {
            self.issue(path, format!("point has {} coordinates, expected {d}", p.len()));
            return None;
        }
        if !(p.iter().map(|c| c * c).sum::<f64>() < 1.0) {
            self.issue(path, format!("point {p:?} is not inside the unit ball"));
            return None;
        }
        Some(p)
    }

    fn points(&mut self, t: &Table, sect: &str, key: &str, d: usize) -> Option<Vec<Vec<f64>>> {
        let path = join(sect, key);
        match t.get(key)? {
            Value::Array(a) if !a.is_empty() => {
                let mut out = Vec::new();
                for v in a {
                    out.push(self.point(&path, v, d)?);
                }
                Some(out)
            }
            Value::Array(_) => {
                self.issue(&path, "needs at least one point");
                None
            }
            v => {
                self.issue(&path, format!("expected an array of points, found {}", v.type_str()));
                None
            }
        }
    }

    /// Non-empty, strictly ascending, each above `min` (or at least, when `inclusive`).
    fn scales(&mut self, t: &Table, sect: &str, key: &str, min: f64, inclusive: bool) -> Option<Vec<f64>> {
        let path = join(sect, key);
        let v = self.list(t, sect, key)?;
        if v.is_empty() {
            self.issue(&path, "needs at least one value");
            return None;
        }
        if v.windows(2).any(|w| !(w[0] < w[1])) {
            self.issue(&path, "values must be sorted strictly ascending");
            return None;
        }
        let low = v[0];
        if (inclusive && low < min) || (!inclusive && low <= min) {
            self.issue(&path, format!("{low} is out of range (must be {} {min})", if inclusive { ">=" } else { ">" }));
            return None;
        }
        Some(v)
    }

    fn box_spec(&mut self, t: &Table, sect: &str, d: usize) -> Option<BoxSpec> {
        let path = join(sect, "box");
        let k = self.list(t, sect, "box")?;
        let level = self.uint(t, sect, "level");
        let level = self.required(t, sect, "level", level)?;
        if k.len() != d || k.iter().any(|c| c.fract() != 0.0) {
            self.issue(&path, format!("box needs {d} integer indices"));
            return None;
        }
        let k: Vec<i64> = k.iter().map(|&c| c as i64).collect();
        let check = match d {
            2 => NiceBox::<2>::new([k[0], k[1]], level as u32).map(|_| ()),
            _ => NiceBox::<3>::new([k[0], k[1], k[2]], level as u32).map(|_| ()),
        };
        if let Err(e) = check {
            self.issue(&path, e.to_string());
            return None;
        }
        Some(BoxSpec { k, level: level as u32 })
    }

    fn unknown_keys(&mut self, t: &Table, sect: &str, allowed: &[&str]) {
        for key in t.keys() {
            if !allowed.contains(&key.as_str()) {
                let path = join(sect, key);
                let msg = format!("unknown key (expected one of: {})", allowed.join(", "));
                self.issue_at_key(&path, msg);
            }
        }
    }
}

fn join(sect: &str, key: &str) -> String {
    if sect.is_empty() {
        key.to_string()
    } else {
        format!("{sect}.{key}")
    }
}

fn default_workers() -> Result<usize, String> {
    match std::env::var(WORKERS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(w) if w >= 1 => Ok(w),
            _ => Err(format!("{v:?} is not a positive integer")),
        },
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

const TOP_KEYS: [&str; 7] = ["kind", "d", "seed", "trials", "workers", "out", "xi_override"];

/// Parse and check a config, applying defaults.
pub fn validate_config(raw: &str) -> Result<ExperimentConfig, ConfigError> {
    validate_config_with(raw, &Overrides::default())
}

pub fn validate_config_with(raw: &str, over: &Overrides) -> Result<ExperimentConfig, ConfigError> {
    let table: Table = match raw.parse::<Table>() {
        Ok(t) => t,
        Err(e) => {
            let loc = e.span().map(|s| location(raw, s.start));
            return Err(ConfigError {
                issues: vec![ConfigIssue {
                    key: String::new(),
                    location: loc,
                    message: e.message().to_string(),
                }],
            });
        }
    };
    let mut r = Reader {
        raw,
        spans: Spans::collect(raw),
        issues: Vec::new(),
    };

    let kind = match (table.get("kind"), over.kind) {
        (Some(Value::String(s)), o) => match Kind::from_name(s) {
            Some(k) => {
                if let Some(o) = o.filter(|o| *o != k) {
                    r.issue("kind", format!("config is for `{k}` but the `{}` command was run", o.command()));
                }
                Some(k)
            }
            None => {
                let names: Vec<&str> = Kind::ALL.iter().map(|k| k.name()).collect();
                r.issue("kind", format!("unknown kind {s:?} (expected one of: {})", names.join(", ")));
                None
            }
        },
        (Some(v), _) => {
            r.issue("kind", format!("expected a string, found {}", v.type_str()));
            None
        }
        (None, Some(o)) => Some(o),
        (None, None) => {
            r.required(&table, "", "kind", None::<()>);
            None
        }
    };

    for (key, v) in &table {
        if !TOP_KEYS.contains(&key.as_str()) && !matches!(v, Value::Table(_)) {
            let msg = format!("unknown key (expected one of: {})", TOP_KEYS.join(", "));
            r.issue_at_key(key, msg);
        }
        if let Value::Table(_) = v {
            match (Kind::from_name(key), kind) {
                (Some(k), Some(kind)) if k.name() == key && k == kind => {}
                (Some(k), Some(kind)) if k.name() == key => r.issue_at_key(key, format!("section [{key}] does not belong to a `{}` config", kind)),
                (_, _) if kind.is_some() => r.issue_at_key(key, format!("unknown section [{key}]")),
                _ => {}
            }
        }
    }

    let d = match r.uint(&table, "", "d") {
        Some(d) if d == 2 || d == 3 => Some(d as usize),
        Some(d) => {
            r.issue("d", format!("d = {d} is not supported; supported dimensions are 2 and 3"));
            None
        }
        None => r.required(&table, "", "d", None),
    };

    let seed = match over.seed {
        Some(s) => Some(s),
        None => {
            let s = r.uint(&table, "", "seed");
            r.required(&table, "", "seed", s)
        }
    };

    let trials = over.trials.or_else(|| r.uint(&table, "", "trials")).unwrap_or(DEFAULT_TRIALS);
    if trials < 1 {
        r.issue("trials", "must be at least 1");
    }

    let workers = match over.workers {
        Some(w) => w,
        None => match r.uint(&table, "", "workers") {
            Some(w) => w as usize,
            None if table.contains_key("workers") => 1,
            None => default_workers().unwrap_or_else(|m| {
                r.issue(WORKERS_ENV, m);
                1
            }),
        },
    };
    if workers < 1 {
        r.issue("workers", "must be at least 1");
    }

    let out = match (&over.out, table.get("out")) {
        (Some(o), _) => Some(o.clone()),
        (None, Some(Value::String(s))) if !s.is_empty() => Some(PathBuf::from(s)),
        (None, Some(v)) => {
            r.issue("out", format!("expected a non-empty path string, found {}", v.type_str()));
            None
        }
        (None, None) => kind.map(|k| PathBuf::from(format!("cutlab-{}", k.name()))),
    };

    let xi = match (d, r.f64_opt(&table, "", "xi_override")) {
        (Some(3), Some(x)) if x > 0.0 && x < 2.0 => Some(x),
        (Some(3), Some(x)) => {
            r.issue("xi_override", format!("{x} is outside (0, 2)"));
            None
        }
        (Some(2), Some(_)) => {
            r.issue("xi_override", "the two-dimensional exponent is fixed at 5/4; the override applies to d = 3 only");
            None
        }
        (Some(d), None) => Some(Exponents::for_dim(d).expect("checked").xi),
        _ => None,
    };

    let params = match (kind, d) {
        (Some(k), Some(d)) => {
            let empty = Table::new();
            let sect = match table.get(k.name()) {
                Some(Value::Table(t)) => t,
                _ => &empty,
            };
            read_params(&mut r, k, d, sect)
        }
        _ => None,
    };

    match &params {
        Some(Params::Xi { .. }) if trials < 1000 => r.issue("trials", "the non-intersection estimator needs at least 1000 trials"),
        Some(Params::TwoPoint { bx: Some(_), batches, .. }) if trials % batches != 0 => {
            r.issue("trials", format!("{trials} trials do not split into {batches} equal batches"))
        }
        _ => {}
    }

    if !r.issues.is_empty() {
        return Err(ConfigError { issues: r.issues });
    }
    Ok(ExperimentConfig {
        kind: kind.expect("no issues"),
        d: d.expect("no issues"),
        seed: seed.expect("no issues"),
        trials,
        workers,
        out: out.expect("no issues"),
        xi: xi.expect("no issues"),
        params: params.expect("no issues"),
    })
}

fn read_params(r: &mut Reader<'_>, kind: Kind, d: usize, t: &Table) -> Option<Params> {
    let s = kind.name();
    macro_rules! req {
        ($v:expr, $key:expr) => {{
            let v = $v;
            r.required(t, s, $key, v)
        }};
    }
    let before = r.issues.len();
    let params = match kind {
        Kind::Xi => {
            r.unknown_keys(t, s, &["scales", "time_indexed"]);
            let time_indexed = r.bool_or(t, s, "time_indexed", false);
            let scales = req!(r.scales(t, s, "scales", 0.0, false), "scales");
            if let (true, Some(v)) = (time_indexed, &scales) {
                if v.iter().any(|x| x.fract() != 0.0) {
                    r.issue(&join(s, "scales"), "time-indexed scales are step counts and must be integers");
                }
            }
            Params::Xi {
                scales: scales?,
                time_indexed,
            }
        }
        Kind::OnePoint => {
            r.unknown_keys(t, s, &["scales", "points"]);
            let scales = req!(r.scales(t, s, "scales", 0.0, false), "scales");
            let points = req!(r.points(t, s, "points", d), "points");
            Params::OnePoint {
                scales: scales?,
                points: points?,
            }
        }
        Kind::TwoPoint => {
            r.unknown_keys(t, s, &["scales", "z", "w", "box", "level", "edges", "batches"]);
            let scales = req!(r.scales(t, s, "scales", 0.0, false), "scales");
            let z = t.get("z").and_then(|v| r.point(&join(s, "z"), v, d));
            let w = r.points(t, s, "w", d).unwrap_or_default();
            if z.is_some() != !w.is_empty() {
                r.issue(&join(s, "z"), "z and w must be given together");
            }
            let bx = if t.contains_key("box") { r.box_spec(t, s, d) } else { None };
            let edges = if t.contains_key("edges") { r.scales(t, s, "edges", 0.0, false) } else { None };
            if bx.is_some() != edges.is_some() && (t.contains_key("box") != t.contains_key("edges")) {
                r.issue(&join(s, "edges"), "a profile needs both box and edges");
            }
            if let Some(e) = &edges {
                if e.len() < 2 {
                    r.issue(&join(s, "edges"), "need at least two bin edges");
                }
            }
            if z.is_none() && !t.contains_key("box") && !t.contains_key("z") {
                r.issue(&join(s, "z"), "give z and w, or box, level and edges");
            }
            let batches = r.uint(t, s, "batches").unwrap_or(20);
            if batches < 2 {
                r.issue(&join(s, "batches"), "need at least 2 batches");
            }
            Params::TwoPoint {
                scales: scales?,
                z,
                w,
                bx,
                edges: edges.unwrap_or_default(),
                batches,
            }
        }
        Kind::Moments => {
            r.unknown_keys(t, s, &["scales"]);
            let scales = req!(r.scales(t, s, "scales", 1.0, true), "scales");
            Params::Moments { scales: scales? }
        }
        Kind::Cutball => {
            r.unknown_keys(t, s, &["scales", "points", "grid", "rho"]);
            let scales = req!(r.scales(t, s, "scales", 0.0, false), "scales");
            let points = req!(r.points(t, s, "points", d), "points");
            let grid = if t.contains_key("grid") { r.scales(t, s, "grid", 0.0, false) } else { Some(Vec::new()) };
            let rho = r.f64_or(t, s, "rho", cutlab_core::brownian::DEFAULT_RHO);
            if !(rho > 0.0 && rho < 0.25) {
                r.issue(&join(s, "rho"), format!("{rho} is outside (0, 1/4)"));
            }
            Params::Cutball {
                scales: scales?,
                points: points?,
                grid: grid?,
                rho,
            }
        }
        Kind::Couple => {
            r.unknown_keys(t, s, &["scales", "dt", "exponent", "early_stop", "points"]);
            let scales = req!(r.scales(t, s, "scales", 1.0, true), "scales");
            let dt = r.f64_or(t, s, "dt", 0.01);
            if !(dt > 0.0 && dt <= 0.01) {
                r.issue(&join(s, "dt"), format!("{dt} is outside (0, 0.01]"));
            }
            let exponent = r.f64_or(t, s, "exponent", 0.65);
            let early_stop = r.bool_or(t, s, "early_stop", true);
            let points = if t.contains_key("points") { r.points(t, s, "points", d) } else { Some(Vec::new()) };
            Params::Couple {
                scales: scales?,
                dt,
                exponent,
                early_stop,
                points: points?,
            }
        }
        Kind::L2box => {
            r.unknown_keys(t, s, &["scales", "box", "level", "dt", "dump_pairs"]);
            let scales = req!(r.scales(t, s, "scales", 1.0, true), "scales");
            let bx = req!(r.box_spec(t, s, d), "box");
            let dt = r.f64_or(t, s, "dt", 0.01);
            if !(dt > 0.0 && dt <= 0.01) {
                r.issue(&join(s, "dt"), format!("{dt} is outside (0, 0.01]"));
            }
            let dump_pairs = r.uint(t, s, "dump_pairs").unwrap_or(0);
            Params::L2box {
                scales: scales?,
                bx: bx?,
                dt,
                dump_pairs,
            }
        }
        Kind::Dimension => {
            r.unknown_keys(t, s, &["scales", "sizes"]);
            let scales = req!(r.scales(t, s, "scales", 0.0, false), "scales");
            let sizes = req!(r.scales(t, s, "sizes", 0.0, false), "sizes");
            if let Some(v) = &sizes {
                if v.len() < 3 || (v[v.len() - 1] / v[0]).log10() < 1.5 - 1e-9 {
                    r.issue(&join(s, "sizes"), "need at least 3 sizes spanning 1.5 decades");
                }
            }
            Params::Dimension {
                scales: scales?,
                sizes: sizes?,
            }
        }
        Kind::Ruin => {
            r.unknown_keys(t, s, &["k", "l"]);
            let k = req!(r.list(t, s, "k"), "k");
            let l = req!(r.list(t, s, "l"), "l");
            if let (Some(k), Some(l)) = (&k, &l) {
                if k.len() != l.len() || k.is_empty() {
                    r.issue(&join(s, "l"), "k and l must be non-empty and of equal length");
                }
                if k.iter().chain(l).any(|v| !(*v > 0.0)) {
                    r.issue(&join(s, "k"), "k and l must be positive");
                }
            }
            Params::Ruin { k: k?, l: l? }
        }
        Kind::Beurling => {
            r.unknown_keys(t, s, &["r", "x"]);
            if d != 2 {
                r.issue("d", "the beurling experiment is planar; use d = 2");
            }
            let radius = r.f64_opt(t, s, "r");
            let radius = req!(radius, "r");
            let x = req!(r.scales(t, s, "x", 1.0, true), "x");
            if let (Some(rr), Some(xs)) = (radius, &x) {
                if !(rr > 0.0) {
                    r.issue(&join(s, "r"), "must be positive");
                } else if xs[xs.len() - 1].round() >= rr.exp() {
                    r.issue(&join(s, "x"), format!("distances must be below e^r = {:.1}", rr.exp()));
                }
            }
            Params::Beurling { r: radius?, x: x? }
        }
    };
    (r.issues.len() == before).then_some(params)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_lists_required_fields() {
        let e = validate_config("").unwrap_err();
        let keys: Vec<&str> = e.issues.iter().map(|i| i.key.as_str()).collect();
        assert_eq!(keys, ["kind", "d", "seed"]);
        assert!(e.issues.iter().all(|i| i.message.contains("missing")));
    }

    #[test]
    fn unsupported_dimension_is_located() {
        let e = validate_config("kind = \"xi\"\nseed = 1\nd = 4\n[xi]\nscales = [1, 2]\n").unwrap_err();
        assert_eq!(e.issues.len(), 1);
        let i = &e.issues[0];
        assert_eq!(i.key, "d");
        assert!(i.message.contains("2 and 3"));
        assert_eq!(i.location, Some(Location { line: 3, column: 5 }));
    }

    #[test]
    fn minimal_xi_config_gets_defaults() {
        let c = validate_config_with("kind = \"xi\"\nd = 2\nseed = 3\n[xi]\nscales = [2, 3, 4]\n", &Overrides::default()).unwrap();
        assert_eq!(c.trials, DEFAULT_TRIALS);
        assert!(c.workers >= 1);
        assert_eq!(c.xi, 1.25);
        assert_eq!(c.out, PathBuf::from("cutlab-xi"));
        assert_eq!(
            c.params,
            Params::Xi {
                scales: vec![2.0, 3.0, 4.0],
                time_indexed: false
            }
        );
    }

    #[test]
    fn every_violation_reported() {
        let raw = "kind = \"ruin\"\nd = 2\nseed = 1\ncolour = 3\ntrials = 0\n[ruin]\nk = [1, -2]\nl = [1]\nextra = true\n";
        let e = validate_config(raw).unwrap_err();
        let keys: Vec<&str> = e.issues.iter().map(|i| i.key.as_str()).collect();
        for k in ["colour", "trials", "ruin.extra", "ruin.l", "ruin.k"] {
            assert!(keys.contains(&k), "{k} missing from {keys:?}");
        }
        let colour = e.issues.iter().find(|i| i.key == "colour").unwrap();
        assert_eq!(colour.location.unwrap().line, 4);
    }

    #[test]
    fn scales_must_ascend() {
        let e = validate_config("kind = \"moments\"\nd = 3\nseed = 1\n[moments]\nscales = [64, 32]\n").unwrap_err();
        assert_eq!(e.issues[0].key, "moments.scales");
        assert_eq!(e.issues[0].location.unwrap().line, 5);
    }

    #[test]
    fn syntax_errors_have_locations() {
        let e = validate_config("kind = \"xi\"\nd = = 2\n").unwrap_err();
        assert_eq!(e.issues[0].location.unwrap().line, 2);
    }

    #[test]
    fn overrides_and_mismatched_kind() {
        let raw = "kind = \"ruin\"\nd = 2\n[ruin]\nk = [1]\nl = [1]\n";
        let over = Overrides {
            seed: Some(9),
            workers: Some(3),
            ..Overrides::default()
        };
        let c = validate_config_with(raw, &over).unwrap();
        assert_eq!((c.seed, c.workers), (9, 3));
        let e = validate_config_with(raw, &Overrides { kind: Some(Kind::Xi), ..over }).unwrap_err();
        assert_eq!(e.issues[0].key, "kind");
    }

    #[test]
    fn xi_override_only_in_three_dimensions() {
        let base = "kind = \"moments\"\nseed = 1\n[moments]\nscales = [8]\n";
        assert!(validate_config(&format!("d = 2\nxi_override = 0.6\n{base}")).is_err());
        assert_eq!(validate_config(&format!("d = 3\nxi_override = 0.6\n{base}")).unwrap().xi, 0.6);
        assert_eq!(validate_config(&format!("d = 3\n{base}")).unwrap().xi, 0.58);
    }

    #[test]
    fn boxes_are_checked() {
        let raw = "kind = \"l2box\"\nd = 2\nseed = 1\n[l2box]\nscales = [4]\nbox = [0, 0]\nlevel = 3\n";
        let e = validate_config(raw).unwrap_err();
        assert_eq!(e.issues[0].key, "l2box.box");
        let ok = raw.replace("[0, 0]", "[3, 0]");
        assert!(validate_config(&ok).is_ok());
    }

    #[test]
    fn kind_codes_are_distinct() {
        let mut codes: Vec<u8> = Kind::ALL.iter().map(|k| k.code()).collect();
        codes.dedup();
        assert_eq!(codes.len(), 10);
        for k in Kind::ALL {
            assert_eq!(Kind::from_name(k.command()), Some(k));
        }
    }
}
