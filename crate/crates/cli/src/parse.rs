//! Text formats accepted on the command line and in config files.
//!
//! Config files are flat `key = value` lines. `#` starts a comment, blank
//! lines are ignored, keys may appear at most once.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

/// Longest x-range a single command may request.
pub const MAX_RANGE_LEN: u64 = 100_000;
/// Largest finite initial set accepted by the parser.
pub const MAX_SITES: usize = 64;
/// Coordinates are kept well inside `i64` so shifts never overflow.
pub const MAX_COORD: i64 = 1 << 40;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("expected an integer, got {0:?}")]
    Integer(String),
    #[error("expected a number, got {0:?}")]
    Number(String),
    #[error("coordinate {0} out of range (|x| <= 2^40)")]
    Coordinate(i64),
    #[error("bad range {0:?}: expected `a..b` with a <= b or a single integer")]
    Range(String),
    #[error("range {0:?} is longer than {MAX_RANGE_LEN} sites")]
    RangeTooLong(String),
    #[error("bad site list {0:?}: {1}")]
    Sites(String, &'static str),
    #[error("unknown initial condition {0:?}; expected alternating, step, onesided[:k0] or finite:<sites>")]
    Initial(String),
    #[error("config line {line}: {msg}")]
    Config { line: usize, msg: String },
}

pub type ParseResult<T> = std::result::Result<T, ParseError>;

pub fn parse_int(s: &str) -> ParseResult<i64> {
    let s = s.trim();
    let v: i64 = s.parse().map_err(|_| ParseError::Integer(s.to_string()))?;
    if v.abs() > MAX_COORD {
        return Err(ParseError::Coordinate(v));
    }
    Ok(v)
}

pub fn parse_float(s: &str) -> ParseResult<f64> {
    let s = s.trim();
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(ParseError::Number(s.to_string())),
    }
}

/// Inclusive integer range `a..b`, or a single integer `a`.
pub fn parse_range(s: &str) -> ParseResult<(i64, i64)> {
    let bad = || ParseError::Range(s.to_string());
    let (lo, hi) = match s.split_once("..") {
        Some((a, b)) => (parse_int(a).map_err(|_| bad())?, parse_int(b).map_err(|_| bad())?),
        None => {
            let a = parse_int(s).map_err(|_| bad())?;
            (a, a)
        }
    };
    if lo > hi {
        return Err(bad());
    }
    if (hi - lo) as u64 >= MAX_RANGE_LEN {
        return Err(ParseError::RangeTooLong(s.to_string()));
    }
    Ok((lo, hi))
}

/// Comma-separated, strictly increasing sites, optionally in braces:
/// `1,3,5` or `{-1, 1, 3}`.
pub fn parse_sites(s: &str) -> ParseResult<Vec<i64>> {
    let inner = s.trim();
    let inner = match (inner.strip_prefix('{'), inner.ends_with('}')) {
        (Some(rest), true) => &rest[..rest.len() - 1],
        (None, false) => inner,
        _ => return Err(ParseError::Sites(s.to_string(), "unbalanced braces")),
    };
    if inner.trim().is_empty() {
        return Err(ParseError::Sites(s.to_string(), "empty"));
    }
    let mut sites = Vec::new();
    for part in inner.split(',') {
        sites.push(parse_int(part)?);
        if sites.len() > MAX_SITES {
            return Err(ParseError::Sites(s.to_string(), "too many sites"));
        }
    }
    if sites.windows(2).any(|w| w[0] >= w[1]) {
        return Err(ParseError::Sites(s.to_string(), "sites must be strictly increasing"));
    }
    Ok(sites)
}

/// Initial condition as written on the command line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IcSpec {
    Alternating,
    Step,
    /// `None` until a `k0` is supplied.
    OneSided(Option<i64>),
    /// `None` until a site list is supplied.
    Finite(Option<Vec<i64>>),
}

impl fmt::Display for IcSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IcSpec::Alternating => write!(f, "alternating"),
            IcSpec::Step => write!(f, "step"),
            IcSpec::OneSided(None) => write!(f, "onesided"),
            IcSpec::OneSided(Some(k0)) => write!(f, "onesided:{k0}"),
            IcSpec::Finite(None) => write!(f, "finite"),
            IcSpec::Finite(Some(sites)) => {
                let list: Vec<String> = sites.iter().map(i64::to_string).collect();
                write!(f, "finite:{}", list.join(","))
            }
        }
    }
}

/// `alternating`, `step`, `onesided`, `onesided:K0`, `finite` or
/// `finite:SITES`.
pub fn parse_ic(s: &str) -> ParseResult<IcSpec> {
    let s = s.trim();
    let (name, arg) = match s.split_once(':') {
        Some((n, a)) => (n.trim(), Some(a)),
        None => (s, None),
    };
    match (name.to_ascii_lowercase().as_str(), arg) {
        ("alternating", None) => Ok(IcSpec::Alternating),
        ("step", None) => Ok(IcSpec::Step),
        ("onesided", None) => Ok(IcSpec::OneSided(None)),
        ("onesided", Some(k0)) => Ok(IcSpec::OneSided(Some(parse_int(k0)?))),
        ("finite", None) => Ok(IcSpec::Finite(None)),
        ("finite", Some(sites)) => Ok(IcSpec::Finite(Some(parse_sites(sites)?))),
        _ => Err(ParseError::Initial(s.to_string())),
    }
}

/// Keys a config file may set.
pub const CONFIG_KEYS: &[&str] = &[
    "ic", "sites", "k0", "m", "t", "x", "p", "tol", "kmax", "safety", "trials", "seed", "threads", "format",
];

/// Raw key/value pairs of a config file; values are parsed when used.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConfigFile {
    pub entries: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }
}

pub fn parse_config(text: &str) -> ParseResult<ConfigFile> {
    let mut entries = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split_once('#').map_or(raw, |(c, _)| c).trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(ParseError::Config { line, msg: "expected `key = value`".into() });
        };
        let (key, value) = (key.trim().to_ascii_lowercase(), value.trim());
        if !CONFIG_KEYS.contains(&key.as_str()) {
            return Err(ParseError::Config { line, msg: format!("unknown key {key:?}") });
        }
        if value.is_empty() {
            return Err(ParseError::Config { line, msg: format!("empty value for {key:?}") });
        }
        if entries.insert(key.clone(), value.to_string()).is_some() {
            return Err(ParseError::Config { line, msg: format!("duplicate key {key:?}") });
        }
    }
    Ok(ConfigFile { entries })
}
