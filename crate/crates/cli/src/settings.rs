//! Merges command-line flags, the config file and built-in defaults, in
//! that order of precedence.

use std::str::FromStr;

use asep_core::{FiniteSet, InitialCondition, ModelParams, DEFAULT_SAFETY};

use crate::args::{Format, ModelArgs, SamplingArgs};
use crate::parse::{parse_float, parse_ic, parse_int, parse_range, parse_sites, ConfigFile, IcSpec};
use crate::CliError;

pub const DEFAULT_P: f64 = 0.3;
pub const DEFAULT_T: f64 = 1.0;
pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_KMAX: usize = 8;
pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_MC_TRIALS: u64 = 100_000;
pub const DEFAULT_IDENTITY_TRIALS: u64 = 100;
/// Half-width of the default x-range around the tagged particle's start.
pub const DEFAULT_HALF_RANGE: i64 = 4;

/// Everything a command needs, fully resolved.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub params: ModelParams,
    pub ic: InitialCondition,
    pub ic_label: String,
    pub m: i64,
    pub origin: i64,
    pub t: f64,
    pub x: (i64, i64),
    pub tol: f64,
    pub kmax: Option<usize>,
    pub safety: f64,
    pub trials: Option<u64>,
    pub seed: u64,
    pub threads: Option<usize>,
    pub format: Option<Format>,
}

fn lookup<T>(
    flag: Option<T>,
    cfg: &ConfigFile,
    key: &str,
    parse: impl Fn(&str) -> Result<T, CliError>,
) -> Result<Option<T>, CliError> {
    match flag {
        Some(v) => Ok(Some(v)),
        None => cfg.get(key).map(parse).transpose(),
    }
}

fn num<T: FromStr>(key: &'static str) -> impl Fn(&str) -> Result<T, CliError> {
    move |s| s.trim().parse().map_err(|_| CliError::Usage(format!("bad value {s:?} for {key}")))
}

fn float(s: &str) -> Result<f64, CliError> {
    Ok(parse_float(s)?)
}

fn format(s: &str) -> Result<Format, CliError> {
    match s.trim().to_ascii_lowercase().as_str() {
        "csv" => Ok(Format::Csv),
        "json" => Ok(Format::Json),
        _ => Err(CliError::Usage(format!("format must be csv or json, got {s:?}"))),
    }
}

impl Settings {
    pub fn resolve(
        model: &ModelArgs,
        sampling: &SamplingArgs,
        threads: Option<usize>,
        fmt: Option<Format>,
        cfg: &ConfigFile,
    ) -> Result<Self, CliError> {
        let p = lookup(model.p, cfg, "p", float)?.unwrap_or(DEFAULT_P);
        let params = ModelParams::new(p).map_err(|e| CliError::Usage(e.to_string()))?;

        let ic_text = lookup(model.ic.clone(), cfg, "ic", |s| Ok(s.to_string()))?;
        let mut spec = match ic_text {
            Some(s) => parse_ic(&s)?,
            None => IcSpec::Alternating,
        };
        let sites = lookup(model.sites.clone(), cfg, "sites", |s| Ok(s.to_string()))?;
        let k0 = lookup(model.k0, cfg, "k0", |s| Ok(parse_int(s)?))?;
        match &mut spec {
            IcSpec::Finite(slot @ None) => {
                let s = sites.ok_or_else(|| CliError::Usage("finite initial condition needs --sites".into()))?;
                *slot = Some(parse_sites(&s)?);
            }
            IcSpec::OneSided(slot @ None) => *slot = Some(k0.unwrap_or(1)),
            _ => {}
        }
        let ic = match &spec {
            IcSpec::Alternating => InitialCondition::AlternatingZ,
            IcSpec::Step => InitialCondition::StepPositive,
            IcSpec::OneSided(k0) => InitialCondition::OneSidedAlternating { k0: k0.unwrap_or(1) },
            IcSpec::Finite(sites) => InitialCondition::FiniteSet(
                FiniteSet::new(sites.clone().unwrap_or_default()).map_err(|e| CliError::Usage(e.to_string()))?,
            ),
        };

        let m = lookup(model.m, cfg, "m", |s| Ok(parse_int(s)?))?.unwrap_or(1);
        let origin = ic.tagged_origin(m).map_err(|e| CliError::Usage(e.to_string()))?;
        let t = lookup(model.t, cfg, "t", float)?.unwrap_or(DEFAULT_T);
        if !(t >= 0.0) {
            return Err(CliError::Usage(format!("t must be >= 0, got {t}")));
        }
        let x = match lookup(model.x.clone(), cfg, "x", |s| Ok(s.to_string()))? {
            Some(s) => parse_range(&s)?,
            None => (origin - DEFAULT_HALF_RANGE, origin + DEFAULT_HALF_RANGE),
        };
        let tol = lookup(model.tol, cfg, "tol", float)?.unwrap_or(DEFAULT_TOL);
        if !(tol > 0.0) {
            return Err(CliError::Usage(format!("tol must be > 0, got {tol}")));
        }
        let kmax = lookup(model.kmax, cfg, "kmax", num("kmax"))?;
        if kmax == Some(0) {
            return Err(CliError::Usage("kmax must be >= 1".into()));
        }
        let safety = lookup(model.safety, cfg, "safety", float)?.unwrap_or(DEFAULT_SAFETY);
        let trials = lookup(sampling.trials, cfg, "trials", num("trials"))?;
        if trials == Some(0) {
            return Err(CliError::Usage("trials must be >= 1".into()));
        }
        let seed = lookup(sampling.seed, cfg, "seed", num("seed"))?.unwrap_or(DEFAULT_SEED);
        let threads = lookup(threads, cfg, "threads", num("threads"))?;
        if threads == Some(0) {
            return Err(CliError::Usage("threads must be >= 1".into()));
        }
        let format = lookup(fmt, cfg, "format", format)?;

        Ok(Self {
            params,
            ic,
            ic_label: spec.to_string(),
            m,
            origin,
            t,
            x,
            tol,
            kmax,
            safety,
            trials,
            seed,
            threads,
            format,
        })
    }

    pub fn xs(&self) -> impl Iterator<Item = i64> {
        self.x.0..=self.x.1
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_config;

    #[test]
    fn flags_beat_config_beat_defaults() {
        let cfg = parse_config("p = 0.4\nt = 2\nic = finite:1,3\nm = 2").unwrap();
        let model = ModelArgs { p: Some(0.2), ..Default::default() };
        let s = Settings::resolve(&model, &SamplingArgs::default(), None, None, &cfg).unwrap();
        assert_eq!(s.params.p(), 0.2);
        assert_eq!(s.t, 2.0);
        assert_eq!(s.origin, 3);
        assert_eq!(s.x, (-1, 7));
        assert_eq!(s.tol, DEFAULT_TOL);
        assert_eq!(s.ic_label, "finite:1,3");
    }

    #[test]
    fn separate_sites_and_offset() {
        let cfg = ConfigFile::default();
        let model = ModelArgs { ic: Some("finite".into()), sites: Some("-1,1,3".into()), m: Some(3), ..Default::default() };
        let s = Settings::resolve(&model, &SamplingArgs::default(), None, None, &cfg).unwrap();
        assert_eq!(s.origin, 3);
        let model = ModelArgs { ic: Some("onesided".into()), k0: Some(0), m: Some(2), ..Default::default() };
        let s = Settings::resolve(&model, &SamplingArgs::default(), None, None, &cfg).unwrap();
        assert_eq!(s.ic, InitialCondition::OneSidedAlternating { k0: 0 });
        assert_eq!(s.origin, 4);
    }

    #[test]
    fn usage_errors() {
        let cfg = ConfigFile::default();
        let even = ModelArgs { m: Some(2), ..Default::default() };
        assert!(matches!(
            Settings::resolve(&even, &SamplingArgs::default(), None, None, &cfg),
            Err(CliError::Usage(_))
        ));
        let no_sites = ModelArgs { ic: Some("finite".into()), ..Default::default() };
        assert!(Settings::resolve(&no_sites, &SamplingArgs::default(), None, None, &cfg).is_err());
        let bad_p = ModelArgs { p: Some(1.5), ..Default::default() };
        assert!(Settings::resolve(&bad_p, &SamplingArgs::default(), None, None, &cfg).is_err());
    }
}
