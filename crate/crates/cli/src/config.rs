//! Flags and config files, merged (flags win) and resolved into a validated
//! [`ExperimentConfig`].

use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::{Deserialize, Deserializer, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use stripcs::ensembles::{Family, MatrixSpec};
use stripcs::recon::{Association, Noise, ValueModel};
use stripcs::stripcheck::CertifyMode;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("config field `{path}`: {reason}")]
    Field { path: String, reason: String },
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("cannot parse {path}: {reason}")]
    Parse { path: PathBuf, reason: String },
}

fn field(path: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Field { path: path.to_string(), reason: reason.into() }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Certify,
    Strip,
    Coherence,
    Condition,
    Recon,
    ReconSweep,
    Mcdiarmid,
    Noise,
    Bounds,
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).expect("kind serializes");
        f.write_str(s.as_str().expect("unit variant"))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Function whose concentration the `mcdiarmid` experiment measures.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum McFunction {
    /// Half the sum of +-1 labels (first half of the ground set labelled +1), c_i = 1.
    #[default]
    HalfSum,
    /// `||f||^2` for fixed values on a random support.
    Energy,
    /// Coherence of a random support with column 0.
    Coherence,
}

/// Everything settable from the command line or a config file. Unset fields
/// take per-experiment defaults.
#[derive(Args, Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Settings {
    /// JSON or TOML file with any of these settings; flags override it.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,

    /// dg | kerdock | rm2 | chirp | bch | partial_fourier | gaussian
    #[arg(long)]
    pub family: Option<String>,
    #[arg(long)]
    pub m: Option<u32>,
    #[arg(long)]
    pub r: Option<u32>,
    #[arg(long)]
    pub p: Option<usize>,
    #[arg(long)]
    pub t: Option<u32>,
    /// Columns (partial_fourier, gaussian).
    #[arg(long)]
    pub c: Option<usize>,
    /// Rows (partial_fourier, gaussian).
    #[arg(long)]
    pub n: Option<usize>,
    /// Seed of the matrix itself; defaults to --seed.
    #[arg(long)]
    pub matrix_seed: Option<u64>,
    #[arg(long)]
    pub subsample: Option<usize>,

    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,

    /// Sparsities: `4`, `1..48` (inclusive) or `2,4,8`.
    #[arg(long)]
    #[serde(deserialize_with = "list_text")]
    pub k: Option<String>,
    /// Comma-separated distortion levels.
    #[arg(long)]
    #[serde(deserialize_with = "list_text")]
    pub epsilon: Option<String>,
    /// Column-sum exponent; derived from the family when omitted.
    #[arg(long)]
    pub eta: Option<f64>,
    /// unit_sphere | gaussian | unit_phase
    #[arg(long)]
    pub value_model: Option<String>,

    /// auto | exhaustive | sampled
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long)]
    pub pairs: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,

    /// none | measurement | signal
    #[arg(long)]
    pub noise: Option<String>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub eps_prime: Option<f64>,

    /// Number of small entries added to each signal.
    #[arg(long)]
    pub tail: Option<usize>,
    #[arg(long)]
    pub sigma_tail: Option<f64>,
    /// voting | offset_peaks
    #[arg(long)]
    pub association: Option<String>,
    #[arg(long)]
    pub offsets: Option<usize>,
    #[arg(long)]
    pub candidates: Option<usize>,
    #[arg(long)]
    pub width: Option<usize>,
    /// Record per-trial wall time in recon_sweep.csv (makes the file nondeterministic).
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub timing: Option<bool>,

    /// half_sum | energy | coherence
    #[arg(long)]
    pub function: Option<String>,
    /// Multiples of sqrt(sum c_i^2) at which the tail is measured.
    #[arg(long)]
    #[serde(deserialize_with = "list_text")]
    pub q: Option<String>,
    #[arg(long)]
    pub ground: Option<usize>,
    #[arg(long)]
    pub probes: Option<usize>,
    #[arg(long)]
    pub rho: Option<f64>,
}

fn list_text<'de, D: Deserializer<'de>>(d: D) -> Result<Option<String>, D::Error> {
    fn item(v: &Value) -> Option<String> {
        match v {
            Value::String(s) => Some(s.clone()),
            Value::Number(n) => Some(n.to_string()),
            _ => None,
        }
    }
    let v = Option::<Value>::deserialize(d)?;
    match v {
        None | Some(Value::Null) => Ok(None),
        Some(Value::Array(items)) => items
            .iter()
            .map(item)
            .collect::<Option<Vec<_>>>()
            .map(|v| Some(v.join(",")))
            .ok_or_else(|| serde::de::Error::custom("expected numbers or strings")),
        Some(other) => item(&other).map(Some).ok_or_else(|| serde::de::Error::custom("expected a number, string or list")),
    }
}

impl Settings {
    pub fn from_file(path: &Path) -> Result<Settings, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        let parse = |reason: String| ConfigError::Parse { path: path.to_path_buf(), reason };
        if path.extension().is_some_and(|e| e == "toml") {
            toml::from_str(&text).map_err(|e| parse(e.to_string()))
        } else {
            serde_json::from_str(&text).map_err(|e| parse(e.to_string()))
        }
    }

    /// `self` with every field that `over` sets replaced.
    pub fn overlay(&self, over: &Settings) -> Settings {
        let mut base = serde_json::to_value(self).expect("settings serialize");
        let top = serde_json::to_value(over).expect("settings serialize");
        if let (Some(b), Some(t)) = (base.as_object_mut(), top.as_object()) {
            for (key, v) in t {
                if !v.is_null() {
                    b.insert(key.clone(), v.clone());
                }
            }
        }
        serde_json::from_value(base).expect("overlay keeps the schema")
    }

    /// Reads `--config` if given and applies the flags on top.
    pub fn with_file(self) -> Result<Settings, ConfigError> {
        match &self.config {
            Some(path) => Ok(Settings::from_file(path)?.overlay(&self)),
            None => Ok(self),
        }
    }
}

/// Parses `4`, `1..48`, `1..=48`, `2,4,8` or mixtures like `1..10,20,40`.
pub fn parse_k(text: &str) -> Result<Vec<usize>, ConfigError> {
    let bad = |s: &str| field("k", format!("cannot parse `{s}`"));
    let mut out = Vec::new();
    for part in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        if let Some((a, b)) = part.split_once("..") {
            let b = b.trim_start_matches('=');
            let (a, b): (usize, usize) = (a.trim().parse().map_err(|_| bad(part))?, b.trim().parse().map_err(|_| bad(part))?);
            if a > b {
                return Err(field("k", format!("empty range `{part}`")));
            }
            out.extend(a..=b);
        } else {
            out.push(part.parse().map_err(|_| bad(part))?);
        }
    }
    if out.is_empty() {
        return Err(field("k", "no sparsity given"));
    }
    Ok(out)
}

fn parse_reals(path: &str, text: &str) -> Result<Vec<f64>, ConfigError> {
    let out: Vec<f64> = text
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|_| field(path, format!("cannot parse `{s}`"))))
        .collect::<Result<_, _>>()?;
    if out.is_empty() {
        return Err(field(path, "empty list"));
    }
    Ok(out)
}

/// Fully resolved experiment description; serialized into `summary.json` and hashed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub kind: Kind,
    pub matrix: Option<MatrixSpec>,
    pub seed: u64,
    pub trials: usize,
    pub k: Vec<usize>,
    pub epsilon: Vec<f64>,
    pub eta: Option<f64>,
    pub value_model: ValueModel,
    /// `None` picks exhaustive when the matrix is small enough.
    pub certify_mode: Option<CertifyMode>,
    pub tol: f64,
    pub noise: Noise,
    pub gamma: f64,
    pub eps_prime: f64,
    pub tail: usize,
    pub sigma_tail: f64,
    pub association: Association,
    pub function: McFunction,
    pub q: Vec<f64>,
    pub ground: usize,
    pub probes: usize,
    pub rho: Option<f64>,
    pub timing: bool,
    pub out: PathBuf,
    pub threads: Option<usize>,
    pub format: Format,
}

fn matrix_spec(s: &Settings, seed: u64) -> Result<Option<MatrixSpec>, ConfigError> {
    let Some(name) = s.family.as_deref() else {
        for (name, set) in [("m", s.m.is_some()), ("r", s.r.is_some()), ("p", s.p.is_some()), ("t", s.t.is_some()), ("c", s.c.is_some()), ("n", s.n.is_some())] {
            if set {
                return Err(field(name, "given without --family"));
            }
        }
        return Ok(None);
    };
    let allowed: &[&str] = match name {
        "dg" | "kerdock" => &["m", "r"],
        "rm2" => &["m"],
        "chirp" => &["p"],
        "bch" => &["m", "t"],
        "partial_fourier" | "partial-fourier" | "gaussian" => &["c", "n"],
        other => return Err(field("family", format!("unknown family `{other}`"))),
    };
    for (param, set) in [("m", s.m.is_some()), ("r", s.r.is_some()), ("p", s.p.is_some()), ("t", s.t.is_some()), ("c", s.c.is_some()), ("n", s.n.is_some())] {
        if set && !allowed.contains(&param) {
            return Err(field(param, format!("not a parameter of family {name}")));
        }
    }
    let need = |v: Option<u32>, p: &str| v.ok_or_else(|| field(p, format!("required by family {name}")));
    let need_usize = |v: Option<usize>, p: &str| v.ok_or_else(|| field(p, format!("required by family {name}")));
    let family = match name {
        "dg" => Family::Dg { m: need(s.m, "m")?, r: s.r.unwrap_or(0) },
        "kerdock" => {
            if s.r.is_some_and(|r| r != 0) {
                return Err(field("r", "kerdock means r = 0"));
            }
            Family::Dg { m: need(s.m, "m")?, r: 0 }
        }
        "rm2" => Family::Rm2 { m: need(s.m, "m")? },
        "chirp" => Family::Chirp { p: need_usize(s.p, "p")? },
        "bch" => Family::Bch { m: need(s.m, "m")?, t: need(s.t, "t")? },
        "gaussian" => Family::Gaussian { n: need_usize(s.n, "n")?, c: need_usize(s.c, "c")? },
        _ => Family::PartialFourier { c: need_usize(s.c, "c")?, n: need_usize(s.n, "n")? },
    };
    let mut spec = MatrixSpec::new(family).with_seed(s.matrix_seed.unwrap_or(seed));
    if let Some(cols) = s.subsample {
        spec = spec.with_subsample(cols);
    }
    spec.build().map_err(|e| field("family", e.to_string()))?;
    Ok(Some(spec))
}

impl ExperimentConfig {
    pub fn resolve(kind: Kind, s: &Settings) -> Result<ExperimentConfig, ConfigError> {
        let seed = s.seed.unwrap_or(0);
        let matrix = matrix_spec(s, seed)?;
        let (trials, k, eps) = match kind {
            Kind::Certify => (1, "1", "0.5"),
            Kind::Strip | Kind::Coherence => (10_000, "4", "0.3,0.5"),
            Kind::Condition => (1000, "2..16", "0.5"),
            Kind::Recon => (1, "10", "0.1"),
            Kind::ReconSweep => (100, "1..48", "0.1"),
            Kind::Mcdiarmid => (100_000, "3", "0.5"),
            Kind::Noise => (10_000, "10", "0.5"),
            Kind::Bounds => (1, "4", "0.3,0.5"),
        };
        let trials = s.trials.unwrap_or(trials);
        if trials == 0 {
            return Err(field("trials", "must be at least 1"));
        }
        let k = parse_k(s.k.as_deref().unwrap_or(k))?;
        let epsilon = parse_reals("epsilon", s.epsilon.as_deref().unwrap_or(eps))?;
        if let Some(e) = epsilon.iter().find(|e| !(**e > 0.0 && e.is_finite())) {
            return Err(field("epsilon", format!("must be positive, got {e}")));
        }
        if let Some(eta) = s.eta {
            if !(eta > 0.0 && eta <= 2.0) {
                return Err(field("eta", format!("must be in (0, 2], got {eta}")));
            }
        }
        let value_model = match s.value_model.as_deref() {
            None => {
                if matches!(kind, Kind::Recon | Kind::ReconSweep) {
                    ValueModel::UnitPhase
                } else {
                    ValueModel::UnitSphere
                }
            }
            Some(v) => v.parse().map_err(|e: stripcs::Error| field("value_model", e.to_string()))?,
        };
        let certify_mode = match s.mode.as_deref().unwrap_or("auto") {
            "auto" => None,
            "exhaustive" => Some(CertifyMode::Exhaustive),
            "sampled" => Some(CertifyMode::Sampled { pairs: s.pairs.unwrap_or(10_000), seed }),
            other => return Err(field("mode", format!("unknown certify mode `{other}`"))),
        };
        let tol = s.tol.unwrap_or(1e-9);
        if !(tol > 0.0) {
            return Err(field("tol", "must be positive"));
        }

        let default_noise = if kind == Kind::Noise { "measurement" } else { "none" };
        let default_sigma = if kind == Kind::Noise { 0.002 } else { 0.001 };
        let sigma = s.sigma.unwrap_or(default_sigma);
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(field("sigma", format!("must be positive, got {sigma}")));
        }
        let noise = match s.noise.as_deref().unwrap_or(if s.sigma.is_some() && kind != Kind::Noise { "measurement" } else { default_noise }) {
            "none" => Noise::None,
            "measurement" => Noise::Measurement { sigma },
            "signal" => Noise::Signal { sigma },
            other => return Err(field("noise", format!("unknown noise kind `{other}`"))),
        };
        if kind == Kind::Noise && !matches!(noise, Noise::Measurement { .. }) {
            return Err(field("noise", "the noise experiment uses measurement noise"));
        }
        let gamma = s.gamma.unwrap_or(0.1);
        if !(gamma >= 0.0) {
            return Err(field("gamma", "must be nonnegative"));
        }
        let eps_prime = s.eps_prime.unwrap_or(0.3);
        if !(0.0..1.0).contains(&eps_prime) {
            return Err(field("eps_prime", "must be in [0, 1)"));
        }
        let sigma_tail = s.sigma_tail.unwrap_or(0.01);
        if !(sigma_tail > 0.0) {
            return Err(field("sigma_tail", "must be positive"));
        }
        let association = match s.association.as_deref().unwrap_or("voting") {
            "voting" => Association::Voting { offsets: s.offsets, candidates: s.candidates.unwrap_or(4) },
            "offset_peaks" | "offset-peaks" => Association::OffsetPeaks { width: s.width.unwrap_or(3) },
            other => return Err(field("association", format!("unknown association `{other}`"))),
        };
        let function = match s.function.as_deref().unwrap_or("half_sum") {
            "half_sum" | "half-sum" => McFunction::HalfSum,
            "energy" => McFunction::Energy,
            "coherence" => McFunction::Coherence,
            other => return Err(field("function", format!("unknown function `{other}`"))),
        };
        let q = parse_reals("q", s.q.as_deref().unwrap_or("0.25,0.5,0.75,1,1.5"))?;

        let needs_matrix = match kind {
            Kind::Mcdiarmid => function != McFunction::HalfSum,
            _ => true,
        };
        if needs_matrix && matrix.is_none() {
            return Err(field("family", format!("required by `{kind}`")));
        }
        if matches!(kind, Kind::Recon | Kind::ReconSweep) && !matches!(matrix.as_ref().map(|m| &m.family), Some(Family::Dg { .. })) {
            return Err(field("family", "reconstruction needs a dg matrix"));
        }

        Ok(ExperimentConfig {
            kind,
            matrix,
            seed,
            trials,
            k,
            epsilon,
            eta: s.eta,
            value_model,
            certify_mode,
            tol,
            noise,
            gamma,
            eps_prime,
            tail: s.tail.unwrap_or(0),
            sigma_tail,
            association,
            function,
            q,
            ground: s.ground.unwrap_or(1024),
            probes: s.probes.unwrap_or(200),
            rho: s.rho,
            timing: s.timing.unwrap_or(false),
            out: s.out.clone().unwrap_or_else(|| PathBuf::from("out").join(kind.to_string())),
            threads: s.threads,
            format: s.format.unwrap_or_default(),
        })
    }

    /// First 16 hex digits of SHA-256 over the canonical JSON of every field
    /// that can change results (output location, threads, format and timing excluded).
    pub fn hash(&self) -> String {
        let mut v = serde_json::to_value(self).expect("config serializes");
        if let Some(obj) = v.as_object_mut() {
            for key in ["out", "threads", "format", "timing"] {
                obj.remove(key);
            }
        }
        let digest = Sha256::digest(serde_json::to_string(&v).expect("value serializes").as_bytes());
        hex::encode(&digest[..8])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dg(m: u32) -> Settings {
        Settings { family: Some("dg".into()), m: Some(m), ..Default::default() }
    }

    #[test]
    fn k_ranges() {
        assert_eq!(parse_k("4").unwrap(), vec![4]);
        assert_eq!(parse_k("1..3").unwrap(), vec![1, 2, 3]);
        assert_eq!(parse_k("1..=2, 8").unwrap(), vec![1, 2, 8]);
        assert!(parse_k("3..1").is_err());
        assert!(parse_k("x").is_err());
    }

    #[test]
    fn family_parameter_mismatch_names_the_field() {
        let mut s = dg(5);
        s.p = Some(7);
        match ExperimentConfig::resolve(Kind::Strip, &s) {
            Err(ConfigError::Field { path, .. }) => assert_eq!(path, "p"),
            other => panic!("{other:?}"),
        }
        let s = Settings { family: Some("chirp".into()), ..Default::default() };
        assert!(ExperimentConfig::resolve(Kind::Strip, &s).is_err());
        let s = Settings { family: Some("dg".into()), m: Some(4), ..Default::default() };
        assert!(ExperimentConfig::resolve(Kind::Strip, &s).is_err());
    }

    #[test]
    fn flags_override_file() {
        let file: Settings = serde_json::from_str(r#"{"family":"dg","m":5,"k":[2,4],"trials":50,"seed":3}"#).unwrap();
        let flags = Settings { trials: Some(7), ..Default::default() };
        let merged = file.overlay(&flags);
        let cfg = ExperimentConfig::resolve(Kind::Strip, &merged).unwrap();
        assert_eq!((cfg.trials, cfg.seed, cfg.k.clone()), (7, 3, vec![2, 4]));
        let toml_file: Settings = toml::from_str("family = \"chirp\"\np = 5\nk = \"1..2\"\n").unwrap();
        assert_eq!(ExperimentConfig::resolve(Kind::Strip, &toml_file).unwrap().k, vec![1, 2]);
        assert!(serde_json::from_str::<Settings>(r#"{"famly":"dg"}"#).is_err());
    }

    #[test]
    fn config_round_trips_and_hash_ignores_output() {
        let cfg = ExperimentConfig::resolve(Kind::ReconSweep, &dg(5)).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
        let mut moved = cfg.clone();
        moved.out = PathBuf::from("elsewhere");
        moved.threads = Some(3);
        assert_eq!(moved.hash(), cfg.hash());
        let mut other = cfg.clone();
        other.seed = 1;
        assert_ne!(other.hash(), cfg.hash());
    }

    #[test]
    fn recon_requires_dg() {
        let s = Settings { family: Some("chirp".into()), p: Some(5), ..Default::default() };
        assert!(ExperimentConfig::resolve(Kind::Recon, &s).is_err());
        assert!(ExperimentConfig::resolve(Kind::Mcdiarmid, &Settings::default()).is_ok());
        assert!(ExperimentConfig::resolve(Kind::Strip, &Settings::default()).is_err());
    }
}
