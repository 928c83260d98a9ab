use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use cubic_core::asym::SplitType;
use cubic_core::cubic_enum::X_CEILING;
use cubic_core::density::TestKind;
use cubic_core::primes::is_prime;
use cubic_core::Sign;

use crate::CliError;

#[derive(Debug, Parser)]
#[command(name = "cubicfam", version, about = "Cubic field family statistics and low-lying zero predictions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub opts: Overrides,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Enumerate the family and write the field cache.
    Enumerate,
    /// Local counts: errors.csv and fstat.csv.
    Counts,
    /// Global normalized error series: global_errors.csv.
    Errors,
    /// Theorem prediction and empirical average: density.csv.
    Density,
    /// Ratios prediction and the transition term: ratios.csv.
    Ratios,
    /// Empirical vs theorem vs ratios: compare.csv.
    Compare,
    /// Constants and identity checks as JSON.
    Selftest,
}

/// Command-line values; each overrides the config file.
#[derive(Debug, Default, Args)]
pub struct Overrides {
    /// key=value config file
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub x_max: Option<i64>,
    /// +, - or both
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub sign: Option<String>,
    /// comma-separated primes
    #[arg(long, global = true)]
    pub prime: Option<String>,
    /// comma-separated splitting types, e.g. T1,T4
    #[arg(long = "type", global = true)]
    pub types: Option<String>,
    #[arg(long, global = true)]
    pub sigma: Option<f64>,
    /// fejer or raised-cosine
    #[arg(long, global = true)]
    pub phi: Option<String>,
    #[arg(long, global = true)]
    pub theta: Option<f64>,
    #[arg(long, global = true)]
    pub omega: Option<f64>,
    /// comma-separated evaluation points for density, ratios and compare
    #[arg(long, global = true)]
    pub x: Option<String>,
    #[arg(long, global = true)]
    pub sieve_cutoff: Option<u64>,
    #[arg(long, global = true)]
    pub product_cutoff: Option<u64>,
    /// directory holding field caches
    #[arg(long, global = true)]
    pub cache: Option<PathBuf>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true)]
    pub no_timestamp: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub x_max: i64,
    pub signs: Vec<Sign>,
    pub primes: Vec<u64>,
    pub types: Vec<SplitType>,
    pub sigma: f64,
    pub phi_kind: TestKind,
    pub theta: f64,
    pub omega: f64,
    pub xs: Vec<i64>,
    pub sieve_cutoff: u64,
    pub product_cutoff: u64,
    pub cache_path: PathBuf,
    pub out_dir: PathBuf,
    pub threads: usize,
    pub timestamp: bool,
}

const KEYS: [&str; 15] = [
    "x_max",
    "sign",
    "prime",
    "type",
    "sigma",
    "phi",
    "theta",
    "omega",
    "x",
    "sieve_cutoff",
    "product_cutoff",
    "cache",
    "out",
    "threads",
    "no_timestamp",
];

/// Reads `key = value` lines; `#` starts a comment.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(CliError::Validation(format!("config line {}: expected key=value", i + 1)));
        };
        let key = k.trim().replace('-', "_");
        if !KEYS.contains(&key.as_str()) {
            return Err(CliError::Validation(format!("config line {}: unknown key '{}'", i + 1, k.trim())));
        }
        map.insert(key, v.trim().to_string());
    }
    Ok(map)
}

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, CliError> {
    v.trim().parse().map_err(|_| CliError::Validation(format!("{key}: cannot parse '{v}'")))
}

fn list<T: std::str::FromStr>(key: &str, v: &str) -> Result<Vec<T>, CliError> {
    v.split(',').filter(|s| !s.trim().is_empty()).map(|s| num(key, s)).collect()
}

fn parse_signs(v: &str) -> Result<Vec<Sign>, CliError> {
    match v.trim() {
        "both" | "+-" | "pm" => Ok(vec![Sign::Plus, Sign::Minus]),
        s => s.parse::<Sign>().map(|s| vec![s]).map_err(|e| CliError::Validation(format!("sign: {e}"))),
    }
}

fn parse_types(v: &str) -> Result<Vec<SplitType>, CliError> {
    v.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.parse::<SplitType>().map_err(|e| CliError::Validation(format!("type: {e}"))))
        .collect()
}

impl RunConfig {
    pub fn defaults() -> Self {
        RunConfig {
            x_max: 1_000_000,
            signs: vec![Sign::Plus],
            primes: vec![2, 3, 5, 7],
            types: SplitType::ALL.to_vec(),
            sigma: 0.3,
            phi_kind: TestKind::Fejer,
            theta: 2.0 / 3.0,
            omega: 2.0 / 3.0,
            xs: Vec::new(),
            sieve_cutoff: 10_000_000,
            product_cutoff: 100_000,
            cache_path: PathBuf::from("cache"),
            out_dir: PathBuf::from("out"),
            threads: 1,
            timestamp: true,
        }
    }

    fn apply(&mut self, key: &str, v: &str) -> Result<(), CliError> {
        match key {
            "x_max" => self.x_max = num(key, v)?,
            "sign" => self.signs = parse_signs(v)?,
            "prime" => self.primes = list(key, v)?,
            "type" => self.types = parse_types(v)?,
            "sigma" => self.sigma = num(key, v)?,
            "phi" => self.phi_kind = v.parse().map_err(CliError::Validation)?,
            "theta" => self.theta = num(key, v)?,
            "omega" => self.omega = num(key, v)?,
            "x" => self.xs = list::<f64>(key, v)?.into_iter().map(|x| x.round() as i64).collect(),
            "sieve_cutoff" => self.sieve_cutoff = num(key, v)?,
            "product_cutoff" => self.product_cutoff = num(key, v)?,
            "cache" => self.cache_path = PathBuf::from(v),
            "out" => self.out_dir = PathBuf::from(v),
            "threads" => self.threads = num(key, v)?,
            "no_timestamp" => self.timestamp = !num::<bool>(key, v)?,
            _ => return Err(CliError::Validation(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    /// Defaults, then the config file, then command-line values.
    pub fn resolve(o: &Overrides) -> Result<Self, CliError> {
        let mut cfg = RunConfig::defaults();
        if let Some(path) = &o.config {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Validation(format!("config {}: {e}", path.display())))?;
            for (k, v) in parse_config_text(&text)? {
                cfg.apply(&k, &v)?;
            }
        }
        let s = |v: &Option<String>| v.clone();
        let pairs: [(&str, Option<String>); 13] = [
            ("x_max", o.x_max.map(|v| v.to_string())),
            ("sign", s(&o.sign)),
            ("prime", s(&o.prime)),
            ("type", s(&o.types)),
            ("sigma", o.sigma.map(|v| v.to_string())),
            ("phi", s(&o.phi)),
            ("theta", o.theta.map(|v| v.to_string())),
            ("omega", o.omega.map(|v| v.to_string())),
            ("x", s(&o.x)),
            ("sieve_cutoff", o.sieve_cutoff.map(|v| v.to_string())),
            ("product_cutoff", o.product_cutoff.map(|v| v.to_string())),
            ("cache", o.cache.as_ref().map(|p| p.display().to_string())),
            ("out", o.out.as_ref().map(|p| p.display().to_string())),
        ];
        for (k, v) in pairs {
            if let Some(v) = v {
                cfg.apply(k, &v)?;
            }
        }
        if let Some(t) = o.threads {
            cfg.threads = t;
        }
        if o.no_timestamp {
            cfg.timestamp = false;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Validation(m));
        if !(2..=X_CEILING).contains(&self.x_max) {
            return bad(format!("x_max {} outside [2, {X_CEILING}]", self.x_max));
        }
        if self.signs.is_empty() {
            return bad("no sign given".into());
        }
        if let Some(p) = self.primes.iter().find(|&&p| !is_prime(p)) {
            return bad(format!("{p} is not prime"));
        }
        let mut ps = self.primes.clone();
        ps.sort_unstable();
        ps.dedup();
        if ps.len() != self.primes.len() || ps.is_empty() {
            return bad("prime list must be nonempty without duplicates".into());
        }
        if self.types.is_empty() {
            return bad("no splitting type given".into());
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return bad(format!("sigma {} must be positive", self.sigma));
        }
        if !(0.5..5.0 / 6.0).contains(&self.theta) {
            return bad(format!("theta {} outside [1/2, 5/6)", self.theta));
        }
        if !(self.omega > 0.0 && self.omega.is_finite()) {
            return bad(format!("omega {} must be positive", self.omega));
        }
        if let Some(x) = self.xs.iter().find(|&&x| x < 2) {
            return bad(format!("evaluation point {x} must be at least 2"));
        }
        if self.sieve_cutoff < 2 || self.product_cutoff < 2 || self.threads == 0 {
            return bad("sieve_cutoff, product_cutoff and threads must be positive".into());
        }
        Ok(())
    }

    /// Evaluation points, defaulting to `x_max`.
    pub fn eval_points(&self) -> Vec<i64> {
        if self.xs.is_empty() {
            vec![self.x_max]
        } else {
            self.xs.clone()
        }
    }

    pub fn out_file(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    pub fn cache_dir(&self) -> &Path {
        &self.cache_path
    }
}
