//! Config-file parsing, sweep orchestration, and result persistence
//! (CSV + JSON + content-addressed cache).
//!
//! The config format is flat `key = value` lines with `#` comments. Every
//! value can be overridden through the environment with the `SQUIDSIM_`
//! prefix (e.g. `SQUIDSIM_BASIS_SIZE=50`). Outputs carry no wall-clock
//! timestamp so identical config + version produce byte-identical files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::observables::{flux_sweep, SweepRecord, ZetaMode};
use crate::params::{derive_scales, BathParams, SquidParams};

pub const ENV_PREFIX: &str = "SQUIDSIM_";

/// Exact CSV column contract, in order.
pub const CSV_COLUMNS: [&str; 12] = [
    "flux_fraction",
    "xi",
    "purity_first",
    "purity_second",
    "current_first_A",
    "current_second_A",
    "zeta_star",
    "residual_first",
    "residual_second",
    "gap_first",
    "gap_second",
    "N",
];

const KNOWN_KEYS: [&str; 18] = [
    "capacitance_F",
    "inductance_H",
    "josephson_energy_J",
    "gamma_rad_s",
    "quality_factor",
    "gamma_over_omega0",
    "cutoff_over_omega0",
    "temperature_K",
    "flux_start",
    "flux_stop",
    "flux_points",
    "flux_fraction",
    "basis_size",
    "zeta_mode",
    "output_csv",
    "output_json",
    "cache",
    "workers",
];

/// How the damping strength was specified.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum GammaSpec {
    RadPerSec(f64),
    QualityFactor(f64),
    RatioToOmega0(f64),
}

/// Everything a sweep run needs, resolved from file + environment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub squid: SquidParams,
    pub gamma: GammaSpec,
    /// Cutoff ratios Omega/omega0 to sweep; f64::INFINITY is the ideal
    /// (xi = 0) limit, spelled "inf" in the config.
    pub cutoffs_over_omega0: Vec<f64>,
    pub flux_grid: Vec<f64>,
    pub basis_size: usize,
    pub zeta_mode: ZetaMode,
    pub output_csv: PathBuf,
    pub output_json: PathBuf,
    pub cache_dir: Option<PathBuf>,
    /// 0 means "use every available core".
    pub workers: usize,
    /// The resolved key-value pairs, echoed into the result bundle and
    /// hashed for the cache key.
    pub resolved: BTreeMap<String, String>,
}

fn bad(line: Option<usize>, key: &str, msg: &str) -> Error {
    match line {
        Some(n) => Error::Config(format!("line {n}: key '{key}': {msg}")),
        None => Error::Config(format!("environment {ENV_PREFIX}{}: {msg}", key.to_uppercase())),
    }
}

fn parse_f64(raw: &str, line: Option<usize>, key: &str) -> Result<f64> {
    raw.parse::<f64>().map_err(|_| bad(line, key, &format!("expected a number, got '{raw}'")))
}

/// Parse the flat key = value text. `source` labels diagnostics (file path).
pub fn parse_config_str(text: &str, env: &[(String, String)]) -> Result<RunConfig> {
    let mut kv: BTreeMap<String, (String, Option<usize>)> = BTreeMap::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let n = idx + 1;
        let line = raw_line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Config(format!("line {n}: expected 'key = value', got '{line}'")));
        };
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if !KNOWN_KEYS.contains(&key.as_str()) {
            return Err(Error::Config(format!("line {n}: unknown key '{key}'")));
        }
        if kv.insert(key.clone(), (value, Some(n))).is_some() {
            return Err(Error::Config(format!("line {n}: duplicate key '{key}'")));
        }
    }
    // environment overrides: SQUIDSIM_<KEY uppercased>
    for (name, value) in env {
        let Some(suffix) = name.strip_prefix(ENV_PREFIX) else { continue };
        let key = suffix.to_lowercase();
        let key = KNOWN_KEYS
            .iter()
            .find(|k| k.to_lowercase() == key)
            .ok_or_else(|| Error::Config(format!("environment {name}: unknown key")))?;
        kv.insert(key.to_string(), (value.clone(), None));
    }
    resolve(kv)
}

fn resolve(kv: BTreeMap<String, (String, Option<usize>)>) -> Result<RunConfig> {
    let get = |key: &str| kv.get(key).map(|(v, n)| (v.as_str(), *n));
    let get_f64 = |key: &str, default: f64| -> Result<f64> {
        match get(key) {
            Some((v, n)) => parse_f64(v, n, key),
            None => Ok(default),
        }
    };

    let defaults = SquidParams::paper_defaults();
    let squid = SquidParams {
        capacitance: get_f64("capacitance_F", defaults.capacitance)?,
        inductance: get_f64("inductance_H", defaults.inductance)?,
        josephson_energy: get_f64("josephson_energy_J", defaults.josephson_energy)?,
        external_flux: 0.0,
    };

    if let Some((v, n)) = get("temperature_K") {
        let t = parse_f64(v, n, "temperature_K")?;
        if t != 0.0 {
            return Err(bad(n, "temperature_K", "finite bath temperature is not supported (only 0)"));
        }
    }

    let gamma_keys: Vec<&str> = ["gamma_rad_s", "quality_factor", "gamma_over_omega0"]
        .into_iter()
        .filter(|k| kv.contains_key(*k))
        .collect();
    if gamma_keys.len() > 1 {
        return Err(Error::Config(format!(
            "conflicting damping keys: {} (give exactly one)",
            gamma_keys.join(", ")
        )));
    }
    let gamma = match gamma_keys.first().copied() {
        Some(key) => {
            let (v, n) = get(key).unwrap();
            let value = parse_f64(v, n, key)?;
            if !(value > 0.0) || !value.is_finite() {
                return Err(bad(n, key, "must be a positive finite number"));
            }
            match key {
                "gamma_rad_s" => GammaSpec::RadPerSec(value),
                "quality_factor" => GammaSpec::QualityFactor(value),
                _ => GammaSpec::RatioToOmega0(value),
            }
        }
        None => GammaSpec::RatioToOmega0(1e-3),
    };

    let mut cutoffs = Vec::new();
    match get("cutoff_over_omega0") {
        Some((v, n)) => {
            for item in v.split(',') {
                let item = item.trim();
                let ratio = if item.eq_ignore_ascii_case("inf") {
                    f64::INFINITY
                } else {
                    let r = parse_f64(item, n, "cutoff_over_omega0")?;
                    if !(r > 0.0) {
                        return Err(bad(n, "cutoff_over_omega0", "ratios must be positive"));
                    }
                    r
                };
                cutoffs.push(ratio);
            }
        }
        None => cutoffs.push(f64::INFINITY),
    }
    if cutoffs.is_empty() {
        return Err(Error::Config("cutoff_over_omega0 resolves to an empty list".into()));
    }

    let flux_grid = if let Some((v, n)) = get("flux_fraction") {
        for conflicting in ["flux_start", "flux_stop", "flux_points"] {
            if kv.contains_key(conflicting) {
                return Err(bad(n, "flux_fraction", "conflicts with the flux_start/stop/points grid"));
            }
        }
        vec![parse_f64(v, n, "flux_fraction")?]
    } else {
        let start = get_f64("flux_start", 0.0)?;
        let stop = get_f64("flux_stop", 1.0)?;
        let points = match get("flux_points") {
            Some((v, n)) => v
                .parse::<usize>()
                .map_err(|_| bad(n, "flux_points", &format!("expected a positive integer, got '{v}'")))?,
            None => 101,
        };
        if points == 0 {
            return Err(Error::Config("flux_points must be at least 1".into()));
        }
        if points == 1 {
            vec![start]
        } else {
            (0..points)
                .map(|k| start + (stop - start) * k as f64 / (points - 1) as f64)
                .collect()
        }
    };

    let basis_size = match get("basis_size") {
        Some((v, n)) => v
            .parse::<usize>()
            .map_err(|_| bad(n, "basis_size", &format!("expected a positive integer, got '{v}'")))?,
        None => 40,
    };
    if basis_size < 2 {
        return Err(Error::Config(format!("basis_size must be at least 2, got {basis_size}")));
    }

    let zeta_mode = match get("zeta_mode") {
        None => ZetaMode::Optimize,
        Some((v, n)) => match v {
            "optimize" => ZetaMode::Optimize,
            "paper" => ZetaMode::PaperConvention,
            other => match other.parse::<f64>() {
                Ok(z) if z > 0.0 && z < 1.0 => ZetaMode::Fixed(z),
                _ => {
                    return Err(bad(
                        n,
                        "zeta_mode",
                        "expected 'optimize', 'paper', or a number strictly inside (0, 1)",
                    ))
                }
            },
        },
    };

    let output_csv = PathBuf::from(get("output_csv").map(|(v, _)| v).unwrap_or("results.csv"));
    let output_json = PathBuf::from(get("output_json").map(|(v, _)| v).unwrap_or("results.json"));

    let cache_dir = match get("cache") {
        None => Some(PathBuf::from(".squidsim-cache")),
        Some((v, n)) => match v {
            "off" | "false" | "0" => None,
            "on" | "true" | "1" => Some(PathBuf::from(".squidsim-cache")),
            dir => {
                if dir.is_empty() {
                    return Err(bad(n, "cache", "expected on/off or a directory path"));
                }
                Some(PathBuf::from(dir))
            }
        },
    };

    let workers = match get("workers") {
        Some((v, n)) => v
            .parse::<usize>()
            .map_err(|_| bad(n, "workers", &format!("expected a non-negative integer, got '{v}'")))?,
        None => 0,
    };

    let resolved: BTreeMap<String, String> =
        kv.into_iter().map(|(k, (v, _))| (k, v)).collect();

    Ok(RunConfig {
        squid,
        gamma,
        cutoffs_over_omega0: cutoffs,
        flux_grid,
        basis_size,
        zeta_mode,
        output_csv,
        output_json,
        cache_dir,
        workers,
        resolved,
    })
}

/// Read and parse a config file, applying `SQUIDSIM_*` overrides from the
/// process environment.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let env: Vec<(String, String)> = std::env::vars().collect();
    parse_config_str(&text, &env)
}

/// Sweep results plus the provenance needed to reproduce them. Deliberately
/// carries no timestamp: identical config + version must serialize to
/// identical bytes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResultBundle {
    pub version: String,
    /// Resolved config key-value pairs (after environment overrides).
    pub config: BTreeMap<String, String>,
    /// sha-256 over version + canonical config lines; also the cache key.
    pub content_hash: String,
    pub basis_size: usize,
    pub records: Vec<SweepRecord>,
}

/// Cache key: hash of the resolved config and the code version, so a code
/// change invalidates previous entries.
pub fn content_hash(config: &RunConfig) -> String {
    let mut hasher = Sha256::new();
    hasher.update(env!("CARGO_PKG_VERSION").as_bytes());
    hasher.update(b"\n");
    for (k, v) in &config.resolved {
        hasher.update(k.as_bytes());
        hasher.update(b"=");
        hasher.update(v.as_bytes());
        hasher.update(b"\n");
    }
    let digest = hasher.finalize();
    let mut hex = String::with_capacity(64);
    for byte in digest {
        let _ = write!(hex, "{byte:02x}");
    }
    hex
}

/// Run the full sweep described by the config: every cutoff ratio over the
/// flux grid, rows ordered (cutoff, flux).
pub fn run_sweep(config: &RunConfig) -> Result<ResultBundle> {
    let mut records = Vec::with_capacity(config.cutoffs_over_omega0.len() * config.flux_grid.len());
    // omega0 is needed to convert the damping spec, so derive it once with a
    // neutral bath, then set gamma/omega0 and xi per cutoff.
    let neutral = BathParams {
        damping_rate: 0.0,
        cutoff_frequency: f64::INFINITY,
        temperature: 0.0,
    };
    let base = derive_scales(&config.squid, &neutral)?;
    let gamma_over_omega0 = match config.gamma {
        GammaSpec::RadPerSec(g) => g / base.omega0,
        GammaSpec::QualityFactor(q) => 1.0 / q,
        GammaSpec::RatioToOmega0(r) => r,
    };
    for &ratio in &config.cutoffs_over_omega0 {
        let xi = if ratio.is_infinite() { 0.0 } else { 1.0 / ratio };
        let scales = base.with_gamma(gamma_over_omega0).with_xi(xi);
        records.extend(flux_sweep(&scales, &config.flux_grid, config.basis_size, config.zeta_mode));
    }
    Ok(ResultBundle {
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: config.resolved.clone(),
        content_hash: content_hash(config),
        basis_size: config.basis_size,
        records,
    })
}

fn sci(v: f64) -> String {
    // 17 significant digits round-trips every f64
    format!("{v:.16e}")
}

/// Serialize records to the fixed CSV contract.
pub fn records_to_csv(records: &[SweepRecord]) -> String {
    let mut out = String::new();
    out.push_str(&CSV_COLUMNS.join(","));
    out.push('\n');
    for r in records {
        let fields = [
            sci(r.flux_fraction),
            sci(r.xi),
            sci(r.purity_first),
            sci(r.purity_second),
            sci(r.current_first_a),
            sci(r.current_second_a),
            sci(r.zeta_star),
            sci(r.residual_first),
            sci(r.residual_second),
            sci(r.gap_first),
            sci(r.gap_second),
            r.basis_size.to_string(),
        ];
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

pub fn bundle_to_json(bundle: &ResultBundle) -> Result<String> {
    serde_json::to_string_pretty(bundle)
        .map_err(|e| Error::Config(format!("serialization failure: {e}")))
}

/// Outcome of `write_outputs`, for logging.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepOutcome {
    Computed,
    CacheHit,
}

/// If the cache holds this config's hash, copy the cached artifacts to the
/// output paths; otherwise run the sweep and populate both outputs and cache.
/// Returns the bundle hash and whether the cache was hit.
pub fn sweep_with_cache(config: &RunConfig) -> Result<(String, SweepOutcome, Vec<SweepRecord>)> {
    let hash = content_hash(config);
    if let Some(dir) = &config.cache_dir {
        let cached_csv = dir.join(format!("{hash}.csv"));
        let cached_json = dir.join(format!("{hash}.json"));
        if cached_csv.is_file() && cached_json.is_file() {
            fs::copy(&cached_csv, &config.output_csv)?;
            fs::copy(&cached_json, &config.output_json)?;
            let text = fs::read_to_string(&cached_json)?;
            let bundle: ResultBundle = serde_json::from_str(&text)
                .map_err(|e| Error::Config(format!("corrupt cache entry {hash}: {e}")))?;
            return Ok((hash, SweepOutcome::CacheHit, bundle.records));
        }
    }
    let bundle = run_sweep(config)?;
    let csv = records_to_csv(&bundle.records);
    let json = bundle_to_json(&bundle)?;
    fs::write(&config.output_csv, &csv)?;
    fs::write(&config.output_json, &json)?;
    if let Some(dir) = &config.cache_dir {
        fs::create_dir_all(dir)?;
        fs::write(dir.join(format!("{hash}.csv")), &csv)?;
        fs::write(dir.join(format!("{hash}.json")), &json)?;
    }
    Ok((hash, SweepOutcome::Computed, bundle.records))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<RunConfig> {
        parse_config_str(text, &[])
    }

    #[test]
    fn defaults_give_paper_run() {
        let cfg = parse("").unwrap();
        assert_eq!(cfg.flux_grid.len(), 101);
        assert_eq!(cfg.basis_size, 40);
        assert_eq!(cfg.cutoffs_over_omega0, vec![f64::INFINITY]);
        assert_eq!(cfg.gamma, GammaSpec::RatioToOmega0(1e-3));
        assert_eq!(cfg.zeta_mode, ZetaMode::Optimize);
    }

    #[test]
    fn unknown_key_names_line() {
        let err = parse("basis_size = 20\nfrobnicate = 3\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 2"), "{msg}");
        assert!(msg.contains("frobnicate"), "{msg}");
    }

    #[test]
    fn bad_number_names_line_and_key() {
        let err = parse("inductance_H = soup").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 1") && msg.contains("inductance_H"), "{msg}");
    }

    #[test]
    fn nonzero_temperature_is_rejected_by_name() {
        let err = parse("temperature_K = 4").unwrap_err();
        assert!(err.to_string().contains("temperature_K"), "{err}");
    }

    #[test]
    fn conflicting_gamma_keys_rejected() {
        let err = parse("gamma_rad_s = 1e9\nquality_factor = 100\n").unwrap_err();
        assert!(err.to_string().contains("gamma_rad_s"), "{err}");
    }

    #[test]
    fn cutoff_list_with_inf() {
        let cfg = parse("cutoff_over_omega0 = inf, 10, 2.5").unwrap();
        assert!(cfg.cutoffs_over_omega0[0].is_infinite());
        assert_eq!(&cfg.cutoffs_over_omega0[1..], &[10.0, 2.5]);
    }

    #[test]
    fn env_overrides_file_value() {
        let env = vec![("SQUIDSIM_BASIS_SIZE".to_string(), "24".to_string())];
        let cfg = parse_config_str("basis_size = 40", &env).unwrap();
        assert_eq!(cfg.basis_size, 24);
    }

    #[test]
    fn env_unknown_key_rejected() {
        let env = vec![("SQUIDSIM_NOPE".to_string(), "1".to_string())];
        assert!(parse_config_str("", &env).is_err());
    }

    #[test]
    fn comments_and_blanks_ignored() {
        let cfg = parse("# a comment\n\nbasis_size = 12 # trailing\n").unwrap();
        assert_eq!(cfg.basis_size, 12);
    }

    #[test]
    fn single_flux_point() {
        let cfg = parse("flux_fraction = 0.5").unwrap();
        assert_eq!(cfg.flux_grid, vec![0.5]);
        assert!(parse("flux_fraction = 0.5\nflux_points = 3").is_err());
    }

    #[test]
    fn hash_changes_with_config_but_not_key_order() {
        let a = parse("basis_size = 20\nflux_points = 5").unwrap();
        let b = parse("flux_points = 5\nbasis_size = 20").unwrap();
        let c = parse("flux_points = 7\nbasis_size = 20").unwrap();
        assert_eq!(content_hash(&a), content_hash(&b));
        assert_ne!(content_hash(&a), content_hash(&c));
    }

    #[test]
    fn csv_header_matches_contract() {
        let csv = records_to_csv(&[]);
        assert_eq!(
            csv,
            "flux_fraction,xi,purity_first,purity_second,current_first_A,current_second_A,\
             zeta_star,residual_first,residual_second,gap_first,gap_second,N\n"
        );
    }

    #[test]
    fn csv_roundtrips_17_digits() {
        let r = SweepRecord {
            flux_fraction: 0.3,
            xi: 0.1,
            purity_first: std::f64::consts::PI / 4.0,
            purity_second: 0.9,
            current_first_a: -1.2e-7,
            current_second_a: -1.3e-7,
            zeta_star: 0.9,
            residual_first: 1e-12,
            residual_second: 1e-12,
            gap_first: 1e-3,
            gap_second: 1e-3,
            basis_size: 40,
            error: None,
        };
        let csv = records_to_csv(&[r]);
        let row = csv.lines().nth(1).unwrap();
        let cell: f64 = row.split(',').nth(2).unwrap().parse().unwrap();
        assert_eq!(cell, std::f64::consts::PI / 4.0);
    }

    #[test]
    fn zeta_mode_variants() {
        assert_eq!(parse("zeta_mode = paper").unwrap().zeta_mode, ZetaMode::PaperConvention);
        assert_eq!(parse("zeta_mode = 0.7").unwrap().zeta_mode, ZetaMode::Fixed(0.7));
        assert!(parse("zeta_mode = 1.5").is_err());
    }
}
