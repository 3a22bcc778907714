//! Flat `key = value` run configuration with `[section]` headers, `#`
//! comments and strict key checking.

use std::fmt::Write as _;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::charfun::Range;
use crate::frontsolve::SolverConfig;
use crate::kernel::KernelSpec;
use crate::model::{ModelSpec, NonlinearitySpec};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("{source_name}:{line}: {message} (key `{key}`)")]
    Parse {
        source_name: String,
        line: usize,
        key: String,
        message: String,
    },
    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Validation(Vec<String>),
}

/// Every accepted key with its default, in report order.
pub const KEYS: &[(&str, &str)] = &[
    ("kernel.family", "dirac"),
    ("kernel.sigma", "1"),
    ("kernel.mean", "0"),
    ("kernel.a", "1"),
    ("g.family", "nicholson"),
    ("g.p", "6"),
    ("g.delta", "1"),
    ("g.q", "8"),
    ("h", "0.2"),
    ("c", "5"),
    ("numerics.L", "40"),
    ("numerics.dt", "0.01"),
    ("numerics.tol_iter", "1e-10"),
    ("numerics.max_iter", "5000"),
    ("numerics.eps_lower", "auto"),
    ("map.h_min", "0"),
    ("map.h_max", "2"),
    ("map.h_step", "0.25"),
    ("map.c_min", "1"),
    ("map.c_max", "8"),
    ("map.c_step", "0.5"),
    ("fundsol.xi", "auto"),
    ("fundsol.L", "auto"),
    ("fundsol.dt", "0.01"),
    ("check.n_samples", "4096"),
];

/// Shorthand keys accepted outside any section.
const ALIASES: &[(&str, &str)] = &[("kernel", "kernel.family"), ("g", "g.family")];

/// Fully resolved configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Resolved `key = value` pairs in `KEYS` order.
    pub values: Vec<(String, String)>,
    pub kernel: KernelSpec,
    pub g: NonlinearitySpec,
    pub h: f64,
    pub c: f64,
    pub solver: SolverConfig,
    pub map_h: Range,
    pub map_c: Range,
    pub fundsol_xi: Option<f64>,
    pub fundsol_half_width: Option<f64>,
    pub fundsol_dt: f64,
    pub n_samples: usize,
}

fn canonical(key: &str) -> Option<&'static str> {
    ALIASES
        .iter()
        .find(|(a, _)| *a == key)
        .map(|(_, k)| *k)
        .or_else(|| KEYS.iter().find(|(k, _)| *k == key).map(|(k, _)| *k))
}

/// Reads `key = value` lines into `map`, rejecting unknown keys.
fn read_lines(text: &str, source_name: &str, map: &mut [(String, String)]) -> Result<(), ConfigError> {
    let mut section = String::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |key: &str, message: &str| ConfigError::Parse {
            source_name: source_name.to_string(),
            line: idx + 1,
            key: key.to_string(),
            message: message.to_string(),
        };
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| err(line, "unterminated section header"))?
                .trim();
            section = name.to_string();
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| err(line, "expected `key = value`"))?;
        let (k, v) = (k.trim(), v.trim());
        let full = if section.is_empty() {
            k.to_string()
        } else {
            format!("{section}.{k}")
        };
        let key = canonical(&full).ok_or_else(|| err(&full, "unknown key"))?;
        if v.is_empty() {
            return Err(err(key, "missing value"));
        }
        set(map, key, v);
    }
    Ok(())
}

fn set(map: &mut [(String, String)], key: &str, value: &str) {
    if let Some(slot) = map.iter_mut().find(|(k, _)| k == key) {
        slot.1 = value.to_string();
    }
}

/// Resolves defaults, then the file, then inline `KEY=VALUE` overrides.
pub fn parse_config(file: Option<(&str, &str)>, overrides: &[String]) -> Result<RunConfig, ConfigError> {
    let mut map: Vec<(String, String)> = KEYS.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
    if let Some((name, text)) = file {
        read_lines(text, name, &mut map)?;
    }
    for (i, o) in overrides.iter().enumerate() {
        read_lines(o, &format!("--set #{}", i + 1), &mut map)?;
    }
    resolve(map)
}

fn resolve(values: Vec<(String, String)>) -> Result<RunConfig, ConfigError> {
    let mut errors = Vec::new();
    let get = |key: &str| -> &str { &values.iter().find(|(k, _)| k == key).expect("known key").1 };
    let mut num = |key: &str| -> f64 {
        match get(key).parse::<f64>() {
            Ok(x) if x.is_finite() => x,
            _ => {
                errors.push(format!("{key}: `{}` is not a finite number", get(key)));
                f64::NAN
            }
        }
    };
    let sigma = num("kernel.sigma");
    let mean = num("kernel.mean");
    let a = num("kernel.a");
    let p = num("g.p");
    let delta = num("g.delta");
    let q = num("g.q");
    let h = num("h");
    let c = num("c");
    let half_width = num("numerics.L");
    let dt = num("numerics.dt");
    let tol_iter = num("numerics.tol_iter");
    let max_iter = num("numerics.max_iter");
    let map = [
        num("map.h_min"),
        num("map.h_max"),
        num("map.h_step"),
        num("map.c_min"),
        num("map.c_max"),
        num("map.c_step"),
    ];
    let fundsol_dt = num("fundsol.dt");
    let n_samples = num("check.n_samples");
    let mut auto = |key: &str| -> Option<f64> {
        let v = get(key);
        if v == "auto" {
            return None;
        }
        match v.parse::<f64>() {
            Ok(x) if x.is_finite() && x > 0.0 => Some(x),
            _ => {
                errors.push(format!("{key}: `{v}` must be `auto` or a positive number"));
                None
            }
        }
    };
    let eps_lower = auto("numerics.eps_lower");
    let fundsol_xi = auto("fundsol.xi");
    let fundsol_half_width = auto("fundsol.L");

    let kernel = match get("kernel.family") {
        "dirac" => KernelSpec::Dirac,
        "gaussian" => KernelSpec::Gaussian { sigma, mean },
        "uniform" => KernelSpec::Uniform { a },
        other => {
            errors.push(format!(
                "kernel.family: unknown family `{other}` (dirac, gaussian, uniform)"
            ));
            KernelSpec::Dirac
        }
    };
    let g = match get("g.family") {
        "nicholson" => NonlinearitySpec::Nicholson { p, delta },
        "mackey_glass" => NonlinearitySpec::MackeyGlass { p, q },
        other => {
            errors.push(format!("g.family: unknown family `{other}` (nicholson, mackey_glass)"));
            NonlinearitySpec::Nicholson { p, delta }
        }
    };
    if [sigma, mean, a].iter().all(|x| x.is_finite()) {
        if let Err(e) = kernel.validate() {
            errors.push(format!("kernel: {e}"));
        }
    }
    if [p, delta, q].iter().all(|x| x.is_finite()) {
        if let Err(e) = g.validate() {
            errors.push(format!("g: {e}"));
        }
    }
    if !(h >= 0.0) {
        errors.push(format!("h: must be non-negative, got {h}"));
    }
    if !(max_iter >= 1.0 && max_iter.fract() == 0.0) {
        errors.push(format!("numerics.max_iter: must be a positive integer, got {max_iter}"));
    }
    let solver = SolverConfig {
        half_width,
        dt,
        tol_iter,
        max_iter: max_iter.max(1.0) as usize,
        eps_lower,
    };
    if half_width.is_finite() && dt.is_finite() && tol_iter.is_finite() {
        if let Err(e) = solver.validate() {
            errors.push(format!("numerics: {e}"));
        }
    }
    let names = ["map.h", "map.c"];
    for (i, name) in names.iter().enumerate() {
        let [lo, hi, step] = [map[3 * i], map[3 * i + 1], map[3 * i + 2]];
        if !(step > 0.0 && hi >= lo) {
            errors.push(format!("{name}: need step > 0 and max >= min"));
        }
    }
    if !(fundsol_dt > 0.0) {
        errors.push("fundsol.dt: must be positive".to_string());
    }
    if !(n_samples >= 16.0 && n_samples.fract() == 0.0) {
        errors.push(format!("check.n_samples: must be an integer >= 16, got {n_samples}"));
    }
    if !errors.is_empty() {
        return Err(ConfigError::Validation(errors));
    }
    Ok(RunConfig {
        kernel,
        g,
        h,
        c,
        solver,
        map_h: Range {
            min: map[0],
            max: map[1],
            step: map[2],
        },
        map_c: Range {
            min: map[3],
            max: map[4],
            step: map[5],
        },
        fundsol_xi,
        fundsol_half_width,
        fundsol_dt,
        n_samples: n_samples as usize,
        values,
    })
}

impl RunConfig {
    pub fn model(&self) -> crate::Result<ModelSpec> {
        ModelSpec::new(self.kernel, self.g, self.h, self.c)
    }

    /// Resolved configuration as `key = value` lines.
    pub fn to_text(&self) -> String {
        self.values.iter().fold(String::new(), |mut s, (k, v)| {
            let _ = writeln!(s, "{k} = {v}");
            s
        })
    }

    /// SHA-256 of `to_text`, hex encoded.
    pub fn hash(&self) -> String {
        Sha256::digest(self.to_text().as_bytes())
            .iter()
            .fold(String::new(), |mut s, b| {
                let _ = write!(s, "{b:02x}");
                s
            })
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        parse_config(None, &[]).expect("defaults are valid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_file_gets_defaults() {
        let text = "kernel = dirac\ng = nicholson\nh = 0.2\n[g]\np = 6\ndelta = 1\n";
        let cfg = parse_config(Some(("run.cfg", text)), &[]).unwrap();
        assert_eq!(cfg.kernel, KernelSpec::Dirac);
        assert_eq!(cfg.g, NonlinearitySpec::Nicholson { p: 6.0, delta: 1.0 });
        assert_eq!(cfg.solver, SolverConfig::default());
        assert_eq!(cfg.n_samples, 4096);
        assert_eq!(cfg.fundsol_xi, None);
    }

    #[test]
    fn section_keys_and_root_keys() {
        let text = "[kernel]\nfamily = gaussian\nsigma = 0.5\n[]\nh = 0.5\nc = 3 # speed\n";
        let cfg = parse_config(Some(("run.cfg", text)), &[]).unwrap();
        assert_eq!(cfg.kernel, KernelSpec::Gaussian { sigma: 0.5, mean: 0.0 });
        assert_eq!((cfg.h, cfg.c), (0.5, 3.0));
    }

    #[test]
    fn unknown_key_names_key_and_line() {
        let err = parse_config(Some(("run.cfg", "h = 1\nkernel.width = 2\n")), &[]).unwrap_err();
        match err {
            ConfigError::Parse { line, key, .. } => {
                assert_eq!(line, 2);
                assert_eq!(key, "kernel.width");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn inline_overrides_file() {
        let cfg = parse_config(Some(("run.cfg", "c = 5\n")), &["c=5.5".to_string()]).unwrap();
        assert_eq!(cfg.c, 5.5);
    }

    #[test]
    fn validation_lists_every_bad_field() {
        let err = parse_config(None, &["h=-1".into(), "g.p=abc".into(), "numerics.dt=0.03".into()]).unwrap_err();
        match err {
            ConfigError::Validation(list) => assert_eq!(list.len(), 3, "{list:?}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn hash_is_deterministic_and_sensitive() {
        let a = RunConfig::default();
        let b = parse_config(None, &[]).unwrap();
        assert_eq!(a.hash(), b.hash());
        let c = parse_config(None, &["c=6".into()]).unwrap();
        assert_ne!(a.hash(), c.hash());
    }
}
