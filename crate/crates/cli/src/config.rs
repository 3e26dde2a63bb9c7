//! Run configuration: a TOML file of flat dotted keys, overlaid by flags.
//!
//! Every key is optional. Resolution merges defaults, then the file, then
//! overrides, and normalizes each value to its declared type so that the
//! canonical listing, and with it the config hash, does not depend on how a
//! value was spelled.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use lgprobe::correlator::{Engine, TotalMode};
use lgprobe::model::{Direction, ModelFamily};
use lgprobe::mps::{DmrgConfig, EvolutionConfig};
use lgprobe::output::sha256_hex;
use lgprobe::scan::DetectorConfig;
use toml::Value;

/// Environment variable naming the default output root.
pub const OUT_ENV: &str = "LGPROBE_OUT";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Kind {
    Float,
    Int,
    Bool,
    Str,
    FloatList,
    IntList,
    StrList,
}

/// Every recognised key, its type, and whether it enters the config hash.
const KEYS: &[(&str, Kind, bool)] = &[
    ("model.family", Kind::Str, true),
    ("model.j", Kind::Float, true),
    ("model.delta", Kind::Float, true),
    ("model.gamma", Kind::Float, true),
    ("model.nu", Kind::Float, true),
    ("n", Kind::Int, true),
    ("engine", Kind::Str, true),
    ("probe.site", Kind::Int, true),
    ("probe.directions", Kind::StrList, true),
    ("dmrg.chi_max", Kind::Int, true),
    ("dmrg.chi_start", Kind::Int, true),
    ("dmrg.energy_tol", Kind::Float, true),
    ("dmrg.max_sweeps", Kind::Int, true),
    ("dmrg.svd_cutoff", Kind::Float, true),
    ("dmrg.seed", Kind::Int, true),
    ("evolution.dt", Kind::Float, true),
    ("evolution.t_max", Kind::Float, true),
    ("evolution.trotter_order", Kind::Int, true),
    ("evolution.chi_max", Kind::Int, true),
    ("evolution.svd_cutoff", Kind::Float, true),
    ("lambda.start", Kind::Float, true),
    ("lambda.stop", Kind::Float, true),
    ("lambda.step", Kind::Float, true),
    ("sweep.probe_times", Kind::FloatList, true),
    ("sweep.refine", Kind::Bool, true),
    ("sweep.refine_half_width", Kind::Float, true),
    ("sweep.refine_step", Kind::Float, true),
    ("sweep.sizes", Kind::IntList, true),
    ("detect.jump_threshold", Kind::Float, true),
    ("detect.min_jump", Kind::Float, true),
    ("detect.peak_threshold", Kind::Float, true),
    ("detect.kink_threshold", Kind::Float, true),
    ("lgi.total_mode", Kind::Str, true),
    ("verify.corrupt_fk", Kind::Bool, true),
    ("verify.dual_engine", Kind::Bool, true),
    ("verify.t_small", Kind::Float, true),
    ("output.dir", Kind::Str, false),
    ("workers", Kind::Int, false),
];

fn defaults() -> BTreeMap<String, Value> {
    let d = DmrgConfig::default();
    let e = EvolutionConfig::default();
    let det = DetectorConfig::default();
    let mut m = BTreeMap::new();
    let mut put = |k: &str, v: Value| {
        m.insert(k.to_string(), v);
    };
    put("model.family", Value::from("xxz"));
    put("model.j", Value::from(1.0));
    put("n", Value::from(10));
    put("engine", Value::from("auto"));
    put("probe.directions", Value::Array(vec![Value::from("z"), Value::from("x")]));
    put("dmrg.chi_max", Value::from(d.chi_max as i64));
    put("dmrg.chi_start", Value::from(d.chi_start as i64));
    put("dmrg.energy_tol", Value::from(d.energy_tol));
    put("dmrg.max_sweeps", Value::from(d.max_sweeps as i64));
    put("dmrg.svd_cutoff", Value::from(d.svd_cutoff));
    put("dmrg.seed", Value::from(d.seed as i64));
    put("evolution.dt", Value::from(e.dt));
    put("evolution.t_max", Value::from(e.t_max));
    put("evolution.trotter_order", Value::from(e.trotter_order as i64));
    put("evolution.chi_max", Value::from(e.chi_max as i64));
    put("evolution.svd_cutoff", Value::from(e.svd_cutoff));
    put("sweep.probe_times", Value::Array(vec![Value::from(1.0)]));
    put("sweep.refine", Value::from(true));
    put("sweep.refine_half_width", Value::from(0.1));
    put("sweep.refine_step", Value::from(0.01));
    put("detect.jump_threshold", Value::from(det.jump_threshold));
    put("detect.min_jump", Value::from(det.min_jump));
    put("detect.peak_threshold", Value::from(det.peak_threshold));
    put("detect.kink_threshold", Value::from(det.kink_threshold));
    put("lgi.total_mode", Value::from("strongest"));
    put("verify.corrupt_fk", Value::from(false));
    put("verify.dual_engine", Value::from(true));
    put("verify.t_small", Value::from(0.02));
    m
}

/// Configuration problem; the CLI exits with status 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

type Result<T> = std::result::Result<T, ConfigError>;

fn err<T>(msg: impl Into<String>) -> Result<T> {
    Err(ConfigError(msg.into()))
}

/// Unresolved `key → value` layer.
#[derive(Clone, Debug, Default)]
pub struct Layer {
    values: BTreeMap<String, Value>,
}

impl Layer {
    /// Parses a config file; nested tables flatten to dotted keys.
    pub fn from_toml(text: &str, origin: &str) -> Result<Self> {
        let table: toml::Table = toml::from_str(text).map_err(|e| ConfigError(format!("{origin}: {e}")))?;
        let mut layer = Layer::default();
        flatten("", &Value::Table(table), &mut layer.values);
        for k in layer.values.keys() {
            if !KEYS.iter().any(|(name, _, _)| name == k) {
                return err(format!("{origin}: unknown config key `{k}`"));
            }
        }
        Ok(layer)
    }

    pub fn set(&mut self, key: &str, v: Value) {
        self.values.insert(key.to_string(), v);
    }

    /// `key=value`, where the value is read as TOML and falls back to a
    /// bare string.
    pub fn set_raw(&mut self, assignment: &str) -> Result<()> {
        let Some((k, v)) = assignment.split_once('=') else {
            return err(format!("--set expects key=value, got `{assignment}`"));
        };
        let k = k.trim();
        if !KEYS.iter().any(|(name, _, _)| *name == k) {
            return err(format!("--set: unknown config key `{k}`"));
        }
        let v = v.trim();
        let parsed = toml::from_str::<toml::Table>(&format!("v = {v}"))
            .ok()
            .and_then(|mut t| t.remove("v"))
            .unwrap_or_else(|| Value::from(v));
        self.set(k, parsed);
        Ok(())
    }
}

fn flatten(prefix: &str, v: &Value, out: &mut BTreeMap<String, Value>) {
    match v {
        Value::Table(t) => {
            for (k, v) in t {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, v, out);
            }
        }
        other => {
            out.insert(prefix.to_string(), other.clone());
        }
    }
}

fn normalize(key: &str, kind: Kind, v: &Value) -> Result<Value> {
    let bad = |want: &str| err(format!("config key `{key}`: expected {want}, got {}", v.type_str()));
    let float = |v: &Value| match v {
        Value::Float(x) => Some(*x),
        Value::Integer(i) => Some(*i as f64),
        _ => None,
    };
    Ok(match kind {
        Kind::Float => match float(v) {
            Some(x) => Value::Float(x),
            None => return bad("a number"),
        },
        Kind::Int => match v {
            Value::Integer(i) if *i >= 0 => v.clone(),
            Value::Integer(_) => return err(format!("config key `{key}`: must be nonnegative")),
            _ => return bad("an integer"),
        },
        Kind::Bool => match v {
            Value::Boolean(_) => v.clone(),
            _ => return bad("a boolean"),
        },
        Kind::Str => match v {
            Value::String(_) => v.clone(),
            _ => return bad("a string"),
        },
        Kind::FloatList => match v {
            Value::Array(a) => {
                let xs: Option<Vec<Value>> = a.iter().map(|x| float(x).map(Value::Float)).collect();
                match xs {
                    Some(xs) => Value::Array(xs),
                    None => return bad("a list of numbers"),
                }
            }
            _ => match float(v) {
                Some(x) => Value::Array(vec![Value::Float(x)]),
                None => return bad("a list of numbers"),
            },
        },
        Kind::IntList => match v {
            Value::Array(a) if a.iter().all(|x| matches!(x, Value::Integer(i) if *i >= 0)) => v.clone(),
            _ => return bad("a list of nonnegative integers"),
        },
        Kind::StrList => match v {
            Value::Array(a) if a.iter().all(Value::is_str) => v.clone(),
            Value::String(s) => Value::Array(s.split(',').map(|p| Value::from(p.trim())).collect()),
            _ => return bad("a list of strings"),
        },
    })
}

fn f(m: &BTreeMap<String, Value>, k: &str) -> Option<f64> {
    m.get(k).and_then(Value::as_float)
}

fn i(m: &BTreeMap<String, Value>, k: &str) -> Option<u64> {
    m.get(k).and_then(Value::as_integer).map(|x| x as u64)
}

fn s(m: &BTreeMap<String, Value>, k: &str) -> Option<String> {
    m.get(k).and_then(Value::as_str).map(str::to_string)
}

fn b(m: &BTreeMap<String, Value>, k: &str) -> Option<bool> {
    m.get(k).and_then(Value::as_bool)
}

/// Fully resolved run configuration.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub family: ModelFamily,
    /// Δ or ν for single-point commands.
    pub lambda: f64,
    pub n: usize,
    pub engine: Option<Engine>,
    pub site: usize,
    pub directions: Vec<Direction>,
    pub dmrg: DmrgConfig,
    pub evolution: EvolutionConfig,
    pub lambda_grid: Option<Vec<f64>>,
    pub probe_times: Vec<f64>,
    pub refine: Option<(f64, f64)>,
    pub sizes: Vec<usize>,
    pub detector: DetectorConfig,
    pub total_mode: TotalMode,
    pub corrupt_fk: bool,
    pub dual_engine: bool,
    pub t_small: f64,
    pub out_dir: PathBuf,
    pub workers: usize,
    canonical: String,
}

impl RunConfig {
    /// Merges `layers` over the defaults; later layers win.
    pub fn resolve(layers: &[Layer]) -> Result<Self> {
        let mut m = defaults();
        for l in layers {
            for (k, v) in &l.values {
                m.insert(k.clone(), v.clone());
            }
        }
        for (k, v) in m.clone() {
            let (_, kind, _) = KEYS.iter().find(|(name, _, _)| *name == k).expect("known key");
            m.insert(k.clone(), normalize(&k, *kind, &v)?);
        }

        let j = f(&m, "model.j").expect("default");
        let family_name = s(&m, "model.family").expect("default");
        let (family, lambda_key) = match family_name.as_str() {
            "xxz" => {
                for k in ["model.gamma", "model.nu"] {
                    if m.contains_key(k) {
                        return err(format!("config key `{k}` does not apply to model.family = \"xxz\""));
                    }
                }
                (ModelFamily::Xxz { j }, "model.delta")
            }
            "xy" => {
                if m.contains_key("model.delta") {
                    return err("config key `model.delta` does not apply to model.family = \"xy\"");
                }
                let gamma = f(&m, "model.gamma").unwrap_or(1.0);
                m.insert("model.gamma".into(), Value::Float(gamma));
                (ModelFamily::Xy { j, gamma }, "model.nu")
            }
            other => return err(format!("config key `model.family`: unknown family \"{other}\", expected xxz or xy")),
        };
        let lambda = f(&m, lambda_key).unwrap_or(if lambda_key == "model.nu" { 1.0 } else { 0.0 });
        m.insert(lambda_key.into(), Value::Float(lambda));

        let n = i(&m, "n").expect("default") as usize;
        if n == 0 {
            return err("config key `n`: must be at least 1");
        }
        let engine = match s(&m, "engine").expect("default").as_str() {
            "auto" => None,
            "ed" => Some(Engine::Ed),
            "mps" => Some(Engine::Mps),
            other => return err(format!("config key `engine`: unknown engine \"{other}\", expected auto, ed or mps")),
        };
        let site = i(&m, "probe.site").map(|x| x as usize).unwrap_or(n / 2);
        if site >= n {
            return err(format!("config key `probe.site`: {site} outside [0, {n})"));
        }
        m.insert("probe.site".into(), Value::Integer(site as i64));
        let directions = m["probe.directions"]
            .as_array()
            .expect("normalized")
            .iter()
            .map(|v| v.as_str().expect("normalized").parse::<Direction>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| ConfigError(format!("config key `probe.directions`: {e}")))?;
        if directions.is_empty() {
            return err("config key `probe.directions`: direction list is empty");
        }

        let dmrg = DmrgConfig {
            chi_max: i(&m, "dmrg.chi_max").expect("default") as usize,
            chi_start: i(&m, "dmrg.chi_start").expect("default") as usize,
            energy_tol: f(&m, "dmrg.energy_tol").expect("default"),
            max_sweeps: i(&m, "dmrg.max_sweeps").expect("default") as usize,
            svd_cutoff: f(&m, "dmrg.svd_cutoff").expect("default"),
            seed: i(&m, "dmrg.seed").expect("default"),
            ..DmrgConfig::default()
        };
        dmrg.validate().map_err(|e| ConfigError(format!("dmrg: {e}")))?;
        let evolution = EvolutionConfig {
            dt: f(&m, "evolution.dt").expect("default"),
            t_max: f(&m, "evolution.t_max").expect("default"),
            trotter_order: i(&m, "evolution.trotter_order").expect("default") as u32,
            chi_max: i(&m, "evolution.chi_max").expect("default") as usize,
            svd_cutoff: f(&m, "evolution.svd_cutoff").expect("default"),
            ..EvolutionConfig::default()
        };
        evolution.validate().map_err(|e| ConfigError(format!("evolution: {e}")))?;

        let lambda_grid = match (f(&m, "lambda.start"), f(&m, "lambda.stop"), f(&m, "lambda.step")) {
            (None, None, None) => None,
            (Some(a), Some(z), Some(h)) => Some(lambda_range(a, z, h)?),
            _ => return err("lambda.start, lambda.stop and lambda.step must be given together"),
        };
        let probe_times: Vec<f64> = m["sweep.probe_times"]
            .as_array()
            .expect("normalized")
            .iter()
            .map(|v| v.as_float().expect("normalized"))
            .collect();
        let refine = b(&m, "sweep.refine")
            .expect("default")
            .then(|| (f(&m, "sweep.refine_half_width").expect("default"), f(&m, "sweep.refine_step").expect("default")));
        let sizes = m
            .get("sweep.sizes")
            .and_then(Value::as_array)
            .map(|a| a.iter().map(|v| v.as_integer().expect("normalized") as usize).collect())
            .unwrap_or_default();
        let detector = DetectorConfig {
            jump_threshold: f(&m, "detect.jump_threshold").expect("default"),
            min_jump: f(&m, "detect.min_jump").expect("default"),
            peak_threshold: f(&m, "detect.peak_threshold").expect("default"),
            kink_threshold: f(&m, "detect.kink_threshold").expect("default"),
        };
        let total_mode = match s(&m, "lgi.total_mode").expect("default").as_str() {
            "strongest" => TotalMode::Strongest,
            "literal-max" => TotalMode::LiteralMax,
            other => {
                return err(format!(
                    "config key `lgi.total_mode`: unknown mode \"{other}\", expected strongest or literal-max"
                ))
            }
        };
        let out_dir = s(&m, "output.dir")
            .or_else(|| std::env::var(OUT_ENV).ok())
            .unwrap_or_else(|| "lgprobe-out".into())
            .into();
        let workers = match i(&m, "workers") {
            Some(0) => return err("config key `workers`: must be at least 1"),
            Some(w) => w as usize,
            None => std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
        };

        let mut canonical = String::new();
        for (k, v) in &m {
            let hashed = KEYS.iter().any(|(name, _, h)| name == k && *h);
            if hashed {
                let _ = writeln!(canonical, "{k} = {v}");
            }
        }
        Ok(Self {
            family,
            lambda,
            n,
            engine,
            site,
            directions,
            dmrg,
            evolution,
            lambda_grid,
            probe_times,
            refine,
            sizes,
            detector,
            total_mode,
            corrupt_fk: b(&m, "verify.corrupt_fk").expect("default"),
            dual_engine: b(&m, "verify.dual_engine").expect("default"),
            t_small: f(&m, "verify.t_small").expect("default"),
            out_dir,
            workers,
            canonical,
        })
    }

    /// Sorted `key = value` lines of every result-affecting setting.
    pub fn canonical(&self) -> &str {
        &self.canonical
    }

    pub fn hash(&self) -> String {
        sha256_hex(self.canonical.as_bytes())
    }

    /// Hash over the settings that determine the ground state at `lambda`.
    pub fn ground_hash(&self, lambda: f64) -> String {
        let keep = |l: &&str| {
            l.starts_with("model.family") || l.starts_with("model.j") || l.starts_with("model.gamma")
                || l.starts_with("n ") || l.starts_with("engine ") || l.starts_with("dmrg.")
        };
        let mut s: String = self.canonical.lines().filter(keep).map(|l| format!("{l}\n")).collect();
        let _ = writeln!(s, "lambda = {lambda:?}");
        sha256_hex(s.as_bytes())
    }
}

/// Inclusive grid `start, start+step, …, stop`, rounded to 1e-9.
pub fn lambda_range(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(stop >= start) {
        return err(format!("lambda range needs step > 0 and stop >= start, got {start}:{stop}:{step}"));
    }
    let m = ((stop - start) / step + 1e-9).floor() as usize;
    if m > 100_000 {
        return err(format!("lambda range has {} points; limit is 100000", m + 1));
    }
    Ok((0..=m).map(|i| ((start + i as f64 * step) * 1e9).round() / 1e9).collect())
}
