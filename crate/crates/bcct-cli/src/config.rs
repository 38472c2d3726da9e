//! Run configuration: JSON file plus command-line overrides.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use bcct::circle_sets::{Arc, BeurlingCarlesonSet};
use bcct::factors::{Atom, BoundaryWeight, InnerFunction, SingularMeasure};
use bcct::fixtures;
use serde::Deserialize;

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "configuration error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn cfg<E: fmt::Display>(what: &str) -> impl FnOnce(E) -> ConfigError + '_ {
    move |e| ConfigError(format!("{what}: {e}"))
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SetSpec {
    /// one-gap | two-gap | geometric
    Fixture(String),
    /// Gap arcs in radians.
    Gaps(Vec<Arc>),
    /// (start, length) pairs in normalized arc length.
    Normalized(Vec<(f64, f64)>),
    /// Path to a JSON file holding {"gaps": [...]}.
    File(PathBuf),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum WeightSpec {
    Constant(f64),
    PerComponent(Vec<f64>),
    /// depth^{bump} on each component, equal to 1 near the endpoints.
    Smooth { depth: f64 },
}

/// Everything a configuration file may set; all fields optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub set: Option<SetSpec>,
    pub weight: Option<WeightSpec>,
    pub atoms: Option<Vec<Atom>>,
    pub grid: Option<u32>,
    pub k_max: Option<u32>,
    pub tol: Option<f64>,
    pub seed: Option<u64>,
    pub suites: Option<Vec<String>>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub set: BeurlingCarlesonSet,
    pub weight: WeightSpec,
    pub atoms: Vec<Atom>,
    pub grid: u32,
    pub k_max: u32,
    /// Overrides every identity-residual threshold when present.
    pub tol: Option<f64>,
    pub seed: u64,
    pub suites: Vec<String>,
    pub out: PathBuf,
    pub parallel: bool,
}

pub const SUITES: [&str; 8] = ["whitney", "cutoff", "outer", "transform", "weights", "annihilator", "permanence", "dbr-psd"];

#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub config: Option<PathBuf>,
    pub set: Option<PathBuf>,
    pub grid: Option<u32>,
    pub k_max: Option<u32>,
    pub tol: Option<f64>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub parallel: bool,
    pub suites: Vec<String>,
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, ConfigError> {
    let text = fs::read_to_string(path).map_err(cfg(&format!("cannot read {}", path.display())))?;
    serde_json::from_str(&text).map_err(cfg(&format!("malformed JSON in {}", path.display())))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GapFile {
    gaps: Vec<Arc>,
}

fn resolve_set(spec: &SetSpec, base: &Path) -> Result<BeurlingCarlesonSet, ConfigError> {
    let set = match spec {
        SetSpec::Fixture(name) => match name.as_str() {
            "one-gap" => Ok(fixtures::one_gap()),
            "two-gap" => Ok(fixtures::two_gap()),
            "geometric" => fixtures::geometric_gaps(6),
            other => return Err(ConfigError(format!("unknown fixture set '{other}'"))),
        },
        SetSpec::Gaps(gaps) => bcct::circle_sets::validate_set(gaps),
        SetSpec::Normalized(pairs) => pairs
            .iter()
            .map(|&(s, l)| Arc::from_normalized(s, l))
            .collect::<bcct::Result<Vec<_>>>()
            .and_then(|g| bcct::circle_sets::validate_set(&g)),
        SetSpec::File(p) => {
            let path = if p.is_absolute() { p.clone() } else { base.join(p) };
            let f: GapFile = read_json(&path)?;
            bcct::circle_sets::validate_set(&f.gaps)
        }
    };
    set.map_err(cfg("invalid set"))
}

impl RunConfig {
    pub fn load(o: &Overrides) -> Result<Self, ConfigError> {
        let (file, base) = match &o.config {
            Some(p) => (read_json::<FileConfig>(p)?, p.parent().map(Path::to_path_buf).unwrap_or_default()),
            None => (FileConfig::default(), PathBuf::from(".")),
        };
        let set_spec = match &o.set {
            Some(p) => SetSpec::File(p.clone()),
            None => file.set.clone().unwrap_or(SetSpec::Fixture("two-gap".into())),
        };
        let set = resolve_set(&set_spec, &base)?;
        if set.measure <= 0.0 {
            return Err(ConfigError("the set must have positive measure".into()));
        }
        let weight = file.weight.clone().unwrap_or(WeightSpec::PerComponent(vec![0.5, 0.25]));
        let grid = o.grid.or(file.grid).unwrap_or(16);
        if !(10..=22).contains(&grid) {
            return Err(ConfigError(format!("grid 2^{grid} is outside 2^10..2^22")));
        }
        let k_max = o.k_max.or(file.k_max).unwrap_or(fixtures::FIXTURE_KMAX);
        if !(1..=40).contains(&k_max) {
            return Err(ConfigError(format!("k_max {k_max} is outside 1..40")));
        }
        let tol = o.tol.or(file.tol);
        if let Some(t) = tol {
            if !(t > 0.0 && t.is_finite()) {
                return Err(ConfigError(format!("tolerance {t} must be positive")));
            }
        }
        let mut suites = if o.suites.is_empty() { file.suites.clone().unwrap_or_default() } else { o.suites.clone() };
        if suites.is_empty() || suites.iter().any(|s| s == "all") {
            suites = SUITES.iter().map(|s| s.to_string()).collect();
        }
        if let Some(bad) = suites.iter().find(|s| !SUITES.contains(&s.as_str())) {
            return Err(ConfigError(format!("unknown suite '{bad}'")));
        }
        let out = std::env::var_os("BCCT_OUT")
            .map(PathBuf::from)
            .or_else(|| o.out.clone())
            .or(file.out.clone())
            .unwrap_or_else(|| PathBuf::from("bcct-out"));
        let cfg = RunConfig {
            set,
            weight,
            atoms: file.atoms.clone().unwrap_or_default(),
            grid,
            k_max,
            tol,
            seed: o.seed.or(file.seed).unwrap_or(0),
            suites,
            out,
            parallel: o.parallel,
        };
        cfg.boundary_weight()?;
        cfg.inner()?;
        Ok(cfg)
    }

    pub fn boundary_weight(&self) -> Result<BoundaryWeight, ConfigError> {
        let w = match &self.weight {
            WeightSpec::Constant(v) => BoundaryWeight::constant(&self.set, *v),
            WeightSpec::PerComponent(vals) => {
                if vals.is_empty() {
                    return Err(ConfigError("per_component needs at least one value".into()));
                }
                let n = self.set.components().len();
                let full: Vec<f64> = (0..n).map(|i| vals[i % vals.len()]).collect();
                BoundaryWeight::per_component(&self.set, &full)
            }
            WeightSpec::Smooth { depth } => fixtures::smooth_weight(&self.set, self.grid, *depth),
        };
        w.map_err(cfg("invalid weight"))
    }

    /// Inner function from the configured atoms; C-tagged atoms are carried by their own points.
    pub fn inner(&self) -> Result<InnerFunction, ConfigError> {
        let nu = SingularMeasure::new(self.atoms.clone(), None).map_err(cfg("invalid measure"))?;
        InnerFunction::new(vec![], nu).map_err(cfg("invalid measure"))
    }

    pub fn tol_or(&self, default: f64) -> f64 {
        self.tol.unwrap_or(default)
    }
}
