//! Run configuration: the JSON file as written by the user, and the
//! effective configuration with every default filled in.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use lefschetz_core::complexes::de_rham;
use lefschetz_core::geometry::Scenario;
use lefschetz_core::lefschetz::EXTRACTION_TIMES;
use lefschetz_core::oscillatory::OscillatoryOptions;
use lefschetz_core::parametrix::TraceOptions;
use lefschetz_core::spectral::default_cutoff;
use serde::{Deserialize, Serialize};

/// Bad configuration, naming the offending key.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub key: String,
    pub message: String,
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "config key `{}`: {}", self.key, self.message)
    }
}

impl std::error::Error for ConfigError {}

fn err(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError {
        key: key.into(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Oracles,
    Parametrix,
    StationaryPhase,
    Lefschetz,
    All,
}

impl Suite {
    pub fn includes(self, other: Suite) -> bool {
        self == Suite::All || self == other
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeCounts {
    pub flat_x: Option<usize>,
    pub radial: Option<usize>,
    pub angular: Option<usize>,
    pub group: Option<usize>,
    pub trace_radial: Option<usize>,
    pub trace_angular: Option<usize>,
    pub fixed_point: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    pub supertrace: Option<f64>,
    pub fixed_point: Option<f64>,
    pub equivariant: Option<f64>,
    pub parametrix: Option<f64>,
    pub order: Option<f64>,
    pub leading_ratio: Option<f64>,
    pub remainder_exponent: Option<f64>,
    pub constant_term: Option<f64>,
    pub extraction: Option<f64>,
}

/// The configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: String,
    pub suite: Option<Suite>,
    pub degrees: Option<Vec<usize>>,
    pub rho: Option<Vec<Vec<i64>>>,
    pub t_grid: Option<Vec<f64>>,
    pub mu_grid: Option<Vec<f64>>,
    /// Group elements for the heat-trace rows, one angle list each.
    pub group_elements: Option<Vec<Vec<f64>>>,
    pub k_max: Option<usize>,
    /// Heat time of the supertrace route to the equivariant numbers.
    pub lefschetz_t: Option<f64>,
    pub extraction_t_grid: Option<Vec<f64>>,
    pub cutoff: Option<usize>,
    pub nodes: Option<NodeCounts>,
    pub tolerances: Option<Tolerances>,
    pub output_dir: Option<PathBuf>,
    pub seed: Option<u64>,
}

/// Every setting of a run after defaults are applied; echoed verbatim in
/// report.json.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EffectiveConfig {
    pub scenario: String,
    pub suite: Suite,
    pub degrees: Vec<usize>,
    pub rho: Vec<Vec<i64>>,
    pub t_grid: Vec<f64>,
    pub mu_grid: Vec<f64>,
    pub group_elements: Vec<Vec<f64>>,
    pub k_max: usize,
    pub lefschetz_t: f64,
    pub extraction_t_grid: Vec<f64>,
    pub cutoff: usize,
    pub nodes: BTreeMap<&'static str, usize>,
    pub tolerances: BTreeMap<&'static str, f64>,
    pub output_dir: PathBuf,
    pub seed: u64,
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    serde_json::from_str(text).map_err(|e| {
        let msg = e.to_string();
        // serde names unknown keys inside the message; surface them as the key
        let key = msg
            .split('`')
            .nth(1)
            .filter(|_| msg.starts_with("unknown field"))
            .unwrap_or("<file>");
        err(key, msg.clone())
    })
}

pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| err("--config", format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text)
}

fn positive_grid(key: &str, grid: Vec<f64>) -> Result<Vec<f64>, ConfigError> {
    if grid.is_empty() {
        return Err(err(key, "grid must not be empty"));
    }
    if let Some(v) = grid.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
        return Err(err(key, format!("grid values must be positive, got {v}")));
    }
    Ok(grid)
}

fn positive(key: &str, v: f64) -> Result<f64, ConfigError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(err(key, format!("must be positive, got {v}")))
    }
}

impl RunConfig {
    pub fn resolve(&self) -> Result<EffectiveConfig, ConfigError> {
        let sc: Scenario = self
            .scenario
            .parse()
            .map_err(|_| err("scenario", format!("unrecognized name {:?}", self.scenario)))?;
        let d = sc.group_dim();
        let flat = sc.is_flat();

        let all_degrees: Vec<usize> = de_rham(sc).degrees().collect();
        let degrees = self.degrees.clone().unwrap_or_else(|| all_degrees.clone());
        if degrees.is_empty() {
            return Err(err("degrees", "list must not be empty"));
        }
        if let Some(j) = degrees.iter().find(|j| !all_degrees.contains(j)) {
            return Err(err("degrees", format!("{sc} has no {j}-forms")));
        }

        let rho = self.rho.clone().unwrap_or_else(|| match sc {
            Scenario::Torus2 => vec![vec![0, 0], vec![1, 0], vec![1, 2]],
            _ => vec![vec![0], vec![1], vec![2]],
        });
        if rho.is_empty() {
            return Err(err("rho", "list must not be empty"));
        }
        if let Some(k) = rho.iter().find(|k| k.len() != d) {
            return Err(err("rho", format!("{sc} characters need {d} indices, got {k:?}")));
        }

        let t_grid = positive_grid(
            "t_grid",
            self.t_grid.clone().unwrap_or_else(|| {
                if flat {
                    vec![0.05, 0.1, 0.3]
                } else {
                    vec![0.02, 0.03, 0.05, 0.07, 0.1]
                }
            }),
        )?;
        let mu_grid = positive_grid(
            "mu_grid",
            self.mu_grid.clone().unwrap_or_else(|| {
                if flat {
                    vec![0.2, 0.1, 0.05]
                } else {
                    vec![0.5, 0.4, 0.3, 0.25]
                }
            }),
        )?;
        if mu_grid.len() < 3 {
            return Err(err("mu_grid", "at least 3 values are needed for the order fit"));
        }
        if let Some(m) = mu_grid.iter().find(|m| **m >= 1.0) {
            return Err(err("mu_grid", format!("values must be below 1, got {m}")));
        }
        let extraction_t_grid =
            positive_grid("extraction_t_grid", self.extraction_t_grid.clone().unwrap_or_else(|| EXTRACTION_TIMES.to_vec()))?;
        if extraction_t_grid.len() < 4 {
            return Err(err("extraction_t_grid", "at least 4 times are needed"));
        }

        let group_elements = self.group_elements.clone().unwrap_or_else(|| match sc {
            Scenario::Circle => vec![vec![0.0], vec![1.0], vec![2.5]],
            Scenario::Torus2 => vec![vec![0.0, 0.0], vec![0.4, 1.0]],
            Scenario::Sphere2 => vec![vec![0.0], vec![0.7], vec![2.0]],
        });
        if group_elements.is_empty() {
            return Err(err("group_elements", "list must not be empty"));
        }
        if let Some(g) = group_elements.iter().find(|g| g.len() != d || g.iter().any(|a| !a.is_finite())) {
            return Err(err("group_elements", format!("{sc} elements need {d} finite angles, got {g:?}")));
        }

        let trace = TraceOptions::for_scenario(sc);
        let k_max = self.k_max.unwrap_or(trace.k_max);
        if k_max > lefschetz_core::parametrix::MAX_LEVEL {
            return Err(err("k_max", format!("at most {} is supported", lefschetz_core::parametrix::MAX_LEVEL)));
        }
        let lefschetz_t = positive("lefschetz_t", self.lefschetz_t.unwrap_or(0.5))?;
        let cutoff = self.cutoff.unwrap_or_else(|| default_cutoff(sc));
        if cutoff < 2 {
            return Err(err("cutoff", "must be at least 2"));
        }

        let osc = OscillatoryOptions::default();
        let n = self.nodes.clone().unwrap_or_default();
        let mut nodes = BTreeMap::new();
        nodes.insert("flat_x", n.flat_x.unwrap_or(if sc == Scenario::Torus2 { 4 } else { osc.flat_x_nodes }));
        nodes.insert("radial", n.radial.unwrap_or(osc.radial_nodes));
        nodes.insert("angular", n.angular.unwrap_or(osc.angular_nodes));
        nodes.insert("group", n.group.unwrap_or(osc.group_nodes));
        nodes.insert("trace_radial", n.trace_radial.unwrap_or(trace.radial_nodes));
        nodes.insert("trace_angular", n.trace_angular.unwrap_or(trace.angular_nodes));
        nodes.insert("fixed_point", n.fixed_point.unwrap_or(64));
        for (k, v) in &nodes {
            if *v < 2 {
                return Err(err(&format!("nodes.{k}"), format!("need at least 2 nodes, got {v}")));
            }
        }

        let t = self.tolerances.clone().unwrap_or_default();
        let mut tolerances = BTreeMap::new();
        tolerances.insert("supertrace", t.supertrace.unwrap_or(1e-8));
        tolerances.insert("fixed_point", t.fixed_point.unwrap_or(1e-6));
        tolerances.insert("equivariant", t.equivariant.unwrap_or(1e-6));
        tolerances.insert("parametrix", t.parametrix.unwrap_or(if flat { 1e-4 } else { 5e-2 }));
        tolerances.insert("order", t.order.unwrap_or(0.05));
        tolerances.insert("leading_ratio", t.leading_ratio.unwrap_or(1e-2));
        tolerances.insert("remainder_exponent", t.remainder_exponent.unwrap_or(1.85));
        tolerances.insert("constant_term", t.constant_term.unwrap_or(1e-6));
        tolerances.insert("extraction", t.extraction.unwrap_or(5e-2));
        for (k, v) in &tolerances {
            positive(&format!("tolerances.{k}"), *v)?;
        }

        Ok(EffectiveConfig {
            scenario: sc.name().into(),
            suite: self.suite.unwrap_or(Suite::All),
            degrees,
            rho,
            t_grid,
            mu_grid,
            group_elements,
            k_max,
            lefschetz_t,
            extraction_t_grid,
            cutoff,
            nodes,
            tolerances,
            output_dir: self.output_dir.clone().unwrap_or_else(|| PathBuf::from("lefschetz-out")),
            seed: self.seed.unwrap_or(0),
        })
    }
}

impl EffectiveConfig {
    pub fn scenario(&self) -> Scenario {
        self.scenario.parse().expect("validated scenario")
    }

    pub fn node(&self, key: &str) -> usize {
        self.nodes[key]
    }

    pub fn tolerance(&self, key: &str) -> f64 {
        self.tolerances[key]
    }
}
