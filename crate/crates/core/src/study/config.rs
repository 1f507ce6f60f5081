use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moments::DisturbanceSpec;
use crate::netmodel::{Algorithm, MomentPair, NetworkSpec, NodeKind, NodeSpec, RoutingMatrix};
use crate::pfa::{state_space_size, MAX_STATES};
use crate::sim::DEFAULT_HORIZON;

pub const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct StudyConfig {
    pub network: NetworkConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub disturbance: Option<DisturbanceConfig>,
    /// Inclusive population range `[Kmin, Kmax]`.
    pub k_range: [u32; 2],
    pub algorithms: Vec<Algorithm>,
    #[serde(default)]
    pub simulation: SimulationConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct NetworkConfig {
    #[serde(default)]
    pub nodes: Vec<NodeConfig>,
    /// Row-stochastic routing; the nodes form a cycle in listed order when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub routing: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct NodeConfig {
    #[serde(default)]
    pub label: String,
    pub kind: NodeKind,
    pub mean: f64,
    /// Coefficient of variation; the variance is `(mean * cv)^2`.
    #[serde(default)]
    pub cv: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct DisturbanceConfig {
    pub mean_uptime: f64,
    pub mean_repair: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct SimulationConfig {
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default)]
    pub warmup: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

fn default_horizon() -> f64 {
    DEFAULT_HORIZON
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            horizon: DEFAULT_HORIZON,
            warmup: 0.0,
            seed: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Markdown,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub format: OutputFormat,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
}

fn invalid(field: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Validation {
        field: field.into(),
        message: message.into(),
    }
}

impl StudyConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: StudyConfig = serde_path_to_error::deserialize(de).map_err(|e| Error::Parse {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn populations(&self) -> std::ops::RangeInclusive<u32> {
        self.k_range[0]..=self.k_range[1]
    }

    pub fn seed(&self) -> u64 {
        self.simulation.seed.unwrap_or(DEFAULT_SEED)
    }

    pub fn disturbance_spec(&self) -> Result<Option<DisturbanceSpec>> {
        self.disturbance
            .map(|d| DisturbanceSpec::from_means(d.mean_uptime, d.mean_repair))
            .transpose()
    }

    /// Undisturbed network with `population` customers.
    pub fn network(&self, population: u32) -> Result<NetworkSpec> {
        let nodes = self
            .network
            .nodes
            .iter()
            .map(|n| NodeSpec::new(n.kind, MomentPair::from_cv(n.mean, n.cv)?, n.label.clone()))
            .collect::<Result<Vec<_>>>()?;
        match &self.network.routing {
            Some(rows) => NetworkSpec::new(nodes, RoutingMatrix::new(rows.clone())?, population),
            None => NetworkSpec::cyclic(nodes, population),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let nodes = &self.network.nodes;
        if nodes.is_empty() {
            return Err(invalid("network.nodes", "at least one node is required"));
        }
        for (i, n) in nodes.iter().enumerate() {
            if !(n.mean > 0.0 && n.mean.is_finite()) {
                return Err(invalid(format!("network.nodes[{i}].mean"), format!("must be positive, got {}", n.mean)));
            }
            if !(n.cv >= 0.0 && n.cv.is_finite()) {
                return Err(invalid(format!("network.nodes[{i}].cv"), format!("must be nonnegative, got {}", n.cv)));
            }
        }
        if let Some(rows) = &self.network.routing {
            RoutingMatrix::new(rows.clone())
                .and_then(|r| {
                    if r.dim() == nodes.len() {
                        Ok(())
                    } else {
                        Err(Error::DimensionMismatch {
                            expected: nodes.len(),
                            found: r.dim(),
                        })
                    }
                })
                .map_err(|e| invalid("network.routing", e.to_string()))?;
        }
        let [kmin, kmax] = self.k_range;
        if kmin == 0 || kmax < kmin {
            return Err(invalid("kRange", format!("need 1 <= Kmin <= Kmax, got [{kmin}, {kmax}]")));
        }
        if let Some(d) = self.disturbance {
            if !(d.mean_uptime > 0.0 && d.mean_uptime.is_finite()) {
                return Err(invalid("disturbance.meanUptime", "must be positive"));
            }
            if !(d.mean_repair > 0.0 && d.mean_repair.is_finite()) {
                return Err(invalid("disturbance.meanRepair", "must be positive"));
            }
            if nodes[0].kind != NodeKind::SingleServer {
                return Err(invalid("disturbance", "breakdowns need a single-server node 1"));
            }
        }
        if self.algorithms.is_empty() {
            return Err(invalid("algorithms", "select at least one algorithm"));
        }
        for (i, a) in self.algorithms.iter().enumerate() {
            if self.algorithms[..i].contains(a) {
                return Err(invalid(format!("algorithms[{i}]"), format!("`{}` is listed twice", a.id())));
            }
            if *a == Algorithm::StstM && self.disturbance.is_none() {
                return Err(invalid(format!("algorithms[{i}]"), "`stst-m` requires a disturbance section"));
            }
            if *a == Algorithm::GnExact {
                let states = state_space_size(nodes.len(), kmax);
                if states > MAX_STATES {
                    return Err(invalid(
                        format!("algorithms[{i}]"),
                        format!("`gn-exact` needs {states} states at K = {kmax}, limit is {MAX_STATES}"),
                    ));
                }
            }
        }
        let sim = self.simulation;
        if !(sim.warmup >= 0.0 && sim.horizon > sim.warmup && sim.horizon.is_finite()) {
            return Err(invalid("simulation", format!("need 0 <= warmup < horizon, got {} and {}", sim.warmup, sim.horizon)));
        }
        self.network(kmin).map_err(|e| invalid("network", e.to_string()))?;
        Ok(())
    }
}

pub fn load_config(path: impl AsRef<Path>) -> Result<StudyConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    StudyConfig::from_json(&text)
}

pub fn save_config(cfg: &StudyConfig, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, cfg.to_json() + "\n").map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

const PAPER_BASE: &str = include_str!("../../fixtures/paper_base.json");
const PAPER_DISTURBED: &str = include_str!("../../fixtures/paper_disturbed.json");

/// Bundled haulage-cycle study, with or without shovel breakdowns.
pub fn paper_config(disturbed: bool) -> StudyConfig {
    StudyConfig::from_json(if disturbed { PAPER_DISTURBED } else { PAPER_BASE }).expect("bundled config is valid")
}
