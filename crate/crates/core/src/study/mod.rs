//! Study orchestration: configuration, algorithm dispatch over a population
//! range, comparison tables and their CSV / markdown rendering.

mod config;
mod table;

pub use config::{
    load_config, paper_config, save_config, DisturbanceConfig, NetworkConfig, NodeConfig, OutputConfig, OutputFormat,
    SimulationConfig, StudyConfig, DEFAULT_SEED,
};
pub use table::{emit, round3, sig17, ComparisonTable, ErrorRow, ErrorTable, TableRow};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::flow::flow;
use crate::moments::{modified_service_moments, DisturbanceSpec, ModifiedServiceMoments};
use crate::netmodel::{Algorithm, NetworkSpec};
use crate::pfa::{bott, ebott, esum, gmva, gn_exact, mva, sum_method, DEFAULT_EPS};
use crate::sim::{simulate, sweep, SimConfig, SimEstimate};
use crate::stst::{stst, stst_m};

/// Result of one algorithm at one population size.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Analysis {
    pub algorithm: Algorithm,
    pub population: u32,
    pub idle1: f64,
    /// Node-1 throughput per minute.
    pub lambda1: f64,
    pub warnings: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub simulation: Option<SimEstimate>,
}

/// Inputs shared by every cell of a study.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: StudyConfig,
    pub disturbance: Option<DisturbanceSpec>,
    /// Breakdown-adjusted loading moments, present in disturbed studies.
    pub modified: Option<ModifiedServiceMoments>,
    pub eps: f64,
}

impl Scenario {
    pub fn new(config: StudyConfig, eps: f64) -> Result<Self> {
        config.validate()?;
        if !(eps > 0.0) {
            return Err(Error::InvalidParameter(format!("tolerance must be positive, got {eps}")));
        }
        let disturbance = config.disturbance_spec()?;
        let modified = match disturbance {
            Some(d) => Some(modified_service_moments(config.network(1)?.nodes[0].service, d)?),
            None => None,
        };
        Ok(Scenario {
            config,
            disturbance,
            modified,
            eps,
        })
    }

    /// Network as seen by the simulator and by ST&ST-m.
    pub fn base_network(&self, population: u32) -> Result<NetworkSpec> {
        self.config.network(population)
    }

    /// Network fed to the other analytic methods: node 1 carries the
    /// breakdown-adjusted moments in disturbed studies.
    pub fn analytic_network(&self, population: u32) -> Result<NetworkSpec> {
        let spec = self.base_network(population)?;
        match &self.modified {
            Some(m) => spec.with_service(0, m.modified),
            None => Ok(spec),
        }
    }

    pub fn sim_config(&self, population: u32) -> Result<SimConfig> {
        let sim = self.config.simulation;
        let mut cfg = SimConfig::new(self.base_network(population)?, self.config.seed() ^ u64::from(population))
            .with_window(sim.warmup, sim.horizon);
        cfg.disturbance = self.disturbance;
        Ok(cfg)
    }

    pub fn analyze(&self, algorithm: Algorithm, population: u32) -> Result<Analysis> {
        if algorithm == Algorithm::Sim {
            let est = simulate(&self.sim_config(population)?)?;
            return Ok(from_sim(est));
        }
        let spec = self.analytic_network(population)?;
        let eps = self.eps;
        let mean1 = spec.nodes[0].service.mean;
        let (idle1, lambda1, warnings) = match algorithm {
            Algorithm::Stst => {
                let r = stst(&spec)?;
                (r.idle1, r.lambda1, Vec::new())
            }
            Algorithm::StstM => {
                let dist = self.disturbance.ok_or_else(|| Error::Validation {
                    field: "disturbance".into(),
                    message: "`stst-m` requires a disturbance section".into(),
                })?;
                let r = stst_m(&self.base_network(population)?, dist)?;
                (r.idle1, (1.0 - r.idle1) / mean1, Vec::new())
            }
            Algorithm::Flow => {
                let r = flow(&spec)?;
                (r.idle1, r.lambda1, Vec::new())
            }
            Algorithm::Mva | Algorithm::Gmva => {
                let trace = if algorithm == Algorithm::Mva { mva(&spec)? } else { gmva(&spec)? };
                let report = trace.report(algorithm, &spec)?;
                let p = report.get(population).expect("trace reaches K").clone();
                (p.idle1, p.lambda_node[0], p.warnings)
            }
            Algorithm::Sum | Algorithm::Esum | Algorithm::GnExact => {
                let p = match algorithm {
                    Algorithm::Sum => sum_method(&spec, eps)?,
                    Algorithm::Esum => esum(&spec, eps)?,
                    _ => gn_exact(&spec)?,
                };
                (p.idle1, p.lambda_node[0], p.warnings)
            }
            Algorithm::Bott | Algorithm::Ebott => {
                let r = if algorithm == Algorithm::Bott { bott(&spec, eps)? } else { ebott(&spec, eps)? };
                (r.point.idle1, r.point.lambda_node[0], r.point.warnings)
            }
            Algorithm::Sim => unreachable!(),
        };
        Ok(Analysis {
            algorithm,
            population,
            idle1,
            lambda1,
            warnings,
            simulation: None,
        })
    }
}

fn from_sim(est: SimEstimate) -> Analysis {
    Analysis {
        algorithm: Algorithm::Sim,
        population: est.population,
        idle1: est.idle1,
        lambda1: est.lambda_node[0],
        warnings: Vec::new(),
        simulation: Some(est),
    }
}

/// Runs a study with the default tolerance.
pub fn run_study(cfg: &StudyConfig) -> Result<ComparisonTable> {
    run_study_with(cfg, DEFAULT_EPS)
}

/// Evaluates every selected algorithm for every population. Cell failures are
/// kept in the table; only an invalid configuration fails the whole study.
pub fn run_study_with(cfg: &StudyConfig, eps: f64) -> Result<ComparisonTable> {
    let scenario = Scenario::new(cfg.clone(), eps)?;
    let populations: Vec<u32> = cfg.populations().collect();
    let mut rows = Vec::new();
    let mut diagnostics = Vec::new();

    for &algorithm in &cfg.algorithms {
        let cells: Vec<Result<Analysis>> = if algorithm == Algorithm::Sim {
            let base = scenario.sim_config(populations[0])?;
            let base = SimConfig {
                seed: cfg.seed(),
                ..base
            };
            match sweep(&base, cfg.k_range[0], cfg.k_range[1], true) {
                Ok(runs) => runs.into_iter().map(|e| Ok(from_sim(e))).collect(),
                Err(e) => populations.iter().map(|_| Err(e.clone())).collect(),
            }
        } else {
            populations.iter().map(|&k| scenario.analyze(algorithm, k)).collect()
        };
        let mut values = Vec::with_capacity(cells.len());
        for (cell, &k) in cells.into_iter().zip(&populations) {
            match cell {
                Ok(a) => {
                    for w in &a.warnings {
                        diagnostics.push(format!("{} K={k}: warning: {w}", algorithm.display_name()));
                    }
                    values.push(Ok(a.idle1));
                }
                Err(e) => {
                    diagnostics.push(format!("{} K={k}: {e}", algorithm.display_name()));
                    values.push(Err(e));
                }
            }
        }
        rows.push(TableRow { algorithm, cells: values });
    }

    let mut table = ComparisonTable {
        populations,
        rows,
        errors: None,
        modified: scenario.modified,
        diagnostics,
    };
    if let Some(reference) = table.row(Algorithm::Sim).map(|r| r.cells.clone()) {
        let reference: Vec<Option<f64>> = reference.into_iter().map(|c| c.ok()).collect();
        table.errors = Some(table.errors_against(&reference));
    }
    Ok(table)
}
