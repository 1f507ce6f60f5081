use crate::error::Result;
use crate::netmodel::{approx_idle, Algorithm, NetworkSpec, NodeKind, PerfPoint, PerfReport};

use super::residual_factor;

/// Throughput, queue lengths and sojourn times for one population size.
#[derive(Debug, Clone, PartialEq)]
pub struct MvaStep {
    pub population: u32,
    pub lambda: f64,
    pub mean_queue: Vec<f64>,
    pub mean_sojourn: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MvaTrace {
    pub steps: Vec<MvaStep>,
}

impl MvaTrace {
    pub fn last(&self) -> &MvaStep {
        self.steps.last().expect("trace covers K >= 1")
    }

    /// Converts every step into a report row; idle probabilities above unit
    /// utilization are clamped and flagged.
    pub fn report(&self, algorithm: Algorithm, spec: &NetworkSpec) -> Result<PerfReport> {
        let eta = spec.visit_ratios()?;
        let mut report = PerfReport::new(algorithm);
        for step in &self.steps {
            let lambda_node: Vec<f64> = eta.as_slice().iter().map(|e| e * step.lambda).collect();
            let mut warnings = Vec::new();
            let idle1 = approx_idle(lambda_node[0], spec.nodes[0].service.mean, &mut warnings)?;
            report.insert(PerfPoint {
                population: step.population,
                idle1,
                lambda_total: step.lambda,
                lambda_node,
                mean_queue: Some(step.mean_queue.clone()),
                mean_sojourn: Some(step.mean_sojourn.clone()),
                warnings,
            });
        }
        Ok(report)
    }
}

/// Exact mean value analysis for exponential single servers and delay nodes.
pub fn mva(spec: &NetworkSpec) -> Result<MvaTrace> {
    recursion(spec, |_| 1.0)
}

/// MVA with the single-server arrival correction `(1 + C^2)/2` for the job in service.
pub fn gmva(spec: &NetworkSpec) -> Result<MvaTrace> {
    recursion(spec, |scv| residual_factor(scv))
}

fn recursion(spec: &NetworkSpec, residual: impl Fn(f64) -> f64) -> Result<MvaTrace> {
    let eta = spec.visit_ratios()?;
    let n = spec.num_nodes();
    let mut queue = vec![0.0; n];
    let mut steps = Vec::with_capacity(spec.population as usize);
    for k in 1..=spec.population {
        let sojourn: Vec<f64> = spec
            .nodes
            .iter()
            .zip(&queue)
            .map(|(node, &x)| match node.kind {
                NodeKind::SingleServer => node.service.mean * (residual(node.service.scv()) + x),
                NodeKind::InfiniteServer => node.service.mean,
            })
            .collect();
        let cycle: f64 = eta.as_slice().iter().zip(&sojourn).map(|(e, w)| e * w).sum();
        let lambda = f64::from(k) / cycle;
        queue = eta
            .as_slice()
            .iter()
            .zip(&sojourn)
            .map(|(e, w)| e * lambda * w)
            .collect();
        steps.push(MvaStep {
            population: k,
            lambda,
            mean_queue: queue.clone(),
            mean_sojourn: sojourn,
        });
    }
    Ok(MvaTrace { steps })
}
