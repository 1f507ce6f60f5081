use crate::error::{Error, Result};
use crate::netmodel::{NetworkSpec, PerfPoint};

use super::{
    inverse_queue_length, point_from_queues, queue_lengths, single_customer_point, QueueLengthModel, MAX_ITERATIONS,
};

const TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct BottleneckResult {
    pub point: PerfPoint,
    /// Zero-based index of the node used as the bottleneck.
    pub bottleneck: usize,
    pub iterations: usize,
}

/// Bottleneck approximation for product-form networks.
pub fn bott(spec: &NetworkSpec, eps: f64) -> Result<BottleneckResult> {
    iterate(spec, eps, QueueLengthModel::ProductForm, "BOTT")
}

/// Extended bottleneck approximation; at `K = 1` the exact single-customer
/// result is returned.
pub fn ebott(spec: &NetworkSpec, eps: f64) -> Result<BottleneckResult> {
    if spec.population == 1 {
        let eta = spec.visit_ratios()?;
        let (bottleneck, _, _) = choose_bottleneck(spec, eta.as_slice());
        return Ok(BottleneckResult {
            point: single_customer_point(spec, &eta)?,
            bottleneck,
            iterations: 0,
        });
    }
    iterate(spec, eps, QueueLengthModel::Extended, "EBOTT")
}

/// Smallest index minimizing `mu_i s_i / eta_i`, the bound value, and the
/// indices tied with it.
fn choose_bottleneck(spec: &NetworkSpec, eta: &[f64]) -> (usize, f64, Vec<usize>) {
    let bounds: Vec<f64> = spec
        .nodes
        .iter()
        .zip(eta)
        .map(|(n, e)| n.kind.servers(spec.population) / (n.service.mean * e))
        .collect();
    let min = bounds.iter().copied().fold(f64::INFINITY, f64::min);
    let tied: Vec<usize> = bounds
        .iter()
        .enumerate()
        .filter(|(_, &b)| (b - min).abs() <= TIE_TOL * min)
        .map(|(i, _)| i)
        .collect();
    (tied[0], min, tied)
}

fn iterate(spec: &NetworkSpec, eps: f64, model: QueueLengthModel, method: &'static str) -> Result<BottleneckResult> {
    let eta = spec.visit_ratios()?;
    let k = f64::from(spec.population);
    let (b, mut lambda, tied) = choose_bottleneck(spec, eta.as_slice());
    let mut warnings = Vec::new();
    if tied.len() > 1 {
        let names: Vec<String> = tied.iter().map(|i| (i + 1).to_string()).collect();
        warnings.push(format!(
            "bottleneck tie between nodes {}; using node {}",
            names.join(", "),
            b + 1
        ));
    }
    let node = &spec.nodes[b];
    let servers = node.kind.servers(spec.population);

    for iteration in 1..=MAX_ITERATIONS {
        let mut queues = queue_lengths(spec, &eta, lambda, model);
        let g: f64 = queues.iter().sum();
        let scale = k / g;
        let rho = inverse_queue_length(node.kind, queues[b] * scale, node.service.scv(), spec.population, model);
        lambda = rho * servers / (node.service.mean * eta[b]);
        if (scale - 1.0).abs() <= eps {
            for x in &mut queues {
                *x *= scale.abs();
            }
            return Ok(BottleneckResult {
                point: point_from_queues(spec, &eta, lambda, queues, warnings)?,
                bottleneck: b,
                iterations: iteration,
            });
        }
    }
    Err(Error::Nonconvergence {
        method,
        iterations: MAX_ITERATIONS,
    })
}
