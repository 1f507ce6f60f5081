//! Product-form algorithms and their extensions to non-exponential single servers.
//!
//! All routines work on a [`NetworkSpec`] with single-server FCFS and
//! infinite-server nodes. The product-form variants only read mean service
//! times; the extended variants (GMVA, ESUM, EBOTT) also use the squared
//! coefficient of variation of the single servers.

mod bottleneck;
mod gordon_newell;
mod mva;
mod summation;

pub use bottleneck::{bott, ebott, BottleneckResult};
pub use gordon_newell::{gn_exact, state_space_size, GnState, MAX_STATES};
pub use mva::{gmva, mva, MvaStep, MvaTrace};
pub use summation::{esum, sum_method};

use crate::error::Result;
use crate::netmodel::{approx_idle, exact_single_customer_idle, NetworkSpec, NodeKind, PerfPoint, VisitRatios};

/// Default tolerance for the bisection and bottleneck iterations.
pub const DEFAULT_EPS: f64 = 1e-9;
pub(crate) const MAX_ITERATIONS: usize = 100_000;
const DEGENERATE_QUADRATIC: f64 = 1e-12;

/// Queue-length approximation `f_i` used by the summation and bottleneck methods.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QueueLengthModel {
    /// `rho / (1 - (K-1)/K rho)` at single servers.
    ProductForm,
    /// `rho + rho^2 a / (1 - (K-1-a)/(K-1) rho)` with `a = (1 + C^2)/2`.
    Extended,
}

/// Mean residual service factor `a = (1 + C^2) / 2`.
pub fn residual_factor(scv: f64) -> f64 {
    0.5 * (1.0 + scv)
}

/// `f_i` as a function of the offered load `rho = lambda_i / mu_i`.
pub fn queue_length(kind: NodeKind, rho: f64, scv: f64, population: u32, model: QueueLengthModel) -> f64 {
    let k = f64::from(population);
    match (kind, model) {
        (NodeKind::InfiniteServer, _) => rho,
        (NodeKind::SingleServer, QueueLengthModel::ProductForm) => rho / (1.0 - (k - 1.0) / k * rho),
        (NodeKind::SingleServer, QueueLengthModel::Extended) => {
            let a = residual_factor(scv);
            let b = (k - 1.0 - a) / (k - 1.0);
            rho + rho * rho * a / (1.0 - b * rho)
        }
    }
}

/// Inverse `h_i` of [`queue_length`]. For infinite servers the result is the
/// per-server utilization `X / K`.
pub fn inverse_queue_length(kind: NodeKind, x: f64, scv: f64, population: u32, model: QueueLengthModel) -> f64 {
    let k = f64::from(population);
    match (kind, model) {
        (NodeKind::InfiniteServer, _) => x / k,
        (NodeKind::SingleServer, QueueLengthModel::ProductForm) => x / (1.0 + (k - 1.0) / k * x),
        (NodeKind::SingleServer, QueueLengthModel::Extended) => {
            let a = residual_factor(scv);
            let b = (k - 1.0 - a) / (k - 1.0);
            let lin = 1.0 + b * x;
            if (a - b).abs() < DEGENERATE_QUADRATIC {
                x / lin
            } else {
                (-lin + (lin * lin + 4.0 * x * (a - b)).sqrt()) / (2.0 * (a - b))
            }
        }
    }
}

/// Per-node queue lengths `f_i(eta_i lambda)` for a total throughput `lambda`.
pub(crate) fn queue_lengths(spec: &NetworkSpec, eta: &VisitRatios, lambda: f64, model: QueueLengthModel) -> Vec<f64> {
    spec.nodes
        .iter()
        .zip(eta.as_slice())
        .map(|(node, e)| {
            let rho = e * lambda * node.service.mean;
            queue_length(node.kind, rho, node.service.scv(), spec.population, model)
        })
        .collect()
}

/// Assembles a point from the total throughput and the queue lengths.
pub(crate) fn point_from_queues(
    spec: &NetworkSpec,
    eta: &VisitRatios,
    lambda: f64,
    queues: Vec<f64>,
    mut warnings: Vec<String>,
) -> Result<PerfPoint> {
    let lambda_node: Vec<f64> = eta.as_slice().iter().map(|e| e * lambda).collect();
    let sojourn = queues
        .iter()
        .zip(&lambda_node)
        .map(|(x, l)| x / l)
        .collect();
    let idle1 = approx_idle(lambda_node[0], spec.nodes[0].service.mean, &mut warnings)?;
    Ok(PerfPoint {
        population: spec.population,
        idle1,
        lambda_total: lambda,
        lambda_node,
        mean_queue: Some(queues),
        mean_sojourn: Some(sojourn),
        warnings,
    })
}

/// Exact single-customer point, used where the extended formulas are undefined at `K = 1`.
pub(crate) fn single_customer_point(spec: &NetworkSpec, eta: &VisitRatios) -> Result<PerfPoint> {
    let idle1 = exact_single_customer_idle(spec)?;
    let cycle: f64 = spec
        .nodes
        .iter()
        .zip(eta.as_slice())
        .map(|(n, e)| e * n.service.mean)
        .sum();
    let lambda = 1.0 / cycle;
    let queues = spec
        .nodes
        .iter()
        .zip(eta.as_slice())
        .map(|(n, e)| e * lambda * n.service.mean)
        .collect();
    let mut point = point_from_queues(spec, eta, lambda, queues, Vec::new())?;
    point.idle1 = idle1;
    Ok(point)
}
