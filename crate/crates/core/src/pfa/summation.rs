use crate::error::{Error, Result};
use crate::netmodel::{NetworkSpec, PerfPoint};

use super::{point_from_queues, queue_lengths, single_customer_point, QueueLengthModel, MAX_ITERATIONS};

/// Summation method: bisection on the total throughput until the approximate
/// queue lengths add up to the population.
pub fn sum_method(spec: &NetworkSpec, eps: f64) -> Result<PerfPoint> {
    bisect(spec, eps, QueueLengthModel::ProductForm, "SUM")
}

/// Extended summation method for non-exponential single servers. The
/// extended queue-length formula is undefined for one customer, where the
/// exact single-customer result is returned instead.
pub fn esum(spec: &NetworkSpec, eps: f64) -> Result<PerfPoint> {
    if spec.population == 1 {
        return single_customer_point(spec, &spec.visit_ratios()?);
    }
    bisect(spec, eps, QueueLengthModel::Extended, "ESUM")
}

fn bisect(spec: &NetworkSpec, eps: f64, model: QueueLengthModel, method: &'static str) -> Result<PerfPoint> {
    let eta = spec.visit_ratios()?;
    let k = f64::from(spec.population);
    let mut lo = 0.0;
    let mut hi = spec
        .nodes
        .iter()
        .zip(eta.as_slice())
        .map(|(n, e)| n.kind.servers(spec.population) / (n.service.mean * e))
        .fold(f64::INFINITY, f64::min);

    for _ in 0..MAX_ITERATIONS {
        let lambda = 0.5 * (lo + hi);
        let queues = queue_lengths(spec, &eta, lambda, model);
        let g: f64 = queues.iter().sum();
        if (g - k).abs() <= eps {
            return point_from_queues(spec, &eta, lambda, queues, Vec::new());
        }
        if g > k + eps {
            hi = lambda;
        } else {
            lo = lambda;
        }
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    Err(Error::Nonconvergence {
        method,
        iterations: MAX_ITERATIONS,
    })
}
