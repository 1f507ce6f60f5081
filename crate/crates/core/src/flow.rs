//! Deterministic flow approximation of the haulage cycle.
//!
//! All service times are replaced by their means. Node 1 (loading) and node 3
//! (unloading) are single servers, nodes 2 and 4 are pure delays. With
//! `mu_1^-1 > mu_3^-1` trucks never queue at node 3 once they have passed the
//! shovel, and the shovel either runs idle every cycle or never idles again.

use crate::error::{Error, Result};
use crate::netmodel::NetworkSpec;

const WAIT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowReport {
    pub idle1: f64,
    pub lambda1: f64,
    /// Asymptotic waiting time at node 1.
    pub vbar1: f64,
}

fn check_means(means: [f64; 4], population: u32) -> Result<()> {
    if population == 0 {
        return Err(Error::InvalidParameter("population must be at least 1".into()));
    }
    if means.iter().any(|m| !(m.is_finite() && *m > 0.0)) {
        return Err(Error::InvalidParameter(format!("means must be positive, got {means:?}")));
    }
    if means[0] <= means[2] {
        return Err(Error::AssumptionViolated(format!(
            "loading time {} must exceed unloading time {}",
            means[0], means[2]
        )));
    }
    Ok(())
}

/// `V = max(0, K m_1 - sum m_i)` and `pi = 1 - K m_1 / (sum m_i + V)`.
pub fn flow_closed_form(means: [f64; 4], population: u32) -> Result<FlowReport> {
    check_means(means, population)?;
    let k = f64::from(population);
    let cycle: f64 = means.iter().sum();
    let vbar1 = (k * means[0] - cycle).max(0.0);
    let idle1 = (1.0 - k * means[0] / (cycle + vbar1)).max(0.0);
    Ok(FlowReport {
        idle1,
        lambda1: (1.0 - idle1) / means[0],
        vbar1,
    })
}

/// Closed form applied to the mean service times of a haulage-cycle network.
pub fn flow(spec: &NetworkSpec) -> Result<FlowReport> {
    flow_closed_form(spec.mining_means()?, spec.population)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// Waits at node 1 drop to zero and stay there; the shovel idles every cycle.
    WaitsVanish,
    /// Waits settle at a positive constant; the shovel is never idle.
    PersistentWait,
}

/// Exact deterministic evolution from the state with all trucks queued at node 1.
/// Index `n` runs over node-1 services in order, starting at 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub arrivals: Vec<f64>,
    pub departures: Vec<f64>,
    pub waits: Vec<f64>,
    /// `arrivals[n + 1] - arrivals[n]`; one shorter than the other vectors.
    pub interarrivals: Vec<f64>,
    /// Wait at node 3 of the truck loaded in service `n`.
    pub waits3: Vec<f64>,
    pub population: u32,
    pub regime: Regime,
    /// Mean node-1 wait over the last `K` services.
    pub long_run_wait: f64,
    /// Idle fraction of the shovel over the last `K` services.
    pub long_run_idle: f64,
}

/// Runs at least `max(services, 3K, 50)` node-1 services.
pub fn flow_trajectory(means: [f64; 4], population: u32, services: usize) -> Result<(Trajectory, FlowReport)> {
    let report = flow_closed_form(means, population)?;
    let k = population as usize;
    let n = services.max(3 * k).max(50).max(k + 1);
    let [s1, d2, s3, d4] = means;

    let mut arrivals = vec![0.0_f64; n];
    let mut departures = vec![0.0; n];
    let mut waits = vec![0.0; n];
    let mut waits3 = vec![0.0; n];
    let mut free1 = 0.0_f64;
    let mut free3 = f64::NEG_INFINITY;
    for i in 0..n {
        let start = arrivals[i].max(free1);
        waits[i] = start - arrivals[i];
        departures[i] = start + s1;
        free1 = departures[i];

        let at3 = departures[i] + d2;
        let start3 = at3.max(free3);
        waits3[i] = start3 - at3;
        free3 = start3 + s3;
        if i + k < n {
            arrivals[i + k] = free3 + d4;
        }
    }
    let interarrivals: Vec<f64> = arrivals.windows(2).map(|w| w[1] - w[0]).collect();

    let tail = n - k;
    let long_run_wait = waits[tail..].iter().sum::<f64>() / k as f64;
    let regime = if waits[tail..].iter().all(|w| *w <= WAIT_TOL * (1.0 + s1)) {
        Regime::WaitsVanish
    } else {
        Regime::PersistentWait
    };
    // Window of exactly K services ending at the last departure.
    let span = departures[n - 1] - departures[tail - 1];
    let long_run_idle = (1.0 - k as f64 * s1 / span).max(0.0);

    Ok((
        Trajectory {
            arrivals,
            departures,
            waits,
            interarrivals,
            waits3,
            population,
            regime,
            long_run_wait,
            long_run_idle,
        },
        report,
    ))
}
