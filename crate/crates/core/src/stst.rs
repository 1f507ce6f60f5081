//! Special-purpose approximation for the haulage cycle.
//!
//! The unloading station is treated as a delay node, so the three stations
//! after the shovel collapse into one backcycle of duration `T`. With `S` the
//! loading time, the slack
//!
//! ```text
//! W = T - (I_2 + S_2 + ... + I_K + S_K)
//! ```
//!
//! is taken as normal with variance `var T + (K - 1) var S`; its mean solves
//! `m = E T - (K - 1) (E S + i(m))` where `i(m) = E max(0, W)` is the mean idle
//! period of the shovel. The idle probability is then `i / (i + E S)`.

use crate::error::{Error, Result};
use crate::moments::{backcycle_moments, breakdown_probability, std_normal_cdf, std_normal_pdf, DisturbanceSpec};
use crate::netmodel::{MomentPair, NetworkSpec, NodeKind};

const RESIDUAL_TOL: f64 = 1e-10;
const MAX_BRACKET_DOUBLINGS: usize = 200;
const MAX_BISECTIONS: usize = 400;

/// `E max(0, W)` for `W ~ N(mean_w, sigma_w^2)`.
pub fn expected_idle(mean_w: f64, sigma_w: f64) -> f64 {
    if sigma_w == 0.0 {
        return mean_w.max(0.0);
    }
    let z = mean_w / sigma_w;
    (mean_w * std_normal_cdf(z) + sigma_w * std_normal_pdf(z)).max(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPointResult {
    /// Mean of `W` in minutes; negative when trucks usually queue at the shovel.
    pub mean_w: f64,
    pub sigma_w: f64,
    /// `g(mean_w)` at the returned root.
    pub residual: f64,
    pub iterations: usize,
}

/// `g(m) = E T - (K - 1)(E S + i(m)) - m`, strictly decreasing in `m`.
pub fn fixed_point_map(m: f64, es: f64, et: f64, sigma_w: f64, population: u32) -> f64 {
    et - f64::from(population - 1) * (es + expected_idle(m, sigma_w)) - m
}

/// Solves for the mean of `W` by bracketed bisection.
pub fn solve_fixed_point(es: f64, var_s: f64, et: f64, var_t: f64, population: u32) -> Result<FixedPointResult> {
    if population == 0 {
        return Err(Error::InvalidParameter("population must be at least 1".into()));
    }
    if !(es > 0.0) || !(var_s >= 0.0) || !(var_t >= 0.0) || !et.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "fixed point needs E S > 0 and nonnegative variances, got E S = {es}, var S = {var_s}, var T = {var_t}"
        )));
    }
    let k1 = f64::from(population - 1);
    let sigma_w = (var_t + k1 * var_s).sqrt();
    if sigma_w == 0.0 {
        return Err(Error::DegenerateVariance);
    }
    let g = |m: f64| fixed_point_map(m, es, et, sigma_w, population);

    if population == 1 {
        return Ok(FixedPointResult {
            mean_w: et,
            sigma_w,
            residual: 0.0,
            iterations: 0,
        });
    }

    let mut hi = et;
    let g_hi = g(hi);
    if g_hi == 0.0 {
        return Ok(FixedPointResult {
            mean_w: hi,
            sigma_w,
            residual: 0.0,
            iterations: 0,
        });
    }
    let mut step = 10.0 * (et.abs() + f64::from(population) * sigma_w);
    let mut lo = et - k1 * es - step;
    let mut g_lo = g(lo);
    let mut doublings = 0;
    while g_lo < 0.0 {
        doublings += 1;
        if doublings > MAX_BRACKET_DOUBLINGS || !lo.is_finite() {
            return Err(Error::NoBracket);
        }
        step *= 2.0;
        lo = et - k1 * es - step;
        g_lo = g(lo);
    }
    if g_hi > 0.0 {
        return Err(Error::NoBracket);
    }

    let mut iterations = 0;
    let mut best = if g_lo.abs() < g_hi.abs() { (lo, g_lo) } else { (hi, g_hi) };
    while best.1.abs() >= RESIDUAL_TOL {
        iterations += 1;
        let mid = 0.5 * (lo + hi);
        if iterations > MAX_BISECTIONS || mid <= lo || mid >= hi {
            return Err(Error::Nonconvergence {
                method: "ST&ST fixed point",
                iterations,
            });
        }
        let g_mid = g(mid);
        if g_mid.abs() < best.1.abs() {
            best = (mid, g_mid);
        }
        if g_mid > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(FixedPointResult {
        mean_w: best.0,
        sigma_w,
        residual: best.1,
        iterations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StStReport {
    pub idle1: f64,
    /// Loading throughput `(1 - idle1) / E S`.
    pub lambda1: f64,
    /// Mean idle period `i(mean_w)`.
    pub expected_idle: f64,
    pub fixed_point: FixedPointResult,
}

/// Loading moments and backcycle moments of a cyclic network whose first
/// node is the single-server loading station.
fn reduce_two_stage(spec: &NetworkSpec) -> Result<(MomentPair, MomentPair)> {
    if spec.num_nodes() < 2 || !spec.routing.is_cyclic_shift() {
        return Err(Error::InvalidParameter(
            "two-stage reduction needs a cyclic network with at least two nodes".into(),
        ));
    }
    if spec.nodes[0].kind != NodeKind::SingleServer {
        return Err(Error::InvalidParameter("node 1 must be a single server".into()));
    }
    let stages: Vec<MomentPair> = spec.nodes[1..].iter().map(|n| n.service).collect();
    Ok((spec.nodes[0].service, backcycle_moments(&stages)?))
}

/// Idle probability of the shovel from the two-stage reduction.
pub fn stst(spec: &NetworkSpec) -> Result<StStReport> {
    let (s, t) = reduce_two_stage(spec)?;
    stst_from_moments(s, t, spec.population)
}

pub fn stst_from_moments(s: MomentPair, t: MomentPair, population: u32) -> Result<StStReport> {
    let es = s.mean;
    let fixed_point = match solve_fixed_point(es, s.variance, t.mean, t.variance, population) {
        Ok(fp) => fp,
        Err(Error::DegenerateVariance) => deterministic_fixed_point(es, t.mean, population),
        Err(e) => return Err(e),
    };
    let idle_period = expected_idle(fixed_point.mean_w, fixed_point.sigma_w);
    let idle1 = idle_period / (idle_period + es);
    Ok(StStReport {
        idle1,
        lambda1: (1.0 - idle1) / es,
        expected_idle: idle_period,
        fixed_point,
    })
}

/// Root of `g` when `W` is degenerate and `i(m) = max(0, m)`.
fn deterministic_fixed_point(es: f64, et: f64, population: u32) -> FixedPointResult {
    let k = f64::from(population);
    let slack = et - (k - 1.0) * es;
    let mean_w = if slack >= 0.0 { slack / k } else { slack };
    FixedPointResult {
        mean_w,
        sigma_w: 0.0,
        residual: et - (k - 1.0) * (es + mean_w.max(0.0)) - mean_w,
        iterations: 0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StStMReport {
    /// Idle probability with breakdowns, `base.idle1 * psi`.
    pub idle1: f64,
    /// Up-time fraction over a breakdown regeneration cycle.
    pub psi: f64,
    pub breakdown_probability: f64,
    /// Undisturbed result the correction is applied to.
    pub base: StStReport,
    /// Set when the undisturbed throughput is zero; `psi` is then 1.
    pub zero_throughput: bool,
}

/// Up-time fraction `Psi = (1/(lambda1 p)) / (1/(lambda1 p) + 1/beta)`.
pub fn uptime_fraction(lambda1: f64, p: f64, beta: f64) -> f64 {
    if p == 0.0 {
        return 1.0;
    }
    let up = 1.0 / (lambda1 * p);
    if up.is_infinite() {
        return 1.0;
    }
    up / (up + 1.0 / beta)
}

/// Large-disturbance correction: the undisturbed idle probability scaled by
/// the fraction of time the shovel is up. `spec` carries the undisturbed
/// loading moments.
pub fn stst_m(spec: &NetworkSpec, dist: DisturbanceSpec) -> Result<StStMReport> {
    let (s, _) = reduce_two_stage(spec)?;
    let p = breakdown_probability(s, dist.alpha)?;
    let base = stst(spec)?;
    let zero_throughput = base.lambda1 == 0.0;
    let psi = if zero_throughput {
        1.0
    } else {
        uptime_fraction(base.lambda1, p, dist.beta)
    };
    Ok(StStMReport {
        idle1: base.idle1 * psi,
        psi,
        breakdown_probability: p,
        base,
        zero_throughput,
    })
}
