//! Moment calculus for normally distributed loading times that may be
//! interrupted by Poisson breakdowns followed by exponential repairs.
//!
//! A loading time `S ~ N(mu, sigma^2)` is extended by a repair `Y ~ Exp(beta)`
//! whenever the time to the next breakdown `X ~ Exp(alpha)` is shorter than `S`:
//!
//! ```text
//! S_m = S + 1{X < S} * Y
//! ```
//!
//! The closed forms use the untruncated normal model; [`negative_mass`] reports
//! how much probability the normal puts below zero so callers can see when
//! that approximation degrades.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netmodel::MomentPair;

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

pub fn std_normal_pdf(x: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Standard normal distribution function via the complementary error function.
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Mills ratio `(1 - Phi(x)) / phi(x)` for `x >= 5`, by Laplace's continued fraction.
fn mills_ratio(x: f64) -> f64 {
    let mut tail = 0.0;
    for k in (1..=80).rev() {
        tail = f64::from(k) / (x + tail);
    }
    1.0 / (x + tail)
}

/// `exp(a) * Phi(z)`, stable when `exp(a)` overflows and `Phi(z)` underflows.
fn exp_times_cdf(a: f64, z: f64) -> f64 {
    if z > -5.0 {
        a.exp() * std_normal_cdf(z)
    } else {
        FRAC_1_SQRT_2PI * (a - 0.5 * z * z).exp() * mills_ratio(-z)
    }
}

/// `E max(0, N(y, sigma^2)) = Phi(y/sigma) y + phi(y/sigma) sigma`.
pub fn positive_part_mean_normal(y: f64, sigma: f64) -> f64 {
    if sigma == 0.0 {
        return y.max(0.0);
    }
    let z = y / sigma;
    std_normal_cdf(z) * y + std_normal_pdf(z) * sigma
}

/// Probability `P(N(mu, sigma^2) < 0)`.
pub fn negative_mass(service: MomentPair) -> f64 {
    let sigma = service.std_dev();
    if sigma == 0.0 {
        return if service.mean < 0.0 { 1.0 } else { 0.0 };
    }
    std_normal_cdf(-service.mean / sigma)
}

/// Breakdown and repair intensities of the loading station.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisturbanceSpec {
    /// Breakdown rate while working, 1/min.
    pub alpha: f64,
    /// Repair completion rate, 1/min.
    pub beta: f64,
}

impl DisturbanceSpec {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) || !(beta > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "breakdown and repair rates must be positive, got alpha = {alpha}, beta = {beta}"
            )));
        }
        Ok(Self { alpha, beta })
    }

    /// From mean uptime `1/alpha` and mean repair time `1/beta`.
    pub fn from_means(mean_uptime: f64, mean_repair: f64) -> Result<Self> {
        Self::new(1.0 / mean_uptime, 1.0 / mean_repair)
    }

    pub fn mean_uptime(&self) -> f64 {
        1.0 / self.alpha
    }

    pub fn mean_repair(&self) -> f64 {
        1.0 / self.beta
    }

    /// Mean uptime 300 min, mean repair 30 min.
    pub fn large_disturbances() -> Self {
        Self::from_means(300.0, 30.0).expect("valid preset")
    }
}

fn check_service(service: MomentPair) -> Result<()> {
    if !(service.mean > 0.0) || !(service.variance >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "service moments need mean > 0 and variance >= 0, got ({}, {})",
            service.mean, service.variance
        )));
    }
    Ok(())
}

/// `P(X < S)` for `S ~ N(mu, sigma^2)` and `X ~ Exp(alpha)`.
///
/// Zero variance falls back to the deterministic limit `1 - exp(-alpha mu)`.
pub fn breakdown_probability(service: MomentPair, alpha: f64) -> Result<f64> {
    check_service(service)?;
    if !(alpha >= 0.0) {
        return Err(Error::InvalidParameter(format!("breakdown rate must be >= 0, got {alpha}")));
    }
    let mu = service.mean;
    let sigma = service.std_dev();
    if sigma == 0.0 {
        return Ok(-(-alpha * mu).exp_m1());
    }
    let z = mu / sigma;
    let shift = 0.5 * alpha * alpha * sigma * sigma - alpha * mu;
    let p = std_normal_cdf(z) - exp_times_cdf(shift, z - alpha * sigma);
    Ok(p.clamp(0.0, 1.0))
}

/// Partial expectation `E(S 1{X < S})` for `S ~ N(mu, sigma^2)` and `X ~ Exp(alpha)`.
///
/// With `y = mu - alpha sigma^2` this is
/// `Phi(mu/sigma) mu + phi(mu/sigma) sigma - exp(alpha^2 sigma^2/2 - alpha mu) (Phi(y/sigma) y + phi(y/sigma) sigma)`.
pub fn cross_moment(service: MomentPair, alpha: f64) -> Result<f64> {
    check_service(service)?;
    if !(alpha >= 0.0) {
        return Err(Error::InvalidParameter(format!("breakdown rate must be >= 0, got {alpha}")));
    }
    let mu = service.mean;
    let sigma = service.std_dev();
    if sigma == 0.0 {
        return Ok(-mu * (-alpha * mu).exp_m1());
    }
    let z = mu / sigma;
    let y = mu - alpha * sigma * sigma;
    let shift = 0.5 * alpha * alpha * sigma * sigma - alpha * mu;
    // exp(shift) * phi(y / sigma) == phi(mu / sigma) exactly.
    let damped = exp_times_cdf(shift, y / sigma) * y + std_normal_pdf(z) * sigma;
    Ok(positive_part_mean_normal(mu, sigma) - damped)
}

/// Which closed form to use for the variance of the interrupted service time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VarianceFormula {
    /// Expansion of `E(S_m^2) - (E S_m)^2`; the cross term is `2 E(S 1{X<S}) / beta`.
    #[default]
    SecondMomentExpansion,
    /// Cross term written as `2 E(S 1{X<S}) * 2 / beta^2`. Kept for comparison only;
    /// it overstates the reference variance by a factor of about four.
    CrossTermTwoOverBetaSquared,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModifiedServiceMoments {
    pub base: MomentPair,
    /// Probability that a breakdown interrupts one service.
    pub p: f64,
    /// `E(S 1{X < S})`.
    pub cross_moment: f64,
    pub modified: MomentPair,
    /// `P(S_m < 0)` under the normal approximation `N(modified.mean, modified.variance)`.
    pub modified_negative_mass: f64,
}

pub fn modified_service_moments(service: MomentPair, dist: DisturbanceSpec) -> Result<ModifiedServiceMoments> {
    modified_service_moments_with(service, dist, VarianceFormula::default())
}

pub fn modified_service_moments_with(
    service: MomentPair,
    dist: DisturbanceSpec,
    formula: VarianceFormula,
) -> Result<ModifiedServiceMoments> {
    let p = breakdown_probability(service, dist.alpha)?;
    let cross = cross_moment(service, dist.alpha)?;
    let mu = service.mean;
    let repair = 1.0 / dist.beta;
    let repair_sq = repair * repair;

    let mean = mu + p * repair;
    let cross_term = match formula {
        VarianceFormula::SecondMomentExpansion => 2.0 * cross * repair,
        VarianceFormula::CrossTermTwoOverBetaSquared => 2.0 * cross * 2.0 * repair_sq,
    };
    let variance = service.variance + cross_term + p * (2.0 * repair_sq - 2.0 * mu * repair - p * repair_sq);
    let modified = MomentPair::new(mean, variance.max(0.0))?;
    Ok(ModifiedServiceMoments {
        base: service,
        p,
        cross_moment: cross,
        modified,
        modified_negative_mass: negative_mass(modified),
    })
}

/// Moments of the backcycle time, the sum of independent stage durations.
pub fn backcycle_moments(stages: &[MomentPair]) -> Result<MomentPair> {
    if stages.is_empty() {
        return Err(Error::InvalidParameter("backcycle needs at least one stage".into()));
    }
    let mean = stages.iter().map(|m| m.mean).sum();
    let variance = stages.iter().map(|m| m.variance).sum();
    MomentPair::new(mean, variance)
}
