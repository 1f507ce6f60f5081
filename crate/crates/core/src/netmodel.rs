//! Closed network description, traffic equations and the throughput/idle identity.
//!
//! Nodes are either single-server FCFS stations (the shovel and the crusher) or
//! infinite-server delay stations (the travel legs). Visit ratios are always
//! normalized as a probability vector; texts that normalize them relative to a
//! reference node produce the same idle probabilities.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const ROW_SUM_TOL: f64 = 1e-9;

/// Mean and variance of a nonnegative duration, in minutes and minutes².
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentPair {
    pub mean: f64,
    pub variance: f64,
}

impl MomentPair {
    pub fn new(mean: f64, variance: f64) -> Result<Self> {
        if !mean.is_finite() || !variance.is_finite() || variance < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "moment pair needs a finite mean and a finite nonnegative variance, got ({mean}, {variance})"
            )));
        }
        Ok(Self { mean, variance })
    }

    /// Builds the pair from a mean and a coefficient of variation, `variance = (mean * cv)^2`.
    pub fn from_cv(mean: f64, cv: f64) -> Result<Self> {
        if !cv.is_finite() || cv < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "coefficient of variation must be finite and nonnegative, got {cv}"
            )));
        }
        Self::new(mean, (mean * cv).powi(2))
    }

    pub fn deterministic(mean: f64) -> Result<Self> {
        Self::new(mean, 0.0)
    }

    pub fn std_dev(&self) -> f64 {
        self.variance.sqrt()
    }

    /// Squared coefficient of variation.
    pub fn scv(&self) -> f64 {
        self.variance / (self.mean * self.mean)
    }

    pub fn cv(&self) -> f64 {
        self.scv().sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NodeKind {
    /// One server, unlimited waiting room, first come first served.
    #[serde(rename = "single")]
    SingleServer,
    /// Every customer is served immediately and in parallel.
    #[serde(rename = "infinite")]
    InfiniteServer,
}

impl NodeKind {
    /// Number of parallel servers used in the summation and bottleneck bounds.
    pub(crate) fn servers(self, population: u32) -> f64 {
        match self {
            NodeKind::SingleServer => 1.0,
            NodeKind::InfiniteServer => f64::from(population),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeSpec {
    pub kind: NodeKind,
    pub service: MomentPair,
    pub label: String,
}

impl NodeSpec {
    pub fn new(kind: NodeKind, service: MomentPair, label: impl Into<String>) -> Result<Self> {
        if !(service.mean > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "mean service time must be positive, got {}",
                service.mean
            )));
        }
        Ok(Self {
            kind,
            service,
            label: label.into(),
        })
    }

    pub fn single(mean: f64, cv: f64, label: &str) -> Result<Self> {
        Self::new(NodeKind::SingleServer, MomentPair::from_cv(mean, cv)?, label)
    }

    pub fn infinite(mean: f64, cv: f64, label: &str) -> Result<Self> {
        Self::new(NodeKind::InfiniteServer, MomentPair::from_cv(mean, cv)?, label)
    }

    /// Service rate `1 / mean`.
    pub fn rate(&self) -> f64 {
        1.0 / self.service.mean
    }
}

/// Row-stochastic, irreducible routing matrix `r(i, j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RoutingMatrix {
    rows: Vec<Vec<f64>>,
}

impl RoutingMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                found: 0,
            });
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: row.len(),
                });
            }
            if row.iter().any(|&p| !p.is_finite() || p < 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "routing row {} has a negative or non-finite entry",
                    i + 1
                )));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::NonStochasticMatrix { row: i, sum });
            }
        }
        let m = Self { rows };
        if !m.is_irreducible() {
            return Err(Error::ReducibleMatrix);
        }
        Ok(m)
    }

    /// The cyclic shift `1 -> 2 -> ... -> n -> 1`.
    pub fn cyclic(n: usize) -> Self {
        let rows = (0..n)
            .map(|i| {
                let mut row = vec![0.0; n];
                row[(i + 1) % n] = 1.0;
                row
            })
            .collect();
        Self { rows }
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.rows[i][j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn is_cyclic_shift(&self) -> bool {
        let n = self.dim();
        (0..n).all(|i| (0..n).all(|j| self.rows[i][j] == if j == (i + 1) % n { 1.0 } else { 0.0 }))
    }

    /// Successor of `i` when the row is a point mass.
    pub fn deterministic_successor(&self, i: usize) -> Option<usize> {
        let row = &self.rows[i];
        let pos = row.iter().position(|&p| p == 1.0)?;
        row.iter()
            .enumerate()
            .all(|(j, &p)| j == pos || p == 0.0)
            .then_some(pos)
    }

    /// Boolean reachability closure (Warshall) over the support of `r`.
    fn is_irreducible(&self) -> bool {
        let n = self.dim();
        let mut reach: Vec<Vec<bool>> = self
            .rows
            .iter()
            .map(|row| row.iter().map(|&p| p > 0.0).collect())
            .collect();
        for k in 0..n {
            for i in 0..n {
                if reach[i][k] {
                    for j in 0..n {
                        if reach[k][j] {
                            reach[i][j] = true;
                        }
                    }
                }
            }
        }
        if n == 1 {
            return true;
        }
        reach.iter().all(|row| row.iter().all(|&b| b))
    }
}

/// Closed network: node list, routing and population `K`.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSpec {
    pub nodes: Vec<NodeSpec>,
    pub routing: RoutingMatrix,
    pub population: u32,
}

impl NetworkSpec {
    pub fn new(nodes: Vec<NodeSpec>, routing: RoutingMatrix, population: u32) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::InvalidParameter("network needs at least one node".into()));
        }
        if routing.dim() != nodes.len() {
            return Err(Error::DimensionMismatch {
                expected: nodes.len(),
                found: routing.dim(),
            });
        }
        if population == 0 {
            return Err(Error::InvalidParameter("population must be at least 1".into()));
        }
        Ok(Self {
            nodes,
            routing,
            population,
        })
    }

    pub fn cyclic(nodes: Vec<NodeSpec>, population: u32) -> Result<Self> {
        let n = nodes.len();
        Self::new(nodes, RoutingMatrix::cyclic(n), population)
    }

    /// The four-station haulage cycle: loading, travel loaded, unloading, travel empty.
    pub fn mining_cycle(means: [f64; 4], cvs: [f64; 4], population: u32) -> Result<Self> {
        Self::cyclic(
            vec![
                NodeSpec::single(means[0], cvs[0], "loading")?,
                NodeSpec::infinite(means[1], cvs[1], "travel loaded")?,
                NodeSpec::single(means[2], cvs[2], "unloading")?,
                NodeSpec::infinite(means[3], cvs[3], "travel empty")?,
            ],
            population,
        )
    }

    /// Reference haulage parameters: means 1.5, 6, 1, 4 minutes with coefficients
    /// of variation 0.25, 0.2, 0.1, 0.2.
    pub fn mining_preset(population: u32) -> Self {
        Self::mining_cycle([1.5, 6.0, 1.0, 4.0], [0.25, 0.2, 0.1, 0.2], population)
            .expect("preset parameters are valid")
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn with_population(&self, population: u32) -> Result<Self> {
        Self::new(self.nodes.clone(), self.routing.clone(), population)
    }

    /// Copy with the service moments of node `index` replaced.
    pub fn with_service(&self, index: usize, service: MomentPair) -> Result<Self> {
        let mut nodes = self.nodes.clone();
        let node = nodes.get_mut(index).ok_or(Error::DimensionMismatch {
            expected: self.nodes.len(),
            found: index + 1,
        })?;
        *node = NodeSpec::new(node.kind, service, node.label.clone())?;
        Self::new(nodes, self.routing.clone(), self.population)
    }

    pub fn means(&self) -> Vec<f64> {
        self.nodes.iter().map(|n| n.service.mean).collect()
    }

    /// True for the four-node single/infinite/single/infinite cycle.
    pub fn is_mining_cycle(&self) -> bool {
        use NodeKind::*;
        self.routing.is_cyclic_shift()
            && self.nodes.iter().map(|n| n.kind).eq([SingleServer, InfiniteServer, SingleServer, InfiniteServer])
    }

    pub(crate) fn mining_means(&self) -> Result<[f64; 4]> {
        if !self.is_mining_cycle() {
            return Err(Error::InvalidParameter(
                "operation requires the four-station haulage cycle".into(),
            ));
        }
        let m = self.means();
        Ok([m[0], m[1], m[2], m[3]])
    }

    pub fn visit_ratios(&self) -> Result<VisitRatios> {
        solve_traffic(&self.routing)
    }
}

/// Stochastic solution `eta = eta * r` of the traffic equations.
#[derive(Debug, Clone, PartialEq)]
pub struct VisitRatios(pub Vec<f64>);

impl VisitRatios {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// `max_j |eta_j - (eta r)_j|`.
    pub fn residual(&self, routing: &RoutingMatrix) -> f64 {
        let n = self.0.len();
        (0..n)
            .map(|j| {
                let flow: f64 = (0..n).map(|i| self.0[i] * routing.get(i, j)).sum();
                (self.0[j] - flow).abs()
            })
            .fold(0.0, f64::max)
    }
}

impl std::ops::Index<usize> for VisitRatios {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Solves `(r^T - I) eta = 0` with the last equation replaced by `sum eta = 1`.
pub fn solve_traffic(routing: &RoutingMatrix) -> Result<VisitRatios> {
    let n = routing.dim();
    for i in 0..n {
        let sum: f64 = routing.row(i).iter().sum();
        if (sum - 1.0).abs() > ROW_SUM_TOL {
            return Err(Error::NonStochasticMatrix { row: i, sum });
        }
    }
    if !routing.is_irreducible() {
        return Err(Error::ReducibleMatrix);
    }

    // Augmented system a | b.
    let mut a = vec![vec![0.0; n + 1]; n];
    for j in 0..n {
        for i in 0..n {
            a[j][i] = routing.get(i, j) - if i == j { 1.0 } else { 0.0 };
        }
    }
    for entry in a[n - 1].iter_mut().take(n) {
        *entry = 1.0;
    }
    a[n - 1][n] = 1.0;

    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
            .expect("non-empty range");
        if a[pivot][col].abs() < 1e-300 {
            return Err(Error::ReducibleMatrix);
        }
        a.swap(col, pivot);
        for row in 0..n {
            if row != col {
                let factor = a[row][col] / a[col][col];
                if factor != 0.0 {
                    for k in col..=n {
                        a[row][k] -= factor * a[col][k];
                    }
                }
            }
        }
    }
    let mut eta: Vec<f64> = (0..n).map(|i| a[i][n] / a[i][i]).collect();
    let total: f64 = eta.iter().sum();
    for e in &mut eta {
        *e /= total;
    }
    Ok(VisitRatios(eta))
}

/// Idle probability of a single server from its throughput: `1 - lambda * mean`.
pub fn throughput_to_idle(lambda1: f64, mean_service1: f64) -> Result<f64> {
    if !(lambda1 >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "throughput must be nonnegative, got {lambda1}"
        )));
    }
    let utilization = lambda1 * mean_service1;
    if utilization > 1.0 + 1e-9 {
        return Err(Error::UtilizationExceedsOne { utilization });
    }
    Ok((1.0 - utilization).clamp(0.0, 1.0))
}

/// Like [`throughput_to_idle`], but an approximation that overshoots unit
/// utilization is clamped to zero idle time and a warning is recorded.
pub(crate) fn approx_idle(lambda1: f64, mean_service1: f64, warnings: &mut Vec<String>) -> Result<f64> {
    match throughput_to_idle(lambda1, mean_service1) {
        Err(Error::UtilizationExceedsOne { utilization }) => {
            warnings.push(format!(
                "approximate utilization {utilization:.6} of node 1 exceeds one; idle probability clamped to 0"
            ));
            Ok(0.0)
        }
        other => other,
    }
}

/// Exact idle probability of node 1 with a single customer: the customer is at
/// node 1 for a fraction `eta_1 / mu_1` of its mean cycle time.
pub fn exact_single_customer_idle(spec: &NetworkSpec) -> Result<f64> {
    if spec.population != 1 {
        return Err(Error::PopulationNotOne {
            population: spec.population,
        });
    }
    let eta = spec.visit_ratios()?;
    let cycle: f64 = spec
        .nodes
        .iter()
        .zip(eta.as_slice())
        .map(|(n, e)| e * n.service.mean)
        .sum();
    Ok(1.0 - eta[0] * spec.nodes[0].service.mean / cycle)
}

/// Algorithm roster.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Algorithm {
    #[serde(rename = "stst")]
    Stst,
    #[serde(rename = "stst-m")]
    StstM,
    #[serde(rename = "mva")]
    Mva,
    #[serde(rename = "gmva")]
    Gmva,
    #[serde(rename = "sum")]
    Sum,
    #[serde(rename = "esum")]
    Esum,
    #[serde(rename = "bott")]
    Bott,
    #[serde(rename = "ebott")]
    Ebott,
    #[serde(rename = "flow")]
    Flow,
    #[serde(rename = "gn-exact")]
    GnExact,
    #[serde(rename = "sim")]
    Sim,
}

impl Algorithm {
    pub const ALL: [Algorithm; 11] = [
        Algorithm::Sim,
        Algorithm::Flow,
        Algorithm::Mva,
        Algorithm::Stst,
        Algorithm::Gmva,
        Algorithm::Esum,
        Algorithm::Ebott,
        Algorithm::StstM,
        Algorithm::Sum,
        Algorithm::Bott,
        Algorithm::GnExact,
    ];

    /// Identifier used in configuration files and on the command line.
    pub fn id(self) -> &'static str {
        match self {
            Algorithm::Stst => "stst",
            Algorithm::StstM => "stst-m",
            Algorithm::Mva => "mva",
            Algorithm::Gmva => "gmva",
            Algorithm::Sum => "sum",
            Algorithm::Esum => "esum",
            Algorithm::Bott => "bott",
            Algorithm::Ebott => "ebott",
            Algorithm::Flow => "flow",
            Algorithm::GnExact => "gn-exact",
            Algorithm::Sim => "sim",
        }
    }

    /// Row label used in rendered tables.
    pub fn display_name(self) -> &'static str {
        match self {
            Algorithm::Stst => "ST&ST",
            Algorithm::StstM => "ST&ST-m",
            Algorithm::Mva => "MVA",
            Algorithm::Gmva => "GMVA",
            Algorithm::Sum => "SUM",
            Algorithm::Esum => "ESUM",
            Algorithm::Bott => "BOTT",
            Algorithm::Ebott => "EBOTT",
            Algorithm::Flow => "FLOW",
            Algorithm::GnExact => "GN-exact",
            Algorithm::Sim => "simulation",
        }
    }

    pub fn from_id(id: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|a| a.id() == id)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.display_name())
    }
}

/// Output of one algorithm for one population size.
#[derive(Debug, Clone, PartialEq)]
pub struct PerfPoint {
    pub population: u32,
    /// Idle probability of node 1.
    pub idle1: f64,
    /// Total throughput `lambda(K)`, so that `lambda_j = eta_j * lambda(K)`.
    pub lambda_total: f64,
    pub lambda_node: Vec<f64>,
    pub mean_queue: Option<Vec<f64>>,
    pub mean_sojourn: Option<Vec<f64>>,
    pub warnings: Vec<String>,
}

impl PerfPoint {
    pub(crate) fn from_total(population: u32, idle1: f64, lambda_total: f64, eta: &VisitRatios) -> Self {
        Self {
            population,
            idle1,
            lambda_total,
            lambda_node: eta.as_slice().iter().map(|e| e * lambda_total).collect(),
            mean_queue: None,
            mean_sojourn: None,
            warnings: Vec::new(),
        }
    }
}

/// Per-algorithm results keyed by population size.
#[derive(Debug, Clone, PartialEq)]
pub struct PerfReport {
    pub algorithm: Algorithm,
    pub points: BTreeMap<u32, PerfPoint>,
}

impl PerfReport {
    pub fn new(algorithm: Algorithm) -> Self {
        Self {
            algorithm,
            points: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, point: PerfPoint) {
        self.points.insert(point.population, point);
    }

    pub fn get(&self, population: u32) -> Option<&PerfPoint> {
        self.points.get(&population)
    }

    pub fn idle(&self, population: u32) -> Option<f64> {
        self.get(population).map(|p| p.idle1)
    }
}
