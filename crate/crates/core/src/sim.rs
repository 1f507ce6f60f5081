//! Event-driven simulation of a closed network of single-server FCFS and
//! infinite-server nodes, with optional breakdowns during loading at node 1.
//!
//! Service times are normal with the node's mean and variance, truncated at
//! zero. With disturbances, a node-1 service of length `S` is prolonged by one
//! repair `Y ~ exp(beta)` when the breakdown clock `X ~ exp(alpha)` fires
//! before `S`; the server stays occupied during the repair.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};
use std::sync::atomic::{AtomicUsize, Ordering as AtomicOrdering};
use std::sync::Mutex;

use rand::Rng;
use rand_distr::{Exp1, StandardNormal};
use rand_pcg::Pcg64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moments::DisturbanceSpec;
use crate::netmodel::{NetworkSpec, NodeKind};

pub const DEFAULT_HORIZON: f64 = 1_000_000.0;

const DISTURBANCE_STREAM: u128 = 1 << 32;
const ROUTING_STREAM: u128 = 1 << 33;

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub spec: NetworkSpec,
    pub disturbance: Option<DisturbanceSpec>,
    pub horizon: f64,
    pub warmup: f64,
    pub seed: u64,
}

impl SimConfig {
    pub fn new(spec: NetworkSpec, seed: u64) -> Self {
        SimConfig {
            spec,
            disturbance: None,
            horizon: DEFAULT_HORIZON,
            warmup: 0.0,
            seed,
        }
    }

    pub fn with_disturbance(mut self, dist: DisturbanceSpec) -> Self {
        self.disturbance = Some(dist);
        self
    }

    pub fn with_window(mut self, warmup: f64, horizon: f64) -> Self {
        self.warmup = warmup;
        self.horizon = horizon;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.warmup >= 0.0 && self.warmup.is_finite()) {
            return Err(Error::InvalidParameter(format!("warmup must be nonnegative, got {}", self.warmup)));
        }
        if !(self.horizon > self.warmup && self.horizon.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "horizon {} must exceed warmup {}",
                self.horizon, self.warmup
            )));
        }
        Ok(())
    }
}

/// Statistics over the observation window `[warmup, horizon]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SimEstimate {
    pub population: u32,
    /// Fraction of the window during which node 1 is empty.
    pub idle1: f64,
    pub lambda_node: Vec<f64>,
    /// Time-averaged number of customers per node.
    pub mean_queue: Vec<f64>,
    /// Mean sojourn of customers leaving each node in the window.
    pub mean_sojourn: Vec<f64>,
    /// Mean server occupation per job leaving each node in the window.
    pub mean_service: Vec<f64>,
    pub departures: Vec<u64>,
    pub arrivals: Vec<u64>,
    /// Normal service draws that came out negative and were set to zero.
    pub neg_sample_count: u64,
    pub draw_count: u64,
    pub event_count: u64,
}

#[derive(Debug, Clone, Copy)]
struct Event {
    time: f64,
    seq: u64,
    node: usize,
    customer: usize,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Event {}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

// Reversed so that the max-heap pops the earliest event first.
impl Ord for Event {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .total_cmp(&self.time)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

struct Sampler {
    service: Vec<Pcg64>,
    disturbance: Pcg64,
    routing: Pcg64,
    neg: u64,
    draws: u64,
}

fn mix(seed: u64) -> u128 {
    // splitmix64 finalizer, widened.
    let mut z = seed.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^= z >> 31;
    (u128::from(z) << 64) | u128::from(!z)
}

impl Sampler {
    fn new(seed: u64, nodes: usize) -> Self {
        let state = mix(seed);
        Sampler {
            service: (0..nodes).map(|j| Pcg64::new(state, j as u128)).collect(),
            disturbance: Pcg64::new(state, DISTURBANCE_STREAM),
            routing: Pcg64::new(state, ROUTING_STREAM),
            neg: 0,
            draws: 0,
        }
    }

    fn normal(&mut self, node: usize, mean: f64, sd: f64) -> f64 {
        self.draws += 1;
        if sd == 0.0 {
            return mean;
        }
        let z: f64 = self.service[node].sample(StandardNormal);
        let x = mean + sd * z;
        if x < 0.0 {
            self.neg += 1;
            0.0
        } else {
            x
        }
    }

    fn exp(&mut self, rate: f64) -> f64 {
        let e: f64 = self.disturbance.sample(Exp1);
        e / rate
    }
}

/// Runs one replication.
pub fn simulate(config: &SimConfig) -> Result<SimEstimate> {
    config.validate()?;
    let spec = &config.spec;
    let j = spec.num_nodes();
    let k = spec.population as usize;
    let (warmup, horizon) = (config.warmup, config.horizon);
    let sd: Vec<f64> = spec.nodes.iter().map(|n| n.service.std_dev()).collect();
    let successor: Vec<Option<usize>> = (0..j).map(|i| spec.routing.deterministic_successor(i)).collect();

    let mut rng = Sampler::new(config.seed, j);
    let mut heap = BinaryHeap::new();
    let mut seq = 0u64;
    let mut queues: Vec<VecDeque<usize>> = vec![VecDeque::new(); j];
    let mut count = vec![0usize; j];
    let mut arrived_at = vec![0.0f64; k];
    let mut service_of = vec![0.0f64; k];

    let mut area = vec![0.0f64; j];
    let mut empty1 = 0.0f64;
    let mut departures = vec![0u64; j];
    let mut arrivals = vec![0u64; j];
    let mut sojourn_sum = vec![0.0f64; j];
    let mut service_sum = vec![0.0f64; j];
    let mut event_count = 0u64;
    let mut clock = 0.0f64;

    let draw = |node: usize, rng: &mut Sampler| {
        let mut d = rng.normal(node, spec.nodes[node].service.mean, sd[node]);
        if node == 0 {
            if let Some(dist) = config.disturbance {
                let x = rng.exp(dist.alpha);
                if x < d {
                    d += rng.exp(dist.beta);
                }
            }
        }
        d
    };
    macro_rules! start_service {
        ($node:expr, $customer:expr, $now:expr) => {{
            let (node, customer) = ($node, $customer);
            let d = draw(node, &mut rng);
            service_of[customer] = d;
            seq += 1;
            heap.push(Event {
                time: $now + d,
                seq,
                node,
                customer,
            });
        }};
    }

    for c in 0..k {
        count[0] += 1;
        arrived_at[c] = 0.0;
        if spec.nodes[0].kind == NodeKind::InfiniteServer || c == 0 {
            start_service!(0, c, 0.0);
        } else {
            queues[0].push_back(c);
        }
    }

    while let Some(ev) = heap.pop() {
        let t = ev.time.min(horizon);
        let lo = clock.max(warmup);
        if t > lo {
            let dt = t - lo;
            for (a, n) in area.iter_mut().zip(&count) {
                *a += *n as f64 * dt;
            }
            if count[0] == 0 {
                empty1 += dt;
            }
        }
        clock = t;
        if ev.time > horizon {
            break;
        }
        event_count += 1;
        let in_window = ev.time >= warmup;
        let (node, c) = (ev.node, ev.customer);

        count[node] -= 1;
        if in_window {
            departures[node] += 1;
            sojourn_sum[node] += ev.time - arrived_at[c];
            service_sum[node] += service_of[c];
        }
        if spec.nodes[node].kind == NodeKind::SingleServer {
            if let Some(next) = queues[node].pop_front() {
                start_service!(node, next, ev.time);
            }
        }

        let to = match successor[node] {
            Some(s) => s,
            None => {
                let u: f64 = rng.routing.gen();
                let row = spec.routing.row(node);
                let mut acc = 0.0;
                let mut pick = row.len() - 1;
                for (i, p) in row.iter().enumerate() {
                    acc += p;
                    if u < acc {
                        pick = i;
                        break;
                    }
                }
                pick
            }
        };
        if in_window {
            arrivals[to] += 1;
        }
        arrived_at[c] = ev.time;
        count[to] += 1;
        let busy = spec.nodes[to].kind == NodeKind::SingleServer && count[to] > 1;
        if busy {
            queues[to].push_back(c);
        } else {
            start_service!(to, c, ev.time);
        }
    }
    if clock < horizon {
        let lo = clock.max(warmup);
        let dt = horizon - lo;
        for (a, n) in area.iter_mut().zip(&count) {
            *a += *n as f64 * dt;
        }
        if count[0] == 0 {
            empty1 += dt;
        }
    }

    let window = horizon - warmup;
    let per_job = |sum: &[f64]| -> Vec<f64> {
        sum.iter()
            .zip(&departures)
            .map(|(s, d)| if *d == 0 { f64::NAN } else { s / *d as f64 })
            .collect()
    };
    Ok(SimEstimate {
        population: spec.population,
        idle1: (empty1 / window).clamp(0.0, 1.0),
        lambda_node: departures.iter().map(|d| *d as f64 / window).collect(),
        mean_queue: area.iter().map(|a| a / window).collect(),
        mean_sojourn: per_job(&sojourn_sum),
        mean_service: per_job(&service_sum),
        departures,
        arrivals,
        neg_sample_count: rng.neg,
        draw_count: rng.draws,
        event_count,
    })
}

/// One run per population in `kmin..=kmax`, seeded with `seed ^ K`. Runs are
/// spread over the available cores when `parallel` is set.
pub fn sweep(base: &SimConfig, kmin: u32, kmax: u32, parallel: bool) -> Result<Vec<SimEstimate>> {
    if kmin == 0 || kmax < kmin {
        return Err(Error::InvalidParameter(format!("invalid population range {kmin}..={kmax}")));
    }
    let configs = (kmin..=kmax)
        .map(|k| {
            Ok(SimConfig {
                spec: base.spec.with_population(k)?,
                seed: base.seed ^ u64::from(k),
                ..base.clone()
            })
        })
        .collect::<Result<Vec<_>>>()?;
    if !parallel {
        return configs.iter().map(simulate).collect();
    }
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(configs.len());
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<Result<SimEstimate>>>> = Mutex::new(vec![None; configs.len()]);
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, AtomicOrdering::Relaxed);
                if i >= configs.len() {
                    break;
                }
                let r = simulate(&configs[i]);
                results.lock().unwrap()[i] = Some(r);
            });
        }
    });
    results
        .into_inner()
        .unwrap()
        .into_iter()
        .map(|r| r.expect("every run is visited"))
        .collect()
}
