use crate::error::{Error, Result};
use crate::netmodel::{NetworkSpec, NodeKind, PerfPoint};

/// Largest state space [`gn_exact`] will enumerate.
pub const MAX_STATES: u128 = 1_000_000;

/// Occupancy vector of the closed network; entries sum to the population.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GnState {
    pub occupancy: Vec<u32>,
}

/// `|S(J, K)| = C(K + J - 1, J - 1)`, saturating at `u128::MAX`.
pub fn state_space_size(nodes: usize, population: u32) -> u128 {
    let k = u128::from(population);
    let mut acc: u128 = 1;
    for i in 1..nodes as u128 {
        // acc = C(k + i, i), built incrementally and exactly.
        acc = match acc.checked_mul(k + i) {
            Some(v) => v / i,
            None => return u128::MAX,
        };
    }
    acc
}

/// Calls `visit` for every occupancy vector in `S(J, K)` in lexicographic order.
fn for_each_state(nodes: usize, population: u32, visit: &mut impl FnMut(&[u32])) {
    fn fill(pos: usize, left: u32, state: &mut Vec<u32>, visit: &mut impl FnMut(&[u32])) {
        if pos + 1 == state.len() {
            state[pos] = left;
            visit(state);
            return;
        }
        for n in (0..=left).rev() {
            state[pos] = n;
            fill(pos + 1, left - n, state, visit);
        }
    }
    let mut state = vec![0; nodes];
    fill(0, population, &mut state, visit);
}

/// Running log-sum-exp accumulator for a weighted sum of several statistics.
struct ScaledSums {
    log_scale: f64,
    sums: Vec<f64>,
}

impl ScaledSums {
    fn new(len: usize) -> Self {
        Self {
            log_scale: f64::NEG_INFINITY,
            sums: vec![0.0; len],
        }
    }

    fn add(&mut self, log_weight: f64, values: impl Iterator<Item = f64>) {
        if log_weight > self.log_scale {
            let shrink = (self.log_scale - log_weight).exp();
            for s in &mut self.sums {
                *s *= shrink;
            }
            self.log_scale = log_weight;
        }
        let w = (log_weight - self.log_scale).exp();
        for (s, v) in self.sums.iter_mut().zip(values) {
            *s += w * v;
        }
    }
}

/// Exact stationary metrics of the product-form (exponential) network by
/// enumerating all states and normalizing the Gordon-Newell weights.
pub fn gn_exact(spec: &NetworkSpec) -> Result<PerfPoint> {
    let j = spec.num_nodes();
    let k = spec.population;
    let states = state_space_size(j, k);
    if states > MAX_STATES {
        return Err(Error::StateSpaceTooLarge {
            states,
            limit: MAX_STATES,
        });
    }
    let eta = spec.visit_ratios()?;
    let log_load: Vec<f64> = spec
        .nodes
        .iter()
        .zip(eta.as_slice())
        .map(|(n, e)| (e * n.service.mean).ln())
        .collect();
    let mut ln_fact = vec![0.0; k as usize + 1];
    for n in 1..=k as usize {
        ln_fact[n] = ln_fact[n - 1] + (n as f64).ln();
    }

    // Layout: [G, P(n_j >= 1) for each j, E n_j for each j].
    let mut acc = ScaledSums::new(1 + 2 * j);
    for_each_state(j, k, &mut |state: &[u32]| {
        let log_w: f64 = state
            .iter()
            .zip(&spec.nodes)
            .zip(&log_load)
            .map(|((&n, node), ll)| {
                let base = f64::from(n) * ll;
                match node.kind {
                    NodeKind::SingleServer => base,
                    NodeKind::InfiniteServer => base - ln_fact[n as usize],
                }
            })
            .sum();
        let busy = state.iter().map(|&n| if n > 0 { 1.0 } else { 0.0 });
        let counts = state.iter().map(|&n| f64::from(n));
        acc.add(log_w, std::iter::once(1.0).chain(busy).chain(counts));
    });
    let g = acc.sums[0];
    let busy: Vec<f64> = acc.sums[1..=j].iter().map(|s| s / g).collect();
    let queue: Vec<f64> = acc.sums[j + 1..].iter().map(|s| s / g).collect();

    let node1 = &spec.nodes[0];
    let lambda1 = match node1.kind {
        NodeKind::SingleServer => busy[0] / node1.service.mean,
        NodeKind::InfiniteServer => queue[0] / node1.service.mean,
    };
    let lambda_total = lambda1 / eta[0];
    let mut point = PerfPoint::from_total(k, 1.0 - busy[0], lambda_total, &eta);
    point.mean_sojourn = Some(queue.iter().zip(&point.lambda_node).map(|(x, l)| x / l).collect());
    point.mean_queue = Some(queue);
    Ok(point)
}
