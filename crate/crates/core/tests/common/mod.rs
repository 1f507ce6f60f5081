//! Independent oracles shared by the integration tests. Nothing here calls
//! the closed forms under test.
#![allow(dead_code)]

use haulcycle::netmodel::{NetworkSpec, NodeKind, RoutingMatrix};
use haulcycle::pfa;
use rand::Rng;
use rand_distr::{Exp1, StandardNormal};

pub const MEANS: [f64; 4] = [1.5, 6.0, 1.0, 4.0];

/// Composite Simpson rule with `n` (even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

fn pdf(s: f64, mu: f64, sigma: f64) -> f64 {
    let z = (s - mu) / sigma;
    (-0.5 * z * z).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt())
}

pub fn normal_cdf_quad(x: f64) -> f64 {
    if x < -12.0 {
        return 0.0;
    }
    simpson(|s| pdf(s, 0.0, 1.0), -12.0, x, 40_000)
}

/// `E max(0, W)` for `W ~ N(y, sigma^2)`.
pub fn positive_part_quad(y: f64, sigma: f64) -> f64 {
    let hi = y + 12.0 * sigma;
    if hi <= 0.0 {
        return 0.0;
    }
    simpson(|s| s * pdf(s, y, sigma), 0.0, hi, 40_000)
}

/// `P(X < S)` with `X ~ exp(alpha)` and `S ~ N(mu, sigma^2)`.
pub fn breakdown_quad(mu: f64, sigma: f64, alpha: f64) -> f64 {
    simpson(|s| (-(-alpha * s).exp_m1()) * pdf(s, mu, sigma), 0.0, mu + 12.0 * sigma, 40_000)
}

/// `E(S 1{X < S})`.
pub fn cross_quad(mu: f64, sigma: f64, alpha: f64) -> f64 {
    simpson(|s| s * (-(-alpha * s).exp_m1()) * pdf(s, mu, sigma), 0.0, mu + 12.0 * sigma, 40_000)
}

/// Mean and variance of `S + 1{X < S} Y` from first principles:
/// `E S_m^2 = E S^2 + 2 E(S 1{X<S}) E Y + P(X<S) E Y^2`.
pub fn modified_quad(mu: f64, sigma: f64, alpha: f64, beta: f64) -> (f64, f64) {
    let p = breakdown_quad(mu, sigma, alpha);
    let c = cross_quad(mu, sigma, alpha);
    let ey = 1.0 / beta;
    let ey2 = 2.0 / (beta * beta);
    let mean = mu + p * ey;
    let second = mu * mu + sigma * sigma + 2.0 * c * ey + p * ey2;
    (mean, second - mean * mean)
}

/// Sample estimate and its standard error.
#[derive(Debug, Clone, Copy)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
}

impl Estimate {
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.value - target).abs() <= k * self.se
    }
}

pub struct McModified {
    pub p: Estimate,
    pub cross: Estimate,
    pub mean: Estimate,
    pub variance: Estimate,
}

/// Direct sampling of `S + 1{X < S} Y` with untruncated normal `S`. Power
/// sums are taken about `mu` to keep the variance estimate well conditioned.
pub fn mc_modified(mu: f64, sigma: f64, alpha: f64, beta: f64, n: usize, rng: &mut impl Rng) -> McModified {
    let (mut sp, mut sc, mut sc2) = (0.0, 0.0, 0.0);
    let mut d = [0.0f64; 4];
    for _ in 0..n {
        let z: f64 = rng.sample(StandardNormal);
        let s = mu + sigma * z;
        let x: f64 = rng.sample::<f64, _>(Exp1) / alpha;
        let y: f64 = rng.sample::<f64, _>(Exp1) / beta;
        let hit = x < s;
        let c = if hit { s } else { 0.0 };
        sp += f64::from(u8::from(hit));
        sc += c;
        sc2 += c * c;
        let v = if hit { s + y - mu } else { s - mu };
        let v2 = v * v;
        d[0] += v;
        d[1] += v2;
        d[2] += v2 * v;
        d[3] += v2 * v2;
    }
    let nf = n as f64;
    let [m1, m2, m3, m4] = d.map(|x| x / nf);
    let var = (m2 - m1 * m1) * nf / (nf - 1.0);
    let c4 = m4 - 4.0 * m1 * m3 + 6.0 * m1 * m1 * m2 - 3.0 * m1.powi(4);
    let p = sp / nf;
    let cm = sc / nf;
    McModified {
        p: Estimate {
            value: p,
            se: (p * (1.0 - p) / nf).sqrt(),
        },
        cross: Estimate {
            value: cm,
            se: ((sc2 / nf - cm * cm) / nf).sqrt(),
        },
        mean: Estimate {
            value: mu + m1,
            se: (var / nf).sqrt(),
        },
        variance: Estimate {
            value: var,
            se: ((c4 - var * var) / nf).sqrt(),
        },
    }
}

/// Stationary vector of `r` by power iteration on the lazy chain `(I + r) / 2`.
pub fn power_iteration(r: &RoutingMatrix) -> Vec<f64> {
    let n = r.dim();
    let mut v = vec![1.0 / n as f64; n];
    for _ in 0..200_000 {
        let mut next = vec![0.0; n];
        for i in 0..n {
            for j in 0..n {
                next[j] += 0.5 * v[i] * r.get(i, j);
            }
            next[i] += 0.5 * v[i];
        }
        let diff: f64 = next.iter().zip(&v).map(|(a, b)| (a - b).abs()).sum();
        v = next;
        if diff < 1e-15 {
            break;
        }
    }
    v
}

/// Random irreducible routing: a cycle plus random extra edges.
pub fn random_routing(n: usize, rng: &mut impl Rng) -> RoutingMatrix {
    let rows = (0..n)
        .map(|i| {
            let mut row: Vec<f64> = (0..n)
                .map(|_| if rng.gen_bool(0.5) { rng.gen_range(0.0..1.0) } else { 0.0 })
                .collect();
            row[(i + 1) % n] += rng.gen_range(0.1..1.0);
            let s: f64 = row.iter().sum();
            row.iter().map(|x| x / s).collect()
        })
        .collect();
    RoutingMatrix::new(rows).expect("valid routing")
}

/// Exponential haulage cycle with random means, loading slower than unloading.
pub fn random_exponential_cycle(k: u32, rng: &mut impl Rng) -> NetworkSpec {
    let m3 = rng.gen_range(0.2..2.0);
    let means = [m3 + rng.gen_range(0.1..2.0), rng.gen_range(0.5..10.0), m3, rng.gen_range(0.5..10.0)];
    NetworkSpec::mining_cycle(means, [1.0; 4], k).unwrap()
}

/// Population and Little's-law checks on an MVA step.
pub fn check_mva_step(spec: &NetworkSpec, step: &pfa::MvaStep) -> Result<(), String> {
    let eta = spec.visit_ratios().map_err(|e| e.to_string())?;
    let total: f64 = step.mean_queue.iter().sum();
    if (total - f64::from(step.population)).abs() > 1e-9 * f64::from(step.population) {
        return Err(format!("population {} but queues sum to {total}", step.population));
    }
    for j in 0..spec.num_nodes() {
        let little = eta[j] * step.lambda * step.mean_sojourn[j];
        if (little - step.mean_queue[j]).abs() > 1e-10 * (1.0 + step.mean_queue[j]) {
            return Err(format!("Little's law fails at node {j}: {little} vs {}", step.mean_queue[j]));
        }
        if spec.nodes[j].kind == NodeKind::InfiniteServer
            && (step.mean_sojourn[j] - spec.nodes[j].service.mean).abs() > 1e-12
        {
            return Err(format!("delay node {j} has sojourn {}", step.mean_sojourn[j]));
        }
    }
    Ok(())
}

/// Rows of a checked-in reference table, `(algorithm id, values for K = 1..)`.
pub fn fixture_table(name: &str) -> Vec<(String, Vec<f64>)> {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name);
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    text.lines()
        .skip(1)
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let mut parts = l.split(',');
            let id = parts.next().unwrap().to_string();
            (id, parts.map(|v| v.parse().unwrap()).collect())
        })
        .collect()
}

pub fn fixture_row(name: &str, id: &str) -> Vec<f64> {
    fixture_table(name)
        .into_iter()
        .find(|(r, _)| r == id)
        .unwrap_or_else(|| panic!("{name} has no row {id}"))
        .1
}
