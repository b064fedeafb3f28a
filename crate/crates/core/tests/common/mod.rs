#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ruinnet::model::{AgentSubset, RiskParams};
use ruinnet::netgen::BlockModel;

/// Exact `P(P^Q < 1)` and `Ψ^Q(u)` by enumerating every type assignment of the
/// group and the objects and every edge pattern between them. Edges of agents
/// outside the group never enter `P^Q`, so they sum out.
pub struct BruteForce {
    pub tail: f64,
    pub psi: f64,
}

fn digits(mut x: usize, base: usize, len: usize) -> Vec<usize> {
    (0..len)
        .map(|_| {
            let r = x % base;
            x /= base;
            r
        })
        .collect()
}

pub fn brute_force(params: &RiskParams, model: &BlockModel, group: &AgentSubset) -> BruteForce {
    let size = group.size();
    let d = params.objects();
    let (k, l) = (model.agent_types(), model.object_types());
    let r_q = params.claim_mean().iter().copied().fold(f64::INFINITY, f64::min) / (params.agents() - size + 1) as f64;
    let u: f64 = group.iter().map(|i| params.reserve()[i]).sum();
    let (mut tail, mut psi) = (0.0, 0.0);
    for a in 0..k.pow(size as u32) {
        let s = digits(a, k, size);
        let ws: f64 = s.iter().map(|&t| model.w()[t]).product();
        for o in 0..l.pow(d as u32) {
            let t = digits(o, l, d);
            let wt: f64 = t.iter().map(|&t| model.v()[t]).product();
            if ws * wt == 0.0 {
                continue;
            }
            // P(I_j = 1) by summing over the 2^|Q| edge patterns of column j
            let connect: Vec<f64> = (0..d)
                .map(|j| {
                    (1..1usize << size)
                        .map(|mask| {
                            (0..size)
                                .map(|i| {
                                    let p = model.p(s[i], t[j]);
                                    if mask >> i & 1 == 1 { p } else { 1.0 - p }
                                })
                                .product::<f64>()
                        })
                        .sum()
                })
                .collect();
            for ind in 0..1usize << d {
                let mut pr = ws * wt;
                let (mut num, mut den) = (0.0, 0.0);
                for j in 0..d {
                    if ind >> j & 1 == 1 {
                        pr *= connect[j];
                        num += params.lambda();
                        den += params.premium()[j] / params.claim_mean()[j];
                    } else {
                        pr *= 1.0 - connect[j];
                    }
                }
                let pk = if num == 0.0 { 0.0 } else { num / den };
                let pk = if (pk - 1.0).abs() <= 1e-12 { 1.0 } else { pk };
                if pk < 1.0 {
                    tail += pr;
                    psi += pr * pk * (-(1.0 - pk) * u / r_q).exp();
                } else {
                    psi += pr;
                }
            }
        }
    }
    BruteForce { tail, psi }
}

/// A random small instance: `q, d ≤ 4`, `K, L ≤ 2`, edge probabilities in (0, 1).
pub struct Instance {
    pub params: RiskParams,
    pub model: BlockModel,
    pub group: AgentSubset,
}

fn simplex(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..1.0)).collect();
    let total: f64 = raw.iter().sum();
    raw.iter().map(|x| x / total).collect()
}

pub fn random_instance(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let q = rng.random_range(1..=4);
    let d = rng.random_range(1..=4);
    let k = rng.random_range(1..=2);
    let l = rng.random_range(1..=2);
    let w = simplex(&mut rng, k);
    let v = simplex(&mut rng, l);
    let p = (0..k).map(|_| (0..l).map(|_| rng.random_range(0.02..0.98)).collect()).collect();
    let premium = (0..d).map(|_| rng.random_range(0.5..1.5)).collect();
    let mu = (0..d).map(|_| rng.random_range(0.5..2.0)).collect();
    let reserve = (0..q).map(|_| rng.random_range(0.2..3.0)).collect();
    let size = rng.random_range(1..=q);
    Instance {
        params: RiskParams::new(1.0, premium, mu, reserve).unwrap(),
        model: BlockModel::new(w, v, p).unwrap(),
        group: AgentSubset::prefix(size, q).unwrap(),
    }
}

/// Path to the command-line binary built for integration tests.
pub fn binary() -> &'static str {
    env!("CARGO_BIN_EXE_ruinnet")
}

pub fn config_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}
