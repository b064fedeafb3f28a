//! Bipartite stochastic blockmodel: types, edges and connection probabilities.

use rand::distr::weighted::WeightedIndex;
use rand::distr::{Bernoulli, Distribution};
use rand::Rng;
use rand_distr::Binomial;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::AgentSubset;

const PROB_TOLERANCE: f64 = 1e-12;

/// Above this many terms [`connect_prob`] switches to the factorised sum.
pub const ENUMERATION_LIMIT: f64 = 1e7;

/// `K` agent types with probabilities `w`, `L` object types with
/// probabilities `v`, and edge probabilities `p[k][l]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockModel {
    w: Vec<f64>,
    v: Vec<f64>,
    p: Vec<Vec<f64>>,
}

fn check_distribution(name: &str, probs: &[f64]) -> Result<()> {
    if probs.is_empty() {
        return Err(Error::invalid(format!("{name} must have at least one type")));
    }
    if probs.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
        return Err(Error::invalid(format!("{name} has a negative or non-finite entry")));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > PROB_TOLERANCE {
        return Err(Error::invalid(format!("{name} sums to {total}, not 1")));
    }
    Ok(())
}

impl BlockModel {
    pub fn new(w: Vec<f64>, v: Vec<f64>, p: Vec<Vec<f64>>) -> Result<Self> {
        check_distribution("agent type distribution w", &w)?;
        check_distribution("object type distribution v", &v)?;
        if p.len() != w.len() || p.iter().any(|row| row.len() != v.len()) {
            return Err(Error::DimensionMismatch(format!(
                "edge probability matrix must be {}x{}",
                w.len(),
                v.len()
            )));
        }
        if p.iter().flatten().any(|x| !(0.0..=1.0).contains(x)) {
            return Err(Error::invalid("edge probabilities must lie in [0, 1]"));
        }
        Ok(Self { w, v, p })
    }

    /// One agent type and one object type: the bipartite Bernoulli graph.
    pub fn bernoulli(p: f64) -> Result<Self> {
        Self::new(vec![1.0], vec![1.0], vec![vec![p]])
    }

    pub fn agent_types(&self) -> usize {
        self.w.len()
    }
    pub fn object_types(&self) -> usize {
        self.v.len()
    }
    pub fn w(&self) -> &[f64] {
        &self.w
    }
    pub fn v(&self) -> &[f64] {
        &self.v
    }
    pub fn p(&self, k: usize, l: usize) -> f64 {
        self.p[k][l]
    }
    pub fn is_bernoulli(&self) -> bool {
        self.w.len() == 1 && self.v.len() == 1
    }

    /// `1 − Π_k (1 − p_kl)^{n_k}` for an agent group with type counts `counts`.
    pub fn group_edge_prob(&self, counts: &[u64], l: usize) -> f64 {
        let miss: f64 = counts
            .iter()
            .enumerate()
            .filter(|(_, &n)| n > 0)
            .map(|(k, &n)| (1.0 - self.p[k][l]).powi(n as i32))
            .product();
        1.0 - miss
    }
}

/// Realised agent types `s(i)` and object types `t(j)`, 0-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeAssignment {
    pub agent: Vec<usize>,
    pub object: Vec<usize>,
}

/// Dense `q × d` incidence bit matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BipartiteGraph {
    q: usize,
    d: usize,
    words: usize,
    bits: Vec<u64>,
}

impl BipartiteGraph {
    pub fn empty(q: usize, d: usize) -> Self {
        let words = d.div_ceil(64);
        Self { q, d, words, bits: vec![0; q * words] }
    }

    pub fn from_rows(rows: &[Vec<bool>]) -> Self {
        let d = rows.first().map_or(0, Vec::len);
        let mut g = Self::empty(rows.len(), d);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), d, "ragged incidence rows");
            for (j, &e) in row.iter().enumerate() {
                if e {
                    g.set_edge(i, j);
                }
            }
        }
        g
    }

    pub fn agents(&self) -> usize {
        self.q
    }
    pub fn objects(&self) -> usize {
        self.d
    }

    pub fn set_edge(&mut self, i: usize, j: usize) {
        self.bits[i * self.words + j / 64] |= 1 << (j % 64);
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.bits[i * self.words + j / 64] >> (j % 64) & 1 == 1
    }

    pub fn edge_count(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn degree(&self, i: usize) -> usize {
        self.bits[i * self.words..(i + 1) * self.words].iter().map(|w| w.count_ones() as usize).sum()
    }
}

pub fn sample_types<R: Rng + ?Sized>(model: &BlockModel, q: usize, d: usize, rng: &mut R) -> TypeAssignment {
    TypeAssignment { agent: draw_types(&model.w, q, rng), object: draw_types(&model.v, d, rng) }
}

fn draw_types<R: Rng + ?Sized>(probs: &[f64], n: usize, rng: &mut R) -> Vec<usize> {
    if probs.len() == 1 {
        return vec![0; n];
    }
    let dist = WeightedIndex::new(probs).expect("validated type distribution");
    (0..n).map(|_| dist.sample(rng)).collect()
}

/// Independent edges with probability `p[s(i)][t(j)]`.
pub fn sample_graph<R: Rng + ?Sized>(model: &BlockModel, types: &TypeAssignment, rng: &mut R) -> BipartiteGraph {
    let coins: Vec<Vec<Bernoulli>> = model
        .p
        .iter()
        .map(|row| row.iter().map(|&p| Bernoulli::new(p).expect("validated edge probability")).collect())
        .collect();
    let mut g = BipartiteGraph::empty(types.agent.len(), types.object.len());
    for (i, &k) in types.agent.iter().enumerate() {
        for (j, &l) in types.object.iter().enumerate() {
            if coins[k][l].sample(rng) {
                g.set_edge(i, j);
            }
        }
    }
    g
}

/// `I_j = max_{i∈Q} 1{i∼j}`.
pub fn group_indicators(graph: &BipartiteGraph, group: &AgentSubset) -> Vec<bool> {
    let mut acc = vec![0u64; graph.words];
    for i in group.iter() {
        for (a, w) in acc.iter_mut().zip(&graph.bits[i * graph.words..(i + 1) * graph.words]) {
            *a |= w;
        }
    }
    (0..graph.d).map(|j| acc[j / 64] >> (j % 64) & 1 == 1).collect()
}

/// `P(Q∼j)` for a group of `size` agents.
pub fn connect_prob(model: &BlockModel, size: usize) -> f64 {
    let terms = (model.agent_types() as f64).powi(size as i32) * model.object_types() as f64;
    if terms <= ENUMERATION_LIMIT {
        connect_prob_enumerated(model, size)
    } else {
        connect_prob_factorized(model, size)
    }
}

/// Sum over every agent-type tuple `(k_1, …, k_|Q|)` and object type `l`.
pub fn connect_prob_enumerated(model: &BlockModel, size: usize) -> f64 {
    let k_count = model.agent_types();
    let mut tuple = vec![0usize; size];
    let mut total = 0.0;
    loop {
        let weight: f64 = tuple.iter().map(|&k| model.w[k]).product();
        if weight > 0.0 {
            for (l, &vl) in model.v.iter().enumerate() {
                let miss: f64 = tuple.iter().map(|&k| 1.0 - model.p[k][l]).product();
                total += (1.0 - miss) * vl * weight;
            }
        }
        // odometer increment
        let mut pos = 0;
        loop {
            if pos == size {
                return total;
            }
            tuple[pos] += 1;
            if tuple[pos] < k_count {
                break;
            }
            tuple[pos] = 0;
            pos += 1;
        }
    }
}

/// `Σ_l v_l (1 − (Σ_k w_k (1 − p_kl))^{|Q|})`, valid because agent types are iid.
pub fn connect_prob_factorized(model: &BlockModel, size: usize) -> f64 {
    model
        .v
        .iter()
        .enumerate()
        .map(|(l, &vl)| {
            let miss: f64 = model.w.iter().enumerate().map(|(k, &wk)| wk * (1.0 - model.p[k][l])).sum();
            vl * (1.0 - miss.powi(size as i32))
        })
        .sum()
}

/// Multinomial draw by sequential conditional binomials.
pub fn multinomial<R: Rng + ?Sized>(n: u64, probs: &[f64], rng: &mut R) -> Vec<u64> {
    let mut out = vec![0u64; probs.len()];
    let mut remaining = n;
    let mut mass = 1.0;
    for (k, &pk) in probs.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        if k + 1 == probs.len() {
            out[k] = remaining;
            break;
        }
        let cond = if mass > 0.0 { (pk / mass).clamp(0.0, 1.0) } else { 0.0 };
        let x = binomial(remaining, cond, rng);
        out[k] = x;
        remaining -= x;
        mass -= pk;
    }
    out
}

pub fn binomial<R: Rng + ?Sized>(n: u64, p: f64, rng: &mut R) -> u64 {
    if n == 0 || p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return n;
    }
    Binomial::new(n, p).expect("probability in (0, 1)").sample(rng)
}

/// Collapsed network replicate.
///
/// Objects are grouped into classes of sizes `class_sizes`; the result is the
/// number of objects in each class connected to a freshly typed group of
/// `group_size` agents. Given the types, the indicators `I_j` are independent
/// Bernoulli(`p(c_j)`), so per-(class, object type) binomial counts have
/// exactly the law of the full graph path.
pub fn sample_class_connections<R: Rng + ?Sized>(
    model: &BlockModel,
    group_size: usize,
    class_sizes: &[u64],
    rng: &mut R,
) -> Vec<u64> {
    let agent_counts = if model.agent_types() == 1 {
        vec![group_size as u64]
    } else {
        multinomial(group_size as u64, &model.w, rng)
    };
    let edge_prob: Vec<f64> = (0..model.object_types()).map(|l| model.group_edge_prob(&agent_counts, l)).collect();
    class_sizes
        .iter()
        .map(|&n| {
            if model.object_types() == 1 {
                binomial(n, edge_prob[0], rng)
            } else {
                multinomial(n, &model.v, rng)
                    .into_iter()
                    .zip(&edge_prob)
                    .map(|(m, &p)| binomial(m, p, rng))
                    .sum()
            }
        })
        .collect()
}
