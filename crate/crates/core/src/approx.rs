//! Mixture-of-normals approximation of `P(P^Q < 1)` and its Stein bound.
//!
//! Conditional on the type configuration `c` of the group and all objects,
//! the connection indicators `I_j` are independent Bernoulli(`p(c_j)`), so
//! `S = Σ_j (ξ_j − 1) I_j` is a sum of independent terms. Its normal
//! approximation `N(c)` has mean `μ(c) = Σ_j (ξ_j − 1) p(c_j)` and variance
//! `σ²(c) = Σ_j (ξ_j − 1)² p(c_j)(1 − p(c_j))`, and the Berry–Esseen bound
//! with constant [`STEIN_CONSTANT`] controls the error of each component.
//!
//! Configurations enter only through the group's agent-type counts and, for
//! each class of objects sharing a `ξ` value, the object-type counts. The
//! exact mode enumerates those counts with multinomial weights instead of the
//! `K^|Q| L^d` raw configurations.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{compute_loadings, LoadingVector, RiskParams};
use crate::netgen::{multinomial, BlockModel};
use crate::normal::std_normal_cdf;
use crate::rng::{stream, Domain};
use crate::stats::indexed_sums;

/// Berry–Esseen constant for sums of independent, non-identical summands.
pub const STEIN_CONSTANT: f64 = 9.4;

/// Upper limit on the number of collapsed configurations in exact mode.
pub const EXACT_CONFIG_LIMIT: f64 = 1e6;

/// Relative size below which a balance of loadings counts as zero.
pub const ZERO_BALANCE_TOLERANCE: f64 = 1e-12;

/// Smallest configuration sample accepted by sampled mode.
pub const MIN_SAMPLED_CONFIGS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MixtureStats {
    pub mean: f64,
    pub variance: f64,
    /// `Σ_j E|Z_j(c)|³`; zero when the configuration is degenerate.
    pub third_sum: f64,
    pub weight: f64,
    /// `σ²(c) = 0`: the component is a point mass at the mean.
    pub degenerate: bool,
}

/// `E|X − p|³` for `X ~ Bernoulli(p)`.
fn bernoulli_abs_third(p: f64) -> f64 {
    let q = 1.0 - p;
    p * q * q * q + q * p * p * p
}

#[derive(Debug, Default, Clone, Copy)]
struct Moments3 {
    mean: f64,
    variance: f64,
    abs_third: f64,
}

impl Moments3 {
    fn add(&mut self, xi_minus_one: f64, p: f64, count: f64) {
        self.mean += count * xi_minus_one * p;
        self.variance += count * xi_minus_one * xi_minus_one * p * (1.0 - p);
        self.abs_third += count * xi_minus_one.abs().powi(3) * bernoulli_abs_third(p);
    }

    fn finish(self, weight: f64) -> MixtureStats {
        let degenerate = self.variance <= 0.0;
        let third_sum = if degenerate { 0.0 } else { self.abs_third / self.variance.powf(1.5) };
        MixtureStats { mean: self.mean, variance: self.variance.max(0.0), third_sum, weight, degenerate }
    }
}

/// `p(c_j) = 1 − Π_{i∈Q} (1 − p_{s(i) t(j)})`.
pub fn p_of_config(model: &BlockModel, agent_types: &[usize], object_type: usize) -> f64 {
    1.0 - agent_types.iter().map(|&k| 1.0 - model.p(k, object_type)).product::<f64>()
}

/// Mixture component for one explicit configuration; `weight` is `P(C^Q = c)`.
pub fn mixture_stats(
    params: &RiskParams,
    loadings: &LoadingVector,
    model: &BlockModel,
    agent_types: &[usize],
    object_types: &[usize],
) -> Result<MixtureStats> {
    if object_types.len() != params.objects() || loadings.xi.len() != params.objects() {
        return Err(Error::DimensionMismatch(format!(
            "{} object types / {} loadings for {} objects",
            object_types.len(),
            loadings.xi.len(),
            params.objects()
        )));
    }
    if agent_types.iter().any(|&k| k >= model.agent_types()) || object_types.iter().any(|&l| l >= model.object_types()) {
        return Err(Error::invalid("type index out of range"));
    }
    let mut m = Moments3::default();
    for (&xi, &l) in loadings.xi.iter().zip(object_types) {
        m.add(xi - 1.0, p_of_config(model, agent_types, l), 1.0);
    }
    let log_weight: f64 = agent_types.iter().map(|&k| model.w()[k].ln()).sum::<f64>()
        + object_types.iter().map(|&l| model.v()[l].ln()).sum::<f64>();
    Ok(m.finish(log_weight.exp()))
}

/// `P(N > 0)` for `N ~ Normal(mean, variance)`; a point mass when `variance = 0`.
pub fn normal_positive_prob(mean: f64, variance: f64) -> f64 {
    if variance <= 0.0 {
        return if mean > 0.0 { 1.0 } else { 0.0 };
    }
    std_normal_cdf(mean / variance.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ApproxMode {
    /// Enumerate every collapsed configuration.
    Exact,
    /// Average over `configs` sampled configurations.
    Sampled { configs: usize },
    /// Single-type model: one configuration, no enumeration.
    ClosedForm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeKind {
    Exact,
    Sampled,
    ClosedForm,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ApproxResult {
    /// `P(N > 0)`.
    pub probability: f64,
    /// `9.4 Σ_c P(C^Q = c) Σ_j E|Z_j(c)|³` over non-degenerate configurations.
    pub stein_bound: f64,
    pub mode: ModeKind,
    pub config_count: u64,
    /// Probability mass (exact) or fraction (sampled) of degenerate configurations.
    pub degenerate_mass: f64,
    /// Monte-Carlo standard error of `probability` in sampled mode.
    pub sampling_stderr: Option<f64>,
}

/// Objects sharing a `ξ` value, ordered by `ξ`.
#[derive(Debug, Clone)]
struct XiClasses {
    xi_minus_one: Vec<f64>,
    size: Vec<u64>,
}

impl XiClasses {
    fn of(loadings: &LoadingVector) -> Self {
        let mut map: BTreeMap<u64, (f64, u64)> = BTreeMap::new();
        for &xi in &loadings.xi {
            map.entry(xi.to_bits()).or_insert((xi - 1.0, 0)).1 += 1;
        }
        let (xi_minus_one, size) = map.into_values().unzip();
        Self { xi_minus_one, size }
    }
}

fn ln_factorial(n: u64) -> f64 {
    libm::lgamma(n as f64 + 1.0)
}

/// Log multinomial probability of `counts` under `probs`.
fn ln_multinomial(counts: &[u64], probs: &[f64]) -> f64 {
    let n: u64 = counts.iter().sum();
    let mut acc = ln_factorial(n);
    for (&c, &p) in counts.iter().zip(probs) {
        if c > 0 {
            acc += c as f64 * p.ln() - ln_factorial(c);
        }
    }
    acc
}

/// Number of compositions of `n` into `parts` nonnegative parts.
fn composition_count(n: u64, parts: usize) -> f64 {
    // C(n + parts - 1, parts - 1)
    (1..parts).fold(1.0, |acc, i| acc * (n as f64 + i as f64) / i as f64)
}

/// All compositions of `n` into `parts` parts, last part varying slowest.
fn compositions(n: u64, parts: usize) -> Vec<Vec<u64>> {
    fn rec(n: u64, parts: usize, prefix: &mut Vec<u64>, out: &mut Vec<Vec<u64>>) {
        if parts == 1 {
            prefix.push(n);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for first in 0..=n {
            prefix.push(first);
            rec(n - first, parts - 1, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, parts, &mut Vec::with_capacity(parts), &mut out);
    out
}

/// Compositions that have positive probability, with their log weights.
fn weighted_compositions(n: u64, probs: &[f64]) -> Vec<(Vec<u64>, f64)> {
    compositions(n, probs.len())
        .into_iter()
        .map(|c| {
            let lw = ln_multinomial(&c, probs);
            (c, lw)
        })
        .filter(|(_, lw)| lw.is_finite())
        .collect()
}

fn group_edge_probs(model: &BlockModel, agent_counts: &[u64]) -> Vec<f64> {
    (0..model.object_types()).map(|l| model.group_edge_prob(agent_counts, l)).collect()
}

fn config_moments(classes: &XiClasses, edge_prob: &[f64], object_counts: &[&[u64]]) -> Moments3 {
    let mut m = Moments3::default();
    for ((&x, counts), _) in classes.xi_minus_one.iter().zip(object_counts).zip(&classes.size) {
        for (&n, &p) in counts.iter().zip(edge_prob) {
            if n > 0 {
                m.add(x, p, n as f64);
            }
        }
    }
    m
}

/// `P(N > 0)` and the Stein bound for a group of `group_size` agents.
pub fn mixture_probability(
    params: &RiskParams,
    model: &BlockModel,
    group_size: usize,
    mode: ApproxMode,
    seed: u64,
) -> Result<ApproxResult> {
    if group_size == 0 || group_size > params.agents() {
        return Err(Error::invalid(format!("group size {group_size} outside 1..={}", params.agents())));
    }
    let loadings = compute_loadings(params);
    match mode {
        ApproxMode::ClosedForm => closed_form(model, &loadings, group_size),
        ApproxMode::Exact => exact(model, &loadings, group_size),
        ApproxMode::Sampled { configs } => sampled(model, &loadings, group_size, configs, seed),
    }
}

fn finish_single(stats: MixtureStats, mode: ModeKind) -> ApproxResult {
    ApproxResult {
        probability: normal_positive_prob(stats.mean, stats.variance),
        stein_bound: STEIN_CONSTANT * stats.third_sum,
        mode,
        config_count: 1,
        degenerate_mass: if stats.degenerate { 1.0 } else { 0.0 },
        sampling_stderr: None,
    }
}

fn closed_form(model: &BlockModel, loadings: &LoadingVector, group_size: usize) -> Result<ApproxResult> {
    if !model.is_bernoulli() {
        return Err(Error::invalid("closed form requires a single agent type and a single object type"));
    }
    let p = 1.0 - (1.0 - model.p(0, 0)).powi(group_size as i32);
    let mut m = Moments3::default();
    for &xi in &loadings.xi {
        m.add(xi - 1.0, p, 1.0);
    }
    Ok(finish_single(m.finish(1.0), ModeKind::ClosedForm))
}

fn exact(model: &BlockModel, loadings: &LoadingVector, group_size: usize) -> Result<ApproxResult> {
    let classes = XiClasses::of(loadings);
    let l = model.object_types();
    let count = composition_count(group_size as u64, model.agent_types())
        * classes.size.iter().map(|&n| composition_count(n, l)).product::<f64>();
    if count > EXACT_CONFIG_LIMIT {
        return Err(Error::NotEnumerable(format!(
            "{count:.3e} collapsed configurations exceed the limit of {EXACT_CONFIG_LIMIT:e}"
        )));
    }
    let agents = weighted_compositions(group_size as u64, model.w());
    let per_class: Vec<Vec<(Vec<u64>, f64)>> =
        classes.size.iter().map(|&n| weighted_compositions(n, model.v())).collect();
    let edge_probs: Vec<Vec<f64>> = agents.iter().map(|(c, _)| group_edge_probs(model, c)).collect();

    // mixed-radix index: agent composition varies slowest
    let radices: Vec<u64> = per_class.iter().map(|v| v.len() as u64).collect();
    let per_agent: u64 = radices.iter().product();
    let total = agents.len() as u64 * per_agent;

    let [prob, bound, degenerate] = indexed_sums(total, |idx| {
        let a = (idx / per_agent) as usize;
        let mut rest = idx % per_agent;
        let mut log_w = agents[a].1;
        let mut picks: Vec<&[u64]> = Vec::with_capacity(per_class.len());
        for (class, &radix) in per_class.iter().zip(&radices).rev() {
            let (counts, lw) = &class[(rest % radix) as usize];
            rest /= radix;
            log_w += lw;
            picks.push(counts);
        }
        picks.reverse();
        let weight = log_w.exp();
        let s = config_moments(&classes, &edge_probs[a], &picks).finish(weight);
        [
            weight * normal_positive_prob(s.mean, s.variance),
            weight * s.third_sum,
            if s.degenerate { weight } else { 0.0 },
        ]
    });
    Ok(ApproxResult {
        probability: prob.clamp(0.0, 1.0),
        stein_bound: STEIN_CONSTANT * bound,
        mode: ModeKind::Exact,
        config_count: total,
        degenerate_mass: degenerate,
        sampling_stderr: None,
    })
}

fn sampled(
    model: &BlockModel,
    loadings: &LoadingVector,
    group_size: usize,
    configs: usize,
    seed: u64,
) -> Result<ApproxResult> {
    if configs < MIN_SAMPLED_CONFIGS {
        return Err(Error::TooFewReplicates { min: MIN_SAMPLED_CONFIGS, got: configs });
    }
    let classes = XiClasses::of(loadings);
    let [sum, sum_sq, bound, degenerate] = indexed_sums(configs as u64, |m| {
        let mut rng = stream(seed, Domain::Configuration, 0, m);
        let agent_counts = multinomial(group_size as u64, model.w(), &mut rng);
        let object_counts: Vec<Vec<u64>> = classes.size.iter().map(|&n| multinomial(n, model.v(), &mut rng)).collect();
        let refs: Vec<&[u64]> = object_counts.iter().map(Vec::as_slice).collect();
        let s = config_moments(&classes, &group_edge_probs(model, &agent_counts), &refs).finish(1.0);
        let phi = normal_positive_prob(s.mean, s.variance);
        [phi, phi * phi, s.third_sum, if s.degenerate { 1.0 } else { 0.0 }]
    });
    let n = configs as f64;
    let mean = sum / n;
    let var = ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0);
    Ok(ApproxResult {
        probability: mean.clamp(0.0, 1.0),
        stein_bound: STEIN_CONSTANT * bound / n,
        mode: ModeKind::Sampled,
        config_count: configs as u64,
        degenerate_mass: degenerate / n,
        sampling_stderr: Some((var / n).sqrt()),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Phase {
    TailToOne,
    TailToZero,
    Indeterminate,
}

/// Large-`d` limit of `P(P^Q < 1)` under a density exponent `β`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseVerdict {
    /// −1, 0 or +1.
    pub limit_mean_sign: i8,
    pub verdict: Phase,
    pub beta: f64,
    /// Single-type models: `E_d = (1/d) Σ_j (ξ_j − 1)`.
    pub balance: Option<f64>,
    /// Range of `d^{β−1} μ(c)` over configurations with positive probability.
    pub scaled_mean_range: (f64, f64),
    /// Objects with `ξ_j = 1`; these violate the lower loading bound the limit assumes.
    pub zero_loading_objects: usize,
}

pub fn phase_classify(params: &RiskParams, model: &BlockModel, group_size: usize, beta: f64) -> Result<PhaseVerdict> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::InvalidBeta(beta));
    }
    if group_size == 0 || group_size > params.agents() {
        return Err(Error::invalid(format!("group size {group_size} outside 1..={}", params.agents())));
    }
    let loadings = compute_loadings(params);
    let d = params.objects() as f64;
    let scale = d.powf(beta - 1.0);
    let zero_loading_objects = loadings.xi.iter().filter(|&&xi| xi == 1.0).count();
    let classes = XiClasses::of(&loadings);

    if composition_count(group_size as u64, model.agent_types()) > EXACT_CONFIG_LIMIT {
        return Err(Error::NotEnumerable("too many agent-type compositions".into()));
    }
    // μ(c) is linear in the object types, so its extremes over configurations
    // pick the best and worst admissible type for every object independently.
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (counts, _) in weighted_compositions(group_size as u64, model.w()) {
        let edge = group_edge_probs(model, &counts);
        let (mut min_mu, mut max_mu) = (0.0, 0.0);
        for (&x, &n) in classes.xi_minus_one.iter().zip(&classes.size) {
            let terms = edge.iter().zip(model.v()).filter(|(_, &v)| v > 0.0).map(|(&p, _)| x * p);
            let (tmin, tmax) = terms.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), t| (a.min(t), b.max(t)));
            min_mu += n as f64 * tmin;
            max_mu += n as f64 * tmax;
        }
        lo = lo.min(min_mu * scale);
        hi = hi.max(max_mu * scale);
    }

    // Sums of ±(ξ_j − 1) that cancel exactly rarely cancel in floating point.
    let abs_sum: f64 = loadings.xi.iter().map(|xi| (xi - 1.0).abs()).sum();
    let tol = ZERO_BALANCE_TOLERANCE * abs_sum / d;
    let balance = model.is_bernoulli().then(|| loadings.xi.iter().map(|xi| xi - 1.0).sum::<f64>() / d);
    let sign: i8 = match balance {
        Some(e) if e > tol => 1,
        Some(e) if e < -tol => -1,
        Some(_) => 0,
        None if lo > tol * d * scale => 1,
        None if hi < -tol * d * scale => -1,
        None => 0,
    };
    let verdict = match sign {
        1 => Phase::TailToOne,
        -1 => Phase::TailToZero,
        _ => Phase::Indeterminate,
    };
    Ok(PhaseVerdict { limit_mean_sign: sign, verdict, beta, balance, scaled_mean_range: (lo, hi), zero_loading_objects })
}
