//! The network Pollaczek–Khintchine variable `P^Q` and Monte-Carlo
//! estimators of the group ruin probability `Ψ^Q(u)` and of `P(P^Q < 1)`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{proportional_r, AgentSubset, RiskParams};
use crate::netgen::{group_indicators, sample_class_connections, sample_graph, sample_types, BlockModel};
use crate::rng::network_stream;
use crate::stats::{proportion, replicate_count, replicate_moments, EstimateWithCI};

/// Values of `P^Q` this close to 1 (relative) are treated as exactly 1, so
/// that balanced premium sets land on the certain-ruin side regardless of
/// summation order.
pub const UNIT_TIE_TOLERANCE: f64 = 1e-12;

/// Above this many incidence cells [`Sampler::Auto`] uses the collapsed path.
pub const AUTO_COLLAPSE_CELLS: usize = 100_000;

/// One draw of `P^Q` together with its estimator summand.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PkSample {
    pub value: f64,
    pub summand: f64,
    pub connected_count: u64,
}

/// How network replicates are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sampler {
    /// Full graph when `q·d` is at most [`AUTO_COLLAPSE_CELLS`], collapsed otherwise.
    #[default]
    Auto,
    /// Types for every agent and object, then every edge.
    Full,
    /// Group types, then binomial connection counts per premium class.
    Collapsed,
}

fn from_sums(lambda: f64, connected: f64, ratio_sum: f64) -> f64 {
    if connected == 0.0 {
        return 0.0;
    }
    let value = lambda * connected / ratio_sum;
    if (value - 1.0).abs() <= UNIT_TIE_TOLERANCE {
        1.0
    } else {
        value
    }
}

/// `P^Q = λ Σ_j I_j / Σ_j I_j c_j/μ_j`, with `0/0 := 0`.
pub fn pk_value(indicators: &[bool], params: &RiskParams) -> f64 {
    assert_eq!(indicators.len(), params.objects(), "indicator length must equal object count");
    let (connected, ratio_sum) = indicators
        .iter()
        .zip(params.premium().iter().zip(params.claim_mean()))
        .filter(|(&on, _)| on)
        .fold((0.0, 0.0), |(n, s), (_, (&c, &mu))| (n + 1.0, s + c / mu));
    from_sums(params.lambda(), connected, ratio_sum)
}

/// One bracketed estimator term: `P e^{−(1−P)U/r^Q}` when `P < 1`, else 1.
///
/// `P^Q = 1` counts as certain ruin. Both branches agree at `P = 1`.
pub fn psi_summand(pk: f64, r_q: f64, total_reserve: f64) -> f64 {
    if pk >= 1.0 {
        1.0
    } else {
        pk * (-(1.0 - pk) / r_q * total_reserve).exp()
    }
}

/// Objects grouped by their `c_j/μ_j` ratio; all that `P^Q` depends on.
#[derive(Debug, Clone, PartialEq)]
pub struct PremiumClasses {
    pub ratio: Vec<f64>,
    pub size: Vec<u64>,
}

impl PremiumClasses {
    pub fn of(params: &RiskParams) -> Self {
        let mut classes: BTreeMap<u64, (f64, u64)> = BTreeMap::new();
        for (&c, &mu) in params.premium().iter().zip(params.claim_mean()) {
            let r = c / mu;
            classes.entry(r.to_bits()).or_insert((r, 0)).1 += 1;
        }
        let (ratio, size) = classes.into_values().unzip();
        Self { ratio, size }
    }
}

/// Draws `P^Q` replicates for one `(params, model, Q, seed)` combination.
#[derive(Debug, Clone)]
pub struct PkSampler<'a> {
    params: &'a RiskParams,
    model: &'a BlockModel,
    group: &'a AgentSubset,
    seed: u64,
    collapsed: Option<PremiumClasses>,
}

impl<'a> PkSampler<'a> {
    pub fn new(
        params: &'a RiskParams,
        model: &'a BlockModel,
        group: &'a AgentSubset,
        seed: u64,
        sampler: Sampler,
    ) -> Result<Self> {
        if group.indices().last().is_some_and(|&i| i >= params.agents()) {
            return Err(Error::DimensionMismatch(format!(
                "agent group exceeds the {} configured agents",
                params.agents()
            )));
        }
        let collapse = match sampler {
            Sampler::Full => false,
            Sampler::Collapsed => true,
            Sampler::Auto => params.agents() * params.objects() > AUTO_COLLAPSE_CELLS,
        };
        let collapsed = collapse.then(|| PremiumClasses::of(params));
        Ok(Self { params, model, group, seed, collapsed })
    }

    /// `(P^Q_b, Σ_j I_j)` for replicate `b`.
    pub fn draw(&self, b: u64) -> (f64, u64) {
        let mut rng = network_stream(self.seed, b);
        match &self.collapsed {
            Some(classes) => {
                let counts = sample_class_connections(self.model, self.group.size(), &classes.size, &mut rng);
                let connected: u64 = counts.iter().sum();
                let ratio_sum: f64 = counts.iter().zip(&classes.ratio).map(|(&n, &r)| n as f64 * r).sum();
                (from_sums(self.params.lambda(), connected as f64, ratio_sum), connected)
            }
            None => {
                let types = sample_types(self.model, self.params.agents(), self.params.objects(), &mut rng);
                let graph = sample_graph(self.model, &types, &mut rng);
                let ind = group_indicators(&graph, self.group);
                let connected = ind.iter().filter(|&&x| x).count() as u64;
                (pk_value(&ind, self.params), connected)
            }
        }
    }

    pub fn sample(&self, b: u64) -> PkSample {
        let (value, connected_count) = self.draw(b);
        let summand = psi_summand(
            value,
            proportional_r(self.params, self.group),
            self.params.total_reserve(self.group),
        );
        PkSample { value, summand, connected_count }
    }
}

fn check_replicates(replicates: usize) -> Result<()> {
    if replicates < 2 {
        return Err(Error::TooFewReplicates { min: 2, got: replicates });
    }
    Ok(())
}

/// Monte-Carlo estimate of `Ψ^Q(u)` over `replicates` fresh networks.
pub fn estimate_psi(
    params: &RiskParams,
    model: &BlockModel,
    group: &AgentSubset,
    replicates: usize,
    seed: u64,
) -> Result<EstimateWithCI> {
    estimate_psi_with(params, model, group, replicates, seed, Sampler::Auto)
}

pub fn estimate_psi_with(
    params: &RiskParams,
    model: &BlockModel,
    group: &AgentSubset,
    replicates: usize,
    seed: u64,
    sampler: Sampler,
) -> Result<EstimateWithCI> {
    check_replicates(replicates)?;
    let sampler = PkSampler::new(params, model, group, seed, sampler)?;
    let total_reserve = params.total_reserve(group);
    if total_reserve <= 0.0 {
        return Err(Error::ZeroReserve);
    }
    let r_q = proportional_r(params, group);
    let moments = replicate_moments(replicates as u64, |b| psi_summand(sampler.draw(b).0, r_q, total_reserve));
    Ok(moments.estimate())
}

/// Monte-Carlo frequency of `{P^Q < 1}` with binomial standard error.
pub fn estimate_tail(
    params: &RiskParams,
    model: &BlockModel,
    group: &AgentSubset,
    replicates: usize,
    seed: u64,
) -> Result<EstimateWithCI> {
    estimate_tail_with(params, model, group, replicates, seed, Sampler::Auto)
}

pub fn estimate_tail_with(
    params: &RiskParams,
    model: &BlockModel,
    group: &AgentSubset,
    replicates: usize,
    seed: u64,
    sampler: Sampler,
) -> Result<EstimateWithCI> {
    check_replicates(replicates)?;
    let sampler = PkSampler::new(params, model, group, seed, sampler)?;
    let hits = replicate_count(replicates as u64, |b| sampler.draw(b).0 < 1.0);
    Ok(proportion(hits, replicates as u64))
}
